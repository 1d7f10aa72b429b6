use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Number of named relations in an inventory.
pub const NAMED_RELATIONS: usize = 16;
/// Named relations plus the `none` sentinel.
pub const INVENTORY_SIZE: usize = NAMED_RELATIONS + 1;
/// Identifier of the sentinel choice.
pub const NONE: &str = "none";

/// Ordered relation identifiers. The 16 named relations occupy indices
/// `0..16`; `none` is always index 16.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInventory {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl RelationInventory {
    /// Builds an inventory from the 16 named relations; `none` is appended.
    pub fn new<I, S>(named: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = named.into_iter().map(Into::into).collect();
        if names.len() != NAMED_RELATIONS {
            return Err(Error::InvalidInventory(format!(
                "expected {NAMED_RELATIONS} named relations, found {}",
                names.len()
            )));
        }
        names.push(NONE.to_string());
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInventory(format!(
                    "invalid relation identifier `{name}`"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidInventory(format!(
                    "duplicate relation identifier `{name}`"
                )));
            }
        }
        Ok(Self { names, index })
    }

    /// Parses the one-identifier-per-line format; `none` must be the last
    /// identifier.
    pub fn parse(text: &str) -> Result<Self> {
        let ids: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        match ids.split_last() {
            Some((&last, named)) if last == NONE => Self::new(named.iter().copied()),
            Some(_) => Err(Error::InvalidInventory(format!(
                "last identifier must be `{NONE}`"
            ))),
            None => Err(Error::InvalidInventory("inventory is empty".into())),
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes in the file format accepted by [`RelationInventory::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    /// All identifiers including `none`.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// The 16 named relations, without `none`.
    pub fn relations(&self) -> &[String] {
        &self.names[..NAMED_RELATIONS]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn none_index(&self) -> usize {
        NAMED_RELATIONS
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    /// Index of a named relation; `none` and unknown identifiers are errors.
    pub fn relation_index(&self, name: &str) -> Result<usize> {
        match self.index_of(name) {
            Some(i) if i < NAMED_RELATIONS => Ok(i),
            _ => Err(Error::UnknownRelation(name.to_string())),
        }
    }
}

#[cfg(test)]
pub(crate) fn test_inventory() -> RelationInventory {
    RelationInventory::new((0..NAMED_RELATIONS).map(|i| format!("rel{i:02}"))).unwrap()
}
