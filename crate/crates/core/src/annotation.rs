//! Raw crowd judgments: worker vectors and the annotation matrix.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inventory::{RelationInventory, INVENTORY_SIZE};

/// Binary choice vector over the 17 inventory components, stored as a bit
/// mask (bit `i` set when component `i` was chosen).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Choices(u32);

impl Choices {
    pub fn from_bits(bits: u32) -> Self {
        Choices(bits & ((1 << INVENTORY_SIZE) - 1))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, index: usize) -> bool {
        index < INVENTORY_SIZE && self.0 & (1 << index) != 0
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..INVENTORY_SIZE).filter(move |&i| self.contains(i))
    }

    /// Dense 0/1 representation, one entry per inventory component.
    pub fn to_vec(self) -> Vec<u8> {
        (0..INVENTORY_SIZE).map(|i| self.contains(i) as u8).collect()
    }

    /// Cosine similarity of two binary vectors. Exactly 1.0 for identical
    /// non-empty vectors.
    pub fn cosine(self, other: Choices) -> f64 {
        let dot = (self.0 & other.0).count_ones() as f64;
        let norms = self.count() as f64 * other.count() as f64;
        if norms == 0.0 {
            0.0
        } else {
            dot / norms.sqrt()
        }
    }
}

/// One worker's judgment of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerVector {
    pub worker_id: String,
    pub sentence_id: String,
    pub choices: Choices,
}

/// Encodes a worker's relation picks as a binary worker vector.
pub fn worker_vector<S: AsRef<str>>(
    worker_id: &str,
    sentence_id: &str,
    raw_choices: &[S],
    inventory: &RelationInventory,
) -> Result<WorkerVector> {
    if raw_choices.is_empty() {
        return Err(Error::EmptyChoices);
    }
    let mut bits = 0u32;
    for raw in raw_choices {
        let name = raw.as_ref();
        let index = inventory
            .index_of(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
        bits |= 1 << index;
    }
    let choices = Choices(bits);
    if choices.contains(inventory.none_index()) && choices.count() > 1 {
        return Err(Error::ExclusiveNone);
    }
    Ok(WorkerVector {
        worker_id: worker_id.to_string(),
        sentence_id: sentence_id.to_string(),
        choices,
    })
}

/// A matrix row with interned worker and sentence indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub worker: usize,
    pub sentence: usize,
    pub choices: Choices,
}

/// Validated crowd judgments. Rows are kept sorted by (sentence id, worker
/// id) so every derived computation is independent of input order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMatrix {
    inventory: RelationInventory,
    sentence_ids: Vec<String>,
    worker_ids: Vec<String>,
    rows: Vec<Row>,
    sentence_rows: Vec<Range<usize>>,
    worker_rows: Vec<Vec<usize>>,
}

impl AnnotationMatrix {
    pub fn from_vectors(
        inventory: RelationInventory,
        vectors: impl IntoIterator<Item = WorkerVector>,
    ) -> Result<Self> {
        let none = inventory.none_index();
        // sentence -> worker -> choices
        let mut grouped: BTreeMap<String, BTreeMap<String, Choices>> = BTreeMap::new();
        for v in vectors {
            if v.choices.count() == 0 {
                return Err(Error::EmptyChoices);
            }
            if v.choices.contains(none) && v.choices.count() > 1 {
                return Err(Error::ExclusiveNone);
            }
            let slot = grouped.entry(v.sentence_id.clone()).or_default();
            if slot.insert(v.worker_id.clone(), v.choices).is_some() {
                return Err(Error::DuplicatePair {
                    worker: v.worker_id,
                    sentence: v.sentence_id,
                });
            }
        }

        let worker_ids: Vec<String> = grouped
            .values()
            .flat_map(|w| w.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let sentence_ids: Vec<String> = grouped.keys().cloned().collect();

        let mut rows = Vec::new();
        let mut sentence_rows = Vec::with_capacity(sentence_ids.len());
        let mut worker_rows = vec![Vec::new(); worker_ids.len()];
        for (s, workers) in grouped.values().enumerate() {
            let start = rows.len();
            for (worker_id, &choices) in workers {
                let worker = worker_ids
                    .binary_search(worker_id)
                    .expect("worker id interned above");
                worker_rows[worker].push(rows.len());
                rows.push(Row {
                    worker,
                    sentence: s,
                    choices,
                });
            }
            sentence_rows.push(start..rows.len());
        }

        Ok(Self {
            inventory,
            sentence_ids,
            worker_ids,
            rows,
            sentence_rows,
            worker_rows,
        })
    }

    pub fn inventory(&self) -> &RelationInventory {
        &self.inventory
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sentence ids in sorted order; position is the sentence index.
    pub fn sentence_ids(&self) -> &[String] {
        &self.sentence_ids
    }

    /// Worker ids in sorted order; position is the worker index.
    pub fn worker_ids(&self) -> &[String] {
        &self.worker_ids
    }

    pub fn sentence_index(&self, sentence_id: &str) -> Option<usize> {
        self.sentence_ids
            .binary_search_by(|s| s.as_str().cmp(sentence_id))
            .ok()
    }

    pub fn worker_index(&self, worker_id: &str) -> Option<usize> {
        self.worker_ids
            .binary_search_by(|w| w.as_str().cmp(worker_id))
            .ok()
    }

    pub fn sentence_rows(&self, sentence: usize) -> &[Row] {
        &self.rows[self.sentence_rows[sentence].clone()]
    }

    /// Row positions (into [`AnnotationMatrix::rows`]) for one worker.
    pub fn worker_rows(&self, worker: usize) -> &[usize] {
        &self.worker_rows[worker]
    }

    pub fn worker_vectors(&self) -> impl Iterator<Item = WorkerVector> + '_ {
        self.rows.iter().map(|r| WorkerVector {
            worker_id: self.worker_ids[r.worker].clone(),
            sentence_id: self.sentence_ids[r.sentence].clone(),
            choices: r.choices,
        })
    }

    /// Writes the matrix in the annotation CSV format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        out.write_record(HEADER).map_err(csv_error)?;
        for row in &self.rows {
            let choices: Vec<&str> = row
                .choices
                .indices()
                .map(|i| self.inventory.name(i))
                .collect();
            out.write_record([
                self.worker_ids[row.worker].as_str(),
                self.sentence_ids[row.sentence].as_str(),
                &choices.join("|"),
            ])
            .map_err(csv_error)?;
        }
        out.flush()?;
        Ok(())
    }
}

const HEADER: [&str; 3] = ["worker_id", "sentence_id", "choices"];

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    let err = match e.into_kind() {
        csv::ErrorKind::Io(io) => return Error::Stream(io),
        kind => Error::Malformed(format!("{kind:?}")),
    };
    match line {
        Some(line) => err.at_line(line),
        None => err,
    }
}

/// Reads annotation CSV (`worker_id,sentence_id,choices`, choices separated
/// by `|`).
pub fn read_annotations<R: Read>(reader: R, inventory: &RelationInventory) -> Result<AnnotationMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = csv.headers().map_err(csv_error)?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Malformed(format!(
            "expected header `{}`",
            HEADER.join(",")
        ))
        .at_line(1));
    }

    let mut seen = HashSet::new();
    let mut vectors = Vec::new();
    for record in csv.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let (worker, sentence, choices) = (&record[0], &record[1], &record[2]);
        if worker.is_empty() || sentence.is_empty() {
            return Err(Error::Malformed("empty worker or sentence id".into()).at_line(line));
        }
        let raw: Vec<&str> = choices
            .split('|')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .collect();
        let v = worker_vector(worker, sentence, &raw, inventory).map_err(|e| e.at_line(line))?;
        if !seen.insert((v.worker_id.clone(), v.sentence_id.clone())) {
            return Err(Error::DuplicatePair {
                worker: v.worker_id,
                sentence: v.sentence_id,
            }
            .at_line(line));
        }
        vectors.push(v);
    }
    AnnotationMatrix::from_vectors(inventory.clone(), vectors)
}

/// Parses an annotation CSV file into a validated matrix.
pub fn parse_annotations(path: impl AsRef<Path>, inventory: &RelationInventory) -> Result<AnnotationMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(std::io::BufReader::new(file), inventory)
}
