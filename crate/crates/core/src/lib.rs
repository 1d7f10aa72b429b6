//! Crowd annotation aggregation and embedding-space label propagation for
//! distant-supervised relation classification corpora.
//!
//! The pipeline has three stages:
//!
//! 1. [`metrics::compute_quality_scores`] turns raw crowd judgments
//!    ([`annotation::AnnotationMatrix`]) into worker, sentence and relation
//!    quality plus a continuous sentence-relation score (srs).
//! 2. [`propagation::propagate_corpus`] represents every sentence by the mean
//!    word vector of the tokens between its two terms, finds the most similar
//!    crowd sentence and blends that sentence's srs into the DS labels.
//! 3. [`evaluation`] scores predictions against crowd gold.
//!
//! Data-parallel loops run on rayon with the default `parallel` feature and
//! sequentially without it; results are bit-identical either way.

pub mod annotation;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod inventory;
pub mod metrics;
pub mod par;
pub mod propagation;
pub mod search;

pub use annotation::{parse_annotations, worker_vector, AnnotationMatrix, Choices, WorkerVector};
pub use corpus::{CorpusSentence, TermSpan};
pub use embedding::{cosine_similarity, load_embeddings, sentence_vector, EmbeddingTable, SentenceVector, SpanPolicy, VectorFormat};
pub use error::{Error, Result};
pub use inventory::RelationInventory;
pub use metrics::{compute_quality_scores, sentence_relation_score, FixedPointConfig, QualityScores, SrsRelationWeighting};
pub use propagation::{propagate_corpus, propagate_sentence, LabeledSet, PropagationConfig, PropagationReport, PropagationResult};
pub use search::{nearest_labeled, LabeledIndex, Neighbor};
