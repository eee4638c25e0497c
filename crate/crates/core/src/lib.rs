//! Coded distributed matrix-vector multiplication that tolerates stragglers
//! and uses their partial work.
//!
//! The crate builds generator collections (Reed-Solomon style and
//! universally decodable matrices, over ℝ or GF(p^n)), embeds finite-field
//! collections into integer matrices through companion matrices, certifies
//! the full-rank property exactly, measures conditioning, and runs an
//! end-to-end encode / simulate / decode pipeline.

pub mod analysis;
pub mod cli;
pub mod coding;
pub mod companion;
pub mod exact;
pub mod gf;
pub mod matrix;
pub mod schemes;
pub mod sparse;
pub mod tables;

pub use analysis::{analyze, certify_full_rank, AnalysisOptions, AnalysisReport, EnumerationMode, PatternBound};
pub use gf::{GfContext, GfElement};
pub use schemes::{Construction, GeneratorCollection, SchemeConfig};
