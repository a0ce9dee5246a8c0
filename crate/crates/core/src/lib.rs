pub mod dataset;
pub mod document;
pub mod error;
pub mod funsd;
pub mod geometry;
pub mod imaging;
pub mod layout;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod sidecar;
pub mod synth;
pub mod text;

#[cfg(test)]
pub(crate) mod testutil;

pub use document::{Document, Entity, Label, QaPair, ShiftKind, Task, TaskPayload, Word};
pub use error::{Error, Result};
pub use geometry::BoundingBox;
