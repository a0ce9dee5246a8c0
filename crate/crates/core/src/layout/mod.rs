//! Layout shifts: coarsening by box merging and relocation of strong entities.

pub mod merge;
pub mod moving;
pub mod strength;

pub use merge::{apply_layout_merge, merge_boxes, MergeParams, MergeResult, MergeSummary};
pub use moving::{apply_layout_move, select_move_target, MoveOutcome, MoveRecord};
pub use strength::{heuristic_strength, score_semantic_strength, StrengthScore};
