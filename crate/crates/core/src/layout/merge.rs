//! Coarsening of word-level layout by merging nearby boxes.
//!
//! Every box is dilated by `lambda1` horizontally and `lambda2` vertically.
//! Two groups merge when their dilated extents intersect, where a group's
//! extent is the union of its ORIGINAL member boxes. Merging repeats until no
//! two dilated extents intersect, so the result does not depend on input order
//! and re-merging a result returns it unchanged.

use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeParams {
    /// Horizontal dilation in pixels.
    pub lambda1: i32,
    /// Vertical dilation in pixels.
    pub lambda2: i32,
}

impl MergeParams {
    pub fn new(lambda1: i32, lambda2: i32) -> Result<Self> {
        let p = MergeParams { lambda1, lambda2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0 || self.lambda2 < 0 {
            return Err(Error::Parameter(format!(
                "dilation distances must be non-negative, got ({}, {})",
                self.lambda1, self.lambda2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeResult {
    /// Ordered by the smallest original index in each group.
    pub merged_boxes: Vec<BoundingBox>,
    /// `assignment[i]` is the merged-box index of input box `i`.
    pub assignment: Vec<usize>,
}

impl MergeResult {
    /// Member indices of every merged box.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.merged_boxes.len()];
        for (i, &g) in self.assignment.iter().enumerate() {
            groups[g].push(i);
        }
        groups
    }
}

struct Group {
    extent: BoundingBox,
    members: Vec<usize>,
}

pub fn merge_boxes(boxes: &[BoundingBox], params: MergeParams) -> Result<MergeResult> {
    params.validate()?;
    let (dx, dy) = (params.lambda1, params.lambda2);
    let mut groups: Vec<Group> = Vec::new();

    for (i, b) in boxes.iter().enumerate() {
        let mut current = Group {
            extent: *b,
            members: vec![i],
        };
        // Existing groups are pairwise separated; absorb until `current` is too.
        loop {
            let probe = current.extent.dilate(dx, dy);
            let (hit, rest): (Vec<Group>, Vec<Group>) = groups
                .into_iter()
                .partition(|g| probe.intersects(&g.extent.dilate(dx, dy)));
            groups = rest;
            if hit.is_empty() {
                break;
            }
            for g in hit {
                current.extent = current.extent.union(&g.extent);
                current.members.extend(g.members);
            }
        }
        groups.push(current);
    }

    for g in &mut groups {
        g.members.sort_unstable();
    }
    groups.sort_by_key(|g| g.members[0]);

    let mut assignment = vec![0; boxes.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &m in &g.members {
            assignment[m] = gi;
        }
    }
    Ok(MergeResult {
        merged_boxes: groups.into_iter().map(|g| g.extent).collect(),
        assignment,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeSummary {
    pub words: usize,
    pub groups: usize,
}

/// Replaces every word box by the merged box of its group. Text, labels and
/// the page image are left alone.
pub fn apply_layout_merge(doc: &Document, params: MergeParams) -> Result<(Document, MergeSummary)> {
    let boxes = doc.word_boxes();
    let merged = merge_boxes(&boxes, params)?;
    let new_boxes: Vec<BoundingBox> = merged
        .assignment
        .iter()
        .map(|&g| merged.merged_boxes[g])
        .collect();
    let summary = MergeSummary {
        words: boxes.len(),
        groups: merged.merged_boxes.len(),
    };
    Ok((doc.with_word_boxes(&new_boxes), summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x1: i32, y1: i32, x2: i32, y2: i32) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn disjoint_boxes_without_dilation_stay_apart() {
        let boxes = [bb(0, 0, 10, 10), bb(30, 30, 40, 40)];
        let r = merge_boxes(&boxes, MergeParams::new(0, 0).unwrap()).unwrap();
        assert_eq!(r.merged_boxes, boxes.to_vec());
        assert_eq!(r.assignment, vec![0, 1]);
    }

    #[test]
    fn horizontal_neighbours_merge() {
        let boxes = [bb(0, 0, 10, 10), bb(12, 0, 22, 10)];
        let r = merge_boxes(&boxes, MergeParams::new(2, 0).unwrap()).unwrap();
        assert_eq!(r.merged_boxes, vec![bb(0, 0, 22, 10)]);
        assert_eq!(r.assignment, vec![0, 0]);
    }

    #[test]
    fn chains_merge_transitively() {
        let boxes = [bb(0, 0, 10, 10), bb(14, 0, 24, 10), bb(28, 0, 38, 10)];
        let r = merge_boxes(&boxes, MergeParams::new(3, 0).unwrap()).unwrap();
        assert_eq!(r.merged_boxes, vec![bb(0, 0, 38, 10)]);
    }

    #[test]
    fn late_bridge_collapses_earlier_groups() {
        // boxes 0 and 1 are apart until box 2 sits between them
        let boxes = [bb(0, 0, 10, 10), bb(30, 0, 40, 10), bb(13, 0, 27, 10)];
        let r = merge_boxes(&boxes, MergeParams::new(2, 0).unwrap()).unwrap();
        assert_eq!(r.merged_boxes, vec![bb(0, 0, 40, 10)]);
        assert_eq!(r.assignment, vec![0, 0, 0]);
    }

    #[test]
    fn group_extent_pulls_in_a_box_no_member_touches() {
        // An L of two touching boxes whose hull covers a third, separate box.
        let boxes = [bb(0, 0, 10, 10), bb(10, 10, 100, 20), bb(50, 0, 60, 5)];
        let r = merge_boxes(&boxes, MergeParams::new(0, 0).unwrap()).unwrap();
        assert_eq!(r.merged_boxes, vec![bb(0, 0, 100, 20)]);
        let again = merge_boxes(&r.merged_boxes, MergeParams::new(0, 0).unwrap()).unwrap();
        assert_eq!(again.merged_boxes, r.merged_boxes);
    }

    #[test]
    fn negative_dilation_is_rejected() {
        assert!(MergeParams::new(-1, 0).is_err());
        let p = MergeParams { lambda1: 0, lambda2: -3 };
        assert!(merge_boxes(&[], p).is_err());
    }

    #[test]
    fn empty_input_gives_empty_result() {
        let r = merge_boxes(&[], MergeParams::new(4, 4).unwrap()).unwrap();
        assert!(r.merged_boxes.is_empty());
        assert!(r.assignment.is_empty());
    }
}
