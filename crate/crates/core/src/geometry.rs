//! Axis-aligned box algebra, the four-level proposal grouping hierarchy and
//! the text-box formulation rules.
//!
//! Every grouping operation first sorts its input by `(y, x, w, h)` and then
//! merges in that order, so results depend only on the input multiset.

use serde::{Deserialize, Serialize};

use crate::classifiers::RegionLabel;

/// Integer axis-aligned rectangle. `w` and `h` are at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Box {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Box {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        assert!(w >= 1 && h >= 1, "box dimensions must be positive");
        Self { x, y, w, h }
    }

    /// Box spanning `[x0, x1) × [y0, y1)`.
    pub fn from_corners(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Self::new(x0, y0, x1 - x0, y1 - y0)
    }

    #[inline]
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// True when `other` lies entirely inside `self` (boundaries may coincide).
    pub fn contains(&self, other: &Box) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection(&self, other: &Box) -> Option<Box> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| Box::from_corners(x0, y0, x1, y1))
    }

    /// Minimal box covering both.
    pub fn union(&self, other: &Box) -> Box {
        Box::from_corners(
            self.x.min(other.x),
            self.y.min(other.y),
            self.right().max(other.right()),
            self.bottom().max(other.bottom()),
        )
    }

    pub fn iou(&self, other: &Box) -> f64 {
        let inter = overlap_area(self, other);
        if inter == 0 {
            return 0.0;
        }
        inter as f64 / (self.area() + other.area() - inter) as f64
    }

    /// Moves the box by a signed offset; panics if it would leave the
    /// non-negative quadrant.
    pub fn translate(&self, dx: i64, dy: i64) -> Box {
        let x = self.x as i64 + dx;
        let y = self.y as i64 + dy;
        assert!(x >= 0 && y >= 0, "translated box leaves the image plane");
        Box::new(x as u32, y as u32, self.w, self.h)
    }

    /// Grows every side by `margin`, clipped to `bounds`.
    pub fn expand_within(&self, margin: u32, bounds: &Box) -> Box {
        let x0 = self.x.saturating_sub(margin).max(bounds.x);
        let y0 = self.y.saturating_sub(margin).max(bounds.y);
        let x1 = (self.right() + margin).min(bounds.right());
        let y1 = (self.bottom() + margin).min(bounds.bottom());
        Box::from_corners(x0, y0, x1.max(x0 + 1), y1.max(y0 + 1))
    }

    /// Maps a box through an axis-wise scale, rounding each edge to the nearest
    /// pixel and clipping to `[0, max_w) × [0, max_h)`.
    pub fn rescale(&self, sx: f64, sy: f64, max_w: u32, max_h: u32) -> Box {
        let x0 = ((self.x as f64 * sx).round() as u32).min(max_w - 1);
        let y0 = ((self.y as f64 * sy).round() as u32).min(max_h - 1);
        let x1 = ((self.right() as f64 * sx).round() as u32).clamp(x0 + 1, max_w);
        let y1 = ((self.bottom() as f64 * sy).round() as u32).clamp(y0 + 1, max_h);
        Box::from_corners(x0, y0, x1, y1)
    }

    fn sort_key(&self) -> (u32, u32, u32, u32) {
        (self.y, self.x, self.w, self.h)
    }
}

/// Area of the intersection of two boxes; 0 when disjoint.
pub fn overlap_area(a: &Box, b: &Box) -> u64 {
    a.intersection(b).map_or(0, |i| i.area())
}

/// A box with a region-classification label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledRegion {
    #[serde(flatten)]
    pub bbox: Box,
    pub label: RegionLabel,
    pub confidence: f64,
}

impl LabeledRegion {
    pub fn new(bbox: Box, label: RegionLabel, confidence: f64) -> Self {
        Self {
            bbox,
            label,
            confidence,
        }
    }
}

/// Thresholds of the proposal grouping hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingParams {
    pub concentric_frac: f64,
    pub containment_frac: f64,
    pub superbox_overlap_frac: f64,
    pub extension_offset_frac: f64,
}

impl Default for GroupingParams {
    fn default() -> Self {
        Self {
            concentric_frac: 0.14,
            containment_frac: 1.00,
            superbox_overlap_frac: 0.40,
            extension_offset_frac: 0.06,
        }
    }
}

/// Thresholds of text-box merging and trimming.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextBoxParams {
    pub width_merge_frac: f64,
    pub height_merge_frac: f64,
    pub trim_major_frac: f64,
    pub trim_minor_frac: f64,
}

impl Default for TextBoxParams {
    fn default() -> Self {
        Self {
            width_merge_frac: 0.25,
            height_merge_frac: 0.20,
            trim_major_frac: 0.70,
            trim_minor_frac: 0.20,
        }
    }
}

fn sorted(boxes: &[Box]) -> Vec<Box> {
    let mut v = boxes.to_vec();
    v.sort_by_key(Box::sort_key);
    v
}

/// Repeatedly replaces the first matching pair (in sorted order) with its
/// union until no pair matches.
fn merge_to_fixpoint(boxes: &[Box], matches: impl Fn(&Box, &Box) -> bool) -> Vec<Box> {
    let mut cur = sorted(boxes);
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < cur.len() {
            let mut j = i + 1;
            while j < cur.len() {
                if matches(&cur[i], &cur[j]) {
                    cur[i] = cur[i].union(&cur[j]);
                    cur.remove(j);
                    merged = true;
                    j = i + 1;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            return cur;
        }
        cur.sort_by_key(Box::sort_key);
    }
}

fn is_concentric(a: &Box, b: &Box, frac: f64) -> bool {
    let mean_w = (a.w as f64 + b.w as f64) / 2.0;
    let mean_h = (a.h as f64 + b.h as f64) / 2.0;
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).abs() <= frac * mean_w
        && (ay - by).abs() <= frac * mean_h
        && (a.w as f64 - b.w as f64).abs() <= frac * mean_w
        && (a.h as f64 - b.h as f64).abs() <= frac * mean_h
}

fn mean_box(cluster: &[Box]) -> Box {
    let n = cluster.len() as f64;
    let mw = cluster.iter().map(|b| b.w as f64).sum::<f64>() / n;
    let mh = cluster.iter().map(|b| b.h as f64).sum::<f64>() / n;
    let cx = cluster.iter().map(|b| b.center().0).sum::<f64>() / n;
    let cy = cluster.iter().map(|b| b.center().1).sum::<f64>() / n;
    let w = (mw.round() as u32).max(1);
    let h = (mh.round() as u32).max(1);
    let x = (cx - w as f64 / 2.0).round().max(0.0) as u32;
    let y = (cy - h as f64 / 2.0).round().max(0.0) as u32;
    Box::new(x, y, w, h)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Replaces clusters of mutually concentric boxes by their mean box.
///
/// Two boxes match when their centers and their dimensions each differ by at
/// most `concentric_frac` of the pair's mean extent along that axis. Clusters
/// are the transitive closure of matches; the step repeats until no two output
/// boxes match, so the operation is idempotent.
pub fn merge_concentric(boxes: &[Box], params: &GroupingParams) -> Vec<Box> {
    let frac = params.concentric_frac;
    let mut cur = sorted(boxes);
    loop {
        let n = cur.len();
        let mut parent: Vec<usize> = (0..n).collect();
        let mut merged = false;
        for i in 0..n {
            for j in i + 1..n {
                if is_concentric(&cur[i], &cur[j], frac) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                        merged = true;
                    }
                }
            }
        }
        if !merged {
            return cur;
        }
        let mut clusters: Vec<Vec<Box>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = clusters.len();
                clusters.push(Vec::new());
            }
            clusters[slot[root]].push(cur[i]);
        }
        cur = clusters
            .iter()
            .map(|c| if c.len() == 1 { c[0] } else { mean_box(c) })
            .collect();
        cur.sort_by_key(Box::sort_key);
    }
}

/// Drops every box lying entirely inside another one. Among identical boxes
/// the first occurrence survives. Input order is preserved.
pub fn remove_contained(boxes: &[Box]) -> Vec<Box> {
    boxes
        .iter()
        .enumerate()
        .filter(|&(i, b)| {
            !boxes
                .iter()
                .enumerate()
                .any(|(j, o)| j != i && o.contains(b) && (o != b || j < i))
        })
        .map(|(_, b)| *b)
        .collect()
}

fn overlaps_enough(a: &Box, b: &Box, frac: f64) -> bool {
    let ov = overlap_area(a, b);
    ov > 0 && ov as f64 >= frac * a.area() as f64 && ov as f64 >= frac * b.area() as f64
}

/// Replaces pairs whose intersection covers at least `overlap_frac` of each
/// box's own area by their union, to a fixpoint.
pub fn draw_super_box(boxes: &[Box], overlap_frac: f64) -> Vec<Box> {
    merge_to_fixpoint(boxes, |a, b| overlaps_enough(a, b, overlap_frac))
}

/// Gap between two intervals (0 when they touch or overlap).
fn gap(a0: u32, a1: u32, b0: u32, b1: u32) -> u32 {
    a0.max(b0).saturating_sub(a1.min(b1))
}

fn intervals_overlap(a0: u32, a1: u32, b0: u32, b1: u32) -> bool {
    a1.min(b1) > a0.max(b0)
}

/// True when `a` and `b` sit side by side along one axis, within
/// `offset_frac` of their mean extent along it, and share extent along the
/// other axis.
pub fn axis_continuous(a: &Box, b: &Box, offset_frac: f64) -> bool {
    let row = intervals_overlap(a.y, a.bottom(), b.y, b.bottom())
        && gap(a.x, a.right(), b.x, b.right()) as f64
            <= offset_frac * (a.w as f64 + b.w as f64) / 2.0;
    let column = intervals_overlap(a.x, a.right(), b.x, b.right())
        && gap(a.y, a.bottom(), b.y, b.bottom()) as f64
            <= offset_frac * (a.h as f64 + b.h as f64) / 2.0;
    row || column
}

/// Joins axis-continuous boxes into horizontal or vertical super regions, to a
/// fixpoint. With `offset_frac = 0` only touching or overlapping pairs join.
pub fn draw_extended_super_box(boxes: &[Box], offset_frac: f64) -> Vec<Box> {
    merge_to_fixpoint(boxes, |a, b| axis_continuous(a, b, offset_frac))
}

fn label_rank(label: RegionLabel) -> u8 {
    match label {
        RegionLabel::Text => 0,
        RegionLabel::Both => 1,
        RegionLabel::NoText => 2,
    }
}

fn sorted_regions(regions: &[LabeledRegion]) -> Vec<LabeledRegion> {
    let mut v = regions.to_vec();
    v.sort_by(|a, b| {
        (a.bbox.sort_key(), label_rank(a.label))
            .cmp(&(b.bbox.sort_key(), label_rank(b.label)))
            .then(a.confidence.total_cmp(&b.confidence))
    });
    v
}

fn text_mergeable(a: &LabeledRegion, b: &LabeledRegion, p: &TextBoxParams) -> bool {
    use RegionLabel::*;
    let labels_ok = matches!(
        (a.label, b.label),
        (Text, Text) | (Text, Both) | (Both, Text)
    );
    if !labels_ok {
        return false;
    }
    let (a, b) = (&a.bbox, &b.bbox);
    let mean_w = (a.w as f64 + b.w as f64) / 2.0;
    let mean_h = (a.h as f64 + b.h as f64) / 2.0;
    let same_row = intervals_overlap(a.y, a.bottom(), b.y, b.bottom())
        && (a.h as f64 - b.h as f64).abs() <= p.height_merge_frac * mean_h;
    let same_column = intervals_overlap(a.x, a.right(), b.x, b.right())
        && (a.w as f64 - b.w as f64).abs() <= p.width_merge_frac * mean_w;
    same_row || same_column
}

/// Merges Text/Text and Text/Both pairs lying on a common row (similar
/// heights, overlapping vertical extents) or a common column (similar widths,
/// overlapping horizontal extents) into Text boxes, to a fixpoint. Distance
/// between the pair is not limited. Other regions pass through.
pub fn draw_text_box(regions: &[LabeledRegion], params: &TextBoxParams) -> Vec<LabeledRegion> {
    let mut cur = sorted_regions(regions);
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < cur.len() {
            let mut j = i + 1;
            while j < cur.len() {
                if text_mergeable(&cur[i], &cur[j], params) {
                    let confidence = cur[i].confidence.min(cur[j].confidence);
                    cur[i] = LabeledRegion::new(
                        cur[i].bbox.union(&cur[j].bbox),
                        RegionLabel::Text,
                        confidence,
                    );
                    cur.remove(j);
                    merged = true;
                    j = i + 1;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            return cur;
        }
        cur = sorted_regions(&cur);
    }
}

/// Outcome of [`trim_text_box`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrimOutcome {
    pub regions: Vec<LabeledRegion>,
    pub warnings: Vec<String>,
}

/// Removes from `text` the slab `[cut0, cut1)` along one axis, keeping the
/// larger remainder when the slab is interior. Returns `None` when nothing
/// remains.
fn cut_interval(start: u32, end: u32, cut0: u32, cut1: u32) -> Option<(u32, u32)> {
    let left = cut0.saturating_sub(start);
    let right = end.saturating_sub(cut1);
    if left == 0 && right == 0 {
        None
    } else if right >= left {
        Some((cut1, end))
    } else {
        Some((start, cut0))
    }
}

/// Clips NoText content off Text regions. A Text/NoText pair triggers when
/// their intersection spans at least `trim_major_frac` of the Text extent on
/// one axis and `trim_minor_frac` on the other; the intersecting slab is then
/// removed along the minor axis. Fractions are relative to the Text region.
pub fn trim_text_box(regions: &[LabeledRegion], params: &TextBoxParams) -> TrimOutcome {
    let ordered = sorted_regions(regions);
    let blockers: Vec<Box> = ordered
        .iter()
        .filter(|r| r.label == RegionLabel::NoText)
        .map(|r| r.bbox)
        .collect();
    let mut out = TrimOutcome::default();
    for region in ordered {
        if region.label != RegionLabel::Text {
            out.regions.push(region);
            continue;
        }
        let mut bbox = Some(region.bbox);
        for blocker in &blockers {
            let Some(current) = bbox else { break };
            let Some(inter) = current.intersection(blocker) else {
                continue;
            };
            let fx = inter.w as f64 / current.w as f64;
            let fy = inter.h as f64 / current.h as f64;
            let tall = fy >= params.trim_major_frac && fx >= params.trim_minor_frac;
            let wide = fx >= params.trim_major_frac && fy >= params.trim_minor_frac;
            // Cut along the axis where the overlap is narrower.
            let cut_columns = if tall && wide { fx <= fy } else { tall };
            if !(tall || wide) {
                continue;
            }
            bbox = if cut_columns {
                cut_interval(current.x, current.right(), inter.x, inter.right())
                    .map(|(x0, x1)| Box::from_corners(x0, current.y, x1, current.bottom()))
            } else {
                cut_interval(current.y, current.bottom(), inter.y, inter.bottom())
                    .map(|(y0, y1)| Box::from_corners(current.x, y0, current.right(), y1))
            };
        }
        match bbox {
            Some(b) => out.regions.push(LabeledRegion::new(b, region.label, region.confidence)),
            None => out.warnings.push(format!(
                "text region {:?} removed entirely by trimming",
                region.bbox
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use RegionLabel::*;

    fn b(x: u32, y: u32, w: u32, h: u32) -> Box {
        Box::new(x, y, w, h)
    }

    /// Counts shared pixels one by one.
    fn pixel_overlap(a: &Box, b: &Box) -> u64 {
        let mut n = 0;
        for y in a.y..a.bottom() {
            for x in a.x..a.right() {
                if x >= b.x && x < b.right() && y >= b.y && y < b.bottom() {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(overlap_area(&b(0, 0, 10, 10), &b(0, 0, 10, 10)), 100);
        assert_eq!(overlap_area(&b(0, 0, 10, 10), &b(20, 20, 5, 5)), 0);
        assert_eq!(overlap_area(&b(0, 0, 10, 10), &b(5, 5, 10, 10)), 25);
        assert_eq!(pixel_overlap(&b(0, 0, 10, 10), &b(5, 5, 10, 10)), 25);
        // touching edges share no pixels
        assert_eq!(overlap_area(&b(0, 0, 10, 10), &b(10, 0, 10, 10)), 0);
    }

    #[test]
    fn iou_and_union() {
        let a = b(0, 0, 10, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert!((a.iou(&b(5, 0, 10, 10)) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.union(&b(20, 5, 1, 1)), b(0, 0, 21, 10));
    }

    #[test]
    fn concentric_examples() {
        let p = GroupingParams::default();
        assert_eq!(merge_concentric(&[b(3, 4, 5, 6), b(3, 4, 5, 6)], &p), vec![b(3, 4, 5, 6)]);
        assert_eq!(
            merge_concentric(&[b(0, 0, 100, 100), b(2, 2, 98, 98)], &p),
            vec![b(1, 1, 99, 99)]
        );
        let kept = merge_concentric(&[b(0, 0, 100, 100), b(0, 0, 10, 10)], &p);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn remove_contained_examples() {
        assert_eq!(remove_contained(&[b(0, 0, 10, 10), b(2, 2, 3, 3)]), vec![b(0, 0, 10, 10)]);
        let partial = [b(0, 0, 10, 10), b(5, 5, 10, 10)];
        assert_eq!(remove_contained(&partial), partial.to_vec());
        assert_eq!(remove_contained(&[b(1, 1, 4, 4), b(1, 1, 4, 4)]), vec![b(1, 1, 4, 4)]);
    }

    #[test]
    fn super_box_examples() {
        assert_eq!(draw_super_box(&[b(0, 0, 10, 10), b(1, 1, 10, 10)], 0.40), vec![b(0, 0, 11, 11)]);
        let disjoint = [b(0, 0, 5, 5), b(10, 10, 5, 5)];
        assert_eq!(draw_super_box(&disjoint, 0.40), disjoint.to_vec());
        // a~b and b~c overlap heavily; a and c barely touch until a∪b exists
        let chain = [b(0, 0, 10, 10), b(4, 0, 10, 10), b(7, 0, 10, 10)];
        assert_eq!(draw_super_box(&chain, 0.40), vec![b(0, 0, 17, 10)]);
        // small box mostly inside a large one: 16 ≥ 0.4·16 but 16 < 0.4·400
        let lopsided = [b(0, 0, 20, 20), b(18, 18, 4, 4)];
        assert_eq!(draw_super_box(&lopsided, 0.40).len(), 2);
    }

    #[test]
    fn extended_super_box_examples() {
        assert_eq!(
            draw_extended_super_box(&[b(0, 0, 10, 10), b(10, 0, 10, 10)], 0.06),
            vec![b(0, 0, 20, 10)]
        );
        let apart = [b(0, 0, 10, 10), b(50, 0, 10, 10)];
        assert_eq!(draw_extended_super_box(&apart, 0.06), apart.to_vec());
        let column = [b(5, 0, 10, 10), b(5, 10, 10, 10), b(5, 20, 10, 10)];
        assert_eq!(draw_extended_super_box(&column, 0.0), vec![b(5, 0, 10, 30)]);
        // diagonal neighbours share no extent on either axis
        let diagonal = [b(0, 0, 10, 10), b(10, 10, 10, 10)];
        assert_eq!(draw_extended_super_box(&diagonal, 0.06).len(), 2);
    }

    fn lr(bbox: Box, label: RegionLabel) -> LabeledRegion {
        LabeledRegion::new(bbox, label, 0.9)
    }

    #[test]
    fn text_box_examples() {
        let p = TextBoxParams::default();
        let row = draw_text_box(&[lr(b(0, 0, 20, 20), Text), lr(b(25, 1, 20, 20), Text)], &p);
        assert_eq!(row, vec![lr(b(0, 0, 45, 21), Text)]);

        let mixed = draw_text_box(&[lr(b(0, 0, 20, 20), Text), lr(b(25, 0, 20, 20), NoText)], &p);
        assert_eq!(mixed.len(), 2);

        let tall_both = draw_text_box(&[lr(b(0, 0, 20, 20), Text), lr(b(25, 0, 20, 100), Both)], &p);
        assert_eq!(tall_both.len(), 2);

        let both_pair = draw_text_box(&[lr(b(0, 0, 20, 20), Both), lr(b(25, 0, 20, 20), Both)], &p);
        assert_eq!(both_pair.len(), 2);
    }

    #[test]
    fn text_box_absorbs_a_whole_row() {
        let p = TextBoxParams::default();
        let glyphs: Vec<LabeledRegion> =
            (0..5).map(|i| lr(b(i * 30, 10 + i % 2, 22, 30), Text)).collect();
        let merged = draw_text_box(&glyphs, &p);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].bbox, b(0, 10, 142, 31));
    }

    #[test]
    fn trim_examples() {
        let p = TextBoxParams::default();
        let text = lr(b(0, 0, 100, 20), Text);
        let out = trim_text_box(&[text, lr(b(75, 0, 40, 20), NoText)], &p);
        assert!(out.regions.contains(&lr(b(0, 0, 75, 20), Text)));
        assert_eq!(out.regions.len(), 2);

        // 10% of the width is below the minor threshold
        let narrow = trim_text_box(&[text, lr(b(90, 0, 10, 20), NoText)], &p);
        assert!(narrow.regions.contains(&text));

        let disjoint = trim_text_box(&[text, lr(b(0, 50, 10, 10), NoText)], &p);
        assert!(disjoint.regions.contains(&text));

        let inner = trim_text_box(&[text, lr(b(40, 5, 5, 5), NoText)], &p);
        assert!(inner.regions.contains(&text));

        let gone = trim_text_box(&[lr(b(10, 10, 10, 10), Text), lr(b(0, 0, 50, 50), NoText)], &p);
        assert_eq!(gone.regions.len(), 1);
        assert_eq!(gone.warnings.len(), 1);
    }

    #[test]
    fn trim_from_the_left_and_top() {
        let p = TextBoxParams::default();
        let out = trim_text_box(&[lr(b(10, 10, 100, 20), Text), lr(b(0, 0, 40, 40), NoText)], &p);
        assert!(out.regions.contains(&lr(b(40, 10, 70, 20), Text)));
        let out = trim_text_box(&[lr(b(0, 0, 20, 100), Text), lr(b(0, 0, 20, 30), NoText)], &p);
        assert!(out.regions.contains(&lr(b(0, 30, 20, 70), Text)));
    }

    #[test]
    fn rescale_round_trip_within_one_pixel() {
        let (sx, sy) = (512.0 / 1333.0, 384.0 / 1000.0);
        for scaled in [b(0, 0, 512, 384), b(37, 91, 203, 55), b(500, 380, 12, 4)] {
            let original = scaled.rescale(1.0 / sx, 1.0 / sy, 1333, 1000);
            let back = original.rescale(sx, sy, 512, 384);
            for (p, q) in [
                (back.x, scaled.x),
                (back.y, scaled.y),
                (back.right(), scaled.right()),
                (back.bottom(), scaled.bottom()),
            ] {
                assert!((p as i64 - q as i64).abs() <= 1);
            }
        }
    }
}
