//! End-to-end scoring of pipeline reports against synthetic ground truth.

use glyphline::classifiers::{ClassLabel, Evaluation, GlyphLabel};
use glyphline::geometry::Box;
use glyphline::pipeline::PipelineReport;
use glyphline::synth::GroundTruth;
use serde::{Deserialize, Serialize};

/// Text region judged fully found.
pub const FULL_IOU: f64 = 0.8;
/// Text region judged partly found.
pub const PARTIAL_IOU: f64 = 0.3;
/// A glyph counts as recovered at this IoU.
pub const GLYPH_IOU: f64 = 0.7;
/// Seal box tolerance per edge, in pixels.
pub const SEAL_TOLERANCE: i64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Full,
    Partial,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub full: u64,
    pub partial: u64,
    pub none: u64,
}

impl Tally {
    pub fn add(&mut self, g: Grade) {
        match g {
            Grade::Full => self.full += 1,
            Grade::Partial => self.partial += 1,
            Grade::None => self.none += 1,
        }
    }
}

fn best_iou(candidates: &[Box], target: &Box) -> f64 {
    candidates.iter().map(|c| c.iou(target)).fold(0.0, f64::max)
}

pub fn seal_within(found: &Box, truth: &Box, tol: i64) -> bool {
    let d = |a: u32, b: u32| (a as i64 - b as i64).abs() <= tol;
    d(found.x, truth.x) && d(found.y, truth.y) && d(found.right(), truth.right()) && d(found.bottom(), truth.bottom())
}

/// Best text box against the true text strip.
pub fn grade_text(text_boxes: &[Box], truth: &Box) -> Grade {
    let iou = best_iou(text_boxes, truth);
    if iou >= FULL_IOU {
        Grade::Full
    } else if iou >= PARTIAL_IOU {
        Grade::Partial
    } else {
        Grade::None
    }
}

/// Full when every glyph is recovered; partial when at least one glyph is
/// recovered or overlapped by a combined box.
pub fn grade_symbols(found: &[Box], truth: &[Box]) -> (Grade, usize) {
    let matched = truth.iter().filter(|t| best_iou(found, t) >= GLYPH_IOU).count();
    let touched = truth.iter().any(|t| best_iou(found, t) >= PARTIAL_IOU);
    let grade = if !truth.is_empty() && matched == truth.len() {
        Grade::Full
    } else if matched > 0 || touched {
        Grade::Partial
    } else {
        Grade::None
    };
    (grade, matched)
}

/// One image's scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub input: String,
    pub seal_ok: bool,
    pub text: Grade,
    /// Exactly one text box, and it is a full match.
    pub single_full_text: bool,
    pub symbols: Grade,
    pub glyphs_matched: usize,
    pub glyphs_total: usize,
}

/// Per-image scores; also returns (truth, predicted) jar label indices for
/// recovered glyphs that carry a label.
pub fn score_image(report: &PipelineReport, truth: &GroundTruth) -> (ImageScore, Vec<(usize, usize)>) {
    let found = report.glyph_boxes();
    let (symbols, matched) = grade_symbols(&found, &truth.glyphs);
    let text = grade_text(&report.text_boxes, &truth.text);
    let mut labels = Vec::new();
    for (tb, tl) in truth.glyphs.iter().zip(&truth.labels) {
        let best = report
            .glyphs
            .iter()
            .filter(|g| g.bbox.iou(tb) >= GLYPH_IOU)
            .max_by(|a, b| a.bbox.iou(tb).total_cmp(&b.bbox.iou(tb)));
        if let Some(l) = best.and_then(|g| g.label) {
            labels.push((tl.index(), l.index()));
        }
    }
    let score = ImageScore {
        input: report.input.clone(),
        seal_ok: seal_within(&report.seal, &truth.seal, SEAL_TOLERANCE),
        text,
        single_full_text: report.text_boxes.len() == 1 && report.text_boxes[0].iou(&truth.text) >= FULL_IOU,
        symbols,
        glyphs_matched: matched,
        glyphs_total: truth.glyphs.len(),
    };
    (score, labels)
}

/// Corpus-level tallies in the shape of a per-category results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndToEndSummary {
    pub images: u64,
    pub seal_ok: u64,
    pub text_regions: Tally,
    pub single_full_text: u64,
    pub symbols: Tally,
    pub glyphs_matched: u64,
    pub glyphs_total: u64,
    /// Jar / no-jar agreement over recovered glyphs, when labels were produced.
    pub jar: Option<Evaluation>,
    pub per_image: Vec<ImageScore>,
}

impl EndToEndSummary {
    pub fn new(pairs: &[(PipelineReport, GroundTruth)]) -> Self {
        let mut s = EndToEndSummary {
            images: 0,
            seal_ok: 0,
            text_regions: Tally::default(),
            single_full_text: 0,
            symbols: Tally::default(),
            glyphs_matched: 0,
            glyphs_total: 0,
            jar: None,
            per_image: Vec::new(),
        };
        let (mut truth, mut predicted) = (Vec::new(), Vec::new());
        for (report, gt) in pairs {
            let (score, labels) = score_image(report, gt);
            s.images += 1;
            s.seal_ok += score.seal_ok as u64;
            s.text_regions.add(score.text);
            s.single_full_text += score.single_full_text as u64;
            s.symbols.add(score.symbols);
            s.glyphs_matched += score.glyphs_matched as u64;
            s.glyphs_total += score.glyphs_total as u64;
            for (t, p) in labels {
                truth.push(t);
                predicted.push(p);
            }
            s.per_image.push(score);
        }
        let names = GlyphLabel::ALL.iter().map(|l| l.name().to_string()).collect();
        s.jar = Evaluation::from_predictions(names, &truth, &predicted).ok();
        s
    }
}
