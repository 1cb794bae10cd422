//! The end-to-end flow: seal extraction, region proposal, text-region
//! formulation, symbol segmentation and glyph identification.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::{classify_glyphs, classify_regions, ClassifierHandle, GlyphLabel};
use crate::error::{Error, Result};
use crate::geometry::{
    draw_extended_super_box, draw_super_box, draw_text_box, merge_concentric, remove_contained, trim_text_box, Box,
    GroupingParams, LabeledRegion, TextBoxParams,
};
use crate::imaging::{
    canny_auto, connected_components, close_dark, gaussian_blur, gaussian_blur_plane, otsu_threshold, to_grayscale,
    BinaryImage, GaussianSpec, RasterImage,
};
use crate::selective_search::{selective_search, SegmentationParams};

/// Long-side normalisation applied before selective search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMode {
    #[default]
    #[serde(rename = "512")]
    Long512,
    #[serde(rename = "256")]
    Long256,
    #[serde(rename = "none")]
    Unscaled,
}

impl ScaleMode {
    pub fn long_side(self) -> Option<usize> {
        match self {
            ScaleMode::Long512 => Some(512),
            ScaleMode::Long256 => Some(256),
            ScaleMode::Unscaled => None,
        }
    }
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "512" => Ok(ScaleMode::Long512),
            "256" => Ok(ScaleMode::Long256),
            "none" => Ok(ScaleMode::Unscaled),
            other => Err(Error::Config(format!("unknown scale mode {other:?}"))),
        }
    }
}

/// Glyph ordering inside a text region.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadingOrder {
    /// Along the region's long axis: left to right for wide regions, top to
    /// bottom for tall ones.
    #[default]
    Lr,
    /// As `Lr`, but wide regions read right to left.
    Rl,
    /// Long axis taken from the spread of the glyph centres instead of the
    /// region's aspect ratio; horizontal runs read left to right.
    Auto,
}

impl FromStr for ReadingOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(ReadingOrder::Lr),
            "rl" => Ok(ReadingOrder::Rl),
            "auto" => Ok(ReadingOrder::Auto),
            other => Err(Error::Config(format!("unknown reading order {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub seal_blur_sigma: f64,
    pub seal_second_blur_kernel: usize,
    /// Width of the border frame sampled as background, as a fraction of the
    /// shorter image side.
    pub background_frame_frac: f64,
    /// Minimum gap between background and interior levels for a seal to be
    /// considered distinct from its surroundings.
    pub min_seal_contrast: f64,
    /// The largest foreground blob must fill at least this fraction of its
    /// bounding box. Scattered carvings on a seal that fills the frame fail
    /// this and the whole image is kept.
    pub min_seal_fill: f64,
    pub segmentation_blur_sigma: f64,
    pub grouping: GroupingParams,
    pub textbox: TextBoxParams,
    pub segmentation_superbox_overlap: f64,
    pub scale_mode: ScaleMode,
    /// Grayscale closing radius, in pixels of a 512-px long side, applied
    /// before selective search; 0 disables it. Hairline scratches otherwise
    /// join glyph segments to the icon. Strokes must stay wider than 2r+1.
    pub proposal_closing_radius: usize,
    pub grid: Vec<SegmentationParams>,
    /// Proposals covering more than this fraction of the searched image are
    /// discarded before grouping.
    pub max_proposal_frac: f64,
    /// Proposals spanning more than this fraction of the searched image's
    /// width or height are discarded: rim bands along the seal edge.
    pub max_proposal_extent_frac: f64,
    /// Proposals touching more than this many sides of the searched image are
    /// discarded. They reach into a corner, where a rounded seal leaves
    /// background.
    pub max_proposal_border_contacts: usize,
    /// Proposals whose shorter side is below this fraction of the searched
    /// image's longer side are discarded too. These are slivers along the
    /// crop border, which would otherwise chain every box together.
    pub min_proposal_side_frac: f64,
    pub reading_order: ReadingOrder,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            seal_blur_sigma: 3.0,
            seal_second_blur_kernel: 7,
            background_frame_frac: 0.05,
            min_seal_contrast: 12.0,
            min_seal_fill: 0.6,
            segmentation_blur_sigma: 3.5,
            grouping: GroupingParams::default(),
            textbox: TextBoxParams::default(),
            segmentation_superbox_overlap: 0.15,
            scale_mode: ScaleMode::default(),
            proposal_closing_radius: 3,
            grid: SegmentationParams::default_grid(),
            max_proposal_frac: 0.5,
            max_proposal_extent_frac: 0.9,
            max_proposal_border_contacts: 1,
            min_proposal_side_frac: 0.04,
            reading_order: ReadingOrder::default(),
        }
    }
}

impl StageConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("seal_blur_sigma", self.seal_blur_sigma),
            ("segmentation_blur_sigma", self.segmentation_blur_sigma),
            ("segmentation_superbox_overlap", self.segmentation_superbox_overlap),
            ("background_frame_frac", self.background_frame_frac),
            ("max_proposal_frac", self.max_proposal_frac),
            ("max_proposal_extent_frac", self.max_proposal_extent_frac),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.seal_second_blur_kernel % 2 == 0 {
            return Err(Error::Config("seal_second_blur_kernel must be odd".into()));
        }
        if self.grid.is_empty() || self.grid.iter().any(|p| !p.is_valid()) {
            return Err(Error::Config("segmentation grid is empty or invalid".into()));
        }
        Ok(())
    }
}

fn frame_and_interior_means(gray: &RasterImage, frame: usize) -> (f64, f64) {
    let (w, h) = (gray.width(), gray.height());
    let (mut fs, mut fn_, mut is, mut in_) = (0.0, 0u64, 0.0, 0u64);
    for y in 0..h {
        for x in 0..w {
            let v = gray.get(x, y, 0) as f64;
            if x < frame || y < frame || x + frame >= w || y + frame >= h {
                fs += v;
                fn_ += 1;
            } else {
                is += v;
                in_ += 1;
            }
        }
    }
    (fs / fn_.max(1) as f64, is / in_.max(1) as f64)
}

/// Bounding box of the seal and the cropped seal image. Falls back to the
/// whole image when the seal cannot be told apart from its surroundings.
pub fn extract_seal(img: &RasterImage, cfg: &StageConfig) -> (Box, RasterImage) {
    let whole = (img.bounds(), img.clone());
    let (w, h) = (img.width(), img.height());
    let frame = ((w.min(h) as f64 * cfg.background_frame_frac).round() as usize).max(1);
    if 2 * frame >= w.min(h) {
        return whole;
    }
    let gray = to_grayscale(img);
    let blurred = gaussian_blur(&gray, &GaussianSpec::new(cfg.seal_blur_sigma));
    let (background, interior) = frame_and_interior_means(&blurred, frame);
    if (interior - background).abs() < cfg.min_seal_contrast {
        return whole;
    }
    // The interior mean mixes seal and background, so a cut at its midpoint
    // with the background sits low on the blurred step and widens the mask.
    // Re-estimate the seal level from the pixels past that first cut and
    // threshold halfway between the two levels. A dark seal on light ground
    // flips the comparison.
    let light_seal = interior > background;
    let beyond = |v: f64, t: f64| if light_seal { v > t } else { v < t };
    let first = (background + interior) / 2.0;
    let (sum, n) = blurred
        .data()
        .iter()
        .map(|&v| v as f64)
        .filter(|&v| beyond(v, first))
        .fold((0.0, 0u64), |(s, n), v| (s + v, n + 1));
    let seal_level = if n > 0 { sum / n as f64 } else { interior };
    let t = (background + seal_level) / 2.0;
    let bits = blurred.data().iter().map(|&v| beyond(v as f64, t)).collect();
    let mask = BinaryImage::from_bits(w, h, bits).expect("mask size");
    let solid = connected_components(&mask)
        .iter()
        .max_by_key(|c| c.pixel_count)
        .is_some_and(|c| c.pixel_count as f64 >= cfg.min_seal_fill * c.bbox.area() as f64);
    if !solid {
        return whole;
    }
    let mask = mask.to_raster();
    let smoothed = gaussian_blur(&mask, &GaussianSpec::from_kernel_size(cfg.seal_second_blur_kernel));
    let edges = canny_auto(&smoothed).expect("gray input");
    let Some(found) = edges.bounding_box() else {
        return whole;
    };
    // Edges of a seal cut by the frame sit one or two pixels inside it.
    let snap = 2;
    let x0 = if found.x <= snap { 0 } else { found.x };
    let y0 = if found.y <= snap { 0 } else { found.y };
    let x1 = if found.right() + snap >= w as u32 { w as u32 } else { found.right() };
    let y1 = if found.bottom() + snap >= h as u32 { h as u32 } else { found.bottom() };
    let bbox = Box::from_corners(x0, y0, x1, y1);
    let crop = img.crop(&bbox).expect("box inside image");
    (bbox, crop)
}

/// Scale factor applied to reach the configured long side.
fn search_scale(img: &RasterImage, mode: ScaleMode) -> f64 {
    match mode.long_side() {
        Some(side) => side as f64 / img.width().max(img.height()) as f64,
        None => 1.0,
    }
}

/// Raw selective-search boxes and the grouped proposals, both in the input
/// image's coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Proposals {
    pub raw: Vec<Box>,
    pub grouped: Vec<Box>,
}

fn border_contacts(b: &Box, w: usize, h: usize) -> usize {
    [b.x == 0, b.y == 0, b.right() as usize >= w, b.bottom() as usize >= h]
        .iter()
        .filter(|&&t| t)
        .count()
}

/// Drops near-whole-image proposals, rim bands, corner pieces and border
/// slivers from a search over a `w`×`h` image; any of them would absorb
/// every other box.
pub fn filter_proposals(raw: &[Box], w: usize, h: usize, cfg: &StageConfig) -> Vec<Box> {
    let limit = cfg.max_proposal_frac * (w * h) as f64;
    let min_side = cfg.min_proposal_side_frac * w.max(h) as f64;
    raw.iter()
        .copied()
        .filter(|b| {
            (b.area() as f64) <= limit
                && (b.w.min(b.h) as f64) >= min_side
                && b.w as f64 <= cfg.max_proposal_extent_frac * w as f64
                && b.h as f64 <= cfg.max_proposal_extent_frac * h as f64
                && border_contacts(b, w, h) <= cfg.max_proposal_border_contacts
        })
        .collect()
}

/// Selective search on the rescaled image followed by the four grouping
/// levels, after [`filter_proposals`].
pub fn propose_regions(seal: &RasterImage, cfg: &StageConfig) -> Proposals {
    let s = search_scale(seal, cfg.scale_mode);
    let (sw, sh) = (
        ((seal.width() as f64 * s).round() as usize).max(1),
        ((seal.height() as f64 * s).round() as usize).max(1),
    );
    let radius = (cfg.proposal_closing_radius as f64 * sw.max(sh) as f64 / 512.0).round() as usize;
    let scaled = close_dark(&seal.resize(sw, sh), radius);
    let found = selective_search(&scaled, &cfg.grid);
    let raw: Vec<Box> = found.iter().map(|p| p.bbox).collect();
    let kept = filter_proposals(&raw, sw, sh, cfg);

    let g = &cfg.grouping;
    let grouped = merge_concentric(&kept, g);
    let grouped = remove_contained(&grouped);
    let grouped = draw_super_box(&grouped, g.superbox_overlap_frac);
    let grouped = draw_extended_super_box(&grouped, g.extension_offset_frac);

    let (ow, oh) = (seal.width() as u32, seal.height() as u32);
    let back = |b: &Box| b.rescale(1.0 / s, 1.0 / s, ow, oh);
    Proposals {
        raw: raw.iter().map(back).collect(),
        grouped: grouped.iter().map(back).collect(),
    }
}

/// Labelled proposals, the merged and trimmed regions, and the resulting text
/// boxes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TextRegions {
    pub labeled: Vec<LabeledRegion>,
    pub formulated: Vec<LabeledRegion>,
    pub text_boxes: Vec<Box>,
    pub warnings: Vec<String>,
}

/// Classify proposals, merge text boxes to a fixpoint, then trim.
pub fn extract_text_regions(
    seal: &RasterImage,
    proposals: &[Box],
    region: &ClassifierHandle,
    cfg: &StageConfig,
) -> Result<TextRegions> {
    let crops = proposals.iter().map(|b| seal.crop(b)).collect::<Result<Vec<_>>>()?;
    let predictions = classify_regions(region, &crops)?;
    let mut out = TextRegions::default();
    for (b, p) in proposals.iter().zip(predictions) {
        if let Some(w) = p.warning {
            out.warnings.push(format!("proposal {b:?}: {w}"));
        }
        out.labeled.push(LabeledRegion::new(*b, p.label, p.confidence));
    }
    let merged = draw_text_box(&out.labeled, &cfg.textbox);
    let trimmed = trim_text_box(&merged, &cfg.textbox);
    out.warnings.extend(trimmed.warnings);
    out.formulated = trimmed.regions;
    // Merging never shrinks a box, so a text box can end up inside another
    // whose height no longer matches it. Fold those in.
    let text: Vec<Box> = out
        .formulated
        .iter()
        .filter(|r| r.label == crate::classifiers::RegionLabel::Text)
        .map(|r| r.bbox)
        .collect();
    out.text_boxes = draw_super_box(&remove_contained(&text), cfg.grouping.superbox_overlap_frac);
    Ok(out)
}

/// Foreground mask of a text region: Otsu split, with the minority side taken
/// as ink.
fn ink_mask(gray: &RasterImage) -> BinaryImage {
    let (_, mask) = otsu_threshold(gray).expect("gray input");
    if mask.count() * 2 > mask.bits().len() {
        mask.invert()
    } else {
        mask
    }
}

/// Glyph boxes of a text region in reading order.
pub fn segment_symbols(region: &RasterImage, cfg: &StageConfig) -> Vec<Box> {
    let gray = to_grayscale(region);
    let (w, h) = (gray.width(), gray.height());
    let mask = ink_mask(&gray);
    if mask.count() == 0 {
        return Vec::new();
    }
    // Smooth the binary mask, re-centre it on its mean and keep the positive
    // part. Ink outside that support is treated as speckle. Components are
    // taken over the surviving ink rather than the smoothed blobs, which
    // would swell every glyph by about a sigma and fuse close neighbours.
    let plane: Vec<f64> = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let blurred = gaussian_blur_plane(&plane, w, h, &GaussianSpec::new(cfg.segmentation_blur_sigma));
    let mean = blurred.iter().sum::<f64>() / blurred.len() as f64;
    let bits = blurred
        .iter()
        .zip(mask.bits())
        .map(|(&v, &ink)| ink && v - mean > 0.0)
        .collect();
    let smooth = BinaryImage::from_bits(w, h, bits).expect("size");

    let boxes: Vec<Box> = connected_components(&smooth).iter().map(|c| c.bbox).collect();
    let boxes = remove_contained(&boxes);
    let boxes = draw_super_box(&boxes, cfg.segmentation_superbox_overlap);
    let boxes = draw_extended_super_box(&boxes, 0.0);
    order_glyphs(boxes, w, h, cfg.reading_order)
}

fn order_glyphs(mut boxes: Vec<Box>, w: usize, h: usize, order: ReadingOrder) -> Vec<Box> {
    let horizontal = match order {
        ReadingOrder::Lr | ReadingOrder::Rl => w >= h,
        ReadingOrder::Auto => {
            let spread = |f: fn(&Box) -> f64| {
                let (lo, hi) = boxes.iter().map(f).fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
                hi - lo
            };
            boxes.len() < 2 || spread(|b| b.center().0) >= spread(|b| b.center().1)
        }
    };
    if horizontal {
        boxes.sort_by_key(|b| (b.x, b.y, b.w, b.h));
        if order == ReadingOrder::Rl {
            boxes.sort_by_key(|b| (std::cmp::Reverse(b.right()), b.y, b.w, b.h));
        }
    } else {
        boxes.sort_by_key(|b| (b.y, b.x, b.w, b.h));
    }
    boxes
}

/// Where to stop a pipeline run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Seal,
    Proposals,
    Regions,
    Symbols,
    #[default]
    Glyphs,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Seal, Stage::Proposals, Stage::Regions, Stage::Symbols, Stage::Glyphs];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Seal => "seal",
            Stage::Proposals => "proposals",
            Stage::Regions => "regions",
            Stage::Symbols => "symbols",
            Stage::Glyphs => "glyphs",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlyphRecord {
    #[serde(flatten)]
    pub bbox: Box,
    /// Index into `text_boxes` of the region the glyph was cut from.
    pub text_box: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<GlyphLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

/// Per-image record of every stage. All boxes are in input-image pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub version: u32,
    pub input: String,
    pub width: usize,
    pub height: usize,
    pub completed: Stage,
    pub seal: Box,
    pub proposals: Vec<Box>,
    pub regions: Vec<LabeledRegion>,
    pub text_boxes: Vec<Box>,
    pub glyphs: Vec<GlyphRecord>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
    /// Wall-clock stage durations; left empty unless requested, so reports
    /// stay byte-reproducible by default.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<StageTiming>,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn glyph_boxes(&self) -> Vec<Box> {
        self.glyphs.iter().map(|g| g.bbox).collect()
    }
}

/// Run options beyond the stage configuration.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub stop_after: Stage,
    pub record_timings: bool,
}

/// Classifier handles; the region handle is needed from the `regions` stage
/// on, the glyph handle only for `glyphs`.
#[derive(Clone, Copy, Default)]
pub struct Models<'a> {
    pub region: Option<&'a ClassifierHandle>,
    pub glyph: Option<&'a ClassifierHandle>,
}

struct Clock {
    enabled: bool,
    start: Instant,
    timings: Vec<StageTiming>,
}

impl Clock {
    fn lap(&mut self, stage: &str) {
        if self.enabled {
            let now = Instant::now();
            self.timings.push(StageTiming {
                stage: stage.into(),
                millis: (now - self.start).as_secs_f64() * 1e3,
            });
            self.start = now;
        }
    }
}

/// Runs the stages in order up to `opts.stop_after`. Failures of a stage are
/// recorded and the stages that do not depend on it still run.
pub fn run_pipeline(
    input: &str,
    img: &RasterImage,
    models: Models<'_>,
    cfg: &StageConfig,
    opts: RunOptions,
) -> PipelineReport {
    let mut clock = Clock {
        enabled: opts.record_timings,
        start: Instant::now(),
        timings: Vec::new(),
    };
    let (seal_box, seal) = extract_seal(img, cfg);
    clock.lap("seal");
    let mut report = PipelineReport {
        version: REPORT_VERSION,
        input: input.into(),
        width: img.width(),
        height: img.height(),
        completed: Stage::Seal,
        seal: seal_box,
        proposals: Vec::new(),
        regions: Vec::new(),
        text_boxes: Vec::new(),
        glyphs: Vec::new(),
        warnings: Vec::new(),
        errors: Vec::new(),
        timings: Vec::new(),
    };
    let to_image = |b: &Box| b.translate(seal_box.x as i64, seal_box.y as i64);

    if opts.stop_after >= Stage::Proposals {
        let proposals = propose_regions(&seal, cfg);
        clock.lap("proposals");
        report.proposals = proposals.grouped.iter().map(to_image).collect();
        report.completed = Stage::Proposals;

        if opts.stop_after >= Stage::Regions {
            match models.region {
                None => report.errors.push("regions: no region classifier loaded".into()),
                Some(h) => match extract_text_regions(&seal, &proposals.grouped, h, cfg) {
                    Ok(t) => {
                        report.regions = t
                            .labeled
                            .iter()
                            .map(|r| LabeledRegion::new(to_image(&r.bbox), r.label, r.confidence))
                            .collect();
                        let mut text = t.text_boxes;
                        text.sort_by_key(|b| (b.y, b.x, b.w, b.h));
                        report.text_boxes = text.iter().map(to_image).collect();
                        report.warnings.extend(t.warnings);
                        report.completed = Stage::Regions;
                    }
                    Err(e) => report.errors.push(format!("regions: {e}")),
                },
            }
            clock.lap("regions");
        }
    }

    if report.completed == Stage::Regions && opts.stop_after >= Stage::Symbols {
        for (i, tb) in report.text_boxes.iter().enumerate() {
            let crop = img.crop(tb).expect("text box inside image");
            for g in segment_symbols(&crop, cfg) {
                report.glyphs.push(GlyphRecord {
                    bbox: g.translate(tb.x as i64, tb.y as i64),
                    text_box: i,
                    label: None,
                    confidence: None,
                });
            }
        }
        report.completed = Stage::Symbols;
        clock.lap("symbols");

        if opts.stop_after >= Stage::Glyphs {
            match models.glyph {
                None => report.errors.push("glyphs: no glyph classifier loaded".into()),
                Some(h) => {
                    let crops: Vec<RasterImage> = report
                        .glyphs
                        .iter()
                        .map(|g| img.crop(&g.bbox).expect("glyph inside image"))
                        .collect();
                    match classify_glyphs(h, &crops) {
                        Ok(preds) => {
                            for (g, p) in report.glyphs.iter_mut().zip(preds) {
                                g.label = Some(p.label);
                                g.confidence = Some(p.confidence);
                            }
                            report.completed = Stage::Glyphs;
                        }
                        Err(e) => report.errors.push(format!("glyphs: {e}")),
                    }
                }
            }
            clock.lap("glyphs");
        }
    }
    report.timings = clock.timings;
    report
}

const OVERLAY_SEAL: [u8; 3] = [255, 255, 255];
const OVERLAY_PROPOSAL: [u8; 3] = [128, 128, 128];
const OVERLAY_TEXT: [u8; 3] = [0, 200, 0];
const OVERLAY_NO_TEXT: [u8; 3] = [220, 0, 0];
const OVERLAY_BOTH: [u8; 3] = [230, 200, 0];
const OVERLAY_GLYPH: [u8; 3] = [0, 120, 255];
const OVERLAY_JAR: [u8; 3] = [255, 0, 255];

fn outline(img: &mut RasterImage, b: &Box, color: [u8; 3], thickness: u32) {
    let (w, h) = (img.width() as u32, img.height() as u32);
    for t in 0..thickness {
        if b.w <= 2 * t || b.h <= 2 * t {
            break;
        }
        let (x0, y0, x1, y1) = (b.x + t, b.y + t, b.right() - 1 - t, b.bottom() - 1 - t);
        for x in x0..=x1.min(w - 1) {
            for y in [y0, y1] {
                if y < h {
                    for c in 0..3 {
                        img.set(x as usize, y as usize, c, color[c]);
                    }
                }
            }
        }
        for y in y0..=y1.min(h - 1) {
            for x in [x0, x1] {
                if x < w {
                    for c in 0..3 {
                        img.set(x as usize, y as usize, c, color[c]);
                    }
                }
            }
        }
    }
}

/// The input with the report's boxes drawn in: seal white, proposals grey,
/// region labels green / red / yellow, text boxes green, glyphs blue (jar
/// magenta).
pub fn render_overlay(img: &RasterImage, report: &PipelineReport) -> RasterImage {
    let mut out = if img.is_gray() {
        let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage::new(img.width(), img.height(), 3, data).expect("rgb expansion")
    } else {
        img.clone()
    };
    for p in &report.proposals {
        outline(&mut out, p, OVERLAY_PROPOSAL, 1);
    }
    for r in &report.regions {
        let color = match r.label {
            crate::classifiers::RegionLabel::Text => OVERLAY_TEXT,
            crate::classifiers::RegionLabel::NoText => OVERLAY_NO_TEXT,
            crate::classifiers::RegionLabel::Both => OVERLAY_BOTH,
        };
        outline(&mut out, &r.bbox, color, 1);
    }
    outline(&mut out, &report.seal, OVERLAY_SEAL, 2);
    for t in &report.text_boxes {
        outline(&mut out, t, OVERLAY_TEXT, 3);
    }
    for g in &report.glyphs {
        let color = if g.label == Some(GlyphLabel::Jar) {
            OVERLAY_JAR
        } else {
            OVERLAY_GLYPH
        };
        outline(&mut out, &g.bbox, color, 2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_seal, SyntheticSealSpec};

    fn strip(boxes: &[Box], w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn_gray(w, h, |x, y| {
            let p = Box::new(x as u32, y as u32, 1, 1);
            if boxes.iter().any(|b| b.contains(&p)) {
                60
            } else {
                200
            }
        })
    }

    #[test]
    fn constant_image_keeps_whole_frame() {
        let img = RasterImage::filled(120, 80, 3, 77);
        let (b, crop) = extract_seal(&img, &StageConfig::default());
        assert_eq!(b, img.bounds());
        assert_eq!(crop, img);
    }

    #[test]
    fn edge_to_edge_seal_keeps_whole_frame() {
        let s = generate_seal(&SyntheticSealSpec::default());
        let inner = s.image.crop(&s.truth.seal.expand_within(0, &s.truth.seal)).unwrap();
        let core = inner.crop(&Box::new(20, 20, inner.width() as u32 - 40, inner.height() as u32 - 40)).unwrap();
        let (b, _) = extract_seal(&core, &StageConfig::default());
        assert_eq!(b, core.bounds());
    }

    #[test]
    fn seal_box_tracks_truth() {
        for seed in 0..4 {
            let s = generate_seal(&SyntheticSealSpec {
                seed,
                ..Default::default()
            });
            let (b, _) = extract_seal(&s.image, &StageConfig::default());
            let t = s.truth.seal;
            for (got, want) in [(b.x, t.x), (b.y, t.y), (b.right(), t.right()), (b.bottom(), t.bottom())] {
                assert!((got as i64 - want as i64).abs() <= 5, "{b:?} vs {t:?}");
            }
        }
    }

    #[test]
    fn four_glyph_strip_with_narrow_gaps() {
        use crate::synth::{generate_glyph_strip, GlyphShape};
        let shapes = [GlyphShape::Ladder, GlyphShape::Jar, GlyphShape::Comb, GlyphShape::Fish];
        let (img, truth) = generate_glyph_strip(&shapes, 3, 1);
        let found = segment_symbols(&img, &StageConfig::default());
        assert_eq!(found.len(), 4, "{found:?}");
        for (f, t) in found.iter().zip(&truth) {
            assert!(f.iou(t) >= 0.7, "{f:?} vs {t:?}");
        }
    }

    #[test]
    fn every_shape_segments_as_one_glyph() {
        use crate::synth::{generate_glyph_strip, GlyphShape};
        let mut shapes = vec![GlyphShape::Jar];
        shapes.extend(GlyphShape::OTHERS);
        let (img, truth) = generate_glyph_strip(&shapes, 12, 2);
        let found = segment_symbols(&img, &StageConfig::default());
        assert_eq!(found.len(), truth.len(), "{found:?}");
        for (f, t) in found.iter().zip(&truth) {
            assert!(f.iou(t) >= 0.9, "{f:?} vs {t:?}");
        }
    }

    #[test]
    fn blank_strip_has_no_symbols() {
        let img = RasterImage::filled(80, 30, 1, 180);
        assert!(segment_symbols(&img, &StageConfig::default()).is_empty());
    }

    #[test]
    fn single_glyph_is_bounded() {
        let t = Box::new(12, 8, 16, 20);
        let img = strip(&[t], 40, 36);
        let found = segment_symbols(&img, &StageConfig::default());
        assert_eq!(found.len(), 1);
        assert!(found[0].contains(&t));
        assert!(found[0].iou(&t) >= 0.7);
    }

    #[test]
    fn reading_orders() {
        let boxes = vec![Box::new(50, 0, 10, 10), Box::new(0, 0, 10, 10), Box::new(25, 0, 10, 10)];
        let xs = |v: Vec<Box>| v.iter().map(|b| b.x).collect::<Vec<_>>();
        assert_eq!(xs(order_glyphs(boxes.clone(), 60, 10, ReadingOrder::Lr)), vec![0, 25, 50]);
        assert_eq!(xs(order_glyphs(boxes.clone(), 60, 10, ReadingOrder::Rl)), vec![50, 25, 0]);
        assert_eq!(xs(order_glyphs(boxes.clone(), 60, 100, ReadingOrder::Auto)), vec![0, 25, 50]);
        let column = vec![Box::new(0, 40, 10, 10), Box::new(0, 0, 10, 10)];
        let ys: Vec<u32> = order_glyphs(column, 10, 60, ReadingOrder::Lr).iter().map(|b| b.y).collect();
        assert_eq!(ys, vec![0, 40]);
    }

    #[test]
    fn blank_image_report() {
        let img = RasterImage::filled(64, 64, 3, 20);
        let report = run_pipeline(
            "blank",
            &img,
            Models::default(),
            &StageConfig::default(),
            RunOptions {
                stop_after: Stage::Proposals,
                record_timings: false,
            },
        );
        assert_eq!(report.seal, img.bounds());
        assert!(report.text_boxes.is_empty() && report.glyphs.is_empty());
        assert!(report.errors.is_empty());
        assert!(!report.to_json().unwrap().contains("timings"));
    }

    #[test]
    fn config_round_trips_and_validates() {
        let cfg = StageConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"scale_mode\":\"512\""));
        assert_eq!(serde_json::from_str::<StageConfig>(&text).unwrap(), cfg);
        let partial: StageConfig = serde_json::from_str(r#"{"scale_mode":"none"}"#).unwrap();
        assert_eq!(partial.scale_mode, ScaleMode::Unscaled);
        assert_eq!(partial.seal_blur_sigma, 3.0);
    }
}
