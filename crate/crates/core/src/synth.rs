//! Procedural seal images with ground truth: a textured light seal on a dark
//! ground, a strip of carved stroke glyphs and an optional iconographic block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{GlyphLabel, RegionLabel};
use crate::geometry::Box;
use crate::imaging::RasterImage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Horizontal,
    Vertical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSealSpec {
    pub width: usize,
    pub height: usize,
    pub glyph_count: usize,
    /// Fixed number of jar glyphs; when absent each glyph is a jar with
    /// probability 0.3.
    pub jar_count: Option<usize>,
    pub layout: Layout,
    pub icon: bool,
    /// 0 is clean; 0.5 is moderate wear; 1 is heavy.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSealSpec {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            glyph_count: 5,
            jar_count: None,
            layout: Layout::Horizontal,
            icon: true,
            noise: 0.0,
            seed: 0,
        }
    }
}

pub const MODERATE_NOISE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seal: Box,
    pub text: Box,
    pub glyphs: Vec<Box>,
    pub labels: Vec<GlyphLabel>,
    pub icon: Option<Box>,
}

#[derive(Clone, Debug)]
pub struct SyntheticSeal {
    pub image: RasterImage,
    pub truth: GroundTruth,
}

/// Stroke-glyph vocabulary. Every shape is a single connected figure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlyphShape {
    Jar,
    Man,
    Fish,
    Wheel,
    Comb,
    Arrow,
    Ladder,
    Fork,
    Triangle,
}

impl GlyphShape {
    pub const OTHERS: [GlyphShape; 8] = [
        GlyphShape::Man,
        GlyphShape::Fish,
        GlyphShape::Wheel,
        GlyphShape::Comb,
        GlyphShape::Arrow,
        GlyphShape::Ladder,
        GlyphShape::Fork,
        GlyphShape::Triangle,
    ];

    pub fn label(self) -> GlyphLabel {
        if self == GlyphShape::Jar {
            GlyphLabel::Jar
        } else {
            GlyphLabel::NoJar
        }
    }

    /// Polylines in the unit square (x right, y down).
    fn strokes(self) -> Vec<Vec<(f64, f64)>> {
        match self {
            GlyphShape::Jar => vec![
                vec![(0.22, 0.16), (0.14, 0.5), (0.3, 0.92), (0.7, 0.92), (0.86, 0.5), (0.78, 0.16)],
                vec![(0.04, 0.02), (0.22, 0.16), (0.78, 0.16), (0.96, 0.02)],
            ],
            GlyphShape::Man => vec![
                vec![(0.4, 0.02), (0.6, 0.02), (0.6, 0.2), (0.4, 0.2), (0.4, 0.02)],
                vec![(0.5, 0.2), (0.5, 0.62)],
                vec![(0.08, 0.3), (0.5, 0.38), (0.92, 0.3)],
                vec![(0.12, 0.98), (0.5, 0.62), (0.88, 0.98)],
            ],
            GlyphShape::Fish => vec![
                vec![(0.02, 0.5), (0.3, 0.04), (0.62, 0.2), (0.78, 0.5), (0.62, 0.8), (0.3, 0.96), (0.02, 0.5)],
                vec![(0.98, 0.1), (0.78, 0.5), (0.98, 0.9)],
            ],
            GlyphShape::Wheel => {
                let ring: Vec<(f64, f64)> = (0..=16)
                    .map(|k| {
                        let t = k as f64 / 16.0 * std::f64::consts::TAU;
                        (0.5 + 0.46 * t.cos(), 0.5 + 0.46 * t.sin())
                    })
                    .collect();
                vec![ring, vec![(0.04, 0.5), (0.96, 0.5)], vec![(0.5, 0.04), (0.5, 0.96)]]
            }
            GlyphShape::Comb => vec![
                vec![(0.02, 0.1), (0.98, 0.1)],
                vec![(0.06, 0.1), (0.06, 0.95)],
                vec![(0.35, 0.1), (0.35, 0.95)],
                vec![(0.65, 0.1), (0.65, 0.95)],
                vec![(0.94, 0.1), (0.94, 0.95)],
            ],
            GlyphShape::Arrow => vec![
                vec![(0.5, 0.02), (0.5, 0.98)],
                vec![(0.08, 0.4), (0.5, 0.02), (0.92, 0.4)],
            ],
            GlyphShape::Ladder => vec![
                vec![(0.12, 0.02), (0.12, 0.98)],
                vec![(0.88, 0.02), (0.88, 0.98)],
                vec![(0.12, 0.3), (0.88, 0.3)],
                vec![(0.12, 0.7), (0.88, 0.7)],
            ],
            GlyphShape::Fork => vec![
                vec![(0.5, 0.98), (0.5, 0.45)],
                vec![(0.06, 0.02), (0.5, 0.45), (0.94, 0.02)],
                vec![(0.5, 0.45), (0.5, 0.02)],
            ],
            GlyphShape::Triangle => vec![vec![(0.5, 0.02), (0.96, 0.96), (0.04, 0.96), (0.5, 0.02)]],
        }
    }
}

const BACKGROUND: [f64; 3] = [38.0, 36.0, 34.0];
const SURFACE: [f64; 3] = [196.0, 168.0, 132.0];
const CARVED: [f64; 3] = [88.0, 70.0, 56.0];

/// Float RGB canvas.
struct Canvas {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl Canvas {
    fn new(width: usize, height: usize, fill: [f64; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    fn blend(&mut self, x: usize, y: usize, color: [f64; 3], alpha: f64) {
        let px = &mut self.data[y * self.width + x];
        for c in 0..3 {
            px[c] = px[c] * (1.0 - alpha) + color[c] * alpha;
        }
    }

    fn into_image(self, rng: &mut ChaCha8Rng, grain: f64) -> RasterImage {
        let mut out = Vec::with_capacity(self.width * self.height * 3);
        for px in self.data {
            let n = gaussian(rng) * grain;
            for v in px {
                out.push((v + n).round().clamp(0.0, 255.0) as u8);
            }
        }
        RasterImage::new(self.width, self.height, 3, out).expect("canvas size")
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Draws thick polylines; returns the tight box of pixels at least half
/// covered, or `None` when nothing was drawn.
fn draw_strokes(
    canvas: &mut Canvas,
    lines: &[Vec<(f64, f64)>],
    half_width: f64,
    color: [f64; 3],
    mut keep: impl FnMut(usize, usize) -> bool,
) -> Option<Box> {
    let segs: Vec<((f64, f64), (f64, f64))> =
        lines.iter().flat_map(|l| l.windows(2).map(|w| (w[0], w[1]))).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(a, b) in &segs {
        x0 = x0.min(a.0.min(b.0));
        y0 = y0.min(a.1.min(b.1));
        x1 = x1.max(a.0.max(b.0));
        y1 = y1.max(a.1.max(b.1));
    }
    let pad = half_width + 1.0;
    let xs = (x0 - pad).floor().max(0.0) as usize..((x1 + pad).ceil() as usize + 1).min(canvas.width);
    let ys = (y0 - pad).floor().max(0.0) as usize..((y1 + pad).ceil() as usize + 1).min(canvas.height);
    let mut bbox: Option<Box> = None;
    for y in ys {
        for x in xs.clone() {
            let p = (x as f64, y as f64);
            let d = segs.iter().map(|&(a, b)| segment_distance(p, a, b)).fold(f64::MAX, f64::min);
            let coverage = (half_width + 0.5 - d).clamp(0.0, 1.0);
            if coverage > 0.0 && keep(x, y) {
                canvas.blend(x, y, color, coverage);
                if coverage >= 0.5 {
                    let px = Box::new(x as u32, y as u32, 1, 1);
                    bbox = Some(bbox.map_or(px, |b| b.union(&px)));
                }
            }
        }
    }
    bbox
}

fn jitter_shape(shape: GlyphShape, rng: &mut impl Rng, amount: f64) -> Vec<Vec<(f64, f64)>> {
    shape
        .strokes()
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|(x, y)| {
                    (
                        (x + rng.gen_range(-amount..=amount)).clamp(0.0, 1.0),
                        (y + rng.gen_range(-amount..=amount)).clamp(0.0, 1.0),
                    )
                })
                .collect()
        })
        .collect()
}

fn place(lines: &[Vec<(f64, f64)>], x: f64, y: f64, w: f64, h: f64) -> Vec<Vec<(f64, f64)>> {
    lines
        .iter()
        .map(|l| l.iter().map(|&(u, v)| (x + u * w, y + v * h)).collect())
        .collect()
}

fn pick_shapes(spec: &SyntheticSealSpec, rng: &mut impl Rng) -> Vec<GlyphShape> {
    let n = spec.glyph_count;
    let mut jar = vec![false; n];
    match spec.jar_count {
        Some(k) => {
            let mut idx: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), rng);
            for &i in idx.iter().take(k.min(n)) {
                jar[i] = true;
            }
        }
        None => jar.iter_mut().for_each(|j| *j = rng.gen_bool(0.3)),
    }
    jar.into_iter()
        .map(|j| {
            if j {
                GlyphShape::Jar
            } else {
                GlyphShape::OTHERS[rng.gen_range(0..GlyphShape::OTHERS.len())]
            }
        })
        .collect()
}

fn icon_strokes(rng: &mut impl Rng) -> (Vec<Vec<(f64, f64)>>, Vec<(f64, f64, f64, f64)>) {
    // A horned quadruped: an elliptical body plus legs, neck, head and horn.
    let body = (0.5, 0.42, 0.34, 0.2);
    let j = |rng: &mut dyn rand::RngCore, v: f64| v + rng.gen_range(-0.03..=0.03);
    let legs = [0.26, 0.4, 0.6, 0.74]
        .iter()
        .map(|&x| vec![(j(rng, x), 0.55), (j(rng, x), 0.98)])
        .collect::<Vec<_>>();
    let mut lines = legs;
    lines.push(vec![(0.8, 0.35), (0.9, 0.18), (0.97, 0.2)]);
    lines.push(vec![(0.9, 0.18), (0.86, 0.02)]);
    lines.push(vec![(0.17, 0.38), (0.03, 0.6)]);
    (lines, vec![body])
}

fn fill_ellipse(canvas: &mut Canvas, cx: f64, cy: f64, rx: f64, ry: f64, color: [f64; 3]) -> Box {
    let mut bbox: Option<Box> = None;
    let ys = (cy - ry - 1.0).max(0.0) as usize..((cy + ry + 2.0) as usize).min(canvas.height);
    let xs = (cx - rx - 1.0).max(0.0) as usize..((cx + rx + 2.0) as usize).min(canvas.width);
    for y in ys {
        for x in xs.clone() {
            let d = ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2);
            let coverage = ((1.0 - d.sqrt()) * rx.min(ry) + 0.5).clamp(0.0, 1.0);
            if coverage > 0.0 {
                canvas.blend(x, y, color, coverage);
                if coverage >= 0.5 {
                    let px = Box::new(x as u32, y as u32, 1, 1);
                    bbox = Some(bbox.map_or(px, |b| b.union(&px)));
                }
            }
        }
    }
    bbox.expect("ellipse inside canvas")
}

fn paint_surface(canvas: &mut Canvas, seal: &Box, rng: &mut impl Rng, tint: [f64; 3]) {
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.01..0.05),
                rng.gen_range(0.01..0.05),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(2.0..5.0),
            )
        })
        .collect();
    let radius = 14.0;
    for y in seal.y..seal.bottom() {
        for x in seal.x..seal.right() {
            let (fx, fy) = ((x - seal.x) as f64 + 0.5, (y - seal.y) as f64 + 0.5);
            let (w, h) = (seal.w as f64, seal.h as f64);
            let cx = fx.clamp(radius, w - radius);
            let cy = fy.clamp(radius, h - radius);
            if (fx - cx).hypot(fy - cy) > radius {
                continue;
            }
            let shade: f64 = waves.iter().map(|&(a, b, p, amp)| amp * (a * fx + b * fy + p).sin()).sum();
            let c = [tint[0] + shade, tint[1] + shade, tint[2] + shade];
            canvas.data[y as usize * canvas.width + x as usize] = c;
        }
    }
}

/// Renders one seal according to `spec`.
pub fn generate_seal(spec: &SyntheticSealSpec) -> SyntheticSeal {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = spec.noise.clamp(0.0, 1.0);
    let (iw, ih) = (spec.width as f64, spec.height as f64);
    let mut canvas = Canvas::new(spec.width, spec.height, BACKGROUND);

    let sw = (iw * rng.gen_range(0.56..0.7)).round();
    let sh = (ih * rng.gen_range(0.62..0.76)).round();
    let sx = ((iw - sw) * rng.gen_range(0.3..0.7)).round();
    let sy = ((ih - sh) * rng.gen_range(0.3..0.7)).round();
    let seal = Box::new(sx as u32, sy as u32, sw as u32, sh as u32);
    let tint_shift = rng.gen_range(-12.0..12.0);
    let tint = SURFACE.map(|v| v + tint_shift);
    paint_surface(&mut canvas, &seal, &mut rng, tint);
    let carved = CARVED.map(|v| v + tint_shift * 0.5);

    let shapes = pick_shapes(spec, &mut rng);
    let n = shapes.len();
    let margin = 0.07;
    let horizontal = spec.layout == Layout::Horizontal;
    let gap = rng.gen_range(1.0..3.0);
    let (glyph_w, glyph_h) = if horizontal {
        let avail = sw * (1.0 - 2.0 * margin);
        let max_w = ((avail - gap * (n as f64 - 1.0)) / n as f64).min(sh * 0.2);
        let w = (max_w * rng.gen_range(0.75..0.95)).floor();
        (w, (w * rng.gen_range(1.1..1.3)).floor())
    } else {
        let avail = sh * (1.0 - 2.0 * margin);
        let max_h = ((avail - gap * (n as f64 - 1.0)) / n as f64).min(sw * 0.22);
        let h = (max_h * rng.gen_range(0.8..0.95)).floor();
        ((h * rng.gen_range(0.8..0.95)).floor(), h)
    };
    let half_width = (glyph_w.min(glyph_h) * rng.gen_range(0.06..0.075)).max(2.5);
    let strokes: Vec<_> = shapes.iter().map(|s| jitter_shape(*s, &mut rng, 0.03)).collect();
    // Inked extent of each glyph along the reading axis, in unit-cell
    // coordinates; glyphs are packed so `gap` pixels separate the ink.
    let cell = if horizontal { glyph_w } else { glyph_h };
    let extents: Vec<(f64, f64)> = strokes
        .iter()
        .map(|lines| {
            let along = lines.iter().flatten().map(|&(u, v)| if horizontal { u } else { v });
            along.fold((f64::MAX, f64::MIN), |(lo, hi), t| (lo.min(t), hi.max(t)))
        })
        .collect();
    let used: f64 =
        extents.iter().map(|(lo, hi)| (hi - lo) * cell + 2.0 * half_width).sum::<f64>() + gap * (n as f64 - 1.0);
    let (strip_x, strip_y, icon_area);
    if horizontal {
        strip_x = sx + ((sw - used) * rng.gen_range(0.35..0.65)).round();
        strip_y = sy + (sh * rng.gen_range(0.08..0.12)).round();
        let top = strip_y + glyph_h + sh * 0.1;
        icon_area = (sx + sw * 0.2, top, sw * 0.6, sy + sh * (1.0 - margin) - top);
    } else {
        strip_y = sy + ((sh - used) * rng.gen_range(0.35..0.65)).round();
        strip_x = sx + (sw * rng.gen_range(0.07..0.1)).round();
        let left = strip_x + glyph_w + sw * 0.1;
        icon_area = (left, sy + sh * 0.2, sx + sw * (1.0 - margin) - left, sh * 0.6);
    }

    let mut glyphs = Vec::with_capacity(n);
    let mut cursor = if horizontal { strip_x } else { strip_y };
    for (lines, (lo, hi)) in strokes.iter().zip(&extents) {
        let origin = cursor - (lo * cell - half_width);
        cursor = origin + hi * cell + half_width + gap;
        let jitter = rng.gen_range(-2.0..=2.0);
        let (gx, gy) = if horizontal {
            (origin, strip_y + jitter)
        } else {
            (strip_x + jitter, origin)
        };
        let placed = place(lines, gx, gy, glyph_w, glyph_h);
        glyphs.push(draw_strokes(&mut canvas, &placed, half_width, carved, |_, _| true).expect("glyph drawn"));
    }
    let text = glyphs.iter().skip(1).fold(glyphs[0], |acc, b| acc.union(b));

    let icon = spec.icon.then(|| {
        let (ax, ay, aw, ah) = icon_area;
        let (lines, bodies) = icon_strokes(&mut rng);
        let placed = place(&lines, ax, ay, aw, ah);
        let mut bbox = draw_strokes(&mut canvas, &placed, half_width * 1.3, carved, |_, _| true).expect("icon");
        for (cx, cy, rx, ry) in bodies {
            let b = fill_ellipse(&mut canvas, ax + cx * aw, ay + cy * ah, rx * aw, ry * ah, carved);
            bbox = bbox.union(&b);
        }
        bbox
    });

    apply_wear(&mut canvas, &seal, &glyphs, noise, tint, carved, &mut rng);
    let grain = 2.0 + 10.0 * noise;
    let image = canvas.into_image(&mut rng, grain);
    SyntheticSeal {
        image,
        truth: GroundTruth {
            seal,
            text,
            glyphs,
            labels: shapes.iter().map(|s| s.label()).collect(),
            icon,
        },
    }
}

/// Scratches across the seal and worn spots on the glyph strokes.
fn apply_wear(
    canvas: &mut Canvas,
    seal: &Box,
    glyphs: &[Box],
    noise: f64,
    tint: [f64; 3],
    carved: [f64; 3],
    rng: &mut impl Rng,
) {
    if noise <= 0.0 {
        return;
    }
    let inside = |x: usize, y: usize| seal.contains(&Box::new(x as u32, y as u32, 1, 1));
    let scratch_color = [
        (tint[0] + carved[0]) / 2.0 + 20.0,
        (tint[1] + carved[1]) / 2.0 + 20.0,
        (tint[2] + carved[2]) / 2.0 + 20.0,
    ];
    let (x0, y0, w, h) = (seal.x as f64, seal.y as f64, seal.w as f64, seal.h as f64);
    for _ in 0..(6.0 * noise).round() as usize {
        let a = (x0 + rng.gen_range(0.0..w), y0 + rng.gen_range(0.0..h));
        let len = rng.gen_range(0.1..0.3) * w;
        let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let b = (a.0 + len * t.cos(), a.1 + len * t.sin());
        let _ = draw_strokes(canvas, &[vec![a, b]], 0.6, scratch_color, inside);
    }
    for _ in 0..(8.0 * noise).round() as usize {
        let g = glyphs[rng.gen_range(0..glyphs.len())];
        let c = (
            g.x as f64 + rng.gen_range(0.0..g.w as f64),
            g.y as f64 + rng.gen_range(0.0..g.h as f64),
        );
        let r = rng.gen_range(1.5..3.0);
        let _ = draw_strokes(canvas, &[vec![c, c]], r, tint, |_, _| true);
    }
}

/// Crops of single glyphs with a small random margin, `per_class` of each
/// label, interleaved jar / no-jar.
pub fn generate_glyph_corpus(per_class: usize, seed: u64) -> Vec<(RasterImage, GlyphLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_class * 2);
    for i in 0..per_class * 2 {
        let shape = if i % 2 == 0 {
            GlyphShape::Jar
        } else {
            GlyphShape::OTHERS[rng.gen_range(0..GlyphShape::OTHERS.len())]
        };
        let noise = rng.gen_range(0.0..0.6);
        out.push((render_glyph_tile(shape, noise, &mut rng), shape.label()));
    }
    out
}

fn render_glyph_tile(shape: GlyphShape, noise: f64, rng: &mut ChaCha8Rng) -> RasterImage {
    let gw = rng.gen_range(36.0..56.0f64).floor();
    let gh = (gw * rng.gen_range(1.0..1.35)).floor();
    let pad = 12.0;
    let (tw, th) = ((gw + 2.0 * pad) as usize, (gh + 2.0 * pad) as usize);
    let shift = rng.gen_range(-12.0..12.0);
    let tint = SURFACE.map(|v| v + shift);
    let carved = CARVED.map(|v| v + shift * 0.5);
    let mut canvas = Canvas::new(tw, th, tint);
    let tile = Box::new(0, 0, tw as u32, th as u32);
    paint_surface(&mut canvas, &tile, rng, tint);
    let half_width = (gw.min(gh) * rng.gen_range(0.06..0.075)).max(2.5);
    let lines = place(&jitter_shape(shape, rng, 0.03), pad, pad, gw, gh);
    let bbox = draw_strokes(&mut canvas, &lines, half_width, carved, |_, _| true).expect("glyph drawn");
    apply_wear(&mut canvas, &tile, &[bbox], noise * 0.5, tint, carved, rng);
    let img = canvas.into_image(rng, 2.0 + 10.0 * noise);
    let m = rng.gen_range(0..4u32);
    let crop = bbox.expand_within(m, &tile);
    img.crop(&crop).expect("crop inside tile")
}

/// A clean horizontal text strip of `shapes` separated by `gap` pixels,
/// with the true glyph boxes.
pub fn generate_glyph_strip(shapes: &[GlyphShape], gap: u32, seed: u64) -> (RasterImage, Vec<Box>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (gw, gh, pad) = (40.0, 50.0, 10.0);
    let n = shapes.len() as f64;
    let tw = (2.0 * pad + n * gw + (n - 1.0).max(0.0) * gap as f64) as usize;
    let th = (gh + 2.0 * pad) as usize;
    let mut canvas = Canvas::new(tw, th, SURFACE);
    let mut boxes = Vec::with_capacity(shapes.len());
    for (i, shape) in shapes.iter().enumerate() {
        let x = pad + i as f64 * (gw + gap as f64);
        // Stroke centres sit half a stroke inside the cell so neighbouring
        // glyphs keep the requested gap.
        let hw = 3.0;
        let lines = place(&shape.strokes(), x + hw, pad + hw, gw - 2.0 * hw, gh - 2.0 * hw);
        boxes.push(draw_strokes(&mut canvas, &lines, hw, CARVED, |_, _| true).expect("glyph drawn"));
    }
    (canvas.into_image(&mut rng, 2.0), boxes)
}

/// Region-classifier training crops cut from generated seals: glyph runs
/// (text), iconography and bare surface (no-text), and mixtures (both).
pub fn generate_region_corpus(seals: usize, seed: u64) -> Vec<(RasterImage, RegionLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for s in 0..seals {
        let spec = SyntheticSealSpec {
            seed: seed.wrapping_mul(1_000_003).wrapping_add(s as u64),
            noise: rng.gen_range(0.0..0.7),
            glyph_count: rng.gen_range(3..=6),
            ..Default::default()
        };
        let seal = generate_seal(&spec);
        let t = &seal.truth;
        let bounds = t.seal;
        let jitter = |b: Box, rng: &mut ChaCha8Rng| {
            let m = rng.gen_range(0..5u32);
            b.expand_within(m, &bounds)
        };
        let push = |b: Box, label: RegionLabel, out: &mut Vec<(RasterImage, RegionLabel)>| {
            if let Ok(c) = seal.image.crop(&b) {
                out.push((c, label));
            }
        };
        // Text: single glyphs, runs and the whole strip.
        let n = t.glyphs.len();
        for _ in 0..3 {
            let i = rng.gen_range(0..n);
            let b = jitter(t.glyphs[i], &mut rng);
            push(b, RegionLabel::Text, &mut out);
        }
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(i..n);
        let run = t.glyphs[i..=j].iter().fold(t.glyphs[i], |a, b| a.union(b));
        push(jitter(run, &mut rng), RegionLabel::Text, &mut out);
        push(jitter(t.text, &mut rng), RegionLabel::Text, &mut out);

        // No-text: the icon, its parts, bare surface, seal rim.
        if let Some(icon) = t.icon {
            push(jitter(icon, &mut rng), RegionLabel::NoText, &mut out);
            let half = Box::new(icon.x, icon.y, (icon.w / 2).max(1), icon.h);
            push(jitter(half, &mut rng), RegionLabel::NoText, &mut out);
            let low = Box::new(icon.x, icon.y + icon.h / 2, icon.w, (icon.h - icon.h / 2).max(1));
            push(low, RegionLabel::NoText, &mut out);
        }
        for _ in 0..2 {
            if let Some(b) = surface_patch(&seal.truth, &mut rng) {
                push(b, RegionLabel::NoText, &mut out);
            }
        }

        // Both: text strip with some or all of the icon, or the whole seal.
        if let Some(icon) = t.icon {
            push(jitter(t.text.union(&icon), &mut rng), RegionLabel::Both, &mut out);
            let g = t.glyphs[rng.gen_range(0..n)];
            push(jitter(g.union(&icon), &mut rng), RegionLabel::Both, &mut out);
        }
        push(t.seal, RegionLabel::Both, &mut out);
    }
    out
}

/// A random box on the seal that avoids glyphs and the icon.
fn surface_patch(t: &GroundTruth, rng: &mut impl Rng) -> Option<Box> {
    for _ in 0..50 {
        let w = rng.gen_range(20..=(t.seal.w / 3).max(21));
        let h = rng.gen_range(20..=(t.seal.h / 3).max(21));
        if w >= t.seal.w || h >= t.seal.h {
            return None;
        }
        let x = t.seal.x + rng.gen_range(0..t.seal.w - w);
        let y = t.seal.y + rng.gen_range(0..t.seal.h - h);
        let b = Box::new(x, y, w, h);
        let clear = b.intersection(&t.text).is_none() && t.icon.map_or(true, |i| b.intersection(&i).is_none());
        if clear {
            return Some(b);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_boxes_nest() {
        for seed in 0..10 {
            for layout in [Layout::Horizontal, Layout::Vertical] {
                let s = generate_seal(&SyntheticSealSpec {
                    seed,
                    layout,
                    noise: 0.5,
                    ..Default::default()
                });
                let t = &s.truth;
                assert!(s.image.bounds().contains(&t.seal));
                assert!(t.seal.contains(&t.text));
                assert_eq!(t.glyphs.len(), 5);
                assert_eq!(t.labels.len(), 5);
                for g in &t.glyphs {
                    assert!(t.text.contains(g));
                }
                for pair in t.glyphs.windows(2) {
                    assert!(pair[0].intersection(&pair[1]).is_none());
                }
                let icon = t.icon.unwrap();
                assert!(t.seal.contains(&icon));
                assert!(icon.intersection(&t.text).is_none());
            }
        }
    }

    #[test]
    fn jar_count_is_honoured() {
        let s = generate_seal(&SyntheticSealSpec {
            jar_count: Some(2),
            seed: 4,
            ..Default::default()
        });
        assert_eq!(s.truth.labels.iter().filter(|&&l| l == GlyphLabel::Jar).count(), 2);
    }

    #[test]
    fn generation_is_seeded() {
        let spec = SyntheticSealSpec {
            seed: 12,
            noise: 0.3,
            ..Default::default()
        };
        assert_eq!(generate_seal(&spec).image, generate_seal(&spec).image);
        let other = SyntheticSealSpec { seed: 13, ..spec.clone() };
        assert_ne!(generate_seal(&spec).image, generate_seal(&other).image);
    }

    #[test]
    fn glyph_corpus_is_balanced() {
        let corpus = generate_glyph_corpus(20, 1);
        let jars = corpus.iter().filter(|(_, l)| *l == GlyphLabel::Jar).count();
        assert_eq!((corpus.len(), jars), (40, 20));
    }

    #[test]
    fn region_corpus_has_every_label() {
        let corpus = generate_region_corpus(3, 2);
        for l in [RegionLabel::Text, RegionLabel::NoText, RegionLabel::Both] {
            assert!(corpus.iter().any(|(_, x)| *x == l));
        }
    }
}
