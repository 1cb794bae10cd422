//! Seeded geometric augmentation for training crops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::RasterImage;

/// Augmentation family; parameters are drawn when a plan is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    HFlip,
    VFlip,
    Rotate,
    Shear,
    Scale,
    Translate,
}

/// A concrete transform. Affine ops act about the image centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentOp {
    HFlip,
    VFlip,
    Rotate { degrees: f64 },
    Shear { factor: f64 },
    Scale { factor: f64 },
    /// Offsets as fractions of width / height.
    Translate { dx: f64, dy: f64 },
}

pub const MAX_ROTATE_DEGREES: f64 = 15.0;
pub const MAX_SHEAR: f64 = 0.2;
pub const SCALE_RANGE: (f64, f64) = (0.8, 1.2);
pub const MAX_TRANSLATE: f64 = 0.1;

impl AugmentKind {
    pub const ALL: [AugmentKind; 6] = [
        AugmentKind::HFlip,
        AugmentKind::VFlip,
        AugmentKind::Rotate,
        AugmentKind::Shear,
        AugmentKind::Scale,
        AugmentKind::Translate,
    ];

    pub fn sample(self, rng: &mut impl Rng) -> AugmentOp {
        match self {
            AugmentKind::HFlip => AugmentOp::HFlip,
            AugmentKind::VFlip => AugmentOp::VFlip,
            AugmentKind::Rotate => AugmentOp::Rotate {
                degrees: rng.gen_range(-MAX_ROTATE_DEGREES..=MAX_ROTATE_DEGREES),
            },
            AugmentKind::Shear => AugmentOp::Shear {
                factor: rng.gen_range(-MAX_SHEAR..=MAX_SHEAR),
            },
            AugmentKind::Scale => AugmentOp::Scale {
                factor: rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1),
            },
            AugmentKind::Translate => AugmentOp::Translate {
                dx: rng.gen_range(-MAX_TRANSLATE..=MAX_TRANSLATE),
                dy: rng.gen_range(-MAX_TRANSLATE..=MAX_TRANSLATE),
            },
        }
    }
}

/// Which transforms to produce, one output per entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub kinds: Vec<AugmentKind>,
    pub seed: u64,
}

impl AugmentPlan {
    /// Concrete parameters for every entry of the plan.
    pub fn ops(&self) -> Vec<AugmentOp> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.kinds.iter().map(|k| k.sample(&mut rng)).collect()
    }
}

/// One augmented copy per plan entry, each the size of `img`.
pub fn augment(img: &RasterImage, plan: &AugmentPlan) -> Vec<RasterImage> {
    plan.ops().iter().map(|op| op.apply(img)).collect()
}

impl AugmentOp {
    pub fn apply(&self, img: &RasterImage) -> RasterImage {
        let (w, h) = (img.width(), img.height());
        match *self {
            AugmentOp::HFlip => remap_exact(img, |x, y| (w - 1 - x, y)),
            AugmentOp::VFlip => remap_exact(img, |x, y| (x, h - 1 - y)),
            AugmentOp::Rotate { degrees } => {
                let (s, c) = degrees.to_radians().sin_cos();
                affine(img, [[c, -s], [s, c]], (0.0, 0.0))
            }
            AugmentOp::Shear { factor } => affine(img, [[1.0, factor], [0.0, 1.0]], (0.0, 0.0)),
            AugmentOp::Scale { factor } => affine(img, [[factor, 0.0], [0.0, factor]], (0.0, 0.0)),
            AugmentOp::Translate { dx, dy } => {
                affine(img, [[1.0, 0.0], [0.0, 1.0]], (dx * w as f64, dy * h as f64))
            }
        }
    }
}

fn remap_exact(img: &RasterImage, src: impl Fn(usize, usize) -> (usize, usize)) -> RasterImage {
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (sx, sy) = src(x, y);
            for c in 0..img.channels() {
                out.set(x, y, c, img.get(sx, sy, c));
            }
        }
    }
    out
}

/// Per-channel mean of the border pixels, used to fill uncovered areas.
fn border_fill(img: &RasterImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let mut sums = vec![0u64; img.channels()];
    let mut n = 0u64;
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                for (c, s) in sums.iter_mut().enumerate() {
                    *s += img.get(x, y, c) as u64;
                }
                n += 1;
            }
        }
    }
    sums.iter().map(|s| ((*s as f64 / n as f64).round()) as u8).collect()
}

/// Forward map `p' = m·(p − centre) + centre + t`, sampled by inverse mapping
/// with bilinear interpolation.
fn affine(img: &RasterImage, m: [[f64; 2]; 2], t: (f64, f64)) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let fill = border_fill(img);
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 - cx - t.0, y as f64 - cy - t.1);
            let sx = inv[0][0] * px + inv[0][1] * py + cx;
            let sy = inv[1][0] * px + inv[1][1] * py + cy;
            for c in 0..img.channels() {
                out.set(x, y, c, bilinear(img, sx, sy, c).unwrap_or(fill[c]));
            }
        }
    }
    out
}

fn bilinear(img: &RasterImage, x: f64, y: f64, c: usize) -> Option<u8> {
    let eps = 1e-9;
    let (w, h) = (img.width() as f64, img.height() as f64);
    if x < -eps || y < -eps || x > w - 1.0 + eps || y > h - 1.0 + eps {
        return None;
    }
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(img.width() - 1), (y0 + 1).min(img.height() - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let v = |xx, yy| img.get(xx, yy, c) as f64;
    let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
    let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
    Some((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert_eq, proptest};

    fn sample_image(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 3).map(|_| rng.gen()).collect();
        RasterImage::new(w, h, 3, data).unwrap()
    }

    #[test]
    fn identity_parameters_are_identities() {
        let img = sample_image(13, 9, 1);
        for op in [
            AugmentOp::Rotate { degrees: 0.0 },
            AugmentOp::Scale { factor: 1.0 },
            AugmentOp::Translate { dx: 0.0, dy: 0.0 },
            AugmentOp::Shear { factor: 0.0 },
        ] {
            assert_eq!(op.apply(&img), img, "{op:?}");
        }
    }

    #[test]
    fn hflip_moves_columns() {
        let img = RasterImage::from_fn_gray(3, 1, |x, _| x as u8);
        assert_eq!(AugmentOp::HFlip.apply(&img).data(), &[2, 1, 0]);
    }

    #[test]
    fn translate_shifts_and_fills_with_border_mean() {
        let img = RasterImage::from_fn_gray(10, 10, |x, y| if x == 5 && (2..8).contains(&y) { 200 } else { 10 });
        let out = AugmentOp::Translate { dx: 0.1, dy: 0.0 }.apply(&img);
        assert_eq!(out.get(6, 4, 0), 200);
        assert_eq!(out.get(5, 4, 0), 10);
        assert_eq!(out.get(0, 4, 0), 10);
    }

    #[test]
    fn rotate_quarter_turn_of_square() {
        let img = RasterImage::from_fn_gray(5, 5, |x, y| (y * 5 + x) as u8);
        let out = AugmentOp::Rotate { degrees: 90.0 }.apply(&img);
        // (x, y) in the output comes from (y, 4 - x) in the input.
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(out.get(x, y, 0), img.get(y, 4 - x, 0));
            }
        }
    }

    #[test]
    fn plan_is_seeded_and_sized() {
        let img = sample_image(16, 12, 2);
        let plan = AugmentPlan {
            kinds: AugmentKind::ALL.to_vec(),
            seed: 9,
        };
        let a = augment(&img, &plan);
        assert_eq!(a, augment(&img, &plan));
        assert_eq!(a.len(), 6);
        assert!(a.iter().all(|o| o.width() == 16 && o.height() == 12 && o.channels() == 3));
        for op in plan.ops() {
            match op {
                AugmentOp::Rotate { degrees } => assert!(degrees.abs() <= 15.0),
                AugmentOp::Shear { factor } => assert!(factor.abs() <= 0.2),
                AugmentOp::Scale { factor } => assert!((0.8..=1.2).contains(&factor)),
                AugmentOp::Translate { dx, dy } => assert!(dx.abs() <= 0.1 && dy.abs() <= 0.1),
                _ => {}
            }
        }
    }

    proptest! {
        #[test]
        fn flips_are_involutions(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let img = sample_image(w, h, seed);
            prop_assert_eq!(AugmentOp::HFlip.apply(&AugmentOp::HFlip.apply(&img)), img.clone());
            prop_assert_eq!(AugmentOp::VFlip.apply(&AugmentOp::VFlip.apply(&img)), img);
        }
    }
}
