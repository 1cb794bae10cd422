//! Graph-based over-segmentation and hierarchical similarity grouping.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Box;
use crate::imaging::{gaussian_blur_plane, reflect, GaussianSpec, RasterImage};

pub const COLOR_BINS: usize = 25;
pub const TEXTURE_ORIENTATIONS: usize = 8;
pub const TEXTURE_BINS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub scale: f64,
    pub sigma: f64,
    pub min_size: usize,
    pub min_area: u64,
}

impl SegmentationParams {
    pub fn new(scale: f64, min_size: usize) -> Self {
        Self {
            scale,
            sigma: 0.8,
            min_size,
            min_area: 2000,
        }
    }

    /// Scales {350, 450, 500} × minimum sizes {30, 60, 120}.
    pub fn default_grid() -> Vec<SegmentationParams> {
        let mut grid = Vec::with_capacity(9);
        for scale in [350.0, 450.0, 500.0] {
            for min_size in [30, 60, 120] {
                grid.push(SegmentationParams::new(scale, min_size));
            }
        }
        grid
    }

    pub fn is_valid(&self) -> bool {
        self.scale > 0.0 && self.sigma > 0.0 && self.min_size >= 1 && self.min_area >= 1
    }
}

/// Per-pixel segment ids, contiguous from 0 in raster order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub segment_count: usize,
}

impl SegmentMap {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.segment_count];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
    internal: Vec<f64>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn join(&mut self, a: u32, b: u32, weight: f64) {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.internal[big as usize] = weight;
    }
}

fn smoothed_planes(img: &RasterImage, sigma: f64) -> Vec<Vec<f64>> {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let spec = GaussianSpec::new(sigma);
    (0..c)
        .map(|ch| {
            let plane: Vec<f64> = img.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
            gaussian_blur_plane(&plane, w, h, &spec)
        })
        .collect()
}

/// Felzenszwalb–Huttenlocher segmentation on an 8-connected grid with
/// Euclidean colour distances, followed by the minimum-size merge pass.
pub fn felzenszwalb(img: &RasterImage, p: &SegmentationParams) -> SegmentMap {
    let (w, h) = (img.width(), img.height());
    let planes = smoothed_planes(img, p.sigma);
    let dist = |a: usize, b: usize| planes.iter().map(|pl| (pl[a] - pl[b]).powi(2)).sum::<f64>().sqrt();

    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(w * h * 4);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut push = |j: usize| edges.push((dist(i, j), i as u32, j as u32));
            if x + 1 < w {
                push(i + 1);
            }
            if y + 1 < h {
                push(i + w);
                if x + 1 < w {
                    push(i + w + 1);
                }
                if x > 0 {
                    push(i + w - 1);
                }
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut sets = DisjointSet::new(w * h);
    for &(weight, a, b) in &edges {
        let (ra, rb) = (sets.find(a), sets.find(b));
        if ra == rb {
            continue;
        }
        let ta = sets.internal[ra as usize] + p.scale / sets.size[ra as usize] as f64;
        let tb = sets.internal[rb as usize] + p.scale / sets.size[rb as usize] as f64;
        if weight <= ta.min(tb) {
            sets.join(ra, rb, weight);
        }
    }
    for &(_, a, b) in &edges {
        let (ra, rb) = (sets.find(a), sets.find(b));
        let small = |r: u32| (sets.size[r as usize] as usize) < p.min_size;
        if ra != rb && (small(ra) || small(rb)) {
            let weight = sets.internal[ra as usize].max(sets.internal[rb as usize]);
            sets.join(ra, rb, weight);
        }
    }

    let mut ids = vec![u32::MAX; w * h];
    let mut labels = Vec::with_capacity(w * h);
    let mut count = 0u32;
    for i in 0..w * h {
        let r = sets.find(i as u32) as usize;
        if ids[r] == u32::MAX {
            ids[r] = count;
            count += 1;
        }
        labels.push(ids[r]);
    }
    SegmentMap {
        width: w,
        height: h,
        labels,
        segment_count: count as usize,
    }
}

/// A region of the grouping hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionNode {
    pub id: usize,
    /// Sorted ids of the initial segments covered by this region.
    pub segments: Vec<u32>,
    pub bbox: Box,
    pub size: u64,
    pub color_hist: Vec<f64>,
    pub texture_hist: Vec<f64>,
}

fn intersection(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.min(*y)).sum()
}

/// Colour + texture + size + fill similarity, in `[0, 4]`.
pub fn similarity(a: &RegionNode, b: &RegionNode, image_area: u64) -> f64 {
    let area = image_area as f64;
    let s_color = intersection(&a.color_hist, &b.color_hist);
    let s_texture = intersection(&a.texture_hist, &b.texture_hist);
    let joint = (a.size + b.size) as f64;
    let s_size = 1.0 - joint / area;
    let s_fill = 1.0 - (a.bbox.union(&b.bbox).area() as f64 - joint) / area;
    s_color + s_texture + s_size + s_fill
}

/// Per-pixel histogram bin indices, shared by every parameter combination.
pub struct PixelFeatures {
    width: usize,
    height: usize,
    channels: usize,
    /// `channels` colour bins per pixel.
    color: Vec<u8>,
    /// `channels × TEXTURE_ORIENTATIONS` texture bins per pixel.
    texture: Vec<u8>,
}

impl PixelFeatures {
    pub fn new(img: &RasterImage) -> Self {
        let (w, h, c) = (img.width(), img.height(), img.channels());
        let color = img.data().iter().map(|&v| (v as usize * COLOR_BINS / 256) as u8).collect();
        let planes = smoothed_planes(img, 1.0);
        let per_pixel = c * TEXTURE_ORIENTATIONS;
        let mut texture = vec![0u8; w * h * per_pixel];
        let dirs: Vec<(f64, f64)> = (0..TEXTURE_ORIENTATIONS)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / TEXTURE_ORIENTATIONS as f64;
                (t.cos(), t.sin())
            })
            .collect();
        for (ch, plane) in planes.iter().enumerate() {
            let at = |x: isize, y: isize| plane[reflect(y, h) * w + reflect(x, w)];
            let mut responses = vec![0.0f64; w * h * TEXTURE_ORIENTATIONS];
            let mut peak = 0.0f64;
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
                    let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
                    let i = y as usize * w + x as usize;
                    for (k, (cx, cy)) in dirs.iter().enumerate() {
                        let r = (gx * cx + gy * cy).max(0.0);
                        responses[i * TEXTURE_ORIENTATIONS + k] = r;
                        peak = peak.max(r);
                    }
                }
            }
            for i in 0..w * h {
                for k in 0..TEXTURE_ORIENTATIONS {
                    let r = responses[i * TEXTURE_ORIENTATIONS + k];
                    let bin = if peak > 0.0 {
                        ((r / peak * TEXTURE_BINS as f64) as usize).min(TEXTURE_BINS - 1)
                    } else {
                        0
                    };
                    texture[i * per_pixel + ch * TEXTURE_ORIENTATIONS + k] = bin as u8;
                }
            }
        }
        Self {
            width: w,
            height: h,
            channels: c,
            color,
            texture,
        }
    }

    fn color_len(&self) -> usize {
        self.channels * COLOR_BINS
    }

    fn texture_len(&self) -> usize {
        self.channels * TEXTURE_ORIENTATIONS * TEXTURE_BINS
    }
}

fn normalise(hist: &mut [f64]) {
    let total: f64 = hist.iter().sum();
    if total > 0.0 {
        hist.iter_mut().for_each(|v| *v /= total);
    }
}

/// Initial regions (one per segment) and the segment adjacency pairs.
pub fn initial_regions(seg: &SegmentMap, feats: &PixelFeatures) -> (Vec<RegionNode>, Vec<(usize, usize)>) {
    assert_eq!((seg.width, seg.height), (feats.width, feats.height));
    let (w, h, n) = (seg.width, seg.height, seg.segment_count);
    let mut extent = vec![(u32::MAX, u32::MAX, 0u32, 0u32); n];
    let mut sizes = vec![0u64; n];
    let mut color = vec![vec![0.0; feats.color_len()]; n];
    let mut texture = vec![vec![0.0; feats.texture_len()]; n];
    let per_pixel = feats.channels * TEXTURE_ORIENTATIONS;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let s = seg.labels[i] as usize;
            let e = &mut extent[s];
            e.0 = e.0.min(x as u32);
            e.1 = e.1.min(y as u32);
            e.2 = e.2.max(x as u32);
            e.3 = e.3.max(y as u32);
            sizes[s] += 1;
            for ch in 0..feats.channels {
                color[s][ch * COLOR_BINS + feats.color[i * feats.channels + ch] as usize] += 1.0;
            }
            for j in 0..per_pixel {
                texture[s][j * TEXTURE_BINS + feats.texture[i * per_pixel + j] as usize] += 1.0;
            }
        }
    }
    let mut pairs = std::collections::BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let a = seg.labels[y * w + x] as usize;
            let mut see = |xx: usize, yy: usize| {
                let b = seg.labels[yy * w + xx] as usize;
                if a != b {
                    pairs.insert((a.min(b), a.max(b)));
                }
            };
            if x + 1 < w {
                see(x + 1, y);
            }
            if y + 1 < h {
                see(x, y + 1);
                if x + 1 < w {
                    see(x + 1, y + 1);
                }
                if x > 0 {
                    see(x - 1, y + 1);
                }
            }
        }
    }
    let regions = (0..n)
        .map(|s| {
            let (x0, y0, x1, y1) = extent[s];
            let mut c = std::mem::take(&mut color[s]);
            let mut t = std::mem::take(&mut texture[s]);
            normalise(&mut c);
            normalise(&mut t);
            RegionNode {
                id: s,
                segments: vec![s as u32],
                bbox: Box::from_corners(x0, y0, x1 + 1, y1 + 1),
                size: sizes[s],
                color_hist: c,
                texture_hist: t,
            }
        })
        .collect();
    (regions, pairs.into_iter().collect())
}

fn merge_nodes(id: usize, a: &RegionNode, b: &RegionNode) -> RegionNode {
    let size = a.size + b.size;
    let (wa, wb) = (a.size as f64 / size as f64, b.size as f64 / size as f64);
    let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * wa + q * wb).collect();
    let mut segments: Vec<u32> = a.segments.iter().chain(&b.segments).copied().collect();
    segments.sort_unstable();
    RegionNode {
        id,
        segments,
        bbox: a.bbox.union(&b.bbox),
        size,
        color_hist: mix(&a.color_hist, &b.color_hist),
        texture_hist: mix(&a.texture_hist, &b.texture_hist),
    }
}

/// Every region created by greedy grouping, in creation order, and the merged
/// id pairs. Starting from `n` connected segments there are `n − 1` merges
/// and `2n − 1` regions.
pub struct Hierarchy {
    pub regions: Vec<RegionNode>,
    pub merges: Vec<(usize, usize)>,
}

/// Repeatedly merges the most similar neighbouring pair; ties go to the pair
/// with the lowest `(min id, max id)`.
pub fn hierarchical_grouping(seg: &SegmentMap, feats: &PixelFeatures) -> Hierarchy {
    let image_area = (seg.width * seg.height) as u64;
    let (mut regions, pairs) = initial_regions(seg, feats);
    let mut alive = vec![true; regions.len()];
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); regions.len()];
    let mut sims: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (a, b) in pairs {
        neighbours[a].push(b);
        neighbours[b].push(a);
        sims.insert((a, b), similarity(&regions[a], &regions[b], image_area));
    }
    let mut merges = Vec::new();
    loop {
        let mut best: Option<((usize, usize), f64)> = None;
        for (&k, &s) in &sims {
            if best.map_or(true, |(_, bs)| s > bs) {
                best = Some((k, s));
            }
        }
        let Some(((a, b), _)) = best else { break };
        let id = regions.len();
        let node = merge_nodes(id, &regions[a], &regions[b]);
        alive[a] = false;
        alive[b] = false;
        let mut adj: Vec<usize> = neighbours[a]
            .iter()
            .chain(&neighbours[b])
            .copied()
            .filter(|&n| alive[n])
            .collect();
        adj.sort_unstable();
        adj.dedup();
        for &dead in &[a, b] {
            for &n in &neighbours[dead] {
                sims.remove(&(dead.min(n), dead.max(n)));
            }
        }
        for &n in &adj {
            neighbours[n].retain(|&m| m != a && m != b);
            neighbours[n].push(id);
            sims.insert((n, id), similarity(&regions[n], &node, image_area));
        }
        neighbours.push(adj);
        alive.push(true);
        regions.push(node);
        merges.push((a, b));
    }
    Hierarchy { regions, merges }
}

/// A proposal box and the combination that produced it first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    #[serde(flatten)]
    pub bbox: Box,
    pub scale: f64,
    pub min_size: usize,
}

/// Union of hierarchy boxes over the grid, dropping boxes below the
/// combination's `min_area` and exact duplicates (first occurrence kept).
pub fn selective_search(img: &RasterImage, grid: &[SegmentationParams]) -> Vec<Proposal> {
    let feats = PixelFeatures::new(img);
    let per_combo: Vec<Vec<Proposal>> = grid
        .par_iter()
        .map(|p| {
            let seg = felzenszwalb(img, p);
            hierarchical_grouping(&seg, &feats)
                .regions
                .iter()
                .filter(|r| r.bbox.area() >= p.min_area)
                .map(|r| Proposal {
                    bbox: r.bbox,
                    scale: p.scale,
                    min_size: p.min_size,
                })
                .collect()
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    per_combo
        .into_iter()
        .flatten()
        .filter(|prop| seen.insert(prop.bbox))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gray(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RasterImage::new(w, h, 1, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn grid_has_nine_combinations() {
        let grid = SegmentationParams::default_grid();
        assert_eq!(grid.len(), 9);
        assert!(grid.iter().all(|p| p.is_valid() && p.sigma == 0.8 && p.min_area == 2000));
    }

    #[test]
    fn constant_image_is_one_segment() {
        let img = RasterImage::filled(40, 30, 3, 90);
        let seg = felzenszwalb(&img, &SegmentationParams::new(350.0, 30));
        assert_eq!(seg.segment_count, 1);
    }

    #[test]
    fn two_halves_split_at_the_colour_boundary() {
        let img = RasterImage::from_fn_gray(40, 20, |x, _| if x < 17 { 20 } else { 230 });
        let seg = felzenszwalb(&img, &SegmentationParams::new(350.0, 30));
        assert_eq!(seg.segment_count, 2);
        for y in 0..20 {
            for x in 0..40 {
                assert_eq!(seg.labels[y * 40 + x], u32::from(x >= 17));
            }
        }
    }

    #[test]
    fn min_size_is_enforced() {
        for seed in 0..5 {
            let img = random_gray(32, 32, seed);
            let p = SegmentationParams::new(350.0, 30);
            let seg = felzenszwalb(&img, &p);
            assert!(seg.sizes().iter().all(|&s| s >= 30));
            assert_eq!(seg.labels.iter().map(|&l| l as usize).max().unwrap() + 1, seg.segment_count);
        }
    }

    #[test]
    fn histograms_are_normalised_and_merges_conserve_mass() {
        let img = random_gray(24, 24, 7);
        let seg = felzenszwalb(&img, &SegmentationParams::new(100.0, 10));
        let feats = PixelFeatures::new(&img);
        let tree = hierarchical_grouping(&seg, &feats);
        let n = seg.segment_count;
        assert_eq!(tree.merges.len(), n - 1);
        assert_eq!(tree.regions.len(), 2 * n - 1);
        for r in &tree.regions {
            assert!((r.color_hist.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!((r.texture_hist.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        for (k, &(a, b)) in tree.merges.iter().enumerate() {
            let (ra, rb, m) = (&tree.regions[a], &tree.regions[b], &tree.regions[n + k]);
            assert_eq!(m.size, ra.size + rb.size);
            for i in 0..m.color_hist.len() {
                let expect = (ra.color_hist[i] * ra.size as f64 + rb.color_hist[i] * rb.size as f64) / m.size as f64;
                assert!((m.color_hist[i] - expect).abs() < 1e-6);
            }
        }
        let root = tree.regions.last().unwrap();
        assert_eq!(root.size, 24 * 24);
        assert_eq!(root.segments.len(), n);
    }

    #[test]
    fn similarity_limits_and_symmetry() {
        let img = random_gray(30, 30, 3);
        let seg = felzenszwalb(&img, &SegmentationParams::new(50.0, 5));
        let (regions, pairs) = initial_regions(&seg, &PixelFeatures::new(&img));
        for (a, b) in pairs {
            let (ra, rb) = (&regions[a], &regions[b]);
            let s = similarity(ra, rb, 900);
            assert_eq!(s, similarity(rb, ra, 900));
            assert!((0.0..=4.0).contains(&s));
        }
        let same = &regions[0];
        assert!((intersection(&same.color_hist, &same.color_hist) - 1.0).abs() < 1e-12);
        let huge = 1u64 << 40;
        let s = similarity(&regions[0], &regions[1], huge);
        let hist = intersection(&regions[0].color_hist, &regions[1].color_hist)
            + intersection(&regions[0].texture_hist, &regions[1].texture_hist);
        assert!((s - hist - 2.0).abs() < 1e-6);
    }

    #[test]
    fn finds_a_high_contrast_object() {
        let truth = Box::new(30, 20, 60, 50);
        let img = RasterImage::from_fn_gray(128, 96, |x, y| {
            if truth.contains(&Box::new(x as u32, y as u32, 1, 1)) {
                220
            } else {
                40
            }
        });
        let props = selective_search(&img, &SegmentationParams::default_grid());
        assert!(props.iter().any(|p| p.bbox.iou(&truth) >= 0.7));
        for p in &props {
            assert!(p.bbox.area() >= 2000);
            assert!(img.bounds().contains(&p.bbox));
        }
        assert_eq!(props, selective_search(&img, &SegmentationParams::default_grid()));
    }

    #[test]
    fn constant_image_gives_at_most_the_whole_frame() {
        let img = RasterImage::filled(64, 48, 1, 128);
        let props = selective_search(&img, &SegmentationParams::default_grid());
        assert_eq!(props.len(), 1);
        assert_eq!(props[0].bbox, img.bounds());
        let small = RasterImage::filled(40, 40, 1, 128);
        assert!(selective_search(&small, &SegmentationParams::default_grid()).is_empty());
    }
}
