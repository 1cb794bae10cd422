//! Pixel-level primitives shared by every stage: raster containers, grayscale
//! conversion, Gaussian smoothing, thresholding, Canny edges and connected
//! components.
//!
//! All convolutions use reflect-101 border handling (`dcb|abcd|cba`).

use std::collections::VecDeque;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Box;

/// 8-bit grayscale or RGB pixel grid, row-major, channels interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "expected 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every sample set to `value`.
    ///
    /// Panics if a dimension is zero or `channels` is not 1 or 3.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("valid image dimensions")
    }

    /// Grayscale image whose pixel `(x, y)` is `f(x, y)`.
    pub fn from_fn_gray(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data).expect("valid image dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn bounds(&self) -> Box {
        Box::new(0, 0, self.width as u32, self.height as u32)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: u8) {
        self.data[(y * self.width + x) * self.channels + c] = value;
    }

    /// Copy of the pixels inside `region`, which must lie within the image.
    pub fn crop(&self, region: &Box) -> Result<RasterImage> {
        if !self.bounds().contains(region) {
            return Err(Error::EmptyRegion {
                region: *region,
                width: self.width,
                height: self.height,
            });
        }
        let (x0, y0) = (region.x as usize, region.y as usize);
        let (w, h) = (region.w as usize, region.h as usize);
        let mut data = Vec::with_capacity(w * h * self.channels);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        RasterImage::new(w, h, self.channels, data)
    }

    /// Resampled copy at `width`×`height` (triangle filter, scaled support when
    /// shrinking).
    pub fn resize(&self, width: usize, height: usize) -> RasterImage {
        assert!(width > 0 && height > 0, "resize target must be positive");
        if width == self.width && height == self.height {
            return self.clone();
        }
        let filter = image::imageops::FilterType::Triangle;
        let (w, h) = (width as u32, height as u32);
        if self.is_gray() {
            let buf = image::imageops::resize(&self.to_gray_buffer(), w, h, filter);
            RasterImage::new(width, height, 1, buf.into_raw()).expect("resize output")
        } else {
            let buf = image::imageops::resize(&self.to_rgb_buffer(), w, h, filter);
            RasterImage::new(width, height, 3, buf.into_raw()).expect("resize output")
        }
    }

    fn to_gray_buffer(&self) -> GrayImage {
        debug_assert!(self.is_gray());
        ImageBuffer::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer size")
    }

    fn to_rgb_buffer(&self) -> RgbImage {
        debug_assert_eq!(self.channels, 3);
        ImageBuffer::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer size")
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        if self.is_gray() {
            DynamicImage::ImageLuma8(self.to_gray_buffer())
        } else {
            DynamicImage::ImageRgb8(self.to_rgb_buffer())
        }
    }

    /// Converts any decoded image: gray-like formats stay 1-channel, the rest
    /// become RGB (alpha dropped).
    pub fn from_dynamic(img: &DynamicImage) -> Result<RasterImage> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_) => RasterImage::new(w, h, 1, img.to_luma8().into_raw()),
            _ => RasterImage::new(w, h, 3, img.to_rgb8().into_raw()),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<RasterImage> {
        let img = image::load_from_memory(bytes)?;
        Self::from_dynamic(&img)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RasterImage> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let img = image::load_from_memory(&bytes).map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_dynamic(&img)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_dynamic().write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Writes the image; the format follows the file extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_dynamic().save(path).map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Row-major boolean mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask length {} does not match {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn invert(&self) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Tight bounding box of the true pixels, if any.
    pub fn bounding_box(&self) -> Option<Box> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != usize::MAX).then(|| Box::from_corners(x0 as u32, y0 as u32, x1 as u32 + 1, y1 as u32 + 1))
    }

    /// 0/255 grayscale rendering.
    pub fn to_raster(&self) -> RasterImage {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        RasterImage::new(self.width, self.height, 1, data).expect("mask dimensions")
    }
}

/// Gaussian smoothing parameters. When `kernel_size` is `None` the support is
/// `2·⌈3σ⌉ + 1` taps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub sigma: f64,
    pub kernel_size: Option<usize>,
}

impl GaussianSpec {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            kernel_size: None,
        }
    }

    /// Fixed odd-sized kernel with the conventional sigma for that size,
    /// `0.3·((k − 1)/2 − 1) + 0.8`.
    pub fn from_kernel_size(kernel_size: usize) -> Self {
        assert!(kernel_size % 2 == 1, "kernel size must be odd");
        let sigma = 0.3 * ((kernel_size as f64 - 1.0) * 0.5 - 1.0) + 0.8;
        Self {
            sigma,
            kernel_size: Some(kernel_size),
        }
    }

    pub fn size(&self) -> usize {
        match self.kernel_size {
            Some(k) => k,
            None => 2 * (3.0 * self.sigma).ceil() as usize + 1,
        }
    }

    /// Normalized 1-D kernel.
    pub fn kernel(&self) -> Vec<f64> {
        assert!(self.sigma > 0.0, "sigma must be positive");
        let size = self.size();
        let radius = (size / 2) as f64;
        let denom = 2.0 * self.sigma * self.sigma;
        let raw: Vec<f64> = (0..size)
            .map(|i| {
                let d = i as f64 - radius;
                (-d * d / denom).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

/// Reflect-101 index into `0..n`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// ITU-R 601 luma; 1-channel input is returned unchanged.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.is_gray() {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    RasterImage::new(img.width, img.height, 1, data).expect("same dimensions")
}

/// Separable Gaussian convolution of one float plane.
pub fn gaussian_blur_plane(plane: &[f64], width: usize, height: usize, spec: &GaussianSpec) -> Vec<f64> {
    assert_eq!(plane.len(), width * height);
    let kernel = spec.kernel();
    let radius = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[reflect(x as isize + k as isize - radius, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for (k, w) in kernel.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - radius, height);
            let src = &tmp[sy * width..(sy + 1) * width];
            let dst = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}

/// Gaussian blur of every channel, rounded back to 8 bits.
pub fn gaussian_blur(img: &RasterImage, spec: &GaussianSpec) -> RasterImage {
    let (w, h, c) = (img.width, img.height, img.channels);
    let mut out = vec![0u8; img.data.len()];
    for ch in 0..c {
        let plane: Vec<f64> = img.data.iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        let blurred = gaussian_blur_plane(&plane, w, h, spec);
        for (i, v) in blurred.into_iter().enumerate() {
            out[i * c + ch] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    RasterImage::new(w, h, c, out).expect("same dimensions")
}

/// Per-channel max (`dilate`) or min (`erode`) over a (2r+1)² window,
/// borders clamped. Separable, so cost is linear in `r`.
fn rank_extreme(img: &RasterImage, radius: usize, take_max: bool) -> RasterImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h, c) = (img.width, img.height, img.channels);
    let pick = |a: u8, b: u8| if take_max { a.max(b) } else { a.min(b) };
    let pass = |src: &[u8], horizontal: bool| {
        let mut dst = src.to_vec();
        for y in 0..h {
            for x in 0..w {
                for ch in 0..c {
                    let mut v = src[(y * w + x) * c + ch];
                    for d in 1..=radius {
                        let (a, b) = if horizontal {
                            ((y * w + x.saturating_sub(d)) * c, (y * w + (x + d).min(w - 1)) * c)
                        } else {
                            (((y.saturating_sub(d)) * w + x) * c, (((y + d).min(h - 1)) * w + x) * c)
                        };
                        v = pick(v, pick(src[a + ch], src[b + ch]));
                    }
                    dst[(y * w + x) * c + ch] = v;
                }
            }
        }
        dst
    };
    let data = pass(&pass(&img.data, true), false);
    RasterImage { data, ..img.clone() }
}

pub fn dilate(img: &RasterImage, radius: usize) -> RasterImage {
    rank_extreme(img, radius, true)
}

pub fn erode(img: &RasterImage, radius: usize) -> RasterImage {
    rank_extreme(img, radius, false)
}

/// Grayscale closing: dark features narrower than 2r+1 pixels are filled in.
pub fn close_dark(img: &RasterImage, radius: usize) -> RasterImage {
    erode(&dilate(img, radius), radius)
}

fn require_gray(img: &RasterImage, op: &str) -> Result<()> {
    if img.is_gray() {
        Ok(())
    } else {
        Err(Error::InvalidImage(format!(
            "{op} requires a 1-channel image, got {} channels",
            img.channels
        )))
    }
}

pub fn histogram(img: &RasterImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in &img.data {
        hist[v as usize] += 1;
    }
    hist
}

/// Mask of pixels strictly above `threshold`.
pub fn threshold_above(img: &RasterImage, threshold: f64) -> BinaryImage {
    let gray = to_grayscale(img);
    let bits = gray.data.iter().map(|&v| v as f64 > threshold).collect();
    BinaryImage::from_bits(gray.width, gray.height, bits).expect("same dimensions")
}

/// Otsu's threshold over the 256-bin histogram. Returns the lowest threshold
/// maximizing between-class variance and the mask `pixel > threshold`.
///
/// A single-valued image yields that value and an all-false mask.
pub fn otsu_threshold(img: &RasterImage) -> Result<(u8, BinaryImage)> {
    require_gray(img, "otsu_threshold")?;
    let hist = histogram(img);
    let total_n = img.data.len() as i128;
    let total_s: i128 = hist.iter().enumerate().map(|(v, &c)| v as i128 * c as i128).sum();

    let mut best: Option<(u8, f64)> = None;
    let (mut n0, mut s0) = (0i128, 0i128);
    for t in 0..256usize {
        n0 += hist[t] as i128;
        s0 += t as i128 * hist[t] as i128;
        let n1 = total_n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // N²·σ_B² = (N·S0 − n0·S)² / (n0·n1)
        let diff = (total_n * s0 - n0 * total_s) as f64;
        let var = diff * diff / (n0 as f64 * n1 as f64);
        if best.map_or(true, |(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    let threshold = match best {
        Some((t, _)) => t,
        None => img.data[0],
    };
    Ok((threshold, threshold_above(img, threshold as f64)))
}

/// Arithmetic mean of the intensities inside `region`.
pub fn region_mean(img: &RasterImage, region: &Box) -> Result<f64> {
    require_gray(img, "region_mean")?;
    if !img.bounds().contains(region) {
        return Err(Error::EmptyRegion {
            region: *region,
            width: img.width,
            height: img.height,
        });
    }
    let mut sum = 0u64;
    for y in region.y as usize..region.bottom() as usize {
        for x in region.x as usize..region.right() as usize {
            sum += img.get(x, y, 0) as u64;
        }
    }
    Ok(sum as f64 / region.area() as f64)
}

/// Mask of pixels brighter than the mean of the background sample `region`.
pub fn mean_threshold(img: &RasterImage, region: &Box) -> Result<BinaryImage> {
    let mean = region_mean(img, region)?;
    Ok(threshold_above(img, mean))
}

/// Median intensity; the mean of the two middle samples for even counts.
pub fn median_intensity(img: &RasterImage) -> f64 {
    let hist = histogram(img);
    let n = img.data.len() as u64;
    let nth = |k: u64| -> f64 {
        let mut acc = 0;
        for (v, &c) in hist.iter().enumerate() {
            acc += c;
            if acc > k {
                return v as f64;
            }
        }
        255.0
    };
    if n % 2 == 1 {
        nth(n / 2)
    } else {
        (nth(n / 2 - 1) + nth(n / 2)) / 2.0
    }
}

/// Sobel gradients `(gx, gy)` with reflect borders.
pub fn sobel(img: &RasterImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width, img.height);
    let at = |x: isize, y: isize| img.get(reflect(x, w), reflect(y, h), 0) as f64;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Euclidean Sobel gradient magnitude.
pub fn gradient_magnitude(img: &RasterImage) -> Vec<f64> {
    let (gx, gy) = sobel(img);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect()
}

/// Canny edges on a gray image with explicit hysteresis thresholds on the
/// Sobel magnitude. Weak pixels need magnitude `> low`, seeds need `≥ high`.
pub fn canny(img: &RasterImage, low: f64, high: f64) -> Result<BinaryImage> {
    require_gray(img, "canny")?;
    let (w, h) = (img.width, img.height);
    let (gx, gy) = sobel(img);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let m = |x: isize, y: isize| mag[reflect(y, h) * w + reflect(x, w)];

    // Non-maximum suppression. Ties are broken towards the lower-index side so
    // that a plateau of two equal maxima yields a one-pixel line.
    let mut thin = vec![false; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let g = mag[i];
            if g <= 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (before, after) = if !(22.5..157.5).contains(&angle) {
                (m(x - 1, y), m(x + 1, y))
            } else if angle < 67.5 {
                (m(x - 1, y - 1), m(x + 1, y + 1))
            } else if angle < 112.5 {
                (m(x, y - 1), m(x, y + 1))
            } else {
                (m(x + 1, y - 1), m(x - 1, y + 1))
            };
            thin[i] = g > before && g >= after;
        }
    }

    let mut out = BinaryImage::new(w, h);
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if thin[i] && mag[i] > low && mag[i] >= high && !out.bits[i] {
            out.bits[i] = true;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (jx, jy) = ((j % w) as isize, (j / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (jx + dx, jy + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if thin[k] && mag[k] > low && !out.bits[k] {
                            out.bits[k] = true;
                            queue.push_back(k);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Scale factor around the median for [`canny_auto`].
pub const CANNY_MEDIAN_SPREAD: f64 = 0.33;

/// Canny thresholds derived from the median intensity `v`:
/// `(max(0, (1 − k)·v), min(255, (1 + k)·v))`.
pub fn auto_canny_thresholds(img: &RasterImage) -> (f64, f64) {
    let median = median_intensity(img);
    let low = ((1.0 - CANNY_MEDIAN_SPREAD) * median).max(0.0);
    let high = ((1.0 + CANNY_MEDIAN_SPREAD) * median).min(255.0);
    (low, high)
}

pub fn canny_auto(img: &RasterImage) -> Result<BinaryImage> {
    require_gray(img, "canny_auto")?;
    let (low, high) = auto_canny_thresholds(img);
    canny(img, low, high)
}

/// One 8-connected blob of true pixels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: usize,
    pub bbox: Box,
    pub pixel_count: usize,
}

/// Labels 8-connected components of true pixels in raster-scan discovery
/// order. Returns the per-pixel label map (`None` for background) alongside the
/// components.
pub fn label_components(mask: &BinaryImage) -> (Vec<Option<usize>>, Vec<Component>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![None; w * h];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start].is_some() {
            continue;
        }
        let id = components.len();
        labels[start] = Some(id);
        queue.push_back(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let mut count = 0;
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            count += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let k = ny * w + nx;
                    if mask.bits[k] && labels[k].is_none() {
                        labels[k] = Some(id);
                        queue.push_back(k);
                    }
                }
            }
        }
        components.push(Component {
            id,
            bbox: Box::from_corners(x0 as u32, y0 as u32, x1 as u32 + 1, y1 as u32 + 1),
            pixel_count: count,
        });
    }
    (labels, components)
}

pub fn connected_components(mask: &BinaryImage) -> Vec<Component> {
    label_components(mask).1
}
