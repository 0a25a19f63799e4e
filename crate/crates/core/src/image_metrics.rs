//! Image-correspondence indicators: luminance, contrast, Sobel gradient
//! magnitude, GLCM homogeneity and GLCM correlation.
//!
//! Luminance and contrast go through an exact 256-bin histogram, so the
//! first and second moments never accumulate rounding from pixel order.
//! Sobel magnitudes are summed with compensation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GrayImage;
use crate::numeric::compensated_sum;

fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &p in img.pixels() {
        h[p as usize] += 1;
    }
    h
}

/// Mean pixel intensity.
pub fn luminance(img: &GrayImage) -> f64 {
    let h = histogram(img);
    let total: u64 = h.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    total as f64 / img.len() as f64
}

/// Population standard deviation of pixel intensities.
pub fn contrast(img: &GrayImage) -> f64 {
    let h = histogram(img);
    let n = img.len() as f64;
    let mu = luminance(img);
    let ss = compensated_sum(
        h.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(v, &c)| c as f64 * (v as f64 - mu).powi(2)),
    );
    (ss / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SobelAggregation {
    #[default]
    Mean,
    Sum,
}

/// Horizontal and vertical 3x3 Sobel responses at an interior pixel.
#[inline]
fn sobel_at(img: &GrayImage, x: usize, y: usize) -> (i32, i32) {
    let p = |dx: isize, dy: isize| -> i32 {
        img.get((x as isize + dx) as usize, (y as isize + dy) as usize) as i32
    };
    let gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
    (gx, gy)
}

/// Per-interior-pixel gradient magnitudes `sqrt(gx^2 + gy^2)`, row-major,
/// `(width-2) x (height-2)`. Border pixels are not evaluated.
pub fn sobel_magnitudes(img: &GrayImage) -> Result<Vec<f64>> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall { width: w, height: h });
    }
    let mut out = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (gx, gy) = sobel_at(img, x, y);
            out.push(((gx * gx + gy * gy) as f64).sqrt());
        }
    }
    Ok(out)
}

pub fn sobel_magnitude(img: &GrayImage) -> Result<f64> {
    sobel_magnitude_with(img, SobelAggregation::Mean)
}

pub fn sobel_magnitude_with(img: &GrayImage, agg: SobelAggregation) -> Result<f64> {
    let mags = sobel_magnitudes(img)?;
    let sum = compensated_sum(mags.iter().copied());
    Ok(match agg {
        SobelAggregation::Mean => sum / mags.len() as f64,
        SobelAggregation::Sum => sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlcmConfig {
    pub dx: i32,
    pub dy: i32,
    pub symmetric: bool,
    pub levels: usize,
}

impl Default for GlcmConfig {
    fn default() -> Self {
        Self {
            dx: 1,
            dy: 0,
            symmetric: true,
            levels: 256,
        }
    }
}

/// Normalised gray-level co-occurrence matrix, row-major `levels x levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.levels;
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(move |(k, &v)| (k / n, k % n, v))
    }

    /// `sum p[i,j] / (1 + (i-j)^2)`.
    pub fn homogeneity(&self) -> f64 {
        compensated_sum(self.nonzero().map(|(i, j, v)| {
            let d = i as f64 - j as f64;
            v / (1.0 + d * d)
        }))
    }

    /// Pearson correlation of the (row, column) gray levels under `p`.
    pub fn correlation(&self) -> Result<f64> {
        let mu_i = compensated_sum(self.nonzero().map(|(i, _, v)| i as f64 * v));
        let mu_j = compensated_sum(self.nonzero().map(|(_, j, v)| j as f64 * v));
        let var_i = compensated_sum(self.nonzero().map(|(i, _, v)| (i as f64 - mu_i).powi(2) * v));
        let var_j = compensated_sum(self.nonzero().map(|(_, j, v)| (j as f64 - mu_j).powi(2) * v));
        let (sd_i, sd_j) = (var_i.sqrt(), var_j.sqrt());
        if !(sd_i > 0.0 && sd_j > 0.0) {
            return Err(Error::DegenerateTexture);
        }
        let cov = compensated_sum(
            self.nonzero()
                .map(|(i, j, v)| (i as f64 - mu_i) * (j as f64 - mu_j) * v),
        );
        // Rounding can push a perfectly correlated texture a hair past 1.
        Ok((cov / (sd_i * sd_j)).clamp(-1.0, 1.0))
    }
}

/// Accumulates pairs `(I(x,y), I(x+dx,y+dy))`; symmetric mode also counts
/// the reversed pair. Intensities are quantised as `v * levels / 256`.
pub fn glcm(img: &GrayImage, cfg: &GlcmConfig) -> Result<Glcm> {
    let GlcmConfig {
        dx,
        dy,
        symmetric,
        levels,
    } = *cfg;
    if dx == 0 && dy == 0 {
        return Err(Error::GlcmConfig("offset must be nonzero".into()));
    }
    if !(2..=256).contains(&levels) {
        return Err(Error::GlcmConfig(format!("levels must be in 2..=256, got {levels}")));
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (dx64, dy64) = (dx as i64, dy as i64);
    let x_range = (0i64.max(-dx64), w.min(w - dx64));
    let y_range = (0i64.max(-dy64), h.min(h - dy64));
    if x_range.0 >= x_range.1 || y_range.0 >= y_range.1 {
        return Err(Error::NoPixelPairs { dx, dy });
    }

    let quant = |v: u8| v as usize * levels / 256;
    let mut counts = vec![0u64; levels * levels];
    for y in y_range.0..y_range.1 {
        for x in x_range.0..x_range.1 {
            let a = quant(img.get(x as usize, y as usize));
            let b = quant(img.get((x + dx64) as usize, (y + dy64) as usize));
            counts[a * levels + b] += 1;
            if symmetric {
                counts[b * levels + a] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(Glcm { levels, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricConfig {
    pub glcm: GlcmConfig,
    pub sobel: SobelAggregation,
}

/// The five correspondence indicators of one image. `correlation` is `None`
/// for degenerate (constant) textures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub luminance: f64,
    pub contrast: f64,
    pub magnitude: f64,
    pub homogeneity: f64,
    pub correlation: Option<f64>,
}

pub fn metric_vector(img: &GrayImage, cfg: &MetricConfig) -> Result<MetricVector> {
    let g = glcm(img, &cfg.glcm)?;
    let correlation = match g.correlation() {
        Ok(c) => Some(c),
        Err(Error::DegenerateTexture) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricVector {
        luminance: luminance(img),
        contrast: contrast(img),
        magnitude: sobel_magnitude_with(img, cfg.sobel)?,
        homogeneity: g.homogeneity(),
        correlation,
    })
}
