//! Distribution-level quality metrics over embedded sample sets: Fréchet
//! distance, kernel MMD, inception-style score and k-NN precision/recall.
//!
//! Embeddings are pluggable. The built-in ones (identity, fixed-seed random
//! projection) make values comparable between runs of this crate only.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GrayImage;

/// `n x d` row-major matrix of embedded samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::SampleSet(format!("need n, d >= 1, got {n}x{d}")));
        }
        if data.len() != n * d {
            return Err(Error::SampleSet(format!("{} values for a {n}x{d} set", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::SampleSet(format!("non-finite entry at row {}", i / d)));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::SampleSet("rows have unequal length".into()));
        }
        Self::from_flat(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.data)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for r in self.rows() {
            for (a, &v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        m.iter_mut().for_each(|a| *a /= self.n as f64);
        m
    }

    /// Unbiased (`n - 1`) covariance.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        if self.n < 2 {
            return Err(Error::SampleSet("covariance needs n >= 2".into()));
        }
        let mu = DVector::from_vec(self.mean());
        let mut x = self.matrix();
        for mut row in x.row_iter_mut() {
            row -= mu.transpose();
        }
        let cov = x.transpose() * &x / (self.n as f64 - 1.0);
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance".into()));
        }
        Ok(cov)
    }
}

fn check_pair(a: &SampleSet, b: &SampleSet) -> Result<()> {
    if a.d != b.d {
        return Err(Error::SampleSet(format!("dimension mismatch: {} vs {}", a.d, b.d)));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix with those below `1e-10 * max` set to 0.
fn clipped_eigen(m: DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut e = SymmetricEigen::new(m);
    let max = e.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = 1e-10 * max;
    e.eigenvalues.iter_mut().for_each(|l| {
        if *l < floor {
            *l = 0.0;
        }
    });
    e
}

fn sym_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let e = clipped_eigen(m);
    let s = DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt));
    &e.eigenvectors * s * e.eigenvectors.transpose()
}

/// Fréchet distance between Gaussians fitted to `a` and `b`:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`, with the trace of the
/// square root taken as `tr sqrt(S_a^(1/2) S_b S_a^(1/2))`.
pub fn fid(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    check_pair(a, b)?;
    let (ca, cb) = (a.covariance()?, b.covariance()?);
    let mean_term: f64 = a.mean().iter().zip(b.mean()).map(|(x, y)| (x - y).powi(2)).sum();
    let ha = sym_sqrt(ca.clone());
    let mut inner = &ha * &cb * &ha;
    inner = (&inner + inner.transpose()) * 0.5;
    let tr_sqrt: f64 = clipped_eigen(inner).eigenvalues.iter().map(|l| l.sqrt()).sum();
    let value = mean_term + ca.trace() + cb.trace() - 2.0 * tr_sqrt;
    if !value.is_finite() {
        return Err(Error::NonFinite("FID".into()));
    }
    Ok(value.max(0.0))
}

/// Cubic polynomial kernel `(x.y / d + 1)^3`.
pub fn poly_kernel(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (dot / x.len() as f64 + 1.0).powi(3)
}

fn mmd2_unbiased(x: &[&[f64]], y: &[&[f64]]) -> f64 {
    let m = x.len() as f64;
    let mut kxx = 0.0;
    let mut kyy = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            kxx += poly_kernel(x[i], x[j]);
            kyy += poly_kernel(y[i], y[j]);
        }
    }
    let mut kxy = 0.0;
    for xi in x {
        for yj in y {
            kxy += poly_kernel(xi, yj);
        }
    }
    2.0 * (kxx + kyy) / (m * (m - 1.0)) - 2.0 * kxy / (m * m)
}

/// Unbiased squared MMD averaged over consecutive, disjoint blocks of
/// `block` samples from each set. Trailing samples that do not fill a block
/// are ignored.
pub fn kid(a: &SampleSet, b: &SampleSet, block: usize) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.n.min(b.n);
    if block < 2 || block > n {
        return Err(Error::SampleSet(format!("block must lie in [2, {n}], got {block}")));
    }
    let blocks = n / block;
    let mut total = 0.0;
    for k in 0..blocks {
        let x: Vec<&[f64]> = (k * block..(k + 1) * block).map(|i| a.row(i)).collect();
        let y: Vec<&[f64]> = (k * block..(k + 1) * block).map(|i| b.row(i)).collect();
        total += mmd2_unbiased(&x, &y);
    }
    Ok(total / blocks as f64)
}

/// Smoothing floor on the marginal class probability.
pub const IS_EPS: f64 = 1e-12;

/// `exp(mean_x KL(p(y|x) || p(y)))` for rows of class posteriors.
pub fn inception_score(posteriors: &[Vec<f64>]) -> Result<f64> {
    let k = posteriors.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(Error::Probe("need at least one sample and one class".into()));
    }
    for (i, p) in posteriors.iter().enumerate() {
        if p.len() != k {
            return Err(Error::Probe(format!("sample {i} has {} classes, expected {k}", p.len())));
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Probe(format!("sample {i} has a negative or non-finite probability")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Probe(format!("sample {i} sums to {s}")));
        }
    }
    let n = posteriors.len() as f64;
    let mut marginal = vec![0.0; k];
    for p in posteriors {
        for (m, v) in marginal.iter_mut().zip(p) {
            *m += v;
        }
    }
    marginal.iter_mut().for_each(|m| *m /= n);
    let mut kl_sum = 0.0;
    for p in posteriors {
        for (&pi, &mi) in p.iter().zip(&marginal) {
            if pi > 0.0 {
                kl_sum += pi * (pi.ln() - mi.max(IS_EPS).ln());
            }
        }
    }
    Ok((kl_sum / n).exp().max(1.0))
}

/// Maps a sample to a probability vector.
pub trait ClassifierProbe {
    fn classes(&self) -> usize;
    fn posterior(&self, sample: &[f64]) -> Vec<f64>;
}

/// Fixed-seed random linear layer followed by a softmax.
#[derive(Debug, Clone)]
pub struct SoftmaxProbe {
    weights: DMatrix<f64>,
    scale: f64,
}

impl SoftmaxProbe {
    pub fn new(input_dim: usize, classes: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || classes < 2 {
            return Err(Error::Probe(format!("need d >= 1 and K >= 2, got d={input_dim}, K={classes}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = DMatrix::from_fn(classes, input_dim, |_, _| StandardNormal.sample(&mut rng));
        Ok(Self {
            weights,
            scale: 1.0 / (input_dim as f64).sqrt(),
        })
    }
}

impl ClassifierProbe for SoftmaxProbe {
    fn classes(&self) -> usize {
        self.weights.nrows()
    }

    fn posterior(&self, sample: &[f64]) -> Vec<f64> {
        let logits = &self.weights * DVector::from_column_slice(sample) * self.scale;
        let max = logits.max();
        let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }
}

pub fn inception_score_with(probe: &dyn ClassifierProbe, samples: &SampleSet) -> Result<f64> {
    let posteriors: Vec<Vec<f64>> = samples.rows().map(|r| probe.posterior(r)).collect();
    inception_score(&posteriors)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Squared distance from each point to its k-th nearest other point.
fn knn_radii(set: &SampleSet, k: usize) -> Vec<f64> {
    (0..set.n)
        .map(|i| {
            let mut d: Vec<f64> = (0..set.n)
                .filter(|&j| j != i)
                .map(|j| sq_dist(set.row(i), set.row(j)))
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

fn coverage(manifold: &SampleSet, radii: &[f64], probes: &SampleSet) -> f64 {
    let hits = probes
        .rows()
        .filter(|p| (0..manifold.n).any(|i| sq_dist(manifold.row(i), p) <= radii[i]))
        .count();
    hits as f64 / probes.n as f64
}

/// k-NN manifold precision and recall. A point counts when it lies within
/// (inclusive) the k-th-neighbour radius of some point of the other set.
pub fn precision_recall(real: &SampleSet, fake: &SampleSet, k: usize) -> Result<(f64, f64)> {
    check_pair(real, fake)?;
    if k == 0 {
        return Err(Error::SampleSet("k must be >= 1".into()));
    }
    if real.n < k + 1 || fake.n < k + 1 {
        return Err(Error::SampleSet(format!(
            "both sets need >= k+1 = {} points, got {} and {}",
            k + 1,
            real.n,
            fake.n
        )));
    }
    let precision = coverage(real, &knn_radii(real, k), fake);
    let recall = coverage(fake, &knn_radii(fake, k), real);
    Ok((precision, recall))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Embedder {
    /// Flattened raw pixel values.
    Identity,
    /// `x -> W x / sqrt(dim)` with `W` standard normal from the seed.
    RandomProjection { dim: usize, seed: u64 },
}

pub fn embed(images: &[GrayImage], embedder: Embedder) -> Result<SampleSet> {
    let first = images
        .first()
        .ok_or_else(|| Error::SampleSet("no images to embed".into()))?;
    let (w, h) = (first.width(), first.height());
    if let Some(bad) = images.iter().find(|i| i.width() != w || i.height() != h) {
        return Err(Error::Shape(format!(
            "image {}x{} differs from {w}x{h}",
            bad.width(),
            bad.height()
        )));
    }
    let n = images.len();
    let pixels = |img: &GrayImage| img.pixels().iter().map(|&p| p as f64).collect::<Vec<_>>();
    match embedder {
        Embedder::Identity => SampleSet::from_flat(n, w * h, images.iter().flat_map(pixels).collect()),
        Embedder::RandomProjection { dim, seed } => {
            if dim == 0 {
                return Err(Error::SampleSet("projection dimension must be >= 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let proj = DMatrix::from_fn(dim, w * h, |_, _| StandardNormal.sample(&mut rng)) / (dim as f64).sqrt();
            let mut data = Vec::with_capacity(n * dim);
            for img in images {
                data.extend((&proj * DVector::from_vec(pixels(img))).iter());
            }
            SampleSet::from_flat(n, dim, data)
        }
    }
}
