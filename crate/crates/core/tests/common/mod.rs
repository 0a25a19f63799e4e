//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use bubbleflow_core::GrayImage;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Surface area of the ellipsoid with semi-axes `a, b, c` from the
/// parametric surface integral over one octant, times eight.
pub fn ellipsoid_area_quadrature(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.max(b).max(c).powi(2);
    let tol = 1e-10 * scale;
    let outer = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let inner = |phi: f64| {
            let (sp, cp) = phi.sin_cos();
            let n2 = (b * c * st * cp).powi(2) + (a * c * st * sp).powi(2) + (a * b * ct).powi(2);
            st * n2.sqrt()
        };
        adaptive_simpson(&inner, 0.0, PI / 2.0, tol)
    };
    8.0 * adaptive_simpson(&outer, 0.0, PI / 2.0, tol)
}

pub fn naive_mean(img: &GrayImage) -> f64 {
    let mut s = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            s += img.get(x, y) as f64;
        }
    }
    s / img.len() as f64
}

pub fn naive_std(img: &GrayImage) -> f64 {
    let mu = naive_mean(img);
    let mut s = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            s += (img.get(x, y) as f64 - mu).powi(2);
        }
    }
    (s / img.len() as f64).sqrt()
}

/// Mean Sobel magnitude over interior pixels by explicit 3x3 correlation.
pub fn naive_sobel_mean(img: &GrayImage) -> f64 {
    const KX: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    const KY: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (w, h) = (img.width(), img.height());
    let mut total = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (r, (kx_row, ky_row)) in KX.iter().zip(&KY).enumerate() {
                for c in 0..3 {
                    let v = img.get(x + c - 1, y + r - 1) as f64;
                    gx += kx_row[c] * v;
                    gy += ky_row[c] * v;
                }
            }
            total += (gx * gx + gy * gy).sqrt();
        }
    }
    total / ((w - 2) * (h - 2)) as f64
}

/// Homogeneity and correlation of the symmetric horizontal-neighbour
/// co-occurrence matrix at full gray resolution, from marginals.
pub fn naive_texture(img: &GrayImage) -> (f64, Option<f64>) {
    let mut m = vec![vec![0.0f64; 256]; 256];
    let mut total = 0.0;
    for y in 0..img.height() {
        for x in 0..img.width() - 1 {
            let (i, j) = (img.get(x, y) as usize, img.get(x + 1, y) as usize);
            m[i][j] += 1.0;
            m[j][i] += 1.0;
            total += 2.0;
        }
    }
    let mut homogeneity = 0.0;
    let mut px = vec![0.0; 256];
    let mut py = vec![0.0; 256];
    for i in 0..256 {
        for j in 0..256 {
            let p = m[i][j] / total;
            homogeneity += p / (1.0 + ((i as f64) - (j as f64)).powi(2));
            px[i] += p;
            py[j] += p;
        }
    }
    let mx: f64 = (0..256).map(|i| i as f64 * px[i]).sum();
    let my: f64 = (0..256).map(|j| j as f64 * py[j]).sum();
    let sx = (0..256).map(|i| (i as f64 - mx).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..256).map(|j| (j as f64 - my).powi(2) * py[j]).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        return (homogeneity, None);
    }
    let mut cov = 0.0;
    for i in 0..256 {
        for j in 0..256 {
            cov += (i as f64 - mx) * (j as f64 - my) * m[i][j] / total;
        }
    }
    (homogeneity, Some(cov / (sx * sy)))
}

/// Unbiased squared MMD with the cubic polynomial kernel, by direct
/// double sums over all pairs.
pub fn mmd2_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let d = x[0].len() as f64;
    let k = |u: &[f64], v: &[f64]| (u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / d + 1.0).powi(3);
    let n = x.len() as f64;
    let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                xx += k(&x[i], &x[j]);
                yy += k(&y[i], &y[j]);
            }
            xy += k(&x[i], &y[j]);
        }
    }
    xx / (n * (n - 1.0)) + yy / (n * (n - 1.0)) - 2.0 * xy / (n * n)
}

/// Half a unit in the last printed decimal place of `s`, scientific
/// notation included.
pub fn half_unit(s: &str) -> f64 {
    let (mantissa, exp) = match s.find(['E', 'e']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().expect("exponent")),
        None => (s, 0),
    };
    let decimals = mantissa.find('.').map_or(0, |k| mantissa.len() - k - 1) as i32;
    0.5 * 10f64.powi(exp - decimals)
}
