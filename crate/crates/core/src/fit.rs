//! Small least-squares helpers shared by the measurement modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub std_error: f64,
    pub points: usize,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::DegenerateFit(format!("{n} points for a line fit")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let yscale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if sxx <= 1e-300 {
        // Constant abscissa: only a constant response admits a fit.
        if syy <= (1e-14 * yscale).powi(2) * nf {
            return Ok(LineFit { slope: 0.0, intercept: my, r_squared: 1.0, std_error: 0.0, points: n });
        }
        return Err(Error::DegenerateFit("abscissa has no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy <= (1e-14 * yscale).powi(2) * nf { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let std_error = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, r_squared, std_error, points: n })
}

/// Linear least squares over a few design columns by modified Gram-Schmidt
/// (two passes, columns scaled to unit norm). Returns coefficients and the
/// residual sum of squares.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let p = columns.len();
    if p == 0 || n < p || columns.iter().any(|c| c.len() != n) {
        return Err(Error::DegenerateFit(format!("{n} points for {p} parameters")));
    }
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = vec![vec![0.0; p]; p];
    let mut scales = vec![0.0; p];
    for (j, col) in columns.iter().enumerate() {
        let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::DegenerateFit(format!("design column {j} is zero or non-finite")));
        }
        scales[j] = scale;
        let mut v: Vec<f64> = col.iter().map(|c| c / scale).collect();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let d: f64 = qi.iter().zip(&v).map(|(a, b)| a * b).sum();
                r[i][j] += d;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= d * qk;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::DegenerateFit(format!("design column {j} is collinear")));
        }
        r[j][j] = norm;
        v.iter_mut().for_each(|x| *x /= norm);
        q.push(v);
    }
    let qty: Vec<f64> = q.iter().map(|qi| qi.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc -= r[i][j] * coef[j];
        }
        coef[i] = acc / r[i][i];
    }
    let sse: f64 = (0..n)
        .map(|k| {
            let fit: f64 = (0..p).map(|j| columns[j][k] / scales[j] * coef[j]).sum();
            (y[k] - fit).powi(2)
        })
        .sum();
    for (c, s) in coef.iter_mut().zip(&scales) {
        *c /= s;
    }
    Ok((coef, sse))
}

/// Coefficient of determination of fitted values against data.
pub fn r_squared(y: &[f64], sse: f64) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if syy <= 0.0 {
        return 1.0;
    }
    (1.0 - sse / syy).clamp(0.0, 1.0)
}

/// Gauss-Legendre nodes and weights on `[a, b]` (Newton iteration on `P_n`).
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..order.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = order as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[order - 1 - i] = mid + half * z;
        weights[i] = half * w;
        weights[order - 1 - i] = half * w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data() {
        let f = line_fit(&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert!(line_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn least_squares_recovers_plane() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let z: Vec<f64> = x.iter().map(|v| v.powf(1.7)).collect();
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 1.5 + 0.25 * a - 2.0 * b).collect();
        let (c, sse) = least_squares(&[vec![1.0; 20], x.clone(), z], &y).unwrap();
        assert!((c[0] - 1.5).abs() < 1e-10 && (c[1] - 0.25).abs() < 1e-10 && (c[2] + 2.0).abs() < 1e-10);
        assert!(sse < 1e-20);
        assert!(least_squares(&[x.clone(), x.clone()], &y).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8, 0.0, 2.0);
        let integral: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(15)).sum();
        assert!((integral - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let (x, w) = gauss_legendre(32, 0.0, 0.3);
        let integral: f64 = x.iter().zip(&w).map(|(t, wt)| wt * (-3.0 * t).exp()).sum();
        assert!((integral - (1.0 - (-0.9f64).exp()) / 3.0).abs() < 1e-15);
    }
}
