//! Small OLS engine with rank handling and robust covariances, shared by the
//! event-study and RD estimators.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OlsError {
    #[error("design has no usable columns after dropping collinear ones")]
    EmptyDesign,
    #[error("fewer observations than parameters ({n} rows, {k} columns)")]
    TooFewRows { n: usize, k: usize },
}

#[derive(Debug, Clone, Copy)]
pub enum CovKind<'a> {
    Hc1,
    /// CR1 cluster-robust with the given per-row cluster labels; `k_absorbed`
    /// counts parameters absorbed outside the explicit design (fixed effects).
    Cluster { labels: &'a [usize], k_absorbed: usize },
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub names: Vec<String>,
    /// NaN for dropped (collinear or zero-variance) columns.
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub dropped: Vec<String>,
    /// Covariance of the kept coefficients, indexed by `kept`.
    pub cov: DMatrix<f64>,
    pub kept: Vec<usize>,
    pub n: usize,
}

impl OlsFit {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        if self.coef[i].is_nan() {
            None
        } else {
            Some((self.coef[i], self.se[i]))
        }
    }

    /// Joint Wald test that the named coefficients are all zero.
    /// Returns (statistic, df, p-value); dropped columns are skipped.
    pub fn wald_joint(&self, names: &[&str]) -> Option<(f64, usize, f64)> {
        let mut idx = Vec::new();
        for nm in names {
            let i = self.names.iter().position(|n| n == nm)?;
            if let Some(ki) = self.kept.iter().position(|&k| k == i) {
                idx.push(ki);
            }
        }
        if idx.is_empty() {
            return None;
        }
        let b = DVector::from_iterator(idx.len(), idx.iter().map(|&ki| {
            self.coef[self.kept[ki]]
        }));
        let mut v = DMatrix::zeros(idx.len(), idx.len());
        for (a, &ka) in idx.iter().enumerate() {
            for (c, &kc) in idx.iter().enumerate() {
                v[(a, c)] = self.cov[(ka, kc)];
            }
        }
        let vinv = v.try_inverse()?;
        let stat = (b.transpose() * vinv * &b)[(0, 0)];
        let df = idx.len();
        let p = 1.0 - ChiSquared::new(df as f64).ok()?.cdf(stat.max(0.0));
        Some((stat, df, p))
    }
}

/// OLS with modified-Gram-Schmidt collinearity detection: columns whose
/// residual norm after projection on previously kept columns falls below
/// `1e-10` of their original norm are dropped and reported by name.
pub fn ols(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    names: &[String],
    cov_kind: CovKind,
) -> Result<OlsFit, OlsError> {
    let n = y.len();
    let k_all = x.ncols();
    assert_eq!(names.len(), k_all);

    // rank screen
    let mut kept: Vec<usize> = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..k_all {
        let col = x.column(j).into_owned();
        let norm0 = col.norm();
        if norm0 == 0.0 {
            dropped.push(names[j].clone());
            continue;
        }
        let mut resid = col;
        for b in &basis {
            let proj = b.dot(&resid);
            resid -= b * proj;
        }
        if resid.norm() <= 1e-10 * norm0.max(1.0) {
            dropped.push(names[j].clone());
        } else {
            basis.push(&resid / resid.norm());
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(OlsError::EmptyDesign);
    }
    let k = kept.len();
    if n <= k {
        return Err(OlsError::TooFewRows { n, k });
    }
    let xk = DMatrix::from_fn(n, k, |i, j| x[(i, kept[j])]);
    let xtx = xk.transpose() * &xk;
    let xty = xk.transpose() * y;
    let xtx_inv = xtx
        .clone()
        .try_inverse()
        .ok_or(OlsError::EmptyDesign)?;
    let beta = &xtx_inv * xty;
    let resid = y - &xk * &beta;

    let cov = match cov_kind {
        CovKind::Hc1 => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = xk.row(i).transpose();
                meat += &xi * xi.transpose() * (resid[i] * resid[i]);
            }
            let c = n as f64 / (n - k) as f64;
            &xtx_inv * meat * &xtx_inv * c
        }
        CovKind::Cluster { labels, k_absorbed } => {
            assert_eq!(labels.len(), n);
            let mut groups: std::collections::BTreeMap<usize, DVector<f64>> =
                std::collections::BTreeMap::new();
            for i in 0..n {
                let score = xk.row(i).transpose() * resid[i];
                groups
                    .entry(labels[i])
                    .and_modify(|s| *s += &score)
                    .or_insert(score);
            }
            let g = groups.len();
            let mut meat = DMatrix::zeros(k, k);
            for s in groups.values() {
                meat += s * s.transpose();
            }
            let kp = (k + k_absorbed).min(n - 1);
            let c = if g > 1 {
                (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - kp) as f64)
            } else {
                1.0
            };
            &xtx_inv * meat * &xtx_inv * c
        }
    };

    let mut coef = vec![f64::NAN; k_all];
    let mut se = vec![f64::NAN; k_all];
    for (j, &orig) in kept.iter().enumerate() {
        coef[orig] = beta[j];
        se[orig] = cov[(j, j)].max(0.0).sqrt();
    }
    Ok(OlsFit { names: names.to_vec(), coef, se, dropped, cov, kept, n })
}
