//! Exponential (log-linear) hazard MLE for patch timing, and a
//! piecewise-exponential approximation to the Cox cascade model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HazardError {
    #[error("insufficient data: {0} spells")]
    InsufficientData(usize),
    #[error("no post-reset spells in the cascade table")]
    NoPostSpells,
    #[error("likely separation: |rho| exceeded {0} during fitting")]
    Separation(f64),
    #[error("hazard MLE did not converge")]
    NonConvergence,
}

/// One duration spell: exposure time, whether it ended in an event, and
/// covariates (without intercept).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spell {
    pub exposure: f64,
    pub event: bool,
    pub covs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    /// Covariates removed for having no variation.
    pub dropped: Vec<String>,
    pub loglik: f64,
    pub n_spells: usize,
    pub n_events: usize,
    #[serde(skip)]
    pub cov: Option<DMatrix<f64>>,
}

impl HazardFit {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coef[i], self.se[i]))
    }

    /// Wald test of c' rho = 0 over the fitted (kept) coefficients, with the
    /// contrast given as (name, weight) pairs; missing names contribute 0.
    pub fn wald_contrast(&self, contrast: &[(&str, f64)]) -> Option<(f64, f64)> {
        let cov = self.cov.as_ref()?;
        let mut c = DVector::zeros(self.names.len());
        for &(nm, w) in contrast {
            if let Some(i) = self.names.iter().position(|n| n == nm) {
                c[i] = w;
            }
        }
        let est: f64 = c.iter().zip(&self.coef).map(|(ci, b)| ci * b).sum();
        let var = (c.transpose() * cov * &c)[(0, 0)];
        if var <= 0.0 {
            return None;
        }
        let stat = est * est / var;
        let p = 1.0 - ChiSquared::new(1.0).ok()?.cdf(stat);
        Some((stat, p))
    }
}

/// Log-linear exponential hazard lambda_j = exp(rho0 + x_j' rho), fitted by
/// Newton on the Poisson-form log likelihood
/// sum_j [ d_j (rho0 + x_j' rho) - E_j exp(rho0 + x_j' rho) ].
pub fn exp_hazard_mle(spells: &[Spell], cov_names: &[String]) -> Result<HazardFit, HazardError> {
    if spells.len() < 2 {
        return Err(HazardError::InsufficientData(spells.len()));
    }
    let k_in = cov_names.len();
    for s in spells {
        assert_eq!(s.covs.len(), k_in);
    }
    // drop zero-variation covariates
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..k_in {
        let first = spells[0].covs[j];
        if spells.iter().any(|s| (s.covs[j] - first).abs() > 1e-12) {
            kept.push(j);
        } else {
            dropped.push(cov_names[j].clone());
        }
    }
    let k = kept.len() + 1; // + intercept
    let n = spells.len();
    let x = DMatrix::from_fn(n, k, |i, j| {
        if j == 0 {
            1.0
        } else {
            spells[i].covs[kept[j - 1]]
        }
    });
    let d = DVector::from_fn(n, |i, _| spells[i].event as u8 as f64);
    let expo = DVector::from_fn(n, |i, _| spells[i].exposure);
    let n_events = d.iter().filter(|&&v| v > 0.0).count();
    if n_events == 0 {
        return Err(HazardError::InsufficientData(0));
    }

    let loglik_at = |rho: &DVector<f64>| -> f64 {
        let eta = &x * rho;
        (0..n).map(|i| d[i] * eta[i] - expo[i] * eta[i].exp()).sum()
    };
    let mut rho = DVector::zeros(k);
    rho[0] = (d.sum() / expo.sum()).ln();
    let bound = 30.0;
    for _ in 0..200 {
        let eta = &x * &rho;
        if eta.iter().any(|e| e.abs() > 700.0) || rho.amax() > bound {
            return Err(HazardError::Separation(bound));
        }
        let mu = DVector::from_fn(n, |i, _| expo[i] * eta[i].exp());
        let score = x.transpose() * (&d - &mu);
        let mut info = DMatrix::zeros(k, k);
        for i in 0..n {
            let xi = x.row(i).transpose();
            info += &xi * xi.transpose() * mu[i];
        }
        let full = info
            .clone()
            .lu()
            .solve(&score)
            .ok_or(HazardError::NonConvergence)?;
        // damped Newton: halve until the likelihood does not decrease
        let ll0 = loglik_at(&rho);
        let mut lam = 1.0;
        let mut step = &full * lam;
        for _ in 0..50 {
            if loglik_at(&(&rho + &step)) >= ll0 - 1e-12 {
                break;
            }
            lam *= 0.5;
            step = &full * lam;
        }
        rho += &step;
        if step.amax() < 1e-12 {
            let cov = info.try_inverse().ok_or(HazardError::NonConvergence)?;
            let eta = &x * &rho;
            let loglik = (0..n)
                .map(|i| d[i] * eta[i] - expo[i] * eta[i].exp())
                .sum::<f64>();
            let mut names = vec!["const".to_string()];
            names.extend(kept.iter().map(|&j| cov_names[j].clone()));
            let se: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
            return Ok(HazardFit {
                names,
                coef: rho.iter().copied().collect(),
                se,
                dropped,
                loglik,
                n_spells: n,
                n_events,
                cov: Some(cov),
            });
        }
    }
    Err(HazardError::NonConvergence)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchHazardFit {
    pub fit: HazardFit,
    /// Wald statistic and p-value of H0: rho_lev + rho_int * r_bar = 0.
    pub r_bar: f64,
    pub wald_stat: Option<f64>,
    pub p_value: Option<f64>,
}

/// Patch-arrival hazard with leverage, reversibility, and their interaction.
/// `r_bar` is the reference reversibility at which debt neutrality is tested
/// (the sample mean of RevProxy in its top quartile, computed by the caller).
pub fn patch_hazard(spells: &[Spell], cov_names: &[String], r_bar: f64) -> Result<PatchHazardFit, HazardError> {
    let fit = exp_hazard_mle(spells, cov_names)?;
    let wald = fit.wald_contrast(&[("leverage", 1.0), ("lev_x_rev", r_bar)]);
    Ok(PatchHazardFit {
        r_bar,
        wald_stat: wald.map(|w| w.0),
        p_value: wald.map(|w| w.1),
        fit,
    })
}

/// Piecewise-exponential cascade model: inter-patch spells aligned in event
/// time around major resets, with a piecewise-constant baseline on event-time
/// bins and a post-reset shift `rho`.
///
/// Each spell carries (bin index, post flag, extra covariates).
pub fn cascade_hazard(
    exposures: &[f64],
    events: &[bool],
    bins: &[usize],
    post: &[bool],
    extra: &[Vec<f64>],
    extra_names: &[String],
) -> Result<HazardFit, HazardError> {
    let n = exposures.len();
    if n < 2 {
        return Err(HazardError::InsufficientData(n));
    }
    if !post.iter().any(|&p| p) {
        return Err(HazardError::NoPostSpells);
    }
    // collapse to the bins that actually occur (empty or event-free bins would
    // make the dummy block collinear with the intercept or separate the MLE)
    let mut used: Vec<usize> = bins.to_vec();
    used.sort_unstable();
    used.dedup();
    used.retain(|&b| (0..n).any(|i| bins[i] == b && events[i]));
    let base = used.first().copied().unwrap_or(0);
    let bins: Vec<usize> = bins
        .iter()
        .map(|b| used.iter().position(|&u| u == *b).unwrap_or_else(|| {
            // event-free bin: fold into the baseline
            used.iter().position(|&u| u == base).unwrap_or(0)
        }))
        .collect();
    let n_bins = bins.iter().max().map_or(0, |b| b + 1);
    // bin 0 is the baseline absorbed by the intercept
    let mut names: Vec<String> = (1..n_bins).map(|b| format!("bin_{b}")).collect();
    names.push("post".to_string());
    names.extend_from_slice(extra_names);
    let spells: Vec<Spell> = (0..n)
        .map(|i| {
            let mut covs: Vec<f64> =
                (1..n_bins).map(|b| (bins[i] == b) as u8 as f64).collect();
            covs.push(post[i] as u8 as f64);
            covs.extend(extra.get(i).cloned().unwrap_or_default());
            Spell { exposure: exposures[i], event: events[i], covs }
        })
        .collect();
    exp_hazard_mle(&spells, &names)
}
