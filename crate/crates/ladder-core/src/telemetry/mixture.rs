//! One- vs two-component Gaussian mixture selection by BIC, used as the
//! two-plateau test on post-event metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("need at least {min} observations, got {got}")]
    InsufficientData { min: usize, got: usize },
    #[error("EM failed to converge after restarts")]
    NonConvergence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mixture1d {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
    pub loglik: f64,
}

impl Mixture1d {
    /// BIC = -2 logL + p ln n with p = 3k - 1 free parameters.
    pub fn bic(&self, n: usize) -> f64 {
        let p = (3 * self.means.len() - 1) as f64;
        -2.0 * self.loglik + p * (n as f64).ln()
    }
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (var * 2.0 * std::f64::consts::PI).ln() - 0.5 * d * d / var
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
}

/// EM fit of a k-component 1-D Gaussian mixture with fixed-seed restarts.
pub fn fit_gmm(
    data: &[f64],
    k: usize,
    restarts: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<Mixture1d, MixtureError> {
    let n = data.len();
    if n < 2 * k {
        return Err(MixtureError::InsufficientData { min: 2 * k, got: n });
    }
    let mean = data.iter().sum::<f64>() / n as f64;
    let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let var_floor = (1e-10 * var).max(1e-12);
    if k == 1 {
        let v = var.max(var_floor);
        let loglik = data.iter().map(|&x| log_normal_pdf(x, mean, v)).sum();
        return Ok(Mixture1d { weights: vec![1.0], means: vec![mean], vars: vec![v], loglik });
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Mixture1d> = None;
    for restart in 0..restarts.max(1) {
        // quantile-spread centers, jittered after the first restart
        let mut means: Vec<f64> = (0..k)
            .map(|j| quantile(&sorted, (j as f64 + 0.5) / k as f64))
            .collect();
        if restart > 0 {
            for m in &mut means {
                *m += (rng.random::<f64>() - 0.5) * var.sqrt().max(1e-6);
            }
        }
        let mut vars = vec![var.max(var_floor); k];
        let mut weights = vec![1.0 / k as f64; k];
        let mut last_ll = f64::NEG_INFINITY;
        let mut ok = false;
        for _ in 0..max_iter {
            // E step with log-sum-exp
            let mut resp = vec![0.0; n * k];
            let mut ll = 0.0;
            for (i, &x) in data.iter().enumerate() {
                let logs: Vec<f64> = (0..k)
                    .map(|j| weights[j].max(1e-300).ln() + log_normal_pdf(x, means[j], vars[j]))
                    .collect();
                let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let denom = logs.iter().map(|l| (l - mx).exp()).sum::<f64>();
                ll += mx + denom.ln();
                for j in 0..k {
                    resp[i * k + j] = (logs[j] - mx).exp() / denom;
                }
            }
            // M step
            for j in 0..k {
                let nj: f64 = (0..n).map(|i| resp[i * k + j]).sum();
                if nj < 1e-8 {
                    // dead component: re-seed it at a random data point
                    means[j] = sorted[rng.random_range(0..n)];
                    vars[j] = var.max(var_floor);
                    weights[j] = 1e-3;
                    continue;
                }
                let mj = (0..n).map(|i| resp[i * k + j] * data[i]).sum::<f64>() / nj;
                let vj = (0..n)
                    .map(|i| resp[i * k + j] * (data[i] - mj) * (data[i] - mj))
                    .sum::<f64>()
                    / nj;
                means[j] = mj;
                vars[j] = vj.max(var_floor);
                weights[j] = nj / n as f64;
            }
            let wsum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= wsum;
            }
            if (ll - last_ll).abs() < tol {
                last_ll = ll;
                ok = true;
                break;
            }
            last_ll = ll;
        }
        // EM increases the log likelihood monotonically, so the last iterate
        // is still a valid (if not fully settled) candidate
        if !ok && last_ll.is_finite() {
            ok = true;
        }
        if ok {
            let cand = Mixture1d {
                weights: weights.clone(),
                means: means.clone(),
                vars: vars.clone(),
                loglik: last_ll,
            };
            if best.as_ref().map_or(true, |b| cand.loglik > b.loglik) {
                best = Some(cand);
            }
        }
    }
    best.ok_or(MixtureError::NonConvergence)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauReport {
    pub n: usize,
    pub bic_1: f64,
    pub bic_2: f64,
    pub two_components: bool,
    /// Component means of the selected model, sorted ascending.
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
}

/// One- vs two-component decision on post-event metrics; requires at least
/// 30 observations.
pub fn plateau_test(data: &[f64]) -> Result<PlateauReport, MixtureError> {
    let n = data.len();
    if n < 30 {
        return Err(MixtureError::InsufficientData { min: 30, got: n });
    }
    let one = fit_gmm(data, 1, 1, 7, 500, 1e-9)?;
    let two = fit_gmm(data, 2, 5, 7, 500, 1e-9)?;
    let bic_1 = one.bic(n);
    let bic_2 = two.bic(n);
    let two_components = bic_2 < bic_1;
    let sel = if two_components { &two } else { &one };
    let mut order: Vec<usize> = (0..sel.means.len()).collect();
    order.sort_by(|&a, &b| sel.means[a].partial_cmp(&sel.means[b]).unwrap());
    Ok(PlateauReport {
        n,
        bic_1,
        bic_2,
        two_components,
        means: order.iter().map(|&i| sel.means[i]).collect(),
        weights: order.iter().map(|&i| sel.weights[i]).collect(),
    })
}
