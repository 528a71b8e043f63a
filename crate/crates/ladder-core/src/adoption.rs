//! Buyer adoption cutoff alpha and value W under local silence.
//!
//! Inside the silence window the belief moves deterministically toward m_bar,
//! so the stopping problem collapses to one dimension: smooth fit pins alpha
//! by mu_bar(alpha) S'(alpha) = r S(alpha).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdoptionError {
    #[error("bracket [{0}, {1}] does not contain a sign change of the smooth-fit residual")]
    NoSignChange(f64, f64),
    #[error("root finder failed to converge")]
    NonConvergence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdoptionSolution {
    pub alpha: f64,
    pub s_alpha: f64,
    pub smooth_fit_residual: f64,
    pub bracket: (f64, f64),
}

/// Closed form with linear drift and linear surplus S(m) = a m - p:
/// alpha = (kappa m_bar + (r/a) p) / (kappa + r).
pub fn solve_alpha_linear(kappa: f64, m_bar: f64, r: f64, a: f64, p: f64) -> f64 {
    (kappa * m_bar + r / a * p) / (kappa + r)
}

/// General smooth-fit root mu_bar(alpha) S'(alpha) - r S(alpha) = 0 by Brent
/// on a bracket with a sign change; S' by central difference (exact for
/// linear S).
pub fn solve_alpha_general(
    mu_bar: impl Fn(f64) -> f64,
    s: impl Fn(f64) -> f64,
    r: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64, AdoptionError> {
    let h = 1e-6;
    let g = |m: f64| {
        let sp = (s(m + h) - s(m - h)) / (2.0 * h);
        mu_bar(m) * sp - r * s(m)
    };
    brent(g, bracket.0, bracket.1, tol, 200)
}

fn brent(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64, AdoptionError> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa * fb > 0.0 {
        return Err(AdoptionError::NoSignChange(a, b));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..max_iter {
        if fb == 0.0 || (b - a).abs() < tol {
            return Ok(b);
        }
        let mut s_new = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !(s_new > lo.min(b) && s_new < lo.max(b))
            || (mflag && (s_new - b).abs() >= (b - c).abs() / 2.0)
            || (!mflag && (s_new - b).abs() >= (c - d).abs() / 2.0)
            || (mflag && (b - c).abs() < tol)
            || (!mflag && (c - d).abs() < tol);
        if cond {
            s_new = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s_new);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s_new;
            fb = fs;
        } else {
            a = s_new;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(AdoptionError::NonConvergence)
}

/// Deterministic-approach value below the cutoff:
///   W(m) = ((m_bar - alpha)/(m_bar - m))^{r/kappa} S(alpha)
/// and the hitting time tau(m) = (1/kappa) ln((m_bar - m)/(m_bar - alpha)).
/// For m >= alpha the buyer adopts immediately: (S(alpha), 0).
pub fn buyer_value(
    m: f64,
    alpha: f64,
    kappa: f64,
    m_bar: f64,
    r: f64,
    s_alpha: f64,
) -> (f64, f64) {
    if m >= alpha {
        return (s_alpha, 0.0);
    }
    let ratio = (m_bar - alpha) / (m_bar - m);
    let w = ratio.powf(r / kappa) * s_alpha;
    let tau = (1.0 / kappa) * ((m_bar - m) / (m_bar - alpha)).ln();
    (w, tau)
}

/// |W'(alpha-) - S'(alpha)| by one-sided finite difference with step h.
pub fn smooth_fit_residual(
    alpha: f64,
    kappa: f64,
    m_bar: f64,
    r: f64,
    s: impl Fn(f64) -> f64,
    h: f64,
) -> f64 {
    let s_alpha = s(alpha);
    // second-order one-sided difference from below
    let (w1, _) = buyer_value(alpha - h, alpha, kappa, m_bar, r, s_alpha);
    let (w2, _) = buyer_value(alpha - 2.0 * h, alpha, kappa, m_bar, r, s_alpha);
    let w_prime = (3.0 * s_alpha - 4.0 * w1 + w2) / (2.0 * h);
    let s_prime = (s(alpha + h) - s(alpha - h)) / (2.0 * h);
    (w_prime - s_prime).abs()
}

/// Closed-form derivatives of the linear-case cutoff:
/// d alpha / d p = r / (a (kappa + r)),  d alpha / d m_bar = kappa / (kappa + r).
pub fn adoption_comparative_statics(kappa: f64, _m_bar: f64, r: f64, a: f64) -> (f64, f64) {
    (r / (a * (kappa + r)), kappa / (kappa + r))
}

/// Full adoption solve for a parameter set, with diagnostics.
pub fn solve_adoption(
    kappa: f64,
    m_bar: f64,
    r: f64,
    a: f64,
    p: f64,
) -> AdoptionSolution {
    let alpha = solve_alpha_linear(kappa, m_bar, r, a, p);
    let s = |m: f64| a * m - p;
    AdoptionSolution {
        alpha,
        s_alpha: s(alpha),
        smooth_fit_residual: smooth_fit_residual(alpha, kappa, m_bar, r, s, 1e-6),
        bracket: (alpha - 1.0, m_bar - 1e-8),
    }
}
