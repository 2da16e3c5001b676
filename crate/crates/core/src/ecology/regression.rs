//! Linear models of market malfunction (volatility, mispricing) in terms of the
//! relative wealth of each strategy.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ecology::simplex::WealthVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub t_stat: Vec<f64>,
    /// Centred R², clamped to [0, 1].
    pub r_squared: f64,
    pub observations: usize,
}

/// Ordinary least squares of `y` on the columns of `design`.
pub fn ols(design: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit> {
    let (n, k) = design.shape();
    if n != y.len() {
        return Err(Error::InvalidConfig(
            "regressor and metric series differ in length".into(),
        ));
    }
    if n <= k {
        return Err(Error::InsufficientHistory {
            need: k + 1,
            got: n,
        });
    }
    let target = DVector::from_column_slice(y);
    let chol = (design.transpose() * design)
        .cholesky()
        .ok_or(Error::RankDeficient)?;
    // near-singular designs can still factor; compare pivots
    let d = chol.l().diagonal();
    let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
        (lo.min(x.abs()), hi.max(x.abs()))
    });
    if !(lo > 1e-7 * hi) {
        return Err(Error::RankDeficient);
    }
    let beta = chol.solve(&(design.transpose() * &target));
    let rss = (&target - design * &beta).norm_squared();
    let mean = target.mean();
    let tss: f64 = target.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let sigma2 = rss / (n - k) as f64;
    let inv = chol.inverse();
    let t_stat = (0..k)
        .map(|j| {
            let se = libm::sqrt(sigma2 * inv[(j, j)]);
            if se > 0.0 {
                beta[j] / se
            } else {
                f64::INFINITY.copysign(beta[j])
            }
        })
        .collect();
    Ok(OlsFit {
        coef: beta.iter().copied().collect(),
        t_stat,
        r_squared,
        observations: n,
    })
}

/// Regression on the three wealth shares without an intercept. The shares sum to
/// one, so the constant lies in their span and the centred R² applies.
pub fn ols_shares(x: &[[f64; 3]], y: &[f64]) -> Result<OlsFit> {
    ols(&DMatrix::from_fn(x.len(), 3, |i, j| x[i][j]), y)
}

/// Regression on an intercept and the VI and TF shares, with NT as the baseline.
/// Coefficients are (intercept, VI, TF).
pub fn ols_shares_with_intercept(x: &[[f64; 3]], y: &[f64]) -> Result<OlsFit> {
    ols(
        &DMatrix::from_fn(x.len(), 3, |i, j| if j == 0 { 1.0 } else { x[i][j] }),
        y,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalfunctionCoeffs {
    pub volatility: OlsFit,
    pub mispricing: OlsFit,
    /// Intercept variants, coefficients (intercept, VI, TF), for diagnostics.
    pub volatility_with_intercept: Option<OlsFit>,
    pub mispricing_with_intercept: Option<OlsFit>,
}

/// Regresses volatility and mispricing on relative wealth without an intercept.
pub fn regress_malfunction(
    wealth: &[[f64; 3]],
    volatility: &[f64],
    mispricing: &[f64],
) -> Result<MalfunctionCoeffs> {
    Ok(MalfunctionCoeffs {
        volatility: ols_shares(wealth, volatility)?,
        mispricing: ols_shares(wealth, mispricing)?,
        volatility_with_intercept: ols_shares_with_intercept(wealth, volatility).ok(),
        mispricing_with_intercept: ols_shares_with_intercept(wealth, mispricing).ok(),
    })
}

/// Predicted (volatility, mispricing) at `w` from the no-intercept fits.
pub fn predict_metrics(w: &WealthVector, coeffs: &MalfunctionCoeffs) -> (f64, f64) {
    let w = w.as_array();
    let dot = |c: &[f64]| (0..3).map(|i| c[i] * w[i]).sum::<f64>();
    (dot(&coeffs.volatility.coef), dot(&coeffs.mispricing.coef))
}
