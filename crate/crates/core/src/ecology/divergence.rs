//! Gaussian fits of ensemble states and the Kullback-Leibler divergence between
//! them.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Maximum-likelihood-style fit with the unbiased sample covariance.
pub fn fit_gaussian(samples: &[Vec<f64>]) -> Result<Gaussian> {
    let n = samples.len();
    let Some(first) = samples.first() else {
        return Err(Error::InsufficientHistory { need: 2, got: 0 });
    };
    let k = first.len();
    if n < 2 || k == 0 {
        return Err(Error::InsufficientHistory { need: 2, got: n });
    }
    if samples.iter().any(|s| s.len() != k) {
        return Err(Error::InvalidConfig("samples differ in dimension".into()));
    }
    let mut mean = DVector::zeros(k);
    for s in samples {
        mean += DVector::from_column_slice(s);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(k, k);
    for s in samples {
        let d = DVector::from_column_slice(s) - &mean;
        cov += &d * d.transpose();
    }
    cov /= (n - 1) as f64;
    Ok(Gaussian { mean, cov })
}

/// `KL(N(mu1, s1) || N(mu2, s2))` in nats.
pub fn kl_divergence_gaussian(
    mu1: &DVector<f64>,
    s1: &DMatrix<f64>,
    mu2: &DVector<f64>,
    s2: &DMatrix<f64>,
) -> Result<f64> {
    let k = mu1.len();
    if mu2.len() != k || s1.shape() != (k, k) || s2.shape() != (k, k) {
        return Err(Error::InvalidConfig("dimension mismatch".into()));
    }
    let symmetric = |m: &DMatrix<f64>| (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1e-300);
    if !symmetric(s1) || !symmetric(s2) {
        return Err(Error::NotPositiveDefinite);
    }
    let c1 = s1.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let c2 = s2.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let log_det = |c: &nalgebra::Cholesky<f64, nalgebra::Dyn>| {
        2.0 * c.l().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>()
    };
    let trace = c2.solve(s1).trace();
    let dm = mu2 - mu1;
    let quad = dm.dot(&c2.solve(&dm));
    let kl = 0.5 * (trace + quad - k as f64 + log_det(&c2) - log_det(&c1));
    // rounding can leave a tiny negative value for identical inputs
    Ok(kl.max(0.0))
}

/// Divergence of a fitted ensemble from a reference fit.
pub fn kl_between(current: &Gaussian, reference: &Gaussian) -> Result<f64> {
    kl_divergence_gaussian(&current.mean, &current.cov, &reference.mean, &reference.cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn m1(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn identical_gaussians_have_zero_divergence() {
        let mu = DVector::from_vec(alloc::vec![0.3, 0.5]);
        let s = DMatrix::from_row_slice(2, 2, &[0.02, 0.005, 0.005, 0.01]);
        assert_eq!(kl_divergence_gaussian(&mu, &s, &mu, &s).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_closed_forms() {
        let z = DVector::from_element(1, 0.0);
        let d = DVector::from_element(1, 0.7);
        assert_relative_eq!(
            kl_divergence_gaussian(&z, &m1(1.0), &d, &m1(1.0)).unwrap(),
            0.245,
            epsilon = 1e-12
        );
        // variance ratio only: 0.5 (r - 1 - ln r)
        let r: f64 = 4.0;
        let expected = 0.5 * (r - 1.0 - r.ln());
        assert_relative_eq!(
            kl_divergence_gaussian(&z, &m1(4.0), &z, &m1(1.0)).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_non_positive_definite() {
        let z = DVector::from_element(2, 0.0);
        let good = DMatrix::identity(2, 2);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert_eq!(
            kl_divergence_gaussian(&z, &singular, &z, &good),
            Err(Error::NotPositiveDefinite)
        );
        assert_eq!(
            kl_divergence_gaussian(&z, &good, &z, &asym),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn fit_recovers_sample_moments() {
        let samples = alloc::vec![
            alloc::vec![1.0, 2.0],
            alloc::vec![3.0, 2.0],
            alloc::vec![2.0, 5.0]
        ];
        let g = fit_gaussian(&samples).unwrap();
        assert_relative_eq!(g.mean[0], 2.0);
        assert_relative_eq!(g.mean[1], 3.0);
        assert_relative_eq!(g.cov[(0, 0)], 1.0);
        assert_relative_eq!(g.cov[(1, 1)], 3.0);
        assert_relative_eq!(g.cov[(0, 1)], 0.0);
        assert!(fit_gaussian(&samples[..1]).is_err());
    }

    fn pd(a: f64, b: f64, c: f64) -> DMatrix<f64> {
        // L L^T with positive diagonal
        let l = DMatrix::from_row_slice(2, 2, &[a, 0.0, b, c]);
        &l * l.transpose()
    }

    proptest! {
        #[test]
        fn divergence_is_non_negative_and_zero_only_on_equal_inputs(
            a1 in 0.1f64..3.0, b1 in -2.0f64..2.0, c1 in 0.1f64..3.0,
            a2 in 0.1f64..3.0, b2 in -2.0f64..2.0, c2 in 0.1f64..3.0,
            m in -2.0f64..2.0,
        ) {
            let (s1, s2) = (pd(a1, b1, c1), pd(a2, b2, c2));
            let mu1 = DVector::from_vec(alloc::vec![m, 0.0]);
            let mu2 = DVector::from_vec(alloc::vec![0.0, 0.0]);
            let kl = kl_divergence_gaussian(&mu1, &s1, &mu2, &s2).unwrap();
            prop_assert!(kl >= 0.0);
            prop_assert!(kl_divergence_gaussian(&mu1, &s1, &mu1, &s1).unwrap() < 1e-12);
            let differs = m.abs() > 1e-3 || (&s1 - &s2).amax() > 1e-3;
            if differs {
                prop_assert!(kl > 0.0);
            }
        }
    }
}
