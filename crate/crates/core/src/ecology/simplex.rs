use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative wealths of (noise traders, value investors, trend followers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthVector {
    pub nt: f64,
    pub vi: f64,
    pub tf: f64,
}

pub const SIMPLEX_TOL: f64 = 1e-12;

impl WealthVector {
    pub fn new(nt: f64, vi: f64, tf: f64) -> Result<Self> {
        if [nt, vi, tf].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::SimplexBoundary("negative relative wealth"));
        }
        if (nt + vi + tf - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::SimplexBoundary("relative wealths must sum to one"));
        }
        Ok(Self { nt, vi, tf })
    }

    /// Normalises non-negative weights onto the simplex.
    pub fn normalized(weights: [f64; 3]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::SimplexBoundary(
                "weights must be non-negative with positive sum",
            ));
        }
        let [nt, vi, tf] = weights.map(|w| w / total);
        Ok(Self { nt, vi, tf })
    }

    pub const fn uniform() -> Self {
        Self {
            nt: 1.0 / 3.0,
            vi: 1.0 / 3.0,
            tf: 1.0 / 3.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.nt, self.vi, self.tf]
    }

    pub fn from_array(w: [f64; 3]) -> Result<Self> {
        Self::new(w[0], w[1], w[2])
    }

    pub fn min_component(&self) -> f64 {
        self.nt.min(self.vi).min(self.tf)
    }

    /// Shifts strategy `j` by `delta` and rescales the other two proportionally so
    /// the result stays on the simplex.
    pub fn perturbed(&self, j: usize, delta: f64) -> Result<Self> {
        let mut w = self.as_array();
        let rest = 1.0 - w[j];
        let target = w[j] + delta;
        if !(target > 0.0 && target < 1.0) || !(rest > 0.0) {
            return Err(Error::SimplexBoundary(
                "perturbation leaves the simplex interior",
            ));
        }
        let scale = (1.0 - target) / rest;
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = if i == j { target } else { *wi * scale };
        }
        if w.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::SimplexBoundary(
                "perturbation leaves the simplex interior",
            ));
        }
        Self::normalized(w)
    }
}

/// Barycentric grid with `resolution` steps per edge: `C(resolution + 2, 2)` points.
/// Points are shrunk towards the centre so every coordinate is at least `margin`.
pub fn simplex_grid(resolution: usize, margin: f64) -> Result<Vec<WealthVector>> {
    if resolution < 1 {
        return Err(Error::InvalidConfig(
            "grid resolution must be positive".into(),
        ));
    }
    if !(0.0..1.0 / 3.0).contains(&margin) {
        return Err(Error::InvalidConfig("margin must lie in [0, 1/3)".into()));
    }
    let n = resolution as f64;
    let shrink = 1.0 - 3.0 * margin;
    let mut out = Vec::with_capacity((resolution + 1) * (resolution + 2) / 2);
    for i in 0..=resolution {
        for j in 0..=(resolution - i) {
            let k = resolution - i - j;
            let raw = [i as f64 / n, j as f64 / n, k as f64 / n];
            out.push(WealthVector::normalized(raw.map(|x| margin + shrink * x))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_off_simplex() {
        assert!(WealthVector::new(0.5, 0.5, 0.1).is_err());
        assert!(WealthVector::new(-0.1, 0.6, 0.5).is_err());
        assert!(WealthVector::new(0.43, 0.34, 0.23).is_ok());
    }

    #[test]
    fn perturbation_renormalizes_others_proportionally() {
        let w = WealthVector::new(0.43, 0.34, 0.23).unwrap();
        let p = w.perturbed(2, 0.02).unwrap();
        assert_relative_eq!(p.tf, 0.25, epsilon = 1e-15);
        assert_relative_eq!(p.nt / p.vi, 0.43 / 0.34, epsilon = 1e-12);
        assert_relative_eq!(p.nt + p.vi + p.tf, 1.0, epsilon = 1e-15);
        assert!(w.perturbed(0, 0.6).is_err());
    }

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid(2, 0.0).unwrap().len(), 6);
        assert_eq!(simplex_grid(10, 0.02).unwrap().len(), 66);
        let g = simplex_grid(2, 0.0).unwrap();
        assert!(g.contains(&WealthVector::new(1.0, 0.0, 0.0).unwrap()));
        assert!(g.contains(&WealthVector::new(0.5, 0.0, 0.5).unwrap()));
        let g = simplex_grid(15, 0.02).unwrap();
        assert!(g.iter().all(|w| w.min_component() >= 0.02 - 1e-12));
    }
}
