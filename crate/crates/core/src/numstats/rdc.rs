//! Randomized dependence coefficient: copula transform, random sinusoidal
//! features, largest canonical correlation between the two feature blocks.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{fractional_ranks, is_constant, CorrelationMatrix, DependenceKind};
use crate::error::{Error, Result};
use crate::matrix::{check_paired, CodeMatrix, FactorMatrix};
use crate::rng::Rng;

const RIDGE_RATIO: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdcSettings {
    /// Random features per variable.
    pub features: usize,
    /// Standard deviation of the random frequencies and phases.
    pub scale: f64,
}

impl Default for RdcSettings {
    fn default() -> Self {
        RdcSettings {
            features: 20,
            scale: 1.0 / 6.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdcValue {
    pub value: f64,
    /// A feature covariance was rank deficient and got a ridge.
    pub regularized: bool,
    /// One of the inputs was constant; value is 0.
    pub constant: bool,
}

/// Whitened random-feature block of one variable.
struct FeatureBlock {
    /// `n x k`, columns have identity covariance (up to the ridge).
    whitened: DMatrix<f64>,
    regularized: bool,
}

fn feature_block(x: &[f64], settings: &RdcSettings, rng: &mut Rng) -> Option<FeatureBlock> {
    let n = x.len();
    let k = settings.features;
    // Draw the weights even for constant inputs so stream use does not depend on data.
    let params: Vec<(f64, f64)> = (0..k)
        .map(|_| (settings.scale * rng.normal(), settings.scale * rng.normal()))
        .collect();
    if is_constant(x) {
        return None;
    }
    let u: Vec<f64> = fractional_ranks(x).into_iter().map(|r| r / n as f64).collect();
    let mut f = DMatrix::from_fn(n, k, |i, t| (params[t].0 * u[i] + params[t].1).sin());
    for mut col in f.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let cov = f.transpose() * &f / n as f64;
    let eig = SymmetricEigen::new(cov);
    let max_ev = eig.eigenvalues.max().max(0.0);
    if max_ev <= 0.0 {
        return None;
    }
    let min_ev = eig.eigenvalues.min();
    let regularized = min_ev <= RIDGE_RATIO * max_ev;
    let ridge = if regularized { RIDGE_RATIO * max_ev } else { 0.0 };
    let inv_sqrt = eig
        .eigenvalues
        .map(|ev| 1.0 / (ev.max(0.0) + ridge).sqrt());
    let w = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    Some(FeatureBlock {
        whitened: f * w,
        regularized,
    })
}

fn canonical(a: &FeatureBlock, b: &FeatureBlock) -> f64 {
    let n = a.whitened.nrows() as f64;
    let cross = a.whitened.transpose() * &b.whitened / n;
    let sv = cross.singular_values();
    sv.max().clamp(0.0, 1.0)
}

fn check_settings(n: usize, settings: &RdcSettings) -> Result<()> {
    if n < 20 {
        return Err(Error::TooFewSamples { needed: 20, got: n });
    }
    if settings.features == 0 {
        return Err(Error::param("features", "must be at least 1"));
    }
    if !(settings.scale > 0.0) {
        return Err(Error::param("scale", "must be positive"));
    }
    Ok(())
}

pub fn rdc(x: &[f64], y: &[f64], settings: &RdcSettings, rng: &Rng) -> Result<RdcValue> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "rdc inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    check_settings(x.len(), settings)?;
    let a = feature_block(x, settings, &mut rng.derive("rdc/x"));
    let b = feature_block(y, settings, &mut rng.derive("rdc/y"));
    Ok(match (a, b) {
        (Some(a), Some(b)) => RdcValue {
            value: canonical(&a, &b),
            regularized: a.regularized || b.regularized,
            constant: false,
        },
        _ => RdcValue {
            value: 0.0,
            regularized: false,
            constant: true,
        },
    })
}

/// RDC between every code and every factor. Feature draws are per column,
/// so each column's features are shared across all of its pairings.
pub fn rdc_matrix(
    zhat: &CodeMatrix,
    z: &FactorMatrix,
    settings: &RdcSettings,
    rng: &Rng,
) -> Result<CorrelationMatrix> {
    check_paired(zhat, z)?;
    check_settings(z.n(), settings)?;
    let codes: Vec<Option<FeatureBlock>> = (0..zhat.m())
        .map(|i| feature_block(zhat.column(i), settings, &mut rng.derive_indexed("rdc/code", i as u64)))
        .collect();
    let factors: Vec<Option<FeatureBlock>> = (0..z.d())
        .map(|j| feature_block(z.column(j), settings, &mut rng.derive_indexed("rdc/factor", j as u64)))
        .collect();
    let entries = DMatrix::from_fn(zhat.m(), z.d(), |i, j| match (&codes[i], &factors[j]) {
        (Some(a), Some(b)) => canonical(a, b),
        _ => 0.0,
    });
    let regularized = codes.iter().chain(&factors).flatten().any(|b| b.regularized);
    Ok(CorrelationMatrix {
        entries,
        kind: DependenceKind::Rdc,
        constant_codes: codes.iter().map(Option::is_none).collect(),
        constant_factors: factors.iter().map(Option::is_none).collect(),
        regularized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniforms(seed: u64, n: usize) -> Vec<f64> {
        let mut r = Rng::new(seed, 99);
        (0..n).map(|_| r.uniform()).collect()
    }

    #[test]
    fn identical_variables() {
        let x = uniforms(1, 1000);
        let v = rdc(&x, &x, &RdcSettings::default(), &Rng::new(0, 0)).unwrap();
        assert!(v.value >= 0.99, "{}", v.value);
    }

    #[test]
    fn constant_input_gives_zero() {
        let x = uniforms(1, 50);
        let c = vec![2.0; 50];
        let v = rdc(&x, &c, &RdcSettings::default(), &Rng::new(0, 0)).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.constant);
    }

    #[test]
    fn rejects_small_n() {
        let x = uniforms(1, 10);
        assert!(rdc(&x, &x, &RdcSettings::default(), &Rng::new(0, 0)).is_err());
    }
}
