//! Analytic and exhaustive ground truths for the metric implementations.
//!
//! The analytic part covers a three-factor Gaussian model: `z0` independent
//! of the correlated pair `(z1, z2)` with correlation `rho`, encoded as
//! `(s z0, z1 + eps z2, eps z1 + z2)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::encoders::{encode_linear, EncodedDataset};
use crate::error::{Error, Result};
use crate::matrix::FactorMatrix;
use crate::metrics::{mcc_dependence, RowSubset};
use crate::numstats::{DependenceKind, RdcSettings};
use crate::rng::Rng;

/// Largest side for which [`brute_force_mcc`] enumerates injections.
pub const BRUTE_FORCE_MAX_DIM: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMixingParams {
    /// Correlation of the mixed factor pair.
    pub rho: f64,
    /// Cross-loading of each mixed code on the other factor.
    pub epsilon: f64,
}

impl SymmetricMixingParams {
    pub fn new(rho: f64, epsilon: f64) -> Result<Self> {
        let p = SymmetricMixingParams { rho, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::param("rho", "must lie in (-1, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// `1 + eps^2 + 2 eps rho`, the variance of each mixed code.
    fn code_variance(&self) -> f64 {
        1.0 + self.epsilon * self.epsilon + 2.0 * self.epsilon * self.rho
    }
}

/// Correlation of a mixed code with its own factor.
pub fn r22(p: &SymmetricMixingParams) -> f64 {
    (1.0 + p.epsilon * p.rho) / p.code_variance().sqrt()
}

/// Correlation of a mixed code with the other factor of the pair.
pub fn r32(p: &SymmetricMixingParams) -> f64 {
    (p.epsilon + p.rho) / p.code_variance().sqrt()
}

/// Sign of `d r22 / d rho`, which is the sign of `rho + eps`.
pub fn r22_derivative_sign(p: &SymmetricMixingParams) -> i8 {
    let s = p.rho + p.epsilon;
    if s > 0.0 {
        1
    } else if s < 0.0 {
        -1
    } else {
        0
    }
}

/// Derivative `d r22 / d rho = eps^2 (rho + eps) / (1 + eps^2 + 2 eps rho)^{3/2}`.
pub fn r22_derivative(p: &SymmetricMixingParams) -> f64 {
    p.epsilon * p.epsilon * (p.rho + p.epsilon) / p.code_variance().powf(1.5)
}

/// Population MCC of the symmetric mixing model: `(1 + 2 |r22|) / 3`.
pub fn mcc_closed_form(p: &SymmetricMixingParams) -> Result<f64> {
    p.validate()?;
    if p.epsilon == 1.0 {
        // The general formula divides 0 by 0 at rho = -1; this form does not.
        return Ok((1.0 + 2.0 * ((1.0 + p.rho) / 2.0).sqrt()) / 3.0);
    }
    Ok((1.0 + 2.0 * r22(p).abs()) / 3.0)
}

/// General two-code mixing `code1 = mix[0][0] z1 + mix[0][1] z2`,
/// `code2 = mix[1][0] z1 + mix[1][1] z2`, alongside an independent scaled
/// copy of `z0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericMixing {
    pub rho: f64,
    pub mix: [[f64; 2]; 2],
}

impl GenericMixing {
    /// Population correlation matrix of the mixed block, `[factor][code]`.
    pub fn correlations(&self) -> Result<[[f64; 2]; 2]> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::param("rho", "must lie in (-1, 1)"));
        }
        let mut out = [[0.0; 2]; 2];
        for (code, row) in self.mix.iter().enumerate() {
            let [own, other] = *row;
            let var = own * own + other * other + 2.0 * own * other * self.rho;
            if var <= 0.0 {
                return Err(Error::param("mix", "a mixed code has zero variance"));
            }
            let sd = var.sqrt();
            out[0][code] = (own + other * self.rho) / sd;
            out[1][code] = (own * self.rho + other) / sd;
        }
        Ok(out)
    }

    /// `(1 + max(S_diag, S_swap)) / 3`.
    pub fn mcc(&self) -> Result<f64> {
        let c = self.correlations()?;
        let diag = c[0][0].abs() + c[1][1].abs();
        let swap = c[0][1].abs() + c[1][0].abs();
        Ok((1.0 + diag.max(swap)) / 3.0)
    }
}

/// Lower-bound scaling `sqrt(2 ln m / n)` of the expected null MCC-P.
pub fn null_mcc_floor(m: usize, n: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::param("m", "must be at least 2"));
    }
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    Ok((2.0 * (m as f64).ln() / n as f64).sqrt())
}

/// Exhaustive MCC over all injections of the shorter side into the longer
/// one. Sums are accumulated in the same order as the Hungarian path, so
/// equal matchings give bit-identical values.
pub fn brute_force_mcc_matrix(abs_dep: &DMatrix<f64>) -> Result<f64> {
    let (m, d) = abs_dep.shape();
    if m == 0 || d == 0 {
        return Err(Error::Empty);
    }
    if m.max(d) > BRUTE_FORCE_MAX_DIM {
        return Err(Error::param("dimensions", format!("brute force limited to {BRUTE_FORCE_MAX_DIM}")));
    }
    let short = m.min(d);
    let long = m.max(d);
    // entry(s, l): short-side index s paired with long-side index l.
    let entry = |s: usize, l: usize| if d <= m { abs_dep[(l, s)] } else { abs_dep[(s, l)] };
    let mut best = f64::NEG_INFINITY;
    let mut chosen = vec![0usize; short];
    let mut used = vec![false; long];
    fn walk(
        depth: usize,
        short: usize,
        long: usize,
        chosen: &mut Vec<usize>,
        used: &mut Vec<bool>,
        entry: &dyn Fn(usize, usize) -> f64,
        best: &mut f64,
    ) {
        if depth == short {
            let mut total = 0.0;
            for (s, &l) in chosen.iter().enumerate() {
                total += entry(s, l);
            }
            if total > *best {
                *best = total;
            }
            return;
        }
        for l in 0..long {
            if !used[l] {
                used[l] = true;
                chosen[depth] = l;
                walk(depth + 1, short, long, chosen, used, entry, best);
                used[l] = false;
            }
        }
    }
    walk(0, short, long, &mut chosen, &mut used, &entry, &mut best);
    Ok(best / short as f64)
}

/// Exhaustive MCC on all rows, using the same dependence matrix as
/// [`crate::metrics::mcc`].
pub fn brute_force_mcc(ds: &EncodedDataset, kind: DependenceKind) -> Result<f64> {
    if ds.m().max(ds.d()) > BRUTE_FORCE_MAX_DIM {
        return Err(Error::param("dimensions", format!("brute force limited to {BRUTE_FORCE_MAX_DIM}")));
    }
    let (abs_dep, cm) = mcc_dependence(ds, kind, RowSubset::All, 0.8, &RdcSettings::default(), &Rng::new(0, 0))?;
    if cm.constant_codes.iter().all(|c| *c) {
        return Ok(0.0);
    }
    brute_force_mcc_matrix(&abs_dep)
}

/// Three Gaussian factors (`z0` independent, `corr(z1, z2) = rho`) encoded
/// as `(scale z0, z1 + eps z2, eps z1 + z2)`.
pub fn symmetric_mixing_dataset(rho: f64, epsilon: f64, n: usize, scale: f64, rng: &Rng) -> Result<EncodedDataset> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::param("rho", "must lie in (-1, 1)"));
    }
    if scale == 0.0 {
        return Err(Error::param("scale", "must be nonzero"));
    }
    let mut g = rng.derive("dgp/base");
    let draws = DMatrix::from_fn(n, 3, |_, _| g.normal());
    let tail = (1.0 - rho * rho).sqrt();
    let z = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => draws[(r, 0)],
        1 => draws[(r, 1)],
        _ => rho * draws[(r, 1)] + tail * draws[(r, 2)],
    });
    let z = FactorMatrix::new(z)?;
    let mixing = DMatrix::from_row_slice(3, 3, &[scale, 0.0, 0.0, 0.0, 1.0, epsilon, 0.0, epsilon, 1.0]);
    encode_linear(&z, &mixing, &[0.0; 3])
}

/// One point of an analytic curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rho: f64,
    pub epsilon: f64,
    pub r22: f64,
    pub r32: f64,
    pub mcc: f64,
    pub derivative_sign: i8,
}

/// Closed-form curve over a `(rho, eps)` grid; infeasible points are skipped.
pub fn mixing_curve(rhos: &[f64], epsilons: &[f64]) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for &epsilon in epsilons {
        for &rho in rhos {
            let Ok(p) = SymmetricMixingParams::new(rho, epsilon) else {
                continue;
            };
            out.push(CurvePoint {
                rho,
                epsilon,
                r22: r22(&p),
                r32: r32(&p),
                mcc: mcc_closed_form(&p).expect("validated"),
                derivative_sign: r22_derivative_sign(&p),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloorPoint {
    pub m: usize,
    pub n: usize,
    pub floor: f64,
}

pub fn null_floor_curve(ms: &[usize], ns: &[usize]) -> Vec<FloorPoint> {
    let mut out = Vec::new();
    for &m in ms {
        for &n in ns {
            if let Ok(floor) = null_mcc_floor(m, n) {
                out.push(FloorPoint { m, n, floor });
            }
        }
    }
    out
}

/// Write serializable rows as CSV with a header.
pub fn write_curve_csv<T: Serialize, W: std::io::Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mcc;

    #[test]
    fn closed_form_reference_points() {
        let p = SymmetricMixingParams::new(0.0, 0.5).unwrap();
        let v = mcc_closed_form(&p).unwrap();
        assert!((v - (1.0 + 2.0 / 1.25f64.sqrt()) / 3.0).abs() < 1e-15);
        assert!((v - 0.9296).abs() < 1e-4);
        for eps in [0.2, 0.5, 0.9] {
            let p = SymmetricMixingParams::new(-eps, eps).unwrap();
            let expect = (1.0 + 2.0 * (1.0 - eps * eps).sqrt()) / 3.0;
            assert!((mcc_closed_form(&p).unwrap() - expect).abs() < 1e-12);
            assert_eq!(r22_derivative_sign(&p), 0);
            assert!((r22(&p) - (1.0 - eps * eps).sqrt()).abs() < 1e-12);
        }
        let hi = SymmetricMixingParams::new(0.999_999, 1.0).unwrap();
        assert!((mcc_closed_form(&hi).unwrap() - 1.0).abs() < 1e-6);
        assert!(SymmetricMixingParams::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn derivative_sign_matches_finite_difference() {
        for eps in [0.25, 0.5, 0.75] {
            for rho in [-0.9, -0.6, -0.3, 0.0, 0.4, 0.8] {
                let p = SymmetricMixingParams::new(rho, eps).unwrap();
                let h = 1e-6;
                let up = r22(&SymmetricMixingParams::new(rho + h, eps).unwrap());
                let down = r22(&SymmetricMixingParams::new(rho - h, eps).unwrap());
                let fd = (up - down) / (2.0 * h);
                assert!((fd - r22_derivative(&p)).abs() < 1e-6);
                assert_eq!(fd.signum() as i8, r22_derivative_sign(&p));
            }
        }
    }

    #[test]
    fn generic_reduces_to_symmetric() {
        let g = GenericMixing {
            rho: -0.3,
            mix: [[1.0, 0.4], [0.4, 1.0]],
        };
        let p = SymmetricMixingParams::new(-0.3, 0.4).unwrap();
        assert!((g.mcc().unwrap() - mcc_closed_form(&p).unwrap()).abs() < 1e-15);
        let swapped = GenericMixing {
            rho: 0.2,
            mix: [[0.1, 1.0], [1.0, 0.1]],
        };
        let c = swapped.correlations().unwrap();
        assert!(c[0][1].abs() + c[1][0].abs() > c[0][0].abs() + c[1][1].abs());
    }

    #[test]
    fn floor_values() {
        assert!((null_mcc_floor(50, 100).unwrap() - 0.2797).abs() < 1e-3);
        assert!(null_mcc_floor(2, 1_000_000_000).unwrap() < 1e-4);
        assert!(null_mcc_floor(1, 10).is_err());
    }

    #[test]
    fn brute_force_small_cases() {
        let s = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        assert_eq!(brute_force_mcc_matrix(&s).unwrap(), (0.9 + 0.8) / 2.0);
        let col = DMatrix::from_column_slice(3, 1, &[0.2, 0.7, 0.4]);
        assert_eq!(brute_force_mcc_matrix(&col).unwrap(), 0.7);
        assert!(brute_force_mcc_matrix(&DMatrix::zeros(9, 2)).is_err());
    }

    #[test]
    fn dataset_structure() {
        let ds = symmetric_mixing_dataset(0.3, 1.0, 100, 1.0, &Rng::new(1, 0)).unwrap();
        assert_eq!(ds.zhat.column(1), ds.zhat.column(2));
        let e1 = symmetric_mixing_dataset(0.0, 0.0, 100, 1.0, &Rng::new(1, 0)).unwrap();
        assert_eq!(e1.zhat.as_matrix(), e1.z.as_matrix());
        let big = symmetric_mixing_dataset(-0.4, 0.5, 20_000, 1.0, &Rng::new(2, 0)).unwrap();
        let p = SymmetricMixingParams::new(-0.4, 0.5).unwrap();
        let emp = mcc(&big, DependenceKind::Pearson).unwrap().value.unwrap();
        assert!((emp - mcc_closed_form(&p).unwrap()).abs() < 3.0 / (20_000f64).sqrt());
        assert_eq!(brute_force_mcc(&big, DependenceKind::Pearson).unwrap(), emp);
    }
}
