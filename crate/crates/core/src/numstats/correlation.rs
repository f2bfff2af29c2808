use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::is_constant;
use crate::error::{Error, Result};
use crate::matrix::{check_paired, CodeMatrix, FactorMatrix};
use crate::numstats::rdc::{rdc_matrix, RdcSettings};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceKind {
    Pearson,
    Spearman,
    Rdc,
}

/// Pairwise dependence between codes (rows) and factors (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: DMatrix<f64>,
    pub kind: DependenceKind,
    pub constant_codes: Vec<bool>,
    pub constant_factors: Vec<bool>,
    /// Set when an RDC feature covariance needed ridge regularization.
    pub regularized: bool,
}

impl CorrelationMatrix {
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn d(&self) -> usize {
        self.entries.ncols()
    }

    pub fn abs(&self) -> DMatrix<f64> {
        self.entries.map(f64::abs)
    }
}

/// Centered copy and its sum of squares, or `None` for a constant column.
fn centered(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    if is_constant(x) {
        return None;
    }
    let m = super::mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let ss = dot(&c, &c);
    if ss == 0.0 {
        return None;
    }
    Some((c, ss))
}

fn correlate(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> f64 {
    (dot(&a.0, &b.0) / (a.1 * b.1).sqrt()).clamp(-1.0, 1.0)
}

/// Sample Pearson correlation; `None` if either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson: length mismatch");
    Some(correlate(&centered(x)?, &centered(y)?))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 1-based ranks with ties replaced by their average rank.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn correlate_columns(
    codes: &[Vec<f64>],
    factors: &[Vec<f64>],
    kind: DependenceKind,
) -> CorrelationMatrix {
    let cu: Vec<Option<(Vec<f64>, f64)>> = codes.iter().map(|c| centered(c)).collect();
    let fu: Vec<Option<(Vec<f64>, f64)>> = factors.iter().map(|c| centered(c)).collect();
    let entries = DMatrix::from_fn(codes.len(), factors.len(), |i, j| match (&cu[i], &fu[j]) {
        (Some(a), Some(b)) => correlate(a, b),
        _ => 0.0,
    });
    CorrelationMatrix {
        entries,
        kind,
        constant_codes: cu.iter().map(Option::is_none).collect(),
        constant_factors: fu.iter().map(Option::is_none).collect(),
        regularized: false,
    }
}

fn check_inputs(zhat: &CodeMatrix, z: &FactorMatrix) -> Result<()> {
    check_paired(zhat, z)?;
    if z.n() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: z.n() });
    }
    Ok(())
}

pub fn pearson_matrix(zhat: &CodeMatrix, z: &FactorMatrix) -> Result<CorrelationMatrix> {
    check_inputs(zhat, z)?;
    let codes: Vec<Vec<f64>> = (0..zhat.m()).map(|i| zhat.column(i).to_vec()).collect();
    let factors: Vec<Vec<f64>> = (0..z.d()).map(|j| z.column(j).to_vec()).collect();
    Ok(correlate_columns(&codes, &factors, DependenceKind::Pearson))
}

pub fn spearman_matrix(zhat: &CodeMatrix, z: &FactorMatrix) -> Result<CorrelationMatrix> {
    check_inputs(zhat, z)?;
    let codes: Vec<Vec<f64>> = (0..zhat.m()).map(|i| fractional_ranks(zhat.column(i))).collect();
    let factors: Vec<Vec<f64>> = (0..z.d()).map(|j| fractional_ranks(z.column(j))).collect();
    Ok(correlate_columns(&codes, &factors, DependenceKind::Spearman))
}

/// Dispatch on `kind`; `rng` is only consumed by RDC.
pub fn dependence_matrix(
    zhat: &CodeMatrix,
    z: &FactorMatrix,
    kind: DependenceKind,
    rdc_settings: &RdcSettings,
    rng: &Rng,
) -> Result<CorrelationMatrix> {
    match kind {
        DependenceKind::Pearson => pearson_matrix(zhat, z),
        DependenceKind::Spearman => spearman_matrix(zhat, z),
        DependenceKind::Rdc => rdc_matrix(zhat, z, rdc_settings, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &[f64], b: &[f64]) -> (CodeMatrix, FactorMatrix) {
        (
            CodeMatrix::from_columns(&[a.to_vec()]).unwrap(),
            FactorMatrix::from_columns(&[b.to_vec()]).unwrap(),
        )
    }

    #[test]
    fn exact_linear_and_anti() {
        let (c, f) = pair(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(pearson_matrix(&c, &f).unwrap().entries[(0, 0)], 1.0);
        let (c, f) = pair(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]);
        assert_eq!(pearson_matrix(&c, &f).unwrap().entries[(0, 0)], -1.0);
    }

    #[test]
    fn independent_normals_large_n() {
        let mut r = Rng::new(11, 0);
        let n = 1_000_000;
        let a: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let b: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        assert!(pearson(&a, &b).unwrap().abs() < 0.01);
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        let mut r = Rng::new(2, 0);
        let z: Vec<f64> = (0..200).map(|_| r.normal()).collect();
        let cube: Vec<f64> = z.iter().map(|v| v.powi(3)).collect();
        let (c, f) = pair(&cube, &z);
        assert!((spearman_matrix(&c, &f).unwrap().entries[(0, 0)] - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let (c, f) = pair(&neg, &z);
        assert!((spearman_matrix(&c, &f).unwrap().entries[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_flagged() {
        let (c, f) = pair(&[5.0, 5.0, 5.0, 5.0], &[1.0, 2.0, 3.0, 0.5]);
        let m = spearman_matrix(&c, &f).unwrap();
        assert_eq!(m.entries[(0, 0)], 0.0);
        assert!(m.constant_codes[0]);
        assert!(!m.constant_factors[0]);
    }

    #[test]
    fn errors() {
        let (c, f) = pair(&[1.0, 2.0], &[1.0, 3.0]);
        assert!(matches!(pearson_matrix(&c, &f), Err(Error::TooFewSamples { .. })));
        let c = CodeMatrix::from_columns(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let f = FactorMatrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert!(matches!(pearson_matrix(&c, &f), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(fractional_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(fractional_ranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }
}
