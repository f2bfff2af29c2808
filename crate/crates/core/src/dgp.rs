//! Latent-factor samplers: independent, equicorrelated, single-parent
//! invertible constraint, and two-parent synergistic constraint.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FactorMatrix;
use crate::rng::Rng;

/// Margin kept from the equicorrelation feasibility bounds.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    #[default]
    Normal,
    Uniform,
}

/// Strictly monotone link for the single-parent constraint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    #[default]
    Cube,
    TanhAffine,
    Exp,
}

impl Link {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Link::Cube => x * x * x,
            Link::TanhAffine => (0.75 * x + 0.25).tanh(),
            Link::Exp => x.exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Cube => "cube",
            Link::TanhAffine => "tanh_affine",
            Link::Exp => "exp",
        }
    }
}

/// Two-argument function for the multi-parent constraint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synergy {
    #[default]
    Product,
    Radius,
}

impl Synergy {
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Synergy::Product => a * b,
            Synergy::Radius => (a * a + b * b).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Synergy::Product => "product",
            Synergy::Radius => "radius",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DgpKind {
    Independent,
    Correlated {
        rho: f64,
    },
    SingleConstraint {
        parent: usize,
        child: usize,
        link: Link,
    },
    MultiConstraint {
        sources: [usize; 2],
        child: usize,
        synergy: Synergy,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub d: usize,
    pub marginal: Marginal,
}

impl DgpSpec {
    pub fn short_name(&self) -> &'static str {
        match self.kind {
            DgpKind::Independent => "d1",
            DgpKind::Correlated { .. } => "d2",
            DgpKind::SingleConstraint { .. } => "d3",
            DgpKind::MultiConstraint { .. } => "d4",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "id")]
pub enum ConstraintFunction {
    Link(Link),
    Synergy(Synergy),
}

/// `z[child] = function(z[parents])` on every row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub child: usize,
    pub parents: Vec<usize>,
    pub function: ConstraintFunction,
}

impl Constraint {
    pub fn evaluate(&self, row: &[f64]) -> f64 {
        match self.function {
            ConstraintFunction::Link(l) => l.apply(row[self.parents[0]]),
            ConstraintFunction::Synergy(s) => s.apply(row[self.parents[0]], row[self.parents[1]]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DgpSample {
    pub spec: DgpSpec,
    pub z: FactorMatrix,
    pub d_eff: usize,
    pub constraints: Vec<Constraint>,
}

impl DgpSample {
    /// Largest absolute violation of any constraint over all rows.
    pub fn constraint_residual(&self) -> f64 {
        let z = self.z.as_matrix();
        let mut worst: f64 = 0.0;
        let mut row = vec![0.0; z.ncols()];
        for r in 0..z.nrows() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = z[(r, c)];
            }
            for k in &self.constraints {
                worst = worst.max((k.evaluate(&row) - row[k.child]).abs());
            }
        }
        worst
    }

    /// Factors that are not the child of any constraint, ascending.
    pub fn free_factors(&self) -> Vec<usize> {
        (0..self.spec.d)
            .filter(|j| self.constraints.iter().all(|k| k.child != *j))
            .collect()
    }

    /// Free factors ascending, then constrained children: the order in which
    /// factors are kept when the representation retains only a prefix.
    pub fn keep_order(&self) -> Vec<usize> {
        let mut order = self.free_factors();
        order.extend(self.constraints.iter().map(|k| k.child));
        order
    }
}

fn draw(n: usize, d: usize, marginal: Marginal, rng: &mut Rng) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(n, d);
    for c in 0..d {
        for r in 0..n {
            z[(r, c)] = match marginal {
                Marginal::Normal => rng.normal(),
                Marginal::Uniform => rng.uniform(),
            };
        }
    }
    z
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    Ok(())
}

fn finish(spec: DgpSpec, z: DMatrix<f64>, constraints: Vec<Constraint>) -> Result<DgpSample> {
    let d_eff = spec.d - constraints.len();
    Ok(DgpSample {
        spec,
        z: FactorMatrix::new(z)?,
        d_eff,
        constraints,
    })
}

pub fn sample_d1(d: usize, n: usize, marginal: Marginal, rng: &Rng) -> Result<DgpSample> {
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    check_n(n)?;
    let z = draw(n, d, marginal, &mut rng.derive("dgp/base"));
    finish(
        DgpSpec {
            kind: DgpKind::Independent,
            d,
            marginal,
        },
        z,
        vec![],
    )
}

/// Lower feasibility bound `-1/(d-1)` of the equicorrelation parameter.
pub fn equicorrelation_lower_bound(d: usize) -> f64 {
    if d <= 1 {
        f64::NEG_INFINITY
    } else {
        -1.0 / (d as f64 - 1.0)
    }
}

/// Gaussian factors with unit variances and common pairwise correlation `rho`.
pub fn sample_d2(d: usize, n: usize, rho: f64, rng: &Rng) -> Result<DgpSample> {
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    check_n(n)?;
    let bound = equicorrelation_lower_bound(d);
    if !(rho > bound + FEASIBILITY_MARGIN && rho < 1.0 - FEASIBILITY_MARGIN) {
        return Err(Error::InfeasibleCorrelation { rho, bound, d });
    }
    let sigma = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho });
    let chol = sigma
        .cholesky()
        .ok_or(Error::InfeasibleCorrelation { rho, bound, d })?;
    let g = draw(n, d, Marginal::Normal, &mut rng.derive("dgp/base"));
    let z = g * chol.l().transpose();
    finish(
        DgpSpec {
            kind: DgpKind::Correlated { rho },
            d,
            marginal: Marginal::Normal,
        },
        z,
        vec![],
    )
}

/// `z[child] = link(z[parent])` with the lowest indices as parent (0) and child (1).
pub fn sample_d3(d: usize, n: usize, link: Link, marginal: Marginal, rng: &Rng) -> Result<DgpSample> {
    sample_d3_at(d, n, 0, 1, link, marginal, rng)
}

pub fn sample_d3_at(
    d: usize,
    n: usize,
    parent: usize,
    child: usize,
    link: Link,
    marginal: Marginal,
    rng: &Rng,
) -> Result<DgpSample> {
    if d < 2 {
        return Err(Error::param("d", "single-parent constraint needs d >= 2"));
    }
    if parent >= d || child >= d || parent == child {
        return Err(Error::param("parent/child", "indices must be distinct and below d"));
    }
    check_n(n)?;
    let mut z = draw(n, d, marginal, &mut rng.derive("dgp/base"));
    for r in 0..n {
        z[(r, child)] = link.apply(z[(r, parent)]);
    }
    finish(
        DgpSpec {
            kind: DgpKind::SingleConstraint { parent, child, link },
            d,
            marginal,
        },
        z,
        vec![Constraint {
            child,
            parents: vec![parent],
            function: ConstraintFunction::Link(link),
        }],
    )
}

/// `z[child] = synergy(z[a], z[b])` with sources 0, 1 and child 2.
pub fn sample_d4(d: usize, n: usize, synergy: Synergy, marginal: Marginal, rng: &Rng) -> Result<DgpSample> {
    sample_d4_at(d, n, [0, 1], 2, synergy, marginal, rng)
}

pub fn sample_d4_at(
    d: usize,
    n: usize,
    sources: [usize; 2],
    child: usize,
    synergy: Synergy,
    marginal: Marginal,
    rng: &Rng,
) -> Result<DgpSample> {
    if d < 3 {
        return Err(Error::param("d", "two-parent constraint needs d >= 3"));
    }
    let [a, b] = sources;
    if a >= d || b >= d || child >= d || a == b || a == child || b == child {
        return Err(Error::param("sources/child", "indices must be distinct and below d"));
    }
    check_n(n)?;
    let mut z = draw(n, d, marginal, &mut rng.derive("dgp/base"));
    for r in 0..n {
        z[(r, child)] = synergy.apply(z[(r, a)], z[(r, b)]);
    }
    finish(
        DgpSpec {
            kind: DgpKind::MultiConstraint {
                sources,
                child,
                synergy,
            },
            d,
            marginal,
        },
        z,
        vec![Constraint {
            child,
            parents: vec![a, b],
            function: ConstraintFunction::Synergy(synergy),
        }],
    )
}

/// Sample any spec.
pub fn sample(spec: &DgpSpec, n: usize, rng: &Rng) -> Result<DgpSample> {
    match spec.kind {
        DgpKind::Independent => sample_d1(spec.d, n, spec.marginal, rng),
        DgpKind::Correlated { rho } => {
            if spec.marginal != Marginal::Normal {
                return Err(Error::param("marginal", "correlated factors are Gaussian"));
            }
            sample_d2(spec.d, n, rho, rng)
        }
        DgpKind::SingleConstraint { parent, child, link } => {
            sample_d3_at(spec.d, n, parent, child, link, spec.marginal, rng)
        }
        DgpKind::MultiConstraint {
            sources,
            child,
            synergy,
        } => sample_d4_at(spec.d, n, sources, child, synergy, spec.marginal, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numstats::{fractional_ranks, pearson};

    #[test]
    fn d1_independent_columns() {
        let s = sample_d1(5, 100_000, Marginal::Normal, &Rng::new(1, 0)).unwrap();
        assert_eq!(s.d_eff, 5);
        for i in 0..5 {
            for j in (i + 1)..5 {
                assert!(pearson(s.z.column(i), s.z.column(j)).unwrap().abs() < 0.02);
            }
        }
        let one = sample_d1(1, 10, Marginal::Uniform, &Rng::new(1, 0)).unwrap();
        assert_eq!((one.z.d(), one.d_eff), (1, 1));
        assert_eq!(s, sample_d1(5, 100_000, Marginal::Normal, &Rng::new(1, 0)).unwrap());
    }

    #[test]
    fn d2_feasibility() {
        match sample_d2(10, 100, -0.2, &Rng::new(0, 0)) {
            Err(Error::InfeasibleCorrelation { bound, .. }) => assert!((bound + 0.1111).abs() < 1e-3),
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(sample_d2(10, 100, -0.11, &Rng::new(0, 0)).is_ok());
        assert!(sample_d2(3, 100, 1.0, &Rng::new(0, 0)).is_err());
    }

    #[test]
    fn d2_zero_matches_d1() {
        let a = sample_d2(4, 50, 0.0, &Rng::new(3, 3)).unwrap();
        let b = sample_d1(4, 50, Marginal::Normal, &Rng::new(3, 3)).unwrap();
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn d2_target_correlation() {
        let s = sample_d2(3, 100_000, 0.8, &Rng::new(4, 0)).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let r = pearson(s.z.column(i), s.z.column(j)).unwrap();
                assert!((r - 0.8).abs() < 0.01, "{r}");
            }
        }
    }

    #[test]
    fn d3_cube_exact() {
        let s = sample_d3(4, 500, Link::Cube, Marginal::Normal, &Rng::new(5, 0)).unwrap();
        assert_eq!(s.d_eff, 3);
        for (a, b) in s.z.column(0).iter().zip(s.z.column(1)) {
            assert_eq!(*b, a * a * a);
        }
        assert_eq!(fractional_ranks(s.z.column(0)), fractional_ranks(s.z.column(1)));
        assert_eq!(s.constraint_residual(), 0.0);
        let two = sample_d3(2, 10, Link::Exp, Marginal::Uniform, &Rng::new(5, 0)).unwrap();
        assert_eq!(two.d_eff, 1);
    }

    #[test]
    fn d4_product_uncorrelated_but_determined() {
        let s = sample_d4(10, 100_000, Synergy::Product, Marginal::Normal, &Rng::new(6, 0)).unwrap();
        assert_eq!(s.d_eff, 9);
        assert!(pearson(s.z.column(0), s.z.column(2)).unwrap().abs() < 0.02);
        assert!(pearson(s.z.column(1), s.z.column(2)).unwrap().abs() < 0.02);
        assert!(s.constraint_residual() < 1e-12);
        assert_eq!(s.keep_order(), vec![0, 1, 3, 4, 5, 6, 7, 8, 9, 2]);
    }

    #[test]
    fn bad_indices() {
        assert!(sample_d3_at(3, 10, 1, 1, Link::Cube, Marginal::Normal, &Rng::new(0, 0)).is_err());
        assert!(sample_d4(2, 10, Synergy::Radius, Marginal::Normal, &Rng::new(0, 0)).is_err());
    }
}
