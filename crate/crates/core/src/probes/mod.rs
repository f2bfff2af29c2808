//! Supervised probes used by the regression-based metrics.

mod gbt;
mod linear;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use gbt::{GbtModel, GbtParams};
pub use linear::{lasso_coordinate_descent, least_squares, LassoFit, LinearFit};

use crate::error::{Error, Result};
use crate::matrix::CodeMatrix;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeKind {
    Linear,
    Ridge {
        lambda: f64,
    },
    /// Penalty is `alpha * max|X^T y| / n` on standardized inputs.
    Lasso {
        #[serde(default = "default_lasso_alpha")]
        alpha: f64,
    },
    Gbt(GbtParams),
}

fn default_lasso_alpha() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    #[serde(default = "default_true")]
    pub standardize_inputs: bool,
}

impl ProbeSpec {
    pub fn linear() -> Self {
        ProbeSpec {
            kind: ProbeKind::Linear,
            standardize_inputs: true,
        }
    }

    pub fn ridge(lambda: f64) -> Self {
        ProbeSpec {
            kind: ProbeKind::Ridge { lambda },
            standardize_inputs: true,
        }
    }

    pub fn lasso() -> Self {
        ProbeSpec {
            kind: ProbeKind::Lasso {
                alpha: default_lasso_alpha(),
            },
            standardize_inputs: true,
        }
    }

    pub fn gbt() -> Self {
        ProbeSpec {
            kind: ProbeKind::Gbt(GbtParams::default()),
            standardize_inputs: true,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ProbeKind::Linear => "linear".into(),
            ProbeKind::Ridge { lambda } => format!("ridge(lambda={lambda})"),
            ProbeKind::Lasso { alpha } => format!("lasso(alpha={alpha})"),
            ProbeKind::Gbt(p) => format!(
                "gbt(trees={},depth={},lr={},subsample={})",
                p.trees, p.depth, p.learning_rate, p.subsample
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ProbeKind::Linear => Ok(()),
            ProbeKind::Ridge { lambda } if !(*lambda >= 0.0) => {
                Err(Error::param("lambda", "must be non-negative"))
            }
            ProbeKind::Lasso { alpha } if !(*alpha >= 0.0) => {
                Err(Error::param("alpha", "must be non-negative"))
            }
            ProbeKind::Gbt(p) => p.validate(),
            _ => Ok(()),
        }
    }

    fn is_linear_family(&self) -> bool {
        !matches!(self.kind, ProbeKind::Gbt(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeFlag {
    /// Normal equations were singular; refit with a tiny ridge.
    RidgeFallback,
    /// Lasso hit the sweep limit before converging.
    NotConverged,
}

#[derive(Clone, Debug)]
enum Model {
    Linear { coef: Vec<f64>, intercept: f64 },
    Gbt(GbtModel),
}

/// Probe fitted to one target.
#[derive(Clone, Debug)]
pub struct FittedProbe {
    model: Model,
    importance: Vec<f64>,
    train_r2: Option<f64>,
    flags: Vec<ProbeFlag>,
}

impl FittedProbe {
    pub fn predict(&self, inputs: &DMatrix<f64>) -> Vec<f64> {
        match &self.model {
            Model::Linear { coef, intercept } => (0..inputs.nrows())
                .map(|r| {
                    intercept
                        + coef
                            .iter()
                            .enumerate()
                            .map(|(c, b)| b * inputs[(r, c)])
                            .sum::<f64>()
                })
                .collect(),
            Model::Gbt(g) => g.predict(inputs),
        }
    }

    /// Non-negative importance per input column.
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    pub fn train_r2(&self) -> Option<f64> {
        self.train_r2
    }

    pub fn flags(&self) -> &[ProbeFlag] {
        &self.flags
    }

    pub fn gbt(&self) -> Option<&GbtModel> {
        match &self.model {
            Model::Gbt(g) => Some(g),
            Model::Linear { .. } => None,
        }
    }
}

/// `1 - SSE/SST`; `None` when the target has zero variance.
pub fn r2_from_predictions(pred: &[f64], truth: &[f64]) -> Option<f64> {
    let m = crate::numstats::mean(truth);
    let sst: f64 = truth.iter().map(|y| (y - m) * (y - m)).sum();
    if sst == 0.0 || crate::numstats::is_constant(truth) {
        return None;
    }
    let sse: f64 = pred.iter().zip(truth).map(|(p, y)| (y - p) * (y - p)).sum();
    Some(1.0 - sse / sst)
}

/// Held-out R^2 of a fitted probe. Negative values are kept.
pub fn r2_score(probe: &FittedProbe, inputs: &CodeMatrix, target: &[f64]) -> Result<Option<f64>> {
    if inputs.n() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} input rows but {} targets",
            inputs.n(),
            target.len()
        )));
    }
    if target.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: target.len(),
        });
    }
    Ok(r2_from_predictions(&probe.predict(inputs.as_matrix()), target))
}

pub fn fit_probe(
    spec: &ProbeSpec,
    inputs: &CodeMatrix,
    target: &[f64],
    rng: &Rng,
) -> Result<FittedProbe> {
    spec.validate()?;
    let n = inputs.n();
    let m = inputs.m();
    if target.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} input rows but {} targets",
            target.len()
        )));
    }
    if let Some(i) = target.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    if spec.is_linear_family() && n < (m + 2).max(10) {
        return Err(Error::TooFewSamples {
            needed: (m + 2).max(10),
            got: n,
        });
    }
    let x = inputs.as_matrix();
    let (model, importance, flags) = match &spec.kind {
        ProbeKind::Linear | ProbeKind::Ridge { .. } => {
            let lambda = match spec.kind {
                ProbeKind::Ridge { lambda } => lambda,
                _ => 0.0,
            };
            let fit = least_squares(x, target, lambda, spec.standardize_inputs);
            let flags = if fit.ridge_fallback {
                vec![ProbeFlag::RidgeFallback]
            } else {
                vec![]
            };
            (
                Model::Linear {
                    coef: fit.coefficients,
                    intercept: fit.intercept,
                },
                fit.standardized.iter().map(|b| b.abs()).collect(),
                flags,
            )
        }
        ProbeKind::Lasso { alpha } => {
            let lambda = alpha * linear::lambda_max(x, target);
            let fit = lasso_coordinate_descent(x, target, lambda)?;
            let flags = if fit.converged {
                vec![]
            } else {
                vec![ProbeFlag::NotConverged]
            };
            (
                Model::Linear {
                    coef: fit.coefficients,
                    intercept: fit.intercept,
                },
                fit.standardized.iter().map(|b| b.abs()).collect(),
                flags,
            )
        }
        ProbeKind::Gbt(params) => {
            let g = GbtModel::fit(x, target, params, rng)?;
            let imp = g.importance().to_vec();
            (Model::Gbt(g), imp, vec![])
        }
    };
    let mut probe = FittedProbe {
        model,
        importance,
        train_r2: None,
        flags,
    };
    probe.train_r2 = r2_from_predictions(&probe.predict(x), target);
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_codes(seed: u64, n: usize, m: usize) -> CodeMatrix {
        let mut r = Rng::new(seed, 0);
        CodeMatrix::new(DMatrix::from_fn(n, m, |_, _| r.normal())).unwrap()
    }

    #[test]
    fn linear_recovers_scaled_code() {
        let train = gaussian_codes(1, 200, 3);
        let test = gaussian_codes(2, 100, 3);
        let y: Vec<f64> = train.column(0).iter().map(|v| 3.0 * v).collect();
        let yt: Vec<f64> = test.column(0).iter().map(|v| 3.0 * v).collect();
        let p = fit_probe(&ProbeSpec::linear(), &train, &y, &Rng::new(0, 0)).unwrap();
        let r2 = r2_score(&p, &test, &yt).unwrap().unwrap();
        assert!((r2 - 1.0).abs() < 1e-9);
        let imp = p.importance();
        assert!(imp[0] > 0.0);
        assert!(imp[1] < 1e-9 && imp[2] < 1e-9);
    }

    #[test]
    fn r2_reference_values() {
        let truth = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r2_from_predictions(&truth, &truth), Some(1.0));
        assert_eq!(r2_from_predictions(&[2.5; 4], &truth), Some(0.0));
        assert!(r2_from_predictions(&[4.0, 3.0, 2.0, 1.0], &truth).unwrap() < 0.0);
        assert_eq!(r2_from_predictions(&[1.0; 3], &[2.0; 3]), None);
    }

    #[test]
    fn too_few_rows_for_linear() {
        let x = gaussian_codes(1, 8, 2);
        let y = vec![0.0; 8];
        assert!(matches!(
            fit_probe(&ProbeSpec::linear(), &x, &y, &Rng::new(0, 0)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn spec_roundtrip() {
        for s in [ProbeSpec::linear(), ProbeSpec::lasso(), ProbeSpec::gbt(), ProbeSpec::ridge(0.5)] {
            let j = serde_json::to_string(&s).unwrap();
            let back: ProbeSpec = serde_json::from_str(&j).unwrap();
            assert_eq!(s, back);
        }
        let s: ProbeSpec = serde_json::from_str(r#"{"kind":{"kind":"lasso"}}"#).unwrap();
        assert_eq!(s, ProbeSpec::lasso());
    }
}
