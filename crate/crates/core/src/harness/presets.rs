//! Shipped experiment configs, one per reproduced figure.

use super::{DgpChoice, EncoderChoice, ExperimentConfig, Grid};
use crate::dgp::{Link, Marginal, Synergy};
use crate::error::{Error, Result};
use crate::metrics::EvalSettings;
use crate::properties::NullKind;

pub const PRESET_NAMES: [&str; 8] = [
    "sanity",
    "correlation",
    "rho-kappa",
    "dropping",
    "overcomplete-bars",
    "overcomplete-sweep",
    "null-phase",
    "sample-sensitivity",
];

fn all_dgps() -> Vec<DgpChoice> {
    vec![
        DgpChoice::D1 {
            marginal: Marginal::Normal,
        },
        DgpChoice::D2,
        DgpChoice::D3 {
            link: Link::Cube,
            marginal: Marginal::Normal,
        },
        DgpChoice::D4 {
            synergy: Synergy::Product,
            marginal: Marginal::Normal,
        },
    ]
}

fn e3() -> EncoderChoice {
    EncoderChoice::E3 {
        signed_permutation: false,
        offset_scale: 0.0,
    }
}

fn e7() -> EncoderChoice {
    EncoderChoice::E7 { offset_scale: 0.0 }
}

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        ..Default::default()
    }
}

/// The named preset config. Unknown names list the valid ones.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        // Every DGP with the identity-class encoder.
        "sanity" => ExperimentConfig {
            dgps: all_dgps(),
            encoders: vec![EncoderChoice::E1],
            grid: Grid {
                rho: vec![0.5],
                ..Default::default()
            },
            ..base(name)
        },
        // E1 against E3 as correlation grows; linear R² probe.
        "correlation" => ExperimentConfig {
            dgps: vec![DgpChoice::D2],
            encoders: vec![EncoderChoice::E1, e3()],
            settings: EvalSettings {
                r2_probe: crate::probes::ProbeSpec::linear(),
                ..Default::default()
            },
            grid: Grid {
                d: vec![10],
                rho: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
                kappa: vec![5.0],
                ..Default::default()
            },
            ..base(name)
        },
        "rho-kappa" => ExperimentConfig {
            dgps: vec![DgpChoice::D2],
            encoders: vec![e3()],
            grid: Grid {
                d: vec![10],
                rho: vec![0.0, 0.3, 0.5, 0.7, 0.9],
                kappa: vec![1.0, 2.0, 5.0, 10.0, 50.0],
                ..Default::default()
            },
            ..base(name)
        },
        // E4 keeps the first m factors of the keep order; m = d is E1.
        "dropping" => ExperimentConfig {
            dgps: vec![
                DgpChoice::D1 {
                    marginal: Marginal::Normal,
                },
                DgpChoice::D3 {
                    link: Link::Cube,
                    marginal: Marginal::Normal,
                },
                DgpChoice::D4 {
                    synergy: Synergy::Product,
                    marginal: Marginal::Normal,
                },
            ],
            encoders: vec![EncoderChoice::E4, EncoderChoice::E1],
            grid: Grid {
                d: vec![10],
                m: (1..10).collect(),
                ..Default::default()
            },
            ..base(name)
        },
        "overcomplete-bars" => ExperimentConfig {
            dgps: vec![DgpChoice::D1 {
                marginal: Marginal::Normal,
            }],
            encoders: vec![
                EncoderChoice::E1,
                e3(),
                EncoderChoice::E5,
                EncoderChoice::E6,
                e7(),
                EncoderChoice::E8,
            ],
            grid: Grid {
                d: vec![20],
                n: vec![1600],
                kappa: vec![10.0],
                m_over_d: vec![2.0],
                ..Default::default()
            },
            ..base(name)
        },
        "overcomplete-sweep" => ExperimentConfig {
            dgps: vec![DgpChoice::D1 {
                marginal: Marginal::Normal,
            }],
            encoders: vec![
                EncoderChoice::E1,
                e3(),
                EncoderChoice::E5,
                EncoderChoice::E6,
                e7(),
                EncoderChoice::E8,
            ],
            grid: Grid {
                kappa: vec![10.0],
                m_over_d: vec![1.5, 2.0, 3.0, 10.0],
                ..Default::default()
            },
            ..base(name)
        },
        "null-phase" => ExperimentConfig {
            dgps: vec![DgpChoice::D1 {
                marginal: Marginal::Normal,
            }],
            encoders: vec![
                EncoderChoice::Null {
                    distribution: NullKind::Uniform,
                },
                EncoderChoice::Null {
                    distribution: NullKind::Gaussian,
                },
            ],
            grid: Grid {
                d: vec![10],
                m_over_d: vec![1.0, 2.0, 5.0],
                m_over_n: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
                ..Default::default()
            },
            ..base(name)
        },
        "sample-sensitivity" => ExperimentConfig {
            dgps: all_dgps(),
            encoders: vec![EncoderChoice::E1, EncoderChoice::E2, e3(), e7()],
            grid: Grid {
                n: vec![50, 100, 200, 500, 1000, 2000, 5000],
                rho: vec![0.5],
                kappa: vec![5.0],
                alpha: vec![0.5],
                m: vec![10],
                ..Default::default()
            },
            ..base(name)
        },
        _ => {
            return Err(Error::param(
                "preset",
                format!("unknown preset `{name}`; expected one of {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::expand;
    use crate::metrics::MetricId;

    #[test]
    fn every_preset_validates_and_expands() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
            assert_eq!(cfg.metrics, MetricId::MAIN.to_vec());
            let cells = expand(&cfg).unwrap();
            assert!(!cells.is_empty(), "{name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn dropping_grid_shape() {
        let cells = expand(&preset("dropping").unwrap()).unwrap();
        // 3 DGPs x (9 e4 sizes + e1)
        assert_eq!(cells.len(), 30);
        assert!(cells.iter().all(|c| c.skip_reason().is_none()));
    }

    #[test]
    fn overcomplete_sweep_marks_fractional_e8() {
        let cells = expand(&preset("overcomplete-sweep").unwrap()).unwrap();
        let e8: Vec<_> = cells.iter().filter(|c| c.encoder == "e8").collect();
        assert_eq!(e8.len(), 4);
        assert!(e8[0].skip_reason().is_some());
        assert_eq!(e8[3].m, 50);
    }
}
