//! Experiment orchestration: declarative configs, grid expansion, seeded
//! per-cell streams, parallel evaluation with ordered output.
//!
//! Every (cell, seed) gets `Rng::new(seed, stable_hash(cell key))`, with the
//! child streams `dgp`, `encoder` and `metrics`. The key covers only the
//! cell's own coordinates, so adding or removing grid values never changes
//! another cell's data.

mod diagnose;
mod export;
mod presets;

pub use diagnose::{diagnose, diagnose_files, ChecklistItem, CheckStatus, DiagnoseReport, DiagnoseSettings, NullBaseline};
pub use export::{export, summarize, write_long_csv, write_pivot_csv, write_summary_csv, ExportOptions, SummaryRow};
pub use presets::{preset, PRESET_NAMES};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{self, DgpKind, DgpSpec, Link, Marginal, Synergy};
use crate::encoders::{EncodedDataset, EncoderRecipe, MixingOptions};
use crate::error::{Error, FieldIssue, Result};
use crate::metrics::{evaluate, EvalSettings, MetricId};
use crate::properties::NullKind;
use crate::rng::{stable_hash, Rng};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum DgpChoice {
    D1 {
        #[serde(default)]
        marginal: Marginal,
    },
    /// Equicorrelated Gaussian; rho comes from the grid.
    D2,
    D3 {
        #[serde(default)]
        link: Link,
        #[serde(default)]
        marginal: Marginal,
    },
    D4 {
        #[serde(default)]
        synergy: Synergy,
        #[serde(default)]
        marginal: Marginal,
    },
}

impl DgpChoice {
    pub fn label(&self) -> String {
        let suffix = |m: &Marginal| match m {
            Marginal::Normal => String::new(),
            Marginal::Uniform => "-uniform".into(),
        };
        match self {
            DgpChoice::D1 { marginal } => format!("d1{}", suffix(marginal)),
            DgpChoice::D2 => "d2".into(),
            DgpChoice::D3 { link, marginal } => format!("d3-{}{}", link.name(), suffix(marginal)),
            DgpChoice::D4 { synergy, marginal } => format!("d4-{}{}", synergy.name(), suffix(marginal)),
        }
    }

    fn spec(&self, d: usize, rho: Option<f64>) -> DgpSpec {
        let (kind, marginal) = match self {
            DgpChoice::D1 { marginal } => (DgpKind::Independent, *marginal),
            DgpChoice::D2 => (
                DgpKind::Correlated {
                    rho: rho.unwrap_or(0.0),
                },
                Marginal::Normal,
            ),
            DgpChoice::D3 { link, marginal } => (
                DgpKind::SingleConstraint {
                    parent: 0,
                    child: 1,
                    link: *link,
                },
                *marginal,
            ),
            DgpChoice::D4 { synergy, marginal } => (
                DgpKind::MultiConstraint {
                    sources: [0, 1],
                    child: 2,
                    synergy: *synergy,
                },
                *marginal,
            ),
        };
        DgpSpec { kind, d, marginal }
    }
}

/// Encoder class; numeric parameters (kappa, alpha, m, k) come from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderChoice {
    E1,
    E2,
    E3 {
        #[serde(default)]
        signed_permutation: bool,
        #[serde(default)]
        offset_scale: f64,
    },
    E4,
    E5,
    E6,
    E7 {
        #[serde(default)]
        offset_scale: f64,
    },
    E8,
    Null {
        #[serde(default = "default_null")]
        distribution: NullKind,
    },
}

fn default_null() -> NullKind {
    NullKind::Uniform
}

impl EncoderChoice {
    pub fn label(&self) -> String {
        match self {
            EncoderChoice::E1 => "e1".into(),
            EncoderChoice::E2 => "e2".into(),
            EncoderChoice::E3 {
                signed_permutation,
                offset_scale,
            } => {
                let mut s = String::from("e3");
                if *signed_permutation {
                    s.push_str("-signed");
                }
                if *offset_scale != 0.0 {
                    s.push_str(&format!("-offset{offset_scale}"));
                }
                s
            }
            EncoderChoice::E4 => "e4".into(),
            EncoderChoice::E5 => "e5".into(),
            EncoderChoice::E6 => "e6".into(),
            EncoderChoice::E7 { offset_scale } if *offset_scale != 0.0 => format!("e7-offset{offset_scale}"),
            EncoderChoice::E7 { .. } => "e7".into(),
            EncoderChoice::E8 => "e8".into(),
            EncoderChoice::Null {
                distribution: NullKind::Uniform,
            } => "e9".into(),
            EncoderChoice::Null {
                distribution: NullKind::Gaussian,
            } => "e10".into(),
        }
    }

    fn uses_m(&self) -> bool {
        matches!(
            self,
            EncoderChoice::E4 | EncoderChoice::E5 | EncoderChoice::E6 | EncoderChoice::E7 { .. } | EncoderChoice::Null { .. }
        )
    }

    fn uses_kappa(&self) -> bool {
        matches!(self, EncoderChoice::E3 { .. } | EncoderChoice::E7 { .. })
    }
}

/// Parameter axes. An axis only expands the cells whose DGP or encoder uses it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    /// D2 correlation.
    pub rho: Vec<f64>,
    /// E3/E7 condition number.
    pub kappa: Vec<f64>,
    /// E2 blend weight.
    pub alpha: Vec<f64>,
    /// Output dimension for E4-E7 and null encoders.
    pub m: Vec<usize>,
    /// Output dimension as a multiple of d (E4-E7, null; E8 when `k` is empty).
    pub m_over_d: Vec<f64>,
    /// E8 codes per factor.
    pub k: Vec<usize>,
    /// Null encoders only: sets n = round(m / ratio), replacing the `n` axis.
    pub m_over_n: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            d: vec![5],
            n: vec![1000],
            rho: Vec::new(),
            kappa: Vec::new(),
            alpha: Vec::new(),
            m: Vec::new(),
            m_over_d: Vec::new(),
            k: Vec::new(),
            m_over_n: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    pub dgps: Vec<DgpChoice>,
    pub encoders: Vec<EncoderChoice>,
    pub metrics: Vec<MetricId>,
    pub settings: EvalSettings,
    pub grid: Grid,
    pub seeds: Vec<u64>,
    /// Where the CLI writes exports; `None` means the working directory.
    pub output_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            name: "experiment".into(),
            dgps: vec![DgpChoice::D1 {
                marginal: Marginal::Normal,
            }],
            encoders: vec![EncoderChoice::E1],
            metrics: MetricId::MAIN.to_vec(),
            settings: EvalSettings::default(),
            grid: Grid::default(),
            seeds: (0..5).collect(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(vec![FieldIssue {
                field: "<document>".into(),
                message: e.to_string(),
            }])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every problem at once, each naming its field.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut issue = |field: &str, message: String| {
            issues.push(FieldIssue {
                field: field.into(),
                message,
            })
        };
        if self.version != CONFIG_VERSION {
            issue("version", format!("unsupported version {}, expected {CONFIG_VERSION}", self.version));
        }
        if self.dgps.is_empty() {
            issue("dgps", "at least one DGP is required".into());
        }
        if self.encoders.is_empty() {
            issue("encoders", "at least one encoder is required".into());
        }
        if self.metrics.is_empty() {
            issue("metrics", "at least one metric is required".into());
        }
        if self.seeds.is_empty() {
            issue("seeds", "at least one seed is required".into());
        }
        if let Err(e) = self.settings.validate() {
            issue("settings", e.to_string());
        }
        let g = &self.grid;
        if g.d.is_empty() || g.d.iter().any(|&d| d < 2) {
            issue("grid.d", "needs at least one value, each >= 2".into());
        }
        let needs_n = self
            .encoders
            .iter()
            .any(|e| !matches!(e, EncoderChoice::Null { .. }) || g.m_over_n.is_empty());
        if needs_n && (g.n.is_empty() || g.n.contains(&0)) {
            issue("grid.n", "needs at least one positive value".into());
        }
        if self.dgps.contains(&DgpChoice::D2) && g.rho.is_empty() {
            issue("grid.rho", "D2 needs at least one rho".into());
        }
        if g.rho.iter().any(|r| !(r.abs() < 1.0)) {
            issue("grid.rho", "values must lie in (-1, 1)".into());
        }
        if self.encoders.iter().any(EncoderChoice::uses_kappa) && g.kappa.is_empty() {
            issue("grid.kappa", "E3/E7 need at least one kappa".into());
        }
        if g.kappa.iter().any(|k| !(*k >= 1.0)) {
            issue("grid.kappa", "values must be >= 1".into());
        }
        if self.encoders.contains(&EncoderChoice::E2) && g.alpha.is_empty() {
            issue("grid.alpha", "E2 needs at least one alpha".into());
        }
        if g.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            issue("grid.alpha", "values must lie in [0, 1]".into());
        }
        if self.encoders.iter().any(EncoderChoice::uses_m) && g.m.is_empty() && g.m_over_d.is_empty() {
            issue("grid.m", "E4-E7 and null encoders need grid.m or grid.m_over_d".into());
        }
        if self.encoders.contains(&EncoderChoice::E8) && g.k.is_empty() && g.m_over_d.is_empty() {
            issue("grid.k", "E8 needs grid.k or grid.m_over_d".into());
        }
        if g.m_over_d.iter().any(|r| !(*r > 0.0)) {
            issue("grid.m_over_d", "values must be positive".into());
        }
        if g.m_over_n.iter().any(|r| !(*r > 0.0)) {
            issue("grid.m_over_n", "values must be positive".into());
        }
        if g.k.iter().any(|&k| k < 2) {
            issue("grid.k", "values must be >= 2".into());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

/// One grid point; all coordinates that apply to it are filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub dgp: String,
    pub encoder: String,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub rho: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub m_over_d: Option<f64>,
    pub m_over_n: Option<f64>,
    #[serde(skip)]
    dgp_choice: DgpChoice,
    #[serde(skip)]
    encoder_choice: EncoderChoice,
    /// Precondition failure found at expansion time.
    #[serde(skip)]
    skip: Option<String>,
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

impl Cell {
    /// Coordinates only; independent of the cell's position in the grid.
    pub fn key(&self) -> String {
        format!(
            "{}|{}|d={}|n={}|m={}|rho={}|kappa={}|alpha={}|k={}",
            self.dgp,
            self.encoder,
            self.d,
            self.n,
            self.m,
            fmt_opt(self.rho),
            fmt_opt(self.kappa),
            fmt_opt(self.alpha),
            fmt_opt(self.k)
        )
    }

    pub fn rng(&self, seed: u64) -> Rng {
        Rng::new(seed, stable_hash(&[self.key().as_bytes()]))
    }

    pub fn dgp_spec(&self) -> DgpSpec {
        self.dgp_choice.spec(self.d, self.rho)
    }

    pub fn recipe(&self) -> EncoderRecipe {
        let mixing = |signed: bool, offset: f64| MixingOptions {
            kappa: self.kappa.unwrap_or(1.0),
            signed_permutation: signed,
            offset_scale: offset,
        };
        match &self.encoder_choice {
            EncoderChoice::E1 => EncoderRecipe::E1,
            EncoderChoice::E2 => EncoderRecipe::E2 {
                alpha: self.alpha.unwrap_or(0.0),
            },
            EncoderChoice::E3 {
                signed_permutation,
                offset_scale,
            } => EncoderRecipe::E3 {
                mixing: mixing(*signed_permutation, *offset_scale),
            },
            EncoderChoice::E4 => EncoderRecipe::E4 { m: self.m },
            EncoderChoice::E5 => EncoderRecipe::E5 { m: self.m },
            EncoderChoice::E6 => EncoderRecipe::E6 { m: self.m },
            EncoderChoice::E7 { offset_scale } => EncoderRecipe::E7 {
                m: self.m,
                mixing: mixing(false, *offset_scale),
            },
            EncoderChoice::E8 => EncoderRecipe::E8 {
                k: self.k.unwrap_or(2),
            },
            EncoderChoice::Null { distribution } => distribution.recipe(self.m),
        }
    }

    /// The dataset this cell evaluates for `seed`.
    pub fn dataset(&self, seed: u64) -> Result<EncodedDataset> {
        if let Some(reason) = &self.skip {
            return Err(Error::param("cell", reason.clone()));
        }
        let rng = self.rng(seed);
        let sample = dgp::sample(&self.dgp_spec(), self.n, &rng.derive("dgp"))?;
        self.recipe().build(&sample, &rng.derive("encoder"))
    }

    pub fn metrics_rng(&self, seed: u64) -> Rng {
        self.rng(seed).derive("metrics")
    }

    pub fn skip_reason(&self) -> Option<&str> {
        self.skip.as_deref()
    }
}

fn opt_axis<T: Copy>(used: bool, values: &[T]) -> Vec<Option<T>> {
    if used {
        values.iter().map(|&v| Some(v)).collect()
    } else {
        vec![None]
    }
}

/// `(m, k, m_over_d, skip)`
type DimChoice = (usize, Option<usize>, Option<f64>, Option<String>);

/// Output-dimension settings for one encoder.
fn dims(enc: &EncoderChoice, d: usize, g: &Grid) -> Vec<DimChoice> {
    let mut out = Vec::new();
    match enc {
        EncoderChoice::E1 | EncoderChoice::E2 | EncoderChoice::E3 { .. } => out.push((d, None, None, None)),
        EncoderChoice::E8 => {
            if g.k.is_empty() {
                for &r in &g.m_over_d {
                    if r.fract() == 0.0 && r >= 2.0 {
                        out.push((r as usize * d, Some(r as usize), Some(r), None));
                    } else {
                        out.push((
                            (r * d as f64).round() as usize,
                            None,
                            Some(r),
                            Some(format!("e8 needs an integer m/d >= 2, got {r}")),
                        ));
                    }
                }
            } else {
                for &k in &g.k {
                    out.push((k * d, Some(k), None, None));
                }
            }
        }
        _ => {
            let check = |m: usize| -> Option<String> {
                match enc {
                    EncoderChoice::E4 if m == 0 || m >= d => Some(format!("e4 needs 1 <= m < d, got m={m}, d={d}")),
                    EncoderChoice::E5 | EncoderChoice::E6 | EncoderChoice::E7 { .. } if m <= d => {
                        Some(format!("{} needs m > d, got m={m}, d={d}", enc.label()))
                    }
                    EncoderChoice::Null { .. } if m == 0 => Some("null encoder needs m >= 1".into()),
                    _ => None,
                }
            };
            for &m in &g.m {
                out.push((m, None, None, check(m)));
            }
            for &r in &g.m_over_d {
                let m = (r * d as f64).round() as usize;
                out.push((m, None, Some(r), check(m)));
            }
        }
    }
    out
}

/// Expand the config into cells in a fixed order: DGP, encoder, d, n, rho,
/// kappa, alpha, output dimension, m/n.
pub fn expand(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let g = &cfg.grid;
    let mut cells = Vec::new();
    for dgp_choice in &cfg.dgps {
        for enc in &cfg.encoders {
            let is_null = matches!(enc, EncoderChoice::Null { .. });
            for &d in &g.d {
                let sample_axis: Vec<(Option<usize>, Option<f64>)> = if is_null && !g.m_over_n.is_empty() {
                    g.m_over_n.iter().map(|&r| (None, Some(r))).collect()
                } else {
                    g.n.iter().map(|&n| (Some(n), None)).collect()
                };
                for rho in opt_axis(*dgp_choice == DgpChoice::D2, &g.rho) {
                    for kappa in opt_axis(enc.uses_kappa(), &g.kappa) {
                        for alpha in opt_axis(*enc == EncoderChoice::E2, &g.alpha) {
                            for (m, k, m_over_d, dim_skip) in dims(enc, d, g) {
                                for &(n_fixed, m_over_n) in &sample_axis {
                                    let n = n_fixed.unwrap_or_else(|| (m as f64 / m_over_n.unwrap_or(1.0)).round() as usize);
                                    let mut skip = dim_skip.clone();
                                    if let Some(r) = rho {
                                        let bound = dgp::equicorrelation_lower_bound(d);
                                        if skip.is_none() && r <= bound + dgp::FEASIBILITY_MARGIN {
                                            skip = Some(format!("rho={r} infeasible for d={d} (needs rho > {bound:.6})"));
                                        }
                                    }
                                    if skip.is_none() && n < 10 {
                                        skip = Some(format!("n={n} is below the 10-sample minimum"));
                                    }
                                    cells.push(Cell {
                                        index: cells.len(),
                                        dgp: dgp_choice.label(),
                                        encoder: enc.label(),
                                        d,
                                        n,
                                        m,
                                        rho,
                                        kappa,
                                        alpha,
                                        k,
                                        m_over_d,
                                        m_over_n,
                                        dgp_choice: dgp_choice.clone(),
                                        encoder_choice: enc.clone(),
                                        skip,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// One (cell, metric, seed) outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub cell: usize,
    pub dgp: String,
    pub encoder: String,
    pub d: usize,
    pub n: usize,
    pub m: usize,
    pub rho: Option<f64>,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub m_over_d: Option<f64>,
    pub m_over_n: Option<f64>,
    pub metric: MetricId,
    pub seed: u64,
    pub score: Option<f64>,
    pub defined: bool,
    /// Skip reason or metric error.
    pub note: Option<String>,
    /// Time spent on the whole (cell, seed) job, milliseconds.
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub rows: Vec<ResultRow>,
}

fn rows_for(cell: &Cell, seed: u64, cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let start = Instant::now();
    let outcomes: Vec<(Option<f64>, Option<String>)> = match cell.dataset(seed) {
        Err(e) => {
            let reason = cell.skip.clone().unwrap_or_else(|| e.to_string());
            vec![(None, Some(format!("skipped: {reason}"))); cfg.metrics.len()]
        }
        Ok(ds) => evaluate(&ds, &cfg.metrics, &cfg.settings, &cell.metrics_rng(seed))
            .into_iter()
            .map(|o| match o {
                Ok(s) => {
                    let note = s.value.is_none().then(|| format!("undefined: {:?}", s.flags));
                    (s.value, note)
                }
                Err(e) => (None, Some(e)),
            })
            .collect(),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    cfg.metrics
        .iter()
        .zip(outcomes)
        .map(|(&metric, (score, note))| ResultRow {
            experiment: cfg.name.clone(),
            cell: cell.index,
            dgp: cell.dgp.clone(),
            encoder: cell.encoder.clone(),
            d: cell.d,
            n: cell.n,
            m: cell.m,
            rho: cell.rho,
            kappa: cell.kappa,
            alpha: cell.alpha,
            k: cell.k,
            m_over_d: cell.m_over_d,
            m_over_n: cell.m_over_n,
            metric,
            seed,
            score,
            defined: score.is_some(),
            note,
            wall_ms,
        })
        .collect()
}

/// Evaluate every (cell, seed) in parallel; rows come back ordered by cell,
/// then seed, then metric, whatever the thread count.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cells = expand(cfg)?;
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| cfg.seeds.iter().map(move |&s| (c, s))).collect();
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|&(c, seed)| rows_for(&cells[c], seed, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(ResultTable {
        config: cfg.clone(),
        cells,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate_one;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            dgps: vec![DgpChoice::D1 { marginal: Marginal::Normal }, DgpChoice::D2],
            encoders: vec![EncoderChoice::E1, EncoderChoice::E4],
            metrics: vec![MetricId::MccP, MetricId::R2],
            grid: Grid {
                d: vec![3],
                n: vec![200],
                rho: vec![0.0, 0.6],
                m: vec![1, 2, 3],
                ..Default::default()
            },
            seeds: vec![0, 1],
            ..Default::default()
        }
    }

    #[test]
    fn expansion_covers_only_used_axes() {
        let cells = expand(&small()).unwrap();
        // d1: e1 + three e4 sizes; d2: twice that (two rho values)
        assert_eq!(cells.len(), 4 + 8);
        assert!(cells.iter().filter(|c| c.dgp == "d1").all(|c| c.rho.is_none()));
        let skipped: Vec<_> = cells.iter().filter(|c| c.skip_reason().is_some()).collect();
        assert_eq!(skipped.len(), 3);
        assert!(skipped.iter().all(|c| c.encoder == "e4" && c.m == 3));
    }

    #[test]
    fn cell_streams_do_not_depend_on_grid_shape() {
        let a = expand(&small()).unwrap();
        let mut cfg = small();
        cfg.grid.m = vec![2];
        let b = expand(&cfg).unwrap();
        let pick = |cells: &[Cell]| cells.iter().find(|c| c.encoder == "e4" && c.m == 2 && c.dgp == "d1").unwrap().clone();
        let (ca, cb) = (pick(&a), pick(&b));
        assert_ne!(ca.index, cb.index);
        assert_eq!(ca.dataset(3).unwrap().zhat, cb.dataset(3).unwrap().zhat);
    }

    #[test]
    fn rows_match_standalone_metric_calls() {
        let cfg = small();
        let table = run(&cfg).unwrap();
        assert_eq!(table.rows.len(), table.cells.len() * 2 * 2);
        for row in table.rows.iter().filter(|r| r.defined) {
            let cell = &table.cells[row.cell];
            let ds = cell.dataset(row.seed).unwrap();
            let direct = evaluate_one(&ds, row.metric, &cfg.settings, &cell.metrics_rng(row.seed)).unwrap();
            assert_eq!(direct.value, row.score, "{row:?}");
        }
        let skipped = table.rows.iter().filter(|r| r.note.as_deref().is_some_and(|n| n.starts_with("skipped"))).count();
        assert_eq!(skipped, 3 * 2 * 2);
    }

    #[test]
    fn validation_lists_every_field() {
        let cfg = ExperimentConfig {
            version: 2,
            dgps: vec![DgpChoice::D2],
            encoders: vec![EncoderChoice::E3 {
                signed_permutation: false,
                offset_scale: 0.0,
            }],
            metrics: vec![],
            ..Default::default()
        };
        let Err(Error::Config(issues)) = cfg.validate() else {
            panic!("expected config error")
        };
        let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
        assert_eq!(fields, vec!["version", "metrics", "grid.rho", "grid.kappa"]);
        assert!(matches!(ExperimentConfig::from_json(r#"{"nmae":"x"}"#), Err(Error::Config(_))));
    }

    #[test]
    fn json_roundtrip() {
        let cfg = small();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let minimal = ExperimentConfig::from_json(r#"{"version":1,"dgps":[{"class":"d3","link":"exp"}]}"#).unwrap();
        assert_eq!(minimal.dgps[0].label(), "d3-exp");
        assert_eq!(minimal.seeds.len(), 5);
    }
}
