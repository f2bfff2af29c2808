//! Automated checks of the four metric desiderata.
//!
//! * P1: invariance to the correlation between factors.
//! * P2: faithfulness to the effective dimensionality.
//! * P3: invariance to the overcomplete dimension.
//! * P4: low scores for representations independent of the factors.
//!
//! Each check runs a sweep over seeds, summarizes every sweep point as a mean
//! with a 95% interval, and derives a deviation statistic and a verdict from
//! that table alone ([`recompute`]). Within one sweep the data streams do not
//! depend on the swept parameter, so neighbouring points share their noise.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{self, DgpKind, DgpSpec, Link, Marginal, Synergy};
use crate::encoders::{EncoderRecipe, MixingOptions};
use crate::error::{Error, FieldIssue, Result};
use crate::metrics::{evaluate, EvalSettings, MetricId};
use crate::numstats::{mean, sample_sd};
use crate::oracles::null_mcc_floor;
use crate::probes::ProbeSpec;
use crate::rng::{stable_hash, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PropertyId {
    P1,
    P2,
    P3,
    P4,
}

impl PropertyId {
    pub const ALL: [PropertyId; 4] = [PropertyId::P1, PropertyId::P2, PropertyId::P3, PropertyId::P4];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::P1 => "P1",
            PropertyId::P2 => "P2",
            PropertyId::P3 => "P3",
            PropertyId::P4 => "P4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PropertyId::P1 => "correlation invariance",
            PropertyId::P2 => "effective-dimensionality faithfulness",
            PropertyId::P3 => "overcompleteness invariance",
            PropertyId::P4 => "null-encoder false-positive control",
        }
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Partial,
    Violated,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Partial => "partial",
            Verdict::Violated => "violated",
        }
    }

    /// Satisfied up to `tau`, partial up to `2 tau`, violated beyond or when
    /// the deviation could not be computed.
    pub fn from_deviation(deviation: Option<f64>, tau: f64) -> Verdict {
        match deviation {
            Some(v) if v <= tau => Verdict::Satisfied,
            Some(v) if v <= 2.0 * tau => Verdict::Partial,
            _ => Verdict::Violated,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub correlation: f64,
    pub dimensionality: f64,
    pub overcomplete: f64,
    pub null: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            correlation: 0.05,
            dimensionality: 0.05,
            overcomplete: 0.05,
            null: 0.10,
        }
    }
}

impl Thresholds {
    pub fn get(&self, p: PropertyId) -> f64 {
        match p {
            PropertyId::P1 => self.correlation,
            PropertyId::P2 => self.dimensionality,
            PropertyId::P3 => self.overcomplete,
            PropertyId::P4 => self.null,
        }
    }
}

/// What a sweep point contributes to the deviation statistic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryRole {
    /// Comparison point of its group (rho = 0, or the matched-dimension encoder).
    Reference,
    /// Compared against the group's reference.
    Sweep,
    /// All free factors retained; should score near 1.
    Lossless,
    /// A free factor dropped; should track the retained fraction in `reference`.
    Lossy,
    /// Constrained children retained on top of every free factor; descriptive only.
    Redundant,
    /// Null-encoder grid cell; should stay below the threshold.
    Cell,
}

/// Summary of one sweep point over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// Encoder or DGP the point belongs to.
    pub group: String,
    pub parameter: String,
    pub value: f64,
    /// Second grid coordinate (m/n for the null grid).
    pub secondary: Option<f64>,
    pub role: EntryRole,
    pub scores: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// `1.96 sd / sqrt(defined seeds)`.
    pub ci_half_width: Option<f64>,
    /// Retained fraction (lossy points) or null floor overlay (MCC cells).
    pub reference: Option<f64>,
    pub note: Option<String>,
}

impl SweepEntry {
    fn new(group: &str, parameter: &str, value: f64, role: EntryRole, scores: Vec<Option<f64>>) -> Self {
        let defined: Vec<f64> = scores.iter().flatten().copied().collect();
        let (m, sd, ci) = if defined.is_empty() {
            (None, None, None)
        } else {
            let sd = sample_sd(&defined);
            (
                Some(mean(&defined)),
                Some(sd),
                Some(1.96 * sd / (defined.len() as f64).sqrt()),
            )
        };
        let note = (defined.len() < scores.len())
            .then(|| format!("{} of {} seeds undefined", scores.len() - defined.len(), scores.len()));
        SweepEntry {
            group: group.to_string(),
            parameter: parameter.to_string(),
            value,
            secondary: None,
            role,
            scores,
            mean: m,
            sd,
            ci_half_width: ci,
            reference: None,
            note,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: PropertyId,
    pub metric: MetricId,
    pub verdict: Verdict,
    /// `None` when no sweep point had a defined score.
    pub deviation: Option<f64>,
    pub threshold: f64,
    pub sweep: Vec<SweepEntry>,
    /// Named pass/fail checks recorded alongside the verdict.
    pub sub_checks: BTreeMap<String, bool>,
    /// Descriptive statistics that do not enter the verdict.
    pub descriptive: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

fn max_opt(acc: Option<f64>, v: f64) -> Option<f64> {
    Some(acc.map_or(v, |a| a.max(v)))
}

fn groups(sweep: &[SweepEntry]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for e in sweep {
        if !out.contains(&e.group.as_str()) {
            out.push(&e.group);
        }
    }
    out
}

/// Deviation statistic from the sweep table alone.
///
/// * P1: max over groups and points of `|mean - reference mean|`.
/// * P2: max of `1 - mean` over lossless points and `mean - retained fraction`
///   over lossy points.
/// * P3: max over groups of `max |mean - reference mean|` minus the reference
///   interval half-width (the finite-sample tolerance).
/// * P4: max cell mean.
pub fn deviation_from_sweep(property: PropertyId, sweep: &[SweepEntry]) -> Option<f64> {
    let mut dev = None;
    match property {
        PropertyId::P1 | PropertyId::P3 => {
            for g in groups(sweep) {
                let Some(reference) = sweep.iter().find(|e| e.group == g && e.role == EntryRole::Reference) else {
                    continue;
                };
                let Some(base) = reference.mean else { continue };
                let tolerance = match property {
                    PropertyId::P3 => reference.ci_half_width.unwrap_or(0.0),
                    _ => 0.0,
                };
                let spread = sweep
                    .iter()
                    .filter(|e| e.group == g && e.role == EntryRole::Sweep)
                    .filter_map(|e| e.mean)
                    .map(|m| (m - base).abs())
                    .fold(None, max_opt);
                if let Some(s) = spread {
                    dev = max_opt(dev, s - tolerance);
                }
            }
        }
        PropertyId::P2 => {
            for e in sweep {
                let Some(m) = e.mean else { continue };
                match e.role {
                    EntryRole::Lossless => dev = max_opt(dev, 1.0 - m),
                    EntryRole::Lossy => {
                        if let Some(r) = e.reference {
                            dev = max_opt(dev, m - r);
                        }
                    }
                    _ => {}
                }
            }
        }
        PropertyId::P4 => {
            for e in sweep.iter().filter(|e| e.role == EntryRole::Cell) {
                if let Some(m) = e.mean {
                    dev = max_opt(dev, m);
                }
            }
        }
    }
    dev
}

/// Recompute `(deviation, verdict)` from a report's sweep table and threshold.
pub fn recompute(report: &PropertyReport) -> (Option<f64>, Verdict) {
    let dev = deviation_from_sweep(report.property, &report.sweep);
    (dev, Verdict::from_deviation(dev, report.threshold))
}

fn finish_report(
    property: PropertyId,
    metric: MetricId,
    threshold: f64,
    sweep: Vec<SweepEntry>,
    sub_checks: BTreeMap<String, bool>,
    descriptive: BTreeMap<String, f64>,
    mut notes: Vec<String>,
) -> PropertyReport {
    let deviation = deviation_from_sweep(property, &sweep);
    if deviation.is_none() {
        notes.push("no sweep point had a defined score".into());
    }
    PropertyReport {
        property,
        metric,
        verdict: Verdict::from_deviation(deviation, threshold),
        deviation,
        threshold,
        sweep,
        sub_checks,
        descriptive,
        notes,
    }
}

// ---------------------------------------------------------------- configuration

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSweep {
    pub d: usize,
    pub n: usize,
    /// Condition number of the entangled (E3) encoder.
    pub kappa: f64,
    pub rhos: Vec<f64>,
    /// R² probe for this sweep; invariance is claimed for the linear probe.
    pub r2_probe: ProbeSpec,
}

impl Default for CorrelationSweep {
    fn default() -> Self {
        CorrelationSweep {
            d: 10,
            n: 1000,
            kappa: 5.0,
            rhos: vec![0.0, 0.25, 0.5, 0.75, 0.9, 0.95],
            r2_probe: ProbeSpec::linear(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionalitySweep {
    pub d: usize,
    pub n: usize,
    pub dgps: Vec<DgpSpec>,
    /// Retained dimensions; empty means `1..=d`.
    pub retained: Vec<usize>,
}

impl Default for DimensionalitySweep {
    fn default() -> Self {
        let d = 10;
        let spec = |kind| DgpSpec {
            kind,
            d,
            marginal: Marginal::Normal,
        };
        DimensionalitySweep {
            d,
            n: 1000,
            dgps: vec![
                spec(DgpKind::Independent),
                spec(DgpKind::SingleConstraint {
                    parent: 0,
                    child: 1,
                    link: Link::Cube,
                }),
                spec(DgpKind::MultiConstraint {
                    sources: [0, 1],
                    child: 2,
                    synergy: Synergy::Product,
                }),
            ],
            retained: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvercompleteKind {
    E5,
    E6,
    E7,
    E8,
}

impl OvercompleteKind {
    pub fn name(self) -> &'static str {
        match self {
            OvercompleteKind::E5 => "e5",
            OvercompleteKind::E6 => "e6",
            OvercompleteKind::E7 => "e7",
            OvercompleteKind::E8 => "e8",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OvercompleteSweep {
    pub d: usize,
    pub n: usize,
    pub kinds: Vec<OvercompleteKind>,
    /// m/d values; m = round(ratio * d). E8 skips non-integer ratios.
    pub ratios: Vec<f64>,
    /// Condition number for E7 and its matched E3 baseline.
    pub kappa: f64,
}

impl Default for OvercompleteSweep {
    fn default() -> Self {
        OvercompleteSweep {
            d: 5,
            n: 1000,
            kinds: vec![
                OvercompleteKind::E5,
                OvercompleteKind::E6,
                OvercompleteKind::E7,
                OvercompleteKind::E8,
            ],
            ratios: vec![1.5, 2.0, 3.0, 10.0],
            kappa: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullKind {
    Uniform,
    Gaussian,
}

impl NullKind {
    pub fn recipe(self, m: usize) -> EncoderRecipe {
        match self {
            NullKind::Uniform => EncoderRecipe::NullUniform { m },
            NullKind::Gaussian => EncoderRecipe::NullGaussian { m },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullSweep {
    pub d: usize,
    pub kind: NullKind,
    /// m/d rows of the grid.
    pub dim_ratios: Vec<f64>,
    /// m/n columns of the grid; n = round(m / ratio).
    pub sample_ratios: Vec<f64>,
}

impl Default for NullSweep {
    fn default() -> Self {
        NullSweep {
            d: 10,
            kind: NullKind::Uniform,
            dim_ratios: vec![1.0, 2.0, 5.0],
            sample_ratios: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub version: u32,
    pub seeds: Vec<u64>,
    pub metrics: Vec<MetricId>,
    pub properties: Vec<PropertyId>,
    pub thresholds: Thresholds,
    pub settings: EvalSettings,
    pub correlation: CorrelationSweep,
    pub dimensionality: DimensionalitySweep,
    pub overcomplete: OvercompleteSweep,
    pub null: NullSweep,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            version: 1,
            seeds: default_seeds(),
            metrics: MetricId::MAIN.to_vec(),
            properties: PropertyId::ALL.to_vec(),
            thresholds: Thresholds::default(),
            settings: EvalSettings::default(),
            correlation: CorrelationSweep::default(),
            dimensionality: DimensionalitySweep::default(),
            overcomplete: OvercompleteSweep::default(),
            null: NullSweep::default(),
        }
    }
}

impl SuiteConfig {
    /// Parse and validate; malformed JSON is reported as a config issue.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = serde_json::from_str(text).map_err(|e| {
            Error::Config(vec![FieldIssue {
                field: "<document>".into(),
                message: e.to_string(),
            }])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut issue = |field: &str, message: &str| {
            issues.push(FieldIssue {
                field: field.into(),
                message: message.into(),
            })
        };
        if self.version != 1 {
            issue("version", "only version 1 is supported");
        }
        if self.seeds.is_empty() {
            issue("seeds", "at least one seed is required");
        }
        if self.metrics.is_empty() {
            issue("metrics", "at least one metric is required");
        }
        for (name, t) in [
            ("thresholds.correlation", self.thresholds.correlation),
            ("thresholds.dimensionality", self.thresholds.dimensionality),
            ("thresholds.overcomplete", self.thresholds.overcomplete),
            ("thresholds.null", self.thresholds.null),
        ] {
            if !(t >= 0.0 && t.is_finite()) {
                issue(name, "must be a finite non-negative number");
            }
        }
        if let Err(e) = self.settings.validate() {
            issue("settings", &e.to_string());
        }
        let c = &self.correlation;
        if c.d < 2 {
            issue("correlation.d", "must be at least 2");
        }
        if !(c.kappa >= 1.0) {
            issue("correlation.kappa", "must be at least 1");
        }
        if !c.rhos.contains(&0.0) {
            issue("correlation.rhos", "must contain 0 (the reference point)");
        }
        if let Err(e) = c.r2_probe.validate() {
            issue("correlation.r2_probe", &e.to_string());
        }
        let dm = &self.dimensionality;
        if dm.dgps.is_empty() {
            issue("dimensionality.dgps", "at least one DGP is required");
        }
        if dm.dgps.iter().any(|s| s.d != dm.d) {
            issue("dimensionality.dgps", "every DGP must use dimensionality.d");
        }
        if dm.retained.iter().any(|&m| m == 0 || m > dm.d) {
            issue("dimensionality.retained", "entries must lie in 1..=d");
        }
        let o = &self.overcomplete;
        if o.ratios.iter().any(|r| !(*r > 1.0)) {
            issue("overcomplete.ratios", "every m/d ratio must exceed 1");
        }
        if !(o.kappa >= 1.0) {
            issue("overcomplete.kappa", "must be at least 1");
        }
        let nl = &self.null;
        if nl.dim_ratios.iter().any(|r| !(*r > 0.0)) {
            issue("null.dim_ratios", "must be positive");
        }
        if nl.sample_ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            issue("null.sample_ratios", "must lie in (0, 1)");
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

// ---------------------------------------------------------------- sweeps

/// Scores of every requested metric for one (point, seed).
type SeedScores = Vec<Option<f64>>;

fn data_rng(seed: u64, key: &str) -> Rng {
    Rng::new(seed, stable_hash(&[key.as_bytes()]))
}

fn score_all(
    ds: &crate::encoders::EncodedDataset,
    metrics: &[MetricId],
    settings: &EvalSettings,
    rng: &Rng,
) -> SeedScores {
    evaluate(ds, metrics, settings, rng)
        .into_iter()
        .map(|o| o.ok().and_then(|s| s.value))
        .collect()
}

/// One sweep point before the per-metric split.
struct Point {
    group: String,
    parameter: &'static str,
    value: f64,
    secondary: Option<f64>,
    role: EntryRole,
    reference: Option<f64>,
    per_seed: Vec<std::result::Result<SeedScores, String>>,
}

impl Point {
    fn entry(&self, k: usize) -> SweepEntry {
        let scores: Vec<Option<f64>> = self
            .per_seed
            .iter()
            .map(|r| r.as_ref().ok().and_then(|s| s[k]))
            .collect();
        let mut e = SweepEntry::new(&self.group, self.parameter, self.value, self.role, scores);
        e.secondary = self.secondary;
        e.reference = self.reference;
        if let Some(err) = self.per_seed.iter().find_map(|r| r.as_ref().err()) {
            e.note = Some(err.clone());
        }
        e
    }
}

fn per_metric_sweeps(points: &[Point], metrics: &[MetricId]) -> Vec<Vec<SweepEntry>> {
    (0..metrics.len())
        .map(|k| points.iter().map(|p| p.entry(k)).collect())
        .collect()
}

fn sweep_correlation(cfg: &SuiteConfig) -> (Vec<Point>, Vec<String>) {
    let c = &cfg.correlation;
    let settings = EvalSettings {
        r2_probe: c.r2_probe.clone(),
        ..cfg.settings.clone()
    };
    let mut notes = Vec::new();
    let bound = dgp::equicorrelation_lower_bound(c.d);
    let rhos: Vec<f64> = c
        .rhos
        .iter()
        .copied()
        .filter(|&r| {
            let ok = r > bound + dgp::FEASIBILITY_MARGIN && r < 1.0;
            if !ok {
                notes.push(format!("rho={r} skipped: infeasible for d={}", c.d));
            }
            ok
        })
        .collect();
    let encoders = [
        ("e1".to_string(), EncoderRecipe::E1),
        (
            format!("e3(kappa={})", c.kappa),
            EncoderRecipe::E3 {
                mixing: MixingOptions {
                    kappa: c.kappa,
                    ..Default::default()
                },
            },
        ),
    ];
    let mut points = Vec::new();
    for (label, recipe) in &encoders {
        let jobs: Vec<(f64, u64)> = rhos.iter().flat_map(|&r| cfg.seeds.iter().map(move |&s| (r, s))).collect();
        let results: Vec<std::result::Result<SeedScores, String>> = jobs
            .par_iter()
            .map(|&(rho, seed)| {
                let sample = dgp::sample_d2(c.d, c.n, rho, &data_rng(seed, "p1/dgp")).map_err(|e| e.to_string())?;
                let ds = recipe
                    .build(&sample, &data_rng(seed, &format!("p1/encoder/{label}")))
                    .map_err(|e| e.to_string())?;
                let rng = data_rng(seed, &format!("p1/metrics/{label}/rho={rho}"));
                Ok(score_all(&ds, &cfg.metrics, &settings, &rng))
            })
            .collect();
        for (i, &rho) in rhos.iter().enumerate() {
            let ns = cfg.seeds.len();
            points.push(Point {
                group: label.clone(),
                parameter: "rho",
                value: rho,
                secondary: None,
                role: if rho == 0.0 { EntryRole::Reference } else { EntryRole::Sweep },
                reference: None,
                per_seed: results[i * ns..(i + 1) * ns].to_vec(),
            });
        }
    }
    (points, notes)
}

fn d_eff(spec: &DgpSpec) -> usize {
    match spec.kind {
        DgpKind::SingleConstraint { .. } | DgpKind::MultiConstraint { .. } => spec.d - 1,
        _ => spec.d,
    }
}

fn sweep_dimensionality(cfg: &SuiteConfig) -> (Vec<Point>, Vec<String>) {
    let dm = &cfg.dimensionality;
    let retained: Vec<usize> = if dm.retained.is_empty() {
        (1..=dm.d).collect()
    } else {
        dm.retained.clone()
    };
    let mut points = Vec::new();
    let notes = vec!["m = d uses the identity-class encoder E1; smaller m keeps the first m factors of the keep order (free factors first)".to_string()];
    for spec in &dm.dgps {
        let name = spec.short_name();
        let free = d_eff(spec);
        let jobs: Vec<(usize, u64)> = retained.iter().flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s))).collect();
        let results: Vec<std::result::Result<SeedScores, String>> = jobs
            .par_iter()
            .map(|&(m, seed)| {
                let sample = dgp::sample(spec, dm.n, &data_rng(seed, &format!("p2/dgp/{name}"))).map_err(|e| e.to_string())?;
                let recipe = if m == dm.d { EncoderRecipe::E1 } else { EncoderRecipe::E4 { m } };
                let ds = recipe
                    .build(&sample, &data_rng(seed, &format!("p2/encoder/{name}")))
                    .map_err(|e| e.to_string())?;
                let rng = data_rng(seed, &format!("p2/metrics/{name}/m={m}"));
                Ok(score_all(&ds, &cfg.metrics, &cfg.settings, &rng))
            })
            .collect();
        let ns = cfg.seeds.len();
        for (i, &m) in retained.iter().enumerate() {
            let (role, reference) = match m.cmp(&free) {
                std::cmp::Ordering::Less => (EntryRole::Lossy, Some(m as f64 / free as f64)),
                std::cmp::Ordering::Equal => (EntryRole::Lossless, Some(1.0)),
                std::cmp::Ordering::Greater => (EntryRole::Redundant, None),
            };
            points.push(Point {
                group: name.to_string(),
                parameter: "m",
                value: m as f64,
                secondary: None,
                role,
                reference,
                per_seed: results[i * ns..(i + 1) * ns].to_vec(),
            });
        }
    }
    (points, notes)
}

fn sweep_overcomplete(cfg: &SuiteConfig) -> (Vec<Point>, Vec<String>) {
    let o = &cfg.overcomplete;
    let mixing = MixingOptions {
        kappa: o.kappa,
        ..Default::default()
    };
    let mut notes = Vec::new();
    let mut points = Vec::new();
    for &kind in &o.kinds {
        let group = kind.name();
        let baseline = match kind {
            OvercompleteKind::E7 => EncoderRecipe::E3 { mixing },
            _ => EncoderRecipe::E1,
        };
        let mut recipes: Vec<(f64, EntryRole, EncoderRecipe)> = vec![(1.0, EntryRole::Reference, baseline)];
        for &ratio in &o.ratios {
            let m = (ratio * o.d as f64).round() as usize;
            let recipe = match kind {
                OvercompleteKind::E5 => EncoderRecipe::E5 { m },
                OvercompleteKind::E6 => EncoderRecipe::E6 { m },
                OvercompleteKind::E7 => EncoderRecipe::E7 { m, mixing },
                OvercompleteKind::E8 => {
                    if ratio.fract() != 0.0 {
                        notes.push(format!("{group}: m/d={ratio} skipped (needs an integer block size)"));
                        continue;
                    }
                    EncoderRecipe::E8 { k: ratio as usize }
                }
            };
            recipes.push((ratio, EntryRole::Sweep, recipe));
        }
        let jobs: Vec<(usize, u64)> = (0..recipes.len())
            .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
            .collect();
        let results: Vec<std::result::Result<SeedScores, String>> = jobs
            .par_iter()
            .map(|&(i, seed)| {
                let (ratio, _, recipe) = &recipes[i];
                let sample = dgp::sample_d1(o.d, o.n, Marginal::Normal, &data_rng(seed, "p3/dgp")).map_err(|e| e.to_string())?;
                let ds = recipe
                    .build(&sample, &data_rng(seed, &format!("p3/encoder/{group}/ratio={ratio}")))
                    .map_err(|e| e.to_string())?;
                let rng = data_rng(seed, &format!("p3/metrics/{group}/ratio={ratio}"));
                Ok(score_all(&ds, &cfg.metrics, &cfg.settings, &rng))
            })
            .collect();
        let ns = cfg.seeds.len();
        for (i, (ratio, role, _)) in recipes.iter().enumerate() {
            points.push(Point {
                group: group.to_string(),
                parameter: "m/d",
                value: *ratio,
                secondary: None,
                role: *role,
                reference: None,
                per_seed: results[i * ns..(i + 1) * ns].to_vec(),
            });
        }
    }
    (points, notes)
}

/// Rows left for held-out scoring at split fraction `frac`.
fn held_out_rows(n: usize, frac: f64) -> usize {
    n - (n as f64 * frac).floor() as usize
}

fn sweep_null(cfg: &SuiteConfig) -> (Vec<Point>, Vec<String>) {
    let nl = &cfg.null;
    let mut notes = Vec::new();
    let mut cells = Vec::new();
    for &dr in &nl.dim_ratios {
        for &sr in &nl.sample_ratios {
            let m = ((dr * nl.d as f64).round() as usize).max(1);
            let n = (m as f64 / sr).round() as usize;
            if held_out_rows(n, cfg.settings.split_fraction) < 3 {
                notes.push(format!("cell m/d={dr}, m/n={sr} (m={m}, n={n}) skipped: fewer than 3 held-out rows"));
                continue;
            }
            cells.push((dr, sr, m, n));
        }
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s))).collect();
    let results: Vec<std::result::Result<SeedScores, String>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let (_, _, m, n) = cells[i];
            let key = format!("p4/m={m}/n={n}");
            let sample = dgp::sample_d1(nl.d, n, Marginal::Normal, &data_rng(seed, &format!("{key}/dgp"))).map_err(|e| e.to_string())?;
            let ds = nl
                .kind
                .recipe(m)
                .build(&sample, &data_rng(seed, &format!("{key}/encoder")))
                .map_err(|e| e.to_string())?;
            Ok(score_all(&ds, &cfg.metrics, &cfg.settings, &data_rng(seed, &format!("{key}/metrics"))))
        })
        .collect();
    let ns = cfg.seeds.len();
    let points = cells
        .iter()
        .enumerate()
        .map(|(i, &(dr, sr, m, n))| {
            Point {
                group: format!("m/d={dr}"),
                parameter: "m/d",
                value: dr,
                secondary: Some(sr),
                role: EntryRole::Cell,
                reference: null_mcc_floor(m, n).ok(),
                per_seed: results[i * ns..(i + 1) * ns].to_vec(),
            }
        })
        .collect();
    (points, notes)
}

// ---------------------------------------------------------------- reports

fn correlation_reports(cfg: &SuiteConfig) -> Vec<PropertyReport> {
    let (points, notes) = sweep_correlation(cfg);
    per_metric_sweeps(&points, &cfg.metrics)
        .into_iter()
        .zip(&cfg.metrics)
        .map(|(sweep, &metric)| {
            let mut notes = notes.clone();
            if metric == MetricId::R2 {
                notes.push(format!("R² probe: {}", cfg.correlation.r2_probe.label()));
            }
            finish_report(
                PropertyId::P1,
                metric,
                cfg.thresholds.correlation,
                sweep,
                BTreeMap::new(),
                BTreeMap::new(),
                notes,
            )
        })
        .collect()
}

fn dimensionality_reports(cfg: &SuiteConfig) -> Vec<PropertyReport> {
    let (points, notes) = sweep_dimensionality(cfg);
    let tau = cfg.thresholds.dimensionality;
    per_metric_sweeps(&points, &cfg.metrics)
        .into_iter()
        .zip(&cfg.metrics)
        .map(|(sweep, &metric)| {
            let mut checks = BTreeMap::new();
            for g in groups(&sweep) {
                let lossless = sweep.iter().find(|e| e.group == g && e.role == EntryRole::Lossless);
                let first_lossy = sweep
                    .iter()
                    .filter(|e| e.group == g && e.role == EntryRole::Lossy)
                    .max_by(|a, b| a.value.total_cmp(&b.value));
                if let Some(m) = lossless.and_then(|e| e.mean) {
                    checks.insert(format!("{g}: lossless score > 1 - tau"), m > 1.0 - tau);
                }
                if let Some(m) = first_lossy.and_then(|e| e.mean) {
                    checks.insert(format!("{g}: first lossy score < 1 - tau"), m < 1.0 - tau);
                }
            }
            finish_report(
                PropertyId::P2,
                metric,
                tau,
                sweep,
                checks,
                BTreeMap::new(),
                notes.clone(),
            )
        })
        .collect()
}

fn overcomplete_reports(cfg: &SuiteConfig) -> Vec<PropertyReport> {
    let (points, mut notes) = sweep_overcomplete(cfg);
    notes.push("tolerance per encoder = 95% half-width of the matched baseline over seeds".into());
    per_metric_sweeps(&points, &cfg.metrics)
        .into_iter()
        .zip(&cfg.metrics)
        .map(|(sweep, &metric)| {
            let mut descriptive = BTreeMap::new();
            for g in groups(&sweep) {
                if let Some(e) = sweep.iter().find(|e| e.group == g && e.role == EntryRole::Reference) {
                    if let Some(t) = e.ci_half_width {
                        descriptive.insert(format!("{g}: tolerance"), t);
                    }
                }
            }
            finish_report(
                PropertyId::P3,
                metric,
                cfg.thresholds.overcomplete,
                sweep,
                BTreeMap::new(),
                descriptive,
                notes.clone(),
            )
        })
        .collect()
}

/// Mean absolute change of cell means between adjacent grid positions, along
/// m/n within a fixed m/d (`along_samples`) or along m/d at fixed m/n.
fn grid_gradient(sweep: &[SweepEntry], along_samples: bool) -> Option<f64> {
    let mut diffs = Vec::new();
    for a in sweep {
        let next = sweep
            .iter()
            .filter(|b| {
                if along_samples {
                    b.value == a.value && b.secondary > a.secondary
                } else {
                    b.secondary == a.secondary && b.value > a.value
                }
            })
            .min_by(|x, y| {
                let key = |e: &SweepEntry| if along_samples { e.secondary.unwrap_or(0.0) } else { e.value };
                key(x).total_cmp(&key(y))
            });
        if let (Some(b), Some(ma)) = (next, a.mean) {
            if let Some(mb) = b.mean {
                diffs.push((mb - ma).abs());
            }
        }
    }
    (!diffs.is_empty()).then(|| mean(&diffs))
}

fn null_reports(cfg: &SuiteConfig) -> Vec<PropertyReport> {
    let (points, notes) = sweep_null(cfg);
    per_metric_sweeps(&points, &cfg.metrics)
        .into_iter()
        .zip(&cfg.metrics)
        .map(|(mut sweep, &metric)| {
            if metric.dependence().is_none() {
                for e in &mut sweep {
                    e.reference = None;
                }
            }
            let mut descriptive = BTreeMap::new();
            if let Some(g) = grid_gradient(&sweep, true) {
                descriptive.insert("mean |step| along m/n".into(), g);
            }
            if let Some(g) = grid_gradient(&sweep, false) {
                descriptive.insert("mean |step| along m/d".into(), g);
            }
            let mut checks = BTreeMap::new();
            if metric.dependence().is_some() {
                let above = sweep
                    .iter()
                    .all(|e| match (e.mean, e.reference) {
                        (Some(m), Some(r)) => m >= r - 0.02,
                        _ => true,
                    });
                checks.insert("cell means >= floor - 0.02".into(), above);
            }
            finish_report(
                PropertyId::P4,
                metric,
                cfg.thresholds.null,
                sweep,
                checks,
                descriptive,
                notes.clone(),
            )
        })
        .collect()
}

pub fn check_property(cfg: &SuiteConfig, property: PropertyId) -> Result<Vec<PropertyReport>> {
    cfg.validate()?;
    Ok(match property {
        PropertyId::P1 => correlation_reports(cfg),
        PropertyId::P2 => dimensionality_reports(cfg),
        PropertyId::P3 => overcomplete_reports(cfg),
        PropertyId::P4 => null_reports(cfg),
    })
}

fn single(cfg: &SuiteConfig, metric: MetricId, property: PropertyId) -> Result<PropertyReport> {
    let cfg = SuiteConfig {
        metrics: vec![metric],
        ..cfg.clone()
    };
    Ok(check_property(&cfg, property)?.remove(0))
}

/// P1 for one metric with E1 and E3(kappa) over `rhos`.
pub fn check_p1(metric: MetricId, kappa: f64, rhos: &[f64], seeds: &[u64]) -> Result<PropertyReport> {
    let mut cfg = SuiteConfig {
        seeds: seeds.to_vec(),
        ..Default::default()
    };
    cfg.correlation.kappa = kappa;
    cfg.correlation.rhos = rhos.to_vec();
    single(&cfg, metric, PropertyId::P1)
}

/// P2 for one metric over the given DGPs and retained dimensions (empty: 1..=d).
pub fn check_p2(metric: MetricId, dgps: &[DgpSpec], retained: &[usize], seeds: &[u64]) -> Result<PropertyReport> {
    let mut cfg = SuiteConfig {
        seeds: seeds.to_vec(),
        ..Default::default()
    };
    if let Some(first) = dgps.first() {
        cfg.dimensionality.d = first.d;
    }
    cfg.dimensionality.dgps = dgps.to_vec();
    cfg.dimensionality.retained = retained.to_vec();
    single(&cfg, metric, PropertyId::P2)
}

pub fn check_p3(metric: MetricId, kinds: &[OvercompleteKind], ratios: &[f64], seeds: &[u64]) -> Result<PropertyReport> {
    let mut cfg = SuiteConfig {
        seeds: seeds.to_vec(),
        ..Default::default()
    };
    cfg.overcomplete.kinds = kinds.to_vec();
    cfg.overcomplete.ratios = ratios.to_vec();
    single(&cfg, metric, PropertyId::P3)
}

pub fn check_p4(
    metric: MetricId,
    kind: NullKind,
    dim_ratios: &[f64],
    sample_ratios: &[f64],
    seeds: &[u64],
) -> Result<PropertyReport> {
    let mut cfg = SuiteConfig {
        seeds: seeds.to_vec(),
        ..Default::default()
    };
    cfg.null.kind = kind;
    cfg.null.dim_ratios = dim_ratios.to_vec();
    cfg.null.sample_ratios = sample_ratios.to_vec();
    single(&cfg, metric, PropertyId::P4)
}

// ---------------------------------------------------------------- suite

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub reports: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn verdict(&self, metric: MetricId, property: PropertyId) -> Option<Verdict> {
        self.reports
            .iter()
            .find(|r| r.metric == metric && r.property == property)
            .map(|r| r.verdict)
    }

    /// True when some verdict is `Violated`; partial verdicts do not count.
    pub fn any_violation(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::Violated)
    }

    /// Metric rows by property columns, one verdict per cell.
    pub fn write_verdict_matrix<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["metric".to_string()];
        header.extend(self.config.properties.iter().map(|p| p.name().to_string()));
        w.write_record(&header)?;
        for &metric in &self.config.metrics {
            let mut row = vec![metric.name().to_string()];
            for &p in &self.config.properties {
                row.push(self.verdict(metric, p).map_or("", |v| v.name()).to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut reports = Vec::new();
    for &p in &cfg.properties {
        reports.extend(check_property(cfg, p)?);
    }
    Ok(SuiteReport {
        config: cfg.clone(),
        reports,
    })
}
