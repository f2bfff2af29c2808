//! Metric families: matched correlation (MCC), probe R², DCI and MIG.
//!
//! Every metric takes an [`EncodedDataset`] and a root [`Rng`]. Anything
//! random is drawn from named child streams (`split`, `probe/<j>`, `rdc`), so
//! a metric computed on its own and the same metric computed inside
//! [`evaluate`] agree bit for bit.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::EncodedDataset;
use crate::error::{Error, Result};
use crate::matrix::{CodeMatrix, FactorMatrix};
use crate::numstats::{
    dependence_matrix, discrete_entropy, hungarian_max, quantile_bins, split_indices, Assignment, DependenceKind,
    RdcSettings, SplitIndices,
};
use crate::numstats::{entropy_from_codes, mi_from_codes};
use crate::probes::{fit_probe, r2_from_predictions, FittedProbe, ProbeFlag, ProbeSpec};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    MccP,
    MccS,
    MccRdc,
    R2,
    DciD,
    DciC,
    DciI,
    Mig,
}

impl MetricId {
    pub const ALL: [MetricId; 8] = [
        MetricId::MccP,
        MetricId::MccS,
        MetricId::MccRdc,
        MetricId::R2,
        MetricId::DciD,
        MetricId::DciC,
        MetricId::DciI,
        MetricId::Mig,
    ];

    /// The four metrics the property suite rates.
    pub const MAIN: [MetricId; 4] = [MetricId::MccP, MetricId::MccS, MetricId::R2, MetricId::DciD];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::MccP => "mcc_p",
            MetricId::MccS => "mcc_s",
            MetricId::MccRdc => "mcc_rdc",
            MetricId::R2 => "r2",
            MetricId::DciD => "dci_d",
            MetricId::DciC => "dci_c",
            MetricId::DciI => "dci_i",
            MetricId::Mig => "mig",
        }
    }

    pub fn parse(s: &str) -> Option<MetricId> {
        MetricId::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn dependence(self) -> Option<DependenceKind> {
        match self {
            MetricId::MccP => Some(DependenceKind::Pearson),
            MetricId::MccS => Some(DependenceKind::Spearman),
            MetricId::MccRdc => Some(DependenceKind::Rdc),
            _ => None,
        }
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which rows a correlation-based metric is computed on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSubset {
    #[default]
    All,
    /// The test rows of the same split the probes use.
    HeldOut,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "flag", content = "index")]
pub enum ScoreFlag {
    ConstantCode(usize),
    ConstantFactor(usize),
    AllCodesConstant,
    RdcRegularized,
    /// Factor with zero variance on the evaluation rows; left out of the mean.
    ZeroVarianceFactor(usize),
    ProbeRidgeFallback(usize),
    ProbeNotConverged(usize),
    AllZeroImportance,
    /// Completeness needs at least two codes.
    SingleCode,
    /// Disentanglement needs at least two factors.
    SingleFactor,
    ZeroEntropyFactor(usize),
    /// Fewer than ten samples per histogram bin.
    SparseHistogram,
}

/// Estimator settings a score was computed with.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScoreSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dependence: Option<DependenceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<RowSubset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rdc: Option<RdcSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_by_r2: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

/// Nonnegative code-by-factor importance and its normalizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceMatrix {
    /// `m` rows (codes) of `d` entries (factors).
    pub entries: Vec<Vec<f64>>,
    /// Row `i` normalized over factors; `None` for zero-mass rows.
    pub row_distributions: Vec<Option<Vec<f64>>>,
    /// Column `j` normalized over codes; `None` for zero-mass columns.
    pub column_distributions: Vec<Option<Vec<f64>>>,
    /// Row mass share.
    pub code_weights: Vec<f64>,
    /// Column mass share.
    pub factor_weights: Vec<f64>,
}

impl ImportanceMatrix {
    pub fn new(r: &DMatrix<f64>) -> Result<Self> {
        if r.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::param("importance", "entries must be finite and nonnegative"));
        }
        let (m, d) = r.shape();
        let total: f64 = r.iter().sum();
        let normalize = |xs: Vec<f64>| {
            let s: f64 = xs.iter().sum();
            (s > 0.0).then(|| xs.iter().map(|x| x / s).collect::<Vec<_>>())
        };
        let rows: Vec<Vec<f64>> = (0..m).map(|i| r.row(i).iter().copied().collect()).collect();
        let cols: Vec<Vec<f64>> = (0..d).map(|j| r.column(j).iter().copied().collect()).collect();
        let share = |xs: &Vec<f64>| if total > 0.0 { xs.iter().sum::<f64>() / total } else { 0.0 };
        Ok(ImportanceMatrix {
            code_weights: rows.iter().map(share).collect(),
            factor_weights: cols.iter().map(share).collect(),
            row_distributions: rows.iter().cloned().map(normalize).collect(),
            column_distributions: cols.into_iter().map(normalize).collect(),
            entries: rows,
        })
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn d(&self) -> usize {
        self.factor_weights.len()
    }

    /// Weighted disentanglement and the per-code scores (zero-mass codes
    /// get `None`). Undefined when the matrix is all zero or `d < 2`.
    pub fn disentanglement(&self) -> (Option<f64>, Vec<Option<f64>>) {
        concentration(&self.row_distributions, &self.code_weights, self.d())
    }

    /// Weighted completeness and per-factor scores. Undefined when the
    /// matrix is all zero or `m < 2`.
    pub fn completeness(&self) -> (Option<f64>, Vec<Option<f64>>) {
        concentration(&self.column_distributions, &self.factor_weights, self.m())
    }

    fn is_zero(&self) -> bool {
        self.code_weights.iter().all(|w| *w == 0.0)
    }
}

fn concentration(dists: &[Option<Vec<f64>>], weights: &[f64], support: usize) -> (Option<f64>, Vec<Option<f64>>) {
    if support < 2 {
        return (None, vec![None; dists.len()]);
    }
    let log_support = (support as f64).ln();
    let per: Vec<Option<f64>> = dists
        .iter()
        .map(|p| {
            p.as_ref()
                .map(|p| 1.0 - discrete_entropy(p).expect("normalized importances") / log_support)
        })
        .collect();
    if weights.iter().all(|w| *w == 0.0) {
        return (None, per);
    }
    // Dividing by the weight sum keeps rounding in the shares from pulling a
    // perfect score below 1.
    let (num, den) = per
        .iter()
        .zip(weights)
        .filter_map(|(s, w)| s.map(|s| (s * w, *w)))
        .fold((0.0, 0.0), |(a, b), (x, w)| (a + x, b + w));
    (Some((num / den).clamp(0.0, 1.0)), per)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Diagnostics {
    Matching {
        /// `(code, factor)` pairs.
        pairs: Vec<(usize, usize)>,
        /// Absolute dependence, one row per code.
        dependence: Vec<Vec<f64>>,
    },
    PerFactorR2 {
        r2: Vec<Option<f64>>,
    },
    Importance {
        importance: ImportanceMatrix,
        r2: Vec<Option<f64>>,
    },
    MutualInformation {
        /// One row per code.
        mi: Vec<Vec<f64>>,
        factor_entropy: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricScore {
    pub metric: MetricId,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_factor: Option<Vec<Option<f64>>>,
    pub diagnostics: Diagnostics,
    pub settings: ScoreSettings,
    pub flags: Vec<ScoreFlag>,
}

impl MetricScore {
    pub fn defined(&self) -> bool {
        self.value.is_some()
    }
}

/// Settings shared by every metric of one evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub r2_probe: ProbeSpec,
    pub dci_probe: ProbeSpec,
    pub split_fraction: f64,
    pub mcc_rows: RowSubset,
    pub rdc: RdcSettings,
    pub mig_bins: usize,
    /// Scale each factor's importances by its held-out R².
    pub dci_weight_by_r2: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            r2_probe: ProbeSpec::gbt(),
            dci_probe: ProbeSpec::gbt(),
            split_fraction: 0.8,
            mcc_rows: RowSubset::HeldOut,
            rdc: RdcSettings::default(),
            mig_bins: 20,
            dci_weight_by_r2: true,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        self.r2_probe.validate()?;
        self.dci_probe.validate()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::param("split_fraction", "must lie strictly between 0 and 1"));
        }
        if self.mig_bins < 2 {
            return Err(Error::param("mig_bins", "must be at least 2"));
        }
        if self.rdc.features == 0 || !(self.rdc.scale > 0.0) {
            return Err(Error::param("rdc", "needs at least one feature and a positive scale"));
        }
        Ok(())
    }
}

fn split_for(ds: &EncodedDataset, fraction: f64, rng: &Rng) -> Result<SplitIndices> {
    split_indices(ds.n(), fraction, &rng.derive("split"))
}

// ---------------------------------------------------------------- MCC

/// Absolute dependence matrix on the chosen rows (the input to matching).
pub fn mcc_dependence(
    ds: &EncodedDataset,
    kind: DependenceKind,
    rows: RowSubset,
    split_fraction: f64,
    rdc: &RdcSettings,
    rng: &Rng,
) -> Result<(DMatrix<f64>, crate::numstats::CorrelationMatrix)> {
    let (zhat, z) = match rows {
        RowSubset::All => (ds.zhat.clone(), ds.z.clone()),
        RowSubset::HeldOut => {
            let idx = split_for(ds, split_fraction, rng)?;
            (ds.zhat.select_rows(&idx.test)?, ds.z.select_rows(&idx.test)?)
        }
    };
    let cm = dependence_matrix(&zhat, &z, kind, rdc, &rng.derive("rdc"))?;
    Ok((cm.abs(), cm))
}

/// Mean of the matched entries of an absolute dependence matrix.
pub fn mcc_from_matrix(abs_dep: &DMatrix<f64>) -> Result<(f64, Assignment)> {
    let a = hungarian_max(abs_dep)?;
    let k = abs_dep.nrows().min(abs_dep.ncols());
    Ok((a.objective / k as f64, a))
}

/// MCC on all rows with default RDC settings.
pub fn mcc(ds: &EncodedDataset, kind: DependenceKind) -> Result<MetricScore> {
    let settings = EvalSettings {
        mcc_rows: RowSubset::All,
        ..EvalSettings::default()
    };
    mcc_with(ds, kind, &settings, &Rng::new(0, 0))
}

pub fn mcc_with(ds: &EncodedDataset, kind: DependenceKind, settings: &EvalSettings, rng: &Rng) -> Result<MetricScore> {
    let (abs_dep, cm) = mcc_dependence(ds, kind, settings.mcc_rows, settings.split_fraction, &settings.rdc, rng)?;
    let mut flags: Vec<ScoreFlag> = Vec::new();
    flags.extend(
        cm.constant_codes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(i, _)| ScoreFlag::ConstantCode(i)),
    );
    flags.extend(
        cm.constant_factors
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(j, _)| ScoreFlag::ConstantFactor(j)),
    );
    if cm.regularized {
        flags.push(ScoreFlag::RdcRegularized);
    }
    let metric = match kind {
        DependenceKind::Pearson => MetricId::MccP,
        DependenceKind::Spearman => MetricId::MccS,
        DependenceKind::Rdc => MetricId::MccRdc,
    };
    let (value, pairs) = if cm.constant_codes.iter().all(|c| *c) {
        flags.push(ScoreFlag::AllCodesConstant);
        (0.0, Vec::new())
    } else {
        let (v, a) = mcc_from_matrix(&abs_dep)?;
        (v, a.pairs)
    };
    let mut per_factor = vec![None; ds.d()];
    for &(i, j) in &pairs {
        per_factor[j] = Some(abs_dep[(i, j)]);
    }
    Ok(MetricScore {
        metric,
        value: Some(value),
        per_factor: Some(per_factor),
        diagnostics: Diagnostics::Matching {
            pairs,
            dependence: (0..abs_dep.nrows()).map(|i| abs_dep.row(i).iter().copied().collect()).collect(),
        },
        settings: ScoreSettings {
            dependence: Some(kind),
            rows: Some(settings.mcc_rows),
            rdc: (kind == DependenceKind::Rdc).then_some(settings.rdc),
            split_fraction: (settings.mcc_rows == RowSubset::HeldOut).then_some(settings.split_fraction),
            ..Default::default()
        },
        flags,
    })
}

// ---------------------------------------------------------------- probes

/// One probe per factor, fitted on the training rows and scored on the test rows.
#[derive(Clone, Debug)]
pub struct ProbeBank {
    pub spec: ProbeSpec,
    pub split: SplitIndices,
    pub probes: Vec<FittedProbe>,
    /// Held-out R² per factor, unclamped; `None` for a zero-variance target.
    pub test_r2: Vec<Option<f64>>,
}

impl ProbeBank {
    fn flags(&self) -> Vec<ScoreFlag> {
        let mut out = Vec::new();
        for (j, p) in self.probes.iter().enumerate() {
            for f in p.flags() {
                out.push(match f {
                    ProbeFlag::RidgeFallback => ScoreFlag::ProbeRidgeFallback(j),
                    ProbeFlag::NotConverged => ScoreFlag::ProbeNotConverged(j),
                });
            }
        }
        for (j, r) in self.test_r2.iter().enumerate() {
            if r.is_none() {
                out.push(ScoreFlag::ZeroVarianceFactor(j));
            }
        }
        out
    }
}

/// Split with the `split` stream and fit factor `j` with stream `probe/j`.
pub fn fit_factor_probes(ds: &EncodedDataset, spec: &ProbeSpec, split_fraction: f64, rng: &Rng) -> Result<ProbeBank> {
    let split = split_for(ds, split_fraction, rng)?;
    let train_x = ds.zhat.select_rows(&split.train)?;
    let test_x = ds.zhat.select_rows(&split.test)?;
    let train_z = ds.z.select_rows(&split.train)?;
    let test_z = ds.z.select_rows(&split.test)?;
    let fitted: Vec<Result<(FittedProbe, Option<f64>)>> = (0..ds.d())
        .into_par_iter()
        .map(|j| {
            let probe = fit_probe(spec, &train_x, train_z.column(j), &rng.derive_indexed("probe", j as u64))?;
            let pred = probe.predict(test_x.as_matrix());
            let r2 = r2_from_predictions(&pred, test_z.column(j));
            Ok((probe, r2))
        })
        .collect();
    let mut probes = Vec::with_capacity(ds.d());
    let mut test_r2 = Vec::with_capacity(ds.d());
    for f in fitted {
        let (p, r) = f?;
        probes.push(p);
        test_r2.push(r);
    }
    Ok(ProbeBank {
        spec: spec.clone(),
        split,
        probes,
        test_r2,
    })
}

fn mean_clamped(r2: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = r2.iter().flatten().map(|r| r.clamp(0.0, 1.0)).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn r2_from_bank(bank: &ProbeBank, split_fraction: f64) -> MetricScore {
    MetricScore {
        metric: MetricId::R2,
        value: mean_clamped(&bank.test_r2),
        per_factor: Some(bank.test_r2.clone()),
        diagnostics: Diagnostics::PerFactorR2 {
            r2: bank.test_r2.clone(),
        },
        settings: ScoreSettings {
            probe: Some(bank.spec.clone()),
            split_fraction: Some(split_fraction),
            ..Default::default()
        },
        flags: bank.flags(),
    }
}

/// Mean held-out R² over factors, each clamped to `[0, 1]`.
pub fn r2_metric(ds: &EncodedDataset, probe: &ProbeSpec, split_fraction: f64, rng: &Rng) -> Result<MetricScore> {
    let bank = fit_factor_probes(ds, probe, split_fraction, rng)?;
    Ok(r2_from_bank(&bank, split_fraction))
}

// ---------------------------------------------------------------- DCI

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DciOptions {
    pub probe: ProbeSpec,
    pub split_fraction: f64,
    pub weight_by_r2: bool,
}

impl Default for DciOptions {
    fn default() -> Self {
        DciOptions {
            probe: ProbeSpec::gbt(),
            split_fraction: 0.8,
            weight_by_r2: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DciResult {
    pub disentanglement: MetricScore,
    pub completeness: MetricScore,
    pub informativeness: MetricScore,
    pub importance: ImportanceMatrix,
}

/// Importance matrix from a probe bank: each factor's importances are
/// normalized to sum 1, then optionally scaled by `max(0, R²_j)`.
pub fn importance_from_bank(bank: &ProbeBank, weight_by_r2: bool) -> Result<ImportanceMatrix> {
    let d = bank.probes.len();
    let m = bank.probes.first().map_or(0, |p| p.importance().len());
    let mut r = DMatrix::zeros(m, d);
    for (j, p) in bank.probes.iter().enumerate() {
        let imp = p.importance();
        let total: f64 = imp.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let w = if weight_by_r2 {
            bank.test_r2[j].unwrap_or(0.0).max(0.0)
        } else {
            1.0
        };
        for (i, v) in imp.iter().enumerate() {
            r[(i, j)] = v / total * w;
        }
    }
    ImportanceMatrix::new(&r)
}

pub fn dci(ds: &EncodedDataset, probe: &ProbeSpec, split_fraction: f64, rng: &Rng) -> Result<DciResult> {
    dci_with(
        ds,
        &DciOptions {
            probe: probe.clone(),
            split_fraction,
            weight_by_r2: true,
        },
        rng,
    )
}

pub fn dci_with(ds: &EncodedDataset, opts: &DciOptions, rng: &Rng) -> Result<DciResult> {
    let bank = fit_factor_probes(ds, &opts.probe, opts.split_fraction, rng)?;
    dci_from_bank(&bank, opts)
}

fn dci_from_bank(bank: &ProbeBank, opts: &DciOptions) -> Result<DciResult> {
    let importance = importance_from_bank(bank, opts.weight_by_r2)?;
    let settings = ScoreSettings {
        probe: Some(bank.spec.clone()),
        split_fraction: Some(opts.split_fraction),
        weight_by_r2: Some(opts.weight_by_r2),
        ..Default::default()
    };
    let mut base_flags = bank.flags();
    if importance.is_zero() {
        base_flags.push(ScoreFlag::AllZeroImportance);
    }
    let (d_value, _) = importance.disentanglement();
    let (c_value, per_factor_c) = importance.completeness();
    let mut d_flags = base_flags.clone();
    if importance.d() < 2 {
        d_flags.push(ScoreFlag::SingleFactor);
    }
    let mut c_flags = base_flags.clone();
    if importance.m() < 2 {
        c_flags.push(ScoreFlag::SingleCode);
    }
    let diag = Diagnostics::Importance {
        importance: importance.clone(),
        r2: bank.test_r2.clone(),
    };
    let clamped: Vec<Option<f64>> = bank.test_r2.iter().map(|r| r.map(|r| r.clamp(0.0, 1.0))).collect();
    Ok(DciResult {
        disentanglement: MetricScore {
            metric: MetricId::DciD,
            value: d_value,
            per_factor: None,
            diagnostics: diag.clone(),
            settings: settings.clone(),
            flags: d_flags,
        },
        completeness: MetricScore {
            metric: MetricId::DciC,
            value: c_value,
            per_factor: Some(per_factor_c),
            diagnostics: diag.clone(),
            settings: settings.clone(),
            flags: c_flags,
        },
        informativeness: MetricScore {
            metric: MetricId::DciI,
            value: mean_clamped(&bank.test_r2),
            per_factor: Some(clamped),
            diagnostics: diag,
            settings,
            flags: base_flags,
        },
        importance,
    })
}

// ---------------------------------------------------------------- MIG

pub fn mig(ds: &EncodedDataset, bins: usize) -> Result<MetricScore> {
    mig_on(&ds.zhat, &ds.z, bins)
}

/// Mutual information gap with quantile-histogram MI, normalized by the
/// binned factor entropy.
pub fn mig_on(zhat: &CodeMatrix, z: &FactorMatrix, bins: usize) -> Result<MetricScore> {
    crate::matrix::check_paired(zhat, z)?;
    if bins < 2 {
        return Err(Error::param("bins", "must be at least 2"));
    }
    let mut flags = Vec::new();
    if zhat.n() < 10 * bins {
        flags.push(ScoreFlag::SparseHistogram);
    }
    if zhat.m() < 2 {
        flags.push(ScoreFlag::SingleCode);
    }
    let codes: Vec<(Vec<usize>, usize)> = (0..zhat.m()).map(|i| quantile_bins(zhat.column(i), bins)).collect();
    let factors: Vec<(Vec<usize>, usize)> = (0..z.d()).map(|j| quantile_bins(z.column(j), bins)).collect();
    let mi: Vec<Vec<f64>> = codes
        .iter()
        .map(|(a, ka)| {
            factors
                .iter()
                .map(|(b, kb)| if *ka < 2 || *kb < 2 { 0.0 } else { mi_from_codes(a, *ka, b, *kb).max(0.0) })
                .collect()
        })
        .collect();
    let entropy: Vec<f64> = factors.iter().map(|(b, kb)| entropy_from_codes(b, *kb)).collect();
    let mut per_factor = Vec::with_capacity(z.d());
    for (j, h) in entropy.iter().enumerate() {
        if *h <= 0.0 {
            flags.push(ScoreFlag::ZeroEntropyFactor(j));
            per_factor.push(None);
            continue;
        }
        let mut col: Vec<f64> = mi.iter().map(|row| row[j]).collect();
        col.sort_by(|a, b| b.total_cmp(a));
        let second = col.get(1).copied().unwrap_or(0.0);
        per_factor.push(Some(((col[0] - second) / h).clamp(0.0, 1.0)));
    }
    let defined: Vec<f64> = per_factor.iter().flatten().copied().collect();
    let value = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(MetricScore {
        metric: MetricId::Mig,
        value,
        per_factor: Some(per_factor),
        diagnostics: Diagnostics::MutualInformation {
            mi,
            factor_entropy: entropy,
        },
        settings: ScoreSettings {
            bins: Some(bins),
            ..Default::default()
        },
        flags,
    })
}

// ---------------------------------------------------------------- batch

/// Outcome of one metric inside [`evaluate`].
pub type MetricOutcome = std::result::Result<MetricScore, String>;

/// Evaluate several metrics on one dataset, sharing the split and the probe
/// fits. Each entry equals the corresponding standalone call with the same
/// `rng`; failures are reported per metric.
pub fn evaluate(ds: &EncodedDataset, metrics: &[MetricId], settings: &EvalSettings, rng: &Rng) -> Vec<MetricOutcome> {
    let mut banks: HashMap<String, std::result::Result<ProbeBank, String>> = HashMap::new();
    let mut bank_for = |spec: &ProbeSpec| -> std::result::Result<ProbeBank, String> {
        let key = serde_json::to_string(spec).expect("probe spec serializes");
        banks
            .entry(key)
            .or_insert_with(|| fit_factor_probes(ds, spec, settings.split_fraction, rng).map_err(|e| e.to_string()))
            .clone()
    };
    let mut dci_cache: Option<std::result::Result<DciResult, String>> = None;
    let mut out = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        let outcome = match metric {
            MetricId::MccP | MetricId::MccS | MetricId::MccRdc => {
                let kind = metric.dependence().expect("mcc metric");
                mcc_with(ds, kind, settings, rng).map_err(|e| e.to_string())
            }
            MetricId::R2 => bank_for(&settings.r2_probe).map(|b| r2_from_bank(&b, settings.split_fraction)),
            MetricId::DciD | MetricId::DciC | MetricId::DciI => {
                let res = dci_cache.get_or_insert_with(|| {
                    let opts = DciOptions {
                        probe: settings.dci_probe.clone(),
                        split_fraction: settings.split_fraction,
                        weight_by_r2: settings.dci_weight_by_r2,
                    };
                    bank_for(&settings.dci_probe).and_then(|b| dci_from_bank(&b, &opts).map_err(|e| e.to_string()))
                });
                res.clone().map(|r| match metric {
                    MetricId::DciD => r.disentanglement,
                    MetricId::DciC => r.completeness,
                    _ => r.informativeness,
                })
            }
            MetricId::Mig => mig(ds, settings.mig_bins).map_err(|e| e.to_string()),
        };
        out.push(outcome);
    }
    out
}

/// Evaluate one metric with the batch settings (same result as the
/// corresponding entry of [`evaluate`]).
pub fn evaluate_one(ds: &EncodedDataset, metric: MetricId, settings: &EvalSettings, rng: &Rng) -> Result<MetricScore> {
    match metric {
        MetricId::MccP | MetricId::MccS | MetricId::MccRdc => {
            mcc_with(ds, metric.dependence().expect("mcc metric"), settings, rng)
        }
        MetricId::R2 => r2_metric(ds, &settings.r2_probe, settings.split_fraction, rng),
        MetricId::DciD | MetricId::DciC | MetricId::DciI => {
            let r = dci_with(
                ds,
                &DciOptions {
                    probe: settings.dci_probe.clone(),
                    split_fraction: settings.split_fraction,
                    weight_by_r2: settings.dci_weight_by_r2,
                },
                rng,
            )?;
            Ok(match metric {
                MetricId::DciD => r.disentanglement,
                MetricId::DciC => r.completeness,
                _ => r.informativeness,
            })
        }
        MetricId::Mig => mig(ds, settings.mig_bins),
    }
}
