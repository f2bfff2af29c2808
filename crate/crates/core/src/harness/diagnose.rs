//! Checklist report for a user-supplied (factors, codes) pair.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoders::{EncodedDataset, EncoderRecipe};
use crate::error::Result;
use crate::matrix::{CodeMatrix, FactorMatrix};
use crate::metrics::{evaluate, EvalSettings, MetricId};
use crate::numstats::{mean, pearson, sample_sd};
use crate::oracles::null_mcc_floor;
use crate::properties::NullKind;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSettings {
    pub metrics: Vec<MetricId>,
    pub eval: EvalSettings,
    pub seed: u64,
    /// Seeds of the matched null-encoder baseline.
    pub null_seeds: Vec<u64>,
    pub null_kind: NullKind,
    /// m/n above which MCC is flagged.
    pub ratio_warning: f64,
    /// A score must exceed its null mean by more than this to count as signal.
    pub null_margin: f64,
}

impl Default for DiagnoseSettings {
    fn default() -> Self {
        DiagnoseSettings {
            metrics: MetricId::MAIN.to_vec(),
            eval: EvalSettings::default(),
            seed: 0,
            null_seeds: (0..5).collect(),
            null_kind: NullKind::Gaussian,
            ratio_warning: 0.1,
            null_margin: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
    Info,
}

impl CheckStatus {
    fn tag(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Warn => "WARN",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Info => "INFO",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub id: String,
    pub title: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullBaseline {
    pub metric: MetricId,
    pub score: Option<f64>,
    pub null_mean: Option<f64>,
    pub null_sd: Option<f64>,
    /// `score - null_mean`.
    pub margin: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub m_over_n: f64,
    pub regime: String,
    pub max_factor_correlation: Option<f64>,
    pub metrics: Vec<NullBaseline>,
    pub checklist: Vec<ChecklistItem>,
}

impl DiagnoseReport {
    pub fn status(&self, id: &str) -> Option<CheckStatus> {
        self.checklist.iter().find(|c| c.id == id).map(|c| c.status)
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let f = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
        writeln!(s, "# Identifiability diagnostic\n").unwrap();
        writeln!(
            s,
            "n = {}, d = {}, m = {}, m/n = {:.4} ({})\n",
            self.n, self.d, self.m, self.m_over_n, self.regime
        )
        .unwrap();
        writeln!(s, "| metric | score | null mean | null sd | margin |").unwrap();
        writeln!(s, "|---|---|---|---|---|").unwrap();
        for r in &self.metrics {
            writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                r.metric,
                f(r.score),
                f(r.null_mean),
                f(r.null_sd),
                f(r.margin)
            )
            .unwrap();
        }
        writeln!(s, "\n## Checklist\n").unwrap();
        for c in &self.checklist {
            writeln!(s, "- **[{}] {}**: {}", c.status.tag(), c.title, c.detail).unwrap();
        }
        s
    }
}

fn max_abs_correlation(z: &FactorMatrix) -> Option<f64> {
    let mut best: Option<f64> = None;
    for a in 0..z.d() {
        for b in a + 1..z.d() {
            if let Some(r) = pearson(z.column(a), z.column(b)) {
                best = Some(best.map_or(r.abs(), |x: f64| x.max(r.abs())));
            }
        }
    }
    best
}

pub fn diagnose(z: FactorMatrix, zhat: CodeMatrix, settings: &DiagnoseSettings) -> Result<DiagnoseReport> {
    settings.eval.validate()?;
    let ds = EncodedDataset::from_external(z, zhat)?;
    let (n, d, m) = (ds.n(), ds.d(), ds.m());
    let m_over_n = m as f64 / n as f64;
    let rng = Rng::new(settings.seed, 0);
    let observed = evaluate(&ds, &settings.metrics, &settings.eval, &rng.derive("metrics"));

    let recipe = match settings.null_kind {
        NullKind::Uniform => EncoderRecipe::NullUniform { m },
        NullKind::Gaussian => EncoderRecipe::NullGaussian { m },
    };
    let identity: Vec<usize> = (0..d).collect();
    let mut null_scores: Vec<Vec<f64>> = vec![Vec::new(); settings.metrics.len()];
    for &seed in &settings.null_seeds {
        let null_rng = Rng::new(seed, 0).derive("null");
        let null_ds = recipe.build_with_order(&ds.z, &identity, &null_rng.derive("encoder"))?;
        for (k, out) in evaluate(&null_ds, &settings.metrics, &settings.eval, &null_rng.derive("metrics"))
            .into_iter()
            .enumerate()
        {
            if let Some(v) = out.ok().and_then(|s| s.value) {
                null_scores[k].push(v);
            }
        }
    }
    let metrics: Vec<NullBaseline> = settings
        .metrics
        .iter()
        .zip(observed)
        .zip(&null_scores)
        .map(|((&metric, obs), nulls)| {
            let (score, error) = match obs {
                Ok(s) => (s.value, None),
                Err(e) => (None, Some(e)),
            };
            let null_mean = (!nulls.is_empty()).then(|| mean(nulls));
            let null_sd = (!nulls.is_empty()).then(|| sample_sd(nulls));
            NullBaseline {
                metric,
                score,
                null_mean,
                null_sd,
                margin: score.zip(null_mean).map(|(s, b)| s - b),
                error,
            }
        })
        .collect();

    let regime = match m.cmp(&d) {
        std::cmp::Ordering::Equal => "matched",
        std::cmp::Ordering::Greater => "overcomplete",
        std::cmp::Ordering::Less => "undercomplete",
    };
    let max_corr = max_abs_correlation(&ds.z);
    let corr_cut = (3.0 / (n as f64).sqrt()).max(0.1);
    let correlated = max_corr.is_some_and(|r| r > corr_cut);

    let mut checklist = Vec::new();
    let floor = null_mcc_floor(m, n).ok();
    checklist.push(if m_over_n > settings.ratio_warning {
        ChecklistItem {
            id: "ratio".into(),
            title: "overparametrisation ratio m/n".into(),
            status: CheckStatus::Warn,
            detail: format!(
                "m/n = {m_over_n:.3} exceeds {}: MCC scores are unreliable, a null encoder already scores about sqrt(2 ln m / n) = {}. Increase n or reduce m before interpreting MCC.",
                settings.ratio_warning,
                floor.map_or("n/a".into(), |f| format!("{f:.3}"))
            ),
        }
    } else {
        ChecklistItem {
            id: "ratio".into(),
            title: "overparametrisation ratio m/n".into(),
            status: CheckStatus::Pass,
            detail: format!("m/n = {m_over_n:.3} is within {}", settings.ratio_warning),
        }
    });

    // A null mean near the ceiling means the metric cannot separate anything
    // on this (m, n, d); R²-weighted DCI-D does this when one factor carries
    // all the importance mass.
    let saturated = |r: &&NullBaseline| r.null_mean.is_some_and(|b| b >= 1.0 - settings.null_margin);
    let close = |r: &&NullBaseline| r.margin.is_some_and(|g| g <= settings.null_margin);
    let indistinct: Vec<String> = metrics
        .iter()
        .filter(|r| close(r) && !saturated(r))
        .map(|r| r.metric.to_string())
        .collect();
    let uninformative: Vec<String> = metrics
        .iter()
        .filter(|r| close(r) && saturated(r))
        .map(|r| r.metric.to_string())
        .collect();
    let (status, detail) = if !indistinct.is_empty() {
        (
            CheckStatus::Fail,
            format!(
                "{} within {} of the null baseline: these scores are indistinguishable from a representation that ignores the factors",
                indistinct.join(", "),
                settings.null_margin
            ),
        )
    } else if !uninformative.is_empty() {
        (
            CheckStatus::Warn,
            format!(
                "{} already score at least {:.2} on the null encoder, so they carry no evidence here; the remaining metrics exceed their null means by more than {}",
                uninformative.join(", "),
                1.0 - settings.null_margin,
                settings.null_margin
            ),
        )
    } else {
        (
            CheckStatus::Pass,
            format!(
                "every score exceeds its null mean ({} seeds) by more than {}",
                settings.null_seeds.len(),
                settings.null_margin
            ),
        )
    };
    checklist.push(ChecklistItem {
        id: "null_baseline".into(),
        title: "null-encoder baseline with the same (m, n, d)".into(),
        status,
        detail,
    });

    checklist.push(ChecklistItem {
        id: "dgp".into(),
        title: "factor structure and dimension regime".into(),
        status: CheckStatus::Info,
        detail: format!(
            "{regime} representation (m = {m}, d = {d}); largest |factor correlation| = {} ({})",
            max_corr.map_or("n/a".into(), |r| format!("{r:.3}")),
            if correlated { "factors look correlated" } else { "factors look independent" }
        ),
    });

    let (status, detail) = if correlated {
        (
            CheckStatus::Warn,
            "correlated factors: prefer R². MCC rises with factor correlation even for entangled encoders, and DCI-D collapses under moderate entanglement".to_string(),
        )
    } else if m > d {
        (
            CheckStatus::Warn,
            "overcomplete representation: no single metric is reliable across encoder geometries; use several metrics and compare against matched-dimension controls".to_string(),
        )
    } else if m < d {
        (
            CheckStatus::Warn,
            "undercomplete representation: no metric separates lossless compression of dependent factors from dropped factors".to_string(),
        )
    } else {
        (
            CheckStatus::Pass,
            "matched dimension with independent-looking factors: MCC, DCI-D and R² are all usable".to_string(),
        )
    };
    checklist.push(ChecklistItem {
        id: "metric_choice".into(),
        title: "metric choice".into(),
        status,
        detail,
    });

    let mut cautions = Vec::new();
    if m_over_n > settings.ratio_warning || correlated {
        cautions.push("a high MCC does not imply identifiability here");
    }
    if m > d {
        cautions.push("a high DCI-D does not imply disentanglement for overcomplete, linearly entangled codes");
    }
    cautions.push("pairwise metrics cannot detect redundancy among three or more factors");
    checklist.push(ChecklistItem {
        id: "interpretation".into(),
        title: "interpreting scores".into(),
        status: CheckStatus::Info,
        detail: cautions.join("; "),
    });

    Ok(DiagnoseReport {
        n,
        d,
        m,
        m_over_n,
        regime: regime.into(),
        max_factor_correlation: max_corr,
        metrics,
        checklist,
    })
}

/// Read `z` and `zhat` CSVs and diagnose them.
pub fn diagnose_files(z_path: &Path, zhat_path: &Path, settings: &DiagnoseSettings) -> Result<DiagnoseReport> {
    let z = crate::io::read_factors(z_path)?;
    let zhat = crate::io::read_codes(zhat_path)?;
    diagnose(z, zhat, settings)
}
