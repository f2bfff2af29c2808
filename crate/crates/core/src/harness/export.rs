use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ResultRow, ResultTable};
use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::numstats::{mean, sample_sd};
use crate::oracles::null_mcc_floor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExportOptions {
    pub csv: bool,
    pub json: bool,
    /// Add the `wall_ms` column to the long CSV (breaks byte-identical reruns).
    pub timing: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            csv: true,
            json: true,
            timing: false,
        }
    }
}

const COORDS: [&str; 13] = [
    "experiment", "cell", "dgp", "encoder", "d", "n", "m", "rho", "kappa", "alpha", "k", "m_over_d", "m_over_n",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn coords(r: &ResultRow) -> Vec<String> {
    vec![
        r.experiment.clone(),
        r.cell.to_string(),
        r.dgp.clone(),
        r.encoder.clone(),
        r.d.to_string(),
        r.n.to_string(),
        r.m.to_string(),
        opt(r.rho),
        opt(r.kappa),
        opt(r.alpha),
        opt(r.k),
        opt(r.m_over_d),
        opt(r.m_over_n),
    ]
}

/// One row per (cell, metric, seed).
pub fn write_long_csv<W: Write>(rows: &[ResultRow], out: W, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = COORDS.to_vec();
    header.extend(["metric", "seed", "score", "defined", "note"]);
    if timing {
        header.push("wall_ms");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = coords(r);
        rec.extend([
            r.metric.name().to_string(),
            r.seed.to_string(),
            opt(r.score),
            r.defined.to_string(),
            r.note.clone().unwrap_or_default(),
        ]);
        if timing {
            rec.push(format!("{:.3}", r.wall_ms));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Seed summary of one (cell, metric), with a reference value where one exists.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub first: ResultRow,
    pub seeds: usize,
    pub defined: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub ci95: Option<f64>,
    pub oracle: Option<&'static str>,
    pub oracle_value: Option<f64>,
}

/// Reference curve for a cell, if one applies: the null floor for MCC on null
/// encoders, the retained fraction for R² when dropping independent factors.
fn oracle_for(r: &ResultRow) -> (Option<&'static str>, Option<f64>) {
    let is_null = r.encoder == "e9" || r.encoder == "e10";
    match r.metric {
        MetricId::MccP | MetricId::MccS | MetricId::MccRdc if is_null => (Some("null_floor"), null_mcc_floor(r.m, r.n).ok()),
        MetricId::R2 if r.encoder == "e4" && r.dgp.starts_with("d1") => {
            (Some("retained_fraction"), Some(r.m as f64 / r.d as f64))
        }
        _ => (None, None),
    }
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut groups: Vec<((usize, MetricId), Vec<&ResultRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(k, _)| *k == (r.cell, r.metric)) {
            Some((_, g)) => g.push(r),
            None => groups.push(((r.cell, r.metric), vec![r])),
        }
    }
    for (_, g) in groups {
        let vals: Vec<f64> = g.iter().filter_map(|r| r.score).collect();
        let (m, sd, ci) = if vals.is_empty() {
            (None, None, None)
        } else {
            let sd = sample_sd(&vals);
            (Some(mean(&vals)), Some(sd), Some(1.96 * sd / (vals.len() as f64).sqrt()))
        };
        let (oracle, oracle_value) = oracle_for(g[0]);
        out.push(SummaryRow {
            first: g[0].clone(),
            seeds: g.len(),
            defined: vals.len(),
            mean: m,
            sd,
            ci95: ci,
            oracle,
            oracle_value,
        });
    }
    out
}

pub fn write_summary_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = COORDS.to_vec();
    header.extend(["metric", "seeds", "defined", "mean", "sd", "ci95", "oracle", "oracle_value"]);
    w.write_record(&header)?;
    for s in summarize(rows) {
        let mut rec = coords(&s.first);
        rec.extend([
            s.first.metric.name().to_string(),
            s.seeds.to_string(),
            s.defined.to_string(),
            opt(s.mean),
            opt(s.sd),
            opt(s.ci95),
            s.oracle.unwrap_or_default().to_string(),
            opt(s.oracle_value),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per cell, one mean column per metric (the figure layout).
pub fn write_pivot_csv<W: Write>(rows: &[ResultRow], metrics: &[MetricId], out: W) -> Result<()> {
    let summary = summarize(rows);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = COORDS.iter().map(|s| s.to_string()).collect();
    for m in metrics {
        header.push(format!("{}_mean", m.name()));
        header.push(format!("{}_ci95", m.name()));
    }
    w.write_record(&header)?;
    let mut cells: Vec<usize> = summary.iter().map(|s| s.first.cell).collect();
    cells.dedup();
    for c in cells {
        let of_cell: Vec<&SummaryRow> = summary.iter().filter(|s| s.first.cell == c).collect();
        let mut rec = coords(&of_cell[0].first);
        for m in metrics {
            let s = of_cell.iter().find(|s| s.first.metric == *m);
            rec.push(opt(s.and_then(|s| s.mean)));
            rec.push(opt(s.and_then(|s| s.ci95)));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `{name}_results.csv`, `{name}_summary.csv`, `{name}_pivot.csv` and
/// `{name}_results.json` into `dir`; returns the paths written.
pub fn export(table: &ResultTable, dir: &Path, opts: ExportOptions) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::param("table", "nothing to export: the result table is empty"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let name = &table.config.name;
    let create = |file: String| -> Result<(PathBuf, File)> {
        let p = dir.join(file);
        let f = File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        Ok((p, f))
    };
    let mut written = Vec::new();
    if opts.csv {
        let (p, f) = create(format!("{name}_results.csv"))?;
        write_long_csv(&table.rows, f, opts.timing)?;
        written.push(p);
        let (p, f) = create(format!("{name}_summary.csv"))?;
        write_summary_csv(&table.rows, f)?;
        written.push(p);
        let (p, f) = create(format!("{name}_pivot.csv"))?;
        write_pivot_csv(&table.rows, &table.config.metrics, f)?;
        written.push(p);
    }
    if opts.json {
        let (p, mut f) = create(format!("{name}_results.json"))?;
        serde_json::to_writer_pretty(&mut f, table)?;
        f.write_all(b"\n")?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run, EncoderChoice, ExperimentConfig, Grid};
    use crate::properties::NullKind;

    fn null_cfg() -> ExperimentConfig {
        ExperimentConfig {
            name: "null".into(),
            encoders: vec![EncoderChoice::Null {
                distribution: NullKind::Gaussian,
            }],
            metrics: vec![MetricId::MccP, MetricId::MccS],
            grid: Grid {
                d: vec![3],
                m: vec![3],
                m_over_n: vec![0.05],
                ..Default::default()
            },
            seeds: vec![0, 1, 2],
            ..Default::default()
        }
    }

    #[test]
    fn summary_has_floor_overlay() {
        let table = run(&null_cfg()).unwrap();
        let s = summarize(&table.rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].oracle, Some("null_floor"));
        let floor = null_mcc_floor(3, 60).unwrap();
        assert_eq!(s[0].oracle_value, Some(floor));
        assert_eq!(s[0].defined, 3);
    }

    #[test]
    fn export_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = null_cfg();
        let a = export(&run(&cfg).unwrap(), &dir.path().join("a"), ExportOptions::default()).unwrap();
        let b = export(&run(&cfg).unwrap(), &dir.path().join("b"), ExportOptions::default()).unwrap();
        assert_eq!(a.len(), 4);
        for (pa, pb) in a.iter().zip(&b).filter(|(p, _)| p.extension().unwrap() == "csv") {
            assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
        }
        let long = std::fs::read_to_string(&a[0]).unwrap();
        assert!(!long.lines().next().unwrap().contains("wall_ms"));
    }

    #[test]
    fn empty_table_is_an_error() {
        let mut table = run(&null_cfg()).unwrap();
        table.rows.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(export(&table, dir.path(), ExportOptions::default()).is_err());
    }
}
