use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use idstress::error::Error;
use idstress::harness::{self, diagnose_files, export, DiagnoseSettings, ExperimentConfig, ExportOptions};
use idstress::metrics::MetricId;
use idstress::oracles::{mixing_curve, null_floor_curve, write_curve_csv};
use idstress::properties::{run_suite, NullKind, SuiteConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "idstress", version, about = "Stress tests for identifiability metrics on synthetic benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (JSON) and export its result tables.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add a wall_ms column to the long CSV.
        #[arg(long)]
        timing: bool,
    },
    /// Run one of the shipped presets.
    Preset {
        /// Preset name; `list` prints the available ones.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
        /// Comma-separated seeds replacing the preset's.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Print the preset config as JSON instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Checklist report for a factors/codes CSV pair.
    Diagnose {
        #[arg(long)]
        z: PathBuf,
        #[arg(long)]
        zhat: PathBuf,
        /// Emit JSON instead of markdown.
        #[arg(long)]
        json: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of null-encoder seeds in the baseline.
        #[arg(long, default_value_t = 5)]
        null_seeds: u64,
        #[arg(long, value_enum, default_value_t = NullArg::Gaussian)]
        null: NullArg,
        /// Comma-separated metric names (default: the four main metrics).
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
    },
    /// Run the property suite from a JSON config (`{}` gives the defaults).
    Properties {
        config: PathBuf,
        /// Directory for the JSON report and verdict matrix CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 if any verdict is `violated`.
        #[arg(long)]
        strict: bool,
    },
    /// Closed-form reference curves as CSV.
    Oracle {
        #[arg(value_enum)]
        name: OracleName,
        /// `key=values`, values either `a,b,c` or `start:stop:step`.
        /// mixing-curve takes rho and epsilon; null-floor takes m and n.
        #[arg(long = "grid")]
        grid: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NullArg {
    Uniform,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleName {
    MixingCurve,
    NullFloor,
}

/// Error plus the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn read_config_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", p.display())))),
        None => {
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::from(Error::from(e)))?;
            Ok(())
        }
    }
}

fn run_experiment(cfg: &ExperimentConfig, out: Option<PathBuf>, timing: bool) -> Result<(), Failure> {
    let dir = out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let table = harness::run(cfg)?;
    let skipped = table.cells.iter().filter(|c| c.skip_reason().is_some()).count();
    let written = export(
        &table,
        &dir,
        ExportOptions {
            timing,
            ..Default::default()
        },
    )?;
    eprintln!(
        "{}: {} cells ({} skipped), {} rows",
        cfg.name,
        table.cells.len(),
        skipped,
        table.rows.len()
    );
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn parse_values(key: &str, spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |what: &str| config_error(format!("grid `{key}`: {what} in `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("`{s}` is not a number")));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad("need step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            // Round to kill accumulated drift such as 0.30000000000000004.
            Ok((0..=count)
                .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => spec.split(',').map(num).collect(),
        _ => Err(bad("expected `a,b,c` or `start:stop:step`")),
    }
}

fn parse_grid(entries: &[String], keys: &[&str]) -> Result<Vec<Vec<f64>>, Failure> {
    let mut found: Vec<Option<Vec<f64>>> = vec![None; keys.len()];
    for e in entries {
        let (k, v) = e
            .split_once('=')
            .ok_or_else(|| config_error(format!("grid entry `{e}` is not key=values")))?;
        let slot = keys
            .iter()
            .position(|key| *key == k.trim())
            .ok_or_else(|| config_error(format!("unknown grid key `{k}`; expected {}", keys.join(", "))))?;
        found[slot] = Some(parse_values(k, v)?);
    }
    keys.iter()
        .zip(found)
        .map(|(k, v)| v.ok_or_else(|| config_error(format!("missing --grid {k}=..."))))
        .collect()
}

fn as_counts(key: &str, values: &[f64]) -> Result<Vec<usize>, Failure> {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(config_error(format!("grid `{key}` needs positive integers, got {v}")))
            }
        })
        .collect()
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Run { config, out, timing } => {
            let cfg = ExperimentConfig::from_json(&read_config_text(&config)?)?;
            run_experiment(&cfg, out, timing)?;
        }
        Command::Preset {
            name,
            out,
            timing,
            seeds,
            print_config,
        } => {
            if name == "list" {
                for p in harness::PRESET_NAMES {
                    println!("{p}");
                }
                return Ok(0);
            }
            let mut cfg = harness::preset(&name).map_err(|e| config_error(e.to_string()))?;
            if let Some(seeds) = seeds {
                cfg.seeds = seeds;
                cfg.validate()?;
            }
            if print_config {
                let text = serde_json::to_string_pretty(&cfg).map_err(|e| Failure::from(Error::from(e)))?;
                println!("{text}");
                return Ok(0);
            }
            run_experiment(&cfg, out, timing)?;
        }
        Command::Diagnose {
            z,
            zhat,
            json,
            out,
            seed,
            null_seeds,
            null,
            metrics,
        } => {
            let metrics = match metrics {
                None => MetricId::MAIN.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|n| {
                        serde_json::from_value::<MetricId>(serde_json::Value::String(n.clone()))
                            .map_err(|_| config_error(format!("unknown metric `{n}`")))
                    })
                    .collect::<Result<_, _>>()?,
            };
            let settings = DiagnoseSettings {
                metrics,
                seed,
                null_seeds: (0..null_seeds).collect(),
                null_kind: match null {
                    NullArg::Uniform => NullKind::Uniform,
                    NullArg::Gaussian => NullKind::Gaussian,
                },
                ..Default::default()
            };
            let report = diagnose_files(&z, &zhat, &settings)?;
            let text = if json {
                let mut s = serde_json::to_string_pretty(&report).map_err(|e| Failure::from(Error::from(e)))?;
                s.push('\n');
                s
            } else {
                report.to_markdown()
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Properties { config, out, strict } => {
            let cfg = SuiteConfig::from_json(&read_config_text(&config)?)?;
            let report = run_suite(&cfg)?;
            let mut matrix = Vec::new();
            report.write_verdict_matrix(&mut matrix)?;
            std::io::stdout()
                .write_all(&matrix)
                .map_err(|e| Failure::from(Error::from(e)))?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| Failure::from(Error::Io(format!("{}: {e}", dir.display()))))?;
                fs::write(dir.join("verdicts.csv"), &matrix).map_err(|e| Failure::from(Error::from(e)))?;
                let mut json = serde_json::to_string_pretty(&report).map_err(|e| Failure::from(Error::from(e)))?;
                json.push('\n');
                fs::write(dir.join("properties.json"), json).map_err(|e| Failure::from(Error::from(e)))?;
            }
            if strict && report.any_violation() {
                return Ok(EXIT_VIOLATION);
            }
        }
        Command::Oracle { name, grid, out } => {
            let mut buf = Vec::new();
            match name {
                OracleName::MixingCurve => {
                    let g = parse_grid(&grid, &["rho", "epsilon"])?;
                    write_curve_csv(&mixing_curve(&g[0], &g[1]), &mut buf)?;
                }
                OracleName::NullFloor => {
                    let g = parse_grid(&grid, &["m", "n"])?;
                    write_curve_csv(&null_floor_curve(&as_counts("m", &g[0])?, &as_counts("n", &g[1])?), &mut buf)?;
                }
            }
            emit(out.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
