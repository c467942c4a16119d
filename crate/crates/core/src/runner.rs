//! Experiment orchestration and CSV output.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::config::{parse_config, SimConfig};
use crate::error::{Error, Result};
use crate::link::{self, SweepPoint};

pub const CSV_HEADER: [&str; 8] = [
    "experiment",
    "scheme",
    "sweep_name",
    "sweep_value",
    "metric",
    "stderr",
    "trials",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BerVsSnr,
    MseVsW,
    Convergence,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BerVsSnr => "ber-vs-snr",
            Experiment::MseVsW => "mse-vs-w",
            Experiment::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ber-vs-snr" => Ok(Experiment::BerVsSnr),
            "mse-vs-w" => Ok(Experiment::MseVsW),
            "convergence" => Ok(Experiment::Convergence),
            other => Err(Error::UnknownExperiment(other.to_string())),
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub scheme: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub metric: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentRecord {
    pub fn from_point(point: &SweepPoint, seed: u64) -> Self {
        let (metric, stderr) = link::mean_stderr(&point.samples);
        Self {
            experiment: point.experiment.clone(),
            scheme: point.scheme.tag().to_string(),
            sweep_name: point.sweep_name.to_string(),
            sweep_value: point.sweep_value,
            metric,
            stderr,
            trials: point.samples.len() as u64,
            seed,
        }
    }
}

/// 17 significant digits, which round-trips every finite `f64`.
fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(field: &str, column: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Shape(format!("column {column}: malformed number `{field}`")))
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record([
            r.experiment.as_str(),
            r.scheme.as_str(),
            r.sweep_name.as_str(),
            &format_float(r.sweep_value),
            &format_float(r.metric),
            &format_float(r.stderr),
            &r.trials.to_string(),
            &r.seed.to_string(),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Shape(format!("unexpected CSV header {header:?}")));
    }
    reader
        .records()
        .map(|row| {
            let row = row?;
            let trials = row[6]
                .parse()
                .map_err(|_| Error::Shape(format!("column trials: malformed `{}`", &row[6])))?;
            let seed = row[7]
                .parse()
                .map_err(|_| Error::Shape(format!("column seed: malformed `{}`", &row[7])))?;
            Ok(ExperimentRecord {
                experiment: row[0].to_string(),
                scheme: row[1].to_string(),
                sweep_name: row[2].to_string(),
                sweep_value: parse_float(&row[3], "sweep_value")?,
                metric: parse_float(&row[4], "metric")?,
                stderr: parse_float(&row[5], "stderr")?,
                trials,
                seed,
            })
        })
        .collect()
}

/// Records of one experiment plus human-readable summary lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<String>,
}

/// Runs one experiment on an already-parsed configuration.
pub fn run_experiment(config: &SimConfig, experiment: Experiment) -> Result<Report> {
    let mut summary = Vec::new();
    let points = match experiment {
        Experiment::BerVsSnr => link::experiment_ber_vs_snr(config)?,
        Experiment::MseVsW => link::experiment_mse_vs_w(config)?,
        Experiment::Convergence => {
            let runs = link::convergence_runs(config)?;
            for run in &runs {
                let unconverged = run.converged.iter().filter(|c| !**c).count();
                summary.push(format!(
                    "convergence w={} snr_db={} {}: median {} iterations, mean {:.2}, {} of {} hit max_iterations",
                    run.w,
                    run.snr_db,
                    run.scheme,
                    run.median_iterations(),
                    run.mean_iterations(),
                    unconverged,
                    run.iterations.len()
                ));
            }
            runs.iter().flat_map(|r| r.points(config.k)).collect()
        }
    };
    let records: Vec<ExperimentRecord> = points
        .iter()
        .map(|p| ExperimentRecord::from_point(p, config.seed))
        .collect();
    if experiment != Experiment::Convergence {
        for r in &records {
            summary.push(format!(
                "{} {} {}={}: {:.6e} +/- {:.2e} ({} trials)",
                r.experiment, r.scheme, r.sweep_name, r.sweep_value, r.metric, r.stderr, r.trials
            ));
        }
    }
    Ok(Report { records, summary })
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Loads the configuration (defaults when `config_path` is `None`), runs the
/// experiment with `threads` workers and writes the CSV to `out_path`.
pub fn run(
    config_path: Option<&Path>,
    experiment: &str,
    out_path: &Path,
    seed_override: Option<u64>,
    threads: Option<usize>,
    mut log: impl FnMut(&str),
) -> Result<Vec<ExperimentRecord>> {
    let experiment: Experiment = experiment.parse()?;
    let mut config = match config_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            parse_config(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let report = with_threads(threads, || run_experiment(&config, experiment))??;
    for line in &report.summary {
        log(line);
    }
    let records = report.records;

    let mut buffer = Vec::new();
    write_csv(&records, &mut buffer)?;
    fs::write(out_path, buffer).map_err(|e| io_error(out_path, e))?;
    Ok(records)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T>(_threads: Option<usize>, f: impl FnOnce() -> T) -> Result<T> {
    Ok(f())
}
