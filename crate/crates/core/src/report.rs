//! CSV output of ensembles, comparisons and convergence studies.
//!
//! Floats are written in Rust's shortest round-trip form, so equal inputs
//! give byte-identical files and a stored histogram reloads onto exactly the
//! same grid.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::harness::{
    BinGrid, Comparison, ConvergenceStudy, Ensemble, EnsembleHistogram, HarnessError, Method,
};
use crate::rng::RngCounters;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARE_BINS_FILE: &str = "compare_bins.csv";
pub const COMPARE_SUMMARY_FILE: &str = "compare_summary.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";

/// Leading columns shared by every summary file.
pub const SUMMARY_COLUMNS: [&str; 9] = [
    "epsilon",
    "l1",
    "l2",
    "rho",
    "n_exited",
    "n_censored",
    "gamma_draws",
    "exp_draws",
    "wall_seconds",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Table {
    path: String,
    writer: csv::Writer<File>,
}

impl Table {
    fn create(path: &Path, header: &[&str]) -> Result<Self, ReportError> {
        let display = path.display().to_string();
        let writer = csv::Writer::from_path(path).map_err(|source| ReportError::Csv {
            path: display.clone(),
            source,
        })?;
        let mut table = Table {
            path: display,
            writer,
        };
        table.row(header.iter().map(|s| s.to_string()))?;
        Ok(table)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<(), ReportError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer
            .write_record(&fields)
            .map_err(|source| ReportError::Csv {
                path: self.path.clone(),
                source,
            })
    }

    fn finish(mut self) -> Result<(), ReportError> {
        self.writer.flush().map_err(|source| ReportError::Io {
            path: self.path,
            source,
        })
    }
}

fn method_name(method: &Method) -> &'static str {
    match method {
        Method::Ssa => "ssa",
        Method::ExitTime { .. } => "exit",
    }
}

/// `t_lo, t_hi, t_mid, density`, one row per bin.
pub fn write_histogram(path: &Path, histogram: &EnsembleHistogram) -> Result<(), ReportError> {
    let mut table = Table::create(path, &["t_lo", "t_hi", "t_mid", "density"])?;
    let edges = histogram.grid.edges();
    let mids = histogram.grid.midpoints();
    for (b, density) in histogram.densities.iter().enumerate() {
        table.row([
            num(edges[b]),
            num(edges[b + 1]),
            num(mids[b]),
            num(*density),
        ])?;
    }
    table.finish()
}

/// One summary row for a single ensemble; comparison columns stay empty.
pub fn write_ensemble_summary(path: &Path, ensemble: &Ensemble) -> Result<(), ReportError> {
    let mut header = SUMMARY_COLUMNS.to_vec();
    header.extend(["method", "seed", "uniform_draws"]);
    let mut table = Table::create(path, &header)?;
    table.row([
        opt(ensemble.method.epsilon()),
        String::new(),
        String::new(),
        String::new(),
        ensemble.n_exited().to_string(),
        ensemble.n_censored.to_string(),
        ensemble.counters.gamma.to_string(),
        ensemble.counters.exponential.to_string(),
        num(ensemble.wall_seconds),
        method_name(&ensemble.method).to_string(),
        ensemble.seed.to_string(),
        ensemble.counters.uniform.to_string(),
    ])?;
    table.finish()
}

/// Writes `histogram.csv` and `summary.csv` into `dir`.
pub fn write_simulation(
    dir: &Path,
    ensemble: &Ensemble,
    histogram: &EnsembleHistogram,
) -> Result<(), ReportError> {
    write_histogram(&dir.join(HISTOGRAM_FILE), histogram)?;
    write_ensemble_summary(&dir.join(SUMMARY_FILE), ensemble)
}

/// Writes `compare_bins.csv` (`t_mid, density_ssa, density_method,
/// abs_error`) and `compare_summary.csv` into `dir`.
pub fn write_comparison(dir: &Path, cmp: &Comparison) -> Result<(), ReportError> {
    let mut bins = Table::create(
        &dir.join(COMPARE_BINS_FILE),
        &["t_mid", "density_ssa", "density_method", "abs_error"],
    )?;
    let mids = cmp.reference_histogram.grid.midpoints();
    for (b, t) in mids.iter().enumerate() {
        bins.row([
            num(*t),
            num(cmp.reference_histogram.densities[b]),
            num(cmp.method_histogram.densities[b]),
            num(cmp.errors.per_bin[b]),
        ])?;
    }
    bins.finish()?;

    let mut header = SUMMARY_COLUMNS.to_vec();
    header.extend([
        "ssa_seed",
        "method_seed",
        "ssa_n_exited",
        "ssa_n_censored",
        "ks_statistic",
        "ks_critical",
        "ks_equivalent",
    ]);
    let mut summary = Table::create(&dir.join(COMPARE_SUMMARY_FILE), &header)?;
    let m = &cmp.method;
    summary.row([
        num(cmp.epsilon),
        num(cmp.errors.l1),
        num(cmp.errors.l2),
        num(cmp.rho),
        m.n_exited().to_string(),
        m.n_censored.to_string(),
        m.counters.gamma.to_string(),
        cmp.reference_histogram.counters.exponential.to_string(),
        num(m.wall_seconds + cmp.reference.as_ref().map_or(0.0, |r| r.wall_seconds)),
        cmp.ssa_seed.to_string(),
        m.seed.to_string(),
        cmp.reference_histogram.n_exited.to_string(),
        cmp.reference_histogram.n_censored.to_string(),
        opt(cmp.ks.map(|k| k.statistic)),
        opt(cmp.ks.map(|k| k.critical_value)),
        cmp.ks.map(|k| k.accepts().to_string()).unwrap_or_default(),
    ])?;
    summary.finish()
}

/// One row per epsilon, plus the observed order against the previous row.
pub fn write_convergence(path: &Path, study: &ConvergenceStudy) -> Result<(), ReportError> {
    let mut header = SUMMARY_COLUMNS.to_vec();
    header.push("order");
    let mut table = Table::create(path, &header)?;
    for r in &study.records {
        table.row([
            num(r.epsilon),
            num(r.l1),
            num(r.l2),
            num(r.rho),
            r.n_exited.to_string(),
            r.n_censored.to_string(),
            r.gamma_draws.to_string(),
            r.exp_draws.to_string(),
            num(r.wall_seconds),
            opt(r.order),
        ])?;
    }
    table.finish()
}

fn read_rows(path: &Path) -> Result<(csv::StringRecord, Vec<csv::StringRecord>), ReportError> {
    let display = path.display().to_string();
    let csv_err = |source| ReportError::Csv {
        path: display.clone(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let rows = reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    Ok((header, rows))
}

fn field<T: std::str::FromStr>(
    path: &Path,
    header: &csv::StringRecord,
    row: &csv::StringRecord,
    name: &str,
) -> Result<T, ReportError> {
    let malformed = |reason: String| ReportError::Malformed {
        path: path.display().to_string(),
        reason,
    };
    let col = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| malformed(format!("missing column `{name}`")))?;
    let raw = row.get(col).unwrap_or_default();
    raw.parse()
        .map_err(|_| malformed(format!("column `{name}`: cannot parse {raw:?}")))
}

/// Reloads an SSA histogram written by [`write_simulation`] from `dir`.
pub fn read_reference(dir: &Path) -> Result<EnsembleHistogram, ReportError> {
    let hist_path = dir.join(HISTOGRAM_FILE);
    let (header, rows) = read_rows(&hist_path)?;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(ReportError::Malformed {
                path: hist_path.display().to_string(),
                reason: "no bins".into(),
            })
        }
    };
    let t_min: f64 = field(&hist_path, &header, first, "t_lo")?;
    let t_max: f64 = field(&hist_path, &header, last, "t_hi")?;
    let grid = BinGrid::new(t_min, t_max, rows.len())?;
    let densities = rows
        .iter()
        .map(|r| field::<f64>(&hist_path, &header, r, "density"))
        .collect::<Result<Vec<_>, _>>()?;

    let summary_path = dir.join(SUMMARY_FILE);
    let (header, rows) = read_rows(&summary_path)?;
    let row = rows.first().ok_or_else(|| ReportError::Malformed {
        path: summary_path.display().to_string(),
        reason: "no summary row".into(),
    })?;
    let method: String = field(&summary_path, &header, row, "method")?;
    if method != "ssa" {
        return Err(ReportError::Malformed {
            path: summary_path.display().to_string(),
            reason: format!("reference must be an SSA run, found method {method:?}"),
        });
    }
    Ok(EnsembleHistogram {
        grid,
        densities,
        n_exited: field(&summary_path, &header, row, "n_exited")?,
        n_censored: field(&summary_path, &header, row, "n_censored")?,
        n_outside: 0,
        counters: RngCounters {
            uniform: field(&summary_path, &header, row, "uniform_draws")?,
            exponential: field(&summary_path, &header, row, "exp_draws")?,
            gamma: field(&summary_path, &header, row, "gamma_draws")?,
        },
    })
}

/// Prints a one-line human summary of a comparison.
pub fn describe_comparison(out: &mut impl Write, cmp: &Comparison) -> io::Result<()> {
    writeln!(
        out,
        "epsilon={} l1={:.6} l2={:.6} rho={:.5} exited={} censored={}",
        cmp.epsilon,
        cmp.errors.l1,
        cmp.errors.l2,
        cmp.rho,
        cmp.method.n_exited(),
        cmp.method.n_censored
    )
}
