//! CSV emission. Reals use 17 significant digits so tables round-trip
//! exactly; file names depend only on the preset and the run index.

use std::fs;
use std::path::{Path, PathBuf};

use dtrw::oracle::ErrorRecord;

use crate::experiment::{ExperimentResult, RunOutcome};

pub const SUMMARY_HEADER: [&str; 12] = [
    "dx",
    "dt",
    "n_steps",
    "realized_t",
    "l1_error",
    "mass_initial",
    "mass_final",
    "cfl_violated",
    "prob_min",
    "prob_max",
    "fallback_events",
    "status",
];

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("malformed summary {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

pub fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, OutputError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    csv::Writer::from_path(path).map_err(|source| OutputError::Csv {
        path: path.to_owned(),
        source,
    })
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), OutputError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| OutputError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_owned(),
        source,
    })
}

fn summary_row(run: &RunOutcome) -> Vec<String> {
    let (p_min, p_max) = run.report.prob_extrema.unzip();
    vec![
        real(run.dx),
        real(run.dt),
        run.n_steps.to_string(),
        real(run.realized_t),
        opt_real(run.l1_error),
        opt_real(run.report.initial_mass()),
        opt_real(run.report.final_mass()),
        run.cfl_violated.to_string(),
        opt_real(p_min),
        opt_real(p_max),
        run.report.total_fallbacks().to_string(),
        match &run.failure {
            None => "ok".to_string(),
            Some(msg) => format!("aborted: {msg}"),
        },
    ]
}

pub fn summary_path(dir: &Path, preset: &str) -> PathBuf {
    dir.join(format!("{preset}_summary.csv"))
}

pub fn solution_path(dir: &Path, preset: &str, index: usize) -> PathBuf {
    dir.join(format!("{preset}_solution_{index:02}.csv"))
}

pub fn error_trace_path(dir: &Path, preset: &str, index: usize) -> PathBuf {
    dir.join(format!("{preset}_error_trace_{index:02}.csv"))
}

/// Writes the summary, one solution file per run, and the per-step error
/// traces of runs that recorded one. Returns the paths written.
pub fn write_experiment(dir: &Path, result: &ExperimentResult) -> Result<Vec<PathBuf>, OutputError> {
    let preset = result.preset.name();
    let mut written = Vec::new();

    let path = summary_path(dir, preset);
    write_rows(&path, &SUMMARY_HEADER, result.runs.iter().map(summary_row))?;
    written.push(path);

    for (k, run) in result.runs.iter().enumerate() {
        if run.numeric.is_empty() {
            continue;
        }
        let path = solution_path(dir, preset, k);
        let rows = run.coordinates.iter().zip(&run.numeric).enumerate().map(|(i, (&x, &u))| {
            let exact = run.exact.as_ref().map(|e| e[i]);
            vec![
                real(x),
                real(u),
                opt_real(exact),
                opt_real(exact.map(|e| (u - e).abs())),
            ]
        });
        write_rows(&path, &["x", "u_numeric", "u_exact", "abs_error"], rows)?;
        written.push(path);

        if !run.report.error_trace.is_empty() {
            let path = error_trace_path(dir, preset, k);
            let rows = run
                .report
                .error_trace
                .iter()
                .map(|r| vec![real(r.t), real(r.l1_error)]);
            write_rows(&path, &["t", "l1_error"], rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads `(dx, dt, realized_t, l1_error)` from a summary file, skipping
/// rows without an error value.
pub fn read_summary(path: &Path) -> Result<Vec<ErrorRecord>, OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_owned(),
        source,
    };
    let malformed = |message: String| OutputError::Malformed {
        path: path.to_owned(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(format!("missing column '{name}'")))
    };
    let (i_dx, i_dt, i_t, i_err) = (column("dx")?, column("dt")?, column("realized_t")?, column("l1_error")?);
    let mut out = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let get = |i: usize| -> Result<Option<f64>, OutputError> {
            match row.get(i).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|e| malformed(format!("row {}: '{s}': {e}", line + 1))),
            }
        };
        if let (Some(dx), Some(dt), Some(t), Some(l1_error)) = (get(i_dx)?, get(i_dt)?, get(i_t)?, get(i_err)?) {
            out.push(ErrorRecord { dx, dt, t, l1_error });
        }
    }
    Ok(out)
}

pub fn write_density(path: &Path, xs: &[f64], empirical: &[f64], exact: &[f64]) -> Result<(), OutputError> {
    let rows = xs
        .iter()
        .zip(empirical.iter().zip(exact))
        .enumerate()
        .map(|(i, (&x, (&e, &m)))| vec![i.to_string(), real(x), real(e), real(m)]);
    write_rows(path, &["site", "x", "empirical", "master_equation"], rows)
}

/// Rows of `(n_particles, seed, tv)`.
pub fn write_tv_table(path: &Path, rows: &[(usize, u64, f64)]) -> Result<(), OutputError> {
    write_rows(
        path,
        &["n_particles", "seed", "tv_distance"],
        rows.iter()
            .map(|&(n, seed, tv)| vec![n.to_string(), seed.to_string(), real(tv)]),
    )
}
