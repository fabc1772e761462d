//! CSV dialect: comma separated, LF line endings, `#`-prefixed metadata
//! block, one header row, floats in 17-significant-digit exponent form.

use std::fs;
use std::path::Path;

use qga::analysis::{quantile_bins, EnsembleStats, FitResult};
use qga::ga::{RunRecord, Termination};

use crate::error::{CliError, Result};

pub const VERSION: &str = concat!("qga ", env!("CARGO_PKG_VERSION"));

pub const RUN_HEADER: [&str; 11] = [
    "kind",
    "run_id",
    "seed",
    "generation",
    "mean_fitness",
    "fluctuation",
    "best_fitness",
    "q_c",
    "epsilon_opt",
    "termination_reason",
    "best_genome",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct CsvDoc {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new(meta: Vec<(String, String)>, header: &[&str]) -> Self {
        Self {
            meta,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# version = {VERSION}\n");
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out.into_bytes());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.render())
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Per-generation rows followed by one summary row.
pub fn run_rows(run_id: usize, rec: &RunRecord) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = rec
        .generations
        .iter()
        .enumerate()
        .map(|(g, s)| {
            vec![
                "generation".into(),
                run_id.to_string(),
                rec.seed.to_string(),
                (g + 1).to_string(),
                fmt_f64(s.mean_fitness),
                fmt_f64(s.fluctuation),
                fmt_f64(s.best_fitness),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]
        })
        .collect();
    rows.push(vec![
        "summary".into(),
        run_id.to_string(),
        rec.seed.to_string(),
        String::new(),
        String::new(),
        String::new(),
        fmt_f64(rec.best_fitness),
        rec.generations_run().to_string(),
        fmt_f64(rec.epsilon_opt()),
        rec.termination.as_str().into(),
        rec.best_genome.to_string(),
    ]);
    rows
}

pub fn stats_doc(meta: Vec<(String, String)>, stats: &EnsembleStats) -> CsvDoc {
    let mut doc = CsvDoc::new(meta, &["generation", "mean", "std", "n"]);
    for (g, s) in stats.mean_fitness.iter().enumerate() {
        doc.push(vec![
            (g + 1).to_string(),
            fmt_f64(s.mean),
            fmt_f64(s.std),
            s.n.to_string(),
        ]);
    }
    doc
}

pub const FIT_HEADER: [&str; 11] = [
    "label",
    "a",
    "b",
    "c",
    "se_a",
    "se_b",
    "se_c",
    "rss",
    "iterations",
    "converged",
    "points",
];

pub fn fit_row(label: &str, fit: &FitResult, points: usize) -> Vec<String> {
    vec![
        label.to_string(),
        fmt_f64(fit.a),
        fmt_f64(fit.b),
        fmt_f64(fit.c),
        fmt_f64(fit.std_errors[0]),
        fmt_f64(fit.std_errors[1]),
        fmt_f64(fit.std_errors[2]),
        fmt_f64(fit.rss),
        fit.iterations.to_string(),
        fit.converged.to_string(),
        points.to_string(),
    ]
}

/// Header and data rows of a CSV written in this dialect.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |e: csv::Error| CliError::Parse(e.to_string());
    let header: Vec<String> = reader
        .headers()
        .map_err(parse_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(CliError::Parse("missing header row".into()));
    }
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(parse_err)?;
    Ok((header, rows))
}

/// Where fit points came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSource {
    /// Already-aggregated `(epsilon, q_c)` pairs.
    Points,
    /// Per-run rows, binned into equal-count quantile bins.
    Runs { runs: usize },
}

/// `(epsilon, Q_c)` points from either a two-column points file or a per-run
/// file (`runs.csv` / `qc_eps.csv`); per-run inputs keep converged runs only
/// and are binned into `bins` quantile bins.
pub fn fit_points(
    header: &[String],
    rows: &[Vec<String>],
    bins: usize,
) -> Result<(Vec<(f64, f64)>, PointSource)> {
    let col = |names: &[&str]| header.iter().position(|h| names.contains(&h.as_str()));
    let eps_col = col(&["epsilon", "epsilon_opt"])
        .ok_or_else(|| CliError::Parse("no `epsilon` or `epsilon_opt` column".into()))?;
    let q_col = col(&["q_c", "q"]).ok_or_else(|| CliError::Parse("no `q_c` column".into()))?;
    let kind_col = col(&["kind"]);
    let reason_col = col(&["termination_reason"]);
    let per_run = col(&["run_id"]).is_some();

    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| CliError::Parse(format!("not a number: `{s}`")))
    };
    let mut points = Vec::new();
    for row in rows {
        if let Some(k) = kind_col {
            if row[k] != "summary" {
                continue;
            }
        }
        if let Some(r) = reason_col {
            let reason: Termination = row[r].parse()?;
            if reason != Termination::Converged {
                continue;
            }
        }
        points.push((num(&row[eps_col])?, num(&row[q_col])?));
    }
    if per_run {
        let runs = points.len();
        Ok((quantile_bins(&points, bins), PointSource::Runs { runs }))
    } else {
        Ok((points, PointSource::Points))
    }
}
