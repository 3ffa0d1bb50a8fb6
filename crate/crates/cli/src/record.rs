use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// One experiment result. Fields that do not apply to a subcommand stay null.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunRecord {
    /// Unix time in seconds.
    pub timestamp: u64,
    pub subcommand: String,
    /// Command line that produced this record.
    pub args: String,
    pub seed: Option<u64>,
    pub algorithm: Option<String>,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    pub topology: Option<String>,
    #[serde(rename = "D")]
    pub rows: Option<usize>,
    pub hamming: Option<usize>,
    pub f_edges: Option<f64>,
    pub f_nonedges: Option<f64>,
    pub f_triplets: Option<f64>,
    pub accuracy: Option<f64>,
    pub runtime_ms: f64,
    pub tests_computed: Option<u64>,
    pub cache_hits: Option<u64>,
    pub ascents: Option<usize>,
    pub score: Option<f64>,
    pub status: Option<String>,
    pub fitness: Option<String>,
    pub success: Option<bool>,
    pub generations: Option<usize>,
    pub f_star: Option<u64>,
    pub d_star: Option<usize>,
    pub f_star_mean: Option<f64>,
    pub f_star_std: Option<f64>,
    pub argmax_index: Option<u64>,
    pub argmax_score: Option<f64>,
    pub hc_rank: Option<usize>,
    pub spearman: Option<f64>,
}

impl RunRecord {
    pub fn new(subcommand: &str) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self {
            timestamp,
            subcommand: subcommand.into(),
            args: std::iter::once("ibmap".to_string())
                .chain(std::env::args().skip(1))
                .collect::<Vec<_>>()
                .join(" "),
            ..Self::default()
        }
    }
}

/// Appends records as JSON lines (stdout by default) and optionally as CSV rows.
pub struct Sink {
    lines: Box<dyn Write>,
    csv: Option<csv::Writer<File>>,
}

impl Sink {
    pub fn open(records: Option<PathBuf>, csv_path: Option<PathBuf>) -> Result<Self> {
        let lines: Box<dyn Write> = match records {
            Some(p) => Box::new(append(&p)?),
            None => Box::new(io::stdout()),
        };
        let csv = match csv_path {
            Some(p) => {
                let file = append(&p)?;
                let fresh = file.metadata().map(|m| m.len() == 0).unwrap_or(true);
                Some(csv::WriterBuilder::new().has_headers(fresh).from_writer(file))
            }
            None => None,
        };
        Ok(Self { lines, csv })
    }

    pub fn emit(&mut self, r: &RunRecord) -> Result<()> {
        serde_json::to_writer(&mut self.lines, r)?;
        self.lines.write_all(b"\n")?;
        self.lines.flush()?;
        if let Some(w) = &mut self.csv {
            w.serialize(r)?;
            w.flush()?;
        }
        Ok(())
    }
}

fn append(p: &PathBuf) -> Result<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(p)
        .with_context(|| format!("opening {}", p.display()))
}
