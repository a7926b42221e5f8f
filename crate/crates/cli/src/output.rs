//! Tables, JSON summaries and gnuplot companions.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "wpvol-out v1";

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Columns (1-based) for a gnuplot companion and whether each axis is
    /// logarithmic.
    pub plot: Option<Plot>,
}

#[derive(Clone, Copy)]
pub struct Plot {
    pub x: usize,
    pub y: usize,
    pub logx: bool,
    pub logy: bool,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn with_plot(mut self, x: usize, y: usize, logx: bool, logy: bool) -> Self {
        self.plot = Some(Plot { x, y, logx, logy });
        self
    }

    /// A `#` comment line with the schema and config, then an RFC 4180 body.
    pub fn to_csv(&self, config: &str) -> io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "# {SCHEMA} {}", config.replace('\n', " "))?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(buf)
    }

    pub fn gnuplot(&self, data: &Path) -> Option<String> {
        let p = self.plot?;
        let name = data.file_name()?.to_string_lossy().to_string();
        let mut s = String::new();
        s.push_str("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
        if p.logx {
            s.push_str("set logscale x\n");
        }
        if p.logy {
            s.push_str("set logscale y\n");
        }
        s.push_str(&format!(
            "set xlabel '{}'\nset ylabel '{}'\nplot '{}' using {}:{} with linespoints\n",
            self.columns[p.x - 1],
            self.columns[p.y - 1],
            name,
            p.x,
            p.y
        ));
        Some(s)
    }
}

/// Floats in a fixed, locale-free format so outputs are byte-stable.
pub fn f(x: f64) -> String {
    if x == 0.0 || (1e-4..1e6).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct Sink {
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub json: bool,
    pub gnuplot: bool,
    pub config: String,
}

fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension()
            .map(|e| e.to_string_lossy().to_string())
            .unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

impl Sink {
    /// Main artifact: the table as CSV, or `full` as JSON with `--format json`.
    pub fn emit(&self, table: &Table, full: &serde_json::Value) -> io::Result<()> {
        let bytes = if self.json {
            let mut v = serde_json::to_vec_pretty(&serde_json::json!({
                "schema": SCHEMA,
                "config": self.config,
                "report": full,
            }))?;
            v.push(b'\n');
            v
        } else {
            table.to_csv(&self.config)?
        };
        match &self.output {
            Some(p) => {
                write_file(p, &bytes)?;
                if self.gnuplot && !self.json {
                    if let Some(script) = table.gnuplot(p) {
                        let gp = p.with_extension("gp");
                        write_file(&gp, script.as_bytes())?;
                    }
                }
            }
            None => io::stdout().write_all(&bytes)?,
        }
        Ok(())
    }

    /// Short JSON summary: to `--summary` when given, else to stdout after a
    /// file artifact, else to stderr.
    pub fn summarize(&self, summary: &serde_json::Value) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(summary)?;
        text.push('\n');
        match (&self.summary, &self.output) {
            (Some(p), _) => write_file(p, text.as_bytes()),
            (None, Some(_)) => io::stdout().write_all(text.as_bytes()),
            (None, None) => io::stderr().write_all(text.as_bytes()),
        }
    }

    /// Plain text artifact (profile dumps, stratum lists, cache files).
    pub fn emit_text(&self, text: &str) -> io::Result<()> {
        match &self.output {
            Some(p) => write_file(p, text.as_bytes()),
            None => io::stdout().write_all(text.as_bytes()),
        }
    }
}
