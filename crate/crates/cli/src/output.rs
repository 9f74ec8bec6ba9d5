//! Output files. Everything is assembled in memory and written at the end,
//! so failed runs leave no partial outputs.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A run that finished but missed its tolerance.
#[derive(Debug)]
pub struct Tolerance(pub String);

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tolerance not met: {}", self.0)
    }
}

impl std::error::Error for Tolerance {}

pub struct Output {
    dir: PathBuf,
    format: Format,
    hash: String,
    config: Value,
    files: Vec<(String, String)>,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

impl Output {
    pub fn new<T: Serialize>(dir: &Path, format: Format, config: &T) -> Self {
        Self {
            dir: dir.to_path_buf(),
            format,
            hash: config::hash(config),
            config: serde_json::to_value(config).expect("configs serialize"),
            files: Vec::new(),
        }
    }

    fn meta(&self) -> Value {
        json!({"tool": "levelcross", "version": VERSION, "config_sha256": self.hash})
    }

    /// Tabular data given as CSV text; written as CSV or JSON per `--format`.
    pub fn table(&mut self, name: &str, csv: &str) {
        match self.format {
            Format::Csv => {
                let text = format!("# levelcross {VERSION} config_sha256={}\n{csv}", self.hash);
                self.files.push((format!("{name}.csv"), text));
            }
            Format::Json => {
                let mut lines = csv.lines();
                let columns: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
                let rows: Vec<Vec<Value>> = lines
                    .map(|l| {
                        l.split(',')
                            .map(|x| x.parse::<f64>().map(Value::from).unwrap_or_else(|_| Value::from(x)))
                            .collect()
                    })
                    .collect();
                let v = json!({"meta": self.meta(), "columns": columns, "rows": rows});
                self.files.push((format!("{name}.data.json"), pretty(&v)));
            }
        }
    }

    /// A JSON document; `meta` and the config echo are added.
    pub fn json(&mut self, name: &str, body: Value) {
        let mut m = Map::new();
        m.insert("meta".into(), self.meta());
        m.insert("config".into(), self.config.clone());
        match body {
            Value::Object(o) => m.extend(o),
            other => {
                m.insert("data".into(), other);
            }
        }
        self.files.push((format!("{name}.json"), pretty(&Value::Object(m))));
    }

    /// Gnuplot script drawing every column of a CSV table against the first.
    pub fn gnuplot(&mut self, table: &str, xlabel: &str, ylabel: &str, n_columns: usize) {
        let mut s = format!(
            "# levelcross {VERSION} config_sha256={}\nset datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset terminal pngcairo size 900,600\nset output '{table}.png'\nplot ",
            self.hash
        );
        let plots: Vec<String> = (2..=n_columns + 1).map(|c| format!("'{table}.csv' using 1:{c} with lines")).collect();
        s.push_str(&plots.join(", \\\n     "));
        s.push('\n');
        self.files.push((format!("{table}.gp"), s));
    }

    pub fn write(self) -> Result<()> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("cannot create {}", self.dir.display()))?;
        for (name, text) in &self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}
