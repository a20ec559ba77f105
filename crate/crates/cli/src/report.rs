//! Report envelope and emission.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Version tag of the envelope, matching `schemas/report.schema.json`.
pub const SCHEMA: &str = "bipoint-report/1";

/// What every subcommand returns. `ok = false` maps to exit code 1.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub ok: bool,
    pub seed: Option<u64>,
    pub instance_sha256: Option<String>,
    pub summary: Value,
    pub rows: Vec<Value>,
    pub elapsed_s: f64,
}

impl Report {
    pub fn new(command: &str, summary: impl Serialize) -> Self {
        Report {
            command: command.to_string(),
            ok: true,
            seed: None,
            instance_sha256: None,
            summary: serde_json::to_value(summary).expect("summary serialises"),
            rows: Vec::new(),
            elapsed_s: 0.0,
        }
    }

    pub fn ok(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn instance(mut self, sha: String) -> Self {
        self.instance_sha256 = Some(sha);
        self
    }

    pub fn rows<T: Serialize>(mut self, rows: &[T]) -> Self {
        self.rows = rows.iter().map(|r| serde_json::to_value(r).expect("row serialises")).collect();
        self
    }

    /// Everything except the timing field.
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "ok": self.ok,
            "seed": self.seed,
            "instance_sha256": self.instance_sha256,
            "summary": self.summary,
            "rows": self.rows,
        })
    }

    pub fn emit<W: Write>(&self, fmt: Format, mut w: W) -> std::io::Result<()> {
        match fmt {
            Format::Json => {
                let mut v = self.to_json();
                v["timing"] = json!({ "elapsed_s": self.elapsed_s });
                writeln!(w, "{}", serde_json::to_string_pretty(&v)?)
            }
            Format::Csv => {
                if self.rows.is_empty() {
                    let mut flat = Map::new();
                    flatten("", &self.to_json(), &mut flat);
                    writeln!(w, "key,value")?;
                    for (k, v) in flat {
                        writeln!(w, "{},{}", csv_field(&k), csv_field(&scalar(&v)))?;
                    }
                    return Ok(());
                }
                let mut cols: Vec<String> = Vec::new();
                let flats: Vec<Map<String, Value>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let mut f = Map::new();
                        flatten("", r, &mut f);
                        for k in f.keys() {
                            if !cols.contains(k) {
                                cols.push(k.clone());
                            }
                        }
                        f
                    })
                    .collect();
                writeln!(w, "{}", cols.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","))?;
                for f in flats {
                    let line: Vec<String> = cols.iter().map(|c| csv_field(&f.get(c).map(scalar).unwrap_or_default())).collect();
                    writeln!(w, "{}", line.join(","))?;
                }
                Ok(())
            }
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}
