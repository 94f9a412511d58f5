//! Number formatting and file emission.

use std::fs;
use std::path::{Path, PathBuf};

use flocstab::Samples;
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// `x` with 12 significant digits, in plain notation for moderate
/// magnitudes and scientific notation otherwise.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, x);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" { "0".into() } else { s }
    } else {
        format!("{x:.11e}")
    }
}

pub fn round12(x: f64) -> f64 {
    fmt12(x).parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if !(n.is_i64() || n.is_u64()) => serde_json::Number::from_f64(round12(f)).map_or(Value::Null, Value::Number),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<Value, CliError> {
    Ok(round_value(serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))?))
}

pub struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(&to_json(value)?).map_err(|e| CliError::Io(e.to_string()))?;
        self.text(name, &(text + "\n"))
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.written.push(p);
        Ok(())
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let p = self.path(name);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", p.display()));
        let mut w = csv::Writer::from_path(&p).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.written.push(p);
        Ok(())
    }
}

/// Writes `node, x, f_star, p_star`. The densities use the shortest
/// representation that parses back to the same value so that a reloaded
/// steady state reproduces every downstream quantity exactly.
pub fn write_steady_csv(out: &mut OutDir, name: &str, f_star: &Samples, p_star: &Samples) -> Result<(), CliError> {
    let nodes = p_star.grid().nodes();
    let rows = (0..nodes.len()).map(|i| {
        vec![i.to_string(), fmt12(nodes[i]), format!("{:e}", f_star.values()[i]), format!("{:e}", p_star.values()[i])]
    });
    out.csv(name, &["node", "x", "f_star", "p_star"], rows)
}

/// Reads the `p_star` column of a file written by [`write_steady_csv`].
pub fn read_pstar_csv(path: &Path, grid: flocstab::Grid) -> Result<Samples, CliError> {
    let cfg = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| cfg(e.to_string()))?;
    let col = r
        .headers()
        .map_err(|e| cfg(e.to_string()))?
        .iter()
        .position(|h| h == "p_star")
        .ok_or_else(|| cfg("no p_star column".into()))?;
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| cfg(e.to_string()))?;
        let v: f64 = rec.get(col).unwrap_or("").trim().parse().map_err(|e| cfg(format!("p_star: {e}")))?;
        values.push(v);
    }
    if values.len() != grid.n_nodes() {
        return Err(cfg(format!("{} values for a grid of {} nodes", values.len(), grid.n_nodes())));
    }
    Samples::new(grid, values).map_err(|e| cfg(e.to_string()))
}
