use std::fs;
use std::io::Write;
use std::path::Path;

use crate::fail::Failure;

fn refuse_overwrite(path: &Path, force: bool) -> Result<(), Failure> {
    if path.exists() && !force {
        return Err(Failure::Io(format!("{} exists; pass --force to replace it", path.display())));
    }
    Ok(())
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

/// Writes one JSON line to `path`, or to stdout when no path is given.
pub fn emit_json(path: Option<&Path>, force: bool, json: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            refuse_overwrite(p, force)?;
            fs::write(p, format!("{json}\n")).map_err(io(p))
        }
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{json}").map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
    }
}

/// Writes a CSV table with the given header.
pub fn write_csv(path: &Path, force: bool, header: &[&str], rows: &[Vec<f64>]) -> Result<(), Failure> {
    refuse_overwrite(path, force)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header).map_err(|e| Failure::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(|e| Failure::Io(e.to_string()))?;
    }
    w.flush().map_err(io(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}
