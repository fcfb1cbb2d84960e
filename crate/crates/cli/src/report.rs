use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use hmflow_core::harness::{list_files, RunManifest};

/// Tabular artifacts of a run that are flattened, in this order. Snapshot
/// profiles are flattened too when `snapshots` is set.
const TABLES: [&str; 3] = ["monitors.csv", "reports/q_series.csv", "reports/selfsim_energy.csv"];

/// Run directories below `out/runs`, sorted by hash.
pub fn run_dirs(out: &Path) -> std::io::Result<Vec<PathBuf>> {
    let runs = out.join("runs");
    if !runs.is_dir() {
        return Ok(Vec::new());
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(runs)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("manifest.json").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Writes `run,scenario,source,index,index_value,variable,value` rows: every
/// non-index column of every table becomes one row per sample, keyed by the
/// table's first column.
pub fn write_long_csv<W: Write>(dirs: &[PathBuf], snapshots: bool, out: W) -> Result<usize, String> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "scenario", "source", "index", "index_value", "variable", "value"]).map_err(|e| e.to_string())?;
    let mut rows = 0;
    for dir in dirs {
        let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| format!("{}: {e}", dir.display()))?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", dir.display()))?;
        let mut sources: Vec<String> = TABLES.iter().map(|s| s.to_string()).collect();
        if snapshots {
            let files = list_files(dir).map_err(|e| e.to_string())?;
            sources.extend(files.into_iter().filter(|f| f.starts_with("snapshots/snap_")));
        }
        for source in sources {
            let path = dir.join(&source);
            if !path.is_file() {
                continue;
            }
            let file = File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut r = csv::Reader::from_reader(file);
            let header = r.headers().map_err(|e| e.to_string())?.clone();
            let Some(index) = header.get(0) else { continue };
            for record in r.records() {
                let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
                let key = record.get(0).unwrap_or_default();
                for (name, value) in header.iter().zip(record.iter()).skip(1) {
                    if value.is_empty() {
                        continue;
                    }
                    w.write_record([&manifest.input_hash, &manifest.scenario.name, &source, index, key, name, value])
                        .map_err(|e| e.to_string())?;
                    rows += 1;
                }
            }
        }
    }
    w.flush().map_err(|e| e.to_string())?;
    Ok(rows)
}
