use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::FlowParams;

use super::{FlowTrace, StopReason, StopRule, TimeStepperConfig};

/// Git-style blob hash: SHA-256 of `"blob <len>\0"` followed by the bytes,
/// as lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// JSON manifest written next to the trace CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceManifest {
    pub params: FlowParams,
    pub config: TimeStepperConfig,
    pub stop: StopRule,
    pub stop_reason: StopReason,
    /// Hash of the serialized `(params, config, stop)`.
    pub input_hash: String,
    pub steps: usize,
    pub snapshots: usize,
    pub final_time: f64,
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct Inputs<'a> {
    params: &'a FlowParams,
    config: &'a TimeStepperConfig,
    stop: &'a StopRule,
}

impl TraceManifest {
    pub fn new(trace: &FlowTrace, files: Vec<String>) -> Self {
        Self {
            params: trace.params.clone(),
            config: trace.config.clone(),
            stop: trace.stop,
            stop_reason: trace.stop_reason.clone(),
            input_hash: input_hash(&trace.params, &trace.config, &trace.stop),
            steps: trace.monitors.len(),
            snapshots: trace.snapshots.len(),
            final_time: trace.final_time(),
            files,
        }
    }
}

/// Hash identifying a flow run by its inputs.
pub fn input_hash(params: &FlowParams, config: &TimeStepperConfig, stop: &StopRule) -> String {
    let json = serde_json::to_vec(&Inputs { params, config, stop }).expect("inputs serialize");
    content_hash(&json)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One row per monitor sample, starting with the initial state.
pub fn write_monitors_csv<W: Write>(trace: &FlowTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "dt",
        "gradient",
        "origin_slope",
        "energy",
        "flow_energy",
        "sup_energy_density",
        "level",
        "nodes",
        "theta_t_min",
        "theta_t_max",
        "dissipation",
        "regrid_jump",
    ])?;
    for m in trace.all_monitors() {
        w.write_record([
            num(m.t),
            num(m.dt),
            num(m.gradient),
            num(m.origin_slope),
            num(m.energy),
            num(m.flow_energy),
            num(m.sup_energy_density),
            m.level.to_string(),
            m.nodes.to_string(),
            num(m.theta_t_min),
            num(m.theta_t_max),
            num(m.dissipation),
            num(m.regrid_jump),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Snapshots in long format: `snapshot,t,r,theta,theta_t`.
pub fn write_snapshots_csv<W: Write>(trace: &FlowTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["snapshot", "t", "r", "theta", "theta_t"])?;
    for (k, s) in trace.snapshots.iter().enumerate() {
        let idx = k.to_string();
        let t = num(s.state.t);
        for ((r, th), tt) in s.state.r().iter().zip(&s.state.theta).zip(&s.theta_t) {
            w.write_record([idx.as_str(), t.as_str(), &num(*r), &num(*th), &num(*tt)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `monitors.csv`, `snapshots.csv` and `trace.json` into `dir`.
pub fn write_trace(trace: &FlowTrace, dir: &Path) -> std::io::Result<TraceManifest> {
    std::fs::create_dir_all(dir)?;
    let io = |e: csv::Error| std::io::Error::other(e.to_string());
    let f = std::fs::File::create(dir.join("monitors.csv"))?;
    write_monitors_csv(trace, std::io::BufWriter::new(f)).map_err(io)?;
    let f = std::fs::File::create(dir.join("snapshots.csv"))?;
    write_snapshots_csv(trace, std::io::BufWriter::new(f)).map_err(io)?;
    let manifest = TraceManifest::new(trace, vec!["monitors.csv".into(), "snapshots.csv".into(), "trace.json".into()]);
    let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("trace.json"), json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_git_blob_scheme() {
        // sha256 of "blob 6\0hello\n"
        assert_eq!(content_hash(b"hello\n"), "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4");
    }
}
