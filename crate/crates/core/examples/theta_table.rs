//! Regenerates `data/theta_m.json`: `cargo run --release --example theta_table`.

use hmflow_core::steady::{threshold_study, ThresholdTable};

fn main() {
    let entries = (3..7).map(|m| threshold_study(m).expect("threshold study")).collect();
    let table = ThresholdTable { version: 1, entries };
    let mut text = serde_json::to_string_pretty(&table).expect("table serializes");
    text.push('\n');
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/theta_m.json");
    std::fs::write(path, text).expect("write table");
    for e in &table.entries {
        println!("m = {}: theta_m = {:.12}  spread = {:.1e}", e.m, e.theta_m, e.spread);
    }
}
