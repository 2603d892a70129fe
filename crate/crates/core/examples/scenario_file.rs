//! Loads a JSON scenario, as the `fps` binary does, and prints the solve and
//! compare documents.
//!
//!     cargo run --example scenario_file -- crates/core/scenarios/crossing_exinterim.json

use std::path::PathBuf;

use fps_core::cli::{cmd_compare, cmd_solve, Scenario, Space};

fn main() -> fps_core::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_expost_half.json"));
    let scenario = Scenario::load(&path)?;
    for space in [Space::Fixed, Space::Signaling] {
        let doc = cmd_solve(&scenario, space)?;
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    }
    let (doc, holds) = cmd_compare(&scenario, Some(101), Some(101))?;
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    println!("dominance holds: {holds}");
    Ok(())
}
