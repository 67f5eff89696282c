//! Regenerate the shipped detector-graph fixtures from their recorded seeds.
//!
//! ```text
//! cargo run -p coevolve --example generate_fixtures            # rewrite fixtures/graphs/*.json
//! cargo run -p coevolve --example generate_fixtures -- --check # fail if any file is stale
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use coevolve::problems::decoding::fixtures;

fn main() -> ExitCode {
    let check = std::env::args().any(|a| a == "--check");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/graphs");
    let mut stale = 0;
    for name in fixtures::SHIPPED {
        let fixture = fixtures::generate(name).expect("known fixture");
        let text = fixture.to_json();
        let path = dir.join(format!("{name}.json"));
        let current = std::fs::read_to_string(&path).unwrap_or_default();
        if current == text {
            println!("{name}: up to date ({} detectors, {} edges)", fixture.num_detectors, fixture.edges.len());
        } else if check {
            println!("{name}: stale");
            stale += 1;
        } else {
            std::fs::write(&path, text).expect("write fixture");
            println!("{name}: wrote {}", path.display());
        }
    }
    if stale > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
