//! Internal consistency checks of the mapping and the measurement
//! protocol, printed as a pass/fail table.
//!
//! cargo run --release --example validation -- [max-qubits]

use tbvqd::validation::{run_validation, ValidationConfig};

fn main() -> tbvqd::Result<()> {
    let max_qubits = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let report = run_validation(&ValidationConfig::new(max_qubits))?;
    print!("{}", report.table());
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
