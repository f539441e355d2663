//! Circuit executions per cost evaluation: three settings against the
//! `2N + 1` groups of qubit-wise commuting Pauli terms.

use tbvqd::bench::execution_report;

fn main() {
    let sizes: Vec<usize> = (2..=14).step_by(2).collect();
    println!(" N      shots   constant  conventional  ratio");
    for r in execution_report(&sizes, &[10_000, 1_000_000]) {
        println!(
            "{:2} {:>10} {:>10} {:>13} {:>6.1}",
            r.n_qubits,
            r.shots,
            r.total_constant,
            r.total_conventional,
            r.total_conventional as f64 / r.total_constant as f64
        );
    }
}
