//! States with exactly vanishing amplitudes: the protocol drops those
//! qubits before building the XX and XY settings and still recovers every
//! correlator and the energy.
//!
//! cargo run --example zero_amplitudes

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tbvqd::protocol::{run_protocol, ProtocolConfig};
use tbvqd::simulator::StateVector;
use tbvqd::validation::{amplitudes_with_zeros, random_bloch, rayleigh_quotient, zero_patterns};

fn main() -> tbvqd::Result<()> {
    let n = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = random_bloch(n, &mut rng);
    let cfg = ProtocolConfig::analytic();
    println!("zeros            kept           settings  |E - a'Ha|");
    for zeros in zero_patterns(n).iter().step_by(3) {
        let a = amplitudes_with_zeros(n, zeros, &mut rng);
        let state = StateVector::single_excitation(&a)?;
        let run = run_protocol(&state, &cfg, 0)?;
        let dev = (run.energy(&h)? - rayleigh_quotient(h.entries(), &a)).abs();
        println!(
            "{:<16} {:<14} {:>8}  {dev:.2e}",
            format!("{zeros:?}"),
            format!("{:?}", run.compressed.kept),
            run.settings.len()
        );
    }
    Ok(())
}
