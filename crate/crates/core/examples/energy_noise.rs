//! Shot-noise floor of a single protocol energy evaluation, measured at the
//! exact eigenstates of a model at one k-point.
//!
//! cargo run --release --example energy_noise -- [model.toml] [shots] [k_index] [repeats] [noclip]

use tbvqd::protocol::{run_protocol, ProtocolConfig};
use tbvqd::simulator::{build_ansatz, run_circuit, AnsatzParams};
use tbvqd::tbmodel::{bloch_matrix, hermitian_eigenpairs, ModelDocument};
use tbvqd::C64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let model = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/models/graphene_bilayer.toml").to_string());
    let shots: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let k_index: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let repeats: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(400);

    let doc = ModelDocument::from_path(&model)?;
    let path = doc.kpath.ok_or("model file has no [kpath]")?.build()?;
    let k = path.get(k_index).ok_or("k_index past the end of the path")?;
    let bloch = bloch_matrix(&doc.model, k)?;
    let (values, vectors) = hermitian_eigenpairs(bloch.entries())?;
    let n = bloch.dim();
    let clip = args.next().as_deref() != Some("noclip");
    let cfg = ProtocolConfig {
        clip,
        ..ProtocolConfig::shots(shots)
    };
    println!("level   exact      mean       std      mean-exact");
    for (level, exact) in values.iter().enumerate() {
        let a: Vec<C64> = vectors.column(level).iter().copied().collect();
        let state = run_circuit(&build_ansatz(n, &AnsatzParams::from_amplitudes(&a)?)?)?;
        let energies: Vec<f64> = (0..repeats)
            .map(|s| run_protocol(&state, &cfg, s)?.energy(&bloch))
            .collect::<tbvqd::Result<_>>()?;
        let (mean, std) = tbvqd::bench::mean_and_std(&energies);
        println!("{level:5} {exact:9.5} {mean:9.5} {std:9.5} {:11.5}", mean - exact);
    }
    Ok(())
}
