//! Band structure of a model file along its k-path, protocol energies next
//! to exact diagonalization.
//!
//! cargo run --release --example band_structure -- [model.toml] [shots|analytic] [seed] [beta] [noclip]

use std::time::Instant;

use tbvqd::tbmodel::ModelDocument;
use tbvqd::vqd::{band_sweep, DeflationConfig, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let model = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/models/cuo2.toml").to_string());
    let mode = args.next().unwrap_or_else(|| "analytic".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let doc = ModelDocument::from_path(&model)?;
    let path = doc.kpath.ok_or("model file has no [kpath]")?.build()?;
    let beta: Option<f64> = args.next().map(|s| s.parse()).transpose()?.filter(|b: &f64| *b > 0.0);
    let mut cfg = match mode.as_str() {
        "analytic" => RunConfig::analytic(seed),
        shots => RunConfig::shots(shots.parse()?, seed),
    };
    cfg.clip = args.next().as_deref() != Some("noclip");
    let start = Instant::now();
    let result = band_sweep(&doc.model, &path, &cfg, &DeflationConfig { beta, ..DeflationConfig::default() })?;

    println!("  k   dist    {:>40}   {:>40}", "vqd", "exact");
    for p in &result.points {
        let vqd: Vec<String> = p.bands.iter().map(|b| format!("{:9.5}", b.energy)).collect();
        let exact: Vec<String> = p.exact.iter().map(|e| format!("{e:9.5}")).collect();
        println!("{:3} {:6.3}  {}   {}", p.k_index, p.path_distance, vqd.join(" "), exact.join(" "));
    }
    let mut errors: Vec<f64> = result.errors().collect();
    errors.sort_by(f64::total_cmp);
    let p95 = errors[(errors.len() * 95 / 100).min(errors.len() - 1)];
    for n in 0..result.levels {
        let d: Vec<f64> = result.points.iter().map(|p| p.bands[n].energy - p.exact[n]).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let rms = (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
        println!("band {n}: mean error {mean:+.4} eV, rms {rms:.4} eV");
    }
    let within = errors.iter().filter(|e| **e < 0.05).count() as f64 / errors.len() as f64;
    println!("within 0.05 eV: {:.1}%", 100.0 * within);
    println!(
        "max |error| {:.3e} eV, 95th percentile {:.3e} eV, failures {}, cost evaluations {}, {:.1} s",
        result.max_abs_error(),
        p95,
        result.failures(),
        result.total_cost_evals(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
