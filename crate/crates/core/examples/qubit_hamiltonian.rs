//! Pauli decomposition of a shipped model at one k-point and the
//! measurement groups a term-by-term protocol would need.
//!
//! cargo run --example qubit_hamiltonian -- [cuo2|graphene_bilayer] [k-index]

use tbvqd::models;
use tbvqd::pauli::{qubit_hamiltonian, qwc_groups_conventional};
use tbvqd::tbmodel::{bloch_matrix, exact_bands, ModelDocument};

fn main() -> tbvqd::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "graphene_bilayer".into());
    let index: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let text = models::builtin(&name).expect("unknown model");
    let doc = ModelDocument::parse(text)?;
    let path = doc.kpath.expect("model has a k-path").build()?;
    let k = &path[index.min(path.len() - 1)];

    let bloch = bloch_matrix(&doc.model, k)?;
    let h = qubit_hamiltonian(&bloch)?;
    println!("k = {:?}", k.components);
    println!("identity offset {:+.6}", h.constant_offset);
    for t in &h.terms {
        println!("  {:+.6}  {}", t.coefficient.re, t.label());
    }
    let groups = qwc_groups_conventional(&h);
    println!("{} terms, {} conventional groups, 3 constant settings", h.terms.len(), groups.len());
    println!("bands {:?}", exact_bands(&bloch)?);
    Ok(())
}
