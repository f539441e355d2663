//! Model files shipped with the crate.

/// Three-band CuO2 plane.
pub const CUO2: &str = include_str!("../models/cuo2.toml");

/// AB-stacked bilayer graphene.
pub const GRAPHENE_BILAYER: &str = include_str!("../models/graphene_bilayer.toml");

/// Looks up a shipped model by file name, with or without `.toml`.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name.strip_suffix(".toml").unwrap_or(name) {
        "cuo2" => Some(CUO2),
        "graphene_bilayer" => Some(GRAPHENE_BILAYER),
        _ => None,
    }
}
