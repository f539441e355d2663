//! Tight-binding models, Bloch matrices, high-symmetry paths and the exact
//! diagonalization reference.
//!
//! Phase convention: `H_jl(k) = sum_R t_jl exp(i k . R)` where `R` is the
//! lattice translation from orbital `j`'s cell to orbital `l`'s cell,
//! converted to Cartesian coordinates with the lattice vectors. Orbital
//! positions inside the cell do not enter the phase, so `H(k + G) = H(k)`
//! for every reciprocal lattice vector `G`.
//!
//! Each physical hopping is stored once; its Hermitian partner
//! `(l, j, -R, conj(t))` is added when the Bloch matrix is built.

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Deserialize;

use crate::{Error, Result, C64};

/// Hermiticity tolerance used when accepting externally supplied matrices.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Orbital {
    pub label: String,
    /// On-site energy in eV.
    pub onsite_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingTerm {
    pub from_orbital: usize,
    pub to_orbital: usize,
    /// Lattice translation in integer lattice coordinates.
    pub displacement: Vec<i32>,
    /// Hopping amplitude in eV.
    pub amplitude: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightBindingModel {
    lattice_vectors: Vec<Vec<f64>>,
    orbitals: Vec<Orbital>,
    hoppings: Vec<HoppingTerm>,
}

impl TightBindingModel {
    /// Builds a validated model from `d` lattice vectors of length `d`,
    /// `d` in 1..=3.
    pub fn new(
        lattice_vectors: Vec<Vec<f64>>,
        orbitals: Vec<Orbital>,
        hoppings: Vec<HoppingTerm>,
    ) -> Result<Self> {
        let dim = lattice_vectors.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Validation(format!(
                "expected 1, 2 or 3 lattice vectors, found {dim}"
            )));
        }
        for (i, v) in lattice_vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Validation(format!(
                    "lattice vector {i} has {} components, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "lattice vector {i} is not finite"
                )));
            }
        }
        let lat = lattice_matrix(&lattice_vectors);
        if lat.determinant().abs() < 1e-12 {
            return Err(Error::Validation("lattice vectors are linearly dependent".into()));
        }

        if orbitals.len() < 2 {
            return Err(Error::Validation(format!(
                "at least 2 orbitals required, found {}",
                orbitals.len()
            )));
        }
        let mut seen = HashSet::new();
        for o in &orbitals {
            if !seen.insert(o.label.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate orbital label '{}'",
                    o.label
                )));
            }
            if !o.onsite_energy.is_finite() {
                return Err(Error::Validation(format!(
                    "on-site energy of '{}' is not finite",
                    o.label
                )));
            }
        }

        let n = orbitals.len();
        for (i, h) in hoppings.iter().enumerate() {
            if h.from_orbital >= n || h.to_orbital >= n {
                return Err(Error::Validation(format!(
                    "hopping {i} references orbital ({}, {}) but the model has {n} orbitals",
                    h.from_orbital, h.to_orbital
                )));
            }
            if h.displacement.len() != dim {
                return Err(Error::Validation(format!(
                    "hopping {i} displacement has {} components, expected {dim}",
                    h.displacement.len()
                )));
            }
            if h.from_orbital == h.to_orbital && h.displacement.iter().all(|&r| r == 0) {
                return Err(Error::Validation(format!(
                    "hopping {i} is an on-site term; use the orbital's on-site energy"
                )));
            }
            if h.amplitude.norm() == 0.0 || !h.amplitude.re.is_finite() || !h.amplitude.im.is_finite()
            {
                return Err(Error::Validation(format!(
                    "hopping {i} amplitude must be finite and nonzero"
                )));
            }
        }
        Ok(Self {
            lattice_vectors,
            orbitals,
            hoppings,
        })
    }

    pub fn dimension(&self) -> usize {
        self.lattice_vectors.len()
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn lattice_vectors(&self) -> &[Vec<f64>] {
        &self.lattice_vectors
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    pub fn hoppings(&self) -> &[HoppingTerm] {
        &self.hoppings
    }

    /// Reciprocal lattice vectors `b_i` with `a_i . b_j = 2 pi delta_ij`.
    pub fn reciprocal_vectors(&self) -> Vec<Vec<f64>> {
        let a = lattice_matrix(&self.lattice_vectors);
        // rows of A are a_i; B = 2 pi (A^-1)^T has rows b_i
        let inv = a.try_inverse().expect("validated lattice is invertible");
        let b = inv.transpose() * (2.0 * PI);
        (0..self.dimension())
            .map(|i| b.row(i).iter().copied().collect())
            .collect()
    }

    /// Converts reduced reciprocal coordinates to Cartesian ones.
    pub fn reduced_to_cartesian(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dimension();
        if reduced.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: reduced.len(),
            });
        }
        let b = self.reciprocal_vectors();
        Ok((0..dim)
            .map(|c| (0..dim).map(|i| reduced[i] * b[i][c]).sum())
            .collect())
    }

    fn cartesian_displacement(&self, r: &[i32]) -> Vec<f64> {
        let dim = self.dimension();
        (0..dim)
            .map(|c| {
                r.iter()
                    .zip(&self.lattice_vectors)
                    .map(|(&ri, a)| f64::from(ri) * a[c])
                    .sum()
            })
            .collect()
    }
}

fn lattice_matrix(vectors: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = vectors.len();
    DMatrix::from_fn(dim, dim, |i, j| vectors[i][j])
}

/// A Bloch wave vector in Cartesian reciprocal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    pub components: Vec<f64>,
    /// Cumulative arc length along the path this point belongs to.
    pub path_distance: f64,
    /// High-symmetry label, when the point is one of the path corners.
    pub label: Option<String>,
}

impl KVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self {
            components,
            path_distance: 0.0,
            label: None,
        }
    }
}

/// `H(k)` for one k-point. Entries are in eV.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochMatrix {
    pub k: KVector,
    entries: DMatrix<C64>,
}

impl BlochMatrix {
    /// Wraps an arbitrary matrix, checking it is square and Hermitian.
    pub fn from_matrix(k: KVector, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let deviation = hermitian_deviation(&entries);
        if deviation > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { k, entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn get(&self, j: usize, l: usize) -> C64 {
        self.entries[(j, l)]
    }

    /// Real diagonal, the on-site energies entering the qubit Hamiltonian.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.entries[(j, j)].re).collect()
    }
}

/// Largest `|M_lj - conj(M_jl)|` over all entries.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for l in j..n {
            worst = worst.max((m[(l, j)] - m[(j, l)].conj()).norm());
        }
    }
    worst
}

/// Evaluates `H_jl(k)` summed over the stored hoppings and their implied
/// Hermitian partners. Diagonal entries are `epsilon_j` plus any
/// same-orbital hoppings to other cells.
pub fn bloch_matrix(model: &TightBindingModel, k: &KVector) -> Result<BlochMatrix> {
    let dim = model.dimension();
    if k.components.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: k.components.len(),
        });
    }
    let n = model.n_orbitals();
    let mut h = DMatrix::<C64>::zeros(n, n);
    for (j, o) in model.orbitals().iter().enumerate() {
        h[(j, j)] = C64::new(o.onsite_energy, 0.0);
    }
    for hop in model.hoppings() {
        let r = model.cartesian_displacement(&hop.displacement);
        let phase: f64 = k.components.iter().zip(&r).map(|(a, b)| a * b).sum();
        let term = hop.amplitude * C64::from_polar(1.0, phase);
        let (j, l) = (hop.from_orbital, hop.to_orbital);
        h[(j, l)] += term;
        h[(l, j)] += term.conj();
    }
    // the diagonal is real by construction; drop rounding residue
    for j in 0..n {
        h[(j, j)].im = 0.0;
    }
    Ok(BlochMatrix {
        k: k.clone(),
        entries: h,
    })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn exact_bands(bloch: &BlochMatrix) -> Result<Vec<f64>> {
    hermitian_eigenvalues(bloch.entries())
}

/// Eigenvalues of any Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let mut values: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Eigenpairs of a Hermitian matrix, ascending; column `n` of the returned
/// matrix is the eigenvector of eigenvalue `n`.
pub fn hermitian_eigenpairs(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// A named corner of a high-symmetry path in Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub k: Vec<f64>,
}

/// Linear interpolation through `points`, `points_per_segment` samples per
/// segment including both ends, shared corners emitted once.
pub fn kpath(points: &[LabeledPoint], points_per_segment: usize) -> Result<Vec<KVector>> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a k-path needs at least 2 labeled points, found {}",
            points.len()
        )));
    }
    if points_per_segment < 2 {
        return Err(Error::InvalidArgument(format!(
            "points_per_segment must be at least 2, found {points_per_segment}"
        )));
    }
    let dim = points[0].k.len();
    if let Some(bad) = points.iter().find(|p| p.k.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.k.len(),
        });
    }

    let mut out: Vec<KVector> = Vec::with_capacity((points.len() - 1) * points_per_segment);
    let mut distance = 0.0;
    for (seg, pair) in points.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let first = if seg == 0 { 0 } else { 1 };
        for s in first..points_per_segment {
            let t = s as f64 / (points_per_segment - 1) as f64;
            let components: Vec<f64> = a.k.iter().zip(&b.k).map(|(x, y)| x + t * (y - x)).collect();
            if let Some(prev) = out.last() {
                distance += euclidean(&prev.components, &components);
            }
            let label = if s == 0 {
                Some(a.label.clone())
            } else if s == points_per_segment - 1 {
                Some(b.label.clone())
            } else {
                None
            };
            out.push(KVector {
                components,
                path_distance: distance,
                label,
            });
        }
    }
    Ok(out)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// model files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    lattice: RawLattice,
    orbitals: Vec<RawOrbital>,
    hoppings: Vec<RawHopping>,
    kpath: Option<RawKPath>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbital {
    label: String,
    onsite: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHopping {
    from: OrbitalRef,
    to: OrbitalRef,
    #[serde(rename = "R")]
    displacement: Vec<i32>,
    t: [f64; 2],
}

/// Hopping endpoints may name an orbital by index or by label.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OrbitalRef {
    Index(usize),
    Label(String),
}

impl OrbitalRef {
    fn resolve(&self, orbitals: &[Orbital]) -> Result<usize> {
        match self {
            OrbitalRef::Index(i) => Ok(*i),
            OrbitalRef::Label(l) => orbitals
                .iter()
                .position(|o| &o.label == l)
                .ok_or_else(|| Error::Validation(format!("hopping refers to unknown orbital '{l}'"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKPath {
    #[serde(default)]
    basis: KBasis,
    points_per_segment: Option<usize>,
    points: Vec<RawKPoint>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKPoint {
    label: String,
    k: Vec<f64>,
}

/// Coordinate system of the k-points listed in a model file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KBasis {
    /// Multiples of the reciprocal lattice vectors.
    #[default]
    Reduced,
    Cartesian,
}

/// Default number of samples per path segment.
pub const DEFAULT_POINTS_PER_SEGMENT: usize = 30;

/// The `[kpath]` section of a model file, already in Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KPathSpec {
    pub points: Vec<LabeledPoint>,
    pub points_per_segment: usize,
}

impl KPathSpec {
    pub fn build(&self) -> Result<Vec<KVector>> {
        kpath(&self.points, self.points_per_segment)
    }
}

/// A parsed model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: TightBindingModel,
    pub kpath: Option<KPathSpec>,
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawDocument = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let orbitals: Vec<Orbital> = raw
            .orbitals
            .into_iter()
            .map(|o| Orbital {
                label: o.label,
                onsite_energy: o.onsite,
            })
            .collect();
        let hoppings = raw
            .hoppings
            .into_iter()
            .map(|h| {
                Ok(HoppingTerm {
                    from_orbital: h.from.resolve(&orbitals)?,
                    to_orbital: h.to.resolve(&orbitals)?,
                    displacement: h.displacement,
                    amplitude: C64::new(h.t[0], h.t[1]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if hoppings.is_empty() {
            return Err(Error::Validation("model has no hoppings".into()));
        }
        let model = TightBindingModel::new(raw.lattice.vectors, orbitals, hoppings)?;

        let kpath = match raw.kpath {
            None => None,
            Some(kp) => {
                let points = kp
                    .points
                    .into_iter()
                    .map(|p| {
                        let k = match kp.basis {
                            KBasis::Cartesian => {
                                if p.k.len() != model.dimension() {
                                    return Err(Error::DimensionMismatch {
                                        expected: model.dimension(),
                                        found: p.k.len(),
                                    });
                                }
                                p.k
                            }
                            KBasis::Reduced => model.reduced_to_cartesian(&p.k)?,
                        };
                        Ok(LabeledPoint { label: p.label, k })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(KPathSpec {
                    points,
                    points_per_segment: kp
                        .points_per_segment
                        .unwrap_or(DEFAULT_POINTS_PER_SEGMENT),
                })
            }
        };
        Ok(Self { model, kpath })
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Parses a model file, ignoring any `[kpath]` section.
pub fn parse_model(text: &str) -> Result<TightBindingModel> {
    ModelDocument::parse(text).map(|d| d.model)
}
