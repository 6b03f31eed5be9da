//! Known extremal subsets.

use crate::error::{Error, Result};
use crate::graph::VertexSet;

use super::{LatticeBundle, LatticeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceKind {
    /// Lattice hexagon H_k in the triangular graph: 3k²+3k+1 vertices.
    HexTriangular(usize),
    /// The 6k² honeycomb vertices whose dual triangles tile a hexagon of side k.
    HexHoneycomb(usize),
    /// The 24k³ BCC cells tiling the rhombic dodecahedron |x_i|+|x_j| ≤ 2k.
    RhombicDodecaBcc(usize),
}

impl ReferenceKind {
    pub fn expected_size(&self) -> usize {
        match *self {
            ReferenceKind::HexTriangular(k) => 3 * k * k + 3 * k + 1,
            ReferenceKind::HexHoneycomb(k) => 6 * k * k,
            ReferenceKind::RhombicDodecaBcc(k) => 24 * k * k * k,
        }
    }
}

/// Hexagonal distance of a point of the triangular lattice from the origin.
fn hex_distance(p: &[f64]) -> f64 {
    let b = p[1] / (3f64.sqrt() / 2.0);
    let a = p[0] - b / 2.0;
    a.abs().max(b.abs()).max((a + b).abs())
}

pub fn reference_subset(bundle: &LatticeBundle, kind: ReferenceKind) -> Result<VertexSet> {
    let k = match kind {
        ReferenceKind::HexTriangular(k) | ReferenceKind::HexHoneycomb(k) | ReferenceKind::RhombicDodecaBcc(k) => k,
    };
    if k == 0 {
        return Err(Error::input("reference subsets need k ≥ 1"));
    }
    let kf = k as f64 + 1e-9;
    let set: VertexSet = match (kind, &bundle.kind) {
        (ReferenceKind::HexTriangular(_), LatticeKind::Triangular) => (0..bundle.graph.len())
            .filter(|&x| hex_distance(bundle.graph.coords(x)) <= kf)
            .collect(),
        (ReferenceKind::HexHoneycomb(_), LatticeKind::Honeycomb(_)) => (0..bundle.graph.len())
            .filter(|&x| bundle.reference_cells[x].iter().all(|p| hex_distance(p) <= kf))
            .collect(),
        (ReferenceKind::RhombicDodecaBcc(_), LatticeKind::Bcc) => (0..bundle.graph.len())
            .filter(|&x| {
                bundle.reference_cells[x].iter().all(|p| {
                    (0..3).all(|i| (i + 1..3).all(|j| p[i].abs() + p[j].abs() <= 2.0 * kf))
                })
            })
            .collect(),
        (kind, lattice) => {
            return Err(Error::input(format!(
                "reference subset {kind:?} does not apply to {}",
                lattice.label()
            )))
        }
    };
    bundle.check_inside(&set)?;
    if set.len() != kind.expected_size() {
        return Err(Error::Window(format!(
            "found {} of the {} vertices of {kind:?}; enlarge the window",
            set.len(),
            kind.expected_size()
        )));
    }
    Ok(set)
}
