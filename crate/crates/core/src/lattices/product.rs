//! Cartesian products of reciprocal bundles.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{minkowski_constant, Facet, Halfspace, Polytope};
use crate::graph::{neighbor_fan, GeometricGraph};

use super::{key, DualFacet, LatticeBundle, LatticeKind};

/// How the factor weights are rescaled in the product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductWeighting {
    /// Factor scalings chosen so both conststuf ratios stay constant on the product.
    Balanced,
    /// A ↦ √C⁽²⁾·A on factor-1 edges and √C⁽¹⁾·A on factor-2 edges (costs likewise),
    /// with C⁽ⁱ⁾ the Minkowski constant of factor i. Kept for comparison; it does not
    /// preserve conststuf in general.
    ConstantScaled,
}

pub fn product(b1: &LatticeBundle, b2: &LatticeBundle) -> Result<LatticeBundle> {
    product_with(b1, b2, ProductWeighting::Balanced)
}

fn cell_product(c1: &Polytope, c2: &Polytope) -> Polytope {
    let (d1, d2) = (c1.dim, c2.dim);
    let pad = |h: &Halfspace, first: bool| {
        let mut n = vec![0.0; d1 + d2];
        if first {
            n[..d1].copy_from_slice(&h.normal);
        } else {
            n[d1..].copy_from_slice(&h.normal);
        }
        Halfspace::new(n, h.offset)
    };
    let mut halfspaces: Vec<Halfspace> = c1.halfspaces.iter().map(|h| pad(h, true)).collect();
    halfspaces.extend(c2.halfspaces.iter().map(|h| pad(h, false)));
    let n2 = c2.vertices.len();
    let vertices: Vec<Vec<f64>> = c1
        .vertices
        .iter()
        .flat_map(|p| c2.vertices.iter().map(move |q| [p.as_slice(), q.as_slice()].concat()))
        .collect();
    let mut facets = Vec::new();
    for f in &c1.facets {
        let mut n = f.normal.clone();
        n.resize(d1 + d2, 0.0);
        facets.push(Facet {
            normal: n,
            area: f.area * c2.volume,
            vertices: f.vertices.iter().flat_map(|&i| (0..n2).map(move |j| i * n2 + j)).collect(),
            halfspaces: f.halfspaces.clone(),
        });
    }
    let h1 = c1.halfspaces.len();
    for f in &c2.facets {
        let mut n = vec![0.0; d1];
        n.extend_from_slice(&f.normal);
        facets.push(Facet {
            normal: n,
            area: f.area * c1.volume,
            vertices: (0..c1.vertices.len())
                .flat_map(|i| f.vertices.iter().map(move |&j| i * n2 + j))
                .collect(),
            halfspaces: f.halfspaces.iter().map(|h| h + h1).collect(),
        });
    }
    Polytope {
        dim: d1 + d2,
        halfspaces,
        vertices,
        facets,
        volume: c1.volume * c2.volume,
        bounded: true,
    }
}

pub fn product_with(b1: &LatticeBundle, b2: &LatticeBundle, weighting: ProductWeighting) -> Result<LatticeBundle> {
    for (i, b) in [b1, b2].iter().enumerate() {
        let report = crate::transport::verify_sufficiency(b);
        if let Some(failure) = report.first_failure() {
            return Err(Error::input(format!("factor {} fails {failure}", i + 1)));
        }
    }
    let (vol1, vol2) = (b1.dual_cells[0].volume, b2.dual_cells[0].volume);
    let (r1, r2) = (b1.ratios(0), b2.ratios(0));
    let (a1, g1, a2, g2) = match weighting {
        ProductWeighting::Balanced => (
            (vol2 * r1.0 / (vol1 * r2.0)).sqrt(),
            (vol2 * r1.1 / (vol1 * r2.1)).sqrt(),
            1.0,
            1.0,
        ),
        ProductWeighting::ConstantScaled => {
            let c = |b: &LatticeBundle| -> Result<f64> {
                let fan = neighbor_fan(&b.graph, b.center())?;
                Ok(minkowski_constant(&fan.vectors)?.constant)
            };
            let (c1, c2) = (c(b1)?, c(b2)?);
            (c2.sqrt(), c2.sqrt(), c1.sqrt(), c1.sqrt())
        }
    };
    let (n1, n2) = (b1.graph.len(), b2.graph.len());
    let (d1, d2) = (b1.dim(), b2.dim());
    let id = |i: usize, j: usize| i * n2 + j;
    let mut coords = Vec::with_capacity(n1 * n2);
    let mut cells = Vec::with_capacity(n1 * n2);
    let mut complete = Vec::with_capacity(n1 * n2);
    let mut orbit = Vec::with_capacity(n1 * n2);
    let mut lookup = HashMap::new();
    let o2 = b2.orbit_count();
    for i in 0..n1 {
        for j in 0..n2 {
            let p = [b1.graph.coords(i), b2.graph.coords(j)].concat();
            lookup.insert(key(&p), coords.len());
            coords.push(p);
            cells.push(cell_product(&b1.dual_cells[i], &b2.dual_cells[j]));
            complete.push(b1.complete[i] && b2.complete[j]);
            orbit.push(b1.orbit[i] * o2 + b2.orbit[j]);
        }
    }
    let mut graph = GeometricGraph::new(d1 + d2, coords)?;
    let mut facets = Vec::new();
    for (k, e) in b1.graph.edges().iter().enumerate() {
        let mut n = b1.facets[k].normal.clone();
        n.resize(d1 + d2, 0.0);
        for j in 0..n2 {
            graph.add_edge(id(e.u, j), id(e.v, j), a1 * e.a, g1 * e.g)?;
            facets.push(DualFacet {
                area: b1.facets[k].area * b2.dual_cells[j].volume,
                normal: n.clone(),
            });
        }
    }
    for (k, e) in b2.graph.edges().iter().enumerate() {
        let mut n = vec![0.0; d1];
        n.extend_from_slice(&b2.facets[k].normal);
        for i in 0..n1 {
            graph.add_edge(id(i, e.u), id(i, e.v), a2 * e.a, g2 * e.g)?;
            facets.push(DualFacet {
                area: b2.facets[k].area * b1.dual_cells[i].volume,
                normal: n.clone(),
            });
        }
    }
    let reference_cells = cells.iter().map(|c: &Polytope| c.vertices.clone()).collect();
    Ok(LatticeBundle {
        kind: LatticeKind::Product,
        graph,
        dual_cells: cells,
        facets,
        window: b1.window.min(b2.window),
        complete,
        orbit,
        reference_cells,
        lookup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::generate;
    use crate::transport::verify_sufficiency;
    use approx::assert_relative_eq;

    fn segment() -> LatticeBundle {
        generate(LatticeKind::ProductGrid(vec![1.0]), 3).unwrap()
    }

    #[test]
    fn segment_squared_is_the_square_grid() {
        let p = product(&segment(), &segment()).unwrap();
        let mut fan = neighbor_fan(&p.graph, p.center()).unwrap().vectors;
        fan.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(fan, vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_relative_eq!(minkowski_constant(&fan).unwrap().constant, 0.25, max_relative = 1e-8);
        assert!(verify_sufficiency(&p).condition("conststuf_a").unwrap().passed);
    }

    #[test]
    fn balanced_weights_keep_conststuf() {
        let hon = generate(LatticeKind::Honeycomb(None), 2).unwrap();
        let p = product(&hon, &segment()).unwrap();
        let r = verify_sufficiency(&p);
        for name in ["reciprocity", "equal_volumes", "conststuf_a", "conststuf_g", "c_v_constant"] {
            assert!(r.condition(name).unwrap().passed, "{name}");
        }
        // Prisms are not simplices.
        assert!(!r.condition("simplicial_cells").unwrap().passed);
        // C_𝒱 = C₁^d / (d^d |cell|^{d−1}) with the product's own ratios.
        let expected = r.c1.powi(3) / (27.0 * r.cell_volume.powi(2));
        let c = minkowski_constant(&neighbor_fan(&p.graph, p.center()).unwrap().vectors).unwrap();
        assert_relative_eq!(c.constant, expected, max_relative = 1e-6);
        // Not the product of the factor constants.
        let factor = |b: &LatticeBundle| {
            minkowski_constant(&neighbor_fan(&b.graph, b.center()).unwrap().vectors)
                .unwrap()
                .constant
        };
        let (ch, cs) = (factor(&hon), factor(&segment()));
        assert_relative_eq!(ch * cs, 3f64.sqrt(), max_relative = 1e-8);
        assert!((c.constant - ch * cs).abs() > 1e-3, "{} vs {}", c.constant, ch * cs);
    }

    #[test]
    fn constant_scaled_weights_break_conststuf() {
        let hon = generate(LatticeKind::Honeycomb(None), 2).unwrap();
        let p = product_with(&hon, &segment(), ProductWeighting::ConstantScaled).unwrap();
        let r = verify_sufficiency(&p);
        assert!(!r.condition("conststuf_a").unwrap().passed);
    }

    #[test]
    fn factors_must_pass_verification() {
        let tri = generate(LatticeKind::Triangular, 2).unwrap();
        assert!(product(&tri, &segment()).unwrap_err().is_input());
    }
}
