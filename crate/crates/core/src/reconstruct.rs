//! Optimal thickness from a temperature field,
//! `d_v = (m / ||v||_{1,Gamma_I}) |v| / (k.n)`, and the normal thickness
//! `(k.n) d`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{InsulationDistribution, PolygonalDomain, TransversalField};
use crate::mesh::{node_position, InsulatedBoundary, TriMesh};

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub distribution: InsulationDistribution,
    pub boundary: InsulatedBoundary,
    /// Thickness along `k` at each insulated node (order of `boundary.nodes`).
    pub nodal: Vec<f64>,
    /// Normal thickness `(k.n) d` at each insulated node.
    pub normal: Vec<f64>,
    /// Lumped mass `sum_j w_j (k.n)_j d_j`; equals `m` up to rounding.
    pub mass: f64,
    /// Mesh nodes where the thickness falls below the requested floor.
    pub below_floor: Vec<usize>,
}

/// Builds the optimal distribution of mass `m` for the field `v` on the
/// bulk mesh. Nodes below `d_min` are reported (and logged), not altered.
pub fn reconstruct_distribution(
    mesh: &TriMesh,
    domain: &PolygonalDomain,
    field: &TransversalField,
    v: &[f64],
    m: f64,
    d_min: f64,
) -> Result<Reconstruction> {
    if v.len() != mesh.node_count() {
        return Err(Error::MeshMismatch(format!(
            "field has {} values, mesh has {} nodes",
            v.len(),
            mesh.node_count()
        )));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidDistribution(format!("mass must be positive, got {m}")));
    }
    let boundary = InsulatedBoundary::new(mesh, domain);
    let l1 = boundary.l1_norm(v);
    if !(l1 > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let kn = boundary.k_dot_n(field);
    let nodal: Vec<f64> = boundary
        .nodes
        .iter()
        .zip(&kn)
        .map(|(&g, &kn)| (m / l1) * v[g].abs() / kn)
        .collect();
    let normal: Vec<f64> = nodal.iter().zip(&kn).map(|(d, kn)| d * kn).collect();
    let mass = boundary.weights.iter().zip(&normal).map(|(w, d)| w * d).sum();

    // knots: every insulated mesh node on each facet, by offset
    let mut per_facet: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for &(la, lb, facet) in &boundary.edges {
        for l in [la, lb] {
            let offset = node_position(mesh, domain, boundary.nodes[l], facet).offset;
            per_facet.entry(facet).or_default().push((offset, nodal[l]));
        }
    }
    let knots = per_facet
        .into_iter()
        .map(|(facet, mut list)| {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            list.dedup_by(|a, b| a.0 == b.0);
            (facet, list)
        })
        .collect();
    let distribution = InsulationDistribution::from_knots(domain, field, knots, 0.0)?;

    let below_floor: Vec<usize> = boundary
        .nodes
        .iter()
        .zip(&nodal)
        .filter(|(_, &d)| d < d_min)
        .map(|(&g, _)| g)
        .collect();
    if !below_floor.is_empty() {
        log::warn!(
            "reconstructed thickness below d_min = {d_min} at {} of {} insulated nodes: {:?}",
            below_floor.len(),
            boundary.len(),
            below_floor
        );
    }
    Ok(Reconstruction {
        distribution,
        boundary,
        nodal,
        normal,
        mass,
        below_floor,
    })
}

/// `(k.n) d` at the insulated nodes.
pub fn to_normal_thickness(
    boundary: &InsulatedBoundary,
    d: &InsulationDistribution,
    field: &TransversalField,
) -> Vec<f64> {
    boundary
        .positions
        .iter()
        .map(|&p| field.dot_normal(p) * d.eval(p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FacetLabel::*, FieldMode};
    use crate::mesh::triangulate_bulk;
    use crate::testing::slab;

    #[test]
    fn constant_trace_gives_uniform_thickness() {
        let (dom, field, _) = slab();
        let mesh = triangulate_bulk(&dom, 0.125).unwrap();
        let v = vec![-3.0; mesh.node_count()];
        let r = reconstruct_distribution(&mesh, &dom, &field, &v, 0.4, 0.0).unwrap();
        assert!(r.nodal.iter().all(|&d| (d - 0.4).abs() < 1e-15));
        assert!((r.mass - 0.4).abs() < 1e-15);
        assert!((r.distribution.mass() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn vanishing_half_doubles_the_rest() {
        let (dom, field, _) = slab();
        let mesh = triangulate_bulk(&dom, 0.125).unwrap();
        let v: Vec<f64> = mesh.nodes.iter().map(|p| if p[1] <= 0.5 { 0.0 } else { 1.0 }).collect();
        let r = reconstruct_distribution(&mesh, &dom, &field, &v, 1.0, 0.1).unwrap();
        // lumped weight of y > 0.5 on the right facet: 3 * 1/8 + 1/16
        let w = 3.0 / 8.0 + 1.0 / 16.0;
        for (&g, &d) in r.boundary.nodes.iter().zip(&r.nodal) {
            let want = if mesh.nodes[g][1] <= 0.5 { 0.0 } else { 1.0 / w };
            assert!((d - want).abs() < 1e-13);
        }
        assert!((r.mass - 1.0).abs() < 1e-13);
        assert_eq!(r.below_floor.len(), 5);
    }

    #[test]
    fn scaling_the_field_changes_nothing() {
        let dom = PolygonalDomain::l_shape(Insulated).unwrap();
        let field = TransversalField::build(&dom, FieldMode::Bisector).unwrap();
        let mesh = triangulate_bulk(&dom, 0.1).unwrap();
        let v: Vec<f64> = mesh.nodes.iter().map(|p| 1.0 + p[0] * p[1] - 0.3 * p[1]).collect();
        let a = reconstruct_distribution(&mesh, &dom, &field, &v, 2.0, 0.0).unwrap();
        let v2: Vec<f64> = v.iter().map(|x| -2.0 * x).collect();
        let b = reconstruct_distribution(&mesh, &dom, &field, &v2, 2.0, 0.0).unwrap();
        assert_eq!(a.nodal, b.nodal);
        assert!((a.mass - 2.0).abs() < 1e-12);
        assert!((a.distribution.mass() - 2.0).abs() < 1e-12);
        let normal = to_normal_thickness(&a.boundary, &a.distribution, &field);
        for (x, y) in normal.iter().zip(&a.normal) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn corner_normal_thickness() {
        let dom = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let field = TransversalField::build(&dom, FieldMode::Bisector).unwrap();
        let mesh = triangulate_bulk(&dom, 0.5).unwrap();
        let b = InsulatedBoundary::new(&mesh, &dom);
        let d = InsulationDistribution::uniform(&dom, &field, 1.0).unwrap();
        let normal = to_normal_thickness(&b, &d, &field);
        let corner = b.local_index(0).unwrap();
        assert!((normal[corner] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let zero = InsulationDistribution::uniform(&dom, &field, 0.0).unwrap();
        assert!(to_normal_thickness(&b, &zero, &field).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn zero_trace_is_an_error() {
        let (dom, field, _) = slab();
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        let v = vec![0.0; mesh.node_count()];
        assert!(matches!(
            reconstruct_distribution(&mesh, &dom, &field, &v, 1.0, 0.0),
            Err(Error::ZeroTrace)
        ));
    }
}
