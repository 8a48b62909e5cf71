use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::data::{ProblemData, Source};
use super::sparse::{CsrMatrix, TripletBuilder};
use crate::error::{Error, Result};
use crate::geometry::{norm, sub, BoundaryPoint, FacetLabel, Point, PolygonalDomain};
use crate::mesh::{node_position, EdgeKind, Region, TriMesh};
use crate::quadrature::{EDGE_GAUSS3, TRI_DEGREE5};

/// Piecewise-constant conductivity per region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCoefficients {
    pub bulk: f64,
    pub layer: f64,
}

impl RegionCoefficients {
    pub fn uniform(a: f64) -> Self {
        RegionCoefficients { bulk: a, layer: a }
    }

    pub fn bulk_only() -> Self {
        RegionCoefficients { bulk: 1.0, layer: 0.0 }
    }

    pub fn layer_only(a: f64) -> Self {
        RegionCoefficients { bulk: 0.0, layer: a }
    }

    pub fn get(&self, r: Region) -> f64 {
        match r {
            Region::Bulk => self.bulk,
            Region::Layer => self.layer,
        }
    }
}

/// Quadrature used for weighted boundary mass matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassQuadrature {
    /// Three-point Gauss rule on every edge.
    #[default]
    Consistent,
    /// Nodal (trapezoidal) rule: diagonal with `sum (L_e / 2) w(node)`.
    Lumped,
}

/// Gradients of the three barycentric coordinates and the signed area.
pub fn p1_gradients(p: [Point; 3]) -> ([Point; 3], f64) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let inv = 0.5 / area;
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
    }
    (g, area)
}

/// Gradient of the P1 interpolant of `u` on triangle `t`.
pub fn triangle_gradient(mesh: &TriMesh, t: usize, u: &[f64]) -> Point {
    let (g, _) = p1_gradients(mesh.triangle_points(t));
    let tri = mesh.triangles[t];
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += u[tri[i]] * g[i][0];
        out[1] += u[tri[i]] * g[i][1];
    }
    out
}

pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let (g, area) = p1_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

/// P1 stiffness matrix with a piecewise-constant coefficient per region.
/// Regions with coefficient zero are skipped.
pub fn assemble_stiffness(mesh: &TriMesh, coeff: RegionCoefficients) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.node_count(), 9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = coeff.get(mesh.regions[t]);
        if a == 0.0 {
            continue;
        }
        let k = element_stiffness(mesh.triangle_points(t));
        for i in 0..3 {
            for j in 0..3 {
                b.add(tri[i], tri[j], a * k[i][j]);
            }
        }
    }
    b.build()
}

/// Consistent P1 mass matrix over the triangles of the given regions.
pub fn assemble_mass(mesh: &TriMesh, coeff: RegionCoefficients) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.node_count(), 9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = coeff.get(mesh.regions[t]);
        if a == 0.0 {
            continue;
        }
        let area = mesh.signed_area(t);
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                b.add(tri[i], tri[j], a * m);
            }
        }
    }
    b.build()
}

/// Boundary positions of the two endpoints of an edge along its facet.
fn edge_offsets(mesh: &TriMesh, domain: &PolygonalDomain, nodes: [usize; 2], facet: usize) -> (f64, f64) {
    let a = node_position(mesh, domain, nodes[0], facet).offset;
    let b = node_position(mesh, domain, nodes[1], facet).offset;
    (a, b)
}

/// Weighted edge mass matrix `int w phi_i phi_j ds` over the edges of kind
/// `kind`, with `w` evaluated at boundary positions.
pub fn assemble_boundary_mass(
    mesh: &TriMesh,
    domain: &PolygonalDomain,
    kind: EdgeKind,
    weight: impl Fn(BoundaryPoint) -> f64,
    quadrature: MassQuadrature,
) -> Result<CsrMatrix> {
    let mut b = TripletBuilder::new(mesh.node_count());
    for e in mesh.edges.iter().filter(|e| e.kind == kind) {
        let [na, nb] = e.nodes;
        let len = norm(sub(mesh.nodes[nb], mesh.nodes[na]));
        let (oa, ob) = edge_offsets(mesh, domain, e.nodes, e.facet);
        let w_at = |lambda: f64| -> Result<f64> {
            let p = BoundaryPoint {
                facet: e.facet,
                offset: oa + lambda * (ob - oa),
            };
            let w = weight(p);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonpositiveWeight { facet: e.facet, value: w });
            }
            Ok(w)
        };
        match quadrature {
            MassQuadrature::Consistent => {
                let mut m = [[0.0; 2]; 2];
                for &(x, q) in &EDGE_GAUSS3 {
                    let w = w_at(x)? * q * len;
                    let phi = [1.0 - x, x];
                    for i in 0..2 {
                        for j in 0..2 {
                            m[i][j] += w * phi[i] * phi[j];
                        }
                    }
                }
                for i in 0..2 {
                    for j in 0..2 {
                        b.add(e.nodes[i], e.nodes[j], m[i][j]);
                    }
                }
            }
            MassQuadrature::Lumped => {
                b.add(na, na, 0.5 * len * w_at(0.0)?);
                b.add(nb, nb, 0.5 * len * w_at(1.0)?);
            }
        }
    }
    Ok(b.build())
}

/// Load vector `(f, phi_i)` over the bulk triangles.
pub fn assemble_load(mesh: &TriMesh, source: &Source) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; mesh.node_count()];
    if let Source::PerTriangle(v) = source {
        if v.len() != mesh.bulk_triangles {
            return Err(Error::MeshMismatch(format!(
                "{} source values for {} bulk triangles",
                v.len(),
                mesh.bulk_triangles
            )));
        }
    }
    for t in 0..mesh.triangle_count() {
        if mesh.regions[t] != Region::Bulk {
            continue;
        }
        let tri = mesh.triangles[t];
        let area = mesh.signed_area(t);
        match source {
            Source::Uniform(f) => {
                for &i in &tri {
                    rhs[i] += f * area / 3.0;
                }
            }
            Source::PerTriangle(v) => {
                for &i in &tri {
                    rhs[i] += v[t] * area / 3.0;
                }
            }
            Source::Function(f) => {
                let p = mesh.triangle_points(t);
                for &(lam, w) in TRI_DEGREE5 {
                    let x = [
                        lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                        lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
                    ];
                    let fx = f(x) * w * area;
                    for i in 0..3 {
                        rhs[tri[i]] += fx * lam[i];
                    }
                }
            }
        }
    }
    Ok(rhs)
}

/// Neumann vector `<g, phi_i>` for per-facet constant fluxes.
pub fn assemble_neumann(mesh: &TriMesh, data: &ProblemData) -> Vec<f64> {
    let mut rhs = vec![0.0; mesh.node_count()];
    for e in &mesh.edges {
        if e.kind != EdgeKind::Facet(FacetLabel::Neumann) {
            continue;
        }
        let g = data.flux_on(e.facet);
        if g == 0.0 {
            continue;
        }
        let len = norm(sub(mesh.nodes[e.nodes[1]], mesh.nodes[e.nodes[0]]));
        rhs[e.nodes[0]] += 0.5 * g * len;
        rhs[e.nodes[1]] += 0.5 * g * len;
    }
    rhs
}

/// Nodal Dirichlet values: `u_D` on Dirichlet facet nodes and zero on the
/// outer layer boundary. Where the two meet, `u_D` wins; where two
/// Dirichlet facets meet, the lower facet index wins.
pub fn dirichlet_constraints(mesh: &TriMesh, data: &ProblemData) -> BTreeMap<usize, f64> {
    let mut c = BTreeMap::new();
    let mut edges: Vec<_> = mesh
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Facet(FacetLabel::Dirichlet))
        .collect();
    edges.sort_by_key(|e| e.facet);
    for e in edges {
        for v in e.nodes {
            c.entry(v).or_insert_with(|| data.dirichlet_on(e.facet));
        }
    }
    for v in mesh.nodes_on(EdgeKind::LayerOuter) {
        c.entry(v).or_insert(0.0);
    }
    c
}

/// Linear system restricted to the free nodes after symmetric elimination
/// of Dirichlet constraints.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Free node indices, ascending.
    pub free: Vec<usize>,
    /// Full-length vector holding the constrained values (zero elsewhere).
    pub lifted: Vec<f64>,
}

impl ReducedSystem {
    pub fn new(a: &CsrMatrix, b: &[f64], constraints: &BTreeMap<usize, f64>) -> Self {
        let n = a.dim();
        let mut lifted = vec![0.0; n];
        for (&i, &v) in constraints {
            lifted[i] = v;
        }
        let free: Vec<usize> = (0..n).filter(|i| !constraints.contains_key(i)).collect();
        let a_lift = a.mul(&lifted);
        let rhs = free.iter().map(|&i| b[i] - a_lift[i]).collect();
        ReducedSystem {
            matrix: a.submatrix(&free),
            rhs,
            free,
            lifted,
        }
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = self.lifted.clone();
        for (k, &i) in self.free.iter().enumerate() {
            u[i] = x[k];
        }
        u
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| u[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FacetLabel::*;
    use crate::mesh::triangulate_bulk;

    fn single_triangle() -> TriMesh {
        TriMesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            regions: vec![Region::Bulk],
            edges: vec![],
            boundary_pos: vec![None; 3],
            fibers: vec![None; 3],
            bulk_nodes: 3,
            bulk_triangles: 1,
            layer: None,
        }
    }

    #[test]
    fn reference_element_stiffness() {
        let m = single_triangle();
        let k = assemble_stiffness(&m, RegionCoefficients::uniform(1.0));
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - want[i][j]).abs() < 1e-15);
            }
        }
        let k2 = assemble_stiffness(&m, RegionCoefficients::uniform(2.0));
        assert!((k2.get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let d = PolygonalDomain::l_shape(Insulated).unwrap();
        let m = triangulate_bulk(&d, 0.1).unwrap();
        let k = assemble_stiffness(&m, RegionCoefficients::uniform(1.0));
        assert!(k.row_sums().iter().all(|s| s.abs() < 1e-12));
        assert!(k.asymmetry() < 1e-12);
        let mass = assemble_mass(&m, RegionCoefficients::uniform(1.0));
        let ones = vec![1.0; m.node_count()];
        assert!((mass.quad_form(&ones) - 0.75).abs() < 1e-13);
    }

    #[test]
    fn edge_mass_on_single_edge() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let m = triangulate_bulk(&d, 1.0).unwrap();
        let kind = EdgeKind::Facet(Insulated);
        let edges: Vec<_> = m.edges.iter().filter(|e| e.kind == kind).collect();
        assert_eq!(edges.len(), 1);
        let [a, b] = edges[0].nodes;
        let c = assemble_boundary_mass(&m, &d, kind, |_| 1.0, MassQuadrature::Consistent).unwrap();
        assert!((c.get(a, a) - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.get(a, b) - 1.0 / 6.0).abs() < 1e-15);
        let l = assemble_boundary_mass(&m, &d, kind, |_| 1.0, MassQuadrature::Lumped).unwrap();
        assert_eq!(l.get(a, a), 0.5);
        assert_eq!(l.get(a, b), 0.0);
        for (x, y) in l.row_sums().iter().zip(c.row_sums()) {
            assert!((x - y).abs() < 1e-15);
        }
        let err = assemble_boundary_mass(&m, &d, kind, |_| 0.0, MassQuadrature::Consistent).unwrap_err();
        assert!(matches!(err, Error::NonpositiveWeight { facet: 1, .. }));
    }

    #[test]
    fn edge_mass_integrates_linear_weights() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let m = triangulate_bulk(&d, 0.25).unwrap();
        let kind = EdgeKind::Facet(Insulated);
        // int_0^1 (1 + s) * 1 * 1 ds = 1.5
        let c = assemble_boundary_mass(&m, &d, kind, |p| 1.0 + p.offset, MassQuadrature::Consistent).unwrap();
        let ones = vec![1.0; m.node_count()];
        assert!((c.quad_form(&ones) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn load_and_neumann_partition_of_unity() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let m = triangulate_bulk(&d, 0.125).unwrap();
        let load = assemble_load(&m, &Source::Uniform(1.0)).unwrap();
        assert!((load.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let data = ProblemData::default().with_flux(0, 1.0);
        let g = assemble_neumann(&m, &data);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let quad = assemble_load(&m, &Source::Function(std::sync::Arc::new(|x: Point| x[0] * x[1]))).unwrap();
        assert!((quad.iter().sum::<f64>() - 0.25).abs() < 1e-14);
        assert!(assemble_load(&m, &Source::PerTriangle(vec![1.0; 3])).is_err());
    }

    #[test]
    fn zero_dirichlet_leaves_rhs() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let m = triangulate_bulk(&d, 0.25).unwrap();
        let k = assemble_stiffness(&m, RegionCoefficients::uniform(1.0));
        let b = assemble_load(&m, &Source::Uniform(1.0)).unwrap();
        let c = dirichlet_constraints(&m, &ProblemData::default());
        assert_eq!(c.len(), 5);
        let r = ReducedSystem::new(&k, &b, &c);
        assert_eq!(r.free.len(), m.node_count() - 5);
        assert_eq!(r.rhs, r.restrict(&b));
        let u = r.expand(&vec![2.0; r.free.len()]);
        for (&i, _) in &c {
            assert_eq!(u[i], 0.0);
        }
    }
}
