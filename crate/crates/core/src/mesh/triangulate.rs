use std::collections::HashMap;

use super::{EdgeKind, MeshEdge, Region, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::{cross, dot, sub, BoundaryPoint, Point, PolygonalDomain};

/// Maximum edge length relative to the requested mesh size.
const EDGE_SLACK: f64 = 1.5;

/// Triangulates the polygon by ear clipping and refines uniformly (each
/// triangle split into four) until no edge is longer than `1.5 h_target`.
pub fn triangulate_bulk(domain: &PolygonalDomain, h_target: f64) -> Result<TriMesh> {
    if !(h_target > 0.0 && h_target.is_finite()) {
        return Err(Error::MeshFailure(format!("invalid mesh size {h_target}")));
    }
    let coarse = ear_clip(domain.vertices())?;
    let mut mesh = coarse_mesh(domain, coarse);
    let levels = refinement_levels(mesh.max_edge_length(), h_target);
    for _ in 0..levels {
        mesh = refine(domain, &mesh);
    }
    Ok(mesh)
}

/// Number of uniform refinements bringing `max_edge` below `1.5 h_target`.
pub fn refinement_levels(max_edge: f64, h_target: f64) -> u32 {
    let mut levels = 0;
    let mut h = max_edge;
    while h > EDGE_SLACK * h_target * (1.0 + 1e-12) {
        h *= 0.5;
        levels += 1;
    }
    levels
}

fn interior_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let angle = |p: Point, q: Point, r: Point| {
        let u = sub(q, p);
        let v = sub(r, p);
        cross(u, v).abs().atan2(dot(u, v))
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

fn contains_closed(a: Point, b: Point, c: Point, p: Point) -> bool {
    let d1 = cross(sub(b, a), sub(p, a));
    let d2 = cross(sub(c, b), sub(p, b));
    let d3 = cross(sub(a, c), sub(p, c));
    d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
}

/// Ear clipping that always removes the ear with the largest minimum angle;
/// ties go to the lowest position in the remaining ring.
fn ear_clip(vertices: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut ring: Vec<usize> = (0..vertices.len()).collect();
    let mut tris = Vec::with_capacity(vertices.len() - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            let (ip, inx) = ((i + m - 1) % m, (i + 1) % m);
            let (a, b, c) = (vertices[ring[ip]], vertices[ring[i]], vertices[ring[inx]]);
            if cross(sub(b, a), sub(c, b)) <= 0.0 {
                continue;
            }
            let blocked = ring.iter().enumerate().any(|(j, &v)| {
                j != ip && j != i && j != inx && contains_closed(a, b, c, vertices[v])
            });
            if blocked {
                continue;
            }
            let quality = interior_angles(a, b, c).into_iter().fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, q)| quality > q) {
                best = Some((i, quality));
            }
        }
        let Some((i, _)) = best else {
            return Err(Error::MeshFailure("no ear found; polygon is not simple".into()));
        };
        tris.push([ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]]);
        ring.remove(i);
    }
    let last = [ring[0], ring[1], ring[2]];
    let (a, b, c) = (vertices[last[0]], vertices[last[1]], vertices[last[2]]);
    if cross(sub(b, a), sub(c, a)) <= 0.0 {
        return Err(Error::MeshFailure("degenerate final ear".into()));
    }
    tris.push(last);
    Ok(tris)
}

fn coarse_mesh(domain: &PolygonalDomain, triangles: Vec<[usize; 3]>) -> TriMesh {
    let nodes = domain.vertices().to_vec();
    let n = nodes.len();
    let edges = domain
        .facets()
        .iter()
        .enumerate()
        .map(|(i, f)| MeshEdge {
            nodes: [f.start, f.end],
            kind: EdgeKind::Facet(f.label),
            facet: i,
        })
        .collect();
    let boundary_pos = (0..n).map(|v| Some(BoundaryPoint { facet: v, offset: 0.0 })).collect();
    let nt = triangles.len();
    TriMesh {
        nodes,
        regions: vec![Region::Bulk; nt],
        triangles,
        edges,
        boundary_pos,
        fibers: vec![None; n],
        bulk_nodes: n,
        bulk_triangles: nt,
        layer: None,
    }
}

/// Offset of node `v` along `facet`, using the stored boundary position
/// when it refers to the same facet.
fn offset_on(domain: &PolygonalDomain, mesh: &TriMesh, v: usize, facet: usize) -> f64 {
    match mesh.boundary_pos[v] {
        Some(bp) if bp.facet == facet => bp.offset,
        _ => {
            let f = domain.facet(facet);
            if v == f.end {
                f.length
            } else {
                domain.locate_on_facet(facet, mesh.nodes[v]).offset
            }
        }
    }
}

fn refine(domain: &PolygonalDomain, mesh: &TriMesh) -> TriMesh {
    let mut nodes = mesh.nodes.clone();
    let mut boundary_pos = mesh.boundary_pos.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();

    // boundary edges first so their midpoints sit exactly on the facet
    let mut edges = Vec::with_capacity(2 * mesh.edges.len());
    for e in &mesh.edges {
        let [a, b] = e.nodes;
        let oa = offset_on(domain, mesh, a, e.facet);
        let ob = offset_on(domain, mesh, b, e.facet);
        let bp = BoundaryPoint { facet: e.facet, offset: 0.5 * (oa + ob) };
        let m = nodes.len();
        let pa = nodes[a];
        let pb = nodes[b];
        nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        boundary_pos.push(Some(bp));
        midpoints.insert((a.min(b), a.max(b)), m);
        edges.push(MeshEdge { nodes: [a, m], ..*e });
        edges.push(MeshEdge { nodes: [m, b], ..*e });
    }

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<Point>, bpos: &mut Vec<Option<BoundaryPoint>>| {
        *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (pa, pb) = (nodes[a], nodes[b]);
            nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            bpos.push(None);
            nodes.len() - 1
        })
    };
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut nodes, &mut boundary_pos);
        let bc = mid(b, c, &mut nodes, &mut boundary_pos);
        let ca = mid(c, a, &mut nodes, &mut boundary_pos);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let n = nodes.len();
    let nt = triangles.len();
    TriMesh {
        nodes,
        regions: vec![Region::Bulk; nt],
        triangles,
        edges,
        boundary_pos,
        fibers: vec![None; n],
        bulk_nodes: n,
        bulk_triangles: nt,
        layer: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::norm;
    use crate::geometry::FacetLabel::{self, *};

    fn edge_length(mesh: &TriMesh, e: &MeshEdge) -> f64 {
        norm(sub(mesh.nodes[e.nodes[1]], mesh.nodes[e.nodes[0]]))
    }

    fn check_mesh(domain: &PolygonalDomain, mesh: &TriMesh, h: f64) {
        assert!(mesh.min_signed_area() > 0.0);
        assert!(mesh.is_conforming());
        assert_eq!(mesh.euler_characteristic(), 1);
        assert!(mesh.max_edge_length() <= 1.5 * h * (1.0 + 1e-12));
        let area: f64 = (0..mesh.triangle_count()).map(|t| mesh.signed_area(t)).sum();
        assert!((area - domain.signed_area()).abs() < 1e-12);
        // boundary nodes lie on their facets
        for e in &mesh.edges {
            for &v in &e.nodes {
                let bp = domain.locate_on_facet(e.facet, mesh.nodes[v]);
                let x = domain.point_at(bp);
                assert!(norm(sub(x, mesh.nodes[v])) < 1e-14);
            }
        }
    }

    #[test]
    fn unit_square_coarse_level_has_eight_triangles() {
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let m = triangulate_bulk(&d, 0.5).unwrap();
        assert_eq!(m.triangle_count(), 8);
        assert_eq!(m.node_count(), 9);
        check_mesh(&d, &m, 0.5);
        let finer = triangulate_bulk(&d, 0.25).unwrap();
        assert_eq!(finer.triangle_count(), 32);
    }

    #[test]
    fn square_mesh_is_a_structured_grid() {
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let m = triangulate_bulk(&d, 1.0 / 32.0).unwrap();
        assert_eq!(m.triangle_count(), 2 * 32 * 32);
        for p in &m.nodes {
            for c in p {
                let scaled = c * 32.0;
                assert_eq!(scaled, scaled.round());
            }
        }
    }

    #[test]
    fn l_shape_mesh_is_valid() {
        let d = PolygonalDomain::l_shape(Insulated).unwrap();
        for h in [0.25, 0.1, 1.0 / 64.0] {
            let m = triangulate_bulk(&d, h).unwrap();
            check_mesh(&d, &m, h);
        }
    }

    #[test]
    fn boundary_labels_follow_facets() {
        let labels: [FacetLabel; 4] = [Neumann, Insulated, Neumann, Dirichlet];
        let d = PolygonalDomain::unit_square(labels).unwrap();
        let m = triangulate_bulk(&d, 0.25).unwrap();
        assert_eq!(m.edges.len(), 16);
        for e in &m.edges {
            assert_eq!(e.kind, EdgeKind::Facet(labels[e.facet]));
        }
        let total: f64 = m.edges.iter().map(|e| edge_length(&m, e)).sum();
        assert!((total - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_mesh_size() {
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        assert!(triangulate_bulk(&d, 0.0).is_err());
        assert!(triangulate_bulk(&d, f64::NAN).is_err());
    }

    #[test]
    fn ear_clip_handles_nonconvex_polygons() {
        let d = PolygonalDomain::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.6, 1.0], [0.5, 0.5], [0.4, 1.0], [0.0, 1.0]],
            vec![Insulated; 7],
        )
        .unwrap();
        let m = triangulate_bulk(&d, 0.1).unwrap();
        check_mesh(&d, &m, 0.1);
    }
}
