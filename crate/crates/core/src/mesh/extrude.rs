use std::collections::{BTreeMap, BTreeSet};

use super::boundary::node_position;
use super::{EdgeKind, Fiber, LayerCell, LayerInfo, MeshEdge, Region, TriMesh};
use crate::error::{Error, Result};
use crate::geometry::{
    add, scale, FacetLabel, InsulationDistribution, PolygonalDomain, TransversalField,
};

/// Extrudes the insulating layer of thickness `eps d` along `field` from the
/// insulated boundary nodes of `bulk` and glues it onto a copy of the bulk
/// mesh.
///
/// Each insulated boundary node gets one fiber with `levels` new nodes at
/// equal spacing. Quads between neighbouring fibers are split along the
/// diagonal leaving the lower-arc-length base node. Facets on which `d`
/// vanishes identically carry no layer; their edges are marked as
/// `Gamma_I^eps` directly.
pub fn extrude_layer(
    bulk: &TriMesh,
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    eps: f64,
    levels: usize,
) -> Result<TriMesh> {
    if bulk.is_glued() {
        return Err(Error::MeshMismatch("mesh already carries a layer".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidDistribution(format!("eps must be positive, got {eps}")));
    }
    if levels == 0 {
        return Err(Error::MeshFailure("need at least one layer subdivision".into()));
    }
    let mut mesh = bulk.clone();
    let insulated = EdgeKind::Facet(FacetLabel::Insulated);

    let mut active_edges = Vec::new();
    for (i, e) in mesh.edges.iter_mut().enumerate() {
        if e.kind != insulated {
            continue;
        }
        if d.vanishes_on(e.facet) {
            e.kind = EdgeKind::LayerOuter;
        } else {
            active_edges.push(i);
        }
    }

    // one fiber per base node, created in ascending node order
    let mut base_facet: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &active_edges {
        let e = mesh.edges[i];
        for v in e.nodes {
            base_facet.entry(v).or_insert(e.facet);
        }
    }
    let mut columns: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&base, &facet) in &base_facet {
        let p = node_position(bulk, domain, base, facet);
        let thickness = d.eval(p);
        if thickness <= 0.0 {
            return Err(Error::DegenerateFiber { node: base });
        }
        let height = eps * thickness;
        let k = field.direction(p);
        let x0 = mesh.nodes[base];
        mesh.fibers[base] = Some(Fiber { base, level: 0, t: 0.0, height });
        let mut col = Vec::with_capacity(levels + 1);
        col.push(base);
        for level in 1..=levels {
            let t = if level == levels {
                height
            } else {
                height * level as f64 / levels as f64
            };
            mesh.nodes.push(add(x0, scale(k, t)));
            mesh.fibers.push(Some(Fiber { base, level, t, height }));
            mesh.boundary_pos.push(None);
            col.push(mesh.nodes.len() - 1);
        }
        columns.insert(base, col);
    }

    let mut cells = Vec::new();
    let mut new_edges = Vec::new();
    for &i in &active_edges {
        let e = mesh.edges[i];
        let [a, b] = e.nodes;
        let (ca, cb) = (&columns[&a], &columns[&b]);
        for level in 0..levels {
            let (a0, a1, b0, b1) = (ca[level], ca[level + 1], cb[level], cb[level + 1]);
            let first = mesh.triangles.len();
            for tri in [[a0, b1, b0], [a0, a1, b1]] {
                mesh.triangles.push(tri);
                mesh.regions.push(Region::Layer);
                let area = mesh.signed_area(mesh.triangles.len() - 1);
                if area <= 0.0 {
                    return Err(Error::NonInjectiveLayer(format!(
                        "layer triangle over facet {} at level {level} has signed area {area:.3e}",
                        e.facet
                    )));
                }
            }
            cells.push(LayerCell {
                base_edge: i,
                level,
                triangles: [first, first + 1],
            });
        }
        new_edges.push(MeshEdge {
            nodes: [ca[levels], cb[levels]],
            kind: EdgeKind::LayerOuter,
            facet: e.facet,
        });
    }

    // side fibers at the ends of open insulated chains
    let starts: BTreeSet<usize> = active_edges.iter().map(|&i| mesh.edges[i].nodes[0]).collect();
    let ends: BTreeSet<usize> = active_edges.iter().map(|&i| mesh.edges[i].nodes[1]).collect();
    for &i in &active_edges {
        let e = mesh.edges[i];
        for (v, is_start) in [(e.nodes[0], true), (e.nodes[1], false)] {
            let open = if is_start { !ends.contains(&v) } else { !starts.contains(&v) };
            if !open {
                continue;
            }
            let col = &columns[&v];
            for w in col.windows(2) {
                // keep the layer region on the left of the side edge
                let nodes = if is_start { [w[1], w[0]] } else { [w[0], w[1]] };
                new_edges.push(MeshEdge {
                    nodes,
                    kind: EdgeKind::LayerSide,
                    facet: e.facet,
                });
            }
        }
    }
    mesh.edges.extend(new_edges);
    mesh.layer = Some(LayerInfo {
        eps,
        levels,
        columns: columns.into_values().collect(),
        cells,
    });
    Ok(mesh)
}
