//! Triangle meshes of the body and of the glued body-plus-layer domain.

mod boundary;
mod extrude;
mod triangulate;

use std::collections::HashMap;

pub use boundary::{InsulatedBoundary, InsulatedChain};
pub(crate) use boundary::node_position;
pub use extrude::extrude_layer;
pub use triangulate::{refinement_levels, triangulate_bulk};

use crate::geometry::{cross, norm, sub, BoundaryPoint, FacetLabel, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Bulk,
    Layer,
}

impl Region {
    pub fn tag(self) -> i32 {
        match self {
            Region::Bulk => 0,
            Region::Layer => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Edge on a polygon facet. Insulated facet edges become interior
    /// interface edges once a layer is glued on.
    Facet(FacetLabel),
    /// Outer boundary of the layer, where the temperature vanishes.
    LayerOuter,
    /// End fiber of an open insulated chain (natural condition).
    LayerSide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshEdge {
    pub nodes: [usize; 2],
    pub kind: EdgeKind,
    /// Polygon facet the edge belongs to or was extruded from.
    pub facet: usize,
}

/// Fiber coordinates of a layer node: base node on the insulated boundary,
/// level index along the fiber, offset `t` (the transversal distance) and
/// the full fiber height `eps d(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fiber {
    pub base: usize,
    pub level: usize,
    pub t: f64,
    pub height: f64,
}

/// One extruded quadrilateral of the layer, split into two triangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerCell {
    /// Index into [`TriMesh::edges`] of the insulated base edge.
    pub base_edge: usize,
    pub level: usize,
    pub triangles: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerInfo {
    pub eps: f64,
    pub levels: usize,
    /// Node indices along each fiber, from the base node up to `Gamma_I^eps`.
    pub columns: Vec<Vec<usize>>,
    pub cells: Vec<LayerCell>,
}

impl LayerInfo {
    pub fn column_of(&self, base: usize) -> Option<&[usize]> {
        self.columns
            .iter()
            .find(|c| c[0] == base)
            .map(|c| c.as_slice())
    }
}

/// Triangulation with region tags, labelled boundary edges and, for glued
/// meshes, fiber coordinates of the layer nodes.
///
/// Bulk nodes and triangles always come first; a glued mesh extends the
/// bulk mesh it was extruded from without renumbering.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub edges: Vec<MeshEdge>,
    /// Position on the polygon boundary for bulk nodes lying on it.
    pub boundary_pos: Vec<Option<BoundaryPoint>>,
    pub fibers: Vec<Option<Fiber>>,
    pub bulk_nodes: usize,
    pub bulk_triangles: usize,
    pub layer: Option<LayerInfo>,
}

impl TriMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * cross(sub(b, a), sub(c, a))
    }

    pub fn is_glued(&self) -> bool {
        self.layer.is_some()
    }

    pub fn eps(&self) -> Option<f64> {
        self.layer.as_ref().map(|l| l.eps)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangle_count())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.signed_area(t))
            .sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in 0..self.triangle_count() {
            let p = self.triangle_points(t);
            for i in 0..3 {
                h = h.max(norm(sub(p[(i + 1) % 3], p[i])));
            }
        }
        h
    }

    pub fn min_signed_area(&self) -> f64 {
        (0..self.triangle_count())
            .map(|t| self.signed_area(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of triangles sharing each undirected edge.
    pub fn edge_multiplicity(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for tri in &self.triangles {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    /// Checks conformity: every triangle edge is shared by at most two
    /// triangles, and the edges with a single triangle are exactly the
    /// boundary edges of the mesh.
    pub fn is_conforming(&self) -> bool {
        let mult = self.edge_multiplicity();
        if mult.values().any(|&c| c > 2) {
            return false;
        }
        let mut boundary: Vec<(usize, usize)> = mult
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        boundary.sort_unstable();
        let mut labelled: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| self.is_boundary_edge(e))
            .map(|e| (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])))
            .collect();
        labelled.sort_unstable();
        boundary == labelled
    }

    /// Whether a labelled edge lies on the mesh boundary (insulated facet
    /// edges under an extruded layer are interior).
    pub fn is_boundary_edge(&self, e: &MeshEdge) -> bool {
        match e.kind {
            EdgeKind::Facet(FacetLabel::Insulated) => !self.is_glued(),
            _ => true,
        }
    }

    /// `V - E + F` counting triangles as faces; 1 for a triangulated disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.node_count() as i64 - self.edge_multiplicity().len() as i64 + self.triangle_count() as i64
    }

    /// Node indices on edges of the given kind, sorted and deduplicated.
    pub fn nodes_on(&self, kind: EdgeKind) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.kind == kind)
            .flat_map(|e| e.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}
