use std::collections::BTreeMap;

use super::{EdgeKind, TriMesh};
use crate::geometry::{norm, sub, BoundaryPoint, FacetLabel, PolygonalDomain, TransversalField};

/// Connected run of insulated boundary nodes in counter-clockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct InsulatedChain {
    /// Positions into [`InsulatedBoundary::nodes`].
    pub members: Vec<usize>,
    pub closed: bool,
}

/// Mesh nodes on the insulated boundary with their lumped quadrature
/// weights (half the length of the adjacent insulated edges).
#[derive(Debug, Clone, PartialEq)]
pub struct InsulatedBoundary {
    /// Mesh node indices, ascending.
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    /// Boundary position of each node on one of its insulated facets.
    pub positions: Vec<BoundaryPoint>,
    /// Insulated edges as `(local a, local b, facet)`, counter-clockwise.
    pub edges: Vec<(usize, usize, usize)>,
    pub chains: Vec<InsulatedChain>,
    /// Cumulative arc length along the chains.
    pub arc: Vec<f64>,
    local: BTreeMap<usize, usize>,
}

impl InsulatedBoundary {
    pub fn new(mesh: &TriMesh, domain: &PolygonalDomain) -> Self {
        let kind = EdgeKind::Facet(FacetLabel::Insulated);
        let global: Vec<(usize, usize, usize)> = mesh
            .edges
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| (e.nodes[0], e.nodes[1], e.facet))
            .collect();
        let mut nodes: Vec<usize> = global.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let local: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();

        let mut weights = vec![0.0; nodes.len()];
        let mut positions: Vec<Option<BoundaryPoint>> = vec![None; nodes.len()];
        let mut edges = Vec::with_capacity(global.len());
        for &(a, b, facet) in &global {
            let (la, lb) = (local[&a], local[&b]);
            let half = 0.5 * norm(sub(mesh.nodes[b], mesh.nodes[a]));
            weights[la] += half;
            weights[lb] += half;
            for (l, g) in [(la, a), (lb, b)] {
                if positions[l].is_none() {
                    positions[l] = Some(node_position(mesh, domain, g, facet));
                }
            }
            edges.push((la, lb, facet));
        }
        let positions = positions.into_iter().map(|p| p.expect("every node has an edge")).collect();

        let (chains, arc) = build_chains(mesh, &nodes, &edges);
        InsulatedBoundary {
            nodes,
            weights,
            positions,
            edges,
            chains,
            arc,
            local,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of mesh node `node` in [`Self::nodes`].
    pub fn local_index(&self, node: usize) -> Option<usize> {
        self.local.get(&node).copied()
    }

    pub fn total_length(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Lumped `||v||_{1, Gamma_I} = sum_j w_j |v_j|` of a nodal field.
    pub fn l1_norm(&self, v: &[f64]) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| w * v[n].abs())
            .sum()
    }

    /// `k.n` at each boundary node.
    pub fn k_dot_n(&self, field: &TransversalField) -> Vec<f64> {
        self.positions.iter().map(|&p| field.dot_normal(p)).collect()
    }
}

/// Boundary position of mesh node `g` measured along `facet`.
pub(crate) fn node_position(
    mesh: &TriMesh,
    domain: &PolygonalDomain,
    g: usize,
    facet: usize,
) -> BoundaryPoint {
    match mesh.boundary_pos.get(g).copied().flatten() {
        Some(bp) if bp.facet == facet => bp,
        _ => {
            let f = domain.facet(facet);
            if g == f.start {
                BoundaryPoint { facet, offset: 0.0 }
            } else if g == f.end {
                BoundaryPoint { facet, offset: f.length }
            } else {
                domain.locate_on_facet(facet, mesh.nodes[g])
            }
        }
    }
}

fn build_chains(
    mesh: &TriMesh,
    nodes: &[usize],
    edges: &[(usize, usize, usize)],
) -> (Vec<InsulatedChain>, Vec<f64>) {
    let n = nodes.len();
    let mut next = vec![None; n];
    let mut has_prev = vec![false; n];
    for &(a, b, _) in edges {
        next[a] = Some(b);
        has_prev[b] = true;
    }
    let mut visited = vec![false; n];
    let mut chains = Vec::new();
    let mut arc = vec![0.0; n];
    let mut s = 0.0;
    let mut walk = |start: usize, closed: bool, visited: &mut Vec<bool>, s: &mut f64| {
        let mut members = vec![start];
        visited[start] = true;
        arc[start] = *s;
        let mut cur = start;
        while let Some(nx) = next[cur] {
            *s += norm(sub(mesh.nodes[nodes[nx]], mesh.nodes[nodes[cur]]));
            if visited[nx] {
                break;
            }
            visited[nx] = true;
            arc[nx] = *s;
            members.push(nx);
            cur = nx;
        }
        InsulatedChain { members, closed }
    };
    // open chains start at nodes without a predecessor
    for start in 0..n {
        if !has_prev[start] && !visited[start] {
            let c = walk(start, false, &mut visited, &mut s);
            chains.push(c);
        }
    }
    for start in 0..n {
        if !visited[start] {
            let c = walk(start, true, &mut visited, &mut s);
            chains.push(c);
        }
    }
    (chains, arc)
}
