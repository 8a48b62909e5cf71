use serde::{Deserialize, Serialize};

use super::{cross, dot, norm, sub, Point};
use crate::error::{Error, Result};

/// Boundary condition carried by a polygon facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetLabel {
    Insulated,
    Dirichlet,
    Neumann,
}

impl FacetLabel {
    pub fn name(self) -> &'static str {
        match self {
            FacetLabel::Insulated => "insulated",
            FacetLabel::Dirichlet => "dirichlet",
            FacetLabel::Neumann => "neumann",
        }
    }
}

/// A straight boundary segment from vertex `start` to vertex `end`,
/// traversed counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub start: usize,
    pub end: usize,
    pub label: FacetLabel,
    pub length: f64,
    /// Unit tangent in traversal direction.
    pub tangent: Point,
    /// Outward unit normal.
    pub normal: Point,
}

/// Position on the boundary: facet index plus arc length from the facet's
/// start vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub facet: usize,
    pub offset: f64,
}

/// Simple counter-clockwise polygon whose facets are labelled as insulated,
/// Dirichlet or Neumann boundary.
///
/// Facet `i` always joins vertex `i` to vertex `i + 1 (mod n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalDomain {
    vertices: Vec<Point>,
    facets: Vec<Facet>,
}

impl PolygonalDomain {
    /// Builds a domain from vertices and one label per polygon edge, where
    /// `labels[i]` belongs to the edge from vertex `i` to vertex `i + 1`.
    pub fn new(vertices: Vec<Point>, labels: Vec<FacetLabel>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidDomain(format!("need at least 3 vertices, got {n}")));
        }
        if labels.len() != n {
            return Err(Error::InvalidDomain(format!(
                "{} labels for {n} edges",
                labels.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDomain("non-finite vertex coordinate".into()));
        }
        let mut facets = Vec::with_capacity(n);
        for (i, &label) in labels.iter().enumerate() {
            let j = (i + 1) % n;
            let e = sub(vertices[j], vertices[i]);
            let length = norm(e);
            if length <= 0.0 {
                return Err(Error::InvalidDomain(format!("facet {i} has zero length")));
            }
            let tangent = [e[0] / length, e[1] / length];
            facets.push(Facet {
                start: i,
                end: j,
                label,
                length,
                tangent,
                normal: [tangent[1], -tangent[0]],
            });
        }
        let domain = PolygonalDomain { vertices, facets };
        domain.validate()?;
        Ok(domain)
    }

    /// Builds a domain from explicit `(start, end, label)` edges, which must
    /// cover every polygon edge `(i, i + 1)` exactly once in any order.
    pub fn from_edges(vertices: Vec<Point>, edges: &[(usize, usize, FacetLabel)]) -> Result<Self> {
        let n = vertices.len();
        let mut labels: Vec<Option<FacetLabel>> = vec![None; n];
        for &(a, b, label) in edges {
            if a >= n || b >= n || b != (a + 1) % n {
                return Err(Error::InvalidDomain(format!(
                    "edge ({a}, {b}) is not a counter-clockwise polygon edge"
                )));
            }
            if labels[a].replace(label).is_some() {
                return Err(Error::InvalidDomain(format!("edge ({a}, {b}) listed twice")));
            }
        }
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| {
                    Error::InvalidDomain(format!("edge ({i}, {}) has no label", (i + 1) % n))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vertices, labels)
    }

    /// Unit square `[0,1]^2`; labels ordered bottom, right, top, left.
    pub fn unit_square(labels: [FacetLabel; 4]) -> Result<Self> {
        Self::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            labels.to_vec(),
        )
    }

    /// L-shaped domain `[0,1]^2 \ (1/2,1]^2` with a single label on every facet.
    pub fn l_shape(label: FacetLabel) -> Result<Self> {
        Self::new(
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 0.5],
                [0.5, 0.5],
                [0.5, 1.0],
                [0.0, 1.0],
            ],
            vec![label; 6],
        )
    }

    fn validate(&self) -> Result<()> {
        if self.signed_area() <= 0.0 {
            return Err(Error::InvalidDomain(
                "polygon must be counter-clockwise with positive area".into(),
            ));
        }
        let n = self.vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a0, a1) = self.facet_endpoints(i);
                let (b0, b1) = self.facet_endpoints(j);
                if adjacent {
                    // adjacent facets may only share their common vertex
                    let shared = if j == i + 1 { a1 } else { a0 };
                    let (other_a, other_b) = if j == i + 1 { (a0, b1) } else { (a1, b0) };
                    let ea = sub(other_a, shared);
                    let eb = sub(other_b, shared);
                    if cross(ea, eb).abs() <= 1e-14 * norm(ea) * norm(eb) && dot(ea, eb) > 0.0 {
                        return Err(Error::InvalidDomain(format!(
                            "facets {i} and {j} fold back onto each other"
                        )));
                    }
                } else if segments_intersect(a0, a1, b0, b1) {
                    return Err(Error::InvalidDomain(format!(
                        "polygon is not simple: facets {i} and {j} intersect"
                    )));
                }
            }
        }
        if !self.facets.iter().any(|f| f.label == FacetLabel::Insulated) {
            return Err(Error::InvalidDomain("no insulated facet".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, i: usize) -> &Facet {
        &self.facets[i]
    }

    pub fn facet_endpoints(&self, i: usize) -> (Point, Point) {
        let f = &self.facets[i];
        (self.vertices[f.start], self.vertices[f.end])
    }

    /// Indices of the facets meeting at vertex `v`: `(incoming, outgoing)`.
    pub fn facets_at_vertex(&self, v: usize) -> (usize, usize) {
        let n = self.vertices.len();
        ((v + n - 1) % n, v)
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn insulated_facets(&self) -> impl Iterator<Item = usize> + '_ {
        self.facets_with(FacetLabel::Insulated)
    }

    pub fn facets_with(&self, label: FacetLabel) -> impl Iterator<Item = usize> + '_ {
        self.facets
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.label == label)
            .map(|(i, _)| i)
    }

    pub fn has_label(&self, label: FacetLabel) -> bool {
        self.facets.iter().any(|f| f.label == label)
    }

    /// Total length of the insulated boundary.
    pub fn insulated_length(&self) -> f64 {
        self.insulated_facets().map(|i| self.facets[i].length).sum()
    }

    /// Cartesian coordinates of a boundary point.
    pub fn point_at(&self, p: BoundaryPoint) -> Point {
        let f = &self.facets[p.facet];
        let a = self.vertices[f.start];
        [a[0] + p.offset * f.tangent[0], a[1] + p.offset * f.tangent[1]]
    }

    /// Projects `x` onto facet `facet`, returning the clamped arc offset.
    pub fn locate_on_facet(&self, facet: usize, x: Point) -> BoundaryPoint {
        let f = &self.facets[facet];
        let a = self.vertices[f.start];
        let offset = dot(sub(x, a), f.tangent).clamp(0.0, f.length);
        BoundaryPoint { facet, offset }
    }

    /// Diameter of the vertex set.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max(norm(sub(*a, *b)));
            }
        }
        d
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test.
pub(crate) fn segments_intersect(a0: Point, a1: Point, b0: Point, b1: Point) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(b0, b1, a0))
        || (d2 == 0.0 && on_segment(b0, b1, a1))
        || (d3 == 0.0 && on_segment(a0, a1, b0))
        || (d4 == 0.0 && on_segment(a0, a1, b1))
}
