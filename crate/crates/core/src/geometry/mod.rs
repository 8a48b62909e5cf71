//! Polygonal domains, transversal boundary fields and the thin-layer map.

mod distribution;
mod domain;
mod layer;
mod transversal;

pub use distribution::InsulationDistribution;
pub use domain::{BoundaryPoint, Facet, FacetLabel, PolygonalDomain};
pub use layer::{layer_area, layer_jacobian, layer_point, weighted_insulated_integral};
pub use transversal::{FieldMode, TransversalField, KAPPA_SAMPLES};


pub type Point = [f64; 2];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of the planar cross product.
#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}
