//! The layer map `(s, t) -> s + t k(s)` and exact integration over the
//! swept layer.

use super::{add, scale, BoundaryPoint, InsulationDistribution, Point, PolygonalDomain, TransversalField};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Gauss points per knot interval for integrals along the insulated boundary.
const S_POINTS: usize = 5;

/// Point at offset `t` along the fiber through `p`.
pub fn layer_point(field: &TransversalField, p: BoundaryPoint, t: f64) -> Point {
    add(field.base_point(p), scale(field.direction(p), t))
}

/// Jacobian determinant of the layer map at `(p, t)`, with `s` the arc
/// length and `t` the fiber offset: `det[k, tau + t k'] = k.n + t det[k, k']`.
pub fn layer_jacobian(field: &TransversalField, p: BoundaryPoint, t: f64) -> Result<f64> {
    let (a, b) = field.jacobian_coefficients(p);
    let j = if t == 0.0 { a } else { a + t * b };
    if j <= 0.0 {
        return Err(Error::NonInjectiveLayer(format!(
            "Jacobian {j:.3e} at facet {} offset {:.6}, t = {t}",
            p.facet, p.offset
        )));
    }
    Ok(j)
}

/// Area of the layer `{s + t k(s) : 0 <= t < eps d(s)}`.
///
/// The Jacobian is affine in `t`, so the fiber integral is evaluated in
/// closed form; along the boundary a 5-point Gauss rule is used on each
/// knot interval of `d`.
pub fn layer_area(
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidDistribution(format!("eps must be positive, got {eps}")));
    }
    let mut area = 0.0;
    for_each_boundary_gauss_point(domain, d, |p, w| {
        let top = eps * d.eval(p);
        let (a, b) = field.jacobian_coefficients(p);
        if a <= 0.0 || a + b * top <= 0.0 {
            return Err(Error::NonInjectiveLayer(format!(
                "Jacobian {:.3e} at facet {} offset {:.6}, t = {top}",
                (a + b * top).min(a),
                p.facet,
                p.offset
            )));
        }
        area += w * (a * top + 0.5 * b * top * top);
        Ok(())
    })?;
    Ok(area)
}

/// `int_{Gamma_I} (k.n) d g ds` by Gauss quadrature on the knot intervals
/// of `d`.
pub fn weighted_insulated_integral(
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    g: impl Fn(BoundaryPoint) -> f64,
) -> f64 {
    let mut sum = 0.0;
    for_each_boundary_gauss_point(domain, d, |p, w| {
        sum += w * field.dot_normal(p) * d.eval(p) * g(p);
        Ok(())
    })
    .expect("closure is infallible");
    sum
}

/// Visits Gauss points (with arc-length weights) on every knot interval of
/// every insulated facet.
pub(crate) fn for_each_boundary_gauss_point(
    domain: &PolygonalDomain,
    d: &InsulationDistribution,
    mut visit: impl FnMut(BoundaryPoint, f64) -> Result<()>,
) -> Result<()> {
    let (xs, ws) = gauss_legendre(S_POINTS);
    for facet in domain.insulated_facets() {
        let (offsets, _) = d.knots(facet).expect("insulated facet has a profile");
        for seg in offsets.windows(2) {
            let len = seg[1] - seg[0];
            for (x, w) in xs.iter().zip(&ws) {
                let p = BoundaryPoint { facet, offset: seg[0] + x * len };
                visit(p, w * len)?;
            }
        }
    }
    Ok(())
}
