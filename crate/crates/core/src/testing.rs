//! Fixtures shared by unit tests.

use crate::fem::{ProblemData, Source};
use crate::geometry::{FacetLabel::*, FieldMode, InsulationDistribution, PolygonalDomain, TransversalField};

/// Unit square with `u_D = 1` on the left, insulated right facet and
/// homogeneous Neumann top and bottom; facet-normal field.
pub(crate) fn slab() -> (PolygonalDomain, TransversalField, ProblemData) {
    let dom = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
    let field = TransversalField::build(&dom, FieldMode::FacetNormal).unwrap();
    let data = ProblemData::new(Source::Uniform(0.0)).with_dirichlet(3, 1.0);
    (dom, field, data)
}

pub(crate) fn slab_with(c: f64) -> (PolygonalDomain, TransversalField, InsulationDistribution, ProblemData) {
    let (dom, field, data) = slab();
    let d = InsulationDistribution::uniform(&dom, &field, c).unwrap();
    (dom, field, d, data)
}

/// Fully insulated L-shape with the bisector field and `f = 1`.
pub(crate) fn l_shape() -> (PolygonalDomain, TransversalField, ProblemData) {
    let dom = PolygonalDomain::l_shape(Insulated).unwrap();
    let field = TransversalField::build(&dom, FieldMode::Bisector).unwrap();
    (dom, field, ProblemData::new(Source::Uniform(1.0)))
}
