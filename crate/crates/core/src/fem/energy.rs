use serde::Serialize;

use super::assemble::{
    assemble_boundary_mass, assemble_load, assemble_neumann, assemble_stiffness, MassQuadrature,
    RegionCoefficients,
};
use super::data::ProblemData;
use super::sparse::{dot, CsrMatrix};
use crate::error::{Error, Result};
use crate::geometry::{FacetLabel, InsulationDistribution, PolygonalDomain, TransversalField};
use crate::mesh::{EdgeKind, InsulatedBoundary, TriMesh};

/// Decomposed value of one of the three energies.
///
/// `source = -(f, u)` and `flux = -<g, u>` already carry their sign, so
/// `total` is the plain sum of all terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyReport {
    /// `1/2 ||grad u||^2` over the body.
    pub gradient: f64,
    /// `eps/2 ||grad u||^2` over the layer.
    pub layer: f64,
    /// Robin term of the limit energy, or `(1/2m) ||u||_1^2` of the reduced one.
    pub interface: f64,
    pub source: f64,
    pub flux: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn new(gradient: f64, layer: f64, interface: f64, source: f64, flux: f64) -> Self {
        EnergyReport {
            gradient,
            layer,
            interface,
            source,
            flux,
            total: gradient + layer + interface + source + flux,
        }
    }

    /// Gradient, layer and interface terms: the quadratic part.
    pub fn quadratic(&self) -> f64 {
        self.gradient + self.layer + self.interface
    }

    pub fn terms(&self) -> [(&'static str, f64); 6] {
        [
            ("gradient", self.gradient),
            ("layer", self.layer),
            ("interface", self.interface),
            ("source", self.source),
            ("flux", self.flux),
            ("total", self.total),
        ]
    }
}

fn check_len(mesh: &TriMesh, u: &[f64]) -> Result<()> {
    if u.len() != mesh.node_count() {
        return Err(Error::MeshMismatch(format!(
            "field has {} values, mesh has {} nodes",
            u.len(),
            mesh.node_count()
        )));
    }
    Ok(())
}

/// Linear terms `-(f, u)` and `-<g, u>`.
fn linear_terms(mesh: &TriMesh, data: &ProblemData, u: &[f64]) -> Result<(f64, f64)> {
    let load = assemble_load(mesh, &data.source)?;
    let neumann = assemble_neumann(mesh, data);
    Ok((-dot(&load, u), -dot(&neumann, u)))
}

/// Lumped `||v||_{1, Gamma_I}`.
pub fn boundary_l1(mesh: &TriMesh, domain: &PolygonalDomain, v: &[f64]) -> Result<f64> {
    check_len(mesh, v)?;
    Ok(InsulatedBoundary::new(mesh, domain).l1_norm(v))
}

/// Robin matrix of `int u v / ((k.n) d) ds` on the insulated boundary.
#[derive(Debug, Clone)]
pub struct RobinMass {
    pub matrix: CsrMatrix,
    /// Under lumping, insulated nodes where `d` vanishes: the weight is
    /// infinite there and the temperature is forced to zero.
    pub pinned: Vec<usize>,
}

pub fn robin_mass(
    mesh: &TriMesh,
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    quadrature: MassQuadrature,
) -> Result<RobinMass> {
    match quadrature {
        MassQuadrature::Consistent => {
            // d is piecewise linear, so its knots bound it from below
            for facet in domain.insulated_facets() {
                let (_, values) = d.knots(facet).expect("insulated facet has a profile");
                if let Some(&v) = values.iter().find(|&&v| v <= 0.0) {
                    return Err(Error::NonpositiveWeight { facet, value: v });
                }
            }
            let kind = EdgeKind::Facet(FacetLabel::Insulated);
            let matrix = assemble_boundary_mass(
                mesh,
                domain,
                kind,
                |p| 1.0 / (field.dot_normal(p) * d.eval(p)),
                quadrature,
            )?;
            Ok(RobinMass {
                matrix,
                pinned: Vec::new(),
            })
        }
        MassQuadrature::Lumped => {
            let b = InsulatedBoundary::new(mesh, domain);
            let kn = b.k_dot_n(field);
            let mut diag = vec![0.0; mesh.node_count()];
            let mut pinned = Vec::new();
            for j in 0..b.len() {
                let dt = kn[j] * d.eval(b.positions[j]);
                if dt > 0.0 {
                    diag[b.nodes[j]] = b.weights[j] / dt;
                } else if d.eval(b.positions[j]) == 0.0 {
                    pinned.push(b.nodes[j]);
                } else {
                    return Err(Error::NonpositiveWeight {
                        facet: b.positions[j].facet,
                        value: dt,
                    });
                }
            }
            Ok(RobinMass {
                matrix: CsrMatrix::diagonal(&diag),
                pinned,
            })
        }
    }
}

/// Limit energy `E^d(u)`; the Robin term uses the given quadrature.
pub fn eval_e_limit(
    mesh: &TriMesh,
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    data: &ProblemData,
    u: &[f64],
    quadrature: MassQuadrature,
) -> Result<EnergyReport> {
    check_len(mesh, u)?;
    if mesh.is_glued() {
        return Err(Error::MeshMismatch("limit energy needs the bulk mesh".into()));
    }
    let a = assemble_stiffness(mesh, RegionCoefficients::bulk_only());
    let robin = robin_mass(mesh, domain, field, d, quadrature)?;
    let mut interface = 0.5 * robin.matrix.quad_form(u);
    if robin.pinned.iter().any(|&i| u[i] != 0.0) {
        interface = f64::INFINITY;
    }
    let (source, flux) = linear_terms(mesh, data, u)?;
    Ok(EnergyReport::new(0.5 * a.quad_form(u), 0.0, interface, source, flux))
}

/// Layer energy `E_eps^d(u)` on a glued mesh. The boundary condition on
/// the outer layer boundary is not checked here.
pub fn eval_e_eps(glued: &TriMesh, data: &ProblemData, u: &[f64]) -> Result<EnergyReport> {
    check_len(glued, u)?;
    let eps = glued
        .eps()
        .ok_or_else(|| Error::MeshMismatch("layer energy needs a glued mesh".into()))?;
    let a_bulk = assemble_stiffness(glued, RegionCoefficients::bulk_only());
    let a_layer = assemble_stiffness(glued, RegionCoefficients::layer_only(eps));
    let (source, flux) = linear_terms(glued, data, u)?;
    Ok(EnergyReport::new(
        0.5 * a_bulk.quad_form(u),
        0.5 * a_layer.quad_form(u),
        0.0,
        source,
        flux,
    ))
}

/// Reduced functional `I(u)` with the lumped trace norm.
pub fn eval_i(mesh: &TriMesh, domain: &PolygonalDomain, m: f64, data: &ProblemData, u: &[f64]) -> Result<EnergyReport> {
    check_len(mesh, u)?;
    let a = assemble_stiffness(mesh, RegionCoefficients::bulk_only());
    let l1 = InsulatedBoundary::new(mesh, domain).l1_norm(u);
    let (source, flux) = linear_terms(mesh, data, u)?;
    Ok(EnergyReport::new(0.5 * a.quad_form(u), 0.0, l1 * l1 / (2.0 * m), source, flux))
}
