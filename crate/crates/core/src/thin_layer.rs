//! The layer problem: minimize `E_eps^d` on the body glued to its
//! insulating layer, with `u = 0` on the outer layer boundary.
//!
//! Flux continuity across the insulated boundary is the natural interface
//! condition of the energy and holds automatically for conforming P1
//! elements, so no interface terms are assembled.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass, assemble_neumann, assemble_stiffness, dirichlet_constraints, eval_e_eps,
    solve_spd, triangle_gradient, CgOptions, EnergyReport, ProblemData, ReducedSystem, RegionCoefficients,
    ScalarField,
};
use crate::geometry::PolygonalDomain;
use crate::mesh::{Region, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsOptions {
    pub cg: CgOptions,
    /// Allowed relative excess in the fiber Poincare check.
    pub poincare_slack: f64,
}

impl Default for EpsOptions {
    fn default() -> Self {
        EpsOptions {
            cg: CgOptions::default(),
            poincare_slack: 0.05,
        }
    }
}

/// Fiber-wise check of `|u(t)|^2 <= (eps d - t) int_t^{eps d} |grad u|^2`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PoincareCheck {
    pub samples: usize,
    /// Largest ratio of left- to right-hand side.
    pub worst_ratio: f64,
    /// Base nodes of fibers exceeding `1 + slack`.
    pub failures: Vec<usize>,
}

impl PoincareCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The four parts of the equi-coercivity norm
/// `||u||^2 + ||grad u||^2 + (1/eps) ||u||^2_Sigma + eps ||grad u||^2_Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CoercivityNorms {
    pub l2_body: f64,
    pub grad_body: f64,
    pub l2_layer_scaled: f64,
    pub grad_layer_scaled: f64,
}

impl CoercivityNorms {
    pub fn total(&self) -> f64 {
        self.l2_body + self.grad_body + self.l2_layer_scaled + self.grad_layer_scaled
    }
}

#[derive(Debug, Clone)]
pub struct EpsSolution {
    pub u: ScalarField,
    pub report: EnergyReport,
    pub iterations: usize,
    pub residual: f64,
    pub poincare: PoincareCheck,
    pub coercivity: CoercivityNorms,
}

pub fn solve_eps(
    domain: &PolygonalDomain,
    glued: &TriMesh,
    eps: f64,
    data: &ProblemData,
    opts: EpsOptions,
) -> Result<EpsSolution> {
    data.validate(domain)?;
    let mesh_eps = glued
        .eps()
        .ok_or_else(|| Error::MeshMismatch("layer problem needs a glued mesh".into()))?;
    if (mesh_eps - eps).abs() > 1e-12 * eps.abs().max(mesh_eps) {
        return Err(Error::MeshMismatch(format!(
            "mesh was extruded with eps = {mesh_eps}, asked for {eps}"
        )));
    }
    let a = assemble_stiffness(glued, RegionCoefficients { bulk: 1.0, layer: eps });
    let mut b = assemble_load(glued, &data.source)?;
    for (bi, gi) in b.iter_mut().zip(assemble_neumann(glued, data)) {
        *bi += gi;
    }
    let constraints = dirichlet_constraints(glued, data);
    let sys = ReducedSystem::new(&a, &b, &constraints);
    let out = solve_spd(&sys.matrix, &sys.rhs, None, opts.cg)?;
    let u = sys.expand(&out.x);
    let report = eval_e_eps(glued, data, &u)?;
    let poincare = poincare_check(glued, &u, opts.poincare_slack);
    if !poincare.passed() {
        log::warn!(
            "fiber Poincare check failed on {} fibers (worst ratio {:.3})",
            poincare.failures.len(),
            poincare.worst_ratio
        );
    }
    let coercivity = coercivity_norms(glued, eps, &u);
    log::debug!(
        "layer solve eps = {eps}: {} free nodes, {} CG iterations",
        sys.free.len(),
        out.iterations
    );
    Ok(EpsSolution {
        u,
        report,
        iterations: out.iterations,
        residual: out.residual,
        poincare,
        coercivity,
    })
}

/// Runs the fiber Poincare check on a field over a glued mesh.
///
/// Along each fiber segment the gradient is taken as the mean of
/// `|grad u|^2` over the layer triangles sharing that segment.
pub fn poincare_check(glued: &TriMesh, u: &[f64], slack: f64) -> PoincareCheck {
    let Some(layer) = &glued.layer else {
        return PoincareCheck::default();
    };
    let mut adjacent: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in glued.triangles.iter().enumerate() {
        if glued.regions[t] != Region::Layer {
            continue;
        }
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            adjacent.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let grad_sq = |t: usize| {
        let g = triangle_gradient(glued, t, u);
        g[0] * g[0] + g[1] * g[1]
    };
    let mut check = PoincareCheck::default();
    for col in &layer.columns {
        let t_of = |v: usize| glued.fibers[v].expect("layer node has fiber coordinates").t;
        let height = t_of(col[col.len() - 1]);
        // tail[i] = int_{t_i}^{H} |grad u|^2 dlambda
        let mut tail = vec![0.0; col.len()];
        for i in (0..col.len() - 1).rev() {
            let (a, b) = (col[i], col[i + 1]);
            let tris = &adjacent[&(a.min(b), a.max(b))];
            let mean = tris.iter().map(|&t| grad_sq(t)).sum::<f64>() / tris.len() as f64;
            tail[i] = tail[i + 1] + mean * (t_of(b) - t_of(a));
        }
        let mut failed = false;
        for i in 0..col.len() - 1 {
            let lhs = u[col[i]] * u[col[i]];
            let rhs = (height - t_of(col[i])) * tail[i];
            check.samples += 1;
            let ratio = if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            check.worst_ratio = check.worst_ratio.max(ratio);
            failed |= ratio > 1.0 + slack;
        }
        if failed {
            check.failures.push(col[0]);
        }
    }
    check
}

pub fn coercivity_norms(glued: &TriMesh, eps: f64, u: &[f64]) -> CoercivityNorms {
    let body = RegionCoefficients::bulk_only();
    let layer = RegionCoefficients::layer_only(1.0);
    CoercivityNorms {
        l2_body: assemble_mass(glued, body).quad_form(u),
        grad_body: assemble_stiffness(glued, body).quad_form(u),
        l2_layer_scaled: assemble_mass(glued, layer).quad_form(u) / eps,
        grad_layer_scaled: eps * assemble_stiffness(glued, layer).quad_form(u),
    }
}
