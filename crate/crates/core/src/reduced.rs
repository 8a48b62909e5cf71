//! The reduced convex problem
//! `I(v) = 1/2 ||grad v||^2 - (f, v) - <g, v> + (1/2m) ||v||_{1,Gamma_I}^2`,
//! whose minimizer determines the optimal insulation through
//! [`crate::reconstruct`].
//!
//! The trace norm uses lumped weights, which makes the non-smooth term
//! separable up to the outer square, so its proximal map is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_neumann, assemble_stiffness, dirichlet_constraints, eval_i, sparse::norm2,
    CgOptions, EnergyReport, MassQuadrature, ProblemData, ReducedSystem, RegionCoefficients, ScalarField,
};
use crate::geometry::{InsulationDistribution, PolygonalDomain, TransversalField};
use crate::mesh::{InsulatedBoundary, TriMesh};
use crate::reconstruct::reconstruct_distribution;
use crate::robin::{solve_limit, LimitOptions};

/// Buffers for repeated evaluation of the proximal map of
/// `v -> (alpha/2) (c + sum_j w_j |v_j|)^2`.
#[derive(Debug, Clone)]
pub struct ProxWorkspace {
    weights: Vec<f64>,
    order: Vec<usize>,
    ratio: Vec<f64>,
}

impl ProxWorkspace {
    /// # Panics
    /// If a weight is not positive and finite.
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(
            weights.iter().all(|&w| w > 0.0 && w.is_finite()),
            "prox weights must be positive"
        );
        let n = weights.len();
        ProxWorkspace {
            weights,
            order: (0..n).collect(),
            ratio: vec![0.0; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Writes `argmin_v 1/2 |v - z|^2 + (alpha/2) (c + sum w_j |v_j|)^2`
    /// into `out` and returns `s = c + sum w_j |out_j|`.
    ///
    /// The minimizer is `v_j = soft(z_j, alpha s w_j)`, where `s` solves
    /// `s = c + sum_j w_j (|z_j| - alpha s w_j)_+`. The right-hand side is
    /// piecewise linear in `s` with breakpoints `|z_j| / (alpha w_j)`; the
    /// root is found by walking the breakpoints in decreasing order.
    pub fn apply(&mut self, z: &[f64], alpha: f64, c: f64, out: &mut [f64]) -> f64 {
        let n = self.weights.len();
        assert_eq!(z.len(), n);
        assert_eq!(out.len(), n);
        if alpha <= 0.0 {
            out.copy_from_slice(z);
            return c + z.iter().zip(&self.weights).map(|(z, w)| w * z.abs()).sum::<f64>();
        }
        for j in 0..n {
            self.ratio[j] = z[j].abs() / (alpha * self.weights[j]);
        }
        let ratio = &self.ratio;
        self.order.sort_by(|&a, &b| ratio[b].total_cmp(&ratio[a]).then(a.cmp(&b)));
        let (mut num, mut den) = (c, 1.0);
        let mut s = c;
        for k in 0..=n {
            // the first k entries of `order` are active
            s = num / den;
            let next = if k < n { self.ratio[self.order[k]] } else { 0.0 };
            if s >= next {
                break;
            }
            let j = self.order[k];
            num += self.weights[j] * z[j].abs();
            den += alpha * self.weights[j] * self.weights[j];
        }
        for j in 0..n {
            let shrink = alpha * s * self.weights[j];
            let mag = (z[j].abs() - shrink).max(0.0);
            out[j] = mag.copysign(z[j]);
            if mag == 0.0 {
                out[j] = 0.0;
            }
        }
        s
    }
}

/// Proximal map of `(alpha/2) (sum w_j |v_j|)^2`; returns `(v, s)`.
pub fn prox_sq_l1(z: &[f64], w: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let mut ws = ProxWorkspace::new(w.to_vec());
    let mut out = vec![0.0; z.len()];
    let s = ws.apply(z, alpha, 0.0, &mut out);
    (out, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedMethod {
    /// Accelerated proximal gradient with function-value restart.
    #[default]
    ProxGrad,
    /// Alternating minimization over `d` (closed form) and `u` (Robin solve).
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedOptions {
    pub method: ReducedMethod,
    /// ProxGrad: relative subgradient residual. Alternating: relative
    /// change of `I` between sweeps.
    pub tol: f64,
    pub max_iter: usize,
    /// Inner solves of the alternating method.
    pub cg: CgOptions,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions {
            method: ReducedMethod::ProxGrad,
            tol: 1e-10,
            max_iter: 200_000,
            cg: CgOptions {
                tol: 1e-12,
                max_iter: None,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub u: ScalarField,
    pub report: EnergyReport,
    pub iterations: usize,
    /// Final stopping quantity (see [`ReducedOptions::tol`]).
    pub residual: f64,
    /// Objective after every accepted iterate (up to an additive constant
    /// for ProxGrad, which drops the Dirichlet-only part).
    pub history: Vec<f64>,
}

pub fn solve_reduced(
    domain: &PolygonalDomain,
    mesh: &TriMesh,
    field: &TransversalField,
    m: f64,
    data: &ProblemData,
    opts: ReducedOptions,
) -> Result<ReducedSolution> {
    data.validate(domain)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidDistribution(format!("mass must be positive, got {m}")));
    }
    if mesh.is_glued() {
        return Err(Error::MeshMismatch("reduced problem needs the bulk mesh".into()));
    }
    let sol = match opts.method {
        ReducedMethod::ProxGrad => prox_grad(domain, mesh, m, data, opts)?,
        ReducedMethod::Alternating => alternating(domain, mesh, field, m, data, opts)?,
    };
    if InsulatedBoundary::new(mesh, domain).l1_norm(&sol.u) == 0.0 {
        log::warn!("reduced minimizer has zero trace on the insulated boundary");
    }
    Ok(sol)
}

/// Power iteration for the largest eigenvalue of a symmetric matrix.
fn largest_eigenvalue(a: &crate::fem::CsrMatrix, iterations: usize) -> f64 {
    let n = a.dim();
    if n == 0 {
        return 0.0;
    }
    // deterministic, non-smooth start vector
    let mut x: Vec<f64> = (0..n)
        .map(|i| ((i as u64).wrapping_mul(2_654_435_761) % 4_294_967_296) as f64 / 4_294_967_296.0 - 0.5)
        .collect();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let nx = norm2(&x);
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.mul(&x);
        lambda = crate::fem::sparse::dot(&x, &y);
        x = y;
    }
    lambda
}

fn prox_grad(
    domain: &PolygonalDomain,
    mesh: &TriMesh,
    m: f64,
    data: &ProblemData,
    opts: ReducedOptions,
) -> Result<ReducedSolution> {
    let a_full = assemble_stiffness(mesh, RegionCoefficients::bulk_only());
    let mut b_full = assemble_load(mesh, &data.source)?;
    for (bi, gi) in b_full.iter_mut().zip(assemble_neumann(mesh, data)) {
        *bi += gi;
    }
    let constraints = dirichlet_constraints(mesh, data);
    let sys = ReducedSystem::new(&a_full, &b_full, &constraints);
    let boundary = InsulatedBoundary::new(mesh, domain);

    // split insulated nodes into free (prox variables) and fixed (offset)
    let mut offset = 0.0;
    let mut b_idx = Vec::new();
    let mut b_w = Vec::new();
    let mut free_pos = vec![usize::MAX; mesh.node_count()];
    for (k, &i) in sys.free.iter().enumerate() {
        free_pos[i] = k;
    }
    for (j, &g) in boundary.nodes.iter().enumerate() {
        match constraints.get(&g) {
            Some(&val) => offset += boundary.weights[j] * val.abs(),
            None => {
                b_idx.push(free_pos[g]);
                b_w.push(boundary.weights[j]);
            }
        }
    }
    let a = &sys.matrix;
    let b = &sys.rhs;
    let n = sys.free.len();
    let bnorm = norm2(b);

    let finish = |x: &[f64], iterations: usize, residual: f64, history: Vec<f64>| -> Result<ReducedSolution> {
        let u = sys.expand(x);
        let report = eval_i(mesh, domain, m, data, &u)?;
        Ok(ReducedSolution {
            u,
            report,
            iterations,
            residual,
            history,
        })
    };
    if bnorm == 0.0 && offset == 0.0 {
        return finish(&vec![0.0; n], 0, 0.0, vec![0.0]);
    }

    let mut prox = if b_idx.is_empty() {
        None
    } else {
        Some(ProxWorkspace::new(b_w.clone()))
    };
    let objective = |x: &[f64], ax: &[f64]| -> (f64, f64) {
        let mut q = 0.0;
        for k in 0..n {
            q += 0.5 * x[k] * ax[k] - b[k] * x[k];
        }
        let s = offset + b_idx.iter().zip(&b_w).map(|(&k, w)| w * x[k].abs()).sum::<f64>();
        (q + s * s / (2.0 * m), s)
    };
    // subgradient certificate ||A x - b + B^T xi|| / ||b||
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let certificate = |x: &[f64], ax: &[f64], s: f64| -> f64 {
        let mut g: Vec<f64> = ax.iter().zip(b).map(|(ax, b)| ax - b).collect();
        for (&k, &w) in b_idx.iter().zip(&b_w) {
            let bound = s / m * w;
            if x[k] != 0.0 {
                g[k] += bound * x[k].signum();
            } else {
                g[k] += (-g[k]).clamp(-bound, bound);
            }
        }
        norm2(&g) / scale
    };

    let mut lip = 1.05 * largest_eigenvalue(a, 50);
    if !(lip > 0.0) {
        lip = 1.0;
    }
    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let (mut fx, mut sx) = objective(&x, &ax);
    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t: f64 = 1.0;
    let mut history = vec![fx];
    let mut z = vec![0.0; n];
    let mut zb = vec![0.0; b_idx.len()];
    let mut vb = vec![0.0; b_idx.len()];
    let mut x_new = vec![0.0; n];
    let mut plain = true;
    let mut residual = certificate(&x, &ax, sx);
    for it in 0..opts.max_iter {
        if residual <= opts.tol {
            log::debug!("prox-grad converged after {it} iterations, L = {lip:.4e}");
            return finish(&x, it, residual, history);
        }
        for k in 0..n {
            z[k] = y[k] - (ay[k] - b[k]) / lip;
        }
        x_new.copy_from_slice(&z);
        if let Some(ws) = prox.as_mut() {
            for (j, &k) in b_idx.iter().enumerate() {
                zb[j] = z[k];
            }
            ws.apply(&zb, 1.0 / (m * lip), offset, &mut vb);
            for (j, &k) in b_idx.iter().enumerate() {
                x_new[k] = vb[j];
            }
        }
        let ax_new = a.mul(&x_new);
        let (f_new, s_new) = objective(&x_new, &ax_new);
        let slack = 1e-14 * fx.abs().max(f_new.abs()).max(1.0);
        if f_new > fx + slack {
            if plain {
                // a plain step from x failed: the Lipschitz estimate is too small
                lip *= 2.0;
            }
            t = 1.0;
            y.copy_from_slice(&x);
            ay.copy_from_slice(&ax);
            plain = true;
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        for k in 0..n {
            y[k] = x_new[k] + beta * (x_new[k] - x[k]);
            ay[k] = ax_new[k] + beta * (ax_new[k] - ax[k]);
        }
        x.copy_from_slice(&x_new);
        ax = ax_new;
        fx = f_new;
        sx = s_new;
        t = t_new;
        plain = false;
        history.push(fx);
        residual = certificate(&x, &ax, sx);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

fn alternating(
    domain: &PolygonalDomain,
    mesh: &TriMesh,
    field: &TransversalField,
    m: f64,
    data: &ProblemData,
    opts: ReducedOptions,
) -> Result<ReducedSolution> {
    let limit = LimitOptions {
        quadrature: MassQuadrature::Lumped,
        cg: opts.cg,
    };
    // start from the uniform distribution of mass m
    let unit = InsulationDistribution::uniform(domain, field, 1.0)?;
    let d0 = unit.scaled(field, m / unit.mass())?;
    let mut u = solve_limit(domain, mesh, field, &d0, data, limit)?.u;
    let mut value = eval_i(mesh, domain, m, data, &u)?.total;
    let mut history = vec![value];
    let boundary = InsulatedBoundary::new(mesh, domain);
    for it in 1..=opts.max_iter {
        if boundary.l1_norm(&u) == 0.0 {
            // zero trace: the Robin solution already satisfies the reduced
            // optimality conditions with a zero multiplier
            let report = eval_i(mesh, domain, m, data, &u)?;
            return Ok(ReducedSolution {
                u,
                report,
                iterations: it - 1,
                residual: 0.0,
                history,
            });
        }
        let d = reconstruct_distribution(mesh, domain, field, &u, m, 0.0)?.distribution;
        let next = solve_limit(domain, mesh, field, &d, data, limit)?.u;
        let next_value = eval_i(mesh, domain, m, data, &next)?.total;
        let change = (next_value - value).abs() / value.abs().max(f64::MIN_POSITIVE);
        u = next;
        value = next_value;
        history.push(value);
        if change <= opts.tol {
            let report = eval_i(mesh, domain, m, data, &u)?;
            log::debug!("alternating minimization converged after {it} sweeps");
            return Ok(ReducedSolution {
                u,
                report,
                iterations: it,
                residual: change,
                history,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::triangulate_bulk;
    use crate::testing::{l_shape, slab};
    use proptest::prelude::*;

    #[test]
    fn prox_examples() {
        assert_eq!(prox_sq_l1(&[0.0, 0.0], &[1.0, 2.0], 1.0), (vec![0.0, 0.0], 0.0));
        let (v, s) = prox_sq_l1(&[3.0, 1.0], &[1.0, 1.0], 1.0);
        assert_eq!(v, vec![1.5, 0.0]);
        assert_eq!(s, 1.5);
        let (v, _) = prox_sq_l1(&[3.0, -1.0], &[1.0, 1.0], 1e-300);
        assert_eq!(v, vec![3.0, -1.0]);
    }

    #[test]
    fn prox_with_offset() {
        // minimize 1/2 (v - 2)^2 + 1/2 (1 + |v|)^2: v = 0.5, s = 1.5
        let mut ws = ProxWorkspace::new(vec![1.0]);
        let mut out = [0.0];
        let s = ws.apply(&[2.0], 1.0, 1.0, &mut out);
        assert_eq!(out[0], 0.5);
        assert_eq!(s, 1.5);
        // offset large enough to kill the variable
        let s = ws.apply(&[2.0], 1.0, 3.0, &mut out);
        assert_eq!(out[0], 0.0);
        assert_eq!(s, 3.0);
    }

    fn objective(v: &[f64], z: &[f64], w: &[f64], alpha: f64) -> f64 {
        let s: f64 = v.iter().zip(w).map(|(v, w)| w * v.abs()).sum();
        0.5 * v.iter().zip(z).map(|(v, z)| (v - z).powi(2)).sum::<f64>() + 0.5 * alpha * s * s
    }

    proptest! {
        #[test]
        fn prox_beats_perturbations(
            data in prop::collection::vec((-10.0f64..10.0, 0.1f64..2.0), 1..7),
            alpha in 0.01f64..10.0,
            dirs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 8),
        ) {
            let z: Vec<f64> = data.iter().map(|p| p.0).collect();
            let w: Vec<f64> = data.iter().map(|p| p.1).collect();
            let (v, s) = prox_sq_l1(&z, &w, alpha);
            let s_check: f64 = v.iter().zip(&w).map(|(v, w)| w * v.abs()).sum();
            prop_assert!((s - s_check).abs() <= 1e-12 * (1.0 + s));
            let f0 = objective(&v, &z, &w, alpha);
            for d in &dirs {
                for step in [1e-3, 1e-1] {
                    let p: Vec<f64> = v.iter().zip(d).map(|(v, d)| v + step * d).collect();
                    prop_assert!(objective(&p, &z, &w, alpha) >= f0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn slab_minimizer() {
        let (dom, field, data) = slab();
        let mesh = triangulate_bulk(&dom, 1.0 / 8.0).unwrap();
        for m in [0.5, 2.0] {
            for method in [ReducedMethod::ProxGrad, ReducedMethod::Alternating] {
                let opts = ReducedOptions {
                    method,
                    ..Default::default()
                };
                let sol = solve_reduced(&dom, &mesh, &field, m, &data, opts).unwrap();
                let want = 0.5 / (1.0 + m);
                assert!((sol.report.total - want).abs() < 1e-8, "{method:?} {}", sol.report.total);
                for (p, u) in mesh.nodes.iter().zip(&sol.u) {
                    assert!((u - (1.0 - p[0] / (1.0 + m))).abs() < 1e-7, "{method:?}");
                }
            }
        }
    }

    #[test]
    fn huge_mass_frees_the_boundary() {
        let (dom, field, data) = slab();
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        let sol = solve_reduced(&dom, &mesh, &field, 1e8, &data, ReducedOptions::default()).unwrap();
        assert!(sol.u.iter().all(|&x| (x - 1.0).abs() < 1e-6));
    }

    #[test]
    fn homogeneous_data_gives_zero() {
        let (dom, field, _) = slab();
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        for method in [ReducedMethod::ProxGrad, ReducedMethod::Alternating] {
            let opts = ReducedOptions {
                method,
                ..Default::default()
            };
            let sol = solve_reduced(&dom, &mesh, &field, 1.0, &ProblemData::default(), opts).unwrap();
            assert!(sol.u.iter().all(|&x| x == 0.0));
            assert_eq!(sol.report.total, 0.0);
        }
    }

    #[test]
    fn prox_grad_descends_and_methods_agree() {
        let (dom, field, data) = l_shape();
        let mesh = triangulate_bulk(&dom, 1.0 / 8.0).unwrap();
        let pg = solve_reduced(&dom, &mesh, &field, 0.5, &data, ReducedOptions::default()).unwrap();
        assert!(pg.history.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0)));
        assert!(pg.report.total <= 0.0);
        let alt = solve_reduced(
            &dom,
            &mesh,
            &field,
            0.5,
            &data,
            ReducedOptions {
                method: ReducedMethod::Alternating,
                ..Default::default()
            },
        )
        .unwrap();
        let rel = (pg.report.total - alt.report.total).abs() / pg.report.total.abs();
        assert!(rel < 1e-6, "{} vs {}", pg.report.total, alt.report.total);
    }

    #[test]
    fn rejects_bad_input() {
        let (dom, field, data) = slab();
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        assert!(solve_reduced(&dom, &mesh, &field, 0.0, &data, ReducedOptions::default()).is_err());
        let bad = data.clone().with_flux(1, 1.0);
        assert!(matches!(
            solve_reduced(&dom, &mesh, &field, 1.0, &bad, ReducedOptions::default()),
            Err(Error::UnknownLabel { .. })
        ));
    }
}
