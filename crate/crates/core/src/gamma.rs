//! Numerical evidence for the convergence of the layer energies to the
//! Robin limit: epsilon sweeps with recovery sequences and the boundary
//! layer Lebesgue limit.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{eval_e_eps, CgOptions, ProblemData, ScalarField};
use crate::geometry::{
    cross, layer_area, layer_jacobian, layer_point, sub, BoundaryPoint, InsulationDistribution, Point,
    PolygonalDomain, TransversalField,
};
use crate::mesh::{extrude_layer, node_position, triangulate_bulk, TriMesh};
use crate::quadrature::gauss_legendre;
use crate::robin::{solve_limit, LimitOptions};
use crate::thin_layer::{solve_eps, EpsOptions};

/// Competitor on the glued mesh built from a bulk field: bulk nodes copy
/// `u`, a layer node at offset `t` on the fiber of height `H` over base
/// node `s` gets `u(s) (1 - t / H)`, which vanishes on the outer boundary.
pub fn recovery_sequence(u: &[f64], glued: &TriMesh) -> Result<ScalarField> {
    if glued.layer.is_none() {
        return Err(Error::MeshMismatch("recovery sequence needs a glued mesh".into()));
    }
    if u.len() != glued.bulk_nodes {
        return Err(Error::MeshMismatch(format!(
            "field has {} values, bulk mesh has {} nodes",
            u.len(),
            glued.bulk_nodes
        )));
    }
    let mut v = u.to_vec();
    for fiber in glued.fibers[glued.bulk_nodes..].iter() {
        let f = fiber.expect("layer node has fiber coordinates");
        let value = if f.level == glued.layer.as_ref().unwrap().levels {
            0.0
        } else {
            u[f.base] * (1.0 - f.t / f.height)
        };
        v.push(value);
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub n_t: usize,
    /// Also run the sweep on the once-refined mesh `h / 2`.
    pub refine: bool,
    pub cg: CgOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            n_t: 4,
            refine: true,
            cg: CgOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `E_eps(u_eps)`.
    pub solution: f64,
    /// `E_eps(v_eps)` for the recovery competitor.
    pub recovery: f64,
    pub gap_solution: f64,
    pub gap_recovery: f64,
    pub coercivity: f64,
    /// Exact `|Sigma_eps| / eps`.
    pub area_ratio: f64,
    pub poincare_worst: f64,
    pub poincare_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLevel {
    pub h: f64,
    /// `E^d(u)` of the limit problem on the same bulk mesh.
    pub limit: f64,
    pub rows: Vec<SweepRow>,
    /// Observed orders of the two gaps between consecutive rows.
    pub order_solution: Vec<f64>,
    pub order_recovery: Vec<f64>,
}

impl SweepLevel {
    /// Both gaps strictly decrease along the sweep.
    pub fn gaps_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].gap_solution < w[0].gap_solution && w[1].gap_recovery < w[0].gap_recovery
        })
    }

    pub fn final_relative_gaps(&self) -> (f64, f64) {
        let last = self.rows.last().expect("sweep has rows");
        let scale = self.limit.abs();
        (last.gap_solution / scale, last.gap_recovery / scale)
    }

    pub fn coercivity_bounded(&self) -> bool {
        let max = self.rows.iter().map(|r| r.coercivity).fold(0.0, f64::max);
        self.rows.iter().all(|r| r.coercivity.is_finite() && r.coercivity <= 10.0 * max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSweepReport {
    /// `int (k.n) d ds`, the limit of the area ratios.
    pub weighted_length: f64,
    pub levels: Vec<SweepLevel>,
}

fn observed_orders(eps: &[f64], gaps: &[f64]) -> Vec<f64> {
    eps.windows(2)
        .zip(gaps.windows(2))
        .map(|(e, g)| (g[0] / g[1]).ln() / (e[0] / e[1]).ln())
        .collect()
}

/// Solves the layer problems for every `eps` in `eps_list` (strictly
/// decreasing) and compares them with the limit problem.
///
/// Fails with [`Error::SandwichViolation`] if a discrete layer minimizer
/// has more energy than the recovery competitor.
pub fn gamma_sweep(
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    data: &ProblemData,
    eps_list: &[f64],
    h: f64,
    opts: SweepOptions,
) -> Result<GammaSweepReport> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) || eps_list[0] <= 0.0 {
        return Err(Error::schema("epsilon_list", "must be non-empty, positive and strictly decreasing"));
    }
    if eps_list.iter().any(|&e| e <= 0.0) {
        return Err(Error::schema("epsilon_list", "values must be positive"));
    }
    let weighted_length = crate::geometry::weighted_insulated_integral(domain, field, d, |_| 1.0);
    let mut hs = vec![h];
    if opts.refine {
        hs.push(0.5 * h);
    }
    let mut levels = Vec::new();
    for h in hs {
        let bulk = triangulate_bulk(domain, h)?;
        let limit = solve_limit(
            domain,
            &bulk,
            field,
            d,
            data,
            LimitOptions {
                cg: opts.cg,
                ..Default::default()
            },
        )?;
        let rows: Vec<Result<SweepRow>> = eps_list
            .par_iter()
            .map(|&eps| {
                let glued = extrude_layer(&bulk, domain, field, d, eps, opts.n_t)?;
                let sol = solve_eps(
                    domain,
                    &glued,
                    eps,
                    data,
                    EpsOptions {
                        cg: opts.cg,
                        ..Default::default()
                    },
                )?;
                let v = recovery_sequence(&limit.u, &glued)?;
                let recovery = eval_e_eps(&glued, data, &v)?.total;
                let solution = sol.report.total;
                if solution > recovery + 1e-12 * (1.0 + recovery.abs()) {
                    return Err(Error::SandwichViolation {
                        epsilon: eps,
                        solution,
                        recovery,
                    });
                }
                Ok(SweepRow {
                    eps,
                    solution,
                    recovery,
                    gap_solution: (solution - limit.report.total).abs(),
                    gap_recovery: (recovery - limit.report.total).abs(),
                    coercivity: sol.coercivity.total(),
                    area_ratio: layer_area(domain, field, d, eps)? / eps,
                    poincare_worst: sol.poincare.worst_ratio,
                    poincare_passed: sol.poincare.passed(),
                })
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let e: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let gs: Vec<f64> = rows.iter().map(|r| r.gap_solution).collect();
        let gr: Vec<f64> = rows.iter().map(|r| r.gap_recovery).collect();
        levels.push(SweepLevel {
            h,
            limit: limit.report.total,
            order_solution: observed_orders(&e, &gs),
            order_recovery: observed_orders(&e, &gr),
            rows,
        });
    }
    Ok(GammaSweepReport {
        weighted_length,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LebesgueRow {
    pub eps: f64,
    /// `(1/eps) int_{Sigma_eps} a |v|^p`.
    pub value: f64,
    /// `int (k.n) d a |v|^p ds`.
    pub limit: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LebesgueTable {
    pub p: u32,
    pub rows: Vec<LebesgueRow>,
    pub orders: Vec<f64>,
}

impl LebesgueTable {
    /// Errors vanish, or decay with at least `min_order` between every
    /// pair of consecutive rows.
    pub fn converges(&self, min_order: f64) -> bool {
        let tiny = |e: f64, l: f64| e <= 1e-12 * (1.0 + l.abs());
        if self.rows.iter().all(|r| tiny(r.error, r.limit)) {
            return true;
        }
        self.rows.windows(2).zip(&self.orders).all(|(w, &o)| tiny(w[1].error, w[1].limit) || o >= min_order)
    }
}

/// Point location in the layer of a glued mesh, restricted to the cells
/// over one base edge.
struct LayerLocator<'a> {
    mesh: &'a TriMesh,
    /// Per insulated facet: `(offset_a, offset_b, triangles)` of its base edges.
    edges: HashMap<usize, Vec<(f64, f64, Vec<usize>)>>,
}

impl<'a> LayerLocator<'a> {
    fn new(mesh: &'a TriMesh, domain: &PolygonalDomain) -> Result<Self> {
        let layer = mesh
            .layer
            .as_ref()
            .ok_or_else(|| Error::MeshMismatch("layer check needs a glued mesh".into()))?;
        let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
        for c in &layer.cells {
            by_edge.entry(c.base_edge).or_default().extend(c.triangles);
        }
        let mut edges: HashMap<usize, Vec<(f64, f64, Vec<usize>)>> = HashMap::new();
        let mut keys: Vec<usize> = by_edge.keys().copied().collect();
        keys.sort_unstable();
        for e in keys {
            let edge = mesh.edges[e];
            let oa = node_position(mesh, domain, edge.nodes[0], edge.facet).offset;
            let ob = node_position(mesh, domain, edge.nodes[1], edge.facet).offset;
            edges
                .entry(edge.facet)
                .or_default()
                .push((oa, ob, by_edge.remove(&e).unwrap()));
        }
        Ok(LayerLocator { mesh, edges })
    }

    /// Base edges over `facet` as `(offset_a, offset_b)`.
    fn spans(&self, facet: usize) -> Vec<(f64, f64)> {
        self.edges
            .get(&facet)
            .map(|v| v.iter().map(|e| (e.0, e.1)).collect())
            .unwrap_or_default()
    }

    /// Value of the P1 field `v` at `x`, searched among the layer cells
    /// over the base edge containing offset `s`. Points marginally outside
    /// every cell (the mesh approximates the curved layer) use the closest
    /// triangle with clamped barycentric coordinates.
    fn eval(&self, v: &[f64], facet: usize, s: f64, x: Point) -> f64 {
        let list = &self.edges[&facet];
        let (_, _, tris) = list
            .iter()
            .find(|(a, b, _)| s >= a.min(*b) && s <= a.max(*b))
            .unwrap_or_else(|| &list[0]);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &t in tris {
            let p = self.mesh.triangle_points(t);
            let area = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            let mut lam = [0.0; 3];
            for i in 0..3 {
                let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                lam[i] = cross(sub(b, a), sub(x, a)) / area;
            }
            let worst = lam.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst > best.0 {
                let clamped: Vec<f64> = lam.iter().map(|l| l.max(0.0)).collect();
                let sum: f64 = clamped.iter().sum();
                let tri = self.mesh.triangles[t];
                let val = (0..3).map(|i| clamped[i] / sum * v[tri[i]]).sum();
                best = (worst, val);
                if worst >= 0.0 {
                    break;
                }
            }
        }
        best.1
    }
}

/// Compares `(1/eps) int_{Sigma_eps} a |v|^p` with its limit
/// `int (k.n) d a |v|^p ds` for a P1 field `v` on the layer of `glued`
/// (extruded with the largest `eps` of the list or more).
#[allow(clippy::too_many_arguments)]
pub fn lebesgue_limit_check(
    domain: &PolygonalDomain,
    field: &TransversalField,
    d: &InsulationDistribution,
    glued: &TriMesh,
    v: &[f64],
    a: impl Fn(BoundaryPoint) -> f64 + Sync,
    eps_list: &[f64],
    p: u32,
) -> Result<LebesgueTable> {
    if !(p == 1 || p == 2) {
        return Err(Error::schema("p", "must be 1 or 2"));
    }
    if v.len() != glued.node_count() {
        return Err(Error::MeshMismatch(format!(
            "field has {} values, mesh has {} nodes",
            v.len(),
            glued.node_count()
        )));
    }
    let eps0 = glued.eps().ok_or_else(|| Error::MeshMismatch("layer check needs a glued mesh".into()))?;
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > 0.0 && e <= eps0 * (1.0 + 1e-12))) {
        return Err(Error::schema("epsilon_list", "values must lie in (0, eps of the mesh]"));
    }
    let levels = glued.layer.as_ref().unwrap().levels;
    let loc = LayerLocator::new(glued, domain)?;
    let pow = |x: f64| if p == 1 { x.abs() } else { x * x };
    let (gs, gw) = gauss_legendre(5);
    let (gt, gtw) = gauss_legendre(4);

    // boundary quadrature nodes: 5 Gauss points per base edge
    let mut nodes = Vec::new();
    for facet in domain.insulated_facets() {
        for (oa, ob) in loc.spans(facet) {
            let len = (ob - oa).abs();
            for (x, w) in gs.iter().zip(&gw) {
                nodes.push((BoundaryPoint { facet, offset: oa + x * (ob - oa) }, w * len));
            }
        }
    }
    let limit: f64 = nodes
        .iter()
        .map(|&(bp, w)| {
            let x = layer_point(field, bp, 0.0);
            w * field.dot_normal(bp) * d.eval(bp) * a(bp) * pow(loc.eval(v, bp.facet, bp.offset, x))
        })
        .sum();

    let rows: Vec<Result<LebesgueRow>> = eps_list
        .par_iter()
        .map(|&eps| {
            let mut total = 0.0;
            for &(bp, w) in &nodes {
                let top = eps * d.eval(bp);
                if top == 0.0 {
                    continue;
                }
                // split the fiber where the mesh levels of the eps0 layer lie
                let h0 = eps0 * d.eval(bp);
                let mut cuts = vec![0.0];
                for i in 1..levels {
                    let c = h0 * i as f64 / levels as f64;
                    if c < top {
                        cuts.push(c);
                    }
                }
                cuts.push(top);
                let mut fiber = 0.0;
                for seg in cuts.windows(2) {
                    let len = seg[1] - seg[0];
                    for (x, wt) in gt.iter().zip(&gtw) {
                        let t = seg[0] + x * len;
                        let pt = layer_point(field, bp, t);
                        let jac = layer_jacobian(field, bp, t)?;
                        fiber += wt * len * jac * pow(loc.eval(v, bp.facet, bp.offset, pt));
                    }
                }
                total += w * a(bp) * fiber;
            }
            let value = total / eps;
            Ok(LebesgueRow {
                eps,
                value,
                limit,
                error: (value - limit).abs(),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let e: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let err: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(LebesgueTable {
        p,
        orders: observed_orders(&e, &err),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FacetLabel::*, FieldMode};
    use crate::testing::{l_shape, slab_with};

    #[test]
    fn recovery_cutoff_is_linear_along_fibers() {
        let (dom, field, d, _) = slab_with(1.0);
        let bulk = triangulate_bulk(&dom, 0.25).unwrap();
        let glued = extrude_layer(&bulk, &dom, &field, &d, 0.1, 2).unwrap();
        let u: Vec<f64> = bulk.nodes.iter().map(|p| 1.0 + p[0]).collect();
        let v = recovery_sequence(&u, &glued).unwrap();
        for (i, f) in glued.fibers.iter().enumerate().skip(bulk.node_count()) {
            let f = f.unwrap();
            let want = [2.0, 1.0, 0.0][f.level];
            assert_eq!(v[i], want);
        }
        assert_eq!(&v[..bulk.node_count()], &u[..]);
        assert!(recovery_sequence(&u, &bulk).is_err());
        assert!(recovery_sequence(&u[1..], &glued).is_err());
    }

    #[test]
    fn slab_gaps_vanish() {
        let (dom, field, d, data) = slab_with(1.0);
        let eps = [0.2, 0.1, 0.05];
        let r = gamma_sweep(&dom, &field, &d, &data, &eps, 0.125, SweepOptions::default()).unwrap();
        assert_eq!(r.levels.len(), 2);
        for level in &r.levels {
            assert!((level.limit - 0.25).abs() < 1e-10);
            for row in &level.rows {
                assert!(row.gap_solution < 1e-9 && row.gap_recovery < 1e-9, "{row:?}");
                assert!(row.solution <= row.recovery + 1e-12);
                assert!((row.area_ratio - 1.0).abs() < 1e-14);
            }
        }
        // doubling d: the limit follows 1 / (2 (1 + 2c))
        let d2 = d.scaled(&field, 2.0).unwrap();
        let r = gamma_sweep(&dom, &field, &d2, &data, &eps, 0.25, SweepOptions::default()).unwrap();
        assert!((r.levels[0].limit - 0.5 / 3.0).abs() < 1e-10);
        assert!(r.levels[0].rows.iter().all(|row| row.gap_solution < 1e-9));
    }

    #[test]
    fn sweep_rejects_bad_lists_and_large_eps() {
        let (dom, field, d, data) = slab_with(1.0);
        assert!(gamma_sweep(&dom, &field, &d, &data, &[0.1, 0.2], 0.25, SweepOptions::default()).is_err());
        assert!(gamma_sweep(&dom, &field, &d, &data, &[], 0.25, SweepOptions::default()).is_err());
        let slot = PolygonalDomain::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.6, 1.0], [0.5, 0.5], [0.4, 1.0], [0.0, 1.0]],
            vec![Insulated; 7],
        )
        .unwrap();
        let k = TransversalField::build(&slot, FieldMode::Bisector).unwrap();
        let ds = InsulationDistribution::uniform(&slot, &k, 1.0).unwrap();
        let err = gamma_sweep(&slot, &k, &ds, &ProblemData::default(), &[0.5, 0.1], 0.1, SweepOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::NonInjectiveLayer(_)));
    }

    #[test]
    fn lebesgue_exact_on_flat_layer() {
        let (dom, field, d, _) = slab_with(1.0);
        let bulk = triangulate_bulk(&dom, 0.25).unwrap();
        let glued = extrude_layer(&bulk, &dom, &field, &d, 0.2, 3).unwrap();
        // v = 1 + y, constant along the horizontal fibers
        let v: Vec<f64> = glued.nodes.iter().map(|p| 1.0 + p[1]).collect();
        for p in [1, 2] {
            let t = lebesgue_limit_check(&dom, &field, &d, &glued, &v, |_| 1.0, &[0.2, 0.1, 0.05], p).unwrap();
            let want = if p == 1 { 1.5 } else { 7.0 / 3.0 };
            for r in &t.rows {
                assert!((r.value - want).abs() < 1e-12, "{r:?}");
                assert!((r.limit - want).abs() < 1e-12);
            }
            assert!(t.converges(0.9));
        }
        let zero = vec![0.0; glued.node_count()];
        let t = lebesgue_limit_check(&dom, &field, &d, &glued, &zero, |_| 1.0, &[0.2, 0.1], 1).unwrap();
        assert!(t.rows.iter().all(|r| r.value == 0.0 && r.limit == 0.0));
        assert!(lebesgue_limit_check(&dom, &field, &d, &glued, &zero, |_| 1.0, &[0.4], 1).is_err());
    }

    #[test]
    fn lebesgue_measure_convergence_on_l_shape() {
        let (dom, field, _) = l_shape();
        let d = InsulationDistribution::uniform(&dom, &field, 1.0).unwrap();
        let bulk = triangulate_bulk(&dom, 0.1).unwrap();
        let glued = extrude_layer(&bulk, &dom, &field, &d, 0.1, 4).unwrap();
        let ones = vec![1.0; glued.node_count()];
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let t = lebesgue_limit_check(&dom, &field, &d, &glued, &ones, |_| 1.0, &eps, 1).unwrap();
        for r in &t.rows {
            let exact = layer_area(&dom, &field, &d, r.eps).unwrap() / r.eps;
            // k is not polynomial along a facet, so both sides carry
            // quadrature error; the layer quadrature is the finer one
            assert!((r.value - exact).abs() < 1e-3 * exact, "{r:?} vs {exact}");
        }
        assert!(t.converges(0.9), "{t:?}");
    }
}
