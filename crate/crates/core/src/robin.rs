//! The limit problem: minimize `E^d`, i.e. solve the Poisson problem with
//! the Robin law `(k.n) d du/dn + u = 0` on the insulated boundary.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_neumann, assemble_stiffness, dirichlet_constraints, eval_e_limit, robin_mass,
    solve_spd, CgOptions, EnergyReport, MassQuadrature, ProblemData, ReducedSystem, RegionCoefficients,
    ScalarField,
};
use crate::geometry::{InsulationDistribution, PolygonalDomain, TransversalField};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LimitOptions {
    pub quadrature: MassQuadrature,
    pub cg: CgOptions,
}

#[derive(Debug, Clone)]
pub struct LimitSolution {
    pub u: ScalarField,
    pub report: EnergyReport,
    pub iterations: usize,
    /// Relative residual of the free-node system.
    pub residual: f64,
}

pub fn solve_limit(
    domain: &PolygonalDomain,
    mesh: &TriMesh,
    field: &TransversalField,
    d: &InsulationDistribution,
    data: &ProblemData,
    opts: LimitOptions,
) -> Result<LimitSolution> {
    data.validate(domain)?;
    if mesh.is_glued() {
        return Err(Error::MeshMismatch("limit problem needs the bulk mesh".into()));
    }
    let robin = robin_mass(mesh, domain, field, d, opts.quadrature)?;
    let a = assemble_stiffness(mesh, RegionCoefficients::bulk_only()).add_scaled(1.0, &robin.matrix);
    let mut b = assemble_load(mesh, &data.source)?;
    for (bi, gi) in b.iter_mut().zip(assemble_neumann(mesh, data)) {
        *bi += gi;
    }
    let mut constraints: BTreeMap<usize, f64> = dirichlet_constraints(mesh, data);
    for &i in &robin.pinned {
        constraints.entry(i).or_insert(0.0);
    }
    let sys = ReducedSystem::new(&a, &b, &constraints);
    let out = solve_spd(&sys.matrix, &sys.rhs, None, opts.cg)?;
    let u = sys.expand(&out.x);
    let report = eval_e_limit(mesh, domain, field, d, data, &u, opts.quadrature)?;
    log::debug!(
        "limit solve: {} free nodes, {} CG iterations, residual {:.2e}",
        sys.free.len(),
        out.iterations,
        out.residual
    );
    Ok(LimitSolution {
        u,
        report,
        iterations: out.iterations,
        residual: out.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Source;
    use crate::geometry::{FacetLabel::*, FieldMode};
    use crate::mesh::triangulate_bulk;
    use crate::testing::slab_with;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slab_solution_is_linear() {
        for c in [0.5, 1.0, 2.0] {
            let (dom, field, d, data) = slab_with(c);
            let mesh = triangulate_bulk(&dom, 1.0 / 16.0).unwrap();
            let sol = solve_limit(&dom, &mesh, &field, &d, &data, LimitOptions::default()).unwrap();
            for (p, u) in mesh.nodes.iter().zip(&sol.u) {
                assert!((u - (1.0 - p[0] / (1.0 + c))).abs() < 1e-10);
            }
            assert!((sol.report.total - 0.5 / (1.0 + c)).abs() < 1e-10);
        }
    }

    #[test]
    fn homogeneous_data_gives_zero() {
        let (dom, field, d, _) = slab_with(1.0);
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        let sol = solve_limit(&dom, &mesh, &field, &d, &ProblemData::default(), LimitOptions::default()).unwrap();
        assert!(sol.u.iter().all(|&x| x == 0.0));
        assert_eq!(sol.report.total, 0.0);
    }

    #[test]
    fn thick_insulation_kills_the_robin_term() {
        let (dom, field, d, data) = slab_with(1e8);
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        let sol = solve_limit(&dom, &mesh, &field, &d, &data, LimitOptions::default()).unwrap();
        assert!(sol.report.interface <= 1e-6);
        assert!(sol.u.iter().all(|&x| (x - 1.0).abs() < 1e-6));
    }

    #[test]
    fn lumped_and_consistent_agree_on_constant_weights() {
        let (dom, field, d, data) = slab_with(0.7);
        let mesh = triangulate_bulk(&dom, 0.125).unwrap();
        let c = solve_limit(&dom, &mesh, &field, &d, &data, LimitOptions::default()).unwrap();
        let opts = LimitOptions {
            quadrature: MassQuadrature::Lumped,
            ..Default::default()
        };
        let l = solve_limit(&dom, &mesh, &field, &d, &data, opts).unwrap();
        assert!((c.report.total - l.report.total).abs() < 1e-12);
    }

    #[test]
    fn square_solution_has_dihedral_symmetry() {
        let dom = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let field = TransversalField::build(&dom, FieldMode::Bisector).unwrap();
        let d = InsulationDistribution::uniform(&dom, &field, 0.3).unwrap();
        let mesh = triangulate_bulk(&dom, 1.0 / 16.0).unwrap();
        let data = ProblemData::new(Source::Uniform(1.0));
        let sol = solve_limit(&dom, &mesh, &field, &d, &data, LimitOptions::default()).unwrap();
        let lookup: std::collections::HashMap<(i64, i64), f64> = mesh
            .nodes
            .iter()
            .zip(&sol.u)
            .map(|(p, &u)| (((p[0] * 16.0).round() as i64, (p[1] * 16.0).round() as i64), u))
            .collect();
        let scale = sol.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // the grid's diagonals all run one way, so only the half-turn and
        // one diagonal mirror map the mesh to itself; the other two
        // symmetries hold up to discretization error
        for (&(i, j), &u) in &lookup {
            for image in [(16 - i, 16 - j), (16 - j, 16 - i)] {
                assert!((lookup[&image] - u).abs() < 1e-8 * scale, "{image:?}");
            }
            for image in [(16 - i, j), (i, 16 - j), (j, i)] {
                assert!((lookup[&image] - u).abs() < 2e-2 * scale, "{image:?}");
            }
        }
    }

    #[test]
    fn discrete_solution_is_minimal() {
        let dom = PolygonalDomain::l_shape(Insulated).unwrap();
        let field = TransversalField::build(&dom, FieldMode::Bisector).unwrap();
        let d = InsulationDistribution::uniform(&dom, &field, 0.5).unwrap();
        let mesh = triangulate_bulk(&dom, 0.1).unwrap();
        let data = ProblemData::new(Source::Uniform(1.0));
        let sol = solve_limit(&dom, &mesh, &field, &d, &data, LimitOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let v: Vec<f64> = sol.u.iter().map(|u| u + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
            let e = eval_e_limit(&mesh, &dom, &field, &d, &data, &v, MassQuadrature::Consistent).unwrap();
            assert!(e.total >= sol.report.total);
        }
    }

    #[test]
    fn zero_thickness_is_rejected() {
        let (dom, field, _, data) = slab_with(1.0);
        let d = InsulationDistribution::uniform(&dom, &field, 0.0).unwrap();
        let mesh = triangulate_bulk(&dom, 0.25).unwrap();
        let err = solve_limit(&dom, &mesh, &field, &d, &data, LimitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonpositiveWeight { .. }));
    }
}
