//! Command dispatch behind the `insulation` binary. Every command computes
//! its results in memory first; files are written only after success.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::fem::{CgOptions, EnergyReport, MassQuadrature, ProblemData};
use crate::gamma::{gamma_sweep, lebesgue_limit_check, recovery_sequence, SweepOptions};
use crate::geometry::{InsulationDistribution, PolygonalDomain, TransversalField};
use crate::io::{self, Artifacts, DistributionSpec, RunConfig};
use crate::mesh::{extrude_layer, triangulate_bulk, TriMesh};
use crate::reconstruct::{reconstruct_distribution, Reconstruction};
use crate::reduced::{solve_reduced, ReducedOptions, ReducedSolution};
use crate::robin::{solve_limit, LimitOptions};
use crate::thin_layer::{solve_eps, EpsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    SolveLimit,
    SolveEps,
    SolveReduced,
    Reconstruct,
    GammaSweep,
    CheckLebesgue,
}

/// Summary lines for standard output and the files to write.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub artifacts: Artifacts,
}

impl Outcome {
    fn term(&mut self, name: &str, value: f64) {
        self.lines.push(io::term_line(name, value));
    }

    fn report(&mut self, total_name: &str, r: &EnergyReport) {
        for (name, value) in r.terms() {
            let name = if name == "total" { total_name.to_string() } else { name.to_uppercase() };
            self.term(&name, value);
        }
    }
}

struct Setup<'a> {
    config: &'a RunConfig,
    base: PathBuf,
    out: Option<PathBuf>,
    domain: PolygonalDomain,
    field: TransversalField,
    data: ProblemData,
    mesh: TriMesh,
}

impl Setup<'_> {
    fn cg(&self) -> CgOptions {
        CgOptions {
            tol: self.config.solver.tol,
            max_iter: self.config.solver.max_iter,
        }
    }

    fn reduced_options(&self) -> ReducedOptions {
        let mut o = ReducedOptions {
            method: self.config.solver.method,
            tol: self.config.solver.tol,
            ..Default::default()
        };
        if let Some(n) = self.config.solver.max_iter {
            o.max_iter = n;
        }
        o
    }

    fn solve_reduced(&self) -> Result<ReducedSolution> {
        let m = self.config.require_mass()?;
        solve_reduced(&self.domain, &self.mesh, &self.field, m, &self.data, self.reduced_options())
    }

    fn reconstruct(&self, v: &[f64]) -> Result<Reconstruction> {
        let m = self.config.require_mass()?;
        reconstruct_distribution(&self.mesh, &self.domain, &self.field, v, m, self.config.solver.d_min)
    }

    /// The configured distribution and the quadrature to pair it with.
    /// Reconstructed profiles may vanish at nodes, which only the lumped
    /// Robin term can represent.
    fn distribution(&self) -> Result<(InsulationDistribution, MassQuadrature)> {
        match &self.config.distribution {
            DistributionSpec::Constant(c) => Ok((
                InsulationDistribution::uniform(&self.domain, &self.field, *c)?,
                self.config.solver.quadrature,
            )),
            DistributionSpec::Csv(path) => {
                let knots = io::parse_knots(&io::read_text(&self.base.join(path))?)?;
                Ok((
                    InsulationDistribution::from_knots(&self.domain, &self.field, knots, 0.0)?,
                    self.config.solver.quadrature,
                ))
            }
            DistributionSpec::Reconstruct => {
                let sol = self.solve_reduced()?;
                Ok((self.reconstruct(&sol.u)?.distribution, MassQuadrature::Lumped))
            }
        }
    }

    fn file(&self, name: &str) -> Option<PathBuf> {
        self.out.as_ref().map(|d| d.join(name))
    }

    fn vtk(&self) -> bool {
        self.config.output.vtk
    }
}

/// Runs `command`. Relative paths in the configuration are resolved
/// against `base` (normally the directory of the configuration file).
pub fn run(command: Command, config: &RunConfig, base: &Path, field_csv: Option<&Path>) -> Result<Outcome> {
    if matches!(command, Command::SolveReduced | Command::Reconstruct) {
        config.require_mass()?;
    }
    if command == Command::SolveEps {
        config.require_epsilon()?;
    }
    let domain = config.domain.build()?;
    let field = TransversalField::build(&domain, config.field)?;
    let data = config.problem_data(base)?;
    data.validate(&domain)?;
    let mesh = triangulate_bulk(&domain, config.solver.h)?;
    let s = Setup {
        config,
        base: base.to_path_buf(),
        out: config.output.dir.as_ref().map(|d| base.join(d)),
        domain,
        field,
        data,
        mesh,
    };
    let mut o = Outcome::default();
    match command {
        Command::Mesh => mesh_cmd(&s, &mut o)?,
        Command::SolveLimit => {
            let (d, quadrature) = s.distribution()?;
            let sol = solve_limit(
                &s.domain,
                &s.mesh,
                &s.field,
                &d,
                &s.data,
                LimitOptions { quadrature, cg: s.cg() },
            )?;
            o.report("E_LIMIT", &sol.report);
            o.term("CG_ITERATIONS", sol.iterations as f64);
            field_outputs(&s, &mut o, "limit", &s.mesh, &sol.u);
        }
        Command::SolveEps => {
            let eps = config.require_epsilon()?;
            let (d, _) = s.distribution()?;
            let glued = extrude_layer(&s.mesh, &s.domain, &s.field, &d, eps, config.solver.n_t)?;
            let sol = solve_eps(
                &s.domain,
                &glued,
                eps,
                &s.data,
                EpsOptions {
                    cg: s.cg(),
                    ..Default::default()
                },
            )?;
            o.report("E_EPS", &sol.report);
            o.term("POINCARE_WORST", sol.poincare.worst_ratio);
            o.term("POINCARE_FAILURES", sol.poincare.failures.len() as f64);
            o.term("COERCIVITY", sol.coercivity.total());
            o.term("CG_ITERATIONS", sol.iterations as f64);
            field_outputs(&s, &mut o, "eps", &glued, &sol.u);
        }
        Command::SolveReduced => {
            let sol = s.solve_reduced()?;
            o.report("I_REDUCED", &sol.report);
            o.term("ITERATIONS", sol.iterations as f64);
            o.term("RESIDUAL", sol.residual);
            field_outputs(&s, &mut o, "reduced", &s.mesh, &sol.u);
        }
        Command::Reconstruct => {
            let v = match field_csv {
                Some(path) => io::parse_nodal_field(&io::read_text(path)?)?,
                None => s.solve_reduced()?.u,
            };
            let r = s.reconstruct(&v)?;
            o.term("MASS", r.mass);
            o.term("D_MIN", r.nodal.iter().cloned().fold(f64::INFINITY, f64::min));
            o.term("D_MAX", r.nodal.iter().cloned().fold(0.0, f64::max));
            o.term("BELOW_FLOOR", r.below_floor.len() as f64);
            if let Some(p) = s.file("reconstruct.csv") {
                o.artifacts.add(p, io::reconstruction_csv(&r, &s.mesh.nodes));
            }
        }
        Command::GammaSweep => {
            let (d, _) = s.distribution()?;
            let opts = SweepOptions {
                n_t: config.solver.n_t,
                refine: config.solver.refine,
                cg: s.cg(),
            };
            let r = gamma_sweep(&s.domain, &s.field, &d, &s.data, &config.solver.epsilon_list, config.solver.h, opts)?;
            o.term("WEIGHTED_LENGTH", r.weighted_length);
            for level in &r.levels {
                o.term(&format!("E_LIMIT[h={}]", level.h), level.limit);
                for row in &level.rows {
                    let tag = format!("[h={},eps={}]", level.h, row.eps);
                    o.term(&format!("E_EPS{tag}"), row.solution);
                    o.term(&format!("E_RECOVERY{tag}"), row.recovery);
                    o.term(&format!("GAP_SOLUTION{tag}"), row.gap_solution);
                    o.term(&format!("GAP_RECOVERY{tag}"), row.gap_recovery);
                }
            }
            if let Some(p) = s.file("gamma_sweep.csv") {
                o.artifacts.add(p, io::sweep_csv(&r));
            }
        }
        Command::CheckLebesgue => {
            let (d, quadrature) = s.distribution()?;
            let limit = solve_limit(
                &s.domain,
                &s.mesh,
                &s.field,
                &d,
                &s.data,
                LimitOptions { quadrature, cg: s.cg() },
            )?;
            let eps0 = config.solver.epsilon_list[0];
            let glued = extrude_layer(&s.mesh, &s.domain, &s.field, &d, eps0, config.solver.n_t)?;
            // limit temperature continued constantly along the fibers
            let mut v = recovery_sequence(&limit.u, &glued)?;
            for (i, f) in glued.fibers.iter().enumerate().skip(glued.bulk_nodes) {
                v[i] = limit.u[f.expect("layer node has fiber coordinates").base];
            }
            let t = lebesgue_limit_check(
                &s.domain,
                &s.field,
                &d,
                &glued,
                &v,
                |_| 1.0,
                &config.solver.epsilon_list,
                config.solver.lebesgue_p,
            )?;
            o.term("LIMIT", t.rows[0].limit);
            for row in &t.rows {
                o.term(&format!("VALUE[eps={}]", row.eps), row.value);
                o.term(&format!("ERROR[eps={}]", row.eps), row.error);
            }
            if let Some(p) = s.file("lebesgue.csv") {
                o.artifacts.add(p, io::lebesgue_csv(&t));
            }
        }
    }
    Ok(o)
}

fn mesh_cmd(s: &Setup, o: &mut Outcome) -> Result<()> {
    o.term("NODES", s.mesh.node_count() as f64);
    o.term("TRIANGLES", s.mesh.triangle_count() as f64);
    o.term("H_MAX", s.mesh.max_edge_length());
    o.term("MIN_AREA", s.mesh.min_signed_area());
    if let Some(p) = s.file("mesh.vtk") {
        o.artifacts.add(p, io::vtk_legacy(&s.mesh, "bulk mesh", &[]));
    }
    if let Some(eps) = s.config.solver.epsilon {
        let (d, _) = s.distribution()?;
        let glued = extrude_layer(&s.mesh, &s.domain, &s.field, &d, eps, s.config.solver.n_t)?;
        o.term("GLUED_NODES", glued.node_count() as f64);
        o.term("GLUED_TRIANGLES", glued.triangle_count() as f64);
        o.term("GLUED_MIN_AREA", glued.min_signed_area());
        if let Some(p) = s.file("glued.vtk") {
            o.artifacts.add(p, io::vtk_legacy(&glued, "glued mesh", &[]));
        }
    }
    Ok(())
}

fn field_outputs(s: &Setup, o: &mut Outcome, stem: &str, mesh: &TriMesh, u: &[f64]) {
    if let Some(p) = s.file(&format!("{stem}.csv")) {
        o.artifacts.add(p, io::nodal_field_csv(&mesh.nodes, u));
    }
    if s.vtk() {
        if let Some(p) = s.file(&format!("{stem}.vtk")) {
            o.artifacts.add(p, io::vtk_legacy(mesh, stem, &[("u", u)]));
        }
    }
}
