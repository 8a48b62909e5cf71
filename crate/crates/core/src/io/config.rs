use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fem::{MassQuadrature, ProblemData, Source};
use crate::geometry::{FacetLabel, FieldMode, Point, PolygonalDomain};
use crate::reduced::ReducedMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub vertices: Vec<Point>,
    /// `labels[i]` belongs to the facet from vertex `i` to vertex `i + 1`.
    pub labels: Vec<FacetLabel>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<PolygonalDomain> {
        PolygonalDomain::new(self.vertices.clone(), self.labels.clone())
    }
}

/// Thickness profile along `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Constant(f64),
    /// CSV with columns `facet,offset,d`.
    Csv(PathBuf),
    /// Optimal profile for the configured mass.
    Reconstruct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Uniform source `f`.
    #[serde(default)]
    pub source: f64,
    /// Per-triangle source (one value per bulk triangle); replaces `source`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_csv: Option<PathBuf>,
    /// Neumann flux `g` per facet index.
    #[serde(default)]
    pub flux: BTreeMap<usize, f64>,
    /// Dirichlet value `u_D` per facet index.
    #[serde(default)]
    pub dirichlet: BTreeMap<usize, f64>,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            source: 0.0,
            source_csv: None,
            flux: BTreeMap::new(),
            dirichlet: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Target mesh size.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Layer levels along each fiber.
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    /// Layer thickness scale for `solve-eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Strictly decreasing sweep for `gamma-sweep` and `check-lebesgue`.
    #[serde(default = "default_eps_list")]
    pub epsilon_list: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub method: ReducedMethod,
    #[serde(default)]
    pub quadrature: MassQuadrature,
    /// Floor below which reconstructed thicknesses are reported.
    #[serde(default)]
    pub d_min: f64,
    /// Exponent for `check-lebesgue` (1 or 2).
    #[serde(default = "default_p")]
    pub lebesgue_p: u32,
    /// Also run the sweep at `h / 2`.
    #[serde(default = "default_true")]
    pub refine: bool,
}

fn default_h() -> f64 {
    0.0625
}
fn default_n_t() -> usize {
    4
}
fn default_eps_list() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}
fn default_tol() -> f64 {
    1e-10
}
fn default_p() -> u32 {
    1
}
fn default_true() -> bool {
    true
}

impl Default for SolverSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all solver fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for CSV and VTK artifacts; nothing is written without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub field: FieldMode,
    pub distribution: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    /// The mass `m`, which reduced solves and reconstructions need.
    pub fn require_mass(&self) -> Result<f64> {
        self.mass.ok_or_else(|| Error::schema("mass", "required for this command"))
    }

    pub fn require_epsilon(&self) -> Result<f64> {
        self.solver
            .epsilon
            .ok_or_else(|| Error::schema("solver.epsilon", "required for this command"))
    }

    /// Problem data; per-triangle sources are read relative to `base`.
    pub fn problem_data(&self, base: &std::path::Path) -> Result<ProblemData> {
        let source = match &self.data.source_csv {
            Some(path) => {
                let path = base.join(path);
                let text = read_text(&path)?;
                Source::PerTriangle(super::table::parse_triangle_values(&text)?)
            }
            None => Source::Uniform(self.data.source),
        };
        let mut data = ProblemData::new(source);
        for (&f, &g) in &self.data.flux {
            data = data.with_flux(f, g);
        }
        for (&f, &u) in &self.data.dirichlet {
            data = data.with_dirichlet(f, u);
        }
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if d.vertices.len() != d.labels.len() {
            return Err(Error::schema(
                "domain.labels",
                format!("{} labels for {} vertices", d.labels.len(), d.vertices.len()),
            ));
        }
        if d.vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::schema("domain.vertices", "coordinates must be finite"));
        }
        let check = |map: &BTreeMap<usize, f64>, key: &str, label: FacetLabel| -> Result<()> {
            for (&f, &v) in map {
                let path = format!("data.{key}.{f}");
                if d.labels.get(f) != Some(&label) {
                    return Err(Error::schema(path, format!("facet is not {}", label.name())));
                }
                if !v.is_finite() {
                    return Err(Error::schema(path, "value must be finite"));
                }
            }
            Ok(())
        };
        check(&self.data.flux, "flux", FacetLabel::Neumann)?;
        check(&self.data.dirichlet, "dirichlet", FacetLabel::Dirichlet)?;
        if !self.data.source.is_finite() {
            return Err(Error::schema("data.source", "must be finite"));
        }
        if let DistributionSpec::Constant(c) = self.distribution {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::schema("distribution.constant", "must be finite and non-negative"));
            }
        }
        if let Some(m) = self.mass {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::schema("mass", "must be positive"));
            }
        }
        let s = &self.solver;
        if !(s.h.is_finite() && s.h > 0.0) {
            return Err(Error::schema("solver.h", "must be positive"));
        }
        if s.n_t == 0 {
            return Err(Error::schema("solver.n_t", "must be at least 1"));
        }
        if let Some(e) = s.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::schema("solver.epsilon", "must be positive"));
            }
        }
        let list = &s.epsilon_list;
        if list.is_empty()
            || list.iter().any(|e| !(e.is_finite() && *e > 0.0))
            || list.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::schema(
                "solver.epsilon_list",
                "must be non-empty, positive and strictly decreasing",
            ));
        }
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(Error::schema("solver.tol", "must be positive"));
        }
        if !(s.d_min.is_finite() && s.d_min >= 0.0) {
            return Err(Error::schema("solver.d_min", "must be non-negative"));
        }
        if !(s.lebesgue_p == 1 || s.lebesgue_p == 2) {
            return Err(Error::schema("solver.lebesgue_p", "must be 1 or 2"));
        }
        Ok(())
    }
}

/// Reads a UTF-8 file, mapping failures to [`Error::Io`].
pub fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses and validates a JSON run configuration. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

/// Like [`parse_config`], applying `key.path=value` overrides first.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::schema("", e.to_string()))?;
    for o in overrides {
        let (path, v) = parse_override(o)?;
        apply_override(&mut value, &path, v)?;
    }
    from_value(value)
}

fn from_value(value: Value) -> Result<RunConfig> {
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        Error::schema(path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

/// Splits `a.b.0=value`; the value is JSON if it parses, a string otherwise.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::schema("--set", format!("expected key=value, got `{s}`")))?;
    let path: Vec<String> = key.split('.').map(str::to_owned).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::schema("--set", format!("empty path segment in `{key}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((path, value))
}

fn apply_override(root: &mut Value, path: &[String], v: Value) -> Result<()> {
    let joined = path.join(".");
    let mut cur = root;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.clone(), v);
                    return Ok(());
                }
                map.entry(seg.clone()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::schema(joined.clone(), format!("`{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::schema(joined.clone(), format!("index {idx} out of range ({len})")))?;
                if last {
                    *slot = v;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::schema(joined, format!("cannot descend into `{seg}`"))),
        };
    }
    Ok(())
}
