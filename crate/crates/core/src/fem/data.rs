use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{FacetLabel, Point, PolygonalDomain};

/// Heat source density `f` on the body (the layer carries no source).
#[derive(Clone)]
pub enum Source {
    Uniform(f64),
    /// One value per bulk triangle.
    PerTriangle(Vec<f64>),
    /// Pointwise density, integrated with a degree-5 rule.
    Function(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Uniform(v) => write!(f, "Uniform({v})"),
            Source::PerTriangle(v) => write!(f, "PerTriangle({} values)", v.len()),
            Source::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Default for Source {
    fn default() -> Self {
        Source::Uniform(0.0)
    }
}

/// Source `f`, Neumann flux `g` per Neumann facet and Dirichlet value `u_D`
/// per Dirichlet facet. Facets without an entry get zero.
#[derive(Debug, Clone, Default)]
pub struct ProblemData {
    pub source: Source,
    pub flux: BTreeMap<usize, f64>,
    pub dirichlet: BTreeMap<usize, f64>,
}

impl ProblemData {
    pub fn new(source: Source) -> Self {
        ProblemData {
            source,
            ..Default::default()
        }
    }

    pub fn with_flux(mut self, facet: usize, g: f64) -> Self {
        self.flux.insert(facet, g);
        self
    }

    pub fn with_dirichlet(mut self, facet: usize, u: f64) -> Self {
        self.dirichlet.insert(facet, u);
        self
    }

    /// Sets `u_D` on every Dirichlet facet of `domain`.
    pub fn with_dirichlet_everywhere(mut self, domain: &PolygonalDomain, u: f64) -> Self {
        for i in domain.facets_with(FacetLabel::Dirichlet) {
            self.dirichlet.insert(i, u);
        }
        self
    }

    pub fn flux_on(&self, facet: usize) -> f64 {
        self.flux.get(&facet).copied().unwrap_or(0.0)
    }

    pub fn dirichlet_on(&self, facet: usize) -> f64 {
        self.dirichlet.get(&facet).copied().unwrap_or(0.0)
    }

    /// True when `f`, `g` and `u_D` all vanish.
    pub fn is_homogeneous(&self) -> bool {
        let f_zero = match &self.source {
            Source::Uniform(v) => *v == 0.0,
            Source::PerTriangle(v) => v.iter().all(|&x| x == 0.0),
            Source::Function(_) => false,
        };
        f_zero
            && self.flux.values().all(|&g| g == 0.0)
            && self.dirichlet.values().all(|&u| u == 0.0)
    }

    /// Checks that flux and Dirichlet entries refer to facets with the
    /// matching label and that all constants are finite.
    pub fn validate(&self, domain: &PolygonalDomain) -> Result<()> {
        let n = domain.facets().len();
        let check = |map: &BTreeMap<usize, f64>, label: FacetLabel| -> Result<()> {
            for (&facet, &v) in map {
                if facet >= n || domain.facet(facet).label != label {
                    return Err(Error::UnknownLabel {
                        facet,
                        expected: label.name(),
                    });
                }
                if !v.is_finite() {
                    return Err(Error::schema(
                        format!("{}[{facet}]", label.name()),
                        "value must be finite",
                    ));
                }
            }
            Ok(())
        };
        check(&self.flux, FacetLabel::Neumann)?;
        check(&self.dirichlet, FacetLabel::Dirichlet)?;
        match &self.source {
            Source::Uniform(v) if !v.is_finite() => Err(Error::schema("source", "value must be finite")),
            Source::PerTriangle(v) if v.iter().any(|x| !x.is_finite()) => {
                Err(Error::schema("source", "values must be finite"))
            }
            _ => Ok(()),
        }
    }
}
