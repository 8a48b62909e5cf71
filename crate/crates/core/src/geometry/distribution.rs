use super::{BoundaryPoint, PolygonalDomain, TransversalField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Profile {
    offsets: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    fn eval(&self, s: f64) -> f64 {
        let o = &self.offsets;
        if s <= o[0] {
            return self.values[0];
        }
        let last = o.len() - 1;
        if s >= o[last] {
            return self.values[last];
        }
        let i = o.partition_point(|&x| x <= s) - 1;
        let lambda = (s - o[i]) / (o[i + 1] - o[i]);
        (1.0 - lambda) * self.values[i] + lambda * self.values[i + 1]
    }
}

/// Thickness profile `d` of the insulating layer, measured along the
/// transversal field and piecewise linear between knots on each insulated
/// facet.
///
/// The stored mass is `sum_j w_j (k.n)_j d_j` with trapezoidal knot weights
/// `w_j`, i.e. the lumped form of `int (k.n) d ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct InsulationDistribution {
    profiles: Vec<Option<Profile>>,
    mass: f64,
    d_min: f64,
}

impl InsulationDistribution {
    /// Constant thickness `value` on every insulated facet.
    pub fn uniform(domain: &PolygonalDomain, field: &TransversalField, value: f64) -> Result<Self> {
        let profiles = domain
            .insulated_facets()
            .map(|i| (i, vec![(0.0, value), (domain.facet(i).length, value)]))
            .collect();
        Self::from_knots(domain, field, profiles, 0.0)
    }

    /// Builds a profile from `(facet, [(offset, value), ...])` knot lists.
    ///
    /// Every insulated facet needs a list with strictly increasing offsets
    /// from `0` to the facet length. Values must agree at vertices shared by
    /// two insulated facets.
    pub fn from_knots(
        domain: &PolygonalDomain,
        field: &TransversalField,
        knots: Vec<(usize, Vec<(f64, f64)>)>,
        d_min: f64,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if !(d_min >= 0.0 && d_min.is_finite()) {
            return bad(format!("d_min must be finite and non-negative, got {d_min}"));
        }
        let mut profiles: Vec<Option<Profile>> = vec![None; domain.facets().len()];
        for (facet, list) in knots {
            if facet >= profiles.len() || domain.facet(facet).label != super::FacetLabel::Insulated {
                return bad(format!("facet {facet} is not insulated"));
            }
            if profiles[facet].is_some() {
                return bad(format!("facet {facet} given twice"));
            }
            let len = domain.facet(facet).length;
            let tol = 1e-9 * len;
            if list.len() < 2 {
                return bad(format!("facet {facet}: need at least two knots"));
            }
            if list[0].0.abs() > tol || (list[list.len() - 1].0 - len).abs() > tol {
                return bad(format!("facet {facet}: knots must span [0, {len}]"));
            }
            let mut offsets: Vec<f64> = list.iter().map(|k| k.0).collect();
            let values: Vec<f64> = list.iter().map(|k| k.1).collect();
            if offsets.windows(2).any(|w| w[1] <= w[0]) {
                return bad(format!("facet {facet}: knot offsets not strictly increasing"));
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return bad(format!("facet {facet}: invalid thickness {v}"));
            }
            if d_min > 0.0 {
                if let Some(v) = values.iter().find(|v| **v < d_min) {
                    return bad(format!("facet {facet}: thickness {v} below d_min {d_min}"));
                }
            }
            offsets[0] = 0.0;
            *offsets.last_mut().unwrap() = len;
            profiles[facet] = Some(Profile { offsets, values });
        }
        for i in domain.insulated_facets() {
            if profiles[i].is_none() {
                return bad(format!("insulated facet {i} has no profile"));
            }
        }
        // continuity at vertices shared by two insulated facets
        let n = domain.facets().len();
        for i in domain.insulated_facets() {
            let next = (i + 1) % n;
            if let (Some(a), Some(b)) = (&profiles[i], &profiles[next]) {
                let va = *a.values.last().unwrap();
                let vb = b.values[0];
                if (va - vb).abs() > 1e-12 * va.abs().max(vb.abs()).max(1.0) {
                    return bad(format!(
                        "thickness jumps from {va} to {vb} at vertex {}",
                        domain.facet(i).end
                    ));
                }
            }
        }
        let mut d = InsulationDistribution {
            profiles,
            mass: 0.0,
            d_min,
        };
        d.mass = d.lumped_mass(field);
        Ok(d)
    }

    /// Thickness at a boundary point of an insulated facet.
    ///
    /// # Panics
    /// If `p.facet` is not insulated.
    pub fn eval(&self, p: BoundaryPoint) -> f64 {
        self.profile(p.facet).eval(p.offset)
    }

    fn profile(&self, facet: usize) -> &Profile {
        self.profiles[facet]
            .as_ref()
            .unwrap_or_else(|| panic!("no thickness profile on facet {facet}"))
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// Knot offsets and values on `facet`, if insulated.
    pub fn knots(&self, facet: usize) -> Option<(&[f64], &[f64])> {
        self.profiles
            .get(facet)
            .and_then(|p| p.as_ref())
            .map(|p| (p.offsets.as_slice(), p.values.as_slice()))
    }

    pub fn max_value(&self) -> f64 {
        self.profiles
            .iter()
            .flatten()
            .flat_map(|p| p.values.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.profiles
            .iter()
            .flatten()
            .flat_map(|p| p.values.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// True when the profile vanishes identically on `facet`.
    pub fn vanishes_on(&self, facet: usize) -> bool {
        self.profile(facet).values.iter().all(|&v| v == 0.0)
    }

    /// Recomputes `sum_j w_j (k.n)_j d_j` with trapezoidal knot weights.
    pub fn lumped_mass(&self, field: &TransversalField) -> f64 {
        let mut m = 0.0;
        for (facet, p) in self.profiles.iter().enumerate() {
            let Some(p) = p else { continue };
            for j in 0..p.offsets.len() - 1 {
                let half = 0.5 * (p.offsets[j + 1] - p.offsets[j]);
                let ka = field.dot_normal(BoundaryPoint { facet, offset: p.offsets[j] });
                let kb = field.dot_normal(BoundaryPoint { facet, offset: p.offsets[j + 1] });
                m += half * (ka * p.values[j] + kb * p.values[j + 1]);
            }
        }
        m
    }

    /// Copy with a new floor `d_min`, rejecting profiles that fall below it.
    pub fn with_d_min(mut self, d_min: f64) -> Result<Self> {
        if !(d_min >= 0.0 && d_min.is_finite()) {
            return Err(Error::InvalidDistribution(format!("invalid d_min {d_min}")));
        }
        if d_min > 0.0 && self.min_value() < d_min {
            return Err(Error::InvalidDistribution(format!(
                "thickness {} below d_min {d_min}",
                self.min_value()
            )));
        }
        self.d_min = d_min;
        Ok(self)
    }

    /// Multiplies every knot value by `factor >= 0`.
    pub fn scaled(&self, field: &TransversalField, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(Error::InvalidDistribution(format!("invalid scale {factor}")));
        }
        let mut d = self.clone();
        for p in d.profiles.iter_mut().flatten() {
            for v in &mut p.values {
                *v *= factor;
            }
        }
        d.d_min *= factor;
        d.mass = d.lumped_mass(field);
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FacetLabel::*, FieldMode};

    fn square() -> (PolygonalDomain, TransversalField) {
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let k = TransversalField::build(&d, FieldMode::Bisector).unwrap();
        (d, k)
    }

    #[test]
    fn uniform_evaluates_constant() {
        let (d, k) = square();
        let dist = InsulationDistribution::uniform(&d, &k, 0.3).unwrap();
        for f in 0..4 {
            assert!((dist.eval(BoundaryPoint { facet: f, offset: 0.42 }) - 0.3).abs() < 1e-15);
        }
        // trapezoid on the two facet endpoints: k.n = sqrt(2)/2 at both
        let expected = 4.0 * 0.3 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((dist.mass() - expected).abs() < 1e-15);
    }

    #[test]
    fn mass_is_reproducible() {
        let (d, k) = square();
        let knots = (0..4)
            .map(|f| (f, vec![(0.0, 1.0), (0.25, 2.0), (0.6, 0.5), (1.0, 1.0)]))
            .collect();
        let dist = InsulationDistribution::from_knots(&d, &k, knots, 0.0).unwrap();
        let again = dist.lumped_mass(&k);
        assert!((again - dist.mass()).abs() <= 1e-12 * dist.mass());
        assert!((dist.eval(BoundaryPoint { facet: 2, offset: 0.125 }) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_jumps_and_floor_violations() {
        let (d, k) = square();
        let mk = |v: [f64; 4], d_min| {
            let knots = (0..4).map(|f| (f, vec![(0.0, v[f]), (1.0, v[(f + 1) % 4])])).collect();
            InsulationDistribution::from_knots(&d, &k, knots, d_min)
        };
        assert!(mk([1.0, 1.0, 1.0, 1.0], 0.5).is_ok());
        assert!(mk([1.0, -1.0, 1.0, 1.0], 0.0).is_err());
        assert!(mk([1.0, 0.2, 1.0, 1.0], 0.5).is_err());
        let jump = (0..4).map(|f| (f, vec![(0.0, 1.0), (1.0, 2.0)])).collect();
        let err = InsulationDistribution::from_knots(&d, &k, jump, 0.0).unwrap_err();
        assert!(err.to_string().contains("jumps"));
    }

    #[test]
    fn scaling_scales_mass() {
        let (d, k) = square();
        let dist = InsulationDistribution::uniform(&d, &k, 1.0).unwrap();
        let twice = dist.scaled(&k, 2.0).unwrap();
        assert!((twice.mass() - 2.0 * dist.mass()).abs() < 1e-14);
    }
}
