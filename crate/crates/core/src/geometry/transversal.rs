use serde::{Deserialize, Serialize};

use super::{add, cross, dot, norm, scale, sub, BoundaryPoint, FacetLabel, Point, PolygonalDomain};
use crate::error::{Error, Result};

/// Number of samples per insulated facet used to determine the
/// transversality constant.
pub const KAPPA_SAMPLES: usize = 64;

/// Smallest admissible transversality constant.
const KAPPA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// Vertex vectors along the normalized sum of the adjacent facet normals.
    Bisector,
    /// Facet normal on isolated insulated facets.
    FacetNormal,
}

#[derive(Debug, Clone, PartialEq)]
struct FacetField {
    start: Point,
    end: Point,
    k_start: Point,
    k_end: Point,
    length: f64,
    tangent: Point,
    normal: Point,
}

/// Unit-length, Lipschitz boundary vector field `k` with `k . n >= kappa`
/// on the insulated boundary.
///
/// Along a facet the field is the linear interpolant of the two vertex
/// vectors, renormalized to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalField {
    mode: FieldMode,
    vertex_vectors: Vec<Option<Point>>,
    facets: Vec<Option<FacetField>>,
    kappa: f64,
}

impl TransversalField {
    pub fn build(domain: &PolygonalDomain, mode: FieldMode) -> Result<Self> {
        let n = domain.vertices().len();
        let mut vertex_vectors = vec![None; n];
        match mode {
            FieldMode::Bisector => {
                for (v, slot) in vertex_vectors.iter_mut().enumerate() {
                    let (fin, fout) = domain.facets_at_vertex(v);
                    let s = add(domain.facet(fin).normal, domain.facet(fout).normal);
                    let len = norm(s);
                    if len <= KAPPA_FLOOR {
                        return Err(Error::TransversalityFailure {
                            facet: fout,
                            min_dot: len,
                        });
                    }
                    *slot = Some(scale(s, 1.0 / len));
                }
            }
            FieldMode::FacetNormal => {
                for i in domain.insulated_facets() {
                    let f = domain.facet(i);
                    for v in [f.start, f.end] {
                        if vertex_vectors[v].is_some() {
                            return Err(Error::ModeInvalid(format!(
                                "insulated facets share vertex {v}; facet-normal field would be discontinuous"
                            )));
                        }
                        vertex_vectors[v] = Some(f.normal);
                    }
                }
            }
        }

        let facets = domain
            .facets()
            .iter()
            .map(|f| {
                let defined = mode == FieldMode::Bisector || f.label == FacetLabel::Insulated;
                match (defined, vertex_vectors[f.start], vertex_vectors[f.end]) {
                    (true, Some(k_start), Some(k_end)) => Some(FacetField {
                        start: domain.vertices()[f.start],
                        end: domain.vertices()[f.end],
                        k_start,
                        k_end,
                        length: f.length,
                        tangent: f.tangent,
                        normal: f.normal,
                    }),
                    _ => None,
                }
            })
            .collect::<Vec<_>>();

        let mut field = TransversalField {
            mode,
            vertex_vectors,
            facets,
            kappa: 1.0,
        };
        let mut kappa = f64::INFINITY;
        for i in domain.insulated_facets() {
            let ff = field.facets[i].as_ref().expect("insulated facet carries the field");
            let mut facet_min = f64::INFINITY;
            for j in 0..KAPPA_SAMPLES {
                let offset = ff.length * j as f64 / (KAPPA_SAMPLES - 1) as f64;
                let k = field.direction(BoundaryPoint { facet: i, offset });
                facet_min = facet_min.min(dot(k, ff.normal));
            }
            if facet_min <= KAPPA_FLOOR {
                return Err(Error::TransversalityFailure {
                    facet: i,
                    min_dot: facet_min,
                });
            }
            kappa = kappa.min(facet_min);
        }
        field.kappa = kappa.min(1.0);
        Ok(field)
    }

    pub fn mode(&self) -> FieldMode {
        self.mode
    }

    /// Transversality constant: sampled minimum of `k . n` over the
    /// insulated facets.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn vertex_vector(&self, v: usize) -> Option<Point> {
        self.vertex_vectors[v]
    }

    pub fn is_defined_on(&self, facet: usize) -> bool {
        self.facets.get(facet).is_some_and(|f| f.is_some())
    }

    fn facet_field(&self, facet: usize) -> &FacetField {
        self.facets[facet]
            .as_ref()
            .unwrap_or_else(|| panic!("transversal field is not defined on facet {facet}"))
    }

    fn interpolant(ff: &FacetField, offset: f64) -> Point {
        let lambda = (offset / ff.length).clamp(0.0, 1.0);
        add(scale(ff.k_start, 1.0 - lambda), scale(ff.k_end, lambda))
    }

    /// Unit vector `k(s)`.
    ///
    /// # Panics
    /// If the field is not defined on `p.facet` (facet-normal mode off the
    /// insulated boundary).
    pub fn direction(&self, p: BoundaryPoint) -> Point {
        let ff = self.facet_field(p.facet);
        if p.offset <= 0.0 {
            return ff.k_start;
        }
        if p.offset >= ff.length {
            return ff.k_end;
        }
        let kh = Self::interpolant(ff, p.offset);
        scale(kh, 1.0 / norm(kh))
    }

    /// Arc-length derivative `dk/ds` of the renormalized interpolant.
    pub fn derivative(&self, p: BoundaryPoint) -> Point {
        let ff = self.facet_field(p.facet);
        let kh = Self::interpolant(ff, p.offset);
        let len = norm(kh);
        let k = scale(kh, 1.0 / len);
        let dkh = scale(sub(ff.k_end, ff.k_start), 1.0 / ff.length);
        // (I - k k^T) dkh / |kh|
        scale(sub(dkh, scale(k, dot(k, dkh))), 1.0 / len)
    }

    pub fn dot_normal(&self, p: BoundaryPoint) -> f64 {
        dot(self.direction(p), self.facet_field(p.facet).normal)
    }

    /// Boundary point coordinates; the facet endpoints come from the domain
    /// the field was built on.
    pub fn base_point(&self, p: BoundaryPoint) -> Point {
        let ff = self.facet_field(p.facet);
        if p.offset <= 0.0 {
            return ff.start;
        }
        if p.offset >= ff.length {
            return ff.end;
        }
        add(ff.start, scale(ff.tangent, p.offset))
    }

    /// `det[k, tau]` and `det[k, k']` at `p`: the layer Jacobian is
    /// `a + t b`.
    pub(crate) fn jacobian_coefficients(&self, p: BoundaryPoint) -> (f64, f64) {
        let ff = self.facet_field(p.facet);
        let k = self.direction(p);
        (cross(k, ff.tangent), cross(k, self.derivative(p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use FacetLabel::*;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn square_bisector_corners_are_outward_diagonals() {
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let k = TransversalField::build(&d, FieldMode::Bisector).unwrap();
        let expect = [[-H, -H], [H, -H], [H, H], [-H, H]];
        for (v, e) in expect.iter().enumerate() {
            let got = k.vertex_vector(v).unwrap();
            assert!((got[0] - e[0]).abs() < 1e-15 && (got[1] - e[1]).abs() < 1e-15);
        }
        for i in 0..4 {
            let mid = k.direction(BoundaryPoint { facet: i, offset: 0.5 });
            let n = d.facet(i).normal;
            assert!((mid[0] - n[0]).abs() < 1e-15 && (mid[1] - n[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn square_bisector_kappa_is_attained_at_corners() {
        // oracle: dense sampling of k.n, independent of the builder's sampling
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let k = TransversalField::build(&d, FieldMode::Bisector).unwrap();
        let mut min = f64::INFINITY;
        for i in 0..4 {
            for j in 0..=1000 {
                let p = BoundaryPoint { facet: i, offset: j as f64 / 1000.0 };
                min = min.min(k.dot_normal(p));
            }
        }
        assert!((min - H).abs() < 1e-15);
        assert!((k.kappa() - H).abs() < 1e-15);
    }

    #[test]
    fn facet_normal_on_isolated_facet() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let k = TransversalField::build(&d, FieldMode::FacetNormal).unwrap();
        assert_eq!(k.kappa(), 1.0);
        for j in 0..=10 {
            let p = BoundaryPoint { facet: 1, offset: j as f64 / 10.0 };
            assert_eq!(k.direction(p), [1.0, 0.0]);
            assert_eq!(k.derivative(p), [0.0, 0.0]);
        }
        assert!(!k.is_defined_on(0));
    }

    #[test]
    fn facet_normal_rejects_adjacent_insulated_facets() {
        let d = PolygonalDomain::unit_square([Insulated, Insulated, Neumann, Neumann]).unwrap();
        let err = TransversalField::build(&d, FieldMode::FacetNormal).unwrap_err();
        assert!(matches!(err, Error::ModeInvalid(_)));
    }

    #[test]
    fn near_cusp_corner_fails_transversality() {
        // needle-like spike: interior angle ~ 2e-7 at vertex 1
        let d = PolygonalDomain::new(
            vec![[0.0, 0.0], [1.0, 1e-7], [0.0, 2e-7]],
            vec![Insulated; 3],
        )
        .unwrap();
        let err = TransversalField::build(&d, FieldMode::Bisector).unwrap_err();
        assert!(matches!(err, Error::TransversalityFailure { .. }), "{err}");
    }

    #[test]
    fn derivative_matches_central_difference() {
        let d = PolygonalDomain::l_shape(Insulated).unwrap();
        let k = TransversalField::build(&d, FieldMode::Bisector).unwrap();
        let h = 1e-6;
        for facet in 0..6 {
            let len = d.facet(facet).length;
            for frac in [0.1, 0.37, 0.5, 0.9] {
                let s = frac * len;
                let kp = k.direction(BoundaryPoint { facet, offset: s + h });
                let km = k.direction(BoundaryPoint { facet, offset: s - h });
                let fd = [(kp[0] - km[0]) / (2.0 * h), (kp[1] - km[1]) / (2.0 * h)];
                let an = k.derivative(BoundaryPoint { facet, offset: s });
                assert!((fd[0] - an[0]).abs() < 1e-7 && (fd[1] - an[1]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn field_is_unit_and_transversal_everywhere() {
        let d = PolygonalDomain::l_shape(Insulated).unwrap();
        let k = TransversalField::build(&d, FieldMode::Bisector).unwrap();
        for facet in 0..6 {
            let len = d.facet(facet).length;
            for j in 0..=200 {
                let p = BoundaryPoint { facet, offset: len * j as f64 / 200.0 };
                assert!((norm(k.direction(p)) - 1.0).abs() < 1e-14);
                assert!(k.dot_normal(p) >= k.kappa() - 1e-15);
            }
        }
    }
}
