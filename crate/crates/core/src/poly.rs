//! Polynomial self-maps of C^2 tangent to the identity.
//!
//! A map is stored as the identity plus homogeneous components `P_j = (p_j, q_j)`
//! for degrees `j >= 2`; there is no degree-0 or degree-1 data anywhere, so every
//! value of this type fixes the origin and has differential Id there.

use crate::scalar::Real;
use num_complex::Complex;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("homogeneous degree must be >= 1, got {0}")]
    InvalidDegree(u32),
    #[error("coefficient vector has length {got}, degree {degree} needs {want}")]
    CoefficientCount { degree: u32, got: usize, want: usize },
    #[error("non-finite coefficient or coordinate")]
    NonFinite,
    #[error("component degree {got} disagrees with its key {key}")]
    DegreeMismatch { key: u32, got: u32 },
    #[error("components of degree < 2 are not representable (map must be tangent to the identity)")]
    SubquadraticComponent,
    #[error("map has no nonzero component (identity map is out of scope)")]
    IdentityMap,
    #[error("linear change is numerically singular (|det| = {det:.3e} below threshold {thresh:.3e})")]
    SingularLinearChange { det: f64, thresh: f64 },
}

/// A point of C^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2<T: Real> {
    pub z: Complex<T>,
    pub w: Complex<T>,
}

impl<T: Real> Complex2<T> {
    pub fn new(z: Complex<T>, w: Complex<T>) -> Self {
        Self { z, w }
    }

    /// Point with real coordinates.
    pub fn real(z: T, w: T) -> Self {
        Self { z: Complex::new(z, T::zero()), w: Complex::new(w, T::zero()) }
    }

    pub fn origin() -> Self {
        Self::real(T::zero(), T::zero())
    }

    pub fn try_new(z: Complex<T>, w: Complex<T>) -> Result<Self, PolyError> {
        let p = Self { z, w };
        if p.is_finite() { Ok(p) } else { Err(PolyError::NonFinite) }
    }

    pub fn is_finite(&self) -> bool {
        self.z.re.is_finite() && self.z.im.is_finite() && self.w.re.is_finite() && self.w.im.is_finite()
    }

    /// Squared Euclidean norm |z|^2 + |w|^2.
    pub fn norm_sqr(&self) -> T {
        self.z.norm_sqr() + self.w.norm_sqr()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// z - w, the defect from the diagonal line.
    pub fn gap(&self) -> Complex<T> {
        self.z - self.w
    }
}

/// Homogeneous polynomial in (z, w); `coeffs[i]` is the coefficient of
/// `z^(d-i) * w^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomPoly2<T: Real> {
    degree: u32,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> HomPoly2<T> {
    pub fn new(degree: u32, coeffs: Vec<Complex<T>>) -> Result<Self, PolyError> {
        if degree < 1 {
            return Err(PolyError::InvalidDegree(degree));
        }
        let want = degree as usize + 1;
        if coeffs.len() != want {
            return Err(PolyError::CoefficientCount { degree, got: coeffs.len(), want });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        Ok(Self { degree, coeffs })
    }

    pub fn zero(degree: u32) -> Self {
        Self { degree, coeffs: vec![Complex::new(T::zero(), T::zero()); degree as usize + 1] }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Complex<T> {
        self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_zero() && c.im.is_zero())
    }

    /// Largest coefficient modulus; the scale other thresholds are relative to.
    pub fn coeff_scale(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Evaluate by Horner recursion in w with an ascending running power of z.
    /// Term order is fixed, so results are bit-reproducible.
    pub fn eval(&self, pt: Complex2<T>) -> Complex<T> {
        let d = self.degree as usize;
        let mut acc = self.coeffs[d];
        let mut zp = Complex::new(T::one(), T::zero());
        for i in (0..d).rev() {
            zp = zp * pt.z;
            acc = acc * pt.w + self.coeffs[i] * zp;
        }
        acc
    }
}

/// Evaluate one homogeneous polynomial at a point.
pub fn eval_hom<T: Real>(poly: &HomPoly2<T>, pt: Complex2<T>) -> Complex<T> {
    poly.eval(pt)
}

/// Polynomial self-map of C^2 of the form `id + sum_j P_j`, `j >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap2<T: Real> {
    components: BTreeMap<u32, (HomPoly2<T>, HomPoly2<T>)>,
    order: u32,
    vars: VarNames,
}

/// Which chart names the map was written in; cosmetic only (printing and
/// error messages), never consulted by the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarNames {
    #[default]
    ZW,
    XY,
}

impl VarNames {
    pub fn first(self) -> char {
        match self {
            VarNames::ZW => 'z',
            VarNames::XY => 'x',
        }
    }

    pub fn second(self) -> char {
        match self {
            VarNames::ZW => 'w',
            VarNames::XY => 'y',
        }
    }
}

impl<T: Real> PolyMap2<T> {
    /// Build a map from homogeneous component pairs keyed by degree.
    /// Identically-zero pairs are dropped; at least one nonzero pair must remain.
    pub fn new(components: Vec<(u32, HomPoly2<T>, HomPoly2<T>)>) -> Result<Self, PolyError> {
        let mut map = BTreeMap::new();
        for (j, p, q) in components {
            if j < 2 {
                return Err(PolyError::SubquadraticComponent);
            }
            if p.degree() != j {
                return Err(PolyError::DegreeMismatch { key: j, got: p.degree() });
            }
            if q.degree() != j {
                return Err(PolyError::DegreeMismatch { key: j, got: q.degree() });
            }
            if p.is_zero() && q.is_zero() {
                continue;
            }
            map.insert(j, (p, q));
        }
        let order = *map.keys().next().ok_or(PolyError::IdentityMap)?;
        Ok(Self { components: map, order, vars: VarNames::default() })
    }

    pub fn with_vars(mut self, vars: VarNames) -> Self {
        self.vars = vars;
        self
    }

    pub fn vars(&self) -> VarNames {
        self.vars
    }

    /// Degree of the lowest nonzero homogeneous component (the paper's k+1).
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Largest stored degree.
    pub fn top_degree(&self) -> u32 {
        *self.components.keys().next_back().expect("map is nonempty")
    }

    pub fn components(&self) -> impl Iterator<Item = (u32, &HomPoly2<T>, &HomPoly2<T>)> {
        self.components.iter().map(|(j, (p, q))| (*j, p, q))
    }

    pub fn component(&self, degree: u32) -> Option<(&HomPoly2<T>, &HomPoly2<T>)> {
        self.components.get(&degree).map(|(p, q)| (p, q))
    }

    /// The pair `P_{k+1} = (p, q)` of lowest degree.
    pub fn leading(&self) -> (&HomPoly2<T>, &HomPoly2<T>) {
        let (p, q) = &self.components[&self.order];
        (p, q)
    }

    /// One application of the map: `pt + sum_j P_j(pt)`.
    ///
    /// No overflow guard here; callers that iterate must bail out before
    /// magnitudes reach ~1e150 (see `orbit::iterate`).
    pub fn eval(&self, pt: Complex2<T>) -> Complex2<T> {
        let mut z = pt.z;
        let mut w = pt.w;
        for (p, q) in self.components.values() {
            z = z + p.eval(pt);
            w = w + q.eval(pt);
        }
        Complex2::new(z, w)
    }

    /// True when both coordinate updates leave the point bit-identical
    /// (e.g. the diagonal of the main example is fixed exactly).
    pub fn fixes(&self, pt: Complex2<T>) -> bool {
        self.eval(pt) == pt
    }

    /// Exact per-coefficient equality of the component data.
    pub fn coeffs_equal(&self, other: &Self) -> bool {
        self.components.len() == other.components.len()
            && self.components().zip(other.components()).all(|((j, p, q), (j2, p2, q2))| {
                j == j2 && p.coeffs() == p2.coeffs() && q.coeffs() == q2.coeffs()
            })
    }

    /// Largest distance between corresponding coefficients, with missing
    /// components compared against zero.
    pub fn coeff_distance(&self, other: &Self) -> T {
        let mut worst = T::zero();
        let degrees: std::collections::BTreeSet<u32> =
            self.components.keys().chain(other.components.keys()).copied().collect();
        for j in degrees {
            let zero = (HomPoly2::zero(j), HomPoly2::zero(j));
            let (pa, qa) = self.components.get(&j).map(|(p, q)| (p, q)).unwrap_or((&zero.0, &zero.1));
            let (pb, qb) = other.components.get(&j).map(|(p, q)| (p, q)).unwrap_or((&zero.0, &zero.1));
            for (a, b) in pa.coeffs().iter().zip(pb.coeffs()).chain(qa.coeffs().iter().zip(qb.coeffs())) {
                worst = worst.max((*a - *b).norm());
            }
        }
        worst
    }
}

/// Application of `map` at `pt`. Thin wrapper naming the operation.
pub fn eval_map<T: Real>(map: &PolyMap2<T>, pt: Complex2<T>) -> Complex2<T> {
    map.eval(pt)
}

/// Degree of the lowest nonzero component.
pub fn order<T: Real>(map: &PolyMap2<T>) -> u32 {
    map.order()
}

/// Invertible linear change of coordinates on C^2, row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearChange<T: Real> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Real> LinearChange<T> {
    pub fn new(m: [[Complex<T>; 2]; 2]) -> Result<Self, PolyError> {
        if m.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        // Frobenius norm squared as the scale for the singularity guard.
        let scale: T = m.iter().flatten().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b);
        let thresh = T::of(1e-14) * scale;
        if det.norm() <= thresh {
            return Err(PolyError::SingularLinearChange {
                det: det.norm().to_f64().unwrap_or(0.0),
                thresh: thresh.to_f64().unwrap_or(0.0),
            });
        }
        Ok(Self { m })
    }

    pub fn from_rows(r0: [Complex<T>; 2], r1: [Complex<T>; 2]) -> Result<Self, PolyError> {
        Self::new([r0, r1])
    }

    /// Real-entried change of coordinates.
    pub fn from_reals(a: T, b: T, c: T, d: T) -> Result<Self, PolyError> {
        let re = |t| Complex::new(t, T::zero());
        Self::new([[re(a), re(b)], [re(c), re(d)]])
    }

    /// The paper's chart change l(z, w) = (z + w, z - w).
    pub fn sum_difference() -> Self {
        Self::from_reals(T::one(), T::one(), T::one(), -T::one()).expect("det -2")
    }

    pub fn entries(&self) -> &[[Complex<T>; 2]; 2] {
        &self.m
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self {
            m: [
                [self.m[1][1] / det, -self.m[0][1] / det],
                [-self.m[1][0] / det, self.m[0][0] / det],
            ],
        }
    }

    pub fn apply(&self, pt: Complex2<T>) -> Complex2<T> {
        Complex2::new(
            self.m[0][0] * pt.z + self.m[0][1] * pt.w,
            self.m[1][0] * pt.z + self.m[1][1] * pt.w,
        )
    }
}

/// Pascal-row binomial coefficients, exact in integer arithmetic (n <= 64
/// stays within u128).
fn binomial_row(n: u32) -> Vec<u128> {
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// Coefficients of (a*x + b*y)^n as a dense vector indexed by the power of y.
fn linear_form_power<T: Real>(a: Complex<T>, b: Complex<T>, n: u32) -> Vec<Complex<T>> {
    let binom = binomial_row(n);
    let mut apow = vec![Complex::new(T::one(), T::zero())];
    for _ in 0..n {
        let last = *apow.last().unwrap();
        apow.push(last * a);
    }
    let mut bpow = vec![Complex::new(T::one(), T::zero())];
    for _ in 0..n {
        let last = *bpow.last().unwrap();
        bpow.push(last * b);
    }
    (0..=n as usize)
        .map(|k| {
            let c = T::of(binom[k] as f64);
            apow[n as usize - k] * bpow[k] * Complex::new(c, T::zero())
        })
        .collect()
}

/// Substitute z = a*x + b*y, w = c*x + d*y into a homogeneous polynomial,
/// re-expanding by binomial convolution. Exact up to rounding.
fn substitute_linear<T: Real>(poly: &HomPoly2<T>, rows: &[[Complex<T>; 2]; 2]) -> HomPoly2<T> {
    let d = poly.degree();
    let mut out = vec![Complex::new(T::zero(), T::zero()); d as usize + 1];
    for (i, &ci) in poly.coeffs().iter().enumerate() {
        if ci.re.is_zero() && ci.im.is_zero() {
            continue;
        }
        let zpart = linear_form_power(rows[0][0], rows[0][1], d - i as u32);
        let wpart = linear_form_power(rows[1][0], rows[1][1], i as u32);
        for (k1, &za) in zpart.iter().enumerate() {
            for (k2, &wb) in wpart.iter().enumerate() {
                out[k1 + k2] = out[k1 + k2] + ci * za * wb;
            }
        }
    }
    HomPoly2 { degree: d, coeffs: out }
}

/// Conjugate `map` by `change`: returns `L o map o L^{-1}` expanded back into
/// homogeneous components. The result is again tangent to the identity with
/// the same degree support.
pub fn conjugate_linear<T: Real>(map: &PolyMap2<T>, change: &LinearChange<T>) -> PolyMap2<T> {
    let inv = change.inverse();
    let l = change.entries();
    let mut components = Vec::new();
    for (j, p, q) in map.components() {
        let ps = substitute_linear(p, inv.entries());
        let qs = substitute_linear(q, inv.entries());
        let mut new_p = vec![Complex::new(T::zero(), T::zero()); j as usize + 1];
        let mut new_q = new_p.clone();
        for k in 0..=j as usize {
            new_p[k] = l[0][0] * ps.coeffs[k] + l[0][1] * qs.coeffs[k];
            new_q[k] = l[1][0] * ps.coeffs[k] + l[1][1] * qs.coeffs[k];
        }
        components.push((
            j,
            HomPoly2 { degree: j, coeffs: new_p },
            HomPoly2 { degree: j, coeffs: new_q },
        ));
    }
    PolyMap2::new(components)
        .expect("conjugation preserves tangency and nonemptiness")
        .with_vars(map.vars())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::builtin_f;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_hom_main_example_leading_coordinate() {
        // p(z,w) = -z^2 + z*w, the quadratic part of the first coordinate of f.
        let p = HomPoly2::new(2, vec![c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(eval_hom(&p, Complex2::real(1.0, 0.0)), c(-1.0, 0.0));
        assert_eq!(eval_hom(&p, Complex2::real(0.0, 0.0)), c(0.0, 0.0));
        let v = eval_hom(&p, Complex2::real(0.3, 0.2));
        assert!((v - c(-0.03, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn eval_map_fixes_diagonal_bitwise() {
        let f = builtin_f::<f64>();
        for t in [0.1, 0.25, -0.7, 1.3] {
            let pt = Complex2::real(t, t);
            assert_eq!(f.eval(pt), pt);
            assert!(f.fixes(pt));
        }
        let pt = Complex2::new(c(0.3, 0.1), c(0.3, 0.1));
        assert_eq!(f.eval(pt), pt);
    }

    #[test]
    fn eval_map_hand_values() {
        let f = builtin_f::<f64>();
        let a = f.eval(Complex2::real(0.5, 0.0));
        assert!((a.z - c(0.25, 0.0)).norm() < 1e-16);
        assert!((a.w - c(0.0, 0.0)).norm() < 1e-16);
        let b = f.eval(Complex2::real(0.3, 0.2));
        assert!((b.z - c(0.27, 0.0)).norm() < 1e-16);
        assert!((b.w - c(0.22, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn order_of_main_example_is_two() {
        assert_eq!(order(&builtin_f::<f64>()), 2);
        let quintic = PolyMap2::new(vec![(
            5,
            HomPoly2::new(5, vec![c(1.0, 0.0); 6]).unwrap(),
            HomPoly2::zero(5),
        )])
        .unwrap();
        assert_eq!(order(&quintic), 5);
    }

    #[test]
    fn identity_map_rejected() {
        let r = PolyMap2::<f64>::new(vec![(2, HomPoly2::zero(2), HomPoly2::zero(2))]);
        assert_eq!(r.unwrap_err(), PolyError::IdentityMap);
    }

    #[test]
    fn subquadratic_component_rejected() {
        let lin = HomPoly2::new(1, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let r = PolyMap2::new(vec![(1, lin.clone(), lin)]);
        assert_eq!(r.unwrap_err(), PolyError::SubquadraticComponent);
    }

    #[test]
    fn conjugation_by_sum_difference_gives_tilde_form() {
        // l o f o l^{-1} = (x - y^2, y - x*y): p = -y^2, q = -x*y exactly.
        let f = builtin_f::<f64>();
        let g = conjugate_linear(&f, &LinearChange::sum_difference());
        assert_eq!(g.order(), 2);
        let (p, q) = g.leading();
        let exact = |v: Complex64, re: f64| (v - c(re, 0.0)).norm() < 1e-14;
        assert!(exact(p.coeff(0), 0.0) && exact(p.coeff(1), 0.0) && exact(p.coeff(2), -1.0));
        assert!(exact(q.coeff(0), 0.0) && exact(q.coeff(1), -1.0) && exact(q.coeff(2), 0.0));
    }

    #[test]
    fn conjugation_by_identity_is_identity() {
        let f = builtin_f::<f64>();
        let id = LinearChange::from_reals(1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(conjugate_linear(&f, &id).coeffs_equal(&f));
    }

    #[test]
    fn conjugation_round_trips() {
        let f = builtin_f::<f64>();
        let l = LinearChange::new([[c(1.2, 0.3), c(-0.4, 0.0)], [c(0.0, 1.0), c(0.9, -0.2)]]).unwrap();
        let back = conjugate_linear(&conjugate_linear(&f, &l), &l.inverse());
        assert!(back.coeff_distance(&f) < 1e-12);
    }

    #[test]
    fn singular_change_rejected() {
        let r = LinearChange::<f64>::from_reals(1.0, 2.0, 0.5, 1.0);
        assert!(matches!(r.unwrap_err(), PolyError::SingularLinearChange { .. }));
    }
}
