//! Characteristic directions of maps tangent to the identity: the projective
//! zeros of r(z,w) = z*q(z,w) - w*p(z,w) for the leading homogeneous pair,
//! their multiplicities, eigenvalues, directors (order-2 maps) and the
//! degree-by-degree classification used for maps with higher-order terms.

use crate::aberth::aberth_roots;
use crate::poly::{HomPoly2, PolyMap2};
use crate::scalar::Real;
use num_complex::{Complex, Complex64};
use thiserror::Error;

/// |lambda| below this times the coefficient scale counts as degenerate.
pub const DEGENERACY_FACTOR: f64 = 1e-8;
/// Roots closer than this in the chordal metric merge into one multiple root.
pub const CLUSTER_CHORDAL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChardirError {
    #[error("map is dicritical: r = z*q - w*p vanishes identically, every direction is characteristic")]
    Dicritical,
    #[error("director undefined for degenerate direction")]
    DegenerateDirector,
    #[error("director implemented only for order-2 germs (map has order {0})")]
    OrderNotTwo(u32),
    #[error("zero vector does not determine a projective direction")]
    ZeroDirection,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A point of P^1(C) in canonical normalization: the largest-modulus
/// coordinate has modulus one and is real positive (ties go to the first
/// coordinate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjDirection<T: Real> {
    alpha: Complex<T>,
    beta: Complex<T>,
}

impl<T: Real> ProjDirection<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Result<Self, ChardirError> {
        let na = alpha.norm();
        let nb = beta.norm();
        if na.is_zero() && nb.is_zero() {
            return Err(ChardirError::ZeroDirection);
        }
        let dominant = if na >= nb { alpha / na } else { beta / nb };
        // Divide by the dominant coordinate's modulus and phase in one go.
        let scale = dominant.conj() / if na >= nb { na } else { nb };
        Ok(Self { alpha: alpha * scale, beta: beta * scale })
    }

    /// The direction [1:m] (or its normalization when |m| > 1).
    pub fn from_slope(m: Complex<T>) -> Self {
        Self::new(Complex::new(T::one(), T::zero()), m).expect("alpha = 1 is nonzero")
    }

    pub fn one_zero() -> Self {
        Self { alpha: Complex::new(T::one(), T::zero()), beta: Complex::new(T::zero(), T::zero()) }
    }

    pub fn zero_one() -> Self {
        Self { alpha: Complex::new(T::zero(), T::zero()), beta: Complex::new(T::one(), T::zero()) }
    }

    pub fn alpha(&self) -> Complex<T> {
        self.alpha
    }

    pub fn beta(&self) -> Complex<T> {
        self.beta
    }

    /// Chordal distance on P^1: |a d - b c| / (|(a,b)| |(c,d)|), in [0, 1].
    pub fn chordal(&self, other: &Self) -> T {
        let cross = self.alpha * other.beta - self.beta * other.alpha;
        let n1 = (self.alpha.norm_sqr() + self.beta.norm_sqr()).sqrt();
        let n2 = (other.alpha.norm_sqr() + other.beta.norm_sqr()).sqrt();
        cross.norm() / (n1 * n2)
    }

    /// Sort key making report ordering deterministic.
    fn sort_key(&self) -> [T; 4] {
        [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im]
    }
}

/// One characteristic direction of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct CharDirReport<T: Real> {
    pub direction: ProjDirection<T>,
    /// Multiplicity as a projective root of r.
    pub multiplicity: u32,
    /// Eigenvalue with P_{k+1}(v) = lambda v on the canonical representative,
    /// read off in the chart of the dominant coordinate.
    pub lambda: Complex<T>,
    pub degenerate: bool,
    /// Present iff the direction is non-degenerate and the map has order 2.
    pub director: Option<Complex<T>>,
}

impl<T: Real> CharDirReport<T> {
    /// Attraction transverse to the direction in the order-2 sense: positive
    /// real part of the director. None when no director applies.
    pub fn transversally_attracting(&self) -> Option<bool> {
        self.director.map(|d| d.re > T::zero())
    }
}

/// Per-degree characteristic/degeneracy record for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStatus<T: Real> {
    pub degree: u32,
    pub is_char_dir: bool,
    pub degenerate: bool,
    pub lambda: Complex<T>,
}

/// Degree-by-degree status of a direction against every stored component.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreewiseStatus<T: Real> {
    pub per_degree: Vec<DegreeStatus<T>>,
    /// Largest consecutive degree (from the order up) through which the
    /// direction stays characteristic.
    pub s_truncated: u32,
    /// True when the direction is characteristic through the top stored
    /// degree, i.e. s is unbounded as far as the truncation can see.
    pub char_to_top: bool,
    /// First degree at which the direction is characteristic and
    /// non-degenerate, if any.
    pub r_plus_1: Option<u32>,
}

/// r(z,w) = z*q(z,w) - w*p(z,w), degree d+1 for a degree-d pair.
pub fn r_polynomial<T: Real>(p: &HomPoly2<T>, q: &HomPoly2<T>) -> HomPoly2<T> {
    assert_eq!(p.degree(), q.degree(), "p and q must share a degree");
    let d = p.degree() as usize;
    let zero = Complex::new(T::zero(), T::zero());
    let mut coeffs = vec![zero; d + 2];
    for i in 0..=d + 1 {
        let from_q = if i <= d { q.coeff(i) } else { zero };
        let from_p = if i >= 1 { p.coeff(i - 1) } else { zero };
        coeffs[i] = from_q - from_p;
    }
    HomPoly2::new(p.degree() + 1, coeffs).expect("length d+2")
}

/// Projective roots of a homogeneous polynomial with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjRoots<T: Real> {
    /// The zero polynomial: every direction is a root.
    Dicritical,
    Roots(Vec<(ProjDirection<T>, u32)>),
}

/// All zeros of `poly` in P^1(C). Roots at [1:0] and [0:1] are read off the
/// vanishing end-coefficients exactly; the interior factor goes through
/// Aberth iteration, and approximations within `CLUSTER_CHORDAL` of each
/// other merge into multiple roots at their chart centroid.
pub fn proj_roots<T: Real>(poly: &HomPoly2<T>) -> ProjRoots<T> {
    if poly.is_zero() {
        return ProjRoots::Dicritical;
    }
    let d = poly.degree() as usize;
    let coeffs = poly.coeffs();
    let low_zeros = coeffs.iter().take_while(|c| c.norm_sqr().is_zero()).count();
    let high_zeros = coeffs.iter().rev().take_while(|c| c.norm_sqr().is_zero()).count();

    // Candidate roots before clustering: (direction, structural multiplicity).
    let mut candidates: Vec<(ProjDirection<T>, u32)> = Vec::new();
    if low_zeros > 0 {
        candidates.push((ProjDirection::one_zero(), low_zeros as u32));
    }
    if high_zeros > 0 {
        candidates.push((ProjDirection::zero_one(), high_zeros as u32));
    }
    let middle = &coeffs[low_zeros..=d - high_zeros];
    if middle.len() > 1 {
        for u in aberth_roots(middle) {
            candidates.push((ProjDirection::from_slope(u), 1));
        }
    }

    // Greedy chordal clustering; clusters inherit the summed multiplicity and
    // re-center at the componentwise mean of their canonical representatives
    // (structural roots are exact, so they anchor their cluster).
    let mut clusters: Vec<(ProjDirection<T>, u32, bool)> = Vec::new();
    let thresh = T::of(CLUSTER_CHORDAL);
    for (dir, mult) in candidates {
        let structural = mult > 1
            || dir.chordal(&ProjDirection::one_zero()).is_zero()
            || dir.chordal(&ProjDirection::zero_one()).is_zero();
        match clusters.iter_mut().find(|(c, _, _)| c.chordal(&dir) <= thresh) {
            Some((center, count, anchored)) => {
                if !*anchored {
                    if structural {
                        *center = dir;
                        *anchored = true;
                    } else {
                        // Running chart mean; members are within 1e-8 so the
                        // canonical representatives average safely.
                        let k = T::of(*count as f64);
                        let a = (center.alpha * k + dir.alpha) / (k + T::one());
                        let b = (center.beta * k + dir.beta) / (k + T::one());
                        *center = ProjDirection::new(a, b).expect("mean of unit vectors is nonzero");
                    }
                }
                *count += mult;
            }
            None => clusters.push((dir, mult, structural)),
        }
    }

    let mut roots: Vec<(ProjDirection<T>, u32)> =
        clusters.into_iter().map(|(dir, mult, _)| (dir, mult)).collect();
    roots.sort_by(|a, b| {
        a.0.sort_key()
            .partial_cmp(&b.0.sort_key())
            .expect("canonical representatives are finite")
    });
    ProjRoots::Roots(roots)
}

/// Eigenvalue lambda with P(v) = lambda v, read in the dominant-coordinate
/// chart of the canonical representative.
fn lambda_for<T: Real>(p: &HomPoly2<T>, q: &HomPoly2<T>, v: &ProjDirection<T>) -> Complex<T> {
    let pt = crate::poly::Complex2::new(v.alpha, v.beta);
    if v.alpha.norm() >= v.beta.norm() {
        p.eval(pt) / v.alpha
    } else {
        q.eval(pt) / v.beta
    }
}

fn pair_scale<T: Real>(p: &HomPoly2<T>, q: &HomPoly2<T>) -> T {
    p.coeff_scale().max(q.coeff_scale())
}

/// Characteristic directions of the leading pair with multiplicity,
/// eigenvalue, degeneracy flag and (for order-2 maps) director.
pub fn classify_directions<T: Real>(
    map: &PolyMap2<T>,
) -> Result<Vec<CharDirReport<T>>, ChardirError> {
    let (p, q) = map.leading();
    let r = r_polynomial(p, q);
    let roots = match proj_roots(&r) {
        ProjRoots::Dicritical => return Err(ChardirError::Dicritical),
        ProjRoots::Roots(roots) => roots,
    };
    let scale = pair_scale(p, q);
    let degeneracy = T::of(DEGENERACY_FACTOR) * scale;
    let reports = roots
        .into_iter()
        .map(|(direction, multiplicity)| {
            let lambda = lambda_for(p, q, &direction);
            let degenerate = lambda.norm() < degeneracy;
            let director = if !degenerate && map.order() == 2 {
                director(map, &direction).ok()
            } else {
                None
            };
            CharDirReport { direction, multiplicity, lambda, degenerate, director }
        })
        .collect();
    Ok(reports)
}

/// Derivative of the dehomogenization of a homogeneous polynomial.
/// `by_w = true` takes s(u) = poly(1, u), else s(t) = poly(t, 1).
fn dehomogenized<T: Real>(poly: &HomPoly2<T>, by_w: bool) -> Vec<Complex<T>> {
    let d = poly.degree() as usize;
    if by_w {
        poly.coeffs().to_vec()
    } else {
        (0..=d).map(|k| poly.coeff(d - k)).collect()
    }
}

fn eval_poly_derivative<T: Real>(coeffs: &[Complex<T>], at: Complex<T>) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in (1..coeffs.len()).rev() {
        acc = acc * at + coeffs[k] * Complex::new(T::of(k as f64), T::zero());
    }
    acc
}

/// Director of a non-degenerate characteristic direction of an order-2 germ,
/// computed by exact polynomial differentiation of the dehomogenized r in the
/// chart of the dominant coordinate:
/// for [1:m], r'(1, u)|_{u=m} / p(1, m); for [a:1], (-r)'(t, 1)|_{t=a} / q(a, 1).
pub fn director<T: Real>(
    map: &PolyMap2<T>,
    v: &ProjDirection<T>,
) -> Result<Complex<T>, ChardirError> {
    if map.order() != 2 {
        return Err(ChardirError::OrderNotTwo(map.order()));
    }
    let (p, q) = map.leading();
    let scale = pair_scale(p, q);
    let lambda = lambda_for(p, q, v);
    if lambda.norm() < T::of(DEGENERACY_FACTOR) * scale {
        return Err(ChardirError::DegenerateDirector);
    }
    let r = r_polynomial(p, q);
    let one = Complex::new(T::one(), T::zero());
    if v.alpha.norm() >= v.beta.norm() {
        let m = v.beta / v.alpha;
        let s = dehomogenized(&r, true);
        let den = p.eval(crate::poly::Complex2::new(one, m));
        Ok(eval_poly_derivative(&s, m) / den)
    } else {
        let t = v.alpha / v.beta;
        let mut s = dehomogenized(&r, false);
        for c in &mut s {
            *c = -*c;
        }
        let den = q.eval(crate::poly::Complex2::new(t, one));
        Ok(eval_poly_derivative(&s, t) / den)
    }
}

/// Degree-by-degree status of `v` against all stored components; missing
/// degrees between the order and the top count as zero components, which are
/// trivially characteristic and degenerate.
pub fn degreewise<T: Real>(map: &PolyMap2<T>, v: &ProjDirection<T>) -> DegreewiseStatus<T> {
    let pt = crate::poly::Complex2::new(v.alpha, v.beta);
    let zero = Complex::new(T::zero(), T::zero());
    let mut per_degree = Vec::new();
    for j in map.order()..=map.top_degree() {
        let status = match map.component(j) {
            None => DegreeStatus { degree: j, is_char_dir: true, degenerate: true, lambda: zero },
            Some((p, q)) => {
                let scale = pair_scale(p, q);
                let tol = T::of(DEGENERACY_FACTOR) * scale;
                // Characteristic for P_j iff z*q_j - w*p_j vanishes at v.
                let residual = (v.alpha * q.eval(pt) - v.beta * p.eval(pt)).norm();
                let is_char = residual < tol;
                let lambda = lambda_for(p, q, v);
                let degenerate = is_char && lambda.norm() < tol;
                DegreeStatus { degree: j, is_char_dir: is_char, degenerate, lambda }
            }
        };
        per_degree.push(status);
    }
    let mut s_truncated = map.order() - 1;
    for st in &per_degree {
        if st.is_char_dir {
            s_truncated = st.degree;
        } else {
            break;
        }
    }
    let char_to_top = s_truncated == map.top_degree();
    let r_plus_1 = per_degree
        .iter()
        .take_while(|st| st.is_char_dir)
        .find(|st| !st.degenerate)
        .map(|st| st.degree);
    DegreewiseStatus { per_degree, s_truncated, char_to_top, r_plus_1 }
}

/// The branch beta = (-a r)^(-1/r) with strictly positive real part, if one
/// exists. Ties among the r-th roots break by largest real part, then
/// smallest |argument|, then positive imaginary part, making the choice
/// deterministic for conjugate pairs.
pub fn beta_branch(a: Complex64, r: u32) -> Result<Option<Complex64>, ChardirError> {
    if a == Complex64::new(0.0, 0.0) {
        return Err(ChardirError::InvalidParameter("beta branch needs a != 0".into()));
    }
    if r < 2 {
        return Err(ChardirError::InvalidParameter(format!("beta branch needs r >= 2, got {r}")));
    }
    let base = (-a * r as f64).inv();
    let modulus = base.norm().powf(1.0 / r as f64);
    let arg0 = base.arg() / r as f64;
    // Roots that are mathematically on the imaginary axis come out with
    // |Re| ~ eps * modulus; those must not count as strictly positive.
    let positive_floor = modulus * 1e-12;
    let mut best: Option<Complex64> = None;
    for k in 0..r {
        let angle = arg0 + 2.0 * std::f64::consts::PI * k as f64 / r as f64;
        let candidate = Complex64::from_polar(modulus, angle);
        if candidate.re <= positive_floor {
            continue;
        }
        best = match best {
            None => Some(candidate),
            Some(cur) => {
                let better = candidate.re > cur.re
                    || (candidate.re == cur.re && candidate.arg().abs() < cur.arg().abs())
                    || (candidate.re == cur.re
                        && candidate.arg().abs() == cur.arg().abs()
                        && candidate.im > cur.im);
                Some(if better { candidate } else { cur })
            }
        };
    }
    Ok(best)
}

/// JSON report for a set of characteristic directions: fixed field order,
/// numbers with 17 significant digits.
pub fn chardirs_json(reports: &[CharDirReport<f64>]) -> String {
    use crate::fmt17;
    let mut out = String::from("[");
    for (i, rep) in reports.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let d = &rep.direction;
        let director = match rep.director {
            Some(dir) => format!("[{},{}]", fmt17(dir.re), fmt17(dir.im)),
            None => "null".to_string(),
        };
        out.push_str(&format!(
            "{{\"direction\":[{},{},{},{}],\"multiplicity\":{},\"lambda\":[{},{}],\"degenerate\":{},\"director\":{}}}",
            fmt17(d.alpha().re),
            fmt17(d.alpha().im),
            fmt17(d.beta().re),
            fmt17(d.beta().im),
            rep.multiplicity,
            fmt17(rep.lambda.re),
            fmt17(rep.lambda.im),
            rep.degenerate,
            director
        ));
    }
    out.push(']');
    out
}
