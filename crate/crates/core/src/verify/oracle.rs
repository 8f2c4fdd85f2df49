//! Extended-precision iteration oracle. Independent of the double-precision
//! path on purpose: it re-implements map evaluation and the classification
//! loop over software floats so the two routes can check each other.

use crate::chardir::ProjDirection;
use crate::orbit::{LineMode, OrbitClass, OrbitError, OrbitOutcome, OrbitParams};
use crate::poly::{Complex2, PolyMap2};
use astro_float::{BigFloat, RoundingMode};
use num_complex::Complex64;

const RM: RoundingMode = RoundingMode::ToEven;

/// Convert a BigFloat to the nearest-or-truncated f64 via the top 128
/// mantissa bits. Report-level accuracy only; classification decisions stay
/// in extended precision.
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf() {
        return if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    if x.is_zero() {
        return 0.0;
    }
    let digits = x.mantissa_digits().unwrap_or(&[]);
    let exp = x.exponent().unwrap_or(0);
    let hi = digits.last().copied().unwrap_or(0);
    let lo = if digits.len() >= 2 { digits[digits.len() - 2] } else { 0 };
    let frac = hi as f64 * 2f64.powi(-64) + lo as f64 * 2f64.powi(-128);
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    sign * frac * 2f64.powi(exp)
}

/// Complex number as a pair of BigFloats.
#[derive(Debug, Clone)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    pub fn from_f64(c: Complex64, precision: usize) -> Self {
        Self { re: BigFloat::from_f64(c.re, precision), im: BigFloat::from_f64(c.im, precision) }
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }

    fn add(&self, other: &Self, p: usize) -> Self {
        Self { re: self.re.add(&other.re, p, RM), im: self.im.add(&other.im, p, RM) }
    }

    fn sub(&self, other: &Self, p: usize) -> Self {
        Self { re: self.re.sub(&other.re, p, RM), im: self.im.sub(&other.im, p, RM) }
    }

    fn mul(&self, other: &Self, p: usize) -> Self {
        let rr = self.re.mul(&other.re, p, RM);
        let ii = self.im.mul(&other.im, p, RM);
        let ri = self.re.mul(&other.im, p, RM);
        let ir = self.im.mul(&other.re, p, RM);
        Self { re: rr.sub(&ii, p, RM), im: ri.add(&ir, p, RM) }
    }

    fn norm_sqr(&self, p: usize) -> BigFloat {
        let rr = self.re.mul(&self.re, p, RM);
        let ii = self.im.mul(&self.im, p, RM);
        rr.add(&ii, p, RM)
    }
}

/// A point of C^2 in extended precision.
#[derive(Debug, Clone)]
pub struct BigPoint {
    pub z: BigComplex,
    pub w: BigComplex,
}

impl BigPoint {
    pub fn from_f64(pt: Complex2<f64>, precision: usize) -> Self {
        Self { z: BigComplex::from_f64(pt.z, precision), w: BigComplex::from_f64(pt.w, precision) }
    }

    pub fn to_complex2(&self) -> Complex2<f64> {
        Complex2::new(self.z.to_complex64(), self.w.to_complex64())
    }

    fn norm_sqr(&self, p: usize) -> BigFloat {
        self.z.norm_sqr(p).add(&self.w.norm_sqr(p), p, RM)
    }
}

/// Extended-precision mirror of a polynomial map, coefficients converted
/// exactly from the double representation.
pub struct PrecisionOracle {
    precision: usize,
    components: Vec<(u32, Vec<BigComplex>, Vec<BigComplex>)>,
}

pub const DEFAULT_PRECISION_BITS: usize = 256;

impl PrecisionOracle {
    pub fn new(map: &PolyMap2<f64>, precision: usize) -> Self {
        let components = map
            .components()
            .map(|(j, p, q)| {
                let conv = |coeffs: &[num_complex::Complex<f64>]| {
                    coeffs.iter().map(|c| BigComplex::from_f64(*c, precision)).collect::<Vec<_>>()
                };
                (j, conv(p.coeffs()), conv(q.coeffs()))
            })
            .collect();
        Self { precision, components }
    }

    pub fn with_default_precision(map: &PolyMap2<f64>) -> Self {
        Self::new(map, DEFAULT_PRECISION_BITS)
    }

    pub fn precision_bits(&self) -> usize {
        self.precision
    }

    fn eval_hom(&self, coeffs: &[BigComplex], pt: &BigPoint) -> BigComplex {
        let p = self.precision;
        let d = coeffs.len() - 1;
        let mut acc = coeffs[d].clone();
        let mut zp = BigComplex::from_f64(Complex64::new(1.0, 0.0), p);
        for i in (0..d).rev() {
            zp = zp.mul(&pt.z, p);
            acc = acc.mul(&pt.w, p).add(&coeffs[i].mul(&zp, p), p);
        }
        acc
    }

    /// One application of the map.
    pub fn eval(&self, pt: &BigPoint) -> BigPoint {
        let p = self.precision;
        let mut z = pt.z.clone();
        let mut w = pt.w.clone();
        for (_, pc, qc) in &self.components {
            z = z.add(&self.eval_hom(pc, pt), p);
            w = w.add(&self.eval_hom(qc, pt), p);
        }
        BigPoint { z, w }
    }

    /// f^n(start) with the same overflow guard semantics as the double path.
    pub fn iterate(&self, start: Complex2<f64>, n: u32) -> Result<Complex2<f64>, OrbitError> {
        let p = self.precision;
        let bound_sq = BigFloat::from_f64(1e200, p);
        let mut pt = BigPoint::from_f64(start, p);
        for step in 0..n {
            pt = self.eval(&pt);
            let ns = pt.norm_sqr(p);
            if ns.is_nan() || ns.partial_cmp(&bound_sq).map(|o| o.is_gt()).unwrap_or(true) {
                return Err(OrbitError::Overflow { step });
            }
        }
        Ok(pt.to_complex2())
    }

    /// The classification decision procedure at extended precision. Threshold
    /// comparisons run on BigFloats; only the direction bookkeeping (an O(1)
    /// projective quantity) drops to f64.
    pub fn classify(
        &self,
        start: Complex2<f64>,
        params: &OrbitParams<f64>,
        char_dirs: &[ProjDirection<f64>],
    ) -> OrbitOutcome<f64> {
        let p = self.precision;
        let escape_sq = BigFloat::from_f64(params.escape_radius, p).powi(2, p, RM);
        let origin_sq = BigFloat::from_f64(params.origin_eps, p).powi(2, p, RM);
        let line_eps_sq = BigFloat::from_f64(params.line_eps, p).powi(2, p, RM);
        let line_floor_sq = BigFloat::from_f64(10.0 * params.origin_eps, p).powi(2, p, RM);
        let window = params.direction_window as usize;

        let lt = |a: &BigFloat, b: &BigFloat| a.partial_cmp(b).map(|o| o.is_lt()).unwrap_or(false);
        let ge = |a: &BigFloat, b: &BigFloat| a.partial_cmp(b).map(|o| o.is_ge()).unwrap_or(false);

        let mut ring: Vec<Complex2<f64>> = Vec::with_capacity(window);
        let mut ring_at = 0usize;
        let mut sup_ngap = 0.0f64;
        let mut line_run = 0u32;
        let mut pt = BigPoint::from_f64(start, p);
        let mut n = 0u32;
        loop {
            let pt64 = pt.to_complex2();
            if ring.len() < window {
                ring.push(pt64);
            } else {
                ring[ring_at] = pt64;
                ring_at = (ring_at + 1) % window;
            }

            let norm_sq = pt.norm_sqr(p);
            let gt = |a: &BigFloat, b: &BigFloat| a.partial_cmp(b).map(|o| o.is_gt()).unwrap_or(false);
            if norm_sq.is_nan() || norm_sq.is_inf() || gt(&norm_sq, &escape_sq) {
                return OrbitOutcome {
                    class: OrbitClass::Escapes,
                    iterations_used: n,
                    final_point: pt64,
                    sup_n_times_gap: sup_ngap,
                    monotone_coordinate_ok: true,
                };
            }
            if lt(&norm_sq, &origin_sq) {
                let along = direction_of_window(&ring, char_dirs);
                return OrbitOutcome {
                    class: OrbitClass::ConvergesToOrigin { along },
                    iterations_used: n,
                    final_point: pt64,
                    sup_n_times_gap: sup_ngap,
                    monotone_coordinate_ok: true,
                };
            }
            let gap = match params.line_mode {
                LineMode::Diagonal => pt.z.sub(&pt.w, p),
                LineMode::SecondAxis => pt.w.clone(),
            };
            let gap_sq = gap.norm_sqr(p);
            let gap64 = to_f64(&gap_sq).sqrt();
            sup_ngap = sup_ngap.max(n as f64 * gap64);
            if lt(&gap_sq, &line_eps_sq) && ge(&norm_sq, &line_floor_sq) {
                line_run += 1;
                if line_run >= params.direction_window {
                    return OrbitOutcome {
                        class: OrbitClass::ConvergesToLineNotOrigin,
                        iterations_used: n,
                        final_point: pt64,
                        sup_n_times_gap: sup_ngap,
                        monotone_coordinate_ok: true,
                    };
                }
            } else {
                line_run = 0;
            }
            if n == params.max_iter {
                return OrbitOutcome {
                    class: OrbitClass::Indeterminate,
                    iterations_used: n,
                    final_point: pt64,
                    sup_n_times_gap: sup_ngap,
                    monotone_coordinate_ok: true,
                };
            }
            pt = self.eval(&pt);
            n += 1;
        }
    }
}

/// Same trailing-window direction decision as the double-precision
/// classifier, shared here so both report `along` identically.
fn direction_of_window(
    window: &[Complex2<f64>],
    char_dirs: &[ProjDirection<f64>],
) -> Option<ProjDirection<f64>> {
    let dirs: Vec<ProjDirection<f64>> =
        window.iter().filter_map(|pt| ProjDirection::new(pt.z, pt.w).ok()).collect();
    if dirs.is_empty() {
        return None;
    }
    let mut diameter = 0.0f64;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            diameter = diameter.max(dirs[i].chordal(&dirs[j]));
        }
    }
    if diameter >= crate::orbit::WINDOW_DIAMETER_MAX {
        return None;
    }
    let inv = 1.0 / dirs.len() as f64;
    let mut ma = Complex64::new(0.0, 0.0);
    let mut mb = ma;
    for d in &dirs {
        ma += d.alpha() * inv;
        mb += d.beta() * inv;
    }
    let mean = ProjDirection::new(ma, mb).ok()?;
    char_dirs
        .iter()
        .map(|cd| (cd, mean.chordal(cd)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
        .filter(|(_, d)| *d < crate::orbit::DIRECTION_MATCH)
        .map(|(cd, _)| *cd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::builtin_f;

    #[test]
    fn to_f64_round_trips_doubles() {
        for x in [0.3, -1.7e10, 5e-13, 0.0, 1.0, -2.25] {
            let bf = BigFloat::from_f64(x, 256);
            assert_eq!(to_f64(&bf), x);
        }
    }

    #[test]
    fn oracle_matches_double_iteration_short_horizon() {
        let f = builtin_f::<f64>();
        let oracle = PrecisionOracle::with_default_precision(&f);
        let start = Complex2::new(Complex64::new(0.3, 0.05), Complex64::new(0.2, -0.1));
        let by_oracle = oracle.iterate(start, 50).unwrap();
        let by_double = crate::orbit::iterate(&f, start, 50).unwrap();
        assert!((by_oracle.z - by_double.z).norm() < 1e-12);
        assert!((by_oracle.w - by_double.w).norm() < 1e-12);
    }

    #[test]
    fn oracle_sees_escape() {
        let f = builtin_f::<f64>();
        let oracle = PrecisionOracle::with_default_precision(&f);
        let params = OrbitParams::default();
        let out = oracle.classify(Complex2::real(2.0, -1.0), &params, &[]);
        assert_eq!(out.class.tag(), "escape");
        assert_eq!(out.iterations_used, 1);
    }

    #[test]
    fn oracle_diagonal_is_exactly_fixed() {
        let f = builtin_f::<f64>();
        let oracle = PrecisionOracle::with_default_precision(&f);
        let pt = oracle.iterate(Complex2::real(0.25, 0.25), 100).unwrap();
        assert_eq!(pt, Complex2::real(0.25, 0.25));
    }
}
