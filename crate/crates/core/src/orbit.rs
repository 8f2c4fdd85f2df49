//! Orbit iteration and fate classification, the diagnostic chart quantities
//! for maps written in the (x, y) chart, and rate-law fitting.

use crate::chardir::{classify_directions, ProjDirection};
use crate::poly::{Complex2, PolyMap2};
use crate::scalar::Real;
use num_complex::{Complex, Complex64};
use thiserror::Error;

/// Trailing-window chordal diameter below which the direction of approach
/// counts as stable.
pub const WINDOW_DIAMETER_MAX: f64 = 1e-6;
/// A stable direction must land within this chordal distance of a
/// characteristic direction to be reported (any directional limit is
/// characteristic, so a wider miss means the window lied).
pub const DIRECTION_MATCH: f64 = 1e-3;
/// Absolute slack for the monotone-coordinate comparison.
pub const MONOTONE_SLACK: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("invalid orbit parameters: {0}")]
    InvalidParams(String),
    #[error("orbit magnitude exceeded the overflow guard at step {step}")]
    Overflow { step: u32 },
    #[error("diagnostics requires x != 0 at the start")]
    ZeroStartX,
    #[error("rate fit: {0}")]
    RateFit(String),
}

/// Which line the "converges to the line" test measures against.
///
/// `Diagonal` is the {z = w} test of the (z, w) chart. Maps expressed in the
/// (x, y) chart (where the diagonal has moved to the second axis) use
/// `SecondAxis`, i.e. {y = 0}; callers conjugate the map, then transport the
/// line test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineMode {
    #[default]
    Diagonal,
    SecondAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams<T: Real> {
    pub max_iter: u32,
    pub escape_radius: T,
    pub origin_eps: T,
    pub line_eps: T,
    pub direction_window: u32,
    pub line_mode: LineMode,
}

impl<T: Real> Default for OrbitParams<T> {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            escape_radius: T::of(5.0),
            origin_eps: T::of(1e-10),
            line_eps: T::of(1e-10),
            direction_window: 64,
            line_mode: LineMode::Diagonal,
        }
    }
}

impl<T: Real> OrbitParams<T> {
    pub fn validate(&self) -> Result<(), OrbitError> {
        if !(self.escape_radius > T::one()) {
            return Err(OrbitError::InvalidParams("escape_radius must exceed 1".into()));
        }
        for (name, v) in [("origin_eps", self.origin_eps), ("line_eps", self.line_eps)] {
            if !(v > T::zero() && v < T::one()) {
                return Err(OrbitError::InvalidParams(format!("{name} must lie in (0, 1)")));
            }
        }
        if self.direction_window == 0 || self.max_iter < self.direction_window {
            return Err(OrbitError::InvalidParams(
                "need max_iter >= direction_window >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Fate of one orbit.
#[derive(Debug, Clone, PartialEq)]
pub enum OrbitClass<T: Real> {
    /// Norm dropped below origin_eps; `along` holds the matched characteristic
    /// direction when the trailing window stabilized, None for "no stable
    /// direction".
    ConvergesToOrigin { along: Option<ProjDirection<T>> },
    ConvergesToLineNotOrigin,
    Escapes,
    Indeterminate,
}

impl<T: Real> OrbitClass<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            OrbitClass::ConvergesToOrigin { .. } => "origin",
            OrbitClass::ConvergesToLineNotOrigin => "line",
            OrbitClass::Escapes => "escape",
            OrbitClass::Indeterminate => "indeterminate",
        }
    }

    pub fn same_tag(&self, other: &Self) -> bool {
        self.tag() == other.tag()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitOutcome<T: Real> {
    pub class: OrbitClass<T>,
    pub iterations_used: u32,
    pub final_point: Complex2<T>,
    /// max over n of n * |gap_n| with the gap of the active line mode.
    pub sup_n_times_gap: T,
    /// Monotone-coordinate check for real nonnegative starts: with z <= w the
    /// first coordinate never drops below its start (symmetrically for w);
    /// vacuously true for other starts.
    pub monotone_coordinate_ok: bool,
}

fn line_gap<T: Real>(pt: &Complex2<T>, mode: LineMode) -> Complex<T> {
    match mode {
        LineMode::Diagonal => pt.z - pt.w,
        LineMode::SecondAxis => pt.w,
    }
}

enum MonotoneTrack<T> {
    None,
    FirstCoord(T),
    SecondCoord(T),
}

/// Reusable classifier: characteristic directions are computed once per map.
pub struct Classifier<'m, T: Real> {
    map: &'m PolyMap2<T>,
    params: OrbitParams<T>,
    char_dirs: Vec<ProjDirection<T>>,
}

impl<'m, T: Real> Classifier<'m, T> {
    pub fn new(map: &'m PolyMap2<T>, params: OrbitParams<T>) -> Result<Self, OrbitError> {
        params.validate()?;
        // A dicritical map simply has no finite direction list to match
        // against; classification still works, directions report as None.
        let char_dirs = classify_directions(map)
            .map(|reports| reports.into_iter().map(|r| r.direction).collect())
            .unwrap_or_default();
        Ok(Self { map, params, char_dirs })
    }

    pub fn params(&self) -> &OrbitParams<T> {
        &self.params
    }

    fn direction_of_window(&self, window: &[Complex2<T>]) -> Option<ProjDirection<T>> {
        let dirs: Vec<ProjDirection<T>> = window
            .iter()
            .filter_map(|pt| ProjDirection::new(pt.z, pt.w).ok())
            .collect();
        if dirs.is_empty() {
            return None;
        }
        let mut diameter = T::zero();
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                diameter = diameter.max(dirs[i].chordal(&dirs[j]));
            }
        }
        if diameter >= T::of(WINDOW_DIAMETER_MAX) {
            return None;
        }
        let inv = T::of(1.0 / dirs.len() as f64);
        let mut ma = Complex::new(T::zero(), T::zero());
        let mut mb = ma;
        for d in &dirs {
            ma = ma + d.alpha() * inv;
            mb = mb + d.beta() * inv;
        }
        let mean = ProjDirection::new(ma, mb).ok()?;
        self.char_dirs
            .iter()
            .map(|cd| (cd, mean.chordal(cd)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("chordal distances are finite"))
            .filter(|(_, d)| *d < T::of(DIRECTION_MATCH))
            .map(|(cd, _)| *cd)
    }

    /// Decision procedure, checked in order at each iterate: escape on
    /// norm > escape_radius; origin on norm < origin_eps (with the trailing
    /// direction window deciding `along`); line convergence after
    /// direction_window consecutive iterates with |gap| < line_eps while the
    /// norm stays >= 10 * origin_eps; Indeterminate when the budget runs out.
    /// Orbits that land exactly on a fixed point resolve immediately.
    pub fn classify(&self, start: Complex2<T>) -> OrbitOutcome<T> {
        let p = &self.params;
        let window = p.direction_window as usize;
        let escape_sq = p.escape_radius * p.escape_radius;
        let origin_sq = p.origin_eps * p.origin_eps;
        let line_floor = T::of(10.0) * p.origin_eps;
        let line_floor_sq = line_floor * line_floor;

        let mut ring: Vec<Complex2<T>> = Vec::with_capacity(window);
        let mut ring_at = 0usize;
        let mut sup_ngap = T::zero();
        let mut line_run = 0u32;
        let mut monotone = MonotoneTrack::None;
        let mut monotone_ok = true;
        if start.z.im.is_zero()
            && start.w.im.is_zero()
            && start.z.re >= T::zero()
            && start.w.re >= T::zero()
        {
            monotone = if start.z.re <= start.w.re {
                MonotoneTrack::FirstCoord(start.z.re)
            } else {
                MonotoneTrack::SecondCoord(start.w.re)
            };
        }

        let mut pt = start;
        let mut n: u32 = 0;
        loop {
            if ring.len() < window {
                ring.push(pt);
            } else {
                ring[ring_at] = pt;
                ring_at = (ring_at + 1) % window;
            }

            let norm_sq = pt.norm_sqr();
            if !norm_sq.is_finite() || norm_sq > escape_sq {
                return outcome(OrbitClass::Escapes, n, pt, sup_ngap, monotone_ok);
            }
            if norm_sq < origin_sq {
                let along = self.direction_of_window(&ring);
                return outcome(OrbitClass::ConvergesToOrigin { along }, n, pt, sup_ngap, monotone_ok);
            }
            let gap = line_gap(&pt, p.line_mode).norm();
            sup_ngap = sup_ngap.max(T::of(n as f64) * gap);
            if gap < p.line_eps && norm_sq >= line_floor_sq {
                line_run += 1;
                if line_run >= p.direction_window {
                    return outcome(
                        OrbitClass::ConvergesToLineNotOrigin,
                        n,
                        pt,
                        sup_ngap,
                        monotone_ok,
                    );
                }
            } else {
                line_run = 0;
            }
            match monotone {
                MonotoneTrack::FirstCoord(z0) => {
                    if pt.z.re < z0 - T::of(MONOTONE_SLACK) {
                        monotone_ok = false;
                    }
                }
                MonotoneTrack::SecondCoord(w0) => {
                    if pt.w.re < w0 - T::of(MONOTONE_SLACK) {
                        monotone_ok = false;
                    }
                }
                MonotoneTrack::None => {}
            }

            if n == p.max_iter {
                return outcome(OrbitClass::Indeterminate, n, pt, sup_ngap, monotone_ok);
            }
            let next = self.map.eval(pt);
            if next == pt {
                // Fixed point: the limit is pt itself, so decide now.
                let class = if gap < p.line_eps && norm_sq >= line_floor_sq {
                    OrbitClass::ConvergesToLineNotOrigin
                } else {
                    OrbitClass::Indeterminate
                };
                return outcome(class, n + 1, pt, sup_ngap, monotone_ok);
            }
            pt = next;
            n += 1;
        }
    }
}

fn outcome<T: Real>(
    class: OrbitClass<T>,
    iterations_used: u32,
    final_point: Complex2<T>,
    sup_n_times_gap: T,
    monotone_coordinate_ok: bool,
) -> OrbitOutcome<T> {
    OrbitOutcome { class, iterations_used, final_point, sup_n_times_gap, monotone_coordinate_ok }
}

/// Classify a single orbit (computes the map's directions on each call; use
/// `Classifier` for sweeps).
pub fn classify<T: Real>(
    map: &PolyMap2<T>,
    start: Complex2<T>,
    params: OrbitParams<T>,
) -> Result<OrbitOutcome<T>, OrbitError> {
    Ok(Classifier::new(map, params)?.classify(start))
}

/// f^n(start), aborting with the offending step index if the magnitude blows
/// past the overflow guard (1e100, or the scalar's square-root-of-max when
/// that is not representable).
pub fn iterate<T: Real>(
    map: &PolyMap2<T>,
    start: Complex2<T>,
    n: u32,
) -> Result<Complex2<T>, OrbitError> {
    let mut bound = T::of(1e100);
    if !bound.is_finite() {
        bound = T::max_value().sqrt();
    }
    let bound_sq = bound * bound;
    let mut pt = start;
    for step in 0..n {
        pt = map.eval(pt);
        let ns = pt.norm_sqr();
        if !ns.is_finite() || ns > bound_sq {
            return Err(OrbitError::Overflow { step });
        }
    }
    Ok(pt)
}

/// Residuals of the first- and second-preimage curves of the axes under the
/// main example: |z-w-1|, |z-w+1|, |(z-w)(1-z-w)-1|, |(z-w)(1-z-w)+1|.
pub fn preimage_residuals<T: Real>(pt: &Complex2<T>) -> [T; 4] {
    let one = Complex::new(T::one(), T::zero());
    let d = pt.z - pt.w;
    let second = d * (one - pt.z - pt.w);
    [(d - one).norm(), (d + one).norm(), (second - one).norm(), (second + one).norm()]
}

// ---------------------------------------------------------------------------
// Diagnostics in the (x, y) chart.
// ---------------------------------------------------------------------------

/// One recorded diagnostic step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord<T: Real> {
    pub n: u32,
    pub x: Complex<T>,
    pub y: Complex<T>,
    /// u = y/x.
    pub u: Complex<T>,
    /// v = y/x^2 = u/x.
    pub v_chart: Complex<T>,
    /// t = 1/x.
    pub t: Complex<T>,
    /// Running partial sum of Re x_j over all steps so far.
    pub sum_re_x: T,
    /// Relative defect between the iterated x_n and the product form
    /// x * prod(1 + x_j (a x_j^{r-1} - u_j^2)); present only for maps of the
    /// shape (x - y^2 + a x^{r+1}, y - x y).
    pub product_defect: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticTrace<T: Real> {
    pub records: Vec<DiagnosticRecord<T>>,
    /// Set when x hit zero (or |x| fell below 1e-300, or the orbit blew up)
    /// and the trace stopped early; the reciprocal chart quantities stop
    /// being defined.
    pub truncated_at_zero_x: bool,
}

/// Recognize the shape (x - y^2 + a x^(r+1), y - x y) and return (a, r).
pub fn h_shape_parameters<T: Real>(map: &PolyMap2<T>) -> Option<(Complex<T>, u32)> {
    let mut degrees = map.components();
    let (two, p2, q2) = degrees.next()?;
    if two != 2 {
        return None;
    }
    let want_p2 = [T::zero(), T::zero(), -T::one()];
    let want_q2 = [T::zero(), -T::one(), T::zero()];
    for (c, w) in p2.coeffs().iter().zip(want_p2).chain(q2.coeffs().iter().zip(want_q2)) {
        if c.re != w || !c.im.is_zero() {
            return None;
        }
    }
    let (top, p_top, q_top) = degrees.next()?;
    if degrees.next().is_some() || !q_top.is_zero() {
        return None;
    }
    if p_top.coeffs().iter().skip(1).any(|c| !(c.re.is_zero() && c.im.is_zero())) {
        return None;
    }
    Some((p_top.coeff(0), top - 1))
}

/// Record the proof-chart quantities along an orbit of a map in the (x, y)
/// chart: x, y, u = y/x, v = y/x^2, t = 1/x and the running sum of Re x_j.
/// `steps` map applications, recording every `stride`-th iterate.
pub fn diagnostics<T: Real>(
    map: &PolyMap2<T>,
    start: Complex2<T>,
    steps: u32,
    stride: u32,
) -> Result<DiagnosticTrace<T>, OrbitError> {
    if start.z.norm_sqr().is_zero() {
        return Err(OrbitError::ZeroStartX);
    }
    let stride = stride.max(1);
    let h_shape = h_shape_parameters(map);
    let floor = T::of(1e-300);
    let one = Complex::new(T::one(), T::zero());

    let mut records = Vec::new();
    let mut truncated = false;
    let mut pt = start;
    let mut sum_re_x = T::zero();
    let mut product = one;
    let mut n = 0u32;
    loop {
        let x = pt.z;
        let y = pt.w;
        if x.norm() <= floor {
            truncated = true;
            break;
        }
        sum_re_x += x.re;
        if n % stride == 0 {
            let u = y / x;
            let product_defect = h_shape.map(|_| {
                let by_product = start.z * product;
                (x - by_product).norm() / x.norm()
            });
            records.push(DiagnosticRecord {
                n,
                x,
                y,
                u,
                v_chart: y / (x * x),
                t: x.inv(),
                sum_re_x,
                product_defect,
            });
        }
        if n == steps {
            break;
        }
        if let Some((a, r)) = h_shape {
            // factor 1 + x (a x^{r-1} - u^2)
            let u = y / x;
            let mut xpow = one;
            for _ in 0..r - 1 {
                xpow = xpow * x;
            }
            product = product * (one + x * (a * xpow - u * u));
        }
        pt = map.eval(pt);
        if !pt.norm_sqr().is_finite() {
            truncated = true;
            break;
        }
        n += 1;
    }
    Ok(DiagnosticTrace { records, truncated_at_zero_x: truncated })
}

// ---------------------------------------------------------------------------
// Rate fitting.
// ---------------------------------------------------------------------------

fn window_indices(
    len: usize,
    n_lo: usize,
    n_hi: usize,
) -> Result<std::ops::RangeInclusive<usize>, OrbitError> {
    let hi = n_hi.min(len.saturating_sub(1));
    if n_lo == 0 || n_lo > hi {
        return Err(OrbitError::RateFit(format!(
            "window [{n_lo}, {n_hi}] is empty for a series of length {len}"
        )));
    }
    Ok(n_lo..=hi)
}

fn least_squares_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in points {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Least-squares slope of log x_n against log n over [n_lo, n_hi]; the series
/// is indexed by n, entries outside the window are ignored. A pure power law
/// c * n^s returns s exactly (up to rounding).
pub fn rate_fit_power(xs: &[f64], n_lo: usize, n_hi: usize) -> Result<f64, OrbitError> {
    let range = window_indices(xs.len(), n_lo, n_hi)?;
    for n in range.clone() {
        if !(xs[n] > 0.0) {
            return Err(OrbitError::RateFit(format!("non-positive entry x[{n}] = {}", xs[n])));
        }
    }
    Ok(least_squares_slope(range.map(|n| ((n as f64).ln(), xs[n].ln()))))
}

/// Fit -log |y_n| = c * n^((r-1)/r) + b over the window and return
/// c / (Re beta * r / (r - 1)), the ratio against the expected
/// stretched-exponential decay coefficient.
pub fn rate_fit_stretched(
    ys: &[f64],
    r: u32,
    beta: Complex64,
    n_lo: usize,
    n_hi: usize,
) -> Result<f64, OrbitError> {
    if r < 2 {
        return Err(OrbitError::RateFit(format!("stretched fit needs r >= 2, got {r}")));
    }
    let range = window_indices(ys.len(), n_lo, n_hi)?;
    for n in range.clone() {
        if ys[n] == 0.0 || !ys[n].is_finite() {
            return Err(OrbitError::RateFit(format!("entry y[{n}] = {} not usable", ys[n])));
        }
    }
    let exponent = (r as f64 - 1.0) / r as f64;
    let slope = least_squares_slope(range.map(|n| ((n as f64).powf(exponent), -ys[n].abs().ln())));
    let expected = beta.re * r as f64 / (r as f64 - 1.0);
    Ok(slope / expected)
}

// ---------------------------------------------------------------------------
// CSV trace.
// ---------------------------------------------------------------------------

/// CSV orbit trace: header `n,re_z,im_z,re_w,im_w,gap,ngap` with
/// gap = |z_n - w_n|, one row per recorded stride, 17 significant digits.
pub fn orbit_trace_csv(
    map: &PolyMap2<f64>,
    start: Complex2<f64>,
    steps: u32,
    stride: u32,
) -> String {
    use crate::fmt17;
    let stride = stride.max(1);
    let mut out = String::from("n,re_z,im_z,re_w,im_w,gap,ngap\n");
    let mut pt = start;
    for n in 0..=steps {
        if n % stride == 0 {
            let gap = (pt.z - pt.w).norm();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                n,
                fmt17(pt.z.re),
                fmt17(pt.z.im),
                fmt17(pt.w.re),
                fmt17(pt.w.im),
                fmt17(gap),
                fmt17(n as f64 * gap)
            ));
        }
        if n < steps {
            pt = map.eval(pt);
            if !pt.is_finite() {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{builtin_f, builtin_ftilde, builtin_h};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn iterate_basics() {
        let f = builtin_f::<f64>();
        let diag = Complex2::real(0.3, 0.3);
        assert_eq!(iterate(&f, diag, 17).unwrap(), diag);
        let one = iterate(&f, Complex2::real(0.5, 0.0), 1).unwrap();
        assert!((one.z - c(0.25, 0.0)).norm() < 1e-16 && one.w.norm() == 0.0);
        let p = Complex2::real(0.123, 0.456);
        assert_eq!(iterate(&f, p, 0).unwrap(), p);
    }

    #[test]
    fn iterate_overflow_reports_step() {
        let m: PolyMap2<f64> = crate::parse::parse_map("(z + z^2, w + w^2)").unwrap();
        let err = iterate(&m, Complex2::real(1e60, 0.0), 10).unwrap_err();
        match err {
            OrbitError::Overflow { step } => assert!(step <= 2, "step {step}"),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn classify_region_a_point_converges_to_line() {
        let f = builtin_f::<f64>();
        let out = classify(&f, Complex2::real(0.3, 0.2), OrbitParams::default()).unwrap();
        assert_eq!(out.class, OrbitClass::ConvergesToLineNotOrigin);
        assert!(out.sup_n_times_gap < 1.0, "sup n|z_n - w_n| = {}", out.sup_n_times_gap);
        assert!(out.monotone_coordinate_ok);
    }

    #[test]
    fn classify_axis_point_reaches_origin_at_relaxed_eps() {
        // On {w = 0} the map is z(1-z); from 0.5 the orbit decays like 1/n,
        // so an origin threshold of 1e-2 is reachable in ~100 steps.
        let f = builtin_f::<f64>();
        let params = OrbitParams { origin_eps: 1e-2, ..OrbitParams::default() };
        let out = classify(&f, Complex2::real(0.5, 0.0), params).unwrap();
        match out.class {
            OrbitClass::ConvergesToOrigin { along: Some(dir) } => {
                assert!(dir.chordal(&ProjDirection::one_zero()) < 1e-9, "along {dir:?}");
            }
            other => panic!("expected origin along [1:0], got {other:?}"),
        }
        assert!(out.iterations_used < 1000);
    }

    #[test]
    fn classify_escaping_point() {
        // From (2, -1): z - w = 3, z_1 = 2(1-3) = -4, w_1 = -1(1+3) = -4,
        // norm sqrt(32) > 5 after one step.
        let f = builtin_f::<f64>();
        let out = classify(&f, Complex2::real(2.0, -1.0), OrbitParams::default()).unwrap();
        assert_eq!(out.class, OrbitClass::Escapes);
        assert_eq!(out.iterations_used, 1);
    }

    #[test]
    fn classify_fixed_points_short_circuit() {
        let f = builtin_f::<f64>();
        let out = classify(&f, Complex2::real(0.25, 0.25), OrbitParams::default()).unwrap();
        assert_eq!(out.class, OrbitClass::ConvergesToLineNotOrigin);
        assert!(out.iterations_used <= 1);
        let out = classify(&f, Complex2::origin(), OrbitParams::default()).unwrap();
        match out.class {
            OrbitClass::ConvergesToOrigin { along } => assert!(along.is_none()),
            other => panic!("origin start must classify origin, got {other:?}"),
        }
    }

    #[test]
    fn classify_is_deterministic() {
        let f = builtin_f::<f64>();
        let start = Complex2::new(c(0.11, 0.07), c(0.02, -0.05));
        let a = classify(&f, start, OrbitParams::default()).unwrap();
        let b = classify(&f, start, OrbitParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn params_validation() {
        let p = OrbitParams::<f64> { escape_radius: 0.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = OrbitParams::<f64> { max_iter: 3, ..Default::default() };
        assert!(p.validate().is_err());
        let p = OrbitParams::<f64> { origin_eps: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn preimage_residual_values() {
        let r = preimage_residuals(&Complex2::<f64>::real(1.0, 0.0));
        assert!(r[0] < 1e-15);
        let r = preimage_residuals(&Complex2::<f64>::real(0.0, 1.0));
        assert!(r[1] < 1e-15);
        let r = preimage_residuals(&Complex2::<f64>::real(0.3, 0.2));
        assert!(r.iter().all(|&x| x >= 0.8), "{r:?}");
    }

    #[test]
    fn diagnostics_axis_orbit_of_h() {
        let h: PolyMap2<f64> = builtin_h(c(0.1, 0.0)).unwrap();
        let start = Complex2::new(c(0.0, 0.15), c(0.0, 0.0));
        let trace = diagnostics(&h, start, 200, 1).unwrap();
        assert!(!trace.truncated_at_zero_x);
        // First step: x_1 = x(1 + a x^2) = 0.15i (1 - 0.00225).
        let x1 = trace.records[1].x;
        assert!((x1 - c(0.0, 0.15 * (1.0 - 0.00225))).norm() < 1e-17);
        for rec in &trace.records {
            assert!(rec.u.norm() == 0.0, "axis orbit has u = y/x = 0");
            assert!(rec.sum_re_x.abs() < 1e-12, "imaginary-axis orbit keeps Re x = 0");
            if let Some(d) = rec.product_defect {
                assert!(d < 1e-10, "product form is near-exact here, defect {d}");
            }
        }
        // |x| strictly decreases on the imaginary-axis petal.
        let n0 = trace.records[0].x.norm();
        let n_last = trace.records.last().unwrap().x.norm();
        assert!(n_last < n0);
    }

    #[test]
    fn diagnostics_fixed_axis_of_tilde_form() {
        let ft = builtin_ftilde::<f64>();
        let trace = diagnostics(&ft, Complex2::real(0.5, 0.0), 50, 10).unwrap();
        for rec in &trace.records {
            assert_eq!(rec.x, c(0.5, 0.0), "axis {{y=0}} is pointwise fixed");
            assert_eq!(rec.y, c(0.0, 0.0));
        }
    }

    #[test]
    fn diagnostics_rejects_zero_x() {
        let h: PolyMap2<f64> = builtin_h(c(0.1, 0.0)).unwrap();
        let err = diagnostics(&h, Complex2::real(0.0, 0.2), 10, 1).unwrap_err();
        assert_eq!(err, OrbitError::ZeroStartX);
    }

    #[test]
    fn h_shape_detection() {
        assert!(h_shape_parameters(&builtin_h::<f64>(c(0.1, 0.0)).unwrap()).is_some());
        let (a, r) =
            h_shape_parameters(&crate::parse::builtin_g::<f64>(c(1.0, 0.0), 3).unwrap()).unwrap();
        assert_eq!(a, c(1.0, 0.0));
        assert_eq!(r, 3);
        assert!(h_shape_parameters(&builtin_f::<f64>()).is_none());
        assert!(h_shape_parameters(&builtin_ftilde::<f64>()).is_none());
    }

    #[test]
    fn power_fit_recovers_exact_law() {
        let xs: Vec<f64> = (0..2000).map(|n| (n.max(1) as f64).powf(-1.0 / 3.0)).collect();
        let slope = rate_fit_power(&xs, 10, 1999).unwrap();
        assert!((slope + 1.0 / 3.0).abs() < 1e-12, "slope {slope}");
        let xs: Vec<f64> = (0..2000).map(|n| 5.0 * (n.max(1) as f64).powf(-0.5)).collect();
        let slope = rate_fit_power(&xs, 10, 1999).unwrap();
        assert!((slope + 0.5).abs() < 1e-12, "prefactor must not shift the slope");
    }

    #[test]
    fn power_fit_rejects_nonpositive() {
        let xs = vec![1.0, 0.5, 0.0, 0.25];
        assert!(rate_fit_power(&xs, 1, 3).is_err());
    }

    #[test]
    fn stretched_fit_recovers_exact_law() {
        let beta = crate::chardir::beta_branch(c(1.0, 0.0), 3).unwrap().unwrap();
        let coeff = beta.re * 1.5;
        let ys: Vec<f64> =
            (0..5000).map(|n| (-coeff * (n as f64).powf(2.0 / 3.0)).exp()).collect();
        let ratio = rate_fit_stretched(&ys, 3, beta, 100, 4999).unwrap();
        assert!((ratio - 1.0).abs() < 1e-9, "ratio {ratio}");
        let ones = vec![1.0; 1000];
        let ratio = rate_fit_stretched(&ones, 3, beta, 10, 999).unwrap();
        assert!(ratio.abs() < 1e-12, "no decay fits coefficient 0, got {ratio}");
    }

    #[test]
    fn csv_trace_shape() {
        let f = builtin_f::<f64>();
        let csv = orbit_trace_csv(&f, Complex2::real(0.3, 0.2), 10, 2);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,re_z,im_z,re_w,im_w,gap,ngap");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,"), "{first}");
        assert_eq!(csv.lines().count(), 1 + 6); // header + n = 0,2,4,6,8,10
        let row: Vec<&str> = first.split(',').collect();
        assert_eq!(row.len(), 7);
        // 17 significant digits
        assert!(row[1].contains('e') && row[1].len() >= 18, "{}", row[1]);
    }
}
