//! Aberth-Ehrlich simultaneous root iteration for univariate complex
//! polynomials. Degrees here are small (the characteristic polynomial of an
//! order-k map has degree k+2), so a dense, allocation-light implementation
//! is plenty.

use crate::scalar::Real;
use num_complex::Complex;

/// Evaluate `sum coeffs[k] u^k` and its derivative by Horner.
fn eval_with_derivative<T: Real>(coeffs: &[Complex<T>], u: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::new(T::zero(), T::zero());
    let mut dp = Complex::new(T::zero(), T::zero());
    for &c in coeffs.iter().rev() {
        dp = dp * u + p;
        p = p * u + c;
    }
    (p, dp)
}

/// All complex roots of a polynomial with nonzero leading and constant
/// coefficients, to near machine precision. `coeffs[k]` multiplies `u^k`.
///
/// Iterates Gauss-Seidel style until the largest correction stagnates below
/// a few ulps; a residual floor of 1e-13 (relative to the coefficient scale)
/// is enforced by the caller's tests rather than trusted blindly here.
pub fn aberth_roots<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    debug_assert!(lead.norm() > T::zero(), "leading coefficient must be nonzero");

    // Initial guesses on a circle around the root centroid, radius from the
    // Cauchy-style bound, angles offset to break symmetric stalemates.
    let nt = T::of(n as f64);
    let center = -coeffs[n - 1] / (lead * nt);
    let cauchy = coeffs[..n]
        .iter()
        .map(|c| (*c / lead).norm())
        .fold(T::zero(), T::max);
    let radius = (T::one() + cauchy).max(T::of(1e-3));
    let mut roots: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let angle = T::of(2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.376);
            center + Complex::from_polar(radius, angle)
        })
        .collect();

    let tiny = T::epsilon() * T::of(4.0);
    let max_sweeps = 200;
    for _ in 0..max_sweeps {
        let mut worst = T::zero();
        for i in 0..n {
            let x = roots[i];
            let (p, dp) = eval_with_derivative(coeffs, x);
            if p.norm() == T::zero() {
                continue;
            }
            let newton = if dp.norm() == T::zero() {
                // Derivative vanished at the iterate; nudge off the critical point.
                Complex::new(T::of(1e-8), T::of(1e-8))
            } else {
                p / dp
            };
            let mut repulsion = Complex::new(T::zero(), T::zero());
            for (j, &other) in roots.iter().enumerate() {
                if j != i {
                    let d = x - other;
                    if d.norm() > T::zero() {
                        repulsion = repulsion + d.inv();
                    }
                }
            }
            let denom = Complex::new(T::one(), T::zero()) - newton * repulsion;
            let step = if denom.norm() == T::zero() { newton } else { newton / denom };
            roots[i] = x - step;
            let rel = step.norm() / (T::one() + roots[i].norm());
            worst = worst.max(rel);
        }
        if worst < tiny {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        coeffs
    }

    fn assert_roots_match(expected: &[Complex64], got: &[Complex64], tol: f64) {
        assert_eq!(expected.len(), got.len());
        let mut used = vec![false; got.len()];
        for &e in expected {
            let (j, d) = got
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, g)| (j, (g - e).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert!(d < tol, "no root within {tol} of {e}; nearest {d}");
            used[j] = true;
        }
    }

    #[test]
    fn simple_real_roots() {
        let expected =
            [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 0.0), Complex64::new(0.5, 0.0)];
        let got = aberth_roots(&poly_from_roots(&expected));
        assert_roots_match(&expected, &got, 1e-12);
    }

    #[test]
    fn complex_roots() {
        let expected = [
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 3.0),
            Complex64::new(-1.5, 0.25),
        ];
        let got = aberth_roots(&poly_from_roots(&expected));
        assert_roots_match(&expected, &got, 1e-11);
    }

    #[test]
    fn double_root_lands_within_cluster_radius() {
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-3.0, 0.0),
        ];
        let got = aberth_roots(&poly_from_roots(&expected));
        // A double root is only locatable to ~sqrt(eps); the chordal
        // clustering downstream merges the pair.
        assert_roots_match(&expected, &got, 5e-7);
    }

    #[test]
    fn wilkinson_like_separation() {
        let expected: Vec<Complex64> = (1..=8).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let got = aberth_roots(&poly_from_roots(&expected));
        assert_roots_match(&expected, &got, 1e-9);
    }
}
