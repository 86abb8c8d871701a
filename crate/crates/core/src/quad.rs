//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};
use crate::num::Real;

const MAX_DEPTH: u32 = 48;

/// ∫ₐᵇ f with a relative tolerance on the total. Fails if the recursion
/// bottoms out before every panel meets its share of the tolerance.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rel_tol: T) -> Result<T> {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    // coarse pass fixes the absolute scale for the tolerance
    let scale = coarse_abs(&f, a, b).max(T::min_positive_value());
    let mut worst = T::zero();
    let v = recurse(&f, a, b, fa, fm, fb, whole, rel_tol * scale, 0, &mut worst);
    if worst > rel_tol * scale {
        return Err(Error::Quadrature {
            achieved: (worst / scale).to_f64_lossy(),
            requested: rel_tol.to_f64_lossy(),
        });
    }
    Ok(v)
}

fn coarse_abs<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    let n = 64;
    let h = (b - a) / T::lit(n as f64);
    (0..=n).map(|i| f(a + h * T::lit(i as f64)).abs()).fold(T::zero(), |s, v| s + v) * h.abs()
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
    worst: &mut T,
) -> T {
    let two = T::lit(2.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = (left + right - whole) / T::lit(15.0);
    if err.abs() <= tol || depth >= MAX_DEPTH {
        if err.abs() > tol {
            *worst = worst.max(err.abs());
        }
        return left + right + err;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / two, depth + 1, worst)
        + recurse(f, m, b, fm, frm, fb, right, tol / two, depth + 1, worst)
}

/// Expectation of `f` under a normal distribution N(mean, sd²), integrated
/// over ±`span` standard deviations. A zero width evaluates `f(mean)`.
pub fn gaussian_expectation<T: Real, F: Fn(T) -> T>(f: F, mean: T, sd: T, rel_tol: T) -> Result<T> {
    if sd == T::zero() {
        return Ok(f(mean));
    }
    let span = T::lit(12.0);
    let norm = T::one() / (sd * T::TAU().sqrt());
    let two = T::lit(2.0);
    integrate(
        |x| {
            let u = (x - mean) / sd;
            f(x) * norm * (-u * u / two).exp()
        },
        mean - span * sd,
        mean + span * sd,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_gaussians() {
        let v = integrate(|x: f64| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let e = gaussian_expectation(|x: f64| x * x, 1.0, 2.0, 1e-10).unwrap();
        assert!((e - 5.0).abs() < 1e-8);
        let z = gaussian_expectation(|x: f64| (-2.0 * x * x).exp(), 0.0, 0.5, 1e-10).unwrap();
        assert!((z - 1.0 / (1.0f64 + 4.0 * 0.25).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn works_in_f32() {
        let v = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, 1e-5).unwrap();
        assert!((v - 2.0).abs() < 1e-4);
    }
}
