//! Closed-form references: the fundamental solution, the Barenblatt
//! profile and the critical integrability exponents.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PParams;
use crate::quadrature::{bisect, integrate_rel};
use crate::real::Real;

fn radius<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area<T: Real>(n: usize) -> T {
    match n {
        0 => T::zero(),
        1 => T::lit(2.0),
        2 => T::TAU(),
        _ => T::TAU() * sphere_area::<T>(n - 2) / T::of_usize(n - 2),
    }
}

/// Radial exponent `(p - n) / (p - 1)`.
pub fn fundamental_exponent<T: Real>(n: usize, params: &PParams<T>) -> T {
    let p = params.p();
    (p - T::of_usize(n)) / (p - T::one())
}

/// `|x|^{(p-n)/(p-1)}`, or `log |x|` when `p = n`.
pub fn fundamental_solution<T: Real>(x: &[T], n: usize, params: &PParams<T>) -> Result<T> {
    let r = radius(&x[..n.min(x.len())]);
    if r == T::zero() {
        return Err(Error::InvalidArgument("the fundamental solution has a pole at x = 0".into()));
    }
    if params.p() == T::of_usize(n) {
        Ok(r.ln())
    } else {
        Ok(r.powf(fundamental_exponent(n, params)))
    }
}

/// The sign choice of the fundamental solution that is p-superharmonic
/// (nonnegative Riesz measure): `|x|^b` for `p < n`, `-|x|^b` for `p > n`,
/// `-log |x|` for `p = n`. At the pole this is `+inf` for `p <= n` and `0`
/// otherwise.
pub fn fundamental_superharmonic<T: Real>(x: &[T], n: usize, params: &PParams<T>) -> T {
    let r = radius(&x[..n.min(x.len())]);
    let p = params.p();
    let nn = T::of_usize(n);
    if r == T::zero() {
        return if p <= nn { T::infinity() } else { T::zero() };
    }
    if p == nn {
        -r.ln()
    } else if p < nn {
        r.powf(fundamental_exponent(n, params))
    } else {
        -r.powf(fundamental_exponent(n, params))
    }
}

/// Mass of the Dirac measure generated by [`fundamental_superharmonic`]:
/// the constant outward flux `|sphere| |b|^{p-1}` (`|sphere|` when `p = n`).
pub fn flux_constant<T: Real>(n: usize, params: &PParams<T>) -> T {
    let p = params.p();
    if p == T::of_usize(n) {
        sphere_area(n)
    } else {
        sphere_area::<T>(n) * fundamental_exponent(n, params).abs().powf(p - T::one())
    }
}

/// `lambda = n (p - 2) + p`.
pub fn barenblatt_lambda<T: Real>(n: usize, params: &PParams<T>) -> T {
    let p = params.p();
    T::of_usize(n) * (p - T::lit(2.0)) + p
}

/// Barenblatt profile `B_p(x, t)` with free constant `c`.
pub fn barenblatt<T: Real>(x: &[T], t: T, n: usize, params: &PParams<T>, c: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    let p = params.p();
    let two = T::lit(2.0);
    let lambda = barenblatt_lambda(n, params);
    let r = radius(&x[..n.min(x.len())]);
    let k = (p - two) / p * lambda.powf((T::one() - p).recip());
    let s = r / t.powf(lambda.recip());
    let core = c - k * s.powf(p / (p - T::one()));
    if core <= T::zero() {
        return T::zero();
    }
    t.powf(-T::of_usize(n) / lambda) * core.powf((p - T::one()) / (p - two))
}

/// Radius of the support of `B_p(., t)`.
pub fn support_radius<T: Real>(t: T, n: usize, params: &PParams<T>, c: T) -> T {
    let p = params.p();
    let lambda = barenblatt_lambda(n, params);
    let base = c * p * lambda.powf((p - T::one()).recip()) / (p - T::lit(2.0));
    t.powf(lambda.recip()) * base.powf((p - T::one()) / p)
}

/// `int B_p(x, t) dx` by adaptive radial quadrature, to relative accuracy `tol`.
pub fn barenblatt_mass<T: Real>(t: T, n: usize, params: &PParams<T>, c: T, tol: T) -> Result<T> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=3")));
    }
    if t <= T::zero() {
        return Ok(T::zero());
    }
    let rmax = support_radius(t, n, params, c);
    let area = sphere_area::<T>(n);
    let nm1 = (n - 1) as i32;
    let inner = integrate_rel(
        |r: T| {
            let mut x = [T::zero(); 3];
            x[0] = r;
            barenblatt(&x[..n], t, n, params, c) * r.powi(nm1)
        },
        T::zero(),
        rmax,
        T::zero(),
        tol,
    )?;
    Ok(area * inner)
}

/// The `c` giving unit mass, by bisection in `log c`.
pub fn barenblatt_normalize<T: Real>(n: usize, params: &PParams<T>, quad_tol: T) -> Result<T> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("dimension {n} outside 1..=3")));
    }
    let p = params.p();
    // mass(c) is a power of c; this bounds d(log mass)/d(log c)
    let gamma = (p - T::one()) / (p - T::lit(2.0)) + T::of_usize(n) * (p - T::one()) / p;
    let qtol = T::lit(0.1) * quad_tol;
    let xtol = T::lit(0.1) * quad_tol / gamma;
    let lc = bisect(
        |lc: T| Ok(barenblatt_mass(T::one(), n, params, lc.exp(), qtol)?.ln()),
        T::lit(-20.0),
        T::lit(20.0),
        xtol,
    )?;
    Ok(lc.exp())
}

/// Strict upper bounds of the integrability exponents (`+inf` when vacuous).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalExponents<T> {
    pub r_elliptic: T,
    pub q_elliptic: T,
    pub r_parabolic: T,
    pub q_parabolic: T,
}

pub fn exponent_bounds<T: Real>(n: usize, params: &PParams<T>) -> CriticalExponents<T> {
    let p = params.p();
    let nn = T::of_usize(n);
    let one = T::one();
    let r_elliptic = if p < nn { nn * (p - one) / (nn - p) } else { T::infinity() };
    let q_elliptic = if n == 1 { T::infinity() } else { nn * (p - one) / (nn - one) };
    CriticalExponents {
        r_elliptic,
        q_elliptic,
        r_parabolic: p - one + p / nn,
        q_parabolic: p - one + (nn + one).recip(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> PParams<f64> {
        PParams::new(3.0).unwrap()
    }

    #[test]
    fn fundamental_values() {
        let v = fundamental_solution(&[4.0, 0.0, 0.0, 0.0], 4, &p3()).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(fundamental_solution(&[1.0, 0.0, 0.0], 3, &p3()).unwrap(), 0.0);
        let v = fundamental_solution(&[8.0, 0.0], 2, &p3()).unwrap();
        assert!((v - 8f64.sqrt()).abs() < 1e-14);
        assert!(fundamental_solution(&[0.0, 0.0], 2, &p3()).is_err());
    }

    #[test]
    fn superharmonic_sign_choice() {
        assert!(fundamental_superharmonic(&[0.5, 0.0], 2, &p3()) < 0.0);
        assert_eq!(fundamental_superharmonic(&[0.0, 0.0], 2, &p3()), 0.0);
        assert_eq!(fundamental_superharmonic(&[0.0, 0.0, 0.0], 3, &p3()), f64::INFINITY);
        assert!((flux_constant(2, &p3()) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area::<f64>(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((sphere_area::<f64>(4) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn barenblatt_basics() {
        let p = p3();
        assert_eq!(barenblatt(&[0.3], -1.0, 1, &p, 1.0), 0.0);
        assert_eq!(barenblatt_lambda(2, &p), 5.0);
        assert!((barenblatt(&[0.0], 1.0, 1, &p, 0.7) - 0.49).abs() < 1e-15);
        let r = support_radius(1.3, 1, &p, 0.7);
        assert_eq!(barenblatt(&[1.01 * r], 1.3, 1, &p, 0.7), 0.0);
        assert!(barenblatt(&[0.99 * r], 1.3, 1, &p, 0.7) > 0.0);
        let ratio = support_radius(2.6, 2, &p, 0.7) / support_radius(1.3, 2, &p, 0.7);
        assert!((ratio - 2f64.powf(0.2)).abs() < 1e-14);
    }

    #[test]
    fn normalization_is_time_independent() {
        for n in 1..=3 {
            let p = PParams::<f64>::new(3.5).unwrap();
            let c = barenblatt_normalize(n, &p, 1e-9).unwrap();
            let m1 = barenblatt_mass(1.0, n, &p, c, 1e-11).unwrap();
            let m2 = barenblatt_mass(2.0, n, &p, c, 1e-11).unwrap();
            assert!((m1 - 1.0).abs() < 1e-9, "n={n} m1={m1}");
            assert!((m2 - 1.0).abs() < 1e-8, "n={n} m2={m2}");
        }
    }

    /// Independent oracle: bisection with a 10^6-point trapezoid rule.
    #[test]
    fn normalization_matches_trapezoid_oracle() {
        let p = p3();
        let mass = |c: f64| {
            let r = support_radius(1.0, 1, &p, c);
            let m = 1_000_000;
            let h = r / m as f64;
            let s: f64 = (1..m).map(|i| barenblatt(&[i as f64 * h], 1.0, 1, &p, c)).sum();
            2.0 * h * (s + 0.5 * barenblatt(&[0.0], 1.0, 1, &p, c))
        };
        let (mut lo, mut hi) = (1e-3, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mass(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = barenblatt_normalize(1, &p, 1e-10).unwrap();
        assert!((c / lo - 1.0).abs() < 1e-5, "{c} vs {lo}");
    }

    #[test]
    fn critical_exponents() {
        let e = exponent_bounds(4, &p3());
        assert!((e.r_elliptic - 8.0).abs() < 1e-14 && (e.q_elliptic - 8.0 / 3.0).abs() < 1e-14);
        let e = exponent_bounds(2, &p3());
        assert!((e.r_parabolic - 3.5).abs() < 1e-14 && (e.q_parabolic - 7.0 / 3.0).abs() < 1e-14);
        assert_eq!(exponent_bounds(3, &p3()).r_elliptic, f64::INFINITY);
        assert_eq!(exponent_bounds(1, &p3()).q_elliptic, f64::INFINITY);
    }
}
