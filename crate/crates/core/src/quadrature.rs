//! Adaptive Gauss-Kronrod (7/15) quadrature and bracketed bisection.

use crate::error::{Error, Result};
use crate::real::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, error estimate).
fn gk15<T: Real>(f: &mut impl FnMut(T) -> T, a: T, b: T) -> (T, T) {
    let c = T::lit(0.5) * (a + b);
    let hw = T::lit(0.5) * (b - a);
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = hw * T::lit(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        kron += T::lit(WGK[i]) * s;
        if i % 2 == 1 {
            gauss += T::lit(WG[i / 2]) * s;
        }
    }
    (kron * hw, ((kron - gauss) * hw).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by global
/// bisection of the worst panel. Endpoint singularities are fine as long
/// as they are integrable (nodes never touch the endpoints).
pub fn integrate<T: Real>(f: impl FnMut(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    integrate_rel(f, a, b, tol, T::zero())
}

/// As [`integrate`], stopping once the error estimate is below
/// `max(abs_tol, rel_tol |estimate|)`.
pub fn integrate_rel<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, abs_tol: T, rel_tol: T) -> Result<T> {
    const MAX_PANELS: usize = 4000;
    let (v, e) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: T = panels.iter().map(|p| p.2).sum();
        let err: T = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS || !err.is_finite() {
            return Err(Error::Quadrature { estimate: total.to_f64_lossy(), error: err.to_f64_lossy() });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (pa + pb);
        let (v1, e1) = gk15(&mut f, pa, mid);
        let (v2, e2) = gk15(&mut f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

/// Root of a monotone function on `[lo, hi]` by bisection, to `xtol`.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> Result<T>, mut lo: T, mut hi: T, xtol: T) -> Result<T> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootNotBracketed { lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() });
    }
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if hi - lo <= xtol {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_singular_endpoints() {
        let v = integrate(|x: f64| x.powi(5), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 64.0 / 6.0).abs() < 1e-11);
        let s = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-9).unwrap();
        assert!((s - 2.0).abs() < 1e-8);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(matches!(bisect(|x: f64| Ok(x * x + 1.0), 0.0, 1.0, 1e-9), Err(Error::RootNotBracketed { .. })));
    }
}
