//! Piecewise-affine gradients and the discrete Lebesgue / Sobolev norms.
//!
//! Function terms use the lumped (trapezoidal) nodal quadrature of the
//! region; gradient terms are integrated exactly over the Kuhn simplices.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, NodeBox, Simplex, SpaceTimeBox, SpaceTimeFunction, MAX_DIM};
use crate::real::Real;

/// Gradient of the affine interpolant on one simplex.
#[inline]
pub(crate) fn simplex_gradient<T: Real>(grid: &Grid<T>, u: &[T], s: &Simplex) -> [T; MAX_DIM] {
    let h = grid.spacing();
    let mut g = [T::zero(); MAX_DIM];
    for k in 0..grid.dim() {
        let a = s.axes[k];
        g[a] = (u[s.vertices[k + 1]] - u[s.vertices[k]]) / h[a];
    }
    g
}

#[inline]
pub(crate) fn norm2<T: Real>(g: &[T; MAX_DIM]) -> T {
    (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt()
}

/// Per-simplex constant gradients of a nodal field, in `Grid::for_each_simplex` order.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexGradients<T> {
    dim: usize,
    volume: T,
    values: Vec<[T; MAX_DIM]>,
}

impl<T: Real> SimplexGradients<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> &[T] {
        &self.values[i][..self.dim]
    }

    /// Volume of each simplex.
    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.values.iter().map(move |g| &g[..self.dim])
    }
}

pub fn gradient<T: Real>(f: &GridFunction<T>) -> SimplexGradients<T> {
    gradient_in(f, None)
}

/// Gradients of the simplices inside `sub` only.
pub fn gradient_in<T: Real>(f: &GridFunction<T>, sub: Option<&NodeBox>) -> SimplexGradients<T> {
    let grid = f.grid();
    let mut values = Vec::with_capacity(grid.simplex_count(sub));
    grid.for_each_simplex(sub, |s| values.push(simplex_gradient(grid, f.values(), s)));
    SimplexGradients { dim: grid.dim(), volume: grid.simplex_volume(), values }
}

fn check_exponent<T: Real>(r: T) -> Result<()> {
    if r.is_finite() && r >= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("norm exponent {r} must be finite and >= 1")))
    }
}

/// `sum_nodes |f|^r w` over the box (unrooted).
pub(crate) fn lr_sum<T: Real>(f: &GridFunction<T>, r: T, sub: &NodeBox) -> Result<T> {
    let grid = f.grid();
    let mut acc = T::zero();
    for idx in sub.indices(grid) {
        let v = f.values()[idx];
        if !v.is_finite() {
            return Err(Error::NonFinite { node: idx });
        }
        acc += v.abs().powf(r) * sub.weight(grid, &grid.multi_index(idx));
    }
    Ok(acc)
}

/// `sum_simplices |grad f|^q vol` over the box (unrooted).
pub(crate) fn grad_lq_sum<T: Real>(f: &GridFunction<T>, q: T, sub: &NodeBox) -> Result<T> {
    let grid = f.grid();
    let u = f.values();
    let vol = grid.simplex_volume();
    let mut acc = T::zero();
    let mut bad = None;
    grid.for_each_simplex(Some(sub), |s| {
        let g = simplex_gradient(grid, u, s);
        let m = norm2(&g);
        if !m.is_finite() {
            bad.get_or_insert(s.vertices[0]);
            return;
        }
        if m > T::zero() {
            acc += m.powf(q) * vol;
        }
    });
    match bad {
        Some(node) => Err(Error::NonFinite { node }),
        None => Ok(acc),
    }
}

fn region<T: Real>(f: &GridFunction<T>, sub: Option<&NodeBox>) -> NodeBox {
    sub.copied().unwrap_or_else(|| f.grid().full_box())
}

/// Discrete `L^r` norm over the (sub)domain.
pub fn lr_norm<T: Real>(f: &GridFunction<T>, r: T, sub: Option<&NodeBox>) -> Result<T> {
    check_exponent(r)?;
    Ok(lr_sum(f, r, &region(f, sub))?.powf(r.recip()))
}

/// `L^q` norm of `|grad f|` over the simplices of the (sub)domain.
pub fn gradient_lq_norm<T: Real>(f: &GridFunction<T>, q: T, sub: Option<&NodeBox>) -> Result<T> {
    check_exponent(q)?;
    Ok(grad_lq_sum(f, q, &region(f, sub))?.powf(q.recip()))
}

/// `||f||_{L^q} + ||grad f||_{L^q}`.
pub fn w1q_norm<T: Real>(f: &GridFunction<T>, q: T, sub: Option<&NodeBox>) -> Result<T> {
    Ok(lr_norm(f, q, sub)? + gradient_lq_norm(f, q, sub)?)
}

fn time_weight<T: Real>(k: usize, b: &SpaceTimeBox, tau: T) -> T {
    if k == b.first || k == b.last {
        tau * T::lit(0.5)
    } else {
        tau
    }
}

fn st_region<T: Real>(f: &SpaceTimeFunction<T>, sub: Option<&SpaceTimeBox>) -> SpaceTimeBox {
    sub.copied().unwrap_or_else(|| f.grid().full_box())
}

/// `(sum_k w_k (sum |F|^q + sum |grad F|^q))^{1/q}` with trapezoidal time weights.
pub fn parabolic_sobolev_norm<T: Real>(f: &SpaceTimeFunction<T>, q: T, sub: Option<&SpaceTimeBox>) -> Result<T> {
    check_exponent(q)?;
    let b = st_region(f, sub);
    let tau = f.grid().tau();
    let mut acc = T::zero();
    for k in b.first..=b.last {
        let s = f.slice(k);
        acc += time_weight(k, &b, tau) * (lr_sum(s, q, &b.space)? + grad_lq_sum(s, q, &b.space)?);
    }
    Ok(acc.powf(q.recip()))
}

/// Space-time `L^q` norm of the spatial gradient.
pub fn parabolic_gradient_norm<T: Real>(f: &SpaceTimeFunction<T>, q: T, sub: Option<&SpaceTimeBox>) -> Result<T> {
    check_exponent(q)?;
    let b = st_region(f, sub);
    let tau = f.grid().tau();
    let mut acc = T::zero();
    for k in b.first..=b.last {
        acc += time_weight(k, &b, tau) * grad_lq_sum(f.slice(k), q, &b.space)?;
    }
    Ok(acc.powf(q.recip()))
}

/// Space-time `L^r` norm.
pub fn parabolic_lr_norm<T: Real>(f: &SpaceTimeFunction<T>, r: T, sub: Option<&SpaceTimeBox>) -> Result<T> {
    check_exponent(r)?;
    let b = st_region(f, sub);
    let tau = f.grid().tau();
    let mut acc = T::zero();
    for k in b.first..=b.last {
        acc += time_weight(k, &b, tau) * lr_sum(f.slice(k), r, &b.space)?;
    }
    Ok(acc.powf(r.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpaceTimeGrid;

    #[test]
    fn zero_and_constant() {
        let g = Grid::<f64>::cube(2, 0.0, 1.0, 17).unwrap();
        assert_eq!(lr_norm(&GridFunction::zeros(&g), 2.0, None).unwrap(), 0.0);
        let one = GridFunction::constant(&g, 1.0);
        assert!((lr_norm(&one, 2.0, None).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(gradient_lq_norm(&one, 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_exponent_and_nonfinite() {
        let g = Grid::<f64>::cube(1, 0.0, 1.0, 5).unwrap();
        let f = GridFunction::constant(&g, 1.0);
        assert!(lr_norm(&f, 0.5, None).is_err());
        let mut h = f.clone();
        h.values_mut()[2] = f64::INFINITY;
        assert!(matches!(lr_norm(&h, 2.0, None), Err(Error::NonFinite { node: 2 })));
        // outside the subdomain the sentinel is ignored
        let nb = NodeBox { dim: 1, lo: [3, 0, 0], hi: [4, 0, 0] };
        assert!(lr_norm(&h, 2.0, Some(&nb)).is_ok());
    }

    #[test]
    fn affine_gradient_is_exact() {
        let g = Grid::<f64>::cube(2, -1.0, 2.0, 7).unwrap();
        let f = GridFunction::from_fn(&g, |x| 3.0 * x[0] - 2.0 * x[1]);
        for gr in gradient(&f).iter() {
            assert!((gr[0] - 3.0).abs() < 1e-13 && (gr[1] + 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn quadratic_1d_gradient_is_midpoint_derivative() {
        let g = Grid::<f64>::cube(1, 0.0, 1.0, 9).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0] * x[0]);
        let grads = gradient(&f);
        for (i, gr) in grads.iter().enumerate() {
            let mid = 0.5 * (g.coordinate(0, i) + g.coordinate(0, i + 1));
            assert!((gr[0] - 2.0 * mid).abs() < 1e-14);
        }
    }

    #[test]
    fn w1q_of_x_on_unit_square() {
        let g = Grid::<f64>::cube(2, 0.0, 1.0, 65).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0]);
        let v = w1q_norm(&f, 2.0, None).unwrap();
        let exact = (1.0f64 / 3.0).sqrt() + 1.0;
        assert!((v - exact).abs() < 2.0 * g.h_max(), "{v} vs {exact}");
        let v3 = w1q_norm(&f.scale(3.0), 2.0, None).unwrap();
        assert!((v3 - 3.0 * v).abs() < 1e-12);
    }

    #[test]
    fn parabolic_norm_of_t_times_x() {
        let g = Grid::<f64>::cube(1, 0.0, 1.0, 101).unwrap();
        let st = SpaceTimeGrid::new(g, 0.0, 1.0, 100).unwrap();
        let f = SpaceTimeFunction::from_fn(&st, |x, t| t * x[0]);
        // int int t^2 x^2 + t^2 = 1/9 + 1/3
        let exact = (4.0f64 / 9.0).sqrt();
        let v = parabolic_sobolev_norm(&f, 2.0, None).unwrap();
        assert!((v / exact - 1.0).abs() < 0.02);
        let one = SpaceTimeFunction::constant(&st, 1.0);
        assert!((parabolic_sobolev_norm(&one, 2.0, None).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(parabolic_sobolev_norm(&SpaceTimeFunction::zeros(&st), 2.0, None).unwrap(), 0.0);
    }
}
