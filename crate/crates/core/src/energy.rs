//! The discrete p-Dirichlet functional, its exact gradient and the
//! regularized Hessian used by the Newton solvers.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::norms::{norm2, simplex_gradient};
use crate::real::Real;
use crate::sparse::{InteriorSystem, SymMatrix};

/// Discretization of the p-Dirichlet energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Piecewise-affine energy on the Kuhn triangulation (consistent with the continuum operator).
    Simplex,
    /// Graph energy over the axis edges (monotone; anisotropic for `p != 2`).
    Edge,
}

/// Lumped `L^2` coupling `(1/2 tau) sum_j w_j (u_j - prev_j)^2` of an implicit step.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Inertia<'a, T> {
    pub inv_tau: T,
    pub prev: &'a [T],
}

/// `E(u) = E_p(u) + inertia(u) - <load, u>`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Functional<'a, T> {
    pub grid: &'a Grid<T>,
    pub p: T,
    pub scheme: SchemeKind,
    pub load: Option<&'a [T]>,
    pub inertia: Option<Inertia<'a, T>>,
}

impl<'a, T: Real> Functional<'a, T> {
    pub fn new(grid: &'a Grid<T>, p: T, scheme: SchemeKind) -> Self {
        Self { grid, p, scheme, load: None, inertia: None }
    }

    pub fn with_load(mut self, load: &'a [T]) -> Self {
        self.load = Some(load);
        self
    }

    pub fn with_inertia(mut self, tau: T, prev: &'a [T]) -> Self {
        self.inertia = Some(Inertia { inv_tau: tau.recip(), prev });
        self
    }

    /// The pure p-Dirichlet part.
    pub fn flux_energy(&self, u: &[T]) -> T {
        let p = self.p;
        let mut acc = T::zero();
        match self.scheme {
            SchemeKind::Simplex => {
                let vol = self.grid.simplex_volume();
                self.grid.for_each_simplex(None, |s| {
                    let m = norm2(&simplex_gradient(self.grid, u, s));
                    if m > T::zero() {
                        acc += m.powf(p) * vol;
                    }
                });
            }
            SchemeKind::Edge => {
                let h = self.grid.spacing();
                self.grid.for_each_edge(|i, j, axis, w| {
                    let s = ((u[j] - u[i]) / h[axis]).abs();
                    if s > T::zero() {
                        acc += w * s.powf(p);
                    }
                });
            }
        }
        acc / p
    }

    pub fn energy(&self, u: &[T]) -> T {
        self.energy_parts(u).0
    }

    /// Energy value together with the sum of the magnitudes of its terms,
    /// which bounds the rounding error of the value.
    pub fn energy_parts(&self, u: &[T]) -> (T, T) {
        let flux = self.flux_energy(u);
        let mut inertia = T::zero();
        if let Some(inr) = &self.inertia {
            let half = T::lit(0.5) * inr.inv_tau;
            for j in 0..u.len() {
                if !self.grid.is_boundary(j) {
                    let d = u[j] - inr.prev[j];
                    inertia += half * self.grid.node_weight(j) * d * d;
                }
            }
        }
        let (mut work, mut work_mag) = (T::zero(), T::zero());
        if let Some(f) = self.load {
            for (&a, &b) in f.iter().zip(u) {
                work += a * b;
                work_mag += (a * b).abs();
            }
        }
        (flux + inertia - work, flux + inertia + work_mag)
    }

    /// `dE_p/du_j` at every node (boundary nodes included).
    pub fn flux_gradient(&self, u: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        let p = self.p;
        let h = self.grid.spacing();
        match self.scheme {
            SchemeKind::Simplex => {
                let vol = self.grid.simplex_volume();
                let dim = self.grid.dim();
                self.grid.for_each_simplex(None, |s| {
                    let g = simplex_gradient(self.grid, u, s);
                    let m = norm2(&g);
                    if m == T::zero() {
                        return;
                    }
                    let coef = vol * m.powf(p - T::lit(2.0));
                    for k in 0..dim {
                        let a = s.axes[k];
                        let flux = coef * g[a] / h[a];
                        out[s.vertices[k + 1]] += flux;
                        out[s.vertices[k]] -= flux;
                    }
                });
            }
            SchemeKind::Edge => {
                let e = p - T::one();
                self.grid.for_each_edge(|i, j, axis, w| {
                    let s = (u[j] - u[i]) / h[axis];
                    let flux = w * s.signed_pow(e) / h[axis];
                    out[j] += flux;
                    out[i] -= flux;
                });
            }
        }
    }

    /// Full gradient of `E`; entries on boundary nodes are meaningless.
    pub fn gradient(&self, u: &[T], out: &mut [T]) {
        self.flux_gradient(u, out);
        if let Some(inr) = &self.inertia {
            for j in 0..u.len() {
                if !self.grid.is_boundary(j) {
                    out[j] += inr.inv_tau * self.grid.node_weight(j) * (u[j] - inr.prev[j]);
                }
            }
        }
        if let Some(f) = self.load {
            for (o, &fj) in out.iter_mut().zip(f) {
                *o -= fj;
            }
        }
    }

    /// Assembles the Hessian over interior unknowns, with `|grad u|^{p-2}`
    /// replaced by `(|grad u|^2 + delta^2)^{(p-2)/2}` (and likewise in the
    /// rank-one term).
    pub fn hessian(&self, u: &[T], delta: T, sys: &InteriorSystem, mat: &mut SymMatrix<T>) {
        mat.clear();
        let p = self.p;
        let two = T::lit(2.0);
        let d2 = delta * delta;
        let h = self.grid.spacing();
        let dim = self.grid.dim();
        match self.scheme {
            SchemeKind::Simplex => {
                let vol = self.grid.simplex_volume();
                self.grid.for_each_simplex(None, |s| {
                    let g = simplex_gradient(self.grid, u, s);
                    let sq = g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + d2;
                    let (c1, c2) = if sq > T::zero() {
                        (sq.powf((p - two) / two), (p - two) * sq.powf((p - two * two) / two))
                    } else if p == two {
                        (T::one(), T::zero())
                    } else {
                        (T::zero(), T::zero())
                    };
                    // b_t: derivative of the gradient w.r.t. vertex t
                    let mut b = [[T::zero(); 3]; 4];
                    for k in 0..dim {
                        let a = s.axes[k];
                        let inv = h[a].recip();
                        b[k + 1][a] += inv;
                        b[k][a] -= inv;
                    }
                    for ta in 0..=dim {
                        let Some(sa) = sys.slot(s.vertices[ta]) else { continue };
                        let ba = &b[ta];
                        let ga = ba[0] * g[0] + ba[1] * g[1] + ba[2] * g[2];
                        for tb in ta..=dim {
                            let Some(sb) = sys.slot(s.vertices[tb]) else { continue };
                            let bb = &b[tb];
                            let dot = ba[0] * bb[0] + ba[1] * bb[1] + ba[2] * bb[2];
                            let gb = bb[0] * g[0] + bb[1] * g[1] + bb[2] * g[2];
                            let v = vol * (c1 * dot + c2 * ga * gb);
                            if ta == tb {
                                mat.add_diag(sys, sa, v);
                            } else {
                                mat.add(sys, sa, sb, v);
                            }
                        }
                    }
                });
            }
            SchemeKind::Edge => {
                let pm1 = p - T::one();
                self.grid.for_each_edge(|i, j, axis, w| {
                    let s = (u[j] - u[i]) / h[axis];
                    let sq = s * s + d2;
                    let c = if sq > T::zero() {
                        pm1 * sq.powf((p - two) / two)
                    } else if p == two {
                        T::one()
                    } else {
                        T::zero()
                    };
                    let c = w * c / (h[axis] * h[axis]);
                    let (si, sj) = (sys.slot(i), sys.slot(j));
                    if let Some(si) = si {
                        mat.add_diag(sys, si, c);
                    }
                    if let Some(sj) = sj {
                        mat.add_diag(sys, sj, c);
                    }
                    if let (Some(si), Some(sj)) = (si, sj) {
                        mat.add(sys, si, sj, -c);
                    }
                });
            }
        }
        if let Some(inr) = &self.inertia {
            for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                mat.add_diag(sys, slot, inr.inv_tau * self.grid.node_weight(node));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;

    fn wavy(grid: &Grid<f64>) -> Vec<f64> {
        GridFunction::from_fn(grid, |x| {
            let s: f64 = x.iter().enumerate().map(|(k, &v)| (1.0 + k as f64) * v).sum();
            (3.0 * s).sin() + 0.3 * x[0] * x[0]
        })
        .into_values()
    }

    /// Directional derivative of the gradient vs. the assembled Hessian (delta = 0).
    #[test]
    fn hessian_matches_gradient_differences() {
        for scheme in [SchemeKind::Simplex, SchemeKind::Edge] {
            for dim in 1..=3 {
                let g = Grid::<f64>::cube(dim, 0.0, 1.0, 6).unwrap();
                let u = wavy(&g);
                let f = Functional::new(&g, 3.5, scheme);
                let sys = InteriorSystem::new(&g);
                let mut h = sys.zero_matrix();
                f.hessian(&u, 0.0, &sys, &mut h);
                let n = sys.unknowns();
                let dir: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 11.0 - 0.5).collect();
                let mut hd = vec![0.0; n];
                h.mul(&sys, &dir, &mut hd);
                let eps = 1e-6;
                let mut up = u.clone();
                let mut dn = u.clone();
                for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                    up[node] += eps * dir[slot];
                    dn[node] -= eps * dir[slot];
                }
                let (mut gu, mut gd) = (vec![0.0; u.len()], vec![0.0; u.len()]);
                f.gradient(&up, &mut gu);
                f.gradient(&dn, &mut gd);
                let scale = hd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                    let fd = (gu[node] - gd[node]) / (2.0 * eps);
                    assert!((fd - hd[slot]).abs() <= 1e-5 * scale, "{scheme:?} dim {dim}");
                }
            }
        }
    }
}
