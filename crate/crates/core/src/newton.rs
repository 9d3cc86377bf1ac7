//! Damped Newton minimization of the discrete energies, with an optional
//! pointwise lower bound handled by projected Newton steps.

use serde::{Deserialize, Serialize};

use crate::energy::{Functional, SchemeKind};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::sparse::InteriorSystem;

/// Tolerances shared by the elliptic and parabolic solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions<T> {
    /// Max-norm bound on the first-order residual (nodal energy gradient).
    pub tol: T,
    pub max_iter: usize,
    /// Nodes within `act_tol` of the obstacle count as contact nodes.
    pub act_tol: T,
    /// Hessian regularization of `|grad u|^{p-2}`.
    pub delta: T,
    pub scheme: SchemeKind,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 200,
            act_tol: T::lit(1e-8),
            delta: T::lit(1e-8),
            scheme: SchemeKind::Simplex,
        }
    }
}

/// Diagnostics of one minimization.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveStats<T> {
    pub iterations: usize,
    pub residual: T,
    /// Energy of every accepted iterate, starting with the initial one.
    pub energies: Vec<T>,
    /// Steps that needed extra regularization or a projected gradient step.
    pub fallback_steps: usize,
}

/// Max-norm of the first-order optimality residual over interior nodes.
/// With a lower bound, contact nodes only count the part of the gradient
/// that pushes the solution below the bound.
pub(crate) fn kkt_residual<T: Real>(sys: &InteriorSystem, r: &[T], u: &[T], lower: Option<&[T]>, act_tol: T) -> T {
    let mut m = T::zero();
    for &node in &sys.node_of_slot {
        let rj = r[node];
        let v = match lower {
            Some(psi) if u[node] - psi[node] <= act_tol => (-rj).max(T::zero()),
            _ => rj.abs(),
        };
        if !(v <= m) {
            m = v;
        }
    }
    m
}

fn round_slack<T: Real>(mag: T) -> T {
    T::lit(64.0) * T::epsilon() * mag
}

/// Minimizes `func` over the interior values of `u` (boundary entries are
/// kept), subject to `u >= lower` at interior nodes when given.
pub(crate) fn minimize<T: Real>(
    func: &Functional<'_, T>,
    sys: &InteriorSystem,
    lower: Option<&[T]>,
    u: &mut [T],
    opts: &SolverOptions<T>,
) -> Result<SolveStats<T>> {
    let n_nodes = u.len();
    let nu = sys.unknowns();
    let sigma = T::lit(1e-4);
    let half = T::lit(0.5);
    if let Some(psi) = lower {
        for &node in &sys.node_of_slot {
            if u[node] < psi[node] {
                u[node] = psi[node];
            }
        }
    }
    if let Some(node) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }

    let mut r = vec![T::zero(); n_nodes];
    let mut r_trial = vec![T::zero(); n_nodes];
    let mut trial = u.to_vec();
    let mut mat = sys.zero_matrix::<T>();
    let mut pinned = vec![false; nu];
    let mut d = vec![T::zero(); nu];

    let (mut e, mut mag) = func.energy_parts(u);
    func.gradient(u, &mut r);
    let mut res = kkt_residual(sys, &r, u, lower, opts.act_tol);
    let mut stats = SolveStats { iterations: 0, residual: res, energies: vec![e], fallback_steps: 0 };
    let mut lm = T::zero();

    while res > opts.tol {
        if stats.iterations >= opts.max_iter {
            return Err(Error::NonConvergence { iterations: stats.iterations, residual: res.to_f64_lossy() });
        }
        stats.iterations += 1;

        func.hessian(u, opts.delta, sys, &mut mat);
        let diag = mat.diagonal(sys);

        // binding set: contact nodes whose gradient points into the obstacle
        let mut any_pinned = false;
        if let Some(psi) = lower {
            let eps = opts.act_tol.max(res.min(T::lit(1e-3)));
            for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                pinned[slot] = u[node] - psi[node] <= eps && r[node] > T::zero();
                any_pinned |= pinned[slot];
            }
        }
        if lm > T::zero() {
            for (slot, &dv) in diag.iter().enumerate() {
                mat.add_diag(sys, slot, lm * dv.abs().max(T::min_positive_value()));
            }
        }
        if any_pinned {
            mat.pin(sys, &pinned);
        }
        for (slot, &node) in sys.node_of_slot.iter().enumerate() {
            d[slot] = if pinned[slot] { T::zero() } else { -r[node] };
        }
        let newton_ok = match mat.factor(sys) {
            Ok(ldl) => {
                ldl.solve(&mut d);
                d.iter().all(|v| v.is_finite())
            }
            Err(_) => false,
        };
        if !newton_ok {
            // diagonally scaled gradient direction
            stats.fallback_steps += 1;
            for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                let s = diag[slot].abs().max(T::min_positive_value());
                d[slot] = if pinned[slot] { T::zero() } else { -r[node] / s };
            }
        }
        if let Some(psi) = lower {
            for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                if pinned[slot] {
                    let s = diag[slot].abs().max(T::min_positive_value());
                    d[slot] = (psi[node] - u[node]).max(-r[node] / s);
                }
            }
        }

        // projected Armijo backtracking
        let mut alpha = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            trial.copy_from_slice(u);
            let mut slope = T::zero();
            for (slot, &node) in sys.node_of_slot.iter().enumerate() {
                let mut v = u[node] + alpha * d[slot];
                if let Some(psi) = lower {
                    if v < psi[node] {
                        v = psi[node];
                    }
                }
                trial[node] = v;
                slope += r[node] * (v - u[node]);
            }
            let (et, mt) = func.energy_parts(&trial);
            if et.is_finite() {
                if et <= e + sigma * slope {
                    accepted = true;
                } else if et - e <= round_slack(mag.max(mt)) {
                    // energy differences are below rounding: judge by the residual
                    func.gradient(&trial, &mut r_trial);
                    if kkt_residual(sys, &r_trial, &trial, lower, opts.act_tol) < res {
                        accepted = true;
                    }
                }
                if accepted {
                    e = et;
                    mag = mt;
                    break;
                }
            }
            alpha *= half;
        }

        if accepted {
            u.copy_from_slice(&trial);
            stats.energies.push(e);
            func.gradient(u, &mut r);
            res = kkt_residual(sys, &r, u, lower, opts.act_tol);
            lm = if lm > T::zero() { lm * T::lit(0.1) } else { T::zero() };
            if lm < T::lit(1e-12) {
                lm = T::zero();
            }
        } else {
            stats.fallback_steps += 1;
            lm = if lm == T::zero() { T::lit(1e-6) } else { lm * T::lit(100.0) };
            if lm > T::lit(1e12) {
                return Err(Error::NonConvergence { iterations: stats.iterations, residual: res.to_f64_lossy() });
            }
        }
    }
    stats.residual = res;
    Ok(stats)
}
