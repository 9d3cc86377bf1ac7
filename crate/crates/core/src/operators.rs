//! Discrete p-Dirichlet energy, the nodal p-Laplacian and the supersolution
//! and comparison predicates built on them.

use serde::Serialize;

use crate::elliptic::{solve_dirichlet, SolverOptions};
use crate::energy::{Functional, SchemeKind};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, NodeBox, PParams, SpaceTimeFunction};
use crate::measures::DiscreteMeasure;
use crate::real::Real;

/// `E_p(u) - <f, u>`.
pub fn p_energy<T: Real>(
    u: &GridFunction<T>,
    params: &PParams<T>,
    scheme: SchemeKind,
    f: Option<&DiscreteMeasure<T>>,
) -> Result<T> {
    if let Some(node) = u.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let mut func = Functional::new(u.grid(), params.p(), scheme);
    if let Some(f) = f {
        if f.grid() != u.grid() {
            return Err(Error::GridMismatch);
        }
        func = func.with_load(f.masses());
    }
    Ok(func.energy(u.values()))
}

/// `dE_p/du_j / w_j` at interior nodes (a density approximating `-Delta_p u`);
/// zero on the boundary.
pub fn p_laplacian_apply<T: Real>(u: &GridFunction<T>, params: &PParams<T>, scheme: SchemeKind) -> GridFunction<T> {
    let grid = u.grid();
    let mut r = vec![T::zero(); grid.len()];
    Functional::new(grid, params.p(), scheme).flux_gradient(u.values(), &mut r);
    for (j, v) in r.iter_mut().enumerate() {
        *v = if grid.is_boundary(j) { T::zero() } else { *v / grid.node_weight(j) };
    }
    GridFunction::new(grid.clone(), r).expect("length matches")
}

/// Residual field of a one-sided check and the nodes where it fails.
#[derive(Clone, Debug)]
pub struct OperatorReport<T> {
    pub residual: GridFunction<T>,
    /// Largest `-residual - tol` excess over the violating nodes (zero when none).
    pub max_violation: T,
    pub violating_nodes: Vec<usize>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    max_violation: f64,
    count: usize,
    nodes: &'a [usize],
}

impl<T: Real> OperatorReport<T> {
    pub fn passed(&self) -> bool {
        self.violating_nodes.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ReportJson {
            max_violation: self.max_violation.to_f64_lossy(),
            count: self.violating_nodes.len(),
            nodes: &self.violating_nodes,
        })
        .expect("plain data serializes")
    }
}

/// Checks `residual >= -tol` at interior nodes; violation is measured as `-residual`.
fn one_sided<T: Real>(residual: GridFunction<T>, tol: T) -> OperatorReport<T> {
    let grid = residual.grid();
    let mut max_violation = T::zero();
    let mut violating_nodes = Vec::new();
    for (j, &v) in residual.values().iter().enumerate() {
        if grid.is_boundary(j) {
            continue;
        }
        if !(v >= -tol) {
            violating_nodes.push(j);
            let excess = if v.is_nan() { T::infinity() } else { -v };
            max_violation = max_violation.max(excess);
        }
    }
    OperatorReport { residual, max_violation, violating_nodes }
}

/// Tests the discrete weak inequality against every nonnegative interior hat.
pub fn is_supersolution<T: Real>(u: &GridFunction<T>, params: &PParams<T>, scheme: SchemeKind, tol: T) -> OperatorReport<T> {
    one_sided(p_laplacian_apply(u, params, scheme), tol)
}

/// `min_j (u_j - h_j)` over `sub`, where `h` is the discrete p-harmonic
/// function on `sub` with boundary values `u`.
pub fn comparison_gap<T: Real>(
    u: &GridFunction<T>,
    params: &PParams<T>,
    sub: &NodeBox,
    opts: &SolverOptions<T>,
) -> Result<T> {
    let local = u.restrict(sub)?;
    let grid = local.grid().clone();
    let h = solve_dirichlet(&grid, params, &DiscreteMeasure::zero(&grid), &local, opts)?;
    Ok(local.values().iter().zip(h.values()).fold(T::infinity(), |m, (&a, &b)| m.min(a - b)))
}

/// `u >= h - tol` on `sub` for the p-harmonic `h` sharing the boundary values of `u`.
pub fn comparison_check<T: Real>(
    u: &GridFunction<T>,
    params: &PParams<T>,
    scheme: SchemeKind,
    sub: &NodeBox,
    tol: T,
) -> Result<bool> {
    let opts = SolverOptions { scheme, ..SolverOptions::default() };
    Ok(comparison_gap(u, params, sub, &opts)? >= -tol)
}

/// `(U_k - U_{k-1}) / tau + A(U_k)` at every interior node and level `k >= 1`;
/// level 0 and boundary nodes are zero.
pub fn parabolic_residual<T: Real>(u: &SpaceTimeFunction<T>, params: &PParams<T>, scheme: SchemeKind) -> SpaceTimeFunction<T> {
    let stg = u.grid();
    let grid = stg.spatial();
    let inv_tau = stg.tau().recip();
    let mut slices = vec![GridFunction::zeros(grid)];
    for k in 1..stg.levels() {
        let mut a = p_laplacian_apply(u.slice(k), params, scheme);
        let (cur, prev) = (u.slice(k).values(), u.slice(k - 1).values());
        for (j, v) in a.values_mut().iter_mut().enumerate() {
            if !grid.is_boundary(j) {
                *v += (cur[j] - prev[j]) * inv_tau;
            }
        }
        slices.push(a);
    }
    SpaceTimeFunction::new(stg.clone(), slices).expect("one slice per level")
}

/// Parabolic analogue of [`OperatorReport`]; violations are `(level, node)` pairs.
#[derive(Clone, Debug)]
pub struct ParabolicReport<T> {
    pub residual: SpaceTimeFunction<T>,
    pub max_violation: T,
    pub violating: Vec<(usize, usize)>,
    /// Largest `|residual|` over the checked nodes.
    pub max_abs_residual: T,
}

#[derive(Serialize)]
struct ParabolicJson<'a> {
    max_violation: f64,
    count: usize,
    nodes: &'a [(usize, usize)],
}

impl<T: Real> ParabolicReport<T> {
    pub fn passed(&self) -> bool {
        self.violating.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ParabolicJson {
            max_violation: self.max_violation.to_f64_lossy(),
            count: self.violating.len(),
            nodes: &self.violating,
        })
        .expect("plain data serializes")
    }
}

pub fn parabolic_supersolution_check<T: Real>(
    u: &SpaceTimeFunction<T>,
    params: &PParams<T>,
    scheme: SchemeKind,
    tol: T,
) -> ParabolicReport<T> {
    parabolic_supersolution_check_masked(u, params, scheme, tol, |_, _| true)
}

/// As [`parabolic_supersolution_check`], restricted to the interior nodes
/// `(x, t_k)`, `k >= 1`, accepted by `mask`.
pub fn parabolic_supersolution_check_masked<T: Real>(
    u: &SpaceTimeFunction<T>,
    params: &PParams<T>,
    scheme: SchemeKind,
    tol: T,
    mask: impl Fn(&[T], T) -> bool,
) -> ParabolicReport<T> {
    let residual = parabolic_residual(u, params, scheme);
    let stg = u.grid();
    let grid = stg.spatial();
    let dim = grid.dim();
    let mut max_violation = T::zero();
    let mut max_abs_residual = T::zero();
    let mut violating = Vec::new();
    for k in 1..stg.levels() {
        let t = stg.time(k);
        for (j, &v) in residual.slice(k).values().iter().enumerate() {
            if grid.is_boundary(j) || !mask(&grid.point(j)[..dim], t) {
                continue;
            }
            max_abs_residual = max_abs_residual.max(v.abs());
            if !(v >= -tol) {
                violating.push((k, j));
                max_violation = max_violation.max(if v.is_nan() { T::infinity() } else { -v });
            }
        }
    }
    ParabolicReport { residual, max_violation, violating, max_abs_residual }
}
