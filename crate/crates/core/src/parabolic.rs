//! Implicit Euler for `u_t - Delta_p u = f`: every step minimizes
//! `(1/2 tau) |u - u_prev|^2 + E_p(u) - <f_k, u>` with the lateral boundary
//! values of the level.

use crate::elliptic::check_boundary;
use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, PParams, SpaceTimeFunction, SpaceTimeGrid};
use crate::measures::{DiscreteMeasure, SpaceTimeMeasure};
use crate::newton::{minimize, SolveStats, SolverOptions};
use crate::real::Real;
use crate::sparse::InteriorSystem;

#[allow(clippy::too_many_arguments)]
fn step_inner<T: Real>(
    sys: &InteriorSystem,
    u_prev: &GridFunction<T>,
    tau: T,
    params: &PParams<T>,
    rate: &[T],
    g: &GridFunction<T>,
    psi: Option<&GridFunction<T>>,
    opts: &SolverOptions<T>,
) -> Result<(GridFunction<T>, SolveStats<T>)> {
    let grid = u_prev.grid();
    check_boundary(grid, g)?;
    let mut u = u_prev.values().to_vec();
    for (j, v) in u.iter_mut().enumerate() {
        if grid.is_boundary(j) {
            *v = g.values()[j];
        }
    }
    if let Some(psi) = psi {
        if psi.grid() != grid {
            return Err(Error::GridMismatch);
        }
        for j in 0..grid.len() {
            if grid.is_boundary(j) && g.values()[j] < psi.values()[j] {
                return Err(Error::Infeasible { node: j, gap: (psi.values()[j] - g.values()[j]).to_f64_lossy() });
            }
        }
    }
    let func = Functional::new(grid, params.p(), opts.scheme).with_load(rate).with_inertia(tau, u_prev.values());
    let stats = minimize(&func, sys, psi.map(|p| p.values()), &mut u, opts)?;
    Ok((GridFunction::new(grid.clone(), u)?, stats))
}

/// One implicit Euler step with source `f_k` (spatial masses per unit time)
/// and boundary values `g_k`.
pub fn step_implicit<T: Real>(
    u_prev: &GridFunction<T>,
    tau: T,
    params: &PParams<T>,
    f_k: &DiscreteMeasure<T>,
    g_k: &GridFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>> {
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    if f_k.grid() != u_prev.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some(node) = u_prev.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let sys = InteriorSystem::new(u_prev.grid());
    Ok(step_inner(&sys, u_prev, tau, params, f_k.masses(), g_k, None, opts)?.0)
}

/// Per-level solver statistics of a time-stepping run.
#[derive(Clone, Debug, Default)]
pub struct RunStats<T> {
    pub steps: Vec<SolveStats<T>>,
}

impl<T: Real> RunStats<T> {
    pub fn max_residual(&self) -> T {
        self.steps.iter().fold(T::zero(), |m, s| m.max(s.residual))
    }
}

fn march<T: Real>(
    stg: &SpaceTimeGrid<T>,
    params: &PParams<T>,
    f: Option<&SpaceTimeMeasure<T>>,
    psi: Option<&SpaceTimeFunction<T>>,
    pb: &SpaceTimeFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<(SpaceTimeFunction<T>, RunStats<T>)> {
    if pb.grid() != stg || f.is_some_and(|f| f.grid() != stg) || psi.is_some_and(|p| p.grid() != stg) {
        return Err(Error::GridMismatch);
    }
    let grid = stg.spatial();
    let init = pb.slice(0).clone();
    if let Some(node) = init.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    if let Some(psi) = psi {
        if let Some((j, _)) = init.values().iter().zip(psi.slice(0).values()).enumerate().find(|(_, (u, p))| u < p) {
            return Err(Error::Infeasible { node: j, gap: (psi.slice(0).values()[j] - init.values()[j]).to_f64_lossy() });
        }
    }
    let sys = InteriorSystem::new(grid);
    let tau = stg.tau();
    let zero = vec![T::zero(); grid.len()];
    let mut slices = Vec::with_capacity(stg.levels());
    slices.push(init);
    let mut stats = RunStats::default();
    for k in 1..stg.levels() {
        let rate = f.map(|f| f.rate(k));
        let load = rate.as_ref().map_or(&zero[..], |r| r.masses());
        let (u, s) = step_inner(&sys, &slices[k - 1], tau, params, load, pb.slice(k), psi.map(|p| p.slice(k)), opts)
            .map_err(|e| e.at_level(k))?;
        slices.push(u);
        stats.steps.push(s);
    }
    Ok((SpaceTimeFunction::new(stg.clone(), slices)?, stats))
}

/// Marches all levels. `pb` supplies the initial slice (level 0) and the
/// lateral boundary values of every level; its interior values at `k >= 1`
/// are ignored. `f` holds space-time masses per level.
pub fn solve_cauchy_dirichlet<T: Real>(
    stg: &SpaceTimeGrid<T>,
    params: &PParams<T>,
    f: &SpaceTimeMeasure<T>,
    pb: &SpaceTimeFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<SpaceTimeFunction<T>> {
    Ok(march(stg, params, Some(f), None, pb, opts)?.0)
}

pub fn solve_cauchy_dirichlet_with_stats<T: Real>(
    stg: &SpaceTimeGrid<T>,
    params: &PParams<T>,
    f: &SpaceTimeMeasure<T>,
    pb: &SpaceTimeFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<(SpaceTimeFunction<T>, RunStats<T>)> {
    march(stg, params, Some(f), None, pb, opts)
}

/// Per-level obstacle steps `u(., t_k) >= psi(., t_k)`.
pub fn solve_parabolic_obstacle<T: Real>(
    stg: &SpaceTimeGrid<T>,
    params: &PParams<T>,
    psi: &SpaceTimeFunction<T>,
    pb: &SpaceTimeFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<SpaceTimeFunction<T>> {
    Ok(march(stg, params, None, Some(psi), pb, opts)?.0)
}

pub fn solve_parabolic_obstacle_with_stats<T: Real>(
    stg: &SpaceTimeGrid<T>,
    params: &PParams<T>,
    psi: &SpaceTimeFunction<T>,
    pb: &SpaceTimeFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<(SpaceTimeFunction<T>, RunStats<T>)> {
    march(stg, params, None, Some(psi), pb, opts)
}
