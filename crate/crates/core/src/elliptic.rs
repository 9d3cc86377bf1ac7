//! Dirichlet and obstacle problems for the discrete p-Laplacian, solved by
//! minimizing the p-Dirichlet energy over the interior nodal values.

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, PParams};
use crate::measures::DiscreteMeasure;
use crate::newton::minimize;
pub use crate::newton::{SolveStats, SolverOptions};
use crate::real::Real;
use crate::sparse::InteriorSystem;

pub(crate) fn check_boundary<T: Real>(grid: &Grid<T>, g: &GridFunction<T>) -> Result<()> {
    if g.grid() != grid {
        return Err(Error::GridMismatch);
    }
    for (j, v) in g.values().iter().enumerate() {
        if grid.is_boundary(j) && !v.is_finite() {
            return Err(Error::NonFinite { node: j });
        }
    }
    Ok(())
}

/// Boundary values of `g`, interior values of `init` (zero when absent).
fn start_from<T: Real>(grid: &Grid<T>, g: &GridFunction<T>, init: Option<&GridFunction<T>>) -> Result<Vec<T>> {
    let mut u = g.values().to_vec();
    match init {
        Some(init) => {
            if init.grid() != grid {
                return Err(Error::GridMismatch);
            }
            for j in 0..grid.len() {
                if !grid.is_boundary(j) {
                    u[j] = init.values()[j];
                }
            }
        }
        None => {
            for (j, v) in u.iter_mut().enumerate() {
                if !grid.is_boundary(j) {
                    *v = T::zero();
                }
            }
        }
    }
    Ok(u)
}

/// Discrete harmonic function with load `load` and the boundary values of `u`,
/// written into the interior of `u` (one exact Newton step on the quadratic energy).
pub(crate) fn laplace_guess<T: Real>(grid: &Grid<T>, sys: &InteriorSystem, load: Option<&[T]>, u: &mut [T]) -> Result<()> {
    let mut func = Functional::new(grid, T::lit(2.0), crate::energy::SchemeKind::Simplex);
    if let Some(f) = load {
        func = func.with_load(f);
    }
    let mut mat = sys.zero_matrix();
    func.hessian(u, T::zero(), sys, &mut mat);
    let mut r = vec![T::zero(); u.len()];
    func.gradient(u, &mut r);
    let mut d: Vec<T> = sys.node_of_slot.iter().map(|&node| -r[node]).collect();
    mat.factor(sys)?.solve(&mut d);
    for (slot, &node) in sys.node_of_slot.iter().enumerate() {
        u[node] += d[slot];
    }
    Ok(())
}

pub fn solve_dirichlet<T: Real>(
    grid: &Grid<T>,
    params: &PParams<T>,
    f: &DiscreteMeasure<T>,
    g: &GridFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>> {
    Ok(solve_dirichlet_with_stats(grid, params, f, g, opts, None)?.0)
}

/// As [`solve_dirichlet`], starting Newton from the interior values of
/// `init` (a discrete harmonic guess when `None`).
pub fn solve_dirichlet_with_stats<T: Real>(
    grid: &Grid<T>,
    params: &PParams<T>,
    f: &DiscreteMeasure<T>,
    g: &GridFunction<T>,
    opts: &SolverOptions<T>,
    init: Option<&GridFunction<T>>,
) -> Result<(GridFunction<T>, SolveStats<T>)> {
    check_boundary(grid, g)?;
    if f.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let sys = InteriorSystem::new(grid);
    let mut u = start_from(grid, g, init)?;
    if init.is_none() && sys.unknowns() > 0 {
        laplace_guess(grid, &sys, Some(f.masses()), &mut u)?;
    }
    let func = Functional::new(grid, params.p(), opts.scheme).with_load(f.masses());
    let stats = minimize(&func, &sys, None, &mut u, opts)?;
    Ok((GridFunction::new(grid.clone(), u)?, stats))
}

pub fn solve_obstacle<T: Real>(
    grid: &Grid<T>,
    params: &PParams<T>,
    psi: &GridFunction<T>,
    g: &GridFunction<T>,
    opts: &SolverOptions<T>,
) -> Result<GridFunction<T>> {
    Ok(solve_obstacle_with_stats(grid, params, psi, g, opts, None)?.0)
}

/// Obstacle problem `u >= psi` with boundary values `g`; `psi` may be `-inf`
/// at nodes without constraint.
pub fn solve_obstacle_with_stats<T: Real>(
    grid: &Grid<T>,
    params: &PParams<T>,
    psi: &GridFunction<T>,
    g: &GridFunction<T>,
    opts: &SolverOptions<T>,
    init: Option<&GridFunction<T>>,
) -> Result<(GridFunction<T>, SolveStats<T>)> {
    check_boundary(grid, g)?;
    if psi.grid() != grid {
        return Err(Error::GridMismatch);
    }
    for (j, (&gv, &pv)) in g.values().iter().zip(psi.values()).enumerate() {
        if pv.is_nan() || (!grid.is_boundary(j) && pv == T::infinity()) {
            return Err(Error::NonFinite { node: j });
        }
        if grid.is_boundary(j) && gv < pv {
            return Err(Error::Infeasible { node: j, gap: (pv - gv).to_f64_lossy() });
        }
    }
    let sys = InteriorSystem::new(grid);
    let mut u = start_from(grid, g, init)?;
    if init.is_none() && sys.unknowns() > 0 {
        laplace_guess(grid, &sys, None, &mut u)?;
    }
    let func = Functional::new(grid, params.p(), opts.scheme);
    let stats = minimize(&func, &sys, Some(psi.values()), &mut u, opts)?;
    Ok((GridFunction::new(grid.clone(), u)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::SchemeKind;
    use crate::measures::riesz_measure;

    #[test]
    fn affine_data_is_reproduced() {
        let g = Grid::<f64>::cube(2, 0.0, 1.0, 9).unwrap();
        let p = PParams::new(3.0).unwrap();
        let aff = GridFunction::from_fn(&g, |x| 1.0 + 2.0 * x[0] - x[1]);
        let u = solve_dirichlet(&g, &p, &DiscreteMeasure::zero(&g), &aff, &SolverOptions::default()).unwrap();
        assert!(u.max_abs_diff(&aff).unwrap() < 1e-9);
    }

    #[test]
    fn one_dimensional_closed_form() {
        let p = PParams::new(3.0).unwrap();
        let exact = |x: f64| (2.0 / 3.0) * (0.5f64.powf(1.5) - (x - 0.5).abs().powf(1.5));
        let mut errs = Vec::new();
        for m in [33, 65, 129] {
            let g = Grid::<f64>::cube(1, 0.0, 1.0, m).unwrap();
            let f = DiscreteMeasure::from_density(&GridFunction::constant(&g, 1.0)).unwrap();
            let u = solve_dirichlet(&g, &p, &f, &GridFunction::zeros(&g), &SolverOptions::default()).unwrap();
            errs.push(u.max_abs_diff(&GridFunction::from_fn(&g, |x| exact(x[0]))).unwrap() / g.h_max());
        }
        assert!(errs.iter().all(|&e| e < 0.5), "{errs:?}");
    }

    #[test]
    fn dirac_solution_is_radial_and_positive() {
        let g = Grid::<f64>::cube(2, -1.0, 1.0, 33).unwrap();
        let p = PParams::new(3.0).unwrap();
        let f = DiscreteMeasure::dirac(&g, &[0.0, 0.0], 1.0).unwrap();
        let (u, stats) =
            solve_dirichlet_with_stats(&g, &p, &f, &GridFunction::zeros(&g), &SolverOptions::default(), None).unwrap();
        assert!(stats.residual <= 1e-10);
        assert!(u.values().iter().all(|&v| v >= -1e-12));
        let center = g.nearest_node(&[0.0, 0.0]);
        assert_eq!(u.values().iter().cloned().fold(f64::MIN, f64::max), u.values()[center]);
        let mu = riesz_measure(&u, &p, SchemeKind::Simplex);
        assert!((mu.measure.total_mass() - 1.0).abs() < 1e-8);
        for w in stats.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn obstacle_rejects_infeasible_boundary() {
        let g = Grid::<f64>::cube(1, 0.0, 1.0, 9).unwrap();
        let p = PParams::new(3.0).unwrap();
        let psi = GridFunction::constant(&g, 1.0);
        let r = solve_obstacle(&g, &p, &psi, &GridFunction::zeros(&g), &SolverOptions::default());
        assert!(matches!(r, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn obstacle_inactive_and_fully_active() {
        let g = Grid::<f64>::cube(2, 0.0, 1.0, 11).unwrap();
        let p = PParams::new(3.0).unwrap();
        let opts = SolverOptions::default();
        let bc = GridFunction::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let free = solve_dirichlet(&g, &p, &DiscreteMeasure::zero(&g), &bc, &opts).unwrap();
        let low = GridFunction::constant(&g, -10.0);
        let u = solve_obstacle(&g, &p, &low, &bc, &opts).unwrap();
        assert!(u.max_abs_diff(&free).unwrap() < 1e-8);
        let f = DiscreteMeasure::from_density(&GridFunction::constant(&g, 2.0)).unwrap();
        let sup = solve_dirichlet(&g, &p, &f, &bc, &opts).unwrap();
        let v = solve_obstacle(&g, &p, &sup, &bc, &opts).unwrap();
        assert_eq!(v, sup);
    }
}
