use serde::Serialize;

use crate::elliptic::{solve_dirichlet_with_stats, solve_obstacle, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, NodeBox, PParams, SpaceTimeBox, SpaceTimeFunction};
use crate::measures::{
    dual_norm, mollify_function, mollify_with_leak, parabolic_dual_norm, riesz_measure, riesz_measure_parabolic,
    DiscreteMeasure, NodalFunctional, SpaceTimeFunctional, SpaceTimeMeasure,
};
use crate::norms::{gradient_lq_norm, parabolic_gradient_norm, parabolic_sobolev_norm, w1q_norm};
use crate::parabolic::solve_cauchy_dirichlet;

use super::report::{Cell, ExperimentReport};

/// Columns recorded for one level of an approximation sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LevelNorms {
    /// `||grad (u - u_i)||_{L^p}` over the subdomain (space-time for parabolic runs).
    pub grad_lp: f64,
    /// `||u - u_i||_{W^{1,q}}` (resp. `L^q(W^{1,q})`) when a `q` was requested.
    pub w1q: Option<f64>,
    /// Dual-norm gap `||mu - f_i||`.
    pub dual_gap: f64,
    /// `||u_i - u~_i||_{W^{1,p}}` against the obstacle solution (two-stage runs).
    pub budget: Option<f64>,
    /// Largest `|<mu - f_i, phi>|` over the test battery (two-stage runs).
    pub weak_gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ApproxLevel<U, D> {
    pub eps: f64,
    pub u: U,
    /// Smooth nonnegative data of the level.
    pub f: D,
    pub norms: LevelNorms,
    /// Mass of the mollified data that fell outside the subdomain.
    pub leaked_mass: f64,
}

/// First stage of a two-stage run: truncation height, mollification radius,
/// obstacle and obstacle solution.
#[derive(Clone, Debug)]
pub struct ObstacleStage<U> {
    pub height: f64,
    pub eps: f64,
    pub psi: U,
    pub solution: U,
}

#[derive(Clone, Debug)]
pub struct ApproxSequence<U, D> {
    pub levels: Vec<ApproxLevel<U, D>>,
    pub obstacles: Vec<ObstacleStage<U>>,
    /// Largest negative Riesz mass of the input inside the subdomain (zero
    /// for an exact discrete supersolution).
    pub input_violation: f64,
}

pub type EllipticSequence = ApproxSequence<GridFunction<f64>, GridFunction<f64>>;
pub type ParabolicSequence = ApproxSequence<SpaceTimeFunction<f64>, SpaceTimeMeasure<f64>>;

/// `col[k+1] <= (1 + noise) col[k]` for all `k`.
pub fn decreasing_within(col: &[f64], noise: f64) -> bool {
    col.windows(2).all(|w| w[1] <= (1.0 + noise) * w[0])
}

impl<U, D> ApproxSequence<U, D> {
    pub fn eps(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.eps).collect()
    }

    pub fn column(&self, f: impl Fn(&LevelNorms) -> f64) -> Vec<f64> {
        self.levels.iter().map(|l| f(&l.norms)).collect()
    }

    /// Gradient and dual-gap columns decrease up to 10% noise.
    pub fn is_monotone(&self) -> bool {
        decreasing_within(&self.column(|n| n.grad_lp), 0.1) && decreasing_within(&self.column(|n| n.dual_gap), 0.1)
    }

    /// One row per level.
    pub fn report(&self, name: &str) -> ExperimentReport {
        let mut r = ExperimentReport::new(name, &["level", "eps", "grad_lp", "w1q", "dual_gap", "budget", "weak_gap", "leaked_mass"]);
        let opt = |v: Option<f64>| Cell::Num(v.unwrap_or(f64::NAN));
        for (i, l) in self.levels.iter().enumerate() {
            r.push_row(vec![
                (i + 1).into(),
                l.eps.into(),
                l.norms.grad_lp.into(),
                opt(l.norms.w1q),
                l.norms.dual_gap.into(),
                opt(l.norms.budget),
                opt(l.norms.weak_gap),
                l.leaked_mass.into(),
            ]);
        }
        r.param("input_violation", self.input_violation);
        r.flag("monotone", self.is_monotone());
        r
    }
}

fn check_schedule(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidArgument("empty mollification schedule".into()));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidArgument("mollification radii must be positive".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("mollification radii must be strictly decreasing".into()));
    }
    Ok(())
}

pub(crate) fn check_interior(grid: &Grid<f64>, sub: &NodeBox) -> Result<()> {
    let ok = sub.dim == grid.dim() && (0..grid.dim()).all(|k| sub.lo[k] > 0 && sub.hi[k] + 1 < grid.nodes()[k] && sub.lo[k] < sub.hi[k]);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument("subdomain must lie strictly inside the grid".into()))
    }
}

fn open_part(nf: &NodalFunctional<f64>, sub: &NodeBox) -> Result<NodalFunctional<f64>> {
    let grid = nf.grid();
    let mass = sub
        .indices(grid)
        .into_iter()
        .map(|i| if sub.contains_strictly(&grid.multi_index(i)) { nf.masses()[i] } else { 0.0 })
        .collect();
    NodalFunctional::new(grid.subgrid(sub)?, mass)
}

fn worst_negative(nf: &NodalFunctional<f64>) -> f64 {
    nf.masses().iter().fold(0.0f64, |m, &v| m.max(-v))
}

/// Riesz data of a function on a subgrid and the solves built on it.
struct EllipticSetup<'a> {
    params: &'a PParams<f64>,
    opts: &'a SolverOptions<f64>,
    boundary: GridFunction<f64>,
    positive: DiscreteMeasure<f64>,
    signed: NodalFunctional<f64>,
}

impl<'a> EllipticSetup<'a> {
    /// `u` lives on the subgrid already; its Riesz measure is taken at the
    /// interior nodes.
    fn new(u: GridFunction<f64>, params: &'a PParams<f64>, opts: &'a SolverOptions<f64>) -> Self {
        let rm = riesz_measure(&u, params, opts.scheme);
        let signed = rm.signed();
        Self { params, opts, boundary: u, positive: rm.measure, signed }
    }

    fn level(&self, eps: f64) -> Result<(GridFunction<f64>, GridFunction<f64>, f64, f64)> {
        let m = mollify_with_leak(&self.positive, eps)?;
        let f = DiscreteMeasure::from_density(&m.density)?;
        let grid = self.boundary.grid();
        let (ui, _) = solve_dirichlet_with_stats(grid, self.params, &f, &self.boundary, self.opts, Some(&self.boundary))?;
        let gap = dual_norm(&self.signed.sub(&f.signed())?, self.params)?;
        Ok((ui, m.density, m.leaked_mass, gap))
    }
}

/// Smooth approximation of a supersolution on `sub`: mollify its Riesz
/// measure at each radius of `eps_schedule` and solve the Dirichlet problem
/// with the boundary values of `u`.
pub fn approximate_supersolution(
    u: &GridFunction<f64>,
    sub: &NodeBox,
    params: &PParams<f64>,
    eps_schedule: &[f64],
    opts: &SolverOptions<f64>,
) -> Result<EllipticSequence> {
    check_schedule(eps_schedule)?;
    check_interior(u.grid(), sub)?;
    if let Some(node) = u.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    let full = riesz_measure(u, params, opts.scheme);
    let input_violation = worst_negative(&open_part(&full.remainder, sub)?);
    let u_sub = u.restrict(sub)?;
    let setup = EllipticSetup::new(u_sub.clone(), params, opts);
    let mut levels = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let (ui, f, leaked_mass, dual_gap) = setup.level(eps)?;
        let grad_lp = gradient_lq_norm(&u_sub.sub(&ui)?, params.p(), None)?;
        levels.push(ApproxLevel {
            eps,
            u: ui,
            f,
            norms: LevelNorms { grad_lp, dual_gap, ..LevelNorms::default() },
            leaked_mass,
        });
    }
    Ok(ApproxSequence { levels, obstacles: Vec::new(), input_violation })
}

/// Least-squares fit of `log ||grad (u - u_i)||` against `log gap`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    /// `1 / (p - 1)`.
    pub predicted: f64,
    /// Fitted `C` of `||grad (u - u_i)||^{p-1} <= C gap` (geometric mean over the fit levels).
    pub constant: f64,
    /// Largest `||grad (u - u_i)||^{p-1} / (C gap)` over all levels.
    pub worst_ratio: f64,
    pub levels_used: usize,
    pub slope_ok: bool,
    pub bound_ok: bool,
}

impl RateFit {
    pub fn passed(&self) -> bool {
        self.slope_ok && self.bound_ok
    }
}

/// Fits raw columns; levels are ordered coarse to fine. The coarsest level
/// is dropped when at least three remain.
pub fn rate_fit(gaps: &[f64], norms: &[f64], params: &PParams<f64>) -> Result<RateFit> {
    if gaps.len() != norms.len() {
        return Err(Error::InvalidArgument("column lengths differ".into()));
    }
    if gaps.len() < 3 {
        return Err(Error::InsufficientLevels { got: gaps.len(), need: 3 });
    }
    if gaps.iter().chain(norms).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::DegenerateFit("gaps and norms must be positive".into()));
    }
    let mut sorted = gaps.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] < 1.1 * w[0]) {
        return Err(Error::DegenerateFit("dual-norm gaps not separated by 10%".into()));
    }
    let skip = usize::from(gaps.len() > 3);
    let xs: Vec<f64> = gaps[skip..].iter().map(|g| g.ln()).collect();
    let ys: Vec<f64> = norms[skip..].iter().map(|g| g.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let pm1 = params.p() - 1.0;
    let log_c = xs.iter().zip(&ys).map(|(x, y)| pm1 * y - x).sum::<f64>() / k;
    let constant = log_c.exp();
    let worst_ratio = gaps.iter().zip(norms).map(|(g, n)| n.powf(pm1) / (constant * g)).fold(0.0, f64::max);
    let predicted = 1.0 / pm1;
    Ok(RateFit {
        slope,
        predicted,
        constant,
        worst_ratio,
        levels_used: xs.len(),
        slope_ok: slope >= 0.9 * predicted,
        bound_ok: worst_ratio <= 1.25,
    })
}

pub fn rate_experiment<U, D>(seq: &ApproxSequence<U, D>, params: &PParams<f64>) -> Result<RateFit> {
    rate_fit(&seq.column(|n| n.dual_gap), &seq.column(|n| n.grad_lp), params)
}

/// Radii and budgets of [`approximate_superharmonic`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuperharmonicSchedule {
    /// Number of levels; level `i` truncates at `2^i`.
    pub levels: usize,
    /// Obstacle mollification radius at level 1, halved per level.
    pub obstacle_eps: f64,
    /// First data mollification radius tried at level 1, halved per level.
    pub data_eps: f64,
    /// Halvings of the data radius allowed while enforcing the `1/i` budget.
    pub max_refinements: usize,
}

/// Smooth test functions vanishing on the boundary of `grid`.
fn test_battery(grid: &Grid<f64>) -> Vec<GridFunction<f64>> {
    let dim = grid.dim();
    let unit = |x: &[f64], k: usize| (x[k] - grid.lower()[k]) / (grid.upper()[k] - grid.lower()[k]);
    let sq = |v: f64| v * v;
    vec![
        GridFunction::from_fn(grid, |x| (0..dim).map(|k| sq((std::f64::consts::PI * unit(x, k)).sin())).product()),
        GridFunction::from_fn(grid, |x| (0..dim).map(|k| sq((std::f64::consts::TAU * unit(x, k)).sin())).product()),
        GridFunction::from_fn(grid, |x| unit(x, 0) * (0..dim).map(|k| sq((std::f64::consts::PI * unit(x, k)).sin())).product::<f64>()),
    ]
}

/// Two-stage approximation of a possibly unbounded superharmonic sample.
/// Stage one solves obstacle problems under increasing smooth obstacles
/// built from truncations of `u`; stage two runs one mollification level on
/// each obstacle solution, halving the radius until
/// `||u_i - u~_i||_{W^{1,p}} <= 1/i`. Non-finite nodes of `u` (a pole) are
/// replaced by the top truncation height when measuring errors.
pub fn approximate_superharmonic(
    u: &GridFunction<f64>,
    sub: &NodeBox,
    params: &PParams<f64>,
    schedule: &SuperharmonicSchedule,
    q: f64,
    opts: &SolverOptions<f64>,
) -> Result<EllipticSequence> {
    check_interior(u.grid(), sub)?;
    if schedule.levels == 0 || !(schedule.obstacle_eps > 0.0 && schedule.data_eps > 0.0) {
        return Err(Error::InvalidArgument("superharmonic schedule needs levels and positive radii".into()));
    }
    if let Some(node) = u.values().iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(Error::NonFinite { node });
    }
    let u_sub = u.restrict(sub)?;
    let grid = u_sub.grid().clone();
    if let Some(j) = (0..grid.len()).find(|&j| grid.is_boundary(j) && !u_sub.values()[j].is_finite()) {
        return Err(Error::NonFinite { node: j });
    }
    let top = 2f64.powi(schedule.levels as i32);
    let reference = u_sub.map(|v| v.min(top));
    let target = riesz_measure(&reference, params, opts.scheme).signed();
    let battery = test_battery(&grid);
    let target_pairs: Vec<f64> = battery.iter().map(|phi| target.pair(phi)).collect::<Result<_>>()?;
    let input_violation = if u_sub.all_finite() { worst_negative(&riesz_measure(&u_sub, params, opts.scheme).remainder) } else { f64::NAN };

    let mut obstacles: Vec<ObstacleStage<GridFunction<f64>>> = Vec::with_capacity(schedule.levels);
    let mut levels = Vec::with_capacity(schedule.levels);
    for i in 1..=schedule.levels {
        let height = 2f64.powi(i as i32);
        let eps = schedule.obstacle_eps / 2f64.powi(i as i32 - 1);
        let trunc = u_sub.map(|v| v.min(height));
        let mut psi = mollify_function(&trunc, eps)?.min(&trunc)?;
        if let Some(prev) = obstacles.last() {
            psi = psi.max(&prev.psi)?;
        }
        // boundary values of u, interior values only seed the solver
        let g = GridFunction::new(
            grid.clone(),
            (0..grid.len()).map(|j| if grid.is_boundary(j) { u_sub.values()[j] } else { trunc.values()[j] }).collect(),
        )?;
        let solution = solve_obstacle(&grid, params, &psi, &g, opts)?;
        let setup = EllipticSetup::new(solution.clone(), params, opts);
        let budget_target = 1.0 / i as f64;
        let mut data_eps = schedule.data_eps / 2f64.powi(i as i32 - 1);
        let (mut ui, mut f, mut leaked, mut gap) = setup.level(data_eps)?;
        let mut budget = w1q_norm(&ui.sub(&solution)?, params.p(), None)?;
        let mut refinements = 0;
        while budget > budget_target && refinements < schedule.max_refinements {
            data_eps *= 0.5;
            refinements += 1;
            (ui, f, leaked, gap) = setup.level(data_eps)?;
            budget = w1q_norm(&ui.sub(&solution)?, params.p(), None)?;
        }
        let diff = reference.sub(&ui)?;
        let fm = DiscreteMeasure::from_density(&f)?.signed();
        let weak_gap = battery
            .iter()
            .zip(&target_pairs)
            .map(|(phi, t)| Ok((fm.pair(phi)? - t).abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        levels.push(ApproxLevel {
            eps: data_eps,
            u: ui,
            f,
            norms: LevelNorms {
                grad_lp: gradient_lq_norm(&diff, params.p(), None)?,
                w1q: Some(w1q_norm(&diff, q, None)?),
                dual_gap: gap,
                budget: Some(budget),
                weak_gap: Some(weak_gap),
            },
            leaked_mass: leaked,
        });
        obstacles.push(ObstacleStage { height, eps, psi, solution });
    }
    Ok(ApproxSequence { levels, obstacles, input_violation })
}

/// Largest `u~_i - u~_{i+1}` over consecutive obstacle solutions.
pub fn obstacle_ordering_gap(seq: &EllipticSequence) -> f64 {
    seq.obstacles
        .windows(2)
        .flat_map(|w| w[0].solution.values().iter().zip(w[1].solution.values()).map(|(a, b)| a - b).collect::<Vec<_>>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Parabolic Riesz data on a sub-cylinder and the marches built on it.
pub(crate) struct ParabolicSetup<'a> {
    params: &'a PParams<f64>,
    opts: &'a SolverOptions<f64>,
    pub(crate) data: SpaceTimeFunction<f64>,
    positive: SpaceTimeMeasure<f64>,
    signed: SpaceTimeFunctional<f64>,
    pub(crate) input_violation: f64,
}

impl<'a> ParabolicSetup<'a> {
    pub(crate) fn new(
        u: &SpaceTimeFunction<f64>,
        sub: &SpaceTimeBox,
        params: &'a PParams<f64>,
        opts: &'a SolverOptions<f64>,
    ) -> Result<Self> {
        check_interior(u.grid().spatial(), &sub.space)?;
        let data = u.restrict(sub)?;
        if let Some(node) = data.slices().iter().flat_map(|s| s.values()).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        let rm = riesz_measure_parabolic(&data, params, opts.scheme);
        let input_violation = rm.remainder.iter().map(worst_negative).fold(0.0, f64::max);
        let signed = rm.signed();
        Ok(Self { params, opts, data, positive: rm.measure, signed, input_violation })
    }

    pub(crate) fn level(&self, eps: f64) -> Result<(SpaceTimeFunction<f64>, SpaceTimeMeasure<f64>, f64, f64)> {
        let stg = self.data.grid();
        let mut leaked = 0.0;
        let mut levels = Vec::with_capacity(stg.levels());
        for m in self.positive.levels() {
            let moll = mollify_with_leak(m, eps)?;
            leaked += moll.leaked_mass;
            levels.push(DiscreteMeasure::from_density(&moll.density)?);
        }
        let f = SpaceTimeMeasure::new(stg.clone(), levels)?;
        let ui = solve_cauchy_dirichlet(stg, self.params, &f, &self.data, self.opts)?;
        let gap = parabolic_dual_norm(&self.signed.sub(&f.signed())?, self.params)?;
        Ok((ui, f, leaked, gap))
    }
}

/// Parabolic mirror of [`approximate_supersolution`] on the sub-cylinder
/// `sub`: slicewise mollified Riesz data, boundary and initial values from `u`.
pub fn approximate_superparabolic(
    u: &SpaceTimeFunction<f64>,
    sub: &SpaceTimeBox,
    params: &PParams<f64>,
    eps_schedule: &[f64],
    q: f64,
    opts: &SolverOptions<f64>,
) -> Result<ParabolicSequence> {
    check_schedule(eps_schedule)?;
    let setup = ParabolicSetup::new(u, sub, params, opts)?;
    let mut levels = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let (ui, f, leaked_mass, dual_gap) = setup.level(eps)?;
        let diff = setup.data.sub(&ui)?;
        levels.push(ApproxLevel {
            eps,
            u: ui,
            f,
            norms: LevelNorms {
                grad_lp: parabolic_gradient_norm(&diff, params.p(), None)?,
                w1q: Some(parabolic_sobolev_norm(&diff, q, None)?),
                dual_gap,
                ..LevelNorms::default()
            },
            leaked_mass,
        });
    }
    Ok(ApproxSequence { levels, obstacles: Vec::new(), input_violation: setup.input_violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_fitted_exactly() {
        let p = PParams::new(3.0).unwrap();
        let gaps = [0.5, 0.25, 0.1, 0.03, 0.01];
        let norms: Vec<f64> = gaps.iter().map(|g: &f64| 2.0 * g.sqrt()).collect();
        let fit = rate_fit(&gaps, &norms, &p).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.worst_ratio - 1.0).abs() < 1e-12);
        assert!(fit.passed());
    }

    #[test]
    fn fit_rejects_clustered_gaps() {
        let p = PParams::new(3.0).unwrap();
        assert!(matches!(rate_fit(&[1.0, 0.95, 0.5], &[1.0, 0.9, 0.5], &p), Err(Error::DegenerateFit(_))));
        assert!(matches!(rate_fit(&[1.0, 0.5], &[1.0, 0.5], &p), Err(Error::InsufficientLevels { .. })));
    }

    #[test]
    fn affine_input_is_reproduced() {
        let g = Grid::<f64>::cube(2, -1.0, 1.0, 17).unwrap();
        let p = PParams::new(3.0).unwrap();
        let u = GridFunction::from_fn(&g, |x| 1.0 + 0.5 * x[0] - x[1]);
        let sub = g.snap(&crate::grid::BoxDomain::centered(2, 0.0, 0.5)).unwrap();
        let seq = approximate_supersolution(&u, &sub, &p, &[0.2, 0.1, 0.05], &SolverOptions::default()).unwrap();
        let u_sub = u.restrict(&sub).unwrap();
        for l in &seq.levels {
            assert!(l.f.values().iter().all(|&v| v == 0.0));
            assert!(l.u.max_abs_diff(&u_sub).unwrap() < 1e-12);
        }
    }
}
