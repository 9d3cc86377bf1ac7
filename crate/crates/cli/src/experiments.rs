//! Builds and runs the configured experiments.

use psuper::exact::{barenblatt, fundamental_superharmonic};
use psuper::measures::{dual_norm, mollify_measure};
use psuper::pipeline::{
    approximate_superharmonic, approximate_superparabolic, approximate_supersolution, compactness_experiment,
    decreasing_within, density_tol, integrability_experiment, obstacle_ordering_gap, rate_experiment,
    truncated_barenblatt_family, CompactnessSetup, ExperimentReport, SuperharmonicSchedule,
};
use psuper::{
    solve_dirichlet, BoxDomain, DiscreteMeasure, Grid, GridFunction, SchemeKind, SolverOptions, SpaceTimeFunction,
    SpaceTimeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{
    CompactnessSpec, ExperimentSpec, IntegrabilitySpec, MeasureKind, MollificationSpec, RateSpec, SuperharmonicSpec,
    SuperparabolicSpec,
};

type Outcome = psuper::Result<ExperimentReport>;

/// Runs one experiment; `seed` feeds every random choice it makes.
pub fn run(spec: &ExperimentSpec, seed: u64, opts: &SolverOptions<f64>) -> Outcome {
    let mut report = match spec {
        ExperimentSpec::Rate(s) => rate(s, opts),
        ExperimentSpec::Integrability(s) => integrability(s),
        ExperimentSpec::Compactness(s) => compactness(s, opts),
        ExperimentSpec::Mollification(s) => mollification(s, seed),
        ExperimentSpec::Superharmonic(s) => superharmonic(s, opts),
        ExperimentSpec::Superparabolic(s) => superparabolic(s, opts),
    }?;
    report.name = spec.name();
    report.param("kind", spec.kind()).param("seed", seed);
    Ok(report)
}

fn rate(s: &RateSpec, opts: &SolverOptions<f64>) -> Outcome {
    let params = psuper::PParams::new(s.p)?;
    let grid = Grid::cube(s.n, -s.half_width, s.half_width, s.nodes)?;
    let origin = vec![0.0; s.n];
    let f = DiscreteMeasure::dirac(&grid, &origin, s.mass)?;
    let u = solve_dirichlet(&grid, &params, &f, &GridFunction::zeros(&grid), opts)?;
    let sub = grid.snap(&BoxDomain::centered(s.n, 0.0, s.sub_half_width))?;
    let seq = approximate_supersolution(&u, &sub, &params, &s.eps, opts)?;
    let fit = rate_experiment(&seq, &params)?;

    let grad = seq.column(|n| n.grad_lp);
    let gap = seq.column(|n| n.dual_gap);
    let mut report = ExperimentReport::new("rate", &["level", "eps", "grad_lp", "dual_gap", "leaked_mass", "slope"]);
    for (i, l) in seq.levels.iter().enumerate() {
        // local slope against the previous level
        let slope = if i == 0 { f64::NAN } else { (grad[i] / grad[i - 1]).ln() / (gap[i] / gap[i - 1]).ln() };
        report.push_row(vec![(i + 1).into(), l.eps.into(), grad[i].into(), gap[i].into(), l.leaked_mass.into(), slope.into()]);
    }
    report.slopes.insert("fit".into(), fit.slope);
    report.slopes.insert("predicted".into(), fit.predicted);
    report.flag("monotone", seq.is_monotone());
    report.flag("slope", fit.slope_ok);
    report.flag("bound", fit.bound_ok);
    report.param("nodes", s.nodes).param("eps", &s.eps).param("input_violation", seq.input_violation).param("fit", fit);
    Ok(report)
}

fn integrability(s: &IntegrabilitySpec) -> Outcome {
    let params = psuper::PParams::new(s.p)?;
    let (report, _) = integrability_experiment(s.mode, s.n, &params, &s.q, s.levels)?;
    Ok(report)
}

fn compactness(s: &CompactnessSpec, opts: &SolverOptions<f64>) -> Outcome {
    let params = psuper::PParams::new(s.p)?;
    // min-closure needs the monotone scheme
    let opts = SolverOptions { scheme: SchemeKind::Edge, ..*opts };
    let grid = Grid::cube(1, -s.half_width, s.half_width, s.nodes)?;
    let stg = SpaceTimeGrid::new(grid.clone(), s.t0, s.t1, s.steps)?;
    let shifts: Vec<Vec<f64>> = (1..=s.members).map(|i| vec![s.shift * 0.5f64.powi(i as i32)]).collect();
    let family = truncated_barenblatt_family(&stg, &params, s.c, s.m_bound, &shifts, &opts)?;
    let sub = stg.snap(&BoxDomain::new(vec![-s.sub_half_width], vec![s.sub_half_width]), s.t0, s.t1)?;
    let expected =
        SpaceTimeFunction::from_fn(&stg, |x, t| barenblatt(x, t, 1, &params, s.c).min(s.m_bound)).restrict(&sub)?;
    let setup = CompactnessSetup {
        sub,
        q: s.q,
        s: s.s,
        eps: s.eps,
        max_refinements: s.max_refinements,
        member_tol: density_tol(&grid, &opts),
        solver: opts,
        expected_limit: Some(expected),
    };
    let mut out = compactness_experiment(&family, s.m_bound, &params, &setup)?;
    out.report.param("c", s.c).param("nodes", s.nodes).param("steps", s.steps);
    Ok(out.report)
}

fn mollification(s: &MollificationSpec, seed: u64) -> Outcome {
    let params = psuper::PParams::new(s.p)?;
    let grid = Grid::cube(s.n, -s.half_width, s.half_width, s.nodes)?;
    let mu = match s.measure {
        MeasureKind::Dirac => DiscreteMeasure::dirac(&grid, &vec![0.0; s.n], 1.0)?,
        MeasureKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inner = 0.5 * s.half_width;
            let masses: Vec<f64> = (0..grid.len())
                .map(|j| {
                    let x = grid.point(j);
                    let inside = x[..s.n].iter().all(|v| v.abs() < inner);
                    if inside {
                        rng.gen_range(0.0..1.0) * grid.node_weight(j)
                    } else {
                        0.0
                    }
                })
                .collect();
            DiscreteMeasure::new(grid.clone(), masses)?
        }
    };
    let mut report = ExperimentReport::new("mollification", &["level", "eps", "dual_gap"]);
    let mut gaps = Vec::with_capacity(s.halvings + 1);
    for i in 0..=s.halvings {
        let eps = s.eps0 / 2f64.powi(i as i32);
        let f = mollify_measure(&mu, eps)?;
        let gap = dual_norm(&mu.signed().sub(&f.signed())?, &params)?;
        report.push_row(vec![(i + 1).into(), eps.into(), gap.into()]);
        gaps.push(gap);
    }
    let fraction = gaps[gaps.len() - 1] / gaps[0];
    report.param("measure", if s.measure == MeasureKind::Random { "random" } else { "dirac" }).param("final_fraction", fraction).param("nodes", s.nodes);
    report.flag("decreasing", decreasing_within(&gaps, 0.05));
    report.flag("final_fraction", fraction <= s.target);
    Ok(report)
}

fn superharmonic(s: &SuperharmonicSpec, opts: &SolverOptions<f64>) -> Outcome {
    let params = psuper::PParams::new(s.p)?;
    let grid = Grid::cube(s.n, -s.half_width, s.half_width, s.nodes)?;
    let u = GridFunction::from_fn(&grid, |x| fundamental_superharmonic(x, s.n, &params));
    let sub = grid.snap(&BoxDomain::centered(s.n, 0.0, s.sub_half_width))?;
    let schedule = SuperharmonicSchedule {
        levels: s.levels,
        obstacle_eps: s.obstacle_eps,
        data_eps: s.data_eps,
        max_refinements: s.max_refinements,
    };
    let seq = approximate_superharmonic(&u, &sub, &params, &schedule, s.q, opts)?;
    let mut report = seq.report("superharmonic");
    let col: Vec<f64> = seq.column(|n| n.w1q.unwrap_or(f64::NAN));
    let budgets_ok = seq.levels.iter().enumerate().all(|(i, l)| l.norms.budget.is_some_and(|b| b <= 1.0 / (i + 1) as f64));
    let ordering = obstacle_ordering_gap(&seq);
    report.param("obstacle_ordering_gap", ordering).param("q", s.q).param("nodes", s.nodes);
    report.flag("w1q_decreasing", decreasing_within(&col, 0.0));
    report.flag("budgets", budgets_ok);
    report.flag("obstacles_ordered", ordering <= 10.0 * opts.tol);
    Ok(report)
}

fn superparabolic(s: &SuperparabolicSpec, opts: &SolverOptions<f64>) -> Outcome {
    let params = psuper::PParams::new(s.p)?;
    let grid = Grid::cube(1, -s.half_width, s.half_width, s.nodes)?;
    let stg = SpaceTimeGrid::new(grid, s.t0, s.t1, s.steps)?;
    let u = SpaceTimeFunction::from_fn(&stg, |x, t| barenblatt(x, t, 1, &params, s.c).min(s.m_bound));
    let sub = stg.snap(&BoxDomain::new(vec![-s.sub_half_width], vec![s.sub_half_width]), s.t0, s.t1)?;
    let seq = approximate_superparabolic(&u, &sub, &params, &s.eps, s.q, opts)?;
    let mut report = seq.report("superparabolic");
    let col: Vec<f64> = seq.column(|n| n.w1q.unwrap_or(f64::NAN));
    report.param("c", s.c).param("M", s.m_bound).param("q", s.q).param("nodes", s.nodes).param("steps", s.steps);
    report.flag("w1q_decreasing", decreasing_within(&col, 0.0));
    Ok(report)
}
