//! End-to-end runs of the approximation experiments.

use psuper::exact::{barenblatt, fundamental_superharmonic};
use psuper::pipeline::{
    approximate_superharmonic, approximate_superparabolic, approximate_supersolution, compactness_experiment,
    decreasing_within, density_tol, obstacle_ordering_gap, rate_experiment, CompactnessSetup, SuperharmonicSchedule,
};
use psuper::{
    solve_dirichlet, BoxDomain, DiscreteMeasure, Error, Grid, GridFunction, PParams, SpaceTimeFunction, SpaceTimeGrid,
    SolverOptions,
};

fn p3() -> PParams<f64> {
    PParams::new(3.0).unwrap()
}

fn superharmonic_run() -> psuper::pipeline::EllipticSequence {
    let p = p3();
    // even node count: the pole sits at a cell center, where the sampled
    // solution is close to a discrete supersolution
    let grid = Grid::cube(2, -1.0, 1.0, 40).unwrap();
    let u = GridFunction::from_fn(&grid, |x| fundamental_superharmonic(x, 2, &p));
    let sub = grid.snap(&BoxDomain::centered(2, 0.0, 0.75)).unwrap();
    let schedule = SuperharmonicSchedule { levels: 5, obstacle_eps: 0.2, data_eps: 0.2, max_refinements: 8 };
    approximate_superharmonic(&u, &sub, &p, &schedule, 1.5, &SolverOptions::default()).unwrap()
}

// [DERIVED] convergence run for the fundamental solution, q = 1.5 below q_elliptic
#[test]
fn superharmonic_fundamental_solution_converges_in_w1q() {
    let seq = superharmonic_run();
    let col: Vec<f64> = seq.column(|n| n.w1q.unwrap());
    assert!(decreasing_within(&col, 0.0), "{col:?}");
    assert!(col[col.len() - 1] <= 0.2 * col[0], "{col:?}");
    for (i, l) in seq.levels.iter().enumerate() {
        assert!(l.norms.budget.unwrap() <= 1.0 / (i + 1) as f64);
    }
}

// [DERIVED] obstacle monotonicity carries over to the obstacle stage
#[test]
fn superharmonic_obstacle_solutions_are_ordered() {
    let seq = superharmonic_run();
    assert_eq!(seq.obstacles.len(), 5);
    assert!(obstacle_ordering_gap(&seq) <= 10.0 * SolverOptions::<f64>::default().tol);
    for w in seq.obstacles.windows(2) {
        assert!(w[0].psi.values().iter().zip(w[1].psi.values()).all(|(a, b)| a <= b));
    }
}

// [DERIVED] a p-harmonic-plus-data solution is reproduced with a shrinking gap
#[test]
fn supersolution_sequence_is_monotone_and_fits_a_rate() {
    let p = p3();
    let grid = Grid::cube(2, -1.0, 1.0, 65).unwrap();
    let f = DiscreteMeasure::dirac(&grid, &[0.0, 0.0], 1.0).unwrap();
    let u = solve_dirichlet(&grid, &p, &f, &GridFunction::zeros(&grid), &SolverOptions::default()).unwrap();
    let sub = grid.snap(&BoxDomain::centered(2, 0.0, 0.5)).unwrap();
    let seq = approximate_supersolution(&u, &sub, &p, &[0.4, 0.2, 0.1, 0.05], &SolverOptions::default()).unwrap();
    assert!(seq.is_monotone());
    assert!(seq.input_violation <= 1e-6);
    let fit = rate_experiment(&seq, &p).unwrap();
    assert!(fit.slope > 0.0);
    let report = seq.report("rate");
    assert_eq!(report.rows.len(), 4);
    assert!(report.passed());
}

// [TRIVIAL] an unordered schedule is rejected
#[test]
fn schedule_must_decrease() {
    let p = p3();
    let grid = Grid::cube(2, -1.0, 1.0, 17).unwrap();
    let u = GridFunction::zeros(&grid);
    let sub = grid.snap(&BoxDomain::centered(2, 0.0, 0.5)).unwrap();
    let err = approximate_supersolution(&u, &sub, &p, &[0.1, 0.2], &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

// [DERIVED] truncated Barenblatt on a cylinder around the origin, q = 2
#[test]
fn superparabolic_truncated_barenblatt_error_decreases() {
    let p = p3();
    let c = 1.5;
    let grid = Grid::cube(1, -4.0, 4.0, 161).unwrap();
    let stg = SpaceTimeGrid::new(grid, 0.2, 1.2, 40).unwrap();
    let u = SpaceTimeFunction::from_fn(&stg, |x, t| barenblatt(x, t, 1, &p, c).min(2.0));
    let sub = stg.snap(&BoxDomain::new(vec![-3.5], vec![3.5]), 0.2, 1.2).unwrap();
    let seq = approximate_superparabolic(&u, &sub, &p, &[0.4, 0.2, 0.1, 0.05], 2.0, &SolverOptions::default()).unwrap();
    let col = seq.column(|n| n.w1q.unwrap());
    assert!(decreasing_within(&col, 0.0), "{col:?}");
    assert!(decreasing_within(&seq.column(|n| n.dual_gap), 0.05));
}

// [TRIVIAL] constants form a bounded family with a constant limit
#[test]
fn compactness_of_constants() {
    let p = p3();
    let grid = Grid::cube(1, 0.0, 1.0, 33).unwrap();
    let stg = SpaceTimeGrid::new(grid.clone(), 0.0, 1.0, 8).unwrap();
    let family: Vec<_> = (1..=6).map(|i| SpaceTimeFunction::constant(&stg, 1.0 + 0.5f64.powi(i + 2))).collect();
    let sub = stg.snap(&BoxDomain::new(vec![0.25], vec![0.75]), 0.0, 1.0).unwrap();
    let expected = SpaceTimeFunction::constant(&stg, 1.0).restrict(&sub).unwrap();
    let opts = SolverOptions::default();
    let setup = CompactnessSetup {
        sub,
        q: 2.0,
        s: 2.0,
        eps: 0.1,
        max_refinements: 4,
        member_tol: density_tol(&grid, &opts),
        solver: opts,
        expected_limit: Some(expected),
    };
    let out = compactness_experiment(&family, 2.0, &p, &setup).unwrap();
    assert!(out.report.passed(), "{:?}", out.report.flags);
    assert!(out.caccioppoli.iter().all(|&c| c == 0.0));
    assert!(out.selected.len() >= 3);
}
