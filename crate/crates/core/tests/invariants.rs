//! Property tests for the structural invariants of the discrete operators,
//! solvers, norms and measures.

use proptest::prelude::*;
use psuper::elliptic::solve_dirichlet_with_stats;
use psuper::measures::{dual_norm, mollify, riesz_measure};
use psuper::norms::{gradient, gradient_lq_norm, lr_norm};
use psuper::operators::{is_supersolution, p_energy, p_laplacian_apply};
use psuper::{
    solve_dirichlet, solve_obstacle, DiscreteMeasure, Grid, GridFunction, NodalFunctional, PParams, SchemeKind,
    SolverOptions,
};

const M: usize = 7;

fn grid2() -> Grid<f64> {
    Grid::cube(2, 0.0, 1.0, M).unwrap()
}

fn field(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, M * M)
}

fn gf(v: Vec<f64>) -> GridFunction<f64> {
    GridFunction::new(grid2(), v).unwrap()
}

fn scheme() -> impl Strategy<Value = SchemeKind> {
    prop_oneof![Just(SchemeKind::Simplex), Just(SchemeKind::Edge)]
}

fn p_strategy() -> impl Strategy<Value = PParams<f64>> {
    (2.1f64..5.0).prop_map(|p| PParams::new(p).unwrap())
}

fn measure(v: Vec<f64>) -> DiscreteMeasure<f64> {
    DiscreteMeasure::new(grid2(), v).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    // [TRIVIAL] norm axioms
    #[test]
    fn lr_norm_is_a_norm(a in field(-2.0, 2.0), b in field(-2.0, 2.0), s in -3.0f64..3.0, r in 1.0f64..6.0) {
        let (u, v) = (gf(a), gf(b));
        let nu = lr_norm(&u, r, None).unwrap();
        let nv = lr_norm(&v, r, None).unwrap();
        prop_assert!(lr_norm(&u.add(&v).unwrap(), r, None).unwrap() <= nu + nv + 1e-12);
        prop_assert!(close(lr_norm(&u.scale(s), r, None).unwrap(), s.abs() * nu, 1e-12));
        prop_assert!(nu >= 0.0);
    }

    // [TRIVIAL]
    #[test]
    fn gradient_norm_is_a_seminorm(a in field(-2.0, 2.0), b in field(-2.0, 2.0), s in -3.0f64..3.0, q in 1.0f64..6.0, c in -5.0f64..5.0) {
        let (u, v) = (gf(a), gf(b));
        let nu = gradient_lq_norm(&u, q, None).unwrap();
        let nv = gradient_lq_norm(&v, q, None).unwrap();
        prop_assert!(gradient_lq_norm(&u.add(&v).unwrap(), q, None).unwrap() <= nu + nv + 1e-12);
        prop_assert!(close(gradient_lq_norm(&u.scale(s), q, None).unwrap(), s.abs() * nu, 1e-12));
        // constants are in the kernel
        prop_assert!(close(gradient_lq_norm(&u.add_scalar(c), q, None).unwrap(), nu, 1e-9));
    }

    // [DERIVED] the P1 gradient is linear in the nodal values
    #[test]
    fn gradient_is_linear(a in field(-2.0, 2.0), b in field(-2.0, 2.0), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let (u, v) = (gf(a), gf(b));
        let w = u.scale(s).add(&v.scale(t)).unwrap();
        let (gu, gv, gw) = (gradient(&u), gradient(&v), gradient(&w));
        for i in 0..gw.len() {
            for k in 0..2 {
                let lin = s * gu.get(i)[k] + t * gv.get(i)[k];
                prop_assert!((gw.get(i)[k] - lin).abs() <= 1e-9 * (1.0 + lin.abs()));
            }
        }
    }

    // [DERIVED] A(lambda u) = lambda^{p-1} A(u), A(-u) = -A(u)
    #[test]
    fn operator_is_homogeneous(a in field(-2.0, 2.0), lambda in 0.1f64..4.0, p in p_strategy(), sch in scheme()) {
        let u = gf(a);
        let base = p_laplacian_apply(&u, &p, sch);
        let scaled = p_laplacian_apply(&u.scale(lambda), &p, sch);
        let neg = p_laplacian_apply(&u.scale(-1.0), &p, sch);
        let f = lambda.powf(p.p() - 1.0);
        for j in 0..base.values().len() {
            let b = base.values()[j];
            prop_assert!(close(scaled.values()[j], f * b, 1e-9));
            prop_assert!(close(neg.values()[j], -b, 1e-12));
        }
    }

    // [DERIVED] A(u + beta) = A(u) up to rounding, both schemes
    #[test]
    fn operator_ignores_constants(a in field(-2.0, 2.0), beta in -10.0f64..10.0, p in p_strategy(), sch in scheme()) {
        let u = gf(a);
        let x = p_laplacian_apply(&u, &p, sch);
        let y = p_laplacian_apply(&u.add_scalar(beta), &p, sch);
        let scale = x.max_abs().max(1.0);
        prop_assert!(x.max_abs_diff(&y).unwrap() <= 1e-8 * scale);
    }

    // [DERIVED] raising a neighbour never raises A(u) at a node (edge scheme;
    // A approximates -Delta_p)
    #[test]
    fn edge_scheme_is_monotone(a in field(-2.0, 2.0), bump in 0.0f64..1.0, node in 0usize..(M * M), axis in 0usize..2, forward in any::<bool>(), p in p_strategy()) {
        let grid = grid2();
        prop_assume!(!grid.is_boundary(node));
        let stride = grid.strides()[axis];
        let nb = if forward { node + stride } else { node - stride };
        let u = gf(a);
        let mut v = u.clone();
        v.values_mut()[nb] += bump;
        let before = p_laplacian_apply(&u, &p, SchemeKind::Edge).values()[node];
        let after = p_laplacian_apply(&v, &p, SchemeKind::Edge).values()[node];
        prop_assert!(after <= before + 1e-12 * (1.0 + before.abs()));
    }

    // [DERIVED] discrete energy is convex
    #[test]
    fn energy_is_convex(a in field(-2.0, 2.0), b in field(-2.0, 2.0), t in 0.0f64..1.0, p in p_strategy(), sch in scheme()) {
        let (u, v) = (gf(a), gf(b));
        let w = u.scale(t).add(&v.scale(1.0 - t)).unwrap();
        let e = |x: &GridFunction<f64>| p_energy(x, &p, sch, None).unwrap();
        prop_assert!(e(&w) <= t * e(&u) + (1.0 - t) * e(&v) + 1e-10);
    }

    // [TRIVIAL] mollification is linear on nonnegative combinations
    #[test]
    fn mollify_is_linear(a in field(0.0, 1.0), b in field(0.0, 1.0), s in 0.0f64..3.0, t in 0.0f64..3.0, eps in 0.1f64..0.4) {
        let (mu, nu) = (measure(a.clone()), measure(b.clone()));
        let comb = measure(a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect());
        let lhs = mollify(&comb, eps).unwrap();
        let rhs = mollify(&mu, eps).unwrap().scale(s).add(&mollify(&nu, eps).unwrap().scale(t)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    // [TRIVIAL] dual norm: triangle inequality and absolute homogeneity
    #[test]
    fn dual_norm_is_a_norm(a in field(-1.0, 1.0), b in field(-1.0, 1.0), s in -3.0f64..3.0, p in p_strategy()) {
        let mu = NodalFunctional::new(grid2(), a).unwrap();
        let nu = NodalFunctional::new(grid2(), b).unwrap();
        let (nm, nn) = (dual_norm(&mu, &p).unwrap(), dual_norm(&nu, &p).unwrap());
        prop_assert!(dual_norm(&mu.add(&nu).unwrap(), &p).unwrap() <= nm + nn + 1e-12);
        prop_assert!(close(dual_norm(&mu.scale(s), &p).unwrap(), s.abs() * nm, 1e-10));
    }
}

fn boundary_data(g: &[f64]) -> GridFunction<f64> {
    let grid = grid2();
    GridFunction::from_fn(&grid, |x| g[0] + g[1] * x[0] + g[2] * x[1] + g[3] * x[0] * x[1])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    // [DERIVED] min of two edge-scheme supersolutions is a supersolution
    #[test]
    fn edge_min_closure(fa in field(0.0, 2.0), fb in field(0.0, 2.0), ga in prop::collection::vec(-1.0f64..1.0, 4), gb in prop::collection::vec(-1.0f64..1.0, 4), p in p_strategy()) {
        let grid = grid2();
        let opts = SolverOptions { scheme: SchemeKind::Edge, ..SolverOptions::default() };
        let tol = 10.0 * opts.tol / grid.node_weight(grid.nearest_node(&[0.5, 0.5]));
        let u = solve_dirichlet(&grid, &p, &DiscreteMeasure::from_density(&gf(fa)).unwrap(), &boundary_data(&ga), &opts).unwrap();
        let v = solve_dirichlet(&grid, &p, &DiscreteMeasure::from_density(&gf(fb)).unwrap(), &boundary_data(&gb), &opts).unwrap();
        prop_assert!(is_supersolution(&u, &p, SchemeKind::Edge, tol).passed());
        prop_assert!(is_supersolution(&v, &p, SchemeKind::Edge, tol).passed());
        let m = u.min(&v).unwrap();
        let rep = is_supersolution(&m, &p, SchemeKind::Edge, tol);
        prop_assert!(rep.passed(), "{}", rep.to_json());
    }

    // [PAPER] comparison: ordered data give ordered solutions
    #[test]
    fn comparison_principle(f in field(0.0, 2.0), df in field(0.0, 1.0), g in prop::collection::vec(-1.0f64..1.0, 4), lift in 0.0f64..0.5, p in p_strategy(), sch in scheme()) {
        let grid = grid2();
        let opts = SolverOptions { scheme: sch, ..SolverOptions::default() };
        let f2: Vec<f64> = f.iter().zip(&df).map(|(a, b)| a + b).collect();
        let g1 = boundary_data(&g);
        let u1 = solve_dirichlet(&grid, &p, &DiscreteMeasure::from_density(&gf(f)).unwrap(), &g1, &opts).unwrap();
        let u2 = solve_dirichlet(&grid, &p, &DiscreteMeasure::from_density(&gf(f2)).unwrap(), &g1.add_scalar(lift), &opts).unwrap();
        let gap = u1.values().iter().zip(u2.values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(gap <= 10.0 * opts.tol, "gap {gap}");
    }

    // [PAPER] strict convexity: the solution does not depend on the start
    #[test]
    fn solution_is_unique(f in field(0.0, 2.0), g in prop::collection::vec(-1.0f64..1.0, 4), start in field(-3.0, 3.0), p in p_strategy()) {
        let grid = grid2();
        let opts = SolverOptions::default();
        let mu = DiscreteMeasure::from_density(&gf(f)).unwrap();
        let bd = boundary_data(&g);
        let mut init = gf(start);
        for j in 0..grid.len() {
            if grid.is_boundary(j) {
                init.values_mut()[j] = bd.values()[j];
            }
        }
        let a = solve_dirichlet(&grid, &p, &mu, &bd, &opts).unwrap();
        let (b, _) = solve_dirichlet_with_stats(&grid, &p, &mu, &bd, &opts, Some(&init)).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-6);
    }

    // [DERIVED] riesz_measure inverts solve_dirichlet on interior data
    #[test]
    fn riesz_inverts_solve(f in field(0.0, 2.0), g in prop::collection::vec(-1.0f64..1.0, 4), p in p_strategy(), sch in scheme()) {
        let grid = grid2();
        let opts = SolverOptions { scheme: sch, ..SolverOptions::default() };
        let mass: Vec<f64> = f.iter().enumerate().map(|(j, v)| if grid.is_boundary(j) { 0.0 } else { v * grid.node_weight(j) }).collect();
        let mu = measure(mass);
        let u = solve_dirichlet(&grid, &p, &mu, &boundary_data(&g), &opts).unwrap();
        let back = riesz_measure(&u, &p, sch).signed();
        prop_assert!(back.sub(&mu.signed()).unwrap().total_variation() <= 10.0 * opts.tol);
    }

    // [PAPER] raising the obstacle raises the solution
    #[test]
    fn obstacle_is_monotone(a in field(-1.0, 0.5), d in field(0.0, 0.5), p in p_strategy()) {
        let grid = grid2();
        let opts = SolverOptions::default();
        let zero = GridFunction::zeros(&grid);
        // obstacles stay below the zero boundary data
        let on_boundary = |v: Vec<f64>, b: f64| gf(v.into_iter().enumerate().map(|(j, x)| if grid.is_boundary(j) { b } else { x }).collect());
        let psi1 = on_boundary(a, -1.0);
        let psi2 = psi1.add(&on_boundary(d, 0.0)).unwrap();
        let u1 = solve_obstacle(&grid, &p, &psi1, &zero, &opts).unwrap();
        let u2 = solve_obstacle(&grid, &p, &psi2, &zero, &opts).unwrap();
        for j in 0..grid.len() {
            prop_assert!(u1.values()[j] <= u2.values()[j] + 10.0 * opts.tol);
            if !grid.is_boundary(j) {
                prop_assert!(u2.values()[j] >= psi2.values()[j]);
            }
        }
    }
}
