use serde::Serialize;

use crate::elliptic::SolverOptions;
use crate::error::{Error, Result};
use crate::exact::barenblatt;
use crate::grid::{Grid, PParams, SpaceTimeBox, SpaceTimeFunction, SpaceTimeGrid};
use crate::measures::{dual_norm_exponent, DiscreteMeasure, SpaceTimeMeasure};
use crate::parabolic::solve_cauchy_dirichlet;
use crate::norms::{parabolic_gradient_norm, parabolic_lr_norm, parabolic_sobolev_norm};
use crate::operators::parabolic_supersolution_check;

use super::approx::ParabolicSetup;
use super::report::ExperimentReport;

/// Knobs of [`compactness_experiment`].
#[derive(Clone, Debug)]
pub struct CompactnessSetup {
    /// Sub-cylinder for the Caccioppoli bound and the approximants.
    pub sub: SpaceTimeBox,
    /// Exponent of the `L^q(W^{1,q})` budgets.
    pub q: f64,
    /// Exponent of the slicewise `W^{-1,s}` bound.
    pub s: f64,
    /// First mollification radius; halved until the `1/i` budget holds.
    pub eps: f64,
    pub max_refinements: usize,
    /// Density tolerance for checking the family members.
    pub member_tol: f64,
    pub solver: SolverOptions<f64>,
    /// Expected limit on the sub-cylinder grid, when known.
    pub expected_limit: Option<SpaceTimeFunction<f64>>,
}

/// Result of [`compactness_experiment`] next to its report.
#[derive(Clone, Debug)]
pub struct CompactnessOutcome {
    pub report: ExperimentReport,
    /// Indices (0-based) picked by the greedy Cauchy extraction.
    pub selected: Vec<usize>,
    /// Last selected approximant, living on the sub-cylinder.
    pub limit: SpaceTimeFunction<f64>,
    /// `C_i = ||grad u_i||_{L^p} / M` per member.
    pub caccioppoli: Vec<f64>,
}

#[derive(Serialize)]
struct Budget {
    member: usize,
    eps: f64,
    gap: f64,
}

/// Density tolerance of a discrete supersolution produced by the solvers:
/// ten solver tolerances over the smallest nodal weight.
pub fn density_tol(grid: &Grid<f64>, opts: &SolverOptions<f64>) -> f64 {
    let w = (0..grid.len()).filter(|&j| !grid.is_boundary(j)).map(|j| grid.node_weight(j)).fold(f64::INFINITY, f64::min);
    10.0 * opts.tol / w
}

/// `min(U_i, M)` for the discrete solutions `U_i` of the homogeneous
/// equation whose initial and lateral values are `B_p(. - x_i, t)` sampled
/// on `stg`. Use the edge scheme in `opts` for min-closure.
pub fn truncated_barenblatt_family(
    stg: &SpaceTimeGrid<f64>,
    params: &PParams<f64>,
    c: f64,
    m_bound: f64,
    shifts: &[Vec<f64>],
    opts: &SolverOptions<f64>,
) -> Result<Vec<SpaceTimeFunction<f64>>> {
    let n = stg.spatial().dim();
    if shifts.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument(format!("shifts must have {n} coordinates")));
    }
    let zero = SpaceTimeMeasure::zero(stg);
    shifts
        .iter()
        .map(|x0| {
            let pb = SpaceTimeFunction::from_fn(stg, |x, t| {
                let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                barenblatt(&y, t, n, params, c)
            });
            Ok(solve_cauchy_dirichlet(stg, params, &zero, &pb, opts)?.map(|v| v.min(m_bound)))
        })
        .collect()
}

/// Bounded supersolution family: Caccioppoli-type gradient bound, smooth
/// approximants within `1/i`, the slicewise dual bound on their data and
/// greedy extraction of an `L^1`-Cauchy subsequence whose last element is
/// checked as a supersolution.
pub fn compactness_experiment(
    family: &[SpaceTimeFunction<f64>],
    m_bound: f64,
    params: &PParams<f64>,
    setup: &CompactnessSetup,
) -> Result<CompactnessOutcome> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    if !(m_bound > 0.0) {
        return Err(Error::InvalidArgument("bound M must be positive".into()));
    }
    let stg = family[0].grid();
    if family.iter().any(|u| u.grid() != stg) {
        return Err(Error::GridMismatch);
    }
    let mut report = ExperimentReport::new(
        "compactness",
        &["member", "sup_norm", "member_violation", "caccioppoli", "eps", "budget_gap", "dual_ratio"],
    );
    report.param("p", params.p()).param("M", m_bound).param("q", setup.q).param("s", setup.s).param("members", family.len());

    // slicewise equivalence constant: ||T_1 delta||_{L^s} for a unit mass
    let sub_grid = stg.spatial().subgrid(&setup.sub.space)?;
    let center: Vec<f64> = (0..sub_grid.dim()).map(|k| 0.5 * (sub_grid.lower()[k] + sub_grid.upper()[k])).collect();
    let c_eq = dual_norm_exponent(&DiscreteMeasure::dirac(&sub_grid, &center, 1.0)?.signed(), setup.s)?;
    report.param("c_eq", c_eq);

    let mut bounded = true;
    let mut members_ok = true;
    let mut budgets_ok = true;
    let mut dual_ok = true;
    let mut caccioppoli = Vec::with_capacity(family.len());
    let mut approximants = Vec::with_capacity(family.len());
    let mut budgets = Vec::with_capacity(family.len());
    for (i, u) in family.iter().enumerate() {
        let sup = u.max_abs();
        bounded &= sup <= m_bound * (1.0 + 1e-12);
        let check = parabolic_supersolution_check(u, params, setup.solver.scheme, setup.member_tol);
        members_ok &= check.passed();
        let c_i = parabolic_gradient_norm(u, params.p(), Some(&setup.sub))? / m_bound;
        caccioppoli.push(c_i);

        let ps = ParabolicSetup::new(u, &setup.sub, params, &setup.solver)?;
        let target = 1.0 / (i + 1) as f64;
        let mut eps = setup.eps;
        let mut refinements = 0;
        let (mut v, mut f, _, _) = ps.level(eps)?;
        let mut gap = parabolic_sobolev_norm(&ps.data.sub(&v)?, setup.q, None)?;
        while gap > target && refinements < setup.max_refinements {
            eps *= 0.5;
            refinements += 1;
            (v, f, _, _) = ps.level(eps)?;
            gap = parabolic_sobolev_norm(&ps.data.sub(&v)?, setup.q, None)?;
        }
        budgets_ok &= gap <= target;

        let tau = f.grid().tau();
        let mut worst = 0.0f64;
        for k in 1..f.grid().levels() {
            let slice = f.level(k);
            let l1 = slice.total_mass() / tau;
            if l1 > 0.0 {
                let dn = dual_norm_exponent(&slice.signed().scale(1.0 / tau), setup.s)?;
                worst = worst.max(dn / (c_eq * l1));
            }
        }
        dual_ok &= worst <= 1.0 + 1e-9;
        report.push_row(vec![
            (i + 1).into(),
            sup.into(),
            check.max_violation.into(),
            c_i.into(),
            eps.into(),
            gap.into(),
            worst.into(),
        ]);
        budgets.push(Budget { member: i + 1, eps, gap });
        approximants.push(v);
    }
    report.param("budgets", &budgets);

    let mean = caccioppoli.iter().sum::<f64>() / caccioppoli.len() as f64;
    let stable = mean.is_finite() && caccioppoli.iter().all(|c| (c - mean).abs() <= 0.25 * mean);
    report.param("caccioppoli_constant", mean);

    // greedy extraction: next index whose distance to the last pick is <= 2^-k
    let mut selected = vec![0usize];
    let mut next = 1;
    while next < approximants.len() {
        let k = selected.len() as i32;
        let last = *selected.last().expect("nonempty");
        let found = (next..approximants.len()).find(|&j| {
            approximants[j]
                .sub(&approximants[last])
                .and_then(|d| parabolic_lr_norm(&d, 1.0, None))
                .is_ok_and(|d| d <= 2f64.powi(-k))
        });
        match found {
            Some(j) => {
                selected.push(j);
                next = j + 1;
            }
            None => break,
        }
    }
    if selected.len() < 3.min(approximants.len()) {
        return Err(Error::NoCauchySubsequence { selected: selected.len() });
    }
    let limit = approximants[*selected.last().expect("nonempty")].clone();
    let limit_tol = density_tol(limit.grid().spatial(), &setup.solver);
    let limit_check = parabolic_supersolution_check(&limit, params, setup.solver.scheme, limit_tol);
    report.param("selected", selected.iter().map(|i| i + 1).collect::<Vec<_>>());
    report.param("limit_violation", limit_check.max_violation);

    if let Some(expected) = &setup.expected_limit {
        let dist = parabolic_lr_norm(&limit.sub(expected)?, 1.0, None)?;
        let scale = parabolic_lr_norm(expected, 1.0, None)?;
        let rel = if scale > 0.0 { dist / scale } else { dist };
        report.param("limit_l1_error", rel);
        report.flag("limit_close", rel <= 0.02);
    }
    report.flag("bounded", bounded);
    report.flag("members_supersolutions", members_ok);
    report.flag("caccioppoli_stable", stable);
    report.flag("budgets", budgets_ok);
    report.flag("slicewise_dual_bound", dual_ok);
    report.flag("limit_supersolution", limit_check.passed());
    Ok(CompactnessOutcome { report, selected, limit, caccioppoli })
}
