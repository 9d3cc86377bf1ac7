use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{barenblatt, barenblatt_lambda, barenblatt_normalize, exponent_bounds, fundamental_exponent, fundamental_superharmonic, support_radius};
use crate::grid::{Grid, GridFunction, PParams, SpaceTimeGrid};
use crate::norms::grad_lq_sum;

use super::report::ExperimentReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrabilityKind {
    Elliptic,
    Parabolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Classification {
    Convergent,
    Divergent,
    Borderline,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Convergent => "CONVERGENT",
            Classification::Divergent => "DIVERGENT",
            Classification::Borderline => "BORDERLINE",
        }
    }
}

/// Per-`q` outcome of [`integrability_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QOutcome {
    pub q: f64,
    /// Unrooted `int |grad u|^q` per refinement level.
    pub sums: Vec<f64>,
    /// `D_{k+1} / D_k` for the increments `D_k = S_{k+1} - S_k`.
    pub ratios: Vec<f64>,
    /// Closed-form limit of the increment ratio.
    pub predicted_ratio: f64,
    pub class: Classification,
}

/// Exponent `e` with increments `D_k ~ h_k^e`: `(beta - 1) q + n` for the
/// fundamental solution, `(lambda + n - q (n + 1)) / lambda` for Barenblatt
/// with `tau ~ h`.
pub fn increment_exponent(kind: IntegrabilityKind, n: usize, params: &PParams<f64>, q: f64) -> f64 {
    let nn = n as f64;
    match kind {
        IntegrabilityKind::Elliptic => (fundamental_exponent(n, params) - 1.0) * q + nn,
        IntegrabilityKind::Parabolic => {
            let lambda = barenblatt_lambda(n, params);
            (lambda + nn - q * (nn + 1.0)) / lambda
        }
    }
}

pub fn critical_exponent(kind: IntegrabilityKind, n: usize, params: &PParams<f64>) -> f64 {
    let e = exponent_bounds(n, params);
    match kind {
        IntegrabilityKind::Elliptic => e.q_elliptic,
        IntegrabilityKind::Parabolic => e.q_parabolic,
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension {n} outside 1..=3")))
    }
}

/// Cells per axis at level 0.
fn base_cells(kind: IntegrabilityKind, n: usize) -> usize {
    match (kind, n) {
        (_, 1) => 32,
        (_, 2) => 16,
        _ => 8,
    }
}

/// `int_{[-1,1]^n} |grad u|^q` of the interpolated fundamental solution on
/// a grid with `2 c` cells per axis. For `p > n` the pole is a node (the
/// sample is finite there); otherwise the sample is shifted by half a cell
/// so the pole sits at a cell center.
fn elliptic_sum(n: usize, params: &PParams<f64>, cells: usize, qs: &[f64]) -> Result<Vec<f64>> {
    let grid = Grid::cube(n, -1.0, 1.0, 2 * cells + 1)?;
    let shift = if params.p() > n as f64 { 0.0 } else { 0.5 * grid.h_max() };
    let u = GridFunction::from_fn(&grid, |x| {
        let y: Vec<f64> = x[..n].iter().map(|v| v - shift).collect();
        fundamental_superharmonic(&y, n, params)
    });
    let full = grid.full_box();
    qs.iter().map(|&q| grad_lq_sum(&u, q, &full)).collect()
}

/// `int_0^1 int |grad B|^q dx dt` on a box holding the support up to
/// `t = 1`, with `cells` cells per axis and `cells / 4` time steps;
/// trapezoidal in time (the `t = 0` slice is zero).
fn parabolic_sum(n: usize, params: &PParams<f64>, c: f64, cells: usize, qs: &[f64]) -> Result<Vec<f64>> {
    let half = 1.25 * support_radius(1.0, n, params, c);
    let grid = Grid::cube(n, -half, half, cells + 1)?;
    let stg = SpaceTimeGrid::new(grid.clone(), 0.0, 1.0, (cells / 4).max(1))?;
    let full = grid.full_box();
    let mut acc = vec![0.0; qs.len()];
    for k in 1..stg.levels() {
        let t = stg.time(k);
        let w = if k == stg.steps() { 0.5 * stg.tau() } else { stg.tau() };
        let slice = GridFunction::from_fn(&grid, |x| barenblatt(x, t, n, params, c));
        for (a, &q) in acc.iter_mut().zip(qs) {
            *a += w * grad_lq_sum(&slice, q, &full)?;
        }
    }
    Ok(acc)
}

/// Refines `h` (and `tau`) by halving over `levels` grids, tabulates the
/// unrooted gradient integral of the exact singular solution for every
/// `q`, and classifies by the last increment ratio: below one is
/// CONVERGENT, above one DIVERGENT, `q` at the critical value BORDERLINE.
pub fn integrability_experiment(
    kind: IntegrabilityKind,
    n: usize,
    params: &PParams<f64>,
    q_list: &[f64],
    levels: usize,
) -> Result<(ExperimentReport, Vec<QOutcome>)> {
    check_dim(n)?;
    if levels < 3 {
        return Err(Error::InsufficientLevels { got: levels, need: 3 });
    }
    if let Some(q) = q_list.iter().find(|q| !(q.is_finite() && **q >= 1.0)) {
        return Err(Error::InvalidArgument(format!("exponent {q} must be finite and >= 1")));
    }
    let base = base_cells(kind, n);
    let c = match kind {
        IntegrabilityKind::Parabolic => barenblatt_normalize(n, params, 1e-10)?,
        IntegrabilityKind::Elliptic => 0.0,
    };
    let mut per_level = Vec::with_capacity(levels);
    for k in 0..levels {
        let cells = base << k;
        log::info!("integrability {kind:?}: level {k}, {cells} cells per axis");
        per_level.push(match kind {
            IntegrabilityKind::Elliptic => elliptic_sum(n, params, cells / 2, q_list)?,
            IntegrabilityKind::Parabolic => parabolic_sum(n, params, c, cells, q_list)?,
        });
    }
    let critical = critical_exponent(kind, n, params);
    let mut outcomes = Vec::with_capacity(q_list.len());
    for (i, &q) in q_list.iter().enumerate() {
        let sums: Vec<f64> = per_level.iter().map(|s| s[i]).collect();
        let inc: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
        let ratios: Vec<f64> = inc.windows(2).map(|w| w[1] / w[0]).collect();
        let last = *ratios.last().expect("levels >= 3");
        let class = if (q - critical).abs() <= 1e-9 * critical.max(1.0) {
            Classification::Borderline
        } else if last < 1.0 {
            Classification::Convergent
        } else {
            Classification::Divergent
        };
        let predicted_ratio = 2f64.powf(-increment_exponent(kind, n, params, q));
        outcomes.push(QOutcome { q, sums, ratios, predicted_ratio, class });
    }

    let name = match kind {
        IntegrabilityKind::Elliptic => "integrability-elliptic",
        IntegrabilityKind::Parabolic => "integrability-parabolic",
    };
    let mut report = ExperimentReport::new(name, &["q", "class", "last_sum", "last_ratio", "predicted_ratio"]);
    report.param("n", n).param("p", params.p()).param("levels", levels).param("critical_q", critical);
    for o in &outcomes {
        report.push_row(vec![
            o.q.into(),
            o.class.label().into(),
            (*o.sums.last().expect("levels")).into(),
            (*o.ratios.last().expect("levels")).into(),
            o.predicted_ratio.into(),
        ]);
    }
    let sides_ok = outcomes.iter().all(|o| match o.class {
        Classification::Borderline => true,
        Classification::Convergent => o.q < critical,
        Classification::Divergent => o.q > critical,
    });
    let growth_ok = outcomes
        .iter()
        .filter(|o| o.class == Classification::Divergent)
        .all(|o| (o.ratios.last().expect("levels") / o.predicted_ratio - 1.0).abs() <= 0.3);
    report.flag("bracket", sides_ok);
    report.flag("growth_ratio", growth_ok);
    let conv_max = outcomes.iter().filter(|o| o.class == Classification::Convergent).map(|o| o.q).fold(f64::NEG_INFINITY, f64::max);
    let div_min = outcomes.iter().filter(|o| o.class == Classification::Divergent).map(|o| o.q).fold(f64::INFINITY, f64::min);
    report.notes.push(format!("classification boundary in ({conv_max}, {div_min}); critical q = {critical}"));
    if outcomes.iter().any(|o| o.class != Classification::Borderline) {
        report.param("boundary", [conv_max, div_min]);
    }
    Ok((report, outcomes))
}
