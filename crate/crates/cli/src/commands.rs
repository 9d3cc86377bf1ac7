//! Single-shot subcommands: tabulate, solvers and norms.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use psuper::exact::{barenblatt, barenblatt_normalize, fundamental_exponent, fundamental_superharmonic};
use psuper::io::{read_raw, write_grid_function, write_space_time};
use psuper::measures::dual_norm;
use psuper::norms::{gradient_lq_norm, lr_norm, w1q_norm};
use psuper::pipeline::{Cell, ExperimentReport};
use psuper::elliptic::solve_dirichlet_with_stats;
use psuper::{
    DiscreteMeasure, Grid, GridFunction, PParams, SchemeKind, SolverOptions,
    SpaceTimeFunction, SpaceTimeGrid, SpaceTimeMeasure,
};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solution {
    Fundamental,
    Barenblatt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Simplex,
    Edge,
}

impl From<Scheme> for SchemeKind {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Simplex => SchemeKind::Simplex,
            Scheme::Edge => SchemeKind::Edge,
        }
    }
}

/// Output location shared by the subcommands.
pub struct Output<'a> {
    pub dir: &'a Path,
    pub stamp: &'a str,
}

impl Output<'_> {
    fn path(&self, explicit: Option<&PathBuf>, name: &str, n: usize, p: f64, ext: &str) -> CliResult<PathBuf> {
        if let Some(path) = explicit {
            return Ok(path.clone());
        }
        std::fs::create_dir_all(self.dir).map_err(|e| CliError::output(format!("{}: {e}", self.dir.display())))?;
        Ok(self.dir.join(format!("{name}-{n}-{p}-{}.{ext}", self.stamp)))
    }
}

fn params(p: f64) -> CliResult<PParams<f64>> {
    PParams::new(p).map_err(CliError::config)
}

#[derive(Clone, Debug, Args)]
pub struct TabulateArgs {
    #[arg(long, value_enum)]
    pub solution: Solution,
    /// Space dimension.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Nodes per axis.
    #[arg(long, default_value_t = 65)]
    pub nodes: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long)]
    pub p: f64,
    /// Time of the Barenblatt profile.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Barenblatt constant; unit mass when omitted.
    #[arg(long)]
    pub c: Option<f64>,
    /// Sample the superharmonic sign choice instead of the plain formula.
    #[arg(long)]
    pub superharmonic: bool,
    /// Output file; defaults to a stamped name in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `|x|^b` (or `log |x|` for `p = n`), with its limit at the pole.
fn fundamental_formula(x: &[f64], n: usize, params: &PParams<f64>) -> f64 {
    match psuper::exact::fundamental_solution(x, n, params) {
        Ok(v) => v,
        Err(_) => {
            let b = fundamental_exponent(n, params);
            if params.p() == n as f64 {
                f64::NEG_INFINITY
            } else if b > 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
    }
}

pub fn tabulate(a: &TabulateArgs, out: &Output) -> CliResult<PathBuf> {
    let params = params(a.p)?;
    if !(1..=3).contains(&a.dim) {
        return Err(CliError::Config(format!("dimension {} outside 1..=3", a.dim)));
    }
    let grid = Grid::cube(a.dim, a.lo, a.hi, a.nodes).map_err(CliError::config)?;
    let n = a.dim;
    let f = match a.solution {
        Solution::Fundamental if a.superharmonic => GridFunction::from_fn(&grid, |x| fundamental_superharmonic(x, n, &params)),
        Solution::Fundamental => GridFunction::from_fn(&grid, |x| fundamental_formula(x, n, &params)),
        Solution::Barenblatt => {
            let c = match a.c {
                Some(c) if c.is_finite() && c > 0.0 => c,
                Some(c) => return Err(CliError::Config(format!("Barenblatt constant c = {c} must be positive"))),
                None => barenblatt_normalize(n, &params, 1e-10).map_err(CliError::config)?,
            };
            GridFunction::from_fn(&grid, |x| barenblatt(x, a.t, n, &params, c))
        }
    };
    let name = match a.solution {
        Solution::Fundamental => "fundamental",
        Solution::Barenblatt => "barenblatt",
    };
    let path = out.path(a.out.as_ref(), name, n, a.p, "raw")?;
    write_grid_function(&path, &f).map_err(CliError::output)?;
    Ok(path)
}

/// A dump read as a measure: measure dumps keep their masses, function
/// dumps are densities.
fn load_measure(path: &Path) -> CliResult<DiscreteMeasure<f64>> {
    let (header, values) = read_raw(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let grid = header.grid().map_err(CliError::config)?;
    let bad = |e: psuper::Error| CliError::Config(format!("{}: {e}", path.display()));
    if header.measure {
        DiscreteMeasure::new(grid, values).map_err(bad)
    } else {
        DiscreteMeasure::from_density(&GridFunction::new(grid, values).map_err(bad)?).map_err(bad)
    }
}

fn load_function(path: &Path) -> CliResult<GridFunction<f64>> {
    psuper::io::read_grid_function(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn boundary_or_zero(path: Option<&PathBuf>, grid: &Grid<f64>) -> CliResult<GridFunction<f64>> {
    match path {
        None => Ok(GridFunction::zeros(grid)),
        Some(p) => {
            let g = load_function(p)?;
            if g.grid() != grid {
                return Err(CliError::Config(format!("{}: grid differs from the data grid", p.display())));
            }
            Ok(g)
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Scheme::Simplex)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> CliResult<SolverOptions<f64>> {
        if !(self.tol.is_finite() && self.tol > 0.0) || self.max_iter == 0 {
            return Err(CliError::Config("tol must be positive and max-iter nonzero".into()));
        }
        Ok(SolverOptions { tol: self.tol, max_iter: self.max_iter, scheme: self.scheme.into(), ..SolverOptions::default() })
    }
}

#[derive(Clone, Debug, Args)]
pub struct EllipticArgs {
    #[arg(long)]
    pub p: f64,
    /// Right-hand side dump (measure, or density when not flagged as one).
    #[arg(long)]
    pub data: PathBuf,
    /// Boundary values dump; zero when omitted.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn solve_elliptic(a: &EllipticArgs, out: &Output) -> CliResult<PathBuf> {
    let params = params(a.p)?;
    let opts = a.solver.options()?;
    let f = load_measure(&a.data)?;
    let grid = f.grid().clone();
    let g = boundary_or_zero(a.boundary.as_ref(), &grid)?;
    let (u, stats) = solve_dirichlet_with_stats(&grid, &params, &f, &g, &opts, None).map_err(CliError::experiment)?;
    log::info!("solve-elliptic: {} iterations, residual {:e}", stats.iterations, stats.residual);
    let path = out.path(a.out.as_ref(), "solve-elliptic", grid.dim(), a.p, "raw")?;
    write_grid_function(&path, &u).map_err(CliError::output)?;
    Ok(path)
}

#[derive(Clone, Debug, Args)]
pub struct ObstacleArgs {
    #[arg(long)]
    pub p: f64,
    /// Obstacle dump.
    #[arg(long)]
    pub obstacle: PathBuf,
    /// Boundary values dump; zero when omitted.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn obstacle(a: &ObstacleArgs, out: &Output) -> CliResult<PathBuf> {
    let params = params(a.p)?;
    let opts = a.solver.options()?;
    let psi = load_function(&a.obstacle)?;
    let grid = psi.grid().clone();
    let g = boundary_or_zero(a.boundary.as_ref(), &grid)?;
    let u = psuper::solve_obstacle(&grid, &params, &psi, &g, &opts).map_err(|e| match e {
        psuper::Error::Infeasible { .. } => CliError::config(e),
        e => CliError::experiment(e),
    })?;
    let path = out.path(a.out.as_ref(), "obstacle", grid.dim(), a.p, "raw")?;
    write_grid_function(&path, &u).map_err(CliError::output)?;
    Ok(path)
}

#[derive(Clone, Debug, Args)]
pub struct ParabolicArgs {
    #[arg(long)]
    pub p: f64,
    /// Initial values; their boundary values are held on the lateral boundary.
    #[arg(long)]
    pub initial: PathBuf,
    /// Right-hand side per unit time, constant in time (measure or density).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: f64,
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

pub fn solve_parabolic(a: &ParabolicArgs, out: &Output) -> CliResult<Vec<PathBuf>> {
    let params = params(a.p)?;
    let opts = a.solver.options()?;
    let u0 = load_function(&a.initial)?;
    let grid = u0.grid().clone();
    let stg = SpaceTimeGrid::new(grid.clone(), a.t0, a.t1, a.steps).map_err(CliError::config)?;
    let f = match &a.data {
        None => SpaceTimeMeasure::zero(&stg),
        Some(path) => {
            let rate = load_measure(path)?;
            if rate.grid() != &grid {
                return Err(CliError::Config(format!("{}: grid differs from the initial grid", path.display())));
            }
            let per_level = rate.scale(stg.tau()).map_err(CliError::config)?;
            let levels = (0..stg.levels()).map(|k| if k == 0 { DiscreteMeasure::zero(&grid) } else { per_level.clone() }).collect();
            SpaceTimeMeasure::new(stg.clone(), levels).map_err(CliError::config)?
        }
    };
    let pb = SpaceTimeFunction::new(stg.clone(), vec![u0; stg.levels()]).map_err(CliError::config)?;
    let u = psuper::parabolic::solve_cauchy_dirichlet(&stg, &params, &f, &pb, &opts).map_err(CliError::experiment)?;
    std::fs::create_dir_all(out.dir).map_err(|e| CliError::output(format!("{}: {e}", out.dir.display())))?;
    let stem = format!("solve-parabolic-{}-{}-{}", grid.dim(), a.p, out.stamp);
    write_space_time(out.dir, &stem, &u).map_err(CliError::output)
}

#[derive(Clone, Debug, Args)]
pub struct NormsArgs {
    /// Function or measure dump.
    #[arg(long)]
    pub input: PathBuf,
    /// Exponents for the function norms.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.0])]
    pub q: Vec<f64>,
    /// Exponent of the dual norm (measure dumps).
    #[arg(long)]
    pub p: Option<f64>,
}

/// Prints `quantity,exponent,value` rows to `w`.
pub fn norms(a: &NormsArgs, w: &mut impl Write) -> CliResult<()> {
    let (header, values) = read_raw(&a.input).map_err(|e| CliError::Config(format!("{}: {e}", a.input.display())))?;
    let grid: Grid<f64> = header.grid().map_err(CliError::config)?;
    let mut report = ExperimentReport::new("norms", &["quantity", "exponent", "value"]);
    if let Some(q) = a.q.iter().find(|q| !(q.is_finite() && **q >= 1.0)) {
        return Err(CliError::Config(format!("norm exponent {q} must be finite and >= 1")));
    }
    if header.measure {
        let p = a.p.ok_or_else(|| CliError::Config("measure dumps need --p for the dual norm".into()))?;
        let params = params(p)?;
        let mu = psuper::NodalFunctional::new(grid, values).map_err(CliError::config)?;
        report.push_row(vec!["total_variation".into(), Cell::Num(f64::NAN), mu.total_variation().into()]);
        report.push_row(vec!["dual".into(), params.p_conj().into(), dual_norm(&mu, &params).map_err(CliError::experiment)?.into()]);
    } else {
        let f = GridFunction::new(grid, values).map_err(CliError::config)?;
        for &q in &a.q {
            let run = CliError::experiment;
            report.push_row(vec!["lr".into(), q.into(), lr_norm(&f, q, None).map_err(run)?.into()]);
            report.push_row(vec!["gradient".into(), q.into(), gradient_lq_norm(&f, q, None).map_err(run)?.into()]);
            report.push_row(vec!["w1q".into(), q.into(), w1q_norm(&f, q, None).map_err(run)?.into()]);
        }
    }
    report.write_csv(w).map_err(CliError::output)
}
