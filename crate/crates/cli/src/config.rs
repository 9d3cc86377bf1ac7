//! Run configuration: one TOML file, validated before anything is computed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use psuper::pipeline::IntegrabilityKind;
use psuper::{PParams, SchemeKind, SolverOptions};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: SchemeKind,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::<f64>::default();
        Self { tol: d.tol, max_iter: d.max_iter, scheme: d.scheme }
    }
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions<f64> {
        SolverOptions { tol: self.tol, max_iter: self.max_iter, scheme: self.scheme, ..SolverOptions::default() }
    }
}

/// One `[[experiment]]` table; `kind` selects the variant.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Rate(RateSpec),
    Integrability(IntegrabilitySpec),
    Compactness(CompactnessSpec),
    Mollification(MollificationSpec),
    Superharmonic(SuperharmonicSpec),
    Superparabolic(SuperparabolicSpec),
}

/// Dirac data at the origin of `[-w, w]^n`, mollified Riesz data on the
/// concentric sub-box, rate fit of the gradient error against the dual gap.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub name: Option<String>,
    #[serde(default = "two")]
    pub n: usize,
    pub p: f64,
    #[serde(default = "rate_nodes")]
    pub nodes: usize,
    #[serde(default = "one")]
    pub half_width: f64,
    #[serde(default = "half")]
    pub sub_half_width: f64,
    #[serde(default = "rate_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "one")]
    pub mass: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrabilitySpec {
    pub name: Option<String>,
    pub mode: IntegrabilityKind,
    pub n: usize,
    pub p: f64,
    pub q: Vec<f64>,
    #[serde(default = "five")]
    pub levels: usize,
}

/// Shifted, truncated discrete Barenblatt solutions in one dimension.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactnessSpec {
    pub name: Option<String>,
    pub p: f64,
    #[serde(default = "c_default")]
    pub c: f64,
    #[serde(default = "two_f")]
    pub m_bound: f64,
    #[serde(default = "ten")]
    pub members: usize,
    #[serde(default = "compact_shift")]
    pub shift: f64,
    #[serde(default = "compact_width")]
    pub half_width: f64,
    #[serde(default = "compact_nodes")]
    pub nodes: usize,
    #[serde(default = "compact_t0")]
    pub t0: f64,
    #[serde(default = "compact_t1")]
    pub t1: f64,
    #[serde(default = "compact_steps")]
    pub steps: usize,
    #[serde(default = "compact_sub")]
    pub sub_half_width: f64,
    #[serde(default = "two_f")]
    pub q: f64,
    #[serde(default = "two_f")]
    pub s: f64,
    #[serde(default = "compact_eps")]
    pub eps: f64,
    #[serde(default = "eight")]
    pub max_refinements: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Dirac,
    Random,
}

/// `dual_norm(mu - mollify(mu, eps))` over halvings of `eps`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollificationSpec {
    pub name: Option<String>,
    #[serde(default = "one_n")]
    pub n: usize,
    pub p: f64,
    pub measure: MeasureKind,
    #[serde(default = "moll_nodes")]
    pub nodes: usize,
    #[serde(default = "one")]
    pub half_width: f64,
    #[serde(default = "compact_eps")]
    pub eps0: f64,
    #[serde(default = "four")]
    pub halvings: usize,
    /// Pass threshold for the last gap relative to the first.
    #[serde(default = "moll_target")]
    pub target: f64,
}

/// Two-stage approximation of the superharmonic fundamental solution.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperharmonicSpec {
    pub name: Option<String>,
    #[serde(default = "two")]
    pub n: usize,
    pub p: f64,
    #[serde(default = "sh_nodes")]
    pub nodes: usize,
    #[serde(default = "one")]
    pub half_width: f64,
    #[serde(default = "sh_sub")]
    pub sub_half_width: f64,
    #[serde(default = "five")]
    pub levels: usize,
    #[serde(default = "compact_eps")]
    pub obstacle_eps: f64,
    #[serde(default = "compact_eps")]
    pub data_eps: f64,
    #[serde(default = "eight")]
    pub max_refinements: usize,
    #[serde(default = "sh_q")]
    pub q: f64,
}

/// Truncated Barenblatt profile on a cylinder around the origin.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperparabolicSpec {
    pub name: Option<String>,
    pub p: f64,
    #[serde(default = "c_default")]
    pub c: f64,
    #[serde(default = "two_f")]
    pub m_bound: f64,
    #[serde(default = "sp_width")]
    pub half_width: f64,
    #[serde(default = "sp_nodes")]
    pub nodes: usize,
    #[serde(default = "compact_t0")]
    pub t0: f64,
    #[serde(default = "compact_t1")]
    pub t1: f64,
    #[serde(default = "sp_steps")]
    pub steps: usize,
    #[serde(default = "sp_sub")]
    pub sub_half_width: f64,
    #[serde(default = "sp_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "two_f")]
    pub q: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two_f() -> f64 {
    2.0
}
fn one_n() -> usize {
    1
}
fn two() -> usize {
    2
}
fn four() -> usize {
    4
}
fn five() -> usize {
    5
}
fn eight() -> usize {
    8
}
fn ten() -> usize {
    10
}
fn rate_nodes() -> usize {
    129
}
fn rate_eps() -> Vec<f64> {
    vec![0.32, 0.16, 0.08, 0.04]
}
fn c_default() -> f64 {
    1.5
}
fn compact_shift() -> f64 {
    0.1
}
fn compact_width() -> f64 {
    6.0
}
fn compact_nodes() -> usize {
    241
}
fn compact_t0() -> f64 {
    0.2
}
fn compact_t1() -> f64 {
    1.2
}
fn compact_steps() -> usize {
    50
}
fn compact_sub() -> f64 {
    5.5
}
fn compact_eps() -> f64 {
    0.2
}
fn moll_nodes() -> usize {
    1025
}
fn moll_target() -> f64 {
    0.15
}
fn sh_nodes() -> usize {
    40
}
fn sh_sub() -> f64 {
    0.75
}
fn sh_q() -> f64 {
    1.5
}
fn sp_width() -> f64 {
    4.0
}
fn sp_nodes() -> usize {
    161
}
fn sp_steps() -> usize {
    40
}
fn sp_sub() -> f64 {
    3.5
}
fn sp_eps() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Rate(_) => "rate",
            ExperimentSpec::Integrability(_) => "integrability",
            ExperimentSpec::Compactness(_) => "compactness",
            ExperimentSpec::Mollification(_) => "mollification",
            ExperimentSpec::Superharmonic(_) => "superharmonic",
            ExperimentSpec::Superparabolic(_) => "superparabolic",
        }
    }

    /// Artifact name; defaults to the kind.
    pub fn name(&self) -> String {
        let explicit = match self {
            ExperimentSpec::Rate(s) => &s.name,
            ExperimentSpec::Integrability(s) => &s.name,
            ExperimentSpec::Compactness(s) => &s.name,
            ExperimentSpec::Mollification(s) => &s.name,
            ExperimentSpec::Superharmonic(s) => &s.name,
            ExperimentSpec::Superparabolic(s) => &s.name,
        };
        explicit.clone().unwrap_or_else(|| match self {
            ExperimentSpec::Integrability(s) => format!("integrability-{}", mode_label(s.mode)),
            _ => self.kind().to_string(),
        })
    }

    pub fn n(&self) -> usize {
        match self {
            ExperimentSpec::Rate(s) => s.n,
            ExperimentSpec::Integrability(s) => s.n,
            ExperimentSpec::Mollification(s) => s.n,
            ExperimentSpec::Superharmonic(s) => s.n,
            ExperimentSpec::Compactness(_) | ExperimentSpec::Superparabolic(_) => 1,
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            ExperimentSpec::Rate(s) => s.p,
            ExperimentSpec::Integrability(s) => s.p,
            ExperimentSpec::Compactness(s) => s.p,
            ExperimentSpec::Mollification(s) => s.p,
            ExperimentSpec::Superharmonic(s) => s.p,
            ExperimentSpec::Superparabolic(s) => s.p,
        }
    }

    fn validate(&self) -> Result<(), String> {
        PParams::new(self.p()).map_err(|e| e.to_string())?;
        let n = self.n();
        if !(1..=3).contains(&n) {
            return Err(format!("dimension n = {n} outside 1..=3"));
        }
        match self {
            ExperimentSpec::Rate(s) => {
                nodes(s.nodes)?;
                box_pair(s.half_width, s.sub_half_width)?;
                schedule(&s.eps, 3)?;
                positive("mass", s.mass)?;
            }
            ExperimentSpec::Integrability(s) => {
                if s.q.is_empty() || s.q.iter().any(|q| !(q.is_finite() && *q >= 1.0)) {
                    return Err("q must be a nonempty list of finite exponents >= 1".into());
                }
                if s.levels < 3 {
                    return Err(format!("levels = {} but at least 3 are needed", s.levels));
                }
            }
            ExperimentSpec::Compactness(s) => {
                nodes(s.nodes)?;
                box_pair(s.half_width, s.sub_half_width)?;
                positive("c", s.c)?;
                positive("m_bound", s.m_bound)?;
                positive("shift", s.shift)?;
                positive("eps", s.eps)?;
                time_window(s.t0, s.t1, s.steps)?;
                exponent("q", s.q)?;
                exponent("s", s.s)?;
                if s.members == 0 {
                    return Err("members must be positive".into());
                }
            }
            ExperimentSpec::Mollification(s) => {
                nodes(s.nodes)?;
                positive("half_width", s.half_width)?;
                positive("eps0", s.eps0)?;
                positive("target", s.target)?;
                if s.halvings == 0 {
                    return Err("halvings must be positive".into());
                }
            }
            ExperimentSpec::Superharmonic(s) => {
                nodes(s.nodes)?;
                box_pair(s.half_width, s.sub_half_width)?;
                positive("obstacle_eps", s.obstacle_eps)?;
                positive("data_eps", s.data_eps)?;
                exponent("q", s.q)?;
                if s.levels < 2 {
                    return Err("levels must be at least 2".into());
                }
            }
            ExperimentSpec::Superparabolic(s) => {
                nodes(s.nodes)?;
                box_pair(s.half_width, s.sub_half_width)?;
                positive("c", s.c)?;
                positive("m_bound", s.m_bound)?;
                time_window(s.t0, s.t1, s.steps)?;
                schedule(&s.eps, 2)?;
                exponent("q", s.q)?;
            }
        }
        Ok(())
    }
}

pub fn mode_label(kind: IntegrabilityKind) -> &'static str {
    match kind {
        IntegrabilityKind::Elliptic => "elliptic",
        IntegrabilityKind::Parabolic => "parabolic",
    }
}

fn nodes(m: usize) -> Result<(), String> {
    if m < 5 {
        return Err(format!("nodes = {m} but at least 5 per axis are needed"));
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<(), String> {
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("{key} = {v} must be positive and finite"));
    }
    Ok(())
}

fn exponent(key: &str, v: f64) -> Result<(), String> {
    if !(v.is_finite() && v >= 1.0) {
        return Err(format!("{key} = {v} must be finite and >= 1"));
    }
    Ok(())
}

fn box_pair(outer: f64, inner: f64) -> Result<(), String> {
    positive("half_width", outer)?;
    positive("sub_half_width", inner)?;
    if inner >= outer {
        return Err(format!("sub_half_width = {inner} must be smaller than half_width = {outer}"));
    }
    Ok(())
}

fn schedule(eps: &[f64], min_len: usize) -> Result<(), String> {
    if eps.len() < min_len {
        return Err(format!("eps needs at least {min_len} radii, got {}", eps.len()));
    }
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err("eps must be positive and strictly decreasing".into());
    }
    Ok(())
}

fn time_window(t0: f64, t1: f64, steps: usize) -> Result<(), String> {
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) || steps == 0 {
        return Err(format!("time window [{t0}, {t1}] with {steps} steps is empty"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(CliError::config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(CliError::Config("solver tol must be positive and max_iter nonzero".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            let name = e.name();
            e.validate().map_err(|m| CliError::Config(format!("experiment {} ({name}): {m}", i + 1)))?;
            if !seen.insert((name.clone(), e.n(), e.p().to_bits())) {
                return Err(CliError::Config(format!("experiment {} ({name}): duplicate artifact name", i + 1)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid() {
        let cfg = RunConfig::parse("").unwrap();
        assert!(cfg.experiments.is_empty());
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("sed = 3").is_err());
        assert!(RunConfig::parse("[[experiment]]\nkind = \"rate\"\np = 3.0\nnodez = 9").is_err());
        assert!(RunConfig::parse("[[experiment]]\nkind = \"spline\"\np = 3.0").is_err());
    }

    #[test]
    fn small_p_names_the_constraint() {
        let err = RunConfig::parse("[[experiment]]\nkind = \"rate\"\np = 1.5").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("p > 2"), "{err}");
    }

    #[test]
    fn bundled_example_parses() {
        let cfg = RunConfig::parse(include_str!("../examples/rate-n2-p3.toml")).unwrap();
        assert_eq!(cfg.experiments.len(), 1);
        assert_eq!((cfg.experiments[0].n(), cfg.experiments[0].p()), (2, 3.0));
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse("seed = 9\n[[experiment]]\nkind = \"integrability\"\nmode = \"parabolic\"\nn = 1\np = 3.0\nq = [2.0, 3.0]").unwrap();
        let e = &cfg.experiments[0];
        assert_eq!(e.name(), "integrability-parabolic");
        assert_eq!(e.n(), 1);
        match e {
            ExperimentSpec::Integrability(s) => assert_eq!(s.levels, 5),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn schedules_must_decrease() {
        assert!(RunConfig::parse("[[experiment]]\nkind = \"rate\"\np = 3.0\neps = [0.1, 0.2, 0.05]").is_err());
    }
}
