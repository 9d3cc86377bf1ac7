//! Nodal measures: Riesz-measure extraction, mollification, and the
//! negative Sobolev norm realized through the Bessel multiplier
//! `(1 + |xi|^2)^{-1/2}`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::energy::{Functional, SchemeKind};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, NodeBox, PParams, SpaceTimeFunction, SpaceTimeGrid, MAX_DIM};
use crate::real::Real;

/// Nonnegative masses at the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    grid: Grid<T>,
    mass: Vec<T>,
}

impl<T: Real> DiscreteMeasure<T> {
    pub fn new(grid: Grid<T>, mass: Vec<T>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::InvalidArgument("mass vector length differs from node count".into()));
        }
        for (node, &m) in mass.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::NonFinite { node });
            }
            if m < T::zero() {
                return Err(Error::NegativeMass { node, mass: m.to_f64_lossy() });
            }
        }
        Ok(Self { grid, mass })
    }

    pub fn zero(grid: &Grid<T>) -> Self {
        Self { grid: grid.clone(), mass: vec![T::zero(); grid.len()] }
    }

    /// Point mass placed entirely on the node nearest to `x`.
    pub fn dirac(grid: &Grid<T>, x: &[T], mass: T) -> Result<Self> {
        let mut m = vec![T::zero(); grid.len()];
        m[grid.nearest_node(x)] = mass;
        Self::new(grid.clone(), m)
    }

    /// Masses `density_j * w_j` with the lumped node weights.
    pub fn from_density(density: &GridFunction<T>) -> Result<Self> {
        let grid = density.grid();
        let mass = density.values().iter().enumerate().map(|(j, &d)| d * grid.node_weight(j)).collect();
        Self::new(grid.clone(), mass)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn total_mass(&self) -> T {
        self.mass.iter().copied().sum()
    }

    pub fn scale(&self, a: T) -> Result<Self> {
        Self::new(self.grid.clone(), self.mass.iter().map(|&m| a * m).collect())
    }

    pub fn signed(&self) -> NodalFunctional<T> {
        NodalFunctional { grid: self.grid.clone(), mass: self.mass.clone() }
    }

    /// Restriction to the nodes strictly inside `nb`, as a measure on the subgrid.
    pub fn restrict_open(&self, nb: &NodeBox) -> Result<Self> {
        let sub = self.grid.subgrid(nb)?;
        let mass = nb
            .indices(&self.grid)
            .into_iter()
            .map(|i| if nb.contains_strictly(&self.grid.multi_index(i)) { self.mass[i] } else { T::zero() })
            .collect();
        Self::new(sub, mass)
    }
}

/// Signed nodal functional `phi -> sum_j m_j phi(x_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalFunctional<T> {
    grid: Grid<T>,
    mass: Vec<T>,
}

impl<T: Real> NodalFunctional<T> {
    pub fn new(grid: Grid<T>, mass: Vec<T>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::InvalidArgument("mass vector length differs from node count".into()));
        }
        Ok(Self { grid, mass })
    }

    pub fn zero(grid: &Grid<T>) -> Self {
        Self { grid: grid.clone(), mass: vec![T::zero(); grid.len()] }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn masses(&self) -> &[T] {
        &self.mass
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: self.grid.clone(), mass: self.mass.iter().zip(&other.mass).map(|(&a, &b)| a - b).collect() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: self.grid.clone(), mass: self.mass.iter().zip(&other.mass).map(|(&a, &b)| a + b).collect() })
    }

    pub fn scale(&self, a: T) -> Self {
        Self { grid: self.grid.clone(), mass: self.mass.iter().map(|&m| a * m).collect() }
    }

    /// Total variation `sum_j |m_j|`.
    pub fn total_variation(&self) -> T {
        self.mass.iter().map(|m| m.abs()).sum()
    }

    /// `<nu, phi>`.
    pub fn pair(&self, phi: &GridFunction<T>) -> Result<T> {
        if phi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.mass.iter().zip(phi.values()).map(|(&m, &v)| m * v).sum())
    }
}

/// Output of [`riesz_measure`]: the nonnegative part and the (nonpositive) rest.
#[derive(Clone, Debug)]
pub struct RieszMeasure<T> {
    pub measure: DiscreteMeasure<T>,
    pub remainder: NodalFunctional<T>,
}

impl<T: Real> RieszMeasure<T> {
    /// Positive part plus remainder.
    pub fn signed(&self) -> NodalFunctional<T> {
        self.measure.signed().add(&self.remainder).expect("same grid")
    }
}

/// Tests the discrete equation against every interior hat:
/// `mu_j = sum_simplices |grad u|^{p-2} grad u . grad phi_j vol`.
pub fn riesz_measure<T: Real>(u: &GridFunction<T>, params: &PParams<T>, scheme: SchemeKind) -> RieszMeasure<T> {
    let grid = u.grid();
    let mut r = vec![T::zero(); grid.len()];
    Functional::new(grid, params.p(), scheme).flux_gradient(u.values(), &mut r);
    split_signed(grid, r)
}

fn split_signed<T: Real>(grid: &Grid<T>, mut r: Vec<T>) -> RieszMeasure<T> {
    let mut rest = vec![T::zero(); grid.len()];
    for (j, v) in r.iter_mut().enumerate() {
        if grid.is_boundary(j) {
            *v = T::zero();
        } else if *v < T::zero() {
            rest[j] = *v;
            *v = T::zero();
        }
    }
    RieszMeasure {
        measure: DiscreteMeasure { grid: grid.clone(), mass: r },
        remainder: NodalFunctional { grid: grid.clone(), mass: rest },
    }
}

/// One nonnegative measure per time level; entries are space-time masses
/// (mass rate times `tau`). Level 0 carries the initial slice and is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeMeasure<T> {
    grid: SpaceTimeGrid<T>,
    levels: Vec<DiscreteMeasure<T>>,
}

impl<T: Real> SpaceTimeMeasure<T> {
    pub fn new(grid: SpaceTimeGrid<T>, levels: Vec<DiscreteMeasure<T>>) -> Result<Self> {
        if levels.len() != grid.levels() {
            return Err(Error::InvalidArgument("one measure per time level expected".into()));
        }
        if levels.iter().any(|m| m.grid() != grid.spatial()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, levels })
    }

    pub fn zero(grid: &SpaceTimeGrid<T>) -> Self {
        Self { grid: grid.clone(), levels: vec![DiscreteMeasure::zero(grid.spatial()); grid.levels()] }
    }

    /// Space-time masses from a density `f(x, t)` sampled on levels `1..=steps`.
    pub fn from_density(density: &SpaceTimeFunction<T>) -> Result<Self> {
        let grid = density.grid().clone();
        let tau = grid.tau();
        let mut levels = vec![DiscreteMeasure::zero(grid.spatial())];
        for k in 1..grid.levels() {
            levels.push(DiscreteMeasure::from_density(&density.slice(k).scale(tau))?);
        }
        Ok(Self { grid, levels })
    }

    pub fn grid(&self) -> &SpaceTimeGrid<T> {
        &self.grid
    }

    pub fn level(&self, k: usize) -> &DiscreteMeasure<T> {
        &self.levels[k]
    }

    pub fn levels(&self) -> &[DiscreteMeasure<T>] {
        &self.levels
    }

    /// Spatial mass rate of level `k`, i.e. the source of the `k`-th implicit step.
    pub fn rate(&self, k: usize) -> DiscreteMeasure<T> {
        let inv = self.grid.tau().recip();
        DiscreteMeasure { grid: self.levels[k].grid.clone(), mass: self.levels[k].mass.iter().map(|&m| m * inv).collect() }
    }

    pub fn total_mass(&self) -> T {
        self.levels.iter().map(|m| m.total_mass()).sum()
    }

    pub fn signed(&self) -> SpaceTimeFunctional<T> {
        SpaceTimeFunctional { grid: self.grid.clone(), levels: self.levels.iter().map(|m| m.signed()).collect() }
    }
}

/// Signed counterpart of [`SpaceTimeMeasure`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeFunctional<T> {
    grid: SpaceTimeGrid<T>,
    levels: Vec<NodalFunctional<T>>,
}

impl<T: Real> SpaceTimeFunctional<T> {
    pub fn new(grid: SpaceTimeGrid<T>, levels: Vec<NodalFunctional<T>>) -> Result<Self> {
        if levels.len() != grid.levels() || levels.iter().any(|m| m.grid() != grid.spatial()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, levels })
    }

    pub fn grid(&self) -> &SpaceTimeGrid<T> {
        &self.grid
    }

    pub fn level(&self, k: usize) -> &NodalFunctional<T> {
        &self.levels[k]
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let levels = self.levels.iter().zip(&other.levels).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid.clone(), levels })
    }

    pub fn total_variation(&self) -> T {
        self.levels.iter().map(|l| l.total_variation()).sum()
    }
}

/// Parabolic Riesz measure: nonnegative part per level and the negative rest.
#[derive(Clone, Debug)]
pub struct ParabolicRiesz<T> {
    pub measure: SpaceTimeMeasure<T>,
    pub remainder: Vec<NodalFunctional<T>>,
}

impl<T: Real> ParabolicRiesz<T> {
    pub fn signed(&self) -> SpaceTimeFunctional<T> {
        let levels = self
            .measure
            .levels
            .iter()
            .zip(&self.remainder)
            .map(|(m, r)| m.signed().add(r).expect("same grid"))
            .collect();
        SpaceTimeFunctional { grid: self.measure.grid.clone(), levels }
    }
}

/// Per level `k >= 1`: `(U_k - U_{k-1}) w_j + tau dE_p/du_j(U_k)` at interior nodes.
pub fn riesz_measure_parabolic<T: Real>(
    u: &SpaceTimeFunction<T>,
    params: &PParams<T>,
    scheme: SchemeKind,
) -> ParabolicRiesz<T> {
    let stg = u.grid();
    let grid = stg.spatial();
    let tau = stg.tau();
    let func = Functional::new(grid, params.p(), scheme);
    let mut levels = vec![DiscreteMeasure::zero(grid)];
    let mut rest = vec![NodalFunctional::zero(grid)];
    let mut r = vec![T::zero(); grid.len()];
    for k in 1..stg.levels() {
        func.flux_gradient(u.slice(k).values(), &mut r);
        let cur = u.slice(k).values();
        let prev = u.slice(k - 1).values();
        let vals: Vec<T> = (0..grid.len()).map(|j| (cur[j] - prev[j]) * grid.node_weight(j) + tau * r[j]).collect();
        let split = split_signed(grid, vals);
        levels.push(split.measure);
        rest.push(split.remainder);
    }
    ParabolicRiesz { measure: SpaceTimeMeasure { grid: stg.clone(), levels }, remainder: rest }
}

/// Standard bump `exp(-1/(1-|y|^2))` on the unit ball (unnormalized).
#[inline]
fn bump<T: Real>(r2: T) -> T {
    if r2 >= T::one() {
        T::zero()
    } else {
        (-(T::one() - r2).recip()).exp()
    }
}

struct Stencil<T> {
    offsets: Vec<([isize; MAX_DIM], T)>,
}

impl<T: Real> Stencil<T> {
    /// Discrete kernel on the offsets within `eps`, normalized to unit sum
    /// against the cell volume.
    fn new(grid: &Grid<T>, eps: T) -> Self {
        let dim = grid.dim();
        let h = grid.spacing();
        let mut radius = [0isize; MAX_DIM];
        for k in 0..dim {
            radius[k] = (eps / h[k]).floor().to_isize().unwrap_or(0);
        }
        let mut offsets = Vec::new();
        let mut o = [0isize; MAX_DIM];
        for k in 0..dim {
            o[k] = -radius[k];
        }
        loop {
            let mut r2 = T::zero();
            for k in 0..dim {
                let y = T::lit(o[k] as f64) * h[k] / eps;
                r2 += y * y;
            }
            let w = bump(r2);
            if w > T::zero() {
                offsets.push((o, w));
            }
            let mut k = dim;
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                o[k] += 1;
                if o[k] <= radius[k] {
                    break false;
                }
                o[k] = -radius[k];
            };
            if done {
                break;
            }
        }
        let z: T = offsets.iter().map(|(_, w)| *w).sum::<T>() * grid.cell_volume();
        for (_, w) in offsets.iter_mut() {
            *w /= z;
        }
        Self { offsets }
    }

    /// Visits the in-grid targets of `source` with their kernel weights.
    fn scatter(&self, grid: &Grid<T>, source: usize, mut f: impl FnMut(usize, T)) {
        let dim = grid.dim();
        let mi = grid.multi_index(source);
        'outer: for (o, w) in &self.offsets {
            let mut target = [0usize; MAX_DIM];
            for k in 0..dim {
                let t = mi[k] as isize + o[k];
                if t < 0 || t >= grid.nodes()[k] as isize {
                    continue 'outer;
                }
                target[k] = t as usize;
            }
            f(grid.linear(&target), *w);
        }
    }
}

/// Mollified density together with the mass that fell outside the grid.
#[derive(Clone, Debug)]
pub struct Mollified<T> {
    pub density: GridFunction<T>,
    pub leaked_mass: T,
}

/// `eta_eps * mu` sampled at the nodes. Mass is conserved exactly (up to
/// rounding) while the `eps`-neighborhood of the support stays inside the grid.
pub fn mollify_with_leak<T: Real>(mu: &DiscreteMeasure<T>, eps: T) -> Result<Mollified<T>> {
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(Error::InvalidArgument("mollification radius must be positive".into()));
    }
    let grid = mu.grid();
    let stencil = Stencil::new(grid, eps);
    let mut out = vec![T::zero(); grid.len()];
    for (k, &m) in mu.masses().iter().enumerate() {
        if m != T::zero() {
            stencil.scatter(grid, k, |j, w| out[j] += m * w);
        }
    }
    let kept: T = out.iter().copied().sum::<T>() * grid.cell_volume();
    let leaked_mass = mu.total_mass() - kept;
    Ok(Mollified { density: GridFunction::new(grid.clone(), out)?, leaked_mass })
}

/// As [`mollify_with_leak`], logging a warning when mass leaves the grid.
pub fn mollify<T: Real>(mu: &DiscreteMeasure<T>, eps: T) -> Result<GridFunction<T>> {
    let m = mollify_with_leak(mu, eps)?;
    let total = mu.total_mass();
    if m.leaked_mass.abs() > T::lit(1e-12) * total.max(T::one()) {
        log::warn!("mollification radius {eps} leaks mass {} outside the grid", m.leaked_mass);
    }
    Ok(m.density)
}

/// Mollifies a measure and returns the result as nodal masses again.
pub fn mollify_measure<T: Real>(mu: &DiscreteMeasure<T>, eps: T) -> Result<DiscreteMeasure<T>> {
    DiscreteMeasure::from_density(&mollify(mu, eps)?)
}

/// Slicewise mollification of a space-time measure.
pub fn mollify_slices<T: Real>(mu: &SpaceTimeMeasure<T>, eps: T) -> Result<SpaceTimeMeasure<T>> {
    let levels = mu.levels.iter().map(|m| mollify_measure(m, eps)).collect::<Result<_>>()?;
    Ok(SpaceTimeMeasure { grid: mu.grid.clone(), levels })
}

/// Local average of a function against the bump, renormalized by the
/// kernel mass that lies inside the grid (constants are reproduced).
pub fn mollify_function<T: Real>(f: &GridFunction<T>, eps: T) -> Result<GridFunction<T>> {
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(Error::InvalidArgument("mollification radius must be positive".into()));
    }
    let grid = f.grid();
    let stencil = Stencil::new(grid, eps);
    let mut num = vec![T::zero(); grid.len()];
    let mut den = vec![T::zero(); grid.len()];
    for (k, &v) in f.values().iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { node: k });
        }
        stencil.scatter(grid, k, |j, w| {
            num[j] += v * w;
            den[j] += w;
        });
    }
    let vals = num.into_iter().zip(den).map(|(a, b)| a / b).collect();
    GridFunction::new(grid.clone(), vals)
}

fn fft_axis<T: Real>(data: &mut [Complex<T>], dims: &[usize], axis: usize, planner: &mut FftPlanner<T>, inverse: bool) {
    let len = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product();
    let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
    let block = len * stride;
    let mut line = vec![Complex::new(T::zero(), T::zero()); len];
    for start in (0..data.len()).step_by(block) {
        for off in 0..stride {
            for i in 0..len {
                line[i] = data[start + off + i * stride];
            }
            fft.process(&mut line);
            for i in 0..len {
                data[start + off + i * stride] = line[i];
            }
        }
    }
}

/// Bessel potential `g = T_1 nu` of the zero-padded nodal functional, on the
/// padded periodic box. Returns the values and the padded dimensions.
pub fn bessel_potential<T: Real>(nu: &NodalFunctional<T>) -> (Vec<T>, Vec<usize>) {
    let grid = nu.grid();
    let dim = grid.dim();
    let dims: Vec<usize> = grid.nodes().iter().map(|&m| (2 * m).next_power_of_two()).collect();
    let total: usize = dims.iter().product();
    let mut data = vec![Complex::new(T::zero(), T::zero()); total];
    let inv_vol = grid.cell_volume().recip();
    for (j, &m) in nu.masses().iter().enumerate() {
        let mi = grid.multi_index(j);
        let mut pos = 0;
        for k in 0..dim {
            pos = pos * dims[k] + mi[k];
        }
        data[pos] = Complex::new(m * inv_vol, T::zero());
    }
    let mut planner = FftPlanner::new();
    for axis in 0..dim {
        fft_axis(&mut data, &dims, axis, &mut planner, false);
    }
    let two_pi = T::TAU();
    let h = grid.spacing();
    let mut freq = [T::zero(); MAX_DIM];
    for (pos, c) in data.iter_mut().enumerate() {
        let mut rem = pos;
        let mut xi2 = T::zero();
        for k in (0..dim).rev() {
            let i = rem % dims[k];
            rem /= dims[k];
            let wave = if i <= dims[k] / 2 { i as f64 } else { i as f64 - dims[k] as f64 };
            freq[k] = two_pi * T::lit(wave) / (T::of_usize(dims[k]) * h[k]);
            xi2 += freq[k] * freq[k];
        }
        *c = *c * (T::one() + xi2).sqrt().recip();
    }
    for axis in 0..dim {
        fft_axis(&mut data, &dims, axis, &mut planner, true);
    }
    let norm = T::of_usize(total).recip();
    (data.into_iter().map(|c| c.re * norm).collect(), dims)
}

/// `||T_1 nu||_{L^s}` over the padded box.
pub fn dual_norm_exponent<T: Real>(nu: &NodalFunctional<T>, s: T) -> Result<T> {
    if nu.grid().is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if !(s >= T::one() && s.is_finite()) {
        return Err(Error::InvalidArgument("dual exponent must be finite and >= 1".into()));
    }
    let (g, _) = bessel_potential(nu);
    let vol = nu.grid().cell_volume();
    let acc: T = g.iter().map(|v| v.abs().powf(s)).sum::<T>() * vol;
    Ok(acc.powf(s.recip()))
}

/// Bessel-potential realization of the `W^{-1,p'}` norm.
pub fn dual_norm<T: Real>(nu: &NodalFunctional<T>, params: &PParams<T>) -> Result<T> {
    dual_norm_exponent(nu, params.p_conj())
}

/// `(sum_{k>=1} tau ||nu_k / tau||_{-1,p'}^{p'})^{1/p'}`: slicewise spatial
/// multiplier followed by the `L^{p'}` norm in time.
pub fn parabolic_dual_norm<T: Real>(nu: &SpaceTimeFunctional<T>, params: &PParams<T>) -> Result<T> {
    let s = params.p_conj();
    let tau = nu.grid().tau();
    let inv = tau.recip();
    let mut acc = T::zero();
    for k in 1..nu.grid().levels() {
        let slice = nu.level(k).scale(inv);
        acc += tau * dual_norm_exponent(&slice, s)?.powf(s);
    }
    Ok(acc.powf(s.recip()))
}
