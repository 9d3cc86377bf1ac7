//! Uniform Cartesian grids, their Kuhn triangulation, nodal fields and the
//! space-time counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

pub const MAX_DIM: usize = 3;

/// Multi-index of a node; entries beyond the grid dimension are zero.
pub type Index = [usize; MAX_DIM];

const PERMS_1: [[usize; MAX_DIM]; 1] = [[0, 0, 0]];
const PERMS_2: [[usize; MAX_DIM]; 2] = [[0, 1, 0], [1, 0, 0]];
const PERMS_3: [[usize; MAX_DIM]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Axis orderings generating the Kuhn simplices of a cell.
pub(crate) fn axis_permutations(dim: usize) -> &'static [[usize; MAX_DIM]] {
    match dim {
        1 => &PERMS_1,
        2 => &PERMS_2,
        _ => &PERMS_3,
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// One simplex of the Kuhn split: `vertices[k+1] = vertices[k] + e_{axes[k]}`.
#[derive(Clone, Copy, Debug)]
pub struct Simplex {
    pub vertices: [usize; MAX_DIM + 1],
    pub axes: [usize; MAX_DIM],
}

/// Uniform tensor grid on an axis-aligned box; nodes are stored row-major
/// (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    lower: [T; MAX_DIM],
    upper: [T; MAX_DIM],
    nodes: [usize; MAX_DIM],
    spacing: [T; MAX_DIM],
    strides: [usize; MAX_DIM],
    len: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(lower: &[T], upper: &[T], nodes: &[usize]) -> Result<Self> {
        let dim = nodes.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::InvalidGrid("extent and node counts disagree in length".into()));
        }
        let mut g = Grid {
            dim,
            lower: [T::zero(); MAX_DIM],
            upper: [T::zero(); MAX_DIM],
            nodes: [1; MAX_DIM],
            spacing: [T::one(); MAX_DIM],
            strides: [0; MAX_DIM],
            len: 1,
        };
        for k in 0..dim {
            if nodes[k] < 2 {
                return Err(Error::InvalidGrid(format!("axis {k} has {} nodes, need >= 2", nodes[k])));
            }
            if !(lower[k].is_finite() && upper[k].is_finite() && upper[k] > lower[k]) {
                return Err(Error::InvalidGrid(format!("axis {k} has an empty or non-finite extent")));
            }
            g.lower[k] = lower[k];
            g.upper[k] = upper[k];
            g.nodes[k] = nodes[k];
            g.spacing[k] = (upper[k] - lower[k]) / T::of_usize(nodes[k] - 1);
            g.len *= nodes[k];
        }
        let mut stride = 1;
        for k in (0..dim).rev() {
            g.strides[k] = stride;
            stride *= g.nodes[k];
        }
        Ok(g)
    }

    /// Same extent `[lo, hi]` and node count on every axis.
    pub fn cube(dim: usize, lo: T, hi: T, nodes: usize) -> Result<Self> {
        Self::new(&vec![lo; dim], &vec![hi; dim], &vec![nodes; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim]
    }

    pub fn lower(&self) -> &[T] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[T] {
        &self.upper[..self.dim]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides[..self.dim]
    }

    /// Largest spacing over all axes.
    pub fn h_max(&self) -> T {
        self.spacing().iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Volume of one cell, `prod h_k`; also the lumped mass of an interior node.
    pub fn cell_volume(&self) -> T {
        self.spacing().iter().fold(T::one(), |a, &b| a * b)
    }

    pub fn simplex_volume(&self) -> T {
        self.cell_volume() / T::of_usize(factorial(self.dim))
    }

    /// Coordinate of node `i` on `axis`, interpolated from the extent so that
    /// it never depends on accumulated sums.
    #[inline]
    pub fn coordinate(&self, axis: usize, i: usize) -> T {
        let m = self.nodes[axis] - 1;
        if i == 0 {
            return self.lower[axis];
        }
        if i == m {
            return self.upper[axis];
        }
        let s = T::of_usize(i) / T::of_usize(m);
        self.lower[axis] * (T::one() - s) + self.upper[axis] * s
    }

    #[inline]
    pub fn multi_index(&self, mut idx: usize) -> Index {
        let mut out = [0; MAX_DIM];
        for k in 0..self.dim {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }

    #[inline]
    pub fn linear(&self, index: &Index) -> usize {
        (0..self.dim).map(|k| index[k] * self.strides[k]).sum()
    }

    /// Coordinates of node `idx`; entries beyond `dim` are zero.
    #[inline]
    pub fn point(&self, idx: usize) -> [T; MAX_DIM] {
        let mi = self.multi_index(idx);
        let mut x = [T::zero(); MAX_DIM];
        for k in 0..self.dim {
            x[k] = self.coordinate(k, mi[k]);
        }
        x
    }

    #[inline]
    pub fn is_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dim).any(|k| mi[k] == 0 || mi[k] + 1 == self.nodes[k])
    }

    /// Trapezoidal (lumped) quadrature weight of a node.
    pub fn node_weight(&self, idx: usize) -> T {
        self.full_box().weight(self, &self.multi_index(idx))
    }

    /// Nodal index of the node nearest to `x` (clamped to the grid).
    pub fn nearest_node(&self, x: &[T]) -> usize {
        let mut mi = [0; MAX_DIM];
        for k in 0..self.dim {
            let s = ((x[k] - self.lower[k]) / self.spacing[k]).round();
            let s = s.max(T::zero()).min(T::of_usize(self.nodes[k] - 1));
            mi[k] = s.to_usize().unwrap_or(0);
        }
        self.linear(&mi)
    }

    pub fn full_box(&self) -> NodeBox {
        let mut hi = [0; MAX_DIM];
        for k in 0..self.dim {
            hi[k] = self.nodes[k] - 1;
        }
        NodeBox { dim: self.dim, lo: [0; MAX_DIM], hi }
    }

    /// Snaps an axis-aligned box outward to the enclosing node box.
    pub fn snap(&self, domain: &BoxDomain<T>) -> Result<NodeBox> {
        if domain.lower.len() != self.dim || domain.upper.len() != self.dim {
            return Err(Error::InvalidArgument("subdomain dimension differs from grid".into()));
        }
        let slack = T::lit(1e-9);
        let mut nb = NodeBox { dim: self.dim, lo: [0; MAX_DIM], hi: [0; MAX_DIM] };
        for k in 0..self.dim {
            let (a, b) = (domain.lower[k], domain.upper[k]);
            if !(a < b) || a < self.lower[k] - slack * self.spacing[k] || b > self.upper[k] + slack * self.spacing[k] {
                return Err(Error::InvalidArgument(format!("subdomain axis {k} not inside the grid extent")));
            }
            let lo = ((a - self.lower[k]) / self.spacing[k] + slack).floor().max(T::zero());
            let hi = ((b - self.lower[k]) / self.spacing[k] - slack).ceil();
            nb.lo[k] = lo.to_usize().unwrap_or(0);
            nb.hi[k] = hi.to_usize().unwrap_or(0).min(self.nodes[k] - 1);
            if nb.hi[k] <= nb.lo[k] {
                return Err(Error::InvalidArgument(format!("subdomain axis {k} spans fewer than 2 nodes")));
            }
        }
        Ok(nb)
    }

    /// The grid formed by the nodes of `nb`.
    pub fn subgrid(&self, nb: &NodeBox) -> Result<Grid<T>> {
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        let mut m = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            if nb.hi[k] >= self.nodes[k] || nb.hi[k] <= nb.lo[k] {
                return Err(Error::InvalidArgument("node box outside grid".into()));
            }
            lo.push(self.coordinate(k, nb.lo[k]));
            hi.push(self.coordinate(k, nb.hi[k]));
            m.push(nb.hi[k] - nb.lo[k] + 1);
        }
        Grid::new(&lo, &hi, &m)
    }

    /// Visits every Kuhn simplex of every cell inside `nb` (whole grid when `None`).
    pub fn for_each_simplex(&self, nb: Option<&NodeBox>, mut f: impl FnMut(&Simplex)) {
        let nb = nb.copied().unwrap_or_else(|| self.full_box());
        let perms = axis_permutations(self.dim);
        let mut cell = nb.lo;
        let mut s = Simplex { vertices: [0; MAX_DIM + 1], axes: [0; MAX_DIM] };
        loop {
            let base = self.linear(&cell);
            for perm in perms {
                s.vertices[0] = base;
                for k in 0..self.dim {
                    s.axes[k] = perm[k];
                    s.vertices[k + 1] = s.vertices[k] + self.strides[perm[k]];
                }
                f(&s);
            }
            // advance cell multi-index over [lo, hi-1]
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                cell[k] += 1;
                if cell[k] < nb.hi[k] {
                    break;
                }
                cell[k] = nb.lo[k];
            }
        }
    }

    /// Number of simplices inside `nb`.
    pub fn simplex_count(&self, nb: Option<&NodeBox>) -> usize {
        let nb = nb.copied().unwrap_or_else(|| self.full_box());
        (0..self.dim).map(|k| nb.hi[k] - nb.lo[k]).product::<usize>() * factorial(self.dim)
    }

    /// Visits every axis-aligned grid edge as `(tail, head, axis, weight)`.
    /// The weight is the dual volume attached to the edge: each cell hands
    /// `1/2^(n-1)` of its volume to each of its edges along a given axis.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, usize, usize, T)) {
        let cv = self.cell_volume();
        let half = T::lit(0.5);
        for idx in 0..self.len {
            let mi = self.multi_index(idx);
            for axis in 0..self.dim {
                if mi[axis] + 1 >= self.nodes[axis] {
                    continue;
                }
                let mut w = cv;
                for a in 0..self.dim {
                    if a != axis && (mi[a] == 0 || mi[a] + 1 == self.nodes[a]) {
                        w *= half;
                    }
                }
                f(idx, idx + self.strides[axis], axis, w);
            }
        }
    }
}

/// Axis-aligned box in physical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Self {
        Self { lower, upper }
    }

    /// The box `center +- half_width` on every axis.
    pub fn centered(dim: usize, center: T, half_width: T) -> Self {
        Self { lower: vec![center - half_width; dim], upper: vec![center + half_width; dim] }
    }
}

/// Inclusive range of node multi-indices, `lo[k]..=hi[k]` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeBox {
    pub dim: usize,
    pub lo: Index,
    pub hi: Index,
}

impl NodeBox {
    #[inline]
    pub fn contains(&self, mi: &Index) -> bool {
        (0..self.dim).all(|k| mi[k] >= self.lo[k] && mi[k] <= self.hi[k])
    }

    /// True on the faces of the box.
    #[inline]
    pub fn on_boundary(&self, mi: &Index) -> bool {
        (0..self.dim).any(|k| mi[k] == self.lo[k] || mi[k] == self.hi[k])
    }

    #[inline]
    pub fn contains_strictly(&self, mi: &Index) -> bool {
        self.contains(mi) && !self.on_boundary(mi)
    }

    pub fn node_count(&self) -> usize {
        (0..self.dim).map(|k| self.hi[k] - self.lo[k] + 1).product()
    }

    /// Trapezoidal weight of `mi` for quadrature over this box.
    #[inline]
    pub fn weight<T: Real>(&self, grid: &Grid<T>, mi: &Index) -> T {
        let half = T::lit(0.5);
        let mut w = T::one();
        for k in 0..self.dim {
            w *= grid.spacing[k];
            if mi[k] == self.lo[k] || mi[k] == self.hi[k] {
                w *= half;
            }
        }
        w
    }

    /// Linear indices (in `grid`) of the nodes of the box, row-major.
    pub fn indices<T: Real>(&self, grid: &Grid<T>) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut mi = self.lo;
        loop {
            out.push(grid.linear(&mi));
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                mi[k] += 1;
                if mi[k] <= self.hi[k] {
                    break;
                }
                mi[k] = self.lo[k];
            }
        }
    }

    /// This box shrunk by `k` nodes on every side.
    pub fn shrink(&self, k: usize) -> Option<NodeBox> {
        let mut out = *self;
        for a in 0..self.dim {
            if self.hi[a] < self.lo[a] + 2 * k + 1 {
                return None;
            }
            out.lo[a] += k;
            out.hi[a] -= k;
        }
        Some(out)
    }
}

/// Exponent bundle; construction enforces the degenerate range `p > 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PParams<T> {
    p: T,
    p_conj: T,
}

impl<T: Real> PParams<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p.is_finite() && p > T::lit(2.0)) {
            return Err(Error::InvalidExponent(p.to_f64_lossy()));
        }
        Ok(Self { p, p_conj: p / (p - T::one()) })
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> T {
        self.p_conj
    }
}

/// Scalar field sampled at the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at every node; `f` receives the first `dim` coordinates.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(&[T]) -> T) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..dim])
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise minimum.
    pub fn min(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.min(b))
    }

    pub fn max(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.max(b))
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    pub fn add_scalar(&self, b: T) -> Self {
        self.map(|v| v + b)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|self - other|` over all nodes.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    /// Values on the nodes of `nb`, as a field on the corresponding subgrid.
    pub fn restrict(&self, nb: &NodeBox) -> Result<Self> {
        let sub = self.grid.subgrid(nb)?;
        let values = nb.indices(&self.grid).into_iter().map(|i| self.values[i]).collect();
        Ok(Self { grid: sub, values })
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Space-time grid: a spatial grid and uniform time levels `t0 + k tau`, `k = 0..=steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeGrid<T> {
    spatial: Grid<T>,
    t0: T,
    t1: T,
    steps: usize,
}

impl<T: Real> SpaceTimeGrid<T> {
    pub fn new(spatial: Grid<T>, t0: T, t1: T, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one time step".into()));
        }
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::InvalidGrid("time interval must satisfy t0 < t1".into()));
        }
        Ok(Self { spatial, t0, t1, steps })
    }

    pub fn spatial(&self) -> &Grid<T> {
        &self.spatial
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn t1(&self) -> T {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    pub fn tau(&self) -> T {
        (self.t1 - self.t0) / T::of_usize(self.steps)
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + T::of_usize(k) * self.tau()
    }

    pub fn full_box(&self) -> SpaceTimeBox {
        SpaceTimeBox { space: self.spatial.full_box(), first: 0, last: self.steps }
    }

    /// Snaps `domain x [ta, tb]` outward to nodes and levels.
    pub fn snap(&self, domain: &BoxDomain<T>, ta: T, tb: T) -> Result<SpaceTimeBox> {
        let space = self.spatial.snap(domain)?;
        let tau = self.tau();
        let slack = T::lit(1e-9);
        if !(ta < tb) || ta < self.t0 - slack * tau || tb > self.time(self.steps) + slack * tau {
            return Err(Error::InvalidArgument("time window outside the grid".into()));
        }
        let first = ((ta - self.t0) / tau + slack).floor().max(T::zero()).to_usize().unwrap_or(0);
        let last = ((tb - self.t0) / tau - slack).ceil().to_usize().unwrap_or(0).min(self.steps);
        if last <= first {
            return Err(Error::InvalidArgument("time window spans fewer than 2 levels".into()));
        }
        Ok(SpaceTimeBox { space, first, last })
    }

    /// Sub-cylinder grid of `b`.
    pub fn subgrid(&self, b: &SpaceTimeBox) -> Result<SpaceTimeGrid<T>> {
        let spatial = self.spatial.subgrid(&b.space)?;
        SpaceTimeGrid::new(spatial, self.time(b.first), self.time(b.last), b.last - b.first)
    }
}

/// Node box in space plus an inclusive range of time levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceTimeBox {
    pub space: NodeBox,
    pub first: usize,
    pub last: usize,
}

/// One `GridFunction` per time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeFunction<T> {
    grid: SpaceTimeGrid<T>,
    slices: Vec<GridFunction<T>>,
}

impl<T: Real> SpaceTimeFunction<T> {
    pub fn new(grid: SpaceTimeGrid<T>, slices: Vec<GridFunction<T>>) -> Result<Self> {
        if slices.len() != grid.levels() {
            return Err(Error::InvalidArgument(format!(
                "{} slices for {} time levels",
                slices.len(),
                grid.levels()
            )));
        }
        if slices.iter().any(|s| s.grid() != grid.spatial()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, slices })
    }

    pub fn zeros(grid: &SpaceTimeGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &SpaceTimeGrid<T>, c: T) -> Self {
        let slice = GridFunction::constant(grid.spatial(), c);
        Self { grid: grid.clone(), slices: vec![slice; grid.levels()] }
    }

    /// Samples `f(x, t)` on every level.
    pub fn from_fn(grid: &SpaceTimeGrid<T>, mut f: impl FnMut(&[T], T) -> T) -> Self {
        let slices = (0..grid.levels())
            .map(|k| {
                let t = grid.time(k);
                GridFunction::from_fn(grid.spatial(), |x| f(x, t))
            })
            .collect();
        Self { grid: grid.clone(), slices }
    }

    pub fn grid(&self) -> &SpaceTimeGrid<T> {
        &self.grid
    }

    pub fn slices(&self) -> &[GridFunction<T>] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &GridFunction<T> {
        &self.slices[k]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut GridFunction<T> {
        &mut self.slices[k]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&GridFunction<T>, &GridFunction<T>) -> Result<GridFunction<T>>) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid.clone(), slices })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn min(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.min(b))
    }

    pub fn map(&self, f: impl Fn(T) -> T + Copy) -> Self {
        Self { grid: self.grid.clone(), slices: self.slices.iter().map(|s| s.map(f)).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.slices.iter().fold(T::zero(), |m, s| m.max(s.max_abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut m = T::zero();
        for (a, b) in self.slices.iter().zip(&other.slices) {
            m = m.max(a.max_abs_diff(b)?);
        }
        Ok(m)
    }

    /// Restriction to a sub-cylinder.
    pub fn restrict(&self, b: &SpaceTimeBox) -> Result<Self> {
        let grid = self.grid.subgrid(b)?;
        let slices = (b.first..=b.last).map(|k| self.slices[k].restrict(&b.space)).collect::<Result<_>>()?;
        Ok(Self { grid, slices })
    }
}
