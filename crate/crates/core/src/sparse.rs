//! Sparse symmetric `LDL^T` factorization for the Newton systems.
//!
//! The unknowns are the interior nodes of a structured grid; they are ordered
//! by geometric nested dissection so fill stays near `O(N log N)` in 2-D.
//! Factorization follows the classic up-looking elimination-tree algorithm.

use crate::error::{Error, Result};
use crate::grid::{Grid, Index, MAX_DIM};
use crate::real::Real;

/// Nonzero structure of a symmetric matrix over the interior nodes of a grid,
/// stored as the upper triangle (row <= col) in elimination order.
#[derive(Clone, Debug)]
pub struct InteriorSystem {
    /// node index -> unknown position (elimination order), `usize::MAX` on the boundary
    pub(crate) slot_of_node: Vec<usize>,
    /// unknown position -> node index
    pub(crate) node_of_slot: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    diag_pos: Vec<usize>,
    // symbolic factorization
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
}

const NONE: usize = usize::MAX;

fn nested_dissection(lo: Index, hi: Index, dim: usize, out: &mut Vec<Index>) {
    // hi is exclusive here
    let extent: Vec<usize> = (0..dim).map(|k| hi[k].saturating_sub(lo[k])).collect();
    if extent.iter().any(|&e| e == 0) {
        return;
    }
    let total: usize = extent.iter().product();
    let (axis, &len) = extent.iter().enumerate().max_by_key(|(_, &e)| e).unwrap();
    if total <= 16 || len < 3 {
        let mut mi = lo;
        loop {
            out.push(mi);
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                mi[k] += 1;
                if mi[k] < hi[k] {
                    break;
                }
                mi[k] = lo[k];
            }
        }
    }
    let mid = lo[axis] + len / 2;
    let mut left_hi = hi;
    left_hi[axis] = mid;
    let mut right_lo = lo;
    right_lo[axis] = mid + 1;
    nested_dissection(lo, left_hi, dim, out);
    nested_dissection(right_lo, hi, dim, out);
    let mut sep_lo = lo;
    let mut sep_hi = hi;
    sep_lo[axis] = mid;
    sep_hi[axis] = mid + 1;
    nested_dissection(sep_lo, sep_hi, dim, out);
}

impl InteriorSystem {
    /// Structure coupling every pair of nodes that share a Kuhn simplex.
    pub fn new<T: Real>(grid: &Grid<T>) -> Self {
        let dim = grid.dim();
        let mut lo = [0; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        for k in 0..dim {
            lo[k] = 1;
            hi[k] = grid.nodes()[k] - 1;
        }
        let mut order = Vec::new();
        nested_dissection(lo, hi, dim, &mut order);
        let n = order.len();
        let mut slot_of_node = vec![NONE; grid.len()];
        let node_of_slot: Vec<usize> = order.iter().map(|mi| grid.linear(mi)).collect();
        for (slot, &node) in node_of_slot.iter().enumerate() {
            slot_of_node[node] = slot;
        }

        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        grid.for_each_simplex(None, |s| {
            for a in 0..=dim {
                let sa = slot_of_node[s.vertices[a]];
                if sa == NONE {
                    continue;
                }
                for b in 0..=dim {
                    let sb = slot_of_node[s.vertices[b]];
                    if sb == NONE {
                        continue;
                    }
                    if sa <= sb {
                        cols[sb].push(sa);
                    }
                }
            }
        });
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut diag_pos = vec![0; n];
        col_ptr.push(0);
        for (j, mut c) in cols.into_iter().enumerate() {
            c.push(j);
            c.sort_unstable();
            c.dedup();
            for &i in &c {
                if i == j {
                    diag_pos[j] = row_idx.len();
                }
                row_idx.push(i);
            }
            col_ptr.push(row_idx.len());
        }

        let (parent, l_ptr) = symbolic(n, &col_ptr, &row_idx);
        Self { slot_of_node, node_of_slot, col_ptr, row_idx, diag_pos, parent, l_ptr }
    }

    pub fn unknowns(&self) -> usize {
        self.node_of_slot.len()
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Nonzeros of the factor `L`.
    pub fn factor_nnz(&self) -> usize {
        *self.l_ptr.last().unwrap_or(&0)
    }

    #[inline]
    pub(crate) fn slot(&self, node: usize) -> Option<usize> {
        let s = self.slot_of_node[node];
        (s != NONE).then_some(s)
    }

    /// Storage position of entry `(i, j)` (any order) of the upper triangle.
    #[inline]
    fn position(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        if r == c {
            return self.diag_pos[c];
        }
        let rows = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        self.col_ptr[c] + rows.binary_search(&r).expect("entry outside the sparsity pattern")
    }

    pub fn zero_matrix<T: Real>(&self) -> SymMatrix<T> {
        SymMatrix { values: vec![T::zero(); self.row_idx.len()] }
    }
}

fn symbolic(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut parent = vec![NONE; n];
    let mut flag = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for &i0 in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
            let mut i = i0;
            if i >= k {
                continue;
            }
            while flag[i] != k {
                if parent[i] == NONE {
                    parent[i] = k;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }
    let mut l_ptr = vec![0; n + 1];
    for k in 0..n {
        l_ptr[k + 1] = l_ptr[k] + lnz[k];
    }
    (parent, l_ptr)
}

/// Values of a symmetric matrix on an `InteriorSystem` pattern.
#[derive(Clone, Debug)]
pub struct SymMatrix<T> {
    values: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    #[inline]
    pub fn add(&mut self, sys: &InteriorSystem, i: usize, j: usize, v: T) {
        self.values[sys.position(i, j)] += v;
    }

    #[inline]
    pub fn add_diag(&mut self, sys: &InteriorSystem, i: usize, v: T) {
        self.values[sys.diag_pos[i]] += v;
    }

    /// Replaces row and column `i` by the identity row.
    pub fn pin(&mut self, sys: &InteriorSystem, pinned: &[bool]) {
        for j in 0..sys.unknowns() {
            for p in sys.col_ptr[j]..sys.col_ptr[j + 1] {
                let i = sys.row_idx[p];
                if pinned[i] || pinned[j] {
                    self.values[p] = if i == j { T::one() } else { T::zero() };
                }
            }
        }
    }

    /// `y = A x` using the symmetric storage.
    pub fn mul(&self, sys: &InteriorSystem, x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..sys.unknowns() {
            for p in sys.col_ptr[j]..sys.col_ptr[j + 1] {
                let i = sys.row_idx[p];
                let a = self.values[p];
                y[i] += a * x[j];
                if i != j {
                    y[j] += a * x[i];
                }
            }
        }
    }

    pub fn diagonal(&self, sys: &InteriorSystem) -> Vec<T> {
        sys.diag_pos.iter().map(|&p| self.values[p]).collect()
    }

    /// Numeric `LDL^T` factorization.
    pub fn factor(&self, sys: &InteriorSystem) -> Result<Ldl<T>> {
        let n = sys.unknowns();
        let mut li = vec![0usize; sys.factor_nnz()];
        let mut lx = vec![T::zero(); sys.factor_nnz()];
        let mut d = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            y[k] = T::zero();
            let mut top = n;
            flag[k] = k;
            lnz[k] = 0;
            for p in sys.col_ptr[k]..sys.col_ptr[k + 1] {
                let mut i = sys.row_idx[p];
                y[i] += self.values[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = sys.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = T::zero();
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = T::zero();
                let p2 = sys.l_ptr[i] + lnz[i];
                for p in sys.l_ptr[i]..p2 {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[p2] = k;
                lx[p2] = l_ki;
                lnz[i] += 1;
            }
            if !(d[k] != T::zero() && d[k].is_finite()) {
                return Err(Error::SingularMatrix(k));
            }
        }
        Ok(Ldl { l_ptr: sys.l_ptr.clone(), li, lx, d })
    }
}

/// Numeric factor produced by [`SymMatrix::factor`].
#[derive(Clone, Debug)]
pub struct Ldl<T> {
    l_ptr: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
}

impl<T: Real> Ldl<T> {
    /// Solves `A x = b` in place.
    pub fn solve(&self, x: &mut [T]) {
        let n = self.d.len();
        for j in 0..n {
            let xj = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut xj = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                xj -= self.lx[p] * x[self.li[p]];
            }
            x[j] = xj;
        }
    }

    /// Smallest pivot of `D`, a cheap positive-definiteness probe.
    pub fn min_pivot(&self) -> T {
        self.d.iter().fold(T::infinity(), |m, &v| m.min(v))
    }
}
