//! Compressed sparse row operators assembled from triplets.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::spaces::SpaceKind;

/// Collects `(row, col, value)` contributions. Duplicates are summed in
/// insertion order when the operator is built, so assembly is reproducible
/// bit for bit.
#[derive(Clone, Debug)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Adds every entry of `op` scaled by `scale`, shifted by the offsets.
    pub fn push_block(&mut self, row0: usize, col0: usize, op: &SparseOperator, scale: f64) {
        for (r, c, v) in op.iter() {
            self.push(row0 + r, col0 + c, scale * v);
        }
    }

    /// Adds the transpose of `op` scaled by `scale`.
    pub fn push_block_transposed(&mut self, row0: usize, col0: usize, op: &SparseOperator, scale: f64) {
        for (r, c, v) in op.iter() {
            self.push(row0 + c, col0 + r, scale * v);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> SparseOperator {
        // stable: equal keys keep insertion order, so sums are canonical
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator {
            nrows: self.nrows,
            ncols: self.ncols,
            row_space: None,
            col_space: None,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// An assembled bilinear form: entry `(i, j)` is the form evaluated at trial
/// basis function `j` (column space) and test basis function `i` (row space).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub nrows: usize,
    pub ncols: usize,
    pub row_space: Option<SpaceKind>,
    pub col_space: Option<SpaceKind>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 1.0);
        }
        b.build()
    }

    pub fn with_spaces(mut self, rows: SpaceKind, cols: SpaceKind) -> Self {
        self.row_space = Some(rows);
        self.col_space = Some(cols);
        self
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension");
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows, "matvec_transpose dimension");
        let mut out = vec![0.0; self.ncols];
        for (r, c, v) in self.iter() {
            out[c] += v * y[r];
        }
        out
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (r, c, v) in self.iter() {
            b.push(c, r, v);
        }
        let mut t = b.build();
        t.row_space = self.col_space;
        t.col_space = self.row_space;
        t
    }

    pub fn scaled(&self, s: f64) -> SparseOperator {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest entrywise difference, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> Result<f64> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows * self.ncols,
                got: other.nrows * other.ncols,
                context: format!(
                    "{}x{} vs {}x{}",
                    self.nrows, self.ncols, other.nrows, other.ncols
                ),
            });
        }
        let mut b = TripletBuilder::new(self.nrows, self.ncols);
        b.entries.extend(self.iter());
        b.entries.extend(other.iter().map(|(r, c, v)| (r, c, -v)));
        Ok(b.build().max_abs())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            d[r][c] += v;
        }
        d
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets).map_err(|e| {
            Error::LinearSolve {
                residual: f64::NAN,
                message: format!("could not build sparse matrix: {e:?}"),
            }
        })
    }
}

impl SparseOperator {
    /// `self · rhs`.
    pub fn matmul(&self, rhs: &SparseOperator) -> Result<SparseOperator> {
        if self.ncols != rhs.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                got: rhs.nrows,
                context: "matrix product".into(),
            });
        }
        let mut acc = vec![0.0; rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut cols = Vec::new();
        let mut b = TripletBuilder::new(self.nrows, rhs.ncols);
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, v) in rhs.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * v;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                b.push(r, c, acc[c]);
            }
        }
        let mut out = b.build();
        out.row_space = self.row_space;
        out.col_space = rhs.col_space;
        Ok(out)
    }

    /// Inverse of a matrix whose pattern splits into independent diagonal
    /// blocks; each block is inverted densely.
    pub fn block_diagonal_inverse(&self) -> Result<SparseOperator> {
        use faer::linalg::solvers::DenseSolveCore;
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                got: self.ncols,
                context: "block inverse of a rectangular matrix".into(),
            });
        }
        let n = self.nrows;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (r, c, _) in self.iter() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        let mut local = vec![usize::MAX; n];
        let mut b = TripletBuilder::new(n, n);
        for idx in groups.values() {
            for (l, &g) in idx.iter().enumerate() {
                local[g] = l;
            }
            let m = idx.len();
            let mut dense = faer::Mat::<f64>::zeros(m, m);
            for (l, &g) in idx.iter().enumerate() {
                for (c, v) in self.row(g) {
                    dense[(l, local[c])] += v;
                }
            }
            let inv = dense.partial_piv_lu().inverse();
            for (i, &gi) in idx.iter().enumerate() {
                for (j, &gj) in idx.iter().enumerate() {
                    let v = inv[(i, j)];
                    if !v.is_finite() {
                        return Err(Error::LinearSolve {
                            residual: f64::INFINITY,
                            message: format!("singular diagonal block containing row {gi}"),
                        });
                    }
                    b.push(gi, gj, v);
                }
            }
        }
        let mut out = b.build();
        out.row_space = self.col_space;
        out.col_space = self.row_space;
        Ok(out)
    }

    /// Sum of several operators of equal shape, each scaled.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Result<SparseOperator> {
        let (nrows, ncols) = match terms.first() {
            Some((_, op)) => (op.nrows, op.ncols),
            None => return Err(Error::InvalidArgument("empty linear combination".into())),
        };
        let mut b = TripletBuilder::new(nrows, ncols);
        for (s, op) in terms {
            if op.nrows != nrows || op.ncols != ncols {
                return Err(Error::DimensionMismatch {
                    expected: nrows * ncols,
                    got: op.nrows * op.ncols,
                    context: "linear combination".into(),
                });
            }
            b.push_block(0, 0, op, *s);
        }
        Ok(b.build())
    }
}

/// Sparse `L D Lᵀ` of a symmetric quasi-definite matrix: the diagonal
/// entries flagged positive form a positive definite block, the rest a
/// negative definite one. Such matrices factor stably under any symmetric
/// ordering, so the fill-reducing AMD ordering is used. The symbolic
/// analysis is kept while the pattern is unchanged.
#[derive(Default)]
pub struct QuasiDefiniteLdlt {
    cached: Option<LdltCache>,
    values: Vec<f64>,
    signs: Vec<i8>,
    factored: bool,
    /// Number of numeric factorizations performed.
    pub factorizations: usize,
}

struct LdltCache {
    pattern: Vec<(usize, usize)>,
    symbolic: faer::sparse::SymbolicSparseColMat<usize>,
    argsort: faer::sparse::Argsort<usize>,
    chol: faer::sparse::linalg::cholesky::SymbolicCholesky<usize>,
}

fn factor_error(e: impl std::fmt::Debug) -> Error {
    Error::LinearSolve {
        residual: f64::INFINITY,
        message: format!("factorization failed: {e:?}"),
    }
}

impl QuasiDefiniteLdlt {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factors `a` (only its upper triangle is read). `positive[i]` gives the
    /// expected sign of pivot `i`.
    pub fn factor(&mut self, a: &SparseOperator, positive: &[bool]) -> Result<()> {
        use faer::dyn_stack::{MemBuffer, MemStack};
        use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
        use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, SymmetricOrdering};
        use faer::sparse::{Pair, SymbolicSparseColMat};

        if a.nrows != a.ncols || positive.len() != a.nrows {
            return Err(Error::DimensionMismatch {
                expected: a.nrows,
                got: positive.len(),
                context: "quasi-definite factorization".into(),
            });
        }
        self.factored = false;
        let upper: Vec<(usize, usize, f64)> = a.iter().filter(|&(r, c, _)| r <= c).collect();
        let pattern: Vec<(usize, usize)> = upper.iter().map(|&(r, c, _)| (r, c)).collect();
        let values: Vec<f64> = upper.iter().map(|&(_, _, v)| v).collect();
        if !matches!(&self.cached, Some(c) if c.pattern == pattern) {
            let pairs: Vec<Pair<usize, usize>> =
                pattern.iter().map(|&(row, col)| Pair { row, col }).collect();
            let (symbolic, argsort) =
                SymbolicSparseColMat::try_new_from_indices(a.nrows, a.ncols, &pairs).map_err(factor_error)?;
            let chol = factorize_symbolic_cholesky(
                symbolic.as_ref(),
                faer::Side::Upper,
                SymmetricOrdering::Amd,
                Default::default(),
            )
            .map_err(factor_error)?;
            self.cached = Some(LdltCache { pattern, symbolic, argsort, chol });
        }
        let c = self.cached.as_ref().expect("symbolic analysis");
        let mat = faer::sparse::SparseColMat::new_from_argsort(c.symbolic.clone(), &c.argsort, &values)
            .map_err(factor_error)?;
        self.signs = positive.iter().map(|&p| if p { 1 } else { -1 }).collect();
        self.values.resize(c.chol.len_val(), 0.0);
        let par = faer::Par::Seq;
        let mut mem = MemBuffer::try_new(c.chol.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()))
            .map_err(factor_error)?;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        c.chol
            .factorize_numeric_ldlt(
                &mut self.values,
                mat.as_ref(),
                faer::Side::Upper,
                LdltRegularization {
                    dynamic_regularization_signs: Some(&self.signs),
                    dynamic_regularization_delta: 1e-12 * scale,
                    dynamic_regularization_epsilon: 1e-14 * scale,
                },
                par,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .map_err(factor_error)?;
        self.factorizations += 1;
        self.factored = true;
        Ok(())
    }

    /// Overwrites `rhs` with the solution of the factored system.
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        use faer::dyn_stack::{MemBuffer, MemStack};
        use faer::sparse::linalg::cholesky::LdltRef;
        let c = match (&self.cached, self.factored) {
            (Some(c), true) => c,
            _ => return Err(Error::InvalidArgument("solve before a successful factorization".into())),
        };
        let n = rhs.len();
        let par = faer::Par::Seq;
        let mut mem = MemBuffer::try_new(c.chol.solve_in_place_scratch::<f64>(1, par)).map_err(factor_error)?;
        let ldlt = LdltRef::new(&c.chol, &self.values);
        let x = faer::MatMut::from_column_major_slice_mut(rhs, n, 1);
        ldlt.solve_in_place_with_conj(faer::Conj::No, x, par, MemStack::new(&mut mem));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 2, 0.5);
        let op = b.build();
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.get(1, 2), 1.5);
        assert_eq!(op.get(0, 1), 0.0);
        assert_eq!(op.matvec(&[1.0, 1.0, 2.0]), vec![2.0, 3.0]);
        assert_eq!(op.matvec_transpose(&[1.0, 2.0]), vec![2.0, 0.0, 3.0]);
    }

    #[test]
    fn transpose_roundtrip() {
        let mut b = TripletBuilder::new(3, 2);
        b.push(0, 1, 4.0);
        b.push(2, 0, -1.0);
        let op = b.build();
        assert_eq!(op.transpose().transpose(), op);
        assert_eq!(op.max_abs_diff(&op).unwrap(), 0.0);
    }

    #[test]
    fn product_and_block_inverse() {
        let mut b = TripletBuilder::new(3, 3);
        b.push(0, 0, 2.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        b.push(1, 1, 3.0);
        b.push(2, 2, 4.0);
        let a = b.build();
        let inv = a.block_diagonal_inverse().unwrap();
        assert_eq!(inv.get(0, 2), 0.0);
        let id = a.matmul(&inv).unwrap();
        assert!(id.max_abs_diff(&SparseOperator::identity(3)).unwrap() < 1e-15);
        let two = SparseOperator::linear_combination(&[(1.0, &a), (-1.0, &a)]).unwrap();
        assert_eq!(two.max_abs(), 0.0);
    }

    #[test]
    fn quasi_definite_solve() {
        // [[4, 1, 1], [1, 3, 0], [1, 0, -2]]
        let mut b = TripletBuilder::new(3, 3);
        for (r, c, v) in [(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (0, 2, 1.0), (2, 0, 1.0), (2, 2, -2.0)] {
            b.push(r, c, v);
        }
        let a = b.build();
        let mut f = QuasiDefiniteLdlt::new();
        f.factor(&a, &[true, true, false]).unwrap();
        let xs = [1.0, -2.0, 0.5];
        let mut x = a.matvec(&xs);
        f.solve_in_place(&mut x).unwrap();
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}
