use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A sparse vector: strictly increasing indices, no stored zeros.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparseVec<T> {
    entries: Vec<(usize, T)>,
}

impl<T: Scalar> Default for SparseVec<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> fmt::Debug for SparseVec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, (i, c)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {c}")?;
        }
        f.write_str("]")
    }
}

impl<T: Scalar> SparseVec<T> {
    pub fn zero() -> Self {
        SparseVec { entries: Vec::new() }
    }

    pub fn unit(i: usize) -> Self {
        SparseVec { entries: vec![(i, T::one())] }
    }

    pub fn single(i: usize, c: T) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            SparseVec { entries: vec![(i, c)] }
        }
    }

    /// Builds from arbitrary `(index, value)` pairs, summing duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, T)>) -> Self {
        let mut acc: BTreeMap<usize, T> = BTreeMap::new();
        for (i, c) in pairs {
            let e = acc.entry(i).or_insert_with(T::zero);
            *e = e.clone() + c;
        }
        SparseVec {
            entries: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn from_dense(v: &[T]) -> Self {
        SparseVec {
            entries: v
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i, c.clone()))
                .collect(),
        }
    }

    pub fn to_dense(&self, len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); len];
        for (i, c) in &self.entries {
            out[*i] = c.clone();
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> + '_ {
        self.entries.iter().map(|(i, c)| (*i, c))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    pub fn get(&self, i: usize) -> T {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => self.entries[k].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn leading(&self) -> Option<(usize, &T)> {
        self.entries.first().map(|(i, c)| (*i, c))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        SparseVec {
            entries: self
                .entries
                .iter()
                .map(|(i, c)| (*i, c.clone() * s.clone()))
                .collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: &T, other: &Self) -> Self {
        if s.is_zero() || other.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((i, x)), Some((j, y))) => {
                    if i < j {
                        out.push((*i, x.clone()));
                        a.next();
                    } else if j < i {
                        out.push((*j, y.clone() * s.clone()));
                        b.next();
                    } else {
                        let v = x.clone() + y.clone() * s.clone();
                        if !v.is_zero() {
                            out.push((*i, v));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some((i, x)), None) => {
                    out.push((*i, x.clone()));
                    a.next();
                }
                (None, Some((j, y))) => {
                    out.push((*j, y.clone() * s.clone()));
                    b.next();
                }
                (None, None) => break,
            }
        }
        SparseVec { entries: out }
    }

    pub fn add_assign_scaled(&mut self, s: &T, other: &Self) {
        *self = self.add_scaled(s, other);
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(&-T::one(), other)
    }

    pub fn dot_dense(&self, v: &[T]) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, (i, c)| acc + c.clone() * v[*i].clone())
    }

    /// Relabels indices through `f`; entries mapped to `None` are dropped.
    pub fn reindex(&self, f: impl Fn(usize) -> Option<usize>) -> Self {
        Self::from_pairs(self.entries.iter().filter_map(|(i, c)| f(*i).map(|j| (j, c.clone()))))
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SparseVec<U> {
        SparseVec::from_pairs(self.entries.iter().map(|(i, c)| (*i, f(c))))
    }
}

/// Sparse matrix stored by rows.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec<T>>,
}

impl<T: Scalar> fmt::Debug for SparseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseMatrix {}x{}", self.rows, self.cols)?;
        for (r, row) in self.data.iter().enumerate() {
            if !row.is_zero() {
                writeln!(f, "  {r}: {row:?}")?;
            }
        }
        Ok(())
    }
}

/// Result of row reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct Rref<T: Scalar> {
    pub reduced: SparseMatrix<T>,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols, data: vec![SparseVec::zero(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix { rows: n, cols: n, data: (0..n).map(SparseVec::unit).collect() }
    }

    pub fn from_triplets(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut per_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
        for (r, c, v) in entries {
            if r >= rows || c >= cols {
                return Err(Error::Shape(format!("entry ({r}, {c}) outside {rows}x{cols}")));
            }
            if !seen.insert((r, c)) {
                return Err(Error::Shape(format!("duplicate entry ({r}, {c})")));
            }
            per_row[r].push((c, v));
        }
        let data = per_row.into_iter().map(SparseVec::from_pairs).collect();
        Ok(SparseMatrix { rows, cols, data })
    }

    pub fn from_rows(cols: usize, rows: Vec<SparseVec<T>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.max_index().is_none_or(|m| m < cols)));
        SparseMatrix { rows: rows.len(), cols, data: rows }
    }

    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        SparseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().map(|r| SparseVec::from_dense(r)).collect(),
        }
    }

    /// Builds from column vectors.
    pub fn from_columns(rows: usize, columns: &[SparseVec<T>]) -> Self {
        let triplets = columns
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |(r, v)| (r, c, v.clone())).collect::<Vec<_>>());
        Self::from_triplets(rows, columns.len(), triplets).expect("columns within bounds")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &SparseVec<T> {
        &self.data[r]
    }

    pub fn row_vectors(&self) -> &[SparseVec<T>] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r].get(c)
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.nnz()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_zero())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, c, v.clone())).collect::<Vec<_>>())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        self.data.iter().map(|r| r.to_dense(self.cols)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.cols];
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row.iter() {
                cols[c].push((r, v.clone()));
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            data: cols.into_iter().map(|e| SparseVec { entries: e }).collect(),
        }
    }

    pub fn mul_dense(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "vector length mismatch");
        self.data.iter().map(|r| r.dot_dense(x)).collect()
    }

    /// `self * x` for a sparse column vector.
    pub fn mul_sparse(&self, x: &SparseVec<T>) -> SparseVec<T> {
        let t = self.transpose();
        let mut out = SparseVec::zero();
        for (c, v) in x.iter() {
            out.add_assign_scaled(v, t.row(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .map(|row| {
                let mut acc = SparseVec::zero();
                for (k, v) in row.iter() {
                    acc.add_assign_scaled(v, other.row(k));
                }
                acc
            })
            .collect();
        Ok(SparseMatrix { rows: self.rows, cols: other.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("matrix sum shape mismatch".into()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.add_scaled(&T::one(), b))
            .collect();
        Ok(SparseMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: &T) -> Self {
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|r| r.scale(s)).collect(),
        }
    }

    /// Reduced row echelon form with leftmost-nonzero pivoting.
    pub fn rref(&self) -> Rref<T> {
        let mut rows: Vec<SparseVec<T>> = self.data.iter().filter(|r| !r.is_zero()).cloned().collect();
        let mut pivots = Vec::new();
        let mut done = 0;
        while done < rows.len() {
            // pick the row whose leading column is smallest
            let (best, col) = match rows[done..]
                .iter()
                .enumerate()
                .filter_map(|(k, r)| r.leading().map(|(c, _)| (k + done, c)))
                .min_by_key(|&(k, c)| (c, k))
            {
                Some(x) => x,
                None => break,
            };
            rows.swap(done, best);
            let inv = rows[done].get(col).inv();
            rows[done] = rows[done].scale(&inv);
            let pivot_row = rows[done].clone();
            for (k, r) in rows.iter_mut().enumerate() {
                if k == done {
                    continue;
                }
                let f = r.get(col);
                if !f.is_zero() {
                    *r = r.add_scaled(&-f, &pivot_row);
                }
            }
            pivots.push(col);
            done += 1;
            rows.retain(|r| !r.is_zero());
        }
        let rank = pivots.len();
        rows.truncate(rank);
        rows.resize(self.rows, SparseVec::zero());
        Rref {
            reduced: SparseMatrix { rows: self.rows, cols: self.cols, data: rows },
            pivots,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Some `x` with `self * x = rhs`, free variables set to zero; `None` when
    /// the system is inconsistent.
    pub fn solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        assert_eq!(rhs.len(), self.rows, "rhs length must equal row count");
        let aug_rows: Vec<SparseVec<T>> = self
            .data
            .iter()
            .zip(rhs)
            .map(|(r, b)| r.add_scaled(&T::one(), &SparseVec::single(self.cols, b.clone())))
            .collect();
        let aug = SparseMatrix { rows: self.rows, cols: self.cols + 1, data: aug_rows };
        let red = aug.rref();
        if red.pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![T::zero(); self.cols];
        for (k, &p) in red.pivots.iter().enumerate() {
            x[p] = red.reduced.row(k).get(self.cols);
        }
        Some(x)
    }

    /// Basis of the null space, one vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<T>> {
        let red = self.rref();
        let pivot_set: std::collections::HashSet<usize> = red.pivots.iter().copied().collect();
        (0..self.cols)
            .filter(|c| !pivot_set.contains(c))
            .map(|free| {
                let mut v = vec![T::zero(); self.cols];
                v[free] = T::one();
                for (k, &p) in red.pivots.iter().enumerate() {
                    v[p] = -red.reduced.row(k).get(free);
                }
                v
            })
            .collect()
    }
}

/// Incrementally maintained echelon basis of a subspace of `T^n`.
///
/// Rows are kept with a unit pivot at their leftmost entry and zeros in every
/// other row's pivot column that precedes them, which is enough for exact
/// membership tests and reductions.
#[derive(Clone, Debug)]
pub struct RowSpace<T: Scalar> {
    dim: usize,
    rows: BTreeMap<usize, SparseVec<T>>,
}

impl<T: Scalar> RowSpace<T> {
    pub fn new(dim: usize) -> Self {
        RowSpace { dim, rows: BTreeMap::new() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn basis(&self) -> impl Iterator<Item = &SparseVec<T>> + '_ {
        self.rows.values()
    }

    /// Remainder of `v` after eliminating every pivot column.
    pub fn reduce(&self, v: &SparseVec<T>) -> SparseVec<T> {
        let mut v = v.clone();
        for (p, row) in &self.rows {
            let c = v.get(*p);
            if !c.is_zero() {
                v = v.add_scaled(&-c, row);
            }
        }
        v
    }

    /// Like [`reduce`](Self::reduce) but also returns the coefficients
    /// (keyed by pivot) such that `v = remainder + Σ coeff * row(pivot)`.
    pub fn reduce_with_coeffs(&self, v: &SparseVec<T>) -> (SparseVec<T>, Vec<(usize, T)>) {
        let mut v = v.clone();
        let mut coeffs = Vec::new();
        for (p, row) in &self.rows {
            let c = v.get(*p);
            if !c.is_zero() {
                v = v.add_scaled(&-c.clone(), row);
                coeffs.push((*p, c));
            }
        }
        (v, coeffs)
    }

    pub fn contains(&self, v: &SparseVec<T>) -> bool {
        self.reduce(v).is_zero()
    }

    /// Inserts `v`; returns `true` when it enlarged the space.
    pub fn insert(&mut self, v: &SparseVec<T>) -> bool {
        let r = self.reduce(v);
        match r.leading() {
            None => false,
            Some((p, c)) => {
                let inv = c.inv();
                self.rows.insert(p, r.scale(&inv));
                true
            }
        }
    }

    pub fn row(&self, pivot: usize) -> Option<&SparseVec<T>> {
        self.rows.get(&pivot)
    }

    /// Coordinates that are not pivots: a basis of a complement made of
    /// standard basis vectors.
    pub fn non_pivots(&self) -> Vec<usize> {
        (0..self.dim).filter(|c| !self.rows.contains_key(c)).collect()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    /// Canonical fully reduced basis, for comparing subspaces.
    pub fn canonical(&self) -> SparseMatrix<T> {
        let m = SparseMatrix::from_rows(self.dim, self.rows.values().cloned().collect());
        let red = m.rref();
        let mut data = red.reduced.data;
        data.truncate(red.rank);
        SparseMatrix { rows: red.rank, cols: self.dim, data }
    }
}
