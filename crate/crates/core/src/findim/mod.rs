//! Finite-dimensional associative algebras over a field of characteristic
//! zero and their modules: radicals, idempotents, projective covers, and
//! exactness checks for diagrams of module maps.

mod exact;
mod fdmodule;
mod poly;
mod projective;

pub use exact::{check_commutative_diagram, check_exact, Arrow, Diagram, ShortExactSequence};
pub use fdmodule::{FDModule, Subquotient};
pub use projective::{
    composition_series, direct_summand_test, is_projective, multi_cover, projective_cover, projective_indecomposables, same_factors,
    CompositionSeries, MultiCover, ProjectiveCover, ProjectiveIndecomposable, ProjectivityWitness,
};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::{Error, Result, Scalar};

/// An associative unital algebra given by structure constants on a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FinDimAlgebra<T: Scalar> {
    pub name: String,
    dim: usize,
    // mult[i][j] = b_i b_j
    mult: Vec<Vec<SparseVec<T>>>,
    unit: SparseVec<T>,
}

impl<T: Scalar> FinDimAlgebra<T> {
    /// Validates shapes, associativity on all basis triples and the unit
    /// laws.
    pub fn new(name: impl Into<String>, mult: Vec<Vec<SparseVec<T>>>, unit: SparseVec<T>) -> Result<Self> {
        let dim = mult.len();
        for row in &mult {
            if row.len() != dim {
                return Err(Error::Shape("multiplication table is not square".into()));
            }
            if row.iter().any(|v| v.max_index().is_some_and(|i| i >= dim)) {
                return Err(Error::Shape("product outside the algebra".into()));
            }
        }
        if unit.max_index().is_some_and(|i| i >= dim) {
            return Err(Error::Shape("unit outside the algebra".into()));
        }
        let a = FinDimAlgebra { name: name.into(), dim, mult, unit };
        if let Some((i, j, k)) = a.associativity_defect() {
            return Err(Error::AxiomViolation(format!("(b{i} b{j}) b{k} != b{i} (b{j} b{k})")));
        }
        for i in 0..dim {
            let b = SparseVec::unit(i);
            if a.mul(&a.unit, &b) != b || a.mul(&b, &a.unit) != b {
                return Err(Error::AxiomViolation(format!("unit law fails on b{i}")));
            }
        }
        Ok(a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unit(&self) -> &SparseVec<T> {
        &self.unit
    }

    pub fn basis_product(&self, i: usize, j: usize) -> &SparseVec<T> {
        &self.mult[i][j]
    }

    pub fn mul(&self, x: &SparseVec<T>, y: &SparseVec<T>) -> SparseVec<T> {
        let mut out = SparseVec::zero();
        for (i, a) in x.iter() {
            for (j, b) in y.iter() {
                out.add_assign_scaled(&(a.clone() * b.clone()), &self.mult[i][j]);
            }
        }
        out
    }

    pub fn pow(&self, x: &SparseVec<T>, k: usize) -> SparseVec<T> {
        (0..k).fold(self.unit.clone(), |acc, _| self.mul(&acc, x))
    }

    /// First basis triple on which associativity fails.
    pub fn associativity_defect(&self) -> Option<(usize, usize, usize)> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let ij = &self.mult[i][j];
                for k in 0..self.dim {
                    let lhs = self.mul(ij, &SparseVec::unit(k));
                    let rhs = self.mul(&SparseVec::unit(i), &self.mult[j][k]);
                    if lhs != rhs {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    pub fn is_commutative(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.mult[i][j] == self.mult[j][i]))
    }

    /// Matrix of `y -> x y`.
    pub fn left_matrix(&self, x: &SparseVec<T>) -> SparseMatrix<T> {
        let cols: Vec<_> = (0..self.dim).map(|j| self.mul(x, &SparseVec::unit(j))).collect();
        SparseMatrix::from_columns(self.dim, &cols)
    }

    /// Matrix of `y -> y x`.
    pub fn right_matrix(&self, x: &SparseVec<T>) -> SparseMatrix<T> {
        let cols: Vec<_> = (0..self.dim).map(|j| self.mul(&SparseVec::unit(j), x)).collect();
        SparseMatrix::from_columns(self.dim, &cols)
    }

    /// `Tr(L_{b_i b_j})` on the regular representation.
    pub fn trace_form(&self) -> SparseMatrix<T> {
        let mut rows = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut row = SparseVec::zero();
            for j in 0..self.dim {
                let m = self.left_matrix(&self.mult[i][j]);
                let tr = (0..self.dim).fold(T::zero(), |acc, k| acc + m.get(k, k));
                row.add_assign_scaled(&tr, &SparseVec::unit(j));
            }
            rows.push(row);
        }
        SparseMatrix::from_rows(self.dim, rows)
    }

    /// Basis of the Jacobson radical: the kernel of the trace form, which is
    /// the radical in characteristic zero.
    pub fn radical(&self) -> Vec<SparseVec<T>> {
        let mut s = RowSpace::new(self.dim);
        for v in self.trace_form().kernel_basis() {
            s.insert(&SparseVec::from_dense(&v));
        }
        s.basis().cloned().collect()
    }

    pub fn is_semisimple(&self) -> bool {
        self.radical().is_empty()
    }

    /// Span of all products `x y` with `x` in `a`, `y` in `b`.
    pub fn ideal_product(&self, a: &[SparseVec<T>], b: &[SparseVec<T>]) -> Vec<SparseVec<T>> {
        let mut s = RowSpace::new(self.dim);
        for x in a {
            for y in b {
                s.insert(&self.mul(x, y));
            }
        }
        s.basis().cloned().collect()
    }

    /// Smallest `k` with `I^k = 0`, or `None` when no power up to `dim + 1`
    /// vanishes.
    pub fn nilpotency_index(&self, ideal: &[SparseVec<T>]) -> Option<usize> {
        let mut p = ideal.to_vec();
        for k in 1..=self.dim + 1 {
            if p.is_empty() {
                return Some(k);
            }
            p = self.ideal_product(&p, ideal);
        }
        None
    }

    /// Two-sided ideal generated by `gens`.
    pub fn two_sided_ideal(&self, gens: &[SparseVec<T>]) -> Vec<SparseVec<T>> {
        let mut s = RowSpace::new(self.dim);
        let mut queue: Vec<SparseVec<T>> = Vec::new();
        for g in gens {
            if s.insert(g) {
                queue.push(g.clone());
            }
        }
        while let Some(x) = queue.pop() {
            for i in 0..self.dim {
                let b = SparseVec::unit(i);
                for y in [self.mul(&b, &x), self.mul(&x, &b)] {
                    if s.insert(&y) {
                        queue.push(y);
                    }
                }
            }
        }
        s.basis().cloned().collect()
    }

    /// Quotient by a two-sided ideal. The quotient basis is the set of
    /// non-pivot coordinates of the ideal's echelon form; returns the
    /// algebra, the projection matrix and the lifts of the quotient basis.
    pub fn quotient(&self, ideal: &[SparseVec<T>]) -> Result<(FinDimAlgebra<T>, SparseMatrix<T>, Vec<SparseVec<T>>)> {
        let mut s = RowSpace::new(self.dim);
        for v in ideal {
            s.insert(v);
        }
        let keep = s.non_pivots();
        let pos = |i: usize| keep.iter().position(|&k| k == i);
        let proj = |v: &SparseVec<T>| s.reduce(v).reindex(pos);
        let lifts: Vec<SparseVec<T>> = keep.iter().map(|&i| SparseVec::unit(i)).collect();
        let mut mult = Vec::with_capacity(keep.len());
        for x in &lifts {
            mult.push(lifts.iter().map(|y| proj(&self.mul(x, y))).collect());
        }
        let cols: Vec<_> = (0..self.dim).map(|j| proj(&SparseVec::unit(j))).collect();
        let pm = SparseMatrix::from_columns(keep.len(), &cols);
        let q = FinDimAlgebra::new(format!("{}/I", self.name), mult, proj(&self.unit))?;
        Ok((q, pm, lifts))
    }

    /// Minimal polynomial of `x` inside the corner with unit `e`
    /// (`x` must lie in `e A e`), monic, constant term first.
    pub fn min_poly(&self, x: &SparseVec<T>, e: &SparseVec<T>) -> Vec<T> {
        let n = self.dim;
        let mut s = RowSpace::new(2 * n + 2);
        let mut p = e.clone();
        for k in 0..=n + 1 {
            let tagged = p.add_scaled(&T::one(), &SparseVec::unit(n + k));
            let r = s.reduce(&tagged);
            if r.indices().all(|i| i >= n) {
                return (0..=k).map(|j| r.get(n + j)).collect();
            }
            s.insert(&tagged);
            p = self.mul(&p, x);
        }
        unreachable!("a minimal polynomial has degree at most the dimension")
    }

    /// `f(x)` with `e` as the unit.
    pub fn eval_poly(&self, f: &[T], x: &SparseVec<T>, e: &SparseVec<T>) -> SparseVec<T> {
        let mut acc = SparseVec::zero();
        for c in f.iter().rev() {
            acc = self.mul(&acc, x).add_scaled(c, e);
        }
        acc
    }

    /// A complete set of orthogonal primitive idempotents, found by
    /// splitting in the semisimple quotient and lifting through the radical.
    ///
    /// Splitting uses rational eigenvalues of corner elements, so a corner
    /// that is a matrix algebra over a proper division algebra, or a field
    /// extension of the rationals, is kept whole.
    pub fn primitive_idempotents(&self, seed: u64) -> Result<Vec<SparseVec<T>>> {
        let rad = self.radical();
        let (b, _, lifts) = self.quotient(&rad)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bar = Vec::new();
        b.split_idempotent(b.unit.clone(), &mut rng, &mut bar);
        let lift = |v: &SparseVec<T>| {
            let mut out = SparseVec::zero();
            for (i, c) in v.iter() {
                out.add_assign_scaled(c, &lifts[i]);
            }
            out
        };
        let mut out = Vec::new();
        let mut f = self.unit.clone();
        for (k, eb) in bar.iter().enumerate() {
            if k + 1 == bar.len() {
                out.push(f.clone());
                break;
            }
            let y = lift(eb);
            let mut x = self.mul(&self.mul(&f, &y), &f);
            x = self.purify(x)?;
            f = f.sub(&x);
            out.push(x);
        }
        Ok(out)
    }

    /// Iterates `e -> 3e^2 - 2e^3` until `e^2 = e`.
    pub fn purify(&self, mut e: SparseVec<T>) -> Result<SparseVec<T>> {
        for _ in 0..64 {
            let e2 = self.mul(&e, &e);
            if e2 == e {
                return Ok(e);
            }
            let e3 = self.mul(&e2, &e);
            e = e2.scale(&T::from_int(3)).add_scaled(&T::from_int(-2), &e3);
        }
        Err(Error::BoundExceeded(64))
    }

    fn split_idempotent(&self, e: SparseVec<T>, rng: &mut ChaCha8Rng, out: &mut Vec<SparseVec<T>>) {
        let mut corner = RowSpace::new(self.dim);
        for i in 0..self.dim {
            let c = self.mul(&self.mul(&e, &SparseVec::unit(i)), &e);
            corner.insert(&c);
        }
        if corner.rank() <= 1 {
            out.push(e);
            return;
        }
        let basis: Vec<SparseVec<T>> = corner.basis().cloned().collect();
        let mut candidates = basis.clone();
        for _ in 0..8 {
            let mut x = SparseVec::zero();
            for b in &basis {
                x.add_assign_scaled(&T::from_int(rng.gen_range(-5..=5)), b);
            }
            candidates.push(x);
        }
        for x in candidates {
            if let Some((e1, e2)) = self.split_by(&x, &e) {
                self.split_idempotent(e1, rng, out);
                self.split_idempotent(e2, rng, out);
                return;
            }
        }
        out.push(e);
    }

    fn split_by(&self, x: &SparseVec<T>, e: &SparseVec<T>) -> Option<(SparseVec<T>, SparseVec<T>)> {
        let f = self.min_poly(x, e);
        if f.len() <= 2 {
            return None;
        }
        let fq: Vec<BigRational> = f.iter().map(|c| c.to_ratio()).collect::<Option<_>>()?;
        for r in poly::rational_roots(&fq) {
            let g = poly::deflate(&fq, &r);
            let gr = poly::eval(&g, &r);
            if num_traits::Zero::is_zero(&gr) {
                continue;
            }
            let gt: Vec<T> = g.iter().map(|c| T::from_ratio(&(c / &gr))).collect();
            let e1 = self.eval_poly(&gt, x, e);
            let e2 = e.sub(&e1);
            if !e1.is_zero() && !e2.is_zero() && self.mul(&e1, &e1) == e1 {
                return Some((e1, e2));
            }
        }
        None
    }

    pub fn regular_module(&self) -> FDModule<T> {
        let action = (0..self.dim).map(|i| self.left_matrix(&SparseVec::unit(i))).collect();
        FDModule::new_unchecked(format!("{}-regular", self.name), self.dim, action)
    }

    /// `Q[x]/(x^n)` on the basis `1, x, ..., x^{n-1}`.
    pub fn truncated_polynomial(n: usize) -> Self {
        let mult = (0..n).map(|i| (0..n).map(|j| if i + j < n { SparseVec::unit(i + j) } else { SparseVec::zero() }).collect()).collect();
        FinDimAlgebra { name: format!("Q[x]/(x^{n})"), dim: n, mult, unit: SparseVec::unit(0) }
    }

    /// `Q^n` with coordinatewise product.
    pub fn product_of_fields(n: usize) -> Self {
        let mult = (0..n).map(|i| (0..n).map(|j| if i == j { SparseVec::unit(i) } else { SparseVec::zero() }).collect()).collect();
        let unit = SparseVec::from_pairs((0..n).map(|i| (i, T::one())));
        FinDimAlgebra { name: format!("Q^{n}"), dim: n, mult, unit }
    }

    /// `n x n` matrices; basis `E_{ij}` at index `i n + j`.
    pub fn matrix_algebra(n: usize) -> Self {
        Self::matrix_units(n, |_, _| true, format!("M_{n}(Q)"))
    }

    /// Upper-triangular `n x n` matrices; basis `E_{ij}`, `i <= j`, in
    /// row-major order.
    pub fn upper_triangular(n: usize) -> Self {
        Self::matrix_units(n, |i, j| i <= j, format!("T_{n}(Q)"))
    }

    fn matrix_units(n: usize, keep: impl Fn(usize, usize) -> bool, name: String) -> Self {
        let units: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| keep(i, j)).collect();
        let idx = |p: (usize, usize)| units.iter().position(|&u| u == p);
        let mult = units
            .iter()
            .map(|&(i, j)| {
                units
                    .iter()
                    .map(|&(k, l)| if j == k { idx((i, l)).map(SparseVec::unit).unwrap_or_default() } else { SparseVec::zero() })
                    .collect()
            })
            .collect();
        let unit = SparseVec::from_pairs((0..n).map(|i| (idx((i, i)).unwrap(), T::one())));
        FinDimAlgebra { name, dim: units.len(), mult, unit }
    }

    /// Block diagonal product of two algebras.
    pub fn product(&self, other: &FinDimAlgebra<T>) -> Self {
        let n = self.dim;
        let d = n + other.dim;
        let mut mult = vec![vec![SparseVec::zero(); d]; d];
        for i in 0..n {
            for j in 0..n {
                mult[i][j] = self.mult[i][j].clone();
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                mult[n + i][n + j] = other.mult[i][j].reindex(|k| Some(k + n));
            }
        }
        let unit = self.unit.add_scaled(&T::one(), &other.unit.reindex(|k| Some(k + n)));
        FinDimAlgebra { name: format!("{} x {}", self.name, other.name), dim: d, mult, unit }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;

    #[test]
    fn radicals_of_small_algebras() {
        let a = FinDimAlgebra::<Q>::truncated_polynomial(2);
        let r = a.radical();
        assert_eq!(r, vec![SparseVec::unit(1)]);
        assert_eq!(a.nilpotency_index(&r), Some(2));
        assert!(FinDimAlgebra::<Q>::product_of_fields(2).is_semisimple());
        let t = FinDimAlgebra::<Q>::upper_triangular(2);
        // basis E11, E12, E22
        assert_eq!(t.radical(), vec![SparseVec::unit(1)]);
        assert!(FinDimAlgebra::<Q>::matrix_algebra(2).is_semisimple());
    }

    #[test]
    fn constructors_satisfy_the_axioms() {
        for a in [
            FinDimAlgebra::<Q>::truncated_polynomial(3),
            FinDimAlgebra::product_of_fields(3),
            FinDimAlgebra::upper_triangular(3),
            FinDimAlgebra::matrix_algebra(2),
            FinDimAlgebra::truncated_polynomial(2).product(&FinDimAlgebra::upper_triangular(2)),
        ] {
            FinDimAlgebra::new(a.name.clone(), a.mult.clone(), a.unit.clone()).unwrap();
        }
    }

    #[test]
    fn nonassociative_table_is_rejected() {
        let mut a = FinDimAlgebra::<Q>::truncated_polynomial(3);
        a.mult[1][1] = SparseVec::unit(0);
        assert!(matches!(FinDimAlgebra::new("bad", a.mult, a.unit), Err(Error::AxiomViolation(_))));
    }

    #[test]
    fn idempotents_sum_to_one_and_are_orthogonal() {
        for a in [
            FinDimAlgebra::<Q>::upper_triangular(3),
            FinDimAlgebra::matrix_algebra(2),
            FinDimAlgebra::product_of_fields(3),
            FinDimAlgebra::truncated_polynomial(3),
        ] {
            let es = a.primitive_idempotents(7).unwrap();
            let mut sum = SparseVec::zero();
            for (i, e) in es.iter().enumerate() {
                assert_eq!(&a.mul(e, e), e);
                for f in &es[..i] {
                    assert!(a.mul(e, f).is_zero() && a.mul(f, e).is_zero());
                }
                sum = sum.add_scaled(&Q::from_int(1), e);
            }
            assert_eq!(&sum, a.unit(), "{}", a.name);
        }
        assert_eq!(FinDimAlgebra::<Q>::upper_triangular(3).primitive_idempotents(1).unwrap().len(), 3);
        assert_eq!(FinDimAlgebra::<Q>::matrix_algebra(2).primitive_idempotents(1).unwrap().len(), 2);
        assert_eq!(FinDimAlgebra::<Q>::truncated_polynomial(3).primitive_idempotents(1).unwrap().len(), 1);
    }

    #[test]
    fn min_poly_of_nilpotent_and_split_elements() {
        let a = FinDimAlgebra::<Q>::truncated_polynomial(3);
        let f = a.min_poly(&SparseVec::unit(1), a.unit());
        assert_eq!(f, vec![Q::from_int(0), Q::from_int(0), Q::from_int(0), Q::from_int(1)]);
        let b = FinDimAlgebra::<Q>::product_of_fields(2);
        let x = SparseVec::from_dense(&[Q::from_int(2), Q::from_int(5)]);
        assert_eq!(b.min_poly(&x, b.unit()), vec![Q::from_int(10), Q::from_int(-7), Q::from_int(1)]);
    }
}
