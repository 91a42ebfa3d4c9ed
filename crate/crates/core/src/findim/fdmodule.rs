use rand::Rng;

use super::FinDimAlgebra;
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::{Error, Result, Scalar};

/// A left module over a [`FinDimAlgebra`], given by the matrices of the
/// algebra's basis elements. Maps between modules are matrices acting on
/// column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FDModule<T: Scalar> {
    pub name: String,
    dim: usize,
    action: Vec<SparseMatrix<T>>,
}

/// A subquotient `upper / lower` of a module, with the vectors of the
/// ambient module whose classes form its basis.
#[derive(Clone, Debug)]
pub struct Subquotient<T: Scalar> {
    pub module: FDModule<T>,
    pub basis: Vec<SparseVec<T>>,
}

fn span_of<T: Scalar>(dim: usize, vs: impl IntoIterator<Item = SparseVec<T>>) -> RowSpace<T> {
    let mut s = RowSpace::new(dim);
    for v in vs {
        s.insert(&v);
    }
    s
}

/// Coordinates of `v` in the given columns (which must be independent).
pub(crate) fn coordinates<T: Scalar>(dim: usize, cols: &[SparseVec<T>], v: &SparseVec<T>) -> Option<Vec<T>> {
    if cols.is_empty() {
        return v.is_zero().then(Vec::new);
    }
    SparseMatrix::from_columns(dim, cols).solve(&v.to_dense(dim))
}

impl<T: Scalar> FDModule<T> {
    /// Checks that the matrices have the right shape, that the unit acts as
    /// the identity and that `rho(b_i) rho(b_j) = rho(b_i b_j)`.
    pub fn new(alg: &FinDimAlgebra<T>, name: impl Into<String>, dim: usize, action: Vec<SparseMatrix<T>>) -> Result<Self> {
        if action.len() != alg.dim() || action.iter().any(|m| m.rows() != dim || m.cols() != dim) {
            return Err(Error::Shape(format!("need {} action matrices of size {dim}", alg.dim())));
        }
        let m = FDModule { name: name.into(), dim, action };
        if m.act(alg.unit()) != SparseMatrix::identity(dim) {
            return Err(Error::AxiomViolation("unit does not act as the identity".into()));
        }
        for i in 0..alg.dim() {
            for j in 0..alg.dim() {
                let lhs = m.action[i].mul(&m.action[j])?;
                if lhs != m.act(alg.basis_product(i, j)) {
                    return Err(Error::AxiomViolation(format!("action of b{i} b{j} is not the product of actions")));
                }
            }
        }
        Ok(m)
    }

    pub(crate) fn new_unchecked(name: String, dim: usize, action: Vec<SparseMatrix<T>>) -> Self {
        FDModule { name, dim, action }
    }

    pub fn zero(alg: &FinDimAlgebra<T>) -> Self {
        FDModule { name: "0".into(), dim: 0, action: vec![SparseMatrix::zero(0, 0); alg.dim()] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn action(&self) -> &[SparseMatrix<T>] {
        &self.action
    }

    /// Matrix of an arbitrary algebra element.
    pub fn act(&self, x: &SparseVec<T>) -> SparseMatrix<T> {
        let mut out = SparseMatrix::zero(self.dim, self.dim);
        for (i, c) in x.iter() {
            out = out.add(&self.action[i].scale(c)).expect("action matrices are square");
        }
        out
    }

    pub fn apply(&self, x: &SparseVec<T>, v: &SparseVec<T>) -> SparseVec<T> {
        let mut out = SparseVec::zero();
        for (i, c) in x.iter() {
            out.add_assign_scaled(c, &self.action[i].mul_sparse(v));
        }
        out
    }

    pub fn direct_sum(&self, other: &FDModule<T>) -> FDModule<T> {
        let n = self.dim;
        let action = self
            .action
            .iter()
            .zip(&other.action)
            .map(|(a, b)| {
                let mut t = a.triplets();
                t.extend(b.triplets().into_iter().map(|(r, c, x)| (r + n, c + n, x)));
                SparseMatrix::from_triplets(n + other.dim, n + other.dim, t).expect("block diagonal")
            })
            .collect();
        FDModule { name: format!("{} + {}", self.name, other.name), dim: n + other.dim, action }
    }

    /// Submodule generated by `gens`.
    pub fn closure(&self, gens: &[SparseVec<T>]) -> RowSpace<T> {
        let mut s = RowSpace::new(self.dim);
        let mut queue: Vec<SparseVec<T>> = Vec::new();
        for g in gens {
            if s.insert(g) {
                queue.push(g.clone());
            }
        }
        while let Some(x) = queue.pop() {
            for m in &self.action {
                let y = m.mul_sparse(&x);
                if s.insert(&y) {
                    queue.push(y);
                }
            }
        }
        s
    }

    pub fn is_submodule(&self, s: &RowSpace<T>) -> bool {
        s.basis().all(|v| self.action.iter().all(|m| s.contains(&m.mul_sparse(v))))
    }

    /// `rad(A) M`.
    pub fn radical_submodule(&self, alg: &FinDimAlgebra<T>) -> RowSpace<T> {
        let rad = alg.radical();
        let mut s = RowSpace::new(self.dim);
        for r in &rad {
            let m = self.act(r);
            for j in 0..self.dim {
                s.insert(&m.mul_sparse(&SparseVec::unit(j)));
            }
        }
        s
    }

    /// The subquotient `upper / lower`; `lower` must lie in `upper` and both
    /// must be submodules.
    pub fn subquotient(&self, upper: &RowSpace<T>, lower: &RowSpace<T>) -> Result<Subquotient<T>> {
        let mut acc = lower.clone();
        let mut basis = Vec::new();
        for v in upper.basis() {
            if acc.insert(v) {
                basis.push(v.clone());
            }
        }
        if lower.basis().any(|v| !upper.contains(v)) {
            return Err(Error::InvalidArgument("lower subspace is not inside the upper one".into()));
        }
        let mut cols: Vec<SparseVec<T>> = lower.basis().cloned().collect();
        let skip = cols.len();
        cols.extend(basis.iter().cloned());
        let action = self
            .action
            .iter()
            .map(|m| {
                let images: Vec<SparseVec<T>> = basis
                    .iter()
                    .map(|b| {
                        let x = coordinates(self.dim, &cols, &m.mul_sparse(b)).ok_or_else(|| Error::InvalidArgument("upper subspace is not a submodule".into()))?;
                        Ok(SparseVec::from_dense(&x[skip..]))
                    })
                    .collect::<Result<_>>()?;
                Ok(SparseMatrix::from_columns(basis.len(), &images))
            })
            .collect::<Result<_>>()?;
        let module = FDModule { name: format!("{} subquotient", self.name), dim: basis.len(), action };
        Ok(Subquotient { module, basis })
    }

    /// Submodule with its inclusion matrix.
    pub fn submodule(&self, s: &RowSpace<T>) -> Result<(FDModule<T>, SparseMatrix<T>)> {
        let sq = self.subquotient(s, &RowSpace::new(self.dim))?;
        let inc = SparseMatrix::from_columns(self.dim, &sq.basis);
        Ok((sq.module, inc))
    }

    /// Quotient module with its projection matrix.
    pub fn quotient(&self, s: &RowSpace<T>) -> Result<(FDModule<T>, SparseMatrix<T>)> {
        let full = span_of(self.dim, (0..self.dim).map(SparseVec::unit));
        let sq = self.subquotient(&full, s)?;
        let mut cols: Vec<SparseVec<T>> = s.basis().cloned().collect();
        let skip = cols.len();
        cols.extend(sq.basis.iter().cloned());
        let proj: Vec<SparseVec<T>> = (0..self.dim)
            .map(|j| SparseVec::from_dense(&coordinates(self.dim, &cols, &SparseVec::unit(j)).expect("full span")[skip..]))
            .collect();
        Ok((sq.module.clone(), SparseMatrix::from_columns(sq.module.dim, &proj)))
    }

    /// Whether `f: self -> other` commutes with the action.
    pub fn is_module_map(&self, other: &FDModule<T>, f: &SparseMatrix<T>) -> bool {
        if f.rows() != other.dim || f.cols() != self.dim {
            return false;
        }
        self.action.iter().zip(&other.action).all(|(a, b)| f.mul(a).ok() == b.mul(f).ok())
    }

    /// Basis of `Hom_A(self, other)`.
    pub fn hom_basis(&self, other: &FDModule<T>) -> Vec<SparseMatrix<T>> {
        let (m, n) = (self.dim, other.dim);
        if m == 0 || n == 0 {
            return Vec::new();
        }
        // unknown X[r][c] at r m + c; equations (X A - B X)[r][c] = 0
        let mut rows = Vec::new();
        for (a, b) in self.action.iter().zip(&other.action) {
            let at = a.to_dense();
            let bt = b.to_dense();
            for r in 0..n {
                for c in 0..m {
                    let mut eq = SparseVec::zero();
                    for k in 0..m {
                        if !at[k][c].is_zero() {
                            eq.add_assign_scaled(&at[k][c], &SparseVec::unit(r * m + k));
                        }
                    }
                    for k in 0..n {
                        if !bt[r][k].is_zero() {
                            eq.add_assign_scaled(&-bt[r][k].clone(), &SparseVec::unit(k * m + c));
                        }
                    }
                    if !eq.is_zero() {
                        rows.push(eq);
                    }
                }
            }
        }
        let sys = SparseMatrix::from_rows(n * m, rows);
        sys.kernel_basis()
            .into_iter()
            .map(|v| {
                let t: Vec<(usize, usize, T)> = v.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i / m, i % m, x)).collect();
                SparseMatrix::from_triplets(n, m, t).expect("in range")
            })
            .collect()
    }

    /// Isomorphism search: random elements of the Hom space are tested for
    /// invertibility.
    pub fn isomorphism<R: Rng>(&self, other: &FDModule<T>, rng: &mut R) -> Option<SparseMatrix<T>> {
        if self.dim != other.dim {
            return None;
        }
        if self.dim == 0 {
            return Some(SparseMatrix::zero(0, 0));
        }
        let hom = self.hom_basis(other);
        if hom.is_empty() {
            return None;
        }
        for attempt in 0..16 {
            let f = if attempt < hom.len() { hom[attempt].clone() } else { random_combination(&hom, rng) };
            if f.rank() == self.dim {
                return Some(f);
            }
        }
        None
    }
}

pub(crate) fn random_combination<T: Scalar, R: Rng>(basis: &[SparseMatrix<T>], rng: &mut R) -> SparseMatrix<T> {
    let mut f = SparseMatrix::zero(basis[0].rows(), basis[0].cols());
    for h in basis {
        f = f.add(&h.scale(&T::from_int(rng.gen_range(-50..=50)))).expect("same shape");
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;
    use rand::SeedableRng;

    #[test]
    fn regular_module_is_a_module() {
        let a = FinDimAlgebra::<Q>::upper_triangular(2);
        let m = a.regular_module();
        FDModule::new(&a, "check", m.dim(), m.action().to_vec()).unwrap();
    }

    #[test]
    fn bad_action_is_rejected() {
        let a = FinDimAlgebra::<Q>::truncated_polynomial(2);
        // x acting as the identity violates x^2 = 0
        let act = vec![SparseMatrix::identity(1), SparseMatrix::identity(1)];
        assert!(FDModule::new(&a, "bad", 1, act).is_err());
    }

    #[test]
    fn hom_spaces_over_dual_numbers() {
        let a = FinDimAlgebra::<Q>::truncated_polynomial(2);
        let reg = a.regular_module();
        assert_eq!(reg.hom_basis(&reg).len(), 2);
        let (s, _) = reg.quotient(&reg.radical_submodule(&a)).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(reg.hom_basis(&s).len(), 1);
        assert_eq!(s.hom_basis(&reg).len(), 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(reg.isomorphism(&reg, &mut rng).is_some());
        assert!(s.isomorphism(&reg, &mut rng).is_none());
    }
}
