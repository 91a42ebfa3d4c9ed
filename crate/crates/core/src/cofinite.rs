//! `C_m` subspaces and the ordered-monomial spanning set.

use serde::Serialize;

use crate::linalg::{RowSpace, SparseVec};
use crate::module::{TruncatedModule, TruncatedVOA};
use crate::report::Report;
use crate::{Error, QVec, Result, Q};

/// A subspace of a module, kept as an echelon basis of homogeneous vectors.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub span: RowSpace<Q>,
}

impl Subspace {
    pub fn new(dim: usize) -> Self {
        Subspace { span: RowSpace::new(dim) }
    }

    pub fn full(dim: usize) -> Self {
        let mut s = Subspace::new(dim);
        for i in 0..dim {
            s.span.insert(&SparseVec::unit(i));
        }
        s
    }

    pub fn from_vectors(dim: usize, vs: &[QVec]) -> Self {
        let mut s = Subspace::new(dim);
        for v in vs {
            s.span.insert(v);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.span.rank()
    }

    pub fn codim(&self) -> usize {
        self.span.ambient_dim() - self.span.rank()
    }

    pub fn contains(&self, v: &QVec) -> bool {
        self.span.contains(v)
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for v in other.span.basis() {
            s.span.insert(v);
        }
        s
    }

    /// Dimension of the part of the subspace inside the given basis indices
    /// (for a subspace spanned by vectors supported on levels).
    pub fn dim_within(&self, indices: &[usize]) -> usize {
        self.span.basis().filter(|r| r.indices().all(|i| indices.contains(&i))).count()
    }
}

/// `C_m(W)`: the span of `v_(-m) w` with `wt v > 0`, together with the
/// dimension of `W / C_m(W)` inside the window.
pub fn cm_subspace(voa: &TruncatedVOA, w: &TruncatedModule, m: i64) -> Result<(Subspace, usize)> {
    if m < 1 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let mut s = Subspace::new(w.dim());
    for a in 0..voa.dim() {
        if voa.weight(a) == 0 {
            continue;
        }
        for j in 0..w.dim() {
            match w.act_basis(a, -m, j) {
                Ok(Some(v)) => {
                    s.span.insert(v);
                }
                Ok(None) | Err(Error::OutOfWindow { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let q = s.codim();
    Ok((s, q))
}

/// Quotient dimensions of `W / C_m(W)` at several cutoffs.
#[derive(Clone, Debug, Serialize)]
pub struct CmTable {
    pub m: i64,
    pub cutoffs: Vec<i64>,
    pub dims: Vec<usize>,
    /// Constant over the last three cutoffs.
    pub stable: bool,
}

pub fn stable_tail(dims: &[usize]) -> bool {
    dims.len() >= 3 && dims[dims.len() - 3..].windows(2).all(|w| w[0] == w[1])
}

/// Homogeneous complement `B` of `sub` in the module: the basis vectors
/// left free by the echelon form, lowest weight first.
pub fn homogeneous_complement(w: &TruncatedModule, sub: &Subspace) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.dim()).collect();
    order.sort_by(|a, b| (w.weight(*a), *a).cmp(&(w.weight(*b), *b)));
    let mut acc = sub.clone();
    let mut out = Vec::new();
    for i in order {
        let e = SparseVec::unit(i);
        if acc.span.insert(&e) {
            out.push(i);
        }
    }
    out
}

/// Checks level by level that `{ b1_(n1) ... bk_(nk) g : bi in B, n1 < ... < nk }`
/// spans the submodule generated by `g`.
///
/// The vectors are produced by the recursion
/// `X_b = X_{b+1} + sum_{v in B} v_(b) X_{b+1}`, which collects ordered
/// products whose modes are all at least `b`.
pub fn c2_spanning_check(voa: &TruncatedVOA, w: &TruncatedModule, generator: &QVec, b2: &[usize]) -> Result<Report> {
    let mut rep = Report::new("c2-spanning", w.name.clone());
    let target = w.closure(std::slice::from_ref(generator))?;
    if generator.is_zero() {
        rep.pass("span", "level=all".into());
        return Ok(rep);
    }
    let b: Vec<usize> = b2.iter().copied().filter(|&a| a != voa.vacuum && voa.weight(a) > 0).collect();
    let span_top = w.space.scaled_cutoff();
    let d = w.space.denom();
    let gen_w = generator.indices().map(|i| w.space.scaled_weight(i)).min().unwrap_or(0);
    // modes below this can only produce vectors above the cutoff
    let lowest_mode = -((span_top - gen_w) / d) - 1;
    let highest_mode = b.iter().map(|&a| voa.weight(a)).max().unwrap_or(0) + (span_top - gen_w) / d;
    let mut layer: Vec<QVec> = vec![generator.clone()];
    let mut seen = RowSpace::new(w.dim());
    seen.insert(generator);
    for mode in (lowest_mode..=highest_mode).rev() {
        let mut next = layer.clone();
        for x in &layer {
            for &a in &b {
                match w.act(a, mode, x) {
                    Ok(y) if !y.is_zero() => {
                        if seen.insert(&y) {
                            next.push(y);
                        }
                    }
                    Ok(_) | Err(Error::OutOfWindow { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        layer = next;
    }
    let ordered = Subspace::from_vectors(w.dim(), &layer);
    for (wt, idx) in w.space.levels() {
        let need = target.basis().filter(|r| r.indices().all(|i| idx.contains(&i))).count();
        let have = ordered.dim_within(&idx);
        let inst = format!("weight={wt}");
        if have >= need {
            rep.pass("span", inst);
        } else {
            rep.fail("span", inst, format!("ordered monomials span {have} of {need} dimensions"));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_heisenberg, build_ising};

    #[test]
    fn c1_leaves_only_the_vacuum() {
        let b = build_heisenberg(4).unwrap();
        assert_eq!(cm_subspace(&b.voa, &b.voa.module, 1).unwrap().1, 1);
        let i = build_ising(6).unwrap();
        assert_eq!(cm_subspace(&i.voa, &i.voa.module, 1).unwrap().1, 1);
    }

    #[test]
    fn heisenberg_c2_grows() {
        let dims: Vec<usize> = (4..=6)
            .map(|l| {
                let b = build_heisenberg(l).unwrap();
                cm_subspace(&b.voa, &b.voa.module, 2).unwrap().1
            })
            .collect();
        assert!(dims[0] < dims[1] && dims[1] < dims[2], "{dims:?}");
    }
}
