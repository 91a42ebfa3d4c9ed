//! Zhu algebras `A_n(V) = V / O_n(V)` at truncation, and the module-side
//! subspace `O~_{N,N}(W)`.
//!
//! `O_n(V)` is spanned by
//! `a o_n b = sum_i C(wt a + n, i) a_(i - 2n - 2) b` and `(L(-1) + L(0)) a`,
//! and the product is
//! `a *_n b = sum_{m=0}^{n} (-1)^m C(m + n, n) sum_i C(wt a + n, i) a_(i - m - n - 1) b`.
//! Only elements lying entirely inside the window are used, so the computed
//! span is a subspace of the true one and quotient dimensions are upper
//! bounds.

use serde::Serialize;

use crate::cofinite::{cm_subspace, Subspace};
use crate::findim::FinDimAlgebra;
use crate::linalg::{RowSpace, SparseVec};
use crate::module::{TruncatedModule, TruncatedVOA};
use crate::report::Report;
use crate::{Error, QVec, Result, Scalar, Q};

/// Which elements enter `O_n(V)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZhuOptions {
    /// Use `a o_n b` also for `wt a = 0` (the vacuum).
    pub include_weight_zero: bool,
    /// Add `(L(-1) + L(0)) a`.
    pub with_translation: bool,
}

impl Default for ZhuOptions {
    fn default() -> Self {
        ZhuOptions { include_weight_zero: true, with_translation: true }
    }
}

fn skip_window<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::OutOfWindow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `sum_i C(wt a + n, i) a_(i - 2n - 2) u` on a module: the `o_n` element
/// when the module is the algebra itself, the `O~_{N,N}` element otherwise.
pub fn circ_product(voa: &TruncatedVOA, m: &TruncatedModule, a: usize, n: i64, u: &QVec) -> Result<QVec> {
    let wa = voa.weight(a);
    let mut out = SparseVec::zero();
    for i in 0..=wa + n {
        let c = Q::binomial(wa + n, i);
        out.add_assign_scaled(&c, &m.act(a, i - 2 * n - 2, u)?);
    }
    Ok(out)
}

/// `a *_n u`.
pub fn star_product(voa: &TruncatedVOA, a: usize, n: i64, u: &QVec) -> Result<QVec> {
    let wa = voa.weight(a);
    let mut out = SparseVec::zero();
    for m in 0..=n {
        let outer = Q::binomial(m + n, n) * if m % 2 == 0 { Q::from_int(1) } else { Q::from_int(-1) };
        for i in 0..=wa + n {
            let c = &outer * Q::binomial(wa + n, i);
            out.add_assign_scaled(&c, &voa.module.act(a, i - m - n - 1, u)?);
        }
    }
    Ok(out)
}

/// `x *_n u` for an arbitrary element `x`.
pub fn star_product_vec(voa: &TruncatedVOA, x: &QVec, n: i64, u: &QVec) -> Result<QVec> {
    let mut out = SparseVec::zero();
    for (a, c) in x.iter() {
        out.add_assign_scaled(c, &star_product(voa, a, n, u)?);
    }
    Ok(out)
}

/// Generators of `O_n(V)` inside weights `<= window`.
pub fn o_n_generators(voa: &TruncatedVOA, n: i64, window: i64, opts: ZhuOptions) -> Result<Vec<QVec>> {
    if n < 0 {
        return Err(Error::InvalidArgument("n must be nonnegative".into()));
    }
    let window = window.min(voa.cutoff());
    let m = &voa.module;
    let mut out = Vec::new();
    for a in 0..voa.dim() {
        let wa = voa.weight(a);
        if wa == 0 && !opts.include_weight_zero {
            continue;
        }
        for b in 0..voa.dim() {
            if wa + voa.weight(b) + 2 * n + 1 > window {
                continue;
            }
            if let Some(v) = skip_window(circ_product(voa, m, a, n, &SparseVec::unit(b)))? {
                if !v.is_zero() {
                    out.push(v);
                }
            }
        }
        if opts.with_translation && wa < window && !voa.omega.is_zero() {
            let e = SparseVec::unit(a);
            if let Some(l1) = skip_window(voa.virasoro(m, -1, &e))? {
                out.push(l1.add_scaled(&Q::from_int(wa), &e));
            }
        }
    }
    Ok(out)
}

/// Row space over coordinates ordered by decreasing weight, so that
/// leftover (non-pivot) coordinates are the lowest-weight ones.
#[derive(Clone, Debug)]
struct WeightOrdered {
    // position of basis index i in the ordering, and back
    pos: Vec<usize>,
    order: Vec<usize>,
    span: RowSpace<Q>,
}

impl WeightOrdered {
    fn new(voa: &TruncatedVOA) -> Self {
        let mut order: Vec<usize> = (0..voa.dim()).collect();
        order.sort_by_key(|&i| (-voa.weight(i), i));
        let mut pos = vec![0; order.len()];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        WeightOrdered { pos, span: RowSpace::new(order.len()), order }
    }

    fn to_ordered(&self, v: &QVec) -> QVec {
        v.reindex(|i| Some(self.pos[i]))
    }

    fn insert(&mut self, v: &QVec) -> bool {
        let w = self.to_ordered(v);
        self.span.insert(&w)
    }

    fn reduce(&self, v: &QVec) -> QVec {
        let r = self.span.reduce(&self.to_ordered(v));
        r.reindex(|p| Some(self.order[p]))
    }

    fn free(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.span.non_pivots().into_iter().map(|p| self.order[p]).collect();
        f.sort();
        f
    }
}

/// `O_n(V)` within weights `<= window`, as a subspace of `V`.
pub fn o_n_span(voa: &TruncatedVOA, n: i64, window: i64, opts: ZhuOptions) -> Result<Subspace> {
    let gens = o_n_generators(voa, n, window, opts)?;
    Ok(Subspace::from_vectors(voa.dim(), &gens))
}

/// A truncated Zhu algebra.
#[derive(Clone, Debug)]
pub struct ZhuQuotient {
    pub n: i64,
    pub cutoff: i64,
    /// `(window, dim V_{<=window} / O_n)` for the last three windows.
    pub dims: Vec<(i64, usize)>,
    pub stable: bool,
    /// Basis vectors of `V` whose classes form the quotient basis.
    pub reps: Vec<usize>,
    pub labels: Vec<String>,
    /// `table[i][j]` is the class of `reps[i] * reps[j]` in rep coordinates,
    /// `None` when the product leaves the window.
    pub table: Vec<Vec<Option<QVec>>>,
    pub unit: QVec,
    span: WeightOrdered,
}

impl ZhuQuotient {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Class of `v` in rep coordinates.
    pub fn reduce(&self, v: &QVec) -> QVec {
        let r = self.span.reduce(v);
        r.reindex(|i| self.reps.iter().position(|&k| k == i))
    }

    /// Lift of a class to `V`.
    pub fn lift(&self, x: &QVec) -> QVec {
        x.reindex(|i| Some(self.reps[i]))
    }

    pub fn is_complete(&self) -> bool {
        self.table.iter().flatten().all(Option::is_some)
    }

    pub fn mul(&self, x: &QVec, y: &QVec) -> Option<QVec> {
        let mut out = SparseVec::zero();
        for (i, a) in x.iter() {
            for (j, b) in y.iter() {
                out.add_assign_scaled(&(a * b), self.table[i][j].as_ref()?);
            }
        }
        Some(out)
    }

    /// Associativity on all basis triples whose products are known.
    pub fn check_associativity(&self) -> Report {
        let mut rep = Report::new("zhu-associativity", format!("A_{}", self.n));
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let (ei, ej, ek) = (SparseVec::unit(i), SparseVec::unit(j), SparseVec::unit(k));
                    let lhs = self.mul(&ei, &ej).and_then(|x| self.mul(&x, &ek));
                    let rhs = self.mul(&ej, &ek).and_then(|x| self.mul(&ei, &x));
                    let inst = format!("{}*{}*{}", self.labels[i], self.labels[j], self.labels[k]);
                    match (lhs, rhs) {
                        (Some(l), Some(r)) => rep.residual("associativity", inst, &l.sub(&r), &self.labels),
                        _ => rep.skip(),
                    }
                }
            }
        }
        rep
    }

    /// Unit laws for the class of the vacuum.
    pub fn check_unit(&self) -> Report {
        let mut rep = Report::new("zhu-unit", format!("A_{}", self.n));
        for i in 0..self.dim() {
            let e = SparseVec::unit(i);
            for (side, v) in [("left", self.mul(&self.unit, &e)), ("right", self.mul(&e, &self.unit))] {
                match v {
                    Some(v) => rep.residual("unit", format!("{side} {}", self.labels[i]), &v.sub(&e), &self.labels),
                    None => rep.skip(),
                }
            }
        }
        rep
    }

    pub fn is_commutative(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| self.table[i][j] == self.table[j][i]))
    }

    /// The quotient as a [`FinDimAlgebra`]; needs a complete table.
    pub fn algebra(&self) -> Result<FinDimAlgebra<Q>> {
        let mult = self
            .table
            .iter()
            .map(|row| row.iter().map(|x| x.clone().ok_or_else(|| Error::PreconditionFailed("product table has entries outside the window".into()))).collect())
            .collect::<Result<Vec<Vec<QVec>>>>()?;
        FinDimAlgebra::new(format!("A_{}", self.n), mult, self.unit.clone())
    }

    /// JSON summary: dimensions per window, the table with string
    /// rationals, the stabilization flag.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Entry {
            left: String,
            right: String,
            result: Vec<(String, String)>,
        }
        let mut entries = Vec::new();
        for (i, row) in self.table.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                if let Some(x) = x {
                    entries.push(Entry {
                        left: self.labels[i].clone(),
                        right: self.labels[j].clone(),
                        result: x.iter().map(|(k, c)| (self.labels[k].clone(), c.to_exact_string())).collect(),
                    });
                }
            }
        }
        serde_json::json!({
            "n": self.n,
            "cutoff": self.cutoff,
            "dimensions": self.dims.iter().map(|(w, d)| serde_json::json!({"cutoff": w, "dim": d})).collect::<Vec<_>>(),
            "stable": self.stable,
            "basis": self.labels,
            "complete": self.is_complete(),
            "table": entries,
        })
    }
}

/// `A_n(V)` at the algebra's cutoff, with dimensions at the two smaller
/// windows to judge stabilization.
pub fn zhu_algebra(voa: &TruncatedVOA, n: i64, opts: ZhuOptions) -> Result<ZhuQuotient> {
    let l = voa.cutoff();
    let mut dims = Vec::new();
    for w in (l - 2).max(0)..=l {
        let s = o_n_span(voa, n, w, opts)?;
        let below = (0..voa.dim()).filter(|&i| voa.weight(i) <= w).count();
        dims.push((w, below - s.dim()));
    }
    let stable = dims.len() == 3 && dims.windows(2).all(|p| p[0].1 == p[1].1);
    let mut span = WeightOrdered::new(voa);
    for g in o_n_generators(voa, n, l, opts)? {
        span.insert(&g);
    }
    let reps = span.free();
    let labels: Vec<String> = reps.iter().map(|&i| voa.module.space.label(i).to_string()).collect();
    let mut z = ZhuQuotient { n, cutoff: l, dims, stable, reps: reps.clone(), labels, table: Vec::new(), unit: SparseVec::zero(), span };
    z.unit = z.reduce(&voa.vacuum_vec());
    let mut table = Vec::with_capacity(reps.len());
    for &a in &reps {
        let mut row = Vec::with_capacity(reps.len());
        for &b in &reps {
            let p = skip_window(star_product(voa, a, n, &SparseVec::unit(b)))?;
            row.push(p.map(|p| z.reduce(&p)));
        }
        table.push(row);
    }
    z.table = table;
    Ok(z)
}

/// `o(v) = v_(wt v - 1)` on a module vector.
pub fn zero_mode(voa: &TruncatedVOA, m: &TruncatedModule, v: &QVec, u: &QVec) -> Result<QVec> {
    let mut out = SparseVec::zero();
    for (a, c) in v.iter() {
        out.add_assign_scaled(c, &m.act(a, voa.weight(a) - 1, u)?);
    }
    Ok(out)
}

/// Basis indices of the lowest `levels + 1` levels of a module.
fn low_levels(m: &TruncatedModule, levels: i64) -> Vec<usize> {
    let Some(top) = m.space.min_weight().cloned() else {
        return Vec::new();
    };
    let bound = top + Q::from_int(levels);
    (0..m.dim()).filter(|&i| m.weight(i) <= &bound).collect()
}

/// `o(a) o(b) = o(a * b)` on levels `0..=n` of `m` for all pairs of
/// quotient basis vectors, with `a * b` replaced by the lift of its class;
/// and `o(x) = 0` there for every in-window generator `x` of `O_n(V)`.
pub fn check_zero_modes(voa: &TruncatedVOA, z: &ZhuQuotient, m: &TruncatedModule, opts: ZhuOptions) -> Result<Report> {
    let mut rep = Report::new("zhu-zero-modes", m.name.clone());
    let low = low_levels(m, z.n);
    let labels = m.space.labels().to_vec();
    for (i, &a) in z.reps.iter().enumerate() {
        for (j, &b) in z.reps.iter().enumerate() {
            let Some(prod) = &z.table[i][j] else {
                rep.skip();
                continue;
            };
            let lifted = z.lift(prod);
            for &u in &low {
                let e = SparseVec::unit(u);
                let lhs = skip_window(zero_mode(voa, m, &SparseVec::unit(b), &e).and_then(|x| zero_mode(voa, m, &SparseVec::unit(a), &x)))?;
                let rhs = skip_window(zero_mode(voa, m, &lifted, &e))?;
                let inst = format!("a={};b={};u={}", z.labels[i], z.labels[j], labels[u]);
                match (lhs, rhs) {
                    (Some(l), Some(r)) => rep.residual("product", inst, &l.sub(&r), &labels),
                    _ => rep.skip(),
                }
            }
        }
    }
    for (k, g) in o_n_generators(voa, z.n, z.cutoff, opts)?.iter().enumerate() {
        for &u in &low {
            match skip_window(zero_mode(voa, m, g, &SparseVec::unit(u)))? {
                Some(r) => rep.residual("kills", format!("generator={k};u={}", labels[u]), &r, &labels),
                None => rep.skip(),
            }
        }
    }
    Ok(rep)
}

/// Remark-7 style reduction: the quotient of `A_n(V)` by the two-sided
/// ideal generated by `prod_i (omega - a_i)^s`, where `a_i` is the unique
/// number `lambda_i + j` with `j` an integer and `k <= a_i < k + 1`.
#[derive(Clone, Debug)]
pub struct ReducedAlgebra {
    pub shifted_weights: Vec<Q>,
    /// `(s, quotient dimension)` for `s = 1..=s_max`.
    pub dims: Vec<(usize, usize)>,
    /// Smallest `s` from which the dimension no longer changes up to `s_max`.
    pub stable_s: usize,
    pub algebra: FinDimAlgebra<Q>,
}

pub fn reduced_algebra(voa: &TruncatedVOA, z: &ZhuQuotient, weights: &[Q], k: i64, s_max: usize) -> Result<ReducedAlgebra> {
    if s_max == 0 {
        return Err(Error::InvalidArgument("s_max must be positive".into()));
    }
    let a = z.algebra()?;
    let omega = z.reduce(&voa.omega);
    let kq = Q::from_int(k);
    let shifted: Vec<Q> = weights
        .iter()
        .map(|l| {
            let j = (&kq - l).ceil();
            l + j
        })
        .collect();
    let factors: Vec<QVec> = shifted.iter().map(|ai| omega.add_scaled(&-ai.clone(), a.unit())).collect();
    let mut dims = Vec::new();
    let mut algebras = Vec::new();
    for s in 1..=s_max {
        let mut g = a.unit().clone();
        for f in &factors {
            g = a.mul(&g, &a.pow(f, s));
        }
        let ideal = a.two_sided_ideal(&[g]);
        let (q, _, _) = a.quotient(&ideal)?;
        dims.push((s, q.dim()));
        algebras.push(q);
    }
    let last = dims.last().unwrap().1;
    let stable_s = dims.iter().rev().take_while(|(_, d)| *d == last).last().map(|(s, _)| *s).unwrap_or(s_max);
    Ok(ReducedAlgebra { shifted_weights: shifted, dims, stable_s, algebra: algebras.swap_remove(stable_s - 1) })
}

/// `O~_{N,N}(W)` within the window.
pub fn o_tilde_span(voa: &TruncatedVOA, w: &TruncatedModule, big_n: i64) -> Result<Subspace> {
    if big_n < 0 {
        return Err(Error::InvalidArgument("N must be nonnegative".into()));
    }
    let mut s = Subspace::new(w.dim());
    for a in 0..voa.dim() {
        for j in 0..w.dim() {
            if let Some(v) = skip_window(circ_product(voa, w, a, big_n, &SparseVec::unit(j)))? {
                s.span.insert(&v);
            }
        }
    }
    Ok(s)
}

/// Checks `B + O~_{N,N}(W)` contains every level of weight at most
/// `L' = L - (2N + 2) * (largest generator weight)`, after confirming
/// `B + C_{2N+2}(W) = W` on every level.
pub fn b_plus_otilde_check(voa: &TruncatedVOA, w: &TruncatedModule, big_n: i64, b: &Subspace) -> Result<Report> {
    let (c, _) = cm_subspace(voa, w, 2 * big_n + 2)?;
    let bc = b.sum(&c);
    let labels = w.space.labels();
    for (wt, idx) in w.space.levels() {
        if let Some(&i) = idx.iter().find(|&&i| !bc.contains(&SparseVec::unit(i))) {
            return Err(Error::PreconditionFailed(format!("B + C_{}(W) misses {} at weight {wt}", 2 * big_n + 2, labels[i])));
        }
    }
    let o = o_tilde_span(voa, w, big_n)?;
    let total = b.sum(&o);
    let reduced = w.cutoff() - Q::from_int((2 * big_n + 2) * voa.max_generator_weight());
    let mut rep = Report::new("b-plus-otilde", w.name.clone());
    for (wt, idx) in w.space.levels() {
        if wt > reduced {
            continue;
        }
        let inst = format!("weight={wt}");
        match idx.iter().find(|&&i| !total.contains(&SparseVec::unit(i))) {
            None => rep.pass("spans", inst),
            Some(&i) => rep.fail("spans", inst, format!("{} is not in B + O~", labels[i])),
        }
    }
    rep.data = serde_json::json!({ "reduced_cutoff": reduced.to_exact_string(), "o_tilde_codim": o.codim() });
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_heisenberg, build_ising};

    #[test]
    fn heisenberg_circ_instance() {
        // a o_0 u = a(-2)u + a(-1)u
        let b = build_heisenberg(4).unwrap();
        let voa = &b.voa;
        let a = b.generator_state();
        let u = SparseVec::unit(a);
        let x = circ_product(voa, &voa.module, a, 0, &u).unwrap();
        let direct = voa.module.act(a, -2, &u).unwrap().add_scaled(&Q::from_int(1), &voa.module.act(a, -1, &u).unwrap());
        assert_eq!(x, direct);
        assert!(o_n_span(voa, 0, 4, ZhuOptions::default()).unwrap().contains(&x));
    }

    #[test]
    fn ising_zhu_algebra_has_dimension_three() {
        let b = build_ising(8).unwrap();
        let z = zhu_algebra(&b.voa, 0, ZhuOptions::default()).unwrap();
        assert_eq!(z.dims.iter().map(|d| d.1).collect::<Vec<_>>(), vec![3, 3, 3]);
        assert!(z.stable && z.is_complete() && z.is_commutative());
        assert!(z.check_associativity().all_passed());
        assert!(z.check_unit().all_passed());
        let a = z.algebra().unwrap();
        assert!(a.radical().is_empty());
    }

    #[test]
    fn heisenberg_zhu_algebra_grows() {
        let b = build_heisenberg(6).unwrap();
        let z = zhu_algebra(&b.voa, 0, ZhuOptions::default()).unwrap();
        assert_eq!(z.dims.iter().map(|d| d.1).collect::<Vec<_>>(), vec![5, 6, 7]);
        assert!(!z.stable);
        assert_eq!(z.unit, SparseVec::unit(0));
    }
}
