//! Mode-action tables restricted to a weight window.
//!
//! A [`TruncatedModule`] stores `v_(n) e_j` for every basis vector `v` of the
//! algebra, every basis vector `e_j` of the module and every mode `n` whose
//! result has weight at most the cutoff. Entries absent from the table are
//! zero. Asking for a result above the cutoff is an [`Error::OutOfWindow`],
//! which instance enumerators treat as "skip", never as a failure.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::graded::{l0_split, GradedSpace, L0Structure, Weight};
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::{Error, QMatrix, QVec, Result, Scalar, Q};

/// Key of one table entry: algebra basis index, mathematical mode, module
/// basis index.
pub type ActionKey = (usize, i64, usize);

/// Weights of the acting algebra's basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraGrading {
    pub weights: Vec<i64>,
    pub labels: Vec<String>,
    pub cutoff: i64,
}

impl AlgebraGrading {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn indices_up_to(&self, w: i64) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(move |&i| self.weights[i] <= w)
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedModule {
    pub name: String,
    pub space: GradedSpace,
    pub algebra: Arc<AlgebraGrading>,
    pub l0: L0Structure,
    table: HashMap<ActionKey, QVec>,
}

impl PartialEq for TruncatedModule {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.algebra == other.algebra && self.l0 == other.l0 && self.table == other.table
    }
}

impl TruncatedModule {
    /// Assembles a module from table entries. Zero entries are dropped; the
    /// `L(0)` structure is filled in later by [`TruncatedModule::with_l0`].
    pub fn from_table(
        name: impl Into<String>,
        space: GradedSpace,
        algebra: Arc<AlgebraGrading>,
        table: impl IntoIterator<Item = (ActionKey, QVec)>,
    ) -> Result<Self> {
        let dim = space.dim();
        let mut map = HashMap::new();
        for (k, v) in table {
            if k.0 >= algebra.dim() || k.2 >= dim {
                return Err(Error::Shape(format!("table key {k:?} out of range")));
            }
            if let Some(i) = v.max_index() {
                if i >= dim {
                    return Err(Error::Shape(format!("table value for {k:?} out of range")));
                }
            }
            if !v.is_zero() {
                map.insert(k, v);
            }
        }
        Ok(TruncatedModule { name: name.into(), l0: L0Structure::semisimple(dim), space, algebra, table: map })
    }

    /// Derives the `L(0)` structure from the action of `omega_(1)`.
    pub fn with_l0(mut self, omega: &QVec) -> Result<Self> {
        let dim = self.dim();
        let mut cols = Vec::with_capacity(dim);
        for j in 0..dim {
            cols.push(self.act_state(omega, 1, &SparseVec::unit(j))?);
        }
        let op = SparseMatrix::from_columns(dim, &cols);
        let (_, l0) = l0_split(&op, &self.space)?;
        self.l0 = l0;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn cutoff(&self) -> &Weight {
        self.space.cutoff()
    }

    pub fn weight(&self, i: usize) -> &Weight {
        self.space.weight(i)
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Table entries in canonical order.
    pub fn entries(&self) -> Vec<(ActionKey, &QVec)> {
        let mut out: Vec<_> = self.table.iter().map(|(k, v)| (*k, v)).collect();
        out.sort_by_key(|a| a.0);
        out
    }

    pub fn entry_mut(&mut self, key: ActionKey) -> &mut QVec {
        self.table.entry(key).or_insert_with(SparseVec::zero)
    }

    /// Whether `v_(n) e_j` lands inside the window.
    pub fn in_window(&self, a: usize, n: i64, j: usize) -> bool {
        self.target_scaled(a, n, j) <= self.space.scaled_cutoff()
    }

    fn target_scaled(&self, a: usize, n: i64, j: usize) -> i64 {
        (self.algebra.weights[a] - n - 1) * self.space.denom() + self.space.scaled_weight(j)
    }

    fn window_error(&self, a: usize, n: i64, j: usize) -> Error {
        Error::OutOfWindow { weight: Q::from_frac(self.target_scaled(a, n, j), self.space.denom()) }
    }

    /// `v_(n) e_j` for a basis vector `v`.
    pub fn act_basis(&self, a: usize, n: i64, j: usize) -> Result<Option<&QVec>> {
        if a >= self.algebra.dim() {
            return Err(Error::OutOfWindow { weight: Q::from_int(self.algebra.cutoff + 1) });
        }
        if !self.in_window(a, n, j) {
            return Err(self.window_error(a, n, j));
        }
        Ok(self.table.get(&(a, n, j)))
    }

    /// `v_(n) u` for a basis vector `v`.
    pub fn act(&self, a: usize, n: i64, u: &QVec) -> Result<QVec> {
        let mut out = SparseVec::zero();
        for (j, c) in u.iter() {
            if let Some(v) = self.act_basis(a, n, j)? {
                out.add_assign_scaled(c, v);
            }
        }
        Ok(out)
    }

    /// `v_(n) u` for an arbitrary algebra element `v`.
    pub fn act_state(&self, v: &QVec, n: i64, u: &QVec) -> Result<QVec> {
        let mut out = SparseVec::zero();
        for (a, c) in v.iter() {
            let w = self.act(a, n, u)?;
            out.add_assign_scaled(c, &w);
        }
        Ok(out)
    }

    /// Matrix of `v_(n)` restricted to the basis vectors whose image is in
    /// the window; columns leaving the window are zero.
    pub fn mode_matrix(&self, a: usize, n: i64) -> QMatrix {
        let cols: Vec<QVec> = (0..self.dim())
            .map(|j| match self.act_basis(a, n, j) {
                Ok(Some(v)) => v.clone(),
                _ => SparseVec::zero(),
            })
            .collect();
        SparseMatrix::from_columns(self.dim(), &cols)
    }

    /// Modes `n` for which `v_(n)` can be nonzero on some in-window vector
    /// with an in-window result.
    pub fn mode_range(&self, a: usize) -> std::ops::RangeInclusive<i64> {
        let d = self.space.denom();
        let wa = self.algebra.weights[a];
        let (lo_w, hi_w) = match (self.space.weights().first(), self.space.weights().last()) {
            (Some(_), Some(_)) => (self.space.scaled_weight(0), self.space.scaled_weight(self.dim() - 1)),
            #[allow(clippy::reversed_empty_ranges)]
            _ => return 1..=0,
        };
        // result weight = wa - n - 1 + w must lie in [lo_w, cutoff]
        let n_max = wa - 1 + (hi_w - lo_w).div_euclid(d);
        let n_min = wa - 1 - (self.space.scaled_cutoff() - lo_w).div_euclid(d);
        n_min..=n_max
    }

    pub fn is_zero_module(&self) -> bool {
        self.dim() == 0
    }

    /// External direct sum; the basis of `self` comes first within each
    /// weight.
    pub fn direct_sum(&self, other: &TruncatedModule) -> Result<(TruncatedModule, Vec<usize>, Vec<usize>)> {
        if self.algebra != other.algebra {
            return Err(Error::InvalidArgument("summands are modules for different algebras".into()));
        }
        let cutoff = std::cmp::min(self.cutoff().clone(), other.cutoff().clone());
        let mut items: Vec<(Weight, usize, usize, String)> = Vec::new();
        for i in 0..self.dim() {
            if self.weight(i) <= &cutoff {
                items.push((self.weight(i).clone(), 0, i, self.space.label(i).to_string()));
            }
        }
        for i in 0..other.dim() {
            if other.weight(i) <= &cutoff {
                items.push((other.weight(i).clone(), 1, i, other.space.label(i).to_string()));
            }
        }
        items.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
        let mut left = vec![usize::MAX; self.dim()];
        let mut right = vec![usize::MAX; other.dim()];
        for (k, it) in items.iter().enumerate() {
            if it.1 == 0 {
                left[it.2] = k;
            } else {
                right[it.2] = k;
            }
        }
        let space = GradedSpace::new(
            items.iter().map(|i| i.0.clone()).collect(),
            items.iter().map(|i| i.3.clone()).collect(),
            cutoff,
        )?;
        let mut table = Vec::new();
        for (src, map) in [(self, &left), (other, &right)] {
            for ((a, n, j), v) in src.entries() {
                if map[j] == usize::MAX {
                    continue;
                }
                let img = v.reindex(|i| (map[i] != usize::MAX).then(|| map[i]));
                if img.nnz() != v.nnz() {
                    continue;
                }
                table.push(((a, n, map[j]), img));
            }
        }
        let mut m = TruncatedModule::from_table(format!("{} + {}", self.name, other.name), space, self.algebra.clone(), table)?;
        let mut nil = Vec::new();
        for (src, map) in [(self, &left), (other, &right)] {
            for (r, c, x) in src.l0.nilpotent.triplets() {
                if map[r] != usize::MAX && map[c] != usize::MAX {
                    nil.push((map[r], map[c], x));
                }
            }
        }
        m.l0 = L0Structure { nilpotent: SparseMatrix::from_triplets(m.dim(), m.dim(), nil)? };
        Ok((m, left, right))
    }

    /// The submodule spanned by `generators` and closed under every mode
    /// whose result stays in the window. Returns the submodule and the
    /// inclusion matrix (columns are the new basis in old coordinates).
    pub fn submodule(&self, generators: &[QVec]) -> Result<(TruncatedModule, QMatrix)> {
        let span = self.closure(generators)?;
        self.restrict_to(&span)
    }

    /// Smallest subspace containing `generators` and stable under all
    /// in-window modes, as a row space.
    pub fn closure(&self, generators: &[QVec]) -> Result<RowSpace<Q>> {
        let mut span = RowSpace::new(self.dim());
        let mut queue: Vec<QVec> = Vec::new();
        for g in generators {
            for part in self.homogeneous_parts(g) {
                if span.insert(&part) {
                    queue.push(part);
                }
            }
        }
        while let Some(v) = queue.pop() {
            for a in 0..self.algebra.dim() {
                for n in self.mode_range(a) {
                    let img = match self.act(a, n, &v) {
                        Ok(x) => x,
                        Err(Error::OutOfWindow { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    if img.is_zero() {
                        continue;
                    }
                    for part in self.homogeneous_parts(&img) {
                        if span.insert(&part) {
                            queue.push(part);
                        }
                    }
                }
            }
        }
        Ok(span)
    }

    /// Splits a vector into its components of fixed weight.
    pub fn homogeneous_parts(&self, v: &QVec) -> Vec<QVec> {
        let mut parts: BTreeMap<Weight, Vec<(usize, Q)>> = BTreeMap::new();
        for (i, c) in v.iter() {
            parts.entry(self.weight(i).clone()).or_default().push((i, c.clone()));
        }
        parts.into_values().map(SparseVec::from_pairs).collect()
    }

    /// The levels of weight at most `cutoff`, with the old index of every
    /// kept basis vector.
    pub fn truncate(&self, cutoff: Weight) -> Result<(TruncatedModule, Vec<usize>)> {
        if &cutoff > self.cutoff() {
            return Err(Error::InvalidArgument(format!("cannot widen the window from {} to {cutoff}", self.cutoff())));
        }
        let (space, keep) = self.space.restrict(cutoff);
        let mut pos = vec![usize::MAX; self.dim()];
        for (k, &i) in keep.iter().enumerate() {
            pos[i] = k;
        }
        let mut table = Vec::new();
        for ((a, n, j), v) in self.entries() {
            if pos[j] == usize::MAX || v.indices().any(|i| pos[i] == usize::MAX) {
                continue;
            }
            table.push(((a, n, pos[j]), v.reindex(|i| Some(pos[i]))));
        }
        let mut m = TruncatedModule::from_table(self.name.clone(), space, self.algebra.clone(), table)?;
        let nil: Vec<(usize, usize, Q)> = self
            .l0
            .nilpotent
            .triplets()
            .into_iter()
            .filter(|(r, c, _)| pos[*r] != usize::MAX && pos[*c] != usize::MAX)
            .map(|(r, c, x)| (pos[r], pos[c], x))
            .collect();
        m.l0 = L0Structure { nilpotent: SparseMatrix::from_triplets(m.dim(), m.dim(), nil)? };
        Ok((m, keep))
    }

    /// Restriction to a subspace which is stable under the in-window
    /// action and spanned by homogeneous vectors.
    pub fn restrict_to(&self, span: &RowSpace<Q>) -> Result<(TruncatedModule, QMatrix)> {
        // basis: canonical rows sorted by weight of their pivot
        let mut rows: Vec<QVec> = span.basis().cloned().collect();
        rows.sort_by(|a, b| {
            let (pa, pb) = (a.leading().unwrap().0, b.leading().unwrap().0);
            (self.weight(pa), pa).cmp(&(self.weight(pb), pb))
        });
        for r in &rows {
            let w = self.weight(r.leading().unwrap().0);
            if r.indices().any(|i| self.weight(i) != w) {
                return Err(Error::InvalidArgument("subspace is not spanned by homogeneous vectors".into()));
            }
        }
        let weights: Vec<Weight> = rows.iter().map(|r| self.weight(r.leading().unwrap().0).clone()).collect();
        let labels: Vec<String> = rows
            .iter()
            .map(|r| {
                let p = r.leading().unwrap().0;
                if r.nnz() == 1 {
                    self.space.label(p).to_string()
                } else {
                    format!("[{}]", self.space.label(p))
                }
            })
            .collect();
        let space = GradedSpace::new(weights, labels, self.cutoff().clone())?;
        let pivot_pos: HashMap<usize, usize> =
            rows.iter().enumerate().map(|(k, r)| (r.leading().unwrap().0, k)).collect();
        let coords = |v: &QVec| -> Result<QVec> {
            let (rem, coeffs) = span.reduce_with_coeffs(v);
            if !rem.is_zero() {
                return Err(Error::InvalidArgument("subspace is not stable under the action".into()));
            }
            Ok(SparseVec::from_pairs(coeffs.into_iter().map(|(p, c)| (pivot_pos[&p], c))))
        };
        let mut table = Vec::new();
        for (k, r) in rows.iter().enumerate() {
            for a in 0..self.algebra.dim() {
                for n in self.mode_range(a) {
                    let img = match self.act(a, n, r) {
                        Ok(x) => x,
                        Err(Error::OutOfWindow { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    if !img.is_zero() {
                        table.push(((a, n, k), coords(&img)?));
                    }
                }
            }
        }
        let mut m = TruncatedModule::from_table(format!("sub({})", self.name), space, self.algebra.clone(), table)?;
        let mut nil_cols = Vec::new();
        for r in &rows {
            nil_cols.push(coords(&self.l0.nilpotent.mul_sparse(r))?);
        }
        m.l0 = L0Structure { nilpotent: SparseMatrix::from_columns(rows.len(), &nil_cols) };
        let inclusion = SparseMatrix::from_columns(self.dim(), &rows);
        Ok((m, inclusion))
    }

    /// Quotient by a submodule spanned by homogeneous vectors. Returns the
    /// quotient and the projection matrix.
    pub fn quotient(&self, sub: &RowSpace<Q>) -> Result<(TruncatedModule, QMatrix)> {
        let keep = sub.non_pivots();
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let project = |v: &QVec| -> QVec {
            let r = sub.reduce(v);
            r.reindex(|i| pos.get(&i).copied())
        };
        let space = GradedSpace::new(
            keep.iter().map(|&i| self.weight(i).clone()).collect(),
            keep.iter().map(|&i| self.space.label(i).to_string()).collect(),
            self.cutoff().clone(),
        )?;
        let mut table = Vec::new();
        for ((a, n, j), v) in self.entries() {
            if let Some(&k) = pos.get(&j) {
                let img = project(v);
                if !img.is_zero() {
                    table.push(((a, n, k), img));
                }
            }
        }
        let mut m = TruncatedModule::from_table(format!("{}/sub", self.name), space, self.algebra.clone(), table)?;
        let nil_cols: Vec<QVec> =
            keep.iter().map(|&i| project(&self.l0.nilpotent.mul_sparse(&SparseVec::unit(i)))).collect();
        m.l0 = L0Structure { nilpotent: SparseMatrix::from_columns(keep.len(), &nil_cols) };
        let proj_cols: Vec<QVec> = (0..self.dim()).map(|i| project(&SparseVec::unit(i))).collect();
        Ok((m, SparseMatrix::from_columns(keep.len(), &proj_cols)))
    }

    /// Checks that a matrix `f: self -> other` commutes with every in-window
    /// mode. Returns the first offending `(a, n, j)`.
    pub fn hom_defect(&self, other: &TruncatedModule, f: &QMatrix) -> Result<Option<ActionKey>> {
        for j in 0..self.dim() {
            let e = SparseVec::unit(j);
            for a in 0..self.algebra.dim() {
                for n in self.mode_range(a).chain(other.mode_range(a)) {
                    let lhs = match self.act(a, n, &e) {
                        Ok(x) => f.mul_sparse(&x),
                        Err(Error::OutOfWindow { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    let rhs = match other.act(a, n, &f.mul_sparse(&e)) {
                        Ok(x) => x,
                        Err(Error::OutOfWindow { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    if lhs != rhs {
                        return Ok(Some((a, n, j)));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// A truncated vertex operator algebra: its adjoint module together with the
/// vacuum and conformal vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedVOA {
    pub module: TruncatedModule,
    pub vacuum: usize,
    pub omega: QVec,
    pub central_charge: Q,
    /// Basis indices of a strong generating set, when known.
    pub generators: Vec<usize>,
}

impl TruncatedVOA {
    pub fn new(module: TruncatedModule, vacuum: usize, omega: QVec, central_charge: Q) -> Result<Self> {
        let voa = TruncatedVOA { module, vacuum, omega, central_charge, generators: Vec::new() };
        voa.check_shape()?;
        Ok(voa)
    }

    fn check_shape(&self) -> Result<()> {
        let m = &self.module;
        let zero_level = m.space.level(&Q::zero());
        if zero_level.len() != 1 || zero_level[0] != self.vacuum {
            return Err(Error::AxiomViolation(format!(
                "weight-zero space has dimension {}, expected a one-dimensional space spanned by the vacuum",
                zero_level.len()
            )));
        }
        if m.space.weights().iter().any(|w| w < &Q::zero() || !w.is_integer()) {
            return Err(Error::AxiomViolation("weights must be nonnegative integers".into()));
        }
        if self.omega.indices().any(|i| m.weight(i) != &Q::from_int(2)) {
            return Err(Error::AxiomViolation("conformal vector is not of weight 2".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.module.dim()
    }

    /// Largest weight of a generator; without recorded generators every
    /// basis vector counts as one.
    pub fn max_generator_weight(&self) -> i64 {
        if self.generators.is_empty() {
            return self.grading().weights.iter().copied().max().unwrap_or(0);
        }
        self.generators.iter().map(|&g| self.weight(g)).max().unwrap_or(0)
    }

    pub fn cutoff(&self) -> i64 {
        self.module.algebra.cutoff
    }

    pub fn grading(&self) -> &Arc<AlgebraGrading> {
        &self.module.algebra
    }

    pub fn weight(&self, a: usize) -> i64 {
        self.module.algebra.weights[a]
    }

    pub fn vacuum_vec(&self) -> QVec {
        SparseVec::unit(self.vacuum)
    }

    /// `L(n) u = omega_(n+1) u` on a module for this algebra.
    pub fn virasoro(&self, m: &TruncatedModule, n: i64, u: &QVec) -> Result<QVec> {
        m.act_state(&self.omega, n + 1, u)
    }

    /// Basis indices of weight `w`.
    pub fn level(&self, w: i64) -> Vec<usize> {
        self.module.space.level(&Q::from_int(w))
    }

    /// Restricted dual of `m`. The dual basis is the dual of `m`'s basis and
    /// `v'_(n)` is the transpose of
    /// `(-1)^{wt v} sum_j (1/j!) (L(1)^j v)_(2 wt v - j - n - 2)`.
    pub fn restricted_dual(&self, m: &TruncatedModule) -> Result<TruncatedModule> {
        if self.omega.is_zero() {
            return Err(Error::MissingAction("L(1) needs a conformal vector".into()));
        }
        if m.algebra != self.module.algebra {
            return Err(Error::InvalidArgument("module is not a module for this algebra".into()));
        }
        let va = &self.module;
        // L(1)^j v for each basis v, computed inside the algebra
        let mut l1_powers: Vec<Vec<QVec>> = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let mut pows = vec![SparseVec::unit(a)];
            loop {
                let next = va.act_state(&self.omega, 2, pows.last().unwrap())?;
                if next.is_zero() {
                    break;
                }
                pows.push(next);
            }
            l1_powers.push(pows);
        }
        let mut table: BTreeMap<ActionKey, QVec> = BTreeMap::new();
        for a in 0..self.dim() {
            let k = self.weight(a);
            let sign = if k % 2 == 0 { Q::one() } else { -Q::one() };
            for n in m.mode_range(a) {
                // operator on m of degree -(k - n - 1)
                let mut op_cols: Vec<QVec> = vec![SparseVec::zero(); m.dim()];
                let mut fact = Q::one();
                for (j, pj) in l1_powers[a].iter().enumerate() {
                    if j > 0 {
                        fact *= Q::from_int(j as i64);
                    }
                    let coeff = &sign / &fact;
                    let mode = 2 * k - j as i64 - n - 2;
                    for (t, col) in op_cols.iter_mut().enumerate() {
                        match m.act_state(pj, mode, &SparseVec::unit(t)) {
                            Ok(v) => col.add_assign_scaled(&coeff, &v),
                            Err(Error::OutOfWindow { .. }) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
                // transpose: entry (s, t) of op means <e'_s, op e_t>; so
                // v'_(n) e'_s has coefficient op[s][t] on e'_t
                for (t, col) in op_cols.iter().enumerate() {
                    for (s, c) in col.iter() {
                        if m.in_window(a, n, s) {
                            table.entry((a, n, s)).or_insert_with(SparseVec::zero).add_assign_scaled(c, &SparseVec::unit(t));
                        }
                    }
                }
            }
        }
        let mut dual = TruncatedModule::from_table(format!("{}'", m.name), m.space.clone(), m.algebra.clone(), table)?;
        dual.l0 = L0Structure { nilpotent: m.l0.nilpotent.transpose() };
        Ok(dual)
    }
}
