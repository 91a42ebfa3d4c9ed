//! Logarithmic intertwining operators at truncation.
//!
//! An intertwiner of type `(W, U -> T)` is stored as one [`ModeFamily`] per
//! power of `log z`:
//!
//! ```text
//! Y(w, z) u = sum_{i, r} w_(r,i) u z^{-r-1} log^i z
//! ```
//!
//! Only the columns `w_(r,i) e_u` whose weight `wt w - r - 1 + wt u` lies
//! inside the window of `T` are stored. With `N` the nilpotent part of
//! `L(0)` on each module, the derivative axiom and the `L(0)` bracket read
//!
//! ```text
//! (L(-1) w)_(s,i) = -s w_(s-1,i) + (i+1) w_(s-1,i+1)
//! (i+1) w_(r,i+1) u = N w_(r,i) u - w_(r,i) N u - (N w)_(r,i) u
//! ```
//!
//! so the log components are generated from the `log^0` part by
//! `D = z L(-1) - z d/dz`, acting on modes as
//! `(D y)(w)_(r) = y(L(-1) w)_(r+1) + (r+1) y(w)_(r)`, with
//! `Y^(i+1) = D Y^(i) / (i+1)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::{One, ToPrimitive, Zero};

use crate::graded::GradedSpace;
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::models::VoaBuild;
use crate::module::{TruncatedModule, TruncatedVOA};
use crate::modes::sign;
use crate::report::Report;
use crate::{Error, QMatrix, QVec, Result, Scalar, Q};

fn floor_i64(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().unwrap_or(if x < &Q::zero() { i64::MIN / 4 } else { i64::MAX / 4 })
}

fn same_module(a: &Arc<TruncatedModule>, b: &Arc<TruncatedModule>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn level_weights(m: &TruncatedModule) -> Vec<Q> {
    m.space.levels().into_keys().collect()
}

fn catch_window<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::OutOfWindow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One log component: the modes `w_(r)` of a single power of `log z`.
#[derive(Clone, Debug)]
pub struct ModeFamily {
    pub w: Arc<TruncatedModule>,
    pub u: Arc<TruncatedModule>,
    pub t: Arc<TruncatedModule>,
    cols: BTreeMap<(usize, Q, usize), QVec>,
}

impl PartialEq for ModeFamily {
    fn eq(&self, other: &Self) -> bool {
        same_module(&self.w, &other.w) && same_module(&self.u, &other.u) && same_module(&self.t, &other.t) && self.cols == other.cols
    }
}

impl ModeFamily {
    pub fn zero(w: Arc<TruncatedModule>, u: Arc<TruncatedModule>, t: Arc<TruncatedModule>) -> Self {
        ModeFamily { w, u, t, cols: BTreeMap::new() }
    }

    fn like(&self) -> Self {
        ModeFamily::zero(self.w.clone(), self.u.clone(), self.t.clone())
    }

    fn same_triple(&self, other: &ModeFamily) -> bool {
        same_module(&self.w, &other.w) && same_module(&self.u, &other.u) && same_module(&self.t, &other.t)
    }

    /// Weight of `w_(r) e_u`.
    pub fn target_weight(&self, w: usize, r: &Q, u: usize) -> Q {
        self.w.weight(w) - r - Q::one() + self.u.weight(u)
    }

    pub fn in_window(&self, w: usize, r: &Q, u: usize) -> bool {
        &self.target_weight(w, r, u) <= self.t.cutoff()
    }

    /// Stores `w_(r) e_u = v`, enforcing the degree law.
    pub fn set(&mut self, w: usize, r: Q, u: usize, v: QVec) -> Result<()> {
        if w >= self.w.dim() || u >= self.u.dim() {
            return Err(Error::Shape(format!("mode index ({w}, {u}) out of range")));
        }
        let h = self.target_weight(w, &r, u);
        if &h > self.t.cutoff() {
            if v.is_zero() {
                return Ok(());
            }
            return Err(Error::OutOfWindow { weight: h });
        }
        if let Some(i) = v.indices().find(|&i| i >= self.t.dim() || self.t.weight(i) != &h) {
            return Err(Error::AxiomViolation(format!(
                "mode w_({r}) sends {} (x) {} to {}, whose weight is not {h}",
                self.w.space.label(w),
                self.u.space.label(u),
                if i < self.t.dim() { self.t.space.label(i).to_string() } else { format!("#{i}") }
            )));
        }
        if v.is_zero() {
            self.cols.remove(&(w, r, u));
        } else {
            self.cols.insert((w, r, u), v);
        }
        Ok(())
    }

    /// `w_(r) e_u`; zero when absent, an error above the window.
    pub fn column(&self, w: usize, r: &Q, u: usize) -> Result<QVec> {
        let h = self.target_weight(w, r, u);
        if &h > self.t.cutoff() {
            return Err(Error::OutOfWindow { weight: h });
        }
        Ok(self.cols.get(&(w, r.clone(), u)).cloned().unwrap_or_else(SparseVec::zero))
    }

    /// `x_(r) y` for arbitrary vectors `x` of `W` and `y` of `U`.
    pub fn apply(&self, x: &QVec, r: &Q, y: &QVec) -> Result<QVec> {
        let mut out = SparseVec::zero();
        for (w, a) in x.iter() {
            for (u, b) in y.iter() {
                let c = self.column(w, r, u)?;
                if !c.is_zero() {
                    out.add_assign_scaled(&(a * b), &c);
                }
            }
        }
        Ok(out)
    }

    /// Every `(r, u)` for which `w_(r) e_u` can be nonzero and lies inside
    /// the window.
    pub fn positions_for(&self, w: usize) -> Vec<(Q, usize)> {
        let tw = level_weights(&self.t);
        let mut out = Vec::new();
        for u in 0..self.u.dim() {
            for h in &tw {
                out.push((self.w.weight(w) + self.u.weight(u) - h - Q::one(), u));
            }
        }
        out
    }

    /// The finitely many `r` that can occur for `w`.
    pub fn r_values(&self, w: usize) -> Vec<Q> {
        let set: BTreeSet<Q> = self.positions_for(w).into_iter().map(|(r, _)| r).collect();
        set.into_iter().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.cols.is_empty()
    }

    /// Zero on every `w` of weight at most `limit`.
    pub fn is_zero_below(&self, limit: &Q) -> bool {
        self.cols.keys().all(|(w, _, _)| self.w.weight(*w) > limit)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, Q, usize), &QVec)> + '_ {
        self.cols.iter()
    }

    pub fn nonzero_count(&self) -> usize {
        self.cols.len()
    }

    pub fn scale(&self, c: &Q) -> ModeFamily {
        let mut out = self.like();
        if !c.is_zero() {
            out.cols = self.cols.iter().map(|(k, v)| (k.clone(), v.scale(c))).collect();
        }
        out
    }

    pub fn add(&self, other: &ModeFamily) -> Result<ModeFamily> {
        if !self.same_triple(other) {
            return Err(Error::InvalidArgument("mode families of different types".into()));
        }
        let mut out = self.clone();
        for (k, v) in &other.cols {
            let e = out.cols.entry(k.clone()).or_insert_with(SparseVec::zero);
            e.add_assign_scaled(&Q::one(), v);
            if e.is_zero() {
                out.cols.remove(k);
            }
        }
        Ok(out)
    }

    /// `f o self` for a weight-preserving `f: T -> t2`.
    pub fn map_target(&self, f: &QMatrix, t2: Arc<TruncatedModule>) -> Result<ModeFamily> {
        if f.cols() != self.t.dim() || f.rows() != t2.dim() {
            return Err(Error::Shape(format!("map is {}x{}, expected {}x{}", f.rows(), f.cols(), t2.dim(), self.t.dim())));
        }
        if t2.cutoff() > self.t.cutoff() {
            return Err(Error::InvalidArgument("target window is larger than the source window".into()));
        }
        let mut out = ModeFamily::zero(self.w.clone(), self.u.clone(), t2);
        for ((w, r, u), v) in &self.cols {
            if out.in_window(*w, r, *u) {
                out.set(*w, r.clone(), *u, f.mul_sparse(v))?;
            }
        }
        Ok(out)
    }

    /// `N_T y - y N_U - y(N_W .)`, the `L(0)` side of the log relation.
    pub fn delta(&self) -> Result<ModeFamily> {
        let (nw, nu, nt) = (&self.w.l0.nilpotent, &self.u.l0.nilpotent, &self.t.l0.nilpotent);
        let mut out = self.like();
        for w in 0..self.w.dim() {
            let nw_w = nw.mul_sparse(&SparseVec::unit(w));
            for (r, u) in self.positions_for(w) {
                let eu = SparseVec::unit(u);
                let mut v = nt.mul_sparse(&self.column(w, &r, u)?);
                v.add_assign_scaled(&-Q::one(), &self.apply(&SparseVec::unit(w), &r, &nu.mul_sparse(&eu))?);
                v.add_assign_scaled(&-Q::one(), &self.apply(&nw_w, &r, &eu)?);
                out.set(w, r, u, v)?;
            }
        }
        Ok(out)
    }

    /// `D y` computed through `L(-1)` on `W`. Defined for the `w` with
    /// `L(-1) w` inside the window; the returned flags mark that domain.
    pub fn d_operator(&self, voa: &TruncatedVOA) -> Result<(ModeFamily, Vec<bool>)> {
        let mut out = self.like();
        let mut domain = vec![false; self.w.dim()];
        for w in 0..self.w.dim() {
            let Some(lw) = catch_window(voa.virasoro(&self.w, -1, &SparseVec::unit(w)))? else {
                continue;
            };
            domain[w] = true;
            for (r, u) in self.positions_for(w) {
                let r1 = &r + Q::one();
                let mut v = self.apply(&lw, &r1, &SparseVec::unit(u))?;
                v.add_assign_scaled(&r1, &self.column(w, &r, u)?);
                out.set(w, r, u, v)?;
            }
        }
        Ok((out, domain))
    }

    /// First position where `D` and the `L(0)` form disagree.
    pub fn compatibility_defect(&self, voa: &TruncatedVOA) -> Result<Option<String>> {
        let (d, domain) = self.d_operator(voa)?;
        let delta = self.delta()?;
        for w in (0..self.w.dim()).filter(|&w| domain[w]) {
            for (r, u) in self.positions_for(w) {
                if d.column(w, &r, u)? != delta.column(w, &r, u)? {
                    return Ok(Some(format!("w={w};r={r};u={u}")));
                }
            }
        }
        Ok(None)
    }
}

/// A logarithmic intertwining operator: components `Y^(0), ..., Y^(K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogIntertwiner {
    pub name: String,
    pub components: Vec<ModeFamily>,
}

impl LogIntertwiner {
    pub fn new(name: impl Into<String>, components: Vec<ModeFamily>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidArgument("an intertwiner needs at least one log component".into()));
        };
        if components.iter().any(|c| !c.same_triple(first)) {
            return Err(Error::InvalidArgument("log components of different types".into()));
        }
        Ok(LogIntertwiner { name: name.into(), components })
    }

    /// Builds from `(w, r, i, matrix U -> T)` blocks. Columns of a block
    /// whose weight leaves the window must be zero.
    pub fn from_modes(
        name: impl Into<String>,
        w: Arc<TruncatedModule>,
        u: Arc<TruncatedModule>,
        t: Arc<TruncatedModule>,
        modes: &[(usize, Q, usize, QMatrix)],
    ) -> Result<Self> {
        let k = modes.iter().map(|m| m.2).max().unwrap_or(0);
        let mut comps = vec![ModeFamily::zero(w, u.clone(), t.clone()); k + 1];
        for (wi, r, i, m) in modes {
            if m.rows() != t.dim() || m.cols() != u.dim() {
                return Err(Error::Shape(format!("mode block is {}x{}, expected {}x{}", m.rows(), m.cols(), t.dim(), u.dim())));
            }
            let mt = m.transpose();
            for (col, v) in mt.row_vectors().iter().enumerate() {
                let mut cur = comps[*i].column(*wi, r, col).or_else(|e| if v.is_zero() { Ok(SparseVec::zero()) } else { Err(e) })?;
                cur.add_assign_scaled(&Q::one(), v);
                comps[*i].set(*wi, r.clone(), col, cur)?;
            }
        }
        LogIntertwiner::new(name, comps)
    }

    /// Blocks `(w, r, i, matrix)` with at least one nonzero column.
    pub fn to_modes(&self) -> Vec<(usize, Q, usize, QMatrix)> {
        let mut out = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            let mut blocks: BTreeMap<(usize, Q), Vec<(usize, QVec)>> = BTreeMap::new();
            for ((w, r, u), v) in c.entries() {
                blocks.entry((*w, r.clone())).or_default().push((*u, v.clone()));
            }
            for ((w, r), cols) in blocks {
                let mut dense = vec![SparseVec::zero(); c.u.dim()];
                for (u, v) in cols {
                    dense[u] = v;
                }
                out.push((w, r, i, SparseMatrix::from_columns(c.t.dim(), &dense)));
            }
        }
        out
    }

    /// Declared log degree.
    pub fn k(&self) -> usize {
        self.components.len() - 1
    }

    pub fn w(&self) -> &Arc<TruncatedModule> {
        &self.components[0].w
    }

    pub fn u(&self) -> &Arc<TruncatedModule> {
        &self.components[0].u
    }

    pub fn t(&self) -> &Arc<TruncatedModule> {
        &self.components[0].t
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// Component `i`, zero above the declared degree.
    pub fn component(&self, i: usize) -> ModeFamily {
        self.components.get(i).cloned().unwrap_or_else(|| self.components[0].like())
    }

    pub fn map_target(&self, f: &QMatrix, t2: Arc<TruncatedModule>, name: impl Into<String>) -> Result<LogIntertwiner> {
        let comps = self.components.iter().map(|c| c.map_target(f, t2.clone())).collect::<Result<Vec<_>>>()?;
        LogIntertwiner::new(name, comps)
    }

    pub fn scale(&self, c: &Q, name: impl Into<String>) -> LogIntertwiner {
        LogIntertwiner { name: name.into(), components: self.components.iter().map(|x| x.scale(c)).collect() }
    }
}

/// A weight-preserving module map `f: T2 -> T1` with `f o Y2 = Y1`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntertwinerHom {
    pub source: Arc<TruncatedModule>,
    pub target: Arc<TruncatedModule>,
    pub matrix: QMatrix,
}

impl IntertwinerHom {
    /// `self o other`.
    pub fn compose(&self, other: &IntertwinerHom) -> Result<IntertwinerHom> {
        Ok(IntertwinerHom { source: other.source.clone(), target: self.target.clone(), matrix: self.matrix.mul(&other.matrix)? })
    }

    /// Checks `f o y2 = y1` on every common in-window column and that `f`
    /// commutes with the action.
    pub fn verify(&self, y2: &LogIntertwiner, y1: &LogIntertwiner) -> Result<Option<String>> {
        if let Some(k) = self.source.hom_defect(&self.target, &self.matrix)? {
            return Ok(Some(format!("does not commute with the action at {k:?}")));
        }
        let cut = std::cmp::min(self.source.cutoff(), self.target.cutoff()).clone();
        for i in 0..=y1.k().max(y2.k()) {
            let (c1, c2) = (y1.component(i), y2.component(i));
            for w in 0..c2.w.dim() {
                let mut pos = c2.positions_for(w);
                pos.extend(c1.positions_for(w));
                for (r, u) in pos {
                    if c2.target_weight(w, &r, u) > cut {
                        continue;
                    }
                    let lhs = self.matrix.mul_sparse(&c2.column(w, &r, u)?);
                    let rhs = c1.column(w, &r, u)?;
                    if lhs != rhs {
                        return Ok(Some(format!("w={w};r={r};u={u};i={i}")));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Which instances [`check_axioms`] enumerates.
#[derive(Clone, Debug)]
pub struct IntertwinerCheckConfig {
    /// Bound on `wt v + level(w) + level(u)` for Borcherds instances.
    pub budget: i64,
    pub p_range: (i64, i64),
    pub q_range: (i64, i64),
}

impl Default for IntertwinerCheckConfig {
    fn default() -> Self {
        IntertwinerCheckConfig { budget: 3, p_range: (-1, 2), q_range: (-1, 2) }
    }
}

/// One Borcherds instance for an intertwiner; `n` is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct IntertwinerInstance {
    pub v: usize,
    pub w: usize,
    pub u: usize,
    pub p: i64,
    pub q: i64,
    pub n: Q,
    pub k: usize,
}

impl IntertwinerInstance {
    pub fn descriptor(&self) -> String {
        format!("v={};w={};u={};p={};q={};n={};k={}", self.v, self.w, self.u, self.p, self.q, self.n, self.k)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut f: HashMap<&str, &str> = HashMap::new();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::parse("descriptor", format!("expected key=value, got {part:?}")))?;
            f.insert(k.trim(), v.trim());
        }
        let get = |k: &str| f.get(k).copied().ok_or_else(|| Error::parse("descriptor", format!("missing {k}")));
        let int = |k: &str| -> Result<i64> { get(k)?.parse().map_err(|_| Error::parse("descriptor", format!("{k} is not an integer"))) };
        Ok(IntertwinerInstance {
            v: int("v")? as usize,
            w: int("w")? as usize,
            u: int("u")? as usize,
            p: int("p")?,
            q: int("q")?,
            n: Q::parse_exact(get("n")?).ok_or_else(|| Error::parse("descriptor", "n is not a rational"))?,
            k: int("k")? as usize,
        })
    }

    pub fn check_name(&self) -> &'static str {
        if self.p == 0 {
            "commutator"
        } else if self.q == 0 {
            "associativity"
        } else {
            "borcherds"
        }
    }
}

/// Left minus right side of the Borcherds identity for one log component:
///
/// ```text
/// sum_i C(q,i) (v_(p+i) w)_(q+n-i) u
///   = sum_i (-1)^i C(p,i) [ v_(p+q-i) w_(n+i) u - (-1)^p w_(p+n-i) v_(q+i) u ]
/// ```
pub fn intertwiner_borcherds_residual(y: &ModeFamily, v: usize, w: usize, u: usize, p: i64, q: i64, n: &Q) -> Result<QVec> {
    let (mw, mu, mt) = match (y.w.space.min_weight(), y.u.space.min_weight(), y.t.space.min_weight()) {
        (Some(a), Some(b), Some(c)) => (a.clone(), b.clone(), c.clone()),
        _ => return Ok(SparseVec::zero()),
    };
    let wv = Q::from_int(y.w.algebra.weights[v]);
    let (ww, wu) = (y.w.weight(w).clone(), y.u.weight(u).clone());
    let (ew, eu) = (SparseVec::unit(w), SparseVec::unit(u));
    let one = Q::one();

    let mut lhs = SparseVec::zero();
    let mut imax = floor_i64(&(&wv + &ww - Q::from_int(p) - &one - &mw));
    if q >= 0 {
        imax = imax.min(q);
    }
    for i in 0..=imax.max(-1) {
        let c = Q::binomial(q, i);
        if c.is_zero() {
            continue;
        }
        let vw = y.w.act(v, p + i, &ew)?;
        if vw.is_zero() {
            continue;
        }
        lhs.add_assign_scaled(&c, &y.apply(&vw, &(Q::from_int(q - i) + n), &eu)?);
    }

    let mut rhs = SparseVec::zero();
    let mut imax1 = floor_i64(&(&ww + &wu - n - &one - &mt));
    let mut imax2 = floor_i64(&(&wv + &wu - Q::from_int(q) - &one - &mu));
    if p >= 0 {
        imax1 = imax1.min(p);
        imax2 = imax2.min(p);
    }
    for i in 0..=imax1.max(-1) {
        let c = Q::binomial(p, i) * sign(i);
        if c.is_zero() {
            continue;
        }
        let wu_ = y.column(w, &(n + Q::from_int(i)), u)?;
        if wu_.is_zero() {
            continue;
        }
        rhs.add_assign_scaled(&c, &y.t.act(v, p + q - i, &wu_)?);
    }
    for i in 0..=imax2.max(-1) {
        let c = Q::binomial(p, i) * sign(i) * sign(p);
        if c.is_zero() {
            continue;
        }
        let vu = y.u.act(v, q + i, &eu)?;
        if vu.is_zero() {
            continue;
        }
        rhs.add_assign_scaled(&-c, &y.apply(&ew, &(Q::from_int(p - i) + n), &vu)?);
    }
    Ok(lhs.sub(&rhs))
}

fn module_level(m: &TruncatedModule, i: usize) -> Q {
    m.weight(i) - m.space.min_weight().cloned().unwrap_or_else(Q::zero)
}

/// All in-window Borcherds instances within the budget, per log component.
pub fn intertwiner_instances(y: &LogIntertwiner, cfg: &IntertwinerCheckConfig) -> Vec<IntertwinerInstance> {
    let c = &y.components[0];
    let mut out = Vec::new();
    let tw = level_weights(&c.t);
    let grading = &c.w.algebra;
    for k in 0..=y.k() {
        for v in 0..grading.dim() {
            let wv = grading.weights[v];
            for w in 0..c.w.dim() {
                for u in 0..c.u.dim() {
                    let total = Q::from_int(wv) + module_level(&c.w, w) + module_level(&c.u, u);
                    if total > Q::from_int(cfg.budget) {
                        continue;
                    }
                    for p in cfg.p_range.0..=cfg.p_range.1 {
                        for q in cfg.q_range.0..=cfg.q_range.1 {
                            for h in &tw {
                                // result weight h = wt v + wt w + wt u - p - q - n - 2
                                let n = Q::from_int(wv - p - q - 2) + c.w.weight(w) + c.u.weight(u) - h;
                                out.push(IntertwinerInstance { v, w, u, p, q, n, k });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Runs one instance; `None` when it leaves the window.
pub fn run_instance(y: &LogIntertwiner, inst: &IntertwinerInstance) -> Result<Option<QVec>> {
    if inst.k > y.k() {
        return Err(Error::InvalidArgument(format!("log index {} above the declared degree {}", inst.k, y.k())));
    }
    let c = &y.components[inst.k];
    if inst.v >= c.w.algebra.dim() || inst.w >= c.w.dim() || inst.u >= c.u.dim() {
        return Err(Error::InvalidArgument("instance indices out of range".into()));
    }
    catch_window(intertwiner_borcherds_residual(c, inst.v, inst.w, inst.u, inst.p, inst.q, &inst.n))
}

/// Top component, truncation, derivative, log relation and Borcherds checks.
pub fn check_axioms(voa: &TruncatedVOA, y: &LogIntertwiner, cfg: &IntertwinerCheckConfig) -> Result<Report> {
    let mut rep = Report::new("intertwiner-axioms", y.name.clone());
    rep.data = serde_json::json!({ "K": y.k() });
    let labels = y.t().space.labels().to_vec();
    let k = y.k();
    if y.components[k].is_zero() && k > 0 {
        rep.fail("top-component", format!("i={k}"), format!("declared log degree {k} but component {k} vanishes"));
    } else {
        rep.pass("top-component", format!("i={k}"));
    }
    // lower truncation: nothing below the lowest weight of T
    let min_t = y.t().space.min_weight().cloned();
    for (i, c) in y.components.iter().enumerate() {
        let bad = c.entries().find(|((w, r, u), _)| min_t.as_ref().is_none_or(|m| &c.target_weight(*w, r, *u) < m));
        match bad {
            None => rep.pass("truncation", format!("i={i}")),
            Some(((w, r, u), _)) => rep.fail("truncation", format!("i={i}"), format!("w={w};r={r};u={u} lies below the lowest weight")),
        }
    }
    check_derivative(voa, y, &mut rep, &labels)?;
    check_log_relation(y, &mut rep, &labels)?;
    for inst in intertwiner_instances(y, cfg) {
        match run_instance(y, &inst)? {
            Some(r) => rep.residual(inst.check_name(), inst.descriptor(), &r, &labels),
            None => rep.skip(),
        }
    }
    Ok(rep)
}

fn check_derivative(voa: &TruncatedVOA, y: &LogIntertwiner, rep: &mut Report, labels: &[String]) -> Result<()> {
    for i in 0..=y.k() {
        let (c, next) = (&y.components[i], y.component(i + 1));
        for w in 0..c.w.dim() {
            let Some(lw) = catch_window(voa.virasoro(&c.w, -1, &SparseVec::unit(w)))? else {
                continue;
            };
            for (r, u) in c.positions_for(w) {
                // (L(-1) w)_(r+1, i) = -(r+1) w_(r,i) + (i+1) w_(r,i+1)
                let s = &r + Q::one();
                let eu = SparseVec::unit(u);
                let mut res = c.apply(&lw, &s, &eu)?;
                res.add_assign_scaled(&s, &c.column(w, &r, u)?);
                res.add_assign_scaled(&-Q::from_int(i as i64 + 1), &next.column(w, &r, u)?);
                rep.residual("derivative", format!("w={w};r={r};u={u};i={i}"), &res, labels);
            }
        }
    }
    Ok(())
}

fn check_log_relation(y: &LogIntertwiner, rep: &mut Report, labels: &[String]) -> Result<()> {
    for i in 0..=y.k() {
        let d = y.components[i].delta()?;
        let next = y.component(i + 1).scale(&Q::from_int(i as i64 + 1));
        let c = &y.components[i];
        for w in 0..c.w.dim() {
            for (r, u) in c.positions_for(w) {
                let res = next.column(w, &r, u)?.sub(&d.column(w, &r, u)?);
                rep.residual("log-relation", format!("w={w};r={r};u={u};i={i}"), &res, labels);
            }
        }
    }
    Ok(())
}

/// Component `m`, after verifying that components `0..m` are linked by
/// `(i+1) Y^(i+1) = D Y^(i)`, both through `L(-1)` and through `L(0)`.
pub fn log_component(voa: &TruncatedVOA, y: &LogIntertwiner, m: usize) -> Result<ModeFamily> {
    if m > y.k() {
        return Err(Error::InvalidArgument(format!("component {m} above the log degree {}", y.k())));
    }
    for i in 0..m {
        let c = &y.components[i];
        let next = y.components[i + 1].scale(&Q::from_int(i as i64 + 1));
        let (d, domain) = c.d_operator(voa)?;
        let delta = c.delta()?;
        for w in 0..c.w.dim() {
            for (r, u) in c.positions_for(w) {
                let want = next.column(w, &r, u)?;
                if domain[w] && d.column(w, &r, u)? != want {
                    return Err(Error::RelationViolated(format!("derivative form at w={w};r={r};u={u};i={i}")));
                }
                if delta.column(w, &r, u)? != want {
                    return Err(Error::RelationViolated(format!("L(0) form at w={w};r={r};u={u};i={i}")));
                }
            }
        }
    }
    Ok(y.components[m].clone())
}

/// Smallest `k` with `D^k y0 = 0`; the zero family has order 0.
///
/// When `D` agrees with the `L(0)` form on its domain the iteration runs on
/// the whole window. Otherwise `D^j y0` is only known for `wt w` at most
/// the cutoff minus `j`; a vanishing iterate is accepted only while that
/// range still covers every `w` on which `y0` is nonzero, and running out
/// of weights counts as exceeding the bound.
pub fn nilpotency_order(voa: &TruncatedVOA, y0: &ModeFamily, bound: usize) -> Result<usize> {
    if y0.is_zero() {
        return Ok(0);
    }
    if y0.compatibility_defect(voa)?.is_none() {
        let mut x = y0.clone();
        let mut k = 0;
        while !x.is_zero() {
            if k == bound {
                return Err(Error::BoundExceeded(bound));
            }
            x = x.delta()?;
            k += 1;
        }
        return Ok(k);
    }
    let mut x = y0.clone();
    let mut limit = y0.w.cutoff().clone();
    let support = y0.entries().map(|((w, _, _), _)| y0.w.weight(*w).clone()).max().unwrap_or_else(Q::zero);
    let mut k = 0;
    while !x.is_zero_below(&limit) {
        if k == bound || limit < support {
            return Err(Error::BoundExceeded(bound));
        }
        x = x.d_operator(voa)?.0;
        limit -= Q::one();
        k += 1;
    }
    Ok(k)
}

/// `Y^(i) = D^i y0 / i!` for `i` below the nilpotency order.
pub fn reconstruct(voa: &TruncatedVOA, y0: &ModeFamily, bound: usize, name: impl Into<String>) -> Result<LogIntertwiner> {
    if y0.compatibility_defect(voa)?.is_some() {
        return Err(Error::NotNilpotent(bound));
    }
    let order = match nilpotency_order(voa, y0, bound) {
        Ok(k) => k,
        Err(Error::BoundExceeded(b)) => return Err(Error::NotNilpotent(b)),
        Err(e) => return Err(e),
    };
    let mut comps = vec![y0.clone()];
    for i in 1..order {
        let next = comps[i - 1].delta()?.scale(&Q::from_frac(1, i as i64));
        comps.push(next);
    }
    LogIntertwiner::new(name, comps)
}

/// On modules with semisimple `L(0)` the log relation gives
/// `(i+1) Y^(i+1) = Delta Y^(i) = 0`, so only `K = 0` is possible. Each
/// declared component above `0` is checked against that conclusion.
pub fn lemma3(y: &LogIntertwiner) -> Result<Report> {
    let c = &y.components[0];
    for (name, m) in [("W", &c.w), ("U", &c.u), ("T", &c.t)] {
        if !m.l0.is_semisimple() {
            return Err(Error::PreconditionFailed(format!("L(0) is not semisimple on {name}")));
        }
    }
    let mut rep = Report::new("semisimple-log-degree", y.name.clone());
    for i in 0..=y.k() {
        let d = y.components[i].delta()?;
        if !d.is_zero() {
            rep.fail("delta-vanishes", format!("i={i}"), "L(0) form is nonzero although every N vanishes");
            continue;
        }
        rep.pass("delta-vanishes", format!("i={i}"));
        if i < y.k() {
            if y.components[i + 1].is_zero() {
                rep.pass("derived-zero", format!("i={}", i + 1));
            } else {
                rep.fail(
                    "derived-zero",
                    format!("i={}", i + 1),
                    format!("relation forces component {} to vanish but it is nonzero: contradiction", i + 1),
                );
            }
        }
    }
    rep.data = serde_json::json!({ "declared_k": y.k(), "derived_k": 0 });
    Ok(rep)
}

/// Whether the images `w_(r,i) u` span every level of `T`.
pub fn surjectivity(y: &LogIntertwiner) -> bool {
    image_span(y).rank() == y.t().dim()
}

/// Span of all mode images in `T`.
pub fn image_span(y: &LogIntertwiner) -> RowSpace<Q> {
    let mut s = RowSpace::new(y.t().dim());
    for c in &y.components {
        for (_, v) in c.entries() {
            s.insert(v);
        }
    }
    s
}

/// Solves for `f: T2 -> T1`, weight preserving, commuting with the action,
/// with `f o y2 = y1`.
pub fn dominates(voa: &TruncatedVOA, y2: &LogIntertwiner, y1: &LogIntertwiner) -> Result<Option<IntertwinerHom>> {
    if !same_module(y1.w(), y2.w()) || !same_module(y1.u(), y2.u()) {
        return Err(Error::InvalidArgument("intertwiners have different source modules".into()));
    }
    let (t1, t2) = (y1.t().clone(), y2.t().clone());
    // variables f[a][b] with wt a = wt b
    let mut var: HashMap<(usize, usize), usize> = HashMap::new();
    let levels1 = t1.space.levels();
    for (h, bs) in t2.space.levels() {
        if let Some(as_) = levels1.get(&h) {
            for &a in as_ {
                for &b in &bs {
                    let n = var.len();
                    var.insert((a, b), n);
                }
            }
        }
    }
    let mut rows: Vec<QVec> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    let cut = std::cmp::min(t1.cutoff(), t2.cutoff()).clone();
    for i in 0..=y1.k().max(y2.k()) {
        let (c1, c2) = (y1.component(i), y2.component(i));
        for w in 0..c1.w.dim() {
            for (r, u) in c1.positions_for(w) {
                let h = c1.target_weight(w, &r, u);
                if h > cut {
                    continue;
                }
                let (col1, col2) = (c1.column(w, &r, u)?, c2.column(w, &r, u)?);
                if col1.is_zero() && col2.is_zero() {
                    continue;
                }
                for a in t1.space.level(&h) {
                    let row = SparseVec::from_pairs(col2.iter().filter_map(|(b, x)| var.get(&(a, b)).map(|&k| (k, x.clone()))));
                    let target = col1.get(a);
                    if row.is_zero() && !target.is_zero() {
                        return Ok(None);
                    }
                    rows.push(row);
                    rhs.push(target);
                }
            }
        }
    }
    let gens: Vec<usize> = (0..voa.dim()).filter(|&a| voa.weight(a) <= voa.max_generator_weight()).collect();
    for &g in &gens {
        for n in t2.mode_range(g) {
            let m1 = t1.mode_matrix(g, n);
            for b in 0..t2.dim() {
                let Some(img) = catch_window(t2.act(g, n, &SparseVec::unit(b)))? else {
                    continue;
                };
                let h = t2.weight(b) - Q::from_int(n + 1 - voa.weight(g));
                if h > *t1.cutoff() {
                    continue;
                }
                // f(g_n e_b) - g_n f(e_b) = 0, row a
                for a in t1.space.level(&h) {
                    let mut row: Vec<(usize, Q)> = img.iter().filter_map(|(b2, x)| var.get(&(a, b2)).map(|&k| (k, x.clone()))).collect();
                    for (a2, x) in m1.row(a).iter() {
                        if let Some(&k) = var.get(&(a2, b)) {
                            row.push((k, -x.clone()));
                        }
                    }
                    let row = SparseVec::from_pairs(row);
                    if !row.is_zero() {
                        rows.push(row);
                        rhs.push(Q::zero());
                    }
                }
            }
        }
    }
    let sol = if var.is_empty() {
        if rhs.iter().all(|x| x.is_zero()) {
            Vec::new()
        } else {
            return Ok(None);
        }
    } else {
        let sys = SparseMatrix::from_rows(var.len(), rows);
        match sys.solve(&rhs) {
            Some(s) => s,
            None => return Ok(None),
        }
    };
    let trip: Vec<(usize, usize, Q)> =
        var.iter().filter(|(_, &k)| !sol[k].is_zero()).map(|(&(a, b), &k)| (a, b, sol[k].clone())).collect();
    let hom = IntertwinerHom { source: t2, target: t1, matrix: SparseMatrix::from_triplets(y1.t().dim(), y2.t().dim(), trip)? };
    if let Some(why) = hom.verify(y2, y1)? {
        return Err(Error::AxiomViolation(format!("solved map fails verification: {why}")));
    }
    Ok(Some(hom))
}

/// `(Y1, Y2)` into `T1 + T2`, corestricted to the submodule generated by
/// its images, with the two projections.
pub fn join(y1: &LogIntertwiner, y2: &LogIntertwiner) -> Result<(LogIntertwiner, IntertwinerHom, IntertwinerHom)> {
    if !same_module(y1.w(), y2.w()) || !same_module(y1.u(), y2.u()) {
        return Err(Error::InvalidArgument("intertwiners have different source modules".into()));
    }
    let (t1, t2) = (y1.t().clone(), y2.t().clone());
    let (sum, left, right) = t1.direct_sum(&t2)?;
    let sum = Arc::new(sum);
    let (w, u) = (y1.w().clone(), y1.u().clone());
    let kmax = y1.k().max(y2.k());
    let mut comps = Vec::new();
    let mut gens = Vec::new();
    for i in 0..=kmax {
        let (c1, c2) = (y1.component(i), y2.component(i));
        let mut c = ModeFamily::zero(w.clone(), u.clone(), sum.clone());
        for wi in 0..w.dim() {
            for (r, ui) in c.positions_for(wi) {
                let a = c1.column(wi, &r, ui)?.reindex(|j| (left[j] != usize::MAX).then(|| left[j]));
                let b = c2.column(wi, &r, ui)?.reindex(|j| (right[j] != usize::MAX).then(|| right[j]));
                let v = a.add_scaled(&Q::one(), &b);
                if !v.is_zero() {
                    gens.push(v.clone());
                }
                c.set(wi, r, ui, v)?;
            }
        }
        comps.push(c);
    }
    let span = sum.closure(&gens)?;
    let (t, incl) = sum.restrict_to(&span)?;
    let t = Arc::new(t);
    let basis: Vec<QVec> = incl.transpose().row_vectors().to_vec();
    let pivot_pos: HashMap<usize, usize> = basis.iter().enumerate().map(|(k, r)| (r.leading().unwrap().0, k)).collect();
    let coords = |v: &QVec| -> QVec {
        let (_, coeffs) = span.reduce_with_coeffs(v);
        SparseVec::from_pairs(coeffs.into_iter().map(|(p, c)| (pivot_pos[&p], c)))
    };
    let mut out = Vec::new();
    for c in &comps {
        let mut d = ModeFamily::zero(w.clone(), u.clone(), t.clone());
        for ((wi, r, ui), v) in c.entries() {
            d.set(*wi, r.clone(), *ui, coords(v))?;
        }
        out.push(d);
    }
    let proj = |map: &[usize], dim: usize| -> Result<QMatrix> {
        let trip: Vec<(usize, usize, Q)> =
            map.iter().enumerate().filter(|(_, &k)| k != usize::MAX).map(|(i, &k)| (i, k, Q::one())).collect();
        SparseMatrix::from_triplets(dim, sum.dim(), trip)?.mul(&incl)
    };
    let p1 = IntertwinerHom { source: t.clone(), target: t1.clone(), matrix: proj(&left, t1.dim())? };
    let p2 = IntertwinerHom { source: t.clone(), target: t2.clone(), matrix: proj(&right, t2.dim())? };
    let y = LogIntertwiner::new(format!("join({}, {})", y1.name, y2.name), out)?;
    Ok((y, p1, p2))
}

/// The bound `(K+1) dim(W / O~_{N,N}(W)) dim U(N)` at truncation, where
/// `U(N)` is the sum of the lowest `N+1` levels of `U`.
pub fn finiteness_bound(voa: &TruncatedVOA, y: &LogIntertwiner, big_n: i64) -> Result<Report> {
    let s = crate::zhu::o_tilde_span(voa, y.w(), big_n)?;
    let quot = s.codim();
    let u = y.u();
    let un = (0..u.dim()).filter(|&i| module_level(u, i) <= Q::from_int(big_n)).count();
    let bound = (y.k() + 1) * quot * un;
    let mut rep = Report::new("finiteness-bound", y.name.clone());
    rep.data = serde_json::json!({
        "N": big_n,
        "K": y.k(),
        "w_quotient_dim": quot,
        "u_dim": un,
        "bound": bound,
        "certified": false,
    });
    Ok(rep)
}

/// The vertex operator of a module `M`, as an intertwiner of type
/// `(V, M -> M)`.
pub fn module_vertex_operator(voa: &TruncatedVOA, v: &Arc<TruncatedModule>, m: &Arc<TruncatedModule>) -> Result<LogIntertwiner> {
    if **v != voa.module {
        return Err(Error::InvalidArgument("first module must be the algebra itself".into()));
    }
    let mut c = ModeFamily::zero(v.clone(), m.clone(), m.clone());
    for a in 0..v.dim() {
        for (r, j) in c.positions_for(a) {
            if !r.is_integer() {
                continue;
            }
            let n = r.to_integer().to_i64().ok_or_else(|| Error::InvalidArgument("mode out of range".into()))?;
            if let Some(x) = m.act_basis(a, n, j)? {
                c.set(a, r, j, x.clone())?;
            }
        }
    }
    LogIntertwiner::new(format!("Y[{}]", m.name), vec![c])
}

/// Heisenberg intertwiner `M(1, l) x F(m) -> F(l + m)`, where `F(x)` is the
/// Fock module over a two-dimensional top on which `a(0) = x + N`. Its
/// `log z` part is `l N` applied after the ordinary vertex operator, so
/// `K = 1` whenever `l` is nonzero.
///
/// On the lowest vector `e` of `M(1, l)`:
///
/// ```text
/// e_(r,0) = sum_{m-j = -r-1-lm} P_m s Q_j,   e_(r,1) = l e_(r,0) N
/// P_m = (l/m) sum_{n=1..m} a(-n) P_{m-n},    Q_j = (-l/j) sum_{n=1..j} a(n) Q_{j-n}
/// ```
///
/// with `s` the identification of the two Fock spaces. Descendants follow
/// from the iterate formula for `a(-n) w`.
pub fn heisenberg_log_example(build: &VoaBuild, lambda: &Q, mu: &Q, level: i64) -> Result<LogIntertwiner> {
    if lambda.is_zero() {
        return Err(Error::InvalidArgument("momentum of the first module must be nonzero".into()));
    }
    let w = Arc::new(build.fock(lambda.clone(), level)?);
    let u = Arc::new(build.fock_jordan(mu.clone(), level)?);
    let t = Arc::new(build.fock_jordan(lambda + mu, level)?);
    if u.space.labels() != t.space.labels() {
        return Err(Error::InvalidArgument("Fock bases do not match".into()));
    }
    let g = build.generator_state();
    let lowest_t = t.space.min_weight().cloned().unwrap_or_else(Q::zero);
    let shift = &lowest_t - u.space.min_weight().cloned().unwrap_or_else(Q::zero);
    let vec_weight = |m: &TruncatedModule, v: &QVec| v.indices().next().map(|i| m.weight(i).clone());

    let mut c0 = ModeFamily::zero(w.clone(), u.clone(), t.clone());
    let mut c1 = ModeFamily::zero(w.clone(), u.clone(), t.clone());
    let top = (0..w.dim()).find(|&i| module_level(&w, i).is_zero()).ok_or_else(|| Error::InvalidArgument("empty module".into()))?;

    let mut acc: BTreeMap<(Q, usize), (QVec, QVec)> = BTreeMap::new();
    for ui in 0..u.dim() {
        let mut qs = vec![SparseVec::unit(ui)];
        let lvl = floor_i64(&module_level(&u, ui));
        for j in 1..=lvl {
            let mut x = SparseVec::zero();
            for n in 1..=j {
                x.add_assign_scaled(&Q::one(), &u.act(g, n, &qs[(j - n) as usize])?);
            }
            qs.push(x.scale(&(-lambda / Q::from_int(j))));
        }
        for (j, x) in qs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let nx = u.act(g, 0, x)?.add_scaled(&-mu.clone(), x);
            let start = vec_weight(&u, x).unwrap() + &shift;
            let mut ps = vec![(x.clone(), nx.clone())];
            let mut m = 0i64;
            loop {
                if &start + Q::from_int(m) > *t.cutoff() {
                    break;
                }
                if m > 0 {
                    let mut a = SparseVec::zero();
                    let mut b = SparseVec::zero();
                    for n in 1..=m {
                        let (pa, pb) = &ps[(m - n) as usize];
                        a.add_assign_scaled(&Q::one(), &t.act(g, -n, pa)?);
                        b.add_assign_scaled(&Q::one(), &t.act(g, -n, pb)?);
                    }
                    let s = lambda / Q::from_int(m);
                    ps.push((a.scale(&s), b.scale(&s)));
                }
                let r = -(lambda * mu) - Q::from_int(m) + Q::from_int(j as i64) - Q::one();
                let e = acc.entry((r, ui)).or_insert_with(|| (SparseVec::zero(), SparseVec::zero()));
                let (pa, pb) = &ps[m as usize];
                e.0.add_assign_scaled(&Q::one(), pa);
                e.1.add_assign_scaled(lambda, pb);
                m += 1;
            }
        }
    }
    for ((r, ui), (a, b)) in acc {
        c0.set(top, r.clone(), ui, a)?;
        c1.set(top, r, ui, b)?;
    }

    // descendants: w = c^{-1} a(-n) w' with w' of lower level
    let mut order: Vec<usize> = (0..w.dim()).filter(|&i| i != top).collect();
    order.sort_by(|a, b| (w.weight(*a), *a).cmp(&(w.weight(*b), *b)));
    let min_u = u.space.min_weight().cloned().unwrap_or_else(Q::zero);
    for wi in order {
        let lvl = floor_i64(&module_level(&w, wi));
        let mut found = None;
        'search: for n in 1..=lvl {
            for wp in w.space.level(&(w.weight(wi) - Q::from_int(n))) {
                let img = w.act(g, -n, &SparseVec::unit(wp))?;
                if img.nnz() == 1 && img.get(wi) != Q::zero() {
                    found = Some((n, wp, img.get(wi)));
                    break 'search;
                }
            }
        }
        let (n, wp, coef) = found.ok_or_else(|| Error::InvalidArgument(format!("{} is not a monomial", w.space.label(wi))))?;
        let inv = Q::one() / coef;
        for c in [&mut c0, &mut c1] {
            for (r, ui) in c.positions_for(wi) {
                let eu = SparseVec::unit(ui);
                let kmax = floor_i64(&(w.weight(wp) - &r - Q::one() + u.weight(ui) - &lowest_t))
                    .max(floor_i64(&(u.weight(ui) - &min_u)));
                let mut v = SparseVec::zero();
                for k in 0..=kmax.max(-1) {
                    let cf = Q::binomial(-n, k) * sign(k);
                    let inner = c.column(wp, &(&r + Q::from_int(k)), ui)?;
                    if !inner.is_zero() {
                        v.add_assign_scaled(&cf, &t.act(g, -n - k, &inner)?);
                    }
                    let au = u.act(g, k, &eu)?;
                    if !au.is_zero() {
                        let x = c.apply(&SparseVec::unit(wp), &(&r - Q::from_int(n + k)), &au)?;
                        v.add_assign_scaled(&-(cf * sign(n)), &x);
                    }
                }
                c.set(wi, r, ui, v.scale(&inv))?;
            }
        }
    }
    LogIntertwiner::new(format!("log({lambda},{mu})"), vec![c0, c1])
}

/// The zero module over the algebra of `m`, with the same cutoff.
pub fn zero_module_like(m: &TruncatedModule) -> Result<TruncatedModule> {
    TruncatedModule::from_table("0", GradedSpace::zero(m.cutoff().clone()), m.algebra.clone(), Vec::new())
}

/// Intertwiners of type `(V, U -> .)` for `U = M(1, l) + M(1, m)` used to
/// exercise the order relations: `Y^U`, its two projections, `2 Y^U`,
/// the join of the projections and the zero intertwiner. Needs `l^2 = m^2`
/// so that both summands share one window.
pub fn heisenberg_family(build: &VoaBuild, lambda: &Q, mu: &Q, level: i64) -> Result<Vec<LogIntertwiner>> {
    let voa = &build.voa;
    let v = Arc::new(voa.module.clone());
    let m1 = build.fock(lambda.clone(), level)?;
    let m2 = build.fock(mu.clone(), level)?;
    if m1.cutoff() != m2.cutoff() {
        return Err(Error::InvalidArgument("the two Fock modules need equal lowest weights".into()));
    }
    let (sum, left, right) = m1.direct_sum(&m2)?;
    let (m1, m2, sum) = (Arc::new(m1), Arc::new(m2), Arc::new(sum));
    let y = module_vertex_operator(voa, &v, &sum)?;
    let proj = |map: &[usize], dim: usize| {
        let trip: Vec<(usize, usize, Q)> =
            map.iter().enumerate().filter(|(_, &k)| k != usize::MAX).map(|(i, &k)| (i, k, Q::one())).collect();
        SparseMatrix::from_triplets(dim, sum.dim(), trip)
    };
    let p1 = y.map_target(&proj(&left, m1.dim())?, m1.clone(), "p1.Y")?;
    let p2 = y.map_target(&proj(&right, m2.dim())?, m2.clone(), "p2.Y")?;
    let twice = y.scale(&Q::from_int(2), "2Y");
    let (j, _, _) = join(&p1, &p2)?;
    let zero = Arc::new(zero_module_like(&sum)?);
    let z = y.map_target(&SparseMatrix::zero(0, sum.dim()), zero, "0")?;
    Ok(vec![y, p1, p2, twice, j, z])
}
