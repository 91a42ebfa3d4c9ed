//! Extension of a module `T` by a donor module `M` along a nilpotent
//! intertwiner.
//!
//! The input is a donor module `M`, a module `rad` holding the elements
//! `v_i q` (`i >= 0`) of a formal vector `q`, and a mode family `I` of type
//! `(rad, T -> M)`. On `R = q_{-1} T + M` the algebra acts by the donor
//! action on `M` and
//!
//! ```text
//! v_n (q_{-1} t) = q_{-1} (v_n t) + sum_{i >= 0} C(n,i) (v_i q)^I_{n-1-i} t
//! ```
//!
//! The verifiers check the commutator formula, translation covariance,
//! the iterate formula for `m >= 0`, that `(L(-1) q)^I_0` commutes with the
//! action, locality of the field
//!
//! ```text
//! q(z) t = sum_{r != 0} -(1/r) (L(-1) q)^I_r t z^{-r} + q_{-1} t
//! ```
//!
//! and finally build the intertwiner `J` on a source module `P` containing
//! `q` from
//!
//! ```text
//! J0(v_n q)_(s) = sum_j (-1)^j C(n,j) [ v_{n-j} q_(s+j) - (-1)^n q_(n+s-j) v_j ]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::findim::check_exact;
use crate::graded::GradedSpace;
use crate::intertwiner::{self, IntertwinerCheckConfig, LogIntertwiner, ModeFamily};
use crate::linalg::{SparseMatrix, SparseVec};
use crate::models::{build_heisenberg, VoaBuild};
use crate::modes::{self, sign, CheckConfig, Field};
use crate::module::{TruncatedModule, TruncatedVOA};
use crate::report::Report;
use crate::{Error, QMatrix, QVec, Result, Scalar, Q};

fn catch_window<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::OutOfWindow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn floor_i64(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().unwrap_or(0)
}

/// A module `P` with the distinguished vector `q`.
#[derive(Clone, Debug)]
pub struct SourceModule {
    pub module: Arc<TruncatedModule>,
    pub q: usize,
}

#[derive(Clone, Debug)]
pub struct ExtensionInput {
    pub name: String,
    pub t: Arc<TruncatedModule>,
    pub donor: Arc<TruncatedModule>,
    pub rad: Arc<TruncatedModule>,
    pub q_weight: Q,
    /// `v_i q` in `rad` for an algebra basis vector `v` and `i >= 0`;
    /// absent entries are zero.
    pub vq: BTreeMap<(usize, i64), QVec>,
    /// Mode family of type `(rad, T -> donor)`.
    pub i_op: ModeFamily,
    /// Window of `R`.
    pub cutoff: Q,
    pub source: Option<SourceModule>,
}

impl ExtensionInput {
    fn validate_shape(&self, voa: &TruncatedVOA) -> Result<()> {
        let i = &self.i_op;
        if *i.w != *self.rad || *i.u != *self.t || *i.t != *self.donor {
            return Err(Error::InvalidDonor("I must have type (rad, T -> M)".into()));
        }
        if &self.cutoff > self.donor.cutoff() {
            return Err(Error::InvalidDonor("window of R exceeds the donor window".into()));
        }
        if self.cutoff.clone() - &self.q_weight > *self.t.cutoff() {
            return Err(Error::InvalidDonor("window of R exceeds q_{-1} T".into()));
        }
        for ((v, k), x) in &self.vq {
            if *v >= voa.dim() || *k < 0 {
                return Err(Error::InvalidDonor(format!("table entry ({v}, {k}) out of range")));
            }
            let w = Q::from_int(voa.weight(*v) - k - 1) + &self.q_weight;
            if x.indices().any(|j| j >= self.rad.dim() || self.rad.weight(j) != &w) {
                return Err(Error::InvalidDonor(format!("v_i q for v={v}, i={k} is not of weight {w}")));
            }
        }
        Ok(())
    }

    /// Largest `i` with `v_i q` nonzero, per basis vector `v`.
    pub fn top_index(&self, v: usize) -> Option<i64> {
        self.vq.iter().filter(|((a, _), x)| *a == v && !x.is_zero()).map(|((_, i), _)| *i).max()
    }

    /// `v_i q` as a vector of `rad`.
    pub fn vq_vec(&self, v: &QVec, i: i64) -> QVec {
        let mut out = SparseVec::zero();
        for (a, c) in v.iter() {
            if let Some(x) = self.vq.get(&(a, i)) {
                out.add_assign_scaled(c, x);
            }
        }
        out
    }
}

/// `R = q_{-1} T + M` with its action table.
#[derive(Clone, Debug)]
pub struct ExtensionModule {
    pub input: ExtensionInput,
    pub module: Arc<TruncatedModule>,
    /// Index in `R` of `q_{-1} t`, per basis vector `t` of `T`.
    pub q_index: Vec<Option<usize>>,
    /// Index in `R` of each donor basis vector.
    pub m_index: Vec<Option<usize>>,
}

impl ExtensionModule {
    pub fn q_part(&self) -> impl Iterator<Item = usize> + '_ {
        self.q_index.iter().flatten().copied()
    }

    fn from_donor(&self, v: &QVec) -> QVec {
        v.reindex(|j| self.m_index[j])
    }

    fn from_t(&self, v: &QVec) -> Result<QVec> {
        if let Some(j) = v.indices().find(|&j| self.q_index[j].is_none()) {
            return Err(Error::OutOfWindow { weight: self.input.t.weight(j) + &self.input.q_weight });
        }
        Ok(v.reindex(|j| self.q_index[j]))
    }

    /// The projection `R -> T` killing `M`, restricted to the part of `T`
    /// inside the window.
    pub fn projection(&self) -> Result<(TruncatedModule, QMatrix)> {
        let cut = &self.input.cutoff - &self.input.q_weight;
        let (t, keep) = self.input.t.truncate(cut)?;
        let trip: Vec<(usize, usize, Q)> =
            keep.iter().enumerate().map(|(k, &j)| (k, self.q_index[j].expect("kept vectors lie in R"), Q::one())).collect();
        Ok((t, SparseMatrix::from_triplets(keep.len(), self.module.dim(), trip)?))
    }
}

/// Checks the donor data: Borcherds for `I`, compatibility of `D` with the
/// `L(0)` form, and a finite nilpotency order.
pub fn check_donor(voa: &TruncatedVOA, input: &ExtensionInput, cfg: &IntertwinerCheckConfig) -> Result<Report> {
    input.validate_shape(voa)?;
    let y = LogIntertwiner::new(format!("I[{}]", input.name), vec![input.i_op.clone()])?;
    let mut rep = Report::new("donor", input.name.clone());
    for inst in intertwiner::intertwiner_instances(&y, cfg) {
        match intertwiner::run_instance(&y, &inst)? {
            Some(r) => rep.residual(inst.check_name(), inst.descriptor(), &r, input.donor.space.labels()),
            None => rep.skip(),
        }
    }
    match input.i_op.compatibility_defect(voa)? {
        None => rep.pass("l0-compatible", "I".into()),
        Some(w) => rep.fail("l0-compatible", "I".into(), format!("D and the L(0) form differ at {w}")),
    }
    match intertwiner::nilpotency_order(voa, &input.i_op, 8) {
        Ok(k) => rep.pass("nilpotent", format!("order={k}")),
        Err(Error::BoundExceeded(b)) => rep.fail("nilpotent", "I".into(), format!("no vanishing power up to {b}")),
        Err(e) => return Err(e),
    }
    Ok(rep)
}

/// Builds `R` after checking the donor data.
pub fn build_extension(voa: &TruncatedVOA, input: ExtensionInput) -> Result<ExtensionModule> {
    let rep = check_donor(voa, &input, &IntertwinerCheckConfig::default())?;
    if let Some(f) = rep.failures().next() {
        return Err(Error::InvalidDonor(format!("{} {} fails", f.check, f.instance)));
    }
    build_extension_unchecked(voa, input)
}

/// Builds `R` from the action formula without validating `I`.
pub fn build_extension_unchecked(voa: &TruncatedVOA, input: ExtensionInput) -> Result<ExtensionModule> {
    input.validate_shape(voa)?;
    let (t, m) = (input.t.clone(), input.donor.clone());
    let cut = input.cutoff.clone();
    let mut items: Vec<(Q, usize, usize, String)> = Vec::new();
    for j in 0..t.dim() {
        let w = t.weight(j) + &input.q_weight;
        if w <= cut {
            items.push((w, 0, j, format!("q(-1)[{}]", t.space.label(j))));
        }
    }
    for j in 0..m.dim() {
        if m.weight(j) <= &cut {
            items.push((m.weight(j).clone(), 1, j, m.space.label(j).to_string()));
        }
    }
    items.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
    let mut q_index = vec![None; t.dim()];
    let mut m_index = vec![None; m.dim()];
    for (k, it) in items.iter().enumerate() {
        if it.1 == 0 {
            q_index[it.2] = Some(k);
        } else {
            m_index[it.2] = Some(k);
        }
    }
    let space = GradedSpace::new(items.iter().map(|i| i.0.clone()).collect(), items.iter().map(|i| i.3.clone()).collect(), cut)?;
    let probe = TruncatedModule::from_table("probe", space.clone(), voa.grading().clone(), Vec::new())?;
    let mut ext = ExtensionModule { input, module: Arc::new(probe.clone()), q_index, m_index };
    let mut table = Vec::new();
    for a in 0..voa.dim() {
        let top = ext.input.top_index(a);
        for n in probe.mode_range(a) {
            for (k, it) in items.iter().enumerate() {
                if !probe.in_window(a, n, k) {
                    continue;
                }
                let img = if it.1 == 1 {
                    ext.from_donor(&m.act(a, n, &SparseVec::unit(it.2))?)
                } else {
                    let et = SparseVec::unit(it.2);
                    let mut v = ext.from_t(&t.act(a, n, &et)?)?;
                    if let Some(top) = top {
                        for i in 0..=top {
                            let c = Q::binomial(n, i);
                            let Some(x) = ext.input.vq.get(&(a, i)) else { continue };
                            if c.is_zero() || x.is_zero() {
                                continue;
                            }
                            let y = ext.input.i_op.apply(x, &Q::from_int(n - 1 - i), &et)?;
                            v.add_assign_scaled(&c, &ext.from_donor(&y));
                        }
                    }
                    v
                };
                if !img.is_zero() {
                    table.push(((a, n, k), img));
                }
            }
        }
    }
    let name = format!("R[{}]", ext.input.name);
    let module = TruncatedModule::from_table(name, space, voa.grading().clone(), table)?;
    let module = if voa.omega.is_zero() { module } else { module.with_l0(&voa.omega)? };
    ext.module = Arc::new(module);
    Ok(ext)
}

/// Limits for the verifiers.
#[derive(Clone, Debug)]
pub struct ExtensionCheckConfig {
    /// Bound on `wt u + wt v + level` for commutator and iterate instances.
    pub budget: i64,
    pub locality_bound: usize,
    /// Window of the source module used for `J`.
    pub source_cutoff: Q,
}

impl Default for ExtensionCheckConfig {
    fn default() -> Self {
        ExtensionCheckConfig { budget: 4, locality_bound: 6, source_cutoff: Q::from_int(2) }
    }
}

/// `[u_m, v_n] x = sum_j C(m,j) (u_j v)_{m+n-j} x` on every `x = q_{-1} t`.
pub fn verify_commutativity(voa: &TruncatedVOA, r: &ExtensionModule, cfg: &ExtensionCheckConfig) -> Result<Report> {
    let mut rep = Report::new("ext-commutativity", r.module.name.clone());
    let qs: BTreeSet<usize> = r.q_part().collect();
    let labels = r.module.space.labels().to_vec();
    for inst in modes::borcherds_instances(voa, &r.module, 0, cfg.budget) {
        if inst.p != 0 || !qs.contains(&inst.u) {
            continue;
        }
        match modes::run_borcherds(voa, &r.module, &inst)? {
            Some(x) => rep.residual("commutativity", inst.descriptor(), &x, &labels),
            None => rep.skip(),
        }
    }
    Ok(rep)
}

/// `(L(-1) v)_n x = -n v_{n-1} x` on every `x = q_{-1} t`.
pub fn verify_translation(voa: &TruncatedVOA, r: &ExtensionModule) -> Result<Report> {
    let mut rep = Report::new("ext-translation", r.module.name.clone());
    let labels = r.module.space.labels().to_vec();
    for v in 0..voa.dim() {
        let Some(lv) = catch_window(voa.module.act_state(&voa.omega, 0, &SparseVec::unit(v)))? else {
            continue;
        };
        let range = r.module.mode_range(v);
        for n in *range.start()..=(*range.end() + 1) {
            for x in r.q_part() {
                let e = SparseVec::unit(x);
                let (Some(lhs), Some(rhs)) = (catch_window(r.module.act_state(&lv, n, &e))?, catch_window(r.module.act(v, n - 1, &e))?)
                else {
                    rep.skip();
                    continue;
                };
                let res = lhs.add_scaled(&Q::from_int(n), &rhs);
                rep.residual("translation", format!("v={v};n={n};x={x}"), &res, &labels);
            }
        }
    }
    Ok(rep)
}

/// `(v *_n u)_m x = (v_n u)_m x` for `m >= 0` and `x = q_{-1} t`, with the
/// left side from the normal product of the two fields on `R`.
pub fn verify_associativity(voa: &TruncatedVOA, r: &ExtensionModule, cfg: &ExtensionCheckConfig) -> Result<Report> {
    let mut rep = Report::new("ext-associativity", r.module.name.clone());
    let labels = r.module.space.labels().to_vec();
    let rm = &r.module;
    let fields: Vec<Field> =
        (0..voa.dim()).map(|a| Field::of_state(rm, &SparseVec::unit(a), format!("v{a}"))).collect::<Result<_>>()?;
    let qs: Vec<usize> = r.q_part().collect();
    for v in 0..voa.dim() {
        for u in 0..voa.dim() {
            let (wv, wu) = (voa.weight(v), voa.weight(u));
            if wv + wu > cfg.budget {
                continue;
            }
            for n in -2..=(wv + wu - 1) {
                let Some(vnu) = catch_window(voa.module.act(v, n, &SparseVec::unit(u)))? else {
                    continue;
                };
                let prod = modes::normal_product(&fields[v], &fields[v], n, &fields[u]);
                for m in 0..=prod.n_max.max(-1) {
                    for &x in &qs {
                        let e = SparseVec::unit(x);
                        let lhs = prod.apply(m, &e);
                        let rhs = catch_window(rm.act_state(&vnu, m, &e))?;
                        match (lhs, rhs) {
                            (Some(a), Some(b)) => rep.residual("associativity", format!("v={v};u={u};n={n};m={m};x={x}"), &a.sub(&b), &labels),
                            _ => rep.skip(),
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Modes of `q(z)`: `q_(s) t` for `t` in `T`, values in `R`.
#[derive(Clone, Debug)]
pub struct QField {
    /// `L(-1) q` in `rad`.
    pub lq: QVec,
}

impl QField {
    /// `q_(s) t`; `q_(-1) t = q_{-1} t`, otherwise `-(1/(s+1)) (L(-1)q)^I_{s+1} t`.
    pub fn mode(&self, r: &ExtensionModule, s: &Q, t: &QVec) -> Result<QVec> {
        let mut out = SparseVec::zero();
        let minus_one = -Q::one();
        for (j, c) in t.iter() {
            let h = r.input.t.weight(j) + &r.input.q_weight - s - Q::one();
            if &h > r.module.cutoff() {
                return Err(Error::OutOfWindow { weight: h });
            }
            if s == &minus_one {
                out.add_assign_scaled(c, &r.from_t(&SparseVec::unit(j))?);
            } else {
                let s1 = s + Q::one();
                let y = r.input.i_op.apply(&self.lq, &s1, &SparseVec::unit(j))?;
                out.add_assign_scaled(&(-(c / &s1)), &r.from_donor(&y));
            }
        }
        Ok(out)
    }
}

/// Zero residuals of `[v_n, (L(-1)q)^I_0]` on `T`, for every in-window
/// `v`, `n`, `t`.
pub fn q_field_certificate(voa: &TruncatedVOA, r: &ExtensionModule) -> Result<Report> {
    let mut rep = Report::new("commutant", r.module.name.clone());
    let inp = &r.input;
    let lq = lminus1_q(voa, inp);
    let labels = inp.donor.space.labels().to_vec();
    let zero = Q::zero();
    for v in 0..voa.dim() {
        for n in inp.t.mode_range(v) {
            for t in 0..inp.t.dim() {
                let et = SparseVec::unit(t);
                let a = catch_window(inp.i_op.apply(&lq, &zero, &et).and_then(|y| inp.donor.act(v, n, &y)))?;
                let b = catch_window(inp.t.act(v, n, &et).and_then(|y| inp.i_op.apply(&lq, &zero, &y)))?;
                match (a, b) {
                    (Some(a), Some(b)) => rep.residual("commutant", format!("v={v};n={n};t={t}"), &a.sub(&b), &labels),
                    _ => rep.skip(),
                }
            }
        }
    }
    Ok(rep)
}

fn lminus1_q(voa: &TruncatedVOA, inp: &ExtensionInput) -> QVec {
    inp.vq_vec(&voa.omega, 0)
}

/// Assembles `q(z)` after checking that `(L(-1)q)^I_0` commutes with the
/// action.
pub fn build_q_field(voa: &TruncatedVOA, r: &ExtensionModule) -> Result<QField> {
    let rep = q_field_certificate(voa, r)?;
    if let Some(f) = rep.failures().next() {
        return Err(Error::NonCommutingMode(f.instance.clone()));
    }
    Ok(QField { lq: lminus1_q(voa, &r.input) })
}

/// Smallest `k` with `(x - z)^k [a(z), q(x)] = 0` on every in-window
/// coefficient. The report also records the bound `N + 1`, `N` the largest
/// `i` with `a_i q` nonzero.
pub fn verify_locality_q(voa: &TruncatedVOA, r: &ExtensionModule, f: &QField, a: usize, bound: usize) -> Result<(usize, Report)> {
    let inp = &r.input;
    let rm = &r.module;
    let mut rep = Report::new("q-locality", format!("{} a={a}", rm.name));
    let wa = voa.weight(a);
    let min_r = rm.space.min_weight().cloned().unwrap_or_else(Q::zero);
    let max_r = rm.cutoff().clone();
    let levels: Vec<Q> = rm.space.levels().into_keys().collect();
    // coefficient rows: for each (t, h) the map n -> [a_n, q_(c-n)] t on
    // the n where both products stay inside the window
    let mut rows: Vec<(String, BTreeMap<i64, QVec>)> = Vec::new();
    let ts: Vec<usize> = (0..inp.t.dim()).filter(|&t| r.q_index[t].is_some()).collect();
    for &t in &ts {
        let et = SparseVec::unit(t);
        for h in &levels {
            let c = Q::from_int(wa - 2) + &inp.q_weight + inp.t.weight(t) - h;
            let n_hi = wa - 1 + floor_i64(&(&max_r - &min_r)) + 1;
            let s_hi = floor_i64(&(&inp.q_weight - Q::one() + inp.t.weight(t) - &min_r));
            let n_lo = floor_i64(&(&c - Q::from_int(s_hi))) - 1 - bound as i64;
            let mut known = BTreeMap::new();
            for n in n_lo..=n_hi {
                let s = &c - Q::from_int(n);
                let first = catch_window(f.mode(r, &s, &et).and_then(|y| rm.act(a, n, &y)))?;
                let second = catch_window(inp.t.act(a, n, &et).and_then(|y| f.mode(r, &s, &y)))?;
                match (first, second) {
                    (Some(x), Some(y)) => {
                        known.insert(n, x.sub(&y));
                    }
                    _ => rep.skip(),
                }
            }
            rows.push((format!("t={t};h={h}"), known));
        }
    }
    // the k-th difference at n, when every term is known
    let diff = |known: &BTreeMap<i64, QVec>, k: i64, n: i64| -> Option<QVec> {
        let mut acc = SparseVec::zero();
        for j in 0..=k {
            acc.add_assign_scaled(&(Q::binomial(k, j) * sign(j)), known.get(&(n + j))?);
        }
        Some(acc)
    };
    let mut order = None;
    for k in 0..=bound as i64 {
        let vanishes = rows.iter().all(|(_, known)| known.keys().all(|&n| diff(known, k, n).is_none_or(|d| d.is_zero())));
        if vanishes {
            order = Some(k);
            break;
        }
    }
    let Some(order) = order else {
        return Err(Error::BoundExceeded(bound));
    };
    for (inst, known) in &rows {
        if known.keys().any(|&n| diff(known, order, n).is_some()) {
            rep.pass("locality", inst.clone());
        }
    }
    let order = order as usize;
    let n_top = inp.top_index(a);
    let paper_bound = n_top.map_or(0, |n| n as usize + 1);
    if order <= paper_bound {
        rep.pass("order-bound", format!("order={order};N+1={paper_bound}"));
    } else {
        rep.fail("order-bound", format!("order={order};N+1={paper_bound}"), "locality order above N+1");
    }
    rep.data = serde_json::json!({ "order": order, "n_plus_one": paper_bound });
    Ok((order, rep))
}

/// `J0(v_n q)_(s) t` for `t` in `T`.
pub fn j0_mode(voa: &TruncatedVOA, r: &ExtensionModule, f: &QField, v: usize, n: i64, s: &Q, t: usize) -> Result<QVec> {
    let inp = &r.input;
    let et = SparseVec::unit(t);
    let wv = voa.weight(v);
    let min_r = r.module.space.min_weight().cloned().unwrap_or_else(Q::zero);
    let min_t = inp.t.space.min_weight().cloned().unwrap_or_else(Q::zero);
    let mut out = SparseVec::zero();
    // v_{n-j} q_(s+j) t: q_(s+j) t vanishes below the lowest weight of R
    let mut j1 = floor_i64(&(&inp.q_weight - s - Q::one() + inp.t.weight(t) - &min_r));
    // q_(n+s-j) v_j t: v_j t vanishes below the lowest weight of T
    let mut j2 = floor_i64(&(Q::from_int(wv - 1) + inp.t.weight(t) - &min_t));
    if n >= 0 {
        j1 = j1.min(n);
        j2 = j2.min(n);
    }
    for j in 0..=j1.max(-1) {
        let c = Q::binomial(n, j) * sign(j);
        if c.is_zero() {
            continue;
        }
        let x = f.mode(r, &(s + Q::from_int(j)), &et)?;
        if !x.is_zero() {
            out.add_assign_scaled(&c, &r.module.act(v, n - j, &x)?);
        }
    }
    for j in 0..=j2.max(-1) {
        let c = Q::binomial(n, j) * sign(j) * sign(n);
        if c.is_zero() {
            continue;
        }
        let y = inp.t.act(v, j, &et)?;
        if !y.is_zero() {
            out.add_assign_scaled(&-c, &f.mode(r, &(s + Q::from_int(n - j)), &y)?);
        }
    }
    Ok(out)
}

/// The intertwiner `J` of type `(P, T -> R)` built from `J0`, with the
/// report of every check made on the way.
pub fn extend_j(voa: &TruncatedVOA, r: &ExtensionModule, f: &QField, cfg: &ExtensionCheckConfig) -> Result<(LogIntertwiner, Report)> {
    let inp = &r.input;
    let src = inp.source.as_ref().ok_or_else(|| Error::PreconditionFailed("no source module with q".into()))?;
    if src.module.weight(src.q) != &inp.q_weight {
        return Err(Error::InvalidDonor("q has the wrong weight in the source module".into()));
    }
    let mut rep = Report::new("ext-j", r.module.name.clone());
    let (p_small, keep_p) = src.module.truncate(cfg.source_cutoff.clone())?;
    let mut pos_p = vec![None; src.module.dim()];
    for (k, &i) in keep_p.iter().enumerate() {
        pos_p[i] = Some(k);
    }
    let (t_small, keep_t) = inp.t.truncate(r.module.cutoff() - &inp.q_weight)?;
    let (p_small, t_small) = (Arc::new(p_small), Arc::new(t_small));
    let eq = SparseVec::unit(src.q);
    let levels: Vec<Q> = r.module.space.levels().into_keys().collect();

    // generators v_n q of P inside its window, grouped by weight, with
    // their J0 columns keyed by (s, t)
    type Cols = BTreeMap<(Q, usize), QVec>;
    let mut groups: BTreeMap<Q, Vec<(QVec, Cols)>> = BTreeMap::new();
    for v in 0..voa.dim() {
        for n in src.module.mode_range(v) {
            let Some(x) = catch_window(src.module.act(v, n, &eq))? else { continue };
            if x.is_zero() || x.indices().any(|i| pos_p[i].is_none()) {
                continue;
            }
            let wp = Q::from_int(voa.weight(v) - n - 1) + &inp.q_weight;
            let mut cols = Cols::new();
            let mut ok = true;
            'cols: for (ts, &t) in keep_t.iter().enumerate() {
                for h in &levels {
                    let s = &wp + inp.t.weight(t) - h - Q::one();
                    match catch_window(j0_mode(voa, r, f, v, n, &s, t))? {
                        Some(c) => {
                            if !c.is_zero() {
                                cols.insert((s, ts), c);
                            }
                        }
                        None => {
                            ok = false;
                            break 'cols;
                        }
                    }
                }
            }
            if !ok {
                rep.skip();
                continue;
            }
            // on the donor part J0 agrees with I, and J0(q) is q(z)
            let expected: Option<(&str, Box<dyn Fn(&Q, usize) -> Result<QVec> + '_>)> = if n >= 0 {
                let w = inp.vq.get(&(v, n)).cloned().unwrap_or_else(SparseVec::zero);
                Some(("restricts-to-I", Box::new(move |s: &Q, t: usize| Ok(r.from_donor(&inp.i_op.apply(&w, s, &SparseVec::unit(t))?)))))
            } else if v == voa.vacuum && n == -1 {
                Some(("vacuum", Box::new(|s: &Q, t: usize| f.mode(r, s, &SparseVec::unit(t)))))
            } else {
                None
            };
            if let Some((check, want)) = expected {
                let mut bad = None;
                for (ts, &t) in keep_t.iter().enumerate() {
                    for h in &levels {
                        let s = &wp + inp.t.weight(t) - h - Q::one();
                        let Some(w) = catch_window(want(&s, t))? else { continue };
                        let got = cols.get(&(s.clone(), ts)).cloned().unwrap_or_else(SparseVec::zero);
                        if got != w {
                            bad = Some(format!("s={s};t={t}"));
                        }
                    }
                }
                let inst = format!("v={v};n={n}");
                match bad {
                    None => rep.pass(check, inst),
                    Some(at) => rep.fail(check, inst, format!("J0 differs at {at}")),
                }
            }
            groups.entry(wp).or_default().push((x.reindex(|i| pos_p[i]), cols));
        }
    }
    let mut j0 = ModeFamily::zero(p_small.clone(), t_small.clone(), r.module.clone());
    for (wp, gens) in &groups {
        let level = p_small.space.level(wp);
        let g = SparseMatrix::from_columns(p_small.dim(), &gens.iter().map(|g| g.0.clone()).collect::<Vec<_>>());
        if g.rank() < level.len() {
            return Err(Error::PreconditionFailed(format!("the vectors v_n q of weight {wp} do not span that level of P")));
        }
        let combine = |coeffs: &[Q]| {
            let mut acc = Cols::new();
            for (c, (_, cols)) in coeffs.iter().zip(gens) {
                if c.is_zero() {
                    continue;
                }
                for (key, col) in cols {
                    acc.entry(key.clone()).or_insert_with(SparseVec::zero).add_assign_scaled(c, col);
                }
            }
            acc.retain(|_, v| !v.is_zero());
            acc
        };
        for (k, kv) in g.kernel_basis().iter().enumerate() {
            let inst = format!("weight={wp};relation={k}");
            if combine(kv).is_empty() {
                rep.pass("well-defined", inst);
            } else {
                rep.fail("well-defined", inst, "J0 does not respect a linear relation among the v_n q");
            }
        }
        for &b in &level {
            let rhs: Vec<Q> = (0..p_small.dim()).map(|i| if i == b { Q::one() } else { Q::zero() }).collect();
            let coeffs = g.solve(&rhs).expect("the level is spanned");
            for ((s, ts), col) in combine(&coeffs) {
                j0.set(b, s, ts, col)?;
            }
        }
    }
    if let Some(lv) = p_small.space.levels().keys().find(|w| !groups.contains_key(*w)) {
        return Err(Error::PreconditionFailed(format!("no v_n q of weight {lv} is computable in the window")));
    }
    let order = intertwiner::nilpotency_order(voa, &j0, 8)?;
    rep.pass("nilpotent", format!("order={order}"));
    let j = intertwiner::reconstruct(voa, &j0, 8, format!("J[{}]", inp.name))?;
    rep.merge(intertwiner::check_axioms(voa, &j, &IntertwinerCheckConfig::default())?);
    Ok((j, rep))
}

/// `M` is a submodule, `R -> T` is a module map and
/// `0 -> M -> R -> T -> 0` is exact inside the window.
pub fn verify_exactness(r: &ExtensionModule) -> Result<Report> {
    let mut rep = Report::new("ext-exactness", r.module.name.clone());
    let (t, proj) = r.projection()?;
    match r.module.hom_defect(&t, &proj)? {
        None => rep.pass("projection", "R->T".into()),
        Some(k) => rep.fail("projection", "R->T".into(), format!("does not commute at {k:?}")),
    }
    let kept: Vec<usize> = (0..r.input.donor.dim()).filter(|&j| r.m_index[j].is_some()).collect();
    let trip: Vec<(usize, usize, Q)> = kept.iter().enumerate().map(|(k, &j)| (r.m_index[j].unwrap(), k, Q::one())).collect();
    let incl = SparseMatrix::from_triplets(r.module.dim(), kept.len(), trip)?;
    let cols: Vec<QVec> = kept.iter().map(|&j| SparseVec::unit(r.m_index[j].unwrap())).collect();
    let span = r.module.closure(&cols)?;
    if span.rank() == kept.len() {
        rep.pass("submodule", "M".into());
    } else {
        rep.fail("submodule", "M".into(), "the action leaves M");
    }
    let (dm, dr, dt) = (kept.len(), r.module.dim(), t.dim());
    let seq = check_exact(&[0, dm, dr, dt, 0], &[SparseMatrix::zero(dm, 0), incl, proj, SparseMatrix::zero(0, dt)])?;
    rep.merge(seq);
    Ok(rep)
}

/// Every verifier on one instance, merged.
pub fn verify_all(voa: &TruncatedVOA, r: &ExtensionModule, cfg: &ExtensionCheckConfig) -> Result<Report> {
    let mut rep = Report::new("extension", r.module.name.clone());
    rep.merge(verify_commutativity(voa, r, cfg)?);
    rep.merge(verify_translation(voa, r)?);
    rep.merge(verify_associativity(voa, r, cfg)?);
    rep.merge(verify_exactness(r)?);
    let cert = q_field_certificate(voa, r)?;
    let ok = cert.all_passed();
    rep.merge(cert);
    if !ok {
        return Ok(rep);
    }
    let f = build_q_field(voa, r)?;
    let gens: Vec<usize> = if voa.generators.is_empty() { (0..voa.dim()).collect() } else { voa.generators.clone() };
    for a in gens.into_iter().chain(std::iter::once(voa.vacuum)) {
        match verify_locality_q(voa, r, &f, a, cfg.locality_bound) {
            Ok((_, l)) => rep.merge(l),
            Err(Error::BoundExceeded(b)) => rep.fail("locality", format!("a={a}"), format!("no vanishing order up to {b}")),
            Err(e) => return Err(e),
        }
    }
    if r.input.source.is_some() {
        match extend_j(voa, r, &f, cfg) {
            Ok((_, j)) => rep.merge(j),
            Err(Error::NotNilpotent(b) | Error::BoundExceeded(b)) => rep.fail("ext-j", "J".into(), format!("J0 is not nilpotent within {b}")),
            Err(e) => return Err(e),
        }
    }
    Ok(rep)
}

/// Full module check of `R` (vacuum, derivative, Virasoro, Borcherds).
pub fn verify_module(voa: &TruncatedVOA, r: &ExtensionModule, budget: i64) -> Result<Report> {
    modes::check_module_axioms(voa, &r.module, &CheckConfig { budget, samples: 0, seed: 0 })
}

fn label_index(m: &TruncatedModule, label: &str) -> Option<usize> {
    m.space.labels().iter().position(|l| l == label)
}

/// The self-extension of the Heisenberg vacuum module: `P` is the Fock
/// module over a two-dimensional top with `a(0) = N`, `q` its top vector
/// with `N q != 0`, `rad` the submodule generated by `N q` (a copy of the
/// vacuum module) and `I` the vertex operator of `T = M = V`, read through
/// that copy.
pub fn heisenberg_toy(cutoff: i64, r_cutoff: i64) -> Result<(VoaBuild, ExtensionInput)> {
    let b = build_heisenberg(cutoff)?;
    let voa = &b.voa;
    let p = b.fock_jordan(Q::zero(), cutoff)?;
    let q = label_index(&p, "|e1>").ok_or_else(|| Error::InvalidArgument("no top vector e1".into()))?;
    let mut raw: BTreeMap<(usize, i64), QVec> = BTreeMap::new();
    for v in 0..voa.dim() {
        for i in 0..voa.weight(v).max(1) + 1 {
            if let Some(x) = catch_window(p.act(v, i, &SparseVec::unit(q)))? {
                if !x.is_zero() {
                    raw.insert((v, i), x);
                }
            }
        }
    }
    let gens: Vec<QVec> = raw.values().cloned().collect();
    let (rad, incl) = p.submodule(&gens)?;
    let basis: Vec<QVec> = incl.transpose().row_vectors().to_vec();
    let coords = |x: &QVec| -> Result<QVec> {
        let sol = incl.solve(&x.to_dense(p.dim())).ok_or_else(|| Error::InvalidArgument("v_i q outside rad".into()))?;
        Ok(SparseVec::from_dense(&sol))
    };
    let vq: BTreeMap<(usize, i64), QVec> = raw.iter().map(|(k, x)| Ok((*k, coords(x)?))).collect::<Result<_>>()?;
    // rad is spanned by monomials on e0: X|e0> corresponds to X|0>
    let to_vacuum = |j: usize| -> Result<usize> {
        let label = p.space.label(j).trim_end_matches("|e0>");
        let label = if label.is_empty() { "1" } else { label };
        label_index(&voa.module, label).ok_or_else(|| Error::InvalidArgument(format!("{} is not a descendant of e0", p.space.label(j))))
    };
    let mut phi = Vec::new();
    for row in &basis {
        let mut x = SparseVec::zero();
        for (j, c) in row.iter() {
            x.add_assign_scaled(c, &SparseVec::unit(to_vacuum(j)?));
        }
        phi.push(x);
    }
    let v_mod = Arc::new(voa.module.clone());
    let rad = Arc::new(rad);
    let mut i_op = ModeFamily::zero(rad.clone(), v_mod.clone(), v_mod.clone());
    for w in 0..rad.dim() {
        for (r, t) in i_op.positions_for(w) {
            if !r.is_integer() {
                continue;
            }
            let n = r.to_integer().to_i64().unwrap_or(0);
            if let Some(x) = catch_window(voa.module.act_state(&phi[w], n, &SparseVec::unit(t)))? {
                i_op.set(w, r, t, x)?;
            }
        }
    }
    let input = ExtensionInput {
        name: "heisenberg-self-extension".into(),
        t: v_mod.clone(),
        donor: v_mod,
        rad,
        q_weight: Q::zero(),
        vq,
        i_op,
        cutoff: Q::from_int(r_cutoff),
        source: Some(SourceModule { module: Arc::new(p), q }),
    };
    Ok((b, input))
}

/// `I = 0`: `R` is `T + M` with the diagonal action. The source module is
/// the algebra itself with `q` the vacuum, so `v_i q = 0` for `i >= 0`.
pub fn split_instance(voa: &TruncatedVOA, t: TruncatedModule, donor: TruncatedModule, cutoff: Q) -> Result<ExtensionInput> {
    let t = Arc::new(t);
    let donor = Arc::new(donor);
    let rad = Arc::new(intertwiner::zero_module_like(&voa.module)?);
    let i_op = ModeFamily::zero(rad.clone(), t.clone(), donor.clone());
    Ok(ExtensionInput {
        name: format!("split({} + {})", t.name, donor.name),
        t,
        donor,
        rad,
        q_weight: Q::zero(),
        vq: BTreeMap::new(),
        i_op,
        cutoff,
        source: Some(SourceModule { module: Arc::new(voa.module.clone()), q: voa.vacuum }),
    })
}

/// One changed donor entry.
#[derive(Clone, Debug)]
pub struct Mutation {
    pub descriptor: String,
    pub input: ExtensionInput,
}

/// `count` copies of `input`, each with one `I`-mode coefficient that
/// enters the action on `R` increased by 1.
pub fn mutate_i_modes(voa: &TruncatedVOA, input: &ExtensionInput, count: usize, seed: u64) -> Result<Vec<Mutation>> {
    let cut = &input.cutoff;
    let mut cand: BTreeSet<(usize, Q, usize, usize)> = BTreeSet::new();
    for ((v, i), x) in &input.vq {
        let _ = v;
        for w in x.indices() {
            for (r, t) in input.i_op.positions_for(w) {
                if input.t.weight(t) + &input.q_weight > *cut {
                    continue;
                }
                let h = input.i_op.target_weight(w, &r, t);
                if &h > cut || r.clone() + Q::from_int(*i) + Q::one() < Q::from_int(-voa.cutoff() - 2) {
                    continue;
                }
                for m in input.donor.space.level(&h) {
                    cand.insert((w, r.clone(), t, m));
                }
            }
        }
    }
    let mut cand: Vec<_> = cand.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cand.shuffle(&mut rng);
    let mut out = Vec::new();
    for k in 0..count {
        if cand.is_empty() {
            break;
        }
        let (w, r, t, m) = cand[k % cand.len()].clone();
        let delta = if rng.gen_bool(0.5) { Q::one() } else { -Q::one() };
        let mut inp = input.clone();
        let mut col = inp.i_op.column(w, &r, t)?;
        col.add_assign_scaled(&delta, &SparseVec::unit(m));
        inp.i_op.set(w, r.clone(), t, col)?;
        out.push(Mutation { descriptor: format!("w={w};r={r};t={t};m={m};delta={delta}"), input: inp });
    }
    Ok(out)
}
