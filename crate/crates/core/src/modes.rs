//! Mode calculus: the Borcherds identity, commutators, fields, normal
//! products and locality.
//!
//! With `v, w` in the algebra, `u` in a module and integers `p, q, n`:
//!
//! ```text
//! sum_i C(q,i) (v_(p+i) w)_(q+n-i) u
//!   = sum_i (-1)^i C(p,i) [ v_(p+q-i) w_(n+i) u - (-1)^p w_(p+n-i) v_(q+i) u ]
//! ```
//!
//! `p = 0` is the commutator formula and `q = 0` the iterate formula.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::SparseVec;
use crate::module::{TruncatedModule, TruncatedVOA};
use crate::report::Report;
use crate::{Error, QVec, Result, Scalar, Q};

pub(crate) fn sign(k: i64) -> Q {
    if k.rem_euclid(2) == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}

/// Largest `i` for which `v_(i) x` can be nonzero when `x` is a vector of
/// weight at most `wt_x` in a module whose lowest weight is `min_w`
/// (all weights scaled by the module denominator).
fn top_mode(wt_v: i64, wt_x_scaled: i64, min_scaled: i64, denom: i64) -> i64 {
    wt_v - 1 + (wt_x_scaled - min_scaled).div_euclid(denom)
}

struct Ctx<'a> {
    m: &'a TruncatedModule,
    denom: i64,
    min_scaled: i64,
}

impl<'a> Ctx<'a> {
    fn new(m: &'a TruncatedModule) -> Self {
        let denom = m.space.denom();
        let min_scaled = if m.dim() > 0 { m.space.scaled_weight(0) } else { 0 };
        Ctx { m, denom, min_scaled }
    }

    fn max_scaled(&self, u: &QVec) -> Option<i64> {
        u.indices().map(|i| self.m.space.scaled_weight(i)).max()
    }

    /// Largest mode of `v` that can act nontrivially on `u`.
    fn top_on(&self, wt_v: i64, u: &QVec) -> Option<i64> {
        self.max_scaled(u).map(|s| top_mode(wt_v, s, self.min_scaled, self.denom))
    }

    /// `x_(n) u` for an algebra vector `x`.
    fn act(&self, x: &QVec, n: i64, u: &QVec) -> Result<QVec> {
        self.m.act_state(x, n, u)
    }
}

fn wt_of(voa: &TruncatedVOA, v: &QVec) -> Option<i64> {
    v.indices().map(|i| voa.weight(i)).max()
}

/// Left minus right side of the Borcherds identity for algebra elements
/// `v, w` acting on the module vector `u`.
pub fn borcherds_residual(voa: &TruncatedVOA, m: &TruncatedModule, v: &QVec, w: &QVec, u: &QVec, p: i64, q: i64, n: i64) -> Result<QVec> {
    let ctx = Ctx::new(m);
    let (Some(wv), Some(ww)) = (wt_of(voa, v), wt_of(voa, w)) else {
        return Ok(SparseVec::zero());
    };
    if u.is_zero() {
        return Ok(SparseVec::zero());
    }
    let va = &voa.module;
    let mut lhs = SparseVec::zero();
    // v_(p+i) w vanishes once p + i > wv + ww - 1
    let imax = wv + ww - 1 - p;
    let imax = if q >= 0 { imax.min(q) } else { imax };
    for i in 0..=imax.max(-1) {
        let c = Q::binomial(q, i);
        if c.is_zero() {
            continue;
        }
        let vw = va.act_state(v, p + i, w)?;
        if vw.is_zero() {
            continue;
        }
        let t = ctx.act(&vw, q + n - i, u)?;
        lhs.add_assign_scaled(&c, &t);
    }
    let mut rhs = SparseVec::zero();
    let sp = sign(p);
    // first sum: w_(n+i) u vanishes for large i
    let imax1 = ctx.top_on(ww, u).map_or(-1, |t| t - n);
    let imax1 = if p >= 0 { imax1.min(p) } else { imax1 };
    for i in 0..=imax1.max(-1) {
        let c = Q::binomial(p, i) * sign(i);
        if c.is_zero() {
            continue;
        }
        let wu = ctx.act(w, n + i, u)?;
        if wu.is_zero() {
            continue;
        }
        let t = ctx.act(v, p + q - i, &wu)?;
        rhs.add_assign_scaled(&c, &t);
    }
    let imax2 = ctx.top_on(wv, u).map_or(-1, |t| t - q);
    let imax2 = if p >= 0 { imax2.min(p) } else { imax2 };
    for i in 0..=imax2.max(-1) {
        let c = Q::binomial(p, i) * sign(i) * &sp;
        if c.is_zero() {
            continue;
        }
        let vu = ctx.act(v, q + i, u)?;
        if vu.is_zero() {
            continue;
        }
        let t = ctx.act(w, p + n - i, &vu)?;
        rhs.add_assign_scaled(&-c, &t);
    }
    Ok(lhs.sub(&rhs))
}

/// `[v_(m), w_(n)] u - sum_i C(m,i) (v_(i) w)_(m+n-i) u`.
pub fn commutator_expansion(voa: &TruncatedVOA, m: &TruncatedModule, v: &QVec, w: &QVec, u: &QVec, mm: i64, n: i64) -> Result<QVec> {
    borcherds_residual(voa, m, v, w, u, 0, mm, n)
}

/// The operator `sum_i C(m,i) (v_(i) w)_(m+n-i)` applied to `u`: the
/// commutator `[v_(m), w_(n)] u` computed from structure constants only.
pub fn derived_bracket(voa: &TruncatedVOA, m: &TruncatedModule, v: &QVec, w: &QVec, u: &QVec, mm: i64, n: i64) -> Result<QVec> {
    let Some(wv) = wt_of(voa, v) else { return Ok(SparseVec::zero()) };
    let Some(ww) = wt_of(voa, w) else { return Ok(SparseVec::zero()) };
    let mut out = SparseVec::zero();
    let imax = wv + ww - 1;
    let imax = if mm >= 0 { imax.min(mm) } else { imax };
    for i in 0..=imax.max(-1) {
        let vw = voa.module.act_state(v, i, w)?;
        if vw.is_zero() {
            continue;
        }
        let t = m.act_state(&vw, mm + n - i, u)?;
        out.add_assign_scaled(&Q::binomial(mm, i), &t);
    }
    Ok(out)
}

/// Mode family of an operator-valued series `sum_n a_(n) z^{-n-1}` between
/// two graded bases. Column `j` of mode `n` is `None` when it leaves the
/// window. Modes above `n_max` are zero; modes below `n_min` are unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub source: String,
    pub source_dim: usize,
    pub target_dim: usize,
    pub n_min: i64,
    pub n_max: i64,
    pub modes: BTreeMap<i64, Vec<Option<QVec>>>,
}

impl Field {
    pub fn zero(source: impl Into<String>, source_dim: usize, target_dim: usize) -> Self {
        Field { source: source.into(), source_dim, target_dim, n_min: 0, n_max: -1, modes: BTreeMap::new() }
    }

    /// Field of an algebra element acting on a module.
    pub fn of_state(m: &TruncatedModule, v: &QVec, name: impl Into<String>) -> Result<Self> {
        let mut n_min = i64::MAX;
        let mut n_max = i64::MIN;
        for a in v.indices() {
            let r = m.mode_range(a);
            n_min = n_min.min(*r.start());
            n_max = n_max.max(*r.end());
        }
        let mut f = Field::zero(name, m.dim(), m.dim());
        if n_min > n_max {
            return Ok(f);
        }
        f.n_min = n_min;
        f.n_max = n_max;
        for n in n_min..=n_max {
            let mut cols = Vec::with_capacity(m.dim());
            for j in 0..m.dim() {
                cols.push(match m.act_state(v, n, &SparseVec::unit(j)) {
                    Ok(x) => Some(x),
                    Err(Error::OutOfWindow { .. }) => None,
                    Err(e) => return Err(e),
                });
            }
            f.modes.insert(n, cols);
        }
        Ok(f)
    }

    /// `a_(n) x`, `None` when unknown.
    pub fn apply(&self, n: i64, x: &QVec) -> Option<QVec> {
        if n > self.n_max || x.is_zero() {
            return Some(SparseVec::zero());
        }
        let cols = self.modes.get(&n)?;
        let mut out = SparseVec::zero();
        for (j, c) in x.iter() {
            out.add_assign_scaled(c, cols[j].as_ref()?);
        }
        Some(out)
    }

    /// Largest `n` with `a_(n)` nonzero on a stored column.
    pub fn top_nonzero(&self) -> Option<i64> {
        self.modes.iter().rev().find(|(_, cols)| cols.iter().any(|c| c.as_ref().is_some_and(|v| !v.is_zero()))).map(|(n, _)| *n)
    }

    pub fn is_zero(&self) -> bool {
        self.top_nonzero().is_none()
    }
}

/// `(a *_n b)_(m) = sum_h C(n,h) (-1)^h [a_(n-h) b_(m+h) - (-1)^n b_(m+n-h) a_(h)]`
/// where `a_tgt` and `a_src` are the actions of `a` on the target and
/// source of `b`.
pub fn normal_product(a_tgt: &Field, a_src: &Field, n: i64, b: &Field) -> Field {
    let mut out = Field::zero(format!("({})*_{n}({})", a_tgt.source, b.source), b.source_dim, b.target_dim);
    if b.n_min > b.n_max {
        return out;
    }
    // lower truncation: a *_n b has modes at most top(a) + top(b) - n + 1
    let top_a = a_tgt.n_max.max(a_src.n_max);
    let m_max = top_a + b.n_max - n + 1;
    let m_min = b.n_min - n.max(0) - 1;
    out.n_min = m_min;
    out.n_max = m_max;
    for m in m_min..=m_max {
        let mut cols = Vec::with_capacity(b.source_dim);
        for j in 0..b.source_dim {
            cols.push(normal_product_column(a_tgt, a_src, n, b, m, j));
        }
        out.modes.insert(m, cols);
    }
    out
}

fn normal_product_column(a_tgt: &Field, a_src: &Field, n: i64, b: &Field, m: i64, j: usize) -> Option<QVec> {
    let e = SparseVec::unit(j);
    let mut acc = SparseVec::zero();
    let sn = sign(n);
    // first part: b_(m+h) e vanishes once m + h > b.n_max
    let h1 = b.n_max - m;
    let h1 = if n >= 0 { h1.min(n) } else { h1 };
    for h in 0..=h1.max(-1) {
        let c = Q::binomial(n, h) * sign(h);
        if c.is_zero() {
            continue;
        }
        let be = b.apply(m + h, &e)?;
        let t = a_tgt.apply(n - h, &be)?;
        acc.add_assign_scaled(&c, &t);
    }
    let h2 = a_src.n_max;
    let h2 = if n >= 0 { h2.min(n) } else { h2 };
    for h in 0..=h2.max(-1) {
        let c = Q::binomial(n, h) * sign(h) * &sn;
        if c.is_zero() {
            continue;
        }
        let ae = a_src.apply(h, &e)?;
        let t = b.apply(m + n - h, &ae)?;
        acc.add_assign_scaled(&-c, &t);
    }
    Some(acc)
}

/// Coefficient `sum_j (-1)^j C(order,j) [a_(k+j), b_(l+order-j)]` of
/// `(x-z)^order [a(x), b(z)]` on the basis vector `e_col` of `b`'s source.
/// `None` when some term leaves the window.
pub fn locality_coefficient(a_tgt: &Field, a_src: &Field, b: &Field, order: i64, k: i64, l: i64, col: usize) -> Option<QVec> {
    let e = SparseVec::unit(col);
    let mut acc = SparseVec::zero();
    for j in 0..=order {
        let c = Q::binomial(order, j) * sign(j);
        let be = b.apply(l + order - j, &e)?;
        let t1 = a_tgt.apply(k + j, &be)?;
        let ae = a_src.apply(k + j, &e)?;
        let t2 = b.apply(l + order - j, &ae)?;
        acc.add_assign_scaled(&c, &t1.sub(&t2));
    }
    Some(acc)
}

/// Smallest `N >= 0` with `(x-z)^N [a(x), b(z)] = 0` on every in-window
/// coefficient.
pub fn locality_order(a_tgt: &Field, a_src: &Field, b: &Field, bound: usize) -> Result<usize> {
    'order: for order in 0..=bound as i64 {
        let (k_lo, k_hi) = (a_tgt.n_min.min(a_src.n_min), a_tgt.n_max.max(a_src.n_max));
        for k in k_lo..=k_hi {
            for l in (b.n_min - order)..=b.n_max {
                for col in 0..b.source_dim {
                    if let Some(v) = locality_coefficient(a_tgt, a_src, b, order, k, l, col) {
                        if !v.is_zero() {
                            continue 'order;
                        }
                    }
                }
            }
        }
        return Ok(order as usize);
    }
    Err(Error::BoundExceeded(bound))
}

/// Parameters of the exhaustive / sampled instance enumeration.
#[derive(Clone, Debug)]
pub struct CheckConfig {
    /// Instances whose total weight is at most this are all checked.
    pub budget: i64,
    /// Number of sampled instances above the budget.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { budget: 6, samples: 0, seed: 0 }
    }
}

/// One Borcherds instance; `v, w` index the algebra basis, `u` the module
/// basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BorcherdsInstance {
    pub v: usize,
    pub w: usize,
    pub u: usize,
    pub p: i64,
    pub q: i64,
    pub n: i64,
}

impl BorcherdsInstance {
    pub fn descriptor(&self) -> String {
        format!("v={};w={};u={};p={};q={};n={}", self.v, self.w, self.u, self.p, self.q, self.n)
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

/// Parses `key=value` pairs separated by `;`.
pub fn parse_descriptor(s: &str) -> Result<BTreeMap<String, i64>> {
    let mut out = BTreeMap::new();
    for part in s.split(';').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::parse("descriptor", format!("expected key=value, got {part:?}")))?;
        let v: i64 = v.trim().parse().map_err(|_| Error::parse("descriptor", format!("{v:?} is not an integer")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Level of basis vector `j` above the lowest weight of `m`.
fn level_of(m: &TruncatedModule, j: usize) -> i64 {
    (m.space.scaled_weight(j) - m.space.scaled_weight(0)).div_euclid(m.space.denom())
}

/// All Borcherds instances with `wt v + wt w + level(u) <= max_total` whose
/// result lands in the window.
pub fn borcherds_instances(voa: &TruncatedVOA, m: &TruncatedModule, min_total: i64, max_total: i64) -> Vec<BorcherdsInstance> {
    let mut out = Vec::new();
    if m.dim() == 0 {
        return out;
    }
    let vw = &voa.grading().weights;
    for v in 0..voa.dim() {
        for w in 0..voa.dim() {
            for u in 0..m.dim() {
                let lu = level_of(m, u);
                let total = vw[v] + vw[w] + lu;
                if total > max_total || total < min_total {
                    continue;
                }
                for p in -2..=(vw[v] + vw[w]) {
                    for q in -2..=(vw[v] + lu) {
                        for n in -2..=(vw[w] + lu) {
                            // result level = total - p - q - n - 2
                            let res = total - p - q - n - 2;
                            if res < 0 {
                                continue;
                            }
                            let scaled = (vw[v] + vw[w] - p - q - n - 2) * m.space.denom() + m.space.scaled_weight(u);
                            if scaled <= m.space.scaled_cutoff() {
                                out.push(BorcherdsInstance { v, w, u, p, q, n });
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
pub fn run_borcherds(voa: &TruncatedVOA, m: &TruncatedModule, inst: &BorcherdsInstance) -> Result<Option<QVec>> {
    let r = borcherds_residual(
        voa,
        m,
        &SparseVec::unit(inst.v),
        &SparseVec::unit(inst.w),
        &SparseVec::unit(inst.u),
        inst.p,
        inst.q,
        inst.n,
    );
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::OutOfWindow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Vacuum, `L(-1)`-derivative, Virasoro and Borcherds checks on a module.
pub fn check_module_axioms(voa: &TruncatedVOA, m: &TruncatedModule, cfg: &CheckConfig) -> Result<Report> {
    let mut rep = Report::new("module-axioms", m.name.clone());
    let labels = m.space.labels().to_vec();
    check_vacuum(voa, m, &mut rep, &labels)?;
    check_derivative(voa, m, &mut rep, &labels)?;
    check_virasoro(voa, m, &mut rep, &labels, 4)?;
    let exhaustive = borcherds_instances(voa, m, 0, cfg.budget);
    for inst in &exhaustive {
        match run_borcherds(voa, m, inst)? {
            Some(r) => rep.residual(inst.check_name(), inst.descriptor(), &r, &labels),
            None => rep.skip(),
        }
    }
    if cfg.samples > 0 {
        let mut pool = borcherds_instances(voa, m, cfg.budget + 1, i64::MAX);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        pool.shuffle(&mut rng);
        let mut taken = 0;
        for inst in pool {
            if taken >= cfg.samples {
                break;
            }
            match run_borcherds(voa, m, &inst)? {
                Some(r) => {
                    rep.residual(inst.check_name(), inst.descriptor(), &r, &labels);
                    taken += 1;
                }
                None => rep.skip(),
            }
        }
    }
    Ok(rep)
}

fn check_vacuum(voa: &TruncatedVOA, m: &TruncatedModule, rep: &mut Report, labels: &[String]) -> Result<()> {
    let vac = voa.vacuum;
    for j in 0..m.dim() {
        for n in m.mode_range(vac) {
            let out = match m.act(vac, n, &SparseVec::unit(j)) {
                Ok(x) => x,
                Err(Error::OutOfWindow { .. }) => continue,
                Err(e) => return Err(e),
            };
            let expect = if n == -1 { SparseVec::unit(j) } else { SparseVec::zero() };
            rep.residual("vacuum", format!("u={j};n={n}"), &out.sub(&expect), labels);
        }
    }
    Ok(())
}

fn check_derivative(voa: &TruncatedVOA, m: &TruncatedModule, rep: &mut Report, labels: &[String]) -> Result<()> {
    if voa.omega.is_zero() {
        return Ok(());
    }
    for v in 0..voa.dim() {
        let dv = match voa.module.act_state(&voa.omega, 0, &SparseVec::unit(v)) {
            Ok(x) => x,
            Err(Error::OutOfWindow { .. }) => continue,
            Err(e) => return Err(e),
        };
        for j in 0..m.dim() {
            for n in m.mode_range(v) {
                let e = SparseVec::unit(j);
                let lhs = match m.act_state(&dv, n + 1, &e) {
                    Ok(x) => x,
                    Err(Error::OutOfWindow { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let rhs = match m.act(v, n, &e) {
                    Ok(x) => x.scale(&Q::from_int(-(n + 1))),
                    Err(Error::OutOfWindow { .. }) => continue,
                    Err(e) => return Err(e),
                };
                rep.residual("derivative", format!("v={v};u={j};n={}", n + 1), &lhs.sub(&rhs), labels);
            }
        }
    }
    Ok(())
}

/// `[L_a, L_b] = (a-b) L_{a+b} + c/12 (a^3-a) delta` on every in-window
/// module vector, `|a|, |b| <= bound`, using only the action of `omega`.
pub fn check_virasoro(voa: &TruncatedVOA, m: &TruncatedModule, rep: &mut Report, labels: &[String], bound: i64) -> Result<()> {
    if voa.omega.is_zero() {
        return Ok(());
    }
    for a in -bound..=bound {
        for b in -bound..=bound {
            for j in 0..m.dim() {
                match virasoro_residual(voa, m, a, b, j) {
                    Ok(r) => rep.residual("virasoro", format!("a={a};b={b};u={j}"), &r, labels),
                    Err(Error::OutOfWindow { .. }) => rep.skip(),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(())
}

pub fn virasoro_residual(voa: &TruncatedVOA, m: &TruncatedModule, a: i64, b: i64, j: usize) -> Result<QVec> {
    let e = SparseVec::unit(j);
    let lb = voa.virasoro(m, b, &e)?;
    let lab = voa.virasoro(m, a, &lb)?;
    let la = voa.virasoro(m, a, &e)?;
    let lba = voa.virasoro(m, b, &la)?;
    let mut rhs = voa.virasoro(m, a + b, &e)?.scale(&Q::from_int(a - b));
    if a + b == 0 {
        let c = &voa.central_charge * Q::from_frac(a * a * a - a, 12);
        rhs.add_assign_scaled(&c, &e);
    }
    Ok(lab.sub(&lba).sub(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_heisenberg, build_virasoro};

    #[test]
    fn heisenberg_borcherds_small() {
        let b = build_heisenberg(4).unwrap();
        let rep = check_module_axioms(&b.voa, &b.voa.module, &CheckConfig { budget: 4, samples: 0, seed: 0 }).unwrap();
        assert!(rep.all_passed(), "{}", rep.to_text());
        assert!(rep.count("borcherds") > 0);
    }

    #[test]
    fn vacuum_field_has_locality_zero() {
        let b = build_heisenberg(3).unwrap();
        let one = Field::of_state(&b.voa.module, &b.voa.vacuum_vec(), "1").unwrap();
        assert_eq!(locality_order(&one, &one, &one, 4).unwrap(), 0);
    }

    #[test]
    fn heisenberg_locality_two() {
        let b = build_heisenberg(4).unwrap();
        let a = SparseVec::unit(b.generator_state());
        let f = Field::of_state(&b.voa.module, &a, "a").unwrap();
        assert_eq!(locality_order(&f, &f, &f, 6).unwrap(), 2);
    }

    #[test]
    fn virasoro_locality_four() {
        let b = build_virasoro(Q::from_frac(1, 2), 6).unwrap();
        let f = Field::of_state(&b.voa.module, &b.voa.omega, "omega").unwrap();
        assert_eq!(locality_order(&f, &f, &f, 8).unwrap(), 4);
    }

    #[test]
    fn normal_products_of_generator_fields() {
        let b = build_virasoro(Q::from_frac(1, 2), 6).unwrap();
        let m = &b.voa.module;
        let w = Field::of_state(m, &b.voa.omega, "omega").unwrap();
        let p = normal_product(&w, &w, 1, &w);
        let two_w = Field::of_state(m, &b.voa.omega.scale(&Q::from_int(2)), "2omega").unwrap();
        for (n, cols) in &p.modes {
            for (j, c) in cols.iter().enumerate() {
                if let (Some(x), Some(y)) = (c, two_w.apply(*n, &SparseVec::unit(j))) {
                    assert_eq!(x, &y, "mode {n} column {j}");
                }
            }
        }
    }
}
