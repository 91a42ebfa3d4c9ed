//! Highest-weight modules over the Heisenberg and Virasoro mode algebras.
//!
//! Vectors are written in a PBW basis: an ordered product of creation modes
//! applied to a vector of a finite-dimensional top space. Generator modes act
//! by normal ordering with the commutation relations; modes of arbitrary states
//! of the vacuum module act through the iterate formula
//!
//! ```text
//! (x_(j) b)_(n) u = Σ_i (-1)^i C(j,i) [ x_(j-i) b_(n+i) u - (-1)^j b_(j+n-i) x_(i) u ]
//! ```
//!
//! so every mode-table entry of the truncated models is computed from the
//! commutation relations alone and nothing above the window is ever needed.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::scalar::Scalar;
use crate::Q;

/// A generator mode `x_n` in the "physics" normalisation: `x_n` lowers the
/// weight by `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub index: i64,
    pub gen: usize,
}

impl Mode {
    pub fn new(gen: usize, index: i64) -> Self {
        Mode { index, gen }
    }
}

/// Creation modes in non-decreasing order, leftmost applied last.
pub type Monomial = Vec<Mode>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PbwBasis {
    pub mono: Monomial,
    pub top: usize,
}

impl PbwBasis {
    pub fn top(top: usize) -> Self {
        PbwBasis { mono: Vec::new(), top }
    }

    pub fn level(&self) -> i64 {
        -self.mono.iter().map(|m| m.index).sum::<i64>()
    }
}

pub type PbwVec = BTreeMap<PbwBasis, Q>;

fn add_into(acc: &mut PbwVec, c: &Q, v: &PbwVec) {
    if c.is_zero() {
        return;
    }
    for (b, x) in v {
        let e = acc.entry(b.clone()).or_insert_with(Q::zero);
        *e += x * c;
        if e.is_zero() {
            acc.remove(b);
        }
    }
}

/// The Lie algebra of modes.
#[derive(Clone, Debug, PartialEq)]
pub enum ModeAlgebra {
    /// Rank-one free boson: `[a_m, a_n] = m δ_{m+n,0}`.
    Heisenberg,
    /// `[L_m, L_n] = (m-n) L_{m+n} + c/12 (m^3-m) δ_{m+n,0}`.
    Virasoro { central_charge: Q },
}

impl ModeAlgebra {
    pub fn generator_weights(&self) -> Vec<i64> {
        match self {
            ModeAlgebra::Heisenberg => vec![1],
            ModeAlgebra::Virasoro { .. } => vec![2],
        }
    }

    pub fn generator_names(&self) -> Vec<&'static str> {
        match self {
            ModeAlgebra::Heisenberg => vec!["a"],
            ModeAlgebra::Virasoro { .. } => vec!["L"],
        }
    }

    /// `[a, b]` as a combination of modes plus a central scalar.
    pub fn commutator(&self, a: Mode, b: Mode) -> (Vec<(Mode, Q)>, Q) {
        let (m, n) = (a.index, b.index);
        match self {
            ModeAlgebra::Heisenberg => {
                let central = if m + n == 0 { Q::from_int(m) } else { Q::zero() };
                (Vec::new(), central)
            }
            ModeAlgebra::Virasoro { central_charge } => {
                let mut terms = Vec::new();
                if m != n {
                    terms.push((Mode::new(0, m + n), Q::from_int(m - n)));
                }
                let central = if m + n == 0 {
                    central_charge * Q::from_frac(m * m * m - m, 12)
                } else {
                    Q::zero()
                };
                (terms, central)
            }
        }
    }
}

/// Finite-dimensional top space with the action of zero modes.
#[derive(Clone, Debug)]
pub struct TopSpace {
    pub dim: usize,
    /// Semisimple weight of the top space.
    pub weight: Q,
    /// `zero_modes[g][s][t]`: coefficient of top vector `s` in `x^g_0 t`.
    pub zero_modes: Vec<Vec<Vec<Q>>>,
    /// Modes `x^g_n` with `n <= creation_bound[g]` create; other negative
    /// modes annihilate the top space.
    pub creation_bound: Vec<i64>,
}

/// A highest-weight module in PBW form.
#[derive(Debug)]
pub struct PbwModule {
    pub algebra: ModeAlgebra,
    pub top: TopSpace,
    cache: RefCell<HashMap<(Mode, PbwBasis), PbwVec>>,
}

impl Clone for PbwModule {
    fn clone(&self) -> Self {
        PbwModule::new(self.algebra.clone(), self.top.clone())
    }
}

impl PbwModule {
    pub fn new(algebra: ModeAlgebra, top: TopSpace) -> Self {
        PbwModule { algebra, top, cache: RefCell::new(HashMap::new()) }
    }

    /// Vacuum module of the Heisenberg algebra (momentum zero).
    pub fn heisenberg_vacuum() -> Self {
        Self::fock(Q::zero())
    }

    /// Fock module with `a_0 = momentum`.
    pub fn fock(momentum: Q) -> Self {
        let weight = &momentum * &momentum / Q::from_int(2);
        Self::new(
            ModeAlgebra::Heisenberg,
            TopSpace { dim: 1, weight, zero_modes: vec![vec![vec![momentum]]], creation_bound: vec![-1] },
        )
    }

    /// Fock module over a two-dimensional top on which `a_0 = momentum + N`
    /// with `N` the nilpotent Jordan block (`N e_1 = e_0`).
    pub fn fock_jordan(momentum: Q) -> Self {
        let weight = &momentum * &momentum / Q::from_int(2);
        let zero = vec![
            vec![momentum.clone(), Q::one()],
            vec![Q::zero(), momentum.clone()],
        ];
        Self::new(
            ModeAlgebra::Heisenberg,
            TopSpace { dim: 2, weight, zero_modes: vec![zero], creation_bound: vec![-1] },
        )
    }

    /// Vacuum module of the Virasoro algebra, `L_{-1}|0> = 0`.
    pub fn virasoro_vacuum(central_charge: Q) -> Self {
        Self::new(
            ModeAlgebra::Virasoro { central_charge },
            TopSpace { dim: 1, weight: Q::zero(), zero_modes: vec![vec![vec![Q::zero()]]], creation_bound: vec![-2] },
        )
    }

    /// Verma module `M(c, h)`.
    pub fn virasoro_verma(central_charge: Q, h: Q) -> Self {
        Self::new(
            ModeAlgebra::Virasoro { central_charge },
            TopSpace { dim: 1, weight: h.clone(), zero_modes: vec![vec![vec![h]]], creation_bound: vec![-1] },
        )
    }

    pub fn generator_weight(&self, gen: usize) -> i64 {
        self.algebra.generator_weights()[gen]
    }

    /// All PBW basis vectors at `level`, in canonical order.
    pub fn level_basis(&self, level: i64) -> Vec<PbwBasis> {
        let mut parts: Vec<Mode> = Vec::new();
        for (g, &b) in self.top.creation_bound.iter().enumerate() {
            for idx in (-level..=b).rev() {
                parts.push(Mode::new(g, idx));
            }
        }
        parts.sort();
        let mut monos = Vec::new();
        fn rec(parts: &[Mode], start: usize, left: i64, cur: &mut Vec<Mode>, out: &mut Vec<Monomial>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for k in start..parts.len() {
                let size = -parts[k].index;
                if size <= left {
                    cur.push(parts[k]);
                    rec(parts, k, left - size, cur, out);
                    cur.pop();
                }
            }
        }
        if level >= 0 {
            rec(&parts, 0, level, &mut Vec::new(), &mut monos);
        }
        let mut out = Vec::new();
        for m in monos {
            for t in 0..self.top.dim {
                out.push(PbwBasis { mono: m.clone(), top: t });
            }
        }
        out.sort();
        out
    }

    fn is_creation(&self, m: Mode) -> bool {
        m.index <= self.top.creation_bound[m.gen]
    }

    /// `x_m` applied to a basis vector.
    pub fn apply_mode(&self, m: Mode, b: &PbwBasis) -> PbwVec {
        if let Some(v) = self.cache.borrow().get(&(m, b.clone())) {
            return v.clone();
        }
        let out = self.apply_mode_uncached(m, b);
        self.cache.borrow_mut().insert((m, b.clone()), out.clone());
        out
    }

    fn apply_mode_uncached(&self, m: Mode, b: &PbwBasis) -> PbwVec {
        let mut out = PbwVec::new();
        if b.mono.is_empty() {
            if self.is_creation(m) {
                out.insert(PbwBasis { mono: vec![m], top: b.top }, Q::one());
            } else if m.index == 0 {
                let zm = &self.top.zero_modes[m.gen];
                for s in 0..self.top.dim {
                    let c = &zm[s][b.top];
                    if !c.is_zero() {
                        out.insert(PbwBasis::top(s), c.clone());
                    }
                }
            }
            return out;
        }
        let first = b.mono[0];
        if self.is_creation(m) && m <= first {
            let mut mono = Vec::with_capacity(b.mono.len() + 1);
            mono.push(m);
            mono.extend_from_slice(&b.mono);
            out.insert(PbwBasis { mono, top: b.top }, Q::one());
            return out;
        }
        let rest = PbwBasis { mono: b.mono[1..].to_vec(), top: b.top };
        // x_m y rest = y (x_m rest) + [x_m, y] rest
        let inner = self.apply_mode(m, &rest);
        let moved = self.apply_mode_vec(first, &inner);
        add_into(&mut out, &Q::one(), &moved);
        let (terms, central) = self.algebra.commutator(m, first);
        for (z, c) in terms {
            let v = self.apply_mode(z, &rest);
            add_into(&mut out, &c, &v);
        }
        if !central.is_zero() {
            let mut v = PbwVec::new();
            v.insert(rest, Q::one());
            add_into(&mut out, &central, &v);
        }
        out
    }

    pub fn apply_mode_vec(&self, m: Mode, v: &PbwVec) -> PbwVec {
        let mut out = PbwVec::new();
        for (b, c) in v {
            let w = self.apply_mode(m, b);
            add_into(&mut out, c, &w);
        }
        out
    }

    /// Contravariant form on a level, for modules with a one-dimensional
    /// top: `x_n` is adjoint to `x_{-n}`.
    pub fn gram_matrix(&self, level: i64) -> Vec<Vec<Q>> {
        assert_eq!(self.top.dim, 1, "contravariant form needs a one-dimensional top");
        let basis = self.level_basis(level);
        let mut g = vec![vec![Q::zero(); basis.len()]; basis.len()];
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                // apply the adjoint of bi's monomial to bj
                let mut v = PbwVec::new();
                v.insert(bj.clone(), Q::one());
                for m in &bi.mono {
                    v = self.apply_mode_vec(Mode::new(m.gen, -m.index), &v);
                }
                g[i][j] = v.get(&PbwBasis::top(0)).cloned().unwrap_or_else(Q::zero);
            }
        }
        g
    }
}

/// Evaluates modes of vacuum-module states on a module.
pub struct StateAction<'a> {
    vacuum: &'a PbwModule,
    module: &'a PbwModule,
    cache: RefCell<HashMap<(Monomial, i64, PbwBasis), PbwVec>>,
}

impl<'a> StateAction<'a> {
    pub fn new(vacuum: &'a PbwModule, module: &'a PbwModule) -> Self {
        assert_eq!(vacuum.algebra, module.algebra, "state and module must share the mode algebra");
        StateAction { vacuum, module, cache: RefCell::new(HashMap::new()) }
    }

    pub fn state_weight(&self, state: &Monomial) -> i64 {
        -state.iter().map(|m| m.index).sum::<i64>()
    }

    /// `a_(n) u` for the state `a = state |0>`, mathematical mode index `n`.
    pub fn state_mode(&self, state: &Monomial, n: i64, u: &PbwBasis) -> PbwVec {
        let key = (state.clone(), n, u.clone());
        if let Some(v) = self.cache.borrow().get(&key) {
            return v.clone();
        }
        let out = self.state_mode_uncached(state, n, u);
        self.cache.borrow_mut().insert(key, out.clone());
        out
    }

    fn gen_mode(&self, gen: usize, k: i64, v: &PbwVec) -> PbwVec {
        let h = self.vacuum.generator_weight(gen);
        self.module.apply_mode_vec(Mode::new(gen, k - h + 1), v)
    }

    fn state_mode_vec(&self, state: &Monomial, n: i64, v: &PbwVec) -> PbwVec {
        let mut out = PbwVec::new();
        for (b, c) in v {
            let w = self.state_mode(state, n, b);
            add_into(&mut out, c, &w);
        }
        out
    }

    fn state_mode_uncached(&self, state: &Monomial, n: i64, u: &PbwBasis) -> PbwVec {
        let mut out = PbwVec::new();
        if state.is_empty() {
            if n == -1 {
                out.insert(u.clone(), Q::one());
            }
            return out;
        }
        let x = state[0];
        let rest: Monomial = state[1..].to_vec();
        let h = self.vacuum.generator_weight(x.gen);
        let j = x.index + h - 1;
        debug_assert!(j <= -1, "creation modes have negative mathematical index");
        let wt_rest = self.state_weight(&rest);
        let level = u.level();
        let mut unit = PbwVec::new();
        unit.insert(u.clone(), Q::one());
        let sign_j = if j.rem_euclid(2) == 0 { Q::one() } else { -Q::one() };

        // first sum: b_(n+i) u is zero once its level is negative
        let max_i1 = level + wt_rest - n - 1;
        for i in 0..=max_i1.max(-1) {
            let coeff = Q::binomial(j, i) * if i % 2 == 0 { Q::one() } else { -Q::one() };
            if coeff.is_zero() {
                continue;
            }
            let inner = self.state_mode(&rest, n + i, u);
            if inner.is_empty() {
                continue;
            }
            let v = self.gen_mode(x.gen, j - i, &inner);
            add_into(&mut out, &coeff, &v);
        }
        // second sum: x_(i) u is zero once i - h + 1 > level
        let max_i2 = level + h - 1;
        for i in 0..=max_i2.max(-1) {
            let coeff = Q::binomial(j, i) * if i % 2 == 0 { Q::one() } else { -Q::one() } * &sign_j;
            if coeff.is_zero() {
                continue;
            }
            let inner = self.gen_mode(x.gen, i, &unit);
            if inner.is_empty() {
                continue;
            }
            let v = self.state_mode_vec(&rest, j + n - i, &inner);
            add_into(&mut out, &-coeff, &v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn single(b: PbwBasis) -> PbwVec {
        let mut v = PbwVec::new();
        v.insert(b, Q::one());
        v
    }

    #[test]
    fn heisenberg_level_one_bracket() {
        let v = PbwModule::heisenberg_vacuum();
        let a1 = PbwBasis { mono: vec![Mode::new(0, -1)], top: 0 };
        let out = v.apply_mode(Mode::new(0, 1), &a1);
        assert_eq!(out, single(PbwBasis::top(0)));
    }

    #[test]
    fn virasoro_vacuum_relations() {
        let c = Q::new(1.into(), 2.into());
        let v = PbwModule::virasoro_vacuum(c.clone());
        // L_{-1} L_{-2} |0> = L_{-3} |0>
        let l2 = PbwBasis { mono: vec![Mode::new(0, -2)], top: 0 };
        let out = v.apply_mode(Mode::new(0, -1), &l2);
        assert_eq!(out, single(PbwBasis { mono: vec![Mode::new(0, -3)], top: 0 }));
        // L_2 L_{-2} |0> = c/2 |0>
        let out = v.apply_mode(Mode::new(0, 2), &l2);
        let mut expect = PbwVec::new();
        expect.insert(PbwBasis::top(0), c / q(2));
        assert_eq!(out, expect);
        assert!(v.apply_mode(Mode::new(0, -1), &PbwBasis::top(0)).is_empty());
    }

    #[test]
    fn level_basis_counts() {
        let v = PbwModule::heisenberg_vacuum();
        let dims: Vec<usize> = (0..6).map(|l| v.level_basis(l).len()).collect();
        assert_eq!(dims, vec![1, 1, 2, 3, 5, 7]);
        let vir = PbwModule::virasoro_vacuum(q(1));
        let dims: Vec<usize> = (0..7).map(|l| vir.level_basis(l).len()).collect();
        assert_eq!(dims, vec![1, 0, 1, 1, 2, 2, 4]);
    }

    #[test]
    fn omega_modes_give_l0_on_heisenberg() {
        // omega = 1/2 a_{-1}^2 |0>; omega_(1) acts as L(0)
        let v = PbwModule::heisenberg_vacuum();
        let m = PbwModule::fock(q(3));
        let act = StateAction::new(&v, &m);
        let omega: Monomial = vec![Mode::new(0, -1), Mode::new(0, -1)];
        let u = PbwBasis { mono: vec![Mode::new(0, -2)], top: 0 };
        let out = act.state_mode(&omega, 1, &u);
        // weight 9/2 + 2, and omega carries the factor 1/2
        let mut expect = PbwVec::new();
        expect.insert(u, (q(9) / q(2) + q(2)) * q(2));
        assert_eq!(out, expect);
    }

    #[test]
    fn vacuum_state_acts_as_identity() {
        let v = PbwModule::virasoro_vacuum(q(1));
        let act = StateAction::new(&v, &v);
        let u = PbwBasis { mono: vec![Mode::new(0, -3)], top: 0 };
        assert_eq!(act.state_mode(&vec![], -1, &u), single(u.clone()));
        assert!(act.state_mode(&vec![], 0, &u).is_empty());
    }

    #[test]
    fn generator_state_reproduces_generator_modes() {
        let v = PbwModule::virasoro_vacuum(q(1));
        let act = StateAction::new(&v, &v);
        let omega: Monomial = vec![Mode::new(0, -2)];
        let u = PbwBasis { mono: vec![Mode::new(0, -2)], top: 0 };
        for n in -3..4 {
            assert_eq!(act.state_mode(&omega, n, &u), v.apply_mode(Mode::new(0, n - 1), &u), "n = {n}");
        }
    }
}
