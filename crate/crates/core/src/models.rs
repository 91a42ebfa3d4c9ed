//! Concrete truncated vertex operator algebras and modules.
//!
//! Everything here is generated from the Heisenberg and Virasoro commutation
//! relations by [`crate::pbw`]. Simple quotients are taken level by level
//! as the kernel of the contravariant form.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::One;

use crate::graded::GradedSpace;
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::module::{AlgebraGrading, TruncatedModule, TruncatedVOA};
use crate::pbw::{ModeAlgebra, Monomial, PbwBasis, PbwModule, PbwVec, StateAction};
use crate::{Error, QVec, Result, Scalar, Q};

/// A PBW module cut at a maximal level, optionally divided by the radical
/// of its contravariant form.
pub struct Presentation {
    pub pbw: PbwModule,
    pub max_level: i64,
    /// Kept PBW vectors, in module-basis order.
    pub basis: Vec<PbwBasis>,
    levels: Vec<LevelData>,
    position: HashMap<PbwBasis, (usize, usize)>,
}

struct LevelData {
    radical: RowSpace<Q>,
    /// Module-basis index of each non-pivot PBW vector.
    kept: HashMap<usize, usize>,
}

impl Presentation {
    pub fn new(pbw: PbwModule, max_level: i64, simple: bool) -> Self {
        let mut basis = Vec::new();
        let mut levels = Vec::new();
        let mut position = HashMap::new();
        for level in 0..=max_level.max(-1) {
            let all = pbw.level_basis(level);
            let mut radical = RowSpace::new(all.len());
            if simple && level > 0 && !all.is_empty() {
                let gram = SparseMatrix::from_dense(&pbw.gram_matrix(level));
                for k in gram.kernel_basis() {
                    radical.insert(&SparseVec::from_dense(&k));
                }
            }
            let mut kept = HashMap::new();
            for idx in radical.non_pivots() {
                kept.insert(idx, basis.len());
                basis.push(all[idx].clone());
            }
            for (i, b) in all.iter().enumerate() {
                position.insert(b.clone(), (level as usize, i));
            }
            levels.push(LevelData { radical, kept });
        }
        Presentation { pbw, max_level, basis, levels, position }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Dimension of each level after the quotient.
    pub fn level_dims(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.kept.len()).collect()
    }

    /// Coordinates of a PBW vector in the module basis. Components above the
    /// maximal level are reported as out of window.
    pub fn project(&self, v: &PbwVec) -> Result<QVec> {
        let mut by_level: HashMap<usize, Vec<(usize, Q)>> = HashMap::new();
        for (b, c) in v {
            match self.position.get(b) {
                Some(&(l, i)) => by_level.entry(l).or_default().push((i, c.clone())),
                None => {
                    return Err(Error::OutOfWindow { weight: &self.pbw.top.weight + Q::from_int(b.level()) });
                }
            }
        }
        let mut out = SparseVec::zero();
        for (l, pairs) in by_level {
            let data = &self.levels[l];
            let r = data.radical.reduce(&SparseVec::from_pairs(pairs));
            let coords = r.reindex(|i| data.kept.get(&i).copied());
            out.add_assign_scaled(&Q::one(), &coords);
        }
        Ok(out)
    }

    pub fn weight(&self, i: usize) -> Q {
        &self.pbw.top.weight + Q::from_int(self.basis[i].level())
    }

    pub fn space(&self, labeller: impl Fn(&PbwBasis) -> String) -> GradedSpace {
        let weights = (0..self.dim()).map(|i| self.weight(i)).collect();
        let labels = self.basis.iter().map(labeller).collect();
        GradedSpace::new(weights, labels, &self.pbw.top.weight + Q::from_int(self.max_level))
            .expect("PBW bases are sorted by level")
    }
}

/// Label of a state `x_(j1) y_(j2) ... 1` in mathematical mode indices.
pub fn state_label(algebra: &ModeAlgebra, mono: &Monomial) -> String {
    if mono.is_empty() {
        return "1".into();
    }
    let names = algebra.generator_names();
    let weights = algebra.generator_weights();
    mono.iter().map(|m| format!("{}({})", names[m.gen], m.index + weights[m.gen] - 1)).collect()
}

fn module_label(algebra: &ModeAlgebra, b: &PbwBasis, top_dim: usize) -> String {
    let head = if b.mono.is_empty() { String::new() } else { state_label(algebra, &b.mono) };
    if top_dim == 1 {
        format!("{head}|top>")
    } else {
        format!("{head}|e{}>", b.top)
    }
}

/// Data needed to compute further modules over an already built algebra.
pub struct VoaBuild {
    pub voa: TruncatedVOA,
    pub presentation: Presentation,
}

impl std::fmt::Debug for VoaBuild {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoaBuild").field("voa", &self.voa.module.name).finish()
    }
}

fn table_for(vacuum: &Presentation, module: &Presentation, grading: &Arc<AlgebraGrading>, space: &GradedSpace) -> Result<Vec<((usize, i64, usize), QVec)>> {
    let action = StateAction::new(&vacuum.pbw, &module.pbw);
    let probe = TruncatedModule::from_table("probe", space.clone(), grading.clone(), Vec::new())?;
    let mut table = Vec::new();
    for (a, state) in vacuum.basis.iter().enumerate() {
        for n in probe.mode_range(a) {
            for (j, u) in module.basis.iter().enumerate() {
                if !probe.in_window(a, n, j) {
                    continue;
                }
                let v = action.state_mode(&state.mono, n, u);
                if v.is_empty() {
                    continue;
                }
                let img = module.project(&v)?;
                if !img.is_zero() {
                    table.push(((a, n, j), img));
                }
            }
        }
    }
    Ok(table)
}

fn build_voa(pbw: PbwModule, cutoff: i64, simple: bool, name: &str, omega: Vec<(Monomial, Q)>, central_charge: Q) -> Result<VoaBuild> {
    if cutoff < 0 {
        return Err(Error::InvalidArgument("cutoff must be nonnegative".into()));
    }
    let algebra = pbw.algebra.clone();
    let pres = Presentation::new(pbw, cutoff, simple);
    let space = pres.space(|b| state_label(&algebra, &b.mono));
    let grading = Arc::new(AlgebraGrading {
        weights: (0..pres.dim()).map(|i| pres.basis[i].level()).collect(),
        labels: space.labels().to_vec(),
        cutoff,
    });
    let table = table_for(&pres, &pres, &grading, &space)?;
    let module = TruncatedModule::from_table(name, space, grading, table)?;
    let mut omega_vec = SparseVec::zero();
    if cutoff >= 2 {
        for (m, c) in omega {
            let mut v = PbwVec::new();
            v.insert(PbwBasis { mono: m, top: 0 }, c);
            omega_vec.add_assign_scaled(&Q::one(), &pres.project(&v)?);
        }
    }
    let module = if omega_vec.is_zero() { module } else { module.with_l0(&omega_vec)? };
    let mut voa = TruncatedVOA::new(module, 0, omega_vec, central_charge)?;
    let gens = algebra.generator_weights();
    voa.generators = pres
        .basis
        .iter()
        .enumerate()
        .filter(|(_, b)| b.mono.len() == 1 && gens.contains(&-b.mono[0].index))
        .map(|(i, _)| i)
        .collect();
    Ok(VoaBuild { voa, presentation: pres })
}

/// Rank-one Heisenberg vertex operator algebra, `omega = 1/2 a(-1)a(-1)`.
pub fn build_heisenberg(cutoff: i64) -> Result<VoaBuild> {
    let a1 = crate::pbw::Mode::new(0, -1);
    build_voa(PbwModule::heisenberg_vacuum(), cutoff, false, "heisenberg", vec![(vec![a1, a1], Q::from_frac(1, 2))], Q::one())
}

/// Universal Virasoro vertex operator algebra of central charge `c`.
pub fn build_virasoro(c: Q, cutoff: i64) -> Result<VoaBuild> {
    let omega = vec![(vec![crate::pbw::Mode::new(0, -2)], Q::one())];
    build_voa(PbwModule::virasoro_vacuum(c.clone()), cutoff, false, "virasoro", omega, c)
}

/// `c = 1 - 6 (p - q)^2 / (p q)`.
pub fn minimal_central_charge(p: i64, q: i64) -> Q {
    Q::one() - Q::from_frac(6 * (p - q) * (p - q), p * q)
}

/// Conformal weights `h_{r,s}` of the simple modules of the `(p, q)` model.
pub fn kac_weights(p: i64, q: i64) -> Vec<Q> {
    let mut out: Vec<Q> = Vec::new();
    for r in 1..q {
        for s in 1..p {
            let h = Q::from_frac((p * r - q * s) * (p * r - q * s) - (p - q) * (p - q), 4 * p * q);
            if !out.contains(&h) {
                out.push(h);
            }
        }
    }
    out.sort();
    out
}

/// Simple quotient `L(c_{p,q}, 0)`.
pub fn build_minimal_model(p: i64, q: i64, cutoff: i64) -> Result<VoaBuild> {
    if p < 2 || q < 2 || num_integer::gcd(p, q) != 1 {
        return Err(Error::InvalidArgument(format!("({p}, {q}) is not a coprime pair of integers >= 2")));
    }
    let c = minimal_central_charge(p, q);
    let omega = vec![(vec![crate::pbw::Mode::new(0, -2)], Q::one())];
    let mut b = build_voa(PbwModule::virasoro_vacuum(c.clone()), cutoff, true, "minimal", omega, c)?;
    b.voa.module.name = format!("minimal({p},{q})");
    Ok(b)
}

/// The `c = 1/2` simple Virasoro algebra.
pub fn build_ising(cutoff: i64) -> Result<VoaBuild> {
    let mut b = build_minimal_model(3, 4, cutoff)?;
    b.voa.module.name = "ising".into();
    Ok(b)
}

impl VoaBuild {
    /// Module of the built algebra from a PBW module of the same mode
    /// algebra, with levels up to `max_level`.
    pub fn module_from_pbw(&self, pbw: PbwModule, max_level: i64, simple: bool, name: &str) -> Result<TruncatedModule> {
        let algebra = pbw.algebra.clone();
        let top_dim = pbw.top.dim;
        let pres = Presentation::new(pbw, max_level, simple);
        let space = pres.space(|b| module_label(&algebra, b, top_dim));
        let grading = self.voa.grading().clone();
        let table = table_for(&self.presentation, &pres, &grading, &space)?;
        TruncatedModule::from_table(name, space, grading, table)?.with_l0(&self.voa.omega)
    }

    /// Fock module `M(1, lambda)` of the Heisenberg algebra.
    pub fn fock(&self, momentum: Q, max_level: i64) -> Result<TruncatedModule> {
        self.require(ModeAlgebra::Heisenberg)?;
        let name = format!("fock({momentum})");
        self.module_from_pbw(PbwModule::fock(momentum), max_level, false, &name)
    }

    /// Fock module over a two-dimensional top on which `a(0)` acts as
    /// `momentum + N`, `N` nilpotent.
    pub fn fock_jordan(&self, momentum: Q, max_level: i64) -> Result<TruncatedModule> {
        self.require(ModeAlgebra::Heisenberg)?;
        let name = format!("fock_jordan({momentum})");
        self.module_from_pbw(PbwModule::fock_jordan(momentum), max_level, false, &name)
    }

    /// Irreducible highest-weight Virasoro module `L(c, h)`.
    pub fn virasoro_simple(&self, h: Q, max_level: i64) -> Result<TruncatedModule> {
        let c = match &self.presentation.pbw.algebra {
            ModeAlgebra::Virasoro { central_charge } => central_charge.clone(),
            _ => return Err(Error::InvalidArgument("not a Virasoro algebra".into())),
        };
        let name = format!("L({c},{h})");
        self.module_from_pbw(PbwModule::virasoro_verma(c, h), max_level, true, &name)
    }

    fn require(&self, alg: ModeAlgebra) -> Result<()> {
        if self.presentation.pbw.algebra != alg {
            return Err(Error::InvalidArgument("module needs a different mode algebra".into()));
        }
        Ok(())
    }

    /// Index of the generator state `x(-1) 1`.
    pub fn generator_state(&self) -> usize {
        let w = self.presentation.pbw.algebra.generator_weights()[0];
        let m = crate::pbw::Mode::new(0, -w);
        self.presentation.basis.iter().position(|b| b.mono == vec![m]).expect("generator below the cutoff")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::integral_dimensions;
    use num_traits::Zero;

    #[test]
    fn heisenberg_dimensions() {
        let b = build_heisenberg(2).unwrap();
        assert_eq!(integral_dimensions(&b.voa.module.space, &Q::zero()), vec![1, 1, 2]);
    }

    #[test]
    fn heisenberg_level_one_bracket() {
        let b = build_heisenberg(3).unwrap();
        let a = b.generator_state();
        // a_(1) a_(-1) 1 = 1
        let out = b.voa.module.act(a, 1, &SparseVec::unit(a)).unwrap();
        assert_eq!(out, SparseVec::unit(b.voa.vacuum));
    }

    #[test]
    fn virasoro_omega_three_omega() {
        let c = Q::from_frac(7, 3);
        let b = build_virasoro(c.clone(), 4).unwrap();
        let w = b.voa.omega.clone();
        let out = b.voa.module.act_state(&w, 3, &w).unwrap();
        assert_eq!(out, SparseVec::single(0, c / Q::from_int(2)));
        assert!(b.voa.module.act_state(&w, 0, &b.voa.vacuum_vec()).unwrap().is_zero());
    }

    #[test]
    fn ising_singular_vector_at_six() {
        let b = build_ising(6).unwrap();
        assert_eq!(integral_dimensions(&b.voa.module.space, &Q::zero()), vec![1, 0, 1, 1, 2, 2, 3]);
    }

    #[test]
    fn kac_table_of_ising() {
        assert_eq!(minimal_central_charge(3, 4), Q::from_frac(1, 2));
        assert_eq!(kac_weights(3, 4), vec![Q::zero(), Q::from_frac(1, 16), Q::from_frac(1, 2)]);
    }

    #[test]
    fn log_fock_has_nilpotent_l0() {
        let b = build_heisenberg(3).unwrap();
        let m = b.fock_jordan(Q::one(), 2).unwrap();
        assert!(!m.l0.is_semisimple());
        let m0 = b.fock_jordan(Q::zero(), 2).unwrap();
        assert!(m0.l0.is_semisimple());
    }
}
