use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fdmodule::{coordinates, random_combination};
use super::{FDModule, FinDimAlgebra};
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::{Error, Result, Scalar};

/// A full flag of submodules with simple quotients.
#[derive(Clone, Debug)]
pub struct CompositionSeries<T: Scalar> {
    /// Dimensions of the flag `0 = F_0 < F_1 < ... < F_r = M`.
    pub flag_dims: Vec<usize>,
    pub factors: Vec<FDModule<T>>,
}

/// Builds a composition series along the radical layers
/// `M > rad M > rad^2 M > ...`, splitting each semisimple layer by cyclic
/// submodules `A e v` for primitive idempotents `e`. The seed chooses the
/// order of the idempotents and of the generating vectors, so different
/// seeds give different flags.
pub fn composition_series<T: Scalar>(alg: &FinDimAlgebra<T>, m: &FDModule<T>, seed: u64) -> Result<CompositionSeries<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idems = alg.primitive_idempotents(seed)?;
    let n = m.dim();
    // radical layers, top first
    let mut layers = vec![full_space(n)];
    loop {
        let last = layers.last().unwrap();
        let gens: Vec<SparseVec<T>> = last.basis().cloned().collect();
        let mut next = RowSpace::new(n);
        for r in alg.radical() {
            for g in &gens {
                next.insert(&m.apply(&r, g));
            }
        }
        let done = next.rank() == 0;
        layers.push(next);
        if done {
            break;
        }
    }
    let mut current = RowSpace::new(n);
    let mut flag_dims = vec![0];
    let mut factors = Vec::new();
    for k in (0..layers.len() - 1).rev() {
        let target = &layers[k];
        while current.rank() < target.rank() {
            let mut order: Vec<usize> = (0..idems.len()).collect();
            order.shuffle(&mut rng);
            let mut grown = false;
            'search: for &i in &order {
                let e = &idems[i];
                let mut vs: Vec<SparseVec<T>> = target.basis().map(|v| m.apply(e, v)).collect();
                vs.shuffle(&mut rng);
                // a random combination first, then the individual vectors
                let mut combo = SparseVec::zero();
                for v in &vs {
                    combo.add_assign_scaled(&T::from_int(rng.gen_range(-3..=3)), v);
                }
                vs.insert(0, combo);
                for v in vs {
                    if current.contains(&v) {
                        continue;
                    }
                    let gens: Vec<SparseVec<T>> = current.basis().cloned().chain(std::iter::once(v)).collect();
                    let next = m.closure(&gens);
                    let sq = m.subquotient(&next, &current)?;
                    factors.push(sq.module);
                    current = next;
                    flag_dims.push(current.rank());
                    grown = true;
                    break 'search;
                }
            }
            if !grown {
                return Err(Error::InvalidArgument("idempotents do not generate the layer".into()));
            }
        }
    }
    Ok(CompositionSeries { flag_dims, factors })
}

fn full_space<T: Scalar>(n: usize) -> RowSpace<T> {
    let mut s = RowSpace::new(n);
    for i in 0..n {
        s.insert(&SparseVec::unit(i));
    }
    s
}

/// Whether two lists of simple modules agree up to permutation and
/// isomorphism.
pub fn same_factors<T: Scalar>(a: &[FDModule<T>], b: &[FDModule<T>], seed: u64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = vec![false; b.len()];
    for x in a {
        let hit = (0..b.len()).find(|&j| !used[j] && x.isomorphism(&b[j], &mut rng).is_some());
        match hit {
            Some(j) => used[j] = true,
            None => return false,
        }
    }
    true
}

/// `A e` for a primitive idempotent `e`, as a submodule of the regular
/// module.
#[derive(Clone, Debug)]
pub struct ProjectiveIndecomposable<T: Scalar> {
    pub idempotent: SparseVec<T>,
    pub module: FDModule<T>,
    /// Columns: the basis of `A e` inside `A`.
    pub inclusion: SparseMatrix<T>,
}

pub fn projective_indecomposables<T: Scalar>(alg: &FinDimAlgebra<T>, seed: u64) -> Result<Vec<ProjectiveIndecomposable<T>>> {
    let reg = alg.regular_module();
    let mut out = Vec::new();
    for e in alg.primitive_idempotents(seed)? {
        let mut s = RowSpace::new(alg.dim());
        for i in 0..alg.dim() {
            s.insert(&alg.mul(&SparseVec::unit(i), &e));
        }
        let (mut module, inclusion) = reg.submodule(&s)?;
        module.name = format!("P{}", out.len());
        out.push(ProjectiveIndecomposable { idempotent: e, module, inclusion });
    }
    Ok(out)
}

/// A surjection `P -> M` from a direct sum of indecomposable projectives.
#[derive(Clone, Debug)]
pub struct ProjectiveCover<T: Scalar> {
    pub module: FDModule<T>,
    pub map: SparseMatrix<T>,
    /// Index into the indecomposables for each summand, and the image of
    /// its idempotent in `M`.
    pub summands: Vec<(usize, SparseVec<T>)>,
    /// `ker f` lies in `rad P`.
    pub superfluous_kernel: bool,
}

/// Lifts a basis of the top `M / rad M` along idempotents: each chosen
/// `v = e v` gives the summand `A e -> M`, `a e -> a v`.
pub fn projective_cover<T: Scalar>(alg: &FinDimAlgebra<T>, m: &FDModule<T>, seed: u64) -> Result<ProjectiveCover<T>> {
    let pis = projective_indecomposables(alg, seed)?;
    let n = m.dim();
    let mut reached = m.radical_submodule(alg);
    let mut summands: Vec<(usize, SparseVec<T>)> = Vec::new();
    for (k, pi) in pis.iter().enumerate() {
        let e = &pi.idempotent;
        for j in 0..n {
            let v = m.apply(e, &SparseVec::unit(j));
            if reached.contains(&v) {
                continue;
            }
            let gens: Vec<SparseVec<T>> = reached.basis().cloned().chain(std::iter::once(v.clone())).collect();
            reached = m.closure(&gens);
            summands.push((k, v));
        }
    }
    if reached.rank() != n {
        return Err(Error::InvalidArgument("primitive idempotents do not reach the top of the module".into()));
    }
    let mut p = FDModule::zero(alg);
    let mut cols: Vec<SparseVec<T>> = Vec::new();
    for (k, v) in &summands {
        let pi = &pis[*k];
        p = if p.dim() == 0 { pi.module.clone() } else { p.direct_sum(&pi.module) };
        for c in 0..pi.module.dim() {
            let a = pi.inclusion.mul_sparse(&SparseVec::unit(c));
            cols.push(m.apply(&a, v));
        }
    }
    p.name = format!("cover of {}", m.name);
    let map = SparseMatrix::from_columns(n, &cols);
    let superfluous_kernel = kernel_in_radical(alg, &p, &map);
    Ok(ProjectiveCover { module: p, map, summands, superfluous_kernel })
}

fn kernel_in_radical<T: Scalar>(alg: &FinDimAlgebra<T>, p: &FDModule<T>, map: &SparseMatrix<T>) -> bool {
    let rad = p.radical_submodule(alg);
    map.kernel_basis().iter().all(|k| rad.contains(&SparseVec::from_dense(k)))
}

/// Split maps `M -> A^k -> M`, present exactly when `M` is projective.
#[derive(Clone, Debug)]
pub struct ProjectivityWitness<T: Scalar> {
    pub projective: bool,
    pub cover: ProjectiveCover<T>,
    pub free_rank: usize,
    pub inclusion: Option<SparseMatrix<T>>,
    pub retraction: Option<SparseMatrix<T>>,
}

/// `M` is projective iff its projective cover is an isomorphism. The
/// witness embeds `M` into `A^k` through the cover and the inclusions
/// `A e -> A`, and retracts by right multiplication with the idempotents.
pub fn is_projective<T: Scalar>(alg: &FinDimAlgebra<T>, m: &FDModule<T>, seed: u64) -> Result<ProjectivityWitness<T>> {
    let cover = projective_cover(alg, m, seed)?;
    let k = cover.summands.len();
    if cover.module.dim() != m.dim() {
        return Ok(ProjectivityWitness { projective: false, cover, free_rank: k, inclusion: None, retraction: None });
    }
    let pis = projective_indecomposables(alg, seed)?;
    let d = alg.dim();
    // g = f^{-1}: M -> P
    let n = m.dim();
    let cols: Vec<SparseVec<T>> = (0..n)
        .map(|j| SparseVec::from_dense(&cover.map.solve(&SparseVec::unit(j).to_dense(n)).expect("cover is bijective")))
        .collect();
    let g = SparseMatrix::from_columns(cover.module.dim(), &cols);
    // P -> A^k block diagonal of inclusions, A^k -> P block diagonal of x -> x e
    let mut inc_t = Vec::new();
    let mut ret_cols: Vec<SparseVec<T>> = Vec::new();
    let (mut row_off, mut col_off) = (0, 0);
    for (s, _) in &cover.summands {
        let pi = &pis[*s];
        for (r, c, x) in pi.inclusion.triplets() {
            inc_t.push((r + row_off, c + col_off, x));
        }
        let basis: Vec<SparseVec<T>> = (0..pi.module.dim()).map(|c| pi.inclusion.mul_sparse(&SparseVec::unit(c))).collect();
        for i in 0..d {
            let y = alg.mul(&SparseVec::unit(i), &pi.idempotent);
            let x = coordinates(d, &basis, &y).expect("x e lies in A e");
            ret_cols.push(SparseVec::from_dense(&x).reindex(|t| Some(t + col_off)));
        }
        row_off += d;
        col_off += pi.module.dim();
    }
    let inc = SparseMatrix::from_triplets(d * k, cover.module.dim(), inc_t)?;
    let ret = SparseMatrix::from_columns(cover.module.dim(), &ret_cols);
    let inclusion = inc.mul(&g)?;
    let retraction = cover.map.mul(&ret)?;
    Ok(ProjectivityWitness { projective: true, cover, free_rank: k, inclusion: Some(inclusion), retraction: Some(retraction) })
}

/// Module maps `s -> w -> s` composing to the identity, searched among
/// random elements of the two Hom spaces.
pub fn direct_summand_test<T: Scalar>(s: &FDModule<T>, w: &FDModule<T>, seed: u64) -> Option<(SparseMatrix<T>, SparseMatrix<T>)> {
    let n = s.dim();
    if n == 0 {
        return Some((SparseMatrix::zero(w.dim(), 0), SparseMatrix::zero(0, w.dim())));
    }
    let h1 = s.hom_basis(w);
    let h2 = w.hom_basis(s);
    if h1.is_empty() || h2.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..24 {
        let (i, p) = if attempt == 0 && h1.len() == 1 && h2.len() == 1 {
            (h1[0].clone(), h2[0].clone())
        } else {
            (random_combination(&h1, &mut rng), random_combination(&h2, &mut rng))
        };
        let c = p.mul(&i).ok()?;
        if c.rank() < n {
            continue;
        }
        // retraction c^{-1} p
        let inv_cols: Vec<SparseVec<T>> = (0..n).map(|j| SparseVec::from_dense(&c.solve(&SparseVec::unit(j).to_dense(n)).expect("invertible"))).collect();
        let cinv = SparseMatrix::from_columns(n, &inv_cols);
        let r = cinv.mul(&p).ok()?;
        return Some((i, r));
    }
    None
}

/// Maps `h_i: P -> E` with `g h_i = f` for each copy, whose images together
/// contain `e`.
#[derive(Clone, Debug)]
pub struct MultiCover<T: Scalar> {
    pub copies: usize,
    pub maps: Vec<SparseMatrix<T>>,
}

/// Given a cover `f: P -> U`, an epimorphism `g: E -> U` and `e` in `E`,
/// searches `n = 1..dim E` for the fewest copies `P^n -> E` lifting the sum
/// of copies of `f` with `e` in the image. Returns the smallest `n` found.
pub fn multi_cover<T: Scalar>(p: &FDModule<T>, f: &SparseMatrix<T>, e_mod: &FDModule<T>, g: &SparseMatrix<T>, e: &SparseVec<T>, seed: u64) -> Result<Option<MultiCover<T>>> {
    let homs = p.hom_basis(e_mod);
    let de = e_mod.dim();
    // solve g h = f over the Hom space: coefficients c with sum c_k g h_k = f
    let targets: Vec<SparseMatrix<T>> = homs.iter().map(|h| g.mul(h)).collect::<Result<_>>()?;
    let flat = |m: &SparseMatrix<T>| {
        let mut v = SparseVec::zero();
        for (r, c, x) in m.triplets() {
            v.add_assign_scaled(&x, &SparseVec::unit(r * m.cols() + c));
        }
        v
    };
    let size = f.rows() * f.cols();
    let cols: Vec<SparseVec<T>> = targets.iter().map(flat).collect();
    let sys = SparseMatrix::from_columns(size, &cols);
    let base = match sys.solve(&flat(f).to_dense(size)) {
        Some(c) => c,
        None => return Ok(None),
    };
    let combine = |c: &[T]| {
        let mut h = SparseMatrix::zero(de, p.dim());
        for (k, x) in c.iter().enumerate() {
            h = h.add(&homs[k].scale(x)).expect("same shape");
        }
        h
    };
    let kernel: Vec<Vec<T>> = sys.kernel_basis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 1..=de.max(1) {
        for _ in 0..16 {
            let maps: Vec<SparseMatrix<T>> = (0..n)
                .map(|_| {
                    let mut c = base.clone();
                    for k in &kernel {
                        let s = T::from_int(rng.gen_range(-5..=5));
                        for (ci, ki) in c.iter_mut().zip(k) {
                            *ci = ci.clone() + s.clone() * ki.clone();
                        }
                    }
                    combine(&c)
                })
                .collect();
            let mut img = RowSpace::new(de);
            for h in &maps {
                for j in 0..p.dim() {
                    img.insert(&h.mul_sparse(&SparseVec::unit(j)));
                }
            }
            if img.contains(e) {
                return Ok(Some(MultiCover { copies: n, maps }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;

    #[test]
    fn composition_series_of_truncated_polynomials() {
        let a = FinDimAlgebra::<Q>::truncated_polynomial(3);
        let cs = composition_series(&a, &a.regular_module(), 1).unwrap();
        assert_eq!(cs.factors.len(), 3);
        assert!(cs.factors.iter().all(|f| f.dim() == 1));
        assert_eq!(cs.flag_dims, vec![0, 1, 2, 3]);
    }

    #[test]
    fn projectives_of_upper_triangular() {
        let a = FinDimAlgebra::<Q>::upper_triangular(2);
        let mut dims: Vec<usize> = projective_indecomposables(&a, 3).unwrap().iter().map(|p| p.module.dim()).collect();
        dims.sort();
        assert_eq!(dims, vec![1, 2]);
    }

    #[test]
    fn cover_of_the_simple_over_dual_numbers() {
        let a = FinDimAlgebra::<Q>::truncated_polynomial(2);
        let reg = a.regular_module();
        let (s, _) = reg.quotient(&reg.radical_submodule(&a)).unwrap();
        let c = projective_cover(&a, &s, 0).unwrap();
        assert_eq!(c.module.dim(), 2);
        assert!(c.superfluous_kernel);
        assert!(c.module.is_module_map(&s, &c.map));
        assert!(!is_projective(&a, &s, 0).unwrap().projective);
        let w = is_projective(&a, &reg, 0).unwrap();
        assert!(w.projective);
        let id = w.retraction.unwrap().mul(&w.inclusion.unwrap()).unwrap();
        assert_eq!(id, SparseMatrix::identity(2));
    }
}
