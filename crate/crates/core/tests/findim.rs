use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voa_core::findim::*;
use voa_core::linalg::{RowSpace, SparseMatrix, SparseVec};
use voa_core::models::build_ising;
use voa_core::zhu::{zhu_algebra, ZhuOptions};
use voa_core::{Scalar, Q};

type Alg = FinDimAlgebra<Q>;
type Module = FDModule<Q>;

fn q(n: i64) -> Q {
    Q::from_int(n)
}

fn simple_top(alg: &Alg, m: &Module) -> Module {
    m.quotient(&m.radical_submodule(alg)).unwrap().0
}

fn span_dim(vs: &[SparseVec<Q>], n: usize) -> usize {
    let mut s = RowSpace::new(n);
    for v in vs {
        s.insert(v);
    }
    s.rank()
}

#[test]
fn dual_numbers() {
    let a = Alg::truncated_polynomial(2);
    let rad = a.radical();
    assert_eq!(rad.len(), 1);
    // the radical is spanned by x
    assert_eq!(span_dim(&[rad[0].clone(), SparseVec::unit(1)], 2), 1);
    assert_eq!(a.nilpotency_index(&rad), Some(2));
    assert!(!a.is_semisimple());

    let pis = projective_indecomposables(&a, 1).unwrap();
    assert_eq!(pis.iter().map(|p| p.module.dim()).collect::<Vec<_>>(), vec![2]);

    let reg = a.regular_module();
    let s = simple_top(&a, &reg);
    assert_eq!(s.dim(), 1);
    let cover = projective_cover(&a, &s, 1).unwrap();
    assert_eq!(cover.module.dim(), 2);
    assert!(cover.superfluous_kernel);
    assert!(s.is_module_map(&s, &SparseMatrix::identity(1)));
    assert!(cover.module.is_module_map(&s, &cover.map));
    // kernel of the cover is the radical of the cover
    let ker = cover.map.kernel_basis();
    assert_eq!(ker.len(), 1);
    assert_eq!(cover.module.radical_submodule(&a).rank(), 1);

    assert!(!is_projective(&a, &s, 1).unwrap().projective);
    let w = is_projective(&a, &reg, 1).unwrap();
    assert!(w.projective);
    let (i, r) = (w.inclusion.unwrap(), w.retraction.unwrap());
    assert_eq!(r.mul(&i).unwrap(), SparseMatrix::identity(2));

    // S is not a summand of A, A is a summand of A + S
    assert!(direct_summand_test(&s, &reg, 3).is_none());
    let big = reg.direct_sum(&s);
    let (i, r) = direct_summand_test(&reg, &big, 3).unwrap();
    assert!(reg.is_module_map(&big, &i));
    assert!(big.is_module_map(&reg, &r));
    assert_eq!(r.mul(&i).unwrap(), SparseMatrix::identity(2));
}

#[test]
fn truncated_cubic() {
    let a = Alg::truncated_polynomial(3);
    let rad = a.radical();
    assert_eq!(rad.len(), 2);
    assert_eq!(a.nilpotency_index(&rad), Some(3));
    let pis = projective_indecomposables(&a, 2).unwrap();
    assert_eq!(pis.iter().map(|p| p.module.dim()).collect::<Vec<_>>(), vec![3]);
    let cs = composition_series(&a, &a.regular_module(), 2).unwrap();
    assert_eq!(cs.flag_dims, vec![0, 1, 2, 3]);
    assert_eq!(cs.factors.len(), 3);
    let s = simple_top(&a, &a.regular_module());
    assert!(cs.factors.iter().all(|f| f.isomorphism(&s, &mut ChaCha8Rng::seed_from_u64(0)).is_some()));
}

#[test]
fn split_product() {
    let a = Alg::product_of_fields(2);
    assert!(a.radical().is_empty());
    assert!(a.is_semisimple());
    let pis = projective_indecomposables(&a, 4).unwrap();
    assert_eq!(pis.iter().map(|p| p.module.dim()).collect::<Vec<_>>(), vec![1, 1]);
    // every module is projective
    for p in &pis {
        assert!(is_projective(&a, &p.module, 4).unwrap().projective);
        let cover = projective_cover(&a, &p.module, 4).unwrap();
        assert_eq!(cover.map.rank(), 1);
    }
    let m = pis[0].module.direct_sum(&pis[1].module).direct_sum(&pis[0].module);
    let w = is_projective(&a, &m, 4).unwrap();
    assert!(w.projective);
    assert_eq!(w.free_rank, 3);
    assert!(!pis[0].module.isomorphism(&pis[1].module, &mut ChaCha8Rng::seed_from_u64(4)).is_some());
}

#[test]
fn upper_triangular_two() {
    let a = Alg::upper_triangular(2);
    assert_eq!(a.radical().len(), 1);
    assert_eq!(a.nilpotency_index(&a.radical()), Some(2));
    let pis = projective_indecomposables(&a, 5).unwrap();
    let mut dims: Vec<usize> = pis.iter().map(|p| p.module.dim()).collect();
    dims.sort();
    assert_eq!(dims, vec![1, 2]);

    let p2 = pis.iter().find(|p| p.module.dim() == 2).unwrap();
    let p1 = pis.iter().find(|p| p.module.dim() == 1).unwrap();
    // the simple top of the two dimensional projective is not projective
    let top = simple_top(&a, &p2.module);
    assert_eq!(top.dim(), 1);
    assert!(top.isomorphism(&p1.module, &mut ChaCha8Rng::seed_from_u64(5)).is_none());
    assert!(!is_projective(&a, &top, 5).unwrap().projective);
    assert!(is_projective(&a, &p1.module, 5).unwrap().projective);
    let cover = projective_cover(&a, &top, 5).unwrap();
    assert_eq!(cover.module.dim(), 2);
    assert!(cover.superfluous_kernel);

    // A = P1 + P2, and P2 has both simples as factors
    let reg = a.regular_module();
    assert!(direct_summand_test(&p2.module, &reg, 5).is_some());
    let cs = composition_series(&a, &p2.module, 5).unwrap();
    assert!(same_factors(&cs.factors, &[top.clone(), p1.module.clone()], 5));
}

fn test_modules() -> Vec<(Alg, Module)> {
    let mut out = Vec::new();
    for a in [Alg::truncated_polynomial(2), Alg::truncated_polynomial(3), Alg::product_of_fields(2), Alg::upper_triangular(2), Alg::upper_triangular(3)] {
        let reg = a.regular_module();
        let top = simple_top(&a, &reg);
        out.push((a.clone(), reg.direct_sum(&top)));
        out.push((a.clone(), reg.direct_sum(&reg)));
        out.push((a, reg));
    }
    out
}

#[test]
fn jordan_holder_on_random_flags() {
    let mods = test_modules();
    let mut rng = ChaCha8Rng::seed_from_u64(0x3f1a);
    let mut distinct_flags = 0;
    for round in 0..100 {
        let (a, m) = &mods[round % mods.len()];
        let (s1, s2) = (rng.gen::<u64>(), rng.gen::<u64>());
        let c1 = composition_series(a, m, s1).unwrap();
        let c2 = composition_series(a, m, s2).unwrap();
        assert_eq!(*c1.flag_dims.last().unwrap(), m.dim());
        assert_eq!(c1.factors.len(), c2.factors.len(), "round {round}");
        assert!(same_factors(&c1.factors, &c2.factors, s1 ^ s2), "round {round}: factors differ for {}", m.name);
        for f in &c1.factors {
            // factors are simple: their radical part is zero and their top is themselves
            assert_eq!(f.radical_submodule(a).rank(), 0);
        }
        let mut iso_rng = ChaCha8Rng::seed_from_u64(s1);
        if c1.factors.iter().zip(&c2.factors).any(|(x, y)| x.isomorphism(y, &mut iso_rng).is_none()) {
            distinct_flags += 1;
        }
    }
    // the seeds reorder factors on at least some modules
    assert!(distinct_flags > 0);
}

// random invertible matrix and its inverse from elementary operations
fn random_invertible(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
    let id: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| q((i == j) as i64)).collect()).collect();
    let (mut p, mut inv) = (id.clone(), id);
    if n < 2 {
        return (p, inv);
    }
    for _ in 0..3 * n {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let k = q(rng.gen_range(-2..=2));
        // p <- E p with E = I + k e_ij, inv <- inv E^{-1}
        for c in 0..n {
            let x = p[j][c].clone();
            p[i][c] = p[i][c].clone() + k.clone() * x;
        }
        for r in 0..n {
            let x = inv[r][i].clone();
            inv[r][j] = inv[r][j].clone() - k.clone() * x;
        }
    }
    (p, inv)
}

fn predicted(dims: &[usize], maps: &[SparseMatrix<Q>]) -> Vec<bool> {
    (1..dims.len() - 1)
        .map(|node| {
            let comp = maps[node].mul(&maps[node - 1]).unwrap();
            comp.is_zero() && maps[node - 1].rank() + maps[node].rank() == dims[node]
        })
        .collect()
}

fn random_ses(rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<SparseMatrix<Q>>) {
    let (a, c) = (rng.gen_range(0..=3), rng.gen_range(0..=3));
    let b = a + c;
    let (p, inv) = random_invertible(b, rng);
    let tau: Vec<Vec<Q>> = (0..b).map(|r| p[r][..a].to_vec()).collect();
    let sigma: Vec<Vec<Q>> = inv[a..].to_vec();
    let tau = if a == 0 { SparseMatrix::zero(b, 0) } else { SparseMatrix::from_dense(&tau) };
    let sigma = if c == 0 || b == 0 { SparseMatrix::zero(c, b) } else { SparseMatrix::from_dense(&sigma) };
    (vec![0, a, b, c, 0], vec![SparseMatrix::zero(a, 0), tau, sigma, SparseMatrix::zero(0, c)])
}

fn perturb(m: &SparseMatrix<Q>, rng: &mut ChaCha8Rng) -> SparseMatrix<Q> {
    if m.rows() == 0 || m.cols() == 0 {
        return m.clone();
    }
    let (r, c) = (rng.gen_range(0..m.rows()), rng.gen_range(0..m.cols()));
    let delta = SparseMatrix::from_triplets(m.rows(), m.cols(), [(r, c, q(rng.gen_range(1..=3)))]).unwrap();
    m.add(&delta).unwrap()
}

#[test]
fn exactness_agrees_with_rank_nullity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe7ac);
    for k in 0..100 {
        let (dims, maps) = random_ses(&mut rng);
        assert!(predicted(&dims, &maps).iter().all(|&x| x));
        let rep = check_exact(&dims, &maps).unwrap();
        assert_eq!(rep.count("exact"), 3);
        assert!(rep.all_passed(), "sequence {k}: {}", rep.to_text());
    }
    let mut inexact = 0;
    while inexact < 100 {
        let (dims, mut maps) = random_ses(&mut rng);
        let which = rng.gen_range(1..=2);
        maps[which] = perturb(&maps[which], &mut rng);
        let want = predicted(&dims, &maps);
        if want.iter().all(|&x| x) {
            continue;
        }
        inexact += 1;
        let rep = check_exact(&dims, &maps).unwrap();
        let got: Vec<bool> = rep.records.iter().map(|r| r.passed).collect();
        assert_eq!(got, want, "{}", rep.to_text());
        assert!(rep.failures().all(|r| r.note.is_some()));
    }
}

fn kron(a: &SparseMatrix<Q>, b: &SparseMatrix<Q>) -> SparseMatrix<Q> {
    let mut t = Vec::new();
    for (r1, c1, x) in a.triplets() {
        for (r2, c2, y) in b.triplets() {
            t.push((r1 * b.rows() + r2, c1 * b.cols() + c2, x.clone() * y));
        }
    }
    SparseMatrix::from_triplets(a.rows() * b.rows(), a.cols() * b.cols(), t).unwrap()
}

/// The 3x3 grid `E_i (x) E_j` for the sequence `0 -> rad A -> A -> A/rad A -> 0`
/// over the dual numbers, with the algebra acting on the first factor.
fn tensor_grid() -> (Alg, Vec<Vec<Module>>, Diagram<Q>) {
    let a = Alg::truncated_polynomial(2);
    let reg = a.regular_module();
    let (rad, inc) = reg.submodule(&reg.radical_submodule(&a)).unwrap();
    let (top, proj) = reg.quotient(&reg.radical_submodule(&a)).unwrap();
    let e = [rad, reg, top];
    let maps = [inc, proj];
    let dim = |i: usize| e[i].dim();

    let grid: Vec<Vec<Module>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    let action = e[i].action().iter().map(|x| kron(x, &SparseMatrix::identity(dim(j)))).collect();
                    Module::new(&a, format!("M{i}{j}"), dim(i) * dim(j), action).unwrap()
                })
                .collect()
        })
        .collect();
    let mut nodes: Vec<(String, usize)> = vec![("Z".into(), 0)];
    let mut arrows = Vec::new();
    let arrow = |name: String, from: String, to: String, matrix| Arrow { name, from, to, matrix };
    for i in 0..3 {
        for j in 0..3 {
            nodes.push((format!("M{i}{j}"), dim(i) * dim(j)));
            if j < 2 {
                let m = kron(&SparseMatrix::identity(dim(i)), &maps[j]);
                arrows.push(arrow(format!("h{i}{j}"), format!("M{i}{j}"), format!("M{i}{}", j + 1), m));
            }
            if i < 2 {
                let m = kron(&maps[i], &SparseMatrix::identity(dim(j)));
                arrows.push(arrow(format!("v{i}{j}"), format!("M{i}{j}"), format!("M{}{j}", i + 1), m));
            }
        }
        arrows.push(arrow(format!("zr{i}"), "Z".into(), format!("M{i}0"), SparseMatrix::zero(dim(i) * dim(0), 0)));
        arrows.push(arrow(format!("rz{i}"), format!("M{i}2"), "Z".into(), SparseMatrix::zero(0, dim(i) * dim(2))));
        arrows.push(arrow(format!("zc{i}"), "Z".into(), format!("M0{i}"), SparseMatrix::zero(dim(0) * dim(i), 0)));
        arrows.push(arrow(format!("cz{i}"), format!("M2{i}"), "Z".into(), SparseMatrix::zero(0, dim(2) * dim(i))));
    }
    let mut squares = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            squares.push((vec![format!("h{i}{j}"), format!("v{i}{}", j + 1)], vec![format!("v{i}{j}"), format!("h{}{j}", i + 1)]));
        }
    }
    let mut exact = Vec::new();
    for i in 0..3 {
        exact.push(vec![format!("zr{i}"), format!("h{i}0"), format!("h{i}1"), format!("rz{i}")]);
        exact.push(vec![format!("zc{i}"), format!("v0{i}"), format!("v1{i}"), format!("cz{i}")]);
    }
    (a, grid, Diagram { nodes, arrows, squares, exact })
}

#[test]
fn three_by_three_grid_commutes_and_is_exact() {
    let (_, grid, d) = tensor_grid();
    // every arrow between grid nodes is a module map
    for ar in &d.arrows {
        let find = |n: &str| grid.iter().flatten().find(|m| m.name == n);
        if let (Some(f), Some(t)) = (find(&ar.from), find(&ar.to)) {
            assert!(f.is_module_map(t, &ar.matrix), "{}", ar.name);
        }
    }
    let rep = check_commutative_diagram(&d).unwrap();
    assert!(rep.all_passed(), "{}", rep.to_text());
    assert_eq!(rep.count("commutes"), 4);
    assert_eq!(rep.count("exact"), 18);
}

#[test]
fn negated_arrow_breaks_the_grid() {
    let (_, _, mut d) = tensor_grid();
    let ar = d.arrows.iter_mut().find(|a| a.name == "h11").unwrap();
    ar.matrix = ar.matrix.scale(&q(-1));
    let rep = check_commutative_diagram(&d).unwrap();
    assert!(!rep.all_passed());
    let bad: Vec<&str> = rep.failures().map(|r| r.check.as_str()).collect();
    // exactness survives a sign change, both squares through h11 do not
    assert_eq!(bad, vec!["commutes", "commutes"]);
    assert!(rep.failures().all(|r| r.instance.contains("h11") && r.note.as_deref().unwrap_or("").contains(" vs ")));
}

#[test]
fn zero_arrow_breaks_exactness() {
    let (_, _, mut d) = tensor_grid();
    let ar = d.arrows.iter_mut().find(|a| a.name == "v10").unwrap();
    ar.matrix = SparseMatrix::zero(ar.matrix.rows(), ar.matrix.cols());
    let rep = check_commutative_diagram(&d).unwrap();
    assert!(rep.failures().any(|r| r.check == "exact" && r.instance.contains("v10")));
}

#[test]
fn ising_zhu_algebra_is_semisimple() {
    let b = build_ising(8).unwrap();
    let z = zhu_algebra(&b.voa, 0, ZhuOptions::default()).unwrap();
    let a = z.algebra().unwrap();
    assert_eq!(a.dim(), 3);
    assert_eq!(a.radical().is_empty(), a.is_semisimple());
    assert!(a.is_semisimple());
    let pis = projective_indecomposables(&a, 7).unwrap();
    assert_eq!(pis.iter().map(|p| p.module.dim()).collect::<Vec<_>>(), vec![1, 1, 1]);
}

#[test]
fn nonsemisimple_radical_is_nonzero() {
    for a in [Alg::truncated_polynomial(2), Alg::upper_triangular(3), Alg::truncated_polynomial(2).product(&Alg::matrix_algebra(2))] {
        assert_eq!(a.radical().is_empty(), a.is_semisimple(), "{}", a.name);
        assert!(!a.is_semisimple());
    }
    assert!(Alg::matrix_algebra(2).is_semisimple());
}
