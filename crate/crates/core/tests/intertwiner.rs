use std::sync::Arc;

use voa_core::intertwiner::*;
use voa_core::linalg::{SparseMatrix, SparseVec};
use voa_core::models::{build_heisenberg, VoaBuild};
use voa_core::module::TruncatedModule;
use voa_core::{Error, Scalar, Q};

fn q(n: i64, d: i64) -> Q {
    Q::from_frac(n, d)
}

fn heis() -> VoaBuild {
    build_heisenberg(3).unwrap()
}

fn adjoint(b: &VoaBuild) -> Arc<TruncatedModule> {
    Arc::new(b.voa.module.clone())
}

fn cfg() -> IntertwinerCheckConfig {
    IntertwinerCheckConfig { budget: 3, p_range: (-1, 1), q_range: (-1, 1) }
}

fn assert_passes(rep: &voa_core::report::Report) {
    assert!(rep.all_passed(), "{}", rep.to_text());
    assert!(rep.summary.checked > 0);
}

#[test]
fn module_vertex_operator_is_an_intertwiner() {
    let b = heis();
    let m = Arc::new(b.fock(q(1, 2), 2).unwrap());
    let y = module_vertex_operator(&b.voa, &adjoint(&b), &m).unwrap();
    assert_eq!(y.k(), 0);
    let rep = check_axioms(&b.voa, &y, &cfg()).unwrap();
    assert_passes(&rep);
    assert!(rep.count("commutator") > 0 && rep.count("associativity") > 0 && rep.count("derivative") > 0);
    assert!(surjectivity(&y));
    assert_eq!(nilpotency_order(&b.voa, &y.components[0], 5).unwrap(), 1);
    assert_eq!(reconstruct(&b.voa, &y.components[0], 5, y.name.clone()).unwrap(), y);
}

#[test]
fn jordan_example_has_log_degree_one() {
    let b = heis();
    let y = heisenberg_log_example(&b, &q(1, 1), &q(1, 2), 2).unwrap();
    assert_eq!(y.k(), 1);
    assert!(!y.components[1].is_zero());
    let rep = check_axioms(&b.voa, &y, &cfg()).unwrap();
    assert_passes(&rep);
    assert!(rep.records.iter().any(|r| r.check == "borcherds" && r.instance.contains("k=1")));
    // rational modes occur: r = -l m - 1 = -3/2 on the lowest vectors
    let top = &y.components[0];
    assert!(top.r_values(0).contains(&q(-3, 2)));
}

#[test]
fn jordan_example_round_trip() {
    let b = heis();
    let y = heisenberg_log_example(&b, &q(1, 1), &q(1, 2), 2).unwrap();
    let y0 = log_component(&b.voa, &y, 0).unwrap();
    let y1 = log_component(&b.voa, &y, 1).unwrap();
    assert_eq!(y1, y.components[1]);
    assert_eq!(nilpotency_order(&b.voa, &y0, 5).unwrap(), 2);
    let back = reconstruct(&b.voa, &y0, 5, y.name.clone()).unwrap();
    assert_eq!(back, y);
}

#[test]
fn jordan_example_with_zero_second_momentum() {
    // N acts trivially on L(0) of U but the log part survives
    let b = heis();
    let y = heisenberg_log_example(&b, &q(-1, 1), &q(0, 1), 2).unwrap();
    assert_eq!(y.k(), 1);
    assert_passes(&check_axioms(&b.voa, &y, &cfg()).unwrap());
}

#[test]
fn perturbed_mode_breaks_borcherds() {
    let b = heis();
    let m = Arc::new(b.fock(q(1, 2), 2).unwrap());
    let y = module_vertex_operator(&b.voa, &adjoint(&b), &m).unwrap();
    let mut c = y.components[0].clone();
    // the Heisenberg generator's zero mode on the lowest vector
    let g = b.generator_state();
    let r = Q::from_int(0);
    let col = c.column(g, &r, 0).unwrap();
    assert!(!col.is_zero());
    c.set(g, r, 0, col.scale(&Q::from_int(2))).unwrap();
    let bad = LogIntertwiner::new("perturbed", vec![c]).unwrap();
    let rep = check_axioms(&b.voa, &bad, &cfg()).unwrap();
    assert!(!rep.all_passed());
    assert!(rep.failures().any(|r| r.check == "commutator" || r.check == "associativity" || r.check == "borcherds"));
}

#[test]
fn zero_top_component_is_reported() {
    let b = heis();
    let m = Arc::new(b.fock(q(1, 2), 2).unwrap());
    let y = module_vertex_operator(&b.voa, &adjoint(&b), &m).unwrap();
    let z = y.components[0].scale(&Q::from_int(0));
    let bad = LogIntertwiner::new("declared K=1", vec![z.clone(), z]).unwrap();
    let rep = check_axioms(&b.voa, &bad, &cfg()).unwrap();
    assert!(rep.failures().any(|r| r.check == "top-component"));
    assert_eq!(nilpotency_order(&b.voa, &bad.components[0], 5).unwrap(), 0);
}

#[test]
fn weight_twisted_family_is_not_nilpotent() {
    let b = heis();
    let m = Arc::new(b.fock(q(1, 2), 2).unwrap());
    let y = module_vertex_operator(&b.voa, &adjoint(&b), &m).unwrap();
    let base = &y.components[0];
    let mut tw = ModeFamily::zero(base.w.clone(), base.u.clone(), base.t.clone());
    let c = Q::from_int(3);
    for ((w, r, u), v) in base.entries() {
        let k = b.voa.weight(*w) as i32;
        tw.set(*w, r.clone(), *u, v.scale(&num_traits::pow::Pow::pow(&c, k as u32))).unwrap();
    }
    assert!(tw.compatibility_defect(&b.voa).unwrap().is_some());
    assert!(matches!(nilpotency_order(&b.voa, &tw, 3), Err(Error::BoundExceeded(3))));
    assert!(matches!(reconstruct(&b.voa, &tw, 3, "tw"), Err(Error::NotNilpotent(_))));
}

#[test]
fn semisimple_triples_force_log_degree_zero() {
    let b = heis();
    let m = Arc::new(b.fock(q(1, 2), 2).unwrap());
    let y = module_vertex_operator(&b.voa, &adjoint(&b), &m).unwrap();
    let rep = lemma3(&y).unwrap();
    assert_passes(&rep);
    assert_eq!(rep.data["derived_k"], 0);

    let fake = LogIntertwiner::new("fake", vec![y.components[0].clone(), y.components[0].clone()]).unwrap();
    let rep = lemma3(&fake).unwrap();
    let f: Vec<_> = rep.failures().collect();
    assert_eq!(f.len(), 1);
    assert!(f[0].note.as_ref().unwrap().contains("contradiction"));
    // the same family also fails the log relation in the full check
    assert!(matches!(log_component(&b.voa, &fake, 1), Err(Error::RelationViolated(_))));

    let jordan = heisenberg_log_example(&b, &q(1, 1), &q(1, 2), 2).unwrap();
    assert!(matches!(lemma3(&jordan), Err(Error::PreconditionFailed(_))));
}

#[test]
fn directed_set_laws_on_the_shipped_family() {
    let b = heis();
    let fam = heisenberg_family(&b, &q(1, 1), &q(-1, 1), 2).unwrap();
    assert_eq!(fam.len(), 6);
    for y in &fam {
        assert_passes(&check_axioms(&b.voa, y, &cfg()).unwrap());
    }
    let n = fam.len();
    let mut dom = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            dom[i][j] = dominates(&b.voa, &fam[i], &fam[j]).unwrap();
        }
    }
    for i in 0..n {
        assert!(dom[i][i].is_some(), "{} is not reflexive", fam[i].name);
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if let (Some(a), Some(c)) = (&dom[i][j], &dom[j][k]) {
                    let comp = c.compose(a).unwrap();
                    assert_eq!(comp.verify(&fam[i], &fam[k]).unwrap(), None);
                    assert!(dom[i][k].is_some());
                }
            }
        }
    }
    // Y^U sits above both projections; they do not dominate it
    assert!(dom[0][1].is_some() && dom[0][2].is_some());
    assert!(dom[1][0].is_none() && dom[2][0].is_none());
    // p1 and p2 are incomparable
    assert!(dom[1][2].is_none() && dom[2][1].is_none());
    // everything dominates the zero intertwiner
    assert!((0..n).all(|i| dom[i][5].is_some()));
    // 2Y and Y are isomorphic
    assert!(dom[0][3].is_some() && dom[3][0].is_some());

    for i in 0..n {
        for j in 0..n {
            let (y, p1, p2) = join(&fam[i], &fam[j]).unwrap();
            assert!(surjectivity(&y));
            assert_eq!(p1.verify(&y, &fam[i]).unwrap(), None);
            assert_eq!(p2.verify(&y, &fam[j]).unwrap(), None);
            assert!(dominates(&b.voa, &y, &fam[i]).unwrap().is_some());
            assert!(dominates(&b.voa, &y, &fam[j]).unwrap().is_some());
        }
    }
}

#[test]
fn join_of_the_projections_recovers_the_sum() {
    let b = heis();
    let fam = heisenberg_family(&b, &q(1, 1), &q(-1, 1), 2).unwrap();
    let (y, p1, _) = join(&fam[1], &fam[2]).unwrap();
    assert_eq!(y.t().dim(), fam[0].t().dim());
    assert!(dominates(&b.voa, &fam[0], &y).unwrap().is_some());
    assert!(dominates(&b.voa, &y, &fam[0]).unwrap().is_some());
    assert_eq!(p1.matrix.rows(), fam[1].t().dim());
    // join with the zero intertwiner changes nothing
    let (z, _, _) = join(&fam[1], &fam[5]).unwrap();
    assert_eq!(z.t().dim(), fam[1].t().dim());
    // join(y, y) is the diagonal
    let (d, _, _) = join(&fam[1], &fam[1]).unwrap();
    assert_eq!(d.t().dim(), fam[1].t().dim());
}

#[test]
fn diagonal_target_is_not_surjective() {
    let b = heis();
    let m = b.fock(q(1, 2), 2).unwrap();
    let (sum, left, _) = m.direct_sum(&m).unwrap();
    let m = Arc::new(m);
    let y = module_vertex_operator(&b.voa, &adjoint(&b), &m).unwrap();
    let trip: Vec<(usize, usize, Q)> = left.iter().enumerate().map(|(i, &k)| (k, i, Q::from_int(1))).collect();
    let incl = SparseMatrix::from_triplets(sum.dim(), m.dim(), trip).unwrap();
    let sum = Arc::new(sum);
    // map_target only narrows windows; same cutoff here
    let big = y.map_target(&incl, sum, "first factor").unwrap();
    assert!(!surjectivity(&big));
    assert!(surjectivity(&y));
}

#[test]
fn modes_round_trip_through_blocks() {
    let b = heis();
    let y = heisenberg_log_example(&b, &q(1, 1), &q(1, 2), 1).unwrap();
    let blocks = y.to_modes();
    assert!(blocks.iter().any(|b| b.2 == 1));
    let back = LogIntertwiner::from_modes(y.name.clone(), y.w().clone(), y.u().clone(), y.t().clone(), &blocks).unwrap();
    assert_eq!(back, y);
}

#[test]
fn degree_law_is_enforced() {
    let b = heis();
    let m = Arc::new(b.fock(q(1, 2), 2).unwrap());
    let mut c = ModeFamily::zero(adjoint(&b), m.clone(), m.clone());
    // 1_(-1) e_0 must have the weight of e_0; the last basis vector does not
    let err = c.set(0, Q::from_int(-1), 0, SparseVec::unit(m.dim() - 1)).unwrap_err();
    assert!(matches!(err, Error::AxiomViolation(_)));
}

#[test]
fn descriptor_replays() {
    let b = heis();
    let y = heisenberg_log_example(&b, &q(1, 1), &q(1, 2), 2).unwrap();
    let inst = intertwiner_instances(&y, &cfg()).into_iter().find(|i| i.k == 1 && i.v == b.generator_state()).unwrap();
    let back = IntertwinerInstance::parse(&inst.descriptor()).unwrap();
    assert_eq!(back, inst);
    if let Some(r) = run_instance(&y, &back).unwrap() {
        assert!(r.is_zero());
    }
}

#[test]
fn finiteness_bound_is_reported() {
    let b = heis();
    let y = heisenberg_log_example(&b, &q(1, 1), &q(1, 2), 2).unwrap();
    let rep = finiteness_bound(&b.voa, &y, 0).unwrap();
    let bound = rep.data["bound"].as_u64().unwrap();
    assert!(bound >= 2);
    assert_eq!(rep.data["certified"], false);
}
