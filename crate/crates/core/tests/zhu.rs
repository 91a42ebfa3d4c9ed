use voa_core::cofinite::{cm_subspace, homogeneous_complement, Subspace};
use voa_core::models::{build_heisenberg, build_ising, kac_weights};
use voa_core::zhu::*;
use voa_core::{Error, Scalar, Q};

#[test]
fn zero_modes_on_ising_modules() {
    let b = build_ising(8).unwrap();
    let z = zhu_algebra(&b.voa, 0, ZhuOptions::default()).unwrap();
    for h in kac_weights(3, 4) {
        let m = b.virasoro_simple(h.clone(), 3).unwrap();
        let rep = check_zero_modes(&b.voa, &z, &m, ZhuOptions::default()).unwrap();
        assert!(rep.all_passed(), "h={h}: {}", rep.to_text());
        assert!(rep.count("product") >= 9);
    }
}

#[test]
fn omega_acts_by_the_top_weight() {
    let b = build_ising(8).unwrap();
    let z = zhu_algebra(&b.voa, 0, ZhuOptions::default()).unwrap();
    let omega = z.lift(&z.reduce(&b.voa.omega));
    for h in kac_weights(3, 4) {
        let m = b.virasoro_simple(h.clone(), 2).unwrap();
        let top = voa_core::linalg::SparseVec::unit(0);
        assert_eq!(zero_mode(&b.voa, &m, &omega, &top).unwrap(), top.scale(&h));
    }
}

#[test]
fn first_zhu_algebra_of_ising() {
    let b = build_ising(10).unwrap();
    let z = zhu_algebra(&b.voa, 1, ZhuOptions::default()).unwrap();
    assert!(z.check_associativity().all_passed());
    assert!(z.check_unit().all_passed());
    for h in kac_weights(3, 4) {
        let m = b.virasoro_simple(h.clone(), 3).unwrap();
        let rep = check_zero_modes(&b.voa, &z, &m, ZhuOptions::default()).unwrap();
        assert!(rep.all_passed(), "h={h}: {}", rep.to_text());
    }
}

#[test]
fn reduced_ising_algebra_keeps_everything() {
    let b = build_ising(8).unwrap();
    let z = zhu_algebra(&b.voa, 0, ZhuOptions::default()).unwrap();
    let r = reduced_algebra(&b.voa, &z, &kac_weights(3, 4), 0, 3).unwrap();
    assert_eq!(r.dims, vec![(1, 3), (2, 3), (3, 3)]);
    assert_eq!(r.stable_s, 1);
    // a single weight leaves only its block
    let r = reduced_algebra(&b.voa, &z, &[Q::from_int(0)], 0, 3).unwrap();
    assert_eq!(r.algebra.dim(), 1);
}

#[test]
fn b_plus_otilde_on_the_ising_vacuum() {
    let b = build_ising(8).unwrap();
    let v = &b.voa.module;
    let (c2, _) = cm_subspace(&b.voa, v, 2).unwrap();
    let comp = homogeneous_complement(v, &c2);
    let bsp = Subspace::from_vectors(v.dim(), &comp.iter().map(|&i| voa_core::linalg::SparseVec::unit(i)).collect::<Vec<_>>());
    let rep = b_plus_otilde_check(&b.voa, v, 0, &bsp).unwrap();
    assert!(rep.all_passed(), "{}", rep.to_text());
    assert!(rep.summary.checked >= 4);
    let full = Subspace::full(v.dim());
    assert!(b_plus_otilde_check(&b.voa, v, 0, &full).unwrap().all_passed());
    let zero = Subspace::new(v.dim());
    match b_plus_otilde_check(&b.voa, v, 0, &zero) {
        Err(Error::PreconditionFailed(msg)) => assert!(msg.contains("weight 0"), "{msg}"),
        other => panic!("expected a precondition failure, got {other:?}"),
    }
    let o = o_tilde_span(&b.voa, v, 0).unwrap();
    assert!(o.codim() <= 9 * 3);
}

#[test]
fn o_tilde_contains_the_zhu_family() {
    let b = build_heisenberg(5).unwrap();
    let o = o_tilde_span(&b.voa, &b.voa.module, 0).unwrap();
    let opts = ZhuOptions { include_weight_zero: false, with_translation: false };
    for g in o_n_generators(&b.voa, 0, 5, opts).unwrap() {
        assert!(o.contains(&g));
    }
}

#[test]
fn vacuum_class_is_the_identity() {
    for z in [
        zhu_algebra(&build_heisenberg(5).unwrap().voa, 0, ZhuOptions::default()).unwrap(),
        zhu_algebra(&build_ising(6).unwrap().voa, 0, ZhuOptions::default()).unwrap(),
    ] {
        assert!(z.check_unit().all_passed());
        assert_eq!(z.reduce(&voa_core::linalg::SparseVec::unit(0)), z.unit);
    }
}

#[test]
fn zero_module_has_zero_o_tilde() {
    let b = build_heisenberg(3).unwrap();
    let fock = b.fock(Q::from_int(1), 2).unwrap();
    let (empty, _) = fock.restrict_to(&voa_core::linalg::RowSpace::new(fock.dim())).unwrap();
    assert_eq!(empty.dim(), 0);
    assert_eq!(o_tilde_span(&b.voa, &empty, 0).unwrap().dim(), 0);
}
