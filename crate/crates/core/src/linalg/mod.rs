//! Exact sparse linear algebra: the kernel under every other module.

mod sparse;

pub use sparse::{Rref, RowSpace, SparseMatrix, SparseVec};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use crate::Q;
    use proptest::prelude::*;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn dense(rows: &[&[i64]]) -> SparseMatrix<Q> {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn rref_of_identity_and_zero() {
        let id = SparseMatrix::<Q>::identity(3);
        let r = id.rref();
        assert_eq!(r.reduced, id);
        assert_eq!(r.pivots, vec![0, 1, 2]);
        assert_eq!(r.rank, 3);

        let z = SparseMatrix::<Q>::zero(2, 4);
        let r = z.rref();
        assert_eq!(r.reduced, z);
        assert!(r.pivots.is_empty());
        assert_eq!(r.rank, 0);
    }

    #[test]
    fn rref_of_rank_one_block() {
        let r = dense(&[&[1, 2], &[2, 4]]).rref();
        assert_eq!(r.reduced, dense(&[&[1, 2], &[0, 0]]));
        assert_eq!(r.rank, 1);
        assert_eq!(r.pivots, vec![0]);
    }

    #[test]
    fn solve_examples() {
        let id = SparseMatrix::<Q>::identity(3);
        assert_eq!(id.solve(&[q(1), q(0), q(0)]), Some(vec![q(1), q(0), q(0)]));
        assert_eq!(dense(&[&[1, 1]]).solve(&[q(2)]), Some(vec![q(2), q(0)]));
        assert_eq!(dense(&[&[1], &[1]]).solve(&[q(1), q(2)]), None);
    }

    #[test]
    fn kernel_examples() {
        assert!(SparseMatrix::<Q>::identity(4).kernel_basis().is_empty());
        let k = SparseMatrix::<Q>::zero(1, 2).kernel_basis();
        assert_eq!(k.len(), 2);
        assert_eq!(SparseMatrix::from_dense(&k).rank(), 2);
        let k = dense(&[&[1, 2]]).kernel_basis();
        assert_eq!(k, vec![vec![q(-2), q(1)]]);
    }

    #[test]
    fn triplets_reject_bad_input() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, q(1))]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, q(1)), (0, 0, q(2))]).is_err());
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 1, q(0)), (1, 1, q(3))]).unwrap();
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn row_space_membership() {
        let mut s = RowSpace::<Q>::new(3);
        assert!(s.insert(&SparseVec::from_dense(&[q(1), q(1), q(0)])));
        assert!(s.insert(&SparseVec::from_dense(&[q(0), q(1), q(1)])));
        assert!(!s.insert(&SparseVec::from_dense(&[q(1), q(2), q(1)])));
        assert!(s.contains(&SparseVec::from_dense(&[q(1), q(0), q(-1)])));
        assert_eq!(s.non_pivots(), vec![2]);
    }

    #[test]
    fn generic_over_floats_and_small_rationals() {
        let m = SparseMatrix::<f64>::from_dense(&[vec![2.0, 4.0], vec![1.0, 3.0]]);
        assert_eq!(m.solve(&[2.0, 1.0]), Some(vec![1.0, 0.0]));
        let m = SparseMatrix::<num_rational::Rational64>::from_dense(&[vec![
            num_rational::Rational64::from_int(3),
            num_rational::Rational64::from_int(6),
        ]]);
        assert_eq!(m.kernel_basis().len(), 1);
    }

    fn small_matrix() -> impl Strategy<Value = SparseMatrix<Q>> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-3i64..4, c), r).prop_map(|rows| {
                SparseMatrix::from_dense(&rows.iter().map(|row| row.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>())
            })
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in small_matrix()) {
            prop_assert_eq!(m.rank() + m.kernel_basis().len(), m.cols());
            for v in m.kernel_basis() {
                prop_assert!(m.mul_dense(&v).iter().all(|x| x == &q(0)));
            }
        }

        #[test]
        fn rref_is_idempotent(m in small_matrix()) {
            let once = m.rref().reduced;
            prop_assert_eq!(once.rref().reduced, once.clone());
        }

        #[test]
        fn solutions_are_exact(m in small_matrix(), seed in proptest::collection::vec(-2i64..3, 6)) {
            let x: Vec<Q> = (0..m.cols()).map(|i| q(seed[i])).collect();
            let b = m.mul_dense(&x);
            let sol = m.solve(&b).expect("consistent by construction");
            prop_assert_eq!(m.mul_dense(&sol), b);
        }

        #[test]
        fn row_space_preserved(m in small_matrix()) {
            let r = m.rref();
            let mut a = RowSpace::new(m.cols());
            for row in m.row_vectors() { a.insert(row); }
            let mut b = RowSpace::new(m.cols());
            for row in r.reduced.row_vectors() { b.insert(row); }
            prop_assert_eq!(a.canonical(), b.canonical());
            prop_assert_eq!(a.rank(), r.rank);
        }
    }
}
