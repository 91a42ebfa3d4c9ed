//! Weight-graded spaces with a generalized `L(0)` structure.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::linalg::SparseMatrix;
use crate::{Error, QMatrix, Result, Scalar, Q};

/// Eigenvalue of the semisimple part of `L(0)`.
pub type Weight = Q;

/// A finite basis in which every vector carries a weight, truncated at
/// `cutoff`. Basis vectors are sorted by weight.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedSpace {
    weights: Vec<Weight>,
    labels: Vec<String>,
    cutoff: Weight,
    /// Common denominator of all weights.
    denom: i64,
    /// `weight * denom` per basis vector.
    scaled: Vec<i64>,
    cutoff_scaled: i64,
}

impl GradedSpace {
    /// Builds a space from per-vector weights. Weights must be sorted
    /// and not exceed the cutoff.
    pub fn new(weights: Vec<Weight>, labels: Vec<String>, cutoff: Weight) -> Result<Self> {
        if weights.len() != labels.len() {
            return Err(Error::Shape(format!("{} weights for {} labels", weights.len(), labels.len())));
        }
        if weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("basis weights must be sorted".into()));
        }
        if let Some(w) = weights.iter().find(|w| **w > cutoff) {
            return Err(Error::OutOfWindow { weight: w.clone() });
        }
        let mut denom = cutoff.denom().to_i64().unwrap_or(1);
        for w in &weights {
            let d = w.denom().to_i64().ok_or_else(|| Error::InvalidArgument("weight denominator too large".into()))?;
            denom = denom.lcm(&d);
        }
        let scale = |w: &Q| -> Result<i64> {
            (w * Q::from_int(denom))
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::InvalidArgument(format!("weight {w} too large")))
        };
        let scaled = weights.iter().map(scale).collect::<Result<Vec<_>>>()?;
        let cutoff_scaled = scale(&cutoff)?;
        Ok(GradedSpace { weights, labels, cutoff, denom, scaled, cutoff_scaled })
    }

    pub fn zero(cutoff: Weight) -> Self {
        GradedSpace::new(Vec::new(), Vec::new(), cutoff).expect("empty space")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn cutoff(&self) -> &Weight {
        &self.cutoff
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn scaled_weight(&self, i: usize) -> i64 {
        self.scaled[i]
    }

    pub fn scaled_cutoff(&self) -> i64 {
        self.cutoff_scaled
    }

    /// Basis indices grouped by weight.
    pub fn levels(&self) -> BTreeMap<Weight, Vec<usize>> {
        let mut out: BTreeMap<Weight, Vec<usize>> = BTreeMap::new();
        for (i, w) in self.weights.iter().enumerate() {
            out.entry(w.clone()).or_default().push(i);
        }
        out
    }

    pub fn level(&self, w: &Weight) -> Vec<usize> {
        (0..self.dim()).filter(|&i| &self.weights[i] == w).collect()
    }

    pub fn min_weight(&self) -> Option<&Weight> {
        self.weights.first()
    }

    /// Same basis with a smaller cutoff.
    pub fn restrict(&self, cutoff: Weight) -> (GradedSpace, Vec<usize>) {
        let keep: Vec<usize> = (0..self.dim()).filter(|&i| self.weights[i] <= cutoff).collect();
        let weights = keep.iter().map(|&i| self.weights[i].clone()).collect();
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        (GradedSpace::new(weights, labels, cutoff).expect("restriction of a valid space"), keep)
    }
}

/// `(weight, dimension)` for every populated level, sorted by weight.
pub fn graded_dimension(s: &GradedSpace) -> Vec<(Weight, usize)> {
    s.levels().into_iter().map(|(w, v)| (w, v.len())).collect()
}

/// Dimensions at weights `start, start+1, ..., cutoff` including empty levels.
pub fn integral_dimensions(s: &GradedSpace, start: &Weight) -> Vec<usize> {
    let mut out = Vec::new();
    let mut w = start.clone();
    while &w <= s.cutoff() {
        out.push(s.level(&w).len());
        w += Q::one();
    }
    out
}

/// Nilpotent part `N = L(0) - wt` of the `L(0)` action, as a block-diagonal
/// matrix on the whole basis.
#[derive(Clone, Debug, PartialEq)]
pub struct L0Structure {
    pub nilpotent: QMatrix,
}

impl L0Structure {
    pub fn semisimple(dim: usize) -> Self {
        L0Structure { nilpotent: SparseMatrix::zero(dim, dim) }
    }

    pub fn is_semisimple(&self) -> bool {
        self.nilpotent.is_zero()
    }

    /// Smallest `k` with `N^k = 0`.
    pub fn nilpotency_index(&self) -> usize {
        let n = self.nilpotent.rows();
        let mut p = SparseMatrix::identity(n);
        for k in 0..=n {
            if p.is_zero() {
                return k;
            }
            p = self.nilpotent.mul(&p).expect("square");
        }
        n + 1
    }
}

/// Splits a level-preserving operator into `wt * id + N` and checks that `N`
/// is nilpotent on every level.
pub fn l0_split(op: &QMatrix, s: &GradedSpace) -> Result<(Vec<Weight>, L0Structure)> {
    if op.rows() != s.dim() || op.cols() != s.dim() {
        return Err(Error::Shape(format!("operator is {}x{}, space has dimension {}", op.rows(), op.cols(), s.dim())));
    }
    let mut triplets = Vec::new();
    for (r, c, x) in op.triplets() {
        if s.weight(r) != s.weight(c) {
            return Err(Error::InvalidArgument(format!("operator does not preserve levels at ({r}, {c})")));
        }
        let y = if r == c { x - s.weight(r) } else { x.clone() };
        if !y.is_zero() {
            triplets.push((r, c, y));
        }
    }
    let nil = SparseMatrix::from_triplets(s.dim(), s.dim(), triplets)?;
    for (w, idx) in s.levels() {
        let d = idx.len();
        let block: Vec<Vec<Q>> = idx.iter().map(|&r| idx.iter().map(|&c| nil.get(r, c)).collect()).collect();
        let mut p = SparseMatrix::from_dense(&block);
        let b = p.clone();
        for _ in 0..d {
            p = p.mul(&b)?;
        }
        // N^d = 0 iff N is nilpotent on a d-dimensional level
        if !p.is_zero() && d > 0 {
            return Err(Error::NotGeneralizedEigen { weight: w });
        }
    }
    Ok((s.weights().to_vec(), L0Structure { nilpotent: nil }))
}

/// Linear map between graded spaces shifting weights by `degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedMap {
    pub degree: Weight,
    pub matrix: QMatrix,
}

impl GradedMap {
    /// Checks that every nonzero entry maps weight `w` to weight `w + degree`.
    pub fn new(source: &GradedSpace, target: &GradedSpace, degree: Weight, matrix: QMatrix) -> Result<Self> {
        if matrix.rows() != target.dim() || matrix.cols() != source.dim() {
            return Err(Error::Shape(format!(
                "map is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                target.dim(),
                source.dim()
            )));
        }
        for (r, c, _) in matrix.triplets() {
            if target.weight(r) != &(source.weight(c) + &degree) {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) has the wrong degree")));
            }
        }
        Ok(GradedMap { degree, matrix })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn space(ws: &[i64], cutoff: i64) -> GradedSpace {
        GradedSpace::new(ws.iter().map(|&w| q(w)).collect(), ws.iter().map(|w| format!("v{w}")).collect(), q(cutoff)).unwrap()
    }

    #[test]
    fn zero_space_has_no_levels() {
        assert!(graded_dimension(&GradedSpace::zero(q(3))).is_empty());
    }

    #[test]
    fn rejects_unsorted_and_out_of_window() {
        assert!(GradedSpace::new(vec![q(1), q(0)], vec!["a".into(), "b".into()], q(3)).is_err());
        assert!(GradedSpace::new(vec![q(4)], vec!["a".into()], q(3)).is_err());
    }

    #[test]
    fn fractional_weights_share_a_denominator() {
        let s = GradedSpace::new(
            vec![Q::from_frac(1, 16), Q::from_frac(17, 16), Q::from_frac(3, 2)],
            vec!["a".into(), "b".into(), "c".into()],
            q(2),
        )
        .unwrap();
        assert_eq!(s.denom(), 16);
        assert_eq!(s.scaled_weight(2), 24);
        assert_eq!(s.scaled_cutoff(), 32);
    }

    #[test]
    fn diagonal_l0_is_semisimple() {
        let s = space(&[0, 1, 1], 2);
        let op = SparseMatrix::from_dense(&[vec![q(0), q(0), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]]);
        let (_, l0) = l0_split(&op, &s).unwrap();
        assert!(l0.is_semisimple());
    }

    #[test]
    fn jordan_block_gives_elementary_nilpotent() {
        let s = space(&[2, 2], 2);
        let op = SparseMatrix::from_dense(&[vec![q(2), q(1)], vec![q(0), q(2)]]);
        let (_, l0) = l0_split(&op, &s).unwrap();
        assert_eq!(l0.nilpotent.to_dense(), vec![vec![q(0), q(1)], vec![q(0), q(0)]]);
        assert_eq!(l0.nilpotency_index(), 2);
    }

    #[test]
    fn distinct_eigenvalues_are_rejected() {
        let s = space(&[1, 1], 1);
        let op = SparseMatrix::from_dense(&[vec![q(1), q(0)], vec![q(0), q(2)]]);
        assert!(matches!(l0_split(&op, &s), Err(Error::NotGeneralizedEigen { .. })));
    }

    #[test]
    fn graded_maps_check_degree() {
        let s = space(&[0, 1], 1);
        let shift = SparseMatrix::from_dense(&[vec![q(0), q(0)], vec![q(1), q(0)]]);
        assert!(GradedMap::new(&s, &s, q(1), shift.clone()).is_ok());
        assert!(GradedMap::new(&s, &s, q(0), shift).is_err());
    }
}
