//! Univariate polynomials over the rationals, just enough for splitting
//! idempotents: minimal polynomials come from the algebra, roots are found by
//! the rational root test.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Coefficients, constant term first.
pub type Poly = Vec<BigRational>;

pub fn eval(f: &[BigRational], x: &BigRational) -> BigRational {
    f.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Quotient of `f` by `t - r`, assuming `r` is a root.
pub fn deflate(f: &[BigRational], r: &BigRational) -> Poly {
    let n = f.len();
    if n < 2 {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); n - 1];
    let mut carry = BigRational::zero();
    for k in (1..n).rev() {
        carry = &f[k] + carry * r;
        out[k - 1] = carry.clone();
    }
    out
}

fn trim(mut f: Poly) -> Poly {
    while f.last().is_some_and(|c| c.is_zero()) {
        f.pop();
    }
    f
}

// trial division stops here; larger cofactors are still paired in
const TRIAL_LIMIT: u64 = 1_000_000;

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = 1u64;
    loop {
        let bd = BigInt::from(d);
        if &bd * &bd > n || d > TRIAL_LIMIT {
            break;
        }
        if n.is_multiple_of(&bd) {
            out.push(bd.clone());
            out.push(&n / &bd);
        }
        d += 1;
    }
    out.sort();
    out.dedup();
    out
}

/// Distinct rational roots, in increasing order.
pub fn rational_roots(f: &[BigRational]) -> Vec<BigRational> {
    let mut f = trim(f.to_vec());
    let mut roots = Vec::new();
    if f.len() < 2 {
        return roots;
    }
    if f[0].is_zero() {
        roots.push(BigRational::zero());
        while f.first().is_some_and(|c| c.is_zero()) {
            f.remove(0);
        }
    }
    if f.len() < 2 {
        return roots;
    }
    let lcm = f.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = f.iter().map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let ps = divisors(&ints[0]);
    let qs = divisors(ints.last().unwrap());
    for p in &ps {
        for q in &qs {
            for s in [1i32, -1] {
                let r = BigRational::new(p * BigInt::from(s), q.clone());
                if !roots.contains(&r) && eval(&f, &r).is_zero() {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort();
    roots
}

#[cfg(test)]
pub fn degree(f: &[BigRational]) -> Option<usize> {
    let f = trim(f.to_vec());
    (!f.is_empty()).then(|| f.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(cs: &[i64]) -> Poly {
        cs.iter().map(|&c| BigRational::from_integer(c.into())).collect()
    }

    #[test]
    fn roots_of_products_of_linear_factors() {
        // (t - 1/2)(t + 3) t = t^3 + 5/2 t^2 - 3/2 t
        let f = vec![
            BigRational::zero(),
            BigRational::new((-3).into(), 2.into()),
            BigRational::new(5.into(), 2.into()),
            BigRational::one(),
        ];
        let r = rational_roots(&f);
        assert_eq!(r, vec![BigRational::from_integer((-3).into()), BigRational::zero(), BigRational::new(1.into(), 2.into())]);
        assert!(rational_roots(&p(&[1, 0, 1])).is_empty());
        assert!(rational_roots(&p(&[-2, 0, 1])).is_empty());
    }

    #[test]
    fn deflation() {
        // t^2 - 1 = (t - 1)(t + 1)
        let q = deflate(&p(&[-1, 0, 1]), &BigRational::one());
        assert_eq!(q, p(&[1, 1]));
        assert_eq!(degree(&q), Some(1));
    }
}
