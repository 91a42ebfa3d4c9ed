use std::collections::HashMap;

use super::FDModule;
use crate::linalg::{RowSpace, SparseMatrix, SparseVec};
use crate::report::Report;
use crate::{Error, Result, Scalar};

fn vec_string<T: Scalar>(v: &SparseVec<T>) -> String {
    let parts: Vec<String> = v.iter().map(|(i, c)| format!("{}*e{i}", c.to_exact_string())).collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn column_span<T: Scalar>(m: &SparseMatrix<T>) -> RowSpace<T> {
    let t = m.transpose();
    let mut s = RowSpace::new(m.rows());
    for r in t.row_vectors() {
        s.insert(r);
    }
    s
}

/// Checks `im f_{i-1} = ker f_i` at every interior node of
/// `V_0 -> V_1 -> ... -> V_k`, where `maps[i]: V_i -> V_{i+1}` has
/// `dims[i+1]` rows and `dims[i]` columns.
pub fn check_exact<T: Scalar>(dims: &[usize], maps: &[SparseMatrix<T>]) -> Result<Report> {
    if maps.len() + 1 != dims.len() {
        return Err(Error::Shape(format!("{} nodes need {} maps, got {}", dims.len(), dims.len().saturating_sub(1), maps.len())));
    }
    for (i, f) in maps.iter().enumerate() {
        if f.cols() != dims[i] || f.rows() != dims[i + 1] {
            return Err(Error::Shape(format!("map {i} is {}x{}, expected {}x{}", f.rows(), f.cols(), dims[i + 1], dims[i])));
        }
    }
    let mut rep = Report::new("exactness", format!("sequence of length {}", dims.len()));
    for node in 1..dims.len().saturating_sub(1) {
        let (fin, fout) = (&maps[node - 1], &maps[node]);
        let inst = format!("node={node}");
        let comp = fout.mul(fin)?;
        if let Some((r, c, _)) = comp.triplets().first().cloned() {
            let w = fin.mul_sparse(&SparseVec::unit(c));
            rep.fail("exact", inst, format!("composite nonzero: image vector {} maps to nonzero (row {r})", vec_string(&w)));
            continue;
        }
        let image = column_span(fin);
        let kernel: Vec<SparseVec<T>> = fout.kernel_basis().iter().map(|k| SparseVec::from_dense(k)).collect();
        match kernel.iter().find(|k| !image.contains(k)) {
            None => rep.pass("exact", inst),
            Some(k) => rep.fail("exact", inst, format!("kernel vector {} is not in the image", vec_string(k))),
        }
    }
    Ok(rep)
}

/// `0 -> A -> B -> C -> 0` of modules over one algebra.
#[derive(Clone, Debug)]
pub struct ShortExactSequence<T: Scalar> {
    pub a: FDModule<T>,
    pub b: FDModule<T>,
    pub c: FDModule<T>,
    pub tau: SparseMatrix<T>,
    pub sigma: SparseMatrix<T>,
}

impl<T: Scalar> ShortExactSequence<T> {
    /// Checks that both maps are module maps and that the sequence is
    /// exact at every node.
    pub fn new(a: FDModule<T>, b: FDModule<T>, c: FDModule<T>, tau: SparseMatrix<T>, sigma: SparseMatrix<T>) -> Result<Self> {
        if !a.is_module_map(&b, &tau) || !b.is_module_map(&c, &sigma) {
            return Err(Error::AxiomViolation("maps do not commute with the action".into()));
        }
        let s = ShortExactSequence { a, b, c, tau, sigma };
        let rep = s.check()?;
        if let Some(r) = rep.failures().next() {
            return Err(Error::AxiomViolation(format!("not exact at {}: {}", r.instance, r.note.clone().unwrap_or_default())));
        }
        Ok(s)
    }

    pub fn check(&self) -> Result<Report> {
        let (a, b, c) = (self.a.dim(), self.b.dim(), self.c.dim());
        check_exact(&[0, a, b, c, 0], &[SparseMatrix::zero(a, 0), self.tau.clone(), self.sigma.clone(), SparseMatrix::zero(0, c)])
    }
}

#[derive(Clone, Debug)]
pub struct Arrow<T: Scalar> {
    pub name: String,
    pub from: String,
    pub to: String,
    pub matrix: SparseMatrix<T>,
}

/// Nodes with dimensions, arrows between them, pairs of paths that must
/// agree, and chains of arrows that must be exact.
#[derive(Clone, Debug)]
pub struct Diagram<T: Scalar> {
    pub nodes: Vec<(String, usize)>,
    pub arrows: Vec<Arrow<T>>,
    /// Paths are lists of arrow names in the order they are applied.
    pub squares: Vec<(Vec<String>, Vec<String>)>,
    pub exact: Vec<Vec<String>>,
}

impl<T: Scalar> Diagram<T> {
    fn arrow_map(&self) -> Result<HashMap<&str, &Arrow<T>>> {
        let dims: HashMap<&str, usize> = self.nodes.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        let mut out = HashMap::new();
        for a in &self.arrows {
            let (Some(&df), Some(&dt)) = (dims.get(a.from.as_str()), dims.get(a.to.as_str())) else {
                return Err(Error::Shape(format!("arrow {} joins unknown nodes", a.name)));
            };
            if a.matrix.cols() != df || a.matrix.rows() != dt {
                return Err(Error::Shape(format!("arrow {} is {}x{}, nodes need {dt}x{df}", a.name, a.matrix.rows(), a.matrix.cols())));
            }
            if out.insert(a.name.as_str(), a).is_some() {
                return Err(Error::Shape(format!("arrow {} defined twice", a.name)));
            }
        }
        Ok(out)
    }

    fn path<'a>(&'a self, arrows: &HashMap<&str, &'a Arrow<T>>, names: &[String]) -> Result<Vec<&'a Arrow<T>>> {
        let mut out: Vec<&Arrow<T>> = Vec::new();
        for n in names {
            let a = *arrows.get(n.as_str()).ok_or_else(|| Error::Shape(format!("unknown arrow {n}")))?;
            if let Some(prev) = out.last() {
                if prev.to != a.from {
                    return Err(Error::Shape(format!("arrows {} and {} do not compose", prev.name, a.name)));
                }
            }
            out.push(a);
        }
        if out.is_empty() {
            return Err(Error::Shape("empty path".into()));
        }
        Ok(out)
    }
}

/// Checks every required square and every exact chain.
pub fn check_commutative_diagram<T: Scalar>(d: &Diagram<T>) -> Result<Report> {
    let arrows = d.arrow_map()?;
    let mut rep = Report::new("diagram", format!("{} nodes, {} arrows", d.nodes.len(), d.arrows.len()));
    for (k, (p1, p2)) in d.squares.iter().enumerate() {
        let a = d.path(&arrows, p1)?;
        let b = d.path(&arrows, p2)?;
        if a[0].from != b[0].from || a.last().unwrap().to != b.last().unwrap().to {
            return Err(Error::Shape(format!("square {k}: paths have different endpoints")));
        }
        let compose = |p: &[&Arrow<T>]| -> Result<SparseMatrix<T>> {
            let mut m = p[0].matrix.clone();
            for x in &p[1..] {
                m = x.matrix.mul(&m)?;
            }
            Ok(m)
        };
        let (ma, mb) = (compose(&a)?, compose(&b)?);
        let inst = format!("square={k} {} = {}", p1.join("."), p2.join("."));
        let diff = ma.add(&mb.scale(&-T::one()))?;
        match diff.triplets().first() {
            None => rep.pass("commutes", inst),
            Some((_, c, _)) => {
                let v = SparseVec::unit(*c);
                rep.fail(
                    "commutes",
                    inst,
                    format!("on e{c} of {}: {} vs {}", a[0].from, vec_string(&ma.mul_sparse(&v)), vec_string(&mb.mul_sparse(&v))),
                );
            }
        }
    }
    for chain in &d.exact {
        let p = d.path(&arrows, chain)?;
        let dims: Vec<usize> = std::iter::once(p[0].matrix.cols()).chain(p.iter().map(|a| a.matrix.rows())).collect();
        let maps: Vec<SparseMatrix<T>> = p.iter().map(|a| a.matrix.clone()).collect();
        let mut sub = check_exact(&dims, &maps)?;
        for r in &mut sub.records {
            r.instance = format!("chain={} {}", chain.join("."), r.instance);
        }
        rep.merge(sub);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;
    use crate::Q;

    fn m(rows: &[&[i64]]) -> SparseMatrix<Q> {
        SparseMatrix::from_dense(&rows.iter().map(|r| r.iter().map(|&x| Q::from_int(x)).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn diagonal_and_difference() {
        // 0 -> Q -> Q^2 -> Q -> 0
        let rep = check_exact(&[0, 1, 2, 1, 0], &[SparseMatrix::zero(1, 0), m(&[&[1], &[1]]), m(&[&[1, -1]]), SparseMatrix::zero(0, 1)]).unwrap();
        assert!(rep.all_passed());
        assert_eq!(rep.summary.checked, 3);
        let bad = check_exact(&[1, 2, 1], &[m(&[&[1], &[1]]), m(&[&[1, 1]])]).unwrap();
        assert!(!bad.all_passed());
        assert!(bad.records[0].note.as_ref().unwrap().contains("composite nonzero"));
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(check_exact(&[1, 2], &[m(&[&[1]])]), Err(Error::Shape(_))));
    }
}
