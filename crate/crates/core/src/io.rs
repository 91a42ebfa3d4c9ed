//! JSON description files.
//!
//! Every rational is a string (`"3/2"`, `"-1"`). Basis vectors of the
//! algebra are named by their state labels: `"1"` for the vacuum and
//! otherwise a word of factors `name(n)` in mathematical mode indices, so
//! `a(-1)a(-1)` is `a_(-1) a_(-1) 1` of weight 2. Module basis vectors carry
//! explicit labels and weights. Loaders reject unknown fields.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::extension::{ExtensionInput, SourceModule};
use crate::findim::{Arrow, Diagram, FDModule, FinDimAlgebra};
use crate::graded::GradedSpace;
use crate::intertwiner::{LogIntertwiner, ModeFamily};
use crate::linalg::{SparseMatrix, SparseVec};
use crate::models::{build_heisenberg, build_ising, build_minimal_model, build_virasoro, VoaBuild};
use crate::modes::{check_module_axioms, CheckConfig};
use crate::module::{AlgebraGrading, TruncatedModule, TruncatedVOA};
use crate::{Error, QMatrix, QVec, Result, Scalar, Q};

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))
}

fn to_json<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("descriptions serialize")
}

fn rational(s: &str, at: &str) -> Result<Q> {
    Q::parse_exact(s).ok_or_else(|| Error::parse(at, format!("'{s}' is not a rational number")))
}

fn integer(s: &str, at: &str) -> Result<i64> {
    let q = rational(s, at)?;
    if !q.is_integer() {
        return Err(Error::parse(at, format!("'{s}' is not an integer")));
    }
    q.to_integer().to_i64().ok_or_else(|| Error::parse(at, format!("'{s}' is too large")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub basis: String,
    pub coeff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub name: String,
    pub weight: i64,
}

/// `left_(mode) right = result`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConstant {
    pub left: String,
    pub mode: i64,
    pub right: String,
    pub result: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoaDescription {
    pub central_charge: String,
    pub cutoff: String,
    pub generators: Vec<Generator>,
    pub structure_constants: Vec<StructureConstant>,
    pub omega: Vec<Term>,
}

fn terms(v: &QVec, labels: &[String]) -> Vec<Term> {
    v.iter().map(|(i, c)| Term { basis: labels[i].clone(), coeff: c.to_exact_string() }).collect()
}

fn vector(ts: &[Term], index: &HashMap<String, usize>, at: &str) -> Result<QVec> {
    let mut out = SparseVec::zero();
    for (k, t) in ts.iter().enumerate() {
        let here = format!("{at}[{k}]");
        let i = *index.get(&t.basis).ok_or_else(|| Error::parse(&here, format!("unknown basis vector '{}'", t.basis)))?;
        out.add_assign_scaled(&rational(&t.coeff, &here)?, &SparseVec::unit(i));
    }
    Ok(out)
}

/// Weight of a state label, given generator weights.
pub fn label_weight(label: &str, gens: &HashMap<String, i64>) -> std::result::Result<i64, String> {
    if label == "1" {
        return Ok(0);
    }
    let mut rest = label;
    let mut w = 0;
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| format!("'{label}' is not a word in generator modes"))?;
        let close = rest.find(')').ok_or_else(|| format!("unbalanced parentheses in '{label}'"))?;
        let name = &rest[..open];
        let gw = gens.get(name).ok_or_else(|| format!("unknown generator '{name}' in '{label}'"))?;
        let n: i64 = rest[open + 1..close].parse().map_err(|_| format!("bad mode index in '{label}'"))?;
        w += gw - n - 1;
        rest = &rest[close + 1..];
    }
    Ok(w)
}

/// Parses and validates a VOA description, checking the axioms with
/// the default budget.
pub fn load_voa(text: &str) -> Result<TruncatedVOA> {
    load_voa_with(text, &CheckConfig::default())
}

pub fn load_voa_with(text: &str, cfg: &CheckConfig) -> Result<TruncatedVOA> {
    let desc: VoaDescription = parse_json(text)?;
    voa_from_description(&desc, Some(cfg))
}

/// Builds the algebra; axioms are checked when `cfg` is given.
pub fn voa_from_description(desc: &VoaDescription, cfg: Option<&CheckConfig>) -> Result<TruncatedVOA> {
    let c = rational(&desc.central_charge, "central_charge")?;
    let cutoff = integer(&desc.cutoff, "cutoff")?;
    if cutoff < 0 {
        return Err(Error::parse("cutoff", "cutoff must be nonnegative"));
    }
    let mut gens = HashMap::new();
    for (k, g) in desc.generators.iter().enumerate() {
        let at = format!("generators[{k}]");
        if g.weight < 0 {
            return Err(Error::parse(format!("{at}.weight"), format!("weight {} is negative", g.weight)));
        }
        if g.name.is_empty() || g.name.contains(['(', ')']) || g.name == "1" {
            return Err(Error::parse(format!("{at}.name"), format!("'{}' cannot name a generator", g.name)));
        }
        if gens.insert(g.name.clone(), g.weight).is_some() {
            return Err(Error::parse(at, format!("generator '{}' declared twice", g.name)));
        }
    }
    // every label that occurs, with its weight
    let mut found: BTreeMap<String, i64> = BTreeMap::new();
    let mut note = |label: &str, at: String| -> Result<()> {
        let w = label_weight(label, &gens).map_err(|m| Error::parse(&at, m))?;
        if w > cutoff {
            return Err(Error::parse(at, format!("'{label}' has weight {w} above the cutoff {cutoff}")));
        }
        found.insert(label.to_string(), w);
        Ok(())
    };
    note("1", "vacuum".into())?;
    for g in &desc.generators {
        if g.weight <= cutoff {
            note(&format!("{}(-1)", g.name), "generators".into())?;
        }
    }
    for (k, t) in desc.omega.iter().enumerate() {
        note(&t.basis, format!("omega[{k}]"))?;
    }
    for (k, s) in desc.structure_constants.iter().enumerate() {
        note(&s.left, format!("structure_constants[{k}].left"))?;
        note(&s.right, format!("structure_constants[{k}].right"))?;
        for (j, t) in s.result.iter().enumerate() {
            note(&t.basis, format!("structure_constants[{k}].result[{j}]"))?;
        }
    }
    let mut order: Vec<(i64, String)> = found.into_iter().map(|(l, w)| (w, l)).collect();
    order.sort();
    let labels: Vec<String> = order.iter().map(|(_, l)| l.clone()).collect();
    let weights: Vec<i64> = order.iter().map(|(w, _)| *w).collect();
    let index: HashMap<String, usize> = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

    let mut table: BTreeMap<(usize, i64, usize), QVec> = BTreeMap::new();
    for (k, s) in desc.structure_constants.iter().enumerate() {
        let at = format!("structure_constants[{k}]");
        let key = (index[&s.left], s.mode, index[&s.right]);
        let v = vector(&s.result, &index, &format!("{at}.result"))?;
        let w = weights[key.0] - s.mode - 1 + weights[key.2];
        if let Some(i) = v.indices().find(|&i| weights[i] != w) {
            return Err(Error::AxiomViolation(format!("{}_({}) {} has a component {} off weight {w}", s.left, s.mode, s.right, labels[i])));
        }
        if table.insert(key, v).is_some() {
            return Err(Error::parse(at, format!("entry {}_({}) {} given twice", s.left, s.mode, s.right)));
        }
    }
    let space = GradedSpace::new(weights.iter().map(|&w| Q::from_int(w)).collect(), labels.clone(), Q::from_int(cutoff))?;
    let grading = Arc::new(AlgebraGrading { weights: weights.clone(), labels: labels.clone(), cutoff });
    let module = TruncatedModule::from_table("loaded", space, grading, table)?;
    let omega = vector(&desc.omega, &index, "omega")?;
    let module = if omega.is_zero() { module } else { module.with_l0(&omega).map_err(l0_violation)? };
    let mut voa = TruncatedVOA::new(module, index["1"], omega, c)?;
    voa.generators = desc.generators.iter().filter_map(|g| index.get(&format!("{}(-1)", g.name)).copied()).collect();
    if let Some(cfg) = cfg {
        let rep = check_module_axioms(&voa, &voa.module, cfg)?;
        let first = rep.failures().next().map(|f| format!("{} {}", f.check, f.instance));
        if let Some(msg) = first {
            return Err(Error::AxiomViolation(msg));
        }
    }
    Ok(voa)
}

fn l0_violation(e: Error) -> Error {
    match e {
        Error::NotGeneralizedEigen { weight } => Error::AxiomViolation(format!("omega_(1) does not act by {weight} on that level")),
        e => e,
    }
}

fn generator_name(label: &str) -> Option<&str> {
    label.strip_suffix("(-1)").filter(|n| !n.contains(['(', ')']))
}

/// Describes an algebra whose basis labels are state labels over its
/// recorded generators.
pub fn describe_voa(voa: &TruncatedVOA) -> Result<VoaDescription> {
    let labels = voa.module.space.labels();
    let mut generators = Vec::new();
    for &g in &voa.generators {
        let name = generator_name(&labels[g]).ok_or_else(|| Error::InvalidArgument(format!("generator label '{}' is not x(-1)", labels[g])))?;
        generators.push(Generator { name: name.to_string(), weight: voa.weight(g) });
    }
    let gens: HashMap<String, i64> = generators.iter().map(|g| (g.name.clone(), g.weight)).collect();
    for (i, l) in labels.iter().enumerate() {
        if label_weight(l, &gens) != Ok(voa.weight(i)) {
            return Err(Error::InvalidArgument(format!("label '{l}' does not encode its weight")));
        }
    }
    let mut entries = voa.module.entries();
    entries.sort_by_key(|e| e.0);
    let structure_constants = entries
        .into_iter()
        .map(|((a, n, j), v)| StructureConstant { left: labels[a].clone(), mode: n, right: labels[j].clone(), result: terms(v, labels) })
        .collect();
    Ok(VoaDescription {
        central_charge: voa.central_charge.to_exact_string(),
        cutoff: voa.cutoff().to_string(),
        generators,
        structure_constants,
        omega: terms(&voa.omega, labels),
    })
}

pub fn emit_voa(voa: &TruncatedVOA) -> Result<String> {
    Ok(to_json(&describe_voa(voa)?))
}

/// True when the two algebras have the same table after matching basis
/// vectors by label.
pub fn same_tables(a: &TruncatedVOA, b: &TruncatedVOA) -> bool {
    let (la, lb) = (a.module.space.labels(), b.module.space.labels());
    if la.len() != lb.len() || a.central_charge != b.central_charge || a.cutoff() != b.cutoff() {
        return false;
    }
    let index: HashMap<&str, usize> = lb.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let Some(perm) = la.iter().map(|l| index.get(l.as_str()).copied()).collect::<Option<Vec<_>>>() else {
        return false;
    };
    let map = |v: &QVec| v.reindex(|i| Some(perm[i]));
    if map(&a.omega) != b.omega {
        return false;
    }
    let ea = a.module.entries();
    ea.len() == b.module.entries().len()
        && ea.iter().all(|((x, n, y), v)| b.module.act_basis(perm[*x], *n, perm[*y]).ok().flatten() == Some(&map(v)))
}

/// Built-in algebra or an inline description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VoaRef {
    Model(ModelRef),
    Inline(VoaDescription),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    /// `heisenberg`, `virasoro`, `ising` or `minimal`.
    pub model: String,
    pub cutoff: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central_charge: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<i64>,
}

impl ModelRef {
    pub fn new(model: &str, cutoff: i64) -> Self {
        ModelRef { model: model.into(), cutoff: cutoff.to_string(), central_charge: None, p: None, q: None }
    }

    pub fn build(&self) -> Result<VoaBuild> {
        let cutoff = integer(&self.cutoff, "voa.cutoff")?;
        match self.model.as_str() {
            "heisenberg" => build_heisenberg(cutoff),
            "ising" => build_ising(cutoff),
            "virasoro" => {
                let c = self.central_charge.as_deref().ok_or_else(|| Error::parse("voa", "virasoro needs central_charge"))?;
                build_virasoro(rational(c, "voa.central_charge")?, cutoff)
            }
            "minimal" => match (self.p, self.q) {
                (Some(p), Some(q)) => build_minimal_model(p, q, cutoff),
                _ => Err(Error::parse("voa", "minimal needs p and q")),
            },
            m => Err(Error::parse("voa.model", format!("unknown model '{m}'"))),
        }
    }
}

impl VoaRef {
    pub fn resolve(&self) -> Result<TruncatedVOA> {
        match self {
            VoaRef::Model(m) => Ok(m.build()?.voa),
            VoaRef::Inline(d) => voa_from_description(d, Some(&CheckConfig::default())),
        }
    }
}

fn parse_voa_ref(v: &serde_json::Value) -> Result<VoaRef> {
    let text = v.to_string();
    if v.get("model").is_some() {
        Ok(VoaRef::Model(parse_json(&text).map_err(|e| prefix(e, "voa"))?))
    } else {
        Ok(VoaRef::Inline(parse_json(&text).map_err(|e| prefix(e, "voa"))?))
    }
}

fn prefix(e: Error, at: &str) -> Error {
    match e {
        Error::Parse { location, message } => Error::Parse { location: format!("{at}: {location}"), message },
        e => e,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisVector {
    pub label: String,
    pub weight: String,
}

/// A module: its basis and the nonzero action entries, with algebra
/// vectors named by their labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDescription {
    pub name: String,
    pub cutoff: String,
    pub basis: Vec<BasisVector>,
    pub action: Vec<StructureConstant>,
}

pub fn describe_module(m: &TruncatedModule) -> ModuleDescription {
    let labels = m.space.labels();
    let alg = &m.algebra.labels;
    let mut entries = m.entries();
    entries.sort_by_key(|e| e.0);
    ModuleDescription {
        name: m.name.clone(),
        cutoff: m.cutoff().to_exact_string(),
        basis: (0..m.dim()).map(|i| BasisVector { label: labels[i].clone(), weight: m.weight(i).to_exact_string() }).collect(),
        action: entries
            .into_iter()
            .map(|((a, n, j), v)| StructureConstant { left: alg[a].clone(), mode: n, right: labels[j].clone(), result: terms(v, labels) })
            .collect(),
    }
}

/// Builds a module over `voa`; with `cfg` the module axioms are checked.
pub fn module_from_description(voa: &TruncatedVOA, d: &ModuleDescription, cfg: Option<&CheckConfig>) -> Result<TruncatedModule> {
    let at = format!("module '{}'", d.name);
    let cutoff = rational(&d.cutoff, &format!("{at}.cutoff"))?;
    let mut weights = Vec::new();
    for (k, b) in d.basis.iter().enumerate() {
        weights.push(rational(&b.weight, &format!("{at}.basis[{k}].weight"))?);
    }
    let labels: Vec<String> = d.basis.iter().map(|b| b.label.clone()).collect();
    let index: HashMap<String, usize> = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    if index.len() != labels.len() {
        return Err(Error::parse(&at, "repeated basis label"));
    }
    let alg: HashMap<&str, usize> = voa.grading().labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let space = GradedSpace::new(weights, labels, cutoff).map_err(|e| Error::parse(&at, e.to_string()))?;
    let mut table = Vec::new();
    for (k, s) in d.action.iter().enumerate() {
        let here = format!("{at}.action[{k}]");
        let a = *alg.get(s.left.as_str()).ok_or_else(|| Error::parse(&here, format!("unknown algebra vector '{}'", s.left)))?;
        let j = *index.get(&s.right).ok_or_else(|| Error::parse(&here, format!("unknown basis vector '{}'", s.right)))?;
        let v = vector(&s.result, &index, &format!("{here}.result"))?;
        let w = Q::from_int(voa.weight(a) - s.mode - 1) + space.weight(j);
        if let Some(i) = v.indices().find(|&i| space.weight(i) != &w) {
            return Err(Error::AxiomViolation(format!("{}_({}) {} has a component {} off weight {w}", s.left, s.mode, s.right, space.label(i))));
        }
        table.push(((a, s.mode, j), v));
    }
    let m = TruncatedModule::from_table(d.name.clone(), space, voa.grading().clone(), table)?;
    let m = if voa.omega.is_zero() { m } else { m.with_l0(&voa.omega).map_err(l0_violation)? };
    if let Some(cfg) = cfg {
        let rep = check_module_axioms(voa, &m, cfg)?;
        let first = rep.failures().next().map(|f| format!("module {}: {} {}", d.name, f.check, f.instance));
        if let Some(msg) = first {
            return Err(Error::AxiomViolation(msg));
        }
    }
    Ok(m)
}

fn dense_matrix(m: &QMatrix) -> Vec<Vec<String>> {
    m.to_dense().iter().map(|r| r.iter().map(|c| c.to_exact_string()).collect()).collect()
}

fn matrix_from(rows: &[Vec<String>], shape: (usize, usize), at: &str) -> Result<QMatrix> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::parse(at, format!("matrix must be {}x{}", shape.0, shape.1)));
    }
    let mut trip = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (j, s) in r.iter().enumerate() {
            let c = rational(s, &format!("{at}[{i}][{j}]"))?;
            if !c.is_zero() {
                trip.push((i, j, c));
            }
        }
    }
    SparseMatrix::from_triplets(shape.0, shape.1, trip)
}

/// `w_(r, i)` as a matrix from `U` to `T` (rows index `T`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeBlock {
    pub w: String,
    pub r: String,
    pub i: usize,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntertwinerDescription {
    pub name: String,
    pub voa: serde_json::Value,
    pub w: ModuleDescription,
    pub u: ModuleDescription,
    pub t: ModuleDescription,
    pub modes: Vec<ModeBlock>,
}

fn blocks(y_modes: &[(usize, Q, usize, QMatrix)], w: &TruncatedModule) -> Vec<ModeBlock> {
    y_modes
        .iter()
        .map(|(wi, r, i, m)| ModeBlock { w: w.space.label(*wi).to_string(), r: r.to_exact_string(), i: *i, matrix: dense_matrix(m) })
        .collect()
}

fn read_blocks(bs: &[ModeBlock], w: &TruncatedModule, shape: (usize, usize), at: &str) -> Result<Vec<(usize, Q, usize, QMatrix)>> {
    let index: HashMap<&str, usize> = w.space.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut out = Vec::new();
    for (k, b) in bs.iter().enumerate() {
        let here = format!("{at}[{k}]");
        let wi = *index.get(b.w.as_str()).ok_or_else(|| Error::parse(&here, format!("unknown vector '{}'", b.w)))?;
        out.push((wi, rational(&b.r, &format!("{here}.r"))?, b.i, matrix_from(&b.matrix, shape, &format!("{here}.matrix"))?));
    }
    Ok(out)
}

pub fn emit_intertwiner(voa: &VoaRef, y: &LogIntertwiner) -> String {
    let d = IntertwinerDescription {
        name: y.name.clone(),
        voa: serde_json::to_value(voa).expect("serializable"),
        w: describe_module(y.w()),
        u: describe_module(y.u()),
        t: describe_module(y.t()),
        modes: blocks(&y.to_modes(), y.w()),
    };
    to_json(&d)
}

/// Reads an intertwiner together with its algebra. The three modules are
/// checked against the module axioms with a small budget.
pub fn load_intertwiner(text: &str) -> Result<(TruncatedVOA, LogIntertwiner)> {
    let d: IntertwinerDescription = parse_json(text)?;
    let voa = parse_voa_ref(&d.voa)?.resolve()?;
    let cfg = CheckConfig { budget: 3, samples: 0, seed: 0 };
    let w = Arc::new(module_from_description(&voa, &d.w, Some(&cfg))?);
    let u = Arc::new(module_from_description(&voa, &d.u, Some(&cfg))?);
    let t = Arc::new(module_from_description(&voa, &d.t, Some(&cfg))?);
    let modes = read_blocks(&d.modes, &w, (t.dim(), u.dim()), "modes")?;
    let y = LogIntertwiner::from_modes(d.name, w, u, t, &modes)?;
    Ok((voa, y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqEntry {
    pub v: String,
    pub i: i64,
    pub vector: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDescription {
    pub module: ModuleDescription,
    pub q: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionDescription {
    pub name: String,
    pub voa: serde_json::Value,
    pub t: ModuleDescription,
    pub donor: ModuleDescription,
    pub rad: ModuleDescription,
    pub q_weight: String,
    pub cutoff: String,
    pub vq: Vec<VqEntry>,
    pub i_modes: Vec<ModeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceDescription>,
}

pub fn emit_extension(voa_ref: &VoaRef, voa: &TruncatedVOA, input: &ExtensionInput) -> Result<String> {
    let y = LogIntertwiner::new("I", vec![input.i_op.clone()])?;
    let alg = voa.module.space.labels();
    let d = ExtensionDescription {
        name: input.name.clone(),
        voa: serde_json::to_value(voa_ref).expect("serializable"),
        t: describe_module(&input.t),
        donor: describe_module(&input.donor),
        rad: describe_module(&input.rad),
        q_weight: input.q_weight.to_exact_string(),
        cutoff: input.cutoff.to_exact_string(),
        vq: input
            .vq
            .iter()
            .map(|((v, i), x)| VqEntry { v: alg[*v].clone(), i: *i, vector: terms(x, input.rad.space.labels()) })
            .collect(),
        i_modes: blocks(&y.to_modes(), &input.rad),
        source: input.source.as_ref().map(|s| SourceDescription { module: describe_module(&s.module), q: s.module.space.label(s.q).to_string() }),
    };
    Ok(to_json(&d))
}

/// Reads an extension instance. Shapes are validated here; the donor
/// identities are left to the verifiers.
pub fn load_extension(text: &str) -> Result<(TruncatedVOA, ExtensionInput)> {
    let d: ExtensionDescription = parse_json(text)?;
    let voa = parse_voa_ref(&d.voa)?.resolve()?;
    let t = Arc::new(module_from_description(&voa, &d.t, None)?);
    let donor = Arc::new(module_from_description(&voa, &d.donor, None)?);
    let rad = Arc::new(module_from_description(&voa, &d.rad, None)?);
    let rad_index: HashMap<String, usize> = rad.space.labels().iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let alg: HashMap<&str, usize> = voa.grading().labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut vq = BTreeMap::new();
    for (k, e) in d.vq.iter().enumerate() {
        let at = format!("vq[{k}]");
        let v = *alg.get(e.v.as_str()).ok_or_else(|| Error::parse(&at, format!("unknown algebra vector '{}'", e.v)))?;
        vq.insert((v, e.i), vector(&e.vector, &rad_index, &format!("{at}.vector"))?);
    }
    let modes = read_blocks(&d.i_modes, &rad, (donor.dim(), t.dim()), "i_modes")?;
    if let Some(k) = modes.iter().position(|m| m.2 != 0) {
        return Err(Error::parse(format!("i_modes[{k}].i"), "the donor intertwiner has log degree zero"));
    }
    let i_op = if modes.is_empty() {
        ModeFamily::zero(rad.clone(), t.clone(), donor.clone())
    } else {
        LogIntertwiner::from_modes("I", rad.clone(), t.clone(), donor.clone(), &modes)?.components.remove(0)
    };
    let source = match &d.source {
        None => None,
        Some(s) => {
            let m = module_from_description(&voa, &s.module, None)?;
            let q = m.space.labels().iter().position(|l| l == &s.q).ok_or_else(|| Error::parse("source.q", format!("unknown vector '{}'", s.q)))?;
            Some(SourceModule { module: Arc::new(m), q })
        }
    };
    let input = ExtensionInput {
        name: d.name,
        t,
        donor,
        rad,
        q_weight: rational(&d.q_weight, "q_weight")?,
        vq,
        i_op,
        cutoff: rational(&d.cutoff, "cutoff")?,
        source,
    };
    Ok((voa, input))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdModuleDescription {
    pub name: String,
    pub dim: usize,
    /// One matrix per algebra basis vector.
    pub action: Vec<Vec<Vec<String>>>,
}

/// `mult[i][j][k]` is the coefficient of `b_k` in `b_i b_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDescription {
    pub name: String,
    pub mult: Vec<Vec<Vec<String>>>,
    pub unit: Vec<String>,
    #[serde(default)]
    pub modules: Vec<FdModuleDescription>,
}

fn dense_vec(v: &[String], len: usize, at: &str) -> Result<QVec> {
    if v.len() != len {
        return Err(Error::parse(at, format!("expected {len} coefficients")));
    }
    let xs = v.iter().enumerate().map(|(k, s)| rational(s, &format!("{at}[{k}]"))).collect::<Result<Vec<_>>>()?;
    Ok(SparseVec::from_dense(&xs))
}

pub fn describe_algebra(a: &FinDimAlgebra<Q>, modules: &[FDModule<Q>]) -> AlgebraDescription {
    let n = a.dim();
    let dv = |v: &QVec| v.to_dense(n).iter().map(|c| c.to_exact_string()).collect::<Vec<_>>();
    AlgebraDescription {
        name: a.name.clone(),
        mult: (0..n).map(|i| (0..n).map(|j| dv(a.basis_product(i, j))).collect()).collect(),
        unit: dv(a.unit()),
        modules: modules
            .iter()
            .map(|m| FdModuleDescription { name: m.name.clone(), dim: m.dim(), action: m.action().iter().map(dense_matrix).collect() })
            .collect(),
    }
}

pub fn load_algebra(text: &str) -> Result<(FinDimAlgebra<Q>, Vec<FDModule<Q>>)> {
    let d: AlgebraDescription = parse_json(text)?;
    let n = d.mult.len();
    let mut mult = Vec::new();
    for (i, row) in d.mult.iter().enumerate() {
        if row.len() != n {
            return Err(Error::parse(format!("mult[{i}]"), format!("expected {n} products")));
        }
        mult.push(row.iter().enumerate().map(|(j, v)| dense_vec(v, n, &format!("mult[{i}][{j}]"))).collect::<Result<Vec<_>>>()?);
    }
    let a = FinDimAlgebra::new(d.name, mult, dense_vec(&d.unit, n, "unit")?)?;
    let mut mods = Vec::new();
    for (k, m) in d.modules.iter().enumerate() {
        let at = format!("modules[{k}]");
        let action = m
            .action
            .iter()
            .enumerate()
            .map(|(i, rows)| matrix_from(rows, (m.dim, m.dim), &format!("{at}.action[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        mods.push(FDModule::new(&a, m.name.clone(), m.dim, action)?);
    }
    Ok((a, mods))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDescription {
    pub name: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowDescription {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Rows index the target node.
    pub matrix: Vec<Vec<String>>,
}

/// Two paths, each a list of arrow names in the order applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareDescription {
    pub left: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramDescription {
    pub nodes: Vec<NodeDescription>,
    pub arrows: Vec<ArrowDescription>,
    #[serde(default)]
    pub squares: Vec<SquareDescription>,
    #[serde(default)]
    pub exact: Vec<Vec<String>>,
}

pub fn describe_diagram(d: &Diagram<Q>) -> DiagramDescription {
    DiagramDescription {
        nodes: d.nodes.iter().map(|(n, k)| NodeDescription { name: n.clone(), dim: *k }).collect(),
        arrows: d
            .arrows
            .iter()
            .map(|a| ArrowDescription { name: a.name.clone(), from: a.from.clone(), to: a.to.clone(), matrix: dense_matrix(&a.matrix) })
            .collect(),
        squares: d.squares.iter().map(|(l, r)| SquareDescription { left: l.clone(), right: r.clone() }).collect(),
        exact: d.exact.clone(),
    }
}

pub fn emit_diagram(d: &Diagram<Q>) -> String {
    to_json(&describe_diagram(d))
}

pub fn load_diagram(text: &str) -> Result<Diagram<Q>> {
    let d: DiagramDescription = parse_json(text)?;
    let dims: HashMap<&str, usize> = d.nodes.iter().map(|n| (n.name.as_str(), n.dim)).collect();
    let mut arrows = Vec::new();
    for (k, a) in d.arrows.iter().enumerate() {
        let at = format!("arrows[{k}]");
        let (Some(&df), Some(&dt)) = (dims.get(a.from.as_str()), dims.get(a.to.as_str())) else {
            return Err(Error::parse(at, format!("arrow {} joins unknown nodes", a.name)));
        };
        // a map out of or into a zero node may be written as []
        let matrix = if (dt == 0 || df == 0) && a.matrix.iter().all(|r| r.is_empty()) {
            SparseMatrix::zero(dt, df)
        } else {
            matrix_from(&a.matrix, (dt, df), &format!("{at}.matrix"))?
        };
        arrows.push(Arrow { name: a.name.clone(), from: a.from.clone(), to: a.to.clone(), matrix });
    }
    Ok(Diagram {
        nodes: d.nodes.iter().map(|n| (n.name.clone(), n.dim)).collect(),
        arrows,
        squares: d.squares.into_iter().map(|s| (s.left, s.right)).collect(),
        exact: d.exact,
    })
}
