use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use voa_core::cofinite::{cm_subspace, stable_tail, CmTable};
use voa_core::extension::{build_extension_unchecked, check_donor, heisenberg_toy, mutate_i_modes, verify_all, ExtensionCheckConfig};
use voa_core::findim::{
    check_commutative_diagram, composition_series, is_projective, projective_cover, projective_indecomposables, same_factors, FDModule,
    FinDimAlgebra,
};
use voa_core::intertwiner::{
    check_axioms, heisenberg_log_example, lemma3, log_component, module_vertex_operator, reconstruct, run_instance, IntertwinerCheckConfig,
    IntertwinerInstance, LogIntertwiner,
};
use voa_core::io::{self, ModelRef, ModuleDescription, VoaDescription};
use voa_core::models::{build_heisenberg, kac_weights, VoaBuild};
use voa_core::modes::{check_module_axioms, parse_descriptor, run_borcherds, BorcherdsInstance, CheckConfig};
use voa_core::module::TruncatedVOA;
use voa_core::report::Report;
use voa_core::zhu::{check_zero_modes, zhu_algebra, ZhuOptions};
use voa_core::{Error, Scalar, Q};

use crate::{AlgebraExample, Budget, Cli, Command, ExtExample, Format, IntertwinerExample, Model, Output, Source};

enum Failure {
    Usage(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

type Run<T> = Result<T, Failure>;

/// What a command produced: a report judged by its records, or a file.
enum Produced {
    Report(Report),
    Document(String),
}

pub fn run(cli: Cli) -> u8 {
    let (result, out) = match cli.command {
        Some(cmd) => dispatch(cmd),
        None => match cli.replay {
            Some(d) => (replay(&d, &cli.source).map(Produced::Report), cli.out),
            None => (Err(Failure::Usage("a subcommand or --replay is required; see --help".into())), cli.out),
        },
    };
    match result {
        Ok(p) => {
            let (text, code) = match p {
                Produced::Report(r) => {
                    let code = u8::from(!r.all_passed());
                    let text = match out.format {
                        Format::Json => r.to_json() + "\n",
                        Format::Text => r.to_text(),
                    };
                    (text, code)
                }
                Produced::Document(d) => (d + "\n", 0),
            };
            match &out.output {
                Some(path) => {
                    if let Err(e) = fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 2;
                    }
                }
                None => print!("{text}"),
            }
            code
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } | Error::InvalidArgument(_) | Error::Shape(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: Command) -> (Run<Produced>, Output) {
    match cmd {
        Command::Build { model, out } => (build(&model).map(Produced::Document), out),
        Command::Check { source, module, budget, out } => (check(&source, module.as_deref(), &budget).map(Produced::Report), out),
        Command::C2dim { model, central_charge, p, q, m, cutoffs, expect, out } => {
            let model = Model { model: Some(model), cutoff: None, central_charge, p, q };
            (c2dim(&model, m, &cutoffs, expect).map(Produced::Report), out)
        }
        Command::Zhu { source, n, top_weights, momenta, module_level, out } => {
            (zhu(&source, n, &top_weights, &momenta, module_level).map(Produced::Report), out)
        }
        Command::Intertwiner { input, example, budget, nilpotency_bound, out } => {
            (intertwiner(input.as_deref(), example, budget, nilpotency_bound).map(Produced::Report), out)
        }
        Command::Ext { input, example, budget, locality_bound, mutations, seed, out } => {
            let cfg = ExtensionCheckConfig { budget, locality_bound, ..Default::default() };
            (ext(input.as_deref(), example, &cfg, mutations, seed).map(Produced::Report), out)
        }
        Command::Algebra { input, example, seed, out } => (algebra(input.as_deref(), example, seed).map(Produced::Report), out),
        Command::Diagram { input, out } => (diagram(&input).map(Produced::Report), out),
    }
}

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn rational(s: &str, what: &str) -> Run<Q> {
    Q::parse_exact(s).ok_or_else(|| Failure::Usage(format!("{what}: '{s}' is not a rational number")))
}

fn model_ref(m: &Model, cutoff: Option<i64>) -> Run<ModelRef> {
    let name = m.model.as_deref().ok_or_else(|| Failure::Usage("--model or --input is required".into()))?;
    let cutoff = cutoff.or(m.cutoff).ok_or_else(|| Failure::Usage("--cutoff is required with --model".into()))?;
    if cutoff < 0 {
        return Err(Failure::Usage("--cutoff must be non-negative".into()));
    }
    let mut r = ModelRef::new(name, cutoff);
    r.central_charge = m.central_charge.clone();
    r.p = m.p;
    r.q = m.q;
    Ok(r)
}

/// The algebra named by `--model`, or the file given by `--input`. Files
/// are axiom-checked on load unless `checked` is false.
fn load_source(s: &Source, checked: bool) -> Run<(TruncatedVOA, Option<VoaBuild>)> {
    match &s.input {
        Some(path) => {
            let desc: VoaDescription = io::parse_json(&read(path)?)?;
            let voa = io::voa_from_description(&desc, checked.then(CheckConfig::default).as_ref())?;
            Ok((voa, None))
        }
        None => {
            let b = model_ref(&s.model, None)?.build()?;
            Ok((b.voa.clone(), Some(b)))
        }
    }
}

fn build(m: &Model) -> Run<String> {
    let b = model_ref(m, None)?.build()?;
    Ok(io::emit_voa(&b.voa)?)
}

fn check(s: &Source, module: Option<&Path>, budget: &Budget) -> Run<Report> {
    let (voa, _) = load_source(s, false)?;
    let cfg = CheckConfig { budget: budget.budget, samples: budget.samples, seed: budget.seed };
    let m = match module {
        Some(path) => {
            let d: ModuleDescription = io::parse_json(&read(path)?)?;
            io::module_from_description(&voa, &d, None)?
        }
        None => voa.module.clone(),
    };
    Ok(check_module_axioms(&voa, &m, &cfg)?)
}

fn c2dim(model: &Model, m: i64, cutoffs: &[i64], expect: Option<usize>) -> Run<Report> {
    let mut dims = Vec::new();
    for &l in cutoffs {
        let b = model_ref(model, Some(l))?.build()?;
        dims.push(cm_subspace(&b.voa, &b.voa.module, m)?.1);
    }
    let name = model.model.clone().unwrap_or_default();
    let mut rep = Report::new("c2dim", format!("{name} m={m}"));
    if let Some(want) = expect {
        for (l, d) in cutoffs.iter().zip(&dims) {
            let inst = format!("cutoff={l}");
            if *d == want {
                rep.pass("quotient-dim", inst);
            } else {
                rep.fail("quotient-dim", inst, format!("dimension {d}, expected {want}"));
            }
        }
    }
    let stable = stable_tail(&dims);
    rep.data = serde_json::to_value(CmTable { m, cutoffs: cutoffs.to_vec(), dims, stable }).expect("table serializes");
    Ok(rep)
}

fn zhu(s: &Source, n: i64, top_weights: &[String], momenta: &[String], level: i64) -> Run<Report> {
    let (voa, build) = load_source(s, true)?;
    let z = zhu_algebra(&voa, n, ZhuOptions::default())?;
    let mut rep = Report::new("zhu", format!("A_{n} at cutoff {}", z.cutoff));
    rep.merge(z.check_associativity());
    rep.merge(z.check_unit());
    let mut modules = Vec::new();
    if let Some(b) = &build {
        match b.voa.module.space.labels().iter().any(|l| l.starts_with("a(")) {
            true => {
                let ms: Vec<String> = if momenta.is_empty() { vec!["0".into(), "1/2".into()] } else { momenta.to_vec() };
                for x in ms {
                    modules.push(b.fock(rational(&x, "--momenta")?, level)?);
                }
            }
            false => {
                let hs: Vec<Q> = if !top_weights.is_empty() {
                    top_weights.iter().map(|h| rational(h, "--top-weights")).collect::<Run<_>>()?
                } else {
                    match (s.model.model.as_deref(), s.model.p, s.model.q) {
                        (Some("ising"), _, _) => kac_weights(3, 4),
                        (Some("minimal"), Some(p), Some(q)) => kac_weights(p, q),
                        _ => vec![Q::from_int(0)],
                    }
                };
                for h in hs {
                    modules.push(b.virasoro_simple(h, level)?);
                }
            }
        }
    }
    for m in &modules {
        let mut r = check_zero_modes(&voa, &z, m, ZhuOptions::default())?;
        for rec in &mut r.records {
            rec.instance = format!("module={} {}", m.name, rec.instance);
        }
        rep.merge(r);
    }
    let mut data = z.to_json();
    if z.is_complete() {
        let alg = z.algebra()?;
        data["radical_dim"] = alg.radical().len().into();
        data["semisimple"] = alg.is_semisimple().into();
    }
    rep.data = data;
    Ok(rep)
}

fn intertwiner(input: Option<&Path>, example: Option<IntertwinerExample>, budget: i64, bound: usize) -> Run<Report> {
    let (voa, y): (TruncatedVOA, LogIntertwiner) = match (input, example) {
        (Some(path), _) => io::load_intertwiner(&read(path)?)?,
        (None, Some(ex)) => {
            let b = build_heisenberg(3)?;
            let y = match ex {
                IntertwinerExample::Jordan => heisenberg_log_example(&b, &Q::from_int(1), &Q::from_frac(1, 2), 2)?,
                IntertwinerExample::Fock => {
                    let m = Arc::new(b.fock(Q::from_frac(1, 2), 2)?);
                    module_vertex_operator(&b.voa, &Arc::new(b.voa.module.clone()), &m)?
                }
            };
            (b.voa, y)
        }
        (None, None) => return Err(Failure::Usage("--input or --example is required".into())),
    };
    let cfg = IntertwinerCheckConfig { budget, ..Default::default() };
    let mut rep = check_axioms(&voa, &y, &cfg)?;
    let inst = format!("name={}", y.name);
    let round = log_component(&voa, &y, 0).and_then(|y0| reconstruct(&voa, &y0, bound, y.name.clone()));
    match round {
        Ok(back) if back == y => rep.pass("round-trip", inst),
        Ok(_) => rep.fail("round-trip", inst, "reconstruction differs from the input"),
        Err(e @ (Error::NotNilpotent(_) | Error::RelationViolated(_) | Error::BoundExceeded(_))) => rep.fail("round-trip", inst, e.to_string()),
        Err(e) => return Err(e.into()),
    }
    match lemma3(&y) {
        Ok(r) => rep.merge(r),
        Err(Error::PreconditionFailed(_)) => {}
        Err(e) => return Err(e.into()),
    }
    rep.data = serde_json::json!({ "k": y.k() });
    Ok(rep)
}

fn ext(input: Option<&Path>, example: Option<ExtExample>, cfg: &ExtensionCheckConfig, mutations: usize, seed: u64) -> Run<Report> {
    let (voa, inp) = match (input, example) {
        (Some(path), _) => io::load_extension(&read(path)?)?,
        (None, Some(ExtExample::Toy)) => {
            let (b, inp) = heisenberg_toy(6, 2)?;
            (b.voa, inp)
        }
        (None, None) => return Err(Failure::Usage("--input or --example is required".into())),
    };
    let mut rep = Report::new("extension", inp.name.clone());
    rep.merge(check_donor(&voa, &inp, &Default::default())?);
    let r = build_extension_unchecked(&voa, inp.clone())?;
    rep.merge(verify_all(&voa, &r, cfg)?);
    if mutations > 0 {
        for m in mutate_i_modes(&voa, &inp, mutations, seed)? {
            let caught = !check_donor(&voa, &m.input, &Default::default())?.all_passed()
                || !verify_all(&voa, &build_extension_unchecked(&voa, m.input.clone())?, cfg)?.all_passed();
            let inst = format!("mutation {}", m.descriptor);
            if caught {
                rep.pass("mutation-detected", inst);
            } else {
                rep.fail("mutation-detected", inst, "every verifier passes on the mutated donor");
            }
        }
    }
    Ok(rep)
}

#[derive(Serialize)]
struct ModuleSummary {
    name: String,
    dim: usize,
    cover_dim: usize,
    projective: bool,
    composition_factors: Vec<usize>,
}

fn algebra(input: Option<&Path>, example: Option<AlgebraExample>, seed: u64) -> Run<Report> {
    type A = FinDimAlgebra<Q>;
    let (alg, mut modules): (A, Vec<FDModule<Q>>) = match (input, example) {
        (Some(path), _) => io::load_algebra(&read(path)?)?,
        (None, Some(ex)) => {
            let a = match ex {
                AlgebraExample::Dual => A::truncated_polynomial(2),
                AlgebraExample::Cubic => A::truncated_polynomial(3),
                AlgebraExample::Product => A::product_of_fields(2),
                AlgebraExample::Upper => A::upper_triangular(2),
            };
            (a, Vec::new())
        }
        (None, None) => return Err(Failure::Usage("--input or --example is required".into())),
    };
    let pis = projective_indecomposables(&alg, seed)?;
    if modules.is_empty() {
        modules.push(alg.regular_module());
        for p in &pis {
            let (mut top, _) = p.module.quotient(&p.module.radical_submodule(&alg))?;
            top.name = format!("top of {}", p.module.name);
            modules.push(top);
        }
    }
    let mut rep = Report::new("algebra", alg.name.clone());
    // idempotents: e^2 = e, pairwise orthogonal, summing to 1
    let mut sum = voa_core::linalg::SparseVec::zero();
    for (i, p) in pis.iter().enumerate() {
        let e = &p.idempotent;
        sum.add_assign_scaled(&Q::from_int(1), e);
        let orth = pis.iter().enumerate().all(|(j, f)| j == i || alg.mul(e, &f.idempotent).is_zero());
        let inst = format!("e{i}");
        if alg.mul(e, e) == *e && orth {
            rep.pass("idempotent", inst);
        } else {
            rep.fail("idempotent", inst, "not a primitive orthogonal idempotent");
        }
    }
    if sum == *alg.unit() {
        rep.pass("idempotent", "sum".into());
    } else {
        rep.fail("idempotent", "sum".into(), "idempotents do not sum to the unit");
    }
    let mut summaries = Vec::new();
    for m in &modules {
        let cover = projective_cover(&alg, m, seed)?;
        let inst = format!("module={}", m.name);
        if cover.module.is_module_map(m, &cover.map) && cover.map.rank() == m.dim() && cover.superfluous_kernel {
            rep.pass("cover", inst.clone());
        } else {
            rep.fail("cover", inst.clone(), "cover is not a surjective module map with superfluous kernel");
        }
        let c1 = composition_series(&alg, m, seed)?;
        let c2 = composition_series(&alg, m, seed.wrapping_add(1))?;
        if same_factors(&c1.factors, &c2.factors, seed) {
            rep.pass("jordan-holder", inst);
        } else {
            rep.fail("jordan-holder", inst, "two flags give different factors");
        }
        summaries.push(ModuleSummary {
            name: m.name.clone(),
            dim: m.dim(),
            cover_dim: cover.module.dim(),
            projective: is_projective(&alg, m, seed)?.projective,
            composition_factors: c1.factors.iter().map(FDModule::dim).collect(),
        });
    }
    let rad = alg.radical();
    rep.data = serde_json::json!({
        "dim": alg.dim(),
        "radical_dim": rad.len(),
        "nilpotency_index": if rad.is_empty() { Some(1) } else { alg.nilpotency_index(&rad) },
        "semisimple": alg.is_semisimple(),
        "projective_dims": pis.iter().map(|p| p.module.dim()).collect::<Vec<_>>(),
        "modules": summaries,
    });
    Ok(rep)
}

fn diagram(path: &Path) -> Run<Report> {
    let d = io::load_diagram(&read(path)?)?;
    Ok(check_commutative_diagram(&d)?)
}

fn replay(descriptor: &str, s: &Source) -> Run<Report> {
    let keys = parse_descriptor(descriptor.split(';').filter(|p| !p.starts_with("n=")).collect::<Vec<_>>().join(";").as_str())?;
    let mut rep = Report::new("replay", descriptor.to_string());
    if keys.contains_key("k") {
        let path = s.input.as_deref().ok_or_else(|| Failure::Usage("intertwiner descriptors need --input <intertwiner file>".into()))?;
        let (_, y) = io::load_intertwiner(&read(path)?)?;
        let inst = IntertwinerInstance::parse(descriptor)?;
        match run_instance(&y, &inst)? {
            Some(r) => rep.residual(inst.check_name(), inst.descriptor(), &r, y.t().space.labels()),
            None => rep.skip(),
        }
        return Ok(rep);
    }
    let all = parse_descriptor(descriptor)?;
    let field = |k: &str| all.get(k).copied().ok_or_else(|| Failure::Usage(format!("descriptor lacks {k}; only Borcherds and intertwiner instances replay")));
    let (voa, _) = load_source(s, false)?;
    let inst = BorcherdsInstance {
        v: field("v")? as usize,
        w: field("w")? as usize,
        u: field("u")? as usize,
        p: field("p")?,
        q: field("q")?,
        n: field("n")?,
    };
    if inst.v >= voa.dim() || inst.w >= voa.dim() || inst.u >= voa.dim() {
        return Err(Failure::Usage(format!("descriptor indices exceed the basis of size {}", voa.dim())));
    }
    match run_borcherds(&voa, &voa.module, &inst)? {
        Some(r) => rep.residual(inst.check_name(), inst.descriptor(), &r, voa.module.space.labels()),
        None => rep.skip(),
    }
    Ok(rep)
}
