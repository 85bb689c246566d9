use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use hmf_theta::exponents::presets;
use hmf_theta::ring::{exactness_probe, qbar_collapse, ProbeVerdict};
use hmf_theta::sample::{random_expansion, random_unit_invariant, random_weight, v_safe_support};
use hmf_theta::{
    Exponent, ExponentModel, GfElement, GradedElement, ModelConfig, ModelRef, QExpansion,
    QExpansionRecord, Rational,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::read_file;
use crate::report::{CheckRecord, ReportBuilder, Status};

#[derive(Debug, Args)]
pub struct QexpArgs {
    #[command(subcommand)]
    cmd: QexpCmd,
}

#[derive(Debug, Subcommand)]
enum QexpCmd {
    /// Apply one operator to an expansion file
    Apply(ApplyArgs),
    /// Run an identity suite on files or on random inputs
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Op {
    Theta,
    V,
    V0,
    V0Preimage,
    Hasse,
    G,
    Frob,
}

#[derive(Debug, Args)]
struct ApplyArgs {
    #[arg(long, value_enum)]
    op: Op,
    /// Residue index `P:i` for theta
    #[arg(long)]
    tau: Option<String>,
    /// Prime id for v, v0 and v0-preimage
    #[arg(long)]
    prime: Option<String>,
    /// Embedding index `P:i:j` for hasse and g
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    power: i64,
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Identity {
    Derivation,
    ThetaCommute,
    ThetaVZero,
    Ppower,
    ThetaP,
    KernelImage,
    UnitInvariance,
    Exactness,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    identity: Identity,
    /// Number of random cases
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Preset name or model config file, for random cases
    #[arg(long, default_value = "d2-inert3")]
    model: String,
    /// Truncation bound for random cases; defaults to 60, or 24 for synthetic models
    #[arg(long)]
    bound: Option<i64>,
    /// Totally positive unit for unit-invariance; defaults to the preset's
    #[arg(long)]
    unit: Option<String>,
    /// Input files: one expansion, two for derivation, a graded element for exactness
    files: Vec<PathBuf>,
}

pub fn run(args: QexpArgs, rep: &mut ReportBuilder) -> Result<()> {
    match args.cmd {
        QexpCmd::Apply(a) => apply(a, rep),
        QexpCmd::Verify(v) => verify(v, rep),
    }
}

fn load_expansion(path: &PathBuf, rep: &mut ReportBuilder) -> Result<(QExpansion, ModelRef)> {
    let text = read_file(path)?;
    rep.digest(path.display().to_string(), text.as_bytes());
    QExpansion::from_json(&text).with_context(|| format!("reading {}", path.display()))
}

fn apply(a: ApplyArgs, rep: &mut ReportBuilder) -> Result<()> {
    let (f, mref) = load_expansion(&a.input, rep)?;
    let s = f.model().shape().clone();
    let need = |o: &Option<String>, flag: &str| -> Result<String> {
        o.clone().with_context(|| format!("--op {:?} needs --{flag}", a.op))
    };
    let out = match a.op {
        Op::Theta => Ok(f.apply_theta(s.parse_residue(&need(&a.tau, "tau")?)?)),
        Op::V => f.apply_v(s.prime_position(&need(&a.prime, "prime")?)?),
        Op::V0 => f.apply_v0(s.prime_position(&need(&a.prime, "prime")?)?),
        Op::V0Preimage => f.v0_preimage(s.prime_position(&need(&a.prime, "prime")?)?),
        Op::Hasse => Ok(f.mul_hasse(s.parse_theta(&need(&a.theta, "theta")?)?, a.power)),
        Op::G => Ok(f.mul_g(s.parse_theta(&need(&a.theta, "theta")?)?, a.power)),
        Op::Frob => Ok(f.frob_coeffs()),
    };
    let name = format!("apply {}", kebab(a.op));
    match out {
        Ok(g) => {
            std::fs::write(&a.out, g.to_json(mref))
                .with_context(|| format!("writing {}", a.out.display()))?;
            rep.check(CheckRecord::pass(
                name,
                json!({
                    "input_terms": f.len().to_string(),
                    "output_terms": g.len().to_string(),
                    "k": crate::strs(g.k().entries()),
                    "l": crate::strs(g.l().entries()),
                    "output": a.out.display().to_string(),
                }),
            ));
        }
        Err(e) => rep.check(CheckRecord::new(
            name,
            Status::Fail,
            json!({ "error": e.to_string(), "input": record(&f, &mref) }),
        )),
    }
    Ok(())
}

fn kebab(v: impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn record(f: &QExpansion, mref: &ModelRef) -> Value {
    serde_json::to_value(QExpansionRecord::from_expansion(f, mref.clone())).expect("serializable")
}

fn graded_record(x: &GradedElement, mref: &ModelRef) -> Value {
    serde_json::to_value(x.to_records(mref)).expect("serializable")
}

enum Outcome {
    Pass(Value),
    Fail(Value),
    Skip(String),
}

impl Outcome {
    fn from_bool(ok: bool, details: Value) -> Outcome {
        if ok {
            Outcome::Pass(json!({}))
        } else {
            Outcome::Fail(details)
        }
    }
}

struct Ctx {
    model: Arc<ExponentModel>,
    mref: ModelRef,
    bound: i64,
    unit: Option<Vec<i64>>,
}

fn resolve_model(name: &str, rep: &mut ReportBuilder) -> Result<(Arc<ExponentModel>, ModelRef)> {
    let mref = if presets::NAMES.contains(&name) {
        ModelRef::Preset(name.to_string())
    } else {
        let text = read_file(name)?;
        let cfg: ModelConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing model {name}"))?;
        ModelRef::Inline(cfg)
    };
    let model = mref.load()?;
    let cfg = serde_json::to_vec(model.config()).expect("serializable");
    rep.digest("model", &cfg);
    Ok((model, mref))
}

fn verify(v: VerifyArgs, rep: &mut ReportBuilder) -> Result<()> {
    let name = kebab(v.identity);
    let identity = v.identity;
    let unit_arg = v.unit.as_deref().map(crate::parse_vec).transpose()?;
    if let Some(n) = v.random {
        if !v.files.is_empty() {
            bail!("give either --random or input files");
        }
        let (model, mref) = resolve_model(&v.model, rep)?;
        let bound = v.bound.unwrap_or(if model.is_quadratic() { 60 } else { 24 });
        if bound <= 0 {
            bail!("--bound must be positive");
        }
        let unit = unit_arg.or_else(|| presets::fundamental_unit(&v.model));
        let ctx = Ctx { model, mref, bound, unit };
        let outcomes: Vec<Result<Outcome>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
                rng.set_stream(i as u64);
                random_case(identity, &ctx, &mut rng)
            })
            .collect();
        for (i, o) in outcomes.into_iter().enumerate() {
            push(rep, format!("{name}#{i}"), o?);
        }
        return Ok(());
    }
    if v.files.is_empty() {
        bail!("give --random N or input files");
    }
    let outcome = match identity {
        Identity::Exactness => {
            let path = &v.files[0];
            let text = read_file(path)?;
            rep.digest(path.display().to_string(), text.as_bytes());
            let (x, mref) = GradedElement::from_json(&text)?;
            exactness_file(&x, &mref)?
        }
        Identity::Derivation => {
            if v.files.len() != 2 {
                bail!("derivation takes two files");
            }
            let (f, mref) = load_expansion(&v.files[0], rep)?;
            let (g, _) = load_expansion(&v.files[1], rep)?;
            derivation(&f, &g, &mref)?
        }
        _ => {
            let (f, mref) = load_expansion(&v.files[0], rep)?;
            let unit = unit_arg.or_else(|| match &mref {
                ModelRef::Preset(n) => presets::fundamental_unit(n),
                ModelRef::Inline(_) => None,
            });
            single(identity, &f, &mref, unit.as_deref())?
        }
    };
    push(rep, name, outcome);
    Ok(())
}

fn push(rep: &mut ReportBuilder, name: String, o: Outcome) {
    rep.check(match o {
        Outcome::Pass(d) => CheckRecord::new(name, Status::Pass, d),
        Outcome::Fail(d) => CheckRecord::new(name, Status::Fail, d),
        Outcome::Skip(why) => CheckRecord::new(name, Status::Skip, json!({ "reason": why })),
    });
}

fn expansion(ctx: &Ctx, support: i64, rng: &mut ChaCha8Rng) -> Result<QExpansion> {
    let s = ctx.model.shape();
    let k = random_weight(s, 6, rng);
    let l = random_weight(s, 6, rng);
    let n = rng.gen_range(1..8);
    let b = Rational::from_integer(ctx.bound);
    Ok(random_expansion(&ctx.model, k, l, b, Rational::from_integer(support), n, rng)?)
}

fn graded(ctx: &Ctx, support: i64, rng: &mut ChaCha8Rng) -> Result<GradedElement> {
    let mut x = GradedElement::zero(&ctx.model, Rational::from_integer(ctx.bound));
    for _ in 0..rng.gen_range(1..4) {
        x.push(expansion(ctx, support, rng)?)?;
    }
    Ok(x)
}

fn random_case(identity: Identity, ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let m = &ctx.model;
    let nprimes = m.shape().primes().len();
    match identity {
        Identity::Derivation => {
            let f = expansion(ctx, ctx.bound, rng)?;
            let g = expansion(ctx, ctx.bound, rng)?;
            derivation(&f, &g, &ctx.mref)
        }
        Identity::Ppower => {
            let p = m.shape().p() as i64;
            let f = expansion(ctx, ctx.bound / p, rng)?;
            single(identity, &f, &ctx.mref, None)
        }
        Identity::KernelImage | Identity::Exactness => {
            let prime = rng.gen_range(0..nprimes);
            let support = v_safe_support(m, prime, ctx.bound)?;
            if support == 0 {
                return Ok(Outcome::Skip("bound leaves no room for V".into()));
            }
            if identity == Identity::KernelImage {
                let g = expansion(ctx, support, rng)?;
                return kernel_image(&g, prime, &ctx.mref);
            }
            exactness_random(ctx, prime, support, rng)
        }
        Identity::UnitInvariance => {
            let Some(unit) = &ctx.unit else {
                return Ok(Outcome::Skip("no unit for this model".into()));
            };
            if !m.is_quadratic() {
                return Ok(Outcome::Skip("unit invariance needs a quadratic model".into()));
            }
            let s = m.shape();
            let (k, l) = (random_weight(s, 6, rng), random_weight(s, 6, rng));
            let b = Rational::from_integer(ctx.bound);
            let f = random_unit_invariant(m, k, l.clone(), b, unit, 3, rng)?;
            if !f.validate_unit_invariance(std::slice::from_ref(unit), &l)? {
                return Ok(Outcome::Fail(json!({ "input": record(&f, &ctx.mref), "expected": true })));
            }
            // change one coefficient whose partner under the unit is in the window
            let pick = f.terms().iter().find(|(e, _)| {
                let up = m.mul_elements(unit, e.coords()).unwrap();
                let down = m.mul_elements(&m.unit_inverse(unit).unwrap(), e.coords()).unwrap();
                [up, down].iter().any(|x| f.terms().contains_key(&Exponent(x.clone())))
            });
            let Some((e, _)) = pick else {
                return Ok(Outcome::Pass(json!({ "perturbation": "none available" })));
            };
            let mut bad = f.clone();
            let delta = GfElement::random_nonzero(m.field(), rng);
            bad.add_term(e.clone(), delta)?;
            let ok = !bad.validate_unit_invariance(std::slice::from_ref(unit), &l)?;
            Ok(Outcome::from_bool(
                ok,
                json!({ "input": record(&bad, &ctx.mref), "expected": false }),
            ))
        }
        _ => {
            let f = expansion(ctx, ctx.bound, rng)?;
            single(identity, &f, &ctx.mref, None)
        }
    }
}

fn derivation(f: &QExpansion, g: &QExpansion, mref: &ModelRef) -> Result<Outcome> {
    for tau in f.model().shape().residue_indices() {
        let lhs = f.mul(g)?.apply_theta(tau);
        let rhs = f.mul(&g.apply_theta(tau))?.add(&f.apply_theta(tau).mul(g)?)?;
        if lhs != rhs {
            return Ok(Outcome::Fail(json!({
                "tau": f.model().shape().residue_label(tau),
                "f": record(f, mref),
                "g": record(g, mref),
            })));
        }
    }
    Ok(Outcome::Pass(json!({})))
}

fn kernel_image(g: &QExpansion, prime: usize, mref: &ModelRef) -> Result<Outcome> {
    let s = g.model().shape();
    let f = g.apply_v0(prime)?;
    let fail = |why: &str| {
        Outcome::Fail(json!({ "reason": why, "prime": s.prime(prime).id, "g": record(g, mref) }))
    };
    if f.len() != g.len() {
        return Ok(Outcome::Skip("V0 image leaves the window".into()));
    }
    for tau in s.residues_over(prime) {
        if !f.in_theta_kernel(tau)? {
            return Ok(fail("V0 image not in the theta kernel"));
        }
    }
    match f.v0_preimage(prime) {
        Ok(back) if back == *g => Ok(Outcome::Pass(json!({ "prime": s.prime(prime).id }))),
        Ok(_) => Ok(fail("preimage differs")),
        Err(e) => Ok(fail(&e.to_string())),
    }
}

fn single(identity: Identity, f: &QExpansion, mref: &ModelRef, unit: Option<&[i64]>) -> Result<Outcome> {
    let m = f.model();
    let s = m.shape();
    let input = || json!({ "input": record(f, mref) });
    match identity {
        Identity::ThetaCommute => {
            let taus = s.residue_indices();
            for &a in &taus {
                for &b in &taus {
                    if f.apply_theta(a).apply_theta(b) != f.apply_theta(b).apply_theta(a) {
                        let mut d = input();
                        d["taus"] = json!([s.residue_label(a), s.residue_label(b)]);
                        return Ok(Outcome::Fail(d));
                    }
                }
            }
            Ok(Outcome::Pass(json!({})))
        }
        Identity::ThetaVZero => {
            for tau in s.residue_indices() {
                for prime in 0..s.primes().len() {
                    let lhs = f.apply_v(prime)?.apply_theta(tau);
                    let ok = if prime == tau.prime {
                        lhs.is_zero()
                    } else {
                        let c = m.cross_scalar(tau, prime);
                        lhs == f.apply_theta(tau).apply_v(prime)?.scalar_mul(&c)?
                    };
                    if !ok {
                        let mut d = input();
                        d["tau"] = json!(s.residue_label(tau));
                        d["prime"] = json!(s.prime(prime).id);
                        return Ok(Outcome::Fail(d));
                    }
                }
            }
            Ok(Outcome::Pass(json!({})))
        }
        Identity::Ppower => match f.ppower_check() {
            Ok(ok) => Ok(Outcome::from_bool(ok, input())),
            Err(hmf_theta::Error::TruncationTooSmall(why)) => Ok(Outcome::Skip(why)),
            Err(e) => Err(e.into()),
        },
        Identity::ThetaP => {
            for tau in s.residue_indices() {
                if !f.theta_p_relation_check(tau)? {
                    let mut d = input();
                    d["tau"] = json!(s.residue_label(tau));
                    return Ok(Outcome::Fail(d));
                }
            }
            Ok(Outcome::Pass(json!({})))
        }
        Identity::KernelImage => {
            let mut last = Outcome::Pass(json!({}));
            for prime in 0..s.primes().len() {
                last = kernel_image(f, prime, mref)?;
                if matches!(last, Outcome::Fail(_)) {
                    break;
                }
            }
            Ok(last)
        }
        Identity::UnitInvariance => {
            let Some(unit) = unit else {
                return Ok(Outcome::Skip("no unit given".into()));
            };
            match f.validate_unit_invariance(&[unit.to_vec()], f.l()) {
                Ok(ok) => Ok(Outcome::from_bool(ok, input())),
                Err(hmf_theta::Error::Unsupported(why)) => Ok(Outcome::Skip(why)),
                Err(e) => Err(e.into()),
            }
        }
        Identity::Derivation | Identity::Exactness => unreachable!("handled by the caller"),
    }
}

fn exactness_random(ctx: &Ctx, prime: usize, support: i64, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let m = &ctx.model;
    let tau = m.shape().residues_over(prime)[0];
    let y0 = graded(ctx, support, rng)?;
    let x = y0.ring_v(prime)?;
    let fail = |why: String, x: &GradedElement| {
        Outcome::Fail(json!({ "reason": why, "input": graded_record(x, &ctx.mref) }))
    };
    match exactness_probe(prime, tau, &x)? {
        ProbeVerdict::Exact(y) if qbar_collapse(&y) == qbar_collapse(&y0) => {}
        other => return Ok(fail(format!("V-image gave {}", verdict_name(&other)), &x)),
    }
    let window = m.window(Rational::from_integer(ctx.bound));
    let off: Vec<&Exponent> = window
        .iter()
        .filter(|e| !m.in_scaled(prime, 1, e.coords()).unwrap_or(true))
        .collect();
    if off.is_empty() {
        return Ok(Outcome::Pass(json!({ "perturbation": "none available" })));
    }
    let e = off[rng.gen_range(0..off.len())].clone();
    let base = x.components().next().expect("nonzero V-image");
    let mut d = QExpansion::zero(m, base.k().clone(), base.l().clone(), x.bound())?;
    d.add_term(e, GfElement::random_nonzero(m.field(), rng))?;
    let bad = x.add(&GradedElement::from_expansion(d))?;
    match exactness_probe(prime, tau, &bad)? {
        ProbeVerdict::NotInKernel { .. } => Ok(Outcome::Pass(json!({}))),
        other => Ok(fail(format!("perturbed input gave {}", verdict_name(&other)), &bad)),
    }
}

fn verdict_name(v: &ProbeVerdict) -> &'static str {
    match v {
        ProbeVerdict::Exact(_) => "exact",
        ProbeVerdict::NotInKernel { .. } => "not-in-kernel",
        ProbeVerdict::NotInjective => "not-injective",
    }
}

/// Runs the probe at every residue index; fails only on a non-injective verdict.
fn exactness_file(x: &GradedElement, mref: &ModelRef) -> Result<Outcome> {
    let s = x.model().shape();
    let mut verdicts = serde_json::Map::new();
    for tau in s.residue_indices() {
        let label = s.residue_label(tau);
        let v = match exactness_probe(tau.prime, tau, x) {
            Ok(ProbeVerdict::NotInjective) => {
                return Ok(Outcome::Fail(json!({ "tau": label, "input": graded_record(x, mref) })))
            }
            Ok(ProbeVerdict::Exact(y)) => json!({ "verdict": "exact", "preimage": graded_record(&y, mref) }),
            Ok(ProbeVerdict::NotInKernel { bucket, exponent }) => json!({
                "verdict": "not-in-kernel",
                "bucket": [bucket.0.to_string(), bucket.1.to_string()],
                "exponent": crate::strs(exponent.coords()),
            }),
            Err(e) => json!({ "verdict": "error", "error": e.to_string() }),
        };
        verdicts.insert(label, v);
    }
    Ok(Outcome::Pass(Value::Object(verdicts)))
}
