use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use hmf_theta::weights::{
    frob_weight_shift, hbasis_decompose, in_min_cone, lambda_contains, lambda_index, leq_hasse,
    ptwt0_feasible, rho, theta_weight_shift,
};
use hmf_theta::{FieldShape, ShapeConfig, WeightVector};
use serde_json::{json, Value};

use crate::report::{CheckRecord, ReportBuilder, Status};
use crate::{parse_vec, read_file, strs};

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Shape config file, e.g. {"p": 5, "primes": [{"id": "P", "e": 2, "f": 1}]}
    #[arg(long, global = true)]
    shape: Option<String>,
    #[command(subcommand)]
    cmd: WeightsCmd,
}

#[derive(Debug, Subcommand)]
enum WeightsCmd {
    /// Is k in the minimal cone
    ConeCheck { k: String },
    /// Weight after Theta_tau
    ShiftTheta { tau: String, k: String, l: String },
    /// Weight after V_P
    ShiftFrob { prime: String, k: String, l: String },
    Rho { k: String },
    LambdaIndex,
    /// Coordinates of k in the Hasse basis
    Hbasis { k: String },
    /// Decide k <=_Ha k2 and print the multiplicities
    LeqHasse { k: String, k2: String },
    /// Exhaustive positivity search
    Ptwt0 {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        e: u32,
        #[arg(long)]
        f: u32,
        /// Run every prime up to --p and every e, f up to --e, --f
        #[arg(long)]
        grid: bool,
    },
}

fn load_shape(args: &WeightsArgs, rep: &mut ReportBuilder) -> Result<Arc<FieldShape>> {
    let path = args.shape.as_deref().context("--shape is required")?;
    let text = read_file(path)?;
    rep.digest("shape", text.as_bytes());
    let cfg: ShapeConfig = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
    Ok(Arc::new(FieldShape::from_config(&cfg)?))
}

fn weight(shape: &Arc<FieldShape>, s: &str) -> Result<WeightVector> {
    Ok(WeightVector::from_vec(shape, parse_vec(s)?)?)
}

pub fn run(args: WeightsArgs, rep: &mut ReportBuilder) -> Result<()> {
    if let WeightsCmd::Ptwt0 { p, e, f, grid } = args.cmd {
        return ptwt0(p, e, f, grid, rep);
    }
    let s = load_shape(&args, rep)?;
    let (name, details): (&str, Value) = match &args.cmd {
        WeightsCmd::ConeCheck { k } => {
            let k = weight(&s, k)?;
            ("cone-check", json!({ "k": strs(k.entries()), "in_cone": in_min_cone(&k) }))
        }
        WeightsCmd::ShiftTheta { tau, k, l } => {
            let tau = s.parse_residue(tau)?;
            let (k2, l2) = theta_weight_shift(tau, &weight(&s, k)?, &weight(&s, l)?);
            ("shift-theta", json!({ "k": strs(k2.entries()), "l": strs(l2.entries()) }))
        }
        WeightsCmd::ShiftFrob { prime, k, l } => {
            let prime = s.prime_position(prime)?;
            let (k2, l2) = frob_weight_shift(prime, &weight(&s, k)?, &weight(&s, l)?);
            ("shift-frob", json!({ "k": strs(k2.entries()), "l": strs(l2.entries()) }))
        }
        WeightsCmd::Rho { k } => {
            let k = weight(&s, k)?;
            let r = rho(&k);
            let classes: Vec<String> = r.classes().iter().map(|c| c.to_string()).collect();
            ("rho", json!({ "classes": classes, "trivial": r.is_trivial() }))
        }
        WeightsCmd::LambdaIndex => ("lambda-index", json!({ "index": lambda_index(&s)?.to_string() })),
        WeightsCmd::Hbasis { k } => {
            let k = weight(&s, k)?;
            let coords: Vec<String> = hbasis_decompose(&k)?.iter().map(|c| c.to_string()).collect();
            ("hbasis", json!({ "coords": coords, "in_lattice": lambda_contains(&k) }))
        }
        WeightsCmd::LeqHasse { k, k2 } => {
            let r = leq_hasse(&weight(&s, k)?, &weight(&s, k2)?)?;
            let mult = r.map(|m| m.iter().map(|x| x.to_string()).collect::<Vec<_>>());
            ("leq-hasse", json!({ "leq": mult.is_some(), "multiplicities": mult }))
        }
        WeightsCmd::Ptwt0 { .. } => unreachable!(),
    };
    rep.check(CheckRecord::pass(name, details));
    Ok(())
}

/// Expected answer: empty whenever `ef > 1` and `p^f > 3`; contains 0 when `ef = 1`.
fn ptwt0_record(p: u64, e: u32, f: u32) -> Result<CheckRecord> {
    let r = ptwt0_feasible(p, e, f)?;
    let feasible: Vec<Vec<String>> = r.feasible.iter().map(|m| strs(m)).collect();
    let status = if e * f == 1 {
        if r.feasible.iter().any(|m| m.iter().all(|&x| x == 0)) {
            Status::Pass
        } else {
            Status::Fail
        }
    } else if p.pow(f) > 3 {
        if r.feasible.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        }
    } else {
        Status::Skip
    };
    Ok(CheckRecord::new(
        format!("ptwt0 p={p} e={e} f={f}"),
        status,
        json!({
            "bounds": strs(&r.bounds),
            "points_searched": r.points_searched.to_string(),
            "feasible": feasible,
        }),
    ))
}

fn ptwt0(p: u64, e: u32, f: u32, grid: bool, rep: &mut ReportBuilder) -> Result<()> {
    if e == 0 || f == 0 {
        bail!("e and f must be positive");
    }
    if !grid {
        rep.check(ptwt0_record(p, e, f)?);
        return Ok(());
    }
    for q in (2..=p).filter(|&q| (2..q).all(|d| q % d != 0)) {
        for ee in 1..=e {
            for ff in 1..=f {
                rep.check(ptwt0_record(q, ee, ff)?);
            }
        }
    }
    Ok(())
}
