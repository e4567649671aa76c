//! Command-line front-end. Every subcommand prints one JSON report (or DOT
//! text for `core --format dot`) and returns an exit code: 0 for a computed
//! result, including negative verdicts; 2 for bad input; 3 when a budget or
//! precision runs out.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::boettcher::{phi_eval, rho_closeness_with};
use crate::codec::{
    backend_to_string, parse_backend, parse_scalar, polynomial_from_json, polynomial_to_json, raw_poly_from_json,
    scalar_to_json, val_to_json,
};
use crate::conjugacy::{build_conjugacy, verify_extendable, CheckStatus, ConjugacyOptions, ConjugacyOutcome};
use crate::core_tree::{build_core_with, CoreOptions, DEFAULT_CORE_DEPTH, DEFAULT_HORIZON};
use crate::error::{Error, Result};
use crate::escape::{
    boettcher_modulus, classification_from_records, classify_marks, BoundedKind, EscapeOptions, EscapeRecord,
    DEFAULT_BUDGET, DEFAULT_DEPTH,
};
use crate::families::{
    base_point_constancy, check_set, family_rho_bound, family_to_json_summary, passivity_report, perturb_to_escape,
    rho_bound_to_json, BasePointVerdict, Family, PerturbOutcome,
};
use crate::hensel::lift;
use crate::berkovich::BerkPoint;
use crate::polynomial::{MarkedPolynomial, Tameness};
use crate::valued_field::{parse_rat, Backend, Val};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "berkdyn", version, about = "Exact Berkovich dynamics of tame polynomials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Orbit iteration budget.
    #[arg(long, global = true, env = "BERKDYN_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Working valuation precision for Böttcher evaluations.
    #[arg(long, global = true, env = "BERKDYN_PRECISION", default_value = "20")]
    pub precision: String,
    /// Require every input to use this backend (`padic:p`, `series:N[:e]`).
    #[arg(long, global = true)]
    pub backend: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Dot,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Base point, tameness, escape records and classification.
    Analyze { input: PathBuf },
    /// Build and export the trimmed dynamical core.
    Core {
        input: PathBuf,
        #[arg(long, default_value = "inf")]
        rho: String,
        #[arg(long, default_value_t = DEFAULT_CORE_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// ρ-closeness, conjugacy construction and verification for two polynomials.
    Compare {
        f: PathBuf,
        g: PathBuf,
        /// Trimming parameter; defaults to the computed ρ-closeness.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Evaluate the Böttcher coordinate at a point outside the base disk.
    Boettcher {
        input: PathBuf,
        #[arg(long)]
        at: String,
    },
    /// Newton lift of f(h(x)) = g(x) at a classical point.
    Lift {
        f: PathBuf,
        g: PathBuf,
        #[arg(long)]
        at: String,
        #[arg(long, default_value = "40")]
        target: String,
    },
    /// Parameter-family reports.
    Family {
        #[command(subcommand)]
        action: FamilyCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum FamilyCommand {
    /// Passivity verdicts and base-point constancy at sampled parameters.
    Report {
        input: PathBuf,
        /// Comma-separated parameters; defaults to the disk center and two boundary points.
        #[arg(long)]
        samples: Option<String>,
    },
    /// ρ bound over a subdisk.
    Rho {
        input: PathBuf,
        #[arg(long)]
        center: Option<String>,
        #[arg(long)]
        radius_exp: String,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Search spheres around a parameter for one in the shift locus.
    Perturb {
        input: PathBuf,
        #[arg(long)]
        at: Option<String>,
        #[arg(long, default_value_t = 16)]
        trials: usize,
    },
}

/// Parse arguments, run, print, and return the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let (code, out) = run(&cli);
    // A closed pipe downstream is not an error of ours.
    let _ = writeln!(std::io::stdout(), "{out}");
    code
}

pub fn run(cli: &Cli) -> (i32, String) {
    match dispatch(cli) {
        Ok(Output::Json(v)) => (0, pretty(&v)),
        Ok(Output::Text(t)) => (0, t.trim_end().to_string()),
        Err(e) => {
            let code = if e.is_exhaustion() { 3 } else { 2 };
            let report = json!({
                "schema": SCHEMA_VERSION,
                "error": {"code": e.code(), "message": e.to_string()},
            });
            (code, pretty(&report))
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("reports are serializable")
}

enum Output {
    Json(Value),
    Text(String),
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

struct Ctx {
    budget: usize,
    precision: Val,
    backend: Option<Backend>,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Ctx> {
        let precision = Val::parse(&cli.precision)?;
        if !precision.is_finite() {
            return Err(Error::InvalidInput("--precision must be finite".into()));
        }
        let backend = cli.backend.as_deref().map(parse_backend).transpose()?;
        Ok(Ctx { budget: cli.budget, precision, backend })
    }

    fn check_backend(&self, b: &Backend) -> Result<()> {
        match &self.backend {
            Some(want) if want != b => Err(Error::InvalidInput(format!(
                "input backend {} differs from --backend {}",
                backend_to_string(b),
                backend_to_string(want)
            ))),
            _ => Ok(()),
        }
    }

    fn polynomial(&self, path: &Path) -> Result<MarkedPolynomial> {
        let f = polynomial_from_json(&read_json(path)?)?;
        self.check_backend(f.backend())?;
        Ok(f)
    }

    fn family(&self, path: &Path) -> Result<Family> {
        let fam = Family::from_json(&read_json(path)?)?;
        self.check_backend(&fam.backend)?;
        Ok(fam)
    }

    fn config(&self, command: &str, inputs: &[&Path], extra: Value) -> Value {
        let mut cfg = json!({
            "command": command,
            "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "budget": self.budget,
            "precision": val_to_json(&self.precision),
            "backend": self.backend.as_ref().map(backend_to_string),
        });
        if let (Some(obj), Value::Object(more)) = (cfg.as_object_mut(), extra) {
            obj.extend(more);
        }
        cfg
    }
}

fn report(config: Value, body: Value) -> Value {
    let mut out = json!({"schema": SCHEMA_VERSION, "config": config});
    if let (Some(obj), Value::Object(more)) = (out.as_object_mut(), body) {
        obj.extend(more);
    }
    out
}

fn dispatch(cli: &Cli) -> Result<Output> {
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::Analyze { input } => {
            let f = ctx.polynomial(input)?;
            let cfg = ctx.config("analyze", &[input], json!({}));
            Ok(Output::Json(report(cfg, analyze_json(&f, ctx.budget)?)))
        }
        Command::Core { input, rho, depth, horizon, format } => {
            let rho = Val::parse(rho)?;
            let f = ctx.polynomial(input)?;
            let opts = CoreOptions { rho: rho.clone(), depth: *depth, budget: ctx.budget, horizon: *horizon };
            let tree = build_core_with(&f, &opts)?;
            match format {
                Format::Dot => Ok(Output::Text(tree.to_dot())),
                Format::Json => {
                    let cfg = ctx.config(
                        "core",
                        &[input],
                        json!({"rho": val_to_json(&rho), "depth": depth, "horizon": horizon}),
                    );
                    let body = json!({
                        "vertex_count": tree.vertex_count(),
                        "edge_count": tree.edges.len(),
                        "consistency_violations": tree.consistency_violations(),
                        "tree": tree.to_json(),
                    });
                    Ok(Output::Json(report(cfg, body)))
                }
            }
        }
        Command::Compare { f, g, rho, depth } => {
            let rho = rho.as_deref().map(Val::parse).transpose()?;
            let fp = ctx.polynomial(f)?;
            let gp = ctx.polynomial(g)?;
            let escape = EscapeOptions { budget: ctx.budget, ..EscapeOptions::default() };
            let closeness = rho_closeness_with(&fp, &gp, &ctx.precision, escape)?;
            if closeness.rho_exp <= Val::zero() {
                return Err(Error::NotComparable(format!(
                    "Böttcher coordinates are not ρ-close for any positive ρ (computed {})",
                    closeness.rho_exp
                )));
            }
            let rho = rho.unwrap_or_else(|| closeness.rho_exp.clone());
            let cfg = ctx.config("compare", &[f, g], json!({"rho": val_to_json(&rho), "depth": depth}));
            let opts = ConjugacyOptions { rho, depth: *depth, budget: ctx.budget, precision: ctx.precision.clone() };
            let body = match build_conjugacy(&fp, &gp, &opts)? {
                ConjugacyOutcome::WellDefinednessFailure(w) => json!({
                    "rho_closeness": rho_bound_to_json(&closeness),
                    "outcome": "WellDefinednessFailure",
                    "overall": "Fail",
                    "failure": {
                        "first": format!("{:?}", w.first),
                        "second": w.second.as_ref().map(|s| format!("{s:?}")),
                        "level": w.level,
                        "detail": w.detail,
                    },
                }),
                ConjugacyOutcome::Built(h) => {
                    let rep = verify_extendable(&h, &ctx.precision);
                    let status = |c: &CheckStatus| json!({"status": c.label(), "detail": c.detail()});
                    json!({
                        "rho_closeness": rho_bound_to_json(&closeness),
                        "outcome": "Built",
                        "overall": if rep.overall_pass() { "Pass" } else { "Fail" },
                        "verified_depth": rep.verified_depth,
                        "vertex_count": h.source.vertex_count(),
                        "checks": {
                            "isometry": status(&rep.isometry),
                            "equivariance": status(&rep.equivariance),
                            "local_translation": status(&rep.local_translation),
                            "boettcher_at_infinity": status(&rep.boettcher_at_infinity),
                        },
                    })
                }
            };
            Ok(Output::Json(report(cfg, body)))
        }
        Command::Boettcher { input, at } => {
            let f = ctx.polynomial(input)?;
            let z = parse_scalar(f.backend(), at)?;
            let phi = phi_eval(&f, &z, &ctx.precision)?;
            let cfg = ctx.config("boettcher", &[input], json!({"at": at}));
            Ok(Output::Json(report(
                cfg,
                json!({"phi": scalar_to_json(&phi), "valuation": val_to_json(&phi.valuation())}),
            )))
        }
        Command::Lift { f, g, at, target } => {
            let target = Val::parse(target)?;
            let fp = raw_poly_from_json(&read_json(f)?)?;
            let gp = raw_poly_from_json(&read_json(g)?)?;
            ctx.check_backend(fp.backend())?;
            ctx.check_backend(gp.backend())?;
            let x = parse_scalar(fp.backend(), at)?;
            let res = lift(&fp, &gp, &x, &target, None)?;
            let cfg = ctx.config("lift", &[f, g], json!({"at": at, "target": val_to_json(&target)}));
            let p = &res.params;
            let body = json!({
                "value": scalar_to_json(&res.value),
                "certified_valuation": val_to_json(&res.certified_valuation),
                "iterations": res.iterations(),
                "contraction_ok": res.contraction_holds(),
                "params": {
                    "s": val_to_json(&p.s), "mu": val_to_json(&p.mu), "r": val_to_json(&p.r),
                    "rho": val_to_json(&p.rho), "max_iter": p.max_iter,
                },
                "steps": res.steps.iter().map(|s| json!({
                    "z": scalar_to_json(&s.z),
                    "residual_val": val_to_json(&s.residual_val),
                    "correction_val": val_to_json(&s.correction_val),
                })).collect::<Vec<_>>(),
            });
            Ok(Output::Json(report(cfg, body)))
        }
        Command::Family { action } => family_command(&ctx, action).map(Output::Json),
    }
}

fn family_command(ctx: &Ctx, action: &FamilyCommand) -> Result<Value> {
    match action {
        FamilyCommand::Report { input, samples } => {
            let fam = ctx.family(input)?;
            let samples = match samples {
                Some(s) => s.split(',').map(|x| parse_scalar(&fam.backend, x.trim())).collect::<Result<Vec<_>>>()?,
                None => check_set(&fam.backend, &fam.disk_center, &fam.disk_radius_exp),
            };
            let rep = passivity_report(&fam, &samples, ctx.budget)?;
            let base = match base_point_constancy(&fam, &samples) {
                Ok(BasePointVerdict::Constant(r)) => json!({"verdict": "Constant", "radius_exp": r.to_string()}),
                Ok(BasePointVerdict::Varies { first, second }) => json!({
                    "verdict": "Varies",
                    "first": {"lambda": scalar_to_json(&first.0), "radius_exp": first.1.to_string()},
                    "second": {"lambda": scalar_to_json(&second.0), "radius_exp": second.1.to_string()},
                }),
                Err(e) => json!({"verdict": "Unavailable", "reason": e.to_string()}),
            };
            let cfg = ctx.config(
                "family report",
                &[input],
                json!({"samples": samples.iter().map(scalar_to_json).collect::<Vec<_>>()}),
            );
            Ok(report(cfg, json!({"passivity": family_to_json_summary(&rep), "base_point": base})))
        }
        FamilyCommand::Rho { input, center, radius_exp, order } => {
            let fam = ctx.family(input)?;
            let radius = parse_rat(radius_exp)?;
            let center = match center {
                Some(c) => parse_scalar(&fam.backend, c)?,
                None => fam.disk_center.clone(),
            };
            let bound = family_rho_bound(&fam, &center, &radius, *order, &ctx.precision, ctx.budget)?;
            let cfg = ctx.config(
                "family rho",
                &[input],
                json!({"center": scalar_to_json(&center), "radius_exp": radius.to_string(), "order": order}),
            );
            Ok(report(
                cfg,
                json!({"rho_bound": rho_bound_to_json(&bound), "note": "Infinity means equal at the working precision"}),
            ))
        }
        FamilyCommand::Perturb { input, at, trials } => {
            let fam = ctx.family(input)?;
            let lambda0 = match at {
                Some(a) => parse_scalar(&fam.backend, a)?,
                None => fam.disk_center.clone(),
            };
            let outcome = perturb_to_escape(&fam, &lambda0, ctx.budget, *trials)?;
            let cfg = ctx.config(
                "family perturb",
                &[input],
                json!({"at": scalar_to_json(&lambda0), "trials": trials}),
            );
            let body = match outcome {
                PerturbOutcome::Found { lambda, polynomial, tried, .. } => json!({
                    "outcome": "Found",
                    "lambda": scalar_to_json(&lambda),
                    "tried": tried,
                    "analysis": analyze_json(&polynomial, ctx.budget)?,
                }),
                PerturbOutcome::NotFound { tried } => json!({
                    "outcome": "NotFound",
                    "tried": tried,
                    "note": "only finitely many direction representatives per sphere were probed; this is inconclusive",
                }),
            };
            Ok(report(cfg, body))
        }
    }
}

fn record_json(r: &EscapeRecord) -> Value {
    match r {
        EscapeRecord::Escaping { first_exit } => json!({"kind": "Escaping", "first_exit": first_exit}),
        EscapeRecord::Bounded(BoundedKind::DiskComponent { diam_exp }) => {
            json!({"kind": "DiskComponent", "diam_exp": val_to_json(diam_exp)})
        }
        EscapeRecord::Unknown { budget_spent } => json!({"kind": "Unknown", "budget_spent": budget_spent}),
        other => json!({"kind": other.kind_name()}),
    }
}

/// The `analyze` report body for one polynomial.
pub fn analyze_json(f: &MarkedPolynomial, budget: usize) -> Result<Value> {
    if let Tameness::Wild { degree, witness } = f.tameness_check() {
        return Err(Error::NotTame { degree, witness: witness.to_string() });
    }
    let records = classify_marks(f, EscapeOptions { budget, depth: DEFAULT_DEPTH })?;
    let marks: Vec<Value> = f
        .marks()
        .iter()
        .zip(&records)
        .enumerate()
        .map(|(i, (m, r))| {
            let modulus = if r.is_escaping() {
                boettcher_modulus(f, &BerkPoint::classical(m.point.clone()), budget).ok().map(|v| val_to_json(&v))
            } else {
                None
            };
            json!({
                "index": i,
                "point": scalar_to_json(&m.point),
                "multiplicity": m.multiplicity,
                "record": record_json(r),
                "boettcher_modulus_exp": modulus,
            })
        })
        .collect();
    Ok(json!({
        "polynomial": polynomial_to_json(f),
        "degree": f.degree(),
        "base_radius_exp": f.base_radius_exp().to_string(),
        "tameness": "Tame",
        "marks": marks,
        "classification": classification_from_records(&records).name(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, v.to_string()).unwrap();
        p
    }

    fn run_args(args: &[&str]) -> (i32, String) {
        let cli = Cli::try_parse_from(std::iter::once("berkdyn").chain(args.iter().copied())).unwrap();
        run(&cli)
    }

    #[test]
    fn analyze_and_errors() {
        let dir = std::env::temp_dir().join(format!("berkdyn-cli-unit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = write(
            &dir,
            "f.json",
            &json!({"backend": "padic:3", "b": "-1/3", "marks": [{"point": "0", "multiplicity": 2}]}),
        );
        let (code, out) = run_args(&["analyze", f.to_str().unwrap()]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["classification"], "TameShiftLocus");
        assert_eq!(v["base_radius_exp"], "-1/2");
        assert_eq!(v["schema"], 1);

        let (code, out) = run_args(&["analyze", dir.join("missing.json").to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(out.contains("InvalidInput"));

        let (code, _) = run_args(&["boettcher", f.to_str().unwrap(), "--at", "0"]);
        assert_eq!(code, 2);
        std::fs::remove_dir_all(&dir).ok();
    }
}
