use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cichon::cardctx::CardContext;
use cichon::finrel::{self, FinSys};
use cichon::forge::{self, DerivedModel, ModelRef};
use cichon::format::{self, RecipeFile};
use cichon::submodel::{self, SubError};
use cichon::tukeycalc::{self, CalcError, Constellation, Entry, RegeneratedRules, RuleFact};

#[derive(Parser)]
#[command(name = "cichon", version, about = "Tukey-connection calculus for Cichon's diagram")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a recipe or axiom model and print its constellation.
    Derive {
        /// Recipe file; without one the builtin of that name is used.
        file: Option<PathBuf>,
        #[arg(long)]
        recipe: String,
        /// Print every fact with its justification.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Run a submodel-intersection plan.
    Intersect {
        /// Plan file; defaults to the builtin Cichon's maximum construction.
        file: Option<PathBuf>,
        #[arg(long, default_value = "cichon_max")]
        plan: String,
        /// Print every snapshot of the four systems.
        #[arg(long)]
        tables: bool,
        #[arg(long)]
        trace: bool,
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Finite relational systems.
    Finite {
        #[command(subcommand)]
        op: FiniteOp,
    },
    /// Check an assignment of cardinals against the diagram.
    Check {
        file: Option<PathBuf>,
        #[arg(long = "assign", default_value = "cichon_max")]
        assign: String,
    },
    /// Replay a trace produced by `derive --trace` or `intersect --trace`.
    Replay {
        file: Option<PathBuf>,
        #[command(flatten)]
        target: Target,
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
    },
    /// Print the source of a builtin model.
    Builtin { name: Option<String> },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long)]
    plan: Option<String>,
}

#[derive(Subcommand)]
enum FiniteOp {
    B { file: PathBuf },
    D { file: PathBuf },
    Dual { file: PathBuf },
    Product { a: PathBuf, b: PathBuf },
    Search { a: PathBuf, b: PathBuf },
}

/// Errors that map to exit code 1 rather than 2.
#[derive(Debug)]
struct Failure(String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failure {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Failure>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Derive { file, recipe, trace, dot, json } => derive(file.as_deref(), &recipe, trace, dot, json),
        Cmd::Intersect { file, plan, tables, trace, dot, json } => {
            intersect(file.as_deref(), &plan, tables, trace, dot, json)
        }
        Cmd::Finite { op } => finite(op),
        Cmd::Check { file, assign } => check(file.as_deref(), &assign),
        Cmd::Replay { file, target, trace } => replay(file.as_deref(), &target, &trace),
        Cmd::Builtin { name } => {
            match name {
                Some(n) if n == "cichon_max" => print!("{}", submodel::CICHON_MAX_SOURCE),
                Some(n) => print!("{}", forge::builtin_source(&n).ok_or_else(|| anyhow!("no builtin named {n}"))?),
                None => {
                    for n in forge::WARMUPS.iter().chain(&forge::THEOREMS).chain(&forge::AXIOMS) {
                        println!("{n}");
                    }
                    println!("cichon_max");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_file(path: &Path) -> Result<RecipeFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    format::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_model(file: Option<&Path>, name: &str) -> Result<(CardContext, ModelRef)> {
    match file {
        Some(p) => {
            let f = read_file(p)?;
            let m = f.model(name).ok_or_else(|| anyhow!("no recipe or model named {name} in {}", p.display()))?;
            Ok((f.ctx, m))
        }
        None => Ok(forge::builtin(name)?),
    }
}

fn load_plan_file(file: Option<&Path>) -> Result<RecipeFile> {
    match file {
        Some(p) => read_file(p),
        None => Ok(submodel::cichon_max_file()),
    }
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn constellation_json(c: &Constellation) -> serde_json::Value {
    let entries: serde_json::Map<String, serde_json::Value> =
        Entry::ALL.iter().map(|e| (e.key().to_string(), json!(c.get(*e).to_string()))).collect();
    json!(entries)
}

fn print_constellation(c: &Constellation) {
    print!("{}", c.table());
}

fn derive(
    file: Option<&Path>,
    name: &str,
    trace: bool,
    dot: Option<PathBuf>,
    json_out: Option<PathBuf>,
) -> Result<ExitCode> {
    let (ctx, model) = load_model(file, name)?;
    let m: DerivedModel = model.run(&ctx)?;
    if trace {
        print!("{}", m.trace());
        println!();
    }
    print_constellation(&m.constellation);
    if let Some(p) = dot {
        write_out(&p, &m.constellation.to_dot(name))?;
    }
    if let Some(p) = json_out {
        let v = json!({
            "name": name,
            "pinned": m.constellation.is_pinned(),
            "constellation": constellation_json(&m.constellation),
            "facts": m.db.facts().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        });
        write_out(&p, &serde_json::to_string_pretty(&v)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn intersect(
    file: Option<&Path>,
    name: &str,
    tables: bool,
    trace: bool,
    dot: Option<PathBuf>,
    json_out: Option<PathBuf>,
) -> Result<ExitCode> {
    let f = load_plan_file(file)?;
    let plan = f.plan(name).ok_or_else(|| anyhow!("no plan named {name}"))?;
    let run = match submodel::run_plan(&f.ctx, plan) {
        Ok(r) => r,
        Err(e @ SubError::Unpinned { .. }) => return Err(Failure(e.to_string()).into()),
        Err(e) => return Err(e.into()),
    };
    if tables {
        print!("{}", run.log.render(&f.ctx));
        println!();
    }
    for (i, lam) in &run.log.product_bounds {
        println!("Lambda_{i} = {lam}");
    }
    for flag in &run.log.closure_flags {
        println!("note: {flag}");
    }
    if trace {
        for fact in run.db.facts() {
            println!("{fact}");
        }
    }
    println!();
    print_constellation(&run.constellation);
    if let Some(p) = dot {
        write_out(&p, &run.constellation.to_dot(name))?;
    }
    if let Some(p) = json_out {
        let snapshots: Vec<_> = run
            .log
            .snapshots
            .iter()
            .map(|s| {
                json!({
                    "label": s.label,
                    "systems": s.states.iter().enumerate().map(|(i, st)| json!({
                        "index": i + 1,
                        "below": st.below.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                        "b": st.b.to_string(),
                        "d": st.d.to_string(),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let v = json!({
            "plan": name,
            "snapshots": snapshots,
            "product_bounds": run.log.product_bounds.iter().map(|(i, l)| (i.to_string(), json!(l.to_string()))).collect::<serde_json::Map<_, _>>(),
            "closure_flags": run.log.closure_flags,
            "constellation": constellation_json(&run.constellation),
        });
        write_out(&p, &serde_json::to_string_pretty(&v)?)?;
    }
    if !run.constellation.is_pinned() {
        return Err(Failure("final constellation is not pinned".into()).into());
    }
    Ok(ExitCode::SUCCESS)
}

fn read_sys(path: &Path) -> Result<FinSys> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    finrel::parse_sys(&text).with_context(|| format!("parsing {}", path.display()))
}

fn finite(op: FiniteOp) -> Result<ExitCode> {
    match op {
        FiniteOp::B { file } => println!("{}", finrel::b_num(&read_sys(&file)?)?),
        FiniteOp::D { file } => println!("{}", finrel::d_num(&read_sys(&file)?)?),
        FiniteOp::Dual { file } => print!("{}", finrel::dual(&read_sys(&file)?)),
        FiniteOp::Product { a, b } => print!("{}", finrel::product(&read_sys(&a)?, &read_sys(&b)?)?),
        FiniteOp::Search { a, b } => {
            let (r, s) = (read_sys(&a)?, read_sys(&b)?);
            match finrel::tukey_search(&r, &s)? {
                Some(m) => {
                    let show = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                    println!("psi_minus: {}", show(&m.psi_minus));
                    println!("psi_plus: {}", show(&m.psi_plus));
                }
                None => println!("none"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn check(file: Option<&Path>, name: &str) -> Result<ExitCode> {
    let f = load_plan_file(file)?;
    let a = f.assignment(name).ok_or_else(|| anyhow!("no assignment named {name}"))?;
    let violations = match tukeycalc::check_assignment(&f.ctx, &a.values) {
        Ok(v) => v,
        Err(e @ CalcError::MissingEntries(_)) => return Err(anyhow!("assignment {name}: {e}")),
        Err(e) => return Err(e.into()),
    };
    if violations.is_empty() {
        println!("ok");
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        println!("{v}");
    }
    Ok(ExitCode::from(1))
}

fn replay(file: Option<&Path>, target: &Target, trace: &Path) -> Result<ExitCode> {
    let (ctx, top, rules): (CardContext, _, Vec<RuleFact>) = match (&target.recipe, &target.plan) {
        (Some(name), _) => {
            let (ctx, model) = load_model(file, name)?;
            let m = model.run(&ctx)?;
            let rules = forge::regenerate(&ctx, &model)?;
            (ctx, m.db.c_top(), rules)
        }
        (None, Some(name)) => {
            let f = load_plan_file(file)?;
            let plan = f.plan(name).ok_or_else(|| anyhow!("no plan named {name}"))?;
            let log = submodel::tables(&f.ctx, plan)?;
            let top = plan.lambda_c().ok_or_else(|| anyhow!("plan {name} has no final model"))?.clone();
            (f.ctx.clone(), top, submodel::plan_facts(&log))
        }
        (None, None) => unreachable!("clap requires one target"),
    };
    let text = fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let facts = text
        .lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with('#'))
        .map(|(i, l)| tukeycalc::parse_trace_line(&ctx, l).with_context(|| format!("{}:{}", trace.display(), i + 1)))
        .collect::<Result<Vec<_>>>()?;
    if facts.is_empty() {
        return Err(anyhow!("{} holds no trace lines", trace.display()));
    }
    let oracle = RegeneratedRules(rules);
    for fact in &facts {
        if let Err(e) = tukeycalc::replay_fact(&ctx, &top, &facts, fact, &oracle) {
            return Err(Failure(e.to_string()).into());
        }
    }
    println!("replayed {} facts", facts.len());
    Ok(ExitCode::SUCCESS)
}
