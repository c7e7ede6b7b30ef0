//! Intersection with chains of submodels: a state machine over the four
//! systems `S_i` tracking the regular cardinals below each system and its
//! `b`/`d` values, step by step.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::cardctx::{CardContext, CardError, CardinalName, ALEPH0};
use crate::forge::{self, ForgeError};
use crate::format::{self, ParseError};
use crate::tukeycalc::{self, Atom, CalcError, Constellation, FactDB, Rule, RuleFact, SysExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubError {
    #[error("missing assumption `{assumption}` required by {by}")]
    MissingAssumption { assumption: String, by: String },
    #[error("{step}, system {system}: {what} not pinned (lower bound {lo}, upper bound {hi}); {trace}")]
    Unpinned { step: String, system: usize, what: &'static str, lo: String, hi: String, trace: String },
    #[error("plan order violation: {0}")]
    PlanOrderViolation(String),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Card(#[from] CardError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl From<ForgeError> for SubError {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::MissingAssumption { assumption, theorem } => {
                SubError::MissingAssumption { assumption, by: theorem }
            }
            ForgeError::Calc(c) => SubError::Calc(c),
            ForgeError::Card(c) => SubError::Card(c),
            ForgeError::Parse(p) => SubError::Parse(p),
            other => SubError::InvalidChain(other.to_string()),
        }
    }
}

fn missing(assumption: impl Into<String>, by: impl Into<String>) -> SubError {
    SubError::MissingAssumption { assumption: assumption.into(), by: by.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChainKind {
    D(usize),
    B(usize),
    Final,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainKind::D(i) => write!(f, "d {i}"),
            ChainKind::B(i) => write!(f, "b {i}"),
            ChainKind::Final => f.write_str("final"),
        }
    }
}

/// A directed system of submodels: `length` models, each `<closure`-closed
/// and of size `width`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSpec {
    pub kind: ChainKind,
    pub length: Option<CardinalName>,
    pub closure: CardinalName,
    pub width: CardinalName,
}

impl ChainSpec {
    /// Step label: `d 4` is step 1.1, `b 4` is 1.2, and so on.
    pub fn label(&self) -> String {
        match self.kind {
            ChainKind::D(i) => format!("step {}.1", 5 - i),
            ChainKind::B(i) => format!("step {}.2", 5 - i),
            ChainKind::Final => "final".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan {
    pub name: String,
    /// `theta_1..theta_4, theta_inf`
    pub base: Vec<CardinalName>,
    pub steps: Vec<ChainSpec>,
}

impl Plan {
    fn chain(&self, kind: ChainKind) -> Option<&ChainSpec> {
        self.steps.iter().find(|c| c.kind == kind)
    }

    pub fn lambda_d(&self, i: usize) -> Option<&CardinalName> {
        self.chain(ChainKind::D(i)).and_then(|c| c.length.as_ref())
    }

    pub fn lambda_b(&self, i: usize) -> Option<&CardinalName> {
        self.chain(ChainKind::B(i)).and_then(|c| c.length.as_ref())
    }

    pub fn lambda_c(&self) -> Option<&CardinalName> {
        self.chain(ChainKind::Final).map(|c| &c.width)
    }
}

pub const CANONICAL_ORDER: [ChainKind; 9] = [
    ChainKind::D(4),
    ChainKind::B(4),
    ChainKind::D(3),
    ChainKind::B(3),
    ChainKind::D(2),
    ChainKind::B(2),
    ChainKind::D(1),
    ChainKind::B(1),
    ChainKind::Final,
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SysState {
    /// Regular cardinals Tukey below the system, smallest first.
    pub below: Vec<CardinalName>,
    pub b: CardinalName,
    pub d: CardinalName,
}

impl SysState {
    /// Render the below set, collapsing runs that are exactly the regulars
    /// of an interval into `[lo, hi]`.
    pub fn render_below(&self, ctx: &CardContext) -> String {
        let mut parts = Vec::new();
        let v = &self.below;
        let mut i = 0;
        while i < v.len() {
            let mut best = i;
            for j in (i + 2..v.len()).rev() {
                if ctx.regulars_between(&v[i], &v[j]).len() == j - i + 1
                    && v[i..=j].iter().all(|c| ctx.le_known(&v[i], c) && ctx.le_known(c, &v[j]))
                {
                    best = j;
                    break;
                }
            }
            if best > i {
                parts.push(format!("[{}, {}]", v[i], v[best]));
            } else {
                parts.push(v[i].to_string());
            }
            i = best + 1;
        }
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub label: String,
    /// States of `S_1..S_4`.
    pub states: Vec<SysState>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableLog {
    pub snapshots: Vec<Snapshot>,
    /// `Lambda_i` for each system, recorded at its `b` step.
    pub product_bounds: BTreeMap<usize, SysExpr>,
    /// Steps where `min(b, closure)` and `min(b, closure, length)` differ.
    pub closure_flags: Vec<String>,
}

impl TableLog {
    pub fn render(&self, ctx: &CardContext) -> String {
        let mut out = String::new();
        for s in &self.snapshots {
            out.push_str(&format!("== {} ==\n", s.label));
            for i in (1..=4).rev() {
                let st = &s.states[i - 1];
                out.push_str(&format!("{i} | {} | b={} d={}\n", st.render_below(ctx), st.b, st.d));
            }
        }
        out
    }
}

fn sorted(ctx: &CardContext, mut v: Vec<CardinalName>) -> Vec<CardinalName> {
    v.dedup();
    ctx.sort_names(&mut v);
    v.dedup();
    v
}

/// The starting table: `S_i = [theta_inf]^{<theta_i}`.
pub fn init_from_gksmax(ctx: &CardContext, base: &[CardinalName]) -> Result<Vec<SysState>, SubError> {
    if base.len() != 5 {
        return Err(SubError::InvalidChain(format!("base takes 5 cardinals, got {}", base.len())));
    }
    forge::check_gksmax(ctx, base)?;
    let top = &base[4];
    Ok(base[..4]
        .iter()
        .map(|t| SysState { below: sorted(ctx, ctx.regulars_between(t, top)), b: t.clone(), d: top.clone() })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub states: Vec<SysState>,
    pub product_bound: Option<(usize, SysExpr)>,
    pub flags: Vec<String>,
}

/// `Lambda_i`: the product of `lambda_j^d x lambda_j^b` for `j = i..4`,
/// read off the chains applied so far plus `current`.
fn lambda_product(i: usize, history: &[ChainSpec], current: &ChainSpec) -> Result<SysExpr, SubError> {
    let find = |kind: ChainKind| {
        history
            .iter()
            .chain(std::iter::once(current))
            .find(|c| c.kind == kind)
            .and_then(|c| c.length.clone())
            .ok_or_else(|| SubError::PlanOrderViolation(format!("chain {kind} must come before b {i}")))
    };
    let mut parts = Vec::new();
    for j in i..=4 {
        parts.push(SysExpr::Card(find(ChainKind::D(j))?));
        parts.push(SysExpr::Card(find(ChainKind::B(j))?));
    }
    Ok(SysExpr::prod(parts))
}

/// Intersect every system with the union of one chain of models.
pub fn step(
    ctx: &CardContext,
    states: &[SysState],
    c: &ChainSpec,
    history: &[ChainSpec],
) -> Result<StepOutcome, SubError> {
    let width = &c.width;
    let label = c.label();
    let mut out = Vec::with_capacity(states.len());
    let mut flags = Vec::new();
    let mut product_bound = None;
    for (k, s) in states.iter().enumerate() {
        let system = k + 1;
        if ctx.le_known(&s.d, width) && s.below.iter().all(|m| ctx.le_known(m, width)) {
            out.push(s.clone());
            continue;
        }
        let unpinned = |what: &'static str, lo: String, hi: String, trace: String| SubError::Unpinned {
            step: label.clone(),
            system,
            what,
            lo,
            hi,
            trace,
        };
        let Some(length) = &c.length else {
            return Err(unpinned(
                "b/d",
                s.b.to_string(),
                s.d.to_string(),
                format!("the final model of size {width} is too small for S_{system}"),
            ));
        };
        let mut below = Vec::new();
        let mut collapsed = false;
        for m in &s.below {
            if ctx.le_known(m, width) {
                below.push(m.clone());
            } else if ctx.lt_known(width, m) {
                collapsed = true;
            } else {
                return Err(unpinned(
                    "below set",
                    m.to_string(),
                    width.to_string(),
                    format!("{m} is not comparable with the model size"),
                ));
            }
        }
        if collapsed {
            below.push(length.clone());
        }
        let below = sorted(ctx, below);
        let lo_below = ctx.min_of(&below)?.expect("nonempty");
        let hi_below = ctx.max_of(&below)?.expect("nonempty");

        let mut d_upper = ctx.trace(&s.d, width)?;
        let mut d_trace = format!("d <= |d(S) ∩ N| = min({}, {width}) = {d_upper}", s.d);
        if c.kind == ChainKind::B(system) {
            let lam = lambda_product(system, history, c)?;
            let SysExpr::Prod(parts) = &lam else { unreachable!("a product of at least two factors") };
            let ds: Vec<CardinalName> =
                parts.iter().filter_map(|p| if let SysExpr::Card(x) = p { Some(x.clone()) } else { None }).collect();
            let d_lam = ctx.max_of(&ds)?.expect("nonempty");
            d_upper = ctx.min2(&d_upper, &d_lam)?;
            d_trace.push_str(&format!("; S_{system} ∩ N below {lam} gives d <= {d_lam}"));
            product_bound = Some((system, lam));
        }
        if !ctx.eq_known(&d_upper, &hi_below) {
            return Err(unpinned("d", hi_below.to_string(), d_upper.to_string(), d_trace));
        }

        let cut = ctx.min2(&c.closure, length)?;
        let b_lower = ctx.min2(&s.b, &cut)?;
        let plain = ctx.min2(&s.b, &c.closure)?;
        if !ctx.eq_known(&plain, &b_lower) {
            flags.push(format!(
                "{label}, S_{system}: min(b, closure) = {plain} but min(b, closure, length) = {b_lower}"
            ));
        }
        if !ctx.eq_known(&b_lower, &lo_below) {
            return Err(unpinned(
                "b",
                b_lower.to_string(),
                lo_below.to_string(),
                format!("b >= min({}, {}, {length}) = {b_lower}", s.b, c.closure),
            ));
        }
        out.push(SysState { below, b: lo_below, d: hi_below });
    }
    Ok(StepOutcome { states: out, product_bound, flags })
}

/// Check the plan's shape and the assumptions its chains rely on.
pub fn check_plan(ctx: &CardContext, p: &Plan) -> Result<(), SubError> {
    let kinds: Vec<ChainKind> = p.steps.iter().map(|c| c.kind).collect();
    if kinds != CANONICAL_ORDER {
        let shown: Vec<String> = kinds.iter().map(|k| k.to_string()).collect();
        return Err(SubError::PlanOrderViolation(format!(
            "chains must be d 4, b 4, d 3, ..., b 1, final; got {}",
            shown.join(", ")
        )));
    }
    if p.base.len() != 5 {
        return Err(SubError::InvalidChain(format!("base takes 5 cardinals, got {}", p.base.len())));
    }
    for c in &p.steps {
        for n in c.length.iter().chain([&c.closure, &c.width]) {
            if !ctx.contains(n) {
                return Err(missing(format!("card {n}"), c.label()));
            }
        }
        match c.kind {
            ChainKind::D(i) => {
                let theta = &p.base[i - 1];
                if &c.width != theta {
                    return Err(SubError::InvalidChain(format!("{}: width must be {theta}", c.label())));
                }
                let minus = &p.chain(ChainKind::B(i)).expect("canonical").width;
                if ctx.succ_of(minus) != Some(&c.closure) {
                    return Err(missing(format!("succ({minus})={}", c.closure), c.label()));
                }
                if !ctx.pow_holds(theta, minus) {
                    return Err(missing(format!("pow({theta},{minus})={theta}"), c.label()));
                }
            }
            ChainKind::B(i) => {
                if c.closure != c.width {
                    return Err(SubError::InvalidChain(format!("{}: closure and width must agree", c.label())));
                }
                if !ctx.lt_known(&c.width, &p.base[i - 1]) {
                    return Err(missing(format!("lt {} {}", c.width, p.base[i - 1]), c.label()));
                }
                if !ctx.pow_lt_holds(&c.width, &c.width) {
                    return Err(missing(format!("pow_lt({0},{0})={0}", c.width), c.label()));
                }
            }
            ChainKind::Final => {
                if c.closure != ctx.aleph1() || c.length.is_some() {
                    return Err(SubError::InvalidChain("final: the model is sigma-closed, closure aleph1".into()));
                }
                if !ctx.pow_holds(&c.width, &CardinalName::new(ALEPH0)) {
                    return Err(missing(format!("pow({0},aleph0)={0}", c.width), "final"));
                }
            }
        }
        if c.kind != ChainKind::Final && c.length.is_none() {
            return Err(SubError::InvalidChain(format!("{}: missing length", c.label())));
        }
    }
    for w in p.steps[..8].windows(2) {
        if !ctx.lt_known(&w[1].width, &w[0].width) {
            return Err(SubError::PlanOrderViolation(format!(
                "model sizes must decrease: {} then {}",
                w[0].width, w[1].width
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PlanRun {
    pub log: TableLog,
    pub db: FactDB,
    pub constellation: Constellation,
    pub applications: Vec<RuleFact>,
}

/// The facts asserted at the end of a plan: each `R_i` is below `Lambda_i`
/// and above every regular left in its below set.
pub fn plan_facts(log: &TableLog) -> Vec<RuleFact> {
    let last = log.snapshots.last().expect("initial snapshot");
    let mut out = Vec::new();
    for i in 1..=4 {
        let r = SysExpr::atom(Atom::PRS[i - 1]);
        if let Some(lam) = log.product_bounds.get(&i) {
            out.push(RuleFact::new(r.clone(), lam.clone(), Rule::RestrictionProduct(i)));
        }
        for mu in &last.states[i - 1].below {
            out.push(RuleFact::new(SysExpr::Card(mu.clone()), r.clone(), Rule::RestrictionRegular(i)));
        }
    }
    out
}

pub fn tables(ctx: &CardContext, p: &Plan) -> Result<TableLog, SubError> {
    check_plan(ctx, p)?;
    let mut states = init_from_gksmax(ctx, &p.base)?;
    let mut log = TableLog {
        snapshots: vec![Snapshot { label: "initial".into(), states: states.clone() }],
        product_bounds: BTreeMap::new(),
        closure_flags: vec![],
    };
    for (k, c) in p.steps.iter().enumerate() {
        let o = step(ctx, &states, c, &p.steps[..k])?;
        states = o.states;
        log.closure_flags.extend(o.flags);
        if let Some((i, lam)) = o.product_bound {
            log.product_bounds.insert(i, lam);
        }
        if c.kind != ChainKind::Final {
            log.snapshots.push(Snapshot { label: c.label(), states: states.clone() });
        } else if states != log.snapshots.last().expect("snapshot").states {
            return Err(SubError::InvalidChain("the final model changed a system".into()));
        }
    }
    Ok(log)
}

pub fn run_plan(ctx: &CardContext, p: &Plan) -> Result<PlanRun, SubError> {
    let log = tables(ctx, p)?;
    let applications = plan_facts(&log);
    let lc = p.lambda_c().expect("checked").clone();
    let mut db = tukeycalc::base_facts(ctx, Some(lc))?;
    for f in &applications {
        db.add(f.lhs.clone(), f.rhs.clone(), f.rule.clone(), vec![]);
    }
    let db = tukeycalc::close(db)?;
    let constellation = tukeycalc::constellation(&db)?;
    Ok(PlanRun { log, db, constellation, applications })
}

pub const CICHON_MAX_SOURCE: &str = "# Cardinals for the submodel construction of Cichon's maximum.
context {
  card lambda1b regular;
  card lambda2b regular;
  card lambda3b regular;
  card lambda4b regular;
  card lambda4d regular;
  card lambda3d regular;
  card lambda2d regular;
  card lambda1d regular;
  card lambdac;
  card theta1m regular;
  card theta1mp regular;
  card theta1 regular;
  card theta2m regular;
  card theta2mp regular;
  card theta2 regular;
  card theta3m regular;
  card theta3mp regular;
  card theta3 regular;
  card theta4m regular;
  card theta4mp regular;
  card theta4 regular;
  card theta_inf regular;
  le aleph1 lambda1b;
  le lambda1b lambda2b;
  le lambda2b lambda3b;
  le lambda3b lambda4b;
  le lambda4b lambda4d;
  le lambda4d lambda3d;
  le lambda3d lambda2d;
  le lambda2d lambda1d;
  le lambda1d lambdac;
  lt lambdac theta1m;
  lt theta1m theta1;
  lt theta1 theta2m;
  lt theta2m theta2;
  lt theta2 theta3m;
  lt theta3m theta3;
  lt theta3 theta4m;
  lt theta4m theta4;
  lt theta4 theta_inf;
  le theta1mp theta1;
  le theta2mp theta2;
  le theta3mp theta3;
  le theta4mp theta4;
  assume succ(theta1m)=theta1mp;
  assume succ(theta2m)=theta2mp;
  assume succ(theta3m)=theta3mp;
  assume succ(theta4m)=theta4mp;
  assume pow(theta1,theta1m)=theta1;
  assume pow(theta2,theta2m)=theta2;
  assume pow(theta3,theta3m)=theta3;
  assume pow(theta4,theta4m)=theta4;
  assume pow_lt(theta1m,theta1m)=theta1m;
  assume pow_lt(theta2m,theta2m)=theta2m;
  assume pow_lt(theta3m,theta3m)=theta3m;
  assume pow_lt(theta4m,theta4m)=theta4m;
  assume pow(lambdac,aleph0)=lambdac;
  assume pow_lt(theta3,theta3)=theta3;
  assume inaccessible(theta4,aleph1);
  assume pow_lt(theta_inf,theta4)=theta_inf;
}
plan cichon_max {
  base gksmax(theta1,theta2,theta3,theta4,theta_inf);
  chain d 4 (lambda4d, succ(theta4m), theta4);
  chain b 4 (lambda4b, theta4m, theta4m);
  chain d 3 (lambda3d, succ(theta3m), theta3);
  chain b 3 (lambda3b, theta3m, theta3m);
  chain d 2 (lambda2d, succ(theta2m), theta2);
  chain b 2 (lambda2b, theta2m, theta2m);
  chain d 1 (lambda1d, succ(theta1m), theta1);
  chain b 1 (lambda1b, theta1m, theta1m);
  final (lambdac);
}
assign cichon_max {
  addN=lambda1b;
  covN=lambda2b;
  addM=lambda3b;
  b=lambda3b;
  covM=lambda4d;
  nonM=lambda4b;
  d=lambda3d;
  cofM=lambda3d;
  nonN=lambda2d;
  cofN=lambda1d;
  c=lambdac;
}
";

pub fn cichon_max_file() -> format::RecipeFile {
    format::parse(CICHON_MAX_SOURCE).expect("builtin plan parses")
}

pub fn cichon_max_context() -> CardContext {
    cichon_max_file().ctx
}

pub fn cichon_max_plan() -> Plan {
    cichon_max_file().plans.remove(0)
}
