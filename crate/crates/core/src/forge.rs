//! Finite support iteration recipes and the theorems that turn them into
//! Tukey facts. The theorems are trusted: only their hypotheses are checked.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::cardctx::{self, CardContext, CardError, CardinalName, OrdinalExpr};
use crate::format::{self, ParseError};
use crate::tukeycalc::{
    self, Atom, CalcError, Constellation, FactDB, RegeneratedRules, ReplayError, Rule, RuleFact, SysExpr,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForgeError {
    #[error("missing assumption `{assumption}` required by {theorem}")]
    MissingAssumption { assumption: String, theorem: String },
    #[error("{rule}: precondition failed: {reason}")]
    PreconditionFailed { rule: String, reason: String },
    #[error("invalid recipe: {0}")]
    Invalid(String),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Card(#[from] CardError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

fn missing(assumption: impl Into<String>, theorem: impl Into<String>) -> ForgeError {
    ForgeError::MissingAssumption { assumption: assumption.into(), theorem: theorem.into() }
}

fn precondition(rule: &str, reason: impl Into<String>) -> ForgeError {
    ForgeError::PreconditionFailed { rule: rule.into(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum IterandClass {
    Cohen,
    Random,
    EvDiff,
    Hechler,
    Loc,
    /// Subalgebras of random forcing of size below the parameter.
    RandomSub(CardinalName),
    HechlerSub(CardinalName),
    LocSub(CardinalName),
}

impl IterandClass {
    pub fn size_bound(&self) -> Option<&CardinalName> {
        match self {
            IterandClass::RandomSub(t) | IterandClass::HechlerSub(t) | IterandClass::LocSub(t) => Some(t),
            _ => None,
        }
    }

    /// Systems for which the class adds dominating reals over the whole
    /// intermediate model.
    pub fn adds_dominating(&self) -> Vec<SysExpr> {
        match self {
            IterandClass::Cohen => vec![SysExpr::atom(Atom::Mg).dual()],
            IterandClass::Random => vec![SysExpr::atom(Atom::Cn)],
            IterandClass::EvDiff => vec![SysExpr::atom(Atom::Mg)],
            IterandClass::Hechler => vec![SysExpr::atom(Atom::Baire)],
            IterandClass::Loc => vec![SysExpr::atom(Atom::Lc)],
            _ => vec![],
        }
    }

    /// Goodness catalog: pairs `(threshold, R)` meaning the class is
    /// `threshold`-`R`-good.
    pub fn goodness(&self, ctx: &CardContext) -> Vec<(CardinalName, Atom)> {
        let a1 = ctx.aleph1();
        let at = |atoms: &[Atom]| atoms.iter().map(|a| (a1.clone(), *a)).collect::<Vec<_>>();
        let sub = |t: &CardinalName, inherited: &[Atom]| {
            let mut v = at(inherited);
            v.extend(Atom::PRS.iter().map(|a| (t.clone(), *a)));
            v
        };
        match self {
            IterandClass::Cohen => at(&Atom::PRS),
            IterandClass::Random => at(&[Atom::Baire, Atom::Lc]),
            IterandClass::EvDiff => at(&[Atom::Baire, Atom::Cn, Atom::Lc]),
            IterandClass::Hechler => at(&[Atom::Cn, Atom::Lc]),
            IterandClass::Loc => vec![],
            IterandClass::RandomSub(t) => sub(t, &[Atom::Lc]),
            IterandClass::HechlerSub(t) => sub(t, &[Atom::Cn, Atom::Lc]),
            IterandClass::LocSub(t) => sub(t, &[]),
        }
    }

    /// Least catalogued threshold for `R`, if any.
    pub fn threshold(&self, ctx: &CardContext, r: Atom) -> Option<CardinalName> {
        let ts: Vec<CardinalName> = self.goodness(ctx).into_iter().filter(|(_, a)| *a == r).map(|(t, _)| t).collect();
        ctx.min_of(&ts).ok().flatten()
    }

    pub fn parse(ctx: &CardContext, text: &str) -> Option<IterandClass> {
        let text = text.trim();
        let (head, arg) = match text.split_once('(') {
            Some((h, rest)) => (h.trim(), Some(rest.strip_suffix(')')?.trim())),
            None => (text, None),
        };
        let name = |a: &str| {
            let c = CardinalName::new(a);
            ctx.contains(&c).then_some(c)
        };
        Some(match (head, arg) {
            ("Cohen", None) => IterandClass::Cohen,
            ("Random", None) => IterandClass::Random,
            ("EvDiff", None) => IterandClass::EvDiff,
            ("Hechler", None) => IterandClass::Hechler,
            ("Loc", None) => IterandClass::Loc,
            ("RandomSub", Some(a)) => IterandClass::RandomSub(name(a)?),
            ("HechlerSub", Some(a)) => IterandClass::HechlerSub(name(a)?),
            ("LocSub", Some(a)) => IterandClass::LocSub(name(a)?),
            _ => return None,
        })
    }
}

impl fmt::Display for IterandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IterandClass::Cohen => f.write_str("Cohen"),
            IterandClass::Random => f.write_str("Random"),
            IterandClass::EvDiff => f.write_str("EvDiff"),
            IterandClass::Hechler => f.write_str("Hechler"),
            IterandClass::Loc => f.write_str("Loc"),
            IterandClass::RandomSub(t) => write!(f, "RandomSub({t})"),
            IterandClass::HechlerSub(t) => write!(f, "HechlerSub({t})"),
            IterandClass::LocSub(t) => write!(f, "LocSub({t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bookkeeping {
    pub system: Atom,
    pub up_to: CardinalName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub class: IterandClass,
    pub cofinal: bool,
    pub bookkeeping: Option<Bookkeeping>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Recipe {
    pub name: String,
    pub length: OrdinalExpr,
    pub cc: CardinalName,
    pub slots: Vec<Slot>,
}

impl Recipe {
    pub fn cf_length(&self, ctx: &CardContext) -> Result<CardinalName, CardError> {
        cardctx::cf(ctx, &self.length)
    }

    pub fn card_length(&self, ctx: &CardContext) -> Result<CardinalName, CardError> {
        cardctx::card(ctx, &self.length)
    }
}

/// Check the recipe against the hypotheses of every theorem it triggers.
pub fn validate(ctx: &CardContext, r: &Recipe) -> Result<(), Vec<ForgeError>> {
    let mut out = Vec::new();
    if !ctx.is_uncountable_regular(&r.cc) {
        out.push(ForgeError::Invalid(format!("cc bound {} is not an uncountable regular cardinal", r.cc)));
    }
    if r.slots.is_empty() {
        out.push(ForgeError::Invalid(format!("recipe {} has no slots", r.name)));
    }
    let (cf, card) = match (r.cf_length(ctx), r.card_length(ctx)) {
        (Ok(cf), Ok(card)) => (cf, card),
        (Err(e), _) | (_, Err(e)) => {
            out.push(e.into());
            return Err(out);
        }
    };
    if !ctx.pow_holds(&card, &CardinalName::new(cardctx::ALEPH0)) {
        out.push(missing(format!("pow({card},aleph0)={card}"), "the forced value of the continuum"));
    }
    for s in &r.slots {
        if let Some(t) = s.class.size_bound() {
            if !ctx.is_uncountable_regular(t) {
                out.push(ForgeError::Invalid(format!("size bound of {} is not uncountable regular", s.class)));
            }
            if let Some(bk) = &s.bookkeeping {
                if &bk.up_to != t {
                    out.push(ForgeError::Invalid(format!(
                        "slot {} keeps books up to {}, expected {t}",
                        s.class, bk.up_to
                    )));
                }
            }
        }
        if s.cofinal {
            if s.class.adds_dominating().is_empty() {
                out.push(ForgeError::Invalid(format!("cofinal slot {} adds no dominating reals", s.class)));
            }
            if !ctx.le_known(&r.cc, &cf) {
                out.push(precondition("cofinal-dominating", format!("cc bound {} is not <= cf(length) = {cf}", r.cc)));
            }
            if !ctx.is_uncountable_regular(&cf) {
                out.push(precondition("cofinal-dominating", format!("cf(length) = {cf} is not uncountable")));
            }
        }
        if let Some(bk) = &s.bookkeeping {
            if !bk.system.is_prs() {
                out.push(ForgeError::Invalid(format!("bookkeeping system {} is not Polish", bk.system)));
            }
            if !ctx.le_known(&r.cc, &bk.up_to) || !ctx.le_known(&bk.up_to, &cf) {
                out.push(precondition("bookkeeping", format!("need {} <= {} <= cf(length) = {cf}", r.cc, bk.up_to)));
            }
            if !ctx.pow_lt_holds(&card, &bk.up_to) {
                out.push(missing(
                    format!("pow_lt({card},{})={card}", bk.up_to),
                    format!("bookkeeping of {} over sets of size < {}", bk.system, bk.up_to),
                ));
            }
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn length_sys(ctx: &CardContext, r: &Recipe) -> Result<SysExpr, ForgeError> {
    r.cf_length(ctx)?;
    Ok(SysExpr::ord(r.length.clone()))
}

/// A cofinal slot adding `R`-dominating reals puts `R` below the length;
/// for a Polish `R` this makes `R`, `Mg` and the length equivalent.
pub fn apply_fullgen(ctx: &CardContext, r: &Recipe, sys: &SysExpr) -> Result<Vec<RuleFact>, ForgeError> {
    const RULE: &str = "cofinal-dominating";
    if !r.slots.iter().any(|s| s.cofinal && s.class.adds_dominating().contains(sys)) {
        return Err(precondition(RULE, format!("no cofinal slot adds {sys}-dominating reals")));
    }
    let cf = r.cf_length(ctx)?;
    if !ctx.is_uncountable_regular(&cf) {
        return Err(precondition(RULE, format!("cf(length) = {cf} is not uncountable")));
    }
    if !ctx.le_known(&r.cc, &cf) {
        return Err(precondition(RULE, format!("cc bound {} is not <= cf(length) = {cf}", r.cc)));
    }
    let nu = length_sys(ctx, r)?;
    let rule = Rule::CofinalDominating(sys.clone());
    let mut out = vec![RuleFact::new(sys.clone(), nu.clone(), rule.clone())];
    if matches!(sys, SysExpr::Atom(a) if a.is_prs()) {
        let mg = SysExpr::atom(Atom::Mg);
        for (a, b) in [(&nu, sys), (sys, &mg), (&mg, sys), (&mg, &nu), (&nu, &mg)] {
            if a != b {
                out.push(RuleFact::new(a.clone(), b.clone(), rule.clone()));
            }
        }
    }
    Ok(out)
}

/// Cohen reals at limit stages put the length below `Mg`; a pure Cohen
/// recipe also puts `C[|length|]<aleph1` below `Mg`.
pub fn apply_cohen_limit(ctx: &CardContext, r: &Recipe) -> Result<Vec<RuleFact>, ForgeError> {
    if r.slots.is_empty() {
        return Err(precondition("cohen-limit", "the recipe has no iterands"));
    }
    let nu = length_sys(ctx, r)?;
    let mg = SysExpr::atom(Atom::Mg);
    let mut out = vec![RuleFact::new(nu, mg.clone(), Rule::CohenLimit)];
    if r.slots.iter().all(|s| s.class == IterandClass::Cohen) {
        let card = r.card_length(ctx)?;
        out.push(RuleFact::new(SysExpr::cideal(card, ctx.aleph1()), mg, Rule::CohenProduct));
    }
    Ok(out)
}

/// Bookkeeping over all sets of size `< theta` bounds `R` by
/// `C[|length|]<theta`.
pub fn apply_itsmallsets(
    ctx: &CardContext,
    r: &Recipe,
    sys: Atom,
    theta: &CardinalName,
) -> Result<Vec<RuleFact>, ForgeError> {
    const RULE: &str = "bookkeeping";
    let has = r.slots.iter().any(|s| s.bookkeeping.as_ref().is_some_and(|b| b.system == sys && &b.up_to == theta));
    if !has {
        return Err(precondition(RULE, format!("no slot keeps books for {sys} up to {theta}")));
    }
    if !ctx.is_uncountable_regular(theta) {
        return Err(precondition(RULE, format!("{theta} is not uncountable regular")));
    }
    let cf = r.cf_length(ctx)?;
    if !ctx.le_known(&r.cc, theta) || !ctx.le_known(theta, &cf) {
        return Err(precondition(RULE, format!("need {} <= {theta} <= cf(length) = {cf}", r.cc)));
    }
    let card = r.card_length(ctx)?;
    Ok(vec![RuleFact::new(
        SysExpr::atom(sys),
        SysExpr::cideal(card, theta.clone()),
        Rule::Bookkeeping(sys, theta.clone()),
    )])
}

/// If every iterand is `theta`-`R`-good, `C[|length|]<theta` and every
/// regular in `[theta, |length|]` end up below `R`.
pub fn apply_preeub(
    ctx: &CardContext,
    r: &Recipe,
    sys: Atom,
    theta: &CardinalName,
) -> Result<Vec<RuleFact>, ForgeError> {
    const RULE: &str = "goodness";
    if !sys.is_prs() {
        return Err(precondition(RULE, format!("{sys} is not Polish")));
    }
    if !ctx.is_uncountable_regular(theta) {
        return Err(precondition(RULE, format!("{theta} is not uncountable regular")));
    }
    for s in &r.slots {
        match s.class.threshold(ctx, sys) {
            Some(t) if ctx.le_known(&t, theta) => {}
            _ => return Err(precondition(RULE, format!("{} is not {theta}-{sys}-good", s.class))),
        }
    }
    if !ctx.le_known(&r.cc, theta) {
        return Err(precondition(RULE, format!("cc bound {} is not <= {theta}", r.cc)));
    }
    let card = r.card_length(ctx)?;
    if !ctx.le_known(theta, &card) {
        return Err(precondition(RULE, format!("length {} is shorter than {theta}", r.length)));
    }
    let rule = Rule::Goodness(sys, theta.clone());
    let target = SysExpr::atom(sys);
    let mut out = vec![RuleFact::new(SysExpr::cideal(card.clone(), theta.clone()), target.clone(), rule.clone())];
    for mu in ctx.regulars_between(theta, &card) {
        out.push(RuleFact::new(SysExpr::Card(mu), target.clone(), rule.clone()));
    }
    Ok(out)
}

/// The least `theta` at which goodness applies to `R`, if any.
pub fn least_good_threshold(ctx: &CardContext, r: &Recipe, sys: Atom) -> Option<CardinalName> {
    let mut ts = vec![r.cc.clone()];
    for s in &r.slots {
        ts.push(s.class.threshold(ctx, sys)?);
    }
    ctx.max_of(&ts).ok().flatten()
}

/// Every applicable rule application, in a fixed order.
pub fn rule_facts(ctx: &CardContext, r: &Recipe) -> Result<Vec<RuleFact>, ForgeError> {
    let mut out = Vec::new();
    let mut dominated: Vec<SysExpr> = Vec::new();
    for s in r.slots.iter().filter(|s| s.cofinal) {
        for d in s.class.adds_dominating() {
            if !dominated.contains(&d) {
                dominated.push(d);
            }
        }
    }
    for d in &dominated {
        out.extend(apply_fullgen(ctx, r, d)?);
    }
    out.extend(apply_cohen_limit(ctx, r)?);
    for s in &r.slots {
        if let Some(bk) = &s.bookkeeping {
            out.extend(apply_itsmallsets(ctx, r, bk.system, &bk.up_to)?);
        }
    }
    let card = r.card_length(ctx)?;
    for a in Atom::PRS {
        if let Some(theta) = least_good_threshold(ctx, r, a) {
            if ctx.le_known(&theta, &card) {
                out.extend(apply_preeub(ctx, r, a, &theta)?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DerivedModel {
    pub name: String,
    pub db: FactDB,
    pub constellation: Constellation,
    /// The external facts in the order they were asserted.
    pub applications: Vec<RuleFact>,
}

impl DerivedModel {
    /// Replay every fact of the database against regenerated rules.
    pub fn replay(&self, regenerated: Vec<RuleFact>) -> Result<(), ReplayError> {
        tukeycalc::replay_all(&self.db, &RegeneratedRules(regenerated))
    }

    pub fn trace(&self) -> String {
        self.db.facts().iter().map(|f| format!("{f}\n")).collect()
    }
}

/// Assert the given external facts on top of the base facts and close.
pub fn finish(
    ctx: &CardContext,
    name: &str,
    forced_c: CardinalName,
    applications: Vec<RuleFact>,
) -> Result<DerivedModel, ForgeError> {
    let mut db = tukeycalc::base_facts(ctx, Some(forced_c))?;
    for f in &applications {
        f.lhs.validate(ctx)?;
        f.rhs.validate(ctx)?;
        db.add(f.lhs.clone(), f.rhs.clone(), f.rule.clone(), vec![]);
    }
    let db = tukeycalc::close(db)?;
    let constellation = tukeycalc::constellation(&db)?;
    Ok(DerivedModel { name: name.to_string(), db, constellation, applications })
}

pub fn run_recipe(ctx: &CardContext, r: &Recipe) -> Result<DerivedModel, ForgeError> {
    validate(ctx, r).map_err(|mut v| v.remove(0))?;
    let facts = rule_facts(ctx, r)?;
    finish(ctx, &r.name, r.card_length(ctx)?, facts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxiomTheorem {
    Gksmax,
    Kst,
    Bcm,
}

impl AxiomTheorem {
    pub fn name(self) -> &'static str {
        match self {
            AxiomTheorem::Gksmax => "gksmax",
            AxiomTheorem::Kst => "kst",
            AxiomTheorem::Bcm => "bcm",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            AxiomTheorem::Gksmax | AxiomTheorem::Kst => 5,
            AxiomTheorem::Bcm => 7,
        }
    }

    pub fn from_name(s: &str) -> Option<AxiomTheorem> {
        [AxiomTheorem::Gksmax, AxiomTheorem::Kst, AxiomTheorem::Bcm].into_iter().find(|t| t.name() == s)
    }
}

/// A model asserted by a cited theorem with the given parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomSpec {
    pub name: String,
    pub theorem: AxiomTheorem,
    pub params: Vec<CardinalName>,
}

struct Hyp<'a> {
    ctx: &'a CardContext,
    theorem: &'a str,
}

impl Hyp<'_> {
    fn known(&self, c: &CardinalName) -> Result<(), ForgeError> {
        if self.ctx.contains(c) {
            Ok(())
        } else {
            Err(missing(format!("card {c}"), self.theorem))
        }
    }

    fn regular(&self, c: &CardinalName) -> Result<(), ForgeError> {
        self.known(c)?;
        if self.ctx.is_uncountable_regular(c) {
            Ok(())
        } else {
            Err(missing(format!("{c} uncountable regular"), self.theorem))
        }
    }

    fn le(&self, a: &CardinalName, b: &CardinalName) -> Result<(), ForgeError> {
        if self.ctx.le_known(a, b) {
            Ok(())
        } else {
            Err(missing(format!("le {a} {b}"), self.theorem))
        }
    }

    fn lt(&self, a: &CardinalName, b: &CardinalName) -> Result<(), ForgeError> {
        if self.ctx.lt_known(a, b) {
            Ok(())
        } else {
            Err(missing(format!("lt {a} {b}"), self.theorem))
        }
    }

    fn pow_lt(&self, a: &CardinalName, b: &CardinalName) -> Result<(), ForgeError> {
        if self.ctx.pow_lt_holds(a, b) {
            Ok(())
        } else {
            Err(missing(format!("pow_lt({a},{b})={a}"), self.theorem))
        }
    }

    fn inaccessible(&self, a: &CardinalName) -> Result<(), ForgeError> {
        if self.ctx.is_inaccessible(a, &self.ctx.aleph1()) {
            Ok(())
        } else {
            Err(missing(format!("inaccessible({a},aleph1)"), self.theorem))
        }
    }

    fn chain(&self, cs: &[CardinalName]) -> Result<(), ForgeError> {
        self.le(&self.ctx.aleph1(), &cs[0])?;
        cs.windows(2).try_for_each(|w| self.le(&w[0], &w[1]))
    }
}

/// Hypotheses of the left-side theorem with four regular parameters and a
/// top cardinal, as used both for the axiom model and the submodel base.
pub fn check_gksmax(ctx: &CardContext, p: &[CardinalName]) -> Result<(), ForgeError> {
    let h = Hyp { ctx, theorem: "gksmax" };
    if p.len() != 5 {
        return Err(ForgeError::Invalid(format!("gksmax takes 5 parameters, got {}", p.len())));
    }
    p.iter().try_for_each(|c| h.known(c))?;
    p[..4].iter().try_for_each(|c| h.regular(c))?;
    h.chain(&p[..4])?;
    h.pow_lt(&p[2], &p[2])?;
    h.inaccessible(&p[3])?;
    h.lt(&p[3], &p[4])?;
    h.pow_lt(&p[4], &p[3])
}

fn check_kst(ctx: &CardContext, p: &[CardinalName]) -> Result<(), ForgeError> {
    let h = Hyp { ctx, theorem: "kst" };
    p.iter().try_for_each(|c| h.known(c))?;
    p[..4].iter().try_for_each(|c| h.regular(c))?;
    h.chain(&p[..4])?;
    h.pow_lt(&p[1], &p[1])?;
    h.inaccessible(&p[2])?;
    h.inaccessible(&p[3])?;
    h.lt(&p[3], &p[4])?;
    h.pow_lt(&p[4], &p[3])
}

fn check_bcm(ctx: &CardContext, p: &[CardinalName]) -> Result<(), ForgeError> {
    let h = Hyp { ctx, theorem: "bcm" };
    p.iter().try_for_each(|c| h.known(c))?;
    p[..6].iter().try_for_each(|c| h.regular(c))?;
    h.chain(&p[..6])?;
    h.le(&p[5], &p[6])?;
    h.pow_lt(&p[6], &p[3])
}

fn equiv(out: &mut Vec<RuleFact>, a: SysExpr, b: SysExpr, rule: &Rule) {
    out.push(RuleFact::new(a.clone(), b.clone(), rule.clone()));
    out.push(RuleFact::new(b, a, rule.clone()));
}

/// The forced continuum and conclusion facts of an axiom model. Ground
/// model ideals `[X]<theta ∩ V` are entered as `[X]<theta`.
pub fn axiom_facts(ctx: &CardContext, spec: &AxiomSpec) -> Result<(CardinalName, Vec<RuleFact>), ForgeError> {
    let p = &spec.params;
    if p.len() != spec.theorem.arity() {
        return Err(ForgeError::Invalid(format!(
            "{} takes {} parameters, got {}",
            spec.theorem.name(),
            spec.theorem.arity(),
            p.len()
        )));
    }
    let rule = Rule::Axiom(spec.theorem.name().to_string());
    let r = |i: usize| SysExpr::atom(Atom::PRS[i - 1]);
    let mut out = Vec::new();
    match spec.theorem {
        AxiomTheorem::Gksmax => {
            check_gksmax(ctx, p)?;
            for i in 1..=4 {
                equiv(&mut out, r(i), SysExpr::cideal(p[4].clone(), p[i - 1].clone()), &rule);
                equiv(&mut out, r(i), SysExpr::ideal(p[4].clone(), p[i - 1].clone()), &rule);
            }
            Ok((p[4].clone(), out))
        }
        AxiomTheorem::Kst => {
            check_kst(ctx, p)?;
            for (i, k) in [(1, 0), (2, 2), (3, 1), (4, 3)] {
                equiv(&mut out, r(i), SysExpr::ideal(p[4].clone(), p[k].clone()), &rule);
            }
            Ok((p[4].clone(), out))
        }
        AxiomTheorem::Bcm => {
            check_bcm(ctx, p)?;
            for i in 1..=3 {
                equiv(&mut out, r(i), SysExpr::cideal(p[6].clone(), p[i].clone()), &rule);
                equiv(&mut out, r(i), SysExpr::ideal(p[6].clone(), p[i].clone()), &rule);
            }
            let (l4, l5) = (SysExpr::Card(p[4].clone()), SysExpr::Card(p[5].clone()));
            out.push(RuleFact::new(l4.clone(), r(4), rule.clone()));
            out.push(RuleFact::new(l5.clone(), r(4), rule.clone()));
            out.push(RuleFact::new(r(4), SysExpr::prod(vec![l5, l4]), rule.clone()));
            Ok((p[6].clone(), out))
        }
    }
}

pub fn axiom_model(ctx: &CardContext, spec: &AxiomSpec) -> Result<DerivedModel, ForgeError> {
    let (c, facts) = axiom_facts(ctx, spec)?;
    finish(ctx, &spec.name, c, facts)
}

/// Regenerate the external facts of a recipe or axiom model, for replay.
pub fn regenerate(ctx: &CardContext, model: &ModelRef) -> Result<Vec<RuleFact>, ForgeError> {
    match model {
        ModelRef::Recipe(r) => rule_facts(ctx, r),
        ModelRef::Axiom(a) => axiom_facts(ctx, a).map(|(_, f)| f),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelRef {
    Recipe(Recipe),
    Axiom(AxiomSpec),
}

impl ModelRef {
    pub fn name(&self) -> &str {
        match self {
            ModelRef::Recipe(r) => &r.name,
            ModelRef::Axiom(a) => &a.name,
        }
    }

    pub fn run(&self, ctx: &CardContext) -> Result<DerivedModel, ForgeError> {
        match self {
            ModelRef::Recipe(r) => run_recipe(ctx, r),
            ModelRef::Axiom(a) => axiom_model(ctx, a),
        }
    }
}

pub const WARMUPS: [&str; 5] = ["cohen", "random", "evdiff", "hechler", "loc"];
pub const THEOREMS: [&str; 4] = ["mod1", "mod2", "mod3", "mod5"];
pub const AXIOMS: [&str; 3] = ["gksmax", "kst", "bcm"];

const WARMUP_CONTEXT: &str = "context {
  card lambda regular;
  lt aleph1 lambda;
  assume pow(lambda,aleph0)=lambda;
}
";

/// File text of a builtin model: its own context and one recipe or model
/// block under the builtin's name.
pub fn builtin_source(name: &str) -> Option<String> {
    let warm = |class: &str| {
        format!("{WARMUP_CONTEXT}recipe {name} {{\n  length lambda;\n  cc aleph1;\n  slot {class} cofinal;\n}}\n")
    };
    let chain4 = "context {
  card lambda1 regular;
  card lambda2 regular;
  card lambda3 regular;
  card lambda4 regular;
  lt aleph1 lambda1;
  lt lambda1 lambda2;
  lt lambda2 lambda3;
  lt lambda3 lambda4;
";
    Some(match name {
        "cohen" => warm("Cohen"),
        "random" => warm("Random"),
        "evdiff" => warm("EvDiff"),
        "hechler" => warm("Hechler"),
        "loc" => warm("Loc"),
        "mod1" => format!(
            "{chain4}  card lambda5 regular;
  lt lambda4 lambda5;
  assume pow_lt(lambda5,lambda3)=lambda5;
}}
recipe mod1 {{
  length lambda5*lambda4;
  cc aleph1;
  slot EvDiff cofinal;
  slot LocSub(lambda1) bookkeeping Lc* upto lambda1;
  slot RandomSub(lambda2) bookkeeping Cn upto lambda2;
  slot HechlerSub(lambda3) bookkeeping w^w upto lambda3;
}}
"
        ),
        "mod2" => format!(
            "{chain4}  assume pow_lt(lambda4,lambda3)=lambda4;
}}
recipe mod2 {{
  length lambda4;
  cc aleph1;
  slot LocSub(lambda1) bookkeeping Lc* upto lambda1;
  slot RandomSub(lambda2) bookkeeping Cn upto lambda2;
  slot HechlerSub(lambda3) bookkeeping w^w upto lambda3;
}}
"
        ),
        "mod3" => format!(
            "{chain4}  assume pow_lt(lambda4,lambda2)=lambda4;
}}
recipe mod3 {{
  length lambda4*lambda3;
  cc aleph1;
  slot LocSub(lambda1) bookkeeping Lc* upto lambda1;
  slot HechlerSub(lambda2) bookkeeping w^w upto lambda2;
  slot Random cofinal;
}}
"
        ),
        "mod5" => format!(
            "{chain4}  assume pow_lt(lambda4,lambda2)=lambda4;
}}
recipe mod5 {{
  length lambda4*lambda3;
  cc aleph1;
  slot LocSub(lambda1) bookkeeping Lc* upto lambda1;
  slot RandomSub(lambda2) bookkeeping Cn upto lambda2;
  slot Hechler cofinal;
}}
"
        ),
        "gksmax" => format!(
            "{chain4}  card lambda5;
  lt lambda4 lambda5;
  assume pow_lt(lambda3,lambda3)=lambda3;
  assume inaccessible(lambda4,aleph1);
  assume pow_lt(lambda5,lambda4)=lambda5;
}}
model gksmax {{
  axiom gksmax(lambda1,lambda2,lambda3,lambda4,lambda5);
}}
"
        ),
        "kst" => format!(
            "{chain4}  card lambda5;
  lt lambda4 lambda5;
  assume pow_lt(lambda2,lambda2)=lambda2;
  assume inaccessible(lambda3,aleph1);
  assume inaccessible(lambda4,aleph1);
  assume pow_lt(lambda5,lambda4)=lambda5;
}}
model kst {{
  axiom kst(lambda1,lambda2,lambda3,lambda4,lambda5);
}}
"
        ),
        "bcm" => "context {
  card lambda0 regular;
  card lambda1 regular;
  card lambda2 regular;
  card lambda3 regular;
  card lambda4 regular;
  card lambda5 regular;
  card lambda6;
  le aleph1 lambda0;
  lt lambda0 lambda1;
  lt lambda1 lambda2;
  lt lambda2 lambda3;
  lt lambda3 lambda4;
  lt lambda4 lambda5;
  lt lambda5 lambda6;
  assume pow_lt(lambda6,lambda3)=lambda6;
}
model bcm {
  axiom bcm(lambda0,lambda1,lambda2,lambda3,lambda4,lambda5,lambda6);
}
"
        .to_string(),
        _ => return None,
    })
}

/// Parse a builtin and return its context and model.
pub fn builtin(name: &str) -> Result<(CardContext, ModelRef), ForgeError> {
    let src = builtin_source(name).ok_or_else(|| ForgeError::Invalid(format!("no builtin named {name}")))?;
    let file = format::parse(&src)?;
    let model = file.model(name).ok_or_else(|| ForgeError::Invalid(format!("builtin {name} has no model block")))?;
    Ok((file.ctx.clone(), model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tukeycalc::Entry;

    fn n(s: &str) -> CardinalName {
        s.into()
    }

    fn pinned(m: &DerivedModel, e: Entry) -> String {
        m.constellation.get(e).pinned().map(|c| c.to_string()).unwrap_or_else(|| m.constellation.get(e).to_string())
    }

    fn run(name: &str) -> (CardContext, DerivedModel) {
        let (ctx, model) = builtin(name).unwrap();
        let m = model.run(&ctx).unwrap();
        (ctx, m)
    }

    #[test]
    fn loc_fullgen_pins_everything() {
        let (ctx, model) = builtin("loc").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        let facts = apply_fullgen(&ctx, &r, &SysExpr::atom(Atom::Lc)).unwrap();
        assert!(facts.contains(&RuleFact::new(
            SysExpr::atom(Atom::Lc),
            SysExpr::card("lambda"),
            Rule::CofinalDominating(SysExpr::atom(Atom::Lc))
        )));
        let m = run_recipe(&ctx, &r).unwrap();
        assert!(m.db.equivalent(&SysExpr::atom(Atom::Lc), &SysExpr::card("lambda")));
        assert!(m.db.equivalent(&SysExpr::atom(Atom::Mg), &SysExpr::card("lambda")));
        for e in Entry::ALL {
            assert_eq!(pinned(&m, e), "lambda", "{e}");
        }
    }

    #[test]
    fn fullgen_needs_cofinal_slot() {
        let (ctx, model) = builtin("mod2").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        assert!(matches!(
            apply_fullgen(&ctx, &r, &SysExpr::atom(Atom::Baire)),
            Err(ForgeError::PreconditionFailed { .. })
        ));
    }

    #[test]
    fn cohen_limit_rejects_empty_recipe() {
        let (ctx, model) = builtin("cohen").unwrap();
        let ModelRef::Recipe(mut r) = model else { panic!() };
        assert_eq!(apply_cohen_limit(&ctx, &r).unwrap().len(), 2);
        r.slots.clear();
        assert!(matches!(apply_cohen_limit(&ctx, &r), Err(ForgeError::PreconditionFailed { .. })));
    }

    #[test]
    fn bookkeeping_examples() {
        let (ctx, model) = builtin("mod1").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        let f = apply_itsmallsets(&ctx, &r, Atom::Lc, &n("lambda1")).unwrap();
        assert_eq!((&f[0].lhs, &f[0].rhs), (&SysExpr::atom(Atom::Lc), &SysExpr::cideal("lambda5", "lambda1")));
        let f = apply_itsmallsets(&ctx, &r, Atom::Baire, &n("lambda3")).unwrap();
        assert_eq!(f[0].rhs, SysExpr::cideal("lambda5", "lambda3"));
        assert!(apply_itsmallsets(&ctx, &r, Atom::Mg, &n("lambda3")).is_err());
    }

    #[test]
    fn goodness_examples() {
        let (ctx, model) = builtin("mod1").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        let f = apply_preeub(&ctx, &r, Atom::Cn, &n("lambda2")).unwrap();
        assert_eq!((&f[0].lhs, &f[0].rhs), (&SysExpr::cideal("lambda5", "lambda2"), &SysExpr::atom(Atom::Cn)));
        // RandomSub(lambda2) is not lambda1-Cn-good
        assert!(apply_preeub(&ctx, &r, Atom::Cn, &n("lambda1")).is_err());
        // EvDiff is not Mg-good
        assert!(apply_preeub(&ctx, &r, Atom::Mg, &n("lambda4")).is_err());

        let (ctx, model) = builtin("random").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        let f = apply_preeub(&ctx, &r, Atom::Baire, &n("aleph1")).unwrap();
        assert_eq!(f[0].lhs, SysExpr::cideal("lambda", "aleph1"));

        let (ctx, model) = builtin("hechler").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        let err = apply_preeub(&ctx, &r, Atom::Baire, &n("lambda")).unwrap_err();
        assert!(err.to_string().contains("Hechler"), "{err}");
    }

    #[test]
    fn mod1_needs_pow_lt() {
        let (ctx, model) = builtin("mod1").unwrap();
        let ModelRef::Recipe(r) = model else { panic!() };
        validate(&ctx, &r).unwrap();
        let decls: Vec<_> =
            ctx.declarations().iter().filter(|d| !matches!(d, cardctx::Declaration::Assume(_))).cloned().collect();
        let weak = cardctx::build_context(&decls).unwrap();
        let errs = validate(&weak, &r).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e,
            ForgeError::MissingAssumption { assumption, .. } if assumption == "pow_lt(lambda5,lambda3)=lambda5")));
    }

    #[test]
    fn cc_above_cofinality_is_diagnosed() {
        let (ctx, model) = builtin("mod1").unwrap();
        let ModelRef::Recipe(mut r) = model else { panic!() };
        r.cc = n("lambda5");
        let errs = validate(&ctx, &r).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ForgeError::PreconditionFailed { rule, .. } if rule == "cofinal-dominating")));
    }

    #[test]
    fn evdiff_values() {
        let (_, m) = run("evdiff");
        assert!(m.db.equivalent(&SysExpr::atom(Atom::Mg), &SysExpr::card("lambda")));
        for e in [Entry::CovN, Entry::B, Entry::AddN, Entry::AddM] {
            assert_eq!(pinned(&m, e), "aleph1", "{e}");
        }
        for e in [Entry::D, Entry::NonN, Entry::NonM, Entry::CovM, Entry::CofN, Entry::CofM] {
            assert_eq!(pinned(&m, e), "lambda", "{e}");
        }
    }

    #[test]
    fn kst_requires_inaccessibility() {
        let (ctx, model) = builtin("kst").unwrap();
        let ModelRef::Axiom(a) = model else { panic!() };
        axiom_model(&ctx, &a).unwrap();
        let decls: Vec<_> = ctx
            .declarations()
            .iter()
            .filter(|d| !matches!(d, cardctx::Declaration::Assume(cardctx::Assumption::Inaccessible { .. })))
            .cloned()
            .collect();
        let weak = cardctx::build_context(&decls).unwrap();
        assert!(matches!(axiom_model(&weak, &a), Err(ForgeError::MissingAssumption { .. })));
    }

    #[test]
    fn every_builtin_replays() {
        for name in WARMUPS.iter().chain(&THEOREMS).chain(&AXIOMS) {
            let (ctx, model) = builtin(name).unwrap();
            let m = model.run(&ctx).unwrap();
            m.replay(regenerate(&ctx, &model).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
