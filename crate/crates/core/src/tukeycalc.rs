//! Symbolic relational systems, Tukey facts with provenance, closure under
//! the structural rules, and evaluation of Cichoń's diagram.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::cardctx::{self, CardContext, CardError, CardinalName, OrdinalExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Atom {
    /// Localization, Tukey equivalent to the null ideal.
    Lc,
    /// Tukey equivalent to the dual of the null covering system.
    Cn,
    /// `⟨ω^ω, ω^ω, ≤*⟩`
    Baire,
    /// Tukey equivalent to the meager covering system.
    Mg,
    Null,
    NullCov,
    Meager,
    MeagerCov,
}

impl Atom {
    pub const PRS: [Atom; 4] = [Atom::Lc, Atom::Cn, Atom::Baire, Atom::Mg];

    pub fn is_prs(self) -> bool {
        Atom::PRS.contains(&self)
    }

    pub fn spelling(self) -> &'static str {
        match self {
            Atom::Lc => "Lc*",
            Atom::Cn => "Cn",
            Atom::Baire => "w^w",
            Atom::Mg => "Mg",
            Atom::Null => "Null",
            Atom::NullCov => "C(Null)",
            Atom::Meager => "Meager",
            Atom::MeagerCov => "C(Meager)",
        }
    }

    pub fn from_spelling(s: &str) -> Option<Atom> {
        [Atom::Lc, Atom::Cn, Atom::Baire, Atom::Mg, Atom::Null, Atom::NullCov, Atom::Meager, Atom::MeagerCov]
            .into_iter()
            .find(|a| a.spelling() == s)
    }

    /// Index `i` of `R_i` for the four Prs atoms.
    pub fn prs_index(self) -> Option<usize> {
        Atom::PRS.iter().position(|&a| a == self).map(|i| i + 1)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.spelling())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SysExpr {
    Atom(Atom),
    /// `C_{[X]^{<θ}}` with `|X| = index`.
    CIdeal {
        index: CardinalName,
        theta: CardinalName,
    },
    /// `[X]^{<θ}` ordered by inclusion.
    Ideal {
        index: CardinalName,
        theta: CardinalName,
    },
    /// An ordinal with at least two factors.
    Ord(OrdinalExpr),
    /// A regular cardinal as a linear order.
    Card(CardinalName),
    Prod(Vec<SysExpr>),
    Dual(Box<SysExpr>),
}

impl SysExpr {
    pub fn atom(a: Atom) -> SysExpr {
        SysExpr::Atom(a)
    }

    pub fn card(c: impl Into<CardinalName>) -> SysExpr {
        SysExpr::Card(c.into())
    }

    pub fn cideal(index: impl Into<CardinalName>, theta: impl Into<CardinalName>) -> SysExpr {
        SysExpr::CIdeal { index: index.into(), theta: theta.into() }
    }

    pub fn ideal(index: impl Into<CardinalName>, theta: impl Into<CardinalName>) -> SysExpr {
        SysExpr::Ideal { index: index.into(), theta: theta.into() }
    }

    pub fn ord(e: OrdinalExpr) -> SysExpr {
        if e.factors().len() == 1 {
            SysExpr::Card(e.factors()[0].clone())
        } else {
            SysExpr::Ord(e)
        }
    }

    pub fn prod(parts: Vec<SysExpr>) -> SysExpr {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                SysExpr::Prod(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().expect("one element")
        } else {
            SysExpr::Prod(flat)
        }
    }

    /// The dual, with double duals cancelled.
    pub fn dual(self) -> SysExpr {
        match self {
            SysExpr::Dual(inner) => *inner,
            other => SysExpr::Dual(Box::new(other)),
        }
    }

    /// Split into the non-dual part and whether a dual was applied.
    pub fn strip_dual(&self) -> (&SysExpr, bool) {
        match self {
            SysExpr::Dual(inner) => (inner, true),
            other => (other, false),
        }
    }

    /// Check the structural invariants against a context.
    pub fn validate(&self, ctx: &CardContext) -> Result<(), CalcError> {
        match self {
            SysExpr::Atom(_) => Ok(()),
            SysExpr::CIdeal { index, theta } | SysExpr::Ideal { index, theta } => {
                if !ctx.le_known(theta, index) {
                    ctx.idx(theta)?;
                    ctx.idx(index)?;
                    return Err(CalcError::BadExpr(format!("{self}: need {theta} <= {index}")));
                }
                Ok(())
            }
            SysExpr::Ord(e) => {
                cardctx::cf(ctx, e)?;
                Ok(())
            }
            SysExpr::Card(c) => {
                if ctx.is_regular(c)? {
                    Ok(())
                } else {
                    Err(CalcError::BadExpr(format!("{c} is not regular")))
                }
            }
            SysExpr::Prod(ps) => ps.iter().try_for_each(|p| p.validate(ctx)),
            SysExpr::Dual(e) => e.validate(ctx),
        }
    }

    pub fn parse(ctx: &CardContext, text: &str) -> Result<SysExpr, CalcError> {
        let mut p = ExprParser { s: text.as_bytes(), pos: 0, ctx };
        let e = p.expr()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for SysExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SysExpr::Atom(a) => write!(f, "{a}"),
            SysExpr::CIdeal { index, theta } => write!(f, "C[{index}]<{theta}"),
            SysExpr::Ideal { index, theta } => write!(f, "[{index}]<{theta}"),
            SysExpr::Ord(e) => write!(f, "{e}"),
            SysExpr::Card(c) => write!(f, "{c}"),
            SysExpr::Prod(ps) => {
                f.write_str("(")?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" x ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            SysExpr::Dual(e) => write!(f, "dual({e})"),
        }
    }
}

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
    ctx: &'a CardContext,
}

impl ExprParser<'_> {
    fn err(&self, msg: &str) -> CalcError {
        CalcError::BadExpr(format!("{msg} at column {}", self.pos + 1))
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.ws();
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), CalcError> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{lit}`")))
        }
    }

    fn ident(&mut self) -> Result<String, CalcError> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && is_ident_byte(self.s[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a name"));
        }
        Ok(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
    }

    fn name(&mut self) -> Result<CardinalName, CalcError> {
        let n = CardinalName::new(self.ident()?);
        self.ctx.idx(&n)?;
        Ok(n)
    }

    fn expr(&mut self) -> Result<SysExpr, CalcError> {
        for lit in ["Lc*", "w^w", "C(Null)", "C(Meager)"] {
            if self.eat(lit) {
                return Ok(SysExpr::Atom(Atom::from_spelling(lit).expect("atom")));
            }
        }
        if self.eat("dual(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e.dual());
        }
        if self.eat("C[") {
            let index = self.name()?;
            self.expect("]<")?;
            let theta = self.name()?;
            return Ok(SysExpr::CIdeal { index, theta });
        }
        if self.eat("[") {
            let index = self.name()?;
            self.expect("]<")?;
            let theta = self.name()?;
            return Ok(SysExpr::Ideal { index, theta });
        }
        if self.eat("(") {
            let mut parts = vec![self.expr()?];
            loop {
                if self.eat(")") {
                    break;
                }
                self.ws();
                if self.pos + 1 < self.s.len() && self.s[self.pos] == b'x' && !is_ident_byte(self.s[self.pos + 1]) {
                    self.pos += 1;
                    parts.push(self.expr()?);
                } else {
                    return Err(self.err("expected ` x ` or `)`"));
                }
            }
            return Ok(if parts.len() == 1 { parts.pop().expect("one") } else { SysExpr::Prod(parts) });
        }
        let first = self.ident()?;
        if let Some(a) = Atom::from_spelling(&first) {
            return Ok(SysExpr::Atom(a));
        }
        let first = CardinalName::new(first);
        self.ctx.idx(&first)?;
        let mut factors = vec![first];
        while self.eat("*") {
            factors.push(self.name()?);
        }
        Ok(SysExpr::ord(OrdinalExpr::new(self.ctx, factors)?))
    }
}

pub fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'\''
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error(transparent)]
    Card(#[from] CardError),
    #[error("bad expression: {0}")]
    BadExpr(String),
    #[error("expression universe exceeded {0} nodes")]
    DivergentUniverse(usize),
    #[error("inconsistent bounds for {what}: lower {lo} exceeds upper {hi}")]
    InconsistentBounds { what: String, lo: CardinalName, hi: CardinalName },
    #[error("assignment is missing entries: {0}")]
    MissingEntries(String),
}

pub type FactId = usize;

/// The inference rule behind a fact. Rules with parameters carry what is
/// needed to regenerate their conclusions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    Base,
    Transitivity,
    Duality,
    ProductProjection,
    RegularBelowIdeal,
    IdealCollapse,
    TrivialIdeal,
    SmallIdealMonotone,
    OrdinalCofinality,
    CofinalDominating(SysExpr),
    CohenLimit,
    CohenProduct,
    Bookkeeping(Atom, CardinalName),
    Goodness(Atom, CardinalName),
    Axiom(String),
    RestrictionProduct(usize),
    RestrictionRegular(usize),
}

impl Rule {
    /// Rules whose conclusions come from outside the closure: recipe
    /// theorems, axiom models and the submodel engine.
    pub fn is_external(&self) -> bool {
        matches!(
            self,
            Rule::CofinalDominating(_)
                | Rule::CohenLimit
                | Rule::CohenProduct
                | Rule::Bookkeeping(..)
                | Rule::Goodness(..)
                | Rule::Axiom(_)
                | Rule::RestrictionProduct(_)
                | Rule::RestrictionRegular(_)
        )
    }

    pub fn citation(&self) -> &'static str {
        match self {
            Rule::Base => "ZFC Tukey connections behind Cichoń's diagram",
            Rule::Transitivity => "composition of Tukey connections",
            Rule::Duality => "a connection R -> R' yields R'^perp -> R^perp",
            Rule::ProductProjection => "each factor is below the product",
            Rule::RegularBelowIdeal => "regular mu in [theta, lambda] is below C[lambda]<theta",
            Rule::IdealCollapse => "C[X]<theta and [X]<theta agree when |X|^{<theta} = |X|",
            Rule::TrivialIdeal => "C_I and its dual are below I",
            Rule::SmallIdealMonotone => "C[X]<theta is below C[X']<theta' when theta' <= theta <= |X| <= |X'|",
            Rule::OrdinalCofinality => "a limit ordinal is equivalent to its cofinality",
            Rule::CofinalDominating(_) => "adding R-dominating reals cofinally often bounds R by the length",
            Rule::CohenLimit => "FS iterations add Cohen reals at limits, so the length is below Mg",
            Rule::CohenProduct => "a product of Cohen reals over I puts C[I]<aleph1 below Mg",
            Rule::Bookkeeping(..) => "dominating reals over every small set give R below C[c]<theta",
            Rule::Goodness(..) => "theta-R-good iterands preserve C[nu]<theta below R",
            Rule::Axiom(_) => "conclusion of a cited consistency theorem",
            Rule::RestrictionProduct(_) => {
                "restriction to the intersected models is below the product of chain lengths"
            }
            Rule::RestrictionRegular(_) => "regular cardinals below the restricted system",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Base => f.write_str("base"),
            Rule::Transitivity => f.write_str("transitivity"),
            Rule::Duality => f.write_str("duality"),
            Rule::ProductProjection => f.write_str("product-projection"),
            Rule::RegularBelowIdeal => f.write_str("regular-below-ideal"),
            Rule::IdealCollapse => f.write_str("ideal-collapse"),
            Rule::TrivialIdeal => f.write_str("trivial-ideal"),
            Rule::SmallIdealMonotone => f.write_str("small-ideal-monotone"),
            Rule::OrdinalCofinality => f.write_str("ordinal-cofinality"),
            Rule::CofinalDominating(r) => write!(f, "cofinal-dominating({r})"),
            Rule::CohenLimit => f.write_str("cohen-limit"),
            Rule::CohenProduct => f.write_str("cohen-product"),
            Rule::Bookkeeping(a, t) => write!(f, "bookkeeping({a},{t})"),
            Rule::Goodness(a, t) => write!(f, "goodness({a},{t})"),
            Rule::Axiom(m) => write!(f, "axiom({m})"),
            Rule::RestrictionProduct(i) => write!(f, "restriction-product({i})"),
            Rule::RestrictionRegular(i) => write!(f, "restriction-regular({i})"),
        }
    }
}

impl Rule {
    pub fn parse(ctx: &CardContext, text: &str) -> Result<Rule, CalcError> {
        let text = text.trim();
        let (head, args) = match text.find('(') {
            Some(i) if text.ends_with(')') => (&text[..i], Some(&text[i + 1..text.len() - 1])),
            _ => (text, None),
        };
        let bad = || CalcError::BadExpr(format!("unknown rule `{text}`"));
        let two = |a: &str| -> Result<(Atom, CardinalName), CalcError> {
            let (r, t) = a.rsplit_once(',').ok_or_else(bad)?;
            let atom = Atom::from_spelling(r.trim()).ok_or_else(bad)?;
            let theta = CardinalName::new(t.trim());
            ctx.idx(&theta)?;
            Ok((atom, theta))
        };
        let index = |a: &str| a.trim().parse::<usize>().map_err(|_| bad());
        Ok(match (head, args) {
            ("base", None) => Rule::Base,
            ("transitivity", None) => Rule::Transitivity,
            ("duality", None) => Rule::Duality,
            ("product-projection", None) => Rule::ProductProjection,
            ("regular-below-ideal", None) => Rule::RegularBelowIdeal,
            ("ideal-collapse", None) => Rule::IdealCollapse,
            ("trivial-ideal", None) => Rule::TrivialIdeal,
            ("small-ideal-monotone", None) => Rule::SmallIdealMonotone,
            ("ordinal-cofinality", None) => Rule::OrdinalCofinality,
            ("cohen-limit", None) => Rule::CohenLimit,
            ("cohen-product", None) => Rule::CohenProduct,
            ("cofinal-dominating", Some(a)) => Rule::CofinalDominating(SysExpr::parse(ctx, a)?),
            ("bookkeeping", Some(a)) => {
                let (r, t) = two(a)?;
                Rule::Bookkeeping(r, t)
            }
            ("goodness", Some(a)) => {
                let (r, t) = two(a)?;
                Rule::Goodness(r, t)
            }
            ("axiom", Some(a)) => Rule::Axiom(a.trim().to_string()),
            ("restriction-product", Some(a)) => Rule::RestrictionProduct(index(a)?),
            ("restriction-regular", Some(a)) => Rule::RestrictionRegular(index(a)?),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Justification {
    pub rule: Rule,
    pub premises: Vec<FactId>,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TukeyFact {
    pub id: FactId,
    pub lhs: SysExpr,
    pub rhs: SysExpr,
    pub justification: Justification,
}

impl fmt::Display for TukeyFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let premises = if self.justification.premises.is_empty() {
            "-".to_string()
        } else {
            self.justification.premises.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        };
        write!(
            f,
            "#{} {} <= {}  [{}; {}; \"{}\"]",
            self.id, self.lhs, self.rhs, self.justification.rule, premises, self.justification.citation
        )
    }
}

pub const DEFAULT_UNIVERSE_LIMIT: usize = 5000;

#[derive(Debug, Clone)]
pub struct FactDB {
    ctx: CardContext,
    forced_c: Option<CardinalName>,
    facts: Vec<TukeyFact>,
    index: HashMap<(SysExpr, SysExpr), FactId>,
    closed: bool,
    pub universe_limit: usize,
}

impl FactDB {
    pub fn empty(ctx: &CardContext, forced_c: Option<CardinalName>) -> FactDB {
        FactDB {
            ctx: ctx.clone(),
            forced_c,
            facts: Vec::new(),
            index: HashMap::new(),
            closed: false,
            universe_limit: DEFAULT_UNIVERSE_LIMIT,
        }
    }

    pub fn ctx(&self) -> &CardContext {
        &self.ctx
    }

    pub fn forced_c(&self) -> Option<&CardinalName> {
        self.forced_c.as_ref()
    }

    /// The name standing for the continuum in this database.
    pub fn c_top(&self) -> CardinalName {
        self.forced_c.clone().unwrap_or_else(|| self.ctx.continuum())
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn facts(&self) -> &[TukeyFact] {
        &self.facts
    }

    pub fn get(&self, id: FactId) -> Option<&TukeyFact> {
        self.facts.get(id)
    }

    /// Insert a fact; reflexive and already known facts are skipped.
    pub fn add(&mut self, lhs: SysExpr, rhs: SysExpr, rule: Rule, premises: Vec<FactId>) -> Option<FactId> {
        if lhs == rhs {
            return None;
        }
        let key = (lhs, rhs);
        if self.index.contains_key(&key) {
            return None;
        }
        let id = self.facts.len();
        let citation = rule.citation().to_string();
        self.index.insert(key.clone(), id);
        self.facts.push(TukeyFact {
            id,
            lhs: key.0,
            rhs: key.1,
            justification: Justification { rule, premises, citation },
        });
        self.closed = false;
        Some(id)
    }

    pub fn lookup(&self, lhs: &SysExpr, rhs: &SysExpr) -> Option<FactId> {
        self.index.get(&(lhs.clone(), rhs.clone())).copied()
    }

    pub fn holds(&self, lhs: &SysExpr, rhs: &SysExpr) -> bool {
        lhs == rhs || self.lookup(lhs, rhs).is_some()
    }

    pub fn equivalent(&self, a: &SysExpr, b: &SysExpr) -> bool {
        self.holds(a, b) && self.holds(b, a)
    }

    /// The set of `(lhs, rhs)` pairs, for comparing databases regardless of
    /// derivation order.
    pub fn pair_set(&self) -> BTreeSet<(SysExpr, SysExpr)> {
        self.facts.iter().map(|f| (f.lhs.clone(), f.rhs.clone())).collect()
    }
}

fn base_edges(c_ideal: &SysExpr) -> Vec<(SysExpr, SysExpr)> {
    use Atom::*;
    let a = SysExpr::Atom;
    let d = |x: Atom| SysExpr::Atom(x).dual();
    vec![
        (c_ideal.clone().dual(), d(Null)),
        (d(Null), a(NullCov)),
        (a(NullCov), d(MeagerCov)),
        (d(MeagerCov), a(Meager)),
        (a(Meager), a(Null)),
        (a(Null), c_ideal.clone()),
        (d(Null), d(Meager)),
        (d(Meager), a(MeagerCov)),
        (a(MeagerCov), d(NullCov)),
        (d(NullCov), a(Null)),
        (d(Meager), d(Baire)),
        (d(Baire), d(MeagerCov)),
        (a(MeagerCov), a(Baire)),
        (a(Baire), a(Meager)),
        (d(Baire), a(Baire)),
        // the Prs atoms and their classical counterparts
        (a(Mg), a(MeagerCov)),
        (a(MeagerCov), a(Mg)),
        (a(Cn), d(NullCov)),
        (d(NullCov), a(Cn)),
        (a(Lc), a(Null)),
        (a(Null), a(Lc)),
        // C_I and its dual below I
        (a(NullCov), a(Null)),
        (d(NullCov), a(Null)),
        (a(MeagerCov), a(Meager)),
        (d(MeagerCov), a(Meager)),
        // every Prs is above the meager covering system
        (a(MeagerCov), a(Lc)),
        (a(MeagerCov), a(Cn)),
        (a(MeagerCov), a(Baire)),
        (a(MeagerCov), a(Mg)),
    ]
}

/// The diagram's ZFC facts, with the continuum rendered as `forced_c`
/// when one is given.
pub fn base_facts(ctx: &CardContext, forced_c: Option<CardinalName>) -> Result<FactDB, CalcError> {
    if let Some(c) = &forced_c {
        if !ctx.le_known(&ctx.aleph1(), c) {
            ctx.idx(c)?;
            return Err(CalcError::BadExpr(format!("forced continuum {c} is not known to be >= aleph1")));
        }
    }
    let mut db = FactDB::empty(ctx, forced_c);
    let top = SysExpr::cideal(db.c_top(), ctx.aleph1());
    for (l, r) in base_edges(&top) {
        db.add(l, r, Rule::Base, vec![]);
    }
    Ok(db)
}

/// Is `(lhs, rhs)` one of the base facts for this continuum?
pub fn is_base_fact(ctx: &CardContext, c_top: &CardinalName, lhs: &SysExpr, rhs: &SysExpr) -> bool {
    let top = SysExpr::cideal(c_top.clone(), ctx.aleph1());
    base_edges(&top).iter().any(|(l, r)| l == lhs && r == rhs)
}

fn subexprs(e: &SysExpr, out: &mut BTreeSet<SysExpr>) {
    if !out.insert(e.clone()) {
        return;
    }
    out.insert(e.clone().dual());
    match e {
        SysExpr::Prod(ps) => ps.iter().for_each(|p| subexprs(p, out)),
        SysExpr::Dual(inner) => subexprs(inner, out),
        _ => {}
    }
}

/// Facts with no premises that a rule produces for a universe node.
fn node_facts(ctx: &CardContext, e: &SysExpr) -> Vec<(SysExpr, SysExpr, Rule)> {
    let mut out = Vec::new();
    match e {
        SysExpr::Prod(ps) => {
            for p in ps {
                out.push((p.clone(), e.clone(), Rule::ProductProjection));
            }
        }
        SysExpr::CIdeal { index, theta } => {
            for mu in ctx.regulars_between(theta, index) {
                out.push((SysExpr::Card(mu), e.clone(), Rule::RegularBelowIdeal));
            }
            let ideal = SysExpr::ideal(index.clone(), theta.clone());
            out.push((e.clone(), ideal.clone(), Rule::TrivialIdeal));
            out.push((e.clone().dual(), ideal.clone(), Rule::TrivialIdeal));
            if ctx.is_regular(theta).unwrap_or(false) && ctx.pow_lt_holds(index, theta) {
                out.push((ideal, e.clone(), Rule::IdealCollapse));
            }
        }
        SysExpr::Ideal { index, theta } => {
            let c = SysExpr::cideal(index.clone(), theta.clone());
            out.push((c.clone(), e.clone(), Rule::TrivialIdeal));
            out.push((c.clone().dual(), e.clone(), Rule::TrivialIdeal));
            if ctx.is_regular(theta).unwrap_or(false) && ctx.pow_lt_holds(index, theta) {
                out.push((e.clone(), c, Rule::IdealCollapse));
            }
        }
        SysExpr::Ord(o) => {
            if let Ok(cf) = cardctx::cf(ctx, o) {
                out.push((e.clone(), SysExpr::Card(cf.clone()), Rule::OrdinalCofinality));
                out.push((SysExpr::Card(cf), e.clone(), Rule::OrdinalCofinality));
            }
        }
        _ => {}
    }
    out
}

fn small_ideal_le(ctx: &CardContext, a: &SysExpr, b: &SysExpr) -> bool {
    match (a, b) {
        (SysExpr::CIdeal { index: x, theta: t }, SysExpr::CIdeal { index: x2, theta: t2 }) => {
            ctx.le_known(t2, t) && ctx.le_known(t, x) && ctx.le_known(x, x2)
        }
        _ => false,
    }
}

/// Check a premise-free internal rule on a single fact.
pub fn internal_axiom_holds(ctx: &CardContext, rule: &Rule, lhs: &SysExpr, rhs: &SysExpr) -> bool {
    match rule {
        Rule::ProductProjection
        | Rule::RegularBelowIdeal
        | Rule::TrivialIdeal
        | Rule::IdealCollapse
        | Rule::OrdinalCofinality => [lhs, rhs]
            .iter()
            .any(|node| node_facts(ctx, node).iter().any(|(l, r, ru)| ru == rule && l == lhs && r == rhs)),
        Rule::SmallIdealMonotone => small_ideal_le(ctx, lhs, rhs),
        _ => false,
    }
}

/// Least fixpoint of the structural rules.
pub fn close(mut db: FactDB) -> Result<FactDB, CalcError> {
    let ctx = db.ctx.clone();
    let mut seen_nodes: BTreeSet<SysExpr> = BTreeSet::new();
    loop {
        let before = db.facts.len();

        let mut universe = BTreeSet::new();
        for f in &db.facts {
            subexprs(&f.lhs, &mut universe);
            subexprs(&f.rhs, &mut universe);
        }
        if universe.len() > db.universe_limit {
            return Err(CalcError::DivergentUniverse(db.universe_limit));
        }

        for e in universe.iter().filter(|e| !seen_nodes.contains(*e)) {
            for (l, r, rule) in node_facts(&ctx, e) {
                db.add(l, r, rule, vec![]);
            }
        }
        let cideals: Vec<&SysExpr> = universe.iter().filter(|e| matches!(e, SysExpr::CIdeal { .. })).collect();
        for a in &cideals {
            for b in &cideals {
                if a != b && small_ideal_le(&ctx, a, b) {
                    db.add((*a).clone(), (*b).clone(), Rule::SmallIdealMonotone, vec![]);
                }
            }
        }
        seen_nodes = universe;

        let mut i = 0;
        while i < db.facts.len() {
            let (l, r) = (db.facts[i].lhs.clone(), db.facts[i].rhs.clone());
            db.add(r.dual(), l.dual(), Rule::Duality, vec![i]);
            i += 1;
        }

        let mut by_lhs: HashMap<SysExpr, Vec<FactId>> = HashMap::new();
        for f in &db.facts {
            by_lhs.entry(f.lhs.clone()).or_default().push(f.id);
        }
        let mut i = 0;
        while i < db.facts.len() {
            let (a, b) = (db.facts[i].lhs.clone(), db.facts[i].rhs.clone());
            if let Some(nexts) = by_lhs.get(&b).cloned() {
                for j in nexts {
                    let c = db.facts[j].rhs.clone();
                    if let Some(id) = db.add(a.clone(), c.clone(), Rule::Transitivity, vec![i, j]) {
                        by_lhs.entry(a.clone()).or_default().push(id);
                    }
                }
            }
            i += 1;
        }

        if db.facts.len() == before {
            break;
        }
    }
    db.closed = true;
    Ok(db)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub lo: CardinalName,
    /// `None` when no upper bound is known.
    pub hi: Option<CardinalName>,
}

impl Interval {
    pub fn exact(c: CardinalName) -> Interval {
        Interval { lo: c.clone(), hi: Some(c) }
    }

    pub fn pinned(&self) -> Option<&CardinalName> {
        match &self.hi {
            Some(h) if h == &self.lo => Some(h),
            _ => None,
        }
    }

    /// Pinned up to equality in the context.
    pub fn pinned_in(&self, ctx: &CardContext) -> Option<&CardinalName> {
        match &self.hi {
            Some(h) if ctx.eq_known(h, &self.lo) => Some(h),
            _ => None,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.hi, self.pinned()) {
            (_, Some(p)) => write!(f, "{p}"),
            (Some(h), None) => write!(f, "[{}, {}]", self.lo, h),
            (None, None) => write!(f, "[{}, ?]", self.lo),
        }
    }
}

/// Raise a lower bound if the candidate is definitely larger.
fn raise(ctx: &CardContext, iv: &mut Interval, cand: &CardinalName) -> bool {
    if ctx.le_known(&iv.lo, cand) && !ctx.le_known(cand, &iv.lo) {
        iv.lo = cand.clone();
        true
    } else {
        false
    }
}

/// Lower an upper bound if the candidate is definitely smaller.
fn lower(ctx: &CardContext, iv: &mut Interval, cand: &Option<CardinalName>) -> bool {
    let Some(c) = cand else { return false };
    match &iv.hi {
        None => {
            iv.hi = Some(c.clone());
            true
        }
        Some(h) if ctx.le_known(c, h) && !ctx.le_known(h, c) => {
            iv.hi = Some(c.clone());
            true
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    B,
    D,
}

/// b/d intervals for every non-dual node of a database.
struct Bounds<'a> {
    ctx: &'a CardContext,
    nodes: BTreeMap<SysExpr, [Interval; 2]>,
}

impl<'a> Bounds<'a> {
    fn slot(&self, e: &SysExpr, side: Side) -> (SysExpr, usize) {
        let (base, flip) = e.strip_dual();
        let idx = match (side, flip) {
            (Side::B, false) | (Side::D, true) => 0,
            _ => 1,
        };
        (base.clone(), idx)
    }

    fn get(&self, e: &SysExpr, side: Side) -> Option<&Interval> {
        let (base, i) = self.slot(e, side);
        self.nodes.get(&base).map(|v| &v[i])
    }

    fn update(&mut self, e: &SysExpr, side: Side, lo: Option<&CardinalName>, hi: &Option<CardinalName>) -> bool {
        let (base, i) = self.slot(e, side);
        let ctx = self.ctx;
        let Some(v) = self.nodes.get_mut(&base) else { return false };
        let mut changed = false;
        if let Some(lo) = lo {
            changed |= raise(ctx, &mut v[i], lo);
        }
        changed |= lower(ctx, &mut v[i], hi);
        changed
    }

    fn intrinsic(ctx: &CardContext, e: &SysExpr, floor: &CardinalName, top: &CardinalName) -> [Interval; 2] {
        let open = |lo: &CardinalName| Interval { lo: lo.clone(), hi: None };
        match e {
            SysExpr::Card(c) => [Interval::exact(c.clone()), Interval::exact(c.clone())],
            SysExpr::Ord(o) => match cardctx::cf(ctx, o) {
                Ok(cf) => [Interval::exact(cf.clone()), Interval::exact(cf)],
                Err(_) => [open(floor), open(floor)],
            },
            SysExpr::CIdeal { index, theta } => {
                let d = if ctx.is_regular(theta).unwrap_or(false) {
                    Interval::exact(index.clone())
                } else {
                    Interval { lo: floor.clone(), hi: Some(index.clone()) }
                };
                [Interval::exact(theta.clone()), d]
            }
            SysExpr::Ideal { index, theta } => {
                let b = if ctx.is_regular(theta).unwrap_or(false) {
                    Interval::exact(theta.clone())
                } else {
                    Interval { lo: floor.clone(), hi: Some(theta.clone()) }
                };
                let d = if ctx.pow_lt_holds(index, theta) { Interval::exact(index.clone()) } else { open(index) };
                [b, d]
            }
            SysExpr::Atom(_) => [
                Interval { lo: floor.clone(), hi: Some(top.clone()) },
                Interval { lo: floor.clone(), hi: Some(top.clone()) },
            ],
            SysExpr::Prod(_) | SysExpr::Dual(_) => [open(floor), open(floor)],
        }
    }

    fn compute(db: &'a FactDB) -> Result<Bounds<'a>, CalcError> {
        let ctx = &db.ctx;
        let floor = ctx.aleph1();
        let top = db.c_top();
        let mut universe = BTreeSet::new();
        for f in &db.facts {
            subexprs(&f.lhs, &mut universe);
            subexprs(&f.rhs, &mut universe);
        }
        let nodes = universe
            .into_iter()
            .filter(|e| !matches!(e, SysExpr::Dual(_)))
            .map(|e| {
                let iv = Bounds::intrinsic(ctx, &e, &floor, &top);
                (e, iv)
            })
            .collect();
        let mut bounds = Bounds { ctx, nodes };
        let prods: Vec<SysExpr> = bounds.nodes.keys().filter(|e| matches!(e, SysExpr::Prod(_))).cloned().collect();
        loop {
            let mut changed = false;
            for f in &db.facts {
                // lhs <= rhs: b(rhs) <= b(lhs), d(lhs) <= d(rhs)
                let (bl, br) = (bounds.get(&f.lhs, Side::B).cloned(), bounds.get(&f.rhs, Side::B).cloned());
                if let (Some(bl), Some(br)) = (bl, br) {
                    changed |= bounds.update(&f.lhs, Side::B, Some(&br.lo), &None);
                    changed |= bounds.update(&f.rhs, Side::B, None, &bl.hi);
                }
                let (dl, dr) = (bounds.get(&f.lhs, Side::D).cloned(), bounds.get(&f.rhs, Side::D).cloned());
                if let (Some(dl), Some(dr)) = (dl, dr) {
                    changed |= bounds.update(&f.rhs, Side::D, Some(&dl.lo), &None);
                    changed |= bounds.update(&f.lhs, Side::D, None, &dr.hi);
                }
            }
            for p in &prods {
                let SysExpr::Prod(parts) = p else { continue };
                let bs: Vec<Interval> = parts.iter().filter_map(|q| bounds.get(q, Side::B).cloned()).collect();
                let ds: Vec<Interval> = parts.iter().filter_map(|q| bounds.get(q, Side::D).cloned()).collect();
                if bs.len() == parts.len() {
                    let lo = ctx.min_of(bs.iter().map(|i| &i.lo)).ok().flatten();
                    let hi = hi_fold(ctx, &bs, true);
                    changed |= bounds.update(p, Side::B, lo.as_ref(), &hi);
                }
                if ds.len() == parts.len() {
                    let lo = ctx.max_of(ds.iter().map(|i| &i.lo)).ok().flatten();
                    let hi = hi_fold(ctx, &ds, false);
                    changed |= bounds.update(p, Side::D, lo.as_ref(), &hi);
                }
            }
            if !changed {
                break;
            }
        }
        for (e, [b, d]) in &bounds.nodes {
            for (iv, side) in [(b, "b"), (d, "d")] {
                if let Some(h) = &iv.hi {
                    if ctx.lt_known(h, &iv.lo) {
                        return Err(CalcError::InconsistentBounds {
                            what: format!("{side}({e})"),
                            lo: iv.lo.clone(),
                            hi: h.clone(),
                        });
                    }
                }
            }
        }
        Ok(bounds)
    }
}

fn hi_fold(ctx: &CardContext, ivs: &[Interval], take_min: bool) -> Option<CardinalName> {
    if take_min {
        let known: Vec<&CardinalName> = ivs.iter().filter_map(|i| i.hi.as_ref()).collect();
        if known.is_empty() {
            return None;
        }
        ctx.min_of(known).ok().flatten()
    } else {
        let all: Option<Vec<&CardinalName>> = ivs.iter().map(|i| i.hi.as_ref()).collect();
        ctx.max_of(all?).ok().flatten()
    }
}

/// Intervals for `b(e)` and `d(e)`.
pub fn value_bounds(db: &FactDB, e: &SysExpr) -> Result<(Interval, Interval), CalcError> {
    let bounds = Bounds::compute(db)?;
    let floor = db.ctx.aleph1();
    let top = db.c_top();
    match (bounds.get(e, Side::B), bounds.get(e, Side::D)) {
        (Some(b), Some(d)) => Ok((b.clone(), d.clone())),
        _ => {
            // not mentioned by any fact: intrinsic values only
            let (base, flip) = e.strip_dual();
            let [b, d] = Bounds::intrinsic(&db.ctx, base, &floor, &top);
            Ok(if flip { (d, b) } else { (b, d) })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Entry {
    AddN,
    CovN,
    AddM,
    B,
    CovM,
    NonM,
    D,
    CofM,
    NonN,
    CofN,
    C,
}

impl Entry {
    pub const ALL: [Entry; 11] = [
        Entry::AddN,
        Entry::CovN,
        Entry::AddM,
        Entry::B,
        Entry::CovM,
        Entry::NonM,
        Entry::D,
        Entry::CofM,
        Entry::NonN,
        Entry::CofN,
        Entry::C,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Entry::AddN => "addN",
            Entry::CovN => "covN",
            Entry::AddM => "addM",
            Entry::B => "b",
            Entry::CovM => "covM",
            Entry::NonM => "nonM",
            Entry::D => "d",
            Entry::CofM => "cofM",
            Entry::NonN => "nonN",
            Entry::CofN => "cofN",
            Entry::C => "c",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Entry::AddN => "add(N)",
            Entry::CovN => "cov(N)",
            Entry::AddM => "add(M)",
            Entry::B => "b",
            Entry::CovM => "cov(M)",
            Entry::NonM => "non(M)",
            Entry::D => "d",
            Entry::CofM => "cof(M)",
            Entry::NonN => "non(N)",
            Entry::CofN => "cof(N)",
            Entry::C => "c",
        }
    }

    pub fn from_key(s: &str) -> Option<Entry> {
        Entry::ALL.into_iter().find(|e| e.key() == s)
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The ZFC arrows among the ten diagram entries (`x -> y` means `x <= y`).
/// `aleph1 <= add(N)` and `cof(N) <= c` are checked as floor and ceiling.
pub const ARROWS: [(Entry, Entry); 13] = [
    (Entry::AddN, Entry::CovN),
    (Entry::AddN, Entry::AddM),
    (Entry::CovN, Entry::NonM),
    (Entry::AddM, Entry::B),
    (Entry::AddM, Entry::CovM),
    (Entry::B, Entry::NonM),
    (Entry::B, Entry::D),
    (Entry::CovM, Entry::D),
    (Entry::CovM, Entry::NonN),
    (Entry::NonM, Entry::CofM),
    (Entry::D, Entry::CofM),
    (Entry::CofM, Entry::CofN),
    (Entry::NonN, Entry::CofN),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Constellation {
    pub entries: BTreeMap<Entry, Interval>,
}

impl Constellation {
    pub fn get(&self, e: Entry) -> &Interval {
        &self.entries[&e]
    }

    pub fn is_pinned(&self) -> bool {
        self.entries.values().all(|iv| iv.pinned().is_some())
    }

    /// The pinned value of every entry, if all are pinned.
    pub fn assignment(&self) -> Option<BTreeMap<Entry, CardinalName>> {
        self.entries.iter().map(|(e, iv)| iv.pinned().map(|c| (*e, c.clone()))).collect()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for e in Entry::ALL {
            out.push_str(&format!("{:<8} {}\n", e.label(), self.entries[&e]));
        }
        out
    }

    /// Graphviz rendering of the diagram with the values as labels.
    pub fn to_dot(&self, title: &str) -> String {
        let pos: [(Entry, (u32, u32)); 11] = [
            (Entry::AddN, (0, 0)),
            (Entry::CovN, (0, 2)),
            (Entry::AddM, (1, 0)),
            (Entry::B, (1, 1)),
            (Entry::NonM, (1, 2)),
            (Entry::CovM, (2, 0)),
            (Entry::D, (2, 1)),
            (Entry::CofM, (2, 2)),
            (Entry::NonN, (3, 0)),
            (Entry::CofN, (3, 2)),
            (Entry::C, (4, 2)),
        ];
        let mut out = format!("digraph \"{}\" {{\n  rankdir=BT;\n  node [shape=box];\n", dot_escape(title));
        for (e, (x, y)) in pos {
            out.push_str(&format!(
                "  {} [label=\"{}\\n{}\", pos=\"{},{}!\"];\n",
                e.key(),
                e.label(),
                dot_escape(&self.entries[&e].to_string()),
                x * 2,
                y * 2
            ));
        }
        for (a, b) in ARROWS {
            out.push_str(&format!("  {} -> {};\n", a.key(), b.key()));
        }
        out.push_str("  cofN -> c;\n}\n");
        out
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn constellation(db: &FactDB) -> Result<Constellation, CalcError> {
    let ctx = &db.ctx;
    let bounds = Bounds::compute(db)?;
    let floor = ctx.aleph1();
    let top = db.c_top();
    let default = Interval { lo: floor.clone(), hi: Some(top.clone()) };
    let pick = |a: Atom, side: Side| bounds.get(&SysExpr::Atom(a), side).cloned().unwrap_or_else(|| default.clone());
    let mut m: BTreeMap<Entry, Interval> = BTreeMap::new();
    m.insert(Entry::AddN, pick(Atom::Lc, Side::B));
    m.insert(Entry::CofN, pick(Atom::Lc, Side::D));
    m.insert(Entry::CovN, pick(Atom::Cn, Side::B));
    m.insert(Entry::NonN, pick(Atom::Cn, Side::D));
    m.insert(Entry::B, pick(Atom::Baire, Side::B));
    m.insert(Entry::D, pick(Atom::Baire, Side::D));
    m.insert(Entry::NonM, pick(Atom::Mg, Side::B));
    m.insert(Entry::CovM, pick(Atom::Mg, Side::D));
    m.insert(Entry::AddM, pick(Atom::Meager, Side::B));
    m.insert(Entry::CofM, pick(Atom::Meager, Side::D));
    m.insert(Entry::C, Interval::exact(top.clone()));

    loop {
        let mut changed = false;
        for e in Entry::ALL {
            let iv = m.get_mut(&e).expect("entry");
            changed |= raise(ctx, iv, &floor);
            changed |= lower(ctx, iv, &Some(top.clone()));
        }
        for (a, b) in ARROWS {
            let (ia, ib) = (m[&a].clone(), m[&b].clone());
            changed |= raise(ctx, m.get_mut(&b).expect("entry"), &ia.lo);
            changed |= lower(ctx, m.get_mut(&a).expect("entry"), &ib.hi);
        }
        // add(M) = min(b, cov(M)) and cof(M) = max(d, non(M))
        if let Ok(lo) = ctx.min2(&m[&Entry::B].lo, &m[&Entry::CovM].lo) {
            changed |= raise(ctx, m.get_mut(&Entry::AddM).expect("entry"), &lo);
        }
        if let (Some(h1), Some(h2)) = (m[&Entry::D].hi.clone(), m[&Entry::NonM].hi.clone()) {
            if let Ok(hi) = ctx.max2(&h1, &h2) {
                changed |= lower(ctx, m.get_mut(&Entry::CofM).expect("entry"), &Some(hi));
            }
        }
        if !changed {
            break;
        }
    }
    for (e, iv) in &m {
        if let Some(h) = &iv.hi {
            if ctx.lt_known(h, &iv.lo) {
                return Err(CalcError::InconsistentBounds { what: e.label().into(), lo: iv.lo.clone(), hi: h.clone() });
            }
        }
    }
    Ok(Constellation { entries: m })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    Arrow(Entry, Entry),
    AddMEquation,
    CofMEquation,
    Floor(Entry),
    Ceiling(Entry),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detail)
    }
}

/// Verify an assignment against the arrows, the two equations, the
/// `aleph1` floor and the continuum ceiling. Unknown comparisons count as
/// violations, since they cannot be confirmed.
pub fn check_assignment(
    ctx: &CardContext,
    assignment: &BTreeMap<Entry, CardinalName>,
) -> Result<Vec<Violation>, CalcError> {
    let missing: Vec<&str> = Entry::ALL.iter().filter(|e| !assignment.contains_key(e)).map(|e| e.key()).collect();
    if !missing.is_empty() {
        return Err(CalcError::MissingEntries(missing.join(", ")));
    }
    for v in assignment.values() {
        ctx.idx(v)?;
    }
    let v = |e: Entry| &assignment[&e];
    let mut out = Vec::new();
    for (a, b) in ARROWS {
        if !ctx.le_known(v(a), v(b)) {
            out.push(Violation {
                kind: ViolationKind::Arrow(a, b),
                detail: format!("arrow {a} <= {b} fails: {} <= {} not derivable", v(a), v(b)),
            });
        }
    }
    let add_ok = ctx.min2(v(Entry::B), v(Entry::CovM)).map(|m| ctx.eq_known(&m, v(Entry::AddM)));
    if add_ok != Ok(true) {
        out.push(Violation {
            kind: ViolationKind::AddMEquation,
            detail: format!(
                "add(M) = min(b, cov(M)) fails: add(M)={}, b={}, cov(M)={}",
                v(Entry::AddM),
                v(Entry::B),
                v(Entry::CovM)
            ),
        });
    }
    let cof_ok = ctx.max2(v(Entry::D), v(Entry::NonM)).map(|m| ctx.eq_known(&m, v(Entry::CofM)));
    if cof_ok != Ok(true) {
        out.push(Violation {
            kind: ViolationKind::CofMEquation,
            detail: format!(
                "cof(M) = max(d, non(M)) fails: cof(M)={}, d={}, non(M)={}",
                v(Entry::CofM),
                v(Entry::D),
                v(Entry::NonM)
            ),
        });
    }
    let floor = ctx.aleph1();
    for e in Entry::ALL {
        if !ctx.le_known(&floor, v(e)) {
            out.push(Violation { kind: ViolationKind::Floor(e), detail: format!("{e} = {} is not >= aleph1", v(e)) });
        }
        if e != Entry::C && !ctx.le_known(v(e), v(Entry::C)) {
            out.push(Violation {
                kind: ViolationKind::Ceiling(e),
                detail: format!("{e} = {} is not <= c = {}", v(e), v(Entry::C)),
            });
        }
    }
    Ok(out)
}

/// External rule checker used when replaying traces.
pub trait RuleOracle {
    /// Does the external rule produce exactly this fact?
    fn produces(&self, rule: &Rule, lhs: &SysExpr, rhs: &SysExpr) -> Result<bool, String>;
}

/// An oracle for databases without external rules.
pub struct NoExternalRules;

impl RuleOracle for NoExternalRules {
    fn produces(&self, rule: &Rule, _: &SysExpr, _: &SysExpr) -> Result<bool, String> {
        Err(format!("no external rules available for `{rule}`"))
    }
}

/// A fact produced by an external rule, before it enters a database.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RuleFact {
    pub lhs: SysExpr,
    pub rhs: SysExpr,
    pub rule: Rule,
}

impl RuleFact {
    pub fn new(lhs: SysExpr, rhs: SysExpr, rule: Rule) -> RuleFact {
        RuleFact { lhs, rhs, rule }
    }
}

/// An oracle that accepts exactly a regenerated list of external facts.
pub struct RegeneratedRules(pub Vec<RuleFact>);

impl RuleOracle for RegeneratedRules {
    fn produces(&self, rule: &Rule, lhs: &SysExpr, rhs: &SysExpr) -> Result<bool, String> {
        Ok(self.0.iter().any(|f| &f.rule == rule && &f.lhs == lhs && &f.rhs == rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fact #{id} does not replay: {reason}")]
pub struct ReplayError {
    pub id: FactId,
    pub reason: String,
}

/// Re-derive one fact from its rule and premises.
pub fn replay_fact(
    ctx: &CardContext,
    c_top: &CardinalName,
    facts: &[TukeyFact],
    fact: &TukeyFact,
    oracle: &dyn RuleOracle,
) -> Result<(), ReplayError> {
    let fail = |reason: String| Err(ReplayError { id: fact.id, reason });
    let premise = |k: usize| -> Result<&TukeyFact, ReplayError> {
        let pid = *fact
            .justification
            .premises
            .get(k)
            .ok_or(ReplayError { id: fact.id, reason: format!("missing premise {k}") })?;
        if pid >= fact.id {
            return Err(ReplayError { id: fact.id, reason: format!("premise #{pid} is not earlier") });
        }
        facts
            .iter()
            .find(|f| f.id == pid)
            .ok_or(ReplayError { id: fact.id, reason: format!("premise #{pid} not found") })
    };
    let rule = &fact.justification.rule;
    let npremises = fact.justification.premises.len();
    let expected_premises = match rule {
        Rule::Transitivity => 2,
        Rule::Duality => 1,
        _ => 0,
    };
    if npremises != expected_premises {
        return fail(format!("{rule} takes {expected_premises} premises, got {npremises}"));
    }
    if fact.lhs == fact.rhs {
        return fail("reflexive fact".into());
    }
    match rule {
        Rule::Base => {
            if !is_base_fact(ctx, c_top, &fact.lhs, &fact.rhs) {
                return fail("not a base fact".into());
            }
        }
        Rule::Transitivity => {
            let (p, q) = (premise(0)?, premise(1)?);
            if p.lhs != fact.lhs || p.rhs != q.lhs || q.rhs != fact.rhs {
                return fail(format!("premises #{} and #{} do not compose to this fact", p.id, q.id));
            }
        }
        Rule::Duality => {
            let p = premise(0)?;
            if fact.lhs != p.rhs.clone().dual() || fact.rhs != p.lhs.clone().dual() {
                return fail(format!("not the dual of #{}", p.id));
            }
        }
        r if r.is_external() => match oracle.produces(r, &fact.lhs, &fact.rhs) {
            Ok(true) => {}
            Ok(false) => return fail(format!("{r} does not produce this fact")),
            Err(e) => return fail(e),
        },
        r => {
            if !internal_axiom_holds(ctx, r, &fact.lhs, &fact.rhs) {
                return fail(format!("side conditions of {r} fail"));
            }
        }
    }
    if fact.justification.citation != rule.citation() {
        return fail("citation does not match the rule".into());
    }
    Ok(())
}

/// Replay every fact of a database.
pub fn replay_all(db: &FactDB, oracle: &dyn RuleOracle) -> Result<(), ReplayError> {
    let top = db.c_top();
    db.facts.iter().try_for_each(|f| replay_fact(&db.ctx, &top, &db.facts, f, oracle))
}

/// Parse one trace line as printed by `TukeyFact`'s `Display`.
pub fn parse_trace_line(ctx: &CardContext, line: &str) -> Result<TukeyFact, CalcError> {
    let bad = |m: &str| CalcError::BadExpr(format!("{m} in trace line `{line}`"));
    let line = line.trim();
    let rest = line.strip_prefix('#').ok_or_else(|| bad("missing `#id`"))?;
    let (id, rest) = rest.split_once(' ').ok_or_else(|| bad("missing fact"))?;
    let id: FactId = id.parse().map_err(|_| bad("bad id"))?;
    let open = rest.rfind("  [").ok_or_else(|| bad("missing justification"))?;
    let (fact, just) = (&rest[..open], &rest[open + 3..]);
    let just = just.strip_suffix(']').ok_or_else(|| bad("unterminated justification"))?;
    let (lhs, rhs) = fact.split_once(" <= ").ok_or_else(|| bad("missing `<=`"))?;
    let mut parts = just.splitn(3, "; ");
    let rule = parts.next().ok_or_else(|| bad("missing rule"))?;
    let premises = parts.next().ok_or_else(|| bad("missing premises"))?;
    let citation = parts.next().ok_or_else(|| bad("missing citation"))?;
    let citation =
        citation.strip_prefix('"').and_then(|c| c.strip_suffix('"')).ok_or_else(|| bad("citation must be quoted"))?;
    let premises = if premises == "-" {
        vec![]
    } else {
        premises.split(',').map(|p| p.trim().parse().map_err(|_| bad("bad premise id"))).collect::<Result<_, _>>()?
    };
    Ok(TukeyFact {
        id,
        lhs: SysExpr::parse(ctx, lhs)?,
        rhs: SysExpr::parse(ctx, rhs)?,
        justification: Justification { rule: Rule::parse(ctx, rule)?, premises, citation: citation.to_string() },
    })
}
