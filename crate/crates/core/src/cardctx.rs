//! Named symbolic cardinals with a declared order, regularity flags and
//! looked-up arithmetic assumptions.
//!
//! Nothing here computes cardinal arithmetic. An assumption such as
//! `pow_lt(l5,l3)=l5` is either declared (or follows from a declared one by
//! monotonicity in the exponent) or it is not available.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub const ALEPH0: &str = "aleph0";
pub const ALEPH1: &str = "aleph1";
/// Reserved name for the continuum when no recipe pins it.
pub const CONTINUUM: &str = "c";

/// Spellings that the expression syntax uses for atoms and keywords.
pub const RESERVED: &[&str] = &["Cn", "Mg", "Null", "Meager", "C", "dual", "succ", "x"];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct CardinalName(String);

impl CardinalName {
    pub fn new(s: impl Into<String>) -> Self {
        CardinalName(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CardinalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CardinalName {
    fn from(s: &str) -> Self {
        CardinalName(s.to_string())
    }
}

impl From<String> for CardinalName {
    fn from(s: String) -> Self {
        CardinalName(s)
    }
}

/// Three-valued answer for order queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    pub fn is_true(self) -> bool {
        self == Tri::True
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Assumption {
    /// `base^{<exp} = base`
    PowLt { base: CardinalName, exp: CardinalName },
    /// `base^{exp} = base`
    Pow { base: CardinalName, exp: CardinalName },
    /// `card` is `theta`-inaccessible.
    Inaccessible { card: CardinalName, theta: CardinalName },
    /// `succ(pred) = succ`
    Succ { pred: CardinalName, succ: CardinalName },
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::PowLt { base, exp } => write!(f, "pow_lt({base},{exp})={base}"),
            Assumption::Pow { base, exp } => write!(f, "pow({base},{exp})={base}"),
            Assumption::Inaccessible { card, theta } => write!(f, "inaccessible({card},{theta})"),
            Assumption::Succ { pred, succ } => write!(f, "succ({pred})={succ}"),
        }
    }
}

impl Assumption {
    pub fn names(&self) -> [&CardinalName; 2] {
        match self {
            Assumption::PowLt { base, exp } | Assumption::Pow { base, exp } => [base, exp],
            Assumption::Inaccessible { card, theta } => [card, theta],
            Assumption::Succ { pred, succ } => [pred, succ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Declaration {
    Card { name: CardinalName, regular: bool },
    Le(CardinalName, CardinalName),
    Lt(CardinalName, CardinalName),
    Assume(Assumption),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CardError {
    #[error("cardinal `{0}` declared twice")]
    DuplicateName(CardinalName),
    #[error("`{0}` is reserved and cannot name a cardinal")]
    ReservedName(CardinalName),
    #[error("strict order cycle through `{0}`")]
    OrderCycle(CardinalName),
    #[error("unknown cardinal `{0}`")]
    UnknownName(CardinalName),
    #[error("factor `{0}` is not declared regular")]
    NonRegularFactor(CardinalName),
    #[error("factors `{0}` and `{1}` are not comparable")]
    IncomparableFactors(CardinalName, CardinalName),
    #[error("`{0}` and `{1}` are not comparable")]
    IncomparableNames(CardinalName, CardinalName),
    #[error("empty ordinal expression")]
    EmptyOrdinal,
}

/// A finite context of named cardinals. Immutable once built.
#[derive(Debug, Clone)]
pub struct CardContext {
    names: Vec<CardinalName>,
    index: HashMap<CardinalName, usize>,
    regular: Vec<bool>,
    le: Vec<Vec<bool>>,
    lt: Vec<Vec<bool>>,
    assumptions: Vec<Assumption>,
    declarations: Vec<Declaration>,
}

impl PartialEq for CardContext {
    fn eq(&self, other: &Self) -> bool {
        self.declarations == other.declarations
    }
}

fn implicit_declarations() -> Vec<Declaration> {
    vec![
        Declaration::Card { name: ALEPH0.into(), regular: true },
        Declaration::Card { name: ALEPH1.into(), regular: true },
        Declaration::Card { name: CONTINUUM.into(), regular: false },
        Declaration::Lt(ALEPH0.into(), ALEPH1.into()),
        Declaration::Le(ALEPH1.into(), CONTINUUM.into()),
    ]
}

pub fn build_context(declarations: &[Declaration]) -> Result<CardContext, CardError> {
    let mut names = Vec::new();
    let mut index = HashMap::new();
    let mut regular = Vec::new();
    let all: Vec<Declaration> = implicit_declarations().into_iter().chain(declarations.iter().cloned()).collect();

    for d in &all {
        if let Declaration::Card { name, regular: r } = d {
            if RESERVED.contains(&name.as_str()) {
                return Err(CardError::ReservedName(name.clone()));
            }
            if index.contains_key(name) {
                return Err(CardError::DuplicateName(name.clone()));
            }
            index.insert(name.clone(), names.len());
            names.push(name.clone());
            regular.push(*r);
        }
    }

    let n = names.len();
    let lookup = |c: &CardinalName| index.get(c).copied().ok_or_else(|| CardError::UnknownName(c.clone()));
    let mut le = vec![vec![false; n]; n];
    let mut strict_edges = Vec::new();
    let mut assumptions = Vec::new();
    for (i, row) in le.iter_mut().enumerate() {
        row[i] = true;
    }
    for d in &all {
        match d {
            Declaration::Card { .. } => {}
            Declaration::Le(a, b) => {
                le[lookup(a)?][lookup(b)?] = true;
            }
            Declaration::Lt(a, b) => {
                let (i, j) = (lookup(a)?, lookup(b)?);
                le[i][j] = true;
                strict_edges.push((i, j));
            }
            Declaration::Assume(a) => {
                for c in a.names() {
                    lookup(c)?;
                }
                if let Assumption::Succ { pred, succ } = a {
                    let (i, j) = (lookup(pred)?, lookup(succ)?);
                    le[i][j] = true;
                    strict_edges.push((i, j));
                }
                assumptions.push(a.clone());
            }
        }
    }

    for k in 0..n {
        for i in 0..n {
            if le[i][k] {
                let via = le[k].clone();
                for (cell, v) in le[i].iter_mut().zip(via) {
                    *cell |= v;
                }
            }
        }
    }

    let mut lt = vec![vec![false; n]; n];
    for &(u, v) in &strict_edges {
        for i in 0..n {
            if !le[i][u] {
                continue;
            }
            for j in 0..n {
                if le[v][j] {
                    lt[i][j] = true;
                }
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| lt[i][i]) {
        return Err(CardError::OrderCycle(names[i].clone()));
    }

    Ok(CardContext { names, index, regular, le, lt, assumptions, declarations: declarations.to_vec() })
}

impl CardContext {
    /// The user declarations, without the implicit `aleph0`, `aleph1`, `c`.
    pub fn declarations(&self) -> &[Declaration] {
        &self.declarations
    }

    pub fn names(&self) -> &[CardinalName] {
        &self.names
    }

    pub fn assumptions(&self) -> &[Assumption] {
        &self.assumptions
    }

    pub fn contains(&self, c: &CardinalName) -> bool {
        self.index.contains_key(c)
    }

    pub fn idx(&self, c: &CardinalName) -> Result<usize, CardError> {
        self.index.get(c).copied().ok_or_else(|| CardError::UnknownName(c.clone()))
    }

    pub fn aleph1(&self) -> CardinalName {
        ALEPH1.into()
    }

    pub fn continuum(&self) -> CardinalName {
        CONTINUUM.into()
    }

    pub fn is_regular(&self, c: &CardinalName) -> Result<bool, CardError> {
        Ok(self.regular[self.idx(c)?])
    }

    pub fn leq(&self, a: &CardinalName, b: &CardinalName) -> Result<Tri, CardError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        Ok(if self.le[i][j] {
            Tri::True
        } else if self.lt[j][i] {
            Tri::False
        } else {
            Tri::Unknown
        })
    }

    pub fn lt(&self, a: &CardinalName, b: &CardinalName) -> Result<Tri, CardError> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        Ok(if self.lt[i][j] {
            Tri::True
        } else if self.le[j][i] {
            Tri::False
        } else {
            Tri::Unknown
        })
    }

    /// Shorthand for a definite `a <= b`; unknown names count as false.
    pub fn le_known(&self, a: &CardinalName, b: &CardinalName) -> bool {
        matches!(self.leq(a, b), Ok(Tri::True))
    }

    pub fn lt_known(&self, a: &CardinalName, b: &CardinalName) -> bool {
        matches!(self.lt(a, b), Ok(Tri::True))
    }

    /// Definitely equal as cardinals (mutually `<=`).
    pub fn eq_known(&self, a: &CardinalName, b: &CardinalName) -> bool {
        self.le_known(a, b) && self.le_known(b, a)
    }

    pub fn is_uncountable_regular(&self, c: &CardinalName) -> bool {
        self.is_regular(c).unwrap_or(false) && self.le_known(&self.aleph1(), c)
    }

    /// The smaller of two comparable names.
    pub fn min2(&self, a: &CardinalName, b: &CardinalName) -> Result<CardinalName, CardError> {
        if self.le_known(a, b) {
            Ok(a.clone())
        } else if self.le_known(b, a) {
            Ok(b.clone())
        } else {
            self.idx(a)?;
            self.idx(b)?;
            Err(CardError::IncomparableNames(a.clone(), b.clone()))
        }
    }

    pub fn max2(&self, a: &CardinalName, b: &CardinalName) -> Result<CardinalName, CardError> {
        if self.le_known(b, a) {
            Ok(a.clone())
        } else if self.le_known(a, b) {
            Ok(b.clone())
        } else {
            self.idx(a)?;
            self.idx(b)?;
            Err(CardError::IncomparableNames(a.clone(), b.clone()))
        }
    }

    pub fn min_of<'a>(
        &self,
        it: impl IntoIterator<Item = &'a CardinalName>,
    ) -> Result<Option<CardinalName>, CardError> {
        let mut acc: Option<CardinalName> = None;
        for c in it {
            acc = Some(match acc {
                None => c.clone(),
                Some(m) => self.min2(&m, c)?,
            });
        }
        Ok(acc)
    }

    pub fn max_of<'a>(
        &self,
        it: impl IntoIterator<Item = &'a CardinalName>,
    ) -> Result<Option<CardinalName>, CardError> {
        let mut acc: Option<CardinalName> = None;
        for c in it {
            acc = Some(match acc {
                None => c.clone(),
                Some(m) => self.max2(&m, c)?,
            });
        }
        Ok(acc)
    }

    /// `|mu ∩ N|` for a model `N` of the given width with `width ⊆ N`.
    pub fn trace(&self, mu: &CardinalName, width: &CardinalName) -> Result<CardinalName, CardError> {
        self.min2(mu, width)
    }

    /// Does `base^{<exp} = base` follow from the declared assumptions?
    pub fn pow_lt_holds(&self, base: &CardinalName, exp: &CardinalName) -> bool {
        self.assumptions.iter().any(|a| match a {
            Assumption::PowLt { base: b, exp: e } => b == base && self.le_known(exp, e),
            Assumption::Pow { base: b, exp: e } => b == base && self.lt_known(exp, e),
            _ => false,
        })
    }

    /// Does `base^{exp} = base` follow from the declared assumptions?
    pub fn pow_holds(&self, base: &CardinalName, exp: &CardinalName) -> bool {
        self.assumptions.iter().any(|a| match a {
            Assumption::Pow { base: b, exp: e } => b == base && self.le_known(exp, e),
            Assumption::PowLt { base: b, exp: e } => b == base && self.lt_known(exp, e),
            _ => false,
        })
    }

    pub fn is_inaccessible(&self, card: &CardinalName, theta: &CardinalName) -> bool {
        self.assumptions.iter().any(|a| match a {
            Assumption::Inaccessible { card: c, theta: t } => c == card && self.le_known(theta, t),
            _ => false,
        })
    }

    pub fn succ_of(&self, pred: &CardinalName) -> Option<&CardinalName> {
        self.assumptions.iter().find_map(|a| match a {
            Assumption::Succ { pred: p, succ } if p == pred => Some(succ),
            _ => None,
        })
    }

    /// Regular names `mu` with `lo <= mu <= hi` derivable, in declaration order.
    pub fn regulars_between(&self, lo: &CardinalName, hi: &CardinalName) -> Vec<CardinalName> {
        self.names
            .iter()
            .enumerate()
            .filter(|(i, c)| self.regular[*i] && self.le_known(lo, c) && self.le_known(c, hi))
            .map(|(_, c)| c.clone())
            .collect()
    }

    /// Sort names so that definitely smaller ones come first; ties keep
    /// declaration order.
    pub fn sort_names(&self, v: &mut [CardinalName]) {
        let rank = |c: &CardinalName| {
            let i = self.index[c];
            let below = (0..self.names.len()).filter(|&j| self.lt[j][i]).count();
            (below, i)
        };
        v.sort_by_key(rank);
    }
}

/// A left-to-right ordinal product of regular cardinals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct OrdinalExpr {
    factors: Vec<CardinalName>,
}

impl OrdinalExpr {
    pub fn new(ctx: &CardContext, factors: Vec<CardinalName>) -> Result<Self, CardError> {
        if factors.is_empty() {
            return Err(CardError::EmptyOrdinal);
        }
        for f in &factors {
            if !ctx.is_regular(f)? {
                return Err(CardError::NonRegularFactor(f.clone()));
            }
        }
        Ok(OrdinalExpr { factors })
    }

    pub fn single(ctx: &CardContext, c: CardinalName) -> Result<Self, CardError> {
        Self::new(ctx, vec![c])
    }

    pub fn factors(&self) -> &[CardinalName] {
        &self.factors
    }
}

impl fmt::Display for OrdinalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Cofinality of a product of regulars: the last factor.
pub fn cf(ctx: &CardContext, e: &OrdinalExpr) -> Result<CardinalName, CardError> {
    for f in &e.factors {
        if !ctx.is_regular(f)? {
            return Err(CardError::NonRegularFactor(f.clone()));
        }
    }
    Ok(e.factors.last().cloned().expect("nonempty"))
}

/// Cardinality of a product of infinite ordinals: the largest factor.
pub fn card(ctx: &CardContext, e: &OrdinalExpr) -> Result<CardinalName, CardError> {
    let mut best = e.factors[0].clone();
    for f in &e.factors[1..] {
        best = ctx.max2(&best, f).map_err(|_| CardError::IncomparableFactors(best.clone(), f.clone()))?;
    }
    Ok(best)
}

/// Convenience for tests and builtins: build a context from a list of
/// `(name, regular)` and a chain of `(a, b, strict)` edges.
pub fn context_from_chain(
    cards: &[(&str, bool)],
    edges: &[(&str, &str, bool)],
    assumptions: Vec<Assumption>,
) -> Result<CardContext, CardError> {
    let mut decls: Vec<Declaration> =
        cards.iter().map(|(n, r)| Declaration::Card { name: (*n).into(), regular: *r }).collect();
    for (a, b, strict) in edges {
        decls.push(if *strict {
            Declaration::Lt((*a).into(), (*b).into())
        } else {
            Declaration::Le((*a).into(), (*b).into())
        });
    }
    decls.extend(assumptions.into_iter().map(Declaration::Assume));
    build_context(&decls)
}
