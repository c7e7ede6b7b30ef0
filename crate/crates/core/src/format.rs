//! The text format: `context`, `recipe`, `model`, `plan` and `assign`
//! blocks of `;`-terminated statements, with `#` comments.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::cardctx::{
    build_context, Assumption, CardContext, CardError, CardinalName, Declaration, OrdinalExpr, ALEPH0, ALEPH1,
    CONTINUUM, RESERVED,
};
use crate::forge::{AxiomSpec, AxiomTheorem, Bookkeeping, IterandClass, ModelRef, Recipe, Slot};
use crate::submodel::{ChainKind, ChainSpec, Plan, CANONICAL_ORDER};
use crate::tukeycalc::{is_ident_byte, Atom, Entry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unresolved name `{0}`")]
    UnresolvedName(String),
    #[error(transparent)]
    Card(CardError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, kind: ParseErrorKind::Syntax(msg.into()) }
}

fn unresolved(line: usize, name: impl Into<String>) -> ParseError {
    ParseError { line, kind: ParseErrorKind::UnresolvedName(name.into()) }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub name: String,
    pub values: BTreeMap<Entry, CardinalName>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeFile {
    pub ctx: CardContext,
    pub recipes: Vec<Recipe>,
    pub models: Vec<AxiomSpec>,
    pub plans: Vec<Plan>,
    pub assignments: Vec<Assignment>,
}

impl RecipeFile {
    /// A recipe or axiom model by name.
    pub fn model(&self, name: &str) -> Option<ModelRef> {
        self.recipes
            .iter()
            .find(|r| r.name == name)
            .map(|r| ModelRef::Recipe(r.clone()))
            .or_else(|| self.models.iter().find(|m| m.name == name).map(|m| ModelRef::Axiom(m.clone())))
    }

    pub fn plan(&self, name: &str) -> Option<&Plan> {
        self.plans.iter().find(|p| p.name == name)
    }

    pub fn assignment(&self, name: &str) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.name == name)
    }
}

struct Stmt {
    line: usize,
    text: String,
}

struct Block {
    line: usize,
    kind: String,
    name: Option<String>,
    body: Vec<Stmt>,
}

fn blocks(text: &str) -> Result<Vec<Block>, ParseError> {
    let mut chars: Vec<(char, usize)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_text = line.split('#').next().unwrap_or("");
        chars.extend(line_text.chars().map(|c| (c, i + 1)));
        chars.push(('\n', i + 1));
    }
    let mut out = Vec::new();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].0.is_whitespace() {
            *pos += 1;
        }
    };
    loop {
        skip_ws(&mut pos);
        if pos >= chars.len() {
            break;
        }
        let line = chars[pos].1;
        let mut header = String::new();
        while pos < chars.len() && chars[pos].0 != '{' {
            if chars[pos].0 == ';' || chars[pos].0 == '}' {
                return Err(syntax(chars[pos].1, format!("expected `{{` after `{}`", header.trim())));
            }
            header.push(chars[pos].0);
            pos += 1;
        }
        if pos >= chars.len() {
            return Err(syntax(line, format!("expected `{{` after `{}`", header.trim())));
        }
        pos += 1;
        let words: Vec<&str> = header.split_whitespace().collect();
        let (kind, name) = match words.as_slice() {
            [k] => (k.to_string(), None),
            [k, n] => (k.to_string(), Some(n.to_string())),
            _ => return Err(syntax(line, format!("bad block header `{}`", header.trim()))),
        };
        let mut body = Vec::new();
        loop {
            skip_ws(&mut pos);
            if pos >= chars.len() {
                return Err(syntax(line, format!("block `{kind}` is not closed")));
            }
            if chars[pos].0 == '}' {
                pos += 1;
                break;
            }
            let sline = chars[pos].1;
            let mut s = String::new();
            while pos < chars.len() && chars[pos].0 != ';' {
                if chars[pos].0 == '}' || chars[pos].0 == '{' {
                    return Err(syntax(sline, format!("missing `;` after `{}`", s.trim())));
                }
                s.push(chars[pos].0);
                pos += 1;
            }
            if pos >= chars.len() {
                return Err(syntax(sline, format!("missing `;` after `{}`", s.trim())));
            }
            pos += 1;
            body.push(Stmt { line: sline, text: s.split_whitespace().collect::<Vec<_>>().join(" ") });
        }
        out.push(Block { line, kind, name, body });
    }
    Ok(out)
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(is_ident_byte)
}

/// `head(a,b,...)` into `("head", ["a","b",...])`.
fn call(line: usize, s: &str) -> Result<(String, Vec<String>), ParseError> {
    let s = s.trim();
    let (head, rest) = s.split_once('(').ok_or_else(|| syntax(line, format!("expected `(` in `{s}`")))?;
    let args = rest.strip_suffix(')').ok_or_else(|| syntax(line, format!("expected `)` in `{s}`")))?;
    let args = if args.trim().is_empty() { vec![] } else { args.split(',').map(|a| a.trim().to_string()).collect() };
    Ok((head.trim().to_string(), args))
}

struct Names<'a> {
    ctx: &'a CardContext,
}

impl Names<'_> {
    fn get(&self, line: usize, s: &str) -> Result<CardinalName, ParseError> {
        let c = CardinalName::new(s.trim());
        if self.ctx.contains(&c) {
            Ok(c)
        } else {
            Err(unresolved(line, s.trim()))
        }
    }
}

fn parse_assumption(line: usize, s: &str, declared: &HashSet<String>) -> Result<Assumption, ParseError> {
    let check = |n: &str| -> Result<CardinalName, ParseError> {
        if declared.contains(n) {
            Ok(CardinalName::new(n))
        } else {
            Err(unresolved(line, n))
        }
    };
    let (lhs, rhs) = match s.split_once('=') {
        Some((l, r)) => (l.trim(), Some(r.trim())),
        None => (s.trim(), None),
    };
    let (head, args) = call(line, lhs)?;
    let two = |args: &[String]| -> Result<(CardinalName, CardinalName), ParseError> {
        match args {
            [a, b] => Ok((check(a)?, check(b)?)),
            _ => Err(syntax(line, format!("`{head}` takes two arguments"))),
        }
    };
    let base_eq = |base: &CardinalName| -> Result<(), ParseError> {
        if rhs == Some(base.as_str()) {
            Ok(())
        } else {
            Err(syntax(line, format!("`{lhs}` must equal its base `{base}`")))
        }
    };
    match head.as_str() {
        "pow_lt" => {
            let (base, exp) = two(&args)?;
            base_eq(&base)?;
            Ok(Assumption::PowLt { base, exp })
        }
        "pow" => {
            let (base, exp) = two(&args)?;
            base_eq(&base)?;
            Ok(Assumption::Pow { base, exp })
        }
        "inaccessible" => {
            if rhs.is_some() {
                return Err(syntax(line, "`inaccessible(a,b)` takes no `=`"));
            }
            let (card, theta) = two(&args)?;
            Ok(Assumption::Inaccessible { card, theta })
        }
        "succ" => {
            let [pred] = args.as_slice() else { return Err(syntax(line, "`succ` takes one argument")) };
            let succ = rhs.ok_or_else(|| syntax(line, "`succ(a)` needs `=b`"))?;
            Ok(Assumption::Succ { pred: check(pred)?, succ: check(succ)? })
        }
        other => Err(syntax(line, format!("unknown assumption `{other}`"))),
    }
}

fn parse_context(b: &Block) -> Result<CardContext, ParseError> {
    let mut decls = Vec::new();
    let mut declared: HashSet<String> = [ALEPH0, ALEPH1, CONTINUUM].iter().map(|s| s.to_string()).collect();
    for s in &b.body {
        let words: Vec<&str> = s.text.split(' ').collect();
        let check = |n: &str| {
            if declared.contains(n) {
                Ok(CardinalName::new(n))
            } else {
                Err(unresolved(s.line, n))
            }
        };
        match words.as_slice() {
            ["card", name] | ["card", name, "regular"] => {
                if !is_ident(name) {
                    return Err(syntax(s.line, format!("bad cardinal name `{name}`")));
                }
                if RESERVED.contains(name) {
                    return Err(ParseError {
                        line: s.line,
                        kind: ParseErrorKind::Card(CardError::ReservedName((*name).into())),
                    });
                }
                if !declared.insert(name.to_string()) {
                    return Err(ParseError {
                        line: s.line,
                        kind: ParseErrorKind::Card(CardError::DuplicateName((*name).into())),
                    });
                }
                decls.push(Declaration::Card { name: (*name).into(), regular: words.len() == 3 });
            }
            ["lt", a, c] => decls.push(Declaration::Lt(check(a)?, check(c)?)),
            ["le", a, c] => decls.push(Declaration::Le(check(a)?, check(c)?)),
            ["assume", ..] => {
                let rest = s.text["assume".len()..].replace(' ', "");
                decls.push(Declaration::Assume(parse_assumption(s.line, &rest, &declared)?));
            }
            _ => return Err(syntax(s.line, format!("unknown context statement `{}`", s.text))),
        }
    }
    build_context(&decls).map_err(|e| ParseError { line: b.line, kind: ParseErrorKind::Card(e) })
}

fn parse_recipe(ctx: &CardContext, b: &Block, name: String) -> Result<Recipe, ParseError> {
    let names = Names { ctx };
    let mut length = None;
    let mut cc = None;
    let mut slots = Vec::new();
    for s in &b.body {
        let (head, rest) = s.text.split_once(' ').unwrap_or((&s.text, ""));
        match head {
            "length" => {
                let factors =
                    rest.replace(' ', "").split('*').map(|f| names.get(s.line, f)).collect::<Result<Vec<_>, _>>()?;
                let e = OrdinalExpr::new(ctx, factors)
                    .map_err(|e| ParseError { line: s.line, kind: ParseErrorKind::Card(e) })?;
                length = Some(e);
            }
            "cc" => cc = Some(names.get(s.line, rest)?),
            "slot" => slots.push(parse_slot(ctx, s.line, rest)?),
            _ => return Err(syntax(s.line, format!("unknown recipe statement `{}`", s.text))),
        }
    }
    let length = length.ok_or_else(|| syntax(b.line, format!("recipe {name} has no length")))?;
    let cc = cc.ok_or_else(|| syntax(b.line, format!("recipe {name} has no cc bound")))?;
    Ok(Recipe { name, length, cc, slots })
}

fn parse_slot(ctx: &CardContext, line: usize, text: &str) -> Result<Slot, ParseError> {
    let words: Vec<&str> = text.split(' ').filter(|w| !w.is_empty()).collect();
    let Some(class_text) = words.first() else { return Err(syntax(line, "empty slot")) };
    let class = IterandClass::parse(ctx, class_text).ok_or_else(|| match call(line, class_text) {
        Ok((_, args)) if args.len() == 1 && !ctx.contains(&CardinalName::new(args[0].as_str())) => {
            unresolved(line, args[0].as_str())
        }
        _ => syntax(line, format!("unknown iterand class `{class_text}`")),
    })?;
    let mut slot = Slot { class, cofinal: false, bookkeeping: None };
    let mut i = 1;
    while i < words.len() {
        match words[i] {
            "cofinal" => {
                slot.cofinal = true;
                i += 1;
            }
            "bookkeeping" => {
                let (Some(r), Some(&"upto"), Some(t)) = (words.get(i + 1), words.get(i + 2), words.get(i + 3)) else {
                    return Err(syntax(line, "expected `bookkeeping <R> upto <card>`"));
                };
                let system = Atom::from_spelling(r)
                    .filter(|a| a.is_prs())
                    .ok_or_else(|| syntax(line, format!("`{r}` is not one of Lc*, Cn, w^w, Mg")))?;
                slot.bookkeeping = Some(Bookkeeping { system, up_to: Names { ctx }.get(line, t)? });
                i += 4;
            }
            w => return Err(syntax(line, format!("unexpected `{w}` in slot"))),
        }
    }
    Ok(slot)
}

fn parse_model(ctx: &CardContext, b: &Block, name: String) -> Result<AxiomSpec, ParseError> {
    let [s] = b.body.as_slice() else {
        return Err(syntax(b.line, format!("model {name} needs exactly one `axiom` statement")));
    };
    let rest = s.text.strip_prefix("axiom ").ok_or_else(|| syntax(s.line, "expected `axiom <theorem>(...)`"))?;
    let (head, args) = call(s.line, &rest.replace(' ', ""))?;
    let theorem = AxiomTheorem::from_name(&head).ok_or_else(|| syntax(s.line, format!("unknown theorem `{head}`")))?;
    let params = args.iter().map(|a| Names { ctx }.get(s.line, a)).collect::<Result<_, _>>()?;
    Ok(AxiomSpec { name, theorem, params })
}

fn parse_plan(ctx: &CardContext, b: &Block, name: String) -> Result<Plan, ParseError> {
    let names = Names { ctx };
    let mut base = None;
    let mut steps: Vec<ChainSpec> = Vec::new();
    for s in &b.body {
        let compact = s.text.replace(' ', "");
        if let Some(rest) = compact.strip_prefix("base") {
            let (head, args) = call(s.line, rest)?;
            if head != "gksmax" {
                return Err(syntax(s.line, format!("unknown base `{head}`")));
            }
            base = Some(args.iter().map(|a| names.get(s.line, a)).collect::<Result<Vec<_>, _>>()?);
        } else if let Some(rest) = compact.strip_prefix("final") {
            let (_, args) = call(s.line, &format!("final{rest}"))?;
            let [w] = args.as_slice() else { return Err(syntax(s.line, "`final` takes one cardinal")) };
            steps.push(ChainSpec {
                kind: ChainKind::Final,
                length: None,
                closure: ctx.aleph1(),
                width: names.get(s.line, w)?,
            });
        } else if s.text.starts_with("chain ") {
            let words: Vec<&str> = s.text.splitn(4, ' ').collect();
            let [_, kind, idx, tuple] = words.as_slice() else {
                return Err(syntax(s.line, "expected `chain <d|b> <i> (<len>, <closure>, <width>)`"));
            };
            let i: usize = idx
                .parse()
                .ok()
                .filter(|i| (1..=4).contains(i))
                .ok_or_else(|| syntax(s.line, format!("chain index `{idx}` is not 1..4")))?;
            let kind = match *kind {
                "d" => ChainKind::D(i),
                "b" => ChainKind::B(i),
                k => return Err(syntax(s.line, format!("chain kind `{k}` is not d or b"))),
            };
            let (_, args) = call(s.line, &format!("chain{}", tuple.replace(' ', "")))?;
            let [len, closure, width] = args.as_slice() else {
                return Err(syntax(s.line, "a chain takes (length, closure, width)"));
            };
            let closure = if let Some(inner) = closure.strip_prefix("succ(").and_then(|c| c.strip_suffix(')')) {
                let pred = names.get(s.line, inner)?;
                ctx.succ_of(&pred).cloned().ok_or_else(|| unresolved(s.line, format!("succ({inner})")))?
            } else {
                names.get(s.line, closure)?
            };
            steps.push(ChainSpec {
                kind,
                length: Some(names.get(s.line, len)?),
                closure,
                width: names.get(s.line, width)?,
            });
        } else {
            return Err(syntax(s.line, format!("unknown plan statement `{}`", s.text)));
        }
    }
    let base = base.ok_or_else(|| syntax(b.line, format!("plan {name} has no base")))?;
    for k in CANONICAL_ORDER {
        match steps.iter().filter(|c| c.kind == k).count() {
            1 => {}
            0 => return Err(syntax(b.line, format!("plan {name} is missing chain {k}"))),
            _ => return Err(syntax(b.line, format!("plan {name} repeats chain {k}"))),
        }
    }
    Ok(Plan { name, base, steps })
}

fn parse_assignment(ctx: &CardContext, b: &Block, name: String) -> Result<Assignment, ParseError> {
    let mut values = BTreeMap::new();
    for s in &b.body {
        let (k, v) = s.text.split_once('=').ok_or_else(|| syntax(s.line, "expected `<entry>=<card>`"))?;
        let e = Entry::from_key(k.trim()).ok_or_else(|| syntax(s.line, format!("unknown entry `{}`", k.trim())))?;
        if values.insert(e, Names { ctx }.get(s.line, v)?).is_some() {
            return Err(syntax(s.line, format!("entry `{}` assigned twice", e.key())));
        }
    }
    Ok(Assignment { name, values })
}

pub fn parse(text: &str) -> Result<RecipeFile, ParseError> {
    let bs = blocks(text)?;
    let mut ctx = None;
    for b in &bs {
        if b.kind == "context" {
            if b.name.is_some() {
                return Err(syntax(b.line, "the context block takes no name"));
            }
            if ctx.is_some() {
                return Err(syntax(b.line, "only one context block is allowed"));
            }
            ctx = Some(parse_context(b)?);
        }
    }
    let ctx = match ctx {
        Some(c) => c,
        None => build_context(&[]).expect("empty context"),
    };
    let mut file = RecipeFile { ctx, recipes: vec![], models: vec![], plans: vec![], assignments: vec![] };
    let mut seen = HashSet::new();
    for b in bs {
        if b.kind == "context" {
            continue;
        }
        let name = b.name.clone().ok_or_else(|| syntax(b.line, format!("`{}` block needs a name", b.kind)))?;
        if !is_ident(&name) {
            return Err(syntax(b.line, format!("bad block name `{name}`")));
        }
        if !seen.insert((b.kind.clone(), name.clone())) {
            return Err(syntax(b.line, format!("{} {name} defined twice", b.kind)));
        }
        match b.kind.as_str() {
            "recipe" => file.recipes.push(parse_recipe(&file.ctx, &b, name)?),
            "model" => file.models.push(parse_model(&file.ctx, &b, name)?),
            "plan" => file.plans.push(parse_plan(&file.ctx, &b, name)?),
            "assign" => file.assignments.push(parse_assignment(&file.ctx, &b, name)?),
            k => return Err(syntax(b.line, format!("unknown block `{k}`"))),
        }
    }
    Ok(file)
}

impl fmt::Display for RecipeFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "context {{")?;
        for d in self.ctx.declarations() {
            match d {
                Declaration::Card { name, regular } => {
                    writeln!(f, "  card {name}{};", if *regular { " regular" } else { "" })?
                }
                Declaration::Le(a, b) => writeln!(f, "  le {a} {b};")?,
                Declaration::Lt(a, b) => writeln!(f, "  lt {a} {b};")?,
                Declaration::Assume(a) => writeln!(f, "  assume {a};")?,
            }
        }
        writeln!(f, "}}")?;
        for r in &self.recipes {
            writeln!(f, "recipe {} {{\n  length {};\n  cc {};", r.name, r.length, r.cc)?;
            for s in &r.slots {
                write!(f, "  slot {}", s.class)?;
                if s.cofinal {
                    write!(f, " cofinal")?;
                }
                if let Some(bk) = &s.bookkeeping {
                    write!(f, " bookkeeping {} upto {}", bk.system, bk.up_to)?;
                }
                writeln!(f, ";")?;
            }
            writeln!(f, "}}")?;
        }
        for m in &self.models {
            let ps: Vec<&str> = m.params.iter().map(|p| p.as_str()).collect();
            writeln!(f, "model {} {{\n  axiom {}({});\n}}", m.name, m.theorem.name(), ps.join(","))?;
        }
        for p in &self.plans {
            let ps: Vec<&str> = p.base.iter().map(|c| c.as_str()).collect();
            writeln!(f, "plan {} {{\n  base gksmax({});", p.name, ps.join(","))?;
            for c in &p.steps {
                match (&c.kind, &c.length) {
                    (ChainKind::Final, _) => writeln!(f, "  final ({});", c.width)?,
                    (k, Some(l)) => writeln!(f, "  chain {k} ({l}, {}, {});", c.closure, c.width)?,
                    (k, None) => writeln!(f, "  chain {k} (?, {}, {});", c.closure, c.width)?,
                }
            }
            writeln!(f, "}}")?;
        }
        for a in &self.assignments {
            writeln!(f, "assign {} {{", a.name)?;
            for (e, v) in &a.values {
                writeln!(f, "  {}={v};", e.key())?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}
