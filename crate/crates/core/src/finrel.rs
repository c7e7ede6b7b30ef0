//! Finite relational systems and exact computation of their b/d numbers.
//!
//! Sets are `u64` bitmasks, so every side of a system has at most 64
//! elements; the solvers refuse anything above [`Limits::max_side`].

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A natural number or `Top` when no witness set exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ExtNat {
    Fin(u32),
    Top,
}

impl ExtNat {
    pub fn times(self, other: ExtNat) -> ExtNat {
        match (self, other) {
            (ExtNat::Fin(a), ExtNat::Fin(b)) => ExtNat::Fin(a * b),
            _ => ExtNat::Top,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Top => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FinError {
    #[error("system side of size {0} exceeds the limit {1}")]
    SizeLimit(usize, usize),
    #[error("tukey search space {0} exceeds the limit {1}")]
    SearchSpaceTooLarge(u128, u128),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("relation is not a preorder: {0}")]
    NotPreorder(String),
    #[error("parse error on line {0}: {1}")]
    Parse(usize, String),
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_side: usize,
    pub max_search: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_side: 12, max_search: 100_000_000 }
    }
}

/// `rel[x]` is the bitmask of `y` with `x ⊏ y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinSys {
    x_size: usize,
    y_size: usize,
    rel: Vec<u64>,
}

impl FinSys {
    pub fn new(x_size: usize, y_size: usize, rel: Vec<u64>) -> Result<FinSys, FinError> {
        if x_size == 0 || y_size == 0 {
            return Err(FinError::BadParameters("both sides must be non-empty".into()));
        }
        if x_size > 64 || y_size > 64 {
            return Err(FinError::SizeLimit(x_size.max(y_size), 64));
        }
        if rel.len() != x_size {
            return Err(FinError::BadParameters(format!("expected {x_size} rows, got {}", rel.len())));
        }
        let ymask = full(y_size);
        if rel.iter().any(|r| r & !ymask != 0) {
            return Err(FinError::BadParameters("relation row wider than y side".into()));
        }
        Ok(FinSys { x_size, y_size, rel })
    }

    pub fn from_fn(x_size: usize, y_size: usize, f: impl Fn(usize, usize) -> bool) -> FinSys {
        let rel = (0..x_size).map(|x| (0..y_size).filter(|&y| f(x, y)).fold(0u64, |m, y| m | 1 << y)).collect();
        FinSys::new(x_size, y_size, rel).expect("well formed")
    }

    pub fn identity(n: usize) -> FinSys {
        FinSys::from_fn(n, n, |x, y| x == y)
    }

    pub fn leq_chain(n: usize) -> FinSys {
        FinSys::from_fn(n, n, |x, y| x <= y)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.rel[x] >> y & 1 == 1
    }

    /// `{x : x ⊏ y}` as a mask over X.
    pub fn cone(&self, y: usize) -> u64 {
        (0..self.x_size).filter(|&x| self.related(x, y)).fold(0, |m, x| m | 1 << x)
    }

    fn check(&self, limits: &Limits) -> Result<(), FinError> {
        let side = self.x_size.max(self.y_size);
        if side > limits.max_side {
            return Err(FinError::SizeLimit(side, limits.max_side));
        }
        Ok(())
    }
}

fn full(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Minimum number of indices `j` such that every family member intersects
/// `{j}`; i.e. an exact minimum hitting set over `universe` elements, where
/// `family[k]` is a mask of elements. `None` if some member is empty.
fn min_hitting_set(universe: usize, family: &[u64]) -> Option<u32> {
    if family.contains(&0) {
        return None;
    }
    let mut fam: Vec<u64> = family.to_vec();
    fam.sort_unstable();
    fam.dedup();
    // a superset of another member is hit whenever the subset is
    let minimal: Vec<u64> = fam.iter().copied().filter(|&s| !fam.iter().any(|&t| t != s && t & s == t)).collect();
    let upper = greedy_hitting(universe, &minimal);
    let mut best = upper;
    branch(&minimal, 0, 0, &mut best);
    Some(best)
}

fn greedy_hitting(universe: usize, family: &[u64]) -> u32 {
    let mut unhit: Vec<u64> = family.to_vec();
    let mut count = 0;
    while !unhit.is_empty() {
        let pick = (0..universe)
            .max_by_key(|&e| unhit.iter().filter(|&&s| s >> e & 1 == 1).count())
            .expect("nonempty universe");
        unhit.retain(|&s| s >> pick & 1 == 0);
        count += 1;
    }
    count
}

fn branch(family: &[u64], chosen: u64, size: u32, best: &mut u32) {
    if size >= *best {
        return;
    }
    // pick the unhit member with the fewest elements
    let mut target = None;
    for &s in family {
        if s & chosen == 0 && target.is_none_or(|t: u64| s.count_ones() < t.count_ones()) {
            target = Some(s);
        }
    }
    let Some(t) = target else {
        *best = size;
        return;
    };
    let mut rest = t;
    while rest != 0 {
        let e = rest.trailing_zeros();
        rest &= rest - 1;
        branch(family, chosen | 1 << e, size + 1, best);
    }
}

/// Smallest dominating subset of Y.
pub fn d_num(r: &FinSys) -> Result<ExtNat, FinError> {
    d_num_with(r, &Limits::default())
}

pub fn d_num_with(r: &FinSys, limits: &Limits) -> Result<ExtNat, FinError> {
    r.check(limits)?;
    // x must be hit by some y in its "upper set"
    let family: Vec<u64> = r.rel.clone();
    Ok(min_hitting_set(r.y_size, &family).map_or(ExtNat::Top, ExtNat::Fin))
}

/// Smallest unbounded subset of X.
pub fn b_num(r: &FinSys) -> Result<ExtNat, FinError> {
    b_num_with(r, &Limits::default())
}

pub fn b_num_with(r: &FinSys, limits: &Limits) -> Result<ExtNat, FinError> {
    r.check(limits)?;
    let xmask = full(r.x_size);
    let family: Vec<u64> = (0..r.y_size).map(|y| xmask & !r.cone(y)).collect();
    Ok(min_hitting_set(r.x_size, &family).map_or(ExtNat::Top, ExtNat::Fin))
}

pub fn dual(r: &FinSys) -> FinSys {
    FinSys::from_fn(r.y_size, r.x_size, |y, x| !r.related(x, y))
}

pub fn product(r: &FinSys, s: &FinSys) -> Result<FinSys, FinError> {
    product_with(r, s, &Limits::default())
}

pub fn product_with(r: &FinSys, s: &FinSys, limits: &Limits) -> Result<FinSys, FinError> {
    let xs = r.x_size * s.x_size;
    let ys = r.y_size * s.y_size;
    let side = xs.max(ys);
    if side > limits.max_side || side > 64 {
        return Err(FinError::SizeLimit(side, limits.max_side.min(64)));
    }
    // pair (a, b) is encoded as a * |second side| + b
    Ok(FinSys::from_fn(xs, ys, |x, y| r.related(x / s.x_size, y / s.y_size) && s.related(x % s.x_size, y % s.y_size)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TukeyMorphism {
    pub psi_minus: Vec<usize>,
    pub psi_plus: Vec<usize>,
}

impl TukeyMorphism {
    /// Does this pair witness `r ⪯ r2`?
    pub fn validates(&self, r: &FinSys, r2: &FinSys) -> bool {
        self.psi_minus.len() == r.x_size
            && self.psi_plus.len() == r2.y_size
            && self.psi_minus.iter().all(|&x2| x2 < r2.x_size)
            && self.psi_plus.iter().all(|&y| y < r.y_size)
            && (0..r.x_size)
                .all(|x| (0..r2.y_size).all(|y2| !r2.related(self.psi_minus[x], y2) || r.related(x, self.psi_plus[y2])))
    }

    /// The swapped pair, a connection between the duals in reverse.
    pub fn dual(&self) -> TukeyMorphism {
        TukeyMorphism { psi_minus: self.psi_plus.clone(), psi_plus: self.psi_minus.clone() }
    }
}

/// Search for a connection `r ⪯ r2`.
pub fn tukey_search(r: &FinSys, r2: &FinSys) -> Result<Option<TukeyMorphism>, FinError> {
    tukey_search_with(r, r2, &Limits::default())
}

pub fn tukey_search_with(r: &FinSys, r2: &FinSys, limits: &Limits) -> Result<Option<TukeyMorphism>, FinError> {
    r.check(limits)?;
    r2.check(limits)?;
    let space = (r2.x_size as u128)
        .checked_pow(r.x_size as u32)
        .and_then(|a| (r.y_size as u128).checked_pow(r2.y_size as u32).and_then(|b| a.checked_mul(b)))
        .unwrap_or(u128::MAX);
    // refutation by monotonicity comes first and is cheap
    if b_num_with(r2, limits)? > b_num_with(r, limits)? || d_num_with(r, limits)? > d_num_with(r2, limits)? {
        return Ok(None);
    }
    if space > limits.max_search {
        return Err(FinError::SearchSpaceTooLarge(space, limits.max_search));
    }
    let mut psi_minus = vec![0usize; r.x_size];
    loop {
        if let Some(psi_plus) = complete_plus(r, r2, &psi_minus) {
            return Ok(Some(TukeyMorphism { psi_minus, psi_plus }));
        }
        // next Ψ− in lexicographic order (last coordinate fastest)
        let mut k = r.x_size;
        loop {
            if k == 0 {
                return Ok(None);
            }
            k -= 1;
            psi_minus[k] += 1;
            if psi_minus[k] < r2.x_size {
                break;
            }
            psi_minus[k] = 0;
        }
    }
}

/// For fixed Ψ−, each y' independently needs a y bounding the preimage of
/// its cone; choose the smallest such y.
fn complete_plus(r: &FinSys, r2: &FinSys, psi_minus: &[usize]) -> Option<Vec<usize>> {
    (0..r2.y_size)
        .map(|y2| {
            let need = (0..r.x_size).filter(|&x| r2.related(psi_minus[x], y2)).fold(0u64, |m, x| m | 1 << x);
            (0..r.y_size).find(|&y| r.cone(y) & need == need)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinIdeal {
    ground_size: usize,
    members: Vec<u64>,
}

impl FinIdeal {
    pub fn new(ground_size: usize, mut members: Vec<u64>) -> Result<FinIdeal, FinError> {
        if ground_size == 0 || ground_size > 16 {
            return Err(FinError::BadParameters(format!("ground size {ground_size} out of range 1..=16")));
        }
        members.sort_unstable();
        members.dedup();
        let g = full(ground_size);
        for &m in &members {
            if m & !g != 0 {
                return Err(FinError::BadParameters("member outside the ground set".into()));
            }
            let mut sub = m;
            // every subset of a member must be a member
            loop {
                sub = (sub.wrapping_sub(1)) & m;
                if members.binary_search(&sub).is_err() {
                    return Err(FinError::BadParameters(format!("not downward closed below {m:#b}")));
                }
                if sub == 0 {
                    break;
                }
            }
        }
        for x in 0..ground_size {
            if members.binary_search(&(1 << x)).is_err() {
                return Err(FinError::BadParameters(format!("singleton {{{x}}} missing")));
            }
        }
        if members.binary_search(&g).is_ok() {
            return Err(FinError::BadParameters("the ground set itself is a member".into()));
        }
        Ok(FinIdeal { ground_size, members })
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    /// `⟨I, I, ⊆⟩`
    pub fn inclusion_system(&self) -> FinSys {
        let m = &self.members;
        FinSys::from_fn(m.len(), m.len(), |a, b| m[a] & m[b] == m[a])
    }

    /// `⟨X, I, ∈⟩`
    pub fn covering_system(&self) -> FinSys {
        let m = &self.members;
        FinSys::from_fn(self.ground_size, m.len(), |x, b| m[b] >> x & 1 == 1)
    }
}

/// Subsets of `[n]` of size `< k` as `(I_sys, C_sys)`.
pub fn ideal_systems(n: usize, k: usize) -> Result<(FinSys, FinSys), FinError> {
    if k < 1 || k > n || n > 16 {
        return Err(FinError::BadParameters(format!("need 1 <= k <= n <= 16, got n={n}, k={k}")));
    }
    if k == 1 {
        // only the empty set; singletons are missing so this is not an ideal
        // in the strict sense, but the systems are still well defined
        let members = [0u64];
        let isys = FinSys::from_fn(1, 1, |_, _| true);
        let csys = FinSys::from_fn(n, 1, |x, b| members[b] >> x & 1 == 1);
        return Ok((isys, csys));
    }
    let members: Vec<u64> = (0..1u64 << n).filter(|s| (s.count_ones() as usize) < k).collect();
    let ideal = FinIdeal::new(n, members)?;
    Ok((ideal.inclusion_system(), ideal.covering_system()))
}

/// The self-relational system of a preorder, plus whether it is directed.
pub fn from_preorder(rel: &[Vec<bool>]) -> Result<(FinSys, bool), FinError> {
    let n = rel.len();
    if n == 0 || rel.iter().any(|r| r.len() != n) {
        return Err(FinError::NotPreorder("matrix must be square and non-empty".into()));
    }
    for i in 0..n {
        if !rel[i][i] {
            return Err(FinError::NotPreorder(format!("not reflexive at {i}")));
        }
        for j in 0..n {
            for k in 0..n {
                if rel[i][j] && rel[j][k] && !rel[i][k] {
                    return Err(FinError::NotPreorder(format!("not transitive at {i},{j},{k}")));
                }
            }
        }
    }
    let sys = FinSys::from_fn(n, n, |a, b| rel[a][b]);
    let directed = (0..n).all(|a| (0..n).all(|b| (0..n).any(|c| rel[a][c] && rel[b][c])));
    Ok((sys, directed))
}

/// Is every subset of X of size `< k` bounded by a single `y`?
pub fn small_sets_bounded(r: &FinSys, k: usize) -> bool {
    let cones: Vec<u64> = (0..r.y_size).map(|y| r.cone(y)).collect();
    (0..1u64 << r.x_size).filter(|s| (s.count_ones() as usize) < k).all(|s| cones.iter().any(|&c| c & s == s))
}

pub fn parse_sys(text: &str) -> Result<FinSys, FinError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| FinError::Parse(1, "empty input".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| FinError::Parse(ln, format!("bad size `{t}`"))))
        .collect::<Result<_, _>>()?;
    let [xs, ys] = dims[..] else {
        return Err(FinError::Parse(ln, "expected `<x_size> <y_size>`".into()));
    };
    let mut rel = Vec::with_capacity(xs);
    for (ln, row) in lines {
        let bits: Vec<char> = row.chars().filter(|c| !c.is_whitespace()).collect();
        if bits.len() != ys {
            return Err(FinError::Parse(ln, format!("expected {ys} entries, got {}", bits.len())));
        }
        let mut m = 0u64;
        for (y, c) in bits.iter().enumerate() {
            match c {
                '1' => m |= 1 << y,
                '0' => {}
                _ => return Err(FinError::Parse(ln, format!("unexpected `{c}`"))),
            }
        }
        rel.push(m);
    }
    if rel.len() != xs {
        return Err(FinError::Parse(0, format!("expected {xs} rows, got {}", rel.len())));
    }
    FinSys::new(xs, ys, rel)
}

impl fmt::Display for FinSys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.x_size, self.y_size)?;
        for x in 0..self.x_size {
            let row: String = (0..self.y_size).map(|y| if self.related(x, y) { '1' } else { '0' }).collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

pub fn parse_ideal(text: &str) -> Result<FinIdeal, FinError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| FinError::Parse(1, "empty input".into()))?;
    let n: usize = header.parse().map_err(|_| FinError::Parse(ln, format!("bad ground size `{header}`")))?;
    let mut members = vec![0u64];
    for (ln, l) in lines {
        let mut m = 0u64;
        for t in l.split_whitespace() {
            let i: usize = t.parse().map_err(|_| FinError::Parse(ln, format!("bad index `{t}`")))?;
            if i >= n {
                return Err(FinError::Parse(ln, format!("index {i} outside ground set")));
            }
            m |= 1 << i;
        }
        members.push(m);
    }
    FinIdeal::new(n, members)
}

/// Exhaustive reference implementations, independent of the branch and
/// bound solver. Exponential; only for small systems.
pub mod oracle {
    use super::*;

    pub fn d_num(r: &FinSys) -> ExtNat {
        let mut best = ExtNat::Top;
        for d in 0..1u64 << r.y_size() {
            let covers = (0..r.x_size()).all(|x| (0..r.y_size()).any(|y| d >> y & 1 == 1 && r.related(x, y)));
            if covers {
                best = best.min(ExtNat::Fin(d.count_ones()));
            }
        }
        best
    }

    pub fn b_num(r: &FinSys) -> ExtNat {
        let mut best = ExtNat::Top;
        for f in 0..1u64 << r.x_size() {
            let bounded = (0..r.y_size()).any(|y| (0..r.x_size()).all(|x| f >> x & 1 == 0 || r.related(x, y)));
            if !bounded {
                best = best.min(ExtNat::Fin(f.count_ones()));
            }
        }
        best
    }

    /// Enumerates every pair of maps without the per-y' shortcut.
    pub fn tukey_exists(r: &FinSys, r2: &FinSys) -> bool {
        let total_minus = r2.x_size().pow(r.x_size() as u32);
        let total_plus = r.y_size().pow(r2.y_size() as u32);
        for a in 0..total_minus {
            let psi_minus = digits(a, r2.x_size(), r.x_size());
            for b in 0..total_plus {
                let psi_plus = digits(b, r.y_size(), r2.y_size());
                if (TukeyMorphism { psi_minus: psi_minus.clone(), psi_plus }).validates(r, r2) {
                    return true;
                }
            }
        }
        false
    }

    fn digits(mut v: usize, base: usize, len: usize) -> Vec<usize> {
        let mut out = vec![0; len];
        for slot in out.iter_mut() {
            *slot = v % base;
            v /= base;
        }
        out
    }
}
