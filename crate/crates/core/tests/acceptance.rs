//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cichon::cardctx::{CardContext, CardinalName};
use cichon::finrel::{self, ExtNat, FinSys, Limits};
use cichon::forge::{self, DerivedModel};
use cichon::submodel::{self, PlanRun};
use cichon::tukeycalc::{self, Atom, Entry, RegeneratedRules, SysExpr, ViolationKind};

const SEED: u64 = 0x0C1C_4015;

fn n(s: &str) -> CardinalName {
    s.into()
}

// ---- brute-force oracle, kept apart from the library code ----

fn subsets(n: usize) -> impl Iterator<Item = u64> {
    let mut all: Vec<u64> = (0..1u64 << n).collect();
    all.sort_by_key(|s| s.count_ones());
    all.into_iter()
}

fn brute_b(r: &FinSys) -> ExtNat {
    // smallest set of challenges with no common response
    for s in subsets(r.x_size()) {
        let bounded = (0..r.y_size()).any(|y| (0..r.x_size()).all(|x| s >> x & 1 == 0 || r.related(x, y)));
        if !bounded {
            return ExtNat::Fin(s.count_ones());
        }
    }
    ExtNat::Top
}

fn brute_d(r: &FinSys) -> ExtNat {
    for s in subsets(r.y_size()) {
        let dominating = (0..r.x_size()).all(|x| (0..r.y_size()).any(|y| s >> y & 1 == 1 && r.related(x, y)));
        if dominating {
            return ExtNat::Fin(s.count_ones());
        }
    }
    ExtNat::Top
}

fn brute_dual(r: &FinSys) -> FinSys {
    FinSys::from_fn(r.y_size(), r.x_size(), |y, x| !r.related(x, y))
}

fn maps(len: usize, range: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|m| (0..range).map(move |v| [m.clone(), vec![v]].concat())).collect();
    }
    out
}

/// Every pair of maps, checked against the definition of a connection.
fn brute_tukey(r: &FinSys, r2: &FinSys) -> bool {
    let minus = maps(r.x_size(), r2.x_size());
    let plus = maps(r2.y_size(), r.y_size());
    minus.iter().any(|pm| {
        plus.iter().any(|pp| {
            (0..r.x_size()).all(|x| (0..r2.y_size()).all(|y2| !r2.related(pm[x], y2) || r.related(x, pp[y2])))
        })
    })
}

fn random_sys(rng: &mut ChaCha8Rng, max_x: usize, max_y: usize) -> FinSys {
    let xs = rng.gen_range(1..=max_x);
    let ys = rng.gen_range(1..=max_y);
    let p = [0.15, 0.4, 0.6, 0.9][rng.gen_range(0..4)];
    let bits: Vec<bool> = (0..xs * ys).map(|_| rng.gen_bool(p)).collect();
    FinSys::from_fn(xs, ys, |x, y| bits[x * ys + y])
}

// ---- criteria ----

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { ok: false, detail: detail.into() }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut tops = 0;
    for k in 0..500 {
        let r = random_sys(&mut rng, 6, 6);
        let dual = finrel::dual(&r);
        if dual != brute_dual(&r) {
            return fail(format!("instance {k}: dual differs from the negated transpose"));
        }
        let (b, d) = (finrel::b_num(&r).unwrap(), finrel::d_num(&r).unwrap());
        let (bd, dd) = (finrel::b_num(&dual).unwrap(), finrel::d_num(&dual).unwrap());
        if (b, d) != (brute_b(&r), brute_d(&r)) {
            return fail(format!("instance {k}: b/d disagree with the oracle"));
        }
        if bd != d || dd != b {
            return fail(format!("instance {k}: b(dual)={bd} d={d}, d(dual)={dd} b={b}"));
        }
        tops += usize::from(b == ExtNat::Top) + usize::from(d == ExtNat::Top);
    }
    if tops == 0 {
        return fail("no TOP case was exercised");
    }
    pass(format!("500 systems, {tops} TOP values"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let wide = Limits { max_side: 16, ..Limits::default() };
    let (mut strict_low, mut strict_high) = (0, 0);
    for k in 0..200 {
        let r = random_sys(&mut rng, 4, 4);
        let s = random_sys(&mut rng, 4, 4);
        let p = finrel::product_with(&r, &s, &wide).unwrap();
        let pb = finrel::b_num_with(&p, &wide).unwrap();
        let pd = finrel::d_num_with(&p, &wide).unwrap();
        if (pb, pd) != (brute_b(&p), brute_d(&p)) {
            return fail(format!("pair {k}: product b/d disagree with the oracle"));
        }
        let (b1, d1, b2, d2) = (brute_b(&r), brute_d(&r), brute_b(&s), brute_d(&s));
        if pb != b1.min(b2) {
            return fail(format!("pair {k}: b(product)={pb}, min={}", b1.min(b2)));
        }
        let (lo, hi) = (d1.max(d2), d1.times(d2));
        if pd < lo || pd > hi {
            return fail(format!("pair {k}: d(product)={pd} outside [{lo}, {hi}]"));
        }
        strict_low += usize::from(pd > lo);
        strict_high += usize::from(pd < hi);
    }
    pass(format!("200 pairs; d strictly above max in {strict_low}, strictly below product in {strict_high}"))
}

/// All systems with both sides at most 3, in a fixed order.
fn small_systems() -> Vec<FinSys> {
    let mut out = Vec::new();
    for xs in 1..=3 {
        for ys in 1..=3 {
            for bits in 0..1u64 << (xs * ys) {
                out.push(FinSys::from_fn(xs, ys, |x, y| bits >> (x * ys + y) & 1 == 1));
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let all = small_systems();
    let (mut found, mut absent) = (0, 0);
    for k in 0..100 {
        let r = &all[(37 * k + 11) % all.len()];
        let r2 = &all[(101 * k + 5) % all.len()];
        let m = finrel::tukey_search(r, r2).unwrap();
        if m.is_some() != brute_tukey(r, r2) {
            return fail(format!("pair {k}: search disagrees with exhaustive enumeration"));
        }
        match m {
            Some(m) => {
                found += 1;
                if !m.validates(r, r2) {
                    return fail(format!("pair {k}: returned morphism does not validate"));
                }
                if brute_b(r2) > brute_b(r) || brute_d(r) > brute_d(r2) {
                    return fail(format!("pair {k}: monotonicity fails"));
                }
                if !m.dual().validates(&brute_dual(r2), &brute_dual(r)) {
                    return fail(format!("pair {k}: swapped pair is not a connection between the duals"));
                }
            }
            None => absent += 1,
        }
    }
    if found == 0 || absent == 0 {
        return fail(format!("degenerate enumeration: {found} found, {absent} absent"));
    }
    pass(format!("100 pairs, {found} connections, {absent} refuted"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    // the nominal space |X'|^|X| * |Y|^|Y'| reaches 4^4 * 4^11
    let wide = Limits { max_side: 16, max_search: 1 << 40 };
    let mut agree = 0;
    let mut bounded_count = 0;
    for j in 0..50 {
        let ys = rng.gen_range(1..=4);
        let p = [0.3, 0.5, 0.7, 0.9][rng.gen_range(0..4)];
        let bits: Vec<bool> = (0..4 * ys).map(|_| rng.gen_bool(p)).collect();
        let r = FinSys::from_fn(4, ys, |x, y| bits[x * ys + y]);
        for k in [2, 3] {
            let (_, c) = finrel::ideal_systems(4, k).unwrap();
            let found = finrel::tukey_search_with(&r, &c, &wide).unwrap();
            // every set of fewer than k challenges has a common response
            let bounded = (0..16u64)
                .filter(|s| (s.count_ones() as usize) < k)
                .all(|s| (0..ys).any(|y| (0..4).all(|x| s >> x & 1 == 0 || r.related(x, y))));
            if found.is_some() != bounded {
                return fail(format!("system {j}, k={k}: search {} but bounded={bounded}", found.is_some()));
            }
            if let Some(m) = found {
                if !m.validates(&r, &c) {
                    return fail(format!("system {j}, k={k}: morphism does not validate"));
                }
            }
            if finrel::small_sets_bounded(&r, k) != bounded {
                return fail(format!("system {j}, k={k}: small_sets_bounded disagrees"));
            }
            agree += 1;
            bounded_count += usize::from(bounded);
        }
    }
    pass(format!("{agree}/100 agree, {bounded_count} bounded"))
}

fn expect_values(m: &DerivedModel, want: &[(Entry, &str)]) -> Result<(), String> {
    for &(e, v) in want {
        let got = m.constellation.get(e);
        if got.pinned() != Some(&n(v)) {
            return Err(format!("{}: {e} is {got}, expected {v}", m.name));
        }
    }
    Ok(())
}

fn timed<T>(limit: Duration, what: &str, f: impl FnOnce() -> T) -> Result<T, String> {
    let t = Instant::now();
    let out = f();
    let el = t.elapsed();
    if el > limit {
        return Err(format!("{what} took {el:?}, limit {limit:?}"));
    }
    Ok(out)
}

fn run_builtin(name: &str) -> Result<(CardContext, DerivedModel), String> {
    let (ctx, model) = forge::builtin(name).map_err(|e| e.to_string())?;
    let m = timed(Duration::from_secs(1), name, || model.run(&ctx))?.map_err(|e| format!("{name}: {e}"))?;
    Ok((ctx, m))
}

fn warmup_table(name: &str) -> Vec<(Entry, &'static str)> {
    use Entry::*;
    let l = "lambda";
    let a = "aleph1";
    let rows: [(Entry, [&str; 5]); 11] = [
        //         cohen random evdiff hechler loc
        (AddN, [a, a, a, a, l]),
        (CovN, [a, l, a, a, l]),
        (AddM, [a, a, a, l, l]),
        (B, [a, a, a, l, l]),
        (NonM, [a, l, l, l, l]),
        (CovM, [l, l, l, l, l]),
        (D, [l, l, l, l, l]),
        (CofM, [l, l, l, l, l]),
        (NonN, [l, l, l, l, l]),
        (CofN, [l, l, l, l, l]),
        (C, [l, l, l, l, l]),
    ];
    let col = forge::WARMUPS.iter().position(|w| *w == name).expect("warm-up");
    rows.iter().map(|(e, vals)| (*e, vals[col])).collect()
}

fn criterion_5() -> Outcome {
    let mut done = Vec::new();
    for name in forge::WARMUPS {
        let (_, m) = match run_builtin(name) {
            Ok(x) => x,
            Err(e) => return fail(e),
        };
        if let Err(e) = expect_values(&m, &warmup_table(name)) {
            return fail(e);
        }
        done.push(name);
    }
    pass(format!("{} pinned", done.join(", ")))
}

fn theorem_table(name: &str) -> Vec<(Entry, &'static str)> {
    use Entry::*;
    let v: [&str; 11] = match name {
        //         addN covN addM b nonM covM d cofM nonN cofN c
        "mod1" => ["1", "2", "3", "3", "4", "4", "5", "5", "5", "5", "5"],
        "mod2" => ["1", "2", "3", "3", "3", "4", "4", "4", "4", "4", "4"],
        "mod3" => ["1", "3", "2", "2", "3", "3", "4", "4", "3", "4", "4"],
        "mod5" => ["1", "2", "3", "3", "3", "3", "3", "3", "4", "4", "4"],
        _ => unreachable!(),
    };
    let names = ["lambda1", "lambda2", "lambda3", "lambda4", "lambda5"];
    let order = [AddN, CovN, AddM, B, NonM, CovM, D, CofM, NonN, CofN, C];
    order.iter().zip(v).map(|(e, k)| (*e, names[k.parse::<usize>().unwrap() - 1])).collect()
}

/// The conclusions of each theorem as Tukey equivalences.
fn theorem_facts(name: &str) -> Vec<(SysExpr, SysExpr)> {
    let r = |i: usize| SysExpr::atom(Atom::PRS[i - 1]);
    let ci = |top: &str, t: &str| SysExpr::cideal(top, t);
    let id = |top: &str, t: &str| SysExpr::ideal(top, t);
    let mut out = Vec::new();
    let ideal_pair = |out: &mut Vec<(SysExpr, SysExpr)>, i: usize, top: &str, t: &str| {
        out.push((r(i), ci(top, t)));
        out.push((ci(top, t), id(top, t)));
    };
    match name {
        "mod1" => {
            for (i, t) in [(1, "lambda1"), (2, "lambda2"), (3, "lambda3")] {
                ideal_pair(&mut out, i, "lambda5", t);
            }
            out.push((r(4), SysExpr::card("lambda4")));
        }
        "mod2" => {
            for (i, t) in [(1, "lambda1"), (2, "lambda2"), (3, "lambda3")] {
                ideal_pair(&mut out, i, "lambda4", t);
            }
            out.push((r(4), r(3)));
            out.push((r(4), ci("lambda4", "lambda3")));
        }
        "mod3" => {
            ideal_pair(&mut out, 1, "lambda4", "lambda1");
            ideal_pair(&mut out, 3, "lambda4", "lambda2");
            out.push((r(2), SysExpr::card("lambda3")));
            out.push((r(4), SysExpr::card("lambda3")));
        }
        "mod5" => {
            ideal_pair(&mut out, 1, "lambda4", "lambda1");
            ideal_pair(&mut out, 2, "lambda4", "lambda2");
            out.push((r(3), SysExpr::card("lambda3")));
            out.push((r(4), SysExpr::card("lambda3")));
        }
        _ => unreachable!(),
    }
    out
}

fn criterion_6() -> Outcome {
    let mut facts = 0;
    for name in forge::THEOREMS {
        let (_, m) = match run_builtin(name) {
            Ok(x) => x,
            Err(e) => return fail(e),
        };
        for (a, b) in theorem_facts(name) {
            if !m.db.equivalent(&a, &b) {
                return fail(format!("{name}: {a} and {b} not derived equivalent"));
            }
            facts += 1;
        }
        if let Err(e) = expect_values(&m, &theorem_table(name)) {
            return fail(e);
        }
    }
    pass(format!("{facts} conclusion equivalences, 4 constellations pinned"))
}

/// One table row: members as single names or `[lo, hi]` intervals, then b, d.
type Row = (&'static [&'static str], &'static str, &'static str);

const TABLES: [(&str, [Row; 4]); 9] = {
    const L4: &[&str] = &["lambda4b", "lambda4d"];
    [
        (
            "initial",
            [
                (&["[theta4, theta_inf]"], "theta4", "theta_inf"),
                (&["[theta3, theta_inf]"], "theta3", "theta_inf"),
                (&["[theta2, theta_inf]"], "theta2", "theta_inf"),
                (&["[theta1, theta_inf]"], "theta1", "theta_inf"),
            ],
        ),
        (
            "step 1.1",
            [
                (&["theta4", "lambda4d"], "lambda4d", "theta4"),
                (&["[theta3, theta4]", "lambda4d"], "lambda4d", "theta4"),
                (&["[theta2, theta4]", "lambda4d"], "lambda4d", "theta4"),
                (&["[theta1, theta4]", "lambda4d"], "lambda4d", "theta4"),
            ],
        ),
        (
            "step 1.2",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["[theta3, theta4m]", "lambda4b", "lambda4d"], "lambda4b", "theta4m"),
                (&["[theta2, theta4m]", "lambda4b", "lambda4d"], "lambda4b", "theta4m"),
                (&["[theta1, theta4m]", "lambda4b", "lambda4d"], "lambda4b", "theta4m"),
            ],
        ),
        (
            "step 2.1",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["theta3", "lambda4b", "lambda4d", "lambda3d"], "lambda4b", "theta3"),
                (&["[theta2, theta3]", "lambda4b", "lambda4d", "lambda3d"], "lambda4b", "theta3"),
                (&["[theta1, theta3]", "lambda4b", "lambda4d", "lambda3d"], "lambda4b", "theta3"),
            ],
        ),
        (
            "step 2.2",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "lambda3d"),
                (&["[theta2, theta3m]", "lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "theta3m"),
                (&["[theta1, theta3m]", "lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "theta3m"),
            ],
        ),
        (
            "step 3.1",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "lambda3d"),
                (&["theta2", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d"], "lambda3b", "theta2"),
                (
                    &["[theta1, theta2]", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d"],
                    "lambda3b",
                    "theta2",
                ),
            ],
        ),
        (
            "step 3.2",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "lambda3d"),
                (&["lambda2b", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d"], "lambda2b", "lambda2d"),
                (
                    &["[theta1, theta2m]", "lambda2b", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d"],
                    "lambda2b",
                    "theta2m",
                ),
            ],
        ),
        (
            "step 4.1",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "lambda3d"),
                (&["lambda2b", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d"], "lambda2b", "lambda2d"),
                (
                    &["theta1", "lambda2b", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d", "lambda1d"],
                    "lambda2b",
                    "theta1",
                ),
            ],
        ),
        (
            "step 4.2",
            [
                (L4, "lambda4b", "lambda4d"),
                (&["lambda3b", "lambda4b", "lambda4d", "lambda3d"], "lambda3b", "lambda3d"),
                (&["lambda2b", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d"], "lambda2b", "lambda2d"),
                (
                    &["lambda1b", "lambda2b", "lambda3b", "lambda4b", "lambda4d", "lambda3d", "lambda2d", "lambda1d"],
                    "lambda1b",
                    "lambda1d",
                ),
            ],
        ),
    ]
};

fn expand(ctx: &CardContext, members: &[&str]) -> Vec<CardinalName> {
    let mut out = Vec::new();
    for m in members {
        if let Some(inner) = m.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let (lo, hi) = inner.split_once(", ").expect("interval");
            out.extend(ctx.regulars_between(&n(lo), &n(hi)));
        } else {
            out.push(n(m));
        }
    }
    ctx.sort_names(&mut out);
    out.dedup();
    out
}

fn run_canonical() -> Result<(CardContext, PlanRun), String> {
    let file = submodel::cichon_max_file();
    let plan = file.plan("cichon_max").ok_or("no canonical plan")?.clone();
    let run = timed(Duration::from_secs(1), "canonical plan", || submodel::run_plan(&file.ctx, &plan))?
        .map_err(|e| e.to_string())?;
    Ok((file.ctx, run))
}

fn criterion_7() -> Outcome {
    let (ctx, run) = match run_canonical() {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    if run.log.snapshots.len() != 9 {
        return fail(format!("{} snapshots", run.log.snapshots.len()));
    }
    let mut cells = 0;
    for ((label, rows), snap) in TABLES.iter().zip(&run.log.snapshots) {
        if snap.label != *label {
            return fail(format!("snapshot {} where {label} was expected", snap.label));
        }
        for (k, (members, b, d)) in rows.iter().enumerate() {
            let i = 4 - k;
            let st = &snap.states[i - 1];
            let want = expand(&ctx, members);
            if st.below != want {
                return fail(format!("{label}, row {i}: below {:?}, expected {want:?}", st.below));
            }
            if st.b != n(b) || st.d != n(d) {
                return fail(format!("{label}, row {i}: b={} d={}, expected b={b} d={d}", st.b, st.d));
            }
            cells += 3;
        }
    }
    let finals = [
        (Entry::AddN, "lambda1b"),
        (Entry::CovN, "lambda2b"),
        (Entry::AddM, "lambda3b"),
        (Entry::B, "lambda3b"),
        (Entry::NonM, "lambda4b"),
        (Entry::CovM, "lambda4d"),
        (Entry::D, "lambda3d"),
        (Entry::CofM, "lambda3d"),
        (Entry::NonN, "lambda2d"),
        (Entry::CofN, "lambda1d"),
        (Entry::C, "lambdac"),
    ];
    for (e, v) in finals {
        if run.constellation.get(e).pinned() != Some(&n(v)) {
            return fail(format!("final {e} is {}, expected {v}", run.constellation.get(e)));
        }
    }
    for i in 1..=4 {
        let parts: Vec<SysExpr> = (i..=4)
            .flat_map(|j| [SysExpr::card(format!("lambda{j}d")), SysExpr::card(format!("lambda{j}b"))])
            .collect();
        let want = SysExpr::prod(parts);
        match run.log.product_bounds.get(&i) {
            Some(got) if *got == want => {}
            other => return fail(format!("Lambda_{i} recorded as {other:?}, expected {want}")),
        }
        let r = SysExpr::atom(Atom::PRS[i - 1]);
        if !run.db.holds(&r, &want) {
            return fail(format!("R_{i} <= Lambda_{i} not in the database"));
        }
    }
    pass(format!("9 tables, {cells} cells, final constellation and 4 product bounds"))
}

fn criterion_8() -> Outcome {
    let mut accepted = 0;
    let mut check = |ctx: &CardContext, what: &str, a: BTreeMap<Entry, CardinalName>| -> Result<(), String> {
        let v = tukeycalc::check_assignment(ctx, &a).map_err(|e| format!("{what}: {e}"))?;
        if !v.is_empty() {
            return Err(format!("{what} rejected: {}", v[0]));
        }
        accepted += 1;
        Ok(())
    };
    for name in forge::WARMUPS.iter().chain(&forge::THEOREMS).chain(&forge::AXIOMS) {
        let (ctx, m) = match run_builtin(name) {
            Ok(x) => x,
            Err(e) => return fail(e),
        };
        let Some(a) = m.constellation.assignment() else { return fail(format!("{name} not pinned")) };
        if let Err(e) = check(&ctx, name, a) {
            return fail(e);
        }
    }
    let (ctx, run) = match run_canonical() {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let Some(base) = run.constellation.assignment() else { return fail("canonical plan not pinned") };
    if let Err(e) = check(&ctx, "cichon_max", base.clone()) {
        return fail(e);
    }
    let cases: [(&str, Entry, &str, ViolationKind); 5] = [
        ("arrow", Entry::CovN, "lambda4d", ViolationKind::Arrow(Entry::CovN, Entry::NonM)),
        ("add(M) equation", Entry::AddM, "lambda2b", ViolationKind::AddMEquation),
        ("cof(M) equation", Entry::CofM, "lambda2d", ViolationKind::CofMEquation),
        ("floor", Entry::AddN, "aleph0", ViolationKind::Floor(Entry::AddN)),
        ("ceiling", Entry::CofN, "theta1", ViolationKind::Ceiling(Entry::CofN)),
    ];
    for (what, e, v, kind) in cases {
        let mut a = base.clone();
        a.insert(e, n(v));
        let got = match tukeycalc::check_assignment(&ctx, &a) {
            Ok(got) => got,
            Err(err) => return fail(format!("{what}: {err}")),
        };
        let kinds: Vec<&ViolationKind> = got.iter().map(|x| &x.kind).collect();
        if kinds != [&kind] {
            return fail(format!("{what}: expected only {kind:?}, got {kinds:?}"));
        }
    }
    pass(format!("{accepted} constellations accepted, 5 violations identified"))
}

fn criterion_9() -> Outcome {
    let mut replayed = 0;
    for name in forge::WARMUPS.iter().chain(&forge::THEOREMS).chain(&forge::AXIOMS) {
        let (ctx, model) = forge::builtin(name).unwrap();
        let m = match model.run(&ctx) {
            Ok(m) => m,
            Err(e) => return fail(format!("{name}: {e}")),
        };
        let regenerated = match forge::regenerate(&ctx, &model) {
            Ok(r) => r,
            Err(e) => return fail(format!("{name}: {e}")),
        };
        if let Err(e) = replay_text(&ctx, &m.db, &m.trace(), regenerated) {
            return fail(format!("{name}: {e}"));
        }
        replayed += m.db.facts().len();
    }
    let (ctx, run) = match run_canonical() {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let plan = submodel::cichon_max_plan();
    let regenerated = submodel::plan_facts(&submodel::tables(&ctx, &plan).unwrap());
    let text: String = run.db.facts().iter().map(|f| format!("{f}\n")).collect();
    if let Err(e) = replay_text(&ctx, &run.db, &text, regenerated) {
        return fail(format!("cichon_max: {e}"));
    }
    replayed += run.db.facts().len();
    pass(format!("{replayed}/{replayed} facts replayed from printed traces"))
}

/// Parse a printed trace back and replay every line of it.
fn replay_text(
    ctx: &CardContext,
    db: &tukeycalc::FactDB,
    text: &str,
    regenerated: Vec<tukeycalc::RuleFact>,
) -> Result<(), String> {
    let facts = text
        .lines()
        .map(|l| tukeycalc::parse_trace_line(ctx, l))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    if facts.as_slice() != db.facts() {
        return Err("printed trace does not parse back to the database".into());
    }
    let oracle = RegeneratedRules(regenerated);
    let top = db.c_top();
    for f in &facts {
        tukeycalc::replay_fact(ctx, &top, &facts, f, &oracle).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    type Criterion = (&'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("duality identities", 10, criterion_1),
        ("product laws", 30, criterion_2),
        ("monotonicity and dual connections", 60, criterion_3),
        ("small-set boundedness equivalence", 120, criterion_4),
        ("warm-up constellations", 5, criterion_5),
        ("four theorem models", 4, criterion_6),
        ("submodel tables", 1, criterion_7),
        ("assignment checker", 30, criterion_8),
        ("trace replay", 60, criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, limit, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut out = f();
        let el = t.elapsed();
        if el > Duration::from_secs(*limit) {
            out = fail(format!("{} (took {el:.2?}, limit {limit}s)", out.detail));
        }
        let tag = if out.ok { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} {name} [{el:.2?}] {}", k + 1, out.detail);
        failed += usize::from(!out.ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
