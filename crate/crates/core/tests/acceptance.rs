//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use memcontract::callgraph::CallGraph;
use memcontract::escape::{self, Node};
use memcontract::frontend::{self, MethodRef, Resolved, Tag};
use memcontract::instrument;
use memcontract::oracle::{self, Event, Finding, GcMode, RunOptions, ValidateOptions};
use memcontract::summary::{self, Status, VerificationReport};
use memcontract::symexpr::{Coeff, Engine, GridConfig, IterSpace, Monomial};
use memcontract::{Poly, Rational, SymExpr};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use serde_json::json;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fully_verified(r: &VerificationReport) -> bool {
    r.status == Status::Verified && r.clauses.iter().all(|c| c.verdict == Status::Verified)
}

/// Lowers the bound of the clause on line `idx` by one.
fn lower_bound(src: &str, idx: usize) -> String {
    let lines: Vec<String> = src
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == idx {
                let cut = l.rfind(");").expect("clause ends with );");
                format!("{} - 1{}", &l[..cut], &l[cut..])
            } else {
                l.to_string()
            }
        })
        .collect();
    lines.join("\n")
}

/// `(line index, method, clause name)` for every bound clause.
fn bound_clauses(src: &str) -> Vec<(usize, String, String)> {
    let mut class = String::new();
    let mut method = String::new();
    let mut out = Vec::new();
    for (i, l) in src.lines().enumerate() {
        let t = l.trim_start();
        if let Some(rest) = t.strip_prefix("class ") {
            class = rest.split_whitespace().next().unwrap_or("").to_string();
        } else if t.starts_with("ctor(") {
            method = format!("{class}.{class}");
        } else if let Some(rest) = t.strip_prefix("method ") {
            method = format!("{class}.{}", &rest[..rest.find('(').unwrap()]);
        } else if t.starts_with("memreq<") || t.starts_with("esc<") {
            let class_arg = &t[t.find('<').unwrap() + 1..t.find('>').unwrap()];
            let name = if t.starts_with("memreq") {
                format!("memreq<{class_arg}>")
            } else {
                let open = t.find(">(").unwrap() + 2;
                let tag = &t[open..open + t[open..].find(',').unwrap()];
                format!("esc<{class_arg}>({tag})")
            };
            out.push((i, method.clone(), name));
        }
    }
    out
}

fn running_example() -> Outcome {
    let s = common::sample("family");
    let res = s.resolved();
    let report = summary::check_program(&res, &s.options());
    ensure(fully_verified(&report) && report.lifetimes.iter().all(|l| l.verdict == Status::Verified), || report.to_human())?;

    let clauses = bound_clauses(&s.src);
    ensure(clauses.len() >= 15, || format!("only {} clauses found", clauses.len()))?;
    for (line, method, clause) in &clauses {
        let mutated = common::load(&lower_bound(&s.src, *line));
        let r = summary::check_program(&mutated, &s.options());
        let c = r.clause(method, clause).ok_or_else(|| format!("{method} {clause} missing after mutation"))?;
        ensure(c.verdict == Status::Violated && c.witness.is_some(), || format!("{method} {clause} lowered by 1 is {}", c.verdict))?;
    }

    let (sums, _) = summary::summarize_program(&res, &s.options());
    let cf = &sums[&MethodRef::new("Town", "CreateFamily")];
    let logger = cf.mem_req_of("Logger");
    let person = cf.mem_req_of("Person");
    ensure(logger == SymExpr::int(1), || format!("memReq[Logger] = {logger}"))?;
    ensure(person == SymExpr::from_poly(Poly::var("firstNames.length")), || format!("memReq[Person] = {person}"))?;
    Ok(format!(
        "family verifies; {} single-bound mutations all violated with witnesses; CreateFamily memReq[Logger] = {logger}, memReq[Person] = {person}",
        clauses.len()
    ))
}

fn call_composition() -> Outcome {
    let s = common::sample("temporaries");
    let res = s.resolved();
    let (sums, _) = summary::summarize_program(&res, &s.options());
    let m = &sums[&MethodRef::new("A", "m")];
    let n = Poly::var("n");
    let call_part = m.call_part.get("A").cloned().unwrap_or_else(SymExpr::zero);
    ensure(call_part == SymExpr::from_poly(&n + &Poly::int(3)), || format!("call part {call_part}"))?;
    let report = summary::check_program(&res, &s.options());
    let c = report.clause("A.m", "memreq<A>").ok_or("no memreq<A> clause on A.m")?;
    ensure(c.verdict == Status::Verified && c.declared.as_deref() == Some("n+5"), || format!("{c:?}"))?;
    Ok(format!("m: calls contribute {call_part}; memReq[A] = {} verified against declared n + 5", c.computed))
}

const EXPECTED_GHOSTS: &[&str] = &[
    "ensure(m_MemReq_A <= n + 5);",
    "ensure(m_Esc_Return_A <= 2);",
    "ensure(m_Esc_Param_A <= 1);",
    "ghost var m_MemReq_A = 0;",
    "ghost var m_Esc_Return_A = 0;",
    "ghost var m_Esc_Param_A = 0;",
    "ghost m_MemReq_A += 1;",
    "ghost m_MemReq_A += 1;",
    "ghost m_Esc_Param_A += 1;",
    "ghost var maxCalls_A = 0;",
    "ghost var sumCalls_A = 0;",
    "ghost var call1_diff_A = n + 1 - 1;",
    "ghost maxCalls_A = max(maxCalls_A, call1_diff_A);",
    "ghost sumCalls_A += 1;",
    "ghost var call2_diff_A = n - 2;",
    "ghost maxCalls_A = max(maxCalls_A, call2_diff_A);",
    "ghost sumCalls_A += 2;",
    "ghost m_Esc_Return_A += 2;",
    "ghost m_MemReq_A += maxCalls_A + sumCalls_A;",
];

fn instrumentation_fidelity() -> Outcome {
    let s = common::sample("temporaries");
    let ip = instrument::instrument(&s.resolved(), &s.options());
    let text = ip.source();
    let start = text.find("method m(").ok_or("no method m")?;
    let end = start + text[start..].find("\n    }\n").ok_or("unterminated m")?;
    let ghosts: Vec<&str> = text[start..end]
        .lines()
        .map(str::trim)
        .filter(|l| l.starts_with("ghost ") || l.starts_with("ensure("))
        .collect();
    ensure(ghosts == EXPECTED_GHOSTS, || format!("ghost statements of m:\n{}", ghosts.join("\n")))?;

    let corpus = common::all();
    for c in &corpus {
        let res = c.resolved();
        let ip = instrument::instrument(&res, &c.options());
        ensure(ip.erase() == res.program, || format!("{}: erase(instrument(p)) differs from p", c.name))?;
        let reparsed = common::load(&ip.source());
        ensure(instrument::erase(&reparsed.program) == res.program, || format!("{}: printed instrumentation does not erase to p", c.name))?;
    }
    Ok(format!(
        "m carries the {} expected counter statements (3 ensures); erase after instrument is the identity on {} programs",
        EXPECTED_GHOSTS.len(),
        corpus.len()
    ))
}

fn polynomial_engine() -> Outcome {
    let s = common::sample("big_family");
    let res = s.resolved();
    let (sums, _) = summary::summarize_program(&res, &s.options());
    let esc = sums[&MethodRef::new("Town", "CreateBigFamily")].esc_of(&Tag::Return, "Person");
    let n = Poly::var("n");
    let closed = (&(&n * &n) + &n).scale(&Rational::new(1, 2));
    ensure(esc == SymExpr::from_poly(closed), || format!("esc[(Return, Person)] = {esc}"))?;
    let opts = RunOptions {
        trace: false,
        check_invariants: true,
        ..RunOptions::default()
    };
    for k in 1..=6i64 {
        let r = oracle::run(&res, "Town.CreateBigFamily", &[json!(k)], &opts).map_err(|e| e.to_string())?;
        let got = r.entry().esc_of(&Tag::Return, "Person");
        ensure(got == k * (k + 1) / 2, || format!("n = {k}: oracle counts {got}"))?;
    }
    Ok(format!("CreateBigFamily esc[(Return, Person)] = {esc}; oracle matches for n = 1..6"))
}

/// Whether a verified clause of `m` rests only on verified callee clauses.
fn trusted(report: &VerificationReport, cg: &CallGraph, m: &MethodRef) -> bool {
    let reach: BTreeSet<String> = cg.transitive(m).iter().map(ToString::to_string).collect();
    report.clauses.iter().filter(|c| reach.contains(&c.method)).all(|c| c.verdict == Status::Verified)
}

fn soundness_sweep() -> Outcome {
    let (positives, faulty) = (common::positives(), common::faulty());
    ensure(positives.len() >= 10 && faulty.len() >= 10, || format!("{} positive, {} faulty", positives.len(), faulty.len()))?;
    let mut runs = 0;
    let mut by_oracle = 0;
    for s in positives.iter().chain(&faulty) {
        let res = s.resolved();
        let report = summary::check_program(&res, &s.options());
        let mut opts = ValidateOptions {
            grid: GridConfig::with_bound(8),
            ..ValidateOptions::default()
        };
        opts.run.mode = s.mode;
        opts.run.gc = GcMode::Ideal;
        let rep = oracle::validate(&res, &opts).map_err(|e| format!("{}: {e}", s.name))?;
        runs += rep.entries.iter().map(|e| e.runs).sum::<usize>();
        let cg = CallGraph::new(&res);
        for v in &rep.violations {
            if let Finding::Bound { method, clause, observed, bound } = &v.finding {
                let verified = report.clause(&method.to_string(), clause).is_some_and(|c| c.verdict == Status::Verified);
                ensure(!(verified && trusted(&report, &cg, method)), || {
                    format!("{}: verified {method} {clause} observed {observed} > {bound} at {:?}", s.name, v.args)
                })?;
            }
        }
        if s.faulty {
            let statically = report.clauses.iter().any(|c| c.verdict == Status::Violated)
                || report.lifetimes.iter().any(|l| l.verdict == Status::Violated);
            let ensured = rep.violations.iter().any(|v| matches!(v.finding, Finding::Ensure(_)));
            by_oracle += usize::from(!rep.is_clean());
            ensure(statically || ensured, || format!("{}: not caught", s.name))?;
        } else {
            ensure(fully_verified(&report), || format!("{}: {}", s.name, report.to_human()))?;
            ensure(rep.is_clean(), || format!("{}: {}", s.name, rep.to_human()))?;
        }
    }
    Ok(format!(
        "{} positive and {} faulty programs, {runs} grid runs; no verified clause exceeded; all faulty caught ({by_oracle} also by the oracle)",
        positives.len(),
        faulty.len()
    ))
}

/// Last allocation of `class` in the body of `method`.
fn site_of(res: &Resolved, class: &str, method: &MethodRef) -> Option<u32> {
    let mut found = None;
    frontend::walk(&res.method(method).body, &mut |st| {
        if matches!(&st.kind, frontend::StmtKind::New { class: c, .. } if c == class) {
            found = Some(st.id);
        }
    });
    found
}

fn lifetime_checking() -> Outcome {
    let s = common::sample("family");
    let res = s.resolved();
    let sums = escape::escape_summaries(&res);
    let sites = escape::allocation_sites(&res.program);
    let ctor = MethodRef::new("Person", "Person");
    let logger = site_of(&res, "Logger", &ctor).ok_or("no logger allocation")?;
    let ps = &sums[&ctor];
    ensure(ps.ptg.nodes.contains(&Node::Inside(logger)), || "logger missing from the constructor graph".into())?;
    ensure(!ps.escaping.contains_key(&logger), || "logger escapes the constructor".into())?;

    let add = MethodRef::new("Family", "AddMember");
    let person = site_of(&res, "Person", &add).ok_or("no person allocation")?;
    let ag = &sums[&add].ptg;
    let this = Node::Param("this".into());
    let members = ag.successors(&this, "_Members");
    ensure(!members.is_empty() && ag.reachable(&members, &Node::Inside(person)), || {
        format!("person not reachable from this._Members:\n{}", ag.to_dot("AddMember", &sites))
    })?;

    let no_dest = s.src.replacen(
        "dest_esc(This);\n        var person",
        "var person",
        1,
    );
    ensure(no_dest != s.src, || "mutation did not apply".into())?;
    let r = summary::check_program(&common::load(&no_dest), &s.options());
    let flagged = r
        .lifetimes
        .iter()
        .any(|l| l.method == "Family.AddMember" && l.status.starts_with("escapes-but-unannotated"));
    ensure(flagged, || r.to_human())?;

    // dest_local: the static graph over-approximates, the run does not
    let d = common::sample("dest_local");
    let dres = d.resolved();
    let pick = MethodRef::new("A", "pick");
    let site = site_of(&dres, "A", &pick).ok_or("no allocation in pick")?;
    let dsum = &escape::escape_summaries(&dres)[&pick];
    ensure(dsum.escaping.contains_key(&site), || "pick's allocation is not statically escaping".into())?;
    let report = summary::check_program(&dres, &d.options());
    ensure(fully_verified(&report) && report.lifetimes.iter().all(|l| l.verdict == Status::Verified), || report.to_human())?;
    ensure(report.lifetimes.iter().any(|l| l.status == "suppressed-by-dest-local"), || report.to_human())?;
    let trace = oracle::run_point(&dres, &pick, &BTreeMap::new(), &RunOptions::default()).map_err(|e| e.to_string())?.trace;
    let escaped = trace.iter().any(|e| matches!(e, Event::Ret { activation: 1, live, .. } if !live.is_empty()));
    ensure(!escaped, || "pick's object survives the call".into())?;
    let alarm = summary::check_program(&common::load(&d.src.replace("dest_local;", "")), &d.options());
    ensure(alarm.lifetimes.iter().any(|l| l.status.starts_with("escapes-but-unannotated")), || alarm.to_human())?;
    Ok("logger captured in Person; person reachable from this via _Members; AddMember without dest_esc flagged; dest_local silences a demonstrated false alarm".into())
}

fn behavior_preservation() -> Outcome {
    let mut compared = 0;
    let mut divergences = Vec::new();
    let corpus = common::all();
    for s in &corpus {
        let orig: Resolved = s.resolved();
        let inst = frontend::resolve(instrument::instrument(&orig, &s.options()).program).map_err(|d| format!("{d:?}"))?;
        let opts = RunOptions {
            mode: s.mode,
            ..RunOptions::default()
        };
        for (m, decl) in orig.program.methods() {
            if decl.contract.memreq().next().is_none() && decl.contract.esc().next().is_none() {
                continue;
            }
            let vars: BTreeSet<String> = oracle::grid_inputs(&orig, &m).into_iter().collect();
            for p in GridConfig::with_bound(8).points(&vars).map_err(|e| e.to_string())? {
                let a = oracle::run_point(&orig, &m, &p, &opts);
                let b = oracle::run_point(&inst, &m, &p, &opts);
                match (a, b) {
                    (Ok(a), Ok(b)) if a.trace == b.trace && a.ret == b.ret => compared += 1,
                    (Err(a), Err(b)) if a.to_string() == b.to_string() => {}
                    _ => divergences.push(format!("{}: {m} at {p:?}", s.name)),
                }
            }
        }
    }
    ensure(divergences.is_empty(), || format!("{} divergences, first {}", divergences.len(), divergences[0]))?;
    Ok(format!("{compared} runs over {} programs, 0 trace divergences", corpus.len()))
}

fn symbolic_units() -> Outcome {
    let monos: Vec<(u32, u32)> = (0..=3u32).flat_map(|a| (0..=3 - a).map(move |b| (a, b))).collect();
    let strategy = (proptest::collection::vec(-5i64..=5, monos.len()), -3i64..=12, -3i64..=12, -3i64..=12);
    let cases = Cell::new(0u32);
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 1500,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let engine = Engine::default();
    runner
        .run(&strategy.prop_map(|t| t), |(coeffs, lo, hi, n)| {
            cases.set(cases.get() + 1);
            let p = Poly::from_terms(monos.iter().zip(&coeffs).map(|((a, b), c)| {
                (Monomial::from_powers([("i".to_string(), *a), ("n".to_string(), *b)]), Rational::from_int(*c))
            }));
            let space = IterSpace::interval("i", Poly::int(lo), Poly::int(hi)).unwrap();
            let got = engine.sum_over(&SymExpr::from_poly(p), &space).unwrap().value;
            let brute: i64 = (lo..=hi)
                .map(|i| monos.iter().zip(&coeffs).map(|((a, b), c)| c * i.pow(*a) * n.pow(*b)).sum::<i64>())
                .sum();
            let at: BTreeMap<String, i64> = [("n".to_string(), n)].into();
            let v = got.eval_ints(&at).unwrap();
            if v == Rational::from_int(brute) {
                Ok(())
            } else {
                Err(proptest::test_runner::TestCaseError::fail(format!("{v} != {brute}")))
            }
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("sum_over equals brute force on {} random cases (degree <= 3, coefficients in [-5, 5], endpoints in [-3, 12])", cases.get()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("running-example reproduction", running_example),
        ("call-composition arithmetic", call_composition),
        ("instrumentation fidelity", instrumentation_fidelity),
        ("polynomial engine", polynomial_engine),
        ("soundness sweep", soundness_sweep),
        ("lifetime checking", lifetime_checking),
        ("behavior preservation", behavior_preservation),
        ("symbolic unit properties", symbolic_units),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        let timely = secs <= 10.0;
        match out {
            Ok(detail) if timely => println!("PASS {} {name}: {detail} ({secs:.2}s)", i + 1),
            Ok(detail) => {
                failed += 1;
                println!("FAIL {} {name}: over the 10 s budget: {detail} ({secs:.2}s)", i + 1);
            }
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
