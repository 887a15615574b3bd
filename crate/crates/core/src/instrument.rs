//! Source-to-source counter instrumentation and its inverse.
//!
//! Each method gets ghost counters `<m>_MemReq_<C>` and `<m>_Esc_<t>_<C>`,
//! increments before allocations and calls, `maxCalls`/`sumCalls`
//! bookkeeping for callee temporaries, and `ensure` statements for its
//! declared bounds.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::ast::*;
use crate::frontend::Resolved;
use crate::lower;
use crate::summary::{self, is_opaque, Mode, Options, OBJECT};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CounterKind {
    MemReq(String),
    Esc(Tag, String),
    MaxCalls(String),
    SumCalls(String),
    CallDiff { site: u32, class: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterInfo {
    pub method: MethodRef,
    pub kind: CounterKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrumentedProgram {
    pub program: Program,
    pub counters: BTreeMap<String, CounterInfo>,
    /// Call sites whose callee consumption could not be written as source.
    pub warnings: Vec<String>,
}

impl InstrumentedProgram {
    pub fn source(&self) -> String {
        crate::frontend::print_program(&self.program)
    }

    pub fn erase(&self) -> Program {
        erase(&self.program)
    }
}

/// Counter-safe spelling of a class: `Person[]` becomes `PersonArr`.
pub fn class_ident(class: &str) -> String {
    class.replace("[]", "Arr")
}

pub fn mem_req_counter(method: &str, class: &str) -> String {
    format!("{method}_MemReq_{}", class_ident(class))
}

pub fn esc_counter(method: &str, tag: &Tag, class: &str) -> String {
    format!("{method}_Esc_{tag}_{}", class_ident(class))
}

/// Source-level bounds of a method, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bounds {
    pub mem_req: Vec<(String, Expr)>,
    pub esc: Vec<((Tag, String), Expr)>,
}

impl Bounds {
    pub fn classes(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.mem_req.iter().map(|(c, _)| c.clone()).collect();
        out.extend(self.esc.iter().map(|((_, c), _)| c.clone()));
        out
    }

    fn mem(&self, class: &str) -> Option<&Expr> {
        self.mem_req.iter().find(|(c, _)| c == class).map(|(_, e)| e)
    }
}

fn push_sum(list: &mut Vec<(String, Expr)>, k: String, e: &Expr) {
    match list.iter_mut().find(|(c, _)| *c == k) {
        Some((_, acc)) => *acc = Expr::bin(BinOp::Add, acc.clone(), e.clone()),
        None => list.push((k, e.clone())),
    }
}

/// Declared bounds in source order, collapsed as in [`summary::contract_view`].
pub fn contract_bounds(decl: &MethodDecl, mode: Mode) -> Bounds {
    let mut b = Bounds::default();
    match mode {
        Mode::ByType => {
            for (c, e) in decl.contract.memreq() {
                if b.mem(c).is_none() {
                    b.mem_req.push((c.to_string(), e.clone()));
                }
            }
            for (t, c, e) in decl.contract.esc() {
                let k = (t.clone(), c.to_string());
                if !b.esc.iter().any(|(x, _)| *x == k) {
                    b.esc.push((k, e.clone()));
                }
            }
        }
        Mode::ObjectCount => {
            let explicit = decl.contract.memreq().any(|(c, _)| c == OBJECT);
            for (c, e) in decl.contract.memreq() {
                if !explicit || c == OBJECT {
                    push_sum(&mut b.mem_req, OBJECT.into(), e);
                }
            }
            let mut by_tag: Vec<(String, Expr)> = Vec::new();
            let mut tags: Vec<Tag> = Vec::new();
            for (t, _, _) in decl.contract.esc() {
                if !tags.contains(t) {
                    tags.push(t.clone());
                }
            }
            for t in &tags {
                let explicit = decl.contract.esc().any(|(u, c, _)| u == t && c == OBJECT);
                for (_, c, e) in decl.contract.esc().filter(|(u, _, _)| *u == t) {
                    if !explicit || c == OBJECT {
                        push_sum(&mut by_tag, t.to_string(), e);
                    }
                }
            }
            for (t, (_, e)) in tags.into_iter().zip(by_tag) {
                b.esc.push(((t, OBJECT.into()), e));
            }
        }
    }
    b
}

fn summary_bounds(s: &summary::ConsumptionSummary) -> Option<Bounds> {
    if s.unknown.is_some() {
        return None;
    }
    let all = s.mem_req.values().chain(s.esc.values());
    if all.clone().any(|e| e.vars().iter().any(|v| is_opaque(v))) {
        return None;
    }
    Some(Bounds {
        mem_req: s.mem_req.iter().map(|(c, e)| (c.clone(), lower::sym_to_expr(e))).collect(),
        esc: s.esc.iter().map(|(k, e)| (k.clone(), lower::sym_to_expr(e))).collect(),
    })
}

enum Recv<'e> {
    This,
    Expr(&'e Expr),
    Fresh(&'e str),
}

struct Method<'a> {
    res: &'a Resolved,
    mref: &'a MethodRef,
    prefix: String,
    mode: Mode,
    callees: &'a BTreeMap<MethodRef, Option<Bounds>>,
    calls: u32,
    loops: u32,
    mem_used: Vec<String>,
    esc_used: Vec<(Tag, String)>,
    method_pair: Option<BTreeSet<String>>,
    pair_live: bool,
    counters: BTreeMap<String, CounterInfo>,
    warnings: Vec<String>,
}

/// Names of one `maxCall`/`sumCall` pair.
#[derive(Clone)]
struct Pair {
    max: String,
    sum: String,
}

impl Pair {
    fn max(&self, class: &str) -> String {
        format!("{}_{}", self.max, class_ident(class))
    }

    fn sum(&self, class: &str) -> String {
        format!("{}_{}", self.sum, class_ident(class))
    }
}

fn ghost_decl(name: String, init: Expr) -> Stmt {
    Stmt::ghost(StmtKind::GhostDecl { name, init })
}

fn ghost_add(name: String, value: Expr) -> Stmt {
    Stmt::ghost(StmtKind::GhostAssign {
        name,
        op: GhostOp::Add,
        value,
    })
}

fn ghost_set(name: String, value: Expr) -> Stmt {
    Stmt::ghost(StmtKind::GhostAssign {
        name,
        op: GhostOp::Set,
        value,
    })
}

impl<'a> Method<'a> {
    fn key(&self, class: &str) -> String {
        self.mode.key(class)
    }

    fn register(&mut self, name: &str, kind: CounterKind) {
        self.counters.insert(
            name.to_string(),
            CounterInfo {
                method: self.mref.clone(),
                kind,
            },
        );
    }

    fn mem_counter(&mut self, class: &str) -> String {
        if !self.mem_used.iter().any(|c| c == class) {
            self.mem_used.push(class.to_string());
        }
        mem_req_counter(&self.prefix, class)
    }

    fn esc_counter(&mut self, tag: &Tag, class: &str) -> String {
        let k = (tag.clone(), class.to_string());
        if !self.esc_used.contains(&k) {
            self.esc_used.push(k);
        }
        esc_counter(&self.prefix, tag, class)
    }

    fn bounds_of(&self, site: u32) -> Option<(&MethodRef, &Bounds)> {
        let c = self.res.callee(site)?;
        Some((c, self.callees.get(c)?.as_ref()?))
    }

    /// Classes touched by call sites in `stmts`; loops only when asked.
    fn site_classes(&self, stmts: &[Stmt], into_loops: bool, out: &mut BTreeSet<String>) {
        for s in stmts {
            match &s.kind {
                StmtKind::New { .. } | StmtKind::Call { .. } => {
                    if let Some((_, b)) = self.bounds_of(s.id) {
                        out.extend(b.classes());
                    }
                }
                StmtKind::If {
                    then_body, else_body, ..
                } => {
                    self.site_classes(then_body, into_loops, out);
                    self.site_classes(else_body, into_loops, out);
                }
                StmtKind::For { body, .. } if into_loops => self.site_classes(body, into_loops, out),
                _ => {}
            }
        }
    }

    fn subst(&self, e: &Expr, callee: &MethodRef, recv: &Recv<'_>, args: &[Arg]) -> Expr {
        let decl = self.res.method(callee);
        let res = self.res;
        e.map(&|x| match x {
            Expr::Field(b, f) if **b == Expr::This => match recv {
                Recv::Fresh(class) => {
                    let int = res
                        .program
                        .class(class)
                        .and_then(|c| c.field(f))
                        .is_some_and(|fd| fd.ty == Type::Int);
                    int.then_some(Expr::Int(0))
                }
                Recv::Expr(r) => Some(Expr::field((*r).clone(), f.clone())),
                Recv::This => None,
            },
            Expr::This => match recv {
                Recv::Expr(r) => Some((*r).clone()),
                _ => None,
            },
            Expr::Var(v) => {
                let i = decl.params.iter().position(|p| p.name == *v)?;
                match args.get(i) {
                    Some(Arg::In(a)) => Some(a.clone()),
                    _ => None,
                }
            }
            _ => None,
        })
    }

    fn call_site(&mut self, s: &Stmt, recv: Recv<'_>, args: &[Arg], add_esc: &[AddEsc], pair: &Pair, out: &mut Vec<Stmt>) {
        let Some(callee) = self.res.callee(s.id).cloned() else {
            return;
        };
        let Some(b) = self.callees.get(&callee).cloned().flatten() else {
            self.warnings
                .push(format!("{}: consumption of {callee} at line {} is not expressible", self.mref, s.span.line));
            return;
        };
        if !b.classes().is_empty() {
            self.calls += 1;
        }
        for class in b.classes() {
            let mr = b
                .mem(&class)
                .map(|e| self.subst(e, &callee, &recv, args))
                .unwrap_or(Expr::Int(0));
            let e = b
                .esc
                .iter()
                .filter(|((_, c), _)| *c == class)
                .map(|(_, e)| self.subst(e, &callee, &recv, args))
                .reduce(|a, x| Expr::bin(BinOp::Add, a, x))
                .unwrap_or(Expr::Int(0));
            let diff = format!("call{}_diff_{}", self.calls, class_ident(&class));
            self.register(
                &diff,
                CounterKind::CallDiff {
                    site: s.id,
                    class: class.clone(),
                },
            );
            out.push(ghost_decl(diff.clone(), Expr::bin(BinOp::Sub, mr, e.clone())));
            out.push(ghost_set(pair.max(&class), Expr::max(Expr::var(pair.max(&class)), Expr::var(diff))));
            out.push(ghost_add(pair.sum(&class), e));
        }
        for a in add_esc {
            for ((t, class), e) in &b.esc {
                if *t == a.src {
                    let name = self.esc_counter(&a.dst, class);
                    out.push(ghost_add(name, self.subst(e, &callee, &recv, args)));
                }
            }
        }
    }

    fn accumulate(&mut self, classes: &BTreeSet<String>, pair: &Pair, out: &mut Vec<Stmt>) {
        for c in classes {
            let name = self.mem_counter(c);
            out.push(ghost_add(
                name,
                Expr::bin(BinOp::Add, Expr::var(pair.max(c)), Expr::var(pair.sum(c))),
            ));
        }
    }

    fn declare_pair(&mut self, classes: &BTreeSet<String>, pair: &Pair, out: &mut Vec<Stmt>) {
        for c in classes {
            self.register(&pair.max(c), CounterKind::MaxCalls(c.clone()));
            self.register(&pair.sum(c), CounterKind::SumCalls(c.clone()));
            out.push(ghost_decl(pair.max(c), Expr::Int(0)));
            out.push(ghost_decl(pair.sum(c), Expr::Int(0)));
        }
    }

    fn method_pair() -> Pair {
        Pair {
            max: "maxCalls".into(),
            sum: "sumCalls".into(),
        }
    }

    fn block(&mut self, stmts: &[Stmt], pair: &Pair, in_loop: bool, top: bool) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in stmts {
            if top && !self.pair_live {
                let mut cs = BTreeSet::new();
                self.site_classes(std::slice::from_ref(s), false, &mut cs);
                if !cs.is_empty() {
                    let all = self.method_pair.clone().unwrap_or_default();
                    self.declare_pair(&all, pair, &mut out);
                    self.pair_live = true;
                }
            }
            self.stmt(s, pair, in_loop, &mut out);
        }
        out
    }

    fn stmt(&mut self, s: &Stmt, pair: &Pair, in_loop: bool, out: &mut Vec<Stmt>) {
        match &s.kind {
            StmtKind::New {
                class,
                args,
                dest,
                add_esc,
                ..
            } => {
                let k = self.key(class);
                let name = self.mem_counter(&k);
                out.push(ghost_add(name, Expr::Int(1)));
                if let Dest::Esc(t) = dest {
                    let name = self.esc_counter(t, &k);
                    out.push(ghost_add(name, Expr::Int(1)));
                }
                let args: Vec<Arg> = args.iter().cloned().map(Arg::In).collect();
                self.call_site(s, Recv::Fresh(class), &args, add_esc, pair, out);
                out.push(s.clone());
            }
            StmtKind::NewArray { elem, len, dest, .. } => {
                let k = self.key(&Type::Array(Box::new(elem.clone())).class_ref());
                let name = self.mem_counter(&k);
                out.push(ghost_add(name, len.clone()));
                if let Dest::Esc(t) = dest {
                    let name = self.esc_counter(t, &k);
                    out.push(ghost_add(name, len.clone()));
                }
                out.push(s.clone());
            }
            StmtKind::Call {
                receiver, args, add_esc, ..
            } => {
                let recv = match receiver {
                    Some(e) => Recv::Expr(e),
                    None => Recv::This,
                };
                self.call_site(s, recv, args, add_esc, pair, out);
                out.push(s.clone());
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let then_body = self.block(then_body, pair, in_loop, false);
                let else_body = self.block(else_body, pair, in_loop, false);
                out.push(Stmt {
                    id: s.id,
                    span: s.span,
                    kind: StmtKind::If {
                        cond: cond.clone(),
                        then_body,
                        else_body,
                    },
                });
            }
            StmtKind::For {
                var,
                lo,
                hi,
                inclusive,
                space,
                body,
            } => {
                let mut classes = BTreeSet::new();
                let inner_pair = if in_loop {
                    pair.clone()
                } else {
                    self.loops += 1;
                    let n = if self.loops == 1 { String::new() } else { self.loops.to_string() };
                    let p = Pair {
                        max: format!("maxCall{n}"),
                        sum: format!("sumCall{n}"),
                    };
                    self.site_classes(body, true, &mut classes);
                    self.declare_pair(&classes, &p, out);
                    p
                };
                let body = self.block(body, &inner_pair, true, false);
                out.push(Stmt {
                    id: s.id,
                    span: s.span,
                    kind: StmtKind::For {
                        var: var.clone(),
                        lo: lo.clone(),
                        hi: hi.clone(),
                        inclusive: *inclusive,
                        space: space.clone(),
                        body,
                    },
                });
                if !in_loop {
                    self.accumulate(&classes, &inner_pair, out);
                }
            }
            StmtKind::Return(_) => {
                if self.pair_live {
                    let cs = self.method_pair.clone().unwrap_or_default();
                    self.accumulate(&cs, &Self::method_pair(), out);
                }
                out.push(s.clone());
            }
            _ => out.push(s.clone()),
        }
    }
}

/// Instrumented copy of every method with a contract or any consumption.
pub fn instrument(res: &Resolved, opts: &Options) -> InstrumentedProgram {
    let (sums, _) = summary::summarize_program(res, opts);
    let mut callees: BTreeMap<MethodRef, Option<Bounds>> = BTreeMap::new();
    for m in res.method_refs() {
        let decl = res.method(m);
        let use_contract = decl.contract.has_memory_clauses()
            && (opts.callees == summary::CalleeMode::Contracts || sums[m].unknown.is_some());
        let b = if use_contract {
            Some(contract_bounds(decl, opts.mode))
        } else {
            summary_bounds(&sums[m])
        };
        callees.insert(m.clone(), b);
    }
    let mut program = res.program.clone();
    let mut counters = BTreeMap::new();
    let mut warnings = Vec::new();
    for class in &mut program.classes {
        for decl in &mut class.methods {
            let mref = MethodRef::new(class.name.clone(), decl.name.clone());
            let mut m = Method {
                res,
                mref: &mref,
                prefix: decl.name.clone(),
                mode: opts.mode,
                callees: &callees,
                calls: 0,
                loops: 0,
                mem_used: Vec::new(),
                esc_used: Vec::new(),
                method_pair: None,
                pair_live: false,
                counters: BTreeMap::new(),
                warnings: Vec::new(),
            };
            let mut top = BTreeSet::new();
            m.site_classes(&decl.body, false, &mut top);
            m.method_pair = Some(top);
            let mut body = m.block(&decl.body, &Method::method_pair(), false, true);
            if m.pair_live && !matches!(body.last().map(|s| &s.kind), Some(StmtKind::Return(_))) {
                let cs = m.method_pair.clone().unwrap_or_default();
                m.accumulate(&cs, &Method::method_pair(), &mut body);
            }
            let declared = contract_bounds(decl, opts.mode);
            let mut mem: Vec<String> = declared.mem_req.iter().map(|(c, _)| c.clone()).collect();
            for c in &m.mem_used {
                if !mem.contains(c) {
                    mem.push(c.clone());
                }
            }
            let mut esc: Vec<(Tag, String)> = declared.esc.iter().map(|(k, _)| k.clone()).collect();
            for k in &m.esc_used {
                if !esc.contains(k) {
                    esc.push(k.clone());
                }
            }
            if mem.is_empty() && esc.is_empty() && !m.pair_live {
                continue;
            }
            let mut head = Vec::new();
            for (c, b) in &declared.mem_req {
                head.push(Stmt::ghost(StmtKind::Ensure {
                    counter: mem_req_counter(&m.prefix, c),
                    bound: b.clone(),
                }));
            }
            for ((t, c), b) in &declared.esc {
                head.push(Stmt::ghost(StmtKind::Ensure {
                    counter: esc_counter(&m.prefix, t, c),
                    bound: b.clone(),
                }));
            }
            for c in &mem {
                let n = mem_req_counter(&m.prefix, c);
                m.register(&n, CounterKind::MemReq(c.clone()));
                head.push(ghost_decl(n, Expr::Int(0)));
            }
            for (t, c) in &esc {
                let n = esc_counter(&m.prefix, t, c);
                m.register(&n, CounterKind::Esc(t.clone(), c.clone()));
                head.push(ghost_decl(n, Expr::Int(0)));
            }
            head.extend(body);
            decl.body = head;
            counters.extend(m.counters);
            warnings.extend(m.warnings);
        }
    }
    InstrumentedProgram {
        program,
        counters,
        warnings,
    }
}

fn erase_block(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts
        .iter()
        .filter(|s| !s.is_ghost())
        .map(|s| {
            let kind = match &s.kind {
                StmtKind::For {
                    var,
                    lo,
                    hi,
                    inclusive,
                    space,
                    body,
                } => StmtKind::For {
                    var: var.clone(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                    inclusive: *inclusive,
                    space: space.clone(),
                    body: erase_block(body),
                },
                StmtKind::If {
                    cond,
                    then_body,
                    else_body,
                } => StmtKind::If {
                    cond: cond.clone(),
                    then_body: erase_block(then_body),
                    else_body: erase_block(else_body),
                },
                k => k.clone(),
            };
            Stmt {
                id: s.id,
                span: s.span,
                kind,
            }
        })
        .collect()
}

/// Removes counters and ensures.
pub fn erase(p: &Program) -> Program {
    let mut out = p.clone();
    for c in &mut out.classes {
        for m in &mut c.methods {
            m.body = erase_block(&m.body);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, parse_expr, resolve};

    const FAMILY: &str = include_str!("../../../corpus/family.mcl");
    const TEMPS: &str = include_str!("../../../corpus/temporaries.mcl");
    const BIG: &str = include_str!("../../../corpus/big_family.mcl");
    const OBJ: &str = include_str!("../../../corpus/family_object.mcl");

    fn load(src: &str) -> Resolved {
        resolve(parse(src).unwrap()).unwrap()
    }

    fn body<'p>(p: &'p Program, c: &str, m: &str) -> &'p [Stmt] {
        &p.class(c).unwrap().method(m).unwrap().body
    }

    fn ghosts(stmts: &[Stmt]) -> Vec<&StmtKind> {
        let mut out = Vec::new();
        walk(stmts, &mut |s| {
            if s.is_ghost() {
                out.push(&s.kind);
            }
        });
        out
    }

    fn poly(e: &Expr) -> crate::Poly {
        lower::path_poly(e).unwrap()
    }

    #[test]
    fn temporaries_counters() {
        let ip = instrument(&load(TEMPS), &Options::default());
        let g = ghosts(body(&ip.program, "A", "m"));
        let ensures: Vec<_> = g
            .iter()
            .filter_map(|k| match k {
                StmtKind::Ensure { counter, .. } => Some(counter.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(ensures, ["m_MemReq_A", "m_Esc_Return_A", "m_Esc_Param_A"]);
        let diffs: Vec<_> = g
            .iter()
            .filter_map(|k| match k {
                StmtKind::GhostDecl { name, init } if name.starts_with("call") => Some((name.as_str(), poly(init))),
                _ => None,
            })
            .collect();
        let n = crate::Poly::var("n");
        assert_eq!(diffs[0], ("call1_diff_A", n.clone()));
        assert_eq!(diffs[1], ("call2_diff_A", &n - &crate::Poly::int(2)));
        let adds: Vec<_> = g
            .iter()
            .filter_map(|k| match k {
                StmtKind::GhostAssign {
                    name,
                    op: GhostOp::Add,
                    value,
                } => Some((name.as_str(), crate::frontend::pretty::expr(value))),
                _ => None,
            })
            .collect();
        assert!(adds.contains(&("sumCalls_A", "1".into())));
        assert!(adds.contains(&("sumCalls_A", "2".into())));
        assert!(adds.contains(&("m_Esc_Return_A", "2".into())));
        assert!(adds.contains(&("m_Esc_Param_A", "1".into())));
        assert!(adds.contains(&("m_MemReq_A", "maxCalls_A + sumCalls_A".into())));
        assert!(ip.warnings.is_empty());
        assert!(matches!(ip.counters["maxCalls_A"].kind, CounterKind::MaxCalls(_)));
    }

    #[test]
    fn instrumented_source_reparses() {
        for (src, mode) in [(FAMILY, Mode::ByType), (TEMPS, Mode::ByType), (BIG, Mode::ByType), (OBJ, Mode::ObjectCount)] {
            let ip = instrument(&load(src), &Options::with_mode(mode));
            let text = ip.source();
            let again = resolve(parse(&text).unwrap()).unwrap_or_else(|d| panic!("{d:?}\n{text}"));
            assert_eq!(erase(&again.program), erase(&ip.program));
        }
    }

    #[test]
    fn erase_inverts_instrument() {
        for (src, mode) in [(FAMILY, Mode::ByType), (TEMPS, Mode::ByType), (BIG, Mode::ByType), (OBJ, Mode::ObjectCount)] {
            let res = load(src);
            let ip = instrument(&res, &Options::with_mode(mode));
            assert_eq!(ip.erase(), res.program);
        }
    }

    #[test]
    fn instrumenting_twice_is_stable() {
        let res = load(FAMILY);
        let once = instrument(&res, &Options::default());
        let again = instrument(&load(&crate::frontend::print_program(&once.erase())), &Options::default());
        assert_eq!(once.source(), again.source());
    }

    #[test]
    fn method_without_consumption_is_unchanged() {
        let res = load("class A { method f(x: int): int { return x + 1; } method g() { memreq<A>(1); var a: A = new A(); } }");
        let ip = instrument(&res, &Options::default());
        assert_eq!(body(&ip.program, "A", "f"), body(&res.program, "A", "f"));
        assert_eq!(ghosts(body(&ip.program, "A", "g")).len(), 3);
    }

    #[test]
    fn loop_calls_use_their_own_pair() {
        let ip = instrument(&load(FAMILY), &Options::default());
        let text = crate::frontend::print_program(&ip.program);
        assert!(text.contains("ghost var maxCall_Person = 0;"), "{text}");
        assert!(text.contains("ghost CreateFamily_MemReq_Logger += maxCall_Logger + sumCall_Logger;"), "{text}");
        let e = parse_expr("max(maxCall_Person, call2_diff_Person)").unwrap();
        assert!(text.contains(&format!("ghost maxCall_Person = {};", crate::frontend::pretty::expr(&e))), "{text}");
    }

    #[test]
    fn array_counters_are_named_safely() {
        let ip = instrument(&load(FAMILY), &Options::default());
        assert!(ip.counters.contains_key("Family_MemReq_PersonArr"));
    }
}
