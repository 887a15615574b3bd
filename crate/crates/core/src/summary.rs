//! Per-method consumption summaries and the check of declared bounds.
//!
//! A summary is computed structurally from the method body. Callees enter
//! through a [`View`]: their declared contract, or their own computed
//! summary when they declare no memory bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::callgraph::CallGraph;
use crate::escape::{self, EscapeSummary};
use crate::frontend::ast::*;
use crate::frontend::{lint, pretty, Diagnostic, Resolved};
use crate::lower::{self, LowerError, SpaceCheck};
use crate::symexpr::{Caveat, Engine, GridConfig, Proof, SymError, Verdict};
use crate::{IterSpace, LinConstraint, Poly, SymExpr};

/// How allocations are grouped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    ByType,
    /// Every class collapses to the pseudo-class `object`.
    ObjectCount,
}

pub const OBJECT: &str = "object";

impl Mode {
    pub fn key(self, class: &str) -> String {
        match self {
            Mode::ByType => class.to_string(),
            Mode::ObjectCount => OBJECT.to_string(),
        }
    }
}

/// What a call site consults for a callee that declares memory bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CalleeMode {
    #[default]
    Contracts,
    /// Always use the callee's computed summary (recursive components
    /// still use contracts).
    Summaries,
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub mode: Mode,
    pub grid: GridConfig,
    pub engine: Engine,
    pub callees: CalleeMode,
}

impl Options {
    pub fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

pub type ClassMap = BTreeMap<String, SymExpr>;
pub type EscMap = BTreeMap<(Tag, String), SymExpr>;

/// The consumption a caller may assume of a callee, over the callee's
/// entry variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct View {
    pub mem_req: ClassMap,
    pub esc: EscMap,
    /// Set when nothing sound is known about the callee.
    pub unknown: Option<String>,
}

impl View {
    fn classes(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.mem_req.keys().cloned().collect();
        out.extend(self.esc.keys().map(|(_, c)| c.clone()));
        out
    }

    fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.mem_req.values().chain(self.esc.values()) {
            out.extend(e.vars());
        }
        out
    }

    fn total_esc(&self, class: &str) -> Vec<(&Tag, &SymExpr)> {
        self.esc
            .iter()
            .filter(|((_, c), _)| c == class)
            .map(|((t, _), e)| (t, e))
            .collect()
    }
}

/// Declared bounds of a method as a view. In object mode an explicit
/// `object` clause wins; otherwise per-class clauses are summed.
pub fn contract_view(decl: &MethodDecl, mode: Mode) -> View {
    let bound = |e: &Expr| -> SymExpr {
        SymExpr::from_poly(lower::path_poly(e).unwrap_or_else(|_| opaque_poly(e)))
    };
    let mut v = View::default();
    match mode {
        Mode::ByType => {
            for (c, b) in decl.contract.memreq() {
                v.mem_req.entry(c.to_string()).or_insert_with(|| bound(b));
            }
            for (t, c, b) in decl.contract.esc() {
                v.esc.entry((t.clone(), c.to_string())).or_insert_with(|| bound(b));
            }
        }
        Mode::ObjectCount => {
            let explicit = decl.contract.memreq().any(|(c, _)| c == OBJECT);
            for (c, b) in decl.contract.memreq() {
                if explicit && c != OBJECT {
                    continue;
                }
                let slot = v.mem_req.entry(OBJECT.into()).or_insert_with(SymExpr::zero);
                *slot = slot.add(&bound(b));
            }
            let tags: BTreeSet<&Tag> = decl.contract.esc().map(|(t, _, _)| t).collect();
            for t in tags {
                let explicit = decl.contract.esc().any(|(u, c, _)| u == t && c == OBJECT);
                for (_, c, b) in decl.contract.esc().filter(|(u, _, _)| *u == t) {
                    if explicit && c != OBJECT {
                        continue;
                    }
                    let slot = v.esc.entry((t.clone(), OBJECT.into())).or_insert_with(SymExpr::zero);
                    *slot = slot.add(&bound(b));
                }
            }
        }
    }
    v
}

/// Contribution of one call site, per class, over the caller's variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallSiteContribution {
    pub site: u32,
    pub callee: MethodRef,
    /// `MR - E` and the callee's escapes by tag.
    pub per_class: BTreeMap<String, (SymExpr, BTreeMap<Tag, SymExpr>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsumptionSummary {
    pub method: MethodRef,
    pub mem_req: ClassMap,
    pub esc: EscMap,
    /// `max(MR - E) + sum(E)` over the calls outside loops.
    pub call_part: ClassMap,
    pub call_sites: Vec<CallSiteContribution>,
    /// Classes whose value rests on a relaxed sum or an endpoint maximum.
    pub caveats: BTreeMap<String, BTreeSet<Caveat>>,
    pub unknown: Option<String>,
    /// Linear preconditions of the method.
    pub requires: Vec<LinConstraint>,
    pub notes: Vec<String>,
}

impl ConsumptionSummary {
    pub fn view(&self) -> View {
        View {
            mem_req: self.mem_req.clone(),
            esc: self.esc.clone(),
            unknown: self.unknown.clone(),
        }
    }

    pub fn mem_req_of(&self, class: &str) -> SymExpr {
        self.mem_req.get(class).cloned().unwrap_or_else(SymExpr::zero)
    }

    pub fn esc_of(&self, tag: &Tag, class: &str) -> SymExpr {
        self.esc
            .get(&(tag.clone(), class.to_string()))
            .cloned()
            .unwrap_or_else(SymExpr::zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("no contract or summary available for callee {0}")]
    MissingCalleeContract(MethodRef),
}

fn opaque_poly(e: &Expr) -> Poly {
    Poly::var(format!("?{}", pretty::expr(e)))
}

pub fn is_opaque(v: &str) -> bool {
    v.starts_with('?')
}

/// Receiver of a call as seen by the callee's `this`.
enum Recv<'e> {
    This,
    Expr(&'e Expr),
    /// The object being constructed by `new`.
    Fresh(&'e str),
}

#[derive(Default)]
struct Acc {
    own: ClassMap,
    max: ClassMap,
    sum: ClassMap,
    /// Closed outermost loops: their `max + sum`.
    loops: ClassMap,
    esc: EscMap,
}

fn bump(map: &mut ClassMap, k: &str, e: &SymExpr) {
    let slot = map.entry(k.to_string()).or_insert_with(SymExpr::zero);
    *slot = slot.add(e);
}

fn bump_esc(map: &mut EscMap, k: (Tag, String), e: &SymExpr) {
    let slot = map.entry(k).or_insert_with(SymExpr::zero);
    *slot = slot.add(e);
}

fn raise(map: &mut ClassMap, k: &str, e: &SymExpr) {
    let slot = map.entry(k.to_string()).or_insert_with(SymExpr::zero);
    *slot = slot.max(e);
}

struct Summarizer<'a> {
    res: &'a Resolved,
    opts: &'a Options,
    mref: &'a MethodRef,
    decl: &'a MethodDecl,
    views: &'a BTreeMap<MethodRef, View>,
    reassigned: BTreeSet<String>,
    local_defs: BTreeMap<String, Expr>,
    written: BTreeSet<String>,
    pre: Vec<LinConstraint>,
    caveats: BTreeMap<String, BTreeSet<Caveat>>,
    notes: Vec<String>,
    call_sites: Vec<CallSiteContribution>,
    unknown: Option<String>,
}

/// Fields written by `m` or anything it may call.
fn written_fields(res: &Resolved, cg: &CallGraph, m: &MethodRef) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut ms = cg.transitive(m);
    ms.insert(m.clone());
    for r in ms {
        walk(&res.method(&r).body, &mut |s| {
            let t = match &s.kind {
                StmtKind::Assign { target, .. }
                | StmtKind::New { target, .. }
                | StmtKind::NewArray { target, .. } => Some(target),
                StmtKind::Call { target, .. } => target.as_ref(),
                _ => None,
            };
            if let Some(Target::Field(_, f)) = t {
                out.insert(f.clone());
            }
        });
    }
    out
}

impl<'a> Summarizer<'a> {
    fn new(
        res: &'a Resolved,
        cg: &CallGraph,
        opts: &'a Options,
        mref: &'a MethodRef,
        views: &'a BTreeMap<MethodRef, View>,
    ) -> Self {
        let decl = res.method(mref);
        let mut defs: BTreeMap<String, usize> = BTreeMap::new();
        let mut inits: BTreeMap<String, Expr> = BTreeMap::new();
        walk(&decl.body, &mut |s| {
            let target = match &s.kind {
                StmtKind::Assign { target, value } => {
                    if let Target::Declare(n, Type::Int) = target {
                        inits.insert(n.clone(), value.clone());
                    }
                    Some(target)
                }
                StmtKind::New { target, .. } | StmtKind::NewArray { target, .. } => Some(target),
                StmtKind::Call { target, args, .. } => {
                    for a in args {
                        if let Arg::Out(v) = a {
                            *defs.entry(v.clone()).or_default() += 1;
                        }
                    }
                    target.as_ref()
                }
                _ => None,
            };
            match target {
                Some(Target::Declare(n, _)) | Some(Target::Var(n)) => *defs.entry(n.clone()).or_default() += 1,
                _ => {}
            }
        });
        let reassigned: BTreeSet<String> = defs
            .iter()
            .filter(|(n, k)| decl.param(n).is_some() || **k > 1)
            .map(|(n, _)| n.clone())
            .collect();
        let local_defs = inits
            .into_iter()
            .filter(|(n, _)| defs.get(n) == Some(&1))
            .collect();
        let mut notes = Vec::new();
        let mut pre = Vec::new();
        for r in decl.contract.requires() {
            match lower::to_constraints(r, &mut lower::path_leaf) {
                Ok(cs) => pre.extend(cs),
                Err(e) => notes.push(format!("precondition ignored: {e}")),
            }
        }
        Summarizer {
            res,
            opts,
            mref,
            decl,
            views,
            reassigned,
            local_defs,
            written: written_fields(res, cg, mref),
            pre,
            caveats: BTreeMap::new(),
            notes,
            call_sites: Vec::new(),
            unknown: None,
        }
    }

    fn key(&self, class: &str) -> String {
        self.opts.mode.key(class)
    }

    fn stable_path(&self, e: &Expr) -> bool {
        match e {
            Expr::This => true,
            Expr::Var(v) => {
                matches!(self.decl.param(v), Some(p) if p.mode == ParamMode::In) && !self.reassigned.contains(v)
            }
            Expr::Field(b, f) => {
                let array_len = f == "length" && matches!(self.res.type_of(self.mref, b), Some(Type::Array(_)));
                self.stable_path(b) && (array_len || !self.written.contains(f))
            }
            _ => false,
        }
    }

    fn leaf(&self, e: &Expr) -> Poly {
        match e {
            Expr::Var(v) if self.res.info(self.mref).loop_vars.contains(v) => Poly::var(v.clone()),
            Expr::Var(v) if self.local_defs.contains_key(v) => self.lower(&self.local_defs[v]),
            Expr::Var(_) | Expr::Field(..) if self.stable_path(e) => match lower::path_var(e) {
                Some(p) => Poly::var(p),
                None => opaque_poly(e),
            },
            _ => opaque_poly(e),
        }
    }

    /// Polynomial of an integer body expression; quantities that are not
    /// fixed at entry become opaque variables.
    fn lower(&self, e: &Expr) -> Poly {
        let mut leaf = |x: &Expr| -> Result<Poly, LowerError> { Ok(self.leaf(x)) };
        lower::to_poly(e, &mut leaf, true).unwrap_or_else(|_| opaque_poly(e))
    }

    fn note(&mut self, msg: String) {
        if !self.notes.contains(&msg) {
            self.notes.push(msg);
        }
    }

    fn overflow(&mut self, class: &str, err: SymError) -> SymExpr {
        self.note(format!("{class}: {err}"));
        SymExpr::from_poly(Poly::var(format!("?overflow:{class}")))
    }

    fn checked(&mut self, class: &str, e: SymExpr) -> SymExpr {
        if e.degree() > self.opts.engine.max_degree {
            let err = SymError::DegreeOverflow {
                degree: e.degree(),
                max: self.opts.engine.max_degree,
            };
            return self.overflow(class, err);
        }
        e
    }

    /// Caller polynomial for a callee entry variable.
    fn bind_var(&self, callee: &MethodRef, v: &str, recv: &Recv<'_>, args: &[Arg]) -> Poly {
        let opaque = || Poly::var(format!("?{callee}:{v}"));
        let Some(path) = lower::var_expr(v).and_then(|e| e.as_path()) else {
            return opaque();
        };
        let cdecl = self.res.method(callee);
        let base = if path.root == "this" {
            match recv {
                Recv::This => Expr::This,
                Recv::Expr(e) => (*e).clone(),
                Recv::Fresh(class) => {
                    let int_field = path.fields.len() == 1
                        && self
                            .res
                            .program
                            .class(class)
                            .and_then(|c| c.field(&path.fields[0]))
                            .is_some_and(|f| f.ty == Type::Int);
                    return if int_field { Poly::zero() } else { opaque() };
                }
            }
        } else {
            let Some(i) = cdecl.params.iter().position(|p| p.name == path.root) else {
                return opaque();
            };
            match args.get(i) {
                Some(Arg::In(a)) => a.clone(),
                _ => return opaque(),
            }
        };
        let e = path.fields.iter().fold(base, |b, f| Expr::field(b, f.clone()));
        self.lower(&e)
    }

    fn call(&mut self, site: u32, callee: &MethodRef, recv: Recv<'_>, args: &[Arg], add_esc: &[AddEsc], acc: &mut Acc) {
        let Some(view) = self.views.get(callee) else {
            self.unknown = Some(SummaryError::MissingCalleeContract(callee.clone()).to_string());
            return;
        };
        if let Some(why) = &view.unknown {
            self.unknown = Some(format!("callee {callee}: {why}"));
            return;
        }
        let binding: BTreeMap<String, Poly> = view
            .vars()
            .into_iter()
            .map(|v| {
                let p = self.bind_var(callee, &v, &recv, args);
                (v, p)
            })
            .collect();
        let mut contrib = CallSiteContribution {
            site,
            callee: callee.clone(),
            per_class: BTreeMap::new(),
        };
        for class in view.classes() {
            let mr = view.mem_req.get(&class).cloned().unwrap_or_else(SymExpr::zero);
            let mr = self.subst(&class, &mr, &binding);
            let mut by_tag = BTreeMap::new();
            let mut total = SymExpr::zero();
            for (t, e) in view.total_esc(&class) {
                let e = self.subst(&class, e, &binding);
                total = total.add(&e);
                by_tag.insert(t.clone(), e);
            }
            let total = self.checked(&class, total);
            // MR - max(e1..ek) <= MR - e1
            let diff = mr.sub_poly(&total.alternatives()[0]);
            raise(&mut acc.max, &class, &diff);
            bump(&mut acc.sum, &class, &total);
            contrib.per_class.insert(class, (diff, by_tag));
        }
        for a in add_esc {
            for ((t, class), e) in &view.esc {
                if *t == a.src {
                    let e = self.subst(class, e, &binding);
                    bump_esc(&mut acc.esc, (a.dst.clone(), class.clone()), &e);
                }
            }
        }
        self.call_sites.push(contrib);
    }

    fn subst(&mut self, class: &str, e: &SymExpr, binding: &BTreeMap<String, Poly>) -> SymExpr {
        match self.opts.engine.substitute(e, binding) {
            Ok(r) => r,
            Err(err) => self.overflow(class, err),
        }
    }

    fn block(&mut self, stmts: &[Stmt], acc: &mut Acc, depth: usize, outer: &[LinConstraint]) {
        for s in stmts {
            self.stmt(s, acc, depth, outer);
        }
    }

    fn stmt(&mut self, s: &Stmt, acc: &mut Acc, depth: usize, outer: &[LinConstraint]) {
        match &s.kind {
            StmtKind::New {
                class,
                args,
                dest,
                add_esc,
                ..
            } => {
                let k = self.key(class);
                bump(&mut acc.own, &k, &SymExpr::int(1));
                if let Dest::Esc(t) = dest {
                    bump_esc(&mut acc.esc, (t.clone(), k), &SymExpr::int(1));
                }
                if let Some(callee) = self.res.callee(s.id).cloned() {
                    let args: Vec<Arg> = args.iter().cloned().map(Arg::In).collect();
                    self.call(s.id, &callee, Recv::Fresh(class), &args, add_esc, acc);
                }
            }
            StmtKind::NewArray { elem, len, dest, .. } => {
                let k = self.key(&Type::Array(Box::new(elem.clone())).class_ref());
                let n = SymExpr::from_poly(self.lower(len));
                bump(&mut acc.own, &k, &n);
                if let Dest::Esc(t) = dest {
                    bump_esc(&mut acc.esc, (t.clone(), k), &n);
                }
            }
            StmtKind::Call {
                receiver, args, add_esc, ..
            } => {
                let Some(callee) = self.res.callee(s.id).cloned() else {
                    return;
                };
                let recv = match receiver {
                    Some(e) => Recv::Expr(e),
                    None => Recv::This,
                };
                self.call(s.id, &callee, recv, args, add_esc, acc);
            }
            StmtKind::If {
                then_body, else_body, ..
            } => {
                self.block(then_body, acc, depth, outer);
                self.block(else_body, acc, depth, outer);
            }
            StmtKind::For {
                var,
                lo,
                hi,
                inclusive,
                space,
                body,
            } => self.for_loop(s.id, var, lo, hi, *inclusive, space.as_ref(), body, acc, depth, outer),
            _ => {}
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn for_loop(
        &mut self,
        id: u32,
        var: &str,
        lo: &Expr,
        hi: &Expr,
        inclusive: bool,
        explicit: Option<&Expr>,
        body: &[Stmt],
        parent: &mut Acc,
        depth: usize,
        outer: &[LinConstraint],
    ) {
        let lo_p = self.lower(lo);
        let mut hi_p = self.lower(hi);
        if !inclusive {
            hi_p = &hi_p - &Poly::one();
        }
        let header = IterSpace::interval(var, lo_p, hi_p).unwrap_or_else(|e| {
            self.note(format!("loop `{var}`: {e}"));
            IterSpace::interval(var, Poly::var(format!("?lo@{id}")), Poly::var(format!("?hi@{id}")))
                .expect("opaque bounds are linear")
        });
        let space = match explicit {
            None => header,
            Some(sp) => {
                let mut leaf = |x: &Expr| -> Result<Poly, LowerError> { Ok(self.leaf(x)) };
                let known: Vec<LinConstraint> = outer.iter().filter(|c| !c.vars().iter().any(|v| is_opaque(v))).cloned().collect();
                match lower::check_explicit_space(&header, sp, &known, &mut leaf, &self.opts.grid) {
                    SpaceCheck::Accepted(s) => s,
                    SpaceCheck::Mismatch { .. } => {
                        self.note(format!("loop `{var}`: iteration_space does not cover the header; header used"));
                        header
                    }
                    SpaceCheck::Unsupported(why) => {
                        self.note(format!("loop `{var}`: iteration_space unsupported ({why}); header used"));
                        header
                    }
                }
            }
        };
        let mut inner = outer.to_vec();
        inner.extend(space.constraints());
        let mut acc = Acc::default();
        self.block(body, &mut acc, depth + 1, &inner);

        for (c, e) in &acc.own {
            let s = self.sum(c, e, &space, outer);
            bump(&mut parent.own, c, &s);
        }
        for (k, e) in &acc.esc {
            let s = self.sum(&k.1, e, &space, outer);
            bump_esc(&mut parent.esc, k.clone(), &s);
        }
        let mut total = ClassMap::new();
        for (c, e) in &acc.max {
            let m = self.max(c, e, &space);
            if depth == 0 {
                bump(&mut total, c, &m);
            } else {
                raise(&mut parent.max, c, &m);
            }
        }
        for (c, e) in &acc.sum {
            let s = self.sum(c, e, &space, outer);
            if depth == 0 {
                bump(&mut total, c, &s);
            } else {
                bump(&mut parent.sum, c, &s);
            }
        }
        for (c, e) in total {
            bump(&mut parent.loops, &c, &e);
        }
    }

    fn sum(&mut self, class: &str, e: &SymExpr, space: &IterSpace, outer: &[LinConstraint]) -> SymExpr {
        match self.opts.engine.sum_over(e, space) {
            Ok(s) => {
                self.caveats.entry(class.to_string()).or_default().extend(s.caveats);
                let mut pre = self.pre.clone();
                pre.extend(outer.iter().cloned());
                if s.guards.iter().all(|g| self.entailed(g, &pre)) {
                    s.value
                } else {
                    s.value.max(&SymExpr::zero())
                }
            }
            Err(err) => self.overflow(class, err),
        }
    }

    fn max(&mut self, class: &str, e: &SymExpr, space: &IterSpace) -> SymExpr {
        match self.opts.engine.max_over(e, space) {
            Ok(m) => {
                self.caveats.entry(class.to_string()).or_default().extend(m.caveats);
                m.value
            }
            Err(err) => self.overflow(class, err),
        }
    }

    /// Whether `c` follows from `pre` by a symbolic or affine argument.
    fn entailed(&self, c: &LinConstraint, pre: &[LinConstraint]) -> bool {
        if c.vars().iter().any(|v| is_opaque(v)) {
            return false;
        }
        let known: Vec<LinConstraint> = pre
            .iter()
            .filter(|p| !p.vars().iter().any(|v| is_opaque(v)))
            .cloned()
            .collect();
        let mut params = c.vars();
        for p in &known {
            params.extend(p.vars());
        }
        c.as_nonneg().iter().all(|q| {
            let neg = SymExpr::from_poly(-q.clone());
            matches!(
                self.opts.engine.entails_leq(&neg, &SymExpr::zero(), &known, &params, &self.opts.grid),
                Ok(Verdict::Verified(Proof::Coefficients | Proof::AffineGrid))
            )
        })
    }

    fn finish(mut self) -> ConsumptionSummary {
        let mut acc = Acc::default();
        let body = self.decl.body.clone();
        self.block(&body, &mut acc, 0, &[]);
        let mut classes: BTreeSet<String> = acc.own.keys().cloned().collect();
        classes.extend(acc.max.keys().cloned());
        classes.extend(acc.sum.keys().cloned());
        classes.extend(acc.loops.keys().cloned());
        let zero = SymExpr::zero();
        let mut mem_req = ClassMap::new();
        let mut call_part = ClassMap::new();
        for c in classes {
            let get = |m: &ClassMap| m.get(&c).cloned().unwrap_or_else(SymExpr::zero);
            let calls = get(&acc.max).max(&zero).add(&get(&acc.sum));
            let total = get(&acc.own).add(&calls).add(&get(&acc.loops));
            let total = self.checked(&c, total);
            if acc.max.contains_key(&c) || acc.sum.contains_key(&c) {
                call_part.insert(c.clone(), calls);
            }
            if !total.is_zero() {
                mem_req.insert(c, total);
            }
        }
        let esc = acc.esc.into_iter().filter(|(_, e)| !e.is_zero()).collect();
        self.caveats.retain(|_, v| !v.is_empty());
        ConsumptionSummary {
            method: self.mref.clone(),
            mem_req,
            esc,
            call_part,
            call_sites: self.call_sites,
            caveats: self.caveats,
            unknown: self.unknown,
            requires: self.pre,
            notes: self.notes,
        }
    }
}

/// Summary of one method given views of all its callees.
pub fn summarize(res: &Resolved, m: &MethodRef, views: &BTreeMap<MethodRef, View>, opts: &Options) -> ConsumptionSummary {
    let cg = CallGraph::new(res);
    summarize_with(res, &cg, m, views, opts)
}

fn summarize_with(
    res: &Resolved,
    cg: &CallGraph,
    m: &MethodRef,
    views: &BTreeMap<MethodRef, View>,
    opts: &Options,
) -> ConsumptionSummary {
    Summarizer::new(res, cg, opts, m, views).finish()
}

/// Summaries of every method, bottom-up. Recursive components need a
/// contract on every member; otherwise their summaries are unknown.
pub fn summarize_program(res: &Resolved, opts: &Options) -> (BTreeMap<MethodRef, ConsumptionSummary>, Vec<Diagnostic>) {
    let cg = CallGraph::new(res);
    let mut sums: BTreeMap<MethodRef, ConsumptionSummary> = BTreeMap::new();
    let mut diags = Vec::new();
    for scc in cg.bottom_up() {
        let recursive = cg.is_recursive(&scc);
        let mut views: BTreeMap<MethodRef, View> = BTreeMap::new();
        let mut callees: BTreeSet<MethodRef> = BTreeSet::new();
        for m in &scc {
            callees.extend(cg.callees[m].iter().cloned());
        }
        for c in callees {
            let decl = res.method(&c);
            let in_scc = scc.contains(&c);
            let v = if in_scc {
                if decl.contract.has_memory_clauses() {
                    contract_view(decl, opts.mode)
                } else {
                    View {
                        unknown: Some(format!("recursive method {c} has no contract")),
                        ..View::default()
                    }
                }
            } else if decl.contract.has_memory_clauses() && opts.callees == CalleeMode::Contracts {
                contract_view(decl, opts.mode)
            } else {
                sums[&c].view()
            };
            views.insert(c, v);
        }
        if recursive {
            for m in &scc {
                if !res.method(m).contract.has_memory_clauses() {
                    diags.push(Diagnostic::error(
                        "CyclicWithoutContract",
                        format!("{m} is recursive but declares no memory contract"),
                        res.method(m).span,
                    ));
                }
            }
        }
        for m in &scc {
            sums.insert(m.clone(), summarize_with(res, &cg, m, &views, opts));
        }
    }
    (sums, diags)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Verified,
    Unverified,
    Violated,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Verified => "verified",
            Status::Unverified => "unverified",
            Status::Violated => "violated",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseReport {
    pub method: String,
    pub clause: String,
    pub declared: Option<String>,
    pub computed: String,
    pub verdict: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, i64>>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LifetimeReport {
    pub method: String,
    pub site: u32,
    pub line: u32,
    pub subject: String,
    pub status: String,
    pub detail: String,
    pub verdict: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SummaryReport {
    pub mem_req: BTreeMap<String, String>,
    pub esc: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub mode: Mode,
    pub status: Status,
    pub clauses: Vec<ClauseReport>,
    pub lifetimes: Vec<LifetimeReport>,
    pub summaries: BTreeMap<String, SummaryReport>,
    pub diagnostics: Vec<Diagnostic>,
}

impl VerificationReport {
    /// 0 all verified, 1 something violated, 2 something unverified.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Verified => 0,
            Status::Violated => 1,
            Status::Unverified => 2,
        }
    }

    pub fn clause(&self, method: &str, clause: &str) -> Option<&ClauseReport> {
        self.clauses.iter().find(|c| c.method == method && c.clause == clause)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        for d in &self.diagnostics {
            out.push_str(&format!("{d}\n"));
        }
        for c in &self.clauses {
            let declared = c.declared.as_deref().unwrap_or("-");
            out.push_str(&format!(
                "{:<10} {} {}: computed {}, declared {}",
                c.verdict.to_string(),
                c.method,
                c.clause,
                c.computed,
                declared
            ));
            if let Some(w) = &c.witness {
                let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
                if parts.is_empty() {
                    out.push_str(" [witness: any input]");
                } else {
                    out.push_str(&format!(" [witness {}]", parts.join(", ")));
                }
            }
            for n in &c.notes {
                out.push_str(&format!("\n           note: {n}"));
            }
            out.push('\n');
        }
        for l in &self.lifetimes {
            out.push_str(&format!(
                "{:<10} {} line {}: {}: {}\n",
                l.verdict.to_string(),
                l.method,
                l.line,
                l.subject,
                l.detail
            ));
        }
        out.push_str(&format!("overall: {}\n", self.status));
        out
    }
}

pub fn clause_name(class: &str, tag: Option<&Tag>) -> String {
    match tag {
        None => format!("memreq<{class}>"),
        Some(t) => format!("esc<{class}>({t})"),
    }
}

/// Verdicts for every declared bound of `m`, plus undeclared consumption.
pub fn check_method(res: &Resolved, m: &MethodRef, summary: &ConsumptionSummary, opts: &Options, recursive: bool) -> Vec<ClauseReport> {
    let decl = res.method(m);
    if !decl.contract.has_memory_clauses() {
        return Vec::new();
    }
    let declared = contract_view(decl, opts.mode);
    let mut pre = Vec::new();
    let mut base_notes = Vec::new();
    for r in decl.contract.requires() {
        match lower::to_constraints(r, &mut lower::path_leaf) {
            Ok(cs) => pre.extend(cs),
            Err(e) => base_notes.push(format!("precondition ignored: {e}")),
        }
    }
    if recursive {
        base_notes.push("assume-guarantee: recursive calls use the declared contract".into());
    }
    let mut out = Vec::new();
    let mut check = |clause: String, class: &str, computed: SymExpr, bound: Option<&SymExpr>| {
        let mut notes = base_notes.clone();
        let (verdict, witness) = if let Some(why) = &summary.unknown {
            notes.push(why.clone());
            (Status::Unverified, None)
        } else {
            let rhs = bound.cloned().unwrap_or_else(SymExpr::zero);
            let mut params: BTreeSet<String> = computed.vars();
            params.extend(rhs.vars());
            for c in &pre {
                params.extend(c.vars());
            }
            params.retain(|v| !is_opaque(v));
            match opts.engine.entails_leq(&computed, &rhs, &pre, &params, &opts.grid) {
                Ok(Verdict::Verified(p)) => {
                    let caveats = summary.caveats.get(class).filter(|c| !c.is_empty());
                    match caveats {
                        Some(cs) if !computed.is_zero() => {
                            let names: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                            notes.push(format!("computed bound is approximate: {}", names.join(", ")));
                            (Status::Unverified, None)
                        }
                        _ => {
                            if bound.is_some() && computed.is_zero() {
                                notes.push("no consumption of this class".into());
                            } else if p == Proof::Grid {
                                notes.push("checked on the grid only".into());
                            }
                            (Status::Verified, None)
                        }
                    }
                }
                Ok(Verdict::Violated(w)) => {
                    if bound.is_none() {
                        notes.push(format!("UndeclaredConsumption: {class}"));
                    }
                    notes.push(format!("computed {} > declared {}", w.lhs, w.rhs));
                    (Status::Violated, Some(w.assignment))
                }
                Ok(Verdict::Unverified(why)) => {
                    notes.push(why);
                    (Status::Unverified, None)
                }
                Err(e) => {
                    notes.push(e.to_string());
                    (Status::Unverified, None)
                }
            }
        };
        out.push(ClauseReport {
            method: m.to_string(),
            clause,
            declared: bound.map(|b| b.to_string()),
            computed: computed.to_string(),
            verdict,
            witness,
            notes,
        });
    };
    for (c, b) in &declared.mem_req {
        check(clause_name(c, None), c, summary.mem_req_of(c), Some(b));
    }
    for ((t, c), b) in &declared.esc {
        check(clause_name(c, Some(t)), c, summary.esc_of(t, c), Some(b));
    }
    for (c, e) in &summary.mem_req {
        if !declared.mem_req.contains_key(c) {
            check(clause_name(c, None), c, e.clone(), None);
        }
    }
    for ((t, c), e) in &summary.esc {
        if !declared.esc.contains_key(&(t.clone(), c.clone())) {
            check(clause_name(c, Some(t)), c, e.clone(), None);
        }
    }
    // undeclared consumption that never materializes on the grid is fine
    out.retain(|r| r.declared.is_some() || r.verdict != Status::Verified);
    out
}

/// Whether every computed escape fits in the computed requirement.
pub fn subset_holds(summary: &ConsumptionSummary, opts: &Options) -> bool {
    let mut classes: BTreeSet<&String> = summary.mem_req.keys().collect();
    classes.extend(summary.esc.keys().map(|(_, c)| c));
    classes.into_iter().all(|c| {
        let total = summary
            .esc
            .iter()
            .filter(|((_, k), _)| k == c)
            .fold(SymExpr::zero(), |a, (_, e)| a.add(e));
        let mr = summary.mem_req_of(c);
        let mut params = total.vars();
        params.extend(mr.vars());
        for c in &summary.requires {
            params.extend(c.vars());
        }
        if params.iter().any(|v| is_opaque(v)) {
            return true;
        }
        !matches!(
            opts.engine.entails_leq(&total, &mr, &summary.requires, &params, &opts.grid),
            Ok(Verdict::Violated(_))
        )
    })
}

/// Summaries, bound verdicts and lifetime verdicts for a whole program.
pub fn check_program(res: &Resolved, opts: &Options) -> VerificationReport {
    let cg = CallGraph::new(res);
    let (sums, mut diagnostics) = summarize_program(res, opts);
    diagnostics.extend(lint::lint_contract_placement(&res.program));
    diagnostics.extend(lint::lint_bounds(res, &opts.grid));

    let mut recursive: BTreeSet<MethodRef> = BTreeSet::new();
    for scc in cg.bottom_up() {
        if cg.is_recursive(&scc) {
            recursive.extend(scc);
        }
    }
    let mut clauses = Vec::new();
    let mut summaries = BTreeMap::new();
    for (m, s) in &sums {
        clauses.extend(check_method(res, m, s, opts, recursive.contains(m)));
        let mut notes = s.notes.clone();
        if !subset_holds(s, opts) {
            notes.push("escaping objects exceed the requirement on the grid".into());
        }
        summaries.insert(
            m.to_string(),
            SummaryReport {
                mem_req: s.mem_req.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
                esc: s
                    .esc
                    .iter()
                    .map(|((t, c), v)| (format!("{t}:{c}"), v.to_string()))
                    .collect(),
                notes,
            },
        );
    }
    clauses.sort_by(|a, b| (&a.method, &a.clause).cmp(&(&b.method, &b.clause)));

    let esc_sums: BTreeMap<MethodRef, EscapeSummary> = escape::escape_summaries(res);
    let mut lifetimes = Vec::new();
    for m in res.method_refs() {
        match escape::check_lifetimes(res, m, &esc_sums) {
            Ok(vs) => lifetimes.extend(vs.into_iter().map(|v| LifetimeReport {
                method: v.method.to_string(),
                site: v.site,
                line: v.line,
                subject: v.subject.to_string(),
                status: v.status.name().to_string(),
                detail: v.status.to_string(),
                verdict: if v.status.is_violation() {
                    Status::Violated
                } else {
                    Status::Verified
                },
            })),
            Err(e) => diagnostics.push(Diagnostic::error("EscapeError", e.to_string(), res.method(m).span)),
        }
    }
    let mut status = clauses
        .iter()
        .map(|c| c.verdict)
        .chain(lifetimes.iter().map(|l| l.verdict))
        .max()
        .unwrap_or(Status::Verified);
    if diagnostics.iter().any(|d| d.severity == crate::frontend::Severity::Error) {
        status = status.max(Status::Unverified);
    }
    VerificationReport {
        mode: opts.mode,
        status,
        clauses,
        lifetimes,
        summaries,
        diagnostics,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, parse_expr, resolve};

    fn load(src: &str) -> Resolved {
        resolve(parse(src).unwrap()).unwrap()
    }

    fn mref(s: &str) -> MethodRef {
        let (c, m) = s.split_once('.').unwrap();
        MethodRef::new(c, m)
    }

    fn sym(s: &str) -> SymExpr {
        SymExpr::from_poly(lower::path_poly(&parse_expr(s).unwrap()).unwrap())
    }

    fn sums(src: &str, mode: Mode) -> BTreeMap<MethodRef, ConsumptionSummary> {
        summarize_program(&load(src), &Options::with_mode(mode)).0
    }

    const FAMILY: &str = include_str!("../../../corpus/family.mcl");
    const TEMPS: &str = include_str!("../../../corpus/temporaries.mcl");
    const BIG: &str = include_str!("../../../corpus/big_family.mcl");
    const OBJ: &str = include_str!("../../../corpus/family_object.mcl");

    #[test]
    fn create_family_quantities() {
        let s = &sums(FAMILY, Mode::ByType)[&mref("Town.CreateFamily")];
        assert_eq!(s.mem_req_of("Logger"), SymExpr::int(1));
        assert_eq!(s.mem_req_of("Person"), sym("firstNames.length"));
        assert_eq!(s.mem_req_of("Person[]"), sym("firstNames.length"));
        assert_eq!(s.mem_req_of("Family"), SymExpr::int(1));
        assert_eq!(s.esc_of(&Tag::Return, "Person"), sym("firstNames.length"));
        assert_eq!(s.esc_of(&Tag::Return, "Person[]"), sym("firstNames.length"));
        assert_eq!(s.esc_of(&Tag::Return, "Family"), SymExpr::int(1));
    }

    #[test]
    fn call_composition_of_m() {
        let s = &sums(TEMPS, Mode::ByType)[&mref("A.m")];
        assert_eq!(s.call_part["A"], sym("n + 3"));
        assert_eq!(s.mem_req_of("A"), sym("n + 5"));
        assert_eq!(s.esc_of(&Tag::Return, "A"), SymExpr::int(2));
        assert_eq!(s.esc_of(&Tag::User("Param".into()), "A"), SymExpr::int(1));
        let diffs: Vec<SymExpr> = s.call_sites.iter().map(|c| c.per_class["A"].0.clone()).collect();
        assert_eq!(diffs, vec![sym("n"), sym("n - 2")]);
    }

    #[test]
    fn loop_bodies_of_m1_and_m2() {
        let all = sums(TEMPS, Mode::ByType);
        assert_eq!(all[&mref("A.m1")].mem_req_of("A"), sym("m + 1"));
        // the k - 2 trip count is only nonnegative under the precondition
        assert_eq!(all[&mref("A.m2")].mem_req_of("A"), sym("k"));
    }

    #[test]
    fn triangular_escape() {
        let s = &sums(BIG, Mode::ByType)[&mref("Town.CreateBigFamily")];
        assert_eq!(s.esc_of(&Tag::Return, "Person"), sym("n * (n + 1) / 2"));
        assert_eq!(s.mem_req_of("Logger"), SymExpr::int(1));
    }

    #[test]
    fn object_mode_collapses_classes() {
        let s = &sums(OBJ, Mode::ObjectCount)[&mref("Town.CreateFamily")];
        assert_eq!(s.mem_req_of(OBJECT), sym("2 + 2 * firstNames.length"));
        assert_eq!(s.esc_of(&Tag::Return, OBJECT), sym("1 + 2 * firstNames.length"));
    }

    #[test]
    fn empty_method_has_zero_summary() {
        let s = &sums("class A { method m() { } }", Mode::ByType)[&mref("A.m")];
        assert!(s.mem_req.is_empty() && s.esc.is_empty());
    }

    #[test]
    fn branches_are_summed() {
        let s = &sums(
            "class A { method m(b: bool) { if b { var x: A = new A(); } else { var y: A = new A(); } } }",
            Mode::ByType,
        )[&mref("A.m")];
        assert_eq!(s.mem_req_of("A"), SymExpr::int(2));
    }

    #[test]
    fn running_example_verifies() {
        for (src, mode) in [(FAMILY, Mode::ByType), (TEMPS, Mode::ByType), (BIG, Mode::ByType), (OBJ, Mode::ObjectCount)] {
            let r = check_program(&load(src), &Options::with_mode(mode));
            assert_eq!(r.status, Status::Verified, "{}", r.to_human());
            assert!(!r.clauses.is_empty());
        }
    }

    #[test]
    fn lowered_bound_is_violated_with_witness() {
        let src = TEMPS.replace("memreq<A>(n + 5)", "memreq<A>(n + 4)");
        let r = check_program(&load(&src), &Options::default());
        let c = r.clause("A.m", "memreq<A>").unwrap();
        assert_eq!(c.verdict, Status::Violated);
        assert!(c.witness.is_some());
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn undeclared_consumption() {
        let r = check_program(&load("class A { field f: A; method m() { memreq<A>(1); var x: A = new A(); var b: B = new B(); } } class B { }"), &Options::default());
        let c = r.clause("A.m", "memreq<B>").unwrap();
        assert_eq!(c.verdict, Status::Violated);
        assert!(c.notes.iter().any(|n| n.contains("UndeclaredConsumption")));
    }

    #[test]
    fn zero_bound_on_allocation() {
        let r = check_program(&load("class A { method m() { memreq<A>(0); var x: A = new A(); } }"), &Options::default());
        assert_eq!(r.clause("A.m", "memreq<A>").unwrap().verdict, Status::Violated);
    }

    #[test]
    fn never_consumed_class_is_noted() {
        let r = check_program(&load("class A { method m() { memreq<A>(3); } }"), &Options::default());
        let c = r.clause("A.m", "memreq<A>").unwrap();
        assert_eq!(c.verdict, Status::Verified);
        assert!(c.notes.iter().any(|n| n.contains("no consumption")));
    }

    #[test]
    fn mutated_field_bound_is_unverified() {
        let src = "class A { field size: int;
            method m() { memreq<A[]>(this.size); this.size = this.size + 1; var xs: A[] = new A[this.size]; } }";
        let r = check_program(&load(src), &Options::default());
        assert_eq!(r.clause("A.m", "memreq<A[]>").unwrap().verdict, Status::Unverified);
    }

    #[test]
    fn single_definition_locals_are_substituted() {
        let src = "class A { method m(n: int) { memreq<A[]>(2 * n); var k: int = n + n; var xs: A[] = new A[k]; } }";
        let s = &sums(src, Mode::ByType)[&mref("A.m")];
        assert_eq!(s.mem_req_of("A[]"), sym("2 * n"));
    }

    #[test]
    fn recursion_needs_contracts() {
        let bare = "class A { method f(n: int) { var x: A = new A(); if n > 0 { f(n - 1); } } }";
        let r = check_program(&load(bare), &Options::default());
        assert!(r.diagnostics.iter().any(|d| d.code == "CyclicWithoutContract"));
        assert_eq!(r.status, Status::Unverified);
        let ok = "class A { method f(n: int) { memreq<A>(1); var x: A = new A(); if n > 0 { f(n - 1); } } }";
        let r = check_program(&load(ok), &Options::default());
        let c = r.clause("A.f", "memreq<A>").unwrap();
        assert!(c.notes.iter().any(|n| n.starts_with("assume-guarantee")));
    }

    #[test]
    fn callee_without_contract_contributes_its_summary() {
        let src = "class A {
            method helper(n: int) { for i = 1 .. n { var t: A = new A(); } }
            method m(n: int) { memreq<A>(n); helper(n); } }";
        let s = &sums(src, Mode::ByType)[&mref("A.m")];
        assert_eq!(s.mem_req_of("A"), sym("n"));
        assert_eq!(check_program(&load(src), &Options::default()).status, Status::Verified);
    }

    #[test]
    fn unguarded_symbolic_trip_count_is_clamped() {
        let src = "class A { method m(a: int, b: int) { for i = a .. b { var t: A = new A(); } } }";
        let s = &sums(src, Mode::ByType)[&mref("A.m")];
        assert_eq!(s.mem_req_of("A"), sym("b - a + 1").max(&SymExpr::zero()));
    }

    #[test]
    fn subset_invariant_on_corpus() {
        for src in [FAMILY, TEMPS, BIG] {
            for s in sums(src, Mode::ByType).values() {
                assert!(subset_holds(s, &Options::default()), "{}", s.method);
            }
        }
    }
}
