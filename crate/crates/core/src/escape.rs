//! Points-to graphs and the lifetime-annotation checker.
//!
//! Each method gets one flow-insensitive exit graph. Calls inline the part
//! of the callee's exit graph reachable from its roots, with callee
//! parameter and load nodes mapped onto caller nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::Serialize;

use crate::callgraph::CallGraph;
use crate::frontend::ast::*;
use crate::frontend::Resolved;

pub const ARRAY_FIELD: &str = "[*]";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Node {
    Global,
    Param(String),
    /// Unknown object read through `field` from outside objects rooted at
    /// parameter `root`; one node per (root, field).
    Load { root: String, field: String },
    /// Objects allocated at statement `site`.
    Inside(u32),
}

impl Node {
    fn is_outside(&self) -> bool {
        matches!(self, Node::Param(_) | Node::Load { .. })
    }

    fn root(&self) -> Option<&str> {
        match self {
            Node::Param(p) => Some(p),
            Node::Load { root, .. } => Some(root),
            _ => None,
        }
    }

    /// Stable DOT identifier.
    pub fn dot_id(&self) -> String {
        match self {
            Node::Global => "global".into(),
            Node::Param(p) => format!("p_{p}"),
            Node::Load { root, field } => {
                let f = if field == ARRAY_FIELD { "arr" } else { field };
                format!("l_{root}_{f}")
            }
            Node::Inside(s) => format!("n{s}"),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Global => f.write_str("global"),
            Node::Param(p) => write!(f, "param {p}"),
            Node::Load { root, field } => write!(f, "load {root}..{field}"),
            Node::Inside(s) => write!(f, "site {s}"),
        }
    }
}

pub type Edge = (Node, String, Node);

/// `(L, N, E)` plus the returned node set.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PointsToGraph {
    pub locals: BTreeMap<String, BTreeSet<Node>>,
    pub nodes: BTreeSet<Node>,
    pub edges: BTreeSet<Edge>,
    pub returned: BTreeSet<Node>,
}

impl PointsToGraph {
    fn add_node(&mut self, n: &Node) -> bool {
        self.nodes.insert(n.clone())
    }

    fn add_edge(&mut self, a: &Node, f: &str, b: &Node) -> bool {
        let mut changed = self.add_node(a);
        changed |= self.add_node(b);
        changed | self.edges.insert((a.clone(), f.to_string(), b.clone()))
    }

    fn bind(&mut self, var: &str, ns: &BTreeSet<Node>) -> bool {
        let mut changed = false;
        for n in ns {
            changed |= self.add_node(n);
        }
        let slot = self.locals.entry(var.to_string()).or_default();
        for n in ns {
            changed |= slot.insert(n.clone());
        }
        changed
    }

    pub fn successors(&self, n: &Node, field: &str) -> BTreeSet<Node> {
        self.edges
            .iter()
            .filter(|(a, f, _)| a == n && f == field)
            .map(|(_, _, b)| b.clone())
            .collect()
    }

    pub fn var(&self, v: &str) -> BTreeSet<Node> {
        self.locals.get(v).cloned().unwrap_or_default()
    }

    /// Nodes reachable from `from` (reflexive), ignoring field labels.
    pub fn reachable_set(&self, from: &BTreeSet<Node>) -> BTreeSet<Node> {
        let mut seen: BTreeSet<Node> = BTreeSet::new();
        let mut stack: Vec<Node> = from.iter().cloned().collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n.clone()) {
                for (a, _, b) in &self.edges {
                    if *a == n && !seen.contains(b) {
                        stack.push(b.clone());
                    }
                }
            }
        }
        seen
    }

    pub fn reachable(&self, from: &BTreeSet<Node>, target: &Node) -> bool {
        self.reachable_set(from).contains(target)
    }

    /// Graphviz rendering: dotted ellipses for parameter and load nodes,
    /// solid for allocation sites.
    pub fn to_dot(&self, name: &str, site_labels: &BTreeMap<u32, String>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{name}\" {{");
        for n in &self.nodes {
            let (label, style) = match n {
                Node::Global => ("global".to_string(), "dashed"),
                Node::Param(p) => (p.clone(), "dotted"),
                Node::Load { root, field } => (format!("{root}..{field}"), "dotted"),
                Node::Inside(s) => (
                    match site_labels.get(s) {
                        Some(c) => format!("{c}@{s}"),
                        None => format!("@{s}"),
                    },
                    "solid",
                ),
            };
            let _ = writeln!(out, "  {} [label=\"{label}\", style={style}];", n.dot_id());
        }
        for (a, f, b) in &self.edges {
            let _ = writeln!(out, "  {} -> {} [label=\"{f}\"];", a.dot_id(), b.dot_id());
        }
        if !self.returned.is_empty() {
            let _ = writeln!(out, "  ret [shape=plaintext, label=\"return\"];");
            for n in &self.returned {
                let _ = writeln!(out, "  ret -> {};", n.dot_id());
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum EscapeRoot {
    Return,
    ThisReachable,
    ParamReachable(String),
    Global,
}

impl fmt::Display for EscapeRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EscapeRoot::Return => f.write_str("return"),
            EscapeRoot::ThisReachable => f.write_str("this"),
            EscapeRoot::ParamReachable(p) => write!(f, "parameter {p}"),
            EscapeRoot::Global => f.write_str("global"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EscapeSummary {
    pub method: MethodRef,
    /// Exit graph of the method.
    pub ptg: PointsToGraph,
    /// Every allocation site (own or inlined from callees) reachable from a
    /// root at exit, with the roots it is reachable from.
    pub escaping: BTreeMap<u32, BTreeSet<EscapeRoot>>,
    /// Objects designated by each contract tag.
    pub tags: BTreeMap<Tag, BTreeSet<Node>>,
}

impl EscapeSummary {
    /// Allocation sites reachable from the objects of tag `t`.
    pub fn tagged_sites(&self, t: &Tag) -> BTreeSet<u32> {
        let from = self.tags.get(t).cloned().unwrap_or_default();
        sites(&self.ptg.reachable_set(&from))
    }

    fn roots(&self) -> BTreeSet<Node> {
        roots_of(&self.ptg)
    }
}

fn sites(ns: &BTreeSet<Node>) -> BTreeSet<u32> {
    ns.iter()
        .filter_map(|n| match n {
            Node::Inside(s) => Some(*s),
            _ => None,
        })
        .collect()
}

fn roots_of(ptg: &PointsToGraph) -> BTreeSet<Node> {
    let mut r: BTreeSet<Node> = ptg
        .nodes
        .iter()
        .filter(|n| matches!(n, Node::Param(_) | Node::Global))
        .cloned()
        .collect();
    r.extend(ptg.returned.iter().cloned());
    if let Some(outs) = ptg.locals.get(OUT_ROOTS) {
        r.extend(outs.iter().cloned());
    }
    r
}

/// Pseudo-variable collecting the node sets of `out` parameters.
const OUT_ROOTS: &str = "<out>";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LifetimeStatus {
    Ok,
    TagMismatch { expected: Tag, actual: Vec<String> },
    EscapesButUnannotated { roots: Vec<String> },
    AnnotatedButCaptured,
    SuppressedByDestLocal,
}

impl LifetimeStatus {
    pub fn is_violation(&self) -> bool {
        matches!(
            self,
            LifetimeStatus::TagMismatch { .. }
                | LifetimeStatus::EscapesButUnannotated { .. }
                | LifetimeStatus::AnnotatedButCaptured
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            LifetimeStatus::Ok => "ok",
            LifetimeStatus::TagMismatch { .. } => "tag-mismatch",
            LifetimeStatus::EscapesButUnannotated { .. } => "escapes-but-unannotated",
            LifetimeStatus::AnnotatedButCaptured => "annotated-but-captured",
            LifetimeStatus::SuppressedByDestLocal => "suppressed-by-dest-local",
        }
    }
}

impl fmt::Display for LifetimeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LifetimeStatus::TagMismatch { expected, actual } => {
                write!(f, "tag-mismatch: expected {expected}, reachable from {}", or_none(actual))
            }
            LifetimeStatus::EscapesButUnannotated { roots } => {
                write!(f, "escapes-but-unannotated: reachable from {}", roots.join(", "))
            }
            s => f.write_str(s.name()),
        }
    }
}

fn or_none(v: &[String]) -> String {
    if v.is_empty() {
        "nothing".into()
    } else {
        v.join(", ")
    }
}

/// What a lifetime verdict is about.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Subject {
    Allocation { class: String },
    AddEsc { callee: MethodRef, dst: Tag, src: Tag },
    /// Objects escaping a callee that stay reachable from the caller's
    /// roots without an `add_esc`.
    CallEscapes { callee: MethodRef },
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Allocation { class } => write!(f, "new {class}"),
            Subject::AddEsc { callee, dst, src } => write!(f, "add_esc({dst}, {src}) on {callee}"),
            Subject::CallEscapes { callee } => write!(f, "objects escaping {callee}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LifetimeVerdict {
    pub method: MethodRef,
    pub site: u32,
    pub line: u32,
    pub subject: Subject,
    pub status: LifetimeStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EscapeError {
    #[error("no escape summary for callee {0}")]
    MissingSummary(MethodRef),
    #[error("tag {0} is not bound in {1}")]
    UnknownTag(Tag, MethodRef),
}

/// Class counted by each allocation site.
pub fn allocation_sites(program: &Program) -> BTreeMap<u32, String> {
    let mut out = BTreeMap::new();
    for (_, m) in program.methods() {
        walk(&m.body, &mut |s| match &s.kind {
            StmtKind::New { class, .. } => {
                out.insert(s.id, class.clone());
            }
            StmtKind::NewArray { elem, .. } => {
                out.insert(s.id, Type::Array(Box::new(elem.clone())).class_ref());
            }
            _ => {}
        });
    }
    out
}

struct Builder<'a> {
    res: &'a Resolved,
    mref: &'a MethodRef,
    summaries: &'a BTreeMap<MethodRef, EscapeSummary>,
    g: PointsToGraph,
}

impl<'a> Builder<'a> {
    fn is_ref(&self, e: &Expr) -> bool {
        match e {
            Expr::Null => false,
            _ => self.res.type_of(self.mref, e).is_some_and(|t| t.is_ref()),
        }
    }

    fn is_global(&self, v: &str) -> bool {
        self.res.var_type(self.mref, v).is_none() && self.res.program.global(v).is_some()
    }

    /// Nodes an object of `n` may point to through `field`, creating the
    /// load node for outside objects.
    fn load(&mut self, n: &Node, field: &str) -> BTreeSet<Node> {
        let mut out = self.g.successors(n, field);
        match n {
            Node::Global => {
                out.insert(Node::Global);
            }
            _ if n.is_outside() => {
                let l = Node::Load {
                    root: n.root().expect("outside nodes have roots").to_string(),
                    field: field.to_string(),
                };
                self.g.add_edge(n, field, &l);
                out.insert(l);
            }
            _ => {}
        }
        out
    }

    fn eval(&mut self, e: &Expr) -> BTreeSet<Node> {
        if !self.is_ref(e) {
            return BTreeSet::new();
        }
        match e {
            Expr::This => BTreeSet::from([Node::Param("this".into())]),
            Expr::Var(v) if self.is_global(v) => {
                let mut s = self.g.successors(&Node::Global, v);
                s.insert(Node::Global);
                s
            }
            Expr::Var(v) => self.g.var(v),
            Expr::Field(b, f) => self.eval_load(b, f),
            Expr::Index(a, _) => self.eval_load(a, ARRAY_FIELD),
            _ => BTreeSet::new(),
        }
    }

    fn eval_load(&mut self, base: &Expr, field: &str) -> BTreeSet<Node> {
        let mut out = BTreeSet::new();
        for n in self.eval(base) {
            out.extend(self.load(&n, field));
        }
        out
    }

    fn assign(&mut self, t: &Target, ns: &BTreeSet<Node>) -> bool {
        match t {
            Target::Declare(v, _) => self.g.bind(v, ns),
            Target::Var(v) if self.is_global(v) => {
                let mut ch = false;
                for n in ns {
                    ch |= self.g.add_edge(&Node::Global, v, n);
                }
                ch
            }
            Target::Var(v) => {
                let mut ch = self.g.bind(v, ns);
                if self.is_out(v) {
                    ch |= self.g.bind(OUT_ROOTS, ns);
                }
                ch
            }
            Target::Field(b, f) => self.store(b, f, ns),
            Target::Index(a, _) => self.store(a, ARRAY_FIELD, ns),
        }
    }

    fn is_out(&self, v: &str) -> bool {
        self.res
            .method(self.mref)
            .param(v)
            .is_some_and(|p| p.mode == ParamMode::Out)
    }

    fn store(&mut self, base: &Expr, f: &str, ns: &BTreeSet<Node>) -> bool {
        let mut ch = false;
        for b in self.eval(base) {
            for n in ns {
                ch |= self.g.add_edge(&b, f, n);
            }
        }
        ch
    }

    fn block(&mut self, stmts: &[Stmt]) -> bool {
        let mut ch = false;
        for s in stmts {
            ch |= self.stmt(s);
        }
        ch
    }

    fn stmt(&mut self, s: &Stmt) -> bool {
        let before = (self.g.nodes.len(), self.g.edges.len());
        let mut ch = false;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let ns = self.eval(value);
                ch |= self.assign(target, &ns);
            }
            StmtKind::New { target, args, .. } => {
                let obj = Node::Inside(s.id);
                ch |= self.g.add_node(&obj);
                let ns = BTreeSet::from([obj.clone()]);
                ch |= self.assign(target, &ns);
                if let Some(callee) = self.res.callee(s.id).cloned() {
                    let actuals: Vec<Actual> = args.iter().map(|a| Actual::In(self.eval(a))).collect();
                    ch |= self.inline(&callee, ns, actuals).0;
                }
            }
            StmtKind::NewArray { target, .. } => {
                let obj = Node::Inside(s.id);
                ch |= self.g.add_node(&obj);
                ch |= self.assign(target, &BTreeSet::from([obj]));
            }
            StmtKind::Call {
                target,
                receiver,
                args,
                ..
            } => {
                let callee = self.res.callee(s.id).expect("resolved call").clone();
                let recv = match receiver {
                    Some(r) => self.eval(r),
                    None => BTreeSet::from([Node::Param("this".into())]),
                };
                let actuals: Vec<Actual> = args
                    .iter()
                    .map(|a| match a {
                        Arg::In(e) => Actual::In(self.eval(e)),
                        Arg::Out(v) => Actual::Out(v.clone()),
                    })
                    .collect();
                let (c, ret, outs) = self.inline(&callee, recv, actuals);
                ch |= c;
                for (v, ns) in outs {
                    ch |= self.assign(&Target::Var(v), &ns);
                }
                if let Some(t) = target {
                    ch |= self.assign(t, &ret);
                }
            }
            StmtKind::For { body, .. } => ch |= self.block(body),
            StmtKind::If {
                then_body, else_body, ..
            } => {
                ch |= self.block(then_body);
                ch |= self.block(else_body);
            }
            StmtKind::Return(Some(e)) => {
                for n in self.eval(e) {
                    ch |= self.g.add_node(&n);
                    ch |= self.g.returned.insert(n);
                }
            }
            _ => {}
        }
        ch || before != (self.g.nodes.len(), self.g.edges.len())
    }

    /// Applies the callee summary.
    fn inline(&mut self, callee: &MethodRef, this: BTreeSet<Node>, actuals: Vec<Actual>) -> Inlined {
        let Some(sum) = self.summaries.get(callee) else {
            // recursive bootstrap: nothing known yet
            return (false, BTreeSet::new(), Vec::new());
        };
        let decl = self.res.method(callee);
        let visible = sum.ptg.reachable_set(&sum.roots());
        let mut mu: BTreeMap<Node, BTreeSet<Node>> = BTreeMap::new();
        mu.insert(Node::Param("this".into()), this);
        mu.insert(Node::Global, BTreeSet::from([Node::Global]));
        let mut outs = Vec::new();
        for (p, a) in decl.params.iter().zip(actuals) {
            match a {
                Actual::In(ns) => {
                    mu.insert(Node::Param(p.name.clone()), ns);
                }
                Actual::Out(v) => outs.push((p.name.clone(), v)),
            }
        }
        for n in &visible {
            if let Node::Inside(_) = n {
                mu.insert(n.clone(), BTreeSet::from([n.clone()]));
            }
        }
        // load nodes: whatever the mapped base can reach through the field
        let mut changed = false;
        loop {
            let mut grew = false;
            for (a, f, b) in &sum.ptg.edges {
                if !visible.contains(a) {
                    continue;
                }
                if let Node::Load { .. } = b {
                    let bases = mu.get(a).cloned().unwrap_or_default();
                    let mut img = BTreeSet::new();
                    for x in &bases {
                        img.extend(self.load(x, f));
                    }
                    let slot = mu.entry(b.clone()).or_default();
                    for y in img {
                        grew |= slot.insert(y);
                    }
                }
            }
            if !grew {
                break;
            }
        }
        for (a, f, b) in &sum.ptg.edges {
            if !visible.contains(a) {
                continue;
            }
            let (xs, ys) = (mu.get(a).cloned().unwrap_or_default(), mu.get(b).cloned().unwrap_or_default());
            for x in &xs {
                for y in &ys {
                    changed |= self.g.add_edge(x, f, y);
                }
            }
        }
        for n in &visible {
            for m in mu.get(n).into_iter().flatten() {
                changed |= self.g.add_node(m);
            }
        }
        let image = |ns: &BTreeSet<Node>| -> BTreeSet<Node> {
            ns.iter().flat_map(|n| mu.get(n).cloned().unwrap_or_default()).collect()
        };
        let ret = image(&sum.ptg.returned);
        let outs = outs
            .into_iter()
            .map(|(p, v)| (v, image(&sum.ptg.var(&p))))
            .collect();
        (changed, ret, outs)
    }
}

/// Whether the graph changed, the returned nodes, and out parameter bindings.
type Inlined = (bool, BTreeSet<Node>, Vec<(String, BTreeSet<Node>)>);

enum Actual {
    In(BTreeSet<Node>),
    Out(String),
}

/// Exit points-to graph of one method given its callees' summaries.
pub fn build_ptg(res: &Resolved, m: &MethodRef, summaries: &BTreeMap<MethodRef, EscapeSummary>) -> PointsToGraph {
    let decl = res.method(m);
    let mut b = Builder {
        res,
        mref: m,
        summaries,
        g: PointsToGraph::default(),
    };
    b.g.add_node(&Node::Param("this".into()));
    b.g.locals
        .insert("this".into(), BTreeSet::from([Node::Param("this".into())]));
    for p in &decl.params {
        if p.mode == ParamMode::In && p.ty.is_ref() {
            let n = Node::Param(p.name.clone());
            b.g.add_node(&n);
            b.g.locals.insert(p.name.clone(), BTreeSet::from([n]));
        }
    }
    while b.block(&decl.body) {}
    b.g
}

fn tag_nodes(res: &Resolved, m: &MethodRef, g: &PointsToGraph) -> BTreeMap<Tag, BTreeSet<Node>> {
    let decl = res.method(m);
    let mut tags = BTreeMap::new();
    tags.insert(Tag::Return, g.returned.clone());
    tags.insert(Tag::This, BTreeSet::from([Node::Param("this".into())]));
    for c in &decl.contract.clauses {
        if let Clause::BindEsc { tag, path } = c {
            let mut cur = match path.root.as_str() {
                "return" => g.returned.clone(),
                "this" => BTreeSet::from([Node::Param("this".into())]),
                p => g.var(p),
            };
            for f in &path.fields {
                cur = cur.iter().flat_map(|n| g.successors(n, f)).collect();
            }
            tags.insert(tag.clone(), cur);
        }
    }
    tags
}

fn summarize(res: &Resolved, m: &MethodRef, ptg: PointsToGraph) -> EscapeSummary {
    let mut escaping: BTreeMap<u32, BTreeSet<EscapeRoot>> = BTreeMap::new();
    let mut mark = |from: BTreeSet<Node>, root: EscapeRoot, g: &PointsToGraph| {
        for s in sites(&g.reachable_set(&from)) {
            escaping.entry(s).or_default().insert(root.clone());
        }
    };
    mark(ptg.returned.clone(), EscapeRoot::Return, &ptg);
    for n in &ptg.nodes {
        match n {
            Node::Param(p) if p == "this" => mark(BTreeSet::from([n.clone()]), EscapeRoot::ThisReachable, &ptg),
            Node::Param(p) => mark(BTreeSet::from([n.clone()]), EscapeRoot::ParamReachable(p.clone()), &ptg),
            Node::Global => mark(BTreeSet::from([n.clone()]), EscapeRoot::Global, &ptg),
            _ => {}
        }
    }
    // out parameters are reported under their own name
    let decl = res.method(m);
    for p in decl.params.iter().filter(|p| p.mode == ParamMode::Out) {
        let from = ptg.var(&p.name);
        for s in sites(&ptg.reachable_set(&from)) {
            let e = escaping.entry(s).or_default();
            e.insert(EscapeRoot::ParamReachable(p.name.clone()));
        }
    }
    let tags = tag_nodes(res, m, &ptg);
    EscapeSummary {
        method: m.clone(),
        ptg,
        escaping,
        tags,
    }
}

/// Escape summaries for every method, bottom-up over the call graph;
/// recursive components iterate from empty summaries to a fixpoint.
pub fn escape_summaries(res: &Resolved) -> BTreeMap<MethodRef, EscapeSummary> {
    let cg = CallGraph::new(res);
    let mut out: BTreeMap<MethodRef, EscapeSummary> = BTreeMap::new();
    for scc in cg.bottom_up() {
        loop {
            let mut changed = false;
            for m in &scc {
                let ptg = build_ptg(res, m, &out);
                let s = summarize(res, m, ptg);
                debug_assert!(out.get(m).is_none_or(|old| {
                    old.ptg.nodes.is_subset(&s.ptg.nodes) && old.ptg.edges.is_subset(&s.ptg.edges)
                }));
                if out.get(m) != Some(&s) {
                    out.insert(m.clone(), s);
                    changed = true;
                }
            }
            if !changed || !cg.is_recursive(&scc) {
                break;
            }
        }
    }
    out
}

/// Whether `target` is reachable from `from` in `ptg`.
pub fn reachable(ptg: &PointsToGraph, from: &BTreeSet<Node>, target: &Node) -> bool {
    ptg.reachable(from, target)
}

fn root_names(s: &EscapeSummary, site: u32) -> Vec<String> {
    s.escaping
        .get(&site)
        .map(|r| r.iter().map(|x| x.to_string()).collect())
        .unwrap_or_default()
}

/// Lifetime verdicts of one method: own allocations, `add_esc` claims and
/// unannotated callee escapes.
pub fn check_lifetimes(
    res: &Resolved,
    m: &MethodRef,
    summaries: &BTreeMap<MethodRef, EscapeSummary>,
) -> Result<Vec<LifetimeVerdict>, EscapeError> {
    let sum = summaries.get(m).ok_or_else(|| EscapeError::MissingSummary(m.clone()))?;
    let decl = res.method(m);
    let g = &sum.ptg;
    let sites_of = allocation_sites(&res.program);
    let mut out = Vec::new();
    let tag_reach = |t: &Tag| -> Result<BTreeSet<Node>, EscapeError> {
        let from = sum
            .tags
            .get(t)
            .ok_or_else(|| EscapeError::UnknownTag(t.clone(), m.clone()))?;
        Ok(g.reachable_set(from))
    };
    let mut err = None;
    walk(&decl.body, &mut |s| {
        if err.is_some() {
            return;
        }
        let verdict = |subject: Subject, status: LifetimeStatus| LifetimeVerdict {
            method: m.clone(),
            site: s.id,
            line: s.span.line,
            subject,
            status,
        };
        let dest = match &s.kind {
            StmtKind::New { dest, .. } | StmtKind::NewArray { dest, .. } => Some(dest),
            _ => None,
        };
        if let Some(dest) = dest {
            let node = Node::Inside(s.id);
            let escapes = sum.escaping.contains_key(&s.id);
            let status = match dest {
                Dest::Local => LifetimeStatus::SuppressedByDestLocal,
                Dest::Temporary if escapes => LifetimeStatus::EscapesButUnannotated {
                    roots: root_names(sum, s.id),
                },
                Dest::Temporary => LifetimeStatus::Ok,
                Dest::Esc(_) if !escapes => LifetimeStatus::AnnotatedButCaptured,
                Dest::Esc(t) => match tag_reach(t) {
                    Ok(r) if r.contains(&node) => LifetimeStatus::Ok,
                    Ok(_) => LifetimeStatus::TagMismatch {
                        expected: t.clone(),
                        actual: root_names(sum, s.id),
                    },
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                },
            };
            let class = sites_of.get(&s.id).cloned().unwrap_or_default();
            out.push(verdict(Subject::Allocation { class }, status));
        }
        let add_esc = match &s.kind {
            StmtKind::New { add_esc, .. } | StmtKind::Call { add_esc, .. } => add_esc,
            _ => return,
        };
        let Some(callee) = res.callee(s.id) else { return };
        let Some(csum) = summaries.get(callee) else {
            err = Some(EscapeError::MissingSummary(callee.clone()));
            return;
        };
        let callee_escaping: BTreeSet<u32> = csum.escaping.keys().copied().collect();
        let mut covered = BTreeSet::new();
        for a in add_esc {
            let claimed = csum.tagged_sites(&a.src);
            let dst = match tag_reach(&a.dst) {
                Ok(r) => r,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            let missing: Vec<u32> = claimed
                .iter()
                .copied()
                .filter(|c| !dst.contains(&Node::Inside(*c)))
                .collect();
            covered.extend(claimed.iter().copied());
            let status = if missing.is_empty() {
                LifetimeStatus::Ok
            } else {
                let mut actual: BTreeSet<String> = BTreeSet::new();
                for c in &missing {
                    actual.extend(root_names(sum, *c));
                }
                LifetimeStatus::TagMismatch {
                    expected: a.dst.clone(),
                    actual: actual.into_iter().collect(),
                }
            };
            out.push(verdict(
                Subject::AddEsc {
                    callee: callee.clone(),
                    dst: a.dst.clone(),
                    src: a.src.clone(),
                },
                status,
            ));
        }
        let stray: Vec<String> = callee_escaping
            .difference(&covered)
            .filter(|c| sum.escaping.contains_key(c))
            .flat_map(|c| root_names(sum, *c))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !stray.is_empty() {
            out.push(verdict(
                Subject::CallEscapes { callee: callee.clone() },
                LifetimeStatus::EscapesButUnannotated { roots: stray },
            ));
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
