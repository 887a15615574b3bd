use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};

/// Per-method symbol information computed by resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodInfo {
    /// Types of parameters, locals and loop variables (names are unique
    /// within a method).
    pub vars: BTreeMap<String, Type>,
    pub loop_vars: BTreeSet<String>,
}

/// A program whose names, types, callees and tags are all bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolved {
    pub program: Program,
    /// Callee of every call statement and of every `new` whose class
    /// declares a constructor, keyed by statement id.
    pub callees: BTreeMap<u32, MethodRef>,
    pub methods: BTreeMap<MethodRef, MethodInfo>,
}

impl Resolved {
    pub fn method(&self, r: &MethodRef) -> &MethodDecl {
        self.program.method(r).expect("resolved method exists")
    }

    pub fn info(&self, r: &MethodRef) -> &MethodInfo {
        &self.methods[r]
    }

    pub fn callee(&self, stmt: u32) -> Option<&MethodRef> {
        self.callees.get(&stmt)
    }

    pub fn method_refs(&self) -> impl Iterator<Item = &MethodRef> {
        self.methods.keys()
    }

    pub fn var_type(&self, m: &MethodRef, v: &str) -> Option<&Type> {
        self.methods.get(m)?.vars.get(v)
    }

    /// Static type of a program expression inside method `m`.
    pub fn type_of(&self, m: &MethodRef, e: &Expr) -> Option<Type> {
        match e {
            Expr::Int(_) | Expr::Max(..) => Some(Type::Int),
            Expr::Bool(_) => Some(Type::Bool),
            Expr::Str(_) => Some(Type::Str),
            Expr::Null => None,
            Expr::This => Some(Type::Class(m.class.clone())),
            Expr::Var(v) => self
                .var_type(m, v)
                .cloned()
                .or_else(|| self.program.global(v).map(|g| g.ty.clone())),
            Expr::Field(b, f) => match self.type_of(m, b)? {
                Type::Array(_) if f == "length" => Some(Type::Int),
                Type::Class(c) => self.program.class(&c)?.field(f).map(|fd| fd.ty.clone()),
                _ => None,
            },
            Expr::Index(a, _) => self.type_of(m, a)?.element().cloned(),
            Expr::Unary(UnOp::Neg, _) => Some(Type::Int),
            Expr::Unary(UnOp::Not, _) => Some(Type::Bool),
            Expr::Binary(op, _, _) => Some(match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => Type::Int,
                _ => Type::Bool,
            }),
        }
    }
}

/// Binds every class, callee, path and tag, and type-checks bodies.
pub fn resolve(program: Program) -> Result<Resolved, Diagnostics> {
    let mut r = Resolver {
        prog: &program,
        errors: Vec::new(),
        callees: BTreeMap::new(),
        methods: BTreeMap::new(),
    };
    r.run();
    if r.errors.is_empty() {
        let (callees, methods) = (r.callees, r.methods);
        Ok(Resolved {
            program,
            callees,
            methods,
        })
    } else {
        Err(Diagnostics(r.errors))
    }
}

struct Resolver<'p> {
    prog: &'p Program,
    errors: Vec<Diagnostic>,
    callees: BTreeMap<u32, MethodRef>,
    methods: BTreeMap<MethodRef, MethodInfo>,
}

struct Scope<'p> {
    class: &'p ClassDecl,
    method: &'p MethodDecl,
    mref: MethodRef,
    /// Block-structured visible names.
    frames: Vec<BTreeMap<String, Type>>,
    all: BTreeMap<String, Type>,
    loop_vars: BTreeSet<String>,
    active_loops: Vec<String>,
    ghosts: BTreeSet<String>,
    assigned: BTreeSet<String>,
}

impl<'p> Scope<'p> {
    fn lookup(&self, v: &str) -> Option<&Type> {
        self.frames.iter().rev().find_map(|f| f.get(v))
    }
}

fn compatible(expected: &Type, actual: &Option<Type>) -> bool {
    match actual {
        None => expected.is_ref(),
        Some(t) => t == expected,
    }
}

impl<'p> Resolver<'p> {
    fn err(&mut self, code: &str, msg: String, span: Span) {
        self.errors.push(Diagnostic::error(code, msg, span));
    }

    fn run(&mut self) {
        let prog = self.prog;
        let mut seen = BTreeSet::new();
        for c in &prog.classes {
            if c.name == "object" {
                self.err("DuplicateClass", "`object` is reserved for type-hiding contracts".into(), c.span);
            }
            if !seen.insert(c.name.as_str()) {
                self.err("DuplicateClass", format!("class `{}` is declared twice", c.name), c.span);
            }
        }
        let mut gseen = BTreeSet::new();
        for g in &prog.globals {
            if !gseen.insert(g.name.as_str()) {
                self.err("DuplicateGlobal", format!("global `{}` is declared twice", g.name), g.span);
            }
            self.check_type(&g.ty, g.span);
        }
        for c in &prog.classes {
            let mut fseen = BTreeSet::new();
            for f in &c.fields {
                if !fseen.insert(f.name.as_str()) {
                    self.err(
                        "DuplicateField",
                        format!("field `{}` is declared twice in `{}`", f.name, c.name),
                        f.span,
                    );
                }
                self.check_type(&f.ty, f.span);
            }
            let mut mseen = BTreeSet::new();
            for m in &c.methods {
                if !mseen.insert(m.name.as_str()) {
                    let what = if m.is_ctor { "constructor" } else { "method" };
                    self.err(
                        "DuplicateMethod",
                        format!("{what} `{}` is declared twice in `{}`", m.name, c.name),
                        m.span,
                    );
                }
            }
            for m in &c.methods {
                self.method(c, m);
            }
        }
    }

    fn check_type(&mut self, t: &Type, span: Span) {
        match t {
            Type::Class(c) if self.prog.class(c).is_none() => {
                self.err("UndefinedClass", format!("class `{c}` is not declared"), span);
            }
            Type::Array(e) => self.check_type(e, span),
            _ => {}
        }
    }

    fn check_class_ref(&mut self, c: &str, span: Span) {
        let base = c.trim_end_matches("[]");
        let ok = match base {
            "object" => base.len() == c.len(),
            "int" | "bool" | "string" => base.len() != c.len(),
            _ => self.prog.class(base).is_some(),
        };
        if !ok {
            self.err("UndefinedClass", format!("class `{c}` is not declared"), span);
        }
    }

    fn method(&mut self, c: &'p ClassDecl, m: &'p MethodDecl) {
        let mut frame = BTreeMap::new();
        let mut all = BTreeMap::new();
        for p in &m.params {
            self.check_type(&p.ty, m.span);
            if p.name == "this" || frame.insert(p.name.clone(), p.ty.clone()).is_some() {
                self.err("DuplicateLocal", format!("parameter `{}` is declared twice", p.name), m.span);
            }
            all.insert(p.name.clone(), p.ty.clone());
        }
        if !m.is_ctor {
            self.check_type(&m.ret, m.span);
        }
        let mut sc = Scope {
            class: c,
            method: m,
            mref: MethodRef::new(&c.name, &m.name),
            frames: vec![frame],
            all,
            loop_vars: BTreeSet::new(),
            active_loops: Vec::new(),
            ghosts: BTreeSet::new(),
            assigned: BTreeSet::new(),
        };
        self.contract(&mut sc);
        self.block(&mut sc, &m.body, 0);
        for p in &m.params {
            if p.mode == ParamMode::Out && !sc.assigned.contains(&p.name) {
                self.err(
                    "OutParamUnassigned",
                    format!("out parameter `{}` is never assigned", p.name),
                    m.span,
                );
            }
        }
        self.methods.insert(
            sc.mref.clone(),
            MethodInfo {
                vars: sc.all,
                loop_vars: sc.loop_vars,
            },
        );
    }

    fn contract(&mut self, sc: &mut Scope<'p>) {
        let m = sc.method;
        let mut bound = BTreeSet::new();
        for cl in &m.contract.clauses {
            if let Clause::BindEsc { tag, path } = cl {
                match tag {
                    Tag::User(_) => {
                        if !bound.insert(tag.clone()) {
                            self.err("DuplicateBinding", format!("tag `{tag}` is bound twice"), m.span);
                        }
                    }
                    _ => self.err(
                        "BadBinding",
                        format!("built-in tag `{tag}` cannot be rebound"),
                        m.span,
                    ),
                }
                self.check_path(sc, path, m.span);
            }
        }
        for cl in &m.contract.clauses {
            match cl {
                Clause::Requires(e) => self.entry_expr(sc, e, true, m.span),
                Clause::MemReq { class, bound: b } => {
                    self.check_class_ref(class, m.span);
                    self.entry_expr(sc, b, false, m.span);
                }
                Clause::Esc { class, tag, bound: b } => {
                    self.check_class_ref(class, m.span);
                    self.check_tag(sc, tag, m.span);
                    self.entry_expr(sc, b, false, m.span);
                }
                Clause::BindEsc { .. } => {}
            }
        }
    }

    fn check_tag(&mut self, sc: &Scope<'p>, tag: &Tag, span: Span) {
        if let Tag::User(_) = tag {
            if sc.method.contract.binding(tag).is_none() {
                self.err("UnboundTag", format!("tag `{tag}` has no bind_esc"), span);
            }
        }
    }

    fn check_path(&mut self, sc: &Scope<'p>, path: &PathExpr, span: Span) {
        let mut ty = match path.root.as_str() {
            "this" => Some(Type::Class(sc.class.name.clone())),
            "return" => Some(sc.method.ret.clone()).filter(|t| *t != Type::Void),
            r => sc.method.param(r).map(|p| p.ty.clone()),
        };
        if ty.is_none() {
            self.err("BadPath", format!("path root `{}` is not in scope", path.root), span);
            return;
        }
        for f in &path.fields {
            ty = match ty.take() {
                Some(Type::Class(c)) => self
                    .prog
                    .class(&c)
                    .and_then(|cd| cd.field(f))
                    .map(|fd| fd.ty.clone()),
                _ => None,
            };
            if ty.is_none() {
                self.err("BadPath", format!("`{path}` does not name a field chain"), span);
                return;
            }
        }
        if !ty.as_ref().is_some_and(Type::is_ref) {
            self.err("BadPath", format!("`{path}` does not denote objects"), span);
        }
    }

    /// Entry-visible integer expression (bound), or condition over such
    /// integers (`cond`).
    fn entry_expr(&mut self, sc: &Scope<'p>, e: &Expr, cond: bool, span: Span) {
        let ok = if cond { self.entry_cond(sc, e) } else { self.entry_int(sc, e) };
        if !ok {
            let what = if cond { "precondition" } else { "bound" };
            self.err(
                "BadBound",
                format!(
                    "{what} `{}` may only use integer parameters, entry-visible fields and array lengths",
                    super::pretty::expr(e)
                ),
                span,
            );
        }
    }

    fn entry_path_type(&self, sc: &Scope<'p>, e: &Expr) -> Option<Type> {
        match e {
            Expr::This => Some(Type::Class(sc.class.name.clone())),
            Expr::Var(v) => sc.method.param(v).filter(|p| p.mode == ParamMode::In).map(|p| p.ty.clone()),
            Expr::Field(b, f) => match self.entry_path_type(sc, b)? {
                Type::Array(_) if f == "length" => Some(Type::Int),
                Type::Class(c) => self.prog.class(&c)?.field(f).map(|fd| fd.ty.clone()),
                _ => None,
            },
            _ => None,
        }
    }

    fn entry_int(&self, sc: &Scope<'p>, e: &Expr) -> bool {
        match e {
            Expr::Int(_) => true,
            Expr::Var(_) | Expr::Field(..) => self.entry_path_type(sc, e) == Some(Type::Int),
            Expr::Unary(UnOp::Neg, x) => self.entry_int(sc, x),
            Expr::Binary(BinOp::Add | BinOp::Sub | BinOp::Mul, l, r) => self.entry_int(sc, l) && self.entry_int(sc, r),
            Expr::Binary(BinOp::Div, l, r) => self.entry_int(sc, l) && matches!(**r, Expr::Int(d) if d > 0),
            _ => false,
        }
    }

    fn entry_cond(&self, sc: &Scope<'p>, e: &Expr) -> bool {
        match e {
            Expr::Bool(_) => true,
            Expr::Unary(UnOp::Not, x) => self.entry_cond(sc, x),
            Expr::Binary(BinOp::And | BinOp::Or, l, r) => self.entry_cond(sc, l) && self.entry_cond(sc, r),
            Expr::Binary(op, l, r) if op.is_comparison() => self.entry_int(sc, l) && self.entry_int(sc, r),
            _ => false,
        }
    }

    fn declare(&mut self, sc: &mut Scope<'p>, name: &str, ty: &Type, span: Span) {
        self.check_type(ty, span);
        if name == "this" || sc.all.contains_key(name) || self.prog.global(name).is_some() {
            self.err(
                "DuplicateLocal",
                format!("`{name}` is already declared in this method"),
                span,
            );
        }
        sc.all.insert(name.to_string(), ty.clone());
        sc.frames.last_mut().expect("scope frame").insert(name.to_string(), ty.clone());
    }

    fn block(&mut self, sc: &mut Scope<'p>, stmts: &'p [Stmt], depth: usize) {
        sc.frames.push(BTreeMap::new());
        for (i, s) in stmts.iter().enumerate() {
            if matches!(s.kind, StmtKind::Return(_)) && stmts[i + 1..].iter().any(|t| !t.is_ghost()) {
                self.err("UnreachableCode", "statements after `return`".into(), stmts[i + 1].span);
            }
            self.stmt(sc, s, depth);
        }
        sc.frames.pop();
    }

    fn expr_type(&mut self, sc: &Scope<'p>, e: &Expr, span: Span) -> Option<Type> {
        match e {
            Expr::Int(_) => Some(Type::Int),
            Expr::Bool(_) => Some(Type::Bool),
            Expr::Str(_) => Some(Type::Str),
            Expr::Null => None,
            Expr::This => Some(Type::Class(sc.class.name.clone())),
            Expr::Var(v) => {
                if let Some(t) = sc.lookup(v) {
                    return Some(t.clone());
                }
                if sc.ghosts.contains(v) {
                    return Some(Type::Int);
                }
                if let Some(g) = self.prog.global(v) {
                    return Some(g.ty.clone());
                }
                self.err("UndefinedVariable", format!("`{v}` is not declared"), span);
                Some(Type::Int)
            }
            Expr::Field(b, f) => match self.expr_type(sc, b, span) {
                Some(Type::Array(_)) if f == "length" => Some(Type::Int),
                Some(Type::Class(c)) => match self.prog.class(&c).and_then(|cd| cd.field(f)) {
                    Some(fd) => Some(fd.ty.clone()),
                    None => {
                        self.err("UndefinedField", format!("class `{c}` has no field `{f}`"), span);
                        Some(Type::Int)
                    }
                },
                t => {
                    let t = t.map(|t| t.to_string()).unwrap_or_else(|| "null".into());
                    self.err("UndefinedField", format!("`{t}` has no field `{f}`"), span);
                    Some(Type::Int)
                }
            },
            Expr::Index(a, i) => {
                let it = self.expr_type(sc, i, span);
                if it != Some(Type::Int) {
                    self.err("TypeMismatch", "array index must be an int".into(), span);
                }
                match self.expr_type(sc, a, span) {
                    Some(Type::Array(t)) => Some(*t),
                    _ => {
                        self.err("TypeMismatch", "indexing a non-array value".into(), span);
                        Some(Type::Int)
                    }
                }
            }
            Expr::Unary(UnOp::Neg, x) => {
                self.expect_type(sc, x, &Type::Int, span);
                Some(Type::Int)
            }
            Expr::Unary(UnOp::Not, x) => {
                self.expect_type(sc, x, &Type::Bool, span);
                Some(Type::Bool)
            }
            Expr::Binary(op, l, r) => match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                    self.expect_type(sc, l, &Type::Int, span);
                    self.expect_type(sc, r, &Type::Int, span);
                    Some(Type::Int)
                }
                BinOp::And | BinOp::Or => {
                    self.expect_type(sc, l, &Type::Bool, span);
                    self.expect_type(sc, r, &Type::Bool, span);
                    Some(Type::Bool)
                }
                BinOp::Eq | BinOp::Ne => {
                    let lt = self.expr_type(sc, l, span);
                    let rt = self.expr_type(sc, r, span);
                    let ok = match (&lt, &rt) {
                        (None, None) => true,
                        (Some(t), None) | (None, Some(t)) => t.is_ref(),
                        (Some(a), Some(b)) => a == b,
                    };
                    if !ok {
                        self.err("TypeMismatch", "comparing values of different types".into(), span);
                    }
                    Some(Type::Bool)
                }
                _ => {
                    self.expect_type(sc, l, &Type::Int, span);
                    self.expect_type(sc, r, &Type::Int, span);
                    Some(Type::Bool)
                }
            },
            Expr::Max(a, b) => {
                self.expect_type(sc, a, &Type::Int, span);
                self.expect_type(sc, b, &Type::Int, span);
                Some(Type::Int)
            }
        }
    }

    fn expect_type(&mut self, sc: &Scope<'p>, e: &Expr, t: &Type, span: Span) {
        let actual = self.expr_type(sc, e, span);
        if !compatible(t, &actual) {
            let a = actual.map(|a| a.to_string()).unwrap_or_else(|| "null".into());
            self.err("TypeMismatch", format!("expected `{t}`, found `{a}`"), span);
        }
    }

    /// Type of an assignment target; records writes to variables.
    fn target(&mut self, sc: &mut Scope<'p>, t: &Target, span: Span) -> Option<Type> {
        match t {
            Target::Declare(n, ty) => {
                self.declare(sc, n, ty, span);
                Some(ty.clone())
            }
            Target::Var(v) => {
                if sc.active_loops.contains(v) {
                    self.err("LoopVarAssigned", format!("loop variable `{v}` is assigned in its body"), span);
                }
                sc.assigned.insert(v.clone());
                self.expr_type(sc, &Expr::Var(v.clone()), span)
            }
            Target::Field(b, f) => self.expr_type(sc, &Expr::Field(Box::new(b.clone()), f.clone()), span),
            Target::Index(a, i) => {
                self.expr_type(sc, &Expr::Index(Box::new(a.clone()), Box::new(i.clone())), span)
            }
        }
    }

    fn assign_check(&mut self, expected: Option<Type>, actual: Option<Type>, span: Span) {
        if let Some(exp) = expected {
            if !compatible(&exp, &actual) {
                let a = actual.map(|a| a.to_string()).unwrap_or_else(|| "null".into());
                self.err("TypeMismatch", format!("cannot assign `{a}` to `{exp}`"), span);
            }
        }
    }

    fn stmt(&mut self, sc: &mut Scope<'p>, s: &'p Stmt, depth: usize) {
        let span = s.span;
        match &s.kind {
            StmtKind::Local { name, ty } => self.declare(sc, name, ty, span),
            StmtKind::Assign { target, value } => {
                let vt = self.expr_type(sc, value, span);
                let tt = self.target(sc, target, span);
                self.assign_check(tt, vt, span);
            }
            StmtKind::New {
                target,
                class,
                args,
                dest,
                add_esc,
            } => {
                let arg_types: Vec<Option<Type>> = args.iter().map(|a| self.expr_type(sc, a, span)).collect();
                let tt = self.target(sc, target, span);
                let Some(cd) = self.prog.class(class) else {
                    self.err("UndefinedClass", format!("class `{class}` is not declared"), span);
                    return;
                };
                self.assign_check(tt, Some(Type::Class(class.clone())), span);
                match cd.ctor() {
                    Some(ctor) => {
                        self.check_args_in(ctor, &arg_types, span);
                        let callee = MethodRef::new(class, &ctor.name);
                        for a in add_esc {
                            self.check_add_esc(sc, ctor, a, span);
                        }
                        self.callees.insert(s.id, callee);
                    }
                    None => {
                        if !args.is_empty() {
                            self.err(
                                "ArityMismatch",
                                format!("class `{class}` has no constructor taking arguments"),
                                span,
                            );
                        }
                        if !add_esc.is_empty() {
                            self.err(
                                "MisplacedAddEsc",
                                format!("add_esc on `new {class}` which has no constructor"),
                                span,
                            );
                        }
                    }
                }
                if let Dest::Esc(t) = dest {
                    self.check_tag(sc, t, span);
                }
            }
            StmtKind::NewArray { target, elem, len, dest } => {
                self.check_type(elem, span);
                self.expect_type(sc, len, &Type::Int, span);
                let tt = self.target(sc, target, span);
                self.assign_check(tt, Some(Type::Array(Box::new(elem.clone()))), span);
                if let Dest::Esc(t) = dest {
                    self.check_tag(sc, t, span);
                }
            }
            StmtKind::Call {
                target,
                receiver,
                method,
                args,
                add_esc,
            } => {
                let class = match receiver {
                    None => Some(sc.class.name.clone()),
                    Some(r) => match self.expr_type(sc, r, span) {
                        Some(Type::Class(c)) => Some(c),
                        _ => {
                            self.err("TypeMismatch", "method call on a non-object value".into(), span);
                            None
                        }
                    },
                };
                let Some(class) = class else { return };
                let callee = self.prog.class(&class).and_then(|c| c.method(method)).filter(|m| !m.is_ctor);
                let Some(callee) = callee else {
                    self.err(
                        "UndefinedMethod",
                        format!("class `{class}` has no method `{method}`"),
                        span,
                    );
                    return;
                };
                if args.len() != callee.params.len() {
                    self.err(
                        "ArityMismatch",
                        format!(
                            "`{class}.{method}` takes {} arguments, {} given",
                            callee.params.len(),
                            args.len()
                        ),
                        span,
                    );
                } else {
                    for (a, p) in args.iter().zip(&callee.params) {
                        match (a, p.mode) {
                            (Arg::In(e), ParamMode::In) => {
                                let t = self.expr_type(sc, e, span);
                                self.assign_check(Some(p.ty.clone()), t, span);
                            }
                            (Arg::Out(v), ParamMode::Out) => {
                                let t = self.target(sc, &Target::Var(v.clone()), span);
                                if t.as_ref() != Some(&p.ty) {
                                    self.err("TypeMismatch", format!("out argument `{v}` has the wrong type"), span);
                                }
                            }
                            _ => self.err(
                                "ArgModeMismatch",
                                format!("argument for `{}` must be passed as `{}`", p.name, match p.mode {
                                    ParamMode::In => "a value",
                                    ParamMode::Out => "out",
                                }),
                                span,
                            ),
                        }
                    }
                }
                for a in add_esc {
                    self.check_add_esc(sc, callee, a, span);
                }
                let tt = target.as_ref().map(|t| self.target(sc, t, span));
                if let Some(tt) = tt {
                    if callee.ret == Type::Void {
                        self.err("TypeMismatch", format!("`{method}` returns no value"), span);
                    } else {
                        self.assign_check(tt, Some(callee.ret.clone()), span);
                    }
                }
                self.callees.insert(s.id, MethodRef::new(class, method));
            }
            StmtKind::For {
                var,
                lo,
                hi,
                space,
                body,
                ..
            } => {
                self.expect_type(sc, lo, &Type::Int, span);
                self.expect_type(sc, hi, &Type::Int, span);
                sc.frames.push(BTreeMap::new());
                self.declare(sc, var, &Type::Int, span);
                sc.loop_vars.insert(var.clone());
                sc.active_loops.push(var.clone());
                if let Some(sp) = space {
                    self.expect_type(sc, sp, &Type::Bool, span);
                }
                self.block(sc, body, depth + 1);
                sc.active_loops.pop();
                sc.frames.pop();
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.expect_type(sc, cond, &Type::Bool, span);
                self.block(sc, then_body, depth);
                self.block(sc, else_body, depth);
            }
            StmtKind::Return(e) => {
                if depth > 0 {
                    self.err("ReturnInLoop", "`return` inside a loop body".into(), span);
                }
                let ret = &sc.method.ret;
                match e {
                    None if *ret != Type::Void => {
                        self.err("TypeMismatch", format!("missing return value of type `{ret}`"), span)
                    }
                    None => {}
                    Some(_) if *ret == Type::Void => {
                        self.err("TypeMismatch", "returning a value from a void method".into(), span)
                    }
                    Some(e) => {
                        let t = self.expr_type(sc, e, span);
                        self.assign_check(Some(ret.clone()), t, span);
                    }
                }
            }
            StmtKind::Annotation(a) => match a {
                Annotation::DestEsc(t) => self.check_tag(sc, t, span),
                Annotation::AddEsc(a) => self.check_tag(sc, &a.dst, span),
                _ => {}
            },
            StmtKind::GhostDecl { name, init } => {
                self.expr_type(sc, init, span);
                sc.ghosts.insert(name.clone());
            }
            StmtKind::GhostAssign { value, .. } => {
                self.expr_type(sc, value, span);
            }
            StmtKind::Ensure { bound, .. } => {
                self.expr_type(sc, bound, span);
            }
        }
    }

    fn check_args_in(&mut self, ctor: &MethodDecl, args: &[Option<Type>], span: Span) {
        if args.len() != ctor.params.len() {
            self.err(
                "ArityMismatch",
                format!("constructor takes {} arguments, {} given", ctor.params.len(), args.len()),
                span,
            );
            return;
        }
        for (a, p) in args.iter().zip(&ctor.params) {
            if p.mode == ParamMode::Out {
                self.err("ArgModeMismatch", "constructors cannot take out parameters".into(), span);
            }
            self.assign_check(Some(p.ty.clone()), a.clone(), span);
        }
    }

    fn check_add_esc(&mut self, sc: &Scope<'p>, callee: &MethodDecl, a: &AddEsc, span: Span) {
        self.check_tag(sc, &a.dst, span);
        if let Tag::User(_) = &a.src {
            if callee.contract.binding(&a.src).is_none() {
                self.err(
                    "UnboundTag",
                    format!("callee `{}` does not bind tag `{}`", callee.name, a.src),
                    span,
                );
            }
        }
        if a.src == Tag::Return && callee.ret == Type::Void && !callee.is_ctor {
            self.err("UnboundTag", format!("callee `{}` returns nothing", callee.name), span);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;

    fn codes(src: &str) -> Vec<String> {
        match resolve(parse(src).unwrap()) {
            Ok(_) => Vec::new(),
            Err(d) => d.0.into_iter().map(|d| d.code).collect(),
        }
    }

    #[test]
    fn unbound_user_tag() {
        assert_eq!(codes("class A { method m() { esc<A>(Foo, 1); } }"), vec!["UnboundTag"]);
    }

    #[test]
    fn bind_esc_resolves_out_param() {
        let src = "class A { method m(out b: A) { esc<A>(P, 1); bind_esc(P, b); dest_esc(P); b = new A(); } }";
        assert!(codes(src).is_empty());
    }

    #[test]
    fn undefined_names() {
        assert_eq!(codes("class A { method m() { var x: B = null; } }"), vec!["UndefinedClass"]);
        assert_eq!(codes("class A { method m() { this.q(); } }"), vec!["UndefinedMethod"]);
        assert_eq!(codes("class A { method m() { bind_esc(T, this.nope); } }"), vec!["BadPath"]);
    }

    #[test]
    fn loop_variable_is_read_only() {
        assert_eq!(
            codes("class A { method m(n: int) { for i = 0 ..< n { i = 3; } } }"),
            vec!["LoopVarAssigned"]
        );
    }

    #[test]
    fn bounds_are_entry_visible() {
        assert_eq!(
            codes("class A { method m(n: int) { memreq<A>(k); var k: int = n; } }"),
            vec!["BadBound"]
        );
        assert!(codes("class A { field s: int; method m(xs: A[]) { memreq<A>(xs.length * this.s / 2); } }").is_empty());
    }

    #[test]
    fn call_and_ctor_resolution() {
        let src = "class P { ctor(n: int) { } }
class A { method mk(): P { var p: P = new P(3); return p; } method m() { var q: P = mk(); } }";
        let r = resolve(parse(src).unwrap()).unwrap();
        let targets: Vec<String> = r.callees.values().map(|m| m.to_string()).collect();
        assert_eq!(targets, vec!["P.P", "A.mk"]);
    }
}
