use std::fmt;

use serde::Serialize;

/// Source position. Spans never take part in AST equality, so a program and
/// its pretty-printed reparse compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Type {
    Int,
    Bool,
    Str,
    Void,
    Class(String),
    Array(Box<Type>),
}

impl Type {
    pub fn is_ref(&self) -> bool {
        matches!(self, Type::Class(_) | Type::Array(_))
    }

    pub fn element(&self) -> Option<&Type> {
        match self {
            Type::Array(t) => Some(t),
            _ => None,
        }
    }

    /// Counting class of an allocation of this type, e.g. `Person[]`.
    pub fn class_ref(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("string"),
            Type::Void => f.write_str("void"),
            Type::Class(c) => f.write_str(c),
            Type::Array(t) => write!(f, "{t}[]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Program {
    pub globals: Vec<GlobalDecl>,
    pub classes: Vec<ClassDecl>,
}

impl Program {
    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn method(&self, r: &MethodRef) -> Option<&MethodDecl> {
        self.class(&r.class)?.method(&r.method)
    }

    /// Looks up `Class.method`.
    pub fn find(&self, qualified: &str) -> Option<(MethodRef, &MethodDecl)> {
        let (c, m) = qualified.split_once('.')?;
        let r = MethodRef::new(c, m);
        let d = self.method(&r)?;
        Some((r, d))
    }

    /// Every method in declaration order.
    pub fn methods(&self) -> impl Iterator<Item = (MethodRef, &MethodDecl)> {
        self.classes
            .iter()
            .flat_map(|c| c.methods.iter().map(move |m| (MethodRef::new(&c.name, &m.name), m)))
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn ctor(&self) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.is_ctor)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

/// `Class.method`; constructors are named after their class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MethodRef {
    pub class: String,
    pub method: String,
}

impl MethodRef {
    pub fn new(class: impl Into<String>, method: impl Into<String>) -> Self {
        Self {
            class: class.into(),
            method: method.into(),
        }
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.method)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ParamMode {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub mode: ParamMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MethodDecl {
    pub name: String,
    pub is_ctor: bool,
    pub params: Vec<Param>,
    pub ret: Type,
    pub contract: MethodContract,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl MethodDecl {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tag {
    Return,
    This,
    User(String),
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Return => f.write_str("Return"),
            Tag::This => f.write_str("This"),
            Tag::User(n) => f.write_str(n),
        }
    }
}

/// `root.f1.f2...`, root being a parameter, `this` or `return`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathExpr {
    pub root: String,
    pub fields: Vec<String>,
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.root)?;
        for fl in &self.fields {
            write!(f, ".{fl}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Clause {
    Requires(Expr),
    MemReq { class: String, bound: Expr },
    Esc { class: String, tag: Tag, bound: Expr },
    BindEsc { tag: Tag, path: PathExpr },
}

/// Entry annotations in source order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MethodContract {
    pub clauses: Vec<Clause>,
}

impl MethodContract {
    pub fn requires(&self) -> impl Iterator<Item = &Expr> {
        self.clauses.iter().filter_map(|c| match c {
            Clause::Requires(e) => Some(e),
            _ => None,
        })
    }

    pub fn memreq(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.clauses.iter().filter_map(|c| match c {
            Clause::MemReq { class, bound } => Some((class.as_str(), bound)),
            _ => None,
        })
    }

    pub fn esc(&self) -> impl Iterator<Item = (&Tag, &str, &Expr)> {
        self.clauses.iter().filter_map(|c| match c {
            Clause::Esc { class, tag, bound } => Some((tag, class.as_str(), bound)),
            _ => None,
        })
    }

    pub fn binding(&self, tag: &Tag) -> Option<&PathExpr> {
        self.clauses.iter().find_map(|c| match c {
            Clause::BindEsc { tag: t, path } if t == tag => Some(path),
            _ => None,
        })
    }

    /// Declares at least one memory bound.
    pub fn has_memory_clauses(&self) -> bool {
        self.clauses
            .iter()
            .any(|c| matches!(c, Clause::MemReq { .. } | Clause::Esc { .. }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

/// Side-effect free expression. Calls and allocations are statements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    This,
    Var(String),
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Integer maximum; only in instrumented code.
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn field(base: Expr, f: impl Into<String>) -> Expr {
        Expr::Field(Box::new(base), f.into())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn max(l: Expr, r: Expr) -> Expr {
        Expr::Max(Box::new(l), Box::new(r))
    }

    /// Splits a conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        match self {
            Expr::Binary(BinOp::And, l, r) => {
                let mut v = l.conjuncts();
                v.extend(r.conjuncts());
                v
            }
            e => vec![e],
        }
    }

    /// Bottom-up rewrite.
    pub fn map(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(e) = f(self) {
            return e;
        }
        match self {
            Expr::Field(b, n) => Expr::Field(Box::new(b.map(f)), n.clone()),
            Expr::Index(a, i) => Expr::Index(Box::new(a.map(f)), Box::new(i.map(f))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.map(f))),
            Expr::Binary(op, l, r) => Expr::Binary(*op, Box::new(l.map(f)), Box::new(r.map(f))),
            Expr::Max(l, r) => Expr::Max(Box::new(l.map(f)), Box::new(r.map(f))),
            e => e.clone(),
        }
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Field(b, _) => b.visit(f),
            Expr::Index(a, i) => {
                a.visit(f);
                i.visit(f);
            }
            Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, l, r) | Expr::Max(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            _ => {}
        }
    }

    /// `root.f1...fk` as a path when the expression is a field chain.
    pub fn as_path(&self) -> Option<PathExpr> {
        match self {
            Expr::Var(v) => Some(PathExpr {
                root: v.clone(),
                fields: Vec::new(),
            }),
            Expr::This => Some(PathExpr {
                root: "this".into(),
                fields: Vec::new(),
            }),
            Expr::Field(b, f) => {
                let mut p = b.as_path()?;
                p.fields.push(f.clone());
                Some(p)
            }
            _ => None,
        }
    }

    pub fn from_path(p: &PathExpr) -> Expr {
        let mut e = if p.root == "this" {
            Expr::This
        } else {
            Expr::Var(p.root.clone())
        };
        for f in &p.fields {
            e = Expr::field(e, f.clone());
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    Declare(String, Type),
    Var(String),
    Field(Expr, String),
    Index(Expr, Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Arg {
    In(Expr),
    Out(String),
}

/// Lifetime declaration on an allocation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Dest {
    #[default]
    Temporary,
    Esc(Tag),
    Local,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AddEsc {
    pub dst: Tag,
    pub src: Tag,
}

/// An annotation statement left where it cannot attach.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Annotation {
    Contract(Clause),
    DestEsc(Tag),
    DestLocal,
    AddEsc(AddEsc),
    IterationSpace(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GhostOp {
    Set,
    Add,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum StmtKind {
    Local {
        name: String,
        ty: Type,
    },
    Assign {
        target: Target,
        value: Expr,
    },
    New {
        target: Target,
        class: String,
        args: Vec<Expr>,
        dest: Dest,
        add_esc: Vec<AddEsc>,
    },
    NewArray {
        target: Target,
        elem: Type,
        len: Expr,
        dest: Dest,
    },
    Call {
        target: Option<Target>,
        receiver: Option<Expr>,
        method: String,
        args: Vec<Arg>,
        add_esc: Vec<AddEsc>,
    },
    For {
        var: String,
        lo: Expr,
        hi: Expr,
        inclusive: bool,
        space: Option<Expr>,
        body: Vec<Stmt>,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    Return(Option<Expr>),
    Annotation(Annotation),
    GhostDecl {
        name: String,
        init: Expr,
    },
    GhostAssign {
        name: String,
        op: GhostOp,
        value: Expr,
    },
    /// `ensure(counter <= bound)`: bound read at the point of the statement,
    /// comparison checked when the method returns.
    Ensure {
        counter: String,
        bound: Expr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stmt {
    /// Statement id, unique in the program. Ghost statements and ensures
    /// carry 0 so that instrumentation leaves ids of real statements intact.
    pub id: u32,
    pub span: Span,
    pub kind: StmtKind,
}

impl Stmt {
    pub fn is_ghost(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::GhostDecl { .. } | StmtKind::GhostAssign { .. } | StmtKind::Ensure { .. }
        )
    }

    pub fn ghost(kind: StmtKind) -> Stmt {
        Stmt {
            id: 0,
            span: Span::default(),
            kind,
        }
    }

    pub fn children(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::For { body, .. } => vec![body],
            StmtKind::If {
                then_body, else_body, ..
            } => vec![then_body, else_body],
            _ => Vec::new(),
        }
    }
}

/// Pre-order walk over a statement list.
pub fn walk<'a>(stmts: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        for c in s.children() {
            walk(c, f);
        }
    }
}
