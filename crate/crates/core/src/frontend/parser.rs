use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use super::lexer::{lex, Tok, Token};

const KEYWORDS: &[&str] = &[
    "class",
    "field",
    "method",
    "ctor",
    "global",
    "var",
    "for",
    "if",
    "else",
    "return",
    "new",
    "null",
    "true",
    "false",
    "this",
    "out",
    "while",
    "ghost",
    "ensure",
    "max",
    "requires",
    "memreq",
    "esc",
    "bind_esc",
    "dest_esc",
    "dest_local",
    "add_esc",
    "iteration_space",
    "Return",
    "This",
    "int",
    "bool",
    "string",
    "void",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses MCL source. Annotations are attached to the nodes they govern;
/// annotations that cannot attach stay in the body as
/// [`StmtKind::Annotation`] for the placement lint.
pub fn parse(src: &str) -> Result<Program, Diagnostics> {
    let toks = lex(src).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser { toks, pos: 0 };
    let mut prog = p.program().map_err(|d| Diagnostics(vec![d]))?;
    number_statements(&mut prog);
    Ok(prog)
}

/// Parses a standalone expression (used for contract text in tests and
/// tooling).
pub fn parse_expr(src: &str) -> Result<Expr, Diagnostics> {
    let toks = lex(src).map_err(|d| Diagnostics(vec![d]))?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr().map_err(|d| Diagnostics(vec![d]))?;
    p.expect_eof().map_err(|d| Diagnostics(vec![d]))?;
    Ok(e)
}

/// Assigns ids to real statements in pre-order; ghost statements get 0.
pub fn number_statements(prog: &mut Program) {
    fn go(stmts: &mut [Stmt], next: &mut u32) {
        for s in stmts {
            if s.is_ghost() {
                s.id = 0;
            } else {
                s.id = *next;
                *next += 1;
            }
            match &mut s.kind {
                StmtKind::For { body, .. } => go(body, next),
                StmtKind::If {
                    then_body, else_body, ..
                } => {
                    go(then_body, next);
                    go(else_body, next);
                }
                _ => {}
            }
        }
    }
    let mut next = 1;
    for c in &mut prog.classes {
        for m in &mut c.methods {
            go(&mut m.body, &mut next);
        }
    }
}

type PResult<T> = Result<T, Diagnostic>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Method,
    Loop,
    Plain,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> Diagnostic {
        Diagnostic::error(
            "SyntaxError",
            format!("expected {expected}, found {}", self.peek().describe()),
            self.span(),
        )
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&format!("`{p}`")))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program {
            globals: Vec::new(),
            classes: Vec::new(),
        };
        loop {
            let span = self.span();
            if self.eat_kw("class") {
                prog.classes.push(self.class(span)?);
            } else if self.eat_kw("global") {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.ty()?;
                self.expect_punct(";")?;
                prog.globals.push(GlobalDecl { name, ty, span });
            } else if *self.peek() == Tok::Eof {
                return Ok(prog);
            } else {
                return Err(self.error("`class` or `global`"));
            }
        }
    }

    fn class(&mut self, span: Span) -> PResult<ClassDecl> {
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut c = ClassDecl {
            name,
            fields: Vec::new(),
            methods: Vec::new(),
            span,
        };
        while !self.eat_punct("}") {
            let span = self.span();
            if self.eat_kw("field") {
                let name = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.ty()?;
                self.expect_punct(";")?;
                c.fields.push(FieldDecl { name, ty, span });
            } else if self.eat_kw("method") {
                let name = self.ident()?;
                let params = self.params()?;
                let ret = if self.eat_punct(":") { self.ty()? } else { Type::Void };
                let (body, contract) = self.method_body()?;
                c.methods.push(MethodDecl {
                    name,
                    is_ctor: false,
                    params,
                    ret,
                    contract,
                    body,
                    span,
                });
            } else if self.eat_kw("ctor") {
                let params = self.params()?;
                let (body, contract) = self.method_body()?;
                c.methods.push(MethodDecl {
                    name: c.name.clone(),
                    is_ctor: true,
                    params,
                    ret: Type::Void,
                    contract,
                    body,
                    span,
                });
            } else {
                return Err(self.error("`field`, `method`, `ctor` or `}`"));
            }
        }
        Ok(c)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut ps = Vec::new();
        if self.eat_punct(")") {
            return Ok(ps);
        }
        loop {
            let mode = if self.eat_kw("out") { ParamMode::Out } else { ParamMode::In };
            let name = self.ident()?;
            self.expect_punct(":")?;
            let ty = self.ty()?;
            ps.push(Param { name, ty, mode });
            if self.eat_punct(")") {
                return Ok(ps);
            }
            self.expect_punct(",")?;
        }
    }

    fn base_ty(&mut self) -> PResult<Type> {
        let t = match self.peek().clone() {
            Tok::Ident(s) if s == "int" => Type::Int,
            Tok::Ident(s) if s == "bool" => Type::Bool,
            Tok::Ident(s) if s == "string" => Type::Str,
            Tok::Ident(s) if s == "void" => Type::Void,
            Tok::Ident(s) if !is_keyword(&s) => Type::Class(s),
            _ => return Err(self.error("type")),
        };
        self.bump();
        Ok(t)
    }

    fn ty(&mut self) -> PResult<Type> {
        let mut t = self.base_ty()?;
        while self.eat_punct("[]") {
            t = Type::Array(Box::new(t));
        }
        Ok(t)
    }

    fn method_body(&mut self) -> PResult<(Vec<Stmt>, MethodContract)> {
        let (body, contract, _) = self.block(BlockKind::Method)?;
        Ok((body, contract))
    }

    /// `{ stmt* }` with annotation attachment.
    fn block(&mut self, kind: BlockKind) -> PResult<(Vec<Stmt>, MethodContract, Option<Expr>)> {
        self.expect_punct("{")?;
        let mut raw = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.error("`}`"));
            }
            raw.push(self.stmt()?);
        }
        Ok(attach(raw, kind))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = self.stmt_kind(span)?;
        Ok(Stmt { id: 0, span, kind })
    }

    fn stmt_kind(&mut self, span: Span) -> PResult<StmtKind> {
        if let Some(a) = self.annotation()? {
            return Ok(StmtKind::Annotation(a));
        }
        if self.is_kw("while") {
            return Err(Diagnostic::error(
                "UnsupportedLoop",
                "`while` loops are not supported; use a counted `for` loop",
                span,
            ));
        }
        if self.eat_kw("var") {
            let name = self.ident()?;
            self.expect_punct(":")?;
            let ty = self.ty()?;
            if self.eat_punct(";") {
                return Ok(StmtKind::Local { name, ty });
            }
            self.expect_punct("=")?;
            let k = self.rhs(Target::Declare(name, ty))?;
            self.expect_punct(";")?;
            return Ok(k);
        }
        if self.eat_kw("for") {
            let var = self.ident()?;
            self.expect_punct("=")?;
            let lo = self.expr()?;
            let inclusive = if self.eat_punct("..") {
                true
            } else if self.eat_punct("..<") {
                false
            } else {
                return Err(self.error("`..` or `..<`"));
            };
            let hi = self.expr()?;
            let (body, _, space) = self.block(BlockKind::Loop)?;
            return Ok(StmtKind::For {
                var,
                lo,
                hi,
                inclusive,
                space,
                body,
            });
        }
        if self.eat_kw("if") {
            return self.if_rest();
        }
        if self.eat_kw("return") {
            if self.eat_punct(";") {
                return Ok(StmtKind::Return(None));
            }
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(StmtKind::Return(Some(e)));
        }
        if self.eat_kw("ghost") {
            let k = if self.eat_kw("var") {
                let name = self.ident()?;
                self.expect_punct("=")?;
                StmtKind::GhostDecl {
                    name,
                    init: self.expr()?,
                }
            } else {
                let name = self.ident()?;
                let op = if self.eat_punct("+=") {
                    GhostOp::Add
                } else {
                    self.expect_punct("=")?;
                    GhostOp::Set
                };
                StmtKind::GhostAssign {
                    name,
                    op,
                    value: self.expr()?,
                }
            };
            self.expect_punct(";")?;
            return Ok(k);
        }
        if self.eat_kw("ensure") {
            self.expect_punct("(")?;
            let counter = self.ident()?;
            self.expect_punct("<=")?;
            let bound = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(StmtKind::Ensure { counter, bound });
        }
        // an identifier directly followed by `<` can only be an annotation
        if let (Tok::Ident(name), Tok::Punct("<")) = (self.peek().clone(), self.peek_at(1)) {
            if !is_keyword(&name) {
                return Err(Diagnostic::error(
                    "UnknownAnnotation",
                    format!("unknown annotation `{name}`"),
                    span,
                ));
            }
        }
        // lvalue, call or assignment
        let start = self.pos;
        let lhs = self.postfix()?;
        if self.is_punct("(") {
            self.pos = start;
            let k = self.call(None)?;
            self.expect_punct(";")?;
            return Ok(k);
        }
        self.expect_punct("=")?;
        let target = match lhs {
            Expr::Var(v) => Target::Var(v),
            Expr::Field(b, f) => Target::Field(*b, f),
            Expr::Index(a, i) => Target::Index(*a, *i),
            _ => {
                return Err(Diagnostic::error(
                    "SyntaxError",
                    "left-hand side is not assignable",
                    span,
                ))
            }
        };
        let k = self.rhs(target)?;
        self.expect_punct(";")?;
        Ok(k)
    }

    fn if_rest(&mut self) -> PResult<StmtKind> {
        let cond = self.expr()?;
        let (then_body, _, _) = self.block(BlockKind::Plain)?;
        let else_body = if self.eat_kw("else") {
            if self.is_kw("if") {
                let span = self.span();
                self.bump();
                let k = self.if_rest()?;
                vec![Stmt { id: 0, span, kind: k }]
            } else {
                self.block(BlockKind::Plain)?.0
            }
        } else {
            Vec::new()
        };
        Ok(StmtKind::If {
            cond,
            then_body,
            else_body,
        })
    }

    /// Right-hand side of an assignment: allocation, call or expression.
    fn rhs(&mut self, target: Target) -> PResult<StmtKind> {
        if self.eat_kw("new") {
            let base = self.base_ty()?;
            let mut elem = base;
            while self.eat_punct("[]") {
                elem = Type::Array(Box::new(elem));
            }
            if self.eat_punct("[") {
                let len = self.expr()?;
                self.expect_punct("]")?;
                return Ok(StmtKind::NewArray {
                    target,
                    elem,
                    len,
                    dest: Dest::Temporary,
                });
            }
            let class = match elem {
                Type::Class(c) => c,
                _ => return Err(self.error("`[` after a non-class type")),
            };
            self.expect_punct("(")?;
            let mut args = Vec::new();
            if !self.eat_punct(")") {
                loop {
                    args.push(self.expr()?);
                    if self.eat_punct(")") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
            }
            return Ok(StmtKind::New {
                target,
                class,
                args,
                dest: Dest::Temporary,
                add_esc: Vec::new(),
            });
        }
        let start = self.pos;
        if matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) || self.is_kw("this") {
            let _ = self.postfix()?;
            if self.is_punct("(") {
                self.pos = start;
                return self.call(Some(target));
            }
            self.pos = start;
        }
        let value = self.expr()?;
        Ok(StmtKind::Assign { target, value })
    }

    fn call(&mut self, target: Option<Target>) -> PResult<StmtKind> {
        let span = self.span();
        let callee = self.postfix()?;
        let (receiver, method) = match callee {
            Expr::Var(m) => (None, m),
            Expr::Field(r, m) => (Some(*r), m),
            _ => return Err(Diagnostic::error("SyntaxError", "expected a method name before `(`", span)),
        };
        self.expect_punct("(")?;
        if receiver.is_none() && (self.is_kw("Return") || self.is_kw("This")) {
            return Err(Diagnostic::error(
                "UnknownAnnotation",
                format!("unknown annotation `{method}`"),
                span,
            ));
        }
        let mut args = Vec::new();
        if !self.eat_punct(")") {
            loop {
                if self.eat_kw("out") {
                    args.push(Arg::Out(self.ident()?));
                } else {
                    args.push(Arg::In(self.expr()?));
                }
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(StmtKind::Call {
            target,
            receiver,
            method,
            args,
            add_esc: Vec::new(),
        })
    }

    fn tag(&mut self) -> PResult<Tag> {
        if self.eat_kw("Return") {
            Ok(Tag::Return)
        } else if self.eat_kw("This") {
            Ok(Tag::This)
        } else {
            match self.peek().clone() {
                Tok::Ident(s) if !is_keyword(&s) => {
                    self.bump();
                    Ok(Tag::User(s))
                }
                _ => Err(self.error("tag (`Return`, `This` or a name)")),
            }
        }
    }

    fn class_ref(&mut self) -> PResult<String> {
        self.expect_punct("<")?;
        let t = self.ty()?;
        self.expect_punct(">")?;
        Ok(t.to_string())
    }

    fn path(&mut self) -> PResult<PathExpr> {
        let root = if self.eat_kw("this") {
            "this".to_string()
        } else if self.eat_kw("return") {
            "return".to_string()
        } else {
            self.ident()?
        };
        let mut fields = Vec::new();
        while self.eat_punct(".") {
            fields.push(self.ident()?);
        }
        Ok(PathExpr { root, fields })
    }

    fn annotation(&mut self) -> PResult<Option<Annotation>> {
        let name = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Ok(None),
        };
        let a = match name.as_str() {
            "memreq" => {
                self.bump();
                let class = self.class_ref()?;
                self.expect_punct("(")?;
                let bound = self.expr()?;
                self.expect_punct(")")?;
                Annotation::Contract(Clause::MemReq { class, bound })
            }
            "esc" => {
                self.bump();
                let class = self.class_ref()?;
                self.expect_punct("(")?;
                let tag = self.tag()?;
                self.expect_punct(",")?;
                let bound = self.expr()?;
                self.expect_punct(")")?;
                Annotation::Contract(Clause::Esc { class, tag, bound })
            }
            "bind_esc" => {
                self.bump();
                self.expect_punct("(")?;
                let tag = self.tag()?;
                self.expect_punct(",")?;
                let path = self.path()?;
                self.expect_punct(")")?;
                Annotation::Contract(Clause::BindEsc { tag, path })
            }
            "requires" => {
                self.bump();
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Annotation::Contract(Clause::Requires(e))
            }
            "dest_esc" => {
                self.bump();
                self.expect_punct("(")?;
                let t = self.tag()?;
                self.expect_punct(")")?;
                Annotation::DestEsc(t)
            }
            "dest_local" => {
                self.bump();
                Annotation::DestLocal
            }
            "add_esc" => {
                self.bump();
                self.expect_punct("(")?;
                let dst = self.tag()?;
                self.expect_punct(",")?;
                let src = self.tag()?;
                self.expect_punct(")")?;
                Annotation::AddEsc(AddEsc { dst, src })
            }
            "iteration_space" => {
                self.bump();
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Annotation::IterationSpace(e)
            }
            _ => return Ok(None),
        };
        self.expect_punct(";")?;
        Ok(Some(a))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let p = match self.peek() {
            Tok::Punct(p) => *p,
            _ => return None,
        };
        Some(match p {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            let e = self.unary()?;
            return Ok(match e {
                Expr::Int(v) => Expr::Int(-v),
                e => Expr::Unary(UnOp::Neg, Box::new(e)),
            });
        }
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.eat_punct(".") {
                let f = self.ident()?;
                e = Expr::field(e, f);
            } else if self.eat_punct("[") {
                let i = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::Index(Box::new(e), Box::new(i));
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Bool(true))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Bool(false))
                }
                "null" => {
                    self.bump();
                    Ok(Expr::Null)
                }
                "this" => {
                    self.bump();
                    Ok(Expr::This)
                }
                "max" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let a = self.expr()?;
                    self.expect_punct(",")?;
                    let b = self.expr()?;
                    self.expect_punct(")")?;
                    Ok(Expr::max(a, b))
                }
                _ if !is_keyword(&s) => {
                    self.bump();
                    Ok(Expr::Var(s))
                }
                _ => Err(self.error("expression")),
            },
            _ => Err(self.error("expression")),
        }
    }
}

fn is_dest(a: &Annotation) -> bool {
    matches!(a, Annotation::DestEsc(_) | Annotation::DestLocal)
}

/// Moves entry clauses into the contract, the loop's first iteration space
/// into the loop, and allocation/call annotations onto the statement that
/// follows them.
fn attach(raw: Vec<Stmt>, kind: BlockKind) -> (Vec<Stmt>, MethodContract, Option<Expr>) {
    let lead = raw
        .iter()
        .take_while(|s| matches!(s.kind, StmtKind::Annotation(_)))
        .count();
    let mut contract = MethodContract::default();
    let mut space = None;
    let mut rest: Vec<Stmt> = Vec::with_capacity(raw.len());
    for (i, s) in raw.into_iter().enumerate() {
        if i < lead {
            match (&s.kind, kind) {
                (StmtKind::Annotation(Annotation::Contract(c)), BlockKind::Method) => {
                    contract.clauses.push(c.clone());
                    continue;
                }
                (StmtKind::Annotation(Annotation::IterationSpace(e)), BlockKind::Loop) if space.is_none() => {
                    space = Some(e.clone());
                    continue;
                }
                _ => {}
            }
        }
        rest.push(s);
    }

    let mut out = Vec::with_capacity(rest.len());
    let mut pending: Vec<Stmt> = Vec::new();
    for mut s in rest {
        if matches!(s.kind, StmtKind::Annotation(_)) {
            pending.push(s);
            continue;
        }
        let mut taken = vec![false; pending.len()];
        match &mut s.kind {
            StmtKind::New { dest, add_esc, .. } => {
                if let Some(i) = pending.iter().rposition(|p| matches!(&p.kind, StmtKind::Annotation(a) if is_dest(a))) {
                    if let StmtKind::Annotation(a) = &pending[i].kind {
                        *dest = dest_of(a);
                    }
                    taken[i] = true;
                }
                take_add_esc(&pending, &mut taken, add_esc);
            }
            StmtKind::NewArray { dest, .. } => {
                if let Some(i) = pending.iter().rposition(|p| matches!(&p.kind, StmtKind::Annotation(a) if is_dest(a))) {
                    if let StmtKind::Annotation(a) = &pending[i].kind {
                        *dest = dest_of(a);
                    }
                    taken[i] = true;
                }
            }
            StmtKind::Call { add_esc, .. } => take_add_esc(&pending, &mut taken, add_esc),
            _ => {}
        }
        for (p, t) in pending.drain(..).zip(taken) {
            if !t {
                out.push(p);
            }
        }
        out.push(s);
    }
    out.extend(pending);
    (out, contract, space)
}

fn dest_of(a: &Annotation) -> Dest {
    match a {
        Annotation::DestEsc(t) => Dest::Esc(t.clone()),
        _ => Dest::Local,
    }
}

fn take_add_esc(pending: &[Stmt], taken: &mut [bool], into: &mut Vec<AddEsc>) {
    for (i, p) in pending.iter().enumerate() {
        if let StmtKind::Annotation(Annotation::AddEsc(a)) = &p.kind {
            into.push(a.clone());
            taken[i] = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_class() {
        let p = parse("class A {}").unwrap();
        assert_eq!(p.classes.len(), 1);
        assert!(p.classes[0].methods.is_empty());
    }

    #[test]
    fn annotations_attach_to_allocation() {
        let p = parse(
            "class F { method m(): F {
                dest_esc(Return);
                add_esc(Return, This);
                var f: F = new F();
                return f;
            } }",
        )
        .unwrap();
        let m = &p.classes[0].methods[0];
        match &m.body[0].kind {
            StmtKind::New { dest, add_esc, .. } => {
                assert_eq!(*dest, Dest::Esc(Tag::Return));
                assert_eq!(add_esc.len(), 1);
            }
            k => panic!("{k:?}"),
        }
        assert_eq!(m.body.len(), 2);
    }

    #[test]
    fn misplaced_dest_esc_stays_in_body() {
        let p = parse("class A { method m() { var a: A = new A(); dest_esc(Return); } }").unwrap();
        let m = &p.classes[0].methods[0];
        assert!(matches!(m.body[1].kind, StmtKind::Annotation(Annotation::DestEsc(_))));
    }

    #[test]
    fn while_is_rejected() {
        let e = parse("class A { method m() { while true { } } }").unwrap_err();
        assert_eq!(e.0[0].code, "UnsupportedLoop");
    }

    #[test]
    fn unknown_annotation() {
        let e = parse("class A { method m() { memrequest<A>(1); } }").unwrap_err();
        assert_eq!(e.0[0].code, "UnknownAnnotation");
        let e = parse("class A { method m() { dest_escape(Return); } }").unwrap_err();
        assert_eq!(e.0[0].code, "UnknownAnnotation");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse("class A {\n  field x int;\n}").unwrap_err();
        assert_eq!(e.0[0].code, "SyntaxError");
        assert_eq!(e.0[0].line, 2);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("n * (n + 1) / 2").unwrap();
        assert!(matches!(e, Expr::Binary(BinOp::Div, _, _)));
        let e = parse_expr("1 <= j && j <= i").unwrap();
        assert_eq!(e.conjuncts().len(), 2);
    }
}
