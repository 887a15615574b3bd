use std::fmt::Write;

use super::ast::*;

/// Canonical source text. `parse(&print_program(p))` reproduces `p`.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.globals {
        let _ = writeln!(out, "global {}: {};", g.name, g.ty);
    }
    for (i, c) in p.classes.iter().enumerate() {
        if i > 0 || !p.globals.is_empty() {
            out.push('\n');
        }
        print_class(&mut out, c);
    }
    out
}

fn print_class(out: &mut String, c: &ClassDecl) {
    if c.fields.is_empty() && c.methods.is_empty() {
        let _ = writeln!(out, "class {} {{}}", c.name);
        return;
    }
    let _ = writeln!(out, "class {} {{", c.name);
    for f in &c.fields {
        let _ = writeln!(out, "    field {}: {};", f.name, f.ty);
    }
    for (i, m) in c.methods.iter().enumerate() {
        if i > 0 || !c.fields.is_empty() {
            out.push('\n');
        }
        print_method(out, m);
    }
    out.push_str("}\n");
}

fn print_method(out: &mut String, m: &MethodDecl) {
    let params: Vec<String> = m
        .params
        .iter()
        .map(|p| match p.mode {
            ParamMode::In => format!("{}: {}", p.name, p.ty),
            ParamMode::Out => format!("out {}: {}", p.name, p.ty),
        })
        .collect();
    if m.is_ctor {
        let _ = write!(out, "    ctor({})", params.join(", "));
    } else {
        let _ = write!(out, "    method {}({})", m.name, params.join(", "));
        if m.ret != Type::Void {
            let _ = write!(out, ": {}", m.ret);
        }
    }
    out.push_str(" {\n");
    for c in &m.contract.clauses {
        indent(out, 2);
        out.push_str(&clause(c));
        out.push('\n');
    }
    print_block(out, &m.body, 2);
    out.push_str("    }\n");
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

pub fn clause(c: &Clause) -> String {
    match c {
        Clause::Requires(e) => format!("requires({});", expr(e)),
        Clause::MemReq { class, bound } => format!("memreq<{class}>({});", expr(bound)),
        Clause::Esc { class, tag, bound } => format!("esc<{class}>({tag}, {});", expr(bound)),
        Clause::BindEsc { tag, path } => format!("bind_esc({tag}, {path});"),
    }
}

fn annotation(a: &Annotation) -> String {
    match a {
        Annotation::Contract(c) => clause(c),
        Annotation::DestEsc(t) => format!("dest_esc({t});"),
        Annotation::DestLocal => "dest_local;".into(),
        Annotation::AddEsc(a) => format!("add_esc({}, {});", a.dst, a.src),
        Annotation::IterationSpace(e) => format!("iteration_space({});", expr(e)),
    }
}

pub fn print_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        print_stmt(out, s, depth);
    }
}

fn target(t: &Target) -> String {
    match t {
        Target::Declare(n, ty) => format!("var {n}: {ty}"),
        Target::Var(n) => n.clone(),
        Target::Field(b, f) => format!("{}.{f}", postfix_operand(b)),
        Target::Index(a, i) => format!("{}[{}]", postfix_operand(a), expr(i)),
    }
}

fn dest_line(out: &mut String, d: &Dest, depth: usize) {
    match d {
        Dest::Temporary => {}
        Dest::Esc(t) => {
            indent(out, depth);
            let _ = writeln!(out, "dest_esc({t});");
        }
        Dest::Local => {
            indent(out, depth);
            out.push_str("dest_local;\n");
        }
    }
}

fn add_esc_lines(out: &mut String, adds: &[AddEsc], depth: usize) {
    for a in adds {
        indent(out, depth);
        let _ = writeln!(out, "add_esc({}, {});", a.dst, a.src);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match &s.kind {
        StmtKind::Local { name, ty } => {
            indent(out, depth);
            let _ = writeln!(out, "var {name}: {ty};");
        }
        StmtKind::Assign { target: t, value } => {
            indent(out, depth);
            let _ = writeln!(out, "{} = {};", target(t), expr(value));
        }
        StmtKind::New {
            target: t,
            class,
            args,
            dest,
            add_esc,
        } => {
            dest_line(out, dest, depth);
            add_esc_lines(out, add_esc, depth);
            indent(out, depth);
            let args: Vec<String> = args.iter().map(expr).collect();
            let _ = writeln!(out, "{} = new {class}({});", target(t), args.join(", "));
        }
        StmtKind::NewArray {
            target: t,
            elem,
            len,
            dest,
        } => {
            dest_line(out, dest, depth);
            indent(out, depth);
            let _ = writeln!(out, "{} = new {elem}[{}];", target(t), expr(len));
        }
        StmtKind::Call {
            target: t,
            receiver,
            method,
            args,
            add_esc,
        } => {
            add_esc_lines(out, add_esc, depth);
            indent(out, depth);
            if let Some(t) = t {
                let _ = write!(out, "{} = ", target(t));
            }
            if let Some(r) = receiver {
                let _ = write!(out, "{}.", postfix_operand(r));
            }
            let args: Vec<String> = args
                .iter()
                .map(|a| match a {
                    Arg::In(e) => expr(e),
                    Arg::Out(v) => format!("out {v}"),
                })
                .collect();
            let _ = writeln!(out, "{method}({});", args.join(", "));
        }
        StmtKind::For {
            var,
            lo,
            hi,
            inclusive,
            space,
            body,
        } => {
            indent(out, depth);
            let op = if *inclusive { ".." } else { "..<" };
            let _ = writeln!(out, "for {var} = {} {op} {} {{", expr(lo), expr(hi));
            if let Some(sp) = space {
                indent(out, depth + 1);
                let _ = writeln!(out, "iteration_space({});", expr(sp));
            }
            print_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            indent(out, depth);
            print_if(out, cond, then_body, else_body, depth);
        }
        StmtKind::Return(e) => {
            indent(out, depth);
            match e {
                Some(e) => {
                    let _ = writeln!(out, "return {};", expr(e));
                }
                None => out.push_str("return;\n"),
            }
        }
        StmtKind::Annotation(a) => {
            indent(out, depth);
            out.push_str(&annotation(a));
            out.push('\n');
        }
        StmtKind::GhostDecl { name, init } => {
            indent(out, depth);
            let _ = writeln!(out, "ghost var {name} = {};", expr(init));
        }
        StmtKind::GhostAssign { name, op, value } => {
            indent(out, depth);
            let op = match op {
                GhostOp::Set => "=",
                GhostOp::Add => "+=",
            };
            let _ = writeln!(out, "ghost {name} {op} {};", expr(value));
        }
        StmtKind::Ensure { counter, bound } => {
            indent(out, depth);
            let _ = writeln!(out, "ensure({counter} <= {});", expr(bound));
        }
    }
}

fn print_if(out: &mut String, cond: &Expr, then_body: &[Stmt], else_body: &[Stmt], depth: usize) {
    let _ = writeln!(out, "if {} {{", expr(cond));
    print_block(out, then_body, depth + 1);
    indent(out, depth);
    if else_body.is_empty() {
        out.push_str("}\n");
        return;
    }
    if let [Stmt {
        kind:
            StmtKind::If {
                cond,
                then_body,
                else_body,
            },
        ..
    }] = else_body
    {
        out.push_str("} else ");
        print_if(out, cond, then_body, else_body, depth);
        return;
    }
    out.push_str("} else {\n");
    print_block(out, else_body, depth + 1);
    indent(out, depth);
    out.push_str("}\n");
}

fn postfix_operand(e: &Expr) -> String {
    match e {
        Expr::Var(_) | Expr::This | Expr::Field(..) | Expr::Index(..) => expr(e),
        _ => format!("({})", expr(e)),
    }
}

/// Expression text with the minimal parentheses for the grammar's
/// precedence levels.
pub fn expr(e: &Expr) -> String {
    expr_prec(e, 0)
}

fn expr_prec(e: &Expr, ctx: u8) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Str(s) => format!("{s:?}"),
        Expr::Null => "null".into(),
        Expr::This => "this".into(),
        Expr::Var(v) => v.clone(),
        Expr::Field(b, f) => format!("{}.{f}", postfix_operand(b)),
        Expr::Index(a, i) => format!("{}[{}]", postfix_operand(a), expr(i)),
        Expr::Unary(op, x) => {
            let inner = match x.as_ref() {
                Expr::Binary(..) => format!("({})", expr(x)),
                Expr::Int(_) => format!("({})", expr(x)),
                _ => expr_prec(x, 7),
            };
            match op {
                UnOp::Neg => format!("-{inner}"),
                UnOp::Not => format!("!{inner}"),
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            // left-associative: right operand at equal precedence needs parens
            let s = format!("{} {} {}", expr_prec(l, p), op.symbol(), expr_prec(r, p + 1));
            if p < ctx {
                format!("({s})")
            } else {
                s
            }
        }
        Expr::Max(a, b) => format!("max({}, {})", expr(a), expr(b)),
    }
}
