use super::ast::*;
use super::diag::Diagnostic;
use super::resolve::Resolved;
use crate::lower::{self, SpaceCheck};
use crate::symexpr::GridConfig;

/// Annotations left in a body because they could not attach where they
/// govern.
pub fn lint_contract_placement(program: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (r, m) in program.methods() {
        walk(&m.body, &mut |s| {
            let StmtKind::Annotation(a) = &s.kind else { return };
            let (code, what) = match a {
                Annotation::Contract(c) => (
                    "ContractNotAtEntry",
                    format!("`{}` must precede the first statement of the method", pretty_head(c)),
                ),
                Annotation::DestEsc(_) | Annotation::DestLocal => (
                    "MisplacedDestEsc",
                    "lifetime annotation does not immediately precede an allocation".to_string(),
                ),
                Annotation::AddEsc(_) => (
                    "MisplacedAddEsc",
                    "add_esc does not immediately precede a call".to_string(),
                ),
                Annotation::IterationSpace(_) => (
                    "MisplacedIterationSpace",
                    "iteration_space must open a loop body".to_string(),
                ),
            };
            out.push(Diagnostic::warning(code, format!("{r}: {what}"), s.span));
        });
    }
    out
}

fn pretty_head(c: &Clause) -> String {
    let full = super::pretty::clause(c);
    full.split('(').next().unwrap_or(&full).to_string()
}

/// Contract bounds that are not integer-valued, and explicit iteration
/// spaces that fail to cover their loop header.
pub fn lint_bounds(resolved: &Resolved, grid: &GridConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (r, m) in resolved.program.methods() {
        let bounds = m
            .contract
            .memreq()
            .map(|(_, b)| b)
            .chain(m.contract.esc().map(|(_, _, b)| b));
        for b in bounds {
            if let Ok(p) = lower::path_poly(b) {
                if !lower::integer_valued(&p) {
                    out.push(Diagnostic::warning(
                        "NonIntegralBound",
                        format!("{r}: bound `{}` is not integer-valued", super::pretty::expr(b)),
                        m.span,
                    ));
                }
            }
        }
        let pre: Vec<_> = m
            .contract
            .requires()
            .filter_map(|e| lower::to_constraints(e, &mut lower::path_leaf).ok())
            .flatten()
            .collect();
        spaces(&r, &m.body, &pre, grid, &mut out);
    }
    out
}

fn spaces(r: &MethodRef, body: &[Stmt], outer: &[crate::LinConstraint], grid: &GridConfig, out: &mut Vec<Diagnostic>) {
    for s in body {
        match &s.kind {
            StmtKind::For {
                var,
                lo,
                hi,
                inclusive,
                space,
                body,
            } => {
                let Ok(header) = lower::header_space(var, lo, hi, *inclusive, &mut lower::path_leaf) else {
                    spaces(r, body, outer, grid, out);
                    continue;
                };
                let mut inner = outer.to_vec();
                inner.extend(header.constraints());
                if let Some(sp) = space {
                    match lower::check_explicit_space(&header, sp, outer, &mut lower::path_leaf, grid) {
                        SpaceCheck::Accepted(_) => {}
                        SpaceCheck::Mismatch { point, .. } => {
                            let at: Vec<String> = point.iter().map(|(k, v)| format!("{k}={v}")).collect();
                            out.push(Diagnostic::warning(
                                "IterationSpaceMismatch",
                                format!(
                                    "{r}: iteration_space of loop `{var}` excludes header iterations (at {}); using the header range",
                                    at.join(", ")
                                ),
                                s.span,
                            ));
                        }
                        SpaceCheck::Unsupported(why) => out.push(Diagnostic::warning(
                            "IterationSpaceUnsupported",
                            format!("{r}: iteration_space of loop `{var}`: {why}; using the header range"),
                            s.span,
                        )),
                    }
                }
                spaces(r, body, &inner, grid, out);
            }
            StmtKind::If {
                then_body, else_body, ..
            } => {
                spaces(r, then_body, outer, grid, out);
                spaces(r, else_body, outer, grid, out);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::super::resolve::resolve;
    use super::*;

    fn codes(src: &str) -> Vec<String> {
        let p = parse(src).unwrap();
        let mut d = lint_contract_placement(&p);
        d.extend(lint_bounds(&resolve(p).unwrap(), &GridConfig::default()));
        d.into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn well_placed_annotations_are_clean() {
        let src = "class A { method m(n: int): A {
            memreq<A>(n + 1); esc<A>(Return, 1);
            for i = 1 .. n { iteration_space(1 <= i && i <= n); var t: A = new A(); }
            dest_esc(Return); var a: A = new A(); return a; } }";
        assert!(codes(src).is_empty());
    }

    #[test]
    fn misplaced_annotations() {
        assert_eq!(
            codes("class A { method m() { var a: A = new A(); dest_esc(Return); } }"),
            vec!["MisplacedDestEsc"]
        );
        assert_eq!(
            codes("class A { method m(n: int) { for i = 1 .. n { var x: int = 0; memreq<A>(1); } } }"),
            vec!["ContractNotAtEntry"]
        );
        assert_eq!(
            codes("class A { method m() { add_esc(Return, This); var x: int = 1; } }"),
            vec!["MisplacedAddEsc"]
        );
    }

    #[test]
    fn iteration_space_checks() {
        assert_eq!(
            codes("class A { method m(n: int) { for i = 1 .. n { iteration_space(2 <= i && i <= n); } } }"),
            vec!["IterationSpaceMismatch"]
        );
        assert_eq!(codes("class A { method m(n: int) { memreq<A>(n / 2); } }"), vec!["NonIntegralBound"]);
    }
}
