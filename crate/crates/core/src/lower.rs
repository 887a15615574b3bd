//! Translation between program expressions and symbolic polynomials.
//!
//! Entry-visible integer quantities become polynomial variables named by
//! their access path: `n`, `xs.length`, `this.size`, `this.members.length`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::frontend::ast::{BinOp, Expr, UnOp};
use crate::symexpr::{Coeff, GridConfig, Rel, SymError};
use crate::{IterSpace, LinConstraint, Poly, Rational, SymExpr};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("`{0}` is not a polynomial expression")]
    NotPolynomial(String),
    #[error("division in `{0}` is not exact")]
    InexactDivision(String),
    #[error("`{0}` is not a conjunction of linear constraints")]
    NotLinear(String),
    #[error(transparent)]
    Sym(#[from] SymError),
}

fn text(e: &Expr) -> String {
    crate::frontend::pretty::expr(e)
}

/// Variable name of an access path, e.g. `this.members.length`.
pub fn path_var(e: &Expr) -> Option<String> {
    match e {
        Expr::Var(v) => Some(v.clone()),
        Expr::This => Some("this".into()),
        Expr::Field(b, f) => Some(format!("{}.{f}", path_var(b)?)),
        _ => None,
    }
}

/// Inverse of [`path_var`].
pub fn var_expr(v: &str) -> Option<Expr> {
    if v.starts_with('?') {
        return None;
    }
    let mut parts = v.split('.');
    let root = parts.next()?;
    let mut e = if root == "this" { Expr::This } else { Expr::var(root) };
    for f in parts {
        e = Expr::field(e, f);
    }
    Some(e)
}

pub type Leaf<'a> = dyn FnMut(&Expr) -> Result<Poly, LowerError> + 'a;

/// Leaf translation naming every path by [`path_var`].
pub fn path_leaf(e: &Expr) -> Result<Poly, LowerError> {
    path_var(e)
        .map(Poly::var)
        .ok_or_else(|| LowerError::NotPolynomial(text(e)))
}

/// Polynomial of an integer expression. Paths and indexing go to `leaf`.
/// Division must be by a positive literal; with `exact_div` the quotient
/// must also be integer-valued, matching truncating division.
pub fn to_poly(e: &Expr, leaf: &mut Leaf<'_>, exact_div: bool) -> Result<Poly, LowerError> {
    Ok(match e {
        Expr::Int(v) => Poly::int(*v),
        Expr::Var(_) | Expr::This | Expr::Field(..) | Expr::Index(..) => leaf(e)?,
        Expr::Unary(UnOp::Neg, x) => -to_poly(x, leaf, exact_div)?,
        Expr::Binary(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul), l, r) => {
            let (l, r) = (to_poly(l, leaf, exact_div)?, to_poly(r, leaf, exact_div)?);
            match op {
                BinOp::Add => &l + &r,
                BinOp::Sub => &l - &r,
                _ => &l * &r,
            }
        }
        Expr::Binary(BinOp::Div, l, r) => {
            let Expr::Int(d) = **r else {
                return Err(LowerError::NotPolynomial(text(e)));
            };
            if d <= 0 {
                return Err(LowerError::NotPolynomial(text(e)));
            }
            let q = to_poly(l, leaf, exact_div)?.scale(&Rational::from_frac(1, d));
            if exact_div && !integer_valued(&q) {
                return Err(LowerError::InexactDivision(text(e)));
            }
            q
        }
        _ => return Err(LowerError::NotPolynomial(text(e))),
    })
}

pub fn path_poly(e: &Expr) -> Result<Poly, LowerError> {
    to_poly(e, &mut path_leaf, false)
}

/// Whether `p` takes integer values on all integer points. A polynomial of
/// degree `d` has this property iff it holds on the box `{0..d}^k`.
pub fn integer_valued(p: &Poly) -> bool {
    if p.integral_coefficients() {
        return true;
    }
    let vars: Vec<String> = p.vars().into_iter().collect();
    let d = i64::from(p.degree());
    let mut point = vec![0i64; vars.len()];
    loop {
        let env: BTreeMap<String, i64> = vars.iter().cloned().zip(point.iter().copied()).collect();
        if !p.eval_ints(&env).expect("all vars bound").is_integral() {
            return false;
        }
        let mut k = 0;
        loop {
            if k == point.len() {
                return true;
            }
            if point[k] < d {
                point[k] += 1;
                break;
            }
            point[k] = 0;
            k += 1;
        }
    }
}

/// Linear constraints of a conjunction of comparisons.
pub fn to_constraints(e: &Expr, leaf: &mut Leaf<'_>) -> Result<Vec<LinConstraint>, LowerError> {
    let mut out = Vec::new();
    for c in e.conjuncts() {
        match c {
            Expr::Bool(true) => {}
            Expr::Binary(op, l, r) if op.is_comparison() && *op != BinOp::Ne => {
                let rel = match op {
                    BinOp::Lt => Rel::Lt,
                    BinOp::Le => Rel::Le,
                    BinOp::Gt => Rel::Gt,
                    BinOp::Ge => Rel::Ge,
                    _ => Rel::Eq,
                };
                let (l, r) = (to_poly(l, leaf, false)?, to_poly(r, leaf, false)?);
                out.push(LinConstraint::new(&l, rel, &r).map_err(|_| LowerError::NotLinear(text(c)))?);
            }
            _ => return Err(LowerError::NotLinear(text(c))),
        }
    }
    Ok(out)
}

/// `lo <= var <= hi` (or `< hi` when exclusive) of a `for` header.
pub fn header_space(var: &str, lo: &Expr, hi: &Expr, inclusive: bool, leaf: &mut Leaf<'_>) -> Result<IterSpace, LowerError> {
    let lo = to_poly(lo, leaf, true)?;
    let mut hi = to_poly(hi, leaf, true)?;
    if !inclusive {
        hi = &hi - &Poly::one();
    }
    Ok(IterSpace::interval(var, lo, hi)?)
}

/// Outcome of comparing an explicit iteration space with its loop header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceCheck {
    /// The explicit space contains every header iteration on the grid.
    Accepted(IterSpace),
    Mismatch { explicit: IterSpace, point: BTreeMap<String, i64> },
    Unsupported(String),
}

/// Checks on the grid that `header` implies the explicit constraints, with
/// `outer` constraints (enclosing loops, preconditions) assumed.
pub fn check_explicit_space(
    header: &IterSpace,
    explicit: &Expr,
    outer: &[LinConstraint],
    leaf: &mut Leaf<'_>,
    grid: &GridConfig,
) -> SpaceCheck {
    let cons = match to_constraints(explicit, leaf) {
        Ok(c) => c,
        Err(e) => return SpaceCheck::Unsupported(e.to_string()),
    };
    let space = match IterSpace::from_constraints(&header.index, &cons) {
        Ok(s) => s,
        Err(e) => return SpaceCheck::Unsupported(e.to_string()),
    };
    let hcons = header.constraints();
    let mut vars: BTreeSet<String> = BTreeSet::new();
    for c in cons.iter().chain(&hcons).chain(outer) {
        vars.extend(c.vars());
    }
    let points = match grid.points(&vars) {
        Ok(p) => p,
        Err(e) => return SpaceCheck::Unsupported(e.to_string()),
    };
    for point in points {
        let holds = |cs: &[LinConstraint]| cs.iter().all(|c| c.holds_ints(&point).unwrap_or(false));
        if holds(outer) && holds(&hcons) && !holds(&cons) {
            return SpaceCheck::Mismatch { explicit: space, point };
        }
    }
    SpaceCheck::Accepted(space)
}

fn monomial_expr(m: &crate::symexpr::Monomial) -> Expr {
    let mut factors = Vec::new();
    for (v, p) in m.powers() {
        let base = var_expr(v).unwrap_or_else(|| Expr::var(v.clone()));
        for _ in 0..*p {
            factors.push(base.clone());
        }
    }
    factors
        .into_iter()
        .reduce(|a, b| Expr::bin(BinOp::Mul, a, b))
        .unwrap_or(Expr::Int(1))
}

fn int_of(c: &num_bigint::BigInt) -> i64 {
    c.to_i64().expect("coefficient fits in i64")
}

/// Program expression for a polynomial: `(integer polynomial) / denominator`.
pub fn poly_to_expr(p: &Poly) -> Expr {
    let den = p.common_denominator();
    let scale = Rational::from_integer(den.to_i128().expect("denominator fits"));
    let mut acc: Option<Expr> = None;
    for (m, c) in p.terms() {
        let c = (*c * scale).to_integer();
        let (mag, neg) = (c.abs(), c.is_negative());
        let term = if m.is_one() {
            Expr::Int(mag as i64)
        } else if mag.is_one() {
            monomial_expr(m)
        } else {
            Expr::bin(BinOp::Mul, Expr::Int(mag as i64), monomial_expr(m))
        };
        acc = Some(match acc {
            None if neg => Expr::Unary(UnOp::Neg, Box::new(term)),
            None => term,
            Some(a) => Expr::bin(if neg { BinOp::Sub } else { BinOp::Add }, a, term),
        });
    }
    let e = acc.unwrap_or(Expr::Int(0));
    if den.is_one() || den.is_zero() {
        e
    } else {
        Expr::bin(BinOp::Div, e, Expr::Int(int_of(&den)))
    }
}

pub fn sym_to_expr(e: &SymExpr) -> Expr {
    e.alternatives()
        .iter()
        .map(poly_to_expr)
        .reduce(Expr::max)
        .expect("symbolic expressions are non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_expr;

    fn p(s: &str) -> Poly {
        path_poly(&parse_expr(s).unwrap()).unwrap()
    }

    #[test]
    fn paths_become_variables() {
        assert_eq!(p("this.members.length + 2 * n"), &Poly::var("this.members.length") + &Poly::var("n").scale(&Rational::from_int(2)));
        assert_eq!(var_expr("this.members.length"), Some(parse_expr("this.members.length").unwrap()));
    }

    #[test]
    fn integer_valued_polynomials() {
        assert!(integer_valued(&p("n * (n + 1) / 2")));
        assert!(!integer_valued(&p("n / 2")));
        assert!(integer_valued(&p("n * (n + 1) * (2 * n + 1) / 6")));
        let e = parse_expr("n / 2").unwrap();
        assert!(matches!(to_poly(&e, &mut path_leaf, true), Err(LowerError::InexactDivision(_))));
    }

    #[test]
    fn polynomial_round_trip_through_expr() {
        for s in ["n * (n + 1) / 2", "2 + 2 * xs.length", "n - 2", "-3", "0"] {
            let q = p(s);
            assert_eq!(path_poly(&poly_to_expr(&q)).unwrap(), q, "{s}");
        }
    }

    #[test]
    fn explicit_space_must_cover_header() {
        let header = IterSpace::interval("j", Poly::int(1), Poly::var("i")).unwrap();
        let grid = GridConfig::default();
        let ok = parse_expr("1 <= j && j <= i").unwrap();
        assert!(matches!(check_explicit_space(&header, &ok, &[], &mut path_leaf, &grid), SpaceCheck::Accepted(_)));
        let narrow = parse_expr("2 <= j && j <= i").unwrap();
        assert!(matches!(
            check_explicit_space(&header, &narrow, &[], &mut path_leaf, &grid),
            SpaceCheck::Mismatch { .. }
        ));
    }
}
