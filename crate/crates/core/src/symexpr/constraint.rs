use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::poly::{Monomial, Poly, Var};
use super::scalar::Coeff;
use super::SymError;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Le => "<=",
            Rel::Lt => "<",
            Rel::Eq => "==",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// `lhs REL 0` with `lhs` of degree at most one.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct LinConstraint<C: Coeff> {
    pub lhs: Poly<C>,
    pub rel: Rel,
}

impl<C: Coeff> LinConstraint<C> {
    /// `left REL right`, normalized to `left - right REL 0`.
    pub fn new(left: &Poly<C>, rel: Rel, right: &Poly<C>) -> Result<Self, SymError> {
        let lhs = left - right;
        if lhs.degree() > 1 {
            return Err(SymError::NonLinear(format!("{lhs} {} 0", rel.symbol())));
        }
        Ok(Self { lhs, rel })
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.lhs.vars()
    }

    pub fn holds(&self, env: &BTreeMap<Var, C>) -> Result<bool, Var> {
        let v = self.lhs.eval(env)?;
        let z = C::zero();
        Ok(match self.rel {
            Rel::Le => v <= z,
            Rel::Lt => v < z,
            Rel::Eq => v == z,
            Rel::Ge => v >= z,
            Rel::Gt => v > z,
        })
    }

    pub fn holds_ints(&self, env: &BTreeMap<Var, i64>) -> Result<bool, Var> {
        let env: BTreeMap<Var, C> = env.iter().map(|(k, v)| (k.clone(), C::from_int(*v))).collect();
        self.holds(&env)
    }

    /// Integer normal form `p >= 0` (strict relations tightened by one);
    /// equalities yield two constraints.
    pub fn as_nonneg(&self) -> Vec<Poly<C>> {
        let one = Poly::one();
        match self.rel {
            Rel::Ge => vec![self.lhs.clone()],
            Rel::Gt => vec![&self.lhs - &one],
            Rel::Le => vec![-self.lhs.clone()],
            Rel::Lt => vec![&(-self.lhs.clone()) - &one],
            Rel::Eq => vec![self.lhs.clone(), -self.lhs.clone()],
        }
    }

    /// Single-variable lower bound `v >= k` implied by this constraint.
    pub fn lower_bound(&self) -> Option<(Var, C)> {
        let vars = self.vars();
        if vars.len() != 1 {
            return None;
        }
        let v = vars.into_iter().next()?;
        self.as_nonneg().into_iter().find_map(|p| {
            let a = p.coefficient(&Monomial::var(v.clone()));
            if a.is_positive() {
                // a*v + b >= 0  =>  v >= ceil(-b / a)
                let bound = -p.constant_term() / a;
                Some((v.clone(), ceil(&bound)))
            } else {
                None
            }
        })
    }
}

fn ceil<C: Coeff>(c: &C) -> C {
    let (n, d) = c.to_fraction();
    let q = num_integer::Integer::div_ceil(&n, &d);
    let q: i64 = num_traits::ToPrimitive::to_i64(&q).unwrap_or(i64::MAX);
    C::from_int(q)
}

impl<C: Coeff> fmt::Display for LinConstraint<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.lhs, self.rel.symbol())
    }
}

/// Iteration space of one counted loop: `lower <= index <= upper`, both
/// bounds linear in enclosing variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IterSpace<C: Coeff> {
    pub index: Var,
    pub lower: Poly<C>,
    pub upper: Poly<C>,
}

impl<C: Coeff> IterSpace<C> {
    pub fn interval(index: impl Into<Var>, lower: Poly<C>, upper: Poly<C>) -> Result<Self, SymError> {
        let index = index.into();
        for b in [&lower, &upper] {
            if b.degree() > 1 {
                return Err(SymError::NonLinear(b.to_string()));
            }
            if b.mentions(&index) {
                return Err(SymError::UnsupportedSpace(format!(
                    "bound {b} refers to its own index {index}"
                )));
            }
        }
        Ok(Self { index, lower, upper })
    }

    /// Extracts interval bounds for `index` from a constraint list. Only unit
    /// coefficients on the index and a single distinct bound per side are
    /// supported; constraints not mentioning the index are ignored.
    pub fn from_constraints(index: &str, constraints: &[LinConstraint<C>]) -> Result<Self, SymError> {
        let mut lowers: Vec<Poly<C>> = Vec::new();
        let mut uppers: Vec<Poly<C>> = Vec::new();
        let iv = Monomial::var(index);
        for c in constraints {
            if !c.lhs.mentions(index) {
                continue;
            }
            for p in c.as_nonneg() {
                let a = p.coefficient(&iv);
                let rest = &p - &Poly::from_terms([(iv.clone(), a.clone())]);
                if rest.mentions(index) {
                    return Err(SymError::UnsupportedSpace(format!("non-linear use of {index} in {c}")));
                }
                if a == C::one() {
                    // index + rest >= 0  =>  index >= -rest
                    push_unique(&mut lowers, -rest);
                } else if a == -C::one() {
                    // -index + rest >= 0  =>  index <= rest
                    push_unique(&mut uppers, rest);
                } else {
                    return Err(SymError::UnsupportedSpace(format!(
                        "coefficient {a} on {index} in {c}"
                    )));
                }
            }
        }
        let pick = |v: Vec<Poly<C>>, side: &'static str| match v.len() {
            0 => Err(SymError::UnboundedSpace {
                index: index.to_string(),
                side,
            }),
            1 => Ok(v.into_iter().next().unwrap()),
            _ => Err(SymError::UnsupportedSpace(format!(
                "{} {side} bounds for {index}",
                v.len()
            ))),
        };
        let lower = pick(lowers, "lower")?;
        let upper = pick(uppers, "upper")?;
        Self::interval(index, lower, upper)
    }

    /// `upper - lower + 1`, the trip count when nonnegative.
    pub fn trip_count(&self) -> Poly<C> {
        &(&self.upper - &self.lower) + &Poly::one()
    }

    /// Both bounds are constants and the interval is empty.
    pub fn is_statically_empty(&self) -> bool {
        match (self.lower.as_constant(), self.upper.as_constant()) {
            (Some(lo), Some(hi)) => hi < lo,
            _ => false,
        }
    }

    pub fn constraints(&self) -> Vec<LinConstraint<C>> {
        let i = Poly::var(self.index.clone());
        vec![
            LinConstraint { lhs: &i - &self.lower, rel: Rel::Ge },
            LinConstraint { lhs: &i - &self.upper, rel: Rel::Le },
        ]
    }
}

fn push_unique<C: Coeff>(v: &mut Vec<Poly<C>>, p: Poly<C>) {
    if !v.contains(&p) {
        v.push(p);
    }
}

impl<C: Coeff> fmt::Display for IterSpace<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {} <= {}", self.lower, self.index, self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type P = Poly<Ratio<i128>>;
    type L = LinConstraint<Ratio<i128>>;

    #[test]
    fn extracts_interval_from_constraints() {
        let j = P::var("j");
        let i = P::var("i");
        let cs = vec![
            L::new(&P::int(1), Rel::Le, &j).unwrap(),
            L::new(&j, Rel::Le, &i).unwrap(),
        ];
        let s = IterSpace::from_constraints("j", &cs).unwrap();
        assert_eq!(s.lower, P::int(1));
        assert_eq!(s.upper, i);
    }

    #[test]
    fn strict_bounds_are_tightened() {
        let i = P::var("i");
        let n = P::var("n");
        let cs = vec![
            L::new(&P::int(0), Rel::Le, &i).unwrap(),
            L::new(&i, Rel::Lt, &n).unwrap(),
        ];
        let s = IterSpace::from_constraints("i", &cs).unwrap();
        assert_eq!(s.upper, &n - &P::int(1));
    }

    #[test]
    fn missing_side_is_unbounded() {
        let i = P::var("i");
        let cs = vec![L::new(&i, Rel::Ge, &P::int(0)).unwrap()];
        assert!(matches!(
            IterSpace::from_constraints("i", &cs),
            Err(SymError::UnboundedSpace { side: "upper", .. })
        ));
    }

    #[test]
    fn two_upper_bounds_are_unsupported() {
        let i = P::var("i");
        let cs = vec![
            L::new(&i, Rel::Ge, &P::int(0)).unwrap(),
            L::new(&i, Rel::Le, &P::var("n")).unwrap(),
            L::new(&i, Rel::Le, &P::var("m")).unwrap(),
        ];
        assert!(matches!(
            IterSpace::from_constraints("i", &cs),
            Err(SymError::UnsupportedSpace(_))
        ));
    }

    #[test]
    fn lower_bound_from_strict_precondition() {
        let c = L::new(&P::var("n"), Rel::Gt, &P::int(0)).unwrap();
        assert_eq!(c.lower_bound(), Some(("n".to_string(), Ratio::from_int(1))));
    }

    #[test]
    fn nonlinear_constraint_rejected() {
        let n = P::var("n");
        assert!(L::new(&(&n * &n), Rel::Le, &P::int(3)).is_err());
    }
}
