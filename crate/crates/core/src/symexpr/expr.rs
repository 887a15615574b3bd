use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::poly::{Poly, Var};
use super::scalar::Coeff;

/// Pointwise maximum of a non-empty set of polynomials.
///
/// Kept canonical: alternatives are sorted, deduplicated, and no alternative
/// is coefficient-wise dominated by another (variables are nonnegative).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SymExpr<C: Coeff> {
    alternatives: Vec<Poly<C>>,
}

/// `q` dominates `p` when `q - p` has no negative coefficient.
pub fn dominates<C: Coeff>(q: &Poly<C>, p: &Poly<C>) -> bool {
    (q - p).nonneg_coefficients()
}

impl<C: Coeff> SymExpr<C> {
    pub fn new(alternatives: impl IntoIterator<Item = Poly<C>>) -> Self {
        let mut alts: Vec<Poly<C>> = alternatives.into_iter().collect();
        if alts.is_empty() {
            alts.push(Poly::zero());
        }
        alts.sort();
        alts.dedup();
        let kept: Vec<Poly<C>> = alts
            .iter()
            .filter(|p| !alts.iter().any(|q| q != *p && dominates(q, p)))
            .cloned()
            .collect();
        Self { alternatives: kept }
    }

    pub fn zero() -> Self {
        Self::from_poly(Poly::zero())
    }

    pub fn int(v: i64) -> Self {
        Self::from_poly(Poly::int(v))
    }

    pub fn from_poly(p: Poly<C>) -> Self {
        Self {
            alternatives: vec![p],
        }
    }

    pub fn alternatives(&self) -> &[Poly<C>] {
        &self.alternatives
    }

    pub fn as_poly(&self) -> Option<&Poly<C>> {
        match self.alternatives.as_slice() {
            [p] => Some(p),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_poly().is_some_and(Poly::is_zero)
    }

    pub fn degree(&self) -> u32 {
        self.alternatives.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.alternatives.iter().flat_map(Poly::vars).collect()
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.alternatives.iter().any(|p| p.mentions(v))
    }

    /// Max-plus sum: every pairing of alternatives.
    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.alternatives
                .iter()
                .flat_map(|p| other.alternatives.iter().map(move |q| p + q)),
        )
    }

    /// Adds a polynomial to every alternative.
    pub fn add_poly(&self, q: &Poly<C>) -> Self {
        Self::new(self.alternatives.iter().map(|p| p + q))
    }

    /// Subtracts a polynomial from every alternative; exact since the same
    /// term shifts every branch of the max.
    pub fn sub_poly(&self, q: &Poly<C>) -> Self {
        Self::new(self.alternatives.iter().map(|p| p - q))
    }

    pub fn max(&self, other: &Self) -> Self {
        Self::new(self.alternatives.iter().chain(other.alternatives.iter()).cloned())
    }

    pub fn scale(&self, c: &C) -> Self {
        assert!(!c.is_negative(), "scaling a max by a negative factor");
        Self::new(self.alternatives.iter().map(|p| p.scale(c)))
    }

    pub fn substitute(&self, binding: &BTreeMap<Var, Poly<C>>) -> Self {
        Self::new(self.alternatives.iter().map(|p| p.substitute(binding)))
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> Option<Var>) -> Self {
        Self::new(self.alternatives.iter().map(|p| p.rename(f)))
    }

    pub fn eval(&self, env: &BTreeMap<Var, C>) -> Result<C, Var> {
        let mut best: Option<C> = None;
        for p in &self.alternatives {
            let v = p.eval(env)?;
            best = Some(match best {
                Some(b) if b >= v => b,
                _ => v,
            });
        }
        Ok(best.expect("non-empty alternatives"))
    }

    pub fn eval_ints(&self, env: &BTreeMap<Var, i64>) -> Result<C, Var> {
        let env: BTreeMap<Var, C> = env.iter().map(|(k, v)| (k.clone(), C::from_int(*v))).collect();
        self.eval(&env)
    }
}

impl<C: Coeff> From<Poly<C>> for SymExpr<C> {
    fn from(p: Poly<C>) -> Self {
        Self::from_poly(p)
    }
}

impl<C: Coeff> fmt::Display for SymExpr<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alternatives.as_slice() {
            [p] => write!(f, "{p}"),
            alts => {
                f.write_str("max(")?;
                for (i, p) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type P = Poly<Ratio<i128>>;
    type E = SymExpr<Ratio<i128>>;

    fn v(name: &str) -> P {
        P::var(name)
    }

    #[test]
    fn max_prunes_dominated_alternatives() {
        let n = v("n");
        let e = E::from_poly(n.clone()).max(&E::from_poly(&n - &P::int(2)));
        assert_eq!(e, E::from_poly(n.clone()));
        let both = E::from_poly(v("m")).max(&E::from_poly(v("k")));
        assert_eq!(both.alternatives().len(), 2);
        assert_eq!(both.to_string(), "max(k, m)");
    }

    #[test]
    fn max_plus_addition() {
        // max{n, n-2} + 3 = n + 3
        let n = v("n");
        let e = E::new([n.clone(), &n - &P::int(2)]).add(&E::int(3));
        assert_eq!(e, E::from_poly(&n + &P::int(3)));
        // max{a,b} + max{c,d} keeps the four pairings
        let ab = E::new([v("a"), v("b")]);
        let cd = E::new([v("c"), v("d")]);
        assert_eq!(ab.add(&cd).alternatives().len(), 4);
    }

    #[test]
    fn identity_substitution() {
        let e = E::new([&v("x") * &v("y"), v("x") + P::int(4)]);
        let b: BTreeMap<Var, P> = [("x".to_string(), v("x"))].into();
        assert_eq!(e.substitute(&b), e);
    }
}
