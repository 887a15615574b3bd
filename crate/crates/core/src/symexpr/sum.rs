use std::collections::BTreeSet;
use std::fmt;

use super::constraint::{IterSpace, LinConstraint, Rel};
use super::expr::SymExpr;
use super::poly::{Monomial, Poly};
use super::scalar::Coeff;
use super::{Engine, SymError};

/// Qualifications attached to a summed or maximized bound.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Caveat {
    /// Max over a space taken at the endpoints of a non-monotone polynomial.
    MonotonicityUnproven,
    /// Sum of a multi-alternative max over-approximated by the sum of all
    /// alternatives, some of which may be negative.
    SumOfMaxRelaxed,
}

impl fmt::Display for Caveat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Caveat::MonotonicityUnproven => "monotonicity-unproven",
            Caveat::SumOfMaxRelaxed => "sum-of-max-relaxed",
        })
    }
}

/// Result of a symbolic sum: valid where every guard holds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Summation<C: Coeff> {
    pub value: SymExpr<C>,
    pub guards: Vec<LinConstraint<C>>,
    pub caveats: BTreeSet<Caveat>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Extremum<C: Coeff> {
    pub value: SymExpr<C>,
    pub caveats: BTreeSet<Caveat>,
}

fn binomial<C: Coeff>(n: u32, k: u32) -> C {
    let mut acc = C::one();
    for i in 0..k {
        acc = acc * C::from_int(i64::from(n - i)) / C::from_int(i64::from(i + 1));
    }
    acc
}

/// Bernoulli numbers B_0..=B_m with the B_1 = -1/2 convention.
fn bernoulli<C: Coeff>(m: u32) -> Vec<C> {
    let mut b: Vec<C> = vec![C::one()];
    for n in 1..=m {
        let mut s = C::zero();
        for (j, bj) in b.iter().enumerate() {
            s = s + binomial::<C>(n + 1, j as u32) * bj.clone();
        }
        b.push(-s / C::from_int(i64::from(n + 1)));
    }
    b
}

/// Faulhaber polynomial `S_k(x) = 1^k + 2^k + ... + x^k` in the variable `x`.
///
/// `S_k(x) - S_k(x - 1) = x^k` holds identically, so
/// `sum_{v=lo}^{hi} v^k = S_k(hi) - S_k(lo - 1)` whenever `lo <= hi + 1`.
pub fn power_sum<C: Coeff>(k: u32, x: &str) -> Poly<C> {
    let b = bernoulli::<C>(k);
    let scale = C::one() / C::from_int(i64::from(k + 1));
    Poly::from_terms((0..=k).map(|j| {
        let sign = if j % 2 == 1 { -C::one() } else { C::one() };
        let c = sign * binomial::<C>(k + 1, j) * b[j as usize].clone() * scale.clone();
        (Monomial::from_powers([(x.to_string(), k + 1 - j)]), c)
    }))
}

/// Closed form of `sum_{index=lo}^{hi} p` valid for `lo <= hi + 1`.
pub fn sum_poly<C: Coeff>(p: &Poly<C>, index: &str, lo: &Poly<C>, hi: &Poly<C>) -> Poly<C> {
    const X: &str = "\u{0}x";
    let below = lo - &Poly::one();
    let mut out = Poly::zero();
    for (k, coeff) in p.collect_in(index).into_iter().enumerate() {
        if coeff.is_zero() {
            continue;
        }
        let s = power_sum::<C>(k as u32, X);
        let range = &s.substitute_var(X, hi) - &s.substitute_var(X, &below);
        out = out + &coeff * &range;
    }
    out
}

impl Engine {
    fn check_degree<C: Coeff>(&self, e: &SymExpr<C>) -> Result<(), SymError> {
        let d = e.degree();
        if d > self.max_degree {
            Err(SymError::DegreeOverflow {
                degree: d,
                max: self.max_degree,
            })
        } else {
            Ok(())
        }
    }

    pub fn add<C: Coeff>(&self, a: &SymExpr<C>, b: &SymExpr<C>) -> Result<SymExpr<C>, SymError> {
        let r = a.add(b);
        self.check_degree(&r)?;
        Ok(r)
    }

    pub fn sym_max<C: Coeff>(&self, a: &SymExpr<C>, b: &SymExpr<C>) -> SymExpr<C> {
        a.max(b)
    }

    pub fn substitute<C: Coeff>(
        &self,
        e: &SymExpr<C>,
        binding: &std::collections::BTreeMap<super::Var, Poly<C>>,
    ) -> Result<SymExpr<C>, SymError> {
        let r = e.substitute(binding);
        self.check_degree(&r)?;
        Ok(r)
    }

    /// Closed-form `sum_{v in space} e`.
    ///
    /// Constant empty intervals sum to zero. With symbolic bounds the result
    /// carries the guard `hi - lo + 1 >= 0` unless it holds coefficient-wise.
    pub fn sum_over<C: Coeff>(&self, e: &SymExpr<C>, space: &IterSpace<C>) -> Result<Summation<C>, SymError> {
        if space.is_statically_empty() {
            return Ok(Summation {
                value: SymExpr::zero(),
                guards: Vec::new(),
                caveats: BTreeSet::new(),
            });
        }
        let mut caveats = BTreeSet::new();
        let alts = e.alternatives();
        if alts.len() > 1 && !alts.iter().all(Poly::nonneg_coefficients) {
            caveats.insert(Caveat::SumOfMaxRelaxed);
        }
        // sum of max(p1..pk) <= sum of (p1 + .. + pk) when every pi >= 0
        let mut total = Poly::zero();
        for p in alts {
            total = total + sum_poly(p, &space.index, &space.lower, &space.upper);
        }
        let value = SymExpr::from_poly(total);
        self.check_degree(&value)?;
        let trip = space.trip_count();
        let guards = match trip.as_constant() {
            Some(_) => Vec::new(),
            None if trip.nonneg_coefficients() => Vec::new(),
            None => vec![LinConstraint { lhs: trip, rel: Rel::Ge }],
        };
        Ok(Summation { value, guards, caveats })
    }

    /// Symbolic `max_{v in space} e`, exact at the appropriate endpoint for
    /// alternatives monotone in the index.
    pub fn max_over<C: Coeff>(&self, e: &SymExpr<C>, space: &IterSpace<C>) -> Result<Extremum<C>, SymError> {
        if space.is_statically_empty() {
            return Ok(Extremum {
                value: SymExpr::zero(),
                caveats: BTreeSet::new(),
            });
        }
        let idx = space.index.as_str();
        let lower_may_be_negative = match space.lower.as_constant() {
            Some(c) => c.is_negative(),
            None => !space.lower.nonneg_coefficients(),
        };
        let mut caveats = BTreeSet::new();
        let mut out: Vec<Poly<C>> = Vec::new();
        for p in e.alternatives() {
            let signs: Vec<bool> = p
                .terms()
                .filter(|(m, _)| m.power_of(idx) > 0)
                .map(|(_, c)| c.is_positive())
                .collect();
            let at_lo = || p.substitute_var(idx, &space.lower);
            let at_hi = || p.substitute_var(idx, &space.upper);
            let even_power = p.degree_in(idx) >= 2;
            if signs.is_empty() {
                out.push(p.clone());
            } else if even_power && lower_may_be_negative {
                caveats.insert(Caveat::MonotonicityUnproven);
                out.push(at_lo());
                out.push(at_hi());
            } else if signs.iter().all(|s| *s) {
                out.push(at_hi());
            } else if signs.iter().all(|s| !*s) {
                out.push(at_lo());
            } else {
                caveats.insert(Caveat::MonotonicityUnproven);
                out.push(at_lo());
                out.push(at_hi());
            }
        }
        let value = SymExpr::new(out);
        self.check_degree(&value)?;
        Ok(Extremum { value, caveats })
    }

    /// Number of integer points of nested spaces listed outermost first.
    pub fn count<C: Coeff>(&self, spaces: &[IterSpace<C>]) -> Result<Summation<C>, SymError> {
        let mut acc = Summation {
            value: SymExpr::from_poly(Poly::one()),
            guards: Vec::new(),
            caveats: BTreeSet::new(),
        };
        for space in spaces.iter().rev() {
            let s = self.sum_over(&acc.value, space)?;
            acc.value = s.value;
            acc.guards.extend(s.guards);
            acc.caveats.extend(s.caveats);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use num_traits::Zero;
    use std::collections::BTreeMap;

    type Q = Ratio<i128>;
    type P = Poly<Q>;
    type E = SymExpr<Q>;

    fn engine() -> Engine {
        Engine::default()
    }

    fn space(i: &str, lo: P, hi: P) -> IterSpace<Q> {
        IterSpace::interval(i, lo, hi).unwrap()
    }

    fn brute(p: &P, index: &str, lo: i64, hi: i64, env: &BTreeMap<String, i64>) -> Q {
        let mut acc = Q::zero();
        for v in lo..=hi {
            let mut e = env.clone();
            e.insert(index.to_string(), v);
            acc += p.eval_ints(&e).unwrap();
        }
        acc
    }

    #[test]
    fn faulhaber_low_degrees() {
        assert_eq!(power_sum::<Q>(0, "x"), P::var("x"));
        assert_eq!(power_sum::<Q>(1, "x").to_string(), "(x*x+x)/2");
        assert_eq!(power_sum::<Q>(2, "x").to_string(), "(2*x*x*x+3*x*x+x)/6");
        assert_eq!(power_sum::<Q>(3, "x").to_string(), "(x*x*x*x+2*x*x*x+x*x)/4");
    }

    #[test]
    fn nested_triangle_count() {
        let n = P::var("n");
        let i = P::var("i");
        let inner = engine()
            .sum_over(&E::int(1), &space("j", P::int(1), i.clone()))
            .unwrap();
        assert_eq!(inner.value, E::from_poly(i.clone()));
        let outer = engine().sum_over(&inner.value, &space("i", P::int(1), n.clone())).unwrap();
        let expected = (&n * &(&n + &P::int(1))).scale(&Q::from_frac(1, 2));
        assert_eq!(outer.value, E::from_poly(expected));
        assert_eq!(outer.value.to_string(), "(n*n+n)/2");
    }

    #[test]
    fn sum_of_zero_is_zero() {
        let s = engine()
            .sum_over(&E::zero(), &space("i", P::int(1), P::var("n")))
            .unwrap();
        assert!(s.value.is_zero());
    }

    #[test]
    fn sum_of_squares_matches_brute_force() {
        let i = P::var("i");
        let s = engine()
            .sum_over(&E::from_poly(&i * &i), &space("i", P::int(1), P::var("n")))
            .unwrap();
        let n = P::var("n");
        let closed = (&(&n * &(&n + &P::int(1))) * &(&n.scale(&Q::from_int(2)) + &P::int(1)))
            .scale(&Q::from_frac(1, 6));
        assert_eq!(s.value, E::from_poly(closed));
        for nv in 0..=20 {
            let env: BTreeMap<String, i64> = [("n".to_string(), nv)].into();
            assert_eq!(s.value.eval_ints(&env).unwrap(), brute(&(&i * &i), "i", 1, nv, &BTreeMap::new()));
        }
    }

    #[test]
    fn statically_empty_space_sums_to_zero() {
        let s = engine()
            .sum_over(&E::from_poly(P::var("i")), &space("i", P::int(5), P::int(2)))
            .unwrap();
        assert!(s.value.is_zero());
        let m = engine().max_over(&E::int(7), &space("i", P::int(1), P::int(0))).unwrap();
        assert!(m.value.is_zero());
    }

    #[test]
    fn symbolic_bounds_record_guard() {
        // i from 1 to n - 3: trip count n - 3 may be negative
        let s = engine()
            .sum_over(&E::int(1), &space("i", P::int(1), &P::var("n") - &P::int(3)))
            .unwrap();
        assert_eq!(s.guards.len(), 1);
        assert_eq!(s.guards[0].lhs, &P::var("n") - &P::int(3));
        // 1..n: trip count n is nonneg
        let s = engine().sum_over(&E::int(1), &space("i", P::int(1), P::var("n"))).unwrap();
        assert!(s.guards.is_empty());
    }

    #[test]
    fn max_over_monotone_endpoints() {
        let n = P::var("n");
        let i = P::var("i");
        let sp = space("i", P::int(1), n.clone());
        let up = engine().max_over(&E::from_poly(i.clone()), &sp).unwrap();
        assert_eq!(up.value, E::from_poly(n.clone()));
        let down = engine().max_over(&E::from_poly(&n - &i), &sp).unwrap();
        assert_eq!(down.value, E::from_poly(&n - &P::int(1)));
        assert!(down.caveats.is_empty());
        for nv in 1..=10 {
            let best = (1..=nv).map(|iv| nv - iv).max().unwrap();
            let env: BTreeMap<String, i64> = [("n".to_string(), nv)].into();
            assert_eq!(down.value.eval_ints(&env).unwrap(), Q::from_int(best));
        }
        let c = engine().max_over(&E::int(4), &sp).unwrap();
        assert_eq!(c.value, E::int(4));
    }

    #[test]
    fn max_over_mixed_signs_is_flagged() {
        let n = P::var("n");
        let i = P::var("i");
        let e = E::from_poly(&(&n * &i) - &(&i * &i));
        let m = engine().max_over(&e, &space("i", P::int(0), n)).unwrap();
        assert!(m.caveats.contains(&Caveat::MonotonicityUnproven));
    }

    #[test]
    fn count_square_and_triangle() {
        let n = P::var("n");
        let sq = engine()
            .count(&[
                space("i", P::int(0), &n - &P::int(1)),
                space("j", P::int(0), &n - &P::int(1)),
            ])
            .unwrap();
        assert_eq!(sq.value, E::from_poly(&n * &n));
        for nv in 0..=10i64 {
            let brute = (0..nv).flat_map(|_| 0..nv).count() as i64;
            let env: BTreeMap<String, i64> = [("n".to_string(), nv)].into();
            assert_eq!(sq.value.eval_ints(&env).unwrap(), Q::from_int(brute));
        }
        let single = engine().count(&[space("i", P::int(1), n.clone())]).unwrap();
        assert_eq!(single.value, E::from_poly(n));
    }

    #[test]
    fn degree_cap_is_enforced() {
        let n = P::var("n");
        let e = E::from_poly(&(&n * &n) * &(&n * &P::var("i")));
        let err = engine().sum_over(&e, &space("i", P::int(1), n)).unwrap_err();
        assert!(matches!(err, SymError::DegreeOverflow { .. }));
    }
}
