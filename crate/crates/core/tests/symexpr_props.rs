use std::collections::{BTreeMap, BTreeSet};

use memcontract::symexpr::{
    power_sum, Coeff, Engine, GridConfig, IterSpace, LinConstraint, Monomial, Poly, Proof, Rel, SymExpr, Verdict,
};
use memcontract::{BigRational, Rational};
use proptest::prelude::*;

/// Exponent pairs `(a, b)` of `i^a * n^b` with total degree at most 3.
fn monomials() -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for a in 0..=3 {
        for b in 0..=3 - a {
            v.push((a, b));
        }
    }
    v
}

fn build<C: Coeff>(coeffs: &[i64], vars: (&str, &str)) -> Poly<C> {
    Poly::from_terms(monomials().into_iter().zip(coeffs).map(|((a, b), c)| {
        let m = Monomial::from_powers([(vars.0.to_string(), a), (vars.1.to_string(), b)]);
        (m, C::from_int(*c))
    }))
}

fn int_eval(coeffs: &[i64], x: i64, y: i64) -> i64 {
    monomials()
        .into_iter()
        .zip(coeffs)
        .map(|((a, b), c)| c * x.pow(a) * y.pow(b))
        .sum()
}

fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn q(v: i64) -> Rational {
    Rational::from_int(v)
}

fn coeffs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-5i64..=5, monomials().len())
}

/// Polynomials in `n` and `m` of degree at most 2.
fn small_poly() -> impl Strategy<Value = Poly<Rational>> {
    prop::collection::vec(-3i64..=3, 6).prop_map(|c| {
        let ms = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
        Poly::from_terms(ms.iter().zip(&c).map(|((a, b), c)| {
            (Monomial::from_powers([("n".to_string(), *a), ("m".to_string(), *b)]), q(*c))
        }))
    })
}

fn sym_expr() -> impl Strategy<Value = SymExpr<Rational>> {
    prop::collection::vec(small_poly(), 1..4).prop_map(SymExpr::new)
}

fn point() -> impl Strategy<Value = BTreeMap<String, i64>> {
    (0i64..=10, 0i64..=10).prop_map(|(n, m)| env(&[("n", n), ("m", m)]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn sum_over_constant_endpoints_matches_brute_force(c in coeffs(), lo in -3i64..=12, hi in -3i64..=12, n in -3i64..=12) {
        let p: Poly<Rational> = build(&c, ("i", "n"));
        let space = IterSpace::interval("i", Poly::int(lo), Poly::int(hi)).unwrap();
        let s = Engine::default().sum_over(&SymExpr::from_poly(p), &space).unwrap();
        prop_assert!(s.guards.is_empty());
        prop_assert!(s.caveats.is_empty());
        let expect: i64 = (lo..=hi).map(|i| int_eval(&c, i, n)).sum();
        prop_assert_eq!(s.value.eval_ints(&env(&[("n", n)])).unwrap(), q(expect));
    }

    #[test]
    fn sum_over_symbolic_upper_matches_brute_force(c in coeffs(), lo in -3i64..=12, n in 0i64..=12) {
        // sum_{i=lo}^{n} p(i, n), with n a nonnegative parameter
        let p: Poly<Rational> = build(&c, ("i", "n"));
        let space = IterSpace::interval("i", Poly::int(lo), Poly::var("n")).unwrap();
        let s = Engine::default().sum_over(&SymExpr::from_poly(p), &space).unwrap();
        let at = env(&[("n", n)]);
        let admitted = s.guards.iter().all(|g| g.holds_ints(&at).unwrap());
        prop_assert_eq!(admitted, n >= lo - 1);
        if admitted {
            let expect: i64 = (lo..=n).map(|i| int_eval(&c, i, n)).sum();
            prop_assert_eq!(s.value.eval_ints(&at).unwrap(), q(expect));
        }
    }

    #[test]
    fn big_rational_agrees_with_fixed_width(c in coeffs(), lo in -3i64..=12, hi in -3i64..=12, n in -3i64..=12) {
        let e = Engine::default();
        let small = e
            .sum_over(&SymExpr::from_poly(build::<Rational>(&c, ("i", "n"))), &IterSpace::interval("i", Poly::int(lo), Poly::int(hi)).unwrap())
            .unwrap();
        let big = e
            .sum_over(&SymExpr::from_poly(build::<BigRational>(&c, ("i", "n"))), &IterSpace::interval("i", Poly::int(lo), Poly::int(hi)).unwrap())
            .unwrap();
        let at = env(&[("n", n)]);
        prop_assert_eq!(small.value.eval_ints(&at).unwrap().to_fraction(), big.value.eval_ints(&at).unwrap().to_fraction());
    }

    #[test]
    fn add_is_pointwise(a in sym_expr(), b in sym_expr(), at in point()) {
        let sum = a.add(&b);
        prop_assert_eq!(sum.eval_ints(&at).unwrap(), a.eval_ints(&at).unwrap() + b.eval_ints(&at).unwrap());
    }

    #[test]
    fn max_is_pointwise(a in sym_expr(), b in sym_expr(), at in point()) {
        let m = Engine::default().sym_max(&a, &b);
        prop_assert_eq!(m.eval_ints(&at).unwrap(), a.eval_ints(&at).unwrap().max(b.eval_ints(&at).unwrap()));
    }

    #[test]
    fn pruning_keeps_the_pointwise_max(alts in prop::collection::vec(small_poly(), 1..6), at in point()) {
        let e = SymExpr::new(alts.clone());
        prop_assert!(e.alternatives().len() <= alts.len());
        let brute = alts.iter().map(|p| p.eval_ints(&at).unwrap()).max().unwrap();
        prop_assert_eq!(e.eval_ints(&at).unwrap(), brute);
    }

    #[test]
    fn substitution_commutes_with_eval(a in sym_expr(), img in small_poly(), at in point()) {
        // n := img(n, m)
        let binding: BTreeMap<String, Poly<Rational>> = [("n".to_string(), img.clone())].into();
        let sub = a.substitute(&binding);
        let n = img.eval_ints(&at).unwrap();
        let mut env_q: BTreeMap<String, Rational> = at.iter().map(|(k, v)| (k.clone(), q(*v))).collect();
        env_q.insert("n".into(), n);
        prop_assert_eq!(sub.eval_ints(&at).unwrap(), a.eval(&env_q).unwrap());
    }

    #[test]
    fn entailment_verdicts_are_sound(lhs in sym_expr(), rhs in sym_expr(), lower in 0i64..=3) {
        let params: BTreeSet<String> = ["n".to_string(), "m".to_string()].into();
        let pre = vec![LinConstraint::new(&Poly::var("n"), Rel::Ge, &Poly::int(lower)).unwrap()];
        let grid = GridConfig::with_bound(6);
        let verdict = Engine::default().entails_leq(&lhs, &rhs, &pre, &params, &grid).unwrap();
        let holds = |n: i64, m: i64| {
            let at = env(&[("n", n), ("m", m)]);
            n < lower || lhs.eval_ints(&at).unwrap() <= rhs.eval_ints(&at).unwrap()
        };
        match verdict {
            // coefficient dominance holds on the whole nonnegative orthant
            Verdict::Verified(Proof::Coefficients) => {
                for n in 0..=15 {
                    for m in 0..=15 {
                        prop_assert!(holds(n, m), "n={} m={}", n, m);
                    }
                }
            }
            Verdict::Verified(_) => {
                for n in 0..=6 {
                    for m in 0..=6 {
                        prop_assert!(holds(n, m), "n={} m={}", n, m);
                    }
                }
            }
            Verdict::Violated(w) => {
                let (n, m) = (w.assignment["n"], w.assignment["m"]);
                prop_assert!(n >= lower);
                prop_assert!(!holds(n, m));
                prop_assert!(w.lhs > w.rhs);
            }
            Verdict::Unverified(r) => prop_assert!(false, "unexpected unverified: {}", r),
        }
    }
}

#[test]
fn power_sums_telescope() {
    for k in 0..=6u32 {
        let s: Poly<Rational> = power_sum(k, "x");
        let mut acc: i128 = 0;
        for x in 0..=20i64 {
            if x > 0 {
                acc += i128::from(x).pow(k);
            }
            assert_eq!(s.eval_ints(&env(&[("x", x)])).unwrap(), Rational::from_integer(acc), "k={k} x={x}");
        }
    }
}

#[test]
fn triangle_number_closed_form() {
    // sum_{i=1}^{n} i = n(n+1)/2
    let space = IterSpace::interval("i", Poly::int(1), Poly::var("n")).unwrap();
    let s = Engine::default().sum_over(&SymExpr::from_poly(Poly::var("i")), &space).unwrap();
    let n = Poly::<Rational>::var("n");
    let expect = (&(&n * &n) + &n).scale(&Rational::new(1, 2));
    assert_eq!(s.value, SymExpr::from_poly(expect));
}

#[test]
fn degree_cap_is_enforced() {
    let n = Poly::<Rational>::var("n");
    let cube = SymExpr::from_poly(&(&n * &n) * &n);
    let space = IterSpace::interval("i", Poly::int(1), Poly::var("n")).unwrap();
    assert!(Engine::with_max_degree(3).sum_over(&cube, &space).is_err());
    assert!(Engine::with_max_degree(4).sum_over(&cube, &space).is_ok());
}
