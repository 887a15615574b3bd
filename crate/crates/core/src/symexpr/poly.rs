use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::scalar::Coeff;

/// Symbolic variable: a parameter, a field path such as `this.size`, an array
/// length such as `names.length`, or a loop index.
pub type Var = String;

/// Product of variables with positive exponents, sorted by variable name.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial {
    powers: Vec<(Var, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Self {
            powers: vec![(v.into(), 1)],
        }
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut acc: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, p) in powers {
            if p > 0 {
                *acc.entry(v).or_insert(0) += p;
            }
        }
        Self {
            powers: acc.into_iter().collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|(_, p)| p).sum()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[(Var, u32)] {
        &self.powers
    }

    pub fn power_of(&self, v: &str) -> u32 {
        self.powers
            .iter()
            .find(|(name, _)| name == v)
            .map_or(0, |(_, p)| *p)
    }

    pub fn without(&self, v: &str) -> Monomial {
        Monomial {
            powers: self.powers.iter().filter(|(n, _)| n != v).cloned().collect(),
        }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_powers(self.powers.iter().chain(other.powers.iter()).cloned())
    }
}

// Graded order: higher total degree first, then lexicographic on the sorted
// variable list. Reports rely on this being fixed.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then_with(|| self.powers.cmp(&other.powers))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, p) in &self.powers {
            for _ in 0..*p {
                if !first {
                    f.write_str("*")?;
                }
                f.write_str(v)?;
                first = false;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Multivariate polynomial with exact coefficients. Zero coefficients are
/// never stored.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly<C: Coeff> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coeff> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> PartialOrd for Poly<C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<C: Coeff> Ord for Poly<C> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.terms.iter().cmp(other.terms.iter())
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(v: i64) -> Self {
        Self::constant(C::from_int(v))
    }

    pub fn var(v: impl Into<Var>) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), C::one());
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing = existing.clone() + c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coefficient(&Monomial::one())
    }

    pub fn as_constant(&self) -> Option<C> {
        match self.terms.len() {
            0 => Some(C::zero()),
            1 if self.terms.contains_key(&Monomial::one()) => Some(self.constant_term()),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: &str) -> u32 {
        self.terms.keys().map(|m| m.power_of(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .keys()
            .flat_map(|m| m.powers.iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.terms.keys().any(|m| m.power_of(v) > 0)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// True when every coefficient (constant included) is nonnegative, which
    /// makes the polynomial nonnegative wherever all variables are.
    pub fn nonneg_coefficients(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }

    pub fn integral_coefficients(&self) -> bool {
        self.terms.values().all(Coeff::is_integral)
    }

    /// Coefficients of `v^k` for k = 0..=degree_in(v), each free of `v`.
    pub fn collect_in(&self, v: &str) -> Vec<Poly<C>> {
        let mut out = vec![Poly::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            out[m.power_of(v) as usize].add_term(m.without(v), c.clone());
        }
        out
    }

    /// Simultaneous substitution of variables by polynomials.
    pub fn substitute(&self, binding: &BTreeMap<Var, Poly<C>>) -> Poly<C> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for (v, p) in &m.powers {
                let factor = match binding.get(v) {
                    Some(img) => img.pow(*p),
                    None => Poly::from_terms([(Monomial::from_powers([(v.clone(), *p)]), C::one())]),
                };
                term = &term * &factor;
            }
            out = out + term;
        }
        out
    }

    pub fn substitute_var(&self, v: &str, image: &Poly<C>) -> Poly<C> {
        let mut b = BTreeMap::new();
        b.insert(v.to_string(), image.clone());
        self.substitute(&b)
    }

    /// Renames variables; unmapped names are kept.
    pub fn rename(&self, f: &dyn Fn(&str) -> Option<Var>) -> Poly<C> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let m = Monomial::from_powers(
                m.powers
                    .iter()
                    .map(|(v, p)| (f(v).unwrap_or_else(|| v.clone()), *p)),
            );
            (m, c.clone())
        }))
    }

    /// Evaluates under an assignment; returns the first unassigned variable
    /// on failure.
    pub fn eval(&self, env: &BTreeMap<Var, C>) -> Result<C, Var> {
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, p) in &m.powers {
                let x = env.get(v).ok_or_else(|| v.clone())?;
                for _ in 0..*p {
                    t = t * x.clone();
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    pub fn eval_ints(&self, env: &BTreeMap<Var, i64>) -> Result<C, Var> {
        let env: BTreeMap<Var, C> = env.iter().map(|(k, v)| (k.clone(), C::from_int(*v))).collect();
        self.eval(&env)
    }

    /// Least common denominator of all coefficients.
    pub fn common_denominator(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(&c.to_fraction().1))
    }
}

impl<C: Coeff> Add for &Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: &Poly<C>) -> Poly<C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<C: Coeff> Add for Poly<C> {
    type Output = Poly<C>;
    fn add(self, rhs: Poly<C>) -> Poly<C> {
        &self + &rhs
    }
}

impl<C: Coeff> Sub for &Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: &Poly<C>) -> Poly<C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for Poly<C> {
    type Output = Poly<C>;
    fn sub(self, rhs: Poly<C>) -> Poly<C> {
        &self - &rhs
    }
}

impl<C: Coeff> Mul for &Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: &Poly<C>) -> Poly<C> {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        out
    }
}

impl<C: Coeff> Mul for Poly<C> {
    type Output = Poly<C>;
    fn mul(self, rhs: Poly<C>) -> Poly<C> {
        &self * &rhs
    }
}

impl<C: Coeff> Neg for Poly<C> {
    type Output = Poly<C>;
    fn neg(self) -> Poly<C> {
        self.scale(&-C::one())
    }
}

impl<C: Coeff> fmt::Display for Poly<C> {
    /// Compact report syntax: `n*n+3*n-2`, with a single common denominator
    /// for fractional polynomials, e.g. `(n*n+n)/2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let denom = self.common_denominator();
        let mut body = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let (n, d) = c.to_fraction();
            let k: BigInt = n * (&denom / d);
            let neg = k.is_negative();
            let mag = k.abs();
            if i == 0 {
                if neg {
                    body.push('-');
                }
            } else {
                body.push(if neg { '-' } else { '+' });
            }
            if m.is_one() {
                body.push_str(&mag.to_string());
            } else if mag.is_one() {
                body.push_str(&m.to_string());
            } else {
                body.push_str(&format!("{mag}*{m}"));
            }
        }
        if denom.is_one() {
            f.write_str(&body)
        } else if self.terms.len() == 1 {
            write!(f, "{body}/{denom}")
        } else {
            write!(f, "({body})/{denom}")
        }
    }
}
