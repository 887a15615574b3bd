use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::constraint::LinConstraint;
use super::expr::{dominates, SymExpr};
use super::poly::{Poly, Var};
use super::scalar::Coeff;
use super::{Engine, SymError};

/// Per-variable integer ranges explored by grid search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridConfig {
    pub default_range: (i64, i64),
    pub ranges: BTreeMap<Var, (i64, i64)>,
    pub max_points: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            default_range: (0, 8),
            ranges: BTreeMap::new(),
            max_points: 1_000_000,
        }
    }
}

impl GridConfig {
    pub fn with_bound(upper: i64) -> Self {
        Self {
            default_range: (0, upper),
            ..Self::default()
        }
    }

    pub fn range_of(&self, v: &str) -> (i64, i64) {
        self.ranges.get(v).copied().unwrap_or(self.default_range)
    }

    /// Every assignment of `vars` in grid order, lexicographic in the sorted
    /// variable list.
    pub fn points(&self, vars: &BTreeSet<Var>) -> Result<GridPoints, SymError> {
        let vars: Vec<Var> = vars.iter().cloned().collect();
        let ranges: Vec<(i64, i64)> = vars.iter().map(|v| self.range_of(v)).collect();
        let mut total: u64 = 1;
        for (lo, hi) in &ranges {
            let width = if hi < lo { 0 } else { (hi - lo + 1) as u64 };
            total = total.saturating_mul(width);
        }
        if total > self.max_points {
            return Err(SymError::GridTooLarge {
                points: total,
                cap: self.max_points,
            });
        }
        let current = if total == 0 {
            None
        } else {
            Some(ranges.iter().map(|(lo, _)| *lo).collect())
        };
        Ok(GridPoints { vars, ranges, current })
    }
}

pub struct GridPoints {
    vars: Vec<Var>,
    ranges: Vec<(i64, i64)>,
    current: Option<Vec<i64>>,
}

impl Iterator for GridPoints {
    type Item = BTreeMap<Var, i64>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.current.as_mut()?;
        let out = self.vars.iter().cloned().zip(cur.iter().copied()).collect();
        // odometer, last variable fastest
        let mut k = cur.len();
        loop {
            if k == 0 {
                self.current = None;
                break;
            }
            k -= 1;
            if cur[k] < self.ranges[k].1 {
                cur[k] += 1;
                for (j, slot) in cur.iter_mut().enumerate().skip(k + 1) {
                    *slot = self.ranges[j].0;
                }
                break;
            }
        }
        Some(out)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proof {
    /// Every alternative of the left side is coefficient-wise below some
    /// alternative of the right side.
    Coefficients,
    /// No grid counterexample and the difference is affine.
    AffineGrid,
    /// No grid counterexample for a non-affine difference.
    Grid,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Witness<C: Coeff> {
    pub assignment: BTreeMap<Var, i64>,
    pub lhs: C,
    pub rhs: C,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict<C: Coeff> {
    Verified(Proof),
    Violated(Witness<C>),
    Unverified(String),
}

impl<C: Coeff> Verdict<C> {
    pub fn is_verified(&self) -> bool {
        matches!(self, Verdict::Verified(_))
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }
}

impl<C: Coeff> fmt::Display for Verdict<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Verified(Proof::Coefficients) => f.write_str("verified"),
            Verdict::Verified(Proof::AffineGrid) => f.write_str("verified (affine grid)"),
            Verdict::Verified(Proof::Grid) => f.write_str("verified-by-grid"),
            Verdict::Violated(w) => {
                write!(f, "violated at ")?;
                let parts: Vec<String> = w.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "{{{}}}: {} > {}", parts.join(", "), w.lhs, w.rhs)
            }
            Verdict::Unverified(r) => write!(f, "unverified: {r}"),
        }
    }
}

impl Engine {
    /// Decides `lhs <= rhs` for all integer assignments of `params` meeting
    /// `pre`, with variables ranging over nonnegative integers.
    ///
    /// Coefficient dominance is tried first (after shifting variables by
    /// positive lower bounds found in `pre`), then exhaustive grid search.
    pub fn entails_leq<C: Coeff>(
        &self,
        lhs: &SymExpr<C>,
        rhs: &SymExpr<C>,
        pre: &[LinConstraint<C>],
        params: &BTreeSet<Var>,
        grid: &GridConfig,
    ) -> Result<Verdict<C>, SymError> {
        let mut vars: BTreeSet<Var> = lhs.vars();
        vars.extend(rhs.vars());
        for c in pre {
            vars.extend(c.vars());
        }
        let unknown: Vec<&Var> = vars.iter().filter(|v| !params.contains(*v)).collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(|v| v.as_str()).collect();
            return Ok(Verdict::Unverified(format!(
                "bound depends on quantities not fixed at entry: {}",
                names.join(", ")
            )));
        }

        if coefficient_entailment(lhs, rhs, pre) {
            return Ok(Verdict::Verified(Proof::Coefficients));
        }

        let mut any_point = false;
        for point in grid.points(&vars)? {
            let env: BTreeMap<Var, C> = point.iter().map(|(k, v)| (k.clone(), C::from_int(*v))).collect();
            let admitted = pre
                .iter()
                .all(|c| c.holds(&env).expect("constraint vars are on the grid"));
            if !admitted {
                continue;
            }
            any_point = true;
            let l = lhs.eval(&env).expect("lhs vars are on the grid");
            let r = rhs.eval(&env).expect("rhs vars are on the grid");
            if l > r {
                return Ok(Verdict::Violated(Witness {
                    assignment: point,
                    lhs: l,
                    rhs: r,
                }));
            }
        }
        if !any_point {
            return Ok(Verdict::Unverified(
                "no grid point satisfies the preconditions".to_string(),
            ));
        }
        let affine = lhs.degree() <= 1 && rhs.degree() <= 1;
        Ok(Verdict::Verified(if affine { Proof::AffineGrid } else { Proof::Grid }))
    }
}

fn coefficient_entailment<C: Coeff>(lhs: &SymExpr<C>, rhs: &SymExpr<C>, pre: &[LinConstraint<C>]) -> bool {
    // v >= k with k > 0 lets us rewrite v as v' + k, v' >= 0
    let mut shift: BTreeMap<Var, C> = BTreeMap::new();
    for c in pre {
        if let Some((v, k)) = c.lower_bound() {
            if k > C::zero() {
                let slot = shift.entry(v).or_insert_with(C::zero);
                if k > *slot {
                    *slot = k;
                }
            }
        }
    }
    let binding: BTreeMap<Var, Poly<C>> = shift
        .into_iter()
        .map(|(v, k)| (v.clone(), &Poly::var(v) + &Poly::constant(k)))
        .collect();
    lhs.alternatives().iter().all(|p| {
        let p = p.substitute(&binding);
        rhs.alternatives()
            .iter()
            .any(|q| dominates(&q.substitute(&binding), &p))
    })
}
