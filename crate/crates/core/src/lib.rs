pub mod callgraph;
pub mod escape;
pub mod frontend;
pub mod instrument;
pub mod lower;
pub mod oracle;
pub mod summary;
pub mod symexpr;

/// Default exact coefficient type for bounds.
pub type Rational = num_rational::Ratio<i128>;
/// Arbitrary-precision alternative for large symbolic computations.
pub type BigRational = num_rational::BigRational;

pub type Poly = symexpr::Poly<Rational>;
pub type SymExpr = symexpr::SymExpr<Rational>;
pub type LinConstraint = symexpr::LinConstraint<Rational>;
pub type IterSpace = symexpr::IterSpace<Rational>;
pub type Verdict = symexpr::Verdict<Rational>;
