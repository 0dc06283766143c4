//! Singularly perturbed linear programs in exact rational arithmetic.
//!
//! The library builds and solves the parametric family
//!
//! ```text
//!   max <c0 + eps*c1, x>   s.t.   (A0 + eps*A1) x = b0 + eps*b1,   x >= 0,
//! ```
//!
//! constructs the eps-free limiting linear program whose solutions are the
//! limits of the perturbed optima, decides the Slater / extended-Slater and
//! rank conditions that govern convergence, and runs eps-sweeps that measure
//! the gap between the perturbed values and the limiting value. On top of
//! that sits a finite Markov decision process layer: exact stationary-policy
//! evaluation, the discounted-optimality linear program, and its mechanical
//! reduction — via the interest rate `eps = (1-alpha)/alpha` — to the
//! long-run average-reward linear program.
//!
//! All core math is generic over [`Scalar`]; the concrete aliases below pin
//! the exact big-rational instantiation used everywhere user-facing. There
//! is no floating point on any code path: feasibility, optimality, strict
//! positivity and rank questions are decided exactly.

pub mod error;
pub mod io;
pub mod linalg;
pub mod mdp;
pub mod perturbed;
pub mod scalar;
pub mod simplex;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact arbitrary-precision rational scalar.
pub type Rat = num_rational::BigRational;

/// Dense matrix over [`Rat`].
pub type RatMatrix = linalg::Matrix<Rat>;

/// Dense vector over [`Rat`].
pub type RatVector = Vec<Rat>;

/// Builds the reduced rational `num/den`, failing on a zero denominator.
///
/// The sign ends up on the numerator and the canonical zero is `0/1`;
/// both are maintained by every subsequent arithmetic operation.
pub fn try_rat(num: i64, den: i64) -> Result<Rat> {
    if den == 0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(Rat::new(num.into(), den.into()))
}

/// Infallible convenience form of [`try_rat`]; panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    try_rat(num, den).expect("zero denominator")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    #[test]
    fn rat_reduces_to_lowest_terms() {
        assert_eq!(rat(2, 4), rat(1, 2));
        assert_eq!(rat(2, 4).numer(), rat(1, 2).numer());
        assert_eq!(*rat(2, 4).denom(), 2.into());
    }

    #[test]
    fn rat_canonical_zero() {
        let z = rat(0, 7);
        assert_eq!(*z.numer(), 0.into());
        assert_eq!(*z.denom(), 1.into());
    }

    #[test]
    fn rat_sign_on_numerator() {
        let r = rat(3, -6);
        assert_eq!(r, rat(-1, 2));
        assert!(r.numer().is_negative());
        assert!(r.denom().is_positive());
    }

    #[test]
    fn rat_zero_denominator_is_an_error() {
        assert_eq!(try_rat(1, 0), Err(Error::ZeroDenominator));
    }
}
