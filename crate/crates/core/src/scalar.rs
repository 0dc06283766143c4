use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, Signed};

/// Scalar type the whole library is generic over.
///
/// Everything downstream (linear algebra, simplex, the perturbed-LP
/// machinery, MDP evaluation) only needs field arithmetic, ordering and a
/// way to build small integer constants. `BigRational` is the intended
/// instantiation — all exactness claims hold only for exact types — but the
/// algorithms themselves compile for any ordered field, including `f64`.
pub trait Scalar:
    Num + Signed + FromPrimitive + PartialOrd + Clone + Debug + Display + 'static
{
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("small integer must be representable")
    }

    /// Small rational constant `num/den`. Exact for rational scalars.
    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_int(num) / Self::from_int(den)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + FromPrimitive + PartialOrd + Clone + Debug + Display + 'static
{
}
