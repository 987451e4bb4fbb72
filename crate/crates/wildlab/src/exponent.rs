//! Exact exponent arithmetic.
//!
//! The tree homogeneities, condition thresholds, and power-counting weights
//! used throughout the symbolic layer are affine expressions in the fractional
//! dimension `d` and the small margin `kappa`. Keeping them as exact rational
//! affine forms makes identities like "recursion equals closed form" testable
//! as equalities instead of float comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Exact rational scalar.
pub type Rat = BigRational;

/// Build a rational from an integer pair, e.g. `rat(3, 2)`.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact conversion of a finite `f64` into a rational (every finite float is
/// a dyadic rational).
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    BigRational::from_float(x)
}

/// An affine form `c0 + c1*d + c2*kappa` with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Exponent {
    pub c0: Rat,
    pub c_d: Rat,
    pub c_kappa: Rat,
}

impl Exponent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rat) -> Self {
        Exponent { c0: c, ..Self::default() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(rat(n, 1))
    }

    /// The symbol `d`.
    pub fn d() -> Self {
        Exponent { c_d: rat(1, 1), ..Self::default() }
    }

    /// The symbol `kappa`.
    pub fn kappa() -> Self {
        Exponent { c_kappa: rat(1, 1), ..Self::default() }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c_d.is_zero() && self.c_kappa.is_zero()
    }

    pub fn scale(&self, s: &Rat) -> Self {
        Exponent {
            c0: &self.c0 * s,
            c_d: &self.c_d * s,
            c_kappa: &self.c_kappa * s,
        }
    }

    /// Exact evaluation at rational `d` and `kappa`.
    pub fn eval(&self, d: &Rat, kappa: &Rat) -> Rat {
        &self.c0 + &self.c_d * d + &self.c_kappa * kappa
    }

    /// Float evaluation, for reports.
    pub fn eval_f64(&self, d: f64, kappa: f64) -> f64 {
        ratio_to_f64(&self.c0) + ratio_to_f64(&self.c_d) * d + ratio_to_f64(&self.c_kappa) * kappa
    }
}

pub fn ratio_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Add for Exponent {
    type Output = Exponent;
    fn add(self, rhs: Exponent) -> Exponent {
        Exponent {
            c0: self.c0 + rhs.c0,
            c_d: self.c_d + rhs.c_d,
            c_kappa: self.c_kappa + rhs.c_kappa,
        }
    }
}

impl<'a> Add<&'a Exponent> for Exponent {
    type Output = Exponent;
    fn add(self, rhs: &'a Exponent) -> Exponent {
        Exponent {
            c0: self.c0 + &rhs.c0,
            c_d: self.c_d + &rhs.c_d,
            c_kappa: self.c_kappa + &rhs.c_kappa,
        }
    }
}

impl AddAssign<&Exponent> for Exponent {
    fn add_assign(&mut self, rhs: &Exponent) {
        self.c0 += &rhs.c0;
        self.c_d += &rhs.c_d;
        self.c_kappa += &rhs.c_kappa;
    }
}

impl Sub for Exponent {
    type Output = Exponent;
    fn sub(self, rhs: Exponent) -> Exponent {
        Exponent {
            c0: self.c0 - rhs.c0,
            c_d: self.c_d - rhs.c_d,
            c_kappa: self.c_kappa - rhs.c_kappa,
        }
    }
}

impl<'a> Sub<&'a Exponent> for Exponent {
    type Output = Exponent;
    fn sub(self, rhs: &'a Exponent) -> Exponent {
        Exponent {
            c0: self.c0 - &rhs.c0,
            c_d: self.c_d - &rhs.c_d,
            c_kappa: self.c_kappa - &rhs.c_kappa,
        }
    }
}

impl SubAssign<&Exponent> for Exponent {
    fn sub_assign(&mut self, rhs: &Exponent) {
        self.c0 -= &rhs.c0;
        self.c_d -= &rhs.c_d;
        self.c_kappa -= &rhs.c_kappa;
    }
}

impl Neg for Exponent {
    type Output = Exponent;
    fn neg(self) -> Exponent {
        Exponent {
            c0: -self.c0,
            c_d: -self.c_d,
            c_kappa: -self.c_kappa,
        }
    }
}

impl Mul<Rat> for Exponent {
    type Output = Exponent;
    fn mul(self, s: Rat) -> Exponent {
        self.scale(&s)
    }
}

fn push_term(out: &mut String, coef: &Rat, sym: &str, first: &mut bool) {
    if coef.is_zero() {
        return;
    }
    let mag = coef.abs();
    if *first {
        if coef.is_negative() {
            out.push('-');
        }
        *first = false;
    } else if coef.is_negative() {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    let one = mag == rat(1, 1);
    if sym.is_empty() {
        out.push_str(&mag.to_string());
    } else if one {
        out.push_str(sym);
    } else {
        out.push_str(&format!("{mag}*{sym}"));
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let mut first = true;
        push_term(&mut s, &self.c0, "", &mut first);
        push_term(&mut s, &self.c_d, "d", &mut first);
        push_term(&mut s, &self.c_kappa, "kappa", &mut first);
        if first {
            s.push('0');
        }
        f.write_str(&s)
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exponent({self})")
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Exponent", 2)?;
        st.serialize_field("symbolic", &self.to_string())?;
        st.end()
    }
}

/// Compare two exact rationals with the convention used for strict
/// inequalities in reports: returns the `Ordering` of `a` against `b`.
pub fn cmp_rat(a: &Rat, b: &Rat) -> Ordering {
    a.cmp(b)
}
