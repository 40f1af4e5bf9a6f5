//! Probability arithmetic in two modes: IEEE doubles and exact rationals.

use std::fmt::Debug;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Which number type a model's probabilities are stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    #[default]
    Float,
    Exact,
}

impl ArithmeticMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithmeticMode::Float => "float",
            ArithmeticMode::Exact => "exact",
        }
    }
}

impl FromStr for ArithmeticMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float" => Ok(ArithmeticMode::Float),
            "exact" => Ok(ArithmeticMode::Exact),
            other => Err(format!("unknown arithmetic mode `{other}`")),
        }
    }
}

/// Numeric type used for probabilities, failure vectors and linear solves.
///
/// Tolerances are always given as `f64`; [`Scalar::tolerance`] maps them to zero in exact mode so
/// every comparison degenerates to an exact one.
pub trait Scalar: Num + Signed + PartialOrd + Clone + Debug + Send + Sync + 'static {
    const MODE: ArithmeticMode;

    /// `tol` in float mode, exactly zero in exact mode.
    fn tolerance(tol: f64) -> Self;

    /// Parses a probability literal: a decimal (`0.25`, `1e-3`) or a rational string (`1/4`).
    fn parse_literal(text: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Full-precision textual form used in reports and model files.
    fn render(&self) -> String;

    fn hash_value<H: Hasher>(&self, state: &mut H);

    fn is_exact() -> bool {
        Self::MODE == ArithmeticMode::Exact
    }
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Float;

    fn tolerance(tol: f64) -> Self {
        tol
    }

    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.contains('/') {
            return parse_rational(text).and_then(|r| ToPrimitive::to_f64(&r));
        }
        let v: f64 = text.parse().ok()?;
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn render(&self) -> String {
        format_sig17(*self)
    }

    fn hash_value<H: Hasher>(&self, state: &mut H) {
        // -0.0 and 0.0 must agree
        let v = if *self == 0.0 { 0.0f64 } else { *self };
        v.to_bits().hash(state);
    }
}

impl Scalar for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn tolerance(_tol: f64) -> Self {
        BigRational::zero()
    }

    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        if text.contains('/') {
            parse_rational(text)
        } else {
            parse_decimal_exact(text)
        }
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn hash_value<H: Hasher>(&self, state: &mut H) {
        self.hash(state);
    }
}

fn parse_rational(text: &str) -> Option<BigRational> {
    let (num, den) = text.split_once('/')?;
    let num = BigInt::from_str(num.trim()).ok()?;
    let den = BigInt::from_str(den.trim()).ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Converts a finite decimal expansion (optionally with exponent) to the exact rational it denotes.
pub(crate) fn parse_decimal_exact(text: &str) -> Option<BigRational> {
    let (negative, rest) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match rest.find(['e', 'E']) {
        Some(pos) => (&rest[..pos], rest[pos + 1..].parse::<i32>().ok()?),
        None => (rest, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(BigInt::from_str(&digits).ok()?);
    let scale = exponent - i32::try_from(frac_part.len()).ok()?;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if negative { -value } else { value })
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..=0).contains(&exp) {
        return sci;
    }
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp == 0 {
        out.push_str(&digits[..1]);
        out.push('.');
        out.push_str(&digits[1..]);
    } else {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    }
    let trimmed = out.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Sup-norm distance between two equally long slices.
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).abs())
        .fold(T::zero(), |acc, d| if d > acc { d } else { acc })
}
