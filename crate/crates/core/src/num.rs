//! Exact rational plumbing: `"p/q"` string parsing/formatting and decimal
//! rendering with round-half-even, used at every serialization boundary.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// Parse a rational from `"p/q"`, a plain integer `"p"`, or a decimal
/// string like `"1.5"` (which reads as 15/10).
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |m: &str| Error::Schema(format!("cannot parse rational {s:?}: {m}"));
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| bad("bad numerator"))?;
        let den: BigInt = q.trim().parse().map_err(|_| bad("bad denominator"))?;
        if den.is_zero() {
            return Err(bad("zero denominator"));
        }
        Ok(BigRational::new(num, den))
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("bad fractional part"));
        }
        let digits: String = format!("{int}{frac}");
        let num: BigInt = digits.parse().map_err(|_| bad("bad digits"))?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        Ok(BigRational::new(num, den))
    } else {
        let num: BigInt = s.parse().map_err(|_| bad("bad integer"))?;
        Ok(BigRational::from_integer(num))
    }
}

/// Render a rational as `"p/q"`, or plain `"p"` when the denominator is 1.
pub fn format_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Render a rational as a fixed-point decimal string with `places` digits,
/// rounding half to even.
pub fn decimal_string(r: &BigRational, places: u32) -> String {
    let neg = r.is_negative();
    let abs = r.abs();
    let scale = BigInt::from(10u32).pow(places);
    let scaled_num = abs.numer() * &scale;
    let den = abs.denom();
    let (mut quot, rem) = num_integer::Integer::div_rem(&scaled_num, den);
    // round half to even on the remainder
    let twice = &rem * BigInt::from(2);
    if &twice > den || (&twice == den && num_integer::Integer::is_odd(&quot)) {
        quot += 1;
    }
    let (int_part, frac_part) = num_integer::Integer::div_rem(&quot, &scale);
    let mut out = String::new();
    if neg && !quot.is_zero() {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if places > 0 {
        out.push('.');
        out.push_str(&format!("{:0>width$}", frac_part.to_string(), width = places as usize));
    }
    out
}

/// The default 6-place decimal rendering, parsed back to `f64` for JSON/CSV.
pub fn decimal_f64(r: &BigRational) -> f64 {
    decimal_string(r, 6).parse().unwrap_or_else(|_| r.to_f64().unwrap_or(f64::NAN))
}

/// Serde adapter for `BigRational` fields serialized as `"p/q"` strings.
pub mod serde_ratio {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_ratio(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_ratio(&raw).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for vectors of rationals.
pub mod serde_ratio_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[BigRational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_ratio))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_ratio(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
