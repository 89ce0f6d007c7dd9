//! Units, dimensions and exact decimal arithmetic.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Time,
    Voltage,
    Frequency,
    Angle,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Length => "a length",
            Dimension::Time => "a time",
            Dimension::Voltage => "a voltage",
            Dimension::Frequency => "a frequency",
            Dimension::Angle => "an angle",
            Dimension::Dimensionless => "a plain number",
        })
    }
}

/// Units values are stored in. Angles keep whichever of rad or deg they
/// were written in, since the conversion between them is not rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Mm,
    Ns,
    Volt,
    Hz,
    Rad,
    Deg,
    None,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Mm => "mm",
            Unit::Ns => "ns",
            Unit::Volt => "V",
            Unit::Hz => "Hz",
            Unit::Rad => "rad",
            Unit::Deg => "deg",
            Unit::None => "",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Mm => Dimension::Length,
            Unit::Ns => Dimension::Time,
            Unit::Volt => Dimension::Voltage,
            Unit::Hz => Dimension::Frequency,
            Unit::Rad | Unit::Deg => Dimension::Angle,
            Unit::None => Dimension::Dimensionless,
        }
    }

    /// Factor taking a value in this unit to SI (m, s, V, Hz, rad).
    pub fn si_factor(self) -> f64 {
        match self {
            Unit::Mm => 1e-3,
            Unit::Ns => 1e-9,
            Unit::Deg => std::f64::consts::PI / 180.0,
            Unit::Volt | Unit::Hz | Unit::Rad | Unit::None => 1.0,
        }
    }
}

pub fn pow10(k: i32) -> BigRational {
    let p = BigInt::from(10u32).pow(k.unsigned_abs());
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

/// Storage unit and exact scale factor of a unit symbol.
pub fn lookup_unit(symbol: &str) -> Option<(Unit, BigRational)> {
    let (unit, exp) = match symbol {
        "m" => (Unit::Mm, 3),
        "cm" => (Unit::Mm, 1),
        "mm" => (Unit::Mm, 0),
        "um" | "µm" | "μm" => (Unit::Mm, -3),
        "nm" => (Unit::Mm, -6),
        "s" => (Unit::Ns, 9),
        "ms" => (Unit::Ns, 6),
        "us" | "µs" | "μs" => (Unit::Ns, 3),
        "ns" => (Unit::Ns, 0),
        "ps" => (Unit::Ns, -3),
        "V" => (Unit::Volt, 0),
        "kV" => (Unit::Volt, 3),
        "mV" => (Unit::Volt, -3),
        "Hz" => (Unit::Hz, 0),
        "kHz" => (Unit::Hz, 3),
        "MHz" => (Unit::Hz, 6),
        "GHz" => (Unit::Hz, 9),
        "rad" => (Unit::Rad, 0),
        "mrad" => (Unit::Rad, -3),
        "deg" => (Unit::Deg, 0),
        _ => return None,
    };
    Some((unit, pow10(exp)))
}

/// Parses `[+-]digits[.digits][(e|E)[+-]digits]` exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all: String = [int, frac].concat();
    let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().ok()? };
    let value = BigRational::from_integer(n) * pow10(exponent.checked_sub(frac.len() as i32)?);
    Some(if negative { -value } else { value })
}

/// Plain decimal notation for values with a terminating expansion,
/// without trailing zeros. Other values fall back to 17 significant
/// digits.
pub fn format_decimal(x: &BigRational) -> String {
    if x.is_integer() {
        return x.numer().to_string();
    }
    let ten = BigInt::from(10u32);
    let mut den = x.denom().clone();
    let mut digits = 0usize;
    for p in [BigInt::from(2u32), BigInt::from(5u32)] {
        let mut count = 0usize;
        while den.is_multiple_of(&p) {
            den /= &p;
            count += 1;
        }
        digits = digits.max(count);
    }
    if !den.is_one() {
        return format!("{:.16e}", to_f64(x));
    }
    let scaled = (x * BigRational::from_integer(ten.pow(digits as u32))).to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let mut s = scaled.abs().to_string();
    if s.len() <= digits {
        s = "0".repeat(digits + 1 - s.len()) + &s;
    }
    let (int, frac) = s.split_at(s.len() - digits);
    format!("{sign}{int}.{}", frac.trim_end_matches('0'))
}

/// Closest `f64` (the decimal text goes through the correctly rounded
/// float parser).
pub fn to_f64(x: &BigRational) -> f64 {
    let scale = BigInt::from(10u32).pow(40);
    let q = (x * BigRational::from_integer(scale)).round().to_integer();
    format!("{q}e-40").parse().unwrap_or(f64::NAN)
}

/// Exact decimal close to `v`, with `sig` significant digits.
pub fn from_f64(v: f64, sig: usize) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    let text = format!("{:.*e}", sig.saturating_sub(1), v);
    parse_decimal(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_decimal(s).unwrap()
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(q("0.004") * pow10(3), BigRational::from_integer(4.into()));
        assert_eq!(q("1.5e-3"), BigRational::new(3.into(), 2000.into()));
        assert_eq!(q("-.25"), BigRational::new((-1).into(), 4.into()));
        assert_eq!(q("+7."), BigRational::from_integer(7.into()));
        for bad in ["", ".", "1.2.3", "e5", "1e", "abc", "--1"] {
            assert!(parse_decimal(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn formatting_drops_trailing_zeros() {
        for (input, shown) in [
            ("4", "4"),
            ("0.0008", "0.0008"),
            ("-2.50", "-2.5"),
            ("1e-9", "0.000000001"),
            ("250e3", "250000"),
            ("-0.5", "-0.5"),
        ] {
            assert_eq!(format_decimal(&q(input)), shown);
        }
        let third = BigRational::new(1.into(), 3.into());
        assert!((to_f64(&third) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn unit_table_scales() {
        let (u, f) = lookup_unit("m").unwrap();
        assert_eq!(u, Unit::Mm);
        assert_eq!(q("0.004") * f, q("4"));
        let (u, f) = lookup_unit("µs").unwrap();
        assert_eq!((u, f), (Unit::Ns, q("1000")));
        assert!(lookup_unit("furlong").is_none());
        assert_eq!(lookup_unit("deg").unwrap().0.dimension(), Dimension::Angle);
    }

    #[test]
    fn float_conversion() {
        assert_eq!(to_f64(&q("0.1")), 0.1);
        assert_eq!(to_f64(&q("3200")), 3200.0);
        assert_eq!(from_f64(0.4226626, 7), Some(q("0.4226626")));
        assert_eq!(from_f64(f64::NAN, 3), None);
    }
}
