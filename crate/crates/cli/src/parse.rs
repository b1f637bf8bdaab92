//! Parsers for angle and observable arguments.

use std::f64::consts::PI;

use wgsense_core::measurement::{general_axis_observable, pauli_observable, PauliLabel};
use wgsense_core::Observable;

/// Parses an angle into radians.
///
/// Plain numbers are degrees (`180`, `-22.5`). A `rad` suffix marks radians
/// (`3.14159265rad`), as do multiples and fractions of `pi` (`pi`, `3pi/4`,
/// `-pi/8`).
pub fn angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Some(r) = t.strip_suffix("rad") {
        return number(r).map_err(|_| format!("invalid angle `{s}`"));
    }
    if let Some(d) = t.strip_suffix("deg") {
        return number(d)
            .map(f64::to_radians)
            .map_err(|_| format!("invalid angle `{s}`"));
    }
    if t.contains("pi") {
        return pi_expr(&t).ok_or_else(|| format!("invalid angle `{s}`"));
    }
    number(&t)
        .map(f64::to_radians)
        .map_err(|_| format!("invalid angle `{s}`"))
}

fn number(s: &str) -> Result<f64, ()> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(()),
    }
}

fn pi_expr(t: &str) -> Option<f64> {
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, number(d).ok()?),
        None => (t, 1.0),
    };
    let coef = num.strip_suffix("pi")?.trim().trim_end_matches('*');
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => number(c).ok()?,
    };
    (den != 0.0).then_some(c * PI / den)
}

/// `START:END` pair of angles.
pub fn angle_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected START:END, got `{s}`"))?;
    Ok((angle(a)?, angle(b)?))
}

/// `ZY`-style Pauli pair or `axis:b1,a1,b2,a2` with angles as in [`angle`].
pub fn observable(s: &str) -> Result<Observable, String> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix("axis:") {
        let v: Vec<f64> = rest.split(',').map(angle).collect::<Result<_, _>>()?;
        if v.len() != 4 {
            return Err(format!("axis observable needs 4 angles, got {}", v.len()));
        }
        return Ok(general_axis_observable(v[0], v[1], v[2], v[3]));
    }
    let chars: Vec<char> = t
        .chars()
        .filter(|c| !matches!(c, ' ' | 'x' | '*' | '⊗'))
        .collect();
    if chars.len() != 2 {
        return Err(format!("expected two Pauli labels such as `ZY`, got `{s}`"));
    }
    let a: PauliLabel = chars[0].to_string().parse().map_err(|e| format!("{e}"))?;
    let b: PauliLabel = chars[1].to_string().parse().map_err(|e| format!("{e}"))?;
    Ok(pauli_observable(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(angle("180").unwrap(), PI);
        assert!((angle("-22.5").unwrap() + PI / 8.0).abs() < 1e-15);
        assert_eq!(angle("2.5rad").unwrap(), 2.5);
        assert_eq!(angle("pi").unwrap(), PI);
        assert_eq!(angle("3pi/4").unwrap(), 0.75 * PI);
        assert_eq!(angle("-pi/8").unwrap(), -PI / 8.0);
        assert_eq!(angle("90deg").unwrap(), PI / 2.0);
        assert!(angle("abc").is_err());
        assert!(angle("pi/0").is_err());
        assert_eq!(angle_range("0:360").unwrap(), (0.0, 2.0 * PI));
    }

    #[test]
    fn observables() {
        let o = observable("ZY").unwrap();
        assert_eq!(o.pauli_labels(), Some((PauliLabel::Z, PauliLabel::Y)));
        assert_eq!(observable("iy").unwrap().weights, [1, -1, 1, -1]);
        assert!(observable("axis:90,0,90,90").is_ok());
        assert!(observable("axis:90,0").is_err());
        assert!(observable("ZQ").is_err());
    }
}
