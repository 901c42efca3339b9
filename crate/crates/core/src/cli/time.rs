use std::f64::consts::PI;

/// Parses a time given as a plain number or a multiple of π:
/// `1.5`, `pi`, `-pi`, `0.5pi`, `2pi/3`, `3*pi`, `pi/4`.
pub fn parse_time(text: &str) -> Result<f64, String> {
    let s = text.trim();
    let err = || format!("invalid time `{text}`");
    let value = match s.find("pi") {
        None => s.parse::<f64>().map_err(|_| err())?,
        Some(pos) => {
            let coeff = s[..pos].trim().trim_end_matches('*').trim();
            let coeff = match coeff {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| err())?,
            };
            let rest = s[pos + 2..].trim();
            let divisor = if rest.is_empty() {
                1.0
            } else {
                rest.strip_prefix('/')
                    .ok_or_else(err)?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| err())?
            };
            coeff * PI / divisor
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(err())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_time("pi").unwrap(), PI);
        assert_eq!(parse_time("0.5pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_time("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_time("-pi").unwrap(), -PI);
        assert_eq!(parse_time("3*pi").unwrap(), 3.0 * PI);
        assert_eq!(parse_time("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_time(" 1e-3 ").unwrap(), 1e-3);
        assert_eq!(parse_time("40pi").unwrap(), 40.0 * PI);
        for bad in ["", "pie", "xpi", "pi/", "pi/x", "2pi3", "inf"] {
            assert!(parse_time(bad).is_err(), "{bad}");
        }
    }
}
