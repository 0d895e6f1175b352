use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

/// An angle stored exactly as a rational multiple of π.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PiFraction(pub Ratio<i64>);

impl PiFraction {
    pub fn radians(self) -> f64 {
        std::f64::consts::PI * (*self.0.numer() as f64) / (*self.0.denom() as f64)
    }

    /// `steps` equally spaced angles from `from` to `to`, both included.
    pub fn linspace(from: Self, to: Self, steps: usize) -> Vec<Self> {
        let span = to.0 - from.0;
        let n = (steps - 1) as i64;
        (0..steps as i64)
            .map(|k| Self(from.0 + span * Ratio::new(k, n)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngleError(String);

impl fmt::Display for AngleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid angle {:?}: expected forms like 0, pi, -pi/2, 7pi/9", self.0)
    }
}

impl std::error::Error for AngleError {}

impl FromStr for PiFraction {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AngleError(s.to_string());
        let t = s.trim().to_ascii_lowercase().replace('π', "pi");
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(&t)),
        };
        let int = |x: &str| -> Result<i64, AngleError> {
            if x.is_empty() || !x.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            x.parse::<i64>().map_err(|_| err())
        };
        let value = match body.find("pi") {
            None => {
                if int(body)? != 0 {
                    return Err(err());
                }
                Ratio::from_integer(0)
            }
            Some(at) => {
                let numer = match body[..at].trim_end_matches('*') {
                    "" => 1,
                    n => int(n)?,
                };
                let denom = match &body[at + 2..] {
                    "" => 1,
                    rest => int(rest.strip_prefix('/').ok_or_else(err)?)?,
                };
                if denom == 0 {
                    return Err(err());
                }
                Ratio::new(numer, denom)
            }
        };
        Ok(Self(if neg { -value } else { value }))
    }
}

impl fmt::Display for PiFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        let sign = if n < 0 { "-" } else { "" };
        match (n.abs(), d) {
            (0, _) => f.write_str("0"),
            (1, 1) => write!(f, "{sign}pi"),
            (a, 1) => write!(f, "{sign}{a}pi"),
            (1, d) => write!(f, "{sign}pi/{d}"),
            (a, d) => write!(f, "{sign}{a}pi/{d}"),
        }
    }
}
