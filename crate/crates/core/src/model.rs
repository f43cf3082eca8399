//! Physical parameters of the coupled bulk–surface growth model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

/// Boundary source `Q(x, t)`: a constant or a polynomial in `x, y, z, t`.
///
/// Text form is `const:<v>` or `poly:<terms>`, e.g. `poly:1.5 + 0.2*x^2*t - y`.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Constant(f64),
    Polynomial(Vec<Monomial>),
}

/// `coeff * x^e0 * y^e1 * z^e2 * t^e3`
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: [u32; 4],
}

impl Source {
    pub fn eval(&self, p: &Point, t: f64) -> f64 {
        match self {
            Source::Constant(c) => *c,
            Source::Polynomial(terms) => terms
                .iter()
                .map(|m| {
                    let vars = [p[0], p[1], p[2], t];
                    m.coeff * (0..4).map(|i| vars[i].powi(m.powers[i] as i32)).product::<f64>()
                })
                .sum(),
        }
    }

    /// The constant value, if the source does not depend on space or time.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Source::Constant(c) => Some(*c),
            Source::Polynomial(terms) => {
                if terms.iter().all(|m| m.powers == [0; 4]) {
                    Some(terms.iter().map(|m| m.coeff).sum())
                } else {
                    None
                }
            }
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(v) = s.strip_prefix("const:") {
            let c: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::validation(format!("bad constant source `{v}`")))?;
            if !c.is_finite() {
                return Err(Error::validation("source constant must be finite"));
            }
            return Ok(Source::Constant(c));
        }
        if let Some(body) = s.strip_prefix("poly:") {
            return parse_polynomial(body).map(Source::Polynomial);
        }
        Err(Error::validation(format!("source must start with `const:` or `poly:`, got `{s}`")))
    }
}

fn parse_polynomial(body: &str) -> Result<Vec<Monomial>> {
    let bad = |msg: String| Error::validation(format!("polynomial source: {msg}"));
    let mut terms = Vec::new();
    // split on + and - that start a new term, keeping the sign
    let mut chunks: Vec<String> = Vec::new();
    let mut cur = String::new();
    let mut prev = ' ';
    for ch in body.chars().filter(|c| !c.is_whitespace()) {
        if (ch == '+' || ch == '-') && !cur.is_empty() && !matches!(prev, 'e' | 'E' | '^' | '+' | '-' | '*') {
            chunks.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
        prev = ch;
    }
    if !cur.is_empty() {
        chunks.push(cur);
    }
    if chunks.is_empty() {
        return Err(bad("empty expression".into()));
    }
    for chunk in chunks {
        let (sign, rest) = match chunk.strip_prefix('-') {
            Some(r) => (-1.0, r),
            None => (1.0, chunk.strip_prefix('+').unwrap_or(&chunk)),
        };
        let mut coeff = sign;
        let mut powers = [0u32; 4];
        for factor in rest.split('*') {
            let (base, exp) = match factor.split_once('^') {
                Some((b, e)) => (b, e.parse::<u32>().map_err(|_| bad(format!("bad exponent in `{factor}`")))?),
                None => (factor, 1),
            };
            let slot = match base {
                "x" => Some(0),
                "y" => Some(1),
                "z" => Some(2),
                "t" => Some(3),
                _ => None,
            };
            match slot {
                Some(i) => powers[i] += exp,
                None => {
                    let v: f64 = base.parse().map_err(|_| bad(format!("unknown factor `{factor}`")))?;
                    coeff *= v.powi(exp as i32);
                }
            }
        }
        terms.push(Monomial { coeff, powers });
    }
    Ok(terms)
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(c) => write!(f, "const:{c}"),
            Source::Polynomial(terms) => {
                write!(f, "poly:")?;
                for (i, m) in terms.iter().enumerate() {
                    match (i, m.coeff < 0.0) {
                        (0, _) => write!(f, "{}", m.coeff)?,
                        (_, true) => write!(f, " - {}", -m.coeff)?,
                        (_, false) => write!(f, " + {}", m.coeff)?,
                    }
                    for (v, p) in ["x", "y", "z", "t"].iter().zip(m.powers) {
                        if p > 0 {
                            write!(f, "*{v}^{p}")?;
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Source {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Source {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Coefficients of the Robin condition and the forced flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Robin coefficient, couples u into the boundary condition and velocity.
    pub alpha: f64,
    /// Surface tension weight of the curvature term.
    pub beta: f64,
    /// Surface diffusion regularization of the Robin condition.
    pub mu: f64,
    #[serde(rename = "Q")]
    pub source: Source,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, source: Source) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            mu,
            source,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::validation(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::validation(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::validation(format!("mu must be non-negative, got {}", self.mu)));
        }
        Ok(())
    }
}
