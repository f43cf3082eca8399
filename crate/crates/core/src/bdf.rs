//! Coefficients of the q-step BDF method and its extrapolation formula.
//!
//! `δ(ζ) = Σ_{ℓ=1}^{q} (1/ℓ)(1 − ζ)^ℓ` gives the derivative weights and
//! `γ(ζ) = (1 − (1 − ζ)^q) / ζ` the extrapolation weights. Both are expanded
//! in exact rational arithmetic.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BdfScheme {
    order: usize,
    delta: Vec<f64>,
    gamma: Vec<f64>,
    #[serde(skip)]
    delta_exact: Vec<Rational64>,
    #[serde(skip)]
    gamma_exact: Vec<Rational64>,
}

/// Coefficients of (1 − ζ)^ℓ.
fn binomial_row(l: usize) -> Vec<Rational64> {
    let mut row = vec![Rational64::from_integer(1)];
    for _ in 0..l {
        let mut next = vec![Rational64::from_integer(0); row.len() + 1];
        for (i, c) in row.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        row = next;
    }
    row
}

pub fn bdf_coefficients(q: usize) -> Result<BdfScheme> {
    if !(1..=6).contains(&q) {
        return Err(Error::validation(format!("BDF order must lie in 1..=6, got {q}")));
    }
    let mut delta = vec![Rational64::from_integer(0); q + 1];
    for l in 1..=q {
        let w = Rational64::new(1, l as i64);
        for (j, c) in binomial_row(l).into_iter().enumerate() {
            delta[j] += w * c;
        }
    }
    // 1 − (1 − ζ)^q has zero constant term; dividing by ζ shifts coefficients down
    let row = binomial_row(q);
    let gamma: Vec<Rational64> = row[1..].iter().map(|c| -c).collect();
    let to_f = |v: &[Rational64]| v.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect();
    Ok(BdfScheme {
        order: q,
        delta: to_f(&delta),
        gamma: to_f(&gamma),
        delta_exact: delta,
        gamma_exact: gamma,
    })
}

impl BdfScheme {
    pub fn order(&self) -> usize {
        self.order
    }

    /// δ_0..δ_q
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// γ_0..γ_{q−1}
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn delta_exact(&self) -> &[Rational64] {
        &self.delta_exact
    }

    pub fn gamma_exact(&self) -> &[Rational64] {
        &self.gamma_exact
    }

    /// (1/τ) Σ δ_j history[j], history newest first with q + 1 entries.
    pub fn discrete_derivative(&self, history: &[&[f64]], tau: f64) -> Result<Vec<f64>> {
        if history.len() != self.order + 1 {
            return Err(Error::validation(format!(
                "BDF{} derivative needs {} states, got {}",
                self.order,
                self.order + 1,
                history.len()
            )));
        }
        if !(tau > 0.0) {
            return Err(Error::validation("time step must be positive"));
        }
        combine(history, &self.delta).map(|v| v.into_iter().map(|x| x / tau).collect())
    }

    /// Σ γ_j history[j], history newest first with q entries.
    pub fn extrapolate(&self, history: &[&[f64]]) -> Result<Vec<f64>> {
        if history.len() != self.order {
            return Err(Error::validation(format!(
                "BDF{} extrapolation needs {} states, got {}",
                self.order,
                self.order,
                history.len()
            )));
        }
        combine(history, &self.gamma)
    }
}

fn combine(history: &[&[f64]], coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = history[0].len();
    if history.iter().any(|h| h.len() != n) {
        return Err(Error::validation("history states differ in length"));
    }
    let mut out = vec![0.0; n];
    for (h, c) in history.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(h.iter()) {
            *o += c * v;
        }
    }
    Ok(out)
}
