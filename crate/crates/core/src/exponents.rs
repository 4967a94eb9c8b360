//! Exponent bookkeeping for the adjoint restriction problem on the paraboloid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dimension `d`, input exponent `p`, its conjugate, and the scaling-critical
/// output exponent `q = (d + 2) p' / d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub d: usize,
    pub p: f64,
    pub p_conj: f64,
    pub q: f64,
}

impl Exponents {
    pub fn new(d: usize, p: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidExponent("dimension must be at least 1".into()));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidExponent(format!(
                "p = {p}: the conjugate exponent is infinite or undefined for p <= 1"
            )));
        }
        let p_conj = p / (p - 1.0);
        let q = (d as f64 + 2.0) * p_conj / d as f64;
        if q <= p {
            return Err(Error::InvalidExponent(format!("q = {q} does not exceed p = {p}")));
        }
        Ok(Self { d, p, p_conj, q })
    }

    /// True for d in {1, 2} with p = 2, where the Gaussian is the known extremizer.
    /// Everything else is exploratory.
    pub fn is_acceptance_set(&self) -> bool {
        (self.d == 1 || self.d == 2) && self.is_l2()
    }

    pub fn is_l2(&self) -> bool {
        (self.p - 2.0).abs() < 1e-14
    }

    /// `beta = d (q - 2) / 2`, the decay rate of `‖Ef(t)‖_∞^{q-2}`.
    pub fn dispersive_exponent(&self) -> f64 {
        self.d as f64 * (self.q - 2.0) / 2.0
    }

    /// Outside a box of half-width `T` the mass decays like `T^{-alpha}`.
    pub fn tail_decay(&self) -> f64 {
        self.dispersive_exponent() - 1.0
    }

    /// Weight `d/p` carried by frequency dilations.
    pub fn frequency_weight(&self) -> f64 {
        self.d as f64 / self.p
    }

    /// Weight `(d+2)/q` carried by spacetime dilations.
    pub fn field_weight(&self) -> f64 {
        (self.d as f64 + 2.0) / self.q
    }

    /// `2^{1/p'}`, the factor separating the pair bound from the single one.
    pub fn pair_factor(&self) -> f64 {
        2f64.powf(1.0 / self.p_conj)
    }
}

pub fn validate_exponents(d: usize, p: f64) -> Result<Exponents> {
    Exponents::new(d, p)
}
