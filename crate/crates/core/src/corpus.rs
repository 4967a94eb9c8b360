//! Parametric test profiles and a fixed corpus built from them.

use crate::error::{Error, Result};
use crate::grids::{FrequencyGrid, FrequencyProfile};
use crate::sequences::eta;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `exp(-|xi - c|^2 / w^2)`.
    Gaussian,
    /// Smooth bump `eta(|xi - c| / w)`, equal to 1 on `|xi - c| <= w/2`.
    Bump,
    /// `G(xi - c - s e_1) + a G(xi - c + s e_1)` with `G` a Gaussian of width `w`.
    TwoBump,
}

/// `A(xi) exp(i (phase + velocity·xi + chirp |xi - c|^2))` with amplitude `A` given by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    #[serde(default = "one")]
    pub width: f64,
    /// Defaults to the origin.
    #[serde(default)]
    pub center: Vec<f64>,
    /// Constant phase.
    #[serde(default)]
    pub phase: f64,
    /// Linear phase; defaults to zero.
    #[serde(default)]
    pub velocity: Vec<f64>,
    #[serde(default)]
    pub chirp: f64,
    /// Half distance between the two components of a two-bump profile.
    #[serde(default = "one")]
    pub separation: f64,
    /// Weight of the second component of a two-bump profile.
    #[serde(default = "one")]
    pub ratio: f64,
}

fn one() -> f64 {
    1.0
}

fn pad(v: &[f64], d: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        0 => Ok(vec![0.0; d]),
        n if n == d => Ok(v.to_vec()),
        n => Err(Error::Config(format!("profile.{what} has {n} entries, expected {d}"))),
    }
}

impl ProfileSpec {
    pub fn gaussian(width: f64) -> Self {
        Self {
            kind: ProfileKind::Gaussian,
            width,
            center: Vec::new(),
            phase: 0.0,
            velocity: Vec::new(),
            chirp: 0.0,
            separation: 1.0,
            ratio: 1.0,
        }
    }

    pub fn label(&self) -> String {
        let kind = match self.kind {
            ProfileKind::Gaussian if self.chirp != 0.0 => "chirped-gaussian",
            ProfileKind::Gaussian => "gaussian",
            ProfileKind::Bump => "bump",
            ProfileKind::TwoBump => "two-bump",
        };
        format!("{kind}(w={})", self.width)
    }

    pub fn build(&self, grid: &FrequencyGrid) -> Result<FrequencyProfile> {
        let d = grid.d;
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Config(format!("profile.width = {} must be positive", self.width)));
        }
        if !(self.separation >= 0.0 && self.ratio.is_finite()) {
            return Err(Error::Config("profile.separation must be non-negative and profile.ratio finite".into()));
        }
        let c = pad(&self.center, d, "center")?;
        let v = pad(&self.velocity, d, "velocity")?;
        let w = self.width;
        let dist2 = |xi: &[f64], off: f64| -> f64 {
            xi.iter().zip(&c).enumerate().map(|(a, (x, c))| (x - c - if a == 0 { off } else { 0.0 }).powi(2)).sum()
        };
        let prof = FrequencyProfile::from_fn(grid.clone(), self.label(), |xi| {
            let amp = match self.kind {
                ProfileKind::Gaussian => (-dist2(xi, 0.0) / (w * w)).exp(),
                ProfileKind::Bump => eta(dist2(xi, 0.0).sqrt() / w),
                ProfileKind::TwoBump => {
                    let s = self.separation;
                    (-dist2(xi, s) / (w * w)).exp() + self.ratio * (-dist2(xi, -s) / (w * w)).exp()
                }
            };
            let lin: f64 = xi.iter().zip(&v).map(|(x, v)| x * v).sum();
            Complex64::from_polar(amp, self.phase + lin + self.chirp * dist2(xi, 0.0))
        })?;
        if prof.is_zero() {
            return Err(Error::Degenerate(format!("{} vanishes on the grid", self.label())));
        }
        Ok(prof)
    }
}

/// Twenty profiles: Gaussians, bumps, two-bump superpositions and chirped Gaussians,
/// five of each, all comfortably inside a window of half width 8.
pub fn standard_corpus(d: usize) -> Vec<ProfileSpec> {
    let at = |kind: ProfileKind, width: f64, c: f64| {
        let mut center = vec![0.0; d];
        center[0] = c;
        ProfileSpec { kind, width, center, ..ProfileSpec::gaussian(1.0) }
    };
    let mut out = Vec::with_capacity(20);
    for (w, c) in [(1.0, 0.0), (0.5, 0.0), (1.5, 0.0), (1.0, 1.5), (0.7, -1.0)] {
        out.push(at(ProfileKind::Gaussian, w, c));
    }
    for (w, c) in [(1.0, 0.0), (2.0, 0.0), (1.5, 0.5), (3.0, 0.0), (1.0, -1.0)] {
        out.push(at(ProfileKind::Bump, w, c));
    }
    for (s, r, phase) in [(1.0, 1.0, 0.0), (1.5, 0.5, 0.0), (2.0, 1.0, 1.0), (1.0, -1.0, 0.0), (2.5, 0.3, 0.5)] {
        out.push(ProfileSpec { separation: s, ratio: r, phase, ..at(ProfileKind::TwoBump, 0.8, 0.0) });
    }
    for (w, chirp, c) in [(1.0, 0.5, 0.0), (1.0, -1.0, 0.0), (0.7, 2.0, 0.0), (1.5, 0.25, 0.5), (1.0, 1.0, -0.5)] {
        out.push(ProfileSpec { chirp, ..at(ProfileKind::Gaussian, w, c) });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_builds_and_is_diverse() {
        let grid = FrequencyGrid::new(1, 10.0, 512).unwrap();
        let corpus = standard_corpus(1);
        assert_eq!(corpus.len(), 20);
        for spec in &corpus {
            let f = spec.build(&grid).unwrap();
            assert!(f.lp_norm(2.0) > 0.1);
            let edge = f.samples[0].norm().max(f.samples[511].norm());
            assert!(edge < 1e-12, "{} touches the window edge", spec.label());
        }
    }

    #[test]
    fn gaussian_spec_matches_formula() {
        let grid = FrequencyGrid::new(1, 5.0, 64).unwrap();
        let spec = ProfileSpec {
            center: vec![0.5],
            velocity: vec![2.0],
            chirp: 0.3,
            phase: 1.0,
            ..ProfileSpec::gaussian(0.8)
        };
        let f = spec.build(&grid).unwrap();
        for k in [3, 30, 50] {
            let x = grid.axis_coord(0, k);
            let z = (x - 0.5) * (x - 0.5);
            let want = Complex64::from_polar((-z / 0.64).exp(), 1.0 + 2.0 * x + 0.3 * z);
            assert!((f.samples[k] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn bad_specs_are_rejected() {
        let grid = FrequencyGrid::new(2, 5.0, 16).unwrap();
        let spec = ProfileSpec { center: vec![1.0], ..ProfileSpec::gaussian(1.0) };
        assert!(matches!(spec.build(&grid), Err(Error::Config(_))));
        assert!(matches!(ProfileSpec::gaussian(0.0).build(&grid), Err(Error::Config(_))));
        let far = ProfileSpec { kind: ProfileKind::Bump, center: vec![50.0, 0.0], ..ProfileSpec::gaussian(1.0) };
        assert!(matches!(far.build(&grid), Err(Error::Degenerate(_))));
    }
}
