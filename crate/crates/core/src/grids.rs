//! Uniform frequency grids, spacetime grids, and the sampled objects living on them.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Node grid `xi_k = center - L + k * dxi`, `k = 0..N`, on every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub d: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub spacing: f64,
    /// Midpoint of the window. Zero unless the grid was produced by a symmetry.
    pub center: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(d: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        Self::centered(d, half_width, points_per_axis, vec![0.0; d])
    }

    pub fn centered(d: usize, half_width: f64, n: usize, center: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half width {half_width} must be positive")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Resolution(format!("{n} points per axis is not a power of two")));
        }
        if center.len() != d || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("grid center must be a finite d-vector".into()));
        }
        Ok(Self { d, half_width, points_per_axis: n, spacing: 2.0 * half_width / n as f64, center })
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First node on `axis`.
    pub fn start(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_width
    }

    pub fn axis_coord(&self, axis: usize, k: usize) -> f64 {
        self.start(axis) + k as f64 * self.spacing
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.points_per_axis).map(|k| self.axis_coord(axis, k)).collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.d as i32)
    }

    /// Coordinates of flat sample `idx` (axis 0 varies slowest).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.point_into(idx, &mut out);
        out
    }

    pub fn point_into(&self, mut idx: usize, out: &mut [f64]) {
        let n = self.points_per_axis;
        for axis in (0..self.d).rev() {
            out[axis] = self.axis_coord(axis, idx % n);
            idx /= n;
        }
    }

    /// Same number of points and window, up to rounding.
    pub fn compatible(&self, other: &FrequencyGrid) -> bool {
        let tol = 1e-12 * self.half_width.max(1.0);
        self.d == other.d
            && self.points_per_axis == other.points_per_axis
            && (self.half_width - other.half_width).abs() <= tol
            && self.center.iter().zip(&other.center).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Samples of a frequency-side function on a [`FrequencyGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub grid: FrequencyGrid,
    pub samples: Vec<Complex64>,
    pub label: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FrequencyProfile {
    pub fn new(grid: FrequencyGrid, samples: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("profile samples must be finite".into()));
        }
        Ok(Self { grid, samples, label: label.into(), warnings: Vec::new() })
    }

    pub fn zeros(grid: FrequencyGrid, label: impl Into<String>) -> Self {
        let n = grid.len();
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); n], label: label.into(), warnings: Vec::new() }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: FrequencyGrid, label: impl Into<String>, f: F) -> Result<Self> {
        let mut xi = vec![0.0; grid.d];
        let samples = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut xi);
                f(&xi)
            })
            .collect();
        Self::new(grid, samples, label)
    }

    pub fn d(&self) -> usize {
        self.grid.d
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// `a * self + b * other`; grids must agree.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if !self.grid.compatible(&other.grid) {
            return Err(Error::GridMismatch("profiles live on different frequency grids".into()));
        }
        let mut out = self.clone();
        for (z, w) in out.samples.iter_mut().zip(&other.samples) {
            *z = a * *z + b * w;
        }
        Ok(out)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `(∫ |f|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_frequency(self, p).unwrap_or(f64::NAN)
    }
}

/// `exp(-|xi - center|^2 / width^2) * exp(i xi·phase_velocity)` sampled on `grid`.
pub fn gaussian_profile(
    grid: &FrequencyGrid,
    center: &[f64],
    width: f64,
    phase_velocity: &[f64],
) -> Result<FrequencyProfile> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("width {width} must be positive")));
    }
    if center.len() != grid.d || phase_velocity.len() != grid.d {
        return Err(Error::InvalidParameter("center and phase velocity must have length d".into()));
    }
    let mut prof = FrequencyProfile::from_fn(grid.clone(), "gaussian", |xi| {
        let mut r2 = 0.0;
        let mut ph = 0.0;
        for a in 0..xi.len() {
            r2 += (xi[a] - center[a]).powi(2);
            ph += xi[a] * phase_velocity[a];
        }
        Complex64::from_polar((-r2 / (width * width)).exp(), ph)
    })?;
    let off = center.iter().zip(&grid.center).map(|(c, g)| (c - g).abs()).fold(0.0, f64::max);
    if off > grid.half_width / 2.0 {
        prof.warnings
            .push(format!("gaussian center is {off:.3} from the window midpoint; the profile may be truncated"));
    }
    Ok(prof)
}

/// Riemann sum (the trapezoid rule for decaying data) of `|f|^p`, raised to `1/p`.
pub fn lp_norm_frequency(f: &FrequencyProfile, p: f64) -> Result<f64> {
    if f.samples.is_empty() {
        return Err(Error::Degenerate("empty profile".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    let terms: Vec<f64> = f.samples.iter().map(|z| z.norm().powf(p)).collect();
    let s = crate::par::pairwise_sum(&terms) * f.grid.cell_volume();
    Ok(s.powf(1.0 / p))
}

/// `f_lambda(xi) = lambda^{d/p} f(lambda xi)` on the grid scaled by `1/lambda`.
pub fn dilate_profile(f: &FrequencyProfile, lambda: f64, p: f64) -> Result<FrequencyProfile> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation {lambda} must be positive")));
    }
    if lambda == 1.0 {
        return Ok(f.clone());
    }
    let g = &f.grid;
    let grid = FrequencyGrid::centered(
        g.d,
        g.half_width / lambda,
        g.points_per_axis,
        g.center.iter().map(|c| c / lambda).collect(),
    )?;
    let amp = lambda.powf(g.d as f64 / p);
    let samples = f.samples.iter().map(|z| z * amp).collect();
    let mut out = FrequencyProfile::new(grid, samples, format!("{} dilated by {lambda}", f.label))?;
    out.warnings = f.warnings.clone();
    Ok(out)
}

/// Cell-centered box `[-T, T] x [-X, X]^d`: `t_m = -T + (m + 1/2) dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    pub d: usize,
    pub t_half_width: f64,
    pub x_half_width: f64,
    pub t_points: usize,
    pub x_points_per_axis: usize,
}

impl SpacetimeGrid {
    pub fn new(d: usize, t_half_width: f64, x_half_width: f64, t_points: usize, x_points: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(t_half_width > 0.0 && x_half_width > 0.0 && t_half_width.is_finite() && x_half_width.is_finite()) {
            return Err(Error::InvalidParameter("T and X must be positive".into()));
        }
        if t_points < 2 || x_points < 2 {
            return Err(Error::InvalidParameter("need at least two points per axis".into()));
        }
        Ok(Self { d, t_half_width, x_half_width, t_points, x_points_per_axis: x_points })
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.t_half_width / self.t_points as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.x_half_width / self.x_points_per_axis as f64
    }

    pub fn t(&self, m: usize) -> f64 {
        -self.t_half_width + (m as f64 + 0.5) * self.dt()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.x_half_width + (j as f64 + 0.5) * self.dx()
    }

    pub fn slice_len(&self) -> usize {
        self.x_points_per_axis.pow(self.d as u32)
    }

    pub fn len(&self) -> usize {
        self.t_points * self.slice_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.dt() * self.dx().powi(self.d as i32)
    }

    /// Same box with both half-widths scaled: `(s_t T, s_x X)`.
    pub fn rescaled(&self, s_t: f64, s_x: f64) -> Self {
        Self { t_half_width: self.t_half_width * s_t, x_half_width: self.x_half_width * s_x, ..self.clone() }
    }

    /// Default one-dimensional grid used throughout the acceptance runs.
    pub fn default_1d() -> Self {
        Self::new(1, 40.0, 40.0, 2048, 4096).expect("valid default grid")
    }
}

/// Samples of a field on a [`SpacetimeGrid`], slice-major in `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeField {
    pub grid: SpacetimeGrid,
    pub samples: Vec<Complex64>,
    pub tail_bound: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SpacetimeField {
    pub fn new(grid: SpacetimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a spacetime grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, samples, tail_bound: 0.0, warnings: Vec::new() })
    }

    pub fn slice(&self, m: usize) -> &[Complex64] {
        let n = self.grid.slice_len();
        &self.samples[m * n..(m + 1) * n]
    }

    pub fn get(&self, m: usize, j: &[usize]) -> Complex64 {
        let n = self.grid.x_points_per_axis;
        let flat = j.iter().fold(0, |acc, &k| acc * n + k);
        self.samples[m * self.grid.slice_len() + flat]
    }

    /// Pointwise `self + c * other` on a shared grid.
    pub fn add_scaled(&self, other: &Self, c: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different spacetime grids".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + c * b).collect();
        Self::new(self.grid.clone(), samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid1() -> FrequencyGrid {
        FrequencyGrid::new(1, 10.0, 2048).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid1();
        assert!((g.spacing * g.points_per_axis as f64 - 2.0 * g.half_width).abs() < 1e-12);
        assert!(FrequencyGrid::new(1, 10.0, 1000).is_err());
        assert_eq!(FrequencyGrid::new(2, 1.0, 8).unwrap().len(), 64);
    }

    #[test]
    fn gaussian_values() {
        let g = FrequencyGrid::new(1, 8.0, 256).unwrap();
        let f = gaussian_profile(&g, &[0.0], 1.0, &[0.0]).unwrap();
        assert!((f.samples[128].re - 1.0).abs() < 1e-15);
        let k = 128 + 16;
        assert!((g.axis_coord(0, k) - 1.0).abs() < 1e-12);
        assert!((f.samples[k].re - (-1f64).exp()).abs() < 1e-12);
        assert!(f.warnings.is_empty());
        let g = grid1();
        let h = gaussian_profile(&g, &[2.0], 1.0, &[0.0]).unwrap();
        let (imax, _) = h
            .samples
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
        assert!((g.axis_coord(0, imax) - 2.0).abs() <= g.spacing / 2.0);
        let far = gaussian_profile(&g, &[7.0], 1.0, &[0.0]).unwrap();
        assert_eq!(far.warnings.len(), 1);
        assert!(gaussian_profile(&g, &[0.0], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn gaussian_l2_norm() {
        let f = gaussian_profile(&grid1(), &[0.0], 1.0, &[0.0]).unwrap();
        let want = (std::f64::consts::PI / 2.0).powf(0.25);
        assert!((lp_norm_frequency(&f, 2.0).unwrap() - want).abs() < 1e-6);
        assert_eq!(lp_norm_frequency(&FrequencyProfile::zeros(grid1(), "0"), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn indicator_norm() {
        let g = grid1();
        let f = FrequencyProfile::from_fn(g.clone(), "1_[0,1]", |xi| {
            Complex64::new(if (0.0..1.0).contains(&xi[0]) { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        assert!((lp_norm_frequency(&f, 2.0).unwrap() - 1.0).abs() <= g.spacing);
    }

    #[test]
    fn dilation_round_trip() {
        let f = gaussian_profile(&grid1(), &[0.5], 1.3, &[0.2]).unwrap();
        assert_eq!(dilate_profile(&f, 1.0, 2.0).unwrap(), f);
        let back = dilate_profile(&dilate_profile(&f, 4.0, 2.0).unwrap(), 0.25, 2.0).unwrap();
        for (a, b) in back.samples.iter().zip(&f.samples) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(back.grid.compatible(&f.grid));
        assert!(dilate_profile(&f, 0.0, 2.0).is_err());
    }

    proptest! {
        #[test]
        fn dilation_preserves_norm(log_l in -4.0f64..4.0, p in 1.2f64..3.0) {
            let lambda = 2f64.powf(log_l);
            let f = gaussian_profile(&FrequencyGrid::new(1, 10.0, 512).unwrap(), &[0.3], 1.0, &[0.0]).unwrap();
            let a = f.lp_norm(p);
            let b = dilate_profile(&f, lambda, p).unwrap().lp_norm(p);
            prop_assert!(((a - b) / a).abs() < 1e-8);
        }

        #[test]
        fn norm_homogeneous(re in -5.0f64..5.0, im in -5.0f64..5.0, p in 1.0f64..4.0) {
            let f = gaussian_profile(&FrequencyGrid::new(1, 8.0, 256).unwrap(), &[0.0], 0.7, &[1.0]).unwrap();
            let c = Complex64::new(re, im);
            let a = f.scaled(c).lp_norm(p);
            let b = c.norm() * f.lp_norm(p);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}
