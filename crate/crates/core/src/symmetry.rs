//! The symmetry groups acting on profiles and fields, and the push-through
//! law for the shifted paraboloid.
//!
//! A [`Symmetry`] acts on profiles by
//! `S f(xi) = lambda^{d/p} e^{i theta} e^{i(t0 |lambda xi - xi~|^2 + x0·(lambda xi - xi~))} f(lambda xi - xi~)`
//! and on fields by
//! `T F(t, x) = lambda^{-(d+2)/q} e^{i theta} e^{i(t |xi~|^2 / lambda^2 + x·xi~ / lambda)}
//!              F(t / lambda^2 + t0, x / lambda + x0 + 2 t xi~ / lambda^2)`,
//! so that `E S = T E`. The constant phase `theta` is zero for the canonical
//! form; it only appears after composing or inverting.

use crate::czt::Axis;
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::extension::{axes_point, extend, spacetime_axes, Extender, ParaboloidShift, Term};
use crate::grids::{FrequencyGrid, FrequencyProfile, SpacetimeField, SpacetimeGrid};
use crate::interp;
use crate::par::{self, pairwise_sum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

fn cis(a: f64) -> Complex64 {
    Complex64::new(a.cos(), a.sin())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Symmetry {
    pub lambda: f64,
    pub xi_tilde: Vec<f64>,
    pub t0: f64,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

impl Symmetry {
    pub fn new(lambda: f64, xi_tilde: Vec<f64>, t0: f64, x0: Vec<f64>) -> Result<Self> {
        let s = Self { lambda, xi_tilde, t0, x0, phase: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn identity(d: usize) -> Self {
        Self { lambda: 1.0, xi_tilde: vec![0.0; d], t0: 0.0, x0: vec![0.0; d], phase: 0.0 }
    }

    pub fn scaling(d: usize, lambda: f64) -> Self {
        Self { lambda, ..Self::identity(d) }
    }

    pub fn d(&self) -> usize {
        self.xi_tilde.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {} must be positive", self.lambda)));
        }
        if self.x0.len() != self.xi_tilde.len() {
            return Err(Error::InvalidParameter("xi_tilde and x0 must have the same length".into()));
        }
        let all = self.xi_tilde.iter().chain(&self.x0).chain([&self.t0, &self.phase]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("symmetry parameters must be finite".into()));
        }
        Ok(())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Symmetry) -> Symmetry {
        let l2 = other.lambda;
        let xi_tilde = self.xi_tilde.iter().zip(&other.xi_tilde).map(|(a, b)| l2 * a + b).collect();
        let x0 = (0..self.d())
            .map(|k| other.x0[k] + self.x0[k] / l2 + 2.0 * self.t0 * other.xi_tilde[k] / (l2 * l2))
            .collect();
        let phase = self.phase
            + other.phase
            + self.t0 * dot(&other.xi_tilde, &other.xi_tilde) / (l2 * l2)
            + dot(&self.x0, &other.xi_tilde) / l2;
        Symmetry { lambda: self.lambda * l2, xi_tilde, t0: other.t0 + self.t0 / (l2 * l2), x0, phase }
    }

    pub fn inverse(&self) -> Symmetry {
        let l = self.lambda;
        Symmetry {
            lambda: 1.0 / l,
            xi_tilde: self.xi_tilde.iter().map(|v| -v / l).collect(),
            t0: -self.t0 * l * l,
            x0: (0..self.d()).map(|k| -l * self.x0[k] + 2.0 * self.t0 * l * self.xi_tilde[k]).collect(),
            phase: -self.phase - self.t0 * dot(&self.xi_tilde, &self.xi_tilde) + dot(&self.x0, &self.xi_tilde),
        }
    }

    /// Source point and prefactor of the field action at `(t, x)`.
    pub fn field_map(&self, q: f64, t: f64, x: &[f64]) -> (f64, Vec<f64>, Complex64) {
        let l = self.lambda;
        let d = self.d() as f64;
        let ts = t / (l * l) + self.t0;
        let xs = (0..x.len()).map(|k| x[k] / l + self.x0[k] + 2.0 * t * self.xi_tilde[k] / (l * l)).collect();
        let ph = self.phase + t * dot(&self.xi_tilde, &self.xi_tilde) / (l * l) + dot(x, &self.xi_tilde) / l;
        (ts, xs, cis(ph) * l.powf(-(d + 2.0) / q))
    }
}

fn regrid(grid: &FrequencyGrid, s: &Symmetry) -> Result<FrequencyGrid> {
    FrequencyGrid::centered(
        grid.d,
        grid.half_width / s.lambda,
        grid.points_per_axis,
        grid.center.iter().zip(&s.xi_tilde).map(|(c, x)| (c + x) / s.lambda).collect(),
    )
}

/// Profile-side action, with the phase evaluated on the paraboloid `shift`.
/// The grid is mapped along with the samples, so every sample is exact.
fn act(s: &Symmetry, f: &FrequencyProfile, p: f64, shift: &ParaboloidShift) -> Result<FrequencyProfile> {
    s.validate()?;
    if s.d() != f.d() || shift.d() != f.d() {
        return Err(Error::InvalidParameter("symmetry dimension does not match the profile".into()));
    }
    let grid = regrid(&f.grid, s)?;
    let amp = s.lambda.powf(f.d() as f64 / p);
    let mut zeta = vec![0.0; f.d()];
    let samples = f
        .samples
        .iter()
        .enumerate()
        .map(|(k, z)| {
            f.grid.point_into(k, &mut zeta);
            z * amp * cis(s.phase + s.t0 * shift.height(&zeta) + dot(&s.x0, &zeta))
        })
        .collect();
    let mut out = FrequencyProfile::new(grid, samples, format!("S({})", f.label))?;
    out.warnings = f.warnings.clone();
    Ok(out)
}

pub fn apply_symmetry_frequency(s: &Symmetry, f: &FrequencyProfile, p: f64) -> Result<FrequencyProfile> {
    act(s, f, p, &ParaboloidShift::zero(f.d()))
}

/// Profile transformer that accompanies a push-through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAction {
    pub symmetry: Symmetry,
    pub shift: ParaboloidShift,
    pub p: f64,
}

impl FrequencyAction {
    /// `g ↦ lambda^{d/p} e^{i(t0 (|lambda xi - xi~ - xi0|^2 + tau0) + x0·(lambda xi - xi~))} g(lambda xi - xi~)`.
    pub fn apply(&self, g: &FrequencyProfile) -> Result<FrequencyProfile> {
        act(&self.symmetry, g, self.p, &self.shift)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushthroughResult {
    pub new_shift: ParaboloidShift,
    pub frequency_action: FrequencyAction,
}

/// `T E_(tau0, xi0) g = E_(new shift) [action g]` with
/// new shift `(lambda^{-2} (tau0 + 2 xi0·xi~), xi0 / lambda)`.
pub fn pushthrough_shift(s: &Symmetry, shift: &ParaboloidShift, p: f64) -> PushthroughResult {
    let l = s.lambda;
    let new_shift = ParaboloidShift {
        tau0: (shift.tau0 + 2.0 * dot(&shift.xi0, &s.xi_tilde)) / (l * l),
        xi0: shift.xi0.iter().map(|v| v / l).collect(),
    };
    PushthroughResult { new_shift, frequency_action: FrequencyAction { symmetry: s.clone(), shift: shift.clone(), p } }
}

#[derive(Clone, Debug)]
pub struct TransformedField {
    pub field: SpacetimeField,
    /// Fraction of output points whose source lay inside the interpolable region.
    pub coverage: f64,
    /// Per output point, whether it was covered.
    pub covered: Vec<bool>,
}

pub const MIN_COVERAGE: f64 = 0.5;

/// Field-side action by four-point interpolation on the field's own grid.
/// Points whose source leaves the grid are set to zero and counted as uncovered.
pub fn apply_symmetry_field(s: &Symmetry, field: &SpacetimeField, q: f64) -> Result<TransformedField> {
    s.validate()?;
    let g = &field.grid;
    if s.d() != g.d {
        return Err(Error::InvalidParameter("symmetry dimension does not match the field".into()));
    }
    let axes = spacetime_axes(g);
    let slices = par::map_indexed(g.t_points, |m| {
        let t = g.t(m);
        let mut x = vec![0.0; g.d];
        (0..g.slice_len())
            .map(|j| {
                axes_point(&axes, j, &mut x);
                let (ts, xs, pre) = s.field_map(q, t, &x);
                interp::sample(field, ts, &xs).map(|v| v * pre)
            })
            .collect::<Vec<_>>()
    });
    let mut samples = Vec::with_capacity(g.len());
    let mut covered = Vec::with_capacity(g.len());
    for sl in slices {
        for v in sl {
            covered.push(v.is_some());
            samples.push(v.unwrap_or_default());
        }
    }
    let coverage = covered.iter().filter(|c| **c).count() as f64 / covered.len() as f64;
    if coverage < MIN_COVERAGE {
        return Err(Error::Coverage { coverage, required: MIN_COVERAGE });
    }
    let mut out = SpacetimeField::new(g.clone(), samples)?;
    if coverage < 1.0 {
        out.warnings.push(format!("coverage {coverage:.4}"));
    }
    Ok(TransformedField { field: out, coverage, covered })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntertwiningMethod {
    /// Evaluate `E_shift f` exactly at the mapped points.
    Direct,
    /// Interpolate a precomputed field.
    Interpolated,
}

/// Relative `L^q` discrepancy between `T(E_shift f)` and `E_(new shift)(action f)` on `stg`.
pub fn verify_intertwining(
    s: &Symmetry,
    f: &FrequencyProfile,
    shift: &ParaboloidShift,
    e: &Exponents,
    stg: &SpacetimeGrid,
) -> Result<f64> {
    verify_intertwining_with(s, f, shift, e, stg, IntertwiningMethod::Direct)
}

pub fn verify_intertwining_with(
    s: &Symmetry,
    f: &FrequencyProfile,
    shift: &ParaboloidShift,
    e: &Exponents,
    stg: &SpacetimeGrid,
    method: IntertwiningMethod,
) -> Result<f64> {
    s.validate()?;
    let push = pushthrough_shift(s, shift, e.p);
    let g = push.frequency_action.apply(f)?;
    let rhs = Extender::new(&[Term::unit(&g, &push.new_shift)])?;
    let axes = spacetime_axes(stg);
    let q = e.q;
    let sums: Vec<(f64, f64)> = match method {
        IntertwiningMethod::Direct => {
            let lhs = Extender::new(&[Term::unit(f, shift)])?;
            par::map_indexed(stg.t_points, |m| {
                let t = stg.t(m);
                let r = rhs.slice(t, &axes).values;
                let (ts, x0s, _) = s.field_map(q, t, &vec![stg.x(0); stg.d]);
                let mapped: Vec<Axis> =
                    (0..stg.d).map(|a| Axis::new(x0s[a], stg.dx() / s.lambda, stg.x_points_per_axis)).collect();
                let l = lhs.slice(ts, &mapped).values;
                let mut x = vec![0.0; stg.d];
                let mut diff = Vec::with_capacity(r.len());
                let mut base = Vec::with_capacity(r.len());
                for j in 0..r.len() {
                    axes_point(&axes, j, &mut x);
                    let (_, _, pre) = s.field_map(q, t, &x);
                    diff.push((l[j] * pre - r[j]).norm().powf(q));
                    base.push(r[j].norm().powf(q));
                }
                (pairwise_sum(&diff), pairwise_sum(&base))
            })
        }
        IntertwiningMethod::Interpolated => {
            let field = extend(f, shift, stg)?;
            let tf = apply_symmetry_field(s, &field, q)?;
            let n = stg.slice_len();
            par::map_indexed(stg.t_points, |m| {
                let r = rhs.slice(stg.t(m), &axes).values;
                let mut diff = Vec::new();
                let mut base = Vec::new();
                for j in 0..n {
                    if tf.covered[m * n + j] {
                        diff.push((tf.field.samples[m * n + j] - r[j]).norm().powf(q));
                        base.push(r[j].norm().powf(q));
                    }
                }
                (pairwise_sum(&diff), pairwise_sum(&base))
            })
        }
    };
    let diff = pairwise_sum(&sums.iter().map(|s| s.0).collect::<Vec<_>>());
    let base = pairwise_sum(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
    if base == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((diff / base).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::gaussian_profile;
    use crate::norms::lq_norm_spacetime;
    use proptest::prelude::*;

    fn gauss() -> FrequencyProfile {
        gaussian_profile(&FrequencyGrid::new(1, 10.0, 512).unwrap(), &[0.0], 1.0, &[0.0]).unwrap()
    }

    fn pointwise(s: &Symmetry, f: &FrequencyProfile, xi: f64) -> Complex64 {
        // direct evaluation of the canonical formula for the Gaussian e^{-xi^2}
        let z = s.lambda * xi - s.xi_tilde[0];
        s.lambda.powf(0.5) * cis(s.phase + s.t0 * z * z + s.x0[0] * z) * (-z * z).exp() + f.samples[0] * 0.0
    }

    #[test]
    fn frequency_action_examples() {
        let f = gauss();
        assert_eq!(apply_symmetry_frequency(&Symmetry::identity(1), &f, 2.0).unwrap().samples, f.samples);
        let s = Symmetry::scaling(1, 2.0);
        let sf = apply_symmetry_frequency(&s, &f, 2.0).unwrap();
        assert!((sf.lp_norm(2.0) - f.lp_norm(2.0)).abs() < 1e-8);
        let s = Symmetry::new(1.0, vec![0.0], 1.3, vec![-0.4]).unwrap();
        let sf = apply_symmetry_frequency(&s, &f, 2.0).unwrap();
        for (a, b) in sf.samples.iter().zip(&f.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn frequency_action_matches_formula() {
        let f = gauss();
        let s = Symmetry::new(0.7, vec![1.1], 0.3, vec![-0.5]).unwrap();
        let sf = apply_symmetry_frequency(&s, &f, 2.0).unwrap();
        for k in (0..512).step_by(17) {
            let xi = sf.grid.axis_coord(0, k);
            assert!((sf.samples[k] - pointwise(&s, &f, xi)).norm() < 1e-12);
        }
    }

    #[test]
    fn composition_and_inverse_act_consistently() {
        let f = gaussian_profile(&FrequencyGrid::new(1, 10.0, 256).unwrap(), &[0.3], 1.2, &[0.4]).unwrap();
        let a = Symmetry::new(1.5, vec![0.7], -0.4, vec![1.1]).unwrap();
        let b = Symmetry::new(0.6, vec![-1.2], 0.9, vec![0.3]).unwrap();
        let two = apply_symmetry_frequency(&a, &apply_symmetry_frequency(&b, &f, 2.0).unwrap(), 2.0).unwrap();
        let one = apply_symmetry_frequency(&a.compose(&b), &f, 2.0).unwrap();
        assert!(two.grid.compatible(&one.grid));
        for (x, y) in two.samples.iter().zip(&one.samples) {
            assert!((x - y).norm() < 1e-12);
        }
        let id = apply_symmetry_frequency(&a.inverse(), &apply_symmetry_frequency(&a, &f, 2.0).unwrap(), 2.0).unwrap();
        assert!(id.grid.compatible(&f.grid));
        for (x, y) in id.samples.iter().zip(&f.samples) {
            assert!((x - y).norm() < 1e-12);
        }
        let c = a.compose(&a.inverse());
        assert!((c.lambda - 1.0).abs() < 1e-14 && c.t0.abs() < 1e-14 && c.x0[0].abs() < 1e-14 && c.phase.abs() < 1e-14);
    }

    #[test]
    fn pushthrough_examples() {
        let s = ParaboloidShift::new(0.4, vec![-1.0]);
        assert_eq!(pushthrough_shift(&Symmetry::identity(1), &s, 2.0).new_shift, s);
        let r = pushthrough_shift(&Symmetry::scaling(1, 2.0), &ParaboloidShift::new(1.0, vec![0.0]), 2.0);
        assert_eq!(r.new_shift, ParaboloidShift::new(0.25, vec![0.0]));
        let t = Symmetry::new(1.0, vec![3.0], 0.0, vec![0.0]).unwrap();
        let r = pushthrough_shift(&t, &ParaboloidShift::new(1.0, vec![2.0]), 2.0);
        assert_eq!(r.new_shift, ParaboloidShift::new(13.0, vec![2.0]));
    }

    #[test]
    fn intertwining_examples() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = gauss();
        let stg = SpacetimeGrid::new(1, 10.0, 20.0, 128, 256).unwrap();
        let zero = ParaboloidShift::zero(1);
        assert!(verify_intertwining(&Symmetry::identity(1), &f, &zero, &e, &stg).unwrap() < 1e-12);
        assert!(verify_intertwining(&Symmetry::scaling(1, 2.0), &f, &zero, &e, &stg).unwrap() < 1e-5);
        let s = Symmetry::new(2.0, vec![1.0], 0.3, vec![0.7]).unwrap();
        let shift = ParaboloidShift::new(1.0, vec![1.0]);
        assert!(verify_intertwining(&s, &f, &shift, &e, &stg).unwrap() < 1e-4);
        let mild = Symmetry::new(1.1, vec![0.1], 0.2, vec![0.3]).unwrap();
        let fine = SpacetimeGrid::new(1, 4.0, 8.0, 256, 512).unwrap();
        let d = verify_intertwining_with(&mild, &f, &shift, &e, &fine, IntertwiningMethod::Interpolated).unwrap();
        assert!(d < 1e-3, "{d}");
    }

    #[test]
    fn field_action_identity_scaling_composition() {
        let f = gauss();
        let zero = ParaboloidShift::zero(1);
        let stg = SpacetimeGrid::new(1, 8.0, 16.0, 256, 256).unwrap();
        let field = extend(&f, &zero, &stg).unwrap();
        let id = apply_symmetry_field(&Symmetry::identity(1), &field, 6.0).unwrap();
        assert_eq!(id.coverage, 1.0);
        for (a, b) in id.field.samples.iter().zip(&field.samples) {
            assert!((a - b).norm() < 1e-13);
        }
        // pure scaling lambda = 2 reads F on the box (T/4, X/2): compare with that sub-box
        let tf = apply_symmetry_field(&Symmetry::scaling(1, 2.0), &field, 6.0).unwrap();
        assert!(tf.coverage > 0.99);
        let tails = [(crate::norms::TailProfile::new(&f, &zero).unwrap(), 1.0)];
        let lhs = lq_norm_spacetime(&tf.field, &tails, 6.0).unwrap().value;
        let sub = SpacetimeGrid::new(1, 2.0, 8.0, 64, 128).unwrap();
        let rhs = lq_norm_spacetime(&extend(&f, &zero, &sub).unwrap(), &tails, 6.0).unwrap().value;
        assert!((lhs - rhs).abs() / rhs < 1e-4, "{lhs} {rhs}");
        let a = Symmetry::new(1.2, vec![0.1], 0.3, vec![-0.2]).unwrap();
        let b = Symmetry::new(0.9, vec![-0.2], -0.1, vec![0.4]).unwrap();
        let fine = SpacetimeGrid::new(1, 4.0, 8.0, 256, 512).unwrap();
        let field = extend(&f, &zero, &fine).unwrap();
        let two = apply_symmetry_field(&a, &apply_symmetry_field(&b, &field, 6.0).unwrap().field, 6.0).unwrap();
        let one = apply_symmetry_field(&a.compose(&b), &field, 6.0).unwrap();
        let peak = field.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for m in 0..fine.t_points {
            for j in 0..fine.x_points_per_axis {
                // stay where the intermediate field was itself covered
                if fine.t(m).abs() < 2.0 && fine.x(j).abs() < 4.0 {
                    let i = m * fine.x_points_per_axis + j;
                    worst = worst.max((one.field.samples[i] - two.field.samples[i]).norm());
                }
            }
        }
        assert!(worst / peak < 1e-4, "{worst}");
    }

    #[test]
    fn coverage_refusal() {
        let f = gauss();
        let stg = SpacetimeGrid::new(1, 4.0, 8.0, 32, 64).unwrap();
        let field = extend(&f, &ParaboloidShift::zero(1), &stg).unwrap();
        let far = Symmetry::new(1.0, vec![0.0], 100.0, vec![0.0]).unwrap();
        assert!(matches!(apply_symmetry_field(&far, &field, 6.0), Err(Error::Coverage { .. })));
        assert!(matches!(
            verify_intertwining_with(
                &far,
                &f,
                &ParaboloidShift::zero(1),
                &Exponents::new(1, 2.0).unwrap(),
                &stg,
                IntertwiningMethod::Interpolated
            ),
            Err(Error::Coverage { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn group_isometry(ll in -3.0f64..3.0, xt in -4.0f64..4.0, t0 in -4.0f64..4.0, x0 in -4.0f64..4.0) {
            let f = gaussian_profile(&FrequencyGrid::new(1, 10.0, 256).unwrap(), &[0.0], 1.0, &[0.0]).unwrap();
            let s = Symmetry::new(2f64.powf(ll), vec![xt], t0, vec![x0]).unwrap();
            let sf = apply_symmetry_frequency(&s, &f, 2.0).unwrap();
            prop_assert!((sf.lp_norm(2.0) - f.lp_norm(2.0)).abs() / f.lp_norm(2.0) < 1e-8);
        }

        #[test]
        fn pushthrough_literal(ll in -3.0f64..3.0, xt in -4.0f64..4.0, tau in -3.0f64..3.0, xi in -3.0f64..3.0) {
            let l = 2f64.powf(ll);
            let s = Symmetry::new(l, vec![xt], 0.0, vec![0.0]).unwrap();
            let r = pushthrough_shift(&s, &ParaboloidShift::new(tau, vec![xi]), 2.0).new_shift;
            prop_assert_eq!(r.tau0, (tau + 2.0 * xi * xt) / (l * l));
            prop_assert_eq!(r.xi0[0], xi / l);
        }

        #[test]
        fn pushthrough_composes(a in -2i32..3, b in -2i32..3, x1 in -4i32..4, x2 in -4i32..4, tau in -3i32..3, xi in -3i32..3) {
            // dyadic parameters keep every operation exact
            let s1 = Symmetry::new(2f64.powi(a), vec![x1 as f64 / 2.0], 0.5, vec![0.25]).unwrap();
            let s2 = Symmetry::new(2f64.powi(b), vec![x2 as f64 / 4.0], -0.5, vec![1.0]).unwrap();
            let shift = ParaboloidShift::new(tau as f64, vec![xi as f64]);
            let direct = pushthrough_shift(&s1.compose(&s2), &shift, 2.0).new_shift;
            let stepwise = pushthrough_shift(&s1, &pushthrough_shift(&s2, &shift, 2.0).new_shift, 2.0).new_shift;
            prop_assert_eq!(direct, stepwise);
        }
    }
}
