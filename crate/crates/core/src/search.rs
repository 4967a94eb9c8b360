//! Projected gradient ascent on the pair quotient, and moment fitting of
//! symmetry parameters.
//!
//! The iterate is stored as a canonical pair `(f_c, g_c)` of roughly unit
//! width on a fixed grid together with a scale `Lambda`; the physical pair is
//! the dilate `(f_c, g_c)_Lambda`. Since `Q(f_Lambda, g_Lambda; (tau0, xi0))`
//! equals `Q(f, g; (Lambda^2 tau0, Lambda xi0))`, the ascent runs on the
//! canonical pair against the effective shift. The objective is evaluated
//! over all of spacetime in compactified coordinates. When the canonical
//! width drifts, the pair is resampled back to unit width and the drift is
//! absorbed into `Lambda`. The run stops once the physical width leaves what
//! the caller's frequency grid can represent.

use crate::compact::{
    dilate_onto, lens_integral, lens_integral_and_gradient, plan_paths, rms_radius, LensGrid, PathPlan,
};
use crate::czt::{apply_separable, Axis, UniformDft};
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::extension::{ParaboloidShift, Term};
use crate::grids::{dilate_profile, FrequencyGrid, FrequencyProfile, SpacetimeGrid};
use crate::norms::{quotient_pair, QuotientResult};
use crate::par::pairwise_sum;
use crate::symmetry::Symmetry;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Support threshold for path planning. Resampled iterates carry roundoff near
/// `1e-13` of the peak across the whole window.
const PLAN_SUPPORT_EPS: f64 = 1e-6;
const CHOP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchOptions {
    pub max_steps: usize,
    /// Stop when an accepted step gains less than this relative amount.
    pub step_tolerance: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
    pub canonical_half_width: f64,
    pub canonical_points: usize,
    pub lens_s_points: usize,
    pub lens_y_half_width: f64,
    pub lens_y_points: usize,
    /// Ascent directions are `A B A` applied to the gradient, with `A` a
    /// Gaussian weight of this width in frequency and `B` a Gaussian filter
    /// of width `direction_smoothing` in the dual variable. The raw gradient
    /// of the discretized objective carries slowly decaying and grid-scale
    /// components that no evaluation path resolves.
    pub direction_envelope: f64,
    pub direction_smoothing: f64,
    /// Widest resolvable physical RMS radius, as a fraction of the caller's half width.
    pub max_radius_fraction: f64,
    /// Narrowest resolvable physical RMS radius, in cells of the caller's grid.
    pub min_radius_cells: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_steps: 200,
            step_tolerance: 1e-10,
            armijo: 1e-4,
            max_backtracks: 30,
            canonical_half_width: 16.0,
            canonical_points: 512,
            lens_s_points: 512,
            lens_y_half_width: 8.0,
            lens_y_points: 256,
            direction_envelope: 2.0,
            direction_smoothing: 3.0,
            max_radius_fraction: 0.25,
            min_radius_cells: 4.0,
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.step_tolerance >= 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.max_radius_fraction > 0.0
            && self.min_radius_cells > 0.0
            && self.direction_envelope > 0.0
            && self.direction_smoothing > 0.0;
        if !ok {
            return Err(Error::InvalidParameter("search tolerances out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StepTolerance,
    MaxSteps,
    GridExhausted,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::StepTolerance => "step_tolerance",
            Termination::MaxSteps => "max_steps",
            Termination::GridExhausted => "grid_exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub step: usize,
    pub quotient: f64,
    /// Fitted symmetry of the physical `f` iterate.
    pub symmetry: Symmetry,
    pub norm_f: f64,
    pub norm_g: f64,
    /// Physical RMS radius of the pair.
    pub radius: f64,
    pub scale: f64,
    pub reframed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTrajectory {
    pub iterates: Vec<Iterate>,
    pub terminated_reason: Termination,
    /// Quotient of the last iterate on grids of the caller's shape, with
    /// certified error.
    pub final_quotient: QuotientResult,
    pub effective_shift: ParaboloidShift,
    /// `‖f - g‖_2 / ‖f + g‖_2` at the last iterate.
    pub imbalance: f64,
    pub warnings: Vec<String>,
    /// Last physical iterate, on a dilate of a grid of the caller's shape.
    #[serde(skip)]
    pub final_pair: Option<(FrequencyProfile, FrequencyProfile)>,
}

impl SearchTrajectory {
    pub fn best_quotient(&self) -> f64 {
        self.iterates.iter().map(|i| i.quotient).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_ascending(&self, tol: f64) -> bool {
        self.iterates.windows(2).all(|w| w[1].quotient >= w[0].quotient - tol)
    }
}

fn inner(a: &[Complex64], b: &[Complex64], vol: f64) -> Complex64 {
    let re: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).collect();
    let im: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x.conj() * y).im).collect();
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) * vol
}

fn remove_radial(v: &[Complex64], u: &[Complex64], vol: f64) -> Vec<Complex64> {
    let r = inner(u, v, vol).re;
    v.iter().zip(u).map(|(a, b)| a - b * r).collect()
}

fn pair_norm(f: &FrequencyProfile, g: &FrequencyProfile) -> f64 {
    let vol = f.grid.cell_volume();
    (inner(&f.samples, &f.samples, vol).re + inner(&g.samples, &g.samples, vol).re).sqrt()
}

fn normalized(f: &FrequencyProfile, g: &FrequencyProfile) -> (FrequencyProfile, FrequencyProfile) {
    let s = Complex64::new(1.0 / pair_norm(f, g), 0.0);
    (f.scaled(s), g.scaled(s))
}

/// Zero samples below `CHOP` times the peak; removes resampling roundoff
/// that would otherwise count as support.
fn chop(f: FrequencyProfile) -> FrequencyProfile {
    let peak = f.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let samples =
        f.samples.iter().map(|z| if z.norm() < CHOP * peak { Complex64::new(0.0, 0.0) } else { *z }).collect();
    FrequencyProfile { samples, ..f }
}

fn effective_shift(shift: &ParaboloidShift, scale: f64) -> ParaboloidShift {
    ParaboloidShift::new(scale * scale * shift.tau0, shift.xi0.iter().map(|v| scale * v).collect())
}

struct Frame<'a> {
    e: &'a Exponents,
    lens: LensGrid,
    shift: ParaboloidShift,
}

impl Frame<'_> {
    fn terms<'b>(
        &'b self,
        f: &'b FrequencyProfile,
        g: &'b FrequencyProfile,
        zero: &'b ParaboloidShift,
    ) -> [Term<'b>; 2] {
        [Term::unit(f, zero), Term::unit(g, &self.shift)]
    }

    fn plan(&self, f: &FrequencyProfile, g: &FrequencyProfile) -> Result<PathPlan> {
        let zero = ParaboloidShift::zero(f.d());
        plan_paths(&self.terms(f, g, &zero), &self.lens, PLAN_SUPPORT_EPS)
    }

    fn quotient(&self, f: &FrequencyProfile, g: &FrequencyProfile, plan: &PathPlan) -> Result<f64> {
        let zero = ParaboloidShift::zero(f.d());
        let j = lens_integral(&self.terms(f, g, &zero), &self.lens, self.e.q, plan)?;
        Ok(j.powf(1.0 / self.e.q) / pair_norm(f, g))
    }

    /// `J` and its `L^2` gradients.
    fn objective(
        &self,
        f: &FrequencyProfile,
        g: &FrequencyProfile,
        plan: &PathPlan,
    ) -> Result<(f64, Vec<Vec<Complex64>>)> {
        let zero = ParaboloidShift::zero(f.d());
        lens_integral_and_gradient(&self.terms(f, g, &zero), &self.lens, self.e.q, plan)
    }
}

/// Symmetric positive semidefinite `A B A`; see [`SearchOptions::direction_envelope`].
struct Preconditioner {
    weight: Vec<f64>,
    filter: Vec<f64>,
    forward: Vec<UniformDft>,
    backward: Vec<UniformDft>,
}

impl Preconditioner {
    fn new(grid: &FrequencyGrid, envelope: f64, smoothing: f64) -> Self {
        let d = grid.d;
        let n = grid.points_per_axis;
        let weight = (0..grid.len())
            .map(|k| (-grid.point(k).iter().map(|v| v * v).sum::<f64>() / (2.0 * envelope * envelope)).exp())
            .collect();
        let xi = Axis::new(0.0, grid.spacing, n);
        let y = Axis::new(-PI / grid.spacing, 2.0 * PI / (n as f64 * grid.spacing), n);
        let mut filter = vec![1.0; grid.len()];
        for (k, w) in filter.iter_mut().enumerate() {
            let mut rest = k;
            for _ in 0..d {
                *w *= (-(y.coord(rest % n) / smoothing).powi(2)).exp();
                rest /= n;
            }
            *w /= (n as f64).powi(d as i32);
        }
        Self {
            weight,
            filter,
            forward: (0..d).map(|_| UniformDft::new(xi, y, 1.0)).collect(),
            backward: (0..d).map(|_| UniformDft::new(y, xi, -1.0)).collect(),
        }
    }

    /// Apply to the stacked pair `(f, g)`.
    fn apply_pair(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (a, b) = v.split_at(v.len() / 2);
        let mut out = self.apply(a);
        out.extend(self.apply(b));
        out
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let a: Vec<Complex64> = v.iter().zip(&self.weight).map(|(z, w)| z * w).collect();
        let refs: Vec<&UniformDft> = self.forward.iter().collect();
        let mut dual = apply_separable(&refs, &a);
        dual.iter_mut().zip(&self.filter).for_each(|(z, w)| *z *= w);
        let refs: Vec<&UniformDft> = self.backward.iter().collect();
        apply_separable(&refs, &dual).iter().zip(&self.weight).map(|(z, w)| z * w).collect()
    }
}

fn check_start(f0: &FrequencyProfile, g0: &FrequencyProfile, e: &Exponents) -> Result<()> {
    if !e.is_l2() {
        return Err(Error::InvalidExponent(format!("the search needs p = 2, got p = {}", e.p)));
    }
    if !f0.grid.compatible(&g0.grid) {
        return Err(Error::GridMismatch("f0 and g0 must share a frequency grid".into()));
    }
    if f0.is_zero() && g0.is_zero() {
        return Err(Error::Degenerate("zero initial pair".into()));
    }
    Ok(())
}

fn canonical_radius(e: &Exponents) -> f64 {
    (e.d as f64 / (2.0 * e.p)).sqrt()
}

/// Resample a physical pair onto the canonical grid. Returns the pair and its scale.
fn to_canonical(
    f0: &FrequencyProfile,
    g0: &FrequencyProfile,
    e: &Exponents,
    grid: &FrequencyGrid,
) -> Result<(FrequencyProfile, FrequencyProfile, f64)> {
    let scale = canonical_radius(e) / rms_radius(&[f0, g0]);
    let f = chop(dilate_onto(f0, 1.0 / scale, grid, e.p)?);
    let g = chop(dilate_onto(g0, 1.0 / scale, grid, e.p)?);
    let (f, g) = normalized(&f, &g);
    Ok((f, g, scale))
}

fn make_iterate(
    step: usize,
    quotient: f64,
    f: &FrequencyProfile,
    g: &FrequencyProfile,
    scale: f64,
    reframed: bool,
    e: &Exponents,
) -> Iterate {
    let symmetry = fit_symmetry(f, e.p)
        .map(|s| Symmetry::scaling(e.d, scale).compose(&s))
        .unwrap_or_else(|_| Symmetry::scaling(e.d, scale));
    Iterate {
        step,
        quotient,
        symmetry,
        norm_f: f.lp_norm(e.p),
        norm_g: g.lp_norm(e.p),
        radius: rms_radius(&[f, g]) / scale,
        scale,
        reframed,
    }
}

/// Maximize `‖E f + E_shift g‖_q / (‖f‖_2^2 + ‖g‖_2^2)^{1/2}` from `(f0, g0)`.
/// The last iterate is re-evaluated on `stg` with certified error.
pub fn maximize_quotient_pair(
    f0: &FrequencyProfile,
    g0: &FrequencyProfile,
    shift: &ParaboloidShift,
    e: &Exponents,
    stg: &SpacetimeGrid,
    opts: &SearchOptions,
) -> Result<SearchTrajectory> {
    check_start(f0, g0, e)?;
    opts.validate()?;
    let d = e.d;
    let canon = FrequencyGrid::new(d, opts.canonical_half_width, opts.canonical_points)?;
    let lens = LensGrid::new(d, opts.lens_s_points, opts.lens_y_half_width, opts.lens_y_points)?;
    let r_can = canonical_radius(e);
    let user = &f0.grid;
    let (widest, narrowest) = (opts.max_radius_fraction * user.half_width, opts.min_radius_cells * user.spacing);
    let vol = canon.cell_volume();
    let precondition = Preconditioner::new(&canon, opts.direction_envelope, opts.direction_smoothing);
    let mut warnings = Vec::new();

    let (mut f, mut g, mut scale) = to_canonical(f0, g0, e, &canon)?;
    let mut frame = Frame { e, lens, shift: effective_shift(shift, scale) };
    let mut plan = frame.plan(&f, &g)?;
    let mut unresolved = plan.unresolved;
    let mut q = frame.quotient(&f, &g, &plan)?;
    let mut iterates = vec![make_iterate(0, q, &f, &g, scale, false, e)];

    let mut previous: Option<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> = None;
    let mut last_alpha: f64 = 0.5;
    let reason = loop {
        let step = iterates.len();
        let radius = rms_radius(&[&f, &g]) / scale;
        if radius > widest || radius < narrowest {
            break Termination::GridExhausted;
        }
        if step > opts.max_steps {
            break Termination::MaxSteps;
        }
        let (j, grads) = frame.objective(&f, &g, &plan)?;
        // tangent part of the gradient on the unit sphere
        let u: Vec<Complex64> = f.samples.iter().chain(&g.samples).copied().collect();
        let grad: Vec<Complex64> = grads[0].iter().chain(&grads[1]).copied().collect();
        let tangent = remove_radial(&grad, &u, vol);
        let pt = precondition.apply_pair(&tangent);
        let mut dir = pt.clone();
        // Polak-Ribiere with restarts; the previous direction is moved to the
        // current tangent space by dropping its radial part
        if let Some((t0, p0, d0)) = &previous {
            let beta = (inner(&tangent, &pt, vol).re - inner(&tangent, p0, vol).re) / inner(t0, p0, vol).re;
            if beta > 0.0 {
                let carried = remove_radial(d0, &u, vol);
                dir.iter_mut().zip(&carried).for_each(|(a, b)| *a += b * beta);
            }
        }
        if inner(&tangent, &dir, vol).re <= 0.0 {
            dir = pt.clone();
        }
        let dnorm = inner(&dir, &dir, vol).re.sqrt();
        let along = inner(&tangent, &dir, vol).re;
        if !(dnorm > 0.0 && along > 0.0) {
            break Termination::StepTolerance;
        }
        let slope = j.powf(1.0 / e.q - 1.0) / e.q * along / dnorm;
        let half = canon.len();
        let df = FrequencyProfile::new(canon.clone(), dir[..half].to_vec(), "direction")?;
        let dg = FrequencyProfile::new(canon.clone(), dir[half..].to_vec(), "direction")?;
        previous = Some((tangent, pt, dir));
        let one = Complex64::new(1.0, 0.0);
        let mut alpha = (2.0 * last_alpha).min(1.0);
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let c = Complex64::new(alpha / dnorm, 0.0);
            let (nf, ng) = normalized(&f.combine(one, &df, c)?, &g.combine(one, &dg, c)?);
            let trial = frame.quotient(&nf, &ng, &plan)?;
            if trial >= q + opts.armijo * alpha * slope {
                let own = frame.plan(&nf, &ng)?;
                let fresh = frame.quotient(&nf, &ng, &own)?;
                if fresh >= q - 1e-12 {
                    accepted = Some((nf, ng, own, fresh));
                    break;
                }
            }
            alpha /= 2.0;
        }
        let Some((nf, ng, own, fresh)) = accepted else {
            break Termination::StepTolerance;
        };
        last_alpha = alpha;
        let gain = (fresh - q) / q;
        f = nf;
        g = ng;
        plan = own;
        q = fresh;
        let mut reframed = false;
        let mu = r_can / rms_radius(&[&f, &g]);
        if !(0.8..=1.25).contains(&mu) {
            let rf = chop(dilate_onto(&f, 1.0 / mu, &canon, e.p)?);
            let rg = chop(dilate_onto(&g, 1.0 / mu, &canon, e.p)?);
            (f, g) = normalized(&rf, &rg);
            scale *= mu;
            frame.shift = effective_shift(shift, scale);
            plan = frame.plan(&f, &g)?;
            q = frame.quotient(&f, &g, &plan)?;
            previous = None;
            reframed = true;
        }
        unresolved = unresolved.max(plan.unresolved);
        iterates.push(make_iterate(step, q, &f, &g, scale, reframed, e));
        if gain <= opts.step_tolerance {
            break Termination::StepTolerance;
        }
    };
    if unresolved > 0 {
        warnings
            .push(format!("{unresolved} compactified slices needed a support cut looser than {PLAN_SUPPORT_EPS:e}"));
    }
    // by scaling invariance the canonical pair against the effective shift has
    // the same quotient as the physical pair
    let shaped = FrequencyGrid::new(d, user.half_width, user.points_per_axis)?;
    let cf = chop(dilate_onto(&f, 1.0, &shaped, e.p)?);
    let cg = chop(dilate_onto(&g, 1.0, &shaped, e.p)?);
    let final_quotient = quotient_pair(&cf, &cg, &frame.shift, e, stg)?;
    let diff = f.combine(Complex64::new(1.0, 0.0), &g, Complex64::new(-1.0, 0.0))?;
    let sum = f.combine(Complex64::new(1.0, 0.0), &g, Complex64::new(1.0, 0.0))?;
    let imbalance = diff.lp_norm(2.0) / sum.lp_norm(2.0);
    Ok(SearchTrajectory {
        iterates,
        terminated_reason: reason,
        final_quotient,
        effective_shift: frame.shift.clone(),
        imbalance,
        warnings,
        final_pair: Some((dilate_profile(&cf, scale, e.p)?, dilate_profile(&cg, scale, e.p)?)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckRow {
    pub direction: usize,
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

/// Directional derivatives of the search objective at the canonical start
/// point: adjoint gradient against central differences of step `h`, along
/// random directions supported where the pair lives.
pub fn gradient_check(
    f0: &FrequencyProfile,
    g0: &FrequencyProfile,
    shift: &ParaboloidShift,
    e: &Exponents,
    opts: &SearchOptions,
    directions: usize,
    h: f64,
    seed: u64,
) -> Result<Vec<GradientCheckRow>> {
    check_start(f0, g0, e)?;
    let canon = FrequencyGrid::new(e.d, opts.canonical_half_width, opts.canonical_points)?;
    let lens = LensGrid::new(e.d, opts.lens_s_points, opts.lens_y_half_width, opts.lens_y_points)?;
    let (f, g, scale) = to_canonical(f0, g0, e, &canon)?;
    let frame = Frame { e, lens, shift: effective_shift(shift, scale) };
    let plan = frame.plan(&f, &g)?;
    let vol = canon.cell_volume();
    let (j, grads) = frame.objective(&f, &g, &plan)?;
    let q = j.powf(1.0 / e.q);
    let envelope: Vec<f64> =
        (0..canon.len()).map(|k| (f.samples[k].norm_sqr() + g.samples[k].norm_sqr()).sqrt().max(0.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Complex64::new(1.0, 0.0);
    (0..directions)
        .map(|i| {
            let mut draw = || -> Vec<Complex64> {
                envelope
                    .iter()
                    .map(|w| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * *w)
                    .collect()
            };
            let (vf, vg) = (draw(), draw());
            // the pair is normalized, so dQ = J^{1/q - 1} dJ / q - Q Re<u, v>
            let dj = inner(&grads[0], &vf, vol).re + inner(&grads[1], &vg, vol).re;
            let du = inner(&f.samples, &vf, vol).re + inner(&g.samples, &vg, vol).re;
            let analytic = j.powf(1.0 / e.q - 1.0) / e.q * dj - q * du;
            let df = FrequencyProfile::new(canon.clone(), vf, "direction")?;
            let dg = FrequencyProfile::new(canon.clone(), vg, "direction")?;
            let at = |c: f64| -> Result<f64> {
                let c = Complex64::new(c, 0.0);
                frame.quotient(&f.combine(one, &df, c)?, &g.combine(one, &dg, c)?, &plan)
            };
            let finite_difference = (at(h)? - at(-h)?) / (2.0 * h);
            let relative_error = (analytic - finite_difference).abs() / finite_difference.abs().max(analytic.abs());
            Ok(GradientCheckRow { direction: i, analytic, finite_difference, relative_error })
        })
        .collect()
}

/// Moment estimate of the symmetry `S` with `f ≈ c S G`, where `G` is the
/// centered unit-width Gaussian: `lambda` from the RMS radius of `|f|^p`,
/// `xi~` from its centroid, and `(t0, x0)` from a weighted linear fit of the
/// local phase gradient. The constant phase is the phase of `<S G, f>`.
pub fn fit_symmetry(f: &FrequencyProfile, p: f64) -> Result<Symmetry> {
    let grid = &f.grid;
    let d = grid.d;
    let n = grid.points_per_axis;
    let len = grid.len();
    let w: Vec<f64> = f.samples.iter().map(|z| z.norm().powf(p)).collect();
    let mass = pairwise_sum(&w);
    if !(mass > 0.0) {
        return Err(Error::Degenerate("zero profile".into()));
    }
    let mut pts = vec![vec![0.0; d]; len];
    for (k, pt) in pts.iter_mut().enumerate() {
        grid.point_into(k, pt);
    }
    let moment = |h: &dyn Fn(&[f64]) -> f64| -> f64 {
        let v: Vec<f64> = pts.iter().zip(&w).map(|(x, wk)| wk * h(x)).collect();
        pairwise_sum(&v) / mass
    };
    let centroid: Vec<f64> = (0..d).map(|a| moment(&|x: &[f64]| x[a])).collect();
    let var = moment(&|x: &[f64]| x.iter().zip(&centroid).map(|(a, c)| (a - c).powi(2)).sum());
    if !(var > 1e-6 * grid.spacing * grid.spacing) {
        return Err(Error::Degenerate("profile mass sits on a single node".into()));
    }
    let lambda = (d as f64 / (2.0 * p)).sqrt() / var.sqrt();
    let xi_tilde: Vec<f64> = centroid.iter().map(|c| lambda * c).collect();

    // phase gradient samples G_a = lambda x0_a + 2 lambda t0 zeta_a, zeta = lambda xi - xi~
    let mut rows = Vec::new();
    for a in 0..d {
        let stride = n.pow((d - 1 - a) as u32);
        for k in 0..len {
            let i = (k / stride) % n;
            if i == 0 || i + 1 == n {
                continue;
            }
            let wk = (w[k + stride] * w[k - stride]).sqrt();
            if wk == 0.0 {
                continue;
            }
            let grad = (f.samples[k + stride] * f.samples[k - stride].conj()).arg() / (2.0 * grid.spacing);
            rows.push((a, wk, grad, lambda * pts[k][a] - xi_tilde[a]));
        }
    }
    let mut beta = vec![0.0; d];
    let mut cov = Vec::new();
    let mut vz = Vec::new();
    let mut means = Vec::new();
    for (a, b) in beta.iter_mut().enumerate() {
        let axis: Vec<&(usize, f64, f64, f64)> = rows.iter().filter(|r| r.0 == a).collect();
        let sw = pairwise_sum(&axis.iter().map(|r| r.1).collect::<Vec<_>>());
        if !(sw > 0.0) {
            return Err(Error::Degenerate("no phase information".into()));
        }
        let mg = pairwise_sum(&axis.iter().map(|r| r.1 * r.2).collect::<Vec<_>>()) / sw;
        let mz = pairwise_sum(&axis.iter().map(|r| r.1 * r.3).collect::<Vec<_>>()) / sw;
        cov.push(pairwise_sum(&axis.iter().map(|r| r.1 * (r.2 - mg) * (r.3 - mz)).collect::<Vec<_>>()) / sw);
        vz.push(pairwise_sum(&axis.iter().map(|r| r.1 * (r.3 - mz).powi(2)).collect::<Vec<_>>()) / sw);
        means.push((mg, mz));
        *b = mg;
    }
    let gamma = cov.iter().sum::<f64>() / vz.iter().sum::<f64>();
    for (a, b) in beta.iter_mut().enumerate() {
        *b = means[a].0 - gamma * means[a].1;
    }
    let t0 = gamma / (2.0 * lambda);
    let x0: Vec<f64> = beta.iter().map(|b| b / lambda).collect();

    let phase_terms: Vec<Complex64> = pts
        .iter()
        .zip(&f.samples)
        .map(|(x, z)| {
            let zeta: Vec<f64> = (0..d).map(|a| lambda * x[a] - xi_tilde[a]).collect();
            let phi =
                t0 * zeta.iter().map(|v| v * v).sum::<f64>() + zeta.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>();
            let gauss = (-zeta.iter().map(|v| v * v).sum::<f64>()).exp();
            z * Complex64::from_polar(gauss, -phi)
        })
        .collect();
    let re: Vec<f64> = phase_terms.iter().map(|z| z.re).collect();
    let im: Vec<f64> = phase_terms.iter().map(|z| z.im).collect();
    let phase = pairwise_sum(&im).atan2(pairwise_sum(&re));
    let mut s = Symmetry::new(lambda, xi_tilde, t0, x0)?;
    s.phase = phase;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{dilate_profile, gaussian_profile};
    use crate::symmetry::apply_symmetry_frequency;
    use proptest::prelude::*;

    fn gauss(l: f64, n: usize) -> FrequencyProfile {
        gaussian_profile(&FrequencyGrid::new(1, l, n).unwrap(), &[0.0], 1.0, &[0.0]).unwrap()
    }

    #[test]
    fn fit_of_canonical_gaussian_is_identity() {
        let s = fit_symmetry(&gauss(10.0, 2048), 2.0).unwrap();
        assert!((s.lambda - 1.0).abs() < 1e-6);
        for v in [s.xi_tilde[0], s.t0, s.x0[0], s.phase] {
            assert!(v.abs() < 1e-6, "{s:?}");
        }
    }

    #[test]
    fn fit_recovers_dilation_and_translation() {
        let f = gauss(10.0, 2048);
        let s = fit_symmetry(&dilate_profile(&f, 0.25, 2.0).unwrap(), 2.0).unwrap();
        assert!((s.lambda - 0.25).abs() < 1e-4, "{}", s.lambda);
        let moved = gaussian_profile(&f.grid, &[2.0], 1.0, &[0.0]).unwrap();
        let s = fit_symmetry(&moved, 2.0).unwrap();
        assert!((s.xi_tilde[0] - 2.0).abs() < 1e-4, "{s:?}");
        assert!((s.lambda - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fit_refuses_point_mass() {
        let grid = FrequencyGrid::new(1, 4.0, 64).unwrap();
        let mut f = FrequencyProfile::zeros(grid, "spike");
        f.samples[20] = Complex64::new(1.0, 0.0);
        assert!(matches!(fit_symmetry(&f, 2.0), Err(Error::Degenerate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn fit_inverts_the_action(ll in -1.0f64..1.0, xt in -1.0f64..1.0, t0 in -0.5f64..0.5, x0 in -1.0f64..1.0, th in -3.0f64..3.0) {
            let f = gauss(10.0, 2048);
            let mut s = Symmetry::new(2f64.powf(ll), vec![xt], t0, vec![x0]).unwrap();
            s.phase = th;
            let fit = fit_symmetry(&apply_symmetry_frequency(&s, &f, 2.0).unwrap(), 2.0).unwrap();
            prop_assert!((fit.lambda - s.lambda).abs() < 1e-3, "{fit:?} {s:?}");
            prop_assert!((fit.xi_tilde[0] - xt).abs() < 1e-3, "{fit:?} {s:?}");
            prop_assert!((fit.t0 - t0).abs() < 1e-3, "{fit:?} {s:?}");
            prop_assert!((fit.x0[0] - x0).abs() < 1e-3, "{fit:?} {s:?}");
            let dphi = (Complex64::from_polar(1.0, fit.phase - th)).arg();
            prop_assert!(dphi.abs() < 1e-3, "{fit:?} {s:?}");
        }
    }

    #[test]
    fn refuses_other_exponents() {
        let f = gauss(8.0, 256);
        let e = Exponents::new(1, 1.5).unwrap();
        let r = maximize_quotient_pair(
            &f,
            &f,
            &ParaboloidShift::zero(1),
            &e,
            &SpacetimeGrid::default_1d(),
            &SearchOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidExponent(_))));
        let z = FrequencyProfile::zeros(f.grid.clone(), "zero");
        let e = Exponents::new(1, 2.0).unwrap();
        let r = maximize_quotient_pair(
            &z,
            &z,
            &ParaboloidShift::zero(1),
            &e,
            &SpacetimeGrid::default_1d(),
            &SearchOptions::default(),
        );
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn gradient_agrees_with_differences() {
        let f = gauss(10.0, 2048);
        let g = gaussian_profile(&f.grid, &[0.3], 0.8, &[0.4]).unwrap();
        let e = Exponents::new(1, 2.0).unwrap();
        let rows =
            gradient_check(&f, &g, &ParaboloidShift::new(0.0, vec![1.0]), &e, &SearchOptions::default(), 4, 1e-5, 1)
                .unwrap();
        for r in rows {
            assert!(r.relative_error < 1e-4, "{r:?}");
        }
    }
}
