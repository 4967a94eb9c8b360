//! Evaluation of `E_(tau0, xi0) f(t, x)` on spacetime grids.
//!
//! Each time slice is an exponential sum over the frequency samples. Two
//! discretisations of the same integral are available:
//!
//! * direct: chirp the samples by `exp(i t phi(xi))` and sum against `exp(i x·xi)`;
//! * far: go to the dual variable `y` first and use
//!   `E h(t, x) = (i pi / t)^{d/2} e^{-i|x|^2/4t} ∫ ȟ(y) e^{-i|y|^2/4t} e^{i y·x/2t} dy`,
//!   which stays resolved as `|t|` grows.
//!
//! The direct sum is periodic in `x` with period `2 pi / dxi`, the far sum is
//! periodic in `x / 2t` with period `2 L`. Each slice uses whichever sum does
//! not see its own periodic images inside the requested window.

use crate::czt::{apply_separable, Axis, UniformDft};
use crate::error::{Error, Result};
use crate::grids::{FrequencyGrid, FrequencyProfile, SpacetimeField, SpacetimeGrid};
use crate::par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

pub const SUPPORT_EPS: f64 = 1e-13;
/// Looser support levels tried, in order, when no sum is clean at the base level.
const FALLBACK_EPS: [f64; 5] = [1e-10, 1e-8, 1e-6, 1e-4, 1e-2];

fn cis(a: f64) -> Complex64 {
    Complex64::new(a.cos(), a.sin())
}

/// Vertex `(tau0, xi0)` of the paraboloid `tau = |xi - xi0|^2 + tau0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaboloidShift {
    pub tau0: f64,
    pub xi0: Vec<f64>,
}

impl ParaboloidShift {
    pub fn new(tau0: f64, xi0: Vec<f64>) -> Self {
        Self { tau0, xi0 }
    }

    pub fn zero(d: usize) -> Self {
        Self { tau0: 0.0, xi0: vec![0.0; d] }
    }

    pub fn d(&self) -> usize {
        self.xi0.len()
    }

    pub fn is_nonzero(&self) -> bool {
        self.tau0.abs() + self.xi0.iter().map(|v| v * v).sum::<f64>().sqrt() > 0.0
    }

    /// `|xi - xi0|^2 + tau0`.
    pub fn height(&self, xi: &[f64]) -> f64 {
        self.tau0 + xi.iter().zip(&self.xi0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    pub fn xi0_norm(&self) -> f64 {
        self.xi0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One term `coeff * E_shift f` of a linear combination.
#[derive(Clone, Debug)]
pub struct Term<'a> {
    pub profile: &'a FrequencyProfile,
    pub shift: ParaboloidShift,
    pub coeff: Complex64,
}

impl<'a> Term<'a> {
    pub fn new(profile: &'a FrequencyProfile, shift: &ParaboloidShift, coeff: Complex64) -> Self {
        Self { profile, shift: shift.clone(), coeff }
    }

    pub fn unit(profile: &'a FrequencyProfile, shift: &ParaboloidShift) -> Self {
        Self::new(profile, shift, Complex64::new(1.0, 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Path {
    Direct,
    Far,
}

#[derive(Clone, Debug)]
struct Prepared {
    shift: ParaboloidShift,
    coeff: Complex64,
    samples: Vec<Complex64>,
    /// `ȟ(y_j) = (2 pi)^{-d} sum_k f_k e^{i y_j·(xi_k - xi0)} dxi^d` on the dual grid.
    dual: Vec<Complex64>,
    /// Per support level, per axis, extent of `xi - xi0` over the numerical support.
    eta_range: Vec<Vec<(f64, f64)>>,
    /// Per support level, per axis, extent of `y` over the support of the dual samples.
    y_range: Vec<Vec<(f64, f64)>>,
    empty: bool,
}

fn support_ranges(
    values: &[Complex64],
    eps: f64,
    d: usize,
    n: usize,
    coord: impl Fn(usize, usize) -> f64,
) -> Option<Vec<(f64, f64)>> {
    let peak = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for (idx, z) in values.iter().enumerate() {
        if z.norm() <= eps * peak {
            continue;
        }
        let mut rest = idx;
        for axis in (0..d).rev() {
            let c = coord(axis, rest % n);
            rest /= n;
            ranges[axis].0 = ranges[axis].0.min(c);
            ranges[axis].1 = ranges[axis].1.max(c);
        }
    }
    Some(ranges)
}

fn intervals_meet(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// True when the interval `support`, repeated with period `period`, reaches
/// into `window` through some image other than itself.
fn images_hit(support: (f64, f64), window: (f64, f64), period: f64) -> bool {
    if support.1 - support.0 >= period {
        return true;
    }
    let lo = ((window.0 - support.1) / period).floor() as i64 - 1;
    let hi = ((window.1 - support.0) / period).ceil() as i64 + 1;
    (lo..=hi).filter(|&k| k != 0).any(|k| {
        let s = k as f64 * period;
        intervals_meet((support.0 + s, support.1 + s), window)
    })
}

type PlanKey = (u64, u64, usize, u64, u64, usize, i8);

fn plan_key(input: Axis, output: Axis, sign: f64) -> PlanKey {
    (
        input.start.to_bits(),
        input.step.to_bits(),
        input.len,
        output.start.to_bits(),
        output.step.to_bits(),
        output.len,
        sign as i8,
    )
}

/// Slice-by-slice evaluator for a linear combination of extensions sharing
/// one frequency grid.
pub struct Extender {
    grid: FrequencyGrid,
    terms: Vec<Prepared>,
    y_axes: Vec<Axis>,
    period_x: f64,
    period_u: f64,
    plans: Mutex<HashMap<PlanKey, Arc<UniformDft>>>,
}

/// Values of one slice plus how it was computed.
#[derive(Clone, Debug)]
pub struct SliceValues {
    pub values: Vec<Complex64>,
    pub resolved: bool,
}

impl Extender {
    pub fn new(terms: &[Term<'_>]) -> Result<Self> {
        Self::with_support_eps(terms, SUPPORT_EPS)
    }

    /// Like [`Extender::new`], treating samples below `eps` times the peak as
    /// outside the support when choosing between the two sums.
    pub fn with_support_eps(terms: &[Term<'_>], eps: f64) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidParameter("no terms to extend".into()))?;
        let grid = first.profile.grid.clone();
        for t in terms {
            if !t.profile.grid.compatible(&grid) {
                return Err(Error::GridMismatch("terms live on different frequency grids".into()));
            }
            if t.shift.d() != grid.d {
                return Err(Error::InvalidParameter("shift dimension does not match the grid".into()));
            }
        }
        let d = grid.d;
        let n = grid.points_per_axis;
        let dy = 2.0 * PI / (n as f64 * grid.spacing);
        let y_axes: Vec<Axis> = (0..d).map(|_| Axis::new(-PI / grid.spacing, dy, n)).collect();
        let mut out = Self {
            period_x: 2.0 * PI / grid.spacing,
            period_u: 2.0 * grid.half_width,
            grid,
            terms: Vec::new(),
            y_axes,
            plans: Mutex::new(HashMap::new()),
        };
        let scale = (out.grid.spacing / (2.0 * PI)).powi(d as i32);
        for t in terms {
            let xi_axes: Vec<Axis> =
                (0..d).map(|a| Axis::new(out.grid.start(a) - t.shift.xi0[a], out.grid.spacing, n)).collect();
            let plans: Vec<Arc<UniformDft>> = (0..d).map(|a| out.plan(xi_axes[a], out.y_axes[a], 1.0)).collect();
            let refs: Vec<&UniformDft> = plans.iter().map(|p| p.as_ref()).collect();
            let mut dual = apply_separable(&refs, &t.profile.samples);
            dual.iter_mut().for_each(|z| *z *= scale);
            let levels: Vec<f64> = std::iter::once(eps).chain(FALLBACK_EPS.into_iter().filter(|&l| l > eps)).collect();
            let eta: Vec<Option<Vec<(f64, f64)>>> = levels
                .iter()
                .map(|&l| support_ranges(&t.profile.samples, l, d, n, |a, k| xi_axes[a].coord(k)))
                .collect();
            let ys: Vec<Option<Vec<(f64, f64)>>> =
                levels.iter().map(|&l| support_ranges(&dual, l, d, n, |a, k| out.y_axes[a].coord(k))).collect();
            let empty = eta[0].is_none() || t.coeff == Complex64::new(0.0, 0.0);
            let fill = |r: Vec<Option<Vec<(f64, f64)>>>| -> Vec<Vec<(f64, f64)>> {
                r.into_iter().map(|v| v.unwrap_or_else(|| vec![(0.0, 0.0); d])).collect()
            };
            out.terms.push(Prepared {
                shift: t.shift.clone(),
                coeff: t.coeff,
                samples: t.profile.samples.clone(),
                dual,
                eta_range: fill(eta),
                y_range: fill(ys),
                empty,
            });
        }
        Ok(out)
    }

    /// Per term and axis, the numerical support of `xi - xi0` and of the dual variable.
    pub fn supports(&self) -> Vec<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
        self.terms.iter().map(|t| (t.eta_range[0].clone(), t.y_range[0].clone())).collect()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    fn plan(&self, input: Axis, output: Axis, sign: f64) -> Arc<UniformDft> {
        let key = plan_key(input, output, sign);
        if let Some(p) = self.plans.lock().expect("plan cache").get(&key) {
            return p.clone();
        }
        let plan = Arc::new(UniformDft::new(input, output, sign));
        let mut cache = self.plans.lock().expect("plan cache");
        if cache.len() > 256 {
            cache.clear();
        }
        cache.insert(key, plan.clone());
        plan
    }

    fn xi_axes(&self) -> Vec<Axis> {
        (0..self.grid.d).map(|a| Axis::new(self.grid.start(a), self.grid.spacing, self.grid.points_per_axis)).collect()
    }

    /// Which sum is trustworthy for term `i` at time `t` on the window `x_axes`,
    /// and whether it is clean at the base support level. Otherwise the sum
    /// that is clean at the strictest looser level is used.
    fn choose(&self, i: usize, t: f64, x_axes: &[Axis]) -> (Path, bool) {
        let term = &self.terms[i];
        let windows: Vec<(f64, f64)> = x_axes.iter().map(|a| (a.start.min(a.end()), a.start.max(a.end()))).collect();
        if t == 0.0 {
            let ok = self.direct_ok(&term.eta_range[0], &term.y_range[0], t, &windows);
            return (Path::Direct, ok);
        }
        for (level, (eta, y)) in term.eta_range.iter().zip(&term.y_range).enumerate() {
            if self.direct_ok(eta, y, t, &windows) {
                return (Path::Direct, level == 0);
            }
            if self.far_ok(eta, y, t, &windows) {
                return (Path::Far, level == 0);
            }
        }
        (Path::Far, false)
    }

    fn direct_ok(&self, eta: &[(f64, f64)], y: &[(f64, f64)], t: f64, windows: &[(f64, f64)]) -> bool {
        (0..self.grid.d).all(|a| {
            let (el, eh) = eta[a];
            let (yl, yh) = y[a];
            let (p, q) = (-2.0 * t * el, -2.0 * t * eh);
            let support = (yl + p.min(q), yh + p.max(q));
            !images_hit(support, windows[a], self.period_x)
        })
    }

    fn far_ok(&self, eta: &[(f64, f64)], y: &[(f64, f64)], t: f64, windows: &[(f64, f64)]) -> bool {
        (0..self.grid.d).all(|a| {
            let (el, eh) = eta[a];
            let (yl, yh) = y[a];
            let (p, q) = (yl / (2.0 * t), yh / (2.0 * t));
            let support = (-eh + p.min(q), -el + p.max(q));
            let (w0, w1) = (windows[a].0 / (2.0 * t), windows[a].1 / (2.0 * t));
            !images_hit(support, (w0.min(w1), w0.max(w1)), self.period_u)
        })
    }

    /// Paths the evaluator would use for a slice, one per term.
    pub fn paths(&self, t: f64, x_axes: &[Axis]) -> Vec<(Path, bool)> {
        (0..self.terms.len()).map(|i| self.choose(i, t, x_axes)).collect()
    }

    /// Evaluate the combination at time `t` on the product grid `x_axes`.
    pub fn slice(&self, t: f64, x_axes: &[Axis]) -> SliceValues {
        let choice = self.paths(t, x_axes);
        let paths: Vec<Path> = choice.iter().map(|c| c.0).collect();
        SliceValues { values: self.slice_on_paths(t, x_axes, &paths), resolved: choice.iter().all(|c| c.1) }
    }

    /// Evaluate with the sum for each term fixed by the caller.
    pub fn slice_on_paths(&self, t: f64, x_axes: &[Axis], paths: &[Path]) -> Vec<Complex64> {
        let d = self.grid.d;
        let out_len: usize = x_axes.iter().map(|a| a.len).product();
        let mut values = vec![Complex64::new(0.0, 0.0); out_len];
        let mut direct = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut any_direct = false;
        let mut xi = vec![0.0; d];
        for i in 0..self.terms.len() {
            let term = &self.terms[i];
            if term.empty {
                continue;
            }
            match paths[i] {
                Path::Direct => {
                    any_direct = true;
                    for (k, z) in term.samples.iter().enumerate() {
                        if z.re == 0.0 && z.im == 0.0 {
                            continue;
                        }
                        self.grid.point_into(k, &mut xi);
                        direct[k] += term.coeff * z * cis(t * term.shift.height(&xi));
                    }
                }
                Path::Far => {
                    let far = self.far_term(i, t, x_axes);
                    for (v, f) in values.iter_mut().zip(far) {
                        *v += f;
                    }
                }
            }
        }
        if any_direct {
            let xi_axes = self.xi_axes();
            let plans: Vec<Arc<UniformDft>> = (0..d).map(|a| self.plan(xi_axes[a], x_axes[a], 1.0)).collect();
            let refs: Vec<&UniformDft> = plans.iter().map(|p| p.as_ref()).collect();
            let vol = self.grid.cell_volume();
            for (v, s) in values.iter_mut().zip(apply_separable(&refs, &direct)) {
                *v += s * vol;
            }
        }
        values
    }

    fn far_prefactor(t: f64, d: usize) -> Complex64 {
        Complex64::new(0.0, PI / t).sqrt().powi(d as i32)
    }

    fn far_term(&self, i: usize, t: f64, x_axes: &[Axis]) -> Vec<Complex64> {
        let term = &self.terms[i];
        let d = self.grid.d;
        let n = self.grid.points_per_axis;
        let mut b = term.dual.clone();
        let mut y = vec![0.0; d];
        for (j, z) in b.iter_mut().enumerate() {
            self.dual_point(j, &mut y);
            let y2: f64 = y.iter().map(|v| v * v).sum();
            *z *= cis(-y2 / (4.0 * t));
        }
        let u_axes: Vec<Axis> =
            x_axes.iter().map(|a| Axis::new(a.start / (2.0 * t), a.step / (2.0 * t), a.len)).collect();
        let plans: Vec<UniformDft> = (0..d).map(|a| UniformDft::new(self.y_axes[a], u_axes[a], 1.0)).collect();
        let refs: Vec<&UniformDft> = plans.iter().collect();
        let mut out = apply_separable(&refs, &b);
        let pre =
            term.coeff * Self::far_prefactor(t, d) * self.y_axes[0].step.powi(d as i32) * cis(t * term.shift.tau0);
        let _ = n;
        let mut x = vec![0.0; d];
        for (j, z) in out.iter_mut().enumerate() {
            axes_point(x_axes, j, &mut x);
            let x2: f64 = x.iter().map(|v| v * v).sum();
            let xs: f64 = x.iter().zip(&term.shift.xi0).map(|(a, b)| a * b).sum();
            *z *= pre * cis(xs - x2 / (4.0 * t));
        }
        out
    }

    fn dual_point(&self, mut j: usize, y: &mut [f64]) {
        let n = self.grid.points_per_axis;
        for a in (0..self.grid.d).rev() {
            y[a] = self.y_axes[a].coord(j % n);
            j /= n;
        }
    }

    /// Adjoint of the slice map restricted to term `i`, applied to `w`:
    /// returns `A_i^* w` on the frequency grid.
    pub fn slice_adjoint(&self, i: usize, t: f64, x_axes: &[Axis], w: &[Complex64]) -> Vec<Complex64> {
        self.slice_adjoint_on_path(i, t, x_axes, w, self.choose(i, t, x_axes).0)
    }

    /// Adjoint of [`Extender::slice_on_paths`] for term `i` evaluated with `path`.
    pub fn slice_adjoint_on_path(
        &self,
        i: usize,
        t: f64,
        x_axes: &[Axis],
        w: &[Complex64],
        path: Path,
    ) -> Vec<Complex64> {
        let d = self.grid.d;
        let term = &self.terms[i];
        match path {
            Path::Direct => {
                let xi_axes = self.xi_axes();
                let plans: Vec<Arc<UniformDft>> = (0..d).map(|a| self.plan(x_axes[a], xi_axes[a], -1.0)).collect();
                let refs: Vec<&UniformDft> = plans.iter().map(|p| p.as_ref()).collect();
                let mut g = apply_separable(&refs, w);
                let vol = self.grid.cell_volume();
                let mut xi = vec![0.0; d];
                let c = term.coeff.conj() * vol;
                for (k, z) in g.iter_mut().enumerate() {
                    self.grid.point_into(k, &mut xi);
                    *z *= c * cis(-t * term.shift.height(&xi));
                }
                g
            }
            Path::Far => {
                let pre = (term.coeff
                    * Self::far_prefactor(t, d)
                    * self.y_axes[0].step.powi(d as i32)
                    * cis(t * term.shift.tau0))
                .conj();
                let mut x = vec![0.0; d];
                let v: Vec<Complex64> = w
                    .iter()
                    .enumerate()
                    .map(|(j, z)| {
                        axes_point(x_axes, j, &mut x);
                        let x2: f64 = x.iter().map(|v| v * v).sum();
                        let xs: f64 = x.iter().zip(&term.shift.xi0).map(|(a, b)| a * b).sum();
                        z * pre * cis(-(xs - x2 / (4.0 * t)))
                    })
                    .collect();
                let u_axes: Vec<Axis> =
                    x_axes.iter().map(|a| Axis::new(a.start / (2.0 * t), a.step / (2.0 * t), a.len)).collect();
                let plans: Vec<UniformDft> = (0..d).map(|a| UniformDft::new(u_axes[a], self.y_axes[a], -1.0)).collect();
                let refs: Vec<&UniformDft> = plans.iter().collect();
                let mut b = apply_separable(&refs, &v);
                let mut y = vec![0.0; d];
                for (j, z) in b.iter_mut().enumerate() {
                    self.dual_point(j, &mut y);
                    let y2: f64 = y.iter().map(|v| v * v).sum();
                    *z *= cis(y2 / (4.0 * t));
                }
                let n = self.grid.points_per_axis;
                let xi_axes: Vec<Axis> =
                    (0..d).map(|a| Axis::new(self.grid.start(a) - term.shift.xi0[a], self.grid.spacing, n)).collect();
                let plans: Vec<Arc<UniformDft>> = (0..d).map(|a| self.plan(self.y_axes[a], xi_axes[a], -1.0)).collect();
                let refs: Vec<&UniformDft> = plans.iter().map(|p| p.as_ref()).collect();
                let mut g = apply_separable(&refs, &b);
                let scale = (self.grid.spacing / (2.0 * PI)).powi(d as i32);
                g.iter_mut().for_each(|z| *z *= scale);
                g
            }
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }
}

/// Coordinates of flat index `j` on a product of axes (axis 0 slowest).
pub fn axes_point(axes: &[Axis], mut j: usize, out: &mut [f64]) {
    for a in (0..axes.len()).rev() {
        out[a] = axes[a].coord(j % axes[a].len);
        j /= axes[a].len;
    }
}

/// The cell-centred `x` axes of a spacetime grid.
pub fn spacetime_axes(stg: &SpacetimeGrid) -> Vec<Axis> {
    (0..stg.d).map(|_| Axis::new(stg.x(0), stg.dx(), stg.x_points_per_axis)).collect()
}

/// Refuse grids whose window is far wider than one period of the direct sum.
pub fn check_nyquist(grid: &FrequencyGrid, stg: &SpacetimeGrid) -> Result<Option<String>> {
    if grid.d != stg.d {
        return Err(Error::GridMismatch(format!(
            "frequency grid has d = {}, spacetime grid has d = {}",
            grid.d, stg.d
        )));
    }
    let r = grid.spacing * stg.x_half_width;
    if r > 4.0 * PI {
        return Err(Error::Resolution(format!("dxi * X = {r:.4} exceeds 4 pi; refine the frequency grid or shrink X")));
    }
    if r > PI {
        return Ok(Some(format!("dxi * X = {r:.4} exceeds pi")));
    }
    Ok(None)
}

/// Evaluate a combination of extensions on every slice of `stg`.
pub fn extend_terms(terms: &[Term<'_>], stg: &SpacetimeGrid) -> Result<SpacetimeField> {
    let ext = Extender::new(terms)?;
    let mut warnings = Vec::new();
    if let Some(w) = check_nyquist(ext.grid(), stg)? {
        warnings.push(w);
    }
    let axes = spacetime_axes(stg);
    let slices = par::map_indexed(stg.t_points, |m| ext.slice(stg.t(m), &axes));
    let unresolved = slices.iter().filter(|s| !s.resolved).count();
    if unresolved > 0 {
        warnings.push(format!("{unresolved} time slices see periodic images of the field"));
    }
    let mut samples = Vec::with_capacity(stg.len());
    for s in slices {
        samples.extend(s.values);
    }
    let mut field = SpacetimeField::new(stg.clone(), samples)?;
    field.warnings = warnings;
    Ok(field)
}

/// `E_shift f` sampled on `stg`, with `tail_bound` left at zero.
pub fn extend(f: &FrequencyProfile, shift: &ParaboloidShift, stg: &SpacetimeGrid) -> Result<SpacetimeField> {
    extend_terms(&[Term::unit(f, shift)], stg)
}

/// Per slice, `|‖F(t)‖_2 / ((2 pi)^{d/2} ‖f‖_2) - 1|` for a field `F = E_shift f`.
/// Small only while the slice stays inside the spatial window.
pub fn plancherel_defects(field: &SpacetimeField, f: &FrequencyProfile) -> Result<Vec<f64>> {
    let stg = &field.grid;
    let want = (2.0 * PI).powf(stg.d as f64 / 2.0) * crate::grids::lp_norm_frequency(f, 2.0)?;
    if want == 0.0 {
        return Err(Error::Degenerate("zero profile".into()));
    }
    let cell = stg.dx().powi(stg.d as i32);
    Ok((0..stg.t_points)
        .map(|m| {
            let sq: Vec<f64> = field.slice(m).iter().map(|z| z.norm_sqr()).collect();
            ((par::pairwise_sum(&sq) * cell).sqrt() / want - 1.0).abs()
        })
        .collect())
}

/// Closed form of `E_shift` applied to `exp(-|xi - center|^2 / width^2)`.
pub fn gaussian_extension_oracle(
    width: f64,
    center: &[f64],
    shift: &ParaboloidShift,
    t: f64,
    x: &[f64],
) -> Result<Complex64> {
    gaussian_extension_oracle_with_phase(width, center, &vec![0.0; center.len()], shift, t, x)
}

/// As [`gaussian_extension_oracle`] for the profile carrying `exp(i xi·v)`;
/// the phase velocity only translates `x`.
pub fn gaussian_extension_oracle_with_phase(
    width: f64,
    center: &[f64],
    phase_velocity: &[f64],
    shift: &ParaboloidShift,
    t: f64,
    x: &[f64],
) -> Result<Complex64> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("width {width} must be positive")));
    }
    let d = center.len();
    if x.len() != d || shift.d() != d || phase_velocity.len() != d {
        return Err(Error::InvalidParameter("dimension mismatch in oracle arguments".into()));
    }
    let inv = 1.0 / (width * width);
    // integrand per axis: exp(-a xi^2 + b xi + c)
    let a = Complex64::new(inv, -t);
    let mut out = cis(t * shift.tau0);
    for k in 0..d {
        let b = Complex64::new(2.0 * center[k] * inv, -2.0 * t * shift.xi0[k] + x[k] + phase_velocity[k]);
        let c = Complex64::new(-center[k] * center[k] * inv, t * shift.xi0[k] * shift.xi0[k]);
        out *= (Complex64::new(PI, 0.0) / a).sqrt() * (b * b / (4.0 * a) + c).exp();
    }
    Ok(out)
}
