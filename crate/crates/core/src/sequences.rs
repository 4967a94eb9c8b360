//! Dilation sequences and the diagnostics used to study pairs of extension
//! operators along them.

use crate::czt::Axis;
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::extension::{Extender, ParaboloidShift, Term};
use crate::grids::{
    dilate_profile, gaussian_profile, lp_norm_frequency, FrequencyGrid, FrequencyProfile, SpacetimeGrid,
};
use crate::norms::{norms_of_combinations, quotient_pair, quotient_single, QuotientResult};
use crate::par::{self, pairwise_sum};
use crate::symmetry::{apply_symmetry_frequency, Symmetry};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smooth cutoff equal to 1 on `|u| <= 1/2` and 0 on `|u| >= 1`.
pub fn eta(u: f64) -> f64 {
    let a = u.abs();
    if a <= 0.5 {
        return 1.0;
    }
    if a >= 1.0 || a.is_nan() {
        return 0.0;
    }
    let g = |s: f64| (-1.0 / s).exp();
    let v = 2.0 * (1.0 - a);
    g(v) / (g(v) + g(1.0 - v))
}

/// `∫ eta(v) e^{-ikv} dv`, which is real since `eta` is even.
pub fn eta_hat(k: f64) -> f64 {
    const N: usize = 4096;
    let h = 2.0 / N as f64;
    let terms: Vec<f64> = (0..N)
        .map(|i| {
            let v = -1.0 + (i as f64 + 0.5) * h;
            eta(v) * (k * v).cos()
        })
        .collect();
    pairwise_sum(&terms) * h
}

pub fn dilation_sequence(f: &FrequencyProfile, lambdas: &[f64], p: f64) -> Result<Vec<FrequencyProfile>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty dilation list".into()));
    }
    lambdas.iter().map(|&l| dilate_profile(f, l, p)).collect()
}

/// The spacetime box in which the extension of the `lambda`-dilate lives.
pub fn dilated_grid(stg: &SpacetimeGrid, lambda: f64) -> SpacetimeGrid {
    stg.rescaled(lambda * lambda, lambda)
}

/// `‖E G‖_q / ‖G‖_p` for the unit-width centered Gaussian `G` on a grid of the
/// same size as `grid`. For `p = 2` and `d <= 2` this is the sharp constant.
pub fn a_p_estimate(e: &Exponents, grid: &FrequencyGrid, stg: &SpacetimeGrid) -> Result<QuotientResult> {
    let g = FrequencyGrid::new(e.d, grid.half_width, grid.points_per_axis)?;
    let gauss = gaussian_profile(&g, &vec![0.0; e.d], 1.0, &vec![0.0; e.d])?;
    quotient_single(&gauss, e, stg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub quotient: f64,
    pub certified_error: f64,
    pub truncated: f64,
    pub tail_bound: f64,
    pub quadrature_estimate: f64,
    /// `(target - quotient) / target`.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub a_p_estimate: f64,
    pub a_p_error: f64,
    pub target: f64,
    pub warnings: Vec<String>,
}

/// `quotient_pair(f_lambda, f_lambda, shift)` for each dilate, each on the
/// box `(lambda^2 T, lambda X)` so the resolution follows the profile.
pub fn convergence_study(
    f: &FrequencyProfile,
    shift: &ParaboloidShift,
    lambdas: &[f64],
    e: &Exponents,
    stg: &SpacetimeGrid,
) -> Result<ConvergenceStudy> {
    let mut warnings = Vec::new();
    if !shift.is_nonzero() {
        warnings.push("zero shift: both terms live on the same paraboloid".to_string());
    }
    let reference = a_p_estimate(e, &f.grid, stg)?;
    let target = e.pair_factor() * reference.quotient;
    let mut rows = Vec::with_capacity(lambdas.len());
    for (fl, &lambda) in dilation_sequence(f, lambdas, e.p)?.iter().zip(lambdas) {
        let r = quotient_pair(fl, fl, shift, e, &dilated_grid(stg, lambda))?;
        rows.push(ConvergenceRow {
            lambda,
            quotient: r.quotient,
            certified_error: r.certified_error(),
            truncated: r.truncated,
            tail_bound: r.numerator.tail_bound / r.denominator,
            quadrature_estimate: r.numerator.quadrature_estimate / r.denominator,
            gap: (target - r.quotient) / target,
        });
    }
    Ok(ConvergenceStudy {
        rows,
        a_p_estimate: reference.quotient,
        a_p_error: reference.certified_error(),
        target,
        warnings,
    })
}

/// Bump `eta(|(tau, xi) - center| / radius)` in frequency-height space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpTest {
    pub id: String,
    /// `(tau, xi_1, ..., xi_d)`.
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BumpTest {
    pub fn psi(&self, tau: f64, xi: &[f64]) -> f64 {
        let mut r2 = (tau - self.center[0]).powi(2);
        for (a, x) in xi.iter().enumerate() {
            r2 += (x - self.center[a + 1]).powi(2);
        }
        eta(r2.sqrt() / self.radius)
    }

    /// `∫ f(xi) psi(|xi - xi0|^2 + tau0, xi) dxi`.
    pub fn pairing(&self, f: &FrequencyProfile, shift: &ParaboloidShift) -> Result<Complex64> {
        if self.center.len() != f.d() + 1 || !(self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("bump {} has the wrong dimension or radius", self.id)));
        }
        let mut xi = vec![0.0; f.d()];
        let mut re = Vec::with_capacity(f.samples.len());
        let mut im = Vec::with_capacity(f.samples.len());
        for (k, z) in f.samples.iter().enumerate() {
            f.grid.point_into(k, &mut xi);
            let w = z * self.psi(shift.height(&xi), &xi);
            re.push(w.re);
            im.push(w.im);
        }
        let v = f.grid.cell_volume();
        Ok(Complex64::new(pairwise_sum(&re) * v, pairwise_sum(&im) * v))
    }
}

/// Three bumps whose frequency supports lie in `|xi| <= 1`.
pub fn default_bumps(d: usize) -> Vec<BumpTest> {
    let at = |id: &str, tau: f64, x: f64, r: f64| {
        let mut c = vec![tau, x];
        c.resize(d + 1, 0.0);
        BumpTest { id: id.into(), center: c, radius: r }
    };
    vec![at("origin", 0.0, 0.0, 1.0), at("right", 0.25, 0.5, 0.5), at("left", 0.25, -0.5, 0.5)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakPairing {
    pub id: String,
    pub f: f64,
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceDiagnostics {
    pub index: usize,
    pub lambda: Option<f64>,
    pub quotient: f64,
    pub certified_error: f64,
    /// `‖Ef + E'g‖ / (‖Ef‖ + ‖E'g‖)`.
    pub ratio_first: f64,
    /// `(‖Ef‖ + ‖E'g‖) / (A_p (‖f‖ + ‖g‖))`.
    pub ratio_second: f64,
    /// `(‖f‖ + ‖g‖) / (2^{1/p'} (‖f‖^p + ‖g‖^p)^{1/p})`.
    pub ratio_third: f64,
    pub norm_gap: f64,
    pub field_difference: f64,
    pub field_norm_f: f64,
    pub field_norm_g: f64,
    pub weak_pairings: Vec<WeakPairing>,
}

#[allow(clippy::too_many_arguments)]
pub fn weak_limit_diagnostics(
    index: usize,
    f: &FrequencyProfile,
    g: &FrequencyProfile,
    shift: &ParaboloidShift,
    e: &Exponents,
    stg: &SpacetimeGrid,
    testfns: &[BumpTest],
    a_p: f64,
) -> Result<SequenceDiagnostics> {
    if !f.grid.compatible(&g.grid) {
        return Err(Error::GridMismatch("f and g must share a frequency grid".into()));
    }
    let (nf, ng) = (lp_norm_frequency(f, e.p)?, lp_norm_frequency(g, e.p)?);
    let den = (nf.powf(e.p) + ng.powf(e.p)).powf(1.0 / e.p);
    if den == 0.0 {
        return Err(Error::Degenerate("both profiles vanish".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let origin = ParaboloidShift::zero(f.d());
    let norms = norms_of_combinations(
        &[(f, &origin), (g, shift)],
        &[vec![one, one], vec![one, zero], vec![zero, one], vec![one, -one]],
        stg,
        e.q,
    )?;
    let (sum, ef, eg, diff) = (norms[0].estimate(), norms[1].estimate(), norms[2].estimate(), norms[3].estimate());
    if ef + eg == 0.0 {
        return Err(Error::Degenerate("both extensions vanish on the grid".into()));
    }
    let weak_pairings = testfns
        .iter()
        .map(|b| Ok(WeakPairing { id: b.id.clone(), f: b.pairing(f, &origin)?.norm(), g: b.pairing(g, shift)?.norm() }))
        .collect::<Result<_>>()?;
    Ok(SequenceDiagnostics {
        index,
        lambda: None,
        quotient: sum / den,
        certified_error: (norms[0].upper() - sum) / den,
        ratio_first: sum / (ef + eg),
        ratio_second: (ef + eg) / (a_p * (nf + ng)),
        ratio_third: (nf + ng) / (e.pair_factor() * den),
        norm_gap: nf - ng,
        field_difference: diff,
        field_norm_f: ef,
        field_norm_g: eg,
        weak_pairings,
    })
}

/// Diagnostics along the dilation sequence `f_n = g_n = f_lambda`.
pub fn dilation_diagnostics(
    f: &FrequencyProfile,
    shift: &ParaboloidShift,
    lambdas: &[f64],
    e: &Exponents,
    stg: &SpacetimeGrid,
    testfns: &[BumpTest],
    a_p: f64,
) -> Result<Vec<SequenceDiagnostics>> {
    let seq = dilation_sequence(f, lambdas, e.p)?;
    seq.iter()
        .zip(lambdas)
        .enumerate()
        .map(|(n, (fl, &l))| {
            let mut d = weak_limit_diagnostics(n, fl, fl, shift, e, &dilated_grid(stg, l), testfns, a_p)?;
            d.lambda = Some(l);
            Ok(d)
        })
        .collect()
}

/// `‖f_n - S_n f‖_p`, the remainder in `f_n = S_n f + r_n`.
pub fn representation_residual(f_n: &FrequencyProfile, f: &FrequencyProfile, s_n: &Symmetry, p: f64) -> Result<f64> {
    let sf = apply_symmetry_frequency(s_n, f, p)?;
    if !sf.grid.compatible(&f_n.grid) {
        return Err(Error::GridMismatch("S_n f does not land on the grid of f_n".into()));
    }
    lp_norm_frequency(&f_n.combine(Complex64::new(1.0, 0.0), &sf, Complex64::new(-1.0, 0.0))?, p)
}

/// `|xi - xi0|^2 - |xi - xin|^2 + tau0 - taun`.
pub fn separation_h(shift0: &ParaboloidShift, shift_n: &ParaboloidShift, xi: &[f64]) -> f64 {
    shift0.height(xi) - shift_n.height(xi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub points: Vec<Vec<f64>>,
    pub h_samples: Vec<f64>,
    /// `h(xi) = normal·xi + constant`.
    pub normal: Vec<f64>,
    pub constant: f64,
    /// Signed position of the hyperplane `A_n` along the unit normal; `None` when it is empty.
    pub zero_set_offset: Option<f64>,
    pub c_estimate: f64,
    pub s: f64,
    pub r: f64,
    pub degenerate: bool,
}

fn affine_h(shift0: &ParaboloidShift, shift_n: &ParaboloidShift) -> (Vec<f64>, f64) {
    let normal = shift_n.xi0.iter().zip(&shift0.xi0).map(|(a, b)| 2.0 * (a - b)).collect();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    (normal, sq(&shift0.xi0) + shift0.tau0 - sq(&shift_n.xi0) - shift_n.tau0)
}

impl SeparationReport {
    pub fn h(&self, xi: &[f64]) -> f64 {
        self.normal.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }

    pub fn normal_norm(&self) -> f64 {
        self.normal.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Distance to `A_n`, infinite when `A_n` is empty.
    pub fn distance_to_zero_set(&self, xi: &[f64]) -> f64 {
        let n = self.normal_norm();
        if n == 0.0 {
            f64::INFINITY
        } else {
            self.h(xi).abs() / n
        }
    }
}

pub fn separation_report(
    shift0: &ParaboloidShift,
    shift_n: &ParaboloidShift,
    s: f64,
    r: f64,
    grid: &FrequencyGrid,
) -> Result<SeparationReport> {
    if !(s > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter(format!("s = {s} and R = {r} must be positive")));
    }
    if shift0.d() != grid.d || shift_n.d() != grid.d {
        return Err(Error::InvalidParameter("shift dimension does not match the grid".into()));
    }
    let (normal, constant) = affine_h(shift0, shift_n);
    let mut rep = SeparationReport {
        points: Vec::new(),
        h_samples: Vec::new(),
        zero_set_offset: None,
        normal,
        constant,
        c_estimate: 0.0,
        s,
        r,
        degenerate: false,
    };
    let nn = rep.normal_norm();
    if nn == 0.0 && constant == 0.0 {
        rep.degenerate = true;
    }
    if nn > 0.0 {
        rep.zero_set_offset = Some(-constant / nn);
    }
    let mut xi = vec![0.0; grid.d];
    let mut c = f64::INFINITY;
    for k in 0..grid.len() {
        grid.point_into(k, &mut xi);
        if xi.iter().map(|v| v * v).sum::<f64>() >= r * r {
            continue;
        }
        let h = rep.h(&xi);
        if rep.distance_to_zero_set(&xi) > s {
            c = c.min(h.abs());
        }
        rep.points.push(xi.clone());
        rep.h_samples.push(h);
    }
    if rep.degenerate {
        return Ok(rep);
    }
    if !c.is_finite() {
        return Err(Error::Resolution(format!(
            "no grid point with |xi| < {r} lies farther than {s} from the zero set"
        )));
    }
    rep.c_estimate = c;
    Ok(rep)
}

/// Separations below this are treated as coincident paraboloids.
pub const MIN_SEPARATION: f64 = 1e-10;
const MAX_SHRINK: usize = 30;

/// `Psi(tau, xi) = eta(3 (tau - h0(xi)) / c) w(xi)` with
/// `w = Phi (1 - eta(dist(xi, A_n) / 2 s0))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatingTestFn {
    pub shift0: ParaboloidShift,
    pub shift_n: ParaboloidShift,
    pub s0: f64,
    pub r: f64,
    pub c: f64,
    pub shrink_steps: usize,
    /// `‖f‖_p`-normalized input.
    pub profile: FrequencyProfile,
    pub weight: FrequencyProfile,
    pub phi_pairing: f64,
    pub m1: f64,
    pub m2: f64,
}

impl SeparatingTestFn {
    /// `Psi(tau, xi_k)` at grid index `k`.
    pub fn psi(&self, tau: f64, k: usize) -> Complex64 {
        let xi = self.weight.grid.point(k);
        self.weight.samples[k] * eta(3.0 * (tau - self.shift0.height(&xi)) / self.c)
    }

    /// `Psi` on `taus x grid`, `tau` slowest.
    pub fn sample(&self, taus: &[f64]) -> Vec<Complex64> {
        taus.iter().flat_map(|&t| (0..self.weight.grid.len()).map(move |k| self.psi(t, k))).collect()
    }

    /// `∫ g(xi) Psi(|xi - xi_s|^2 + tau_s, xi) dxi` on the paraboloid of `shift`.
    pub fn pairing(&self, g: &FrequencyProfile, shift: &ParaboloidShift) -> Result<Complex64> {
        if !g.grid.compatible(&self.weight.grid) {
            return Err(Error::GridMismatch("pairing profile must share the test function's grid".into()));
        }
        let mut xi = vec![0.0; g.d()];
        let mut re = Vec::with_capacity(g.samples.len());
        let mut im = Vec::with_capacity(g.samples.len());
        for (k, z) in g.samples.iter().enumerate() {
            g.grid.point_into(k, &mut xi);
            let tau = shift.height(&xi);
            let w = z * self.weight.samples[k] * eta(3.0 * (tau - self.shift0.height(&xi)) / self.c);
            re.push(w.re);
            im.push(w.im);
        }
        let v = g.grid.cell_volume();
        Ok(Complex64::new(pairwise_sum(&re) * v, pairwise_sum(&im) * v))
    }
}

fn pairing_sum(a: &FrequencyProfile, b: &[Complex64]) -> f64 {
    let re: Vec<f64> = a.samples.iter().zip(b).map(|(x, y)| (x * y).re).collect();
    let im: Vec<f64> = a.samples.iter().zip(b).map(|(x, y)| (x * y).im).collect();
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im)).norm() * a.grid.cell_volume()
}

pub fn build_separating_testfn(
    shift0: &ParaboloidShift,
    shift_n: &ParaboloidShift,
    f: &FrequencyProfile,
    p: f64,
    s0: f64,
    r: f64,
) -> Result<SeparatingTestFn> {
    let nf = lp_norm_frequency(f, p)?;
    if nf == 0.0 {
        return Err(Error::Degenerate("zero profile".into()));
    }
    let f = f.scaled(Complex64::new(1.0 / nf, 0.0));
    let p_conj = p / (p - 1.0);
    let mut xi = vec![0.0; f.d()];
    let dual: Vec<Complex64> = f
        .samples
        .iter()
        .enumerate()
        .map(|(k, z)| {
            f.grid.point_into(k, &mut xi);
            let m = z.norm();
            let cut = eta(xi.iter().map(|v| v * v).sum::<f64>().sqrt() / r);
            if m == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z.conj() * m.powf(p - 2.0) * cut
            }
        })
        .collect();
    let dual = FrequencyProfile::new(f.grid.clone(), dual, "pairing profile")?;
    let dn = lp_norm_frequency(&dual, p_conj)?;
    if dn == 0.0 {
        return Err(Error::Degenerate(format!("profile vanishes on |xi| < {r}")));
    }
    let phi = dual.scaled(Complex64::new(1.0 / dn, 0.0));
    let phi_pairing = pairing_sum(&f, &phi.samples);
    if phi_pairing <= 0.75 {
        return Err(Error::Degenerate(format!("pairing profile reaches only {phi_pairing:.4} < 3/4 on |xi| < {r}")));
    }
    let base = separation_report(shift0, shift_n, s0, r, &f.grid)?;
    if base.degenerate {
        return Err(Error::Degenerate("the two paraboloids coincide".into()));
    }
    for k in 0..=MAX_SHRINK {
        let s = s0 / 2f64.powi(k as i32);
        let w: Vec<Complex64> = phi
            .samples
            .iter()
            .enumerate()
            .map(|(j, z)| {
                f.grid.point_into(j, &mut xi);
                z * (1.0 - eta(base.distance_to_zero_set(&xi) / (2.0 * s)))
            })
            .collect();
        let m1 = pairing_sum(&f, &w);
        if m1 <= 0.75 {
            continue;
        }
        let c = separation_report(shift0, shift_n, s, r, &f.grid)?.c_estimate;
        if !(c > MIN_SEPARATION) {
            return Err(Error::Degenerate(format!("separation c = {c:e} vanishes")));
        }
        let weight = FrequencyProfile::new(f.grid.clone(), w, "separating weight")?;
        let mut tf = SeparatingTestFn {
            shift0: shift0.clone(),
            shift_n: shift_n.clone(),
            s0: s,
            r,
            c,
            shrink_steps: k,
            profile: f.clone(),
            weight,
            phi_pairing,
            m1,
            m2: 0.0,
        };
        let mut m2: f64 = 0.0;
        for j in 0..f.grid.len() {
            f.grid.point_into(j, &mut xi);
            if xi.iter().map(|v| v * v).sum::<f64>() < r * r {
                m2 = m2.max(tf.psi(shift_n.height(&xi), j).norm());
            }
        }
        tf.m2 = m2;
        return Ok(tf);
    }
    Err(Error::Resolution(format!("distance cutoff keeps the pairing below 3/4 after {MAX_SHRINK} halvings of s0")))
}

const DUAL_SUPPORT_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    /// `|<f dsigma, Psi>|`.
    pub lhs: f64,
    /// Upper bound of `‖E_0 f - E_n g‖_q`.
    pub diff_norm: f64,
    /// `‖Psi^‖_{q'}`, with `Psi^` the spacetime function whose transform is `Psi`.
    pub phi_norm: f64,
    /// `|<g dsigma', Psi>|`.
    pub g_pairing: f64,
    pub rhs: f64,
    pub holds: bool,
    pub warnings: Vec<String>,
}

/// `|<f dsigma, Psi>| <= ‖E_0 f - E_n g‖_q ‖Psi^‖_{q'} + |<g dsigma', Psi>|`.
pub fn pairing_duality(
    tf: &SeparatingTestFn,
    g: &FrequencyProfile,
    e: &Exponents,
    stg: &SpacetimeGrid,
) -> Result<DualityCheck> {
    let f = &tf.profile;
    let lhs = tf.pairing(f, &tf.shift0)?.norm();
    let g_pairing = tf.pairing(g, &tf.shift_n)?.norm();
    let one = Complex64::new(1.0, 0.0);
    let diff = norms_of_combinations(&[(f, &tf.shift0), (g, &tf.shift_n)], &[vec![one, -one]], stg, e.q)?;
    let diff_norm = diff[0].upper();
    let (phi_norm, warnings) = dual_norm(tf, e.q / (e.q - 1.0))?;
    let rhs = diff_norm * phi_norm + g_pairing;
    Ok(DualityCheck { lhs, diff_norm, phi_norm, g_pairing, rhs, holds: lhs <= rhs, warnings })
}

/// `‖Psi^‖_{q'}` where `Psi^(t, x) = (2 pi)^{-(1+d)} (c/3) eta^(c t / 3) E_0 w(-t, -x)`.
/// Each time slice is sampled on a window that follows the dispersion of `E_0 w`,
/// and the time integral runs in `sinh` coordinates out to where `eta^` is negligible.
fn dual_norm(tf: &SeparatingTestFn, qc: f64) -> Result<(f64, Vec<String>)> {
    let w = &tf.weight;
    let d = w.d();
    let grid = &w.grid;
    let ext = Extender::with_support_eps(&[Term::unit(w, &tf.shift0)], DUAL_SUPPORT_EPS)?;

    // frequency support of w
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let mut xi = vec![0.0; d];
    let peak = w.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (k, z) in w.samples.iter().enumerate() {
        if z.norm() > 1e-12 * peak {
            grid.point_into(k, &mut xi);
            for a in 0..d {
                lo[a] = lo[a].min(xi[a]);
                hi[a] = hi[a].max(xi[a]);
            }
        }
    }
    let diam = (0..d).map(|a| hi[a] - lo[a]).fold(grid.spacing, f64::max);
    let speed =
        (0..d).map(|a| (lo[a] - tf.shift0.xi0[a]).abs().max((hi[a] - tf.shift0.xi0[a]).abs())).fold(0.0, f64::max);

    // spatial extent of E_0 w at t = 0 over one full period
    let period = 2.0 * std::f64::consts::PI / grid.spacing;
    let n = grid.points_per_axis;
    let axes0 = vec![Axis::new(-period / 2.0, period / n as f64, n); d];
    let s0 = ext.slice(0.0, &axes0).values;
    let top = s0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut y: f64 = 1.0;
    let mut pt = vec![0.0; d];
    for (j, z) in s0.iter().enumerate() {
        if z.norm() > DUAL_SUPPORT_EPS * top {
            crate::extension::axes_point(&axes0, j, &mut pt);
            y = y.max(pt.iter().map(|v| v.abs()).fold(0.0, f64::max));
        }
    }

    // time range from the decay of eta^
    let e0 = eta_hat(0.0);
    let mut kmax: f64 = 1.0;
    let mut k = 0.0;
    while k < 5000.0 {
        if eta_hat(k).abs() > 1e-8 * e0 {
            kmax = k;
        }
        k += 0.25;
    }
    let c3 = tf.c / 3.0;
    let t_max = kmax / c3;
    let a = 0.05 / (1.0 + speed * speed);
    let sigma_max = (t_max / a).asinh();
    let dsigma = (0.25 / kmax).min(0.02);
    let mut ns = (sigma_max / dsigma).ceil() as usize;
    ns += ns % 2;
    let h = sigma_max / ns as f64;

    let slice_integral = |t: f64| -> Result<(f64, bool)> {
        let bw = if t == 0.0 { diam } else { diam.min(y / t.abs()) };
        let dx = std::f64::consts::PI / (2.0 * bw);
        let half = y + 2.0 * t.abs() * speed + 2.0;
        let nx = (2.0 * half / dx).ceil() as usize;
        if nx.pow(d as u32) > 1 << 22 {
            return Err(Error::Resolution(format!("dual function needs {nx} points per axis at t = {t}")));
        }
        let dx = 2.0 * half / nx as f64;
        let axes = vec![Axis::new(-half + dx / 2.0, dx, nx); d];
        let s = ext.slice(t, &axes);
        let terms: Vec<f64> = s.values.iter().map(|z| z.norm().powf(qc)).collect();
        Ok((pairwise_sum(&terms) * dx.powi(d as i32), s.resolved))
    };
    let nodes: Vec<(f64, f64)> = (0..=ns)
        .flat_map(|i| {
            let sigma = i as f64 * h;
            let wgt = if i == 0 || i == ns {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            } * h
                / 3.0;
            let t = a * sigma.sinh();
            let jac = a * sigma.cosh() * wgt;
            if i == 0 {
                vec![(0.0, jac)]
            } else {
                vec![(t, jac), (-t, jac)]
            }
        })
        .collect();
    let vals = par::map_indexed(nodes.len(), |i| {
        let (t, jac) = nodes[i];
        slice_integral(t).map(|(v, ok)| ((c3 * eta_hat(c3 * t)).abs().powf(qc) * v * jac, ok))
    });
    let mut terms = Vec::with_capacity(vals.len());
    let mut unresolved = 0;
    for v in vals {
        let (x, ok) = v?;
        terms.push(x);
        if !ok {
            unresolved += 1;
        }
    }
    let mut warnings = Vec::new();
    if unresolved > 0 {
        warnings.push(format!("{unresolved} of {} dual slices unresolved", terms.len()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok((pairwise_sum(&terms).powf(1.0 / qc) / two_pi.powi(1 + d as i32), warnings))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub index: usize,
    pub shift: ParaboloidShift,
    pub residual: f64,
    pub relative: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedLimit {
    pub shift0: ParaboloidShift,
    /// `‖E_(shift0) f‖_q` for the normalized profile.
    pub base_norm: f64,
    pub rows: Vec<ResidualRow>,
}

/// `‖E_(shift0) f - E_(shift_n) f‖_q` for `‖f‖_p = 1`.
pub fn shifted_limit_test(
    f: &FrequencyProfile,
    shift0: &ParaboloidShift,
    shifts: &[ParaboloidShift],
    e: &Exponents,
    stg: &SpacetimeGrid,
) -> Result<ShiftedLimit> {
    let nf = lp_norm_frequency(f, e.p)?;
    if nf == 0.0 {
        return Err(Error::Degenerate("zero profile".into()));
    }
    let f = f.scaled(Complex64::new(1.0 / nf, 0.0));
    let mut terms = vec![(&f, shift0)];
    terms.extend(shifts.iter().map(|s| (&f, s)));
    let k = terms.len();
    let mut combos = vec![{
        let mut c = vec![Complex64::new(0.0, 0.0); k];
        c[0] = Complex64::new(1.0, 0.0);
        c
    }];
    for n in 1..k {
        let mut c = combos[0].clone();
        c[n] = Complex64::new(-1.0, 0.0);
        combos.push(c);
    }
    let norms = norms_of_combinations(&terms, &combos, stg, e.q)?;
    let base_norm = norms[0].estimate();
    let rows = shifts
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let r = &norms[i + 1];
            ResidualRow {
                index: i + 1,
                shift: s.clone(),
                residual: r.estimate(),
                relative: r.estimate() / base_norm,
                tail_bound: r.tail_bound,
            }
        })
        .collect();
    Ok(ShiftedLimit { shift0: shift0.clone(), base_norm, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendThresholds {
    /// Required `lambda_last / lambda_first` for divergence.
    pub min_growth: f64,
    /// Largest admissible final magnitude for a sequence tending to zero.
    pub zero_tol: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        Self { min_growth: 10.0, zero_tol: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub index: usize,
    pub lambda: f64,
    /// `lambda^{-2} xi0·xi~`.
    pub frequency_term: f64,
    /// `|lambda t0 xi0|`.
    pub time_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceConditions {
    pub rows: Vec<ConditionRow>,
    pub lambda_diverges: bool,
    pub frequency_term_vanishes: bool,
    pub time_term_vanishes: bool,
}

impl SequenceConditions {
    pub fn all_pass(&self) -> bool {
        self.lambda_diverges && self.frequency_term_vanishes && self.time_term_vanishes
    }
}

fn last_half(v: &[f64]) -> &[f64] {
    &v[v.len() / 2..]
}

pub fn check_sequence_conditions(
    symmetries: &[Symmetry],
    shift: &ParaboloidShift,
    th: TrendThresholds,
) -> Result<SequenceConditions> {
    if symmetries.is_empty() {
        return Err(Error::InvalidParameter("empty symmetry list".into()));
    }
    let mut rows = Vec::with_capacity(symmetries.len());
    for (n, s) in symmetries.iter().enumerate() {
        s.validate()?;
        if s.d() != shift.d() {
            return Err(Error::InvalidParameter("symmetry dimension does not match the shift".into()));
        }
        let dot: f64 = shift.xi0.iter().zip(&s.xi_tilde).map(|(a, b)| a * b).sum();
        rows.push(ConditionRow {
            index: n,
            lambda: s.lambda,
            frequency_term: dot / (s.lambda * s.lambda),
            time_term: s.lambda * s.t0.abs() * shift.xi0_norm(),
        });
    }
    let lam: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    let lam_tail = last_half(&lam);
    let lambda_diverges = lam_tail.windows(2).all(|w| w[1] >= w[0]) && lam[lam.len() - 1] >= th.min_growth * lam[0];
    let vanishes = |v: Vec<f64>| {
        let tail = last_half(&v);
        tail.windows(2).all(|w| w[1] <= w[0]) && v[v.len() - 1] <= th.zero_tol
    };
    Ok(SequenceConditions {
        frequency_term_vanishes: vanishes(rows.iter().map(|r| r.frequency_term.abs()).collect()),
        time_term_vanishes: vanishes(rows.iter().map(|r| r.time_term).collect()),
        lambda_diverges,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(l: f64, n: usize) -> FrequencyProfile {
        gaussian_profile(&FrequencyGrid::new(1, l, n).unwrap(), &[0.0], 1.0, &[0.0]).unwrap()
    }

    #[test]
    fn eta_plateau_and_support() {
        assert_eq!(eta(0.0), 1.0);
        assert_eq!(eta(0.5), 1.0);
        assert_eq!(eta(1.0), 0.0);
        assert_eq!(eta(-2.0), 0.0);
        assert!((eta(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let v = eta(0.5 + i as f64 / 200.0);
            assert!(v <= prev);
            prev = v;
        }
        // eta^(0) = ∫ eta, between the plateau and the support lengths
        assert!(eta_hat(0.0) > 1.0 && eta_hat(0.0) < 2.0);
    }

    #[test]
    fn dilation_examples() {
        let f = gauss(10.0, 512);
        assert!(dilation_sequence(&f, &[], 2.0).is_err());
        assert_eq!(dilation_sequence(&f, &[1.0], 2.0).unwrap()[0], f);
        let seq = dilation_sequence(&f, &[0.5, 0.25], 2.0).unwrap();
        let n0 = f.lp_norm(2.0);
        let moment = |g: &FrequencyProfile| {
            let m2: f64 = (0..g.grid.len()).map(|k| g.grid.axis_coord(0, k).powi(2) * g.samples[k].norm_sqr()).sum();
            let m0: f64 = g.samples.iter().map(|z| z.norm_sqr()).sum();
            (m2 / m0).sqrt()
        };
        for (g, l) in seq.iter().zip([0.5, 0.25]) {
            assert!((g.lp_norm(2.0) - n0).abs() < 1e-8);
            assert!((moment(g) - moment(&f) / l).abs() < 1e-6);
        }
    }

    #[test]
    fn separation_examples() {
        let grid = FrequencyGrid::new(1, 4.0, 256).unwrap();
        let s0 = ParaboloidShift::new(0.0, vec![1.0]);
        let rep = separation_report(&s0, &ParaboloidShift::new(0.0, vec![1.1]), 0.1, 3.0, &grid).unwrap();
        assert!((rep.normal[0] - 0.2).abs() < 1e-12 && (rep.constant + 0.21).abs() < 1e-12);
        assert!((rep.zero_set_offset.unwrap() - 1.05).abs() < 1e-12);
        for (x, h) in rep.points.iter().zip(&rep.h_samples) {
            assert!((h - separation_h(&s0, &ParaboloidShift::new(0.0, vec![1.1]), x)).abs() < 1e-12);
            assert!((h - (0.2 * x[0] - 0.21)).abs() < 1e-12);
        }
        let tau = separation_report(&s0, &ParaboloidShift::new(0.5, vec![1.0]), 0.3, 2.0, &grid).unwrap();
        assert!(tau.h_samples.iter().all(|h| *h == -0.5));
        assert_eq!(tau.c_estimate, 0.5);
        assert!(tau.zero_set_offset.is_none());
        assert!(separation_report(&s0, &s0, 0.1, 2.0, &grid).unwrap().degenerate);
    }

    #[test]
    fn separating_testfn_examples() {
        let f = gauss(8.0, 512);
        let s0 = ParaboloidShift::new(0.0, vec![1.0]);
        let tf = build_separating_testfn(&s0, &ParaboloidShift::new(0.0, vec![1.1]), &f, 2.0, 0.5, 3.0).unwrap();
        assert!(tf.m1 > 0.5 && tf.m2 < 1e-6, "{} {}", tf.m1, tf.m2);
        let far = build_separating_testfn(&s0, &ParaboloidShift::new(5.0, vec![1.0]), &f, 2.0, 0.5, 3.0).unwrap();
        assert_eq!(far.m2, 0.0);
        assert_eq!(far.shrink_steps, 0);
        // distance cutoff is identically one when the zero set is empty
        let phi_only = far
            .weight
            .samples
            .iter()
            .zip(&f.samples)
            .all(|(w, z)| (z.norm() == 0.0) == (w.norm() == 0.0) || w.norm() < 1e-300);
        assert!(phi_only);
        assert!(build_separating_testfn(&s0, &s0, &f, 2.0, 0.5, 3.0).is_err());
        let mut failed = false;
        for k in 1..60 {
            let near = ParaboloidShift::new(0.0, vec![1.0 + 2f64.powi(-k)]);
            if build_separating_testfn(&s0, &near, &f, 2.0, 0.5, 3.0).is_err() {
                failed = true;
                break;
            }
        }
        assert!(failed);
    }

    #[test]
    fn sequence_condition_examples() {
        let shift = ParaboloidShift::new(0.0, vec![1.0]);
        let th = TrendThresholds::default();
        let pow: Vec<Symmetry> = (1..=10).map(|n| Symmetry::scaling(1, 2f64.powi(n))).collect();
        assert!(check_sequence_conditions(&pow, &shift, th).unwrap().all_pass());
        let drift: Vec<Symmetry> = (1..=10)
            .map(|n| Symmetry::new(2f64.powi(n), vec![n as f64 * 2f64.powi(n)], 0.0, vec![0.0]).unwrap())
            .collect();
        let c = check_sequence_conditions(&drift, &shift, th).unwrap();
        assert!(c.frequency_term_vanishes);
        assert!((c.rows[3].frequency_term - 4.0 / 16.0).abs() < 1e-15);
        let flat: Vec<Symmetry> = (0..10).map(|_| Symmetry::identity(1)).collect();
        assert!(!check_sequence_conditions(&flat, &shift, th).unwrap().lambda_diverges);
        assert!(check_sequence_conditions(&[], &shift, th).is_err());
    }

    #[test]
    fn representation_residual_of_dilates() {
        let f = gauss(10.0, 256);
        let fl = dilate_profile(&f, 0.25, 2.0).unwrap();
        assert!(representation_residual(&fl, &f, &Symmetry::scaling(1, 0.25), 2.0).unwrap() < 1e-14);
        assert!(representation_residual(&fl, &f, &Symmetry::scaling(1, 0.5), 2.0).is_err());
    }

    #[test]
    fn weak_limit_equal_profiles() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = dilate_profile(&gauss(10.0, 512), 0.5, 2.0).unwrap();
        let stg = dilated_grid(&SpacetimeGrid::new(1, 20.0, 20.0, 512, 1024).unwrap(), 0.5);
        let d = weak_limit_diagnostics(
            0,
            &f,
            &f,
            &ParaboloidShift::new(0.0, vec![1.0]),
            &e,
            &stg,
            &default_bumps(1),
            2.0378,
        )
        .unwrap();
        assert_eq!(d.norm_gap, 0.0);
        assert!((d.ratio_third - 1.0).abs() < 1e-8);
        assert!(d.ratio_first <= 1.0 + d.certified_error);
        assert_eq!(d.weak_pairings.len(), 3);
    }

    #[test]
    fn shifted_limit_constant_list() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = gauss(10.0, 512);
        let s0 = ParaboloidShift::new(0.0, vec![1.0]);
        let stg = SpacetimeGrid::new(1, 10.0, 20.0, 256, 512).unwrap();
        let r = shifted_limit_test(&f, &s0, &[s0.clone(), s0.clone()], &e, &stg).unwrap();
        assert!(r.rows.iter().all(|row| row.residual < 1e-10));
    }

    #[test]
    fn zero_shift_pair_is_scaled_single() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = gauss(10.0, 512);
        let stg = SpacetimeGrid::new(1, 20.0, 20.0, 512, 1024).unwrap();
        let study = convergence_study(&f, &ParaboloidShift::zero(1), &[1.0, 0.5], &e, &stg).unwrap();
        assert_eq!(study.warnings.len(), 1);
        for row in &study.rows {
            let fl = dilate_profile(&f, row.lambda, 2.0).unwrap();
            let single = quotient_single(&fl, &e, &dilated_grid(&stg, row.lambda)).unwrap().quotient;
            assert!((row.quotient - e.pair_factor() * single).abs() < 1e-10 * single);
        }
    }
}
