//! Spacetime `L^q` norms with certified truncation tails, and the two quotients.
//!
//! Outside the box the field is controlled by
//! `‖F(t)‖_∞ <= min(‖f‖_1, (4 pi |t|)^{-d/2} ‖F(0)‖_{L^1})` and
//! `‖F(t)‖_2 = (2 pi)^{d/2} ‖f‖_2`, which bounds the time tail, and by
//! `‖ |x| F(t) ‖_2 <= (2 pi)^{d/2} (‖∇f‖_2 + 2|t| ‖ |xi - xi0| f ‖_2)`, which
//! bounds the spatial tail. Sums of several extensions use the triangle
//! inequality on each ingredient.

use crate::czt::{apply_separable, Axis, UniformDft};
use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::extension::{check_nyquist, spacetime_axes, Extender, ParaboloidShift, Term};
use crate::grids::{lp_norm_frequency, FrequencyProfile, SpacetimeField, SpacetimeGrid};
use crate::par::{self, pairwise_sum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailBreakdown {
    /// Bound on `∫_{|t|>T} ‖F(t)‖_q^q`.
    pub time_mass: f64,
    /// Bound on `∫_{|t|<T} ∫_{|x|_∞>X} |F|^q`.
    pub space_mass: f64,
}

impl TailBreakdown {
    pub fn mass(&self) -> f64 {
        self.time_mass + self.space_mass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    /// Norm over the grid box.
    pub value: f64,
    /// `q`-th root of the certified mass outside the box.
    pub tail_bound: f64,
    /// Difference against the half-resolution sum. An estimate, not a bound.
    pub quadrature_estimate: f64,
    /// Norm with the outside mass estimated from nested boxes, clamped to
    /// the certified interval.
    pub extrapolated: f64,
    pub q: f64,
    pub tail: TailBreakdown,
    /// Time slices evaluated with a support cut looser than the default.
    #[serde(default)]
    pub unresolved_slices: usize,
}

impl NormResult {
    pub fn zero(q: f64) -> Self {
        Self {
            value: 0.0,
            tail_bound: 0.0,
            quadrature_estimate: 0.0,
            extrapolated: 0.0,
            q,
            tail: TailBreakdown::default(),
            unresolved_slices: 0,
        }
    }

    /// Upper end of `[value, (value^q + tail^q)^{1/q} + quadrature]`.
    pub fn upper(&self) -> f64 {
        (self.value.powf(self.q) + self.tail_bound.powf(self.q)).powf(1.0 / self.q) + self.quadrature_estimate
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.value, self.upper())
    }

    /// Best point estimate of the full-space norm.
    pub fn estimate(&self) -> f64 {
        self.extrapolated
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientResult {
    /// `numerator.estimate() / denominator`.
    pub quotient: f64,
    /// `numerator.value / denominator`, the box-truncated quotient.
    pub truncated: f64,
    pub numerator: NormResult,
    pub denominator: f64,
    pub exponents: Exponents,
}

impl QuotientResult {
    fn new(numerator: NormResult, denominator: f64, exponents: Exponents) -> Self {
        Self {
            quotient: numerator.estimate() / denominator,
            truncated: numerator.value / denominator,
            numerator,
            denominator,
            exponents,
        }
    }

    /// Distance from the quotient to the top of the certified interval.
    pub fn certified_error(&self) -> f64 {
        ((self.numerator.upper() - self.numerator.estimate()) / self.denominator).max(0.0)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.numerator.value / self.denominator, self.numerator.upper() / self.denominator)
    }
}

/// Profile data that enters the tail bound of `E_shift f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub l1: f64,
    pub l2: f64,
    /// `‖E f(0, ·)‖_{L^1}`.
    pub field_l1: f64,
    /// `‖∇ f‖_2`.
    pub gradient: f64,
    /// `‖ |xi - xi0| f ‖_2`.
    pub moment: f64,
}

impl TailProfile {
    pub fn new(f: &FrequencyProfile, shift: &ParaboloidShift) -> Result<Self> {
        let g = &f.grid;
        let d = g.d;
        let n = g.points_per_axis;
        let l1 = lp_norm_frequency(f, 1.0)?;
        let l2 = lp_norm_frequency(f, 2.0)?;
        let dy = 2.0 * PI / (n as f64 * g.spacing);
        let plans: Vec<UniformDft> = (0..d)
            .map(|a| UniformDft::new(Axis::new(g.start(a), g.spacing, n), Axis::new(-PI / g.spacing, dy, n), 1.0))
            .collect();
        let refs: Vec<&UniformDft> = plans.iter().collect();
        let at0 = apply_separable(&refs, &f.samples);
        let terms: Vec<f64> = at0.iter().map(|z| z.norm()).collect();
        let field_l1 = pairwise_sum(&terms) * g.cell_volume() * dy.powi(d as i32);

        let mut grad2 = vec![0.0; f.samples.len()];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            for (idx, g2) in grad2.iter_mut().enumerate() {
                let k = (idx / stride) % n;
                let deriv = if k == 0 {
                    (f.samples[idx + stride] - f.samples[idx]) / g.spacing
                } else if k == n - 1 {
                    (f.samples[idx] - f.samples[idx - stride]) / g.spacing
                } else {
                    (f.samples[idx + stride] - f.samples[idx - stride]) / (2.0 * g.spacing)
                };
                *g2 += deriv.norm_sqr();
            }
        }
        let gradient = (pairwise_sum(&grad2) * g.cell_volume()).sqrt();
        let mut xi = vec![0.0; d];
        let mom: Vec<f64> = f
            .samples
            .iter()
            .enumerate()
            .map(|(i, z)| {
                g.point_into(i, &mut xi);
                let r2: f64 = xi.iter().zip(&shift.xi0).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 * z.norm_sqr()
            })
            .collect();
        let moment = (pairwise_sum(&mom) * g.cell_volume()).sqrt();
        Ok(Self { l1, l2, field_l1, gradient, moment })
    }
}

fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let vals: Vec<f64> = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * f(a + i as f64 * h)
        })
        .collect();
    pairwise_sum(&vals) * h / 3.0
}

/// Certified outside mass for `sum_i c_i E_i f_i` on `stg`.
pub fn tail_breakdown(parts: &[(TailProfile, f64)], q: f64, stg: &SpacetimeGrid) -> Result<TailBreakdown> {
    let d = stg.d as f64;
    let beta = d * (q - 2.0) / 2.0;
    if beta <= 1.0 + 1e-12 {
        return Err(Error::TailUncertified(format!(
            "d (q - 2) / 2 = {beta} <= 1: the time tail diverges; enlarge T and treat the result as uncertified"
        )));
    }
    let sum = |f: &dyn Fn(&TailProfile) -> f64| parts.iter().map(|(p, c)| c.abs() * f(p)).sum::<f64>();
    let sup0 = sum(&|p| p.l1);
    let disp = sum(&|p| p.field_l1);
    let energy = (2.0 * PI).powf(d / 2.0) * sum(&|p| p.l2);
    let grad = sum(&|p| p.gradient);
    let mom = sum(&|p| p.moment);
    if sup0 == 0.0 {
        return Ok(TailBreakdown::default());
    }
    let t_big = stg.t_half_width;
    let time_mass =
        2.0 * energy * energy * disp.powf(q - 2.0) * (4.0 * PI).powf(-beta) * t_big.powf(1.0 - beta) / (beta - 1.0);
    let sup = |t: f64| -> f64 {
        if t == 0.0 {
            sup0
        } else {
            sup0.min(disp * (4.0 * PI * t.abs()).powf(-d / 2.0))
        }
    };
    let x2 = stg.x_half_width * stg.x_half_width;
    let integrand = |t: f64| {
        let w = (2.0 * PI).powf(d / 2.0) * (grad + 2.0 * t.abs() * mom);
        sup(t).powf(q - 2.0) * w * w / x2
    };
    // The integrand has a kink where the two sup bounds cross; split there.
    let cross = (disp / sup0).powf(2.0 / d) / (4.0 * PI);
    let mut space_mass = 0.0;
    let pieces = if cross > 0.0 && cross < t_big { vec![(0.0, cross), (cross, t_big)] } else { vec![(0.0, t_big)] };
    for (a, b) in pieces {
        space_mass += 2.0 * simpson(a, b, 4000, integrand);
    }
    Ok(TailBreakdown { time_mass, space_mass })
}

#[derive(Clone, Copy, Debug, Default)]
struct SliceSums {
    full: f64,
    inner: f64,
    coarse: f64,
}

fn inner_range(n: usize) -> Option<(usize, usize)> {
    (n % 4 == 0).then(|| (n / 4, 3 * n / 4))
}

fn slice_sums(values: &[Complex64], stg: &SpacetimeGrid, q: f64) -> SliceSums {
    let n = stg.x_points_per_axis;
    let d = stg.d;
    let inner = inner_range(n);
    let mut full = Vec::with_capacity(values.len());
    let mut inner_terms = Vec::new();
    let mut coarse = Vec::new();
    for (idx, z) in values.iter().enumerate() {
        let v = z.norm_sqr().powf(q / 2.0);
        full.push(v);
        let mut rest = idx;
        let mut is_inner = inner.is_some();
        let mut is_even = true;
        for _ in 0..d {
            let j = rest % n;
            rest /= n;
            if let Some((lo, hi)) = inner {
                is_inner &= j >= lo && j < hi;
            }
            is_even &= j % 2 == 0;
        }
        if is_inner {
            inner_terms.push(v);
        }
        if is_even {
            coarse.push(v);
        }
    }
    SliceSums { full: pairwise_sum(&full), inner: pairwise_sum(&inner_terms), coarse: pairwise_sum(&coarse) }
}

fn assemble(sums: &[SliceSums], stg: &SpacetimeGrid, e_q: f64, tail: TailBreakdown) -> NormResult {
    let q = e_q;
    let d = stg.d as i32;
    let vol = stg.cell_volume();
    let full: Vec<f64> = sums.iter().map(|s| s.full).collect();
    let i1 = pairwise_sum(&full) * vol;
    let coarse: Vec<f64> = sums.iter().step_by(2).map(|s| s.coarse).collect();
    let i_coarse = pairwise_sum(&coarse) * vol * 2f64.powi(d + 1);
    let value = i1.powf(1.0 / q);
    let quadrature_estimate = (value - i_coarse.powf(1.0 / q)).abs();
    let tail_mass = tail.mass();
    let alpha = stg.d as f64 * (q - 2.0) / 2.0 - 1.0;
    let mut extra = 0.0;
    if let (Some((lo, hi)), Some(_)) = (inner_range(stg.t_points), inner_range(stg.x_points_per_axis)) {
        if alpha > 0.0 {
            let inner: Vec<f64> = sums[lo..hi].iter().map(|s| s.inner).collect();
            let i_half = pairwise_sum(&inner) * vol;
            extra = ((i1 - i_half) / (2f64.powf(alpha) - 1.0)).clamp(0.0, tail_mass);
        }
    }
    NormResult {
        value,
        tail_bound: tail_mass.powf(1.0 / q),
        quadrature_estimate,
        extrapolated: (i1 + extra).powf(1.0 / q),
        q,
        tail,
        unresolved_slices: 0,
    }
}

/// Norm of a sampled field; `parts` describes the profiles that generated it.
pub fn lq_norm_spacetime(field: &SpacetimeField, parts: &[(TailProfile, f64)], q: f64) -> Result<NormResult> {
    if !(q > 2.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must exceed 2")));
    }
    let stg = &field.grid;
    let tail = tail_breakdown(parts, q, stg)?;
    let sums = par::map_indexed(stg.t_points, |m| slice_sums(field.slice(m), stg, q));
    Ok(assemble(&sums, stg, q, tail))
}

/// Convenience wrapper for a field generated by a single profile.
pub fn lq_norm_of_extension(
    field: &SpacetimeField,
    f: &FrequencyProfile,
    shift: &ParaboloidShift,
    q: f64,
) -> Result<NormResult> {
    lq_norm_spacetime(field, &[(TailProfile::new(f, shift)?, 1.0)], q)
}

/// Norms of several linear combinations of the same extensions, computed
/// slice by slice without storing the fields.
pub fn norms_of_combinations(
    terms: &[(&FrequencyProfile, &ParaboloidShift)],
    combos: &[Vec<Complex64>],
    stg: &SpacetimeGrid,
    q: f64,
) -> Result<Vec<NormResult>> {
    if !(q > 2.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must exceed 2")));
    }
    if terms.is_empty() {
        return Err(Error::InvalidParameter("no terms".into()));
    }
    for c in combos {
        if c.len() != terms.len() {
            return Err(Error::InvalidParameter("combination length differs from term count".into()));
        }
    }
    check_nyquist(&terms[0].0.grid, stg)?;
    let profiles: Vec<TailProfile> = terms.iter().map(|(f, s)| TailProfile::new(f, s)).collect::<Result<_>>()?;
    let tails: Vec<TailBreakdown> = combos
        .iter()
        .map(|c| {
            let parts: Vec<(TailProfile, f64)> = profiles.iter().cloned().zip(c.iter().map(|z| z.norm())).collect();
            tail_breakdown(&parts, q, stg)
        })
        .collect::<Result<_>>()?;
    let axes = spacetime_axes(stg);
    let sums: Vec<(Vec<SliceSums>, bool)> = if combos.len() == 1 {
        let ts: Vec<Term> = terms.iter().zip(&combos[0]).map(|((f, s), c)| Term::new(f, s, *c)).collect();
        let ext = Extender::new(&ts)?;
        par::map_indexed(stg.t_points, |m| {
            let sl = ext.slice(stg.t(m), &axes);
            (vec![slice_sums(&sl.values, stg, q)], sl.resolved)
        })
    } else {
        let exts: Vec<Extender> =
            terms.iter().map(|(f, s)| Extender::new(&[Term::unit(f, s)])).collect::<Result<_>>()?;
        par::map_indexed(stg.t_points, |m| {
            let t = stg.t(m);
            let slices: Vec<_> = exts.iter().map(|e| e.slice(t, &axes)).collect();
            let resolved = slices.iter().all(|s| s.resolved);
            let slices: Vec<Vec<Complex64>> = slices.into_iter().map(|s| s.values).collect();
            let sums = combos
                .iter()
                .map(|c| {
                    let mut v = vec![Complex64::new(0.0, 0.0); slices[0].len()];
                    for (s, coef) in slices.iter().zip(c) {
                        for (a, b) in v.iter_mut().zip(s) {
                            *a += coef * b;
                        }
                    }
                    slice_sums(&v, stg, q)
                })
                .collect();
            (sums, resolved)
        })
    };
    let unresolved = sums.iter().filter(|(_, r)| !r).count();
    Ok((0..combos.len())
        .map(|k| {
            let per: Vec<SliceSums> = sums.iter().map(|(s, _)| s[k]).collect();
            NormResult { unresolved_slices: unresolved, ..assemble(&per, stg, q, tails[k].clone()) }
        })
        .collect())
}

/// `‖E f‖_q / ‖f‖_p`.
pub fn quotient_single(f: &FrequencyProfile, e: &Exponents, stg: &SpacetimeGrid) -> Result<QuotientResult> {
    let den = lp_norm_frequency(f, e.p)?;
    if den == 0.0 {
        return Err(Error::Degenerate("zero profile".into()));
    }
    let zero = ParaboloidShift::zero(f.d());
    let num = norms_of_combinations(&[(f, &zero)], &[vec![Complex64::new(1.0, 0.0)]], stg, e.q)?;
    Ok(QuotientResult::new(num.into_iter().next().expect("one norm"), den, *e))
}

/// `‖E f + E_shift g‖_q / (‖f‖_p^p + ‖g‖_p^p)^{1/p}`.
pub fn quotient_pair(
    f: &FrequencyProfile,
    g: &FrequencyProfile,
    shift: &ParaboloidShift,
    e: &Exponents,
    stg: &SpacetimeGrid,
) -> Result<QuotientResult> {
    if !f.grid.compatible(&g.grid) {
        return Err(Error::GridMismatch("f and g must share a frequency grid".into()));
    }
    let den = (lp_norm_frequency(f, e.p)?.powf(e.p) + lp_norm_frequency(g, e.p)?.powf(e.p)).powf(1.0 / e.p);
    if den == 0.0 {
        return Err(Error::Degenerate("both profiles vanish".into()));
    }
    let zero = ParaboloidShift::zero(f.d());
    let one = Complex64::new(1.0, 0.0);
    let num = norms_of_combinations(&[(f, &zero), (g, shift)], &[vec![one, one]], stg, e.q)?;
    Ok(QuotientResult::new(num.into_iter().next().expect("one norm"), den, *e))
}

/// `‖f‖_p + ‖g‖_p <= 2^{1/p'} (‖f‖_p^p + ‖g‖_p^p)^{1/p}`; returns both sides.
pub fn sharp_holder(a: f64, b: f64, e: &Exponents) -> (f64, f64) {
    (a + b, e.pair_factor() * (a.powf(e.p) + b.powf(e.p)).powf(1.0 / e.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::extend;
    use crate::grids::{dilate_profile, gaussian_profile, FrequencyGrid};

    fn l6_exact() -> f64 {
        (PI.powi(4) * (2.0 * PI / 3.0).sqrt()).powf(1.0 / 6.0)
    }

    fn gauss(l: f64, n: usize) -> FrequencyProfile {
        gaussian_profile(&FrequencyGrid::new(1, l, n).unwrap(), &[0.0], 1.0, &[0.0]).unwrap()
    }

    #[test]
    fn zero_field() {
        let g = FrequencyGrid::new(1, 5.0, 64).unwrap();
        let z = FrequencyProfile::zeros(g, "0");
        let stg = SpacetimeGrid::new(1, 4.0, 4.0, 16, 16).unwrap();
        let s = ParaboloidShift::zero(1);
        let r = lq_norm_of_extension(&extend(&z, &s, &stg).unwrap(), &z, &s, 6.0).unwrap();
        assert_eq!((r.value, r.tail_bound), (0.0, 0.0));
    }

    #[test]
    fn gaussian_norm_interval() {
        let f = gauss(10.0, 512);
        let stg = SpacetimeGrid::new(1, 20.0, 40.0, 512, 1024).unwrap();
        let z = ParaboloidShift::zero(1);
        let field = extend(&f, &z, &stg).unwrap();
        let r = lq_norm_of_extension(&field, &f, &z, 6.0).unwrap();
        let exact = l6_exact();
        assert!(r.value < exact && exact < r.upper(), "{r:?}");
        assert!((r.estimate() - exact).abs() / exact < 1e-4, "{}", r.estimate());
        let streamed = norms_of_combinations(&[(&f, &z)], &[vec![Complex64::new(1.0, 0.0)]], &stg, 6.0).unwrap();
        assert_eq!(streamed[0], r);
    }

    #[test]
    fn doubling_box_shrinks_tail() {
        let f = gauss(10.0, 256);
        let z = ParaboloidShift::zero(1);
        let p = [(TailProfile::new(&f, &z).unwrap(), 1.0)];
        let a = tail_breakdown(&p, 6.0, &SpacetimeGrid::new(1, 20.0, 20.0, 8, 8).unwrap()).unwrap();
        let b = tail_breakdown(&p, 6.0, &SpacetimeGrid::new(1, 40.0, 20.0, 8, 8).unwrap()).unwrap();
        assert!(a.time_mass / b.time_mass >= 2.0 - 1e-12);
        let c = tail_breakdown(&p, 6.0, &SpacetimeGrid::new(1, 40.0, 40.0, 8, 8).unwrap()).unwrap();
        assert!(a.mass() / c.mass() >= 2.0 - 1e-9);
    }

    #[test]
    fn tail_needs_decay() {
        let f = gauss(10.0, 64);
        let p = [(TailProfile::new(&f, &ParaboloidShift::zero(1)).unwrap(), 1.0)];
        let stg = SpacetimeGrid::new(1, 20.0, 20.0, 8, 8).unwrap();
        assert!(matches!(tail_breakdown(&p, 4.0, &stg), Err(Error::TailUncertified(_))));
    }

    #[test]
    fn quotient_homogeneity_and_scaling() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = gauss(10.0, 512);
        let stg = SpacetimeGrid::new(1, 20.0, 40.0, 256, 1024).unwrap();
        let a = quotient_single(&f, &e, &stg).unwrap();
        let b = quotient_single(&f.scaled(Complex64::new(7.0, 0.0)), &e, &stg).unwrap();
        assert!((a.quotient - b.quotient).abs() < 1e-10);
        let half = dilate_profile(&f, 0.5, 2.0).unwrap();
        let c = quotient_single(&half, &e, &stg.rescaled(0.25, 0.5)).unwrap();
        assert!((a.quotient - c.quotient).abs() < 1e-10);
        let zero = FrequencyProfile::zeros(f.grid.clone(), "0");
        let p = quotient_pair(&f, &zero, &ParaboloidShift::new(0.0, vec![1.0]), &e, &stg).unwrap();
        assert!((p.quotient - a.quotient).abs() < 1e-12);
        assert!(quotient_single(&zero, &e, &stg).is_err());
        assert!(quotient_pair(&zero, &zero, &ParaboloidShift::zero(1), &e, &stg).is_err());
    }

    #[test]
    fn mismatched_grids_refused() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = gauss(10.0, 256);
        let g = gauss(8.0, 256);
        let stg = SpacetimeGrid::new(1, 4.0, 4.0, 16, 16).unwrap();
        assert!(matches!(quotient_pair(&f, &g, &ParaboloidShift::zero(1), &e, &stg), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn holder_equality_for_equal_norms() {
        let e = Exponents::new(1, 2.0).unwrap();
        let (l, r) = sharp_holder(1.3, 1.3, &e);
        assert!((l - r).abs() < 1e-12);
        let (l, r) = sharp_holder(1.0, 0.2, &e);
        assert!(l < r);
    }
}
