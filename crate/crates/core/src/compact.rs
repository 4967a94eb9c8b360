//! Spacetime quadrature in compactified coordinates.
//!
//! With `t = tan s` and `x = y / cos s` the measure becomes
//! `dt dx = cos(s)^{-(d+2)} ds dy`, and for `q = 2 + 4/d` the integrand
//! `|F(tan s, y / cos s)|^q cos(s)^{-(d+2)}` stays bounded and localized in
//! `y` for localized profiles. A fixed box in `(s, y)` therefore covers all
//! time without truncation.

use crate::czt::{apply_separable, Axis, UniformDft};
use crate::error::{Error, Result};
use crate::extension::{Extender, Path, Term};
use crate::grids::{FrequencyGrid, FrequencyProfile};
use crate::par::{self, pairwise_sum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LensGrid {
    pub d: usize,
    pub s_points: usize,
    pub y_half_width: f64,
    pub y_points: usize,
}

impl LensGrid {
    pub fn new(d: usize, s_points: usize, y_half_width: f64, y_points: usize) -> Result<Self> {
        if d == 0 || s_points < 2 || y_points < 2 || !(y_half_width > 0.0) {
            return Err(Error::InvalidParameter("lens grid needs d >= 1, two points per axis and Y > 0".into()));
        }
        Ok(Self { d, s_points, y_half_width, y_points })
    }

    pub fn ds(&self) -> f64 {
        PI / self.s_points as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.y_half_width / self.y_points as f64
    }

    pub fn s(&self, m: usize) -> f64 {
        -PI / 2.0 + (m as f64 + 0.5) * self.ds()
    }

    pub fn t(&self, m: usize) -> f64 {
        self.s(m).tan()
    }

    /// Cell-centered `x` axes of slice `m`.
    pub fn axes(&self, m: usize) -> Vec<Axis> {
        let c = self.s(m).cos();
        let dy = self.dy();
        vec![Axis::new((-self.y_half_width + dy / 2.0) / c, dy / c, self.y_points); self.d]
    }

    /// Quadrature weight of every node of slice `m`.
    pub fn weight(&self, m: usize) -> f64 {
        self.ds() * self.dy().powi(self.d as i32) / self.s(m).cos().powi(self.d as i32 + 2)
    }
}

/// Which sum each term uses on each lens slice. Freezing the choice makes the
/// discrete objective a smooth function of the profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPlan {
    pub paths: Vec<Vec<Path>>,
    pub unresolved: usize,
}

/// Choose paths treating samples below `eps` times the peak as outside the support.
pub fn plan_paths(terms: &[Term<'_>], lens: &LensGrid, eps: f64) -> Result<PathPlan> {
    let ext = Extender::with_support_eps(terms, eps)?;
    let choice = par::map_indexed(lens.s_points, |m| ext.paths(lens.t(m), &lens.axes(m)));
    Ok(PathPlan {
        unresolved: choice.iter().filter(|c| c.iter().any(|p| !p.1)).count(),
        paths: choice.into_iter().map(|c| c.into_iter().map(|p| p.0).collect()).collect(),
    })
}

/// `sum w |F|^q` over the lens grid, with `F` the combination in `terms`.
pub fn lens_integral(terms: &[Term<'_>], lens: &LensGrid, q: f64, plan: &PathPlan) -> Result<f64> {
    let ext = Extender::new(terms)?;
    let per = par::map_indexed(lens.s_points, |m| {
        let v = ext.slice_on_paths(lens.t(m), &lens.axes(m), &plan.paths[m]);
        let terms: Vec<f64> = v.iter().map(|z| z.norm().powf(q)).collect();
        pairwise_sum(&terms) * lens.weight(m)
    });
    Ok(pairwise_sum(&per))
}

/// Value and `L^2` gradients of `sum w |F|^q` with respect to each term's profile,
/// so that `dJ(f + e v)/de = Re <grad, v>`.
pub fn lens_integral_and_gradient(
    terms: &[Term<'_>],
    lens: &LensGrid,
    q: f64,
    plan: &PathPlan,
) -> Result<(f64, Vec<Vec<Complex64>>)> {
    let ext = Extender::new(terms)?;
    let grid = ext.grid().clone();
    let per = par::map_indexed(lens.s_points, |m| {
        let t = lens.t(m);
        let axes = lens.axes(m);
        let v = ext.slice_on_paths(t, &axes, &plan.paths[m]);
        let w = lens.weight(m);
        let terms: Vec<f64> = v.iter().map(|z| z.norm().powf(q)).collect();
        let dual: Vec<Complex64> = v.iter().map(|z| z * (q * w * z.norm().powf(q - 2.0))).collect();
        let grads: Vec<Vec<Complex64>> =
            (0..ext.term_count()).map(|i| ext.slice_adjoint_on_path(i, t, &axes, &dual, plan.paths[m][i])).collect();
        (pairwise_sum(&terms) * w, grads)
    });
    let vals: Vec<f64> = per.iter().map(|p| p.0).collect();
    let vol = grid.cell_volume();
    let grads = (0..terms.len())
        .map(|i| {
            (0..grid.len())
                .map(|k| {
                    let re: Vec<f64> = per.iter().map(|p| p.1[i][k].re).collect();
                    let im: Vec<f64> = per.iter().map(|p| p.1[i][k].im).collect();
                    Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) / vol
                })
                .collect()
        })
        .collect();
    Ok((pairwise_sum(&vals), grads))
}

/// `f_lambda(xi) = lambda^{d/p} f(lambda xi)` sampled on `target` by
/// trigonometric interpolation of `f`; zero outside the window of `f`.
pub fn dilate_onto(f: &FrequencyProfile, lambda: f64, target: &FrequencyGrid, p: f64) -> Result<FrequencyProfile> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation {lambda} must be positive")));
    }
    if target.d != f.d() {
        return Err(Error::GridMismatch("target grid dimension differs".into()));
    }
    let g = &f.grid;
    let d = g.d;
    let n = g.points_per_axis;
    let dy = 2.0 * PI / (n as f64 * g.spacing);
    let y_axis = Axis::new(-PI / g.spacing, dy, n);
    // dual samples about the window start, then sums at the mapped target points
    let fwd: Vec<UniformDft> = (0..d).map(|_| UniformDft::new(Axis::new(0.0, g.spacing, n), y_axis, 1.0)).collect();
    let refs: Vec<&UniformDft> = fwd.iter().collect();
    let dual = apply_separable(&refs, &f.samples);
    let m = target.points_per_axis;
    let back: Vec<UniformDft> = (0..d)
        .map(|a| {
            UniformDft::new(y_axis, Axis::new(lambda * target.start(a) - g.start(a), lambda * target.spacing, m), -1.0)
        })
        .collect();
    let refs: Vec<&UniformDft> = back.iter().collect();
    let vals = apply_separable(&refs, &dual);
    let amp = lambda.powf(d as f64 / p) / n.pow(d as u32) as f64;
    let half = g.spacing / 2.0;
    let mut xi = vec![0.0; d];
    let samples = vals
        .iter()
        .enumerate()
        .map(|(k, z)| {
            target.point_into(k, &mut xi);
            let inside = (0..d).all(|a| {
                let v = lambda * xi[a];
                v >= g.start(a) - half && v <= g.axis_coord(a, n - 1) + half
            });
            if inside {
                z * amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let mut out = FrequencyProfile::new(target.clone(), samples, f.label.clone())?;
    out.warnings = f.warnings.clone();
    Ok(out)
}

/// Root mean square distance from the origin under the weight `sum |f_i|^2`.
pub fn rms_radius(profiles: &[&FrequencyProfile]) -> f64 {
    let grid = &profiles[0].grid;
    let mut xi = vec![0.0; grid.d];
    let mut num = Vec::with_capacity(grid.len());
    let mut den = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        grid.point_into(k, &mut xi);
        let w: f64 = profiles.iter().map(|f| f.samples[k].norm_sqr()).sum();
        num.push(w * xi.iter().map(|v| v * v).sum::<f64>());
        den.push(w);
    }
    (pairwise_sum(&num) / pairwise_sum(&den)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Exponents;
    use crate::extension::{ParaboloidShift, SUPPORT_EPS};
    use crate::grids::{dilate_profile, gaussian_profile, SpacetimeGrid};
    use crate::norms::quotient_single;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss(l: f64, n: usize) -> FrequencyProfile {
        gaussian_profile(&FrequencyGrid::new(1, l, n).unwrap(), &[0.0], 1.0, &[0.0]).unwrap()
    }

    #[test]
    fn gaussian_integrand_is_constant_in_s() {
        let f = gauss(8.0, 256);
        let lens = LensGrid::new(1, 64, 8.0, 256).unwrap();
        let zero = ParaboloidShift::zero(1);
        let terms = [Term::unit(&f, &zero)];
        let plan = plan_paths(&terms, &lens, SUPPORT_EPS).unwrap();
        assert_eq!(plan.unresolved, 0);
        let j = lens_integral(&terms, &lens, 6.0, &plan).unwrap();
        let exact = (PI.powi(4) * (2.0 * PI / 3.0).sqrt()).powf(1.0 / 6.0);
        assert!((j.powf(1.0 / 6.0) - exact).abs() < 1e-9, "{}", j.powf(1.0 / 6.0));
    }

    #[test]
    fn matches_box_quadrature() {
        let e = Exponents::new(1, 2.0).unwrap();
        let f = gaussian_profile(&FrequencyGrid::new(1, 8.0, 256).unwrap(), &[0.3], 0.8, &[0.5]).unwrap();
        let lens = LensGrid::new(1, 512, 8.0, 256).unwrap();
        let zero = ParaboloidShift::zero(1);
        let terms = [Term::unit(&f, &zero)];
        let j = lens_integral(&terms, &lens, 6.0, &plan_paths(&terms, &lens, SUPPORT_EPS).unwrap()).unwrap();
        let q = quotient_single(&f, &e, &SpacetimeGrid::new(1, 40.0, 40.0, 2048, 2048).unwrap()).unwrap();
        let lens_q = j.powf(1.0 / 6.0) / f.lp_norm(2.0);
        assert!((lens_q - q.quotient).abs() < 1e-4, "{lens_q} {}", q.quotient);
    }

    #[test]
    fn gradient_matches_differences() {
        let f = gauss(8.0, 128);
        let g = gaussian_profile(&f.grid, &[0.4], 0.7, &[0.2]).unwrap();
        let shift = ParaboloidShift::new(0.3, vec![0.5]);
        let zero = ParaboloidShift::zero(1);
        let lens = LensGrid::new(1, 128, 8.0, 128).unwrap();
        let plan = plan_paths(&[Term::unit(&f, &zero), Term::unit(&g, &shift)], &lens, SUPPORT_EPS).unwrap();
        let (_, grads) =
            lens_integral_and_gradient(&[Term::unit(&f, &zero), Term::unit(&g, &shift)], &lens, 6.0, &plan).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = gaussian_profile(&f.grid, &[0.0], 1.5, &[0.0]).unwrap();
        for _ in 0..3 {
            let v: Vec<Complex64> = env
                .samples
                .iter()
                .map(|z| z * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let dv = FrequencyProfile::new(f.grid.clone(), v.clone(), "v").unwrap();
            let h = 1e-5;
            let val = |c: f64| {
                let fp = f.combine(Complex64::new(1.0, 0.0), &dv, Complex64::new(c, 0.0)).unwrap();
                lens_integral(&[Term::unit(&fp, &zero), Term::unit(&g, &shift)], &lens, 6.0, &plan).unwrap()
            };
            let fd = (val(h) - val(-h)) / (2.0 * h);
            let an: f64 = grads[0].iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * f.grid.cell_volume();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} {an}");
        }
    }

    #[test]
    fn dilate_onto_matches_exact() {
        let f = gauss(8.0, 256);
        let target = FrequencyGrid::new(1, 8.0, 256).unwrap();
        for l in [0.7, 1.0, 1.6] {
            let g = dilate_onto(&f, l, &target, 2.0).unwrap();
            for k in (0..256).step_by(7) {
                let x = target.axis_coord(0, k);
                let exact = l.sqrt() * (-(l * x).powi(2)).exp();
                assert!((g.samples[k].re - exact).abs() < 1e-10 && g.samples[k].im.abs() < 1e-10);
            }
        }
        // agrees with the exact regridding when the target is the dilated grid
        let r = dilate_profile(&f, 0.5, 2.0).unwrap();
        let g = dilate_onto(&f, 0.5, &r.grid, 2.0).unwrap();
        for (a, b) in g.samples.iter().zip(&r.samples) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn rms_of_canonical_gaussian() {
        let f = gauss(8.0, 256);
        assert!((rms_radius(&[&f]) - 0.5).abs() < 1e-12);
        assert!((rms_radius(&[&f, &f]) - 0.5).abs() < 1e-12);
    }
}
