//! Local four-point Lagrange interpolation on spacetime fields.

use crate::grids::SpacetimeField;
use num_complex::Complex64;

/// Stencil start and weights for fractional index `s` on an axis of `n` nodes,
/// or `None` when the four-point stencil would leave the axis.
pub fn lagrange4(s: f64, n: usize) -> Option<(usize, [f64; 4])> {
    let tol = 1e-9;
    if !s.is_finite() || n < 4 || s < -tol || s > (n - 1) as f64 + tol {
        return None;
    }
    let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = s - base as f64;
    Some((
        base,
        [
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        ],
    ))
}

/// Interpolate `field` at `(t, x)`; `None` outside the interpolable region.
pub fn sample(field: &SpacetimeField, t: f64, x: &[f64]) -> Option<Complex64> {
    let g = &field.grid;
    let st = (t - g.t(0)) / g.dt();
    let (tb, tw) = lagrange4(st, g.t_points)?;
    let mut stencils = Vec::with_capacity(x.len());
    for &xa in x {
        stencils.push(lagrange4((xa - g.x(0)) / g.dx(), g.x_points_per_axis)?);
    }
    let d = x.len();
    let n = g.x_points_per_axis;
    let slice = g.slice_len();
    let mut acc = Complex64::new(0.0, 0.0);
    let combos = 4usize.pow(d as u32);
    for (a, wt) in tw.iter().enumerate() {
        let base = (tb + a) * slice;
        for c in 0..combos {
            let mut rest = c;
            let mut w = *wt;
            let mut flat = 0;
            for (b, wx) in &stencils {
                let k = rest % 4;
                rest /= 4;
                w *= wx[k];
                flat = flat * n + b + k;
            }
            acc += field.samples[base + flat] * w;
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::SpacetimeGrid;

    #[test]
    fn reproduces_cubics() {
        let stg = SpacetimeGrid::new(1, 2.0, 3.0, 16, 20).unwrap();
        let f = |t: f64, x: f64| Complex64::new(t * t * t - 2.0 * x * x * t + x, x * x * x);
        let mut s = Vec::new();
        for m in 0..16 {
            for j in 0..20 {
                s.push(f(stg.t(m), stg.x(j)));
            }
        }
        let field = SpacetimeField::new(stg, s).unwrap();
        for &(t, x) in &[(0.1, 0.2), (-1.3, 2.1), (1.4, -2.2)] {
            let got = sample(&field, t, &[x]).unwrap();
            assert!((got - f(t, x)).norm() < 1e-10);
        }
        assert!(sample(&field, 1.99, &[3.5]).is_none());
    }

    #[test]
    fn exact_at_nodes() {
        let w = lagrange4(5.0, 10).unwrap();
        assert_eq!(w, (4, [0.0, 1.0, 0.0, 0.0]));
        assert_eq!(lagrange4(0.0, 10).unwrap(), (0, [1.0, 0.0, 0.0, 0.0]));
        assert_eq!(lagrange4(9.0, 10).unwrap().0, 6);
        assert!(lagrange4(-0.5, 10).is_none());
        assert!(lagrange4(9.5, 10).is_none());
    }
}
