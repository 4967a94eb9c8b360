//! Browser bindings for a few small parext computations.

use parext_core::extension::{Extender, Term};
use parext_core::grids::{dilate_profile, gaussian_profile};
use parext_core::sequences::{a_p_estimate, dilated_grid, separation_report};
use parext_core::{quotient_pair, Exponents, FrequencyGrid, ParaboloidShift, SpacetimeGrid};
use wasm_bindgen::prelude::*;

const FREQ_HALF_WIDTH: f64 = 10.0;
const FREQ_POINTS: usize = 256;

fn demo_grid() -> std::result::Result<SpacetimeGrid, String> {
    SpacetimeGrid::new(1, 10.0, 20.0, 128, 256).map_err(|e| e.to_string())
}

/// `[quotient, certified_error, target]` for the pair `(f_lambda, f_lambda)` with
/// `f` the unit Gaussian and the second paraboloid shifted to `(tau0, xi0)`.
pub fn dilation_quotient_impl(tau0: f64, xi0: f64, lambda: f64) -> std::result::Result<Vec<f64>, String> {
    if !(lambda > 0.0 && lambda <= 4.0) {
        return Err("lambda must lie in (0, 4]".into());
    }
    let e = Exponents::new(1, 2.0).map_err(|e| e.to_string())?;
    let grid = FrequencyGrid::new(1, FREQ_HALF_WIDTH, FREQ_POINTS).map_err(|e| e.to_string())?;
    let stg = demo_grid()?;
    let f = gaussian_profile(&grid, &[0.0], 1.0, &[0.0]).map_err(|e| e.to_string())?;
    let fl = dilate_profile(&f, lambda, 2.0).map_err(|e| e.to_string())?;
    let shift = ParaboloidShift::new(tau0, vec![xi0]);
    let r = quotient_pair(&fl, &fl, &shift, &e, &dilated_grid(&stg, lambda)).map_err(|e| e.to_string())?;
    let a_p = a_p_estimate(&e, &grid, &stg).map_err(|e| e.to_string())?;
    Ok(vec![r.quotient, r.certified_error(), e.pair_factor() * a_p.quotient])
}

/// `|E f(t, x) + E_(tau0, xi0) f(t, x)|` on `points` samples of `[-x_half_width, x_half_width]`,
/// for the Gaussian `f` of the given width and center.
pub fn field_modulus_impl(
    width: f64,
    center: f64,
    tau0: f64,
    xi0: f64,
    t: f64,
    x_half_width: f64,
    points: usize,
) -> std::result::Result<Vec<f64>, String> {
    if !(2..=4096).contains(&points) || !(x_half_width > 0.0) {
        return Err("need 2..=4096 points and a positive window".into());
    }
    let grid = FrequencyGrid::new(1, FREQ_HALF_WIDTH, FREQ_POINTS).map_err(|e| e.to_string())?;
    let f = gaussian_profile(&grid, &[center], width, &[0.0]).map_err(|e| e.to_string())?;
    let origin = ParaboloidShift::zero(1);
    let shift = ParaboloidShift::new(tau0, vec![xi0]);
    let ext = Extender::new(&[Term::unit(&f, &origin), Term::unit(&f, &shift)]).map_err(|e| e.to_string())?;
    let dx = 2.0 * x_half_width / points as f64;
    let axis = parext_core::czt::Axis::new(-x_half_width + dx / 2.0, dx, points);
    Ok(ext.slice(t, &[axis]).values.iter().map(|z| z.norm()).collect())
}

/// `[c_estimate, zero_set_offset (NaN when empty), degenerate (0 or 1)]` for the
/// paraboloids with vertices `(tau0, xi0)` and `(tau_n, xi_n)`.
pub fn separation_impl(
    tau0: f64,
    xi0: f64,
    tau_n: f64,
    xi_n: f64,
    s: f64,
    r: f64,
) -> std::result::Result<Vec<f64>, String> {
    let grid = FrequencyGrid::new(1, FREQ_HALF_WIDTH, 2048).map_err(|e| e.to_string())?;
    let rep = separation_report(
        &ParaboloidShift::new(tau0, vec![xi0]),
        &ParaboloidShift::new(tau_n, vec![xi_n]),
        s,
        r,
        &grid,
    )
    .map_err(|e| e.to_string())?;
    Ok(vec![rep.c_estimate, rep.zero_set_offset.unwrap_or(f64::NAN), if rep.degenerate { 1.0 } else { 0.0 }])
}

#[wasm_bindgen]
pub fn dilation_quotient(tau0: f64, xi0: f64, lambda: f64) -> Result<Vec<f64>, JsValue> {
    dilation_quotient_impl(tau0, xi0, lambda).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn field_modulus(
    width: f64,
    center: f64,
    tau0: f64,
    xi0: f64,
    t: f64,
    x_half_width: f64,
    points: usize,
) -> Result<Vec<f64>, JsValue> {
    field_modulus_impl(width, center, tau0, xi0, t, x_half_width, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn separation(tau0: f64, xi0: f64, tau_n: f64, xi_n: f64, s: f64, r: f64) -> Result<Vec<f64>, JsValue> {
    separation_impl(tau0, xi0, tau_n, xi_n, s, r).map_err(|e| JsValue::from_str(&e))
}
