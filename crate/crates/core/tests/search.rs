use parext_core::grids::{dilate_profile, gaussian_profile, lp_norm_frequency};
use parext_core::search::{maximize_quotient_pair, SearchOptions, Termination};
use parext_core::sequences::{a_p_estimate, dilated_grid};
use parext_core::*;

fn setup() -> (Exponents, FrequencyProfile, SpacetimeGrid, f64) {
    let e = Exponents::new(1, 2.0).unwrap();
    let grid = FrequencyGrid::new(1, 10.0, 512).unwrap();
    let f = gaussian_profile(&grid, &[0.0], 1.0, &[0.0]).unwrap();
    let stg = SpacetimeGrid::default_1d();
    let target = e.pair_factor() * a_p_estimate(&e, &grid, &stg).unwrap().quotient;
    (e, f, stg, target)
}

fn gap_reached_at(quotients: &[f64], target: f64, gap: f64) -> Option<usize> {
    quotients.iter().position(|q| (target - q) / target <= gap)
}

#[test]
fn shifted_pair_runs_off_the_grid_near_the_bound() {
    let (e, f, stg, target) = setup();
    let shift = ParaboloidShift::new(0.0, vec![1.0]);
    let traj = maximize_quotient_pair(&f, &f, &shift, &e, &stg, &SearchOptions::default()).unwrap();
    assert_eq!(traj.terminated_reason, Termination::GridExhausted);
    assert!(traj.is_ascending(1e-12));
    let first = &traj.iterates[0];
    let last = traj.iterates.last().unwrap();
    assert!(last.symmetry.lambda < first.symmetry.lambda, "profiles should widen");
    let fin = &traj.final_quotient;
    assert!((target - fin.quotient) / target < 0.03, "{} vs {target}", fin.quotient);
    for it in &traj.iterates {
        assert!(it.quotient <= target + fin.certified_error(), "step {} exceeds the bound", it.step);
    }
    let (ff, gg) = traj.final_pair.as_ref().unwrap();
    let split = (lp_norm_frequency(ff, 2.0).unwrap(), lp_norm_frequency(gg, 2.0).unwrap());
    assert!((split.0.powi(2) + split.1.powi(2) - 1.0).abs() < 1e-6);
}

#[test]
fn unshifted_pair_converges_to_the_single_extremizer() {
    let (e, f, stg, target) = setup();
    let grid = f.grid.clone();
    let g = gaussian_profile(&grid, &[0.5], 0.6, &[0.0]).unwrap().scaled(Complex64::from_polar(1.0, 1.0));
    let traj = maximize_quotient_pair(&f, &g, &ParaboloidShift::zero(1), &e, &stg, &SearchOptions::default()).unwrap();
    assert_eq!(traj.terminated_reason, Termination::StepTolerance);
    assert!(traj.is_ascending(1e-12));
    let q = traj.final_quotient.quotient;
    assert!((q - target).abs() < 1e-3, "{q} vs {target}");
    assert!(traj.imbalance < 0.01, "f and g should agree: {}", traj.imbalance);
}

#[test]
fn dilated_start_needs_fewer_iterations() {
    let (e, f, stg, target) = setup();
    let shift = ParaboloidShift::new(0.0, vec![1.0]);
    let base = maximize_quotient_pair(&f, &f, &shift, &e, &stg, &SearchOptions::default()).unwrap();
    let qs: Vec<f64> = base.iterates.iter().map(|i| i.quotient).collect();
    let gap = (target - base.best_quotient()) / target;
    let k_base = gap_reached_at(&qs, target, gap).unwrap();

    let fl = dilate_profile(&f, 0.1, 2.0).unwrap();
    let opts = SearchOptions { max_steps: 20, ..SearchOptions::default() };
    let dil = maximize_quotient_pair(&fl, &fl, &shift, &e, &dilated_grid(&stg, 0.1), &opts).unwrap();
    let qd: Vec<f64> = dil.iterates.iter().map(|i| i.quotient).collect();
    let k_dil = gap_reached_at(&qd, target, gap).expect("dilated start reaches the gap");
    assert!(2 * k_dil < k_base, "{k_dil} vs {k_base}");
    assert!(dil.is_ascending(1e-12));
}
