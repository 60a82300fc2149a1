//! Values computed outside this crate (exact rational arithmetic, or direct
//! summation in an independent script) and frozen here.

use approx::{assert_abs_diff_eq, assert_relative_eq};
use num_rational::Ratio;
use vibfilter::lattice::{build_thermal_lattice, required_grid_radius};
use vibfilter::oscillator::exact::relative_interaction_exact;
use vibfilter::oscillator::{InteractionMatrix, DEFAULT_NU_MAX};
use vibfilter::protocol::{merge_protocol, occupancies_of, vacancy_after_merge, OutcomeTable};
use vibfilter::pulse::spectator_error;
use vibfilter::thermo::{defect_probability, occupation_distribution, ThermalParams, TrapParams};

#[test]
fn interaction_entries_match_exact_moments() {
    let q = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1.0).unwrap();
    for nu in 0..=DEFAULT_NU_MAX {
        for mu in 0..=DEFAULT_NU_MAX {
            let exact = relative_interaction_exact(nu.into(), mu.into());
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            assert_abs_diff_eq!(q.rows()[nu as usize][mu as usize], exact, epsilon = 1e-9);
        }
    }
    let r = |a: u8, b: u8| relative_interaction_exact(a.into(), b.into());
    assert_eq!(r(2, 2), Ratio::new(41, 64));
    assert_eq!(r(1, 1), Ratio::new(3, 4));
    assert_eq!(r(0, 2), Ratio::new(3, 4));
    assert_eq!(r(1, 2), Ratio::new(7, 8));
    assert_eq!(r(0, 1), Ratio::from_integer(1));
}

#[test]
fn f32_matrix_tracks_f64() {
    let a = InteractionMatrix::<f32>::compute(2, 1.0).unwrap();
    let b = InteractionMatrix::<f64>::closed_form(2, 1.0).unwrap();
    for (ra, rb) in a.rows().iter().zip(b.rows()) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((*x as f64 - y).abs() < 1e-5);
        }
    }
}

#[test]
fn thermal_defect_direct_sum() {
    // independent log-sum over n = 0..59
    let d = occupation_distribution(&ThermalParams::with_default_cap(0.5f64, 0.1).unwrap());
    assert_relative_eq!(defect_probability(&d), 0.013296710964436964, max_relative = 1e-12);
}

#[test]
fn headline_numbers_at_t_0p1() {
    let d = occupation_distribution(&ThermalParams::with_default_cap(0.5f64, 0.1).unwrap());
    // filtering turns the n = 2 weight into a singly occupied site
    let eps = d.vacancy();
    assert_relative_eq!(vacancy_after_merge(eps), 2.0 * eps * eps - eps.powi(3), max_relative = 1e-15);
    assert!((8.0e-5..9.5e-5).contains(&vacancy_after_merge(eps)));
}

#[test]
fn default_trap_total_atom_count() {
    let th = ThermalParams::with_default_cap(2.0, 0.2).unwrap();
    let trap = TrapParams::rubidium87();
    assert_eq!(required_grid_radius(&th, &trap), 21);
    let field = build_thermal_lattice(&th, &trap, 30).unwrap();
    // direct summation over the same 61 x 61 grid
    assert_relative_eq!(field.total_atoms(), 1432.5628480049654, max_relative = 1e-12);
}

#[test]
fn spectator_regression() {
    let chi = std::f64::consts::PI / 0.007;
    let e = spectator_error(chi, 0.125, 1000.0, 0.007).unwrap();
    assert_relative_eq!(e, 1.4710474575563035e-4, max_relative = 1e-12);
}

#[test]
fn outcome_table_rows() {
    let m = InteractionMatrix::<f64>::compute(DEFAULT_NU_MAX, 1000.0).unwrap();
    let expected = [0, 0, 1, 1, 0, 1, 1, 1];
    for (idx, &n) in expected.iter().enumerate() {
        let out = merge_protocol(occupancies_of(idx), &m).unwrap();
        assert_eq!(out.middle_final.len(), n, "{:?}", occupancies_of(idx));
    }
    let table = OutcomeTable::compute(&m).unwrap();
    for eps in [0.01, 0.1, 0.3] {
        assert_abs_diff_eq!(table.merged_vacancy(eps, eps, eps), vacancy_after_merge(eps), epsilon = 1e-12);
    }
}
