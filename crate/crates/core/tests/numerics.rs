mod common;

use mallows_lcs::density::{u, u_partial_bounds_check, u_range};
use mallows_lcs::variational::{
    jbar_diag, jbar_diag_closed, jbar_report, midpoint_dominance, CellBounds, DEFAULT_SAMPLES,
};
use mallows_lcs::{
    jbar_closed, jbar_grid, j_functional, rho_diag_closed, DensityField, DensityField32, MonotonePath, Rect64,
};

use common::simpson;

#[test]
fn rho_integrates_to_one_along_rows_and_columns() {
    let f = DensityField::new(1.0, -2.0).unwrap();
    for x in [0.0, 0.13, 0.5, 0.77, 1.0] {
        let row = simpson(0.0, 1.0, 400, |y| f.rho(x, y).unwrap());
        let col = simpson(0.0, 1.0, 400, |y| f.rho(y, x).unwrap());
        assert!((row - 1.0).abs() < 1e-9, "row at {x}: {row}");
        assert!((col - 1.0).abs() < 1e-9, "column at {x}: {col}");
    }
}

#[test]
fn rectangle_mass_matches_simpson_and_is_additive() {
    let f = DensityField::new(2.0, 1.5).unwrap();
    let r = Rect64::new(0.1, 0.6, 0.2, 0.9).unwrap();
    let oracle = simpson(0.1, 0.6, 120, |x| simpson(0.2, 0.9, 120, |y| f.rho(x, y).unwrap()));
    assert!((f.rho_rect(&r) - oracle).abs() < 1e-9);

    let left = Rect64::new(0.1, 0.35, 0.2, 0.9).unwrap();
    let right = Rect64::new(0.35, 0.6, 0.2, 0.9).unwrap();
    assert!((f.rho_rect(&left) + f.rho_rect(&right) - f.rho_rect(&r)).abs() < 1e-12);
    assert!((f.rho_rect(&Rect64::unit()) - 1.0).abs() < 1e-12);
}

#[test]
fn diagonal_matches_closed_form() {
    for beta in [-4.0f64, -0.5, 0.5, 2.0, 5.0] {
        let f = DensityField::new(beta, beta).unwrap();
        for x in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let (a, b) = (f.rho(x, x).unwrap(), rho_diag_closed(x, beta).unwrap());
            assert!((a - b).abs() < 1e-11 * b, "β={beta} x={x}: {a} vs {b}");
        }
    }
}

#[test]
fn u_stays_in_its_band() {
    for beta in [-40.0f64, -3.0, 0.0, 0.7, 8.0, 40.0] {
        let (lo, hi) = u_range(beta);
        for i in 0..=40 {
            for j in 0..=40 {
                let v = u(i as f64 / 40.0, j as f64 / 40.0, beta).unwrap();
                assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12), "β={beta}: {v}");
            }
        }
        assert!(u_partial_bounds_check(beta, 60).unwrap().passes, "β={beta}");
    }
}

#[test]
fn closed_form_is_even() {
    for beta in [0.3f64, 1.0, 2.0, 7.5] {
        assert!((jbar_closed(beta) - jbar_closed(-beta)).abs() < 1e-10);
    }
    assert_eq!(jbar_closed(0.0), 1.0);
    // J̄ grows with |β|: ρ piles onto the diagonal
    assert!(jbar_closed(1.0) > 1.0 && jbar_closed(2.0) > jbar_closed(1.0));
}

#[test]
fn diagonal_energy_agrees_with_closed_form() {
    for beta in [0.5f64, 2.0, 5.0] {
        let f = DensityField::new(beta, beta).unwrap();
        let closed = jbar_closed(beta);
        assert!((jbar_diag(&f) - closed).abs() < 1e-8, "β={beta}");
        assert!((jbar_diag_closed(beta, 256).unwrap() - closed).abs() < 1e-8, "β={beta}");
        let diag = j_functional(&MonotonePath::diagonal(), &f);
        assert!((diag - closed).abs() < 1e-6, "β={beta}");
    }
}

#[test]
fn flat_brackets_narrow_with_the_grid() {
    let f = DensityField::new(0.0, 0.0).unwrap();
    for (k, width) in [(16, 0.2), (64, 0.06)] {
        let b = jbar_grid(&f, k, k).unwrap();
        assert!(b.upper >= 1.0 && 1.0 >= b.lower - 1e-9, "K={k}: {b:?}");
        assert!(b.upper - b.lower < width, "K={k}: width {}", b.upper - b.lower);
    }
}

#[test]
fn brackets_contain_the_closed_form() {
    for beta in [-1.0f64, 1.0, 2.0] {
        let f = DensityField::new(beta, beta).unwrap();
        let b = jbar_grid(&f, 32, 8).unwrap();
        let closed = jbar_closed(beta);
        assert!(b.lower <= closed + 1e-9 && closed <= b.upper, "β={beta}: {b:?} vs {closed}");
    }
}

#[test]
fn upper_bound_tightens_under_refinement() {
    let f = DensityField::new(2.0, 2.0).unwrap();
    let coarse = jbar_grid(&f, 32, 8).unwrap();
    let fine = jbar_grid(&f, 64, 16).unwrap();
    assert!(fine.upper <= coarse.upper + 5e-3, "{} vs {}", fine.upper, coarse.upper);
}

#[test]
fn upper_bound_dominates_the_diagonal() {
    for (b, g) in [(2.0, -3.0), (-1.0, 4.0), (3.0, 0.5)] {
        let f = DensityField::new(b, g).unwrap();
        let bracket = jbar_grid(&f, 32, 8).unwrap();
        let diag = j_functional(&MonotonePath::diagonal(), &f);
        assert!(bracket.upper >= diag, "β={b} γ={g}");
        assert!(bracket.lower <= bracket.upper);
    }
}

#[test]
fn cell_bounds_dominate_the_density() {
    let f = DensityField::new(3.0, -2.0).unwrap();
    let (k, l) = (8, 4);
    let cells = CellBounds::new(&f, k, l, DEFAULT_SAMPLES).unwrap();
    let kl = (k * l) as f64;
    for col in 0..k {
        for level in 0..k * l {
            let m = cells.cell(col, level);
            for a in 0..=6 {
                for c in 0..=6 {
                    // interior points of ((col)/K, (col+1)/K] × (level/KL, (level+1)/KL]
                    let x = (col as f64 + (a as f64 + 0.5) / 7.0) / k as f64;
                    let y = (level as f64 + (c as f64 + 0.5) / 7.0) / kl;
                    assert!(f.rho(x, y).unwrap() <= m, "cell ({col}, {level})");
                }
            }
        }
    }
}

#[test]
fn midpoint_dominance_on_symmetric_fields() {
    for beta in [0.0f64, 1.0, -2.0, 4.0] {
        let f = DensityField::new(beta, beta).unwrap();
        let report = midpoint_dominance(&f, 41).unwrap();
        assert!(report.holds, "β={beta}: {report:?}");
        assert!((report.diagonal_value.unwrap() - jbar_closed(beta)).abs() < 1e-8);
    }
    // asymmetric fields are only reported
    let f = DensityField::new(2.0, -3.0).unwrap();
    let report = midpoint_dominance(&f, 41).unwrap();
    eprintln!("β=2 γ=−3: holds={} worst ratio {:.4}", report.holds, report.worst_ratio);
    assert!(report.worst_ratio.is_finite());
}

#[test]
fn single_precision_field_tracks_double() {
    let f32_field = DensityField32::new(1.5f32, -0.5f32).unwrap();
    let f64_field = DensityField::new(1.5, -0.5).unwrap();
    for (x, y) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)] {
        let a = f32_field.rho(x as f32, y as f32).unwrap() as f64;
        let b = f64_field.rho(x, y).unwrap();
        assert!((a - b).abs() < 1e-4 * b, "({x}, {y}): {a} vs {b}");
    }
}

#[test]
fn report_carries_closed_form_only_when_symmetric() {
    let sym = jbar_report(&DensityField::new(1.0, 1.0).unwrap(), 16, 4).unwrap();
    assert!(sym.closed_form.is_some() && sym.midpoint_dominance);
    let asym = jbar_report(&DensityField::new(1.0, -1.0).unwrap(), 16, 4).unwrap();
    assert!(asym.closed_form.is_none());
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(DensityField::new(f64::NAN, 0.0).is_err());
    assert!(DensityField::new(0.0, f64::INFINITY).is_err());
    assert!(DensityField::with_nodes(1.0, 1.0, 4).is_err());
    assert!(u(1.2, 0.5, 1.0).is_err());
    assert!(rho_diag_closed(0.5, 0.0).is_err());
    let f = DensityField::new(1.0, 1.0).unwrap();
    assert!(f.rho(-0.1, 0.5).is_err());
    assert!(jbar_grid(&f, 0, 4).is_err());
    assert!(jbar_grid(&f, 1000, 1000).is_err());
}
