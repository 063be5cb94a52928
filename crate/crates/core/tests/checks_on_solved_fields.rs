//! Checks evaluated on solved potentials: gradient limits, merge criteria,
//! glued structure, and the square battery at a coarse development
//! resolution. The acceptance suite repeats the decisive runs at the pinned
//! resolutions.

use once_cell::sync::Lazy;
use ringflow::checks::{
    cl_criterion, gradient_bounds_check, hr_glued_check, inner_limit_check,
    outer_lower_bound_check, run_standard_checks, square_suite, theorem_single_check,
    SquareSuiteParams, VerdictStatus,
};
use ringflow::error::Error;
use ringflow::field::{build_grid, gradient, ScalarField, VectorField};
use ringflow::geometry::{ConvexBody, ConvexRing};
use ringflow::solver::{solve_infinity, SolveParams};
use ringflow::Vec2;

const H: f64 = 1.0 / 64.0;

fn solve(ring: ConvexRing) -> (ScalarField, VectorField) {
    let grid = build_grid(&ring, H, H).unwrap();
    let u = solve_infinity(&grid, &SolveParams { tol_res: 1e-9, ..Default::default() }).unwrap();
    let g = gradient(&u);
    (u, g)
}

static SQUARE: Lazy<(ScalarField, VectorField)> = Lazy::new(|| {
    solve(
        ConvexRing::new(
            ConvexBody::rectangle(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0)),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap(),
    )
});

static DISK: Lazy<(ScalarField, VectorField)> = Lazy::new(|| {
    solve(ConvexRing::new(ConvexBody::disk(Vec2::ZERO, 1.0), ConvexBody::point(0.0, 0.0)).unwrap())
});

static ELLIPSE: Lazy<(ScalarField, VectorField)> = Lazy::new(|| {
    solve(
        ConvexRing::new(
            ConvexBody::ellipse(Vec2::ZERO, 1.5, 1.0, 0.0),
            ConvexBody::point(0.0, 0.0),
        )
        .unwrap(),
    )
});

static HEXAGON: Lazy<(ScalarField, VectorField)> = Lazy::new(|| {
    let verts: Vec<Vec2> = (0..6)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 6.0;
            Vec2::new(1.5 * t.cos(), 1.5 * t.sin())
        })
        .collect();
    solve(ConvexRing::new(ConvexBody::polygon(verts), ConvexBody::point(0.0, 0.0)).unwrap())
});

fn measured(v: &ringflow::checks::Verdict, key: &str) -> f64 {
    v.measured
        .iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("missing measurement {key} in {v:?}"))
        .1
}

#[test]
fn inner_limit_examples() {
    for (name, (u, g)) in [("ellipse", &*ELLIPSE), ("disk", &*DISK), ("square", &*SQUARE)] {
        let v = inner_limit_check(u, g).unwrap();
        assert!(v.passed(), "{name}: {v:?}");
        let mean = measured(&v, "window_mean");
        assert!((mean - 1.0).abs() <= 0.1, "{name} window mean {mean}");
    }
}

#[test]
fn outer_lower_bound_examples() {
    for (name, (u, g)) in [("square", &*SQUARE), ("disk", &*DISK)] {
        let v = outer_lower_bound_check(u, g);
        assert!(v.passed(), "{name}: {v:?}");
    }
}

#[test]
fn gradient_bounds_on_solved_square() {
    let (u, g) = &*SQUARE;
    let v = gradient_bounds_check(u, g);
    assert!(v.passed(), "{v:?}");
    assert!(measured(&v, "min_speed") > 0.0);
    assert!(measured(&v, "max_speed") <= 1.0 + 16.0 * H);
}

#[test]
fn cl_criterion_at_square_corner() {
    let (u, g) = &*SQUARE;
    let (limits, verdict) = cl_criterion(u, g, Vec2::new(1.0, -1.0));
    assert!(limits.alpha <= 0.2, "alpha {}", limits.alpha);
    assert!(limits.beta >= 0.8, "beta {}", limits.beta);
    assert_eq!(verdict.status, VerdictStatus::Pass, "{verdict:?}");
}

#[test]
fn cl_criterion_not_triggered_on_disk() {
    let (u, g) = &*DISK;
    let (limits, verdict) = cl_criterion(u, g, Vec2::new(0.0, -1.0));
    // Smooth boundary point of the stadium: cap and floor agree within 2%.
    assert!(
        (limits.alpha - limits.beta).abs() <= 0.02 * limits.beta,
        "alpha {} vs beta {}",
        limits.alpha,
        limits.beta
    );
    assert_eq!(verdict.status, VerdictStatus::ReportOnly, "{verdict:?}");
}

#[test]
fn cl_criterion_at_hexagon_vertex() {
    let (u, g) = &*HEXAGON;
    let (limits, verdict) = cl_criterion(u, g, Vec2::new(1.5, 0.0));
    assert!(limits.alpha < limits.beta, "alpha {} beta {}", limits.alpha, limits.beta);
    assert_eq!(verdict.status, VerdictStatus::Pass, "{verdict:?}");
}

#[test]
fn theorem_single_on_ellipse_and_square() {
    let (u, g) = &*ELLIPSE;
    let v = theorem_single_check(u, g).unwrap();
    assert!(v.passed(), "{v:?}");

    let (u, g) = &*SQUARE;
    let v = theorem_single_check(u, g).unwrap();
    assert!(v.passed(), "{v:?}");
}

#[test]
fn theorem_single_skips_stadium() {
    let (u, g) = &*DISK;
    assert!(matches!(theorem_single_check(u, g), Err(Error::IsAStadium)));
}

#[test]
fn glued_structure_on_sharp_rectangle() {
    let ring = ConvexRing::new(
        ConvexBody::rectangle(Vec2::new(-2.0, -1.0), Vec2::new(2.0, 1.0)),
        ConvexBody::segment(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)),
    )
    .unwrap();
    let verdicts =
        hr_glued_check(&ring, H, H, &SolveParams { tol_res: 1e-9, ..Default::default() }).unwrap();
    assert_eq!(verdicts.len(), 3);
    for v in &verdicts {
        assert!(v.passed(), "{v:?}");
    }
    // The sharp rectangle is not a stadium, so the merge branch must have
    // fired (assertive, not report-only).
    assert_eq!(verdicts[2].status, VerdictStatus::Pass);
}

#[test]
fn glued_structure_on_capsule_stadium() {
    // Polygonal capsule: the true stadium of the segment. The merge branch
    // is skipped and reported.
    let mut verts = Vec::new();
    let arc = 64;
    for i in 0..=arc {
        let t = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / arc as f64;
        verts.push(Vec2::new(1.0 + t.cos(), t.sin()));
    }
    for i in 0..=arc {
        let t = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / arc as f64;
        verts.push(Vec2::new(-1.0 + t.cos(), t.sin()));
    }
    verts.dedup_by(|p, q| p.dist(*q) < 1e-9);
    if verts.first().zip(verts.last()).map(|(f, l)| f.dist(*l) < 1e-9) == Some(true) {
        verts.pop();
    }
    let ring = ConvexRing::new(
        ConvexBody::polygon(verts),
        ConvexBody::segment(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)),
    )
    .unwrap();
    let verdicts =
        hr_glued_check(&ring, H, H, &SolveParams { tol_res: 1e-9, ..Default::default() }).unwrap();
    assert!(verdicts[0].passed(), "{:?}", verdicts[0]);
    assert!(verdicts[1].passed(), "{:?}", verdicts[1]);
    assert_eq!(verdicts[2].status, VerdictStatus::ReportOnly, "{:?}", verdicts[2]);
}

#[test]
fn glued_structure_degenerates_to_point_case() {
    // Tiny segment: the glued structure collapses toward the one-point ring.
    let a = 0.05;
    let ring = ConvexRing::new(
        ConvexBody::rectangle(Vec2::new(-1.0 - a, -1.0), Vec2::new(1.0 + a, 1.0)),
        ConvexBody::segment(Vec2::new(-a, 0.0), Vec2::new(a, 0.0)),
    )
    .unwrap();
    let verdicts =
        hr_glued_check(&ring, H, H, &SolveParams { tol_res: 1e-9, ..Default::default() }).unwrap();
    assert!(verdicts[0].passed(), "{:?}", verdicts[0]);
    assert!(verdicts[1].passed(), "{:?}", verdicts[1]);
}

#[test]
fn glued_check_rejects_off_ridge_segments() {
    let ring = ConvexRing::new(
        ConvexBody::rectangle(Vec2::new(-2.0, -1.0), Vec2::new(2.0, 1.0)),
        ConvexBody::segment(Vec2::new(-1.0, 0.3), Vec2::new(1.0, 0.3)),
    )
    .unwrap();
    assert!(matches!(
        hr_glued_check(&ring, H, H, &SolveParams::default()),
        Err(Error::GammaNotOnRidge(_))
    ));
}

#[test]
fn square_suite_runs_at_development_resolution() {
    let (u, g) = &*SQUARE;
    let suite = SquareSuiteParams { tol_res: 1e-9, ..Default::default() };
    let verdicts = square_suite(u, g, &suite).unwrap();
    // Structure: the assertive verdicts plus two report-only diagnostics.
    let names: Vec<&str> = verdicts.iter().map(|v| v.name.as_str()).collect();
    for expected in [
        "sandwich-inequality",
        "median-linearity",
        "corner-gradient-flatness",
        "diagonal-speed-monotone",
        "corner-window-merges",
        "origin-window-merges",
        "side-seed-merges",
        "dihedral-symmetry",
        "merge-diagonal-distance",
        "log-gradient-floor",
    ] {
        assert!(names.contains(&expected), "missing verdict {expected}");
    }
    for v in &verdicts {
        if v.name == "dihedral-symmetry" || v.name == "median-linearity" {
            assert!(v.passed(), "{v:?}");
        }
    }
}

#[test]
fn square_suite_rejects_wrong_fixture() {
    let (u, g) = &*DISK;
    assert!(matches!(
        square_suite(u, g, &SquareSuiteParams::default()),
        Err(Error::WrongFixture(_))
    ));
}

#[test]
fn asymmetric_field_fails_the_symmetry_verdict() {
    let (u, _) = &*SQUARE;
    let mut bad = u.clone();
    // Bump one off-center node.
    let grid = bad.grid();
    let (i, j) = grid
        .interior_indices()
        .into_iter()
        .find(|&(i, j)| {
            let p = grid.pos(i, j);
            p.dist(Vec2::new(0.5, 0.25)) < 2.0 * H
        })
        .unwrap();
    let k = j * u.grid().nx() + i;
    bad.values_mut()[k] += 1e-3;
    let g = gradient(&bad);
    let verdicts = square_suite(&bad, &g, &SquareSuiteParams::default()).unwrap();
    let sym = verdicts.iter().find(|v| v.name == "dihedral-symmetry").unwrap();
    assert_eq!(sym.status, VerdictStatus::Fail);
}

#[test]
fn standard_battery_on_disk_passes() {
    let (u, g) = &*DISK;
    let sparams = SolveParams { tol_res: 1e-9, ..Default::default() };
    let verdicts = run_standard_checks(u, g, &sparams, 20, 7);
    for v in &verdicts {
        assert!(v.passed(), "{v:?}");
    }
    // Reproducibility, bit for bit.
    let again = run_standard_checks(u, g, &sparams, 20, 7);
    assert_eq!(serde_json::to_string(&verdicts).unwrap(), serde_json::to_string(&again).unwrap());
}
