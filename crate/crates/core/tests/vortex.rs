use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use hopf_atlas::polyfield::{ComplexPoly, SymmetricFamily};
use hopf_atlas::quaddiff::{Foliation, TraceConfig};
use hopf_atlas::vortex::{
    decay_fit, extract_nu, horizontal_image_length, measure_alpha, solve_vortex, solve_vortex_poly,
    vertical_image_length, vertical_leaf_at, AlphaMode, FieldKind, PullbackMetric, SolverConfig, VortexError,
    VortexSolution,
};
use hopf_atlas::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fam(m: u32, a: f64, b: f64) -> SymmetricFamily {
    SymmetricFamily::new(m, a, b).unwrap()
}

fn cfg(radius: f64, n: usize) -> SolverConfig {
    SolverConfig {
        radius,
        grid_points: Some(n),
        ..SolverConfig::default()
    }
}

fn solve(m: u32, a: f64, b: f64, radius: f64, n: usize) -> VortexSolution {
    solve_vortex(&fam(m, a, b), &cfg(radius, n)).unwrap()
}

/// (m = 1, b = 1) on a 257² grid, shared by the cheaper checks.
fn m1_b1() -> &'static VortexSolution {
    static SOL: OnceLock<VortexSolution> = OnceLock::new();
    SOL.get_or_init(|| solve(1, 0.0, 1.0, 6.0, 257))
}

#[test]
fn constant_differential_is_solved_exactly() {
    let sol = solve_vortex_poly(&ComplexPoly::constant(c(1.0, 0.0)), &SolverConfig::default()).unwrap();
    assert!(sol.iterations() <= 3);
    assert!(sol.h_field().iter().all(|h| (h - 1.0).abs() < 1e-10));
    assert!(sol.w_field().iter().all(|w| w.abs() < 1e-10));
}

#[test]
fn newton_converges_for_the_family() {
    let sol = m1_b1();
    assert!(sol.residual() <= 1e-8);
    assert!(sol.iterations() <= 20);
    // w ≥ 0 up to discretization error (it shrinks with h)
    let lowest = sol.w_field().into_iter().filter(|w| w.is_finite()).fold(f64::INFINITY, f64::min);
    assert!(lowest > -1e-6, "{lowest:e}");
}

#[test]
fn preconditions_are_enforced() {
    let f = fam(1, 0.0, 1.0);
    assert!(matches!(solve_vortex(&f, &cfg(2.0, 129)), Err(VortexError::DomainTooSmall { .. })));
    assert!(matches!(solve_vortex(&f, &cfg(6.0, 17)), Err(VortexError::GridTooCoarse { .. })));
    assert!(SolverConfig::parse("radius = 6\nh = 0.05\nmaxIter = 10\n").is_ok());
    assert!(SolverConfig::parse("radius = -1\n").is_err());
    assert!(SolverConfig::parse("bogus = 1\n").is_err());
}

#[test]
fn binary_export_layout() {
    let sol = solve_vortex_poly(&ComplexPoly::constant(c(1.0, 0.0)), &cfg(3.0, 33)).unwrap();
    let mut bytes = Vec::new();
    sol.write_field(FieldKind::H, &mut bytes).unwrap();
    let u64_at = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let f64_at = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    assert_eq!((u64_at(0), u64_at(1)), (33, 33));
    assert_eq!((f64_at(2), f64_at(3)), (-3.0, -3.0));
    assert!((f64_at(4) - 6.0 / 32.0).abs() < 1e-15);
    assert_eq!(bytes.len(), 8 * (5 + 33 * 33));
    assert!((f64_at(5) - 1.0).abs() < 1e-12);
}

#[test]
fn solution_has_rotational_symmetry() {
    let sol = solve(2, 0.0, 1.0, 6.0, 257);
    let omega = fam(2, 0.0, 1.0).omega();
    let g = sol.grid();
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let z = Complex64::from_polar(0.2 + 3.5 * (k as f64 / 200.0), 0.37 * k as f64);
        let a = g.bilinear(sol.log_h(), z).unwrap();
        let b = g.bilinear(sol.log_h(), omega * z).unwrap();
        worst = worst.max((a - b).abs());
    }
    assert!(worst < 5e-3, "log H differs by {worst:e} under rotation");

    // same-vertex arcs are rotated copies of each other
    let nu = extract_nu(&sol, 3.0).unwrap();
    let same: Vec<f64> = nu.arcs.iter().filter(|a| a.same_vertex).map(|a| a.image_length).collect();
    let spread = same.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - same.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-4 * same[0], "{same:?}");
}

#[test]
fn shell_maxima_decay() {
    let fit = decay_fit(m1_b1(), 1.0, 0.25, 1e-7).unwrap();
    assert!(fit.strictly_decreasing(), "{:?}", fit.shells);
    assert!(fit.rate > 0.0);
    assert!(fit.shells.len() >= 10);
}

#[test]
fn horizontal_lengths_approach_twice_the_flat_length() {
    let nu = extract_nu(m1_b1(), 4.0).unwrap();
    let far: Vec<f64> = nu
        .arcs
        .iter()
        .filter(|a| a.min_phi_distance >= 4.0)
        .map(|a| a.image_length / (2.0 * a.phi_length))
        .collect();
    assert!(!far.is_empty());
    for r in far {
        assert!((r - 1.0).abs() < 1e-3, "{r}");
    }
}

#[test]
fn vertical_lengths_decay_and_converge() {
    let sol = m1_b1();
    let zero = sol.quadratic_differential().zeros()[0].root;
    let at = |d: f64, budget: f64| vertical_leaf_at(sol, zero, zero.arg(), d, budget).unwrap().image_length(sol).unwrap();
    let lengths: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 4.0].iter().map(|&d| at(d, 6.0)).collect();
    assert!(lengths.windows(2).all(|w| w[1] < w[0]), "{lengths:?}");
    assert!(lengths[1] / lengths[3] >= E, "{lengths:?}");
    let doubled = at(3.0, 12.0);
    assert!((doubled - lengths[3]).abs() < 0.01 * lengths[3]);
}

#[test]
fn image_lengths_check_the_leaf_kind() {
    let sol = m1_b1();
    let q = sol.quadratic_differential();
    let t = q.trace(c(2.0, 2.5), Foliation::Horizontal, 1, 1.0, &TraceConfig::default()).unwrap();
    assert!(horizontal_image_length(sol, &t).unwrap() > 0.0);
    assert!(matches!(vertical_image_length(sol, &t), Err(VortexError::BadInput(_))));
}

#[test]
fn curvature_tends_to_minus_one_at_second_order() {
    let mut errs = Vec::new();
    for n in [65, 129, 257] {
        let g = PullbackMetric::from_solution(&solve(1, 0.0, 1.0, 6.0, n));
        let (i, j) = g.nearest_node(c(0.0, 0.0)).unwrap();
        assert!(g.grid().node(i, j).norm() < 1e-12);
        errs.push((g.gaussian_curvature_node(i, j).unwrap() + 1.0).abs());
    }
    assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    assert!(errs[2] < 0.05);
}

#[test]
fn nu_converges_under_refinement() {
    let nus: Vec<f64> = [65, 129, 257, 513]
        .iter()
        .map(|&n| extract_nu(&solve(1, 0.0, 1.0, 6.0, n), 2.0).unwrap().nu_hat)
        .collect();
    let diffs: Vec<f64> = nus.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs[0] / diffs[1] >= 2.0 && diffs[1] / diffs[2] >= 2.0, "{nus:?}");
}

#[test]
fn nu_ignores_a() {
    let base = extract_nu(&solve(1, 0.0, 1.0, 7.0, 513), 3.0).unwrap().nu_hat;
    let shifted = extract_nu(&solve(1, 1.0, 1.0, 7.0, 513), 3.0).unwrap().nu_hat;
    assert!((base - shifted).abs() < 1e-3, "{base} vs {shifted}");
    assert!((base - PI / 4.0).abs() < 0.02 * PI / 4.0);
}

#[test]
fn nu_estimates() {
    let nu = extract_nu(m1_b1(), 3.0).unwrap();
    assert!((nu.nu_hat - PI / 4.0).abs() < 0.02 * PI / 4.0, "{}", nu.nu_hat);
    assert!(nu.closure < 1e-8);
    assert_eq!(nu.arcs.len(), 4);

    let flat = extract_nu(&solve(1, 0.0, 0.0, 6.0, 257), 3.0).unwrap();
    assert!(flat.nu_hat.abs() < 0.02);
}

#[test]
fn alpha_examples() {
    let regular = solve(1, 0.0, 0.0, 6.0, 257);
    for mode in [AlphaMode::Formula, AlphaMode::Develop] {
        let a = measure_alpha(&regular, 3.0, mode).unwrap().alpha_hat;
        assert!((a - PI / 2.0).abs() < 0.02, "{mode:?}: {a}");
    }
    let hexagon = solve(2, 0.0, 0.0, 6.0, 257);
    let a = measure_alpha(&hexagon, 3.0, AlphaMode::Formula).unwrap().alpha_hat;
    assert!((a - PI / 3.0).abs() < 0.02, "{a}");

    let target = 2.0 * (-PI / 2.0).exp().atan();
    for mode in [AlphaMode::Formula, AlphaMode::Develop] {
        let a = measure_alpha(m1_b1(), 3.0, mode).unwrap().alpha_hat;
        assert!((a - target).abs() < 0.05 * target, "{mode:?}: {a}");
    }
}

#[test]
fn develop_rejects_the_degenerate_constant_case() {
    let sol = solve_vortex_poly(&ComplexPoly::constant(c(1.0, 0.0)), &SolverConfig::default()).unwrap();
    assert!(matches!(
        measure_alpha(&sol, 3.0, AlphaMode::Develop),
        Err(VortexError::BadInput(_))
    ));
    let g = PullbackMetric::from_solution(&sol);
    let curve: Vec<Complex64> = (0..30).map(|k| c(0.1 * k as f64 - 1.5, 0.2)).collect();
    assert!(matches!(
        hopf_atlas::vortex::develop_curve(&g, &curve, hopf_atlas::hypdisc::DiscPoint::origin(), 0.0),
        Err(VortexError::DegenerateMetric(_))
    ));
}
