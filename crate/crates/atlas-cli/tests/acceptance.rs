//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p atlas-cli --test acceptance`.

use std::f64::consts::{E, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use atlas_cli::report::validate;
use hopf_atlas::hypdisc::{endpoint_gap_check, exponential_fit, DiscPoint, FermiCurve, IdealPolygon};
use hopf_atlas::imagelaw::{alpha_of_nu, alpha_other_of_nu, classify_shi_tam, solve_asymptotic_system, AngleFunction};
use hopf_atlas::polyfield::{ComplexPoly, SymmetricFamily};
use hopf_atlas::quaddiff::family_edge_integral;
use hopf_atlas::realtree::measure_edge_numeric;
use hopf_atlas::vortex::{
    decay_fit, develop_curve, extract_nu, measure_alpha, solve_vortex, solve_vortex_poly, vertical_leaf_at,
    AlphaMode, PullbackMetric, SolverConfig, VortexError, VortexSolution,
};
use hopf_atlas::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn family(m: u32, a: f64, b: f64) -> SymmetricFamily {
    SymmetricFamily::new(m, a, b).expect("valid family")
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn within_time(detail: String, took: Duration, limit: f64) -> Verdict {
    if took.as_secs_f64() < limit {
        Ok(format!("{detail}, {}", secs(took)))
    } else {
        Err(format!("{detail}, but took {} (limit {limit}s)", secs(took)))
    }
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for m in 1..=8u32 {
        worst = worst.max((family_edge_integral(m) - PI / (2.0 * (m as f64 + 1.0))).abs());
    }
    let took = t.elapsed();
    if worst >= 1e-10 {
        return Err(format!("max error {worst:.3e} >= 1e-10"));
    }
    within_time(format!("max error {worst:.3e}"), took, 1.0)
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for m in 1..=6u32 {
        for a in [-3.0, 0.0, 7.0] {
            for b in [0.5, -0.5, 2.0, -2.0] {
                let f = family(m, a, b);
                for k in 0..=m as usize {
                    let edge = measure_edge_numeric(&f, k).map_err(|e| format!("m={m} a={a} b={b} k={k}: {e}"))?;
                    worst = worst.max((edge - f.nu()).abs());
                    count += 1;
                }
            }
        }
    }
    let took = t.elapsed();
    if worst >= 1e-8 {
        return Err(format!("max error {worst:.3e} >= 1e-8 over {count} edges"));
    }
    within_time(format!("{count} edges, max error {worst:.3e}"), took, 10.0)
}

fn criterion_3() -> Verdict {
    let (mut system, mut branch): (f64, f64) = (0.0, 0.0);
    for m in 1..=50u32 {
        for j in 0..50 {
            let nu = 0.1 * j as f64;
            let alpha = alpha_of_nu(m, nu);
            let solved = solve_asymptotic_system(m, nu).map_err(|e| format!("m={m} ν={nu}: {e}"))?;
            system = system.max((alpha - solved.alpha).abs());
            let sum = alpha + alpha_other_of_nu(m, nu);
            branch = branch.max((sum - 2.0 * PI / (m as f64 + 1.0)).abs());
        }
    }
    let detail = format!("closed form vs system {system:.3e}, branch identity {branch:.3e}");
    if system < 1e-10 && branch < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Verdict {
    let mut bs = vec![0.0];
    for k in 0..=6 {
        let x = 10f64.powi(-k);
        bs.extend([x, -x]);
    }
    for &b in &bs {
        let regular = classify_shi_tam(&family(1, 0.0, b)).map_err(|e| e.to_string())?;
        if regular != (b == 0.0) {
            return Err(format!("b = {b:e} classified as {regular}"));
        }
    }
    let square = IdealPolygon::regular(4).map_err(|e| e.to_string())?.normalize();
    let poly = AngleFunction::new(1).polygon(0.0).map_err(|e| e.to_string())?.normalize();
    let dev = poly.deviation(&square);
    let detail = format!("{} values of b classified, square deviation {dev:.1e}", bs.len());
    if dev < 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut nearest_regular = f64::INFINITY;
    for m in 1..=4u32 {
        let angle = AngleFunction::new(m);
        let regular = IdealPolygon::regular(2 * m as usize + 2).map_err(|e| e.to_string())?.normalize();
        for _ in 0..100 {
            let mut b: f64 = 0.0;
            while b.abs() < 1e-3 {
                b = rng.gen_range(-4.0..4.0);
            }
            let plus = angle.polygon(b).map_err(|e| e.to_string())?.normalize();
            let minus = angle.polygon(-b).map_err(|e| e.to_string())?.normalize();
            worst = worst.max(plus.deviation(&minus));
            nearest_regular = nearest_regular.min(plus.deviation(&regular));
        }
        let at_zero = angle.polygon(0.0).map_err(|e| e.to_string())?.normalize();
        if !at_zero.matches(&regular, 1e-9) {
            return Err(format!("m={m}: b = 0 does not give the regular polygon"));
        }
    }
    let detail = format!(
        "±b deviation {worst:.1e}; closest approach of b ≠ 0 to the regular polygon {nearest_regular:.1e}"
    );
    if worst < 1e-9 && nearest_regular > 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Verdict {
    let t = Instant::now();
    let rs = [2.0, 4.0, 8.0, 16.0];
    // finer steps drown sup |k_g| ~ 1e-7 at R = 16 in second-difference roundoff
    let step = 5e-3;
    let hypercycle = endpoint_gap_check(|r| FermiCurve::hypercycle((-r).exp(), r, step), &rs).map_err(|e| e.to_string())?;
    let sinusoid = endpoint_gap_check(
        |r| FermiCurve::from_height(move |s| (-r).exp() * s.sin(), move |s| (-r).exp() * s.cos(), r, step),
        &rs,
    )
    .map_err(|e| e.to_string())?;
    let geodesic =
        endpoint_gap_check(|r| FermiCurve::from_height(|_| 0.0, |_| 0.0, r, step), &rs).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    let last = |rep: &hopf_atlas::hypdisc::GapReport| rep.rows.last().map(|r| r.relative_gap()).unwrap_or(f64::NAN);
    let geo_gap = geodesic.rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max);
    let detail = format!(
        "(L-d)/R at R=16: hypercycle {:.1e}, sinusoid {:.1e}; geodesic gap {geo_gap:.1e}",
        last(&hypercycle),
        last(&sinusoid)
    );
    if !hypercycle.relative_gap_decreasing() || !sinusoid.relative_gap_decreasing() {
        return Err(format!("{detail}; not monotone"));
    }
    if geo_gap >= 1e-8 || hypercycle.curvature_rate.is_none() || sinusoid.curvature_rate.is_none() {
        return Err(detail);
    }
    within_time(detail, took, 5.0)
}

fn criterion_7() -> Verdict {
    let sol = solve_vortex_poly(&ComplexPoly::constant(Complex64::new(1.0, 0.0)), &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    let err = sol.h_field().iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max);
    let detail = format!("‖H-1‖∞ = {err:.1e} after {} Newton steps", sol.iterations());
    if err < 1e-10 && sol.iterations() <= 3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid_512(radius: f64) -> SolverConfig {
    SolverConfig {
        radius,
        grid_points: Some(512),
        ..SolverConfig::default()
    }
}

fn criterion_8(sol: &VortexSolution) -> Verdict {
    let fit = decay_fit(sol, 1.0, 0.25, 1e-7).map_err(|e| e.to_string())?;
    let detail = format!("rate {:.3}, R² {:.4}, {} shells", fit.rate, fit.r_squared, fit.shells.len());
    if fit.rate > 0.0 && fit.r_squared >= 0.98 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9(sol: &VortexSolution) -> Verdict {
    let arcs = extract_nu(sol, 4.5).map_err(|e| e.to_string())?.arcs;
    let ratios: Vec<f64> = arcs
        .iter()
        .filter(|a| a.min_phi_distance >= 4.0)
        .map(|a| a.image_length / (2.0 * a.phi_length))
        .collect();
    if ratios.is_empty() {
        return Err("no marked arc stays at Φ-distance ≥ 4".into());
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));

    let zero = sol.quadratic_differential().zeros()[0].root;
    let ds = [1.0, 1.5, 2.0, 3.0, 4.0];
    let mut lengths = Vec::new();
    for d in ds {
        let probe = vertical_leaf_at(sol, zero, zero.arg(), d, 6.0).map_err(|e| e.to_string())?;
        lengths.push(probe.image_length(sol).map_err(|e| e.to_string())?);
    }
    let decreasing = lengths.windows(2).all(|w| w[1] < w[0]);
    let (rate, _, r2) = exponential_fit(&ds, &lengths);
    let factor = lengths[1] / lengths[3];
    let detail = format!(
        "horizontal ratio in [{lo:.6}, {hi:.6}] over {} arcs; vertical rate {rate:.2} (R² {r2:.3}), 1.5→3 factor {factor:.1}",
        ratios.len()
    );
    if lo >= 0.999 && hi <= 1.001 && decreasing && rate > 0.0 && factor >= E {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10(sol: &VortexSolution, started: Instant) -> Verdict {
    let target_nu = PI / 4.0;
    let target_alpha = 2.0 * (-PI / 2.0).exp().atan();
    let measured = measure_alpha(sol, 4.0, AlphaMode::Formula).map_err(|e| e.to_string())?;
    let nu = measured.nu_hat.unwrap_or(f64::NAN);
    let nu_err = (nu - target_nu).abs() / target_nu;
    let alpha_err = (measured.alpha_hat - target_alpha).abs() / target_alpha;

    let m2 = family(2, 0.0, 1.0);
    let sol2 = solve_vortex(&m2, &grid_512(6.0)).map_err(|e| e.to_string())?;
    let nu2 = extract_nu(&sol2, 3.0).map_err(|e| e.to_string())?.nu_hat;
    let nu2_err = (nu2 - m2.nu()).abs() / m2.nu();
    let took = started.elapsed();
    let detail = format!(
        "m=1: ν̂ {nu:.6} (rel {nu_err:.1e}), α̂ {:.6} (rel {alpha_err:.1e}); m=2: ν̂ {nu2:.6} (rel {nu2_err:.1e})",
        measured.alpha_hat
    );
    if nu_err < 0.02 && alpha_err < 0.05 && nu2_err < 0.05 {
        within_time(detail, took, 600.0)
    } else {
        Err(detail)
    }
}

fn criterion_11() -> Verdict {
    let sol = solve_vortex(&family(1, 0.0, 0.0), &grid_512(6.0)).map_err(|e| e.to_string())?;
    let developed = measure_alpha(&sol, 4.0, AlphaMode::Develop).map_err(|e| e.to_string())?;
    let err = (developed.alpha_hat - PI / 2.0).abs();

    let flat = solve_vortex_poly(&ComplexPoly::constant(Complex64::new(1.0, 0.0)), &SolverConfig::default())
        .map_err(|e| e.to_string())?;
    let metric = PullbackMetric::from_solution(&flat);
    let curve: Vec<Complex64> = (0..20).map(|k| Complex64::new(0.05 * k as f64, 0.0)).collect();
    let degenerate = matches!(
        develop_curve(&metric, &curve, DiscPoint::origin(), 0.0),
        Err(VortexError::DegenerateMetric(_))
    );
    let detail = format!("developed α̂ {:.6} (error {err:.1e}); P ≡ 1 degenerate: {degenerate}", developed.alpha_hat);
    if err <= 0.05 && degenerate {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_atlas(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), text))
}

fn criterion_12() -> Verdict {
    let runs: [&[&str]; 6] = [
        &["predict", "--m", "1"],
        &["predict", "--m", "2", "--a", "5", "--b", "3"],
        &["predict", "--m", "4", "--b", "-1.25"],
        &["tree", "--m", "2", "--b", "3"],
        &["tree", "--m", "1", "--b", "2"],
        &["tree", "--m", "3", "--b", "0", "--foliation", "horizontal"],
    ];
    for args in runs {
        let (code1, first) = run_atlas(args)?;
        let (code2, second) = run_atlas(args)?;
        if code1 != 0 || code2 != 0 {
            return Err(format!("{args:?} exited with {code1}/{code2}"));
        }
        if first != second {
            return Err(format!("{args:?} is not byte-identical across runs"));
        }
        validate(&first).map_err(|e| format!("{args:?}: {e}"))?;
    }
    let (code, lemma) = run_atlas(&["verify", "--m", "4", "--b", "1.5", "--level", "lemma1"])?;
    if code != 0 {
        return Err(format!("verify lemma1 exited with {code}"));
    }
    validate(&lemma).map_err(|e| format!("verify: {e}"))?;
    Ok(format!("{} commands run twice, byte-identical and schema-valid", runs.len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, verdict: Verdict| {
        match verdict {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n}: FAIL  {detail}");
            }
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());

    let started = Instant::now();
    match solve_vortex(&family(1, 0.0, 1.0), &grid_512(6.0)) {
        Ok(sol) => {
            report(8, criterion_8(&sol));
            report(9, criterion_9(&sol));
            report(10, criterion_10(&sol, started));
        }
        Err(e) => {
            for n in 8..=10 {
                report(n, Err(format!("solver failed: {e}")));
            }
        }
    }
    report(11, criterion_11());
    report(12, criterion_12());

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
