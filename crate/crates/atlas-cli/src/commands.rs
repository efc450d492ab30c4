use std::f64::consts::{E, PI};
use std::fs;

use hopf_atlas::imagelaw::{other_branch, predict as predict_polygon};
use hopf_atlas::polyfield::{family_roots, SymmetricFamily};
use hopf_atlas::quaddiff::{family_edge_integral, Foliation, QuadraticDifferential, TraceConfig};
use hopf_atlas::realtree::{build_family_tree, measure_edge_numeric, VertexLabel};
use hopf_atlas::vortex::{
    decay_fit, extract_nu, measure_alpha, solve_vortex, vertical_leaf_at, AlphaMode, SolverConfig, VortexSolution,
};
use hopf_atlas::Complex64;
use thiserror::Error;

use crate::report::*;
use crate::{FamilyArgs, PredictArgs, TraceArgs, TreeArgs, VerifyArgs};

#[derive(Debug, Error)]
pub enum CommandError {
    /// Bad flag values; exit code 2, no report.
    #[error("{0}")]
    Usage(String),
    /// Valid flags but the computation cannot proceed.
    #[error("{kind}: {message}")]
    Domain { kind: String, message: String },
}

impl CommandError {
    fn domain(kind: &str, err: impl std::fmt::Display) -> Self {
        CommandError::Domain {
            kind: kind.into(),
            message: err.to_string(),
        }
    }

    pub fn to_report(&self, command: &str, seed: u64) -> ErrorReport {
        let (kind, message) = match self {
            CommandError::Usage(m) => ("usage".to_string(), m.clone()),
            CommandError::Domain { kind, message } => (kind.clone(), message.clone()),
        };
        ErrorReport {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            tool_version: TOOL_VERSION.into(),
            seed,
            error: ErrorBody { kind, message },
        }
    }
}

pub struct Outcome {
    pub report: Report,
    pub svg: Option<String>,
    pub passed: bool,
}

fn family(args: &FamilyArgs) -> Result<SymmetricFamily, CommandError> {
    SymmetricFamily::new(args.m, args.a, args.b).map_err(|e| CommandError::Usage(e.to_string()))
}

fn family_inputs(args: &FamilyArgs) -> FamilyInputs {
    FamilyInputs {
        m: args.m,
        a: args.a,
        b: args.b,
    }
}

pub fn predict(args: &PredictArgs) -> Result<Outcome, CommandError> {
    let f = family(&args.family)?;
    let pred = predict_polygon(&f);
    let mut vertices: Vec<f64> = pred.vertex_angles().iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    vertices.sort_by(f64::total_cmp);
    let svg = crate::svg::polygon(
        &vertices,
        &format!("ideal polygon, m = {}, a = {}, b = {}", f.m(), f.a(), f.b()),
    );
    let outputs = PredictOutputs {
        m: f.m(),
        a: f.a(),
        b: f.b(),
        nu: pred.nu,
        alpha: pred.alpha,
        alpha_other_branch: other_branch(&pred).alpha,
        vertices,
    };
    Ok(Outcome {
        report: Report::Predict(Envelope::new(args.common.seed, family_inputs(&args.family), outputs)),
        svg: Some(svg),
        passed: true,
    })
}

fn parse_foliation(s: &str) -> Result<Foliation, CommandError> {
    s.parse::<Foliation>().map_err(CommandError::Usage)
}

pub fn tree(args: &TreeArgs) -> Result<Outcome, CommandError> {
    let f = family(&args.family)?;
    let foliation = parse_foliation(&args.foliation)?;
    let t = build_family_tree(&f, foliation);
    let m = f.m();
    let param = t.edge_parameter;

    let closed_form = PI * param / (2.0 * (m as f64 + 1.0));
    let quadrature = param * family_edge_integral(m);
    let path_integral: Vec<f64> = if f.c().norm() == 0.0 {
        Vec::new()
    } else {
        let roots = family_roots(&f).map_err(|e| CommandError::domain("poly", e))?;
        match foliation {
            Foliation::Vertical => (0..roots.outer.len())
                .map(|k| measure_edge_numeric(&f, k))
                .collect::<Result<_, _>>()
                .map_err(|e| CommandError::domain("tree", e))?,
            Foliation::Horizontal => {
                let q = QuadraticDifferential::new(f.expand()).map_err(|e| CommandError::domain("quad", e))?;
                roots
                    .outer
                    .iter()
                    .map(|&z| {
                        q.integrate(&[Complex64::new(0.0, 0.0), z], z.norm() / 4.0, None)
                            .map(|p| p.zeta().im.abs())
                    })
                    .collect::<Result<_, _>>()
                    .map_err(|e| CommandError::domain("quad", e))?
            }
        }
    };
    let worst = |target: f64| path_integral.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
    let verification = TreeVerification {
        closed_form,
        quadrature,
        deviations: Deviations {
            quadrature_vs_closed_form: (quadrature - closed_form).abs(),
            path_integral_vs_closed_form: worst(closed_form),
            path_integral_vs_quadrature: worst(quadrature),
        },
        path_integral,
    };

    let mut notes = Vec::new();
    if t.vertices.iter().any(|v| v.label == VertexLabel::Midpoint) {
        notes.push(
            "node 0 is the midpoint of the single finite edge (not a zero); each zero lies at half the edge length from it"
                .to_string(),
        );
    }
    if t.finite_edges.is_empty() {
        notes.push("edge parameter is zero: every zero sits on one vertex carrying all rays".to_string());
    }
    let outputs = TreeOutputs {
        foliation: foliation.name().into(),
        edge_parameter: param,
        nodes: t
            .vertices
            .iter()
            .map(|v| TreeNode {
                id: v.id,
                label: v.label.name(),
                multiplicity: v.multiplicity,
                location: [v.location.re, v.location.im],
            })
            .collect(),
        edges: t
            .merged_edges()
            .into_iter()
            .map(|(a, b, length)| TreeEdge { a, b, length })
            .collect(),
        rays: t
            .infinite_edges
            .iter()
            .map(|r| TreeRay {
                index: r.ray,
                vertex: r.vertex,
                direction: r.direction,
            })
            .collect(),
        verification,
        notes,
    };
    let svg = crate::svg::tree(&t, &format!("{} tree, m = {m}", foliation.name()));
    let inputs = TreeInputs {
        m,
        a: f.a(),
        b: f.b(),
        foliation: foliation.name().into(),
    };
    Ok(Outcome {
        report: Report::Tree(Envelope::new(args.common.seed, inputs, outputs)),
        svg: Some(svg),
        passed: true,
    })
}

/// Reads `x y` (or `x,y`) pairs, one per line; `#` starts a comment.
pub fn parse_seeds(text: &str) -> Result<Vec<Complex64>, CommandError> {
    let mut seeds = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
        match nums {
            Ok(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => seeds.push(Complex64::new(v[0], v[1])),
            _ => return Err(CommandError::Usage(format!("seeds line {}: expected two numbers", i + 1))),
        }
    }
    Ok(seeds)
}

pub fn trace(args: &TraceArgs) -> Result<Outcome, CommandError> {
    let f = family(&args.family)?;
    let kind = parse_foliation(&args.kind)?;
    if !(args.budget > 0.0 && args.budget.is_finite()) {
        return Err(CommandError::Usage("--budget must be positive".into()));
    }
    let text = fs::read_to_string(&args.seeds).map_err(|e| CommandError::Usage(format!("{}: {e}", args.seeds.display())))?;
    let seeds = parse_seeds(&text)?;
    let q = QuadraticDifferential::new(f.expand()).map_err(|e| CommandError::domain("quad", e))?;
    let cfg = TraceConfig::default();

    let mut entries = Vec::with_capacity(seeds.len());
    let mut leaves = Vec::new();
    for &seed in &seeds {
        let both = q
            .trace(seed, kind, 1, args.budget, &cfg)
            .and_then(|fwd| q.trace(seed, kind, -1, args.budget, &cfg).map(|back| (fwd, back)));
        let entry = match both {
            Ok((fwd, back)) => {
                let mut pts: Vec<Complex64> = back.path.points().into_iter().rev().collect();
                pts.extend(fwd.path.points().into_iter().skip(1));
                let entry = TraceEntry {
                    seed: [seed.re, seed.im],
                    points: Some(pts.iter().map(|z| [z.re, z.im]).collect()),
                    drift: Some(fwd.drift().max(back.drift())),
                    philen: Some(fwd.path.philen() + back.path.philen()),
                    termination: Some([fwd.terminated.name().into(), back.terminated.name().into()]),
                    error: None,
                };
                leaves.push(pts);
                entry
            }
            Err(e) => TraceEntry {
                seed: [seed.re, seed.im],
                points: None,
                drift: None,
                philen: None,
                termination: None,
                error: Some(e.to_string()),
            },
        };
        entries.push(entry);
    }
    let failures = entries.iter().filter(|e| e.error.is_some()).count();
    let zeros: Vec<(Complex64, Vec<f64>)> = q
        .zeros()
        .iter()
        .map(|r| (r.root, q.critical_directions(r.root, kind).unwrap_or_default()))
        .collect();
    let svg = crate::svg::traces(&zeros, &leaves, &format!("{} leaves, m = {}", kind.name(), f.m()));
    let inputs = TraceInputs {
        m: f.m(),
        a: f.a(),
        b: f.b(),
        kind: kind.name().into(),
        budget: args.budget,
        seeds: seeds.iter().map(|z| [z.re, z.im]).collect(),
    };
    let passed = seeds.is_empty() || failures < seeds.len();
    Ok(Outcome {
        report: Report::Trace(Envelope::new(
            args.common.seed,
            inputs,
            TraceOutputs {
                traces: entries,
                failures,
            },
        )),
        svg: Some(svg),
        passed,
    })
}

/// Default solve: 512 points per side on the smallest admissible square
/// of half-width at least 6.
pub fn default_solver(f: &SymmetricFamily) -> SolverConfig {
    let rmax = family_roots(f).map(|r| r.outer[0].norm()).unwrap_or(0.0);
    SolverConfig {
        radius: (3.0 * (1.0 + rmax)).max(6.0).ceil(),
        grid_points: Some(512),
        ..SolverConfig::default()
    }
}

fn solve(args: &VerifyArgs, f: &SymmetricFamily) -> Result<(VortexSolution, SolverSummary), CommandError> {
    let cfg = match &args.solver {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CommandError::Usage(format!("{}: {e}", path.display())))?;
            SolverConfig::parse(&text).map_err(|e| CommandError::Usage(e.to_string()))?
        }
        None => default_solver(f),
    };
    let sol = solve_vortex(f, &cfg).map_err(|e| CommandError::domain("solver", e))?;
    let g = sol.grid();
    let summary = SolverSummary {
        grid_points: g.n,
        radius: g.radius,
        h: g.h,
        iterations: sol.iterations(),
        residual: sol.residual(),
    };
    Ok((sol, summary))
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, CommandError> {
    let f = family(&args.family)?;
    if !(args.l > 0.0 && args.l.is_finite()) {
        return Err(CommandError::Usage("--l must be positive".into()));
    }
    let m = f.m();
    let nu = f.nu();
    let mut checks = Vec::new();
    let mut solver = None;
    let domain = |e: hopf_atlas::vortex::VortexError| CommandError::domain("vortex", e);
    match args.level.as_str() {
        "lemma1" => {
            checks.push(Check::abs("edgeIntegral", family_edge_integral(m), PI / (2.0 * (m as f64 + 1.0)), 1e-10));
            if f.b() != 0.0 {
                for k in 0..=m as usize {
                    let measured = measure_edge_numeric(&f, k).map_err(|e| CommandError::domain("tree", e))?;
                    checks.push(Check::abs(format!("edgeLength{k}"), measured, nu, 1e-8));
                }
            }
        }
        "lengths" => {
            let (sol, summary) = solve(args, &f)?;
            solver = Some(summary);
            let fit = decay_fit(&sol, 1.0, 0.25, 1e-7).map_err(domain)?;
            checks.push(Check::greater("decayRate", fit.rate, 0.0));
            checks.push(Check::at_least("decayFitR2", fit.r_squared, 0.98));
            // marked arcs reach distance L from the zeros
            let arcs = extract_nu(&sol, args.l.max(4.5)).map_err(domain)?.arcs;
            let far: Vec<f64> = arcs
                .iter()
                .filter(|a| a.min_phi_distance >= 4.0)
                .map(|a| a.image_length / (2.0 * a.phi_length))
                .collect();
            let worst = far.iter().cloned().max_by(|x, y| (x - 1.0).abs().total_cmp(&(y - 1.0).abs())).unwrap_or(f64::NAN);
            checks.push(Check::abs("horizontalLengthRatio", worst, 1.0, 1e-3));
            let (zero, dir) = match sol.quadratic_differential().zeros().iter().map(|r| r.root).find(|z| z.norm() > 0.0) {
                Some(z) => (z, z.arg()),
                None => (Complex64::new(0.0, 0.0), 0.0),
            };
            let v = |d: f64, budget: f64| -> Result<f64, CommandError> {
                vertical_leaf_at(&sol, zero, dir, d, budget)
                    .and_then(|p| p.image_length(&sol))
                    .map_err(domain)
            };
            let near = v(1.5, 6.0)?;
            let far = v(3.0, 6.0)?;
            checks.push(Check::at_least("verticalDecayFactor", near / far, E));
            let doubled = v(3.0, 12.0)?;
            checks.push(Check::abs("verticalTailChange", (doubled - far).abs() / far, 0.0, 0.01));
        }
        "alpha" => {
            let (sol, summary) = solve(args, &f)?;
            solver = Some(summary);
            let measured = measure_alpha(&sol, args.l, AlphaMode::Formula).map_err(domain)?;
            let nu_hat = measured.nu_hat.unwrap_or(f64::NAN);
            let alpha = predict_polygon(&f).alpha;
            if f.b() == 0.0 {
                checks.push(Check::abs("nuHat", nu_hat, 0.0, 0.02));
                checks.push(Check::abs("alphaHat", measured.alpha_hat, alpha, 0.02));
            } else {
                checks.push(Check::rel("nuHat", nu_hat, nu, if m == 1 { 0.02 } else { 0.05 }));
                checks.push(Check::rel("alphaHat", measured.alpha_hat, alpha, 0.05));
            }
        }
        "develop" => {
            let (sol, summary) = solve(args, &f)?;
            solver = Some(summary);
            let measured = measure_alpha(&sol, args.l, AlphaMode::Develop).map_err(domain)?;
            // developed vertices fix α only up to the branch swap
            let alpha = predict_polygon(&f).alpha.min(2.0 * PI / (m as f64 + 1.0) - predict_polygon(&f).alpha);
            checks.push(Check::abs("alphaDeveloped", measured.alpha_hat, alpha, 0.05));
        }
        other => return Err(CommandError::Usage(format!("unknown level '{other}'"))),
    }
    let pass = checks.iter().all(|c| c.pass);
    let inputs = VerifyInputs {
        m,
        a: f.a(),
        b: f.b(),
        level: args.level.clone(),
        l: args.l,
    };
    Ok(Outcome {
        report: Report::Verify(Envelope::new(args.common.seed, inputs, VerifyOutputs { pass, checks, solver })),
        svg: None,
        passed: pass,
    })
}
