//! Built-in verification suite: closed-form oracles, invariants and
//! stability checks, each reported as one pass/fail line.

use maslov_core::examples::{
    analytic_poles, coupled_problem, example1_analytic_s, example1_problem,
    example2_analytic_branches, example2_problem, AnalyticValue, ExampleId, EXAMPLE1_EIGENVALUES,
    EXAMPLE2_POSITIVE_EIGENVALUES,
};
use maslov_core::lagrangian::{riccati_s, Frame};
use maslov_core::linalg::Matrix;
use maslov_core::tracker::{
    bilinear_identity_residual, branch_state, classify_crossing, locate_crossing, maslov_index_of,
    ClosurePath, Evolution, FramePath, TrackerConfig,
};
use maslov_core::{maslov_index, IntegratorConfig, MaslovResult, Problem};

pub type CheckResult = Result<String, String>;

pub struct Check {
    pub name: &'static str,
    pub description: &'static str,
    pub run: fn(&IntegratorConfig) -> CheckResult,
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "oracle-example1",
        description: "numeric S matches the closed form for example1 at λ = 1 within 1e-6 on [-10, 10] away from poles",
        run: oracle_example1,
    },
    Check {
        name: "oracle-example2",
        description: "both numeric branches match the closed forms for example2 (λ = 1, c = -1) within 1e-6",
        run: oracle_example2,
    },
    Check {
        name: "crossing-locations",
        description: "detected crossings match closed-form pole locations within 1e-6",
        run: crossing_locations,
    },
    Check {
        name: "eigenvalue-count",
        description: "index equals minus the number of eigenvalues above λ on both examples",
        run: eigenvalue_count,
    },
    Check {
        name: "limits-vs-crossing-form",
        description: "one-sided limit signature equals crossing-form signature at every crossing",
        run: limits_vs_form,
    },
    Check {
        name: "pole-order",
        description: "(x - x0) μ has matching nonzero one-sided limits within 1e-3 relative",
        run: pole_order,
    },
    Check {
        name: "lagrangian-residual",
        description: "frames stay Lagrangian within 1e-8 along every example integration",
        run: lagrangian_residual,
    },
    Check {
        name: "branch-identity",
        description: "branch derivative identity holds within 1e-4 at 100 generic points of a coupled problem",
        run: branch_identity,
    },
    Check {
        name: "step-halving",
        description: "halving the step leaves index, crossing count and locations (1e-6) unchanged",
        run: step_halving,
    },
    Check {
        name: "double-kernel",
        description: "synthetic crossing X = diag(x, -x), Y = I has k = 2 and signature 0",
        run: double_kernel,
    },
    Check {
        name: "endpoint-asymptotics",
        description: "endpoint frames match asymptotic frames within 1e-4 and are transverse to the vertical and stable planes",
        run: endpoint_asymptotics,
    },
];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn index(p: &Problem, lambda: f64, cfg: &IntegratorConfig) -> Result<MaslovResult, String> {
    maslov_index(p, lambda, cfg)
        .map_err(|e| format!("{}, λ = {lambda}: {} ({e})", p.name(), e.kind()))
}

fn standard_runs(cfg: &IntegratorConfig) -> Result<Vec<(ExampleId, MaslovResult)>, String> {
    Ok(vec![
        (ExampleId::Example1, index(&example1_problem(), 0.5, cfg)?),
        (ExampleId::Example1, index(&example1_problem(), 1.0, cfg)?),
        (ExampleId::Example1, index(&example1_problem(), 2.0, cfg)?),
        (
            ExampleId::Example2 { c: -1.0 },
            index(&example2_problem(-1.0), 1.0, cfg)?,
        ),
    ])
}

fn oracle_deviation(
    p: &Problem,
    id: ExampleId,
    cfg: &IntegratorConfig,
    analytic: impl Fn(f64) -> Vec<AnalyticValue>,
) -> Result<f64, String> {
    let poles: Vec<f64> = analytic_poles(id, 1.0, 10.0)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|q| q.x0)
        .collect();
    let ev = Evolution::run(p, 1.0, cfg, &TrackerConfig::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0_f64;
    for i in 0..=2000 {
        let x = -10.0 + 0.01 * i as f64;
        if poles.iter().any(|q| (x - q).abs() < 0.05) {
            continue;
        }
        let frame = ev.frame_at(x).map_err(|e| e.to_string())?;
        let s = riccati_s(&frame, 0.0).map_err(|e| e.to_string())?.s;
        for (j, v) in analytic(x).iter().enumerate() {
            let v = v
                .finite()
                .ok_or_else(|| format!("closed form singular at {x}"))?;
            worst = worst.max((s.get(j, j) - v).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:.3e}"))?;
    Ok(worst)
}

fn oracle_example1(cfg: &IntegratorConfig) -> CheckResult {
    let d = oracle_deviation(&example1_problem(), ExampleId::Example1, cfg, |x| {
        vec![example1_analytic_s(1.0, x).expect("λ = 1 is admissible")]
    })?;
    Ok(format!("max deviation {d:.2e}"))
}

fn oracle_example2(cfg: &IntegratorConfig) -> CheckResult {
    let d = oracle_deviation(
        &example2_problem(-1.0),
        ExampleId::Example2 { c: -1.0 },
        cfg,
        |x| {
            let (a, b) = example2_analytic_branches(1.0, -1.0, x).expect("λ = 1 is admissible");
            vec![a, b]
        },
    )?;
    Ok(format!("max deviation {d:.2e}"))
}

fn crossing_locations(cfg: &IntegratorConfig) -> CheckResult {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for (id, r) in standard_runs(cfg)? {
        let mut poles: Vec<f64> = analytic_poles(id, r.lambda, cfg.half_width)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|q| q.x0)
            .collect();
        poles.sort_by(f64::total_cmp);
        ensure(poles.len() == r.crossings.len(), || {
            format!(
                "λ = {}: {} crossings, {} poles",
                r.lambda,
                r.crossings.len(),
                poles.len()
            )
        })?;
        for (q, c) in poles.iter().zip(&r.crossings) {
            worst = worst.max((q - c.x0).abs());
            count += 1;
        }
    }
    ensure(worst <= 1e-6, || format!("max location error {worst:.3e}"))?;
    Ok(format!("{count} crossings, max location error {worst:.2e}"))
}

fn eigenvalue_count(cfg: &IntegratorConfig) -> CheckResult {
    let expected = |set: &[f64], l: f64| -(set.iter().filter(|&&e| e > l).count() as i32);
    for l in [0.5, 1.0, 2.0] {
        let r = index(&example1_problem(), l, cfg)?;
        ensure(r.index == expected(&EXAMPLE1_EIGENVALUES, l), || {
            format!("example1 λ = {l}: index {}", r.index)
        })?;
    }
    for l in [1.0, 2.1, 5.5, 7.5] {
        let r = index(&example2_problem(-1.0), l, cfg)?;
        ensure(
            r.index == expected(&EXAMPLE2_POSITIVE_EIGENVALUES, l),
            || format!("example2 λ = {l}: index {}", r.index),
        )?;
    }
    Ok("7 λ values agree".into())
}

fn limits_vs_form(cfg: &IntegratorConfig) -> CheckResult {
    let mut count = 0;
    for (_, r) in standard_runs(cfg)? {
        for c in &r.crossings {
            ensure(c.signature == c.crossing_form_signature, || {
                format!(
                    "x0 = {}: {} vs {}",
                    c.x0, c.signature, c.crossing_form_signature
                )
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} crossings agree"))
}

fn pole_order(cfg: &IntegratorConfig) -> CheckResult {
    let mut worst = 0.0_f64;
    for (_, r) in standard_runs(cfg)? {
        for c in &r.crossings {
            ensure(
                c.residues.iter().all(|&(l, r)| l != 0.0 && r != 0.0),
                || format!("zero residue at {}", c.x0),
            )?;
            worst = worst.max(c.pole_order_mismatch());
        }
    }
    ensure(worst <= 1e-3, || {
        format!("relative residue mismatch {worst:.3e}")
    })?;
    Ok(format!("worst relative residue mismatch {worst:.2e}"))
}

fn lagrangian_residual(cfg: &IntegratorConfig) -> CheckResult {
    let mut worst = 0.0_f64;
    for (_, r) in standard_runs(cfg)? {
        worst = worst.max(r.diagnostics.lagrangian_residual_max);
    }
    worst = worst.max(
        index(&coupled_problem(0.8), 1.0, cfg)?
            .diagnostics
            .lagrangian_residual_max,
    );
    ensure(worst <= 1e-8, || format!("residual {worst:.3e}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn branch_identity(cfg: &IntegratorConfig) -> CheckResult {
    let tcfg = TrackerConfig::default();
    let p = coupled_problem(0.8);
    let ev = Evolution::run(&p, 1.0, cfg, &tcfg).map_err(|e| e.to_string())?;
    let crossings: Vec<f64> = maslov_index_of(&ev, &tcfg)
        .map_err(|e| e.to_string())?
        .crossings
        .iter()
        .map(|c| c.x0)
        .collect();
    // Low-discrepancy points in [−10, 10].
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut worst = 0.0_f64;
    let mut used = 0;
    let mut i = 0u32;
    while used < 100 && i < 10_000 {
        i += 1;
        let x = -10.0 + 20.0 * (f64::from(i) * golden).fract();
        if crossings.iter().any(|c| (x - c).abs() < 0.05) {
            continue;
        }
        let frame = ev.frame_at(x).map_err(|e| e.to_string())?;
        let st = branch_state(&frame, x, None, &tcfg).map_err(|e| e.to_string())?;
        if (st.raw_mu(0) - st.raw_mu(1)).abs() < 1e-2 {
            continue;
        }
        worst = worst.max(bilinear_identity_residual(&ev, x, 1e-4).map_err(|e| e.to_string())?);
        used += 1;
    }
    ensure(used == 100, || format!("only {used} generic points found"))?;
    ensure(worst <= 1e-4, || format!("max scaled residual {worst:.3e}"))?;
    Ok(format!("max scaled residual {worst:.2e} at {used} points"))
}

fn step_halving(cfg: &IntegratorConfig) -> CheckResult {
    let halved = IntegratorConfig {
        step: cfg.step / 2.0,
        ..*cfg
    };
    let mut worst = 0.0_f64;
    for (p, l) in [(example1_problem(), 1.0), (example2_problem(-1.0), 1.0)] {
        let a = index(&p, l, cfg)?;
        let b = index(&p, l, &halved)?;
        ensure(
            a.index == b.index && a.crossings.len() == b.crossings.len(),
            || {
                format!(
                    "{}: index {} -> {}, crossings {} -> {}",
                    p.name(),
                    a.index,
                    b.index,
                    a.crossings.len(),
                    b.crossings.len()
                )
            },
        )?;
        for (x, y) in a.crossings.iter().zip(&b.crossings) {
            worst = worst.max((x.x0 - y.x0).abs());
        }
    }
    ensure(worst <= 1e-6, || {
        format!("crossing moved by {worst:.3e} when the step was halved")
    })?;
    Ok(format!("largest crossing shift {worst:.2e}"))
}

fn double_kernel(_cfg: &IntegratorConfig) -> CheckResult {
    let tcfg = TrackerConfig::default();
    let path = ClosurePath {
        frame: |x: f64| {
            Frame::new(Matrix::from_diag(&[x, -x]), Matrix::identity(2)).expect("2n × n frame")
        },
        derivative: |_x: f64| {
            Frame::new(Matrix::from_diag(&[1.0, -1.0]), Matrix::zeros(2, 2)).expect("2n × n frame")
        },
        domain: (-1.0, 1.0),
    };
    let loc = locate_crossing(&path, (-0.5, 0.5), &tcfg).map_err(|e| e.to_string())?;
    let rec = classify_crossing(&path, loc.x0, &[loc.x0], &tcfg).map_err(|e| e.to_string())?;
    ensure(
        rec.k == 2 && rec.signature == 0 && rec.crossing_form_signature == 0,
        || format!("k = {}, signature {}", rec.k, rec.signature),
    )?;
    Ok(format!("x0 = {:.1e}, k = 2, signature 0", loc.x0))
}

fn endpoint_asymptotics(cfg: &IntegratorConfig) -> CheckResult {
    let mut worst = 0.0_f64;
    for (p, l) in [(example1_problem(), 1.0), (example2_problem(-1.0), 1.0)] {
        let d = index(&p, l, cfg)?.diagnostics;
        ensure(d.hormander_zero_verified, || {
            format!("{}: endpoints not transverse", p.name())
        })?;
        worst = worst
            .max(d.endpoint_mismatch_minus)
            .max(d.endpoint_mismatch_plus);
    }
    ensure(worst <= 1e-4, || format!("endpoint mismatch {worst:.3e}"))?;
    Ok(format!("endpoint mismatch {worst:.2e}"))
}
