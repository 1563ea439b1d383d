//! Human-readable reports, JSON results and CSV tables.
//!
//! Numbers are written with Rust's locale-free shortest round-trip
//! formatting, so identical inputs give byte-identical files.

use std::io::Write;

use maslov_core::tracker::BranchState;
use maslov_core::{MaslovError, MaslovResult};
use serde_json::{json, Value};

fn sign_char(s: i32) -> char {
    match s {
        1 => '+',
        -1 => '-',
        _ => '0',
    }
}

pub fn report(out: &mut impl Write, problem: &str, r: &MaslovResult) -> std::io::Result<()> {
    writeln!(out, "problem: {problem}")?;
    writeln!(out, "lambda: {}", r.lambda)?;
    writeln!(out, "Maslov index: {}", r.index)?;
    writeln!(out, "crossings: {}", r.crossings.len())?;
    if !r.crossings.is_empty() {
        writeln!(
            out,
            "  {:>18}  {:>2}  {:>9}  {:>6}  {:>6}",
            "x0", "k", "signature", "left", "right"
        )?;
        for c in &r.crossings {
            let left: String = c.left_limits.iter().map(|&s| sign_char(s)).collect();
            let right: String = c.right_limits.iter().map(|&s| sign_char(s)).collect();
            writeln!(
                out,
                "  {:>18.12}  {:>2}  {:>9}  {:>6}  {:>6}",
                c.x0, c.k, c.signature, left, right
            )?;
        }
    }
    let d = &r.diagnostics;
    writeln!(out, "diagnostics:")?;
    writeln!(out, "  accepted steps: {}", d.accepted_steps)?;
    writeln!(
        out,
        "  max Lagrangian residual: {:.3e}",
        d.lagrangian_residual_max
    )?;
    writeln!(
        out,
        "  max Riccati asymmetry: {:.3e}",
        d.riccati_asymmetry_max
    )?;
    writeln!(
        out,
        "  endpoint mismatch vs asymptotic frames: {:.3e} (-L), {:.3e} (+L)",
        d.endpoint_mismatch_minus, d.endpoint_mismatch_plus
    )?;
    writeln!(
        out,
        "  potential limit mismatch: {:.3e} (-L), {:.3e} (+L)",
        d.potential_limit_mismatch.0, d.potential_limit_mismatch.1
    )?;
    writeln!(
        out,
        "  endpoint transversality: det X {:.3e} / {:.3e}, stable plane {:.3e} / {:.3e}: {}",
        d.det_x_endpoints.0,
        d.det_x_endpoints.1,
        d.stable_transversality.0,
        d.stable_transversality.1,
        if d.hormander_zero_verified {
            "verified"
        } else {
            "NOT verified"
        }
    )?;
    for w in &d.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

pub fn result_json(problem: &str, r: &MaslovResult) -> Value {
    let d = &r.diagnostics;
    json!({
        "problem": problem,
        "lambda": r.lambda,
        "maslov_index": r.index,
        "crossings": r.crossings.iter().map(|c| json!({
            "x0": c.x0,
            "k": c.k,
            "signature": c.signature,
            "branch_signs": c.branch_signs,
            "left_limits": c.left_limits,
            "right_limits": c.right_limits,
            "crossing_form_signature": c.crossing_form_signature,
            "residues": c.residues.iter().map(|(l, r)| [*l, *r]).collect::<Vec<_>>(),
            "delta": c.delta,
        })).collect::<Vec<_>>(),
        "diagnostics": {
            "accepted_steps": d.accepted_steps,
            "lagrangian_residual_max": d.lagrangian_residual_max,
            "riccati_asymmetry_max": d.riccati_asymmetry_max,
            "branch_pairing_max": d.branch_pairing_max,
            "endpoint_mismatch_minus": d.endpoint_mismatch_minus,
            "endpoint_mismatch_plus": d.endpoint_mismatch_plus,
            "potential_limit_mismatch": [d.potential_limit_mismatch.0, d.potential_limit_mismatch.1],
            "det_x_endpoints": [d.det_x_endpoints.0, d.det_x_endpoints.1],
            "stable_transversality": [d.stable_transversality.0, d.stable_transversality.1],
            "hormander_zero_verified": d.hormander_zero_verified,
            "warnings": d.warnings,
        }
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_trace(out: impl Write, n: usize, states: &[BranchState]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["x".to_string(), "det_x".to_string()];
    header.extend((1..=n).map(|j| format!("mu_{j}")));
    header.extend((1..=n).map(|j| format!("nu_{j}")));
    w.write_record(&header)?;
    for s in states {
        let mut row = vec![num(s.x), num(s.det_x)];
        row.extend(s.mu.iter().map(|m| m.map(num).unwrap_or_default()));
        row.extend(s.nu.iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(
    out: impl Write,
    rows: &[(f64, Result<MaslovResult, MaslovError>)],
) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["lambda", "maslov_index", "crossing_count", "status"])?;
    for (lambda, r) in rows {
        match r {
            Ok(r) => w.write_record([
                num(*lambda),
                r.index.to_string(),
                r.crossings.len().to_string(),
                "ok".to_string(),
            ])?,
            Err(e) => w.write_record([
                num(*lambda),
                String::new(),
                String::new(),
                e.kind().to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}
