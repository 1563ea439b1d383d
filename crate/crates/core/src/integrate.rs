//! Explicit Runge–Kutta integration of the linear frame equation on `[−L, L]`.
//!
//! The frame is integrated rather than the Riccati equation, so crossings
//! show up as sign changes of `det X` instead of blowups. Periodic
//! Gram–Schmidt renormalization keeps the columns from collapsing onto the
//! fastest-growing direction; it changes the basis but never the plane, and
//! it preserves the sign of `det X`.

use crate::error::{MaslovError, Result};
use crate::lagrangian::{frame_rhs, CoefficientBlocks, Frame};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedRk4,
    AdaptiveRk45,
}

impl std::str::FromStr for Method {
    type Err = MaslovError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "rk4" => Ok(Method::FixedRk4),
            "adaptive" | "rk45" => Ok(Method::AdaptiveRk45),
            other => Err(MaslovError::InvalidInput(format!(
                "unknown method `{other}` (expected fixed or adaptive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Base step; the fixed step for RK4, the initial step for RK45.
    pub step: f64,
    /// Local error tolerance of the adaptive method.
    pub tol: f64,
    pub renorm_every: usize,
    /// Integration runs over `[−half_width, half_width]`.
    pub half_width: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::FixedRk4,
            step: 1e-3,
            tol: 1e-10,
            renorm_every: 20,
            half_width: 20.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(MaslovError::InvalidInput(what.to_string()));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("integrator step must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("integrator tolerance must be positive");
        }
        if self.renorm_every == 0 {
            return bad("renormalization interval must be at least 1");
        }
        if !(self.half_width >= 0.0 && self.half_width.is_finite()) {
            return bad("domain half-width must be non-negative");
        }
        Ok(())
    }

    /// Largest step the adaptive controller may take.
    pub fn max_adaptive_step(&self) -> f64 {
        20.0 * self.step
    }
}

fn check_finite(f: Frame, x: f64) -> Result<Frame> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(MaslovError::Blowup { x })
    }
}

/// One classical fourth-order Runge–Kutta step from `x` to `x + h`.
pub fn rk4_step<B>(blocks_at: &B, f: &Frame, x: f64, h: f64) -> Result<Frame>
where
    B: Fn(f64) -> CoefficientBlocks + ?Sized,
{
    let mid = blocks_at(x + 0.5 * h);
    let k1 = frame_rhs(&blocks_at(x), f);
    let k2 = frame_rhs(&mid, &f.axpy(0.5 * h, &k1));
    let k3 = frame_rhs(&mid, &f.axpy(0.5 * h, &k2));
    let k4 = frame_rhs(&blocks_at(x + h), &f.axpy(h, &k3));
    let sum = k1.axpy(2.0, &k2).axpy(2.0, &k3).axpy(1.0, &k4);
    check_finite(f.axpy(h / 6.0, &sum), x + h)
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded Dormand–Prince step; returns the fifth-order solution and
/// the max-norm of the difference to the fourth-order one.
pub fn rk45_step<B>(blocks_at: &B, f: &Frame, x: f64, h: f64) -> Result<(Frame, f64)>
where
    B: Fn(f64) -> CoefficientBlocks + ?Sized,
{
    let mut k: Vec<Frame> = Vec::with_capacity(7);
    for stage in 0..7 {
        let mut arg = f.clone();
        for (j, kj) in k.iter().enumerate() {
            let a = DP_A[stage][j];
            if a != 0.0 {
                arg = arg.axpy(h * a, kj);
            }
        }
        k.push(frame_rhs(&blocks_at(x + DP_C[stage] * h), &arg));
    }
    let mut high = f.clone();
    let mut diff = Frame {
        x_block: crate::linalg::Matrix::zeros(f.n(), f.n()),
        y_block: crate::linalg::Matrix::zeros(f.n(), f.n()),
    };
    for (j, kj) in k.iter().enumerate() {
        if DP_B5[j] != 0.0 {
            high = high.axpy(h * DP_B5[j], kj);
        }
        let e = DP_B5[j] - DP_B4[j];
        if e != 0.0 {
            diff = diff.axpy(h * e, kj);
        }
    }
    let high = check_finite(high, x + h)?;
    Ok((high, diff.max_abs()))
}

/// One step of the configured method. The adaptive method takes the step as
/// given and discards the error estimate.
pub fn step<B>(method: Method, blocks_at: &B, f: &Frame, x: f64, h: f64) -> Result<Frame>
where
    B: Fn(f64) -> CoefficientBlocks + ?Sized,
{
    if !(h > 0.0) {
        return Err(MaslovError::InvalidInput(format!(
            "step must be positive, got {h}"
        )));
    }
    match method {
        Method::FixedRk4 => rk4_step(blocks_at, f, x, h),
        Method::AdaptiveRk45 => rk45_step(blocks_at, f, x, h).map(|(f, _)| f),
    }
}

/// Integrates `f` from `x_from` to `x_to` with RK4 sub-steps no longer than `max_step`.
pub fn advance<B>(blocks_at: &B, f: &Frame, x_from: f64, x_to: f64, max_step: f64) -> Result<Frame>
where
    B: Fn(f64) -> CoefficientBlocks + ?Sized,
{
    let span = x_to - x_from;
    if span == 0.0 {
        return Ok(f.clone());
    }
    let steps = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut frame = f.clone();
    for i in 0..steps {
        frame = rk4_step(blocks_at, &frame, x_from + i as f64 * h, h)?;
    }
    Ok(frame)
}

/// Integrates the unstable frame from `−L` to `L`, calling `observer` at the
/// start point and after every accepted step.
pub fn evolve<O>(p: &Problem, lambda: f64, cfg: &IntegratorConfig, observer: O) -> Result<Frame>
where
    O: FnMut(f64, &Frame) -> Result<()>,
{
    let start = p.unstable_frame_at_minus_infinity(lambda)?;
    evolve_frame(p, lambda, cfg, start, observer)
}

/// As [`evolve`] with an explicit initial frame at `−L`.
pub fn evolve_frame<O>(
    p: &Problem,
    lambda: f64,
    cfg: &IntegratorConfig,
    start: Frame,
    mut observer: O,
) -> Result<Frame>
where
    O: FnMut(f64, &Frame) -> Result<()>,
{
    cfg.validate()?;
    let blocks_at = |x: f64| p.blocks(x, lambda);
    let (a, b) = (-cfg.half_width, cfg.half_width);
    let mut frame = start;
    observer(a, &frame)?;
    if b <= a {
        return Ok(frame);
    }
    let mut accepted = 0usize;
    let renorm = |frame: Frame, accepted: usize, x: f64| -> Result<Frame> {
        if accepted.is_multiple_of(cfg.renorm_every) {
            frame.orthonormalized().map_err(|e| match e {
                MaslovError::DegenerateFrame { .. } => MaslovError::Blowup { x },
                other => other,
            })
        } else {
            Ok(frame)
        }
    };

    match cfg.method {
        Method::FixedRk4 => {
            let steps = ((b - a) / cfg.step - 1e-9).ceil().max(1.0) as usize;
            for i in 0..steps {
                let x0 = a + i as f64 * cfg.step;
                let x1 = if i + 1 == steps {
                    b
                } else {
                    a + (i + 1) as f64 * cfg.step
                };
                frame = rk4_step(&blocks_at, &frame, x0, x1 - x0)?;
                accepted += 1;
                frame = renorm(frame, accepted, x1)?;
                observer(x1, &frame)?;
            }
        }
        Method::AdaptiveRk45 => {
            let h_max = cfg.max_adaptive_step();
            let h_min = 1e-12 * (b - a);
            let mut x = a;
            let mut h = cfg.step;
            while x < b {
                let last = x + h >= b;
                let h_try = if last { b - x } else { h };
                let (candidate, err) = rk45_step(&blocks_at, &frame, x, h_try)?;
                let scale = cfg.tol * (1.0 + frame.max_abs());
                let ratio = err / scale;
                if ratio <= 1.0 {
                    x = if last { b } else { x + h_try };
                    accepted += 1;
                    frame = renorm(candidate, accepted, x)?;
                    observer(x, &frame)?;
                }
                let factor = if ratio == 0.0 {
                    5.0
                } else {
                    (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = (h_try * factor).min(h_max);
                if h < h_min {
                    return Err(MaslovError::Blowup { x });
                }
            }
        }
    }
    Ok(frame)
}
