//! Branch tracking of the Riccati eigenvalues, crossing detection and
//! classification, and assembly of the Maslov index.
//!
//! Crossings are found as sign changes of `det X` between accepted steps
//! (with a `|μ|` blowup fallback for even-order zeros), located by bisection
//! on a re-integrated frame, and classified from the one-sided limits of the
//! singular eigenvalues: a branch running from `+∞` to `−∞` contributes `+1`,
//! one running from `−∞` to `+∞` contributes `−1`. Every classification is
//! checked against the signature of the crossing form.

use rayon::prelude::*;

use crate::error::{MaslovError, Result};
use crate::integrate::{self, advance, IntegratorConfig};
use crate::lagrangian::{continuous_s, crossing_form, frame_rhs, riccati_rhs, riccati_s, Frame};
use crate::linalg::{self, dot, EigDecomp, Matrix, SymMatrix};
use crate::problem::{Problem, TABULATED_WARNING};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// `|μ|` above this marks a branch as singular.
    pub blowup_threshold: f64,
    /// `σ_min(X) < kernel_threshold · ‖frame‖` marks a kernel direction.
    pub kernel_threshold: f64,
    /// Initial offset for the one-sided limits.
    pub delta: f64,
    /// Smallest offset tried before giving up on a classification.
    pub min_delta: f64,
    /// Bracket width at which bisection stops.
    pub locate_tol: f64,
    /// Normalized determinant below which two planes are not transverse.
    pub transversality_tol: f64,
    /// Below this normalized `|det X|` branch values come from `Y·adj(X)`.
    pub chart_switch: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            blowup_threshold: 1e6,
            kernel_threshold: 1e-8,
            delta: 1e-4,
            min_delta: 1e-12,
            locate_tol: 1e-9,
            transversality_tol: 1e-6,
            chart_switch: 1e-8,
        }
    }
}

/// Matched eigen-branches of `S(x)` at one point.
#[derive(Debug, Clone)]
pub struct BranchState {
    pub x: f64,
    /// `None` where the branch is at (or numerically indistinguishable from) a pole.
    pub mu: Vec<Option<f64>>,
    /// Orthonormal branch vectors, one column per branch.
    pub w: Matrix,
    /// Eigenvalues of `Y·adj(X)` on the same branches (`ν = μ det X`).
    pub nu: Vec<f64>,
    /// `det X` of the orthonormalized frame.
    pub det_x: f64,
    /// `max |μ det X − ν| / max(1, |ν|)` over finite branches.
    pub pairing_residual: f64,
    /// Asymmetry of `Y X⁻¹` before symmetrization (0 when the adjugate chart was used).
    pub asymmetry: f64,
}

impl BranchState {
    pub fn n(&self) -> usize {
        self.nu.len()
    }

    pub fn raw_mu(&self, j: usize) -> f64 {
        self.nu[j] / self.det_x
    }
}

/// Unordered eigen-branches at a point: values ascending.
struct LocalBranches {
    mu: Vec<f64>,
    vectors: Matrix,
    nu: Vec<f64>,
    det_x: f64,
    asymmetry: f64,
}

fn local_branches(frame: &Frame, cfg: &TrackerConfig) -> Result<LocalBranches> {
    let q = frame.orthonormalized()?;
    let cont = continuous_s(&q);
    let det_x = cont.det_x;
    if det_x.abs() > cfg.chart_switch {
        let chart = riccati_s(&q, 0.0)?;
        let eig = linalg::sym_eig(&chart.s)?;
        let nu = (0..eig.values.len())
            .map(|j| {
                let w = eig.vector(j);
                dot(&w, &cont.m.as_matrix().mul_vec(&w))
            })
            .collect();
        Ok(LocalBranches {
            mu: eig.values,
            vectors: eig.vectors,
            nu,
            det_x,
            asymmetry: chart.asymmetry,
        })
    } else {
        let eig = linalg::sym_eig(&cont.m)?;
        let mu = eig.values.iter().map(|v| v / det_x).collect();
        Ok(LocalBranches {
            mu,
            vectors: eig.vectors.clone(),
            nu: eig.values,
            det_x,
            asymmetry: 0.0,
        })
    }
}

/// Permutation `π` with new branch `π(j)` continuing old branch `j`, chosen
/// greedily on `|⟨w_prev_j, w_new_i⟩|` (largest remaining overlap first).
pub fn match_branches(prev: &Matrix, new: &EigDecomp, x: f64) -> Result<Vec<usize>> {
    match_vectors(prev, &new.vectors, x)
}

fn match_vectors(prev: &Matrix, new: &Matrix, x: f64) -> Result<Vec<usize>> {
    let n = prev.cols();
    let cols_prev: Vec<Vec<f64>> = (0..n).map(|j| prev.column(j)).collect();
    let cols_new: Vec<Vec<f64>> = (0..new.cols()).map(|j| new.column(j)).collect();
    let mut overlaps: Vec<(f64, usize, usize)> = Vec::with_capacity(n * cols_new.len());
    for (i, a) in cols_prev.iter().enumerate() {
        for (j, b) in cols_new.iter().enumerate() {
            overlaps.push((dot(a, b).abs(), i, j));
        }
    }
    overlaps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; cols_new.len()];
    let mut worst = f64::INFINITY;
    for (ov, i, j) in overlaps {
        if perm[i] != usize::MAX || taken[j] {
            continue;
        }
        perm[i] = j;
        taken[j] = true;
        worst = worst.min(ov);
    }
    if worst < std::f64::consts::FRAC_1_SQRT_2 {
        return Err(MaslovError::AmbiguousMatching { x, overlap: worst });
    }
    Ok(perm)
}

/// Branch state of `frame`, ordered to continue `prev` when given, with
/// eigenvector signs aligned to `prev`.
pub fn branch_state(
    frame: &Frame,
    x: f64,
    prev: Option<&BranchState>,
    cfg: &TrackerConfig,
) -> Result<BranchState> {
    let local = local_branches(frame, cfg)?;
    let n = local.mu.len();
    let perm = match prev {
        Some(p) => match_vectors(&p.w, &local.vectors, x)?,
        None => (0..n).collect(),
    };
    let mut w = Matrix::zeros(n, n);
    let mut mu = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    let mut pairing_residual = 0.0_f64;
    for (j, &src) in perm.iter().enumerate() {
        let mut v = local.vectors.column(src);
        if let Some(p) = prev {
            if dot(&v, &p.w.column(j)) < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
        }
        w.set_column(j, &v);
        let m = local.mu[src];
        let value = if m.is_finite() && m.abs() <= cfg.blowup_threshold {
            Some(m)
        } else {
            None
        };
        if m.is_finite() {
            let r = (m * local.det_x - local.nu[src]).abs() / local.nu[src].abs().max(1.0);
            pairing_residual = pairing_residual.max(r);
        }
        mu.push(value);
        nu.push(local.nu[src]);
    }
    Ok(BranchState {
        x,
        mu,
        w,
        nu,
        det_x: local.det_x,
        pairing_residual,
        asymmetry: local.asymmetry,
    })
}

/// A path of frames that can be sampled at arbitrary points of its domain.
pub trait FramePath {
    fn frame_at(&self, x: f64) -> Result<Frame>;
    /// Derivative of the path at `x`, given the frame there.
    fn derivative_at(&self, x: f64, frame: &Frame) -> Frame;
    fn domain(&self) -> (f64, f64);
}

/// A path given by closures, for synthetic tests and user-supplied paths.
pub struct ClosurePath<F, D> {
    pub frame: F,
    pub derivative: D,
    pub domain: (f64, f64),
}

impl<F, D> FramePath for ClosurePath<F, D>
where
    F: Fn(f64) -> Frame,
    D: Fn(f64) -> Frame,
{
    fn frame_at(&self, x: f64) -> Result<Frame> {
        Ok((self.frame)(x))
    }
    fn derivative_at(&self, x: f64, _frame: &Frame) -> Frame {
        (self.derivative)(x)
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

/// An integrated unstable path with a frame checkpoint at every accepted
/// step and the tracked branches there.
pub struct Evolution<'p> {
    problem: &'p Problem,
    lambda: f64,
    cfg: IntegratorConfig,
    xs: Vec<f64>,
    frames: Vec<Frame>,
    states: Vec<BranchState>,
    warnings: Vec<String>,
}

impl<'p> Evolution<'p> {
    /// Integrates and tracks branches over the whole domain.
    pub fn run(
        problem: &'p Problem,
        lambda: f64,
        cfg: &IntegratorConfig,
        tcfg: &TrackerConfig,
    ) -> Result<Self> {
        let mut xs = Vec::new();
        let mut frames: Vec<Frame> = Vec::new();
        let mut states: Vec<BranchState> = Vec::new();
        let mut warnings = Vec::new();
        integrate::evolve(problem, lambda, cfg, |x, frame| {
            let state = match states.last() {
                None => branch_state(frame, x, None, tcfg)?,
                Some(prev) => {
                    let prev_x = *xs.last().expect("frames and states stay aligned");
                    let prev_frame = frames.last().expect("frames and states stay aligned");
                    track_step(
                        problem, lambda, cfg, tcfg, prev, prev_frame, prev_x, frame, x,
                    )
                    .or_else(|e| match e {
                        MaslovError::AmbiguousMatching { .. } => {
                            warnings.push(format!(
                                "branch matching ambiguous near x = {x:.6}; branches re-sorted by value"
                            ));
                            branch_state(frame, x, None, tcfg)
                        }
                        other => Err(other),
                    })?
                }
            };
            xs.push(x);
            frames.push(frame.clone());
            states.push(state);
            Ok(())
        })?;
        if problem.is_tabulated() {
            warnings.push(TABULATED_WARNING.to_string());
        }
        Ok(Evolution {
            problem,
            lambda,
            cfg: *cfg,
            xs,
            frames,
            states,
            warnings,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn states(&self) -> &[BranchState] {
        &self.states
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn accepted_steps(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn final_frame(&self) -> &Frame {
        self.frames.last().expect("at least the initial frame")
    }

    /// Candidate brackets: sign changes of `det X` between checkpoints, then
    /// isolated `|μ|` blowups without a sign change nearby.
    pub fn crossing_brackets(&self) -> Vec<(f64, f64)> {
        let d: Vec<f64> = self.states.iter().map(|s| s.det_x).collect();
        let m = d.len();
        let mut brackets: Vec<(usize, usize)> = Vec::new();
        for i in 0..m.saturating_sub(1) {
            if d[i] * d[i + 1] < 0.0 {
                brackets.push((i, i + 1));
            } else if d[i + 1] == 0.0 && i + 2 < m {
                brackets.push((i, i + 2));
            }
        }
        let covered = |i: usize, brackets: &[(usize, usize)]| {
            brackets.iter().any(|&(a, b)| i + 1 >= a && i <= b + 1)
        };
        let mut fallback: Vec<(usize, usize)> = Vec::new();
        for i in 1..m.saturating_sub(1) {
            if self.states[i].mu.iter().any(|v| v.is_none()) && !covered(i, &brackets) {
                match fallback.last_mut() {
                    Some(last) if last.1 >= i => last.1 = i + 1,
                    _ => fallback.push((i - 1, i + 1)),
                }
            }
        }
        brackets.extend(fallback);
        brackets.sort();
        brackets.dedup();
        brackets
            .into_iter()
            .map(|(a, b)| (self.xs[a], self.xs[b]))
            .collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn track_step(
    problem: &Problem,
    lambda: f64,
    cfg: &IntegratorConfig,
    tcfg: &TrackerConfig,
    prev: &BranchState,
    prev_frame: &Frame,
    prev_x: f64,
    frame: &Frame,
    x: f64,
) -> Result<BranchState> {
    match branch_state(frame, x, Some(prev), tcfg) {
        Err(MaslovError::AmbiguousMatching { .. }) => {}
        other => return other,
    }
    // Halve the step until the intermediate matchings are unambiguous.
    let blocks_at = |s: f64| problem.blocks(s, lambda);
    let mut last_err = None;
    for depth in 1..=8u32 {
        let parts = 1usize << depth;
        let h = (x - prev_x) / parts as f64;
        let mut state = prev.clone();
        let mut f = prev_frame.clone();
        let mut ok = true;
        for i in 1..parts {
            let xi = prev_x + i as f64 * h;
            f = advance(&blocks_at, &f, xi - h, xi, cfg.step)?;
            match branch_state(&f, xi, Some(&state), tcfg) {
                Ok(s) => state = s,
                Err(e @ MaslovError::AmbiguousMatching { .. }) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            match branch_state(frame, x, Some(&state), tcfg) {
                Ok(s) => return Ok(s),
                Err(e @ MaslovError::AmbiguousMatching { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

impl FramePath for Evolution<'_> {
    fn frame_at(&self, x: f64) -> Result<Frame> {
        let i = self.xs.partition_point(|&c| c <= x).saturating_sub(1);
        let blocks_at = |s: f64| self.problem.blocks(s, self.lambda);
        advance(&blocks_at, &self.frames[i], self.xs[i], x, self.cfg.step)
    }

    fn derivative_at(&self, x: f64, frame: &Frame) -> Frame {
        frame_rhs(&self.problem.blocks(x, self.lambda), frame)
    }

    fn domain(&self) -> (f64, f64) {
        (-self.cfg.half_width, self.cfg.half_width)
    }
}

/// Result of [`locate_crossing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub x0: f64,
    pub bisections: usize,
    /// Whether `det X` changed sign over the bracket.
    pub sign_change: bool,
}

/// Locates the zero of `det X` inside `[a, b]`: bisection to `tol` followed
/// by a Newton polish when `det X` changes sign, golden-section minimization
/// of `σ_min(X)` otherwise.
pub fn locate_crossing<P: FramePath + ?Sized>(
    path: &P,
    bracket: (f64, f64),
    tcfg: &TrackerConfig,
) -> Result<Located> {
    let (mut a, mut b) = bracket;
    let det_at = |x: f64| -> Result<f64> { Ok(path.frame_at(x)?.normalized_det_x()) };
    let da = det_at(a)?;
    let db = det_at(b)?;
    if da == 0.0 {
        return Ok(Located {
            x0: a,
            bisections: 0,
            sign_change: true,
        });
    }
    if db == 0.0 {
        return Ok(Located {
            x0: b,
            bisections: 0,
            sign_change: true,
        });
    }
    if da * db < 0.0 {
        let mut bisections = 0;
        let mut fa = da;
        while b - a > tcfg.locate_tol {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let fm = det_at(m)?;
            bisections += 1;
            if fm == 0.0 {
                return Ok(Located {
                    x0: m,
                    bisections,
                    sign_change: true,
                });
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        let mut x0 = 0.5 * (a + b);
        // Newton on the raw det X, using d det X/dx = tr(adj(X) Ẋ).
        for _ in 0..3 {
            let f = path.frame_at(x0)?;
            let df = path.derivative_at(x0, &f);
            let (adj, det) = linalg::adjugate_det(&f.x_block);
            let slope = (&adj * &df.x_block).trace();
            if det == 0.0 || !(slope.abs() > 0.0) {
                break;
            }
            let next = x0 - det / slope;
            if !(next >= a && next <= b) {
                break;
            }
            x0 = next;
        }
        return Ok(Located {
            x0,
            bisections,
            sign_change: true,
        });
    }

    // No sign change: minimize σ_min(X).
    let sigma = |x: f64| -> Result<f64> { path.frame_at(x)?.normalized_sigma_min() };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sigma(c)?;
    let mut fd = sigma(d)?;
    while b - a > tcfg.locate_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sigma(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sigma(d)?;
        }
    }
    let x0 = 0.5 * (a + b);
    if sigma(x0)? > 10.0 * tcfg.kernel_threshold {
        return Err(MaslovError::SpuriousDetection {
            a: bracket.0,
            b: bracket.1,
        });
    }
    Ok(Located {
        x0,
        bisections: 0,
        sign_change: false,
    })
}

/// Classification of one crossing with its cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRecord {
    pub x0: f64,
    /// `dim ker X(x0)`.
    pub k: usize,
    /// Contribution of each singular branch.
    pub branch_signs: Vec<i32>,
    pub signature: i32,
    /// Sign of each singular branch just left and right of `x0`.
    pub left_limits: Vec<i32>,
    pub right_limits: Vec<i32>,
    /// Signature of the crossing form at `x0`.
    pub crossing_form_signature: i32,
    /// `(x − x0) μ` just left and right of `x0`, per singular branch.
    pub residues: Vec<(f64, f64)>,
    /// Offset at which the one-sided limits were read.
    pub delta: f64,
    /// For k = 1: `−sign(ν(x0)) · sign(d det X/dx)`.
    pub nu_rule_sign: Option<i32>,
}

impl CrossingRecord {
    /// Largest relative mismatch between left and right pole residues.
    pub fn pole_order_mismatch(&self) -> f64 {
        self.residues
            .iter()
            .map(|(l, r)| (l - r).abs() / (0.5 * (l.abs() + r.abs())))
            .fold(0.0, f64::max)
    }
}

fn sign_of(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Classifies the crossing at `x0` from the one-sided limits of the
/// singular branches. `others` lists nearby crossing locations; the offset
/// shrinks until none lies within twice of it.
pub fn classify_crossing<P: FramePath + ?Sized>(
    path: &P,
    x0: f64,
    others: &[f64],
    tcfg: &TrackerConfig,
) -> Result<CrossingRecord> {
    let f0 = path.frame_at(x0)?.orthonormalized()?;
    let gram = f0.x_gram_eig()?;
    let kernel: Vec<Vec<f64>> = gram
        .values
        .iter()
        .enumerate()
        .filter(|(_, &s2)| s2.max(0.0).sqrt() < tcfg.kernel_threshold)
        .map(|(j, _)| gram.vector(j))
        .collect();
    let k = kernel.len();
    if k == 0 {
        return Err(MaslovError::SpuriousDetection { a: x0, b: x0 });
    }
    let df = path.derivative_at(x0, &f0);
    let form = crossing_form(&f0, &df, &kernel, x0)?;

    let nu_rule_sign = if k == 1 {
        let cont = continuous_s(&f0);
        let eig = linalg::sym_eig(&cont.m)?;
        let nu = eig
            .values
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .expect("n ≥ 1");
        let (adj, _) = linalg::adjugate_det(&f0.x_block);
        let slope = (&adj * &df.x_block).trace();
        Some(-sign_of(nu) * sign_of(slope))
    } else {
        None
    };

    let mut delta = tcfg.delta;
    let (left, right) = loop {
        if delta < tcfg.min_delta {
            return Err(MaslovError::NonOrderOneSingularity {
                x0,
                detail: format!(
                    "no offset down to {:e} shows {k} branches beyond {:e} on both sides",
                    tcfg.min_delta, tcfg.blowup_threshold
                ),
            });
        }
        if others
            .iter()
            .any(|&o| o != x0 && (o - x0).abs() <= 2.0 * delta)
        {
            delta *= 0.5;
            continue;
        }
        let left = local_branches(&path.frame_at(x0 - delta)?, tcfg)?;
        let right = local_branches(&path.frame_at(x0 + delta)?, tcfg)?;
        let singular = |b: &LocalBranches| -> Vec<usize> {
            (0..b.mu.len())
                .filter(|&j| !(b.mu[j].abs() <= tcfg.blowup_threshold))
                .collect()
        };
        let (sl, sr) = (singular(&left), singular(&right));
        if sl.len() == k && sr.len() == k {
            break ((left, sl), (right, sr));
        }
        let exhausted = sl.len() > k || sr.len() > k || delta * 0.5 < tcfg.min_delta;
        if exhausted && sl.len() != sr.len() {
            return Err(MaslovError::NonOrderOneSingularity {
                x0,
                detail: format!(
                    "{} singular branches on the left, {} on the right",
                    sl.len(),
                    sr.len()
                ),
            });
        }
        delta *= 0.5;
    };

    let ((lb, sl), (rb, sr)) = (left, right);
    // Pair left and right singular branches by eigenvector overlap.
    let n = lb.mu.len();
    let pick = |b: &LocalBranches, idx: &[usize]| {
        let mut m = Matrix::zeros(n, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            m.set_column(c, &b.vectors.column(j));
        }
        m
    };
    let perm = match_vectors(&pick(&lb, &sl), &pick(&rb, &sr), x0)?;
    let mut branch_signs = Vec::with_capacity(k);
    let mut left_limits = Vec::with_capacity(k);
    let mut right_limits = Vec::with_capacity(k);
    let mut residues = Vec::with_capacity(k);
    for (c, &j) in sl.iter().enumerate() {
        let mu_l = lb.mu[j];
        let mu_r = rb.mu[sr[perm[c]]];
        let (l, r) = (sign_of(mu_l), sign_of(mu_r));
        let contribution = match (l, r) {
            (1, -1) => 1,
            (-1, 1) => -1,
            _ => {
                return Err(MaslovError::NonOrderOneSingularity {
                    x0,
                    detail: format!("branch keeps sign {l} on both sides (even-order pole)"),
                })
            }
        };
        branch_signs.push(contribution);
        left_limits.push(l);
        right_limits.push(r);
        residues.push((-delta * mu_l, delta * mu_r));
    }
    let signature: i32 = branch_signs.iter().sum();
    if signature != form.signature {
        return Err(MaslovError::Inconsistency {
            x0,
            limits: signature,
            form: form.signature,
        });
    }
    Ok(CrossingRecord {
        x0,
        k,
        branch_signs,
        signature,
        left_limits,
        right_limits,
        crossing_form_signature: form.signature,
        residues,
        delta,
        nu_rule_sign,
    })
}

/// Endpoint and drift diagnostics of one index computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub accepted_steps: usize,
    /// Largest normalized `‖XᵀY − YᵀX‖` over all checkpoints.
    pub lagrangian_residual_max: f64,
    /// Largest asymmetry of `Y X⁻¹` before symmetrization.
    pub riccati_asymmetry_max: f64,
    /// Largest `|μ det X − ν|` mismatch between the two charts.
    pub branch_pairing_max: f64,
    /// Projector distance of `W(−L)` to `E^u(−∞)`.
    pub endpoint_mismatch_minus: f64,
    /// Projector distance of `W(L)` to the unstable limit `E^u(+∞)`.
    pub endpoint_mismatch_plus: f64,
    /// `(‖V(−L) − V₋‖, ‖V(L) − V₊‖)`.
    pub potential_limit_mismatch: (f64, f64),
    /// Normalized `det X` at `−L` and `L`.
    pub det_x_endpoints: (f64, f64),
    /// Normalized `det [W | E^s(+∞)]` at `−L` and `L`.
    pub stable_transversality: (f64, f64),
    /// Both endpoints transverse to the vertical plane and to `E^s(+∞)`, so
    /// the index relative to the vertical plane equals the index relative
    /// to `E^s(+∞)`.
    pub hormander_zero_verified: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaslovResult {
    pub lambda: f64,
    pub index: i32,
    pub crossings: Vec<CrossingRecord>,
    pub diagnostics: Diagnostics,
}

fn projector_distance(a: &Frame, b: &Frame) -> Result<f64> {
    Ok((&a.projector()? - &b.projector()?).max_abs())
}

fn transversality(a: &Frame, b: &Frame) -> Result<f64> {
    let qa = linalg::orthonormalize(&a.stacked())?;
    let qb = linalg::orthonormalize(&b.stacked())?;
    let n2 = qa.rows();
    let n = qa.cols();
    let mut m = Matrix::zeros(n2, 2 * n);
    for j in 0..n {
        m.set_column(j, &qa.column(j));
        m.set_column(n + j, &qb.column(j));
    }
    Ok(linalg::det(&m).abs())
}

pub fn maslov_index(p: &Problem, lambda: f64, cfg: &IntegratorConfig) -> Result<MaslovResult> {
    maslov_index_with(p, lambda, cfg, &TrackerConfig::default())
}

pub fn maslov_index_with(
    p: &Problem,
    lambda: f64,
    cfg: &IntegratorConfig,
    tcfg: &TrackerConfig,
) -> Result<MaslovResult> {
    let evolution = Evolution::run(p, lambda, cfg, tcfg)?;
    maslov_index_of(&evolution, tcfg)
}

/// Locates and classifies every crossing of an already integrated path.
pub fn maslov_index_of(evolution: &Evolution<'_>, tcfg: &TrackerConfig) -> Result<MaslovResult> {
    let p = evolution.problem();
    let lambda = evolution.lambda();
    let (lo, hi) = evolution.domain();

    let mut located = Vec::new();
    for bracket in evolution.crossing_brackets() {
        located.push(locate_crossing(evolution, bracket, tcfg)?.x0);
    }
    located.sort_by(f64::total_cmp);
    located.dedup_by(|a, b| (*a - *b).abs() <= tcfg.locate_tol);
    for &x0 in &located {
        if x0 - lo <= tcfg.delta || hi - x0 <= tcfg.delta {
            return Err(MaslovError::CrossingAtBoundary {
                x0,
                delta: tcfg.delta,
            });
        }
    }
    let crossings = located
        .iter()
        .map(|&x0| classify_crossing(evolution, x0, &located, tcfg))
        .collect::<Result<Vec<_>>>()?;
    let index: i32 = crossings.iter().map(|c| c.signature).sum();
    assert_eq!(
        index,
        crossings
            .iter()
            .map(|c| c.branch_signs.iter().sum::<i32>())
            .sum::<i32>()
    );

    let states = evolution.states();
    let frames = evolution.frames();
    let start = &frames[0];
    let end = evolution.final_frame();
    let stable = p.stable_frame_at_plus_infinity(lambda)?;
    let st_minus = transversality(start, &stable)?;
    let st_plus = transversality(end, &stable)?;
    let det_minus = states[0].det_x;
    let det_plus = states.last().expect("non-empty").det_x;
    let hormander_zero_verified = det_minus.abs() > tcfg.transversality_tol
        && det_plus.abs() > tcfg.transversality_tol
        && st_minus > tcfg.transversality_tol
        && st_plus > tcfg.transversality_tol;

    let diagnostics = Diagnostics {
        accepted_steps: evolution.accepted_steps(),
        lagrangian_residual_max: frames
            .iter()
            .map(|f| f.lagrangian_residual())
            .fold(0.0, f64::max),
        riccati_asymmetry_max: states.iter().map(|s| s.asymmetry).fold(0.0, f64::max),
        branch_pairing_max: states
            .iter()
            .map(|s| s.pairing_residual)
            .fold(0.0, f64::max),
        endpoint_mismatch_minus: projector_distance(
            start,
            &p.unstable_frame_at_minus_infinity(lambda)?,
        )?,
        endpoint_mismatch_plus: projector_distance(
            end,
            &p.unstable_frame_at_plus_infinity(lambda)?,
        )?,
        potential_limit_mismatch: p.limit_mismatch(hi),
        det_x_endpoints: (det_minus, det_plus),
        stable_transversality: (st_minus, st_plus),
        hormander_zero_verified,
        warnings: evolution.warnings().to_vec(),
    };
    Ok(MaslovResult {
        lambda,
        index,
        crossings,
        diagnostics,
    })
}

/// One [`maslov_index`] per λ, computed in parallel and returned in input order.
pub fn sweep(
    p: &Problem,
    lambdas: &[f64],
    cfg: &IntegratorConfig,
) -> Vec<(f64, Result<MaslovResult>)> {
    sweep_with(p, lambdas, cfg, &TrackerConfig::default())
}

pub fn sweep_with(
    p: &Problem,
    lambdas: &[f64],
    cfg: &IntegratorConfig,
    tcfg: &TrackerConfig,
) -> Vec<(f64, Result<MaslovResult>)> {
    lambdas
        .par_iter()
        .map(|&lambda| (lambda, maslov_index_with(p, lambda, cfg, tcfg)))
        .collect()
}

/// Residual of `⟨w_j, Ṡ w_k⟩ = δ_jk μ̇_k + (μ_k − μ_j) g_jk` at `x`, with `Ṡ`
/// from the Riccati right-hand side and `μ̇`, `ẇ` from central differences
/// of step `h`. Normalized by `max(1, max|Ṡ|)`.
pub fn bilinear_identity_residual(evolution: &Evolution<'_>, x: f64, h: f64) -> Result<f64> {
    let tcfg = TrackerConfig::default();
    let frame = evolution.frame_at(x)?;
    let here = branch_state(&frame, x, None, &tcfg)?;
    let left = branch_state(&evolution.frame_at(x - h)?, x - h, Some(&here), &tcfg)?;
    let right = branch_state(&evolution.frame_at(x + h)?, x + h, Some(&here), &tcfg)?;
    let n = here.n();
    let value = |s: &BranchState, j: usize| s.raw_mu(j);
    let s = riccati_s(&frame, 0.0)?.s;
    let s_dot = riccati_rhs(&evolution.problem().blocks(x, evolution.lambda()), &s);
    let s_dot = SymMatrix::symmetrize(&s_dot);
    let scale = s_dot.as_matrix().max_abs().max(1.0);
    let mut worst = 0.0_f64;
    for j in 0..n {
        let wj = here.w.column(j);
        for k in 0..n {
            let wk = here.w.column(k);
            let lhs = dot(&wj, &s_dot.as_matrix().mul_vec(&wk));
            let mu_dot = (value(&right, k) - value(&left, k)) / (2.0 * h);
            let wk_dot: Vec<f64> = (0..n)
                .map(|i| (right.w[(i, k)] - left.w[(i, k)]) / (2.0 * h))
                .collect();
            let g = dot(&wj, &wk_dot);
            let rhs = if j == k { mu_dot } else { 0.0 } + (value(&here, k) - value(&here, j)) * g;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn state_from(vectors: Matrix) -> BranchState {
        let n = vectors.cols();
        BranchState {
            x: 0.0,
            mu: vec![Some(0.0); n],
            w: vectors,
            nu: vec![0.0; n],
            det_x: 1.0,
            pairing_residual: 0.0,
            asymmetry: 0.0,
        }
    }

    #[test]
    fn matching_identity_and_swap() {
        let prev = state_from(Matrix::identity(3));
        let eig = EigDecomp {
            values: vec![0.0, 1.0, 2.0],
            vectors: Matrix::identity(3),
        };
        assert_eq!(match_branches(&prev.w, &eig, 0.0).unwrap(), vec![0, 1, 2]);
        let swapped = EigDecomp {
            values: vec![0.0, 1.0],
            vectors: Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]),
        };
        let prev = state_from(Matrix::identity(2));
        assert_eq!(match_branches(&prev.w, &swapped, 0.0).unwrap(), vec![1, 0]);
    }

    #[test]
    fn matching_ambiguous() {
        // Best remaining overlap for the last branch is 1/√3.
        let (a, b, c) = (1.0 / 3f64.sqrt(), 1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt());
        let prev = state_from(Matrix::identity(3));
        let mixed = EigDecomp {
            values: vec![0.0, 1.0, 2.0],
            vectors: Matrix::from_rows(&[[a, b, c], [a, -b, c], [a, 0.0, -2.0 * c]]),
        };
        assert!(matches!(
            match_branches(&prev.w, &mixed, 0.0),
            Err(MaslovError::AmbiguousMatching { .. })
        ));
    }

    fn linear_path() -> ClosurePath<impl Fn(f64) -> Frame, impl Fn(f64) -> Frame> {
        // X = x − 0.3 (det linear through 0.3), Y = 1
        ClosurePath {
            frame: |x: f64| {
                Frame::new(Matrix::from_rows(&[[x - 0.3]]), Matrix::identity(1)).unwrap()
            },
            derivative: |_x: f64| Frame::new(Matrix::identity(1), Matrix::zeros(1, 1)).unwrap(),
            domain: (-1.0, 1.0),
        }
    }

    #[test]
    fn bisection_contract() {
        let path = linear_path();
        let loc = locate_crossing(&path, (-1.0, 1.0), &TrackerConfig::default()).unwrap();
        assert!(loc.sign_change);
        assert!(loc.bisections <= 40);
        assert!((loc.x0 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn scalar_crossing_sign() {
        // X = x − 0.3, Y = 1: μ = 1/(x − 0.3) runs −∞ → +∞, contribution −1;
        // crossing form −⟨Y u, Ẋ u⟩ = −1.
        let path = linear_path();
        let rec = classify_crossing(&path, 0.3, &[0.3], &TrackerConfig::default()).unwrap();
        assert_eq!(rec.k, 1);
        assert_eq!(rec.signature, -1);
        assert_eq!(rec.crossing_form_signature, -1);
        assert_eq!((rec.left_limits[0], rec.right_limits[0]), (-1, 1));
        assert_eq!(rec.nu_rule_sign, Some(-1));
        assert!(rec.pole_order_mismatch() < 1e-3);
    }

    #[test]
    fn spurious_bracket() {
        let path = ClosurePath {
            frame: |x: f64| {
                Frame::new(Matrix::from_rows(&[[1.0 + x * x]]), Matrix::identity(1)).unwrap()
            },
            derivative: |x: f64| {
                Frame::new(Matrix::from_rows(&[[2.0 * x]]), Matrix::zeros(1, 1)).unwrap()
            },
            domain: (-1.0, 1.0),
        };
        assert!(matches!(
            locate_crossing(&path, (-0.5, 0.5), &TrackerConfig::default()),
            Err(MaslovError::SpuriousDetection { .. })
        ));
    }

    #[test]
    fn even_order_pole_rejected() {
        // X = (x − 0.1)², Y = 1: μ → +∞ from both sides. No sign change of
        // det X, so σ_min minimization locates it.
        let path = ClosurePath {
            frame: |x: f64| {
                Frame::new(
                    Matrix::from_rows(&[[(x - 0.1).powi(2)]]),
                    Matrix::identity(1),
                )
                .unwrap()
            },
            derivative: |x: f64| {
                Frame::new(Matrix::from_rows(&[[2.0 * (x - 0.1)]]), Matrix::zeros(1, 1)).unwrap()
            },
            domain: (-1.0, 1.0),
        };
        let loc = locate_crossing(&path, (-0.5, 0.5), &TrackerConfig::default()).unwrap();
        assert!(!loc.sign_change);
        assert!((loc.x0 - 0.1).abs() < 1e-8);
        let err = classify_crossing(&path, loc.x0, &[], &TrackerConfig::default()).unwrap_err();
        assert!(
            matches!(err, MaslovError::NonOrderOneSingularity { .. }),
            "{err}"
        );
    }

    #[test]
    fn double_kernel_with_zero_signature() {
        // X = diag(x, −x), Y = I: both branches singular at 0, with opposite
        // contributions.
        let path = ClosurePath {
            frame: |x: f64| Frame::new(Matrix::from_diag(&[x, -x]), Matrix::identity(2)).unwrap(),
            derivative: |_x: f64| {
                Frame::new(Matrix::from_diag(&[1.0, -1.0]), Matrix::zeros(2, 2)).unwrap()
            },
            domain: (-1.0, 1.0),
        };
        let cfg = TrackerConfig::default();
        let loc = locate_crossing(&path, (-0.37, 0.61), &cfg).unwrap();
        assert!(!loc.sign_change);
        assert!(loc.x0.abs() < 1e-8);
        let rec = classify_crossing(&path, loc.x0, &[loc.x0], &cfg).unwrap();
        assert_eq!(rec.k, 2);
        assert_eq!(rec.signature, 0);
        assert_eq!(rec.crossing_form_signature, 0);
        let mut signs = rec.branch_signs.clone();
        signs.sort();
        assert_eq!(signs, vec![-1, 1]);
        assert_eq!(rec.nu_rule_sign, None);
    }

    mod examples {
        use super::super::*;
        use crate::examples::{analytic_poles, example1_problem, example2_problem, ExampleId};

        #[test]
        fn first_example_indices() {
            let p = example1_problem();
            let cfg = IntegratorConfig::default();
            for (lambda, expected) in [(0.5, -1), (1.0, -1), (2.0, 0)] {
                let r = maslov_index(&p, lambda, &cfg).unwrap();
                assert_eq!(r.index, expected, "λ = {lambda}");
                let poles = analytic_poles(ExampleId::Example1, lambda, cfg.half_width).unwrap();
                assert_eq!(poles.len(), r.crossings.len());
                for (pole, rec) in poles.iter().zip(&r.crossings) {
                    assert!((pole.x0 - rec.x0).abs() < 1e-8, "{} vs {}", pole.x0, rec.x0);
                    assert_eq!(rec.signature, pole.sign);
                    assert_eq!(rec.nu_rule_sign, Some(rec.signature));
                    assert!(rec.pole_order_mismatch() < 1e-3);
                }
                assert!(r.diagnostics.hormander_zero_verified);
                assert!(r.diagnostics.lagrangian_residual_max < 1e-10);
            }
        }

        #[test]
        fn second_example_index() {
            let p = example2_problem(-1.0);
            let r = maslov_index(&p, 1.0, &IntegratorConfig::default()).unwrap();
            assert_eq!(r.index, -3);
            let poles = analytic_poles(ExampleId::Example2 { c: -1.0 }, 1.0, 20.0).unwrap();
            let mut xs: Vec<f64> = poles.iter().map(|q| q.x0).collect();
            xs.sort_by(f64::total_cmp);
            assert_eq!(xs.len(), r.crossings.len());
            for (x, rec) in xs.iter().zip(&r.crossings) {
                assert!((x - rec.x0).abs() < 1e-8);
                assert_eq!(rec.k, 1);
            }
        }

        #[test]
        fn free_problem_has_no_crossings() {
            let r = maslov_index(&Problem::free(2), 1.5, &IntegratorConfig::default()).unwrap();
            assert_eq!(r.index, 0);
            assert!(r.crossings.is_empty());
            assert!(r.diagnostics.endpoint_mismatch_plus < 1e-10);
        }

        #[test]
        fn sweep_keeps_order_and_failures() {
            let p = example1_problem();
            let cfg = IntegratorConfig {
                half_width: 10.0,
                ..Default::default()
            };
            assert!(sweep(&p, &[], &cfg).is_empty());
            let out = sweep(&p, &[2.0, -1.5, 0.5], &cfg);
            let lambdas: Vec<f64> = out.iter().map(|(l, _)| *l).collect();
            assert_eq!(lambdas, vec![2.0, -1.5, 0.5]);
            assert_eq!(out[0].1.as_ref().unwrap().index, 0);
            assert!(matches!(
                out[1].1,
                Err(MaslovError::LambdaInEssentialSpectrum { .. })
            ));
            assert_eq!(out[2].1.as_ref().unwrap().index, -1);
        }

        #[test]
        fn adaptive_agrees_with_fixed() {
            let p = example2_problem(-1.0);
            let cfg = IntegratorConfig {
                method: crate::integrate::Method::AdaptiveRk45,
                ..Default::default()
            };
            let r = maslov_index(&p, 1.0, &cfg).unwrap();
            assert_eq!(r.index, -3);
        }

        #[test]
        fn bilinear_identity_holds_off_poles() {
            let p = example2_problem(-1.0);
            let cfg = IntegratorConfig::default();
            let ev = Evolution::run(&p, 1.0, &cfg, &TrackerConfig::default()).unwrap();
            for x in [-3.0, -0.5, 0.6, 2.5] {
                let r = bilinear_identity_residual(&ev, x, 1e-4).unwrap();
                assert!(r < 1e-6, "x = {x}: {r}");
            }
        }
    }
}
