//! Two problems with closed-form unstable solutions, used as built-in
//! problems and as oracles for the numerical pipeline.
//!
//! * `example1`: `u'' − u + 3 sech²(x/2) u = λ u` (n = 1), linearization of
//!   `u_t = u_xx − u + u²` about `(3/2) sech²(x/2)`. Eigenvalues `−3/4, 0, 5/4`.
//! * `example2`: the coupled pair `u_t = u_xx − 4u + 6u² ∓ c(u − v)` about
//!   `u = v = sech² x`, shipped in the decoupled variables `ũ = (u + v)/2`,
//!   `ṽ = (v − u)/2`: `ũ'' + 12 sech²(x) ũ = (λ + 4) ũ` and
//!   `ṽ'' + 12 sech²(x) ṽ = (λ + 4 + 2c) ṽ`. Both channels are Pöschl–Teller
//!   wells with bound states at `κ² = 1, 4, 9`, so for `c = −1` the positive
//!   eigenvalues are `2, 5, 7`.
//!
//! Both unstable solutions have the form `e^{r x} P(tanh(σ x))` with a cubic
//! `P`; singularities of the Riccati eigenvalues are the zeros of `P`.

use crate::error::{MaslovError, Result};
use crate::linalg::SymMatrix;
use crate::problem::Problem;

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    if c.is_infinite() {
        0.0
    } else {
        1.0 / (c * c)
    }
}

/// Eigenvalues of the example-1 operator.
pub const EXAMPLE1_EIGENVALUES: [f64; 3] = [-0.75, 0.0, 1.25];

/// Positive eigenvalues of the example-2 operator at `c = −1`
/// (`λ = κ² − 4` and `λ = κ² − 2` for `κ = 1, 2, 3`).
pub const EXAMPLE2_POSITIVE_EIGENVALUES: [f64; 3] = [2.0, 5.0, 7.0];

/// Value of a closed-form Riccati eigenvalue: finite, or at a pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticValue {
    Finite(f64),
    Pole,
}

impl AnalyticValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            AnalyticValue::Finite(v) => Some(v),
            AnalyticValue::Pole => None,
        }
    }
}

/// `P(t) = a0 + a1 t + a2 t² + t³` in `t = tanh(σ x)`, times `e^{r x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CubicMode {
    a0: f64,
    a1: f64,
    a2: f64,
    /// Exponential rate in x.
    rate: f64,
    /// tanh argument scale: t = tanh(sigma · x).
    sigma: f64,
}

impl CubicMode {
    fn poly(&self, t: f64) -> f64 {
        ((t + self.a2) * t + self.a1) * t + self.a0
    }

    fn poly_dt(&self, t: f64) -> f64 {
        (3.0 * t + 2.0 * self.a2) * t + self.a1
    }

    /// Polynomial factor and its x-derivative.
    fn factor(&self, x: f64) -> (f64, f64) {
        let t = (self.sigma * x).tanh();
        let p = self.poly(t);
        let dp = self.poly_dt(t) * self.sigma * (1.0 - t * t);
        (p, dp)
    }

    /// `u'/u = rate + P_x / P`.
    fn log_derivative(&self, x: f64) -> AnalyticValue {
        let (p, dp) = self.factor(x);
        if p.abs() < 1e-300 {
            AnalyticValue::Pole
        } else {
            AnalyticValue::Finite(self.rate + dp / p)
        }
    }

    /// Zeros of the polynomial factor in `(−half_width, half_width)`, each
    /// with its contribution from the one-sided limits of `u'/u`.
    fn poles(&self, half_width: f64) -> Vec<(f64, i32)> {
        const SCAN: f64 = 1e-3;
        let p = |x: f64| self.factor(x).0;
        let steps = (2.0 * half_width / SCAN).ceil() as usize;
        let mut out = Vec::new();
        let mut xa = -half_width;
        let mut pa = p(xa);
        for i in 1..=steps {
            let xb = (-half_width + i as f64 * SCAN).min(half_width);
            let pb = p(xb);
            if pa == 0.0 && i > 1 {
                out.push(xa);
            } else if pa * pb < 0.0 {
                out.push(bisect(&p, xa, xb));
            }
            xa = xb;
            pa = pb;
        }
        out.into_iter()
            .map(|x0| {
                // Near x0, u'/u ≈ N / (P_x (x − x0)) with N = rate P + P_x → P_x.
                let (pv, dp) = self.factor(x0);
                let numerator = self.rate * pv + dp;
                let left_negative = numerator * dp > 0.0;
                // left −∞, right +∞ contributes −1
                (x0, if left_negative { -1 } else { 1 })
            })
            .collect()
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Closed-form coefficients for example 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Params {
    pub lambda: f64,
    pub gamma: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Example1Params {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda + 1.0 > 0.0) {
            return Err(MaslovError::LambdaInEssentialSpectrum {
                lambda,
                side: "minus",
            });
        }
        let gamma = 2.0 * (lambda + 1.0).sqrt();
        Ok(Example1Params {
            lambda,
            gamma,
            a0: gamma * (4.0 - gamma * gamma) / 15.0,
            a1: (2.0 * gamma * gamma - 3.0) / 5.0,
            a2: -gamma,
        })
    }

    fn mode(&self) -> CubicMode {
        // u = e^{γ s} h(s), s = x/2
        CubicMode {
            a0: self.a0,
            a1: self.a1,
            a2: self.a2,
            rate: 0.5 * self.gamma,
            sigma: 0.5,
        }
    }

    /// `h⁺(s)` and `h⁺_s(s)`.
    pub fn h_plus(&self, s: f64) -> (f64, f64) {
        let t = s.tanh();
        let m = self.mode();
        (m.poly(t), m.poly_dt(t) * (1.0 - t * t))
    }
}

/// Closed-form coefficients for example 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example2Params {
    pub lambda: f64,
    pub c: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Example2Params {
    pub fn new(lambda: f64, c: f64) -> Result<Self> {
        if !(lambda + 4.0 > 0.0) || !(lambda + 4.0 + 2.0 * c > 0.0) {
            return Err(MaslovError::LambdaInEssentialSpectrum {
                lambda,
                side: "minus",
            });
        }
        let r1 = (lambda + 4.0).sqrt();
        let r2 = (lambda + 4.0 + 2.0 * c).sqrt();
        Ok(Example2Params {
            lambda,
            c,
            a0: -lambda * r1 / 15.0,
            a1: (2.0 * lambda + 5.0) / 5.0,
            a2: -r1,
            b0: -(lambda + 2.0 * c) * r2 / 15.0,
            b1: (2.0 * lambda + 4.0 * c + 5.0) / 5.0,
            b2: -r2,
        })
    }

    fn modes(&self) -> (CubicMode, CubicMode) {
        (
            CubicMode {
                a0: self.a0,
                a1: self.a1,
                a2: self.a2,
                rate: -self.a2,
                sigma: 1.0,
            },
            CubicMode {
                a0: self.b0,
                a1: self.b1,
                a2: self.b2,
                rate: -self.b2,
                sigma: 1.0,
            },
        )
    }
}

/// `V(x) = −1 + 3 sech²(x/2)`, `V(±∞) = −1`.
pub fn example1_problem() -> Problem {
    Problem::analytic(
        "example1",
        |x| SymMatrix::from_diag(&[-1.0 + 3.0 * sech2(0.5 * x)]),
        SymMatrix::from_diag(&[-1.0]),
        SymMatrix::from_diag(&[-1.0]),
        "V approaches -1 like exp(-|x|)",
    )
    .expect("consistent dimensions")
}

/// Decoupled example 2: `V(x) = diag(12 sech² x − 4, 12 sech² x − 4 − 2c)`.
pub fn example2_problem(c: f64) -> Problem {
    let v_inf = SymMatrix::from_diag(&[-4.0, -4.0 - 2.0 * c]);
    Problem::analytic(
        format!("example2(c={c})"),
        move |x| {
            let s = 12.0 * sech2(x);
            SymMatrix::from_diag(&[s - 4.0, s - 4.0 - 2.0 * c])
        },
        v_inf.clone(),
        v_inf,
        "V approaches its limit like exp(-2|x|)",
    )
    .expect("consistent dimensions")
}

/// A genuinely coupled two-channel problem with no closed form:
/// `V = diag(12 sech² x − 4, 12 sech² x − 2) + ε sech x · [[0, 1], [1, 0]]`.
/// Its Riccati eigenvectors rotate with x, which the branch identities need.
pub fn coupled_problem(epsilon: f64) -> Problem {
    let v_inf = SymMatrix::from_diag(&[-4.0, -2.0]);
    Problem::analytic(
        format!("coupled(eps={epsilon})"),
        move |x| {
            let s = 12.0 * sech2(x);
            let off = epsilon / x.cosh();
            SymMatrix::symmetrize(&crate::linalg::Matrix::from_rows(&[
                [s - 4.0, off],
                [off, s - 2.0],
            ]))
        },
        v_inf.clone(),
        v_inf,
        "V approaches its limit like exp(-|x|)",
    )
    .expect("consistent dimensions")
}

/// `S = (h⁺_s + γ h⁺) / (2 h⁺)` evaluated at `s = x/2`.
pub fn example1_analytic_s(lambda: f64, x: f64) -> Result<AnalyticValue> {
    Ok(Example1Params::new(lambda)?.mode().log_derivative(x))
}

/// `(ũ⁺_x / ũ⁺, ṽ⁺_x / ṽ⁺)`.
pub fn example2_analytic_branches(
    lambda: f64,
    c: f64,
    x: f64,
) -> Result<(AnalyticValue, AnalyticValue)> {
    let (u, v) = Example2Params::new(lambda, c)?.modes();
    Ok((u.log_derivative(x), v.log_derivative(x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleId {
    Example1,
    Example2 { c: f64 },
}

/// A pole of a closed-form branch: branch index, location, contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPole {
    pub branch: usize,
    pub x0: f64,
    pub sign: i32,
}

/// All poles in `(−half_width, half_width)`, sorted by location.
pub fn analytic_poles(id: ExampleId, lambda: f64, half_width: f64) -> Result<Vec<AnalyticPole>> {
    let modes = match id {
        ExampleId::Example1 => vec![Example1Params::new(lambda)?.mode()],
        ExampleId::Example2 { c } => {
            let (u, v) = Example2Params::new(lambda, c)?.modes();
            vec![u, v]
        }
    };
    let mut poles: Vec<AnalyticPole> = modes
        .iter()
        .enumerate()
        .flat_map(|(branch, m)| {
            m.poles(half_width)
                .into_iter()
                .map(move |(x0, sign)| AnalyticPole { branch, x0, sign })
        })
        .collect();
    poles.sort_by(|a, b| a.x0.total_cmp(&b.x0));
    Ok(poles)
}

/// Maslov index from the closed-form branches: signed pole count.
pub fn analytic_maslov(id: ExampleId, lambda: f64, half_width: f64) -> Result<i32> {
    Ok(analytic_poles(id, lambda, half_width)?
        .iter()
        .map(|p| p.sign)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn example1_coefficients() {
        let p = Example1Params::new(1.0).unwrap();
        let sqrt2 = 2f64.sqrt();
        assert_abs_diff_eq!(p.gamma, 2.0 * sqrt2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a0, -8.0 * sqrt2 / 15.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a1, 13.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a2, -2.0 * sqrt2, epsilon = 1e-15);
        assert!(Example1Params::new(-1.0).is_err());
    }

    #[test]
    fn example1_s_at_origin() {
        // (a1 + γ a0) / (2 a0) with a0 = −8√2/15, a1 = 13/5, γ = 2√2
        let sqrt2 = 2f64.sqrt();
        let a0 = -8.0 * sqrt2 / 15.0;
        let expected = (2.6 + 2.0 * sqrt2 * a0) / (2.0 * a0);
        let s = example1_analytic_s(1.0, 0.0).unwrap().finite().unwrap();
        assert_abs_diff_eq!(s, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(s, -0.309_359_216_769_114_5, epsilon = 1e-12);
    }

    #[test]
    fn example1_limits_and_pole() {
        let s = example1_analytic_s(1.0, 40.0).unwrap().finite().unwrap();
        assert_abs_diff_eq!(s, 2f64.sqrt(), epsilon = 1e-12);
        let s = example1_analytic_s(1.0, -40.0).unwrap().finite().unwrap();
        assert_abs_diff_eq!(s, 2f64.sqrt(), epsilon = 1e-12);
        let poles = analytic_poles(ExampleId::Example1, 1.0, 20.0).unwrap();
        assert_eq!(poles.len(), 1);
        // high-precision root of h⁺(x/2) computed offline
        assert_abs_diff_eq!(poles[0].x0, 1.349_812_002_950_959_5, epsilon = 1e-12);
        assert_eq!(poles[0].sign, -1);
    }

    #[test]
    fn example1_solves_the_ode() {
        // u = e^{γx/2} h(x/2) must satisfy u'' = (λ + 1 − 3 sech²(x/2)) u;
        // check via a high-order finite difference of u.
        let p = Example1Params::new(1.0).unwrap();
        let u = |x: f64| (0.5 * p.gamma * x).exp() * p.h_plus(0.5 * x).0;
        let h = 1e-3;
        for &x in &[-2.0, -0.4, 0.3, 1.0, 2.5] {
            let d2 = (-u(x + 2.0 * h) + 16.0 * u(x + h) - 30.0 * u(x) + 16.0 * u(x - h)
                - u(x - 2.0 * h))
                / (12.0 * h * h);
            let c = 2.0 - 3.0 * sech2(0.5 * x);
            assert!((d2 - c * u(x)).abs() < 1e-6 * u(x).abs().max(1.0));
        }
    }

    #[test]
    fn example2_solves_the_ode() {
        let params = Example2Params::new(1.0, -1.0).unwrap();
        let (um, vm) = params.modes();
        for (mode, shift) in [(um, 5.0), (vm, 3.0)] {
            let u = |x: f64| (mode.rate * x).exp() * mode.factor(x).0;
            let h = 1e-3;
            for &x in &[-1.5, -0.2, 0.6, 2.0] {
                let d2 = (-u(x + 2.0 * h) + 16.0 * u(x + h) - 30.0 * u(x) + 16.0 * u(x - h)
                    - u(x - 2.0 * h))
                    / (12.0 * h * h);
                let c = shift - 12.0 * sech2(x);
                assert!((d2 - c * u(x)).abs() < 1e-6 * u(x).abs().max(1.0));
            }
        }
    }

    #[test]
    fn example2_poles_and_limits() {
        let poles = analytic_poles(ExampleId::Example2 { c: -1.0 }, 1.0, 20.0).unwrap();
        let b0: Vec<_> = poles.iter().filter(|p| p.branch == 0).collect();
        let b1: Vec<_> = poles.iter().filter(|p| p.branch == 1).collect();
        assert_eq!(b0.len(), 1);
        assert_eq!(b1.len(), 2);
        assert!(poles.iter().all(|p| p.sign == -1));
        assert_abs_diff_eq!(b0[0].x0, 0.133_878_495_076_285_6, epsilon = 1e-12);
        assert_abs_diff_eq!(b1[0].x0, -0.136_231_021_684_346_7, epsilon = 1e-12);
        assert_abs_diff_eq!(b1[1].x0, 1.087_314_586_046_973_7, epsilon = 1e-12);

        let (m1, m2) = example2_analytic_branches(1.0, -1.0, 40.0).unwrap();
        assert_abs_diff_eq!(m1.finite().unwrap(), 5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(m2.finite().unwrap(), 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn example2_identical_channels_at_c_zero() {
        for &x in &[-3.0, -0.5, 0.7, 4.0] {
            let (m1, m2) = example2_analytic_branches(1.0, 0.0, x).unwrap();
            assert_eq!(m1, m2);
        }
        let p = example2_problem(0.0);
        let v = p.potential(0.4);
        assert_eq!(v.get(0, 0), v.get(1, 1));
    }

    #[test]
    fn example_problems_values() {
        let p = example1_problem();
        assert_abs_diff_eq!(p.potential(0.0).get(0, 0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.potential(80.0).get(0, 0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coefficient(80.0, 1.0).get(0, 0), 2.0, epsilon = 1e-15);
        let p = example2_problem(-1.0);
        let v0 = p.potential(0.0);
        assert_eq!((v0.get(0, 0), v0.get(1, 1)), (8.0, 10.0));
        let f = p.unstable_frame_at_minus_infinity(1.0).unwrap();
        assert_abs_diff_eq!(
            f.y_block[(0, 0)] / f.x_block[(0, 0)],
            5f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            f.y_block[(1, 1)] / f.x_block[(1, 1)],
            3f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(f.x_block[(0, 1)], 0.0);
    }

    #[test]
    fn analytic_index_values() {
        assert_eq!(analytic_maslov(ExampleId::Example1, 1.0, 20.0).unwrap(), -1);
        assert_eq!(analytic_maslov(ExampleId::Example1, 0.5, 20.0).unwrap(), -1);
        assert_eq!(analytic_maslov(ExampleId::Example1, 2.0, 20.0).unwrap(), 0);
        assert_eq!(
            analytic_maslov(ExampleId::Example2 { c: -1.0 }, 1.0, 20.0).unwrap(),
            -3
        );
    }

    #[test]
    fn analytic_index_matches_eigenvalue_count() {
        for &lambda in &[0.1, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let above = EXAMPLE1_EIGENVALUES.iter().filter(|&&e| e > lambda).count() as i32;
            assert_eq!(
                analytic_maslov(ExampleId::Example1, lambda, 20.0).unwrap(),
                -above
            );
        }
        for &lambda in &[1.0, 1.9, 2.1, 4.5, 5.5, 6.5, 7.5] {
            let above = EXAMPLE2_POSITIVE_EIGENVALUES
                .iter()
                .filter(|&&e| e > lambda)
                .count() as i32;
            assert_eq!(
                analytic_maslov(ExampleId::Example2 { c: -1.0 }, lambda, 20.0).unwrap(),
                -above,
                "lambda = {lambda}"
            );
        }
    }
}
