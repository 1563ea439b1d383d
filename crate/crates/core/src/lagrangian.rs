//! Lagrangian frames and the Riccati chart.
//!
//! A frame is a stacked pair `(X; Y)` of n × n blocks whose 2n × n column span
//! is a Lagrangian plane. Away from the vertical plane the plane is the graph
//! of the symmetric matrix `S = Y X⁻¹`; `Y · adj(X) = (det X) S` extends that
//! chart continuously through the crossings where `det X = 0`.

use crate::error::{MaslovError, Result};
use crate::linalg::{self, adjugate_det, dot, norm, orthonormalize, Matrix, SymMatrix};

/// Default lower bound on the normalized `det X` below which [`riccati_s`] refuses.
pub const DEFAULT_SINGULARITY_GUARD: f64 = 1e-12;

/// Relative tolerance for accepting a vector as an element of `ker X`.
pub const KERNEL_TOLERANCE: f64 = 1e-6;

/// A crossing form eigenvalue below this fraction of `‖Γ‖` is treated as degenerate.
pub const REGULARITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub x_block: Matrix,
    pub y_block: Matrix,
}

impl Frame {
    pub fn new(x_block: Matrix, y_block: Matrix) -> Result<Self> {
        let n = x_block.rows();
        if !x_block.is_square() || y_block.rows() != n || y_block.cols() != n || n == 0 {
            return Err(MaslovError::InvalidInput(format!(
                "frame blocks must both be n x n, got {}x{} and {}x{}",
                x_block.rows(),
                x_block.cols(),
                y_block.rows(),
                y_block.cols()
            )));
        }
        Ok(Frame { x_block, y_block })
    }

    /// The graph frame `(I; S)`.
    pub fn graph(s: &SymMatrix) -> Self {
        Frame {
            x_block: Matrix::identity(s.n()),
            y_block: s.as_matrix().clone(),
        }
    }

    pub fn from_stacked(m: &Matrix) -> Result<Self> {
        if m.rows() != 2 * m.cols() {
            return Err(MaslovError::InvalidInput(format!(
                "stacked frame must be 2n x n, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.cols();
        Frame::new(m.row_block(0, n), m.row_block(n, 2 * n))
    }

    pub fn n(&self) -> usize {
        self.x_block.rows()
    }

    pub fn stacked(&self) -> Matrix {
        Matrix::vstack(&self.x_block, &self.y_block)
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let s = self.stacked();
        (0..self.n()).map(|j| norm(&s.column(j))).collect()
    }

    /// `‖XᵀY − YᵀX‖∞` divided by the squared largest column norm.
    pub fn lagrangian_residual(&self) -> f64 {
        let xt_y = &self.x_block.transpose() * &self.y_block;
        let yt_x = &self.y_block.transpose() * &self.x_block;
        let scale = self.column_norms().into_iter().fold(0.0, f64::max);
        (&xt_y - &yt_x).max_abs() / (scale * scale).max(f64::MIN_POSITIVE)
    }

    pub fn det_x(&self) -> f64 {
        linalg::det(&self.x_block)
    }

    /// `det X / Π‖column_j‖`: invariant under column scaling, `|·| ≤ 1`.
    pub fn normalized_det_x(&self) -> f64 {
        let prod: f64 = self.column_norms().iter().product();
        self.det_x() / prod
    }

    pub fn orthonormalized(&self) -> Result<Frame> {
        Frame::from_stacked(&orthonormalize(&self.stacked())?)
    }

    /// Orthogonal projector onto the plane; independent of the chosen basis.
    pub fn projector(&self) -> Result<Matrix> {
        linalg::projector(&self.stacked())
    }

    pub fn is_finite(&self) -> bool {
        self.x_block.is_finite() && self.y_block.is_finite()
    }

    /// `self + h · other`, blockwise.
    pub fn axpy(&self, h: f64, other: &Frame) -> Frame {
        Frame {
            x_block: &self.x_block + &other.x_block.scale(h),
            y_block: &self.y_block + &other.y_block.scale(h),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x_block.max_abs().max(self.y_block.max_abs())
    }

    /// Eigen-decomposition `XᵀX = V diag(σ²) Vᵀ`; small σ mark `ker X`.
    pub fn x_gram_eig(&self) -> Result<linalg::EigDecomp> {
        let gram = &self.x_block.transpose() * &self.x_block;
        linalg::sym_eig(&SymMatrix::symmetrize(&gram))
    }

    /// Smallest singular value of X divided by the largest column norm.
    pub fn normalized_sigma_min(&self) -> Result<f64> {
        let eig = self.x_gram_eig()?;
        let scale = self.column_norms().into_iter().fold(0.0, f64::max);
        Ok(eig.values[0].max(0.0).sqrt() / scale)
    }
}

/// Blocks `(A B; C D)` of the linear frame equation `(X; Y)' = (A B; C D)(X; Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBlocks {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
}

impl CoefficientBlocks {
    /// `A = D = 0`, `B = I`: the first-order form of `u'' = C u`.
    pub fn reaction_diffusion(c: &SymMatrix) -> Self {
        let n = c.n();
        CoefficientBlocks {
            a: Matrix::zeros(n, n),
            b: Matrix::identity(n),
            c: c.as_matrix().clone(),
            d: Matrix::zeros(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        CoefficientBlocks {
            a: Matrix::zeros(n, n),
            b: Matrix::zeros(n, n),
            c: Matrix::zeros(n, n),
            d: Matrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }
}

/// `(AX + BY; CX + DY)`.
pub fn frame_rhs(blocks: &CoefficientBlocks, f: &Frame) -> Frame {
    let dx = &(&blocks.a * &f.x_block) + &(&blocks.b * &f.y_block);
    let dy = &(&blocks.c * &f.x_block) + &(&blocks.d * &f.y_block);
    Frame {
        x_block: dx,
        y_block: dy,
    }
}

/// `S = Y X⁻¹` together with the asymmetry it had before symmetrization.
#[derive(Debug, Clone)]
pub struct RiccatiChart {
    pub s: SymMatrix,
    pub asymmetry: f64,
}

/// Riccati chart of the frame. Fails with [`MaslovError::NearSingular`] when
/// the normalized `det X` is below `guard`.
pub fn riccati_s(f: &Frame, guard: f64) -> Result<RiccatiChart> {
    let det = f.normalized_det_x();
    if !(det.abs() > guard) {
        return Err(MaslovError::NearSingular { det });
    }
    // Xᵀ Sᵀ = Yᵀ
    let st = linalg::solve(&f.x_block.transpose(), &f.y_block.transpose())?;
    let s = st.transpose();
    let asymmetry = s.asymmetry() / s.max_abs().max(1.0);
    Ok(RiccatiChart {
        s: SymMatrix::symmetrize(&s),
        asymmetry,
    })
}

/// `m = Y · adj(X)`, which equals `(det X) · S` wherever S exists and is
/// finite through crossings.
#[derive(Debug, Clone)]
pub struct ContinuousChart {
    pub m: SymMatrix,
    pub det_x: f64,
    pub asymmetry: f64,
}

pub fn continuous_s(f: &Frame) -> ContinuousChart {
    let (adj, det_x) = adjugate_det(&f.x_block);
    let m = &f.y_block * &adj;
    let asymmetry = m.asymmetry() / m.max_abs().max(f64::MIN_POSITIVE);
    ContinuousChart {
        m: SymMatrix::symmetrize(&m),
        det_x,
        asymmetry,
    }
}

/// Crossing form on `ker X` for the vertical reference plane.
#[derive(Debug, Clone)]
pub struct CrossingForm {
    pub gamma: SymMatrix,
    pub signature: i32,
}

/// Builds `Γ_ij = −⟨Y u_i, Ẋ u_j⟩` on the given kernel basis and returns it
/// with its signature. `x0` only labels errors.
pub fn crossing_form(
    f: &Frame,
    df: &Frame,
    kernel_basis: &[Vec<f64>],
    x0: f64,
) -> Result<CrossingForm> {
    let k = kernel_basis.len();
    if k == 0 {
        return Err(MaslovError::InvalidInput(
            "crossing form needs a non-empty kernel basis".into(),
        ));
    }
    let scale = f.column_norms().into_iter().fold(0.0, f64::max);
    for (index, u) in kernel_basis.iter().enumerate() {
        let residual = norm(&f.x_block.mul_vec(u)) / (norm(u) * scale);
        if !(residual <= KERNEL_TOLERANCE) {
            return Err(MaslovError::InvalidKernel { index, residual });
        }
    }
    let yu: Vec<Vec<f64>> = kernel_basis.iter().map(|u| f.y_block.mul_vec(u)).collect();
    let xdot_u: Vec<Vec<f64>> = kernel_basis.iter().map(|u| df.x_block.mul_vec(u)).collect();
    let mut gamma = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gamma[(i, j)] = -dot(&yu[i], &xdot_u[j]);
        }
    }
    let gamma = SymMatrix::symmetrize(&gamma);
    let eig = linalg::sym_eig(&gamma)?;
    let size = eig
        .values
        .iter()
        .fold(f.max_abs() * df.max_abs(), |m, v| m.max(v.abs()));
    if let Some(&small) = eig
        .values
        .iter()
        .find(|v| !(v.abs() >= REGULARITY_THRESHOLD * size) || size == 0.0)
    {
        return Err(MaslovError::NonRegularCrossing {
            x0,
            eigenvalue: small,
        });
    }
    let signature = eig.values.iter().map(|v| v.signum() as i32).sum();
    Ok(CrossingForm { gamma, signature })
}

/// Right-hand side of the Riccati equation satisfied by `S = Y X⁻¹`:
/// `C + D S − S A − S B S`.
pub fn riccati_rhs(blocks: &CoefficientBlocks, s: &SymMatrix) -> Matrix {
    let s = s.as_matrix();
    let ds = &blocks.d * s;
    let sa = s * &blocks.a;
    let sbs = &(s * &blocks.b) * s;
    &(&(&blocks.c + &ds) - &sa) - &sbs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        Matrix::from_row_major(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        SymMatrix::symmetrize(&random_matrix(rng, n))
    }

    /// Random Lagrangian frame: graph of a symmetric matrix in a random basis.
    fn random_lagrangian(rng: &mut ChaCha8Rng, n: usize) -> Frame {
        let s = random_sym(rng, n);
        // (I; S) · G for invertible G keeps the plane.
        let g = &random_matrix(rng, n) + &Matrix::identity(n).scale(2.0);
        let f = Frame::graph(&s);
        Frame {
            x_block: &f.x_block * &g,
            y_block: &f.y_block * &g,
        }
    }

    #[test]
    fn frame_rhs_cases() {
        let c = SymMatrix::from_rows(&[[1.0, 0.5], [0.5, -2.0]]).unwrap();
        let f = Frame::new(
            Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]),
            Matrix::from_rows(&[[0.5, 0.0], [1.0, -1.0]]),
        )
        .unwrap();
        let d = frame_rhs(&CoefficientBlocks::reaction_diffusion(&c), &f);
        assert_eq!(d.x_block, f.y_block);
        assert_eq!(d.y_block, c.as_matrix() * &f.x_block);

        let z = frame_rhs(&CoefficientBlocks::zeros(2), &f);
        assert_eq!(z.max_abs(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let blocks = CoefficientBlocks {
            a: random_matrix(&mut rng, 3),
            b: random_matrix(&mut rng, 3),
            c: random_matrix(&mut rng, 3),
            d: random_matrix(&mut rng, 3),
        };
        let id = Frame::new(Matrix::identity(3), Matrix::zeros(3, 3)).unwrap();
        let d = frame_rhs(&blocks, &id);
        assert_eq!(d.x_block, blocks.a);
        assert_eq!(d.y_block, blocks.c);
    }

    #[test]
    fn riccati_s_of_graph() {
        let a = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, -3.0]]).unwrap();
        let chart = riccati_s(&Frame::graph(&a), DEFAULT_SINGULARITY_GUARD).unwrap();
        assert!((chart.s.as_matrix() - a.as_matrix()).max_abs() < 1e-15);
        assert!(chart.asymmetry < 1e-15);
    }

    #[test]
    fn riccati_s_blows_up() {
        for eps in [1e-2, 1e-4, 1e-6] {
            let f = Frame::new(Matrix::from_diag(&[1.0, eps]), Matrix::identity(2)).unwrap();
            let chart = riccati_s(&f, DEFAULT_SINGULARITY_GUARD).unwrap();
            let eig = linalg::sym_eig(&chart.s).unwrap();
            assert_abs_diff_eq!(eig.values[1], 1.0 / eps, epsilon = 1e-9 / eps);
        }
        let f = Frame::new(Matrix::from_diag(&[1.0, 0.0]), Matrix::identity(2)).unwrap();
        assert!(matches!(
            riccati_s(&f, DEFAULT_SINGULARITY_GUARD),
            Err(MaslovError::NearSingular { .. })
        ));
    }

    #[test]
    fn continuous_s_cases() {
        let f = Frame::new(Matrix::from_rows(&[[0.0]]), Matrix::from_rows(&[[1.0]])).unwrap();
        let c = continuous_s(&f);
        assert_eq!(c.m.get(0, 0), 1.0);
        assert_eq!(c.det_x, 0.0);

        let a = SymMatrix::from_rows(&[[1.0, 2.0], [2.0, -3.0]]).unwrap();
        let c = continuous_s(&Frame::graph(&a));
        assert_eq!(c.det_x, 1.0);
        assert!((c.m.as_matrix() - a.as_matrix()).max_abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            let f = random_lagrangian(&mut rng, n);
            let c = continuous_s(&f);
            let lhs = c.m.as_matrix() * &f.x_block;
            let rhs = f.y_block.scale(c.det_x);
            assert!((&lhs - &rhs).max_abs() <= 1e-9 * rhs.max_abs().max(1.0));
            // ν = μ · det X
            let s = riccati_s(&f, DEFAULT_SINGULARITY_GUARD).unwrap().s;
            let mu = linalg::sym_eig(&s).unwrap().values;
            let mut scaled: Vec<f64> = mu.iter().map(|m| m * c.det_x).collect();
            scaled.sort_by(f64::total_cmp);
            let nu = linalg::sym_eig(&c.m).unwrap().values;
            for (a, b) in scaled.iter().zip(&nu) {
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn crossing_form_scalar() {
        let f = Frame::new(Matrix::from_rows(&[[0.0]]), Matrix::from_rows(&[[2.0]])).unwrap();
        let df = Frame::new(Matrix::from_rows(&[[3.0]]), Matrix::from_rows(&[[0.0]])).unwrap();
        let cf = crossing_form(&f, &df, &[vec![1.0]], 0.0).unwrap();
        assert_eq!(cf.gamma.get(0, 0), -6.0);
        assert_eq!(cf.signature, -1);

        let df = Frame::new(Matrix::from_rows(&[[-3.0]]), Matrix::from_rows(&[[0.0]])).unwrap();
        assert_eq!(
            crossing_form(&f, &df, &[vec![1.0]], 0.0).unwrap().signature,
            1
        );
    }

    #[test]
    fn crossing_form_rejects_bad_kernel_and_degenerate() {
        let f = Frame::new(
            Matrix::from_diag(&[0.0, 1.0]),
            Matrix::from_diag(&[1.0, 0.0]),
        )
        .unwrap();
        let df = Frame::new(Matrix::from_diag(&[1.0, 0.0]), Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(
            crossing_form(&f, &df, &[vec![0.0, 1.0]], 0.5),
            Err(MaslovError::InvalidKernel { index: 0, .. })
        ));
        let df0 = Frame::new(Matrix::zeros(2, 2), Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(
            crossing_form(&f, &df0, &[vec![1.0, 0.0]], 0.5),
            Err(MaslovError::NonRegularCrossing { .. })
        ));
    }

    #[test]
    fn riccati_rhs_cases() {
        let c = SymMatrix::from_rows(&[[1.0, 0.5], [0.5, -2.0]]).unwrap();
        let blocks = CoefficientBlocks::reaction_diffusion(&c);
        assert_eq!(&riccati_rhs(&blocks, &SymMatrix::zeros(2)), c.as_matrix());

        let cd = SymMatrix::from_diag(&[1.0, -2.0]);
        let blocks = CoefficientBlocks::reaction_diffusion(&cd);
        let r = riccati_rhs(&blocks, &SymMatrix::from_diag(&[3.0, 0.5]));
        assert_eq!(r, Matrix::from_diag(&[1.0 - 9.0, -2.0 - 0.25]));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut blocks = CoefficientBlocks {
            a: random_matrix(&mut rng, 3),
            b: random_matrix(&mut rng, 3),
            c: Matrix::zeros(3, 3),
            d: random_matrix(&mut rng, 3),
        };
        assert_eq!(riccati_rhs(&blocks, &SymMatrix::zeros(3)).max_abs(), 0.0);
        blocks.b = Matrix::zeros(3, 3);
        assert!(riccati_rhs(&blocks, &random_sym(&mut rng, 3)).max_abs() > 0.0);
    }

    #[test]
    fn riccati_rhs_matches_chart_derivative() {
        // Constant symmetric C: the exact flow is exp(x M) applied to a graph
        // frame. A central difference of S along it must match the rhs.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 3;
        let blocks = CoefficientBlocks::reaction_diffusion(&random_sym(&mut rng, n));
        let s0 = random_sym(&mut rng, n);
        let f0 = Frame::graph(&s0);
        let flow = |h: f64| {
            let mut term = f0.clone();
            let mut acc = f0.clone();
            let mut coeff = 1.0;
            for k in 1..14 {
                term = frame_rhs(&blocks, &term);
                coeff *= h / k as f64;
                acc = acc.axpy(coeff, &term);
            }
            acc
        };
        let h = 1e-4;
        let sp = riccati_s(&flow(h), DEFAULT_SINGULARITY_GUARD).unwrap().s;
        let sm = riccati_s(&flow(-h), DEFAULT_SINGULARITY_GUARD).unwrap().s;
        let fd = (sp.as_matrix() - sm.as_matrix()).scale(0.5 / h);
        let rhs = riccati_rhs(&blocks, &s0);
        assert!((&fd - &rhs).max_abs() < 1e-6, "{:?} vs {:?}", fd, rhs);
    }
}
