//! The eigenvalue problem `u'' + V(x) u = λ u` and its asymptotic data.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{MaslovError, Result};
use crate::lagrangian::{CoefficientBlocks, Frame};
use crate::linalg::{sqrt_spd, Matrix, SymMatrix};

pub type PotentialFn = dyn Fn(f64) -> SymMatrix + Send + Sync;

/// Where `V(x)` comes from.
#[derive(Clone)]
pub enum Potential {
    Analytic(Arc<PotentialFn>),
    Tabulated(Arc<TabulatedPotential>),
}

impl Potential {
    pub fn evaluate(&self, x: f64) -> SymMatrix {
        match self {
            Potential::Analytic(f) => f(x),
            Potential::Tabulated(t) => t.evaluate(x),
        }
    }
}

/// Warning attached to results computed from tabulated coefficients.
pub const TABULATED_WARNING: &str =
    "potential is tabulated: analyticity of the coefficients cannot be certified, \
     so branch continuity through crossings is assumed rather than guaranteed";

/// Immutable description of one linearized problem. λ is supplied per call.
#[derive(Clone)]
pub struct Problem {
    name: String,
    n: usize,
    potential: Potential,
    v_minus: SymMatrix,
    v_plus: SymMatrix,
    decay_note: String,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("v_minus", &self.v_minus)
            .field("v_plus", &self.v_plus)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        potential: Potential,
        v_minus: SymMatrix,
        v_plus: SymMatrix,
        decay_note: impl Into<String>,
    ) -> Result<Self> {
        let n = v_minus.n();
        if v_plus.n() != n {
            return Err(MaslovError::InvalidInput(format!(
                "limits have different dimensions ({} vs {})",
                n,
                v_plus.n()
            )));
        }
        let probe = potential.evaluate(0.0);
        if probe.n() != n {
            return Err(MaslovError::InvalidInput(format!(
                "potential has dimension {} but limits have {}",
                probe.n(),
                n
            )));
        }
        Ok(Problem {
            name: name.into(),
            n,
            potential,
            v_minus,
            v_plus,
            decay_note: decay_note.into(),
        })
    }

    /// Convenience constructor for a closure potential.
    pub fn analytic<F>(
        name: impl Into<String>,
        potential: F,
        v_minus: SymMatrix,
        v_plus: SymMatrix,
        decay_note: impl Into<String>,
    ) -> Result<Self>
    where
        F: Fn(f64) -> SymMatrix + Send + Sync + 'static,
    {
        Problem::new(
            name,
            Potential::Analytic(Arc::new(potential)),
            v_minus,
            v_plus,
            decay_note,
        )
    }

    /// Uses the end samples as the limits at `∓∞`.
    pub fn from_tabulated(name: impl Into<String>, table: TabulatedPotential) -> Result<Self> {
        let v_minus = table.sample(0);
        let v_plus = table.sample(table.len() - 1);
        Problem::new(
            name,
            Potential::Tabulated(Arc::new(table)),
            v_minus,
            v_plus,
            "tabulated: constant extension beyond the grid",
        )
    }

    /// `V ≡ v` on the whole line.
    pub fn constant(name: impl Into<String>, v: SymMatrix) -> Self {
        let value = v.clone();
        Problem::analytic(name, move |_| value.clone(), v.clone(), v, "constant")
            .expect("consistent dimensions")
    }

    /// `V ≡ 0`.
    pub fn free(n: usize) -> Self {
        Problem::analytic(
            "free",
            move |_| SymMatrix::zeros(n),
            SymMatrix::zeros(n),
            SymMatrix::zeros(n),
            "identically zero",
        )
        .expect("consistent dimensions")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn v_minus(&self) -> &SymMatrix {
        &self.v_minus
    }

    pub fn v_plus(&self) -> &SymMatrix {
        &self.v_plus
    }

    pub fn decay_note(&self) -> &str {
        &self.decay_note
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.potential, Potential::Tabulated(_))
    }

    pub fn potential(&self, x: f64) -> SymMatrix {
        self.potential.evaluate(x)
    }

    /// `C(x, λ) = λI − V(x)`.
    pub fn coefficient(&self, x: f64, lambda: f64) -> SymMatrix {
        self.potential(x).shifted_negation(lambda)
    }

    pub fn blocks(&self, x: f64, lambda: f64) -> CoefficientBlocks {
        CoefficientBlocks::reaction_diffusion(&self.coefficient(x, lambda))
    }

    fn asymptotic_root(
        &self,
        limit: &SymMatrix,
        lambda: f64,
        side: &'static str,
    ) -> Result<SymMatrix> {
        let c = limit.shifted_negation(lambda);
        sqrt_spd(&c).map_err(|e| match e {
            MaslovError::NotPositiveDefinite { .. } => {
                MaslovError::LambdaInEssentialSpectrum { lambda, side }
            }
            other => other,
        })
    }

    fn graph_frame(root: &SymMatrix, sign: f64) -> Result<Frame> {
        Frame::new(Matrix::identity(root.n()), root.as_matrix().scale(sign))?.orthonormalized()
    }

    /// Orthonormal frame of `(I; √C₋)`, the span of the eigenvectors of
    /// `[[0, I], [C₋, 0]]` with positive eigenvalues.
    pub fn unstable_frame_at_minus_infinity(&self, lambda: f64) -> Result<Frame> {
        let root = self.asymptotic_root(&self.v_minus, lambda, "minus")?;
        Problem::graph_frame(&root, 1.0)
    }

    /// Orthonormal frame of `(I; −√C₊)`.
    pub fn stable_frame_at_plus_infinity(&self, lambda: f64) -> Result<Frame> {
        let root = self.asymptotic_root(&self.v_plus, lambda, "plus")?;
        Problem::graph_frame(&root, -1.0)
    }

    /// Orthonormal frame of `(I; √C₊)`, the limit the unstable path is
    /// expected to approach as `x → +∞`.
    pub fn unstable_frame_at_plus_infinity(&self, lambda: f64) -> Result<Frame> {
        let root = self.asymptotic_root(&self.v_plus, lambda, "plus")?;
        Problem::graph_frame(&root, 1.0)
    }

    /// `(‖V(−L) − V₋‖∞, ‖V(L) − V₊‖∞)`.
    pub fn limit_mismatch(&self, half_width: f64) -> (f64, f64) {
        let left = self
            .potential(-half_width)
            .sub(&self.v_minus)
            .as_matrix()
            .max_abs();
        let right = self
            .potential(half_width)
            .sub(&self.v_plus)
            .as_matrix()
            .max_abs();
        (left, right)
    }
}

/// `V` sampled on a strictly increasing grid, interpolated by cubic Hermite
/// polynomials. Outside the grid the end samples are held constant.
#[derive(Debug, Clone)]
pub struct TabulatedPotential {
    n: usize,
    grid: Vec<f64>,
    /// Per-sample upper-triangle entries.
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl TabulatedPotential {
    pub fn new(n: usize, grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if grid.len() < 4 {
            return Err(MaslovError::InvalidInput(format!(
                "tabulated potential needs at least 4 samples, got {}",
                grid.len()
            )));
        }
        if values.len() != grid.len() {
            return Err(MaslovError::InvalidInput(
                "grid and values differ in length".into(),
            ));
        }
        let m = n * (n + 1) / 2;
        if let Some(bad) = values.iter().position(|v| v.len() != m) {
            return Err(MaslovError::InvalidInput(format!(
                "sample {bad} has {} entries, expected {m}",
                values[bad].len()
            )));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(MaslovError::InvalidInput(format!(
                "grid is not strictly increasing at sample {}",
                i + 1
            )));
        }
        let slopes = node_slopes(&grid, &values);
        Ok(TabulatedPotential {
            n,
            grid,
            values,
            slopes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn sample(&self, i: usize) -> SymMatrix {
        SymMatrix::from_upper_triangle(self.n, &self.values[i]).expect("validated on construction")
    }

    pub fn evaluate(&self, x: f64) -> SymMatrix {
        let last = self.grid.len() - 1;
        if !(x > self.grid[0]) {
            return self.sample(0);
        }
        if x >= self.grid[last] {
            return self.sample(last);
        }
        let k = self.grid.partition_point(|&g| g <= x) - 1;
        let (x0, x1) = (self.grid[k], self.grid[k + 1]);
        let dx = x1 - x0;
        let t = (x - x0) / dx;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let entries: Vec<f64> = (0..self.values[k].len())
            .map(|e| {
                h00 * self.values[k][e]
                    + h10 * dx * self.slopes[k][e]
                    + h01 * self.values[k + 1][e]
                    + h11 * dx * self.slopes[k + 1][e]
            })
            .collect();
        SymMatrix::from_upper_triangle(self.n, &entries).expect("entry count fixed")
    }
}

/// Slopes at the nodes from the derivative of the interpolating polynomial
/// through the (up to) five nearest nodes.
fn node_slopes(grid: &[f64], values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = grid.len();
    let width = len.min(5);
    (0..len)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(len - width);
            let stencil: Vec<usize> = (start..start + width).collect();
            let xi = grid[i];
            let weights: Vec<f64> = stencil
                .iter()
                .map(|&j| {
                    if j == i {
                        stencil
                            .iter()
                            .filter(|&&m| m != i)
                            .map(|&m| 1.0 / (xi - grid[m]))
                            .sum()
                    } else {
                        let mut w = 1.0 / (grid[j] - xi);
                        for &m in stencil.iter().filter(|&&m| m != i && m != j) {
                            w *= (xi - grid[m]) / (grid[j] - grid[m]);
                        }
                        w
                    }
                })
                .collect();
            (0..values[i].len())
                .map(|e| {
                    stencil
                        .iter()
                        .zip(&weights)
                        .map(|(&j, w)| w * values[j][e])
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Reads the tabulated-potential CSV: header `x,v11,v12,…,v1n,v22,…,vnn`
/// (upper triangle, row-major), then one sample per line.
pub fn load_tabulated<R: Read>(reader: R) -> Result<TabulatedPotential> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => {
            return Err(MaslovError::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
        Some(r) => r.map_err(csv_error)?,
    };
    let columns = header.len();
    if header.get(0) != Some("x") {
        return Err(MaslovError::Parse {
            line: 1,
            message: format!(
                "first header column must be `x`, got {:?}",
                header.get(0).unwrap_or("")
            ),
        });
    }
    let entries = columns - 1;
    // entries = n(n+1)/2
    let n = (1..=crate::linalg::MAX_DIM)
        .find(|n| n * (n + 1) / 2 == entries)
        .ok_or_else(|| MaslovError::Parse {
            line: 1,
            message: format!("{entries} value columns is not an upper-triangle count"),
        })?;
    let mut expected = Vec::with_capacity(entries);
    for i in 1..=n {
        for j in i..=n {
            expected.push(format!("v{i}{j}"));
        }
    }
    for (col, name) in header.iter().skip(1).enumerate() {
        if name != expected[col] {
            return Err(MaslovError::Parse {
                line: 1,
                message: format!(
                    "header column {} should be `{}`, got `{name}`",
                    col + 2,
                    expected[col]
                ),
            });
        }
    }

    let mut grid = Vec::new();
    let mut values = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != columns {
            return Err(MaslovError::Parse {
                line,
                message: format!("expected {columns} fields, got {}", record.len()),
            });
        }
        let mut nums = Vec::with_capacity(columns);
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| MaslovError::Parse {
                line,
                message: format!("non-numeric field `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(MaslovError::Parse {
                    line,
                    message: format!("non-finite field `{field}`"),
                });
            }
            nums.push(v);
        }
        if let Some(&prev) = grid.last() {
            if !(nums[0] > prev) {
                return Err(MaslovError::Parse {
                    line,
                    message: format!("grid not strictly increasing ({} after {prev})", nums[0]),
                });
            }
        }
        grid.push(nums[0]);
        values.push(nums[1..].to_vec());
    }
    if grid.len() < 4 {
        return Err(MaslovError::Parse {
            line: grid.len() as u64 + 1,
            message: format!("need at least 4 samples, got {}", grid.len()),
        });
    }
    TabulatedPotential::new(n, grid, values)
}

pub fn load_tabulated_path(path: impl AsRef<Path>) -> Result<TabulatedPotential> {
    let file = std::fs::File::open(path.as_ref())?;
    load_tabulated(std::io::BufReader::new(file))
}

fn csv_error(e: csv::Error) -> MaslovError {
    let line = e.position().map_or(0, |p| p.line());
    MaslovError::Parse {
        line,
        message: e.to_string(),
    }
}
