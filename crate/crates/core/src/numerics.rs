//! Small dense real linear algebra and transform inversion: linear solves,
//! matrix exponentials and numerical Laplace inversion.
//!
//! Every matrix in this crate is tiny (at most a few dozen rows), so plain
//! row-major storage and textbook algorithms with explicit error contracts
//! beat pulling in a solver crate. Matrix exponentials of generator-like
//! inputs go through uniformization, which keeps entries nonnegative and rows
//! stochastic; everything else uses scaling-and-squaring.

use num_complex::Complex64;

use crate::{Error, Result};

/// Relative pivot tolerance: a solve reports `SingularMatrix` when a pivot
/// drops below `SINGULARITY_RTOL * max|A|`.
pub const SINGULARITY_RTOL: f64 = 1e-12;

/// Default number of transform evaluations used by [`invert_laplace`].
pub const DEFAULT_INVERSION_TERMS: usize = 41;

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Panics if the entry count does not match `rows * cols`, a dimension is
    /// zero, or any entry is non-finite; external input should be checked
    /// before reaching this constructor.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        assert!(
            data.iter().all(|x| x.is_finite()),
            "matrix entries must be finite"
        );
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row-major rows as owned vectors (handy for serialization).
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|x| x * factor).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix-vector product `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row-vector-matrix product `x A`.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| x[i] * self.get(i, j)).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }
}

/// LU factorization with partial pivoting.
struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

fn lu_factor(a: &Matrix, context: &'static str) -> Result<LuFactors> {
    assert!(a.is_square(), "solve requires a square matrix");
    let n = a.rows();
    let scale = a.max_abs();
    let tolerance = SINGULARITY_RTOL * scale;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lu[col * n + col].abs();
        for r in col + 1..n {
            let mag = lu[r * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag <= tolerance || pivot_mag.is_nan() || scale == 0.0 {
            return Err(Error::SingularMatrix {
                context,
                pivot: pivot_mag,
                tolerance,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            perm.swap(col, pivot_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            lu[r * n + col] = factor;
            for j in col + 1..n {
                lu[r * n + j] -= factor * lu[col * n + j];
            }
        }
    }
    Ok(LuFactors { n, lu, perm })
}

impl LuFactors {
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| y[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Solves `A x = y` by partial-pivot LU with one step of iterative refinement.
///
/// Returns `SingularMatrix` when a pivot falls below
/// `SINGULARITY_RTOL * max|A|`.
pub fn solve_linear(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows(), y.len(), "right-hand side length mismatch");
    let factors = lu_factor(a, "solve_linear")?;
    let mut x = factors.solve(y);
    // One refinement pass tightens the residual to the documented bound.
    let ax = a.mul_vec(&x);
    let residual: Vec<f64> = y.iter().zip(&ax).map(|(b, v)| b - v).collect();
    let dx = factors.solve(&residual);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    Ok(x)
}

/// Solves `A X = B` column by column, reusing one factorization.
pub fn solve_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    assert_eq!(a.rows(), b.rows());
    let factors = lu_factor(a, "solve_matrix")?;
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let col: Vec<f64> = (0..b.rows()).map(|i| b.get(i, j)).collect();
        let x = factors.solve(&col);
        for (i, &value) in x.iter().enumerate() {
            out.set(i, j, value);
        }
    }
    Ok(out)
}

fn is_generator_like(q: &Matrix) -> bool {
    let n = q.rows();
    let scale = q.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..n {
            if i != j && q.get(i, j) < -1e-12 * scale {
                return false;
            }
        }
        if q.row_sum(i) > 1e-9 * scale {
            return false;
        }
    }
    true
}

/// Matrix exponential `e^{Qt}` for `t >= 0`.
///
/// Generator-like inputs (nonnegative off-diagonals, nonpositive row sums)
/// are exponentiated by uniformization, which keeps entries nonnegative and
/// conservative rows stochastic; tiny negative round-off is clipped to zero.
/// Other inputs fall back to scaling-and-squaring with a truncated series.
pub fn mat_exp(q: &Matrix, t: f64) -> Matrix {
    assert!(q.is_square(), "mat_exp requires a square matrix");
    assert!(t >= 0.0 && t.is_finite(), "mat_exp requires finite t >= 0");
    let n = q.rows();
    if t == 0.0 || q.max_abs() == 0.0 {
        return Matrix::identity(n);
    }
    if is_generator_like(q) {
        mat_exp_uniformized(q, t)
    } else {
        mat_exp_squaring(q, t)
    }
}

fn mat_exp_uniformized(q: &Matrix, t: f64) -> Matrix {
    let n = q.rows();
    let gamma = (0..n).fold(0.0f64, |acc, i| acc.max(q.get(i, i).abs()));
    if gamma == 0.0 {
        return mat_exp_squaring(q, t);
    }
    // Split long horizons into chunks with moderate Poisson mean so the
    // e^{-gamma s} weights stay far from underflow.
    let chunks = (gamma * t / 32.0).ceil().max(1.0);
    let s = t / chunks;
    let mean = gamma * s;

    // P = I + Q/gamma is substochastic with nonnegative entries.
    let mut p = q.scale(1.0 / gamma);
    for i in 0..n {
        p.set(i, i, p.get(i, i) + 1.0);
    }
    for v in p.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }

    let mut acc = Matrix::zeros(n, n);
    let mut term = Matrix::identity(n); // P^k as we iterate
    let mut weight = (-mean).exp();
    let mut weight_sum = 0.0;
    let mut k = 0usize;
    loop {
        for (a, b) in acc.data.iter_mut().zip(&term.data) {
            *a += weight * b;
        }
        weight_sum += weight;
        if weight_sum >= 1.0 - 1e-16 && k as f64 >= mean {
            break;
        }
        k += 1;
        weight *= mean / k as f64;
        term = term.matmul(&p);
        if k > 100_000 {
            break; // unreachable for the chunk sizes above
        }
    }

    let mut out = acc;
    let mut power = chunks as u64 - 1;
    let mut base = out.clone();
    // out * base^power by binary exponentiation.
    while power > 0 {
        if power & 1 == 1 {
            out = out.matmul(&base);
        }
        power >>= 1;
        if power > 0 {
            base = base.matmul(&base);
        }
    }
    for v in out.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

fn mat_exp_squaring(q: &Matrix, t: f64) -> Matrix {
    let n = q.rows();
    let mut norm = 0.0f64;
    for i in 0..n {
        norm = norm.max(q.row(i).iter().map(|x| x.abs()).sum::<f64>() * t);
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = q.scale(t / f64::powi(2.0, squarings as i32));
    let mut acc = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&a).scale(1.0 / k as f64);
        acc = acc.add(&term);
        if term.max_abs() < 1e-18 * acc.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    acc
}

// ---------------------------------------------------------------------------
// Complex kit for the inversion abscissas
// ---------------------------------------------------------------------------

/// Dense square complex matrix; only what the Laplace abscissas need.
#[derive(Debug, Clone)]
pub(crate) struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn from_real(m: &Matrix) -> Self {
        assert!(m.is_square());
        Self {
            n: m.rows(),
            data: m.data().iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self { n: self.n, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self {
            n,
            data: vec![Complex64::ZERO; n * n],
        };
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Partial-pivot LU solve of `A x = y`.
    pub fn solve(&self, y: &[Complex64], context: &'static str) -> Result<Vec<Complex64>> {
        let n = self.n;
        assert_eq!(y.len(), n);
        let scale = self.data.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let tolerance = SINGULARITY_RTOL * scale;
        let mut lu = self.data.clone();
        let mut x = y.to_vec();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = lu[col * n + col].norm();
            for r in col + 1..n {
                let mag = lu[r * n + col].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag <= tolerance || pivot_mag.is_nan() || scale == 0.0 {
                return Err(Error::SingularMatrix {
                    context,
                    pivot: pivot_mag,
                    tolerance,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                x.swap(col, pivot_row);
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let factor = lu[r * n + col] / pivot;
                lu[r * n + col] = factor;
                for j in col + 1..n {
                    let v = lu[r * n + j] - factor * lu[col * n + j];
                    lu[r * n + j] = v;
                }
                x[r] = x[r] - factor * x[col];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = x[i] - lu[i * n + j] * x[j];
                x[i] = v;
            }
            x[i] /= lu[i * n + i];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Self, context: &'static str) -> Result<Self> {
        assert_eq!(self.n, b.n);
        let n = self.n;
        let mut out = Self {
            n,
            data: vec![Complex64::ZERO; n * n],
        };
        for j in 0..n {
            let col: Vec<Complex64> = (0..n).map(|i| b.get(i, j)).collect();
            let x = self.solve(&col, context)?;
            for (i, &value) in x.iter().enumerate() {
                out.set(i, j, value);
            }
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Numerical Laplace inversion
// ---------------------------------------------------------------------------

/// A Laplace transform evaluable on a strip of the right half-plane.
///
/// The inversion abscissas are complex with positive real part; `domain`
/// declares the open interval of real parts on which `eval` is defined and
/// finite.
pub trait LaplaceTransform {
    fn eval(&self, q: Complex64) -> Result<Complex64>;

    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}

impl<F> LaplaceTransform for F
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    fn eval(&self, q: Complex64) -> Result<Complex64> {
        self(q)
    }
}

/// Decay parameter of the Bromwich discretization; the aliasing error is of
/// order `e^{-EULER_DECAY}` relative to the scale of the inverted function.
const EULER_DECAY: f64 = 23.0;

/// Inverts a Laplace transform at `t > 0` by Euler summation.
///
/// Evaluates the transform at `terms` abscissas `(A + 2*pi*i*k) / (2t)` and
/// accelerates the alternating tail with a binomial average of the trailing
/// partial sums. Accuracy is around `1e-6` relative or better for the smooth
/// rational-plus-exponential transforms this crate produces. Returns
/// `InversionDiverged` when two consecutive accelerated estimates differ by
/// more than `tolerance * (1 + |value|)`.
pub fn invert_laplace<F: LaplaceTransform + ?Sized>(
    transform: &F,
    t: f64,
    terms: usize,
    tolerance: f64,
) -> Result<f64> {
    assert!(t > 0.0 && t.is_finite(), "inversion requires finite t > 0");
    assert!(tolerance > 0.0, "tolerance must be positive");
    let terms = terms.max(9);
    let window = (terms - 1) / 2; // binomial average width
    let burn_in = terms - 1 - window;

    let re = EULER_DECAY / (2.0 * t);
    let (lo, hi) = transform.domain();
    if !(re > lo && re < hi) {
        return Err(Error::InvalidInput(format!(
            "inversion abscissa {re} outside declared transform domain ({lo}, {hi})"
        )));
    }

    let scale = (EULER_DECAY / 2.0).exp() / t;
    let mut partial_sums = Vec::with_capacity(terms);
    let mut running = 0.0;
    for k in 0..terms {
        let q = Complex64::new(re, std::f64::consts::PI * k as f64 / t);
        let value = transform.eval(q)?.re;
        let term = if k == 0 {
            0.5 * scale * value
        } else if k % 2 == 0 {
            scale * value
        } else {
            -scale * value
        };
        running += term;
        partial_sums.push(running);
    }

    let euler_average = |start: usize| -> f64 {
        let mut weight = 1.0f64; // C(window, j) built iteratively
        let mut total_weight = 0.0;
        let mut acc = 0.0;
        for j in 0..=window {
            acc += weight * partial_sums[start + j];
            total_weight += weight;
            weight = weight * (window - j) as f64 / (j + 1) as f64;
        }
        acc / total_weight
    };

    let estimate = euler_average(burn_in);
    let previous = euler_average(burn_in - 1);
    let delta = (estimate - previous).abs();
    if !estimate.is_finite() || delta.is_nan() || delta > tolerance * (1.0 + estimate.abs()) {
        return Err(Error::InversionDiverged {
            t,
            delta,
            tolerance,
        });
    }
    Ok(estimate)
}
