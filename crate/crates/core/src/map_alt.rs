//! MAP-driven alternation: parameter validation and uniformization, the
//! block intensity matrix of the joint phase, phase-type means, the
//! Laplace-transformed covariance of the limiting pair, and correlation by
//! numerical inversion.
//!
//! A continuous-time MAP `(b, C, D)` counts the `D`-transitions of a
//! background jump process with generator `C + D`. Odd counts mirror the
//! second coordinate, even counts synchronize it, so the count parity plays
//! the role the two-state driver plays in [`crate::exp_alt`]; the two-state
//! construction is recovered exactly by the embedding
//! `b = (1,0), C = diag(-alpha,-beta), D = [[0,alpha],[beta,0]]`.
//!
//! Transforms use the `e^{-qt}` kernel throughout:
//! `cov_laplace(m, q) = integral_0^inf e^{-qt} E[B(t) B*(t)] dt`.

use num_complex::Complex64;

use crate::exp_alt::{mirror_parts, AlternationSchedule, BivariateFlipFlopPath, SimMode};
use crate::flipflop::{direction_pair_labels, wh_couple_at_epochs, CoupledPair, GeneratorMatrix};
use crate::numerics::{
    invert_laplace, solve_linear, solve_matrix, CMatrix, Matrix, DEFAULT_INVERSION_TERMS,
};
use crate::paths::{Dir, PhasePath};
use crate::sampling::{
    build_nested_family, build_nested_family_min_count, NestedPoissonFamily, RandomStream,
};
use crate::{Error, Result};

/// Joint phase label of the MAP-driven construction: both directions plus
/// the background state.
pub type MapPhase = (Dir, Dir, usize);

/// Validated parameters `(b, C, D)` of a continuous-time MAP.
#[derive(Debug, Clone, PartialEq)]
pub struct MapParams {
    b: Vec<f64>,
    c: Matrix,
    d: Matrix,
}

impl MapParams {
    /// Validates and wraps MAP parameters. Each violated invariant is named
    /// in the error: `b` a probability vector, `D` nonnegative, `C` with
    /// nonnegative off-diagonals and strictly negative diagonal, and `C + D`
    /// conservative.
    pub fn new(b: Vec<f64>, c: Matrix, d: Matrix) -> Result<Self> {
        let n = b.len();
        if n == 0 || !c.is_square() || c.rows() != n || !d.is_square() || d.rows() != n {
            return Err(Error::InvalidMap(
                "b, C, D must share one positive dimension".into(),
            ));
        }
        if b.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidMap(
                "initial distribution has a negative entry".into(),
            ));
        }
        if (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMap(
                "initial distribution does not sum to 1".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                if d.get(i, j) < 0.0 {
                    return Err(Error::InvalidMap(format!(
                        "D has a negative entry at ({i}, {j})"
                    )));
                }
                if i != j && c.get(i, j) < 0.0 {
                    return Err(Error::InvalidMap(format!(
                        "C has a negative off-diagonal entry at ({i}, {j})"
                    )));
                }
            }
            if c.get(i, i) >= 0.0 || c.get(i, i).is_nan() {
                return Err(Error::InvalidMap(format!(
                    "C diagonal entry {i} must be strictly negative"
                )));
            }
            let row_sum = c.row_sum(i) + d.row_sum(i);
            if row_sum.abs() > 1e-12 {
                return Err(Error::InvalidMap(format!(
                    "C + D row {i} sums to {row_sum:.3e}, not zero"
                )));
            }
        }
        Ok(Self { b, c, d })
    }

    /// Two-state MAP whose arrivals are exactly the switches of the
    /// exponential alternation driver with the given rates.
    pub fn exponential_embedding(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidMap("embedding rates must be positive".into()));
        }
        Self::new(
            vec![1.0, 0.0],
            Matrix::from_rows(&[vec![-alpha, 0.0], vec![0.0, -beta]]),
            Matrix::from_rows(&[vec![0.0, alpha], vec![beta, 0.0]]),
        )
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    /// Largest diagonal magnitude of `C`: the minimal uniformization rate.
    pub fn max_diagonal(&self) -> f64 {
        (0..self.dim()).fold(0.0f64, |acc, i| acc.max(self.c.get(i, i).abs()))
    }
}

/// Discrete-time MAP parameters `(b, A0, A1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMapParams {
    b: Vec<f64>,
    a0: Matrix,
    a1: Matrix,
}

impl DiscreteMapParams {
    pub fn new(b: Vec<f64>, a0: Matrix, a1: Matrix) -> Result<Self> {
        let n = b.len();
        if !a0.is_square() || a0.rows() != n || !a1.is_square() || a1.rows() != n {
            return Err(Error::InvalidMap(
                "b, A0, A1 must share one dimension".into(),
            ));
        }
        for i in 0..n {
            if a0.row(i).iter().chain(a1.row(i)).any(|&x| x < 0.0) {
                return Err(Error::InvalidMap(format!(
                    "discrete MAP has a negative entry in row {i}"
                )));
            }
            let total = a0.row_sum(i) + a1.row_sum(i);
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMap(format!(
                    "A0 + A1 row {i} sums to {total}, not 1"
                )));
            }
        }
        Ok(Self { b, a0, a1 })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a0(&self) -> &Matrix {
        &self.a0
    }

    pub fn a1(&self) -> &Matrix {
        &self.a1
    }
}

/// Uniformizes a continuous MAP at rate `gamma >= max_i |C_ii|`:
/// `(b, I + C/gamma, D/gamma)`.
pub fn discretize_map(m: &MapParams, gamma: f64) -> Result<DiscreteMapParams> {
    let minimum = m.max_diagonal();
    if gamma < minimum || gamma.is_nan() {
        return Err(Error::RateTooSmall {
            rate: gamma,
            minimum,
        });
    }
    let n = m.dim();
    let mut a0 = m.c().scale(1.0 / gamma);
    for i in 0..n {
        a0.set(i, i, a0.get(i, i) + 1.0);
    }
    // Clip the round-off at the gamma == max |C_ii| boundary.
    for i in 0..n {
        if a0.get(i, i) < 0.0 {
            a0.set(i, i, 0.0);
        }
    }
    DiscreteMapParams::new(m.b().to_vec(), a0, m.d().scale(1.0 / gamma))
}

/// Validated phase-type parameters: a subdistribution `b` and a nonsingular
/// subintensity `T` with `-T^{-1} >= 0` (checked numerically).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTypeParams {
    b: Vec<f64>,
    t: Matrix,
}

impl PhaseTypeParams {
    pub fn new(b: Vec<f64>, t: Matrix) -> Result<Self> {
        let n = b.len();
        if n == 0 || !t.is_square() || t.rows() != n {
            return Err(Error::InvalidInput(
                "phase-type parameters must share one positive dimension".into(),
            ));
        }
        if b.iter().any(|&x| x < 0.0) || b.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(
                "phase-type initial vector must be a subdistribution".into(),
            ));
        }
        let scale = t.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                if i != j && t.get(i, j) < -1e-9 * scale {
                    return Err(Error::InvalidInput(format!(
                        "subintensity off-diagonal ({i}, {j}) is negative"
                    )));
                }
            }
            if t.row_sum(i) > 1e-9 * scale {
                return Err(Error::InvalidInput(format!(
                    "subintensity row {i} has positive sum"
                )));
            }
        }
        // -T^{-1} must exist with nonnegative entries.
        let neg_identity = Matrix::identity(n).scale(-1.0);
        let inverse = solve_matrix(&t, &neg_identity)?;
        if inverse
            .data()
            .iter()
            .any(|&x| x < -1e-9 * inverse.max_abs())
        {
            return Err(Error::InvalidInput(
                "-T^{-1} has a significantly negative entry".into(),
            ));
        }
        Ok(Self { b, t })
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn t(&self) -> &Matrix {
        &self.t
    }
}

/// Mean of a phase-type distribution: `b (-T^{-1}) e`, computed through one
/// linear solve (`T m = -e`), never an explicit inverse.
pub fn ph_mean(p: &PhaseTypeParams) -> Result<f64> {
    let n = p.b().len();
    let minus_ones = vec![-1.0; n];
    let moments = solve_linear(p.t(), &minus_ones)?;
    Ok(p.b().iter().zip(&moments).map(|(w, m)| w * m).sum())
}

/// Block intensity matrix of the joint phase on direction pairs crossed with
/// the background state, block order `((+1,+1), (+1,-1), (-1,+1), (-1,-1))`:
///
/// ```text
/// [ -lI    0     2D    lI+2C ]
/// [  0    -lI   lI+2C   2D   ]
/// [  0     lI   -lI      0   ]
/// [  lI    0     0     -lI   ]
/// ```
///
/// The initial distribution of the construction is `(0, 0, 0, b)`. Requires
/// `lambda >= 2 max_i |C_ii|`.
pub fn build_map_alt_generator(lambda: f64, m: &MapParams) -> Result<GeneratorMatrix> {
    let minimum = 2.0 * m.max_diagonal();
    if lambda < minimum || lambda.is_nan() {
        return Err(Error::RateTooSmall {
            rate: lambda,
            minimum,
        });
    }
    let n = m.dim();
    let size = 4 * n;
    let mut q = Matrix::zeros(size, size);
    let put =
        |q: &mut Matrix, block_row: usize, block_col: usize, f: &dyn Fn(usize, usize) -> f64| {
            for i in 0..n {
                for j in 0..n {
                    q.set(block_row * n + i, block_col * n + j, f(i, j));
                }
            }
        };
    let minus_lambda_i = |i: usize, j: usize| if i == j { -lambda } else { 0.0 };
    let lambda_i = |i: usize, j: usize| if i == j { lambda } else { 0.0 };
    let two_d = |i: usize, j: usize| 2.0 * m.d().get(i, j);
    let lambda_plus_2c = |i: usize, j: usize| {
        if i == j {
            lambda + 2.0 * m.c().get(i, j)
        } else {
            2.0 * m.c().get(i, j)
        }
    };
    put(&mut q, 0, 0, &minus_lambda_i);
    put(&mut q, 0, 2, &two_d);
    put(&mut q, 0, 3, &lambda_plus_2c);
    put(&mut q, 1, 1, &minus_lambda_i);
    put(&mut q, 1, 2, &lambda_plus_2c);
    put(&mut q, 1, 3, &two_d);
    put(&mut q, 2, 1, &lambda_i);
    put(&mut q, 2, 2, &minus_lambda_i);
    put(&mut q, 3, 0, &lambda_i);
    put(&mut q, 3, 3, &minus_lambda_i);

    let pairs = direction_pair_labels();
    let mut labels = Vec::with_capacity(size);
    for pair in &pairs {
        for j in 0..n {
            labels.push(format!("{},s{j})", pair.trim_end_matches(')')));
        }
    }
    GeneratorMatrix::new(labels, q)
}

/// Transform of the covariance with the `e^{-qt}` kernel, evaluated at a
/// complex abscissa (the inversion needs `Re q > 0`):
///
/// `-(1/q) b [I + (C-qI)^{-1} D] [C - qI - D (C-qI)^{-1} D]^{-1} e`.
pub(crate) fn cov_laplace_complex(m: &MapParams, q: Complex64) -> Result<Complex64> {
    let n = m.dim();
    let mut shifted = CMatrix::from_real(m.c());
    for i in 0..n {
        shifted.set(i, i, shifted.get(i, i) - q);
    }
    let d = CMatrix::from_real(m.d());
    let x = shifted.solve_matrix(&d, "cov_laplace: (C-qI)^{-1} D")?;
    let schur = shifted.sub(&d.matmul(&x));
    let ones = vec![Complex64::ONE; n];
    let w = schur.solve(&ones, "cov_laplace: Schur complement")?;
    let mut dot = Complex64::ZERO;
    for (j, &w_j) in w.iter().enumerate() {
        let mut row_j = Complex64::new(m.b()[j], 0.0);
        for i in 0..n {
            row_j += Complex64::new(m.b()[i], 0.0) * x.get(i, j);
        }
        dot += row_j * w_j;
    }
    Ok(-dot / q)
}

/// `integral_0^inf e^{-qt} E[B(t) B*(t)] dt` for real `q > 0`.
pub fn cov_laplace(m: &MapParams, q: f64) -> Result<f64> {
    assert!(q > 0.0 && q.is_finite(), "transform requires q > 0");
    Ok(cov_laplace_complex(m, Complex64::new(q, 0.0))?.re)
}

/// Same transform value computed along the occupation-time route: the
/// difference of two phase-type means over the killed background process,
///
/// `q^{-1} [ mean(b, T_q) - mean(b (qI-C)^{-1} D, T_q) ]`,
/// `T_q = (C - qI) + D (qI - C)^{-1} D`.
///
/// Algebraically identical to [`cov_laplace`]; kept as an independent route
/// for structural cross-checks.
pub fn cov_occupation_split(m: &MapParams, q: f64) -> Result<f64> {
    assert!(q > 0.0 && q.is_finite(), "transform requires q > 0");
    let n = m.dim();
    // R = qI - C.
    let mut r = m.c().scale(-1.0);
    for i in 0..n {
        r.set(i, i, r.get(i, i) + q);
    }
    let x = solve_matrix(&r, m.d())?; // (qI - C)^{-1} D
    let t_q = r.scale(-1.0).add(&m.d().matmul(&x));
    let even = PhaseTypeParams::new(m.b().to_vec(), t_q.clone())?;
    // Row vector b (qI - C)^{-1} D via the transposed solve.
    let y = solve_linear(&r.transpose(), m.b())?;
    let b_odd = m.d().vec_mul(&y);
    let odd = PhaseTypeParams::new(b_odd, t_q)?;
    Ok((ph_mean(&even)? - ph_mean(&odd)?) / q)
}

/// Time-domain covariance `E[B(t) B*(t)]` by numerical inversion of
/// [`cov_laplace`].
pub fn cov_time_domain(m: &MapParams, t: f64, terms: usize, tolerance: f64) -> Result<f64> {
    let transform = |q: Complex64| cov_laplace_complex(m, q);
    invert_laplace(&transform, t, terms, tolerance)
}

/// Correlation of the limiting pair at `t > 0`: `cov_time_domain / t`,
/// clipped to `[-1, 1]` when the numerical overshoot is below `1e-9` and
/// rejected otherwise.
pub fn corr_map_with(m: &MapParams, t: f64, terms: usize, tolerance: f64) -> Result<f64> {
    let value = cov_time_domain(m, t, terms, tolerance)? / t;
    if value.abs() > 1.0 + 1e-9 {
        return Err(Error::RangeViolation { value });
    }
    Ok(value.clamp(-1.0, 1.0))
}

/// [`corr_map_with`] at the default inversion settings.
pub fn corr_map(m: &MapParams, t: f64) -> Result<f64> {
    corr_map_with(m, t, DEFAULT_INVERSION_TERMS, 1e-7)
}

/// Background chain and arrival counts of a discrete MAP trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDriverPath {
    /// Background state after each step; length `steps + 1`.
    pub states: Vec<usize>,
    /// Arrival count after each step; increments by at most one per step.
    pub counts: Vec<u64>,
}

impl MapDriverPath {
    /// Count parities as a 0/1 indicator trajectory.
    pub fn parity(&self) -> Vec<u8> {
        self.counts.iter().map(|&c| (c % 2) as u8).collect()
    }
}

fn initial_state(b: &[f64], s: &mut RandomStream) -> usize {
    // A degenerate initial law consumes no draw; anything else consumes one.
    if let Some(i) = b.iter().position(|&x| x == 1.0) {
        return i;
    }
    let u = s.next_uniform();
    let mut acc = 0.0;
    for (i, &w) in b.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    b.len() - 1
}

/// Simulates the discrete MAP for `steps` transitions; one uniform per step.
/// Each step scans the arrival row (`A1`) before the non-arrival row (`A0`),
/// so the exponential embedding consumes draws exactly like the two-state
/// driver in [`crate::exp_alt::simulate_driver`].
pub fn simulate_map_driver(
    dm: &DiscreteMapParams,
    steps: usize,
    s: &mut RandomStream,
) -> MapDriverPath {
    let n = dm.dim();
    let mut state = initial_state(dm.b(), s);
    let mut count = 0u64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut counts = Vec::with_capacity(steps + 1);
    states.push(state);
    counts.push(count);
    for _ in 0..steps {
        let u = s.next_uniform();
        let mut acc = 0.0;
        // Rounding slack at u ~ 1 falls through to "stay, no arrival".
        let mut next = state;
        let mut arrival = false;
        let mut decided = false;
        for j in 0..n {
            acc += dm.a1().get(state, j);
            if u < acc {
                next = j;
                arrival = true;
                decided = true;
                break;
            }
        }
        if !decided {
            for j in 0..n {
                acc += dm.a0().get(state, j);
                if u < acc {
                    next = j;
                    break;
                }
            }
        }
        if arrival {
            count += 1;
        }
        state = next;
        states.push(state);
        counts.push(count);
    }
    MapDriverPath { states, counts }
}

/// Assembles the MAP-driven bivariate flip-flop at one family level. The
/// coupled pair must sit on the arrivals of the level whose rate is
/// `lambda`; alternation follows the parity of the arrival count and the
/// phase labels carry the background state.
pub fn build_map_alternating_pair(
    m: &MapParams,
    lambda: f64,
    family: &NestedPoissonFamily,
    coupled: &CoupledPair,
    driver: &MapDriverPath,
) -> Result<BivariateFlipFlopPath<MapPhase>> {
    let minimum = 2.0 * m.max_diagonal();
    if lambda < minimum || lambda.is_nan() {
        return Err(Error::RateTooSmall {
            rate: lambda,
            minimum,
        });
    }
    let level = family
        .rates()
        .iter()
        .position(|&r| r == lambda)
        .ok_or_else(|| Error::InvalidInput("lambda is not a family level rate".into()))?;
    let count = coupled.count();
    let level_arrivals = family.arrivals(level);
    if level_arrivals.len() < count || coupled.skeleton().epochs()[1..] != level_arrivals[..count] {
        return Err(Error::InvalidInput(
            "coupled pair epochs do not match the family level arrivals".into(),
        ));
    }
    let coarse = family.coarse_counts(level, count);
    let out_of_range = coarse.iter().any(|&mstep| mstep >= driver.states.len());
    if out_of_range {
        return Err(Error::InvalidInput(
            "driver trajectory shorter than the embedded arrival count".into(),
        ));
    }
    let indicators: Vec<u8> = coarse
        .iter()
        .map(|&mstep| (driver.counts[mstep] % 2) as u8)
        .collect();
    let background: Vec<usize> = coarse.iter().map(|&mstep| driver.states[mstep]).collect();

    let parts = mirror_parts(coupled, &indicators);
    let states: Vec<MapPhase> = coupled
        .phase()
        .states()
        .iter()
        .enumerate()
        .map(|(j, &d1)| {
            let interval = (j / 2).min(count);
            (d1, parts.dir2[j], background[interval])
        })
        .collect();
    let phase = PhasePath::new(
        coupled.phase().breakpoints().to_vec(),
        states,
        coupled.phase().horizon(),
    )
    .expect("joint phase shares validated breakpoints");
    Ok(BivariateFlipFlopPath {
        phase,
        fluid1: coupled.fluid().clone(),
        fluid2: parts.fluid2,
        chi: coupled.chi().to_vec(),
        s_epochs: parts.s_epochs,
        signs: parts.signs,
        bstar: parts.bstar,
    })
}

/// A complete MAP-driven realization at one rate.
#[derive(Debug, Clone)]
pub struct MapAltRealization {
    pub map: MapParams,
    pub gamma: f64,
    pub lambda: f64,
    pub level: usize,
    pub family: NestedPoissonFamily,
    pub driver: MapDriverPath,
    pub schedule: AlternationSchedule,
    pub coupled: CoupledPair,
    pub path: BivariateFlipFlopPath<MapPhase>,
}

/// Simulates the MAP-driven construction at rate `lambda`.
///
/// The uniformization rate is `max(max_i |C_ii|, gamma)` when `gamma` is
/// supplied, so the coarsest family rate is exactly twice it; `lambda` must
/// be at least that. The stream layout matches
/// [`crate::exp_alt::simulate_exp_alt`], which makes the exponential
/// embedding reproduce the two-state schedule draw for draw on a shared
/// seed.
pub fn simulate_map_alt(
    m: &MapParams,
    gamma: Option<f64>,
    lambda: f64,
    mode: SimMode,
    s: &RandomStream,
) -> Result<MapAltRealization> {
    let gamma_eff = m.max_diagonal().max(gamma.unwrap_or(0.0));
    let base = 2.0 * gamma_eff;
    if lambda < base || lambda.is_nan() {
        return Err(Error::RateTooSmall {
            rate: lambda,
            minimum: base,
        });
    }
    let rates: Vec<f64> = if lambda == base {
        vec![base]
    } else {
        vec![base, lambda]
    };
    let level = rates.len() - 1;
    let family = match mode {
        SimMode::Horizon(h) => build_nested_family(&rates, h, s),
        SimMode::Epochs(k) => {
            assert!(k >= 1, "need at least one epoch");
            build_nested_family_min_count(&rates, k, s)
        }
    };
    let steps = family.arrivals(0).len();
    let dm = discretize_map(m, gamma_eff)?;
    let mut driver_stream = s.substream("driver");
    let driver = simulate_map_driver(&dm, steps, &mut driver_stream);
    let schedule = AlternationSchedule::build(&family, driver.parity())?;

    let used = match mode {
        SimMode::Epochs(k) => k,
        SimMode::Horizon(_) => family.arrivals(level).len(),
    };
    if used == 0 {
        return Err(Error::InvalidInput(
            "no arrivals inside the horizon; enlarge it".into(),
        ));
    }
    let coupled = wh_couple_at_epochs(
        lambda,
        &family.arrivals(level)[..used],
        &s.substream_indexed("wh-level", level as u64),
    );
    let path = build_map_alternating_pair(m, lambda, &family, &coupled, &driver)?;
    Ok(MapAltRealization {
        map: m.clone(),
        gamma: gamma_eff,
        lambda,
        level,
        family,
        driver,
        schedule,
        coupled,
        path,
    })
}
