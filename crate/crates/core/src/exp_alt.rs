//! Exponentially alternating bivariate flip-flops.
//!
//! A two-state driver chain, uniformized on the coarsest Poisson level,
//! decides when the second fluid coordinate copies the first one
//! (synchronizing intervals) and when it mirrors it (desynchronizing
//! intervals). The switch epochs propagate to finer levels through the exact
//! nesting of the arrival family, so the alternation schedule of every level
//! reuses the same driver trajectory instead of resampling it.
//!
//! Alongside the pathwise construction, this module builds the 4-state
//! intensity matrix of the joint phase process and evaluates the closed-form
//! time-varying correlation of the limiting coordinate pair.

use crate::flipflop::{direction_pair_labels, CoupledPair, GeneratorMatrix};
use crate::numerics::Matrix;
use crate::paths::{Dir, FluidPath, PhasePath};
use crate::sampling::{
    build_nested_family, build_nested_family_min_count, NestedPoissonFamily, RandomStream,
};
use crate::{Error, Result};

/// Whether the second coordinate starts by copying or mirroring the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    Synchronized,
    Desynchronized,
}

/// Switching rates of the alternation driver: sojourns in the synchronized
/// state are exp(`alpha`), in the desynchronized state exp(`beta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpAltParams {
    pub alpha: f64,
    pub beta: f64,
    pub start: StartMode,
}

impl ExpAltParams {
    pub fn new(alpha: f64, beta: f64, start: StartMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(
                "alternation rates must be positive and finite".into(),
            ));
        }
        Ok(Self { alpha, beta, start })
    }

    pub fn gamma(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Coarsest admissible family rate: twice the total switching rate.
    pub fn base_rate(&self) -> f64 {
        2.0 * self.gamma()
    }

    /// Driver indicator at time zero: 0 synchronized, 1 desynchronized.
    pub fn initial_indicator(&self) -> u8 {
        match self.start {
            StartMode::Synchronized => 0,
            StartMode::Desynchronized => 1,
        }
    }

    /// Two-state intensity matrix of the driver.
    pub fn intensity(&self) -> Matrix {
        Matrix::from_rows(&[vec![-self.alpha, self.alpha], vec![self.beta, -self.beta]])
    }
}

/// A validated stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: Matrix,
}

impl TransitionMatrix {
    pub fn new(p: Matrix) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::InvalidInput(
                "transition matrix must be square".into(),
            ));
        }
        for i in 0..p.rows() {
            if p.row(i).iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "negative transition probability in row {i}"
                )));
            }
            if (p.row_sum(i) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "row {i} sums to {}, not 1",
                    p.row_sum(i)
                )));
            }
        }
        Ok(Self { p })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }
}

/// One-step transition matrix of the driver observed at Poisson epochs of the
/// given rate: `P = I + intensity / rate`.
pub fn uniformized_chain(params: &ExpAltParams, rate: f64) -> Result<TransitionMatrix> {
    let minimum = params.alpha.max(params.beta);
    if rate < minimum || rate.is_nan() {
        return Err(Error::RateTooSmall { rate, minimum });
    }
    let p = Matrix::from_rows(&[
        vec![1.0 - params.alpha / rate, params.alpha / rate],
        vec![params.beta / rate, 1.0 - params.beta / rate],
    ]);
    TransitionMatrix::new(p)
}

/// Simulates the driver chain for `steps` transitions at the uniformization
/// rate `gamma`; returns the trajectory of length `steps + 1`. Consumes
/// exactly one uniform per step: from state 0 the chain switches when
/// `u < alpha/gamma`, from state 1 when `u < beta/gamma`.
pub fn simulate_driver(params: &ExpAltParams, steps: usize, s: &mut RandomStream) -> Vec<u8> {
    let gamma = params.gamma();
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = params.initial_indicator();
    states.push(y);
    for _ in 0..steps {
        let switch_probability = if y == 0 {
            params.alpha / gamma
        } else {
            params.beta / gamma
        };
        if s.next_uniform() < switch_probability {
            y ^= 1;
        }
        states.push(y);
    }
    states
}

/// Indices at which a discrete trajectory changes value, prefixed with 0.
pub fn switching_epochs(states: &[u8]) -> Vec<usize> {
    assert!(!states.is_empty(), "trajectory must be nonempty");
    let mut ell = vec![0];
    for m in 1..states.len() {
        if states[m] != states[m - 1] {
            ell.push(m);
        }
    }
    ell
}

/// Maps level-0 arrival numbers (1-based; 0 is time zero) to the arrival
/// numbers of the same epochs at `level`, through the composed embeddings.
/// Epoch identity is exact because embedded arrivals are copied bit-for-bit.
pub fn nesting_index_map(
    family: &NestedPoissonFamily,
    level: usize,
    ell: &[usize],
) -> Result<Vec<usize>> {
    let composed = family.composed_embedding(0, level);
    ell.iter()
        .map(|&k| {
            if k == 0 {
                Ok(0)
            } else if k - 1 < composed.len() {
                Ok(composed[k - 1] + 1)
            } else {
                Err(Error::IndexBeyondHorizon {
                    level: 0,
                    index: k,
                    available: composed.len(),
                })
            }
        })
        .collect()
}

/// Switch bookkeeping of a driver trajectory across all family levels.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternationSchedule {
    /// Level-0 arrival numbers of the switches; `ell[0] == 0`.
    pub ell: Vec<usize>,
    /// Per level: arrival numbers of the same epochs (`nu[0] == ell`).
    pub nu: Vec<Vec<usize>>,
    /// The 0/1 indicator trajectory driving the alternation.
    pub driver: Vec<u8>,
}

impl AlternationSchedule {
    pub fn build(family: &NestedPoissonFamily, driver: Vec<u8>) -> Result<Self> {
        if driver.len() > family.arrivals(0).len() + 1 {
            return Err(Error::InvalidInput(
                "driver trajectory longer than the level-0 arrival count".into(),
            ));
        }
        let ell = switching_epochs(&driver);
        let nu = (0..family.levels())
            .map(|n| nesting_index_map(family, n, &ell))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { ell, nu, driver })
    }

    /// Alternation epochs at `level` expressed on the flip-flop clock:
    /// `chi[nu(k)]` for each switch `k >= 1` that the coupled pair covers.
    pub fn sync_epochs(&self, level: usize, chi: &[f64]) -> Vec<f64> {
        self.nu[level]
            .iter()
            .skip(1)
            .take_while(|&&k| k < chi.len())
            .map(|&k| chi[k])
            .collect()
    }
}

/// A coupled bivariate fluid path: the first coordinate is the flip-flop of
/// the underlying [`CoupledPair`]; the second copies it on synchronizing
/// stretches and mirrors it on desynchronizing ones.
#[derive(Debug, Clone)]
pub struct BivariateFlipFlopPath<L> {
    /// Joint phase path; labels carry both directions (plus the driver state
    /// for MAP-driven alternation).
    pub phase: PhasePath<L>,
    pub fluid1: FluidPath,
    pub fluid2: FluidPath,
    /// Flip-flop epochs where the fluid reproduces skeleton values.
    pub chi: Vec<f64>,
    /// Alternation epochs embedded in `chi` (where the indicator flips).
    pub s_epochs: Vec<f64>,
    /// Per inter-chi interval: +1 copy, -1 mirror.
    pub signs: Vec<i8>,
    /// Signed skeleton built from shared arithmetic:
    /// `bstar[k] = sum_{i<=k} signs[i-1] * (C_i - C_{i-1})`.
    pub bstar: Vec<f64>,
}

pub(crate) struct MirrorParts {
    pub fluid2: FluidPath,
    pub dir2: Vec<Dir>,
    pub signs: Vec<i8>,
    pub bstar: Vec<f64>,
    pub s_epochs: Vec<f64>,
}

/// Builds the mirrored second coordinate from per-interval indicators
/// (`indicators[i]` odd means interval `(chi_i, chi_{i+1}]` mirrors). The
/// mirrored levels accumulate the same increments as the first coordinate
/// with flipped signs, so the signed-skeleton identity holds to rounding.
pub(crate) fn mirror_parts(coupled: &CoupledPair, indicators: &[u8]) -> MirrorParts {
    let count = coupled.count();
    assert_eq!(
        indicators.len(),
        count + 1,
        "need one indicator per chi epoch"
    );
    let signs: Vec<i8> = indicators[..count]
        .iter()
        .map(|&y| if y.is_multiple_of(2) { 1 } else { -1 })
        .collect();

    let fluid1 = coupled.fluid();
    let levels1 = fluid1.levels();
    let slopes1 = fluid1.slopes();
    let mut levels2 = Vec::with_capacity(levels1.len());
    let mut slopes2 = Vec::with_capacity(slopes1.len());
    levels2.push(0.0);
    for j in 0..slopes1.len() {
        let sign = f64::from(signs[j / 2]);
        levels2.push(levels2[j] + sign * (levels1[j + 1] - levels1[j]));
        slopes2.push(sign * slopes1[j]);
    }
    let fluid2 = FluidPath::new(fluid1.breakpoints().to_vec(), levels2, slopes2)
        .expect("mirrored path is continuous by construction");

    let dir1 = coupled.phase().states();
    let dir2: Vec<Dir> = dir1
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let sign = if j / 2 < count {
                signs[j / 2]
            } else {
                // Zero-length final piece at the horizon.
                if indicators[count].is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            };
            d.signed(sign)
        })
        .collect();

    let values = coupled.skeleton().values();
    let mut bstar = Vec::with_capacity(count + 1);
    bstar.push(0.0);
    for k in 1..=count {
        bstar.push(bstar[k - 1] + f64::from(signs[k - 1]) * (values[k] - values[k - 1]));
    }

    let chi = coupled.chi();
    let s_epochs: Vec<f64> = (1..=count)
        .filter(|&i| indicators[i] % 2 != indicators[i - 1] % 2)
        .map(|i| chi[i])
        .collect();

    MirrorParts {
        fluid2,
        dir2,
        signs,
        bstar,
        s_epochs,
    }
}

/// Driver indicators read off at the arrivals of `level`: entry `k` is the
/// driver state right after arrival `k` (state `driver[m]`, where `m` counts
/// the level-0 arrivals among the first `k` arrivals of `level`).
pub fn driver_states_at_level(
    family: &NestedPoissonFamily,
    level: usize,
    driver: &[u8],
    upto: usize,
) -> Result<Vec<u8>> {
    family
        .coarse_counts(level, upto)
        .into_iter()
        .map(|m| {
            driver.get(m).copied().ok_or_else(|| {
                Error::InvalidInput(
                    "driver trajectory shorter than the embedded arrival count".into(),
                )
            })
        })
        .collect()
}

/// Assembles the bivariate flip-flop at one family level from a coupled pair
/// and the level-0 driver trajectory. The coupled pair must have been built
/// on the arrivals of the level whose rate is `lambda`.
pub fn build_alternating_pair(
    params: &ExpAltParams,
    lambda: f64,
    family: &NestedPoissonFamily,
    coupled: &CoupledPair,
    driver: &[u8],
) -> Result<BivariateFlipFlopPath<(Dir, Dir)>> {
    if lambda < params.base_rate() {
        return Err(Error::RateTooSmall {
            rate: lambda,
            minimum: params.base_rate(),
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
    let indicators = driver_states_at_level(family, level, driver, count)?;
    Ok(bivariate_from_indicators(coupled, &indicators))
}

/// Pathwise core: builds the bivariate path from per-epoch driver
/// indicators. Exposed for hand-traced micro-instances.
pub fn bivariate_from_indicators(
    coupled: &CoupledPair,
    indicators: &[u8],
) -> BivariateFlipFlopPath<(Dir, Dir)> {
    let parts = mirror_parts(coupled, indicators);
    let states: Vec<(Dir, Dir)> = coupled
        .phase()
        .states()
        .iter()
        .zip(&parts.dir2)
        .map(|(&d1, &d2)| (d1, d2))
        .collect();
    let phase = PhasePath::new(
        coupled.phase().breakpoints().to_vec(),
        states,
        coupled.phase().horizon(),
    )
    .expect("joint phase shares validated breakpoints");
    BivariateFlipFlopPath {
        phase,
        fluid1: coupled.fluid().clone(),
        fluid2: parts.fluid2,
        chi: coupled.chi().to_vec(),
        s_epochs: parts.s_epochs,
        signs: parts.signs,
        bstar: parts.bstar,
    }
}

/// Intensity matrix of the joint direction pair on
/// `((+1,+1), (+1,-1), (-1,+1), (-1,-1))`.
///
/// Requires `lambda >= 2 max(alpha, beta)` so the off-diagonal entries stay
/// nonnegative.
pub fn build_exp_alt_generator(lambda: f64, params: &ExpAltParams) -> Result<GeneratorMatrix> {
    let minimum = 2.0 * params.alpha.max(params.beta);
    if lambda < minimum || lambda.is_nan() {
        return Err(Error::RateTooSmall {
            rate: lambda,
            minimum,
        });
    }
    let (a, b, l) = (params.alpha, params.beta, lambda);
    let q = Matrix::from_rows(&[
        vec![-l, 0.0, 2.0 * a, l - 2.0 * a],
        vec![0.0, -l, l - 2.0 * b, 2.0 * b],
        vec![0.0, l, -l, 0.0],
        vec![l, 0.0, 0.0, -l],
    ]);
    GeneratorMatrix::new(direction_pair_labels(), q)
}

/// Time-varying correlation of the limiting coordinate pair at `t > 0`.
///
/// Synchronized start:
/// `(beta-alpha)/gamma + 2 alpha (1 - e^{-t gamma}) / (t gamma^2)`;
/// desynchronized start replaces the transient term by
/// `-2 beta (1 - e^{-t gamma}) / (t gamma^2)`. The `t -> 0` limits are +1
/// and -1; `t = 0` itself is rejected because the formula is 0/0 there.
pub fn corr_exp(params: &ExpAltParams, t: f64) -> f64 {
    assert!(t > 0.0 && t.is_finite(), "corr_exp requires t > 0");
    let gamma = params.gamma();
    let base = (params.beta - params.alpha) / gamma;
    let transient = -(-t * gamma).exp_m1() / (t * gamma * gamma);
    match params.start {
        StartMode::Synchronized => base + 2.0 * params.alpha * transient,
        StartMode::Desynchronized => base - 2.0 * params.beta * transient,
    }
}

/// Time-domain covariance of the limiting pair: `t * corr_exp`.
pub fn cov_exp(params: &ExpAltParams, t: f64) -> f64 {
    let gamma = params.gamma();
    let base = (params.beta - params.alpha) * t / gamma;
    let transient = -(-t * gamma).exp_m1() / (gamma * gamma);
    match params.start {
        StartMode::Synchronized => base + 2.0 * params.alpha * transient,
        StartMode::Desynchronized => base - 2.0 * params.beta * transient,
    }
}

/// Closed-form transform of the covariance with the `e^{-qt}` kernel:
/// `q^{-1} [ (beta-alpha)/(gamma q) ± 2(alpha|beta)/(gamma (gamma+q)) ]`.
pub fn cov_laplace_exp(params: &ExpAltParams, q: f64) -> f64 {
    assert!(q > 0.0 && q.is_finite(), "transform requires q > 0");
    let gamma = params.gamma();
    let base = (params.beta - params.alpha) / (gamma * q);
    match params.start {
        StartMode::Synchronized => (base + 2.0 * params.alpha / (gamma * (gamma + q))) / q,
        StartMode::Desynchronized => (base - 2.0 * params.beta / (gamma * (gamma + q))) / q,
    }
}

/// Sampling mode for realizations: a fixed number of coupled intervals at
/// the finest level, or a fixed time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMode {
    Epochs(usize),
    Horizon(f64),
}

/// A complete realization at one rate: family, driver, schedule, coupled
/// pair and the bivariate path.
#[derive(Debug, Clone)]
pub struct ExpAltRealization {
    pub params: ExpAltParams,
    pub lambda: f64,
    pub level: usize,
    pub family: NestedPoissonFamily,
    pub schedule: AlternationSchedule,
    pub coupled: CoupledPair,
    pub path: BivariateFlipFlopPath<(Dir, Dir)>,
}

/// Simulates the full construction at rate `lambda >= 2 gamma`.
///
/// Stream layout: the family draws from `("poisson-level", n)`, the driver
/// from `"driver"`, the coupling exponentials from `("wh-level", level)`
/// with inner substreams `wh-down` / `wh-up`.
pub fn simulate_exp_alt(
    params: &ExpAltParams,
    lambda: f64,
    mode: SimMode,
    s: &RandomStream,
) -> Result<ExpAltRealization> {
    let base = params.base_rate();
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
    let mut driver_stream = s.substream("driver");
    let driver = simulate_driver(params, steps, &mut driver_stream);
    let schedule = AlternationSchedule::build(&family, driver)?;

    let used = match mode {
        SimMode::Epochs(k) => k,
        SimMode::Horizon(_) => family.arrivals(level).len(),
    };
    if used == 0 {
        return Err(Error::InvalidInput(
            "no arrivals inside the horizon; enlarge it".into(),
        ));
    }
    let coupled = crate::flipflop::wh_couple_at_epochs(
        lambda,
        &family.arrivals(level)[..used],
        &s.substream_indexed("wh-level", level as u64),
    );
    let path = build_alternating_pair(params, lambda, &family, &coupled, &schedule.driver)?;
    Ok(ExpAltRealization {
        params: *params,
        lambda,
        level,
        family,
        schedule,
        coupled,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flipflop::wh_couple_from_draws;
    use crate::sampling::NestedPoissonFamily;

    fn params(alpha: f64, beta: f64) -> ExpAltParams {
        ExpAltParams::new(alpha, beta, StartMode::Synchronized).unwrap()
    }

    #[test]
    fn uniformized_chain_at_total_rate_has_identical_rows() {
        let p = params(1.0, 2.0);
        let chain = uniformized_chain(&p, 3.0).unwrap();
        let rows = chain.matrix().to_rows();
        assert!((rows[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((rows[0][1] - 1.0 / 3.0).abs() < 1e-15);
        for (a, b) in rows[0].iter().zip(&rows[1]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn uniformized_chain_at_faster_rate() {
        let p = params(1.0, 2.0);
        let chain = uniformized_chain(&p, 5.0).unwrap();
        let rows = chain.matrix().to_rows();
        assert!((rows[0][0] - 0.8).abs() < 1e-15);
        assert!((rows[0][1] - 0.2).abs() < 1e-15);
        assert!((rows[1][0] - 0.4).abs() < 1e-15);
        assert!((rows[1][1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn uniformized_chain_approaches_identity() {
        let p = params(1.0, 2.0);
        let chain = uniformized_chain(&p, 1e9).unwrap();
        assert!((chain.matrix().get(0, 0) - 1.0).abs() < 1e-8);
        assert!((chain.matrix().get(1, 1) - 1.0).abs() < 1e-8);
        assert!(matches!(
            uniformized_chain(&p, 1.5),
            Err(Error::RateTooSmall { .. })
        ));
    }

    #[test]
    fn switching_epochs_examples() {
        assert_eq!(switching_epochs(&[0, 0, 1, 0, 0, 1]), vec![0, 2, 3, 5]);
        assert_eq!(switching_epochs(&[0, 0, 0]), vec![0]);
        assert_eq!(switching_epochs(&[0, 1, 0, 1]), vec![0, 1, 2, 3]);
    }

    fn figure_family() -> NestedPoissonFamily {
        // Level-0 arrivals sit at 1-based positions [1, 2, 5, 6, 8, 10] of
        // level 1.
        NestedPoissonFamily::from_parts(
            vec![2.0, 4.0],
            6.0,
            vec![
                vec![0.5, 1.0, 2.5, 3.0, 4.0, 5.0],
                vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0],
            ],
            vec![vec![0, 1, 4, 5, 7, 9]],
        )
        .unwrap()
    }

    #[test]
    fn nesting_index_map_matches_worked_instance() {
        let family = figure_family();
        let nu = nesting_index_map(&family, 1, &[2, 3, 5]).unwrap();
        assert_eq!(nu, vec![2, 5, 8]);
        // Level 0 is the identity map.
        assert_eq!(
            nesting_index_map(&family, 0, &[2, 3, 5]).unwrap(),
            vec![2, 3, 5]
        );
        // Epoch identity through the nesting is exact.
        for (&k, &v) in [2usize, 3, 5].iter().zip(&nu) {
            assert_eq!(
                family.epoch(0, k).unwrap().to_bits(),
                family.epoch(1, v).unwrap().to_bits()
            );
        }
        assert!(matches!(
            nesting_index_map(&family, 1, &[7]),
            Err(Error::IndexBeyondHorizon { .. })
        ));
    }

    #[test]
    fn schedule_from_figure_driver() {
        let family = figure_family();
        // Driver switching at steps 2, 3, 5 reproduces the worked ell.
        let schedule = AlternationSchedule::build(&family, vec![0, 0, 1, 0, 0, 1, 1]).unwrap();
        assert_eq!(schedule.ell, vec![0, 2, 3, 5]);
        assert_eq!(schedule.nu[1], vec![0, 2, 5, 8]);
    }

    #[test]
    fn driver_states_at_level_counts_embedded_arrivals() {
        let family = figure_family();
        let driver = vec![0, 0, 1, 0, 0, 1, 1];
        let states = driver_states_at_level(&family, 1, &driver, 10).unwrap();
        // Level-1 arrival k sees the driver state after m level-0 arrivals,
        // m = |{level-0 positions < k}|.
        assert_eq!(states, vec![0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn constant_driver_copies_and_mirrors() {
        let pair = wh_couple_from_draws(4.0, &[0.4, 0.9], &[0.2, 0.1], &[0.4, 0.3]);
        let copy = bivariate_from_indicators(&pair, &[0, 0, 0]);
        assert_eq!(copy.fluid1, copy.fluid2);
        assert!(copy.s_epochs.is_empty());
        let mirror = bivariate_from_indicators(&pair, &[1, 1, 1]);
        for (a, b) in mirror.fluid1.levels().iter().zip(mirror.fluid2.levels()) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn single_desync_micro_instance() {
        // Two coupled intervals with a desynchronization on the second one:
        // F2(chi_2) = C_1 - (C_2 - C_1), traced by hand.
        let pair = wh_couple_from_draws(4.0, &[0.4, 0.9], &[0.2, 0.1], &[0.4, 0.3]);
        let values = pair.skeleton().values();
        let (c1, c2) = (values[1], values[2]);
        let path = bivariate_from_indicators(&pair, &[0, 1, 1]);
        let expected = c1 - (c2 - c1);
        let got = path.fluid2.eval(path.chi[2]).unwrap();
        assert!((got - expected).abs() <= 1e-9, "{got} vs {expected}");
        assert_eq!(path.signs, vec![1, -1]);
        assert_eq!(path.s_epochs, vec![path.chi[1]]);
        assert!((path.bstar[2] - expected).abs() <= 1e-15);
    }

    #[test]
    fn second_coordinate_is_continuous_at_alternation_epochs() {
        // The second phase coordinate keeps its value across every switch
        // epoch while the first one flips there.
        let p = params(1.0, 2.0);
        let s = RandomStream::new(41);
        let real = simulate_exp_alt(&p, 24.0, SimMode::Epochs(200), &s).unwrap();
        assert!(
            !real.path.s_epochs.is_empty(),
            "want switches in the window"
        );
        let states = real.path.phase.states();
        let breakpoints = real.path.phase.breakpoints();
        for &epoch in &real.path.s_epochs {
            let idx = breakpoints
                .binary_search_by(|b| b.partial_cmp(&epoch).unwrap())
                .expect("alternation epochs are breakpoints");
            let before = states[idx - 1];
            let after = states[idx];
            assert_eq!(before.1, after.1, "second coordinate must not jump");
            assert_eq!(before.0.flipped(), after.0, "first coordinate flips");
        }
    }

    #[test]
    fn signed_skeleton_identity_along_realizations() {
        let p = params(1.5, 0.7);
        for seed in 0..10 {
            let s = RandomStream::new(seed);
            let real = simulate_exp_alt(&p, 32.0, SimMode::Epochs(64), &s).unwrap();
            for k in 0..=real.coupled.count() {
                let fluid_value = real.path.fluid2.eval(real.path.chi[k]).unwrap();
                assert!(
                    (fluid_value - real.path.bstar[k]).abs() <= 1e-9,
                    "seed {seed}, k {k}"
                );
            }
        }
    }

    #[test]
    fn generator_matches_direct_substitution() {
        let g = build_exp_alt_generator(10.0, &params(1.0, 2.0)).unwrap();
        assert_eq!(
            g.matrix().to_rows(),
            vec![
                vec![-10.0, 0.0, 2.0, 8.0],
                vec![0.0, -10.0, 6.0, 4.0],
                vec![0.0, 10.0, -10.0, 0.0],
                vec![10.0, 0.0, 0.0, -10.0],
            ]
        );
        // Boundary of the validity region: switch rates exhaust the jumps.
        let boundary = build_exp_alt_generator(4.0, &params(2.0, 2.0)).unwrap();
        assert_eq!(boundary.matrix().row(0), &[-4.0, 0.0, 4.0, 0.0]);
        assert_eq!(boundary.matrix().row(1), &[0.0, -4.0, 0.0, 4.0]);
        assert!(matches!(
            build_exp_alt_generator(3.9, &params(2.0, 2.0)),
            Err(Error::RateTooSmall { .. })
        ));
    }

    #[test]
    fn correlation_limits_and_spot_values() {
        let sync = params(1.0, 1.0);
        assert!((corr_exp(&sync, 1e-8) - 1.0).abs() < 1e-6);
        assert!((corr_exp(&sync, 1.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-12);
        assert!((corr_exp(&sync, 1.0) - 0.4323324).abs() < 1e-7);

        let skew = params(1.0, 2.0);
        assert!((corr_exp(&skew, 1.0) - 0.544492).abs() < 1e-6);
        assert!((corr_exp(&skew, 1000.0) - 1.0 / 3.0).abs() < 1e-3);

        let desync = ExpAltParams::new(1.0, 2.0, StartMode::Desynchronized).unwrap();
        assert!((corr_exp(&desync, 1e-8) + 1.0).abs() < 1e-6);
        assert!((corr_exp(&desync, 1.0) + 0.088984).abs() < 1e-6);
    }

    #[test]
    fn correlation_is_strictly_decreasing_from_one() {
        for (a, b) in [(1.0, 1.0), (1.0, 2.0), (3.0, 0.5)] {
            let p = params(a, b);
            let limit = (b - a) / (a + b);
            let mut previous = 1.0 + 1e-9;
            for i in 0..100 {
                let t = 0.1 + i as f64 * 0.1;
                let value = corr_exp(&p, t);
                assert!(value < previous, "not decreasing at t={t} for ({a},{b})");
                assert!(value > limit, "crossed the long-run limit");
                previous = value;
            }
        }
    }

    #[test]
    fn mixture_of_start_modes_is_a_valid_correlation() {
        let sync = params(0.8, 1.7);
        let desync = ExpAltParams::new(0.8, 1.7, StartMode::Desynchronized).unwrap();
        for w in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for i in 1..=60 {
                let t = 0.2 * i as f64;
                let mixed = w * corr_exp(&sync, t) + (1.0 - w) * corr_exp(&desync, t);
                assert!(mixed.abs() <= 1.0 + 1e-12, "w={w}, t={t}: {mixed}");
            }
        }
    }

    #[test]
    fn transform_closed_form_matches_time_domain_at_known_point() {
        let p = params(1.0, 2.0);
        // Transform value at q = 1 is 1/3 + 1/6 = 1/2.
        assert!((cov_laplace_exp(&p, 1.0) - 0.5).abs() < 1e-14);
        // Covariance at t = 1.
        assert!((cov_exp(&p, 1.0) - 0.544492).abs() < 1e-6);
    }

    #[test]
    fn realization_is_reproducible() {
        let p = params(1.0, 2.0);
        let s = RandomStream::new(77);
        let a = simulate_exp_alt(&p, 16.0, SimMode::Epochs(32), &s).unwrap();
        let b = simulate_exp_alt(&p, 16.0, SimMode::Epochs(32), &s).unwrap();
        assert_eq!(a.path.fluid2.levels(), b.path.fluid2.levels());
        assert_eq!(a.schedule, b.schedule);
    }

    #[test]
    fn schedule_and_path_agree_on_alternation_epochs() {
        // Two independent routes to the same epochs: the schedule composes
        // the level embeddings (nu indices), the path watches the embedded
        // driver indicator flip. They must coincide exactly on the covered
        // range.
        let p = params(0.9, 1.4);
        for seed in [3, 14, 15] {
            let s = RandomStream::new(seed);
            let real = simulate_exp_alt(&p, 20.0, SimMode::Epochs(128), &s).unwrap();
            let via_schedule = real.schedule.sync_epochs(real.level, &real.path.chi);
            assert!(!via_schedule.is_empty(), "seed {seed}: no switches in the window");
            assert_eq!(via_schedule, real.path.s_epochs, "seed {seed}");
        }
    }
}
