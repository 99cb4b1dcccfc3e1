//! Coupling of a standard flip-flop with a Brownian skeleton on shared
//! randomness, plus intensity-matrix builders and coupling diagnostics.
//!
//! The coupling draws, for each inspection interval `k`, a pair of
//! independent exp(sqrt(lambda)) variables `(D_k, U_k)` — the depth below the
//! current skeleton value and the rebound above the interval minimum. The
//! skeleton is then
//!
//! ```text
//! M_k = C_k - D_k,      C_{k+1} = M_k + U_k,
//! ```
//!
//! while the flip-flop spends `D_k/sqrt(lambda)` sliding down at slope
//! `-sqrt(lambda)` and `U_k/sqrt(lambda)` climbing at `+sqrt(lambda)`. Both
//! objects are built from the same `(D_k, U_k)` floats, so the flip-flop
//! value at every second breakpoint equals the skeleton value exactly, and
//! the interval minima match as well. Inspection epochs are drawn separately
//! at rate `lambda/2`, so the skeleton law never depends on how many
//! intervals a caller asks for.

use crate::numerics::Matrix;
use crate::paths::{BrownianSkeleton, Dir, FluidPath, PhasePath};
use crate::sampling::{exp_draw, RandomStream};
use crate::{Error, Result};

/// A validated intensity matrix together with its state labels.
///
/// Off-diagonal entries must be nonnegative and each row must sum to zero
/// within `1e-12` relative to the largest entry magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    labels: Vec<String>,
    q: Matrix,
}

impl GeneratorMatrix {
    pub fn new(labels: Vec<String>, q: Matrix) -> Result<Self> {
        if !q.is_square() || q.rows() != labels.len() {
            return Err(Error::InvalidGenerator(
                "need a square matrix with one label per state".into(),
            ));
        }
        let scale = q.max_abs().max(1.0);
        for i in 0..q.rows() {
            for j in 0..q.cols() {
                if i != j && q.get(i, j) < 0.0 {
                    return Err(Error::InvalidGenerator(format!(
                        "negative off-diagonal entry at ({i}, {j})"
                    )));
                }
            }
            if q.row_sum(i).abs() > 1e-12 * scale {
                return Err(Error::InvalidGenerator(format!(
                    "row {i} sums to {:.3e}, not zero",
                    q.row_sum(i)
                )));
            }
        }
        Ok(Self { labels, q })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }
}

/// A flip-flop path and the Brownian skeleton it is coupled to.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    lambda: f64,
    skeleton: BrownianSkeleton,
    phase: PhasePath<Dir>,
    fluid: FluidPath,
    chi: Vec<f64>,
}

impl CoupledPair {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn skeleton(&self) -> &BrownianSkeleton {
        &self.skeleton
    }

    pub fn phase(&self) -> &PhasePath<Dir> {
        &self.phase
    }

    pub fn fluid(&self) -> &FluidPath {
        &self.fluid
    }

    /// Every second flip-flop breakpoint, including time zero; `chi()[k]` is
    /// where the fluid value reproduces the skeleton value `k`.
    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    /// Number of coupled intervals.
    pub fn count(&self) -> usize {
        self.skeleton.count()
    }
}

/// Deterministic core of the coupling: builds the pair from explicit
/// inspection epochs and down/up exponentials. `thetas`, `downs` and `ups`
/// must have equal length `K >= 1`.
pub fn wh_couple_from_draws(
    lambda: f64,
    thetas: &[f64],
    downs: &[f64],
    ups: &[f64],
) -> CoupledPair {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "lambda must be positive"
    );
    let count = thetas.len();
    assert!(count >= 1, "need at least one inspection epoch");
    assert_eq!(downs.len(), count);
    assert_eq!(ups.len(), count);
    assert!(
        thetas[0] > 0.0 && thetas.windows(2).all(|w| w[0] < w[1]),
        "inspection epochs must be positive and strictly increasing"
    );
    assert!(
        downs.iter().chain(ups).all(|&x| x > 0.0 && x.is_finite()),
        "down/up draws must be positive"
    );

    let sqrt_lambda = lambda.sqrt();
    let mut epochs = Vec::with_capacity(count + 1);
    epochs.push(0.0);
    epochs.extend_from_slice(thetas);

    let mut values = Vec::with_capacity(count + 1);
    let mut minima = Vec::with_capacity(count);
    values.push(0.0);
    for k in 0..count {
        let m = values[k] - downs[k];
        minima.push(m);
        values.push(m + ups[k]);
    }

    // Flip-flop breakpoints: down for D_k/sqrt(lambda), up for U_k/sqrt(lambda).
    let mut breakpoints = Vec::with_capacity(2 * count + 1);
    breakpoints.push(0.0);
    for k in 0..count {
        let last = *breakpoints.last().unwrap();
        breakpoints.push(last + downs[k] / sqrt_lambda);
        let last = *breakpoints.last().unwrap();
        breakpoints.push(last + ups[k] / sqrt_lambda);
    }

    // Levels are shared arithmetic with the skeleton: C_0, M_0, C_1, M_1, ...
    let mut levels = Vec::with_capacity(2 * count + 1);
    let mut slopes = Vec::with_capacity(2 * count);
    levels.push(0.0);
    for k in 0..count {
        levels.push(minima[k]);
        levels.push(values[k + 1]);
        slopes.push(-sqrt_lambda);
        slopes.push(sqrt_lambda);
    }

    let states: Vec<Dir> = (0..2 * count + 1)
        .map(|i| if i % 2 == 0 { Dir::Down } else { Dir::Up })
        .collect();
    let horizon = *breakpoints.last().unwrap();
    let chi: Vec<f64> = breakpoints.iter().step_by(2).copied().collect();

    let skeleton = BrownianSkeleton::new(epochs, values, minima)
        .expect("skeleton invariants hold by construction");
    let phase = PhasePath::new(breakpoints.clone(), states, horizon)
        .expect("phase invariants hold by construction");
    let fluid = FluidPath::new(breakpoints, levels, slopes)
        .expect("fluid continuity holds by construction");

    CoupledPair {
        lambda,
        skeleton,
        phase,
        fluid,
        chi,
    }
}

/// Couples a flip-flop to a skeleton at externally supplied inspection
/// epochs (e.g. one level of a nested Poisson family), drawing only the
/// down/up exponentials from the substreams `wh-down` and `wh-up`.
pub fn wh_couple_at_epochs(lambda: f64, thetas: &[f64], s: &RandomStream) -> CoupledPair {
    let sqrt_lambda = lambda.sqrt();
    let mut down_stream = s.substream("wh-down");
    let mut up_stream = s.substream("wh-up");
    let downs: Vec<f64> = (0..thetas.len())
        .map(|_| exp_draw(sqrt_lambda, &mut down_stream))
        .collect();
    let ups: Vec<f64> = (0..thetas.len())
        .map(|_| exp_draw(sqrt_lambda, &mut up_stream))
        .collect();
    wh_couple_from_draws(lambda, thetas, &downs, &ups)
}

/// Couples a flip-flop and skeleton with a fixed number of inspection
/// intervals. Inspection gaps are exp(lambda/2) from the substream
/// `wh-theta`; down/up exponentials come from disjoint substreams, so the
/// skeleton law is unaffected by `count`.
pub fn wh_couple(lambda: f64, count: usize, s: &RandomStream) -> CoupledPair {
    assert!(count >= 1, "need at least one inspection interval");
    let mut theta_stream = s.substream("wh-theta");
    let mut thetas = Vec::with_capacity(count);
    let mut t = 0.0;
    for _ in 0..count {
        t += exp_draw(lambda / 2.0, &mut theta_stream);
        thetas.push(t);
    }
    wh_couple_at_epochs(lambda, &thetas, s)
}

/// Couples until both the inspection epochs and the flip-flop epochs exceed
/// `horizon`; used by misalignment sweeps over a fixed window.
pub fn wh_couple_horizon(lambda: f64, horizon: f64, s: &RandomStream) -> CoupledPair {
    assert!(
        horizon > 0.0 && horizon.is_finite(),
        "horizon must be positive"
    );
    let sqrt_lambda = lambda.sqrt();
    let mut theta_stream = s.substream("wh-theta");
    let mut down_stream = s.substream("wh-down");
    let mut up_stream = s.substream("wh-up");
    let mut thetas = Vec::new();
    let mut downs = Vec::new();
    let mut ups = Vec::new();
    let (mut theta, mut chi) = (0.0, 0.0);
    while theta < horizon || chi < horizon {
        theta += exp_draw(lambda / 2.0, &mut theta_stream);
        let d = exp_draw(sqrt_lambda, &mut down_stream);
        let u = exp_draw(sqrt_lambda, &mut up_stream);
        chi += (d + u) / sqrt_lambda;
        thetas.push(theta);
        downs.push(d);
        ups.push(u);
    }
    wh_couple_from_draws(lambda, &thetas, &downs, &ups)
}

/// Intensity matrix of the two-state switching process at rate `lambda`,
/// states ordered `(+1, -1)`.
pub fn build_standard_generator(lambda: f64) -> GeneratorMatrix {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "lambda must be positive"
    );
    let q = Matrix::from_rows(&[vec![-lambda, lambda], vec![lambda, -lambda]]);
    GeneratorMatrix::new(vec!["+1".into(), "-1".into()], q)
        .expect("standard generator is valid by construction")
}

/// State labels for the four direction pairs, in the fixed order
/// `(+1,+1), (+1,-1), (-1,+1), (-1,-1)`.
pub fn direction_pair_labels() -> Vec<String> {
    vec![
        "(+1,+1)".into(),
        "(+1,-1)".into(),
        "(-1,+1)".into(),
        "(-1,-1)".into(),
    ]
}

/// Kronecker-sum intensity matrix of two independent switching processes at
/// rate `lambda`, on the direction pairs in the fixed order above.
pub fn build_independent_bivariate_generator(lambda: f64) -> GeneratorMatrix {
    assert!(
        lambda > 0.0 && lambda.is_finite(),
        "lambda must be positive"
    );
    let l = lambda;
    let q = Matrix::from_rows(&[
        vec![-2.0 * l, l, l, 0.0],
        vec![l, -2.0 * l, 0.0, l],
        vec![l, 0.0, -2.0 * l, l],
        vec![0.0, l, l, -2.0 * l],
    ]);
    GeneratorMatrix::new(direction_pair_labels(), q)
        .expect("Kronecker sum is valid by construction")
}

/// Residual summary of a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingReport {
    /// `max_k |theta_k - chi_k|` over the compared epochs.
    pub epoch_misalignment: f64,
    /// `max_k |F(chi_k) - C_k|`.
    pub value_residual: f64,
    /// `max_k |min F on [chi_k, chi_{k+1}] - M_k|`.
    pub minimum_residual: f64,
    /// Number of epochs entering the misalignment maximum.
    pub epochs_compared: usize,
}

/// Computes the coupling residuals. With `horizon = Some(T)` the epoch
/// misalignment runs over indices whose inspection and flip-flop epochs are
/// both below `T`; identity residuals always cover the whole pair.
pub fn coupling_diagnostics(pair: &CoupledPair, horizon: Option<f64>) -> CouplingReport {
    let skeleton = pair.skeleton();
    let chi = pair.chi();
    let mut misalignment = 0.0f64;
    let mut value_residual = 0.0f64;
    let mut minimum_residual = 0.0f64;
    let mut compared = 0usize;

    for k in 1..=pair.count() {
        let theta = skeleton.epochs()[k];
        if horizon.is_none_or(|t| theta < t && chi[k] < t) {
            misalignment = misalignment.max((theta - chi[k]).abs());
            compared += 1;
        }
        let fluid_value = pair.fluid.eval(chi[k]).expect("chi within horizon");
        value_residual = value_residual.max((fluid_value - skeleton.values()[k]).abs());
        let interval_min = pair
            .fluid
            .min_on_interval(chi[k - 1], chi[k])
            .expect("interval within horizon");
        minimum_residual = minimum_residual.max((interval_min - skeleton.minima()[k - 1]).abs());
    }

    CouplingReport {
        epoch_misalignment: misalignment,
        value_residual,
        minimum_residual,
        epochs_compared: compared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_single_interval_coupling() {
        // lambda = 4, D_0 = 0.2, U_0 = 0.4, theta_1 = 0.5:
        // M_0 = -0.2, C_1 = 0.2; the flip-flop slides down for 0.1 time
        // units, climbs for 0.2, so chi_1 = 0.3 and F(chi_1) = 0.2.
        let pair = wh_couple_from_draws(4.0, &[0.5], &[0.2], &[0.4]);
        let skeleton = pair.skeleton();
        assert!((skeleton.minima()[0] + 0.2).abs() < 1e-15);
        assert!((skeleton.values()[1] - 0.2).abs() < 1e-15);
        assert!((pair.chi()[1] - 0.3).abs() < 1e-15);
        assert!((pair.fluid().eval(0.3).unwrap() - 0.2).abs() < 1e-15);
        assert!((pair.fluid().min_on_interval(0.0, 0.3).unwrap() + 0.2).abs() < 1e-15);

        let report = coupling_diagnostics(&pair, None);
        assert!((report.epoch_misalignment - 0.2).abs() < 1e-15);
        assert_eq!(report.epochs_compared, 1);
        assert!(report.value_residual <= 1e-9);
        assert!(report.minimum_residual <= 1e-9);
    }

    #[test]
    fn identities_hold_for_any_seed() {
        for seed in 0..20 {
            let s = RandomStream::new(seed);
            let pair = wh_couple(64.0, 32, &s);
            let report = coupling_diagnostics(&pair, None);
            assert!(report.value_residual <= 1e-9, "seed {seed}");
            assert!(report.minimum_residual <= 1e-9, "seed {seed}");
            // Wiener-Hopf shape: M_k below both endpoint values.
            let sk = pair.skeleton();
            for k in 0..pair.count() {
                assert!(sk.minima()[k] <= sk.values()[k].min(sk.values()[k + 1]));
            }
            // Phase alternates Down, Up, Down, ...
            for (i, st) in pair.phase().states().iter().enumerate() {
                let expected = if i % 2 == 0 { Dir::Down } else { Dir::Up };
                assert_eq!(*st, expected);
            }
        }
    }

    #[test]
    fn down_up_draws_have_expected_moments() {
        let s = RandomStream::new(99);
        let lambda = 16.0;
        let pair = wh_couple(lambda, 100_000, &s);
        let sk = pair.skeleton();
        let n = pair.count();
        let downs: Vec<f64> = (0..n).map(|k| sk.values()[k] - sk.minima()[k]).collect();
        let ups: Vec<f64> = (0..n)
            .map(|k| sk.values()[k + 1] - sk.minima()[k])
            .collect();
        let target = 1.0 / lambda.sqrt();
        let se = target / (n as f64).sqrt();
        let mean_d = downs.iter().sum::<f64>() / n as f64;
        let mean_u = ups.iter().sum::<f64>() / n as f64;
        assert!((mean_d - target).abs() < 3.0 * se, "down mean {mean_d}");
        assert!((mean_u - target).abs() < 3.0 * se, "up mean {mean_u}");
        // Empirical independence: sample correlation within 3/sqrt(n).
        let var_d = downs.iter().map(|x| (x - mean_d).powi(2)).sum::<f64>() / n as f64;
        let var_u = ups.iter().map(|x| (x - mean_u).powi(2)).sum::<f64>() / n as f64;
        let cov = downs
            .iter()
            .zip(&ups)
            .map(|(d, u)| (d - mean_d) * (u - mean_u))
            .sum::<f64>()
            / n as f64;
        let corr = cov / (var_d * var_u).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "correlation {corr}");
    }

    #[test]
    fn sojourn_rates_match_switching_rate() {
        // Both down and up sojourns are exp(lambda): empirical rate =
        // 1/mean within 3 standard errors.
        let s = RandomStream::new(7);
        let lambda = 9.0;
        let pair = wh_couple(lambda, 50_000, &s);
        let bps = pair.phase().breakpoints();
        let mut down_gaps = Vec::new();
        let mut up_gaps = Vec::new();
        for i in 0..bps.len() - 1 {
            let gap = bps[i + 1] - bps[i];
            if i % 2 == 0 {
                down_gaps.push(gap);
            } else {
                up_gaps.push(gap);
            }
        }
        for gaps in [down_gaps, up_gaps] {
            let n = gaps.len() as f64;
            let mean = gaps.iter().sum::<f64>() / n;
            let se = mean / n.sqrt();
            assert!(
                (mean - 1.0 / lambda).abs() < 3.0 * se,
                "sojourn mean {mean}"
            );
        }
    }

    #[test]
    fn inspection_and_flipflop_epochs_agree_in_expectation() {
        // E[theta_K] = E[chi_K]: sample means over replications within three
        // joint standard errors.
        let root = RandomStream::new(2024);
        let (lambda, k, reps) = (64.0, 32usize, 10_000);
        let mut theta_sum = 0.0;
        let mut theta_sq = 0.0;
        let mut chi_sum = 0.0;
        let mut chi_sq = 0.0;
        for r in 0..reps {
            let s = root.substream_indexed("rep", r);
            let pair = wh_couple(lambda, k, &s);
            let theta = pair.skeleton().epochs()[k];
            let chi = pair.chi()[k];
            theta_sum += theta;
            theta_sq += theta * theta;
            chi_sum += chi;
            chi_sq += chi * chi;
        }
        let n = reps as f64;
        let theta_mean = theta_sum / n;
        let chi_mean = chi_sum / n;
        let var = theta_sq / n - theta_mean * theta_mean + chi_sq / n - chi_mean * chi_mean;
        let joint_se = (var / n).sqrt();
        assert!(
            (theta_mean - chi_mean).abs() < 3.0 * joint_se,
            "theta mean {theta_mean}, chi mean {chi_mean}"
        );
    }

    #[test]
    fn misalignment_shrinks_with_lambda() {
        // Monte Carlo proxy of the almost-sure epoch alignment: the median
        // max misalignment over [0, 1] decreases strictly along a lambda
        // geometric sweep.
        let root = RandomStream::new(5);
        let lambdas = [16.0, 64.0, 256.0, 1024.0, 4096.0];
        let mut medians = Vec::new();
        for (li, &lambda) in lambdas.iter().enumerate() {
            let mut values: Vec<f64> = (0..100)
                .map(|r| {
                    let s = root
                        .substream_indexed("lambda", li as u64)
                        .substream_indexed("rep", r);
                    let pair = wh_couple_horizon(lambda, 1.0, &s);
                    coupling_diagnostics(&pair, Some(1.0)).epoch_misalignment
                })
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push((values[49] + values[50]) / 2.0);
        }
        for w in medians.windows(2) {
            assert!(w[1] < w[0], "medians not decreasing: {medians:?}");
        }
    }

    #[test]
    fn standard_generator_values() {
        let g = build_standard_generator(1.0);
        assert_eq!(g.matrix().to_rows(), vec![vec![-1.0, 1.0], vec![1.0, -1.0]]);
        let g5 = build_standard_generator(5.0);
        assert_eq!(
            g5.matrix().to_rows(),
            vec![vec![-5.0, 5.0], vec![5.0, -5.0]]
        );
        for i in 0..2 {
            assert_eq!(g5.matrix().row_sum(i), 0.0);
        }
    }

    #[test]
    fn independent_bivariate_generator_values() {
        let g = build_independent_bivariate_generator(1.0);
        assert_eq!(
            g.matrix().to_rows(),
            vec![
                vec![-2.0, 1.0, 1.0, 0.0],
                vec![1.0, -2.0, 0.0, 1.0],
                vec![1.0, 0.0, -2.0, 1.0],
                vec![0.0, 1.0, 1.0, -2.0],
            ]
        );
        let g3 = build_independent_bivariate_generator(3.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(g3.matrix().get(i, j), 3.0 * g.matrix().get(i, j));
                // Kronecker sum of identical generators is symmetric.
                assert_eq!(g3.matrix().get(i, j), g3.matrix().get(j, i));
            }
            assert_eq!(g3.matrix().row_sum(i), 0.0);
        }
    }

    #[test]
    fn generator_validation_rejects_bad_matrices() {
        let bad_offdiag = Matrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, -1.0]]);
        assert!(GeneratorMatrix::new(vec!["a".into(), "b".into()], bad_offdiag).is_err());
        let bad_rowsum = Matrix::from_rows(&[vec![-1.0, 2.0], vec![1.0, -1.0]]);
        assert!(GeneratorMatrix::new(vec!["a".into(), "b".into()], bad_rowsum).is_err());
    }
}
