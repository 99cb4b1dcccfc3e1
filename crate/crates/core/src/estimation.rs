//! Statistical verification layer: empirical generator estimation from phase
//! paths, exact sampling of the limiting coordinate pair, Monte Carlo
//! correlation with batch-means errors, convergence sweeps and the
//! synchronization point-mass check.
//!
//! Correlation targets are sampled exactly in law (driver jump times plus
//! Gaussian increments over each constant stretch), so formula checks carry
//! no path-discretization error. Replications draw from per-index substreams
//! and reduce in index order, which makes parallel and serial runs produce
//! identical numbers.

use rayon::prelude::*;

use crate::exp_alt::{ExpAltParams, SimMode};
use crate::flipflop::{coupling_diagnostics, wh_couple_horizon};
use crate::map_alt::MapParams;
use crate::paths::PhasePath;
use crate::sampling::{exp_draw, gauss_draw, RandomStream};
use crate::{Error, Result};

/// Number of batches used for batch-means standard errors.
const BATCHES: usize = 30;

/// Transition counts and holding times of a set of phase paths, with the
/// maximum-likelihood intensity estimate `N_ij / R_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalGenerator {
    counts: Vec<Vec<u64>>,
    holding: Vec<f64>,
}

impl EmpiricalGenerator {
    pub fn dim(&self) -> usize {
        self.holding.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn holding(&self) -> &[f64] {
        &self.holding
    }

    /// Whether state `i` accumulated any holding time.
    pub fn observed(&self, i: usize) -> bool {
        self.holding[i] > 0.0
    }

    /// Estimated intensity: off-diagonal `N_ij / R_i`, diagonal the negative
    /// row sum; `None` for unobserved rows.
    pub fn rate(&self, i: usize, j: usize) -> Option<f64> {
        if !self.observed(i) {
            return None;
        }
        if i == j {
            let total: u64 = self.counts[i].iter().sum();
            Some(-(total as f64) / self.holding[i])
        } else {
            Some(self.counts[i][j] as f64 / self.holding[i])
        }
    }

    /// Standard error `sqrt(N_ij) / R_i` (total row count on the diagonal).
    pub fn stderr(&self, i: usize, j: usize) -> Option<f64> {
        if !self.observed(i) {
            return None;
        }
        let n = if i == j {
            self.counts[i].iter().sum::<u64>()
        } else {
            self.counts[i][j]
        };
        Some((n as f64).sqrt() / self.holding[i])
    }
}

/// Estimates the intensity matrix of a jump process from observed phase
/// paths. Consecutive intervals with equal states merge (no self-transition
/// is ever counted); states missing from `states` are an error.
pub fn empirical_generator<S: Copy + PartialEq>(
    paths: &[&PhasePath<S>],
    states: &[S],
) -> Result<EmpiricalGenerator> {
    if states.is_empty() {
        return Err(Error::InvalidInput("need a nonempty state list".into()));
    }
    let dim = states.len();
    let index_of = |s: S| -> Result<usize> {
        states
            .iter()
            .position(|&x| x == s)
            .ok_or_else(|| Error::InvalidInput("path visits a state outside the list".into()))
    };
    let mut counts = vec![vec![0u64; dim]; dim];
    let mut holding = vec![0.0f64; dim];
    let mut total_duration = 0.0;
    for path in paths {
        let mut previous: Option<usize> = None;
        for (start, end, state) in path.intervals() {
            let idx = index_of(state)?;
            holding[idx] += end - start;
            total_duration += end - start;
            if let Some(prev) = previous {
                if prev != idx {
                    counts[prev][idx] += 1;
                }
            }
            previous = Some(idx);
        }
    }
    if total_duration <= 0.0 {
        return Err(Error::NoObservations);
    }
    Ok(EmpiricalGenerator { counts, holding })
}

/// Alternation driver for the exact samplers.
#[derive(Debug, Clone)]
pub enum Driver {
    Exp(ExpAltParams),
    Map(MapParams),
}

/// Draws one exact sample of the coordinate pair at time `t`: the driver's
/// jump times are simulated exactly, and each constant stretch of length
/// `dt` contributes one `N(0, dt)` increment added to the first coordinate
/// and added or subtracted from the second one. Exact in law — there is no
/// time-discretization error.
pub fn exact_alt_bm_sample(driver: &Driver, t: f64, s: &mut RandomStream) -> (f64, f64) {
    assert!(t > 0.0 && t.is_finite(), "sample time must be positive");
    match driver {
        Driver::Exp(params) => sample_exp_driver(params, t, s),
        Driver::Map(map) => sample_map_driver(map, t, s),
    }
}

fn sample_exp_driver(params: &ExpAltParams, t: f64, s: &mut RandomStream) -> (f64, f64) {
    let mut state = params.initial_indicator();
    let mut first = 0.0;
    let mut second = 0.0;
    let mut elapsed = 0.0;
    loop {
        let rate = if state == 0 {
            params.alpha
        } else {
            params.beta
        };
        let sojourn = exp_draw(rate, s);
        let dt = sojourn.min(t - elapsed);
        let increment = gauss_draw(0.0, dt, s);
        first += increment;
        second += if state == 0 { increment } else { -increment };
        elapsed += sojourn;
        if elapsed >= t {
            return (first, second);
        }
        state ^= 1;
    }
}

fn sample_map_driver(map: &MapParams, t: f64, s: &mut RandomStream) -> (f64, f64) {
    let n = map.dim();
    // Initial state from b; a degenerate law consumes no draw.
    let mut state = match map.b().iter().position(|&x| x == 1.0) {
        Some(i) => i,
        None => {
            let u = s.next_uniform();
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in map.b().iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        }
    };
    let mut parity = 0u8;
    let mut first = 0.0;
    let mut second = 0.0;
    let mut elapsed = 0.0;
    loop {
        // Total event rate out of `state` is -C_ii (conservation).
        let rate = -map.c().get(state, state);
        let sojourn = exp_draw(rate, s);
        let dt = sojourn.min(t - elapsed);
        let increment = gauss_draw(0.0, dt, s);
        first += increment;
        second += if parity == 0 { increment } else { -increment };
        elapsed += sojourn;
        if elapsed >= t {
            return (first, second);
        }
        // Pick the event: C-transitions keep the count, D-transitions flip
        // the parity (arrival); D may fire on the diagonal.
        let u = s.next_uniform() * rate;
        let mut acc = 0.0;
        let mut next = state;
        let mut arrival = false;
        let mut decided = false;
        for j in 0..n {
            if j != state {
                acc += map.c().get(state, j);
                if u < acc {
                    next = j;
                    decided = true;
                    break;
                }
            }
        }
        if !decided {
            for j in 0..n {
                acc += map.d().get(state, j);
                if u < acc {
                    next = j;
                    arrival = true;
                    break;
                }
            }
            if !arrival {
                // Rounding slack at u ~ rate: attribute to the last D entry.
                arrival = true;
            }
        }
        if arrival {
            parity ^= 1;
        }
        state = next;
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replications: u64,
}

impl McEstimate {
    /// Whether `target` lies within `k` standard errors of the mean.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

fn batch_mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= BATCHES, "need at least {BATCHES} replications");
    let mean = values.iter().sum::<f64>() / n as f64;
    let base = n / BATCHES;
    let remainder = n % BATCHES;
    let mut batch_means = Vec::with_capacity(BATCHES);
    let mut start = 0;
    for b in 0..BATCHES {
        let size = base + usize::from(b < remainder);
        let batch = &values[start..start + size];
        batch_means.push(batch.iter().sum::<f64>() / size as f64);
        start += size;
    }
    let spread = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (BATCHES - 1) as f64;
    (mean, (spread / BATCHES as f64).sqrt())
}

/// Monte Carlo estimate of the correlation `E[B(t) B*(t)] / t` from exact
/// samples, with a 30-batch batch-means standard error. Replication `r`
/// draws from the substream `("rep", r)`; results are independent of the
/// worker count.
pub fn mc_correlation(driver: &Driver, t: f64, replications: u64, s: &RandomStream) -> McEstimate {
    assert!(
        replications >= BATCHES as u64,
        "need at least {BATCHES} replications"
    );
    let values: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut stream = s.substream_indexed("rep", r);
            let (first, second) = exact_alt_bm_sample(driver, t, &mut stream);
            first * second / t
        })
        .collect();
    let (mean, stderr) = batch_mean_stderr(&values);
    McEstimate {
        mean,
        stderr,
        replications,
    }
}

/// Fraction of replications whose driver never desynchronizes on `[0, t]`,
/// with the binomial standard error. The target value is `e^{-alpha t}`.
pub fn sync_point_mass(alpha: f64, t: f64, replications: u64, s: &RandomStream) -> McEstimate {
    assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive");
    assert!(t >= 0.0 && t.is_finite(), "t must be nonnegative");
    assert!(replications >= 2);
    let hits: u64 = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut stream = s.substream_indexed("rep", r);
            u64::from(exp_draw(alpha, &mut stream) > t)
        })
        .sum();
    let p = hits as f64 / replications as f64;
    McEstimate {
        mean: p,
        stderr: (p * (1.0 - p) / replications as f64).sqrt(),
        replications,
    }
}

/// Replications needed for the point-mass check to expect at least 50 hits;
/// configurations below this are underpowered and should be flagged.
pub fn point_mass_required_replications(alpha: f64, t: f64) -> u64 {
    (50.0 * (alpha * t).exp()).ceil() as u64
}

/// Which coupling a convergence sweep exercises.
#[derive(Debug, Clone)]
pub enum SweepConstruction {
    Standard,
    ExpAlt(ExpAltParams),
    MapAlt {
        map: MapParams,
        /// Optional floor for the uniformization rate, as in
        /// [`crate::map_alt::simulate_map_alt`].
        gamma: Option<f64>,
    },
}

/// Per-rate summary of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub median_misalignment: f64,
    pub p90_misalignment: f64,
    pub max_value_residual: f64,
    pub max_minimum_residual: f64,
    /// Largest gap between the mirrored fluid and the signed skeleton; zero
    /// for the standard construction.
    pub max_alternation_residual: f64,
}

/// Sweep table with the fitted log-log slope of the median misalignment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Ordinary least squares slope of `ln median` against `ln lambda`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `slope ± 2 stderr`; reported, never asserted against a theory value.
    pub slope_ci: (f64, f64),
}

struct RepStats {
    misalignment: f64,
    value_residual: f64,
    minimum_residual: f64,
    alternation_residual: f64,
}

fn sweep_replication(
    construction: &SweepConstruction,
    lambda: f64,
    horizon: f64,
    stream: &RandomStream,
) -> Result<RepStats> {
    match construction {
        SweepConstruction::Standard => {
            let pair = wh_couple_horizon(lambda, horizon, stream);
            let report = coupling_diagnostics(&pair, Some(horizon));
            Ok(RepStats {
                misalignment: report.epoch_misalignment,
                value_residual: report.value_residual,
                minimum_residual: report.minimum_residual,
                alternation_residual: 0.0,
            })
        }
        SweepConstruction::ExpAlt(params) => {
            let real = crate::exp_alt::simulate_exp_alt(
                params,
                lambda,
                SimMode::Horizon(horizon),
                stream,
            )?;
            let report = coupling_diagnostics(&real.coupled, Some(horizon));
            let alternation = alternation_residual(&real.path);
            Ok(RepStats {
                misalignment: report.epoch_misalignment,
                value_residual: report.value_residual,
                minimum_residual: report.minimum_residual,
                alternation_residual: alternation,
            })
        }
        SweepConstruction::MapAlt { map, gamma } => {
            let real = crate::map_alt::simulate_map_alt(
                map,
                *gamma,
                lambda,
                SimMode::Horizon(horizon),
                stream,
            )?;
            let report = coupling_diagnostics(&real.coupled, Some(horizon));
            let alternation = alternation_residual(&real.path);
            Ok(RepStats {
                misalignment: report.epoch_misalignment,
                value_residual: report.value_residual,
                minimum_residual: report.minimum_residual,
                alternation_residual: alternation,
            })
        }
    }
}

fn alternation_residual<L>(path: &crate::exp_alt::BivariateFlipFlopPath<L>) -> f64 {
    path.chi
        .iter()
        .zip(&path.bstar)
        .fold(0.0f64, |acc, (&chi, &target)| {
            let value = path.fluid2.eval(chi).expect("chi within horizon");
            acc.max((value - target).abs())
        })
}

fn percentile(sorted: &[f64], fraction: f64) -> f64 {
    let n = sorted.len();
    if n.is_multiple_of(2) && (fraction - 0.5).abs() < 1e-12 {
        return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    }
    let rank = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Runs `replications` independent couplings per rate and summarizes the
/// epoch misalignment and identity residuals; rates must be increasing with
/// at least three entries so the log-log slope has a standard error.
///
/// An empty window (no arrival below the horizon) contributes zeros — the
/// max over an empty index set.
pub fn convergence_sweep(
    construction: &SweepConstruction,
    lambdas: &[f64],
    horizon: f64,
    replications: u64,
    s: &RandomStream,
) -> Result<SweepTable> {
    if lambdas.len() < 3 || !lambdas.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput(
            "need at least three strictly increasing rates".into(),
        ));
    }
    if replications < 2 {
        return Err(Error::InvalidInput("need at least two replications".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for (li, &lambda) in lambdas.iter().enumerate() {
        let stats: Vec<RepStats> = (0..replications)
            .into_par_iter()
            .map(|r| {
                let stream = s
                    .substream_indexed("sweep-lambda", li as u64)
                    .substream_indexed("rep", r);
                match sweep_replication(construction, lambda, horizon, &stream) {
                    Ok(stats) => Ok(stats),
                    // Empty window: the maxima run over an empty set.
                    Err(Error::InvalidInput(msg)) if msg.starts_with("no arrivals") => {
                        Ok(RepStats {
                            misalignment: 0.0,
                            value_residual: 0.0,
                            minimum_residual: 0.0,
                            alternation_residual: 0.0,
                        })
                    }
                    Err(other) => Err(other),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut misalignments: Vec<f64> = stats.iter().map(|r| r.misalignment).collect();
        misalignments.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(SweepRow {
            lambda,
            median_misalignment: percentile(&misalignments, 0.5),
            p90_misalignment: percentile(&misalignments, 0.9),
            max_value_residual: stats.iter().map(|r| r.value_residual).fold(0.0, f64::max),
            max_minimum_residual: stats.iter().map(|r| r.minimum_residual).fold(0.0, f64::max),
            max_alternation_residual: stats
                .iter()
                .map(|r| r.alternation_residual)
                .fold(0.0, f64::max),
        });
    }

    // OLS fit of ln(median) on ln(lambda).
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.median_misalignment > 0.0)
        .map(|r| (r.lambda.ln(), r.median_misalignment.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InvalidInput(
            "not enough nonzero medians for a slope fit".into(),
        ));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum::<f64>();
    let sxy = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum::<f64>();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(SweepTable {
        rows,
        slope,
        slope_stderr: stderr,
        slope_ci: (slope - 2.0 * stderr, slope + 2.0 * stderr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_alt::StartMode;
    use crate::paths::Dir;

    fn sync(alpha: f64, beta: f64) -> ExpAltParams {
        ExpAltParams::new(alpha, beta, StartMode::Synchronized).unwrap()
    }

    #[test]
    fn empirical_generator_single_jump() {
        let path = PhasePath::new(vec![0.0, 2.0], vec!['a', 'b'], 3.0).unwrap();
        let est = empirical_generator(&[&path], &['a', 'b']).unwrap();
        assert_eq!(est.rate(0, 1), Some(0.5));
        assert_eq!(est.counts()[0][1], 1);
        assert_eq!(est.rate(0, 0), Some(-0.5));
        assert_eq!(est.rate(1, 0), Some(0.0));
    }

    #[test]
    fn empirical_generator_unobserved_row() {
        let path = PhasePath::new(vec![0.0], vec!['a'], 5.0).unwrap();
        let est = empirical_generator(&[&path], &['a', 'b']).unwrap();
        assert_eq!(est.rate(0, 1), Some(0.0));
        assert!(!est.observed(1));
        assert_eq!(est.rate(1, 0), None);
    }

    #[test]
    fn empirical_generator_consistency_on_two_state_chain() {
        // The coupled flip-flop phase is a two-state chain switching at rate
        // lambda; over total time 1e4 the MLE lands within 3 SE of it.
        let s = RandomStream::new(6);
        let lambda = 4.0;
        let pair = wh_couple_horizon(lambda, 10_000.0, &s);
        let est = empirical_generator(&[pair.phase()], &[Dir::Down, Dir::Up]).unwrap();
        for (i, j) in [(0usize, 1usize), (1, 0)] {
            let rate = est.rate(i, j).unwrap();
            let se = est.stderr(i, j).unwrap();
            assert!((rate - lambda).abs() < 3.0 * se, "rate {rate}, se {se}");
        }
    }

    #[test]
    fn exact_sampler_copies_until_first_switch() {
        // With a vanishing switch rate the first sojourn exceeds t and the
        // two coordinates coincide bitwise.
        let params = ExpAltParams::new(1e-12, 1.0, StartMode::Synchronized).unwrap();
        let mut s = RandomStream::new(9);
        for _ in 0..50 {
            let (first, second) = exact_alt_bm_sample(&Driver::Exp(params), 1.0, &mut s);
            assert_eq!(first.to_bits(), second.to_bits());
        }
    }

    #[test]
    fn exact_sampler_marginals_are_standard() {
        let driver = Driver::Exp(sync(1.0, 2.0));
        let root = RandomStream::new(13);
        let n = 100_000u64;
        let t = 1.7;
        let samples: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|r| {
                let mut s = root.substream_indexed("rep", r);
                exact_alt_bm_sample(&driver, t, &mut s)
            })
            .collect();
        for pick in [0usize, 1] {
            let xs: Vec<f64> = samples
                .iter()
                .map(|p| if pick == 0 { p.0 } else { p.1 })
                .collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            // Var of the sample variance of a normal is 2 sigma^4 / n.
            let se_var = t * (2.0 / n as f64).sqrt();
            assert!(mean.abs() < 3.0 * (t / n as f64).sqrt(), "mean {mean}");
            assert!((var - t).abs() < 3.0 * se_var, "var {var} vs {t}");
        }
    }

    #[test]
    fn mc_correlation_matches_closed_form() {
        let params = sync(1.0, 1.0);
        let s = RandomStream::new(21);
        let est = mc_correlation(&Driver::Exp(params), 1.0, 40_000, &s);
        let target = crate::exp_alt::corr_exp(&params, 1.0);
        assert!(est.within(target, 3.0), "mc {est:?} vs {target}");
        assert!(est.stderr > 0.0 && est.stderr < 0.02);
    }

    #[test]
    fn mc_correlation_huge_alpha_approaches_mirror_limit() {
        // alpha -> infinity proxy: the pair spends almost all time
        // desynchronized, so the correlation sits near its closed form value
        // just above -1. The sampler cost stays bounded because jumps out of
        // the synchronized state are instantaneous but rare in count.
        let params = sync(1e6, 1.0);
        let s = RandomStream::new(33);
        let est = mc_correlation(&Driver::Exp(params), 1.0, 100_000, &s);
        let target = crate::exp_alt::corr_exp(&params, 1.0);
        assert!(target < -0.99);
        assert!(est.within(target, 3.0), "mc {est:?} vs {target}");
    }

    #[test]
    fn point_mass_examples() {
        let s = RandomStream::new(41);
        let est = sync_point_mass(1.0, 0.0, 1000, &s);
        assert_eq!(est.mean, 1.0);
        let est = sync_point_mass(1.0, 1.0, 100_000, &s);
        let target = (-1.0f64).exp();
        assert!(est.within(target, 3.0), "{est:?}");
        assert!(point_mass_required_replications(10.0, 1.0) >= 1_000_000);
        assert!(point_mass_required_replications(1.0, 1.0) < 1000);
    }

    #[test]
    fn sweep_reports_decreasing_medians_and_tiny_residuals() {
        let s = RandomStream::new(55);
        let table = convergence_sweep(
            &SweepConstruction::Standard,
            &[16.0, 64.0, 256.0],
            1.0,
            60,
            &s,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.rows[0].median_misalignment > table.rows[2].median_misalignment);
        for row in &table.rows {
            assert!(row.max_value_residual <= 1e-9);
            assert!(row.max_minimum_residual <= 1e-9);
        }
        assert!(table.slope < 0.0, "slope {table:?}");
        assert!(table.slope_ci.0 < table.slope && table.slope < table.slope_ci.1);
    }

    #[test]
    fn sweep_exp_alt_construction_runs() {
        let s = RandomStream::new(66);
        let params = sync(1.0, 2.0);
        let table = convergence_sweep(
            &SweepConstruction::ExpAlt(params),
            &[16.0, 64.0, 256.0],
            1.0,
            30,
            &s,
        )
        .unwrap();
        for row in &table.rows {
            assert!(row.max_alternation_residual <= 1e-9);
            assert!(row.median_misalignment.is_finite());
        }
    }

    #[test]
    fn sweep_map_alt_construction_honors_gamma_floor() {
        let s = RandomStream::new(67);
        let map = MapParams::exponential_embedding(1.0, 2.0).unwrap();
        let table = convergence_sweep(
            &SweepConstruction::MapAlt {
                map,
                gamma: Some(8.0), // base rate 16, so every lambda is admissible
            },
            &[16.0, 64.0, 256.0],
            1.0,
            30,
            &s,
        )
        .unwrap();
        for row in &table.rows {
            assert!(row.max_alternation_residual <= 1e-9);
        }
    }

    #[test]
    fn batch_stderr_shrinks_with_replications() {
        let driver = Driver::Exp(sync(1.0, 2.0));
        let s = RandomStream::new(77);
        let small = mc_correlation(&driver, 1.0, 1000, &s);
        let large = mc_correlation(&driver, 1.0, 16_000, &s);
        assert!(large.stderr < small.stderr);
    }
}
