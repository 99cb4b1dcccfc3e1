//! Deterministic, splittable random streams; exponential and Gaussian draws;
//! nested Poisson arrival families.
//!
//! Streams are ChaCha8 generators addressed by `(seed, stream_id)`. Named
//! substreams derive their id by hashing the parent id together with a label,
//! so the draw sequence a construction sees depends only on the seed and the
//! labels it asks for — never on the order in which sibling constructions
//! run. That is what makes replications parallelizable and byte-reproducible.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(basis: u64, label: &[u8], index: Option<u64>) -> u64 {
    let mut h = FNV_OFFSET;
    for b in basis.to_le_bytes() {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    for &b in label {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    if let Some(idx) = index {
        for b in idx.to_le_bytes() {
            h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Identical `(seed, stream_id)` reproduce identical draw sequences
/// bit-for-bit; distinct stream ids select distinct ChaCha streams. One
/// uniform consumes exactly one 64-bit word.
#[derive(Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            position: 0,
            rng,
        }
    }

    /// Derives an independent named substream. The child id depends only on
    /// this stream's id and the label, not on any draws already consumed.
    pub fn substream(&self, label: &str) -> Self {
        Self::with_stream(self.seed, fnv1a(self.stream_id, label.as_bytes(), None))
    }

    /// Derives an independent substream addressed by `(label, index)`; used
    /// for per-replication and per-level streams.
    pub fn substream_indexed(&self, label: &str, index: u64) -> Self {
        Self::with_stream(
            self.seed,
            fnv1a(self.stream_id, label.as_bytes(), Some(index)),
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of uniforms drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Uniform on the open interval (0, 1); consumes one 64-bit word.
    pub fn next_uniform(&mut self) -> f64 {
        self.position += 1;
        (((self.rng.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9007199254740992.0)
    }
}

/// Exponential draw by inversion: `-ln(u)/rate` with mean `1/rate`.
/// Consumes exactly one uniform.
pub fn exp_draw(rate: f64, s: &mut RandomStream) -> f64 {
    assert!(rate > 0.0 && rate.is_finite(), "exp_draw requires rate > 0");
    exp_from_uniform(rate, s.next_uniform())
}

fn exp_from_uniform(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// Normal draw via the Box-Muller pair (cosine branch); the sine companion is
/// discarded so every call consumes exactly two uniforms. `variance == 0`
/// returns `mean` without consuming draws.
pub fn gauss_draw(mean: f64, variance: f64, s: &mut RandomStream) -> f64 {
    assert!(
        variance >= 0.0 && variance.is_finite(),
        "gauss_draw requires variance >= 0"
    );
    if variance == 0.0 {
        return mean;
    }
    let u1 = s.next_uniform();
    let u2 = s.next_uniform();
    let radius = (-2.0 * u1.ln()).sqrt();
    mean + variance.sqrt() * radius * (std::f64::consts::TAU * u2).cos()
}

/// A family of Poisson arrival sequences with increasing rates, where every
/// arrival of a level appears verbatim (same floating-point value) at all
/// finer levels.
///
/// Level `n` has intensity `rates[n] / 2`. Arrivals are stored without the
/// time-zero origin: arrival number `k >= 1` of level `n` lives at
/// `arrivals(n)[k - 1]`, and `epoch(n, 0) == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedPoissonFamily {
    rates: Vec<f64>,
    horizon: f64,
    arrivals: Vec<Vec<f64>>,
    embeddings: Vec<Vec<usize>>,
}

impl NestedPoissonFamily {
    /// Builds a family from raw parts, checking the nesting invariants:
    /// strictly increasing arrivals per level, and every level-`n` arrival
    /// present at level `n+1` at its recorded (0-based) position with exact
    /// float equality.
    pub fn from_parts(
        rates: Vec<f64>,
        horizon: f64,
        arrivals: Vec<Vec<f64>>,
        embeddings: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if rates.is_empty() || arrivals.len() != rates.len() {
            return Err(Error::InvalidInput(
                "family needs one arrival list per rate".into(),
            ));
        }
        if !rates.windows(2).all(|w| w[0] < w[1]) || rates[0] <= 0.0 {
            return Err(Error::InvalidInput(
                "rates must be strictly increasing and positive".into(),
            ));
        }
        if embeddings.len() + 1 != rates.len() {
            return Err(Error::InvalidInput(
                "family needs one embedding per adjacent level pair".into(),
            ));
        }
        for level in &arrivals {
            if !level.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidInput(
                    "arrivals must be strictly increasing".into(),
                ));
            }
            if level.iter().any(|&t| t <= 0.0 || t > horizon) {
                return Err(Error::InvalidInput(
                    "arrivals must lie in (0, horizon]".into(),
                ));
            }
        }
        for n in 0..embeddings.len() {
            let map = &embeddings[n];
            if map.len() != arrivals[n].len() {
                return Err(Error::InvalidInput("embedding length mismatch".into()));
            }
            if !map.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidInput(
                    "embedding indices must be strictly increasing".into(),
                ));
            }
            for (i, &pos) in map.iter().enumerate() {
                if pos >= arrivals[n + 1].len() || arrivals[n + 1][pos] != arrivals[n][i] {
                    return Err(Error::InvalidInput(
                        "embedded arrival does not match exactly".into(),
                    ));
                }
            }
        }
        Ok(Self {
            rates,
            horizon,
            arrivals,
            embeddings,
        })
    }

    pub fn levels(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn arrivals(&self, level: usize) -> &[f64] {
        &self.arrivals[level]
    }

    /// Arrival epoch number `k` at `level` (1-based); `k == 0` is time zero.
    pub fn epoch(&self, level: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        self.arrivals[level]
            .get(k - 1)
            .copied()
            .ok_or(Error::IndexBeyondHorizon {
                level,
                index: k,
                available: self.arrivals[level].len(),
            })
    }

    /// 0-based positions of level-`n` arrivals within level `n+1`.
    pub fn embedding(&self, n: usize) -> &[usize] {
        &self.embeddings[n]
    }

    /// 0-based positions of level-`from` arrivals within level `to`
    /// (composition of the stored embeddings).
    pub fn composed_embedding(&self, from: usize, to: usize) -> Vec<usize> {
        assert!(from <= to && to < self.levels());
        let mut positions: Vec<usize> = (0..self.arrivals[from].len()).collect();
        for n in from..to {
            let map = &self.embeddings[n];
            for pos in positions.iter_mut() {
                *pos = map[*pos];
            }
        }
        positions
    }

    /// For `k = 0..=upto`: how many level-0 arrivals are among the first `k`
    /// arrivals of `level`. Because coarser arrivals embed exactly, this is a
    /// two-pointer walk over indices, with no float comparisons.
    pub fn coarse_counts(&self, level: usize, upto: usize) -> Vec<usize> {
        assert!(upto <= self.arrivals[level].len());
        let positions = self.composed_embedding(0, level);
        let mut counts = Vec::with_capacity(upto + 1);
        let mut pointer = 0usize;
        for k in 0..=upto {
            while pointer < positions.len() && positions[pointer] < k {
                pointer += 1;
            }
            counts.push(pointer);
        }
        counts
    }
}

fn poisson_arrivals(intensity: f64, horizon: f64, stream: &mut RandomStream) -> Vec<f64> {
    let mut arrivals = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp_draw(intensity, stream);
        if t > horizon {
            return arrivals;
        }
        arrivals.push(t);
    }
}

fn superpose(base: &[f64], extra: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut merged = Vec::with_capacity(base.len() + extra.len());
    let mut embedding = Vec::with_capacity(base.len());
    let (mut i, mut j) = (0, 0);
    while i < base.len() || j < extra.len() {
        let take_base = j >= extra.len() || (i < base.len() && base[i] <= extra[j]);
        if take_base {
            embedding.push(merged.len());
            merged.push(base[i]);
            i += 1;
        } else {
            merged.push(extra[j]);
            j += 1;
        }
    }
    (merged, embedding)
}

/// Samples a nested Poisson family on `(0, horizon]`.
///
/// Level 0 is Poisson(`rates[0]/2`); level `n+1` superposes level `n` with an
/// independent Poisson(`(rates[n+1]-rates[n])/2`), copying the coarser
/// arrivals bit-for-bit and recording where each one lands. Level `n` draws
/// from the substream `("poisson-level", n)`, so extending the horizon
/// extends the same trajectory.
pub fn build_nested_family(rates: &[f64], horizon: f64, s: &RandomStream) -> NestedPoissonFamily {
    assert!(!rates.is_empty(), "need at least one rate");
    assert!(
        rates[0] > 0.0 && rates.windows(2).all(|w| w[0] < w[1]),
        "rates must be positive and strictly increasing"
    );
    assert!(
        horizon > 0.0 && horizon.is_finite(),
        "horizon must be positive"
    );

    let mut arrivals = Vec::with_capacity(rates.len());
    let mut embeddings = Vec::new();
    let mut level0 = s.substream_indexed("poisson-level", 0);
    arrivals.push(poisson_arrivals(rates[0] / 2.0, horizon, &mut level0));
    for n in 1..rates.len() {
        let mut stream = s.substream_indexed("poisson-level", n as u64);
        let extra = poisson_arrivals((rates[n] - rates[n - 1]) / 2.0, horizon, &mut stream);
        let (merged, embedding) = superpose(&arrivals[n - 1], &extra);
        arrivals.push(merged);
        embeddings.push(embedding);
    }
    NestedPoissonFamily {
        rates: rates.to_vec(),
        horizon,
        arrivals,
        embeddings,
    }
}

/// Builds a family whose finest level carries at least `min_top_count`
/// arrivals, by doubling the horizon until it does. Rebuilding with a larger
/// horizon replays the same substreams, so the retained arrivals are
/// identical across attempts.
pub fn build_nested_family_min_count(
    rates: &[f64],
    min_top_count: usize,
    s: &RandomStream,
) -> NestedPoissonFamily {
    assert!(min_top_count >= 1);
    let top_intensity = rates.last().expect("need at least one rate") / 2.0;
    let mut horizon = (2.0 * min_top_count as f64 / top_intensity).max(1e-6);
    loop {
        let family = build_nested_family(rates, horizon, s);
        if family.arrivals(rates.len() - 1).len() >= min_top_count {
            return family;
        }
        horizon *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_reproduce_bit_for_bit() {
        let mut a = RandomStream::with_stream(42, 7);
        let mut b = RandomStream::with_stream(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
        assert_eq!(a.position(), 100);
    }

    #[test]
    fn substreams_are_label_addressed_not_order_addressed() {
        let root = RandomStream::new(1);
        let mut first = root.substream("alpha");
        let _ = root.substream("beta");
        let mut again = root.substream("alpha");
        assert_eq!(
            first.next_uniform().to_bits(),
            again.next_uniform().to_bits()
        );
        assert_ne!(
            root.substream("alpha").stream_id(),
            root.substream("beta").stream_id()
        );
        assert_ne!(
            root.substream_indexed("rep", 0).stream_id(),
            root.substream_indexed("rep", 1).stream_id()
        );
    }

    #[test]
    fn exp_inversion_formula() {
        assert!((exp_from_uniform(2.0, 0.5) - 2.0f64.ln() / 2.0).abs() < 1e-15);
        assert!((exp_from_uniform(1.0, (-1.0f64).exp()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exp_draw_sample_mean() {
        let mut s = RandomStream::new(3);
        let n = 1_000_000;
        let mean = (0..n).map(|_| exp_draw(4.0, &mut s)).sum::<f64>() / n as f64;
        // Law of large numbers at rate 4: mean 0.25, SE 0.25/1000.
        assert!((mean - 0.25).abs() < 3.0 * 0.25 / 1000.0, "mean {mean}");
    }

    #[test]
    fn gauss_degenerate_returns_mean() {
        let mut s = RandomStream::new(5);
        let before = s.position();
        assert_eq!(gauss_draw(1.5, 0.0, &mut s), 1.5);
        assert_eq!(s.position(), before);
    }

    #[test]
    fn gauss_draw_moments() {
        let mut s = RandomStream::new(8);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| gauss_draw(0.0, 2.0, &mut s)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (2.0f64 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 2.0).abs() / 2.0 < 0.03, "var {var}");
        assert_eq!(s.position(), 2 * n as u64);
    }

    #[test]
    fn single_level_interarrival_mean() {
        let s = RandomStream::new(11);
        let family = build_nested_family(&[6.0], 40_000.0, &s);
        let arrivals = family.arrivals(0);
        assert!(arrivals.len() > 100_000);
        let mean = arrivals.last().unwrap() / arrivals.len() as f64;
        // Intensity 3 => mean spacing 1/3; SE = (1/3)/sqrt(n).
        let se = (1.0 / 3.0) / (arrivals.len() as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn embeddings_hold_exactly() {
        let s = RandomStream::new(17);
        let family = build_nested_family(&[2.0, 5.0, 9.0], 200.0, &s);
        for n in 0..family.levels() - 1 {
            let map = family.embedding(n);
            assert_eq!(map.len(), family.arrivals(n).len());
            for (i, &pos) in map.iter().enumerate() {
                // Exact equality, not approximate: values are copied.
                assert_eq!(
                    family.arrivals(n)[i].to_bits(),
                    family.arrivals(n + 1)[pos].to_bits()
                );
            }
        }
        // Composed embedding agrees with an independent binary search.
        let composed = family.composed_embedding(0, 2);
        for (i, &pos) in composed.iter().enumerate() {
            let found = family
                .arrivals(2)
                .binary_search_by(|x| x.partial_cmp(&family.arrivals(0)[i]).unwrap())
                .unwrap();
            assert_eq!(pos, found);
        }
    }

    #[test]
    fn family_is_reproducible_and_extension_preserves_prefix() {
        let s = RandomStream::new(23);
        let a = build_nested_family(&[2.0, 6.0], 50.0, &s);
        let b = build_nested_family(&[2.0, 6.0], 50.0, &s);
        assert_eq!(a, b);
        let longer = build_nested_family(&[2.0, 6.0], 100.0, &s);
        for level in 0..2 {
            let short = a.arrivals(level);
            assert_eq!(&longer.arrivals(level)[..short.len()], short);
        }
    }

    #[test]
    fn min_count_mode_reaches_requested_arrivals() {
        let s = RandomStream::new(29);
        let family = build_nested_family_min_count(&[6.0, 64.0], 64, &s);
        assert!(family.arrivals(1).len() >= 64);
    }

    #[test]
    fn superposition_excess_matches_rate_difference() {
        // Mean number of extra arrivals over [0, T] is (l1 - l0) T / 2.
        let root = RandomStream::new(31);
        let (l0, l1, t) = (2.0, 6.0, 10.0);
        let reps = 1000;
        let mut total = 0usize;
        for r in 0..reps {
            let s = root.substream_indexed("rep", r);
            let family = build_nested_family(&[l0, l1], t, &s);
            assert!(family.arrivals(1).len() >= family.arrivals(0).len());
            total += family.arrivals(1).len() - family.arrivals(0).len();
        }
        let mean = total as f64 / reps as f64;
        let target = (l1 - l0) * t / 2.0;
        let se = (target / reps as f64).sqrt(); // Poisson variance = mean
        assert!(
            (mean - target).abs() < 3.0 * se,
            "mean {mean} target {target}"
        );
    }

    #[test]
    fn interarrival_ks_test_against_exponential() {
        // Kolmogorov-Smirnov at significance 0.001: critical value
        // c = sqrt(-ln(0.0005)/2) = 1.9495 over sqrt(n).
        let s = RandomStream::new(37);
        let family = build_nested_family(&[2.0, 5.0], 12_000.0, &s);
        for level in 0..2 {
            let arrivals = family.arrivals(level);
            let rate = family.rates()[level] / 2.0;
            let mut gaps: Vec<f64> = std::iter::once(arrivals[0])
                .chain(arrivals.windows(2).map(|w| w[1] - w[0]))
                .take(10_000)
                .collect();
            assert_eq!(gaps.len(), 10_000, "need 1e4 draws at level {level}");
            gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = gaps.len() as f64;
            let mut d = 0.0f64;
            for (i, &g) in gaps.iter().enumerate() {
                let cdf = 1.0 - (-rate * g).exp();
                let hi = (i as f64 + 1.0) / n - cdf;
                let lo = cdf - i as f64 / n;
                d = d.max(hi).max(lo);
            }
            assert!(d < 1.9495 / n.sqrt(), "level {level}: KS statistic {d}");
        }
    }

    #[test]
    fn from_parts_validates_nesting() {
        let ok = NestedPoissonFamily::from_parts(
            vec![2.0, 4.0],
            10.0,
            vec![vec![1.0, 3.0], vec![0.5, 1.0, 2.0, 3.0]],
            vec![vec![1, 3]],
        );
        assert!(ok.is_ok());
        let bad = NestedPoissonFamily::from_parts(
            vec![2.0, 4.0],
            10.0,
            vec![vec![1.0, 3.0], vec![0.5, 1.0 + 1e-15, 2.0, 3.0]],
            vec![vec![1, 3]],
        );
        assert!(bad.is_err(), "approximate nesting must be rejected");
    }
}
