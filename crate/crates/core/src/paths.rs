//! Immutable path representations: piecewise-constant phase paths,
//! piecewise-linear fluid paths and Brownian skeletons.
//!
//! Breakpoints are compared exactly — no epsilon snapping — because the
//! constructions copy epoch values verbatim and the nesting identities rely
//! on exact float equality.

use crate::{Error, Result};

/// Direction of a flip-flop phase: `Up` is +1, `Down` is -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Up,
    Down,
}

impl Dir {
    pub fn sign(self) -> f64 {
        match self {
            Dir::Up => 1.0,
            Dir::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Dir {
        match self {
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }

    /// Applies a `±1` sign: positive keeps the direction, negative mirrors it.
    pub fn signed(self, sign: i8) -> Dir {
        if sign >= 0 {
            self
        } else {
            self.flipped()
        }
    }
}

/// Right-continuous step function: `states[i]` holds on
/// `[breakpoints[i], breakpoints[i+1])`, and the last state up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePath<S> {
    breakpoints: Vec<f64>,
    states: Vec<S>,
    horizon: f64,
}

impl<S: Copy + PartialEq> PhasePath<S> {
    pub fn new(breakpoints: Vec<f64>, states: Vec<S>, horizon: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints[0] != 0.0 {
            return Err(Error::InvalidInput(
                "phase path must start with breakpoint 0".into(),
            ));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "phase breakpoints must be strictly increasing".into(),
            ));
        }
        if states.len() != breakpoints.len() {
            return Err(Error::InvalidInput(
                "phase path needs one state per breakpoint".into(),
            ));
        }
        let last_breakpoint = *breakpoints.last().unwrap();
        if horizon < last_breakpoint || horizon.is_nan() {
            return Err(Error::InvalidInput(
                "horizon must reach the last breakpoint".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            states,
            horizon,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<S> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let idx = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Ok(self.states[idx])
    }

    /// Iterates `(start, end, state)` over the constant pieces; the final
    /// piece ends at the horizon and may be empty.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, S)> + '_ {
        let n = self.breakpoints.len();
        (0..n).map(move |i| {
            let end = if i + 1 < n {
                self.breakpoints[i + 1]
            } else {
                self.horizon
            };
            (self.breakpoints[i], end, self.states[i])
        })
    }
}

/// Continuous piecewise-linear path starting at level 0.
///
/// `breakpoints[0] == 0`, the last breakpoint is the horizon, and
/// `slopes[i]` applies on `[breakpoints[i], breakpoints[i+1])`. Levels are
/// stored at every breakpoint so evaluation is a binary search plus one
/// multiply-add.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidPath {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    slopes: Vec<f64>,
}

impl FluidPath {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints[0] != 0.0 {
            return Err(Error::InvalidInput(
                "fluid path must start with breakpoint 0".into(),
            ));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "fluid breakpoints must be strictly increasing".into(),
            ));
        }
        if levels.len() != breakpoints.len() || slopes.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidInput(
                "fluid path needs a level per breakpoint and a slope per piece".into(),
            ));
        }
        if levels[0] != 0.0 {
            return Err(Error::InvalidInput(
                "fluid path must start at level 0".into(),
            ));
        }
        for i in 0..slopes.len() {
            let dt = breakpoints[i + 1] - breakpoints[i];
            let predicted = levels[i] + slopes[i] * dt;
            // Recovering an increment from cumulative breakpoints loses
            // eps * |t| * |slope|, so the travelled distance sets the scale.
            let scale = 1.0f64
                .max(levels[i].abs())
                .max(levels[i + 1].abs())
                .max(slopes[i].abs() * breakpoints[i + 1]);
            if (levels[i + 1] - predicted).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput(format!(
                    "fluid path discontinuous at breakpoint {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            breakpoints,
            levels,
            slopes,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Linear interpolation; exact stored level at breakpoints.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon(),
            });
        }
        match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(i) => Ok(self.levels[i]),
            Err(i) => Ok(self.levels[i - 1] + self.slopes[i - 1] * (t - self.breakpoints[i - 1])),
        }
    }

    /// Exact minimum of the piecewise-linear path on `[a, b]`; it is attained
    /// at an endpoint or an interior breakpoint.
    pub fn min_on_interval(&self, a: f64, b: f64) -> Result<f64> {
        if a >= b || a.is_nan() || b.is_nan() {
            return Err(Error::InvalidInput("need a < b".into()));
        }
        let mut min = self.eval(a)?.min(self.eval(b)?);
        let start = self.breakpoints.partition_point(|&x| x <= a);
        for i in start..self.breakpoints.len() {
            if self.breakpoints[i] >= b {
                break;
            }
            min = min.min(self.levels[i]);
        }
        Ok(min)
    }
}

/// Integrates a `±1` phase path into a fluid path with slopes
/// `±scale`: the level grows by `scale * sign * dt` on each piece.
pub fn integrate_phase(phase: &PhasePath<Dir>, scale: f64) -> FluidPath {
    assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");
    let mut breakpoints = phase.breakpoints().to_vec();
    if phase.horizon() > *breakpoints.last().unwrap() {
        breakpoints.push(phase.horizon());
    }
    let mut levels = Vec::with_capacity(breakpoints.len());
    let mut slopes = Vec::with_capacity(breakpoints.len() - 1);
    levels.push(0.0);
    for i in 0..breakpoints.len() - 1 {
        let slope = scale * phase.states()[i].sign();
        let dt = breakpoints[i + 1] - breakpoints[i];
        slopes.push(slope);
        levels.push(levels[i] + slope * dt);
    }
    FluidPath::new(breakpoints, levels, slopes).expect("integration is continuous by construction")
}

/// Finite record of a latent Brownian path: values at inspection epochs and
/// the minimum over each inter-epoch interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianSkeleton {
    epochs: Vec<f64>,
    values: Vec<f64>,
    minima: Vec<f64>,
}

impl BrownianSkeleton {
    pub fn new(epochs: Vec<f64>, values: Vec<f64>, minima: Vec<f64>) -> Result<Self> {
        if epochs.is_empty() || epochs[0] != 0.0 {
            return Err(Error::InvalidInput("skeleton must start at epoch 0".into()));
        }
        if !epochs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "skeleton epochs must be strictly increasing".into(),
            ));
        }
        if values.len() != epochs.len() || minima.len() + 1 != epochs.len() {
            return Err(Error::InvalidInput(
                "skeleton needs a value per epoch and a minimum per interval".into(),
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidInput("skeleton must start at value 0".into()));
        }
        for k in 0..minima.len() {
            if minima[k] > values[k] || minima[k] > values[k + 1] {
                return Err(Error::InvalidInput(format!(
                    "interval minimum {k} above an endpoint value"
                )));
            }
        }
        Ok(Self {
            epochs,
            values,
            minima,
        })
    }

    /// Inspection epochs including time zero.
    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    /// Values at the epochs; `values()[0] == 0`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interval minima; `minima()[k]` covers `(epochs[k], epochs[k+1])`.
    pub fn minima(&self) -> &[f64] {
        &self.minima
    }

    /// Number of inter-epoch intervals.
    pub fn count(&self) -> usize {
        self.minima.len()
    }
}
