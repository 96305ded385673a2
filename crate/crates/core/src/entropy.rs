//! Von Neumann entanglement entropy of the qubit reduced state, in bits.

use serde::{Deserialize, Serialize};

use crate::dynamics::{BlochTrajectory, Method};
use crate::error::{Error, Result};
use crate::model::{solve_renormalization, RenormalizedModel};
use crate::scalar::Real;

/// Bloch norms in `(1, 1 + NORM_SLACK]` are clamped to one.
pub const NORM_SLACK: f64 = 1e-3;
/// Features smaller than this are treated as numerical noise.
pub const NOISE_FLOOR: f64 = 1e-3;

/// `-p log2 p - (1-p) log2 (1-p)` with `0 log 0 = 0`.
pub fn binary_entropy<T: Real>(p: T) -> T {
    let term = |x: T| {
        if x > T::zero() {
            -x * x.log2()
        } else {
            T::zero()
        }
    };
    term(p) + term(T::one() - p)
}

/// Entropy of the state with Bloch vector `(sx, sy, sz)`.
pub fn entropy_from_bloch<T: Real>(sx: T, sy: T, sz: T) -> Result<T> {
    let r = (sx * sx + sy * sy + sz * sz).sqrt();
    if !r.is_finite() || r > T::one() + T::lit(NORM_SLACK) {
        return Err(Error::InvalidState { norm: r.as_f64() });
    }
    let r = r.min(T::one());
    Ok(binary_entropy((T::one() + r) * T::lit(0.5)))
}

/// Long-time entropy: binary entropy of `(1 + eta)/2`.
///
/// In the localized phase (`eta = 0`) the spin stays in its initial state,
/// so the entropy is zero rather than the one bit the formula would give.
pub fn equilibrium_entropy<T: Real>(model: &RenormalizedModel<T>) -> T {
    if model.is_localized() {
        return T::zero();
    }
    binary_entropy((T::one() + model.eta) * T::lit(0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries<T> {
    pub times: Vec<T>,
    pub s_values: Vec<T>,
    pub s_eq: T,
    /// `max_t S(t) - s_eq`.
    pub overshoot: T,
    pub method: Method,
}

/// The JSON summary written next to each entropy series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySummary<T> {
    pub s_eq: T,
    pub overshoot: T,
    pub n_local_maxima: usize,
    pub t_of_max: T,
}

impl<T: Real> EntropySeries<T> {
    pub fn max(&self) -> Option<(T, T)> {
        self.s_values.iter().zip(&self.times).fold(
            None,
            |best: Option<(T, T)>, (&s, &t)| match best {
                Some((bs, _)) if bs >= s => best,
                _ => Some((s, t)),
            },
        )
    }

    /// Interior local maxima whose prominence exceeds `floor`.
    pub fn local_maxima(&self, floor: T) -> Vec<usize> {
        prominent_maxima(&self.s_values, floor)
    }

    /// Largest drop below the running maximum; zero for a nondecreasing series.
    pub fn max_drawdown(&self) -> T {
        max_drawdown(&self.s_values)
    }

    pub fn summary(&self) -> EntropySummary<T> {
        let (_, t_of_max) = self.max().unwrap_or((T::zero(), T::zero()));
        EntropySummary {
            s_eq: self.s_eq,
            overshoot: self.overshoot,
            n_local_maxima: self.local_maxima(T::lit(NOISE_FLOOR)).len(),
            t_of_max,
        }
    }
}

/// Pointwise entropy of a trajectory plus its equilibrium reference.
pub fn entropy_trajectory<T: Real>(traj: &BlochTrajectory<T>) -> Result<EntropySeries<T>> {
    let model = solve_renormalization(&traj.params)?;
    entropy_series(traj, &model)
}

/// As [`entropy_trajectory`] with an already solved model.
pub fn entropy_series<T: Real>(
    traj: &BlochTrajectory<T>,
    model: &RenormalizedModel<T>,
) -> Result<EntropySeries<T>> {
    let s_values = (0..traj.len())
        .map(|i| {
            entropy_from_bloch(traj.sx[i], traj.sy[i], traj.sz[i])
                .map_err(|e| e.at_time(traj.times[i].as_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let s_eq = equilibrium_entropy(model);
    let peak = s_values.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(EntropySeries {
        times: traj.times.clone(),
        s_values,
        s_eq,
        overshoot: if traj.is_empty() {
            T::zero()
        } else {
            peak - s_eq
        },
        method: traj.method,
    })
}

/// Indices of interior local maxima with topographic prominence above `floor`.
///
/// A plateau counts once, at its first index.
pub fn prominent_maxima<T: Real>(values: &[T], floor: T) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let mut i = 1;
    while i < n - 1 {
        if values[i] > values[i - 1] {
            // skip across a plateau
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] && prominence(values, i, j) > floor {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence<T: Real>(values: &[T], first: usize, last: usize) -> T {
    let peak = values[first];
    let mut left_min = peak;
    for k in (0..first).rev() {
        if values[k] > peak {
            break;
        }
        left_min = left_min.min(values[k]);
    }
    let mut right_min = peak;
    for &v in &values[last + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

pub fn max_drawdown<T: Real>(values: &[T]) -> T {
    let mut best = T::neg_infinity();
    let mut worst = T::zero();
    for &v in values {
        best = best.max(v);
        worst = worst.max(best - v);
    }
    worst
}
