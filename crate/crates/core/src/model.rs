//! Physical parameters and the continuum forms of the polaron-type
//! transformation: spectral density, the mode weight `xi`, the dressed
//! coupling density and the self-consistent tunneling renormalization.
//!
//! Frequencies are measured in units of the cutoff, which is fixed to one
//! by [`ModelParams::new`]; the general constructor accepts any positive
//! cutoff so that the formulas can be checked for dimensional consistency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Iterates below this value are reported as the localized phase (`eta = 0`).
pub const LOCALIZED_THRESHOLD: f64 = 1e-8;
/// Successive fixed-point iterates closer than this count as converged.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Iteration cap for the fixed-point solver.
pub const MAX_ITERATIONS: usize = 10_000;

/// The physical triple `(alpha, delta, omega_c)` at zero temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub alpha: T,
    pub delta: T,
    pub omega_c: T,
    pub temperature: T,
}

impl<T: Real> ModelParams<T> {
    /// Parameters in cutoff units (`omega_c = 1`, `T = 0`).
    pub fn new(alpha: T, delta: T) -> Result<Self> {
        Self::with_cutoff(alpha, delta, T::one(), T::zero())
    }

    pub fn with_cutoff(alpha: T, delta: T, omega_c: T, temperature: T) -> Result<Self> {
        if !(omega_c > T::zero()) || !omega_c.is_finite() {
            return Err(invalid("omega_c", omega_c, "must be positive and finite"));
        }
        if !(alpha >= T::zero()) || !alpha.is_finite() {
            return Err(invalid("alpha", alpha, "must be non-negative and finite"));
        }
        if !(delta > T::zero() && delta < omega_c) {
            return Err(invalid("delta", delta, "must lie in (0, omega_c)"));
        }
        if temperature != T::zero() {
            return Err(invalid(
                "temperature",
                temperature,
                "only T = 0 is supported",
            ));
        }
        Ok(Self {
            alpha,
            delta,
            omega_c,
            temperature,
        })
    }
}

fn invalid<T: Real>(name: &'static str, value: T, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value: value.as_f64(),
        reason,
    }
}

/// Solution of the renormalization condition plus derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedModel<T> {
    pub params: ModelParams<T>,
    /// Tunneling renormalization factor, `0 <= eta <= 1`.
    pub eta: T,
    /// `eta * delta`.
    pub delta_r: T,
    /// Wigner-Weisskopf rate `(pi/2) alpha delta_r`.
    pub gamma_ww: T,
    /// Coherent-incoherent threshold `(1 + delta_r/omega_c) / 2`.
    pub alpha_c: T,
    pub converged: bool,
    pub residual: T,
    /// The fixed point collapsed to `eta = 0` (only possible for `alpha >= 1`).
    pub localized: bool,
}

impl<T: Real> RenormalizedModel<T> {
    fn from_eta(params: ModelParams<T>, eta: T, converged: bool, residual: T) -> Self {
        let delta_r = eta * params.delta;
        Self {
            params,
            eta,
            delta_r,
            gamma_ww: T::FRAC_PI_2() * params.alpha * delta_r,
            alpha_c: (T::one() + delta_r / params.omega_c) * T::lit(0.5),
            converged,
            residual,
            localized: false,
        }
    }

    fn localized(params: ModelParams<T>, last_iterate: T) -> Self {
        Self {
            localized: true,
            ..Self::from_eta(params, T::zero(), true, last_iterate)
        }
    }

    pub fn alpha(&self) -> T {
        self.params.alpha
    }

    pub fn omega_c(&self) -> T {
        self.params.omega_c
    }

    pub fn is_localized(&self) -> bool {
        self.localized
    }
}

/// Ohmic spectral density `2 alpha omega` on `[0, omega_c]`, zero elsewhere.
///
/// The step is closed at the cutoff: `J(omega_c) = 2 alpha omega_c`.
pub fn spectral_density<T: Real>(omega: T, params: &ModelParams<T>) -> T {
    if omega >= T::zero() && omega <= params.omega_c {
        T::lit(2.0) * params.alpha * omega
    } else {
        T::zero()
    }
}

/// Mode weight `omega / (omega + delta_r)` of the transformation generator.
pub fn xi<T: Real>(omega: T, delta_r: T) -> Result<T> {
    if omega < T::zero() || delta_r < T::zero() {
        return Err(Error::Domain("xi requires omega >= 0 and delta_r >= 0"));
    }
    if omega == T::zero() && delta_r == T::zero() {
        return Err(Error::Domain("xi is undefined at omega = delta_r = 0"));
    }
    Ok(omega / (omega + delta_r))
}

/// Density of the dressed coupling, `sum_k V_k^2 delta(omega - omega_k)`:
/// `2 alpha omega delta_r^2 / (omega + delta_r)^2` on `[0, omega_c]`.
pub fn coupling_weight<T: Real>(omega: T, model: &RenormalizedModel<T>) -> T {
    if omega < T::zero() || omega > model.omega_c() {
        return T::zero();
    }
    let dr = model.delta_r;
    if omega == T::zero() && dr == T::zero() {
        return T::zero();
    }
    let x = dr / (omega + dr);
    T::lit(2.0) * model.alpha() * omega * x * x
}

/// Closed form of `ln eta = -alpha * int_0^wc w / (w + delta_r)^2 dw`.
pub fn log_renormalization<T: Real>(alpha: T, delta_r: T, omega_c: T) -> T {
    let s = omega_c + delta_r;
    -alpha * ((s / delta_r).ln() - omega_c / s)
}

/// One application of the fixed-point map `eta -> exp(ln eta(eta * delta))`.
pub fn renormalization_map<T: Real>(eta: T, params: &ModelParams<T>) -> T {
    if eta <= T::zero() {
        return T::zero();
    }
    log_renormalization(params.alpha, eta * params.delta, params.omega_c).exp()
}

/// `ln G(e^u)`: the fixed-point map written for `u = ln eta`.
fn log_map<T: Real>(u: T, params: &ModelParams<T>) -> T {
    let (a, d, wc) = (params.alpha, params.delta, params.omega_c);
    let s = wc + u.exp() * d;
    -a * (s.ln() - u - d.ln() - wc / s)
}

/// Solves the self-consistency condition for `eta`.
///
/// The iteration starts from `eta = 1` and runs on `u = ln eta`, where the
/// map is a contraction with slope `alpha` whenever `alpha < 1`; a positive
/// fixed point then always exists, however small. For `alpha >= 1` the
/// iterates run to zero and the model is reported localized once they drop
/// below [`LOCALIZED_THRESHOLD`]. If the iteration cap is hit, the fixed
/// point is bracketed and bisected instead.
pub fn solve_renormalization<T: Real>(params: &ModelParams<T>) -> Result<RenormalizedModel<T>> {
    if params.alpha == T::zero() {
        return Ok(RenormalizedModel::from_eta(
            *params,
            T::one(),
            true,
            T::zero(),
        ));
    }
    let tol = T::tol(FIXED_POINT_TOL);
    let log_floor = T::lit(LOCALIZED_THRESHOLD).ln();
    let subcritical = params.alpha < T::one();
    let mut prev = T::zero();
    let mut u = T::zero();
    for _ in 0..MAX_ITERATIONS {
        let next = log_map(u, params);
        prev = u;
        u = next;
        if !subcritical && u < log_floor {
            return Ok(RenormalizedModel::localized(*params, u.exp()));
        }
        // relative change of eta, or absolute change once eta is O(1)
        if (u - prev).abs() < tol || (u.exp() - prev.exp()).abs() < tol * u.exp().min(T::one()) {
            let residual = (u - log_map(u, params)).abs();
            return Ok(RenormalizedModel::from_eta(
                *params,
                u.exp(),
                true,
                residual,
            ));
        }
    }
    if subcritical {
        if let Some(m) = bisect_renormalization(params, tol) {
            return Ok(m);
        }
    }
    Err(Error::NoConvergence {
        previous: prev.exp().as_f64(),
        last: u.exp().as_f64(),
    })
}

fn bisect_renormalization<T: Real>(
    params: &ModelParams<T>,
    tol: T,
) -> Option<RenormalizedModel<T>> {
    let h = |u: T| u - log_map(u, params);
    // h(0) >= 0; walk down until h changes sign
    let mut hi = T::zero();
    let mut lo = -T::one();
    while h(lo) >= T::zero() {
        hi = lo;
        lo = lo * T::lit(2.0);
        if !lo.is_finite() || lo < -T::max_value().ln() * T::lit(1e6) {
            return None;
        }
    }
    while hi - lo > tol * hi.abs().max(T::one()) {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = (lo + hi) * T::lit(0.5);
    Some(RenormalizedModel::from_eta(
        *params,
        u.exp(),
        true,
        h(u).abs(),
    ))
}
