//! Time evolution of the Bloch vector from the real-frequency spectral
//! integrals, plus the pole (residue) approximation and the on-shell
//! Born-Markov baseline.
//!
//! With `A(w) = gamma(w) / (pi [(w - Dr - R(w))^2 + gamma(w)^2])` on `[0, wc]`:
//!
//! ```text
//! <sz(t)> = int A(w) cos(w t) dw
//! <sy(t)> = -(1/D) d<sz>/dt = (1/D) int w A(w) sin(w t) dw
//! <sx(t)> = eta { 1 - int A_x(w) cos(w t) dw },  A_x = Gamma / (pi [(w - Sigma)^2 + Gamma^2])
//! ```
//!
//! `A_x` is even, so the last integral runs over `[0, m]` and is doubled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, RenormalizedModel};
use crate::quadrature::{build_breakpoints, integrate_panels, Estimate, Tolerance};
use crate::scalar::Real;
use crate::self_energy::{RegimeReport, SelfEnergy};

/// Couplings below this use the closed-form weak-coupling branch.
pub const ANALYTIC_ALPHA: f64 = 1e-6;

/// Width multipliers for breakpoints around a quasi-Lorentzian peak.
const PEAK_LADDER: [f64; 10] = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1e3, 3e3, 1e4, 3e4];
// geometric approach to the logarithmic singularity at the cutoff
const EDGE_DECADES: i32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Number of `width * {1, 3, 10, 30, ...}` breakpoint pairs placed around
    /// each peak.
    pub peak_refinement: usize,
    /// Largest panel as a fraction of the cosine half-period `pi / t`.
    pub oscillation_panel_factor: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::tol(1e-9),
            rel_tol: T::tol(1e-9),
            peak_refinement: 4,
            oscillation_panel_factor: T::lit(0.5),
            max_intervals: 50_000,
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > T::zero()) || !(self.rel_tol > T::zero()) {
            return Err(Error::Domain("quadrature tolerances must be positive"));
        }
        let f = self.oscillation_panel_factor;
        if !(f > T::zero() && f <= T::one()) {
            return Err(Error::Domain("oscillation panel factor must lie in (0, 1]"));
        }
        if self.peak_refinement > PEAK_LADDER.len() {
            return Err(Error::Domain(
                "peak refinement exceeds the breakpoint ladder",
            ));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance<T> {
        Tolerance {
            abs: self.abs_tol,
            rel: self.rel_tol,
            max_intervals: self.max_intervals,
        }
    }
}

/// How a trajectory was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Full,
    Residue,
    Markov,
    Volterra,
    Ed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::Residue => "residue",
            Method::Markov => "markov",
            Method::Volterra => "volterra",
            Method::Ed => "ed",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Method::Full),
            "residue" => Ok(Method::Residue),
            "markov" => Ok(Method::Markov),
            "volterra" => Ok(Method::Volterra),
            "ed" => Ok(Method::Ed),
            _ => Err(Error::Domain("unknown method")),
        }
    }
}

/// Sampled Bloch vector on a time grid (times in units of `1/omega_c`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory<T> {
    pub times: Vec<T>,
    pub sx: Vec<T>,
    pub sy: Vec<T>,
    pub sz: Vec<T>,
    pub method: Method,
    pub params: ModelParams<T>,
}

impl<T: Real> BlochTrajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Bloch vector length at sample `i`.
    pub fn norm(&self, i: usize) -> T {
        (self.sx[i] * self.sx[i] + self.sy[i] * self.sy[i] + self.sz[i] * self.sz[i]).sqrt()
    }

    pub fn max_norm(&self) -> T {
        (0..self.len())
            .map(|i| self.norm(i))
            .fold(T::zero(), T::max)
    }
}

/// Checks that `times` is non-negative and strictly increasing.
pub fn validate_times<T: Real>(times: &[T]) -> Result<()> {
    for (i, &t) in times.iter().enumerate() {
        let bad = !t.is_finite() || t < T::zero() || (i > 0 && t <= times[i - 1]);
        if bad {
            return Err(Error::TimeGrid { index: i });
        }
    }
    Ok(())
}

/// Uniform grid `0, dt, 2 dt, ...` up to and including `t_max` (within
/// rounding).
pub fn uniform_times<T: Real>(t_max: T, dt: T) -> Vec<T> {
    let n = (t_max / dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    (0..=n).map(|k| dt * T::from_index(k)).collect()
}

/// Evaluates the full-method Bloch components for one model.
///
/// Construction locates the pole once and prepares the static breakpoint
/// sets; each time sample then only adds oscillation panels.
#[derive(Debug, Clone)]
pub struct BlochDynamics<T> {
    eval: SelfEnergy<T>,
    regime: RegimeReport<T>,
    cfg: QuadratureConfig<T>,
    z_breaks: Vec<T>,
    x_breaks: Vec<T>,
    x_upper: T,
}

impl<T: Real> BlochDynamics<T> {
    pub fn new(eval: SelfEnergy<T>, cfg: QuadratureConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let regime = eval.find_pole()?;
        let wc = eval.omega_c();
        let dr = eval.delta_r();
        let ladder = &PEAK_LADDER[..cfg.peak_refinement];

        let mut zc = vec![dr, dr * T::lit(0.1), dr * T::lit(0.01)];
        match (regime.omega0, regime.gamma_at_pole) {
            (Some(w0), Some(g0)) if g0 > T::zero() => {
                zc.push(w0);
                for &m in ladder {
                    zc.push(w0 - T::lit(m) * g0);
                    zc.push(w0 + T::lit(m) * g0);
                }
            }
            _ => {
                for &m in ladder {
                    zc.push(dr * T::lit(m));
                    zc.push(dr / T::lit(m));
                }
            }
        }
        for k in 1..=EDGE_DECADES {
            zc.push(wc - wc * T::lit(10f64.powi(-k)));
        }
        let z_breaks = build_breakpoints(T::zero(), wc, &zc, None);

        let (_, x_upper) = eval.sigma_x_support();
        let (_, g0) = eval.sigma_x_channel(T::zero())?;
        let mut xc = vec![dr, dr * T::lit(2.0), dr * T::lit(0.5)];
        for &m in ladder {
            xc.push(T::lit(m) * g0);
        }
        for k in 1..=EDGE_DECADES {
            xc.push(x_upper - x_upper * T::lit(10f64.powi(-k)));
        }
        let x_breaks = build_breakpoints(T::zero(), x_upper, &xc, None);

        Ok(Self {
            eval,
            regime,
            cfg,
            z_breaks,
            x_breaks,
            x_upper,
        })
    }

    pub fn evaluator(&self) -> &SelfEnergy<T> {
        &self.eval
    }

    pub fn model(&self) -> &RenormalizedModel<T> {
        &self.eval.model
    }

    pub fn regime(&self) -> &RegimeReport<T> {
        &self.regime
    }

    pub fn config(&self) -> &QuadratureConfig<T> {
        &self.cfg
    }

    fn weak_coupling(&self) -> bool {
        self.eval.alpha() < T::lit(ANALYTIC_ALPHA)
    }

    fn panels(&self, base: &[T], upper: T, t: T) -> Vec<T> {
        if t > T::zero() {
            let width = self.cfg.oscillation_panel_factor * T::PI() / t;
            build_breakpoints(T::zero(), upper, base, Some(width))
        } else {
            base.to_vec()
        }
    }

    /// Spectral function of the sigma_z channel.
    pub fn spectral_z(&self, w: T) -> T {
        let g = self.eval.damping(w);
        // R diverges logarithmically at the cutoff, so A -> 0 there
        if g == T::zero() || w >= self.eval.omega_c() {
            return T::zero();
        }
        match self.eval.level_shift(w) {
            Ok(r) => {
                let d = w - self.eval.delta_r() - r;
                g / (T::PI() * (d * d + g * g))
            }
            Err(_) => T::nan(),
        }
    }

    /// Spectral function of the sigma_x channel (even in `w`).
    pub fn spectral_x(&self, w: T) -> T {
        if self.eval.delta_r() + w.abs() >= self.eval.omega_c() {
            return T::zero();
        }
        match self.eval.sigma_x_channel(w) {
            Ok((s, g)) if g > T::zero() => {
                let d = w - s;
                g / (T::PI() * (d * d + g * g))
            }
            Ok(_) => T::zero(),
            Err(_) => T::nan(),
        }
    }

    fn checked(est: Estimate<T>) -> Result<Estimate<T>> {
        if est.value.is_finite() && est.error.is_finite() {
            Ok(est)
        } else {
            Err(Error::Quadrature {
                estimate: est.value.as_f64(),
                error: est.error.as_f64(),
            })
        }
    }

    /// `<sigma_z(t)>` with its quadrature error bound.
    pub fn sigma_z_estimate(&self, t: T) -> Result<Estimate<T>> {
        if self.weak_coupling() {
            return Ok(exact(self.pole_sigma_z(t)));
        }
        let bp = self.panels(&self.z_breaks, self.eval.omega_c(), t);
        let f = |w: T| self.spectral_z(w) * (w * t).cos();
        Self::checked(integrate_panels(f, &bp, self.cfg.tolerance())?)
    }

    /// `<sigma_y(t)>` with its quadrature error bound.
    pub fn sigma_y_estimate(&self, t: T) -> Result<Estimate<T>> {
        if self.weak_coupling() {
            return Ok(exact(self.pole_sigma_y(t)));
        }
        if t == T::zero() {
            return Ok(exact(T::zero()));
        }
        let delta = self.eval.model.params.delta;
        let bp = self.panels(&self.z_breaks, self.eval.omega_c(), t);
        let f = |w: T| w * self.spectral_z(w) * (w * t).sin() / delta;
        Self::checked(integrate_panels(f, &bp, self.cfg.tolerance())?)
    }

    /// `<sigma_x(t)>` with its quadrature error bound.
    pub fn sigma_x_estimate(&self, t: T) -> Result<Estimate<T>> {
        let eta = self.eval.model.eta;
        if self.weak_coupling() {
            let g0 = T::PI() * self.eval.alpha() * self.eval.delta_r();
            return Ok(exact(eta * (T::one() - (-g0 * t).exp())));
        }
        let bp = self.panels(&self.x_breaks, self.x_upper, t);
        let f = |w: T| T::lit(2.0) * self.spectral_x(w) * (w * t).cos();
        let est = Self::checked(integrate_panels(f, &bp, self.cfg.tolerance())?)?;
        Ok(Estimate {
            value: eta * (T::one() - est.value),
            error: eta * est.error,
            evaluations: est.evaluations,
        })
    }

    pub fn sigma_z(&self, t: T) -> Result<T> {
        Ok(self.sigma_z_estimate(t)?.value)
    }

    pub fn sigma_y(&self, t: T) -> Result<T> {
        Ok(self.sigma_y_estimate(t)?.value)
    }

    pub fn sigma_x(&self, t: T) -> Result<T> {
        Ok(self.sigma_x_estimate(t)?.value)
    }

    // pole forms used below ANALYTIC_ALPHA; exact free precession at alpha = 0
    fn pole_frequency(&self) -> T {
        if self.eval.alpha() == T::zero() {
            self.eval.model.params.delta
        } else {
            self.regime.omega0.unwrap_or(self.eval.delta_r())
        }
    }

    fn pole_sigma_z(&self, t: T) -> T {
        let w0 = self.pole_frequency();
        (w0 * t).cos() * (-self.eval.model.gamma_ww * t).exp()
    }

    fn pole_sigma_y(&self, t: T) -> T {
        let w0 = self.pole_frequency();
        let g = self.eval.model.gamma_ww;
        let delta = self.eval.model.params.delta;
        (w0 * (w0 * t).sin() + g * (w0 * t).cos()) * (-g * t).exp() / delta
    }

    /// Full-method trajectory; samples are evaluated in parallel and
    /// assembled in time order.
    pub fn trajectory(&self, times: &[T]) -> Result<BlochTrajectory<T>> {
        validate_times(times)?;
        let samples: Vec<(T, T, T)> = times
            .par_iter()
            .map(|&t| {
                let sample = (|| Ok((self.sigma_x(t)?, self.sigma_y(t)?, self.sigma_z(t)?)))();
                sample.map_err(|e: Error| e.at_time(t.as_f64()))
            })
            .collect::<Result<_>>()?;
        let (mut sx, mut sy, mut sz) = (Vec::new(), Vec::new(), Vec::new());
        for (x, y, z) in samples {
            sx.push(x);
            sy.push(y);
            sz.push(z);
        }
        Ok(BlochTrajectory {
            times: times.to_vec(),
            sx,
            sy,
            sz,
            method: Method::Full,
            params: self.eval.model.params,
        })
    }
}

fn exact<T: Real>(value: T) -> Estimate<T> {
    Estimate {
        value,
        error: T::zero(),
        evaluations: 0,
    }
}

/// `<sigma_z(t)>` by quadrature; builds a [`BlochDynamics`] per call, so
/// prefer the struct for repeated evaluation.
pub fn sigma_z_of_t<T: Real>(t: T, eval: &SelfEnergy<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    BlochDynamics::new(*eval, *cfg)?.sigma_z(t)
}

pub fn sigma_y_of_t<T: Real>(t: T, eval: &SelfEnergy<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    BlochDynamics::new(*eval, *cfg)?.sigma_y(t)
}

pub fn sigma_x_of_t<T: Real>(t: T, eval: &SelfEnergy<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    BlochDynamics::new(*eval, *cfg)?.sigma_x(t)
}

/// Full-method trajectory over `times`.
pub fn bloch_trajectory<T: Real>(
    times: &[T],
    eval: &SelfEnergy<T>,
    cfg: &QuadratureConfig<T>,
) -> Result<BlochTrajectory<T>> {
    BlochDynamics::new(*eval, *cfg)?.trajectory(times)
}

/// Pole approximation `cos(omega0 t) exp(-gamma_ww t)`.
pub fn residue_sigma_z<T: Real>(
    t: T,
    regime: &RegimeReport<T>,
    model: &RenormalizedModel<T>,
) -> Result<T> {
    let w0 = regime.omega0.ok_or(Error::IncoherentRegime)?;
    Ok((w0 * t).cos() * (-model.gamma_ww * t).exp())
}

/// Residue-method trajectory: `sz` from the pole, `sy` from the derivative
/// identity applied to it, `sx` relaxing at `Gamma(0)`.
pub fn residue_trajectory<T: Real>(
    times: &[T],
    model: &RenormalizedModel<T>,
    regime: &RegimeReport<T>,
) -> Result<BlochTrajectory<T>> {
    validate_times(times)?;
    let w0 = regime.omega0.ok_or(Error::IncoherentRegime)?;
    let g = model.gamma_ww;
    let g0 = T::PI() * model.alpha() * model.delta_r;
    let delta = model.params.delta;
    let mut tr = empty(times, Method::Residue, model.params);
    for &t in times {
        let damp = (-g * t).exp();
        tr.sz.push((w0 * t).cos() * damp);
        tr.sy
            .push((w0 * (w0 * t).sin() + g * (w0 * t).cos()) * damp / delta);
        tr.sx.push(model.eta * (T::one() - (-g0 * t).exp()));
    }
    Ok(tr)
}

/// On-shell Born-Markov baseline.
///
/// The dressed-frame coherence rotates at the pole frequency and decays at
/// the Wigner-Weisskopf rate, `rho'_eg = exp(-i omega0 t - gamma_ww t) / 2`,
/// while the dressed populations relax at `Gamma(0) = pi alpha Dr` with no
/// on-shell shift (`Sigma(0) = 0`):
///
/// ```text
/// sz = cos(omega0 t) e^{-gamma_ww t},  sy = sin(omega0 t) e^{-gamma_ww t},
/// sx = eta (1 - e^{-Gamma(0) t})
/// ```
pub fn markov_trajectory<T: Real>(
    times: &[T],
    model: &RenormalizedModel<T>,
    regime: &RegimeReport<T>,
) -> Result<BlochTrajectory<T>> {
    validate_times(times)?;
    let w0 = if model.alpha() == T::zero() {
        model.params.delta
    } else {
        regime.omega0.ok_or(Error::IncoherentRegime)?
    };
    let g = model.gamma_ww;
    let g0 = T::PI() * model.alpha() * model.delta_r;
    let mut tr = empty(times, Method::Markov, model.params);
    for &t in times {
        let damp = (-g * t).exp();
        tr.sz.push((w0 * t).cos() * damp);
        tr.sy.push((w0 * t).sin() * damp);
        tr.sx.push(model.eta * (T::one() - (-g0 * t).exp()));
    }
    Ok(tr)
}

fn empty<T: Real>(times: &[T], method: Method, params: ModelParams<T>) -> BlochTrajectory<T> {
    BlochTrajectory {
        times: times.to_vec(),
        sx: Vec::with_capacity(times.len()),
        sy: Vec::with_capacity(times.len()),
        sz: Vec::with_capacity(times.len()),
        method,
        params,
    }
}
