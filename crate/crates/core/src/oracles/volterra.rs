//! Time-nonlocal Born master equation of the transformed model, stepped in
//! the time domain.
//!
//! In the eigenbasis `{g, e}` of `H0' = -(Dr/2) sx` the vacuum bath couples
//! only through `sigma_+/-`, and the interaction-picture equation
//! `d rho/dt = -int_0^t Tr_B [H1'(t), [H1'(s), rho(s) rho_B]] ds` separates:
//!
//! ```text
//! rho_ee' = -int 2 Re K(t-s) rho_ee(s) ds        rho_gg' = -rho_ee'
//! rho_eg' = -int K(t-s) rho_eg(s) ds             rho_ge' = -int K*(t-s) rho_ge(s) ds
//! ```
//!
//! Each line is integrated with a trapezoidal memory sum and an implicit
//! trapezoidal step (the converged limit of trapezoidal predictor-corrector
//! iteration; the equations are linear, so it is solved in closed form).
//! The Schrödinger-picture coherence is `exp(-i Dr t) rho_eg`, and
//!
//! ```text
//! sz = 2 Re rho_eg^S,   sx = eta (rho_gg - rho_ee),   sy = -(1/D) d sz/dt
//! ```
//!
//! Because this is the same equation that the spectral forms solve by
//! Laplace inversion, any disagreement with them measures inversion and
//! quadrature error rather than modelling error.

use num_complex::Complex;

use super::kernel::MemoryKernel;
use crate::dynamics::{validate_times, BlochTrajectory, Method};
use crate::error::{Error, Result};
use crate::model::RenormalizedModel;
use crate::scalar::Real;

/// Largest admissible step, in units of `1/omega_c`.
pub const MAX_STEP: f64 = 0.02;
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Interaction-picture density matrix in the `{g, e}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedState<T> {
    pub gg: T,
    pub ee: T,
    pub eg: Complex<T>,
    pub ge: Complex<T>,
}

impl<T: Real> DressedState<T> {
    /// `|up>` in the sz basis is an equal superposition of `g` and `e`.
    pub fn spin_up() -> Self {
        let h = T::lit(0.5);
        Self {
            gg: h,
            ee: h,
            eg: Complex::new(h, T::zero()),
            ge: Complex::new(h, T::zero()),
        }
    }

    pub fn trace(&self) -> T {
        self.gg + self.ee
    }

    pub fn hermiticity_defect(&self) -> T {
        (self.ge - self.eg.conj()).norm()
    }
}

/// Steps `y' = -int_0^t k(t - s) y(s) ds` on a uniform grid.
struct Stepper<T, V> {
    y: Vec<V>,
    f: Vec<V>,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, V> Stepper<T, V>
where
    V: Copy + std::ops::Add<Output = V> + std::ops::Sub<Output = V> + std::ops::Mul<T, Output = V>,
{
    fn new(y0: V, zero: V, capacity: usize) -> Self {
        let mut y = Vec::with_capacity(capacity);
        let mut f = Vec::with_capacity(capacity);
        y.push(y0);
        f.push(zero);
        Self {
            y,
            f,
            _t: std::marker::PhantomData,
        }
    }

    /// Advances one step; `k` is the kernel table, `k0_real` its value at zero.
    fn advance<K>(&mut self, k: &[K], support: usize, h: T, k0: T, zero: V)
    where
        V: std::ops::Mul<K, Output = V>,
        K: Copy,
    {
        let m = self.y.len();
        let half = T::lit(0.5);
        // trapezoidal memory sum without the implicit j = m term
        let mut s = zero;
        let first = if m >= support { m + 1 - support } else { 0 };
        for j in first.max(1)..m {
            s = s + self.y[j] * k[m - j];
        }
        if first == 0 && m < k.len() {
            s = s + self.y[0] * k[m] * half;
        }
        s = s * h;
        // y_m = y_{m-1} + h/2 (F_{m-1} + F_m), F_m = -s - (h/2) k0 y_m
        let denom = T::one() + h * h * k0 * T::lit(0.25);
        let ym = (self.y[m - 1] + (self.f[m - 1] - s) * (h * half)) * (T::one() / denom);
        let fm = zero - s - ym * (h * half * k0);
        self.y.push(ym);
        self.f.push(fm);
    }
}

/// Integrates the master equation from `|up>` and samples the Bloch vector.
///
/// Every requested time must be a multiple of `kernel.step()` (to 1e-9
/// relative) and lie within the tabulated range.
pub fn volterra_solve<T: Real>(
    times: &[T],
    model: &RenormalizedModel<T>,
    kernel: &MemoryKernel<T>,
) -> Result<BlochTrajectory<T>> {
    validate_times(times)?;
    let h = kernel.step();
    if h > T::lit(MAX_STEP) * model.omega_c().recip() * (T::one() + T::lit(1e-12)) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: h.as_f64(),
            reason: "memory integration needs omega_c dt <= 0.02",
        });
    }
    let mut index = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let x = t / h;
        let r = x.round();
        if (x - r).abs() > T::lit(1e-9) * r.max(T::one())
            || t > kernel.tau_max() * (T::one() + T::lit(1e-12))
        {
            return Err(Error::TimeGrid { index: i });
        }
        index.push(r.to_usize().unwrap_or(0));
    }
    let steps = index.last().copied().unwrap_or(0);
    let k = kernel.values();
    let k_conj: Vec<Complex<T>> = k.iter().map(|v| v.conj()).collect();
    let k_pop: Vec<T> = k.iter().map(|v| v.re * T::lit(2.0)).collect();
    let k0 = kernel.k0();
    let support = kernel.support();

    let init = DressedState::spin_up();
    let cz = Complex::new(T::zero(), T::zero());
    let mut ee = Stepper::new(init.ee, T::zero(), steps + 1);
    let mut eg = Stepper::new(init.eg, cz, steps + 1);
    let mut ge = Stepper::new(init.ge, cz, steps + 1);
    let mut gg = init.gg;
    for m in 1..=steps {
        ee.advance(&k_pop, support, h, k0 * T::lit(2.0), T::zero());
        eg.advance(k, support, h, k0, cz);
        ge.advance(&k_conj, support, h, k0, cz);
        // rho_gg is driven by the negated rho_ee rate
        gg = gg - (ee.f[m - 1] + ee.f[m]) * h * T::lit(0.5);
        let st = DressedState {
            ee: ee.y[m],
            gg,
            eg: eg.y[m],
            ge: ge.y[m],
        };
        let drift = (st.trace() - T::one()).abs();
        if drift > T::lit(TRACE_TOL) {
            return Err(Error::TraceDrift {
                drift: drift.as_f64(),
                step: m,
            });
        }
        let defect = st.hermiticity_defect();
        if !(defect <= T::lit(HERMITICITY_TOL)) {
            return Err(Error::Hermiticity {
                defect: defect.as_f64(),
                step: m,
            });
        }
        // the Born equation is not positivity preserving, so only finiteness is enforced
        if !st.ee.is_finite() || !st.eg.re.is_finite() || !st.eg.im.is_finite() {
            return Err(Error::TraceDrift {
                drift: f64::NAN,
                step: m,
            });
        }
    }

    let dr = model.delta_r;
    let delta = model.params.delta;
    let two = T::lit(2.0);
    let mut tr = BlochTrajectory {
        times: times.to_vec(),
        sx: Vec::with_capacity(times.len()),
        sy: Vec::with_capacity(times.len()),
        sz: Vec::with_capacity(times.len()),
        method: Method::Volterra,
        params: model.params,
    };
    for (&t, &m) in times.iter().zip(&index) {
        let rot = Complex::new(T::zero(), -dr * t).exp();
        let c = eg.y[m];
        let dc = eg.f[m] - Complex::new(T::zero(), dr) * c;
        tr.sz.push(two * (rot * c).re);
        tr.sy.push(-two * (rot * dc).re / delta);
        tr.sx.push(model.eta * (T::one() - two * ee.y[m]));
    }
    Ok(tr)
}

/// Internal step for an output spacing: the largest `dt / n` not above
/// [`MAX_STEP`].
pub fn volterra_step<T: Real>(output_dt: T, omega_c: T) -> T {
    let cap = T::lit(MAX_STEP) / omega_c;
    let n = (output_dt / cap * (T::one() - T::lit(1e-12)))
        .ceil()
        .max(T::one());
    output_dt / n
}

/// Solves on a uniform output grid, choosing the internal step and
/// tabulating the kernel. The grid spacing is taken from the first two
/// samples; a single sample is reached in steps of at most [`MAX_STEP`].
pub fn volterra_trajectory<T: Real>(
    times: &[T],
    model: &RenormalizedModel<T>,
) -> Result<BlochTrajectory<T>> {
    validate_times(times)?;
    let t_end = times.last().copied().unwrap_or(T::zero());
    let spacing = match times {
        [a, b, ..] => *b - *a,
        [t] if *t > T::zero() => *t,
        _ => T::lit(MAX_STEP) / model.omega_c(),
    };
    let h = volterra_step(spacing, model.omega_c());
    let kernel = MemoryKernel::new(model, h, t_end)?;
    volterra_solve(times, model, &kernel)
}
