//! Bath correlation function of the transformed coupling at zero temperature.
//!
//! ```text
//! K(tau) = int_0^wc J_V(w) exp(-i (w - Dr) tau) dw
//! ```
//!
//! At finite temperature each mode would carry a `coth(w / 2T)` factor and an
//! extra counter-rotating term weighted by `n(w)`; both reduce to the form
//! above at `T = 0`, which is the only case exposed here.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{coupling_weight, RenormalizedModel};
use crate::quadrature::{build_breakpoints, gauss_legendre};
use crate::scalar::Real;

/// Entries with `|K| < MEMORY_CUTOFF * K(0)` beyond the last larger entry are
/// dropped from the memory sum.
pub const MEMORY_CUTOFF: f64 = 1e-10;
const NODES_PER_PANEL: usize = 40;
// widest panel, in units of 1/tau_max, so the phase changes by at most this much per panel
const PHASE_PER_PANEL: f64 = 10.0;
const MAX_PANEL_WIDTH: f64 = 0.02;
const GEOMETRIC_DECADES: i32 = 30;

/// `K` tabulated on `tau_j = j * step`, `j = 0..=n`.
#[derive(Debug, Clone)]
pub struct MemoryKernel<T> {
    step: T,
    values: Vec<Complex<T>>,
    support: usize,
}

/// Gauss-Legendre rule on `[0, wc]`, graded geometrically towards `w = 0`
/// and fine enough to resolve `exp(-i w tau)` up to `tau_max`.
fn frequency_rule<T: Real>(model: &RenormalizedModel<T>, tau_max: T) -> (Vec<T>, Vec<T>) {
    let wc = model.omega_c();
    let dr = model.delta_r;
    let mut cands = Vec::new();
    if dr > T::zero() {
        for k in -GEOMETRIC_DECADES..=GEOMETRIC_DECADES {
            cands.push(dr * T::lit(2.0).powi(k));
        }
    }
    let width = (T::lit(PHASE_PER_PANEL) / tau_max.max(T::one())).min(T::lit(MAX_PANEL_WIDTH) * wc);
    let edges = build_breakpoints(T::zero(), wc, &cands, Some(width));
    let (x, w) = gauss_legendre::<T>(NODES_PER_PANEL);
    let half = T::lit(0.5);
    let mut nodes = Vec::with_capacity(edges.len() * NODES_PER_PANEL);
    let mut weights = Vec::with_capacity(edges.len() * NODES_PER_PANEL);
    for e in edges.windows(2) {
        let (c, h) = ((e[0] + e[1]) * half, (e[1] - e[0]) * half);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + h * *xi);
            weights.push(h * *wi);
        }
    }
    (nodes, weights)
}

impl<T: Real> MemoryKernel<T> {
    /// Tabulates `K` on `[0, tau_max]` with spacing `step`.
    pub fn new(model: &RenormalizedModel<T>, step: T, tau_max: T) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step.as_f64(),
                reason: "must be positive and finite",
            });
        }
        if !(tau_max >= T::zero()) || !tau_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau_max",
                value: tau_max.as_f64(),
                reason: "must be non-negative and finite",
            });
        }
        let n = (tau_max / step + T::lit(1e-9))
            .ceil()
            .to_usize()
            .unwrap_or(0);
        let (nodes, weights) = frequency_rule(model, step * T::from_index(n));
        let dr = model.delta_r;
        let jw: Vec<T> = nodes
            .iter()
            .zip(&weights)
            .map(|(&w, &q)| q * coupling_weight(w, model))
            .collect();
        let values: Vec<Complex<T>> = (0..=n)
            .into_par_iter()
            .map(|j| {
                let tau = step * T::from_index(j);
                let (mut re, mut im) = (T::zero(), T::zero());
                for (&w, &c) in nodes.iter().zip(&jw) {
                    let (s, co) = ((w - dr) * tau).sin_cos();
                    re = re + c * co;
                    im = im - c * s;
                }
                Complex::new(re, im)
            })
            .collect();
        let k0 = values[0].re;
        let floor = T::lit(MEMORY_CUTOFF) * k0;
        let support = values
            .iter()
            .rposition(|v| v.norm() > floor)
            .map_or(1, |j| j + 1);
        Ok(Self {
            step,
            values,
            support,
        })
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn tau_max(&self) -> T {
        self.step * T::from_index(self.values.len() - 1)
    }

    /// `K(0) = int J_V`, real and non-negative.
    pub fn k0(&self) -> T {
        self.values[0].re
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Number of leading grid entries used in the memory sum. Equals the
    /// full table length unless the tail has decayed below the cutoff.
    pub fn support(&self) -> usize {
        self.support
    }

    /// Linear interpolation between grid values.
    pub fn at(&self, tau: T) -> Result<Complex<T>> {
        if !(tau >= T::zero()) || tau > self.tau_max() * (T::one() + T::epsilon()) {
            return Err(Error::Domain("kernel lag outside the tabulated range"));
        }
        let x = tau / self.step;
        let j = x.floor().to_usize().unwrap_or(0).min(self.values.len() - 1);
        if j + 1 >= self.values.len() {
            return Ok(self.values[j]);
        }
        let f = x - T::from_index(j);
        Ok(self.values[j] * (T::one() - f) + self.values[j + 1] * f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solve_renormalization, ModelParams};
    use crate::quadrature::{integrate_panels, Tolerance};
    use approx::assert_relative_eq;

    fn model(alpha: f64) -> RenormalizedModel<f64> {
        solve_renormalization(&ModelParams::new(alpha, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn origin_is_the_total_weight() {
        let m = model(0.2);
        let k = MemoryKernel::new(&m, 0.02, 1.0).unwrap();
        // ln eta = -(1/(2 Dr^2)) int J_V
        let closed = -2.0 * m.delta_r * m.delta_r * m.eta.ln();
        assert_relative_eq!(k.k0(), closed, max_relative = 1e-12);
        assert_eq!(k.values()[0].im, 0.0);
    }

    #[test]
    fn bounded_by_origin_and_matches_adaptive_quadrature() {
        let m = model(0.1);
        let k = MemoryKernel::new(&m, 0.05, 200.0).unwrap();
        assert!(k
            .values()
            .iter()
            .all(|v| v.norm() <= k.k0() * (1.0 + 1e-12)));
        let dr = m.delta_r;
        for tau in [3.0, 47.35, 200.0] {
            let brk = build_breakpoints(0.0, 1.0, &[dr, 10.0 * dr], Some(0.5 / tau));
            let tol = Tolerance {
                abs: 1e-15,
                rel: 1e-12,
                max_intervals: 20000,
            };
            let re = integrate_panels(
                |w| coupling_weight(w, &m) * ((w - dr) * tau).cos(),
                &brk,
                tol,
            )
            .unwrap();
            let im = integrate_panels(
                |w| -coupling_weight(w, &m) * ((w - dr) * tau).sin(),
                &brk,
                tol,
            )
            .unwrap();
            let v = k.at(tau).unwrap();
            assert!(
                (v.re - re.value).abs() < 1e-13,
                "{tau}: {} vs {}",
                v.re,
                re.value
            );
            assert!((v.im - im.value).abs() < 1e-13);
        }
    }

    #[test]
    fn vanishes_without_coupling() {
        let k = MemoryKernel::new(&model(0.0), 0.02, 5.0).unwrap();
        assert!(k.values().iter().all(|v| *v == Complex::new(0.0, 0.0)));
        assert_eq!(k.support(), 1);
    }

    #[test]
    fn slow_tail_keeps_the_full_history() {
        // the sharp cutoff gives a 1/tau tail, far above the truncation floor
        let k = MemoryKernel::new(&model(0.1), 0.02, 50.0).unwrap();
        assert_eq!(k.support(), k.values().len());
        assert!(k.at(51.0).is_err());
    }
}
