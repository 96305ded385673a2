//! Exact diagonalization of the untransformed model with a finite bath.
//!
//! ```text
//! H = -(D/2) sx + sum_k w_k b_k^+ b_k + (1/2) sum_k g_k (b_k + b_k^+) sz
//! ```
//!
//! The bath continuum is cut into bins; each bin becomes one mode carrying
//! the bin's full spectral weight `g_k^2 = int_bin 2 a w dw` at the
//! J-weighted mean frequency. The state `|up> x |vac>` is propagated with a
//! short-iterative Lanczos scheme, so no transformation enters and the
//! comparison checks the whole analytic chain.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tridiag::symmetric_tridiagonal_eigen;
use crate::dynamics::{validate_times, BlochTrajectory, Method};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Real;

pub const DIMENSION_CAP: usize = 100_000;
pub const NORM_TOL: f64 = 1e-10;
/// Default ratio between successive logarithmic bin edges.
pub const DEFAULT_LAMBDA: f64 = 2.0;
const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode<T> {
    pub omega: T,
    pub g: T,
    /// Frequency bin `[lo, hi]` the mode represents.
    pub bin: (T, T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath<T> {
    pub modes: Vec<Mode<T>>,
    pub n_max: usize,
    pub scheme: Scheme,
}

fn mode_for_bin<T: Real>(alpha: T, lo: T, hi: T) -> Mode<T> {
    let (lo2, hi2) = (lo * lo, hi * hi);
    let weight = alpha * (hi2 - lo2);
    // int w J / int J over the bin, independent of alpha
    let omega = T::lit(2.0 / 3.0) * (hi2 * hi - lo2 * lo) / (hi2 - lo2);
    Mode {
        omega,
        g: weight.sqrt(),
        bin: (lo, hi),
    }
}

impl<T: Real> DiscretizedBath<T> {
    /// Bins with edges `wc L^-k`, `k = 0..n_modes-1`, plus the last bin
    /// `[0, wc L^-(n_modes-1)]`.
    pub fn logarithmic(
        params: &ModelParams<T>,
        n_modes: usize,
        n_max: usize,
        lambda: T,
    ) -> Result<Self> {
        if !(lambda > T::one()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda.as_f64(),
                reason: "must exceed 1",
            });
        }
        Self::from_edges(params, n_modes, n_max, Scheme::Logarithmic, |k| {
            if k == n_modes {
                T::zero()
            } else {
                params.omega_c * lambda.powi(-(k as i32))
            }
        })
    }

    /// `n_modes` equal bins on `[0, wc]`.
    pub fn linear(params: &ModelParams<T>, n_modes: usize, n_max: usize) -> Result<Self> {
        let n = T::from_index(n_modes.max(1));
        Self::from_edges(params, n_modes, n_max, Scheme::Linear, |k| {
            params.omega_c * (n - T::from_index(k)) / n
        })
    }

    fn from_edges(
        params: &ModelParams<T>,
        n_modes: usize,
        n_max: usize,
        scheme: Scheme,
        edge: impl Fn(usize) -> T,
    ) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter {
                name: "n_modes",
                value: 0.0,
                reason: "need at least one mode",
            });
        }
        let modes = (0..n_modes)
            .map(|k| mode_for_bin(params.alpha, edge(k + 1), edge(k)))
            .collect();
        Ok(Self {
            modes,
            n_max,
            scheme,
        })
    }

    /// `2 (n_max + 1)^N`, or `None` on overflow.
    pub fn dimension(&self) -> Option<usize> {
        let mut d = 2usize;
        for _ in &self.modes {
            d = d.checked_mul(self.n_max + 1)?;
        }
        Some(d)
    }
}

/// Matrix-free Hamiltonian on `spin x bath`, spin-major.
struct Hamiltonian<T> {
    half_delta: T,
    bath_dim: usize,
    strides: Vec<usize>,
    n_max: usize,
    omega: Vec<T>,
    half_g: Vec<T>,
    sqrt_n: Vec<T>,
}

impl<T: Real> Hamiltonian<T> {
    fn new(params: &ModelParams<T>, bath: &DiscretizedBath<T>) -> Self {
        let d = bath.n_max + 1;
        let mut strides = Vec::with_capacity(bath.modes.len());
        let mut s = 1;
        for _ in &bath.modes {
            strides.push(s);
            s *= d;
        }
        Self {
            half_delta: params.delta * T::lit(0.5),
            bath_dim: s,
            strides,
            n_max: bath.n_max,
            omega: bath.modes.iter().map(|m| m.omega).collect(),
            half_g: bath.modes.iter().map(|m| m.g * T::lit(0.5)).collect(),
            sqrt_n: (0..=bath.n_max + 1)
                .map(|n| T::from_index(n).sqrt())
                .collect(),
        }
    }

    fn dim(&self) -> usize {
        2 * self.bath_dim
    }

    fn apply(&self, psi: &[Complex<T>], out: &mut [Complex<T>]) {
        let nb = self.bath_dim;
        out.par_iter_mut().enumerate().for_each(|(idx, o)| {
            let (spin, b) = (idx / nb, idx % nb);
            let sz = if spin == 0 { T::one() } else { -T::one() };
            let flip = if spin == 0 { idx + nb } else { idx - nb };
            let mut acc = psi[flip] * (-self.half_delta);
            let mut diag = T::zero();
            let mut rest = b;
            for (k, &stride) in self.strides.iter().enumerate() {
                let n = rest % (self.n_max + 1);
                rest /= self.n_max + 1;
                diag = diag + self.omega[k] * T::from_index(n);
                let c = self.half_g[k] * sz;
                if n < self.n_max {
                    acc = acc + psi[idx + stride] * (c * self.sqrt_n[n + 1]);
                }
                if n > 0 {
                    acc = acc + psi[idx - stride] * (c * self.sqrt_n[n]);
                }
            }
            *o = acc + psi[idx] * diag;
        });
    }
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |s, (x, y)| {
            s + x.conj() * y
        })
}

fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

/// Propagates `psi` by `tau` under `h`, splitting into Krylov substeps as
/// needed.
fn propagate<T: Real>(h: &Hamiltonian<T>, psi: &mut [Complex<T>], tau: T) -> Result<()> {
    let mut left = tau;
    let dim = h.dim();
    let mmax = KRYLOV_DIM.min(dim);
    let zero = Complex::new(T::zero(), T::zero());
    while left > T::zero() {
        let beta0 = norm(psi);
        let mut basis: Vec<Vec<Complex<T>>> = vec![psi.iter().map(|x| *x / beta0).collect()];
        let mut alphas = Vec::with_capacity(mmax);
        let mut betas: Vec<T> = Vec::with_capacity(mmax);
        let mut w = vec![zero; dim];
        let mut exhausted = false;
        for j in 0..mmax {
            h.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alphas.push(a);
            // full reorthogonalization, twice for safety
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi = *wi - *vi * c);
                }
            }
            let b = norm(&w);
            let scale = a.abs() + betas.last().copied().unwrap_or(T::zero()) + T::one();
            if b <= T::epsilon() * T::lit(64.0) * scale {
                exhausted = true;
                break;
            }
            betas.push(b);
            if j + 1 < mmax {
                basis.push(w.iter().map(|x| *x / b).collect());
            }
        }
        let m = alphas.len();
        let (lam, z) = symmetric_tridiagonal_eigen(&alphas, &betas[..m.saturating_sub(1)])
            .ok_or(Error::NormDrift { drift: f64::NAN })?;
        let coeffs = |t: T| -> Vec<Complex<T>> {
            (0..m)
                .map(|i| {
                    (0..m).fold(zero, |s, k| {
                        s + Complex::new(T::zero(), -lam[k] * t).exp() * (z[i][k] * z[0][k])
                    })
                })
                .collect()
        };
        let residual = if exhausted { T::zero() } else { betas[m - 1] };
        let mut step = left;
        let mut c = coeffs(step);
        while residual * c[m - 1].norm() > T::tol(KRYLOV_TOL) {
            step = step * T::lit(0.5);
            if step <= tau * T::epsilon() {
                return Err(Error::NormDrift { drift: f64::NAN });
            }
            c = coeffs(step);
        }
        for (i, p) in psi.iter_mut().enumerate() {
            *p = (0..m).fold(zero, |s, k| s + basis[k][i] * c[k]) * beta0;
        }
        left = left - step;
        if left < tau * T::lit(1e-14) {
            break;
        }
    }
    Ok(())
}

/// `(sx, sy, sz)` of the reduced spin state.
fn bloch<T: Real>(psi: &[Complex<T>], nb: usize) -> (T, T, T) {
    let (up, down) = psi.split_at(nb);
    let pu: T = up.iter().map(|x| x.norm_sqr()).sum();
    let pd: T = down.iter().map(|x| x.norm_sqr()).sum();
    let coh = dot(up, down);
    (coh.re * T::lit(2.0), coh.im * T::lit(2.0), pu - pd)
}

/// Bloch trajectory of `|up> x |vac>` under the discretized Hamiltonian.
pub fn ed_simulate<T: Real>(
    times: &[T],
    params: &ModelParams<T>,
    bath: &DiscretizedBath<T>,
) -> Result<BlochTrajectory<T>> {
    validate_times(times)?;
    let dim = bath.dimension().unwrap_or(usize::MAX);
    if dim > DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim,
            cap: DIMENSION_CAP,
        });
    }
    let h = Hamiltonian::new(params, bath);
    let mut psi = vec![Complex::new(T::zero(), T::zero()); dim];
    psi[0] = Complex::new(T::one(), T::zero());
    let mut tr = BlochTrajectory {
        times: times.to_vec(),
        sx: Vec::with_capacity(times.len()),
        sy: Vec::with_capacity(times.len()),
        sz: Vec::with_capacity(times.len()),
        method: Method::Ed,
        params: *params,
    };
    let mut now = T::zero();
    for &t in times {
        if t > now {
            propagate(&h, &mut psi, t - now).map_err(|e| e.at_time(t.as_f64()))?;
            now = t;
        }
        let drift = (norm(&psi) - T::one()).abs();
        if drift > T::lit(NORM_TOL) {
            return Err(Error::NormDrift {
                drift: drift.as_f64(),
            }
            .at_time(t.as_f64()));
        }
        let (x, y, z) = bloch(&psi, h.bath_dim);
        tr.sx.push(x);
        tr.sy.push(y);
        tr.sz.push(z);
    }
    Ok(tr)
}

/// One row of a truncation study: maximum `|sz_ed - reference|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow<T> {
    pub n_modes: usize,
    pub n_max: usize,
    pub dimension: usize,
    pub max_deviation: T,
}

/// Runs [`ed_simulate`] with logarithmic baths for every `(N, n_max)` pair
/// and records the deviation of `sz` from `reference` (sampled on `times`).
pub fn ed_convergence<T: Real>(
    times: &[T],
    params: &ModelParams<T>,
    reference: &[T],
    settings: &[(usize, usize)],
) -> Result<Vec<ConvergenceRow<T>>> {
    if reference.len() != times.len() {
        return Err(Error::Domain("reference series must match the time grid"));
    }
    settings
        .iter()
        .map(|&(n_modes, n_max)| {
            let bath =
                DiscretizedBath::logarithmic(params, n_modes, n_max, T::lit(DEFAULT_LAMBDA))?;
            let tr = ed_simulate(times, params, &bath)?;
            let dev = tr
                .sz
                .iter()
                .zip(reference)
                .map(|(a, b)| (*a - *b).abs())
                .fold(T::zero(), T::max);
            Ok(ConvergenceRow {
                n_modes,
                n_max,
                dimension: bath.dimension().unwrap_or(usize::MAX),
                max_deviation: dev,
            })
        })
        .collect()
}
