//! Real and imaginary parts of the one-boson self-energy, their
//! combinations in the sigma_x channel, and the coherent pole.
//!
//! The damping is `gamma(w) = pi * J_V(w)` with `J_V` the dressed coupling
//! density from [`crate::model::coupling_weight`]; the level shift is its
//! Hilbert transform,
//!
//! ```text
//! R(w) = PV int_0^wc J_V(w') / (w - w') dw'
//!      = -2 a Dr^2/(w + Dr) { wc/(wc + Dr) - w/(w + Dr) ln| w (wc + Dr) / (Dr (wc - w)) | }
//! ```
//!
//! valid on the whole real line except the logarithmic singularity at
//! `w = wc`. The apparent pole at `w = -Dr` is removable and is evaluated
//! from a power series around that point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coupling_weight, solve_renormalization, ModelParams, RenormalizedModel};
use crate::scalar::Real;

/// Number of uniform samples in the sign scan for the pole.
pub const SCAN_POINTS: usize = 2048;
/// Relative distance of the scan window from `0` and `omega_c`.
pub const SCAN_EDGE: f64 = 1e-9;
/// Roots this close to a scan edge are treated as absent.
pub const EDGE_EXCLUSION: f64 = 1e-8;

// series around the removable point w = -Dr is used for |w + Dr| < this * Dr
const SERIES_RADIUS: f64 = 0.25;
const SERIES_TERMS: usize = 48;

/// Self-energy evaluator bound to one renormalized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergy<T> {
    pub model: RenormalizedModel<T>,
}

impl<T: Real> SelfEnergy<T> {
    pub fn new(model: RenormalizedModel<T>) -> Self {
        Self { model }
    }

    pub fn alpha(&self) -> T {
        self.model.alpha()
    }

    pub fn delta_r(&self) -> T {
        self.model.delta_r
    }

    pub fn omega_c(&self) -> T {
        self.model.omega_c()
    }

    /// Principal-value level shift `R(omega)`.
    pub fn level_shift(&self, omega: T) -> Result<T> {
        let (a, dr, wc) = (self.alpha(), self.delta_r(), self.omega_c());
        if omega == wc {
            return Err(Error::Singular {
                omega: omega.as_f64(),
                which: "logarithmic singularity at the cutoff",
            });
        }
        if a == T::zero() || dr == T::zero() {
            return Ok(T::zero());
        }
        let two = T::lit(2.0);
        if omega == T::zero() {
            return Ok(-two * a * dr * wc / (wc + dr));
        }
        let u = omega + dr;
        if u.abs() < T::lit(SERIES_RADIUS) * dr {
            return Ok(two * a * dr * dr * self.series_near_minus_dr(u));
        }
        let log_arg = (omega * (wc + dr) / (dr * (wc - omega))).abs();
        let braces = wc / (wc + dr) - omega / u * log_arg.ln();
        Ok(-two * a * dr * dr / u * braces)
    }

    // int_0^wc w/((w + Dr)^2 (w0 - w)) dw for w0 = u - Dr, expanded in u/Dr
    fn series_near_minus_dr(&self, u: T) -> T {
        let dr = self.delta_r();
        let q = dr / (self.omega_c() + dr);
        let v = u / dr;
        let mut sum = T::zero();
        let mut vn = T::one();
        let mut qn1 = q; // q^(n+1)
        for n in 0..SERIES_TERMS {
            let qn2 = qn1 * q;
            let c1 = (T::one() - qn1) / T::from_index(n + 1);
            let c2 = (T::one() - qn2) / T::from_index(n + 2);
            sum = sum + vn * (c1 - c2);
            vn = vn * v;
            qn1 = qn2;
        }
        -sum / dr
    }

    /// Damping `gamma(omega) = 2 pi a omega Dr^2/(omega + Dr)^2` on `[0, wc]`.
    pub fn damping(&self, omega: T) -> T {
        T::PI() * coupling_weight(omega, &self.model)
    }

    /// `(Sigma, Gamma)` of the sigma_x channel:
    /// `Sigma(w) = R(Dr + w) - R(Dr - w)`, `Gamma(w) = gamma(Dr + w) + gamma(Dr - w)`.
    pub fn sigma_x_channel(&self, omega: T) -> Result<(T, T)> {
        let dr = self.delta_r();
        let width = self.damping(dr + omega) + self.damping(dr - omega);
        if omega == T::zero() {
            return Ok((T::zero(), width));
        }
        let shift = self.level_shift(dr + omega)? - self.level_shift(dr - omega)?;
        Ok((shift, width))
    }

    /// Symmetric interval `[-m, m]` outside which `Gamma` vanishes.
    pub fn sigma_x_support(&self) -> (T, T) {
        let dr = self.delta_r();
        let m = (self.omega_c() - dr).max(dr);
        (-m, m)
    }

    /// `omega - Dr - R(omega)`, whose zero is the coherent pole.
    pub fn pole_condition(&self, omega: T) -> Result<T> {
        Ok(omega - self.delta_r() - self.level_shift(omega)?)
    }

    /// Locates the real pole in `(0, omega_c)` and classifies the regime.
    pub fn find_pole(&self) -> Result<RegimeReport<T>> {
        if self.model.is_localized() {
            return Err(Error::Domain(
                "pole search needs a delocalized model (eta > 0)",
            ));
        }
        let wc = self.omega_c();
        let lo = T::tol(SCAN_EDGE) * wc;
        let hi = (T::one() - T::tol(SCAN_EDGE)) * wc;
        let n = SCAN_POINTS;
        let grid: Vec<T> = (0..=n)
            .map(|k| lo + (hi - lo) * T::from_index(k) / T::from_index(n))
            .collect();
        let values = grid
            .iter()
            .map(|&w| self.pole_condition(w))
            .collect::<Result<Vec<_>>>()?;
        let mut brackets = Vec::new();
        for k in 0..n {
            let (fa, fb) = (values[k], values[k + 1]);
            if fa == T::zero() {
                brackets.push((grid[k], grid[k]));
            } else if fa.signum() != fb.signum() && fb != T::zero() {
                brackets.push((grid[k], grid[k + 1]));
            }
        }
        if values[n] == T::zero() {
            brackets.push((grid[n], grid[n]));
        }
        let edge = T::tol(EDGE_EXCLUSION) * wc;
        let mut roots = Vec::new();
        for &(a, b) in &brackets {
            let root = if a == b { a } else { self.bisect(a, b)? };
            if root - lo > edge && hi - root > edge {
                roots.push((root, (a, b)));
            }
        }
        let alpha_c = self.model.alpha_c;
        match roots.len() {
            0 => Ok(RegimeReport {
                omega0: None,
                gamma_at_pole: None,
                alpha_c,
                label: RegimeLabel::Incoherent,
                alpha_star_hint: None,
            }),
            1 => {
                let w0 = roots[0].0;
                let g0 = self.damping(w0);
                Ok(RegimeReport {
                    omega0: Some(w0),
                    gamma_at_pole: Some(g0),
                    alpha_c,
                    label: if w0 > g0 {
                        RegimeLabel::Underdamped
                    } else {
                        RegimeLabel::Overdamped
                    },
                    alpha_star_hint: None,
                })
            }
            _ => Err(Error::AmbiguousPole {
                brackets: roots
                    .iter()
                    .map(|(_, (a, b))| (a.as_f64(), b.as_f64()))
                    .collect(),
            }),
        }
    }

    fn bisect(&self, mut a: T, mut b: T) -> Result<T> {
        let mut fa = self.pole_condition(a)?;
        let abs_tol = T::tol(1e-10) * self.omega_c();
        for _ in 0..400 {
            let mid = (a + b) * T::lit(0.5);
            if mid <= a || mid >= b {
                break;
            }
            let fm = self.pole_condition(mid)?;
            if fm == T::zero() {
                return Ok(mid);
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
            // the pole may sit far below 1e-10 near the crossover, so also
            // demand relative accuracy
            if b - a <= abs_tol && b - a <= T::epsilon() * T::lit(8.0) * b {
                break;
            }
        }
        Ok((a + b) * T::lit(0.5))
    }
}

/// Dynamical regime of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeLabel {
    Underdamped,
    Overdamped,
    Incoherent,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegimeLabel::Underdamped => "underdamped",
            RegimeLabel::Overdamped => "overdamped",
            RegimeLabel::Incoherent => "incoherent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport<T> {
    pub omega0: Option<T>,
    pub gamma_at_pole: Option<T>,
    pub alpha_c: T,
    pub label: RegimeLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_star_hint: Option<T>,
}

impl<T: Real> RegimeReport<T> {
    pub fn is_coherent(&self) -> bool {
        self.label != RegimeLabel::Incoherent
    }
}

/// Builds the renormalized model and evaluator for `(alpha, delta)` in
/// cutoff units.
pub fn evaluator<T: Real>(alpha: T, delta: T) -> Result<SelfEnergy<T>> {
    let params = ModelParams::new(alpha, delta)?;
    Ok(SelfEnergy::new(solve_renormalization(&params)?))
}

/// Self-consistent coherent-incoherent threshold: the coupling where
/// `alpha = (1 + Dr(alpha)/wc)/2`.
pub fn crossover_coupling<T: Real>(delta: T) -> Result<T> {
    let g = |a: T| -> Result<T> {
        let m = solve_renormalization(&ModelParams::new(a, delta)?)?;
        Ok(a - m.alpha_c)
    };
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if g(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < T::tol(1e-12) {
            break;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Coupling at which the pole search stops finding a root, located by
/// bisection on `[lo, hi]` (a pole must exist at `lo` and not at `hi`).
pub fn pole_loss_coupling<T: Real>(delta: T, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let has_pole = |a: T| -> Result<bool> { Ok(evaluator(a, delta)?.find_pole()?.is_coherent()) };
    if !has_pole(lo)? || has_pole(hi)? {
        return Err(Error::Domain(
            "pole-loss bracket does not straddle the crossover",
        ));
    }
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if has_pole(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Coupling where `omega0 = gamma(omega0)`, the underdamped/overdamped
/// boundary, by bisection on `[lo, hi]`.
pub fn damping_boundary_coupling<T: Real>(delta: T, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let underdamped = |a: T| -> Result<bool> {
        Ok(evaluator(a, delta)?.find_pole()?.label == RegimeLabel::Underdamped)
    };
    if !underdamped(lo)? || underdamped(hi)? {
        return Err(Error::Domain(
            "damping-boundary bracket does not straddle the boundary",
        ));
    }
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if underdamped(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(alpha: f64, delta: f64) -> SelfEnergy<f64> {
        evaluator(alpha, delta).unwrap()
    }

    #[test]
    fn level_shift_vanishes_without_coupling() {
        let e = ev(0.0, 0.1);
        for w in [-1.5, -0.1, 0.0, 0.05, 0.3, 2.0] {
            assert_eq!(e.level_shift(w).unwrap(), 0.0);
        }
    }

    #[test]
    fn level_shift_at_zero_is_the_limit() {
        let e = ev(0.2, 0.1);
        let dr = e.delta_r();
        let limit = -2.0 * 0.2 * dr / (1.0 + dr);
        assert_eq!(e.level_shift(0.0).unwrap(), limit);
        assert_relative_eq!(e.level_shift(1e-12).unwrap(), limit, max_relative = 1e-9);
        assert_relative_eq!(e.level_shift(-1e-12).unwrap(), limit, max_relative = 1e-9);
    }

    #[test]
    fn level_shift_at_delta_r() {
        let e = ev(0.2, 0.1);
        let dr = e.delta_r();
        let r = e.level_shift(dr).unwrap();
        // -(1/(1+Dr) - 0.5 ln((1+Dr)/(1-Dr))) * a Dr
        let closed = -(1.0 / (1.0 + dr) - 0.5 * ((1.0 + dr) / (1.0 - dr)).ln()) * 0.2 * dr;
        assert_relative_eq!(r, closed, max_relative = 1e-13);
        assert_relative_eq!(r / (0.2 * dr), -0.8651, epsilon = 1e-3);
    }

    #[test]
    fn cutoff_is_singular() {
        let e = ev(0.2, 0.1);
        assert!(matches!(e.level_shift(1.0), Err(Error::Singular { .. })));
    }

    #[test]
    fn removable_point_is_continuous() {
        let e = ev(0.2, 0.1);
        let dr = e.delta_r();
        let at = e.level_shift(-dr).unwrap();
        let q = dr / (1.0 + dr);
        assert_relative_eq!(at, -0.2 * dr * (1.0 - q).powi(2), max_relative = 1e-14);
        // matching the closed form just outside the series radius
        for s in [0.2499, 0.2501, -0.2499, -0.2501] {
            let w = -dr + s * dr;
            let l = e.level_shift(w).unwrap();
            let r = e.level_shift(w + 1e-9 * dr).unwrap();
            assert!((l - r).abs() < 1e-9 * l.abs(), "jump at offset {s}");
        }
    }

    #[test]
    fn damping_identities() {
        let e = ev(0.2, 0.1);
        assert_eq!(e.damping(0.0), 0.0);
        assert_eq!(e.damping(1.2), 0.0);
        assert_relative_eq!(
            e.damping(e.delta_r()),
            e.model.gamma_ww,
            max_relative = 1e-15
        );
    }

    #[test]
    fn sigma_x_channel_at_origin_and_cutoff() {
        let e = ev(0.2, 0.1);
        let (s, g) = e.sigma_x_channel(0.0).unwrap();
        assert_eq!(s, 0.0);
        assert_relative_eq!(
            g,
            std::f64::consts::PI * 0.2 * e.delta_r(),
            max_relative = 1e-15
        );
        let (_, g) = e.sigma_x_channel(1.0).unwrap();
        assert_eq!(g, 0.0);
        let (lo, hi) = e.sigma_x_support();
        assert_relative_eq!(hi, 1.0 - e.delta_r());
        assert_eq!(lo, -hi);
    }

    #[test]
    fn pinned_pole_at_alpha_0_2() {
        let r = ev(0.2, 0.1).find_pole().unwrap();
        assert_eq!(r.label, RegimeLabel::Underdamped);
        assert_relative_eq!(r.omega0.unwrap(), 0.054_262_750_49, epsilon = 1e-10);
        assert_relative_eq!(r.gamma_at_pole.unwrap(), 0.021_597_392_39, epsilon = 1e-10);
    }

    #[test]
    fn weak_coupling_pole_approaches_delta() {
        let r = ev(1e-7, 0.1).find_pole().unwrap();
        assert_eq!(r.label, RegimeLabel::Underdamped);
        assert!((r.omega0.unwrap() - 0.1).abs() < 1e-6);
        let r = ev(0.0, 0.1).find_pole().unwrap();
        assert_relative_eq!(r.omega0.unwrap(), 0.1, epsilon = 1e-10);
    }

    #[test]
    fn strong_coupling_is_incoherent() {
        let e = ev(0.6, 0.1);
        let r = e.find_pole().unwrap();
        assert_eq!(r.label, RegimeLabel::Incoherent);
        assert!(r.omega0.is_none() && r.gamma_at_pole.is_none());
        assert!(0.6 >= r.alpha_c);
    }

    #[test]
    fn localized_model_is_rejected() {
        assert!(ev(1.5, 0.1).find_pole().is_err());
    }

    #[test]
    fn report_serializes_with_expected_keys() {
        let r = ev(0.2, 0.1).find_pole().unwrap();
        let v = serde_json::to_value(r).unwrap();
        for key in ["omega0", "gamma_at_pole", "alpha_c", "label"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["label"], "underdamped");
        let r = ev(0.6, 0.1).find_pole().unwrap();
        let v = serde_json::to_value(r).unwrap();
        assert!(v["omega0"].is_null());
        assert_eq!(v["label"], "incoherent");
    }

    #[test]
    fn crossover_is_self_consistent() {
        let ac = crossover_coupling(0.1).unwrap();
        let m = ev(ac, 0.1).model;
        assert_relative_eq!(ac, m.alpha_c, epsilon = 1e-10);
    }
}
