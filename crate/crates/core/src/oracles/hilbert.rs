//! Numerical principal-value Hilbert transform of the damping function,
//! used to check the closed-form level shift.
//!
//! ```text
//! R(w) = PV int_0^wc (gamma(w') / pi) / (w - w') dw'
//! ```

use crate::error::{Error, Result};
use crate::quadrature::{build_breakpoints, integrate_panels, Tolerance};
use crate::scalar::Real;
use crate::self_energy::SelfEnergy;

/// Points closer than this (relative to `wc`) to the cutoff are rejected.
pub const CUTOFF_EXCLUSION: f64 = 1e-6;
const GRADING_LEVELS: i32 = 40;

/// Principal-value integral by singularity subtraction.
///
/// Inside `(0, wc)` the pole is removed by subtracting `gamma(w)`, and the
/// subtracted piece is added back analytically as
/// `(gamma(w)/pi) ln|w / (w - wc)|`. Elsewhere the integrand is regular.
pub fn pv_hilbert<T: Real>(omega: T, eval: &SelfEnergy<T>) -> Result<T> {
    let wc = eval.omega_c();
    if !omega.is_finite() || (omega - wc).abs() < T::lit(CUTOFF_EXCLUSION) * wc {
        return Err(Error::Singular {
            omega: omega.as_f64(),
            which: "principal value too close to the cutoff",
        });
    }
    if eval.alpha() == T::zero() {
        return Ok(T::zero());
    }
    let pi = T::PI();
    let dr = eval.delta_r();
    let two = T::lit(2.0);
    let mut cands = Vec::new();
    for k in 0..GRADING_LEVELS {
        let s = two.powi(-k);
        cands.push(dr * s);
        cands.push(dr / s);
    }
    let inside = omega > T::zero() && omega < wc;
    // grade towards the point where the integrand is least smooth
    let focus = if inside {
        omega
    } else if omega > wc {
        wc
    } else {
        T::zero()
    };
    let reach = if inside {
        omega.min(wc - omega)
    } else {
        (omega - focus).abs()
    };
    for k in 0..GRADING_LEVELS {
        let d = reach * two.powi(-k);
        cands.push(focus - d);
        cands.push(focus + d);
    }
    cands.push(focus);
    let brk = build_breakpoints(T::zero(), wc, &cands, None);
    let tol = Tolerance {
        abs: T::tol(1e-15),
        rel: T::tol(1e-12),
        max_intervals: 20_000,
    };
    if inside {
        let g0 = eval.damping(omega);
        let smooth = integrate_panels(
            |w| {
                if w == omega {
                    return T::zero();
                }
                (eval.damping(w) - g0) / (pi * (omega - w))
            },
            &brk,
            tol,
        )?;
        Ok(smooth.value + g0 / pi * (omega / (omega - wc)).abs().ln())
    } else {
        let direct = integrate_panels(|w| eval.damping(w) / (pi * (omega - w)), &brk, tol)?;
        Ok(direct.value)
    }
}
