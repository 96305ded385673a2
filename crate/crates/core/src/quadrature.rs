//! Globally adaptive Gauss-Kronrod quadrature over a set of panels.
//!
//! The dynamics integrals are quasi-Lorentzian peaks multiplied by cosines
//! and sprinkled with integrable logarithmic singularities, so the caller
//! supplies breakpoints at every known feature and the engine bisects the
//! panel with the largest error estimate until the global tolerance is met.
//! No extrapolation is attempted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_062_165_670,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

/// Tolerances and work limits for [`integrate_panels`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        // the Kronrod error floor is 50 eps |I|; ask for no less than that
        let floor = T::epsilon() * T::lit(100.0);
        Self {
            abs: T::lit(1e-10).max(floor),
            rel: T::lit(1e-10).max(floor),
            max_intervals: 20_000,
        }
    }
}

/// One application of the 21-point Kronrod rule on `[a, b]`.
pub fn kronrod21<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let center = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    let f_center = f(center);
    let mut res_k = f_center * T::lit(WGK[10]);
    let mut res_g = T::zero();
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * T::lit(0.5);
    let mut res_asc = T::lit(WGK[10]) * (f_center - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let h = half.abs();
    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    (value, err)
}

fn rescale_error<T: Real>(err: T, res_abs: T, res_asc: T) -> T {
    let mut scaled = err.abs();
    if res_asc != T::zero() && scaled != T::zero() {
        let scale = (T::lit(200.0) * scaled / res_asc).powf(T::lit(1.5));
        scaled = if scale < T::one() {
            res_asc * scale
        } else {
            res_asc
        };
    }
    let tiny = T::min_positive_value() / (T::lit(50.0) * T::epsilon());
    if res_abs > tiny {
        let floor = T::lit(50.0) * T::epsilon() * res_abs;
        if floor > scaled {
            scaled = floor;
        }
    }
    scaled
}

struct Interval<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    // insertion counter, keeps heap order deterministic on ties
    seq: usize,
}

impl<T: Real> PartialEq for Interval<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Interval<T> {}
impl<T: Real> PartialOrd for Interval<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Interval<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Integrates `f` over the union of consecutive panels `[p0,p1], [p1,p2], ...`.
///
/// `breakpoints` must be sorted; duplicate points are skipped. Returns
/// [`Error::Quadrature`] with the achieved estimate when the interval budget
/// is exhausted before the tolerance `max(abs, rel*|I|)` is reached.
pub fn integrate_panels<T: Real, F: Fn(T) -> T>(
    f: F,
    breakpoints: &[T],
    tol: Tolerance<T>,
) -> Result<Estimate<T>> {
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = T::zero();
    let mut seq = 0usize;
    let mut evaluations = 0usize;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error) = kronrod21(&f, a, b);
        evaluations += 21;
        total = total + value;
        total_err = total_err + error;
        heap.push(Interval {
            a,
            b,
            value,
            error,
            seq,
        });
        seq += 1;
    }
    let min_width = T::epsilon() * T::lit(64.0);
    // error of intervals too narrow to split; reported but no longer driven down
    let mut frozen_err = T::zero();
    loop {
        let target = tol.abs.max(tol.rel * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                estimate: total.as_f64(),
                error: total_err.as_f64(),
            });
        }
        let worst = match heap.pop() {
            Some(iv) => iv,
            None => break,
        };
        let mid = (worst.a + worst.b) * T::lit(0.5);
        let scale = worst.a.abs().max(worst.b.abs()).max(T::one());
        if worst.b - worst.a <= min_width * scale {
            total_err = total_err - worst.error;
            frozen_err = frozen_err + worst.error;
            heap.push(Interval {
                error: T::zero(),
                ..worst
            });
            continue;
        }
        let (v1, e1) = kronrod21(&f, worst.a, mid);
        let (v2, e2) = kronrod21(&f, mid, worst.b);
        evaluations += 42;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            seq,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            seq: seq + 1,
        });
        seq += 2;
        // re-sum periodically so cancellation in the running totals cannot drift
        if seq.is_multiple_of(512) {
            total = heap.iter().map(|iv| iv.value).sum();
            total_err = heap.iter().map(|iv| iv.error).sum();
        }
    }
    // final deterministic summation in panel order
    let mut ivs: Vec<_> = heap.into_vec();
    ivs.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let value = ivs.iter().map(|iv| iv.value).sum();
    let error = ivs.iter().map(|iv| iv.error).sum::<T>() + frozen_err;
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Adaptive integration of `f` on `[a, b]` without interior breakpoints.
pub fn integrate<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: Tolerance<T>,
) -> Result<Estimate<T>> {
    integrate_panels(f, &[a, b], tol)
}

/// Sorts, clips to `[lo, hi]` and deduplicates candidate breakpoints,
/// then splits any panel wider than `max_width`.
pub fn build_breakpoints<T: Real>(lo: T, hi: T, candidates: &[T], max_width: Option<T>) -> Vec<T> {
    let mut pts: Vec<T> = candidates
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    pts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(4.0) * a.abs().max(T::one()));
    let Some(width) = max_width.filter(|w| *w > T::zero()) else {
        return pts;
    };
    let mut out = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        out.push(a);
        let n = ((b - a) / width).ceil().to_usize().unwrap_or(1).max(1);
        for k in 1..n {
            out.push(a + (b - a) * T::from_index(k) / T::from_index(n));
        }
    }
    out.push(hi);
    out
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::lit(-x);
        nodes[n - 1 - i] = T::lit(x);
        weights[i] = T::lit(w);
        weights[n - 1 - i] = T::lit(w);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
