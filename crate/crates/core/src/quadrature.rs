//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The error estimate of each panel is the raw difference between the
//! Kronrod and Gauss rules, which overestimates the error of the Kronrod
//! value once the integrand is resolved.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {target:.3e} after {intervals} panels (estimate {value}, error {error:.3e})")]
    NotConverged {
        value: f64,
        error: f64,
        target: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("invalid integration range [{a}, {b}]")]
    BadRange { a: f64, b: f64 },
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

/// Tolerance and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-12,
            max_intervals: 20_000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Default::default()
        }
    }

    pub fn halved(self) -> Self {
        Self {
            abs: self.abs / 2.0,
            rel: self.rel / 2.0,
            max_intervals: self.max_intervals * 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: c });
    }
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let (x1, x2) = (c - dx, c + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: x2 });
        }
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Integrates `f` over `[a, b]`, with extra interior breakpoints.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadError::BadRange { a, b });
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            intervals: 0,
        });
    }
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        let (value, error) = kronrod(&mut f, w[0], w[1])?;
        evaluations += 15;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let min_width = 1e-14 * (b - a).max(b.abs().max(a.abs()) * 1e-2);
    loop {
        let (value, error) = totals(&heap);
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadError::NotConverged {
                value,
                error,
                target,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("at least one panel");
        if worst.b - worst.a < min_width {
            // unresolvable at working precision; keep its estimate
            heap.push(Panel { error: 0.0, ..worst });
            let (value, e2) = totals(&heap);
            if e2 + worst.error <= target {
                return Ok(QuadResult {
                    value,
                    error: e2 + worst.error,
                    evaluations,
                    intervals: heap.len(),
                });
            }
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod(&mut f, worst.a, mid)?;
        let (v2, e2) = kronrod(&mut f, mid, worst.b)?;
        evaluations += 30;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    // panel order in the heap is deterministic for a deterministic integrand,
    // but sum in sorted position order so the total is independent of it
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut v = crate::special::NeumaierSum::default();
    let mut e = 0.0;
    for p in panels {
        v.add(p.value);
        e += p.error;
    }
    (v.value(), e)
}

/// Integral over `[a, ∞)` of a function with a known tail envelope.
///
/// `tail(s)` must bound `∫_s^∞ |f|`; the range is cut at the first
/// `s = a + k·step` where the bound drops below `tail_tol` and the bound is
/// added to the reported error.
pub fn integrate_to_infinity<F, T>(
    f: F,
    a: f64,
    breakpoints: &[f64],
    tail: T,
    tail_tol: f64,
    tol: Tolerance,
) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut upper = a + 1.0;
    while tail(upper) > tail_tol {
        upper += 1.0;
        if upper > a + 1e4 {
            return Err(QuadError::BadRange { a, b: upper });
        }
    }
    let mut r = integrate(f, a, upper, breakpoints, tol)?;
    r.error += tail(upper);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, &[], Tolerance::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let r = integrate(f64::sqrt, 0.0, 1.0, &[], Tolerance::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
        assert!(r.error < 1e-11);
    }

    #[test]
    fn log_singularity_with_breakpoint() {
        let r = integrate(
            |x: f64| (x - 0.3).abs().ln(),
            0.0,
            1.0,
            &[0.3],
            Tolerance::new(1e-11, 1e-11),
        )
        .unwrap();
        let exact = 0.3 * 0.3f64.ln() - 0.3 + 0.7 * 0.7f64.ln() - 0.7;
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn gaussian_to_infinity() {
        let r = integrate_to_infinity(
            |x| (-x * x).exp(),
            0.0,
            &[],
            |s| (-s * s).exp() / (2.0 * s),
            1e-18,
            Tolerance::new(1e-14, 1e-14),
        )
        .unwrap();
        assert!((r.value - PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 0.0,
            max_intervals: 4,
        };
        let e = integrate(|x: f64| (1.0 / x).sin(), 1e-3, 1.0, &[], tol).unwrap_err();
        assert!(matches!(e, QuadError::NotConverged { .. }));
    }

    #[test]
    fn non_finite_is_an_error() {
        let e = integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0, &[], Tolerance::default()).unwrap_err();
        assert!(matches!(e, QuadError::NonFinite { .. }));
    }
}
