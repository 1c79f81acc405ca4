//! The three-variable inequality behind the cyclic certificate.
//!
//! For `0 < t < 1` and positive `x` with `x1 x2 x3 = 1`, `x != (1,1,1)`:
//!
//! ```text
//! f(x) = (1 - sum_i 1/d_i) / (1/d_1 + 1/d_2 - 4/(d_1 d_2) - 1/(d_1 d_3) - 1/(d_2 d_3)) >= 1 - t
//! ```
//!
//! with `d_i = 3 - t + t x_i`. Clearing denominators turns this into `g(x) >= 0`
//! for the polynomial `g` below, whose constrained minimum is `g(1,1,1) = 0`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WitnessError};
use crate::positivity::seeded_rng;

const PRODUCT_TOL: f64 = 1e-12;
/// Points closer than this to `(1,1,1)` (max-norm) are excluded from `f` statistics.
pub const EXCLUSION_RADIUS: f64 = 1e-6;
/// Tolerance on `bound >= 1 - t`.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPoint {
    x: [f64; 3],
    t: f64,
}

impl ConstraintPoint {
    pub fn new(x: [f64; 3], t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(WitnessError::OutOfRange(format!("t = {t} outside (0, 1)")));
        }
        if x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(WitnessError::OutOfRange(format!(
                "{x:?} has a non-positive coordinate"
            )));
        }
        let prod = x[0] * x[1] * x[2];
        if (prod - 1.0).abs() > PRODUCT_TOL {
            return Err(WitnessError::OutOfRange(format!(
                "x1 x2 x3 = {prod}, expected 1"
            )));
        }
        Ok(Self { x, t })
    }

    /// `(e^{u1}, e^{u2}, e^{-u1-u2})`, which lies on the surface by construction.
    pub fn from_log(u1: f64, u2: f64, t: f64) -> Result<Self> {
        let x3 = (-u1 - u2).exp();
        let mut p = Self::new([u1.exp(), u2.exp(), x3], t);
        if p.is_err() {
            // Rounding in exp can leave the product a few ulps off at large |u|.
            let (a, b) = (u1.exp(), u2.exp());
            p = Self::new([a, b, 1.0 / (a * b)], t);
        }
        p
    }

    pub fn x(&self) -> [f64; 3] {
        self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn is_degenerate(&self, radius: f64) -> bool {
        self.x.iter().all(|&v| (v - 1.0).abs() <= radius)
    }
}

/// `(2t^2-2t-3) + (1-t)(x1+x2) + (1-t^2) x3 + (2t-t^2) x1 x2 + t x3 (x1 + x2)`.
pub fn g_poly(t: f64, x: &[f64; 3]) -> f64 {
    let [x1, x2, x3] = *x;
    (2.0 * t * t - 2.0 * t - 3.0)
        + (1.0 - t) * x1
        + (1.0 - t) * x2
        + (1.0 - t * t) * x3
        + (2.0 * t - t * t) * x1 * x2
        + t * x2 * x3
        + t * x1 * x3
}

pub fn g_gradient(t: f64, x: &[f64; 3]) -> [f64; 3] {
    let [x1, x2, x3] = *x;
    [
        (1.0 - t) + (2.0 * t - t * t) * x2 + t * x3,
        (1.0 - t) + (2.0 * t - t * t) * x1 + t * x3,
        (1.0 - t * t) + t * x2 + t * x1,
    ]
}

pub fn g_value(p: &ConstraintPoint) -> f64 {
    g_poly(p.t, &p.x)
}

/// Numerator and denominator of `f`.
pub fn f_parts(t: f64, x: &[f64; 3]) -> (f64, f64) {
    let d = x.map(|v| 3.0 - t + t * v);
    let num = 1.0 - d.iter().map(|v| 1.0 / v).sum::<f64>();
    let den =
        1.0 / d[0] + 1.0 / d[1] - 4.0 / (d[0] * d[1]) - 1.0 / (d[0] * d[2]) - 1.0 / (d[1] * d[2]);
    (num, den)
}

pub fn f_value(p: &ConstraintPoint) -> Result<f64> {
    let (num, den) = f_parts(p.t, &p.x);
    if p.is_degenerate(PRODUCT_TOL) || den == 0.0 {
        return Err(WitnessError::DegeneratePoint);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub t: f64,
    pub samples: usize,
    pub min_g: f64,
    pub min_f_gap: f64,
    pub argmin: [f64; 3],
    pub excluded: usize,
    /// Samples where `g` and `f - (1 - t)` have strictly opposite signs.
    pub sign_mismatches: usize,
}

#[derive(Clone, Copy)]
struct ScanAcc {
    min_g: f64,
    argmin: [f64; 3],
    min_gap: f64,
    excluded: usize,
    mismatches: usize,
}

impl ScanAcc {
    const EMPTY: Self = Self {
        min_g: f64::INFINITY,
        argmin: [f64::NAN; 3],
        min_gap: f64::INFINITY,
        excluded: 0,
        mismatches: 0,
    };

    fn merge(self, o: Self) -> Self {
        let (min_g, argmin) = if o.min_g < self.min_g {
            (o.min_g, o.argmin)
        } else {
            (self.min_g, self.argmin)
        };
        Self {
            min_g,
            argmin,
            min_gap: self.min_gap.min(o.min_gap),
            excluded: self.excluded + o.excluded,
            mismatches: self.mismatches + o.mismatches,
        }
    }
}

const SCAN_CHUNK: usize = 4096;
const SIGN_TOL: f64 = 1e-12;

/// Log-uniform scan of the constraint surface with `u1, u2 ~ U[-l, l]`.
pub fn constrained_scan(t: f64, samples: usize, l: f64, seed: u64) -> Result<ScanReport> {
    constrained_scan_with_exclusion(t, samples, l, seed, EXCLUSION_RADIUS)
}

pub fn constrained_scan_with_exclusion(
    t: f64,
    samples: usize,
    l: f64,
    seed: u64,
    exclusion: f64,
) -> Result<ScanReport> {
    if !(t > 0.0 && t < 1.0) {
        return Err(WitnessError::OutOfRange(format!("t = {t} outside (0, 1)")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(WitnessError::OutOfRange(format!("L = {l}")));
    }
    if samples == 0 {
        return Err(WitnessError::EmptyInput("samples"));
    }
    let acc = (0..samples.div_ceil(SCAN_CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(seed, k as u64);
            let mut acc = ScanAcc::EMPTY;
            for _ in (k * SCAN_CHUNK)..((k + 1) * SCAN_CHUNK).min(samples) {
                let p = ConstraintPoint::from_log(
                    rng.random_range(-l..=l),
                    rng.random_range(-l..=l),
                    t,
                )
                .expect("log parametrization stays on the surface");
                let g = g_value(&p);
                if g < acc.min_g {
                    acc.min_g = g;
                    acc.argmin = p.x;
                }
                if p.is_degenerate(exclusion) {
                    acc.excluded += 1;
                    continue;
                }
                let (num, den) = f_parts(t, &p.x);
                let gap = num / den - (1.0 - t);
                acc.min_gap = acc.min_gap.min(gap);
                if (g > SIGN_TOL && gap < -SIGN_TOL) || (g < -SIGN_TOL && gap > SIGN_TOL) {
                    acc.mismatches += 1;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ScanAcc::EMPTY, ScanAcc::merge);
    Ok(ScanReport {
        t,
        samples,
        min_g: acc.min_g,
        min_f_gap: acc.min_gap,
        argmin: acc.argmin,
        excluded: acc.excluded,
        sign_mismatches: acc.mismatches,
    })
}

/// The four partial derivatives of `g + lambda (x1 x2 x3 - 1)`.
pub fn lagrange_residual(t: f64, x: &[f64; 3], lambda: f64) -> [f64; 4] {
    let [x1, x2, x3] = *x;
    let g = g_gradient(t, x);
    [
        g[0] + lambda * x2 * x3,
        g[1] + lambda * x1 * x3,
        g[2] + lambda * x1 * x2,
        x1 * x2 * x3 - 1.0,
    ]
}

/// `lambda` solving the `x3` equation of the Lagrange system at `x`.
pub fn stationary_multiplier(t: f64, x: &[f64; 3]) -> f64 {
    -g_gradient(t, x)[2] / (x[0] * x[1])
}

/// The `x3` forced by the branch `2t - t^2 + lambda x3 = 0`; negative for `0 < t < 1`.
pub fn asymmetric_branch_x3(t: f64) -> f64 {
    (t - 1.0) / t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarticCheck {
    /// `(x1 - 1) * bracket`.
    pub lhs: f64,
    /// `(2t-t^2) x1^3 + (1+t-t^2)(x1^2 + x1) + (1-t^2)`.
    pub bracket: f64,
    /// `(2t-t^2) x1^4 + (1-t) x1^3 - t x1 + (t^2-1)`.
    pub expanded: f64,
}

/// Stationarity on the diagonal `x1 = x2`, `x3 = 1/x1^2`, in factored and expanded form.
pub fn quartic_factor_check(t: f64, x1: f64) -> QuarticCheck {
    let a = 2.0 * t - t * t;
    let b = 1.0 + t - t * t;
    let d = 1.0 - t * t;
    let bracket = ((a * x1 + b) * x1 + b) * x1 + d;
    QuarticCheck {
        lhs: (x1 - 1.0) * bracket,
        bracket,
        expanded: a * x1.powi(4) + (1.0 - t) * x1.powi(3) - t * x1 + (t * t - 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundCase {
    /// No zero component; `r = (r1, r2, r3)` with product 1.
    S2,
    /// `x1 = 0`; `r = (r2)`.
    S3,
    /// `x2 = 0`; `r = (r3)`.
    S4,
    /// `x3 = 0`; `r = (r1)`.
    S5,
}

impl BoundCase {
    pub fn arity(self) -> usize {
        match self {
            BoundCase::S2 => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubcaseBound {
    pub c2_bound: f64,
    pub ge_1mt: bool,
}

/// Largest `c^2` with `||F_x F_x^dagger|| <= 1` in the given zero pattern.
pub fn subcase_bound(which: BoundCase, t: f64, r: &[f64]) -> Result<SubcaseBound> {
    if !(t > 0.0 && t < 1.0) {
        return Err(WitnessError::OutOfRange(format!("t = {t} outside (0, 1)")));
    }
    if r.len() != which.arity() {
        return Err(WitnessError::DimensionMismatch(format!(
            "{which:?} takes {} ratio(s), got {}",
            which.arity(),
            r.len()
        )));
    }
    if r.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(WitnessError::OutOfRange(format!(
            "{r:?} has a non-positive ratio"
        )));
    }
    let s = |v: f64| v / (t + (3.0 - t) * v);
    let b = 1.0 / (3.0 - t);
    let c2_bound = match which {
        BoundCase::S2 => {
            let prod = r[0] * r[1] * r[2];
            if (prod - 1.0).abs() > PRODUCT_TOL {
                return Err(WitnessError::OutOfRange(format!(
                    "r1 r2 r3 = {prod}, expected 1"
                )));
            }
            if r.iter().all(|&v| (v - 1.0).abs() <= PRODUCT_TOL) {
                return Err(WitnessError::DegeneratePoint);
            }
            let (s1, s2, s3) = (s(r[0]), s(r[1]), s(r[2]));
            let rest = 1.0 - s1 - s2 - s3;
            rest / (rest * (s1 + s2) + (s1 - s2) * (s1 - s2))
        }
        BoundCase::S3 => {
            let a = s(r[0]);
            (1.0 - a - b) / (a * (1.0 - b))
        }
        BoundCase::S4 => {
            let a = s(r[0]);
            (1.0 - a - b) / (b * (1.0 - a))
        }
        BoundCase::S5 => {
            let a = s(r[0]);
            let rest = 1.0 - a - b;
            rest / (rest * (a + b) + (a - b) * (a - b))
        }
    };
    Ok(SubcaseBound {
        c2_bound,
        ge_1mt: c2_bound >= (1.0 - t) - BOUND_TOL,
    })
}
