//! Optimality of the qutrit witnesses `W_{Phi_{t,pi}}`.
//!
//! A witness `W_Phi` is optimal iff no nonzero `C` makes `X -> Phi(X) - C X C^dagger`
//! positive. For `n = 3` the outcome is:
//!
//! * `l(pi) = 1`: `Phi` is completely positive, so `W` is not a witness at all;
//! * `l(pi) = 2`: `W = A + B^{T_B}` with `A, B >= 0` and `A != 0`, hence not optimal;
//! * `l(pi) = 3`, `t < 1`: `C_0 = diag(c, -c, 0)` with `c^2 <= 1 - t` can be subtracted;
//! * `l(pi) = 3`, `t = 1`: optimal.
//!
//! The third case is certified pointwise: for every unit `x` there is a 2×6
//! local coefficient matrix `F_x` expressing `(I x, C_0 x)` through the
//! generators `sqrt(3-t) E_ii x` and `sqrt(t) E_{i,i+1} x`, and positivity of the
//! subtracted map follows from `||F_x|| <= 1` everywhere.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtype_map::{DTypeMap, Witness};
use crate::error::{Result, WitnessError};
use crate::linalg::{
    hermitian_eig, kron, kron_vec, min_eigenvalue, normalize, partial_transpose, vec_norm,
    ComplexMatrix, Subsystem, C64, EIG_TOL, ZERO,
};
use crate::perm::Permutation;
use crate::positivity::{
    closed_form_positive, is_ppt, numeric_block_positivity, positivity_threshold, random_unit,
    seeded_rng, PositivityStatus, SearchConfig, PSD_TOL,
};

/// Components with modulus below this are treated as exact zeros.
pub const ZERO_COMPONENT_TOL: f64 = 1e-12;
/// `||F_x F_x^dagger|| <= 1 + CONTRACTION_TOL` counts as contractive.
pub const CONTRACTION_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-9;
const T_ONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimalityReason {
    #[serde(rename = "Cyclic_t1")]
    CyclicT1,
    CompletelyPositive,
    #[serde(rename = "Decomposable_l2")]
    DecomposableL2,
    #[serde(rename = "Certificate_l3_smallt")]
    CertificateL3SmallT,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityVerdict {
    pub optimal: bool,
    pub reason: OptimalityReason,
    pub certificate: Option<ComplexMatrix>,
}

/// Optimality of `W_{Phi_{t,pi}}` on `M_3`.
///
/// Errors with `NotAWitness` when the map is completely positive (`t = 0` or
/// `pi = id`) and `NotPositive` when `t > 3 / l(pi)`.
pub fn optimality_verdict(t: f64, p: &Permutation) -> Result<OptimalityVerdict> {
    if p.n() != 3 {
        return Err(WitnessError::DimensionMismatch(format!(
            "optimality classification is for n = 3, got n = {}",
            p.n()
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(WitnessError::OutOfRange(format!("t = {t}")));
    }
    if !closed_form_positive(3, t, p) {
        return Err(WitnessError::NotPositive {
            t,
            threshold: positivity_threshold(3, p),
        });
    }
    let length = p.length();
    if t == 0.0 || length == 1 {
        return Err(WitnessError::NotAWitness(
            "the map is completely positive, so its Choi matrix is PSD".into(),
        ));
    }
    if length == 2 {
        return Ok(OptimalityVerdict {
            optimal: false,
            reason: OptimalityReason::DecomposableL2,
            certificate: None,
        });
    }
    if (t - 1.0).abs() <= T_ONE_TOL {
        return Ok(OptimalityVerdict {
            optimal: true,
            reason: OptimalityReason::CyclicT1,
            certificate: None,
        });
    }
    Ok(OptimalityVerdict {
        optimal: false,
        reason: OptimalityReason::CertificateL3SmallT,
        certificate: Some(c0_certificate(t, (1.0 - t).sqrt())?),
    })
}

// ---------------------------------------------------------------------------
// Transposition case: explicit decompositions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitBranch {
    HighT,
    LowT,
}

/// `W = positive_part + ppt_part`, where `positive_part >= 0` and
/// `ppt_part^{T_B} >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSplit {
    pub positive_part: ComplexMatrix,
    pub ppt_part: ComplexMatrix,
    pub branch: SplitBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitCheck {
    pub sum_error: f64,
    pub positive_min_eig: f64,
    pub ppt_part_pt_min_eig: f64,
    pub ppt: bool,
    pub positive_nonzero: bool,
    pub ok: bool,
}

impl DecompositionSplit {
    pub fn check(&self, w: &Witness) -> SplitCheck {
        let sum = &self.positive_part + &self.ppt_part;
        let sum_error = sum.max_abs_diff(w.matrix());
        let positive_min_eig = min_eigenvalue(&self.positive_part).expect("Hermitian part");
        let pt = partial_transpose(&self.ppt_part, 3, 3, Subsystem::B).expect("9x9 part");
        let ppt_part_pt_min_eig = min_eigenvalue(&pt).expect("Hermitian part");
        let ppt = is_ppt(&self.ppt_part, 3, 3).expect("9x9 part");
        let positive_nonzero = self.positive_part.frobenius_norm() > 0.0;
        SplitCheck {
            sum_error,
            positive_min_eig,
            ppt_part_pt_min_eig,
            ppt,
            positive_nonzero,
            ok: sum_error <= 1e-14 && positive_min_eig >= -PSD_TOL && ppt && positive_nonzero,
        }
    }
}

fn e3(i: usize, j: usize) -> ComplexMatrix {
    ComplexMatrix::unit(3, i, j)
}

fn ee(i: usize, j: usize) -> ComplexMatrix {
    kron(&e3(i, j), &e3(i, j))
}

/// `(2-t) E11(x)E11 + (2-t) E22(x)E22 + 2 E33(x)E33 - sum_{i != j, pi(i) != j} E_ij (x) E_ij`
/// for `pi = (12)` (0-based indices below).
fn diagonal_core(t: f64) -> ComplexMatrix {
    let mut m = &(&ee(0, 0).scale_real(2.0 - t) + &ee(1, 1).scale_real(2.0 - t))
        + &ee(2, 2).scale_real(2.0);
    for (i, j) in [(0, 2), (2, 0), (1, 2), (2, 1)] {
        m = &m - &ee(i, j);
    }
    m
}

fn swap_block(t: f64, off: f64) -> ComplexMatrix {
    let diag =
        &kron(&e3(1, 1), &e3(0, 0)).scale_real(t) + &kron(&e3(0, 0), &e3(1, 1)).scale_real(t);
    &diag - &(&ee(0, 1) + &ee(1, 0)).scale_real(off)
}

/// `(C_1, C_2)` for `pi = (12)`: the core minus the two `pi`-matched off-diagonal
/// terms, which go to `C_2`.
///
/// `C_2^{T_B} >= 0` for `t >= 1`, but `C_1` restricted to
/// `span{|11>,|22>,|33>}` has determinant `2(2-t)(1-t)`, so `C_1` is PSD only
/// at `t = 1`. Kept for comparison; [`case2_split`] uses [`d_form_split`].
pub fn c_form_split(t: f64) -> (ComplexMatrix, ComplexMatrix) {
    (diagonal_core(t), swap_block(t, 1.0))
}

/// `(D_1, D_2)` for `pi = (12)`, valid for all `0 < t <= 3/2`:
/// `D_1 = core - (1-t)(E12(x)E12 + E21(x)E21)`, `D_2 = t (E22(x)E11 + E11(x)E22 - E12(x)E12 - E21(x)E21)`.
pub fn d_form_split(t: f64) -> (ComplexMatrix, ComplexMatrix) {
    let d1 = &diagonal_core(t) - &(&ee(0, 1) + &ee(1, 0)).scale_real(1.0 - t);
    (d1, swap_block(t, t))
}

/// Decomposition of the Choi matrix for a transposition `pi`.
///
/// The formulas are written for `pi = (12)` and moved to `(13)`/`(23)` by
/// conjugating with `P (x) P`, `P` the relabelling permutation matrix.
pub fn case2_split(t: f64, p: &Permutation) -> Result<DecompositionSplit> {
    if p.n() != 3 {
        return Err(WitnessError::DimensionMismatch(
            "case2_split is for n = 3".into(),
        ));
    }
    let length = p.length();
    if length != 2 {
        return Err(WitnessError::WrongLoopStructure {
            length,
            expected: 2,
        });
    }
    if !(t > 0.0 && t <= 1.5) {
        return Err(WitnessError::OutOfRange(format!(
            "t = {t} outside (0, 3/2]"
        )));
    }
    let branch = if t >= 1.0 {
        SplitBranch::HighT
    } else {
        SplitBranch::LowT
    };
    let (pos, ppt) = d_form_split(t);

    // sigma sends 1 -> a, 2 -> b, 3 -> fixed point, where pi swaps a and b.
    let fixed = (0..3)
        .find(|&i| p.apply(i) == i)
        .expect("transposition fixes a point");
    let mut moved = (0..3).filter(|&i| i != fixed);
    let (a, b) = (moved.next().unwrap(), moved.next().unwrap());
    let sigma = Permutation::from_one_based(&{
        let mut img = [0usize; 3];
        img[0] = a + 1;
        img[1] = b + 1;
        img[2] = fixed + 1;
        img
    })?;
    let s = sigma.matrix();
    let ss = kron(&s, &s);
    let conj = |m: &ComplexMatrix| &(&ss * m) * &ss.adjoint();
    Ok(DecompositionSplit {
        positive_part: conj(&pos),
        ppt_part: conj(&ppt),
        branch,
    })
}

// ---------------------------------------------------------------------------
// Cyclic case: the C_0 certificate and local coefficient matrices
// ---------------------------------------------------------------------------

/// `C_0 = diag(c, -c, 0)`, valid for `0 < t < 1`, `0 < c^2 <= 1 - t`.
pub fn c0_certificate(t: f64, c: f64) -> Result<ComplexMatrix> {
    check_certificate_range(t, c)?;
    Ok(ComplexMatrix::real_diag(&[c, -c, 0.0]))
}

fn check_certificate_range(t: f64, c: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(WitnessError::OutOfCertificateRange(format!(
            "t = {t} outside (0, 1)"
        )));
    }
    // One ulp of slack so that c = sqrt(1 - t) is accepted.
    if !(c > 0.0 && c * c <= (1.0 - t) * (1.0 + 4.0 * f64::EPSILON)) {
        return Err(WitnessError::OutOfCertificateRange(format!(
            "c = {c}: need 0 < c^2 <= 1 - t = {}",
            1.0 - t
        )));
    }
    Ok(())
}

/// Zero pattern of a unit vector in `C^3`, labelled as in the case analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Subcase {
    /// All moduli equal to `1/sqrt(3)`.
    S1,
    /// No zero component, moduli not all equal.
    S2,
    /// `x_1 = 0` only.
    S3,
    /// `x_2 = 0` only.
    S4,
    /// `x_3 = 0` only.
    S5,
    /// Only `x_3 != 0`.
    S6,
    /// Only `x_2 != 0`.
    S7,
    /// Only `x_1 != 0`.
    S8,
}

impl Subcase {
    pub const ALL: [Subcase; 8] = [
        Subcase::S1,
        Subcase::S2,
        Subcase::S3,
        Subcase::S4,
        Subcase::S5,
        Subcase::S6,
        Subcase::S7,
        Subcase::S8,
    ];

    pub fn classify(x: &[C64; 3]) -> Option<Subcase> {
        let zero = x.map(|z| z.norm() < ZERO_COMPONENT_TOL);
        Some(match zero {
            [false, false, false] => {
                let third = 1.0 / 3.0;
                if x.iter()
                    .all(|z| (z.norm_sqr() - third).abs() < ZERO_COMPONENT_TOL)
                {
                    Subcase::S1
                } else {
                    Subcase::S2
                }
            }
            [true, false, false] => Subcase::S3,
            [false, true, false] => Subcase::S4,
            [false, false, true] => Subcase::S5,
            [true, true, false] => Subcase::S6,
            [true, false, true] => Subcase::S7,
            [false, true, true] => Subcase::S8,
            [true, true, true] => return None,
        })
    }

    /// A fixed unit vector with this zero pattern.
    pub fn representative(self) -> [C64; 3] {
        let r = |v: [f64; 3]| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            v.map(|a| C64::new(a / n, 0.0))
        };
        match self {
            Subcase::S1 => r([1.0, 1.0, 1.0]),
            Subcase::S2 => r([1.0, 2.0, 3.0]),
            Subcase::S3 => r([0.0, 1.0, 2.0]),
            Subcase::S4 => r([2.0, 0.0, 1.0]),
            Subcase::S5 => r([1.0, 3.0, 0.0]),
            Subcase::S6 => r([0.0, 0.0, 1.0]),
            Subcase::S7 => r([0.0, 1.0, 0.0]),
            Subcase::S8 => r([1.0, 0.0, 0.0]),
        }
    }

    /// A random unit vector with this zero pattern (random phases, and random
    /// moduli where the pattern leaves them free).
    pub fn sample(self, rng: &mut impl Rng) -> [C64; 3] {
        let phase =
            |rng: &mut dyn rand::RngCore| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        let support: [bool; 3] = match self {
            Subcase::S1 => {
                let a = 1.0 / 3f64.sqrt();
                return [phase(rng) * a, phase(rng) * a, phase(rng) * a];
            }
            Subcase::S2 => [true, true, true],
            Subcase::S3 => [false, true, true],
            Subcase::S4 => [true, false, true],
            Subcase::S5 => [true, true, false],
            Subcase::S6 => [false, false, true],
            Subcase::S7 => [false, true, false],
            Subcase::S8 => [true, false, false],
        };
        let mut v: Vec<C64> = support
            .iter()
            .map(|&s| {
                if s {
                    phase(rng) * rng.random_range(0.05..1.0)
                } else {
                    ZERO
                }
            })
            .collect();
        normalize(&mut v);
        [v[0], v[1], v[2]]
    }
}

/// Local coefficients at `x`: row one `(alpha, beta)` expresses `x`, row two
/// `(delta, gamma)` expresses `C_0 x`, both against the generators
/// `sqrt(3-t) E_ii` (weights `alpha`/`delta`) and `sqrt(t) E_{i,i+1}` (weights `beta`/`gamma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientMatrix {
    pub alpha: [C64; 3],
    pub beta: [C64; 3],
    pub delta: [C64; 3],
    pub gamma: [C64; 3],
    pub subcase: Subcase,
}

impl CoefficientMatrix {
    /// `F_x` as a 2×6 matrix.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut data = Vec::with_capacity(12);
        data.extend_from_slice(&self.alpha);
        data.extend_from_slice(&self.beta);
        data.extend_from_slice(&self.delta);
        data.extend_from_slice(&self.gamma);
        ComplexMatrix::new(2, 6, data).expect("2x6")
    }

    /// `F_x F_x^dagger`.
    pub fn gram(&self) -> ComplexMatrix {
        let row1: Vec<C64> = self.alpha.iter().chain(&self.beta).copied().collect();
        let row2: Vec<C64> = self.delta.iter().chain(&self.gamma).copied().collect();
        let dot =
            |u: &[C64], v: &[C64]| -> C64 { u.iter().zip(v).map(|(a, b)| a * b.conj()).sum() };
        let g01 = dot(&row1, &row2);
        ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(dot(&row1, &row1).re, 0.0),
                g01,
                g01.conj(),
                C64::new(dot(&row2, &row2).re, 0.0),
            ],
        )
        .expect("2x2")
    }
}

fn check_unit(x: &[C64; 3]) -> Result<()> {
    let n = vec_norm(x);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(WitnessError::NotUnitVector(n));
    }
    Ok(())
}

/// The explicit coefficients for the subcase `x` falls into.
pub fn coefficient_matrix(x: &[C64; 3], t: f64, c: f64) -> Result<CoefficientMatrix> {
    check_unit(x)?;
    let subcase = Subcase::classify(x).ok_or(WitnessError::NotUnitVector(0.0))?;
    let sq = (3.0 - t).sqrt();
    let st = t.sqrt();
    let re = |a: f64| C64::new(a, 0.0);
    // r_i = |x_i / x_{i+1}|^2 and the matching weight t + (3-t) r_i.
    let r = |i: usize| (x[i] / x[(i + 1) % 3]).norm_sqr();
    let den = |i: usize| t + (3.0 - t) * r(i);
    let alpha_of = |i: usize| re(sq * r(i) / den(i));
    let beta_of = |i: usize| st * (x[i] / x[(i + 1) % 3]) / den(i);
    let inv = re(1.0 / sq);

    let (alpha, beta, delta, gamma) = match subcase {
        Subcase::S1 => {
            let a = re(sq / 3.0);
            let b = |i: usize| st * x[i] / (3.0 * x[(i + 1) % 3]);
            (
                [a; 3],
                [b(0), b(1), b(2)],
                [a * c, -a * c, ZERO],
                [b(0) * c, -b(1) * c, ZERO],
            )
        }
        Subcase::S2 => (
            [alpha_of(0), alpha_of(1), alpha_of(2)],
            [beta_of(0), beta_of(1), beta_of(2)],
            [alpha_of(0) * c, -alpha_of(1) * c, ZERO],
            [beta_of(0) * c, -beta_of(1) * c, ZERO],
        ),
        Subcase::S3 => (
            [ZERO, alpha_of(1), inv],
            [ZERO, beta_of(1), ZERO],
            [ZERO, -alpha_of(1) * c, ZERO],
            [ZERO, -beta_of(1) * c, ZERO],
        ),
        Subcase::S4 => (
            [inv, ZERO, alpha_of(2)],
            [ZERO, ZERO, beta_of(2)],
            [inv * c, ZERO, ZERO],
            [ZERO; 3],
        ),
        Subcase::S5 => (
            [alpha_of(0), inv, ZERO],
            [beta_of(0), ZERO, ZERO],
            [alpha_of(0) * c, -inv * c, ZERO],
            [beta_of(0) * c, ZERO, ZERO],
        ),
        Subcase::S6 => ([ZERO, ZERO, inv], [ZERO; 3], [ZERO; 3], [ZERO; 3]),
        // C_0 x = -c x_2 |2>, and E_{23} x = 0 here, so the weight sits on sqrt(3-t) E_22.
        Subcase::S7 => (
            [ZERO, inv, ZERO],
            [ZERO; 3],
            [ZERO, -inv * c, ZERO],
            [ZERO; 3],
        ),
        Subcase::S8 => (
            [inv, ZERO, ZERO],
            [ZERO; 3],
            [inv * c, ZERO, ZERO],
            [ZERO; 3],
        ),
    };
    Ok(CoefficientMatrix {
        alpha,
        beta,
        delta,
        gamma,
        subcase,
    })
}

/// `(||x - sum_i alpha_i sqrt(3-t) E_ii x - sum_i beta_i sqrt(t) E_{i,i+1} x||,
///   ||C_0 x - sum_i delta_i sqrt(3-t) E_ii x - sum_i gamma_i sqrt(t) E_{i,i+1} x||)`.
pub fn reconstruction_residual(
    x: &[C64; 3],
    f: &CoefficientMatrix,
    t: f64,
    c: f64,
) -> Result<(f64, f64)> {
    check_unit(x)?;
    let sq = (3.0 - t).sqrt();
    let st = t.sqrt();
    let combine = |diag: &[C64; 3], shift: &[C64; 3]| -> [C64; 3] {
        std::array::from_fn(|i| diag[i] * sq * x[i] + shift[i] * st * x[(i + 1) % 3])
    };
    let rx = combine(&f.alpha, &f.beta);
    let rc = combine(&f.delta, &f.gamma);
    let c0x = [x[0] * c, -x[1] * c, ZERO];
    let dist = |a: &[C64; 3], b: &[C64; 3]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    Ok((dist(x, &rx), dist(&c0x, &rc)))
}

/// Largest eigenvalue of a 2×2 Hermitian matrix, in closed form.
pub fn max_eig_2x2(g: &ComplexMatrix) -> f64 {
    let a = g[(0, 0)].re;
    let d = g[(1, 1)].re;
    let b = g[(0, 1)];
    0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt()
}

/// `(||F F^dagger||, ||F|| <= 1)`.
pub fn gram_contraction(f: &CoefficientMatrix) -> (f64, bool) {
    gram_matrix_contraction(&f.gram())
}

pub fn gram_matrix_contraction(g: &ComplexMatrix) -> (f64, bool) {
    let m = max_eig_2x2(g);
    (m, m <= 1.0 + CONTRACTION_TOL)
}

fn encode(x: &[C64]) -> Vec<[f64; 2]> {
    x.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub t: f64,
    pub c: f64,
    pub samples: usize,
    pub max_gram_eig: f64,
    pub argmax: Vec<[f64; 2]>,
    pub max_residual: f64,
    pub subcase_counts: Vec<(Subcase, usize)>,
    pub violations: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone)]
struct SweepAcc {
    max_eig: f64,
    argmax: [C64; 3],
    max_residual: f64,
    counts: [usize; 8],
    violations: Vec<[C64; 3]>,
}

impl SweepAcc {
    fn new() -> Self {
        Self {
            max_eig: f64::NEG_INFINITY,
            argmax: [ZERO; 3],
            max_residual: 0.0,
            counts: [0; 8],
            violations: Vec::new(),
        }
    }

    fn visit(&mut self, x: &[C64; 3], t: f64, c: f64) {
        let f = coefficient_matrix(x, t, c).expect("sampled vectors are unit");
        let (res_x, res_c) = reconstruction_residual(x, &f, t, c).expect("unit");
        let (m, ok) = gram_contraction(&f);
        self.counts[f.subcase as usize] += 1;
        self.max_residual = self.max_residual.max(res_x).max(res_c);
        if m > self.max_eig {
            self.max_eig = m;
            self.argmax = *x;
        }
        if !ok {
            self.violations.push(*x);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        if other.max_eig > self.max_eig {
            self.max_eig = other.max_eig;
            self.argmax = other.argmax;
        }
        self.max_residual = self.max_residual.max(other.max_residual);
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.violations.extend(other.violations);
        self
    }
}

const SWEEP_CHUNK: usize = 1024;

/// Contractivity of `F_x` over `samples` random unit `x`, the fixed
/// representative of every zero pattern, and `max(1, samples/100)` random
/// vectors per zero pattern. Violations are collected, not raised.
pub fn run_certificate_sweep(t: f64, c: f64, samples: usize, seed: u64) -> Result<SweepReport> {
    check_certificate_range(t, c)?;
    let per_pattern = (samples / 100).max(1);
    let chunks = samples.div_ceil(SWEEP_CHUNK);

    let generic = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(seed, k as u64);
            let mut acc = SweepAcc::new();
            for _ in (k * SWEEP_CHUNK)..((k + 1) * SWEEP_CHUNK).min(samples) {
                let v = random_unit(3, &mut rng);
                acc.visit(&[v[0], v[1], v[2]], t, c);
            }
            acc
        })
        .collect::<Vec<_>>();

    let mut acc = SweepAcc::new();
    for sub in Subcase::ALL {
        acc.visit(&sub.representative(), t, c);
    }
    let mut rng = seeded_rng(seed, u64::MAX);
    for sub in Subcase::ALL {
        for _ in 0..per_pattern {
            acc.visit(&sub.sample(&mut rng), t, c);
        }
    }
    let acc = generic.into_iter().fold(acc, SweepAcc::merge);
    let total: usize = acc.counts.iter().sum();
    Ok(SweepReport {
        t,
        c,
        samples: total,
        max_gram_eig: acc.max_eig,
        argmax: encode(&acc.argmax),
        max_residual: acc.max_residual,
        subcase_counts: Subcase::ALL
            .iter()
            .map(|&s| (s, acc.counts[s as usize]))
            .collect(),
        violations: acc.violations.iter().map(|x| encode(x)).collect(),
    })
}

/// Like [`run_certificate_sweep`], but any non-contractive `F_x` is an error.
pub fn certificate_sweep(t: f64, c: f64, samples: usize, seed: u64) -> Result<SweepReport> {
    let report = run_certificate_sweep(t, c, samples, seed)?;
    if let Some(x) = report.violations.first() {
        let v: Vec<C64> = x.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let f = coefficient_matrix(&[v[0], v[1], v[2]], t, c)?;
        return Err(WitnessError::ContractionViolated {
            x: x.clone(),
            max_eig: gram_contraction(&f).0,
        });
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Zero locus, detection, subtraction probe
// ---------------------------------------------------------------------------

/// Eigenvalues of `A_e` below this mark kernel directions.
pub const ZERO_LOCUS_EIG_TOL: f64 = 1e-9;
/// Relative rank tolerance for the span of collected product vectors.
pub const ZERO_LOCUS_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroLocusConfig {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroLocus {
    pub dimension: usize,
    /// Orthonormal basis of the span of the collected `e (x) f`.
    pub basis: Vec<Vec<C64>>,
    pub hits: usize,
    pub samples: usize,
}

/// Draws `e` from three families in rotation: Gaussian, equal moduli with
/// random phases, and Gaussian on a random proper coordinate subset. The last
/// two reach the measure-zero strata where kernels of `A_e` typically live.
fn sample_locus_vector(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = match k % 3 {
        0 => return random_unit(dim, rng),
        1 => (0..dim)
            .map(|_| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)))
            .collect(),
        _ => {
            let mask = loop {
                let m: u32 = rng.random_range(1..(1u32 << dim) - 1);
                if m != 0 {
                    break m;
                }
            };
            (0..dim)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
                    } else {
                        ZERO
                    }
                })
                .collect()
        }
    };
    normalize(&mut v);
    v
}

/// Numerical dimension of the span of `{e (x) f : <e,f|W|e,f> = 0}`.
pub fn zero_locus_span(w: &Witness, config: &ZeroLocusConfig) -> ZeroLocus {
    let d = w.dim_a() * w.dim_b();
    let chunks = config.samples.div_ceil(SWEEP_CHUNK);
    let partials: Vec<(ComplexMatrix, usize)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_rng(config.seed, k as u64);
            let mut gram = ComplexMatrix::zeros(d, d);
            let mut hits = 0;
            for idx in (k * SWEEP_CHUNK)..((k + 1) * SWEEP_CHUNK).min(config.samples) {
                let e = sample_locus_vector(w.dim_a(), idx, &mut rng);
                let eig = hermitian_eig(&w.contract_a(&e), EIG_TOL).expect("Hermitian");
                for (j, &lam) in eig.values.iter().enumerate() {
                    if lam >= ZERO_LOCUS_EIG_TOL {
                        break;
                    }
                    let v = kron_vec(&e, &eig.vector(j));
                    for a in 0..d {
                        for b in 0..d {
                            gram[(a, b)] += v[a] * v[b].conj();
                        }
                    }
                    hits += 1;
                }
            }
            (gram, hits)
        })
        .collect();
    let (gram, hits) = partials
        .into_iter()
        .fold((ComplexMatrix::zeros(d, d), 0), |(g, h), (g2, h2)| {
            (&g + &g2, h + h2)
        });
    let eig = hermitian_eig(&gram, EIG_TOL).expect("Gram matrix is Hermitian");
    let top = eig.max();
    let basis: Vec<Vec<C64>> = if top > 0.0 {
        (0..d)
            .filter(|&k| eig.values[k] > ZERO_LOCUS_RANK_TOL * top)
            .map(|k| eig.vector(k))
            .collect()
    } else {
        Vec::new()
    };
    ZeroLocus {
        dimension: basis.len(),
        basis,
        hits,
        samples: config.samples,
    }
}

const STATE_TOL: f64 = 1e-9;

/// `Tr(W rho)`; negative means `rho` is detected.
pub fn detect_value(w: &Witness, rho: &ComplexMatrix) -> Result<f64> {
    let d = w.dim_a() * w.dim_b();
    if rho.rows() != d || rho.cols() != d {
        return Err(WitnessError::DimensionMismatch(format!(
            "state is {}x{}, witness acts on dimension {d}",
            rho.rows(),
            rho.cols()
        )));
    }
    if !rho.is_hermitian(STATE_TOL) {
        return Err(WitnessError::NotAState("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(WitnessError::NotAState(format!("trace {tr}")));
    }
    let min = min_eigenvalue(rho)?;
    if min < -STATE_TOL {
        return Err(WitnessError::NotAState(format!("eigenvalue {min}")));
    }
    Ok((w.matrix() * rho).trace().re)
}

/// Subtraction terms with `||C||_F` below this do not count as found.
pub const PROBE_MIN_SCALE: f64 = 0.25;
const PROBE_BISECTION_STEPS: usize = 20;
const PROBE_ANGLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub found: bool,
    pub best_c: Option<ComplexMatrix>,
    /// `||best_c||_F`.
    pub best_scale: f64,
    pub trials: usize,
    pub structured_trials: usize,
}

fn probe_config(seed: u64) -> SearchConfig {
    SearchConfig {
        restarts: 48,
        max_iters: 200,
        tol: 1e-12,
        seed,
    }
}

fn numerically_positive(m: &DTypeMap, c: &ComplexMatrix, seed: u64) -> bool {
    let sub = m.subtracted(c.clone()).expect("n x n subtraction term");
    numeric_block_positivity(&sub.choi_matrix(), &probe_config(seed)).status
        == PositivityStatus::NoViolationFound
}

/// Candidate directions: `diag(cos phi, sin phi, 0)` for `phi = k pi / 8` with
/// the zero in each of the `n` slots (the zero slot varies only for `n = 3`),
/// then complex-Gaussian matrices. All have unit Frobenius norm.
fn probe_directions(n: usize, trials: usize, seed: u64) -> (Vec<ComplexMatrix>, usize) {
    let mut dirs = Vec::new();
    for slot in 0..n.min(3) {
        for k in 0..PROBE_ANGLES {
            let phi = k as f64 * PI / PROBE_ANGLES as f64;
            let others: Vec<usize> = (0..n).filter(|&i| i != slot).collect();
            let mut d = vec![0.0; n];
            d[others[0]] = phi.cos();
            d[others[1]] = phi.sin();
            dirs.push(ComplexMatrix::real_diag(&d));
        }
    }
    dirs.truncate(trials);
    let structured = dirs.len();
    let mut rng = seeded_rng(seed, u64::MAX - 1);
    while dirs.len() < trials {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        let norm = g.frobenius_norm();
        dirs.push(g.scale_real(1.0 / norm));
    }
    (dirs, structured)
}

/// Searches for a nonzero `C` with `X -> Phi(X) - C X C^dagger` numerically
/// positive. Each direction is first tested at `||C||_F = PROBE_MIN_SCALE`; the
/// survivors are pushed to the numeric positivity boundary by bisection.
///
/// `found = false` is consistency evidence for optimality, never a proof.
pub fn subtraction_probe(m: &DTypeMap, trials: usize, seed: u64) -> ProbeReport {
    let n = m.n();
    let (dirs, structured) = probe_directions(n, trials, seed);
    let upper = 2.0 * (n as f64).sqrt();
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for (k, dir) in dirs.iter().enumerate() {
        let check_seed = seed.wrapping_add(k as u64);
        if !numerically_positive(m, &dir.scale_real(PROBE_MIN_SCALE), check_seed) {
            continue;
        }
        let (mut lo, mut hi) = (PROBE_MIN_SCALE, upper);
        if numerically_positive(m, &dir.scale_real(hi), check_seed) {
            lo = hi;
        } else {
            for _ in 0..PROBE_BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if numerically_positive(m, &dir.scale_real(mid), check_seed) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        if best.as_ref().is_none_or(|(s, _)| lo > *s) {
            best = Some((lo, dir.scale_real(lo)));
        }
        // Anything above the floor settles the question.
        break;
    }
    ProbeReport {
        found: best.is_some(),
        best_scale: best.as_ref().map_or(0.0, |(s, _)| *s),
        best_c: best.map(|(_, c)| c),
        trials: dirs.len(),
        structured_trials: structured,
    }
}
