//! Positivity, complete positivity and PPT checks.
//!
//! Positivity of `Phi` is block-positivity of its Choi matrix: the quadratic
//! form `<e (x) f|W|e (x) f>` is nonnegative on all product vectors. For the
//! D-type family this has a closed form (`t <= n / l(pi)`); the numeric search
//! below is a best-effort minimizer that can find violations but never certify
//! their absence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dtype_map::{DTypeMap, Witness};
use crate::error::Result;
use crate::linalg::{
    hermitian_eig, is_psd, min_eigenvalue, normalize, partial_transpose, ComplexMatrix, Subsystem,
    C64, EIG_TOL,
};
use crate::perm::Permutation;

/// Quadratic-form value below which a product vector counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-8;
/// Relative slack for PSD decisions (Jacobi accuracy).
pub const PSD_TOL: f64 = 1e-10;
/// Slack on the closed-form threshold `n / l(pi)` for floating-point `t`.
const THRESHOLD_SLACK: f64 = 1e-12;

pub fn positivity_threshold(n: usize, p: &Permutation) -> f64 {
    n as f64 / p.length() as f64
}

/// `Phi_{t,pi}` on `M_n` is positive iff `0 <= t <= n / l(pi)`.
pub fn closed_form_positive(n: usize, t: f64, p: &Permutation) -> bool {
    assert_eq!(p.n(), n, "permutation size must match n");
    t >= 0.0 && t <= positivity_threshold(n, p) + THRESHOLD_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpCheck {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
}

/// CP iff the Choi matrix is PSD.
pub fn is_completely_positive(m: &DTypeMap) -> CpCheck {
    let w = m.choi_matrix();
    let min = min_eigenvalue(w.matrix()).expect("Choi matrix is Hermitian");
    let scale = crate::linalg::operator_norm(w.matrix())
        .expect("Choi matrix is Hermitian")
        .max(1.0);
    CpCheck {
        completely_positive: min >= -PSD_TOL * scale,
        min_eigenvalue: min,
    }
}

/// `M` is the partial transpose of a PSD operator, i.e. `M^{T_B} >= 0`.
///
/// This is the sense in which the second summand of a decomposable witness
/// `W = A + B^{T_B}` is "PPT". See [`is_ppt_state`] for the state criterion.
pub fn is_ppt(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<bool> {
    let pt = partial_transpose(m, dim_a, dim_b, Subsystem::B)?;
    is_psd(&pt, PSD_TOL)
}

/// `M >= 0` and `M^{T_B} >= 0`.
pub fn is_ppt_state(m: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<bool> {
    let pt = partial_transpose(m, dim_a, dim_b, Subsystem::B)?;
    Ok(is_psd(m, PSD_TOL)? && is_psd(&pt, PSD_TOL)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 100,
            max_iters: 200,
            tol: 1e-12,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositivityStatus {
    NoViolationFound,
    ViolationFound,
    ClosedFormPositive,
    ClosedFormNotPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub status: PositivityStatus,
    pub min_value: f64,
    pub witness_pair: Option<(Vec<C64>, Vec<C64>)>,
    pub samples_used: usize,
}

/// ChaCha8 seeded by `seed`, on an independent stream per `stream`.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    normalize(&mut v);
    v
}

fn min_eigvec(m: &ComplexMatrix) -> (f64, Vec<C64>) {
    let e = hermitian_eig(m, EIG_TOL).expect("contraction of a Hermitian operator is Hermitian");
    (e.min(), e.vector(0))
}

struct Descent {
    value: f64,
    e: Vec<C64>,
    f: Vec<C64>,
}

/// Alternating exact minimization from one start: fix `e`, set `f` to the
/// bottom eigenvector of `A_e`; fix `f`, set `e` to that of `B_f`.
fn descend(w: &Witness, mut e: Vec<C64>, max_iters: usize, tol: f64) -> Descent {
    let (mut value, mut f) = min_eigvec(&w.contract_a(&e));
    for _ in 0..max_iters {
        let (_, e_next) = min_eigvec(&w.contract_b(&f));
        e = e_next;
        let (v_next, f_next) = min_eigvec(&w.contract_a(&e));
        f = f_next;
        let improvement = value - v_next;
        value = v_next;
        if improvement < tol {
            break;
        }
    }
    Descent { value, e, f }
}

/// Minimize `<e (x) f|W|e (x) f>` over unit product vectors.
pub fn numeric_block_positivity(w: &Witness, config: &SearchConfig) -> PositivityVerdict {
    let best = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeded_rng(config.seed, r as u64);
            let e = random_unit(w.dim_a(), &mut rng);
            (r, descend(w, e, config.max_iters, config.tol))
        })
        .reduce_with(|a, b| {
            if b.1.value < a.1.value || (b.1.value == a.1.value && b.0 < a.0) {
                b
            } else {
                a
            }
        });
    match best {
        None => PositivityVerdict {
            status: PositivityStatus::NoViolationFound,
            min_value: f64::INFINITY,
            witness_pair: None,
            samples_used: 0,
        },
        Some((_, d)) => {
            let violated = d.value < -VIOLATION_TOL;
            PositivityVerdict {
                status: if violated {
                    PositivityStatus::ViolationFound
                } else {
                    PositivityStatus::NoViolationFound
                },
                min_value: d.value,
                witness_pair: violated.then_some((d.e, d.f)),
                samples_used: config.restarts,
            }
        }
    }
}

/// Closed-form status for an unsubtracted D-type map; `None` once a
/// subtraction term is attached (no closed form is known then).
pub fn closed_form_status(m: &DTypeMap) -> Option<PositivityStatus> {
    if m.subtraction().is_some() {
        return None;
    }
    Some(if closed_form_positive(m.n(), m.t(), m.pi()) {
        PositivityStatus::ClosedFormPositive
    } else {
        PositivityStatus::ClosedFormNotPositive
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtype_map::max_entangled;
    use crate::linalg::{kron_vec, ComplexMatrix};

    fn map(t: f64, pi: &str) -> DTypeMap {
        DTypeMap::new(t, pi.parse().unwrap()).unwrap()
    }

    #[test]
    fn closed_form_thresholds() {
        let cyc: Permutation = "2,3,1".parse().unwrap();
        let tr: Permutation = "2,1,3".parse().unwrap();
        assert!(closed_form_positive(3, 1.0, &cyc));
        assert!(!closed_form_positive(3, 1.2, &cyc));
        assert!(closed_form_positive(3, 1.5, &tr));
        assert!(!closed_form_positive(3, 1.51, &tr));
        assert!(closed_form_positive(3, 3.0, &Permutation::identity(3)));
        assert!(closed_form_positive(4, 2.0, &"2,1,4,3".parse().unwrap()));
    }

    #[test]
    fn complete_positivity_examples() {
        for pi in Permutation::all(3) {
            assert!(is_completely_positive(&DTypeMap::new(0.0, pi).unwrap()).completely_positive);
        }
        assert!(is_completely_positive(&map(3.0, "1,2,3")).completely_positive);
        let choi = is_completely_positive(&map(1.0, "2,3,1"));
        assert!(!choi.completely_positive);
        assert!(choi.min_eigenvalue < 0.0);
    }

    #[test]
    fn choi_map_has_no_violation() {
        let v =
            numeric_block_positivity(&map(1.0, "2,3,1").choi_matrix(), &SearchConfig::default());
        assert_eq!(v.status, PositivityStatus::NoViolationFound);
        assert!(v.min_value >= -VIOLATION_TOL);
        assert!(v.witness_pair.is_none());
        assert_eq!(v.samples_used, 100);
    }

    #[test]
    fn beyond_threshold_violation_is_reported_with_pair() {
        let w = map(1.5, "2,3,1").choi_matrix();
        let v = numeric_block_positivity(&w, &SearchConfig::default());
        assert_eq!(v.status, PositivityStatus::ViolationFound);
        let (e, f) = v.witness_pair.clone().unwrap();
        let direct = w.matrix().quad_form(&kron_vec(&e, &f));
        assert!((direct - v.min_value).abs() < 1e-10);
        assert!(v.min_value < -VIOLATION_TOL);
    }

    #[test]
    fn psd_operator_never_violates() {
        let w = Witness::new(3, 3, max_entangled(3).unwrap()).unwrap();
        let v = numeric_block_positivity(
            &w,
            &SearchConfig {
                restarts: 20,
                ..Default::default()
            },
        );
        assert_eq!(v.status, PositivityStatus::NoViolationFound);
        assert!(v.min_value >= -1e-15);
    }

    #[test]
    fn search_is_deterministic() {
        let w = map(1.3, "2,3,1").choi_matrix();
        let cfg = SearchConfig {
            restarts: 16,
            ..Default::default()
        };
        let a = numeric_block_positivity(&w, &cfg);
        let b = numeric_block_positivity(&w, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn ppt_examples() {
        let p = max_entangled(3).unwrap();
        assert!(!is_ppt(&p, 3, 3).unwrap());
        assert!(!is_ppt_state(&p, 3, 3).unwrap());
        let d = ComplexMatrix::real_diag(&[0.1, 0.0, 0.3, 0.2, 0.0, 0.1, 0.1, 0.1, 0.1]);
        assert!(is_ppt(&d, 3, 3).unwrap());
        assert!(is_ppt_state(&d, 3, 3).unwrap());
        assert!(is_ppt(&d, 2, 2).is_err());
    }

    #[test]
    fn search_config_json() {
        let cfg: SearchConfig =
            serde_json::from_str(r#"{"restarts":100,"max_iters":200,"tol":1e-12,"seed":42}"#)
                .unwrap();
        assert_eq!(cfg, SearchConfig::default());
    }

    #[test]
    fn closed_form_status_only_without_subtraction() {
        let m = map(0.5, "2,3,1");
        assert_eq!(
            closed_form_status(&m),
            Some(PositivityStatus::ClosedFormPositive)
        );
        let sub = m.subtracted(ComplexMatrix::identity(3)).unwrap();
        assert_eq!(closed_form_status(&sub), None);
        assert_eq!(
            closed_form_status(&map(1.2, "2,3,1")),
            Some(PositivityStatus::ClosedFormNotPositive)
        );
    }
}
