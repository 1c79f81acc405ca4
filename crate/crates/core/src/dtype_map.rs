//! The D-type family
//!
//! ```text
//! Phi_{t,pi}(A) = (n - t) sum_i E_ii A E_ii + t sum_i E_{i,pi(i)} A E_{i,pi(i)}^dagger - A
//! ```
//!
//! on `M_n(C)`, optionally with a subtraction term `A -> C A C^dagger`, and
//! the Choi matrix `W = (Phi(E_ij))_{i,j}` that it induces.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WitnessError};
use crate::linalg::{ComplexMatrix, C64, HERMITIAN_TOL, ZERO};
use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq)]
pub struct DTypeMap {
    n: usize,
    t: f64,
    pi: Permutation,
    subtraction: Option<ComplexMatrix>,
}

impl DTypeMap {
    pub fn new(t: f64, pi: Permutation) -> Result<Self> {
        let n = pi.n();
        if n < 2 {
            return Err(WitnessError::OutOfRange(format!(
                "n = {n} must be at least 2"
            )));
        }
        if !t.is_finite() || !(0.0..=n as f64).contains(&t) {
            return Err(WitnessError::OutOfRange(format!(
                "t = {t} outside [0, {n}]"
            )));
        }
        Ok(Self {
            n,
            t,
            pi,
            subtraction: None,
        })
    }

    /// The map `X -> Phi(X) - C X C^dagger`.
    pub fn subtracted(&self, c: ComplexMatrix) -> Result<Self> {
        if c.rows() != self.n || c.cols() != self.n {
            return Err(WitnessError::DimensionMismatch(format!(
                "subtraction term is {}x{}, map acts on {n}x{n}",
                c.rows(),
                c.cols(),
                n = self.n
            )));
        }
        Ok(Self {
            subtraction: Some(c),
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn pi(&self) -> &Permutation {
        &self.pi
    }

    pub fn subtraction(&self) -> Option<&ComplexMatrix> {
        self.subtraction.as_ref()
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.n;
        if x.rows() != n || x.cols() != n {
            return Err(WitnessError::DimensionMismatch(format!(
                "input is {}x{}, map acts on {n}x{n}",
                x.rows(),
                x.cols()
            )));
        }
        let diag_weight = n as f64 - self.t - 1.0;
        let mut out = x.map(|z| -z);
        for j in 0..n {
            let pj = self.pi.apply(j);
            out[(j, j)] = x[(j, j)] * diag_weight + x[(pj, pj)] * self.t;
        }
        if let Some(c) = &self.subtraction {
            out = &out - &(&(c * x) * &c.adjoint());
        }
        Ok(out)
    }

    /// `W = sum_ij E_ij (x) Phi(E_ij)`; block `(i, j)` is `Phi(E_ij)`.
    pub fn choi_matrix(&self) -> Witness {
        let n = self.n;
        let mut w = ComplexMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let block = self
                    .apply(&ComplexMatrix::unit(n, i, j))
                    .expect("unit matrix has the right shape");
                for k in 0..n {
                    for l in 0..n {
                        w[(i * n + k, j * n + l)] = block[(k, l)];
                    }
                }
            }
        }
        Witness::new(n, n, w).expect("Choi matrix of a Hermiticity-preserving map is Hermitian")
    }

    pub fn descriptor(&self) -> MapDescriptor {
        MapDescriptor {
            n: self.n,
            t: self.t,
            pi: self.pi.clone(),
            subtraction: self.subtraction.clone(),
        }
    }
}

/// JSON form: `{"n":3, "t":0.5, "pi":[2,3,1], "subtraction": <matrix or null>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    pub n: usize,
    pub t: f64,
    pub pi: Permutation,
    #[serde(default)]
    pub subtraction: Option<ComplexMatrix>,
}

impl TryFrom<MapDescriptor> for DTypeMap {
    type Error = WitnessError;

    fn try_from(d: MapDescriptor) -> Result<Self> {
        if d.pi.n() != d.n {
            return Err(WitnessError::DimensionMismatch(format!(
                "permutation of {} points for n = {}",
                d.pi.n(),
                d.n
            )));
        }
        let m = DTypeMap::new(d.t, d.pi)?;
        match d.subtraction {
            Some(c) => m.subtracted(c),
            None => Ok(m),
        }
    }
}

/// A Hermitian operator on `C^dim_a (x) C^dim_b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    dim_a: usize,
    dim_b: usize,
    choi: ComplexMatrix,
}

impl Witness {
    pub fn new(dim_a: usize, dim_b: usize, choi: ComplexMatrix) -> Result<Self> {
        let d = dim_a * dim_b;
        if choi.rows() != d || choi.cols() != d {
            return Err(WitnessError::DimensionMismatch(format!(
                "{}x{} operator for dims {dim_a}x{dim_b}",
                choi.rows(),
                choi.cols()
            )));
        }
        if !choi.is_hermitian(HERMITIAN_TOL) {
            return Err(WitnessError::NonHermitianInput {
                asymmetry: choi.hermitian_defect(),
                norm: choi.frobenius_norm(),
            });
        }
        Ok(Self { dim_a, dim_b, choi })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            choi: self.choi.scale_real(s),
            ..self.clone()
        }
    }

    /// `<e (x) f | W | e (x) f>`.
    pub fn product_value(&self, e: &[C64], f: &[C64]) -> f64 {
        let a = self.contract_a(e);
        a.quad_form(f)
    }

    /// `A_e` with entries `<e (x) b_j | W | e (x) b_k>` (dim_b × dim_b).
    pub fn contract_a(&self, e: &[C64]) -> ComplexMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        assert_eq!(e.len(), da);
        let mut out = ComplexMatrix::zeros(db, db);
        for i in 0..da {
            let ei = e[i].conj();
            if ei == ZERO {
                continue;
            }
            for (l, &el) in e.iter().enumerate() {
                let w = ei * el;
                if w == ZERO {
                    continue;
                }
                for j in 0..db {
                    for k in 0..db {
                        out[(j, k)] += w * self.choi[(i * db + j, l * db + k)];
                    }
                }
            }
        }
        out
    }

    /// `B_f` with entries `<a_i (x) f | W | a_l (x) f>` (dim_a × dim_a).
    pub fn contract_b(&self, f: &[C64]) -> ComplexMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        assert_eq!(f.len(), db);
        let mut out = ComplexMatrix::zeros(da, da);
        for j in 0..db {
            let fj = f[j].conj();
            if fj == ZERO {
                continue;
            }
            for (k, &fk) in f.iter().enumerate() {
                let w = fj * fk;
                if w == ZERO {
                    continue;
                }
                for i in 0..da {
                    for l in 0..da {
                        out[(i, l)] += w * self.choi[(i * db + j, l * db + k)];
                    }
                }
            }
        }
        out
    }
}

/// `P+ = |psi+><psi+|` with `psi+ = (|11> + ... + |nn>)/sqrt(n)`.
pub fn max_entangled(n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(WitnessError::OutOfRange(format!(
            "n = {n} must be at least 2"
        )));
    }
    let mut psi = vec![ZERO; n * n];
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    for i in 0..n {
        psi[i * n + i] = amp;
    }
    Ok(ComplexMatrix::outer(&psi, &psi))
}

/// `(I (x) Phi)(rho)` for an operator on `C^n (x) C^n`.
pub fn apply_to_second_factor(m: &DTypeMap, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.n();
    if rho.rows() != n * n || rho.cols() != n * n {
        return Err(WitnessError::DimensionMismatch(
            "operator is not n^2 x n^2".into(),
        ));
    }
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let block = ComplexMatrix::from_fn(n, n, |k, l| rho[(i * n + k, j * n + l)]);
            let image = m.apply(&block)?;
            for k in 0..n {
                for l in 0..n {
                    out[(i * n + k, j * n + l)] = image[(k, l)];
                }
            }
        }
    }
    Ok(out)
}
