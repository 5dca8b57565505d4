//! Density states over a list of subsystem dimensions: construction and
//! validation, product initializations, partial trace, and the Bloch-style
//! decomposition of a probe⊕mediator two-qubit state.

use num_complex::Complex64;

use crate::dense::{self, hermitian_eig, DenseOperator};
use crate::error::{Error, Result};

/// Hermiticity tolerance for accepting a density matrix.
pub const STATE_HERMITIAN_TOL: f64 = 1e-12;

/// Trace-one tolerance for accepting a density matrix.
pub const STATE_TRACE_TOL: f64 = 1e-12;

/// Lower bound on the minimum eigenvalue (absorbs eigensolver noise).
pub const STATE_PSD_FLOOR: f64 = -1e-10;

/// A validated density matrix with per-subsystem dimensions.
#[derive(Debug, Clone)]
pub struct DensityState {
    matrix: DenseOperator,
    dims: Vec<usize>,
    label: String,
}

impl DensityState {
    /// Validates Hermiticity, unit trace and positivity before accepting.
    pub fn new(matrix: DenseOperator, dims: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let total: usize = dims.iter().product();
        if matrix.dim() != total {
            return Err(Error::InvalidState {
                label,
                reason: format!(
                    "matrix dimension {} does not match subsystem dims {:?}",
                    matrix.dim(),
                    dims
                ),
            });
        }
        if matrix.data().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState {
                label,
                reason: "matrix has non-finite entries".into(),
            });
        }
        let herm = matrix.hermiticity_deviation();
        if herm > STATE_HERMITIAN_TOL {
            return Err(Error::InvalidState {
                label,
                reason: format!("not Hermitian (deviation {herm:.3e})"),
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TRACE_TOL || tr.im.abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState {
                label,
                reason: format!("trace {tr} is not 1"),
            });
        }
        let eig = hermitian_eig(&matrix)?;
        if eig.values[0] < STATE_PSD_FLOOR {
            return Err(Error::InvalidState {
                label,
                reason: format!("minimum eigenvalue {:.3e} below floor", eig.values[0]),
            });
        }
        Ok(DensityState {
            matrix,
            dims,
            label,
        })
    }

    pub fn from_pure(
        amplitudes: &[Complex64],
        dims: Vec<usize>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = amplitudes.len();
        let mut m = DenseOperator::zeros(n);
        for i in 0..n {
            for j in 0..n {
                *m.get_mut(i, j) = amplitudes[i] * amplitudes[j].conj();
            }
        }
        Self::new(m, dims, label)
    }

    pub fn maximally_mixed(dim: usize, label: impl Into<String>) -> Self {
        let m = DenseOperator::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
        Self::new(m, vec![dim], label).expect("maximally mixed state is valid")
    }

    pub fn matrix(&self) -> &DenseOperator {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }

    pub fn expectation(&self, op: &DenseOperator) -> Result<Complex64> {
        if op.dim() != self.matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.dim(),
                got: op.dim(),
            });
        }
        Ok(self.matrix.matmul(op).trace())
    }

    /// `U ρ U†` with a unitarity check on `U`.
    pub fn apply_unitary(&self, u: &DenseOperator) -> Result<DensityState> {
        if u.dim() != self.matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.dim(),
                got: u.dim(),
            });
        }
        let dev = u.unitarity_deviation();
        if dev > dense::UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        DensityState::new(
            self.matrix.sandwich_by(u),
            self.dims.clone(),
            self.label.clone(),
        )
    }

    /// Reduced state over the listed subsystem indices (ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityState> {
        if keep.is_empty() {
            return Err(Error::InvalidState {
                label: self.label.clone(),
                reason: "partial trace must keep at least one subsystem".into(),
            });
        }
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() || *sorted.last().unwrap() >= self.dims.len() {
            return Err(Error::InvalidState {
                label: self.label.clone(),
                reason: format!("invalid keep set {keep:?} for dims {:?}", self.dims),
            });
        }
        let reduced = dense::partial_trace(&self.matrix, &self.dims, &sorted);
        let dims: Vec<usize> = sorted.iter().map(|&k| self.dims[k]).collect();
        DensityState::new(reduced, dims, self.label.clone())
    }
}

/// Report-format rendering of a density state: subsystem dims plus the
/// matrix as a flat row-major list of `[re, im]` pairs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DensityDump {
    pub label: String,
    pub dims: Vec<usize>,
    pub matrix: Vec<[f64; 2]>,
}

impl DensityState {
    pub fn dump(&self) -> DensityDump {
        DensityDump {
            label: self.label.clone(),
            dims: self.dims.clone(),
            matrix: self
                .matrix
                .data()
                .iter()
                .map(|c| [c.re, c.im])
                .collect(),
        }
    }
}

/// Computational basis ket `|k⟩` of a `dim`-level system.
pub fn basis_ket(dim: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Named single-site kets: `"0"`, `"1"`, …, plus `"+"`, `"-"`, `"+i"`, `"-i"`
/// on qubits.
pub fn named_ket(name: &str, dim: usize) -> Result<Vec<Complex64>> {
    let inv = 1.0 / 2.0f64.sqrt();
    match name {
        "+" if dim == 2 => Ok(vec![Complex64::new(inv, 0.0), Complex64::new(inv, 0.0)]),
        "-" if dim == 2 => Ok(vec![Complex64::new(inv, 0.0), Complex64::new(-inv, 0.0)]),
        "+i" if dim == 2 => Ok(vec![Complex64::new(inv, 0.0), Complex64::new(0.0, inv)]),
        "-i" if dim == 2 => Ok(vec![Complex64::new(inv, 0.0), Complex64::new(0.0, -inv)]),
        _ => match name.parse::<usize>() {
            Ok(k) if k < dim => Ok(basis_ket(dim, k)),
            _ => Err(Error::InvalidState {
                label: name.to_string(),
                reason: format!("unknown ket for dimension {dim}"),
            }),
        },
    }
}

/// Tensor product of local states; dims concatenate in order.
pub fn product_state(locals: &[DensityState], label: impl Into<String>) -> Result<DensityState> {
    let label = label.into();
    if locals.is_empty() {
        return Err(Error::InvalidState {
            label,
            reason: "empty product".into(),
        });
    }
    let mut matrix = locals[0].matrix.clone();
    let mut dims: Vec<usize> = locals[0].dims.clone();
    for local in &locals[1..] {
        matrix = matrix.kron(&local.matrix);
        dims.extend_from_slice(&local.dims);
    }
    DensityState::new(matrix, dims, label)
}

/// Whether `s` equals the tensor product of its single-subsystem reductions.
pub fn is_product(s: &DensityState, tol: f64) -> Result<bool> {
    let mut prod: Option<DenseOperator> = None;
    for k in 0..s.dims().len() {
        let r = s.partial_trace(&[k])?;
        prod = Some(match prod {
            None => r.matrix().clone(),
            Some(p) => p.kron(r.matrix()),
        });
    }
    Ok(prod.unwrap().sub(s.matrix()).max_abs() <= tol)
}

/// Bloch-style components of a two-qubit probe⊕mediator state:
/// `ρ = ¼ (I + r⃗·σ⊗I + s_z·I⊗σz + t⃗·σ⊗σz) + residual terms`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BlochAm {
    pub r_a: [f64; 3],
    pub s_z: f64,
    pub t_a: [f64; 3],
    /// Components outside the single-observable family, labeled by the
    /// string they multiply (`IX`, `IY`, `XX`, `XY`, …); all vanish when the
    /// mediator was engaged only through its Z observable.
    pub residuals: Vec<(String, f64)>,
}

impl BlochAm {
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn pauli_matrix(which: usize) -> DenseOperator {
    let c = Complex64::new;
    match which {
        0 => DenseOperator::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]),
        1 => DenseOperator::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ]),
        _ => DenseOperator::from_diag(&[1.0, -1.0]),
    }
}

/// Decompose a two-qubit state into the single-Z-observable family.
pub fn bloch_decompose_am(s: &DensityState) -> Result<BlochAm> {
    if s.dims() != [2, 2] {
        return Err(Error::InvalidState {
            label: s.label().to_string(),
            reason: format!("Bloch decomposition needs dims [2, 2], got {:?}", s.dims()),
        });
    }
    let names = ["X", "Y", "Z"];
    let id = DenseOperator::identity(2);
    let mut r_a = [0.0; 3];
    let mut t_a = [0.0; 3];
    for k in 0..3 {
        r_a[k] = s.expectation(&pauli_matrix(k).kron(&id))?.re;
        t_a[k] = s.expectation(&pauli_matrix(k).kron(&pauli_matrix(2)))?.re;
    }
    let s_z = s.expectation(&id.kron(&pauli_matrix(2)))?.re;
    let mut residuals = Vec::new();
    for (m, m_name) in names.iter().enumerate().take(2) {
        let v = s.expectation(&id.kron(&pauli_matrix(m)))?.re;
        residuals.push((format!("I{m_name}"), v));
    }
    for (k, k_name) in names.iter().enumerate() {
        for (m, m_name) in names.iter().enumerate().take(2) {
            let v = s.expectation(&pauli_matrix(k).kron(&pauli_matrix(m)))?.re;
            residuals.push((format!("{k_name}{m_name}"), v));
        }
    }
    Ok(BlochAm {
        r_a,
        s_z,
        t_a,
        residuals,
    })
}

/// Rebuild the matrix `¼ (I + r⃗·σ⊗I + s_z·I⊗σz + t⃗·σ⊗σz)`.
pub fn eq_reconstruct_am(r_a: &[f64; 3], s_z: f64, t_a: &[f64; 3]) -> DenseOperator {
    let id = DenseOperator::identity(2);
    let z = pauli_matrix(2);
    let mut m = id.kron(&id);
    m = m.add(&id.kron(&z).scale(Complex64::new(s_z, 0.0)));
    for k in 0..3 {
        m = m.add(&pauli_matrix(k).kron(&id).scale(Complex64::new(r_a[k], 0.0)));
        m = m.add(&pauli_matrix(k).kron(&z).scale(Complex64::new(t_a[k], 0.0)));
    }
    m.scale(Complex64::new(0.25, 0.0))
}
