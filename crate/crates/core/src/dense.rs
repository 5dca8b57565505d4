//! Dense complex matrices: Hermitian eigensolver, matrix exponential,
//! trace norms, and the tensor-index plumbing (embedding, partial trace,
//! partial transpose) shared by states and witnesses.
//!
//! The eigensolver is a cyclic Jacobi iteration specialized to Hermitian
//! matrices, exact enough for the desk-scale dimensions this crate targets.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
pub const JACOBI_THRESHOLD: f64 = 1e-13;

/// Maximum number of Jacobi sweeps before reporting non-convergence.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Unitarity tolerance (max-abs deviation of `U†U` from the identity).
pub const UNITARY_TOL: f64 = 1e-10;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        DenseOperator {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = Complex64::new(*v, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "ragged rows");
            data.extend(row);
        }
        DenseOperator { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        DenseOperator {
            dim: self.dim,
            data,
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        DenseOperator {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, c: Complex64) -> DenseOperator {
        DenseOperator {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> DenseOperator {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * dim + (j * m + l)] = a * other.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sqr().sqrt()
    }

    /// Max-abs deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Max-abs deviation of `U†U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.adjoint().matmul(self);
        prod.sub(&Self::identity(self.dim)).max_abs()
    }

    /// `U† M U`.
    pub fn conjugate_by(&self, u: &DenseOperator) -> DenseOperator {
        u.adjoint().matmul(self).matmul(u)
    }

    /// `U M U†`.
    pub fn sandwich_by(&self, u: &DenseOperator) -> DenseOperator {
        u.matmul(self).matmul(&u.adjoint())
    }

    /// Hilbert–Schmidt inner product `Tr(A† B)`.
    pub fn hs_inner(&self, other: &DenseOperator) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// the unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: DenseOperator,
}

/// Cyclic Jacobi diagonalization for Hermitian matrices.
///
/// Sweeps annihilate each off-diagonal entry with a unitary plane rotation
/// until the off-diagonal Frobenius norm falls below [`JACOBI_THRESHOLD`].
pub fn hermitian_eig(m: &DenseOperator) -> Result<HermitianEig> {
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.dim;
    let mut a = m.clone();
    // Symmetrize so rounding in the input cannot bias the iteration.
    for i in 0..n {
        for j in 0..n {
            let avg = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
            *a.get_mut(i, j) = avg;
        }
    }
    let mut v = DenseOperator::identity(n);

    let off_frobenius = |a: &DenseOperator| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = n <= 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_frobenius(&a) <= JACOBI_THRESHOLD {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                // smaller-magnitude root of t² − 2τt − 1 = 0
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Column update: columns p and q of A and V pick up the
                // rotation U with U[pp]=c, U[pq]=−s·e^{iφ}, U[qp]=s·e^{−iφ},
                // U[qq]=c; rows of A follow from Hermiticity.
                let se_m = phase.conj() * s; // s·e^{−iφ}
                let se_p = phase * s; // s·e^{+iφ}
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    *a.get_mut(k, p) = akp * c + akq * se_m;
                    *a.get_mut(k, q) = akq * c - akp * se_p;
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    *a.get_mut(p, k) = apk * c + aqk * se_p;
                    *a.get_mut(q, k) = aqk * c - apk * se_m;
                }
                *a.get_mut(p, q) = Complex64::new(0.0, 0.0);
                *a.get_mut(q, p) = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    *v.get_mut(k, p) = vkp * c + vkq * se_m;
                    *v.get_mut(k, q) = vkq * c - vkp * se_p;
                }
            }
        }
    }
    if !converged && off_frobenius(&a) > JACOBI_THRESHOLD {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DenseOperator::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            *vectors.get_mut(k, new_col) = v.get(k, old_col);
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// `exp(−i · angle · h)` for Hermitian `h`, via eigendecomposition.
pub fn expm_hermitian_generator(h: &DenseOperator, angle: f64) -> Result<DenseOperator> {
    let eig = hermitian_eig(h)?;
    let n = h.dim;
    let mut out = DenseOperator::zeros(n);
    // V · diag(e^{−iθλ}) · V†
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let theta = -angle * eig.values[k];
                let phase = Complex64::new(theta.cos(), theta.sin());
                acc += eig.vectors.get(i, k) * phase * eig.vectors.get(j, k).conj();
            }
            *out.get_mut(i, j) = acc;
        }
    }
    Ok(out)
}

/// Sum of singular values; for a Hermitian matrix, the sum of `|eigenvalue|`.
pub fn trace_norm(m: &DenseOperator) -> Result<f64> {
    if m.is_hermitian(HERMITIAN_TOL) {
        let eig = hermitian_eig(m)?;
        Ok(eig.values.iter().map(|v| v.abs()).sum())
    } else {
        let gram = m.adjoint().matmul(m);
        let eig = hermitian_eig(&gram)?;
        Ok(eig.values.iter().map(|v| v.max(0.0).sqrt()).sum())
    }
}

fn decompose(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for i in (0..dims.len()).rev() {
        out[i] = index % dims[i];
        index /= dims[i];
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    let mut idx = 0;
    for (d, dim) in digits.iter().zip(dims) {
        idx = idx * dim + d;
    }
    idx
}

/// Embed `local` (acting on `targets`, in that order) into the full space
/// described by `dims`, identity elsewhere.
pub fn embed(local: &DenseOperator, dims: &[usize], targets: &[usize]) -> DenseOperator {
    let local_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let local_dim: usize = local_dims.iter().product();
    assert_eq!(local.dim(), local_dim, "local operator dimension mismatch");
    let dim: usize = dims.iter().product();
    let mut out = DenseOperator::zeros(dim);
    let mut digits = vec![0usize; dims.len()];
    let mut local_digits = vec![0usize; targets.len()];
    for col in 0..dim {
        decompose(col, dims, &mut digits);
        for (t, &site) in targets.iter().enumerate() {
            local_digits[t] = digits[site];
        }
        let local_col = compose(&local_digits, &local_dims);
        for local_row in 0..local_dim {
            let entry = local.get(local_row, local_col);
            if entry.re == 0.0 && entry.im == 0.0 {
                continue;
            }
            decompose(local_row, &local_dims, &mut local_digits);
            let mut row_digits = digits.clone();
            for (t, &site) in targets.iter().enumerate() {
                row_digits[site] = local_digits[t];
            }
            let row = compose(&row_digits, dims);
            *out.get_mut(row, col) += entry;
        }
    }
    out
}

/// Partial trace keeping the listed subsystems (indices into `dims`,
/// ascending); the result orders kept subsystems as in the input.
pub fn partial_trace(m: &DenseOperator, dims: &[usize], keep: &[usize]) -> DenseOperator {
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = keep_dims.iter().product();
    let dim: usize = dims.iter().product();
    assert_eq!(m.dim(), dim);
    let mut out = DenseOperator::zeros(out_dim);
    let mut rd = vec![0usize; dims.len()];
    let mut cd = vec![0usize; dims.len()];
    let mut rk = vec![0usize; keep.len()];
    let mut ck = vec![0usize; keep.len()];
    for row in 0..dim {
        decompose(row, dims, &mut rd);
        'col: for col in 0..dim {
            decompose(col, dims, &mut cd);
            for site in 0..dims.len() {
                if !keep.contains(&site) && rd[site] != cd[site] {
                    continue 'col;
                }
            }
            for (t, &site) in keep.iter().enumerate() {
                rk[t] = rd[site];
                ck[t] = cd[site];
            }
            let or = compose(&rk, &keep_dims);
            let oc = compose(&ck, &keep_dims);
            *out.get_mut(or, oc) += m.get(row, col);
        }
    }
    out
}

/// Transpose the listed subsystems in place of the full transpose.
pub fn partial_transpose(m: &DenseOperator, dims: &[usize], transposed: &[usize]) -> DenseOperator {
    let dim: usize = dims.iter().product();
    assert_eq!(m.dim(), dim);
    let mut out = DenseOperator::zeros(dim);
    let mut rd = vec![0usize; dims.len()];
    let mut cd = vec![0usize; dims.len()];
    for row in 0..dim {
        decompose(row, dims, &mut rd);
        for col in 0..dim {
            decompose(col, dims, &mut cd);
            let mut nr = rd.clone();
            let mut nc = cd.clone();
            for &site in transposed {
                nr[site] = cd[site];
                nc[site] = rd[site];
            }
            *out.get_mut(compose(&nr, dims), compose(&nc, dims)) = m.get(row, col);
        }
    }
    out
}
