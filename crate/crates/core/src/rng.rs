//! Counter-based splittable random number generation.
//!
//! Every stream is keyed by `(seed, stream)` and advances a counter through a
//! stateless mixing function, so sweep samples can be generated in any order
//! (or in parallel) and still reproduce bit-identical values.

use num_complex::Complex64;

use crate::dense::{expm_hermitian_generator, DenseOperator};

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic counter-based generator.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(mix64(seed) ^ mix64(stream.wrapping_mul(0xA5A5_A5A5_5A5A_5A5B)));
        CounterRng {
            key,
            counter: 0,
            spare_normal: None,
        }
    }

    /// Stream for sample `index` of a sweep keyed by `seed`.
    pub fn for_sample(seed: u64, index: u64) -> Self {
        Self::new(seed, index.wrapping_add(1))
    }

    /// Derive an independent child stream without disturbing this one.
    pub fn split(&self, tag: u64) -> Self {
        CounterRng {
            key: mix64(self.key ^ mix64(tag ^ 0xD1B5_4A32_D192_ED03)),
            counter: 0,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key ^ mix64(self.counter));
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_complex(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal())
    }

    /// Random Hermitian matrix with Gaussian entries of scale `scale`.
    pub fn hermitian(&mut self, dim: usize, scale: f64) -> DenseOperator {
        let mut m = DenseOperator::zeros(dim);
        for i in 0..dim {
            *m.get_mut(i, i) = Complex64::new(self.normal() * scale, 0.0);
            for j in (i + 1)..dim {
                let v = self.normal_complex() * (scale / 2.0f64.sqrt());
                *m.get_mut(i, j) = v;
                *m.get_mut(j, i) = v.conj();
            }
        }
        m
    }

    /// Haar-like random unitary via the exponential of a random Hermitian.
    pub fn unitary(&mut self, dim: usize) -> DenseOperator {
        let h = self.hermitian(dim, 1.0);
        expm_hermitian_generator(&h, 1.0).expect("random Hermitian exponentiates")
    }

    /// Random full-rank density matrix `G G† / Tr(G G†)` with Ginibre `G`.
    pub fn density_matrix(&mut self, dim: usize) -> DenseOperator {
        let mut g = DenseOperator::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                *g.get_mut(i, j) = self.normal_complex();
            }
        }
        let gram = g.matmul(&g.adjoint());
        let tr = gram.trace().re;
        gram.scale(Complex64::new(1.0 / tr, 0.0))
    }

    /// Random normalized pure-state amplitudes.
    pub fn pure_state(&mut self, dim: usize) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..dim).map(|_| self.normal_complex()).collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut v {
            *c /= norm;
        }
        v
    }
}
