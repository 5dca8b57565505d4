//! Observable-algebra analysis and the variable-level classification of a
//! system: information variables (copyable, permutable attribute sets),
//! superinformation media (two such variables whose union is not one), and
//! the commutativity of the algebra generated by declared observables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{hermitian_eig, DenseOperator};
use crate::error::{Error, Result};

/// Normalization and orthogonality tolerance for attribute vectors.
pub const ATTRIBUTE_TOL: f64 = 1e-10;

/// Commutator norm below which an algebra counts as commutative.
pub const COMMUTATIVE_TOL: f64 = 1e-12;

/// One labeled attribute: an orthonormal set of vectors spanning a subspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Attribute {
    pub label: String,
    /// Vectors as lists of `[re, im]` pairs.
    pub vectors: Vec<Vec<[f64; 2]>>,
}

/// A physical variable presented extensionally: a list of disjoint
/// attributes of a `dim`-dimensional system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableSpec {
    pub dim: usize,
    pub attributes: Vec<Attribute>,
}

impl VariableSpec {
    /// A full orthonormal basis as `dim` one-dimensional attributes.
    pub fn from_basis(dim: usize, columns: &DenseOperator, prefix: &str) -> Self {
        let attributes = (0..dim)
            .map(|k| Attribute {
                label: format!("{prefix}{k}"),
                vectors: vec![(0..dim)
                    .map(|i| {
                        let c = columns.get(i, k);
                        [c.re, c.im]
                    })
                    .collect()],
            })
            .collect();
        VariableSpec { dim, attributes }
    }

    pub fn attribute_vectors(&self, idx: usize) -> Vec<Vec<Complex64>> {
        self.attributes[idx]
            .vectors
            .iter()
            .map(|v| v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::InvalidVariable("no attributes".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for (ai, attr) in self.attributes.iter().enumerate() {
            if !labels.insert(attr.label.clone()) {
                return Err(Error::InvalidVariable(format!(
                    "duplicate attribute label `{}`",
                    attr.label
                )));
            }
            if attr.vectors.is_empty() {
                return Err(Error::InvalidVariable(format!(
                    "attribute `{}` has no vectors",
                    attr.label
                )));
            }
            let vs = self.attribute_vectors(ai);
            for v in &vs {
                if v.len() != self.dim {
                    return Err(Error::InvalidVariable(format!(
                        "attribute `{}` vector has length {} ≠ dim {}",
                        attr.label,
                        v.len(),
                        self.dim
                    )));
                }
            }
            for (i, v) in vs.iter().enumerate() {
                let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > ATTRIBUTE_TOL {
                    return Err(Error::InvalidVariable(format!(
                        "attribute `{}` vector {i} has norm {norm}",
                        attr.label
                    )));
                }
                for w in vs.iter().skip(i + 1) {
                    if overlap(v, w).norm() > ATTRIBUTE_TOL {
                        return Err(Error::InvalidVariable(format!(
                            "attribute `{}` vectors are not orthonormal",
                            attr.label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Projectors onto each attribute subspace.
    pub fn projectors(&self) -> Vec<DenseOperator> {
        (0..self.attributes.len())
            .map(|ai| {
                let mut p = DenseOperator::zeros(self.dim);
                for v in self.attribute_vectors(ai) {
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            *p.get_mut(i, j) += v[i] * v[j].conj();
                        }
                    }
                }
                p
            })
            .collect()
    }
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Singular values of the overlap matrix between two orthonormal families
/// (the cosines of the principal angles): 1 means a shared direction, 0 an
/// orthogonal one, anything in between a genuinely complementary direction.
fn overlap_singular_values(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<f64> {
    let (na, nb) = (a.len(), b.len());
    let mut m = DenseOperator::zeros(na.max(nb));
    for (i, va) in a.iter().enumerate() {
        for (j, vb) in b.iter().enumerate() {
            *m.get_mut(i, j) = overlap(va, vb);
        }
    }
    let gram = m.adjoint().matmul(&m);
    let eig = hermitian_eig(&gram).expect("gram matrix is Hermitian");
    eig.values.iter().map(|v| v.max(0.0).sqrt()).collect()
}

/// Maximum pairwise vector overlap between two attribute subspaces.
fn max_cross_overlap(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for va in a {
        for vb in b {
            worst = worst.max(overlap(va, vb).norm());
        }
    }
    worst
}

/// An orthogonal (trace inner product) Hermitian basis of the associative
/// algebra generated by a set of observables.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    pub dim: usize,
    pub elements: Vec<DenseOperator>,
    pub commutative: bool,
}

impl AlgebraBasis {
    pub fn algebra_dimension(&self) -> usize {
        self.elements.len()
    }
}

fn gram_schmidt_insert(basis: &mut Vec<DenseOperator>, candidate: &DenseOperator) -> bool {
    let mut v = candidate.clone();
    for b in basis.iter() {
        let coeff = b.hs_inner(&v).re / b.hs_inner(b).re;
        v = v.sub(&b.scale(Complex64::new(coeff, 0.0)));
    }
    let norm = v.frobenius();
    if norm > 1e-9 {
        basis.push(v.scale(Complex64::new(1.0 / norm, 0.0)));
        true
    } else {
        false
    }
}

/// Close a set of Hermitian generators under products, keeping a Hermitian
/// orthogonal basis; flags whether the resulting algebra is commutative.
pub fn algebra_closure(generators: &[DenseOperator]) -> Result<AlgebraBasis> {
    if generators.is_empty() {
        return Err(Error::InvalidVariable("no generators".into()));
    }
    let dim = generators[0].dim();
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: g.dim(),
            });
        }
        if !g.is_hermitian(1e-10) {
            return Err(Error::NotHermitian(g.hermiticity_deviation()));
        }
    }
    let mut basis: Vec<DenseOperator> = Vec::new();
    gram_schmidt_insert(&mut basis, &DenseOperator::identity(dim));
    for g in generators {
        gram_schmidt_insert(&mut basis, g);
    }
    loop {
        let current = basis.clone();
        let mut grew = false;
        for a in &current {
            for b in &current {
                let prod = a.matmul(b);
                // Hermitian and anti-Hermitian parts keep the basis Hermitian.
                let herm = prod.add(&prod.adjoint()).scale(Complex64::new(0.5, 0.0));
                let anti = prod
                    .sub(&prod.adjoint())
                    .scale(Complex64::new(0.0, -0.5));
                grew |= gram_schmidt_insert(&mut basis, &herm);
                grew |= gram_schmidt_insert(&mut basis, &anti);
                if basis.len() == dim * dim {
                    grew = false;
                    break;
                }
            }
            if basis.len() == dim * dim {
                break;
            }
        }
        if !grew || basis.len() == dim * dim {
            break;
        }
    }
    let mut commutative = true;
    'outer: for (i, a) in basis.iter().enumerate() {
        for b in basis.iter().skip(i + 1) {
            let comm = a.matmul(b).sub(&b.matmul(a));
            if comm.max_abs() > COMMUTATIVE_TOL {
                commutative = false;
                break 'outer;
            }
        }
    }
    Ok(AlgebraBasis {
        dim,
        elements: basis,
        commutative,
    })
}

/// Verdict of the information-variable check.
#[derive(Debug, Clone, Serialize)]
pub struct InformationVariableVerdict {
    /// All attribute subspaces pairwise orthogonal: copying is possible.
    pub is_information_variable: bool,
    pub max_cross_overlap: f64,
    /// A unitary realizing the cyclic relabeling of attributes exists
    /// (orthogonality plus matching subspace dimensions).
    pub permutation_unitary_exists: bool,
}

/// A variable supports copying (and hence reversible permutation of its
/// labels) exactly when its attributes are perfectly distinguishable —
/// pairwise orthogonal subspaces.
pub fn information_variable_check(v: &VariableSpec) -> Result<InformationVariableVerdict> {
    v.validate()?;
    if v.attributes.len() < 2 {
        return Err(Error::InvalidVariable(
            "an information variable needs at least two attributes".into(),
        ));
    }
    let families: Vec<Vec<Vec<Complex64>>> = (0..v.attributes.len())
        .map(|i| v.attribute_vectors(i))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..families.len() {
        for j in (i + 1)..families.len() {
            worst = worst.max(max_cross_overlap(&families[i], &families[j]));
        }
    }
    let orthogonal = worst <= ATTRIBUTE_TOL;
    // cyclic permutation i → i+1 needs equal subspace dimensions around the cycle
    let dims_match = (0..families.len())
        .all(|i| families[i].len() == families[(i + 1) % families.len()].len());
    Ok(InformationVariableVerdict {
        is_information_variable: orthogonal,
        max_cross_overlap: worst,
        permutation_unitary_exists: orthogonal && dims_match,
    })
}

/// Verdict of the superinformation check for an ordered pair of variables.
#[derive(Debug, Clone, Serialize)]
pub struct SuperinformationVerdict {
    pub holds: bool,
    pub z_is_information_variable: bool,
    pub v_is_information_variable: bool,
    /// No attribute subspace of one variable shares a direction with one of
    /// the other (principal overlap strictly below 1).
    pub disjoint: bool,
    /// Some cross pair has a fractional principal overlap — a direction that
    /// is neither shared nor orthogonal — so the union cannot be copied.
    pub union_fails: bool,
}

/// Two information variables of equal cardinality form a superinformation
/// pair when they are geometrically disjoint and their union is not an
/// information variable.
pub fn superinformation_check(
    z: &VariableSpec,
    v: &VariableSpec,
) -> Result<SuperinformationVerdict> {
    if z.dim != v.dim {
        return Err(Error::DimensionMismatch {
            expected: z.dim,
            got: v.dim,
        });
    }
    if z.attributes.len() != v.attributes.len() {
        return Err(Error::InvalidVariable(format!(
            "variables have different cardinalities ({} vs {})",
            z.attributes.len(),
            v.attributes.len()
        )));
    }
    let z_iv = information_variable_check(z)?.is_information_variable;
    let v_iv = information_variable_check(v)?.is_information_variable;

    let z_fams: Vec<_> = (0..z.attributes.len())
        .map(|i| z.attribute_vectors(i))
        .collect();
    let v_fams: Vec<_> = (0..v.attributes.len())
        .map(|i| v.attribute_vectors(i))
        .collect();
    let mut disjoint = true;
    let mut union_fails = false;
    for zf in &z_fams {
        for vf in &v_fams {
            for sigma in overlap_singular_values(zf, vf) {
                if sigma >= 1.0 - ATTRIBUTE_TOL {
                    disjoint = false;
                } else if sigma > ATTRIBUTE_TOL {
                    union_fails = true;
                }
            }
        }
    }
    Ok(SuperinformationVerdict {
        holds: z_iv && v_iv && disjoint && union_fails,
        z_is_information_variable: z_iv,
        v_is_information_variable: v_iv,
        disjoint,
        union_fails,
    })
}

/// Classification outcome with the witnessing pair, when one exists.
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub non_classical: bool,
    /// Indices of the witnessing variable pair.
    pub witness_pair: Option<(usize, usize)>,
}

/// A system is non-classical when some pair of its declared variables is a
/// superinformation pair.
pub fn classify_system(variables: &[VariableSpec]) -> Result<Classification> {
    if variables.is_empty() {
        return Err(Error::InvalidVariable("no variables declared".into()));
    }
    for v in variables {
        v.validate()?;
    }
    for i in 0..variables.len() {
        for j in (i + 1)..variables.len() {
            let (a, b) = (&variables[i], &variables[j]);
            if a.dim != b.dim || a.attributes.len() != b.attributes.len() {
                continue;
            }
            if superinformation_check(a, b)?.holds {
                return Ok(Classification {
                    non_classical: true,
                    witness_pair: Some((i, j)),
                });
            }
        }
    }
    Ok(Classification {
        non_classical: false,
        witness_pair: None,
    })
}

/// Z and X bases of a qubit, the canonical superinformation pair.
pub fn qubit_z_basis() -> VariableSpec {
    VariableSpec::from_basis(2, &DenseOperator::identity(2), "z")
}

pub fn qubit_x_basis() -> VariableSpec {
    let s = 1.0 / 2.0f64.sqrt();
    let cols = DenseOperator::from_rows(vec![
        vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
    ]);
    VariableSpec::from_basis(2, &cols, "x")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use crate::states::pauli_matrix;

    #[test]
    fn single_z_algebra_is_two_dimensional_commutative() {
        let basis = algebra_closure(&[pauli_matrix(2)]).unwrap();
        assert_eq!(basis.algebra_dimension(), 2);
        assert!(basis.commutative);
    }

    #[test]
    fn z_and_x_generate_the_full_matrix_algebra() {
        let basis = algebra_closure(&[pauli_matrix(2), pauli_matrix(0)]).unwrap();
        assert_eq!(basis.algebra_dimension(), 4);
        assert!(!basis.commutative);
    }

    #[test]
    fn two_site_z_algebra_is_diagonal() {
        let id = DenseOperator::identity(2);
        let z1 = pauli_matrix(2).kron(&id);
        let z2 = id.kron(&pauli_matrix(2));
        let basis = algebra_closure(&[z1, z2]).unwrap();
        assert_eq!(basis.algebra_dimension(), 4);
        assert!(basis.commutative);
    }

    #[test]
    fn closure_is_idempotent() {
        let basis = algebra_closure(&[pauli_matrix(2), pauli_matrix(0)]).unwrap();
        let again = algebra_closure(&basis.elements).unwrap();
        assert_eq!(basis.algebra_dimension(), again.algebra_dimension());
    }

    #[test]
    fn z_basis_is_information_variable() {
        let v = information_variable_check(&qubit_z_basis()).unwrap();
        assert!(v.is_information_variable);
        assert!(v.permutation_unitary_exists);
        assert!(v.max_cross_overlap < 1e-12);
    }

    #[test]
    fn overlapping_attributes_are_not_clonable() {
        let s = 1.0 / 2.0f64.sqrt();
        let spec = VariableSpec {
            dim: 2,
            attributes: vec![
                Attribute {
                    label: "zero".into(),
                    vectors: vec![vec![[1.0, 0.0], [0.0, 0.0]]],
                },
                Attribute {
                    label: "plus".into(),
                    vectors: vec![vec![[s, 0.0], [s, 0.0]]],
                },
            ],
        };
        let v = information_variable_check(&spec).unwrap();
        assert!(!v.is_information_variable);
        assert!((v.max_cross_overlap - s).abs() < 1e-12);
    }

    #[test]
    fn two_plane_attributes_of_dim_four() {
        let e = |k: usize| {
            let mut v = vec![[0.0, 0.0]; 4];
            v[k] = [1.0, 0.0];
            v
        };
        let spec = VariableSpec {
            dim: 4,
            attributes: vec![
                Attribute {
                    label: "low".into(),
                    vectors: vec![e(0), e(1)],
                },
                Attribute {
                    label: "high".into(),
                    vectors: vec![e(2), e(3)],
                },
            ],
        };
        let v = information_variable_check(&spec).unwrap();
        assert!(v.is_information_variable);
        assert!(v.permutation_unitary_exists);
    }

    #[test]
    fn qubit_is_superinformation_medium() {
        let v = superinformation_check(&qubit_z_basis(), &qubit_x_basis()).unwrap();
        assert!(v.holds);
        assert!(v.disjoint);
        assert!(v.union_fails);
    }

    #[test]
    fn relabeled_basis_is_not_disjoint() {
        let z = qubit_z_basis();
        let mut relabeled = z.clone();
        relabeled.attributes.swap(0, 1);
        let v = superinformation_check(&z, &relabeled).unwrap();
        assert!(!v.holds);
        assert!(!v.disjoint);
    }

    #[test]
    fn permuted_product_basis_is_not_superinformation() {
        // Z⊗Z product basis against a permutation of itself: the union is
        // still orthogonal, so the pair fails.
        let id4 = DenseOperator::identity(4);
        let z = VariableSpec::from_basis(4, &id4, "zz");
        let mut perm = DenseOperator::zeros(4);
        *perm.get_mut(1, 0) = Complex64::new(1.0, 0.0);
        *perm.get_mut(2, 1) = Complex64::new(1.0, 0.0);
        *perm.get_mut(3, 2) = Complex64::new(1.0, 0.0);
        *perm.get_mut(0, 3) = Complex64::new(1.0, 0.0);
        let v = VariableSpec::from_basis(4, &perm, "perm");
        let verdict = superinformation_check(&z, &v).unwrap();
        assert!(!verdict.holds);
        assert!(!verdict.disjoint);
        assert!(!verdict.union_fails);
    }

    #[test]
    fn classify_single_variable_classical() {
        let c = classify_system(&[qubit_z_basis()]).unwrap();
        assert!(!c.non_classical);
        assert!(c.witness_pair.is_none());
    }

    #[test]
    fn classify_z_x_non_classical() {
        let c = classify_system(&[qubit_z_basis(), qubit_x_basis()]).unwrap();
        assert!(c.non_classical);
        assert_eq!(c.witness_pair, Some((0, 1)));
    }

    #[test]
    fn classify_commuting_product_bases_classical() {
        let id4 = DenseOperator::identity(4);
        let z1 = VariableSpec::from_basis(4, &id4, "a");
        let z2 = VariableSpec::from_basis(4, &id4, "b");
        let c = classify_system(&[z1, z2]).unwrap();
        assert!(!c.non_classical);
    }

    #[test]
    fn information_check_is_permutation_invariant() {
        let mut rng = CounterRng::new(71, 0);
        let u = rng.unitary(3);
        let mut spec = VariableSpec::from_basis(3, &u, "v");
        let base = information_variable_check(&spec).unwrap();
        spec.attributes.rotate_left(1);
        let rotated = information_variable_check(&spec).unwrap();
        assert_eq!(
            base.is_information_variable,
            rotated.is_information_variable
        );
    }

    #[test]
    fn superinformation_equivalent_to_projector_noncommutativity() {
        // On random qubit and qutrit bases, the pair is superinformation
        // exactly when the projector algebra fails to commute.
        let mut rng = CounterRng::new(73, 0);
        for trial in 0..40 {
            let dim = if trial % 2 == 0 { 2 } else { 3 };
            let z = VariableSpec::from_basis(dim, &DenseOperator::identity(dim), "z");
            let v = if trial % 5 == 0 {
                // commuting case: permuted, rephased basis
                let mut m = DenseOperator::zeros(dim);
                for k in 0..dim {
                    let phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
                    *m.get_mut((k + 1) % dim, k) =
                        Complex64::new(phase.cos(), phase.sin());
                }
                VariableSpec::from_basis(dim, &m, "v")
            } else {
                VariableSpec::from_basis(dim, &rng.unitary(dim), "v")
            };
            let super_pair = superinformation_check(&z, &v).unwrap().holds;
            let mut gens = z.projectors();
            gens.extend(v.projectors());
            let commutative = algebra_closure(&gens).unwrap().commutative;
            assert_eq!(
                super_pair, !commutative,
                "trial {trial}: super {super_pair} vs commutative {commutative}"
            );
        }
    }
}
