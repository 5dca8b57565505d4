//! Heisenberg-picture descriptors: per-subsystem operator vectors evolved by
//! conjugation with the global step unitaries, with support tracking and the
//! microcausality and locality audits built on exact sparse arithmetic.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::dense::{DenseOperator, UNITARY_TOL};
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliOp, SiteLayout};

/// Projected coefficients below this are dropped after an evolution step, so
/// the locality audit's "exactly zero" stays decidable.
pub const EVOLVE_DROP: f64 = 1e-12;

/// Largest weight the string basis may fail to capture during evolution.
pub const REPRESENTABILITY_TOL: f64 = 1e-10;

/// Which component of a descriptor vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentLabel {
    X,
    Y,
    Z,
}

/// The descriptor vector of one subsystem at one protocol timestamp.
///
/// Quantum qubit subsystems carry three components; a classical subsystem
/// carries the single component of its sole observable.
#[derive(Debug, Clone)]
pub struct DescriptorSet {
    subsystem: String,
    components: Vec<(ComponentLabel, PauliOp)>,
    timestamp_tag: String,
}

/// Spectrum labels of the classical observable: `(1, −1)` on a qubit,
/// `(d−1, d−3, …, −(d−1))` on a d-level system.
pub fn classical_observable_diag(dim: usize) -> Vec<f64> {
    (0..dim).map(|j| (dim - 1) as f64 - 2.0 * j as f64).collect()
}

/// The classical observable of `site` as a Pauli operator on the full layout.
pub fn classical_observable_op(layout: &Arc<SiteLayout>, site: &str) -> Result<PauliOp> {
    let idx = layout.index_of(site)?;
    let d = layout.dim(idx);
    if d == 2 {
        return PauliOp::letter_at(layout, site, Letter::Z);
    }
    // Expand diag(d−1, d−3, …) over clock powers: c_k = (1/d) Σ_j v_j ω^{−jk}.
    let values = classical_observable_diag(d);
    let mut op = PauliOp::zero(layout.clone());
    for k in 0..d {
        let mut c = Complex64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let theta = -2.0 * PI * (j * k) as f64 / d as f64;
            c += Complex64::new(theta.cos(), theta.sin()) * v;
        }
        c /= d as f64;
        let letter = if k == 0 { Letter::I } else { Letter::Diag(k as u32) };
        let term = PauliOp::letter_at(layout, site, letter)?.scale(c);
        op = op.add(&term)?;
    }
    Ok(op)
}

/// Report-format rendering of one descriptor set: every component as a list
/// of `(string text form, [re, im])` pairs.
#[derive(Debug, Clone, Serialize)]
pub struct DescriptorDump {
    pub subsystem: String,
    pub timestamp_tag: String,
    pub components: Vec<ComponentDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentDump {
    pub label: ComponentLabel,
    pub terms: Vec<(String, [f64; 2])>,
}

impl DescriptorSet {
    pub fn subsystem(&self) -> &str {
        &self.subsystem
    }

    pub fn dump(&self) -> DescriptorDump {
        DescriptorDump {
            subsystem: self.subsystem.clone(),
            timestamp_tag: self.timestamp_tag.clone(),
            components: self
                .components
                .iter()
                .map(|(label, op)| ComponentDump {
                    label: *label,
                    terms: op
                        .terms()
                        .map(|(s, c)| (s.text(), [c.re, c.im]))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn timestamp_tag(&self) -> &str {
        &self.timestamp_tag
    }

    pub fn components(&self) -> impl Iterator<Item = (ComponentLabel, &PauliOp)> {
        self.components.iter().map(|(l, op)| (*l, op))
    }

    pub fn component(&self, label: ComponentLabel) -> Option<&PauliOp> {
        self.components
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, op)| op)
    }

    pub fn is_classical(&self) -> bool {
        self.components.len() == 1
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.timestamp_tag = tag.into();
        self
    }

    /// Union of the sites where any component acts non-trivially.
    pub fn support(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, op) in &self.components {
            out.extend(op.support());
        }
        out
    }

    /// Hermiticity of every component plus, on qubit subsystems, the
    /// involution `q² = I` within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (label, op) in &self.components {
            if !op.is_hermitian(tol) {
                return Err(Error::InvalidProtocol(format!(
                    "descriptor {:?} of `{}` is not Hermitian",
                    label, self.subsystem
                )));
            }
        }
        if !self.is_classical() {
            let layout = self.components[0].1.layout().clone();
            let id = PauliOp::identity(layout);
            for (label, op) in &self.components {
                let sq = op.mul(op)?;
                let dev = sq.sub(&id)?.max_coeff();
                if dev > tol {
                    return Err(Error::InvalidProtocol(format!(
                        "descriptor {:?} of `{}` fails q² = I (deviation {dev:.3e})",
                        label, self.subsystem
                    )));
                }
            }
        }
        Ok(())
    }

    /// Conjugate every component by `u`, re-expressed in the string basis.
    pub fn evolve(&self, u: &DenseOperator) -> Result<DescriptorSet> {
        self.evolve_checked(u, None)
    }

    /// Like [`evolve`](Self::evolve), but components whose support is
    /// disjoint from `acts_on` pass through untouched — conjugation by an
    /// operator acting elsewhere is exactly the identity on them.
    pub fn evolve_on(&self, u: &DenseOperator, acts_on: &BTreeSet<String>) -> Result<DescriptorSet> {
        self.evolve_checked(u, Some(acts_on))
    }

    fn evolve_checked(
        &self,
        u: &DenseOperator,
        acts_on: Option<&BTreeSet<String>>,
    ) -> Result<DescriptorSet> {
        let layout = self.components[0].1.layout().clone();
        if u.dim() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                got: u.dim(),
            });
        }
        let dev = u.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        let mut components = Vec::with_capacity(self.components.len());
        for (label, op) in &self.components {
            if let Some(sites) = acts_on {
                if op.support().is_disjoint(sites) {
                    components.push((*label, op.clone()));
                    continue;
                }
            }
            let dense = op.to_dense()?;
            let conjugated = dense.conjugate_by(u);
            let (projected, residual) = PauliOp::project_dense(&layout, &conjugated, EVOLVE_DROP)?;
            if residual > REPRESENTABILITY_TOL {
                return Err(Error::NotRepresentable(residual));
            }
            components.push((*label, projected));
        }
        Ok(DescriptorSet {
            subsystem: self.subsystem.clone(),
            components,
            timestamp_tag: self.timestamp_tag.clone(),
        })
    }
}

/// Fresh descriptor sets at protocol start, tagged `t0`.
///
/// Quantum sites must be qubits and receive `(σx, σy, σz)` padded with
/// identities; classical sites receive the single component of their
/// classical observable.
pub fn init_descriptors(
    layout: &Arc<SiteLayout>,
    classical_sites: &BTreeSet<String>,
) -> Result<Vec<DescriptorSet>> {
    for label in classical_sites {
        layout.index_of(label)?;
    }
    let mut sets = Vec::with_capacity(layout.len());
    for i in 0..layout.len() {
        let label = layout.label(i).to_string();
        let components = if classical_sites.contains(&label) {
            vec![(
                ComponentLabel::Z,
                classical_observable_op(layout, &label)?,
            )]
        } else {
            if !layout.is_qubit(i) {
                return Err(Error::InvalidProtocol(format!(
                    "site `{label}` has dimension {} but is not declared classical",
                    layout.dim(i)
                )));
            }
            vec![
                (ComponentLabel::X, PauliOp::letter_at(layout, &label, Letter::X)?),
                (ComponentLabel::Y, PauliOp::letter_at(layout, &label, Letter::Y)?),
                (ComponentLabel::Z, PauliOp::letter_at(layout, &label, Letter::Z)?),
            ]
        };
        sets.push(DescriptorSet {
            subsystem: label,
            components,
            timestamp_tag: "t0".to_string(),
        });
    }
    Ok(sets)
}

/// Evolve every set by the same global unitary.
pub fn evolve_descriptors(sets: &[DescriptorSet], u: &DenseOperator) -> Result<Vec<DescriptorSet>> {
    sets.iter().map(|s| s.evolve(u)).collect()
}

/// Result of the cross-subsystem commutator scan.
#[derive(Debug, Clone, Serialize)]
pub struct MicrocausalityVerdict {
    pub ok: bool,
    /// Largest coefficient magnitude left in any cross-subsystem commutator.
    pub max_violation: f64,
}

/// Exact check that observables of distinct subsystems commute: every
/// cross-subsystem component pair must have an exactly empty commutator.
pub fn microcausality_check(sets: &[DescriptorSet]) -> Result<MicrocausalityVerdict> {
    let mut max_violation = 0.0f64;
    for (i, a) in sets.iter().enumerate() {
        for b in sets.iter().skip(i + 1) {
            if a.subsystem == b.subsystem {
                continue;
            }
            for (_, qa) in &a.components {
                for (_, qb) in &b.components {
                    let comm = qa.commutator(qb)?;
                    if !comm.is_zero() {
                        max_violation = max_violation.max(comm.max_coeff());
                    }
                }
            }
        }
    }
    Ok(MicrocausalityVerdict {
        ok: max_violation == 0.0,
        max_violation,
    })
}

/// Result of a locality audit across one step.
#[derive(Debug, Clone, Serialize)]
pub struct LocalityVerdict {
    pub ok: bool,
    /// Largest coefficient in `after − before` over all components.
    pub max_change: f64,
}

/// Whether a subsystem outside the acting sites kept its descriptor exactly.
pub fn locality_audit(
    before: &DescriptorSet,
    after: &DescriptorSet,
    step_sites: &BTreeSet<String>,
) -> Result<LocalityVerdict> {
    if before.subsystem != after.subsystem {
        return Err(Error::InvalidProtocol(format!(
            "locality audit compares `{}` with `{}`",
            before.subsystem, after.subsystem
        )));
    }
    if step_sites.contains(&before.subsystem) {
        return Err(Error::InvalidProtocol(format!(
            "subsystem `{}` is itself among the acting sites",
            before.subsystem
        )));
    }
    if before.components.len() != after.components.len() {
        return Err(Error::InvalidProtocol(
            "descriptor component count changed".into(),
        ));
    }
    let mut max_change = 0.0f64;
    for ((_, qb), (_, qa)) in before.components.iter().zip(&after.components) {
        let diff = qa.sub(qb)?;
        if !diff.is_zero() {
            max_change = max_change.max(diff.max_coeff());
        }
    }
    Ok(LocalityVerdict {
        ok: max_change == 0.0,
        max_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{embed, expm_hermitian_generator};
    use crate::pauli::PauliString;
    use crate::rng::CounterRng;
    use crate::states::{named_ket, product_state, DensityState};

    fn three_qubits() -> Arc<SiteLayout> {
        SiteLayout::qubits(&["A", "M", "B"])
    }

    fn classical_m() -> BTreeSet<String> {
        ["M".to_string()].into_iter().collect()
    }

    /// CNOT with control at `control` and target at `target` on a layout of
    /// qubits, built directly from basis-state action.
    fn cnot(layout: &SiteLayout, control: usize, target: usize) -> DenseOperator {
        let mut local = DenseOperator::zeros(4);
        *local.get_mut(0, 0) = Complex64::new(1.0, 0.0);
        *local.get_mut(1, 1) = Complex64::new(1.0, 0.0);
        *local.get_mut(3, 2) = Complex64::new(1.0, 0.0);
        *local.get_mut(2, 3) = Complex64::new(1.0, 0.0);
        embed(&local, &layout.dims(), &[control, target])
    }

    #[test]
    fn init_matches_expected_vectors() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        assert_eq!(sets.len(), 3);

        let a = &sets[0];
        assert_eq!(a.subsystem(), "A");
        assert_eq!(a.components.len(), 3);
        let xii = PauliString::parse("XII", &layout).unwrap();
        assert_eq!(
            a.component(ComponentLabel::X).unwrap().coefficient(&xii),
            Complex64::new(1.0, 0.0)
        );

        let m = &sets[1];
        assert!(m.is_classical());
        let izi = PauliString::parse("IZI", &layout).unwrap();
        assert_eq!(
            m.component(ComponentLabel::Z).unwrap().coefficient(&izi),
            Complex64::new(1.0, 0.0)
        );

        let b = &sets[2];
        assert_eq!(b.components.len(), 3);
        let iix = PauliString::parse("IIX", &layout).unwrap();
        assert_eq!(
            b.component(ComponentLabel::X).unwrap().coefficient(&iix),
            Complex64::new(1.0, 0.0)
        );

        for s in &sets {
            s.validate(1e-12).unwrap();
            assert_eq!(s.timestamp_tag(), "t0");
        }
    }

    #[test]
    fn init_rejects_unknown_classical_site() {
        let layout = three_qubits();
        let bad: BTreeSet<String> = ["Q".to_string()].into_iter().collect();
        assert!(init_descriptors(&layout, &bad).is_err());
    }

    #[test]
    fn init_requires_qudits_to_be_classical() {
        let layout =
            Arc::new(SiteLayout::new(vec![("A".into(), 2), ("M".into(), 3)]).unwrap());
        assert!(init_descriptors(&layout, &BTreeSet::new()).is_err());
        let ok = init_descriptors(&layout, &["M".to_string()].into_iter().collect()).unwrap();
        // diag(2, 0, −2) from the clock expansion
        let dense = ok[1]
            .component(ComponentLabel::Z)
            .unwrap()
            .to_dense()
            .unwrap();
        for (j, want) in [2.0, 0.0, -2.0].iter().enumerate() {
            // M is the second site: indices j on M at A=0 block
            assert!((dense.get(j, j).re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_evolution_is_identity() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let id = DenseOperator::identity(8);
        let evolved = evolve_descriptors(&sets, &id).unwrap();
        for (before, after) in sets.iter().zip(&evolved) {
            for ((_, qb), (_, qa)) in before.components.iter().zip(&after.components) {
                assert!(qa.sub(qb).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn cnot_propagates_mediator_z() {
        // q_z(M) = IZI → ZZI under CNOT(A→M)
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let u = cnot(&layout, 0, 1);
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        let m = &evolved[1];
        let zzi = PauliString::parse("ZZI", &layout).unwrap();
        let op = m.component(ComponentLabel::Z).unwrap();
        assert_eq!(op.num_terms(), 1);
        assert!((op.coefficient(&zzi) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        m.validate(1e-10).unwrap();
    }

    #[test]
    fn cnot_leaves_b_untouched() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let u = cnot(&layout, 0, 1);
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        let diff = evolved[2]
            .component(ComponentLabel::X)
            .unwrap()
            .sub(sets[2].component(ComponentLabel::X).unwrap())
            .unwrap();
        assert!(diff.is_zero());
    }

    #[test]
    fn support_tracking() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        assert_eq!(
            sets[0].support(),
            ["A".to_string()].into_iter().collect::<BTreeSet<_>>()
        );
        let u = cnot(&layout, 0, 1);
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        assert_eq!(
            evolved[1].support(),
            ["A".to_string(), "M".to_string()]
                .into_iter()
                .collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn classical_support_grows_only_into_diagonal_coupling() {
        // a diagonal M⊕B coupling keeps the classical descriptor inside {M, B}
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let zm = PauliOp::letter_at(&layout, "M", Letter::Z).unwrap();
        let zb = PauliOp::letter_at(&layout, "B", Letter::Z).unwrap();
        let h = zm.mul(&zb).unwrap().to_dense().unwrap();
        let u = expm_hermitian_generator(&h, 0.613).unwrap();
        let evolved = sets[1].evolve(&u).unwrap();
        let allowed: BTreeSet<String> =
            ["M".to_string(), "B".to_string()].into_iter().collect();
        assert!(evolved.support().is_subset(&allowed));
    }

    #[test]
    fn microcausality_at_t0_and_after_evolution() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let v = microcausality_check(&sets).unwrap();
        assert!(v.ok);
        assert_eq!(v.max_violation, 0.0);

        // random global unitary preserves cross-subsystem commutators
        let mut rng = CounterRng::new(2, 0);
        let u = rng.unitary(8);
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        let v = microcausality_check(&evolved).unwrap();
        assert!(v.ok, "violation {:.3e}", v.max_violation);
    }

    #[test]
    fn microcausality_detects_overlapping_components() {
        // Deliberately corrupt: both "A" and "B" hold anticommuting letters
        // on the same site.
        let layout = SiteLayout::qubits(&["S", "T"]);
        let xa = PauliOp::letter_at(&layout, "S", Letter::X).unwrap();
        let zb = PauliOp::letter_at(&layout, "S", Letter::Z).unwrap();
        let a = DescriptorSet {
            subsystem: "A".into(),
            components: vec![(ComponentLabel::X, xa)],
            timestamp_tag: "t0".into(),
        };
        let b = DescriptorSet {
            subsystem: "B".into(),
            components: vec![(ComponentLabel::Z, zb)],
            timestamp_tag: "t0".into(),
        };
        let v = microcausality_check(&[a, b]).unwrap();
        assert!(!v.ok);
        assert!((v.max_violation - 2.0).abs() < 1e-12);
    }

    #[test]
    fn locality_audit_passes_for_disjoint_step() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let u = cnot(&layout, 0, 1);
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        let step: BTreeSet<String> = ["A".to_string(), "M".to_string()].into_iter().collect();
        let v = locality_audit(&sets[2], &evolved[2], &step).unwrap();
        assert!(v.ok);
    }

    #[test]
    fn locality_audit_flags_direct_coupling() {
        // A direct A–B coupling exp(−i(π/4)·Z_A⊗Z_B) claimed to act on A only.
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let za = PauliOp::letter_at(&layout, "A", Letter::Z).unwrap();
        let zb = PauliOp::letter_at(&layout, "B", Letter::Z).unwrap();
        let h = za.mul(&zb).unwrap().to_dense().unwrap();
        let u = expm_hermitian_generator(&h, std::f64::consts::FRAC_PI_4).unwrap();
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        let claimed: BTreeSet<String> = ["A".to_string()].into_iter().collect();
        let v = locality_audit(&sets[2], &evolved[2], &claimed).unwrap();
        assert!(!v.ok);
        assert!(v.max_change > 0.1);
    }

    #[test]
    fn locality_audit_identity_step() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let evolved = evolve_descriptors(&sets, &DenseOperator::identity(8)).unwrap();
        let step: BTreeSet<String> = ["A".to_string()].into_iter().collect();
        for i in [1usize, 2] {
            let v = locality_audit(&sets[i], &evolved[i], &step).unwrap();
            assert!(v.ok);
        }
    }

    #[test]
    fn locality_audit_rejects_member_subsystem() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let step: BTreeSet<String> = ["B".to_string()].into_iter().collect();
        assert!(locality_audit(&sets[2], &sets[2], &step).is_err());
    }

    #[test]
    fn involution_preserved_by_evolution() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &BTreeSet::new()).unwrap();
        let mut rng = CounterRng::new(5, 1);
        let u = rng.unitary(8);
        for set in evolve_descriptors(&sets, &u).unwrap() {
            set.validate(1e-10).unwrap();
        }
    }

    #[test]
    fn support_monotonicity_under_two_site_steps() {
        let layout = three_qubits();
        let mut rng = CounterRng::new(8, 0);
        for trial in 0..10 {
            let sets = init_descriptors(&layout, &classical_m()).unwrap();
            // random two-site step on (A, M) or (M, B)
            let pair: [usize; 2] = if trial % 2 == 0 { [0, 1] } else { [1, 2] };
            let local = rng.hermitian(4, 1.0);
            let h = embed(&local, &layout.dims(), &pair);
            let u = expm_hermitian_generator(&h, rng.uniform(0.0, 2.0)).unwrap();
            let step_sites: BTreeSet<String> = pair
                .iter()
                .map(|&i| layout.label(i).to_string())
                .collect();
            let evolved = evolve_descriptors(&sets, &u).unwrap();
            for (before, after) in sets.iter().zip(&evolved) {
                let before_support = before.support();
                let after_support = after.support();
                if before_support.is_disjoint(&step_sites) {
                    assert_eq!(before_support, after_support);
                    for ((_, qb), (_, qa)) in before.components.iter().zip(&after.components)
                    {
                        assert!(qa.sub(qb).unwrap().is_zero());
                    }
                } else {
                    // support may only grow into the step sites
                    let allowed: BTreeSet<String> =
                        before_support.union(&step_sites).cloned().collect();
                    assert!(after_support.is_subset(&allowed));
                }
            }
        }
    }

    #[test]
    fn heisenberg_schrodinger_expectations_agree() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let rho0 = product_state(
            &[
                DensityState::from_pure(&named_ket("+", 2).unwrap(), vec![2], "A").unwrap(),
                DensityState::from_pure(&named_ket("0", 2).unwrap(), vec![2], "M").unwrap(),
                DensityState::from_pure(&named_ket("0", 2).unwrap(), vec![2], "B").unwrap(),
            ],
            "s",
        )
        .unwrap();
        let mut rng = CounterRng::new(13, 0);
        let u = rng.unitary(8);
        let rho_t = rho0.apply_unitary(&u).unwrap();
        let evolved = evolve_descriptors(&sets, &u).unwrap();
        for (set0, set_t) in sets.iter().zip(&evolved) {
            for ((_, q0), (_, qt)) in set0.components.iter().zip(&set_t.components) {
                let lhs = rho0.expectation(&qt.to_dense().unwrap()).unwrap();
                let rhs = rho_t.expectation(&q0.to_dense().unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn evolve_rejects_non_unitary() {
        let layout = three_qubits();
        let sets = init_descriptors(&layout, &classical_m()).unwrap();
        let bad = DenseOperator::identity(8).scale(Complex64::new(2.0, 0.0));
        assert!(matches!(
            sets[0].evolve(&bad),
            Err(Error::NotUnitary(_))
        ));
    }
}
