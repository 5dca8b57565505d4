//! Staged protocol execution in both pictures — density states forward,
//! descriptors by conjugation — plus the audits that feed the witness
//! verdict: the two-stage task check, the factorization audit, the locality
//! record, the classical-compatibility record and the mediator-variable
//! analysis.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::DenseOperator;
use crate::descriptors::{
    init_descriptors, microcausality_check, DescriptorDump, DescriptorSet,
    MicrocausalityVerdict,
};
use crate::error::{Error, Result};
use crate::mediators::{classical_compatibility, step_unitary, StepSpec, BLOCK_DIAG_TOL};
use crate::pauli::SiteLayout;
use crate::states::{named_ket, product_state, DensityDump, DensityState};
use crate::witness::{
    negativity, trace_distance, NEGATIVITY_THRESHOLD, SINGLE_SHOT_DISTANCE,
};

/// Heisenberg/Schrödinger expectation agreement required of every run.
pub const PICTURE_CONSISTENCY_TOL: f64 = 1e-10;

/// One local initialization: a named ket or an explicit density matrix in
/// row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocalState {
    Ket(String),
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
}

impl LocalState {
    fn to_state(&self, dim: usize, label: &str) -> Result<DensityState> {
        match self {
            LocalState::Ket(name) => {
                DensityState::from_pure(&named_ket(name, dim)?, vec![dim], label)
            }
            LocalState::Matrix { matrix } => {
                if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                    return Err(Error::InvalidState {
                        label: label.to_string(),
                        reason: format!("matrix is not {dim}×{dim}"),
                    });
                }
                let rows = matrix
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|[re, im]| num_complex::Complex64::new(*re, *im))
                            .collect()
                    })
                    .collect();
                DensityState::new(DenseOperator::from_rows(rows), vec![dim], label)
            }
        }
    }
}

/// The two distinguishable initial conditions, one local state per site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Initializations {
    pub plus: Vec<LocalState>,
    pub minus: Vec<LocalState>,
}

/// One declared stage: the sites it is allowed to touch and its steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage {
    pub label: String,
    pub sites: BTreeSet<String>,
    pub steps: Vec<StepSpec>,
}

/// A declarative staged experiment over a site layout with one mediator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub layout: Arc<SiteLayout>,
    pub mediator: String,
    #[serde(default)]
    pub classical_sites: BTreeSet<String>,
    pub initializations: Initializations,
    pub stages: Vec<Stage>,
}

impl ProtocolSpec {
    /// Probe labels: every site except the mediator, in layout order.
    pub fn probes(&self) -> Vec<String> {
        self.layout
            .labels()
            .filter(|l| *l != self.mediator)
            .map(|l| l.to_string())
            .collect()
    }

    pub fn mediator_index(&self) -> Result<usize> {
        self.layout.index_of(&self.mediator)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.index_of(&self.mediator)?;
        if self.probes().len() != 2 {
            return Err(Error::InvalidProtocol(format!(
                "witness protocols need exactly two probes, layout has {}",
                self.probes().len()
            )));
        }
        for site in &self.classical_sites {
            self.layout.index_of(site)?;
        }
        for i in 0..self.layout.len() {
            if !self.layout.is_qubit(i)
                && !self.classical_sites.contains(self.layout.label(i))
            {
                return Err(Error::InvalidProtocol(format!(
                    "site `{}` has dimension {} but is not declared classical",
                    self.layout.label(i),
                    self.layout.dim(i)
                )));
            }
        }
        for init in [&self.initializations.plus, &self.initializations.minus] {
            if init.len() != self.layout.len() {
                return Err(Error::InvalidProtocol(format!(
                    "initialization lists {} local states for {} sites",
                    init.len(),
                    self.layout.len()
                )));
            }
        }
        for stage in &self.stages {
            for site in &stage.sites {
                self.layout.index_of(site)?;
            }
            for step in &stage.steps {
                step.validate(&self.layout)?;
                if !step.acts_on_set().is_subset(&stage.sites) {
                    return Err(Error::InvalidProtocol(format!(
                        "step on {:?} exceeds stage `{}` sites {:?}",
                        step.on, stage.label, stage.sites
                    )));
                }
            }
        }
        let (plus, minus) = self.initial_states()?;
        let probe_idx: Vec<usize> = self
            .probes()
            .iter()
            .map(|p| self.layout.index_of(p))
            .collect::<Result<_>>()?;
        let d_probe = trace_distance(
            &plus.partial_trace(&probe_idx)?,
            &minus.partial_trace(&probe_idx)?,
        )?;
        let d_full = trace_distance(&plus, &minus)?;
        if d_probe < SINGLE_SHOT_DISTANCE && d_full < SINGLE_SHOT_DISTANCE {
            return Err(Error::InvalidProtocol(format!(
                "initializations are not distinguishable (probe distance {d_probe:.6}, \
                 full distance {d_full:.6})"
            )));
        }
        Ok(())
    }

    /// Build the two product initializations.
    pub fn initial_states(&self) -> Result<(DensityState, DensityState)> {
        let build = |locals: &[LocalState], label: &str| -> Result<DensityState> {
            let states = locals
                .iter()
                .enumerate()
                .map(|(i, ls)| ls.to_state(self.layout.dim(i), self.layout.label(i)))
                .collect::<Result<Vec<_>>>()?;
            product_state(&states, label)
        };
        Ok((
            build(&self.initializations.plus, "s_plus")?,
            build(&self.initializations.minus, "s_minus")?,
        ))
    }
}

/// Classical-compatibility record for one executed step.
#[derive(Debug, Clone, Serialize)]
pub struct StepAudit {
    pub stage: String,
    pub step_index: usize,
    pub compatible: bool,
    pub violation_norm: f64,
}

/// Locality record for one subsystem across one stage. Audited subsystems
/// are those whose descriptor support is disjoint from the stage's declared
/// sites; honest Heisenberg flow leaves them exactly unchanged.
#[derive(Debug, Clone, Serialize)]
pub struct LocalityRecord {
    pub stage: String,
    pub subsystem: String,
    pub ok: bool,
    pub max_change: f64,
}

/// Full audit record of a protocol run: states per initialization, one
/// shared descriptor history (descriptors are state-independent), and the
/// per-step / per-stage audits.
#[derive(Debug, Clone)]
pub struct ProtocolTrace {
    pub spec: ProtocolSpec,
    /// `t0`, `t1`, …, one tag per stage boundary.
    pub tags: Vec<String>,
    pub states_plus: Vec<DensityState>,
    pub states_minus: Vec<DensityState>,
    pub descriptors: Vec<Vec<DescriptorSet>>,
    pub step_audits: Vec<StepAudit>,
    pub locality: Vec<LocalityRecord>,
}

impl ProtocolTrace {
    pub fn final_index(&self) -> usize {
        self.tags.len() - 1
    }

    pub fn locality_ok(&self) -> bool {
        self.locality.iter().all(|r| r.ok)
    }

    pub fn all_steps_compatible(&self) -> bool {
        self.step_audits.iter().all(|a| a.compatible)
    }

    /// Microcausality at every stage boundary; exact zero required.
    pub fn microcausality(&self) -> Result<MicrocausalityVerdict> {
        let mut max_violation = 0.0f64;
        let mut ok = true;
        for sets in &self.descriptors {
            let v = microcausality_check(sets)?;
            ok &= v.ok;
            max_violation = max_violation.max(v.max_violation);
        }
        Ok(MicrocausalityVerdict { ok, max_violation })
    }

    /// Largest Heisenberg/Schrödinger expectation mismatch across the run:
    /// `Tr(ρ(t0)·q(t))` against `Tr(ρ(t)·q(t0))` for every component.
    pub fn picture_consistency(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (states, init) in [
            (&self.states_plus, &self.states_plus[0]),
            (&self.states_minus, &self.states_minus[0]),
        ] {
            for (si, state) in states.iter().enumerate() {
                for (set_t, set_0) in self.descriptors[si].iter().zip(&self.descriptors[0]) {
                    for ((_, qt), (_, q0)) in set_t.components().zip(set_0.components()) {
                        let heis = init.expectation(&qt.to_dense()?)?;
                        let schr = state.expectation(&q0.to_dense()?)?;
                        worst = worst.max((heis - schr).norm());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Execute the protocol through all stages for both initializations.
///
/// States evolve forward step by step; descriptors are the `t0` operators
/// conjugated by the accumulated unitary (`q(t) = U_tot† q(0) U_tot`), so a
/// stage changes the descriptor of a subsystem exactly when one of its steps
/// acts on that subsystem's wire. Descriptors of unstepped subsystems carry
/// over bit-identically, which is what infinite-precision conjugation would
/// give, since the stage unitary commutes with their `t0` operators.
pub fn run(spec: &ProtocolSpec) -> Result<ProtocolTrace> {
    spec.validate()?;
    let layout = &spec.layout;
    let (mut plus, mut minus) = spec.initial_states()?;
    let descriptors_t0 = init_descriptors(layout, &spec.classical_sites)?;
    let mut descriptors = descriptors_t0.clone();
    let mut u_acc = DenseOperator::identity(layout.total_dim());

    let mut tags = vec!["t0".to_string()];
    let mut states_plus = vec![plus.clone()];
    let mut states_minus = vec![minus.clone()];
    let mut descriptor_history = vec![descriptors.clone()];
    let mut step_audits = Vec::new();
    let mut locality = Vec::new();

    for (stage_no, stage) in spec.stages.iter().enumerate() {
        let stage_start = descriptors.clone();
        let mut stepped_sites: BTreeSet<String> = BTreeSet::new();
        for (step_index, step) in stage.steps.iter().enumerate() {
            let u = step_unitary(step, layout)?;
            let compat = classical_compatibility(step, layout, &spec.mediator)?;
            step_audits.push(StepAudit {
                stage: stage.label.clone(),
                step_index,
                compatible: compat.compatible,
                violation_norm: compat.violation_norm,
            });
            plus = plus.apply_unitary(&u)?;
            minus = minus.apply_unitary(&u)?;
            stepped_sites.extend(step.acts_on_set());
            u_acc = u.matmul(&u_acc);
        }
        let tag = format!("t{}", stage_no + 1);
        descriptors = descriptors_t0
            .iter()
            .zip(&descriptors)
            .map(|(at_t0, current)| {
                if stepped_sites.contains(at_t0.subsystem()) {
                    Ok(at_t0.evolve(&u_acc)?.with_tag(&tag))
                } else {
                    Ok(current.clone().with_tag(&tag))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        // every subsystem outside the declared sites must be exactly unchanged
        for (before, after) in stage_start.iter().zip(&descriptors) {
            if stage.sites.contains(before.subsystem()) {
                continue;
            }
            let v = crate::descriptors::locality_audit(before, after, &stage.sites)?;
            locality.push(LocalityRecord {
                stage: stage.label.clone(),
                subsystem: before.subsystem().to_string(),
                ok: v.ok,
                max_change: v.max_change,
            });
        }
        tags.push(tag);
        states_plus.push(plus.clone());
        states_minus.push(minus.clone());
        descriptor_history.push(descriptors.clone());
    }

    Ok(ProtocolTrace {
        spec: spec.clone(),
        tags,
        states_plus,
        states_minus,
        descriptors: descriptor_history,
        step_audits,
        locality,
    })
}

/// Outcome of the entangling-task check at the final boundary.
#[derive(Debug, Clone, Serialize)]
pub struct TaskVerdict {
    /// Both final probe states entangled and single-shot distinguishable.
    pub possible: bool,
    pub e_distance: f64,
    pub single_shot: bool,
    pub negativity_plus: f64,
    pub negativity_minus: f64,
}

/// Final probe⊕probe states must be single-shot distinguishable and both
/// entangled across the probe cut.
pub fn task_te_check(trace: &ProtocolTrace) -> Result<TaskVerdict> {
    let spec = &trace.spec;
    let probe_idx: Vec<usize> = spec
        .probes()
        .iter()
        .map(|p| spec.layout.index_of(p))
        .collect::<Result<_>>()?;
    let last = trace.final_index();
    let ab_plus = trace.states_plus[last].partial_trace(&probe_idx)?;
    let ab_minus = trace.states_minus[last].partial_trace(&probe_idx)?;
    let e_distance = trace_distance(&ab_plus, &ab_minus)?;
    let neg_plus = negativity(&ab_plus, &[0])?.negativity;
    let neg_minus = negativity(&ab_minus, &[0])?.negativity;
    let single_shot = e_distance >= SINGLE_SHOT_DISTANCE;
    Ok(TaskVerdict {
        possible: single_shot
            && neg_plus > NEGATIVITY_THRESHOLD
            && neg_minus > NEGATIVITY_THRESHOLD,
        e_distance,
        single_shot,
        negativity_plus: neg_plus,
        negativity_minus: neg_minus,
    })
}

/// Verdict of the stage-pattern audit.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationVerdict {
    pub mediated_pattern: bool,
    /// First stage violating the pattern, if any.
    pub offending_stage: Option<String>,
}

/// The mediated pattern: every stage touches at most one probe (plus the
/// mediator) — no stage couples the probes jointly.
pub fn factorization_audit(spec: &ProtocolSpec) -> FactorizationVerdict {
    for stage in &spec.stages {
        let probes_in_stage = stage
            .sites
            .iter()
            .filter(|s| **s != spec.mediator)
            .count();
        if probes_in_stage > 1 {
            return FactorizationVerdict {
                mediated_pattern: false,
                offending_stage: Some(stage.label.clone()),
            };
        }
    }
    FactorizationVerdict {
        mediated_pattern: true,
        offending_stage: None,
    }
}

/// Proxy analysis of the mediator variable at the first stage boundary.
///
/// The two mediator reductions should be indistinguishable while the joint
/// probe⊕mediator states are perfectly distinguishable; engaging a second
/// mediator variable shows up as a classical-compatibility violation. These
/// are operational proxies, flagged as such in reports.
#[derive(Debug, Clone, Serialize)]
pub struct MediatorAnalysis {
    pub proxy: bool,
    pub boundary_tag: String,
    pub rho_m_distance: f64,
    pub rho_m_single_shot: bool,
    pub joint_am_distance: f64,
    pub joint_single_shot: bool,
    pub non_classical_usage: bool,
    /// Purity of the mediator's reduced state at the final boundary
    /// (worst case over the two initializations).
    pub rho_m_final_purity: f64,
}

/// `None` when the protocol is not mediated (analysis suppressed) or has no
/// stages.
pub fn mediator_variable_analysis(trace: &ProtocolTrace) -> Result<Option<MediatorAnalysis>> {
    let spec = &trace.spec;
    if !factorization_audit(spec).mediated_pattern || spec.stages.is_empty() {
        return Ok(None);
    }
    let m_idx = spec.mediator_index()?;
    let rho_m_plus = trace.states_plus[1].partial_trace(&[m_idx])?;
    let rho_m_minus = trace.states_minus[1].partial_trace(&[m_idx])?;
    let rho_m_distance = trace_distance(&rho_m_plus, &rho_m_minus)?;

    // the probe the first stage pairs with the mediator; defaults to the
    // first probe when the opening stage is mediator-only
    let first_probe = spec.stages[0]
        .sites
        .iter()
        .find(|s| **s != spec.mediator)
        .cloned()
        .unwrap_or_else(|| spec.probes()[0].clone());
    let p_idx = spec.layout.index_of(&first_probe)?;
    let mut keep = [p_idx, m_idx];
    keep.sort_unstable();
    let joint_plus = trace.states_plus[1].partial_trace(&keep)?;
    let joint_minus = trace.states_minus[1].partial_trace(&keep)?;
    let joint_am_distance = trace_distance(&joint_plus, &joint_minus)?;

    let last = trace.final_index();
    let rho_m_final_purity = trace.states_plus[last]
        .partial_trace(&[m_idx])?
        .purity()
        .min(trace.states_minus[last].partial_trace(&[m_idx])?.purity());

    Ok(Some(MediatorAnalysis {
        proxy: true,
        boundary_tag: trace.tags[1].clone(),
        rho_m_distance,
        rho_m_single_shot: rho_m_distance >= SINGLE_SHOT_DISTANCE,
        joint_am_distance,
        joint_single_shot: joint_am_distance >= SINGLE_SHOT_DISTANCE,
        non_classical_usage: !trace.all_steps_compatible(),
        rho_m_final_purity,
    }))
}

/// Final classification of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalVerdict {
    WitnessFiresNonclassical,
    ClassicalConsistent,
    WitnessInvalidNonlocal,
}

/// Negativities per initialization.
#[derive(Debug, Clone, Serialize)]
pub struct InitPair {
    pub plus: f64,
    pub minus: f64,
}

/// Thresholds pinned into every report.
#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    pub negativity: f64,
    pub single_shot_distance: f64,
    pub block_diag: f64,
    pub no_signalling: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            negativity: NEGATIVITY_THRESHOLD,
            single_shot_distance: SINGLE_SHOT_DISTANCE,
            block_diag: BLOCK_DIAG_TOL,
            no_signalling: crate::witness::NO_SIGNALLING_TOL,
        }
    }
}

/// Final-boundary states in report form.
#[derive(Debug, Clone, Serialize)]
pub struct FinalStates {
    pub plus: DensityDump,
    pub minus: DensityDump,
}

/// Everything the witness protocol concludes about one run.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub negativity_ab: InitPair,
    pub e_distinguishability: TaskVerdict,
    pub factorization: FactorizationVerdict,
    pub locality: bool,
    pub microcausality: MicrocausalityVerdict,
    pub all_steps_classical_compatible: bool,
    pub step_audits: Vec<StepAudit>,
    pub mediator_analysis: Option<MediatorAnalysis>,
    /// Full states at the final boundary for both initializations.
    pub final_states: FinalStates,
    /// Evolved descriptor vectors at the final boundary, in text form.
    pub final_descriptors: Vec<DescriptorDump>,
    pub thresholds: Thresholds,
    pub final_verdict: FinalVerdict,
}

/// Assemble the verdict from a completed trace.
pub fn verdict(trace: &ProtocolTrace) -> Result<WitnessReport> {
    let task = task_te_check(trace)?;
    let factorization = factorization_audit(&trace.spec);
    let locality = trace.locality_ok();
    let microcausality = trace.microcausality()?;
    let analysis = mediator_variable_analysis(trace)?;
    let final_verdict = if !factorization.mediated_pattern || !locality {
        FinalVerdict::WitnessInvalidNonlocal
    } else if task.possible {
        FinalVerdict::WitnessFiresNonclassical
    } else {
        FinalVerdict::ClassicalConsistent
    };
    Ok(WitnessReport {
        negativity_ab: InitPair {
            plus: task.negativity_plus,
            minus: task.negativity_minus,
        },
        e_distinguishability: task,
        factorization,
        locality,
        microcausality,
        all_steps_classical_compatible: trace.all_steps_compatible(),
        step_audits: trace.step_audits.clone(),
        mediator_analysis: analysis,
        final_states: FinalStates {
            plus: trace.states_plus[trace.final_index()].dump(),
            minus: trace.states_minus[trace.final_index()].dump(),
        },
        final_descriptors: trace
            .descriptors
            .last()
            .map(|sets| sets.iter().map(DescriptorSet::dump).collect())
            .unwrap_or_default(),
        thresholds: Thresholds::default(),
        final_verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mediators::{
        build_bmv_phase, build_cnot_relay, build_nonlocal_demo, sample_classical_local,
    };
    use num_complex::Complex64;

    /// Independent state-vector oracle: applies gates to amplitudes by
    /// explicit basis-state bookkeeping, no dense matrices involved.
    mod oracle {
        use num_complex::Complex64;

        pub fn cnot(amps: &mut [Complex64], control: usize, target: usize, n: usize) {
            let dim = 1 << n;
            let mut out = vec![Complex64::new(0.0, 0.0); dim];
            for (idx, a) in amps.iter().enumerate() {
                let cbit = (idx >> (n - 1 - control)) & 1;
                let to = if cbit == 1 {
                    idx ^ (1 << (n - 1 - target))
                } else {
                    idx
                };
                out[to] += a;
            }
            amps.copy_from_slice(&out);
        }

        pub fn phase_on(amps: &mut [Complex64], phases: &dyn Fn(usize) -> f64) {
            for (idx, a) in amps.iter_mut().enumerate() {
                let ph = phases(idx);
                *a *= Complex64::new(ph.cos(), ph.sin());
            }
        }
    }

    #[test]
    fn relay_states_match_state_vector_oracle() {
        // s+ = |+00⟩ → t1 (|000⟩+|110⟩)/√2 → t2 (|000⟩+|101⟩)/√2
        let inv = 1.0 / 2.0f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(inv, 0.0);
        amps[0b100] = Complex64::new(inv, 0.0);
        oracle::cnot(&mut amps, 0, 1, 3);
        let t1_expected = amps.clone();
        oracle::cnot(&mut amps, 1, 2, 3);
        oracle::cnot(&mut amps, 2, 1, 3);
        let t2_expected = amps;

        let trace = run(&build_cnot_relay()).unwrap();
        for (state, expected) in [
            (&trace.states_plus[1], t1_expected),
            (&trace.states_plus[2], t2_expected),
        ] {
            let m = state.matrix();
            for i in 0..8 {
                for j in 0..8 {
                    let want = expected[i] * expected[j].conj();
                    assert!((m.get(i, j) - want).norm() < 1e-12, "({i},{j})");
                }
            }
        }
        // t2 for s−: Bell-minus on (A, B) with M in |0⟩: (|000⟩ − |101⟩)/√2
        let m = trace.states_minus[2].matrix();
        assert!((m.get(0, 0).re - 0.5).abs() < 1e-12);
        assert!((m.get(0, 5).re + 0.5).abs() < 1e-12);
        assert!((m.get(5, 5).re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn relay_fires_the_witness() {
        let trace = run(&build_cnot_relay()).unwrap();
        let report = verdict(&trace).unwrap();
        assert_eq!(report.final_verdict, FinalVerdict::WitnessFiresNonclassical);
        assert!((report.negativity_ab.plus - 0.5).abs() < 1e-9);
        assert!((report.negativity_ab.minus - 0.5).abs() < 1e-9);
        assert!(report.e_distinguishability.single_shot);
        assert!(report.factorization.mediated_pattern);
        assert!(report.locality);
        assert!(report.microcausality.ok);
        assert!(!report.all_steps_classical_compatible);

        let analysis = report.mediator_analysis.unwrap();
        assert!(analysis.rho_m_distance < 1e-9);
        assert!(!analysis.rho_m_single_shot);
        assert!(analysis.joint_am_distance >= SINGLE_SHOT_DISTANCE);
        assert!(analysis.non_classical_usage);

        // mediator returns to purity 1 at t2
        let m_idx = trace.spec.mediator_index().unwrap();
        let rho_m = trace.states_plus[2].partial_trace(&[m_idx]).unwrap();
        assert!((rho_m.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_protocol_is_classical_consistent() {
        let mut spec = build_cnot_relay();
        spec.stages.clear();
        let trace = run(&spec).unwrap();
        let report = verdict(&trace).unwrap();
        assert_eq!(report.final_verdict, FinalVerdict::ClassicalConsistent);
        assert!(report.negativity_ab.plus < 1e-12);
        // trace equals initializations at every boundary
        assert_eq!(trace.tags.len(), 1);
    }

    #[test]
    fn bmv_phase_pi_fires_and_matches_oracle() {
        let spec = build_bmv_phase([0.0, 0.0, 0.0, std::f64::consts::PI]);
        let trace = run(&spec).unwrap();
        let report = verdict(&trace).unwrap();
        assert_eq!(report.final_verdict, FinalVerdict::WitnessFiresNonclassical);
        assert!((report.negativity_ab.plus - 0.5).abs() < 1e-9);
        assert!((report.negativity_ab.minus - 0.5).abs() < 1e-9);

        // oracle: |+⟩|0⟩|+⟩ --CNOT(A→M)--> --phase(m,b)--> --CNOT(A→M)-->
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        for idx in [0b000, 0b001, 0b100, 0b101] {
            amps[idx] = Complex64::new(0.5, 0.0);
        }
        oracle::cnot(&mut amps, 0, 1, 3);
        oracle::phase_on(&mut amps, &|idx| {
            let m = (idx >> 1) & 1;
            let b = idx & 1;
            if m == 1 && b == 1 {
                std::f64::consts::PI
            } else {
                0.0
            }
        });
        oracle::cnot(&mut amps, 0, 1, 3);
        let m = trace.states_plus[3].matrix();
        for i in 0..8 {
            for j in 0..8 {
                let want = amps[i] * amps[j].conj();
                assert!((m.get(i, j) - want).norm() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn bmv_mediator_returns_to_blank() {
        // the undo stage hands the mediator back in |0⟩ for any phases
        let spec = build_bmv_phase([0.9, 0.1, 2.2, 4.4]);
        let trace = run(&spec).unwrap();
        let m_idx = spec.mediator_index().unwrap();
        for states in [&trace.states_plus, &trace.states_minus] {
            let rho_m = states.last().unwrap().partial_trace(&[m_idx]).unwrap();
            assert!((rho_m.matrix().get(0, 0).re - 1.0).abs() < 1e-10);
            assert!((rho_m.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn explicit_matrix_initializations_parse_and_run() {
        // a maximally mixed mediator given as an explicit density matrix
        let mut spec = build_cnot_relay();
        spec.initializations.plus[1] = LocalState::Matrix {
            matrix: vec![
                vec![[0.5, 0.0], [0.0, 0.0]],
                vec![[0.0, 0.0], [0.5, 0.0]],
            ],
        };
        spec.initializations.minus[1] = spec.initializations.plus[1].clone();
        let text = serde_json::to_string(&spec).unwrap();
        let parsed: ProtocolSpec = serde_json::from_str(&text).unwrap();
        let trace = run(&parsed).unwrap();
        let report = verdict(&trace).unwrap();
        // the mediator's unknown initial value XORs into the relayed bit,
        // leaving an even Bell mixture on the probes: boundary-separable
        assert!(report.negativity_ab.plus <= NEGATIVITY_THRESHOLD);
        assert_eq!(report.final_verdict, FinalVerdict::ClassicalConsistent);
        assert!(trace.picture_consistency().unwrap() < 1e-10);
    }

    #[test]
    fn bmv_zero_phases_do_nothing() {
        let spec = build_bmv_phase([0.0; 4]);
        let trace = run(&spec).unwrap();
        let report = verdict(&trace).unwrap();
        assert!(report.negativity_ab.plus < 1e-9);
        assert_eq!(report.final_verdict, FinalVerdict::ClassicalConsistent);
    }

    #[test]
    fn bmv_equal_phases_generate_nothing() {
        // φ00+φ11−φ01−φ10 = 0 → no entanglement
        let spec = build_bmv_phase([std::f64::consts::FRAC_PI_3; 4]);
        let trace = run(&spec).unwrap();
        let report = verdict(&trace).unwrap();
        assert!(report.negativity_ab.plus < 1e-9);
        assert!(report.negativity_ab.minus < 1e-9);
    }

    #[test]
    fn nonlocal_demo_is_invalid_despite_entanglement() {
        let trace = run(&build_nonlocal_demo()).unwrap();
        let report = verdict(&trace).unwrap();
        assert_eq!(report.final_verdict, FinalVerdict::WitnessInvalidNonlocal);
        assert!((report.negativity_ab.plus - 0.5).abs() < 1e-9);
        assert!((report.negativity_ab.minus - 0.5).abs() < 1e-9);
        // every mediator-touching step stayed classical-compatible
        assert!(report.all_steps_classical_compatible);
        assert!(!report.factorization.mediated_pattern);
        assert_eq!(
            report.factorization.offending_stage.as_deref(),
            Some("stage2")
        );
        // analysis suppressed for non-mediated protocols
        assert!(report.mediator_analysis.is_none());
    }

    #[test]
    fn nonlocal_demo_without_direct_step_generates_nothing() {
        let mut spec = build_nonlocal_demo();
        spec.stages.pop();
        let trace = run(&spec).unwrap();
        let report = verdict(&trace).unwrap();
        assert!(report.negativity_ab.plus < 1e-9);
        assert_eq!(report.final_verdict, FinalVerdict::ClassicalConsistent);
    }

    #[test]
    fn classical_local_sample_stays_separable() {
        for seed in 0..5 {
            let spec = sample_classical_local(seed, 8).unwrap();
            let trace = run(&spec).unwrap();
            let report = verdict(&trace).unwrap();
            assert!(
                report.negativity_ab.plus <= NEGATIVITY_THRESHOLD,
                "seed {seed}: negativity {0:.3e}",
                report.negativity_ab.plus
            );
            assert!(report.negativity_ab.minus <= NEGATIVITY_THRESHOLD);
            assert_eq!(report.final_verdict, FinalVerdict::ClassicalConsistent);
            assert!(report.all_steps_classical_compatible);
            assert!(!report.mediator_analysis.unwrap().non_classical_usage);
            assert!(report.microcausality.ok);
        }
    }

    #[test]
    fn picture_consistency_across_demos() {
        for spec in [
            build_cnot_relay(),
            build_bmv_phase([0.1, 0.9, 0.4, 2.0]),
            build_nonlocal_demo(),
        ] {
            let trace = run(&spec).unwrap();
            let dev = trace.picture_consistency().unwrap();
            assert!(dev < PICTURE_CONSISTENCY_TOL, "deviation {dev:.3e}");
        }
    }

    #[test]
    fn microcausality_exact_at_every_boundary_of_every_demo() {
        for spec in [
            build_cnot_relay(),
            build_bmv_phase([0.0, 0.0, 0.0, std::f64::consts::PI]),
            build_nonlocal_demo(),
        ] {
            let trace = run(&spec).unwrap();
            for sets in &trace.descriptors {
                let v = microcausality_check(sets).unwrap();
                assert!(v.ok);
                assert_eq!(v.max_violation, 0.0);
            }
        }
    }

    #[test]
    fn rejects_step_outside_stage_sites() {
        let mut spec = build_cnot_relay();
        spec.stages[0].sites = ["A".to_string()].into_iter().collect();
        assert!(run(&spec).is_err());
    }

    #[test]
    fn rejects_indistinguishable_initializations() {
        let mut spec = build_cnot_relay();
        spec.initializations.minus = spec.initializations.plus.clone();
        assert!(run(&spec).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = build_bmv_phase([0.0, 0.2, 0.4, 1.0]);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ProtocolSpec = serde_json::from_str(&text).unwrap();
        let a = verdict(&run(&spec).unwrap()).unwrap();
        let b = verdict(&run(&back).unwrap()).unwrap();
        assert_eq!(a.final_verdict, b.final_verdict);
        assert_eq!(a.negativity_ab.plus, b.negativity_ab.plus);
    }
}
