//! The step/gate library and mediator-model families: named gates and
//! Hamiltonian-generated steps, classical-compatibility checking, the named
//! demonstration protocols, and random protocol generators for sampling
//! campaigns.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{embed, expm_hermitian_generator, DenseOperator};
use crate::descriptors::classical_observable_diag;
use crate::error::{Error, Result};
use crate::pauli::{PauliOp, PauliString, SiteLayout};
use crate::protocol::{Initializations, LocalState, ProtocolSpec, Stage};
use crate::rng::CounterRng;

/// Commutators with the mediator's spectral projectors must stay below this
/// for a step to count as engaging only the classical observable.
pub const BLOCK_DIAG_TOL: f64 = 1e-12;

/// Named gates. Rotations use the half-angle convention
/// `R_P(θ) = exp(−i·θ/2·P)`; `CPHASE(θ) = diag(1, 1, 1, e^{iθ})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateName {
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "CZ")]
    Cz,
    #[serde(rename = "H")]
    H,
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "RY")]
    Ry,
    #[serde(rename = "RZ")]
    Rz,
    #[serde(rename = "CPHASE")]
    Cphase,
}

impl GateName {
    fn arity(self) -> usize {
        match self {
            GateName::Cnot | GateName::Cz | GateName::Cphase => 2,
            GateName::H | GateName::Rx | GateName::Ry | GateName::Rz => 1,
        }
    }

    fn takes_angle(self) -> bool {
        matches!(
            self,
            GateName::Rx | GateName::Ry | GateName::Rz | GateName::Cphase
        )
    }
}

/// One Pauli-string term of a Hamiltonian generator, written over the full
/// layout (`"IZZ"`), with its complex coefficient as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamTerm {
    pub string: String,
    pub coeff: [f64; 2],
}

/// One interaction step: a named gate or `exp(−i·angle·H)` for a Hermitian
/// Pauli-sum `H` supported on the acting sites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepSpec {
    /// Acting sites, one or two, in gate order (control first for CNOT).
    pub on: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<HamTerm>>,
}

impl StepSpec {
    pub fn gate(name: GateName, on: &[&str]) -> Self {
        StepSpec {
            on: on.iter().map(|s| s.to_string()).collect(),
            gate: Some(name),
            angle: None,
            hamiltonian: None,
        }
    }

    pub fn rotation(name: GateName, site: &str, angle: f64) -> Self {
        StepSpec {
            on: vec![site.to_string()],
            gate: Some(name),
            angle: Some(angle),
            hamiltonian: None,
        }
    }

    pub fn cphase(a: &str, b: &str, angle: f64) -> Self {
        StepSpec {
            on: vec![a.to_string(), b.to_string()],
            gate: Some(GateName::Cphase),
            angle: Some(angle),
            hamiltonian: None,
        }
    }

    pub fn hamiltonian(terms: Vec<HamTerm>, on: &[&str], angle: f64) -> Self {
        StepSpec {
            on: on.iter().map(|s| s.to_string()).collect(),
            gate: None,
            angle: Some(angle),
            hamiltonian: Some(terms),
        }
    }

    /// From a sparse operator: terms are rendered in layout text form.
    pub fn from_pauli_op(op: &PauliOp, on: &[&str], angle: f64) -> Self {
        let terms = op
            .terms()
            .map(|(s, c)| HamTerm {
                string: s.text(),
                coeff: [c.re, c.im],
            })
            .collect();
        Self::hamiltonian(terms, on, angle)
    }

    pub fn validate(&self, layout: &Arc<SiteLayout>) -> Result<()> {
        if self.on.is_empty() || self.on.len() > 2 {
            return Err(Error::InvalidStep(format!(
                "steps act on one or two sites, got {:?}",
                self.on
            )));
        }
        let mut seen = BTreeSet::new();
        for site in &self.on {
            layout.index_of(site)?;
            if !seen.insert(site) {
                return Err(Error::InvalidStep(format!("repeated site `{site}`")));
            }
        }
        if let Some(angle) = self.angle {
            if !angle.is_finite() {
                return Err(Error::InvalidStep(format!("angle {angle} is not finite")));
            }
        }
        match (&self.gate, &self.hamiltonian) {
            (Some(g), None) => {
                if g.arity() != self.on.len() {
                    return Err(Error::InvalidStep(format!(
                        "{g:?} needs {} site(s), got {}",
                        g.arity(),
                        self.on.len()
                    )));
                }
                if g.takes_angle() != self.angle.is_some() {
                    return Err(Error::InvalidStep(format!(
                        "{g:?} {} an angle",
                        if g.takes_angle() {
                            "requires"
                        } else {
                            "does not take"
                        }
                    )));
                }
                for site in &self.on {
                    let idx = layout.index_of(site)?;
                    if !layout.is_qubit(idx) {
                        return Err(Error::InvalidStep(format!(
                            "named gate {g:?} needs qubit sites, `{site}` has dimension {}",
                            layout.dim(idx)
                        )));
                    }
                }
            }
            (None, Some(_)) => {
                if self.angle.is_none() {
                    return Err(Error::InvalidStep(
                        "hamiltonian steps require an angle".into(),
                    ));
                }
                let op = self.hamiltonian_op(layout)?;
                if !op.is_hermitian(1e-12) {
                    return Err(Error::InvalidStep(
                        "hamiltonian generator is not Hermitian".into(),
                    ));
                }
                let on_set: BTreeSet<String> = self.on.iter().cloned().collect();
                if !op.support().is_subset(&on_set) {
                    return Err(Error::InvalidStep(format!(
                        "generator support {:?} exceeds acting sites {:?}",
                        op.support(),
                        self.on
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidStep(
                    "exactly one of `gate` or `hamiltonian` must be given".into(),
                ));
            }
        }
        Ok(())
    }

    /// The generator terms parsed against the layout.
    pub fn hamiltonian_op(&self, layout: &Arc<SiteLayout>) -> Result<PauliOp> {
        let terms = self
            .hamiltonian
            .as_ref()
            .ok_or_else(|| Error::InvalidStep("step has no hamiltonian".into()))?;
        let mut op = PauliOp::zero(layout.clone());
        for term in terms {
            let s = PauliString::parse(&term.string, layout)?;
            if !term.coeff[0].is_finite() || !term.coeff[1].is_finite() {
                return Err(Error::InvalidStep(format!(
                    "coefficient {:?} of `{}` is not finite",
                    term.coeff, term.string
                )));
            }
            let c = Complex64::new(term.coeff[0], term.coeff[1]);
            op = op.add(&PauliOp::from_terms(layout.clone(), [(s, c)]))?;
        }
        Ok(op)
    }

    fn on_indices(&self, layout: &Arc<SiteLayout>) -> Result<Vec<usize>> {
        self.on.iter().map(|s| layout.index_of(s)).collect()
    }

    pub fn acts_on_set(&self) -> BTreeSet<String> {
        self.on.iter().cloned().collect()
    }

    /// The unitary restricted to the acting sites, in `on` order.
    pub fn local_unitary(&self, layout: &Arc<SiteLayout>) -> Result<DenseOperator> {
        if let Some(g) = self.gate {
            return Ok(gate_matrix(g, self.angle));
        }
        let op = self.hamiltonian_op(layout)?;
        let angle = self
            .angle
            .ok_or_else(|| Error::InvalidStep("hamiltonian steps require an angle".into()))?;
        let on_idx = self.on_indices(layout)?;
        let local_layout = Arc::new(SiteLayout::new(
            on_idx
                .iter()
                .map(|&i| (layout.label(i).to_string(), layout.dim(i)))
                .collect(),
        )?);
        // restrict full-layout strings to the acting sites
        let mut local = PauliOp::zero(local_layout.clone());
        for (s, c) in op.terms() {
            let letters: Vec<_> = on_idx.iter().map(|&i| s.letters()[i]).collect();
            for (i, l) in s.letters().iter().enumerate() {
                if !on_idx.contains(&i) && *l != crate::pauli::Letter::I {
                    return Err(Error::InvalidStep(format!(
                        "generator support exceeds acting sites {:?}",
                        self.on
                    )));
                }
            }
            let ls = PauliString::new(letters, &local_layout)?;
            local = local.add(&PauliOp::from_terms(local_layout.clone(), [(ls, c)]))?;
        }
        expm_hermitian_generator(&local.to_dense()?, angle)
    }
}

fn gate_matrix(g: GateName, angle: Option<f64>) -> DenseOperator {
    let c = Complex64::new;
    match g {
        GateName::Cnot => {
            let mut m = DenseOperator::zeros(4);
            *m.get_mut(0, 0) = c(1.0, 0.0);
            *m.get_mut(1, 1) = c(1.0, 0.0);
            *m.get_mut(3, 2) = c(1.0, 0.0);
            *m.get_mut(2, 3) = c(1.0, 0.0);
            m
        }
        GateName::Cz => DenseOperator::from_diag(&[1.0, 1.0, 1.0, -1.0]),
        GateName::H => {
            let s = 1.0 / 2.0f64.sqrt();
            DenseOperator::from_rows(vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]])
        }
        GateName::Rx | GateName::Ry | GateName::Rz => {
            let half = angle.expect("validated rotation angle") / 2.0;
            let (co, si) = (half.cos(), half.sin());
            match g {
                GateName::Rx => DenseOperator::from_rows(vec![
                    vec![c(co, 0.0), c(0.0, -si)],
                    vec![c(0.0, -si), c(co, 0.0)],
                ]),
                GateName::Ry => DenseOperator::from_rows(vec![
                    vec![c(co, 0.0), c(-si, 0.0)],
                    vec![c(si, 0.0), c(co, 0.0)],
                ]),
                _ => DenseOperator::from_rows(vec![
                    vec![c(co, -si), c(0.0, 0.0)],
                    vec![c(0.0, 0.0), c(co, si)],
                ]),
            }
        }
        GateName::Cphase => {
            let theta = angle.expect("validated CPHASE angle");
            let mut m = DenseOperator::identity(4);
            *m.get_mut(3, 3) = c(theta.cos(), theta.sin());
            m
        }
    }
}

/// The step's unitary on the full layout: identity off the acting sites by
/// construction.
pub fn step_unitary(step: &StepSpec, layout: &Arc<SiteLayout>) -> Result<DenseOperator> {
    step.validate(layout)?;
    let local = step.local_unitary(layout)?;
    let targets = step.on_indices(layout)?;
    Ok(embed(&local, &layout.dims(), &targets))
}

/// Verdict of the classical-compatibility check for one step.
#[derive(Debug, Clone, Serialize)]
pub struct CompatVerdict {
    pub compatible: bool,
    /// Max-abs entry of the commutator with the mediator's observable.
    pub violation_norm: f64,
}

/// A step engages only the mediator's classical observable when its unitary
/// commutes with every spectral projector of that observable — equivalently
/// it is block-diagonal in the mediator's Z basis. Steps not touching the
/// mediator are trivially compatible.
pub fn classical_compatibility(
    step: &StepSpec,
    layout: &Arc<SiteLayout>,
    mediator_site: &str,
) -> Result<CompatVerdict> {
    step.validate(layout)?;
    layout.index_of(mediator_site)?;
    let Some(pos) = step.on.iter().position(|s| s == mediator_site) else {
        return Ok(CompatVerdict {
            compatible: true,
            violation_norm: 0.0,
        });
    };
    let local = step.local_unitary(layout)?;
    let local_dims: Vec<usize> = step
        .on_indices(layout)?
        .iter()
        .map(|&i| layout.dim(i))
        .collect();
    let d_m = local_dims[pos];

    let mut worst_projector = 0.0f64;
    for m in 0..d_m {
        let mut proj = DenseOperator::zeros(d_m);
        *proj.get_mut(m, m) = Complex64::new(1.0, 0.0);
        let full_proj = embed(&proj, &local_dims, &[pos]);
        let comm = local.matmul(&full_proj).sub(&full_proj.matmul(&local));
        worst_projector = worst_projector.max(comm.max_abs());
    }

    let z_m = DenseOperator::from_diag(&classical_observable_diag(d_m));
    let full_z = embed(&z_m, &local_dims, &[pos]);
    let violation_norm = local
        .matmul(&full_z)
        .sub(&full_z.matmul(&local))
        .max_abs();

    Ok(CompatVerdict {
        compatible: worst_projector <= BLOCK_DIAG_TOL,
        violation_norm,
    })
}

/// Mediator-model families for sampling campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorKind {
    ClassicalLocal,
    QuantumLocal,
    NonlocalDirect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediatorFamily {
    pub kind: MediatorKind,
    pub mediator_site: String,
}

impl MediatorFamily {
    /// Check a protocol against the family's admissibility conditions.
    pub fn check(&self, spec: &ProtocolSpec) -> Result<()> {
        for stage in &spec.stages {
            for (i, step) in stage.steps.iter().enumerate() {
                let probes: Vec<&String> = step
                    .on
                    .iter()
                    .filter(|s| **s != self.mediator_site)
                    .collect();
                let touches_both_probes = probes.len() > 1;
                match self.kind {
                    MediatorKind::NonlocalDirect => {}
                    MediatorKind::QuantumLocal => {
                        if touches_both_probes {
                            return Err(Error::InvalidProtocol(format!(
                                "step {i} of stage `{}` couples probes directly",
                                stage.label
                            )));
                        }
                    }
                    MediatorKind::ClassicalLocal => {
                        if touches_both_probes {
                            return Err(Error::InvalidProtocol(format!(
                                "step {i} of stage `{}` couples probes directly",
                                stage.label
                            )));
                        }
                        let v = classical_compatibility(step, &spec.layout, &self.mediator_site)?;
                        if !v.compatible {
                            return Err(Error::InvalidProtocol(format!(
                                "step {i} of stage `{}` is not classical-compatible \
                                 (violation {:.3e})",
                                stage.label, v.violation_norm
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn three_qubit_layout() -> Arc<SiteLayout> {
    SiteLayout::qubits(&["A", "M", "B"])
}

fn kets(names: [&str; 3]) -> Vec<LocalState> {
    names
        .iter()
        .map(|n| LocalState::Ket(n.to_string()))
        .collect()
}

fn classical_m() -> BTreeSet<String> {
    ["M".to_string()].into_iter().collect()
}

fn sites(labels: &[&str]) -> BTreeSet<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// Two CNOT hops through the mediator: entangles the probes and returns the
/// mediator to `|0⟩`, firing the witness.
pub fn build_cnot_relay() -> ProtocolSpec {
    ProtocolSpec {
        layout: three_qubit_layout(),
        mediator: "M".to_string(),
        classical_sites: classical_m(),
        initializations: Initializations {
            plus: kets(["+", "0", "0"]),
            minus: kets(["-", "0", "0"]),
        },
        stages: vec![
            Stage {
                label: "stage1".into(),
                sites: sites(&["A", "M"]),
                steps: vec![StepSpec::gate(GateName::Cnot, &["A", "M"])],
            },
            Stage {
                label: "stage2".into(),
                sites: sites(&["M", "B"]),
                steps: vec![
                    StepSpec::gate(GateName::Cnot, &["M", "B"]),
                    StepSpec::gate(GateName::Cnot, &["B", "M"]),
                ],
            },
        ],
    }
}

/// Phase-mediated protocol: the mediator picks up the probe-A bit, acquires
/// a basis-dependent phase with probe B, and is disentangled again. The
/// probes end up entangled exactly when `φ00 + φ11 − φ01 − φ10 ≠ 0 mod 2π`.
pub fn build_bmv_phase(phases: [f64; 4]) -> ProtocolSpec {
    let layout = three_qubit_layout();
    // diag(φ_mb) over (M, B) = Σ c_k · Z-strings, by Walsh transform
    let [p00, p01, p10, p11] = phases;
    let c_ii = (p00 + p01 + p10 + p11) / 4.0;
    let c_iz = (p00 - p01 + p10 - p11) / 4.0;
    let c_zi = (p00 + p01 - p10 - p11) / 4.0;
    let c_zz = (p00 - p01 - p10 + p11) / 4.0;
    let terms: Vec<HamTerm> = [
        ("III", c_ii),
        ("IIZ", c_iz),
        ("IZI", c_zi),
        ("IZZ", c_zz),
    ]
    .into_iter()
    .filter(|(_, c)| c.abs() > 0.0)
    .map(|(s, c)| HamTerm {
        string: s.to_string(),
        coeff: [c, 0.0],
    })
    .collect();
    // exp(−i·(−1)·H) = exp(+i·diag(φ))
    let phase_step = StepSpec::hamiltonian(terms, &["M", "B"], -1.0);
    ProtocolSpec {
        layout,
        mediator: "M".to_string(),
        classical_sites: classical_m(),
        initializations: Initializations {
            plus: kets(["+", "0", "+"]),
            minus: kets(["+", "0", "-"]),
        },
        stages: vec![
            Stage {
                label: "stage1".into(),
                sites: sites(&["A", "M"]),
                steps: vec![StepSpec::gate(GateName::Cnot, &["A", "M"])],
            },
            Stage {
                label: "stage2".into(),
                sites: sites(&["M", "B"]),
                steps: vec![phase_step],
            },
            Stage {
                label: "stage3".into(),
                sites: sites(&["A", "M"]),
                steps: vec![StepSpec::gate(GateName::Cnot, &["A", "M"])],
            },
        ],
    }
}

/// Every mediator-touching step is classical-compatible, yet the probes end
/// up entangled — through a stage that couples them directly, which is what
/// the factorization audit reports.
pub fn build_nonlocal_demo() -> ProtocolSpec {
    ProtocolSpec {
        layout: three_qubit_layout(),
        mediator: "M".to_string(),
        classical_sites: classical_m(),
        initializations: Initializations {
            plus: kets(["0", "0", "0"]),
            minus: kets(["1", "0", "0"]),
        },
        stages: vec![
            Stage {
                label: "stage1".into(),
                sites: sites(&["A", "M"]),
                steps: vec![StepSpec::cphase("A", "M", PI / 2.0)],
            },
            Stage {
                label: "stage2".into(),
                sites: sites(&["A", "B"]),
                steps: vec![
                    StepSpec::gate(GateName::H, &["A"]),
                    StepSpec::gate(GateName::Cnot, &["A", "B"]),
                ],
            },
        ],
    }
}

fn rotation_step(rng: &mut CounterRng, site: &str) -> StepSpec {
    let name = [GateName::Rx, GateName::Ry, GateName::Rz][rng.below(3)];
    StepSpec::rotation(name, site, rng.uniform(0.0, 2.0 * PI))
}

fn pauli_char(rng: &mut CounterRng) -> char {
    ['X', 'Y', 'Z'][rng.below(3)]
}

fn full_string(layout: &SiteLayout, assignments: &[(&str, char)]) -> String {
    (0..layout.len())
        .map(|i| {
            assignments
                .iter()
                .find(|(l, _)| *l == layout.label(i))
                .map(|(_, c)| *c)
                .unwrap_or('I')
        })
        .collect()
}

/// Random protocol in which the mediator is engaged only through its Z
/// observable: alternating probe⊕mediator stages with generators of the form
/// `θ·P_probe⊗f(Z_M)`, `f ∈ {I, Z}`, plus random probe rotations.
pub fn sample_classical_local(seed: u64, n_steps: usize) -> Result<ProtocolSpec> {
    if n_steps == 0 {
        return Err(Error::InvalidProtocol(
            "classical_local samples need n_steps ≥ 1".into(),
        ));
    }
    let layout = three_qubit_layout();
    let mut rng = CounterRng::new(seed, 0xc1a5);
    let mut stages = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let probe = if k % 2 == 0 { "A" } else { "B" };
        let mut steps = Vec::new();
        let p = pauli_char(&mut rng);
        let couple_z = rng.below(2) == 0;
        let theta = rng.uniform(0.0, 2.0 * PI);
        let (string, on): (String, Vec<&str>) = if couple_z {
            (full_string(&layout, &[(probe, p), ("M", 'Z')]), vec![probe, "M"])
        } else {
            (full_string(&layout, &[(probe, p)]), vec![probe])
        };
        steps.push(StepSpec::hamiltonian(
            vec![HamTerm {
                string,
                coeff: [1.0, 0.0],
            }],
            &on,
            theta,
        ));
        if rng.below(2) == 0 {
            steps.push(rotation_step(&mut rng, probe));
        }
        stages.push(Stage {
            label: format!("stage{}", k + 1),
            sites: sites(&[probe, "M"]),
            steps,
        });
    }
    Ok(ProtocolSpec {
        layout,
        mediator: "M".to_string(),
        classical_sites: classical_m(),
        initializations: Initializations {
            plus: kets(["+", "0", "0"]),
            minus: kets(["-", "0", "0"]),
        },
        stages,
    })
}

/// Random protocol with a fully quantum mediator: alternating
/// probe⊕mediator stages drawing from CNOT-like hops, arbitrary two-Pauli
/// couplings and local rotations.
pub fn sample_quantum_local(seed: u64, n_steps: usize) -> Result<ProtocolSpec> {
    if n_steps == 0 {
        return Err(Error::InvalidProtocol(
            "quantum_local samples need n_steps ≥ 1".into(),
        ));
    }
    let layout = three_qubit_layout();
    let mut rng = CounterRng::new(seed, 0x9a71);
    let mut stages = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let probe = if k % 2 == 0 { "A" } else { "B" };
        let mut steps = Vec::new();
        match rng.below(4) {
            0 => steps.push(StepSpec::gate(GateName::Cnot, &[probe, "M"])),
            1 => steps.push(StepSpec::gate(GateName::Cnot, &["M", probe])),
            2 => {
                let string =
                    full_string(&layout, &[(probe, pauli_char(&mut rng)), ("M", pauli_char(&mut rng))]);
                steps.push(StepSpec::hamiltonian(
                    vec![HamTerm {
                        string,
                        coeff: [1.0, 0.0],
                    }],
                    &[probe, "M"],
                    rng.uniform(0.0, 2.0 * PI),
                ));
            }
            _ => {
                steps.push(StepSpec::gate(GateName::H, &[probe]));
                steps.push(StepSpec::gate(GateName::Cnot, &[probe, "M"]));
            }
        }
        if rng.below(2) == 0 {
            steps.push(rotation_step(&mut rng, probe));
        }
        stages.push(Stage {
            label: format!("stage{}", k + 1),
            sites: sites(&[probe, "M"]),
            steps,
        });
    }
    Ok(ProtocolSpec {
        layout,
        mediator: "M".to_string(),
        classical_sites: BTreeSet::new(),
        initializations: Initializations {
            plus: kets(["+", "0", "0"]),
            minus: kets(["-", "0", "0"]),
        },
        stages,
    })
}

/// Sample from a named family.
pub fn sample_family(kind: MediatorKind, seed: u64, index: u64, n_steps: usize) -> Result<ProtocolSpec> {
    let sample_seed = CounterRng::for_sample(seed, index).next_u64();
    match kind {
        MediatorKind::ClassicalLocal => sample_classical_local(sample_seed, n_steps),
        MediatorKind::QuantumLocal => sample_quantum_local(sample_seed, n_steps),
        MediatorKind::NonlocalDirect => Err(Error::InvalidProtocol(
            "no random generator for the nonlocal_direct family".into(),
        )),
    }
}
