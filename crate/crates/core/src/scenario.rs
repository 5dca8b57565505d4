//! Scenario files, machine-readable reports, and the deterministic sweep
//! machinery behind the command-line interface.
//!
//! A scenario carries exactly one payload: a protocol to run, a sampling
//! campaign, a variable list to classify, or a named demo. Reports are
//! byte-deterministic for a fixed scenario and seed except for the trailing
//! `footer`, which carries wall-clock time only.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mediators::{
    build_bmv_phase, build_cnot_relay, build_nonlocal_demo, sample_family, MediatorKind,
};
use crate::nonclassicality::{classify_system, Classification, VariableSpec};
use crate::protocol::{run, verdict, ProtocolSpec, WitnessReport};
use crate::witness::{negativity, NEGATIVITY_THRESHOLD};

/// Default number of stages for sampled protocols.
pub const DEFAULT_CAMPAIGN_STEPS: usize = 12;

/// Sampling campaign over a protocol family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    pub family: MediatorKind,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// Per-sample negativity threshold; defaults to the witness threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negativity_threshold: Option<f64>,
}

fn default_steps() -> usize {
    DEFAULT_CAMPAIGN_STEPS
}

/// A versioned scenario with exactly one payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<CampaignSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<VariableSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demo: Option<String>,
}

impl ScenarioFile {
    pub fn for_protocol(spec: ProtocolSpec) -> Self {
        ScenarioFile {
            version: 1,
            protocol: Some(spec),
            campaign: None,
            variables: None,
            demo: None,
        }
    }

    pub fn for_campaign(campaign: CampaignSpec) -> Self {
        ScenarioFile {
            version: 1,
            protocol: None,
            campaign: Some(campaign),
            variables: None,
            demo: None,
        }
    }

    pub fn for_variables(variables: Vec<VariableSpec>) -> Self {
        ScenarioFile {
            version: 1,
            protocol: None,
            campaign: None,
            variables: Some(variables),
            demo: None,
        }
    }

    pub fn for_demo(name: &str) -> Self {
        ScenarioFile {
            version: 1,
            protocol: None,
            campaign: None,
            variables: None,
            demo: Some(name.to_string()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::scenario(
                "/version",
                format!("unsupported version {}", self.version),
            ));
        }
        let payloads = [
            self.protocol.is_some(),
            self.campaign.is_some(),
            self.variables.is_some(),
            self.demo.is_some(),
        ]
        .iter()
        .filter(|p| **p)
        .count();
        if payloads != 1 {
            return Err(Error::scenario(
                "",
                format!(
                    "exactly one of protocol/campaign/variables/demo required, found {payloads}"
                ),
            ));
        }
        if let Some(c) = &self.campaign {
            if c.samples == 0 {
                return Err(Error::scenario("/campaign/samples", "must be ≥ 1"));
            }
            if c.n_steps == 0 {
                return Err(Error::scenario("/campaign/n_steps", "must be ≥ 1"));
            }
            if let Some(t) = c.negativity_threshold {
                if !t.is_finite() || t < 0.0 {
                    return Err(Error::scenario(
                        "/campaign/negativity_threshold",
                        format!("must be a finite non-negative number, got {t}"),
                    ));
                }
            }
        }
        if let Some(d) = &self.demo {
            demo_spec(d).map_err(|_| {
                Error::scenario(
                    "/demo",
                    format!("unknown demo `{d}` (expected cnot-relay, bmv-phase or nonlocal-cz)"),
                )
            })?;
        }
        if let Some(vs) = &self.variables {
            if vs.is_empty() {
                return Err(Error::scenario("/variables", "must not be empty"));
            }
        }
        Ok(())
    }
}

/// Parse scenario text, mapping malformed JSON and unknown fields to
/// pointer-carrying validation errors.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::scenario("", format!("malformed JSON: {e}")))?;
    let scenario: ScenarioFile = serde_json::from_value(value)
        .map_err(|e| Error::scenario("", format!("schema violation: {e}")))?;
    scenario.validate()?;
    Ok(scenario)
}

/// The demo protocols exposed by name.
pub fn demo_spec(name: &str) -> Result<ProtocolSpec> {
    match name {
        "cnot-relay" => Ok(build_cnot_relay()),
        "bmv-phase" => Ok(build_bmv_phase([0.0, 0.0, 0.0, PI])),
        "nonlocal-cz" => Ok(build_nonlocal_demo()),
        other => Err(Error::InvalidProtocol(format!("unknown demo `{other}`"))),
    }
}

/// One campaign sample whose final negativity exceeded the threshold.
#[derive(Debug, Clone, Serialize)]
pub struct SampleViolation {
    pub sample: u64,
    pub negativity_plus: f64,
    pub negativity_minus: f64,
}

/// Order-independent aggregate of a campaign.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignAggregate {
    pub family: MediatorKind,
    pub samples: usize,
    pub seed: u64,
    pub n_steps: usize,
    pub negativity_threshold: f64,
    pub max_negativity: f64,
    pub violations: Vec<SampleViolation>,
    /// True when no sample exceeded the threshold.
    pub pass: bool,
}

/// Run every sample of a campaign; samples are keyed by `(seed, index)` so
/// the aggregate is identical for any worker count.
pub fn run_campaign(campaign: &CampaignSpec, workers: usize) -> Result<CampaignAggregate> {
    if campaign.samples == 0 {
        return Err(Error::scenario("/campaign/samples", "must be ≥ 1"));
    }
    let threshold = campaign
        .negativity_threshold
        .unwrap_or(NEGATIVITY_THRESHOLD);
    let kind = campaign.family;
    let seed = campaign.seed;
    let n_steps = campaign.n_steps;

    let run_sample = |i: usize| -> Result<(f64, f64)> {
        let spec = sample_family(kind, seed, i as u64, n_steps)?;
        let trace = run(&spec)?;
        let probe_idx: Vec<usize> = spec
            .probes()
            .iter()
            .map(|p| spec.layout.index_of(p))
            .collect::<Result<_>>()?;
        let last = trace.final_index();
        let plus = trace.states_plus[last].partial_trace(&probe_idx)?;
        let minus = trace.states_minus[last].partial_trace(&probe_idx)?;
        Ok((
            negativity(&plus, &[0])?.negativity,
            negativity(&minus, &[0])?.negativity,
        ))
    };

    let results: Vec<(f64, f64)> = if workers <= 1 {
        (0..campaign.samples)
            .map(run_sample)
            .collect::<Result<Vec<_>>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidProtocol(format!("worker pool: {e}")))?;
        pool.install(|| {
            (0..campaign.samples)
                .into_par_iter()
                .map(run_sample)
                .collect::<Result<Vec<_>>>()
        })?
    };

    let mut max_negativity = 0.0f64;
    let mut violations = Vec::new();
    for (i, (np, nm)) in results.iter().enumerate() {
        max_negativity = max_negativity.max(*np).max(*nm);
        if *np > threshold || *nm > threshold {
            violations.push(SampleViolation {
                sample: i as u64,
                negativity_plus: *np,
                negativity_minus: *nm,
            });
        }
    }
    Ok(CampaignAggregate {
        family: kind,
        samples: campaign.samples,
        seed,
        n_steps,
        negativity_threshold: threshold,
        max_negativity,
        pass: violations.is_empty(),
        violations,
    })
}

/// Classification result echoing the declared variable count.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub declared_variables: usize,
    pub non_classical: bool,
    pub witness_pair: Option<(usize, usize)>,
}

impl From<(usize, Classification)> for ClassificationReport {
    fn from((n, c): (usize, Classification)) -> Self {
        ClassificationReport {
            declared_variables: n,
            non_classical: c.non_classical,
            witness_pair: c.witness_pair,
        }
    }
}

/// The payload-specific outcome inside a report.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ReportResult {
    Witness {
        /// The executed protocol in scenario form, re-runnable as-is.
        protocol: ProtocolSpec,
        report: WitnessReport,
    },
    Campaign { aggregate: CampaignAggregate },
    Classification { result: ClassificationReport },
}

/// Non-deterministic trailer, kept out of the deterministic section.
#[derive(Debug, Clone, Serialize)]
pub struct Footer {
    pub wall_clock_ms: f64,
}

/// A complete report: everything above `footer` is byte-deterministic for a
/// fixed scenario and seed.
#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub version: u32,
    pub tool: String,
    pub seed: Option<u64>,
    pub scenario: ScenarioFile,
    pub result: ReportResult,
    pub footer: Footer,
}

fn tool_version() -> String {
    format!("medwit {}", env!("CARGO_PKG_VERSION"))
}

/// Execute a validated scenario.
pub fn execute(scenario: &ScenarioFile, workers: usize) -> Result<ReportFile> {
    scenario.validate()?;
    let started = std::time::Instant::now();
    let (seed, result) = if let Some(spec) = &scenario.protocol {
        let trace = run(spec)?;
        let report = verdict(&trace)?;
        (
            None,
            ReportResult::Witness {
                protocol: spec.clone(),
                report,
            },
        )
    } else if let Some(campaign) = &scenario.campaign {
        let aggregate = run_campaign(campaign, workers)?;
        (
            Some(campaign.seed),
            ReportResult::Campaign { aggregate },
        )
    } else if let Some(variables) = &scenario.variables {
        let classification = classify_system(variables)?;
        (
            None,
            ReportResult::Classification {
                result: (variables.len(), classification).into(),
            },
        )
    } else if let Some(name) = &scenario.demo {
        let spec = demo_spec(name)?;
        let trace = run(&spec)?;
        let report = verdict(&trace)?;
        (
            None,
            ReportResult::Witness {
                protocol: spec,
                report,
            },
        )
    } else {
        return Err(Error::scenario("", "empty scenario"));
    };
    Ok(ReportFile {
        version: 1,
        tool: tool_version(),
        seed,
        scenario: scenario.clone(),
        result,
        footer: Footer {
            wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// Fixed-width human summary; the JSON report remains the machine truth.
pub fn human_summary(report: &ReportFile) -> String {
    let mut out = String::new();
    match &report.result {
        ReportResult::Witness { report: w, .. } => {
            let verdict_name = match w.final_verdict {
                crate::protocol::FinalVerdict::WitnessFiresNonclassical => {
                    "witness_fires_nonclassical"
                }
                crate::protocol::FinalVerdict::ClassicalConsistent => "classical_consistent",
                crate::protocol::FinalVerdict::WitnessInvalidNonlocal => {
                    "witness_invalid_nonlocal"
                }
            };
            out.push_str(&format!("verdict      : {verdict_name}\n"));
            out.push_str(&format!(
                "negativity   : plus={:.9}  minus={:.9}\n",
                w.negativity_ab.plus, w.negativity_ab.minus
            ));
            out.push_str(&format!(
                "e± distance  : {:.9}  single-shot={}\n",
                w.e_distinguishability.e_distance, w.e_distinguishability.single_shot
            ));
            out.push_str(&format!(
                "audits       : factorization={} locality={} microcausality={} classical-compat={}\n",
                pass_fail(w.factorization.mediated_pattern),
                pass_fail(w.locality),
                pass_fail(w.microcausality.ok),
                if w.all_steps_classical_compatible {
                    "respected"
                } else {
                    "violated"
                },
            ));
            if let Some(a) = &w.mediator_analysis {
                out.push_str(&format!(
                    "mediator(proxy): rho_M dist={:.6} joint dist={:.6} non-classical-usage={}\n",
                    a.rho_m_distance, a.joint_am_distance, a.non_classical_usage
                ));
            } else {
                out.push_str("mediator(proxy): suppressed (protocol not mediated)\n");
            }
        }
        ReportResult::Campaign { aggregate } => {
            out.push_str(&format!(
                "campaign     : family={:?} samples={} seed={} steps={}\n",
                aggregate.family, aggregate.samples, aggregate.seed, aggregate.n_steps
            ));
            out.push_str(&format!(
                "max negativity: {:.3e} (threshold {:.3e})\n",
                aggregate.max_negativity, aggregate.negativity_threshold
            ));
            out.push_str(&format!(
                "violations   : {}  pass={}\n",
                aggregate.violations.len(),
                aggregate.pass
            ));
        }
        ReportResult::Classification { result } => {
            out.push_str(&format!(
                "classification: {}\n",
                if result.non_classical {
                    "non-classical"
                } else {
                    "classical"
                }
            ));
            if let Some((i, j)) = result.witness_pair {
                out.push_str(&format!("witness pair : ({i}, {j})\n"));
            }
        }
    }
    out
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Exit code for a failed scenario: 2 for validation problems, 3 for
/// numerical failures.
pub fn exit_code_for(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Serialize a report with the deterministic section first; the `footer`
/// field is the only non-deterministic content.
pub fn report_to_json(report: &ReportFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// The deterministic section: the serialized report with `footer` removed.
pub fn deterministic_section(report_json: &str) -> Result<String> {
    let mut value: serde_json::Value = serde_json::from_str(report_json)?;
    if let Some(map) = value.as_object_mut() {
        map.remove("footer");
    }
    Ok(serde_json::to_string_pretty(&value)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_exactly_one_payload() {
        let none = parse_scenario(r#"{"version": 1}"#);
        assert!(none.is_err());
        let both = parse_scenario(
            r#"{"version": 1, "demo": "cnot-relay",
                "campaign": {"family": "classical_local", "samples": 1, "seed": 1}}"#,
        );
        assert!(both.is_err());
        let one = parse_scenario(r#"{"version": 1, "demo": "cnot-relay"}"#);
        assert!(one.is_ok());
    }

    #[test]
    fn scenario_version_checked() {
        let bad = parse_scenario(r#"{"version": 2, "demo": "cnot-relay"}"#);
        match bad {
            Err(Error::Scenario { pointer, .. }) => assert_eq!(pointer, "/version"),
            other => panic!("expected scenario error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_is_a_validation_error() {
        let bad = parse_scenario("{not json");
        assert!(matches!(bad, Err(Error::Scenario { .. })));
        assert_eq!(exit_code_for(&bad.unwrap_err()), 2);
    }

    #[test]
    fn unknown_demo_rejected_with_pointer() {
        let bad = parse_scenario(r#"{"version": 1, "demo": "warp-drive"}"#);
        match bad {
            Err(Error::Scenario { pointer, .. }) => assert_eq!(pointer, "/demo"),
            other => panic!("expected scenario error, got {other:?}"),
        }
    }

    #[test]
    fn demo_reports_have_expected_verdicts() {
        let relay = execute(&ScenarioFile::for_demo("cnot-relay"), 1).unwrap();
        match &relay.result {
            ReportResult::Witness { report, .. } => {
                assert_eq!(
                    report.final_verdict,
                    crate::protocol::FinalVerdict::WitnessFiresNonclassical
                );
                assert!((report.negativity_ab.plus - 0.5).abs() < 1e-9);
            }
            _ => panic!("expected witness result"),
        }
        let nonlocal = execute(&ScenarioFile::for_demo("nonlocal-cz"), 1).unwrap();
        match &nonlocal.result {
            ReportResult::Witness { report, .. } => {
                assert_eq!(
                    report.final_verdict,
                    crate::protocol::FinalVerdict::WitnessInvalidNonlocal
                );
            }
            _ => panic!("expected witness result"),
        }
    }

    #[test]
    fn campaign_small_classical_sweep_passes() {
        let campaign = CampaignSpec {
            family: MediatorKind::ClassicalLocal,
            samples: 25,
            seed: 42,
            n_steps: 6,
            negativity_threshold: None,
        };
        let aggregate = run_campaign(&campaign, 1).unwrap();
        assert!(aggregate.pass, "max {}", aggregate.max_negativity);
        assert!(aggregate.max_negativity <= NEGATIVITY_THRESHOLD);
    }

    #[test]
    fn campaign_results_independent_of_worker_count() {
        let campaign = CampaignSpec {
            family: MediatorKind::ClassicalLocal,
            samples: 16,
            seed: 7,
            n_steps: 4,
            negativity_threshold: None,
        };
        let a = run_campaign(&campaign, 1).unwrap();
        let b = run_campaign(&campaign, 8).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn quantum_family_produces_entanglement_somewhere() {
        let campaign = CampaignSpec {
            family: MediatorKind::QuantumLocal,
            samples: 40,
            seed: 42,
            n_steps: 8,
            negativity_threshold: None,
        };
        let aggregate = run_campaign(&campaign, 4).unwrap();
        assert!(
            aggregate.max_negativity > 0.1,
            "max negativity {:.3}",
            aggregate.max_negativity
        );
        assert!(!aggregate.pass);
    }

    #[test]
    fn report_round_trips_and_reruns_identically() {
        let report = execute(&ScenarioFile::for_demo("bmv-phase"), 1).unwrap();
        let ReportResult::Witness { protocol, report: first } = &report.result else {
            panic!("expected witness result");
        };
        let echoed = ScenarioFile::for_protocol(protocol.clone());
        let again = execute(&echoed, 1).unwrap();
        let ReportResult::Witness { report: second, .. } = &again.result else {
            panic!("expected witness result");
        };
        assert_eq!(first.final_verdict, second.final_verdict);
        assert_eq!(first.negativity_ab.plus, second.negativity_ab.plus);
    }

    #[test]
    fn deterministic_section_strips_only_footer() {
        let report = execute(&ScenarioFile::for_demo("cnot-relay"), 1).unwrap();
        let json = report_to_json(&report).unwrap();
        let det = deterministic_section(&json).unwrap();
        assert!(!det.contains("wall_clock_ms"));
        assert!(det.contains("final_verdict"));
        // two executions differ only in the footer
        let report2 = execute(&ScenarioFile::for_demo("cnot-relay"), 1).unwrap();
        let det2 = deterministic_section(&report_to_json(&report2).unwrap()).unwrap();
        assert_eq!(det, det2);
    }

    #[test]
    fn exit_codes_split_validation_from_numerics() {
        assert_eq!(exit_code_for(&Error::scenario("/demo", "nope")), 2);
        assert_eq!(exit_code_for(&Error::InvalidProtocol("bad".into())), 2);
        assert_eq!(exit_code_for(&Error::NoConvergence(100)), 3);
        assert_eq!(exit_code_for(&Error::NotUnitary(1.0)), 3);
        assert_eq!(exit_code_for(&Error::NotRepresentable(1.0)), 3);
    }

    #[test]
    fn classification_scenario() {
        let scenario = ScenarioFile::for_variables(vec![
            crate::nonclassicality::qubit_z_basis(),
            crate::nonclassicality::qubit_x_basis(),
        ]);
        let report = execute(&scenario, 1).unwrap();
        match &report.result {
            ReportResult::Classification { result } => {
                assert!(result.non_classical);
                assert_eq!(result.witness_pair, Some((0, 1)));
            }
            _ => panic!("expected classification result"),
        }
    }
}
