//! Entanglement quantification and distinguishability predicates: partial
//! transpose, negativity with the PPT verdict, trace distance, the
//! single-observable-family separability sweep, and the no-signalling audit.

use serde::Serialize;

use crate::dense::{self, trace_norm, DenseOperator};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::states::{eq_reconstruct_am, DensityState};

/// Negativity at or below this counts as zero entanglement.
pub const NEGATIVITY_THRESHOLD: f64 = 1e-9;

/// Trace distance at or above this counts as single-shot distinguishable.
pub const SINGLE_SHOT_DISTANCE: f64 = 1.0 - 1e-9;

/// Largest admissible disturbance of a remote reduced state.
pub const NO_SIGNALLING_TOL: f64 = 1e-12;

/// Negativity and PPT verdict across one bipartition.
#[derive(Debug, Clone, Serialize)]
pub struct EntanglementVerdict {
    pub negativity: f64,
    pub ppt: bool,
    /// Subsystem indices on each side of the cut.
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Negativity `(‖ρ^{T_right}‖₁ − 1)/2` across `left : rest`.
///
/// The PPT verdict is exact for qubit×qubit cuts; for larger right-hand
/// factors it remains a one-sided witness.
pub fn negativity(s: &DensityState, left: &[usize]) -> Result<EntanglementVerdict> {
    let n = s.dims().len();
    let mut left_sorted = left.to_vec();
    left_sorted.sort_unstable();
    left_sorted.dedup();
    if left_sorted.is_empty() || left_sorted.len() != left.len() {
        return Err(Error::InvalidState {
            label: s.label().to_string(),
            reason: format!("invalid bipartition {left:?}"),
        });
    }
    if *left_sorted.last().unwrap() >= n {
        return Err(Error::InvalidState {
            label: s.label().to_string(),
            reason: format!("bipartition index out of range in {left:?}"),
        });
    }
    let right: Vec<usize> = (0..n).filter(|i| !left_sorted.contains(i)).collect();
    if right.is_empty() {
        return Err(Error::InvalidState {
            label: s.label().to_string(),
            reason: "bipartition leaves nothing on the right".into(),
        });
    }
    let pt = dense::partial_transpose(s.matrix(), s.dims(), &right);
    let norm = trace_norm(&pt)?;
    let neg = ((norm - 1.0) / 2.0).max(0.0);
    Ok(EntanglementVerdict {
        negativity: neg,
        ppt: neg <= NEGATIVITY_THRESHOLD,
        left: left_sorted,
        right,
    })
}

/// `½ ‖a − b‖₁`, clamped into `[0, 1]`.
pub fn trace_distance(a: &DensityState, b: &DensityState) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.total_dim(),
            got: b.total_dim(),
        });
    }
    let d = 0.5 * trace_norm(&a.matrix().sub(b.matrix()))?;
    Ok(d.clamp(0.0, 1.0))
}

/// Outcome of applying a local unitary and checking every other subsystem.
#[derive(Debug, Clone, Serialize)]
pub struct NoSignallingVerdict {
    pub ok: bool,
    pub max_distance: f64,
    /// `(subsystem index, trace distance of its reduced state)`.
    pub distances: Vec<(usize, f64)>,
}

/// Apply `local_unitary` on subsystem `acted` and measure how far every
/// other subsystem's reduced state moved.
pub fn no_signalling_audit(
    s: &DensityState,
    local_unitary: &DenseOperator,
    acted: usize,
) -> Result<NoSignallingVerdict> {
    if acted >= s.dims().len() {
        return Err(Error::InvalidState {
            label: s.label().to_string(),
            reason: format!("no subsystem {acted}"),
        });
    }
    if local_unitary.dim() != s.dims()[acted] {
        return Err(Error::DimensionMismatch {
            expected: s.dims()[acted],
            got: local_unitary.dim(),
        });
    }
    let full = dense::embed(local_unitary, s.dims(), &[acted]);
    let after = s.apply_unitary(&full)?;
    let mut distances = Vec::new();
    let mut max_distance = 0.0f64;
    for k in 0..s.dims().len() {
        if k == acted {
            continue;
        }
        let before_k = s.partial_trace(&[k])?;
        let after_k = after.partial_trace(&[k])?;
        let d = trace_distance(&before_k, &after_k)?;
        max_distance = max_distance.max(d);
        distances.push((k, d));
    }
    Ok(NoSignallingVerdict {
        ok: max_distance <= NO_SIGNALLING_TOL,
        max_distance,
        distances,
    })
}

/// Aggregate of the separability sweep over the single-observable family.
#[derive(Debug, Clone, Serialize)]
pub struct Eq4SweepReport {
    pub requested: usize,
    pub accepted: usize,
    pub attempts: usize,
    pub acceptance_rate: f64,
    pub max_negativity: f64,
    /// Sample indices whose verdict was not PPT (expected empty).
    pub violations: Vec<usize>,
    pub pass: bool,
}

/// Draw random `(r⃗, s_z, t⃗)` components uniform in `[−1, 1]⁷`, reject
/// non-positive reconstructions, and check PPT on every accepted state.
///
/// `samples` counts accepted states; attempts are capped at a large multiple.
pub fn eq4_separability_sweep(samples: usize, seed: u64) -> Result<Eq4SweepReport> {
    let mut rng = CounterRng::new(seed, 0x0e44);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    let mut max_negativity = 0.0f64;
    let mut violations = Vec::new();
    let cap = samples.saturating_mul(1000).max(1000);
    while accepted < samples && attempts < cap {
        attempts += 1;
        let r_a = [
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        let s_z = rng.uniform(-1.0, 1.0);
        let t_a = [
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        // The family is block-diagonal in the second qubit's Z basis with
        // spectrum ¼(1 + s_z ± |r⃗+t⃗|), ¼(1 − s_z ± |r⃗−t⃗|); clear misses
        // skip the eigensolver, borderline draws fall through to it.
        let plus: f64 = (0..3).map(|k| (r_a[k] + t_a[k]).powi(2)).sum::<f64>().sqrt();
        let minus: f64 = (0..3).map(|k| (r_a[k] - t_a[k]).powi(2)).sum::<f64>().sqrt();
        let closed_form_min = 0.25 * (1.0 + s_z - plus).min(0.25 * (1.0 - s_z - minus));
        if closed_form_min < crate::states::STATE_PSD_FLOOR - 1e-12 {
            continue;
        }
        let matrix = eq_reconstruct_am(&r_a, s_z, &t_a);
        let state = match DensityState::new(matrix, vec![2, 2], "eq4-sample") {
            Ok(s) => s,
            Err(Error::InvalidState { .. }) => continue,
            Err(e) => return Err(e),
        };
        let verdict = negativity(&state, &[0])?;
        max_negativity = max_negativity.max(verdict.negativity);
        if !verdict.ppt {
            violations.push(accepted);
        }
        accepted += 1;
    }
    Ok(Eq4SweepReport {
        requested: samples,
        accepted,
        attempts,
        acceptance_rate: accepted as f64 / attempts.max(1) as f64,
        max_negativity,
        pass: violations.is_empty() && accepted == samples,
        violations,
    })
}
