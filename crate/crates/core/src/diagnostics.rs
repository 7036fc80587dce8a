//! Entropy, weak-convergence proxies and asymptotic-profile extraction.
//!
//! The central object is the per-marker sign latch: once F(t,θᵢ) < 0 the
//! forcing keeps it negative forever, so the latched measure
//! S(t) = (2π/M)·#{i : F < 0 by time t} is nondecreasing by construction and
//! the first crossing time is final.

use serde::Serialize;
use std::f64::consts::PI;

use crate::contour::JumpProfile;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::flow::{FlowState, FlowTrajectory};
use crate::kernel::invert_helmholtz_spectral;

/// Per-step scalar diagnostics plus the per-marker crossing records.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticsTrace {
    pub times: Vec<f64>,
    /// Latched-measure entropy S(t) in [0, 2π].
    pub entropy: Vec<f64>,
    /// ‖∂θG‖_{L²(S¹)}, the H⁻¹-type distance of g from its mean.
    pub h1dual: Vec<f64>,
    pub mean_g: Vec<f64>,
    pub l2_g: Vec<f64>,
    pub min_g: Vec<f64>,
    pub max_g: Vec<f64>,
    crossing_time: Vec<f64>,
    latched: Vec<bool>,
    quantum: f64,
}

impl DiagnosticsTrace {
    pub fn new(markers: usize) -> Self {
        DiagnosticsTrace {
            crossing_time: vec![f64::INFINITY; markers],
            latched: vec![false; markers],
            quantum: 2.0 * PI / markers as f64,
            ..Default::default()
        }
    }

    /// Label measure carried by one marker, 2π/M.
    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn latched(&self, marker: usize) -> bool {
        self.latched[marker]
    }

    pub fn crossing_times(&self) -> &[f64] {
        &self.crossing_time
    }

    /// Current entropy value, (2π/M) times the latched count.
    pub fn entropy_now(&self) -> f64 {
        self.quantum * self.latched.iter().filter(|&&b| b).count() as f64
    }

    /// Update the latch from a snapshot and append one diagnostics row.
    pub fn observe(&mut self, state: &FlowState) {
        for (i, &fv) in state.f.iter().enumerate() {
            if !self.latched[i] && fv < 0.0 {
                self.latched[i] = true;
                self.crossing_time[i] = state.t;
            }
        }
        self.times.push(state.t);
        self.entropy.push(self.entropy_now());
        self.h1dual.push(state.fields.dstream.l2_norm());
        self.mean_g.push(state.fields.g.mean());
        self.l2_g.push(state.fields.g.l2_norm());
        self.min_g.push(state.fields.g.min());
        self.max_g.push(state.fields.g.max());
    }

    /// S at time t recomputed from crossing times; equals the stored column.
    pub fn entropy_from_crossings(&self, t: f64) -> f64 {
        self.quantum
            * self
                .crossing_time
                .iter()
                .filter(|&&ct| ct <= t)
                .count() as f64
    }
}

/// Finite-horizon estimate of the expanding set: labels that never latched
/// before `horizon`. A superset of the true set that shrinks as the horizon
/// grows.
#[derive(Clone, Debug)]
pub struct ExpandingSetEstimate {
    pub label_indices: Vec<usize>,
    /// Connected components on the cyclic label grid.
    pub component_count: usize,
    /// Label measure of the estimate (full circle).
    pub measure: f64,
    /// All labels still expanding — constant data, nothing to estimate.
    pub degenerate: bool,
}

pub fn expanding_set_estimate(trace: &DiagnosticsTrace, horizon: f64) -> ExpandingSetEstimate {
    let m = trace.crossing_time.len();
    let label_indices: Vec<usize> = (0..m)
        .filter(|&i| trace.crossing_time[i] > horizon)
        .collect();
    let count = label_indices.len();
    let mut component_count = 0;
    if count > 0 && count < m {
        let in_set: Vec<bool> = {
            let mut v = vec![false; m];
            for &i in &label_indices {
                v[i] = true;
            }
            v
        };
        for i in 0..m {
            let prev = in_set[(i + m - 1) % m];
            if in_set[i] && !prev {
                component_count += 1;
            }
        }
    } else if count == m {
        component_count = 1;
    }
    ExpandingSetEstimate {
        measure: trace.quantum * count as f64,
        component_count,
        degenerate: count == m,
        label_indices,
    }
}

/// ‖∂θ(4+∂θθ)⁻¹g‖_{L²(S¹)} computed spectrally; small values certify that g
/// is close to its mean in the H⁻¹ sense.
pub fn weak_convergence_proxy(g: &ScalarField) -> f64 {
    invert_helmholtz_spectral(&g.to_spectral())
        .derivative()
        .to_scalar()
        .l2_norm()
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Constant { value: f64 },
    Jumps { profile: JumpProfile },
}

/// Piecewise-constant (or constant) profile detected at the end of a run.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticProfile {
    #[serde(flatten)]
    pub kind: ProfileKind,
    /// Max deviation of the final field from the profile, away from
    /// 3-cell neighborhoods of the jumps.
    pub residual: f64,
}

/// Cluster the final field into levels and locate the jumps.
///
/// Requires a quasi-stationary run: the entropy must have moved by less than
/// one marker quantum over the trailing 20% of the trace, otherwise the run
/// is still rearranging and the result would be meaningless.
pub fn extract_profile(traj: &FlowTrajectory, tol: f64) -> Result<AsymptoticProfile> {
    let trace = &traj.trace;
    if trace.len() < 5 {
        return Err(Error::Undecided {
            reason: "trace too short to judge stationarity".into(),
        });
    }
    let tail_start = (trace.len() as f64 * 0.8) as usize;
    let ds = trace.entropy[trace.len() - 1] - trace.entropy[tail_start];
    if ds >= trace.quantum() {
        return Err(Error::Undecided {
            reason: format!(
                "entropy still increasing over the trailing window (ΔS = {ds:.3e})"
            ),
        });
    }

    let g = &traj.final_state().fields.g;
    let values = g.values();
    let n = values.len();
    let (lo, hi) = (g.min(), g.max());
    let range = hi - lo;
    if range <= 1e-12 {
        return Ok(AsymptoticProfile {
            kind: ProfileKind::Constant { value: g.mean() },
            residual: range,
        });
    }

    // 1-D break detection on the sorted values.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = tol * range;
    let mut cuts: Vec<f64> = Vec::new();
    for w in sorted.windows(2) {
        if w[1] - w[0] > gap {
            cuts.push(0.5 * (w[0] + w[1]));
        }
    }
    if cuts.is_empty() {
        return Ok(AsymptoticProfile {
            kind: ProfileKind::Constant { value: g.mean() },
            residual: sorted[n - 1] - sorted[0],
        });
    }

    let cluster_of = |v: f64| cuts.iter().filter(|&&c| v > c).count();
    let ids: Vec<usize> = values.iter().map(|&v| cluster_of(v)).collect();
    let mut transitions: Vec<usize> = Vec::new(); // node k where id changes between k and k+1 (cyclic)
    for k in 0..n {
        if ids[k] != ids[(k + 1) % n] {
            transitions.push(k);
        }
    }
    if transitions.len() % 2 != 0 {
        return Err(Error::Undecided {
            reason: format!("odd transition count {}", transitions.len()),
        });
    }

    let h = g.spacing();
    let l = g.fold().domain_len();
    let mut breakpoints: Vec<f64> = transitions.iter().map(|&k| g.node(k) + 0.5 * h).collect();
    let first = breakpoints[0];
    breakpoints.push(first + l);
    let mut levels = Vec::with_capacity(transitions.len());
    for w in 0..transitions.len() {
        let a = transitions[w];
        let b = transitions[(w + 1) % transitions.len()];
        let count = (b + n - a) % n;
        let sum: f64 = (1..=count).map(|s| values[(a + s) % n]).sum();
        levels.push(sum / count.max(1) as f64);
    }
    let profile = JumpProfile::new(g.fold(), breakpoints, levels).map_err(|e| Error::Undecided {
        reason: format!("clustered profile rejected: {e}"),
    })?;

    // residual away from 3-cell jump neighborhoods
    let mut residual = 0.0f64;
    for k in 0..n {
        let near_jump = transitions
            .iter()
            .any(|&tk| ((k + n) as i64 - tk as i64).rem_euclid(n as i64).min(
                (tk as i64 - k as i64).rem_euclid(n as i64),
            ) <= 3);
        if !near_jump {
            residual = residual.max((values[k] - profile.value_at(g.node(k))).abs());
        }
    }
    Ok(AsymptoticProfile {
        kind: ProfileKind::Jumps { profile },
        residual,
    })
}
