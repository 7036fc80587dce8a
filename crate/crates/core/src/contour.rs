//! Exact dynamics of piecewise-constant profiles.
//!
//! A jump profile moves each breakpoint at twice the local stream value,
//! a'_j = 2G(a_j), while the levels stay frozen. G at a point is obtained by
//! integrating the exact symmetrized kernel (the m-rotation average of the
//! full kernel) against the profile in closed form: the full kernel has the
//! elementary antiderivative F(s) = (π/4)·sign(s)(1−cos 2s) + (s/4)cos 2s −
//! (3/16)sin 2s with F(s+2π) = F(s) + π/2, so the kernel kinks are handled
//! by branch logic rather than quadrature. (The |sin| closed form of the
//! symmetrized kernel would be exact only for m = 4; see the kernel module.)
//! This module is the independent oracle for the grid solver on BV data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec;
use crate::field::ScalarField;
use crate::flow::FlowTrajectory;
use crate::fold::SymmetryFold;

const SPAN_SNAP_TOL: f64 = 1e-9;

/// Ordered breakpoints a₀ < … < a₂ₙ spanning one fundamental domain, with
/// level gᵢ on (aᵢ₋₁, aᵢ). The first and last breakpoint are the same jump
/// seen through m-fold periodicity, so a₂ₙ − a₀ = 2π/m exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpProfile {
    fold: SymmetryFold,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl JumpProfile {
    pub fn new(fold: SymmetryFold, breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let bad = |reason: &str| Error::BadProfile {
            reason: reason.to_string(),
        };
        if levels.is_empty() || breakpoints.len() != levels.len() + 1 {
            return Err(bad("need one more breakpoint than levels"));
        }
        if levels.len() % 2 != 0 {
            return Err(bad("interval count per fundamental domain must be even"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("breakpoints must be strictly increasing"));
        }
        let span = breakpoints[breakpoints.len() - 1] - breakpoints[0];
        if (span - fold.domain_len()).abs() > SPAN_SNAP_TOL {
            return Err(bad("breakpoints must span exactly one fundamental domain 2π/m"));
        }
        if !levels.iter().all(|g| g.is_finite()) {
            return Err(bad("levels must be finite"));
        }
        for i in 0..levels.len() {
            let next = levels[(i + 1) % levels.len()];
            if levels[i] == next {
                return Err(bad("adjacent levels must be distinct (cyclically)"));
            }
        }
        let mut breakpoints = breakpoints;
        let last = breakpoints.len() - 1;
        breakpoints[last] = breakpoints[0] + fold.domain_len();
        Ok(Self {
            fold,
            breakpoints,
            levels,
        })
    }

    /// Degenerate single-level profile; useful as a reference state.
    pub fn uniform(fold: SymmetryFold, level: f64) -> Self {
        Self {
            fold,
            breakpoints: vec![fold.domain_start(), fold.domain_start() + fold.domain_len()],
            levels: vec![level],
        }
    }

    pub fn fold(&self) -> SymmetryFold {
        self.fold
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn interval_count(&self) -> usize {
        self.levels.len()
    }

    /// Positions of the moving jumps, a₁ … a₂ₙ.
    pub fn jump_positions(&self) -> &[f64] {
        &self.breakpoints[1..]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Σ gᵢ (aᵢ − aᵢ₋₁), proportional to the mean of the extended field.
    pub fn level_measure(&self) -> f64 {
        self.levels
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(g, w)| g * (w[1] - w[0]))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.level_measure() / self.fold.domain_len()
    }

    /// Value of the extended profile at an angle (jump points get the right
    /// limit).
    pub fn value_at(&self, theta: f64) -> f64 {
        let l = self.fold.domain_len();
        let mut x = theta;
        let b0 = self.breakpoints[0];
        x -= l * ((x - b0) / l).floor();
        for (i, w) in self.breakpoints.windows(2).enumerate() {
            if x >= w[0] && x < w[1] {
                return self.levels[i];
            }
        }
        self.levels[self.levels.len() - 1]
    }

    fn with_jumps(&self, jumps: &[f64]) -> Self {
        let l = self.fold.domain_len();
        let mut breakpoints = Vec::with_capacity(jumps.len() + 1);
        breakpoints.push(jumps[jumps.len() - 1] - l);
        breakpoints.extend_from_slice(jumps);
        Self {
            fold: self.fold,
            breakpoints,
            levels: self.levels.clone(),
        }
    }
}

/// ∫₀^s |sin u| du, odd in s and exact across the kinks of |sin|.
/// (Antiderivative of the closed-form symmetrized kernel; exact as the
/// stream integrand only for m = 4, kept for cross-checks.)
fn abs_sin_antiderivative(s: f64) -> f64 {
    let a = s.abs();
    let k = (a / PI).floor();
    let val = 2.0 * k + 1.0 - (a - k * PI).cos();
    if s >= 0.0 {
        val
    } else {
        -val
    }
}

/// ∫₀^s of the 2π-periodized full kernel, exact through its kinks at
/// multiples of 2π. On (−π, π) this is
/// (π/4)·sign(s)(1−cos 2s) + (s/4)cos 2s − (3/16)·sin 2s,
/// extended by F(s+2π) = F(s) + π/2 (the kernel's mean is 1/4).
fn full_kernel_antiderivative(s: f64) -> f64 {
    let wraps = ((s + PI) / (2.0 * PI)).floor();
    let s0 = s - 2.0 * PI * wraps;
    let sign = if s0 >= 0.0 { 1.0 } else { -1.0 };
    let c2 = (2.0 * s0).cos();
    let base = 0.25 * PI * sign * (1.0 - c2) + 0.25 * s0 * c2 - 0.1875 * (2.0 * s0).sin();
    base + wraps * 0.5 * PI
}

/// ∫₀^s of the exact symmetrized kernel.
fn symmetrized_antiderivative(s: f64, fold: SymmetryFold) -> f64 {
    let m = fold.m();
    let step = 2.0 * PI / fold.m_f64();
    let mut acc = 0.0;
    for j in 0..m {
        let off = j as f64 * step;
        acc += full_kernel_antiderivative(s + off) - full_kernel_antiderivative(off);
    }
    acc / fold.m_f64()
}

/// Stream value G(x) of a jump profile by exact piecewise integration of the
/// symmetrized kernel.
pub fn stream_at(profile: &JumpProfile, x: f64) -> f64 {
    let fold = profile.fold();
    let m = fold.m_f64();
    let mut conv = 0.0;
    for (i, w) in profile.breakpoints.windows(2).enumerate() {
        let ia = symmetrized_antiderivative(x - w[0], fold);
        let ib = symmetrized_antiderivative(x - w[1], fold);
        conv += profile.levels[i] * (ia - ib);
    }
    m / (2.0 * PI) * conv
}

/// ∂θG(x); continuous for any profile because the integrated kernel is C¹.
pub fn dstream_at(profile: &JumpProfile, x: f64) -> f64 {
    let fold = profile.fold();
    let m = fold.m_f64();
    let mut acc = 0.0;
    for (i, w) in profile.breakpoints.windows(2).enumerate() {
        let da = crate::kernel::kernel_eval_m_exact(x - w[0], fold);
        let db = crate::kernel::kernel_eval_m_exact(x - w[1], fold);
        acc += profile.levels[i] * (da - db);
    }
    m / (2.0 * PI) * acc
}

/// G evaluated at moving jump j ∈ 1..=2n.
pub fn g_at_jump(profile: &JumpProfile, j: usize) -> Result<f64> {
    if j == 0 || j >= profile.breakpoints.len() {
        return Err(Error::BadProfile {
            reason: format!("jump index {j} out of range 1..={}", profile.breakpoints.len() - 1),
        });
    }
    let w = profile.breakpoints[j] - profile.breakpoints[j - 1];
    if w <= 0.0 {
        return Err(Error::BadProfile {
            reason: format!("degenerate interval at index {j}"),
        });
    }
    Ok(stream_at(profile, profile.breakpoints[j]))
}

/// Speeds a_j' = 2 G(a_j) of the moving jumps.
pub fn contour_velocity(profile: &JumpProfile) -> Vec<f64> {
    let jumps = profile.jump_positions().to_vec();
    exec::map_items(&jumps, |&x| 2.0 * stream_at(profile, x))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ContourStatus {
    Completed,
    /// Breakpoints collided; the profile left the admissible class.
    JumpMerger { t: f64 },
}

#[derive(Clone, Debug)]
pub struct ContourTrajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<JumpProfile>,
    pub status: ContourStatus,
}

impl ContourTrajectory {
    pub fn final_profile(&self) -> &JumpProfile {
        self.profiles.last().expect("trajectory holds at least the initial profile")
    }
}

fn speeds_of(levels_profile: &JumpProfile, jumps: &[f64]) -> Vec<f64> {
    let p = levels_profile.with_jumps(jumps);
    contour_velocity(&p)
}

fn ordered(jumps: &[f64], l: f64) -> bool {
    jumps.windows(2).all(|w| w[1] > w[0]) && jumps[jumps.len() - 1] - jumps[0] < l
}

/// RK4 integration of the jump system; levels stay constant by construction.
/// `t_final` may be negative for time reversal. Stops with a merger status
/// when breakpoint ordering fails at any stage.
pub fn contour_run(
    profile: &JumpProfile,
    dt: f64,
    t_final: f64,
    cadence: usize,
) -> ContourTrajectory {
    let l = profile.fold().domain_len();
    let dt = if t_final < 0.0 { -dt.abs() } else { dt.abs() };
    let steps = if dt == 0.0 { 0 } else { (t_final / dt).round().max(0.0) as usize };
    let cadence = cadence.max(1);

    let mut t = 0.0;
    let mut jumps = profile.jump_positions().to_vec();
    let mut times = vec![0.0];
    let mut profiles = vec![profile.clone()];
    let mut status = ContourStatus::Completed;

    'time: for step in 0..steps {
        let k1 = speeds_of(profile, &jumps);
        let mid1: Vec<f64> = jumps.iter().zip(&k1).map(|(q, k)| q + 0.5 * dt * k).collect();
        if !ordered(&mid1, l) {
            status = ContourStatus::JumpMerger { t };
            break 'time;
        }
        let k2 = speeds_of(profile, &mid1);
        let mid2: Vec<f64> = jumps.iter().zip(&k2).map(|(q, k)| q + 0.5 * dt * k).collect();
        if !ordered(&mid2, l) {
            status = ContourStatus::JumpMerger { t };
            break 'time;
        }
        let k3 = speeds_of(profile, &mid2);
        let end: Vec<f64> = jumps.iter().zip(&k3).map(|(q, k)| q + dt * k).collect();
        if !ordered(&end, l) {
            status = ContourStatus::JumpMerger { t };
            break 'time;
        }
        let k4 = speeds_of(profile, &end);
        for (i, q) in jumps.iter_mut().enumerate() {
            *q += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !ordered(&jumps, l) {
            status = ContourStatus::JumpMerger { t };
            break 'time;
        }
        t = (step + 1) as f64 * dt;
        if (step + 1) % cadence == 0 || step + 1 == steps {
            times.push(t);
            profiles.push(profile.with_jumps(&jumps));
        }
    }
    if *times.last().unwrap() != t {
        times.push(t);
        profiles.push(profile.with_jumps(&jumps));
    }
    ContourTrajectory {
        times,
        profiles,
        status,
    }
}

/// Locate the `count` sharpest gradients of a sampled field, refined by a
/// parabolic fit through the |∂θg| peak.
pub fn track_jumps(g: &ScalarField, count: usize) -> Vec<f64> {
    let dg = g.to_spectral().derivative().to_scalar();
    let v: Vec<f64> = dg.values().iter().map(|x| x.abs()).collect();
    let n = v.len();
    let h = g.spacing();
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 0..n {
        let prev = v[(k + n - 1) % n];
        let next = v[(k + 1) % n];
        if v[k] >= prev && v[k] >= next && v[k] > 0.0 {
            let denom = prev - 2.0 * v[k] + next;
            let frac = if denom.abs() > 1e-300 {
                (0.5 * (prev - next) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            peaks.push((v[k], g.node(k) + frac * h));
        }
    }
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut pos: Vec<f64> = peaks.into_iter().take(count).map(|(_, p)| p).collect();
    pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pos
}

fn circular_distance(a: f64, b: f64, l: f64) -> f64 {
    let d = (a - b).rem_euclid(l);
    d.min(l - d)
}

#[derive(Clone, Debug)]
pub struct GridComparison {
    /// (time, largest breakpoint discrepancy at that time)
    pub rows: Vec<(f64, f64)>,
    pub max_discrepancy: f64,
}

/// Compare contour breakpoints against jumps tracked in the grid solver's
/// reconstructed field at matching snapshot times.
pub fn compare_with_grid(contour: &ContourTrajectory, grid: &FlowTrajectory) -> GridComparison {
    let mut rows = Vec::new();
    let mut max_d = 0.0f64;
    for (t, profile) in contour.times.iter().zip(&contour.profiles) {
        let Some(snap) = grid
            .snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 + 1e-9 * t.abs())
        else {
            continue;
        };
        let l = profile.fold().domain_len();
        let tracked = track_jumps(&snap.fields.g, profile.interval_count());
        if tracked.is_empty() {
            continue;
        }
        let mut worst = 0.0f64;
        for &p in profile.jump_positions() {
            let best = tracked
                .iter()
                .map(|&q| circular_distance(p, q, l))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        rows.push((*t, worst));
        max_d = max_d.max(worst);
    }
    GridComparison {
        rows,
        max_discrepancy: max_d,
    }
}
