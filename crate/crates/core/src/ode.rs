//! Scalar theory for y'' = c(t)·y with c > 0 bounded, and the Riccati link
//! F = −y'/y with F' = F² − c.
//!
//! Every positive solution either decreases to a limit l ≥ 0 or eventually
//! grows at least linearly; l > 0 forces ∫ t·c(t) dt < ∞. The classifier
//! reports finite-horizon surrogates of this dichotomy and is used as an
//! independent oracle for the per-marker dynamics of the flow solver.

use serde::Serialize;

use crate::error::{Error, Result};

/// Sampled path of (y, y').
#[derive(Clone, Debug)]
pub struct OdePath {
    pub ts: Vec<f64>,
    pub ys: Vec<f64>,
    pub vs: Vec<f64>,
    /// First time y crosses zero (linear interpolation), if it does.
    pub zero_crossing: Option<f64>,
}

impl OdePath {
    pub fn last_t(&self) -> f64 {
        *self.ts.last().unwrap()
    }
}

/// RK4 path of y'' = c(t)y from (y0, dy0); records a zero crossing of y as
/// an event and keeps integrating (generic slopes may cross, flow-derived
/// paths never do).
pub fn integrate_y(
    c: impl Fn(f64) -> f64,
    y0: f64,
    dy0: f64,
    t_final: f64,
    dt: f64,
) -> OdePath {
    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut ts = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut vs = Vec::with_capacity(steps + 1);
    let mut zero_crossing = None;
    let (mut y, mut v) = (y0, dy0);
    ts.push(0.0);
    ys.push(y);
    vs.push(v);
    for k in 0..steps {
        let t = k as f64 * dt;
        let (ny, nv) = rk4_linear(&c, t, y, v, dt);
        if zero_crossing.is_none() && y > 0.0 && ny <= 0.0 {
            let frac = y / (y - ny);
            zero_crossing = Some(t + frac * dt);
        }
        y = ny;
        v = nv;
        ts.push(t + dt);
        ys.push(y);
        vs.push(v);
    }
    OdePath {
        ts,
        ys,
        vs,
        zero_crossing,
    }
}

fn rk4_linear(c: &impl Fn(f64) -> f64, t: f64, y: f64, v: f64, dt: f64) -> (f64, f64) {
    let f = |t: f64, y: f64, v: f64| (v, c(t) * y);
    let (k1y, k1v) = f(t, y, v);
    let (k2y, k2v) = f(t + 0.5 * dt, y + 0.5 * dt * k1y, v + 0.5 * dt * k1v);
    let (k3y, k3v) = f(t + 0.5 * dt, y + 0.5 * dt * k2y, v + 0.5 * dt * k2v);
    let (k4y, k4v) = f(t + dt, y + dt * k3y, v + dt * k3v);
    (
        y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// y decreases to a positive limit; ∫ t·c dt converges.
    PositiveLimit,
    /// y decreases to zero; ∫ t·c dt diverges.
    ZeroLimit,
    /// y' turns positive and stays there; y grows at least linearly.
    Divergent,
    /// The horizon does not support a consistent classification.
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct OdeClassification {
    pub scenario: Scenario,
    /// Richardson extrapolation of y(∞) from the last three dyadic
    /// checkpoints (∞ encoded for the divergent class).
    pub limit_estimate: f64,
    /// ∫₀ᵀ t·c(t) dt by per-step Simpson quadrature.
    pub weighted_integral: f64,
    /// The running integral kept growing by more than tol over each of the
    /// last three dyadic windows.
    pub weighted_integral_divergent: bool,
    /// Time after which the sign of y' settled (None when it never does).
    pub monotone_after: Option<f64>,
}

/// Classify a finite-horizon path of y'' = c(t)y against the
/// decay/growth dichotomy.
pub fn classify(
    c: impl Fn(f64) -> f64,
    y0: f64,
    dy0: f64,
    t_final: f64,
    dt: f64,
    tol: f64,
) -> OdeClassification {
    let steps = (t_final / dt).round().max(8.0) as usize;
    let dt = t_final / steps as f64;
    let path = integrate_y(&c, y0, dy0, t_final, dt);

    // per-step Simpson for W(t) = ∫ t·c dt, with dyadic checkpoints
    let f = |t: f64| t * c(t);
    let mut w = 0.0;
    let mut w_at = [0.0f64; 4]; // W(T/8), W(T/4), W(T/2), W(T)
    let marks = [steps / 8, steps / 4, steps / 2, steps];
    for k in 0..steps {
        let t = k as f64 * dt;
        w += dt / 6.0 * (f(t) + 4.0 * f(t + 0.5 * dt) + f(t + dt));
        for (mi, &mark) in marks.iter().enumerate() {
            if k + 1 == mark {
                w_at[mi] = w;
            }
        }
    }
    let growth = [w_at[1] - w_at[0], w_at[2] - w_at[1], w_at[3] - w_at[2]];
    let weighted_integral_divergent = growth.iter().all(|&g| g > tol);

    if path.zero_crossing.is_some() {
        return OdeClassification {
            scenario: Scenario::Undecided,
            limit_estimate: 0.0,
            weighted_integral: w,
            weighted_integral_divergent,
            monotone_after: None,
        };
    }

    // settle time of the sign of v
    let last_sign = path.vs.last().unwrap().signum();
    let mut settle_idx = 0;
    for (k, &v) in path.vs.iter().enumerate() {
        if v.signum() != last_sign {
            settle_idx = k + 1;
        }
    }
    let monotone_after = if settle_idx < path.ts.len() {
        Some(path.ts[settle_idx])
    } else {
        None
    };

    if *path.vs.last().unwrap() > 0.0 {
        return OdeClassification {
            scenario: Scenario::Divergent,
            limit_estimate: f64::INFINITY,
            weighted_integral: w,
            weighted_integral_divergent,
            monotone_after,
        };
    }

    // decreasing branch: Richardson on y(T/4), y(T/2), y(T)
    let y_at = |frac: f64| {
        let idx = ((steps as f64 * frac).round() as usize).min(steps);
        path.ys[idx]
    };
    let (y1, y2, y3) = (y_at(0.25), y_at(0.5), y_at(1.0));
    let d1 = y2 - y1;
    let d2 = y3 - y2;
    let limit_estimate = if d1.abs() < 1e-300 {
        y3
    } else {
        let r = d2 / d1;
        if r >= 1.0 || r < 0.0 {
            y3
        } else {
            y3 + d2 * r / (1.0 - r)
        }
    };

    let positive = limit_estimate > 10.0 * tol;
    let scenario = match (positive, weighted_integral_divergent) {
        (true, false) => Scenario::PositiveLimit,
        (false, true) => Scenario::ZeroLimit,
        // the two finite-horizon indicators disagree
        _ => {
            if !positive && !weighted_integral_divergent {
                // both small: a convergent integral with vanishing limit is
                // outside the dichotomy at this horizon
                Scenario::Undecided
            } else {
                Scenario::Undecided
            }
        }
    };
    OdeClassification {
        scenario,
        limit_estimate: limit_estimate.max(0.0),
        weighted_integral: w,
        weighted_integral_divergent,
        monotone_after,
    }
}

enum SlopeClass {
    Crosses,
    Grows,
    Survives,
}

fn classify_slope(c: &impl Fn(f64) -> f64, dy0: f64, t_final: f64, dt: f64) -> SlopeClass {
    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let (mut y, mut v) = (1.0, dy0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let (ny, nv) = rk4_linear(c, t, y, v, dt);
        if ny <= 0.0 {
            return SlopeClass::Crosses;
        }
        if nv > 0.0 {
            return SlopeClass::Grows;
        }
        y = ny;
        v = nv;
    }
    SlopeClass::Survives
}

/// Bisection for the initial slope separating growth from zero-crossing:
/// the principal non-increasing positive solution on [0, T].
///
/// Steeper-than-critical slopes cross zero, shallower ones turn around and
/// grow; the surviving band in between shrinks with T (below f64 resolution
/// for exponentially growing separations, in which case the returned slope
/// is the separatrix to machine precision even though its own path cannot
/// be followed to T in floating point).
pub fn shoot_decaying(c: impl Fn(f64) -> f64, t_final: f64, dt: f64) -> Result<f64> {
    let sup = (0..=1000)
        .map(|k| c(t_final * k as f64 / 1000.0))
        .fold(0.0f64, f64::max);
    if !(sup > 0.0 && sup.is_finite()) {
        return Err(Error::BracketFailure {
            reason: "forcing must be positive and bounded on [0, T]".into(),
        });
    }
    let mut lo = -2.0 * sup.sqrt();
    let mut hi = 0.0;
    match classify_slope(&c, lo, t_final, dt) {
        SlopeClass::Crosses => {}
        _ => {
            return Err(Error::BracketFailure {
                reason: format!("slope {lo} does not cross zero"),
            })
        }
    }
    let mut survivor = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match classify_slope(&c, mid, t_final, dt) {
            SlopeClass::Crosses => lo = mid,
            SlopeClass::Grows => hi = mid,
            SlopeClass::Survives => {
                survivor = Some(mid);
                lo = mid;
            }
        }
    }
    Ok(survivor.unwrap_or(0.5 * (lo + hi)))
}

/// Riccati transform F = −y'/y of a positive path.
pub fn riccati_equiv(path: &OdePath) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.ys.len());
    for ((&y, &v), &t) in path.ys.iter().zip(&path.vs).zip(&path.ts) {
        if y <= 0.0 {
            return Err(Error::NonPositiveY { t });
        }
        out.push(-v / y);
    }
    Ok(out)
}

/// Integrate F' = F² − c(t) and return the first zero crossing of F.
pub fn riccati_crossing(
    c: impl Fn(f64) -> f64,
    f0: f64,
    t_final: f64,
    dt: f64,
) -> Option<f64> {
    let steps = (t_final / dt).round().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let rhs = |t: f64, f: f64| f * f - c(t);
    let mut f = f0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = rhs(t, f);
        let k2 = rhs(t + 0.5 * dt, f + 0.5 * dt * k1);
        let k3 = rhs(t + 0.5 * dt, f + 0.5 * dt * k2);
        let k4 = rhs(t + dt, f + dt * k3);
        let nf = f + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if f > 0.0 && nf <= 0.0 {
            return Some(t + dt * f / (f - nf));
        }
        if nf < 0.0 {
            return Some(t + dt);
        }
        f = nf;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_solutions() {
        // c ≡ 1, dy0 = −1 → e^{−t}
        let p = integrate_y(|_| 1.0, 1.0, -1.0, 10.0, 1e-3);
        let yt = *p.ys.last().unwrap();
        assert!((yt - (-10.0f64).exp()).abs() < 1e-8);
        // c ≡ 1, dy0 = 0 → cosh t
        let p = integrate_y(|_| 1.0, 1.0, 0.0, 3.0, 1e-3);
        assert!((p.ys.last().unwrap() - 3.0f64.cosh()).abs() < 1e-8);
        // c ≡ 4, dy0 = −2 → e^{−2t}
        let p = integrate_y(|_| 4.0, 1.0, -2.0, 5.0, 1e-3);
        assert!((p.ys.last().unwrap() - (-10.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn convexity_along_positive_paths() {
        let p = integrate_y(|t: f64| 1.0 + 0.5 * (-t).exp(), 1.0, -0.3, 4.0, 1e-3);
        // y'' = c y > 0 wherever y > 0: check v is increasing there
        for k in 1..p.vs.len() {
            if p.ys[k - 1] > 0.0 && p.ys[k] > 0.0 {
                assert!(p.vs[k] >= p.vs[k - 1] - 1e-12);
            }
        }
    }

    #[test]
    fn classify_constant_forcing_decay() {
        let c = classify(|_| 1.0, 1.0, -1.0, 12.0, 1e-3, 1e-5);
        assert_eq!(c.scenario, Scenario::ZeroLimit);
        assert!(c.weighted_integral_divergent);
        assert!((c.weighted_integral - 72.0).abs() < 1e-6); // ∫₀¹² t dt
        assert_eq!(c.monotone_after, Some(0.0));
    }

    #[test]
    fn classify_constant_forcing_growth() {
        let c = classify(|_| 1.0, 1.0, 1.0, 10.0, 1e-3, 1e-5);
        assert_eq!(c.scenario, Scenario::Divergent);
        assert!(c.limit_estimate.is_infinite());
    }

    #[test]
    fn classify_integrable_forcing() {
        // the shot slope must come from the same horizon: a slope shot at a
        // short horizon sits measurably off the separatrix and its linear
        // growth shows up long before T
        let forcing = |t: f64| 2.0 / (1.0 + t).powi(3);
        let dy0 = shoot_decaying(forcing, 6000.0, 1e-2).unwrap();
        let cls = classify(forcing, 1.0, dy0, 6000.0, 1e-2, 1e-3);
        assert_eq!(cls.scenario, Scenario::PositiveLimit);
        assert!((cls.weighted_integral - 1.0).abs() < 1e-3);
        assert!(!cls.weighted_integral_divergent);
        assert!(cls.limit_estimate > 0.1);
    }

    #[test]
    fn shooting_recovers_principal_slopes() {
        let s = shoot_decaying(|_| 1.0, 40.0, 1e-3).unwrap();
        assert!((s + 1.0).abs() < 1e-9, "slope {s}");
        let s = shoot_decaying(|_| 4.0, 20.0, 1e-3).unwrap();
        assert!((s + 2.0).abs() < 1e-9, "slope {s}");
    }

    #[test]
    fn shot_path_decays_to_positive_limit() {
        let forcing = |t: f64| 2.0 / (1.0 + t).powi(3);
        let dy0 = shoot_decaying(forcing, 100.0, 1e-2).unwrap();
        let p = integrate_y(forcing, 1.0, dy0, 100.0, 1e-2);
        assert!(p.zero_crossing.is_none());
        assert!(p.vs.iter().all(|&v| v <= 1e-12));
        let cls = classify(forcing, 1.0, dy0, 100.0, 1e-2, 1e-3);
        let y_end = *p.ys.last().unwrap();
        assert!(y_end > 0.5 * cls.limit_estimate);
        assert!(p.vs.last().unwrap().abs() < 1e-3);
    }

    #[test]
    fn riccati_transform_satisfies_riccati_equation() {
        // y = cosh t → F = −tanh t, F' = F² − 1
        let p = integrate_y(|_| 1.0, 1.0, 0.0, 3.0, 1e-3);
        let f = riccati_equiv(&p).unwrap();
        for (k, &t) in p.ts.iter().enumerate() {
            assert!((f[k] + t.tanh()).abs() < 1e-8);
        }
        // centered finite differences reproduce F² − c
        for k in 1..f.len() - 1 {
            let df = (f[k + 1] - f[k - 1]) / (p.ts[k + 1] - p.ts[k - 1]);
            assert!((df - (f[k] * f[k] - 1.0)).abs() < 1e-5);
        }
    }

    #[test]
    fn riccati_rejects_nonpositive_paths() {
        let p = integrate_y(|_| 1.0, 1.0, -2.0, 3.0, 1e-3);
        assert!(p.zero_crossing.is_some());
        assert!(matches!(riccati_equiv(&p), Err(Error::NonPositiveY { .. })));
    }

    #[test]
    fn forcing_lemma_crossing_window() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let c0: f64 = rng.gen_range(0.001..1.0);
            let big_c: f64 = rng.gen_range(1.0..10.0);
            let f0 = c0 * c0 / (1000.0 * big_c);
            let window = c0 / (2.0 * big_c);
            let forcing = move |t: f64| c0 - big_c * t;
            let crossing = riccati_crossing(forcing, f0, window, window / 4000.0);
            match crossing {
                Some(t) => assert!(t <= window + 1e-12),
                None => panic!("no crossing inside the window (c0={c0}, C0={big_c})"),
            }
        }
    }
}
