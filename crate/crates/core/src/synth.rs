//! Seeded generators for the randomized suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contour::JumpProfile;
use crate::field::ScalarField;
use crate::flow::{FourierMode, InitialData};
use crate::fold::SymmetryFold;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random band-limited m-fold data with amplitudes decaying like 1/j;
/// guaranteed nonconstant.
pub fn random_fourier_data(
    fold: SymmetryFold,
    max_mode: u32,
    rng: &mut ChaCha8Rng,
) -> InitialData {
    loop {
        let modes: Vec<FourierMode> = (1..=max_mode)
            .map(|j| FourierMode {
                j,
                cos: rng.gen_range(-1.0..1.0) / j as f64,
                sin: rng.gen_range(-1.0..1.0) / j as f64,
            })
            .collect();
        if modes.iter().any(|m| m.cos.abs() + m.sin.abs() > 0.1) {
            return InitialData::fourier(fold, modes);
        }
    }
}

/// The same data sampled on a grid.
pub fn random_scalar_field(
    fold: SymmetryFold,
    n: usize,
    max_mode: u32,
    rng: &mut ChaCha8Rng,
) -> ScalarField {
    let data = random_fourier_data(fold, max_mode, rng);
    let sampler = data.sampler(0.0);
    ScalarField::from_fn(fold, n, |t| sampler.eval(t)).expect("valid grid")
}

/// Random profile with the requested (even) interval count; adjacent levels
/// distinct, widths bounded away from zero.
pub fn random_profile(fold: SymmetryFold, intervals: usize, rng: &mut ChaCha8Rng) -> JumpProfile {
    assert!(intervals >= 2 && intervals % 2 == 0);
    let l = fold.domain_len();
    let raw: Vec<f64> = (0..intervals).map(|_| rng.gen_range(0.25..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut breakpoints = vec![fold.domain_start()];
    for w in &raw {
        breakpoints.push(breakpoints.last().unwrap() + w / total * l);
    }
    let mut levels = Vec::with_capacity(intervals);
    for i in 0..intervals {
        loop {
            let v: f64 = rng.gen_range(-1.5..1.5);
            let prev_ok = i == 0 || (v - levels[i - 1]) as f64 != 0.0;
            let wrap_ok = i != intervals - 1 || v != levels[0];
            if v.abs() > 0.05 && prev_ok && wrap_ok {
                levels.push(v);
                break;
            }
        }
    }
    JumpProfile::new(fold, breakpoints, levels).expect("construction is valid")
}

/// Random strictly sign-alternating level sequence.
pub fn random_alternating_levels(count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(count >= 2 && count % 2 == 0);
    (0..count)
        .map(|i| {
            let mag: f64 = rng.gen_range(0.3..2.0);
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect()
}
