#![allow(dead_code)]

pub mod oracle;

use chainlogic::HardyAmplitudes;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random complex triple with every modulus at least `floor` after normalization.
pub fn random_triple(rng: &mut ChaCha8Rng, floor: f64) -> HardyAmplitudes {
    loop {
        let mut draw = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (a, b, c) = (draw(), draw(), draw());
        let n = (a.norm_sqr() + b.norm_sqr() + c.norm_sqr()).sqrt();
        let (a, b, c) = (a / n, b / n, c / n);
        if a.norm() > floor && b.norm() > floor && c.norm() > floor {
            return HardyAmplitudes { a, b, c };
        }
    }
}
