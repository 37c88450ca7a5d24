#![allow(dead_code)]

use std::path::PathBuf;

use causal_predict::kernel::{build_kernel, Pole, RationalAnticausalKernel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn single_pole() -> RationalAnticausalKernel {
    build_kernel(&[Pole::new(1.0, 0.0, 1)], &[1.0], 1.0).unwrap()
}

/// One to three pole groups (real or conjugate pairs), multiplicity one or
/// two, random numerator of admissible degree.
pub fn random_kernel(rng: &mut ChaCha8Rng, omega: f64) -> RationalAnticausalKernel {
    loop {
        let groups = rng.random_range(1..=3);
        let mut poles = Vec::new();
        for _ in 0..groups {
            let a = rng.random_range(0.1..3.0);
            let mult = rng.random_range(1..=2);
            if rng.random::<bool>() {
                poles.push(Pole::new(a, 0.0, mult));
            } else {
                let b = omega * rng.random_range(0.05..0.95);
                poles.push(Pole::new(a, b, mult));
                poles.push(Pole::new(a, -b, mult));
            }
        }
        let degree: u32 = poles.iter().map(|p| p.multiplicity).sum();
        let num_len = rng.random_range(1..=degree as usize);
        let numerator: Vec<f64> = (0..num_len).map(|_| rng.random_range(-2.0..2.0)).collect();
        if numerator.last().map(|c| c.abs() > 0.1).unwrap_or(false) {
            if let Ok(k) = build_kernel(&poles, &numerator, omega) {
                return k;
            }
        }
    }
}
