#![allow(dead_code)]

use std::io::Write;
use std::sync::{Mutex, MutexGuard};

use again_core::alp::RewardSpan;
use again_core::curriculum::{CurriculumTrace, TraceMeta};
use again_core::harness::SummaryRow;
use again_core::gmm::{GmmSnapshot, WeightedGaussian};
use again_core::rng::RandomStream;
use rand::Rng;
use rand_distr::StandardNormal;

/// Held by timed checks so their clocks do not include sibling tests.
pub fn timed() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes straight to stderr so the line shows up even when output is captured.
pub fn report(name: &str, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[acceptance] {verdict} {name}: {}", detail.as_ref());
}

pub fn report_row(row: &SummaryRow) {
    let pct = |x: Option<f64>| x.map_or_else(|| "-".into(), |v| format!("{:.2}%", 100.0 * v));
    let p = row.p_vs_alpgmm.map_or_else(|| "-".into(), |p| format!("{p:.2e}{}", row.marker));
    let _ = writeln!(
        std::io::stderr(),
        "[acceptance]      {:<20} mean {:>7} std {:>7} p {}",
        row.condition.to_string(),
        pct(row.mean),
        pct(row.std),
        p
    );
}

pub fn identity_cov(dim: usize, scale: f64) -> Vec<f64> {
    let mut c = vec![0.0; dim * dim];
    for i in 0..dim {
        c[i * dim + i] = scale;
    }
    c
}

fn awkward_float(rng: &mut RandomStream) -> f64 {
    match rng.random_range(0..6) {
        0 => rng.random::<f64>(),
        1 => rng.random::<f64>() * 1e-300,
        2 => -rng.random::<f64>() * 1e12,
        3 => f64::from_bits(rng.random_range(1..1u64 << 52)),
        4 => 0.1 + 0.2,
        _ => rng.sample::<f64, _>(StandardNormal),
    }
}

/// A valid trace with random shape and awkward float values.
pub fn random_trace(rng: &mut RandomStream) -> CurriculumTrace {
    let d = rng.random_range(1..=3);
    let dim = d + 1;
    let n = rng.random_range(0..12);
    let mut episode = 0u64;
    let mut snapshots = Vec::with_capacity(n);
    for _ in 0..n {
        episode += rng.random_range(1..500);
        let k = rng.random_range(1..=5);
        let components = (0..k)
            .map(|_| {
                let mut mean: Vec<f64> = (0..dim).map(|_| awkward_float(rng)).collect();
                let lp = match rng.random_range(0..4) {
                    0 => 0.0,
                    1 => 0.1,
                    _ => rng.random::<f64>() * 0.3,
                };
                mean[d] = lp;
                let covariance = (0..dim * dim).map(|_| awkward_float(rng)).collect();
                WeightedGaussian::new(mean, covariance, rng.random())
            })
            .collect();
        snapshots.push(GmmSnapshot { components, fit_episode: episode });
    }
    let reward_means = (0..n).map(|_| awkward_float(rng)).collect();
    CurriculumTrace {
        meta: TraceMeta {
            lower: vec![0.0; d],
            upper: (0..d).map(|i| 1.0 + i as f64).collect(),
            reward_span: RewardSpan::default(),
            config_hash: format!("{:016x}", rng.random::<u64>()),
            seed: rng.random(),
            fit_rate: rng.random_range(1..1000),
        },
        snapshots,
        reward_means,
    }
}

pub const THREE_CENTERS: [[f64; 3]; 3] = [[0.2, 0.2, 0.2], [0.8, 0.3, 0.6], [0.4, 0.8, 0.8]];

/// `n` points from an equal-weight mixture of spherical Gaussians.
pub fn mixture_points(rng: &mut RandomStream, centers: &[[f64; 3]], std: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let c = centers[rng.random_range(0..centers.len())];
            c.iter().map(|x| x + std * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect()
}
