// Fits mixtures with k = 2..10 components and keeps the lowest AIC.
//
// AIC is permissive with full covariances: it often splits a true
// cluster into several components.

use again_core::gmm::{select_best_k, EmConfig};
use again_core::rng;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let centers = [[0.2, 0.2, 0.1], [0.8, 0.3, 0.6], [0.4, 0.8, 0.3]];
    let mut data = rng::stream(7, 0);
    let points: Vec<Vec<f64>> = (0..250)
        .map(|i| {
            let c = centers[i % 3];
            c.iter().map(|x| x + 0.03 * data.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();

    let selection = select_best_k(&points, 10, &EmConfig::default(), &mut rng::stream(7, 1))?;
    for (k, score) in &selection.scores {
        println!("k = {k:>2}  AIC {score:>10.1}");
    }
    println!("chosen k = {}", selection.best.components.len());
    for g in &selection.best.components {
        let m: Vec<String> = g.mean.iter().map(|v| format!("{v:.3}")).collect();
        println!("  weight {:.2}  mean [{}]  lp {:.3}", g.mixture_weight, m.join(", "), g.lp);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
