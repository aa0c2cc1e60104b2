//! Plain ancestral sampling from a two-mode Gaussian mixture.
//!
//! The noise prediction is analytic (the mixture diffuses in closed form),
//! so the chain isolates the sampler itself: whatever the batch statistics
//! miss is discretization error, not model error.

use jepa_guide::diffusion::{sample_batch, GaussianMixture, VarianceSchedule};

fn main() -> jepa_guide::Result<()> {
    let gmm = GaussianMixture::isotropic(
        vec![0.7, 0.3],
        vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
        vec![0.25, 0.25],
    )?;
    let schedule = VarianceSchedule::default_linear(500)?;

    let n = 4000;
    let batch = sample_batch(&gmm, &schedule, 4242, n)?;

    let left = batch.iter().filter(|x| x[0] < 0.0).count();
    println!("samples: {n}, steps: {}", schedule.t_max());
    println!(
        "left-mode share {:.3} (target 0.700), right {:.3}",
        left as f64 / n as f64,
        (n - left) as f64 / n as f64
    );

    let mean: Vec<f64> = (0..2)
        .map(|j| batch.iter().map(|x| x[j]).sum::<f64>() / n as f64)
        .collect();
    let var: Vec<f64> = (0..2)
        .map(|j| {
            batch.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1) as f64
        })
        .collect();
    // Mixture moments by hand: E[x0] = -0.8, Var[x0] = 3.61, Var[x1] = 0.25.
    println!("batch mean ({:+.3}, {:+.3})  target (-0.800, 0.000)", mean[0], mean[1]);
    println!("batch var  ({:.3}, {:.3})  target (3.610, 0.250)", var[0], var[1]);
    Ok(())
}
