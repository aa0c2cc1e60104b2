//! Two views of "minority": the generator's own density versus the encoder's
//! spectral score. They select genuinely different points.

use jepa_guide::diffusion::{sample_batch, GaussianMixture, VarianceSchedule};
use jepa_guide::encoder::TanhMlpEncoder;
use jepa_guide::metrics::{
    avg_knn_distance, density_coverage, minority_select, MinoritySetSpec, SelectionKind,
    ThresholdMode,
};
use rand::SeedableRng;

fn main() -> jepa_guide::Result<()> {
    let gmm = GaussianMixture::isotropic(
        vec![0.9, 0.1],
        vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
        vec![0.2, 0.2],
    )?;
    let schedule = VarianceSchedule::default_linear(300)?;
    let batch = sample_batch(&gmm, &schedule, 99, 200)?;

    // Reference set: an independent draw straight from the target.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let reference: Vec<Vec<f64>> = (0..500).map(|_| gmm.sample(&mut rng)).collect();

    let knn = avg_knn_distance(&batch, &reference, 5)?;
    let mean_knn = knn.iter().sum::<f64>() / knn.len() as f64;
    let (density, coverage) = density_coverage(&batch, &reference, 5)?;
    println!("avg 5-nn distance {mean_knn:.4}, density {density:.3}, coverage {coverage:.3}");

    let enc = TanhMlpEncoder::new(2, 16, 32, 7)?;
    let spec = |kind| MinoritySetSpec {
        kind,
        threshold_mode: ThresholdMode::BottomFraction(0.1),
        knn_k: 5,
    };
    let by_density =
        minority_select(&batch, &spec(SelectionKind::GeneratorCentric), Some(&gmm), None)?;
    let by_score = minority_select(&batch, &spec(SelectionKind::WorldCentric), None, Some(&enc))?;

    let overlap = by_density.iter().filter(|i| by_score.contains(i)).count();
    println!(
        "\nbottom 10% by mixture density:   {} points, {} in the rare mode",
        by_density.len(),
        by_density.iter().filter(|&&i| batch[i][0] > 0.0).count()
    );
    println!(
        "bottom 10% by spectral score:    {} points, {} in the rare mode",
        by_score.len(),
        by_score.iter().filter(|&&i| batch[i][0] > 0.0).count()
    );
    println!(
        "overlap {overlap} of {} (jaccard {:.2}): the two notions of rarity disagree",
        by_density.len(),
        overlap as f64 / (by_density.len() + by_score.len() - overlap) as f64
    );
    Ok(())
}
