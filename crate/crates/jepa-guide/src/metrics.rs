//! Nearest-neighbor rarity metrics and minority-set selection.
//!
//! Two distinct notions of "minority" coexist here. Generator-centric rarity
//! is low density under the sampled distribution itself (or, without a
//! density, a large average distance to neighbors). World-centric rarity is a
//! low spectral score under an encoder, which can disagree sharply with the
//! generator's view. Metric computations are pure, single-threaded, and
//! deliberately quadratic: at desk scale the brute-force answer is the
//! specification.

use crate::diffusion::GaussianMixture;
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::score::jepa_score_exact;

/// Which rarity notion drives the selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionKind {
    /// Rank by the generator's own density, ascending; without a density,
    /// rank by average k-nearest-neighbor distance, descending.
    GeneratorCentric,
    /// Rank by the encoder's spectral score, ascending.
    WorldCentric,
}

/// How the ranked batch is cut down to a selected set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Keep points strictly rarer than the cutoff. The comparison follows the
    /// kind's orientation: density below, score below, neighbor distance above.
    EpsilonCutoff(f64),
    /// Keep the rarest `ceil(fraction * len)` points; fraction in (0, 1].
    BottomFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinoritySetSpec {
    pub kind: SelectionKind,
    pub threshold_mode: ThresholdMode,
    /// Neighbor count for the density-free generator-centric fallback.
    pub knn_k: usize,
}

impl MinoritySetSpec {
    pub fn validate(&self) -> Result<()> {
        match self.threshold_mode {
            ThresholdMode::EpsilonCutoff(e) if !e.is_finite() => Err(Error::BadSelection {
                what: format!("epsilon cutoff {e} must be finite"),
            }),
            ThresholdMode::BottomFraction(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::BadSelection {
                    what: format!("bottom fraction {f} must lie in (0, 1]"),
                })
            }
            _ if self.knn_k == 0 => Err(Error::BadSelection {
                what: "knn_k must be at least 1".into(),
            }),
            _ => Ok(()),
        }
    }
}

fn validate_points(name: &str, points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or_else(|| Error::BadMetricInput {
        what: format!("{name} is empty"),
    })?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::BadMetricInput {
            what: format!("{name} has zero-dimensional points"),
        });
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::BadMetricInput {
                what: format!("{name}[{i}] has dim {}, expected {dim}", p.len()),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadMetricInput {
                what: format!("{name}[{i}] has a non-finite coordinate"),
            });
        }
    }
    Ok(dim)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-query mean Euclidean distance to the `k` nearest reference points.
///
/// Zero-distance matches are excluded, so a query that also appears in the
/// reference set is measured against its nearest distinct neighbor. Sums run
/// over the `k` distances in ascending order, making the result reproducible
/// bit for bit.
pub fn avg_knn_distance(
    batch: &[Vec<f64>],
    reference: &[Vec<f64>],
    k: usize,
) -> Result<Vec<f64>> {
    let bd = validate_points("batch", batch)?;
    let rd = validate_points("reference", reference)?;
    if bd != rd {
        return Err(Error::BadMetricInput {
            what: format!("batch dim {bd} differs from reference dim {rd}"),
        });
    }
    if k == 0 {
        return Err(Error::BadMetricInput {
            what: "k must be at least 1".into(),
        });
    }
    if k > reference.len() {
        return Err(Error::KnnKTooLarge {
            k,
            reference: reference.len(),
        });
    }
    batch
        .iter()
        .map(|q| {
            let mut ds: Vec<f64> = reference
                .iter()
                .map(|r| euclidean(q, r))
                .filter(|&d| d > 0.0)
                .collect();
            if ds.len() < k {
                return Err(Error::KnnKTooLarge {
                    k,
                    reference: ds.len(),
                });
            }
            ds.sort_by(f64::total_cmp);
            Ok(ds[..k].iter().sum::<f64>() / k as f64)
        })
        .collect()
}

/// Density and coverage between a generated set and a reference set, with
/// closed Euclidean balls of radius "k-th nearest neighbor within the
/// reference" around each reference point.
///
/// Density counts generated points per ball, normalized by `k * generated`;
/// coverage is the fraction of balls holding at least one generated point.
pub fn density_coverage(
    generated: &[Vec<f64>],
    reference: &[Vec<f64>],
    k: usize,
) -> Result<(f64, f64)> {
    let gd = validate_points("generated", generated)?;
    let rd = validate_points("reference", reference)?;
    if gd != rd {
        return Err(Error::BadMetricInput {
            what: format!("generated dim {gd} differs from reference dim {rd}"),
        });
    }
    if k == 0 {
        return Err(Error::BadMetricInput {
            what: "k must be at least 1".into(),
        });
    }
    if k >= reference.len() {
        return Err(Error::KnnKTooLarge {
            k,
            reference: reference.len(),
        });
    }

    // Ball radii: k-th nearest neighbor distance inside the reference set,
    // excluding each point's own index (not merely zero distances, so
    // duplicated reference points keep their duplicates as neighbors).
    let radii: Vec<f64> = (0..reference.len())
        .map(|i| {
            let mut ds: Vec<f64> = reference
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, r)| euclidean(&reference[i], r))
                .collect();
            ds.sort_by(f64::total_cmp);
            ds[k - 1]
        })
        .collect();

    let mut in_ball_count = 0usize;
    let mut covered = 0usize;
    for (r, &radius) in reference.iter().zip(&radii) {
        let mut any = false;
        for g in generated {
            if euclidean(g, r) <= radius {
                in_ball_count += 1;
                any = true;
            }
        }
        if any {
            covered += 1;
        }
    }
    let density = in_ball_count as f64 / (k as f64 * generated.len() as f64);
    let coverage = covered as f64 / reference.len() as f64;
    Ok((density, coverage))
}

/// Selects the minority subset of `batch` per `spec`, returning indices in
/// ascending order.
///
/// Generator-centric selection needs `gmm` for its density (otherwise it
/// falls back to average-kNN distance within the batch); world-centric
/// selection needs `encoder`. Rankings break ties by input index, so a
/// constant key selects a prefix of the batch.
pub fn minority_select(
    batch: &[Vec<f64>],
    spec: &MinoritySetSpec,
    gmm: Option<&GaussianMixture>,
    encoder: Option<&dyn Encoder>,
) -> Result<Vec<usize>> {
    validate_points("batch", batch)?;
    spec.validate()?;

    // Keys oriented so that smaller always means rarer.
    let (keys, rarer_is_smaller): (Vec<f64>, bool) = match spec.kind {
        SelectionKind::GeneratorCentric => match gmm {
            Some(g) => (
                batch.iter().map(|x| g.log_density(x).exp()).collect(),
                true,
            ),
            None => (avg_knn_distance(batch, batch, spec.knn_k)?, false),
        },
        SelectionKind::WorldCentric => {
            let enc = encoder.ok_or_else(|| Error::BadSelection {
                what: "world-centric selection needs an encoder".into(),
            })?;
            let keys = batch
                .iter()
                .map(|x| jepa_score_exact(enc, x).map(|s| s.value))
                .collect::<Result<Vec<f64>>>()?;
            (keys, true)
        }
    };

    let mut selected: Vec<usize> = match spec.threshold_mode {
        ThresholdMode::EpsilonCutoff(eps) => (0..batch.len())
            .filter(|&i| {
                if rarer_is_smaller {
                    keys[i] < eps
                } else {
                    keys[i] > eps
                }
            })
            .collect(),
        ThresholdMode::BottomFraction(f) => {
            let m = (f * batch.len() as f64).ceil() as usize;
            let mut order: Vec<usize> = (0..batch.len()).collect();
            order.sort_by(|&a, &b| {
                let cmp = keys[a].total_cmp(&keys[b]);
                let cmp = if rarer_is_smaller { cmp } else { cmp.reverse() };
                cmp.then(a.cmp(&b))
            });
            order[..m.min(batch.len())].to_vec()
        }
    };
    selected.sort_unstable();
    Ok(selected)
}
