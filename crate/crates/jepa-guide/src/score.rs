//! Log-spectral rarity scores of encoder Jacobians.
//!
//! The exact score of `f` at `x` is `Σ_{i=1}^{r} log σ_i(J_f(x))` over the
//! numerical rank `r`; its cheap stand-in keeps only the top `k` singular
//! values of the randomized compression `Q*ᵀ J`. [`certify`] reports both
//! values, the exact error split into a range-capture part and a truncation
//! part, and computable upper bounds for each part.

use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::matrix::{format_float, numerical_rank, svd, tolerances};
use crate::rsvd::{halko_constant, rsvd, RsvdConfig, RsvdResult};

/// Exact score and the spectrum behind it. `sigmas` holds only the `rank`
/// values above the rank cutoff, descending.
#[derive(Debug, Clone)]
pub struct ExactScore {
    pub value: f64,
    pub sigmas: Vec<f64>,
    pub rank: usize,
}

/// Where the `(k+1)`-th singular value in the range-capture bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSource {
    /// From the full SVD of the Jacobian: the proven certificate.
    Exact,
    /// From the compressed SVD (needs oversampling `p >= 1`). Usable when the
    /// full SVD is too expensive, but only a heuristic stand-in; reports carry
    /// a flag so downstream consumers cannot mistake it for the proven bound.
    CompressedSurrogate,
}

/// Everything [`certify`] knows about one evaluation point.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub js_exact: f64,
    pub js_approx: f64,
    /// `Σ_{i<=k} (log σ_i - log σ̃_i)`: error from imperfect range capture.
    pub e_rsvd: f64,
    /// `Σ_{i=k+1}^{r} log σ_i`: error from dropping the tail outright.
    pub e_trunc: f64,
    /// Upper bound on `e_rsvd`; always non-negative.
    pub bound_rsvd: f64,
    /// Upper bound on `e_trunc`; stored signed, negative in tight regimes.
    pub bound_trunc: f64,
    pub numerical_rank: usize,
    pub sigmas_exact: Vec<f64>,
    pub sigmas_approx: Vec<f64>,
    /// Set when `r <= k`: the truncation term has nothing to truncate and
    /// `e_trunc = bound_trunc = 0` by convention.
    pub truncation_vacuous: bool,
    /// Set when the bound used the compressed `(k+1)`-th value instead of the
    /// exact one.
    pub surrogate_tail: bool,
}

impl ScoreReport {
    /// Stable scalar-field order for CSV rows. Spectra are `;`-joined in the
    /// final two columns so the header never depends on `k` or `r`.
    pub const CSV_HEADER: &'static str = "js_exact,js_approx,e_rsvd,e_trunc,bound_rsvd,bound_trunc,numerical_rank,truncation_vacuous,surrogate_tail,sigmas_exact,sigmas_approx";

    pub fn to_csv_row(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format_float(*x))
                .collect::<Vec<_>>()
                .join(";")
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_float(self.js_exact),
            format_float(self.js_approx),
            format_float(self.e_rsvd),
            format_float(self.e_trunc),
            format_float(self.bound_rsvd),
            format_float(self.bound_trunc),
            self.numerical_rank,
            self.truncation_vacuous,
            self.surrogate_tail,
            join(&self.sigmas_exact),
            join(&self.sigmas_approx),
        )
    }
}

/// Exact score: full SVD of the analytic Jacobian, summed log spectrum over
/// the numerical rank. A spectrum entirely below the rank cutoff is an
/// explicit error, never `-inf`.
pub fn jepa_score_exact(enc: &dyn Encoder, x: &[f64]) -> Result<ExactScore> {
    let j = enc.jacobian(x);
    let s = svd(&j)?.s;
    let rank = numerical_rank(&s);
    if rank == 0 {
        return Err(Error::DegenerateJacobian);
    }
    let sigmas = s[..rank].to_vec();
    let value = sigmas.iter().map(|v| v.ln()).sum();
    Ok(ExactScore { value, sigmas, rank })
}

/// Compressed score: `Σ_{i<=k} log σ̃_i` from the randomized truncated SVD.
/// Any kept value at or below the rank cutoff fails, naming its index.
pub fn jepa_score_approx(
    enc: &dyn Encoder,
    x: &[f64],
    cfg: &RsvdConfig,
    seed: u64,
) -> Result<(f64, RsvdResult)> {
    let j = enc.jacobian(x);
    cfg.validate_for(j.rows(), j.cols())?;
    let out = rsvd(&j, cfg, seed)?;
    check_kept_sigmas(&out.top_k_sigmas)?;
    let value = out.top_k_sigmas.iter().map(|v| v.ln()).sum();
    Ok((value, out))
}

pub(crate) fn check_kept_sigmas(kept: &[f64]) -> Result<()> {
    let smax = kept[0];
    if smax <= 0.0 {
        return Err(Error::DegenerateSigma { index: 0 });
    }
    let tol = tolerances::RANK_REL * smax;
    for (i, &v) in kept.iter().enumerate() {
        if v <= tol {
            return Err(Error::DegenerateSigma { index: i });
        }
    }
    Ok(())
}

/// Full certificate with the proven exact-tail bound.
pub fn certify(enc: &dyn Encoder, x: &[f64], cfg: &RsvdConfig, seed: u64) -> Result<ScoreReport> {
    certify_with_tail(enc, x, cfg, seed, TailSource::Exact)
}

/// Certificate with a selectable source for the `(k+1)`-th singular value in
/// the range-capture bound. See [`TailSource`].
pub fn certify_with_tail(
    enc: &dyn Encoder,
    x: &[f64],
    cfg: &RsvdConfig,
    seed: u64,
    tail: TailSource,
) -> Result<ScoreReport> {
    let j = enc.jacobian(x);
    cfg.validate_for(j.rows(), j.cols())?;
    if tail == TailSource::CompressedSurrogate && cfg.p == 0 {
        return Err(Error::BadConfig {
            field: "rsvd.p".to_string(),
            what: "surrogate tail needs oversampling p >= 1 so a (k+1)-th compressed value exists"
                .to_string(),
        });
    }

    let exact_svd = svd(&j)?;
    let r = numerical_rank(&exact_svd.s);
    if r == 0 {
        return Err(Error::DegenerateJacobian);
    }
    let sigmas_exact = exact_svd.s[..r].to_vec();
    let js_exact: f64 = sigmas_exact.iter().map(|v| v.ln()).sum();

    let out = rsvd(&j, cfg, seed)?;
    check_kept_sigmas(&out.top_k_sigmas)?;
    let sigmas_approx = out.top_k_sigmas.clone();
    let js_approx: f64 = sigmas_approx.iter().map(|v| v.ln()).sum();
    let k = cfg.k;

    let vacuous = r <= k;
    let (e_rsvd, e_trunc) = if vacuous {
        // Nothing beyond k to truncate; attribute the whole gap to range capture
        // so the decomposition identity still holds by definition.
        (js_exact - js_approx, 0.0)
    } else {
        let e_rsvd = (0..k)
            .map(|i| sigmas_exact[i].ln() - sigmas_approx[i].ln())
            .sum();
        let e_trunc = sigmas_exact[k..r].iter().map(|v| v.ln()).sum();
        (e_rsvd, e_trunc)
    };

    let approx_rank_k = out.rank_k_matrix()?;
    let residual_fro = j.sub(&approx_rank_k)?.frobenius_norm();
    let bound_trunc = if vacuous {
        0.0
    } else {
        let t = (r - k) as f64;
        (t / 2.0) * (residual_fro.powi(2) / t).ln()
    };

    let sigma_tail = match tail {
        TailSource::Exact => exact_svd.s.get(k).copied().unwrap_or(0.0),
        TailSource::CompressedSurrogate => out.svd_of_compressed.s[k],
    };
    // The inflation constant is defined for r >= k; in the vacuous case the
    // tail value is already ~0, so clamping r up to k changes nothing.
    let c = halko_constant(cfg, r.max(k))?;
    let bound_rsvd = sigmas_approx
        .iter()
        .map(|s| (1.0 + c * sigma_tail / s).ln())
        .sum();

    Ok(ScoreReport {
        js_exact,
        js_approx,
        e_rsvd,
        e_trunc,
        bound_rsvd,
        bound_trunc,
        numerical_rank: r,
        sigmas_exact,
        sigmas_approx,
        truncation_vacuous: vacuous,
        surrogate_tail: tail == TailSource::CompressedSurrogate,
    })
}

// ---------------------------------------------------------------------------
// Batch spectrum statistics
// ---------------------------------------------------------------------------

/// Distribution of the exact spectrum over a batch, and the tail-sum offset
/// from `k_th` onward.
#[derive(Debug, Clone)]
pub struct SpectrumStats {
    /// Per-index mean of `σ_i` across the batch, indices `1..=common_rank`.
    pub sigma_mean: Vec<f64>,
    /// Per-index population variance of `σ_i`.
    pub sigma_var: Vec<f64>,
    /// Cumulative share of total per-index variance; non-decreasing, ends at 1.
    pub cumulative_variance_ratio: Vec<f64>,
    /// Batch mean of `Σ_{i=k_th}^{r} log σ_i` (1-based, inclusive).
    pub offset_value: f64,
    /// Population standard deviation of that tail sum across the batch: how
    /// much sample identity leaks into the "constant" offset.
    pub offset_std: f64,
    /// 1-based split index used for the tail sum.
    pub k_th: usize,
    /// Smallest per-sample numerical rank in the batch.
    pub common_rank: usize,
    /// Set when samples disagreed on numerical rank and statistics were
    /// truncated to the common prefix.
    pub rank_was_ragged: bool,
}

impl SpectrumStats {
    pub const CSV_HEADER: &'static str = "index,sigma_mean,sigma_var,cumulative_variance_ratio";

    /// Per-index table; summary scalars ride along as `#`-comments so one file
    /// carries the whole struct.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# k_th={} offset_value={} offset_std={} common_rank={} rank_was_ragged={}\n",
            self.k_th,
            format_float(self.offset_value),
            format_float(self.offset_std),
            self.common_rank,
            self.rank_was_ragged
        ));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.sigma_mean.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                format_float(self.sigma_mean[i]),
                format_float(self.sigma_var[i]),
                format_float(self.cumulative_variance_ratio[i]),
            ));
        }
        out
    }
}

/// Exact spectra of a batch, reduced to per-index statistics.
///
/// `k_th = None` picks the variance elbow: the smallest index whose per-index
/// variance falls below 5% of the largest per-index variance (index 1 if the
/// spectrum never varies). Ragged numerical ranks truncate all statistics to
/// the minimum common rank and set [`SpectrumStats::rank_was_ragged`].
pub fn spectrum_stats(
    enc: &dyn Encoder,
    xs: &[Vec<f64>],
    k_th: Option<usize>,
) -> Result<SpectrumStats> {
    if xs.len() < 2 {
        return Err(Error::BatchTooSmall {
            need: 2,
            got: xs.len(),
        });
    }
    let mut spectra = Vec::with_capacity(xs.len());
    let mut common_rank = usize::MAX;
    let mut ragged = false;
    for x in xs {
        let score = jepa_score_exact(enc, x)?;
        common_rank = common_rank.min(score.rank);
        spectra.push(score.sigmas);
    }
    for s in &spectra {
        if s.len() != common_rank {
            ragged = true;
        }
    }

    let m = xs.len() as f64;
    let mut sigma_mean = vec![0.0; common_rank];
    let mut sigma_var = vec![0.0; common_rank];
    for s in &spectra {
        for i in 0..common_rank {
            sigma_mean[i] += s[i] / m;
        }
    }
    for i in 0..common_rank {
        // A bitwise-constant index has zero variance by definition; don't let
        // rounding in the mean manufacture ~1e-31 of fake spread.
        let constant = spectra.iter().all(|s| s[i] == spectra[0][i]);
        if constant {
            sigma_mean[i] = spectra[0][i];
            continue;
        }
        for s in &spectra {
            sigma_var[i] += (s[i] - sigma_mean[i]).powi(2) / m;
        }
    }

    let total_var: f64 = sigma_var.iter().sum();
    let mut cumulative_variance_ratio = Vec::with_capacity(common_rank);
    if total_var == 0.0 {
        // Constant spectrum: every index already explains all (zero) variance.
        cumulative_variance_ratio.resize(common_rank, 1.0);
    } else {
        let mut acc = 0.0;
        for v in &sigma_var {
            acc += v;
            cumulative_variance_ratio.push(acc / total_var);
        }
        // The final entry is 1 by construction; pin it against rounding drift.
        *cumulative_variance_ratio.last_mut().unwrap() = 1.0;
    }

    let k_th = match k_th {
        Some(v) => {
            if v == 0 || v > common_rank {
                return Err(Error::BadConfig {
                    field: "k_th".to_string(),
                    what: format!("must be in 1..={common_rank}, got {v}"),
                });
            }
            v
        }
        None => variance_elbow(&sigma_var),
    };

    let tail_sums: Vec<f64> = spectra
        .iter()
        .map(|s| s[k_th - 1..common_rank].iter().map(|v| v.ln()).sum())
        .collect();
    let (offset_value, offset_std) = if tail_sums.iter().all(|&v| v == tail_sums[0]) {
        (tail_sums[0], 0.0)
    } else {
        let mean: f64 = tail_sums.iter().sum::<f64>() / m;
        let var: f64 = tail_sums.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
        (mean, var.sqrt())
    };

    Ok(SpectrumStats {
        sigma_mean,
        sigma_var,
        cumulative_variance_ratio,
        offset_value,
        offset_std,
        k_th,
        common_rank,
        rank_was_ragged: ragged,
    })
}

/// Smallest 1-based index whose variance drops below 5% of the peak variance;
/// falls back to the last index when the spectrum varies everywhere, and to 1
/// when it varies nowhere.
fn variance_elbow(sigma_var: &[f64]) -> usize {
    let peak = sigma_var.iter().copied().fold(0.0_f64, f64::max);
    if peak == 0.0 {
        return 1;
    }
    sigma_var
        .iter()
        .position(|&v| v < 0.05 * peak)
        .map(|i| i + 1)
        .unwrap_or(sigma_var.len())
}
