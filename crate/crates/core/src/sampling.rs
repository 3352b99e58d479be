//! Gyration-biased sampling of configuration sets for large module counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{canonical_form, expand_level, radius_of_gyration, LatticeConfig};

/// Sampling settings shared by every level of the growth.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Maximum number of configurations kept per module count.
    pub max_configs: usize,
    /// Gaussian width in lattice units; `None` selects the data-driven default.
    pub sigma: Option<f64>,
    pub seed: u64,
}

impl SamplingParams {
    pub fn new(max_configs: usize, sigma: Option<f64>, seed: u64) -> Result<Self> {
        let p = SamplingParams { max_configs, sigma, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_configs == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!("sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Half the standard deviation of the gyration radii, floored at 0.1.
pub fn default_sigma(gyration: &[f64]) -> f64 {
    let m = gyration.len() as f64;
    if m == 0.0 {
        return 0.1;
    }
    let mean = gyration.iter().sum::<f64>() / m;
    let var = gyration.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / m;
    (0.5 * var.sqrt()).max(0.1)
}

/// Unnormalized Gaussian weights centred on the smallest radius.
pub fn gaussian_weights(gyration: &[f64], sigma: f64) -> Vec<f64> {
    let g0 = gyration.iter().copied().fold(f64::INFINITY, f64::min);
    gyration.iter().map(|g| (-(g - g0).powi(2) / (2.0 * sigma * sigma)).exp()).collect()
}

/// Normalized draw probabilities.
pub fn sampling_probabilities(gyration: &[f64], sigma: f64) -> Vec<f64> {
    let w = gaussian_weights(gyration, sigma);
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Draws `k` distinct indices, one at a time, each with probability
/// proportional to its weight among the indices not yet drawn.
pub fn weighted_draw_without_replacement<R: Rng>(weights: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut total: f64 = weights.iter().sum();
    let mut picked = Vec::with_capacity(k.min(weights.len()));
    while picked.len() < k && !remaining.is_empty() {
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pos = remaining.len() - 1;
        for (j, &idx) in remaining.iter().enumerate() {
            acc += weights[idx];
            if acc > target {
                pos = j;
                break;
            }
        }
        let idx = remaining.remove(pos);
        picked.push(idx);
        // recompute rather than subtract to keep the total from drifting
        total = remaining.iter().map(|&i| weights[i]).sum();
        if total <= 0.0 {
            // only zero-weight entries left; fall back to uniform order
            picked.extend(remaining.iter().take(k - picked.len()));
            break;
        }
    }
    picked
}

/// Keeps at most `params.max_configs` configurations, preferring compact ones.
///
/// The output is sorted by canonical key. `rng` carries state between levels
/// of a growth run so that the whole run is reproducible from one seed.
pub fn sample_with_rng<R: Rng>(configs: &[LatticeConfig], max_configs: usize, sigma: Option<f64>, rng: &mut R) -> Vec<LatticeConfig> {
    if configs.len() <= max_configs {
        return configs.to_vec();
    }
    let gyration: Vec<f64> = configs.iter().map(radius_of_gyration).collect();
    let sigma = sigma.unwrap_or_else(|| default_sigma(&gyration));
    let weights = gaussian_weights(&gyration, sigma);
    let mut picked = weighted_draw_without_replacement(&weights, max_configs, rng);
    picked.sort_unstable();
    let mut out: Vec<_> = picked
        .into_iter()
        .map(|i| {
            let (key, canon) = canonical_form(&configs[i]);
            (key, canon)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out.into_iter().map(|(_, c)| c).collect()
}

/// One-shot sampling of a single set, seeded from `params`.
pub fn sample_configs(configs: &[LatticeConfig], params: &SamplingParams) -> Result<Vec<LatticeConfig>> {
    params.validate()?;
    if configs.is_empty() {
        return Err(Error::InvalidParameter("cannot sample from an empty set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok(sample_with_rng(configs, params.max_configs, params.sigma, &mut rng))
}

/// Grows assemblies level by level up to `n`, sampling every level that
/// exceeds the cap. Returns the retained sets for `1..=n`.
pub fn sample_enumerate(n: usize, params: &SamplingParams) -> Result<Vec<Vec<LatticeConfig>>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut levels = vec![vec![canonical_form(&LatticeConfig::single()).1]];
    for _ in 2..=n {
        let grown: Vec<LatticeConfig> = expand_level(levels.last().unwrap()).into_iter().map(|(_, c)| c).collect();
        let kept = sample_with_rng(&grown, params.max_configs, params.sigma, &mut rng);
        levels.push(kept);
    }
    Ok(levels)
}
