//! Synthetic household consumption profiles with planted peak times.

use dmoc_core::{DataSet, DmocError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio::quantize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticPcsParams {
    /// Number of distinct peak times planted across the profiles.
    pub archetypes: usize,
    pub slots: usize,
    pub samples: usize,
    pub seed: u64,
    /// Height of the evening bump in kW.
    pub peak_kw: f64,
    /// Flat background load in kW.
    pub base_kw: f64,
    /// Relative noise level in `[0, 1]`: scales amplitude noise and the
    /// range of the peak-slot shift.
    pub jitter: f64,
}

impl Default for SyntheticPcsParams {
    fn default() -> Self {
        Self {
            archetypes: 3,
            slots: 24,
            samples: 365,
            seed: 0,
            peak_kw: 3.0,
            base_kw: 0.5,
            jitter: 0.5,
        }
    }
}

impl SyntheticPcsParams {
    /// Planted peak slot of archetype `a`, spread from mid-afternoon to late
    /// evening of the period.
    pub fn planted_slot(&self, archetype: usize) -> usize {
        let span = if self.archetypes > 1 {
            archetype as f64 / (self.archetypes - 1) as f64
        } else {
            0.0
        };
        let slot = (self.slots as f64 * (0.6 + 0.3 * span)).floor() as usize;
        slot.min(self.slots - 1)
    }

    pub fn shift_radius(&self) -> usize {
        (self.jitter * self.slots as f64 / 6.0).round() as usize
    }
}

/// Each sample is the background load plus one bump centred on its
/// archetype's planted slot, shifted and scaled at random by `jitter`.
/// Archetypes are assigned round-robin. Values are rounded to the precision
/// used when writing CSV, so a written file reloads to the same data set.
pub fn gen_synthetic_pcs(params: &SyntheticPcsParams) -> Result<DataSet> {
    if params.archetypes == 0 || params.slots == 0 || params.samples == 0 {
        return Err(DmocError::InvalidParameter("archetypes, slots and samples must be positive".into()));
    }
    if !(0.0..=1.0).contains(&params.jitter) || !(params.peak_kw >= 0.0) || !(params.base_kw >= 0.0) {
        return Err(DmocError::InvalidParameter(
            "jitter must lie in [0, 1] and loads must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let slots = params.slots as i64;
    let radius = params.shift_radius() as i64;
    let rows = (0..params.samples)
        .map(|n| {
            let planted = params.planted_slot(n % params.archetypes) as i64;
            let shift = if radius > 0 { rng.gen_range(-radius..=radius) } else { 0 };
            let centre = (planted + shift).clamp(0, slots - 1) as usize;
            let height = params.peak_kw * (1.0 + params.jitter * rng.gen_range(-0.5..=0.5));
            (0..params.slots)
                .map(|t| {
                    let base = params.base_kw * (1.0 + params.jitter * rng.gen_range(-1.0..=1.0));
                    let bump = match t.abs_diff(centre) {
                        0 => height,
                        1 => 0.5 * height,
                        _ => 0.0,
                    };
                    quantize(base + bump)
                })
                .collect()
        })
        .collect();
    DataSet::with_dim(params.slots, rows)
}
