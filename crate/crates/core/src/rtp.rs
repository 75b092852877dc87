//! Real-time pricing: consumers with quadratic benefit respond to a per-slot
//! price, and the provider trades their welfare against a quadratic
//! procurement cost.
//!
//! A data sample stacks satisfaction parameters slot by slot,
//! `(g_1(1), .., g_K(1), .., g_1(T), .., g_K(T))`.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DmocError, Result};
use crate::metric::{DecisionMetric, FEASIBILITY_TOL};
use crate::types::{DataSet, DecisionVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RtpParams {
    /// Number of consumers `K`.
    pub consumers: usize,
    /// Number of time slots `T`.
    pub slots: usize,
    pub alpha: f64,
    /// Quadratic, linear and constant procurement cost coefficients.
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for RtpParams {
    fn default() -> Self {
        Self {
            consumers: 5,
            slots: 4,
            alpha: 0.5,
            a: 0.1,
            b: 0.0,
            c: 10.0,
        }
    }
}

impl RtpParams {
    pub fn validate(&self) -> Result<()> {
        if self.consumers == 0 || self.slots == 0 {
            return Err(DmocError::InvalidParameter(
                "consumer and slot counts must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(DmocError::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.a >= 0.0 && self.b >= 0.0) || !self.a.is_finite() || !self.b.is_finite() || !self.c.is_finite() {
            return Err(DmocError::InvalidParameter(
                "cost coefficients must be finite with a >= 0 and b >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Length of a stacked satisfaction sample, `K * T`.
    pub fn data_dim(&self) -> usize {
        self.consumers * self.slots
    }
}

/// Consumer benefit of consuming `load` with satisfaction parameter `g`;
/// quadratic up to the saturation load `g / alpha`, flat beyond.
pub fn consumer_utility(load: f64, g: f64, alpha: f64) -> f64 {
    if load <= g / alpha {
        g * load - 0.5 * alpha * load * load
    } else {
        g * g / (2.0 * alpha)
    }
}

/// Load maximizing `u(l; g) - price * l`.
pub fn best_response_load(price: f64, g: f64, alpha: f64) -> f64 {
    if price > g {
        0.0
    } else {
        (g - price) / alpha
    }
}

static OVERPRICING_WARNED: AtomicBool = AtomicBool::new(false);

pub(crate) fn welfare_unchecked(params: &RtpParams, prices: &[f64], g: &[f64]) -> f64 {
    let k = params.consumers;
    let mut total = 0.0;
    let mut overpriced = false;
    for (t, &price) in prices.iter().enumerate() {
        let mut benefit = 0.0;
        let mut load = 0.0;
        for &gk in &g[t * k..(t + 1) * k] {
            overpriced |= price > gk;
            let l = best_response_load(price, gk, params.alpha);
            benefit += consumer_utility(l, gk, params.alpha);
            load += l;
        }
        total += benefit - params.a * load * load - params.b * load - params.c;
    }
    if overpriced && !OVERPRICING_WARNED.swap(true, Ordering::Relaxed) {
        log::warn!("price exceeds a satisfaction parameter; consumer load clamped at zero");
    }
    total
}

/// Provider welfare `f1(x; g)` for price profile `x` (length `T`) and stacked
/// satisfaction parameters `g` (length `K*T`).
pub fn f1(prices: &[f64], g: &[f64], params: &RtpParams) -> Result<f64> {
    check_len(prices.len(), params.slots)?;
    check_len(g.len(), params.data_dim())?;
    Ok(welfare_unchecked(params, prices, g))
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(DmocError::DimensionMismatch { expected, found })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtpDerivedConstants {
    pub a_tilde: f64,
    pub kappa: f64,
    pub beta: f64,
}

impl RtpDerivedConstants {
    pub fn beta_vec(&self, slots: usize) -> Vec<f64> {
        vec![self.beta; slots]
    }
}

pub fn derived_constants(params: &RtpParams) -> RtpDerivedConstants {
    let k = params.consumers as f64;
    let alpha = params.alpha;
    let a_tilde = k * k / (alpha * alpha) * (params.a + alpha / (2.0 * k));
    RtpDerivedConstants {
        a_tilde,
        kappa: params.a * k / (alpha * alpha * a_tilde),
        beta: params.b * k / (2.0 * alpha * a_tilde),
    }
}

/// Maps a stacked sample to `kappa * sum_k g_k(t) + beta`, the point whose
/// squared distance to a price profile ranks profiles exactly as `f1` does.
pub fn affine_transform(g: &[f64], params: &RtpParams) -> Result<Vec<f64>> {
    check_len(g.len(), params.data_dim())?;
    let consts = derived_constants(params);
    Ok(transform_with(g, params.consumers, &consts))
}

fn transform_with(g: &[f64], consumers: usize, consts: &RtpDerivedConstants) -> Vec<f64> {
    g.chunks_exact(consumers)
        .map(|slot| consts.kappa * slot.iter().sum::<f64>() + consts.beta)
        .collect()
}

/// Nearest representative to the transformed sample; ties go to the lowest index.
pub fn assign_cluster_rtp(g: &[f64], reps: &[DecisionVector], params: &RtpParams) -> Result<usize> {
    if reps.is_empty() {
        return Err(DmocError::InvalidParameter("no representatives".into()));
    }
    for rep in reps {
        check_len(rep.len(), params.slots)?;
    }
    let point = affine_transform(g, params)?;
    let mut best = (0, f64::INFINITY);
    for (m, rep) in reps.iter().enumerate() {
        let dist: f64 = point.iter().zip(rep.iter()).map(|(p, x)| (p - x) * (p - x)).sum();
        if dist < best.1 {
            best = (m, dist);
        }
    }
    Ok(best.0)
}

/// Optimal price profile for the cluster formed by `member_indices`.
pub fn closed_form_representative(
    data: &DataSet,
    member_indices: &[usize],
    params: &RtpParams,
) -> Result<DecisionVector> {
    check_len(data.dim(), params.data_dim())?;
    let rows: Vec<&[f64]> = member_indices.iter().map(|&n| data.sample(n)).collect();
    closed_form_from_rows(&rows, params)
}

pub(crate) fn closed_form_from_rows(rows: &[&[f64]], params: &RtpParams) -> Result<DecisionVector> {
    if rows.is_empty() {
        return Err(DmocError::EmptyCluster);
    }
    if params.a == 0.0 && params.b == 0.0 {
        return Err(DmocError::InvalidParameter(
            "a = 0 and b = 0 give a zero price, which violates price positivity".into(),
        ));
    }
    let k = params.consumers as f64;
    let half_alpha_over_k = params.alpha / (2.0 * k);
    let count = rows.len() as f64;
    let prices = (0..params.slots)
        .map(|t| {
            let total: f64 = rows
                .iter()
                .map(|g| g[t * params.consumers..(t + 1) * params.consumers].iter().sum::<f64>())
                .sum();
            let mean = total / (k * count);
            (params.a * mean + params.b * half_alpha_over_k) / (params.a + half_alpha_over_k)
        })
        .collect();
    Ok(DecisionVector::new(prices))
}

impl DecisionMetric for RtpParams {
    fn data_dim(&self) -> usize {
        RtpParams::data_dim(self)
    }

    fn decision_dim(&self) -> usize {
        self.slots
    }

    fn utility(&self, x: &[f64], g: &[f64]) -> f64 {
        welfare_unchecked(self, x, g)
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.slots && x.iter().all(|v| v.is_finite() && *v >= -FEASIBILITY_TOL)
    }

    fn best_decision(&self, samples: &[&[f64]]) -> Result<DecisionVector> {
        closed_form_from_rows(samples, self)
    }

    fn validate(&self) -> Result<()> {
        RtpParams::validate(self)
    }
}

/// Synthetic satisfaction parameters drawn i.i.d. uniform over consumers and slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RtpScenarioParams {
    pub consumers: usize,
    pub slots: usize,
    pub g_low: f64,
    pub g_high: f64,
    pub periods: usize,
    pub seed: u64,
}

impl Default for RtpScenarioParams {
    fn default() -> Self {
        Self {
            consumers: 5,
            slots: 4,
            g_low: 2.0,
            g_high: 3.0,
            periods: 365,
            seed: 0,
        }
    }
}

pub fn generate_rtp_scenario(params: &RtpScenarioParams) -> Result<DataSet> {
    if params.consumers == 0 || params.slots == 0 || params.periods == 0 {
        return Err(DmocError::InvalidParameter("scenario counts must be positive".into()));
    }
    if !(0.0 <= params.g_low && params.g_low <= params.g_high && params.g_high.is_finite()) {
        return Err(DmocError::InvalidParameter(format!(
            "invalid support [{}, {}]",
            params.g_low, params.g_high
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dim = params.consumers * params.slots;
    let rows = (0..params.periods)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if params.g_low == params.g_high {
                        params.g_low
                    } else {
                        rng.gen_range(params.g_low..params.g_high)
                    }
                })
                .collect()
        })
        .collect();
    DataSet::with_dim(dim, rows)
}
