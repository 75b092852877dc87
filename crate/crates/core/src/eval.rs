//! Reference objectives and evaluation metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::engine::{self, EngineConfig, Init};
use crate::error::{DmocError, Result};
use crate::metric::DecisionMetric;
use crate::pcs::{AssignmentRule, Norm, PcsMetric, PcsParams, PcsSolverConfig};
use crate::types::{ClusteringResult, DataSet, DecisionVector};

/// Optimal decision of every sample on its own.
pub fn perfect_decisions<M: DecisionMetric + ?Sized>(metric: &M, data: &DataSet) -> Result<Vec<DecisionVector>> {
    let solved: Vec<Result<DecisionVector>> = (0..data.len())
        .into_par_iter()
        .map(|n| metric.best_decision(&[data.sample(n)]))
        .collect();
    solved.into_iter().collect()
}

/// `sum_n f(x*(g_n); g_n)`: the utility reached with one cluster per sample.
pub fn perfect_objective<M: DecisionMetric + ?Sized>(metric: &M, data: &DataSet) -> Result<f64> {
    if data.is_empty() {
        return Err(DmocError::EmptyDataSet);
    }
    let decisions = perfect_decisions(metric, data)?;
    Ok(data.iter().zip(&decisions).map(|(g, x)| metric.utility(x, g)).sum())
}

/// Relative optimality loss in percent, `|F_perfect - F_c| / |F_perfect| * 100`.
///
/// Absolute values keep the loss positive for metrics whose utilities are
/// negative, such as the scheduling metric.
pub fn relative_loss(perfect: f64, clustered: f64) -> Result<f64> {
    if perfect == 0.0 {
        return Err(DmocError::ZeroReference);
    }
    Ok((perfect - clustered).abs() / perfect.abs() * 100.0)
}

/// Loss of each clustering scheme as a function of the cluster count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub label: String,
    /// `(clusters, loss percent)`.
    pub points: Vec<(usize, f64)>,
}

/// Empirical distribution of the slot at which each profile peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakHistogram {
    pub p_hat: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Ties between equal maxima go to the earliest slot.
pub fn peak_histogram(data: &DataSet) -> PeakHistogram {
    let mut counts = vec![0usize; data.dim()];
    for g in data.iter() {
        let mut best = (0, f64::NEG_INFINITY);
        for (t, &v) in g.iter().enumerate() {
            if v > best.1 {
                best = (t, v);
            }
        }
        counts[best.0] += 1;
    }
    let total = data.len().max(1) as f64;
    PeakHistogram {
        p_hat: counts.iter().map(|&c| c as f64 / total).collect(),
        counts,
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn peak_entropy(histogram: &PeakHistogram) -> f64 {
    let h: f64 = histogram
        .p_hat
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// The clustering schemes compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Dmoc,
    /// Scheduling only: Voronoi assignment with true-norm representatives.
    DmocApprox,
    Kmc,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Dmoc => "dmoc",
            Scheme::DmocApprox => "dmoc-approx",
            Scheme::Kmc => "kmc",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dmoc" => Ok(Scheme::Dmoc),
            "dmoc-approx" => Ok(Scheme::DmocApprox),
            "kmc" => Ok(Scheme::Kmc),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

/// Runs `scheme` with `config.clusters` clusters. The approximated scheme is
/// only defined for scheduling metrics and falls back to exact assignment
/// otherwise.
pub fn run_scheme<M: DecisionMetric + ?Sized>(
    metric: &M,
    approx: Option<&PcsMetric>,
    data: &DataSet,
    scheme: Scheme,
    config: &EngineConfig,
) -> Result<ClusteringResult> {
    match scheme {
        Scheme::Kmc => baselines::kmc_pipeline(metric, data, config.clusters, config.seed),
        Scheme::Dmoc => engine::run_dmoc(metric, data, config),
        Scheme::DmocApprox => match approx {
            Some(voronoi) => engine::run_dmoc(voronoi, data, config),
            None => engine::run_dmoc(metric, data, config),
        },
    }
}

/// Worst realized weighted peak over the samples when each sample uses its
/// cluster's representative.
pub fn realized_peak(params: &PcsParams, data: &DataSet, result: &ClusteringResult) -> f64 {
    (0..data.len())
        .map(|n| params.peak(result.decision_for(n), data.sample(n)))
        .fold(0.0, f64::max)
}

/// Worst realized peak for every `M` in `1..=max_clusters` (index `M - 1`).
pub fn peak_by_clusters(
    params: &PcsParams,
    solver: &PcsSolverConfig,
    data: &DataSet,
    scheme: Scheme,
    max_clusters: usize,
    template: &EngineConfig,
) -> Result<Vec<f64>> {
    if params.norm != Norm::Infinity {
        return Err(DmocError::InvalidParameter("peak targets need p = inf".into()));
    }
    let exact = PcsMetric::new(params.clone(), solver.clone(), AssignmentRule::Exact);
    let voronoi = PcsMetric::new(params.clone(), solver.clone(), AssignmentRule::Voronoi);
    let limit = max_clusters.min(data.len());
    let peaks: Vec<Result<f64>> = (1..=limit)
        .into_par_iter()
        .map(|m| {
            let config = EngineConfig { clusters: m, ..template.clone() };
            let result = run_scheme(&exact, Some(&voronoi), data, scheme, &config)?;
            Ok(realized_peak(params, data, &result))
        })
        .collect();
    peaks.into_iter().collect()
}

/// Smallest cluster count whose worst realized peak meets `target_kw`, from
/// a precomputed [`peak_by_clusters`] curve.
pub fn first_meeting_target(peaks: &[f64], target_kw: f64) -> Option<usize> {
    peaks.iter().position(|&p| p <= target_kw).map(|i| i + 1)
}

/// Smallest `M <= max_clusters` whose worst realized peak is at most
/// `target_kw`; `None` when no such `M` exists.
pub fn clusters_for_target(
    params: &PcsParams,
    solver: &PcsSolverConfig,
    data: &DataSet,
    target_kw: f64,
    scheme: Scheme,
    max_clusters: usize,
    template: &EngineConfig,
) -> Result<Option<usize>> {
    let peaks = peak_by_clusters(params, solver, data, scheme, max_clusters, template)?;
    Ok(first_meeting_target(&peaks, target_kw))
}

/// Runs `M = 1..=max_clusters` where each run starts from the previous
/// representatives plus the optimal decision of the worst-served sample, so
/// the objective can only improve as `M` grows.
pub fn nested_sweep<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    max_clusters: usize,
    template: &EngineConfig,
) -> Result<Vec<ClusteringResult>> {
    let mut results: Vec<ClusteringResult> = Vec::new();
    for m in 1..=max_clusters.min(data.len()) {
        let init = match results.last() {
            None => template.init.clone(),
            Some(prev) => {
                let worst = (0..data.len())
                    .map(|n| (n, metric.utility(prev.decision_for(n), data.sample(n))))
                    .fold((0, f64::INFINITY), |best, (n, u)| if u < best.1 { (n, u) } else { best });
                let mut reps = prev.representatives.clone();
                reps.push(metric.best_decision(&[data.sample(worst.0)])?);
                Init::FromDecisions(reps)
            }
        };
        let config = EngineConfig { clusters: m, init, ..template.clone() };
        results.push(engine::run_dmoc(metric, data, &config)?);
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtp::{generate_rtp_scenario, RtpParams, RtpScenarioParams};

    #[test]
    fn relative_loss_convention() {
        assert_eq!(relative_loss(-100.0, -100.0).unwrap(), 0.0);
        assert!((relative_loss(-100.0, -120.0).unwrap() - 20.0).abs() < 1e-12);
        assert!((relative_loss(-100.0, -100.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(relative_loss(0.0, -1.0), Err(DmocError::ZeroReference));
    }

    #[test]
    fn histogram_cases() {
        let mut rows = vec![vec![0.0; 5]; 4];
        rows.iter_mut().for_each(|r| r[2] = 1.0);
        let h = peak_histogram(&DataSet::new(rows).unwrap());
        assert_eq!(h.p_hat, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(peak_entropy(&h), 0.0);

        let h = peak_histogram(&DataSet::new(vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0]]).unwrap());
        assert_eq!(h.p_hat, vec![0.5, 0.5, 0.0]);
        assert_eq!(peak_entropy(&h), 1.0);

        let h = peak_histogram(&DataSet::new(vec![vec![1.0; 4]]).unwrap());
        assert_eq!(h.counts, vec![1, 0, 0, 0]);
    }

    #[test]
    fn uniform_peaks_reach_max_entropy() {
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|t| (0..24).map(|s| if s == t { 5.0 } else { 1.0 }).collect())
            .collect();
        let h = peak_histogram(&DataSet::new(rows).unwrap());
        assert!((h.p_hat.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((peak_entropy(&h) - 24f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn identical_rtp_samples() {
        let metric = RtpParams::default();
        let one = generate_rtp_scenario(&RtpScenarioParams { periods: 1, seed: 3, ..Default::default() }).unwrap();
        let rows = vec![one.sample(0).to_vec(); 6];
        let data = DataSet::new(rows).unwrap();
        let single = perfect_objective(&metric, &one).unwrap();
        assert!((perfect_objective(&metric, &data).unwrap() - 6.0 * single).abs() < 1e-9);
        let result = engine::run_dmoc(&metric, &data, &EngineConfig::new(2, 0)).unwrap();
        assert!((result.objective - 6.0 * single).abs() < 1e-9);
    }

    #[test]
    fn target_lookup() {
        let peaks = [5.0, 4.5, 4.5, 4.0];
        assert_eq!(first_meeting_target(&peaks, 6.0), Some(1));
        assert_eq!(first_meeting_target(&peaks, 4.5), Some(2));
        assert_eq!(first_meeting_target(&peaks, 3.9), None);
    }
}
