//! Power consumption scheduling: choose a controllable profile `x` that keeps
//! the weighted Lp norm of the total load `x + g` small, subject to
//! `0 <= x(t) <= x_max` and `sum_t x(t) >= E`.

mod projected;
pub(crate) mod simplex;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{DmocError, Result};
use crate::metric::{DecisionMetric, FEASIBILITY_TOL};
use crate::types::{DataSet, DecisionVector};

pub use projected::project_onto_feasible;

/// Order `p` of the norm, `1 <= p <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormRepr", into = "NormRepr")]
pub enum Norm {
    Finite(f64),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NormRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<NormRepr> for Norm {
    type Error = String;

    fn try_from(repr: NormRepr) -> std::result::Result<Self, String> {
        match repr {
            NormRepr::Number(p) if p.is_infinite() => Ok(Norm::Infinity),
            NormRepr::Number(p) => Ok(Norm::Finite(p)),
            NormRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Norm> for NormRepr {
    fn from(norm: Norm) -> Self {
        match norm {
            Norm::Finite(p) => NormRepr::Number(p),
            Norm::Infinity => NormRepr::Text("inf".into()),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "max" => Ok(Norm::Infinity),
            other => other
                .parse::<f64>()
                .map(Norm::Finite)
                .map_err(|_| format!("invalid norm order {s:?}")),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Finite(p) => write!(f, "{p}"),
            Norm::Infinity => f.write_str("inf"),
        }
    }
}

impl Norm {
    pub fn apply(self, values: &[f64]) -> f64 {
        self.apply_with(values.len(), |i| values[i])
    }

    /// Norm of the vector whose `i`-th entry is `value(i)`.
    pub fn apply_with(self, len: usize, value: impl Fn(usize) -> f64) -> f64 {
        let values = (0..len).map(|i| value(i).abs());
        match self {
            Norm::Infinity => values.fold(0.0, f64::max),
            Norm::Finite(1.0) => values.sum(),
            Norm::Finite(2.0) => values.map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Finite(p) => {
                let scale = values.clone().fold(0.0, f64::max);
                if scale == 0.0 {
                    return 0.0;
                }
                scale * values.map(|v| (v / scale).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcsParams {
    /// Diagonal of the weighting matrix `W`; its length is the slot count `T`.
    pub weights: Vec<f64>,
    pub norm: Norm,
    /// Energy need `E` in kWh.
    pub energy: f64,
    /// Per-slot power cap in kW.
    pub x_max: f64,
}

impl PcsParams {
    pub fn new(weights: Vec<f64>, norm: Norm, energy: f64, x_max: f64) -> Result<Self> {
        let params = Self { weights, norm, energy, x_max };
        params.validate()?;
        Ok(params)
    }

    /// `T` slots with unit weights.
    pub fn uniform(slots: usize, norm: Norm, energy: f64, x_max: f64) -> Result<Self> {
        Self::new(vec![1.0; slots], norm, energy, x_max)
    }

    pub fn slots(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(DmocError::InvalidParameter("at least one slot is required".into()));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(DmocError::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        if let Norm::Finite(p) = self.norm {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(DmocError::InvalidParameter(format!("norm order must be >= 1, got {p}")));
            }
        }
        if !(self.energy > 0.0 && self.energy.is_finite()) || !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(DmocError::InvalidParameter("energy and x_max must be positive".into()));
        }
        if (self.slots() as f64) * self.x_max < self.energy - FEASIBILITY_TOL {
            return Err(DmocError::Infeasible(format!(
                "{} slots at {} kW cannot deliver {} kWh",
                self.slots(),
                self.x_max,
                self.energy
            )));
        }
        Ok(())
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.slots()
            && x.iter().all(|v| v.is_finite() && *v >= -FEASIBILITY_TOL && *v <= self.x_max + FEASIBILITY_TOL)
            && x.iter().sum::<f64>() >= self.energy - FEASIBILITY_TOL
    }

    /// `||W(x + g)||_q` for an arbitrary order `q`.
    pub fn load_norm(&self, x: &[f64], g: &[f64], norm: Norm) -> f64 {
        norm.apply_with(self.slots(), |t| self.weights[t] * (x[t] + g[t]))
    }

    /// Realized weighted peak `max_t w_t (x(t) + g(t))`.
    pub fn peak(&self, x: &[f64], g: &[f64]) -> f64 {
        self.load_norm(x, g, Norm::Infinity)
    }
}

pub(crate) fn f2_unchecked(params: &PcsParams, x: &[f64], g: &[f64]) -> f64 {
    -params.load_norm(x, g, params.norm)
}

/// `f2(x; g) = -||W(x + g)||_p`.
pub fn f2(x: &[f64], g: &[f64], params: &PcsParams) -> Result<f64> {
    for len in [x.len(), g.len()] {
        if len != params.slots() {
            return Err(DmocError::DimensionMismatch { expected: params.slots(), found: len });
        }
    }
    Ok(f2_unchecked(params, x, g))
}

fn argmin_by(reps: &[DecisionVector], mut score: impl FnMut(&[f64]) -> f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (m, rep) in reps.iter().enumerate() {
        let s = score(rep);
        if s < best.1 {
            best = (m, s);
        }
    }
    best.0
}

/// Generalized Voronoi cell: representative with the smallest `||W(x_m + g)||_p`.
pub fn assign_cluster_pcs(g: &[f64], reps: &[DecisionVector], params: &PcsParams) -> usize {
    argmin_by(reps, |x| params.load_norm(x, g, params.norm))
}

/// Same rule with the norm order forced to 2, whatever `params.norm` is.
pub fn assign_cluster_approx(g: &[f64], reps: &[DecisionVector], params: &PcsParams) -> usize {
    argmin_by(reps, |x| params.load_norm(x, g, Norm::Finite(2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    EpigraphLp,
    ProjectedSubgradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcsSolverConfig {
    /// Used for `p = inf`; finite `p > 1` always goes through the iterative solver.
    pub method: SolverMethod,
    pub max_iters: usize,
    pub step_c0: f64,
    /// Absolute objective accuracy targeted by the iterative solver.
    pub objective_tol: f64,
    /// Initial log-sum-exp smoothing for `p = inf` in the iterative solver;
    /// zero selects plain subgradient steps.
    pub smoothing_mu: f64,
}

impl Default for PcsSolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::EpigraphLp,
            max_iters: 200_000,
            step_c0: 1.0,
            objective_tol: 1e-6,
            smoothing_mu: 0.0,
        }
    }
}

impl PcsSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.step_c0 > 0.0) || !(self.objective_tol > 0.0) || !(self.smoothing_mu >= 0.0) {
            return Err(DmocError::InvalidParameter(
                "solver needs max_iters >= 1, positive step and tolerance, nonnegative smoothing".into(),
            ));
        }
        Ok(())
    }
}

/// `sum_n ||W(x + g_n)||_p`, the quantity a cluster representative minimizes.
pub fn cluster_cost(x: &[f64], rows: &[&[f64]], params: &PcsParams) -> f64 {
    rows.iter().map(|g| params.load_norm(x, g, params.norm)).sum()
}

fn member_rows<'a>(data: &'a DataSet, members: &[usize], params: &PcsParams) -> Result<Vec<&'a [f64]>> {
    if data.dim() != params.slots() {
        return Err(DmocError::DimensionMismatch { expected: params.slots(), found: data.dim() });
    }
    Ok(members.iter().map(|&n| data.sample(n)).collect())
}

/// Best representative profile for the cluster `member_indices`.
pub fn solve_representative(
    data: &DataSet,
    member_indices: &[usize],
    params: &PcsParams,
    solver: &PcsSolverConfig,
) -> Result<DecisionVector> {
    let rows = member_rows(data, member_indices, params)?;
    solve_rows(&rows, params, solver)
}

pub(crate) fn solve_rows(rows: &[&[f64]], params: &PcsParams, solver: &PcsSolverConfig) -> Result<DecisionVector> {
    if rows.is_empty() {
        return Err(DmocError::EmptyCluster);
    }
    params.validate()?;
    match params.norm {
        Norm::Finite(1.0) => Ok(cheapest_slot_fill(params)),
        Norm::Infinity if solver.method == SolverMethod::EpigraphLp => epigraph_rows(rows, params),
        _ => {
            solver.validate()?;
            projected::solve(rows, params, solver).map(DecisionVector::new)
        }
    }
}

/// Linear-cost optimum: energy goes to the lowest-weight slots first (lowest
/// index on ties), each filled up to `x_max`.
pub fn cheapest_slot_fill(params: &PcsParams) -> DecisionVector {
    let mut order: Vec<usize> = (0..params.slots()).collect();
    order.sort_by(|&i, &j| {
        params.weights[i]
            .partial_cmp(&params.weights[j])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut x = vec![0.0; params.slots()];
    let mut remaining = params.energy;
    for t in order {
        if remaining <= 0.0 {
            break;
        }
        let amount = remaining.min(params.x_max);
        x[t] = amount;
        remaining -= amount;
    }
    DecisionVector::new(x)
}

/// Peak-minimizing representative (`p = inf`) from the epigraph linear program
/// `min sum_n s_n  s.t.  w_t (x(t) + g_n(t)) <= s_n`, plus the box and energy
/// constraints.
pub fn epigraph_lp_representative(
    data: &DataSet,
    member_indices: &[usize],
    params: &PcsParams,
) -> Result<DecisionVector> {
    let rows = member_rows(data, member_indices, params)?;
    if rows.is_empty() {
        return Err(DmocError::EmptyCluster);
    }
    params.validate()?;
    epigraph_rows(&rows, params)
}

/// The program is solved through its dual, whose constraint right-hand sides
/// are all nonnegative; the optimal schedule is read off the shadow prices.
///
/// Dual variables: `y[n][t]` per epigraph row, `z[t]` per cap, `mu` for energy.
/// Dual rows: `sum_t y[n][t] <= 1` (one per member), and
/// `mu - z[t] - w_t sum_n y[n][t] <= 0` (one per slot).
fn epigraph_rows(rows: &[&[f64]], params: &PcsParams) -> Result<DecisionVector> {
    if params.norm != Norm::Infinity {
        return Err(DmocError::InvalidParameter("epigraph program requires p = inf".into()));
    }
    let members = rows.len();
    let slots = params.slots();
    let vars = members * slots + slots + 1;
    let constraints = members + slots;

    let mut objective = Vec::with_capacity(vars);
    for g in rows {
        objective.extend(params.weights.iter().zip(g.iter()).map(|(w, v)| w * v));
    }
    objective.extend(std::iter::repeat_n(-params.x_max, slots));
    objective.push(params.energy);

    let mut matrix = vec![0.0; constraints * vars];
    for n in 0..members {
        let row = &mut matrix[n * vars..(n + 1) * vars];
        row[n * slots..(n + 1) * slots].iter_mut().for_each(|v| *v = 1.0);
    }
    for t in 0..slots {
        let row = &mut matrix[(members + t) * vars..(members + t + 1) * vars];
        for n in 0..members {
            row[n * slots + t] = -params.weights[t];
        }
        row[members * slots + t] = -1.0;
        row[vars - 1] = 1.0;
    }
    let mut rhs = vec![1.0; members];
    rhs.extend(std::iter::repeat_n(0.0, slots));

    let solution = simplex::Tableau::new(&objective, &matrix, &rhs)?.solve(10_000_000)?;
    let x: Vec<f64> = solution.shadow_prices[members..]
        .iter()
        .map(|v| v.clamp(0.0, params.x_max))
        .collect();
    if !params.is_feasible(&x) {
        return Err(DmocError::Solver(format!(
            "epigraph solution misses the energy need: sum {} < {}",
            x.iter().sum::<f64>(),
            params.energy
        )));
    }
    log::trace!(
        "epigraph lp: {members} members, {} pivots, optimum {}",
        solution.pivots,
        solution.objective
    );
    Ok(DecisionVector::new(x))
}

/// Per-sample optimal schedule `x*(g)`.
pub fn perfect_decision_pcs(g: &[f64], params: &PcsParams, solver: &PcsSolverConfig) -> Result<DecisionVector> {
    if g.len() != params.slots() {
        return Err(DmocError::DimensionMismatch { expected: params.slots(), found: g.len() });
    }
    solve_rows(&[g], params, solver)
}

/// Valley filling: `x(t) = clip(level - g(t), 0, x_max)` with the level set by
/// bisection so that the energy need is met. Peak-optimal for unit weights.
pub fn water_fill(g: &[f64], params: &PcsParams) -> Result<DecisionVector> {
    params.validate()?;
    if g.len() != params.slots() {
        return Err(DmocError::DimensionMismatch { expected: params.slots(), found: g.len() });
    }
    let fill = |level: f64| -> Vec<f64> { g.iter().map(|v| (level - v).clamp(0.0, params.x_max)).collect() };
    let mut lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + params.x_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fill(mid).iter().sum::<f64>() >= params.energy {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(DecisionVector::new(fill(hi)))
}

/// Scheduling metric with a configured solver and assignment rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PcsMetric {
    pub params: PcsParams,
    pub solver: PcsSolverConfig,
    pub rule: AssignmentRule,
}

/// How samples pick their representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentRule {
    /// Maximize the true utility.
    Exact,
    /// Force `p = 2` in the assignment so cells are ordinary Voronoi regions;
    /// representatives still use the true norm.
    Voronoi,
}

impl PcsMetric {
    pub fn new(params: PcsParams, solver: PcsSolverConfig, rule: AssignmentRule) -> Self {
        Self { params, solver, rule }
    }
}

impl DecisionMetric for PcsMetric {
    fn data_dim(&self) -> usize {
        self.params.slots()
    }

    fn decision_dim(&self) -> usize {
        self.params.slots()
    }

    fn utility(&self, x: &[f64], g: &[f64]) -> f64 {
        f2_unchecked(&self.params, x, g)
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        self.params.is_feasible(x)
    }

    fn assignment_score(&self, x: &[f64], g: &[f64]) -> f64 {
        match self.rule {
            AssignmentRule::Exact => self.utility(x, g),
            AssignmentRule::Voronoi => -self.params.load_norm(x, g, Norm::Finite(2.0)),
        }
    }

    fn best_decision(&self, samples: &[&[f64]]) -> Result<DecisionVector> {
        solve_rows(samples, &self.params, &self.solver)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.solver.validate()
    }
}
