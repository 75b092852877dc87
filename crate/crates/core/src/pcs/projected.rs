//! Iterative solver for the representative program when no exact method
//! applies: accelerated projected gradient on the (possibly smoothed)
//! objective, or plain projected subgradient steps `c0 / sqrt(k)`.

use super::{Norm, PcsParams, PcsSolverConfig};
use crate::error::{DmocError, Result};

/// Euclidean projection onto `{0 <= x <= x_max, sum x >= energy}`.
///
/// When clipping to the box already meets the energy need that is the
/// answer; otherwise every coordinate is shifted by the unique `lambda > 0`
/// with `sum clip(y + lambda) = energy`.
pub fn project_onto_feasible(y: &[f64], x_max: f64, energy: f64) -> Vec<f64> {
    let clip = |lambda: f64| -> Vec<f64> { y.iter().map(|v| (v + lambda).clamp(0.0, x_max)).collect() };
    let clipped = clip(0.0);
    if clipped.iter().sum::<f64>() >= energy {
        return clipped;
    }
    let mut lo = 0.0;
    let mut hi = x_max - y.iter().cloned().fold(f64::INFINITY, f64::min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if clip(mid).iter().sum::<f64>() >= energy {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Solve exactly on the free set identified by bisection.
    let lambda = hi;
    let mut fixed = 0.0;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for v in y {
        let shifted = v + lambda;
        if shifted >= x_max {
            fixed += x_max;
        } else if shifted > 0.0 {
            free_sum += v;
            free += 1;
        }
    }
    if free > 0 {
        let exact = (energy - fixed - free_sum) / free as f64;
        let candidate = clip(exact);
        if exact > 0.0 && candidate.iter().sum::<f64>() >= energy - 1e-12 {
            return candidate;
        }
    }
    clip(lambda)
}

struct Objective<'a> {
    rows: &'a [&'a [f64]],
    params: &'a PcsParams,
}

impl Objective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        super::cluster_cost(x, self.rows, self.params)
    }

    /// Smoothed value and gradient. For finite `p` the norm is differentiable
    /// wherever the load is nonzero; for `p = inf` the max is replaced by a
    /// log-sum-exp at temperature `mu`.
    fn smooth(&self, x: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let w = &self.params.weights;
        let slots = x.len();
        let mut load = vec![0.0; slots];
        let mut total = 0.0;
        for g in self.rows {
            for t in 0..slots {
                load[t] = w[t] * (x[t] + g[t]);
            }
            match self.params.norm {
                Norm::Finite(p) => {
                    let norm = Norm::Finite(p).apply(&load);
                    total += norm;
                    if norm > 0.0 {
                        for t in 0..slots {
                            grad[t] += w[t] * (load[t] / norm).powf(p - 1.0);
                        }
                    }
                }
                Norm::Infinity => {
                    let peak = load.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut z = 0.0;
                    for v in load.iter_mut() {
                        *v = ((*v - peak) / mu).exp();
                        z += *v;
                    }
                    total += peak + mu * z.ln();
                    for t in 0..slots {
                        grad[t] += w[t] * load[t] / z;
                    }
                }
            }
        }
        total
    }

    /// Adds `scale` times the softmax peak weighting at `x` to `cost` (per
    /// slot) and returns the matching constant term.
    fn dual_terms(&self, x: &[f64], mu: f64, scale: f64, cost: &mut [f64]) -> f64 {
        let w = &self.params.weights;
        let slots = x.len();
        let mut weight = vec![0.0; slots];
        let mut base = 0.0;
        for g in self.rows {
            let peak = (0..slots).map(|t| w[t] * (x[t] + g[t])).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for t in 0..slots {
                weight[t] = ((w[t] * (x[t] + g[t]) - peak) / mu).exp();
                z += weight[t];
            }
            for t in 0..slots {
                let y = scale * weight[t] / z;
                cost[t] += y * w[t];
                base += y * w[t] * g[t];
            }
        }
        base
    }

    fn subgradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let w = &self.params.weights;
        for g in self.rows {
            let mut best = (0, f64::NEG_INFINITY);
            for t in 0..x.len() {
                let v = w[t] * (x[t] + g[t]);
                if v > best.1 {
                    best = (t, v);
                }
            }
            grad[best.0] += w[best.0];
        }
    }
}

fn dot_diff(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((g, u), v)| g * (u - v)).sum()
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

pub(crate) fn solve(rows: &[&[f64]], params: &PcsParams, cfg: &PcsSolverConfig) -> Result<Vec<f64>> {
    let slots = params.slots();
    let start = project_onto_feasible(&vec![params.energy / slots as f64; slots], params.x_max, params.energy);
    let objective = Objective { rows, params };
    let tol = cfg.objective_tol;
    match params.norm {
        Norm::Infinity if cfg.smoothing_mu == 0.0 => Ok(subgradient(&objective, start, cfg)),
        Norm::Infinity => {
            let log_slots = (slots as f64).ln();
            let smoothing_error = |mu: f64| rows.len() as f64 * mu * log_slots;
            let final_mu = if log_slots > 0.0 { tol / (2.0 * rows.len() as f64 * log_slots) } else { cfg.smoothing_mu };
            let mut mu = cfg.smoothing_mu.max(final_mu);
            let mut x = start;
            let mut budget = cfg.max_iters;
            let mut bound = DualBound::new(slots);
            loop {
                let last = mu <= final_mu;
                let level_tol = if last { tol / 2.0 } else { smoothing_error(mu) };
                let (next, used, outcome) = accelerated(&objective, x, mu, level_tol, Some((&mut bound, tol)), budget);
                x = next;
                budget -= used;
                match outcome {
                    Outcome::Certified => return Ok(x),
                    Outcome::Stationary if last => return Ok(x),
                    Outcome::Stationary => {}
                    Outcome::OutOfBudget => return Err(out_of_budget(cfg.max_iters)),
                }
                mu = (mu / 4.0).max(final_mu);
            }
        }
        Norm::Finite(_) => match accelerated(&objective, start, 0.0, tol, None, cfg.max_iters) {
            (x, _, Outcome::Stationary | Outcome::Certified) => Ok(x),
            (_, _, Outcome::OutOfBudget) => Err(out_of_budget(cfg.max_iters)),
        },
    }
}

fn out_of_budget(budget: usize) -> DmocError {
    DmocError::Solver(format!("projected gradient did not reach its accuracy target within {budget} iterations"))
}

fn subgradient(objective: &Objective<'_>, mut x: Vec<f64>, cfg: &PcsSolverConfig) -> Vec<f64> {
    let params = objective.params;
    let mut grad = vec![0.0; x.len()];
    let mut best_value = objective.value(&x);
    let mut best = x.clone();
    for k in 1..=cfg.max_iters {
        objective.subgradient(&x, &mut grad);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = cfg.step_c0 / (k as f64).sqrt() / norm;
        let moved: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
        x = project_onto_feasible(&moved, params.x_max, params.energy);
        let value = objective.value(&x);
        if value < best_value {
            best_value = value;
            best.clone_from(&x);
        }
    }
    best
}

/// Lower bound on the peak objective. Any convex weighting `y_n` of each
/// sample's slot loads is dominated by its peak, so for fixed weights the
/// linear minimum over the feasible set bounds the optimum from below. The
/// weights are softmax peak weights averaged over the iterates.
struct DualBound {
    cost: Vec<f64>,
    base: f64,
    mass: f64,
    best: f64,
}

impl DualBound {
    fn new(slots: usize) -> Self {
        Self { cost: vec![0.0; slots], base: 0.0, mass: 0.0, best: f64::NEG_INFINITY }
    }

    fn add(&mut self, objective: &Objective<'_>, x: &[f64], mu: f64, scale: f64) {
        self.base += objective.dual_terms(x, mu, scale, &mut self.cost);
        self.mass += scale;
    }

    fn lower(&mut self, objective: &Objective<'_>, x: &[f64], mu: f64) -> f64 {
        let params = objective.params;
        let mut cost = vec![0.0; x.len()];
        let base = objective.dual_terms(x, mu, 1.0, &mut cost);
        let current = base + cheapest_linear(&cost, params.x_max, params.energy);
        let averaged: Vec<f64> = self.cost.iter().map(|c| c / self.mass).collect();
        let averaged = self.base / self.mass + cheapest_linear(&averaged, params.x_max, params.energy);
        self.best = self.best.max(current).max(averaged);
        self.best
    }
}

enum Outcome {
    /// The gradient mapping times the box diameter fell below the level tolerance.
    Stationary,
    /// The duality gap fell below the objective tolerance.
    Certified,
    OutOfBudget,
}

/// FISTA with backtracking and function-value restarts on the objective
/// smoothed at `mu`. Stops once the gradient mapping bounds the smoothed gap
/// by `stationarity_tol`, or, when a dual bound is given (peak objective),
/// once the gap to that bound is below its tolerance.
fn accelerated(
    objective: &Objective<'_>,
    start: Vec<f64>,
    mu: f64,
    stationarity_tol: f64,
    mut gap: Option<(&mut DualBound, f64)>,
    budget: usize,
) -> (Vec<f64>, usize, Outcome) {
    let params = objective.params;
    let slots = start.len();
    let diameter = params.x_max * (slots as f64).sqrt();
    let mut x = start;
    let mut y = x.clone();
    let mut grad = vec![0.0; slots];
    let mut scratch = vec![0.0; slots];
    let mut fx = objective.smooth(&x, mu, &mut scratch);
    let mut lipschitz = 1.0;
    let mut momentum = 1.0f64;

    for k in 0..budget {
        let fy = objective.smooth(&y, mu, &mut grad);
        let (z, fz) = loop {
            let moved: Vec<f64> = y.iter().zip(&grad).map(|(v, g)| v - g / lipschitz).collect();
            let z = project_onto_feasible(&moved, params.x_max, params.energy);
            let fz = objective.smooth(&z, mu, &mut scratch);
            let model = fy + dot_diff(&grad, &z, &y) + 0.5 * lipschitz * dist_sq(&z, &y);
            if fz <= model + 1e-12 * fy.abs().max(1.0) || lipschitz > 1e15 {
                break (z, fz);
            }
            lipschitz *= 2.0;
        };
        let stationary = lipschitz * dist_sq(&y, &z).sqrt() * diameter <= stationarity_tol;
        if let Some((bound, tol)) = gap.as_mut() {
            bound.add(objective, &z, mu, (k + 1) as f64);
            if (stationary || k % 8 == 0) && objective.value(&z) - bound.lower(objective, &z, mu) <= *tol {
                return (z, k + 1, Outcome::Certified);
            }
        }
        if stationary {
            return (z, k + 1, Outcome::Stationary);
        }
        if fz > fx && momentum > 1.0 {
            // restart momentum from the last accepted point
            momentum = 1.0;
            y.clone_from(&x);
            continue;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next;
        y = z.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = z;
        fx = fz;
        momentum = next;
        lipschitz *= 0.95;
    }
    (x, budget, Outcome::OutOfBudget)
}

/// Minimum of `cost . x` over the feasible set for `cost >= 0`: the energy
/// goes to the cheapest slots first, each up to `x_max`.
fn cheapest_linear(cost: &[f64], x_max: f64, energy: f64) -> f64 {
    let mut order: Vec<usize> = (0..cost.len()).collect();
    order.sort_by(|&i, &j| cost[i].total_cmp(&cost[j]));
    let mut remaining = energy;
    let mut total = 0.0;
    for t in order {
        if remaining <= 0.0 {
            break;
        }
        let amount = remaining.min(x_max);
        total += cost[t] * amount;
        remaining -= amount;
    }
    total
}
