//! Reference computations written from the model definitions alone, without
//! calling into the library's solvers.

#![allow(dead_code)]

/// Provider welfare for one slot: `prices` is the slot price, `gs` the
/// satisfaction parameters of every consumer in that slot.
pub fn rtp_slot_welfare(price: f64, gs: &[f64], alpha: f64, a: f64, b: f64, c: f64) -> f64 {
    let mut benefit = 0.0;
    let mut load = 0.0;
    for &g in gs {
        let l = if price > g { 0.0 } else { (g - price) / alpha };
        benefit += if l <= g / alpha { g * l - 0.5 * alpha * l * l } else { g * g / (2.0 * alpha) };
        load += l;
    }
    benefit - a * load * load - b * load - c
}

/// Welfare of price profile `x` over a stacked sample `g` (slot-major, `K`
/// consumers per slot).
pub fn rtp_f1(x: &[f64], g: &[f64], k: usize, alpha: f64, a: f64, b: f64, c: f64) -> f64 {
    x.iter()
        .enumerate()
        .map(|(t, &p)| rtp_slot_welfare(p, &g[t * k..(t + 1) * k], alpha, a, b, c))
        .sum()
}

/// Maximizer of a one-dimensional function on `[lo, hi]`: a uniform grid
/// scan followed by golden-section refinement around the best grid point.
pub fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> f64 {
    let step = (hi - lo) / cells as f64;
    let mut best = (lo, f(lo));
    for i in 1..=cells {
        let x = lo + step * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut l, mut r) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = r - ratio * (r - l);
    let mut x2 = l + ratio * (r - l);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if r - l < 1e-12 {
            break;
        }
        if f1 < f2 {
            l = x1;
            x1 = x2;
            f1 = f2;
            x2 = l + ratio * (r - l);
            f2 = f(x2);
        } else {
            r = x2;
            x2 = x1;
            f2 = f1;
            x1 = r - ratio * (r - l);
            f1 = f(x1);
        }
    }
    0.5 * (l + r)
}

/// Numeric welfare-maximizing price profile for a cluster of stacked samples.
/// Welfare separates over slots, so each slot is maximized on its own.
pub fn rtp_numeric_representative(rows: &[Vec<f64>], k: usize, t: usize, alpha: f64, a: f64, b: f64) -> Vec<f64> {
    let hi = rows.iter().flatten().cloned().fold(0.0, f64::max) + b + 1.0;
    (0..t)
        .map(|s| {
            maximize_1d(
                |p| rows.iter().map(|g| rtp_slot_welfare(p, &g[s * k..(s + 1) * k], alpha, a, b, 0.0)).sum(),
                0.0,
                hi,
                20_000,
            )
        })
        .collect()
}

pub fn weighted_peak(x: &[f64], g: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(g).zip(w).map(|((x, g), w)| w * (x + g)).fold(f64::NEG_INFINITY, f64::max)
}

pub fn weighted_p_norm(x: &[f64], g: &[f64], w: &[f64], p: f64) -> f64 {
    x.iter().zip(g).zip(w).map(|((x, g), w)| (w * (x + g)).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Sum over the cluster of the weighted peak load.
pub fn peak_cost(x: &[f64], rows: &[Vec<f64>], w: &[f64]) -> f64 {
    rows.iter().map(|g| weighted_peak(x, g, w)).sum()
}

/// Exhaustive search over a two-slot grid of step `step` for the feasible
/// schedule with the lowest summed peak.
pub fn grid_min_peak_two_slots(rows: &[Vec<f64>], w: &[f64], energy: f64, x_max: f64, step: f64) -> f64 {
    let cells = (x_max / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=cells {
        for j in 0..=cells {
            let x = [i as f64 * step, j as f64 * step];
            if x[0] + x[1] >= energy - 1e-9 {
                best = best.min(peak_cost(&x, rows, w));
            }
        }
    }
    best
}

/// Valley filling for one profile with unit weights: `x = clip(level - g, 0,
/// x_max)` with the water level found by bisection so the energy is met.
pub fn valley_fill(g: &[f64], energy: f64, x_max: f64) -> Vec<f64> {
    let fill = |level: f64| g.iter().map(|&v| (level - v).clamp(0.0, x_max)).collect::<Vec<_>>();
    let mut lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + x_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fill(mid).iter().sum::<f64>() < energy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    fill(hi)
}

/// Plain Lloyd step: nearest centroid with ties to the lowest index, then the
/// mean of each cluster accumulated in sample order. Every cluster must keep
/// at least one sample.
pub fn lloyd_reference(rows: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let labels: Vec<usize> = rows
        .iter()
        .map(|g| {
            let mut best = (0, f64::INFINITY);
            for (m, c) in centroids.iter().enumerate() {
                let d = dist(c, g);
                if d < best.1 {
                    best = (m, d);
                }
            }
            best.0
        })
        .collect();
    let dim = rows[0].len();
    let means = (0..centroids.len())
        .map(|m| {
            let mut acc = vec![0.0; dim];
            let mut count = 0usize;
            for (g, _) in rows.iter().zip(&labels).filter(|(_, &l)| l == m) {
                acc.iter_mut().zip(g).for_each(|(a, v)| *a += v);
                count += 1;
            }
            assert!(count > 0, "empty cluster in reference Lloyd step");
            acc.iter().map(|a| a / count as f64).collect()
        })
        .collect();
    (labels, means)
}

/// Shannon entropy in bits of the argmax-slot frequencies, ties to the first slot.
pub fn peak_entropy_bits(rows: &[Vec<f64>]) -> f64 {
    let t = rows[0].len();
    let mut counts = vec![0usize; t];
    for g in rows {
        let mut best = 0;
        for s in 1..t {
            if g[s] > g[best] {
                best = s;
            }
        }
        counts[best] += 1;
    }
    let n = rows.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}
