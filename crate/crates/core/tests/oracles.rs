mod oracle;

use dmoc_core::baselines::lloyd_step;
use dmoc_core::engine::iterate_once;
use dmoc_core::eval::{peak_entropy, peak_histogram};
use dmoc_core::pcs::{cheapest_slot_fill, epigraph_lp_representative, f2, solve_representative};
use dmoc_core::rtp::{assign_cluster_rtp, closed_form_representative, derived_constants, f1};
use dmoc_core::{
    DataSet, DecisionMetric, DecisionVector, Norm, PcsParams, PcsSolverConfig, RtpParams, SolverMethod,
    SquaredEuclidean,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rtp(rng: &mut ChaCha8Rng) -> RtpParams {
    RtpParams {
        consumers: rng.gen_range(1..=5),
        slots: rng.gen_range(1..=4),
        alpha: rng.gen_range(0.3..1.0),
        a: rng.gen_range(0.01..0.3),
        b: rng.gen_range(0.0..0.5),
        c: rng.gen_range(0.0..10.0),
    }
}

fn rows(rng: &mut ChaCha8Rng, n: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(lo..hi)).collect()).collect()
}

#[test]
fn welfare_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let p = random_rtp(&mut rng);
        let g = &rows(&mut rng, 1, p.data_dim(), 0.0, 3.0)[0];
        let x = &rows(&mut rng, 1, p.slots, 0.0, 4.0)[0];
        let expected = oracle::rtp_f1(x, g, p.consumers, p.alpha, p.a, p.b, p.c);
        assert!((f1(x, g, &p).unwrap() - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }
}

#[test]
fn closed_form_example_matches_numeric_maximizer() {
    let p = RtpParams { consumers: 2, slots: 1, alpha: 0.5, a: 0.1, b: 0.0, c: 10.0 };
    let data = DataSet::new(vec![vec![2.0, 3.0]]).unwrap();
    let x = closed_form_representative(&data, &[0], &p).unwrap();
    assert!((x[0] - 0.25 / 0.225).abs() < 1e-12);
    let numeric = oracle::rtp_numeric_representative(&data.rows(), 2, 1, 0.5, 0.1, 0.0);
    assert!((x[0] - numeric[0]).abs() < 1e-6);
}

#[test]
fn closed_form_matches_numeric_maximizer_without_overpricing() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 20 {
        let p = random_rtp(&mut rng);
        let n = rng.gen_range(1..6);
        let data = DataSet::new(rows(&mut rng, n, p.data_dim(), 2.0, 3.0)).unwrap();
        let members: Vec<usize> = (0..n).collect();
        let x = closed_form_representative(&data, &members, &p).unwrap();
        if x.iter().any(|&v| v >= 2.0) {
            continue;
        }
        let numeric = oracle::rtp_numeric_representative(&data.rows(), p.consumers, p.slots, p.alpha, p.a, p.b);
        for (a, b) in x.iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b} for {p:?}");
        }
        checked += 1;
    }
}

#[test]
fn closed_form_beats_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = RtpParams::default();
    let data = DataSet::new(rows(&mut rng, 8, p.data_dim(), 2.0, 3.0)).unwrap();
    let members: Vec<usize> = (0..8).collect();
    let x = closed_form_representative(&data, &members, &p).unwrap();
    let total = |x: &[f64]| data.iter().map(|g| oracle::rtp_f1(x, g, p.consumers, p.alpha, p.a, p.b, p.c)).sum::<f64>();
    let best = total(&x);
    for _ in 0..100 {
        let moved: Vec<f64> = x.iter().map(|v| v + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
        assert!(best >= total(&moved));
    }
}

#[test]
fn transformed_assignment_agrees_with_direct_welfare() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let p = random_rtp(&mut rng);
        let g = &rows(&mut rng, 1, p.data_dim(), 2.0, 3.0)[0];
        let m = rng.gen_range(1..6);
        let reps: Vec<DecisionVector> = rows(&mut rng, m, p.slots, 0.0, 2.0).into_iter().map(DecisionVector::new).collect();
        let direct = (0..m)
            .map(|i| oracle::rtp_f1(&reps[i], g, p.consumers, p.alpha, p.a, p.b, p.c))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
            .0;
        assert_eq!(assign_cluster_rtp(g, &reps, &p).unwrap(), direct);
    }
}

#[test]
fn derived_constants_example() {
    let c = derived_constants(&RtpParams { consumers: 5, alpha: 0.5, a: 0.1, b: 0.0, ..Default::default() });
    assert!((c.a_tilde - 15.0).abs() < 1e-12);
    assert!((c.kappa - 0.5 / 3.75).abs() < 1e-12);
    assert_eq!(c.beta, 0.0);
}

#[test]
fn lp_matches_two_slot_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let w = vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)];
        let x_max = 2.0;
        let energy = rng.gen_range(0.5..3.5);
        let params = PcsParams::new(w.clone(), Norm::Infinity, energy, x_max).unwrap();
        let members = rows(&mut rng, 4, 2, 0.0, 3.0);
        let data = DataSet::new(members.clone()).unwrap();
        let x = epigraph_lp_representative(&data, &[0, 1, 2, 3], &params).unwrap();
        let lp = oracle::peak_cost(&x, &members, &w);
        let grid = oracle::grid_min_peak_two_slots(&members, &w, energy, x_max, 0.01);
        // A grid point within 0.01 of the optimum costs at most 0.01 * max weight more per sample.
        let slack = 4.0 * 0.01 * w[0].max(w[1]);
        assert!(lp <= grid + 1e-9 && grid <= lp + slack, "lp {lp} grid {grid}");
    }
}

#[test]
fn lp_matches_valley_filling() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let t = rng.gen_range(2..=24);
        let x_max = rng.gen_range(0.5..3.0);
        let energy = rng.gen_range(0.0..t as f64 * x_max);
        let params = PcsParams::uniform(t, Norm::Infinity, energy, x_max).unwrap();
        let g = rows(&mut rng, 1, t, 0.0, 5.0).remove(0);
        let data = DataSet::new(vec![g.clone()]).unwrap();
        let x = epigraph_lp_representative(&data, &[0], &params).unwrap();
        let filled = oracle::valley_fill(&g, energy, x_max);
        let ones = vec![1.0; t];
        let (a, b) = (oracle::weighted_peak(&x, &g, &ones), oracle::weighted_peak(&filled, &g, &ones));
        assert!((a - b).abs() < 1e-6, "lp {a} valley {b}");
    }
}

#[test]
fn lp_matches_iterative_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let iterative = PcsSolverConfig {
        method: SolverMethod::ProjectedSubgradient,
        smoothing_mu: 1.0,
        ..Default::default()
    };
    for _ in 0..10 {
        let t = rng.gen_range(2..=6);
        let w: Vec<f64> = (0..t).map(|_| rng.gen_range(0.5..2.0)).collect();
        let x_max = 2.0;
        let energy = rng.gen_range(0.5..t as f64 * x_max * 0.8);
        let params = PcsParams::new(w.clone(), Norm::Infinity, energy, x_max).unwrap();
        let n = rng.gen_range(1..8);
        let members = rows(&mut rng, n, t, 0.0, 3.0);
        let data = DataSet::new(members.clone()).unwrap();
        let all: Vec<usize> = (0..members.len()).collect();
        let lp = oracle::peak_cost(&epigraph_lp_representative(&data, &all, &params).unwrap(), &members, &w);
        let it = oracle::peak_cost(&solve_representative(&data, &all, &params, &iterative).unwrap(), &members, &w);
        assert!((lp - it).abs() <= 1e-4 * lp.abs(), "lp {lp} iterative {it}");
    }
}

#[test]
fn linear_cost_fills_cheapest_slots() {
    let params = PcsParams::new(vec![3.0, 1.0, 2.0], Norm::Finite(1.0), 4.0, 3.0).unwrap();
    assert_eq!(&cheapest_slot_fill(&params)[..], &[0.0, 3.0, 1.0]);
    let data = DataSet::new(vec![vec![1.0, 5.0, 2.0]]).unwrap();
    let x = solve_representative(&data, &[0], &params, &PcsSolverConfig::default()).unwrap();
    assert_eq!(&x[..], &[0.0, 3.0, 1.0]);
}

#[test]
fn utility_is_negated_norm() {
    let params = PcsParams::uniform(2, Norm::Infinity, 1.0, 2.0).unwrap();
    assert_eq!(f2(&[1.0, 0.0], &[2.0, 0.0], &params).unwrap(), -3.0);
    let params = PcsParams::uniform(3, Norm::Finite(2.5), 1.0, 2.0).unwrap();
    let (x, g) = ([0.5, 0.25, 0.25], [1.0, 2.0, 0.5]);
    let expected = -oracle::weighted_p_norm(&x, &g, &[1.0; 3], 2.5);
    assert!((f2(&x, &g, &params).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn lloyd_step_matches_reference_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let data_rows = rows(&mut rng, 60, 4, 0.0, 10.0);
        let data = DataSet::new(data_rows.clone()).unwrap();
        let centroids: Vec<Vec<f64>> = data_rows[..3].to_vec();
        let (labels, means) = oracle::lloyd_reference(&data_rows, &centroids);
        let (partition, updated) = lloyd_step(&data, &centroids).unwrap();
        assert_eq!(partition.assignment(), &labels[..]);
        assert_eq!(updated, means);

        let metric = SquaredEuclidean { dim: 4 };
        let reps: Vec<DecisionVector> = centroids.into_iter().map(DecisionVector::new).collect();
        let (engine_partition, engine_reps) = iterate_once(&metric, &data, &reps).unwrap();
        assert_eq!(engine_partition.assignment(), &labels[..]);
        let engine_reps: Vec<Vec<f64>> = engine_reps.into_iter().map(DecisionVector::into_inner).collect();
        assert_eq!(engine_reps, means);
        assert_eq!(metric.decision_dim(), 4);
    }
}

#[test]
fn entropy_matches_direct_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let data_rows = rows(&mut rng, 50, 6, 0.0, 1.0);
        let h = peak_histogram(&DataSet::new(data_rows.clone()).unwrap());
        assert!((peak_entropy(&h) - oracle::peak_entropy_bits(&data_rows)).abs() < 1e-12);
    }
}
