//! Property tests for the structural invariants of the toolkit.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqcomm::detect::{k_hat, p_value, step_function, DetectionTrace, Stage};
use seqcomm::graph::{
    bisection_modularity, generalized_modularity_matrix, modularity_matrix, partition_modularity,
};
use seqcomm::ingest::{threshold_correlation, CorrelationMatrix};
use seqcomm::{alpha, sbm, AdjacencyMatrix, Partition};

/// Deterministic random graph from a seed; edge probability 0.4, at least
/// one edge guaranteed by wiring vertex 0 to vertex 1 when empty.
fn random_graph(n: usize, seed: u64) -> AdjacencyMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < 0.4 {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    AdjacencyMatrix::from_edges(n, &edges).unwrap()
}

/// Synthetic detection trace with the given per-stage p-values.
fn trace_from_p(p: &[f64], last_indivisible: bool) -> DetectionTrace {
    let stages: Vec<Stage> = p
        .iter()
        .enumerate()
        .map(|(i, &pv)| Stage {
            community_count: i + 1,
            partition: Partition::single(4),
            observed_gain: 0.0,
            null_samples: vec![0.0],
            p_value: pv,
            indivisible: last_indivisible && i + 1 == p.len(),
        })
        .collect();
    DetectionTrace {
        n: 4,
        k_max: p.len(),
        stages,
    }
}

/// Strategy for a plausible p-value sequence: values in (0, 1], with the
/// trailing stage optionally forced to the sentinel value 1.
fn p_sequence() -> impl Strategy<Value = (Vec<f64>, bool)> {
    (
        prop::collection::vec(
            // Quantize to a B=40 bootstrap grid so exact ties between
            // stages (the interesting step-function case) actually occur.
            (1u32..=41).prop_map(|k| k as f64 / 41.0),
            1..8,
        ),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(mut p, sentinel, indivisible)| {
            if sentinel {
                p.push(1.0);
            }
            (p, indivisible && sentinel)
        })
}

proptest! {
    #[test]
    fn modularity_matrix_rows_sum_to_zero(n in 2usize..30, seed in 0u64..1000) {
        let a = random_graph(n, seed);
        let b = modularity_matrix(&a).unwrap();
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| b.values()[(i, j)]).sum();
            prop_assert!(row_sum.abs() <= 1e-10, "row {i} sums to {row_sum}");
            for j in 0..n {
                prop_assert_eq!(b.values()[(i, j)], b.values()[(j, i)]);
            }
        }
    }

    #[test]
    fn generalized_matrix_rows_sum_to_zero(n in 4usize..20, seed in 0u64..500) {
        let a = random_graph(n, seed);
        let b = modularity_matrix(&a).unwrap();
        let members: Vec<usize> = (0..n / 2).collect();
        let bj = generalized_modularity_matrix(&b, &members).unwrap();
        for i in 0..members.len() {
            let row_sum: f64 = (0..members.len()).map(|j| bj.values()[(i, j)]).sum();
            prop_assert!(row_sum.abs() <= 1e-10);
        }
    }

    #[test]
    fn trivial_bisection_has_zero_modularity(n in 2usize..25, seed in 0u64..500) {
        let a = random_graph(n, seed);
        let b = modularity_matrix(&a).unwrap();
        let q = bisection_modularity(&b, &vec![1i8; n]).unwrap();
        prop_assert!(q.abs() <= 1e-12);
    }

    #[test]
    fn bisection_modularity_is_sign_symmetric(n in 2usize..25, seed in 0u64..500, mask in any::<u32>()) {
        let a = random_graph(n, seed);
        let b = modularity_matrix(&a).unwrap();
        let signs: Vec<i8> = (0..n).map(|i| if mask >> (i % 32) & 1 == 1 { 1 } else { -1 }).collect();
        let flipped: Vec<i8> = signs.iter().map(|&s| -s).collect();
        let q1 = bisection_modularity(&b, &signs).unwrap();
        let q2 = bisection_modularity(&b, &flipped).unwrap();
        prop_assert!((q1 - q2).abs() <= 1e-12);
    }

    #[test]
    fn two_part_partition_matches_bisection(n in 2usize..25, seed in 0u64..500, mask in any::<u32>()) {
        let a = random_graph(n, seed);
        let b = modularity_matrix(&a).unwrap();
        let signs: Vec<i8> = (0..n).map(|i| if mask >> (i % 32) & 1 == 1 { 1 } else { -1 }).collect();
        prop_assume!(signs.contains(&1) && signs.contains(&-1));
        let q_bis = bisection_modularity(&b, &signs).unwrap();
        let part = Partition::single(n).split(1, &signs).unwrap();
        let q_part = partition_modularity(&a, &part).unwrap();
        prop_assert!((q_bis - q_part).abs() <= 1e-10, "{q_bis} vs {q_part}");
    }

    #[test]
    fn k_hat_is_non_decreasing_and_matches_step_function((p, indivisible) in p_sequence()) {
        let trace = trace_from_p(&p, indivisible);
        let sf = step_function(&trace);
        let mut grid: Vec<f64> = sf.breakpoints.clone();
        grid.extend([0.0, 1e-9, 0.25, 0.5, 0.999]);
        for &bp in &sf.breakpoints {
            grid.push((bp - 1e-9).max(0.0));
            grid.push(bp + 1e-9);
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev = 0usize;
        for &alpha in grid.iter().filter(|a| **a < 1.0) {
            let k = k_hat(&trace, alpha);
            prop_assert_eq!(sf.value_at(alpha), k, "alpha {}", alpha);
            prop_assert!(k >= prev, "K-hat decreased at alpha {}", alpha);
            prev = k;
        }
    }

    #[test]
    fn step_function_pieces_tile_the_unit_interval((p, indivisible) in p_sequence()) {
        let trace = trace_from_p(&p, indivisible);
        let sf = step_function(&trace);
        let mut cursor = 0.0;
        for piece in &sf.pieces {
            prop_assert!((piece.lo - cursor).abs() <= 1e-15);
            prop_assert!(piece.hi > piece.lo);
            cursor = piece.hi;
        }
        prop_assert!((cursor - 1.0).abs() <= 1e-15);
        // K* belongs to a longest piece.
        let longest = sf.pieces.iter().map(|p| p.hi - p.lo).fold(0.0, f64::max);
        let star_len = sf
            .pieces
            .iter()
            .filter(|p| p.k == sf.k_star)
            .map(|p| p.hi - p.lo)
            .fold(0.0, f64::max);
        prop_assert!(star_len >= longest - 1e-12);
    }

    #[test]
    fn gamma_curve_is_non_increasing_where_finite(
        seqs in prop::collection::vec(p_sequence(), 5..40),
        k_ref in 1usize..5,
    ) {
        let traces: Vec<DetectionTrace> =
            seqs.into_iter().map(|(p, ind)| trace_from_p(&p, ind)).collect();
        let curve = alpha::gamma_curve(&traces, k_ref);
        let mut prev = f64::INFINITY;
        for piece in &curve.pieces {
            let rep = piece.representative();
            let direct = alpha::gamma_hat(&traces, k_ref, rep);
            if piece.gamma.is_finite() {
                prop_assert!((piece.gamma - direct).abs() <= 1e-12);
                prop_assert!(piece.gamma <= prev + 1e-12,
                    "gamma increased from {} to {}", prev, piece.gamma);
                prev = piece.gamma;
            } else {
                prop_assert!(direct.is_infinite());
            }
            prop_assert_eq!(curve.value_at(rep).is_finite(), piece.gamma.is_finite());
        }
    }

    #[test]
    fn p_value_bounds_and_monotonicity(
        nulls in prop::collection::vec(-1.0f64..1.0, 1..60),
        obs in -1.0f64..1.0,
    ) {
        let p = p_value(obs, &nulls);
        let b = nulls.len() as f64;
        prop_assert!(p >= 1.0 / (b + 1.0) - 1e-15);
        prop_assert!(p <= 1.0 + 1e-15);
        // A larger observed statistic can only shrink the p-value.
        let p_hi = p_value(obs + 0.5, &nulls);
        prop_assert!(p_hi <= p + 1e-15);
    }

    #[test]
    fn sbm_generation_is_simple_and_deterministic(seed in 0u64..200) {
        let params = sbm::planted_params(3, 18, 0.2).unwrap();
        let (a, part) = sbm::generate(&params, seed);
        prop_assert_eq!(a.n(), 18);
        prop_assert_eq!(part.k(), 3);
        for u in 0..18 {
            prop_assert!(!a.has_edge(u, u));
            for v in 0..18 {
                prop_assert_eq!(a.has_edge(u, v), a.has_edge(v, u));
            }
        }
        let (b, _) = sbm::generate(&params, seed);
        prop_assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn correlation_threshold_is_monotone_in_tau(
        seed in 0u64..300,
        tau_lo in 0.05f64..0.9,
        delta in 0.01f64..0.5,
    ) {
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Correlation matrix of random unit vectors: symmetric, unit
        // diagonal, entries in [-1, 1] by Cauchy-Schwarz.
        let cols: Vec<DVector<f64>> = (0..n)
            .map(|_| {
                let v = DVector::from_fn(4, |_, _| rng.random::<f64>() - 0.5);
                &v / v.norm()
            })
            .collect();
        let c = DMatrix::from_fn(n, n, |i, j| cols[i].dot(&cols[j]).clamp(-1.0, 1.0));
        let c = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { (c[(i, j)] + c[(j, i)]) / 2.0 });
        let corr = CorrelationMatrix::new(c).unwrap();
        let tau_hi = (tau_lo + delta).min(1.0);
        let a_lo = threshold_correlation(&corr, tau_lo);
        let a_hi = threshold_correlation(&corr, tau_hi);
        for (u, v) in a_hi.edges() {
            prop_assert!(a_lo.has_edge(u, v), "edge ({u},{v}) lost at smaller tau");
        }
        prop_assert!(a_hi.edge_count() <= a_lo.edge_count());
    }
}
