//! Randomized invariant checks for the core primitives.

use proptest::prelude::*;

use regcomp::codec::key_lemma_feasibility;
use regcomp::graph::{edge_density, Graph, VertexSet};
use regcomp::io::{graph_from_string, graph_to_string, GraphFormat};
use regcomp::metrics::{commute_time, rel_dev, ResistanceCalculator};
use regcomp::partition::{check_pair_regularity, Verdict};

/// Arbitrary small weighted graph; weights land on a 1/64 grid so text
/// round trips can be compared exactly.
fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(0u32..=64, n * (n - 1) / 2).prop_map(move |ws| {
            let mut g = Graph::empty(n);
            let mut it = ws.into_iter();
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = it.next().unwrap() as f64 / 64.0;
                    if w > 0.0 {
                        g.set_weight(i, j, w).unwrap();
                    }
                }
            }
            g
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trips_are_identities(g in graph_strategy(16)) {
        for fmt in [GraphFormat::EdgeList, GraphFormat::DenseMatrix] {
            let back = graph_from_string(&graph_to_string(&g, fmt), fmt).unwrap();
            prop_assert_eq!(&back, &g);
        }
    }

    #[test]
    fn density_is_a_probability(g in graph_strategy(14), split in 1usize..13) {
        let n = g.n();
        let cut = split.min(n - 1);
        let x: VertexSet = (0..cut).collect();
        let y: VertexSet = (cut..n).collect();
        let d = edge_density(&g, &x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(edge_density(&g, &y, &x).unwrap(), d);
    }

    #[test]
    fn irregular_verdicts_carry_sound_witnesses(
        g in graph_strategy(24),
        eps in 0.2f64..0.6,
    ) {
        let n = g.n();
        if n < 4 { return Ok(()); }
        let c = n / 2;
        let a: VertexSet = (0..c).collect();
        let b: VertexSet = (c..2 * c).collect();
        let status = check_pair_regularity(&g.binarize(0.5).unwrap(), &a, &b, eps).unwrap();
        if let Verdict::Irregular(cert) = &status.verdict {
            let gb = g.binarize(0.5).unwrap();
            let d_pair = edge_density(&gb, &a, &b).unwrap();
            let d_wit = edge_density(&gb, &cert.x, &cert.y).unwrap();
            let min_size = ((eps.powi(4) / 16.0) * c as f64).ceil().max(1.0) as usize;
            prop_assert!(cert.x.len() >= min_size && cert.y.len() >= min_size);
            prop_assert!((d_wit - d_pair).abs() >= eps.powi(4) - 1e-12);
        }
    }

    #[test]
    fn feasibility_threshold_shrinks_with_degree(
        d in 0.2f64..0.9,
        eps_frac in 0.05f64..0.9,
    ) {
        let eps = eps_frac * d * 0.99;
        let mut prev = f64::INFINITY;
        for delta_max in 1..=5u32 {
            let f = key_lemma_feasibility(d, eps, delta_max, 2, 100, 1).unwrap();
            prop_assert!(f.epsilon0 > 0.0);
            prop_assert!(f.epsilon0 < prev);
            prop_assert_eq!(f.feasible, eps <= f.epsilon0);
            prev = f.epsilon0;
        }
    }

    #[test]
    fn resistance_is_a_symmetric_positive_metric(
        g in graph_strategy(12),
        (i, j) in (0usize..12, 0usize..12),
    ) {
        let n = g.n();
        let (i, j) = (i % n, j % n);
        if i == j || !g.is_connected() { return Ok(()); }
        let calc = ResistanceCalculator::new(&g).unwrap();
        let r_ij = calc.effective_resistance(i, j).unwrap();
        let r_ji = calc.effective_resistance(j, i).unwrap();
        prop_assert!(r_ij > 0.0);
        prop_assert!((r_ij - r_ji).abs() < 1e-10);
        // triangle inequality through every third vertex
        for v in 0..n {
            if v == i || v == j { continue; }
            let via = calc.effective_resistance(i, v).unwrap()
                + calc.effective_resistance(v, j).unwrap();
            prop_assert!(r_ij <= via + 1e-10);
        }
        prop_assert!((commute_time(&g, i, j).unwrap() - g.volume() * r_ij).abs() < 1e-9);
    }

    #[test]
    fn rel_dev_ignores_uniform_scaling(
        g in graph_strategy(10),
        scale in 0.05f64..1.0,
        (i, j) in (0usize..10, 0usize..10),
    ) {
        let n = g.n();
        let (i, j) = (i % n, j % n);
        if i == j || !g.is_connected() { return Ok(()); }
        let a = rel_dev(&g, i, j).unwrap();
        let b = rel_dev(&g.scaled(scale).unwrap(), i, j).unwrap();
        prop_assert!((a - b).abs() < 1e-8);
    }
}
