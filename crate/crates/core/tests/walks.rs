mod common;

use chorale_graph::walk::{generate_walks, step_distribution, NegativeSampler, WalkConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn empirical_transitions_match_step_distribution() {
    for (p, q) in [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)] {
        let gap = common::walk_oracle(p, q, 7);
        assert!(gap < 0.02, "p={p} q={q}: gap {gap}");
    }
}

#[test]
fn star_hub_frequency_matches_closed_form() {
    // Hub 0 with five leaves; sampling for leaf 1 leaves the hub and four leaves.
    let g = common::graph(6, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0), (0, 5, 1.0)]);
    let sampler = NegativeSampler::from_graph(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = sampler.sample(1, None, 100_000, &mut rng).unwrap();
    assert!(draws.iter().all(|&n| n != 1));
    let hub = draws.iter().filter(|&&n| n == 0).count() as f64 / draws.len() as f64;
    let expect = 5f64.powf(0.75) / (5f64.powf(0.75) + 4.0);
    assert!((hub - expect).abs() / expect < 0.02, "{hub} vs {expect}");
}

#[test]
fn walk_exclusion_removes_walk_nodes() {
    let g = common::graph(6, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0), (0, 5, 1.0)]);
    let sampler = NegativeSampler::from_graph(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = sampler.sample(1, Some(&[1, 0, 2]), 1000, &mut rng).unwrap();
    assert!(draws.iter().all(|n| [3, 4, 5].contains(n)));
    assert!(sampler.sample(1, Some(&[0, 2, 3, 4, 5]), 1, &mut rng).is_err());
}

#[test]
fn walk_counts_and_determinism() {
    let g = common::two_cliques(5);
    let cfg = WalkConfig { walks_per_node: 10, walk_length: 7, ..WalkConfig::default() };
    let a = generate_walks(&g, &cfg).unwrap();
    assert_eq!(a.len(), 100);
    for (i, w) in a.walks.iter().enumerate() {
        assert_eq!(w[0], i / 10);
        assert_eq!(w.len(), 7);
        assert!(w.windows(2).all(|s| g.has_edge(s[0], s[1])));
    }
    assert_eq!(a, generate_walks(&g, &cfg).unwrap());
    assert_ne!(a, generate_walks(&g, &WalkConfig { seed: 1, ..cfg }).unwrap());
}

/// A random connected graph: a spanning path plus extra edges.
fn arb_graph() -> impl Strategy<Value = chorale_graph::graph::ChoraleGraph> {
    (3usize..10).prop_flat_map(|n| {
        let path = prop::collection::vec(0.1f64..5.0, n - 1);
        let extra = prop::collection::vec((0..n, 0..n, 0.1f64..5.0), 0..3 * n);
        (Just(n), path, extra).prop_map(|(n, path, extra)| {
            let mut edges: Vec<(usize, usize, f64)> =
                path.into_iter().enumerate().map(|(i, w)| (i, i + 1, w)).collect();
            for (u, v, w) in extra {
                let (u, v) = (u.min(v), u.max(v));
                if u != v && !edges.iter().any(|e| e.0 == u && e.1 == v) {
                    edges.push((u, v, w));
                }
            }
            common::graph(n, &edges)
        })
    })
}

proptest! {
    #[test]
    fn step_distribution_is_a_probability_vector(
        g in arb_graph(), pick in 0usize..1000, p in 0.1f64..4.0, q in 0.1f64..4.0,
    ) {
        let e = g.edges()[pick % g.edge_count()];
        for (prev, cur) in [(e.u, e.v), (e.v, e.u)] {
            let d = step_distribution(&g, prev, cur, p, q).unwrap();
            prop_assert_eq!(d.len(), g.degree(cur));
            prop_assert!(d.iter().all(|&(_, x)| x >= 0.0));
            prop_assert!((d.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn low_p_raises_common_neighbour_mass(
        g in arb_graph(), pick in 0usize..1000, p in 0.05f64..0.95, q in 0.1f64..4.0,
    ) {
        let e = g.edges()[pick % g.edge_count()];
        for (prev, cur) in [(e.u, e.v), (e.v, e.u)] {
            let mass = |p: f64| -> f64 {
                step_distribution(&g, prev, cur, p, q)
                    .unwrap()
                    .into_iter()
                    .filter(|&(w, _)| w != prev && g.has_edge(prev, w))
                    .map(|(_, x)| x)
                    .sum()
            };
            let common = g.neighbors(cur).iter().any(|&(w, _)| w != prev && g.has_edge(prev, w));
            if common {
                prop_assert!(mass(p) > mass(1.0));
            } else {
                prop_assert_eq!(mass(p), 0.0);
            }
        }
    }
}
