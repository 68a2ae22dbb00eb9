use dyndfs::apps::AppState;
use dyndfs::bench::gen::{gen_pseudo_root, gen_random_stream, random_graph, random_updates};
use dyndfs::bench::io::{parse_graph, parse_stream, write_graph, write_stream, StreamOp};
use dyndfs::bench::{run_stream, RunOptions};
use dyndfs::graph::normalize_batch;
use dyndfs::oracle::{
    brute_articulation_bridges, brute_biconnected, brute_high, brute_query, brute_two_edge, component_count,
    verify_dfs_tree, Source,
};
use dyndfs::partition::{validate_partition, Partition};
use dyndfs::rebuild::{apply_single_update, rebuild_batch, RebuildOptions};
use dyndfs::{build_tree, Config, Graph, Maintainer, QueryStructure, Schedule, VisitOrder, ROOT};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(n: usize, density: usize, seed: u64) -> (Graph, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(n, density * n / 2, &mut rng);
    (g, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn batch_rebuild_is_a_dfs_tree(n in 2usize..40, density in 0usize..6, k in 1usize..8, seed: u64) {
        let (g, mut rng) = instance(n, density, seed);
        let raw = random_updates(&g, k.min(n), &mut rng);
        let batch = normalize_batch(&g, &raw).unwrap();
        let mut d = QueryStructure::build(&g, build_tree(&g, VisitOrder::Ascending));
        let (t, trace) = rebuild_batch(&g, &mut d, &batch, RebuildOptions { audit: true }).unwrap();
        let mut after = g.clone();
        for u in &raw {
            after.apply_update(u).unwrap();
        }
        prop_assert!(verify_dfs_tree(&after, &t).is_valid());
        prop_assert_eq!(t.children(ROOT).len(), component_count(&after));
        prop_assert!(trace.max_paths <= trace.initial_paths);
    }

    #[test]
    fn normalized_batch_matches_sequential_replay(n in 1usize..30, density in 0usize..6, k in 1usize..12, seed: u64) {
        let (g, mut rng) = instance(n, density, seed);
        let raw = random_updates(&g, k, &mut rng);
        let batch = normalize_batch(&g, &raw).unwrap();
        prop_assert!(batch.len() <= raw.len());
        let (mut a, mut b) = (g.clone(), g.clone());
        for u in &raw {
            a.apply_update(u).unwrap();
        }
        b.apply_batch(&batch).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn partition_is_well_formed(n in 2usize..40, density in 0usize..6, k in 1usize..8, seed: u64) {
        let (g, mut rng) = instance(n, density, seed);
        let raw = random_updates(&g, k.min(n), &mut rng);
        let batch = normalize_batch(&g, &raw).unwrap();
        let t = build_tree(&g, VisitOrder::Ascending);
        let part = Partition::build(&t, &batch).unwrap();
        prop_assert!(validate_partition(&g, &t, &batch, &part).is_ok());
        prop_assert!(part.path_count() <= batch.len());
    }

    #[test]
    fn single_update_is_a_dfs_tree(n in 2usize..40, density in 0usize..6, seed: u64) {
        let (g, mut rng) = instance(n, density, seed);
        let upd = random_updates(&g, 1, &mut rng).remove(0);
        let mut d = QueryStructure::build(&g, build_tree(&g, VisitOrder::Ascending));
        let (t, _) = apply_single_update(&g, &mut d, &upd).unwrap();
        let mut after = g.clone();
        after.apply_update(&upd).unwrap();
        prop_assert!(verify_dfs_tree(&after, &t).is_valid());
    }

    #[test]
    fn queries_match_brute_force(n in 2usize..40, density in 1usize..6, cuts in 0usize..10, seed: u64) {
        let (mut g, mut rng) = instance(n, density, seed);
        let t = build_tree(&g, VisitOrder::Ascending);
        let mut d = QueryStructure::build(&g, t.clone());
        for _ in 0..cuts {
            let edges: Vec<_> = g.edge_pairs().into_iter().collect();
            if edges.is_empty() {
                break;
            }
            let (a, b) = edges[rng.gen_range(0..edges.len())];
            g.remove_edge(a, b).unwrap();
            d.delete_edge(a, b).unwrap();
        }
        for y in 1..=n {
            let mut x = y;
            while rng.gen_bool(0.6) && t.parent(x) != Some(ROOT) {
                x = t.parent(x).unwrap();
            }
            let w = rng.gen_range(1..=n);
            if !t.is_ancestor(w, y) {
                let got = d.query_subtree(w, x, y).unwrap();
                let want = brute_query(&g, &t, Source::Subtree(w), x, y);
                prop_assert_eq!(got.is_some(), want.is_some());
                if let (Some(h), Some(e)) = (got, want) {
                    prop_assert_eq!(t.depth(h.on_path).abs_diff(t.depth(x)), e.dist);
                    prop_assert!(t.is_ancestor(w, h.source) && g.has_edge(h.source, h.on_path));
                }
            }
            if !(t.is_ancestor(x, w) && t.is_ancestor(w, y)) {
                let got = d.query_vertex(w, x, y).unwrap();
                let want = brute_query(&g, &t, Source::Vertex(w), x, y);
                prop_assert_eq!(got.map(|h| t.depth(h.on_path).abs_diff(t.depth(x))), want.map(|e| e.dist));
            }
        }
    }

    #[test]
    fn maintainer_trees_stay_valid(
        n in 2usize..30,
        density in 0usize..6,
        len in 1usize..40,
        c0 in proptest::option::of(1usize..6),
        amortized: bool,
        seed: u64,
    ) {
        let (g, mut rng) = instance(n, density, seed);
        let ups = random_updates(&g, len, &mut rng);
        let schedule = if amortized { Schedule::Amortized } else { Schedule::Deamortized };
        let mut mt = Maintainer::new(g, Config { c0, schedule, ..Config::default() }).unwrap();
        for u in ups {
            mt.update(u).unwrap();
            prop_assert!(verify_dfs_tree(mt.graph(), mt.tree()).is_valid());
            if let Some(c) = c0 {
                prop_assert!(mt.pending_len() <= 2 * c);
            }
        }
    }

    #[test]
    fn apps_match_brute_force(n in 2usize..16, density in 0usize..6, k in 0usize..5, seed: u64) {
        let (g, mut rng) = instance(n, density, seed);
        let raw = random_updates(&g, k.min(n), &mut rng);
        let batch = normalize_batch(&g, &raw).unwrap();
        let mut d = QueryStructure::build(&g, build_tree(&g, VisitOrder::Ascending));
        let (t, trace) = rebuild_batch(&g, &mut d, &batch, RebuildOptions::default()).unwrap();
        let apps = AppState::compute(&t, &trace, &d, &batch).unwrap();
        let mut after = g.clone();
        after.apply_batch(&batch).unwrap();
        let high = brute_high(&after, &t);
        let (arts, bridges) = brute_articulation_bridges(&after);
        prop_assert_eq!(apps.bridges(), &bridges);
        prop_assert_eq!(apps.cuts.articulation_points(), arts);
        let verts: Vec<_> = after.vertices().collect();
        for &x in &verts {
            prop_assert_eq!(apps.high.high[x], high[x]);
            for &y in &verts {
                prop_assert_eq!(apps.query_biconnected(x, y).unwrap(), brute_biconnected(&after, x, y));
                prop_assert_eq!(apps.query_2edge(x, y).unwrap(), brute_two_edge(&after, x, y));
            }
        }
    }

    #[test]
    fn pseudo_root_children_count_components(n in 0usize..30, density in 0usize..4, seed: u64) {
        let (g, _) = instance(n, density, seed);
        let (h, p) = gen_pseudo_root(&g);
        let t = build_tree(&h, VisitOrder::StartAt(p));
        prop_assert_eq!(t.children(p).len(), component_count(&g));
    }

    #[test]
    fn formats_round_trip(n in 1usize..30, density in 0usize..6, len in 0usize..60, seed: u64) {
        let m = (density * n / 2).min(n * (n - 1) / 2);
        let (g, ops) = gen_random_stream(n, m, len, &[0.3, 0.3, 0.1, 0.1, 0.2], seed).unwrap();
        prop_assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g.clone());
        let text = write_stream(&ops);
        prop_assert_eq!(parse_stream(&text).unwrap(), ops.clone());
        let out = run_stream(&g, &ops, RunOptions { audit: true, ..Default::default() });
        prop_assert!(out.is_ok(), "{:?}", out.err());
        let out = out.unwrap();
        prop_assert_eq!(out.rows.len(), ops.iter().filter(|o| matches!(o, StreamOp::Update(_))).count());
        prop_assert!(out.rows.iter().all(|r| r.tree_valid));
    }
}
