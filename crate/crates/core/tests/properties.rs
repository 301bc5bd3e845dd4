mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{build, decl, edge_types, random_graph};
use graphfeat::features::{extract_all_features, GeneratorRegistry, LabeledPair};
use graphfeat::graph::{EdgeLabelValue, FoldMaskedGraph, GraphBuilder, HeteroGraph, VertexId, VertexIdx};
use graphfeat::metrics::{MetricEngine, MetricValue, PageRankParams};
use graphfeat::pipeline::{make_folds, Instance};
use graphfeat::scheme::{generate_edge_combinations, remove_edges};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vertex_metrics(g: &HeteroGraph, v: VertexIdx) -> Vec<MetricValue> {
    let engine = MetricEngine::new(&g.view(), PageRankParams::default());
    let mut out = vec![
        engine.degree(v).unwrap(),
        engine.avg_neighbor_degree(v).unwrap(),
        engine.pagerank_of(v).unwrap(),
        engine.clustering_coefficient(v).unwrap(),
    ];
    if engine.is_bipartite() {
        out.push(engine.node_redundancy(v).unwrap());
    }
    out
}

fn near(a: &[MetricValue], b: &[MetricValue]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| common::close(*x, *y, 1e-12))
}

fn all_schemes(g: &HeteroGraph) -> Vec<graphfeat::scheme::SchemeMask> {
    let names: Vec<&str> = g.edge_types().iter().map(|t| t.name.as_str()).collect();
    generate_edge_combinations(&names, common::PREDICTED).unwrap()
}

fn circulant(n: usize, offsets: &[usize]) -> HeteroGraph {
    let mut b = GraphBuilder::new(vec![decl("friends", "user", "user")], None).unwrap();
    for i in 0..n {
        for &o in offsets {
            let j = (i + o) % n;
            b.add_edge(
                VertexId::new("user", i.to_string()),
                VertexId::new("user", j.to_string()),
                "friends",
                EdgeLabelValue::None,
            )
            .unwrap();
        }
    }
    b.build()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_ignore_vertex_names(seed in any::<u64>(), bip in any::<bool>()) {
        let rg = random_graph(seed, 12, bip);
        let mut perm: Vec<usize> = (0..rg.vertices.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let renamed: Vec<VertexId> = rg
            .vertices
            .iter()
            .zip(&perm)
            .map(|(v, p)| VertexId::new(v.entity_type.clone(), format!("w{p:02}")))
            .collect();
        let h = build(&edge_types(bip), &renamed, &rg.edges);
        for (a, b) in rg.vertices.iter().zip(&renamed) {
            let va = rg.graph.vertex_index(a).unwrap();
            let vb = h.vertex_index(b).unwrap();
            prop_assert!(near(&vertex_metrics(&rg.graph, va), &vertex_metrics(&h, vb)));
        }
        let (ea, eb) = (
            MetricEngine::new(&rg.graph.view(), PageRankParams::default()),
            MetricEngine::new(&h.view(), PageRankParams::default()),
        );
        for (s, s2) in rg.vertices.iter().zip(&renamed) {
            for (t, t2) in rg.vertices.iter().zip(&renamed) {
                if s == t {
                    continue;
                }
                let (s, t) = (rg.graph.vertex_index(s).unwrap(), rg.graph.vertex_index(t).unwrap());
                let (s2, t2) = (h.vertex_index(s2).unwrap(), h.vertex_index(t2).unwrap());
                prop_assert_eq!(ea.shortest_path(s, t).unwrap(), eb.shortest_path(s2, t2).unwrap());
                prop_assert_eq!(ea.shared_neighbors_ratio(s, t).unwrap(), eb.shared_neighbors_ratio(s2, t2).unwrap());
            }
        }
    }

    #[test]
    fn metric_ranges(seed in any::<u64>(), bip in any::<bool>()) {
        let rg = random_graph(seed, 12, bip);
        let g = &rg.graph;
        for mask in all_schemes(g) {
            let view = remove_edges(&g.view(), &mask).unwrap();
            let engine = MetricEngine::new(&view, PageRankParams::default());
            if engine.topology().present_count() == 0 {
                prop_assert!(engine.pagerank().is_err());
                continue;
            }
            let pr = engine.pagerank().unwrap();
            prop_assert!((pr.sum() - 1.0).abs() < 1e-6);
            let unit = |m: MetricValue| m.value().is_none_or(|x| (0.0..=1.0).contains(&x));
            let present: Vec<VertexIdx> = engine.topology().present_vertices().collect();
            for &v in &present {
                prop_assert!(unit(engine.clustering_coefficient(v).unwrap()));
                if engine.is_bipartite() {
                    prop_assert!(unit(engine.node_redundancy(v).unwrap()));
                }
                for &t in &present {
                    prop_assert!(unit(engine.shared_neighbors_ratio(v, t).unwrap()));
                    for x in 0..g.entity_types().len() {
                        prop_assert!(unit(engine.shared_neighbors_of_type(v, t, x as u16).unwrap()));
                    }
                }
            }
            for e in view.edges() {
                let edge = g.edge(e);
                // a parallel non-predicted edge is a legitimate distance-1 path
                if engine.topology().predicted_only(edge.a, edge.b) {
                    let d = engine.shortest_path(edge.a, edge.b).unwrap();
                    prop_assert!(MetricValue::from(d).value().is_none_or(|x| x >= 2.0));
                }
            }
        }
    }

    #[test]
    fn scheme_views_keep_predicted_edges(seed in any::<u64>()) {
        let rg = random_graph(seed, 12, false);
        let g = &rg.graph;
        let full = g.view();
        let full_topo = full.topology();
        for mask in all_schemes(g) {
            let view = remove_edges(&full, &mask).unwrap();
            prop_assert_eq!(view.predicted_edge_count(), full.predicted_edge_count());
            let topo = view.topology();
            let kept: BTreeSet<&str> = mask.kept_edge_types().iter().map(String::as_str).collect();
            let mut entities = BTreeSet::from(["user", "item"]);
            for t in g.edge_types() {
                if kept.contains(t.name.as_str()) {
                    entities.insert(&t.source_entity);
                    entities.insert(&t.target_entity);
                }
            }
            for v in 0..g.vertex_count() as VertexIdx {
                prop_assert_eq!(view.contains_vertex(v), entities.contains(g.vertex(v).entity_type.as_str()));
                if view.contains_vertex(v) {
                    prop_assert!(topo.degree(v) <= full_topo.degree(v));
                }
            }
        }
    }

    #[test]
    fn baseline_columns_appear_in_every_scheme(seed in any::<u64>(), take in 1usize..20) {
        let rg = random_graph(seed, 12, false);
        let g = &rg.graph;
        let pairs: Vec<LabeledPair> = g
            .predicted_edges()
            .into_iter()
            .take(take)
            .map(|e| {
                let edge = g.edge(e);
                LabeledPair::new(g.vertex(edge.a).clone(), g.vertex(edge.b).clone(), None)
            })
            .collect();
        let table = extract_all_features(
            &FoldMaskedGraph::unmasked(g),
            &all_schemes(g),
            &pairs,
            &GeneratorRegistry::default(),
            &PageRankParams::default(),
        )
        .unwrap();
        prop_assert_eq!(table.row_count(), pairs.len());
        prop_assert_eq!(table.to_csv_string().unwrap().lines().count(), pairs.len() + 1);
        let mut by_scheme: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for c in table.columns() {
            let (scheme, rest) = c.split_once("__").unwrap();
            by_scheme.entry(scheme).or_default().insert(rest);
        }
        let bl = by_scheme["BL"].clone();
        for cols in by_scheme.values() {
            prop_assert!(bl.is_subset(cols));
        }
    }

    #[test]
    fn folds_partition_each_source(seed in any::<u64>(), sources in 1usize..15, n_folds in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut instances = Vec::new();
        for s in 0..sources {
            let count = rand::Rng::random_range(&mut rng, 0..15);
            for t in 0..count {
                instances.push(Instance {
                    source: VertexId::new("user", format!("u{s}")),
                    target: VertexId::new("item", format!("i{t}")),
                    label: None,
                });
            }
        }
        let retained_expected = instances.iter().filter(|i| {
            instances.iter().filter(|j| j.source == i.source).count() >= 5
        }).count();
        match make_folds(&instances, n_folds, 5, seed) {
            Ok(plan) => {
                prop_assert_eq!(plan.retained_count(), retained_expected);
                let again = make_folds(&instances, n_folds, 5, seed).unwrap();
                prop_assert_eq!(&plan.assignment, &again.assignment);
                let mut per_source: BTreeMap<&VertexId, Vec<usize>> = BTreeMap::new();
                for (inst, f) in instances.iter().zip(&plan.assignment) {
                    if let Some(f) = f {
                        per_source.entry(&inst.source).or_insert_with(|| vec![0; n_folds])[*f] += 1;
                    }
                }
                for counts in per_source.values() {
                    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                    prop_assert!(hi - lo <= 1);
                }
                let union: usize = (0..n_folds).map(|k| plan.test_indices(k).len()).sum();
                prop_assert_eq!(union, retained_expected);
            }
            Err(e) => prop_assert!(retained_expected < n_folds, "{e}"),
        }
    }
}

#[test]
fn regular_graphs_have_uniform_pagerank() {
    let cases: [(usize, &[usize]); 5] = [(4, &[1]), (9, &[1]), (12, &[1, 2]), (15, &[1, 3, 5]), (50, &[1, 7])];
    for (n, offsets) in cases {
        let g = circulant(n, offsets);
        let engine = MetricEngine::new(&g.view(), PageRankParams::default());
        let scores = &engine.pagerank().unwrap().scores;
        let (lo, hi) = scores
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        assert!(hi - lo < 1e-9, "n={n} {offsets:?}: spread {}", hi - lo);
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
