mod common;

use std::collections::BTreeMap;
use std::io::Write;

use common::oracles::enumerate_tp;
use tpsim_core::eval::{auc_with_ci, coclass_pairs, log_transform};
use tpsim_core::graph::{build_graph, clean, load_edge_list, load_snapshot, save_snapshot};
use tpsim_core::sbm::generate_sbm;
use tpsim_core::{CleanOptions, LoadOptions, Measure, PairSource, SbmSpec, ScoredPairs, Scorer, WalkConfig};

#[test]
fn edge_file_to_auc() {
    let sbm = generate_sbm(&SbmSpec::planted(400, 2, 8.0, 25.0, 9).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.tsv");
    let mut f = std::fs::File::create(&edges).unwrap();
    for (a, b) in sbm.graph.edges() {
        writeln!(f, "{}\t{}", sbm.graph.id(a), sbm.graph.id(b)).unwrap();
    }
    drop(f);

    let raw = build_graph(&load_edge_list(&edges, &LoadOptions::default()).unwrap());
    let g = clean(&raw, &CleanOptions { min_degree: 3, iterate_core: false });
    assert!(g.is_connected() && g.node_count() > 300);

    let snap = dir.path().join("g.bin");
    save_snapshot(&g, &snap).unwrap();
    let back = load_snapshot(&snap).unwrap();
    assert_eq!(back.ids(), g.ids());
    assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());

    let walk = WalkConfig { t: 4, ..WalkConfig::default() };
    let scorer = Scorer::new(&g, Measure::Tp, walk, 0).unwrap();
    let spot = [(0, 1), (5, 200), (17, 17)];
    for (&(i, j), v) in spot.iter().zip(scorer.score(&spot).unwrap()) {
        let want = enumerate_tp(&g, i, j, 4);
        assert!((v - want).abs() < 1e-12 * want.max(1e-300), "{i},{j}: {v} vs {want}");
    }

    let labels: BTreeMap<String, String> = g
        .ids()
        .iter()
        .map(|id| (id.clone(), sbm.blocks[id.parse::<usize>().unwrap()].to_string()))
        .collect();
    let set = coclass_pairs(&labels, 1000, 1).unwrap();
    let values = scorer.score(&set.resolve(&g).unwrap()).unwrap();
    let scored = log_transform(&ScoredPairs::new(values, set.labels()).unwrap()).unwrap();
    let est = auc_with_ci(&scored, 300, 2).unwrap();
    assert!(est.auc > 0.9, "{est:?}");
    assert!(est.ci_low <= est.auc && est.auc <= est.ci_high);
}
