use std::fs;

use bncc::chain::{train_br, train_chain};
use bncc::correlation::dependence_matrix;
use bncc::dataset::{load_arff, stats, synth, LabelSpec, SynthEdge, SynthSpec};
use bncc::graph::LabelOrder;
use bncc::learner::LearnerConfig;
use bncc::structure::{build_order, learn_parent_sets, SearchConfig};

#[test]
fn zero_flip_edge_gives_full_dependence() {
    let spec = SynthSpec {
        edges: vec![SynthEdge {
            parent: 2,
            child: 0,
            flip_prob: 0.0,
        }],
        ..SynthSpec::independent(3, 400, 11)
    };
    let (ds, dag) = synth(&spec).unwrap();
    assert!(dag.has_edge(2, 0));
    let dep = dependence_matrix(&ds);
    assert_eq!(dep.get(2, 0), 1.0);
    assert_eq!(dep.get(0, 2), 1.0);
}

#[test]
fn independent_synth_has_weak_dependence() {
    let (ds, dag) = synth(&SynthSpec::independent(5, 10_000, 3)).unwrap();
    assert_eq!(dag.edge_count(), 0);
    let dep = dependence_matrix(&ds);
    for k in 0..5 {
        for j in 0..5 {
            if j != k {
                assert!(dep.get(k, j) < 0.02, "I({k}->{j}) = {}", dep.get(k, j));
            }
        }
    }
}

#[test]
fn independent_labels_learn_nothing_with_baseline() {
    let (ds, _) = synth(&SynthSpec::independent(4, 256, 17)).unwrap();
    let cfg = SearchConfig {
        baseline_empty_set: true,
        ..SearchConfig::default()
    };
    let dep = dependence_matrix(&ds);
    let (g, ps) = learn_parent_sets(&ds, &LabelOrder::identity(4), &cfg, &dep).unwrap();
    assert_eq!(g.edge_count(), 0);
    assert!(ps.parents.iter().all(Vec::is_empty));
    let bn = build_order(&ds, &cfg).unwrap();
    assert_eq!(bn.final_dag.edge_count(), 0);
    assert_eq!(bn.order, LabelOrder::identity(4));
}

#[test]
fn arff_with_label_xml_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let arff = dir.path().join("toy.arff");
    let xml = dir.path().join("toy.xml");
    fs::write(
        &arff,
        "% toy corpus\n@relation toy\n@attribute f1 numeric\n@attribute f2 real\n\
         @attribute amazed {0,1}\n@attribute calm {0,1}\n@data\n\
         0.5,1.5,1,0\n{0 2.0,3 1}\n-1,0,0,0\n",
    )
    .unwrap();
    fs::write(
        &xml,
        "<?xml version=\"1.0\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n\
         <label name=\"amazed\"></label>\n<label name=\"calm\"></label>\n</labels>\n",
    )
    .unwrap();
    let ds = load_arff(&arff, &LabelSpec::Xml(xml)).unwrap();
    assert_eq!((ds.n_instances(), ds.n_features(), ds.n_labels()), (3, 2, 2));
    assert_eq!(ds.label_names(), ["amazed", "calm"]);
    assert_eq!(ds.features()[[1, 0]], 2.0);
    assert_eq!(ds.features()[[1, 1]], 0.0);
    assert_eq!(ds.label_column(1), vec![0, 1, 0]);
    let s = stats(&ds);
    assert_eq!(s.per_label_positive_counts, vec![1, 1]);
}

#[test]
fn identity_chain_tracks_br_on_independent_labels() {
    let (ds, _) = synth(&SynthSpec::independent(4, 600, 5)).unwrap();
    let cfg = LearnerConfig::default();
    let br = train_br(&ds, &cfg).unwrap().predict_rows(ds.features().view()).unwrap();
    let cc = train_chain(&ds, &LabelOrder::identity(4), &cfg)
        .unwrap()
        .predict_rows(ds.features().view())
        .unwrap();
    let agree = br.iter().zip(&cc).filter(|(a, b)| a == b).count();
    assert!(agree as f64 / br.len() as f64 > 0.97, "agreement {agree}/{}", br.len());
}

#[test]
fn learned_order_puts_parents_first_on_noiseless_fork() {
    // 1 -> 0 and 1 -> 2 with identical copies; any order with consistent edges is fine
    let spec = SynthSpec {
        edges: vec![
            SynthEdge {
                parent: 1,
                child: 0,
                flip_prob: 0.0,
            },
            SynthEdge {
                parent: 1,
                child: 2,
                flip_prob: 0.0,
            },
        ],
        ..SynthSpec::independent(3, 300, 8)
    };
    let (ds, _) = synth(&spec).unwrap();
    let bn = build_order(&ds, &SearchConfig::default()).unwrap();
    let pos = bn.order.positions();
    for e in bn.final_dag.edges() {
        assert!(pos[e.from] < pos[e.to]);
    }
    assert!(bn.final_dag.edge_count() >= 2);
}
