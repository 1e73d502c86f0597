use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use sybilgraph::features::{extract_one, ExtractConfig, FeatureContext};
use sybilgraph::graph::TransactionGraph;
use sybilgraph::ingest::{write_transactions_csv, FileLabelProvider};
use sybilgraph::pipeline::{ingest_records, PipelineConfig};
use sybilgraph::synth::{
    default_benchmark_spec, generate, LabeledDataset, Pattern, PatternMix, Role, SynthSpec, Truth,
};

fn small_spec(seed: u64, clusters: usize, mix: PatternMix) -> SynthSpec {
    SynthSpec {
        n_benign: 150,
        n_sybil_clusters: clusters,
        pattern_mix: mix,
        rng_seed: seed,
        ..default_benchmark_spec()
    }
}

fn all_patterns() -> PatternMix {
    PatternMix {
        star: 1.0,
        chain: 1.0,
        tree: 1.0,
    }
}

fn extract_config(spec: &SynthSpec) -> ExtractConfig {
    ExtractConfig {
        activity_addresses: [spec.activity_address.clone()].into(),
        ..ExtractConfig::default()
    }
}

fn candidates(data: &LabeledDataset) -> BTreeSet<String> {
    let provider = FileLabelProvider::from_labels(data.entity_labels.clone());
    ingest_records(data.records.clone(), &provider, &PipelineConfig::default().clean_config())
        .unwrap()
        .candidates
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn star_hubs_see_every_spoke(seed in any::<u64>(), clusters in 1usize..6) {
        let mix = PatternMix { star: 1.0, chain: 0.0, tree: 0.0 };
        let spec = small_spec(seed, clusters, mix);
        let data = generate(&spec).unwrap();
        let g = TransactionGraph::build(&data.records);
        let cfg = extract_config(&spec);
        let ctx = FeatureContext::new(&g, &cfg);
        let mut spokes: BTreeMap<u32, usize> = BTreeMap::new();
        let mut hubs = BTreeMap::new();
        for (addr, c) in &data.cluster_assignments {
            prop_assert_eq!(c.pattern, Pattern::Star);
            match c.role {
                Role::Hub => { hubs.insert(c.cluster_id, addr.clone()); }
                Role::Spoke => *spokes.entry(c.cluster_id).or_insert(0) += 1,
                other => prop_assert!(false, "role {:?} in a star", other),
            }
        }
        prop_assert_eq!(hubs.len(), clusters);
        for (id, hub) in hubs {
            let fv = extract_one(&ctx, &hub).unwrap();
            let n4 = fv.get("layer1_out_addrs").unwrap();
            prop_assert!(n4 >= spokes[&id] as f64, "hub of cluster {}: n4 {} < {} spokes", id, n4, spokes[&id]);
        }
    }

    #[test]
    fn sybil_gas_to_activity_fits_in_the_jitter(seed in any::<u64>(), jitter in 60i64..3000) {
        let spec = SynthSpec { time_jitter: jitter, ..small_spec(seed, 8, all_patterns()) };
        let data = generate(&spec).unwrap();
        let g = TransactionGraph::build(&data.records);
        let cfg = extract_config(&spec);
        let ctx = FeatureContext::new(&g, &cfg);
        for addr in data.cluster_assignments.keys() {
            let fv = extract_one(&ctx, addr).unwrap();
            let gas = fv.get("first_gas_time").unwrap();
            let t6 = fv.get("interval_activity_gas").unwrap();
            prop_assert!(gas > 0.0, "{} never received gas", addr);
            prop_assert!((0.0..=jitter as f64).contains(&t6), "{}: t6 = {}", addr, t6);
        }
    }

    #[test]
    fn labels_partition_the_candidates(seed in any::<u64>()) {
        let data = generate(&small_spec(seed, 10, all_patterns())).unwrap();
        let cands = candidates(&data);
        prop_assert!(!cands.is_empty());
        for c in &cands {
            prop_assert!(data.labels.contains_key(c), "candidate {} has no label", c);
        }
        let sybils: BTreeSet<&String> = data.labels.iter().filter(|(_, t)| **t == Truth::Sybil).map(|(a, _)| a).collect();
        let assigned: BTreeSet<&String> = data.cluster_assignments.keys().collect();
        prop_assert_eq!(&sybils, &assigned);
        let seen: BTreeSet<&str> = data.records.iter().flat_map(|r| [r.input_address.as_str(), r.output_address.as_str()]).collect();
        for s in sybils {
            prop_assert!(seen.contains(s.as_str()));
        }
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let spec = small_spec(seed, 4, all_patterns());
        let bytes = |d: &LabeledDataset| {
            let mut buf = Vec::new();
            write_transactions_csv(&mut buf, &d.records).unwrap();
            buf
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        prop_assert_eq!(bytes(&a), bytes(&b));
        prop_assert_eq!(a.labels, b.labels);
    }
}

#[test]
fn tree_clusters_branch() {
    let mix = PatternMix {
        star: 0.0,
        chain: 0.0,
        tree: 1.0,
    };
    let spec = SynthSpec {
        cluster_size_range: (10, 11),
        ..small_spec(7, 5, mix)
    };
    let data = generate(&spec).unwrap();
    let intermediates: BTreeSet<&String> = data
        .cluster_assignments
        .iter()
        .filter(|(_, c)| c.role == Role::Intermediate)
        .map(|(a, _)| a)
        .collect();
    assert!(!intermediates.is_empty());
    for m in intermediates {
        let leaves: BTreeSet<&str> = data
            .records
            .iter()
            .filter(|r| &r.input_address == m && r.coin == "USDT")
            .filter(|r| {
                data.cluster_assignments
                    .get(&r.output_address)
                    .is_some_and(|c| c.role == Role::Leaf)
            })
            .map(|r| r.output_address.as_str())
            .collect();
        assert!(leaves.len() >= 2, "{m} funds {} leaves", leaves.len());
    }
}

#[test]
fn benign_participants_are_spread_wider_than_sybils() {
    let spec = default_benchmark_spec();
    let data = generate(&spec).unwrap();
    let g = TransactionGraph::build(&data.records);
    let cfg = extract_config(&spec);
    let ctx = FeatureContext::new(&g, &cfg);
    let mut wide = 0;
    let mut participants = 0;
    for (addr, truth) in &data.labels {
        if *truth != Truth::Benign {
            continue;
        }
        let t6 = extract_one(&ctx, addr).unwrap().get("interval_activity_gas").unwrap();
        if t6 >= 0.0 {
            participants += 1;
            wide += usize::from(t6 > spec.time_jitter as f64);
        }
    }
    assert!(participants > 0);
    assert!(wide * 2 > participants, "{wide} of {participants} benign participants beyond the jitter");
}

#[test]
fn benchmark_prevalence_and_budget() {
    let spec = default_benchmark_spec();
    assert_eq!(spec, default_benchmark_spec());
    assert_eq!(spec.rng_seed, 42);
    let start = Instant::now();
    let data = generate(&spec).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "generation took {elapsed:?}");

    let cands = candidates(&data);
    let sybil = cands
        .iter()
        .filter(|c| data.labels.get(*c) == Some(&Truth::Sybil))
        .count();
    let fraction = sybil as f64 / cands.len() as f64;
    assert!(
        (4_000..=6_000).contains(&cands.len()),
        "{} candidates",
        cands.len()
    );
    assert!((0.10..=0.14).contains(&fraction), "sybil fraction {fraction}");
}
