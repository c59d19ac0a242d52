use std::collections::HashSet;

use beamadapt::balancing::{recover_downlink, solve_balancing, BalancingOptions};
use beamadapt::channels::{ModelId, ScenarioConfig};
use beamadapt::datasets::{
    build_tasks, canonicalize, generate_dataset, merge_pools, split_adaptation, DatasetFile, DATASET_VERSION,
};
use beamadapt::numerics::{ComplexMatrix, RandomStream};
use beamadapt::{ChannelInstance, Error};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn instance(sigma2: Vec<f64>, seed: u64) -> ChannelInstance {
    let mut rng = RandomStream::new(seed, 0);
    let h = ComplexMatrix::from_fn(sigma2.len(), 3, |_, _| rng.complex_normal());
    ChannelInstance::new(h, sigma2, 2.0).unwrap()
}

#[test]
fn canonicalize_unit_noise_is_identity() {
    let inst = instance(vec![1.0; 3], 1);
    assert_eq!(canonicalize(&inst), inst);
}

#[test]
fn canonicalize_preserves_balanced_level() {
    let inst = instance(vec![4.0; 3], 2);
    let canon = canonicalize(&inst);
    assert_eq!(canon.sigma2, vec![1.0; 3]);
    assert!((canon.h[(0, 0)] - inst.h[(0, 0)] * 0.5).norm() == 0.0);
    let a = solve_balancing(&inst, &BalancingOptions::default()).unwrap().0.balanced_sinr;
    let b = solve_balancing(&canon, &BalancingOptions::default()).unwrap().0.balanced_sinr;
    assert!(rel(a, b) < 1e-10);
}

#[test]
fn canonicalize_mixed_noise_keeps_duality() {
    let canon = canonicalize(&instance(vec![0.3, 1.0, 7.0], 3));
    let (up, down) = solve_balancing(&canon, &BalancingOptions::default()).unwrap();
    assert!(rel(down.min_sinr(), up.balanced_sinr) < 1e-4);
    let max = down.sinr.iter().copied().fold(0.0, f64::max);
    assert!(max - down.min_sinr() <= 1e-4 * down.min_sinr());
}

fn small_cfg(model: ModelId) -> ScenarioConfig {
    ScenarioConfig::preset(model, 4, 4, 25.0)
}

#[test]
fn labels_pass_self_check_for_every_model() {
    for model in ModelId::ALL {
        let file = generate_dataset(&small_cfg(model), 12, &RandomStream::new(5, 1), 1).unwrap();
        assert_eq!(file.records.len(), 12);
        for rec in &file.records {
            assert!(rec.label.iter().all(|f| (0.0..=1.0).contains(f)));
            assert!((rec.label.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            let (up, _) = solve_balancing(&rec.instance, &BalancingOptions::default()).unwrap();
            let q: Vec<f64> = rec.label.iter().map(|f| f * file.power()).collect();
            let d = recover_downlink(&rec.instance, &q).unwrap();
            assert!(rel(d.min_sinr(), up.balanced_sinr) <= 1e-4, "{model}");
        }
    }
}

#[test]
fn round_trip_is_byte_exact() {
    let file = generate_dataset(&small_cfg(ModelId::Nakagami), 6, &RandomStream::new(8, 0), 1).unwrap();
    let bytes = file.to_bytes().unwrap();
    let back = DatasetFile::from_reader(bytes.as_slice()).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.to_bytes().unwrap(), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.jsonl");
    file.write(&path).unwrap();
    assert_eq!(DatasetFile::read(&path).unwrap().file_hash().unwrap(), file.file_hash().unwrap());
}

#[test]
fn generation_is_deterministic_across_workers() {
    let cfg = small_cfg(ModelId::LargeScale);
    let a = generate_dataset(&cfg, 1, &RandomStream::new(3, 0), 1).unwrap();
    let b = generate_dataset(&cfg, 1, &RandomStream::new(3, 0), 1).unwrap();
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    let one = generate_dataset(&cfg, 16, &RandomStream::new(3, 0), 1).unwrap();
    let four = generate_dataset(&cfg, 16, &RandomStream::new(3, 0), 4).unwrap();
    assert_eq!(one.to_bytes().unwrap(), four.to_bytes().unwrap());
}

#[test]
fn bad_inputs_are_rejected() {
    let cfg = small_cfg(ModelId::Rayleigh);
    assert!(matches!(generate_dataset(&cfg, 0, &RandomStream::new(0, 0), 1), Err(Error::InvalidConfig(_))));

    let file = generate_dataset(&cfg, 2, &RandomStream::new(0, 0), 1).unwrap();
    let text = String::from_utf8(file.to_bytes().unwrap()).unwrap();
    let bumped = text.replacen(&format!("\"version\":{DATASET_VERSION}"), "\"version\":99", 1);
    assert!(matches!(DatasetFile::from_reader(bumped.as_bytes()), Err(Error::VersionMismatch { found: 99, .. })));
    let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(matches!(DatasetFile::from_reader(truncated.as_bytes()), Err(Error::CorruptPayload(_))));
}

#[test]
fn tasks_are_disjoint_and_reproducible() {
    let pool = generate_dataset(&small_cfg(ModelId::Rician), 30, &RandomStream::new(1, 0), 2).unwrap().records;
    let tasks = build_tasks(&pool, 5, 6, 4, &mut RandomStream::new(2, 0)).unwrap();
    assert_eq!(tasks.len(), 5);
    for t in &tasks {
        let ids: HashSet<usize> = t.support.iter().chain(&t.query).map(|p| p.id).collect();
        assert_eq!(ids.len(), 10);
    }
    let again = build_tasks(&pool, 5, 6, 4, &mut RandomStream::new(2, 0)).unwrap();
    for (a, b) in tasks.iter().zip(&again) {
        assert_eq!(a.support, b.support);
        assert_eq!(a.query, b.query);
    }
    // Boundary: the task is a partition of the pool.
    let full = build_tasks(&pool, 1, 20, 10, &mut RandomStream::new(3, 0)).unwrap();
    let ids: HashSet<usize> = full[0].support.iter().chain(&full[0].query).map(|p| p.id).collect();
    assert_eq!(ids.len(), 30);
    assert!(matches!(
        build_tasks(&pool, 1, 20, 11, &mut RandomStream::new(3, 0)),
        Err(Error::PoolTooSmall { needed: 31, available: 30 })
    ));
}

#[test]
fn merged_pool_ids_are_unique() {
    let a = generate_dataset(&small_cfg(ModelId::Rayleigh), 3, &RandomStream::new(1, 0), 1).unwrap().records;
    let b = generate_dataset(&small_cfg(ModelId::Nakagami), 3, &RandomStream::new(1, 1), 1).unwrap().records;
    let merged = merge_pools([a, b]);
    assert_eq!(merged.iter().map(|p| p.id).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
}

#[test]
fn adaptation_split_is_disjoint() {
    let cfg = small_cfg(ModelId::LargeScale);
    let (ad, test) = split_adaptation(&cfg, 20, 50, &RandomStream::new(4, 0), 1).unwrap();
    assert_eq!((ad.len(), test.len()), (20, 50));
    let a: HashSet<usize> = ad.iter().map(|p| p.id).collect();
    assert!(test.iter().all(|p| !a.contains(&p.id)));
    let (ad2, _) = split_adaptation(&cfg, 20, 50, &RandomStream::new(4, 0), 1).unwrap();
    assert_eq!(ad, ad2);
}
