mod common;

use common::*;
use proptest::prelude::*;
use stereolens::classifier::{TfidfLogisticClassifier, TrainConfig};
use stereolens::corpus::synthetic::synthetic_corpus;
use stereolens::corpus::{
    filter_seegull, filter_winoqueer, gaussian_kde, linear_grid, load_dataset, load_seegull_csv, save_dataset_csv,
    silverman_bandwidth, strict_majority, stratified_split, Bandwidth, DatasetFormat, FilterConfig, LabeledDataset,
    SplitSpec,
};

fn expected_removals(name: &str) -> Vec<(String, String)> {
    let mut r = csv::Reader::from_path(fixture(name)).unwrap();
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].to_string(), rec[1].to_string())
    }).collect()
}

#[test]
fn winoqueer_fixture_keeps_four() {
    let ds = load_dataset(&fixture("winoqueer_fixture.csv"), DatasetFormat::Csv).unwrap();
    assert_eq!(ds.len(), 12);
    let out = filter_winoqueer(&ds, &FilterConfig::default());
    assert_eq!(out.kept.len(), 4);
    let kept: Vec<&str> = out.kept.iter().map(|i| i.text.as_str()).collect();
    let all: Vec<&str> = ds.iter().map(|i| i.text.as_str()).collect();
    assert_eq!(kept, [all[0], all[3], all[6], all[10]]);
    let got: Vec<(String, String)> = out.removals.iter().map(|(i, r)| (i.text.clone(), r.as_str().to_string())).collect();
    let mut want = expected_removals("winoqueer_expected.csv");
    let mut got_sorted = got.clone();
    want.sort();
    got_sorted.sort();
    assert_eq!(got_sorted, want);
    let count = |r: &str| got.iter().filter(|(_, x)| x == r).count();
    assert_eq!((count("counterfactual"), count("duplicate"), count("overt_negative")), (3, 3, 2));
}

#[test]
fn seegull_fixture_gates() {
    let rows = load_seegull_csv(&fixture("seegull_fixture.csv")).unwrap();
    assert_eq!(rows.len(), 7);
    let out = filter_seegull(&rows, &FilterConfig::default()).unwrap();
    let kept: Vec<&str> = out.kept.iter().map(|r| r.phrase.as_str()).collect();
    assert_eq!(kept, ["Zimbabwean terrorist", "Somalis pirates", "Peruvians lazy"]);
    let got: Vec<(String, String)> =
        out.removals.iter().map(|(r, why)| (r.phrase.clone(), why.as_str().to_string())).collect();
    assert_eq!(got, expected_removals("seegull_expected.csv"));
    for r in &out.kept {
        assert!(r.mean_offensive_score > 0.0 && r.home_majority_stereotype && r.na_majority_stereotype);
    }
}

#[test]
fn majority_is_strict() {
    assert!(strict_majority(2, 3));
    assert!(!strict_majority(1, 2));
    assert!(!strict_majority(2, 4));
    assert!(strict_majority(3, 4));
    assert!(!strict_majority(0, 0));
}

#[test]
fn bundled_corpus_and_probe_are_reproducible() {
    let ds = load_dataset(&bundled("synthetic_corpus.csv"), DatasetFormat::Csv).unwrap();
    let regenerated = synthetic_corpus(2000, 42);
    assert_eq!(ds.texts(), regenerated.texts());
    assert_eq!(ds.binary_labels(), regenerated.binary_labels());

    let (train, _) = stratified_split(&ds, &SplitSpec::default()).unwrap();
    let clf = TfidfLogisticClassifier::train(&train, &TrainConfig::default()).unwrap();
    let shipped = std::fs::read_to_string(bundled("lr_probe.json")).unwrap();
    assert_eq!(clf.to_json().unwrap() + "\n", shipped);
}

#[test]
fn csv_roundtrip() {
    let ds = synthetic_corpus(30, 8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    save_dataset_csv(&ds, &path).unwrap();
    let back = load_dataset(&path, DatasetFormat::Csv).unwrap();
    assert_eq!(back.texts(), ds.texts());
    assert_eq!(back.binary_labels(), ds.binary_labels());
}

#[test]
fn missing_file_names_path() {
    let err = load_dataset(std::path::Path::new("/no/such/corpus.csv"), DatasetFormat::Csv).unwrap_err();
    assert!(err.to_string().contains("/no/such/corpus.csv"));
}

#[test]
fn kde_integrates_to_one() {
    let samples: Vec<f64> = synthetic_corpus(200, 1).iter().map(|i| i.char_len() as f64).collect();
    let grid = linear_grid(0.0, 120.0, 2401);
    let h = silverman_bandwidth(&samples);
    let density = gaussian_kde(&samples, Bandwidth::Fixed(h), &grid).unwrap();
    let step = grid[1] - grid[0];
    let mass: f64 = density.iter().map(|(_, d)| d * step).sum();
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
}

fn class_share(ds: &LabeledDataset) -> f64 {
    ds.binary_labels().iter().map(|&l| f64::from(l)).sum::<f64>() / ds.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn split_partitions_and_stratifies(n in 30usize..300, seed in any::<u64>(), frac in 0.1f64..0.5) {
        let ds = synthetic_corpus(n, seed);
        let (train, test) = stratified_split(&ds, &SplitSpec { test_fraction: frac, seed, ..SplitSpec::default() }).unwrap();
        prop_assert_eq!(train.len() + test.len(), n);
        let mut all: Vec<String> = train.texts().into_iter().chain(test.texts()).collect();
        let mut orig = ds.texts();
        all.sort();
        orig.sort();
        prop_assert_eq!(all, orig);
        prop_assert!((class_share(&test) - class_share(&ds)).abs() < 2.0 / test.len() as f64 + 1e-12);
    }
}
