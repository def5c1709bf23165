use gll_core::io::{self, OutputDir, RunManifest, MANIFEST_NAME};
use proptest::prelude::*;
use serde_json::json;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(0.0), Just(-0.0), Just(f64::MIN_POSITIVE)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn csv_round_trip_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(finite(), 3), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        io::write_csv(&path, &["a", "b", "c"], &rows).unwrap();
        let (header, back) = io::read_csv(&path).unwrap();
        prop_assert_eq!(header, vec!["a", "b", "c"]);
        prop_assert_eq!(back.len(), rows.len());
        for (x, y) in rows.iter().flatten().zip(back.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn input_hash_ignores_key_order_and_tracks_values(a in -1e6f64..1e6, b in 0u32..100) {
        let m1 = RunManifest::new("c", json!({ "a": a, "b": b }), json!({}), json!({}));
        let mut obj = serde_json::Map::new();
        obj.insert("b".into(), json!(b));
        obj.insert("a".into(), json!(a));
        let m2 = RunManifest::new("c", serde_json::Value::Object(obj), json!({}), json!({}));
        prop_assert_eq!(&m1.input_hash, &m2.input_hash);
        let m3 = RunManifest::new("c", json!({ "a": a, "b": b + 1 }), json!({}), json!({}));
        prop_assert_ne!(&m1.input_hash, &m3.input_hash);
    }
}

#[test]
fn each_directory_holds_one_manifest_listing_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = OutputDir::create(dir.path()).unwrap();
    out.write_csv("a.csv", &["x"], &[vec![1.0]]).unwrap();
    out.write_json("b.json", &json!({ "k": 1 })).unwrap();
    assert!(out.write_json(MANIFEST_NAME, &json!({})).is_err());
    assert!(out.write_text("../escape.txt", "no").is_err());
    out.finish(RunManifest::new("t", json!({}), json!(null), json!({}))).unwrap();
    let manifests: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name() == MANIFEST_NAME)
        .collect();
    assert_eq!(manifests.len(), 1);
    let m = RunManifest::read(dir.path()).unwrap();
    assert_eq!(m.schema_version, io::SCHEMA_VERSION);
    assert_eq!(m.grid["artifacts"], json!(["a.csv", "b.json"]));
}

#[test]
fn ragged_rows_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    assert!(io::write_csv(&dir.path().join("r.csv"), &["a", "b"], &[vec![1.0]]).is_err());
    std::fs::write(dir.path().join("bad.csv"), "a\nnot-a-number\n").unwrap();
    assert!(io::read_csv(&dir.path().join("bad.csv")).is_err());
}
