// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use vibron::io::{dataset_to_string, emit_dataset, parse_csv, read_dataset, Dataset, Format};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.0), Just(-0.0), Just(f64::MIN_POSITIVE)]
}

proptest! {
    #[test]
    fn csv_and_json_round_trip_bitwise(rows in prop::collection::vec(prop::collection::vec(finite(), 3), 1..20)) {
        let mut ds = Dataset::with_columns("t", &["a", "b,c", "d\"e"]);
        for r in &rows {
            ds.push(r.clone()).unwrap();
        }
        let back = parse_csv("t", &dataset_to_string(&ds, Format::Csv).unwrap()).unwrap();
        prop_assert_eq!(&back.columns, &ds.columns);
        for (x, y) in back.rows.iter().flatten().zip(ds.rows.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        let dir = tempfile::tempdir().unwrap();
        let p = emit_dataset(&ds, Format::Json, &dir.path().join("t.json")).unwrap();
        let j = read_dataset(&p).unwrap();
        for (x, y) in j.rows.iter().flatten().zip(ds.rows.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}

#[test]
fn io_errors_carry_the_path() {
    let ds = Dataset::with_columns("t", &["a"]);
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = emit_dataset(&ds, Format::Csv, &blocker.join("t.csv")).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}
