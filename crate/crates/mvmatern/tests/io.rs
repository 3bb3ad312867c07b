//! CSV ingestion behavior: cleaning, column mapping, deterministic component
//! indexing, and error reporting.

use std::io::Write;
use std::path::Path;

use mvmatern::{load_dataset, ColumnSpec, Error, SpatialDataset};

fn write_csv(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(text.as_bytes()).unwrap();
    path
}

#[test]
fn duplicates_are_dropped_keeping_the_first() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(
        dir.path(),
        "dup.csv",
        "x,y,comp,value\n0.0,0.0,a,1.5\n1.0,0.0,a,2.5\n0.0,0.0,a,9.9\n",
    );
    let report = load_dataset(&path, &ColumnSpec::default()).unwrap();
    assert_eq!(report.dataset.len(), 2);
    assert_eq!(report.dropped_duplicates, 1);
    assert_eq!(report.dropped_missing, 0);
    // first occurrence wins
    let kept: Vec<f64> = report.dataset.responses().to_vec();
    assert!(kept.contains(&1.5) && !kept.contains(&9.9));
}

#[test]
fn colocated_different_components_are_not_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(
        dir.path(),
        "co.csv",
        "x,y,comp,value\n0.0,0.0,a,1.0\n0.0,0.0,b,2.0\n",
    );
    let report = load_dataset(&path, &ColumnSpec::default()).unwrap();
    assert_eq!(report.dataset.len(), 2);
    assert_eq!(report.dropped_duplicates, 0);
}

#[test]
fn rows_with_missing_fields_are_counted_and_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(
        dir.path(),
        "miss.csv",
        "x,y,comp,value\n0.0,0.0,a,1.0\n,0.5,a,2.0\n0.2,0.4,a,\n0.3,0.1,b,4.0\n0.6,nan,b,5.0\n",
    );
    let report = load_dataset(&path, &ColumnSpec::default()).unwrap();
    assert_eq!(report.dataset.len(), 2);
    assert_eq!(report.dropped_missing, 3);
}

#[test]
fn component_indexing_is_alphabetical_and_shuffle_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [
        "0.0,0.0,temp,1.0",
        "0.1,0.0,press,2.0",
        "0.2,0.0,temp,3.0",
        "0.3,0.0,humid,4.0",
    ];
    let forward = write_csv(
        dir.path(),
        "f.csv",
        &format!("x,y,comp,value\n{}\n", rows.join("\n")),
    );
    let mut shuffled_rows = rows;
    shuffled_rows.reverse();
    shuffled_rows.swap(0, 2);
    let shuffled = write_csv(
        dir.path(),
        "s.csv",
        &format!("x,y,comp,value\n{}\n", shuffled_rows.join("\n")),
    );
    let a = load_dataset(&forward, &ColumnSpec::default()).unwrap().dataset;
    let b = load_dataset(&shuffled, &ColumnSpec::default()).unwrap().dataset;
    assert_eq!(a.labels(), ["humid", "press", "temp"]);
    assert_eq!(a.labels(), b.labels());
    // Same (location, component, response) multiset regardless of row order.
    let key = |d: &SpatialDataset| {
        let mut v: Vec<(Vec<u64>, usize, u64)> = (0..d.len())
            .map(|i| {
                (
                    d.location(i).iter().map(|x| x.to_bits()).collect(),
                    d.component(i),
                    d.response(i).to_bits(),
                )
            })
            .collect();
        v.sort();
        v
    };
    assert_eq!(key(&a), key(&b));
}

#[test]
fn custom_column_names_and_extra_columns_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(
        dir.path(),
        "custom.csv",
        "lon,lat,elev,species,ignored,measurement\n\
         1.0,2.0,100.0,fir,junk,0.5\n\
         1.5,2.5,200.0,pine,junk,0.7\n",
    );
    let spec = ColumnSpec {
        x_cols: vec!["lon".into(), "lat".into(), "elev".into()],
        component_col: "species".into(),
        response_col: "measurement".into(),
    };
    let report = load_dataset(&path, &spec).unwrap();
    assert_eq!(report.dataset.dim(), 3);
    assert_eq!(report.dataset.len(), 2);
    assert_eq!(report.dataset.labels(), ["fir", "pine"]);
}

#[test]
fn distinct_errors_for_missing_file_column_and_empty_data() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ColumnSpec::default();

    let missing = load_dataset(&dir.path().join("absent.csv"), &spec).unwrap_err();
    assert!(matches!(missing, Error::Read { .. }), "{missing:?}");

    let no_col = write_csv(dir.path(), "nocol.csv", "x,y,value\n0,0,1\n");
    let err = load_dataset(&no_col, &spec).unwrap_err();
    assert!(matches!(err, Error::MissingColumn { .. }), "{err:?}");

    let empty = write_csv(dir.path(), "empty.csv", "x,y,comp,value\n,,a,\n");
    let err = load_dataset(&empty, &spec).unwrap_err();
    assert!(matches!(err, Error::EmptyDataset { .. }), "{err:?}");
}

/// Loading a cleaned dataset's own re-export yields the identical dataset.
#[test]
fn loading_a_cleaned_reexport_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(
        dir.path(),
        "first.csv",
        "x,y,comp,value\n\
         0.25,0.75,b,1.25\n\
         0.25,0.75,b,2.0\n\
         0.1,0.2,a,0.125\n\
         ,0.3,a,5.0\n\
         0.7,0.9,a,-3.5\n",
    );
    let first = load_dataset(&path, &ColumnSpec::default()).unwrap().dataset;

    // Re-export in the canonical column layout.
    let mut text = String::from("x,y,comp,value\n");
    for i in 0..first.len() {
        let loc = first.location(i);
        text.push_str(&format!(
            "{},{},{},{}\n",
            loc[0],
            loc[1],
            first.labels()[first.component(i)],
            first.response(i)
        ));
    }
    let second_path = write_csv(dir.path(), "second.csv", &text);
    let report = load_dataset(&second_path, &ColumnSpec::default()).unwrap();
    let second = report.dataset;

    assert_eq!(report.dropped_missing, 0);
    assert_eq!(report.dropped_duplicates, 0);
    assert_eq!(first.len(), second.len());
    assert_eq!(first.labels(), second.labels());
    for i in 0..first.len() {
        assert_eq!(first.location(i), second.location(i));
        assert_eq!(first.component(i), second.component(i));
        assert_eq!(first.response(i), second.response(i));
    }
}

/// The bundled weather table: 157 stations, two variables each.
#[test]
fn bundled_weather_dataset_has_the_documented_shape() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/weather.csv");
    let spec = ColumnSpec {
        x_cols: vec!["x".into(), "y".into(), "z".into()],
        ..ColumnSpec::default()
    };
    let report = load_dataset(&path, &spec).unwrap();
    assert_eq!(report.dataset.len(), 314);
    assert_eq!(report.dataset.n_components(), 2);
    assert_eq!(report.dataset.dim(), 3);
    assert_eq!(report.dataset.labels(), ["pressure", "temperature"]);
}
