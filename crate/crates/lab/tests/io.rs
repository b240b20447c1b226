use rarefaction_core::torus::{TorusField, TorusGrid};
use rarefaction_core::{DomainSpec, Field};
use rarefaction_lab::io::*;
use rarefaction_lab::LabError;

fn field() -> Field {
    let s = DomainSpec::new(3, 2.0, 16, vec![4, 6]).unwrap();
    Field::from_fn(&s, 1.25, |x| x[0].sin() + x[1] * x[2] - 1e-300).unwrap()
}

#[test]
fn cylinder_field_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("u.field");
    let f = field();
    write_field(&p, &f).unwrap();
    let g = read_field(&p).unwrap();
    assert_eq!(g.spec(), f.spec());
    assert_eq!(g.t().to_bits(), f.t().to_bits());
    assert!(f
        .values()
        .iter()
        .zip(g.values())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn periodic_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.field");
    let grid = TorusGrid::new(vec![5, 4]).unwrap();
    let w = TorusField::from_fn(&grid, |x| x[0] - 2.0 * x[1]);
    write_periodic(&p, &w, 0.5).unwrap();
    match read_snapshot(&p).unwrap() {
        Snapshot::Periodic { field, t } => {
            assert_eq!(t, 0.5);
            assert_eq!(field, w);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(read_field(&p), Err(LabError::Format(_))));
}

#[test]
fn truncated_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("u.field");
    write_field(&p, &field()).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_field(&p), Err(LabError::Format(_))));
    std::fs::write(&p, b"").unwrap();
    assert!(matches!(read_field(&p), Err(LabError::Format(_))));
}

#[test]
fn table_round_trip_preserves_values() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    let rows = vec![[0.0, 1e-300, -3.5], [0.1, 2.0 / 3.0, 1e12]];
    write_table(&p, &["a", "b", "c"], &rows).unwrap();
    let (h, back) = read_table(&p).unwrap();
    assert_eq!(h, ["a", "b", "c"]);
    for (r, b) in rows.iter().zip(&back) {
        assert_eq!(&r[..], &b[..]);
    }
}

#[test]
fn real_is_shortest_round_trip() {
    for v in [0.0, 0.25, 1e-17, -7.5e20, 1.0 / 3.0, f64::NAN] {
        let s = real(v);
        let back: f64 = s.parse().unwrap();
        assert!(back == v || (v.is_nan() && back.is_nan()), "{s}");
    }
    assert_eq!(real(1e-17), "1e-17");
    assert_eq!(real(0.25), "0.25");
}

#[test]
fn field_csv_lists_coordinates_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("u.csv");
    let f = field();
    field_csv(&p, &f).unwrap();
    let (h, rows) = read_table(&p).unwrap();
    assert_eq!(h, ["x1", "x2", "x3", "value"]);
    assert_eq!(rows.len(), f.values().len());
}
