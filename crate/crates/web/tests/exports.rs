use superlind_web::{bloch_rows, curve_rows, spectrum_rows, MAX_CURVE_POINTS};

#[test]
fn bloch_rows_are_unit_vectors() {
    let rows = bloch_rows(4.0, 3, 100).unwrap();
    assert_eq!(rows.len() % 10, 0);
    for row in rows.chunks(10) {
        for p in row[1..].chunks(3) {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((r - 1.0).abs() < 1e-6, "{r}");
        }
    }
}

#[test]
fn closed_curve_falls_with_inv_v() {
    let rows = curve_rows("closed", 0.0, 0.0, 0, 1.0, 3.0, 3).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows[1] > rows[3] && rows[3] > rows[5]);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(curve_rows("sideways", 0.0, 0.0, 0, 1.0, 2.0, 2).is_err());
    assert!(curve_rows("closed", 0.0, 0.0, 0, 1.0, 2.0, MAX_CURVE_POINTS + 1).is_err());
    assert!(spectrum_rows(-1.0, 5.0, 0.5, -1.0, 1.0, 3).is_err());
    assert!(bloch_rows(4.0, 99, 10).is_err());
}

#[test]
fn spectrum_rows_pair_up() {
    let rows = spectrum_rows(0.01, 5.0, 0.5, -1.0, 1.0, 3).unwrap();
    assert_eq!(rows.len(), 6);
    assert!((rows[3] - 0.005).abs() < 1e-15);
}
