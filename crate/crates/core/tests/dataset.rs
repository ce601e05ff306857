mod common;

use std::fs;
use std::path::Path;

use common::*;
use gsmarray::dataset::*;
use gsmarray::optimizer::{dof_strategy, Strategy};
use gsmarray::toyem::{build_far_field_set, coupling_matrix, ArrayModel, CouplingMode};
use gsmarray::pattern::full_cut;
use gsmarray::Error;

fn toy_dataset(rows: usize, cols: usize, sphere: bool) -> Dataset {
    let model = ArrayModel::half_wave(rows, cols).unwrap();
    let coupling = coupling_matrix(&model, CouplingMode::Toeplitz).unwrap();
    let fields = build_far_field_set(&model, full_cut(), sphere.then_some((2.0, 4.0))).unwrap();
    Dataset { model, coupling, fields }
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Overwrites one complex entry of the row-major coupling binary.
fn poke(dir: &Path, kn: usize, i: usize, j: usize, re_delta: f64) {
    let p = dir.join("coupling.bin");
    let mut bytes = fs::read(&p).unwrap();
    let o = 16 * (i * kn + j);
    let v = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) + re_delta;
    bytes[o..o + 8].copy_from_slice(&v.to_le_bytes());
    fs::write(&p, bytes).unwrap();
}

#[test]
fn export_import_round_trip_is_bit_exact() {
    for (r, c, sphere) in [(2, 2, false), (2, 3, true)] {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("ds");
        let data = toy_dataset(r, c, sphere);
        export_dataset(&dir, &data).unwrap();
        let (back, warnings) = import_dataset(&dir, false).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(back, data);
        for (a, b) in back.coupling.as_dense().iter().zip(data.coupling.as_dense().iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // Export is deterministic byte for byte.
        let dir2 = tmp.path().join("ds2");
        export_dataset(&dir2, &back).unwrap();
        assert_eq!(read_dir(&dir), read_dir(&dir2));
    }
}

#[test]
fn truncated_binary_is_a_shape_mismatch() {
    // K = 6, N = 2: the manifest declares a 12 × 12 coupling matrix.
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ds");
    export_dataset(&dir, &toy_dataset(2, 3, false)).unwrap();
    let p = dir.join("coupling.bin");
    let bytes = fs::read(&p).unwrap();
    assert_eq!(bytes.len(), 12 * 12 * 16);
    fs::write(&p, &bytes[..11 * 12 * 16]).unwrap();
    match import_dataset(&dir, true) {
        Err(Error::ShapeMismatch { name, expected, found }) => {
            assert_eq!(name, "coupling");
            assert_eq!((expected, found), (144, 132));
        }
        other => panic!("expected a shape mismatch, got {other:?}"),
    }
}

#[test]
fn reciprocity_perturbation_needs_override() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ds");
    let data = toy_dataset(2, 2, false);
    export_dataset(&dir, &data).unwrap();
    // G⁽¹'²⁾ entry (0, 2) moved by 1e-3; its transpose partner (2, 0) is not.
    poke(&dir, 8, 0, 2, 1e-3);
    match import_dataset(&dir, false) {
        Err(Error::Validation(w)) => assert!(w.iter().any(|m| m.contains("reciprocity")), "{w:?}"),
        other => panic!("expected a validation error, got {other:?}"),
    }
    let (back, warnings) = import_dataset(&dir, true).unwrap();
    assert_eq!(warnings.len(), 1);
    assert!((back.coupling.reciprocity_defect() - 1e-3).abs() <= 1e-12);
}

#[test]
fn diagonal_block_warning_and_override_clears_it() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ds");
    export_dataset(&dir, &toy_dataset(2, 2, false)).unwrap();
    poke(&dir, 8, 1, 1, 0.25);
    assert!(matches!(import_dataset(&dir, false), Err(Error::Validation(_))));
    let (back, warnings) = import_dataset(&dir, true).unwrap();
    assert!(warnings.iter().any(|w| w.contains("diagonal")));
    assert!(back.coupling.block(0, 0).iter().all(|z| z.norm() == 0.0));
}

#[test]
fn non_finite_and_malformed_inputs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ds");
    export_dataset(&dir, &toy_dataset(2, 2, false)).unwrap();
    let p = dir.join("far_field.bin");
    let mut bytes = fs::read(&p).unwrap();
    bytes[..8].copy_from_slice(&f64::NAN.to_le_bytes());
    fs::write(&p, bytes).unwrap();
    assert!(matches!(import_dataset(&dir, true), Err(Error::NonFinite(_))));

    let dir2 = tmp.path().join("ds2");
    export_dataset(&dir2, &toy_dataset(2, 2, false)).unwrap();
    fs::write(dir2.join(MANIFEST), "format = 3\n").unwrap();
    assert!(matches!(import_dataset(&dir2, true), Err(Error::Format(_))));

    assert!(matches!(import_dataset(tmp.path().join("missing"), true), Err(Error::Io { .. })));
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let asg = dof_strategy(Strategy::PointSymmetry, 3, 2).unwrap();
    let x = random_point(asg.n_classes(), 3, 2, 4, 77);
    save_checkpoint(tmp.path().join("ck"), &x, &asg).unwrap();
    let (y, asg2) = load_checkpoint(tmp.path().join("ck")).unwrap();
    assert_eq!(y, x);
    assert_eq!(asg2, asg);
}
