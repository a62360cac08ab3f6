mod common;

use cur_deim::bench::{run_experiment, ExperimentConfig, InputSource, RankSweep};
use cur_deim::cur::{build_cur, relative_error};
use cur_deim::linalg::{singular_values, truncated_svd};
use cur_deim::matrix_io::{load_matrix, save_matrix, synthesize, MatrixFormat, SyntheticSpec};
use cur_deim::select::{ldeim_select_pair, qdeim_select, Method};
use cur_deim::Error;

#[test]
fn load_from_disk_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("m.mtx");
    std::fs::write(
        &mtx,
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 2.0\n",
    )
    .unwrap();
    let a = load_matrix(&mtx, MatrixFormat::MatrixMarket).unwrap();
    assert_eq!(a, nalgebra::dmatrix![1.0, 0.0; 0.0, 2.0]);

    let csv = dir.path().join("m.csv");
    std::fs::write(&csv, "1.5,2.0\n3.0,4.0\n").unwrap();
    assert_eq!(
        load_matrix(&csv, MatrixFormat::Csv).unwrap(),
        nalgebra::dmatrix![1.5, 2.0; 3.0, 4.0]
    );
    std::fs::write(&csv, "1,2,3\n4,5\n").unwrap();
    assert!(matches!(load_matrix(&csv, MatrixFormat::Csv), Err(Error::Parse { .. })));
    assert!(matches!(
        load_matrix(dir.path().join("missing.csv"), MatrixFormat::Csv),
        Err(Error::Io { .. })
    ));

    let g = common::gaussian(7, 4, 1);
    for format in [MatrixFormat::MatrixMarket, MatrixFormat::Csv] {
        let path = dir.path().join("g.out");
        save_matrix(&path, &g, format).unwrap();
        assert_eq!(load_matrix(&path, format).unwrap(), g);
    }
}

#[test]
fn oversampled_ldeim_cur_end_to_end() {
    let a = synthesize(&SyntheticSpec {
        rows: 120,
        cols: 80,
        true_rank: 15,
        noise_level: 0.02,
        seed: 21,
    })
    .unwrap();
    let sv = singular_values(&a).unwrap();
    let svd = truncated_svd(&a, 8).unwrap();
    let (rows, cols) = ldeim_select_pair(&svd.u, &svd.v, 15).unwrap();
    let f = build_cur(&a, &cols, &rows).unwrap();
    let err = relative_error(&a, &f).unwrap();
    assert!(err >= sv[15] / sv[0] - 1e-10);
    // 15 generic rows and columns of a rank-15 signal leave only noise.
    assert!(err < 0.05, "{err}");

    let q = truncated_svd(&a, 15).unwrap();
    let f = build_cur(&a, &qdeim_select(&q.v, 15).unwrap(), &qdeim_select(&q.u, 15).unwrap()).unwrap();
    assert!(relative_error(&a, &f).unwrap() < 0.05);
}

#[test]
fn eckart_young_floor_on_sweep() {
    let spec = SyntheticSpec {
        rows: 500,
        cols: 120,
        true_rank: 20,
        noise_level: 0.05,
        seed: 11,
    };
    let sv = singular_values(&synthesize(&spec).unwrap()).unwrap();
    let mut cfg = ExperimentConfig::new(InputSource::Synthetic(spec));
    cfg.ranks = Some(RankSweep { min: 10, max: 40, step: 10 });
    cfg.repeats = 1;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.diagnostics.is_empty());
    assert_eq!(report.rows.len(), 16);
    for row in &report.rows {
        assert!(row.rel_error >= sv[row.k_hat] / sv[0] - 1e-10, "{row:?}");
        assert!(row.selection_seconds >= 0.0);
    }
    for m in Method::ALL {
        assert_eq!(report.rows.iter().filter(|r| r.method == m).count(), 4);
    }
}
