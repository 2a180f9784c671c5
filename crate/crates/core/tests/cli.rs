//! End-to-end runs of the `missbench` binary.

use std::path::Path;
use std::process::{Command, Output};

use missbench::bench::io::{default_columns, load_mask_csv, read_numeric_csv};
use missbench::bench::{load_csv, load_report, save_csv};
use ndarray::Array2;

fn missbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_missbench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_mask_impute_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = missbench(&["gen", "--rows", "30", "--cols", "6", "--rank", "2", "--seed", "3", "--out", "y.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let data = load_csv(&d.join("y.csv")).unwrap();
    assert_eq!(data.matrix.dim(), (30, 6));

    let o = missbench(
        &["mask", "--data", "y.csv", "--pattern", "mcar", "--set", "p_missing=0.25", "--seed", "1", "--out", "m.csv"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mask = load_mask_csv(&d.join("m.csv")).unwrap();
    assert!(mask.n_missing() > 0);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(meta["spec"]["p_missing"], 0.25);

    for method in ["col-mean", "knn", "soft-impute", "ice", "featurized-ridge", "ensemble"] {
        let out = format!("{method}.csv");
        let o = missbench(&["impute", "--data", "y.csv", "--mask", "m.csv", "--method", method, "--out", &out], d);
        assert!(o.status.success(), "{method}: {}", stderr(&o));
        let (_, completed) = read_numeric_csv(&d.join(&out)).unwrap();
        for ((i, j), &v) in completed.indexed_iter() {
            assert!(v.is_finite());
            if mask.observed(i, j) {
                assert_eq!(v, data.matrix[(i, j)]);
            }
        }
        assert!(d.join(format!("{method}.json")).exists());
    }
}

#[test]
fn impute_treats_empty_cells_as_missing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("h.csv"), "a,b\n1,2\n,4\n3,\n").unwrap();
    let o = missbench(&["impute", "--data", "h.csv", "--method", "col-mean", "--out", "c.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, c) = read_numeric_csv(&d.join("c.csv")).unwrap();
    assert_eq!(c[[1, 0]], 2.0);
    assert_eq!(c[[2, 1]], 3.0);
}

fn write_datasets(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let mut state = 7u64;
    for name in ["a", "b"] {
        let v = Array2::from_shape_fn((25, 5), |(i, j)| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (i as f64 * 0.1 + j as f64) + (state >> 40) as f64 / (1u64 << 24) as f64
        });
        save_csv(&dir.join(format!("{name}.csv")), &default_columns(5), &v).unwrap();
    }
}

#[test]
fn bench_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_datasets(&d.join("data"));
    let o = missbench(
        &[
            "bench", "--datasets", "data", "--patterns", "mcar,panel,block", "--methods", "col-mean,knn,soft-impute",
            "--seeds", "2", "--jobs", "2", "--out", "out", "--adaptive-proportions", "--refresh-period", "3",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("Overall"));
    let report = load_report(&d.join("out/report.json")).unwrap();
    assert_eq!(report.cells.len(), 2 * 3 * 2 * 3);
    let traj = report.proportions.expect("trajectory recorded");
    assert_eq!(traj.points[0].step, 0);
    assert_eq!(traj.points.len(), 1 + 12 / 3);
    assert!(d.join("out/timings.json").exists());

    let o = missbench(&["report", "--input", "out/report.json", "--csv", "t.csv"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(d.join("t.csv")).unwrap(),
        std::fs::read_to_string(d.join("out/report.csv")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_datasets(&d.join("data"));
    // Config errors exit with 2.
    let o = missbench(&["bench", "--datasets", "data", "--methods", "knn", "--out", "o"], d);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = missbench(&["bench", "--datasets", "data", "--patterns", "nope", "--out", "o"], d);
    assert_eq!(o.status.code(), Some(2));
    let o = missbench(&["bench", "--datasets", "missing-dir", "--out", "o"], d);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(d.join("hole.csv"), "a,b\n1,\n").unwrap();
    let o = missbench(&["bench", "--datasets", "hole.csv", "--out", "o"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(0, 1)"));

    // A one-column dataset cannot host panel dropout: the group is dropped.
    std::fs::create_dir_all(d.join("narrow")).unwrap();
    std::fs::write(d.join("narrow/n.csv"), "a\n1\n2\n3\n4\n5\n6\n").unwrap();
    let o = missbench(
        &["bench", "--datasets", "narrow", "--patterns", "mcar,panel", "--methods", "col-mean,knn", "--seeds", "1", "--out", "o"],
        d,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let report = load_report(&d.join("o/report.json")).unwrap();
    assert_eq!(report.dropped.len(), 1);
    assert_eq!(report.dropped[0].pattern, "panel");
}
