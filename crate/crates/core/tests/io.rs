use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use proxnewton::io::{parse_libsvm, write_libsvm, write_trace, write_trace_to, TraceSummary, TRACE_HEADER};
use proxnewton::problems::{make_lasso, SyntheticSpec};
use proxnewton::{solve, IterateRecord, Matrix, Method, SolverOptions, SubproblemPolicy, Vector};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_proxnewton"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn libsvm_line_with_gap() {
    let d = parse_libsvm("1 1:0.5 3:-2\n".as_bytes(), None).unwrap();
    assert_eq!(d.labels.as_slice(), &[1.0]);
    assert_eq!(d.n_features, 3);
    assert_eq!(
        d.design.row(0).iter().cloned().collect::<Vec<_>>(),
        vec![0.5, 0.0, -2.0]
    );
}

#[test]
fn zero_one_labels_become_signed() {
    let d = parse_libsvm("0 1:1\n1 2:1\n# comment\n\n0 1:2\n".as_bytes(), None).unwrap();
    assert_eq!(d.signed_labels().unwrap().as_slice(), &[-1.0, 1.0, -1.0]);
    let bad = parse_libsvm("2 1:1\n".as_bytes(), None).unwrap();
    assert!(bad.signed_labels().is_err());
}

#[test]
fn malformed_libsvm_is_rejected() {
    for text in [
        "",
        "1 0:1\n",
        "1 2:1 1:1\n",
        "x 1:1\n",
        "1 1:abc\n",
        "1 1=2\n",
        "1 2:1 2:1\n",
    ] {
        assert!(parse_libsvm(text.as_bytes(), None).is_err(), "{text:?}");
    }
    assert!(parse_libsvm("1 5:1\n".as_bytes(), Some(3)).is_err());
    assert_eq!(parse_libsvm("1 2:1\n".as_bytes(), Some(6)).unwrap().n_features, 6);
}

fn sparse_dataset() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (1usize..8, 1usize..8).prop_flat_map(|(m, n)| {
        let entry = prop_oneof![Just(0.0), any::<f64>().prop_filter("finite", |v| v.is_finite())];
        (
            prop::collection::vec(prop_oneof![Just(1.0), Just(-1.0)], m),
            prop::collection::vec(prop::collection::vec(entry, n), m),
        )
    })
}

proptest! {
    #[test]
    fn libsvm_round_trip_is_bitwise((labels, rows) in sparse_dataset()) {
        let m = labels.len();
        let n = rows[0].len();
        let labels = Vector::from_vec(labels);
        let design = Matrix::from_fn(m, n, |i, j| rows[i][j]);
        let mut buf = Vec::new();
        write_libsvm(&mut buf, &labels, &design).unwrap();
        let back = parse_libsvm(buf.as_slice(), Some(n)).unwrap();
        prop_assert_eq!(back.labels.len(), m);
        for i in 0..m {
            prop_assert_eq!(back.labels[i].to_bits(), labels[i].to_bits());
            for j in 0..n {
                // -0.0 is written as absent and reads back as +0.0
                let (a, b) = (back.design[(i, j)], design[(i, j)]);
                prop_assert!(a.to_bits() == b.to_bits() || (a == 0.0 && b == 0.0));
            }
        }
    }

    #[test]
    fn parser_never_panics(text in "[0-9 :.\\-e+#\n]{0,64}") {
        let _ = parse_libsvm(text.as_bytes(), None);
    }

    #[test]
    fn well_formed_lines_parse(label in -1i32..=1, idx in prop::collection::btree_set(1usize..50, 0..6), v in -1e3f64..1e3) {
        let mut line = label.to_string();
        for i in &idx {
            line.push_str(&format!(" {i}:{v}"));
        }
        line.push('\n');
        let d = parse_libsvm(line.as_bytes(), None).unwrap();
        prop_assert_eq!(d.n_features, idx.iter().max().copied().unwrap_or(0));
        prop_assert_eq!(d.labels[0], label as f64);
    }
}

fn record(iter: usize, t: f64, f: f64, gf: f64, lp: f64, eta: f64, counts: [u64; 4]) -> IterateRecord {
    IterateRecord {
        iter,
        t,
        f,
        norm_gf: gf,
        lambda_pred: lp,
        eta,
        inner_iters: counts[0] as usize,
        cum_fev: counts[1],
        cum_gev: counts[2],
        cum_prox: counts[3],
        elapsed_sec: 0.0,
    }
}

#[test]
fn trace_matches_hand_written_golden_file() {
    let trace = [
        record(1, 1.0, 2.5, 0.5, -1.25, 0.1, [3, 2, 2, 5]),
        record(2, 0.5, 1.0, 0.125, -0.75, 0.0625, [4, 4, 3, 10]),
        record(3, 1.0, 0.75, 0.0, -0.03125, 1e-10, [0, 5, 4, 11]),
    ];
    let mut buf = Vec::new();
    write_trace_to(&mut buf, &trace).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        std::fs::read_to_string(data("trace_golden.csv")).unwrap()
    );
}

#[test]
fn empty_trace_gives_header_and_valid_summary() {
    let lasso = make_lasso(&SyntheticSpec::lasso(1, 5, 20), 100.0).unwrap();
    let mut o = SolverOptions::new(Method::ProxNewton, SubproblemPolicy::exact());
    o.x0 = Some(Vector::zeros(5));
    let report = solve(&lasso.composite(), &o).unwrap();
    assert!(report.trace.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trace(&report, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{TRACE_HEADER}\n"));
    let json = std::fs::read_to_string(dir.path().join("t.json")).unwrap();
    let summary: TraceSummary = serde_json::from_str(&json).unwrap();
    assert_eq!(summary, TraceSummary::from_report(&report));
    assert_eq!(summary.status, "converged");
}

#[test]
fn cli_solve_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let out = cli(&[
        "solve",
        "--problem",
        "lasso",
        "--synthetic",
        "42,50,200",
        "--lambda",
        "0.1",
        "--method",
        "prox-newton",
        "--subproblem-stop",
        "exact",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    let last = text.lines().last().unwrap();
    let norm_gf: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!(norm_gf <= 1e-8);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "converged");
}

#[test]
fn cli_reads_libsvm_data() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.svm");
    std::fs::write(&file, "1 1:1\n-1 1:-1 2:0.5\n1 2:2\n0 1:-0.5\n").unwrap();
    let trace = dir.path().join("t.csv");
    let out = cli(&[
        "solve",
        "--problem",
        "logistic",
        "--data",
        file.to_str().unwrap(),
        "--lambda",
        "0.05",
        "--method",
        "prox-lbfgs",
        "--memory",
        "5",
        "--subproblem-stop",
        "fixed:10",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    // the inner solver runs exactly ten iterations per outer step
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(6), Some("10"), "{line}");
    }
}

#[test]
fn cli_usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let t = trace.to_str().unwrap();
    let base = [
        "solve",
        "--problem",
        "lasso",
        "--synthetic",
        "1,5,10",
        "--method",
        "fista",
    ];
    let missing_lambda = cli(&[&base[..], &["--subproblem-stop", "exact", "--trace", t]].concat());
    assert_eq!(missing_lambda.status.code(), Some(64));
    let bad_policy = cli(&[
        &base[..],
        &["--lambda", "0.1", "--subproblem-stop", "fixed:0", "--trace", t],
    ]
    .concat());
    assert_eq!(bad_policy.status.code(), Some(64));
    let memory_without_lbfgs = cli(&[
        &base[..],
        &[
            "--lambda",
            "0.1",
            "--memory",
            "3",
            "--subproblem-stop",
            "exact",
            "--trace",
            t,
        ],
    ]
    .concat());
    assert_eq!(memory_without_lbfgs.status.code(), Some(64));
    let missing_file = cli(&[
        "solve",
        "--problem",
        "lasso",
        "--data",
        "/nonexistent.svm",
        "--lambda",
        "0.1",
        "--method",
        "fista",
        "--subproblem-stop",
        "exact",
        "--trace",
        t,
    ]);
    assert_eq!(missing_file.status.code(), Some(1));
}

fn golden_args(trace: &str) -> Vec<String> {
    [
        "solve",
        "--problem",
        "logistic",
        "--synthetic",
        "3,10,40",
        "--lambda",
        "0.01",
        "--method",
        "prox-bfgs",
        "--subproblem-stop",
        "adaptive",
        "--no-clock",
        "--trace",
        trace,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn cli_is_deterministic_and_matches_pinned_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_proxnewton"))
            .args(golden_args(path.to_str().unwrap()))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], std::fs::read(data("logistic_bfgs_golden.csv")).unwrap());
}
