//! End-to-end runs of the `exitsim` binary on the bundled SIR model.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sir_model() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models/sir.json")
}

fn exitsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exitsim"))
        .args(args)
        .output()
        .expect("spawn exitsim")
}

fn run(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let model = sir_model();
    let mut args = vec![
        sub,
        "--model",
        model.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    exitsim(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows as maps from column name to raw field.
fn read_csv(path: &Path) -> Vec<Vec<(String, String)>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            header
                .iter()
                .cloned()
                .zip(r.iter().map(String::from))
                .collect()
        })
        .collect()
}

fn get<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .1
}

fn without_column(path: &Path, name: &str) -> Vec<Vec<(String, String)>> {
    read_csv(path)
        .into_iter()
        .map(|r| r.into_iter().filter(|(k, _)| k != name).collect())
        .collect()
}

#[test]
fn simulate_accounts_for_every_trajectory() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "simulate",
        dir.path(),
        &["--method", "ssa", "--samples", "10000", "--seed", "1"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read_csv(&dir.path().join("summary.csv"));
    let row = &summary[0];
    let exited: u64 = get(row, "n_exited").parse().unwrap();
    let censored: u64 = get(row, "n_censored").parse().unwrap();
    assert_eq!(exited + censored, 10_000);
    assert_eq!(get(row, "gamma_draws"), "0");
    assert_eq!(read_csv(&dir.path().join("histogram.csv")).len(), 200);
}

#[test]
fn zero_samples_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "simulate",
        dir.path(),
        &["--method", "ssa", "--samples", "0", "--seed", "1"],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--samples"));
}

#[test]
fn too_few_bins_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "simulate",
        dir.path(),
        &[
            "--method",
            "ssa",
            "--samples",
            "10",
            "--seed",
            "1",
            "--bins",
            "9",
        ],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_physics_arguments_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    let no_eps = run(
        "simulate",
        dir.path(),
        &["--method", "exit", "--samples", "10", "--seed", "1"],
    );
    assert_eq!(code(&no_eps), 2, "{}", stderr(&no_eps));
    let no_seed = run(
        "simulate",
        dir.path(),
        &["--method", "ssa", "--samples", "10"],
    );
    assert_eq!(code(&no_seed), 2);
    let no_method = run("simulate", dir.path(), &["--samples", "10", "--seed", "1"]);
    assert_eq!(code(&no_method), 2);
    let stray_eps = run(
        "simulate",
        dir.path(),
        &[
            "--method",
            "ssa",
            "--epsilon",
            "0.5",
            "--samples",
            "10",
            "--seed",
            "1",
        ],
    );
    assert_eq!(code(&stray_eps), 2);
}

#[test]
fn same_flags_give_identical_outputs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let flags = [
        "--method",
        "exit",
        "--epsilon",
        "0.25",
        "--samples",
        "3000",
        "--seed",
        "9",
    ];
    assert_eq!(code(&run("simulate", a.path(), &flags)), 0);
    // a different worker count must not change the result
    let mut flags_b = flags.to_vec();
    flags_b.extend(["--workers", "3"]);
    assert_eq!(code(&run("simulate", b.path(), &flags_b)), 0);
    assert_eq!(
        fs::read(a.path().join("histogram.csv")).unwrap(),
        fs::read(b.path().join("histogram.csv")).unwrap()
    );
    assert_eq!(
        without_column(&a.path().join("summary.csv"), "wall_seconds"),
        without_column(&b.path().join("summary.csv"), "wall_seconds")
    );
}

#[test]
fn model_errors_exit_three_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    let text =
        fs::read_to_string(sir_model())
            .unwrap()
            .replacen("\"rate\": 1.5", "\"rate\": -1.5", 1);
    assert!(text.contains("-1.5"), "fixture edit did not apply");
    fs::write(&bad, text).unwrap();
    let o = exitsim(&[
        "simulate",
        "--model",
        bad.to_str().unwrap(),
        "--method",
        "ssa",
        "--samples",
        "10",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("reactions[0]"), "{}", stderr(&o));
}

#[test]
fn compare_documents_seeds_and_rho_range() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "compare",
        dir.path(),
        &["--epsilon", "0.5", "--samples", "100000", "--seed", "1"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let row = &read_csv(&dir.path().join("compare_summary.csv"))[0];
    assert_eq!(get(row, "ssa_seed"), "1");
    assert_eq!(get(row, "method_seed"), "2");
    let bins = read_csv(&dir.path().join("compare_bins.csv"));
    assert_eq!(bins.len(), 200);
    assert_eq!(
        bins[0].iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(),
        ["t_mid", "density_ssa", "density_method", "abs_error"]
    );
    let rho: f64 = get(row, "rho").parse().unwrap();
    assert!(
        (0.005..=0.05).contains(&rho),
        "rho {rho} outside [0.005, 0.05]"
    );
}

#[test]
fn compare_at_zero_epsilon_is_ks_equivalent() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "compare",
        dir.path(),
        &["--epsilon", "0", "--samples", "10000", "--seed", "3"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let row = &read_csv(&dir.path().join("compare_summary.csv"))[0];
    assert_eq!(get(row, "ks_equivalent"), "true");
}

#[test]
fn stored_reference_with_other_bins_is_a_grid_mismatch() {
    let reference = TempDir::new().unwrap();
    let o = run(
        "simulate",
        reference.path(),
        &[
            "--method",
            "ssa",
            "--samples",
            "5000",
            "--seed",
            "4",
            "--bins",
            "50",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = reference.path().to_str().unwrap();

    let out = TempDir::new().unwrap();
    let base = [
        "--epsilon",
        "0.5",
        "--samples",
        "5000",
        "--seed",
        "4",
        "--reference",
        r,
    ];
    let same = run(
        "compare",
        out.path(),
        &[&base[..], &["--bins", "50"]].concat(),
    );
    assert_eq!(code(&same), 0, "{}", stderr(&same));
    assert_eq!(read_csv(&out.path().join("compare_bins.csv")).len(), 50);
    let implied = run("compare", out.path(), &base);
    assert_eq!(code(&implied), 0, "{}", stderr(&implied));

    let other = run(
        "compare",
        out.path(),
        &[&base[..], &["--bins", "200"]].concat(),
    );
    assert_eq!(code(&other), 4);
    assert!(
        stderr(&other).contains("grids differ"),
        "{}",
        stderr(&other)
    );
}

#[test]
fn converge_writes_one_row_per_epsilon_with_nonincreasing_error() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "converge",
        dir.path(),
        &[
            "--epsilons",
            "0.5,0.25,0.125",
            "--samples",
            "100000",
            "--seed",
            "1",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(get(&rows[0], "order"), "");
    let l1: Vec<f64> = rows.iter().map(|r| get(r, "l1").parse().unwrap()).collect();
    assert!(
        l1.windows(2).all(|w| w[1] <= w[0]),
        "l1 not nonincreasing: {l1:?}"
    );
}

#[test]
fn single_epsilon_has_no_order() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "converge",
        dir.path(),
        &["--epsilons", "0.5", "--samples", "2000", "--seed", "1"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(get(&rows[0], "order"), "");
}

#[test]
fn bad_epsilon_lists_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    for eps in ["-0.5", "0.5,-0.25", "0.25,0.5", "0.5,0.5", "abc"] {
        let o = run(
            "converge",
            dir.path(),
            &["--epsilons", eps, "--samples", "10", "--seed", "1"],
        );
        assert_eq!(code(&o), 2, "{eps}: {}", stderr(&o));
    }
}
