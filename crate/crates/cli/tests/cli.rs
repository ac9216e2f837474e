use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stacktree::streams::{CsvStream, SchemaDecl};
use stacktree::{Family, GeneratorSpec, Instance};

fn stacktree(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stacktree"));
    cmd.args(args).env_remove("STACKTREE_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("STACKTREE_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = walk(dir)
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

/// Every column except the timing ones.
fn metric_columns(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let keep: Vec<bool> = r.headers().unwrap().iter().map(|h| !h.starts_with("elapsed")).collect();
    r.records()
        .map(|rec| {
            rec.unwrap()
                .iter()
                .zip(&keep)
                .filter(|(_, k)| **k)
                .map(|(v, _)| v.to_string())
                .collect()
        })
        .collect()
}

const MATRIX: &str = r#"
seed = 3
[prequential]
repetitions = 2
[[datasets]]
name = "fried"
generator = { family = "friedman_mt", n_examples = 1200, d = 3 }
"#;

#[test]
fn minimal_config_writes_one_report_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
        variants = ["sstht_adaptive"]
        [prequential]
        repetitions = 1
        [[datasets]]
        name = "plane"
        generator = { family = "plane_mt", n_examples = 700 }
        "#,
    );
    let out = dir.path().join("out");
    let o = stacktree(
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = csv_files(&out);
    assert_eq!(
        files,
        vec![out.join("plane/sstht_adaptive__seed1.csv"), out.join("summary.csv")]
    );
    let text = std::fs::read_to_string(&files[0]).unwrap();
    assert!(text.starts_with("window_index,armse,cum_armse,elapsed_s,model_bytes\n"));
    assert_eq!(text.lines().count(), 1 + 3, "500 evaluated examples make 3 windows");
}

#[test]
fn variant_seed_matrix_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MATRIX);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = stacktree(&["run", "--config", config.to_str().unwrap(), "--jobs", "3"], Some(out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files_a = csv_files(&a);
    assert_eq!(files_a.len(), 5 * 2 + 1);
    assert!(a.join("fried/mtrht_mean__seed4.csv").exists());
    for fa in &files_a {
        let fb = b.join(fa.strip_prefix(&a).unwrap());
        assert_eq!(metric_columns(fa), metric_columns(&fb), "{}", fa.display());
    }
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with(
        "dataset,variant,runs,armse_mean,armse_sd,elapsed_mean_s,elapsed_sd_s,model_bytes_mean,model_bytes_sd,\
         avg_rank,friedman_chi2,friedman_p,reject_h0,nemenyi_cd\n"
    ));
    assert_eq!(summary.lines().count(), 6);

    let o = stacktree(&["compare", a.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Nemenyi CD"), "{stdout}");
    assert!(a.join("comparison.csv").exists() && a.join("friedman.csv").exists());
}

#[test]
fn compare_rejects_misaligned_windows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MATRIX);
    let out = dir.path().join("out");
    assert!(stacktree(
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ],
        None
    )
    .status
    .success());
    let victim = out.join("fried/sstht__seed3.csv");
    let text = std::fs::read_to_string(&victim).unwrap();
    let trimmed: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
    std::fs::write(&victim, trimmed.join("\n") + "\n").unwrap();
    let o = stacktree(&["compare", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("misaligned"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[tree]\ngrace_period = 0\n[[datasets]]\nname = \"x\"\ngenerator = { family = \"plane_mt\", n_examples = 10 }\n");
    let o = stacktree(&["run", "--config", bad.to_str().unwrap()], Some(dir.path()));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stacktree(&["run"], None).status.code(), Some(2));
    assert_eq!(stacktree(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(
        stacktree(&["generate", "--family", "nope", "--examples", "5"], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[[datasets]]\nname = \"gone\"\ncsv = \"missing.csv\"\nschema = \"missing.schema.toml\"\n",
    );
    let o = stacktree(&["run", "--config", config.to_str().unwrap()], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generated_streams_round_trip_through_the_csv_reader() {
    let dir = tempfile::tempdir().unwrap();
    for (family, flag) in [(Family::FriedmanMt, "friedman_mt"), (Family::MvLike, "mv-like")] {
        let o = stacktree(
            &[
                "generate",
                "--family",
                flag,
                "--examples",
                "300",
                "--targets",
                "3",
                "--seed",
                "12",
                "--name",
                flag,
            ],
            Some(dir.path()),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let decl = SchemaDecl::load(&dir.path().join(format!("{flag}.schema.toml"))).unwrap();
        let read: Vec<Instance> = CsvStream::open(dir.path().join(format!("{flag}.csv")), &decl)
            .unwrap()
            .map(Result::unwrap)
            .collect();
        let mut spec = GeneratorSpec::new(family, 300, 3, 12);
        spec.noise_sd = 0.0;
        let direct: Vec<Instance> = spec.stream().unwrap().map(Result::unwrap).collect();
        assert_eq!(read.len(), 300);
        assert_eq!(read, direct, "{flag}");
    }
}

#[test]
fn csv_datasets_run_from_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(stacktree(
        &[
            "generate",
            "--family",
            "plane_mt",
            "--examples",
            "650",
            "--name",
            "plane"
        ],
        Some(&data)
    )
    .status
    .success());
    let config = write_config(
        dir.path(),
        r#"
        variants = ["mtrht_mean", "sstht"]
        [prequential]
        repetitions = 1
        [[datasets]]
        name = "plane_csv"
        csv = "data/plane.csv"
        schema = "data/plane.schema.toml"
        "#,
    );
    let out = dir.path().join("out");
    let o = stacktree(
        &[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_files(&out.join("plane_csv")).len(), 2);
}
