use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;
use varopt::wire::{decode, deserialize_sample};

fn varopt(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_varopt"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn varopt");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn ok_bytes(out: &Output) -> Vec<u8> {
    assert!(
        out.status.success(),
        "status {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout.clone()
}

fn ok(out: &Output) -> String {
    String::from_utf8(ok_bytes(out)).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn small_input_is_kept_verbatim() {
    let out = varopt(&["sample", "--k", "5", "--format", "text"], "a\t1\nb\t2\n# note\nc\t3\n");
    let sample = decode(ok(&out).as_bytes()).unwrap();
    assert_eq!(sample.len(), 3);
    for e in &sample.entries {
        assert_eq!(e.adjusted_weight, e.original_weight);
    }
    assert_eq!(sample.total_weight_seen, 6.0);
}

#[test]
fn fixed_seed_is_deterministic() {
    let input = "a\t1\nb\t1\nc\t8\n";
    let args = ["sample", "--k", "2", "--seed", "9"];
    let first = ok_bytes(&varopt(&args, input));
    assert_eq!(first, ok_bytes(&varopt(&args, input)));
    let sample = deserialize_sample(&first).unwrap();
    assert_eq!(sample.len(), 2);
    assert_eq!(sample.adjusted_total(), 10.0);
    assert_eq!(sample.get("c").unwrap().adjusted_weight, 8.0);
}

#[test]
fn empty_input_gives_empty_sample() {
    let out = varopt(&["sample", "--k", "3", "--format", "text"], "");
    let sample = decode(ok(&out).as_bytes()).unwrap();
    assert!(sample.is_empty());
    assert_eq!(sample.items_seen, 0);
}

#[test]
fn bad_lines_name_the_line() {
    let out = varopt(&["sample", "--k", "2"], "a\t1\n\nb\tnope\n");
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let out = varopt(&["sample", "--k", "2"], "a\t1\na\t2\n");
    assert!(!out.status.success());
    assert!(stderr(&out).contains("duplicate key `a`"), "{}", stderr(&out));

    let out = varopt(&["sample", "--k", "0"], "a\t1\n");
    assert!(!out.status.success());
}

#[test]
fn every_implementation_runs() {
    let input: String = (0..200).map(|i| format!("i{i}\t{}\n", 1 + i % 7)).collect();
    for imp in ["tree", "amortized", "naive"] {
        let out = varopt(&["sample", "--k", "10", "--impl", imp, "--format", "text"], &input);
        let sample = decode(ok(&out).as_bytes()).unwrap();
        assert_eq!(sample.len(), 10);
        sample.validate().unwrap();
    }
    let out = varopt(&["sample", "--k", "10", "--impl", "splay"], &input);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_file_and_merge() {
    let dir = TempDir::new().unwrap();
    let x = path(&dir, "x.bin");
    let y = path(&dir, "y.bin");
    ok_bytes(&varopt(&["sample", "--k", "1", "--out", s(&x)], "x\t2\n"));
    ok_bytes(&varopt(&["sample", "--k", "1", "--out", s(&y)], "y\t6\n"));
    for seed in 0..20 {
        let seed = seed.to_string();
        let out = varopt(&["merge", "--k", "1", "--seed", &seed, s(&x), s(&y)], "");
        let merged = deserialize_sample(&ok_bytes(&out)).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.entries[0].adjusted_weight, 8.0);
        assert_eq!(merged.total_weight_seen, 8.0);
    }
    // Only the output file remains in the directory.
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(names.len(), 2);
}

#[test]
fn merge_of_one_small_file_is_identity() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.bin");
    ok(&varopt(&["sample", "--k", "4", "--out", s(&a)], "p\t1\nq\t5\n"));
    let out = varopt(&["merge", "--k", "4", s(&a)], "");
    assert_eq!(ok_bytes(&out), std::fs::read(&a).unwrap());
}

#[test]
fn merge_errors() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.bin");
    let b = path(&dir, "b.bin");
    ok(&varopt(&["sample", "--k", "2", "--out", s(&a)], "p\t1\nq\t5\n"));
    ok(&varopt(&["sample", "--k", "3", "--out", s(&b)], "p\t2\n"));

    let out = varopt(&["merge", "--k", "3", s(&a), s(&b)], "");
    assert!(!out.status.success());
    assert!(stderr(&out).contains("a.bin"), "{}", stderr(&out));

    let out = varopt(&["merge", "--k", "2", s(&a), s(&b)], "");
    assert!(!out.status.success());
    assert!(stderr(&out).contains("duplicate key `p`"), "{}", stderr(&out));

    let mut bytes = std::fs::read(&a).unwrap();
    bytes[4] = 9;
    let bad = path(&dir, "bad.bin");
    std::fs::write(&bad, bytes).unwrap();
    let out = varopt(&["merge", "--k", "2", s(&bad)], "");
    assert!(!out.status.success());
    assert!(stderr(&out).contains("parse error"), "{}", stderr(&out));
}

#[test]
fn estimates_and_intervals() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.txt");
    ok(&varopt(
        &["sample", "--k", "2", "--seed", "1", "--format", "text", "--out", s(&a)],
        "a\t1\nb\t1\nc\t8\n",
    ));

    let all = ok(&varopt(&["estimate", s(&a)], ""));
    assert_eq!(all, "estimate\t10\n");

    let none = ok(&varopt(&["estimate", s(&a), "--prefix", "zzz"], ""));
    assert_eq!(none, "estimate\t0\n");

    let keys = path(&dir, "keys");
    std::fs::write(&keys, "c\n").unwrap();
    let heavy = ok(&varopt(
        &["estimate", s(&a), "--keys", s(&keys), "--confidence", "0.05"],
        "",
    ));
    assert_eq!(heavy, "estimate\t8\ninterval\t8\t8\n");

    let missing = path(&dir, "missing");
    let out = varopt(&["estimate", s(&a), "--keys", s(&missing)], "");
    assert_eq!(out.status.code(), Some(2));
    let out = varopt(&["estimate", s(&a), "--bogus"], "");
    assert_eq!(out.status.code(), Some(2));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("scheme,k,trials,partition,sse_mean,sigma_v,v_sigma,w_half")
    );
    lines.map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn experiment_single_trial_has_exact_total() {
    let out = ok(&varopt(
        &["experiment", "--instance", "pareto:50:1.5", "--schemes", "varopt", "--k", "5",
          "--trials", "1", "--partition", "single"],
        "",
    ));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "varopt");
    // Exact up to rounding of a sum of ~50 terms.
    assert!(rows[0][4].parse::<f64>().unwrap().sqrt() < 1e-9);
}

#[test]
fn experiment_varopt_vs_poisson() {
    let dir = TempDir::new().unwrap();
    let out_path = path(&dir, "exp.csv");
    let args = [
        "experiment", "--instance", "list:1,2,3,4", "--schemes", "varopt,poisson", "--k", "2",
        "--trials", "40000", "--partition", "single,all", "--seed", "5", "--out", s(&out_path),
    ];
    let out = varopt(&args, "");
    ok(&out);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let col = |scheme: &str, i: usize| -> f64 {
        rows.iter().find(|r| r[0] == scheme).unwrap()[i].parse().unwrap()
    };
    assert!(col("varopt", 6) < 1e-9);
    assert!((col("poisson", 6) - 20.0).abs() < 1.0, "{}", col("poisson", 6));
    let ratio = col("poisson", 7) / col("varopt", 7);
    assert!((ratio - 2.0).abs() < 0.15, "{ratio}");
    // Same flags and seed give the same bytes.
    ok(&varopt(&args, ""));
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), text);
}

#[test]
fn unknown_scheme_lists_valid_names() {
    let out = varopt(&["experiment", "--k", "2", "--schemes", "varopt,reservoir"], "");
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("reservoir") && err.contains("priority") && err.contains("ppswr"), "{err}");
}

#[test]
fn bench_reports_rows() {
    let out = ok(&varopt(
        &["bench", "--k", "1,100", "--n", "20000", "--impl", "tree,amortized,naive"],
        "",
    ));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("impl\tk\tn\tseconds\titems_per_sec\tsimple_fraction"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 6);
    let tree100 = rows.iter().find(|r| r[0] == "tree" && r[1] == "100").unwrap();
    assert!(tree100[5].parse::<f64>().unwrap() > 0.9, "{tree100:?}");
}
