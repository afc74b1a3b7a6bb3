use std::process::Command;

fn liftc(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_liftc"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn value(stdout: &str, label: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(label).and_then(|v| v.strip_prefix(' ')))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| panic!("no {label} line in {stdout:?}"))
}

fn scratch(name: &str, text: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    (dir, path.to_string_lossy().into_owned())
}

#[test]
fn ground_example_at_size_one() {
    let (code, out, _) = liftc(&["ground", "networks/example1.mln", "--pop", "x=1", "--pop", "m=1"]);
    assert_eq!(code, 0);
    assert!((value(&out, "Z") - 13.5967).abs() < 1e-4);
    assert!((value(&out, "lnZ") - 13.596719647741391f64.ln()).abs() < 1e-12);
}

#[test]
fn empty_model_has_unit_z() {
    let (_d, path) = scratch("empty.mln", "# nothing\n");
    let (code, out, _) = liftc(&["ground", &path]);
    assert_eq!(code, 0);
    assert_eq!(value(&out, "Z"), 1.0);
}

#[test]
fn eval_matches_ground_and_reports_stats() {
    let args = ["networks/network2.mln", "--pop", "x=2", "--pop", "m=2"];
    let (_, ground, _) = liftc(&[&["ground"], &args[..]].concat());
    let (code, out, _) = liftc(&[&["eval", "--stats"], &args[..]].concat());
    assert_eq!(code, 0);
    let (a, b) = (value(&ground, "Z"), value(&out, "Z"));
    assert!((a - b).abs() / a < 1e-9);
    assert!(out.contains("cache_hits") && out.contains("cache_misses"));
}

#[test]
fn large_sizes_need_log_space() {
    let args = ["eval", "networks/network2.mln", "--pop", "x=2000", "--pop", "m=2000"];
    let (code, _, err) = liftc(&args);
    assert_eq!(code, 3, "{err}");
    let (code, out, _) = liftc(&[&args[..], &["--numeric", "log"]].concat());
    assert_eq!(code, 0);
    assert!(value(&out, "lnZ").is_finite());
}

#[test]
fn usage_parse_and_precondition_errors() {
    assert_eq!(liftc(&["frobnicate"]).0, 1);
    assert_eq!(liftc(&["eval"]).0, 1);
    assert_eq!(liftc(&["eval", "networks/network2.mln", "--order", "A,B"]).0, 1);
    let (_d, bad) = scratch("bad.mln", "population x 5\nwf 0.3 : T(x\n");
    let (code, _, err) = liftc(&["eval", &bad]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
    let (_d2, over) = scratch("over.mln", "population x 5\nwf 0.3 : T(x)\nobserve count T(x) = 7\n");
    assert_eq!(liftc(&["ground", &over]).0, 1);
    assert_eq!(liftc(&["ground", "networks/network2.mln"]).0, 1);
}

#[test]
fn compile_writes_program_and_prune_shrinks_it() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.c");
    let pruned = dir.path().join("pruned.c");
    let logp = dir.path().join("log.c");
    let p = |x: &std::path::Path| x.to_string_lossy().into_owned();
    assert_eq!(liftc(&["compile", "networks/example1.mln", "-o", &p(&plain)]).0, 0);
    assert_eq!(liftc(&["compile", "networks/example1.mln", "--prune", "-o", &p(&pruned)]).0, 0);
    assert_eq!(liftc(&["compile", "networks/example1.mln", "--numeric", "log", "-o", &p(&logp)]).0, 0);
    let (a, b) = (std::fs::read_to_string(&plain).unwrap(), std::fs::read_to_string(&pruned).unwrap());
    assert!(b.lines().count() <= a.lines().count());
    assert!(a.contains("printf(\"Z "));
    assert!(std::fs::read_to_string(&logp).unwrap().contains("printf(\"lnZ "));
    assert_eq!(liftc(&["compile", "networks/example1.mln"]).0, 1);
}

#[test]
fn run_agrees_with_eval() {
    let (_, e, _) = liftc(&["eval", "networks/example1.mln"]);
    for extra in [&["--prune"][..], &["--no-opt"][..], &["--numeric", "log"][..]] {
        let (code, out, err) = liftc(&[&["run", "networks/example1.mln"][..], extra].concat());
        assert_eq!(code, 0, "{err}");
        let got = if out.starts_with("lnZ") { value(&out, "lnZ").exp() } else { value(&out, "Z") };
        assert!((got - value(&e, "Z")).abs() / got < 1e-12);
    }
}

#[test]
fn broken_toolchain_exit_code() {
    let out = Command::new(env!("CARGO_BIN_EXE_liftc"))
        .args(["run", "networks/example1.mln"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("LIFTC_TOOLCHAIN", "/nonexistent/cc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bench_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let args = [
        "bench",
        "networks/network2.mln",
        "--pops",
        "10,100",
        "--modes",
        "interpret-ir,compiled",
        "--csv",
        &csv.to_string_lossy(),
    ];
    let (code, _, err) = liftc(&args);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "network,pop,mode,gen_s,cc_s,run_s,lnZ,error");
    assert_eq!(lines.len(), 5);
    for pair in lines[1..].chunks(2) {
        let lnz = |l: &str| l.split(',').nth(6).unwrap().parse::<f64>().unwrap();
        let (a, b) = (lnz(pair[0]), lnz(pair[1]));
        assert!((a - b).abs() / a.abs() < 1e-6);
    }
    assert_eq!(liftc(&["bench", "networks/network2.mln", "--pops", ""]).0, 1);
    assert_eq!(liftc(&["bench", "networks/network2.mln", "--pops", "2", "--modes", "fast"]).0, 1);
}
