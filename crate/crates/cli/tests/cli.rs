use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const GRAPH_A: &str = "8 9\n1 2\n2 3\n3 4\n2 5\n5 6\n1 7\n7 8\n1 4\n2 6\n";

fn dyndfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyndfs")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn empty_stream_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let (g, st, csv) = (dir.path().join("g"), dir.path().join("s"), dir.path().join("m.csv"));
    fs::write(&g, GRAPH_A).unwrap();
    fs::write(&st, "").unwrap();
    let out = dyndfs(&["run", s(&g), s(&st), "--audit", "--csv", s(&csv)]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("index,k,n,m,"));
}

#[test]
fn graph_a_query_after_deletion() {
    let dir = tempfile::tempdir().unwrap();
    let (g, st, csv) = (dir.path().join("g"), dir.path().join("s"), dir.path().join("m.csv"));
    fs::write(&g, GRAPH_A).unwrap();
    fs::write(&st, "DE 1 2\nQC 3 7\n").unwrap();
    let out = dyndfs(&["run", s(&g), s(&st), "--audit", "--csv", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1\n");
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let valid = header.iter().position(|h| *h == "tree_valid").unwrap();
    assert_eq!(rows[0].split(',').nth(valid), Some("1"));
}

#[test]
fn parse_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (g, st) = (dir.path().join("g"), dir.path().join("s"));
    fs::write(&g, GRAPH_A).unwrap();
    fs::write(&st, "IE 1 3\nZZ 1 2\n").unwrap();
    let out = dyndfs(&["run", s(&g), s(&st)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    fs::write(&g, "3 1\n1 9\n").unwrap();
    assert_eq!(dyndfs(&["verify", s(&g), s(&st)]).status.code(), Some(1));
}

#[test]
fn generated_random_stream_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let (g, st) = (dir.path().join("g"), dir.path().join("s"));
    let gen = |seed: &str| {
        dyndfs(&[
            "gen-random", "--n", "40", "--m", "80", "--length", "1000", "--seed", seed,
            "--weights", "0.3,0.3,0.1,0.1,0.2", "--graph-out", s(&g), "--stream-out", s(&st),
        ])
    };
    assert!(gen("5").status.success());
    let first = fs::read(&st).unwrap();
    assert_eq!(fs::read_to_string(&st).unwrap().lines().count(), 1000);
    assert!(gen("5").status.success());
    assert_eq!(fs::read(&st).unwrap(), first);
    let out = dyndfs(&["verify", s(&g), s(&st), "--epoch", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("ok:"));
}

#[test]
fn adversary_files_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (g, st, csv) = (dir.path().join("g"), dir.path().join("s"), dir.path().join("m.csv"));
    let out = dyndfs(&["gen-adversary", "--n", "40", "--pairs", "3", "--graph-out", s(&g), "--stream-out", s(&st)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&st).unwrap().lines().count(), 6);
    assert!(dyndfs(&["run", s(&g), s(&st), "--audit", "--csv", s(&csv)]).status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let flips: Vec<usize> =
        text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    for pair in flips.chunks(2) {
        assert!(pair.iter().sum::<usize>() >= 40 / 2 - 3, "{flips:?}");
    }
    assert_eq!(dyndfs(&["gen-adversary", "--n", "9", "--graph-out", s(&g), "--stream-out", s(&st)]).status.code(), Some(1));
}

#[test]
fn pseudo_root_is_adjacent_to_all() {
    let dir = tempfile::tempdir().unwrap();
    let (g, out_path) = (dir.path().join("g"), dir.path().join("h"));
    fs::write(&g, "3 0\n").unwrap();
    let out = dyndfs(&["gen-pseudo-root", s(&g), "--out", s(&out_path)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "4\n");
    assert_eq!(fs::read_to_string(&out_path).unwrap(), "4 3\n1 4\n2 4\n3 4\n");
}

#[test]
fn incremental_mode_rejects_deletions() {
    let dir = tempfile::tempdir().unwrap();
    let (g, st) = (dir.path().join("g"), dir.path().join("s"));
    fs::write(&g, GRAPH_A).unwrap();
    fs::write(&st, "IE 3 8\nDE 1 2\n").unwrap();
    assert_eq!(dyndfs(&["run", s(&g), s(&st), "--mode", "incr"]).status.code(), Some(1));
    fs::write(&st, "IE 3 8\nIE 4 6\nQB 3 8\n").unwrap();
    let out = dyndfs(&["run", s(&g), s(&st), "--mode", "incr", "--audit"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1\n");
}
