use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use xorsat_core::format::{parse_graph, parse_instance};
use xorsat_core::hamiltonian::is_hamiltonian_cycle;
use xorsat_core::{brute_force_solutions, BinVec};

const THREE_CLAUSE: &str = "p occ 5 3 1\n1 -2 3 0\n2 -3 4 0\n3 4 5 0\n";
const PARITY_CONFLICT: &str = "p occ 3 2 1\n1 2 3 0\nq=2 1 2 3 0\n";
const K4: &str = "p edge 4 6\ne 1 2\ne 1 3\ne 1 4\ne 2 3\ne 2 4\ne 3 4\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xorsat-reduce"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn gen_is_deterministic_and_parseable() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.occ");
    let b = dir.path().join("b.occ");
    for out in [&a, &b] {
        let o = run(&[
            "gen",
            "--n",
            "30",
            "--alpha",
            "0.789",
            "--p",
            "3",
            "--q",
            "1",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let inst = parse_instance(&text).unwrap();
    assert_eq!((inst.n(), inst.m()), (30, 23));
    assert!(inst.is_locked());
    assert!(run(&["solve", a.to_str().unwrap()]).status.success());
}

#[test]
fn gen_failure_exits_with_generation_code() {
    let o = run(&["gen", "--n", "30", "--alpha", "0.2"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!o.stderr.is_empty());
}

#[test]
fn solve_and_count_agree_with_brute_force() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "three.occ", THREE_CLAUSE);
    let truth = brute_force_solutions(&parse_instance(THREE_CLAUSE).unwrap()).unwrap();

    let count = json(&run(&["count", &path, "--json"]));
    assert_eq!(count["count"].as_u64().unwrap(), truth.len() as u64);
    assert_eq!(count["status"], format!("COUNT={}", truth.len()));
    assert_eq!(
        (count["k"].as_u64(), count["m_prime"].as_u64()),
        (Some(2), Some(3))
    );

    let solve = json(&run(&["solve", &path, "--json"]));
    assert_eq!(solve["status"], "SAT");
    let x: BinVec = solve["assignment"].as_str().unwrap().parse().unwrap();
    assert!(truth.iter().any(|a| a.values() == &x));
}

#[test]
fn human_and_json_outputs_agree() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "three.occ", THREE_CLAUSE);
    for cmd in ["solve", "count", "backtrack", "grover", "grover-cost"] {
        let text = stdout(&run(&[cmd, &path, "--seed", "3"]));
        let j = json(&run(&[cmd, &path, "--seed", "3", "--json"]));
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            j["status"].as_str().unwrap(),
            "{cmd}"
        );
        for line in lines {
            let (key, value) = line.split_once(": ").unwrap();
            let expected = match &j[key] {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            assert_eq!(value, expected, "{cmd} {key}");
        }
    }
}

#[test]
fn parity_conflict_is_certified() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "conflict.occ", PARITY_CONFLICT);
    for cmd in ["solve", "count", "backtrack", "grover"] {
        let o = run(&[cmd, &path]);
        assert!(o.status.success(), "{cmd}");
        let text = stdout(&o);
        assert!(text.starts_with("UNSAT (XOR-certified)"), "{cmd}: {text}");
        assert!(text.contains("witness_clauses: [1,2]"), "{cmd}: {text}");
    }
}

#[test]
fn parse_error_reports_line_and_code() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.occ", "p occ 3 1 1\n1 2 9 0\n");
    let o = run(&["solve", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn guard_exceedance_exits_with_guard_code() {
    let dir = TempDir::new().unwrap();
    // 31 unconstrained variables exceed the enumeration guard of 30.
    let path = write(&dir, "wide.occ", "p occ 32 1 1\n1 2 0\n");
    let o = run(&["count", &path]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("guard"));
    let o = run(&["grover", &path]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn hc_on_complete_graph_returns_a_four_cycle() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "k4.graph", K4);
    let j = json(&run(&["hc", &path, "--json"]));
    assert_eq!(j["status"], "HAMILTONIAN");
    assert_eq!(j["rank"], 3);
    let g = parse_graph(K4).unwrap();
    let mut x = BinVec::zeros(g.n_edges());
    let edges = j["cycle_edges"].as_array().unwrap();
    assert_eq!(edges.len(), 4);
    for e in edges {
        let (u, v) = (
            e[0].as_u64().unwrap() as usize - 1,
            e[1].as_u64().unwrap() as usize - 1,
        );
        let idx = g.edges().iter().position(|&p| p == (u, v)).unwrap();
        x.set(idx, true);
    }
    assert!(is_hamiltonian_cycle(&g, &x).unwrap());
}

#[test]
fn generated_graph_is_readable_by_hc() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.graph");
    let o = run(&[
        "gen",
        "--graph",
        "cubic",
        "--n",
        "10",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let j = json(&run(&["hc", path.to_str().unwrap(), "--json"]));
    assert_eq!(j["rank"], 9);
    assert_eq!(j["cost_exponent"], 3.0);
}

fn sweep(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = dir.join(name);
    let mut full = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let o = run(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out).unwrap()
}

fn check_rows(csv: &str) {
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# xorsat-reduce v0.1.0 schema=1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for line in lines.filter(|l| l.starts_with("sample,")) {
        let cells: Vec<&str> = line.split(',').collect();
        let num = |name: &str| cells[col(name)].parse::<usize>().unwrap();
        assert_eq!(num("delta_k"), num("M") - num("m_prime"));
        assert_eq!(num("k"), num("n") - num("m_prime"));
    }
}

#[test]
fn kernel_sweep_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let args = [
        "sweep-kernel",
        "--n",
        "30,60",
        "--alpha",
        "1.0",
        "--samples",
        "20",
        "--seed",
        "9",
    ];
    let one = sweep(
        dir.path(),
        "a.csv",
        &[&args[..], &["--threads", "1"]].concat(),
    );
    let four = sweep(
        dir.path(),
        "b.csv",
        &[&args[..], &["--threads", "4"]].concat(),
    );
    assert_eq!(one, four);
    check_rows(&one);
    assert_eq!(one.lines().filter(|l| l.starts_with("summary,")).count(), 2);
}

#[test]
fn kernel_sweep_with_one_sample_has_one_row_per_n() {
    let dir = TempDir::new().unwrap();
    let csv = sweep(
        dir.path(),
        "k.csv",
        &[
            "sweep-kernel",
            "--n",
            "30,60,120",
            "--alpha",
            "0.9",
            "--samples",
            "1",
        ],
    );
    assert_eq!(csv.lines().filter(|l| l.starts_with("sample,")).count(), 3);
}

#[test]
fn tree_sweep_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = [
        "sweep-tree",
        "--problem",
        "occ2in4",
        "--n",
        "12,15",
        "--alpha",
        "0.707",
        "--samples",
        "10",
        "--perm-trials",
        "5",
        "--seed",
        "4",
    ];
    let a = sweep(dir.path(), "a.csv", &args);
    let b = sweep(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    check_rows(&a);
}
