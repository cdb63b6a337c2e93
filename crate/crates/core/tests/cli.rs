use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn running() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/running")
}

fn rankjoin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankjoin")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn conf() -> String {
    running().join("job.conf").to_str().unwrap().to_owned()
}

fn scores(out: &str) -> Vec<&str> {
    out.lines().map(|l| l.split('\t').next().unwrap()).collect()
}

#[test]
fn topk_two_is_truncated() {
    let o = rankjoin(&["topk", "--config", &conf(), "--k", "2"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert_eq!(scores(&stdout(&o)), ["4", "5"]);
}

#[test]
fn topk_zero_prints_nothing() {
    let o = rankjoin(&["topk", "--config", &conf(), "--k", "0"]);
    assert_eq!(stdout(&o), "");
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn topk_all_matches_oracle() {
    let o = rankjoin(&["topk", "--config", &conf(), "--k", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let oracle = rankjoin(&["oracle", "--config", &conf()]);
    assert_eq!(stdout(&o), stdout(&oracle));
    assert_eq!(scores(&stdout(&o)), ["4", "5", "7", "8", "8", "9", "11", "12"]);
    let all = rankjoin(&["enumerate", "--config", &conf()]);
    assert_eq!(stdout(&all), stdout(&o));
}

#[test]
fn config_k_and_flag_precedence() {
    // job.conf sets k=3
    let o = rankjoin(&["topk", "--config", &conf()]);
    assert_eq!(stdout(&o).lines().count(), 3);
    let o = rankjoin(&["topk", "--config", &conf(), "--rank", "lex(u,w)", "--k", "1"]);
    assert_eq!(stdout(&o), "1,1\t1,1,1,1,1\n");
}

#[test]
fn plan_running_example() {
    let o = rankjoin(&["plan", "--config", &conf()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for needle in ["width: 1", "ranking: tuple_sum (compatible)", "acyclic: yes", "edge-decomposable rankings: feasible"] {
        assert!(text.contains(needle), "missing `{needle}` in\n{text}");
    }
    // without data the plan still prints
    let q = running().join("query.txt");
    let o = rankjoin(&["plan", "--query", q.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn plan_four_path_warns() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.txt", "Q(x,y,z,w,t) :- R(x,y), S(y,z), T(z,w), U(w,t)\n");
    let o = rankjoin(&["plan", "--query", &q]);
    let text = stdout(&o);
    assert!(text.contains("edge-decomposable rankings: infeasible (path of length 4"), "{text}");
    assert!(text.contains("diameter: 4"));
}

#[test]
fn cyclic_query_needs_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.txt", "Q(x,y,z) :- R(x,y), S(y,z), T(z,x)\n");
    let o = rankjoin(&["plan", "--query", &q]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--decomp"), "{}", stderr(&o));
    let d = write(dir.path(), "t.td", "node 0: {x,y,z} cover R,S\n");
    let o = rankjoin(&["plan", "--query", &q, "--decomp", &d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("width: 2"));
}

#[test]
fn validation_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q.txt", "# header\nQ(x,y) :- R(x,y\n");
    let o = rankjoin(&["plan", "--query", &q]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("q.txt:2:"), "{}", stderr(&o));
    let o = rankjoin(&["topk", "--config", &conf(), "--rank", "lex(nope)", "--k", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn incompatible_bounded_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "p.td", "node 1: {x,y}\nnode 2: {y,z}\nnode 3: {z,w}\nnode 4: {z,u}\nroot 1\nedge 1 2\nedge 2 3\nedge 2 4\n");
    let o = rankjoin(&["topk", "--config", &conf(), "--rank", "bounded(vertex_sum; w)", "--decomp", &d, "--k", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    // generated join trees get the variables added and run
    let o = rankjoin(&["enumerate", "--config", &conf(), "--rank", "bounded(tuple_sum; z,w)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o2 = rankjoin(&["oracle", "--config", &conf(), "--rank", "bounded(tuple_sum; z,w)"]);
    assert_eq!(stdout(&o), stdout(&o2));
    assert_eq!(scores(&stdout(&o))[0], "1");
}

#[test]
fn oracle_cap_exits_4_and_missing_data_exits_1() {
    let o = rankjoin(&["oracle", "--config", &conf(), "--cap", "3"]);
    assert_eq!(o.status.code(), Some(4));
    let q = running().join("query.txt");
    let o = rankjoin(&["enumerate", "--query", q.to_str().unwrap(), "--data", "/nonexistent/rankjoin"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn bench_reports_counters() {
    let o = rankjoin(&["bench", "--config", &conf(), "--k", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let get = |key: &str| -> u64 {
        text.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap_or_else(|| panic!("{key} missing")).parse().unwrap()
    };
    assert_eq!(get("pulls"), 8);
    assert!(get("max_pops") <= 4);
    assert!(get("max_inserts") <= 4);
    assert!(get("peak_cells") <= get("initial_cells") + 4 * 8);
}

#[test]
fn gen_writes_runnable_instances() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["antichain", "diameter4", "path3"] {
        let out = dir.path().join(kind);
        let o = rankjoin(&["gen", kind, "--n", "6", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let c = out.join("job.conf");
        let e = rankjoin(&["enumerate", "--config", c.to_str().unwrap()]);
        assert_eq!(e.status.code(), Some(0), "{kind}: {}", stderr(&e));
        let oracle = rankjoin(&["oracle", "--config", c.to_str().unwrap()]);
        assert_eq!(stdout(&e), stdout(&oracle), "{kind}");
        // all three are n x n products
        assert_eq!(stdout(&e).lines().count(), 36, "{kind}");
    }
}
