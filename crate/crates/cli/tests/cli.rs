use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wpvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpvol"))
        .args(args)
        .env_remove("WPVOL_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn volumes_prints_exact_and_numeric() {
    let o = wpvol(&["volumes", "--g", "2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("V_{2,0} = 43/2160 π^6\n"), "{s}");
    assert!(s.contains("1.9138766353"));
    let o = wpvol(&["volumes", "--g", "1", "--n", "1", "--lengths", "0"]);
    assert!(stdout(&o).contains("1/12 π^2"));
    let o = wpvol(&["volumes", "--g", "4", "--n", "2"]);
    assert!(o.status.success() && stdout(&o).starts_with("V_{4,2} = "));
    let o = wpvol(&["volumes", "--g", "1", "--n", "1", "--polynomial"]);
    let s = stdout(&o);
    assert!(s.contains("half_length_exponents,coefficient,value"), "{s}");
    // V_{1,1}(2L) = L²/12 + π²/12
    assert!(s.contains("\n1,1/12,") && s.contains("\n0,1/12 π^2,"), "{s}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(wpvol(&["nonsense"]).status.code(), Some(2));
    assert_eq!(wpvol(&["volumes", "--g", "0", "--n", "2"]).status.code(), Some(2));
    assert_eq!(wpvol(&["--digits", "10", "volumes", "--g", "2"]).status.code(), Some(2));
    assert_eq!(
        wpvol(&["spectral", "sweep", "--b", "", "--kappa", "0.1", "--g", "1e3"])
            .status
            .code(),
        Some(2)
    );
    let o = wpvol(&[
        "--output",
        "/nonexistent-dir/x.csv",
        "strata",
        "census",
        "--gmax",
        "2",
        "--kmax",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot write output"));
}

#[test]
fn verify_coeff_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("coeff.csv");
    let o = wpvol(&["verify", "coeff", "--gmax", "6", "--output", p(&out), "--gnuplot"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# wpvol-out v1 Verify(Coeff"));
    assert_eq!(lines.next().unwrap(), "params,slack,normalized");
    assert!(lines.next().unwrap().starts_with("g=2 n=1 d="));
    // fields with commas are quoted
    assert!(csv.contains("\"g=2 n=2 d=1,1\","));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["pass"], true);
    assert!(summary["constant"].as_f64().unwrap() > 0.0);
    let gp = fs::read_to_string(out.with_extension("gp")).unwrap();
    assert!(gp.contains("plot 'coeff.csv' using 2:3"));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str, args: &[&str]| {
        let out = dir.path().join(name);
        let mut all = vec!["--workers", workers, "--output", p(&out)];
        all.extend_from_slice(args);
        let o = wpvol(&all);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(&out).unwrap()
    };
    let coeff = ["verify", "coeff", "--gmax", "7", "--nmax", "3"];
    assert_eq!(run("1", "a.csv", &coeff), run("4", "b.csv", &coeff));
    let sweep = [
        "spectral",
        "sweep",
        "--b",
        "0.26,0.3",
        "--kappa",
        "0.1,0.2",
        "--g",
        "1e3:1e9:log",
    ];
    let a = run("1", "c.csv", &sweep);
    assert_eq!(a, run("8", "d.csv", &sweep));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "g,b,kappa,l_star,p_bound,exponent_observed"
    );
    assert_eq!(text.lines().count(), 2 + 2 * 2 * 7);
    let json = ["--format", "json", "thin", "bracket", "--g", "4,5", "--eps", "0.1,0.2"];
    assert_eq!(run("1", "e.json", &json), run("3", "f.json", &json));
}

#[test]
fn cache_round_trip_merge_and_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cache");
    let b = dir.path().join("b.cache");
    let o = wpvol(&["cache", "export", "--upto", "4", "--output", p(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    // load into a working cache, save again: identical bytes
    let work = dir.path().join("work.cache");
    assert!(wpvol(&["--cache", p(&work), "cache", "import", p(&a)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&work).unwrap());
    // the environment variable is honored
    let o = Command::new(env!("CARGO_BIN_EXE_wpvol"))
        .args(["cache", "stats"])
        .env("WPVOL_CACHE", &work)
        .output()
        .unwrap();
    assert!(stdout(&o).contains("pairs "), "{}", stdout(&o));
    assert!(!stdout(&o).contains("pairs 0"));

    let o = wpvol(&["--cache", p(&b), "volumes", "--g", "3", "--n", "3"]);
    assert!(o.status.success());
    let merged = dir.path().join("m.cache");
    let o = wpvol(&["cache", "merge", p(&a), p(&b), "--output", p(&merged)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let keys = |path: &Path| -> std::collections::BTreeSet<String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .map(String::from)
            .collect()
    };
    let union: std::collections::BTreeSet<String> = keys(&a).union(&keys(&b)).cloned().collect();
    assert_eq!(keys(&merged), union);
    assert!(wpvol(&["cache", "verify", p(&merged)]).status.success());

    // corrupt one shared value
    let text = fs::read_to_string(&a).unwrap();
    let line = text.lines().find(|l| l.starts_with("1,1,1|")).unwrap().to_string();
    let bad = dir.path().join("bad.cache");
    fs::write(&bad, text.replace(&line, "1,1,1|0:1/25")).unwrap();
    let o = wpvol(&["cache", "merge", p(&a), p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1,1,1"), "{}", stderr(&o));
    let o = wpvol(&["cache", "verify", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));

    let old = dir.path().join("old.cache");
    fs::write(&old, text.replacen("wpvol-cache v1", "wpvol-cache v0", 1)).unwrap();
    let o = wpvol(&["--cache", p(&old), "volumes", "--g", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delete the file"), "{}", stderr(&o));
}

#[test]
fn checks_report_failures_with_exit_1() {
    let o = wpvol(&["geodesics", "annulus", "--delta", "0.5", "--t", "1", "--ell", "2.2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "count 4\nbound 6.4\n");
    let o = wpvol(&["strata", "census", "--gmax", "4", "--kmax", "3", "--qmax", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("g,k,q,q_prime,count,labeled,bound,holds"));
    let o = wpvol(&["spectral", "check"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(",true")).count(), 4);
    // Δ at g = 10 exceeds Δ at g = 8 for the unit indicator
    let o = wpvol(&["thin", "report", "--g", "8,10", "--require-decreasing"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let o = wpvol(&["thin", "report", "--g", "6,8", "--require-decreasing"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn profile_dump_and_strata_list() {
    let o = wpvol(&["spectral", "profile", "--grid", "128"]);
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 129);
    let mid: Vec<f64> = s
        .lines()
        .nth(64)
        .unwrap()
        .split(' ')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(mid[0], 0.0);
    assert!(mid[1] > 0.0);
    let o = wpvol(&["strata", "list", "--g", "2", "--k", "1", "--q", "1"]);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn help_describes_each_command() {
    for cmd in [
        vec!["volumes"],
        vec!["verify", "coeff"],
        vec!["verify", "sinh"],
        vec!["thin", "bracket"],
        vec!["thin", "report"],
        vec!["strata", "census"],
        vec!["geodesics", "sweep"],
        vec!["spectral", "sweep"],
        vec!["spectral", "check"],
        vec!["cache", "merge"],
    ] {
        let mut args = cmd.clone();
        args.push("--help");
        let o = wpvol(&args);
        assert!(o.status.success());
        let first = stdout(&o).lines().next().unwrap_or("").to_string();
        assert!(first.len() > 20, "{cmd:?}: {first}");
    }
}
