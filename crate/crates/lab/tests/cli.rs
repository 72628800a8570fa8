use std::fs;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volterra-lab")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let o = lab(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn help_exits_0() {
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn alpha_out_of_range_is_a_parameter_error() {
    let o = lab(&["simulate", "--param", "alpha=0.6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0, 0.5)"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let o = lab(&["simulate", "--param", "alpah=0.2"]);
    assert_eq!(o.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"schema_version":1,"parameters":{"n_steps":8,"colour":"red"}}"#).unwrap();
    let o = lab(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn config_experiment_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"schema_version":1,"experiment":"holder"}"#).unwrap();
    let o = lab(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn duality_check_from_config_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("duality.json");
    let out = dir.path().join("out.csv");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"experiment":"duality-check",
            "parameters":{"theta":2.0,"x0":1.0,"t_end":0.5,"phi":"bump:[-1,1]","n_steps":64,"n_paths":2000}}"#,
    )
    .unwrap();
    let o = lab(&["duality-check", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("experiment,param_json,metric,value,stderr,pass\n"));
    assert!(!text.contains('\r'));
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert!(rows.iter().all(|r| r.len() == 6 && &r[0] == "duality-check"));
    assert!(rows.iter().all(|r| r[1].contains("\"seed\":5")));
    assert!(rows.iter().any(|r| &r[2] == "rhs"));
}

#[test]
fn output_identical_across_thread_counts() {
    let run = |threads: &str| {
        let o = lab(&["moments-check", "--threads", threads, "--param", "n_paths=3000", "--param", "n_steps=64"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}

#[test]
fn sweep_has_one_row_per_cell_and_marks_subcritical() {
    let o = lab(&[
        "sweep",
        "--param",
        "alpha_grid=[0.1,0.3]",
        "--param",
        "gamma_grid=[0.5,0.6,0.95]",
        "--param",
        "n_steps=32",
        "--param",
        "n_rep=2",
        "--param",
        "lag_max=8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rd = csv::Reader::from_reader(&o.stdout[..]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    // thresholds: 1/(2·0.9) ≈ 0.556 and 1/(2·0.7) ≈ 0.714
    let marks: Vec<&str> = rows.iter().map(|r| &r[2]).collect();
    assert_eq!(
        marks,
        ["SUBCRITICAL", "two_init_gap_max", "two_init_gap_max", "SUBCRITICAL", "SUBCRITICAL", "two_init_gap_max"]
    );
}

#[test]
fn subcritical_probe_needs_flag() {
    let args = ["pathwise-probe", "--param", "gamma=0.6", "--param", "n_steps=16", "--param", "n_rep=1"];
    let o = lab(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1/(2(1-alpha))"));
    let mut with_flag = args.to_vec();
    with_flag.push("--allow-subcritical");
    assert_eq!(lab(&with_flag).status.code(), Some(0));
}

#[test]
fn exclusion_threshold_exits_2() {
    // noise at the edge of the f64 range overflows on most paths
    let o = lab(&[
        "simulate",
        "--param",
        "sigma=const:1e308",
        "--param",
        "x0=1e308",
        "--param",
        "n_steps=64",
        "--param",
        "n_paths=50",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
