use std::fs;
use std::process::Command;

fn plaqed() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plaqed"));
    c.env("PLAQED_WORKERS", "2");
    c
}

fn code(c: &mut Command) -> i32 {
    c.output().unwrap().status.code().unwrap()
}

#[test]
fn sweep_from_file_with_overrides_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.toml");
    fs::write(
        &cfg,
        r#"
cluster = "10"
gamma = 0.5
delta = 0.9
sz = [0, 1]
observables = ["energies", "gaps", "structure_factor"]
q = ["all"]
levels = 2
"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = plaqed()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--delta", "0.2,0.6", "-o"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("cluster,j,gamma,delta,sz,k,level,observable,value,status\n"));
    // the flag wins over the file
    assert!(csv.contains("10,1,0.5,0.2,") && !csv.contains(",0.9,"));
    assert!(csv.lines().any(|l| l.contains("spin_gap")));

    let replay = dir.path().join("replay");
    let o = plaqed()
        .args(["sweep", "--config"])
        .arg(out.join("manifest.json"))
        .arg("-o")
        .arg(&replay)
        .env("PLAQED_WORKERS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(csv, fs::read_to_string(replay.join("results.csv")).unwrap());
}

#[test]
fn invalid_specs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cases: [&[&str]; 6] = [
        &["sweep", "--cluster", "32", "--gamma", "0", "--delta", "1"],
        &["sweep", "--cluster", "17", "--gamma", "0", "--delta", "1"],
        &["sweep", "--cluster", "16", "--gamma", "0", "--delta", "1.5"],
        &["sweep", "--cluster", "16", "--gamma", "0", "--delta", "0.5:0.1:0.1"],
        &["sweep", "--cluster", "20", "--gamma", "0", "--delta", "1", "--q", "pi/2,pi/2", "--observables", "structure_factor"],
        &["sweep", "--cluster", "16", "--gamma", "0"],
    ];
    for args in cases {
        assert_eq!(code(plaqed().args(args).arg("-o").arg(out)), 2, "{args:?}");
    }
    assert_eq!(code(plaqed().args(["figure", "fig9", "--part", "n32", "-o"]).arg(out)), 2);
    assert_eq!(code(plaqed().args(["figure", "fig1", "-o"]).arg(out)), 2);
}

#[test]
fn inspection_commands() {
    let o = plaqed().args(["dump-cluster", "16"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("N=16"));
    for section in ["[sites]", "[bonds1]", "[bonds2]", "[plaquettes]"] {
        assert!(text.contains(section), "{section}");
    }

    let o = plaqed().args(["coverings", "20", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 4);

    let o = plaqed().args(["vbs-check", "--cluster", "16", "--delta", "0.1,0.7"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let residuals: Vec<f64> = text
        .lines()
        .filter_map(|l| l.split("residual=").nth(1))
        .map(|r| r.trim().parse().unwrap())
        .collect();
    assert_eq!(residuals.len(), 8);
    assert!(residuals.iter().all(|&r| r < 1e-10));

    let o = plaqed().args(["figure", "--list"]).output().unwrap();
    assert!(String::from_utf8(o.stdout).unwrap().contains("appendix-count"));
}

#[test]
fn figure_run_writes_index() {
    let dir = tempfile::tempdir().unwrap();
    let o = plaqed().args(["figure", "appendix-count", "-o"]).arg(dir.path()).output().unwrap();
    assert!(o.status.success());
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("appendix-count/figure.json")).unwrap()).unwrap();
    assert_eq!(index["parts"].as_array().unwrap().len(), 3);
}
