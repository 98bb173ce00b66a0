use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lmm-interp"))
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("binary runs")
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn sweep_writes_wide_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["sweep", "--figure", "3", "--method", "all", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&dir.path().join("forward_rates.csv")),
        "maturity,method1,method2,baseline"
    );
    assert_eq!(
        header(&dir.path().join("libor_rates.csv")),
        "start,method1,method2,baseline"
    );
    let cfg = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert!(cfg.contains("figure = 3"));
}

#[test]
fn dynamics_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = run(&[
            "dynamics",
            "--figure",
            "5",
            "--seed",
            "11",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let fa = std::fs::read(a.join("dynamics_method2.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("dynamics_method2.csv")).unwrap());
    assert_eq!(
        header(&a.join("dynamics_method2.csv")),
        "time,rate_kind,maturity_or_ttm,limit,value"
    );
}

#[test]
fn impvol_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "impvol",
        "--figure",
        "7",
        "--paths",
        "2000",
        "--method",
        "all",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("impvol.csv")).unwrap();
    assert!(text.starts_with("T,mc_implied,mc_lo,mc_hi,approx_implied,method"));
    assert_eq!(text.lines().count(), 1 + 2 * 11);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "figure = 6\nt_star = 5\n").unwrap();
    let o = run(&["sweep", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("figure 6"));
    assert_eq!(run(&["sweep", "--figure", "9"]).status.code(), Some(2));
    assert_eq!(
        run(&["impvol", "--figure", "6", "--method", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["impvol", "--figure", "6", "--paths", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "figure = custom\ncurve = 2\nvol = flat:0.2\nt_star = 3\nmethod = 1\noutput_dir = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("forward_rates.csv")), "maturity,method1");
}
