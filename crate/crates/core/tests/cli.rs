use std::fs;
use std::process::Command;

fn solve(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_solve")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn convergence_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "mode = convergence\nscheme = second-order\nmesh = [2, 4]\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, _) = solve(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("second-order"));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().contains("N/A"));

    // identical config, identical bytes
    let again = dir.path().join("again");
    solve(&["--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap(), "--quiet"]);
    assert_eq!(csv, fs::read_to_string(again.join("results.csv")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "mesh = 2\nbogus = 3\n").unwrap();
    let (code, _, stderr) = solve(&["--config", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("bogus"));

    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "mesh = 2\ntimesteps = 4\npicard_max_iterations = 1\nbeta = 1e4\n").unwrap();
    let (code, _, stderr) = solve(&["--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(code, 2, "{stderr}");

    fs::write(&cfg, "mesh = 2\ntimesteps = 4\n").unwrap();
    let reference = dir.path().join("ref.csv");
    fs::write(
        &reference,
        "epsilon,alpha,beta,scheme,inv_h,N,err_u,ord_u,err_L,ord_L,err_p,ord_p\n\
         1e0,1e0,1e0,backward-euler,2,4,1e-1,N/A,1.35e-01,N/A,6.63e-02,N/A\n",
    )
    .unwrap();
    let (code, _, stderr) = solve(&["--config", cfg.to_str().unwrap(), "--quiet", "--check-tables", reference.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
    fs::write(
        &reference,
        "epsilon,alpha,beta,scheme,inv_h,N,err_u,ord_u,err_L,ord_L,err_p,ord_p\n\
         1e0,1e0,1e0,backward-euler,2,4,2.45e-2,N/A,1.35e-01,N/A,6.63e-02,N/A\n",
    )
    .unwrap();
    let (code, stdout, _) = solve(&["--config", cfg.to_str().unwrap(), "--quiet", "--check-tables", reference.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("check passed"));
}
