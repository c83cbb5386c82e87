//! The nine acceptance criteria, one line each. Runs without the libtest
//! harness so the lines are always printed.

use std::path::Path;
use std::process::Command;

use solitonlab_cli::verify::{run_suite, Settings, SUITES};

fn report(n: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!("criterion {n} {name}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn criterion(n: u32) -> bool {
    let (name, _, _) = SUITES.iter().find(|s| s.1 == n).copied().expect("suite exists");
    match run_suite(name, &Settings::default()) {
        Ok(s) => {
            for r in s.rows.iter().filter(|r| !r.pass) {
                println!("    failed: {} = {:?} ({:?})", r.check, r.value, r.bound);
            }
            let failed = s.rows.iter().filter(|r| !r.pass).count();
            report(n, name, s.pass, &format!("({} rows, {failed} failed)", s.rows.len()))
        }
        Err(e) => report(n, name, false, &format!("(error: {e})")),
    }
}

fn verify_json(cwd: &Path, jobs: usize) -> Vec<u8> {
    std::fs::create_dir_all(cwd).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_solitonlab"))
        .current_dir(cwd)
        .args(["--seed", "7", "--jobs", &jobs.to_string(), "--out", "out", "verify"])
        .output()
        .expect("run solitonlab");
    if out.status.code() != Some(0) {
        println!("    jobs {jobs}: exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    }
    std::fs::read(cwd.join("out/verify.json")).expect("verify.json")
}

fn reproducibility() -> bool {
    let tmp = tempfile::tempdir().unwrap();
    let runs: Vec<(usize, Vec<u8>)> = [1, 1, 8, 8]
        .iter()
        .enumerate()
        .map(|(i, &j)| (j, verify_json(&tmp.path().join(format!("run{i}")), j)))
        .collect();
    let first = &runs[0].1;
    let same = runs.iter().all(|(_, b)| b == first);
    if !same {
        for (j, b) in &runs {
            println!("    jobs {j}: {} bytes", b.len());
        }
    }
    report(
        9,
        "reproducibility",
        same,
        &format!("(2 runs at --jobs 1, 2 at --jobs 8, {} bytes each)", first.len()),
    )
}

fn main() {
    let mut results: Vec<bool> = (1..=8).map(criterion).collect();
    results.push(reproducibility());
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed} of {} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
