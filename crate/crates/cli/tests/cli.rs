use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solitonlab"))
        .current_dir(cwd)
        .env_remove("SOLITONLAB_PRESETS")
        .args(args)
        .output()
        .unwrap()
}

fn write(cwd: &Path, name: &str, text: &str) {
    fs::write(cwd.join(name), text).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn malformed_expression_names_line_column_and_token() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[metric]\ndim = 2\ng = [[\"1 + x1 $ 2\", \"0\"], [\"0\", \"1\"]]\n");
    let o = run(d.path(), &["--config", "c.toml", "trace-soliton"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("c.toml:3:"), "{e}");
    assert!(e.contains("`$`"), "{e}");
}

#[test]
fn unknown_key_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "seed = 1\n[trace]\nlenght = 3.0\n");
    let o = run(d.path(), &["--config", "c.toml", "trace-soliton"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("c.toml:3"), "{}", stderr(&o));
}

#[test]
fn gradient_check_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "rot.toml", "[field]\npreset = \"rotation\"\n");
    write(d.path(), "rad.toml", "[field]\npreset = \"radial\"\n");
    let o = run(d.path(), &["--config", "rot.toml", "--out", "rot", "gradient-check"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!d.path().join("rot/potential.csv").exists());
    let o = run(d.path(), &["--config", "rad.toml", "--out", "rad", "gradient-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.path().join("rad/potential.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("rad/gradient-check.json")).unwrap()).unwrap();
    assert_eq!(json["command"], "gradient-check");
    assert_eq!(json["schema"], "solitonlab.output/1");
}

#[test]
fn zero_field_gives_a_straight_two_point_csv() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "z.toml",
        "[field]\npreset = \"zero\"\n[[trace.starts]]\npoint = [0.0, 0.0]\ntangent = [1.0, 0.0]\n",
    );
    let o = run(d.path(), &["--config", "z.toml", "trace-soliton"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.path().join("out/curve-0.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3, "{csv}");
    assert!(rows[0].starts_with("s,x1,x2,"));
}

#[test]
fn outputs_repeat_byte_for_byte() {
    let d = tempfile::tempdir().unwrap();
    let preset = concat!(env!("CARGO_MANIFEST_DIR"), "/presets/figure1.toml");
    let a = run(d.path(), &["--config", preset, "--out", "a", "--format", "svg", "trace-soliton"]);
    let b = run(d.path(), &["--config", preset, "--out", "a", "--format", "svg", "--jobs", "3", "trace-soliton"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let first: Vec<Vec<u8>> = ["curve-0.csv", "curve-1.csv", "trace-soliton.json", "trace-soliton.svg"]
        .iter()
        .map(|f| fs::read(d.path().join("a").join(f)).unwrap())
        .collect();
    let c = run(d.path(), &["--config", preset, "--out", "a", "--format", "svg", "trace-soliton"]);
    assert_eq!(c.status.code(), Some(0));
    for (f, bytes) in ["curve-0.csv", "curve-1.csv", "trace-soliton.json", "trace-soliton.svg"].iter().zip(first) {
        assert_eq!(fs::read(d.path().join("a").join(f)).unwrap(), bytes, "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("a/trace-soliton.json")).unwrap()).unwrap();
    assert!(json.to_string().contains("\"count\":1"), "{json}");
}

#[test]
fn render_reads_curve_csvs() {
    let d = tempfile::tempdir().unwrap();
    let preset = concat!(env!("CARGO_MANIFEST_DIR"), "/presets/figure1.toml");
    assert_eq!(run(d.path(), &["--config", preset, "--out", "t", "trace-soliton"]).status.code(), Some(0));
    let o = run(d.path(), &["--out", "r", "render", "t/curve-0.csv", "t/curve-1.csv", "--title", "pair"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(d.path().join("r/render.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.contains(">pair<"));
    let o = run(d.path(), &["--out", "r", "render", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_flags() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(d.path(), &["--jobs", "0", "verify"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(d.path(), &["verify", "--suite", "grim-reaper", "--suite", "c1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(d.path(), &["--out", "tight", "verify", "--suite", "3", "--tighten", "1e12"]);
    assert_eq!(o.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("tight/verify.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["pass"], false);
}

#[test]
fn bad_flag_is_usage() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["--format", "pdf", "verify"]).status.code(), Some(2));
}
