use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hope::io::{parse_manifest, verify_manifest};

const TRIVIAL: &str = r#"
[wave]
k0 = 3.0
theta = 0.4
phi_inc = 0.7
polarization = "tm"
h = 0.5

[envelope]
kind = "zero"

[grid]
p_max = 2
q_max = 2

[run]
orders = 4
deltas = [0.5]
pade = [2, 2]
ls = [1, 2, 3]
"#;

const TANH: &str = r#"
[wave]
k0 = 8.0
h = 0.4

[envelope]
kind = "tanh-slab"
eps_prime = 2.25
d = 0.25
w = 50.0

[run]
orders = 8
deltas = [0.05, 0.1]
ls = [2, 4, 6]
pade = [4, 4]
k0_sweep = [7.0, 9.0]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn hope(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hope"));
    cmd.args(args).env_remove("HOPE_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run_ok(sub: &str, config: &Path, out: &Path) {
    let o = hope(
        &[
            sub,
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            "2",
        ],
        &[],
    );
    assert!(
        o.status.success(),
        "{sub}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(verify_manifest(out).unwrap().is_empty());
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn trivial_solve_scatters_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trivial.toml", TRIVIAL);
    let out = dir.path().join("run");
    run_ok("solve", &cfg, &out);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    for v in column(&summary, "scattered_energy") {
        assert!(v.parse::<f64>().unwrap() < 1e-12, "{v}");
    }
    let m = parse_manifest(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.subcommand, "solve");
    assert_eq!(m.threads, 2);
}

#[test]
fn every_subcommand_writes_a_verified_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tanh.toml", TANH);
    for sub in ["solve", "converge", "continue", "envelope-plot", "oracle"] {
        run_ok(sub, &cfg, &dir.path().join(sub));
    }
    let oracle = std::fs::read_to_string(dir.path().join("oracle/oracle.csv")).unwrap();
    assert_eq!(column(&oracle, "k0").len(), 9);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tanh.toml", TANH);
    let sums = |out: &Path| {
        let m =
            parse_manifest(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        m.files
            .into_iter()
            .map(|f| (f.path, f.sha256))
            .collect::<Vec<_>>()
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok("converge", &cfg, &a);
    let o = hope(
        &[
            "converge",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
            "--threads",
            "1",
        ],
        &[],
    );
    assert!(o.status.success());
    assert_eq!(sums(&a), sums(&b));
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trivial.toml", TRIVIAL);
    let env_dir = dir.path().join("from-env");
    let o = hope(
        &["envelope-plot", "--config", cfg.to_str().unwrap()],
        &[("HOPE_OUT_DIR", &env_dir)],
    );
    assert!(o.status.success());
    assert!(env_dir.join("manifest.json").exists());

    let flag_dir = dir.path().join("from-flag");
    let o = hope(
        &[
            "envelope-plot",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            flag_dir.to_str().unwrap(),
        ],
        &[("HOPE_OUT_DIR", &env_dir.join("unused"))],
    );
    assert!(o.status.success());
    assert!(flag_dir.join("manifest.json").exists());
    assert!(!env_dir.join("unused").exists());
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("bad.toml", "[wave]\nk0 = -1.0\nh = 0.5\n".to_string(), 2),
        (
            "typo.toml",
            "[wave]\nk0 = 1.0\nh = 0.5\nunknown = 1\n".to_string(),
            2,
        ),
        (
            "wood.toml",
            "[wave]\nk0 = 1.0\nd_x = 6.283185307179586\nh = 0.5\n[grid]\np_max = 1\n".to_string(),
            3,
        ),
        (
            "resonance.toml",
            "[wave]\nk0 = 3.141592653589793\nh = 0.5\n".to_string(),
            4,
        ),
    ];
    for (name, text, code) in cases {
        let cfg = write_config(dir.path(), name, &text);
        let o = hope(
            &[
                "solve",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ],
            &[],
        );
        assert_eq!(
            o.status.code(),
            Some(code),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = hope(
        &[
            "solve",
            "--config",
            dir.path().join("missing.toml").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_rejects_non_laminar_envelopes() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[wave]\nk0 = 2.0\nh = 0.4\n[envelope]\nkind = \"slab-gap\"\neps_prime = 2.25\nd = 0.25\ng = 0.1\nw = 50.0\n[grid]\np_max = 2\nq_max = 2\n";
    let cfg = write_config(dir.path(), "gap.toml", text);
    let o = hope(
        &[
            "oracle",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
