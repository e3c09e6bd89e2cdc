use std::path::PathBuf;
use std::process::{Command, Output};

const COLUMNS: &str = "theta,mu,K,r0,n,samples,seed,status,d_s1,d_s2,d_c1,d_c2,H_side1,H_side2,P1,P2,\
H_u1,H_u2,H_cond_u,H_joint_u,sum_rate,pred_d_s,pred_d_c_low,pred_d_c_high,pred_rate,pred_hu_bound,\
tail_prob,tail_prob_err";

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{name}.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

fn lrdsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrdsc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn hex(theta: &str, mu: &str, extra: &str, correlation: &str) -> String {
    format!(
        r#"
samples = 4000
seed = 5
[lattice]
family = "hexagonal"
index_scale = 4
[ladder]
theta = {theta}
mu = {mu}
{extra}
[source]
marginal = {{ kind = "gaussian", variance = 1.0 }}
correlation = {correlation}
"#
    )
}

const IDENTICAL: &str = r#"{ mode = "identical" }"#;

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(csv_text.as_bytes())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn grid_sweep_writes_one_row_per_pair() {
    let cfg = write_config(
        "grid",
        &hex("[1e-2, 5e-3, 2e-3]", "[8, 12]", "pairing = \"grid\"", IDENTICAL),
    );
    let out = lrdsc(&["--config", cfg.to_str().unwrap(), "sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), COLUMNS);
    let r = rows(&text);
    assert_eq!(r.len(), 6);
    assert!(column(&text, "status").iter().all(|s| s == "ok"));
    assert_eq!(column(&text, "mu"), ["8", "12", "8", "12", "8", "12"]);
}

#[test]
fn same_seed_same_bytes() {
    let cfg = write_config("repeat", &hex("[1e-2, 1.5e-3]", "[8, 16]", "", IDENTICAL));
    let path = cfg.to_str().unwrap();
    let a = lrdsc(&["--config", path, "sweep"]);
    let b = lrdsc(&["--config", path, "sweep"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = lrdsc(&["--config", path, "--seed", "6", "sweep"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn empty_ladder_is_rejected() {
    let cfg = write_config("empty", &hex("[]", "[]", "", IDENTICAL));
    let out = lrdsc(&["--config", cfg.to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn oversized_r0_is_rejected() {
    let cfg = write_config(
        "big_r0",
        &hex("[1e-2]", "[12]", "", IDENTICAL).replace("[source]", "[r0]\nrule = \"fixed\"\nvalue = 1.0\n[source]"),
    );
    let path = cfg.to_str().unwrap();
    let out = lrdsc(&["--config", path, "validate"]);
    assert_eq!(out.status.code(), Some(2));
    let sweep = lrdsc(&["--config", path, "sweep"]);
    assert!(sweep.status.success());
    assert!(column(&stdout(&sweep), "status")[0].starts_with("skipped"));
}

#[test]
fn toy_configs_validate() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["line_toy", "square_toy", "hex_toy"] {
        let path = root.join(format!("{name}.toml"));
        let out = lrdsc(&["--config", path.to_str().unwrap(), "--samples", "3000", "validate"]);
        let text = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{name}: {text}");
        assert!(text.lines().all(|l| l.starts_with("PASS")), "{name}: {text}");
    }
}

#[test]
fn small_mu_needs_the_unsafe_flag() {
    let cfg = write_config("mu2", &hex("[1e-2]", "[2]", "", IDENTICAL));
    let path = cfg.to_str().unwrap();
    let out = lrdsc(&["--config", path, "sweep"]);
    assert!(column(&stdout(&out), "status")[0].starts_with("skipped"));
    let out = lrdsc(&["--config", path, "--unsafe-small-mu", "sweep"]);
    assert!(out.status.success());
    assert_eq!(column(&stdout(&out), "status")[0], "unsupported-by-theory");
}

#[test]
fn central_upper_prediction_grows_with_the_tail() {
    let mut high = Vec::new();
    for (name, corr) in [
        ("rho1", IDENTICAL.to_string()),
        (
            "rho9999",
            r#"{ mode = "gaussian-correlated", rho = 0.9999 }"#.to_string(),
        ),
    ] {
        let cfg = write_config(name, &hex("[1e-2]", "[8]", "", &corr));
        let out = lrdsc(&["--config", cfg.to_str().unwrap(), "sweep"]);
        assert!(out.status.success());
        let text = stdout(&out);
        let tail: f64 = column(&text, "tail_prob")[0].parse().unwrap();
        let low: f64 = column(&text, "pred_d_c_low")[0].parse().unwrap();
        let h: f64 = column(&text, "pred_d_c_high")[0].parse().unwrap();
        assert!(h >= low);
        if name == "rho1" {
            assert_eq!(tail, 0.0);
            assert_eq!(h, low);
        }
        high.push(h);
    }
    assert!(high[1] > high[0], "{high:?}");
}

#[test]
fn json_mirrors_csv() {
    let cfg = write_config("json", &hex("[1e-2]", "[8]", "", IDENTICAL));
    let out = lrdsc(&["--config", cfg.to_str().unwrap(), "--format", "json", "sweep"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn theory_and_lattice_info_run() {
    let out = lrdsc(&["theory", "--h", "2", "--d-s", "0.1", "--d-c", "1e-3,1e-4"]);
    assert!(out.status.success());
    assert_eq!(column(&stdout(&out), "gap"), ["0.5", "0.5"]);

    let out = lrdsc(&["lattice-info", "--family", "integer-grid", "--n", "2", "--scale", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["geometry"]["volume"], 0.25);

    let cfg = write_config("info", &hex("[1e-2]", "[8]", "", IDENTICAL));
    let out = lrdsc(&["--config", cfg.to_str().unwrap(), "lattice-info"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["K"], 16);
    assert_eq!(v[0]["M"], 64);
}
