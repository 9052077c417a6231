use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lindblad_osc::moments::asymptotic_covariances;
use lindblad_osc::quasiprob::{steady_state_covariance, SParameter};
use lindblad_osc::OscillatorParams;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lindblad-osc"));
    c.env_remove("LINDBLAD_OSC_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn config_header(text: &str) -> Value {
    let line = text.lines().next().unwrap();
    serde_json::from_str(line.strip_prefix("# config: ").expect("config header")).unwrap()
}

#[test]
fn gibbs_run_relaxes_to_thermal_covariances() {
    let path = config_path("gibbs.json");
    let out = stdout(&run(&["simulate", "--config", path.to_str().unwrap()]));
    let header = config_header(&out);
    assert_eq!(header["params"]["gibbs_coth"], 2.0);
    let last = csv_rows(&out).pop().unwrap();
    // ħ coth / 2mω, ħmω coth / 2 and 0 at m = ω = ħ = 1, coth = 2
    assert!((last[3] - 1.0).abs() < 1e-6);
    assert!((last[4] - 1.0).abs() < 1e-6);
    assert!(last[5].abs() < 1e-6);
    assert!((last[6] - 1.0).abs() < 1e-6, "energy {}", last[6]);
}

#[test]
fn flags_override_the_config_file() {
    let path = config_path("gibbs.json");
    let out = stdout(&run(&["simulate", "--config", path.to_str().unwrap(), "--lambda", "0.4", "--t-max", "1"]));
    let header = config_header(&out);
    assert_eq!(header["params"]["lambda"], 0.4);
    assert_eq!(header["t_max"], 1.0);
    assert_eq!(header["params"]["mu"], 0.2);
}

#[test]
fn zero_horizon_is_a_usage_error() {
    let o = run(&["simulate", "--lambda", "0.5", "--gibbs-coth", "2", "--t-max", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_max"));
}

#[test]
fn unknown_arguments_exit_with_one() {
    assert_eq!(run(&["simulate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn packet_oracle_agrees() {
    let path = config_path("packet.json");
    let out = stdout(&run(&["simulate", "--config", path.to_str().unwrap()]));
    let line = out.lines().find_map(|l| l.strip_prefix("# oracle: ")).expect("oracle line");
    let summary: Value = serde_json::from_str(line).unwrap();
    assert!(summary["max_deviation"].as_f64().unwrap() < 1e-6, "{summary}");
    assert_eq!(summary["tail_negligible"], true);
}

#[test]
fn oracle_needs_a_number_basis_state() {
    let o = run(&[
        "simulate", "--lambda", "0.5", "--gibbs-coth", "2", "--t-max", "1", "--state", "moments:0,0,1,1,0", "--oracle",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn strict_rejects_violating_parameters() {
    let args = ["simulate", "--lambda", "0.5", "--d-qq", "0.01", "--d-pp", "0.01", "--t-max", "1"];
    let o = run(&args);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(2));
}

#[test]
fn representation_outputs() {
    let out = stdout(&run(&[
        "simulate", "--lambda", "0.5", "--gibbs-coth", "2", "--t-max", "30", "--n-points", "3", "--outputs", "q,wigner,p",
    ]));
    let header = out.lines().nth(1).unwrap();
    assert_eq!(header, "t,alpha_re,alpha_im,p_11,p_22,p_12,wigner_11,wigner_22,wigner_12,q_11,q_22,q_12");
    let last = csv_rows(&out).pop().unwrap();
    assert!((last[3] - 0.25).abs() < 1e-9 && (last[6] - 0.5).abs() < 1e-9 && (last[9] - 0.75).abs() < 1e-9);
}

#[test]
fn steady_gibbs_representations() {
    let out = stdout(&run(&["steady", "--lambda", "0.5", "--mu", "0.2", "--gibbs-coth", "2"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let s11 = |rep: &str| v["representations"][rep]["sigma"][0][0].as_f64().unwrap();
    assert!((s11("p") - 0.25).abs() < 1e-12);
    assert!((s11("q") - 0.75).abs() < 1e-12);
    assert!((s11("wigner") - 0.5).abs() < 1e-12);
    assert_eq!(v["config"]["command"], "steady");
}

#[test]
fn steady_without_damping_exits_three() {
    let o = run(&["steady", "--lambda", "0", "--d-qq", "1", "--d-pp", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn steady_round_trips_library_values_exactly() {
    let p = OscillatorParams::new(1.3, 0.7, 0.9, 0.45, -0.3, 0.41, 0.37, 0.07).unwrap();
    let out = stdout(&run(&[
        "steady", "--m", "1.3", "--omega", "0.7", "--hbar", "0.9", "--lambda", "0.45", "--mu", "-0.3", "--d-qq",
        "0.41", "--d-pp", "0.37", "--d-pq", "0.07",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let inf = asymptotic_covariances(&p).unwrap();
    assert_eq!(v["sigma_inf"]["sigma_qq"].as_f64().unwrap().to_bits(), inf.sigma_qq.to_bits());
    assert_eq!(v["sigma_inf"]["sigma_pp"].as_f64().unwrap().to_bits(), inf.sigma_pp.to_bits());
    assert_eq!(v["sigma_inf"]["sigma_pq"].as_f64().unwrap().to_bits(), inf.sigma_pq.to_bits());
    let w = steady_state_covariance(&p, SParameter::Wigner).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let got = v["representations"]["wigner"]["sigma"][i][j].as_f64().unwrap();
            assert_eq!(got.to_bits(), w[i][j].to_bits());
        }
    }
}

#[test]
fn validate_catalog_models() {
    let v: Value = serde_json::from_str(&stdout(&run(&["validate", "--model", "jang-rwa"]))).unwrap();
    assert_eq!(v["expected_verdict"], "satisfied");
    assert_eq!(v["observed_verdict"], "satisfied");
    assert_eq!(v["matches"], true);

    let o = run(&["validate", "--model", "hofmann", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["observed_verdict"], "violated");

    let v: Value = serde_json::from_str(&stdout(&run(&["validate", "--model", "all"]))).unwrap();
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 11);
    assert!(reports.iter().all(|r| r["matches"] == true));
}

#[test]
fn validate_model_parameters() {
    // below the coth threshold the Gibbs entry violates its own condition
    let v: Value =
        serde_json::from_str(&stdout(&run(&["validate", "--model", "gibbs", "--param", "coth=1.01"]))).unwrap();
    assert_eq!(v["condition_holds"], false);
    assert_eq!(v["observed_verdict"], "violated");
    assert_eq!(v["config"]["model_params"]["coth"], 1.01);
    assert_eq!(run(&["validate", "--model", "gibbs", "--param", "nope=1"]).status.code(), Some(1));
    assert_eq!(run(&["validate", "--model", "nope"]).status.code(), Some(1));
}

#[test]
fn validate_explicit_parameters() {
    let v: Value =
        serde_json::from_str(&stdout(&run(&["validate", "--lambda", "0.5", "--d-qq", "0.3", "--d-pp", "0.3"]))).unwrap();
    assert_eq!(v["constraints"]["all_satisfied"], true);
    assert_eq!(v["regime"]["tag"], "Underdamped");
}

#[test]
fn density_of_coherent_state_is_poissonian() {
    let out = stdout(&run(&[
        "density", "--lambda", "0.3", "--d-qq", "0.15", "--d-pp", "0.15", "--state", "coherent:0.6,0", "--t", "0",
        "--n", "10",
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["dim"], 11);
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let a: f64 = 0.6;
    for m in 0..11 {
        for n in 0..11 {
            let z = &v["entries"][m][n];
            let expect = (-a * a).exp() * a.powi((m + n) as i32) / (fact(m) * fact(n)).sqrt();
            assert!((z["re"].as_f64().unwrap() - expect).abs() < 1e-14, "({m},{n})");
            assert!(z["im"].as_f64().unwrap().abs() < 1e-14);
        }
    }
}

#[test]
fn density_matrix_alias_and_stationary_state() {
    let out = stdout(&run(&["density-matrix", "--lambda", "0.5", "--gibbs-coth", "3", "--n", "6"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    // coth = 3 means e^{-ħω/kT} = 1/2
    let r00 = v["entries"][0][0]["re"].as_f64().unwrap();
    let r11 = v["entries"][1][1]["re"].as_f64().unwrap();
    assert!((r00 - 0.5).abs() < 1e-10 && (r11 - 0.25).abs() < 1e-10);
    assert_eq!(v["config"]["state"], "stationary");
}

#[test]
fn steady_wigner_grid_integrates_to_one() {
    let out = stdout(&run(&["distribution", "--rep", "wigner", "--steady", "--lambda", "0.5", "--mu", "0.2", "--gibbs-coth", "2"]));
    assert_eq!(out.lines().nth(1).unwrap(), "x1,x2,value");
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 241 * 241);
    let sum: f64 = rows.iter().map(|r| r[2]).sum::<f64>() * 0.05 * 0.05;
    assert!((sum - 1.0).abs() < 1e-6, "{sum}");
}

#[test]
fn coherent_p_distribution_is_singular() {
    let o = run(&["distribution", "--rep", "p", "--lambda", "0.5", "--gibbs-coth", "2", "--state", "coherent:0.3,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive definite"));
}

#[test]
fn sweep_rows_and_strictness() {
    let args = ["sweep", "--lambdas", "0.2:1:3", "--mus", "0,0.1", "--temperatures", "0,1"];
    let out = stdout(&run(&args));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2 + 12);
    assert!(lines[1].starts_with("lambda,mu,temperature,coth"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for jobs in ["1", "3"] {
        let path = dir.path().join(format!("sweep{jobs}.csv"));
        let o = bin()
            .env("LINDBLAD_OSC_JOBS", jobs)
            .args(["sweep", "--lambdas", "0.1:1:7", "--mus", "-0.3:0.3:5", "--temperatures", "0:2:4"])
            .arg("--out")
            .arg(&path)
            .output()
            .unwrap();
        assert!(o.status.success());
        files.push(std::fs::read(&path).unwrap());
        let path = dir.path().join(format!("sim{jobs}.csv"));
        let o = bin()
            .env("LINDBLAD_OSC_JOBS", jobs)
            .args(["simulate", "--lambda", "0.3", "--mu", "0.1", "--gibbs-coth", "1.5", "--t-max", "4", "--state"])
            .args(["coherent:0.2,0.7", "--outputs", "moments,energy,wigner", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(o.status.success());
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[2]);
    assert_eq!(files[1], files[3]);
}

#[test]
fn bad_job_count_is_rejected() {
    let o = bin()
        .env("LINDBLAD_OSC_JOBS", "zero")
        .args(["steady", "--lambda", "0.5", "--gibbs-coth", "2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn density_output_from_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.json");
    let o = bin()
        .args(["simulate", "--lambda", "0.4", "--gibbs-coth", "2", "--t-max", "2", "--state", "coherent:0.5,0"])
        .args(["--outputs", "moments,density", "--oracle-n", "30", "--density-out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["dim"], 31);
    let trace: f64 = (0..31).map(|k| v["entries"][k][k]["re"].as_f64().unwrap()).sum();
    assert!((trace - 1.0).abs() < 1e-9);
}
