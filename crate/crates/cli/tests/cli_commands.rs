use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use curvepass_cli::client::Client;
use curvepass_cli::commands::{simulate_login, Target};
use curvepass_cli::report::Report;
use curvepass_cli::simulate::{canvas_grid, ideal_stroke, Noise, SimSpec};
use curvepass_core::catalog::load_catalog;
use curvepass_core::grid::discretize;
use curvepass_core::{Cell, ImageId};
use curvepass_service::api::Canvas;
use curvepass_service::{system_clock, ServiceConfig};

const PASSWORD: &str = "img-03,img-07,img-11,img-15,img-19";

fn curvepass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvepass"))
        .args(args)
        .env_remove("CURVEPASS_CONFIG")
        .output()
        .expect("binary runs")
}

fn report_of(out: &Output) -> Report {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    Report::parse(&String::from_utf8(out.stdout.clone()).unwrap())
}

fn password() -> Vec<ImageId> {
    PASSWORD.split(',').map(ImageId::from).collect()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn catalog_gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        report_of(&curvepass(&["catalog", "gen", "--count", "24", "--seed", "7", "--out", dir.to_str().unwrap()]));
    }
    let (ta, tb) = (tree(&a), tree(&b));
    assert_eq!(ta.len(), 25);
    assert_eq!(ta, tb);
}

#[test]
fn catalog_gen_zero_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curvepass(&["catalog", "gen", "--count", "0", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn catalog_round_trip_and_degrade() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cat");
    let r = report_of(&curvepass(&["catalog", "gen", "--count", "24", "--out", dir.to_str().unwrap()]));
    let manifest = r.get("manifest").unwrap().to_owned();
    let images = load_catalog(Path::new(&manifest)).unwrap();
    assert_eq!(images.len(), 24);

    let out_dir = tmp.path().join("degraded");
    let r = report_of(&curvepass(&[
        "catalog",
        "degrade",
        "--manifest",
        &manifest,
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(r.get("images"), Some("24"));
    assert_eq!(r.get("contrast"), Some("0.4"));
    assert_eq!(r.get("brightness"), Some("70"));
    let written = tree(&out_dir);
    assert_eq!(written.len(), 24);
    assert!(written.contains_key("img-00.degraded.png"));

    let bad = curvepass(&["catalog", "degrade", "--manifest", &manifest, "--out", "x", "--contrast", "0"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn analyze_space_reports() {
    let r = report_of(&curvepass(&["analyze", "space", "-N", "24", "-n", "5"]));
    assert_eq!(r.get("space"), Some("5100480"));
    let ratio: f64 = r.get("pin_space_ratio").unwrap().parse().unwrap();
    assert!((ratio - 5_100_480.0 / 1_679_616.0).abs() < 1e-5);

    let r = report_of(&curvepass(&["analyze", "space", "-N", "3", "-n", "2"]));
    assert_eq!(r.get("space"), Some("6"));

    let bad = curvepass(&["analyze", "space", "-N", "3", "-n", "4"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}

#[test]
fn analyze_attack_counts_candidates() {
    let r = report_of(&curvepass(&[
        "analyze", "attack", "--observed", "a,b,c,d", "-n", "2", "--truth", "b,d", "-N", "24",
    ]));
    assert_eq!(r.get("candidate_count"), Some("6"));
    assert_eq!(r.get("contains_truth"), Some("true"));
    let r = report_of(&curvepass(&["analyze", "attack", "--observed", "a,b,c,d", "-n", "2", "--truth", "d,b"]));
    assert_eq!(r.get("contains_truth"), Some("false"));
}

fn loopback_config() -> ServiceConfig {
    ServiceConfig {
        listen: ([127, 0, 0, 1], 0).into(),
        data_dir: None,
        ..Default::default()
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn attack_on_a_recorded_accepted_login_contains_the_password() {
    let (addr, server) = curvepass_service::spawn(&loopback_config(), system_clock()).await.unwrap();
    let client = Client::new(format!("http://{addr}"));
    client.enroll("alice", &password()).await.unwrap();

    let ch = client.challenge("alice").await.unwrap();
    let grid = canvas_grid(&ch).unwrap();
    let stroke = ideal_stroke(&ch, &password(), &grid).unwrap();
    let at: HashMap<Cell, &ImageId> = ch
        .placement
        .iter()
        .map(|p| (Cell::new(p.cell[0], p.cell[1]), &p.image_id))
        .collect();
    let observed: Vec<&str> = discretize(&stroke, &grid).unwrap().cells().iter().map(|c| at[c].as_str()).collect();
    let polyline = stroke.points().iter().map(|p| [p.x, p.y]).collect();
    let canvas = Canvas {
        width: grid.canvas_width(),
        height: grid.canvas_height(),
    };
    let outcome = client.login(&ch.challenge_id, polyline, canvas).await.unwrap();
    assert!(outcome.accepted);
    server.abort();

    let observed = observed.join(",");
    let out = tokio::task::spawn_blocking(move || {
        curvepass(&["analyze", "attack", "--observed", &observed, "-n", "5", "--truth", PASSWORD])
    })
    .await
    .unwrap();
    let r = report_of(&out);
    assert_eq!(r.get("contains_truth"), Some("true"));
    assert!(r.get("candidate_count").unwrap().parse::<u64>().unwrap() >= 1);
}

#[test]
fn simulate_ideal_in_process_always_accepts() {
    let r = report_of(&curvepass(&[
        "simulate", "login", "--user", "alice", "--password", PASSWORD, "--runs", "100", "--noise", "ideal", "--seed",
        "3",
    ]));
    assert_eq!(r.get("runs"), Some("100"));
    assert_eq!(r.get("accept_rate"), Some("1.0000"));
    assert_eq!(r.get("reason.ok"), Some("100"));
    // Ideal strokes cross exactly the shortest chain.
    assert_eq!(r.get("mean_length"), r.get("mean_chain_minimum"));
}

#[test]
fn simulate_is_deterministic_given_seed() {
    let args = [
        "simulate", "login", "--user", "u", "--password", PASSWORD, "--runs", "50", "--noise", "jitter:30", "--seed", "9",
        "--parallel", "4",
    ];
    let (a, b) = (curvepass(&args), curvepass(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[tokio::test(flavor = "multi_thread")]
async fn simulate_jitter_rejects_only_for_drawing_reasons() {
    let spec = SimSpec {
        user: "alice".into(),
        password: password(),
        runs: 1000,
        // 0.6 of the simulated cell width.
        noise: Noise::Jitter(60.0),
        seed: 11,
        parallel: 8,
    };
    let r = simulate_login(&Target::InProcess { config: None }, &spec).await.unwrap();
    let rate: f64 = r.get("accept_rate").unwrap().parse().unwrap();
    assert!(rate < 1.0, "accept rate {rate}");
    let allowed = ["ok", "sequence_mismatch", "wrong_head", "wrong_tail", "too_long"];
    let mut total = 0;
    for line in r.to_string().lines() {
        if let Some(reason) = line.strip_prefix("reason.") {
            let (reason, count) = reason.split_once('=').unwrap();
            assert!(allowed.contains(&reason), "unexpected rejection {reason}");
            total += count.parse::<usize>().unwrap();
        }
    }
    assert_eq!(total, 1000);
}

#[tokio::test(flavor = "multi_thread")]
async fn simulate_mean_length_is_within_engine_bounds() {
    let spec = SimSpec {
        user: "alice".into(),
        password: password(),
        runs: 200,
        noise: Noise::Ideal,
        seed: 5,
        parallel: 4,
    };
    let r = simulate_login(&Target::InProcess { config: None }, &spec).await.unwrap();
    let mean: f64 = r.get("mean_length").unwrap().parse().unwrap();
    let chain_min: f64 = r.get("mean_chain_minimum").unwrap().parse().unwrap();
    assert!(mean >= chain_min && mean <= 60.0, "mean {mean}, chain minimum {chain_min}");
    assert!(r.get("max_length").unwrap().parse::<usize>().unwrap() <= 60);
}

#[tokio::test(flavor = "multi_thread")]
async fn simulate_against_a_remote_service() {
    let (addr, server) = curvepass_service::spawn(&loopback_config(), system_clock()).await.unwrap();
    let url = format!("http://{addr}");

    let u = url.clone();
    let unknown = tokio::task::spawn_blocking(move || {
        curvepass(&["simulate", "login", "--user", "ghost", "--password", PASSWORD, "--runs", "1", "--server", &u])
    })
    .await
    .unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("unknown user ghost"));

    let u = url.clone();
    let enrolled = tokio::task::spawn_blocking(move || {
        curvepass(&["enroll", "--server", &u, "--user", "bob", "--images", PASSWORD])
    })
    .await
    .unwrap();
    assert_eq!(report_of(&enrolled).get("user"), Some("bob"));

    for user in ["bob", "carol"] {
        let u = url.clone();
        let out = tokio::task::spawn_blocking(move || {
            curvepass(&[
                "simulate", "login", "--user", user, "--password", PASSWORD, "--runs", "20", "--server", &u, "--enroll",
            ])
        })
        .await
        .unwrap();
        assert_eq!(report_of(&out).get("accept_rate"), Some("1.0000"), "{user}");
    }
    server.abort();
}
