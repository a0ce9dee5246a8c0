use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use docshift::oracle::{Endpoint, LineOracle, MaskedLm, OracleError, Predictor};
use docshift::synth;
use serde_json::{json, Value};

type Handler = Arc<dyn Fn(Value) -> Option<String> + Send + Sync>;

/// Line server on an ephemeral port; `None` from the handler means "never answer".
fn serve(handler: impl Fn(Value) -> Option<String> + Send + Sync + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handler: Handler = Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let handler = handler.clone();
            thread::spawn(move || {
                let mut w = stream.try_clone().unwrap();
                for line in BufReader::new(stream).lines() {
                    let Ok(line) = line else { break };
                    let req: Value = serde_json::from_str(&line).unwrap();
                    match handler(req) {
                        Some(reply) => writeln!(w, "{reply}").unwrap(),
                        None => thread::sleep(Duration::from_secs(5)),
                    }
                }
            });
        }
    });
    format!("tcp://{addr}")
}

fn oracle(ep: &str, timeout: Duration) -> LineOracle {
    LineOracle::connect(&ep.parse().unwrap(), timeout).unwrap()
}

fn words(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn endpoint_forms() {
    assert_eq!("tcp://h:1".parse::<Endpoint>().unwrap(), Endpoint::Tcp("h:1".into()));
    assert_eq!("h:1".parse::<Endpoint>().unwrap(), Endpoint::Tcp("h:1".into()));
    assert_eq!("unix:///tmp/s".parse::<Endpoint>().unwrap(), Endpoint::Unix("/tmp/s".into()));
    assert_eq!(
        "exec:python3 srv.py".parse::<Endpoint>().unwrap(),
        Endpoint::Exec(vec!["python3".into(), "srv.py".into()])
    );
    assert!("exec:".parse::<Endpoint>().is_err());
    assert!("nonsense".parse::<Endpoint>().is_err());
    assert_eq!("unix:///tmp/s".parse::<Endpoint>().unwrap().to_string(), "unix:///tmp/s");
}

#[test]
fn masked_lm_request_shape_and_reply() {
    let ep = serve(|req| {
        assert_eq!(req["version"], 1);
        assert_eq!(req["mask_index"], 1);
        assert_eq!(req["k"], 2);
        assert_eq!(req["words"], json!(["total", "invoice"]));
        Some(json!({"version": 1, "candidates": [{"token": "receipt", "score": 0.9}, {"token": "bill", "score": 0.1}]}).to_string())
    });
    let mut o = oracle(&ep, Duration::from_secs(5));
    let c = o.fill_mask(&words(&["total", "invoice"]), 1, 2).unwrap();
    assert_eq!(c[0].token, "receipt");
    assert_eq!(c.len(), 2);
}

#[test]
fn protocol_violations_are_reported_with_the_request() {
    let cases: Vec<(Value, &str)> = vec![
        (json!({"version": 2, "candidates": []}), "version"),
        (json!({"version": 1, "error": "model not loaded"}), "model not loaded"),
        (json!({"version": 1, "candidates": [{"token": "a", "score": 0.1}, {"token": "b", "score": 0.9}]}), "descending"),
        (json!({"nope": true}), "malformed"),
    ];
    for (reply, needle) in cases {
        let r = reply.to_string();
        let ep = serve(move |_| Some(r.clone()));
        let mut o = oracle(&ep, Duration::from_secs(5));
        let e = o.fill_mask(&words(&["a"]), 0, 1).unwrap_err().to_string();
        assert!(e.contains(needle), "{e}");
        assert!(e.contains("fill_mask request #1"), "{e}");
    }
}

#[test]
fn silent_oracle_times_out() {
    let ep = serve(|_| None);
    let mut o = oracle(&ep, Duration::from_millis(200));
    let t = Instant::now();
    let e = o.fill_mask(&words(&["a"]), 0, 1).unwrap_err();
    assert!(matches!(e, OracleError::Timeout { .. }), "{e}");
    assert!(t.elapsed() < Duration::from_secs(3));
}

#[test]
fn unreachable_endpoint() {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    let e = LineOracle::connect(&format!("tcp://{addr}").parse().unwrap(), Duration::from_secs(1))
        .err()
        .unwrap();
    assert!(matches!(e, OracleError::Unreachable { .. }));
}

#[test]
fn predictor_round_trip_and_label_count_check() {
    let ep = serve(|req| {
        let n = req["words"].as_array().unwrap().len();
        assert_eq!(req["boxes"].as_array().unwrap().len(), n);
        assert!(req["width"].as_u64().unwrap() > 0);
        Some(json!({"version": 1, "labels": vec!["other"; n]}).to_string())
    });
    let (doc, _) = synth::form_page("p", 1, 320, 240, 6);
    let mut o = oracle(&ep, Duration::from_secs(5));
    assert_eq!(o.predict(&doc).unwrap().len(), doc.word_count());

    let short = serve(|_| Some(json!({"version": 1, "labels": ["x"]}).to_string()));
    let e = oracle(&short, Duration::from_secs(5)).predict(&doc).unwrap_err().to_string();
    assert!(e.contains("labels for"), "{e}");
    assert!(e.contains("document p"), "{e}");
}

const PY_STUB: &str = r#"
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    if "mask_index" in req:
        w = req["words"][req["mask_index"]]
        out = {"version": 1, "candidates": [{"token": w, "score": 0.9}, {"token": w[::-1], "score": 0.5}]}
    else:
        out = {"version": 1, "labels": ["other"] * len(req["words"])}
    sys.stdout.write(json.dumps(out) + "\n")
    sys.stdout.flush()
"#;

fn python() -> Option<&'static str> {
    std::process::Command::new("python3")
        .arg("-c")
        .arg("pass")
        .status()
        .ok()
        .filter(|s| s.success())
        .map(|_| "python3")
}

#[test]
fn exec_endpoint_speaks_over_stdio() {
    let Some(py) = python() else {
        eprintln!("python3 not found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("stub.py");
    std::fs::write(&script, PY_STUB).unwrap();
    let ep = format!("exec:{py} {}", script.display());
    let mut o = oracle(&ep, Duration::from_secs(10));
    let c = o.fill_mask(&words(&["hello", "world"]), 1, 2).unwrap();
    assert_eq!(c[1].token, "dlrow");
    let c = o.fill_mask(&words(&["abc"]), 0, 2).unwrap();
    assert_eq!(c[0].token, "abc");
}

#[cfg(unix)]
#[test]
fn unix_socket_endpoint() {
    use std::os::unix::net::UnixListener;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.sock");
    let listener = UnixListener::bind(&path).unwrap();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut w = stream.try_clone().unwrap();
        for line in BufReader::new(stream).lines() {
            let req: Value = serde_json::from_str(&line.unwrap()).unwrap();
            let n = req["words"].as_array().unwrap().len();
            writeln!(w, "{}", json!({"version": 1, "labels": vec!["q"; n]})).unwrap();
        }
    });
    let (doc, _) = synth::form_page("u", 2, 320, 240, 3);
    let mut o = oracle(&format!("unix://{}", path.display()), Duration::from_secs(5));
    assert!(o.predict(&doc).unwrap().iter().all(|l| l == "q"));
}

mod pipeline_with_oracles {
    use super::*;
    use docshift::pipeline::{self, PipelineConfig};
    use docshift::Task;

    fn cfg(input: &std::path::Path, output: &std::path::Path, extra: &[(&str, String)]) -> PipelineConfig {
        let mut ov = vec![
            ("task".to_string(), "ie".to_string()),
            ("input".to_string(), format!("\"{}\"", input.display())),
            ("output".to_string(), format!("\"{}\"", output.display())),
        ];
        ov.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        PipelineConfig::from_parts(None, &ov).unwrap()
    }

    #[test]
    fn bert_attack_through_a_socket_pool() {
        let ep = serve(|req| {
            let w = req["words"][req["mask_index"].as_u64().unwrap() as usize].as_str().unwrap().to_string();
            Some(json!({"version": 1, "candidates": [{"token": w.clone(), "score": 0.8}, {"token": format!("{w}x"), "score": 0.2}]}).to_string())
        });
        let input = tempfile::tempdir().unwrap();
        synth::write_dataset(input.path(), Task::Ie, 4, 3).unwrap();
        let mut outs = Vec::new();
        for workers in [1, 8] {
            let out = tempfile::tempdir().unwrap();
            let mut c = cfg(
                input.path(),
                out.path(),
                &[
                    ("shift.kind", "text_bert".into()),
                    ("shift.rate", "0.5".into()),
                    ("oracle.masked_lm", format!("\"{ep}\"")),
                ],
            );
            c.workers = workers;
            let m = pipeline::run_shift(&c).unwrap();
            assert_eq!(m.summary.failed, 0);
            assert!(m.summary.changes > 0);
            outs.push(m);
        }
        assert_eq!(outs[0], outs[1]);
    }

    #[test]
    fn move_uses_predictor_strengths() {
        // labels depend on the box of each word, so shuffles change them
        let ep = serve(|req| {
            let labels: Vec<String> = req["boxes"]
                .as_array()
                .unwrap()
                .iter()
                .map(|b| format!("l{}", b[0].as_i64().unwrap() / 100))
                .collect();
            Some(json!({"version": 1, "labels": labels}).to_string())
        });
        let input = tempfile::tempdir().unwrap();
        synth::write_dataset(input.path(), Task::Ie, 2, 3).unwrap();
        let out = tempfile::tempdir().unwrap();
        let c = cfg(
            input.path(),
            out.path(),
            &[
                ("shift.kind", "layout_move".into()),
                ("shift.trials", "5".into()),
                ("shift.strength_threshold", "0".into()),
                ("oracle.predictor", format!("\"{ep}\"")),
            ],
        );
        let m = pipeline::run_shift(&c).unwrap();
        assert_eq!(m.summary.failed, 0);
        for item in &m.items {
            assert!(!item.strengths.is_empty());
            assert!(item.strengths.iter().all(|s| s.trials == 5));
        }
    }

    #[test]
    fn oracle_failure_mid_run_fails_only_that_document() {
        let ep = serve(|req| {
            let n = req["words"].as_array().unwrap().len();
            if req["id"] == "doc0001" {
                Some(json!({"version": 1, "error": "boom"}).to_string())
            } else {
                Some(json!({"version": 1, "labels": vec!["x"; n]}).to_string())
            }
        });
        let input = tempfile::tempdir().unwrap();
        synth::write_dataset(input.path(), Task::Ie, 3, 3).unwrap();
        let out = tempfile::tempdir().unwrap();
        let c = cfg(
            input.path(),
            out.path(),
            &[("shift.kind", "layout_move".into()), ("shift.trials", "3".into()), ("oracle.predictor", format!("\"{ep}\""))],
        );
        let m = pipeline::run_shift(&c).unwrap();
        assert_eq!(m.summary.failed, 1);
        let e = m.items[1].error.as_ref().unwrap();
        assert!(e.contains("trial 0") && e.contains("boom"), "{e}");
    }
}
