//! Test double speaking the external-model protocol.
//!
//! Usage: `xmeter-fixture-model <mode> [arity]` with mode one of
//! `echo` (scalar sum of the inputs), `park` (the Park test function),
//! `softmax` (two-class softmax of the input sum), `nograd` (echo without
//! gradient support), `garbage`, `silent` and `crash`.

use std::io::{BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let mut args = std::env::args().skip(1);
    let mode = args.next().unwrap_or_else(|| "echo".into());
    let arity: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let reply = match mode.as_str() {
            "garbage" => {
                writeln!(out, "this is not json").ok();
                out.flush().ok();
                continue;
            }
            "silent" => {
                std::thread::sleep(std::time::Duration::from_secs(3600));
                continue;
            }
            "crash" => {
                eprintln!("fixture crashed on purpose");
                std::process::exit(7);
            }
            _ => respond(&mode, arity, &line),
        };
        writeln!(out, "{reply}").ok();
        out.flush().ok();
    }
}

fn respond(mode: &str, arity: usize, line: &str) -> Value {
    let req: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({"error": format!("bad request: {e}")}),
    };
    let x: Vec<f64> = req
        .get("x")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default();
    let arity = if mode == "park" { 6 } else { arity };
    match (mode, req.get("op").and_then(Value::as_str)) {
        ("park", Some("info")) => json!({"arity": 6, "output": "scalar", "gradient": true}),
        ("softmax", Some("info")) => json!({"arity": arity, "output": "probs", "gradient": true}),
        ("nograd", Some("info")) => json!({"arity": arity, "output": "scalar", "gradient": false}),
        (_, Some("info")) => json!({"arity": arity, "output": "scalar", "gradient": true}),
        (_, Some(_)) if x.len() != arity => json!({"error": "wrong arity"}),
        ("park", Some("predict")) => json!({"y": [park(&x)]}),
        ("park", Some("gradient")) => json!({"g": park_gradient(&x)}),
        ("softmax", Some("predict")) => {
            let p = sigmoid(x.iter().sum());
            json!({"y": [1.0 - p, p]})
        }
        ("softmax", Some("gradient")) => {
            let p = sigmoid(x.iter().sum());
            let d = p * (1.0 - p);
            let mut g = vec![-d; arity];
            g.extend(vec![d; arity]);
            json!({"g": g})
        }
        ("nograd", Some("gradient")) => json!({"error": "unsupported"}),
        (_, Some("predict")) => json!({"y": [x.iter().sum::<f64>()]}),
        (_, Some("gradient")) => json!({"g": vec![1.0; arity]}),
        _ => json!({"error": "unknown op"}),
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn park(x: &[f64]) -> f64 {
    2.0 / 3.0 * (x[0] + x[1]).exp() - x[3] * x[2].sin() + x[2]
}

fn park_gradient(x: &[f64]) -> Vec<f64> {
    let e = 2.0 / 3.0 * (x[0] + x[1]).exp();
    vec![e, e, 1.0 - x[3] * x[2].cos(), -x[2].sin(), 0.0, 0.0]
}
