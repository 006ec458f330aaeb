//! Browser bindings: sample and measure random graphs, analyze pasted Pajek
//! networks, and explore the small-world verdict.

use std::path::Path;

use chaingraph::baseline::{
    compare, generate_er_gnm, verdict_from_values, CompareOptions, ComponentMetrics, ErSpec, Thresholds,
};
use chaingraph::graph::io::read_pajek;
use chaingraph::metrics::{analyze_with, AnalyzeOptions, AsplMode};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

// Exact ASPL above this many nodes gets slow in a browser tab.
const EXACT_LIMIT: usize = 3000;
const SAMPLED_SOURCES: usize = 256;

fn aspl_mode(n: usize, seed: u64) -> AsplMode {
    if n <= EXACT_LIMIT {
        AsplMode::Exact
    } else {
        AsplMode::Sampled {
            sources: SAMPLED_SOURCES,
            seed,
        }
    }
}

fn to_js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Samples G(n, m) and returns its metrics report.
pub fn er_sample_json(n: usize, m: usize, seed: u64) -> Result<Value, String> {
    let spec = ErSpec::new(n, m, seed);
    let g = generate_er_gnm(&spec).map_err(|e| e.to_string())?;
    let report = analyze_with(
        &g,
        &AnalyzeOptions {
            workers: 1,
            aspl_mode: aspl_mode(n, seed),
        },
    );
    Ok(json!({ "spec": spec, "report": report }))
}

/// Parses a Pajek network and compares it against `samples` random graphs.
pub fn analyze_pajek_json(text: &str, samples: usize, seed: u64) -> Result<Value, String> {
    let g = read_pajek(text.as_bytes(), Path::new("input")).map_err(|e| e.to_string())?;
    let options = CompareOptions {
        seed,
        samples,
        workers: 1,
        thresholds: Thresholds::default(),
        aspl_mode: aspl_mode(g.node_count(), seed),
    };
    match compare(&g, &options) {
        Ok(report) => serde_json::to_value(report).map_err(|e| e.to_string()),
        // Still show the metrics when no verdict is possible.
        Err(e) => {
            let report = analyze_with(
                &g,
                &AnalyzeOptions {
                    workers: 1,
                    aspl_mode: options.aspl_mode,
                },
            );
            Ok(json!({ "subject": report, "error": e.to_string() }))
        }
    }
}

pub fn verdict_json(
    subject_acc: f64,
    subject_aspl: f64,
    baseline_acc: f64,
    baseline_aspl: f64,
    acc_threshold: f64,
    aspl_threshold: f64,
) -> Result<Value, String> {
    let v = verdict_from_values(
        ComponentMetrics {
            acc: subject_acc,
            aspl: subject_aspl,
        },
        &[ComponentMetrics {
            acc: baseline_acc,
            aspl: baseline_aspl,
        }],
        Thresholds {
            acc: acc_threshold,
            aspl: aspl_threshold,
        },
    )
    .map_err(|e| e.to_string())?;
    serde_json::to_value(v).map_err(|e| e.to_string())
}

/// Published main-component values for the two ledgers.
pub fn presets_json() -> Value {
    json!([
        { "name": "Ethereum", "subject_acc": 0.02134, "subject_aspl": 1.4256, "baseline_acc": 0.000015, "baseline_aspl": 10.3584 },
        { "name": "Bitcoin", "subject_acc": 0.024, "subject_aspl": 190.4879, "baseline_acc": 0.000029, "baseline_aspl": 6.461 },
    ])
}

#[wasm_bindgen]
pub fn er_sample(n: usize, m: usize, seed: u64) -> Result<String, JsError> {
    to_js(er_sample_json(n, m, seed))
}

#[wasm_bindgen]
pub fn analyze_pajek(text: &str, samples: usize, seed: u64) -> Result<String, JsError> {
    to_js(analyze_pajek_json(text, samples, seed))
}

#[wasm_bindgen]
pub fn verdict(
    subject_acc: f64,
    subject_aspl: f64,
    baseline_acc: f64,
    baseline_aspl: f64,
    acc_threshold: f64,
    aspl_threshold: f64,
) -> Result<String, JsError> {
    to_js(verdict_json(
        subject_acc,
        subject_aspl,
        baseline_acc,
        baseline_aspl,
        acc_threshold,
        aspl_threshold,
    ))
}

#[wasm_bindgen]
pub fn presets() -> String {
    presets_json().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_sample_has_exact_edges_and_histogram() {
        let v = er_sample_json(100, 250, 3).unwrap();
        assert_eq!(v["report"]["edge_count"], 250);
        let hist = v["report"]["degrees"]["total_histogram"].as_array().unwrap();
        let nodes: u64 = hist.iter().map(|p| p[1].as_u64().unwrap()).sum();
        assert_eq!(nodes, 100);
        let mut again = er_sample_json(100, 250, 3).unwrap();
        again["report"]["timings"] = v["report"]["timings"].clone();
        assert_eq!(v, again);
    }

    #[test]
    fn er_sample_rejects_impossible_spec() {
        assert!(er_sample_json(4, 7, 0).unwrap_err().contains("4"));
    }

    #[test]
    fn pajek_triangle_with_tail() {
        let text = "*Vertices 4\n1 \"a\"\n2 \"b\"\n3 \"c\"\n4 \"d\"\n*Edges\n1 2 1\n2 3 1\n1 3 1\n3 4 1\n";
        let v = analyze_pajek_json(text, 2, 1).unwrap();
        assert_eq!(v["subject"]["node_count"], 4);
        assert_eq!(v["baseline_seeds"].as_array().unwrap().len(), 2);
        assert!(v["verdict"]["is_small_world"].is_boolean());
    }

    #[test]
    fn pajek_errors_are_reported() {
        assert!(analyze_pajek_json("*Vertices x\n", 1, 0).is_err());
        let edgeless = analyze_pajek_json("*Vertices 2\n1 \"a\"\n2 \"b\"\n*Edges\n", 1, 0).unwrap();
        assert!(edgeless["error"].is_string());
    }

    #[test]
    fn presets_reproduce_published_verdicts() {
        let verdicts: Vec<bool> = presets_json()
            .as_array()
            .unwrap()
            .iter()
            .map(|p| {
                let f = |k: &str| p[k].as_f64().unwrap();
                verdict_json(
                    f("subject_acc"),
                    f("subject_aspl"),
                    f("baseline_acc"),
                    f("baseline_aspl"),
                    10.0,
                    1.1,
                )
                .unwrap()["is_small_world"]
                    .as_bool()
                    .unwrap()
            })
            .collect();
        assert_eq!(verdicts, vec![true, false]);
    }

    #[test]
    fn zero_baseline_acc_serializes_inf() {
        assert_eq!(verdict_json(0.5, 2.0, 0.0, 2.0, 10.0, 1.1).unwrap()["acc_ratio"], "inf");
    }
}
