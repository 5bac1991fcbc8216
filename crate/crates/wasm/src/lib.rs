//! Browser bindings for the interactive demo page in `www/`.
//!
//! Three operations are exposed, each returning a JSON string so the page
//! stays plain JavaScript: the rate curves, a single-channel attack
//! analysis, and the multi-round reuse loop. Everything is deterministic
//! given its arguments; no entropy source is needed on the wasm side.
//!
//! The `*_impl` functions hold the logic and run on any target; the
//! `#[wasm_bindgen]` wrappers only translate errors into `JsValue`.

use rebase_qkd::attack_models::{build_channel, parse_channel_spec, validate_channel, ChannelSpec};
use rebase_qkd::error_analysis::{check_relations, error_rates_exact, error_rates_formula};
use rebase_qkd::protocol::{run_reuse_loop, ReuseSizing, SessionConfig};
use rebase_qkd::rate_theory::{key_threshold, rate_curve, total_key_ratio, TotalKeyRatio};
use rebase_qkd::{Error, Result};
use wasm_bindgen::prelude::*;

fn rate_curve_impl(e_min: f64, e_max: f64, step: f64) -> Result<String> {
    let points = rate_curve(e_min, e_max, step)?;
    Ok(serde_json::to_string(&points).expect("serializable"))
}

fn thresholds_impl() -> String {
    serde_json::json!({
        "key_threshold": key_threshold(),
        "base_threshold": rebase_qkd::rate_theory::base_threshold(),
    })
    .to_string()
}

fn named_model(spec: &str) -> Result<rebase_qkd::attack_models::ChannelModel> {
    match parse_channel_spec(spec)? {
        ChannelSpec::Model(model) => Ok(model),
        ChannelSpec::CustomFile(_) => Err(Error::InvalidArgument(
            "file-based custom channels are only available in the CLI".into(),
        )),
    }
}

fn attack_report_impl(spec: &str) -> Result<String> {
    let ch = build_channel(&named_model(spec)?)?;
    let formula = error_rates_formula(&ch)?;
    let exact = error_rates_exact(&ch)?;
    let doc = serde_json::json!({
        "channel": spec,
        "completeness_residual": validate_channel(&ch),
        "formula": formula,
        "exact": exact,
        "relations": check_relations(&exact),
        "max_formula_exact_gap": formula.max_abs_diff(&exact),
    });
    Ok(doc.to_string())
}

fn reuse_report_impl(
    n: u32,
    spec: &str,
    rounds: u32,
    seed: u32,
    idealized: bool,
) -> Result<String> {
    let cfg = SessionConfig::new(n as usize, named_model(spec)?, seed as u64);
    let sizing = if idealized {
        ReuseSizing::Idealized
    } else {
        ReuseSizing::Coded
    };
    let report = run_reuse_loop(&cfg, rounds as usize, sizing)?;
    let e_ref = error_rates_formula(&build_channel(&cfg.channel)?)?.e_bit_comm;
    let closed_form = if e_ref <= 0.25 {
        match total_key_ratio(e_ref)? {
            TotalKeyRatio::Unbounded => serde_json::Value::Null,
            TotalKeyRatio::Finite(v) => serde_json::json!(v),
        }
    } else {
        serde_json::Value::Null
    };
    let doc = serde_json::json!({
        "report": report,
        "channel_e": e_ref,
        "closed_form_ratio": closed_form,
    });
    Ok(doc.to_string())
}

fn err_js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Rate-curve grid as a JSON array of `{e, r_k, r_b, lk_over_2n}` points;
/// the unbounded ratio at e = 0 serializes as null.
#[wasm_bindgen]
pub fn rate_curve_json(e_min: f64, e_max: f64, step: f64) -> std::result::Result<String, JsValue> {
    rate_curve_impl(e_min, e_max, step).map_err(err_js)
}

/// Key and base thresholds, for axis annotations.
#[wasm_bindgen]
pub fn thresholds_json() -> String {
    thresholds_impl()
}

/// Error rates of a named channel, both computation routes, plus the
/// relation residuals. File-based `custom:` specs are CLI-only.
#[wasm_bindgen]
pub fn attack_report_json(spec: &str) -> std::result::Result<String, JsValue> {
    attack_report_impl(spec).map_err(err_js)
}

/// Reuse-loop report plus the closed-form ratio for comparison.
#[wasm_bindgen]
pub fn reuse_report_json(
    n: u32,
    spec: &str,
    rounds: u32,
    seed: u32,
    idealized: bool,
) -> std::result::Result<String, JsValue> {
    reuse_report_impl(n, spec, rounds, seed, idealized).map_err(err_js)
}
