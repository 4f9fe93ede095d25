//! Browser bindings. Each export takes a field spec and a few parameters as
//! strings and returns a canonical JSON report; the page in `www/` renders it.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use prismlab::galois::{action_kernel, converges_at, GaloisElementData, KernelTag};
use prismlab::io::{
    element_from_json, element_to_json, field_from_json, parse_json, parse_valuation, to_canonical_string,
    valuation_to_json,
};
use prismlab::miclog::{bk_twist, classify_ndr, cohomology};
use prismlab::numfield::{a_log, a_prismatic};
use prismlab::{Field, FieldElement, KMatrix, LogConnection};

fn field(spec: &str) -> Result<Field, String> {
    let v = parse_json(spec).map_err(|e| e.to_string())?;
    field_from_json(&v, "field").map_err(|e| e.to_string())
}

/// A weight is either a rational (`"1/3"`) or a coordinate array in `1, π, …`.
fn weight(field: &Field, text: &str) -> Result<FieldElement, String> {
    let text = text.trim();
    let v = if text.starts_with('[') {
        parse_json(text).map_err(|e| e.to_string())?
    } else {
        Value::String(text.to_string())
    };
    element_from_json(field, &v, "weight").map_err(|e| e.to_string())
}

fn rank1(w: &FieldElement, m: usize) -> LogConnection {
    LogConnection::from_constant(&KMatrix::scalar(w, 1), "u-pi", m)
}

pub fn classify_report(spec: &str, w: &str) -> Result<String, String> {
    let f = field(spec)?;
    let w = weight(&f, w)?;
    let r = classify_ndr(&rank1(&w, 1), &[]);
    let rec = &r.weights[0];
    Ok(to_canonical_string(&json!({
        "weight": element_to_json(&rec.weight),
        "val_a_prismatic": valuation_to_json(&a_prismatic(&f).val()),
        "val_a_log": valuation_to_json(&a_log(&f).val()),
        "dist": valuation_to_json(&rec.dist),
        "margin_prismatic": valuation_to_json(&rec.margin_prism),
        "margin_log": valuation_to_json(&rec.margin_log),
        "nearly_dR": r.nearly_dr,
        "log_nearly_dR": r.log_nearly_dr,
    })))
}

pub fn convergence_report(spec: &str, w: &str, v0: &str, d: usize) -> Result<String, String> {
    let f = field(spec)?;
    let w = weight(&f, w)?;
    let v0 = parse_valuation(&Value::String(v0.trim().to_string()), "v0").map_err(|e| e.to_string())?;
    let kernel = action_kernel(&rank1(&w, 1), &a_prismatic(&f), d.min(60), KernelTag::Prismatic);
    let r = converges_at(&kernel, &GaloisElementData { v0, c: None }).map_err(|e| e.to_string())?;
    Ok(to_canonical_string(&json!({
        "status": r.status.as_str(),
        "trace": r.trace.iter().map(valuation_to_json).collect::<Vec<_>>(),
    })))
}

/// `(h0, h1)` of the rank-one twist by `n` modulo `T^m`, for each `n` and `m`.
pub fn twist_table(spec: &str, n_min: i64, n_max: i64, m_max: usize) -> Result<String, String> {
    let f = field(spec)?;
    if n_min > n_max || m_max == 0 || m_max > 12 || n_max - n_min > 40 {
        return Err("table bounds out of range".into());
    }
    let rows: Vec<Value> = (n_min..=n_max)
        .map(|n| {
            let cells: Vec<Value> = (1..=m_max)
                .map(|m| {
                    let c = cohomology(&bk_twist(&LogConnection::trivial(&f, "u-pi", 1, m), n));
                    json!([c.h0, c.h1])
                })
                .collect();
            json!({ "n": n, "cells": cells })
        })
        .collect();
    Ok(to_canonical_string(&json!({ "m_max": m_max, "rows": rows })))
}

#[wasm_bindgen]
pub fn classify(spec: &str, w: &str) -> Result<String, JsValue> {
    classify_report(spec, w).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn convergence(spec: &str, w: &str, v0: &str, d: usize) -> Result<String, JsValue> {
    convergence_report(spec, w, v0, d).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cohomology_table(spec: &str, n_min: i32, n_max: i32, m_max: usize) -> Result<String, JsValue> {
    twist_table(spec, n_min.into(), n_max.into(), m_max).map_err(|e| JsValue::from_str(&e))
}
