//! Browser demo: each export returns a JSON string for `www/demo.js`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use corrected_poisson::bounds::{fit_rate, Approximant, RateMetric};
use corrected_poisson::corrected::build_phi_nu;
use corrected_poisson::distances::{d2_exact_product, tv};
use corrected_poisson::exact::{compare_with_published, solve_gamma_table, TableMismatch};
use corrected_poisson::pmf::{poisson_binomial_pmf, ProbVector};
use corrected_poisson::{json, Error};

#[derive(Serialize)]
struct Comparison {
    n: usize,
    lambda: f64,
    order: String,
    exact: Vec<f64>,
    approx: Vec<f64>,
    tv: f64,
    d2: f64,
    d2_method: String,
}

#[derive(Serialize)]
struct Table {
    nu: usize,
    gamma: std::collections::BTreeMap<usize, Vec<(usize, String)>>,
    mismatches: Vec<TableMismatch>,
}

fn parse_list(s: &str) -> Result<Vec<u64>, Error> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad grid entry '{t}'"))))
        .collect()
}

/// Bin(n, λ/n) against the chosen approximant on 0..=max(n, kmax).
pub fn compare_json(n: usize, lambda: f64, order: &str) -> Result<String, Error> {
    let p = ProbVector::equal(n, lambda)?;
    let approx = Approximant::parse(order)?;
    let spec = approx.spec(&p, n as u64, lambda)?;
    let phi = build_phi_nu(&spec, None)?;
    let f = poisson_binomial_pmf(&p);
    let top = phi.pmf.support_max().min(n.max(10) + 10);
    let d2 = d2_exact_product(&p, &spec)?;
    Ok(json::to_string(&Comparison {
        n,
        lambda,
        order: approx.label(),
        exact: (0..=top).map(|k| f.at(k)).collect(),
        approx: (0..=top).map(|k| phi.pmf.at(k)).collect(),
        tv: tv(&f, &phi.pmf).value,
        d2: d2.value,
        d2_method: json::to_string(&d2.method).trim_matches('"').to_owned(),
    }))
}

/// Log-log slope fits of d₂ along an n grid, one per order.
pub fn rate_scan_json(lambda: f64, orders: &str, grid: &str) -> Result<String, Error> {
    let orders = orders.split(',').map(Approximant::parse).collect::<Result<Vec<_>, _>>()?;
    let grid = parse_list(grid)?;
    Ok(json::to_string(&fit_rate(lambda, &orders, &grid, RateMetric::D2)?))
}

pub fn gamma_table_json(nu: usize) -> Result<String, Error> {
    let table = solve_gamma_table(nu)?;
    Ok(json::to_string(&Table {
        nu,
        gamma: table.export().gamma,
        mismatches: compare_with_published(&table).unwrap_or_default(),
    }))
}

fn js(r: Result<String, Error>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn compare(n: usize, lambda: f64, order: &str) -> Result<String, JsValue> {
    js(compare_json(n, lambda, order))
}

#[wasm_bindgen]
pub fn rate_scan(lambda: f64, orders: &str, grid: &str) -> Result<String, JsValue> {
    js(rate_scan_json(lambda, orders, grid))
}

#[wasm_bindgen]
pub fn gamma_table(nu: usize) -> Result<String, JsValue> {
    js(gamma_table_json(nu))
}
