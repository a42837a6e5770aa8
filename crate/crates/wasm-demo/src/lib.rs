//! Browser demo bindings: small interactive slices of the signed-network
//! influence toolkit. Each entry point returns a JSON string so the page
//! needs no binding glue beyond `JSON.parse`.

use std::fmt::Write as _;

use wasm_bindgen::prelude::*;

use svim::dynamics::AllocationVector;
use svim::game::{Knowledge, MfGame};
use svim::meanfield::{mf_class_templates, mf_optimize_eps, MfModel};
use svim::netgen::{generate_family, Family};
use svim::optimize::{
    adversary_strategy, gradient_ascent, AdversaryKind, ObservabilityMode, OptimizerOptions,
};

fn json_array(values: &[f64]) -> String {
    let mut s = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v:.6}");
    }
    s.push(']');
    s
}

fn err_json(e: impl std::fmt::Display) -> String {
    format!("{{\"error\":\"{}\"}}", e.to_string().replace('"', "'"))
}

/// Generates one synthetic signed network and optimizes the focal
/// controller's budget twice: sign-aware and sign-agnostic. Returns the two
/// true vote-share traces and the relative gain.
#[wasm_bindgen]
pub fn demo_gain(
    family: &str,
    n: usize,
    p: f64,
    budget_ratio: f64,
    adversary: &str,
    seed: u64,
) -> String {
    let inner = || -> svim::Result<String> {
        let family = Family::parse(family)?;
        let merged = generate_family(family, n, 16.0, 4.0, p, seed)?;
        let g = &merged.graph;
        let p_b = adversary_strategy(g, AdversaryKind::parse(adversary)?, n as f64)?;
        let budget_a = budget_ratio * n as f64;
        let mut shares = Vec::new();
        let mut traces = Vec::new();
        for mode in [ObservabilityMode::Signed, ObservabilityMode::Mirrored] {
            let opts = OptimizerOptions {
                mode,
                seed,
                starts: 2,
                record_true_trace: true,
                ..OptimizerOptions::default()
            };
            let out = gradient_ascent(g, &p_b, budget_a, &opts)?;
            shares.push(out.true_vote_share);
            traces.push(out.true_trace.unwrap_or_default());
        }
        Ok(format!(
            "{{\"x_ga\":{:.6},\"x_gaplus\":{:.6},\"gain\":{:.6},\"negative_fraction\":{:.6},\"trace_ga\":{},\"trace_gaplus\":{}}}",
            shares[0],
            shares[1],
            shares[0] / shares[1] - 1.0,
            merged.report.realized_negative_fraction,
            json_array(&traces[0]),
            json_array(&traces[1]),
        ))
    };
    inner().unwrap_or_else(err_json)
}

/// Semi-analytic optimal allocation fraction and vote-share across the tie
/// dispersion range, for one structured family.
#[wasm_bindgen]
pub fn demo_meanfield(model: &str, budget_a: f64, b_alloc: f64, points: usize) -> String {
    let inner = || -> svim::Result<String> {
        let model = MfModel::parse(model)?;
        let points = points.clamp(2, 200);
        let mut ps = Vec::new();
        let mut eps = Vec::new();
        let mut xs = Vec::new();
        for i in 0..points {
            let p = 0.075 + (0.975 - 0.075) * i as f64 / (points - 1) as f64;
            let templates = mf_class_templates(model, p, 16.0, 4.0, b_alloc)?;
            let opt = mf_optimize_eps(&templates, budget_a)?;
            ps.push(p);
            eps.push(opt.eps_negative);
            xs.push(opt.x_star);
        }
        Ok(format!(
            "{{\"p\":{},\"eps_star\":{},\"x_star\":{}}}",
            json_array(&ps),
            json_array(&eps),
            json_array(&xs)
        ))
    };
    inner().unwrap_or_else(err_json)
}

/// Mean-field best-response game across budget ratios: equilibrium
/// allocation fractions for both players and the knowledge gain of the
/// sign-aware controller over an all-blind baseline.
#[wasm_bindgen]
pub fn demo_game(model: &str, p: f64, points: usize) -> String {
    let inner = || -> svim::Result<String> {
        let model = MfModel::parse(model)?;
        let templates = mf_class_templates(model, p, 16.0, 4.0, 0.0)?;
        let classes: Vec<(f64, f64, f64)> =
            templates.iter().map(|t| (t.k_a, t.k_b, t.weight)).collect();
        let points = points.clamp(2, 40);
        let mut ratios = Vec::new();
        let mut eps_a = Vec::new();
        let mut eps_b = Vec::new();
        let mut gains = Vec::new();
        for i in 0..points {
            // log-spaced ratios over [0.05, 100]
            let t = i as f64 / (points - 1) as f64;
            let ratio = 10f64.powf(-1.301 + t * (2.0 + 1.301));
            let aware = MfGame {
                classes: classes.clone(),
                budget_a_per_node: ratio,
                budget_b_per_node: 1.0,
                knowledge_a: Knowledge::Signed,
                knowledge_b: Knowledge::Blind,
                response_tol: 1e-6,
                max_rounds: 120,
            }
            .play()?;
            let blind = MfGame {
                classes: classes.clone(),
                budget_a_per_node: ratio,
                budget_b_per_node: 1.0,
                knowledge_a: Knowledge::Blind,
                knowledge_b: Knowledge::Blind,
                response_tol: 1e-6,
                max_rounds: 120,
            }
            .play()?;
            ratios.push(ratio);
            eps_a.push(aware.eps_a_negative);
            eps_b.push(aware.eps_b_negative);
            gains.push(aware.true_utilities.0 - blind.true_utilities.0);
        }
        Ok(format!(
            "{{\"ratio\":{},\"eps_a\":{},\"eps_b\":{},\"gain\":{}}}",
            json_array(&ratios),
            json_array(&eps_a),
            json_array(&eps_b),
            json_array(&gains)
        ))
    };
    inner().unwrap_or_else(err_json)
}

/// Exact steady state on a small generated network with uniform budgets;
/// returns per-node opinion probabilities together with each node's
/// negative strength, for the scatter view.
#[wasm_bindgen]
pub fn demo_steady_state(family: &str, n: usize, p: f64, budget_ratio: f64, seed: u64) -> String {
    let inner = || -> svim::Result<String> {
        let family = Family::parse(family)?;
        let merged = generate_family(family, n, 16.0, 4.0, p, seed)?;
        let g = &merged.graph;
        let p_a = AllocationVector::uniform(n, budget_ratio * n as f64);
        let p_b = AllocationVector::uniform(n, n as f64);
        let sol = svim::steady_state(g, &p_a, &p_b)?;
        Ok(format!(
            "{{\"x\":{},\"k_b\":{},\"vote_share\":{:.6}}}",
            json_array(&sol.x),
            json_array(g.neg_in_strength()),
            sol.vote_share_a
        ))
    };
    inner().unwrap_or_else(err_json)
}
