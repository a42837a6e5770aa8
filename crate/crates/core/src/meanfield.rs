//! Degree-based mean-field analysis: closed-form vote-shares over
//! (k_a, k_b) classes, semi-analytic optimal allocation fractions for the
//! structured synthetic families, the large-k_a closed-form allocation, and
//! the negative-tie-blind utilities used by unaware controllers.

use crate::error::{Error, Result};

/// One degree class: nodes sharing positive strength `k_a` and negative
/// strength `k_b`, holding `weight` of the population, with per-node
/// allocations `a` and `b` from the two controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeClass {
    pub k_a: f64,
    pub k_b: f64,
    pub weight: f64,
    pub a: f64,
    pub b: f64,
}

impl DegreeClass {
    fn delta(&self) -> f64 {
        self.a + self.b + self.k_a + self.k_b
    }
}

/// Class table with validated weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeClassModel {
    classes: Vec<DegreeClass>,
}

/// Mean-field vote-share plus the expected neighbour states behind it.
#[derive(Debug, Clone, Copy)]
pub struct MfVoteShare {
    pub x_a_share: f64,
    pub mean_xa: f64,
    pub mean_xb: f64,
}

impl DegreeClassModel {
    pub fn new(classes: Vec<DegreeClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidInput("no degree classes".into()));
        }
        let wsum: f64 = classes.iter().map(|c| c.weight).sum();
        if (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "class weights sum to {wsum}"
            )));
        }
        for (i, c) in classes.iter().enumerate() {
            if c.k_a <= 0.0 {
                return Err(Error::InvalidInput(format!("class {i} has k_a = {}", c.k_a)));
            }
            if c.k_b < 0.0 || c.a < 0.0 || c.b < 0.0 || c.weight < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "class {i} has a negative field"
                )));
            }
            if c.delta() <= 0.0 {
                return Err(Error::InvalidInput(format!("class {i} has zero total rate")));
            }
        }
        Ok(DegreeClassModel { classes })
    }

    pub fn classes(&self) -> &[DegreeClass] {
        &self.classes
    }

    /// Class-weighted average of `f`.
    fn avg<F: Fn(&DegreeClass) -> f64>(&self, f: F) -> f64 {
        self.classes.iter().map(|c| c.weight * f(c)).sum()
    }

    pub fn mean_ka(&self) -> f64 {
        self.avg(|c| c.k_a)
    }

    pub fn mean_kb(&self) -> f64 {
        self.avg(|c| c.k_b)
    }

    pub fn mean_a(&self) -> f64 {
        self.avg(|c| c.a)
    }

    pub fn mean_b(&self) -> f64 {
        self.avg(|c| c.b)
    }

    /// Self-consistency coefficients of the expected neighbour states.
    /// Returns (r_a, c_aa, c_ab, r_b, c_ba, c_bb) for the linear system
    ///   xa = r_a + c_aa xa - c_ab xb
    ///   xb = r_b + c_ba xa - c_bb xb
    fn coefficients(&self) -> (f64, f64, f64, f64, f64, f64) {
        let mean_ka = self.mean_ka();
        let mean_kb = self.mean_kb();
        let r_a = self.avg(|c| c.k_a / mean_ka * (c.a + c.k_b) / c.delta());
        let c_aa = self.avg(|c| c.k_a * c.k_a / mean_ka / c.delta());
        let c_ab = self.avg(|c| c.k_a * c.k_b / mean_ka / c.delta());
        if mean_kb <= 0.0 {
            return (r_a, c_aa, c_ab, 0.0, 0.0, 0.0);
        }
        let r_b = self.avg(|c| c.k_b / mean_kb * (c.a + c.k_b) / c.delta());
        let c_ba = self.avg(|c| c.k_a * c.k_b / mean_kb / c.delta());
        let c_bb = self.avg(|c| c.k_b * c.k_b / mean_kb / c.delta());
        (r_a, c_aa, c_ab, r_b, c_ba, c_bb)
    }

    /// Closed-form evaluation of the self-consistent neighbour states and
    /// the resulting vote-share. When every class has `k_b = 0` the
    /// negative-neighbour equation is dropped (its coefficient vanishes).
    pub fn vote_share(&self) -> Result<MfVoteShare> {
        let (r_a, c_aa, c_ab, r_b, c_ba, c_bb) = self.coefficients();
        let (mean_xa, mean_xb) = if self.mean_kb() <= 0.0 {
            let denom = 1.0 - c_aa;
            if denom.abs() < 1e-12 {
                return Err(Error::MeanFieldSingular(format!("1 - c_aa = {denom}")));
            }
            (r_a / denom, 0.0)
        } else {
            let denom_a =
                1.0 - c_aa + c_ab * c_ba / (1.0 + c_bb);
            let denom_b =
                1.0 + c_bb + c_ba * c_ab / (1.0 - c_aa);
            if denom_a.abs() < 1e-12 || (1.0 + c_bb).abs() < 1e-12 || (1.0 - c_aa).abs() < 1e-12 {
                return Err(Error::MeanFieldSingular(format!(
                    "denominators {denom_a}, {}",
                    1.0 + c_bb
                )));
            }
            let xa = (r_a - c_ab * r_b / (1.0 + c_bb)) / denom_a;
            let xb = (r_b + c_ba * r_a / (1.0 - c_aa)) / denom_b;
            (xa, xb)
        };
        let share = self.avg(|c| (c.a + c.k_b) / c.delta())
            + self.avg(|c| c.k_a / c.delta()) * mean_xa
            - self.avg(|c| c.k_b / c.delta()) * mean_xb;
        Ok(MfVoteShare {
            x_a_share: share,
            mean_xa,
            mean_xb,
        })
    }

    /// Fixed-point iteration of the self-consistency relations; the
    /// independent route used to cross-check the closed form.
    pub fn vote_share_fixed_point(&self, tol: f64, max_iters: usize) -> Result<MfVoteShare> {
        let (r_a, c_aa, c_ab, r_b, c_ba, c_bb) = self.coefficients();
        let mut xa = 0.5;
        let mut xb = 0.5;
        let mut converged = false;
        for _ in 0..max_iters {
            let (na, nb) = (
                r_a + c_aa * xa - c_ab * xb,
                if self.mean_kb() <= 0.0 {
                    0.0
                } else {
                    r_b + c_ba * xa - c_bb * xb
                },
            );
            let delta = (na - xa).abs().max((nb - xb).abs());
            xa = na;
            xb = nb;
            if delta < tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::MeanFieldSingular(
                "fixed-point iteration did not converge".into(),
            ));
        }
        let share = self.avg(|c| (c.a + c.k_b) / c.delta())
            + self.avg(|c| c.k_a / c.delta()) * xa
            - self.avg(|c| c.k_b / c.delta()) * xb;
        Ok(MfVoteShare {
            x_a_share: share,
            mean_xa: xa,
            mean_xb: xb,
        })
    }
}

/// Convenience: evaluate the model's vote-share.
pub fn mf_vote_share(model: &DegreeClassModel) -> Result<MfVoteShare> {
    model.vote_share()
}

/// A class skeleton before controller A's allocation is decided: the
/// adversary allocation `b` is fixed per class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTemplate {
    pub k_a: f64,
    pub k_b: f64,
    pub weight: f64,
    pub b: f64,
}

impl ClassTemplate {
    fn with_allocation(&self, a: f64) -> DegreeClass {
        DegreeClass {
            k_a: self.k_a,
            k_b: self.k_b,
            weight: self.weight,
            a,
            b: self.b,
        }
    }
}

/// Builds the model with A's budget split across classes by the fractions
/// `eps` (one entry per class, summing to 1). `budget_a_per_node` is the
/// whole-network mean allocation from A.
pub fn model_with_eps(
    templates: &[ClassTemplate],
    eps: &[f64],
    budget_a_per_node: f64,
) -> Result<DegreeClassModel> {
    if templates.len() != eps.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} eps entries for {} classes",
            eps.len(),
            templates.len()
        )));
    }
    let classes: Vec<DegreeClass> = templates
        .iter()
        .zip(eps)
        .map(|(t, &e)| t.with_allocation(e * budget_a_per_node / t.weight))
        .collect();
    DegreeClassModel::new(classes)
}

/// Result of the semi-analytic allocation search.
#[derive(Debug, Clone)]
pub struct EpsOptimum {
    /// Budget fraction per class.
    pub eps: Vec<f64>,
    /// Total fraction on classes carrying negative ties.
    pub eps_negative: f64,
    pub x_star: f64,
}

fn eval_eps(templates: &[ClassTemplate], eps: &[f64], budget: f64) -> f64 {
    match model_with_eps(templates, eps, budget) {
        Ok(m) => m.vote_share().map(|v| v.x_a_share).unwrap_or(f64::NEG_INFINITY),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Maximizes `objective` over the `dim`-point probability simplex by dense
/// grid search plus local refinement. Supports one to three coordinates,
/// which covers every class structure the semi-analytic search needs.
pub fn maximize_over_simplex<F: Fn(&[f64]) -> f64>(
    dim: usize,
    objective: F,
) -> Result<(Vec<f64>, f64)> {
    if dim == 0 || dim > 3 {
        return Err(Error::InvalidInput(format!(
            "{dim} coordinates; the simplex search handles 1 to 3"
        )));
    }
    let mut best_eps = vec![0.0; dim];
    let mut best_x = f64::NEG_INFINITY;
    match dim {
        1 => {
            best_eps = vec![1.0];
            best_x = objective(&best_eps);
        }
        2 => {
            let coarse = 1e-3;
            let steps = (1.0 / coarse) as usize;
            for i in 0..=steps {
                let e = i as f64 * coarse;
                let eps = vec![e, 1.0 - e];
                let x = objective(&eps);
                if x > best_x {
                    best_x = x;
                    best_eps = eps;
                }
            }
            // golden-section refinement around the best grid point
            let mut lo = (best_eps[0] - coarse).max(0.0);
            let mut hi = (best_eps[0] + coarse).min(1.0);
            let phi = 0.5 * (3.0 - 5.0f64.sqrt());
            for _ in 0..60 {
                let m1 = lo + phi * (hi - lo);
                let m2 = hi - phi * (hi - lo);
                let x1 = objective(&[m1, 1.0 - m1]);
                let x2 = objective(&[m2, 1.0 - m2]);
                if x1 >= x2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
                if hi - lo < 1e-9 {
                    break;
                }
            }
            let e = 0.5 * (lo + hi);
            let eps = vec![e, 1.0 - e];
            let x = objective(&eps);
            if x > best_x {
                best_x = x;
                best_eps = eps;
            }
        }
        _ => {
            // 2-simplex: coarse grid then local coordinate refinement
            let coarse = 5e-3;
            let steps = (1.0 / coarse) as usize;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let e1 = i as f64 * coarse;
                    let e2 = j as f64 * coarse;
                    let eps = vec![e1, e2, 1.0 - e1 - e2];
                    let x = objective(&eps);
                    if x > best_x {
                        best_x = x;
                        best_eps = eps;
                    }
                }
            }
            let mut width = coarse;
            while width > 1e-7 {
                let mut improved = false;
                for dim_i in 0..2 {
                    for dir in [-1.0, 1.0] {
                        let mut cand = best_eps.clone();
                        cand[dim_i] = (cand[dim_i] + dir * width).clamp(0.0, 1.0);
                        let rest = 1.0 - cand[0] - cand[1];
                        if rest < 0.0 {
                            continue;
                        }
                        cand[2] = rest;
                        let x = objective(&cand);
                        if x > best_x {
                            best_x = x;
                            best_eps = cand;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    width *= 0.5;
                }
            }
        }
    }
    Ok((best_eps, best_x))
}

/// Maximizes the mean-field vote-share over the simplex of budget fractions.
pub fn mf_optimize_eps(
    templates: &[ClassTemplate],
    budget_a_per_node: f64,
) -> Result<EpsOptimum> {
    let (best_eps, best_x) = maximize_over_simplex(templates.len(), |eps| {
        eval_eps(templates, eps, budget_a_per_node)
    })?;
    let eps_negative = templates
        .iter()
        .zip(&best_eps)
        .filter(|(t, _)| t.k_b > 0.0)
        .map(|(_, &e)| e)
        .sum();
    Ok(EpsOptimum {
        eps: best_eps,
        eps_negative,
        x_star: best_x,
    })
}

/// Large-`k_a` closed-form optimal allocation for a node with negative
/// strength `k_b` facing adversary allocation `b`, given the network means.
/// The raw value is clipped at zero; `clipped` reports when that happened.
#[derive(Debug, Clone, Copy)]
pub struct LimitingAllocation {
    pub value: f64,
    pub clipped: bool,
}

pub fn limiting_allocation(
    k_b: f64,
    b: f64,
    mean_a: f64,
    mean_b: f64,
    mean_kb: f64,
) -> Result<LimitingAllocation> {
    let denom = mean_b + mean_kb;
    if denom <= 0.0 {
        return Err(Error::MeanFieldSingular(format!(
            "mean_b + mean_kb = {denom}"
        )));
    }
    let raw = 0.5
        * ((mean_a - mean_b) / denom * b
            + (mean_a - 3.0 * mean_b - 2.0 * mean_kb) / denom * k_b
            + mean_a
            + mean_b
            + 2.0 * mean_kb);
    Ok(LimitingAllocation {
        value: raw.max(0.0),
        clipped: raw < 0.0,
    })
}

/// The negative-tie-blind allocation rule: with signs invisible, the
/// optimum depends only on budgets and the adversary allocation.
pub fn blind_allocation(b: f64, mean_a: f64, mean_b: f64) -> Result<f64> {
    if mean_b <= 0.0 {
        return Err(Error::MeanFieldSingular(format!("mean_b = {mean_b}")));
    }
    Ok(0.5 * ((mean_a - mean_b) / mean_b * b + mean_a + mean_b))
}

/// Blind-model class keyed by total degree only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlindClass {
    pub k: f64,
    pub weight: f64,
    pub a: f64,
    pub b: f64,
}

/// Mean-field utilities when controllers see the network unsigned: returns
/// `(X_A_plus, X_B_plus)`. Derived from the per-class states
/// `x_k = (k <x> + a_k) / (k + a_k + b_k)`; the pair is complementary by
/// construction.
pub fn mf_positive_vote_shares(classes: &[BlindClass]) -> Result<(f64, f64)> {
    if classes.is_empty() {
        return Err(Error::InvalidInput("no degree classes".into()));
    }
    let wsum: f64 = classes.iter().map(|c| c.weight).sum();
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("class weights sum to {wsum}")));
    }
    for (i, c) in classes.iter().enumerate() {
        if c.k + c.a + c.b <= 0.0 {
            return Err(Error::MeanFieldSingular(format!(
                "class {i} has k + a + b = 0"
            )));
        }
        if c.k < 0.0 || c.a < 0.0 || c.b < 0.0 || c.weight < 0.0 {
            return Err(Error::InvalidInput(format!("class {i} has a negative field")));
        }
    }
    let avg = |f: &dyn Fn(&BlindClass) -> f64| -> f64 {
        classes.iter().map(|c| c.weight * f(c)).sum()
    };
    let num = avg(&|c| c.k * c.a / (c.k + c.a + c.b));
    let den = avg(&|c| c.k * (c.a + c.b) / (c.k + c.a + c.b));
    if den <= 0.0 {
        return Err(Error::MeanFieldSingular(format!(
            "no external influence reaches any class (denominator {den})"
        )));
    }
    let mean_x = num / den;
    let relay = avg(&|c| c.k / (c.k + c.a + c.b));
    let xa = mean_x * relay + avg(&|c| c.a / (c.k + c.a + c.b));
    let xb = (1.0 - mean_x) * relay + avg(&|c| c.b / (c.k + c.a + c.b));
    Ok((xa, xb))
}

/// The structured families with semi-analytic optimal allocations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfModel {
    RegReg,
    CpRegHigh,
    RegCp,
}

impl MfModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "reg-reg" => Ok(MfModel::RegReg),
            "cp-reg-high" | "cp-reg" => Ok(MfModel::CpRegHigh),
            "reg-cp" => Ok(MfModel::RegCp),
            other => Err(Error::InvalidInput(format!("unknown mean-field model `{other}`"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MfModel::RegReg => "reg-reg",
            MfModel::CpRegHigh => "cp-reg-high",
            MfModel::RegCp => "reg-cp",
        }
    }
}

/// Class templates for a family at tie dispersion `p`, with a uniform
/// per-node adversary allocation `b_alloc` on every class. Classes with
/// vanishing weight are dropped.
pub fn mf_class_templates(
    model: MfModel,
    p: f64,
    mean_ka: f64,
    mean_kb: f64,
    b_alloc: f64,
) -> Result<Vec<ClassTemplate>> {
    if !(0.0 < p && p <= 1.0) {
        return Err(Error::InvalidInput(format!("p = {p}")));
    }
    let kb = mean_kb / p;
    let raw: Vec<ClassTemplate> = match model {
        MfModel::RegReg => vec![
            ClassTemplate {
                k_a: mean_ka,
                k_b: kb,
                weight: p,
                b: b_alloc,
            },
            ClassTemplate {
                k_a: mean_ka,
                k_b: 0.0,
                weight: 1.0 - p,
                b: b_alloc,
            },
        ],
        MfModel::CpRegHigh => {
            let k_high = 2.0 * mean_ka - 2.0;
            let k_low = 2.0;
            if p <= 0.5 {
                vec![
                    ClassTemplate {
                        k_a: k_high,
                        k_b: kb,
                        weight: p,
                        b: b_alloc,
                    },
                    ClassTemplate {
                        k_a: k_high,
                        k_b: 0.0,
                        weight: 0.5 - p,
                        b: b_alloc,
                    },
                    ClassTemplate {
                        k_a: k_low,
                        k_b: 0.0,
                        weight: 0.5,
                        b: b_alloc,
                    },
                ]
            } else {
                vec![
                    ClassTemplate {
                        k_a: k_high,
                        k_b: kb,
                        weight: 0.5,
                        b: b_alloc,
                    },
                    ClassTemplate {
                        k_a: k_low,
                        k_b: kb,
                        weight: p - 0.5,
                        b: b_alloc,
                    },
                    ClassTemplate {
                        k_a: k_low,
                        k_b: 0.0,
                        weight: 1.0 - p,
                        b: b_alloc,
                    },
                ]
            }
        }
        MfModel::RegCp => {
            let kb_high = 2.0 * (mean_kb / p - 1.0);
            vec![
                ClassTemplate {
                    k_a: mean_ka,
                    k_b: kb_high,
                    weight: p / 2.0,
                    b: b_alloc,
                },
                ClassTemplate {
                    k_a: mean_ka,
                    k_b: 2.0,
                    weight: p / 2.0,
                    b: b_alloc,
                },
                ClassTemplate {
                    k_a: mean_ka,
                    k_b: 0.0,
                    weight: 1.0 - p,
                    b: b_alloc,
                },
            ]
        }
    };
    Ok(raw.into_iter().filter(|c| c.weight > 1e-12).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn class(k_a: f64, k_b: f64, weight: f64, a: f64, b: f64) -> DegreeClass {
        DegreeClass {
            k_a,
            k_b,
            weight,
            a,
            b,
        }
    }

    #[test]
    fn symmetric_single_class_splits_evenly() {
        let m = DegreeClassModel::new(vec![class(16.0, 0.0, 1.0, 1.0, 1.0)]).unwrap();
        let v = m.vote_share().unwrap();
        assert!((v.x_a_share - 0.5).abs() < 1e-12);
    }

    #[test]
    fn regular_positive_graph_is_exact() {
        // single class, k_b = 0: the mean-field is exact, X = a / (a + b)
        let m = DegreeClassModel::new(vec![class(16.0, 0.0, 1.0, 2.0, 1.0)]).unwrap();
        let v = m.vote_share().unwrap();
        assert!((v.x_a_share - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn matches_numeric_steady_state_on_regular_graph() {
        use crate::dynamics::{steady_state, AllocationVector};
        use crate::netgen::{generate_component, ComponentKind, ComponentSpec};
        let g = generate_component(
            &ComponentSpec {
                kind: ComponentKind::Regular { k: 16.0 },
                n: 1000,
            },
            5,
        )
        .unwrap();
        let pa = AllocationVector::uniform(1000, 1000.0);
        let pb = AllocationVector::uniform(1000, 1000.0);
        let numeric = steady_state(&g, &pa, &pb).unwrap().vote_share_a;
        let m = DegreeClassModel::new(vec![class(16.0, 0.0, 1.0, 1.0, 1.0)]).unwrap();
        let mf = m.vote_share().unwrap().x_a_share;
        assert!((mf - numeric).abs() < 1e-6, "mf {mf} vs numeric {numeric}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn closed_form_matches_fixed_point(
            ka1 in 2.0f64..40.0, ka2 in 2.0f64..40.0,
            kb1 in 0.0f64..10.0, kb2 in 0.0f64..10.0,
            w in 0.05f64..0.95,
            a1 in 0.0f64..3.0, a2 in 0.0f64..3.0,
            b1 in 0.1f64..3.0, b2 in 0.1f64..3.0,
        ) {
            let m = DegreeClassModel::new(vec![
                class(ka1, kb1, w, a1, b1),
                class(ka2, kb2, 1.0 - w, a2, b2),
            ]).unwrap();
            let closed = m.vote_share().unwrap();
            let fp = m.vote_share_fixed_point(1e-12, 200_000).unwrap();
            prop_assert!((closed.x_a_share - fp.x_a_share).abs() < 1e-10,
                "closed {} vs fixed point {}", closed.x_a_share, fp.x_a_share);
            prop_assert!((closed.mean_xa - fp.mean_xa).abs() < 1e-10);
            prop_assert!((closed.mean_xb - fp.mean_xb).abs() < 1e-10);
        }

        #[test]
        fn blind_shares_are_complementary(
            k1 in 1.0f64..40.0, k2 in 1.0f64..40.0,
            w in 0.05f64..0.95,
            a1 in 0.0f64..3.0, a2 in 0.0f64..3.0,
            b1 in 0.1f64..3.0, b2 in 0.1f64..3.0,
        ) {
            let classes = [
                BlindClass { k: k1, weight: w, a: a1, b: b1 },
                BlindClass { k: k2, weight: 1.0 - w, a: a2, b: b2 },
            ];
            let (xa, xb) = mf_positive_vote_shares(&classes).unwrap();
            prop_assert!((xa + xb - 1.0).abs() < 1e-12, "xa {xa} xb {xb}");
        }

        #[test]
        fn limiting_allocation_budget_consistency(
            kb1 in 0.0f64..6.0, kb2 in 0.0f64..6.0,
            w in 0.05f64..0.95,
            b1 in 0.1f64..3.0, b2 in 0.1f64..3.0,
            mean_a in 0.5f64..8.0,
        ) {
            // averaging the rule over the class distribution returns the
            // budget exactly (when nothing clips)
            let mean_b = w * b1 + (1.0 - w) * b2;
            let mean_kb = w * kb1 + (1.0 - w) * kb2;
            let a1 = limiting_allocation(kb1, b1, mean_a, mean_b, mean_kb).unwrap();
            let a2 = limiting_allocation(kb2, b2, mean_a, mean_b, mean_kb).unwrap();
            prop_assume!(!a1.clipped && !a2.clipped);
            let avg = w * a1.value + (1.0 - w) * a2.value;
            prop_assert!((avg - mean_a).abs() < 1e-9, "avg {avg} vs mean_a {mean_a}");
        }
    }

    #[test]
    fn blind_single_class_reduces_to_share_of_allocations() {
        let classes = [BlindClass {
            k: 12.0,
            weight: 1.0,
            a: 2.0,
            b: 1.0,
        }];
        let (xa, xb) = mf_positive_vote_shares(&classes).unwrap();
        assert!((xa - 2.0 / 3.0).abs() < 1e-12);
        assert!((xb - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn limiting_allocation_examples() {
        // uniform adversary on a regular negative component: uniform is optimal
        let out = limiting_allocation(2.0, 1.0, 3.0, 1.0, 2.0).unwrap();
        assert!((out.value - 3.0).abs() < 1e-12);
        // plug-in example: everything 1
        let out = limiting_allocation(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        // coefficient of k_b vanishes when mean_a = 3 mean_b + 2 mean_kb
        let mean_b = 0.5;
        let mean_kb = 2.0;
        let mean_a = 3.0 * mean_b + 2.0 * mean_kb;
        let lo = limiting_allocation(0.0, 1.0, mean_a, mean_b, mean_kb).unwrap();
        let hi = limiting_allocation(5.0, 1.0, mean_a, mean_b, mean_kb).unwrap();
        assert!((lo.value - hi.value).abs() < 1e-12);
        // and the slope in b stays positive (mean_a > mean_b)
        let b_lo = limiting_allocation(1.0, 0.5, mean_a, mean_b, mean_kb).unwrap();
        let b_hi = limiting_allocation(1.0, 1.5, mean_a, mean_b, mean_kb).unwrap();
        assert!(b_hi.value > b_lo.value);
    }

    #[test]
    fn zero_gain_regime_has_no_awareness_payoff() {
        // regular negative component, uniform adversary, large mean k_a:
        // the sign-aware allocation rule and the blind rule produce the
        // same spread, so their true (signed-model) vote-shares coincide
        let mean_a = 1.5;
        let mean_b = 0.5;
        let kb = 2.0;
        let aware_alloc = |k_a: f64| {
            let _ = k_a; // the rule is k_a-independent
            limiting_allocation(kb, mean_b, mean_a, mean_b, kb)
                .unwrap()
                .value
        };
        let blind_alloc = blind_allocation(mean_b, mean_a, mean_b).unwrap();
        let evaluate = |alloc: &dyn Fn(f64) -> f64| {
            DegreeClassModel::new(vec![
                class(40.0, kb, 0.5, alloc(40.0), mean_b),
                class(60.0, kb, 0.5, alloc(60.0), mean_b),
            ])
            .unwrap()
            .vote_share()
            .unwrap()
            .x_a_share
        };
        let x_aware = evaluate(&aware_alloc);
        let x_blind = evaluate(&|_| blind_alloc);
        assert!(
            (x_aware - x_blind).abs() < 1e-3,
            "aware {x_aware} vs blind {x_blind}"
        );
        // in this regime both rules reduce to the uniform spread
        assert!((aware_alloc(40.0) - mean_a).abs() < 1e-12);
        assert!((blind_alloc - mean_a).abs() < 1e-12);
    }

    #[test]
    fn reg_reg_low_p_avoids_negative_class() {
        let templates = mf_class_templates(MfModel::RegReg, 0.1, 16.0, 4.0, 1.0).unwrap();
        let opt = mf_optimize_eps(&templates, 1.0).unwrap();
        assert!(opt.eps_negative < 1e-6, "eps = {}", opt.eps_negative);
    }

    #[test]
    fn full_dispersion_targets_everything() {
        let templates = mf_class_templates(MfModel::RegReg, 1.0, 16.0, 4.0, 1.0).unwrap();
        assert_eq!(templates.len(), 1);
        let opt = mf_optimize_eps(&templates, 1.0).unwrap();
        assert!((opt.eps_negative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reg_cp_prefers_low_negative_degree_class() {
        let templates = mf_class_templates(MfModel::RegCp, 0.3, 16.0, 4.0, 1.0).unwrap();
        let opt = mf_optimize_eps(&templates, 1.0).unwrap();
        assert!(opt.eps_negative > 0.0);
        // class 0 is high-negative-degree, class 1 low-negative-degree
        assert!(
            opt.eps[1] > opt.eps[0],
            "allocations: {:?}",
            opt.eps
        );
        // coarse independent grid search agrees
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        let mut e1 = 0.0;
        while e1 <= 1.0 {
            let mut e2 = 0.0;
            while e1 + e2 <= 1.0 {
                let x = super::eval_eps(&templates, &[e1, e2, 1.0 - e1 - e2], 1.0);
                if x > best.2 {
                    best = (e1, e2, x);
                }
                e2 += 0.02;
            }
            e1 += 0.02;
        }
        assert!((opt.x_star - best.2).abs() < 1e-3);
        assert!((opt.eps[0] - best.0).abs() < 0.03);
        assert!((opt.eps[1] - best.1).abs() < 0.03);
    }
}
