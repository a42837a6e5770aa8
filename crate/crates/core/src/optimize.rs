//! Projected gradient ascent for the budget-allocation problem, under three
//! observability modes: the signed graph itself (GA), every weight mirrored
//! positive (GA+), and negative edges dropped (GA-phi). Also the analytic
//! gradient, the simplex projection, adversary strategy builders and the
//! relative-gain metric.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::dynamics::{steady_state, AllocationVector, SteadySolver, SteadyStateSolution};
use crate::error::{Error, Result};
use crate::graph::{SignedGraph, Transform};

/// How the optimizing controller observes the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservabilityMode {
    /// Full knowledge of edge signs.
    Signed,
    /// Negative ties mistaken for positive ones.
    Mirrored,
    /// Negative ties invisible.
    Dropped,
}

impl ObservabilityMode {
    pub fn transform(self) -> Transform {
        match self {
            ObservabilityMode::Signed => Transform::Identity,
            ObservabilityMode::Mirrored => Transform::MirrorPositive,
            ObservabilityMode::Dropped => Transform::DropNegative,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ObservabilityMode::Signed => "ga",
            ObservabilityMode::Mirrored => "ga+",
            ObservabilityMode::Dropped => "gaphi",
        }
    }
}

impl std::str::FromStr for ObservabilityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ga" | "signed" => Ok(ObservabilityMode::Signed),
            "ga+" | "gaplus" | "mirrored" => Ok(ObservabilityMode::Mirrored),
            "gaphi" | "ga-phi" | "dropped" => Ok(ObservabilityMode::Dropped),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// Symmetric Dirichlet(1) sample scaled to the budget.
    UniformRandomSimplex,
    /// `budget / n` everywhere.
    Uniform,
    Provided(AllocationVector),
}

#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    /// Step size; `None` uses the node count.
    pub learning_rate: Option<f64>,
    /// Terminate when the objective changes by less than this between
    /// iterates.
    pub tolerance: f64,
    pub max_iters: usize,
    pub init: InitStrategy,
    pub mode: ObservabilityMode,
    pub seed: u64,
    /// Independent restarts; the best final perceived objective is kept.
    pub starts: usize,
    /// Also evaluate the signed-graph vote-share at every iterate (slower;
    /// meant for convergence traces).
    pub record_true_trace: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            learning_rate: None,
            tolerance: 1e-7,
            max_iters: 100_000,
            init: InitStrategy::UniformRandomSimplex,
            mode: ObservabilityMode::Signed,
            seed: 0,
            starts: 5,
            record_true_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub p_star: AllocationVector,
    /// Objective under the optimizer's world-view, one entry per iterate.
    pub objective_trace: Vec<f64>,
    /// Vote-share of `p_star` on the untransformed signed graph.
    pub true_vote_share: f64,
    /// Signed-graph vote-share per iterate, when requested.
    pub true_trace: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Analytic gradient of the vote-share with respect to the controller's
/// allocation: one adjoint solve gives `y = M^-T 1/N`, and each entry is
/// `y_i (1 - x_i)`.
pub fn gradient(
    g: &SignedGraph,
    p_a: &AllocationVector,
    p_b: &AllocationVector,
    x: &SteadyStateSolution,
) -> Result<Vec<f64>> {
    let mut solver = SteadySolver::new(g);
    let y = solver.adjoint(p_a.values(), p_b.values())?;
    Ok(y.iter().zip(&x.x).map(|(&yi, &xi)| yi * (1.0 - xi)).collect())
}

/// Euclidean projection onto the scaled simplex `{p >= 0, sum p = budget}`.
/// Sort-based threshold rule, O(n log n).
pub fn project_simplex(v: &[f64], budget: f64) -> AllocationVector {
    assert!(budget > 0.0, "projection needs a positive budget");
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - budget) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    let values: Vec<f64> = v.iter().map(|&u| (u - tau).max(0.0)).collect();
    // the threshold rule leaves only rounding error on the sum
    let sum: f64 = values.iter().sum();
    let scale = if sum > 0.0 { budget / sum } else { 1.0 };
    let values = values.into_iter().map(|p| p * scale).collect();
    AllocationVector::new(values, budget).expect("projection output is feasible")
}

fn dirichlet_on_simplex(n: usize, budget: f64, rng: &mut Pcg64) -> AllocationVector {
    let mut values: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return AllocationVector::uniform(n, budget);
    }
    for v in &mut values {
        *v *= budget / sum;
    }
    let total: f64 = values.iter().sum();
    // mop up rounding drift on the largest entry
    if let Some(m) = values
        .iter_mut()
        .max_by(|a, b| a.partial_cmp(b).unwrap())
    {
        *m += budget - total;
    }
    AllocationVector::new(values, budget).expect("normalized sample is feasible")
}

struct AscentRun {
    p: AllocationVector,
    trace: Vec<f64>,
    true_trace: Option<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

fn ascend_once(
    solver: &mut SteadySolver,
    true_solver: Option<&mut SteadySolver>,
    p0: AllocationVector,
    p_b: &AllocationVector,
    eta: f64,
    mu: f64,
    max_iters: usize,
) -> Result<AscentRun> {
    let budget = p0.budget();
    let mut p = p0;
    let mut sol = solver.steady_state(p.values(), p_b.values())?;
    let mut objective = sol.vote_share_a;
    let mut trace = vec![objective];
    let mut true_solver = true_solver;
    let mut true_trace = match true_solver.as_deref_mut() {
        Some(ts) => Some(vec![ts.steady_state(p.values(), p_b.values())?.vote_share_a]),
        None => None,
    };
    let mut converged = false;
    let mut iterations = 0;
    let mut direction = vec![0.0f64; p.len()];
    for it in 0..max_iters {
        iterations = it + 1;
        let y = solver.adjoint(p.values(), p_b.values())?;
        for i in 0..direction.len() {
            direction[i] = y[i] * (1.0 - sol.x[i]);
        }
        let mut step = eta;
        let mut halvings = 0;
        let (p_new, sol_new) = loop {
            let cand_raw: Vec<f64> = p
                .values()
                .iter()
                .zip(&direction)
                .map(|(&pi, &gi)| pi + step * gi)
                .collect();
            let cand = project_simplex(&cand_raw, budget);
            let cand_sol = solver.steady_state(cand.values(), p_b.values())?;
            if cand_sol.vote_share_a >= objective - 1e-9 || halvings >= 30 {
                break (cand, cand_sol);
            }
            step *= 0.5;
            halvings += 1;
        };
        if sol_new.vote_share_a < objective - 1e-9 {
            // even the shortest step decreases the objective: stationary
            converged = true;
            break;
        }
        let delta = sol_new.vote_share_a - objective;
        p = p_new;
        sol = sol_new;
        objective = sol.vote_share_a;
        trace.push(objective);
        if let (Some(ts), Some(tt)) = (true_solver.as_deref_mut(), true_trace.as_mut()) {
            tt.push(ts.steady_state(p.values(), p_b.values())?.vote_share_a);
        }
        if delta.abs() < mu {
            converged = true;
            break;
        }
    }
    Ok(AscentRun {
        p,
        trace,
        true_trace,
        iterations,
        converged,
    })
}

/// Maximizes the controller's vote-share over the budget simplex with
/// projected gradient ascent on the mode-transformed graph. The returned
/// `true_vote_share` is always evaluated on the untransformed signed graph.
pub fn gradient_ascent(
    g: &SignedGraph,
    p_b: &AllocationVector,
    budget_a: f64,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult> {
    if budget_a <= 0.0 || !budget_a.is_finite() {
        return Err(Error::InvalidAllocation(format!("budget_a = {budget_a}")));
    }
    if opts.starts == 0 {
        return Err(Error::InvalidInput("starts must be at least 1".into()));
    }
    let n = g.n();
    if p_b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "adversary allocation of {} entries for {n} nodes",
            p_b.len()
        )));
    }
    let world = g.transform(opts.mode.transform());
    let mut solver = SteadySolver::new(&world);
    let mut true_solver = if opts.record_true_trace {
        Some(SteadySolver::new(g))
    } else {
        None
    };
    let eta = opts.learning_rate.unwrap_or(n as f64);
    if eta <= 0.0 || opts.tolerance <= 0.0 {
        return Err(Error::InvalidInput(
            "learning rate and tolerance must be positive".into(),
        ));
    }

    let mut best: Option<AscentRun> = None;
    for start in 0..opts.starts {
        let p0 = match &opts.init {
            InitStrategy::Uniform => AllocationVector::uniform(n, budget_a),
            InitStrategy::Provided(p) => {
                if p.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "provided start of {} entries for {n} nodes",
                        p.len()
                    )));
                }
                if (p.budget() - budget_a).abs() > 1e-9 * budget_a.max(1.0) {
                    return Err(Error::InvalidAllocation(format!(
                        "provided start has budget {}, expected {budget_a}",
                        p.budget()
                    )));
                }
                p.clone()
            }
            InitStrategy::UniformRandomSimplex => {
                let mut rng = Pcg64::seed_from_u64(opts.seed.wrapping_add(start as u64));
                dirichlet_on_simplex(n, budget_a, &mut rng)
            }
        };
        let run = ascend_once(
            &mut solver,
            true_solver.as_mut(),
            p0,
            p_b,
            eta,
            opts.tolerance,
            opts.max_iters,
        )?;
        let better = match &best {
            None => true,
            Some(b) => run.trace.last() > b.trace.last(),
        };
        if better {
            best = Some(run);
        }
        if matches!(opts.init, InitStrategy::Uniform | InitStrategy::Provided(_)) {
            break; // deterministic starts are identical
        }
    }
    let kept = best.expect("at least one start ran");
    let true_vote_share = steady_state(g, &kept.p, p_b)?.vote_share_a;
    Ok(OptimizationResult {
        p_star: kept.p,
        objective_trace: kept.trace,
        true_vote_share,
        true_trace: kept.true_trace,
        iterations: kept.iterations,
        converged: kept.converged,
    })
}

/// Strategy families for the passive adversary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdversaryKind {
    Uniform,
    AvoidNegative,
    TargetNegative,
    /// Fraction of the budget spread over nodes with negative ties; the rest
    /// goes to the strictly-positive nodes.
    EpsSplit(f64),
    /// Proportional to the positive in-strength.
    DegreeProportional,
}

impl AdversaryKind {
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("eps:").or(lower.strip_prefix("eps=")) {
            let eps: f64 = rest
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad eps value `{rest}`")))?;
            return Ok(AdversaryKind::EpsSplit(eps));
        }
        match lower.as_str() {
            "uniform" => Ok(AdversaryKind::Uniform),
            "avoid" | "avoid_negative" | "avoid-negative" => Ok(AdversaryKind::AvoidNegative),
            "target" | "target_negative" | "target-negative" => Ok(AdversaryKind::TargetNegative),
            "degree" | "degree_proportional" | "degree-proportional" => {
                Ok(AdversaryKind::DegreeProportional)
            }
            other => Err(Error::InvalidInput(format!(
                "unknown adversary strategy `{other}`"
            ))),
        }
    }
}

/// Spreads the adversary's budget per the requested strategy. Strategies are
/// uniform over their targeted class.
pub fn adversary_strategy(
    g: &SignedGraph,
    kind: AdversaryKind,
    budget_b: f64,
) -> Result<AllocationVector> {
    let n = g.n();
    if budget_b <= 0.0 {
        return Err(Error::InvalidAllocation(format!("budget_b = {budget_b}")));
    }
    let negative: Vec<bool> = g.neg_in_strength().iter().map(|&k| k > 0.0).collect();
    let n_neg = negative.iter().filter(|&&b| b).count();
    let n_pos = n - n_neg;
    let eps = match kind {
        AdversaryKind::Uniform => {
            return Ok(AllocationVector::uniform(n, budget_b));
        }
        AdversaryKind::DegreeProportional => {
            let total: f64 = g.pos_in_strength().iter().sum();
            if total <= 0.0 {
                return Err(Error::EmptyTargetClass(
                    "degree-proportional strategy on a graph without positive strength".into(),
                ));
            }
            let values: Vec<f64> = g
                .pos_in_strength()
                .iter()
                .map(|&k| budget_b * k / total)
                .collect();
            return AllocationVector::new(values, budget_b);
        }
        AdversaryKind::AvoidNegative => 0.0,
        AdversaryKind::TargetNegative => 1.0,
        AdversaryKind::EpsSplit(e) => {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidInput(format!("eps = {e} outside [0, 1]")));
            }
            e
        }
    };
    if eps > 0.0 && n_neg == 0 {
        return Err(Error::EmptyTargetClass(
            "no nodes with negative ties".into(),
        ));
    }
    if eps < 1.0 && n_pos == 0 {
        return Err(Error::EmptyTargetClass(
            "no nodes with strictly positive edges".into(),
        ));
    }
    let per_neg = if n_neg > 0 {
        eps * budget_b / n_neg as f64
    } else {
        0.0
    };
    let per_pos = if n_pos > 0 {
        (1.0 - eps) * budget_b / n_pos as f64
    } else {
        0.0
    };
    let values: Vec<f64> = negative
        .iter()
        .map(|&is_neg| if is_neg { per_neg } else { per_pos })
        .collect();
    AllocationVector::new(values, budget_b)
}

/// Payoff of negative-tie awareness: `X_GA / X_GA+ - 1`, both measured as
/// true vote-shares against the same passive adversary.
pub fn relative_gain(
    g: &SignedGraph,
    p_b: &AllocationVector,
    budget_a: f64,
    opts: &OptimizerOptions,
) -> Result<f64> {
    let signed = gradient_ascent(
        g,
        p_b,
        budget_a,
        &OptimizerOptions {
            mode: ObservabilityMode::Signed,
            ..opts.clone()
        },
    )?;
    let mirrored = gradient_ascent(
        g,
        p_b,
        budget_a,
        &OptimizerOptions {
            mode: ObservabilityMode::Mirrored,
            ..opts.clone()
        },
    )?;
    Ok(signed.true_vote_share / mirrored.true_vote_share - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use proptest::prelude::*;

    fn arc(src: u32, dst: u32, w: f64) -> Edge {
        Edge { src, dst, w }
    }

    fn alloc(v: Vec<f64>) -> AllocationVector {
        let b = v.iter().sum();
        AllocationVector::new(v, b).unwrap()
    }

    #[test]
    fn single_node_gradient_is_quarter() {
        let g = SignedGraph::from_arcs(1, vec![], None).unwrap();
        let pa = alloc(vec![1.0]);
        let pb = alloc(vec![1.0]);
        let x = steady_state(&g, &pa, &pb).unwrap();
        let grad = gradient(&g, &pa, &pb, &x).unwrap();
        assert!((grad[0] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn complete_graph_gradient_is_symmetric() {
        let n = 6u32;
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    arcs.push(arc(i, j, 1.0));
                }
            }
        }
        let g = SignedGraph::from_arcs(n as usize, arcs, None).unwrap();
        let pa = AllocationVector::uniform(6, 2.0);
        let pb = AllocationVector::uniform(6, 3.0);
        let x = steady_state(&g, &pa, &pb).unwrap();
        let grad = gradient(&g, &pa, &pb, &x).unwrap();
        for i in 1..6 {
            assert!((grad[i] - grad[0]).abs() < 1e-10);
        }
    }

    /// Central finite differences of the vote-share, the independent check
    /// on the adjoint-solve gradient.
    fn finite_difference(
        g: &SignedGraph,
        pa: &AllocationVector,
        pb: &AllocationVector,
        h: f64,
    ) -> Vec<f64> {
        let n = g.n();
        (0..n)
            .map(|i| {
                let mut up = pa.values().to_vec();
                up[i] += h;
                let mut down = pa.values().to_vec();
                down[i] -= h;
                let up = AllocationVector::new(up.clone(), up.iter().sum()).unwrap();
                let down = AllocationVector::new(down.clone(), down.iter().sum()).unwrap();
                let xu = steady_state(g, &up, pb).unwrap().vote_share_a;
                let xd = steady_state(g, &down, pb).unwrap().vote_share_a;
                (xu - xd) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences_on_signed_graph() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_pcg::Pcg64::seed_from_u64(42);
        let n = 10usize;
        let mut arcs = Vec::new();
        for i in 0..n as u32 {
            for j in 0..n as u32 {
                if i != j && rng.gen::<f64>() < 0.3 {
                    let w = if rng.gen::<f64>() < 0.3 { -1.5 } else { 1.0 };
                    arcs.push(arc(i, j, w));
                }
            }
        }
        let g = SignedGraph::from_arcs(n, arcs, None).unwrap();
        let pa = AllocationVector::uniform(n, 2.0);
        let pb = AllocationVector::uniform(n, 3.0);
        let x = steady_state(&g, &pa, &pb).unwrap();
        let grad = gradient(&g, &pa, &pb, &x).unwrap();
        let fd = finite_difference(&g, &pa, &pb, 1e-5);
        for i in 0..n {
            let scale = grad[i].abs().max(fd[i].abs()).max(1e-8);
            assert!(
                (grad[i] - fd[i]).abs() / scale < 1e-6,
                "entry {i}: {} vs {}",
                grad[i],
                fd[i]
            );
        }
    }

    #[test]
    fn strong_negative_hub_has_negative_gradient_entry() {
        // A node whose negative out-influence dominates its neighbours'
        // total strength is counterproductive to boost; the analytic and
        // finite-difference gradients agree on the sign.
        let arcs = vec![
            arc(0, 1, -10.0),
            arc(1, 0, -10.0),
            arc(0, 2, -10.0),
            arc(2, 0, -10.0),
        ];
        let g = SignedGraph::from_arcs(3, arcs, None).unwrap();
        let pa = AllocationVector::uniform(3, 1.0);
        let pb = AllocationVector::uniform(3, 3.0);
        let x = steady_state(&g, &pa, &pb).unwrap();
        let grad = gradient(&g, &pa, &pb, &x).unwrap();
        let fd = finite_difference(&g, &pa, &pb, 1e-5);
        assert!(grad[0] < 0.0, "expected negative entry, got {}", grad[0]);
        assert!((grad[0] - fd[0]).abs() < 1e-6 * grad[0].abs().max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn gradient_nonnegative_on_positive_graphs(seed in 0u64..5000) {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
            let n = 12usize;
            let mut arcs = Vec::new();
            for i in 0..n as u32 {
                for j in 0..n as u32 {
                    if i != j && rng.gen::<f64>() < 0.25 {
                        arcs.push(arc(i, j, rng.gen_range(0.1..3.0)));
                    }
                }
            }
            let g = SignedGraph::from_arcs(n, arcs, None).unwrap();
            let pa = AllocationVector::uniform(n, rng.gen_range(0.5..4.0));
            let pb = AllocationVector::uniform(n, rng.gen_range(0.5..4.0));
            let x = steady_state(&g, &pa, &pb).unwrap();
            let grad = gradient(&g, &pa, &pb, &x).unwrap();
            for (i, &gi) in grad.iter().enumerate() {
                prop_assert!(gi >= -1e-12, "entry {} = {}", i, gi);
            }
        }

        #[test]
        fn projection_is_idempotent_and_feasible(
            v in proptest::collection::vec(-5.0f64..5.0, 1..25),
            budget in 0.1f64..10.0,
        ) {
            let once = project_simplex(&v, budget);
            let twice = project_simplex(once.values(), budget);
            let sum: f64 = once.values().iter().sum();
            prop_assert!((sum - budget).abs() <= 1e-12 * budget.max(1.0));
            for (&a, &b) in once.values().iter().zip(twice.values()) {
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_matches_kkt_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5], 1.0).values(), &[0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0], 1.0);
        assert!((p.values()[0] - 1.0).abs() < 1e-12 && p.values()[1].abs() < 1e-12);
        let q = project_simplex(&[0.6, 0.6, 0.6], 1.0);
        for &v in q.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    /// Exhaustive grid search over the budget simplex, the optimality oracle
    /// for tiny graphs.
    fn grid_search_best(
        g: &SignedGraph,
        pb: &AllocationVector,
        budget: f64,
        step: f64,
    ) -> f64 {
        let n = g.n();
        let ticks = (budget / step).round() as usize;
        let mut best = f64::NEG_INFINITY;
        let mut alloc_buf = vec![0.0f64; n];
        fn recurse(
            g: &SignedGraph,
            pb: &AllocationVector,
            buf: &mut Vec<f64>,
            node: usize,
            remaining: usize,
            ticks: usize,
            step: f64,
            best: &mut f64,
        ) {
            if node + 1 == buf.len() {
                buf[node] = remaining as f64 * step;
                let pa = AllocationVector::new(buf.clone(), buf.iter().sum()).unwrap();
                let x = steady_state(g, &pa, pb).unwrap().vote_share_a;
                if x > *best {
                    *best = x;
                }
                return;
            }
            for take in 0..=remaining {
                buf[node] = take as f64 * step;
                recurse(g, pb, buf, node + 1, remaining - take, ticks, step, best);
            }
        }
        recurse(g, pb, &mut alloc_buf, 0, ticks, ticks, step, &mut best);
        best
    }

    #[test]
    fn ascent_matches_grid_search_on_signed_star() {
        // centre 0, positive leaf 1, negative leaf 2
        let mut arcs = Vec::new();
        for (a, b, w) in [(0u32, 1u32, 1.0), (0, 2, -1.0)] {
            arcs.push(arc(a, b, w));
            arcs.push(arc(b, a, w));
        }
        let g = SignedGraph::from_arcs(3, arcs, None).unwrap();
        let pb = AllocationVector::uniform(3, 3.0);
        let brute = grid_search_best(&g, &pb, 1.0, 0.01);
        let opts = OptimizerOptions {
            seed: 5,
            starts: 3,
            ..OptimizerOptions::default()
        };
        let out = gradient_ascent(&g, &pb, 1.0, &opts).unwrap();
        assert!(out.converged);
        assert!(
            (out.true_vote_share - brute).abs() < 0.005,
            "ascent {} vs grid {}",
            out.true_vote_share,
            brute
        );
    }

    #[test]
    fn trace_is_monotone_nondecreasing() {
        let mut arcs = Vec::new();
        for (a, b, w) in [(0u32, 1u32, 1.0), (1, 2, -2.0), (2, 3, 1.0), (3, 0, 1.0)] {
            arcs.push(arc(a, b, w));
            arcs.push(arc(b, a, w));
        }
        let g = SignedGraph::from_arcs(4, arcs, None).unwrap();
        let pb = AllocationVector::uniform(4, 4.0);
        let out = gradient_ascent(&g, &pb, 2.0, &OptimizerOptions::default()).unwrap();
        for w in out.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn adversary_strategies_follow_definitions() {
        let mut arcs = Vec::new();
        for (a, b, w) in [(0u32, 1u32, 1.0), (1, 2, -1.0), (2, 3, 1.0)] {
            arcs.push(arc(a, b, w));
            arcs.push(arc(b, a, w));
        }
        // nodes 1 and 2 carry the negative tie
        let g = SignedGraph::from_arcs(4, arcs, None).unwrap();
        let n = 4.0;
        let uni = adversary_strategy(&g, AdversaryKind::Uniform, n).unwrap();
        assert!(uni.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let eps = adversary_strategy(&g, AdversaryKind::EpsSplit(0.25), n).unwrap();
        assert!((eps.values()[1] - 0.5).abs() < 1e-12);
        assert!((eps.values()[0] - 1.5).abs() < 1e-12);
        let avoid = adversary_strategy(&g, AdversaryKind::AvoidNegative, n).unwrap();
        let eps0 = adversary_strategy(&g, AdversaryKind::EpsSplit(0.0), n).unwrap();
        assert_eq!(avoid.values(), eps0.values());
        let target = adversary_strategy(&g, AdversaryKind::TargetNegative, n).unwrap();
        let eps1 = adversary_strategy(&g, AdversaryKind::EpsSplit(1.0), n).unwrap();
        assert_eq!(target.values(), eps1.values());
    }

    #[test]
    fn target_negative_errors_on_positive_graph() {
        let g = SignedGraph::from_arcs(2, vec![arc(0, 1, 1.0), arc(1, 0, 1.0)], None).unwrap();
        assert!(matches!(
            adversary_strategy(&g, AdversaryKind::TargetNegative, 2.0),
            Err(Error::EmptyTargetClass(_))
        ));
    }

    #[test]
    fn relative_gain_vanishes_on_positive_graph() {
        let mut arcs = Vec::new();
        for (a, b) in [(0u32, 1u32), (1, 2), (2, 3), (3, 0), (0, 2)] {
            arcs.push(arc(a, b, 1.0));
            arcs.push(arc(b, a, 1.0));
        }
        let g = SignedGraph::from_arcs(4, arcs, None).unwrap();
        let pb = AllocationVector::uniform(4, 4.0);
        let opts = OptimizerOptions {
            starts: 2,
            seed: 9,
            ..OptimizerOptions::default()
        };
        let gain = relative_gain(&g, &pb, 2.0, &opts).unwrap();
        assert!(gain.abs() < 0.005, "gain = {gain}");
    }
}
