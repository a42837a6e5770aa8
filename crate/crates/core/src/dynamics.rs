//! Steady-state solution of the signed voter dynamics, vote-share
//! evaluation, a stochastic agent-based simulator used as an independent
//! oracle, and a forward-Euler integrator for the rate equation.
//!
//! The equilibrium solves `[L + diag(p_A + p_B)] x = p_A + k_b`, where the
//! per-node right-hand side collects the controller's allocation plus the
//! total negative in-strength (a node's haters push it toward the focal
//! opinion when they hold the opposite one).

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::graph::{SignedGraph, SignedLaplacian};
use crate::sparse::{solve_system, SystemOp, Workspace};

/// Nonnegative per-node budget vector on a scaled simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector {
    values: Vec<f64>,
    budget: f64,
}

impl AllocationVector {
    /// Validates entries against the simplex invariants. The budget must be
    /// nonnegative; optimizers additionally require it to be positive.
    pub fn new(values: Vec<f64>, budget: f64) -> Result<Self> {
        if budget < 0.0 || !budget.is_finite() {
            return Err(Error::InvalidAllocation(format!("budget {budget}")));
        }
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < 0.0 || !v.is_finite())
        {
            return Err(Error::InvalidAllocation(format!("entry {i} = {v}")));
        }
        let sum: f64 = values.iter().sum();
        let tol = 1e-12 * budget.max(1.0);
        if (sum - budget).abs() > tol {
            return Err(Error::InvalidAllocation(format!(
                "entries sum to {sum}, budget is {budget}"
            )));
        }
        Ok(AllocationVector { values, budget })
    }

    /// `budget / n` on every node.
    pub fn uniform(n: usize, budget: f64) -> Self {
        AllocationVector {
            values: vec![budget / n as f64; n],
            budget,
        }
    }

    pub fn zeros(n: usize) -> Self {
        AllocationVector {
            values: vec![0.0; n],
            budget: 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of the budget placed on nodes for which `marker` is true.
    pub fn fraction_on<F: Fn(usize) -> bool>(&self, marker: F) -> f64 {
        if self.budget <= 0.0 {
            return 0.0;
        }
        let on: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| marker(*i))
            .map(|(_, &v)| v)
            .sum();
        on / self.budget
    }
}

/// Per-node opinion probabilities and aggregate vote-shares at equilibrium.
#[derive(Debug, Clone)]
pub struct SteadyStateSolution {
    pub x: Vec<f64>,
    pub vote_share_a: f64,
    pub solver_residual: f64,
}

impl SteadyStateSolution {
    pub fn vote_share_b(&self) -> f64 {
        1.0 - self.vote_share_a
    }
}

/// Reusable solver session for one graph: holds the Laplacian split and the
/// Krylov workspaces, and warm-starts successive solves. This is what makes
/// the optimizer's inner loop cheap, since only the diagonal changes.
pub struct SteadySolver {
    lap: SignedLaplacian,
    symmetric: bool,
    k_b: Vec<f64>,
    diag: Vec<f64>,
    ws: Workspace,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SteadySolver {
    pub fn new(g: &SignedGraph) -> Self {
        SteadySolver {
            lap: g.laplacian(),
            symmetric: g.is_symmetric(),
            k_b: g.neg_in_strength().to_vec(),
            diag: vec![0.0; g.n()],
            ws: Workspace::default(),
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.lap.n()
    }

    fn prepare_diag(&mut self, p_a: &[f64], p_b: &[f64]) -> Result<()> {
        let n = self.n();
        if p_a.len() != n || p_b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "allocations of {} / {} entries for {n} nodes",
                p_a.len(),
                p_b.len()
            )));
        }
        let mut undefined = Vec::new();
        for i in 0..n {
            let d = self.lap.diag[i] + p_a[i] + p_b[i];
            if d <= 0.0 {
                undefined.push(i);
            }
            self.diag[i] = d;
        }
        if !undefined.is_empty() {
            return Err(Error::DynamicallyUndefined { nodes: undefined });
        }
        Ok(())
    }

    /// Solves for the equilibrium opinion probabilities.
    pub fn steady_state(&mut self, p_a: &[f64], p_b: &[f64]) -> Result<SteadyStateSolution> {
        self.prepare_diag(p_a, p_b)?;
        let n = self.n();
        let rhs: Vec<f64> = (0..n).map(|i| p_a[i] + self.k_b[i]).collect();
        let op = SystemOp {
            off: &self.lap.off,
            off_t: &self.lap.off_t,
            diag: &self.diag,
        };
        let report = solve_system(&op, false, &rhs, &mut self.x, self.symmetric, &mut self.ws)?;
        let vote_share_a = self.x.iter().sum::<f64>() / n as f64;
        Ok(SteadyStateSolution {
            x: self.x.clone(),
            vote_share_a,
            solver_residual: report.residual,
        })
    }

    /// Solves the adjoint system `M^T y = 1/N`, the shared factor of every
    /// gradient entry.
    pub fn adjoint(&mut self, p_a: &[f64], p_b: &[f64]) -> Result<Vec<f64>> {
        self.prepare_diag(p_a, p_b)?;
        let n = self.n();
        let rhs = vec![1.0 / n as f64; n];
        let op = SystemOp {
            off: &self.lap.off,
            off_t: &self.lap.off_t,
            diag: &self.diag,
        };
        solve_system(&op, true, &rhs, &mut self.y, self.symmetric, &mut self.ws)?;
        Ok(self.y.clone())
    }
}

/// One-shot equilibrium evaluation.
pub fn steady_state(
    g: &SignedGraph,
    p_a: &AllocationVector,
    p_b: &AllocationVector,
) -> Result<SteadyStateSolution> {
    SteadySolver::new(g).steady_state(p_a.values(), p_b.values())
}

/// Initial opinions for the agent-based simulator.
#[derive(Debug, Clone)]
pub enum InitialOpinions {
    UniformRandom,
    /// `true` means opinion A.
    Fixed(Vec<bool>),
}

/// Monte Carlo estimate from the agent-based run.
#[derive(Debug, Clone)]
pub struct VoterEstimate {
    pub x_hat: Vec<f64>,
    pub vote_share_a: f64,
    /// Standard error of `vote_share_a`, from batch means over sweeps.
    pub std_err: f64,
}

/// Stochastic voter-model simulator. One sweep performs `N` single-node
/// updates: the chosen node picks an influence source with probability
/// proportional to its strength and copies it (positive tie or controller)
/// or adopts the opposite opinion (negative tie).
pub fn simulate_voter(
    g: &SignedGraph,
    p_a: &AllocationVector,
    p_b: &AllocationVector,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<VoterEstimate> {
    simulate_voter_from(g, p_a, p_b, sweeps, burn_in, seed, InitialOpinions::UniformRandom)
}

pub fn simulate_voter_from(
    g: &SignedGraph,
    p_a: &AllocationVector,
    p_b: &AllocationVector,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
    init: InitialOpinions,
) -> Result<VoterEstimate> {
    let n = g.n();
    let (p_a, p_b) = (p_a.values(), p_b.values());
    if p_a.len() != n || p_b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "allocations of {} / {} entries for {n} nodes",
            p_a.len(),
            p_b.len()
        )));
    }
    if sweeps <= burn_in {
        return Err(Error::InvalidInput(format!(
            "sweeps ({sweeps}) must exceed burn_in ({burn_in})"
        )));
    }
    // flattened cumulative source tables: incoming arcs, then A, then B
    let mut cum_offsets = vec![0usize; n + 1];
    let mut undefined = Vec::new();
    for i in 0..n {
        let deg = g.incoming(i).count();
        cum_offsets[i + 1] = cum_offsets[i] + deg + 2;
        let total = g.pos_in_strength()[i] + g.neg_in_strength()[i] + p_a[i] + p_b[i];
        if total <= 0.0 {
            undefined.push(i);
        }
    }
    if !undefined.is_empty() {
        return Err(Error::DynamicallyUndefined { nodes: undefined });
    }
    let mut cum = vec![0.0f64; cum_offsets[n]];
    let mut src: Vec<u32> = vec![0; cum_offsets[n]];
    let mut sgn: Vec<bool> = vec![false; cum_offsets[n]]; // true = negative tie
    for i in 0..n {
        let mut acc = 0.0;
        let mut k = cum_offsets[i];
        for (j, w) in g.incoming(i) {
            acc += w.abs();
            cum[k] = acc;
            src[k] = j as u32;
            sgn[k] = w < 0.0;
            k += 1;
        }
        acc += p_a[i];
        cum[k] = acc;
        src[k] = u32::MAX; // controller A
        k += 1;
        acc += p_b[i];
        cum[k] = acc;
        src[k] = u32::MAX - 1; // controller B
    }

    let mut rng = Pcg64::seed_from_u64(seed);
    let mut state: Vec<bool> = match init {
        InitialOpinions::UniformRandom => (0..n).map(|_| rng.gen::<bool>()).collect(),
        InitialOpinions::Fixed(s) => {
            if s.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "initial state of {} entries for {n} nodes",
                    s.len()
                )));
            }
            s
        }
    };

    let kept = sweeps - burn_in;
    let mut counts = vec![0u64; n];
    let mut share_series = Vec::with_capacity(kept);
    for sweep in 0..sweeps {
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            let lo = cum_offsets[i];
            let hi = cum_offsets[i + 1];
            let total = cum[hi - 1];
            let u = rng.gen::<f64>() * total;
            // binary search the cumulative table
            let mut a = lo;
            let mut b = hi;
            while a < b {
                let mid = (a + b) / 2;
                if cum[mid] > u {
                    b = mid;
                } else {
                    a = mid + 1;
                }
            }
            let pick = a.min(hi - 1);
            state[i] = match src[pick] {
                u32::MAX => true,
                v if v == u32::MAX - 1 => false,
                j => {
                    let neighbor = state[j as usize];
                    if sgn[pick] {
                        !neighbor
                    } else {
                        neighbor
                    }
                }
            };
        }
        if sweep >= burn_in {
            let mut ones = 0u64;
            for (i, &s) in state.iter().enumerate() {
                if s {
                    counts[i] += 1;
                    ones += 1;
                }
            }
            share_series.push(ones as f64 / n as f64);
        }
    }
    let x_hat: Vec<f64> = counts.iter().map(|&c| c as f64 / kept as f64).collect();
    let vote_share_a = share_series.iter().sum::<f64>() / kept as f64;
    // batch means over the sweep series to absorb autocorrelation
    let batches = 20.min(kept.max(1));
    let batch_len = kept / batches;
    let mut batch_means = Vec::with_capacity(batches);
    for b in 0..batches {
        let chunk = &share_series[b * batch_len..(b + 1) * batch_len];
        batch_means.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
    }
    let mean_of_batches = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean_of_batches).powi(2))
        .sum::<f64>()
        / (batches.saturating_sub(1)).max(1) as f64;
    let std_err = (var / batches as f64).sqrt();
    Ok(VoterEstimate {
        x_hat,
        vote_share_a,
        std_err,
    })
}

/// Forward-Euler trajectory of the rate equation.
#[derive(Debug, Clone)]
pub struct RateTrajectory {
    pub dt: f64,
    /// Snapshot cadence in steps; snapshots always include step 0 and the end.
    pub stride: usize,
    pub snapshots: Vec<Vec<f64>>,
    /// Aggregate vote-share after every step (step 0 included).
    pub vote_shares: Vec<f64>,
    pub final_state: Vec<f64>,
}

/// Integrates `dx_i/dt = (1 - x_i) phi_i(A) - x_i phi_i(B)` with explicit
/// Euler steps. Errors if a step pushes any state outside `[-1e-6, 1 + 1e-6]`.
pub fn integrate_rate_equation(
    g: &SignedGraph,
    p_a: &AllocationVector,
    p_b: &AllocationVector,
    x0: &[f64],
    dt: f64,
    t_max: f64,
) -> Result<RateTrajectory> {
    let n = g.n();
    let (p_a, p_b) = (p_a.values(), p_b.values());
    if x0.len() != n || p_a.len() != n || p_b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "state/allocation sizes for {n} nodes"
        )));
    }
    if dt <= 0.0 || t_max < 0.0 {
        return Err(Error::InvalidInput(format!("dt = {dt}, t_max = {t_max}")));
    }
    if x0.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidInput("x0 outside [0, 1]".into()));
    }
    let mut undefined = Vec::new();
    let mut inv_total = vec![0.0f64; n];
    for i in 0..n {
        let total = g.pos_in_strength()[i] + g.neg_in_strength()[i] + p_a[i] + p_b[i];
        if total <= 0.0 {
            undefined.push(i);
        } else {
            inv_total[i] = 1.0 / total;
        }
    }
    if !undefined.is_empty() {
        return Err(Error::DynamicallyUndefined { nodes: undefined });
    }
    let steps = (t_max / dt).ceil() as usize;
    let stride = ((steps.max(1) * n) / 4_000_000).max(1);
    let mut x = x0.to_vec();
    let mut dx = vec![0.0f64; n];
    let mut snapshots = vec![x.clone()];
    let mut vote_shares = vec![x.iter().sum::<f64>() / n as f64];
    for step in 0..steps {
        for i in 0..n {
            // numerators of phi_i(A) and phi_i(B)
            let mut num_a = p_a[i];
            let mut num_b = p_b[i];
            for (j, w) in g.incoming(i) {
                if w > 0.0 {
                    num_a += w * x[j];
                    num_b += w * (1.0 - x[j]);
                } else {
                    num_a += -w * (1.0 - x[j]);
                    num_b += -w * x[j];
                }
            }
            dx[i] = ((1.0 - x[i]) * num_a - x[i] * num_b) * inv_total[i];
        }
        for i in 0..n {
            x[i] += dt * dx[i];
            if !(-1e-6..=1.0 + 1e-6).contains(&x[i]) {
                return Err(Error::UnstableStep {
                    t: (step + 1) as f64 * dt,
                });
            }
        }
        vote_shares.push(x.iter().sum::<f64>() / n as f64);
        if (step + 1) % stride == 0 || step + 1 == steps {
            snapshots.push(x.clone());
        }
    }
    Ok(RateTrajectory {
        dt,
        stride,
        snapshots,
        vote_shares,
        final_state: x,
    })
}
