//! Iterated best-response play between two controllers with asymmetric
//! network knowledge. Both controllers allocate simultaneously each round;
//! allocation vectors are revealed at the end of the round and each player
//! best-responds to the last revealed strategy. Perceived utilities come
//! from each player's world-view, true utilities from the signed model.

use crate::dynamics::{steady_state, AllocationVector};
use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::meanfield::{
    maximize_over_simplex, mf_positive_vote_shares, model_with_eps, BlindClass, ClassTemplate,
};
use crate::optimize::{gradient_ascent, InitStrategy, ObservabilityMode, OptimizerOptions};

/// What a player can see of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knowledge {
    Signed,
    Blind,
}

impl Knowledge {
    pub fn mode(self) -> ObservabilityMode {
        match self {
            Knowledge::Signed => ObservabilityMode::Signed,
            Knowledge::Blind => ObservabilityMode::Mirrored,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "signed" | "full" => Ok(Knowledge::Signed),
            "blind" | "unsigned" => Ok(Knowledge::Blind),
            other => Err(Error::InvalidInput(format!("unknown knowledge `{other}`"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Knowledge::Signed => "signed",
            Knowledge::Blind => "blind",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameConfig {
    pub knowledge_a: Knowledge,
    pub knowledge_b: Knowledge,
    pub budget_a: f64,
    pub budget_b: f64,
    /// Optimizer step size within each best response.
    pub eta: f64,
    /// Optimizer termination threshold.
    pub mu: f64,
    /// Equilibrium is declared when both strategies move less than
    /// `response_tol * budget` in max-norm over one round.
    pub response_tol: f64,
    pub max_rounds: usize,
    /// Fraction of the previous strategy blended into the update; 0 = off.
    pub damping: f64,
    pub seed: u64,
}

impl GameConfig {
    pub fn new(knowledge_a: Knowledge, knowledge_b: Knowledge, budget_a: f64, budget_b: f64) -> Self {
        GameConfig {
            knowledge_a,
            knowledge_b,
            budget_a,
            budget_b,
            eta: 5.0,
            mu: 1e-7,
            response_tol: 1e-4,
            max_rounds: 200,
            damping: 0.0,
            seed: 0,
        }
    }
}

/// Per-round snapshot of strategies and utilities.
#[derive(Debug, Clone)]
pub struct GameRound {
    pub round: usize,
    /// Fraction of each player's budget on nodes carrying negative ties.
    pub eps_a: f64,
    pub eps_b: f64,
    pub perceived_xa: f64,
    pub perceived_xb: f64,
    pub true_xa: f64,
    pub true_xb: f64,
    pub delta_a: f64,
    pub delta_b: f64,
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub strategy_a: AllocationVector,
    pub strategy_b: AllocationVector,
    pub rounds: Vec<GameRound>,
    pub converged: bool,
    /// Utilities each player believes they obtained, under their own view.
    pub perceived_utilities: (f64, f64),
    /// Utilities under the signed model; they sum to one.
    pub true_utilities: (f64, f64),
    pub damping_used: f64,
}

/// One player's utility-maximizing reply to a fixed opponent allocation,
/// under the player's world-view. Starts from the player's previous
/// strategy, which keeps rounds deterministic.
pub fn best_response(
    g: &SignedGraph,
    knowledge: Knowledge,
    opponent: &AllocationVector,
    budget: f64,
    previous: &AllocationVector,
    cfg: &GameConfig,
) -> Result<AllocationVector> {
    let opts = OptimizerOptions {
        learning_rate: Some(cfg.eta),
        tolerance: cfg.mu,
        max_iters: 100_000,
        init: InitStrategy::Provided(previous.clone()),
        mode: knowledge.mode(),
        seed: cfg.seed,
        starts: 1,
        record_true_trace: false,
    };
    Ok(gradient_ascent(g, opponent, budget, &opts)?.p_star)
}

fn blend(newer: &AllocationVector, older: &AllocationVector, damping: f64) -> AllocationVector {
    if damping <= 0.0 {
        return newer.clone();
    }
    let values: Vec<f64> = newer
        .values()
        .iter()
        .zip(older.values())
        .map(|(&n, &o)| (1.0 - damping) * n + damping * o)
        .collect();
    AllocationVector::new(values, newer.budget()).expect("convex blend stays on the simplex")
}

fn max_delta(a: &AllocationVector, b: &AllocationVector) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

/// Plays simultaneous best responses until neither strategy moves by more
/// than the tolerance, or the round limit is hit. Non-convergence is
/// reported in the returned state rather than as an error.
pub fn play_game(g: &SignedGraph, cfg: &GameConfig) -> Result<GameState> {
    if cfg.budget_a <= 0.0 || cfg.budget_b <= 0.0 {
        return Err(Error::InvalidAllocation("budgets must be positive".into()));
    }
    if cfg.max_rounds == 0 {
        return Err(Error::InvalidInput("max_rounds must be at least 1".into()));
    }
    let n = g.n();
    let negative: Vec<bool> = g.neg_in_strength().iter().map(|&k| k > 0.0).collect();
    let eps_of = |p: &AllocationVector| p.fraction_on(|i| negative[i]);

    let world_a = g.transform(cfg.knowledge_a.mode().transform());
    let world_b = g.transform(cfg.knowledge_b.mode().transform());

    let mut p_a = AllocationVector::uniform(n, cfg.budget_a);
    let mut p_b = AllocationVector::uniform(n, cfg.budget_b);
    let mut rounds = Vec::new();
    let mut converged = false;
    for round in 1..=cfg.max_rounds {
        let br_a = best_response(g, cfg.knowledge_a, &p_b, cfg.budget_a, &p_a, cfg)?;
        let br_b = best_response(g, cfg.knowledge_b, &p_a, cfg.budget_b, &p_b, cfg)?;
        let next_a = blend(&br_a, &p_a, cfg.damping);
        let next_b = blend(&br_b, &p_b, cfg.damping);
        let delta_a = max_delta(&next_a, &p_a);
        let delta_b = max_delta(&next_b, &p_b);
        p_a = next_a;
        p_b = next_b;

        let true_sol = steady_state(g, &p_a, &p_b)?;
        let perceived_xa = steady_state(&world_a, &p_a, &p_b)?.vote_share_a;
        // B's perceived share: same dynamics with the roles swapped
        let perceived_xb = steady_state(&world_b, &p_b, &p_a)?.vote_share_a;
        rounds.push(GameRound {
            round,
            eps_a: eps_of(&p_a),
            eps_b: eps_of(&p_b),
            perceived_xa,
            perceived_xb,
            true_xa: true_sol.vote_share_a,
            true_xb: true_sol.vote_share_b(),
            delta_a,
            delta_b,
        });
        if delta_a < cfg.response_tol * cfg.budget_a && delta_b < cfg.response_tol * cfg.budget_b {
            converged = true;
            break;
        }
    }
    let last = rounds.last().expect("at least one round played");
    Ok(GameState {
        perceived_utilities: (last.perceived_xa, last.perceived_xb),
        true_utilities: (last.true_xa, last.true_xb),
        strategy_a: p_a,
        strategy_b: p_b,
        rounds,
        converged,
        damping_used: cfg.damping,
    })
}

// ---------------------------------------------------------------------------
// Mean-field play on class templates
// ---------------------------------------------------------------------------

/// Class structure for the semi-analytic game: positive/negative strengths
/// and population weight per class. Strategies are per-class budget
/// fractions.
#[derive(Debug, Clone)]
pub struct MfGame {
    pub classes: Vec<(f64, f64, f64)>, // (k_a, k_b, weight)
    pub budget_a_per_node: f64,
    pub budget_b_per_node: f64,
    pub knowledge_a: Knowledge,
    pub knowledge_b: Knowledge,
    pub response_tol: f64,
    pub max_rounds: usize,
}

#[derive(Debug, Clone)]
pub struct MfGameRound {
    pub round: usize,
    pub eps_a: f64,
    pub eps_b: f64,
    pub perceived_xa: f64,
    pub perceived_xb: f64,
    pub true_xa: f64,
    pub true_xb: f64,
}

#[derive(Debug, Clone)]
pub struct MfGameState {
    pub eps_a: Vec<f64>,
    pub eps_b: Vec<f64>,
    pub eps_a_negative: f64,
    pub eps_b_negative: f64,
    pub perceived_utilities: (f64, f64),
    pub true_utilities: (f64, f64),
    pub rounds: usize,
    pub history: Vec<MfGameRound>,
    pub converged: bool,
}

impl MfGame {
    fn templates_for(&self, opponent_eps: &[f64], opponent_budget: f64) -> Vec<ClassTemplate> {
        self.classes
            .iter()
            .zip(opponent_eps)
            .map(|(&(k_a, k_b, weight), &e)| ClassTemplate {
                k_a,
                k_b,
                weight,
                b: e * opponent_budget / weight,
            })
            .collect()
    }

    fn signed_utility(&self, own_eps: &[f64], own_budget: f64, opp_eps: &[f64], opp_budget: f64) -> f64 {
        let templates = self.templates_for(opp_eps, opp_budget);
        match model_with_eps(&templates, own_eps, own_budget) {
            Ok(m) => m
                .vote_share()
                .map(|v| v.x_a_share)
                .unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn blind_utility(&self, own_eps: &[f64], own_budget: f64, opp_eps: &[f64], opp_budget: f64) -> f64 {
        let classes: Vec<BlindClass> = self
            .classes
            .iter()
            .zip(own_eps.iter().zip(opp_eps))
            .map(|(&(k_a, k_b, weight), (&ea, &eb))| BlindClass {
                k: k_a + k_b,
                weight,
                a: ea * own_budget / weight,
                b: eb * opp_budget / weight,
            })
            .collect();
        mf_positive_vote_shares(&classes)
            .map(|(xa, _)| xa)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn best_eps(
        &self,
        knowledge: Knowledge,
        own_budget: f64,
        opp_eps: &[f64],
        opp_budget: f64,
    ) -> Result<Vec<f64>> {
        let dim = self.classes.len();
        let (eps, _) = maximize_over_simplex(dim, |eps| match knowledge {
            Knowledge::Signed => self.signed_utility(eps, own_budget, opp_eps, opp_budget),
            Knowledge::Blind => self.blind_utility(eps, own_budget, opp_eps, opp_budget),
        })?;
        Ok(eps)
    }

    fn perceived(&self, knowledge: Knowledge, own_eps: &[f64], own_b: f64, opp_eps: &[f64], opp_b: f64) -> f64 {
        match knowledge {
            Knowledge::Signed => self.signed_utility(own_eps, own_b, opp_eps, opp_b),
            Knowledge::Blind => self.blind_utility(own_eps, own_b, opp_eps, opp_b),
        }
    }

    /// Simultaneous best responses over the class-fraction simplex.
    pub fn play(&self) -> Result<MfGameState> {
        // start from weight-proportional (uniform per node) strategies
        let mut eps_a: Vec<f64> = self.classes.iter().map(|c| c.2).collect();
        let mut eps_b = eps_a.clone();
        let mut converged = false;
        let mut rounds = 0;
        let eps_neg = |eps: &[f64]| {
            self.classes
                .iter()
                .zip(eps)
                .filter(|((_, k_b, _), _)| *k_b > 0.0)
                .map(|(_, &e)| e)
                .sum::<f64>()
        };
        let mut history = Vec::new();
        for round in 1..=self.max_rounds {
            rounds = round;
            let next_a = self.best_eps(self.knowledge_a, self.budget_a_per_node, &eps_b, self.budget_b_per_node)?;
            let next_b = self.best_eps(self.knowledge_b, self.budget_b_per_node, &eps_a, self.budget_a_per_node)?;
            let delta = next_a
                .iter()
                .zip(&eps_a)
                .chain(next_b.iter().zip(&eps_b))
                .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()));
            eps_a = next_a;
            eps_b = next_b;
            let true_xa =
                self.signed_utility(&eps_a, self.budget_a_per_node, &eps_b, self.budget_b_per_node);
            history.push(MfGameRound {
                round,
                eps_a: eps_neg(&eps_a),
                eps_b: eps_neg(&eps_b),
                perceived_xa: self.perceived(
                    self.knowledge_a,
                    &eps_a,
                    self.budget_a_per_node,
                    &eps_b,
                    self.budget_b_per_node,
                ),
                perceived_xb: self.perceived(
                    self.knowledge_b,
                    &eps_b,
                    self.budget_b_per_node,
                    &eps_a,
                    self.budget_a_per_node,
                ),
                true_xa,
                true_xb: 1.0 - true_xa,
            });
            if delta < self.response_tol {
                converged = true;
                break;
            }
        }
        let last = history.last().expect("at least one round played");
        Ok(MfGameState {
            eps_a_negative: eps_neg(&eps_a),
            eps_b_negative: eps_neg(&eps_b),
            perceived_utilities: (last.perceived_xa, last.perceived_xb),
            true_utilities: (last.true_xa, last.true_xb),
            eps_a,
            eps_b,
            rounds,
            history,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{generate_family, Family};
    use crate::optimize::{adversary_strategy, AdversaryKind};

    #[test]
    fn single_round_equals_standalone_optimizer() {
        let merged = generate_family(Family::RegReg, 120, 8.0, 2.0, 0.5, 3).unwrap();
        let g = &merged.graph;
        let pb = adversary_strategy(g, AdversaryKind::Uniform, 120.0).unwrap();
        let cfg = GameConfig::new(Knowledge::Signed, Knowledge::Blind, 60.0, 120.0);
        let prev = AllocationVector::uniform(120, 60.0);
        let br = best_response(g, Knowledge::Signed, &pb, 60.0, &prev, &cfg).unwrap();
        let opts = OptimizerOptions {
            learning_rate: Some(cfg.eta),
            tolerance: cfg.mu,
            init: InitStrategy::Provided(prev),
            mode: ObservabilityMode::Signed,
            starts: 1,
            ..OptimizerOptions::default()
        };
        let standalone = gradient_ascent(g, &pb, 60.0, &opts).unwrap();
        for (a, b) in br.values().iter().zip(standalone.p_star.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blind_response_ignores_edge_signs() {
        // two graphs differing only in signs give the same blind response
        let merged = generate_family(Family::RegReg, 100, 8.0, 2.0, 0.5, 9).unwrap();
        let g = &merged.graph;
        let mirrored = g.transform(crate::graph::Transform::MirrorPositive);
        let pb = adversary_strategy(g, AdversaryKind::Uniform, 100.0).unwrap();
        let cfg = GameConfig::new(Knowledge::Blind, Knowledge::Blind, 50.0, 100.0);
        let prev = AllocationVector::uniform(100, 50.0);
        let on_signed = best_response(g, Knowledge::Blind, &pb, 50.0, &prev, &cfg).unwrap();
        let on_mirrored = best_response(&mirrored, Knowledge::Blind, &pb, 50.0, &prev, &cfg).unwrap();
        for (a, b) in on_signed.values().iter().zip(on_mirrored.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn true_utilities_sum_to_one() {
        let merged = generate_family(Family::RegReg, 80, 8.0, 2.0, 0.5, 11).unwrap();
        let mut cfg = GameConfig::new(Knowledge::Signed, Knowledge::Blind, 40.0, 80.0);
        cfg.max_rounds = 10;
        let state = play_game(&merged.graph, &cfg).unwrap();
        let (xa, xb) = state.true_utilities;
        assert!((xa + xb - 1.0).abs() < 1e-12);
        for r in &state.rounds {
            assert!((r.true_xa + r.true_xb - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_blind_game_is_fair() {
        // equal budgets, both blind: swapping the labels swaps the outputs
        let merged = generate_family(Family::RegReg, 80, 8.0, 2.0, 0.5, 13).unwrap();
        let cfg = GameConfig::new(Knowledge::Blind, Knowledge::Blind, 80.0, 80.0);
        let state = play_game(&merged.graph, &cfg).unwrap();
        assert!(state.converged);
        for (a, b) in state
            .strategy_a
            .values()
            .iter()
            .zip(state.strategy_b.values())
        {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((state.true_utilities.0 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_stable_under_one_more_round() {
        let merged = generate_family(Family::RegReg, 60, 8.0, 2.0, 0.5, 17).unwrap();
        let g = &merged.graph;
        let cfg = GameConfig::new(Knowledge::Blind, Knowledge::Blind, 60.0, 60.0);
        let state = play_game(g, &cfg).unwrap();
        assert!(state.converged);
        let br_a = best_response(g, cfg.knowledge_a, &state.strategy_b, 60.0, &state.strategy_a, &cfg).unwrap();
        let delta = max_delta(&br_a, &state.strategy_a);
        assert!(delta < cfg.response_tol * 60.0 * 2.0, "delta = {delta}");
    }

    #[test]
    fn swapping_player_labels_swaps_outputs() {
        let merged = generate_family(Family::CpRegHigh, 80, 8.0, 2.0, 0.5, 23).unwrap();
        let g = &merged.graph;
        let mut fwd = GameConfig::new(Knowledge::Signed, Knowledge::Blind, 40.0, 80.0);
        fwd.max_rounds = 20;
        let mut rev = GameConfig::new(Knowledge::Blind, Knowledge::Signed, 80.0, 40.0);
        rev.max_rounds = 20;
        let s1 = play_game(g, &fwd).unwrap();
        let s2 = play_game(g, &rev).unwrap();
        for (a, b) in s1.strategy_a.values().iter().zip(s2.strategy_b.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in s1.strategy_b.values().iter().zip(s2.strategy_a.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s1.true_utilities.0 - s2.true_utilities.1).abs() < 1e-12);
    }

    #[test]
    fn mf_blind_equilibrium_targets_uniformly() {
        // Reg-Reg p = 0.5: both blind players settle on uniform targeting,
        // i.e. the negative-tie class receives its population share
        let game = MfGame {
            classes: vec![(16.0, 8.0, 0.5), (16.0, 0.0, 0.5)],
            budget_a_per_node: 1.0,
            budget_b_per_node: 1.0,
            knowledge_a: Knowledge::Blind,
            knowledge_b: Knowledge::Blind,
            response_tol: 1e-6,
            max_rounds: 100,
        };
        let state = game.play().unwrap();
        assert!(state.converged);
        assert!(
            (state.eps_a_negative - 0.5).abs() < 0.01,
            "eps_a = {}",
            state.eps_a_negative
        );
        assert!((state.eps_b_negative - 0.5).abs() < 0.01);
        assert!((state.true_utilities.0 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mf_signed_player_avoids_negative_ties_when_poor() {
        // CP-Reg-High p = 0.5, deep in the scarce-budget regime: the aware
        // player avoids the negative hubs, and the avoidance leaks enough
        // information to turn the knowledge gain into a loss
        let classes = vec![(30.0, 8.0, 0.5), (2.0, 0.0, 0.5)];
        let aware = MfGame {
            classes: classes.clone(),
            budget_a_per_node: 0.1,
            budget_b_per_node: 1.0,
            knowledge_a: Knowledge::Signed,
            knowledge_b: Knowledge::Blind,
            response_tol: 1e-6,
            max_rounds: 100,
        };
        let aware_state = aware.play().unwrap();
        assert!(aware_state.converged);
        assert!(
            aware_state.eps_a_negative < 0.1,
            "eps_a = {}",
            aware_state.eps_a_negative
        );
        let blind = MfGame {
            knowledge_a: Knowledge::Blind,
            ..aware
        };
        let blind_state = blind.play().unwrap();
        assert!(
            aware_state.true_utilities.0 < blind_state.true_utilities.0,
            "aware {} vs blind {}",
            aware_state.true_utilities.0,
            blind_state.true_utilities.0
        );
    }

    #[test]
    fn mf_rich_aware_player_turns_uniform() {
        // around B_A/B_B = 10 both controllers play close to uniform
        let game = MfGame {
            classes: vec![(16.0, 8.0, 0.5), (16.0, 0.0, 0.5)],
            budget_a_per_node: 10.0,
            budget_b_per_node: 1.0,
            knowledge_a: Knowledge::Signed,
            knowledge_b: Knowledge::Blind,
            response_tol: 1e-6,
            max_rounds: 200,
        };
        let state = game.play().unwrap();
        assert!(
            (state.eps_a_negative - 0.5).abs() < 0.1,
            "eps_a = {}",
            state.eps_a_negative
        );
        assert!(
            (state.eps_b_negative - 0.5).abs() < 0.1,
            "eps_b = {}",
            state.eps_b_negative
        );
    }
}
