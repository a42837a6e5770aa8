//! `svim`: competitive influence maximization on signed networks.
//!
//! Subcommands generate synthetic signed networks, optimize allocations
//! against passive adversaries, replay the full experiment sweeps as CSV
//! tables, evaluate the mean-field models and play best-response games.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use svim::experiment::{run_experiment, summarize, ExperimentConfig};
use svim::game::{GameConfig, Knowledge, MfGame};
use svim::graph::load_edge_csv;
use svim::meanfield::{mf_class_templates, mf_optimize_eps, MfModel};
use svim::netgen::{
    generate_component, generate_family, merge_signed, ComponentKind, ComponentSpec, Family,
    MergePlan, Placement,
};
use svim::optimize::{
    adversary_strategy, gradient_ascent, AdversaryKind, ObservabilityMode, OptimizerOptions,
};

#[derive(Parser)]
#[command(name = "svim", version, about = "Influence maximization on signed networks")]
struct Cli {
    /// Master seed for everything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 2)]
    jobs: usize,
    /// Directory for experiment outputs.
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic signed network and write it as an edge CSV.
    Gen(GenArgs),
    /// Run gradient ascent on a graph and write the convergence trace.
    Optimize(OptimizeArgs),
    /// Relative gain of sign-aware over sign-agnostic optimization.
    Gain(GainArgs),
    /// Run a configured experiment sweep.
    Sweep(SweepArgs),
    /// Semi-analytic optimal allocations for the structured families.
    Meanfield(MeanfieldArgs),
    /// Iterated best-response play between two controllers.
    Game(GameArgs),
    /// Reduce a results directory to headline numbers.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Positive component: regular:<k> | cp:<k_high>,<k_low>,<frac_high> |
    /// er:<mean_k> | sf:<m>. Overridden by --family.
    #[arg(long)]
    positive: Option<String>,
    /// Negative component, same syntax; its size is round(p * n).
    #[arg(long)]
    negative: Option<String>,
    /// Named family preset (reg-reg, cp-reg-high, cp-reg-low, cp-reg-rand,
    /// reg-cp, reg-er, reg-sf, sf-reg).
    #[arg(long)]
    family: Option<String>,
    /// Nodes in the positive component.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Mean positive strength (family presets only).
    #[arg(long, default_value_t = 16.0)]
    mean_ka: f64,
    /// Mean negative strength (family presets only).
    #[arg(long, default_value_t = 4.0)]
    mean_kb: f64,
    /// Fraction of nodes carrying negative ties.
    #[arg(long)]
    p: f64,
    /// Negative-tie placement: r | h | l.
    #[arg(long, default_value = "r")]
    placement: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    graph: PathBuf,
    /// ga | ga+ | gaphi.
    #[arg(long, default_value = "ga")]
    mode: String,
    /// Total budget for the optimizing controller.
    #[arg(long)]
    budget_a: f64,
    /// Adversary: uniform | avoid_negative | target_negative | eps:<f> |
    /// degree_proportional.
    #[arg(long, default_value = "uniform")]
    adversary: String,
    /// Total adversary budget; defaults to one unit per node.
    #[arg(long)]
    budget_b: Option<f64>,
    /// Step size; defaults to the node count.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    mu: f64,
    #[arg(long, default_value_t = 5)]
    starts: usize,
    /// Treat the edge list as undirected.
    #[arg(long, default_value_t = false)]
    undirected: bool,
    /// Restrict to the largest connected component before optimizing.
    #[arg(long, default_value_t = false)]
    lcc: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    budget_a: f64,
    #[arg(long, default_value = "uniform")]
    adversary: String,
    #[arg(long)]
    budget_b: Option<f64>,
    #[arg(long, default_value_t = 5)]
    starts: usize,
    #[arg(long, default_value_t = false)]
    undirected: bool,
    #[arg(long, default_value_t = false)]
    lcc: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct MeanfieldArgs {
    /// reg-reg | cp-reg-high | reg-cp.
    #[arg(long)]
    model: String,
    /// Tie dispersion values.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Controller A budget per node.
    #[arg(long, default_value_t = 1.0)]
    budget_a: f64,
    /// Adversary allocation per node.
    #[arg(long, default_value_t = 1.0)]
    b_alloc: f64,
    #[arg(long, default_value_t = 16.0)]
    mean_ka: f64,
    #[arg(long, default_value_t = 4.0)]
    mean_kb: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GameArgs {
    /// Graph CSV for numeric play.
    #[arg(long, conflicts_with = "model")]
    graph: Option<PathBuf>,
    /// Mean-field play on a family template: <name>:<p>.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value = "signed")]
    knowledge_a: String,
    #[arg(long, default_value = "blind")]
    knowledge_b: String,
    /// B_A / B_B with B_B fixed at one unit per node.
    #[arg(long)]
    budget_ratio: f64,
    #[arg(long, default_value_t = 200)]
    rounds: usize,
    /// Optimizer step size for numeric play.
    #[arg(long, default_value_t = 5.0)]
    eta: f64,
    #[arg(long, default_value_t = 1e-7)]
    mu: f64,
    /// Damping on strategy updates (0 disables).
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = false)]
    undirected: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Results directory containing a manifest.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_component(raw: &str, n: usize) -> anyhow::Result<ComponentSpec> {
    let (kind, params) = raw
        .split_once(':')
        .ok_or_else(|| anyhow::anyhow!("component `{raw}` is not <kind>:<params>"))?;
    let nums: Vec<f64> = params
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow::anyhow!("bad parameters in `{raw}`"))?;
    if nums.is_empty() {
        anyhow::bail!("component `{raw}` has no parameters");
    }
    let kind = match kind.to_ascii_lowercase().as_str() {
        "regular" | "reg" => ComponentKind::Regular { k: nums[0] },
        "cp" | "core_periphery" => {
            if nums.len() < 2 {
                anyhow::bail!("cp needs <k_high>,<k_low>[,<frac_high>]");
            }
            ComponentKind::CorePeriphery {
                k_high: nums[0] as usize,
                k_low: nums[1] as usize,
                fraction_high: if nums.len() > 2 { nums[2] } else { 0.5 },
            }
        }
        "er" | "erdos_renyi" => ComponentKind::ErdosRenyi { mean_degree: nums[0] },
        "sf" | "scale_free" => ComponentKind::ScaleFree { m: nums[0] as usize },
        other => anyhow::bail!("unknown component kind `{other}`"),
    };
    Ok(ComponentSpec { kind, n })
}

fn load_graph(path: &PathBuf, undirected: bool, lcc: bool) -> anyhow::Result<svim::SignedGraph> {
    let load = load_edge_csv(path, !undirected)?;
    if load.duplicate_rows > 0 || load.self_loop_rows > 0 {
        eprintln!(
            "note: {} duplicate rating rows superseded, {} self-ratings dropped",
            load.duplicate_rows, load.self_loop_rows
        );
    }
    let g = if lcc {
        load.graph.largest_connected_component()
    } else {
        load.graph
    };
    Ok(g)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let merged = if let Some(family) = &args.family {
                generate_family(
                    Family::parse(family)?,
                    args.n,
                    args.mean_ka,
                    args.mean_kb,
                    args.p,
                    cli.seed,
                )?
            } else {
                let (pos_raw, neg_raw) = match (&args.positive, &args.negative) {
                    (Some(p), Some(n)) => (p, n),
                    _ => anyhow::bail!("gen needs either --family or both --positive and --negative"),
                };
                let n_neg = ((args.p * args.n as f64).round() as usize).max(1);
                let positive = generate_component(
                    &parse_component(pos_raw, args.n)?,
                    svim::netgen::derive_seed(cli.seed, 1),
                )?;
                let negative = generate_component(
                    &parse_component(neg_raw, n_neg)?,
                    svim::netgen::derive_seed(cli.seed, 2),
                )?;
                merge_signed(
                    &positive,
                    &negative,
                    &MergePlan {
                        p: args.p,
                        placement: Placement::parse(&args.placement)?,
                    },
                    svim::netgen::derive_seed(cli.seed, 3),
                )?
            };
            std::fs::write(&args.out, merged.graph.to_edge_csv())?;
            let r = &merged.report;
            println!(
                "wrote {} ({} nodes, {} arcs, {} negative pairs kept, {} conflicts dropped, \
                 negative fraction {:.4}, realized mean k_b {:.4})",
                args.out.display(),
                merged.graph.n(),
                merged.graph.edge_count(),
                r.negative_edges_kept,
                r.conflicts_dropped,
                r.realized_negative_fraction,
                r.realized_mean_kb
            );
        }
        Command::Optimize(args) => {
            let g = load_graph(&args.graph, args.undirected, args.lcc)?;
            let n = g.n();
            let budget_b = args.budget_b.unwrap_or(n as f64);
            let p_b = adversary_strategy(&g, AdversaryKind::parse(&args.adversary)?, budget_b)?;
            let opts = OptimizerOptions {
                learning_rate: args.eta,
                tolerance: args.mu,
                mode: args.mode.parse::<ObservabilityMode>()?,
                seed: cli.seed,
                starts: args.starts,
                record_true_trace: true,
                ..OptimizerOptions::default()
            };
            let out = gradient_ascent(&g, &p_b, args.budget_a, &opts)?;
            let mut csv = String::from("iter,objective,true_vote_share\n");
            let true_trace = out.true_trace.as_ref().expect("trace was requested");
            for (i, (obj, t)) in out.objective_trace.iter().zip(true_trace).enumerate() {
                let _ = writeln!(csv, "{i},{obj:.8},{t:.8}");
            }
            std::fs::write(&args.out, csv)?;
            println!(
                "mode={} converged={} iterations={} perceived={:.6} true_vote_share={:.6}",
                args.mode,
                out.converged,
                out.iterations,
                out.objective_trace.last().unwrap(),
                out.true_vote_share
            );
        }
        Command::Gain(args) => {
            let g = load_graph(&args.graph, args.undirected, args.lcc)?;
            let n = g.n();
            let budget_b = args.budget_b.unwrap_or(n as f64);
            let p_b = adversary_strategy(&g, AdversaryKind::parse(&args.adversary)?, budget_b)?;
            let opts = OptimizerOptions {
                seed: cli.seed,
                starts: args.starts,
                ..OptimizerOptions::default()
            };
            let mut shares = Vec::new();
            for mode in [
                ObservabilityMode::Signed,
                ObservabilityMode::Mirrored,
                ObservabilityMode::Dropped,
            ] {
                let out = gradient_ascent(
                    &g,
                    &p_b,
                    args.budget_a,
                    &OptimizerOptions {
                        mode,
                        ..opts.clone()
                    },
                )?;
                shares.push(out.true_vote_share);
                println!("{}: true_vote_share={:.6}", mode.label(), out.true_vote_share);
            }
            println!("relative_gain={:.6}", shares[0] / shares[1] - 1.0);
        }
        Command::Sweep(args) => {
            let cfg = ExperimentConfig::from_file(&args.config)?;
            let run = run_experiment(&cfg, &cli.out_dir, cli.seed, cli.jobs)?;
            for f in &run.files {
                println!("wrote {}", f.display());
            }
            println!("wrote {}", run.manifest.display());
        }
        Command::Meanfield(args) => {
            let model = MfModel::parse(&args.model)?;
            let ps = if args.p.is_empty() { vec![0.5] } else { args.p.clone() };
            let mut csv = String::from("p,eps_star,x_star\n");
            for &p in &ps {
                let templates =
                    mf_class_templates(model, p, args.mean_ka, args.mean_kb, args.b_alloc)?;
                let opt = mf_optimize_eps(&templates, args.budget_a)?;
                let _ = writeln!(csv, "{p},{:.6},{:.6}", opt.eps_negative, opt.x_star);
            }
            std::fs::write(&args.out, csv)?;
            println!("wrote {}", args.out.display());
        }
        Command::Game(args) => {
            let ka = Knowledge::parse(&args.knowledge_a)?;
            let kb = Knowledge::parse(&args.knowledge_b)?;
            let mut csv =
                String::from("round,eps_a,eps_b,perceived_xa,perceived_xb,true_xa,true_xb\n");
            if let Some(model_raw) = &args.model {
                let (name, p_raw) = model_raw
                    .split_once(':')
                    .ok_or_else(|| anyhow::anyhow!("--model takes <name>:<p>"))?;
                let p: f64 = p_raw.parse()?;
                let templates = mf_class_templates(MfModel::parse(name)?, p, 16.0, 4.0, 0.0)?;
                let game = MfGame {
                    classes: templates.iter().map(|t| (t.k_a, t.k_b, t.weight)).collect(),
                    budget_a_per_node: args.budget_ratio,
                    budget_b_per_node: 1.0,
                    knowledge_a: ka,
                    knowledge_b: kb,
                    response_tol: 1e-6,
                    max_rounds: args.rounds,
                };
                let state = game.play()?;
                for r in &state.history {
                    let _ = writeln!(
                        csv,
                        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                        r.round, r.eps_a, r.eps_b, r.perceived_xa, r.perceived_xb, r.true_xa, r.true_xb
                    );
                }
                println!(
                    "mean-field equilibrium: converged={} rounds={} eps_a={:.4} eps_b={:.4} true_xa={:.4}",
                    state.converged,
                    state.rounds,
                    state.eps_a_negative,
                    state.eps_b_negative,
                    state.true_utilities.0
                );
            } else {
                let graph_path = args
                    .graph
                    .as_ref()
                    .ok_or_else(|| anyhow::anyhow!("game needs --graph or --model"))?;
                let g = load_graph(graph_path, args.undirected, false)?;
                let n = g.n() as f64;
                let mut cfg = GameConfig::new(ka, kb, args.budget_ratio * n, n);
                cfg.eta = args.eta;
                cfg.mu = args.mu;
                cfg.max_rounds = args.rounds;
                cfg.damping = args.damping;
                cfg.seed = cli.seed;
                let state = svim::game::play_game(&g, &cfg)?;
                for r in &state.rounds {
                    let _ = writeln!(
                        csv,
                        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                        r.round, r.eps_a, r.eps_b, r.perceived_xa, r.perceived_xb, r.true_xa, r.true_xb
                    );
                }
                println!(
                    "numeric equilibrium: converged={} rounds={} damping={} true_xa={:.4}",
                    state.converged,
                    state.rounds.len(),
                    state.damping_used,
                    state.true_utilities.0
                );
            }
            std::fs::write(&args.out, csv)?;
            println!("wrote {}", args.out.display());
        }
        Command::Summarize(args) => {
            let dir = args.dir.unwrap_or(cli.out_dir);
            let summary = summarize(&dir)?;
            match args.out {
                Some(path) => {
                    std::fs::write(&path, summary)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{summary}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
