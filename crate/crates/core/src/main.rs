use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commaudit::pipeline::{EvalScope, Pipeline, PipelineConfig, StrategyName};
use commaudit::{Error, ErrorCategory};

#[derive(Parser)]
#[command(
    name = "commaudit",
    version,
    about = "Community-level fairness auditing and debiasing for GCNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON). Missing sections take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic SBM graph bundle.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Standalone SbmConfig JSON, replacing the `synth` section.
        #[arg(long)]
        sbm: Option<PathBuf>,
    },
    /// Random walks and skip-gram node embeddings.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        walks_per_node: Option<usize>,
        #[arg(long)]
        walk_length: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// K-means communities over the embeddings.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Per-node homophily ratios.
    Homophily {
        #[command(flatten)]
        common: Common,
    },
    /// Stratified coreset selection.
    Coreset {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_total: Option<usize>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        #[arg(long)]
        per_community: Option<usize>,
    },
    /// Train the GCN with the coreset fairness penalty.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Graph- and community-level fairness report.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Predictions CSV (node_id,pred_label,score) from any model.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        margin: Option<f64>,
        /// Evaluate on every node instead of the test split.
        #[arg(long)]
        all_nodes: bool,
    },
    /// Retrain and audit over coreset budgets and λ values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, value_delimiter = ',')]
        k_totals: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Every stage from synth through audit.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum StrategyArg {
    Extremal,
    Random,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    hidden1: Option<usize>,
    #[arg(long)]
    hidden2: Option<usize>,
    /// Pick the learning rate from {0.1, 0.01, 0.001} by validation accuracy.
    #[arg(long)]
    lr_grid: bool,
    /// Weight the task loss by the coreset weights.
    #[arg(long)]
    weighted: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl TrainArgs {
    fn apply(self, cfg: &mut PipelineConfig) {
        let t = &mut cfg.train;
        set(&mut t.epochs, self.epochs);
        set(&mut t.lr, self.lr);
        set(&mut t.lambda, self.lambda);
        set(&mut t.weight_decay, self.weight_decay);
        set(&mut t.hidden1, self.hidden1);
        set(&mut t.hidden2, self.hidden2);
        if self.lr_grid {
            t.lr_grid = Some(commaudit::gnn::LR_GRID.to_vec());
        }
        t.weighted |= self.weighted;
    }
}

fn load(common: Common) -> commaudit::Result<(PipelineConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.seed, common.seed);
    Ok((cfg, common.out))
}

fn execute(command: Command) -> commaudit::Result<serde_json::Value> {
    let (pipeline, stage, predictions) = match command {
        Command::Synth { common, sbm } => {
            let (mut cfg, out) = load(common)?;
            if let Some(path) = sbm {
                let bytes = std::fs::read(&path)
                    .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
                cfg.synth = serde_json::from_slice(&bytes)
                    .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
            }
            (Pipeline::new(cfg, out), "synth", None)
        }
        Command::Embed {
            common,
            dim,
            walks_per_node,
            walk_length,
            p,
            q,
            window,
            negatives,
            epochs,
            lr,
        } => {
            let (mut cfg, out) = load(common)?;
            set(&mut cfg.skipgram.dim, dim);
            set(&mut cfg.walks.walks_per_node, walks_per_node);
            set(&mut cfg.walks.walk_length, walk_length);
            set(&mut cfg.walks.p, p);
            set(&mut cfg.walks.q, q);
            set(&mut cfg.skipgram.window, window);
            set(&mut cfg.skipgram.negatives, negatives);
            set(&mut cfg.skipgram.epochs, epochs);
            set(&mut cfg.skipgram.lr, lr);
            (Pipeline::new(cfg, out), "embed", None)
        }
        Command::Cluster {
            common,
            k,
            max_iter,
            tol,
        } => {
            let (mut cfg, out) = load(common)?;
            set(&mut cfg.cluster.k, k);
            set(&mut cfg.cluster.max_iter, max_iter);
            set(&mut cfg.cluster.tol, tol);
            (Pipeline::new(cfg, out), "cluster", None)
        }
        Command::Homophily { common } => {
            let (cfg, out) = load(common)?;
            (Pipeline::new(cfg, out), "homophily", None)
        }
        Command::Coreset {
            common,
            k_total,
            strategy,
            per_community,
        } => {
            let (mut cfg, out) = load(common)?;
            set(&mut cfg.coreset.total_budget, k_total);
            set(
                &mut cfg.coreset.strategy,
                strategy.map(|s| match s {
                    StrategyArg::Extremal => StrategyName::Extremal,
                    StrategyArg::Random => StrategyName::Random,
                }),
            );
            if per_community.is_some() {
                cfg.coreset.per_community = per_community;
            }
            (Pipeline::new(cfg, out), "coreset", None)
        }
        Command::Train { common, train } => {
            let (mut cfg, out) = load(common)?;
            train.apply(&mut cfg);
            (Pipeline::new(cfg, out), "train", None)
        }
        Command::Audit {
            common,
            predictions,
            margin,
            all_nodes,
        } => {
            let (mut cfg, out) = load(common)?;
            set(&mut cfg.audit.margin, margin);
            if all_nodes {
                cfg.audit.scope = EvalScope::All;
            }
            (Pipeline::new(cfg, out), "audit", predictions)
        }
        Command::Sweep {
            common,
            train,
            k_totals,
            lambdas,
        } => {
            let (mut cfg, out) = load(common)?;
            train.apply(&mut cfg);
            set(&mut cfg.sweep.total_budgets, k_totals);
            set(&mut cfg.sweep.lambdas, lambdas);
            (Pipeline::new(cfg, out), "sweep", None)
        }
        Command::Run { common } => {
            let (cfg, out) = load(common)?;
            return Pipeline::new(cfg, out).run_all();
        }
    };
    match stage {
        "audit" => pipeline.audit(predictions.as_deref()),
        other => pipeline.run(other),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let category = err.category();
            let (name, code) = match category {
                ErrorCategory::Config => ("config", 2),
                ErrorCategory::Data => ("data", 3),
                ErrorCategory::Internal => ("internal", 4),
            };
            eprintln!("{}", json!({ "error": name, "message": err.to_string() }));
            ExitCode::from(code)
        }
    }
}
