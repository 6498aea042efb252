use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use archery_core::a2c::{train_with, write_metrics_csv, AgentNets};
use archery_core::ballistics::{launch, sample_trajectory, score_shot, HandPose, DRONE_MASS};
use archery_core::haptics::{confusion_stats, make_schedule, read_responses_csv, ForceTable};
use archery_core::policy::{
    bench_policy_latency, evaluate, ApfPolicy, DrlPolicy, EvalReport, LatencyStats, PolicyKind, RandomPolicy,
    SwarmPolicy, ZeroPolicy,
};
use archery_core::Vec3;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_CONFIG};
use crate::protocol::to_json;
use crate::session::{GameSetup, SCORE_DT};

#[derive(Debug, Parser)]
#[command(
    name = "archery",
    version,
    about = "Drone archery: bow ballistics, swarm dodging and haptic encoding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the swarm's actor-critic policy.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Directory receiving weights.json and metrics.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Print a progress line every N epochs (0 disables).
        #[arg(long, default_value_t = 10)]
        progress: usize,
    },
    /// Run evaluation episodes and report success rate and latency.
    Eval {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 300)]
        episodes: usize,
        /// Evaluation seed, defaults to the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the deterministic part of the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time single-drone decisions.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
    },
    /// Haptic pattern study files.
    Patterns {
        #[command(subcommand)]
        action: PatternsCommand,
    },
    /// Host live game sessions over WebSocket.
    Serve {
        #[command(flatten)]
        config: ConfigArg,
        /// Weights enabling the `drl` swarm policy.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Print the shot produced by a hand pose as CSV, with its score.
    Trajectory {
        #[command(flatten)]
        config: ConfigArg,
        /// Bow hand position `x,y,z`.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        bow: Vec3,
        /// Arrow (drawing) hand position `x,y,z`.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        arrow: Vec3,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in configuration as TOML.
    DefaultConfig,
}

#[derive(Debug, Subcommand)]
pub enum PatternsCommand {
    /// Emit a randomized 36-trial presentation schedule.
    Schedule {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a responses CSV into confusion matrices.
    Analyze {
        /// CSV with columns `trial,presented,answered,timestamp`.
        responses: PathBuf,
        /// Write patterns.csv, forces.csv and distances.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// TOML run configuration. Built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long, default_value = "drl")]
    pub policy: PolicyKind,
    /// Trained weights, required for `--policy drl`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {} values", parts.len())),
    }
}

/// Loads weights and checks them against the environment layout.
pub fn load_weights(path: &Path, cfg: &RunConfig) -> Result<AgentNets, CliError> {
    let nets = AgentNets::load(path).map_err(|e| CliError::from(e).context(&path.display().to_string()))?;
    nets.check_compatible(&cfg.env)
        .map_err(|e| CliError::from(e).context(&path.display().to_string()))?;
    Ok(nets)
}

fn build_policy(args: &PolicyArgs, cfg: &RunConfig) -> Result<Box<dyn SwarmPolicy>, CliError> {
    Ok(match args.policy {
        PolicyKind::Drl => {
            let path = args
                .weights
                .as_ref()
                .ok_or_else(|| CliError::new(EXIT_CONFIG, "--policy drl needs --weights"))?;
            Box::new(DrlPolicy::new(load_weights(path, cfg)?, cfg.seed))
        }
        PolicyKind::Apf => Box::new(ApfPolicy(cfg.apf)),
        PolicyKind::Random => Box::new(RandomPolicy::new(cfg.seed)),
        PolicyKind::Zero => Box::new(ZeroPolicy),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::from(e).context(&path.display().to_string()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

#[derive(Debug, Serialize)]
struct EvalOutput<'a> {
    report: &'a EvalReport,
    latency: LatencyStats,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            config,
            out_dir,
            progress,
        } => {
            let cfg = config.load()?;
            std::fs::create_dir_all(&out_dir)?;
            let outcome = train_with(&cfg.env, &cfg.train, |m| {
                if progress > 0 && (m.epoch + 1) % progress == 0 {
                    eprintln!(
                        "epoch {:>5}  duration {:>6.2}  actor {:>+.4e}  critic {:.4e}",
                        m.epoch + 1,
                        m.mean_episode_duration,
                        m.actor_loss,
                        m.critic_loss
                    );
                }
            })?;
            let weights = out_dir.join("weights.json");
            outcome.nets.save(&weights)?;
            let mut w = create(&out_dir.join("metrics.csv"))?;
            write_metrics_csv(&mut w, &outcome.metrics)?;
            w.flush()?;
            eprintln!("wrote {} and metrics.csv", weights.display());
            Ok(())
        }
        Command::Eval {
            config,
            policy,
            episodes,
            seed,
            out,
        } => {
            let cfg = config.load()?;
            let mut p = build_policy(&policy, &cfg)?;
            let (report, latency) = evaluate(p.as_mut(), &cfg.env, episodes, seed.unwrap_or(cfg.seed))?;
            if let Some(path) = out {
                let mut w = create(&path)?;
                writeln!(w, "{}", to_json(&report))?;
                w.flush()?;
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&EvalOutput {
                    report: &report,
                    latency
                })
                .expect("report serializes")
            );
            eprintln!(
                "{}: success {:.1}% over {} episodes, mean duration {:.2} steps, decision latency {:.4} ms (sd {:.4})",
                report.policy.as_str(),
                100.0 * report.success_rate,
                report.episodes,
                report.mean_episode_duration,
                latency.mean_ms,
                latency.std_ms
            );
            Ok(())
        }
        Command::Bench { config, policy, steps } => {
            let cfg = config.load()?;
            let mut p = build_policy(&policy, &cfg)?;
            let stats = bench_policy_latency(p.as_mut(), &cfg.env, steps, cfg.seed)?;
            println!(
                "{} mean {:.4} ms sd {:.4} ms over {} decisions",
                policy.policy.as_str(),
                stats.mean_ms,
                stats.std_ms,
                stats.decisions
            );
            Ok(())
        }
        Command::Patterns { action } => match action {
            PatternsCommand::Schedule { seed, out } => {
                let mut w = output(out.as_deref())?;
                make_schedule(seed).write_csv(&mut w, &ForceTable::default())?;
                w.flush()?;
                Ok(())
            }
            PatternsCommand::Analyze { responses, out_dir } => {
                let file =
                    File::open(&responses).map_err(|e| CliError::from(e).context(&responses.display().to_string()))?;
                let records = read_responses_csv(file)?;
                let pairs: Vec<_> = records.iter().map(|r| (r.presented, r.answered)).collect();
                let report = confusion_stats(&pairs)?;
                println!("responses {}", pairs.len());
                println!("pattern recognition {:.2}%", report.pattern_rate());
                println!("force recognition {:.2}%", report.force_rate());
                println!("distance recognition {:.2}%", report.distance_rate());
                if let Some(dir) = out_dir {
                    std::fs::create_dir_all(&dir)?;
                    for (name, m) in [
                        ("patterns.csv", &report.patterns),
                        ("forces.csv", &report.forces),
                        ("distances.csv", &report.distances),
                    ] {
                        let mut w = create(&dir.join(name))?;
                        m.write_csv(&mut w)?;
                        w.flush()?;
                    }
                }
                Ok(())
            }
        },
        Command::Serve { config, weights, port } => {
            let mut cfg = config.load()?;
            if let Some(port) = port {
                cfg.serve.port = port;
            }
            let nets = weights.as_deref().map(|p| load_weights(p, &cfg)).transpose()?;
            let setup = Arc::new(GameSetup::new(cfg, nets)?);
            let addr = format!("{}:{}", setup.config.serve.host, setup.config.serve.port);
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| CliError::from(e).context(&format!("cannot bind {addr}")))?;
                eprintln!("serving ws://{}/ws", listener.local_addr()?);
                tokio::select! {
                    r = crate::server::serve(listener, setup) => r.map_err(CliError::from),
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })
        }
        Command::Trajectory {
            config,
            bow,
            arrow,
            dt,
            out,
        } => {
            let cfg = config.load()?;
            let hands = HandPose::new(bow, arrow);
            let (state, params) = launch(&cfg.bow, &hands, DRONE_MASS, cfg.env.g)?;
            let traj = sample_trajectory(&params, dt, cfg.env.arena.min.z)?;
            let mut w = output(out.as_deref())?;
            traj.write_csv(&mut w)?;
            w.flush()?;
            let fine = sample_trajectory(&params, SCORE_DT, cfg.env.arena.min.z)?;
            let shot = score_shot(&fine.points, &cfg.gates.gates());
            let gates = cfg.gates.gates();
            eprintln!(
                "speed {:.4} m/s, energy {:.4} J, {}",
                state.speed,
                state.energy,
                match shot.gate {
                    Some(g) => format!("through {} for {} points", gates[g].name, shot.points),
                    None => "no gate".to_string(),
                }
            );
            Ok(())
        }
        Command::DefaultConfig => {
            print!("{}", RunConfig::default().to_toml());
            Ok(())
        }
    }
}
