//! `pursuit`: train, evaluate and benchmark pursuit policies, export
//! replays and run the live server.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use pursuit::baselines::{tune_gain, BaselinePolicy, DEFAULT_GAIN_GRID};
use pursuit::bench::{evaluate, evader_label, replay_export, run_sweep, write_sweep_artifacts, SweepSpec};
use pursuit::config::{build_policy, parse_evader, RunConfig};
use pursuit::td3::{save_checkpoint, train};
use pursuit::Error;
use pursuit_live::{CommandLog, Session, SessionConfig};

#[derive(Parser)]
#[command(name = "pursuit", version, about = "Multi-agent pursuit-evasion simulator and benchmark")]
struct Cli {
    /// TOML run configuration ([sim], [reward], [td3], [policy], [bench]).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override any config key, e.g. `--set sim.n_pursuers=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Cmd,
}

/// Shortcuts for the most used config keys; they win over `--set`.
#[derive(Args, Default)]
struct Common {
    #[arg(long, global = true)]
    n_pursuers: Option<usize>,
    #[arg(long, global = true)]
    evader_speed: Option<f64>,
    #[arg(long, global = true)]
    capture_radius: Option<f64>,
    #[arg(long, global = true)]
    arena_radius: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// janosov, angelani, pure_pursuit or td3.
    #[arg(long, global = true)]
    policy: Option<String>,
    #[arg(long, global = true)]
    gain: Option<f64>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push(format!("{k}={v}"));
            }
        };
        push("sim.n_pursuers", self.n_pursuers.map(|v| v.to_string()));
        push("sim.evader_speed", self.evader_speed.map(toml_f64));
        push("sim.capture_radius", self.capture_radius.map(toml_f64));
        push("sim.arena_radius", self.arena_radius.map(toml_f64));
        push("sim.seed", self.seed.map(|v| v.to_string()));
        push("policy.kind", self.policy.clone().map(|p| format!("{p:?}")));
        push("policy.gain", self.gain.map(toml_f64));
        push(
            "policy.checkpoint",
            self.checkpoint.as_ref().map(|p| format!("{:?}", p.display().to_string())),
        );
        push("bench.trials", self.trials.map(|v| v.to_string()));
        o
    }
}

fn toml_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a TD3 policy; writes policy.ckpt, curve.csv and config.toml.
    Train {
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
        /// Environment steps (td3.total_steps).
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Capture rate of the configured policy against each configured evader.
    Eval {
        /// Also write the rows as CSV/JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the sweep described by [bench].
    Sweep {
        /// evader_speed_ratio, n_pursuers, arena_scale or neighbor_cap.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// File stem for the CSV/JSON artifacts.
        #[arg(long, default_value = "sweep")]
        name: String,
    },
    /// Grid-search the heading gain of a classical baseline.
    TuneGain {
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Simulate one trial and write it as JSON lines.
    ReplayExport {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "repulsive")]
        evader: String,
        /// Trial seed (defaults to bench.base_seed).
        #[arg(long)]
        trial_seed: Option<u64>,
    },
    /// Serve the live game over a websocket at /ws.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Stream this replay file instead of playing live.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Re-simulate a saved command log and stream it.
        #[arg(long)]
        command_log: Option<PathBuf>,
        /// Directory for the command logs of finished episodes.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 20.0)]
        tick_hz: f64,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Config(_))));
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut overrides = cli.sets.clone();
    overrides.extend(cli.common.overrides());
    match &cli.command {
        Cmd::Train { steps: Some(s), .. } => overrides.push(format!("td3.total_steps={s}")),
        Cmd::Sweep { axis, values, .. } => {
            if let Some(a) = axis {
                overrides.push(format!("bench.axis={a:?}"));
            }
            if let Some(v) = values {
                let list: Vec<String> = v.iter().map(|x| toml_f64(*x)).collect();
                overrides.push(format!("bench.values=[{}]", list.join(",")));
            }
        }
        _ => {}
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Cmd::Train { out, .. } => cmd_train(&cfg, &out),
        Cmd::Eval { out } => cmd_eval(&cfg, out.as_deref()),
        Cmd::Sweep { out, name, .. } => cmd_sweep(&cfg, out.as_deref(), &name),
        Cmd::TuneGain { grid } => cmd_tune(&cfg, grid.as_deref().unwrap_or(&DEFAULT_GAIN_GRID)),
        Cmd::ReplayExport {
            out,
            evader,
            trial_seed,
        } => {
            let kind = parse_evader(&evader)?;
            let mut policy = build_policy(&cfg.policy)?;
            let seed = trial_seed.unwrap_or(cfg.bench.base_seed);
            let report = replay_export(&out, policy.as_mut(), kind, &cfg.sim, seed)?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(())
        }
        Cmd::Serve {
            addr,
            replay,
            command_log,
            log_dir,
            tick_hz,
        } => cmd_serve(&cfg, addr, replay, command_log, log_dir, tick_hz),
    }
}

fn cmd_train(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    let result = train(&cfg.train_config(), Some(out))?;
    save_checkpoint(out.join("policy.ckpt"), &result.checkpoint)?;
    if let Some(last) = result.curve.last() {
        println!(
            "{}",
            serde_json::json!({
                "steps": last.step,
                "success_rate": last.success_rate,
                "avg_steps": last.avg_steps,
                "checkpoint": out.join("policy.ckpt"),
            })
        );
    }
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, out: Option<&Path>) -> anyhow::Result<()> {
    let policy = build_policy(&cfg.policy)?;
    let mut rows = Vec::new();
    for kind in cfg.bench.evader_kinds()? {
        let stats = evaluate(policy.as_ref(), kind, &cfg.sim, cfg.bench.trials, cfg.bench.base_seed)?;
        println!(
            "{}",
            serde_json::json!({
                "policy": policy.name(),
                "evader": evader_label(kind),
                "trials": stats.trials,
                "captures": stats.captures,
                "success_rate": stats.success_rate,
                "avg_steps_on_success": stats.avg_steps_on_success,
                "stderr": stats.stderr,
            })
        );
        rows.push(pursuit::bench::SweepRow {
            group: evader_label(kind),
            axis: "none".into(),
            value: 0.0,
            trials: stats.trials,
            captures: stats.captures,
            success_rate: stats.success_rate,
            avg_steps_on_success: stats.avg_steps_on_success,
            stderr: stats.stderr,
        });
    }
    if let Some(dir) = out {
        write_sweep_artifacts(dir, "eval", &rows)?;
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: Option<&Path>, name: &str) -> anyhow::Result<()> {
    let spec = SweepSpec {
        axis: cfg.bench.axis,
        values: cfg.bench.values.clone(),
        trials_per_value: cfg.bench.trials,
        base_seed: cfg.bench.base_seed,
        evaders: cfg.bench.evader_kinds()?,
    };
    // load once; every sweep value gets a fresh clone
    let policy = build_policy(&cfg.policy)?;
    let rows = run_sweep(&spec, &cfg.sim, &|_| Ok(policy.box_clone()))?;
    let dir = out.unwrap_or(&cfg.bench.out_dir);
    write_sweep_artifacts(dir, name, &rows)?;
    for r in &rows {
        println!("{}", serde_json::to_string(r)?);
    }
    Ok(())
}

fn cmd_tune(cfg: &RunConfig, grid: &[f64]) -> anyhow::Result<()> {
    let policy = build_policy(&cfg.policy)?;
    let baseline = match policy.name() {
        "janosov" => BaselinePolicy::janosov(Default::default(), cfg.policy.gain),
        "angelani" => BaselinePolicy::angelani(Default::default(), cfg.policy.gain),
        "pure_pursuit" => BaselinePolicy::pure_pursuit(cfg.policy.gain),
        other => return Err(Error::Config(format!("cannot tune the gain of policy {other:?}")).into()),
    };
    let report = tune_gain(&baseline, &cfg.sim, cfg.bench.trials, cfg.bench.base_seed, grid)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn cmd_serve(
    cfg: &RunConfig,
    addr: SocketAddr,
    replay: Option<PathBuf>,
    command_log: Option<PathBuf>,
    log_dir: Option<PathBuf>,
    tick_hz: f64,
) -> anyhow::Result<()> {
    let session_cfg = SessionConfig {
        tick_hz,
        ..SessionConfig::new(cfg.sim.clone(), cfg.sim.seed)
    };
    let policy = build_policy(&cfg.policy)?;
    let session = if let Some(path) = replay {
        Session::replay(session_cfg, policy, pursuit::bench::load_replay(&path)?)?
    } else if let Some(path) = command_log {
        let log = CommandLog::load(&path)?;
        let mut p = policy.box_clone();
        let frames = pursuit_live::replay_log(&session_cfg.sim, p.as_mut(), &log)?;
        Session::replay(session_cfg, policy, frames)?
    } else {
        Session::new(session_cfg, policy)?
    };
    if let Some(dir) = &log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let handle = pursuit_live::spawn(addr, session, log_dir).await?;
        println!("listening on ws://{}/ws", handle.addr);
        tokio::signal::ctrl_c().await?;
        handle.abort();
        anyhow::Ok(())
    })
}
