use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use dipaint::bench;
use dipaint::replay::{self, RunOptions};
use dipaint::service::{self, ServiceConfig};
use dipaint_core::script::ScriptParams;
use dipaint_core::tensor::TensorContainer;
use dipaint_core::Backend;

#[derive(Parser)]
#[command(name = "dipaint", about = "Dip style from style images and paint it onto a content image")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Analytic,
    Neural,
}

#[derive(clap::Args)]
struct ParamArgs {
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a session script.
    Run {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the provisional render of every diffusion step.
        #[arg(long)]
        frames: bool,
        #[arg(long, value_enum, default_value = "analytic")]
        backend: BackendArg,
        /// Tensor container with encoder and decoder weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Measure diffusion steps per second on a synthetic image.
    Bench {
        #[arg(long, default_value_t = 256, value_parser = parse_size)]
        size: usize,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Use a flat image so the similarity is uniform.
        #[arg(long)]
        uniform: bool,
    },
    /// Serve sessions over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = 64 << 20)]
        max_body_bytes: usize,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

fn parse_size(s: &str) -> Result<usize, String> {
    let size: usize = s.parse().map_err(|e| format!("{e}"))?;
    if bench::SIZES.contains(&size) {
        Ok(size)
    } else {
        Err(format!("size must be one of {:?}", bench::SIZES))
    }
}

fn load_backend(kind: BackendArg, weights: Option<&PathBuf>) -> dipaint_core::Result<Backend> {
    match (kind, weights) {
        (BackendArg::Analytic, _) => Ok(Backend::Analytic),
        (BackendArg::Neural, Some(path)) => Backend::neural(&TensorContainer::read(path)?),
        (BackendArg::Neural, None) => Err(dipaint_core::Error::Config("--backend neural needs --weights".into())),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { script, out, frames, backend, weights, params } => {
            let overrides = ScriptParams { v: params.v, r: params.r, epsilon: params.epsilon, alpha: params.alpha, dt: params.dt };
            let result = load_backend(backend, weights.as_ref())
                .map_err(replay::ReplayError::from)
                .and_then(|backend| replay::run(&script, &out, RunOptions { backend, overrides, frames }));
            match result {
                Ok(metrics) => {
                    println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialize"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Bench { size, steps, uniform } => match bench::bench(size, steps, uniform) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Serve { addr, max_body_bytes, weights } => match serve(addr, max_body_bytes, weights) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn serve(addr: SocketAddr, max_body_bytes: usize, weights: Option<PathBuf>) -> anyhow::Result<()> {
    let neural = weights
        .map(|path| {
            let container = TensorContainer::read(&path).with_context(|| format!("reading {}", path.display()))?;
            Backend::neural(&container).context("loading neural weights")
        })
        .transpose()?;
    let app = service::router(ServiceConfig { max_body_bytes, neural });
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
