//! `usdr`: command-line harness for the baseband toolkit — modem tx/rx over
//! files or UDP, BER sweeps, pipeline profiling/planning/execution, the
//! LoRa gateway demo, and metrics export.

use clap::{Parser, Subcommand};
use std::process::ExitCode;
use usdr::commands::{self, Outcome, UsageError};
use usdr::sweep::Waveform;

#[derive(Parser)]
#[command(name = "usdr", version, about = "Software-defined radio baseband toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// LoRa chirp-spread-spectrum modem.
    Lora {
        #[command(subcommand)]
        dir: Direction,
    },
    /// DC-biased optical OFDM modem.
    Ofdm {
        #[command(subcommand)]
        dir: Direction,
    },
    /// NRZ on-off-keying modem.
    Ook {
        #[command(subcommand)]
        dir: Direction,
    },
    /// BER/SER sweep over the AWGN channel.
    Sweep(commands::SweepArgs),
    /// Profile, plan and run the quasi-real-time pipeline.
    Pipeline {
        #[command(subcommand)]
        action: PipelineAction,
    },
    /// Demos.
    Demo {
        #[command(subcommand)]
        which: DemoKind,
    },
    /// Metrics aggregation.
    Monitor {
        #[command(subcommand)]
        action: MonitorAction,
    },
}

#[derive(Subcommand)]
enum Direction {
    /// Encode a payload file and write samples to a file or UDP endpoint.
    Tx(commands::TxArgs),
    /// Receive samples, decode, and write the recovered payload.
    Rx(commands::RxArgs),
}

#[derive(Subcommand)]
enum PipelineAction {
    /// Measure built-in stage runtimes.
    Profile(commands::ProfileArgs),
    /// Turn profiles into a timing table.
    Plan(commands::PlanArgs),
    /// Execute a timing table with deadline monitoring.
    Run(commands::RunArgs),
}

#[derive(Subcommand)]
enum DemoKind {
    /// Multi-node LoRa sensor gateway on a simulated shared channel.
    LoraGateway(commands::GatewayArgs),
}

#[derive(Subcommand)]
enum MonitorAction {
    /// Aggregate run artifacts into one metrics JSON.
    Export(commands::MonitorArgs),
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Lora { dir } => modem(Waveform::Lora, dir),
        Command::Ofdm { dir } => modem(Waveform::Ofdm, dir),
        Command::Ook { dir } => modem(Waveform::Ook, dir),
        Command::Sweep(args) => commands::cmd_sweep(&args),
        Command::Pipeline { action } => match action {
            PipelineAction::Profile(args) => commands::cmd_pipeline_profile(&args),
            PipelineAction::Plan(args) => commands::cmd_pipeline_plan(&args),
            PipelineAction::Run(args) => commands::cmd_pipeline_run(&args),
        },
        Command::Demo { which } => match which {
            DemoKind::LoraGateway(args) => commands::cmd_demo_gateway(&args),
        },
        Command::Monitor { action } => match action {
            MonitorAction::Export(args) => commands::cmd_monitor_export(&args),
        },
    }
}

fn modem(waveform: Waveform, dir: Direction) -> anyhow::Result<Outcome> {
    match dir {
        Direction::Tx(args) => commands::cmd_tx(waveform, &args),
        Direction::Rx(args) => commands::cmd_rx(waveform, &args),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
