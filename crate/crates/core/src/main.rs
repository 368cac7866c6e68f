use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use selfconsistent::experiments::{
    cmd_convergence, cmd_ensemble, cmd_fejer_check, cmd_fixed_point, cmd_rate_n, synthetic_rate_check, ExperimentConfig,
    KernelKind, MapKind, SchemeKind, StopKind,
};
use selfconsistent::Result;

#[derive(Parser)]
#[command(name = "sctool", version, about = "Fixed points of self-consistent transfer operators on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Uncoupled and coupled fixed-point profiles
    FixedPoint,
    /// Sequential vs Newton error traces
    Convergence {
        /// Only check the rate fit on an exact geometric sequence
        #[arg(long)]
        synthetic: bool,
    },
    /// Distance to a high-order reference over a sweep of orders
    RateN,
    /// Particle simulation against the spectral fixed point
    Ensemble,
    /// Fejér contraction check and approximation-rate table
    FejerCheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapArg {
    Pinched,
    Doubling,
    Rotation,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Translation,
    Attraction,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Sequential,
    Newton,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    map: Option<MapArg>,
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    kernel: Option<KernelArg>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Fourier order N
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    scheme: Option<SchemeArg>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Run exactly max-iter steps instead of stopping at the tolerance
    #[arg(long, global = true)]
    fixed_count: bool,
    #[arg(long, global = true)]
    reference_order: Option<usize>,
    #[arg(long, global = true)]
    particles: Option<usize>,
    #[arg(long, global = true)]
    burn_in: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.map {
            cfg.map.family = match v {
                MapArg::Pinched => MapKind::Pinched,
                MapArg::Doubling => MapKind::Doubling,
                MapArg::Rotation => MapKind::Rotation,
            };
        }
        if let Some(v) = self.a {
            cfg.map.a = v;
        }
        if let Some(v) = self.kernel {
            cfg.kernel.kind = match v {
                KernelArg::Translation => KernelKind::Translation,
                KernelArg::Attraction => KernelKind::Attraction,
            };
        }
        if let Some(v) = self.epsilon {
            cfg.solver.epsilon = v;
        }
        if let Some(v) = self.order {
            cfg.solver.order = v;
        }
        if let Some(v) = self.scheme {
            cfg.solver.scheme = match v {
                SchemeArg::Sequential => SchemeKind::Sequential,
                SchemeArg::Newton => SchemeKind::Newton,
            };
        }
        if let Some(v) = self.max_iter {
            cfg.solver.max_iter = v;
        }
        if let Some(v) = self.tolerance {
            cfg.solver.tolerance = v;
        }
        if self.fixed_count {
            cfg.solver.stop = StopKind::Fixed;
        }
        if let Some(v) = self.reference_order {
            cfg.rate.reference_order = v;
            cfg.ensemble.reference_order = v;
        }
        if let Some(v) = self.particles {
            cfg.ensemble.particles = v;
        }
        if let Some(v) = self.burn_in {
            cfg.ensemble.burn_in = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = cli.common.config()?;
    let out = cfg.out_dir.clone();
    let ok = match cli.command {
        Command::FixedPoint => {
            let run = cmd_fixed_point(&cfg, &out)?;
            let r = &run.report;
            println!(
                "N={} eps={} residual={:.3e} iterations={} peak h0 at {:.4} ({:.4}), h_eps at {:.4} ({:.4}), shift {:+.4}",
                r.order,
                r.epsilon,
                r.solve.final_residual_l1,
                r.solve.iterations,
                r.peak_uncoupled,
                r.max_uncoupled,
                r.peak_coupled,
                r.max_coupled,
                r.peak_shift
            );
            run.trace.converged || cfg.solver.stop == StopKind::Fixed
        }
        Command::Convergence { synthetic: true } => {
            let (slope, r2) = synthetic_rate_check()?;
            println!("synthetic 0.5^n: slope {slope:.12} (expected {:.12}), r2 {r2:.12}", 0.5f64.log10());
            true
        }
        Command::Convergence { synthetic: false } => {
            let run = cmd_convergence(&cfg, &out)?;
            let r = &run.report;
            println!(
                "sequential slope {:?} (r2 {:?}), newton digit ratios {:?}, gap at n={} {:.1} orders, times {:.1}s / {:.1}s",
                r.sequential_slope,
                r.sequential_r_squared,
                r.newton_digit_ratios,
                r.steps,
                r.gap_orders,
                r.sequential.seconds,
                r.newton.seconds
            );
            true
        }
        Command::RateN => {
            let r = cmd_rate_n(&cfg, &out)?;
            for (n, d) in r.orders.iter().zip(&r.distances) {
                println!("N={n:5} distance {d:.6e}");
            }
            println!("log-log slope {:?} (r2 {:?})", r.slope, r.r_squared);
            r.all_converged
        }
        Command::Ensemble => {
            let r = cmd_ensemble(&cfg, &out)?;
            println!(
                "M={} burn-in={} L1 distance {:.4} to the N={} fixed point ({:.1}s)",
                r.particles, r.burn_in, r.l1_distance, r.reference_order, r.seconds
            );
            r.spectral_converged
        }
        Command::FejerCheck => {
            let r = cmd_fejer_check(&cfg, &out)?;
            println!(
                "contraction excess over {} samples: L1 {:.2e}, W11 {:.2e}",
                r.samples, r.max_contraction_excess_l1, r.max_contraction_excess_w11
            );
            for ((n, e), q) in r.orders.iter().zip(&r.errors).zip(&r.ratios) {
                println!("N={n:4} error {e:.6e} ratio {q:.4}");
            }
            r.max_contraction_excess_l1 <= 1e-10 && r.last_over_median <= 2.0
        }
    };
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("sctool: a solve did not reach its goal");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("sctool: {e}");
            ExitCode::FAILURE
        }
    }
}
