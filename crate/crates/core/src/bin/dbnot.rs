use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dbnot_core::app::{cmd_cluster, cmd_convex_demo, BoundsSpec, DataSource, MeasureKind, RunConfig};
use dbnot_core::graph::InitMode;
use dbnot_core::solver::StepRule;
use dbnot_core::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "dbnot", version, about = "Size-constrained clustering by bounded-marginal Frank-Wolfe")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Inner,
    Norm,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepArg {
    Easy,
    Line,
    Gap,
    Certified,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Spectral,
    Kmeans,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticArg {
    TwoRings,
    TwoMoons,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV dataset (or a synthetic one) and write artifacts to --out.
    Cluster {
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        synthetic: Option<SyntheticArg>,
        /// Points per class for synthetic data.
        #[arg(long, default_value_t = 100)]
        n_per_class: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long)]
        c: usize,
        /// Size slack: b_l = floor((1-s)n/c), b_u = ceil((1+s)n/c).
        #[arg(long, default_value_t = 0.1, conflicts_with_all = ["lower", "upper"])]
        balance: f64,
        #[arg(long, requires = "upper")]
        lower: Option<f64>,
        #[arg(long, requires = "lower")]
        upper: Option<f64>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Kernel bandwidth; defaults to the mean pairwise distance.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long, value_enum, default_value = "inner")]
        measure: MeasureArg,
        #[arg(long, value_enum, default_value = "easy")]
        step: StepArg,
        #[arg(long, value_enum, default_value = "spectral")]
        init: InitArg,
        /// Report the last iterate instead of the smallest-gap one.
        #[arg(long)]
        last_iterate: bool,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run fixed-seed self-checks: projections, convergence, metrics or all.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Solve min tr(F^T L F) over row-stochastic plans on a random graph.
    ConvexDemo {
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        c: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> dbnot_core::Result<ExitCode> {
    match cli.command {
        Command::Cluster {
            input,
            synthetic,
            n_per_class,
            noise,
            c,
            balance,
            lower,
            upper,
            k,
            sigma,
            no_normalize,
            measure,
            step,
            init,
            last_iterate,
            max_iter,
            seed,
            out,
        } => {
            let source = match (input, synthetic) {
                (Some(path), _) => DataSource::Csv { path },
                (None, Some(SyntheticArg::TwoRings)) => DataSource::TwoRings {
                    n_per_ring: n_per_class,
                    noise,
                    seed,
                },
                (None, Some(SyntheticArg::TwoMoons)) => DataSource::TwoMoons {
                    n_per_moon: n_per_class,
                    noise,
                    seed,
                },
                (None, None) => unreachable!("clap requires one of --input/--synthetic"),
            };
            let mut cfg = RunConfig::new(source, c);
            cfg.bounds = match (lower, upper) {
                (Some(lower), Some(upper)) => BoundsSpec::Explicit { lower, upper },
                _ => BoundsSpec::Slack { slack: balance },
            };
            cfg.k = k;
            cfg.sigma = sigma;
            cfg.normalize = !no_normalize;
            cfg.measure = match measure {
                MeasureArg::Inner => MeasureKind::Inner,
                MeasureArg::Norm => MeasureKind::Norm,
            };
            cfg.step = match step {
                StepArg::Easy => StepRule::Easy,
                StepArg::Line => StepRule::LineSearch,
                StepArg::Gap => StepRule::DualGap,
                StepArg::Certified => StepRule::NonconvexCertified,
            };
            cfg.init = match init {
                InitArg::Spectral => InitMode::SpectralWarm,
                InitArg::Kmeans => InitMode::KMeansWarm,
                InitArg::Uniform => InitMode::UniformJitter,
            };
            cfg.select_best_gap = !last_iterate;
            cfg.max_iter = max_iter;
            cfg.seed = seed;
            let res = cmd_cluster(&cfg, Some(&out))?;
            let r = &res.report;
            println!(
                "n={} c={} bounds=[{}, {}] iterations={} stop={:?} objective={:.6}",
                r.n, r.c, r.bounds.lower, r.bounds.upper, r.iterations, r.stop_reason, r.objective
            );
            println!("cluster sizes {:?}", r.cluster_sizes);
            if let Some(m) = &r.metrics {
                println!("ACC={:.4} NMI={:.4} ARI={:.4}", m.acc, m.nmi, m.ari);
            }
            println!("artifacts written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let Ok(suite) = suite.parse::<Suite>() else {
                eprintln!("error: unknown suite {suite:?}");
                eprintln!("usage: dbnot verify --suite <projections|convergence|metrics|all>");
                return Ok(ExitCode::from(2));
            };
            let mut ok = true;
            for c in verify::run(suite) {
                ok &= c.passed;
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ConvexDemo { n, c, seed, out } => {
            let (report, _) = cmd_convex_demo(n, c, seed, out.as_deref())?;
            for (t, (h, d)) in report.objective_trace.iter().zip(&report.deviation_trace).enumerate() {
                println!("iter {t:3}  objective {h:.6e}  max|F-1/c| {d:.3e}");
            }
            println!("max |F_ij - 1/c| = {:.3e}", report.max_deviation);
            Ok(ExitCode::SUCCESS)
        }
    }
}
