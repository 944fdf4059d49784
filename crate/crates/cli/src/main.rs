use clap::{Args, Parser, Subcommand};
use slr_cli::experiments::{
    asr, battery_power, distance, infer, phase_transition, simulate, tv_curve,
};
use slr_cli::output::{csv_string, emit, Plot, Series};
use slr_cli::{CliError, CliResult, ExperimentConfig, Sampler, SearchMode, TreeSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "slr",
    version,
    about = "Sequence-length experiments for ML phylogeny reconstruction under the CFN model"
)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 for one per core). Never changes the output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout without one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file, or inline JSON. Flags override it.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Also draw an SVG plot to this file.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// Write fitted summaries as CSV to this file instead of stderr.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

/// Model, tree and grid flags shared by the subcommands.
#[derive(Args)]
struct Common {
    /// Number of states.
    #[arg(long)]
    r: Option<usize>,
    /// Smallest edge weight.
    #[arg(long)]
    f: Option<f64>,
    /// Largest edge weight, and the weight of homogeneous trees.
    #[arg(long)]
    g: Option<f64>,
    /// Grid resolution: weights are multiples of 1/Υ.
    #[arg(long)]
    upsilon: Option<u64>,
    /// Homogeneous tree of this height.
    #[arg(long, conflicts_with_all = ["newick", "random"])]
    h: Option<usize>,
    /// Tree from a Newick file.
    #[arg(long, conflicts_with = "random")]
    newick: Option<PathBuf>,
    /// Random regular tree on this many leaves.
    #[arg(long)]
    random: Option<usize>,
    /// Alignment lengths, comma separated and increasing
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    /// Tree heights, comma separated and increasing
    #[arg(long, value_delimiter = ',')]
    h_grid: Option<Vec<usize>>,
    /// Edge weights, comma separated
    #[arg(long, value_delimiter = ',')]
    g_grid: Option<Vec<f64>>,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an alignment from a tree.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of sites.
        #[arg(long)]
        k: Option<usize>,
        /// Site sampler: the Markov chain or the random-cluster process
        #[arg(long, value_enum)]
        sampler: Option<Sampler>,
    },
    /// Maximum-likelihood tree for an alignment.
    Infer {
        #[command(flatten)]
        common: Common,
        /// Alignment file written by `simulate`
        #[arg(long)]
        alignment: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<SearchMode>,
        /// Newick file with one candidate tree per line.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Weight-refinement sweeps per topology
        #[arg(long)]
        max_sweeps: Option<usize>,
        /// Largest leaf count for topology enumeration
        #[arg(long)]
        enumeration_limit: Option<usize>,
    },
    /// Root reconstruction accuracy and the flow bound per height and weight.
    Asr {
        #[command(flatten)]
        common: Common,
    },
    /// Swap and blow-up distances between two trees.
    Distance {
        #[command(flatten)]
        common: Common,
        /// Newick file of the second tree.
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// Battery construction, validation and error decay in k.
    BatteryPower {
        #[command(flatten)]
        common: Common,
        /// Newick file of T#.
        #[arg(long)]
        other: Option<PathBuf>,
        /// Build T# by exchanging these two leaves (counted from 1).
        #[arg(long, value_delimiter = ',')]
        swap: Option<Vec<usize>>,
        /// Level spacing ℓ of the coloring (chosen from g when absent)
        #[arg(long)]
        ell: Option<usize>,
        /// Write the battery description (JSON) to this file.
        #[arg(long)]
        battery: Option<PathBuf>,
    },
    /// Total variation of k-site laws for pairs at blow-up distance 1 and 2.
    TvCurve {
        #[command(flatten)]
        common: Common,
        /// Number of random base trees
        #[arg(long)]
        constructions: Option<usize>,
        /// Weight increase per changed edge, in grid units.
        #[arg(long)]
        bump: Option<u64>,
    },
    /// ML success rates across the critical weight.
    PhaseTransition {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<SearchMode>,
        /// Target failure probability for k₉₀.
        #[arg(long)]
        delta: Option<f64>,
        /// Skip the larger k once the target is reached.
        #[arg(long)]
        stop_at_target: bool,
        /// Weight-refinement sweeps per topology
        #[arg(long)]
        max_sweeps: Option<usize>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Common {
    fn apply(self, c: &mut ExperimentConfig) {
        set(&mut c.r, self.r);
        set(&mut c.f, self.f);
        set(&mut c.g, self.g);
        set(&mut c.upsilon, self.upsilon);
        set(&mut c.tree, self.h.map(|h| TreeSpec::Homogeneous { h }));
        set(
            &mut c.tree,
            self.newick.map(|path| TreeSpec::Newick { path }),
        );
        set(&mut c.tree, self.random.map(|n| TreeSpec::Random { n }));
        set(&mut c.k_grid, self.k_grid);
        set(&mut c.h_grid, self.h_grid);
        set(&mut c.g_grid, self.g_grid);
        set(&mut c.trials, self.trials);
    }
}

fn effective_config(cli: Cli) -> CliResult<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(arg) => ExperimentConfig::load(arg)?,
        None => ExperimentConfig::default(),
    };
    set(&mut c.seed, cli.seed);
    set(&mut c.run.threads, cli.threads);
    if cli.out.is_some() {
        c.run.out = cli.out;
    }
    if cli.plot.is_some() {
        c.run.plot = cli.plot;
    }
    if cli.summary.is_some() {
        c.run.summary = cli.summary;
    }
    let name = match cli.cmd {
        Command::Simulate { .. } => "simulate",
        Command::Infer { .. } => "infer",
        Command::Asr { .. } => "asr",
        Command::Distance { .. } => "distance",
        Command::BatteryPower { .. } => "battery-power",
        Command::TvCurve { .. } => "tv-curve",
        Command::PhaseTransition { .. } => "phase-transition",
    };
    c.experiment = name.to_string();
    let newick = |p: PathBuf| TreeSpec::Newick { path: p };
    match &cli.cmd {
        Command::Simulate { k, sampler, .. } => {
            set(&mut c.k, *k);
            set(&mut c.sampler, *sampler);
        }
        Command::Infer {
            alignment,
            mode,
            candidates,
            max_sweeps,
            enumeration_limit,
            ..
        } => {
            if alignment.is_some() {
                c.alignment = alignment.clone();
            }
            if candidates.is_some() {
                c.candidates = candidates.clone();
            }
            set(&mut c.mode, *mode);
            set(&mut c.max_sweeps, *max_sweeps);
            set(&mut c.enumeration_limit, *enumeration_limit);
        }
        Command::Asr { .. } => {}
        Command::Distance { other, .. } => {
            if let Some(p) = other {
                c.tree_alt = Some(newick(p.clone()));
            }
        }
        Command::BatteryPower {
            other,
            swap,
            ell,
            battery,
            ..
        } => {
            if let Some(p) = other {
                c.tree_alt = Some(newick(p.clone()));
            }
            if let Some(s) = swap {
                let [a, b] = s[..] else {
                    return Err(CliError::Config(
                        "--swap takes two leaves, as in --swap 2,9".into(),
                    ));
                };
                c.swap = Some((a, b));
            }
            if ell.is_some() {
                c.ell = *ell;
            }
            if battery.is_some() {
                c.run.battery = battery.clone();
            }
        }
        Command::TvCurve {
            constructions,
            bump,
            ..
        } => {
            set(&mut c.constructions, *constructions);
            set(&mut c.bump, *bump);
        }
        Command::PhaseTransition {
            mode,
            delta,
            stop_at_target,
            max_sweeps,
            ..
        } => {
            set(&mut c.mode, *mode);
            set(&mut c.delta, *delta);
            set(&mut c.max_sweeps, *max_sweeps);
            c.stop_at_target |= stop_at_target;
        }
    }
    let common = match cli.cmd {
        Command::Simulate { common, .. }
        | Command::Infer { common, .. }
        | Command::Asr { common }
        | Command::Distance { common, .. }
        | Command::BatteryPower { common, .. }
        | Command::TvCurve { common, .. }
        | Command::PhaseTransition { common, .. } => common,
    };
    common.apply(&mut c);
    c.validate()?;
    Ok(c)
}

fn summary(c: &ExperimentConfig, text: String) -> CliResult<()> {
    match &c.run.summary {
        Some(p) => emit(Some(p), &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn plot(c: &ExperimentConfig, p: Plot) -> CliResult<()> {
    match &c.run.plot {
        Some(path) => Ok(std::fs::write(path, p.to_svg())?),
        None => Ok(()),
    }
}

fn execute(c: &ExperimentConfig) -> CliResult<()> {
    let out = c.run.out.as_deref();
    match c.experiment.as_str() {
        "simulate" => emit(out, &simulate::run(c)?.to_text()),
        "infer" => emit(out, &csv_string(&infer::run(c)?)?),
        "asr" => {
            let rows = asr::run(c)?;
            emit(out, &csv_string(&rows)?)?;
            let series = c
                .g_grid
                .iter()
                .flat_map(|&g| {
                    let pts = |f: &dyn Fn(&asr::AsrRow) -> Option<f64>| {
                        rows.iter()
                            .filter(|r| r.g == g)
                            .filter_map(|r| f(r).map(|y| (r.h as f64, y)))
                            .collect()
                    };
                    [
                        Series {
                            name: format!("gap g={g}"),
                            points: pts(&|r| r.exact_gap.or(r.gap)),
                        },
                        Series {
                            name: format!("bound g={g}"),
                            points: pts(&|r| Some(r.flow_bound)),
                        },
                    ]
                })
                .collect();
            plot(
                c,
                Plot {
                    title: "Root reconstruction".into(),
                    x_label: "h".into(),
                    y_label: "E|P+ − P−|".into(),
                    log_x: false,
                    log_y: false,
                    series,
                },
            )
        }
        "distance" => emit(out, &csv_string(&distance::run(c)?)?),
        "battery-power" => {
            let rep = battery_power::run(c)?;
            let p = rep.battery.params();
            eprintln!(
                "battery: regime {:?}, ℓ = {}, ℘ = {}, Γ = {}, γ_t = {}, #R = {}, #Y = {}, panels = {}, validation {}",
                rep.battery.regime(),
                p.ell,
                p.wp,
                p.big_gamma,
                p.gamma_t,
                rep.battery.red,
                rep.battery.yellow,
                rep.battery.size(),
                if rep.validation.passed() { "passed" } else { "FAILED" }
            );
            if let Some(path) = &c.run.battery {
                let desc = rep.battery.describe(&rep.t0, &rep.ts)?;
                std::fs::write(
                    path,
                    serde_json::to_string_pretty(&desc).expect("descriptions serialize"),
                )?;
            }
            emit(out, &csv_string(&rep.rows)?)?;
            summary(c, csv_string(std::slice::from_ref(&rep.fit))?)?;
            let points = rep.rows.iter().map(|r| (r.k as f64, r.error)).collect();
            plot(
                c,
                Plot {
                    title: "Battery test error".into(),
                    x_label: "k".into(),
                    y_label: "max error".into(),
                    log_x: false,
                    log_y: true,
                    series: vec![Series {
                        name: "error".into(),
                        points,
                    }],
                },
            )
        }
        "tv-curve" => {
            let rep = tv_curve::run(c)?;
            emit(out, &csv_string(&rep.rows)?)?;
            let mut text = csv_string(&rep.fits)?;
            for (d, b, count) in &rep.by_delta {
                text.push_str(&format!(
                    "# delta_bl = {d}: mean b = {b} over {count} pairs\n"
                ));
            }
            summary(c, text)?;
            let series = rep
                .fits
                .iter()
                .map(|f| Series {
                    name: format!("pair {} (Δ={})", f.pair, f.delta_bl),
                    points: rep
                        .rows
                        .iter()
                        .filter(|r| r.pair == f.pair)
                        .map(|r| (r.k as f64, r.tv))
                        .collect(),
                })
                .collect();
            plot(
                c,
                Plot {
                    title: "TV of k-site laws".into(),
                    x_label: "k".into(),
                    y_label: "TV".into(),
                    log_x: true,
                    log_y: false,
                    series,
                },
            )
        }
        "phase-transition" => {
            let rep = phase_transition::run(c)?;
            emit(out, &csv_string(&rep.rows)?)?;
            summary(c, csv_string(&rep.k90)?)?;
            let series = rep
                .k90
                .iter()
                .map(|s| Series {
                    name: format!("h={} g={}", s.h, s.g),
                    points: rep
                        .rows
                        .iter()
                        .filter(|r| r.h == s.h && r.g == s.g)
                        .map(|r| (r.k as f64, r.success_rate))
                        .collect(),
                })
                .collect();
            plot(
                c,
                Plot {
                    title: "ML success".into(),
                    x_label: "k".into(),
                    y_label: "P[ML = T0]".into(),
                    log_x: true,
                    log_y: false,
                    series,
                },
            )
        }
        other => Err(CliError::Config(format!("unknown experiment {other}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = effective_config(cli).and_then(|c| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(c.run.threads)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(|| execute(&c))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
