use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use spotrank_core::{Bound, ConfigError, Maxima, Scorer, ScoringConfig, SiDenominator, SiKind, SiTransform};

mod commands;
mod config;

use commands::{GridTarget, SimulateArgs};
use config::{parse_list, FileConfig};

const KIND_NAMES: [&str; 6] = ["whole", "net", "positive", "negative", "upvote", "downvote"];
const TRANSFORM_NAMES: [&str; 4] = ["linear", "log", "exp", "poly"];

#[derive(Parser, Debug)]
#[command(
    name = "spotrank",
    version,
    about = "Wilson score ranking blended with vote-attention indices"
)]
struct Cli {
    /// TOML file whose keys are flag names; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a single tally.
    Score {
        #[arg(long)]
        up: Option<u64>,
        #[arg(long)]
        down: Option<u64>,
        /// Question maxima; default to the tally's own counts.
        #[arg(long = "n-max")]
        n_max: Option<u64>,
        #[arg(long = "u-max")]
        u_max: Option<u64>,
        #[arg(long = "d-max")]
        d_max: Option<u64>,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Rank a JSONL file of tallies (`-` for stdin).
    Rank {
        input: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Replay a timestamp-sorted JSONL event log and rank every question.
    Replay {
        input: PathBuf,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Write one score grid as CSV.
    Grid {
        #[command(flatten)]
        grid: GridArgs,
        /// Explicit output file instead of a generated name in --out-dir.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Write one grid per (z, P, kind, transform) combination.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "z-values", value_delimiter = ',')]
        z_values: Option<Vec<f64>>,
        #[arg(long = "p-values", value_delimiter = ',')]
        p_values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        transforms: Option<Vec<String>>,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
    /// Simulate a vote stream and report ranking stability.
    Simulate {
        /// `id:up_probability:arrival_weight`, comma separated.
        #[arg(long)]
        profiles: Option<String>,
        #[arg(long)]
        events: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cadence: Option<u64>,
        /// Comma-separated subset of wilson, average, improved.
        #[arg(long)]
        scorers: Option<String>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct ScoringArgs {
    #[arg(long)]
    z: Option<f64>,
    #[arg(long = "p-weight")]
    p_weight: Option<f64>,
    #[arg(long, value_parser = PossibleValuesParser::new(KIND_NAMES).map(|s| s.parse::<SiKind>().unwrap()))]
    kind: Option<SiKind>,
    #[arg(long, value_parser = PossibleValuesParser::new(TRANSFORM_NAMES))]
    transform: Option<String>,
    /// Exponent of the poly transform.
    #[arg(long = "poly-a")]
    poly_a: Option<f64>,
    #[arg(long, value_parser = PossibleValuesParser::new(["lower", "upper"]).map(|s| s.parse::<Bound>().unwrap()))]
    bound: Option<Bound>,
    #[arg(long = "n-max-floor")]
    n_max_floor: Option<u64>,
    #[arg(
        long = "si-denominator",
        value_parser = PossibleValuesParser::new(["nmax", "nmax-plus-one", "n-plus-one"])
            .map(|s| s.parse::<SiDenominator>().unwrap())
    )]
    si_denominator: Option<SiDenominator>,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long = "u-range")]
    u_range: Option<u64>,
    #[arg(long = "d-range")]
    d_range: Option<u64>,
    #[arg(long)]
    step: Option<u64>,
    #[arg(long = "n-max")]
    n_max: Option<u64>,
    #[arg(long = "u-max")]
    u_max: Option<u64>,
    #[arg(long = "d-max")]
    d_max: Option<u64>,
    /// improved, wilson or average.
    #[arg(long, value_parser = PossibleValuesParser::new(["improved", "wilson", "average"]))]
    scorer: Option<String>,
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn flag_name(err: &ConfigError) -> &'static str {
    match err.field() {
        "p_weight" => "p-weight",
        "poly_a" => "poly-a",
        "n_max_floor" => "n-max-floor",
        other => other,
    }
}

fn validated(config: ScoringConfig) -> Result<ScoringConfig> {
    config
        .validate()
        .map_err(|e| anyhow!("invalid --{}: {e}", flag_name(&e)))
}

fn transform_from(cfg: &FileConfig, name: Option<String>, poly_a: f64) -> Result<SiTransform> {
    let name = cfg.pick_or("transform", name, "linear".to_string())?;
    SiTransform::parse(&name, poly_a).map_err(|e| anyhow!("invalid --transform: {e}"))
}

impl ScoringArgs {
    fn resolve(self, cfg: &FileConfig) -> Result<ScoringConfig> {
        let defaults = ScoringConfig::default();
        let poly_a = cfg.pick_or("poly-a", self.poly_a, 2.0)?;
        validated(ScoringConfig {
            z: cfg.pick_or("z", self.z, defaults.z)?,
            p_weight: cfg.pick_or("p-weight", self.p_weight, defaults.p_weight)?,
            si_kind: cfg.pick_or("kind", self.kind, defaults.si_kind)?,
            si_transform: transform_from(cfg, self.transform, poly_a)?,
            bound: cfg.pick_or("bound", self.bound, defaults.bound)?,
            n_max_floor: cfg.pick_or("n-max-floor", self.n_max_floor, defaults.n_max_floor)?,
            si_denominator: cfg.pick_or("si-denominator", self.si_denominator, defaults.si_denominator)?,
        })
    }
}

fn scorer_from_name(name: &str, config: ScoringConfig) -> Result<Scorer> {
    match name {
        "improved" => Ok(Scorer::Improved(config)),
        "wilson" => Ok(Scorer::OriginalWilson {
            z: config.z,
            bound: config.bound,
        }),
        "average" => Ok(Scorer::AverageRating),
        other => Err(anyhow!(
            "invalid --scorer `{other}`: expected improved, wilson or average"
        )),
    }
}

impl GridArgs {
    fn resolve(self, cfg: &FileConfig, config: ScoringConfig) -> Result<GridTarget> {
        let u_range = cfg.pick_or("u-range", self.u_range, 1000)?;
        let d_range = cfg.pick_or("d-range", self.d_range, 1000)?;
        let maxima = Maxima::new(
            cfg.pick_or("n-max", self.n_max, u_range + d_range)?,
            cfg.pick_or("u-max", self.u_max, u_range)?,
            cfg.pick_or("d-max", self.d_max, d_range)?,
        );
        let scorer = scorer_from_name(&cfg.pick_or("scorer", self.scorer, "improved".to_string())?, config)?;
        Ok(GridTarget {
            spec: spotrank_core::GridSpec {
                u_range,
                d_range,
                step: cfg.pick_or("step", self.step, 1)?,
                maxima,
                scorer,
            },
            out_dir: cfg.pick_or("out-dir", self.out_dir, PathBuf::from("."))?,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let stdout = std::io::stdout();
    match cli.command {
        Command::Score {
            up,
            down,
            n_max,
            u_max,
            d_max,
            scoring,
        } => {
            let config = scoring.resolve(&cfg)?;
            let up = cfg.pick("up", up)?.ok_or_else(|| anyhow!("missing --up"))?;
            let down = cfg.pick("down", down)?.ok_or_else(|| anyhow!("missing --down"))?;
            let raw = (
                cfg.pick_or("n-max", n_max, up + down)?,
                cfg.pick_or("u-max", u_max, up)?,
                cfg.pick_or("d-max", d_max, down)?,
            );
            commands::score(up, down, raw, &config, &mut stdout.lock())
        }
        Command::Rank { input, scoring } => {
            let config = scoring.resolve(&cfg)?;
            commands::rank(&input, &config, &mut stdout.lock())
        }
        Command::Replay { input, scoring } => {
            let config = scoring.resolve(&cfg)?;
            commands::replay(&input, &config, &mut stdout.lock())
        }
        Command::Grid { grid, output, scoring } => {
            let config = scoring.resolve(&cfg)?;
            let target = grid.resolve(&cfg, config)?;
            let output = cfg.pick("output", output)?;
            let path = commands::grid(&target, output)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Sweep {
            grid,
            z_values,
            p_values,
            kinds,
            transforms,
            scoring,
        } => {
            let config = scoring.resolve(&cfg)?;
            let target = grid.resolve(&cfg, config)?;
            let poly_a = match config.si_transform {
                SiTransform::Polynomial(a) => a,
                _ => cfg.pick_or("poly-a", None, 2.0)?,
            };
            let kinds = match cfg.pick_list::<String>("kinds", kinds)? {
                Some(names) => names
                    .iter()
                    .map(|k| k.parse::<SiKind>().map_err(|e| anyhow!("invalid --kinds: {e}")))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![config.si_kind],
            };
            let transforms = match cfg.pick_list::<String>("transforms", transforms)? {
                Some(names) => names
                    .iter()
                    .map(|t| SiTransform::parse(t, poly_a).map_err(|e| anyhow!("invalid --transforms: {e}")))
                    .collect::<Result<Vec<_>>>()?,
                None => vec![config.si_transform],
            };
            let spec = spotrank_core::SweepSpec {
                base: spotrank_core::GridSpec {
                    scorer: Scorer::Improved(config),
                    ..target.spec
                },
                z_values: cfg.pick_list("z-values", z_values)?.unwrap_or(vec![config.z]),
                p_values: cfg.pick_list("p-values", p_values)?.unwrap_or(vec![config.p_weight]),
                kinds,
                transforms,
            };
            for path in commands::sweep(&spec, &target.out_dir)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Simulate {
            profiles,
            events,
            seed,
            cadence,
            scorers,
            trajectory,
            report,
            scoring,
        } => {
            let config = scoring.resolve(&cfg)?;
            let profiles = cfg
                .pick("profiles", profiles)?
                .ok_or_else(|| anyhow!("missing --profiles"))?;
            let scorer_names = cfg.pick_or("scorers", scorers, "wilson,improved".to_string())?;
            let scorers = parse_list::<String>("scorers", &scorer_names)?
                .iter()
                .map(|name| scorer_from_name(name, config))
                .collect::<Result<Vec<_>>>()?;
            let args = SimulateArgs {
                profiles: commands::parse_profiles(&profiles)?,
                events: cfg.pick_or("events", events, 1000)?,
                seed: cfg.pick_or("seed", seed, 0)?,
                cadence: cfg.pick_or("cadence", cadence, 100)?,
                scorers,
                trajectory: cfg.pick_or("trajectory", trajectory, PathBuf::from("trajectory.jsonl"))?,
                report: cfg.pick_or("report", report, PathBuf::from("report.json"))?,
            };
            commands::simulate(&args)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
