use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use axfi::cli::{
    cmd_compare, cmd_explain, cmd_gen, cmd_scores, cmd_verify, cmd_weights, error_json,
    exit_code, load_problem, parse_methods, parse_score_file, parse_u32_list, parse_usize_list,
    read_file, GenKind, OutputFormat, RunConfig,
};
use axfi::model::{problem_from_json, Model};
use axfi::num::parse_ratio;
use axfi::synth::RandomSpec;
use axfi::{Error, Result};

const EXIT_HELP: &str = "EXIT CODES:
  0  success
  1  i/o or internal error
  2  usage error
  3  schema violation (malformed model/instance/score file)
  4  enumeration cap exceeded
  5  method mismatch (tree-only procedure on a tabular model)
  6  invalid argument
  7  verification failed

Errors are reported as one-line JSON on stderr:
  {\"error\":{\"kind\":\"...\",\"message\":\"...\"}}";

#[derive(Parser)]
#[command(
    name = "axfi",
    version,
    about = "Exact game-theoretic feature importance from contrastive explanations and adversarial-example counts",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Max feature count for 2^m subset scans
    #[arg(long, global = true)]
    cap_subsets: Option<usize>,

    /// Max points any single enumeration may visit
    #[arg(long, global = true)]
    cap_space: Option<u64>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct ProblemArgs {
    /// Model JSON file
    #[arg(long)]
    model: PathBuf,

    /// Instance JSON file
    #[arg(long)]
    instance: PathBuf,

    /// Override the instance's adversarial-example radius
    #[arg(long)]
    epsilon: Option<usize>,

    /// Override the instance's similarity threshold ("p/q")
    #[arg(long)]
    delta: Option<String>,
}

#[derive(clap::Args)]
struct WeightArgs {
    /// count | ratio | sampled | unweighted
    #[arg(long, default_value = "count")]
    weight_mode: String,

    /// Samples per CXp in sampled mode
    #[arg(long, default_value_t = 5000)]
    samples: u64,

    /// PRNG seed for sampled mode
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate abductive and contrastive explanations
    Explain {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Measure the adversarial-example cover of every CXp
    Weights {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Compute feature-importance score vectors and the property report
    Scores {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        weights: WeightArgs,
        /// Comma-separated methods (default: closed forms, baselines, shap_exact)
        #[arg(long)]
        methods: Option<String>,
    },
    /// Rank-biased overlap between score files
    Compare {
        /// Score JSON files (as written by `scores`)
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// RBO persistence, in (0,1)
        #[arg(long, default_value = "1/2")]
        persistence: String,
        /// RBO evaluation depth
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Also rank the absolute values of vectors with negative entries
        #[arg(long)]
        absolute: bool,
    },
    /// Generate model/instance fixtures
    Gen {
        /// running-example | gadget | random
        #[arg(long)]
        kind: String,
        /// Gadget count (kind=gadget)
        #[arg(long)]
        k: Option<usize>,
        /// Feature count (kind=random)
        #[arg(long)]
        m: Option<usize>,
        /// Comma-separated domain sizes, one entry or one per feature
        #[arg(long)]
        domain_sizes: Option<String>,
        /// tabular | dt (kind=random)
        #[arg(long)]
        model_kind: Option<String>,
        /// Comma-separated class weights (kind=random)
        #[arg(long)]
        leaf_bias: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_model: PathBuf,
        #[arg(long)]
        out_instance: PathBuf,
    },
    /// Run the full invariant suite on one problem
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        weights: WeightArgs,
    },
}

fn build_config(cli: &Cli) -> RunConfig {
    let mut cfg = RunConfig::default();
    if let Some(s) = cli.cap_subsets {
        cfg.caps.subsets = s;
    }
    if let Some(s) = cli.cap_space {
        cfg.caps.space = s;
    }
    cfg.format = match cli.format {
        FormatArg::Json => OutputFormat::Json,
        FormatArg::Csv => OutputFormat::Csv,
    };
    cfg
}

fn apply_problem_args(cfg: &mut RunConfig, args: &ProblemArgs) -> Result<()> {
    cfg.epsilon = args.epsilon;
    cfg.delta = match &args.delta {
        Some(d) => Some(parse_ratio(d)?),
        None => None,
    };
    Ok(())
}

fn apply_weight_args(cfg: &mut RunConfig, args: &WeightArgs) -> Result<()> {
    cfg.weight_mode = args.weight_mode.parse()?;
    cfg.samples = args.samples;
    cfg.seed = args.seed;
    Ok(())
}

fn require_json(cfg: &RunConfig, command: &str) -> Result<()> {
    if cfg.format == OutputFormat::Csv {
        return Err(Error::InvalidArgument(format!("{command} only writes JSON")));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(String, bool)> {
    let mut cfg = build_config(cli);
    match &cli.command {
        Command::Explain { problem } => {
            apply_problem_args(&mut cfg, problem)?;
            require_json(&cfg, "explain")?;
            let p = load_problem(&problem.model, &problem.instance, &cfg)?;
            let v = cmd_explain(&p, &cfg.caps)?;
            Ok((serde_json::to_string_pretty(&v).unwrap(), true))
        }
        Command::Weights { problem, weights } => {
            apply_problem_args(&mut cfg, problem)?;
            apply_weight_args(&mut cfg, weights)?;
            let p = load_problem(&problem.model, &problem.instance, &cfg)?;
            Ok((cmd_weights(&p, &cfg)?, true))
        }
        Command::Scores { problem, weights, methods } => {
            apply_problem_args(&mut cfg, problem)?;
            apply_weight_args(&mut cfg, weights)?;
            if let Some(m) = methods {
                cfg.methods = parse_methods(m)?;
            }
            let p = load_problem(&problem.model, &problem.instance, &cfg)?;
            Ok((cmd_scores(&p, &cfg)?, true))
        }
        Command::Compare { files, persistence, depth, absolute } => {
            cfg.persistence = parse_ratio(persistence)?;
            cfg.depth = *depth;
            let mut sets = Vec::new();
            for f in files {
                sets.push(parse_score_file(&read_file(f)?)?);
            }
            let report = cmd_compare(&sets, *absolute, &cfg)?;
            let text = match cfg.format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&report.to_json_value()).unwrap()
                }
                OutputFormat::Csv => report.to_csv(),
            };
            Ok((text, true))
        }
        Command::Gen {
            kind,
            k,
            m,
            domain_sizes,
            model_kind,
            leaf_bias,
            seed,
            out_model,
            out_instance,
        } => {
            require_json(&cfg, "gen")?;
            let gen_kind = match kind.as_str() {
                "running-example" => GenKind::RunningExample,
                "gadget" => GenKind::Gadget {
                    k: k.ok_or_else(|| {
                        Error::InvalidArgument("gadget generation needs --k".into())
                    })?,
                },
                "random" => {
                    let m = m.ok_or_else(|| {
                        Error::InvalidArgument("random generation needs --m".into())
                    })?;
                    let sizes = match domain_sizes {
                        Some(s) => parse_usize_list(s)?,
                        None => vec![2],
                    };
                    let model_kind = model_kind.as_deref().unwrap_or("dt").parse()?;
                    let bias = match leaf_bias {
                        Some(b) => parse_u32_list(b)?,
                        None => vec![1, 1],
                    };
                    GenKind::Random(RandomSpec::new(m, sizes, model_kind, bias), *seed)
                }
                other => {
                    return Err(Error::InvalidArgument(format!("unknown generator {other:?}")))
                }
            };
            let v = cmd_gen(&gen_kind, out_model, out_instance)?;
            Ok((serde_json::to_string_pretty(&v).unwrap(), true))
        }
        Command::Verify { problem, weights } => {
            apply_problem_args(&mut cfg, problem)?;
            apply_weight_args(&mut cfg, weights)?;
            require_json(&cfg, "verify")?;
            let model = Model::from_json_lenient(&read_file(&problem.model)?)?;
            let p = {
                let parsed = problem_from_json(model.clone(), &read_file(&problem.instance)?)?;
                // re-apply overrides
                axfi::model::ExplanationProblem::new(
                    model.clone(),
                    parsed.v().to_vec(),
                    cfg.delta.clone().unwrap_or_else(|| parsed.delta().clone()),
                    cfg.epsilon.or(parsed.epsilon()),
                )?
            };
            let (report, pass) = cmd_verify(&model, &p, &cfg)?;
            Ok((serde_json::to_string_pretty(&report).unwrap(), pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((output, pass)) => {
            println!("{output}");
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(7)
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
