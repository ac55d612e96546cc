mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "hegmn", version, about = "Heterogeneous graph edit distance and graph matching networks")]
struct Cli {
    /// Random seed; for `train` it overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random typed source graph.
    Synth(SynthArgs),
    /// BFS-sample a corpus of small connected subgraphs from a source graph.
    Sample(SampleArgs),
    /// Exact HGED between two graph documents.
    Ged(GedArgs),
    /// Split a corpus and label its pairs with exact HGED.
    Dataset(DatasetArgs),
    /// Train a model on a dataset directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split of a dataset.
    Eval(EvalArgs),
    /// Rank corpus graphs by predicted similarity to a query graph.
    Query(QueryArgs),
    /// Time pair scoring for the full model and graph-level matching alone.
    Bench(BenchArgs),
    /// Finite-difference check of the full model loss on random small pairs.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    node_types: usize,
    #[arg(long, default_value_t = 3)]
    edge_types: usize,
    #[arg(long, default_value_t = 5000)]
    nodes: usize,
    #[arg(long, default_value_t = 2.0)]
    mean_degree: f64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Source graph file (JSON Lines, first graph is used).
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 250)]
    count: usize,
    #[arg(long, default_value_t = 10)]
    max_nodes: usize,
    #[arg(long, default_value_t = 2)]
    min_node_types: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Method {
    Astar,
    Brute,
}

#[derive(Args, Debug)]
struct GedArgs {
    /// First graph: a file holding one graph JSON document.
    a: PathBuf,
    /// Second graph.
    b: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Astar)]
    method: Method,
    #[arg(long)]
    expansion_limit: Option<usize>,
    /// Also print one optimal edit path.
    #[arg(long)]
    path: bool,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// `policy`, `none`, or a number of training pairs.
    #[arg(long, default_value = "policy")]
    pair_cap: String,
    #[arg(long)]
    expansion_limit: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Preset {
    Paper,
    Desk,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset directory written by `dataset`.
    #[arg(long)]
    data: PathBuf,
    /// Flat `key = value` config file, applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    preset: Preset,
    /// Extra `key=value` overrides applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write 0 in every `seconds` column so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SplitName {
    Train,
    Val,
    Test,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    split: SplitName,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset directory whose corpus is searched.
    #[arg(long)]
    data: PathBuf,
    /// Query by corpus id.
    #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
    id: Option<String>,
    /// Query with a graph document.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Number of test pairs to score.
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    #[arg(long, default_value_t = 5)]
    repeat: usize,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    #[arg(long, default_value_t = 5)]
    max_nodes: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    /// Coordinates checked per parameter tensor; `0` checks all.
    #[arg(long, default_value_t = 16)]
    per_param: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seed = cli.seed;
    let out = cli.out;
    match cli.cmd {
        Command::Synth(a) => commands::synth(&a, seed.unwrap_or(0), out),
        Command::Sample(a) => commands::sample(&a, seed.unwrap_or(0), out),
        Command::Ged(a) => commands::ged(&a),
        Command::Dataset(a) => commands::dataset(&a, seed.unwrap_or(0), out),
        Command::Train(a) => commands::train(&a, seed, out),
        Command::Eval(a) => commands::eval(&a, out),
        Command::Query(a) => commands::query(&a, out),
        Command::Bench(a) => commands::bench(&a, out),
        Command::Gradcheck(a) => commands::gradcheck(&a, seed.unwrap_or(0)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
