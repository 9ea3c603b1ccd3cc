use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Default seed, so runs are reproducible unless a seed is given.
pub const DEFAULT_SEED: u64 = 0x4d44_4c00;

#[derive(Debug, Parser)]
#[command(name = "mdl", version, about = "Minimum description length model selection and testing")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Report code lengths in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    pub seed: u64,
    /// Worker threads for parallel evaluation (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parametric complexity of a multinomial or Markov model.
    Complexity(ComplexityArgs),
    /// Compare candidate models on one categorical column.
    Select(SelectArgs),
    /// Choose regression covariates by luckiness NML plus a subset code.
    Varsel(VarselArgs),
    /// Choose a Markov order for one categorical column.
    Markov(MarkovArgs),
    /// Learn a Bayesian-network structure by hill climbing.
    Bn(BnArgs),
    /// Cumulative log loss and regret of sequential predictors.
    Preq(PreqArgs),
    /// Test a simple null against a universal alternative.
    Test(TestArgs),
    /// Print the JSON schema of a subcommand's report.
    Schema(SchemaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Szpankowski,
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    #[arg(long)]
    pub n: u64,
    /// Alphabet size.
    #[arg(long, default_value_t = 2)]
    pub r: u64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    /// Markov order; 0 is the i.i.d. multinomial.
    #[arg(long, default_value_t = 0)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Column to model; defaults to the first.
    #[arg(long)]
    pub column: Option<String>,
    /// Candidates: bernoulli (i.i.d. NML), iid-jeffreys, markovK (Jeffreys per context), markovK-nml, uniform.
    #[arg(long, value_delimiter = ',', default_value = "bernoulli,markov1")]
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Args)]
pub struct VarselArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Response column.
    #[arg(long)]
    pub response: String,
    /// Covariate columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Known noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Luckiness covariance scale c in c·I.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, default_value_t = Strategy::Exhaustive)]
    pub strategy: Strategy,
}

#[derive(Debug, Args)]
pub struct MarkovArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub max_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreKind {
    Fnml,
    Qnml,
    Bdeu,
}

#[derive(Debug, Args)]
pub struct BnArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = ScoreKind::Fnml)]
    pub score: ScoreKind,
    /// BDeu equivalent sample size.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4)]
    pub max_parents: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct PreqArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub column: Option<String>,
    /// Categorical: jeffreys, laplace, nml, markov1, switch, uniform.
    /// Real: bayes, plugin, conditional.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Vec<String>,
    /// Treat a numeric column as real-valued even if it holds integers.
    #[arg(long)]
    pub real: bool,
    /// Noise variance for real-valued predictors.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Also write the per-step cumulative losses as CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Alternative {
    Jeffreys,
    Nml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Continuation {
    Restart,
    Condition,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Simple null, e.g. bernoulli:0.5.
    #[arg(long, default_value = "bernoulli:0.5")]
    pub null: String,
    #[arg(long, value_enum, default_value_t = Alternative::Jeffreys)]
    pub alt: Alternative,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Data to test.
    #[arg(long, short, alias = "data", conflicts_with = "simulate")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
    /// Split the data into batches of this size and combine their evidence.
    #[arg(long, requires = "input")]
    pub batch_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = Continuation::Restart)]
    pub continuation: Continuation,
    /// Estimate the Type-I error over this many simulated null datasets.
    #[arg(long)]
    pub simulate: Option<usize>,
    /// Length of each simulated dataset.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    #[arg(value_enum)]
    pub subcommand: SchemaName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemaName {
    Complexity,
    Select,
    Varsel,
    Markov,
    Bn,
    Preq,
    Test,
    Simulate,
}
