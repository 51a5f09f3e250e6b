use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vizketch", version, about = "Approximate visualizations over sharded tables")]
pub struct Cli {
    /// Engine configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Talk to a running service (`ws://host:port/ws`) instead of starting
    /// an in-process one.
    #[arg(long, global = true)]
    pub server: Option<String>,
    /// Redo log for the in-process service, so datasets survive between
    /// invocations.
    #[arg(long, global = true)]
    pub redo_log: Option<PathBuf>,
    /// Print partial results to standard error as they arrive.
    #[arg(long, global = true)]
    pub progress: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register files as a dataset and print its schema.
    Load(LoadArgs),
    /// Print a dataset's columns.
    Schema(DatasetArgs),
    /// Derive a dataset by filtering or adding a computed column.
    Derive(DeriveArgs),
    /// Histogram of one column.
    Hist {
        #[command(flatten)]
        q: QueryArgs,
        /// Count every row instead of sampling.
        #[arg(long)]
        exact: bool,
    },
    /// Cumulative distribution of one column.
    Cdf(QueryArgs),
    /// Two-column heat map.
    Heatmap(QueryArgs),
    /// Histogram of one column colored by a second.
    Stacked {
        #[command(flatten)]
        q: QueryArgs,
        /// Scale every bar to full height.
        #[arg(long)]
        normalized: bool,
    },
    /// Histograms or heat maps grouped by a third column.
    Trellis(QueryArgs),
    /// Rows following `--start-row` in `--sort` order.
    Tail(QueryArgs),
    /// The row at `--scroll-position` of `--pixels` height, in `--sort` order.
    Scroll(QueryArgs),
    /// Next rows matching `--search` in `--sort` order.
    Find(QueryArgs),
    /// Most frequent values.
    Heavy {
        #[command(flatten)]
        q: QueryArgs,
        /// Exact counter-based summary over every row instead of sampling.
        #[arg(long)]
        mg: bool,
    },
    /// Estimated number of distinct values.
    Distinct(QueryArgs),
    /// Count, mean and higher moments.
    Moments(QueryArgs),
    /// Principal components of numeric columns.
    Pca(QueryArgs),
    /// Write a dataset to `--output`.
    Save(QueryArgs),
    /// Any sketch kind by name.
    Query {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        q: QueryArgs,
    },
    /// Latency as threads and data grow together.
    Bench(BenchArgs),
    /// Run the acceptance suites.
    Verify(VerifyArgs),
    /// Run the service over WebSocket and HTTP.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        /// Worker endpoints; overrides the configuration.
        #[arg(long, value_delimiter = ',')]
        workers: Vec<String>,
    },
    /// Run leaf workers, one per bind address.
    Workers {
        #[arg(long, value_delimiter = ',', required = true)]
        bind: Vec<String>,
        /// Index of the first worker here, when others run elsewhere.
        #[arg(long, default_value_t = 0)]
        first: usize,
        /// Workers in the whole cluster; defaults to those started here.
        #[arg(long)]
        of: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    /// File glob; `{worker}` expands to the worker index.
    pub source: String,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Schema file giving column names and kinds.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The files have no header line.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub dataset: String,
}

#[derive(Debug, Args)]
pub struct DeriveArgs {
    #[arg(long)]
    pub dataset: String,
    /// Keep rows where this predicate holds.
    #[arg(long, conflicts_with = "map", required_unless_present = "map")]
    pub filter: Option<String>,
    /// Add a column computed by this expression.
    #[arg(long, requires = "name")]
    pub map: Option<String>,
    /// Name of the computed column.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Dataset id from `load` or `derive`.
    #[arg(long, required_unless_present = "source")]
    pub dataset: Option<String>,
    /// Register this glob first and query it.
    #[arg(long, conflicts_with = "dataset")]
    pub source: Option<String>,
    /// Columns, in the order the sketch uses them.
    #[arg(long = "col", value_delimiter = ',')]
    pub columns: Vec<String>,
    /// Numeric x buckets as `min:max`; the count comes from `--buckets`.
    #[arg(long)]
    pub x_range: Option<String>,
    /// String x bucket boundaries.
    #[arg(long, value_delimiter = ',')]
    pub x_strings: Vec<String>,
    #[arg(long)]
    pub y_range: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub y_strings: Vec<String>,
    /// Chart size as `WIDTHxHEIGHT`.
    #[arg(long)]
    pub pixels: Option<String>,
    #[arg(long)]
    pub buckets: Option<u32>,
    #[arg(long)]
    pub buckets_y: Option<u32>,
    #[arg(long)]
    pub colors: Option<u32>,
    /// Trellis groups: comma-separated strings or a JSON array of values.
    #[arg(long)]
    pub groups: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub top_k: Option<u32>,
    #[arg(long)]
    pub moments: Option<u32>,
    /// Sort key `column` or `column:desc`; repeat for more keys.
    #[arg(long = "sort")]
    pub sort_order: Vec<String>,
    #[arg(long)]
    pub search: Option<String>,
    #[arg(long, value_enum, default_value = "substring")]
    pub search_mode: Mode,
    #[arg(long)]
    pub case_sensitive: bool,
    /// JSON array of values, one per sort key.
    #[arg(long)]
    pub start_row: Option<String>,
    #[arg(long)]
    pub scroll_position: Option<u32>,
    /// Sampling seed; a fresh one is drawn and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub population: Option<u64>,
    #[arg(long)]
    pub log_scale: bool,
    #[arg(long)]
    pub full_scan: bool,
    #[arg(long)]
    pub sample_size: Option<u64>,
    /// Destination of `save`.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum)]
    pub output_format: Option<Format>,
    /// Register precision for distinct counts.
    #[arg(long)]
    pub precision: Option<u8>,
    /// A complete request as JSON; the flags above override its fields.
    #[arg(long)]
    pub request: Option<String>,
    /// Cancel the execution after this many milliseconds.
    #[arg(long)]
    pub cancel_after: Option<u64>,
    /// Print the merged summary instead of the rendered payload
    /// (in-process only).
    #[arg(long)]
    pub raw: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Exact,
    Substring,
    Regex,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "hist-exact")]
    pub sketch: BenchSketch,
    /// Thread counts: `1..16`, or a comma-separated list.
    #[arg(long, default_value = "1,2,4,8")]
    pub threads: String,
    /// Rows per thread.
    #[arg(long, default_value_t = vizketch_verify::system::SCALING_ROWS)]
    pub rows: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BenchSketch {
    HistExact,
    Hist,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// One suite; all of them when absent.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = vizketch_verify::ACCEPTANCE_SEED)]
    pub seed: u64,
}
