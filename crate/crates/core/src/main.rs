use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geosbm::baselines::{spectral_cluster, SpectralMethod};
use geosbm::clustering::{misclassification_rate, ClusterOptions, Clusterer};
use geosbm::error::{Error, Result};
use geosbm::graph::load_edge_list;
use geosbm::harness::{self, DetectOptions, ExperimentConfig, Normalize};
use geosbm::sbm::{sample_sbm, BlockModelParams, Labeling};
use geosbm::theory;

#[derive(Parser)]
#[command(name = "geosbm", version, about = "Geodesic spectral clustering for stochastic block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted-partition graph; writes <out>.edges and <out>.labels.
    Generate(GenerateArgs),
    /// Cluster the giant component of an edge list.
    Detect(DetectArgs),
    /// Misclassification across a grid of threshold ratios at fixed average degree.
    Sweep(SweepArgs),
    /// Compare geodesic distances with the typical-distance constants.
    Concentration(ConcentrationArgs),
    /// Print theory constants as JSON.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 14.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Copy, Clone, ValueEnum)]
enum MethodArg {
    Geodesic,
    Adjacency,
    Laplacian,
    Rw,
    Sym,
}

impl From<MethodArg> for SpectralMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Geodesic => SpectralMethod::Geodesic,
            MethodArg::Adjacency => SpectralMethod::Adjacency,
            MethodArg::Laplacian => SpectralMethod::UnnormalizedLaplacian,
            MethodArg::Rw => SpectralMethod::RandomWalkLaplacian,
            MethodArg::Sym => SpectralMethod::SymmetricLaplacian,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ClustererArg {
    Kmeans,
    Gmm,
}

impl From<ClustererArg> for Clusterer {
    fn from(c: ClustererArg) -> Self {
        match c {
            ClustererArg::Kmeans => Clusterer::Kmeans,
            ClustererArg::Gmm => Clusterer::Gmm,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum NormalizeArg {
    Mds,
    Raw,
}

impl From<NormalizeArg> for Normalize {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::Mds => Normalize::Mds,
            NormalizeArg::Raw => Normalize::Raw,
        }
    }
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value = "geodesic")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "kmeans")]
    clusterer: ClustererArg,
    #[arg(long, default_value_t = 3.0)]
    cap_factor: f64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, value_enum, default_value = "mds")]
    normalize: NormalizeArg,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "sbm")]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Edge list, one `u v` pair per line.
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Vertex count, when the file has no `# n=` header.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// True labels; prints the misclassification rate on the giant component.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Writes <out>.labels (one block per giant vertex) and <out>.map (the
    /// input vertex id of each line). Without it, `vertex block` pairs go to
    /// stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Threshold ratios, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.5,4.5")]
    ratio: Vec<f64>,
    /// Average degree held fixed across the grid.
    #[arg(long, default_value_t = 8.0)]
    alpha: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Writes <out>.csv and <out>.json.
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
}

#[derive(Args)]
struct ConcentrationArgs {
    /// Graph sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5000,10000,20000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 14.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 3.0)]
    cap_factor: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 14.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn generate(args: GenerateArgs) -> Result<()> {
    let m = &args.model;
    let params = if m.k == 1 {
        BlockModelParams::new(vec![1.0], vec![m.p], 1.0 / m.n as f64, m.n)?
    } else {
        BlockModelParams::planted_partition(m.n, m.k, m.p, m.q)?
    };
    let (g, labels) = sample_sbm(&params, m.seed)?;
    let edges = with_ext(&args.out, "edges");
    let label_path = with_ext(&args.out, "labels");
    let mut w = create(&edges)?;
    g.write_edge_list(&mut w)?;
    w.flush()?;
    let mut w = create(&label_path)?;
    labels.write(&mut w)?;
    w.flush()?;
    eprintln!("wrote {} ({} edges) and {}", edges.display(), g.m(), label_path.display());
    Ok(())
}

fn detect(args: DetectArgs) -> Result<()> {
    let g = load_edge_list(open(&args.input)?, args.n)?;
    let cluster = ClusterOptions {
        clusterer: args.pipeline.clusterer.into(),
        restarts: args.pipeline.restarts,
        seed: args.seed,
    };
    let method: SpectralMethod = args.pipeline.method.into();
    let (labels, map) = if method == SpectralMethod::Geodesic {
        let opts = DetectOptions {
            cap_factor: args.pipeline.cap_factor,
            normalize: args.pipeline.normalize.into(),
            cluster,
            ..Default::default()
        };
        let d = harness::detect_communities(&g, args.k, &opts)?;
        eprintln!("leading eigenvalues: {:?}", d.eigenvalues);
        (d.labels, d.vertex_map)
    } else {
        let (sub, map) = harness::giant_subgraph(&g, args.k)?;
        (spectral_cluster(&sub, method, args.k, &cluster)?, map)
    };
    if let Some(path) = &args.truth {
        let truth = Labeling::read(open(path)?, None)?;
        if truth.len() != g.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                got: truth.len(),
            });
        }
        let truth = truth.restrict(map.originals());
        let k = truth.k().max(labels.k());
        let truth = Labeling::new(truth.as_slice().to_vec(), k)?;
        let pred = Labeling::new(labels.as_slice().to_vec(), k)?;
        eprintln!("misclassification on giant component: {}", misclassification_rate(&truth, &pred)?);
    }
    match &args.out {
        Some(prefix) => {
            let mut w = create(&with_ext(prefix, "labels"))?;
            labels.write(&mut w)?;
            w.flush()?;
            let mut w = create(&with_ext(prefix, "map"))?;
            for &v in map.originals() {
                writeln!(w, "{v}")?;
            }
            w.flush()?;
        }
        None => {
            let mut w = output(None)?;
            for (i, &b) in labels.as_slice().iter().enumerate() {
                writeln!(w, "{} {}", map.original(i), b + 1)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let base = ExperimentConfig {
        n: args.n,
        k: args.k,
        method: args.pipeline.method.into(),
        clusterer: args.pipeline.clusterer.into(),
        normalize: args.pipeline.normalize.into(),
        cap_factor: args.pipeline.cap_factor,
        restarts: args.pipeline.restarts,
        reps: args.reps,
        seed: args.seed,
        ..Default::default()
    };
    let csv = create(&with_ext(&args.out, "csv"))?;
    let summary = harness::run_sweep(&base, &args.ratio, args.alpha, csv)?;
    let mut json = create(&with_ext(&args.out, "json"))?;
    serde_json::to_writer_pretty(&mut json, &summary)?;
    writeln!(json)?;
    json.flush()?;
    for p in &summary.points {
        match (&p.misclassification, &p.warning) {
            (Some(s), _) => eprintln!("ratio {}: median {:.4} (IQR {:.4}-{:.4})", p.ratio, s.median, s.q1, s.q3),
            (None, Some(w)) => eprintln!("ratio {}: skipped, {w}", p.ratio),
            _ => {}
        }
    }
    Ok(())
}

fn concentration(args: ConcentrationArgs) -> Result<()> {
    let config = ExperimentConfig {
        k: args.k,
        p: args.p,
        q: args.q,
        cap_factor: args.cap_factor,
        reps: args.reps,
        seed: args.seed,
        ..Default::default()
    };
    let records = harness::run_concentration(&config, &args.n)?;
    let mut w = output(args.out.as_deref())?;
    harness::write_concentration_csv(&records, &mut w)?;
    w.flush()?;
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let report = theory::oracle_report(args.p, args.q, args.k, args.n)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Detect(a) => detect(a),
        Command::Sweep(a) => sweep(a),
        Command::Concentration(a) => concentration(a),
        Command::Oracle(a) => oracle(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let threads = harness::threads_from_env();
    match geosbm::par::with_threads(threads, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
