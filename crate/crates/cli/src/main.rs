use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use diffrec::dataset::{self, read_manifest, write_manifest};
use diffrec::experiment::{
    best_lambdas, compare_with_reference, load_log, reproduction_config, run_experiment,
    sweep_table, write_long_csv, write_pivot, write_reproduction_csv, write_sweep_csv,
    DatasetFormat, ExperimentConfig, MethodSpec, Prepared,
};
use diffrec::kernels::{KernelSpec, Scorer};
use diffrec::{ExpertiseMethod, GiniMode, HammingMode, ShareNormalization};

#[derive(Parser)]
#[command(
    name = "diffrec",
    version,
    about = "Diffusion-based top-K recommendation benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a log and print its size statistics as JSON.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a log into training and probe links and write a manifest directory.
    Split {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump `userIdx,k_u,e_u` for one expertise method.
    Expertise {
        #[command(flatten)]
        source: SourceArgs,
        /// Activity, EL, InvPop, Gini, Sim, Sim2 or Uniform.
        #[arg(long)]
        method: ExpertiseMethod,
        #[arg(long, default_value = "standard")]
        gini: GiniMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write top-K lists as `userIdx,rank,itemIdx,score`.
    Recommend {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Raw user id; every user with training links when absent.
        #[arg(long)]
        user: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one kernel on one split.
    Eval {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_delimiter = ',', default_value = "20")]
        k: Vec<usize>,
        #[arg(long, default_value = "exact")]
        hd: HammingMode,
        /// JSON report path; a CSV summary always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid over methods, λ, K and seeds.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seed: Vec<u64>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "MD,MDEL,MDActivity,MDGini,MDSim,MDSim2"
        )]
        method: Vec<MethodSpec>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8,0.9")]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "20")]
        k: Vec<usize>,
        #[arg(long, default_value = "receiver")]
        mode: ShareNormalization,
        #[arg(long, default_value = "standard")]
        gini: GiniMode,
        #[arg(long, default_value = "exact")]
        hd: HammingMode,
        /// Run the cells of one seed concurrently.
        #[arg(long)]
        parallel_cells: bool,
        /// Output directory for long.csv, table.csv, pivot.txt and best_lambda.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare against the published MovieLens figures; exits nonzero on any miss.
    Reproduce {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seed: Vec<u64>,
        #[arg(long, default_value = "receiver")]
        mode: ShareNormalization,
        #[arg(long, default_value = "standard")]
        gini: GiniMode,
        #[arg(long, default_value = "exact")]
        hd: HammingMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `movielens` (user item rating timestamp) or `edges`.
    #[arg(long, default_value = "movielens")]
    format: DatasetFormat,
    /// Drop ratings below this value before anything else.
    #[arg(long)]
    min_rating: Option<i64>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A raw log split on the fly, or a manifest written by `split`.
#[derive(Args)]
struct SourceArgs {
    #[arg(long, conflicts_with = "split")]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "movielens")]
    format: DatasetFormat,
    #[arg(long)]
    min_rating: Option<i64>,
    /// Manifest directory produced by `split`.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SourceArgs {
    fn prepare(&self) -> Result<Prepared> {
        match (&self.dataset, &self.split) {
            (_, Some(dir)) => Ok(Prepared::from_split(read_manifest(dir)?)),
            (Some(path), None) => {
                let log = load_log(path, self.format, self.min_rating)?;
                Ok(Prepared::new(&log, self.train_fraction, self.seed)?)
            }
            (None, None) => bail!("either --dataset or --split is required"),
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    /// MD, HC, HHP, BHC, or MD followed by an expertise name (MDEL, MDSim2, ...).
    #[arg(long, default_value = "MD")]
    method: MethodSpec,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value = "receiver")]
    mode: ShareNormalization,
    #[arg(long, default_value = "standard")]
    gini: GiniMode,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec> {
        let lambda = match (self.method.method.uses_lambda(), self.lambda) {
            (true, Some(l)) => l,
            (true, None) => bail!("--lambda is required for {}", self.method),
            (false, _) => 1.0,
        };
        let spec = KernelSpec {
            method: self.method.method,
            lambda,
            expertise: self.method.expertise,
            normalization: self.mode,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn lambda_text(lambda: Option<f64>) -> String {
    lambda.map(|l| l.to_string()).unwrap_or_else(|| "NA".into())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ingest { input, out } => {
            let log = load_log(&input.dataset, input.format, input.min_rating)?;
            let mut w = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &log.stats())?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Split { input, split, out } => {
            let log = load_log(&input.dataset, input.format, input.min_rating)?;
            let s = dataset::split(&log, split.train_fraction, split.seed)?;
            fs::create_dir_all(&out)?;
            write_manifest(&s, &out)?;
            eprintln!(
                "{} training / {} probe links, {} users, {} items -> {}",
                s.training().len(),
                s.probe().len(),
                s.user_count(),
                s.item_count(),
                out.display()
            );
        }
        Command::Expertise {
            source,
            method,
            gini,
            out,
        } => {
            let mut prepared = source.prepare()?;
            let values = prepared.expertise(method, gini).values.clone();
            let mut w = output(out.as_deref())?;
            writeln!(w, "userIdx,k_u,e_u")?;
            for (u, e) in values.iter().enumerate() {
                writeln!(w, "{u},{},{e}", prepared.graph.user_degree(u as u32))?;
            }
            w.flush()?;
        }
        Command::Recommend {
            source,
            kernel,
            k,
            user,
            out,
        } => {
            let spec = kernel.spec()?;
            let mut prepared = source.prepare()?;
            let targets: Vec<u32> = match &user {
                Some(id) => {
                    let idx = prepared
                        .split
                        .user_ids()
                        .iter()
                        .position(|u| u == id)
                        .with_context(|| format!("unknown user {id:?}"))?;
                    vec![idx as u32]
                }
                None => (0..prepared.graph.user_count() as u32)
                    .filter(|&u| prepared.graph.user_degree(u) > 0)
                    .collect(),
            };
            let e = kernel
                .method
                .expertise
                .map(|m| prepared.expertise(m, kernel.gini).clone());
            let lists = Scorer::new(&prepared.graph, spec, e.as_ref())?.recommend_all(&targets, k);
            let mut w = output(out.as_deref())?;
            writeln!(w, "userIdx,rank,itemIdx,score")?;
            for list in &lists {
                for (rank, (item, score)) in list.items.iter().enumerate() {
                    writeln!(w, "{},{},{item},{score}", list.target, rank + 1)?;
                }
            }
            w.flush()?;
        }
        Command::Eval {
            source,
            kernel,
            k,
            hd,
            out,
        } => {
            let spec = kernel.spec()?;
            if k.is_empty() || k.contains(&0) {
                bail!("--k must list positive cutoffs");
            }
            let mut prepared = source.prepare()?;
            let e = kernel
                .method
                .expertise
                .map(|m| prepared.expertise(m, kernel.gini).clone());
            let reports = prepared.evaluate(spec, e.as_ref(), &k, hd)?;
            let mut stdout = io::stdout().lock();
            writeln!(
                stdout,
                "method,lambda,K,precision,recall,f1,coverage,intraD,HD,users"
            )?;
            for r in &reports {
                writeln!(
                    stdout,
                    "{},{},{},{:.6},{:.6},{:.6},{},{:.6},{:.6},{}",
                    kernel.method,
                    lambda_text(kernel.method.method.uses_lambda().then_some(spec.lambda)),
                    r.k,
                    r.precision,
                    r.recall,
                    r.f1,
                    r.coverage,
                    r.intra_diversity,
                    r.hamming,
                    r.evaluated_users
                )?;
            }
            if let Some(path) = out {
                let file =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                serde_json::to_writer_pretty(BufWriter::new(file), &reports)?;
            }
        }
        Command::Sweep {
            input,
            train_fraction,
            seed,
            method,
            lambda,
            k,
            mode,
            gini,
            hd,
            parallel_cells,
            out,
        } => {
            let mut config = ExperimentConfig::new(&input.dataset);
            config.format = input.format;
            config.min_rating = input.min_rating;
            config.train_fraction = train_fraction;
            config.seeds = seed;
            config.methods = method;
            config.lambdas = lambda;
            config.ks = k;
            config.normalization = mode;
            config.gini_mode = gini;
            config.hamming = hd;
            config.parallel_cells = parallel_cells;
            config.validate()?;
            let reports = run_experiment(&config)?;
            fs::create_dir_all(&out)?;
            write_long_csv(&reports, create(&out, "long.csv")?)?;
            let rows = sweep_table(&reports);
            write_sweep_csv(&rows, create(&out, "table.csv")?)?;
            let mut pivot = create(&out, "pivot.txt")?;
            for &kk in &config.ks {
                write_pivot(&rows, kk, &mut pivot)?;
            }
            pivot.flush()?;
            let mut best = create(&out, "best_lambda.csv")?;
            writeln!(best, "method,K,metric,lambda,value")?;
            for b in best_lambdas(&rows) {
                writeln!(
                    best,
                    "{},{},{},{},{}",
                    b.method, b.k, b.metric, b.lambda, b.value
                )?;
            }
            best.flush()?;
            write_pivot(&rows, config.ks[0], io::stdout().lock())?;
        }
        Command::Reproduce {
            dataset,
            seed,
            mode,
            gini,
            hd,
            out,
        } => {
            let mut config = reproduction_config(&dataset, seed);
            config.normalization = mode;
            config.gini_mode = gini;
            config.hamming = hd;
            let reports = run_experiment(&config)?;
            let rows = compare_with_reference(&reports);
            if let Some(path) = &out {
                write_reproduction_csv(
                    &rows,
                    File::create(path).with_context(|| format!("creating {}", path.display()))?,
                )?;
            }
            let mut stdout = io::stdout().lock();
            writeln!(
                stdout,
                "{:<12} {:>6} {:>8} {:>16} {:>6} {:>14}  result",
                "method", "lambda", "ref F1", "F1 mean±sd", "ref cov", "cov mean±sd"
            )?;
            for r in &rows {
                writeln!(
                    stdout,
                    "{:<12} {:>6} {:>8.3} {:>16} {:>6} {:>14}  {}",
                    r.method,
                    lambda_text(r.lambda),
                    r.reference_f1,
                    format!("{:.4}±{:.4}", r.f1.0, r.f1.1),
                    r.reference_coverage,
                    format!("{:.1}±{:.1}", r.coverage.0, r.coverage.1),
                    if r.passed() { "pass" } else { "FAIL" }
                )?;
            }
            let failed = rows.iter().filter(|r| !r.passed()).count();
            writeln!(
                stdout,
                "{} of {} cells within tolerance",
                rows.len() - failed,
                rows.len()
            )?;
            if failed > 0 || rows.is_empty() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
