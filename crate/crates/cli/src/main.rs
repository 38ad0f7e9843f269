use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use deltagen_core::dataset::{
    audit, compute_stats, generate_dataset, read_jsonl, split, to_owl_functional, write_jsonl, DatasetError, Example,
    GenConfig,
};
use deltagen_core::quality::run_golden;
use deltagen_core::reasoner::Budget;
use deltagen_core::verbalize::{hard_symbolic, soft_symbolic};

const EXIT_CONFIG: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "deltagen", version, about = "ALCQ entailment dataset generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset with splits, statistics and a replayable config.
    Generate(GenerateArgs),
    /// Recompute every answer, depth and justification of a JSONL file.
    Check {
        file: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Rewrite a JSONL file in a symbolic form.
    Translate {
        file: PathBuf,
        #[arg(value_enum)]
        mode: Mode,
        /// Output file (default: input name with the mode appended).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the hand-checked entailment suite.
    QualityTests,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Soft,
    Hard,
}

#[derive(Args)]
struct GenerateArgs {
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    level: Option<u8>,
    /// Depth set: `0,1,2`, `0..3,5` or a cumulative preset `d3`.
    #[arg(long)]
    depths: Option<String>,
    /// Number of KBs, split across the pools.
    #[arg(long)]
    kbs: Option<usize>,
    /// Comma-separated pool names.
    #[arg(long)]
    pools: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grammar overrides, e.g. `forall=0.70,or=0.80`.
    #[arg(long)]
    tweak: Option<String>,
    /// Wall-clock seconds for one KB's closure.
    #[arg(long)]
    closure_budget: Option<f64>,
    #[arg(long)]
    role_assertions: bool,
    /// Also write every KB in OWL functional-style syntax.
    #[arg(long)]
    export_owl: bool,
    /// Worker threads (output does not depend on it).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long, env = "DELTAGEN_OUT", default_value = "out")]
    output: PathBuf,
}

impl GenerateArgs {
    fn config(&self) -> Result<GenConfig, DatasetError> {
        let mut c = GenConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| DatasetError::Config(format!("{}: {e}", path.display())))?;
            c.apply_text(&text)?;
        }
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| c.set(k, &v));
        set("level", self.level.map(|v| v.to_string()))?;
        set("depths", self.depths.clone())?;
        set("kbs", self.kbs.map(|v| v.to_string()))?;
        set("pools", self.pools.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("tweak", self.tweak.clone())?;
        set("closure_budget_secs", self.closure_budget.map(|v| v.to_string()))?;
        set("role_assertions", self.role_assertions.then(|| "true".into()))?;
        set("export_owl", self.export_owl.then(|| "true".into()))?;
        c.validate()?;
        Ok(c)
    }
}

fn thread_pool(jobs: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_examples(path: &Path) -> anyhow::Result<Vec<Example>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_jsonl(BufReader::new(file)).with_context(|| path.display().to_string())?)
}

fn generate(args: &GenerateArgs) -> anyhow::Result<ExitCode> {
    let cfg = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("deltagen: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    let ds = match thread_pool(args.jobs)?.install(|| generate_dataset(&cfg)) {
        Ok(ds) => ds,
        Err(e @ DatasetError::Exhausted { .. }) => {
            eprintln!("deltagen: {e}");
            return Ok(ExitCode::from(EXIT_EXHAUSTED));
        }
        Err(e) => return Err(e.into()),
    };
    let out = &args.output;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("dataset.jsonl"), |w| write_jsonl(&ds.examples, w))?;
    let names = ["train.jsonl", "validation.jsonl", "test.jsonl"];
    for (name, part) in names.iter().zip(split(&ds.examples, [0.7, 0.1, 0.2], cfg.seed)?) {
        write_file(&out.join(name), |w| write_jsonl(&part, w))?;
    }
    let stats = compute_stats(&ds.examples);
    write_file(&out.join("stats.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &stats)?;
        w.write_all(b"\n")
    })?;
    write_file(&out.join("stats.txt"), |w| write!(w, "{stats}"))?;
    write_file(&out.join("config.txt"), |w| write!(w, "{cfg}"))?;
    if cfg.export_owl {
        let dir = out.join("owl");
        fs::create_dir_all(&dir)?;
        for (pool, k, kb) in &ds.kbs {
            let iri = format!("{pool}/{k}");
            write_file(&dir.join(format!("{pool}_{k}.ofn")), |w| w.write_all(to_owl_functional(kb, &iri).as_bytes()))?;
        }
    }
    eprintln!("wrote {} examples to {}", ds.examples.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn check(file: &Path, jobs: Option<usize>) -> anyhow::Result<ExitCode> {
    let examples = read_examples(file)?;
    let report = thread_pool(jobs)?.install(|| audit(&examples, Budget::default()));
    for m in &report.mismatches {
        println!("line {}: {}", m.line, m.message);
    }
    println!("checked {} examples, {} mismatches", report.checked, report.mismatches.len());
    Ok(if report.mismatches.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_MISMATCH) })
}

fn translate(file: &Path, mode: Mode, output: Option<&Path>) -> anyhow::Result<ExitCode> {
    let examples = read_examples(file)?;
    let (suffix, f): (&str, fn(&Example) -> _) = match mode {
        Mode::Soft => ("soft", soft_symbolic),
        Mode::Hard => ("hard", hard_symbolic),
    };
    let mut out = Vec::with_capacity(examples.len());
    for (i, e) in examples.iter().enumerate() {
        out.push(f(e).with_context(|| format!("line {}", i + 1))?);
    }
    let path = output.map_or_else(|| file.with_extension(format!("{suffix}.jsonl")), Path::to_path_buf);
    write_file(&path, |w| write_jsonl(&out, w))?;
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn quality_tests() -> ExitCode {
    let results = run_golden();
    let passed = results.iter().filter(|r| r.passed()).count();
    for r in &results {
        let got = match &r.actual {
            Ok(v) => v.to_string(),
            Err(e) => format!("error: {e}"),
        };
        let mark = if r.passed() { "PASS" } else { "FAIL" };
        println!("{mark} {} (expected {}, got {got})", r.name, r.expected);
    }
    println!("{passed}/{} passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Check { file, jobs } => check(file, *jobs),
        Command::Translate { file, mode, output } => translate(file, *mode, output.as_deref()),
        Command::QualityTests => Ok(quality_tests()),
    };
    result.unwrap_or_else(|e| {
        eprintln!("deltagen: {e:#}");
        ExitCode::FAILURE
    })
}
