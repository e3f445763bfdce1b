use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crossbench::bench::{emit, run_grid, strategy_grid, write_output, OutputFormat};
use crossbench::containers::ContainerKind;
use crossbench::pipeline::{verify_strategies, JobConfig};
use crossbench::selection::{next_indices, FileChain, SelectorParams};
use crossbench::store::{KeysReader, ManagerKind, StoreOptions, TreeReader};

#[derive(Parser)]
#[command(name = "crossbench", version, about = "Pileup crossing persistency benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a strategy grid and print the result tables.
    Run(RunArgs),
    /// Write every strategy's files and compare their readback.
    Verify(JobArgs),
    /// Describe a keys or tree file.
    Inspect { file: PathBuf },
    /// Print pileup entries picked by the burst/jump selector.
    Select(SelectArgs),
}

#[derive(Args)]
struct JobArgs {
    /// keys, matrix, tree, a comma list or "all".
    #[arg(long, default_value = "all")]
    manager: String,
    /// stl, c, obj, clones, a comma list or "all".
    #[arg(long, default_value = "all")]
    container: String,
    /// Compression levels 0..9, comma separated.
    #[arg(long, default_value = "1")]
    compression: String,
    /// Split levels, comma separated (0 = whole objects).
    #[arg(long, default_value = "99")]
    split: String,
    #[arg(long, default_value_t = 8000)]
    basket: u32,
    #[arg(long, default_value_t = 3)]
    burst: u64,
    #[arg(long, default_value_t = 10)]
    jump: u64,
    /// Divisor of the per-class multiplicities [default: 10, paper scale 1].
    #[arg(long)]
    reduction: Option<u32>,
    /// [default: 100, paper scale 500]
    #[arg(long)]
    crossings: Option<u64>,
    /// Pileup files [default: 10, paper scale 100].
    #[arg(long)]
    files: Option<usize>,
    /// [default: 100, paper scale 500]
    #[arg(long)]
    events_per_file: Option<u64>,
    #[arg(long, default_value_t = 153)]
    pileup: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Full-size defaults for reduction, crossings, files and events.
    #[arg(long)]
    paper_scale: bool,
    /// Generate each pileup file instead of copying one.
    #[arg(long)]
    distinct_files: bool,
    /// One pileup reader per file instead of one reconnected reader.
    #[arg(long)]
    manager_per_file: bool,
    /// Working directory for generated files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    job: JobArgs,
    #[arg(long, default_value = "table")]
    format: String,
    /// Write the tables or CSV here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Keep the generated files of every cell.
    #[arg(long)]
    keep_files: bool,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, default_value_t = 10)]
    files: usize,
    #[arg(long, default_value_t = 100)]
    events_per_file: u64,
    #[arg(long, default_value_t = 3)]
    burst: u64,
    #[arg(long, default_value_t = 10)]
    jump: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    cursor: u64,
    #[arg(long, default_value_t = 153)]
    count: usize,
}

fn list<T>(s: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr + Clone,
    T::Err: std::fmt::Display,
{
    if s == "all" {
        return Ok(all.to_vec());
    }
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|e| anyhow::anyhow!("{x}: {e}")))
        .collect()
}

impl JobArgs {
    fn base(&self) -> JobConfig {
        let scale = if self.paper_scale {
            JobConfig::paper_scale()
        } else {
            JobConfig::default()
        };
        JobConfig {
            store: StoreOptions {
                compression: 1,
                split: 99,
                basket_size: self.basket,
            },
            burst: self.burst,
            jump: self.jump,
            reduction: self.reduction.unwrap_or(scale.reduction),
            crossings: self.crossings.unwrap_or(scale.crossings),
            pileup_files: self.files.unwrap_or(scale.pileup_files),
            events_per_file: self.events_per_file.unwrap_or(scale.events_per_file),
            pileup: self.pileup,
            seed: self.seed,
            rank_seed: self.seed,
            distinct_pileup_files: self.distinct_files,
            manager_per_file: self.manager_per_file,
            out_dir: self.out.clone().unwrap_or(scale.out_dir),
            ..scale
        }
    }

    /// One base configuration per (compression, split) pair.
    fn bases(&self) -> Result<Vec<JobConfig>> {
        let levels: Vec<u8> = list(&self.compression, &[])?;
        let splits: Vec<u8> = list(&self.split, &[])?;
        if levels.is_empty() || splits.is_empty() {
            bail!("need at least one compression level and one split level");
        }
        let base = self.base();
        let mut out = Vec::new();
        for &compression in &levels {
            if compression > 9 {
                bail!("compression level {compression} outside 0..9");
            }
            for &split in &splits {
                let mut c = base.clone();
                c.store.compression = compression;
                c.store.split = split;
                out.push(c);
            }
        }
        Ok(out)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let format: OutputFormat = args.format.parse()?;
    let managers = list(&args.job.manager, &ManagerKind::ALL)?;
    let containers = list(&args.job.container, &ContainerKind::ALL)?;
    let configs = strategy_grid(&args.job.bases()?, &managers, &containers);
    let mut metrics = Vec::new();
    for (config, result) in configs.iter().zip(run_grid(&configs, args.keep_files)) {
        match result {
            Ok(m) => {
                eprintln!(
                    "{}/{} z{} s{}: {:.1} kb/event, {:.4} s/crossing",
                    m.manager, m.container, m.compression, m.split, m.kb_per_event, m.read_s_per_crossing_mean
                );
                metrics.push(m);
            }
            Err(e) => eprintln!("{}/{}: failed: {e}", config.manager, config.container),
        }
    }
    write_output(&emit(&metrics, format)?, args.report.as_deref())?;
    Ok(())
}

fn verify(args: JobArgs) -> Result<()> {
    let containers = list(&args.container, &ContainerKind::ALL)?;
    let mut clean = true;
    for base in args.bases()? {
        let dir = base.out_dir.join(format!("verify-z{}-s{}", base.store.compression, base.store.split));
        let config = JobConfig { out_dir: dir.clone(), ..base };
        let report = verify_strategies(&config, &containers)?;
        let _ = std::fs::remove_dir_all(&dir);
        println!(
            "compression={} split={}: {} events compared, {} mismatches, {} decode failures",
            config.store.compression,
            config.store.split,
            report.compared,
            report.mismatches.len(),
            report.failures.len()
        );
        for m in &report.mismatches {
            println!(
                "  mismatch {}/{} {} entry {}: class {} element {:?} attribute {:?}",
                m.manager,
                m.container,
                m.file.display(),
                m.entry,
                m.difference.class,
                m.difference.element,
                m.difference.attribute
            );
        }
        for f in &report.failures {
            println!("  failure {}/{} {} entry {}: {}", f.manager, f.container, f.file.display(), f.entry, f.message);
        }
        clean &= report.is_clean();
    }
    if !clean {
        bail!("verification found differences");
    }
    Ok(())
}

fn inspect(path: PathBuf) -> Result<()> {
    let mut magic = [0u8; 4];
    {
        use std::io::Read;
        File::open(&path)
            .with_context(|| path.display().to_string())?
            .read_exact(&mut magic)?;
    }
    let file = File::open(&path)?;
    match &magic {
        b"RTBK" => {
            let r = KeysReader::open(file)?;
            println!("keys file, {} bytes, {} records", r.file_len(), r.len());
            for e in r.directory() {
                println!("  {:<16} offset {:>12} payload {:>10}", e.name, e.offset, e.payload_len);
            }
        }
        b"RTBT" => {
            let r = TreeReader::open(file)?;
            let h = r.header();
            println!(
                "tree file, {} bytes, {} entries, widen={} split={} level={} basket={}",
                r.file_len(),
                h.entry_count,
                h.layout.widen,
                h.layout.split,
                h.layout.level,
                h.layout.basket_size
            );
            for b in r.branches() {
                let packed: u64 = b.baskets.iter().map(|d| d.compressed_len as u64).sum();
                let raw: u64 = b.baskets.iter().map(|d| d.uncompressed_len as u64).sum();
                println!(
                    "  {:<28} {:>5} baskets {:>12} bytes ({} uncompressed)",
                    b.label(&h.classes),
                    b.baskets.len(),
                    packed,
                    raw
                );
            }
        }
        _ => bail!("{} is neither a keys nor a tree file", path.display()),
    }
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    let chain = FileChain::uniform(args.files, args.events_per_file);
    let params = SelectorParams {
        burst: args.burst,
        jump: args.jump,
        seed: args.seed,
    };
    let s = next_indices(&chain, &params, args.cursor, args.count)?;
    for g in &s.entries {
        let (file, local) = chain.locate(*g)?;
        println!("{g}\t{file}\t{local}");
    }
    eprintln!("file switches: {}, next cursor: {}", s.file_switches, s.cursor);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
        Command::Inspect { file } => inspect(file),
        Command::Select(args) => select(args),
    }
}
