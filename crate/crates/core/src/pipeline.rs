//! Crossing builder: reads a signal event and its pileup events through one
//! persistency manager, digitizes them and writes the digis. Also the
//! cross-manager verification run.

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::containers::ContainerKind;
use crate::error::{Error, Result};
use crate::event::generator::mix;
use crate::event::{digitize_into, generate_event, Digis, Event, Folder, DEFAULT_THRESHOLD};
use crate::selection::{assign_ranks, next_indices, FileChain, SelectorParams};
use crate::store::{FileStats, ManagerKind, StoreOptions, StoreReader, StoreWriter};

/// Minimum-bias folders available per crossing.
pub const MINBIAS_SLOTS: usize = 153;

pub const SIGNAL_FOLDER: &str = "signal";
pub const MINBIAS_FOLDER: &str = "minbias";
pub const DIGIS_FOLDER: &str = "digis";

const TAG_SIGNAL: u64 = 0x51;
const TAG_PILEUP: u64 = 0x9B;
const TAG_CROSSING: u64 = 0xC7;

#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub container: ContainerKind,
    pub manager: ManagerKind,
    pub store: StoreOptions,
    pub burst: u64,
    pub jump: u64,
    pub reduction: u32,
    pub crossings: u64,
    pub pileup_files: usize,
    pub events_per_file: u64,
    /// Pileup events per crossing.
    pub pileup: usize,
    pub seed: u64,
    /// Seed of the rank permutations; defaults to `seed`.
    pub rank_seed: u64,
    /// Generate every pileup file instead of copying the first one.
    pub distinct_pileup_files: bool,
    /// One reader per pileup file instead of one reconnected reader.
    pub manager_per_file: bool,
    /// Keep every crossing's digis in the outcome.
    pub keep_digis: bool,
    pub out_dir: PathBuf,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            container: ContainerKind::SlotArray,
            manager: ManagerKind::Tree,
            store: StoreOptions::default(),
            burst: 3,
            jump: 10,
            reduction: 10,
            crossings: 100,
            pileup_files: 10,
            events_per_file: 100,
            pileup: MINBIAS_SLOTS,
            seed: 1,
            rank_seed: 1,
            distinct_pileup_files: false,
            manager_per_file: false,
            keep_digis: false,
            out_dir: std::env::temp_dir().join("crossbench"),
        }
    }
}

impl JobConfig {
    /// Full-size job: 500 crossings over 100 files of 500 full events.
    pub fn paper_scale() -> Self {
        JobConfig {
            reduction: 1,
            crossings: 500,
            pileup_files: 100,
            events_per_file: 500,
            ..Self::default()
        }
    }

    pub fn signal_seed(&self) -> u64 {
        mix(self.seed, TAG_SIGNAL)
    }

    /// Seed of pileup file `file`; every file shares file 0's seed unless
    /// distinct files were requested.
    pub fn pileup_seed(&self, file: usize) -> u64 {
        let file = if self.distinct_pileup_files { file as u64 } else { 0 };
        mix(mix(self.seed, TAG_PILEUP), file)
    }

    pub fn selector(&self) -> SelectorParams {
        SelectorParams {
            burst: self.burst,
            jump: self.jump,
            seed: self.seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.pileup > MINBIAS_SLOTS {
            return Err(Error::InvalidArgument(format!(
                "pileup {} exceeds the {MINBIAS_SLOTS} minbias folders",
                self.pileup
            )));
        }
        if self.reduction == 0 {
            return Err(Error::InvalidArgument("reduction must be at least 1".into()));
        }
        if self.pileup > 0 && (self.pileup_files == 0 || self.events_per_file == 0) {
            return Err(Error::InvalidArgument("pileup requested without pileup events".into()));
        }
        Ok(())
    }
}

fn extension(kind: ManagerKind) -> &'static str {
    match kind {
        ManagerKind::Keys => "rtbk",
        ManagerKind::Matrix | ManagerKind::Tree => "rtbt",
    }
}

/// Files produced by [`prepare_inputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct Inputs {
    pub signal: PathBuf,
    pub signal_stats: FileStats,
    pub pileups: Vec<PathBuf>,
    /// Stats of every pileup file, in order.
    pub pileup_stats: Vec<FileStats>,
    /// Time spent in manager writes, per written event.
    pub write_s_per_event: f64,
}

fn write_generated(
    config: &JobConfig,
    path: &Path,
    folder: &str,
    seed: u64,
    count: u64,
    write_time: &mut Duration,
) -> Result<FileStats> {
    let mut w = StoreWriter::create::<Event>(config.manager, path, folder, config.store)?;
    for i in 0..count {
        let event = generate_event(seed, i, config.reduction, config.container)?;
        let t = Instant::now();
        w.write(&event)?;
        *write_time += t.elapsed();
    }
    w.finish()
}

/// Writes the signal file (one event per crossing) and the pileup files.
/// Pileup files are byte copies of the first unless distinct files were
/// requested.
pub fn prepare_inputs(config: &JobConfig) -> Result<Inputs> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let ext = extension(config.manager);
    let mut write_time = Duration::ZERO;
    let mut written = 0u64;

    let signal = config.out_dir.join(format!("signal.{ext}"));
    let signal_stats = write_generated(
        config,
        &signal,
        SIGNAL_FOLDER,
        config.signal_seed(),
        config.crossings,
        &mut write_time,
    )?;
    written += config.crossings;

    let mut pileups = Vec::with_capacity(config.pileup_files);
    let mut pileup_stats = Vec::with_capacity(config.pileup_files);
    for i in 0..config.pileup_files {
        let path = config.out_dir.join(format!("minbias_{i}.{ext}"));
        if i == 0 || config.distinct_pileup_files {
            let stats = write_generated(
                config,
                &path,
                MINBIAS_FOLDER,
                config.pileup_seed(i),
                config.events_per_file,
                &mut write_time,
            )?;
            written += config.events_per_file;
            pileup_stats.push(stats);
        } else {
            fs::copy(&pileups[0], &path)?;
            pileup_stats.push(pileup_stats[0]);
        }
        pileups.push(path);
    }
    Ok(Inputs {
        signal,
        signal_stats,
        pileups,
        pileup_stats,
        write_s_per_event: if written == 0 {
            0.0
        } else {
            write_time.as_secs_f64() / written as f64
        },
    })
}

/// The in-memory folders of one crossing.
pub struct FolderRegistry {
    pub signal: Event,
    pub minbias: Vec<Event>,
    pub digis: Digis,
}

impl FolderRegistry {
    pub fn new(kind: ContainerKind) -> Self {
        FolderRegistry {
            signal: Event::new(kind),
            minbias: (0..MINBIAS_SLOTS).map(|_| Event::new(kind)).collect(),
            digis: Digis::new(kind),
        }
    }

    pub fn slot_name(rank: usize) -> String {
        format!("crossing/minbias{rank}")
    }

    pub fn names() -> Vec<String> {
        let mut names = vec!["crossing/signal".to_owned()];
        names.extend((0..MINBIAS_SLOTS).map(Self::slot_name));
        names.push("crossing/digis".to_owned());
        names
    }
}

/// Wall time of each phase of one crossing.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CrossingTimings {
    pub signal_read: Duration,
    pub pileup_read: Duration,
    pub connect: Duration,
    pub digitize: Duration,
    pub write: Duration,
    pub total: Duration,
    pub pileup_events: usize,
    pub file_switches: u64,
}

impl CrossingTimings {
    /// Everything spent getting events into memory.
    pub fn read(&self) -> Duration {
        self.signal_read + self.pileup_read + self.connect
    }
}

enum PileupReaders {
    Shared(Box<StoreReader>),
    PerFile(Vec<StoreReader>),
}

pub struct CrossingBuilder {
    config: JobConfig,
    chain: FileChain,
    signal: StoreReader,
    signal_path: PathBuf,
    pileup: PileupReaders,
    digis_out: StoreWriter,
    registry: FolderRegistry,
    cursor: u64,
}

impl CrossingBuilder {
    pub fn new(config: &JobConfig, inputs: &Inputs, digis_path: &Path) -> Result<Self> {
        config.validate()?;
        let chain = FileChain::new(
            inputs
                .pileups
                .iter()
                .zip(&inputs.pileup_stats)
                .map(|(p, s)| (p.clone(), s.entries)),
        );
        let signal = StoreReader::open(config.manager, &inputs.signal, SIGNAL_FOLDER)?;
        let pileup = if config.manager_per_file {
            PileupReaders::PerFile(
                (0..chain.len())
                    .map(|_| StoreReader::new(config.manager, MINBIAS_FOLDER))
                    .collect(),
            )
        } else {
            PileupReaders::Shared(Box::new(StoreReader::new(config.manager, MINBIAS_FOLDER)))
        };
        let digis_out = StoreWriter::create::<Digis>(config.manager, digis_path, DIGIS_FOLDER, config.store)?;
        Ok(CrossingBuilder {
            config: config.clone(),
            chain,
            signal,
            signal_path: inputs.signal.clone(),
            pileup,
            digis_out,
            registry: FolderRegistry::new(config.container),
            cursor: 0,
        })
    }

    pub fn registry(&self) -> &FolderRegistry {
        &self.registry
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// Counters of the pileup manager(s): (connects, file opens).
    pub fn pileup_connects(&self) -> (u64, u64) {
        match &self.pileup {
            PileupReaders::Shared(r) => {
                let s = r.connect_stats();
                (s.connects, s.file_opens)
            }
            PileupReaders::PerFile(rs) => rs.iter().fold((0, 0), |(c, o), r| {
                let s = r.connect_stats();
                (c + s.connects, o + s.file_opens)
            }),
        }
    }

    /// Builds crossing `n`: signal event `n`, `pileup` selected events in
    /// randomly ranked folders, digitization, digis written as entry `n`.
    pub fn build_crossing(&mut self, n: u64) -> Result<CrossingTimings> {
        let start = Instant::now();
        let mut t = CrossingTimings::default();

        let signal_entries = self.signal.entry_count()?;
        if n >= signal_entries {
            return Err(Error::OutOfRange {
                index: n,
                size: signal_entries,
            });
        }
        let s = Instant::now();
        self.signal.connect(&self.signal_path, "crossing/signal")?;
        self.signal.read_entry(n, &mut self.registry.signal)?;
        t.signal_read = s.elapsed();

        let count = self.config.pileup;
        if count > 0 {
            let selection = next_indices(&self.chain, &self.config.selector(), self.cursor, count)?;
            self.cursor = selection.cursor;
            t.file_switches = selection.file_switches;
            let ranks = assign_ranks(mix(mix(self.config.rank_seed, TAG_CROSSING), n), count);
            let mut slot = String::new();
            for (&g, &rank) in selection.entries.iter().zip(&ranks) {
                let (file, local) = self.chain.locate(g)?;
                let path = self.chain.path(file);
                let reader = match &mut self.pileup {
                    PileupReaders::Shared(r) => r,
                    PileupReaders::PerFile(rs) => &mut rs[file],
                };
                slot.clear();
                let _ = write!(slot, "crossing/minbias{rank}");
                t.connect += reader.connect(path, &slot)?;
                let r = Instant::now();
                reader.read_entry(local, &mut self.registry.minbias[rank])?;
                t.pileup_read += r.elapsed();
            }
            t.pileup_events = count;
        }

        let d = Instant::now();
        let reg = &mut self.registry;
        digitize_into(&reg.signal, reg.minbias[..count].iter(), DEFAULT_THRESHOLD, &mut reg.digis);
        reg.digis.crossing_id = n;
        t.digitize = d.elapsed();

        let w = Instant::now();
        self.digis_out.write(&self.registry.digis)?;
        t.write = w.elapsed();
        t.total = start.elapsed();
        Ok(t)
    }

    /// Closes the digis file.
    pub fn finish(self) -> Result<FileStats> {
        self.digis_out.finish()
    }
}

/// Result of one job.
#[derive(Clone, Debug)]
pub struct JobOutcome {
    pub inputs: Inputs,
    pub crossings: Vec<CrossingTimings>,
    pub digis_stats: FileStats,
    /// Order-sensitive hash of every digi value.
    pub digis_digest: u64,
    pub digis: Vec<Digis>,
    pub pileup_connects: u64,
    pub pileup_file_opens: u64,
}

/// Hash of a folder's content, bit-exact over every value.
pub fn folder_digest<F: Folder>(folder: &F, mut h: u64) -> u64 {
    h = mix(h, folder.id());
    for c in 0..F::schemas().len() {
        let seq = folder.collection(c);
        h = mix(h, seq.len() as u64);
        let mut bytes = Vec::new();
        seq.write_rows(false, &mut bytes);
        for chunk in bytes.chunks(8) {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            h = mix(h, u64::from_le_bytes(w));
        }
    }
    h
}

/// Prepares inputs, builds every crossing and collects timings.
pub fn run_job(config: &JobConfig) -> Result<JobOutcome> {
    let inputs = prepare_inputs(config)?;
    run_prepared(config, &inputs)
}

/// Builds every crossing over already prepared inputs.
pub fn run_prepared(config: &JobConfig, inputs: &Inputs) -> Result<JobOutcome> {
    let digis_path = config.out_dir.join(format!("digis.{}", extension(config.manager)));
    let mut builder = CrossingBuilder::new(config, inputs, &digis_path)?;
    let mut crossings = Vec::with_capacity(config.crossings as usize);
    let mut digest = 0u64;
    let mut digis = Vec::new();
    for n in 0..config.crossings {
        crossings.push(builder.build_crossing(n)?);
        digest = folder_digest(&builder.registry().digis, digest);
        if config.keep_digis {
            digis.push(builder.registry().digis.clone());
        }
    }
    let (pileup_connects, pileup_file_opens) = builder.pileup_connects();
    let digis_stats = builder.finish()?;
    Ok(JobOutcome {
        inputs: inputs.clone(),
        crossings,
        digis_stats,
        digis_digest: digest,
        digis,
        pileup_connects,
        pileup_file_opens,
    })
}

/// Where two folders first differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Difference {
    pub class: String,
    /// `None` when the element counts differ.
    pub element: Option<usize>,
    pub attribute: Option<String>,
}

pub fn first_difference<F: Folder>(a: &F, b: &F) -> Option<Difference> {
    if a.id() != b.id() {
        return Some(Difference {
            class: "id".into(),
            element: None,
            attribute: None,
        });
    }
    for (c, schema) in F::schemas().iter().enumerate() {
        let (x, y) = (a.collection(c), b.collection(c));
        if x.len() != y.len() {
            return Some(Difference {
                class: schema.class_name.into(),
                element: None,
                attribute: None,
            });
        }
        for i in 0..x.len() {
            for (k, spec) in schema.attributes.iter().enumerate() {
                let same = match (x.value_at(i, k), y.value_at(i, k)) {
                    (Ok(u), Ok(v)) => u.same_bits(v),
                    _ => false,
                };
                if !same {
                    return Some(Difference {
                        class: schema.class_name.into(),
                        element: Some(i),
                        attribute: Some(spec.name.into()),
                    });
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub manager: ManagerKind,
    pub container: ContainerKind,
    pub file: PathBuf,
    pub entry: u64,
    pub difference: Difference,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeFailure {
    pub manager: ManagerKind,
    pub container: ContainerKind,
    pub file: PathBuf,
    pub entry: u64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    /// Events compared against the oracle.
    pub compared: u64,
    pub mismatches: Vec<Mismatch>,
    pub failures: Vec<DecodeFailure>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.failures.is_empty()
    }

    pub fn merge(&mut self, other: VerifyReport) {
        self.compared += other.compared;
        self.mismatches.extend(other.mismatches);
        self.failures.extend(other.failures);
    }
}

/// Input files of every manager for one container kind.
pub struct StrategyFiles {
    pub container: ContainerKind,
    pub files: Vec<(ManagerKind, Inputs)>,
}

/// Writes the same events with every manager under `config.out_dir`.
pub fn prepare_strategies(config: &JobConfig, container: ContainerKind) -> Result<StrategyFiles> {
    let mut files = Vec::new();
    for manager in ManagerKind::ALL {
        let cfg = JobConfig {
            manager,
            container,
            out_dir: config.out_dir.join(format!("{manager}-{container}")),
            ..config.clone()
        };
        files.push((manager, prepare_inputs(&cfg)?));
    }
    Ok(StrategyFiles { container, files })
}

/// Reads every entry of every file with every manager and compares each
/// event with the matrix manager's readback of the same entry. The matrix
/// readback is itself checked against `expected` when given.
pub fn verify_files(
    set: &StrategyFiles,
    expected: Option<&dyn Fn(usize, u64) -> Result<Event>>,
) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let oracle = set
        .files
        .iter()
        .find(|(m, _)| *m == ManagerKind::Matrix)
        .map(|(_, i)| i)
        .ok_or_else(|| Error::InvalidArgument("verification needs the matrix files".into()))?;
    let oracle_paths: Vec<&PathBuf> = std::iter::once(&oracle.signal).chain(&oracle.pileups).collect();
    let prefixes: Vec<&str> = std::iter::once(SIGNAL_FOLDER)
        .chain(std::iter::repeat(MINBIAS_FOLDER))
        .take(oracle_paths.len())
        .collect();

    let kind = set.container;
    let mut reference = Event::new(kind);
    let mut candidate = Event::new(kind);
    for (f, path) in oracle_paths.iter().enumerate() {
        let mut oracle_reader = StoreReader::open(ManagerKind::Matrix, path, prefixes[f])?;
        let entries = oracle_reader.entry_count()?;
        let mut readers = Vec::new();
        for (manager, inputs) in &set.files {
            let p = if f == 0 { &inputs.signal } else { &inputs.pileups[f - 1] };
            match StoreReader::open(*manager, p, prefixes[f]) {
                Ok(r) => readers.push((*manager, p.clone(), Some(r))),
                Err(e) => {
                    report.failures.push(DecodeFailure {
                        manager: *manager,
                        container: kind,
                        file: p.clone(),
                        entry: 0,
                        message: e.to_string(),
                    });
                    readers.push((*manager, p.clone(), None));
                }
            }
        }
        for entry in 0..entries {
            if let Err(e) = oracle_reader.read_entry(entry, &mut reference) {
                report.failures.push(DecodeFailure {
                    manager: ManagerKind::Matrix,
                    container: kind,
                    file: (*path).clone(),
                    entry,
                    message: e.to_string(),
                });
                continue;
            }
            if let Some(expect) = expected {
                let e = expect(f, entry)?;
                if let Some(difference) = first_difference(&e, &reference) {
                    report.mismatches.push(Mismatch {
                        manager: ManagerKind::Matrix,
                        container: kind,
                        file: (*path).clone(),
                        entry,
                        difference,
                    });
                }
            }
            for (manager, p, reader) in readers.iter_mut() {
                if *manager == ManagerKind::Matrix {
                    continue;
                }
                let Some(reader) = reader else { continue };
                report.compared += 1;
                match reader.read_entry(entry, &mut candidate) {
                    Err(e) => report.failures.push(DecodeFailure {
                        manager: *manager,
                        container: kind,
                        file: p.clone(),
                        entry,
                        message: e.to_string(),
                    }),
                    Ok(()) => {
                        if let Some(difference) = first_difference(&reference, &candidate) {
                            report.mismatches.push(Mismatch {
                                manager: *manager,
                                container: kind,
                                file: p.clone(),
                                entry,
                                difference,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Writes every strategy's files for each container kind and verifies them
/// against the matrix readback and the generator.
pub fn verify_strategies(config: &JobConfig, containers: &[ContainerKind]) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for &container in containers {
        let set = prepare_strategies(config, container)?;
        let cfg = config.clone();
        let expected = move |file: usize, entry: u64| -> Result<Event> {
            let seed = if file == 0 { cfg.signal_seed() } else { cfg.pileup_seed(file - 1) };
            generate_event(seed, entry, cfg.reduction, container)
        };
        report.merge(verify_files(&set, Some(&expected))?);
    }
    Ok(report)
}
