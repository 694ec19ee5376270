//! Batch entry points behind the `urbantactic` binary.
//!
//! Each command is also a plain function returning a typed report so tests
//! can drive it without spawning a process.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 domain error (unknown
//! class, invalid workflow step), 4 provider failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, Config};
use crate::cooccur::{CooccurError, CooccurrenceMatrix, ExportForm, NormMode, Ranking};
use crate::ingest::{filter_scenes, load_corpus_dir, IngestError, ParseOptions, Scene, VocabError, Vocabulary};
use crate::mesh::provider::mesh_from_spec;
use crate::mesh::SizeTable;
use crate::provider::{ProviderError, ProviderSpec};
use crate::recommend::vlm::vlm_from_spec;
use crate::recommend::{load_rules, RecommendError, SemanticOptions, SuggestionStatus};
use crate::service::{
    Decision, EventKind, FixedClock, JobStatus, Placement, ServiceContext, ServiceError, SessionStore, SystemClock,
};

/// Name looked up in the working directory when `--config` is not given.
pub const DEFAULT_CONFIG_FILE: &str = "urbantactic.toml";

/// Timestamp stamped on every event of a batch run, so repeated runs export
/// byte-identical documents.
pub const RUN_EPOCH: &str = "1970-01-01T00:00:00.000Z";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Input = 2,
    Domain = 3,
    Provider = 4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ExitKind,
    pub stage: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, stage: &'static str, message: impl Into<String>) -> Self {
        CliError { kind, stage, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

fn input(stage: &'static str) -> impl Fn(String) -> CliError {
    move |m| CliError::new(ExitKind::Input, stage, m)
}

fn ingest_err(e: IngestError) -> CliError {
    CliError::new(ExitKind::Input, "ingest", e.to_string())
}

fn vocab_err(e: VocabError) -> CliError {
    CliError::new(ExitKind::Input, "vocabulary", e.to_string())
}

fn cooccur_err(e: CooccurError) -> CliError {
    let kind = match e {
        CooccurError::UnknownLabel(_) | CooccurError::InvalidK | CooccurError::VocabMismatch => ExitKind::Domain,
        CooccurError::Snapshot(_) | CooccurError::Table(_) => ExitKind::Input,
    };
    CliError::new(kind, "cooccur", e.to_string())
}

fn provider_setup_err(e: ProviderError) -> CliError {
    CliError::new(ExitKind::Input, "providers", e.to_string())
}

fn service_err(stage: &'static str) -> impl Fn(ServiceError) -> CliError {
    move |e| {
        use RecommendError as R;
        let kind = match &e {
            ServiceError::Recommend(R::Provider(_) | R::MalformedResponse(_) | R::TooFewCandidates { .. }) => {
                ExitKind::Provider
            }
            ServiceError::Recommend(R::ImageDecode(_) | R::Rules(_))
            | ServiceError::InvalidDocument(_)
            | ServiceError::BadRequest(_) => ExitKind::Input,
            _ => ExitKind::Domain,
        };
        CliError::new(kind, stage, e.to_string())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new(ExitKind::Input, "output", format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::new(ExitKind::Input, "output", format!("{}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "urbantactic", version, about = "Co-occurrence driven urban intervention recommendations")]
pub struct Cli {
    /// Configuration file (default: urbantactic.toml in the working directory, if present).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory that relative paths in the configuration resolve against.
    #[arg(long, global = true, default_value = ".")]
    pub workdir: PathBuf,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Vocabulary file (overrides the configuration).
    #[arg(long, global = true)]
    pub vocab: Option<PathBuf>,
    /// Minimum number of confident person detections for a scene to be kept.
    #[arg(long, global = true)]
    pub min_people: Option<u32>,
    /// Person detections count only above this confidence.
    #[arg(long, global = true)]
    pub person_conf: Option<f64>,
    /// Comma-separated scene categories to keep; `*` keeps all.
    #[arg(long, global = true, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest the corpus, filter it, and write the matrix snapshot and counts CSV.
    Build(BuildArgs),
    /// Print the top-k complements of an anchor class.
    Query(QueryArgs),
    /// Run one scene through the whole workflow non-interactively.
    Run(RunArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Print a matrix snapshot as CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct BuildArgs {
    /// Corpus directory (overrides the configuration).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Snapshot output path (overrides the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Counts CSV path (default: the snapshot path with a .csv extension).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub anchor: String,
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = NormMode::Conditional)]
    pub mode: NormMode,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Snapshot to read (overrides the configuration).
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Also rank classes the configuration excludes (such as person).
    #[arg(long)]
    pub all_classes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scene: String,
    #[arg(long)]
    pub anchor: String,
    /// Co-occurrence object; must be one of the offered complements unless --override.
    #[arg(long)]
    pub pair: String,
    #[arg(long = "override")]
    pub override_: bool,
    /// Mock fixtures directory holding vlm/ and meshes/ (overrides the providers).
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// JSON list of decision steps; every candidate is accepted when absent.
    #[arg(long)]
    pub decisions: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long, default_value = "counts")]
    pub form: ExportForm,
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

/// One step of a scripted decision file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum DecisionStep {
    Accept {
        rank: u32,
    },
    Reject {
        rank: u32,
    },
    /// Ask the provider again; decided candidates are kept.
    Reprompt,
    /// Accept every candidate still proposed.
    AcceptAll,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub scenes_in: usize,
    /// Scenes that passed the activity filter.
    pub scenes_filtered: usize,
    pub detections_dropped: usize,
    pub snapshot: PathBuf,
    pub counts_csv: PathBuf,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenes_in: usize,
    /// Scenes that passed the activity filter.
    pub scenes_filtered: usize,
    pub anchors_queried: usize,
    pub candidates_proposed: usize,
    pub candidates_filtered: usize,
    pub candidates_accepted: usize,
    /// VLM and mesh retries combined.
    pub provider_retries: u32,
    pub session_id: String,
    pub assets: Vec<String>,
    pub export: PathBuf,
    pub elapsed_ms: u64,
}

/// Loaded configuration plus the directory it is relative to.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: Config,
    pub workdir: PathBuf,
}

impl Workspace {
    pub fn new(config: Config, workdir: impl Into<PathBuf>) -> Self {
        Workspace { config, workdir: workdir.into() }
    }

    /// Use `config` if given, else `urbantactic.toml` in `workdir` if present,
    /// else the defaults.
    pub fn open(config: Option<&Path>, workdir: &Path) -> Result<Self, CliError> {
        let cfg = match config {
            Some(p) => Config::load(p).map_err(input("config"))?,
            None => {
                let p = workdir.join(DEFAULT_CONFIG_FILE);
                if p.is_file() {
                    Config::load(&p).map_err(input("config"))?
                } else {
                    Config::default()
                }
            }
        };
        Ok(Workspace::new(cfg, workdir))
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        resolve(&self.workdir, p)
    }

    pub fn vocab(&self) -> Result<Arc<Vocabulary>, CliError> {
        Ok(Arc::new(match &self.config.vocab {
            None => Vocabulary::default_urban(),
            Some(p) => {
                let path = self.path(p);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::new(ExitKind::Input, "vocabulary", format!("{}: {e}", path.display())))?;
                Vocabulary::from_json(&text).map_err(vocab_err)?
            }
        }))
    }

    /// Load and filter the corpus. Returns (all scene count, eligible scenes, dropped detections).
    pub fn corpus(&self, dir: &Path, vocab: &Vocabulary) -> Result<(usize, Vec<Scene>, usize), CliError> {
        let corpus = load_corpus_dir(dir, vocab, ParseOptions::default()).map_err(ingest_err)?;
        let kept = filter_scenes(&corpus.scenes, &self.config.filter);
        log::info!("{} scenes loaded, {} pass the activity filter", corpus.scenes.len(), kept.len());
        Ok((corpus.scenes.len(), kept, corpus.dropped))
    }

    pub fn load_snapshot(&self, path: &Path, vocab: Option<&Vocabulary>) -> Result<CooccurrenceMatrix, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(ExitKind::Input, "snapshot", format!("{}: {e}", path.display())))?;
        CooccurrenceMatrix::from_snapshot_json(&text, vocab).map_err(cooccur_err)
    }

    /// The snapshot from the configuration when it exists, otherwise a matrix
    /// built in memory from `scenes`.
    fn matrix(&self, vocab: &Arc<Vocabulary>, scenes: &[Scene]) -> Result<CooccurrenceMatrix, CliError> {
        let snap = self.path(&self.config.matrix);
        if snap.is_file() {
            self.load_snapshot(&snap, Some(vocab))
        } else {
            log::info!("no snapshot at {}; building from the corpus", snap.display());
            CooccurrenceMatrix::build(scenes, Arc::clone(vocab)).map_err(cooccur_err)
        }
    }

    /// Everything the session store needs, with assets written under `assets_dir`.
    pub fn service_context(
        &self,
        fixtures: Option<&Path>,
        assets_dir: PathBuf,
    ) -> Result<(usize, ServiceContext), CliError> {
        let cfg = &self.config;
        let vocab = self.vocab()?;
        let corpus_dir = self.path(&cfg.corpus);
        let (scenes_in, scenes, _) = self.corpus(&corpus_dir, &vocab)?;
        let matrix = Arc::new(self.matrix(&vocab, &scenes)?);
        let (vlm_spec, mesh_spec) = match fixtures {
            Some(dir) => {
                let dir = self.path(dir);
                (ProviderSpec::Mock(dir.join("vlm")), ProviderSpec::Mock(dir.join("meshes")))
            }
            None => (
                ProviderSpec::parse(&cfg.providers.vlm).map_err(provider_setup_err)?.rooted(&self.workdir),
                ProviderSpec::parse(&cfg.providers.mesh).map_err(provider_setup_err)?.rooted(&self.workdir),
            ),
        };
        let vlm = vlm_from_spec(&vlm_spec, &cfg.providers.vlm_api_key_env).map_err(provider_setup_err)?;
        let mesh = mesh_from_spec(&mesh_spec, &cfg.providers.mesh_api_key_env).map_err(provider_setup_err)?;
        let mut ctx = ServiceContext::new(scenes, corpus_dir, matrix, vlm, mesh, assets_dir);
        if let Some(p) = &cfg.recommend.rules {
            ctx.rules =
                load_rules(&self.path(p)).map_err(|e| CliError::new(ExitKind::Input, "rules", e.to_string()))?;
        }
        ctx.sizes = SizeTable::default();
        ctx.semantic = SemanticOptions { max_retries: cfg.recommend.max_retries };
        ctx.lod_triangles = cfg.mesh.lod_triangles;
        ctx.option_exclude = cfg.recommend.exclude.clone();
        Ok((scenes_in, ctx))
    }
}

pub fn cmd_build(ws: &Workspace, args: &BuildArgs) -> Result<BuildReport, CliError> {
    let started = Instant::now();
    let vocab = ws.vocab()?;
    let corpus_dir = ws.path(args.corpus.as_deref().unwrap_or(&ws.config.corpus));
    let (scenes_in, scenes, dropped) = ws.corpus(&corpus_dir, &vocab)?;
    let matrix = CooccurrenceMatrix::build(&scenes, vocab).map_err(cooccur_err)?;
    let snapshot = ws.path(args.out.as_deref().unwrap_or(&ws.config.matrix));
    let counts_csv = match &args.csv {
        Some(p) => ws.path(p),
        None => snapshot.with_extension("csv"),
    };
    write_file(&snapshot, &matrix.to_snapshot_json())?;
    write_file(&counts_csv, &matrix.export_csv(ExportForm::Counts))?;
    Ok(BuildReport {
        scenes_in,
        scenes_filtered: scenes.len(),
        detections_dropped: dropped,
        snapshot,
        counts_csv,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

pub fn cmd_query(ws: &Workspace, args: &QueryArgs) -> Result<Ranking, CliError> {
    let path = ws.path(args.snapshot.as_deref().unwrap_or(&ws.config.matrix));
    let matrix = ws.load_snapshot(&path, None)?;
    let anchor = matrix.vocab().canonicalize(&args.anchor).unwrap_or(&args.anchor).to_string();
    let exclude: Vec<&str> =
        if args.all_classes { Vec::new() } else { ws.config.recommend.exclude.iter().map(String::as_str).collect() };
    matrix.top_k(&anchor, args.k, args.mode, &exclude).map_err(cooccur_err)
}

pub fn format_ranking(r: &Ranking, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(r).expect("ranking serializes") + "\n",
        OutputFormat::Csv => {
            let mut out = String::from("rank,class,score\n");
            for (i, e) in r.entries.iter().enumerate() {
                let class = if e.class.contains([',', '"']) {
                    format!("\"{}\"", e.class.replace('"', "\"\""))
                } else {
                    e.class.clone()
                };
                out.push_str(&format!("{},{},{}\n", i + 1, class, e.score));
            }
            out
        }
        OutputFormat::Table => {
            let width = r.entries.iter().map(|e| e.class.len()).max().unwrap_or(0).max(5);
            let mut out = format!("{:<4}  {:<width$}  score\n", "rank", "class");
            for (i, e) in r.entries.iter().enumerate() {
                out.push_str(&format!("{:<4}  {:<width$}  {:.4}\n", i + 1, e.class, e.score));
            }
            out
        }
    }
}

pub fn load_decisions(path: &Path) -> Result<Vec<DecisionStep>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(ExitKind::Input, "decisions", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::new(ExitKind::Input, "decisions", format!("{}: {e}", path.display())))
}

/// Evenly spaced spots across the lower part of the image plane.
fn auto_placement(asset_id: &str, i: usize, n: usize) -> Placement {
    Placement {
        asset_id: asset_id.to_string(),
        position: [(i + 1) as f64 / (n + 1) as f64, 0.8],
        rotation_y: 0.0,
        scale_override: None,
    }
}

pub fn cmd_run(ws: &Workspace, args: &RunArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let out = ws.path(args.out.as_deref().unwrap_or(&ws.config.out));
    let (scenes_in, ctx) = ws.service_context(args.fixtures.as_deref(), out.join("assets"))?;
    let scenes_filtered = ctx.scenes.len();
    let steps = match &args.decisions {
        Some(p) => load_decisions(&ws.path(p))?,
        None => vec![DecisionStep::AcceptAll],
    };
    let store = SessionStore::new(ctx, Arc::new(FixedClock(RUN_EPOCH.into())), ws.config.service.workers);

    let s = store.create_session(&args.scene).map_err(service_err("session"))?;
    let id = s.session_id;
    store.set_anchor(&id, &args.anchor).map_err(service_err("anchor"))?;
    store.choose_pair(&id, &args.pair, args.override_).map_err(service_err("pair"))?;
    store.fetch_candidates(&id).map_err(service_err("candidates"))?;

    for step in &steps {
        match *step {
            DecisionStep::Accept { rank } => {
                store.decide(&id, rank, Decision::Accept).map_err(service_err("decisions"))?;
            }
            DecisionStep::Reject { rank } => {
                store.decide(&id, rank, Decision::Reject).map_err(service_err("decisions"))?;
            }
            DecisionStep::Reprompt => {
                store.fetch_candidates(&id).map_err(service_err("candidates"))?;
            }
            DecisionStep::AcceptAll => {
                let open: Vec<u32> = store
                    .get(&id)
                    .map_err(service_err("decisions"))?
                    .semantic_candidates
                    .iter()
                    .filter(|c| c.is_proposed())
                    .map(|c| c.rank)
                    .collect();
                for rank in open {
                    store.decide(&id, rank, Decision::Accept).map_err(service_err("decisions"))?;
                }
            }
        }
    }
    store.wait_idle();

    let session = store.get(&id).map_err(service_err("session"))?;
    let records = store.asset_records(&session);
    let ready: Vec<&str> =
        records.iter().filter(|r| r.status == JobStatus::Ready).map(|r| r.asset_id.as_str()).collect();
    for (i, asset_id) in ready.iter().enumerate() {
        store.place_asset(&id, auto_placement(asset_id, i, ready.len())).map_err(service_err("placement"))?;
    }
    let session = store.complete(&id).map_err(service_err("complete"))?;
    let doc = store.export(&id).map_err(service_err("export"))?;
    let export = out.join("session.json");
    write_file(&export, &doc.to_json())?;

    let vlm_retries: u32 = session
        .decision_log
        .iter()
        .map(|e| match &e.event {
            EventKind::ReceiveCandidates { retries, .. } | EventKind::Reprompt { retries, .. } => *retries,
            _ => 0,
        })
        .sum();
    let mesh_retries: u32 = records.iter().filter_map(|r| r.meta.as_ref()).map(|m| m.retries).sum();
    let count = |st: SuggestionStatus| session.semantic_candidates.iter().filter(|c| c.status == st).count();
    let report = RunReport {
        scenes_in,
        scenes_filtered,
        anchors_queried: 1,
        candidates_proposed: session.semantic_candidates.len(),
        candidates_filtered: count(SuggestionStatus::Filtered),
        candidates_accepted: count(SuggestionStatus::Accepted),
        provider_retries: vlm_retries + mesh_retries,
        session_id: id,
        assets: ready.iter().map(|s| s.to_string()).collect(),
        export,
        elapsed_ms: started.elapsed().as_millis() as u64,
    };
    write_file(&out.join("report.json"), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;

    if let Some(failed) = records.iter().find(|r| r.status == JobStatus::Failed) {
        return Err(CliError::new(
            ExitKind::Provider,
            "mesh",
            format!(
                "asset {} ({}): {}",
                failed.asset_id,
                failed.object_name,
                failed.error.as_deref().unwrap_or("failed")
            ),
        ));
    }
    Ok(report)
}

pub fn cmd_export(ws: &Workspace, args: &ExportArgs) -> Result<String, CliError> {
    let path = ws.path(args.snapshot.as_deref().unwrap_or(&ws.config.matrix));
    Ok(ws.load_snapshot(&path, None)?.export_csv(args.form))
}

pub fn cmd_serve(ws: &Workspace, args: &ServeArgs) -> Result<(), CliError> {
    let bind = args.bind.as_deref().unwrap_or(&ws.config.service.bind);
    let addr: std::net::SocketAddr =
        bind.parse().map_err(|e| CliError::new(ExitKind::Input, "config", format!("bind address {bind:?}: {e}")))?;
    let assets = ws.path(&ws.config.out).join("assets");
    let (_, ctx) = ws.service_context(args.fixtures.as_deref(), assets)?;
    let workers = args.workers.unwrap_or(ws.config.service.workers);
    let store = Arc::new(SessionStore::new(ctx, Arc::new(SystemClock), workers));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new(ExitKind::Input, "serve", e.to_string()))?;
    rt.block_on(crate::service::api::serve(store, addr))
        .map_err(|e| CliError::new(ExitKind::Input, "serve", format!("{addr}: {e}")))
}

fn json_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn apply_overrides(cfg: &mut Config, cli: &Cli) -> Result<(), CliError> {
    if let Some(v) = &cli.vocab {
        cfg.vocab = Some(v.clone());
    }
    let f = &mut cfg.filter;
    if let Some(n) = cli.min_people {
        f.min_people = n;
    }
    if let Some(t) = cli.person_conf {
        f.person_confidence_threshold = t;
    }
    if let Some(c) = &cli.categories {
        f.allowed_categories = c.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    f.validate().map_err(|m| CliError::new(ExitKind::Input, "config", m))
}

/// Execute a parsed command line, writing results to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut ws = Workspace::open(cli.config.as_deref(), &cli.workdir)?;
    apply_overrides(&mut ws.config, cli)?;
    let text = match &cli.command {
        Command::Build(a) => json_line(&cmd_build(&ws, a)?),
        Command::Query(a) => format_ranking(&cmd_query(&ws, a)?, a.format),
        Command::Run(a) => json_line(&cmd_run(&ws, a)?),
        Command::Export(a) => cmd_export(&ws, a)?,
        Command::Serve(a) => {
            cmd_serve(&ws, a)?;
            String::new()
        }
    };
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::new(ExitKind::Input, "output", e.to_string()))
}

/// Parse `args`, run, and return the process exit code. Errors go to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return ExitKind::Input as i32;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooccur::RankEntry;

    #[test]
    fn decision_steps_parse() {
        let steps: Vec<DecisionStep> = serde_json::from_str(
            r#"[{"action":"reject","rank":1},{"action":"reprompt"},{"action":"accept","rank":2},{"action":"accept_all"}]"#,
        )
        .unwrap();
        assert_eq!(
            steps,
            vec![
                DecisionStep::Reject { rank: 1 },
                DecisionStep::Reprompt,
                DecisionStep::Accept { rank: 2 },
                DecisionStep::AcceptAll
            ]
        );
    }

    #[test]
    fn ranking_formats() {
        let r = Ranking {
            anchor: "bench".into(),
            mode: NormMode::Conditional,
            entries: vec![
                RankEntry { class: "tree".into(), score: 0.5 },
                RankEntry { class: "trash can".into(), score: 0.25 },
            ],
        };
        assert_eq!(format_ranking(&r, OutputFormat::Csv), "rank,class,score\n1,tree,0.5\n2,trash can,0.25\n");
        let table = format_ranking(&r, OutputFormat::Table);
        assert!(table.starts_with("rank  class      score\n"), "{table}");
        assert!(table.contains("2     trash can  0.2500\n"), "{table}");
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with(["urbantactic", "query"], &mut o, &mut e), 2);
        assert_eq!(main_with(["urbantactic", "--help"], &mut o, &mut e), 0);
    }
}
