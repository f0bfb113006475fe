//! Command implementations behind the `hoisim` binary.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hoisim_core::engine::Scene;
use hoisim_core::export::{compute_stats, render_dataset, DatasetStats, DatasetSummary, Format, RenderPlan, STATS_FILE};
use hoisim_core::render::CameraRig;
use hoisim_core::session::{record_script, GraspScript, Phases, SessionRecording};
use hoisim_core::ErrorKind;
use hoisim_service::{ServiceConfig, ServiceError, DEFAULT_PORT, DEFAULT_TICK_HZ};
use serde_json::json;

pub const DEFAULT_CAMERAS: &str = "sphere:8,1.0,20,60,0";
pub const DEFAULT_FRAMES: u32 = 72;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] hoisim_core::Error),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 0 ok, 2 user error, 3 data error, 4 I/O error.
    pub fn exit_code(&self) -> u8 {
        let kind = match self {
            CliError::Core(e) | CliError::Service(ServiceError::Core(e)) => e.kind(),
            CliError::Service(_) => ErrorKind::Io,
            CliError::Verify(_) => ErrorKind::Data,
            CliError::Usage(_) => ErrorKind::User,
        };
        match kind {
            ErrorKind::User => 2,
            ErrorKind::Data => 3,
            ErrorKind::Io => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "hoisim", version, about = "Hand-object interaction simulator and dataset exporter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place the scene's objects and print their poses as JSON.
    Place(PlaceArgs),
    /// Record a scripted grasp of one object.
    Script(ScriptArgs),
    /// Inspect a session, optionally re-simulating it.
    Replay(ReplayArgs),
    /// Render sessions from a camera rig and write dataset files.
    Render(RenderArgs),
    /// Recompute distribution histograms from a BOP export.
    Stats(StatsArgs),
    /// Run the interactive control service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Scene description JSON.
    #[arg(long)]
    pub scene: PathBuf,
    /// Placement seed; defaults to the scene's own.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PlaceArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScriptArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    /// Target object name; the first catalog object by default.
    #[arg(long)]
    pub object: Option<String>,
    #[arg(long, default_value_t = DEFAULT_FRAMES)]
    pub frames: u32,
    /// Simulation rate; overrides the scene's dt.
    #[arg(long)]
    pub tick_hz: Option<f64>,
    /// Output session file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub session: PathBuf,
    /// Print the snapshot of this frame.
    #[arg(long)]
    pub frame: Option<usize>,
    /// Re-simulate the input log and check it reproduces the file.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Session files, one BOP scene per (session, camera).
    #[arg(required = true)]
    pub sessions: Vec<PathBuf>,
    /// Rig file or `sphere:n,radius,el_min,el_max,seed`.
    #[arg(long, default_value = DEFAULT_CAMERAS)]
    pub cameras: String,
    /// Override every camera's resolution, e.g. `160x120`.
    #[arg(long)]
    pub resolution: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "rgb,depth,coco,bop,hand,stats")]
    pub formats: String,
    /// Worker threads; all logical cores by default.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset root (or a single BOP scene directory).
    pub dataset: PathBuf,
    /// CSV path; `<dataset>/stats.csv` by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, default_value_t = DEFAULT_TICK_HZ)]
    pub tick_hz: f64,
    /// Where save_session writes.
    #[arg(long, default_value = ".")]
    pub session_dir: PathBuf,
}

/// Runs one command; text output goes to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Place(a) => cmd_place(&a, stdout),
        Command::Script(a) => cmd_script(&a, stdout).map(|_| ()),
        Command::Replay(a) => cmd_replay(&a, stdout),
        Command::Render(a) => cmd_render(&a, stdout).map(|_| ()),
        Command::Stats(a) => cmd_stats(&a, stdout).map(|_| ()),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn load_scene(a: &SceneArgs) -> Result<(Scene, u64)> {
    let scene = Scene::load(&a.scene)?;
    let seed = a.seed.unwrap_or(scene.config.seed);
    Ok((scene, seed))
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    hoisim_core::Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<()> {
    match writeln!(stdout, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_err(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

pub fn cmd_place(a: &PlaceArgs, stdout: &mut dyn Write) -> Result<()> {
    let (scene, seed) = load_scene(&a.scene)?;
    let world = scene.place(seed)?;
    let objects: Vec<_> = world
        .objects
        .iter()
        .map(|o| json!({ "id": o.id, "name": o.name, "pose": o.pose }))
        .collect();
    let doc = serde_json::to_string_pretty(&json!({ "seed": seed, "objects": objects })).expect("json");
    match &a.out {
        Some(p) => std::fs::write(p, doc + "\n").map_err(|e| io_err(p, e)),
        None => emit(stdout, &doc),
    }
}

pub fn cmd_script(a: &ScriptArgs, stdout: &mut dyn Write) -> Result<SessionRecording> {
    let (mut scene, seed) = load_scene(&a.scene)?;
    if let Some(hz) = a.tick_hz {
        if !(hz > 0.0 && hz.is_finite()) {
            return Err(CliError::Usage(format!("--tick-hz {hz} must be positive")));
        }
        scene.config.dt = 1.0 / hz;
    }
    let target = match &a.object {
        Some(name) => scene.find(name).ok_or_else(|| hoisim_core::Error::TargetMissing(name.clone()))?,
        None => scene
            .catalog
            .first()
            .ok_or_else(|| CliError::Usage("scene has no objects".into()))?,
    };
    let mut script = GraspScript::new(target.spec.id, seed);
    script.phases = Phases::scaled_to(a.frames)?;
    let rec = record_script(&scene, seed, &script)?;
    rec.save(&a.out)?;
    log::info!("recorded {} frames of {:?}", rec.len(), target.spec.name);
    emit(
        stdout,
        &format!("{}: {} frames, {} events", a.out.display(), rec.len(), rec.events.len()),
    )?;
    Ok(rec)
}

pub fn cmd_replay(a: &ReplayArgs, stdout: &mut dyn Write) -> Result<()> {
    let rec = SessionRecording::load(&a.session)?;
    if a.verify {
        let again = rec.resimulate(&rec.scene()?)?;
        if again != rec {
            let first = (0..rec.len()).find(|&k| again.replay(k).ok() != rec.replay(k).ok());
            return Err(CliError::Verify(match first {
                Some(k) => format!("re-simulation diverges at frame {k}"),
                None => "re-simulated events differ".into(),
            }));
        }
        let text = std::fs::read_to_string(&a.session).map_err(|e| io_err(&a.session, e))?;
        if rec.to_json() != text {
            return Err(CliError::Verify("file does not re-serialize byte-for-byte".into()));
        }
    }
    match a.frame {
        Some(k) => {
            let snap = rec.replay(k)?;
            let objects: Vec<_> = snap.objects.iter().map(|(id, pose)| json!({ "id": id, "pose": pose })).collect();
            let doc = json!({
                "frame": k,
                "wrist": snap.wrist,
                "objects": objects,
            });
            emit(stdout, &serde_json::to_string_pretty(&doc).expect("json"))?;
        }
        None => {
            emit(stdout, &format!("{} frames at dt {}", rec.len(), rec.dt))?;
            for e in &rec.events {
                emit(stdout, &format!("frame {:>4}  {:?}  object {}", e.frame, e.kind, e.object))?;
            }
        }
    }
    if a.verify {
        emit(stdout, "verified")?;
    }
    Ok(())
}

/// `160x120` style resolution.
pub fn parse_resolution(s: &str) -> Result<(u32, u32)> {
    let bad = || CliError::Usage(format!("expected WIDTHxHEIGHT, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h) = (w.trim().parse::<u32>().map_err(|_| bad())?, h.trim().parse::<u32>().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

/// `sphere:...` directive or a rig file path.
pub fn parse_cameras(s: &str) -> Result<CameraRig> {
    if s.starts_with("sphere:") {
        Ok(CameraRig::parse_directive(s)?)
    } else {
        Ok(CameraRig::load(Path::new(s))?)
    }
}

pub fn cmd_render(a: &RenderArgs, stdout: &mut dyn Write) -> Result<DatasetSummary> {
    let mut rig = parse_cameras(&a.cameras)?;
    if let Some(r) = &a.resolution {
        let (w, h) = parse_resolution(r)?;
        rig = rig.with_resolution(w, h);
    }
    let formats = Format::parse_list(&a.formats)?;
    let sessions = a
        .sessions
        .iter()
        .map(|p| SessionRecording::load(p))
        .collect::<hoisim_core::Result<Vec<_>>>()?;
    let plan = RenderPlan {
        sessions,
        rig,
        out: a.out.clone(),
        formats,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let progress = |done: usize, total: usize| {
        let step = (total / 100).max(1);
        if done % step == 0 || done == total {
            eprint!("\rrendered {done}/{total} views");
            if done == total {
                eprintln!();
            }
        }
    };
    let summary = pool.install(|| render_dataset(&plan, &progress))?;
    emit(
        stdout,
        &format!(
            "{} views: {} rgb, {} depth, {} coco images ({} annotations), {} bop scenes, {} hand documents",
            summary.views,
            summary.rgb_images,
            summary.depth_images,
            summary.coco_images,
            summary.coco_annotations,
            summary.bop_scenes,
            summary.hand_documents
        ),
    )?;
    Ok(summary)
}

pub fn cmd_stats(a: &StatsArgs, stdout: &mut dyn Write) -> Result<DatasetStats> {
    let stats = compute_stats(&a.dataset)?;
    let out = a.out.clone().unwrap_or_else(|| a.dataset.join(STATS_FILE));
    stats.write_csv(&out)?;
    emit(stdout, &format!("{}: {} samples", out.display(), stats.samples()))?;
    Ok(stats)
}

pub fn cmd_serve(a: ServeArgs) -> Result<()> {
    let (scene, seed) = load_scene(&a.scene)?;
    let mut cfg = ServiceConfig::new(scene);
    cfg.seed = seed;
    cfg.addr = SocketAddr::new(a.host, a.port);
    cfg.tick_hz = a.tick_hz;
    cfg.session_dir = a.session_dir;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| io_err(Path::new("<runtime>"), e))?;
    rt.block_on(hoisim_service::serve(cfg))?;
    Ok(())
}
