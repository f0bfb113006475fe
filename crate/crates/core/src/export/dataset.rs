use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::bop::{write_depth_png, write_json, BopCamera, BopScene};
use super::coco::{export_coco, CategoryTable, CocoFrame};
use super::hand::export_hand;
use super::stats::DatasetStats;
use super::view::{annotate_view, ViewRecord};
use crate::engine::SupportSurface;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::render::{alone_coverage, render_frame, CameraRig, PinholeCamera, RenderScene, HAND_INSTANCE_ID};
use crate::session::SessionRecording;

pub const COCO_FILE: &str = "coco_annotations.json";
pub const STATS_FILE: &str = "stats.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Rgb,
    Depth,
    Coco,
    Bop,
    Hand,
    Stats,
}

impl Format {
    pub const ALL: [Format; 6] = [Format::Rgb, Format::Depth, Format::Coco, Format::Bop, Format::Hand, Format::Stats];

    pub fn name(self) -> &'static str {
        match self {
            Format::Rgb => "rgb",
            Format::Depth => "depth",
            Format::Coco => "coco",
            Format::Bop => "bop",
            Format::Hand => "hand",
            Format::Stats => "stats",
        }
    }

    /// Comma-separated list, e.g. `rgb,depth,coco`.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Format>> {
        let set = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Format::from_str)
            .collect::<Result<BTreeSet<_>>>()?;
        if set.is_empty() {
            return Err(Error::InvalidArgument("at least one output format is required".into()));
        }
        Ok(set)
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        Format::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown format {s:?} (expected rgb, depth, coco, bop, hand or stats)")))
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What to render and where.
#[derive(Debug, Clone)]
pub struct RenderPlan {
    pub sessions: Vec<SessionRecording>,
    pub rig: CameraRig,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
}

/// File and entry counts of a finished export.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    pub views: usize,
    pub rgb_images: usize,
    pub depth_images: usize,
    pub coco_images: usize,
    pub coco_annotations: usize,
    pub bop_scenes: usize,
    pub hand_documents: usize,
    pub stats_samples: u64,
}

/// Look-at point for sphere rigs without a center: above the support centroid.
pub fn default_rig_center(support: &SupportSurface) -> Vec3 {
    let [x, y] = support.centroid();
    Vec3::new(x, y, support.height + 0.1)
}

/// BOP scene id of camera `camera` of session `session`.
pub fn bop_scene_id(session: usize, camera: usize, cameras: usize) -> usize {
    session * cameras + camera
}

pub fn scene_dir(out: &Path, scene_id: usize) -> PathBuf {
    out.join("train").join(format!("{scene_id:06}"))
}

pub fn image_name(frame: usize) -> String {
    format!("{frame:06}.png")
}

/// Builds one BOP scene from the views of a single camera, one per frame.
pub fn export_bop(session: &SessionRecording, cam: &PinholeCamera, views: &[ViewRecord], dir: &Path) -> Result<BopScene> {
    if views.len() != session.len() {
        return Err(Error::IndexMismatch(format!(
            "{} views for a {}-frame session",
            views.len(),
            session.len()
        )));
    }
    let mut scene = BopScene::default();
    for (k, v) in views.iter().enumerate() {
        if v.frame != k || v.objects.len() != session.objects.len() {
            return Err(Error::IndexMismatch(format!(
                "view {k} is frame {} with {} objects, session has {} objects",
                v.frame,
                v.objects.len(),
                session.objects.len()
            )));
        }
        let id = k as u32;
        scene.gt.insert(id, v.objects.iter().map(|o| o.gt.clone()).collect());
        scene.info.insert(id, v.objects.iter().map(|o| o.info.clone()).collect());
        scene.camera.insert(id, BopCamera::new(cam));
    }
    scene.write(dir)?;
    Ok(scene)
}

fn par_map<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Renders every (session, camera, frame) and writes the requested formats.
///
/// `progress` receives (views done, views total).
pub fn render_dataset(plan: &RenderPlan, progress: &(dyn Fn(usize, usize) + Sync)) -> Result<DatasetSummary> {
    if plan.formats.is_empty() {
        return Err(Error::InvalidArgument("at least one output format is required".into()));
    }
    let out = &plan.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let wants = |f: Format| plan.formats.contains(&f);
    let needs_render = [Format::Rgb, Format::Depth, Format::Coco, Format::Bop, Format::Stats]
        .into_iter()
        .any(wants);

    let mut setups = Vec::new();
    for s in &plan.sessions {
        let scene = s.scene()?;
        let cams = plan.rig.cameras(default_rig_center(&s.support))?;
        setups.push((scene, cams));
    }
    let total: usize = plan.sessions.iter().zip(&setups).map(|(s, (_, c))| s.len() * c.len()).sum();
    let done = AtomicUsize::new(0);
    let mut summary = DatasetSummary::default();
    let mut coco_frames_owned: Vec<(String, ViewRecord, Vec<String>)> = Vec::new();
    let mut stats = DatasetStats::default();

    for (si, (session, (scene, cams))) in plan.sessions.iter().zip(&setups).enumerate() {
        if wants(Format::Hand) {
            let doc = export_hand(session, &scene.rig, cams)?;
            let dir = out.join("hand");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_json(&dir.join(format!("{si:06}.json")), &doc)?;
            summary.hand_documents += 1;
        }
        if !needs_render {
            continue;
        }
        for (ci, cam) in cams.iter().enumerate() {
            let dir = scene_dir(out, bop_scene_id(si, ci, cams.len()));
            for sub in ["rgb", "depth"].into_iter().filter(|s| wants(Format::from_str(s).unwrap())) {
                std::fs::create_dir_all(dir.join(sub)).map_err(|e| Error::io(dir.join(sub), e))?;
            }
            let views = par_map((0..session.len()).collect(), |k| -> Result<ViewRecord> {
                let snap = session.replay(k)?;
                let rs = RenderScene::from_snapshot(scene, &snap)?;
                let fb = render_frame(&rs, cam);
                let objects = RenderScene {
                    items: rs.items.iter().filter(|i| i.id != HAND_INSTANCE_ID).cloned().collect(),
                };
                let alone = alone_coverage(&objects, cam);
                if wants(Format::Rgb) {
                    fb.save_rgb_png(&dir.join("rgb").join(image_name(k)))?;
                }
                if wants(Format::Depth) {
                    write_depth_png(&fb, &dir.join("depth").join(image_name(k)))?;
                }
                let record = annotate_view(cam, k, &snap.objects, &fb, &alone)?;
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                progress(n, total);
                Ok(record)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            summary.views += views.len();
            if wants(Format::Rgb) {
                summary.rgb_images += views.len();
            }
            if wants(Format::Depth) {
                summary.depth_images += views.len();
            }
            if wants(Format::Bop) {
                export_bop(session, cam, &views, &dir)?;
                summary.bop_scenes += 1;
            }
            if wants(Format::Stats) {
                for v in &views {
                    for o in &v.objects {
                        stats.add(&o.stats);
                    }
                }
            }
            if wants(Format::Coco) {
                let names: Vec<String> = session.objects.iter().map(|o| o.name.clone()).collect();
                let rel = dir.strip_prefix(out).expect("under out").join("rgb");
                for v in views {
                    let file = rel.join(image_name(v.frame)).to_string_lossy().replace('\\', "/");
                    coco_frames_owned.push((file, v, names.clone()));
                }
            }
        }
    }

    if wants(Format::Coco) {
        let mut categories = CategoryTable::new();
        for s in &plan.sessions {
            for o in &s.objects {
                categories.entry(o.name.clone()).or_insert(o.id);
            }
        }
        let frames: Vec<CocoFrame<'_>> = coco_frames_owned
            .iter()
            .map(|(file, v, names)| CocoFrame {
                file_name: file.clone(),
                width: v.width,
                height: v.height,
                objects: names.iter().map(String::as_str).zip(v.objects.iter().map(|o| &o.mask)).collect(),
            })
            .collect();
        let doc = export_coco(&frames, &categories)?;
        summary.coco_images = doc.images.len();
        summary.coco_annotations = doc.annotations.len();
        write_json(&out.join(COCO_FILE), &doc)?;
    }
    if wants(Format::Stats) {
        if stats.samples() == 0 {
            return Err(Error::EmptyDataset("no (image, object) pairs to summarize".into()));
        }
        stats.write_csv(&out.join(STATS_FILE))?;
        summary.stats_samples = stats.samples();
    }
    Ok(summary)
}
