use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use super::bop::{BopScene, SCENE_GT, SCENE_GT_INFO};
use super::view::ObjectViewStats;
use crate::error::{Error, Result};

/// Fixed-width histogram over `[low, high]`.
///
/// Values outside the range land in the end bins, so totals always equal
/// the number of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub name: String,
    pub low: f64,
    pub high: f64,
    /// Bins are `(a, b]` instead of `[a, b)`.
    pub left_open: bool,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(name: &str, low: f64, high: f64, bins: usize, left_open: bool) -> Histogram {
        assert!(bins > 0 && low < high);
        Histogram {
            name: name.into(),
            low,
            high,
            left_open,
            counts: vec![0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edge(&self, k: usize) -> f64 {
        if k == self.bins() {
            return self.high;
        }
        self.low + (self.high - self.low) * (k as f64 / self.bins() as f64)
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let n = self.bins();
        // first edge strictly above x (or at/above for left-open bins)
        let above = (1..=n).find(|&k| if self.left_open { x <= self.edge(k) } else { x < self.edge(k) });
        above.map_or(n - 1, |k| k - 1)
    }

    pub fn add(&mut self, x: f64) {
        let k = self.bin_of(x);
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// The four distributions, in CSV order.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub distance: Histogram,
    pub azimuth: Histogram,
    pub elevation: Histogram,
    pub visib_fract: Histogram,
}

impl Default for DatasetStats {
    fn default() -> Self {
        DatasetStats {
            distance: Histogram::new("distance", 0.0, 2.0, 50, false),
            azimuth: Histogram::new("azimuth", -PI, PI, 36, true),
            elevation: Histogram::new("elevation", -FRAC_PI_2, FRAC_PI_2, 18, false),
            visib_fract: Histogram::new("visib_fract", 0.0, 1.0, 20, false),
        }
    }
}

impl DatasetStats {
    pub fn add(&mut self, s: &ObjectViewStats) {
        self.distance.add(s.distance);
        self.azimuth.add(s.azimuth);
        self.elevation.add(s.elevation);
        self.visib_fract.add(s.visib_fract);
    }

    pub fn histograms(&self) -> [&Histogram; 4] {
        [&self.distance, &self.azimuth, &self.elevation, &self.visib_fract]
    }

    pub fn samples(&self) -> u64 {
        self.distance.total()
    }

    pub fn add_bop_scene(&mut self, scene: &BopScene) {
        for (id, entries) in &scene.gt {
            for (gt, info) in entries.iter().zip(&scene.info[id]) {
                let p = nalgebra::Vector3::from(gt.cam_t_m2c) / 1000.0;
                self.add(&ObjectViewStats::from_camera_point(&p, info.visib_fract));
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["histogram", "bin_low", "bin_high", "count"]).expect("in-memory");
        for h in self.histograms() {
            for k in 0..h.bins() {
                w.write_record([
                    h.name.clone(),
                    h.edge(k).to_string(),
                    h.edge(k + 1).to_string(),
                    h.counts[k].to_string(),
                ])
                .expect("in-memory");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory")).expect("ascii")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// BOP scene directories of a dataset: `dir/train/*` or `dir` itself.
pub fn scene_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    if dir.join(SCENE_GT).exists() || dir.join(SCENE_GT_INFO).exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let train = dir.join("train");
    let mut dirs = Vec::new();
    if train.is_dir() {
        for e in std::fs::read_dir(&train).map_err(|e| Error::io(&train, e))? {
            let p = e.map_err(|e| Error::io(&train, e))?.path();
            if p.is_dir() {
                dirs.push(p);
            }
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Histograms over every (image, object) pair of an exported dataset.
pub fn compute_stats(dir: &Path) -> Result<DatasetStats> {
    let dirs = scene_dirs(dir)?;
    if dirs.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no {SCENE_GT_INFO} found under {}",
            dir.display()
        )));
    }
    let mut stats = DatasetStats::default();
    for d in dirs {
        let info = d.join(SCENE_GT_INFO);
        if !info.exists() {
            return Err(Error::EmptyDataset(format!("missing {}", info.display())));
        }
        stats.add_bop_scene(&BopScene::read(&d)?);
    }
    if stats.samples() == 0 {
        return Err(Error::EmptyDataset(format!("{SCENE_GT_INFO} files under {} list no objects", dir.display())));
    }
    Ok(stats)
}
