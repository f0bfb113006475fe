//! COCO, BOP and hand annotations plus distribution statistics.

mod bop;
mod coco;
mod dataset;
mod hand;
mod mask;
mod stats;
mod view;

pub use bop::{
    depth_to_u16, read_depth_png, write_depth_png, BopCamera, BopGtEntry, BopGtInfo, BopScene, DEPTH_SCALE,
    SCENE_CAMERA, SCENE_GT, SCENE_GT_INFO,
};
pub use coco::{export_coco, CategoryTable, CocoAnnotation, CocoCategory, CocoDocument, CocoFrame, CocoImage};
pub use dataset::{
    bop_scene_id, default_rig_center, export_bop, image_name, render_dataset, scene_dir, DatasetSummary, Format,
    RenderPlan, COCO_FILE, STATS_FILE,
};
pub use hand::{export_hand, keypoint_names, HandDocument, HandFrame, HandView, HAND_DOC_VERSION};
pub use mask::{mask_bbox, mask_to_bbox_rle, MaskAnnotation, RleMask};
pub use stats::{compute_stats, scene_dirs, DatasetStats, Histogram};
pub use view::{annotate_view, camera_frame_stats, visib_fract, ObjectRecord, ObjectViewStats, ViewRecord};
