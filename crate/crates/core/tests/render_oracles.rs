use std::path::Path;

use hoisim_core::engine::Scene;
use hoisim_core::geometry::{MeshAsset, Transform, TriMesh, Vec3};
use hoisim_core::render::*;
use hoisim_core::session::{record_script, GraspScript};
use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

fn intrinsics(w: u32, h: u32, f: f64, cx: f64, cy: f64) -> Intrinsics {
    Intrinsics { width: w, height: h, fx: f, fy: f, cx, cy }
}

fn sphere_scene(radius: f64, center: Vec3) -> RenderScene {
    let mut s = RenderScene::new();
    let mesh = MeshAsset::new(TriMesh::uv_sphere(radius, 128, 64));
    s.push(RenderItem::new(1, [0.8, 0.2, 0.2], mesh, Transform::from_translation(center.x, center.y, center.z)));
    s
}

#[test]
fn sphere_rig_geometry() {
    let c = Vec3::new(0.1, -0.2, 0.3);
    let cams = sample_cameras_sphere(8, c, 1.2, [10.0, 60.0], 4, Intrinsics::default()).unwrap();
    assert_eq!(cams.len(), 8);
    for cam in &cams {
        assert!(((cam.optical_center() - c).norm() - 1.2).abs() < 1e-9);
        let to_center = (c - cam.optical_center()).normalize();
        assert!((to_center.dot(&cam.optical_axis()) - 1.0).abs() < 1e-9);
        let el = ((cam.optical_center() - c).z / 1.2).asin().to_degrees();
        assert!((10.0 - 1e-9..=60.0 + 1e-9).contains(&el));
        // image "down" points downward in the world
        assert!((cam.pose.rotation * Vec3::y()).z <= 1e-12);
    }
    assert_eq!(cams, sample_cameras_sphere(8, c, 1.2, [10.0, 60.0], 4, Intrinsics::default()).unwrap());

    let one = sample_cameras_sphere(1, Vec3::zeros(), 2.0, [30.0, 30.0], 0, Intrinsics::default()).unwrap();
    let p = one[0].optical_center();
    assert!(((p.z / 2.0).asin().to_degrees() - 30.0).abs() < 1e-12);

    let many = sample_cameras_sphere(500, Vec3::zeros(), 1.0, [-90.0, 90.0], 1, Intrinsics::default()).unwrap();
    assert_eq!(many.len(), 500);
    for cam in &many {
        assert!((cam.optical_axis().dot(&(-cam.optical_center()).normalize()) - 1.0).abs() < 1e-9);
    }
    assert!(sample_cameras_sphere(0, Vec3::zeros(), 1.0, [0.0, 0.0], 0, Intrinsics::default()).is_err());
}

#[test]
fn projection_examples() {
    let k = intrinsics(640, 480, 600.0, 320.0, 240.0);
    let cam = PinholeCamera::new(0, k, Transform::identity()).unwrap();
    assert_eq!(cam.project(&Vec3::new(0.0, 0.0, 1.0)), Some([320.0, 240.0]));
    assert_eq!(cam.project(&Vec3::new(0.0, 0.0, -1.0)), None);
    assert_eq!(cam.project(&Vec3::new(5.0, 0.0, 1.0)), None);
    assert!(PinholeCamera::new(0, intrinsics(64, 64, 10.0, 64.0, 32.0), Transform::identity()).is_err());
    assert!(PinholeCamera::new(0, intrinsics(64, 64, -1.0, 32.0, 32.0), Transform::identity()).is_err());
}

proptest! {
    #[test]
    fn projection_matches_k_matrix(
        q in prop::array::uniform4(-1.0f64..1.0), t in prop::array::uniform3(-2.0f64..2.0),
        p in prop::array::uniform3(-3.0f64..3.0), f in 100.0f64..900.0,
    ) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let pose = Transform::from_wxyz(q, t);
        let cam = PinholeCamera::new(0, intrinsics(640, 480, f, 311.0, 247.5), pose).unwrap();
        let p = Vec3::from(p);
        // 4x4 extrinsic inverse then 3x3 K
        let m: Matrix4<f64> = pose.rotation.to_rotation_matrix().to_homogeneous()
            .append_translation(&pose.translation);
        let pc = m.try_inverse().unwrap() * Vector4::new(p.x, p.y, p.z, 1.0);
        let uvw = cam.k_matrix() * Vec3::new(pc.x, pc.y, pc.z);
        match cam.project(&p) {
            Some([u, v]) => {
                prop_assert!(pc.z > 0.0);
                prop_assert!((u - uvw.x / uvw.z).abs() < 1e-6);
                prop_assert!((v - uvw.y / uvw.z).abs() < 1e-6);
            }
            None => {
                let (u, v) = (uvw.x / uvw.z, uvw.y / uvw.z);
                prop_assert!(pc.z <= 0.0 || !(0.0..640.0).contains(&u) || !(0.0..480.0).contains(&v));
            }
        }
    }
}

#[test]
fn analytic_sphere_center_depth() {
    // principal point on the center of pixel (32, 32)
    let cam = PinholeCamera::new(0, intrinsics(64, 64, 64.0, 32.5, 32.5), Transform::identity()).unwrap();
    let s = sphere_scene(0.5, Vec3::new(0.0, 0.0, 1.0));
    let fb = render_frame(&s, &cam);
    let d = fb.depth[fb.index(32, 32)];
    assert!((d - 0.5).abs() < 1e-6, "depth {d}");
    assert_eq!(fb.instance[fb.index(32, 32)], 1);
    assert_eq!(fb.instance[0], 0);
}

#[test]
fn alone_count_matches_disc_area() {
    let (r, dist, f) = (0.2, 1.0, 100.0);
    let cam = PinholeCamera::new(0, intrinsics(64, 64, f, 32.0, 32.0), Transform::identity()).unwrap();
    let s = sphere_scene(r, Vec3::new(0.0, 0.0, dist));
    let rpx = f * r / (dist * dist - r * r).sqrt();
    let disc = std::f64::consts::PI * rpx * rpx;
    let n = render_object_alone(&s, &cam, 1).unwrap() as f64;
    assert!((n - disc).abs() <= 0.02 * disc, "{n} vs {disc}");

    let away = Transform::from_translation(0.0, 0.0, 0.0).compose(&Transform::rot_y(std::f64::consts::PI));
    let behind = PinholeCamera::new(0, cam.intrinsics(), away).unwrap();
    assert_eq!(render_object_alone(&s, &behind, 1).unwrap(), 0);
}

fn random_scene(seed: u64) -> (RenderScene, PinholeCamera) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = RenderScene::new();
    for id in 1..=4u32 {
        let mesh = match id % 3 {
            0 => TriMesh::cuboid(Vec3::new(0.05, 0.08, 0.04)),
            1 => TriMesh::icosphere(0.06, 2),
            _ => TriMesh::cylinder(0.04, 0.12, 24),
        };
        let pose = Transform::from_axis_angle(
            Vec3::new(rng.random(), rng.random(), rng.random::<f64>() + 0.1),
            rng.random_range(0.0..6.0),
        )
        .with_translation(Vec3::new(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15), rng.random_range(0.0..0.15)));
        s.push(RenderItem::new(id, [0.5, 0.6, 0.7], MeshAsset::new(mesh), pose));
    }
    let cams = sample_cameras_sphere(1, Vec3::zeros(), 0.8, [10.0, 70.0], seed, intrinsics(80, 60, 90.0, 40.0, 30.0)).unwrap();
    (s, cams[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn buffers_are_consistent(seed in 0u64..10_000) {
        let (s, cam) = random_scene(seed);
        let fb = render_frame(&s, &cam);
        for i in 0..fb.depth.len() {
            prop_assert_eq!(fb.depth[i] > 0.0, fb.instance[i] != 0);
            prop_assert!(fb.depth[i].is_finite());
            if fb.instance[i] == 0 {
                prop_assert_eq!(&fb.rgb[3 * i..3 * i + 3], &[0u8, 0, 0]);
            }
        }
        let alone = alone_pixel_counts(&s, &cam);
        for item in &s.items {
            prop_assert!(fb.pixel_count(item.id) <= alone[&item.id]);
            prop_assert_eq!(render_object_alone(&s, &cam, item.id).unwrap(), alone[&item.id]);
        }
        prop_assert_eq!(render_frame(&s, &cam), fb);
    }
}

#[test]
fn views_agree_on_surface_points() {
    let center = Vec3::new(0.02, -0.01, 0.05);
    let r = 0.1;
    let s = sphere_scene(r, center);
    let k = intrinsics(120, 90, 110.0, 60.0, 45.0);
    let cams = sample_cameras_sphere(6, Vec3::zeros(), 0.6, [20.0, 40.0], 3, k).unwrap();
    let (a, b) = (cams[0], cams[1]);
    let fa = render_frame(&s, &a);
    let fb = render_frame(&s, &b);
    let mut checked = 0;
    for y in 0..a.height {
        for x in 0..a.width {
            let da = fa.depth[fa.index(x, y)];
            if da == 0.0 {
                continue;
            }
            let p = a.back_project(x, y, da);
            let Some([u, v]) = b.project(&p) else { continue };
            let (ub, vb) = (u.floor() as u32, v.floor() as u32);
            if ub == 0 || vb == 0 || ub + 1 >= b.width || vb + 1 >= b.height {
                continue;
            }
            let n = (p - center).normalize();
            let to_b = (b.optical_center() - p).normalize();
            // visible from b and not grazing
            if n.dot(&to_b) < 0.5 {
                continue;
            }
            let db = fb.depth[fb.index(ub, vb)];
            assert_eq!(fb.instance[fb.index(ub, vb)], 1);
            let q = b.back_project(ub, vb, db);
            let footprint = db / b.fx;
            assert!((q - p).norm() <= 2.0 * footprint, "{} > {}", (q - p).norm(), 2.0 * footprint);
            checked += 1;
        }
    }
    assert!(checked > 200);
}

#[test]
fn camera_count_is_unbounded() {
    let (s, _) = random_scene(5);
    let cams = sample_cameras_sphere(12, Vec3::zeros(), 0.8, [15.0, 60.0], 2, intrinsics(40, 30, 45.0, 20.0, 15.0)).unwrap();
    let all: Vec<FrameBuffers> = cams.iter().map(|c| render_frame(&s, c)).collect();
    assert_eq!(all.len(), 12);
    for (c, fb) in cams.iter().zip(&all) {
        assert_eq!(&render_frame(&s, c), fb);
    }
}

#[test]
fn camera_rig_documents() {
    let list = r#"[{"id": 3, "width": 160, "height": 120, "fx": 150, "fy": 150, "cx": 80, "cy": 60,
        "pose": {"rotation": [1, 0, 0, 0], "translation": [0, 0, -1]}}]"#;
    let rig = CameraRig::from_json(list).unwrap();
    let cams = rig.cameras(Vec3::zeros()).unwrap();
    assert_eq!(cams.len(), 1);
    assert_eq!(cams[0].id, 3);
    assert_eq!(cams[0].project(&Vec3::zeros()), Some([80.0, 60.0]));

    let sphere = r#"{"n": 8, "center": [0, 0, 0.1], "radius": 1.0, "elevation_range": [20, 50], "seed": 1,
        "intrinsics": {"width": 160, "height": 120, "fx": 150, "fy": 150, "cx": 80, "cy": 60}}"#;
    let cams = CameraRig::from_json(sphere).unwrap().cameras(Vec3::zeros()).unwrap();
    assert_eq!(cams.len(), 8);
    assert!(cams.iter().all(|c| ((c.optical_center() - Vec3::new(0.0, 0.0, 0.1)).norm() - 1.0).abs() < 1e-9));

    let d = CameraRig::parse_directive("sphere:8,0.9,15,45,3").unwrap().with_resolution(160, 120);
    let cams = d.cameras(Vec3::new(0.0, 0.0, 0.1)).unwrap();
    assert_eq!(cams.len(), 8);
    assert_eq!((cams[0].width, cams[0].height, cams[0].fx, cams[0].cx), (160, 120, 150.0, 80.0));
    assert!(CameraRig::parse_directive("sphere:8,0.9").is_err());
    assert!(CameraRig::from_json(r#"{"n": 2}"#).is_err());
}

#[test]
fn recorded_frames_render_hand_and_objects() {
    let scene = Scene::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/tabletop.json")).unwrap();
    let rec = record_script(&scene, 7, &GraspScript::new(2, 0)).unwrap();
    let snap = rec.replay(45).unwrap();
    let rs = RenderScene::from_snapshot(&scene, &snap).unwrap();
    let target = snap.objects.iter().find(|(id, _)| *id == 2).unwrap().1.translation;
    let cam = PinholeCamera::look_at(0, intrinsics(96, 72, 80.0, 48.0, 36.0), target + Vec3::new(0.3, 0.3, 0.5), target, Vec3::z()).unwrap();
    let fb = render_frame(&rs, &cam);
    assert!(fb.pixel_count(HAND_INSTANCE_ID) > 0);
    assert!(fb.pixel_count(2) > 0);
}
