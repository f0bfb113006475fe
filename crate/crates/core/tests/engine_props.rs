use std::path::Path;
use std::sync::Arc;

use hoisim_core::engine::*;
use hoisim_core::geometry::{segment_mesh_distance, MeshAsset, Transform, TriMesh, Vec3};
use hoisim_core::hand::{pose_bones, sensor_world_capsules, Finger, HandPoseState, HandRig, Handedness};
use hoisim_core::session::{synthesize_grasp_script, GraspScript};
use hoisim_core::Error;
use proptest::prelude::*;

fn tabletop() -> Scene {
    Scene::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/tabletop.json")).unwrap()
}

fn table() -> SupportSurface {
    SupportSurface::rectangle([-0.4, -0.3], [0.4, 0.3], 0.0)
}

fn object(id: u32, mesh: TriMesh, pose: Transform) -> SceneObject {
    SceneObject {
        id,
        name: format!("obj{id}"),
        color: [0.5; 3],
        render: MeshAsset::new(mesh.clone()),
        proxy: MeshAsset::new(mesh),
        pose,
    }
}

/// Every input of a scripted grasp, with the world after each one.
fn run(scene: &Scene, seed: u64, target: u32, script_seed: u64) -> Vec<WorldState> {
    let mut world = scene.place(seed).unwrap();
    let inputs = synthesize_grasp_script(&GraspScript::new(target, script_seed), &world).unwrap();
    let mut out = Vec::new();
    for (k, input) in inputs.iter().enumerate() {
        if k == 0 {
            world.apply_input(input);
        } else {
            world.step(input);
        }
        out.push(world.clone());
    }
    out
}

fn brute_contacts(world: &WorldState) -> Vec<(Finger, u32)> {
    let sensors = sensor_world_capsules(&world.rig, &world.bones());
    let mut out = Vec::new();
    for o in &world.objects {
        let mesh = o.proxy.mesh.transformed(&o.pose);
        for f in Finger::ALL {
            let hit = sensors
                .iter()
                .filter(|(g, _)| *g == f)
                .any(|(_, c)| segment_mesh_distance(&c.a, &c.b, &mesh) <= c.radius);
            if hit {
                out.push((f, o.id));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn five_objects_seed_7_do_not_overlap() {
    let scene = tabletop();
    let world = scene.place(7).unwrap();
    assert_eq!(world.objects.len(), 5);
    let boxes: Vec<_> = world.objects.iter().map(|o| o.render.mesh.world_aabb(&o.pose)).collect();
    for i in 0..boxes.len() {
        assert!((boxes[i].min.z - 0.0).abs() < 1e-9);
        for j in i + 1..boxes.len() {
            let (a, b) = (&boxes[i], &boxes[j]);
            let disjoint = a.max.x <= b.min.x || b.max.x <= a.min.x || a.max.y <= b.min.y || b.max.y <= a.min.y;
            assert!(disjoint, "objects {i} and {j} overlap");
        }
        let [x, y] = [boxes[i].min.x, boxes[i].min.y];
        assert!(x >= -0.4 && y >= -0.3 && boxes[i].max.x <= 0.4 && boxes[i].max.y <= 0.3);
    }
    let again = scene.place(7).unwrap();
    assert_eq!(world.object_poses(), again.object_poses());
}

#[test]
fn far_hand_has_no_contacts() {
    let world = tabletop().place(7).unwrap();
    assert!(world.evaluate_contacts().is_empty());
}

#[test]
fn sensor_four_mm_from_surface_touches() {
    let rig = Arc::new(HandRig::procedural(Handedness::Right));
    let bones = pose_bones(&rig, &HandPoseState::open(Transform::identity()));
    let (_, cap) = sensor_world_capsules(&rig, &bones)
        .into_iter()
        .find(|(f, _)| *f == Finger::Index)
        .unwrap();
    assert_eq!(cap.radius, 0.006);
    // Plane parallel to the segment, 4 mm further palmar.
    let z = cap.a.z.min(cap.b.z) - 0.004;
    let plane = TriMesh::quad(-0.01, cap.a.y - 0.005, 0.01, cap.b.y + 0.005);
    let pose = Transform::from_translation(cap.a.x, 0.0, z);
    let world = WorldState::new(rig, vec![object(3, plane, pose)], table(), Transform::identity(), DEFAULT_DT, 0);
    assert!(world.evaluate_contacts().contains(&(Finger::Index, 3)));
}

#[test]
fn hysteresis_releases_below_latch() {
    let scene = tabletop();
    let mut world = scene.place(7).unwrap();
    let obj = world.objects[0].pose;
    let wrist = world.hand.wrist;
    world.hand.latches = [Some(0.6), Some(0.6), None, None, None];
    world.grasp = GraspState::Grasped {
        object: world.objects[0].id,
        rel: wrist.inverse().compose(&obj),
        fingers: vec![
            OnsetFinger { finger: Finger::Thumb, latch: 0.6 },
            OnsetFinger { finger: Finger::Index, latch: 0.6 },
        ],
    };
    world.step(&ControllerInput::new(wrist, 0.56));
    assert!(world.grasp.object().is_some());
    assert_eq!(world.hand.latches[0], Some(0.6));
    world.step(&ControllerInput::new(wrist, 0.54));
    assert_eq!(world.grasp, GraspState::Free);
    assert_eq!(world.hand.latches[0], None);
    assert_eq!(world.hand.latches[1], None);
    assert_eq!(world.events.len(), 1);
    assert_eq!(world.events[0].kind, GraspEventKind::Release);
    assert_eq!(world.events[0].frame, 2);
}

#[test]
fn contacts_without_thumb_stay_free() {
    let rig = Arc::new(HandRig::procedural(Handedness::Right));
    // A slab under the index and middle proximal sensors only.
    let bones = pose_bones(&rig, &HandPoseState::open(Transform::identity()));
    let sensors = sensor_world_capsules(&rig, &bones);
    let idx = sensors.iter().find(|(f, _)| *f == Finger::Index).unwrap().1;
    let mid = sensors.iter().find(|(f, _)| *f == Finger::Middle).unwrap().1;
    let slab = TriMesh::cuboid(Vec3::new(0.012, 0.01, 0.005));
    let pose = Transform::from_translation(0.5 * (idx.a.x + mid.a.x), idx.a.y + 0.01, idx.a.z - 0.009);
    let mut world = WorldState::new(rig, vec![object(1, slab, pose)], table(), Transform::identity(), DEFAULT_DT, 0);
    world.apply_input(&ControllerInput::new(Transform::identity(), 0.3));
    assert!(world.contacts.contains(&(Finger::Index, 1)));
    assert!(world.contacts.contains(&(Finger::Middle, 1)));
    assert!(!world.contacts.iter().any(|(f, _)| *f == Finger::Thumb));
    assert_eq!(world.grasp, GraspState::Free);
    assert_eq!(world.hand.latches[1], Some(0.3));
}

#[test]
fn trigger_ramp_grasps_and_holds_rel() {
    let scene = tabletop();
    let frames = run(&scene, 7, 2, 0);
    let onset = frames.iter().position(|w| w.grasp.object().is_some()).expect("grasped");
    let GraspState::Grasped { object, rel, fingers } = frames[onset].grasp.clone() else { unreachable!() };
    assert_eq!(object, 2);
    assert!(fingers.iter().any(|f| f.finger == Finger::Thumb));
    assert!(fingers.len() >= 2);
    for w in &frames[onset..] {
        if w.grasp.object() != Some(object) {
            break;
        }
        let GraspState::Grasped { rel: r, .. } = &w.grasp else { unreachable!() };
        assert_eq!(*r, rel);
        let now = w.hand.wrist.inverse().compose(&w.object(object).unwrap().pose);
        let (a, t) = now.deviation(&rel);
        assert!(a + t < 1e-6);
    }
}

#[test]
fn parented_object_follows_vertical_lift() {
    let scene = tabletop();
    let frames = run(&scene, 7, 2, 0);
    let onset = frames.iter().position(|w| w.grasp.object().is_some()).unwrap();
    let mut world = frames[onset].clone();
    let start_obj = world.object(2).unwrap().pose.translation;
    let wrist = world.hand.wrist;
    for k in 1..=30 {
        let w = wrist.with_translation(wrist.translation + Vec3::z() * (0.1 * k as f64 / 30.0));
        world.step(&ControllerInput::new(w, 1.0));
        let GraspState::Grasped { rel, .. } = &world.grasp else { panic!("dropped") };
        let (a, t) = world.hand.wrist.inverse().compose(&world.object(2).unwrap().pose).deviation(rel);
        assert!(a + t < 1e-6);
    }
    let moved = world.object(2).unwrap().pose.translation - start_obj;
    assert!((moved - Vec3::new(0.0, 0.0, 0.1)).norm() < 1e-6);
}

#[test]
fn release_settles_on_table() {
    let scene = tabletop();
    let frames = run(&scene, 7, 4, 3);
    let rel = frames
        .iter()
        .position(|w| w.events.iter().any(|e| e.kind == GraspEventKind::Release))
        .expect("released");
    let o = frames[rel].object(4).unwrap();
    assert!(o.render.mesh.world_aabb(&o.pose).min.z.abs() < 1e-9);
}

#[test]
fn settle_examples() {
    let m = TriMesh::cuboid(Vec3::repeat(0.04));
    let t = table();
    let high = Transform::rot_z(0.7).with_translation(Vec3::new(0.1, -0.1, 0.14));
    let s = settle_on_surface(1, &m, &high, &t).unwrap();
    assert!((m.world_aabb(&s).min.z).abs() < 1e-12);
    assert!((s.translation.z - (high.translation.z - 0.1)).abs() < 1e-12);
    assert_eq!(s.rotation, high.rotation);
    assert_eq!(settle_on_surface(1, &m, &s, &t).unwrap(), s);
    let off = Transform::from_translation(0.5, 0.0, 0.2);
    assert!(matches!(settle_on_surface(9, &m, &off, &t), Err(Error::NoSupportBelow(9))));
}

#[test]
fn every_object_is_graspable_by_script() {
    let scene = tabletop();
    for target in 1..=5 {
        for seed in [0u64, 7] {
            let frames = run(&scene, seed, target, seed + 1);
            let kinds: Vec<_> = frames.iter().flat_map(|w| w.events.iter().map(|e| (e.kind, e.object))).collect();
            assert_eq!(
                kinds,
                vec![(GraspEventKind::Onset, target), (GraspEventKind::Release, target)],
                "target {target} seed {seed}"
            );
        }
    }
}

fn snapshot(w: &WorldState) -> String {
    format!("{} {:?} {:?} {:?} {:?} {:?} {:?}", w.frame, w.time.to_bits(), w.hand, w.grasp, w.contacts, w.object_poses(), w.events)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stepping_is_deterministic_and_sound(seed in 0u64..500, target in 1u32..=5, script_seed in 0u64..1000) {
        let scene = tabletop();
        let a = run(&scene, seed, target, script_seed);
        let b = run(&scene, seed, target, script_seed);
        prop_assert_eq!(a.len(), 72);
        let mut grasp: Option<(u32, Transform)> = None;
        let mut prev = scene.place(seed).unwrap();
        for (k, (x, y)) in a.iter().zip(&b).enumerate() {
            prop_assert_eq!(snapshot(x), snapshot(y));
            prop_assert_eq!(x.frame, k as u64);
            prop_assert_eq!((x.time / x.dt).round() as u64, x.frame);
            // contacts are taken before parenting and settling move objects
            let mut probe = x.clone();
            for (o, p) in probe.objects.iter_mut().zip(&prev.objects) {
                o.pose = p.pose;
            }
            let listed: Vec<_> = x.contacts.iter().copied().collect();
            prop_assert_eq!(listed, brute_contacts(&probe));
            for f in 0..5 {
                prop_assert!(x.hand.curls[f] <= x.hand.trigger);
                if let Some(l) = x.hand.latches[f] {
                    if prev.hand.latches[f] == Some(l) && x.hand.trigger >= l {
                        prop_assert_eq!(x.hand.curls[f], l);
                    }
                }
            }
            for e in &x.events {
                if e.kind == GraspEventKind::Onset {
                    prop_assert!(x.contacts.contains(&(Finger::Thumb, e.object)));
                    prop_assert!(prev.grasp == GraspState::Free);
                }
            }
            match &x.grasp {
                GraspState::Grasped { object, rel, .. } => {
                    if let Some((o, r)) = &grasp {
                        prop_assert_eq!(o, object);
                        prop_assert_eq!(r, rel);
                    }
                    grasp = Some((*object, *rel));
                    let now = x.hand.wrist.inverse().compose(&x.object(*object).unwrap().pose);
                    let (ang, t) = now.deviation(rel);
                    prop_assert!(ang + t < 1e-6);
                }
                GraspState::Free => grasp = None,
            }
            let ids: Vec<u32> = x.objects.iter().map(|o| o.id).collect();
            prop_assert_eq!(ids, vec![1, 2, 3, 4, 5]);
            for (o, p) in x.objects.iter().zip(&prev.objects) {
                prop_assert!(Arc::ptr_eq(&o.render, &p.render) && Arc::ptr_eq(&o.proxy, &p.proxy));
            }
            prev = x.clone();
        }
    }

    #[test]
    fn raising_trigger_never_lowers_curl(seed in 0u64..200, steps in prop::collection::vec(0.0f64..0.08, 1..20), dz in -0.02f64..0.02) {
        let scene = tabletop();
        let frames = run(&scene, seed, 1 + (seed % 5) as u32, seed);
        // hold the grasp-approach wrist fixed and only raise the trigger
        let mut world = frames[26].clone();
        let wrist = world.hand.wrist.with_translation(world.hand.wrist.translation + Vec3::z() * dz);
        let mut trigger = 0.0;
        let mut curls = world.hand.curls;
        for s in steps {
            trigger = (trigger + s).min(1.0);
            world.step(&ControllerInput::new(wrist, trigger));
            for f in 0..5 {
                prop_assert!(world.hand.curls[f] >= curls[f]);
                prop_assert!(world.hand.curls[f] <= trigger);
            }
            curls = world.hand.curls;
        }
    }

    #[test]
    fn random_poses_match_contact_oracle(x in -0.1f64..0.1, y in -0.1f64..0.1, z in 0.0f64..0.2, yaw in 0.0f64..6.3, c in 0.0f64..1.0) {
        let scene = tabletop();
        let mut world = scene.place(7).unwrap();
        let target = world.objects[0].pose.translation;
        let start = world.hand.wrist;
        world.hand.wrist = Transform::rot_z(yaw).compose(&start.with_translation(Vec3::zeros()))
            .with_translation(target + Vec3::new(x, y, z));
        world.hand.curls = [c; 5];
        let listed: Vec<_> = world.evaluate_contacts().into_iter().collect();
        prop_assert_eq!(listed, brute_contacts(&world));
    }
}

#[test]
fn onset_needs_thumb_contact_under_random_controller_noise() {
    use rand::{Rng, SeedableRng};
    let scene = tabletop();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for trial in 0..6 {
        let frames = run(&scene, trial, 1 + (trial % 5) as u32, trial);
        let mut world = frames[30].clone();
        for _ in 0..60 {
            let jitter = Vec3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02));
            let wrist = world.hand.wrist.with_translation(world.hand.wrist.translation + jitter);
            let was_free = world.grasp == GraspState::Free;
            world.step(&ControllerInput::new(wrist, rng.random::<f64>()));
            if was_free {
                if let Some(o) = world.grasp.object() {
                    assert!(world.contacts.contains(&(Finger::Thumb, o)));
                }
            }
        }
    }
}
