use hoisim_web::{decimation_preview, Playground};

#[test]
fn scripted_grasp_runs_to_release() {
    let mut p = Playground::new(7).unwrap();
    let objects: serde_json::Value = serde_json::from_str(&p.objects_json()).unwrap();
    assert_eq!(objects.as_array().unwrap().len(), 5);
    let n = p.script_grasp(2).unwrap();
    assert_eq!(n, 72);
    let mut kinds = Vec::new();
    for _ in 0..n {
        let state: serde_json::Value = serde_json::from_str(&p.step()).unwrap();
        for e in state["events"].as_array().unwrap() {
            kinds.push((e["kind"].as_str().unwrap().to_string(), e["object"].as_u64().unwrap()));
        }
    }
    assert_eq!(kinds, [("onset".to_string(), 2), ("release".to_string(), 2)]);
    assert_eq!(p.queued(), 0);
    assert_eq!(p.world().frame, 72);
    assert!(p.script_grasp(42).is_err());
}

#[test]
fn manual_input_moves_and_holds() {
    let mut p = Playground::new(7).unwrap();
    let start = p.world().hand.wrist.translation;
    p.script_grasp(1).unwrap();
    p.nudge(0.0, 0.0, -0.05, 0.5);
    assert_eq!(p.queued(), 0);
    p.step();
    p.step();
    let before = p.world().hand.wrist;
    assert!((before.translation.z - (start.z - 0.05)).abs() < 1e-12);
    assert_eq!(p.world().hand.trigger, 0.5);
    p.turn(0.0, 0.0, 0.3);
    p.step();
    let after = p.world().hand.wrist;
    assert!((after.translation - before.translation).norm() < 1e-12);
    assert!((after.rotation.angle_to(&before.rotation) - 0.3).abs() < 1e-9);
    p.reset(7).unwrap();
    assert_eq!(p.world().frame, 0);
}

#[test]
fn orbit_render_sees_the_table_objects() {
    let p = Playground::new(7).unwrap();
    let rgba = p.render_orbit(30.0, 45.0, 1.0, 64, 48).unwrap();
    assert_eq!(rgba.len(), 64 * 48 * 4);
    let background = rgba.chunks_exact(4).filter(|px| px == &[236, 238, 242, 255]).count();
    assert!(background < 64 * 48, "nothing rendered");
    assert!(background > 0);
    assert_eq!(rgba, p.render_orbit(30.0, 45.0, 1.0, 64, 48).unwrap());
    assert!(p.render_orbit(0.0, 0.0, 1.0, 0, 10).is_err());
}

#[test]
fn decimation_preview_reports_counts() {
    let v: serde_json::Value = serde_json::from_str(&decimation_preview(3, 200).unwrap()).unwrap();
    assert_eq!(v["input_faces"], 1280);
    let faces = v["output_faces"].as_u64().unwrap();
    assert!(faces <= 200 && faces > 100);
    assert_eq!(v["triangles"].as_array().unwrap().len() as u64, faces);
    assert!(v["max_radial_error"].as_f64().unwrap() < 0.1);
    assert!(decimation_preview(9, 200).is_err());
}
