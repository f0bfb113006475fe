//! Geometry checked against independent reference computations.

use hoisim_core::geometry::{
    capsule_mesh_contact, decimate_mesh, segment_triangle_distance, Bvh, Capsule, Ray, Transform,
    TriMesh, Vec3,
};
use nalgebra::{Matrix4, UnitQuaternion, Vector4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Homogeneous matrix built from the quaternion components by the textbook formula.
fn matrix_of(t: &Transform) -> Matrix4<f64> {
    let [w, x, y, z] = t.wxyz();
    let p = t.translation;
    Matrix4::new(
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y), p.x,
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x), p.y,
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y), p.z,
        0.0, 0.0, 0.0, 1.0,
    )
}

fn random_transform(rng: &mut impl Rng) -> Transform {
    Transform::from_wxyz(
        [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ],
        [
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ],
    )
}

fn random_point(rng: &mut impl Rng, r: f64) -> Vec3 {
    Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

fn arb_transform() -> impl Strategy<Value = Transform> {
    (
        prop::array::uniform4(-1.0f64..1.0),
        prop::array::uniform3(-3.0f64..3.0),
    )
        .prop_filter("non-zero quaternion", |(q, _)| q.iter().map(|c| c * c).sum::<f64>() > 1e-3)
        .prop_map(|(q, t)| Transform::from_wxyz(q, t))
}

#[test]
fn apply_matches_homogeneous_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let t = random_transform(&mut rng);
        let p = random_point(&mut rng, 5.0);
        let h = matrix_of(&t) * Vector4::new(p.x, p.y, p.z, 1.0);
        assert!((t.apply(&p) - h.xyz()).norm() < 1e-9);
    }
}

#[test]
fn inverse_matches_matrix_inverse() {
    let t = Transform::rot_z(std::f64::consts::FRAC_PI_2).with_translation(Vec3::new(1.0, 0.0, 0.0));
    let oracle = matrix_of(&t).try_inverse().unwrap();
    let diff = matrix_of(&t.inverse()) - oracle;
    assert!(diff.abs().max() < 1e-12);
    let (a, d) = t.compose(&t.inverse()).deviation(&Transform::identity());
    assert!(a < 1e-9 && d < 1e-9);
}

#[test]
fn compose_matches_matrix_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let a = random_transform(&mut rng);
        let b = random_transform(&mut rng);
        let diff = matrix_of(&a.compose(&b)) - matrix_of(&a) * matrix_of(&b);
        assert!(diff.abs().max() < 1e-9);
    }
}

proptest! {
    #[test]
    fn compose_is_associative(a in arb_transform(), b in arb_transform(), c in arb_transform()) {
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        let (ang, d) = l.deviation(&r);
        prop_assert!(ang < 1e-9 && d < 1e-9);
    }

    #[test]
    fn double_inverse_is_identity_map(t in arb_transform()) {
        let (ang, d) = t.inverse().inverse().deviation(&t);
        prop_assert!(ang < 1e-9 && d < 1e-9);
        prop_assert!((t.rotation.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn apply_distributes_over_compose(a in arb_transform(), b in arb_transform(), p in prop::array::uniform3(-2.0f64..2.0)) {
        let p = Vec3::from(p);
        let lhs = a.compose(&b).apply(&p);
        let rhs = a.apply(&b.apply(&p));
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn inverse_cancels(t in arb_transform()) {
        let (ang, d) = t.compose(&t.inverse()).deviation(&Transform::identity());
        prop_assert!(ang < 1e-9 && d < 1e-9);
    }
}

/// Ray-plane intersection followed by a same-side barycentric test.
fn oracle_ray_triangle(o: &Vec3, d: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let denom = n.dot(d);
    if denom == 0.0 {
        return None;
    }
    let t = n.dot(&(tri[0] - o)) / denom;
    if t <= 0.0 {
        return None;
    }
    let p = o + d * t;
    let inside = (0..3).all(|k| {
        let e = tri[(k + 1) % 3] - tri[k];
        n.dot(&e.cross(&(p - tri[k]))) >= -1e-14 * n.norm_squared()
    });
    inside.then_some(t)
}

fn triangle_soup(rng: &mut impl Rng, n: usize) -> TriMesh {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    for i in 0..n {
        let c = random_point(rng, 1.0);
        for _ in 0..3 {
            verts.push(c + random_point(rng, 0.2));
        }
        tris.push([3 * i as u32, 3 * i as u32 + 1, 3 * i as u32 + 2]);
    }
    TriMesh::new_dropping_degenerate(verts, tris).unwrap()
}

#[test]
fn bvh_raycast_equals_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let meshes = [TriMesh::icosphere(0.8, 3), triangle_soup(&mut rng, 400)];
    for mesh in &meshes {
        let bvh = Bvh::build(mesh);
        let pose = random_transform(&mut rng);
        let world = mesh.transformed(&pose);
        let mut hits = 0;
        for _ in 0..1000 {
            let origin = pose.apply(&random_point(&mut rng, 2.5));
            let target = pose.apply(&random_point(&mut rng, 0.9));
            let ray = Ray::new(origin, target - origin).unwrap();
            let brute = (0..world.face_count())
                .filter_map(|i| oracle_ray_triangle(&ray.origin, &ray.direction(), &world.triangle(i)).map(|t| (t, i)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let fast = bvh.raycast(&pose, &ray);
            match (brute, fast) {
                (None, None) => {}
                (Some((t, i)), Some(h)) => {
                    hits += 1;
                    assert_eq!(h.triangle, i);
                    assert!((h.distance - t).abs() <= 1e-9 * t, "{} vs {}", h.distance, t);
                }
                (b, f) => panic!("brute {b:?} vs bvh {f:?}"),
            }
        }
        assert!(hits > 300, "too few hits ({hits}) to be meaningful");
    }
}

#[test]
fn capsule_contact_equals_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sphere = TriMesh::icosphere(0.05, 3);
    let bvh = Bvh::build(&sphere);
    let mut contacts = 0;
    for _ in 0..600 {
        let mesh_pose = random_transform(&mut rng);
        let world = sphere.transformed(&mesh_pose);
        let a = random_point(&mut rng, 0.07);
        let b = a + random_point(&mut rng, 0.03);
        let Ok(capsule) = Capsule::new(a, b, rng.random_range(0.002..0.01)) else { continue };
        let cap_pose = mesh_pose;
        let wa = cap_pose.apply(&a);
        let wb = cap_pose.apply(&b);
        let brute = (0..world.face_count())
            .map(|i| segment_triangle_distance(&wa, &wb, &world.triangle(i)).0)
            .fold(f64::INFINITY, f64::min);
        let fast = capsule_mesh_contact(&capsule, &cap_pose, &bvh, &mesh_pose);
        assert_eq!(fast.is_some(), brute <= capsule.radius, "brute {brute} r {}", capsule.radius);
        if let Some(c) = fast {
            contacts += 1;
            assert!((c.distance - brute).abs() < 1e-9);
        }
    }
    assert!(contacts > 50);
}

#[test]
fn segment_triangle_distance_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let tri = [random_point(&mut rng, 1.0), random_point(&mut rng, 1.0), random_point(&mut rng, 1.0)];
        let a = random_point(&mut rng, 1.5);
        let b = random_point(&mut rng, 1.5);
        let (d, p, q) = segment_triangle_distance(&a, &b, &tri);
        assert!(((p - q).norm() - d).abs() < 1e-12);
        // Sampling can only overestimate the true minimum.
        let mut sampled = f64::INFINITY;
        let n = 60;
        for i in 0..=n {
            let s = a + (b - a) * (i as f64 / n as f64);
            for j in 0..=n {
                for k in 0..=(n - j) {
                    let (u, v) = (j as f64 / n as f64, k as f64 / n as f64);
                    let t = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v;
                    sampled = sampled.min((s - t).norm());
                }
            }
        }
        assert!(d <= sampled + 1e-12, "{d} > sampled {sampled}");
        let edge = (0..3).map(|k| (tri[k] - tri[(k + 1) % 3]).norm()).fold((b - a).norm(), f64::max);
        assert!(sampled - d <= 2.0 * edge / n as f64, "{d} far below sampled {sampled}");
    }
}

fn sample_surface(mesh: &TriMesh, per_face: usize, rng: &mut impl Rng) -> Vec<Vec3> {
    let mut pts = mesh.vertices().to_vec();
    for i in 0..mesh.face_count() {
        let [a, b, c] = mesh.triangle(i);
        for _ in 0..per_face {
            let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            pts.push(a + (b - a) * u + (c - a) * v);
        }
    }
    pts
}

fn one_sided(from: &[Vec3], to: &TriMesh) -> f64 {
    from.iter()
        .map(|p| {
            (0..to.face_count())
                .map(|i| segment_triangle_distance(p, p, &to.triangle(i)).0)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[test]
fn decimated_icosphere_stays_close() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let input = TriMesh::icosphere(1.0, 3);
    assert_eq!(input.face_count(), 1280);
    let out = decimate_mesh(&input, 200).unwrap();
    assert!(out.face_count() <= 200);
    let hausdorff = one_sided(&sample_surface(&input, 4, &mut rng), &out)
        .max(one_sided(&sample_surface(&out, 20, &mut rng), &input));
    let diag = input.aabb().diagonal();
    assert!(hausdorff <= 0.05 * diag, "hausdorff {hausdorff} vs diag {diag}");
    let (a, b) = (input.aabb(), out.aabb());
    let ext = a.extent();
    for k in 0..3 {
        assert!((a.min[k] - b.min[k]).abs() <= 0.02 * ext[k]);
        assert!((a.max[k] - b.max[k]).abs() <= 0.02 * ext[k]);
    }
}

#[test]
fn decimation_preserves_bounds_of_elongated_shape() {
    let cyl = TriMesh::cylinder(0.03, 0.2, 96);
    let out = decimate_mesh(&cyl, 120).unwrap();
    assert!(out.face_count() <= 120);
    let (a, b) = (cyl.aabb(), out.aabb());
    let ext = a.extent();
    for k in 0..3 {
        assert!((a.min[k] - b.min[k]).abs() <= 0.02 * ext[k], "axis {k}");
        assert!((a.max[k] - b.max[k]).abs() <= 0.02 * ext[k], "axis {k}");
    }
}

#[test]
fn unit_quaternion_survives_many_compositions() {
    let step = Transform::new(
        UnitQuaternion::from_euler_angles(0.01, 0.02, 0.03),
        Vec3::new(0.001, 0.0, 0.0),
    );
    let mut acc = Transform::identity();
    for _ in 0..10_000 {
        acc = acc.compose(&step);
    }
    assert!((acc.rotation.norm() - 1.0).abs() < 1e-12);
}
