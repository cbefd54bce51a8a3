//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Every check compares the library against an oracle
//! written independently here.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gazetrace::analytics::{build_network, parse_dot, pool_timeline, to_dot, SessionSpan, TimelineParams};
use gazetrace::geometry::{
    angles_to_direction, CameraIntrinsics, GazeAngles, Mat3, Pixel, Ray, RigidTransform, Vec3,
};
use gazetrace::io::{run_session, FrameRecord, ARTIFACTS, EVENTS_FILE};
use gazetrace::pipeline::{encode_frame, DepthPatch, DetectionIdentity, GazeEvent, InlineDepth};
use gazetrace::raycast::{intersect_ray_triangle, Bvh, TIE_EPSILON};
use gazetrace::reid::{match_identity, Gallery, Identity};
use gazetrace::scene::{SceneModel, StaticOoi, TriangleMesh, DEFAULT_BODY_DIMS};
use gazetrace::synth::{quad_mesh, read_ground_truth, score_events, ScenarioScript};
use gazetrace::tracking::{BBox, Detection, Tracker, TrackingParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("{what} took {:.2} s (limit {limit_s} s)", elapsed.as_secs_f64())
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit(r: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.sample(StandardNormal), r.sample(StandardNormal), r.sample(StandardNormal));
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

fn random_rotation(r: &mut ChaCha8Rng) -> Mat3 {
    Mat3::from_axis_angle(unit(r), r.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

// ---------------------------------------------------------------------------

fn geometry_round_trip() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst_px: f64 = 0.0;
    let mut worst_pt: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..100_000 {
        let k = CameraIntrinsics::new(
            r.gen_range(300.0..3000.0),
            r.gen_range(300.0..3000.0),
            r.gen_range(800.0..1100.0),
            r.gen_range(400.0..700.0),
            1920,
            1080,
        )
        .unwrap();
        let p = Pixel { x: r.gen_range(0.0..1920.0), y: r.gen_range(0.0..1080.0) };
        let z = r.gen_range(0.1..50.0);
        let v = k.back_project(p, z).map_err(|e| e.to_string())?;
        let q = k.project(v).map_err(|e| e.to_string())?;
        worst_px = worst_px.max(p.distance(q)).max((v.z - z).abs());
        let v2 = k.back_project(k.project(v).unwrap(), v.z).unwrap();
        worst_pt = worst_pt.max(v.max_abs_diff(v2));
        let g = GazeAngles::new(
            r.gen_range(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2),
            r.gen_range(-std::f64::consts::PI..=std::f64::consts::PI),
        )
        .unwrap();
        worst_norm = worst_norm.max((angles_to_direction(g).norm() - 1.0).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst_px <= 1e-9, || format!("pixel round trip error {worst_px:e}"))?;
    ensure(worst_pt <= 1e-9, || format!("point round trip error {worst_pt:e}"))?;
    ensure(worst_norm <= 1e-9, || format!("direction norm error {worst_norm:e}"))?;
    within(elapsed, 1.0, "1e5 samples")?;
    Ok(format!(
        "1e5 samples: max pixel err {worst_px:.1e}, point err {worst_pt:.1e}, |d|-1 {worst_norm:.1e}, {:.3} s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn random_scene(r: &mut ChaCha8Rng, triangles: usize) -> Vec<TriangleMesh> {
    let meshes = r.gen_range(1..=10usize).min(triangles);
    let mut out: Vec<TriangleMesh> = (0..meshes)
        .map(|i| TriangleMesh { name: format!("M{i}"), vertices: Vec::new(), triangles: Vec::new() })
        .collect();
    let copies = if meshes > 1 { triangles / 20 } else { 0 };
    for t in 0..triangles - copies {
        let m = &mut out[if t < meshes { t } else { r.gen_range(0..meshes) }];
        let c = Vec3::new(r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0));
        let s = r.gen_range(0.05..1.5);
        let base = m.vertices.len() as u32;
        loop {
            let vs: Vec<Vec3> = (0..3).map(|_| c + unit(r) * (s * r.gen_range(0.2..1.0))).collect();
            if (vs[1] - vs[0]).cross(vs[2] - vs[0]).norm() > 1e-6 {
                m.vertices.extend(vs);
                break;
            }
        }
        m.triangles.push([base, base + 1, base + 2]);
    }
    // coincident copies in another mesh (rotated vertex order) create exact ties
    for _ in 0..copies {
        let src = r.gen_range(0..meshes);
        let [a, b, c] = out[src].triangle(r.gen_range(0..out[src].triangles.len()));
        let dst = &mut out[(src + r.gen_range(1..meshes)) % meshes];
        let base = dst.vertices.len() as u32;
        dst.vertices.extend([b, c, a]);
        dst.triangles.push([base, base + 1, base + 2]);
    }
    out
}

/// Every triangle of a scene with a bounding sphere (center, padded squared
/// radius) used to skip the exact test when the ray's line misses it.
struct Flat {
    spheres: Vec<(Vec3, f64)>,
    triangles: Vec<(u32, u32, [Vec3; 3])>,
}

fn flatten(meshes: &[TriangleMesh]) -> Flat {
    let mut flat = Flat { spheres: Vec::new(), triangles: Vec::new() };
    for (id, m) in meshes.iter().enumerate() {
        for ti in 0..m.triangles.len() {
            let v = m.triangle(ti);
            let c = (v[0] + v[1] + v[2]) * (1.0 / 3.0);
            let r = v.iter().map(|p| (*p - c).norm()).fold(0.0, f64::max) * (1.0 + 1e-6) + 1e-9;
            flat.spheres.push((c, r * r));
            flat.triangles.push((id as u32, ti as u32, v));
        }
    }
    flat
}

/// All-triangle scan: smallest t, ties within `TIE_EPSILON` of it going to
/// the smallest (mesh id, triangle index).
fn scan(flat: &Flat, ray: &Ray, exclude: &[u32], hits: &mut Vec<(f64, u32, u32)>) -> Option<(f64, u32, u32)> {
    hits.clear();
    for (i, &(c, r2)) in flat.spheres.iter().enumerate() {
        let w = c - ray.origin;
        let along = w.dot(ray.direction);
        if w.dot(w) - along * along > r2 {
            continue;
        }
        let (id, ti, [a, b, c]) = flat.triangles[i];
        if let Some(t) = intersect_ray_triangle(ray, a, b, c) {
            if !exclude.contains(&id) {
                hits.push((t, id, ti));
            }
        }
    }
    let tmin = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    hits.iter().copied().filter(|h| h.0 <= tmin + TIE_EPSILON).min_by_key(|h| (h.1, h.2))
}

fn bvh_matches_scan() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let (mut rays, mut hits, mut mismatches) = (0usize, 0usize, 0usize);
    let mut total_tris = 0;
    let (mut bvh_time, mut scan_time) = (Duration::ZERO, Duration::ZERO);
    for s in 0..20 {
        let n = (1e3 * 100f64.powf(s as f64 / 19.0)).round() as usize;
        total_tris += n;
        let meshes = random_scene(&mut r, n);
        ensure(meshes.iter().map(|m| m.triangles.len()).sum::<usize>() == n, || format!("scene {s}: size"))?;
        let bvh = Bvh::build(meshes.iter().enumerate().map(|(i, m)| (i as u32, m.name.as_str(), m)));
        ensure(bvh.check_bounds(), || format!("scene {s}: BVH bounds do not contain children"))?;
        let flat = flatten(&meshes);
        let mut scratch = Vec::new();
        for _ in 0..10_000 {
            let origin = Vec3::new(r.gen_range(-12.0..12.0), r.gen_range(-12.0..12.0), r.gen_range(-12.0..12.0));
            let dir = if r.gen_bool(0.7) {
                let m = &meshes[r.gen_range(0..meshes.len())];
                let [a, b, c] = m.triangle(r.gen_range(0..m.triangles.len()));
                ((a + b + c) * (1.0 / 3.0) + unit(&mut r) * 0.2) - origin
            } else {
                unit(&mut r)
            };
            let Some(ray) = Ray::new(origin, dir) else { continue };
            let exclude: Vec<u32> =
                if r.gen_bool(0.25) { vec![r.gen_range(0..meshes.len() as u32)] } else { Vec::new() };
            rays += 1;
            let t0 = Instant::now();
            let got = bvh.closest_hit(&ray, &exclude);
            let t1 = Instant::now();
            let want = scan(&flat, &ray, &exclude, &mut scratch);
            if s < 5 {
                // the sphere prefilter never changes the scan's answer
                let plain = flat
                    .triangles
                    .iter()
                    .filter(|tri| !exclude.contains(&tri.0))
                    .filter_map(|&(id, ti, [a, b, c])| intersect_ray_triangle(&ray, a, b, c).map(|t| (t, id, ti)))
                    .collect::<Vec<_>>();
                let tmin = plain.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
                let plain = plain.into_iter().filter(|h| h.0 <= tmin + TIE_EPSILON).min_by_key(|h| (h.1, h.2));
                ensure(plain == want, || format!("scene {s}: prefiltered scan {want:?} != plain scan {plain:?}"))?;
            }
            bvh_time += t1 - t0;
            scan_time += t1.elapsed();
            let ok = match (&got, want) {
                (None, None) => true,
                (Some(h), Some((t, m, ti))) => {
                    hits += 1;
                    h.mesh_id == m && h.triangle_index == ti && (h.t - t).abs() <= 1e-9
                }
                _ => false,
            };
            if !ok {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(mismatches == 0, || format!("{mismatches} of {rays} rays disagree with the scan"))?;
    within(elapsed, 60.0, "20 scenes")?;
    Ok(format!(
        "20 scenes ({total_tris} triangles, 1e3..1e5 each), {rays} rays, {hits} hits, 0 mismatches; BVH {:.2} s, scan {:.1} s, total {:.1} s",
        bvh_time.as_secs_f64(),
        scan_time.as_secs_f64(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn layered_quads() -> Result<String, String> {
    let mut r = rng(3);
    let mut checked = 0;
    for _ in 0..500 {
        let layers = r.gen_range(2..=6usize);
        let pose = RigidTransform::new(
            random_rotation(&mut r),
            Vec3::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)),
        )
        .unwrap();
        // (mesh id, depth, center x, center y, half width, half height), local frame
        let mut ids: Vec<u32> = (0..layers as u32).collect();
        ids.shuffle(&mut r);
        let mut quads = Vec::new();
        let mut meshes = Vec::new();
        for (l, &id) in ids.iter().enumerate() {
            let z = 1.0 + l as f64 * r.gen_range(0.3..2.0) + r.gen_range(0.0..0.2);
            let (cx, cy) = (r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5));
            let (hw, hh) = (r.gen_range(0.5..2.0), r.gen_range(0.5..2.0));
            let local = quad_mesh(&format!("Q{id}"), [2.0 * hw, 2.0 * hh], [r.gen_range(1..4), r.gen_range(1..4)]);
            let placed = RigidTransform::new(Mat3::IDENTITY, Vec3::new(cx, cy, z)).unwrap();
            meshes.push((id, local.transformed(&pose.compose(&placed))));
            quads.push((id, z, cx, cy, hw, hh));
        }
        meshes.sort_by_key(|m| m.0);
        let bvh = Bvh::build(meshes.iter().map(|(id, m)| (*id, m.name.as_str(), m)));
        for _ in 0..20 {
            let o = Vec3::new(r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3), r.gen_range(-1.0..0.5));
            let aim = Vec3::new(r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5), 3.0);
            let local_ray = Ray::new(o, aim - o).unwrap();
            // analytic crossings with each layer plane
            let mut crossings: Vec<(f64, u32)> = Vec::new();
            let mut ambiguous = false;
            for &(id, z, cx, cy, hw, hh) in &quads {
                let t = (z - o.z) / local_ray.direction.z;
                let p = local_ray.at(t);
                let (dx, dy) = ((p.x - cx).abs(), (p.y - cy).abs());
                if (dx - hw).abs() < 1e-7 || (dy - hh).abs() < 1e-7 {
                    ambiguous = true;
                }
                if t > 0.0 && dx <= hw && dy <= hh {
                    crossings.push((t, id));
                }
            }
            if ambiguous {
                continue;
            }
            crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
            let ray = local_ray.transformed(&pose);
            let full = bvh.closest_hit(&ray, &[]);
            match (crossings.first(), &full) {
                (None, None) => {}
                (Some(&(t, id)), Some(h)) if h.mesh_id == id && (h.t - t).abs() < 1e-9 => {}
                _ => return Err(format!("nearest layer mismatch: want {:?}, got {full:?}", crossings.first())),
            }
            // every exclusion subset: result is the nearest non-excluded layer, never nearer
            for mask in 0u32..(1 << layers) {
                let exclude: Vec<u32> = (0..layers as u32).filter(|i| mask & (1 << i) != 0).collect();
                let want = crossings.iter().find(|c| !exclude.contains(&c.1));
                let got = bvh.closest_hit(&ray, &exclude);
                match (want, &got) {
                    (None, None) => {}
                    (Some(&(t, id)), Some(h)) if h.mesh_id == id && (h.t - t).abs() < 1e-9 => {
                        if let Some(f) = &full {
                            ensure(h.t >= f.t - 1e-12, || "exclusion produced a nearer hit".into())?;
                        }
                    }
                    _ => return Err(format!("exclusion {exclude:?}: want {want:?}, got {got:?}")),
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} layered queries"))
}

fn self_exclusion_frames() -> Result<String, String> {
    let mut r = rng(4);
    let k = CameraIntrinsics::new(1000.0, 1000.0, 960.0, 540.0, 1920, 1080).unwrap();
    let statics: Arc<[StaticOoi]> = vec![
        StaticOoi {
            label: "DISPLAY".into(),
            mesh: quad_mesh("DISPLAY", [3.0, 1.7], [4, 4])
                .transformed(&RigidTransform::from_translation(Vec3::new(0.0, -0.5, 7.0))),
            pose: RigidTransform::from_translation(Vec3::new(0.0, -0.5, 7.0)),
        },
        StaticOoi {
            label: "WALL".into(),
            mesh: quad_mesh("WALL", [6.0, 3.0], [2, 2])
                .transformed(&RigidTransform::from_translation(Vec3::new(0.0, 0.0, 9.0))),
            pose: RigidTransform::from_translation(Vec3::new(0.0, 0.0, 9.0)),
        },
    ]
    .into();
    let scene = SceneModel { intrinsics: k, floor_y: 1.5, body_dims: DEFAULT_BODY_DIMS, statics };
    let bvh = Arc::new(Bvh::build(scene.statics.iter().enumerate().map(|(i, s)| (i as u32, s.label.as_str(), &s.mesh))));
    let (mut events, mut participant_hits) = (0usize, 0usize);
    for fi in 0..10_000u64 {
        let n = r.gen_range(1..=6usize);
        let mut detections = Vec::new();
        let mut patches = Vec::new();
        let mut ids = Vec::new();
        for j in 0..n {
            let z: f64 = r.gen_range(1.5..8.0);
            let (hw, hh) = (80.0 / z, 110.0 / z);
            let (cx, cy) = (r.gen_range(hw..1920.0 - hw), r.gen_range(hh..700.0));
            let bbox = BBox::new(cx - hw, cy - hh, cx + hw, cy + hh);
            // half the time aim at another participant's face, otherwise anywhere
            let gaze = GazeAngles::new(
                r.gen_range(-1.2..1.2),
                r.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
            .unwrap();
            detections.push(Detection { frame_index: fi, bbox, embedding: None, gaze: Some(gaze) });
            patches.push(DepthPatch { rect: bbox, depth: z as f32 });
            ids.push(DetectionIdentity::Known(format!("P{j}")));
        }
        for j in 0..n {
            if n > 1 && r.gen_bool(0.5) {
                let other = (j + r.gen_range(1..n)) % n;
                let (a, b) = (detections[j].bbox.centroid(), detections[other].bbox.centroid());
                let pa = k.back_project(a, patches[j].depth as f64).unwrap();
                let pb = k.back_project(b, patches[other].depth as f64).unwrap();
                if let Some(d) = (pb - pa).normalized() {
                    detections[j].gaze = Some(GazeAngles::from_direction(d));
                }
            }
        }
        patches.sort_by(|a, b| b.depth.total_cmp(&a.depth));
        let depth = InlineDepth { width: k.width, height: k.height, patches, background: None };
        let frame = FrameRecord { frame_index: fi, timestamp_s: fi as f64 / 30.0, detections, depth: None };
        let out = encode_frame(&frame, &ids, Ok(&depth), &scene, &bvh);
        ensure(out.events.len() + out.dropped.len() == n, || format!("frame {fi}: detections not accounted for"))?;
        for e in &out.events {
            ensure(e.target.as_deref() != Some(e.observer.as_str()), || {
                format!("frame {fi}: {} targets itself", e.observer)
            })?;
            if e.target.as_deref().is_some_and(|t| t.starts_with('P')) {
                participant_hits += 1;
            }
        }
        events += out.events.len();
    }
    Ok(format!("1e4 frames, {events} events ({participant_hits} on participants), no self-targets"))
}

fn closest_contact() -> Outcome {
    let a = layered_quads()?;
    let b = self_exclusion_frames()?;
    Ok(format!("{a}; {b}"))
}

// ---------------------------------------------------------------------------

/// (pairs, total distance) and the assignment that achieves it.
type Scored = ((usize, f64), Vec<Option<usize>>);

/// Best assignment by enumeration: most pairs within `cap`, then least total
/// distance. Returns (pairs, cost, unique).
fn exhaustive(cost: &[Vec<f64>], cap: f64) -> (Vec<Option<usize>>, f64, bool) {
    fn rec(
        i: usize,
        cost: &[Vec<f64>],
        cap: f64,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        acc: (usize, f64),
        best: &mut Vec<Scored>,
    ) {
        if i == cost.len() {
            best.push((acc, cur.clone()));
            return;
        }
        cur.push(None);
        rec(i + 1, cost, cap, used, cur, acc, best);
        cur.pop();
        for j in 0..used.len() {
            if !used[j] && cost[i][j] <= cap {
                used[j] = true;
                cur.push(Some(j));
                rec(i + 1, cost, cap, used, cur, (acc.0 + 1, acc.1 + cost[i][j]), best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    let mut all = Vec::new();
    rec(0, cost, cap, &mut vec![false; cols], &mut Vec::new(), (0, 0.0), &mut all);
    all.sort_by(|a, b| b.0 .0.cmp(&a.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    let (best, pairs) = all[0].clone();
    let unique = all.get(1).is_none_or(|s| s.0 .0 < best.0 || s.0 .1 > best.1 + 1e-9);
    (pairs, best.1, unique)
}

fn tracking_optimality() -> Outcome {
    let start = Instant::now();
    let mut r = rng(5);
    let params = TrackingParams::default();
    let mut compared_pairs = 0;
    for inst in 0..1000 {
        let m = r.gen_range(0..=8usize);
        let n = r.gen_range(0..=8usize);
        let spread = r.gen_range(50.0..400.0);
        let pt = |r: &mut ChaCha8Rng| (r.gen_range(500.0..500.0 + spread), r.gen_range(300.0..300.0 + spread));
        let det = |f: u64, (x, y): (f64, f64)| Detection::new(f, BBox::new(x - 20.0, y - 25.0, x + 20.0, y + 25.0));
        let prev: Vec<(f64, f64)> = (0..m).map(|_| pt(&mut r)).collect();
        let cur: Vec<(f64, f64)> = (0..n).map(|_| pt(&mut r)).collect();
        let mut tracker = Tracker::new(params);
        let a0 = tracker.push_frame(prev.iter().map(|&p| det(0, p)).collect()).map_err(|e| e.to_string())?;
        let a1 = tracker.push_frame(cur.iter().map(|&p| det(1, p)).collect()).map_err(|e| e.to_string())?;

        let cost: Vec<Vec<f64>> = prev
            .iter()
            .map(|a| cur.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        let (want, want_cost, unique) = exhaustive(&cost, params.max_distance_px);
        let got: Vec<Option<usize>> =
            a0.tracklet_of.iter().map(|id| a1.tracklet_of.iter().position(|x| x == id)).collect();
        let got_count = got.iter().flatten().count();
        let got_cost: f64 = got.iter().enumerate().filter_map(|(i, j)| j.map(|j| cost[i][j])).sum();
        ensure(got.iter().enumerate().all(|(i, j)| j.is_none_or(|j| cost[i][j] <= params.max_distance_px)), || {
            format!("instance {inst}: pair beyond the cap")
        })?;
        ensure(got_count == want.iter().flatten().count() && (got_cost - want_cost).abs() <= 1e-9, || {
            format!("instance {inst}: got {got_count} pairs / {got_cost}, oracle {want:?} / {want_cost}")
        })?;
        if unique {
            ensure(got == want, || format!("instance {inst}: assignment {got:?} != oracle {want:?}"))?;
            compared_pairs += 1;
        }

        // partition: every detection in exactly one tracklet, one per frame
        let tracklets = tracker.finish(1);
        let ids: BTreeSet<u64> = tracklets.iter().map(|t| t.tracklet_id).collect();
        ensure(ids.len() == tracklets.len(), || format!("instance {inst}: duplicate tracklet ids"))?;
        let total: usize = tracklets.iter().map(|t| t.detections.len()).sum();
        ensure(total == m + n, || format!("instance {inst}: {total} detections in tracklets, expected {}", m + n))?;
        for t in &tracklets {
            let frames: BTreeSet<u64> = t.detections.iter().map(|d| d.frame_index).collect();
            ensure(frames.len() == t.detections.len(), || format!("instance {inst}: two detections of a frame"))?;
        }
        let mut seen: Vec<(u64, u64)> =
            a0.tracklet_of.iter().map(|&id| (0, id)).chain(a1.tracklet_of.iter().map(|&id| (1, id))).collect();
        seen.sort();
        seen.dedup();
        ensure(seen.len() == m + n, || format!("instance {inst}: two detections share a tracklet in one frame"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 30.0, "1000 instances")?;
    Ok(format!(
        "1000 instances, optimal objective on all, identical assignment on {compared_pairs} with a unique optimum, partition holds, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn gaussian(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.sample(StandardNormal)).collect()
}

/// Linear scan: best cosine over all anchors, ties to the smallest id.
fn scan_gallery(q: &[f64], anchors: &BTreeMap<String, Vec<Vec<f64>>>, threshold: f64) -> (Option<String>, f64) {
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut scored: Vec<(f64, &String)> = Vec::new();
    for (id, list) in anchors {
        for a in list {
            let an = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = q.iter().zip(a).map(|(x, y)| x * y).sum();
            scored.push(((dot / (qn * an)).clamp(-1.0, 1.0), id));
        }
    }
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let id = scored.iter().filter(|s| s.0 == best).map(|s| s.1).min().unwrap();
    ((best >= threshold).then(|| id.clone()), best)
}

fn reid_oracle() -> Outcome {
    let mut r = rng(6);
    let dim = 128;
    let mut anchors: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for p in 0..40 {
        let base = normalize(gaussian(&mut r, dim));
        let list = (0..3)
            .map(|i| if i == 0 { base.clone() } else { normalize(base.iter().map(|x| x + 0.05 * r.sample::<f64, _>(StandardNormal)).collect()) })
            .collect();
        anchors.insert(format!("P{p:02}"), list);
    }
    let gallery = Gallery::new(dim, 0.6, anchors.clone()).map_err(|e| e.to_string())?;

    // exhaustive-scan equivalence on mixed random and near-anchor queries
    let mut identified = 0;
    for i in 0..10_000 {
        let q: Vec<f64> = if i % 2 == 0 {
            gaussian(&mut r, dim)
        } else {
            let (_, list) = anchors.iter().nth(r.gen_range(0..anchors.len())).unwrap();
            let sigma = r.gen_range(0.0..0.15);
            list[r.gen_range(0..list.len())].iter().map(|x| x + sigma * r.sample::<f64, _>(StandardNormal)).collect()
        };
        let (id, score) = match_identity(&q, &gallery).map_err(|e| e.to_string())?;
        let (want_id, want_score) = scan_gallery(&q, &anchors, 0.6);
        ensure(id.participant().map(str::to_string) == want_id && (score - want_score).abs() <= 1e-12, || {
            format!("query {i}: got {id:?}/{score}, scan {want_id:?}/{want_score}")
        })?;
        identified += usize::from(want_id.is_some());
    }

    // planted identity recovery at sigma 0.05
    let (mut correct, trials) = (0, 5000);
    for _ in 0..trials {
        let (pid, list) = anchors.iter().nth(r.gen_range(0..anchors.len())).unwrap();
        let q: Vec<f64> = list[0].iter().map(|x| x + 0.05 * r.sample::<f64, _>(StandardNormal)).collect();
        if match_identity(&q, &gallery).unwrap().0 == Identity::Participant(pid.clone()) {
            correct += 1;
        }
    }
    let recovery = correct as f64 / trials as f64;
    ensure(recovery >= 0.99, || format!("planted recovery {recovery:.4} < 0.99"))?;

    // threshold monotonicity: raising the threshold only turns matches into
    // UNIDENTIFIED, never into a different participant
    let mut transitions = 0;
    for _ in 0..2000 {
        let (_, list) = anchors.iter().nth(r.gen_range(0..anchors.len())).unwrap();
        let sigma = r.gen_range(0.0..0.3);
        let q: Vec<f64> = list[0].iter().map(|x| x + sigma * r.sample::<f64, _>(StandardNormal)).collect();
        let mut ths: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
        ths.sort_by(f64::total_cmp);
        let results: Vec<Identity> = ths
            .iter()
            .map(|&t| match_identity(&q, &gallery.clone().with_threshold(t).unwrap()).unwrap().0)
            .collect();
        for w in results.windows(2) {
            match (&w[0], &w[1]) {
                (Identity::Participant(a), Identity::Participant(b)) if a != b => {
                    return Err(format!("threshold raise changed {a} into {b}"))
                }
                (Identity::Unidentified, Identity::Participant(_)) => {
                    return Err("threshold raise turned UNIDENTIFIED into a match".into())
                }
                (Identity::Participant(_), Identity::Unidentified) => transitions += 1,
                _ => {}
            }
        }
    }
    Ok(format!(
        "1e4 queries equal the scan ({identified} identified); planted recovery {:.2}% at sigma 0.05 / threshold 0.6; monotone over 2000 threshold sweeps ({transitions} drop-outs)",
        100.0 * recovery
    ))
}

// ---------------------------------------------------------------------------

struct ClosedLoop {
    target: f64,
    identity: f64,
    events: usize,
    truth: usize,
}

fn closed_loop_run(script: &ScenarioScript, dir: &Path) -> Result<ClosedLoop, String> {
    let cfg = script.generate(11).map_err(|e| e.to_string())?.write_to(dir).map_err(|e| e.to_string())?;
    run_session(&cfg).map_err(|e| e.to_string())?;
    let events = gazetrace::io::read_events(&cfg.output.join(EVENTS_FILE)).map_err(|e| e.to_string())?;
    let truth = read_ground_truth(&dir.join("ground_truth.jsonl")).map_err(|e| e.to_string())?;
    let a = score_events(&events, &truth);
    Ok(ClosedLoop { target: a.target_accuracy(), identity: a.identity_accuracy(), events: a.events, truth: a.ground_truth })
}

fn closed_loop() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plain = closed_loop_run(&ScenarioScript::classroom(false), &tmp.path().join("plain"))?;
    let occluded = closed_loop_run(&ScenarioScript::classroom(true), &tmp.path().join("occluded"))?;
    let elapsed = start.elapsed();
    for (name, c) in [("continuous", &plain), ("occluded", &occluded)] {
        ensure(c.target >= 0.99, || format!("{name}: target accuracy {:.4}", c.target))?;
        ensure(c.identity >= 0.99, || format!("{name}: identity accuracy {:.4}", c.identity))?;
    }
    within(elapsed, 120.0, "closed loop")?;
    Ok(format!(
        "continuous: targets {:.2}% / identities {:.2}% ({} of {} samples); with occlusion re-entry: targets {:.2}% / identities {:.2}% ({} of {}); {:.2} s",
        100.0 * plain.target,
        100.0 * plain.identity,
        plain.events,
        plain.truth,
        100.0 * occluded.target,
        100.0 * occluded.identity,
        occluded.events,
        occluded.truth,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

const LABELS: [Option<&str>; 6] = [None, Some("DISPLAY"), Some("T"), Some("S1"), Some("S2"), Some("WALL")];

/// Random stream with integer-millisecond timestamps and durations.
fn ms_stream(r: &mut ChaCha8Rng) -> Vec<(String, i64, i64, Option<String>)> {
    let observers = r.gen_range(1..=4);
    let n = r.gen_range(1..400);
    let horizon = r.gen_range(1_000..60_000);
    let offset = r.gen_range(0..5_000);
    let mut v: Vec<_> = (0..n)
        .map(|_| {
            (
                format!("O{}", r.gen_range(0..observers)),
                offset + r.gen_range(0..horizon),
                r.gen_range(10..3_000),
                LABELS[r.gen_range(0..LABELS.len())].map(str::to_string),
            )
        })
        .collect();
    v.sort_by_key(|e| e.1);
    v
}

fn to_events(stream: &[(String, i64, i64, Option<String>)]) -> Vec<GazeEvent> {
    stream
        .iter()
        .enumerate()
        .map(|(i, (o, ts, d, t))| GazeEvent {
            frame_index: i as u64,
            timestamp_s: *ts as f64 / 1000.0,
            detection_index: 0,
            observer: o.clone(),
            target: t.clone(),
            hit_point: None,
            t_min: None,
            duration_s: *d as f64 / 1000.0,
        })
        .collect()
}

/// Bucket-and-sum in exact millisecond arithmetic.
fn pool_oracle(stream: &[(String, i64, i64, Option<String>)], len: i64, thr: i64) -> Vec<(String, i64, Option<String>)> {
    let start = stream.iter().map(|e| e.1).min().unwrap();
    let end = stream.iter().map(|e| e.1 + e.2).max().unwrap();
    let count = ((end - start + len - 1) / len).max(1);
    let mut sums: BTreeMap<(String, i64), BTreeMap<String, i64>> = BTreeMap::new();
    let observers: BTreeSet<String> = stream.iter().map(|e| e.0.clone()).collect();
    for (o, ts, d, t) in stream {
        if let Some(t) = t {
            let b = ((ts - start) / len).min(count - 1);
            *sums.entry((o.clone(), b)).or_default().entry(t.clone()).or_insert(0) += d;
        }
    }
    let mut out = Vec::new();
    for o in observers {
        for b in 0..count {
            let label = sums.get(&(o.clone(), b)).and_then(|m| {
                let best = *m.values().max()?;
                let winner = m.iter().filter(|(_, &d)| d == best).map(|(l, _)| l).min()?;
                (best >= thr).then(|| winner.clone())
            });
            out.push((o.clone(), start + b * len, label));
        }
    }
    out
}

fn timeline_pooling() -> Outcome {
    let mut r = rng(7);
    let params = TimelineParams { interval_s: 5.0, threshold_s: 2.0 };
    let mut intervals = 0;
    for s in 0..1000 {
        let stream = ms_stream(&mut r);
        let events = to_events(&stream);
        let got = pool_timeline(&events, &params, None).map_err(|e| e.to_string())?;
        let want = pool_oracle(&stream, 5000, 2000);
        ensure(got.len() == want.len(), || format!("stream {s}: {} intervals, oracle {}", got.len(), want.len()))?;
        for (g, (o, start_ms, label)) in got.iter().zip(&want) {
            ensure(
                &g.participant_id == o && (g.start - *start_ms as f64 / 1000.0).abs() < 1e-9 && &g.label == label,
                || format!("stream {s}: {g:?} vs oracle ({o}, {start_ms} ms, {label:?})"),
            )?;
        }
        intervals += got.len();

        // pooling the pooled timeline again changes nothing
        let span = SessionSpan::of_events(&events).unwrap();
        let as_events: Vec<GazeEvent> = got
            .iter()
            .filter(|iv| iv.label.is_some())
            .map(|iv| GazeEvent {
                frame_index: 0,
                timestamp_s: iv.start,
                detection_index: 0,
                observer: iv.participant_id.clone(),
                target: iv.label.clone(),
                hit_point: None,
                t_min: None,
                duration_s: iv.length,
            })
            .collect();
        let again = pool_timeline(&as_events, &params, Some(span)).unwrap();
        let labelled = |v: &[gazetrace::analytics::TimelineInterval]| -> Vec<(String, i64, Option<String>)> {
            v.iter()
                .filter(|iv| iv.label.is_some())
                .map(|iv| (iv.participant_id.clone(), (iv.start * 1000.0).round() as i64, iv.label.clone()))
                .collect()
        };
        ensure(labelled(&again) == labelled(&got), || format!("stream {s}: re-pooling changed the timeline"))?;
    }

    // constant streams pool to themselves
    for s in 0..200 {
        let fps = [10.0, 25.0, 30.0, 60.0][s % 4];
        let secs = r.gen_range(5..120) as f64;
        let phase: f64 = r.gen_range(0.0..10.0);
        let n = (secs * fps) as usize;
        let events: Vec<GazeEvent> = (0..n)
            .map(|i| GazeEvent {
                frame_index: i as u64,
                timestamp_s: phase + i as f64 / fps,
                detection_index: 0,
                observer: "S1".into(),
                target: Some("DISPLAY".into()),
                hit_point: None,
                t_min: None,
                duration_s: 1.0 / fps,
            })
            .collect();
        let tl = pool_timeline(&events, &params, None).unwrap();
        let full = (secs / 5.0).floor() as usize;
        ensure(tl[..full].iter().all(|iv| iv.label.as_deref() == Some("DISPLAY")), || {
            format!("constant stream {s} ({secs} s at {fps} fps) did not pool to its label")
        })?;
    }
    Ok(format!("1000 random streams ({intervals} intervals) equal the millisecond oracle; re-pooling and constant streams are fixed points"))
}

// ---------------------------------------------------------------------------

fn network_conservation() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for s in 0..1000 {
        let events = to_events(&ms_stream(&mut r));
        let net = build_network(&events);
        let fixation: f64 = events.iter().filter(|e| e.target.is_some()).map(|e| e.duration_s).sum();
        let nodes: f64 = net.nodes.values().sum();
        let edges: f64 = net.edges.values().sum();
        worst = worst.max((nodes - edges).abs()).max((edges - fixation).abs());
        ensure((nodes - edges).abs() <= 1e-6 && (edges - fixation).abs() <= 1e-6, || {
            format!("set {s}: nodes {nodes}, edges {edges}, fixation {fixation}")
        })?;
        for (node, w) in &net.nodes {
            let incoming: f64 = net.edges.iter().filter(|((_, t), _)| t == node).map(|(_, w)| w).sum();
            ensure((w - incoming).abs() <= 1e-9, || format!("set {s}: node {node} weight {w} != incoming {incoming}"))?;
        }
        for e in &events {
            ensure(net.nodes.contains_key(&e.observer), || format!("set {s}: observer {} missing", e.observer))?;
        }
        let dot = to_dot(&net);
        let back = parse_dot(&dot).map_err(|e| format!("set {s}: {e}"))?;
        ensure(to_dot(&back) == dot, || format!("set {s}: DOT does not round-trip"))?;
    }
    Ok(format!("1000 event sets, max conservation error {worst:.1e}, DOT round-trips byte-identically"))
}

// ---------------------------------------------------------------------------

fn throughput() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = ScenarioScript::dense_classroom();
    let cfg = script.generate(12).map_err(|e| e.to_string())?.write_to(tmp.path()).map_err(|e| e.to_string())?;
    let static_tris: usize = script.statics.iter().map(|q| 2 * (q.subdivisions[0] * q.subdivisions[1]) as usize).sum();
    let start = Instant::now();
    let summary = run_session(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let fps = summary.frames as f64 / elapsed;
    let detail = format!(
        "{} frames, {} participants, {static_tris} static triangles, {} events in {elapsed:.2} s = {fps:.0} frames/s end to end ({} worker{}, {} cores available)",
        summary.frames,
        script.participants.len(),
        summary.events,
        summary.timings.workers,
        if summary.timings.workers == 1 { "" } else { "s" },
        std::thread::available_parallelism().map_or(1, |n| n.get())
    );
    ensure(script.participants.len() == 6 && static_tris >= 50_000, || format!("scenario too small: {detail}"))?;
    ensure(fps >= 100.0, || detail.clone())?;
    Ok(detail)
}

// ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = ScenarioScript::classroom(true);
    let mut outputs: Vec<HashMap<&str, Vec<u8>>> = Vec::new();
    let mut inputs = Vec::new();
    for run in 0..2 {
        let dir = tmp.path().join(format!("run{run}"));
        let mut cfg = script.generate(11).map_err(|e| e.to_string())?.write_to(&dir).map_err(|e| e.to_string())?;
        cfg.workers = Some(run + 1);
        run_session(&cfg).map_err(|e| e.to_string())?;
        inputs.push(fs::read(dir.join("frames.jsonl")).map_err(|e| e.to_string())?);
        outputs.push(ARTIFACTS.iter().map(|n| (*n, fs::read(cfg.output.join(n)).unwrap())).collect());
    }
    ensure(inputs[0] == inputs[1], || "generated inputs differ".into())?;
    let mut bytes = 0;
    for name in ARTIFACTS {
        ensure(outputs[0][name] == outputs[1][name], || format!("{name} differs between runs"))?;
        bytes += outputs[0][name].len();
    }
    Ok(format!("{} artifacts ({bytes} bytes) byte-identical across two runs (1 and 2 workers)", ARTIFACTS.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("geometry round trip", geometry_round_trip),
        ("ray-cast BVH equals brute-force scan", bvh_matches_scan),
        ("closest contact and self-exclusion", closest_contact),
        ("tracking optimality and partition", tracking_optimality),
        ("re-identification oracle", reid_oracle),
        ("closed-loop synthetic session", closed_loop),
        ("timeline pooling", timeline_pooling),
        ("attention network conservation", network_conservation),
        ("throughput", throughput),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
