//! Deterministic synthetic ToF scene generator.
//!
//! Scenes are fronto-parallel rectangles and discs on piecewise-linear
//! trajectories, rendered through the pinhole model with intensity
//! following the inverse-square law I = rho * c / d^2 (c fixed so that
//! I = 1 at 1 m for rho = 1). Every frame comes with per-pixel identity
//! labels and per-object ground-truth statistics.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{CameraIntrinsics, Frame, Point3};
use crate::pgm;
use crate::{Error, Result};

/// Intensity scale: I = reflectivity * INTENSITY_SCALE / d^2.
pub const INTENSITY_SCALE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Axis-aligned rectangle in the object plane, half extents in meters.
    Rect { half_w: f64, half_h: f64 },
    /// Disc in the object plane, radius in meters.
    Disc { radius: f64 },
}

impl Shape {
    #[inline]
    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            Shape::Rect { half_w, half_h } => dx.abs() <= half_w && dy.abs() <= half_h,
            Shape::Disc { radius } => dx * dx + dy * dy <= radius * radius,
        }
    }
}

/// A fronto-parallel scene element with a piecewise-linear trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    pub reflectivity: f64,
    pub identity: u16,
    /// (frame, center position) keyframes, ascending by frame; positions
    /// are clamped to the keyframe domain.
    pub keyframes: Vec<(u32, Point3)>,
    /// First frame the object is present.
    pub appear: u32,
}

impl SceneObject {
    pub fn fixed(shape: Shape, reflectivity: f64, identity: u16, pos: Point3) -> Self {
        SceneObject { shape, reflectivity, identity, keyframes: vec![(0, pos)], appear: 0 }
    }

    /// Center position at the given frame, None before `appear`.
    pub fn position(&self, frame: u32) -> Option<Point3> {
        if frame < self.appear {
            return None;
        }
        let kfs = &self.keyframes;
        if frame <= kfs[0].0 {
            return Some(kfs[0].1);
        }
        for pair in kfs.windows(2) {
            let (f0, p0) = pair[0];
            let (f1, p1) = pair[1];
            if frame <= f1 {
                let t = (frame - f0) as f64 / (f1 - f0) as f64;
                return Some(Point3::new(
                    p0.x + t * (p1.x - p0.x),
                    p0.y + t * (p1.y - p0.y),
                    p0.z + t * (p1.z - p0.z),
                ));
            }
        }
        Some(kfs[kfs.len() - 1].1)
    }
}

/// Sensor noise model; depth noise is absolute (meters), intensity
/// noise is relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub depth_sigma: f64,
    pub intensity_rel_sigma: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        // small enough that phi spread per surface stays well below the
        // merge threshold, keeping the clustering premise intact
        NoiseParams { depth_sigma: 0.0005, intensity_rel_sigma: 0.001 }
    }
}

impl NoiseParams {
    pub fn none() -> Self {
        NoiseParams { depth_sigma: 0.0, intensity_rel_sigma: 0.0 }
    }
}

/// Per-object ground truth of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtObject {
    pub identity: u16,
    pub pixel_count: u32,
    /// Centroid of the noise-free 3D points of the object's visible pixels.
    pub centroid: Point3,
    /// Mean noise-free radial distance over the visible pixels.
    pub mean_d: f64,
}

/// Ground-truth identity labels plus per-object statistics for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFrame {
    pub labels: Vec<u16>,
    pub objects: Vec<GtObject>,
}

impl GroundTruthFrame {
    pub fn object(&self, identity: u16) -> Option<&GtObject> {
        self.objects.iter().find(|o| o.identity == identity)
    }
}

/// The default sensor: 204x204 pixels, mid-range field of view.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics { width: 204, height: 204, fx: 220.0, fy: 220.0, cx: 102.0, cy: 102.0 }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Renders one frame: per pixel the nearest intersected object sets the
/// radial distance and inverse-square intensity; the seeded noise stream
/// is fixed per (seed, frame_index).
pub fn render_frame(
    objects: &[SceneObject],
    intrinsics: &CameraIntrinsics,
    noise: &NoiseParams,
    seed: u64,
    frame_index: u32,
) -> (Frame, GroundTruthFrame) {
    let (w, h) = (intrinsics.width as usize, intrinsics.height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index as u64 + 1);

    let active: Vec<(usize, Point3)> = objects
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.position(frame_index).map(|p| (i, p)))
        .collect();

    let mut distance = vec![0.0f64; w * h];
    let mut intensity = vec![0.0f64; w * h];
    let mut labels = vec![0u16; w * h];
    #[derive(Default, Clone)]
    struct Acc {
        n: u32,
        sx: f64,
        sy: f64,
        sz: f64,
        sd: f64,
    }
    let mut acc = vec![Acc::default(); objects.len()];

    for v in 0..h {
        for u in 0..w {
            let rx = (u as f64 - intrinsics.cx) / intrinsics.fx;
            let ry = (v as f64 - intrinsics.cy) / intrinsics.fy;
            let rnorm = (rx * rx + ry * ry + 1.0).sqrt();

            let mut hit: Option<(usize, Point3)> = None;
            for &(oi, pos) in &active {
                let px = rx * pos.z;
                let py = ry * pos.z;
                if objects[oi].shape.contains(px - pos.x, py - pos.y)
                    && hit.map_or(true, |(_, hp)| pos.z < hp.z)
                {
                    hit = Some((oi, Point3::new(px, py, pos.z)));
                }
            }
            let Some((oi, p)) = hit else { continue };

            let idx = v * w + u;
            let d_true = p.z * rnorm;
            let i_true = objects[oi].reflectivity * INTENSITY_SCALE / (d_true * d_true);
            let mut d = d_true;
            let mut i = i_true;
            if noise.depth_sigma > 0.0 {
                d += noise.depth_sigma * normal(&mut rng);
            }
            if noise.intensity_rel_sigma > 0.0 {
                i *= 1.0 + noise.intensity_rel_sigma * normal(&mut rng);
            }
            distance[idx] = d.max(1e-6);
            intensity[idx] = i.max(0.0);
            labels[idx] = objects[oi].identity;
            let a = &mut acc[oi];
            a.n += 1;
            a.sx += p.x;
            a.sy += p.y;
            a.sz += p.z;
            a.sd += d_true;
        }
    }

    let gt_objects = objects
        .iter()
        .enumerate()
        .filter(|(_, o)| o.position(frame_index).is_some())
        .map(|(oi, o)| {
            let a = &acc[oi];
            let n = a.n.max(1) as f64;
            GtObject {
                identity: o.identity,
                pixel_count: a.n,
                centroid: Point3::new(a.sx / n, a.sy / n, a.sz / n),
                mean_d: a.sd / n,
            }
        })
        .collect();

    let frame = Frame { intrinsics: *intrinsics, distance, intensity, frame_index };
    (frame, GroundTruthFrame { labels, objects: gt_objects })
}

/// Ground-truth identities of the two tracked hands in every scenario.
pub const HAND1_ID: u16 = 1;
pub const HAND2_ID: u16 = 2;

pub fn scenario_names() -> &'static [&'static str] {
    &[
        "static-two-hands",
        "back-forth",
        "crossing-safe",
        "crossing-contact",
        "third-hand",
        "sleeve",
        "sleeve-leather",
    ]
}

const HAND_RADIUS: f64 = 0.07;
const HAND_RHO: f64 = 1.0;

fn hand(identity: u16, keyframes: Vec<(u32, Point3)>) -> SceneObject {
    SceneObject {
        shape: Shape::Disc { radius: HAND_RADIUS },
        reflectivity: HAND_RHO,
        identity,
        keyframes,
        appear: 0,
    }
}

fn scenario_objects(name: &str) -> Option<(Vec<SceneObject>, u32)> {
    let p = Point3::new;
    match name {
        "static-two-hands" => Some((
            vec![
                hand(HAND1_ID, vec![(0, p(-0.15, 0.0, 0.80))]),
                hand(HAND2_ID, vec![(0, p(0.15, 0.0, 1.00))]),
            ],
            60,
        )),
        "back-forth" => Some((
            vec![
                hand(
                    HAND1_ID,
                    vec![
                        (0, p(-0.15, 0.0, 0.80)),
                        (30, p(-0.15, 0.0, 1.10)),
                        (60, p(-0.15, 0.0, 0.80)),
                        (90, p(-0.15, 0.0, 1.10)),
                        (120, p(-0.15, 0.0, 0.80)),
                    ],
                ),
                hand(
                    HAND2_ID,
                    vec![
                        (0, p(0.15, 0.0, 1.10)),
                        (30, p(0.15, 0.0, 0.80)),
                        (60, p(0.15, 0.0, 1.10)),
                        (90, p(0.15, 0.0, 0.80)),
                        (120, p(0.15, 0.0, 1.10)),
                    ],
                ),
            ],
            120,
        )),
        "crossing-safe" => Some((
            vec![
                // front hand crosses left to right at constant depth
                hand(
                    HAND1_ID,
                    vec![
                        (0, p(-0.20, 0.0, 0.85)),
                        (30, p(-0.20, 0.0, 0.85)),
                        (48, p(-0.005, 0.0, 0.85)),
                        (68, p(-0.005, 0.0, 0.85)),
                        (88, p(0.195, 0.0, 0.85)),
                        (120, p(0.195, 0.0, 0.85)),
                    ],
                ),
                // back hand keeps >= 0.15 m depth separation during the
                // cross, then closes in while hidden so reacquisition can
                // find it beside the front hand
                hand(
                    HAND2_ID,
                    vec![
                        (0, p(0.20, 0.0, 1.00)),
                        (30, p(0.20, 0.0, 1.00)),
                        (48, p(0.005, 0.0, 1.00)),
                        (50, p(0.005, 0.0, 1.00)),
                        (66, p(0.005, 0.0, 0.91)),
                        (68, p(0.005, 0.0, 0.91)),
                        (88, p(-0.195, 0.0, 0.91)),
                        (120, p(-0.195, 0.0, 0.91)),
                    ],
                ),
            ],
            120,
        )),
        "crossing-contact" => Some((
            vec![
                hand(
                    HAND1_ID,
                    vec![
                        (0, p(-0.20, 0.0, 0.85)),
                        (30, p(-0.20, 0.0, 0.85)),
                        (48, p(-0.04, 0.0, 0.85)),
                        (68, p(-0.04, 0.0, 0.85)),
                        (88, p(0.16, 0.0, 0.85)),
                        (120, p(0.16, 0.0, 0.85)),
                    ],
                ),
                // depth separation stays below t_z during the cross,
                // provoking the documented single-cluster failure
                hand(
                    HAND2_ID,
                    vec![
                        (0, p(0.20, 0.0, 1.00)),
                        (10, p(0.20, 0.0, 1.00)),
                        (30, p(0.20, 0.0, 0.865)),
                        (48, p(0.04, 0.0, 0.865)),
                        (68, p(0.04, 0.0, 0.865)),
                        (88, p(-0.16, 0.0, 0.865)),
                        (120, p(-0.16, 0.0, 0.865)),
                    ],
                ),
            ],
            120,
        )),
        "third-hand" => Some((
            vec![
                hand(HAND1_ID, vec![(0, p(-0.15, 0.0, 0.85))]),
                hand(HAND2_ID, vec![(0, p(0.15, 0.0, 1.00))]),
                SceneObject {
                    shape: Shape::Disc { radius: HAND_RADIUS },
                    reflectivity: HAND_RHO,
                    identity: 3,
                    keyframes: vec![
                        (30, p(0.0, 0.12, 1.30)),
                        (60, p(0.0, 0.12, 0.925)),
                        (90, p(0.0, 0.12, 0.75)),
                        (120, p(0.0, 0.12, 0.75)),
                    ],
                    appear: 30,
                },
            ],
            120,
        )),
        "sleeve" | "sleeve-leather" => {
            // skin-colored sweater vs leather jacket arm reflectivity
            let arm_rho = if name == "sleeve" { HAND_RHO } else { 0.35 };
            let arm = |identity, x| SceneObject::fixed(
                Shape::Rect { half_w: 0.05, half_h: 0.25 },
                arm_rho,
                identity,
                p(x, 0.32, 0.96),
            );
            Some((
                vec![
                    hand(HAND1_ID, vec![(0, p(-0.18, 0.02, 0.90))]),
                    hand(HAND2_ID, vec![(0, p(0.18, 0.02, 0.90))]),
                    arm(3, -0.18),
                    arm(4, 0.18),
                ],
                60,
            ))
        }
        _ => None,
    }
}

/// Renders a named scenario deterministically.
pub fn make_scenario(name: &str, seed: u64) -> Result<(Vec<Frame>, Vec<GroundTruthFrame>)> {
    make_scenario_with(name, seed, &NoiseParams::default())
}

pub fn make_scenario_with(
    name: &str,
    seed: u64,
    noise: &NoiseParams,
) -> Result<(Vec<Frame>, Vec<GroundTruthFrame>)> {
    let Some((objects, frame_count)) = scenario_objects(name) else {
        return Err(Error::UnknownScenario { name: name.to_string(), known: scenario_names().join(", ") });
    };
    let k = default_intrinsics();
    let mut frames = Vec::with_capacity(frame_count as usize);
    let mut gts = Vec::with_capacity(frame_count as usize);
    for i in 0..frame_count {
        let (f, gt) = render_frame(&objects, &k, noise, seed, i);
        frames.push(f);
        gts.push(gt);
    }
    Ok((frames, gts))
}

/// Writes the ground-truth sidecar: one 16-bit PGM identity map per
/// frame plus a CSV of per-frame object statistics.
pub fn write_ground_truth(dir: impl AsRef<Path>, width: usize, height: usize, gts: &[GroundTruthFrame]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut csv = std::io::BufWriter::new(fs::File::create(dir.join("gt.csv"))?);
    writeln!(csv, "frame,identity,pixel_count,centroid_x,centroid_y,centroid_z,mean_d")?;
    for (i, gt) in gts.iter().enumerate() {
        pgm::write_pgm16(dir.join(format!("gt_{i:04}.pgm")), width, height, &gt.labels)?;
        for o in &gt.objects {
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                i, o.identity, o.pixel_count, o.centroid.x, o.centroid.y, o.centroid.z, o.mean_d
            )?;
        }
    }
    csv.flush()?;
    Ok(())
}

/// Reads a sidecar written by [`write_ground_truth`].
pub fn read_ground_truth(dir: impl AsRef<Path>) -> Result<Vec<GroundTruthFrame>> {
    let dir = dir.as_ref();
    let file = fs::File::open(dir.join("gt.csv"))?;
    let mut per_frame: Vec<Vec<GtObject>> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Format { offset: lineno as u64, msg: format!("gt.csv line {}: expected 7 fields", lineno + 1) });
        }
        let bad = |what: &str| Error::Format { offset: lineno as u64, msg: format!("gt.csv line {}: bad {what}", lineno + 1) };
        let frame: usize = fields[0].parse().map_err(|_| bad("frame"))?;
        let obj = GtObject {
            identity: fields[1].parse().map_err(|_| bad("identity"))?,
            pixel_count: fields[2].parse().map_err(|_| bad("pixel_count"))?,
            centroid: Point3::new(
                fields[3].parse().map_err(|_| bad("centroid_x"))?,
                fields[4].parse().map_err(|_| bad("centroid_y"))?,
                fields[5].parse().map_err(|_| bad("centroid_z"))?,
            ),
            mean_d: fields[6].parse().map_err(|_| bad("mean_d"))?,
        };
        if per_frame.len() <= frame {
            per_frame.resize(frame + 1, Vec::new());
        }
        per_frame[frame].push(obj);
    }
    let mut gts = Vec::with_capacity(per_frame.len());
    for (i, objects) in per_frame.into_iter().enumerate() {
        let (_, _, labels) = pgm::read_pgm16(dir.join(format!("gt_{i:04}.pgm")))?;
        gts.push(GroundTruthFrame { labels, objects });
    }
    Ok(gts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneity::phi;

    #[test]
    fn plate_phi_constant_and_depth_invariant() {
        let k = default_intrinsics();
        // half extents scale with depth so both plates cover the same pixels
        let plate = |z: f64| SceneObject::fixed(Shape::Rect { half_w: 0.3 * z, half_h: 0.3 * z }, 1.0, 1, Point3::new(0.0, 0.0, z));
        let (f1, _) = render_frame(&[plate(1.0)], &k, &NoiseParams::none(), 0, 0);
        let (f2, _) = render_frame(&[plate(2.0)], &k, &NoiseParams::none(), 0, 0);
        let mut reference = None;
        for idx in 0..f1.distance.len() {
            if f1.distance[idx] > 0.0 {
                let p1 = phi(f1.distance[idx], f1.intensity[idx]).unwrap();
                let r = *reference.get_or_insert(p1);
                assert!((p1 - r).abs() < 1e-9);
                // intensity falls 4x, d doubles: same phi
                assert!(f2.distance[idx] > 0.0);
                let p2 = phi(f2.distance[idx], f2.intensity[idx]).unwrap();
                assert!((p2 - r).abs() < 1e-9);
            }
        }
        assert!(reference.is_some());
    }

    #[test]
    fn nearest_wins_matches_brute_force() {
        let k = CameraIntrinsics { width: 32, height: 32, fx: 32.0, fy: 32.0, cx: 16.0, cy: 16.0 };
        let a = SceneObject::fixed(Shape::Rect { half_w: 0.3, half_h: 0.2 }, 1.0, 1, Point3::new(-0.1, 0.0, 1.0));
        let b = SceneObject::fixed(Shape::Rect { half_w: 0.3, half_h: 0.2 }, 1.0, 2, Point3::new(0.1, 0.05, 1.5));
        let (_, gt) = render_frame(&[a.clone(), b.clone()], &k, &NoiseParams::none(), 0, 0);
        // independent per-pixel check against analytic rectangle intersection
        for v in 0..32 {
            for u in 0..32 {
                let rx = (u as f64 - 16.0) / 32.0;
                let ry = (v as f64 - 16.0) / 32.0;
                let in_a = (rx * 1.0 - (-0.1)).abs() <= 0.3 && (ry * 1.0 - 0.0).abs() <= 0.2;
                let in_b = (rx * 1.5 - 0.1).abs() <= 0.3 && (ry * 1.5 - 0.05).abs() <= 0.2;
                let expect = if in_a { 1 } else if in_b { 2 } else { 0 };
                assert_eq!(gt.labels[v * 32 + u], expect, "pixel ({u},{v})");
            }
        }
    }

    #[test]
    fn scenarios_are_deterministic() {
        let (f1, g1) = make_scenario("static-two-hands", 5).unwrap();
        let (f2, g2) = make_scenario("static-two-hands", 5).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(g1, g2);
        assert_eq!(f1.len(), 60);
    }

    #[test]
    fn unknown_scenario_lists_registry() {
        match make_scenario("nope", 0) {
            Err(Error::UnknownScenario { known, .. }) => assert!(known.contains("crossing-safe")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gt_labels_match_object_counts() {
        let (frames, gts) = make_scenario("static-two-hands", 1).unwrap();
        let gt = &gts[0];
        for identity in [HAND1_ID, HAND2_ID] {
            let count = gt.labels.iter().filter(|&&l| l == identity).count() as u32;
            assert_eq!(gt.object(identity).unwrap().pixel_count, count);
            assert!(count >= 200, "hand {identity} has only {count} px");
        }
        assert_eq!(frames[0].intrinsics.width, 204);
    }

    #[test]
    fn ground_truth_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (_, gts) = make_scenario("static-two-hands", 3).unwrap();
        let sample = &gts[..2];
        write_ground_truth(dir.path(), 204, 204, sample).unwrap();
        let back = read_ground_truth(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].labels, sample[0].labels);
        let a = back[0].object(HAND1_ID).unwrap();
        let b = sample[0].object(HAND1_ID).unwrap();
        assert_eq!(a.pixel_count, b.pixel_count);
        assert!((a.centroid.z - b.centroid.z).abs() < 1e-12);
    }
}
