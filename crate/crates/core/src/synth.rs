//! Synthetic makeup presentation attacks.
//!
//! A probe face (the attacker, no makeup) is warped onto the landmark shape
//! of a target reference face (with makeup) by a piecewise-affine map over a
//! Delaunay mesh, then the target's regional color statistics (lips, eye
//! surrounds, skin) are transferred onto it. Landmark-geometry quality gates
//! keep non-frontal faces and open mouths out of the pools.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result, RowError};
use crate::exec::Execution;
use crate::geometry::{
    align_face_with, eye_centers, normalize_landmarks, orient, to_u8, Affine2, ConvexPolygon,
    CropGeometry,
};
use crate::io;
use crate::model::{
    FaceSource, Label, LandmarkSet, PairRecord, Point, RasterImage, Split, BROWS, JAW, LEFT_EYE,
    LIPS, NOSE_TIP, RIGHT_EYE,
};

/// Minimum |area| of a mesh triangle.
const MIN_TRIANGLE_AREA: f64 = 1e-9;

/// Vertices and Delaunay triangles covering the crop.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

/// The four corners and four edge midpoints of a `width × height` frame whose
/// pixel centers run from 0 to `width − 1`.
pub fn boundary_points(width: usize, height: usize) -> [Point; 8] {
    let (w, h) = ((width - 1) as f64, (height - 1) as f64);
    [
        Point::new(0.0, 0.0),
        Point::new(w / 2.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, h / 2.0),
        Point::new(w, h),
        Point::new(w / 2.0, h),
        Point::new(0.0, h),
        Point::new(0.0, h / 2.0),
    ]
}

/// Delaunay triangulation of `points`; triangle indices refer to `points`.
pub fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    for (i, p) in points.iter().enumerate() {
        let handle = tri
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::DegenerateGeometry(format!("vertex {i}: {e:?}")))?;
        if handle.index() != i {
            return Err(Error::DegenerateGeometry(format!(
                "vertex {i} duplicates vertex {}",
                handle.index()
            )));
        }
    }
    let triangles: Vec<[usize; 3]> = tri
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    if triangles.is_empty() {
        return Err(Error::DegenerateGeometry(
            "points are collinear; no triangles".into(),
        ));
    }
    Ok(triangles)
}

/// Landmarks pulled one pixel inside the frame so the boundary points alone
/// form the hull.
fn clamp_into_frame(landmarks: &LandmarkSet, width: usize, height: usize) -> Vec<Point> {
    let (w, h) = ((width - 1) as f64, (height - 1) as f64);
    landmarks
        .points()
        .iter()
        .map(|p| Point::new(p.x.clamp(1.0, w - 1.0), p.y.clamp(1.0, h - 1.0)))
        .collect()
}

fn mesh_vertices(landmarks: &LandmarkSet, width: usize, height: usize) -> Vec<Point> {
    let mut v = clamp_into_frame(landmarks, width, height);
    v.extend_from_slice(&boundary_points(width, height));
    v
}

/// Delaunay mesh over the 68 landmarks plus the 8 boundary points.
pub fn delaunay_mesh(landmarks: &LandmarkSet, width: usize, height: usize) -> Result<TriangleMesh> {
    if width < 3 || height < 3 {
        return Err(Error::InvalidInput(format!(
            "crop {width}x{height} too small for a mesh"
        )));
    }
    let vertices = mesh_vertices(landmarks, width, height);
    let triangles = delaunay(&vertices)?;
    Ok(TriangleMesh {
        vertices,
        triangles,
    })
}

impl TriangleMesh {
    pub fn triangle(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }
}

/// Barycentric coordinates of `p` in triangle `tri`.
fn barycentric(p: Point, tri: &[Point; 3]) -> [f64; 3] {
    let area = orient(tri[0], tri[1], tri[2]);
    let w0 = orient(p, tri[1], tri[2]) / area;
    let w1 = orient(tri[0], p, tri[2]) / area;
    [w0, w1, 1.0 - w0 - w1]
}

/// Piecewise-affine correspondence between a target mesh and the same
/// topology laid over probe vertices.
#[derive(Debug, Clone)]
pub struct PiecewiseAffine {
    target: TriangleMesh,
    probe_vertices: Vec<Point>,
    /// Target triangle → probe triangle, per triangle.
    backward: Vec<Affine2>,
    /// Probe triangle → target triangle, per triangle.
    forward: Vec<Affine2>,
}

impl PiecewiseAffine {
    /// Build from landmark sets in the same `width × height` frame. Topology
    /// comes from the target mesh.
    pub fn new(
        probe: &LandmarkSet,
        target: &LandmarkSet,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let target_mesh = delaunay_mesh(target, width, height)?;
        let probe_vertices = mesh_vertices(probe, width, height);
        let mut backward = Vec::with_capacity(target_mesh.triangles.len());
        let mut forward = Vec::with_capacity(target_mesh.triangles.len());
        for (t, idx) in target_mesh.triangles.iter().enumerate() {
            let dst = target_mesh.triangle(t);
            let src = idx.map(|i| probe_vertices[i]);
            for (name, tri) in [("target", &dst), ("probe", &src)] {
                if orient(tri[0], tri[1], tri[2]).abs() / 2.0 < MIN_TRIANGLE_AREA {
                    return Err(Error::DegenerateGeometry(format!(
                        "degenerate {name} triangle {idx:?}"
                    )));
                }
            }
            backward.push(Affine2::from_triangles(dst, src).expect("non-degenerate"));
            forward.push(Affine2::from_triangles(src, dst).expect("non-degenerate"));
        }
        Ok(Self {
            target: target_mesh,
            probe_vertices,
            backward,
            forward,
        })
    }

    pub fn target_mesh(&self) -> &TriangleMesh {
        &self.target
    }

    fn locate(triangles: impl Iterator<Item = [Point; 3]>, p: Point) -> Option<usize> {
        let mut best = None;
        let mut best_min = -1e-9;
        for (t, tri) in triangles.enumerate() {
            let m = barycentric(p, &tri)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if m > best_min {
                best_min = m;
                best = Some(t);
            }
        }
        best
    }

    /// Target-frame point → probe-frame point.
    pub fn target_to_probe(&self, p: Point) -> Option<Point> {
        let t = Self::locate(
            (0..self.target.triangles.len()).map(|t| self.target.triangle(t)),
            p,
        )?;
        Some(self.backward[t].apply(p))
    }

    /// Probe-frame point → target-frame point.
    pub fn probe_to_target(&self, p: Point) -> Option<Point> {
        let probe_tris = self
            .target
            .triangles
            .iter()
            .map(|idx| idx.map(|i| self.probe_vertices[i]));
        // the probe mesh may fold; of the triangles containing p, take the
        // one p sits closest to the edge of, which for a vertex is incident
        let mut best: Option<(usize, f64)> = None;
        for (t, tri) in probe_tris.enumerate() {
            let m = barycentric(p, &tri)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if m >= -1e-9 && best.is_none_or(|(_, b)| m < b) {
                best = Some((t, m));
            }
        }
        let t = match best {
            Some((t, _)) => t,
            None => Self::locate(
                self.target
                    .triangles
                    .iter()
                    .map(|idx| idx.map(|i| self.probe_vertices[i])),
                p,
            )?,
        };
        Some(self.forward[t].apply(p))
    }

    /// Triangle index for every pixel center of the target frame.
    fn pixel_triangles(&self, width: usize, height: usize) -> Vec<u32> {
        const NONE: u32 = u32::MAX;
        let mut map = vec![NONE; width * height];
        for t in 0..self.target.triangles.len() {
            let tri = self.target.triangle(t);
            let (lo_x, hi_x) = span(tri.map(|p| p.x), width);
            let (lo_y, hi_y) = span(tri.map(|p| p.y), height);
            for y in lo_y..hi_y {
                for x in lo_x..hi_x {
                    let slot = &mut map[y * width + x];
                    if *slot != NONE {
                        continue;
                    }
                    let b = barycentric(Point::new(x as f64, y as f64), &tri);
                    if b.iter().all(|&w| w >= -1e-9) {
                        *slot = t as u32;
                    }
                }
            }
        }
        for (i, slot) in map.iter_mut().enumerate() {
            if *slot == NONE {
                let p = Point::new((i % width) as f64, (i / width) as f64);
                let tris = (0..self.target.triangles.len()).map(|t| self.target.triangle(t));
                *slot = Self::locate(tris, p).unwrap_or(0) as u32;
            }
        }
        map
    }
}

fn span(coords: [f64; 3], limit: usize) -> (usize, usize) {
    let lo = coords
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .floor()
        .max(0.0) as usize;
    let hi = (coords
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil() as usize
        + 1)
    .min(limit);
    (lo.min(limit), hi)
}

/// Interpolate landmarks: `intensity = 0` keeps the probe shape, `1` gives
/// the target shape.
pub fn blend_landmarks(
    probe: &LandmarkSet,
    target: &LandmarkSet,
    intensity: f64,
) -> Result<LandmarkSet> {
    LandmarkSet::new(
        probe
            .points()
            .iter()
            .zip(target.points())
            .map(|(&p, &t)| p + (t - p) * intensity)
            .collect(),
    )
}

fn check_frame(landmarks: &LandmarkSet, image: &RasterImage, which: &str) -> Result<()> {
    let (w, h) = (image.width() as f64, image.height() as f64);
    let inside = landmarks
        .points()
        .iter()
        .all(|p| p.x > -w && p.x < 2.0 * w && p.y > -h && p.y < 2.0 * h);
    if inside {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{which} landmarks are not in the {}x{} canonical frame",
            image.width(),
            image.height()
        )))
    }
}

/// Warp `probe_img` so that its landmarks land on `target_lm`. Both landmark
/// sets must already be in the image's canonical frame.
pub fn warp_to_target(
    probe_img: &RasterImage,
    probe_lm: &LandmarkSet,
    target_lm: &LandmarkSet,
) -> Result<RasterImage> {
    warp_to_target_with(probe_img, probe_lm, target_lm, Execution::default())
}

pub fn warp_to_target_with(
    probe_img: &RasterImage,
    probe_lm: &LandmarkSet,
    target_lm: &LandmarkSet,
    exec: Execution,
) -> Result<RasterImage> {
    check_frame(probe_lm, probe_img, "probe")?;
    check_frame(target_lm, probe_img, "target")?;
    let (w, h) = (probe_img.width(), probe_img.height());
    let map = PiecewiseAffine::new(probe_lm, target_lm, w, h)?;
    let owner = map.pixel_triangles(w, h);
    let mut pixels = vec![0u8; w * h * 3];
    exec.for_each_chunk(&mut pixels, w * 3, |y, row| {
        for x in 0..w {
            let t = owner[y * w + x] as usize;
            let src = map.backward[t].apply(Point::new(x as f64, y as f64));
            let v = probe_img.sample_bilinear(src.x, src.y);
            for c in 0..3 {
                row[x * 3 + c] = to_u8(v[c]);
            }
        }
    });
    RasterImage::new(w, h, pixels)
}

/// Makeup regions as a per-pixel label map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Lips = 1,
    LeftEye = 2,
    RightEye = 3,
    Skin = 4,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Lips,
        Region::LeftEye,
        Region::RightEye,
        Region::Skin,
    ];

    fn from_code(c: u8) -> Option<Region> {
        Self::ALL.into_iter().find(|r| *r as u8 == c)
    }
}

/// Eye surround dilation, as a fraction of the inter-ocular distance.
pub const EYE_DILATION: f64 = 0.15;

/// Per-pixel region labels (`0` = outside every region). Regions are
/// disjoint by construction and contained in the face hull (jaw + brows).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl RegionMap {
    pub fn build(landmarks: &LandmarkSet, width: usize, height: usize) -> Result<Self> {
        let pts = landmarks.points();
        let hull = |range: std::ops::Range<usize>, name: &str| {
            ConvexPolygon::hull_of(&pts[range])
                .ok_or_else(|| Error::DegenerateGeometry(format!("{name} landmarks span no area")))
        };
        let mut face_pts = pts[JAW].to_vec();
        face_pts.extend_from_slice(&pts[BROWS]);
        let face = ConvexPolygon::hull_of(&face_pts)
            .ok_or_else(|| Error::DegenerateGeometry("face landmarks span no area".into()))?;
        let lips = hull(LIPS, "lip")?;
        let left = hull(LEFT_EYE, "left eye")?;
        let right = hull(RIGHT_EYE, "right eye")?;
        let (l, r) = eye_centers(landmarks);
        let radius = EYE_DILATION * l.distance(r);

        let mut labels = vec![0u8; width * height];
        for y in 0..height {
            for x in 0..width {
                let p = Point::new(x as f64, y as f64);
                if !face.contains(p) {
                    continue;
                }
                labels[y * width + x] = if lips.contains(p) {
                    Region::Lips
                } else if left.distance(p) <= radius {
                    Region::LeftEye
                } else if right.distance(p) <= radius {
                    Region::RightEye
                } else {
                    Region::Skin
                } as u8;
            }
        }
        let map = Self {
            width,
            height,
            labels,
        };
        for region in Region::ALL {
            if map.count(region) == 0 {
                return Err(Error::DegenerateGeometry(format!(
                    "empty {region:?} region mask"
                )));
            }
        }
        Ok(map)
    }

    pub fn region(&self, x: usize, y: usize) -> Option<Region> {
        Region::from_code(self.labels[y * self.width + x])
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&l| l == region as u8).count()
    }
}

/// Decorrelated log-LMS (lαβ) color space.
mod lab {
    const RGB_TO_LMS: [[f64; 3]; 3] = [
        [0.3811, 0.5783, 0.0402],
        [0.1967, 0.7244, 0.0782],
        [0.0241, 0.1288, 0.8444],
    ];

    fn invert(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let mut inv = [[0.0; 3]; 3];
        for (r, row) in inv.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                *v = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
            }
        }
        inv
    }

    fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
    }

    pub fn from_rgb(rgb: [u8; 3]) -> [f64; 3] {
        let lms = mul(&RGB_TO_LMS, rgb.map(f64::from)).map(|v| v.max(0.0).ln_1p());
        let (s3, s6, s2) = (3f64.sqrt(), 6f64.sqrt(), 2f64.sqrt());
        [
            (lms[0] + lms[1] + lms[2]) / s3,
            (lms[0] + lms[1] - 2.0 * lms[2]) / s6,
            (lms[0] - lms[1]) / s2,
        ]
    }

    pub fn to_rgb(lab: [f64; 3]) -> [f64; 3] {
        let (s3, s6, s2) = (3f64.sqrt(), 6f64.sqrt(), 2f64.sqrt());
        let (a, b, c) = (lab[0] / s3, lab[1] / s6, lab[2] / s2);
        let lms = [a + b + c, a + b - c, a - 2.0 * b].map(f64::exp_m1);
        mul(&invert(&RGB_TO_LMS), lms)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    mean: [f64; 3],
    sd: [f64; 3],
}

fn region_moments(image: &RasterImage, regions: &RegionMap, region: Region) -> Moments {
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    let mut n = 0.0;
    for (i, &label) in regions.labels.iter().enumerate() {
        if label != region as u8 {
            continue;
        }
        let v = lab::from_rgb(image.get(i % regions.width, i / regions.width));
        for c in 0..3 {
            sum[c] += v[c];
            sq[c] += v[c] * v[c];
        }
        n += 1.0;
    }
    let mean = sum.map(|s| s / n);
    let sd = [0, 1, 2].map(|c| (sq[c] / n - mean[c] * mean[c]).max(0.0).sqrt());
    Moments { mean, sd }
}

/// Match each makeup region of the probe to the target's per-channel mean and
/// standard deviation in lαβ space. Pixels outside every region are copied.
pub fn makeup_color_transfer(
    probe_img: &RasterImage,
    probe_lm: &LandmarkSet,
    target_img: &RasterImage,
    target_lm: &LandmarkSet,
) -> Result<RasterImage> {
    let (w, h) = (probe_img.width(), probe_img.height());
    let probe_regions = RegionMap::build(probe_lm, w, h)?;
    let target_regions = RegionMap::build(target_lm, target_img.width(), target_img.height())?;
    let stats: Vec<(Moments, Moments)> = Region::ALL
        .iter()
        .map(|&r| {
            (
                region_moments(probe_img, &probe_regions, r),
                region_moments(target_img, &target_regions, r),
            )
        })
        .collect();

    let mut out = probe_img.clone();
    for y in 0..h {
        for x in 0..w {
            let Some(region) = probe_regions.region(x, y) else {
                continue;
            };
            let (src, dst) = stats[region as usize - 1];
            let v = lab::from_rgb(probe_img.get(x, y));
            let mut moved = [0.0; 3];
            for c in 0..3 {
                let scale = if src.sd[c] > 1e-9 {
                    dst.sd[c] / src.sd[c]
                } else {
                    1.0
                };
                moved[c] = (v[c] - src.mean[c]) * scale + dst.mean[c];
            }
            out.set(x, y, lab::to_rgb(moved).map(to_u8));
        }
    }
    Ok(out)
}

/// Quality gate thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateThresholds {
    /// Maximum |d(nose tip, left jaw) − d(nose tip, right jaw)| / inter-ocular.
    pub max_yaw_asymmetry: f64,
    /// Maximum mean inner-lip gap / inter-ocular.
    pub max_lip_gap: f64,
    /// Half-width of the box normalized landmarks must lie in.
    pub landmark_bound: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self {
            max_yaw_asymmetry: 0.35,
            max_lip_gap: 0.10,
            landmark_bound: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateResult {
    pub pass: bool,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityGateReport {
    pub frontal_pose: GateResult,
    pub mouth_closed: GateResult,
    pub landmark_sanity: bool,
}

impl QualityGateReport {
    pub fn passed(&self) -> bool {
        self.frontal_pose.pass && self.mouth_closed.pass && self.landmark_sanity
    }
}

pub fn quality_gate(landmarks: &LandmarkSet, thresholds: &GateThresholds) -> QualityGateReport {
    let p = |i: usize| landmarks.get(i);
    let (l, r) = eye_centers(landmarks);
    let iod = l.distance(r);
    if iod <= 1e-9 {
        let fail = GateResult {
            pass: false,
            ratio: f64::MAX,
        };
        return QualityGateReport {
            frontal_pose: fail,
            mouth_closed: fail,
            landmark_sanity: false,
        };
    }
    let yaw = (p(NOSE_TIP).distance(p(0)) - p(NOSE_TIP).distance(p(16))).abs() / iod;
    let gap = [(61, 67), (62, 66), (63, 65)]
        .iter()
        .map(|&(a, b)| p(a).distance(p(b)))
        .sum::<f64>()
        / 3.0
        / iod;
    let bound = thresholds.landmark_bound;
    let sane = normalize_landmarks(landmarks)
        .map(|pts| pts.iter().all(|q| q.x.abs() <= bound && q.y.abs() <= bound))
        .unwrap_or(false);
    QualityGateReport {
        frontal_pose: GateResult {
            pass: yaw <= thresholds.max_yaw_asymmetry,
            ratio: yaw,
        },
        mouth_closed: GateResult {
            pass: gap <= thresholds.max_lip_gap,
            ratio: gap,
        },
        landmark_sanity: sane,
    }
}

/// Per-gate rejection counts for a pool.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateRejections {
    pub frontal_pose: usize,
    pub mouth_closed: usize,
    pub landmark_sanity: usize,
    /// Rows whose landmarks could not be read.
    pub unreadable: usize,
}

/// Keep pool rows whose landmarks (on the given side) pass every gate. A row
/// failing several gates is counted under each.
pub fn gate_pool(
    records: &[PairRecord],
    side: impl Fn(&PairRecord) -> &FaceSource,
    thresholds: &GateThresholds,
) -> (Vec<PairRecord>, GateRejections, usize) {
    let mut kept = Vec::new();
    let mut rej = GateRejections::default();
    let mut rejected = 0;
    for rec in records {
        let lm = side(rec).landmarks.as_ref().map(io::load_landmarks);
        let Some(Ok(lm)) = lm else {
            rej.unreadable += 1;
            rejected += 1;
            continue;
        };
        let report = quality_gate(&lm, thresholds);
        rej.frontal_pose += usize::from(!report.frontal_pose.pass);
        rej.mouth_closed += usize::from(!report.mouth_closed.pass);
        rej.landmark_sanity += usize::from(!report.landmark_sanity);
        if report.passed() {
            kept.push(rec.clone());
        } else {
            rejected += 1;
        }
    }
    (kept, rej, rejected)
}

/// Chosen (target index, probe index) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub with_replacement: bool,
}

/// Seeded random pairing of targets with probes of a different subject.
/// Draws without replacement while `count` fits in the cross product, with
/// replacement otherwise.
pub fn draw_pairings(
    target_subjects: &[&str],
    probe_subjects: &[&str],
    seed: u64,
    count: usize,
) -> Result<Pairing> {
    if target_subjects.is_empty() || probe_subjects.is_empty() {
        return Err(Error::InvalidInput(
            "target and probe pools must be non-empty".into(),
        ));
    }
    let candidates: Vec<(usize, usize)> = target_subjects
        .iter()
        .enumerate()
        .flat_map(|(t, ts)| {
            probe_subjects
                .iter()
                .enumerate()
                .filter(move |(_, ps)| *ps != ts)
                .map(move |(p, _)| (t, p))
        })
        .collect();
    if count == 0 {
        return Ok(Pairing {
            pairs: Vec::new(),
            with_replacement: false,
        });
    }
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "every target shares its subject with every probe".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count <= candidates.len() {
        let idx = rand::seq::index::sample(&mut rng, candidates.len(), count);
        Ok(Pairing {
            pairs: idx.iter().map(|i| candidates[i]).collect(),
            with_replacement: false,
        })
    } else {
        Ok(Pairing {
            pairs: (0..count)
                .map(|_| candidates[rng.random_range(0..candidates.len())])
                .collect(),
            with_replacement: true,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CorpusConfig {
    pub seed: u64,
    pub count: usize,
    pub crop: CropGeometry,
    /// 1 = full target shape, 0 = no warp.
    pub warp_intensity: f64,
    pub split: Split,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            count: 0,
            crop: CropGeometry::default(),
            warp_intensity: 1.0,
            split: Split::Train,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusSummary {
    pub manifest: PathBuf,
    pub attacks: usize,
    pub bona_fide: usize,
    pub with_replacement: bool,
}

struct AlignedInput {
    image: RasterImage,
    landmarks: LandmarkSet,
}

fn load_aligned(src: &FaceSource, crop: &CropGeometry) -> Result<AlignedInput> {
    let (Some(img), Some(lm)) = (&src.image, &src.landmarks) else {
        return Err(Error::InvalidInput("image and landmarks required".into()));
    };
    let image = io::load_ppm(img)?;
    let landmarks = io::load_landmarks(lm)?;
    let aligned = align_face_with(&image, &landmarks, crop, Execution::Sequential)?;
    let landmarks = landmarks.map(|p| aligned.transform.apply(p))?;
    Ok(AlignedInput {
        image: aligned.image,
        landmarks,
    })
}

fn absolute(src: &FaceSource) -> FaceSource {
    let abs = |p: &Option<PathBuf>| {
        p.as_ref()
            .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.clone()))
    };
    FaceSource {
        image: abs(&src.image),
        landmarks: abs(&src.landmarks),
        embedding: abs(&src.embedding),
    }
}

/// Generate synthetic attacks into `out_dir`: for each drawn pair, align
/// both faces, warp the probe onto the target's shape, transfer the target's
/// regional colors, and emit an attack row against the target's reference.
/// Every probe-pool row is copied as a bona fide pair.
pub fn generate_corpus(
    targets: &[PairRecord],
    probes: &[PairRecord],
    config: &CorpusConfig,
    out_dir: &Path,
    exec: Execution,
) -> Result<CorpusSummary> {
    let target_subjects: Vec<&str> = targets.iter().map(|r| r.subject.as_str()).collect();
    let probe_subjects: Vec<&str> = probes.iter().map(|r| r.subject.as_str()).collect();
    let pairing = draw_pairings(&target_subjects, &probe_subjects, config.seed, config.count)?;

    // align each pool face once
    let used_targets: BTreeMap<usize, ()> = pairing.pairs.iter().map(|&(t, _)| (t, ())).collect();
    let used_probes: BTreeMap<usize, ()> = pairing.pairs.iter().map(|&(_, p)| (p, ())).collect();
    let load_side = |records: &[PairRecord], used: &BTreeMap<usize, ()>, probe_side: bool| {
        let idx: Vec<usize> = used.keys().copied().collect();
        let loaded = exec.map(&idx, |&i| {
            let src = if probe_side {
                &records[i].probe
            } else {
                &records[i].reference
            };
            load_aligned(src, &config.crop).map_err(|e| RowError {
                pair_id: records[i].pair_id.clone(),
                message: e.to_string(),
            })
        });
        let mut ok = BTreeMap::new();
        let mut errs = Vec::new();
        for (i, r) in idx.into_iter().zip(loaded) {
            match r {
                Ok(v) => {
                    ok.insert(i, v);
                }
                Err(e) => errs.push(e),
            }
        }
        (ok, errs)
    };
    let (aligned_targets, mut errors) = load_side(targets, &used_targets, false);
    let (aligned_probes, probe_errors) = load_side(probes, &used_probes, true);
    errors.extend(probe_errors);
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }

    let generated = exec.map(
        &pairing.pairs,
        |&(t, p)| -> Result<(RasterImage, LandmarkSet)> {
            let target = &aligned_targets[&t];
            let probe = &aligned_probes[&p];
            let shape =
                blend_landmarks(&probe.landmarks, &target.landmarks, config.warp_intensity)?;
            let warped = warp_to_target_with(
                &probe.image,
                &probe.landmarks,
                &shape,
                Execution::Sequential,
            )?;
            let image = makeup_color_transfer(&warped, &shape, &target.image, &target.landmarks)?;
            Ok((image, shape))
        },
    );

    let mut records = Vec::with_capacity(pairing.pairs.len() + probes.len());
    let mut row_errors = Vec::new();
    for (i, (&(t, p), result)) in pairing.pairs.iter().zip(generated).enumerate() {
        let pair_id = format!("atk{i:05}__{}__{}", targets[t].subject, probes[p].subject);
        let (image, landmarks) = match result {
            Ok(v) => v,
            Err(e) => {
                row_errors.push(RowError {
                    pair_id,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let img_rel = PathBuf::from(format!("attacks/atk{i:05}.ppm"));
        let lm_rel = PathBuf::from(format!("attacks/atk{i:05}.txt"));
        io::write_ppm(out_dir.join(&img_rel), &image)?;
        io::write_landmarks(out_dir.join(&lm_rel), &landmarks)?;
        records.push(PairRecord {
            pair_id,
            reference: absolute(&targets[t].reference),
            probe: FaceSource {
                image: Some(img_rel),
                landmarks: Some(lm_rel),
                embedding: None,
            },
            label: Label::Attack,
            split: config.split,
            subject: probes[p].subject.clone(),
        });
    }
    if !row_errors.is_empty() {
        return Err(Error::Rows(row_errors));
    }
    let attacks = records.len();
    for rec in probes {
        records.push(PairRecord {
            reference: absolute(&rec.reference),
            probe: absolute(&rec.probe),
            label: Label::BonaFide,
            split: config.split,
            ..rec.clone()
        });
    }

    let comments = vec![
        format!("seed={}", config.seed),
        format!("attacks={attacks}"),
        format!("bona_fide={}", probes.len()),
        format!("target_pool={}", targets.len()),
        format!("probe_pool={}", probes.len()),
        format!("with_replacement={}", pairing.with_replacement),
        format!("warp_intensity={}", config.warp_intensity),
        "attack probes are paired with the target's supplied reference image".to_string(),
    ];
    let manifest = out_dir.join("manifest.csv");
    io::write_manifest(&manifest, &comments, &records)?;
    Ok(CorpusSummary {
        manifest,
        attacks,
        bona_fide: probes.len(),
        with_replacement: pairing.with_replacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn incircle_violations(mesh: &TriangleMesh) -> usize {
        let mut bad = 0;
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle(t);
            // circumcircle
            let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
            let sq = |p: Point| p.x * p.x + p.y * p.y;
            let ux = (sq(a) * (b.y - c.y) + sq(b) * (c.y - a.y) + sq(c) * (a.y - b.y)) / d;
            let uy = (sq(a) * (c.x - b.x) + sq(b) * (a.x - c.x) + sq(c) * (b.x - a.x)) / d;
            let center = Point::new(ux, uy);
            let r = center.distance(a);
            for (i, &v) in mesh.vertices.iter().enumerate() {
                if mesh.triangles[t].contains(&i) {
                    continue;
                }
                if center.distance(v) < r * (1.0 - 1e-9) {
                    bad += 1;
                }
            }
        }
        bad
    }

    #[test]
    fn mesh_obeys_euler_count_and_empty_circumcircles() {
        let crop = CropGeometry::square(224);
        let lm =
            synthetic::render_face(&synthetic::SubjectStyle::random(1, false), &crop, 3).landmarks;
        let mesh = delaunay_mesh(&lm, 224, 224).unwrap();
        assert_eq!(mesh.vertices.len(), 76);
        // all 8 boundary points are on the hull, landmarks strictly inside
        assert_eq!(mesh.triangles.len(), 2 * 76 - 2 - 8);
        assert_eq!(incircle_violations(&mesh), 0);
        for t in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle(t);
            assert!(orient(a, b, c).abs() / 2.0 > MIN_TRIANGLE_AREA);
        }
    }

    #[test]
    fn square_corners_give_two_triangles() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert_eq!(delaunay(&sq).unwrap().len(), 2);
    }

    #[test]
    fn duplicate_and_collinear_vertices_rejected() {
        let dup = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(matches!(delaunay(&dup), Err(Error::DegenerateGeometry(_))));
        let line: Vec<Point> = (0..5)
            .map(|i| Point::new(i as f64, 2.0 * i as f64))
            .collect();
        assert!(matches!(delaunay(&line), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn self_warp_is_identity() {
        let crop = CropGeometry::square(96);
        let img = synthetic::smooth_pattern(96, 96, 5);
        let lm = synthetic::template_landmarks(&crop);
        let out = warp_to_target(&img, &lm, &lm).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn warp_translates_features_with_landmarks() {
        // dark 8x8 squares centered on each eye; target landmarks moved +10px in x
        let crop = CropGeometry::square(128);
        let lm = synthetic::template_landmarks(&crop);
        let (l, r) = eye_centers(&lm);
        let img = RasterImage::from_fn(128, 128, |x, y| {
            let p = Point::new(x as f64, y as f64);
            let near = |c: Point| (p.x - c.x).abs() <= 4.0 && (p.y - c.y).abs() <= 4.0;
            if near(l) || near(r) {
                [0, 0, 0]
            } else {
                [200, 200, 200]
            }
        })
        .unwrap();
        let moved = lm.map(|p| Point::new(p.x + 10.0, p.y)).unwrap();
        let out = warp_to_target(&img, &lm, &moved).unwrap();
        let dark_centroid = |image: &RasterImage, left: bool| {
            let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
            for y in 0..128 {
                for x in 0..128 {
                    let is_left = (x as f64) < 64.0 + if left { 0.0 } else { 10.0 };
                    if image.get(x, y)[0] < 100 && is_left == left {
                        sx += x as f64;
                        sy += y as f64;
                        n += 1.0;
                    }
                }
            }
            Point::new(sx / n, sy / n)
        };
        for left in [true, false] {
            let before = dark_centroid(&img, left);
            let after = dark_centroid(&out, left);
            assert!(
                (after.x - before.x - 10.0).abs() < 1.0,
                "{before:?} -> {after:?}"
            );
            assert!((after.y - before.y).abs() < 1.0);
        }
    }

    #[test]
    fn piecewise_map_sends_probe_landmarks_to_target() {
        let crop = CropGeometry::square(160);
        let probe =
            synthetic::render_face(&synthetic::SubjectStyle::random(2, false), &crop, 1).landmarks;
        let target =
            synthetic::render_face(&synthetic::SubjectStyle::random(8, true), &crop, 4).landmarks;
        let map = PiecewiseAffine::new(&probe, &target, 160, 160).unwrap();
        for (p, t) in probe.points().iter().zip(target.points()) {
            let q = map.probe_to_target(*p).unwrap();
            assert!(q.distance(*t) < 0.5, "{p:?} -> {q:?}, want {t:?}");
            let back = map.target_to_probe(*t).unwrap();
            assert!(back.distance(*p) < 0.5);
        }
    }

    #[test]
    fn region_masks_are_disjoint_and_inside_face() {
        let crop = CropGeometry::square(128);
        let lm = synthetic::template_landmarks(&crop);
        let regions = RegionMap::build(&lm, 128, 128).unwrap();
        let mut face_pts = lm.points()[JAW].to_vec();
        face_pts.extend_from_slice(&lm.points()[BROWS]);
        let face = ConvexPolygon::hull_of(&face_pts).unwrap();
        for y in 0..128 {
            for x in 0..128 {
                if regions.region(x, y).is_some() {
                    assert!(face.contains(Point::new(x as f64, y as f64)));
                }
            }
        }
        for r in Region::ALL {
            assert!(regions.count(r) > 0, "{r:?}");
        }
    }

    #[test]
    fn self_transfer_is_identity_and_outside_untouched() {
        let crop = CropGeometry::square(128);
        let face = synthetic::render_face(&synthetic::SubjectStyle::random(6, true), &crop, 2);
        let out = makeup_color_transfer(&face.image, &face.landmarks, &face.image, &face.landmarks)
            .unwrap();
        let max = face
            .image
            .pixels()
            .iter()
            .zip(out.pixels())
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap();
        assert!(max <= 1, "max diff {max}");

        let other = synthetic::render_face(&synthetic::SubjectStyle::random(9, true), &crop, 5);
        let out =
            makeup_color_transfer(&face.image, &face.landmarks, &other.image, &other.landmarks)
                .unwrap();
        let regions = RegionMap::build(&face.landmarks, 128, 128).unwrap();
        for y in 0..128 {
            for x in 0..128 {
                if regions.region(x, y).is_none() {
                    assert_eq!(out.get(x, y), face.image.get(x, y));
                }
            }
        }
    }

    #[test]
    fn constant_lip_color_is_transferred() {
        let crop = CropGeometry::square(128);
        let lm = synthetic::template_landmarks(&crop);
        let regions = RegionMap::build(&lm, 128, 128).unwrap();
        let lip_color = [200u8, 40, 80];
        let target = RasterImage::from_fn(128, 128, |x, y| match regions.region(x, y) {
            Some(Region::Lips) => lip_color,
            _ => [180, 150, 120],
        })
        .unwrap();
        let probe = synthetic::smooth_pattern(128, 128, 77);
        let out = makeup_color_transfer(&probe, &lm, &target, &lm).unwrap();
        let mut sum = [0.0; 3];
        let n = regions.count(Region::Lips) as f64;
        for y in 0..128 {
            for x in 0..128 {
                if regions.region(x, y) == Some(Region::Lips) {
                    let p = out.get(x, y);
                    for c in 0..3 {
                        sum[c] += p[c] as f64;
                    }
                }
            }
        }
        for c in 0..3 {
            assert!(
                (sum[c] / n - lip_color[c] as f64).abs() <= 1.0,
                "channel {c}: {}",
                sum[c] / n
            );
        }
    }

    fn with_points(base: &LandmarkSet, edits: &[(usize, Point)]) -> LandmarkSet {
        let mut pts = base.points().to_vec();
        for &(i, p) in edits {
            pts[i] = p;
        }
        LandmarkSet::new(pts).unwrap()
    }

    #[test]
    fn quality_gate_examples() {
        let crop = CropGeometry::square(224);
        let lm = synthetic::template_landmarks(&crop);
        let g = GateThresholds::default();
        let report = quality_gate(&lm, &g);
        assert!(report.passed());
        assert!(report.frontal_pose.ratio < 1e-9);

        let iod = 0.3 * 224.0;
        // open the mouth: inner lower lip 0.2 IOD below the upper lip
        let open = with_points(
            &lm,
            &[61, 62, 63].map(|i| {
                let up = lm.get(i);
                let low = match i {
                    61 => 67,
                    62 => 66,
                    _ => 65,
                };
                (low, Point::new(up.x, up.y + 0.2 * iod))
            }),
        );
        let report = quality_gate(&open, &g);
        assert!(!report.mouth_closed.pass);
        assert!((report.mouth_closed.ratio - 0.2).abs() < 1e-9);

        // push the left jaw point outward so the asymmetry is 0.5 IOD
        let nose = lm.get(NOSE_TIP);
        let j0 = lm.get(0);
        let dir = (j0 - nose) * (1.0 / j0.distance(nose));
        let turned = with_points(&lm, &[(0, j0 + dir * (0.5 * iod))]);
        let report = quality_gate(&turned, &g);
        assert!(!report.frontal_pose.pass);
        assert!((report.frontal_pose.ratio - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pairing_is_seeded_and_avoids_same_subject() {
        let targets = ["a", "b", "c"];
        let probes = ["a", "x"];
        let p1 = draw_pairings(&targets, &probes, 9, 4).unwrap();
        let p2 = draw_pairings(&targets, &probes, 9, 4).unwrap();
        assert_eq!(p1, p2);
        assert!(!p1.with_replacement);
        for &(t, p) in &p1.pairs {
            assert_ne!(targets[t], probes[p]);
        }
        let many = draw_pairings(&targets, &probes, 9, 50).unwrap();
        assert!(many.with_replacement);
        assert_eq!(many.pairs.len(), 50);
        assert!(draw_pairings(&targets, &probes, 9, 0)
            .unwrap()
            .pairs
            .is_empty());
        assert!(draw_pairings(&["a"], &["a"], 1, 1).is_err());
        assert!(draw_pairings(&[], &["a"], 1, 1).is_err());
    }
}
