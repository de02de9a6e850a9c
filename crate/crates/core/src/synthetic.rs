//! Deterministic synthetic inputs: a template face shape, rendered faces with
//! per-subject variation, smooth test patterns and labeled embedding worlds.
//! Used by the benches, the acceptance suite and for smoke-testing the CLI
//! without real face data.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::geometry::{segment_distance, Affine2, ConvexPolygon, CropGeometry};
use crate::io;
use crate::model::{
    Embedding, FaceSource, Label, LandmarkSet, PairRecord, Point, RasterImage, Split, BROWS, JAW,
    LEFT_EYE, LIPS, RIGHT_EYE,
};

/// Mean face in the eye frame (eye midpoint at the origin, inter-ocular
/// distance 1, y pointing down).
pub fn template_shape() -> Vec<Point> {
    let mut pts = Vec::with_capacity(68);
    // jaw 0-16: half ellipse from the left ear over the chin to the right ear
    for i in 0..17 {
        let t = PI * i as f64 / 16.0;
        pts.push(Point::new(-0.95 * t.cos(), 0.05 + 1.3 * t.sin()));
    }
    // brows 17-26
    for i in 0..5 {
        let u = i as f64 / 4.0;
        pts.push(Point::new(-0.85 + 0.7 * u, -0.28 - 0.08 * (PI * u).sin()));
    }
    for i in 0..5 {
        let u = i as f64 / 4.0;
        pts.push(Point::new(0.15 + 0.7 * u, -0.28 - 0.08 * (PI * u).sin()));
    }
    // nose bridge 27-30, lower nose 31-35
    for y in [0.1, 0.25, 0.4, 0.55] {
        pts.push(Point::new(0.0, y));
    }
    for (x, y) in [
        (-0.2, 0.65),
        (-0.1, 0.68),
        (0.0, 0.7),
        (0.1, 0.68),
        (0.2, 0.65),
    ] {
        pts.push(Point::new(x, y));
    }
    // eyes 36-47
    let eye = [
        (-0.22, 0.0),
        (-0.08, -0.07),
        (0.08, -0.07),
        (0.22, 0.0),
        (0.08, 0.07),
        (-0.08, 0.07),
    ];
    for cx in [-0.5, 0.5] {
        for (dx, dy) in eye {
            pts.push(Point::new(cx + dx, dy));
        }
    }
    // outer lips 48-59, inner lips 60-67
    #[rustfmt::skip]
    let lips = [
        (-0.4, 0.95), (-0.25, 0.88), (-0.1, 0.85), (0.0, 0.87), (0.1, 0.85), (0.25, 0.88),
        (0.4, 0.95), (0.25, 1.05), (0.1, 1.09), (0.0, 1.1), (-0.1, 1.09), (-0.25, 1.05),
        (-0.32, 0.95), (-0.12, 0.94), (0.0, 0.945), (0.12, 0.94),
        (0.32, 0.95), (0.12, 0.96), (0.0, 0.955), (-0.12, 0.96),
    ];
    for (x, y) in lips {
        pts.push(Point::new(x, y));
    }
    pts
}

/// Transform from the eye frame into a crop's canonical frame.
pub fn eye_frame_to_crop(crop: &CropGeometry) -> Affine2 {
    Affine2::similarity(
        (Point::new(-0.5, 0.0), Point::new(0.5, 0.0)),
        crop.eye_targets(),
    )
    .expect("crop eye anchors are distinct")
}

/// Template face placed in the canonical crop.
pub fn template_landmarks(crop: &CropGeometry) -> LandmarkSet {
    let t = eye_frame_to_crop(crop);
    LandmarkSet::new(template_shape().into_iter().map(|p| t.apply(p)).collect())
        .expect("template is finite")
}

/// Smooth RGB pattern (sums of low-frequency sinusoids). Bilinear resampling
/// of such images loses little, which the warp and alignment tests rely on.
pub fn smooth_pattern(width: usize, height: usize, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = [[0.0f64; 4]; 9];
    for w in waves.iter_mut() {
        let freq = rng.random_range(0.5..2.5) * 2.0 * PI / width.max(height) as f64;
        let angle: f64 = rng.random_range(0.0..2.0 * PI);
        *w = [
            freq * angle.cos(),
            freq * angle.sin(),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(15.0..30.0),
        ];
    }
    RasterImage::from_fn(width, height, |x, y| {
        let mut rgb = [0u8; 3];
        for (c, out) in rgb.iter_mut().enumerate() {
            let v: f64 = waves[c * 3..c * 3 + 3]
                .iter()
                .map(|w| w[3] * (w[0] * x as f64 + w[1] * y as f64 + w[2]).sin())
                .sum();
            *out = (128.0 + v).round().clamp(0.0, 255.0) as u8;
        }
        rgb
    })
    .expect("positive dimensions")
}

/// Appearance of one synthetic subject.
#[derive(Debug, Clone)]
pub struct SubjectStyle {
    pub shape: Vec<Point>,
    pub skin: [u8; 3],
    pub lips: [u8; 3],
    pub eye_shadow: Option<[u8; 3]>,
    pub background_seed: u64,
}

impl SubjectStyle {
    /// Draw a subject. `makeup` adds eye shadow and saturated lips.
    pub fn random(seed: u64, makeup: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_FACE);
        let width = rng.random_range(0.92..1.08);
        let jaw = rng.random_range(0.93..1.05);
        let eye_size = rng.random_range(0.85..1.2);
        let lip_width = rng.random_range(0.85..1.15);
        let jitter = Normal::new(0.0, 0.008).expect("valid sd");
        let shape = template_shape()
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut q = p;
                if JAW.contains(&i) {
                    q = Point::new(q.x * width, 0.05 + (q.y - 0.05) * jaw);
                } else if LEFT_EYE.contains(&i) || RIGHT_EYE.contains(&i) {
                    let c = Point::new(if q.x < 0.0 { -0.5 } else { 0.5 }, 0.0);
                    q = c + (q - c) * eye_size;
                } else if LIPS.contains(&i) {
                    q = Point::new(q.x * lip_width, q.y);
                }
                Point::new(q.x + jitter.sample(&mut rng), q.y + jitter.sample(&mut rng))
            })
            .collect();
        let skin: [u8; 3] = [
            rng.random_range(150..235),
            rng.random_range(110..190),
            rng.random_range(90..160),
        ];
        let lips = if makeup {
            [
                rng.random_range(170..230),
                rng.random_range(20..60),
                rng.random_range(50..110),
            ]
        } else {
            [
                skin[0].saturating_sub(25),
                skin[1].saturating_sub(45),
                skin[2].saturating_sub(35),
            ]
        };
        let eye_shadow = makeup.then(|| {
            [
                rng.random_range(60..140),
                rng.random_range(40..90),
                rng.random_range(90..170),
            ]
        });
        Self {
            shape,
            skin,
            lips,
            eye_shadow,
            background_seed: rng.random(),
        }
    }
}

/// A rendered face with its ground-truth landmarks.
#[derive(Debug, Clone)]
pub struct SyntheticFace {
    pub image: RasterImage,
    pub landmarks: LandmarkSet,
}

/// Render `style` into a `crop`-sized image. `capture_seed` adds a small
/// in-plane pose change (rotation, scale, shift) so two captures differ.
pub fn render_face(style: &SubjectStyle, crop: &CropGeometry, capture_seed: u64) -> SyntheticFace {
    let mut rng = ChaCha8Rng::seed_from_u64(
        capture_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ style.background_seed,
    );
    let angle: f64 = rng.random_range(-0.08..0.08);
    let scale: f64 = rng.random_range(0.94..1.04);
    let shift = Point::new(rng.random_range(-0.04..0.04), rng.random_range(-0.04..0.04));
    let (s, c) = angle.sin_cos();
    let pose = Affine2 {
        m: [
            [scale * c, -scale * s, shift.x],
            [scale * s, scale * c, shift.y],
        ],
    };
    let to_image = eye_frame_to_crop(crop).compose(&pose);
    let pts: Vec<Point> = style.shape.iter().map(|&p| to_image.apply(p)).collect();
    let landmarks = LandmarkSet::new(pts.clone()).expect("finite landmarks");

    let iod = Point::centroid(&pts[LEFT_EYE])
        .distance(Point::centroid(&pts[RIGHT_EYE]))
        .max(1.0);
    let mut face_pts: Vec<Point> = pts[JAW].to_vec();
    face_pts.extend_from_slice(&pts[BROWS]);
    // raise the brow line so the forehead is skin as well
    let lift = (pts[27] - pts[8]) * 0.2;
    face_pts.extend(pts[BROWS].iter().map(|&p| p + lift));
    let face = ConvexPolygon::hull_of(&face_pts).expect("face hull");
    let left_eye = ConvexPolygon::hull_of(&pts[LEFT_EYE]).expect("eye hull");
    let right_eye = ConvexPolygon::hull_of(&pts[RIGHT_EYE]).expect("eye hull");
    let lips = ConvexPolygon::hull_of(&pts[LIPS]).expect("lip hull");
    let mouth = ConvexPolygon::hull_of(&pts[60..68]);
    let left_center = Point::centroid(&pts[LEFT_EYE]);
    let right_center = Point::centroid(&pts[RIGHT_EYE]);

    let background = smooth_pattern(crop.width, crop.height, style.background_seed);
    let shade = smooth_pattern(crop.width, crop.height, style.background_seed ^ 0xABCD);
    let polyline_dist = |p: Point, idx: std::ops::Range<usize>| {
        idx.clone()
            .zip(idx.skip(1))
            .map(|(a, b)| segment_distance(p, pts[a], pts[b]))
            .fold(f64::INFINITY, f64::min)
    };

    let image = RasterImage::from_fn(crop.width, crop.height, |x, y| {
        let p = Point::new(x as f64, y as f64);
        if !face.contains(p) {
            return background.get(x, y);
        }
        let sh = shade.get(x, y);
        let tint = |base: [u8; 3], k: f64| -> [u8; 3] {
            let mut o = [0u8; 3];
            for ch in 0..3 {
                o[ch] = (base[ch] as f64 + k * (sh[ch] as f64 - 128.0))
                    .round()
                    .clamp(0.0, 255.0) as u8;
            }
            o
        };
        for (hull, center) in [(&left_eye, left_center), (&right_eye, right_center)] {
            if hull.contains(p) {
                return if p.distance(center) < 0.06 * iod {
                    [20, 15, 15]
                } else {
                    [235, 235, 230]
                };
            }
        }
        if mouth.as_ref().is_some_and(|m| m.contains(p)) {
            return [90, 30, 40];
        }
        if lips.contains(p) {
            return tint(style.lips, 0.15);
        }
        if polyline_dist(p, 17..22) < 0.035 * iod || polyline_dist(p, 22..27) < 0.035 * iod {
            return [60, 45, 35];
        }
        if polyline_dist(p, 27..31) < 0.02 * iod {
            let ridge = style.skin.map(|v| v.saturating_sub(20));
            return tint(ridge, 0.1);
        }
        if let Some(shadow) = style.eye_shadow {
            if left_eye.distance(p) < 0.12 * iod || right_eye.distance(p) < 0.12 * iod {
                return tint(shadow, 0.15);
            }
        }
        tint(style.skin, 0.2)
    })
    .expect("positive dimensions");

    SyntheticFace { image, landmarks }
}

/// Parameters of a labeled embedding-difference world: bona fide difference
/// vectors are `N(0, sd²)` per coordinate, attack differences add `shift` to
/// the first `shifted_coords` coordinates.
#[derive(Debug, Clone)]
pub struct EmbeddingWorld {
    pub dim: usize,
    pub sd: f64,
    pub shift: f64,
    pub shifted_coords: usize,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub seed: u64,
}

impl Default for EmbeddingWorld {
    fn default() -> Self {
        Self {
            dim: crate::model::DEFAULT_EMBEDDING_DIM,
            sd: 0.05,
            shift: 0.3,
            shifted_coords: 10,
            train_pairs: 400,
            test_pairs: 400,
            seed: 7,
        }
    }
}

/// One generated pair: id, reference, probe, label, split.
pub type WorldPair = (String, Embedding, Embedding, Label, Split);

impl EmbeddingWorld {
    /// Reference/probe embeddings for every pair, labels alternating
    /// bona fide/attack, train pairs first.
    pub fn generate(&self) -> Vec<WorldPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let base = Normal::new(0.0, 1.0).expect("valid sd");
        let noise = Normal::new(0.0, self.sd).expect("valid sd");
        (0..self.train_pairs + self.test_pairs)
            .map(|i| {
                let label = if i % 2 == 0 {
                    Label::BonaFide
                } else {
                    Label::Attack
                };
                let split = if i < self.train_pairs {
                    Split::Train
                } else {
                    Split::Test
                };
                let reference: Vec<f64> = (0..self.dim).map(|_| base.sample(&mut rng)).collect();
                let probe: Vec<f64> = reference
                    .iter()
                    .enumerate()
                    .map(|(k, r)| {
                        let mut d = noise.sample(&mut rng);
                        if label == Label::Attack && k < self.shifted_coords {
                            d += self.shift;
                        }
                        r - d
                    })
                    .collect();
                (
                    format!("pair{i:05}"),
                    Embedding::new(reference).expect("finite"),
                    Embedding::new(probe).expect("finite"),
                    label,
                    split,
                )
            })
            .collect()
    }

    /// Write embedding files and a manifest under `dir`; returns the
    /// manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut records = Vec::new();
        for (id, r, p, label, split) in self.generate() {
            let rel_r = PathBuf::from(format!("emb/{id}_ref.txt"));
            let rel_p = PathBuf::from(format!("emb/{id}_probe.txt"));
            io::write_embedding(dir.join(&rel_r), &r)?;
            io::write_embedding(dir.join(&rel_p), &p)?;
            records.push(PairRecord {
                reference: FaceSource {
                    embedding: Some(rel_r),
                    ..Default::default()
                },
                probe: FaceSource {
                    embedding: Some(rel_p),
                    ..Default::default()
                },
                subject: id.clone(),
                pair_id: id,
                label,
                split,
            });
        }
        let manifest = dir.join("manifest.csv");
        io::write_manifest(&manifest, &[], &records)?;
        Ok(manifest)
    }
}

/// Write a pool of synthetic subjects as a manifest of same-subject
/// (reference, probe) captures. Subjects are named `{prefix}{index}`.
pub fn write_face_pool(
    dir: &Path,
    prefix: &str,
    subjects: usize,
    makeup: bool,
    crop: &CropGeometry,
    seed: u64,
) -> Result<PathBuf> {
    let mut records = Vec::new();
    for s in 0..subjects {
        let subject = format!("{prefix}{s}");
        let style = SubjectStyle::random(seed.wrapping_add(s as u64 * 7919), makeup);
        let mut sources = Vec::new();
        for (k, role) in ["ref", "probe"].iter().enumerate() {
            let face = render_face(&style, crop, seed ^ ((s * 2 + k) as u64 + 1));
            let img = PathBuf::from(format!("{subject}_{role}.ppm"));
            let lm = PathBuf::from(format!("{subject}_{role}.txt"));
            io::write_ppm(dir.join(&img), &face.image)?;
            io::write_landmarks(dir.join(&lm), &face.landmarks)?;
            sources.push(FaceSource {
                image: Some(img),
                landmarks: Some(lm),
                embedding: None,
            });
        }
        let probe = sources.pop().expect("two captures");
        let reference = sources.pop().expect("two captures");
        records.push(PairRecord {
            pair_id: format!("{subject}_bf"),
            reference,
            probe,
            label: Label::BonaFide,
            split: Split::Train,
            subject,
        });
    }
    let manifest = dir.join(format!("{prefix}manifest.csv"));
    io::write_manifest(&manifest, &[], &records)?;
    Ok(manifest)
}
