//! Eye-anchored face alignment, landmark normalization, and the small set of
//! planar helpers (affine maps, convex hulls) the rest of the crate shares.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{LandmarkSet, Point, RasterImage, LEFT_EYE, RIGHT_EYE};

/// 2×3 affine transform `[a b c; d e f]` acting on column vectors `(x, y, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2 {
    pub m: [[f64; 3]; 2],
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let m = &self.m;
        Point::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2],
        )
    }

    /// Determinant of the linear part.
    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Affine2> {
        let det = self.determinant();
        if det.abs() < 1e-12 || !det.is_finite() {
            return None;
        }
        let [[a, b, c], [d, e, f]] = self.m;
        let ia = e / det;
        let ib = -b / det;
        let id = -d / det;
        let ie = a / det;
        Some(Affine2 {
            m: [[ia, ib, -(ia * c + ib * f)], [id, ie, -(id * c + ie * f)]],
        })
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Affine2) -> Affine2 {
        let a = &self.m;
        let b = &first.m;
        let mut m = [[0.0; 3]; 2];
        for r in 0..2 {
            for c in 0..3 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
            m[r][2] += a[r][2];
        }
        Affine2 { m }
    }

    /// Similarity (rotation, uniform scale, translation) taking `src.0 → dst.0`
    /// and `src.1 → dst.1`.
    pub fn similarity(src: (Point, Point), dst: (Point, Point)) -> Result<Affine2> {
        let s = src.1 - src.0;
        let d = dst.1 - dst.0;
        let denom = s.x * s.x + s.y * s.y;
        if denom < 1e-18 {
            return Err(Error::DegenerateGeometry(
                "coincident source anchor points".into(),
            ));
        }
        // complex ratio d / s
        let ax = (d.x * s.x + d.y * s.y) / denom;
        let ay = (d.y * s.x - d.x * s.y) / denom;
        let tx = dst.0.x - (ax * src.0.x - ay * src.0.y);
        let ty = dst.0.y - (ay * src.0.x + ax * src.0.y);
        Ok(Affine2 {
            m: [[ax, -ay, tx], [ay, ax, ty]],
        })
    }

    /// Affine map sending triangle `src` onto triangle `dst` vertex by vertex.
    pub fn from_triangles(src: [Point; 3], dst: [Point; 3]) -> Option<Affine2> {
        let basis = Affine2 {
            m: [
                [src[1].x - src[0].x, src[2].x - src[0].x, src[0].x],
                [src[1].y - src[0].y, src[2].y - src[0].y, src[0].y],
            ],
        };
        let to_dst = Affine2 {
            m: [
                [dst[1].x - dst[0].x, dst[2].x - dst[0].x, dst[0].x],
                [dst[1].y - dst[0].y, dst[2].y - dst[0].y, dst[0].y],
            ],
        };
        Some(to_dst.compose(&basis.inverse()?))
    }
}

/// Canonical crop geometry for aligned faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropGeometry {
    pub width: usize,
    pub height: usize,
    /// Eye anchors as fractions of width/height.
    pub left_eye: (f64, f64),
    pub right_eye: (f64, f64),
}

impl Default for CropGeometry {
    fn default() -> Self {
        Self::square(224)
    }
}

impl CropGeometry {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            left_eye: (0.35, 0.40),
            right_eye: (0.65, 0.40),
        }
    }

    pub fn square(size: usize) -> Self {
        Self::new(size, size)
    }

    pub fn eye_targets(&self) -> (Point, Point) {
        let (w, h) = (self.width as f64, self.height as f64);
        (
            Point::new(self.left_eye.0 * w, self.left_eye.1 * h),
            Point::new(self.right_eye.0 * w, self.right_eye.1 * h),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFace {
    pub image: RasterImage,
    /// Maps source pixel coordinates into the canonical frame.
    pub transform: Affine2,
}

/// Centroids of the two six-point eye contours: `(left, right)`.
pub fn eye_centers(landmarks: &LandmarkSet) -> (Point, Point) {
    let pts = landmarks.points();
    (
        Point::centroid(&pts[LEFT_EYE]),
        Point::centroid(&pts[RIGHT_EYE]),
    )
}

fn require_distinct_eyes(left: Point, right: Point) -> Result<()> {
    if left.distance(right) <= 1e-9 {
        return Err(Error::DegenerateGeometry(
            "eye centers coincide (inter-ocular distance 0)".into(),
        ));
    }
    Ok(())
}

/// Similarity taking the detected eye centers onto the crop's eye anchors.
pub fn alignment_transform(landmarks: &LandmarkSet, crop: &CropGeometry) -> Result<Affine2> {
    let (l, r) = eye_centers(landmarks);
    require_distinct_eyes(l, r)?;
    Affine2::similarity((l, r), crop.eye_targets())
}

/// Resample `image` into the canonical crop using bilinear interpolation.
/// Pixels that map outside the source are black.
pub fn align_face(
    image: &RasterImage,
    landmarks: &LandmarkSet,
    crop: &CropGeometry,
) -> Result<AlignedFace> {
    align_face_with(image, landmarks, crop, Execution::default())
}

pub fn align_face_with(
    image: &RasterImage,
    landmarks: &LandmarkSet,
    crop: &CropGeometry,
    exec: Execution,
) -> Result<AlignedFace> {
    let transform = alignment_transform(landmarks, crop)?;
    let inv = transform
        .inverse()
        .ok_or_else(|| Error::DegenerateGeometry("singular alignment transform".into()))?;
    let mut pixels = vec![0u8; crop.width * crop.height * 3];
    exec.for_each_chunk(&mut pixels, crop.width * 3, |y, row| {
        for x in 0..crop.width {
            let src = inv.apply(Point::new(x as f64, y as f64));
            let v = image.sample_bilinear(src.x, src.y);
            for c in 0..3 {
                row[x * 3 + c] = to_u8(v[c]);
            }
        }
    });
    Ok(AlignedFace {
        image: RasterImage::new(crop.width, crop.height, pixels)?,
        transform,
    })
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Landmarks in the eye frame: eye midpoint at the origin, eye line along +x,
/// inter-ocular distance 1.
pub fn normalize_landmarks(landmarks: &LandmarkSet) -> Result<Vec<Point>> {
    let (l, r) = eye_centers(landmarks);
    require_distinct_eyes(l, r)?;
    let t = Affine2::similarity((l, r), (Point::new(-0.5, 0.0), Point::new(0.5, 0.0)))?;
    Ok(landmarks.points().iter().map(|&p| t.apply(p)).collect())
}

/// Twice the signed area of triangle `abc` (positive when counter-clockwise
/// in a y-up frame).
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Convex hull by monotone chain; collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Convex polygon with a cached bounding box for rasterizing masks.
#[derive(Debug, Clone)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
    min: Point,
    max: Point,
}

impl ConvexPolygon {
    pub fn hull_of(points: &[Point]) -> Option<Self> {
        let vertices = convex_hull(points);
        if vertices.len() < 3 {
            return None;
        }
        let area: f64 = (0..vertices.len())
            .map(|i| {
                orient(
                    Point::default(),
                    vertices[i],
                    vertices[(i + 1) % vertices.len()],
                )
            })
            .sum();
        if area.abs() < 1e-9 {
            return None;
        }
        let min = vertices
            .iter()
            .fold(Point::new(f64::MAX, f64::MAX), |m, p| {
                Point::new(m.x.min(p.x), m.y.min(p.y))
            });
        let max = vertices
            .iter()
            .fold(Point::new(f64::MIN, f64::MIN), |m, p| {
                Point::new(m.x.max(p.x), m.y.max(p.y))
            });
        Some(Self { vertices, min, max })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn bounds(&self) -> (Point, Point) {
        (self.min, self.max)
    }

    /// Inside or on the boundary. The hull is counter-clockwise in the
    /// (x, y) ordering produced by [`convex_hull`].
    pub fn contains(&self, p: Point) -> bool {
        if p.x < self.min.x || p.x > self.max.x || p.y < self.min.y || p.y > self.max.y {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| orient(self.vertices[i], self.vertices[(i + 1) % n], p) >= -1e-9)
    }

    /// Euclidean distance to the polygon (0 inside).
    pub fn distance(&self, p: Point) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let n = self.vertices.len();
        (0..n)
            .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}
