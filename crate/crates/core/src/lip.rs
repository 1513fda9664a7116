//! Lip geometry and the 10-dimensional lip movement feature vector
//! (amplitude, stability and speed of inner-lip opening, lip width and
//! corner angles).

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dsp::{mean, std_dev};
use crate::{Error, Result};

pub type Point = (f64, f64);

/// Which landmark indices play which role. Defaults follow the 68-point
/// iBUG layout (outer lip 48–59, inner lip 60–67).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipIndexMap {
    /// Inner upper-lip points, paired element-wise with `inner_lower`.
    pub inner_upper: Vec<usize>,
    pub inner_lower: Vec<usize>,
    pub left_corner: usize,
    pub right_corner: usize,
    pub upper_mid: usize,
    pub lower_mid: usize,
}

impl Default for LipIndexMap {
    fn default() -> Self {
        LipIndexMap {
            inner_upper: alloc::vec![61, 62, 63],
            inner_lower: alloc::vec![67, 66, 65],
            left_corner: 48,
            right_corner: 54,
            upper_mid: 51,
            lower_mid: 57,
        }
    }
}

impl LipIndexMap {
    pub fn validate(&self) -> Result<()> {
        if self.inner_upper.is_empty() || self.inner_upper.len() != self.inner_lower.len() {
            return Err(Error::Config(
                "lip.inner_upper and lip.inner_lower must be non-empty and of equal length".into(),
            ));
        }
        Ok(())
    }

    pub fn max_index(&self) -> usize {
        self.inner_upper
            .iter()
            .chain(&self.inner_lower)
            .chain([&self.left_corner, &self.right_corner, &self.upper_mid, &self.lower_mid])
            .copied()
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub t: f64,
    pub points: Vec<Point>,
}

/// Landmark tracks of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSequence {
    fps: f64,
    frames: Vec<LandmarkFrame>,
    index_map: LipIndexMap,
}

impl LandmarkSequence {
    /// Checks constant point count, strictly increasing time and that the
    /// index map fits the layout.
    pub fn new(fps: f64, frames: Vec<LandmarkFrame>, index_map: LipIndexMap) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::Data(format!("invalid frame rate {fps}")));
        }
        index_map.validate()?;
        if let Some(first) = frames.first() {
            let n = first.points.len();
            if index_map.max_index() >= n {
                return Err(Error::Data(format!(
                    "index map refers to point {} but frames have {n} points",
                    index_map.max_index()
                )));
            }
            for (i, f) in frames.iter().enumerate() {
                if f.points.len() != n {
                    return Err(Error::Data(format!(
                        "frame {i} has {} points, expected {n}",
                        f.points.len()
                    )));
                }
                if i > 0 && !(f.t > frames[i - 1].t) {
                    return Err(Error::Data(format!("frame {i}: time not strictly increasing")));
                }
            }
        }
        Ok(LandmarkSequence {
            fps,
            frames,
            index_map,
        })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn index_map(&self) -> &LipIndexMap {
        &self.index_map
    }

    pub fn point_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.points.len())
    }

    /// Frames with `start <= t <= end`.
    pub fn frames_in(&self, start: f64, end: f64) -> &[LandmarkFrame] {
        let a = self.frames.partition_point(|f| f.t < start);
        let b = self.frames.partition_point(|f| f.t <= end);
        &self.frames[a..b.max(a)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipGeometry {
    pub inner_dist: f64,
    pub width: f64,
    /// Radians in [0, π].
    pub left_angle: f64,
    pub right_angle: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

fn corner_angle(corner: Point, p: Point, q: Point, which: &str) -> Result<f64> {
    let u = (p.0 - corner.0, p.1 - corner.1);
    let v = (q.0 - corner.0, q.1 - corner.1);
    let nu = libm::hypot(u.0, u.1);
    let nv = libm::hypot(v.0, v.1);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Geometry(format!("zero-length vector at {which} corner")));
    }
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    Ok(libm::atan2(cross.abs(), dot))
}

/// Inner-lip distance, width and corner angles of one frame.
pub fn lip_geometry(points: &[Point], map: &LipIndexMap) -> Result<LipGeometry> {
    let get = |i: usize| -> Result<Point> {
        points
            .get(i)
            .copied()
            .ok_or_else(|| Error::Data(format!("landmark index {i} missing from frame")))
    };
    map.validate()?;
    let mut inner = 0.0;
    for (&u, &l) in map.inner_upper.iter().zip(&map.inner_lower) {
        inner += dist(get(u)?, get(l)?);
    }
    let inner_dist = inner / map.inner_upper.len() as f64;
    let left = get(map.left_corner)?;
    let right = get(map.right_corner)?;
    let up = get(map.upper_mid)?;
    let low = get(map.lower_mid)?;
    Ok(LipGeometry {
        inner_dist,
        width: dist(left, right),
        left_angle: corner_angle(left, up, low, "left")?,
        right_angle: corner_angle(right, up, low, "right")?,
    })
}

pub const LIP_DIM: usize = 10;

pub const LIP_FEATURE_NAMES: [&str; LIP_DIM] = [
    "min_inner_lip_dist",
    "max_inner_lip_dist",
    "min_lip_width",
    "max_lip_width",
    "left_angle_std",
    "right_angle_std",
    "inner_dist_std",
    "left_angle_velocity",
    "right_angle_velocity",
    "inner_dist_velocity",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LipVector {
    pub min_inner_lip_dist: f64,
    pub max_inner_lip_dist: f64,
    pub min_lip_width: f64,
    pub max_lip_width: f64,
    pub left_angle_std: f64,
    pub right_angle_std: f64,
    pub inner_dist_std: f64,
    pub left_angle_velocity: f64,
    pub right_angle_velocity: f64,
    pub inner_dist_velocity: f64,
}

impl LipVector {
    pub fn to_array(&self) -> [f64; LIP_DIM] {
        [
            self.min_inner_lip_dist,
            self.max_inner_lip_dist,
            self.min_lip_width,
            self.max_lip_width,
            self.left_angle_std,
            self.right_angle_std,
            self.inner_dist_std,
            self.left_angle_velocity,
            self.right_angle_velocity,
            self.inner_dist_velocity,
        ]
    }

    pub fn from_array(a: [f64; LIP_DIM]) -> LipVector {
        LipVector {
            min_inner_lip_dist: a[0],
            max_inner_lip_dist: a[1],
            min_lip_width: a[2],
            max_lip_width: a[3],
            left_angle_std: a[4],
            right_angle_std: a[5],
            inner_dist_std: a[6],
            left_angle_velocity: a[7],
            right_angle_velocity: a[8],
            inner_dist_velocity: a[9],
        }
    }
}

fn mean_abs_step(xs: &[f64]) -> f64 {
    let steps: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    mean(&steps)
}

/// Lip features over the frames of `[start, end]`.
pub fn lip_feature_vector(seq: &LandmarkSequence, start: f64, end: f64) -> Result<LipVector> {
    let frames = seq.frames_in(start, end);
    if frames.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "lip features need 3 frames in [{start}, {end}], found {}",
            frames.len()
        )));
    }
    let geo: Vec<LipGeometry> = frames
        .iter()
        .map(|f| lip_geometry(&f.points, seq.index_map()))
        .collect::<Result<_>>()?;
    let inner: Vec<f64> = geo.iter().map(|g| g.inner_dist).collect();
    let width: Vec<f64> = geo.iter().map(|g| g.width).collect();
    let left: Vec<f64> = geo.iter().map(|g| g.left_angle).collect();
    let right: Vec<f64> = geo.iter().map(|g| g.right_angle).collect();
    let min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fps = seq.fps();
    Ok(LipVector {
        min_inner_lip_dist: min(&inner),
        max_inner_lip_dist: max(&inner),
        min_lip_width: min(&width),
        max_lip_width: max(&width),
        left_angle_std: std_dev(&left),
        right_angle_std: std_dev(&right),
        inner_dist_std: std_dev(&inner),
        left_angle_velocity: mean_abs_step(&left) * fps,
        right_angle_velocity: mean_abs_step(&right) * fps,
        inner_dist_velocity: mean_abs_step(&inner) * fps,
    })
}
