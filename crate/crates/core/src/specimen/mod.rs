//! The standardized experiment as data: specimen geometry, load program,
//! and the fixed displacement sampling points.
//!
//! Database generation and measurement ingestion must share one protocol;
//! the descriptor hash is the guard that keeps them from silently mixing.

mod mesh;

pub use mesh::{build_mesh, Mesh, TAG_BOTTOM, TAG_LEFT, TAG_RIGHT, TAG_TOP};

use crate::error::{Error, Result};
use crate::util::{fmt_g9, fnv1a64};

/// Geometry, loading program, and sampling-point protocol of the
/// standardized biaxial test. Lengths in mm, angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDescriptor {
    pub side_length: f64,
    pub thickness: f64,
    pub notch_length: f64,
    pub notch_angle_deg: f64,
    pub slot_half_width: f64,
    /// Number of load steps.
    pub n_t: usize,
    /// Total equibiaxial clamp displacement over the program.
    pub u_max: f64,
    /// Number of displacement sampling points.
    pub n_u: usize,
    pub ellipse_semi_major: f64,
    pub ellipse_semi_minor: f64,
    pub ellipse_angle_deg: f64,
    /// Reference coordinates of the sampling points; derived from the
    /// ellipse fields by [`ellipse_points`].
    pub sample_points: Vec<[f64; 2]>,
}

impl ExperimentDescriptor {
    /// The canonical protocol: 85 mm square, 2 mm thick, 10 mm notch at 45
    /// degrees, 29.75 mm equibiaxial displacement over 35 steps, 50 sampling
    /// points on a 10 x 6 mm ellipse aligned with the notch.
    pub fn standard() -> Self {
        let mut desc = Self {
            side_length: 85.0,
            thickness: 2.0,
            notch_length: 10.0,
            notch_angle_deg: 45.0,
            slot_half_width: 0.1,
            n_t: 35,
            u_max: 29.75,
            n_u: 50,
            ellipse_semi_major: 10.0,
            ellipse_semi_minor: 6.0,
            ellipse_angle_deg: 45.0,
            sample_points: Vec::new(),
        };
        desc.sample_points = ellipse_points(&desc).expect("standard descriptor is valid");
        desc
    }

    /// Recompute `sample_points` after editing ellipse or geometry fields.
    pub fn refresh_sample_points(&mut self) -> Result<()> {
        self.sample_points = ellipse_points(self)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_length > 0.0 && self.thickness > 0.0) {
            return Err(Error::Descriptor("non-positive specimen dimensions".into()));
        }
        if self.n_t == 0 {
            return Err(Error::Descriptor("load program needs at least one step".into()));
        }
        if self.n_u == 0 {
            return Err(Error::Descriptor("need at least one sample point".into()));
        }
        if !(self.u_max > 0.0) {
            return Err(Error::Descriptor("non-positive clamp displacement".into()));
        }
        // tolerance covers the 9-significant-digit rounding of serialized points
        let expected = ellipse_points(self)?;
        if expected.len() != self.sample_points.len()
            || expected
                .iter()
                .zip(&self.sample_points)
                .any(|(a, b)| (a[0] - b[0]).abs() > 1e-6 || (a[1] - b[1]).abs() > 1e-6)
        {
            return Err(Error::Descriptor(
                "sample points disagree with the ellipse definition".into(),
            ));
        }
        Ok(())
    }

    /// Boundary stretch factor per load step, lambda_k = 1 + k u_max / (n_t L).
    pub fn load_program(&self) -> Vec<f64> {
        (1..=self.n_t)
            .map(|k| 1.0 + (k as f64) * self.u_max / (self.n_t as f64 * self.side_length))
            .collect()
    }

    /// Clamp displacement target per load step, k u_max / n_t.
    pub fn clamp_targets(&self) -> Vec<f64> {
        (1..=self.n_t)
            .map(|k| (k as f64) * self.u_max / (self.n_t as f64))
            .collect()
    }

    /// Canonical key = value serialization of every protocol field; the
    /// byte stream the descriptor hash digests.
    pub fn manifest_lines(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("side_length_mm = {}\n", fmt_g9(self.side_length)));
        s.push_str(&format!("thickness_mm = {}\n", fmt_g9(self.thickness)));
        s.push_str(&format!("notch_length_mm = {}\n", fmt_g9(self.notch_length)));
        s.push_str(&format!("notch_angle_deg = {}\n", fmt_g9(self.notch_angle_deg)));
        s.push_str(&format!(
            "slot_half_width_mm = {}\n",
            fmt_g9(self.slot_half_width)
        ));
        s.push_str(&format!("n_t = {}\n", self.n_t));
        s.push_str(&format!("u_max_mm = {}\n", fmt_g9(self.u_max)));
        s.push_str(&format!("n_u = {}\n", self.n_u));
        s.push_str(&format!(
            "ellipse_semi_major_mm = {}\n",
            fmt_g9(self.ellipse_semi_major)
        ));
        s.push_str(&format!(
            "ellipse_semi_minor_mm = {}\n",
            fmt_g9(self.ellipse_semi_minor)
        ));
        s.push_str(&format!(
            "ellipse_angle_deg = {}\n",
            fmt_g9(self.ellipse_angle_deg)
        ));
        s.push_str("sample_points =");
        for p in &self.sample_points {
            s.push_str(&format!(" {} {}", fmt_g9(p[0]), fmt_g9(p[1])));
        }
        s.push('\n');
        s
    }

    /// Content digest over all protocol fields, as a 16-digit hex string.
    pub fn descriptor_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.manifest_lines().as_bytes()))
    }
}

/// Sampling points at equal parameter angles t_j = 2 pi j / n_u on the
/// ellipse x(t) = R(angle) (a cos t, b sin t), centered on the specimen.
pub fn ellipse_points(desc: &ExperimentDescriptor) -> Result<Vec<[f64; 2]>> {
    let a = desc.ellipse_semi_major;
    let b = desc.ellipse_semi_minor;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Descriptor("ellipse semi-axes must be positive".into()));
    }
    if desc.notch_length > 0.0
        && (a <= desc.notch_length / 2.0 + desc.slot_half_width || b <= desc.slot_half_width)
    {
        return Err(Error::Descriptor(
            "ellipse must enclose the slot footprint".into(),
        ));
    }
    let ang = desc.ellipse_angle_deg.to_radians();
    let (sin_r, cos_r) = ang.sin_cos();
    let half = desc.side_length / 2.0;
    let (seg_a, seg_b) = notch_segment(desc);
    let mut points = Vec::with_capacity(desc.n_u);
    for j in 0..desc.n_u {
        let t = std::f64::consts::TAU * (j as f64) / (desc.n_u as f64);
        let (px, py) = (a * t.cos(), b * t.sin());
        let p = [cos_r * px - sin_r * py, cos_r * py + sin_r * px];
        if p[0].abs() >= half || p[1].abs() >= half {
            return Err(Error::Descriptor(format!(
                "sample point {j} at ({:.3}, {:.3}) falls outside the specimen",
                p[0], p[1]
            )));
        }
        if desc.notch_length > 0.0
            && dist_point_segment(p, seg_a, seg_b) <= desc.slot_half_width
        {
            return Err(Error::Descriptor(format!(
                "sample point {j} at ({:.3}, {:.3}) falls inside the slot",
                p[0], p[1]
            )));
        }
        points.push(p);
    }
    Ok(points)
}

/// Endpoints of the notch center segment (cap centers of the stadium slot).
pub(crate) fn notch_segment(desc: &ExperimentDescriptor) -> ([f64; 2], [f64; 2]) {
    let half_seg = (desc.notch_length / 2.0 - desc.slot_half_width).max(0.0);
    let ang = desc.notch_angle_deg.to_radians();
    let (s, c) = ang.sin_cos();
    ([-half_seg * c, -half_seg * s], [half_seg * c, half_seg * s])
}

pub(crate) fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}
