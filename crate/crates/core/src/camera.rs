//! Pinhole camera with a fixed zero pitch, mounted at `cam_height` above the
//! floor. Column `u` maps to the lateral offset `(u - cx) / fx` per unit of
//! forward depth; row `v` maps to height `(v - cy) / fy` below the optical
//! axis. Depth images store planar z-depth (distance along the camera's
//! forward axis), not ray length.

use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraModel<T> {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view, radians.
    pub hfov: T,
    /// Height of the optical center above the floor, meters.
    pub cam_height: T,
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CameraError {
    #[error("invalid camera parameters: {0}")]
    Invalid(String),
}

impl<T: Scalar> CameraModel<T> {
    /// Square pixels: `fy = fx = (width/2) / tan(hfov/2)`.
    pub fn new(width: u32, height: u32, hfov: T, cam_height: T) -> Result<Self, CameraError> {
        if width == 0 || height == 0 {
            return Err(CameraError::Invalid("zero image dimension".into()));
        }
        if hfov <= T::zero() || hfov >= T::PI() {
            return Err(CameraError::Invalid("hfov must be in (0, pi)".into()));
        }
        if cam_height <= T::zero() {
            return Err(CameraError::Invalid("cam_height must be positive".into()));
        }
        let half_w = lit::<T>(width as f64) / lit(2.0);
        let fx = half_w / (hfov / lit::<T>(2.0)).tan();
        Ok(Self {
            width,
            height,
            hfov,
            cam_height,
            fx,
            fy: fx,
            cx: half_w,
            cy: lit::<T>(height as f64) / lit(2.0),
        })
    }

    /// Lateral direction coefficient of column `u`: lateral per unit forward.
    #[inline]
    pub fn x_ndc(&self, u: T) -> T {
        (u - self.cx) / self.fx
    }

    /// Planar depth of a flat-floor pixel at row `v`; `None` at or above the
    /// horizon.
    #[inline]
    pub fn floor_depth(&self, v: T) -> Option<T> {
        let dv = v - self.cy;
        (dv > T::zero()).then(|| self.cam_height * self.fy / dv)
    }

    /// Row at which a flat-floor point at planar depth `z` appears.
    #[inline]
    pub fn floor_row(&self, z: T) -> T {
        self.cy + self.fy * self.cam_height / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn focal_from_hfov_is_exact() {
        let cam = CameraModel::new(640, 480, std::f64::consts::FRAC_PI_2, 1.0).unwrap();
        assert!((cam.fx - 320.0).abs() < 1e-9);
        assert_eq!(cam.cx, 320.0);
        assert_eq!(cam.cy, 240.0);
        assert!(cam.fx > 0.0 && cam.fy > 0.0);
    }

    #[test]
    fn floor_depth_row_inverse() {
        let cam = CameraModel::new(640, 480, std::f64::consts::FRAC_PI_2, 0.4).unwrap();
        let v = cam.floor_row(3.0);
        let z = cam.floor_depth(v).unwrap();
        assert!((z - 3.0).abs() < 1e-9);
        assert!(cam.floor_depth(cam.cy).is_none());
        assert!(cam.floor_depth(cam.cy - 5.0).is_none());
    }

    #[test]
    fn works_in_f32() {
        let cam = CameraModel::<f32>::new(320, 240, std::f32::consts::FRAC_PI_2, 0.5).unwrap();
        assert!((cam.fx - 160.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CameraModel::new(0, 480, 1.0_f64, 1.0).is_err());
        assert!(CameraModel::new(640, 480, 0.0_f64, 1.0).is_err());
        assert!(CameraModel::new(640, 480, 1.0_f64, -1.0).is_err());
    }
}
