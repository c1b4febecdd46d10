//! Image-method multipath for a rectangular room in the horizontal plane.
//!
//! Walls are specular with a single reflection loss per bounce. Paths with
//! up to `max_order` reflections and length within the sounder's maximum
//! path length are returned; all arrive at zero elevation.

use super::{free_space_gain, Mpc};
use crate::types::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangularRoom {
    /// Extent along x, metres.
    pub width_m: f64,
    /// Extent along y, metres.
    pub depth_m: f64,
    pub reflection_loss_db: f64,
    pub max_order: u32,
}

impl RectangularRoom {
    /// The 10.15 m × 7.9 m meeting room, third-order reflections.
    pub fn meeting_room() -> Self {
        Self {
            width_m: 10.15,
            depth_m: 7.9,
            reflection_loss_db: 10.0,
            max_order: 3,
        }
    }

    /// Image coordinates along one axis with their reflection counts.
    fn images_1d(&self, pos: f64, size: f64) -> Vec<(f64, u32, bool)> {
        let max = self.max_order as i64;
        let mut out = Vec::new();
        for m in -max..=max {
            let even = 2.0 * m as f64 * size + pos;
            let odd = 2.0 * m as f64 * size - pos;
            let n_even = (2 * m).unsigned_abs() as u32;
            let n_odd = (2 * m - 1).unsigned_abs() as u32;
            if n_even <= self.max_order {
                out.push((even, n_even, false));
            }
            if n_odd <= self.max_order {
                out.push((odd, n_odd, true));
            }
        }
        out
    }

    /// Multipath components from `tx` to `rx` (metres, room coordinates)
    /// at `f_ghz`. Azimuth is measured counter-clockwise from +x at the
    /// receiver; the Tx boresight points at the receiver.
    pub fn mpcs(&self, tx: (f64, f64), rx: (f64, f64), f_ghz: f64, max_path_m: f64) -> Vec<Mpc> {
        let per_bounce = 10f64.powf(-self.reflection_loss_db / 20.0);
        let boresight = (rx.1 - tx.1).atan2(rx.0 - tx.0);
        let mut out = Vec::new();
        for &(ix, nx, flip_x) in &self.images_1d(tx.0, self.width_m) {
            for &(iy, ny, flip_y) in &self.images_1d(tx.1, self.depth_m) {
                let order = nx + ny;
                if order > self.max_order {
                    continue;
                }
                let (dx, dy) = (ix - rx.0, iy - rx.1);
                let length = dx.hypot(dy);
                if length <= 0.0 || length > max_path_m {
                    continue;
                }
                let azimuth_deg = dy.atan2(dx).to_degrees().rem_euclid(360.0);
                // departure direction: image→rx vector mirrored back through each wall pair
                let (mut ux, mut uy) = (-dx, -dy);
                if flip_x {
                    ux = -ux;
                }
                if flip_y {
                    uy = -uy;
                }
                let tx_offset_deg = super::wrap_deg((uy.atan2(ux) - boresight).to_degrees());
                out.push(Mpc {
                    gain: free_space_gain(f_ghz, length) * per_bounce.powi(order as i32),
                    delay_s: length / SPEED_OF_LIGHT,
                    azimuth_deg,
                    elevation_deg: 0.0,
                    tx_offset_deg,
                });
            }
        }
        out.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
        out
    }
}
