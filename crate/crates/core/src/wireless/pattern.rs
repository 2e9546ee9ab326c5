//! Parabolic sector antenna pattern with separable horizontal and vertical
//! cuts, as used in 3GPP system-level simulations.

pub const HORIZONTAL_BEAMWIDTH_DEG: f64 = 65.0;
pub const VERTICAL_BEAMWIDTH_DEG: f64 = 10.0;
pub const FRONT_TO_BACK_DB: f64 = 30.0;
pub const SIDE_LOBE_DB: f64 = 20.0;

/// Wraps an angle difference into (-180, 180].
#[inline]
pub fn wrap_degrees(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// Gain in dB (≤ 0) towards a point seen at `bearing_deg` (clockwise from
/// north) and `depression_deg` (below horizontal) from an antenna with the
/// given electrical downtilt and azimuth.
#[inline]
pub fn pattern_gain(tilt_deg: f64, azimuth_deg: f64, bearing_deg: f64, depression_deg: f64) -> f64 {
    let d_az = wrap_degrees(bearing_deg - azimuth_deg);
    let d_tilt = depression_deg - tilt_deg;
    let horizontal = (12.0 * (d_az / HORIZONTAL_BEAMWIDTH_DEG).powi(2)).min(FRONT_TO_BACK_DB);
    let vertical = (12.0 * (d_tilt / VERTICAL_BEAMWIDTH_DEG).powi(2)).min(SIDE_LOBE_DB);
    -(horizontal + vertical).min(FRONT_TO_BACK_DB)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boresight_has_no_loss() {
        assert_eq!(pattern_gain(4.0, 120.0, 120.0, 4.0), 0.0);
    }

    #[test]
    fn half_power_beamwidth_edge() {
        assert!((pattern_gain(0.0, 0.0, 65.0, 0.0) + 12.0).abs() < 1e-12);
        assert!((pattern_gain(0.0, 10.0, 305.0, 0.0) + 12.0).abs() < 1e-12);
    }

    #[test]
    fn back_lobe_floor() {
        assert_eq!(pattern_gain(0.0, 0.0, 180.0, 0.0), -30.0);
        assert_eq!(pattern_gain(0.0, 90.0, 270.0, 30.0), -30.0);
    }

    #[test]
    fn vertical_cut_is_capped() {
        assert_eq!(pattern_gain(0.0, 0.0, 0.0, 90.0), -20.0);
        assert!((pattern_gain(5.0, 0.0, 0.0, 15.0) + 12.0).abs() < 1e-12);
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_degrees(350.0), -10.0);
        assert_eq!(wrap_degrees(-350.0), 10.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
    }
}
