use serde::{Deserialize, Serialize};

/// Parameters of the parabolic-in-dB 3GPP element pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElementPatternParams {
    pub vertical_beamwidth_deg: f64,
    pub horizontal_beamwidth_deg: f64,
    pub side_lobe_floor_db: f64,
    pub max_gain_dbi: f64,
}

impl Default for ElementPatternParams {
    fn default() -> Self {
        Self { vertical_beamwidth_deg: 65.0, horizontal_beamwidth_deg: 65.0, side_lobe_floor_db: 30.0, max_gain_dbi: 8.0 }
    }
}

/// Directional gain of one antenna element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementPattern {
    Isotropic,
    ThreeGpp(ElementPatternParams),
}

impl Default for ElementPattern {
    fn default() -> Self {
        ElementPattern::ThreeGpp(ElementPatternParams::default())
    }
}

impl ElementPattern {
    /// Gain in dBi toward angles measured from the element boresight.
    pub fn gain_db(&self, elevation_deg: f64, azimuth_deg: f64) -> f64 {
        match self {
            ElementPattern::Isotropic => 0.0,
            ElementPattern::ThreeGpp(p) => element_pattern_3gpp(elevation_deg, azimuth_deg, p),
        }
    }
}

/// `Gmax − min(−(A_v + A_h), floor)` with `A_v = −min(12(θ/θ3dB)², floor)`
/// and `A_h = −min(12(φ/φ3dB)², floor)`; angles are offsets from boresight,
/// azimuth wrapped to `[−180°, 180°)`.
pub fn element_pattern_3gpp(elevation_deg: f64, azimuth_deg: f64, params: &ElementPatternParams) -> f64 {
    let az = (azimuth_deg + 180.0).rem_euclid(360.0) - 180.0;
    let floor = params.side_lobe_floor_db;
    let a_v = -(12.0 * (elevation_deg / params.vertical_beamwidth_deg).powi(2)).min(floor);
    let a_h = -(12.0 * (az / params.horizontal_beamwidth_deg).powi(2)).min(floor);
    params.max_gain_dbi - (-(a_v + a_h)).min(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boresight_and_beamwidth() {
        let p = ElementPatternParams::default();
        assert_eq!(element_pattern_3gpp(0.0, 0.0, &p), 8.0);
        assert!((element_pattern_3gpp(0.0, 65.0, &p) - (8.0 - 12.0)).abs() < 1e-12);
        assert!((element_pattern_3gpp(65.0, 0.0, &p) - (8.0 - 12.0)).abs() < 1e-12);
        assert!((element_pattern_3gpp(0.0, -65.0 + 360.0, &p) - (8.0 - 12.0)).abs() < 1e-12);
    }

    #[test]
    fn attenuation_is_clipped() {
        let p = ElementPatternParams::default();
        assert_eq!(element_pattern_3gpp(0.0, 180.0, &p), 8.0 - 30.0);
        assert_eq!(element_pattern_3gpp(90.0, 90.0, &p), 8.0 - 30.0);
    }

    #[test]
    fn isotropic_everywhere() {
        for (e, a) in [(0.0, 0.0), (45.0, 170.0), (-89.0, -30.0)] {
            assert_eq!(ElementPattern::Isotropic.gain_db(e, a), 0.0);
        }
    }
}
