use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::measurement::{db_to_lin, lin_to_db};
use super::{invalid, MobilityError, Rect};
use crate::fading::SPEED_OF_LIGHT_MPS;

/// Distance-based path loss for a LOS or NLOS link, dB.
pub trait PathLossModel {
    fn path_loss_db(&self, distance_2d_m: f64, los: bool) -> f64;
}

/// Urban-micro street-canyon path loss with heights and carrier fixed per scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmiStreetCanyon {
    pub carrier_hz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
}

impl UmiStreetCanyon {
    /// Minimum 2D distance the formulas are evaluated at, metres.
    pub const MIN_DISTANCE_M: f64 = 10.0;

    /// Breakpoint distance with 1 m effective environment height.
    pub fn breakpoint_m(&self) -> f64 {
        4.0 * (self.bs_height_m - 1.0) * (self.ue_height_m - 1.0) * self.carrier_hz / SPEED_OF_LIGHT_MPS
    }

    fn los_db(&self, d2d: f64, d3d: f64, fc_ghz: f64) -> f64 {
        let bp = self.breakpoint_m();
        if d2d <= bp {
            32.4 + 21.0 * d3d.log10() + 20.0 * fc_ghz.log10()
        } else {
            let dh = self.bs_height_m - self.ue_height_m;
            32.4 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10() - 9.5 * (bp * bp + dh * dh).log10()
        }
    }
}

impl PathLossModel for UmiStreetCanyon {
    fn path_loss_db(&self, distance_2d_m: f64, los: bool) -> f64 {
        let d2d = distance_2d_m.max(Self::MIN_DISTANCE_M);
        let dh = self.bs_height_m - self.ue_height_m;
        let d3d = d2d.hypot(dh);
        let fc_ghz = self.carrier_hz / 1e9;
        let pl_los = self.los_db(d2d, d3d, fc_ghz);
        if los {
            return pl_los;
        }
        let pl_nlos = 35.3 * d3d.log10() + 22.4 + 21.3 * fc_ghz.log10() - 0.3 * (self.ue_height_m - 1.5);
        pl_los.max(pl_nlos)
    }
}

/// Log-normal shadowing with exponential spatial correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowingParams {
    pub enabled: bool,
    pub sigma_los_db: f64,
    pub sigma_nlos_db: f64,
    pub decorrelation_los_m: f64,
    pub decorrelation_nlos_m: f64,
}

impl Default for ShadowingParams {
    fn default() -> Self {
        Self {
            enabled: true,
            sigma_los_db: 4.0,
            sigma_nlos_db: 7.82,
            decorrelation_los_m: 10.0,
            decorrelation_nlos_m: 13.0,
        }
    }
}

impl ShadowingParams {
    pub fn validate(&self) -> Result<(), MobilityError> {
        for (name, v) in [("shadowing.sigma_los_db", self.sigma_los_db), ("shadowing.sigma_nlos_db", self.sigma_nlos_db)]
        {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        for (name, v) in [
            ("shadowing.decorrelation_los_m", self.decorrelation_los_m),
            ("shadowing.decorrelation_nlos_m", self.decorrelation_nlos_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Gudmundson AR(1) shadowing state of one link: the unit-variance state is
/// updated with `ρ = exp(−Δd / d_corr)` as the UE moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowingProcess {
    z: f64,
    last: [f64; 2],
}

impl ShadowingProcess {
    pub fn new<R: Rng + ?Sized>(position: [f64; 2], rng: &mut R) -> Self {
        Self { z: rng.sample(StandardNormal), last: position }
    }

    /// Moves the state to `position` and returns the shadowing loss, dB.
    /// Always consumes one normal draw so streams stay aligned.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        position: [f64; 2],
        los: bool,
        params: &ShadowingParams,
        rng: &mut R,
    ) -> f64 {
        let n: f64 = rng.sample(StandardNormal);
        let moved = (position[0] - self.last[0]).hypot(position[1] - self.last[1]);
        if moved > 0.0 {
            let d = if los { params.decorrelation_los_m } else { params.decorrelation_nlos_m };
            let rho = (-moved / d).exp();
            self.z = rho * self.z + (1.0 - rho * rho).sqrt() * n;
            self.last = position;
        }
        self.value_db(los, params)
    }

    pub fn value_db(&self, los: bool, params: &ShadowingParams) -> f64 {
        if !params.enabled {
            return 0.0;
        }
        self.z * if los { params.sigma_los_db } else { params.sigma_nlos_db }
    }
}

/// `P_tx + G − PL − shadowing + 10·log10(fading)`, dBm.
pub fn compute_rsrp(tx_dbm: f64, gain_db: f64, path_loss_db: f64, shadowing_db: f64, fading_lin: f64) -> f64 {
    tx_dbm + gain_db - path_loss_db - shadowing_db + lin_to_db(fading_lin)
}

/// `S / (N + Σ I)` in dB; all inputs in dBm.
pub fn compute_sinr(signal_dbm: f64, interferers_dbm: &[f64], noise_dbm: f64) -> f64 {
    let i: f64 = interferers_dbm.iter().map(|&x| db_to_lin(x)).sum();
    signal_dbm - lin_to_db(db_to_lin(noise_dbm) + i)
}

/// LOS iff the ground-plane segment between site and UE misses every building.
pub fn line_of_sight(buildings: &[Rect], site: [f64; 2], ue: [f64; 2]) -> bool {
    buildings.iter().all(|b| b.chord_length(site, ue) == 0.0)
}

/// Orientation of one sector panel: boresight azimuth and mechanical downtilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelFrame {
    up: [f64; 3],
    boresight: [f64; 3],
    side: [f64; 3],
}

impl PanelFrame {
    pub fn new(azimuth_deg: f64, downtilt_deg: f64) -> Self {
        let (sa, ca) = azimuth_deg.to_radians().sin_cos();
        let (st, ct) = downtilt_deg.to_radians().sin_cos();
        let h = [ca, sa, 0.0];
        Self {
            up: [st * h[0], st * h[1], ct],
            boresight: [ct * h[0], ct * h[1], -st],
            side: [-sa, ca, 0.0],
        }
    }

    /// Direction from the panel toward a point, expressed in the panel frame
    /// `(vertical, boresight, horizontal)`.
    pub fn local_direction(&self, from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
        let d = [to[0] - from[0], to[1] - from[1], to[2] - from[2]];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let r = [d[0] / n, d[1] / n, d[2] / n];
        let dot = |a: &[f64; 3]| a[0] * r[0] + a[1] * r[1] + a[2] * r[2];
        [dot(&self.up), dot(&self.boresight), dot(&self.side)]
    }
}
