//! Beam steering, single-ray beamforming gain and the gain-fitting model.
//!
//! Directions use the steering convention `r = (sinθ cosφ, sinθ sinφ, cosθ)`
//! with `θ` measured from the z axis. Beam and ray angles are stored as
//! horizon-referenced elevations and converted with `θ = 90° − elevation`.
//!
//! For the built-in rectangular panels the panel-local frame is: `y` is the
//! panel boresight (elevation 0°, azimuth 90°), `x` runs along the panel
//! rows (vertical) and `z` along the columns (horizontal). The default beam
//! table therefore sweeps its "elevation" across the sector horizontally and
//! the 97° azimuth of the wide beams tilts them below the boresight plane.

mod fit;
mod pattern;

pub use fit::{
    apply_gain_model, fit_gain_model, read_gain_models, read_gain_samples, write_gain_models, GainFitModel,
    GainSample,
};
pub use pattern::{element_pattern_3gpp, ElementPattern, ElementPatternParams};

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Lower bound on single-ray gains, dB; array-factor nulls map here instead of −∞.
pub const NULL_FLOOR_DB: f64 = -80.0;

/// Default vertical element spacing, wavelengths.
pub const DEFAULT_VERTICAL_SPACING: f64 = 0.7;

/// Default horizontal element spacing, wavelengths.
pub const DEFAULT_HORIZONTAL_SPACING: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformingError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("degenerate regression: {0}")]
    DegenerateFit(String),
    #[error("dimension mismatch: expected a multiple of {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for BeamformingError {
    fn from(e: std::io::Error) -> Self {
        BeamformingError::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> BeamformingError {
    BeamformingError::InvalidParameter { name, reason: reason.into() }
}

/// Unit steering vector for a horizon-referenced elevation and an azimuth, degrees.
pub fn direction(elevation_deg: f64, azimuth_deg: f64) -> [f64; 3] {
    let theta = (90.0 - elevation_deg).to_radians();
    let phi = azimuth_deg.to_radians();
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Inverse of [`direction`]: `(elevation_deg, azimuth_deg)` of a unit vector.
pub fn angles_of(r: [f64; 3]) -> (f64, f64) {
    let elevation = r[2].clamp(-1.0, 1.0).asin().to_degrees();
    (elevation, r[1].atan2(r[0]).to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Uniform {
    vertical_spacing: f64,
    horizontal_spacing: f64,
}

/// Antenna element positions in wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
    rows: usize,
    cols: usize,
    uniform: Option<Uniform>,
}

impl ArrayGeometry {
    /// `rows × cols` rectangular panel centred on the origin in the x–z plane:
    /// rows along x with `vertical_spacing`, columns along z with `horizontal_spacing`.
    pub fn planar(
        rows: usize,
        cols: usize,
        vertical_spacing: f64,
        horizontal_spacing: f64,
    ) -> Result<Self, BeamformingError> {
        if rows == 0 || cols == 0 {
            return Err(invalid("rows/cols", "panel needs at least one element"));
        }
        for (name, v) in [("vertical_spacing", vertical_spacing), ("horizontal_spacing", horizontal_spacing)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        let xc = (rows - 1) as f64 / 2.0;
        let zc = (cols - 1) as f64 / 2.0;
        let mut positions = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                positions.push([(m as f64 - xc) * vertical_spacing, 0.0, (n as f64 - zc) * horizontal_spacing]);
            }
        }
        Ok(Self { positions, rows, cols, uniform: Some(Uniform { vertical_spacing, horizontal_spacing }) })
    }

    /// Panel with the default 0.7λ vertical and 0.5λ horizontal spacing.
    pub fn panel(rows: usize, cols: usize) -> Result<Self, BeamformingError> {
        Self::planar(rows, cols, DEFAULT_VERTICAL_SPACING, DEFAULT_HORIZONTAL_SPACING)
    }

    /// Arbitrary element positions, treated as a single column.
    pub fn from_positions(positions: Vec<[f64; 3]>) -> Result<Self, BeamformingError> {
        if positions.is_empty() {
            return Err(invalid("positions", "need at least one element"));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("positions", "coordinates must be finite"));
        }
        Ok(Self { rows: positions.len(), cols: 1, positions, uniform: None })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Normalized array factor `|Σ_s conj(w_s)·a_s|² / S` of weights steered
    /// to `beam_dir` for a ray from `ray_dir`; equals `S` when they coincide.
    pub fn array_factor(&self, beam_dir: [f64; 3], ray_dir: [f64; 3]) -> f64 {
        let d = [ray_dir[0] - beam_dir[0], ray_dir[1] - beam_dir[1], ray_dir[2] - beam_dir[2]];
        match self.uniform {
            Some(u) => {
                dirichlet(self.rows, 2.0 * PI * u.vertical_spacing * d[0])
                    * dirichlet(self.cols, 2.0 * PI * u.horizontal_spacing * d[2])
                    / self.len() as f64
            }
            None => self.array_factor_sum(d),
        }
    }

    fn array_factor_sum(&self, d: [f64; 3]) -> f64 {
        let sum: Complex64 = self.positions.iter().map(|p| Complex64::cis(2.0 * PI * dot(p, &d))).sum();
        sum.norm_sqr() / self.len() as f64
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `|Σ_{m<n} e^{jmψ}|² = sin²(nψ/2) / sin²(ψ/2)`, with the limit `n²` at grating peaks.
fn dirichlet(n: usize, psi: f64) -> f64 {
    let den = (psi / 2.0).sin();
    if den.abs() < 1e-9 {
        return (n * n) as f64;
    }
    let num = (n as f64 * psi / 2.0).sin();
    (num * num) / (den * den)
}

/// A fixed beam: steering angles plus the panel that forms it.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub index: usize,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub geometry: ArrayGeometry,
}

impl Beam {
    pub fn direction(&self) -> [f64; 3] {
        direction(self.elevation_deg, self.azimuth_deg)
    }

    pub fn steering_weights(&self) -> Vec<Complex64> {
        steering_weights(&self.geometry, self.elevation_deg, self.azimuth_deg)
    }
}

/// Elevation of beam `b` (1-based) in the default 12-beam table, degrees.
pub fn default_beam_elevation_deg(b: usize) -> f64 {
    if b <= 8 {
        -52.5 + 15.0 * (b as f64 - 1.0)
    } else {
        -45.0 + 30.0 * (b as f64 - 9.0)
    }
}

/// Default beam set: eight narrow beams from a 16×8 panel at azimuth 90° and
/// four wide beams from an 8×4 panel at azimuth 97°.
pub fn default_beam_set() -> Vec<Beam> {
    let narrow = ArrayGeometry::panel(16, 8).expect("valid panel");
    let wide = ArrayGeometry::panel(8, 4).expect("valid panel");
    (1..=12)
        .map(|b| Beam {
            index: b,
            elevation_deg: default_beam_elevation_deg(b),
            azimuth_deg: if b <= 8 { 90.0 } else { 97.0 },
            geometry: if b <= 8 { narrow.clone() } else { wide.clone() },
        })
        .collect()
}

/// Unit-modulus weights `w_s = exp(j2π r·d_s)` steering toward the given direction.
pub fn steering_weights(geometry: &ArrayGeometry, elevation_deg: f64, azimuth_deg: f64) -> Vec<Complex64> {
    let r = direction(elevation_deg, azimuth_deg);
    geometry.positions().iter().map(|p| Complex64::cis(2.0 * PI * dot(p, &r))).collect()
}

/// Element-local `(vertical, horizontal)` angles of a panel-frame direction, degrees.
fn element_angles(r: [f64; 3]) -> (f64, f64) {
    (r[0].clamp(-1.0, 1.0).asin().to_degrees(), r[2].atan2(r[1]).to_degrees())
}

/// Single-ray gain of `beam` toward a ray from `ray_dir` (panel frame), dB:
/// normalized array factor plus the element gain, floored at [`NULL_FLOOR_DB`].
pub fn single_ray_gain_dir(beam: &Beam, ray_dir: [f64; 3], pattern: &ElementPattern) -> f64 {
    let af = beam.geometry.array_factor(beam.direction(), ray_dir);
    let (v, h) = element_angles(ray_dir);
    (10.0 * af.log10() + pattern.gain_db(v, h)).max(NULL_FLOOR_DB)
}

/// [`single_ray_gain_dir`] of every beam in `beams`, written to `out`.
/// The element gain is evaluated once for all beams.
pub fn beam_gains_dir(beams: &[Beam], ray_dir: [f64; 3], pattern: &ElementPattern, out: &mut [f64]) {
    let (v, h) = element_angles(ray_dir);
    let element = pattern.gain_db(v, h);
    for (beam, g) in beams.iter().zip(out.iter_mut()) {
        let af = beam.geometry.array_factor(beam.direction(), ray_dir);
        *g = (10.0 * af.log10() + element).max(NULL_FLOOR_DB);
    }
}

/// A beam set with its steering directions precomputed, for evaluating the
/// same beams toward many rays. Results equal [`beam_gains_dir`].
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGainEvaluator {
    beams: Vec<Beam>,
    directions: Vec<[f64; 3]>,
    pattern: ElementPattern,
}

impl BeamGainEvaluator {
    pub fn new(beams: Vec<Beam>, pattern: ElementPattern) -> Self {
        let directions = beams.iter().map(Beam::direction).collect();
        Self { beams, directions, pattern }
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Single-ray gain of every beam toward `ray_dir` (panel frame), dB.
    pub fn gains(&self, ray_dir: [f64; 3], out: &mut [f64]) {
        let (v, h) = element_angles(ray_dir);
        let element = self.pattern.gain_db(v, h);
        for ((beam, dir), g) in self.beams.iter().zip(&self.directions).zip(out.iter_mut()) {
            let af = beam.geometry.array_factor(*dir, ray_dir);
            *g = (10.0 * af.log10() + element).max(NULL_FLOOR_DB);
        }
    }
}

/// [`single_ray_gain_dir`] for a ray given by elevation and azimuth, degrees.
pub fn single_ray_gain(beam: &Beam, los_elevation_deg: f64, los_azimuth_deg: f64, pattern: &ElementPattern) -> f64 {
    single_ray_gain_dir(beam, direction(los_elevation_deg, los_azimuth_deg), pattern)
}

/// Beam-domain response `h_u = (1/√S) Σ_s w_s·h_{u,s}` for `U × S` row-major responses.
pub fn apply_beam_weights(responses: &[Complex64], weights: &[Complex64]) -> Result<Vec<Complex64>, BeamformingError> {
    let s = weights.len();
    if s == 0 {
        return Err(invalid("weights", "must not be empty"));
    }
    if responses.len() % s != 0 {
        return Err(BeamformingError::DimensionMismatch { expected: s, got: responses.len() });
    }
    let norm = 1.0 / (s as f64).sqrt();
    Ok(responses
        .chunks_exact(s)
        .map(|row| row.iter().zip(weights).map(|(h, w)| w * h).sum::<Complex64>() * norm)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn evaluator_matches_direct_gains() {
        let pattern = ElementPattern::default();
        let eval = BeamGainEvaluator::new(default_beam_set(), pattern.clone());
        let (mut a, mut b) = (vec![0.0; 12], vec![0.0; 12]);
        for (el, az) in [(0.0, 90.0), (-10.0, 120.0), (35.0, 60.0), (5.0, 270.0)] {
            let r = direction(el, az);
            eval.gains(r, &mut a);
            beam_gains_dir(&default_beam_set(), r, &pattern, &mut b);
            assert_eq!(a, b);
        }
    }

    const ISO: ElementPattern = ElementPattern::Isotropic;

    #[test]
    fn beam_table() {
        let expect = [-52.5, -37.5, -22.5, -7.5, 7.5, 22.5, 37.5, 52.5, -45.0, -15.0, 15.0, 45.0];
        let beams = default_beam_set();
        assert_eq!(beams.len(), 12);
        for (b, e) in beams.iter().zip(expect) {
            assert_eq!(b.elevation_deg, e);
        }
        assert!(beams[..8].iter().all(|b| b.azimuth_deg == 90.0 && b.geometry.rows() == 16 && b.geometry.cols() == 8));
        assert!(beams[8..].iter().all(|b| b.azimuth_deg == 97.0 && b.geometry.rows() == 8 && b.geometry.cols() == 4));
    }

    #[test]
    fn two_element_weights() {
        let g = ArrayGeometry::from_positions(vec![[0.0; 3], [0.0, 0.5, 0.0]]).unwrap();
        let w = steering_weights(&g, 0.0, 90.0);
        assert!((w[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((w[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn single_element_weight_is_one() {
        let g = ArrayGeometry::from_positions(vec![[0.0; 3]]).unwrap();
        for (e, a) in [(0.0, 0.0), (33.0, 120.0), (-80.0, -45.0)] {
            assert_eq!(steering_weights(&g, e, a), vec![Complex64::new(1.0, 0.0)]);
            let beam = Beam { index: 1, elevation_deg: 10.0, azimuth_deg: 90.0, geometry: g.clone() };
            assert!(single_ray_gain(&beam, e, a, &ISO).abs() < 1e-12);
        }
    }

    #[test]
    fn boresight_gain_of_16x8_panel() {
        // Coherent-sum oracle: |Σ 1|² / S = S.
        let beams = default_beam_set();
        for b in &beams[..8] {
            let g = single_ray_gain(b, b.elevation_deg, b.azimuth_deg, &ISO);
            assert!((g - 10.0 * 128f64.log10()).abs() < 1e-9, "{g}");
            assert!((g - 21.07).abs() < 0.01);
        }
    }

    #[test]
    fn endfire_null_hits_floor() {
        let g = ArrayGeometry::from_positions(vec![[0.0; 3], [0.0, 0.0, 0.5]]).unwrap();
        let beam = Beam { index: 1, elevation_deg: 0.0, azimuth_deg: 90.0, geometry: g };
        assert_eq!(single_ray_gain(&beam, 90.0, 0.0, &ISO), NULL_FLOOR_DB);
    }

    #[test]
    fn closed_form_matches_element_sum() {
        let g = ArrayGeometry::panel(16, 8).unwrap();
        let general = ArrayGeometry::from_positions(g.positions().to_vec()).unwrap();
        for (be, ba, re, ra) in [(7.5, 90.0, 10.0, 85.0), (-52.5, 90.0, 30.0, 120.0), (0.0, 97.0, -60.0, 10.0)] {
            let (b, r) = (direction(be, ba), direction(re, ra));
            let a = g.array_factor(b, r);
            let s = general.array_factor(b, r);
            assert!((a - s).abs() < 1e-9 * s.max(1.0), "{a} vs {s}");
        }
    }

    #[test]
    fn batch_gains_match_single() {
        let beams = default_beam_set();
        let pattern = ElementPattern::default();
        let ray = direction(-20.0, 93.0);
        let mut out = [0.0; 12];
        beam_gains_dir(&beams, ray, &pattern, &mut out);
        for (b, g) in beams.iter().zip(out) {
            assert_eq!(g, single_ray_gain_dir(b, ray, &pattern));
        }
    }

    #[test]
    fn angles_round_trip() {
        for (e, a) in [(0.0, 90.0), (-45.0, 97.0), (30.0, -120.0)] {
            let (e2, a2) = angles_of(direction(e, a));
            assert!((e - e2).abs() < 1e-9 && (a - a2).abs() < 1e-9);
        }
    }

    #[test]
    fn apply_weights_examples() {
        let h = vec![Complex64::new(0.3, -0.7), Complex64::new(2.0, 1.0)];
        let out = apply_beam_weights(&h, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(out, h);

        let g = ArrayGeometry::panel(4, 2).unwrap();
        let w = steering_weights(&g, 20.0, 80.0);
        let h: Vec<Complex64> = w.iter().map(|w| w.conj()).collect();
        let out = apply_beam_weights(&h, &w).unwrap();
        assert!((out[0].norm() - 8f64.sqrt()).abs() < 1e-12);

        let w = vec![Complex64::new(1.0, 0.0); 4];
        let h: Vec<Complex64> = [1.0, -1.0, 1.0, -1.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert_eq!(apply_beam_weights(&h, &w).unwrap(), vec![Complex64::new(0.0, 0.0)]);

        assert!(matches!(
            apply_beam_weights(&h[..3], &w),
            Err(BeamformingError::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(apply_beam_weights(&h, &[]).is_err());
    }

    proptest! {
        #[test]
        fn weights_have_unit_modulus(e in -90.0f64..90.0, a in -180.0f64..180.0, rows in 1usize..6, cols in 1usize..6) {
            let g = ArrayGeometry::panel(rows, cols).unwrap();
            for w in steering_weights(&g, e, a) {
                prop_assert!((w.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn steered_direction_is_maximal(be in -60.0f64..60.0, ba in 60.0f64..120.0,
                                        re in -90.0f64..90.0, ra in -180.0f64..180.0) {
            let beam = Beam { index: 1, elevation_deg: be, azimuth_deg: ba, geometry: ArrayGeometry::panel(8, 4).unwrap() };
            let peak = single_ray_gain(&beam, be, ba, &ISO);
            prop_assert!(single_ray_gain(&beam, re, ra, &ISO) <= peak + 1e-9);
        }

        #[test]
        fn beam_weighting_is_linear(x in proptest::collection::vec(-5.0f64..5.0, 16), k in -3.0f64..3.0) {
            let g = ArrayGeometry::panel(2, 2).unwrap();
            let w = steering_weights(&g, 12.0, 70.0);
            let a: Vec<Complex64> = x[..8].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let b: Vec<Complex64> = x[8..].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let combo: Vec<Complex64> = a.iter().zip(&b).map(|(a, b)| a * k + b).collect();
            let lhs = apply_beam_weights(&combo, &w).unwrap()[0];
            let rhs = apply_beam_weights(&a, &w).unwrap()[0] * k + apply_beam_weights(&b, &w).unwrap()[0];
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }
    }
}
