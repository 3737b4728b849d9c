use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{invalid, BeamformingError};
use crate::channel_stats::Condition;

/// Minimum number of samples accepted by [`fit_gain_model`].
pub const MIN_FIT_SAMPLES: usize = 10;

/// Minimum spread of single-ray gains accepted by [`fit_gain_model`], dB.
pub const MIN_FIT_SPAN_DB: f64 = 10.0;

/// Clamped-linear map from single-ray to multipath beamforming gain:
/// `max(slope·g + intercept_db, floor_db)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFitModel {
    pub condition: Condition,
    pub slope: f64,
    pub intercept_db: f64,
    pub floor_db: f64,
}

impl GainFitModel {
    /// Calibration defaults: LOS follows the single-ray gain down to −20 dB;
    /// NLOS is compressed (slope 0.6, −3 dB) and saturates at 0 dB.
    pub fn default_for(condition: Condition) -> Self {
        match condition {
            Condition::Los => Self { condition, slope: 1.0, intercept_db: 0.0, floor_db: -20.0 },
            Condition::Nlos => Self { condition, slope: 0.6, intercept_db: -3.0, floor_db: 0.0 },
        }
    }

    pub fn default_floor_db(condition: Condition) -> f64 {
        Self::default_for(condition).floor_db
    }

    pub fn apply(&self, g_single_db: f64) -> f64 {
        apply_gain_model(self, g_single_db)
    }
}

pub fn apply_gain_model(model: &GainFitModel, g_single_db: f64) -> f64 {
    (model.slope * g_single_db + model.intercept_db).max(model.floor_db)
}

/// Ordinary least-squares line through `(g_single_db, g_multipath_db)` pairs.
/// The floor is `floor_db` if given, else the condition default.
pub fn fit_gain_model(
    samples: &[(f64, f64)],
    condition: Condition,
    floor_db: Option<f64>,
) -> Result<GainFitModel, BeamformingError> {
    if samples.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(invalid("samples", "gains must be finite"));
    }
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(BeamformingError::DegenerateFit(format!(
            "{} samples, need at least {MIN_FIT_SAMPLES}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (sxx, sxy) = samples.iter().fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        (sxx + (x - mx) * (x - mx), sxy + (x - mx) * (y - my))
    });
    if sxx == 0.0 {
        return Err(BeamformingError::DegenerateFit("single-ray gains have zero variance".into()));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < MIN_FIT_SPAN_DB {
        return Err(BeamformingError::DegenerateFit(format!(
            "single-ray gains span {:.2} dB, need at least {MIN_FIT_SPAN_DB} dB",
            hi - lo
        )));
    }
    let slope = sxy / sxx;
    Ok(GainFitModel {
        condition,
        slope,
        intercept_db: my - slope * mx,
        floor_db: floor_db.unwrap_or_else(|| GainFitModel::default_floor_db(condition)),
    })
}

/// One row of a gain-sample file.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct GainSample {
    pub condition: Condition,
    pub g_single_db: f64,
    pub g_multipath_db: f64,
}

/// Reads `condition,g_single_db,g_multipath_db` rows.
pub fn read_gain_samples<R: BufRead>(r: R) -> Result<Vec<GainSample>, BeamformingError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| format_err(1, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["condition", "g_single_db", "g_multipath_db"] {
        return Err(BeamformingError::Format {
            line: 1,
            reason: "expected header `condition,g_single_db,g_multipath_db`".into(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<GainSample>().enumerate() {
        out.push(rec.map_err(|e| format_err(i + 2, e))?);
    }
    Ok(out)
}

fn format_err(line: usize, e: csv::Error) -> BeamformingError {
    BeamformingError::Format { line, reason: e.to_string() }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    model: Vec<GainFitModel>,
}

/// Writes models as TOML `[[model]]` tables.
pub fn write_gain_models<W: Write>(models: &[GainFitModel], mut w: W) -> Result<(), BeamformingError> {
    let text = toml::to_string(&ModelFile { model: models.to_vec() })
        .map_err(|e| BeamformingError::Format { line: 0, reason: e.to_string() })?;
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_gain_models(text: &str) -> Result<Vec<GainFitModel>, BeamformingError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| BeamformingError::Format { line: 0, reason: e.to_string() })?;
    for m in &file.model {
        if ![m.slope, m.intercept_db, m.floor_db].iter().all(|v| v.is_finite()) {
            return Err(invalid("model", "coefficients must be finite"));
        }
    }
    Ok(file.model)
}
