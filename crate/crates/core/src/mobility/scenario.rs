use serde::{Deserialize, Serialize};

use super::{invalid, MobilityError, RadioParams};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite()) && self.x1 > self.x0 && self.y1 > self.y0
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    /// Strictly inside, excluding the boundary.
    pub fn contains_interior(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.x0, self.x1), p[1].clamp(self.y0, self.y1)]
    }

    /// Length of the part of segment `a→b` inside the rectangle (Liang–Barsky clip).
    pub fn chord_length(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = [b[0] - a[0], b[1] - a[1]];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (p, q) in [
            (-d[0], a[0] - self.x0),
            (d[0], self.x1 - a[0]),
            (-d[1], a[1] - self.y0),
            (d[1], self.y1 - a[1]),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return 0.0;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        if t1 > t0 {
            (t1 - t0) * d[0].hypot(d[1])
        } else {
            0.0
        }
    }
}

/// A base-station site with one cell per sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub x: f64,
    pub y: f64,
    /// Sector boresight azimuths, degrees counter-clockwise from +x.
    pub sector_azimuths_deg: Vec<f64>,
}

/// Manhattan street grid: vertical streets at `xs`, horizontal streets at `ys`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreetGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl StreetGrid {
    fn validate(&self) -> Result<(), MobilityError> {
        for (name, v) in [("streets.xs", &self.xs), ("streets.ys", &self.ys)] {
            if v.len() < 2 || v.windows(2).any(|w| !(w[0] < w[1])) || v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(name, "need at least two strictly ascending coordinates"));
            }
        }
        Ok(())
    }
}

/// Where a UE group lives and how it moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    /// Rectilinear motion along the scenario street grid.
    Streets { name: String },
    /// Random-waypoint walk inside a rectangle.
    RandomWaypoint { name: String, rect: Rect },
}

impl Region {
    pub fn name(&self) -> &str {
        match self {
            Region::Streets { name } | Region::RandomWaypoint { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeGroup {
    pub name: String,
    pub count: usize,
    pub speed_kmh: f64,
    pub region: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub duration_s: f64,
    pub tick_s: f64,
    pub seed: u64,
}

/// Geometry, population and radio parameters of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub carrier_hz: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    /// Mechanical downtilt of every panel, degrees below the horizon.
    pub downtilt_deg: f64,
    pub sites: Vec<Site>,
    #[serde(default)]
    pub buildings: Vec<Rect>,
    pub streets: Option<StreetGrid>,
    pub regions: Vec<Region>,
    pub ue_groups: Vec<UeGroup>,
    pub sim: SimSettings,
    #[serde(default)]
    pub radio: RadioParams,
}

/// One sector of a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub id: usize,
    pub site: usize,
    pub position: [f64; 2],
    pub azimuth_deg: f64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, MobilityError> {
        let s: Scenario = toml::from_str(text).map_err(|e| MobilityError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String, MobilityError> {
        toml::to_string(self).map_err(|e| MobilityError::Scenario(e.to_string()))
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (si, site) in self.sites.iter().enumerate() {
            for &az in &site.sector_azimuths_deg {
                out.push(Cell { id: out.len(), site: si, position: [site.x, site.y], azimuth_deg: az });
            }
        }
        out
    }

    pub fn ue_count(&self) -> usize {
        self.ue_groups.iter().map(|g| g.count).sum()
    }

    pub fn tick_count(&self) -> u64 {
        (self.sim.duration_s / self.sim.tick_s * (1.0 + 1e-12)).floor() as u64
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name() == name)
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
            ("sim.duration_s", self.sim.duration_s),
            ("sim.tick_s", self.sim.tick_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if !self.downtilt_deg.is_finite() || self.downtilt_deg.abs() >= 90.0 {
            return Err(invalid("downtilt_deg", "must lie in (-90, 90)"));
        }
        if self.tick_count() == 0 {
            return Err(invalid("sim.duration_s", "shorter than one tick"));
        }
        if self.sites.is_empty() || self.sites.iter().any(|s| s.sector_azimuths_deg.is_empty()) {
            return Err(invalid("sites", "need at least one site with at least one sector"));
        }
        if let Some(b) = self.buildings.iter().find(|b| !b.is_valid()) {
            return Err(invalid("buildings", format!("degenerate rectangle {b:?}")));
        }
        for s in &self.sites {
            if self.buildings.iter().any(|b| b.contains_interior([s.x, s.y])) {
                return Err(invalid("sites", format!("site at ({}, {}) lies inside a building", s.x, s.y)));
            }
        }
        if let Some(g) = &self.streets {
            g.validate()?;
        }
        for (i, r) in self.regions.iter().enumerate() {
            if self.regions[..i].iter().any(|o| o.name() == r.name()) {
                return Err(invalid("regions", format!("duplicate region `{}`", r.name())));
            }
            match r {
                Region::Streets { .. } if self.streets.is_none() => {
                    return Err(invalid("regions", format!("`{}` needs a street grid", r.name())));
                }
                Region::RandomWaypoint { rect, .. } if !rect.is_valid() => {
                    return Err(invalid("regions", format!("`{}` has a degenerate rectangle", r.name())));
                }
                _ => {}
            }
        }
        if self.ue_groups.is_empty() || self.ue_count() == 0 {
            return Err(invalid("ue_groups", "need at least one UE"));
        }
        for g in &self.ue_groups {
            if !(g.speed_kmh.is_finite() && g.speed_kmh >= 0.0) {
                return Err(invalid("ue_groups", format!("`{}` speed must be non-negative", g.name)));
            }
            if self.region(&g.region).is_none() {
                return Err(invalid("ue_groups", format!("`{}` references unknown region `{}`", g.name, g.region)));
            }
        }
        self.radio.validate(self.sim.tick_s)
    }

    /// Reduced urban grid for quick runs: 4 three-sector sites (12 cells) in
    /// a 3×3-block street grid with an open square and a pedestrian block;
    /// 12 street UEs at 30 km/h, 2 square and 4 pedestrian UEs at 3 km/h; 60 s.
    pub fn desk() -> Self {
        let lines = vec![0.0, 80.0, 160.0, 240.0];
        let square = (1, 1);
        let pedestrian = (0, 2);
        let mut buildings = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != square && (i, j) != pedestrian {
                    buildings.push(block(i, j, 10.0));
                }
            }
        }
        let sectors = vec![45.0, 165.0, 285.0];
        let sites = [(80.0, 80.0), (160.0, 80.0), (80.0, 160.0), (160.0, 160.0)]
            .into_iter()
            .map(|(x, y)| Site { x, y, sector_azimuths_deg: sectors.clone() })
            .collect();
        Self {
            name: "desk".into(),
            carrier_hz: 28e9,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            downtilt_deg: 5.0,
            sites,
            buildings,
            streets: Some(StreetGrid { xs: lines.clone(), ys: lines }),
            regions: vec![
                Region::Streets { name: "streets".into() },
                Region::RandomWaypoint { name: "square".into(), rect: block(square.0, square.1, 12.0) },
                Region::RandomWaypoint { name: "pedestrian".into(), rect: block(pedestrian.0, pedestrian.1, 12.0) },
            ],
            ue_groups: vec![
                UeGroup { name: "street".into(), count: 12, speed_kmh: 30.0, region: "streets".into() },
                UeGroup { name: "square".into(), count: 2, speed_kmh: 3.0, region: "square".into() },
                UeGroup { name: "pedestrian".into(), count: 4, speed_kmh: 3.0, region: "pedestrian".into() },
            ],
            sim: SimSettings { duration_s: 60.0, tick_s: 0.01, seed: 1 },
            radio: RadioParams::default(),
        }
    }

    /// Full-size grid: 11 three-sector sites (33 cells) over a 5×3-block
    /// street grid, 200 street UEs at 30 km/h, 40 square and 80 pedestrian
    /// UEs at 3 km/h.
    pub fn full() -> Self {
        let xs: Vec<f64> = (0..6).map(|k| k as f64 * 80.0).collect();
        let ys: Vec<f64> = (0..4).map(|k| k as f64 * 80.0).collect();
        let square = (2, 1);
        let pedestrian = [(0, 0), (4, 2)];
        let mut buildings = Vec::new();
        for i in 0..5 {
            for j in 0..3 {
                if (i, j) != square && !pedestrian.contains(&(i, j)) {
                    buildings.push(block(i, j, 10.0));
                }
            }
        }
        let sectors = vec![45.0, 165.0, 285.0];
        let mut sites = Vec::new();
        for &x in &xs[1..5] {
            for &y in &ys[1..3] {
                sites.push(Site { x, y, sector_azimuths_deg: sectors.clone() });
            }
        }
        for (x, y) in [(0.0, 160.0), (400.0, 80.0), (240.0, 0.0)] {
            sites.push(Site { x, y, sector_azimuths_deg: sectors.clone() });
        }
        Self {
            name: "full".into(),
            carrier_hz: 28e9,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            downtilt_deg: 5.0,
            sites,
            buildings,
            streets: Some(StreetGrid { xs, ys }),
            regions: vec![
                Region::Streets { name: "streets".into() },
                Region::RandomWaypoint { name: "square".into(), rect: block(square.0, square.1, 12.0) },
                Region::RandomWaypoint { name: "park_west".into(), rect: block(0, 0, 12.0) },
                Region::RandomWaypoint { name: "park_east".into(), rect: block(4, 2, 12.0) },
            ],
            ue_groups: vec![
                UeGroup { name: "street".into(), count: 200, speed_kmh: 30.0, region: "streets".into() },
                UeGroup { name: "square".into(), count: 40, speed_kmh: 3.0, region: "square".into() },
                UeGroup { name: "pedestrian_west".into(), count: 40, speed_kmh: 3.0, region: "park_west".into() },
                UeGroup { name: "pedestrian_east".into(), count: 40, speed_kmh: 3.0, region: "park_east".into() },
            ],
            sim: SimSettings { duration_s: 60.0, tick_s: 0.01, seed: 1 },
            radio: RadioParams::default(),
        }
    }
}

/// Block `(i, j)` of an 80 m grid, inset by `margin` from the street centrelines.
fn block(i: usize, j: usize, margin: f64) -> Rect {
    let (x, y) = (i as f64 * 80.0, j as f64 * 80.0);
    Rect::new(x + margin, y + margin, x + 80.0 - margin, y + 80.0 - margin)
}
