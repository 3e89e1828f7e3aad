//! Mission/world description: GBS layout, endpoints, altitudes, speed and
//! SNR parameters, plus the coverage radius derived from them.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema tag carried by every scenario file.
pub const SCENARIO_FORMAT: &str = "uav-scenario/1";

/// Horizontal position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Point at fraction `t` along `self -> other`.
    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl std::ops::Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Horizontal region within which a GBS meets the SNR target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageDisk {
    pub center: Point2,
    pub radius: f64,
}

impl CoverageDisk {
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.dist(self.center) <= self.radius + tol
    }
}

/// Raw scenario parameters, exactly as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub format: String,
    pub gbs: Vec<Point2>,
    pub u0: Point2,
    #[serde(rename = "uF")]
    pub u_f: Point2,
    pub uav_altitude_m: f64,
    pub gbs_height_m: f64,
    pub v_max_mps: f64,
    #[serde(rename = "ref_snr_dB")]
    pub ref_snr_db: f64,
    #[serde(rename = "snr_target_dB")]
    pub snr_target_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_radius_override_m: Option<f64>,
}

impl ScenarioParams {
    /// Parameters with the given layout and the default radio/flight setup
    /// (H = 90 m, H_G = 12.5 m, 50 m/s, 80 dB reference SNR, 20 dB target).
    pub fn with_layout(gbs: Vec<Point2>, u0: Point2, u_f: Point2) -> Self {
        Self {
            format: SCENARIO_FORMAT.to_string(),
            gbs,
            u0,
            u_f,
            uav_altitude_m: 90.0,
            gbs_height_m: 12.5,
            v_max_mps: 50.0,
            ref_snr_db: 80.0,
            snr_target_db: 20.0,
            coverage_radius_override_m: None,
        }
    }
}

/// Validated, immutable scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    params: ScenarioParams,
    coverage_radius_m: f64,
}

impl Scenario {
    pub fn new(params: ScenarioParams) -> Result<Self> {
        validate(&params)?;
        let coverage_radius_m = derive_coverage_radius(&params)?;
        Ok(Self {
            params,
            coverage_radius_m,
        })
    }

    /// Desk-scale scenario with a pinned coverage radius.
    pub fn with_radius(
        gbs: Vec<Point2>,
        u0: Point2,
        u_f: Point2,
        radius_m: f64,
        v_max_mps: f64,
    ) -> Result<Self> {
        let mut params = ScenarioParams::with_layout(gbs, u0, u_f);
        params.coverage_radius_override_m = Some(radius_m);
        params.v_max_mps = v_max_mps;
        Self::new(params)
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    pub fn gbs(&self) -> &[Point2] {
        &self.params.gbs
    }

    pub fn num_gbs(&self) -> usize {
        self.params.gbs.len()
    }

    pub fn u0(&self) -> Point2 {
        self.params.u0
    }

    pub fn u_f(&self) -> Point2 {
        self.params.u_f
    }

    pub fn v_max(&self) -> f64 {
        self.params.v_max_mps
    }

    /// d̄: the largest horizontal UAV-GBS distance meeting the SNR target.
    pub fn coverage_radius(&self) -> f64 {
        self.coverage_radius_m
    }

    /// Vertical UAV-GBS separation H - H_G.
    pub fn height_gap(&self) -> f64 {
        self.params.uav_altitude_m - self.params.gbs_height_m
    }

    pub fn disk(&self, m: usize) -> CoverageDisk {
        CoverageDisk {
            center: self.params.gbs[m],
            radius: self.coverage_radius_m,
        }
    }

    pub fn disks(&self) -> Vec<CoverageDisk> {
        (0..self.num_gbs()).map(|m| self.disk(m)).collect()
    }

    pub fn straight_distance(&self) -> f64 {
        self.u0().dist(self.u_f())
    }

    /// SNR in dB at horizontal distance `horiz_m` from a GBS.
    pub fn snr_db_at(&self, horiz_m: f64) -> f64 {
        let h = self.height_gap();
        self.params.ref_snr_db - 10.0 * (h * h + horiz_m * horiz_m).log10()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.params)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: ScenarioParams =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if params.format != SCENARIO_FORMAT {
            return Err(Error::Parse(format!(
                "unsupported format {:?}, expected {SCENARIO_FORMAT:?}",
                params.format
            )));
        }
        Self::new(params)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_json(&text)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = s.to_json()?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// d̄ = sqrt(ρ0/ρ̄ - (H - H_G)^2), or the override when one is set.
pub fn derive_coverage_radius(p: &ScenarioParams) -> Result<f64> {
    if let Some(r) = p.coverage_radius_override_m {
        return Ok(r);
    }
    let h = p.uav_altitude_m - p.gbs_height_m;
    let radicand = db_to_linear(p.ref_snr_db - p.snr_target_db) - h * h;
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "rho0/rho_bar - (H - H_G)^2 = {radicand} is not positive; \
             the SNR target is unreachable even directly above a GBS"
        )));
    }
    Ok(radicand.sqrt())
}

fn validate(p: &ScenarioParams) -> Result<()> {
    let bad = |msg: String| Err(Error::Validation(msg));
    if p.gbs.is_empty() {
        return bad("at least one GBS is required".into());
    }
    for (i, g) in p.gbs.iter().enumerate() {
        if !g.is_finite() {
            return bad(format!("GBS {} has a non-finite coordinate", i + 1));
        }
    }
    if !p.u0.is_finite() || !p.u_f.is_finite() {
        return bad("mission endpoints must be finite".into());
    }
    for (name, v) in [
        ("uav_altitude_m", p.uav_altitude_m),
        ("gbs_height_m", p.gbs_height_m),
        ("v_max_mps", p.v_max_mps),
        ("ref_snr_dB", p.ref_snr_db),
        ("snr_target_dB", p.snr_target_db),
    ] {
        if !v.is_finite() {
            return bad(format!("{name} must be finite"));
        }
    }
    if p.gbs_height_m < 0.0 {
        return bad("gbs_height_m must be non-negative".into());
    }
    if p.uav_altitude_m <= p.gbs_height_m {
        return bad("uav_altitude_m must exceed gbs_height_m".into());
    }
    if p.v_max_mps <= 0.0 {
        return bad("v_max_mps must be positive".into());
    }
    if let Some(r) = p.coverage_radius_override_m {
        if !(r.is_finite() && r > 0.0) {
            return bad("coverage_radius_override_m must be positive and finite".into());
        }
    }
    for i in 0..p.gbs.len() {
        for j in i + 1..p.gbs.len() {
            if p.gbs[i] == p.gbs[j] {
                return bad(format!("GBS {} and GBS {} coincide", i + 1, j + 1));
            }
        }
    }
    Ok(())
}

/// Index (0-based) and horizontal distance of the nearest GBS. Ties go to the
/// lowest index.
pub fn closest_gbs(p: Point2, s: &Scenario) -> (usize, f64) {
    let mut best = (0, p.dist(s.gbs()[0]));
    for (m, g) in s.gbs().iter().enumerate().skip(1) {
        let d = p.dist(*g);
        if d < best.1 {
            best = (m, d);
        }
    }
    best
}
