use crate::error::{invalid, Result};
use crate::grid::{GainGrid, GridSpec, Position2D};
use crate::rng::SeededRng;
use crate::truth::field::ShadowingSampler;
use crate::truth::layout::{los_blocked, BuildingLayout, Point3};

/// Propagation parameters of the synthetic ground truth.
///
/// Only `beta0_db` (gain at the 1 m reference distance) has a measured
/// counterpart; the exponents, NLoS penalty and shadowing statistics are
/// synthetic defaults chosen to give urban-looking maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthParams {
    pub beta0_db: f64,
    pub n_los: f64,
    pub n_nlos: f64,
    pub nlos_penalty_db: f64,
    pub shadow_std_db: f64,
    pub shadow_corr_len: f64,
}

impl Default for TruthParams {
    fn default() -> Self {
        Self {
            beta0_db: -30.0,
            n_los: 2.2,
            n_nlos: 3.5,
            nlos_penalty_db: 20.0,
            shadow_std_db: 4.0,
            shadow_corr_len: 50.0,
        }
    }
}

impl TruthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_los > 0.0 && self.n_nlos > 0.0) {
            return Err(invalid("path-loss exponents must be positive"));
        }
        if !(self.shadow_std_db >= 0.0) {
            return Err(invalid("shadowing std must be non-negative"));
        }
        if !(self.shadow_corr_len > 0.0) {
            return Err(invalid("shadowing correlation length must be positive"));
        }
        if !(self.beta0_db.is_finite() && self.nlos_penalty_db.is_finite()) {
            return Err(invalid("reference gain and NLoS penalty must be finite"));
        }
        Ok(())
    }

    /// Deterministic part of the gain (no shadowing) for a link of 3D length
    /// `distance`, clamped at the 1 m reference distance.
    pub fn path_gain_db(&self, distance: f64, los: bool) -> f64 {
        let d = distance.max(1.0);
        if los {
            self.beta0_db - 10.0 * self.n_los * d.log10()
        } else {
            self.beta0_db - 10.0 * self.n_nlos * d.log10() - self.nlos_penalty_db
        }
    }
}

/// Heights of the two link ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkHeights {
    pub gbs_height: f64,
    pub uav_altitude: f64,
}

/// Ground-truth CKM for one GBS given an already drawn shadowing field.
pub fn truth_ckm_with_shadowing(
    layout: &BuildingLayout,
    gbs: Position2D,
    heights: LinkHeights,
    params: &TruthParams,
    shadow: &GainGrid,
) -> Result<GainGrid> {
    params.validate()?;
    let spec = *shadow.spec();
    let tx = Point3::at(gbs, heights.gbs_height);
    let dz = heights.uav_altitude - heights.gbs_height;
    let gains = spec
        .positions()
        .zip(shadow.values())
        .map(|(p, s)| {
            let d = (gbs.distance_sq(&p) + dz * dz).sqrt();
            let los = !los_blocked(layout, tx, Point3::at(p, heights.uav_altitude));
            params.path_gain_db(d, los) + s
        })
        .collect();
    GainGrid::new(spec, gains)
}

/// Ground-truth CKM for one GBS; draws a fresh shadowing field from `rng`.
pub fn generate_truth_ckm(
    layout: &BuildingLayout,
    gbs: Position2D,
    heights: LinkHeights,
    spec: GridSpec,
    params: &TruthParams,
    rng: &mut SeededRng,
) -> Result<GainGrid> {
    params.validate()?;
    let shadow = if params.shadow_std_db == 0.0 {
        GainGrid::constant(spec, 0.0)?
    } else {
        ShadowingSampler::new(spec, params.shadow_corr_len)?.sample(params.shadow_std_db, rng)?
    };
    truth_ckm_with_shadowing(layout, gbs, heights, params, &shadow)
}
