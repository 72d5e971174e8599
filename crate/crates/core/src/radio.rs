//! Weighted sum-rate evaluation of a UAV placement over per-GBS channel maps.

use crate::error::{invalid, Error, Result};
use crate::grid::{GainGrid, Position2D};
use crate::scenario::Scenario;
use crate::units::{db_to_linear, dbm_to_watts};

/// How a CKM is read between lattice nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LookupMode {
    /// Value of the closest node; keeps the objective piecewise constant.
    #[default]
    Nearest,
    /// Bilinear interpolation of the four surrounding nodes, in dB.
    Bilinear,
}

/// Concatenated horizontal UAV positions `(x_1, y_1, ..., x_K, y_K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementVector(Vec<f64>);

impl PlacementVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || !coords.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "placement needs an even, non-zero number of coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self(coords))
    }

    pub fn from_positions(positions: &[Position2D]) -> Self {
        Self(positions.iter().flat_map(|p| [p.x, p.y]).collect())
    }

    pub fn num_uavs(&self) -> usize {
        self.0.len() / 2
    }

    pub fn uav(&self, k: usize) -> Position2D {
        Position2D::new(self.0[2 * k], self.0[2 * k + 1])
    }

    pub fn positions(&self) -> Vec<Position2D> {
        (0..self.num_uavs()).map(|k| self.uav(k)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Gain in dB at `p`. Positions outside the lattice are clamped to it.
pub fn lookup_gain_db(ckm: &GainGrid, p: &Position2D, mode: LookupMode) -> f64 {
    let spec = ckm.spec();
    match mode {
        LookupMode::Nearest => {
            let (i, j) = spec.nearest_node(p);
            ckm.at_flat(j * spec.nx + i)
        }
        LookupMode::Bilinear => {
            let p = spec.bounds().clamp(p);
            let fx = (p.x - spec.origin_x) / spec.spacing;
            let fy = (p.y - spec.origin_y) / spec.spacing;
            let i0 = (fx.floor() as usize).min(spec.nx - 2);
            let j0 = (fy.floor() as usize).min(spec.ny - 2);
            let tx = (fx - i0 as f64).clamp(0.0, 1.0);
            let ty = (fy - j0 as f64).clamp(0.0, 1.0);
            let at = |i: usize, j: usize| ckm.at_flat(j * spec.nx + i);
            let bottom = (1.0 - tx) * at(i0, j0) + tx * at(i0 + 1, j0);
            let top = (1.0 - tx) * at(i0, j0 + 1) + tx * at(i0 + 1, j0 + 1);
            (1.0 - ty) * bottom + ty * top
        }
    }
}

/// Linear power gain at `p`.
pub fn lookup_gain(ckm: &GainGrid, p: &Position2D, mode: LookupMode) -> f64 {
    db_to_linear(lookup_gain_db(ckm, p, mode))
}

/// Objective evaluator with the scenario's powers pre-converted to watts.
#[derive(Debug, Clone)]
pub struct SumRateEvaluator<'a> {
    ckms: &'a [GainGrid],
    mode: LookupMode,
    tx_watts: Vec<f64>,
    noise_watts: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> SumRateEvaluator<'a> {
    pub fn new(scenario: &Scenario, ckms: &'a [GainGrid], mode: LookupMode) -> Result<Self> {
        scenario.validate()?;
        if ckms.len() != scenario.num_uavs() {
            return Err(invalid(format!(
                "scenario has {} GBSs but {} CKMs were given",
                scenario.num_uavs(),
                ckms.len()
            )));
        }
        Ok(Self {
            ckms,
            mode,
            tx_watts: scenario.tx_power_dbm.iter().map(|&p| dbm_to_watts(p)).collect(),
            noise_watts: scenario.noise_power_dbm.iter().map(|&p| dbm_to_watts(p)).collect(),
            weights: scenario.rate_weights.clone(),
        })
    }

    pub fn num_uavs(&self) -> usize {
        self.ckms.len()
    }

    fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != 2 * self.num_uavs() {
            return Err(invalid(format!(
                "placement has {} coordinates, expected {}",
                q.len(),
                2 * self.num_uavs()
            )));
        }
        Ok(())
    }

    /// SINR at GBS `k` for the placement `q`.
    pub fn sinr(&self, q: &[f64], k: usize) -> Result<f64> {
        self.check(q)?;
        if k >= self.num_uavs() {
            return Err(invalid(format!("GBS index {k} out of range")));
        }
        let gain = |j: usize| lookup_gain(&self.ckms[k], &Position2D::new(q[2 * j], q[2 * j + 1]), self.mode);
        let mut interference = 0.0;
        let mut signal = 0.0;
        for j in 0..self.num_uavs() {
            let g = gain(j);
            if !g.is_finite() {
                return Err(Error::NonFiniteGain { gbs: k });
            }
            if j == k {
                signal = self.tx_watts[j] * g;
            } else {
                interference += self.tx_watts[j] * g;
            }
        }
        Ok(signal / (interference + self.noise_watts[k]))
    }

    pub fn rate(&self, q: &[f64], k: usize) -> Result<f64> {
        Ok((1.0 + self.sinr(q, k)?).log2())
    }

    pub fn rates(&self, q: &[f64]) -> Result<Vec<f64>> {
        (0..self.num_uavs()).map(|k| self.rate(q, k)).collect()
    }

    pub fn weighted_sum_rate(&self, q: &[f64]) -> Result<f64> {
        Ok(self.rates(q)?.iter().zip(&self.weights).map(|(r, a)| a * r).sum())
    }
}

pub fn sinr(scenario: &Scenario, ckms: &[GainGrid], q: &PlacementVector, k: usize, mode: LookupMode) -> Result<f64> {
    SumRateEvaluator::new(scenario, ckms, mode)?.sinr(q.as_slice(), k)
}

pub fn rate(scenario: &Scenario, ckms: &[GainGrid], q: &PlacementVector, k: usize, mode: LookupMode) -> Result<f64> {
    SumRateEvaluator::new(scenario, ckms, mode)?.rate(q.as_slice(), k)
}

pub fn weighted_sum_rate(scenario: &Scenario, ckms: &[GainGrid], q: &PlacementVector, mode: LookupMode) -> Result<f64> {
    SumRateEvaluator::new(scenario, ckms, mode)?.weighted_sum_rate(q.as_slice())
}

/// `log2(1 + sinr)`.
pub fn rate_from_sinr(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}
