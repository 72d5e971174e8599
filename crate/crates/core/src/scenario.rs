use crate::error::{invalid, Result};
use crate::grid::{Position2D, Rect};

/// Horizontal GBS locations of the reference urban deployment, in meters.
pub const REFERENCE_GBS: [Position2D; 3] = [
    Position2D::new(-89.54, 16.30),
    Position2D::new(-118.22, -53.86),
    Position2D::new(-18.15, -80.22),
];

/// Multi-UAV uplink deployment: one UAV per GBS, all on a shared channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gbs_positions: Vec<Position2D>,
    pub gbs_height: f64,
    pub uav_altitude: f64,
    pub tx_power_dbm: Vec<f64>,
    pub noise_power_dbm: Vec<f64>,
    pub rate_weights: Vec<f64>,
    /// Placement bounds, shared by every UAV.
    pub region: Rect,
}

impl Scenario {
    pub fn new(
        gbs_positions: Vec<Position2D>,
        gbs_height: f64,
        uav_altitude: f64,
        tx_power_dbm: Vec<f64>,
        noise_power_dbm: Vec<f64>,
        rate_weights: Vec<f64>,
        region: Rect,
    ) -> Result<Self> {
        let s = Self {
            gbs_positions,
            gbs_height,
            uav_altitude,
            tx_power_dbm,
            noise_power_dbm,
            rate_weights,
            region,
        };
        s.validate()?;
        Ok(s)
    }

    /// The reference setup: 300 m x 300 m area, H = 50 m, GBS height 2 m,
    /// 30 dBm transmit power, -100 dBm noise, unit weights, using the first
    /// `k` reference GBS positions.
    pub fn reference(k: usize) -> Result<Self> {
        if k == 0 || k > REFERENCE_GBS.len() {
            return Err(invalid(format!("reference scenario supports 1..=3 UAVs, got {k}")));
        }
        Self::new(
            REFERENCE_GBS[..k].to_vec(),
            2.0,
            50.0,
            vec![30.0; k],
            vec![-100.0; k],
            vec![1.0; k],
            Rect::new(-200.0, 100.0, -150.0, 150.0)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.gbs_positions.len();
        if k == 0 {
            return Err(invalid("scenario needs at least one GBS"));
        }
        if self.tx_power_dbm.len() != k || self.noise_power_dbm.len() != k || self.rate_weights.len() != k {
            return Err(invalid(format!(
                "scenario lists disagree in length: {k} GBSs, {} powers, {} noise levels, {} weights",
                self.tx_power_dbm.len(),
                self.noise_power_dbm.len(),
                self.rate_weights.len()
            )));
        }
        if self.gbs_positions.iter().any(|p| !p.is_finite()) {
            return Err(invalid("GBS positions must be finite"));
        }
        if self.rate_weights.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(invalid("rate weights must be strictly positive"));
        }
        if self
            .tx_power_dbm
            .iter()
            .chain(&self.noise_power_dbm)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("powers must be finite"));
        }
        if !(self.uav_altitude > self.gbs_height) {
            return Err(invalid(format!(
                "UAV altitude {} must exceed GBS height {}",
                self.uav_altitude, self.gbs_height
            )));
        }
        Rect::new(
            self.region.x_min,
            self.region.x_max,
            self.region.y_min,
            self.region.y_max,
        )?;
        Ok(())
    }

    pub fn num_uavs(&self) -> usize {
        self.gbs_positions.len()
    }

    /// Copy of this scenario with every UAV transmitting at `p_dbm`.
    pub fn with_uniform_power(&self, p_dbm: f64) -> Self {
        Self {
            tx_power_dbm: vec![p_dbm; self.num_uavs()],
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        let s = Scenario::reference(3).unwrap();
        assert_eq!(s.num_uavs(), 3);
        assert_eq!(s.gbs_positions[0], Position2D::new(-89.54, 16.30));
        for w in &s.gbs_positions {
            assert!(s.region.contains(w));
        }
    }

    #[test]
    fn rejects_nonpositive_weight_and_low_altitude() {
        let mut s = Scenario::reference(2).unwrap();
        s.rate_weights[1] = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::reference(2).unwrap();
        s.uav_altitude = 1.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::reference(2).unwrap();
        s.noise_power_dbm.pop();
        assert!(s.validate().is_err());
    }
}
