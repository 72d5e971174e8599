//! CKM construction from sparse measurements: semivariogram estimation and
//! fitting, ordinary Kriging, and the KNN and LoS path-loss baselines.

mod kriging;
mod variogram;

pub use kriging::{
    build_kriging_system, kriging_predict, kriging_weights, local_kriging_predict, KrigingSystem, KrigingWeights,
};
pub use variogram::{
    empirical_semivariogram, fit_semivariogram, gamma_value, EmpiricalVariogram, SemivariogramParams, VariogramBin,
    VariogramKind, VariogramOptions,
};

pub use crate::grid::ChannelSample;

use crate::error::{invalid, Error, Result};
use crate::grid::{GainGrid, GridSpec, Position2D};

/// Sample count above which [`default_neighborhood`] switches to a local
/// neighborhood.
pub const LOCAL_KRIGING_THRESHOLD: usize = 1000;
pub const LOCAL_KRIGING_NEIGHBORS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrigingNeighborhood {
    /// Every sample enters every prediction.
    Global,
    /// The `k` nearest samples per target.
    Nearest(usize),
}

/// How a CKM is filled from the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CkmMethod {
    Kriging {
        params: SemivariogramParams,
        neighborhood: KrigingNeighborhood,
    },
    Knn {
        k: usize,
    },
    /// Free-space model `beta0 / d^2` around the GBS, ignoring the samples.
    LosModel {
        gbs: Position2D,
        beta0_db: f64,
        uav_altitude: f64,
        gbs_height: f64,
    },
}

/// Indices of the `k` samples closest to `target`, nearest first; distance
/// ties go to the lower index.
pub fn nearest_indices(samples: &[ChannelSample], target: &Position2D, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > samples.len() {
        return Err(invalid(format!("need 1 <= k <= {} neighbors, got {k}", samples.len())));
    }
    let mut keyed: Vec<(f64, usize)> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.position.distance_sq(target), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < keyed.len() {
        keyed.select_nth_unstable_by(k - 1, cmp);
        keyed.truncate(k);
    }
    keyed.sort_unstable_by(cmp);
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Unweighted mean of the `k` nearest samples.
pub fn knn_predict(samples: &[ChannelSample], target: &Position2D, k: usize) -> Result<f64> {
    let idx = nearest_indices(samples, target, k)?;
    Ok(idx.iter().map(|&i| samples[i].gain_db).sum::<f64>() / k as f64)
}

/// Free-space LoS gain `beta0 - 10 log10(|x - w|^2 + (H_gbs - H_uav)^2)` in dB.
pub fn los_model_predict(
    target: &Position2D,
    gbs: &Position2D,
    beta0_db: f64,
    uav_altitude: f64,
    gbs_height: f64,
) -> Result<f64> {
    let dz = gbs_height - uav_altitude;
    let d2 = target.distance_sq(gbs) + dz * dz;
    if d2 <= 0.0 {
        return Err(invalid("LoS model is singular when the UAV sits on the GBS"));
    }
    Ok(beta0_db - 10.0 * d2.log10())
}

/// Fills every node of `spec` with the chosen predictor.
pub fn construct_ckm(samples: &[ChannelSample], spec: GridSpec, method: &CkmMethod) -> Result<GainGrid> {
    let targets: Vec<Position2D> = spec.positions().collect();
    let values = match *method {
        CkmMethod::Kriging {
            params,
            neighborhood: KrigingNeighborhood::Global,
        } => {
            let positions: Vec<Position2D> = samples.iter().map(|s| s.position).collect();
            KrigingSystem::build(&positions, params)?.predict_many(samples, &targets)?
        }
        CkmMethod::Kriging {
            params,
            neighborhood: KrigingNeighborhood::Nearest(k),
        } => targets
            .iter()
            .map(|t| local_kriging_predict(samples, params, t, k))
            .collect::<Result<_>>()?,
        CkmMethod::Knn { k } => targets
            .iter()
            .map(|t| knn_predict(samples, t, k))
            .collect::<Result<_>>()?,
        CkmMethod::LosModel {
            gbs,
            beta0_db,
            uav_altitude,
            gbs_height,
        } => targets
            .iter()
            .map(|t| los_model_predict(t, &gbs, beta0_db, uav_altitude, gbs_height))
            .collect::<Result<_>>()?,
    };
    GainGrid::new(spec, values)
}

/// Estimates and fits a semivariogram from `samples`.
pub fn fit_variogram_to_samples(
    samples: &[ChannelSample],
    kind: VariogramKind,
    options: VariogramOptions,
) -> Result<SemivariogramParams> {
    let emp = empirical_semivariogram(samples, options.bin_width, options.max_lag)?;
    fit_semivariogram(&emp, kind)
}

/// Neighborhood used when the caller does not choose one: global up to
/// [`LOCAL_KRIGING_THRESHOLD`] samples.
pub fn default_neighborhood(n_samples: usize) -> KrigingNeighborhood {
    if n_samples > LOCAL_KRIGING_THRESHOLD {
        KrigingNeighborhood::Nearest(LOCAL_KRIGING_NEIGHBORS)
    } else {
        KrigingNeighborhood::Global
    }
}

/// Mean absolute error in dB over all nodes.
pub fn mae(estimate: &GainGrid, truth: &GainGrid) -> Result<f64> {
    if estimate.spec() != truth.spec() {
        return Err(Error::GridMismatch);
    }
    let n = truth.values().len() as f64;
    Ok(estimate
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n)
}
