//! Ordinary Kriging.
//!
//! The weights solve the bordered system
//!
//! ```text
//! [ Gamma  1 ] [ w  ]   [ gamma_0 ]
//! [ 1^T    0 ] [ nu ] = [    1    ]
//! ```
//!
//! where `Gamma[i][j]` is the semivariance between samples `i` and `j`,
//! `gamma_0[i]` the semivariance between sample `i` and the target, and
//! `nu = -mu` with `mu` the Lagrange multiplier of the unbiasedness
//! constraint. The matrix depends only on the sample geometry, so it is
//! factorized once and every target costs one right-hand-side solve.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geostat::variogram::SemivariogramParams;
use crate::grid::{ChannelSample, Position2D};

const JITTER: f64 = 1e-10;
const PIVOT_RATIO_FLOOR: f64 = 1e-14;
const TARGET_CHUNK: usize = 256;

pub struct KrigingSystem {
    positions: Vec<Position2D>,
    /// Index into the caller's sample list for each retained position.
    kept: Vec<usize>,
    input_len: usize,
    params: SemivariogramParams,
    lu: PartialPivLu<f64>,
}

/// Weights over the retained samples and the Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingWeights {
    pub weights: Vec<f64>,
    pub mu: f64,
}

impl KrigingSystem {
    /// Assembles and factorizes the system. Repeated positions are dropped,
    /// keeping the first occurrence.
    pub fn build(sample_positions: &[Position2D], params: SemivariogramParams) -> Result<Self> {
        if sample_positions.is_empty() {
            return Err(invalid("Kriging needs at least one sample"));
        }
        if sample_positions.iter().any(|p| !p.is_finite()) {
            return Err(invalid("sample positions must be finite"));
        }
        let mut positions = Vec::with_capacity(sample_positions.len());
        let mut kept = Vec::with_capacity(sample_positions.len());
        for (idx, p) in sample_positions.iter().enumerate() {
            if !positions.contains(p) {
                positions.push(*p);
                kept.push(idx);
            }
        }
        let lu = match factorize(&positions, &params, 0.0) {
            Some(lu) => lu,
            None => factorize(&positions, &params, JITTER)
                .ok_or_else(|| Error::Factorization("Kriging system is singular".into()))?,
        };
        Ok(Self {
            positions,
            kept,
            input_len: sample_positions.len(),
            params,
            lu,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position2D] {
        &self.positions
    }

    pub fn params(&self) -> &SemivariogramParams {
        &self.params
    }

    /// Indices (into the list given to [`Self::build`]) of retained samples.
    pub fn retained(&self) -> &[usize] {
        &self.kept
    }

    fn rhs_column(&self, target: &Position2D, col: &mut [f64]) {
        for (c, p) in col.iter_mut().zip(&self.positions) {
            *c = self.params.semivariance(p.distance(target));
        }
        col[self.positions.len()] = 1.0;
    }

    pub fn weights(&self, target: &Position2D) -> KrigingWeights {
        let n = self.len();
        let mut rhs = Mat::<f64>::zeros(n + 1, 1);
        self.rhs_column(target, rhs.col_mut(0).try_as_col_major_mut().unwrap().as_slice_mut());
        let sol = self.lu.solve(&rhs);
        KrigingWeights {
            weights: (0..n).map(|i| sol[(i, 0)]).collect(),
            mu: -sol[(n, 0)],
        }
    }

    fn retained_values(&self, samples: &[ChannelSample]) -> Result<Vec<f64>> {
        if samples.len() != self.input_len {
            return Err(invalid(format!(
                "system was built from {} samples, got {}",
                self.input_len,
                samples.len()
            )));
        }
        Ok(self.kept.iter().map(|&i| samples[i].gain_db).collect())
    }

    pub fn predict(&self, samples: &[ChannelSample], target: &Position2D) -> Result<f64> {
        let values = self.retained_values(samples)?;
        let w = self.weights(target);
        Ok(w.weights.iter().zip(&values).map(|(w, z)| w * z).sum())
    }

    /// Predictions at many targets, solving in column blocks.
    pub fn predict_many(&self, samples: &[ChannelSample], targets: &[Position2D]) -> Result<Vec<f64>> {
        let values = self.retained_values(samples)?;
        let n = self.len();
        let out: Vec<Vec<f64>> = targets
            .par_chunks(TARGET_CHUNK)
            .map(|chunk| {
                let mut rhs = Mat::<f64>::zeros(n + 1, chunk.len());
                for (c, t) in chunk.iter().enumerate() {
                    let col = rhs.col_mut(c).try_as_col_major_mut().unwrap().as_slice_mut();
                    self.rhs_column(t, col);
                }
                let sol = self.lu.solve(&rhs);
                (0..chunk.len())
                    .map(|c| (0..n).map(|i| sol[(i, c)] * values[i]).sum())
                    .collect()
            })
            .collect();
        Ok(out.into_iter().flatten().collect())
    }
}

/// The bordered matrix, with `jitter` added to the semivariance diagonal.
pub(crate) fn assemble(positions: &[Position2D], params: &SemivariogramParams, jitter: f64) -> Mat<f64> {
    let n = positions.len();
    Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) if i == j => jitter,
        (true, true) => params.semivariance(positions[i].distance(&positions[j])),
        (false, false) => 0.0,
        _ => 1.0,
    })
}

fn factorize(positions: &[Position2D], params: &SemivariogramParams, jitter: f64) -> Option<PartialPivLu<f64>> {
    let a = assemble(positions, params, jitter);
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        if !d.is_finite() {
            return None;
        }
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (hi > 0.0 && lo / hi > PIVOT_RATIO_FLOOR).then_some(lu)
}

pub fn build_kriging_system(sample_positions: &[Position2D], params: SemivariogramParams) -> Result<KrigingSystem> {
    KrigingSystem::build(sample_positions, params)
}

pub fn kriging_weights(system: &KrigingSystem, target: &Position2D) -> KrigingWeights {
    system.weights(target)
}

pub fn kriging_predict(system: &KrigingSystem, samples: &[ChannelSample], target: &Position2D) -> Result<f64> {
    system.predict(samples, target)
}

/// Ordinary Kriging restricted to the `k` samples nearest each target.
pub fn local_kriging_predict(
    samples: &[ChannelSample],
    params: SemivariogramParams,
    target: &Position2D,
    k: usize,
) -> Result<f64> {
    let idx = crate::geostat::nearest_indices(samples, target, k.min(samples.len()))?;
    let local: Vec<ChannelSample> = idx.iter().map(|&i| samples[i]).collect();
    let positions: Vec<Position2D> = local.iter().map(|s| s.position).collect();
    KrigingSystem::build(&positions, params)?.predict(&local, target)
}
