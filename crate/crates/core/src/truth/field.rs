//! Spatially correlated log-normal shadowing.
//!
//! The field has covariance `std^2 * exp(-|u - v| / corr_len)` between lattice
//! nodes and is realized as `L z` with `L` the Cholesky factor of the dense
//! covariance matrix and `z` i.i.d. standard normal. The factor depends only
//! on the lattice and the correlation length, so [`ShadowingSampler`] keeps it
//! around for repeated draws.

use faer::{Mat, Side};

use crate::error::{invalid, Error, Result};
use crate::grid::{GainGrid, GridSpec};
use crate::rng::SeededRng;

/// Largest lattice the dense factorization accepts.
pub const MAX_FIELD_NODES: usize = 10_000;
const JITTER: f64 = 1e-8;

#[derive(Debug)]
pub struct ShadowingSampler {
    spec: GridSpec,
    corr_len: f64,
    factor: Mat<f64>,
}

impl ShadowingSampler {
    pub fn new(spec: GridSpec, corr_len: f64) -> Result<Self> {
        check_budget(&spec)?;
        if !(corr_len > 0.0 && corr_len.is_finite()) {
            return Err(invalid(format!("correlation length must be positive, got {corr_len}")));
        }
        let n = spec.len();
        let positions: Vec<_> = spec.positions().collect();
        let mut cov = Mat::<f64>::from_fn(n, n, |i, j| (-positions[i].distance(&positions[j]) / corr_len).exp());
        let factor = match cov.llt(Side::Lower) {
            Ok(llt) => llt.L().to_owned(),
            Err(_) => {
                for i in 0..n {
                    cov[(i, i)] += JITTER;
                }
                cov.llt(Side::Lower)
                    .map_err(|e| Error::Factorization(format!("shadowing covariance: {e:?}")))?
                    .L()
                    .to_owned()
            }
        };
        Ok(Self { spec, corr_len, factor })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn corr_len(&self) -> f64 {
        self.corr_len
    }

    /// One zero-mean realization with standard deviation `std_db`.
    pub fn sample(&self, std_db: f64, rng: &mut SeededRng) -> Result<GainGrid> {
        if !(std_db >= 0.0 && std_db.is_finite()) {
            return Err(invalid(format!("shadowing std must be non-negative, got {std_db}")));
        }
        let n = self.spec.len();
        if std_db == 0.0 {
            return GainGrid::constant(self.spec, 0.0);
        }
        let z = Mat::<f64>::from_fn(n, 1, |_, _| rng.standard_normal());
        let field = &self.factor * &z;
        GainGrid::new(self.spec, (0..n).map(|i| std_db * field[(i, 0)]).collect())
    }
}

fn check_budget(spec: &GridSpec) -> Result<()> {
    if spec.len() > MAX_FIELD_NODES {
        return Err(Error::GridTooLarge {
            nodes: spec.len(),
            budget: MAX_FIELD_NODES,
        });
    }
    Ok(())
}

/// Single realization of the shadowing field. Prefer [`ShadowingSampler`]
/// when drawing several fields on the same lattice.
pub fn gaussian_random_field(spec: GridSpec, std_db: f64, corr_len: f64, rng: &mut SeededRng) -> Result<GainGrid> {
    check_budget(&spec)?;
    if std_db == 0.0 {
        return GainGrid::constant(spec, 0.0);
    }
    ShadowingSampler::new(spec, corr_len)?.sample(std_db, rng)
}
