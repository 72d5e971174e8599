use crate::error::{invalid, Result};
use crate::grid::{ChannelSample, GainGrid};
use crate::rng::SeededRng;

/// Measurements at every node with `i % stride_x == 0` and `j % stride_y == 0`,
/// endpoints inclusive, in row-major order.
pub fn sample_measurements(truth: &GainGrid, stride_x: usize, stride_y: usize) -> Result<Vec<ChannelSample>> {
    if stride_x == 0 || stride_y == 0 {
        return Err(invalid("sampling strides must be at least 1"));
    }
    let spec = truth.spec();
    let mut out = Vec::new();
    for j in (0..spec.ny).step_by(stride_y) {
        for i in (0..spec.nx).step_by(stride_x) {
            out.push(ChannelSample {
                position: spec.node_position(i, j),
                gain_db: truth.get(i, j)?,
            });
        }
    }
    Ok(out)
}

/// `n` distinct nodes drawn uniformly without replacement, returned in
/// row-major order.
pub fn sample_random(truth: &GainGrid, n: usize, rng: &mut SeededRng) -> Result<Vec<ChannelSample>> {
    let spec = truth.spec();
    if n == 0 || n > spec.len() {
        return Err(invalid(format!(
            "random sample count must be in 1..={}, got {n}",
            spec.len()
        )));
    }
    let mut picked = rand::seq::index::sample(rng, spec.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|idx| ChannelSample {
            position: spec.position_of(idx),
            gain_db: truth.at_flat(idx),
        })
        .collect())
}
