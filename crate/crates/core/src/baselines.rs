//! Reference placement schemes: exhaustive grid search, hovering above the
//! GBSs, and DFO on the free-space LoS channel model.

use rayon::prelude::*;

use crate::dfo::{optimize, BoxBounds, DfoConfig, OptTrace};
use crate::error::{invalid, Error, Result};
use crate::grid::{GainGrid, GridSpec, Position2D};
use crate::radio::PlacementVector;
use crate::rng::SeededRng;
use crate::scenario::Scenario;
use crate::units::{db_to_linear, dbm_to_watts};

/// Largest number of K-tuples [`exhaustive_search`] will evaluate.
pub const EXHAUSTIVE_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSearchConfig {
    /// Only nodes with `i % stride == 0` and `j % stride == 0` are candidates.
    pub stride: usize,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        Self { stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub placement: PlacementVector,
    pub value: f64,
    pub evaluations: u128,
}

/// Per-GBS constants in linear units.
struct LinkBudget {
    tx: Vec<f64>,
    noise: Vec<f64>,
    weights: Vec<f64>,
}

impl LinkBudget {
    fn new(scenario: &Scenario) -> Self {
        Self {
            tx: scenario.tx_power_dbm.iter().map(|&p| dbm_to_watts(p)).collect(),
            noise: scenario.noise_power_dbm.iter().map(|&p| dbm_to_watts(p)).collect(),
            weights: scenario.rate_weights.clone(),
        }
    }

    /// Weighted sum rate where `rx(k, j)` is the power GBS `k` receives from UAV `j`.
    fn sum_rate(&self, rx: impl Fn(usize, usize) -> f64) -> f64 {
        let k_count = self.tx.len();
        (0..k_count)
            .map(|k| {
                let interference: f64 = (0..k_count).filter(|&j| j != k).map(|j| rx(k, j)).sum();
                self.weights[k] * (1.0 + rx(k, k) / (interference + self.noise[k])).log2()
            })
            .sum()
    }
}

/// Evaluates the weighted sum rate at every K-tuple of candidate nodes and
/// returns the best, ties going to the lexicographically lowest tuple of
/// candidate indices.
pub fn exhaustive_search(scenario: &Scenario, ckms: &[GainGrid], config: &GridSearchConfig) -> Result<SearchResult> {
    scenario.validate()?;
    let k_count = scenario.num_uavs();
    if ckms.len() != k_count {
        return Err(invalid(format!("expected {k_count} CKMs, got {}", ckms.len())));
    }
    if config.stride == 0 {
        return Err(invalid("candidate stride must be at least 1"));
    }
    let spec = *ckms[0].spec();
    if ckms.iter().any(|g| *g.spec() != spec) {
        return Err(Error::GridMismatch);
    }
    let candidates: Vec<usize> = (0..spec.len())
        .filter(|&idx| {
            let (i, j) = spec.unflatten(idx);
            i % config.stride == 0 && j % config.stride == 0
        })
        .collect();
    let c = candidates.len();
    let evaluations = (c as u128).checked_pow(k_count as u32).unwrap_or(u128::MAX);
    if evaluations > EXHAUSTIVE_BUDGET {
        return Err(Error::SearchBudgetExceeded {
            evaluations,
            budget: EXHAUSTIVE_BUDGET,
        });
    }

    let budget = LinkBudget::new(scenario);
    // rx[k][j][c]: power at GBS k from UAV j sitting on candidate c.
    let rx: Vec<Vec<Vec<f64>>> = (0..k_count)
        .map(|k| {
            let gains: Vec<f64> = candidates
                .iter()
                .map(|&idx| db_to_linear(ckms[k].at_flat(idx)))
                .collect();
            (0..k_count)
                .map(|j| gains.iter().map(|g| budget.tx[j] * g).collect())
                .collect()
        })
        .collect();

    let (value, combo) = (0..c)
        .into_par_iter()
        .map(|first| {
            let mut tuple = vec![0usize; k_count];
            tuple[0] = first;
            let mut best = (f64::NEG_INFINITY, tuple.clone());
            loop {
                let v = budget.sum_rate(|k, j| rx[k][j][tuple[j]]);
                if v > best.0 {
                    best = (v, tuple.clone());
                }
                // Odometer over positions 1..K, last position fastest.
                let mut pos = k_count;
                loop {
                    if pos == 1 {
                        return best;
                    }
                    pos -= 1;
                    tuple[pos] += 1;
                    if tuple[pos] < c {
                        break;
                    }
                    tuple[pos] = 0;
                }
            }
        })
        .reduce(
            || (f64::NEG_INFINITY, vec![usize::MAX; k_count]),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    if !value.is_finite() {
        return Err(Error::NonFiniteGain { gbs: 0 });
    }
    let positions: Vec<Position2D> = combo.iter().map(|&ci| spec.position_of(candidates[ci])).collect();
    Ok(SearchResult {
        placement: PlacementVector::from_positions(&positions),
        value,
        evaluations,
    })
}

/// Every UAV directly above its own GBS.
pub fn hovering_baseline(scenario: &Scenario) -> PlacementVector {
    PlacementVector::from_positions(&scenario.gbs_positions)
}

/// [`hovering_baseline`] with each position moved to its nearest lattice node.
pub fn hovering_snapped(scenario: &Scenario, spec: &GridSpec) -> PlacementVector {
    let snapped: Vec<Position2D> = scenario
        .gbs_positions
        .iter()
        .map(|p| {
            let (i, j) = spec.nearest_node(p);
            spec.node_position(i, j)
        })
        .collect();
    PlacementVector::from_positions(&snapped)
}

/// Weighted sum rate under the free-space LoS model
/// `Z_kj = beta0 / (|q_j - w_k|^2 + (H_gbs - H)^2)`.
pub fn los_sum_rate(scenario: &Scenario, beta0_db: f64, q: &[f64]) -> Result<f64> {
    let k_count = scenario.num_uavs();
    if q.len() != 2 * k_count {
        return Err(invalid(format!(
            "placement has {} coordinates, expected {}",
            q.len(),
            2 * k_count
        )));
    }
    let budget = LinkBudget::new(scenario);
    let beta0 = db_to_linear(beta0_db);
    let dz = scenario.gbs_height - scenario.uav_altitude;
    let gain = |k: usize, j: usize| {
        let w = scenario.gbs_positions[k];
        let d2 = (q[2 * j] - w.x).powi(2) + (q[2 * j + 1] - w.y).powi(2) + dz * dz;
        beta0 / d2
    };
    Ok(budget.sum_rate(|k, j| budget.tx[j] * gain(k, j)))
}

/// Conventional design: DFO on the analytic LoS objective, started from the
/// hovering placement (clamped into the region).
pub fn los_design(
    scenario: &Scenario,
    beta0_db: f64,
    config: &DfoConfig,
    rng: &mut SeededRng,
) -> Result<(PlacementVector, OptTrace)> {
    scenario.validate()?;
    let bounds = BoxBounds::from_region(&scenario.region, scenario.num_uavs())?;
    let q0 = bounds.clamp(hovering_baseline(scenario).as_slice());
    let trace = optimize(|q| los_sum_rate(scenario, beta0_db, q), &bounds, &q0, config, rng)?;
    Ok((PlacementVector::new(trace.best_point.clone())?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use crate::radio::{LookupMode, SumRateEvaluator};

    fn spec() -> GridSpec {
        GridSpec::new(0.0, 0.0, 10.0, 8, 7).unwrap()
    }

    fn scenario(k: usize) -> Scenario {
        let gbs = [
            Position2D::new(10.0, 10.0),
            Position2D::new(60.0, 50.0),
            Position2D::new(30.0, 40.0),
        ];
        Scenario::new(
            gbs[..k].to_vec(),
            2.0,
            50.0,
            vec![30.0; k],
            vec![-100.0; k],
            vec![1.0; k],
            Rect::new(0.0, 70.0, 0.0, 60.0).unwrap(),
        )
        .unwrap()
    }

    fn bumpy(seed: f64) -> GainGrid {
        GainGrid::from_fn(spec(), |p| {
            -70.0 + 15.0 * ((p.x + seed) * 0.13).sin() * ((p.y - seed) * 0.07).cos()
        })
        .unwrap()
    }

    #[test]
    fn single_uav_picks_grid_argmax() {
        let g = bumpy(3.0);
        let r = exhaustive_search(&scenario(1), std::slice::from_ref(&g), &GridSearchConfig::default()).unwrap();
        assert_eq!(r.placement.uav(0), spec().position_of(g.argmax()));
        assert_eq!(r.evaluations, 56);
    }

    #[test]
    fn matches_brute_force_and_evaluator() {
        let s = scenario(2);
        let ckms = vec![bumpy(0.0), bumpy(17.0)];
        let r = exhaustive_search(&s, &ckms, &GridSearchConfig::default()).unwrap();
        let ev = SumRateEvaluator::new(&s, &ckms, LookupMode::Nearest).unwrap();
        assert!((ev.weighted_sum_rate(r.placement.as_slice()).unwrap() - r.value).abs() < 1e-12);
        let nodes: Vec<Position2D> = spec().positions().collect();
        let mut best = f64::NEG_INFINITY;
        for a in &nodes {
            for b in &nodes {
                best = best.max(ev.weighted_sum_rate(&[a.x, a.y, b.x, b.y]).unwrap());
            }
        }
        assert_eq!(best, r.value);
        assert_eq!(r.evaluations, 56 * 56);
    }

    #[test]
    fn three_uavs_with_stride() {
        let s = scenario(3);
        let ckms = vec![bumpy(0.0), bumpy(9.0), bumpy(23.0)];
        let r = exhaustive_search(&s, &ckms, &GridSearchConfig { stride: 2 }).unwrap();
        assert_eq!(r.evaluations, 16u128.pow(3));
        let ev = SumRateEvaluator::new(&s, &ckms, LookupMode::Nearest).unwrap();
        assert!((ev.weighted_sum_rate(r.placement.as_slice()).unwrap() - r.value).abs() < 1e-12);
        for k in 0..3 {
            let (i, j) = spec().nearest_node(&r.placement.uav(k));
            assert!(i % 2 == 0 && j % 2 == 0);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut values = vec![-90.0; spec().len()];
        values[5] = -60.0;
        values[40] = -60.0;
        let g = GainGrid::new(spec(), values).unwrap();
        let r = exhaustive_search(&scenario(1), &[g], &GridSearchConfig::default()).unwrap();
        assert_eq!(r.placement.uav(0), spec().position_of(5));
    }

    #[test]
    fn budget_is_enforced() {
        let big = GridSpec::new(0.0, 0.0, 1.0, 200, 200).unwrap();
        let ckms = vec![
            GainGrid::constant(big, -70.0).unwrap(),
            GainGrid::constant(big, -70.0).unwrap(),
        ];
        let mut s = scenario(2);
        s.region = big.bounds();
        assert!(matches!(
            exhaustive_search(&s, &ckms, &GridSearchConfig::default()),
            Err(Error::SearchBudgetExceeded { .. })
        ));
        assert!(exhaustive_search(&s, &ckms, &GridSearchConfig { stride: 10 }).is_ok());
    }

    #[test]
    fn hovering_positions() {
        let s = Scenario::reference(3).unwrap();
        let h = hovering_baseline(&s);
        assert_eq!(h.uav(0), Position2D::new(-89.54, 16.30));
        assert_eq!(h.positions(), s.gbs_positions);
        let spec = GridSpec::covering(&s.region, 5.0).unwrap();
        assert_eq!(hovering_snapped(&s, &spec).uav(0), Position2D::new(-90.0, 15.0));
    }

    #[test]
    fn los_design_single_uav_hovers() {
        let s = scenario(1);
        let mut rng = SeededRng::new(1, 0);
        let (q, _) = los_design(&s, -30.0, &DfoConfig::default(), &mut rng).unwrap();
        assert!(q.uav(0).distance(&s.gbs_positions[0]) < 0.5);
    }

    #[test]
    fn los_design_symmetric_pair() {
        // GBSs mirrored about x = 35; the design should be mirrored too.
        let mut s = scenario(2);
        s.gbs_positions = vec![Position2D::new(15.0, 30.0), Position2D::new(55.0, 30.0)];
        let eps = DfoConfig::default().epsilon;
        for seed in 0..3 {
            let (q, _) = los_design(&s, -30.0, &DfoConfig::default(), &mut SeededRng::new(seed, 0)).unwrap();
            let (a, b) = (q.uav(0), q.uav(1));
            let mirrored = |p: Position2D| Position2D::new(70.0 - p.x, p.y);
            let err = mirrored(a)
                .distance(&b)
                .min(mirrored(a).distance(&a).max(mirrored(b).distance(&b)));
            assert!(err < eps, "seed {seed}: {a:?} {b:?}");
        }
    }

    #[test]
    fn los_design_is_deterministic() {
        let s = scenario(2);
        let run = || {
            los_design(&s, -30.0, &DfoConfig::default(), &mut SeededRng::new(5, 0))
                .unwrap()
                .0
        };
        assert_eq!(run(), run());
    }
}
