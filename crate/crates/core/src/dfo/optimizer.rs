use std::time::{Duration, Instant};

use super::surrogate::{dist, fit_surrogate, interpolation_condition, num_set_points, MAX_CONDITION};
use super::trs::{solve_trust_region_subproblem, BoxBounds};
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, SeededRng};

/// Attempts allowed when drawing or repairing an interpolation set.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfoConfig {
    /// Initial (and reset) trust-region radius, meters.
    pub delta0: f64,
    /// Shrink factor applied after a rejected trial.
    pub beta: f64,
    /// Convergence threshold, meters.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for DfoConfig {
    fn default() -> Self {
        Self {
            delta0: 50.0,
            beta: 0.5,
            epsilon: 0.5,
            max_iter: 500,
        }
    }
}

impl DfoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.delta0 > self.epsilon && self.delta0.is_finite()) {
            return Err(invalid(format!(
                "need delta0 > epsilon > 0, got delta0 = {}, epsilon = {}",
                self.delta0, self.epsilon
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid(format!("shrink factor must lie in (0, 1), got {}", self.beta)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Interpolation points with their cached objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSet {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl InterpolationSet {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() || points.is_empty() {
            return Err(invalid("interpolation set needs one value per point"));
        }
        Ok(Self { points, values })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the point farthest from `center`; ties go to the lowest index.
    pub fn farthest_from(&self, center: &[f64]) -> (usize, f64) {
        let mut best = (0, dist(&self.points[0], center));
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = dist(p, center);
            if d > best.1 {
                best = (i, d);
            }
        }
        best
    }

    fn replace(&mut self, idx: usize, point: Vec<f64>, value: f64) {
        self.points[idx] = point;
        self.values[idx] = value;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `delta < epsilon` with every set point within `epsilon` of the local point.
    Converged,
    IterationBudget,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationBudget => "iteration budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Radius used to compute this iteration's trial step.
    pub delta: f64,
    pub f_trial: f64,
    pub accepted: bool,
    pub f_best: f64,
    pub set_size: usize,
}

#[derive(Debug, Clone)]
pub struct OptTrace {
    pub records: Vec<IterationRecord>,
    /// Best point seen, including the initial interpolation set.
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Local point at termination.
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub final_delta: f64,
    pub final_set: InterpolationSet,
    pub iterations: usize,
    pub termination: Termination,
    /// All objective calls, resamples included.
    pub evaluations: usize,
    /// Objective calls spent on points drawn to repair a degenerate set.
    pub resample_evaluations: usize,
    /// Redraws of the initial set before it was non-degenerate.
    pub initial_redraws: usize,
    pub wall_time: Duration,
}

impl OptTrace {
    pub fn accepted_steps(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }
}

fn draw_set(bounds: &BoxBounds, count: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..count).map(|_| bounds.sample(rng)).collect()
}

/// Draws `m - 1` points uniformly over `bounds`, redrawing until the set is
/// non-degenerate around `q0`.
pub fn init_interpolation_set(bounds: &BoxBounds, q0: &[f64], rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    initial_points(bounds, q0, None, rng).map(|(p, _)| p)
}

fn initial_points(
    bounds: &BoxBounds,
    q0: &[f64],
    planted: Option<Vec<Vec<f64>>>,
    rng: &mut SeededRng,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let n = q0.len();
    if !bounds.contains(q0) {
        return Err(invalid("initial point lies outside the box"));
    }
    let count = num_set_points(n);
    let mut redraws = 0;
    let mut points = match planted {
        Some(p) => {
            if p.len() != count || p.iter().any(|y| y.len() != n || !bounds.contains(y)) {
                return Err(invalid(format!(
                    "planted set must hold {count} points of dimension {n} inside the box"
                )));
            }
            p
        }
        None => draw_set(bounds, count, rng),
    };
    loop {
        if interpolation_condition(q0, &points)? < MAX_CONDITION {
            return Ok((points, redraws));
        }
        if redraws == MAX_RESAMPLE_ATTEMPTS {
            return Err(Error::DegenerateSet(format!(
                "no non-degenerate initial set after {MAX_RESAMPLE_ATTEMPTS} draws"
            )));
        }
        redraws += 1;
        points = draw_set(bounds, count, rng);
    }
}

struct Evaluator<F> {
    objective: F,
    calls: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Evaluator<F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.calls += 1;
        let v = (self.objective)(x)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                point: x.to_vec(),
                value: v,
            });
        }
        Ok(v)
    }
}

/// Maximizes `objective` over `bounds` from `q0` with the quadratic-model
/// trust-region method.
pub fn optimize<F>(
    objective: F,
    bounds: &BoxBounds,
    q0: &[f64],
    config: &DfoConfig,
    rng: &mut SeededRng,
) -> Result<OptTrace>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    optimize_with_set(objective, bounds, q0, None, config, rng)
}

/// [`optimize`] starting from a caller-provided interpolation set. A degenerate
/// set is redrawn.
pub fn optimize_with_set<F>(
    objective: F,
    bounds: &BoxBounds,
    q0: &[f64],
    initial_set: Option<Vec<Vec<f64>>>,
    config: &DfoConfig,
    rng: &mut SeededRng,
) -> Result<OptTrace>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    config.validate()?;
    if q0.len() != bounds.dim() {
        return Err(invalid("initial point and box disagree in dimension"));
    }
    let start = Instant::now();
    let mut init_rng = rng.fork(stream::DFO_INIT);
    let mut trs_rng = rng.fork(stream::DFO_SUBPROBLEM);
    let mut resample_rng = rng.fork(stream::DFO_RESAMPLE);

    let (points, initial_redraws) = initial_points(bounds, q0, initial_set, &mut init_rng)?;
    let mut ev = Evaluator { objective, calls: 0 };
    let mut q_c = q0.to_vec();
    let mut f_c = ev.eval(&q_c)?;
    let mut best_point = q_c.clone();
    let mut best_value = f_c;
    let mut values = Vec::with_capacity(points.len());
    for p in &points {
        let v = ev.eval(p)?;
        if v > best_value {
            best_value = v;
            best_point = p.clone();
        }
        values.push(v);
    }
    let mut set = InterpolationSet::new(points, values)?;
    let set_size = set.len();

    let mut delta = config.delta0;
    let mut newest: Option<usize> = None;
    let mut resample_evaluations = 0;
    let mut records = Vec::new();
    let mut termination = Termination::IterationBudget;

    for iteration in 0..config.max_iter {
        let phi = match fit_surrogate(&q_c, f_c, set.points(), set.values()) {
            Ok(phi) => phi,
            Err(Error::DegenerateSet(_)) => {
                let radius = delta.min(config.epsilon);
                resample_evaluations += repair(
                    &mut set,
                    &q_c,
                    newest,
                    bounds,
                    radius,
                    &mut ev,
                    &mut resample_rng,
                    &mut best_point,
                    &mut best_value,
                )?;
                fit_surrogate(&q_c, f_c, set.points(), set.values())?
            }
            Err(e) => return Err(e),
        };
        let step = solve_trust_region_subproblem(&phi, delta, bounds, &q_c, &mut trs_rng)?;
        let trial = bounds.clamp(&q_c.iter().zip(&step).map(|(q, s)| q + s).collect::<Vec<_>>());
        let step_norm = dist(&trial, &q_c);
        let (out, out_dist) = set.farthest_from(&q_c);
        let f_trial = ev.eval(&trial)?;
        let record_delta = delta;

        let accepted = f_trial > f_c;
        if accepted {
            set.replace(out, q_c.clone(), f_c);
            newest = Some(out);
            q_c = trial;
            f_c = f_trial;
        } else {
            delta *= config.beta;
            if step_norm > 0.0 && out_dist >= step_norm {
                set.replace(out, trial.clone(), f_trial);
                newest = Some(out);
            }
        }
        if f_c > best_value {
            best_value = f_c;
            best_point = q_c.clone();
        }
        records.push(IterationRecord {
            iteration,
            delta: record_delta,
            f_trial,
            accepted,
            f_best: best_value,
            set_size: set.len(),
        });
        debug_assert_eq!(set.len(), set_size);

        if delta < config.epsilon {
            if set.farthest_from(&q_c).1 <= config.epsilon {
                termination = Termination::Converged;
                break;
            }
            delta = config.delta0;
        }
    }

    Ok(OptTrace {
        iterations: records.len(),
        records,
        best_point,
        best_value,
        final_point: q_c,
        final_value: f_c,
        final_delta: delta,
        final_set: set,
        termination,
        evaluations: ev.calls,
        resample_evaluations,
        initial_redraws,
        wall_time: start.elapsed(),
    })
}

/// Replaces points one at a time (newest first) by draws within `radius` of
/// `q_c` until the set is non-degenerate. A replacement is kept only if it
/// lowers the condition number. If that stalls, the whole set is redrawn in
/// the same ball. Returns the number of objective calls spent.
#[allow(clippy::too_many_arguments)]
fn repair<F: FnMut(&[f64]) -> Result<f64>>(
    set: &mut InterpolationSet,
    q_c: &[f64],
    newest: Option<usize>,
    bounds: &BoxBounds,
    radius: f64,
    ev: &mut Evaluator<F>,
    rng: &mut SeededRng,
    best_point: &mut Vec<f64>,
    best_value: &mut f64,
) -> Result<usize> {
    let mut order: Vec<usize> = newest.into_iter().collect();
    order.extend((0..set.len()).filter(|i| Some(*i) != newest));
    let mut cond = interpolation_condition(q_c, set.points())?;
    let mut calls = 0;
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        if cond < MAX_CONDITION {
            break;
        }
        let idx = order[attempt % order.len()];
        let candidate = sample_in_ball(q_c, radius, bounds, rng);
        let mut points = set.points().to_vec();
        points[idx] = candidate.clone();
        let c = interpolation_condition(q_c, &points)?;
        if c < cond {
            let v = ev.eval(&candidate)?;
            calls += 1;
            if v > *best_value {
                *best_value = v;
                *best_point = candidate.clone();
            }
            set.replace(idx, candidate, v);
            cond = c;
        }
    }
    if cond < MAX_CONDITION {
        return Ok(calls);
    }
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let points: Vec<Vec<f64>> = (0..set.len())
            .map(|_| sample_in_ball(q_c, radius, bounds, rng))
            .collect();
        if interpolation_condition(q_c, &points)? < MAX_CONDITION {
            for (idx, p) in points.into_iter().enumerate() {
                let v = ev.eval(&p)?;
                calls += 1;
                if v > *best_value {
                    *best_value = v;
                    *best_point = p.clone();
                }
                set.replace(idx, p, v);
            }
            return Ok(calls);
        }
    }
    Err(Error::DegenerateSet(format!(
        "could not repair interpolation set after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )))
}

/// Uniform draw from the ball of `radius` around `center`, clipped to the box.
fn sample_in_ball(center: &[f64], radius: f64, bounds: &BoxBounds, rng: &mut SeededRng) -> Vec<f64> {
    let n = center.len();
    let d: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
    let nd = d.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.uniform().powf(1.0 / n as f64);
    let p: Vec<f64> = center.iter().zip(&d).map(|(c, v)| c + r * v / nd).collect();
    bounds.clamp(&p)
}
