use faer::{Mat, Side};

use super::surrogate::QuadraticSurrogate;
use crate::error::{invalid, Result};
use crate::grid::Rect;
use crate::rng::SeededRng;

/// Random starting directions tried by [`solve_trust_region_subproblem`].
pub const RANDOM_STARTS: usize = 64;

const SCREEN_ITERS: usize = 15;
const REFINED_STARTS: usize = 4;
const REFINE_ITERS: usize = 1000;
const MAX_BACKTRACKS: usize = 50;

/// Per-coordinate bounds `lo <= x <= hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(invalid("box bounds need equal, non-zero lengths"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h))
        {
            return Err(invalid("box bounds must be finite with lo < hi"));
        }
        Ok(Self { lo, hi })
    }

    /// The same rectangle for each of `k` UAVs, coordinates interleaved `(x, y)`.
    pub fn from_region(region: &Rect, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("need at least one UAV"));
        }
        let lo = (0..k).flat_map(|_| [region.x_min, region.y_min]).collect();
        let hi = (0..k).flat_map(|_| [region.x_max, region.y_max]).collect();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    /// Uniform draw from the box.
    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| rng.uniform_in(*l, *h))
            .collect()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Feasible set for the step: `|s| <= delta` and `lo <= s <= hi` with `lo <= 0 <= hi`.
struct StepRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
    delta: f64,
}

impl StepRegion {
    fn clip_scaled_into(&self, v: &[f64], t: f64, out: &mut [f64]) {
        for i in 0..v.len() {
            out[i] = (v[i] * t).clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Euclidean projection onto ball ∩ box, written into `out`.
    ///
    /// The projection is `clip(t v)` for the largest `t` in `(0, 1]` meeting the
    /// ball constraint. `|clip(t v)|^2` is piecewise `C + t^2 U` between the
    /// points where coordinates hit their bounds, so `t` is found exactly.
    fn project_into(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        self.clip_scaled_into(v, 1.0, out);
        let d2 = self.delta * self.delta;
        if out.iter().map(|x| x * x).sum::<f64>() <= d2 {
            return;
        }
        // Breakpoint t_i where coordinate i starts to clip.
        let mut bp: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let b = if v[i] > 0.0 {
                    self.hi[i] / v[i]
                } else if v[i] < 0.0 {
                    self.lo[i] / v[i]
                } else {
                    f64::INFINITY
                };
                (b, i)
            })
            .collect();
        bp.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        // Walk t upward from 0; `clipped` holds the squared bounds of clipped coordinates.
        let mut clipped = 0.0;
        let mut free: f64 = v.iter().map(|x| x * x).sum();
        let mut t = 1.0;
        for &(b, i) in &bp {
            let b = b.min(1.0);
            if clipped + b * b * free >= d2 {
                t = if free > 0.0 {
                    ((d2 - clipped).max(0.0) / free).sqrt()
                } else {
                    b
                };
                break;
            }
            let bound = if v[i] > 0.0 { self.hi[i] } else { self.lo[i] };
            clipped += bound * bound;
            free -= v[i] * v[i];
            if b >= 1.0 {
                break;
            }
        }
        self.clip_scaled_into(v, t, out);
        let nx = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nx > self.delta {
            // Shrinking toward the origin keeps the box constraint since lo <= 0 <= hi.
            let k = self.delta / nx;
            out.iter_mut().for_each(|x| *x *= k);
        }
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.project_into(v, &mut out);
        out
    }

    fn contains(&self, s: &[f64]) -> bool {
        norm(s) <= self.delta
            && s.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| v >= l && v <= h)
    }
}

/// Projected-gradient ascent with backtracking from `s`, at most `iters` steps.
fn ascend(phi: &QuadraticSurrogate, region: &StepRegion, s: Vec<f64>, iters: usize) -> (Vec<f64>, f64) {
    let n = s.len();
    let mut s = s;
    let mut f = phi.gain(&s);
    let mut grad = phi.gradient(&s);
    let gn = norm(&grad);
    if gn == 0.0 {
        return (s, f);
    }
    let mut eta = region.delta / gn;
    let mut trial = vec![0.0; n];
    let mut cand = vec![0.0; n];
    for _ in 0..iters {
        let mut accepted = false;
        let mut fc = f;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = s[i] + eta * grad[i];
            }
            region.project_into(&trial, &mut cand);
            fc = phi.gain(&cand);
            let lin: f64 = (0..n).map(|i| grad[i] * (cand[i] - s[i])).sum();
            if fc > f && fc >= f + 1e-4 * lin {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        let improvement = fc - f;
        std::mem::swap(&mut s, &mut cand);
        f = fc;
        if improvement <= 1e-14 * f.abs().max(1e-300) {
            break;
        }
        grad = phi.gradient(&s);
        if norm(&grad) == 0.0 {
            break;
        }
        eta *= 2.0;
    }
    (s, f)
}

/// Minimizer of the negated model on the ball alone, from the eigen-decomposition
/// of the Hessian; `None` if the decomposition fails.
fn ball_solution(phi: &QuadraticSurrogate, delta: f64) -> Option<Vec<f64>> {
    let n = phi.dim();
    // Minimize c's + s'Hs/2 with c = -g, H = -G.
    let h = Mat::<f64>::from_fn(n, n, |i, j| -phi.h(i, j));
    let evd = h.self_adjoint_eigen(Side::Lower).ok()?;
    let q = evd.U();
    let lam: Vec<f64> = (0..n).map(|i| evd.S()[i]).collect();
    let a: Vec<f64> = (0..n).map(|i| (0..n).map(|r| -q[(r, i)] * phi.g[r]).sum()).collect();
    let (i_min, &l_min) = lam.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1))?;

    let step = |mu: f64, skip: Option<usize>| -> Vec<f64> {
        let mut s = vec![0.0; n];
        for i in 0..n {
            if Some(i) == skip {
                continue;
            }
            let coef = -a[i] / (lam[i] + mu);
            for r in 0..n {
                s[r] += coef * q[(r, i)];
            }
        }
        s
    };

    if l_min > 0.0 {
        let s = step(0.0, None);
        if norm(&s) <= delta {
            return Some(s);
        }
    }
    let scale = lam.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let mu_lo = (-l_min).max(0.0);
    let near = |mu: f64| mu + 1e-12 * scale;
    let s_lo = step(near(mu_lo), None);
    if norm(&s_lo) < delta {
        // Hard case: move along the leading eigenvector to reach the boundary.
        let mut s = step(mu_lo, Some(i_min));
        let ns = norm(&s);
        if ns > delta {
            return Some(s.iter().map(|v| v * delta / ns).collect());
        }
        let tau = (delta * delta - ns * ns).sqrt();
        for r in 0..n {
            s[r] += tau * q[(r, i_min)];
        }
        return Some(s);
    }
    let cn = norm(&a);
    let mut lo = near(mu_lo);
    let mut hi = mu_lo + cn / delta + scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(&step(mid, None)) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Some(step(hi, None))
}

/// Approximately maximizes `phi(q_c + s)` over `|s| <= delta`, `q_c + s` in `bounds`.
///
/// Candidates: the zero step, the projected gradient step, `±delta` along each
/// coordinate, the ball-constrained eigen solution projected into the box, and
/// [`RANDOM_STARTS`] random boundary directions. Every candidate except the
/// zero step is refined by projected-gradient ascent and the best is returned,
/// so the result never does worse than the zero step.
pub fn solve_trust_region_subproblem(
    phi: &QuadraticSurrogate,
    delta: f64,
    bounds: &BoxBounds,
    q_c: &[f64],
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    let n = phi.dim();
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("trust region radius must be positive, got {delta}")));
    }
    if bounds.dim() != n || q_c.len() != n {
        return Err(invalid("surrogate, bounds and local point disagree in dimension"));
    }
    if !bounds.contains(q_c) {
        return Err(invalid("local point lies outside the box"));
    }
    let region = StepRegion {
        lo: bounds.lo.iter().zip(q_c).map(|(l, q)| l - q).collect(),
        hi: bounds.hi.iter().zip(q_c).map(|(h, q)| h - q).collect(),
        delta,
    };

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 2 + RANDOM_STARTS);
    starts.push(vec![0.0; n]);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign * delta;
            starts.push(region.project(&e));
        }
    }
    if let Some(s) = ball_solution(phi, delta) {
        starts.push(region.project(&s));
    }
    for _ in 0..RANDOM_STARTS {
        let d: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let nd = norm(&d);
        if nd > 0.0 {
            starts.push(region.project(&d.iter().map(|v| v * delta / nd).collect::<Vec<_>>()));
        }
    }

    // Short ascent from every start, then a long one from the most promising.
    let mut results: Vec<(Vec<f64>, f64)> = starts
        .into_iter()
        .map(|s| ascend(phi, &region, s, SCREEN_ITERS))
        .collect();
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[b].1.total_cmp(&results[a].1).then(a.cmp(&b)));
    for &i in order.iter().take(REFINED_STARTS) {
        let s = std::mem::take(&mut results[i].0);
        results[i] = ascend(phi, &region, s, REFINE_ITERS);
    }

    let mut best = vec![0.0; n];
    let mut best_f = 0.0;
    for (s, f) in results {
        if f > best_f && region.contains(&s) {
            best_f = f;
            best = s;
        }
    }
    Ok(best)
}
