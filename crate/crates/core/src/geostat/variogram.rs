//! Empirical semivariogram estimation and least-squares model fitting.

use crate::error::{invalid, Error, Result};
use crate::grid::{ChannelSample, GridSpec};

/// Isotropic semivariogram model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariogramKind {
    Exponential,
    Spherical,
}

impl VariogramKind {
    /// Unit-sill shape `rho(h)` so that `gamma(h) = a + b * rho(h)`.
    fn shape(self, h: f64, c: f64) -> f64 {
        match self {
            VariogramKind::Exponential => 1.0 - (-h / c).exp(),
            VariogramKind::Spherical => {
                if h >= c {
                    1.0
                } else {
                    let r = h / c;
                    1.5 * r - 0.5 * r * r * r
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VariogramKind::Exponential => "exponential",
            VariogramKind::Spherical => "spherical",
        }
    }
}

/// Fitted semivariogram: nugget `a`, partial sill `b`, range scale `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemivariogramParams {
    pub kind: VariogramKind,
    pub nugget: f64,
    pub sill: f64,
    pub range: f64,
}

impl SemivariogramParams {
    pub fn new(kind: VariogramKind, nugget: f64, sill: f64, range: f64) -> Result<Self> {
        if !(nugget >= 0.0 && sill > 0.0 && range > 0.0)
            || !(nugget.is_finite() && sill.is_finite() && range.is_finite())
        {
            return Err(invalid(format!(
                "semivariogram needs nugget >= 0, sill > 0, range > 0; got ({nugget}, {sill}, {range})"
            )));
        }
        Ok(Self {
            kind,
            nugget,
            sill,
            range,
        })
    }

    /// Model value at lag `h`. At `h = 0` this is the nugget (the limit from
    /// the right); see [`Self::semivariance`] for the value used between
    /// coincident points.
    pub fn gamma(&self, h: f64) -> f64 {
        self.nugget + self.sill * self.kind.shape(h, self.range)
    }

    /// Semivariance between two locations `h` apart: zero at `h = 0`, the
    /// model value otherwise.
    pub fn semivariance(&self, h: f64) -> f64 {
        if h == 0.0 {
            0.0
        } else {
            self.gamma(h)
        }
    }
}

/// Free-function form of [`SemivariogramParams::gamma`].
pub fn gamma_value(params: &SemivariogramParams, h: f64) -> f64 {
    params.gamma(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramBin {
    /// Mean separation of the pairs in the bin.
    pub lag: f64,
    pub semivariance: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    pub bins: Vec<VariogramBin>,
}

/// Binning of the empirical semivariogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramOptions {
    pub bin_width: f64,
    pub max_lag: f64,
}

impl VariogramOptions {
    /// Bins one lattice spacing wide out to half the lattice diagonal.
    pub fn for_grid(spec: &GridSpec) -> Self {
        Self {
            bin_width: spec.spacing,
            max_lag: 0.5 * spec.bounds().diagonal(),
        }
    }
}

/// Matheron estimator: half the mean squared gain difference over all pairs
/// whose separation falls in each lag bin. Pairs farther apart than
/// `max_lag` are ignored.
pub fn empirical_semivariogram(samples: &[ChannelSample], bin_width: f64, max_lag: f64) -> Result<EmpiricalVariogram> {
    if samples.len() < 2 {
        return Err(invalid(format!(
            "empirical semivariogram needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(bin_width > 0.0 && max_lag > 0.0) {
        return Err(invalid("bin width and maximum lag must be positive"));
    }
    let nbins = (max_lag / bin_width).ceil().max(1.0) as usize;
    let mut sum_sq = vec![0.0; nbins];
    let mut sum_h = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            let h = a.position.distance(&b.position);
            if h > max_lag {
                continue;
            }
            let k = ((h / bin_width) as usize).min(nbins - 1);
            let d = a.gain_db - b.gain_db;
            sum_sq[k] += d * d;
            sum_h[k] += h;
            count[k] += 1;
        }
    }
    let bins = (0..nbins)
        .filter(|&k| count[k] > 0)
        .map(|k| VariogramBin {
            lag: sum_h[k] / count[k] as f64,
            semivariance: sum_sq[k] / (2.0 * count[k] as f64),
            pairs: count[k],
        })
        .collect();
    Ok(EmpiricalVariogram { bins })
}

const SWEEP_POINTS: usize = 240;
const GOLDEN_ITERS: usize = 200;

/// Weighted least-squares fit with pair counts as weights.
///
/// For a fixed range `c` the model is linear in `(a, b)`, so the constrained
/// optimum over `a >= 0, b > 0` has a closed form. The outer search over `c`
/// is a logarithmic sweep refined by golden-section search.
pub fn fit_semivariogram(emp: &EmpiricalVariogram, kind: VariogramKind) -> Result<SemivariogramParams> {
    let bins = &emp.bins;
    if bins.len() < 3 {
        return Err(Error::UnderdeterminedFit(bins.len()));
    }
    let (lo, hi) = bins.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
        (lo.min(b.semivariance), hi.max(b.semivariance))
    });
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Err(Error::DegenerateFit("all semivariances are equal".into()));
    }
    let h_min = bins
        .iter()
        .map(|b| b.lag)
        .filter(|&h| h > 0.0)
        .fold(f64::INFINITY, f64::min);
    let h_max = bins.iter().map(|b| b.lag).fold(0.0, f64::max);
    if !h_min.is_finite() || h_max <= 0.0 {
        return Err(Error::DegenerateFit("no positive lags".into()));
    }

    let log_lo = (h_min * 0.05).ln();
    let log_hi = (h_max * 20.0).ln();
    let profile = |log_c: f64| profile_fit(bins, kind, log_c.exp());

    let step = (log_hi - log_lo) / (SWEEP_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SWEEP_POINTS).map(|k| log_lo + step * k as f64).collect();
    let mut best_k = 0;
    let mut best_sse = f64::INFINITY;
    for (k, &lc) in grid.iter().enumerate() {
        let sse = profile(lc).3;
        if sse < best_sse {
            best_sse = sse;
            best_k = k;
        }
    }

    let mut a = grid[best_k.saturating_sub(1)];
    let mut b = grid[(best_k + 1).min(SWEEP_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = profile(x1).3;
    let mut f2 = profile(x2).3;
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = profile(x1).3;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = profile(x2).3;
        }
    }
    let mut candidates = vec![profile(0.5 * (a + b))];
    candidates.push(profile(grid[best_k]));
    let (nugget, sill, range, _) = candidates
        .into_iter()
        .min_by(|p, q| p.3.total_cmp(&q.3))
        .expect("non-empty");
    SemivariogramParams::new(kind, nugget, sill, range)
}

/// Best `(a, b)` for fixed `c`; returns `(a, b, c, weighted SSE)`.
fn profile_fit(bins: &[VariogramBin], kind: VariogramKind, c: f64) -> (f64, f64, f64, f64) {
    let (mut sw, mut sf, mut sff, mut sy, mut sfy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for bin in bins {
        let w = bin.pairs as f64;
        let f = kind.shape(bin.lag, c);
        let y = bin.semivariance;
        sw += w;
        sf += w * f;
        sff += w * f * f;
        sy += w * y;
        sfy += w * f * y;
    }
    let sse = |a: f64, b: f64| -> f64 {
        bins.iter()
            .map(|bin| {
                let r = bin.semivariance - a - b * kind.shape(bin.lag, c);
                bin.pairs as f64 * r * r
            })
            .sum()
    };
    let scale = sy.abs().max(f64::MIN_POSITIVE) / sw;
    let b_floor = 1e-12 * scale.max(1e-300);

    let mut best = (0.0, b_floor, sse(0.0, b_floor));
    let mut consider = |a: f64, b: f64| {
        if a >= 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            let e = sse(a, b);
            if e < best.2 {
                best = (a, b, e);
            }
        }
    };
    // Interior solution of the 2x2 normal equations.
    let det = sw * sff - sf * sf;
    if det.abs() > 1e-12 * sw * sff {
        consider((sy * sff - sf * sfy) / det, (sw * sfy - sf * sy) / det);
    }
    // Zero nugget.
    if sff > 0.0 {
        consider(0.0, sfy / sff);
    }
    // Vanishing sill: constant model at the weighted mean.
    consider((sy / sw).max(0.0), b_floor);
    (best.0, best.1, c, best.2)
}
