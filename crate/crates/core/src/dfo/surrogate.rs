use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{invalid, Error, Result};

/// Largest condition number of the interpolation matrix accepted as
/// non-degenerate.
pub const MAX_CONDITION: f64 = 1e10;

/// Interpolation residual bound, relative to the largest objective magnitude.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Number of interpolation points `m - 1` for dimension `n`, where
/// `m = (n + 1)(n + 2) / 2`.
pub fn num_set_points(n: usize) -> usize {
    (n + 1) * (n + 2) / 2 - 1
}

/// `phi(q_c + s) = f0 + g's + s'Gs / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSurrogate {
    pub f0: f64,
    pub g: Vec<f64>,
    /// Row-major `n x n`, symmetric.
    pub hessian: Vec<f64>,
}

impl QuadraticSurrogate {
    pub fn new(f0: f64, g: Vec<f64>, hessian: Vec<f64>) -> Result<Self> {
        let n = g.len();
        if n == 0 || hessian.len() != n * n {
            return Err(invalid(format!(
                "surrogate needs g of length n > 0 and an n x n matrix, got {} and {}",
                n,
                hessian.len()
            )));
        }
        if !f0.is_finite() || g.iter().chain(&hessian).any(|v| !v.is_finite()) {
            return Err(invalid("surrogate coefficients must be finite"));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (hessian[i * n + j], hessian[j * n + i]);
                if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1.0) {
                    return Err(invalid("surrogate Hessian must be symmetric"));
                }
            }
        }
        Ok(Self { f0, g, hessian })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim() + j]
    }

    /// `g's + s'Gs / 2`, the predicted change from the local point.
    pub fn gain(&self, s: &[f64]) -> f64 {
        let n = self.dim();
        let mut lin = 0.0;
        let mut quad = 0.0;
        for i in 0..n {
            lin += self.g[i] * s[i];
            let row = &self.hessian[i * n..(i + 1) * n];
            let hs: f64 = row.iter().zip(s).map(|(h, x)| h * x).sum();
            quad += s[i] * hs;
        }
        lin + 0.5 * quad
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        self.f0 + self.gain(s)
    }

    /// `g + G s`.
    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.g[i]
                    + self.hessian[i * n..(i + 1) * n]
                        .iter()
                        .zip(s)
                        .map(|(h, x)| h * x)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Frobenius norm of the Hessian.
    pub fn hessian_norm(&self) -> f64 {
        self.hessian.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Displacements from `center`, scaled by the largest one (or 1 when all are zero).
fn scaled_displacements(center: &[f64], points: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let r = points.iter().map(|y| dist(y, center)).fold(0.0, f64::max);
    let r = if r > 0.0 { r } else { 1.0 };
    let d = points
        .iter()
        .map(|y| y.iter().zip(center).map(|(a, c)| (a - c) / r).collect())
        .collect();
    (d, r)
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Quadratic monomials of `d`: `d_i`, then `d_i^2 / 2`, then `d_i d_j` for `i < j`.
fn basis_row(d: &[f64], out: &mut Vec<f64>) {
    let n = d.len();
    out.clear();
    out.extend_from_slice(d);
    out.extend(d.iter().map(|x| 0.5 * x * x));
    for i in 0..n {
        for j in i + 1..n {
            out.push(d[i] * d[j]);
        }
    }
}

fn check_shape(center: &[f64], points: &[Vec<f64>]) -> Result<()> {
    let n = center.len();
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if points.len() != num_set_points(n) {
        return Err(invalid(format!(
            "interpolation set needs {} points in dimension {n}, got {}",
            num_set_points(n),
            points.len()
        )));
    }
    if points.iter().any(|p| p.len() != n) {
        return Err(invalid(
            "interpolation points must all have the local point's dimension",
        ));
    }
    Ok(())
}

/// Condition number of the `m x m` interpolation matrix (constant column plus
/// quadratic basis, local point in the first row), on displacements scaled to
/// unit radius. Infinite when singular.
pub fn interpolation_condition(center: &[f64], points: &[Vec<f64>]) -> Result<f64> {
    check_shape(center, points)?;
    let m = points.len() + 1;
    let (d, _) = scaled_displacements(center, points);
    let mut a = Mat::<f64>::zeros(m, m);
    a[(0, 0)] = 1.0;
    let mut row = Vec::with_capacity(m);
    for (l, dl) in d.iter().enumerate() {
        basis_row(dl, &mut row);
        a[(l + 1, 0)] = 1.0;
        for (c, v) in row.iter().enumerate() {
            a[(l + 1, c + 1)] = *v;
        }
    }
    let sv = a
        .singular_values()
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

pub fn is_nondegenerate(center: &[f64], points: &[Vec<f64>]) -> Result<bool> {
    Ok(interpolation_condition(center, points)? < MAX_CONDITION)
}

/// Fits the quadratic that matches `f_center` at `center` and `values` at `points`.
pub fn fit_surrogate(center: &[f64], f_center: f64, points: &[Vec<f64>], values: &[f64]) -> Result<QuadraticSurrogate> {
    check_shape(center, points)?;
    if values.len() != points.len() {
        return Err(invalid("one objective value per interpolation point is required"));
    }
    let cond = interpolation_condition(center, points)?;
    if !(cond < MAX_CONDITION) {
        return Err(Error::DegenerateSet(format!("condition number {cond:.3e}")));
    }
    let n = center.len();
    let p = points.len();
    let (d, r) = scaled_displacements(center, points);
    let mut a = Mat::<f64>::zeros(p, p);
    let mut b = Mat::<f64>::zeros(p, 1);
    let mut row = Vec::with_capacity(p);
    for (l, dl) in d.iter().enumerate() {
        basis_row(dl, &mut row);
        for (c, v) in row.iter().enumerate() {
            a[(l, c)] = *v;
        }
        b[(l, 0)] = values[l] - f_center;
    }
    let theta = a.partial_piv_lu().solve(&b);

    let mut g = vec![0.0; n];
    let mut hessian = vec![0.0; n * n];
    for i in 0..n {
        g[i] = theta[(i, 0)] / r;
        hessian[i * n + i] = theta[(n + i, 0)] / (r * r);
    }
    let mut c = 2 * n;
    for i in 0..n {
        for j in i + 1..n {
            let v = theta[(c, 0)] / (r * r);
            hessian[i * n + j] = v;
            hessian[j * n + i] = v;
            c += 1;
        }
    }
    let surrogate = QuadraticSurrogate::new(f_center, g, hessian)
        .map_err(|_| Error::DegenerateSet("non-finite surrogate coefficients".into()))?;

    let scale = values
        .iter()
        .chain(std::iter::once(&f_center))
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    for (y, &fy) in points.iter().zip(values) {
        let s: Vec<f64> = y.iter().zip(center).map(|(a, c)| a - c).collect();
        let res = (surrogate.value(&s) - fy).abs();
        if res > RESIDUAL_TOL * scale {
            return Err(Error::DegenerateSet(format!(
                "interpolation residual {res:.3e} exceeds tolerance"
            )));
        }
    }
    Ok(surrogate)
}
