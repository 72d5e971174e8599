//! Positions, rectangles and the regular gain lattice used for every CKM.

use crate::error::{invalid, Error, Result};

/// Horizontal position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position2D {
    pub x: f64,
    pub y: f64,
}

impl Position2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Position2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// One channel-gain measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub position: Position2D,
    pub gain_db: f64,
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite || x_min >= x_max || y_min >= y_max {
            return Err(invalid(format!(
                "rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}] has no area"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: &Position2D) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn clamp(&self, p: &Position2D) -> Position2D {
        Position2D::new(p.x.clamp(self.x_min, self.x_max), p.y.clamp(self.y_min, self.y_max))
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// Regular lattice. Node `(i, j)` sits at `(origin_x + i*spacing, origin_y + j*spacing)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin_x: f64, origin_y: f64, spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(invalid("grid origin must be finite"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        if nx < 2 || ny < 2 {
            return Err(invalid(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
        }
        Ok(Self {
            origin_x,
            origin_y,
            spacing,
            nx,
            ny,
        })
    }

    /// Lattice anchored at the lower-left corner of `region`, with
    /// `round(extent / spacing) + 1` nodes per axis.
    pub fn covering(region: &Rect, spacing: f64) -> Result<Self> {
        let nx = (region.width() / spacing).round() as usize + 1;
        let ny = (region.height() / spacing).round() as usize + 1;
        Self::new(region.x_min, region.y_min, spacing, nx, ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major index with y as the slow axis.
    pub fn flat_index(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.nx || j >= self.ny {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok(j * self.nx + i)
    }

    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn node_position(&self, i: usize, j: usize) -> Position2D {
        Position2D::new(
            self.origin_x + i as f64 * self.spacing,
            self.origin_y + j as f64 * self.spacing,
        )
    }

    pub fn position_of(&self, idx: usize) -> Position2D {
        let (i, j) = self.unflatten(idx);
        self.node_position(i, j)
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            x_min: self.origin_x,
            x_max: self.origin_x + (self.nx - 1) as f64 * self.spacing,
            y_min: self.origin_y,
            y_max: self.origin_y + (self.ny - 1) as f64 * self.spacing,
        }
    }

    /// Closest node to `p`; positions outside the lattice are clamped first.
    pub fn nearest_node(&self, p: &Position2D) -> (usize, usize) {
        let fx = ((p.x - self.origin_x) / self.spacing).round();
        let fy = ((p.y - self.origin_y) / self.spacing).round();
        let i = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    pub fn positions(&self) -> impl Iterator<Item = Position2D> + '_ {
        (0..self.len()).map(move |idx| self.position_of(idx))
    }
}

/// Channel power gains in dB on a [`GridSpec`] lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GainGrid {
    spec: GridSpec,
    gains_db: Vec<f64>,
}

impl GainGrid {
    pub fn new(spec: GridSpec, gains_db: Vec<f64>) -> Result<Self> {
        if gains_db.len() != spec.len() {
            return Err(invalid(format!(
                "grid expects {} values, got {}",
                spec.len(),
                gains_db.len()
            )));
        }
        if let Some(idx) = gains_db.iter().position(|g| !g.is_finite()) {
            return Err(invalid(format!("non-finite gain at flat index {idx}")));
        }
        Ok(Self { spec, gains_db })
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Position2D) -> f64) -> Result<Self> {
        let gains = spec.positions().map(&mut f).collect();
        Self::new(spec, gains)
    }

    pub fn constant(spec: GridSpec, value_db: f64) -> Result<Self> {
        Self::new(spec, vec![value_db; spec.len()])
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.gains_db
    }

    pub fn into_values(self) -> Vec<f64> {
        self.gains_db
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.gains_db[self.spec.flat_index(i, j)?])
    }

    pub(crate) fn at_flat(&self, idx: usize) -> f64 {
        self.gains_db[idx]
    }

    /// Flat index of the largest gain; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (idx, &g) in self.gains_db.iter().enumerate() {
            if g > self.gains_db[best] {
                best = idx;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GainGrid {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        GainGrid::new(spec, vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn node_lookup() {
        let g = small();
        assert_eq!(g.get(1, 1).unwrap(), 4.0);
        assert_eq!(g.get(0, 0).unwrap(), 1.0);
        assert_eq!(g.get(1, 0).unwrap(), 2.0);
        assert!(matches!(g.get(2, 0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(0.0, 0.0, 0.0, 3, 3).is_err());
        assert!(GridSpec::new(0.0, 0.0, 1.0, 1, 3).is_err());
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        assert!(GainGrid::new(spec, vec![0.0; 3]).is_err());
        assert!(GainGrid::new(spec, vec![0.0, 1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn index_bijection() {
        let spec = GridSpec::new(-3.0, 2.0, 5.0, 7, 4).unwrap();
        let mut seen = vec![false; spec.len()];
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let idx = spec.flat_index(i, j).unwrap();
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(spec.unflatten(idx), (i, j));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn covering_300m_at_5m() {
        let region = Rect::new(-200.0, 100.0, -150.0, 150.0).unwrap();
        let spec = GridSpec::covering(&region, 5.0).unwrap();
        assert_eq!((spec.nx, spec.ny), (61, 61));
        assert_eq!(spec.bounds(), region);
    }

    #[test]
    fn nearest_node_clamps() {
        let spec = GridSpec::new(0.0, 0.0, 5.0, 3, 3).unwrap();
        assert_eq!(spec.nearest_node(&Position2D::new(2.4, 7.6)), (0, 2));
        assert_eq!(spec.nearest_node(&Position2D::new(-50.0, 99.0)), (0, 2));
    }
}
