//! Time grids shared by every solution route.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid is empty")]
    Empty,
    #[error("grid point {index} is not finite and non-negative")]
    BadPoint { index: usize },
    #[error("grid is not strictly increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("invalid grid specification: {0}")]
    BadSpec(String),
}

/// Strictly increasing, non-negative sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, GridError> {
        if points.is_empty() {
            return Err(GridError::Empty);
        }
        for (index, &t) in points.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(GridError::BadPoint { index });
            }
            if index > 0 && t <= points[index - 1] {
                return Err(GridError::NotIncreasing { index });
            }
        }
        Ok(Self { points })
    }

    /// `n_points` equally spaced points on `[0, t_max]`.
    pub fn uniform(t_max: f64, n_points: usize) -> Result<Self, GridError> {
        if n_points == 0 {
            return Err(GridError::Empty);
        }
        if n_points == 1 {
            return Self::new(vec![0.0]);
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(GridError::BadSpec(format!("t_max must be positive, got {t_max}")));
        }
        let h = t_max / (n_points - 1) as f64;
        Self::new((0..n_points).map(|k| k as f64 * h).collect())
    }

    /// `n_points` uniformly spaced grid with step `h` starting at 0.
    pub fn with_step(h: f64, n_points: usize) -> Result<Self, GridError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(GridError::BadSpec(format!("step must be positive, got {h}")));
        }
        if n_points == 0 {
            return Err(GridError::Empty);
        }
        Self::new((0..n_points).map(|k| k as f64 * h).collect())
    }

    /// Log-spaced points on `[t_min, t_max]`.
    pub fn logarithmic(t_min: f64, t_max: f64, n_points: usize) -> Result<Self, GridError> {
        if !(t_min > 0.0 && t_max > t_min) || n_points < 2 {
            return Err(GridError::BadSpec(format!(
                "need 0 < t_min < t_max and at least two points (got {t_min}, {t_max}, {n_points})"
            )));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let step = (b - a) / (n_points - 1) as f64;
        Self::new((0..n_points).map(|k| (a + k as f64 * step).exp()).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.points.last().expect("grid is never empty")
    }

    /// Step size when the grid is `{0, h, 2h, …}` up to relative jitter 1e-9.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.points[0] != 0.0 {
            return None;
        }
        if self.points.len() == 1 {
            return None;
        }
        let n = self.points.len() - 1;
        let h = self.last() / n as f64;
        let ok = self
            .points
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - k as f64 * h).abs() <= 1e-9 * h.max(t));
        ok.then_some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_recognized() {
        let g = TimeGrid::uniform(10.0, 201).unwrap();
        assert_eq!(g.uniform_step(), Some(0.05));
        assert!(TimeGrid::logarithmic(1.0, 10.0, 5).unwrap().uniform_step().is_none());
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(TimeGrid::uniform(1.0, 0), Err(GridError::Empty));
        assert!(matches!(TimeGrid::new(vec![0.0, 1.0, 1.0]), Err(GridError::NotIncreasing { index: 2 })));
        assert!(matches!(TimeGrid::new(vec![-1.0]), Err(GridError::BadPoint { index: 0 })));
    }
}
