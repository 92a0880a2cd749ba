//! Time series of operators produced by the deterministic routes.

use crate::linalg::{max_abs_diff, trace, CMat};

#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub grid: Vec<f64>,
    pub states: Vec<CMat>,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `Tr[O ρ(t)]` at every grid point.
    pub fn expectation(&self, op: &CMat) -> Vec<f64> {
        self.states.iter().map(|s| trace(&(op * s)).re).collect()
    }

    pub fn map<F: Fn(&CMat) -> f64>(&self, f: F) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }

    /// Largest entrywise distance to another trajectory on the same grid.
    pub fn max_deviation(&self, other: &StateTrajectory) -> f64 {
        assert_eq!(self.states.len(), other.states.len(), "trajectories on different grids");
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance to a fixed operator.
    pub fn max_deviation_from(&self, target: &CMat) -> f64 {
        self.states.iter().map(|s| max_abs_diff(s, target)).fold(0.0, f64::max)
    }

    /// Largest `|Tr ρ(t) − Tr ρ(0)|`.
    pub fn trace_drift(&self) -> f64 {
        let t0 = trace(&self.states[0]);
        self.states.iter().map(|s| (trace(s) - t0).norm()).fold(0.0, f64::max)
    }
}
