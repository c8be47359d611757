use serde::{Deserialize, Serialize};

/// Potential changepoint locations on the normalized training time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangepointGrid {
    pub locations: Vec<f64>,
}

impl ChangepointGrid {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

/// `n` locations spaced evenly inside `(0, range_frac)`: `range_frac * i / (n + 1)`.
pub fn place_changepoints(n: usize, range_frac: f64) -> ChangepointGrid {
    ChangepointGrid { locations: (1..=n).map(|i| range_frac * i as f64 / (n + 1) as f64).collect() }
}

/// Offsets that keep the piecewise trend continuous at each changepoint.
pub fn gammas(grid: &ChangepointGrid, deltas: &[f64]) -> Vec<f64> {
    grid.locations.iter().zip(deltas).map(|(s, d)| -s * d).collect()
}

/// Piecewise-linear trend at normalized time `t`.
pub fn trend_value(t: f64, k: f64, m: f64, grid: &ChangepointGrid, deltas: &[f64]) -> f64 {
    assert_eq!(grid.len(), deltas.len(), "one delta per changepoint");
    let mut rate = k;
    let mut offset = m;
    for (&s, &d) in grid.locations.iter().zip(deltas) {
        if s <= t {
            rate += d;
            offset -= s * d;
        }
    }
    rate * t + offset
}

/// The hinge `(t - s)_+`; `g(t) = k t + m + Σ δ_j hinge(t, s_j)`.
pub(crate) fn hinge(t: f64, s: f64) -> f64 {
    if t >= s {
        t - s
    } else {
        0.0
    }
}
