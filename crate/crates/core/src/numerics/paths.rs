use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Uniform time grid in years. A grid with `t_start == t_end` is a single node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return domain(format!(
                "grid bounds must be finite, got [{t_start}, {t_end}]"
            ));
        }
        if t_start > t_end {
            return domain(format!(
                "grid requires t_start <= t_end, got [{t_start}, {t_end}]"
            ));
        }
        if t_start == t_end {
            return Ok(Self::point(t_start));
        }
        if n_steps == 0 {
            return domain("grid needs at least one step");
        }
        Ok(Self {
            t_start,
            t_end,
            n_steps,
        })
    }

    pub fn point(t: f64) -> Self {
        Self {
            t_start: t,
            t_end: t,
            n_steps: 0,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes; a grid always has at least one.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_point(&self) -> bool {
        self.n_steps == 0
    }

    pub fn step(&self) -> f64 {
        if self.n_steps == 0 {
            0.0
        } else {
            (self.t_end - self.t_start) / self.n_steps as f64
        }
    }

    /// Node `i`; the last node is returned as `t_end` exactly.
    pub fn node(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.t_end
        } else {
            self.t_start + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }
}

/// Simulated paths stored row-major: `n_paths` rows of `grid.len()` values.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub grid: TimeGrid,
    pub seed: u64,
    n_paths: usize,
    values: Vec<f64>,
}

impl PathSet {
    pub fn from_values(
        grid: TimeGrid,
        seed: u64,
        n_paths: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_paths * grid.len() {
            return domain(format!(
                "path buffer has {} values, expected {} x {}",
                values.len(),
                n_paths,
                grid.len()
            ));
        }
        Ok(Self {
            grid,
            seed,
            n_paths,
            values,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn terminal(&self, i: usize) -> f64 {
        *self.path(i).last().expect("grid has at least one node")
    }

    pub fn terminals(&self) -> Vec<f64> {
        self.paths().map(|p| p[p.len() - 1]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Independent generator for path `index` under `seed`.
///
/// ChaCha8 keyed by the seed, with the path index selecting the stream, so
/// every path draws from its own non-overlapping sequence no matter which
/// worker simulates it.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Geometric Brownian motion by exact log stepping:
/// `S_{k+1} = S_k exp((drift - vol²/2)Δ + vol √Δ Z)`.
pub fn simulate_gbm(
    s0: f64,
    drift: f64,
    vol: f64,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    if n_paths == 0 {
        return domain("simulate_gbm needs at least one path");
    }
    if !(s0.is_finite() && s0 > 0.0) {
        return domain(format!("initial state must be positive, got {s0}"));
    }
    if !(drift.is_finite() && vol.is_finite() && vol >= 0.0) {
        return domain(format!("invalid GBM coefficients drift={drift}, vol={vol}"));
    }
    let width = grid.len();
    let mut values = vec![0.0; n_paths * width];
    values
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(p, row)| {
            let mut rng = path_rng(seed, p as u64);
            let mut log_s = 0.0;
            row[0] = s0;
            for (k, slot) in row.iter_mut().enumerate().skip(1) {
                let dtk = grid.node(k) - grid.node(k - 1);
                let z: f64 = if vol > 0.0 {
                    StandardNormal.sample(&mut rng)
                } else {
                    0.0
                };
                log_s += (drift - 0.5 * vol * vol) * dtk + vol * dtk.sqrt() * z;
                *slot = s0 * log_s.exp();
            }
        });
    PathSet::from_values(*grid, seed, n_paths, values)
}
