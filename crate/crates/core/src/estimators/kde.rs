//! Univariate Gaussian kernel density estimation.
//!
//! Evaluation goes through a precomputed grid: samples are linearly binned,
//! convolved with the kernel truncated at six bandwidths, and the grid is
//! linearly interpolated. Points off the grid fall back to the exact sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TRUNCATE: f64 = 6.0;
const MIN_GRID: usize = 2048;
const MAX_GRID: usize = 1 << 20;
const STEPS_PER_BANDWIDTH: f64 = 20.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Kernel family. Only the Gaussian kernel is provided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Kernel::Gaussian),
            other => Err(Error::Parse(format!("unsupported kernel `{other}`"))),
        }
    }
}

/// Default bandwidth `((ln M) / M)^(1/3)`.
pub fn default_bandwidth(m: usize) -> f64 {
    let m = m.max(2) as f64;
    (m.ln() / m).cbrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct KdeRepr {
    bandwidth: f64,
    samples: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "KdeRepr", try_from = "KdeRepr")]
pub struct GaussianKde {
    samples: Vec<f64>,
    bandwidth: f64,
    lo: f64,
    step: f64,
    grid: Vec<f64>,
}

impl PartialEq for GaussianKde {
    fn eq(&self, other: &Self) -> bool {
        self.bandwidth == other.bandwidth && self.samples == other.samples
    }
}

impl From<GaussianKde> for KdeRepr {
    fn from(k: GaussianKde) -> Self {
        KdeRepr {
            bandwidth: k.bandwidth,
            samples: k.samples,
        }
    }
}

impl TryFrom<KdeRepr> for GaussianKde {
    type Error = Error;

    fn try_from(r: KdeRepr) -> Result<Self> {
        GaussianKde::new(r.samples, r.bandwidth)
    }
}

impl GaussianKde {
    pub fn new(mut samples: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("density estimate needs at least one sample".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        let lo = samples[0] - TRUNCATE * bandwidth;
        let hi = samples[samples.len() - 1] + TRUNCATE * bandwidth;
        let wanted = ((hi - lo) / bandwidth * STEPS_PER_BANDWIDTH).ceil() as usize + 1;
        let points = wanted.clamp(MIN_GRID, MAX_GRID);
        let step = (hi - lo) / (points - 1) as f64;

        let mut counts = vec![0.0f64; points];
        for &x in &samples {
            let t = (x - lo) / step;
            let i = (t.floor() as usize).min(points - 2);
            let frac = t - i as f64;
            counts[i] += 1.0 - frac;
            counts[i + 1] += frac;
        }
        let reach = ((TRUNCATE * bandwidth) / step).ceil() as usize;
        let norm = INV_SQRT_2PI / (samples.len() as f64 * bandwidth);
        let weights: Vec<f64> = (0..=reach)
            .map(|j| {
                let z = j as f64 * step / bandwidth;
                norm * (-0.5 * z * z).exp()
            })
            .collect();
        let mut grid = vec![0.0f64; points];
        for (i, &c) in counts.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let a = i.saturating_sub(reach);
            let b = (i + reach).min(points - 1);
            for (g, slot) in grid[a..=b].iter_mut().enumerate() {
                *slot += c * weights[(a + g).abs_diff(i)];
            }
        }
        Ok(GaussianKde {
            samples,
            bandwidth,
            lo,
            step,
            grid,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Direct `O(n)` evaluation.
    pub fn density_exact(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let s: f64 = self
            .samples
            .iter()
            .map(|&xi| {
                let z = (x - xi) / h;
                (-0.5 * z * z).exp()
            })
            .sum();
        s * INV_SQRT_2PI / (self.samples.len() as f64 * h)
    }

    /// Gridded evaluation.
    pub fn density(&self, x: f64) -> f64 {
        let t = (x - self.lo) / self.step;
        if !(t >= 0.0 && t <= (self.grid.len() - 1) as f64) {
            return self.density_exact(x);
        }
        let i = (t.floor() as usize).min(self.grid.len() - 2);
        let frac = t - i as f64;
        (self.grid[i] * (1.0 - frac) + self.grid[i + 1] * frac).max(0.0)
    }
}
