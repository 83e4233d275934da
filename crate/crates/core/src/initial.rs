//! Initial stress densities and their inverse-CDF samplers.

use crate::error::{invalid, Result};
use crate::quadrature::integrate;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    /// Standard normal restricted to `[-half_width, half_width]`.
    TruncatedGaussian {
        half_width: f64,
    },
    UniformInterval {
        lower: f64,
        upper: f64,
    },
    /// Linear interpolation of `values` on the nodes `start + i * step`,
    /// zero outside.
    GridSampled {
        start: f64,
        step: f64,
        values: Vec<f64>,
    },
}

/// A normalized, bounded, nonnegative initial density.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDensity {
    kind: InitialKind,
    scale: f64,
}

impl InitialDensity {
    pub fn gaussian(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid(format!("gaussian half-width {half_width} must be > 0")));
        }
        let mass = integrate(
            |x| INV_SQRT_2PI * (-0.5 * x * x).exp(),
            -half_width,
            half_width,
            &[0.0],
            1e-15,
        )?
        .value;
        Ok(Self {
            kind: InitialKind::TruncatedGaussian { half_width },
            scale: 1.0 / mass,
        })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
            return Err(invalid(format!("uniform interval [{lower}, {upper}] is empty")));
        }
        Ok(Self {
            kind: InitialKind::UniformInterval { lower, upper },
            scale: 1.0 / (upper - lower),
        })
    }

    pub fn grid_sampled(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || values.len() < 2 {
            return Err(invalid("grid-sampled density needs step > 0 and two or more nodes"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("grid-sampled density values must be finite and >= 0"));
        }
        let n = values.len();
        let mass = step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]));
        if !(mass > 0.0) {
            return Err(invalid("grid-sampled density has zero mass"));
        }
        Ok(Self {
            kind: InitialKind::GridSampled { start, step, values },
            scale: 1.0 / mass,
        })
    }

    /// Samples `f` on `n` nodes spanning `[lo, hi]` and normalizes.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(invalid("sampling range must be nonempty with two or more nodes"));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let values = (0..n).map(|i| f(lo + i as f64 * step)).collect();
        Self::grid_sampled(lo, step, values)
    }

    pub fn kind(&self) -> &InitialKind {
        &self.kind
    }

    pub fn eval(&self, sigma: f64) -> f64 {
        match &self.kind {
            InitialKind::TruncatedGaussian { half_width } => {
                if sigma.abs() > *half_width {
                    0.0
                } else {
                    self.scale * INV_SQRT_2PI * (-0.5 * sigma * sigma).exp()
                }
            }
            InitialKind::UniformInterval { lower, upper } => {
                if sigma < *lower || sigma > *upper {
                    0.0
                } else if sigma == *lower || sigma == *upper {
                    0.5 * self.scale
                } else {
                    self.scale
                }
            }
            InitialKind::GridSampled { start, step, values } => {
                let x = (sigma - start) / step;
                let last = (values.len() - 1) as f64;
                if !(x >= 0.0) || x > last {
                    return 0.0;
                }
                let i = (x.floor() as usize).min(values.len() - 2);
                let w = x - i as f64;
                self.scale * ((1.0 - w) * values[i] + w * values[i + 1])
            }
        }
    }

    /// Closed interval outside which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            InitialKind::TruncatedGaussian { half_width } => (-half_width, *half_width),
            InitialKind::UniformInterval { lower, upper } => (*lower, *upper),
            InitialKind::GridSampled { start, step, values } => (*start, start + step * (values.len() - 1) as f64),
        }
    }

    /// Points where the density is not smooth. Interior nodes of long
    /// sampled grids are left out; adaptive quadrature copes with the kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        match &self.kind {
            InitialKind::GridSampled { start, step, values } if values.len() <= 256 => {
                (0..values.len()).map(|i| start + i as f64 * step).collect()
            }
            _ => vec![lo, hi],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match &self.kind {
            InitialKind::TruncatedGaussian { .. } => self.scale * INV_SQRT_2PI,
            InitialKind::UniformInterval { .. } => self.scale,
            InitialKind::GridSampled { values, .. } => self.scale * values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Inverse-CDF sampler. Exact for the uniform and grid-sampled variants;
    /// the Gaussian is tabulated on 2^14 cells.
    pub fn sampler(&self) -> InverseCdf {
        match &self.kind {
            InitialKind::UniformInterval { lower, upper } => {
                InverseCdf::from_nodes(vec![*lower, *upper], vec![1.0, 1.0])
            }
            InitialKind::GridSampled { start, step, values } => {
                let xs = (0..values.len()).map(|i| start + i as f64 * step).collect();
                InverseCdf::from_nodes(xs, values.clone())
            }
            InitialKind::TruncatedGaussian { half_width } => {
                let n = 1 << 14;
                let h = 2.0 * half_width / n as f64;
                let xs: Vec<f64> = (0..=n).map(|i| -half_width + i as f64 * h).collect();
                let ds = xs.iter().map(|&x| (-0.5 * x * x).exp()).collect();
                InverseCdf::from_nodes(xs, ds)
            }
        }
    }
}

/// Sampler for a piecewise-linear density given on nodes.
#[derive(Debug, Clone)]
pub struct InverseCdf {
    xs: Vec<f64>,
    ds: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn from_nodes(xs: Vec<f64>, ds: Vec<f64>) -> Self {
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..xs.len() {
            acc += 0.5 * (ds[i - 1] + ds[i]) * (xs[i] - xs[i - 1]);
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        let ds = ds.iter().map(|d| d / acc).collect();
        Self { xs, ds, cdf }
    }

    /// Maps `u` in `[0, 1]` to a sample.
    pub fn sample(&self, u: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.cdf.partition_point(|&c| c <= u) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (d0, d1) = (self.ds[i], self.ds[i + 1]);
        let w = x1 - x0;
        let m = (u - self.cdf[i]).max(0.0);
        // solve d0 y + (d1 - d0) y^2 / (2w) = m for y in [0, w]
        let a = 0.5 * (d1 - d0) / w;
        let y = if (d1 - d0).abs() <= 1e-12 * d0.max(d1) {
            if d0 > 0.0 {
                m / d0
            } else {
                0.0
            }
        } else {
            let disc = (d0 * d0 + 4.0 * a * m).max(0.0);
            2.0 * m / (d0 + disc.sqrt())
        };
        (x0 + y.clamp(0.0, w)).min(x1)
    }
}
