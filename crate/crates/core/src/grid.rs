//! Uniform time grids, finite-difference stencils and cumulative quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `t_k = k * t_max / steps`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<TimeGrid> {
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        Ok(TimeGrid { t_max, steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_max
        } else {
            self.t_max * k as f64 / self.steps as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }

    /// Index of `t` if it lies on the grid (to 1e-9 of a step).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 || (x - k).abs() > 1e-9 {
            return Err(Error::OffGrid { t });
        }
        Ok(k as usize)
    }

    /// Grid with every `stride`-th point.
    pub fn coarsen(&self, stride: usize) -> Result<TimeGrid> {
        if stride == 0 || !self.steps.is_multiple_of(stride) {
            return Err(Error::InvalidArgument(format!("stride {stride} does not divide {} steps", self.steps)));
        }
        TimeGrid::new(self.t_max, self.steps / stride)
    }
}

/// Five-point first-derivative stencil at index `k` of a series with `len`
/// points, as `(index, weight)` pairs in units of `1/dt`. Central in the
/// interior, one-sided near the ends; fourth order everywhere.
pub fn first_derivative_stencil(k: usize, len: usize) -> Result<[(usize, f64); 5]> {
    if len < 5 {
        return Err(Error::GridTooCoarse { points: len, required: 5 });
    }
    const C: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    const L0: [f64; 5] = [-25.0 / 12.0, 48.0 / 12.0, -36.0 / 12.0, 16.0 / 12.0, -3.0 / 12.0];
    const L1: [f64; 5] = [-3.0 / 12.0, -10.0 / 12.0, 18.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0];
    let pack = |start: usize, w: [f64; 5], sign: f64, rev: bool| {
        let mut out = [(0usize, 0.0f64); 5];
        for (j, slot) in out.iter_mut().enumerate() {
            let wj = if rev { w[4 - j] } else { w[j] };
            *slot = (start + j, sign * wj);
        }
        out
    };
    Ok(match k {
        0 => pack(0, L0, 1.0, false),
        1 => pack(0, L1, 1.0, false),
        _ if k + 1 == len => pack(len - 5, L0, -1.0, true),
        _ if k + 2 == len => pack(len - 5, L1, -1.0, true),
        _ => pack(k - 2, C, 1.0, false),
    })
}

/// Fourth-order second-derivative stencil, units of `1/dt^2`.
pub fn second_derivative_stencil(k: usize, len: usize) -> Result<Vec<(usize, f64)>> {
    if len < 6 {
        return Err(Error::GridTooCoarse { points: len, required: 6 });
    }
    const C: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
    const L0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
    const L1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
    let scaled = |w: &[f64]| w.iter().map(|x| x / 12.0).collect::<Vec<_>>();
    let out = match k {
        0 => scaled(&L0).into_iter().enumerate().collect(),
        1 => scaled(&L1).into_iter().enumerate().collect(),
        _ if k + 1 == len => scaled(&L0).into_iter().enumerate().map(|(j, w)| (len - 1 - j, w)).collect(),
        _ if k + 2 == len => scaled(&L1).into_iter().enumerate().map(|(j, w)| (len - 1 - j, w)).collect(),
        _ => scaled(&C).into_iter().enumerate().map(|(j, w)| (k - 2 + j, w)).collect(),
    };
    Ok(out)
}

/// Central five-point offsets (in steps) and weights for an analytically
/// evaluable function: `f'(t) ≈ Σ w f(t + o h) / h`.
pub const CENTRAL_OFFSETS: [(f64, f64); 4] =
    [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];

/// Central five-point second-derivative offsets and weights (units `1/h^2`).
pub const CENTRAL_SECOND_OFFSETS: [(f64, f64); 5] =
    [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];

/// First derivative of a sampled real series.
pub fn derivative(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let st = first_derivative_stencil(k, n)?;
            Ok(st.iter().map(|&(i, w)| w * values[i]).sum::<f64>() / dt)
        })
        .collect()
}

/// Second derivative of a sampled real series.
pub fn second_derivative(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let st = second_derivative_stencil(k, n)?;
            Ok(st.iter().map(|&(i, w)| w * values[i]).sum::<f64>() / (dt * dt))
        })
        .collect()
}

/// Running integral `F_k = ∫_0^{t_k} f` by composite Simpson on even
/// indices; odd indices use the three-point partial-panel rule.
pub fn cumulative_simpson(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::GridTooCoarse { points: n, required: 3 });
    }
    let mut out = vec![0.0; n];
    let mut k = 0;
    while k + 2 < n {
        let (f0, f1, f2) = (values[k], values[k + 1], values[k + 2]);
        out[k + 1] = out[k] + dt * (5.0 * f0 + 8.0 * f1 - f2) / 12.0;
        out[k + 2] = out[k] + dt * (f0 + 4.0 * f1 + f2) / 3.0;
        k += 2;
    }
    if k + 1 < n {
        let (fm, f0, f1) = (values[k - 1], values[k], values[k + 1]);
        out[k + 1] = out[k] + dt * (-fm + 8.0 * f0 + 5.0 * f1) / 12.0;
    }
    Ok(out)
}

/// Removes `2π` jumps from a sampled angle.
pub fn unwrap(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    for (k, &a) in angles.iter().enumerate() {
        if k > 0 {
            let prev = angles[k - 1];
            let mut d = a - prev;
            while d > PI {
                d -= 2.0 * PI;
                offset -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
                offset += 2.0 * PI;
            }
        }
        out.push(a + offset);
    }
    out
}

/// Maps an angle into `(-π, π]`.
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Angular distance `|a - b|` modulo `2π`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

/// Empirical convergence order from errors at step sizes `h` and `h/2`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
