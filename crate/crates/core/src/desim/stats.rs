/// Student-t 0.975 quantile with 31 degrees of freedom (32 batches).
const T_975_31: f64 = 2.039513446396408;
const Z_975: f64 = 1.959963984540054;

/// Default number of batches for batch-means confidence intervals.
pub const DEFAULT_BATCHES: usize = 32;

/// Relative CI half-width above which a class is flagged as not converged.
pub const CONVERGENCE_LIMIT: f64 = 0.10;

/// Sojourn statistics of one class over the measurement window.
///
/// An empty class has `count == 0` and zero mean, variance and half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub count: u64,
    pub mean: f64,
    /// Sample variance of individual sojourns.
    pub variance: f64,
    /// Half-width of the 95% confidence interval of the mean.
    pub ci95: f64,
    pub converged: bool,
}

impl ClassStats {
    pub fn empty() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            variance: 0.0,
            ci95: 0.0,
            converged: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Batch-means estimate over observations in departure order. With
    /// fewer than two observations per batch the CI falls back to the
    /// i.i.d. normal interval.
    pub fn from_observations(xs: &[f64], batches: usize) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::empty();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let ci95 = if batches >= 2 && n >= 2 * batches {
            let size = n / batches;
            let means: Vec<f64> = xs
                .chunks_exact(size)
                .take(batches)
                .map(|c| c.iter().sum::<f64>() / size as f64)
                .collect();
            let grand = means.iter().sum::<f64>() / batches as f64;
            let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (batches - 1) as f64;
            t_quantile(batches - 1) * (var / batches as f64).sqrt()
        } else {
            Z_975 * (variance / n as f64).sqrt()
        };
        Self {
            count: n as u64,
            mean,
            variance,
            ci95,
            converged: ci95 <= CONVERGENCE_LIMIT * mean,
        }
    }
}

fn t_quantile(dof: usize) -> f64 {
    // Only the default batch count gets the exact t value; larger counts
    // are close enough to normal.
    if dof == DEFAULT_BATCHES - 1 {
        T_975_31
    } else if dof >= 120 {
        Z_975
    } else {
        // Cornish-Fisher expansion of the t quantile around z.
        let z = Z_975;
        let v = dof as f64;
        z + (z.powi(3) + z) / (4.0 * v) + (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * v * v)
    }
}
