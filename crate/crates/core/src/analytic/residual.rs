//! Residual busy time of a radio head and the cycle time of a priority
//! two-way device.
//!
//! With coupled access the device waits for the residual `X` of its one
//! radio head. With decoupled access it picks whichever of two heads frees
//! up first, so the residual is `min(X_1, X_2)` and its CDF is
//! `1 − (1 − F_X)²`.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Distribution family of a single head's residual time.
#[derive(Debug, Clone, PartialEq)]
pub enum ResidualFamily {
    Exponential {
        rate: f64,
    },
    /// Exponential conditioned on `(0, S_L)`.
    TruncatedExponential {
        rate: f64,
    },
    /// Uniform on `(0, S_L)`.
    Uniform,
    /// Always zero: the head is never busy.
    Degenerate,
    /// Empirical distribution of the given samples.
    Empirical(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualModel {
    family: ResidualFamily,
    s_long_max: f64,
}

impl ResidualModel {
    pub fn new(family: ResidualFamily, s_long_max: f64) -> Result<Self> {
        if !(s_long_max > 0.0) || !s_long_max.is_finite() {
            return Err(Error::invalid("s_long", "must be positive and finite"));
        }
        let family = match family {
            ResidualFamily::Exponential { rate } | ResidualFamily::TruncatedExponential { rate }
                if !(rate > 0.0) || !rate.is_finite() =>
            {
                return Err(Error::invalid("rate", "must be positive"));
            }
            ResidualFamily::Empirical(mut samples) => {
                if samples.is_empty() {
                    return Err(Error::invalid("samples", "empirical family needs samples"));
                }
                if samples.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(Error::invalid("samples", "residuals must be finite and nonnegative"));
                }
                samples.sort_by(f64::total_cmp);
                ResidualFamily::Empirical(samples)
            }
            other => other,
        };
        Ok(Self { family, s_long_max })
    }

    pub fn family(&self) -> &ResidualFamily {
        &self.family
    }

    /// Longest possible TTI, the upper end of the residual's range.
    pub fn s_long_max(&self) -> f64 {
        self.s_long_max
    }

    /// `F_X(y)` for one radio head.
    pub fn cdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let a = self.s_long_max;
        match &self.family {
            ResidualFamily::Exponential { rate } => 1.0 - (-rate * y).exp(),
            ResidualFamily::TruncatedExponential { rate } => {
                if y >= a {
                    1.0
                } else {
                    (-(-rate * y).exp_m1()) / (-(-rate * a).exp_m1())
                }
            }
            ResidualFamily::Uniform => (y / a).min(1.0),
            ResidualFamily::Degenerate => 1.0,
            ResidualFamily::Empirical(s) => s.partition_point(|&x| x <= y) as f64 / s.len() as f64,
        }
    }

    /// Draws one residual by inversion.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let a = self.s_long_max;
        match &self.family {
            ResidualFamily::Exponential { rate } => rng.exponential(1.0 / rate),
            ResidualFamily::TruncatedExponential { rate } => {
                let u = rng.uniform();
                // F^{-1}(u) = -ln(1 - u(1 - e^{-λa})) / λ
                -(u * (-rate * a).exp_m1()).ln_1p() / rate
            }
            ResidualFamily::Uniform => rng.uniform() * a,
            ResidualFamily::Degenerate => 0.0,
            ResidualFamily::Empirical(s) => {
                let i = ((rng.uniform() * s.len() as f64) as usize).min(s.len() - 1);
                s[i]
            }
        }
    }

    /// Residual seen by a device: one draw when coupled, the smaller of two
    /// independent draws when decoupled.
    pub fn sample_access(&self, decoupled: bool, rng: &mut RngStream) -> f64 {
        let x = self.sample(rng);
        if decoupled {
            x.min(self.sample(rng))
        } else {
            x
        }
    }
}

/// CDF of the residual seen under coupled or decoupled access.
pub fn residual_cdf(model: &ResidualModel, y: f64, decoupled: bool) -> f64 {
    let f = model.cdf(y);
    if decoupled {
        1.0 - (1.0 - f) * (1.0 - f)
    } else {
        f
    }
}

/// Round trip of a two-way priority device: `2 (S_S + t_res) + t_proc`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleTimeModel {
    s_short: f64,
    t_proc: f64,
    residual: ResidualModel,
    decoupled: bool,
}

impl CycleTimeModel {
    pub fn new(s_short: f64, t_proc: f64, residual: ResidualModel, decoupled: bool) -> Result<Self> {
        if !(s_short > 0.0) {
            return Err(Error::invalid("s_short", "must be positive"));
        }
        if !(t_proc >= 0.0) {
            return Err(Error::invalid("t_proc", "must be nonnegative"));
        }
        Ok(Self {
            s_short,
            t_proc,
            residual,
            decoupled,
        })
    }

    pub fn decoupled(&self) -> bool {
        self.decoupled
    }

    pub fn with_decoupled(&self, decoupled: bool) -> Self {
        Self {
            decoupled,
            ..self.clone()
        }
    }

    /// One cycle; the UL and DL residuals are drawn independently.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let up = self.residual.sample_access(self.decoupled, rng);
        let down = self.residual.sample_access(self.decoupled, rng);
        (self.s_short + up) + (self.s_short + down) + self.t_proc
    }
}

/// Sorted cycle-time samples and their mean.
#[derive(Debug, Clone)]
pub struct CycleTimeStats {
    pub mean: f64,
    samples: Vec<f64>,
}

impl CycleTimeStats {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Nearest-rank quantile, `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.samples.len();
        let rank = (q.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.samples[rank.clamp(1, n) - 1]
    }
}

pub fn cycle_time_stats(model: &CycleTimeModel, n_samples: usize, rng: &mut RngStream) -> Result<CycleTimeStats> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut samples: Vec<f64> = (0..n_samples).map(|_| model.sample(rng)).collect();
    let mean = samples.iter().sum::<f64>() / n_samples as f64;
    samples.sort_by(f64::total_cmp);
    Ok(CycleTimeStats { mean, samples })
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamId;
    use proptest::prelude::*;

    fn families() -> Vec<ResidualModel> {
        vec![
            ResidualModel::new(ResidualFamily::Exponential { rate: 1.0 }, 10.0).unwrap(),
            ResidualModel::new(ResidualFamily::TruncatedExponential { rate: 0.3 }, 10.0).unwrap(),
            ResidualModel::new(ResidualFamily::Uniform, 10.0).unwrap(),
            ResidualModel::new(ResidualFamily::Degenerate, 10.0).unwrap(),
            ResidualModel::new(ResidualFamily::Empirical(vec![0.5, 2.0, 2.0, 7.5]), 10.0).unwrap(),
        ]
    }

    #[test]
    fn zero_at_origin() {
        for m in families() {
            if matches!(m.family(), ResidualFamily::Degenerate) {
                continue;
            }
            assert_eq!(residual_cdf(&m, 0.0, false), 0.0);
            assert_eq!(residual_cdf(&m, 0.0, true), 0.0);
        }
    }

    #[test]
    fn exponential_min_of_two() {
        let m = ResidualModel::new(ResidualFamily::Exponential { rate: 1.0 }, 10.0).unwrap();
        let v = residual_cdf(&m, 0.5, true);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((v - 0.6321205588285577).abs() < 1e-15);
    }

    #[test]
    fn half_becomes_three_quarters() {
        let m = ResidualModel::new(ResidualFamily::Uniform, 10.0).unwrap();
        assert_eq!(residual_cdf(&m, 5.0, false), 0.5);
        assert_eq!(residual_cdf(&m, 5.0, true), 0.75);
    }

    #[test]
    fn truncated_exponential_support() {
        let m = ResidualModel::new(ResidualFamily::TruncatedExponential { rate: 2.0 }, 1.5).unwrap();
        assert_eq!(m.cdf(1.5), 1.0);
        let mut rng = RngStream::new(5, StreamId::Test);
        for _ in 0..10_000 {
            let x = m.sample(&mut rng);
            assert!((0.0..=1.5).contains(&x));
        }
    }

    #[test]
    fn degenerate_cycle() {
        let res = ResidualModel::new(ResidualFamily::Degenerate, 10.0).unwrap();
        for decoupled in [false, true] {
            let model = CycleTimeModel::new(1.0, 2.0, res.clone(), decoupled).unwrap();
            let s = cycle_time_stats(&model, 1000, &mut RngStream::new(1, StreamId::Residual)).unwrap();
            assert!(s.samples().iter().all(|&x| x == 4.0));
            assert_eq!(s.mean, 4.0);
            assert_eq!(s.quantile(0.999), 4.0);
        }
    }

    #[test]
    fn uniform_cycle_means() {
        let res = ResidualModel::new(ResidualFamily::Uniform, 10.0).unwrap();
        let n = 1_000_000;
        let dec = CycleTimeModel::new(1.0, 2.0, res.clone(), true).unwrap();
        let s = cycle_time_stats(&dec, n, &mut RngStream::new(9, StreamId::Residual)).unwrap();
        // E[min of two U(0,a)] = a/3
        let expected = 2.0 * (1.0 + 10.0 / 3.0) + 2.0;
        assert!((s.mean - expected).abs() < 0.01 * expected, "{}", s.mean);
        let cou = dec.with_decoupled(false);
        let s = cycle_time_stats(&cou, n, &mut RngStream::new(9, StreamId::Residual)).unwrap();
        assert!((s.mean - 14.0).abs() < 0.01 * 14.0, "{}", s.mean);
    }

    #[test]
    fn quantile_nearest_rank() {
        let s = CycleTimeStats {
            mean: 2.5,
            samples: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(s.quantile(0.5), 2.0);
        assert_eq!(s.quantile(0.51), 3.0);
        assert_eq!(s.quantile(1.0), 4.0);
        assert_eq!(s.quantile(0.0), 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ResidualModel::new(ResidualFamily::Exponential { rate: 0.0 }, 1.0).is_err());
        assert!(ResidualModel::new(ResidualFamily::Uniform, 0.0).is_err());
        assert!(ResidualModel::new(ResidualFamily::Empirical(vec![]), 1.0).is_err());
        let res = ResidualModel::new(ResidualFamily::Uniform, 1.0).unwrap();
        assert!(CycleTimeModel::new(0.0, 1.0, res.clone(), true).is_err());
        assert!(CycleTimeModel::new(1.0, -1.0, res.clone(), true).is_err());
        let m = CycleTimeModel::new(1.0, 0.0, res, true).unwrap();
        assert!(cycle_time_stats(&m, 0, &mut RngStream::new(0, StreamId::Residual)).is_err());
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    fn arb_model() -> impl Strategy<Value = ResidualModel> {
        prop_oneof![
            (0.01f64..5.0).prop_map(|r| ResidualFamily::Exponential { rate: r }),
            (0.01f64..5.0).prop_map(|r| ResidualFamily::TruncatedExponential { rate: r }),
            Just(ResidualFamily::Uniform),
            prop::collection::vec(0.0f64..10.0, 1..20).prop_map(ResidualFamily::Empirical),
        ]
        .prop_flat_map(|f| (Just(f), 0.5f64..20.0))
        .prop_map(|(f, a)| ResidualModel::new(f, a).unwrap())
    }

    proptest! {
        #[test]
        fn decoupled_dominates(m in arb_model(), y in 0.0f64..25.0) {
            let (c, d) = (residual_cdf(&m, y, false), residual_cdf(&m, y, true));
            prop_assert!(d >= c);
            if c > 0.0 && c < 1.0 {
                prop_assert!(d > c);
            }
        }

        #[test]
        fn cdfs_monotone_and_bounded(m in arb_model(), y in 0.0f64..25.0, dy in 0.0f64..5.0) {
            for dec in [false, true] {
                let (a, b) = (residual_cdf(&m, y, dec), residual_cdf(&m, y + dy, dec));
                prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
                prop_assert!(b >= a);
            }
        }

        #[test]
        fn decoupled_cycle_not_slower(m in arb_model(), seed in any::<u64>()) {
            // Couple the paths: each decoupled residual is the min of the
            // coupled draw and one more independent draw.
            let mut rng = RngStream::new(seed, StreamId::Residual);
            let (mut coupled, mut decoupled) = (0.0, 0.0);
            for _ in 0..2000 {
                let (a, b, c, d) = (m.sample(&mut rng), m.sample(&mut rng), m.sample(&mut rng), m.sample(&mut rng));
                coupled += 2.0 + a + c + 0.5;
                decoupled += 2.0 + a.min(b) + c.min(d) + 0.5;
            }
            prop_assert!(decoupled <= coupled);
        }
    }
}
