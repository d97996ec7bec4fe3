//! The DCF test: sup-norm statistic, Gaussian multiplier bootstrap, critical value,
//! p-value, confidence box, bootstrap power and moment diagnostics.
//!
//! Bootstrap replicate `r` draws its `n + m` multipliers from stream `(seed, r)`;
//! the independent multiplier set used for power approximation lives on stream ids
//! with the top bit set, so the two sets never overlap even under one master seed.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DcfError, Result};
use crate::matops::Matrix;
use crate::rng::SeedSpec;
use crate::scalar::Real;

/// Minimum bootstrap size accepted by [`TestConfig`].
pub const MIN_BOOT: usize = 100;

/// Stream ids at or above this value carry the power-approximation multipliers.
pub const STAR_STREAM_BASE: u64 = 1 << 63;

/// `n x p` observations, row `i` is observation `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    data: Matrix<T>,
}

impl<T: Real> Sample<T> {
    pub fn new(data: Matrix<T>) -> Result<Self> {
        if data.rows() < 2 {
            return Err(DcfError::TooFewObservations(data.rows()));
        }
        if let Some(pos) = data.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(DcfError::NonFinite {
                row: pos / data.cols().max(1),
                col: pos % data.cols().max(1),
            });
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn from_row_major(n: usize, p: usize, data: Vec<T>) -> Result<Self> {
        Self::new(Matrix::from_row_major(n, p, data)?)
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn p(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.data.row(i)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn mean(&self) -> Vec<T> {
        let mut acc = vec![T::zero(); self.p()];
        for i in 0..self.n() {
            for (a, &x) in acc.iter_mut().zip(self.row(i)) {
                *a += x;
            }
        }
        let n = T::of_usize(self.n());
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Returns a copy with `f` applied to every entry.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let data = self.data.as_slice().iter().map(|&x| f(x)).collect();
        Self::from_row_major(self.n(), self.p(), data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub n_boot: usize,
    pub seed: u64,
}

impl TestConfig {
    pub fn new(alpha: f64, n_boot: usize, seed: u64) -> Result<Self> {
        let config = Self {
            alpha,
            n_boot,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DcfError::InvalidAlpha(self.alpha));
        }
        if self.n_boot < MIN_BOOT {
            return Err(DcfError::TooFewReplicates {
                min: MIN_BOOT,
                got: self.n_boot,
            });
        }
        Ok(())
    }
}

/// Realized bootstrap max-statistics, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws<T> {
    values: Vec<T>,
}

impl<T: Real> BootstrapDraws<T> {
    /// Sorts `values`; rejects an empty set and negative or non-finite entries.
    pub fn from_values(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(DcfError::TooFewReplicates { min: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(DcfError::InvalidParameter(
                "bootstrap draws must be finite and nonnegative".into(),
            ));
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every draw is zero: the centered data carry no variation.
    pub fn is_degenerate(&self) -> bool {
        self.values.last().is_some_and(|v| *v == T::zero())
    }

    pub fn critical_value(&self, alpha: f64) -> T {
        critical_value(self, alpha)
    }

    pub fn p_value(&self, statistic: T) -> f64 {
        p_value(self, statistic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub statistic: T,
    pub critical_value: T,
    pub p_value: f64,
    pub reject: bool,
    /// All bootstrap draws were zero (constant data); the test then rejects with
    /// statistic 0 = critical value 0.
    pub degenerate_bootstrap: bool,
}

/// Box `{d : max_j |center_j - d_j| <= half_width}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBox<T> {
    pub center: Vec<T>,
    pub half_width: T,
}

impl<T: Real> ConfidenceBox<T> {
    pub fn contains(&self, d: &[T]) -> bool {
        d.len() == self.center.len()
            && self
                .center
                .iter()
                .zip(d)
                .all(|(&c, &x)| (c - x).abs() <= self.half_width)
    }
}

/// Empirical stand-ins for the moment conditions behind the test's size guarantee.
/// They use the sample mean in place of the population mean and certify nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    /// `min_j (sigma2_{X,j} + sigma2_{Y,j})`
    pub min_combined_variance: T,
    /// max over both samples and all coordinates of the mean `|x - xbar|^3`
    pub max_avg_abs_moment_3: T,
    /// same with `(x - xbar)^4`
    pub max_avg_moment_4: T,
}

impl<T: Real> Diagnostics<T> {
    /// Moment bound proxy: the smallest `B` with `M3 <= B` and `M4 <= B^2`.
    pub fn moment_bound(&self) -> T {
        self.max_avg_abs_moment_3.max(self.max_avg_moment_4.sqrt())
    }
}

fn check_dims<T: Real>(x: &Sample<T>, y: &Sample<T>) -> Result<()> {
    if x.p() != y.p() {
        return Err(DcfError::DimensionMismatch {
            expected: x.p(),
            found: y.p(),
        });
    }
    Ok(())
}

/// `T_n = sqrt(n) * max_j |Xbar_j - Ybar_j|`.
pub fn test_statistic<T: Real>(x: &Sample<T>, y: &Sample<T>) -> Result<T> {
    check_dims(x, y)?;
    let diff = mean_difference(x, y);
    Ok(T::of_usize(x.n()).sqrt() * sup_norm(&diff))
}

fn mean_difference<T: Real>(x: &Sample<T>, y: &Sample<T>) -> Vec<T> {
    x.mean()
        .into_iter()
        .zip(y.mean())
        .map(|(a, b)| a - b)
        .collect()
}

fn sup_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Precomputed multiplier bootstrap for one pair of samples.
///
/// With `e_1..e_{n+m}` standard normal, a replicate equals
/// `max_j |sum_k e_k w_kj|` where row `k` of `w` is `(X_k - Xbar) / sqrt(n)` for
/// `k <= n` and `-(Y_{k-n} - Ybar) * sqrt(n) / m` afterwards; the second block folds
/// the `sqrt(n/m)` weight of the Y-sum into the rows.
#[derive(Debug, Clone)]
pub struct MultiplierBootstrap<T> {
    n: usize,
    p: usize,
    weights: Matrix<T>,
    mean_diff: Vec<T>,
}

impl<T: Real> MultiplierBootstrap<T> {
    pub fn new(x: &Sample<T>, y: &Sample<T>) -> Result<Self> {
        check_dims(x, y)?;
        let (n, m, p) = (x.n(), y.n(), x.p());
        let x_mean = x.mean();
        let y_mean = y.mean();
        let x_scale = T::one() / T::of_usize(n).sqrt();
        let y_scale = -T::of_usize(n).sqrt() / T::of_usize(m);
        let mut weights = Vec::with_capacity((n + m) * p);
        for i in 0..n {
            weights.extend(x.row(i).iter().zip(&x_mean).map(|(&v, &c)| (v - c) * x_scale));
        }
        for i in 0..m {
            weights.extend(y.row(i).iter().zip(&y_mean).map(|(&v, &c)| (v - c) * y_scale));
        }
        let mean_diff = x_mean.iter().zip(&y_mean).map(|(&a, &b)| a - b).collect();
        Ok(Self {
            n,
            p,
            weights: Matrix::from_row_major(n + m, p, weights)?,
            mean_diff,
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn statistic(&self) -> T {
        T::of_usize(self.n).sqrt() * sup_norm(&self.mean_diff)
    }

    pub fn mean_difference(&self) -> &[T] {
        &self.mean_diff
    }

    /// One replicate: `max_j |(e' w)_j + shift_j|` with multipliers from `stream`.
    fn replicate(&self, stream: SeedSpec, shift: Option<&[T]>, e: &mut [f64], acc: &mut [T]) -> T {
        let mut rng = stream.stream();
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        match shift {
            Some(s) => acc.copy_from_slice(s),
            None => acc.fill(T::zero()),
        }
        for (k, &ek) in e.iter().enumerate() {
            let ek = T::of(ek);
            for (a, &w) in acc.iter_mut().zip(self.weights.row(k)) {
                *a += ek * w;
            }
        }
        sup_norm(acc)
    }

    fn replicates(&self, master: u64, base: u64, count: usize, shift: Option<&[T]>) -> Vec<T> {
        let rows = self.weights.rows();
        (0..count)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; rows], vec![T::zero(); self.p]),
                |(e, acc), r| self.replicate(SeedSpec::new(master, base + r as u64), shift, e, acc),
            )
            .collect()
    }

    pub fn draws(&self, config: &TestConfig) -> Result<BootstrapDraws<T>> {
        config.validate()?;
        BootstrapDraws::from_values(self.replicates(config.seed, 0, config.n_boot, None))
    }

    pub fn run(&self, config: &TestConfig) -> Result<(TestResult<T>, BootstrapDraws<T>)> {
        let draws = self.draws(config)?;
        let statistic = self.statistic();
        let critical_value = draws.critical_value(config.alpha);
        let result = TestResult {
            statistic,
            critical_value,
            p_value: draws.p_value(statistic),
            reject: statistic >= critical_value,
            degenerate_bootstrap: draws.is_degenerate(),
        };
        Ok((result, draws))
    }

    /// Fraction of `n_star` independent replicates of
    /// `max_j |(e*' w)_j + sqrt(n) delta_j|` reaching `critical_value`.
    pub fn power_star(
        &self,
        critical_value: T,
        delta: &[T],
        n_star: usize,
        star_seed: u64,
    ) -> Result<f64> {
        if delta.len() != self.p {
            return Err(DcfError::DimensionMismatch {
                expected: self.p,
                found: delta.len(),
            });
        }
        if n_star == 0 {
            return Err(DcfError::TooFewReplicates { min: 1, got: 0 });
        }
        let root_n = T::of_usize(self.n).sqrt();
        let shift: Vec<T> = delta.iter().map(|&d| root_n * d).collect();
        let hits = self
            .replicates(star_seed, STAR_STREAM_BASE, n_star, Some(&shift))
            .into_iter()
            .filter(|&v| v >= critical_value)
            .count();
        Ok(hits as f64 / n_star as f64)
    }
}

pub fn bootstrap_draws<T: Real>(
    x: &Sample<T>,
    y: &Sample<T>,
    config: &TestConfig,
) -> Result<BootstrapDraws<T>> {
    MultiplierBootstrap::new(x, y)?.draws(config)
}

/// Smallest draw `t` with `#{draws <= t} / N >= 1 - alpha`, i.e. the order statistic
/// `d_(ceil(N (1 - alpha)))`.
pub fn critical_value<T: Real>(draws: &BootstrapDraws<T>, alpha: f64) -> T {
    let n = draws.len();
    let target = (1.0 - alpha) * n as f64;
    // absorb representation error in N(1 - alpha), e.g. 10 * (1 - 0.3) = 7.000000000000001
    let rank = ((target - 1e-9 * target.max(1.0)).ceil() as usize).clamp(1, n);
    draws.values[rank - 1]
}

/// `#{draws >= statistic} / N`.
pub fn p_value<T: Real>(draws: &BootstrapDraws<T>, statistic: T) -> f64 {
    let below = draws.values.partition_point(|&d| d < statistic);
    (draws.len() - below) as f64 / draws.len() as f64
}

pub fn run_test<T: Real>(x: &Sample<T>, y: &Sample<T>, config: &TestConfig) -> Result<TestResult<T>> {
    Ok(MultiplierBootstrap::new(x, y)?.run(config)?.0)
}

pub fn confidence_region<T: Real>(
    x: &Sample<T>,
    y: &Sample<T>,
    config: &TestConfig,
) -> Result<ConfidenceBox<T>> {
    let boot = MultiplierBootstrap::new(x, y)?;
    let c = boot.draws(config)?.critical_value(config.alpha);
    Ok(ConfidenceBox {
        center: boot.mean_diff.clone(),
        half_width: c / T::of_usize(x.n()).sqrt(),
    })
}

/// Bootstrap approximation of the power at mean difference `delta = mu_X - mu_Y`.
///
/// The critical value comes from `config.seed`; the `n_boot_star` power replicates
/// use `star_seed` on the disjoint upper half of the stream-id space.
pub fn power_estimate<T: Real>(
    x: &Sample<T>,
    y: &Sample<T>,
    delta: &[T],
    config: &TestConfig,
    n_boot_star: usize,
    star_seed: u64,
) -> Result<f64> {
    let boot = MultiplierBootstrap::new(x, y)?;
    let c = boot.draws(config)?.critical_value(config.alpha);
    boot.power_star(c, delta, n_boot_star, star_seed)
}

struct ColumnMoments<T> {
    var: Vec<T>,
    abs3: Vec<T>,
    m4: Vec<T>,
}

fn column_moments<T: Real>(s: &Sample<T>) -> ColumnMoments<T> {
    let mean = s.mean();
    let p = s.p();
    let mut var = vec![T::zero(); p];
    let mut abs3 = vec![T::zero(); p];
    let mut m4 = vec![T::zero(); p];
    for i in 0..s.n() {
        for j in 0..p {
            let d = (s.row(i)[j] - mean[j]).abs();
            let d2 = d * d;
            var[j] += d2;
            abs3[j] += d2 * d;
            m4[j] += d2 * d2;
        }
    }
    let n = T::of_usize(s.n());
    for v in var.iter_mut().chain(abs3.iter_mut()).chain(m4.iter_mut()) {
        *v /= n;
    }
    ColumnMoments { var, abs3, m4 }
}

pub fn diagnostics<T: Real>(x: &Sample<T>, y: &Sample<T>) -> Result<Diagnostics<T>> {
    check_dims(x, y)?;
    let mx = column_moments(x);
    let my = column_moments(y);
    let max_of = |a: &[T], b: &[T]| a.iter().chain(b).fold(T::zero(), |m, &v| m.max(v));
    let min_combined_variance = mx
        .var
        .iter()
        .zip(&my.var)
        .map(|(&a, &b)| a + b)
        .fold(T::infinity(), T::min);
    Ok(Diagnostics {
        min_combined_variance: if x.p() == 0 {
            T::zero()
        } else {
            min_combined_variance
        },
        max_avg_abs_moment_3: max_of(&mx.abs3, &my.abs3),
        max_avg_moment_4: max_of(&mx.m4, &my.m4),
    })
}
