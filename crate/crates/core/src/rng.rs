//! Reproducible random streams and the innovation laws of the simulation study.
//!
//! Every stream is a ChaCha8 keystream keyed by `master_seed` and positioned on the
//! 64-bit ChaCha stream selected by `stream_id`. A stream is therefore a pure
//! function of the [`SeedSpec`] and never depends on which thread consumes it, or in
//! what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{DcfError, Result};

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    pub fn stream(&self) -> Stream {
        derive_stream(*self)
    }

    /// Node `index` of the seed tree below this seed.
    ///
    /// The child gets a fresh master key mixed from `(master_seed, stream_id, index)`,
    /// so subtrees rooted at different children never share ChaCha keys.
    pub fn child(&self, index: u64) -> SeedSpec {
        let key = mix64(mix64(mix64(self.master_seed) ^ self.stream_id) ^ index);
        SeedSpec::new(key, index)
    }
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_stream(seed: SeedSpec) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
    rng.set_stream(seed.stream_id);
    rng
}

/// Mean-zero, unit-variance innovation laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Innovation {
    /// N(0, 1)
    StdNormal,
    /// Gamma(shape 16, scale 1/4) - 4
    CenteredGamma,
    /// (5/3)^{-1/2} t(5)
    ScaledT,
    /// 8^{-1/2} (chi^2(4) - 4)
    CenteredChiSq,
}

/// Draws one innovation at a time. Holds the constructed distribution objects so the
/// parameter checks run once.
#[derive(Debug, Clone, Copy)]
pub enum InnovationSampler {
    StdNormal,
    CenteredGamma(Gamma<f64>),
    ScaledT(StudentT<f64>),
    CenteredChiSq(ChiSquared<f64>),
}

const T5_SCALE: f64 = 0.774_596_669_241_483_4; // sqrt(3/5)
const CHISQ4_SCALE: f64 = 0.353_553_390_593_273_8; // 1/sqrt(8)

impl Innovation {
    pub fn sampler(self) -> InnovationSampler {
        match self {
            Innovation::StdNormal => InnovationSampler::StdNormal,
            Innovation::CenteredGamma => {
                InnovationSampler::CenteredGamma(Gamma::new(16.0, 0.25).expect("valid gamma"))
            }
            Innovation::ScaledT => {
                InnovationSampler::ScaledT(StudentT::new(5.0).expect("valid t"))
            }
            Innovation::CenteredChiSq => {
                InnovationSampler::CenteredChiSq(ChiSquared::new(4.0).expect("valid chi-squared"))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, count: usize) -> Vec<f64> {
        let sampler = self.sampler();
        (0..count).map(|_| sampler.draw(rng)).collect()
    }
}

impl InnovationSampler {
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::StdNormal => rng.sample(StandardNormal),
            InnovationSampler::CenteredGamma(g) => g.sample(rng) - 4.0,
            InnovationSampler::ScaledT(t) => T5_SCALE * t.sample(rng),
            InnovationSampler::CenteredChiSq(c) => CHISQ4_SCALE * (c.sample(rng) - 4.0),
        }
    }
}

pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    Innovation::StdNormal.sample(rng, count)
}

/// Gamma draws use the Marsaglia-Tsang squeeze method.
pub fn sample_centered_gamma<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    Innovation::CenteredGamma.sample(rng, count)
}

pub fn sample_scaled_t<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    Innovation::ScaledT.sample(rng, count)
}

/// Chi-squared(4) is drawn as Gamma(2, 2).
pub fn sample_centered_chisq<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    Innovation::CenteredChiSq.sample(rng, count)
}

pub fn sample_uniform<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(DcfError::EmptyRange { lo, hi });
    }
    let width = hi - lo;
    Ok((0..count)
        .map(|_| (lo + width * rng.random::<f64>()).min(hi))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIG: usize = 1_000_000;

    fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        (mean, m2, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    }

    /// Phi(x) by composite Simpson quadrature of the normal density on [0, x].
    fn normal_cdf_quadrature(x: f64) -> f64 {
        let steps = 20_000;
        let h = x / steps as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = pdf(0.0) + pdf(x);
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(k as f64 * h);
        }
        0.5 + acc * h / 3.0
    }

    #[test]
    fn same_seed_same_draws() {
        let a = sample_std_normal(&mut SeedSpec::new(42, 0).stream(), 100);
        let b = sample_std_normal(&mut SeedSpec::new(42, 0).stream(), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_stream_ids_differ() {
        let a = sample_std_normal(&mut SeedSpec::new(42, 0).stream(), 100);
        let b = sample_std_normal(&mut SeedSpec::new(42, 1).stream(), 100);
        assert!(a.iter().zip(&b).all(|(x, y)| x != y));
    }

    #[test]
    fn thread_count_does_not_change_stream() {
        let reference = sample_std_normal(&mut SeedSpec::new(42, 7).stream(), 1000);
        let handles: Vec<_> = (0..8)
            .map(|_| {
                std::thread::spawn(|| sample_std_normal(&mut SeedSpec::new(42, 7).stream(), 1000))
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), reference);
        }
    }

    #[test]
    fn streams_are_uncorrelated() {
        let a = sample_std_normal(&mut SeedSpec::new(9, 0).stream(), 100_000);
        let b = sample_std_normal(&mut SeedSpec::new(9, 1).stream(), 100_000);
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
        assert!((cov / (va * vb).sqrt()).abs() < 0.01);
    }

    #[test]
    fn child_seeds_are_distinct() {
        let root = SeedSpec::new(1, 0);
        assert_ne!(root.child(0), root.child(1));
        assert_ne!(root.child(0).child(0), root.child(1).child(0));
        assert_eq!(root.child(3), root.child(3));
    }

    #[test]
    fn std_normal_moments() {
        let xs = sample_std_normal(&mut SeedSpec::new(1, 0).stream(), BIG);
        let (mean, var, _, _) = moments(&xs);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        let cut = 1.6449;
        let expected = normal_cdf_quadrature(cut);
        assert!((expected - 0.95).abs() < 1e-4);
        let frac = xs.iter().filter(|&&x| x <= cut).count() as f64 / BIG as f64;
        assert!((frac - expected).abs() < 0.002, "fraction {frac}");
    }

    #[test]
    fn centered_gamma_moments() {
        let xs = sample_centered_gamma(&mut SeedSpec::new(2, 0).stream(), BIG);
        let (mean, var, skew, _) = moments(&xs);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        // 2 / sqrt(shape)
        assert!((skew - 0.5).abs() < 0.02, "skew {skew}");
    }

    #[test]
    fn scaled_t_moments() {
        let xs = sample_scaled_t(&mut SeedSpec::new(3, 0).stream(), BIG);
        let (mean, var, _, _) = moments(&xs);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    /// t(5) CDF by Simpson quadrature of the density `8 / (3 pi sqrt 5) (1 + t^2/5)^-3`.
    fn t5_cdf_quadrature(x: f64) -> f64 {
        let steps = 20_000;
        let h = x / steps as f64;
        let c = 8.0 / (3.0 * std::f64::consts::PI * 5f64.sqrt());
        let pdf = |t: f64| c * (1.0 + t * t / 5.0).powi(-3);
        let mut acc = pdf(0.0) + pdf(x);
        for k in 1..steps {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * pdf(k as f64 * h);
        }
        0.5 + acc * h / 3.0
    }

    #[test]
    fn scaled_t_quantiles() {
        let xs = sample_scaled_t(&mut SeedSpec::new(3, 1).stream(), BIG);
        let scale = (5.0f64 / 3.0).sqrt();
        for cut in [0.5, 1.0, 1.5608, 3.0] {
            let expected = t5_cdf_quadrature(cut * scale);
            let frac = xs.iter().filter(|&&x| x <= cut).count() as f64 / BIG as f64;
            assert!((frac - expected).abs() < 0.002, "cut {cut}: {frac} vs {expected}");
        }
    }

    /// Sample excess kurtosis of t(5) has infinite variance: at 10^6 draws only about
    /// one seed in five lands within 0.5 of 6, with the bulk near 5.2. Kept for
    /// reference; `scaled_t_quantiles` checks the law instead.
    #[test]
    #[ignore = "sample kurtosis of t(5) does not concentrate at 10^6 draws"]
    fn scaled_t_excess_kurtosis() {
        let xs = sample_scaled_t(&mut SeedSpec::new(3, 0).stream(), BIG);
        let (_, _, _, kurt) = moments(&xs);
        // 6 / (nu - 4)
        assert!((kurt - 6.0).abs() < 0.5, "excess kurtosis {kurt}");
    }

    #[test]
    fn centered_chisq_moments() {
        let xs = sample_centered_chisq(&mut SeedSpec::new(4, 0).stream(), BIG);
        let (mean, var, skew, _) = moments(&xs);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        // sqrt(8 / k)
        assert!((skew - 2f64.sqrt()).abs() < 0.03, "skew {skew}");
    }

    #[test]
    fn uniform_moments_and_support() {
        let xs = sample_uniform(&mut SeedSpec::new(5, 0).stream(), BIG, 1.0, 2.0).unwrap();
        let (mean, _, _, _) = moments(&xs);
        assert!((mean - 1.5).abs() < 0.003);

        let xs = sample_uniform(&mut SeedSpec::new(5, 1).stream(), BIG, -0.1, 0.1).unwrap();
        assert!(xs.iter().all(|x| (-0.1..=0.1).contains(x)));

        let xs = sample_uniform(&mut SeedSpec::new(5, 2).stream(), BIG, 1.0, 3.0).unwrap();
        let (_, var, _, _) = moments(&xs);
        assert!((var - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn uniform_rejects_empty_range() {
        let mut rng = SeedSpec::new(0, 0).stream();
        assert!(sample_uniform(&mut rng, 3, 1.0, 1.0).is_err());
        assert!(sample_uniform(&mut rng, 3, 2.0, 1.0).is_err());
    }
}
