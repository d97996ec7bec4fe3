//! Data generators for simulation Settings I-VII.
//!
//! | Setting | sizes (n, m, p)  | covariance                | innovations          |
//! |---------|------------------|---------------------------|----------------------|
//! | I       | 200, 300, 1000   | `Sigma` for both          | Gaussian             |
//! | II      | 200, 300, 1000   | `Sigma` / `2 Sigma`       | Gaussian             |
//! | III     | 200, 300, 1000   | `Omega_i` / `Omega*_i`    | normal + gamma block |
//! | IV      | 100, 400, 1000   | as III                    | as III               |
//! | V       | 200, 300, 1000   | as III                    | scaled t + gamma     |
//! | VI      | 200, 300, 1000   | as III                    | scaled chi2 + gamma  |
//! | VII     | 200, 300, 1000   | as III                    | as III, fixed signal |
//!
//! `Sigma_jk = (1 + |j - k|)^{-1/4}`, `Omega_i = D_i Sigma D_i` with
//! `D_i = diag(sqrt(phi_ij))`, `phi_ij ~ U(1, 2)` for X and `U(1, 3)` for Y. The
//! first `floor(2p/5)` innovation coordinates use the head law of the setting and the
//! rest are centered Gamma(16, 1/4). `mu_X = 0` throughout.
//!
//! Mean vectors and `phi` are drawn once from their own seeds, so every Monte Carlo
//! run under one [`SettingSpec`] sees the same parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcf::Sample;
use crate::error::{DcfError, Result};
use crate::matops::{poly_decay_cov, scaled_cov, sym_sqrt, CovMatrix, Matrix};
use crate::rng::{sample_uniform, Innovation, InnovationSampler, SeedSpec, Stream};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl Setting {
    pub const ALL: [Setting; 7] = [
        Setting::I,
        Setting::II,
        Setting::III,
        Setting::IV,
        Setting::V,
        Setting::VI,
        Setting::VII,
    ];

    /// `(n, m, p)` used in the full-scale study.
    pub fn full_sizes(self) -> (usize, usize, usize) {
        match self {
            Setting::IV => (100, 400, 1000),
            _ => (200, 300, 1000),
        }
    }

    /// Per-observation covariances `Omega_i` (Settings III-VII).
    pub fn is_heterogeneous(self) -> bool {
        !matches!(self, Setting::I | Setting::II)
    }

    pub fn mean_mode(self) -> MeanMode {
        match self {
            Setting::VII => MeanMode::FixedDelta,
            _ => MeanMode::UniformTheta,
        }
    }

    fn head_innovation(self) -> Innovation {
        match self {
            Setting::V => Innovation::ScaledT,
            Setting::VI => Innovation::CenteredChiSq,
            _ => Innovation::StdNormal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMode {
    /// nonzero coordinates `theta_k ~ U(-delta, delta)`
    UniformTheta,
    /// nonzero coordinates all equal `delta`
    FixedDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub p: usize,
    pub beta: f64,
    pub delta: f64,
    pub mode: MeanMode,
    pub theta_seed: SeedSpec,
}

impl MeanSpec {
    /// `floor(beta * p)`, tolerant of representation error in the product.
    pub fn support(&self) -> usize {
        ((self.beta * self.p as f64 + 1e-9).floor() as usize).min(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(DcfError::InvalidParameter(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(DcfError::InvalidParameter(format!(
                "delta must be finite and nonnegative, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// `mu_Y = (theta_1, .., theta_{floor(beta p)}, 0, .., 0)`.
///
/// In uniform mode `theta_k = delta * u_k` with `u_k ~ U(-1, 1)` drawn for all `p`
/// coordinates from `theta_seed`, so cells that differ only in `beta` or `delta` share
/// the same underlying `u`.
pub fn build_mean_vector<T: Real>(spec: &MeanSpec) -> Result<Vec<T>> {
    spec.validate()?;
    let k = spec.support();
    let mut mu = vec![T::zero(); spec.p];
    match spec.mode {
        MeanMode::FixedDelta => mu[..k].fill(T::of(spec.delta)),
        MeanMode::UniformTheta => {
            let u = sample_uniform(&mut spec.theta_seed.stream(), spec.p, -1.0, 1.0)?;
            for (m, &u) in mu[..k].iter_mut().zip(&u) {
                *m = T::of(spec.delta * u);
            }
        }
    }
    Ok(mu)
}

/// Signal strength `delta(r) = {2 r log(p) / max(n, m)}^{1/2}`.
pub fn signal_strength(r: f64, p: usize, n: usize, m: usize) -> f64 {
    (2.0 * r * (p as f64).ln() / n.max(m) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub setting: Setting,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub mean: MeanSpec,
    pub phi_seed: SeedSpec,
    /// Generate Settings III-VII as `D_i Sigma^{1/2} z` instead of `Omega_i^{1/2} z`.
    /// Same covariance, different law when the innovations are non-Gaussian.
    #[serde(default)]
    pub fast_transform: bool,
    /// Settings V/VI: apply the heavy-tailed or skewed law to every coordinate, not
    /// only to the leading block.
    #[serde(default)]
    pub replace_all_innovations: bool,
}

impl SettingSpec {
    /// Full-scale sizes for `setting`.
    pub fn full_scale(setting: Setting, delta: f64, beta: f64, theta_seed: SeedSpec, phi_seed: SeedSpec) -> Self {
        let (n, m, p) = setting.full_sizes();
        Self::with_sizes(setting, n, m, p, delta, beta, theta_seed, phi_seed)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_sizes(
        setting: Setting,
        n: usize,
        m: usize,
        p: usize,
        delta: f64,
        beta: f64,
        theta_seed: SeedSpec,
        phi_seed: SeedSpec,
    ) -> Self {
        Self {
            setting,
            n,
            m,
            p,
            mean: MeanSpec {
                p,
                beta,
                delta,
                mode: setting.mean_mode(),
                theta_seed,
            },
            phi_seed,
            fast_transform: false,
            replace_all_innovations: false,
        }
    }

    /// Same setting and seeds with a different `(delta, beta)` cell.
    pub fn with_cell(&self, delta: f64, beta: f64) -> Self {
        let mut out = self.clone();
        out.mean.delta = delta;
        out.mean.beta = beta;
        out
    }

    /// Sizes differ from the full-scale study.
    pub fn is_scale_reduced(&self) -> bool {
        (self.n, self.m, self.p) != self.setting.full_sizes()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.m < 2 {
            return Err(DcfError::TooFewObservations(self.n.min(self.m)));
        }
        if self.p == 0 {
            return Err(DcfError::InvalidParameter("p must be positive".into()));
        }
        if self.mean.p != self.p {
            return Err(DcfError::DimensionMismatch {
                expected: self.p,
                found: self.mean.p,
            });
        }
        if self.mean.mode != self.setting.mean_mode() {
            return Err(DcfError::InvalidParameter(format!(
                "setting {:?} uses {:?} mean vectors, got {:?}",
                self.setting,
                self.setting.mean_mode(),
                self.mean.mode
            )));
        }
        self.mean.validate()
    }

    /// Number of leading innovation coordinates drawn from the head law.
    pub fn head_block(&self) -> usize {
        if !self.setting.is_heterogeneous() {
            return self.p;
        }
        if self.replace_all_innovations && matches!(self.setting, Setting::V | Setting::VI) {
            return self.p;
        }
        2 * self.p / 5
    }
}

#[derive(Debug, Clone)]
enum Transform<T> {
    /// One root for every observation.
    Shared(Matrix<T>),
    /// `Omega_i^{1/2}` per observation.
    PerObservation(Vec<Matrix<T>>),
    /// `diag(sqrt(phi_i)) Sigma^{1/2}` per observation.
    Scaled { root: Matrix<T>, scales: Vec<Vec<T>> },
}

impl<T: Real> Transform<T> {
    fn apply(&self, i: usize, z: &[T], out: &mut [T]) {
        match self {
            Transform::Shared(r) => r.mul_vec_into(z, out),
            Transform::PerObservation(rs) => rs[i].mul_vec_into(z, out),
            Transform::Scaled { root, scales } => {
                root.mul_vec_into(z, out);
                for (o, &s) in out.iter_mut().zip(&scales[i]) {
                    *o *= s;
                }
            }
        }
    }
}

/// A setting with its fixed parameters (mean vector, `phi`, covariance roots)
/// computed once. Generating a Monte Carlo draw only needs a run seed.
#[derive(Debug, Clone)]
pub struct PreparedSetting<T> {
    spec: SettingSpec,
    mu_y: Vec<T>,
    sigma: CovMatrix<T>,
    phi_x: Vec<Vec<T>>,
    phi_y: Vec<Vec<T>>,
    x_transform: Transform<T>,
    y_transform: Transform<T>,
}

impl<T: Real> PreparedSetting<T> {
    pub fn new(spec: &SettingSpec) -> Result<Self> {
        spec.validate()?;
        let mu_y = build_mean_vector(&spec.mean)?;
        Self::build(spec, mu_y)
    }

    /// Uses `mu_y` in place of the vector described by `spec.mean`.
    pub fn with_mean_y(spec: &SettingSpec, mu_y: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if mu_y.len() != spec.p {
            return Err(DcfError::DimensionMismatch {
                expected: spec.p,
                found: mu_y.len(),
            });
        }
        Self::build(spec, mu_y)
    }

    fn build(spec: &SettingSpec, mu_y: Vec<T>) -> Result<Self> {
        let p = spec.p;
        let sigma = poly_decay_cov::<T>(p);
        let sigma_root = sym_sqrt(&sigma)?;

        let (phi_x, phi_y, x_transform, y_transform) = if spec.setting.is_heterogeneous() {
            let mut rng = spec.phi_seed.stream();
            let mut draw_phi = |rows: usize, hi: f64| -> Result<Vec<Vec<T>>> {
                (0..rows)
                    .map(|_| Ok(sample_uniform(&mut rng, p, 1.0, hi)?.into_iter().map(T::of).collect()))
                    .collect()
            };
            let phi_x = draw_phi(spec.n, 2.0)?;
            let phi_y = draw_phi(spec.m, 3.0)?;
            let make = |phi: &[Vec<T>]| -> Result<Transform<T>> {
                if spec.fast_transform {
                    Ok(Transform::Scaled {
                        root: sigma_root.clone(),
                        scales: phi.iter().map(|row| row.iter().map(|v| v.sqrt()).collect()).collect(),
                    })
                } else {
                    let roots = phi
                        .par_iter()
                        .map(|row| sym_sqrt(&scaled_cov(&sigma, row)?))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(Transform::PerObservation(roots))
                }
            };
            let (tx, ty) = (make(&phi_x)?, make(&phi_y)?);
            (phi_x, phi_y, tx, ty)
        } else {
            let y_root = match spec.setting {
                Setting::II => sym_sqrt(&scaled_cov(&sigma, &vec![T::of(2.0); p])?)?,
                _ => sigma_root.clone(),
            };
            (
                Vec::new(),
                Vec::new(),
                Transform::Shared(sigma_root),
                Transform::Shared(y_root),
            )
        };

        Ok(Self {
            spec: spec.clone(),
            mu_y,
            sigma,
            phi_x,
            phi_y,
            x_transform,
            y_transform,
        })
    }

    pub fn spec(&self) -> &SettingSpec {
        &self.spec
    }

    pub fn mu_y(&self) -> &[T] {
        &self.mu_y
    }

    /// Population covariance of `X_i`.
    pub fn x_covariance(&self, i: usize) -> Result<CovMatrix<T>> {
        if self.spec.setting.is_heterogeneous() {
            scaled_cov(&self.sigma, &self.phi_x[i])
        } else {
            Ok(self.sigma.clone())
        }
    }

    /// Population covariance of `Y_i`.
    pub fn y_covariance(&self, i: usize) -> Result<CovMatrix<T>> {
        match self.spec.setting {
            Setting::I => Ok(self.sigma.clone()),
            Setting::II => scaled_cov(&self.sigma, &vec![T::of(2.0); self.spec.p]),
            _ => scaled_cov(&self.sigma, &self.phi_y[i]),
        }
    }

    /// Fills `z` with one innovation vector.
    pub fn innovations(&self, rng: &mut Stream, z: &mut [T]) {
        let head = self.spec.head_block();
        let head_law = self.spec.setting.head_innovation().sampler();
        let tail_law = Innovation::CenteredGamma.sampler();
        fill(rng, &head_law, &mut z[..head]);
        fill(rng, &tail_law, &mut z[head..]);
    }

    /// One Monte Carlo draw of `(X^n, Y^m)`; a pure function of `run_seed`.
    pub fn gen_pair(&self, run_seed: SeedSpec) -> (Sample<T>, Sample<T>) {
        let mut rng = run_seed.stream();
        let x = self.gen_sample(&mut rng, self.spec.n, &self.x_transform, None);
        let y = self.gen_sample(&mut rng, self.spec.m, &self.y_transform, Some(&self.mu_y));
        (x, y)
    }

    fn gen_sample(&self, rng: &mut Stream, rows: usize, transform: &Transform<T>, mean: Option<&[T]>) -> Sample<T> {
        let p = self.spec.p;
        let mut z = vec![T::zero(); p];
        let mut data = vec![T::zero(); rows * p];
        for (i, out) in data.chunks_exact_mut(p).enumerate() {
            self.innovations(rng, &mut z);
            transform.apply(i, &z, out);
            if let Some(mu) = mean {
                for (o, &m) in out.iter_mut().zip(mu) {
                    *o += m;
                }
            }
        }
        Sample::from_row_major(rows, p, data).expect("generator output is a valid sample")
    }
}

fn fill<T: Real>(rng: &mut Stream, law: &InnovationSampler, out: &mut [T]) {
    for v in out {
        *v = T::of(law.draw(rng));
    }
}

/// Prepares `spec` and draws one pair. Prefer [`PreparedSetting`] when drawing
/// repeatedly.
pub fn gen_pair<T: Real>(spec: &SettingSpec, run_seed: SeedSpec) -> Result<(Sample<T>, Sample<T>)> {
    Ok(PreparedSetting::new(spec)?.gen_pair(run_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(setting: Setting, n: usize, m: usize, p: usize) -> SettingSpec {
        SettingSpec::with_sizes(setting, n, m, p, 0.0, 0.0, SeedSpec::new(1, 0), SeedSpec::new(2, 0))
    }

    #[test]
    fn null_mean_vector() {
        for delta in [0.0, 0.5] {
            let spec = MeanSpec {
                p: 20,
                beta: 0.0,
                delta,
                mode: MeanMode::UniformTheta,
                theta_seed: SeedSpec::new(3, 0),
            };
            assert!(build_mean_vector::<f64>(&spec).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fixed_delta_mean_vector() {
        let spec = MeanSpec {
            p: 5,
            beta: 0.4,
            delta: 0.2,
            mode: MeanMode::FixedDelta,
            theta_seed: SeedSpec::default(),
        };
        assert_eq!(build_mean_vector::<f64>(&spec).unwrap(), vec![0.2, 0.2, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_theta_mean_vector() {
        let spec = MeanSpec {
            p: 100_000,
            beta: 1.0,
            delta: 0.3,
            mode: MeanMode::UniformTheta,
            theta_seed: SeedSpec::new(4, 0),
        };
        let mu = build_mean_vector::<f64>(&spec).unwrap();
        assert!(mu.iter().all(|v| (-0.3..=0.3).contains(v)));
        let mean = mu.iter().sum::<f64>() / mu.len() as f64;
        assert!(mean.abs() < 0.005);
    }

    #[test]
    fn support_uses_floor() {
        let mut spec = MeanSpec {
            p: 10,
            beta: 0.29,
            delta: 1.0,
            mode: MeanMode::FixedDelta,
            theta_seed: SeedSpec::default(),
        };
        assert_eq!(spec.support(), 2);
        spec.beta = 0.3;
        assert_eq!(spec.support(), 3);
        spec.p = 100;
        spec.beta = 0.29;
        assert_eq!(spec.support(), 29);
    }

    #[test]
    fn mean_spec_validation() {
        let mut spec = desk(Setting::I, 10, 10, 5).mean;
        spec.beta = 1.5;
        assert!(build_mean_vector::<f64>(&spec).is_err());
        spec.beta = 0.5;
        spec.delta = -1.0;
        assert!(build_mean_vector::<f64>(&spec).is_err());
    }

    #[test]
    fn setting_validation() {
        let mut spec = desk(Setting::VII, 10, 10, 5);
        assert!(spec.validate().is_ok());
        spec.mean.mode = MeanMode::UniformTheta;
        assert!(spec.validate().is_err());
        let mut spec = desk(Setting::I, 1, 10, 5);
        assert!(spec.validate().is_err());
        spec.n = 10;
        spec.mean.p = 4;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn scale_reduction_flag() {
        assert!(!SettingSpec::full_scale(Setting::IV, 0.1, 0.0, SeedSpec::default(), SeedSpec::default()).is_scale_reduced());
        assert_eq!(Setting::IV.full_sizes(), (100, 400, 1000));
        assert!(desk(Setting::I, 60, 90, 60).is_scale_reduced());
    }

    #[test]
    fn signal_strength_matches_weak_signal() {
        // r = 0.217 at p = 1000, n v m = 300 gives delta of about 0.1
        assert!((signal_strength(0.217, 1000, 200, 300) - 0.1).abs() < 1e-3);
    }

    #[test]
    fn head_block_sizes() {
        assert_eq!(desk(Setting::III, 5, 5, 10).head_block(), 4);
        assert_eq!(desk(Setting::III, 5, 5, 12).head_block(), 4);
        assert_eq!(desk(Setting::I, 5, 5, 12).head_block(), 12);
        let mut v = desk(Setting::V, 5, 5, 10);
        assert_eq!(v.head_block(), 4);
        v.replace_all_innovations = true;
        assert_eq!(v.head_block(), 10);
    }

    #[test]
    fn fixed_parameters_shared_across_runs() {
        let spec = desk(Setting::III, 6, 8, 5).with_cell(0.4, 1.0);
        let a = PreparedSetting::<f64>::new(&spec).unwrap();
        let b = PreparedSetting::<f64>::new(&spec).unwrap();
        assert_eq!(a.mu_y(), b.mu_y());
        assert_eq!(a.phi_x, b.phi_x);
        assert_eq!(a.phi_y, b.phi_y);
        assert!(a.phi_x.iter().flatten().all(|v| (1.0..=2.0).contains(v)));
        assert!(a.phi_y.iter().flatten().all(|v| (1.0..=3.0).contains(v)));
        let (x1, _) = a.gen_pair(SeedSpec::new(10, 0));
        let (x2, _) = a.gen_pair(SeedSpec::new(10, 1));
        assert_ne!(x1, x2);
        assert_eq!(a.gen_pair(SeedSpec::new(10, 0)).0, x1);
    }

    #[test]
    fn y_carries_mean_shift() {
        let spec = desk(Setting::VII, 5, 4000, 5).with_cell(2.0, 0.4);
        let prep = PreparedSetting::<f64>::new(&spec).unwrap();
        let (x, y) = prep.gen_pair(SeedSpec::new(5, 5));
        let ybar = y.mean();
        assert!((ybar[0] - 2.0).abs() < 0.15 && (ybar[1] - 2.0).abs() < 0.15);
        assert!(ybar[2].abs() < 0.15);
        assert_eq!((x.n(), x.p(), y.n()), (5, 5, 4000));
    }

    #[test]
    fn gen_pair_rejects_invalid_spec() {
        let mut spec = desk(Setting::III, 6, 8, 5);
        spec.mean.beta = 2.0;
        assert!(gen_pair::<f64>(&spec, SeedSpec::default()).is_err());
    }
}
