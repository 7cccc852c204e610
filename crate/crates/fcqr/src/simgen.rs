//! Synthetic data generators and slope-function error metrics.
//!
//! Covariate curves are random combinations of a cubic generator basis
//! with AR(1)-correlated coefficients; responses integrate the curve
//! against a known slope function and add scaled noise. The generator
//! basis is independent of whatever basis an estimator later uses, so a
//! dataset is a pure function of its config (including the seed).

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::basis::{BSplineBasis, SplineCurve};
use crate::design::FunctionalSample;
use crate::error::{FcqrError, Result};
use crate::linalg::cholesky_lower;
use crate::quadrature::simpson_integral;

/// The slope functions used by the benchmark scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrueBeta {
    /// `√2 cos(2πt)`
    CosineWave,
    /// `exp{-32 (t - 1/2)²} + 2t - √2 {sin(2πt) + cos(2πt)}`
    BumpWithTrend,
    /// `2t² + t/4 + 1`
    Quadratic,
}

impl TrueBeta {
    /// Numeric scenario id (1, 2, or 3).
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(TrueBeta::CosineWave),
            2 => Ok(TrueBeta::BumpWithTrend),
            3 => Ok(TrueBeta::Quadratic),
            other => Err(FcqrError::InvalidArgument(format!(
                "unknown slope function id {other}; expected 1, 2, or 3"
            ))),
        }
    }

    pub fn id(&self) -> u32 {
        match self {
            TrueBeta::CosineWave => 1,
            TrueBeta::BumpWithTrend => 2,
            TrueBeta::Quadratic => 3,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            TrueBeta::CosineWave => 2f64.sqrt() * (2.0 * PI * t).cos(),
            TrueBeta::BumpWithTrend => {
                (-32.0 * (t - 0.5) * (t - 0.5)).exp() + 2.0 * t
                    - 2f64.sqrt() * ((2.0 * PI * t).sin() + (2.0 * PI * t).cos())
            }
            TrueBeta::Quadratic => 2.0 * t * t + 0.25 * t + 1.0,
        }
    }
}

/// Distribution of the generator-basis coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientDistribution {
    Gaussian,
    StudentT2,
    StudentT3,
}

impl CoefficientDistribution {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefficientDistribution::Gaussian => "gaussian",
            CoefficientDistribution::StudentT2 => "t2",
            CoefficientDistribution::StudentT3 => "t3",
        }
    }
}

impl std::str::FromStr for CoefficientDistribution {
    type Err = FcqrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(CoefficientDistribution::Gaussian),
            "t2" => Ok(CoefficientDistribution::StudentT2),
            "t3" => Ok(CoefficientDistribution::StudentT3),
            other => Err(FcqrError::InvalidArgument(format!(
                "unknown coefficient distribution '{other}'; expected gaussian, t2, or t3"
            ))),
        }
    }
}

/// Distribution of the additive response noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorDistribution {
    Gaussian,
    StudentT3,
}

impl ErrorDistribution {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorDistribution::Gaussian => "gaussian",
            ErrorDistribution::StudentT3 => "t3",
        }
    }
}

impl std::str::FromStr for ErrorDistribution {
    type Err = FcqrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(ErrorDistribution::Gaussian),
            "t3" => Ok(ErrorDistribution::StudentT3),
            other => Err(FcqrError::InvalidArgument(format!(
                "unknown error distribution '{other}'; expected gaussian or t3"
            ))),
        }
    }
}

/// One simulation scenario. The coefficient covariance is AR(1) with
/// correlation 1/2.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_samples: usize,
    pub grid_size: usize,
    pub coefficient_distribution: CoefficientDistribution,
    pub error_distribution: ErrorDistribution,
    pub sigma: f64,
    pub beta: TrueBeta,
    pub generator_basis_count: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            grid_size: 100,
            coefficient_distribution: CoefficientDistribution::Gaussian,
            error_distribution: ErrorDistribution::Gaussian,
            sigma: 0.5,
            beta: TrueBeta::CosineWave,
            generator_basis_count: 10,
            seed: 0,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(FcqrError::InvalidArgument(
                "need at least one sample".to_string(),
            ));
        }
        if self.grid_size < 2 {
            return Err(FcqrError::InvalidArgument(
                "grid needs at least 2 points".to_string(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(FcqrError::InvalidArgument(format!(
                "noise scale must be positive, got {}",
                self.sigma
            )));
        }
        if self.generator_basis_count < 4 {
            return Err(FcqrError::InvalidArgument(
                "generator basis needs at least 4 functions (cubic splines)".to_string(),
            ));
        }
        Ok(())
    }
}

/// AR(1) covariance with correlation 1/2: `Σ_ij = 0.5^{|i-j|}`.
pub fn ar1_covariance(dim: usize) -> Array2<f64> {
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        0.5f64.powi((i as i32 - j as i32).abs())
    })
}

fn draw_coefficients(
    distribution: CoefficientDistribution,
    chol: &Array2<f64>,
    rng: &mut ChaCha8Rng,
) -> Array1<f64> {
    let dim = chol.nrows();
    let z = Array1::from_shape_fn(dim, |_| StandardNormal.sample(rng));
    let gaussian = chol.dot(&z);
    let df = match distribution {
        CoefficientDistribution::Gaussian => return gaussian,
        CoefficientDistribution::StudentT2 => 2.0,
        CoefficientDistribution::StudentT3 => 3.0,
    };
    let chi: f64 = ChiSquared::new(df).expect("valid degrees of freedom").sample(rng);
    gaussian / (chi / df).sqrt()
}

/// Draw one coefficient vector from the AR(1) family.
pub fn sample_coefficients(
    distribution: CoefficientDistribution,
    dim: usize,
    seed: u64,
) -> Result<Array1<f64>> {
    let chol = cholesky_lower(&ar1_covariance(dim))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw_coefficients(distribution, &chol, &mut rng))
}

/// Generate a dataset from the configured scenario.
pub fn generate_dataset(config: &SimConfig) -> Result<Vec<FunctionalSample>> {
    let beta = config.beta;
    generate_dataset_with_beta(config, |t| beta.value(t))
}

/// Generate with an arbitrary slope function (test hook: a zero slope
/// yields pure-noise responses).
pub fn generate_dataset_with_beta(
    config: &SimConfig,
    beta: impl Fn(f64) -> f64,
) -> Result<Vec<FunctionalSample>> {
    config.validate()?;
    let j = config.generator_basis_count;
    let generator = BSplineBasis::new(3, j - 4);
    debug_assert_eq!(generator.basis_count(), j);

    let grid: Arc<[f64]> = (0..config.grid_size)
        .map(|g| g as f64 / (config.grid_size - 1) as f64)
        .collect::<Vec<_>>()
        .into();

    // Generator basis values on the grid and the exact response weights
    // m_j = ∫ B_j(t) β(t) dt (1001-point Simpson on the true formula).
    let mut basis_values = Array2::<f64>::zeros((config.grid_size, j));
    for (g, &t) in grid.iter().enumerate() {
        basis_values
            .row_mut(g)
            .assign(&generator.evaluate(t, 0)?);
    }
    let response_weights = Array1::from_shape_fn(j, |l| {
        simpson_integral(
            |t| generator.evaluate(t, 0).expect("t in [0,1]")[l] * beta(t),
            1001,
        )
    });

    let chol = cholesky_lower(&ar1_covariance(j))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let coeffs = draw_coefficients(config.coefficient_distribution, &chol, &mut rng);
        let values = basis_values.dot(&coeffs);
        let noise: f64 = match config.error_distribution {
            ErrorDistribution::Gaussian => StandardNormal.sample(&mut rng),
            ErrorDistribution::StudentT3 => {
                let z: f64 = StandardNormal.sample(&mut rng);
                let chi: f64 = ChiSquared::new(3.0).expect("df 3").sample(&mut rng);
                z / (chi / 3.0).sqrt()
            }
        };
        let response = coeffs.dot(&response_weights) + config.sigma * noise;
        samples.push(FunctionalSample::new(
            grid.clone(),
            values.to_vec(),
            response,
        )?);
    }
    Ok(samples)
}

fn mean_root_integrated_square_diff(
    estimates: &[SplineCurve],
    target: impl Fn(f64) -> f64,
) -> Result<f64> {
    if estimates.is_empty() {
        return Err(FcqrError::InvalidArgument(
            "at least one estimated curve required".to_string(),
        ));
    }
    let mut total = 0.0;
    for curve in estimates {
        let integral = simpson_integral(
            |t| {
                let d = curve.value(t).expect("t in [0,1]") - target(t);
                d * d
            },
            1001,
        );
        total += integral.max(0.0).sqrt();
    }
    Ok(total / estimates.len() as f64)
}

/// Mean (over replications) root integrated squared error against the
/// true slope function.
pub fn imse(estimates: &[SplineCurve], truth: TrueBeta) -> Result<f64> {
    mean_root_integrated_square_diff(estimates, |t| truth.value(t))
}

/// As [`imse`], against an arbitrary slope function (used for null-model
/// checks).
pub fn imse_against(estimates: &[SplineCurve], target: impl Fn(f64) -> f64) -> Result<f64> {
    mean_root_integrated_square_diff(estimates, target)
}

/// Empirical variant: error against the full-data fit instead of the
/// (unknown) truth.
pub fn eimse(estimates: &[SplineCurve], full_fit: &SplineCurve) -> Result<f64> {
    mean_root_integrated_square_diff(estimates, |t| full_fit.value(t).expect("t in [0,1]"))
}
