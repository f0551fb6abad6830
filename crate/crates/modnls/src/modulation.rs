//! The modulation function g driving the dispersion: smooth models, a rough
//! synthesis of prescribed fractional Sobolev regularity, Brownian sample
//! paths, and a discrete Sobolev–Slobodeckij norm estimator.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex;
use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::Serialize;

/// Default synthesis grid for rough paths; fine enough to resolve quadrature
/// nodes well below the smallest experiment step size.
pub const DEFAULT_ROUGH_MODES: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PathKind {
    Affine { slope: f64, intercept: f64 },
    Sine,
    RoughFourier { alpha: f64, n_modes: usize, seed: u64 },
    Brownian { n_steps: usize, seed: u64 },
}

#[derive(Clone, Debug)]
enum PathData<T> {
    Affine { slope: T, intercept: T },
    Sine,
    /// Real trigonometric polynomial with period `t_max`:
    /// g(t) = Σ_k a_k cos(kθ) + b_k sin(kθ), θ = 2πt/t_max.
    Trig { cos_coeffs: Vec<T>, sin_coeffs: Vec<T> },
    /// Piecewise-linear interpolant of accumulated increments.
    PiecewiseLinear { knots: Vec<T> },
}

/// The modulation g: deterministic given (kind, parameters, seed), evaluable
/// at any t in its domain.
#[derive(Clone, Debug)]
pub struct ModulationPath<T: Scalar> {
    kind: PathKind,
    data: PathData<T>,
    t_max: T,
    normalization: T,
}

impl<T: Scalar> ModulationPath<T> {
    /// g(t) = slope·t + intercept. The classical equation is slope 1,
    /// intercept 0.
    pub fn affine(slope: T, intercept: T) -> Self {
        ModulationPath {
            kind: PathKind::Affine {
                slope: slope.as_f64(),
                intercept: intercept.as_f64(),
            },
            data: PathData::Affine { slope, intercept },
            t_max: T::infinity(),
            normalization: T::one(),
        }
    }

    /// g(t) = sin(t).
    pub fn sine() -> Self {
        ModulationPath {
            kind: PathKind::Sine,
            data: PathData::Sine,
            t_max: T::infinity(),
            normalization: T::one(),
        }
    }

    /// Rough path of regularity class W^{α−,2}: seeded uniform samples in
    /// [−1,1] are transformed, the coefficient at k is divided by
    /// (1+|k|)^{α+1/2} for k = −N/2..N/2−1, the result is symmetrized back to
    /// a real trigonometric polynomial and normalized to max_t |g(t)| = 1 on
    /// the synthesis grid. The period is mapped to [0, t_max].
    pub fn rough(alpha: T, n_modes: usize, seed: u64, t_max: T) -> Result<Self> {
        let alpha_f = alpha.as_f64();
        if !(alpha_f > 0.0 && alpha_f < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must lie in (0,1), got {alpha_f}"),
            });
        }
        if n_modes < 2 || n_modes % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "n_modes",
                reason: format!("must be even and ≥ 2, got {n_modes}"),
            });
        }
        if !(t_max > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                reason: "horizon must be positive".into(),
            });
        }

        let n = n_modes;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let uniform = Uniform::new_inclusive(T::from_real(-1.0), T::one());
        let mut samples: Vec<Complex<T>> = (0..n)
            .map(|_| Complex::new(rng.sample(&uniform), T::zero()))
            .collect();

        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut samples);

        let exponent = alpha + T::from_real(0.5);
        let scale = T::from_count(n); // unnormalized forward DFT
        for (j, c) in samples.iter_mut().enumerate() {
            let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
            let damp = (T::one() + T::from_real(k.abs() as f64)).powf(exponent) * scale;
            *c = Complex::new(c.re / damp, c.im / damp);
        }

        // Hermitian symmetrization: keep only the real trig-polynomial part.
        let half = T::from_real(0.5);
        let two = T::from_real(2.0);
        let mut cos_coeffs = vec![T::zero(); n / 2 + 1];
        let mut sin_coeffs = vec![T::zero(); n / 2 + 1];
        cos_coeffs[0] = samples[0].re;
        for k in 1..n / 2 {
            let c = (samples[k] + samples[n - k].conj()) * half;
            cos_coeffs[k] = two * c.re;
            sin_coeffs[k] = -two * c.im;
        }
        // unpaired mode k = −N/2: Re(c e^{−i(N/2)θ})
        cos_coeffs[n / 2] = samples[n / 2].re;
        sin_coeffs[n / 2] = samples[n / 2].im;

        let mut path = ModulationPath {
            kind: PathKind::RoughFourier {
                alpha: alpha_f,
                n_modes,
                seed,
            },
            data: PathData::Trig {
                cos_coeffs,
                sin_coeffs,
            },
            t_max,
            normalization: T::one(),
        };

        let mut sup = T::zero();
        for j in 0..n {
            let t = t_max * T::from_count(j) / T::from_count(n);
            sup = sup.max(path.evaluate(t)?.abs());
        }
        if let PathData::Trig {
            cos_coeffs,
            sin_coeffs,
        } = &mut path.data
        {
            for c in cos_coeffs.iter_mut() {
                *c = *c / sup;
            }
            for s in sin_coeffs.iter_mut() {
                *s = *s / sup;
            }
        }
        path.normalization = sup;
        Ok(path)
    }

    /// Standard Brownian path on [0, t_max]: increments √(t_max/n)·𝒩(0,1)
    /// accumulated from g(0) = 0, linearly interpolated between knots.
    pub fn brownian(n_steps: usize, t_max: T, seed: u64) -> Result<Self>
    where
        StandardNormal: Distribution<T>,
    {
        if n_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "n_steps",
                reason: "need at least one increment".into(),
            });
        }
        if !(t_max > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                reason: "horizon must be positive".into(),
            });
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let scale = (t_max / T::from_count(n_steps)).sqrt();
        let mut knots = Vec::with_capacity(n_steps + 1);
        let mut acc = T::zero();
        knots.push(acc);
        for _ in 0..n_steps {
            let z: T = StandardNormal.sample(&mut rng);
            acc += scale * z;
            knots.push(acc);
        }
        Ok(ModulationPath {
            kind: PathKind::Brownian { n_steps, seed },
            data: PathData::PiecewiseLinear { knots },
            t_max,
            normalization: T::one(),
        })
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    /// True for the analytically smooth models (affine, sine).
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, PathKind::Affine { .. } | PathKind::Sine)
    }

    /// Upper end of the domain [0, T_g]; infinite for smooth models.
    pub fn t_max(&self) -> T {
        self.t_max
    }

    /// The sup-norm the rough synthesis was divided by; 1 for other kinds.
    pub fn normalization(&self) -> T {
        self.normalization
    }

    fn check_domain(&self, t: T) -> Result<()> {
        let eps = T::from_real(1e-9) * self.t_max.min(T::from_real(1e9)).max(T::one());
        if t < -eps || t > self.t_max + eps {
            return Err(Error::OutOfDomain {
                t: t.as_f64(),
                t_max: self.t_max.as_f64(),
            });
        }
        Ok(())
    }

    /// g(t); exact formula for smooth kinds, exact trig-polynomial sum for
    /// rough ones, linear interpolation for Brownian paths.
    pub fn evaluate(&self, t: T) -> Result<T> {
        self.check_domain(t)?;
        Ok(match &self.data {
            PathData::Affine { slope, intercept } => *slope * t + *intercept,
            PathData::Sine => t.sin(),
            PathData::Trig {
                cos_coeffs,
                sin_coeffs,
            } => {
                let theta = T::TAU() * t / self.t_max;
                let (sin1, cos1) = theta.sin_cos();
                let mut cos_k = T::one();
                let mut sin_k = T::zero();
                let mut sum = cos_coeffs[0];
                for k in 1..cos_coeffs.len() {
                    let c = cos_k * cos1 - sin_k * sin1;
                    let s = sin_k * cos1 + cos_k * sin1;
                    cos_k = c;
                    sin_k = s;
                    sum += cos_coeffs[k] * cos_k + sin_coeffs[k] * sin_k;
                }
                sum
            }
            PathData::PiecewiseLinear { knots } => {
                let n = knots.len() - 1;
                let s = (t / self.t_max * T::from_count(n))
                    .max(T::zero())
                    .min(T::from_count(n));
                let i = (s.floor().as_f64() as usize).min(n - 1);
                let frac = s - T::from_count(i);
                knots[i] + frac * (knots[i + 1] - knots[i])
            }
        })
    }
}

/// Discretized Sobolev–Slobodeckij W^{α,2} norm on (0, T_g): midpoint rule on
/// a resolution×resolution grid for the Gagliardo double integral, excluding
/// the diagonal band |r−s| below one grid spacing, plus the midpoint L² part.
pub fn estimate_w_norm<T: Scalar>(
    g: &ModulationPath<T>,
    alpha: T,
    resolution: usize,
) -> Result<T> {
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            reason: format!("need at least 2 cells, got {resolution}"),
        });
    }
    let t_max = if g.t_max.is_finite() { g.t_max } else { T::one() };
    let h = t_max / T::from_count(resolution);
    let half = T::from_real(0.5);
    let mut values = Vec::with_capacity(resolution);
    for i in 0..resolution {
        let t = h * (T::from_count(i) + half);
        values.push(g.evaluate(t)?);
    }

    let mut l2 = T::zero();
    for v in &values {
        l2 += *v * *v * h;
    }

    let exponent = T::from_real(2.0) * alpha + T::one();
    let mut double = T::zero();
    for i in 0..resolution {
        for j in (i + 1)..resolution {
            let diff = values[i] - values[j];
            let dist = h * T::from_count(j - i);
            double += diff * diff / dist.powf(exponent);
        }
    }
    // off-diagonal pairs counted once above; the integrand is symmetric
    double = double * T::from_real(2.0) * h * h;

    Ok((l2 + double).sqrt())
}
