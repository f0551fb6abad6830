//! Single-step maps for the three schemes and the trajectory driver, plus the
//! counter-addressed random sequence consumed by the randomized scheme.

use crate::error::{Error, Result};
use crate::modulation::ModulationPath;
use crate::propagators::{apply_evolution, apply_free_propagator};
use crate::scalar::Scalar;
use crate::spectral::{cubic_nonlinearity, dealias_filter, h_sigma_norm, transform_forward, transform_inverse, SpectralField};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix a sequence index into a base seed; used for independent, addressable
/// per-sequence streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D))
}

/// Reproducible stream of i.i.d. uniforms ξ_0, ξ_1, … in [0,1). Draw n is a
/// pure function of (seed, n), so consumers may address draws in any order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSequence {
    seed: u64,
}

impl RandomSequence {
    pub fn new(seed: u64) -> Self {
        RandomSequence { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn draw<T: Scalar>(&self, n: u64) -> T {
        let bits = splitmix64(self.seed ^ splitmix64(n.wrapping_add(1)));
        T::from_real((bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    RandomizedExponential,
    ClassicalExponential,
    Strang,
}

impl Scheme {
    pub fn is_randomized(&self) -> bool {
        matches!(self, Scheme::RandomizedExponential)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::RandomizedExponential => "randomized_exponential",
            Scheme::ClassicalExponential => "classical_exponential",
            Scheme::Strang => "strang",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub dealias: bool,
}

impl SchemeSpec {
    pub fn new(scheme: Scheme) -> Self {
        SchemeSpec {
            scheme,
            dealias: false,
        }
    }

    pub fn with_dealias(scheme: Scheme, dealias: bool) -> Self {
        SchemeSpec { scheme, dealias }
    }
}

/// One step of the randomized exponential integrator:
/// U(t+τ,t)u − iτ·U(t+τ,t+τξ)[ |U(t+τξ,t)u|² U(t+τξ,t)u ].
pub fn step_randomized<T: Scalar>(
    u: &SpectralField<T>,
    g: &ModulationPath<T>,
    t_n: T,
    tau: T,
    xi_n: T,
    dealias: bool,
) -> Result<SpectralField<T>> {
    let t_next = t_n + tau;
    let t_mid = t_n + tau * xi_n;
    let moved = apply_evolution(u, g, t_mid, t_n)?;
    let nonlinear = cubic_nonlinearity(&moved, dealias);
    let transported = apply_evolution(&nonlinear, g, t_next, t_mid)?;
    let free = apply_evolution(u, g, t_next, t_n)?;
    Ok(free.sub(&transported.scale(Complex::new(T::zero(), tau))))
}

/// One step of the classical exponential integrator:
/// U(t+τ,t)u − iτ·U(t+τ,t)(|u|²u).
pub fn step_classical_exponential<T: Scalar>(
    u: &SpectralField<T>,
    g: &ModulationPath<T>,
    t_n: T,
    tau: T,
    dealias: bool,
) -> Result<SpectralField<T>> {
    let t_next = t_n + tau;
    let nonlinear = cubic_nonlinearity(u, dealias);
    let transported = apply_evolution(&nonlinear, g, t_next, t_n)?;
    let free = apply_evolution(u, g, t_next, t_n)?;
    Ok(free.sub(&transported.scale(Complex::new(T::zero(), tau))))
}

/// Pointwise nonlinear phase flow e^{−i(τ/2)|ψ|²}ψ of the Strang step. With
/// `dealias` set the intensity |ψ|² is spectrally filtered before entering the
/// exponent; the phase factor stays unimodular either way, so the discrete L²
/// norm is conserved exactly.
fn strang_phase_substep<T: Scalar>(
    field: &SpectralField<T>,
    half_tau: T,
    dealias: bool,
) -> SpectralField<T> {
    let values = transform_inverse(field);
    let intensity: Vec<T> = if dealias {
        let raw: Vec<Complex<T>> = values
            .iter()
            .map(|v| Complex::new(v.norm_sqr(), T::zero()))
            .collect();
        let filtered = dealias_filter(&transform_forward(&raw, field.grid()).expect("grid"));
        transform_inverse(&filtered).iter().map(|c| c.re).collect()
    } else {
        values.iter().map(|v| v.norm_sqr()).collect()
    };
    let rotated: Vec<Complex<T>> = values
        .iter()
        .zip(&intensity)
        .map(|(v, w)| v * Complex::from_polar(T::one(), -half_tau * *w))
        .collect();
    transform_forward(&rotated, field.grid()).expect("grid")
}

/// One Strang splitting step: half nonlinear phase, full linear flow with
/// phase increment g(t_{n+1})−g(t_n), half nonlinear phase.
pub fn step_strang<T: Scalar>(
    u: &SpectralField<T>,
    g: &ModulationPath<T>,
    t_n: T,
    tau: T,
    dealias: bool,
) -> Result<SpectralField<T>> {
    let half_tau = tau / T::from_real(2.0);
    let minus = strang_phase_substep(u, half_tau, dealias);
    let theta = g.evaluate(t_n + tau)? - g.evaluate(t_n)?;
    let plus = apply_free_propagator(&minus, theta);
    Ok(strang_phase_substep(&plus, half_tau, dealias))
}

/// One step of the randomized scheme in the twisted variable v = S(t)^{−1}u:
/// v − iτ·S(t+τξ)^{−1}[ |S(t+τξ)v|² S(t+τξ)v ].
pub fn step_randomized_twisted<T: Scalar>(
    v: &SpectralField<T>,
    g: &ModulationPath<T>,
    t_n: T,
    tau: T,
    xi_n: T,
    dealias: bool,
) -> Result<SpectralField<T>> {
    let t_mid = t_n + tau * xi_n;
    let phase = g.evaluate(t_mid)?;
    let moved = apply_free_propagator(v, phase);
    let nonlinear = cubic_nonlinearity(&moved, dealias);
    let back = apply_free_propagator(&nonlinear, -phase);
    Ok(v.sub(&back.scale(Complex::new(T::zero(), tau))))
}

/// What a trajectory run records beyond the final state.
#[derive(Clone, Copy, Debug, Default)]
pub struct RecordOptions {
    pub store_states: bool,
    pub store_norms: bool,
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult<T: Scalar> {
    pub final_state: SpectralField<T>,
    /// t_0..t_N.
    pub times: Vec<T>,
    /// Per-step states including the initial one, when requested.
    pub states: Option<Vec<SpectralField<T>>>,
    /// Per-step (H⁰, H¹) norms including the initial state, when requested.
    pub norms: Option<Vec<(T, T)>>,
    /// ξ draws consumed by the randomized scheme, in step order.
    pub consumed_xi: Vec<T>,
}

/// Iterate the selected step map from t = 0 to t = T in N equidistant steps.
/// Step n of the randomized scheme always consumes draw n of the sequence.
pub fn run_trajectory<T: Scalar>(
    u0: &SpectralField<T>,
    g: &ModulationPath<T>,
    spec: SchemeSpec,
    t_end: T,
    n_steps: usize,
    xi: Option<&RandomSequence>,
    record: RecordOptions,
) -> Result<TrajectoryResult<T>> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            reason: "need at least one step".into(),
        });
    }
    if spec.scheme.is_randomized() && xi.is_none() {
        return Err(Error::InvalidParameter {
            name: "xi",
            reason: "randomized scheme requires a random sequence".into(),
        });
    }
    let tau = t_end / T::from_count(n_steps);
    let mut state = u0.clone();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = record.store_states.then(|| vec![u0.clone()]);
    let mut norms = record
        .store_norms
        .then(|| vec![(h_sigma_norm(u0, T::zero()), h_sigma_norm(u0, T::one()))]);
    let mut consumed_xi = Vec::new();
    times.push(T::zero());

    for n in 0..n_steps {
        let t_n = tau * T::from_count(n);
        state = match spec.scheme {
            Scheme::RandomizedExponential => {
                let xi_n = xi.expect("checked above").draw::<T>(n as u64);
                consumed_xi.push(xi_n);
                step_randomized(&state, g, t_n, tau, xi_n, spec.dealias)?
            }
            Scheme::ClassicalExponential => {
                step_classical_exponential(&state, g, t_n, tau, spec.dealias)?
            }
            Scheme::Strang => step_strang(&state, g, t_n, tau, spec.dealias)?,
        };
        if !state.is_finite() {
            return Err(Error::BlowUp {
                step: n,
                t: (t_n + tau).as_f64(),
            });
        }
        times.push(tau * T::from_count(n + 1));
        if let Some(states) = states.as_mut() {
            states.push(state.clone());
        }
        if let Some(norms) = norms.as_mut() {
            norms.push((h_sigma_norm(&state, T::zero()), h_sigma_norm(&state, T::one())));
        }
    }

    Ok(TrajectoryResult {
        final_state: state,
        times,
        states,
        norms,
        consumed_xi,
    })
}

/// The benchmark initial datum u₀(x) = cos(x)/(2 − sin(x)) sampled on the
/// grid (first axis coordinate for d > 1).
pub fn default_initial_field<T: Scalar>(grid: &crate::spectral::Grid<T>) -> SpectralField<T> {
    let two = T::from_real(2.0);
    let values: Vec<Complex<T>> = (0..grid.len())
        .map(|flat| {
            let x = grid.coordinates(flat)[0];
            Complex::new(x.cos() / (two - x.sin()), T::zero())
        })
        .collect();
    transform_forward(&values, grid).expect("matching grid")
}
