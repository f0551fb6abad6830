//! Periodic grid, discrete Fourier transforms, Sobolev norms and the cubic
//! nonlinearity for fields on the torus [0, 2π]^d.
//!
//! Fourier coefficients are "analysis" coefficients of the trigonometric
//! interpolant: the constant function 1 has ĉ_0 = 1. The wavenumber set per
//! axis is {−M/2, …, M/2 − 1} for M = 2K grid points.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex;
use num_traits::Zero;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Periodic grid on [0, 2π]^d with M = 2K points per axis.
pub struct Grid<T: Scalar> {
    d: usize,
    m: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> Clone for Grid<T> {
    fn clone(&self) -> Self {
        Grid {
            d: self.d,
            m: self.m,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
        }
    }
}

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("d", &self.d).field("m", &self.m).finish()
    }
}

impl<T: Scalar> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.m == other.m
    }
}

impl<T: Scalar> Grid<T> {
    /// Grid with largest Fourier mode K, i.e. M = 2K points per axis and
    /// wavenumbers −K..K−1.
    pub fn new(d: usize, largest_mode: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter {
                name: "d",
                reason: "dimension must be positive".into(),
            });
        }
        if largest_mode == 0 {
            return Err(Error::InvalidParameter {
                name: "largest_mode",
                reason: "largest mode K must be positive".into(),
            });
        }
        let m = 2 * largest_mode;
        let mut planner = FftPlanner::new();
        Ok(Grid {
            d,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Grid points per axis, M = 2K.
    pub fn modes_per_axis(&self) -> usize {
        self.m
    }

    pub fn largest_mode(&self) -> usize {
        self.m / 2
    }

    /// Total number of grid points, M^d.
    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mesh size 2π/M (per grid point).
    pub fn spacing(&self) -> T {
        T::TAU() / T::from_count(self.m)
    }

    /// Mesh size measured per mode count, 2π/K. The half-grid convention some
    /// experiment write-ups report alongside 2π/M.
    pub fn spacing_per_mode(&self) -> T {
        T::TAU() / T::from_count(self.largest_mode())
    }

    /// Signed wavenumber for a per-axis storage index in FFT layout.
    pub fn wavenumber(&self, index: usize) -> i64 {
        debug_assert!(index < self.m);
        if index < self.m / 2 {
            index as i64
        } else {
            index as i64 - self.m as i64
        }
    }

    /// Physical node x_j = 2πj/M along one axis.
    pub fn node(&self, j: usize) -> T {
        T::TAU() * T::from_count(j) / T::from_count(self.m)
    }

    /// |k|² for a flat storage index (row-major over axes).
    pub fn k_squared(&self, mut flat: usize) -> i64 {
        let mut sum = 0i64;
        for _ in 0..self.d {
            let k = self.wavenumber(flat % self.m);
            sum += k * k;
            flat /= self.m;
        }
        sum
    }

    /// Physical coordinates of a flat storage index, innermost axis first.
    pub fn coordinates(&self, mut flat: usize) -> Vec<T> {
        let mut xs = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            xs.push(self.node(flat % self.m));
            flat /= self.m;
        }
        xs
    }

    fn fft_all_axes(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        let m = self.m;
        let mut lane = vec![Complex::zero(); m];
        for axis in 0..self.d {
            let stride = m.pow(axis as u32);
            let outer = self.len() / (m * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * m * stride + inner;
                    if stride == 1 {
                        fft.process(&mut data[base..base + m]);
                    } else {
                        for (j, slot) in lane.iter_mut().enumerate() {
                            *slot = data[base + j * stride];
                        }
                        fft.process(&mut lane);
                        for (j, slot) in lane.iter().enumerate() {
                            data[base + j * stride] = *slot;
                        }
                    }
                }
            }
        }
    }
}

/// Complex-valued state on the grid; the Fourier representation is canonical.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T: Scalar> {
    grid: Grid<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> SpectralField<T> {
    pub fn zero(grid: &Grid<T>) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex::zero(); grid.len()],
        }
    }

    /// Field from Fourier coefficients in FFT storage order.
    pub fn from_coefficients(grid: &Grid<T>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Coefficient at a signed wavenumber (d = 1 convenience).
    pub fn coefficient_at(&self, k: i64) -> Complex<T> {
        debug_assert_eq!(self.grid.d, 1);
        let m = self.grid.m as i64;
        let idx = if k >= 0 { k } else { k + m };
        self.coeffs[idx as usize]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest |ĉ_{−k} − conj(ĉ_k)| over paired modes; zero for real-valued
    /// fields up to roundoff.
    pub fn hermitian_asymmetry(&self) -> T {
        debug_assert_eq!(self.grid.d, 1);
        let m = self.grid.m;
        let mut worst = T::zero();
        for k in 1..m / 2 {
            let diff = self.coeffs[m - k] - self.coeffs[k].conj();
            worst = worst.max(diff.norm());
        }
        worst.max(self.coeffs[0].im.abs())
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Forward transform: physical values at the nodes to analysis coefficients
/// (constant 1 maps to ĉ_0 = 1).
pub fn transform_forward<T: Scalar>(values: &[Complex<T>], grid: &Grid<T>) -> Result<SpectralField<T>> {
    if values.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let mut coeffs = values.to_vec();
    grid.fft_all_axes(&mut coeffs, &grid.forward);
    let scale = T::one() / T::from_count(grid.len());
    for c in &mut coeffs {
        *c = Complex::new(c.re * scale, c.im * scale);
    }
    Ok(SpectralField {
        grid: grid.clone(),
        coeffs,
    })
}

/// Inverse transform: values(x_j) = Σ_k ĉ_k e^{i k·x_j}.
pub fn transform_inverse<T: Scalar>(field: &SpectralField<T>) -> Vec<Complex<T>> {
    let mut values = field.coeffs.clone();
    field.grid.fft_all_axes(&mut values, &field.grid.inverse);
    values
}

/// Discrete H^σ norm (Σ_k (1+|k|²)^σ |ĉ_k|²)^{1/2} over the grid's modes.
pub fn h_sigma_norm<T: Scalar>(field: &SpectralField<T>, sigma: T) -> T {
    let mut sum = T::zero();
    for (flat, c) in field.coeffs.iter().enumerate() {
        let k2 = T::from_real(field.grid.k_squared(flat) as f64);
        sum += (T::one() + k2).powf(sigma) * c.norm_sqr();
    }
    sum.sqrt()
}

/// Zero every mode with |k| > M/3 along any axis (2/3 rule).
pub fn dealias_filter<T: Scalar>(field: &SpectralField<T>) -> SpectralField<T> {
    let grid = &field.grid;
    let m = grid.modes_per_axis() as i64;
    let mut out = field.clone();
    for (flat, c) in out.coeffs.iter_mut().enumerate() {
        let mut rest = flat;
        for _ in 0..grid.d {
            let k = grid.wavenumber(rest % grid.m);
            if 3 * k.abs() > m {
                *c = Complex::zero();
                break;
            }
            rest /= grid.m;
        }
    }
    out
}

/// Pointwise |u|²u in physical space, transformed back to coefficients. With
/// `dealias` set, the top third of modes is zeroed before and after the
/// product.
pub fn cubic_nonlinearity<T: Scalar>(field: &SpectralField<T>, dealias: bool) -> SpectralField<T> {
    let input = if dealias {
        dealias_filter(field)
    } else {
        field.clone()
    };
    let mut values = transform_inverse(&input);
    for v in &mut values {
        let abs2 = v.norm_sqr();
        *v = Complex::new(v.re * abs2, v.im * abs2);
    }
    let product = transform_forward(&values, &field.grid).expect("matching grid");
    if dealias {
        dealias_filter(&product)
    } else {
        product
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_field(grid: &Grid<f64>, seed: u64) -> SpectralField<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let coeffs = (0..grid.len())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coefficients(grid, coeffs).unwrap()
    }

    #[test]
    fn grid_construction_and_metadata() {
        let grid: Grid<f64> = Grid::new(1, 128).unwrap();
        assert_eq!(grid.len(), 256);
        assert!((grid.spacing() - 2.0 * std::f64::consts::PI / 256.0).abs() < 1e-15);
        // half-grid convention reported alongside: 2π/128 ≈ 0.049
        assert!((grid.spacing_per_mode() - 0.049_087_385_212_340_52).abs() < 1e-12);
        assert!(Grid::<f64>::new(0, 4).is_err());
        assert!(Grid::<f64>::new(1, 0).is_err());
    }

    #[test]
    fn smallest_grid_wavenumbers() {
        let grid: Grid<f64> = Grid::new(1, 1).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid.wavenumber(0), 0);
        assert_eq!(grid.wavenumber(1), -1);
    }

    #[test]
    fn node_positions() {
        let grid: Grid<f64> = Grid::new(1, 4).unwrap();
        assert!((grid.node(3) - 3.0 * std::f64::consts::PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn constant_normalization() {
        let grid: Grid<f64> = Grid::new(1, 8).unwrap();
        let ones = vec![Complex::new(1.0, 0.0); grid.len()];
        let field = transform_forward(&ones, &grid).unwrap();
        assert!((field.coefficient_at(0) - Complex::new(1.0, 0.0)).norm() < 1e-14);
        for k in 1..8 {
            assert!(field.coefficient_at(k).norm() < 1e-14);
        }
        let back = transform_inverse(&field);
        for v in back {
            assert!((v - Complex::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode() {
        let grid: Grid<f64> = Grid::new(1, 4).unwrap();
        let values: Vec<Complex<f64>> = (0..grid.len())
            .map(|j| Complex::from_polar(1.0, grid.node(j)))
            .collect();
        let field = transform_forward(&values, &grid).unwrap();
        assert!((field.coefficient_at(1) - Complex::new(1.0, 0.0)).norm() < 1e-14);
        assert!(field.coefficient_at(0).norm() < 1e-14);
        assert!(field.coefficient_at(2).norm() < 1e-14);
    }

    #[test]
    fn round_trip_identity() {
        let grid: Grid<f64> = Grid::new(1, 128).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        let values: Vec<Complex<f64>> = (0..grid.len())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let back = transform_inverse(&transform_forward(&values, &grid).unwrap());
        let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let err: f64 = values
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12 * norm);
    }

    #[test]
    fn round_trip_identity_2d() {
        let grid: Grid<f64> = Grid::new(2, 8).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        let values: Vec<Complex<f64>> = (0..grid.len())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let back = transform_inverse(&transform_forward(&values, &grid).unwrap());
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_rejects_size_mismatch() {
        let grid: Grid<f64> = Grid::new(1, 4).unwrap();
        let values = vec![Complex::new(0.0, 0.0); 5];
        assert!(matches!(
            transform_forward(&values, &grid),
            Err(Error::SizeMismatch { expected: 8, got: 5 })
        ));
    }

    #[test]
    fn h_sigma_basics() {
        let grid: Grid<f64> = Grid::new(1, 8).unwrap();
        let mut constant = SpectralField::zero(&grid);
        constant.coefficients_mut()[0] = Complex::new(1.0, 0.0);
        assert!((h_sigma_norm(&constant, 0.0) - 1.0).abs() < 1e-15);
        assert!((h_sigma_norm(&constant, 2.5) - 1.0).abs() < 1e-15);

        let mut mode_one = SpectralField::zero(&grid);
        mode_one.coefficients_mut()[1] = Complex::new(1.0, 0.0);
        assert!((h_sigma_norm(&mode_one, 1.0) - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn h_sigma_matches_brute_force() {
        let grid: Grid<f64> = Grid::new(1, 32).unwrap();
        let field = random_field(&grid, 11);
        for sigma in [0.0, 0.7, 1.0, 2.0] {
            // brute-force oracle: direct sum over signed wavenumbers
            let mut sum = 0.0f64;
            for k in -32i64..32 {
                let c = field.coefficient_at(k);
                sum += (1.0 + (k * k) as f64).powf(sigma) * c.norm_sqr();
            }
            let expected = sum.sqrt();
            assert!((h_sigma_norm(&field, sigma) - expected).abs() < 1e-13 * expected.max(1.0));
        }
    }

    #[test]
    fn h_sigma_monotone_in_sigma() {
        let grid: Grid<f64> = Grid::new(1, 16).unwrap();
        let field = random_field(&grid, 3);
        let sigmas = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0];
        for w in sigmas.windows(2) {
            assert!(h_sigma_norm(&field, w[0]) <= h_sigma_norm(&field, w[1]) + 1e-14);
        }
    }

    #[test]
    fn parseval() {
        let grid: Grid<f64> = Grid::new(1, 64).unwrap();
        let mut rng = StdRng::seed_from_u64(23);
        let values: Vec<Complex<f64>> = (0..grid.len())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let field = transform_forward(&values, &grid).unwrap();
        let l2_phys: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let expected = l2_phys / (grid.len() as f64).sqrt();
        assert!((h_sigma_norm(&field, 0.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn cubic_nonlinearity_constants() {
        let grid: Grid<f64> = Grid::new(1, 8).unwrap();
        let zero = SpectralField::zero(&grid);
        assert!(h_sigma_norm(&cubic_nonlinearity(&zero, false), 0.0) < 1e-15);

        let c = Complex::new(0.3, -0.4);
        let mut constant = SpectralField::zero(&grid);
        constant.coefficients_mut()[0] = c;
        let cubed = cubic_nonlinearity(&constant, false);
        let expected = c * c.norm_sqr();
        assert!((cubed.coefficient_at(0) - expected).norm() < 1e-14);
    }

    #[test]
    fn cubic_nonlinearity_single_mode() {
        // |e^{ix}|² e^{ix} = e^{ix}
        let grid: Grid<f64> = Grid::new(1, 8).unwrap();
        let mut field = SpectralField::zero(&grid);
        field.coefficients_mut()[1] = Complex::new(1.0, 0.0);
        let cubed = cubic_nonlinearity(&field, false);
        assert!((cubed.coefficient_at(1) - Complex::new(1.0, 0.0)).norm() < 1e-13);
        assert!(h_sigma_norm(&cubed.sub(&field), 0.0) < 1e-13);
    }

    #[test]
    fn cubic_preserves_hermitian_symmetry() {
        let grid: Grid<f64> = Grid::new(1, 32).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let values: Vec<Complex<f64>> = (0..grid.len())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let field = transform_forward(&values, &grid).unwrap();
        assert!(field.hermitian_asymmetry() < 1e-14);
        let cubed = cubic_nonlinearity(&field, false);
        assert!(cubed.hermitian_asymmetry() < 1e-13);
    }

    #[test]
    fn dealias_zeroes_top_third() {
        let grid: Grid<f64> = Grid::new(1, 6).unwrap(); // M = 12, keep |k| ≤ 4
        let mut field = SpectralField::zero(&grid);
        for k in -6i64..6 {
            let m = grid.modes_per_axis() as i64;
            let idx = if k >= 0 { k } else { k + m } as usize;
            field.coefficients_mut()[idx] = Complex::new(1.0, 0.0);
        }
        let filtered = dealias_filter(&field);
        for k in -6i64..6 {
            let c = filtered.coefficient_at(k);
            if 3 * k.abs() > 12 {
                assert_eq!(c, Complex::new(0.0, 0.0));
            } else {
                assert_eq!(c, Complex::new(1.0, 0.0));
            }
        }
    }
}
