//! Free-flow Fourier multipliers S(t) = e^{i g(t)∂²} and
//! U(t,r) = e^{i[g(t)−g(r)]∂²}, plus the twisted-variable transforms
//! v = S(t)^{−1} u. Mode k is multiplied by e^{−iθ|k|²}; every multiplier
//! entry has unit modulus, so these are H^σ isometries.

use crate::error::Result;
use crate::modulation::ModulationPath;
use crate::scalar::Scalar;
use crate::spectral::SpectralField;
use num_complex::Complex;

/// Multiply mode k by e^{−iθ|k|²} (the flow e^{iθ∂²}).
pub fn apply_free_propagator<T: Scalar>(field: &SpectralField<T>, theta: T) -> SpectralField<T> {
    let grid = field.grid().clone();
    let mut out = field.clone();
    for (flat, c) in out.coefficients_mut().iter_mut().enumerate() {
        let k2 = T::from_real(grid.k_squared(flat) as f64);
        let phase = Complex::from_polar(T::one(), -theta * k2);
        *c = *c * phase;
    }
    out
}

/// U(t,r) f = e^{i[g(t)−g(r)]∂²} f.
pub fn apply_evolution<T: Scalar>(
    field: &SpectralField<T>,
    g: &ModulationPath<T>,
    t: T,
    r: T,
) -> Result<SpectralField<T>> {
    let theta = g.evaluate(t)? - g.evaluate(r)?;
    Ok(apply_free_propagator(field, theta))
}

/// Twisted variable v = S(t)^{−1} u.
pub fn to_twisted<T: Scalar>(
    field: &SpectralField<T>,
    g: &ModulationPath<T>,
    t: T,
) -> Result<SpectralField<T>> {
    let theta = -g.evaluate(t)?;
    Ok(apply_free_propagator(field, theta))
}

/// u = S(t) v, inverse of [`to_twisted`].
pub fn from_twisted<T: Scalar>(
    field: &SpectralField<T>,
    g: &ModulationPath<T>,
    t: T,
) -> Result<SpectralField<T>> {
    let theta = g.evaluate(t)?;
    Ok(apply_free_propagator(field, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{h_sigma_norm, Grid, SpectralField};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_field(grid: &Grid<f64>, seed: u64) -> SpectralField<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let coeffs = (0..grid.len())
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coefficients(grid, coeffs).unwrap()
    }

    fn distance(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
        h_sigma_norm(&a.sub(b), 0.0)
    }

    #[test]
    fn zero_phase_is_identity() {
        let grid = Grid::new(1, 32).unwrap();
        let f = random_field(&grid, 1);
        assert_eq!(apply_free_propagator(&f, 0.0), f);
    }

    #[test]
    fn single_mode_phase() {
        let grid = Grid::new(1, 8).unwrap();
        let mut f = SpectralField::zero(&grid);
        f.coefficients_mut()[1] = Complex::new(1.0, 0.0);
        let g = apply_free_propagator(&f, std::f64::consts::PI);
        // e^{−iπ} = −1 at k = 1
        assert!((g.coefficient_at(1) - Complex::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn isometry_in_h_sigma() {
        let grid = Grid::new(1, 64).unwrap();
        let f = random_field(&grid, 2);
        for theta in [-3.7, -0.2, 0.9, 14.1] {
            let moved = apply_free_propagator(&f, theta);
            for sigma in [0.0, 1.0, 2.0] {
                let before = h_sigma_norm(&f, sigma);
                let after = h_sigma_norm(&moved, sigma);
                assert!((before - after).abs() <= 1e-12 * before);
            }
        }
    }

    #[test]
    fn unit_modulus_entries() {
        let grid: Grid<f64> = Grid::new(1, 16).unwrap();
        let mut f = SpectralField::zero(&grid);
        for c in f.coefficients_mut() {
            *c = Complex::new(1.0, 0.0);
        }
        let moved = apply_free_propagator(&f, 0.618);
        for c in moved.coefficients() {
            assert!((c.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn group_law() {
        let grid = Grid::new(1, 32).unwrap();
        let f = random_field(&grid, 3);
        let lhs = apply_free_propagator(&apply_free_propagator(&f, 0.3), 1.1);
        let rhs = apply_free_propagator(&f, 1.4);
        assert!(distance(&lhs, &rhs) < 1e-12 * h_sigma_norm(&f, 0.0));
    }

    #[test]
    fn evolution_flow_property() {
        let grid = Grid::new(1, 32).unwrap();
        let f = random_field(&grid, 4);
        let g: ModulationPath<f64> = ModulationPath::rough(0.5, 128, 11, 1.0).unwrap();
        let (s, r, t) = (0.1, 0.4, 0.9);
        let via_r = apply_evolution(&apply_evolution(&f, &g, r, s).unwrap(), &g, t, r).unwrap();
        let direct = apply_evolution(&f, &g, t, s).unwrap();
        assert!(distance(&via_r, &direct) < 1e-12 * h_sigma_norm(&f, 0.0));

        let identity = apply_evolution(&f, &g, 0.5, 0.5).unwrap();
        assert_eq!(identity, f);
    }

    #[test]
    fn classical_period_is_identity() {
        // g(t) = t and t − r = 2π: e^{−i2π|k|²} = 1 for integer k
        let grid = Grid::new(1, 16).unwrap();
        let f = random_field(&grid, 5);
        let g: ModulationPath<f64> = ModulationPath::affine(1.0, 0.0);
        let moved = apply_evolution(&f, &g, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        assert!(distance(&moved, &f) < 1e-11 * h_sigma_norm(&f, 0.0));
    }

    #[test]
    fn twisted_round_trip_and_norm() {
        let grid = Grid::new(1, 32).unwrap();
        let f = random_field(&grid, 6);
        let g: ModulationPath<f64> = ModulationPath::sine();
        let v = to_twisted(&f, &g, 0.77).unwrap();
        let back = from_twisted(&v, &g, 0.77).unwrap();
        assert!(distance(&back, &f) < 1e-12 * h_sigma_norm(&f, 0.0));
        for sigma in [0.0, 1.0] {
            assert!((h_sigma_norm(&v, sigma) - h_sigma_norm(&f, sigma)).abs() < 1e-12);
        }

        // g(0) = 0 makes the twist the identity
        assert_eq!(to_twisted(&f, &g, 0.0).unwrap(), f);
    }
}
