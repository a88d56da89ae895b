use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::VectorField;
use crate::error::{input, Result};
use crate::waveoptics::Grid;

/// Inverse-CDF sampler for a density that is constant over each cell.
#[derive(Debug, Clone)]
pub(crate) struct CellSampler {
    grid: Grid,
    cdf: Vec<f64>,
}

impl CellSampler {
    pub fn new(wave: &VectorField) -> Result<Self> {
        let rho = wave.density();
        let mut cdf = Vec::with_capacity(rho.len());
        let mut acc = 0.0;
        for r in &rho {
            acc += r;
            cdf.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return input("cannot sample positions from a wave with zero intensity");
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { grid: wave.grid(), cdf })
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|c| *c <= u).min(self.cdf.len() - 1);
        let below = if i == 0 { 0.0 } else { self.cdf[i - 1] };
        let width = self.cdf[i] - below;
        let frac = if width > 0.0 { ((u - below) / width).clamp(0.0, 1.0) } else { 0.5 };
        self.grid.x(i) + (frac - 0.5) * self.grid.dx
    }
}

/// `n` independent draws from `(|ψ_H|² + |ψ_V|²)·dx`.
pub fn sample_initial_positions(wave: &VectorField, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return input("at least one sample is required");
    }
    let sampler = CellSampler::new(wave)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::JonesVector;
    use crate::waveoptics::{hermite_gauss, ScalarField};
    use num_complex::Complex64;

    fn wave(f: ScalarField) -> VectorField {
        VectorField::polarized(&f, JonesVector::horizontal())
    }

    #[test]
    fn uniform_density_passes_ks() {
        let g = Grid::centered(0.0, 1.0, 1000).unwrap();
        let f = ScalarField::from_fn(g, 700e-9, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
        let mut xs = sample_initial_positions(&wave(f), 100_000, 3).unwrap();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = x + 0.5;
                (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS = {ks}");
    }

    #[test]
    fn first_order_mode_avoids_its_node() {
        let g = Grid::centered(0.0, 2e-3, 2048).unwrap();
        let f = hermite_gauss(1, 200e-6, g, 700e-9).unwrap();
        let xs = sample_initial_positions(&wave(f), 10_000, 11).unwrap();
        assert!(xs.iter().all(|x| x.abs() > g.dx));
    }

    #[test]
    fn disjoint_lobes_split_binomially() {
        let g = Grid::centered(0.0, 2e-3, 2048).unwrap();
        let f = ScalarField::from_fn(g, 700e-9, 0.0, |x| {
            let inside = (x.abs() - 5e-4).abs() < 1e-4;
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let n = 10_000;
        for seed in 0..5 {
            let xs = sample_initial_positions(&wave(f.clone()), n, seed).unwrap();
            let up = xs.iter().filter(|x| **x > 0.0).count() as f64 / n as f64;
            assert!((up - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt(), "seed {seed}: {up}");
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let g = Grid::centered(0.0, 2e-3, 256).unwrap();
        let f = hermite_gauss(0, 200e-6, g, 700e-9).unwrap();
        let a = sample_initial_positions(&wave(f.clone()), 100, 5).unwrap();
        let b = sample_initial_positions(&wave(f.clone()), 100, 5).unwrap();
        assert_eq!(a, b);
        assert!(sample_initial_positions(&wave(f.clone()), 0, 5).is_err());
        let zero = ScalarField::zeros(g, 700e-9, 0.0).unwrap();
        assert!(sample_initial_positions(&wave(zero), 10, 5).is_err());
    }
}
