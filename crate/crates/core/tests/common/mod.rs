#![allow(dead_code)]

use psuper::{Grid, GridFunction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sum of `k` Gaussian bumps with random centers in the grid box.
#[derive(Clone, Debug)]
pub struct Bumps {
    centers: Vec<[f64; 3]>,
    amps: Vec<f64>,
    widths: Vec<f64>,
}

impl Bumps {
    pub fn random(rng: &mut ChaCha8Rng, grid: &Grid<f64>, k: usize, amp: (f64, f64)) -> Self {
        let dim = grid.dim();
        let mut centers = Vec::with_capacity(k);
        for _ in 0..k {
            let mut c = [0.0; 3];
            for (a, slot) in c.iter_mut().enumerate().take(dim) {
                let (lo, hi) = (grid.lower()[a], grid.upper()[a]);
                *slot = lo + (hi - lo) * rng.gen_range(0.2..0.8);
            }
            centers.push(c);
        }
        let diam = (grid.upper()[0] - grid.lower()[0]).abs();
        Self {
            centers,
            amps: (0..k).map(|_| rng.gen_range(amp.0..amp.1)).collect(),
            widths: (0..k).map(|_| diam * rng.gen_range(0.08..0.25)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(&self.amps)
            .zip(&self.widths)
            .map(|((c, a), w)| {
                let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                a * (-r2 / (2.0 * w * w)).exp()
            })
            .sum()
    }

    pub fn sample(&self, grid: &Grid<f64>) -> GridFunction<f64> {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}

/// Random smooth function `a0 + a . x + sum of bumps`.
pub fn smooth(rng: &mut ChaCha8Rng, grid: &Grid<f64>, scale: f64) -> GridFunction<f64> {
    let dim = grid.dim();
    let a0 = rng.gen_range(-1.0..1.0) * scale;
    let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    let b = Bumps::random(rng, grid, 3, (-scale, scale));
    GridFunction::from_fn(grid, |x| a0 + (0..dim).map(|k| a[k] * x[k]).sum::<f64>() + b.eval(x))
}

/// `v` with interior entries replaced by zero.
pub fn zero_interior(v: &GridFunction<f64>) -> GridFunction<f64> {
    let grid = v.grid();
    GridFunction::new(grid.clone(), (0..grid.len()).map(|j| if grid.is_boundary(j) { v.values()[j] } else { 0.0 }).collect()).unwrap()
}

/// `v` with boundary entries replaced by zero.
pub fn zero_boundary(v: &GridFunction<f64>) -> GridFunction<f64> {
    let grid = v.grid();
    GridFunction::new(grid.clone(), (0..grid.len()).map(|j| if grid.is_boundary(j) { 0.0 } else { v.values()[j] }).collect()).unwrap()
}
