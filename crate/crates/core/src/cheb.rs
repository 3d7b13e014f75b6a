//! Chebyshev interpolants for smooth scalar functions on an interval.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate `f` at `n` Chebyshev points of the first kind on `[a, b]`.
    pub fn fit<F>(f: F, a: f64, b: f64, n: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        use rayon::prelude::*;
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| f(Self::node(a, b, n, k)))
            .collect::<Result<_>>()?;
        Ok(Self::from_values(a, b, &values))
    }

    /// Like [`fit`](Self::fit), doubling `n` from 16 until the trailing
    /// coefficients drop below `rel_tol` of the largest one.
    pub fn fit_adaptive<F>(f: F, a: f64, b: f64, rel_tol: f64, max_n: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let mut n = 16;
        loop {
            let c = Self::fit(&f, a, b, n)?;
            let scale = c.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tail = c.coeffs[n - 3..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if tail <= rel_tol * scale {
                return Ok(c);
            }
            if n >= max_n {
                return Err(Error::NoConvergence {
                    what: "Chebyshev surrogate",
                    iterations: n,
                    residual: tail / scale,
                });
            }
            n *= 2;
        }
    }

    fn node(a: f64, b: f64, n: usize, k: usize) -> f64 {
        let x = (PI * (k as f64 + 0.5) / n as f64).cos();
        0.5 * (a + b) + 0.5 * (b - a) * x
    }

    fn from_values(a: f64, b: f64, values: &[f64]) -> Self {
        let n = values.len();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                let scale = if j == 0 { 1.0 } else { 2.0 };
                scale * s / n as f64
            })
            .collect();
        Self { a, b, coeffs }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.to_unit(x))
    }

    /// The derivative as a new interpolant.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(2)];
        for j in (1..n).rev() {
            let next = if j + 1 < n { d[j + 1] } else { 0.0 };
            d[j - 1] = next + 2.0 * j as f64 * self.coeffs[j];
        }
        d[0] *= 0.5;
        d.truncate(n.max(2) - 1);
        let scale = 2.0 / (self.b - self.a);
        d.iter_mut().for_each(|v| *v *= scale);
        Self {
            a: self.a,
            b: self.b,
            coeffs: d,
        }
    }
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}
