//! Dense complex polynomials with Horner evaluation and simultaneous
//! (Aberth-Ehrlich) root finding, plus clustering of near-coincident roots
//! into multiple roots.

use super::NumericsError;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Polynomial with ascending complex coefficients; index k holds the
/// coefficient of z^k.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<Complex64>);

/// Coefficients below this magnitude relative to the largest are trimmed.
const TRIM_EPS: f64 = 1e-14;

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Poly {
        Poly(coeffs).trimmed()
    }

    pub fn from_real(coeffs: &[f64]) -> Poly {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Poly {
        Poly(Vec::new())
    }

    pub fn one() -> Poly {
        Poly(vec![Complex64::new(1.0, 0.0)])
    }

    /// Monomial z - r.
    pub fn linear(r: Complex64) -> Poly {
        Poly(vec![-r, Complex64::new(1.0, 0.0)])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn leading(&self) -> Complex64 {
        *self.0.last().expect("nonzero polynomial")
    }

    fn trimmed(mut self) -> Poly {
        let scale = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while self
            .0
            .last()
            .is_some_and(|c| c.norm() <= TRIM_EPS * scale)
        {
            self.0.pop();
        }
        self
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Evaluation of the reversed polynomial z^deg * p(1/z), stable for
    /// |z| > 1.
    pub fn eval_reversed(&self, w: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.0 {
            acc = acc * w + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] -= c;
        }
        Poly::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.0.iter().map(|c| c * s).collect())
    }

    /// True when the two polynomials share a root within the given radius.
    pub fn shares_root_with(&self, other: &Poly, radius: f64, seed: u64) -> bool {
        let (Ok(a), Ok(b)) = (self.roots(seed), other.roots(seed)) else {
            return false;
        };
        a.iter()
            .any(|ra| b.iter().any(|rb| (ra - rb).norm() < radius))
    }

    /// All complex roots by Aberth-Ehrlich simultaneous iteration from a
    /// randomly perturbed circle, followed by a Newton polish of each root.
    pub fn roots(&self, seed: u64) -> Result<Vec<Complex64>, NumericsError> {
        let n = self.degree();
        if self.is_zero() {
            return Err(NumericsError::BadInput("zero polynomial".into()));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let p = self;
        let dp = self.derivative();

        // Initial guesses on a circle of the Cauchy-bound radius, randomly
        // perturbed so symmetric configurations cannot stall the iteration.
        let lead = p.leading().norm();
        let radius = 1.0
            + p.0[..n]
                .iter()
                .map(|c| c.norm() / lead)
                .fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.35) / n as f64
                    + rng.gen_range(-0.05..0.05);
                let r = radius * rng.gen_range(0.8..1.2);
                Complex64::from_polar(r, angle)
            })
            .collect();

        let max_iter = 300;
        for _ in 0..max_iter {
            let mut worst = 0.0f64;
            let snapshot = z.clone();
            for i in 0..n {
                let zi = snapshot[i];
                let pv = p.eval(zi);
                let dv = dp.eval(zi);
                if dv.norm() == 0.0 {
                    continue;
                }
                let newton = pv / dv;
                let repulsion: Complex64 = snapshot
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, zj)| {
                        let d = zi - zj;
                        if d.norm() < 1e-300 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            1.0 / d
                        }
                    })
                    .sum();
                let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
                let step = if denom.norm() < 1e-300 {
                    newton
                } else {
                    newton / denom
                };
                z[i] = zi - step;
                worst = worst.max(step.norm());
            }
            if worst < 1e-13 * radius.max(1.0) {
                break;
            }
        }

        // Newton polish to 1e-12 where the root is simple enough.
        for zi in &mut z {
            for _ in 0..20 {
                let pv = p.eval(*zi);
                let dv = dp.eval(*zi);
                if dv.norm() == 0.0 {
                    break;
                }
                let step = pv / dv;
                *zi -= step;
                if step.norm() < 1e-13 * (zi.norm() + 1.0) {
                    break;
                }
            }
        }

        // Residual check: |p(z)| must be small relative to the coefficient
        // scale at each root.
        let scale: f64 = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let bad: Vec<String> = z
            .iter()
            .filter(|r| {
                let m = r.norm().max(1.0).powi(n as i32);
                p.eval(**r).norm() > 1e-6 * scale * m
            })
            .map(|r| format!("{r} -> |p| = {:.3e}", p.eval(*r).norm()))
            .collect();
        if !bad.is_empty() {
            return Err(NumericsError::NonConvergence(format!(
                "root residuals too large: {bad:?}"
            )));
        }
        Ok(z)
    }
}

/// Groups near-coincident roots (within `radius`) into (center, multiplicity)
/// pairs; the center is the cluster mean.
pub fn cluster_roots(roots: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut remaining: Vec<Complex64> = roots.to_vec();
    let mut out = Vec::new();
    while let Some(&first) = remaining.first() {
        let (cluster, rest): (Vec<_>, Vec<_>) = remaining
            .iter()
            .partition(|r| (*r - first).norm() < radius);
        let m = cluster.len();
        let mean = cluster.iter().sum::<Complex64>() / m as f64;
        out.push((mean, m));
        remaining = rest;
    }
    out
}
