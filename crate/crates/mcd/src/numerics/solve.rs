//! Complex Newton iteration, one-dimensional and multivariate with a
//! numerically differenced Jacobian, recording a per-iteration trace so
//! quadratic convergence can be inspected.

use super::NumericsError;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual_norm: f64,
    pub step_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonTrace {
    pub steps: Vec<NewtonStep>,
    pub final_residual: f64,
}

impl NewtonTrace {
    /// Ratios step[k+1] / step[k]^2 for the tail of the iteration; bounded
    /// ratios are the signature of quadratic convergence. Steps already at
    /// the roundoff floor are excluded — there the ratio measures noise.
    pub fn quadratic_ratios(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .filter(|w| w[0].step_norm > 1e-7)
            .map(|w| w[1].step_norm / (w[0].step_norm * w[0].step_norm))
            .collect()
    }
}

/// Newton iteration for a single complex equation f(x) = 0 with analytic or
/// numerically differenced derivative.
pub fn newton_1d(
    f: impl Fn(Complex64) -> Complex64,
    seed: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<(Complex64, NewtonTrace), NumericsError> {
    let mut x = seed;
    let mut steps = Vec::new();
    for iteration in 0..max_iter {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(NumericsError::NonConvergence(format!(
                "non-finite residual at {x}"
            )));
        }
        let h = 1e-7 * x.norm().max(1.0);
        let df = (f(x + Complex64::new(h, 0.0)) - fx) / h;
        if df.norm() == 0.0 {
            return Err(NumericsError::NonConvergence(format!(
                "vanishing derivative at {x}"
            )));
        }
        let step = fx / df;
        x -= step;
        steps.push(NewtonStep {
            iteration,
            residual_norm: fx.norm(),
            step_norm: step.norm(),
        });
        if step.norm() < tol * x.norm().max(1.0) {
            break;
        }
    }
    let final_residual = f(x).norm();
    let trace = NewtonTrace {
        steps,
        final_residual,
    };
    if final_residual.is_finite() && final_residual < tol.max(1e-12) * 1e3 {
        Ok((x, trace))
    } else {
        Err(NumericsError::NonConvergence(format!(
            "residual {final_residual:.3e} after {max_iter} iterations"
        )))
    }
}

/// Solves the square complex linear system a x = b in place by Gaussian
/// elimination with partial pivoting. Intended for the small (n <= 4)
/// Jacobians arising here.
pub fn solve_linear(
    mut a: Vec<Vec<Complex64>>,
    mut b: Vec<Complex64>,
) -> Result<Vec<Complex64>, NumericsError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .norm()
                    .partial_cmp(&a[j][col].norm())
                    .expect("finite matrix entries")
            })
            .expect("non-empty column");
        if a[pivot][col].norm() < 1e-300 {
            return Err(NumericsError::NonConvergence(
                "singular Jacobian in Newton iteration".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= factor * v;
            }
            let v = b[col];
            b[row] -= factor * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Multivariate complex Newton iteration for f: C^n -> C^n, with the
/// Jacobian approximated by forward differences.
pub fn newton_n(
    f: impl Fn(&[Complex64]) -> Result<Vec<Complex64>, NumericsError>,
    seed: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Complex64>, NewtonTrace), NumericsError> {
    let n = seed.len();
    let mut x = seed.to_vec();
    let mut steps = Vec::new();
    for iteration in 0..max_iter {
        let fx = f(&x)?;
        if fx.len() != n {
            return Err(NumericsError::BadInput(format!(
                "residual has dimension {} but unknowns have dimension {n}",
                fx.len()
            )));
        }
        let residual_norm = fx.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !residual_norm.is_finite() {
            return Err(NumericsError::NonConvergence(
                "non-finite residual in multivariate Newton".into(),
            ));
        }
        // Forward-difference Jacobian, one column per unknown.
        let mut jac = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for col in 0..n {
            let h = 1e-7 * x[col].norm().max(1.0);
            let mut xp = x.clone();
            xp[col] += Complex64::new(h, 0.0);
            let fp = f(&xp)?;
            for row in 0..n {
                jac[row][col] = (fp[row] - fx[row]) / h;
            }
        }
        let step = solve_linear(jac, fx)?;
        let step_norm = step.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si;
        }
        steps.push(NewtonStep {
            iteration,
            residual_norm,
            step_norm,
        });
        let scale = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if step_norm < tol * scale {
            break;
        }
    }
    let final_residual = f(&x)?
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let trace = NewtonTrace {
        steps,
        final_residual,
    };
    if final_residual.is_finite() && final_residual < tol.max(1e-12) * 1e3 {
        Ok((x, trace))
    } else {
        Err(NumericsError::NonConvergence(format!(
            "residual {final_residual:.3e} after {max_iter} iterations"
        )))
    }
}
