//! Builtin rational-map families: two polynomial models and their rational
//! deformations, with reference parameters, one-parameter solving, and full
//! parameter refinement by multivariate Newton iteration.

use super::maps::{Factored, RationalMap};
use super::poly::Poly;
use super::solve::{newton_1d, newton_n, NewtonTrace};
use super::NumericsError;
use num_complex::Complex64;

/// Parameter of the first cubic polynomial model.
pub const EX1_NU: f64 = -0.1219358974084060;
/// Parameter of the second degree-4 model.
pub const EX2_NU: f64 = -0.4287815744562657;

/// Reference parameters of the degree-5 rational deformation (family ex1.g).
pub const EX1_G_PARAMS: [f64; 4] = [
    -0.1203582660251960, // a
    0.1369645575161714,  // b
    0.9975907956140505,  // c
    1.0001239392656081,  // d
];

/// Reference parameters of the degree-6 rational deformation (family ex2.g).
pub const EX2_G_PARAMS: [f64; 3] = [
    0.1266022073620638,  // a
    -0.0469758128977771, // b
    -0.0327926126839635, // c
];

/// Reference locations of the two free critical points of ex1.g used to
/// anchor the refinement conditions.
pub const EX1_CRIT_REFS: [f64; 2] = [1.0049931103909768, 0.6729097745017786];

/// Reference critical points anchoring the ex2.g refinement conditions:
/// cc (imaginary part), the fixed critical point, and c2 (imaginary part).
pub const EX2_CRIT_REFS: [f64; 3] = [0.2329627349, -0.2656231509, 0.9603813808];

pub const FAMILY_IDS: [&str; 6] = ["ex1.R", "ex1.g0", "ex1.g", "ex2.R", "ex2.g0", "ex2.g"];

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// R(z) = -27/4 z^2 (z - 1).
pub fn ex1_r() -> RationalMap {
    let num = Factored {
        scale: c64(-27.0 / 4.0, 0.0),
        factors: vec![(c64(0.0, 0.0), 2), (c64(1.0, 0.0), 1)],
    };
    let den = Factored {
        scale: c64(1.0, 0.0),
        factors: vec![],
    };
    RationalMap::from_factored(num, den)
}

/// g0(z) = (1+nu)/nu * z^2 (z - mu) + nu with mu = (1+nu+nu^2)/(1+nu).
pub fn ex1_g0(nu: Complex64) -> RationalMap {
    let one = c64(1.0, 0.0);
    let mu = (one + nu + nu * nu) / (one + nu);
    let s = (one + nu) / nu;
    RationalMap::new(
        Poly::new(vec![nu, c64(0.0, 0.0), -mu * s, s]),
        Poly::one(),
    )
}

/// R(z) = 2 z^2 / (z^4 + 1).
pub fn ex2_r() -> RationalMap {
    RationalMap::new(
        Poly::from_real(&[0.0, 0.0, 2.0]),
        Poly::from_real(&[1.0, 0.0, 0.0, 0.0, 1.0]),
    )
}

/// g0(z) = (z^2 - nu^2) / (nu(nu-1) z^4 - (2nu^2 - 2nu - 1) z^2 - nu).
pub fn ex2_g0(nu: Complex64) -> RationalMap {
    let zero = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    RationalMap::new(
        Poly::new(vec![-nu * nu, zero, one]),
        Poly::new(vec![
            -nu,
            zero,
            -(2.0 * nu * nu - 2.0 * nu - one),
            zero,
            nu * (nu - one),
        ]),
    )
}

/// Complex square root with the branch chosen to maximize |q + s|, so the
/// quadratic formula below avoids cancellation.
fn stable_sqrt_for(q: Complex64, disc: Complex64) -> Complex64 {
    let s = disc.sqrt();
    if (q.conj() * s).re < 0.0 {
        -s
    } else {
        s
    }
}

/// g(z) = -d (z-a)(z-b)(z-c)^3 / (b c^3 (z^2 - q z + d)) with
/// q = d(3ab + ac + bc)/(abc); this choice of q makes 0 a critical point for
/// every parameter value. Built in factored form: the denominator has a
/// near-double root pair ~6e-5 from the fixed point 1, where expanded
/// coefficients would lose about eight digits.
pub fn ex1_g_from(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> RationalMap {
    let q = d * (3.0 * a * b + a * c + b * c) / (a * b * c);
    // Roots of z^2 - q z + d, the second by Vieta for accuracy.
    let s = stable_sqrt_for(q, q * q - 4.0 * d);
    let r1 = (q + s) / 2.0;
    let r2 = d / r1;
    let num = Factored {
        scale: -d,
        factors: vec![(a, 1), (b, 1), (c, 3)],
    };
    let den = Factored {
        scale: b * c.powu(3),
        factors: vec![(r1, 1), (r2, 1)],
    };
    RationalMap::from_factored(num, den)
}

pub fn ex1_g() -> RationalMap {
    let [a, b, c, d] = EX1_G_PARAMS;
    ex1_g_from(c64(a, 0.0), c64(b, 0.0), c64(c, 0.0), c64(d, 0.0))
}

/// g(z) = c (z^2-1)^2 (z^2-a^2) / (z^4 + b z^2 - ac). The map is even, so
/// critical points pair up and 0 is always critical.
pub fn ex2_g_from(a: Complex64, b: Complex64, c: Complex64) -> RationalMap {
    let one = c64(1.0, 0.0);
    let num = Factored {
        scale: c,
        factors: vec![(one, 2), (-one, 2), (a, 1), (-a, 1)],
    };
    // z^4 + b z^2 - ac = (z^2 - u1)(z^2 - u2) with u the quadratic roots.
    let s = stable_sqrt_for(-b, b * b + 4.0 * a * c);
    let u1 = (-b + s) / 2.0;
    let u2 = -(a * c) / u1;
    let (w1, w2) = (u1.sqrt(), u2.sqrt());
    let den = Factored {
        scale: one,
        factors: vec![(w1, 1), (-w1, 1), (w2, 1), (-w2, 1)],
    };
    RationalMap::from_factored(num, den)
}

pub fn ex2_g() -> RationalMap {
    let [a, b, c] = EX2_G_PARAMS;
    ex2_g_from(c64(a, 0.0), c64(b, 0.0), c64(c, 0.0))
}

/// Looks up a builtin family by id (see [`FAMILY_IDS`]).
pub fn builtin(id: &str) -> Result<RationalMap, NumericsError> {
    match id {
        "ex1.R" => Ok(ex1_r()),
        "ex1.g0" => Ok(ex1_g0(c64(EX1_NU, 0.0))),
        "ex1.g" => Ok(ex1_g()),
        "ex2.R" => Ok(ex2_r()),
        "ex2.g0" => Ok(ex2_g0(c64(EX2_NU, 0.0))),
        "ex2.g" => Ok(ex2_g()),
        other => Err(NumericsError::BadInput(format!(
            "unknown family '{other}'; expected one of {FAMILY_IDS:?}"
        ))),
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ParamSolution {
    pub example: u8,
    pub nu_re: f64,
    pub nu_im: f64,
    pub residual: f64,
    pub trace: NewtonTrace,
}

/// Solves the defining condition of the polynomial model's parameter nu.
/// Example 1: the free critical point 2mu/3 must map to 1.
/// Example 2: the critical point i sqrt(1 - 2 nu^2) must map to -1.
pub fn solve_parameter(example: u8) -> Result<ParamSolution, NumericsError> {
    let (f, seed): (Box<dyn Fn(Complex64) -> Complex64>, Complex64) = match example {
        1 => (
            Box::new(|nu: Complex64| {
                let one = c64(1.0, 0.0);
                let mu = (one + nu + nu * nu) / (one + nu);
                let c0 = 2.0 * mu / 3.0;
                (one + nu) / nu * c0 * c0 * (c0 - mu) + nu - one
            }),
            c64(-0.12, 0.0),
        ),
        2 => (
            Box::new(|nu: Complex64| {
                let one = c64(1.0, 0.0);
                let c0 = (one - 2.0 * nu * nu).sqrt() * c64(0.0, 1.0);
                let c2 = c0 * c0;
                let num = c2 - nu * nu;
                let den = nu * (nu - one) * c2 * c2 - (2.0 * nu * nu - 2.0 * nu - one) * c2 - nu;
                num / den + one
            }),
            c64(-0.43, 0.0),
        ),
        other => {
            return Err(NumericsError::BadInput(format!(
                "unknown example {other}; expected 1 or 2"
            )))
        }
    };
    let (nu, trace) = newton_1d(&f, seed, 1e-15, 60)?;
    let residual = f(nu).norm();
    if residual > 1e-13 {
        return Err(NumericsError::NonConvergence(format!(
            "parameter residual {residual:.3e} exceeds 1e-13"
        )));
    }
    Ok(ParamSolution {
        example,
        nu_re: nu.re,
        nu_im: nu.im,
        residual,
        trace,
    })
}

/// Quotient-rule numerator of g' at z: num'(z) den(z) - num(z) den'(z),
/// evaluated through the factored jets. Vanishes exactly at the finite
/// critical points of num/den.
fn criticality(fnum: &Factored, fden: &Factored, z: Complex64) -> Complex64 {
    let n = fnum.eval_jet(z);
    let d = fden.eval_jet(z);
    n.d1 * d.f - n.f * d.d1
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RefinedParams {
    pub example: u8,
    pub names: Vec<&'static str>,
    pub values_re: Vec<f64>,
    pub values_im: Vec<f64>,
    pub residual: f64,
    /// Largest distance between a refined parameter and its reference value.
    pub max_drift: f64,
    pub trace: NewtonTrace,
}

/// Recovers the deformation parameters to machine precision by multivariate
/// Newton iteration on the defining critical-orbit conditions, starting from
/// the reference values offset by `perturbation`.
///
/// The free critical points enter the system as additional unknowns paired
/// with their own criticality equations. Locating them by an inner iteration
/// instead would make the residual non-smooth at the Jacobian's differencing
/// scale: for the first family, perturbing a or b by 1e-7 already merges the
/// critical points at 1 and c1 into a complex-conjugate pair.
///
/// The refined parameters must land within 1e-10 of the references (and the
/// critical points within 1e-7 of their anchors, which carry fewer digits),
/// otherwise the run is reported as inconsistent.
pub fn refine_parameters(example: u8, perturbation: f64) -> Result<RefinedParams, NumericsError> {
    // (name, reference value, is a map parameter rather than a critical point)
    let (unknowns, residual_fn): (
        Vec<(&'static str, Complex64, bool)>,
        Box<dyn Fn(&[Complex64]) -> Result<Vec<Complex64>, NumericsError>>,
    ) = match example {
        1 => (
            vec![
                ("a", c64(EX1_G_PARAMS[0], 0.0), true),
                ("b", c64(EX1_G_PARAMS[1], 0.0), true),
                ("c", c64(EX1_G_PARAMS[2], 0.0), true),
                ("d", c64(EX1_G_PARAMS[3], 0.0), true),
                ("c1", c64(EX1_CRIT_REFS[0], 0.0), false),
                ("c2", c64(EX1_CRIT_REFS[1], 0.0), false),
            ],
            Box::new(|p: &[Complex64]| {
                let (a, b, c, d, c1, c2) = (p[0], p[1], p[2], p[3], p[4], p[5]);
                let m = ex1_g_from(a, b, c, d);
                let (fnum, fden) = m.factored.as_ref().expect("factored by construction");
                let one = c64(1.0, 0.0);
                Ok(vec![
                    // g(1) = 1 and 1 critical; the criticality row is tiny
                    // at this scale, rescaled so the Jacobian row is O(1).
                    fnum.eval(one) - fden.eval(one),
                    criticality(fnum, fden, one) * 1e6,
                    // g(c1) = a and g(c2) = 1 at the critical unknowns.
                    fnum.eval(c1) - a * fden.eval(c1),
                    fnum.eval(c2) - fden.eval(c2),
                    criticality(fnum, fden, c1) * 1e6,
                    criticality(fnum, fden, c2),
                ])
            }),
        ),
        2 => (
            vec![
                ("a", c64(EX2_G_PARAMS[0], 0.0), true),
                ("b", c64(EX2_G_PARAMS[1], 0.0), true),
                ("c", c64(EX2_G_PARAMS[2], 0.0), true),
                ("cc", c64(0.0, EX2_CRIT_REFS[0]), false),
                ("c1f", c64(EX2_CRIT_REFS[1], 0.0), false),
                ("c2", c64(0.0, EX2_CRIT_REFS[2]), false),
            ],
            Box::new(|p: &[Complex64]| {
                let (a, b, c, cc, c1f, c2) = (p[0], p[1], p[2], p[3], p[4], p[5]);
                let m = ex2_g_from(a, b, c);
                let (fnum, fden) = m.factored.as_ref().expect("factored by construction");
                Ok(vec![
                    // g(cc) = -c1f, g(c1f) = c1f (fixed), g(c2) = a.
                    fnum.eval(cc) + c1f * fden.eval(cc),
                    fnum.eval(c1f) - c1f * fden.eval(c1f),
                    fnum.eval(c2) - a * fden.eval(c2),
                    criticality(fnum, fden, cc),
                    criticality(fnum, fden, c1f),
                    criticality(fnum, fden, c2),
                ])
            }),
        ),
        other => {
            return Err(NumericsError::BadInput(format!(
                "unknown example {other}; expected 1 or 2"
            )))
        }
    };

    let seeds: Vec<Complex64> = unknowns
        .iter()
        .map(|(_, r, _)| r + c64(perturbation, 0.0))
        .collect();
    let (values, trace) = newton_n(&residual_fn, &seeds, 1e-14, 40)?;
    let residual = residual_fn(&values)?
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let mut max_drift = 0.0f64;
    for ((name, reference, is_param), value) in unknowns.iter().zip(&values) {
        let drift = (value - reference).norm();
        let bound = if *is_param { 1e-10 } else { 1e-7 };
        if drift > bound {
            return Err(NumericsError::Inconsistent(format!(
                "refined {name} drifted {drift:.3e} from its reference"
            )));
        }
        if *is_param {
            max_drift = max_drift.max(drift);
        }
    }
    Ok(RefinedParams {
        example,
        names: unknowns.iter().map(|(n, _, _)| *n).collect(),
        values_re: values.iter().map(|v| v.re).collect(),
        values_im: values.iter().map(|v| v.im).collect(),
        residual,
        max_drift,
        trace,
    })
}
