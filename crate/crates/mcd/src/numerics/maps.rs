//! Rational maps on the Riemann sphere: projective evaluation, critical
//! points with multiplicities (including infinity), and critical-orbit
//! verification producing a portrait.

use super::poly::{cluster_roots, Poly};
use super::NumericsError;
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

/// A point of the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(re: f64, im: f64) -> ExtComplex {
        ExtComplex::Finite(Complex64::new(re, im))
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            ExtComplex::Finite(z) => Some(*z),
            ExtComplex::Infinity => None,
        }
    }
}

impl Serialize for ExtComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtComplex::Infinity => s.serialize_str("infinity"),
            ExtComplex::Finite(z) => {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("re", &z.re)?;
                m.serialize_entry("im", &z.im)?;
                m.end()
            }
        }
    }
}

/// Chordal (spherical) distance, bounded by 2.
pub fn chordal(a: ExtComplex, b: ExtComplex) -> f64 {
    match (a, b) {
        (ExtComplex::Infinity, ExtComplex::Infinity) => 0.0,
        (ExtComplex::Infinity, ExtComplex::Finite(z))
        | (ExtComplex::Finite(z), ExtComplex::Infinity) => {
            2.0 / (1.0 + z.norm_sqr()).sqrt()
        }
        (ExtComplex::Finite(x), ExtComplex::Finite(y)) => {
            2.0 * (x - y).norm() / ((1.0 + x.norm_sqr()).sqrt() * (1.0 + y.norm_sqr()).sqrt())
        }
    }
}

/// Second-order jet (value, first and second derivative) for forward-mode
/// differentiation through products and quotients.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub f: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl Jet2 {
    pub fn variable(z: Complex64) -> Jet2 {
        Jet2 {
            f: z,
            d1: Complex64::new(1.0, 0.0),
            d2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn constant(c: Complex64) -> Jet2 {
        Jet2 {
            f: c,
            d1: Complex64::new(0.0, 0.0),
            d2: Complex64::new(0.0, 0.0),
        }
    }

    pub fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            f: self.f * o.f,
            d1: self.d1 * o.f + self.f * o.d1,
            d2: self.d2 * o.f + 2.0 * self.d1 * o.d1 + self.f * o.d2,
        }
    }

    pub fn div(self, o: Jet2) -> Jet2 {
        let f = self.f / o.f;
        let d1 = (self.d1 - f * o.d1) / o.f;
        let d2 = (self.d2 - 2.0 * d1 * o.d1 - f * o.d2) / o.f;
        Jet2 { f, d1, d2 }
    }
}

/// Product of linear factors scale * prod (z - root)^mult: numerically stable
/// to evaluate where the expanded coefficients would cancel.
#[derive(Clone, Debug)]
pub struct Factored {
    pub scale: Complex64,
    pub factors: Vec<(Complex64, u32)>,
}

impl Factored {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = self.scale;
        for (r, m) in &self.factors {
            acc *= (z - r).powu(*m);
        }
        acc
    }

    pub fn eval_jet(&self, z: Complex64) -> Jet2 {
        let mut acc = Jet2::constant(self.scale);
        for (r, m) in &self.factors {
            let lin = Jet2 {
                f: z - r,
                d1: Complex64::new(1.0, 0.0),
                d2: Complex64::new(0.0, 0.0),
            };
            for _ in 0..*m {
                acc = acc.mul(lin);
            }
        }
        acc
    }

    pub fn expand(&self) -> Poly {
        let mut p = Poly::one().scale(self.scale);
        for (r, m) in &self.factors {
            for _ in 0..*m {
                p = p.mul(&Poly::linear(*r));
            }
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|(_, m)| *m as usize).sum()
    }
}

/// A rational map num/den; when a factored form is available it is used for
/// finite evaluation and derivatives (the expanded coefficients of the
/// builtin families lose up to 8 digits near root/pole clusters).
#[derive(Clone, Debug)]
pub struct RationalMap {
    pub num: Poly,
    pub den: Poly,
    pub factored: Option<(Factored, Factored)>,
}

impl RationalMap {
    pub fn new(num: Poly, den: Poly) -> RationalMap {
        RationalMap {
            num,
            den,
            factored: None,
        }
    }

    pub fn from_factored(num: Factored, den: Factored) -> RationalMap {
        RationalMap {
            num: num.expand(),
            den: den.expand(),
            factored: Some((num, den)),
        }
    }

    pub fn degree(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    /// Value at infinity by degree comparison.
    fn value_at_infinity(&self) -> ExtComplex {
        use std::cmp::Ordering::*;
        match self.num.degree().cmp(&self.den.degree()) {
            Greater => ExtComplex::Infinity,
            Less => ExtComplex::finite(0.0, 0.0),
            Equal => ExtComplex::Finite(self.num.leading() / self.den.leading()),
        }
    }

    /// Projective evaluation, correct at infinity and at poles. For |z| > 1
    /// the reversed polynomials are used so large inputs stay stable.
    pub fn eval(&self, z: ExtComplex) -> ExtComplex {
        let ExtComplex::Finite(z) = z else {
            return self.value_at_infinity();
        };
        if z.norm() > 1e12 {
            return self.value_at_infinity();
        }
        let (n, d) = match &self.factored {
            Some((fnum, fden)) if z.norm() <= 1e6 => (fnum.eval(z), fden.eval(z)),
            _ => {
                if z.norm() <= 1.0 {
                    (self.num.eval(z), self.den.eval(z))
                } else {
                    // num(z) = z^dn nrev(1/z), den(z) = z^dd drev(1/z):
                    // the ratio carries a factor z^(dn-dd).
                    let w = 1.0 / z;
                    let nrev = self.num.eval_reversed(w);
                    let drev = self.den.eval_reversed(w);
                    let dn = self.num.degree() as i32;
                    let dd = self.den.degree() as i32;
                    if drev.norm() == 0.0 {
                        return ExtComplex::Infinity;
                    }
                    let ratio = nrev / drev * z.powi(dn - dd);
                    if !ratio.is_finite() {
                        return ExtComplex::Infinity;
                    }
                    return ExtComplex::Finite(ratio);
                }
            }
        };
        if d.norm() == 0.0 {
            return ExtComplex::Infinity;
        }
        let v = n / d;
        if v.is_finite() {
            ExtComplex::Finite(v)
        } else {
            ExtComplex::Infinity
        }
    }

    /// Jet of the map at a finite point (value, g', g''), via the factored
    /// form when present.
    pub fn eval_jet(&self, z: Complex64) -> Jet2 {
        match &self.factored {
            Some((fnum, fden)) => fnum.eval_jet(z).div(fden.eval_jet(z)),
            None => {
                let n = Jet2 {
                    f: self.num.eval(z),
                    d1: self.num.derivative().eval(z),
                    d2: self.num.derivative().derivative().eval(z),
                };
                let d = Jet2 {
                    f: self.den.eval(z),
                    d1: self.den.derivative().eval(z),
                    d2: self.den.derivative().derivative().eval(z),
                };
                n.div(d)
            }
        }
    }

    /// The wronskian num' * den - num * den', whose roots are the finite
    /// critical points.
    pub fn wronskian(&self) -> Poly {
        self.num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()))
    }
}

/// Radius within which wronskian roots are treated as one multiple critical
/// point. The builtin families keep distinct critical points farther apart
/// than 2e-3 while double roots split by under 5e-5 in double precision.
pub const CRITICAL_CLUSTER_RADIUS: f64 = 1e-4;

/// Finite and infinite critical points with multiplicities summing to 2d-2.
/// Simple finite critical points are Newton-polished on g' through the
/// second-order jet; multiple points keep the cluster mean (their orbits are
/// insensitive at the local degree).
pub fn critical_points(
    m: &RationalMap,
    seed: u64,
) -> Result<Vec<(ExtComplex, usize)>, NumericsError> {
    let d = m.degree();
    if d < 2 {
        return Err(NumericsError::BadInput(format!(
            "degree {d} < 2 has no critical structure of interest"
        )));
    }
    let w = m.wronskian();
    let roots = w.roots(seed)?;
    let clusters = cluster_roots(&roots, CRITICAL_CLUSTER_RADIUS);
    let mut out: Vec<(ExtComplex, usize)> = Vec::new();
    for (center, mult) in clusters {
        let mut z = center;
        if mult == 1 {
            // Newton on g' through the second-order jet recovers the digits
            // a double-precision root of the expanded wronskian loses.
            for _ in 0..40 {
                let jet = m.eval_jet(z);
                if jet.d2.norm() == 0.0 || !jet.d1.is_finite() {
                    break;
                }
                let step = jet.d1 / jet.d2;
                z -= step;
                if step.norm() < 1e-14 * (z.norm() + 1.0) {
                    break;
                }
            }
        } else {
            // A multiplicity-m root of w is a simple root of w^(m-1), where
            // plain Newton converges to full precision.
            let mut der = w.clone();
            for _ in 1..mult {
                der = der.derivative();
            }
            let dder = der.derivative();
            for _ in 0..40 {
                let dv = dder.eval(z);
                if dv.norm() == 0.0 {
                    break;
                }
                let step = der.eval(z) / dv;
                z -= step;
                if step.norm() < 1e-14 * (z.norm() + 1.0) {
                    break;
                }
            }
        }
        if (z - center).norm() > CRITICAL_CLUSTER_RADIUS {
            z = center; // polish escaped the cluster; keep the mean
        }
        out.push((ExtComplex::Finite(z), mult));
    }
    let finite_total: usize = out.iter().map(|(_, m)| *m).sum();
    let expected = 2 * d - 2;
    if finite_total > expected {
        return Err(NumericsError::Inconsistent(format!(
            "{finite_total} finite critical points exceed 2d-2 = {expected}"
        )));
    }
    if finite_total < expected {
        out.push((ExtComplex::Infinity, expected - finite_total));
    }
    Ok(out)
}

/// One critical orbit: the points visited until a repeat, the index where the
/// cycle starts, and the match residual at closure.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalOrbit {
    pub point: ExtComplex,
    pub multiplicity: usize,
    pub orbit: Vec<ExtComplex>,
    pub cycle_start: usize,
    pub cycle_len: usize,
    /// Chordal distance between the repeated point and its earlier copy.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPortrait {
    pub degree: usize,
    pub orbits: Vec<CriticalOrbit>,
    /// Largest closure residual over all orbits.
    pub max_residual: f64,
}

impl CriticalPortrait {
    /// All postcritical points (orbit points after the first entry).
    pub fn postcritical(&self) -> Vec<ExtComplex> {
        let mut out: Vec<ExtComplex> = Vec::new();
        for o in &self.orbits {
            for p in &o.orbit[1..] {
                if !out.iter().any(|q| chordal(*q, *p) < 1e-9) {
                    out.push(*p);
                }
            }
        }
        out
    }

    /// Cycle points of every orbit (deduplicated within tolerance).
    pub fn cycles(&self) -> Vec<Vec<ExtComplex>> {
        let mut cycles: Vec<Vec<ExtComplex>> = Vec::new();
        for o in &self.orbits {
            let cyc: Vec<ExtComplex> = o.orbit[o.cycle_start..o.cycle_start + o.cycle_len].to_vec();
            let known = cycles
                .iter()
                .any(|c| c.iter().any(|p| chordal(*p, cyc[0]) < 1e-6));
            if !known {
                cycles.push(cyc);
            }
        }
        cycles
    }
}

/// Verifies that every critical orbit is finite: iterates each critical point
/// until it lands within `tol` (chordal) of a previously visited point of the
/// same orbit. Distinct postcritical points closer than twice the tolerance
/// abort with a collision diagnostic.
pub fn verify_pcf(
    m: &RationalMap,
    max_orbit: usize,
    tol: f64,
    seed: u64,
) -> Result<CriticalPortrait, NumericsError> {
    let crit = critical_points(m, seed)?;
    let mut orbits = Vec::new();
    let mut max_residual = 0.0f64;
    for (start, mult) in crit {
        let mut orbit = vec![start];
        let mut closure: Option<(usize, f64)> = None;
        for _ in 0..max_orbit {
            let next = m.eval(*orbit.last().expect("orbit non-empty"));
            let hit = orbit
                .iter()
                .enumerate()
                .map(|(i, p)| (i, chordal(*p, next)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"));
            if let Some((i, dist)) = hit {
                if dist < tol {
                    closure = Some((i, dist));
                    break;
                }
            }
            orbit.push(next);
        }
        let Some((cycle_start, residual)) = closure else {
            return Err(NumericsError::NonConvergence(format!(
                "critical orbit of {start:?} shows no repeat within {max_orbit} steps"
            )));
        };
        max_residual = max_residual.max(residual);
        let cycle_len = orbit.len() - cycle_start;
        orbits.push(CriticalOrbit {
            point: start,
            multiplicity: mult,
            orbit,
            cycle_start,
            cycle_len,
            residual,
        });
    }
    let portrait = CriticalPortrait {
        degree: m.degree(),
        orbits,
        max_residual,
    };
    // Collision diagnostic: postcritical points within `tol` of each other
    // are the same point up to orbit roundoff; distinct representatives must
    // then be separated by at least twice the matching tolerance, otherwise
    // the nearest-previous matching above is ambiguous.
    let mut pts: Vec<ExtComplex> = Vec::new();
    for o in &portrait.orbits {
        for p in &o.orbit[1..] {
            if !pts.iter().any(|q| chordal(*q, *p) < tol) {
                pts.push(*p);
            }
        }
    }
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d = chordal(*a, *b);
            if d < 2.0 * tol {
                return Err(NumericsError::ToleranceCollision(format!(
                    "postcritical points {a:?} and {b:?} are {d:.3e} apart, \
                     within twice the matching tolerance {tol:.1e}"
                )));
            }
        }
    }
    Ok(portrait)
}
