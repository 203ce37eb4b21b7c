//! Exact rational linear algebra for decisions that must not flip on
//! floating-point rounding: characteristic polynomials over the rationals and
//! Sturm-sequence root counting, used to decide whether the leading eigenvalue
//! of a nonnegative transition matrix is >= 1.

use crate::curve_complex::CurveSystem;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

pub type Rat = BigRational;

/// Exact transition matrix (entries sum of 1/degree) over the listed curves.
pub fn thurston_matrix_exact(sys: &CurveSystem, ids: &[String]) -> Vec<Vec<Rat>> {
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let n = ids.len();
    let mut m = vec![vec![Rat::zero(); n]; n];
    for (i, id) in ids.iter().enumerate() {
        for e in sys.word(id) {
            if let Some(&j) = index.get(e.target.as_str()) {
                m[i][j] += Rat::new(BigInt::one(), BigInt::from(e.degree));
            }
        }
    }
    m
}

/// Monic characteristic polynomial det(xI - M), coefficients ascending
/// (index k holds the coefficient of x^k), via the Faddeev-LeVerrier recurrence.
pub fn char_poly(m: &[Vec<Rat>]) -> Vec<Rat> {
    let n = m.len();
    let mut coeffs = vec![Rat::zero(); n + 1];
    coeffs[n] = Rat::one();
    // N starts as M; c_{n-k} = -tr(M N_{k-1})/k; N_k = M (N_{k-1} + c_{n-k} I).
    let mut nmat = m.to_vec();
    for k in 1..=n {
        let tr: Rat = (0..n).map(|i| nmat[i][i].clone()).sum();
        let c = -tr / Rat::from(BigInt::from(k as i64));
        coeffs[n - k] = c.clone();
        if k < n {
            let mut shifted = nmat.clone();
            for (i, row) in shifted.iter_mut().enumerate() {
                row[i] += &c;
            }
            nmat = mat_mul(m, &shifted);
        }
    }
    coeffs
}

fn mat_mul(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let n = a.len();
    let mut out = vec![vec![Rat::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if !b[k][j].is_zero() {
                    let prod = &a[i][k] * &b[k][j];
                    out[i][j] += prod;
                }
            }
        }
    }
    out
}

/// Evaluates a polynomial (ascending coefficients) at a rational point.
pub fn eval_poly(p: &[Rat], x: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn derivative(p: &[Rat]) -> Vec<Rat> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rat::from(BigInt::from(i as i64)))
        .collect()
}

fn trim(mut p: Vec<Rat>) -> Vec<Rat> {
    while p.last().is_some_and(Rat::is_zero) {
        p.pop();
    }
    p
}

/// Polynomial remainder of a by b (both ascending, b nonzero).
fn rem(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    if db == 0 {
        return Vec::new(); // division by a nonzero constant leaves no remainder
    }
    let mut r = trim(a.to_vec());
    while r.len() >= b.len() {
        let dr = r.len() - 1;
        let q = &r[dr] / &b[db];
        for i in 0..db {
            let sub = &q * &b[i];
            r[dr - db + i] -= sub;
        }
        r[dr] = Rat::zero(); // exact arithmetic: the leading term cancels
        r = trim(r);
    }
    r
}

/// Sturm chain of p.
fn sturm_chain(p: &[Rat]) -> Vec<Vec<Rat>> {
    let p = trim(p.to_vec());
    if p.len() <= 1 {
        return vec![p];
    }
    let mut chain = vec![p.clone(), trim(derivative(&p))];
    loop {
        let k = chain.len();
        let prev = &chain[k - 2];
        let last = &chain[k - 1];
        if last.is_empty() || last.len() == 1 && last[0].is_zero() {
            chain.pop();
            break;
        }
        let mut r = rem(prev, last);
        if r.is_empty() {
            break;
        }
        for c in &mut r {
            *c = -c.clone();
        }
        if r.iter().all(Rat::is_zero) {
            break;
        }
        chain.push(trim(r));
        if chain.last().unwrap().len() <= 1 {
            break;
        }
    }
    chain
}

fn sign_at(p: &[Rat], x: &Rat) -> i8 {
    let v = eval_poly(p, x);
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

fn sign_at_inf(p: &[Rat]) -> i8 {
    match p.last() {
        None => 0,
        Some(c) if c.is_zero() => 0,
        Some(c) if c.is_positive() => 1,
        _ => -1,
    }
}

fn variations(signs: &[i8]) -> usize {
    let nz: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    nz.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots of p strictly in (a, +infinity).
pub fn count_real_roots_above(p: &[Rat], a: &Rat) -> usize {
    let chain = sturm_chain(p);
    let at_a: Vec<i8> = chain.iter().map(|q| sign_at(q, a)).collect();
    let at_inf: Vec<i8> = chain.iter().map(|q| sign_at_inf(q)).collect();
    variations(&at_a).saturating_sub(variations(&at_inf))
}

/// Exact decision: does the nonnegative matrix have spectral radius >= 1?
/// True iff the characteristic polynomial vanishes at 1 or has a real root
/// above 1 (for a nonnegative matrix the spectral radius is itself a real
/// eigenvalue, so these two cases are exhaustive).
pub fn spectral_radius_geq_one(m: &[Vec<Rat>]) -> bool {
    if m.is_empty() {
        return false;
    }
    let p = char_poly(m);
    let one = Rat::one();
    eval_poly(&p, &one).is_zero() || count_real_roots_above(&p, &one) > 0
}
