//! Counting and substitution dynamics of curve preimages: the integer
//! multiplicity matrix B, the weighted transition matrix M, level-n ordered
//! words, the counts kappa_n, and iterated systems.

use crate::curve_complex::{
    CurveSystem, Id, Orientation, Piece, PullbackEntry,
};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// Integer multiplicity matrix: `b[i][j]` = number of entries in the word of
/// curve `i` targeting curve `j` (curve order as listed in the system).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountingMatrix {
    pub ids: Vec<Id>,
    pub b: Vec<Vec<u64>>,
}

/// Weighted transition matrix: `m[i][j]` = sum of reciprocal degrees over the
/// matching entries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThurstonMatrix {
    pub ids: Vec<Id>,
    pub m: Vec<Vec<f64>>,
}

/// One step of a walk in the entry-instance multigraph: the source curve and
/// the index of the entry taken within its word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct WalkStep {
    pub source: Id,
    pub entry: usize,
}

/// Address of one level-n preimage component of a curve: the walk that
/// produced it, with accumulated covering degree and orientation parity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WalkAddress {
    pub steps: Vec<WalkStep>,
    pub degree: u64,
    pub orientation: Orientation,
}

impl WalkAddress {
    /// The curve covered by this component (target of the last step).
    pub fn end<'a>(&self, sys: &'a CurveSystem) -> &'a str {
        let last = self.steps.last().expect("non-empty walk");
        sys.word(&last.source)[last.entry].target.as_str()
    }
}

/// An ordered level-n word: the preimage components of one curve at depth n,
/// listed left to right.
pub type LevelWord = Vec<WalkAddress>;

/// Builds the integer multiplicity matrix B.
pub fn counting_matrix(sys: &CurveSystem) -> CountingMatrix {
    let ids: Vec<Id> = sys.curves.iter().map(|c| c.id.clone()).collect();
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let n = ids.len();
    let mut b = vec![vec![0u64; n]; n];
    for (i, id) in ids.iter().enumerate() {
        for e in sys.word(id) {
            b[i][index[e.target.as_str()]] += 1;
        }
    }
    CountingMatrix { ids, b }
}

/// Builds the weighted transition matrix M with entries sum of 1/degree.
pub fn thurston_matrix(sys: &CurveSystem) -> ThurstonMatrix {
    let ids: Vec<Id> = sys.curves.iter().map(|c| c.id.clone()).collect();
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let n = ids.len();
    let mut m = vec![vec![0f64; n]; n];
    for (i, id) in ids.iter().enumerate() {
        for e in sys.word(id) {
            m[i][index[e.target.as_str()]] += 1.0 / e.degree as f64;
        }
    }
    ThurstonMatrix { ids, m }
}

/// kappa_n(curve): number of level-n preimage components of the multicurve
/// in the class of `curve`, i.e. the row sum of B^n. Exact big-integer count.
pub fn kappa(sys: &CurveSystem, curve: &str, n: u32) -> BigUint {
    let cm = counting_matrix(sys);
    let i = cm
        .ids
        .iter()
        .position(|id| id == curve)
        .expect("curve resolves");
    kappa_from_matrix(&cm, i, n)
}

/// Row-sum of B^n for a precomputed matrix (vector iteration, exact).
pub fn kappa_from_matrix(cm: &CountingMatrix, row: usize, n: u32) -> BigUint {
    let size = cm.ids.len();
    // v starts as the all-ones vector; after k multiplications v = B^k * 1.
    let mut v: Vec<BigUint> = vec![BigUint::one(); size];
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); size];
        for (i, item) in next.iter_mut().enumerate() {
            for j in 0..size {
                if cm.b[i][j] != 0 {
                    *item += &v[j] * BigUint::from(cm.b[i][j]);
                }
            }
        }
        v = next;
    }
    v[row].clone()
}

/// The ordered level-n word of a curve, by repeated substitution: each entry
/// is replaced by the level-(n-1) word of its target, degrees multiplied,
/// block order reversed when the entry reverses orientation.
pub fn level_word(sys: &CurveSystem, curve: &str, n: u32) -> LevelWord {
    assert!(n >= 1, "level must be >= 1");
    if n == 1 {
        return sys
            .word(curve)
            .iter()
            .enumerate()
            .map(|(i, e)| WalkAddress {
                steps: vec![WalkStep {
                    source: curve.to_string(),
                    entry: i,
                }],
                degree: e.degree,
                orientation: e.orientation,
            })
            .collect();
    }
    let mut out = Vec::new();
    for (i, e) in sys.word(curve).iter().enumerate() {
        let mut block = level_word(sys, &e.target, n - 1);
        if e.orientation == Orientation::Reversed {
            block.reverse();
        }
        for addr in &mut block {
            let mut steps = Vec::with_capacity(addr.steps.len() + 1);
            steps.push(WalkStep {
                source: curve.to_string(),
                entry: i,
            });
            steps.extend(addr.steps.drain(..));
            addr.steps = steps;
            addr.degree *= e.degree;
            addr.orientation = e.orientation.compose(addr.orientation);
        }
        out.extend(block);
    }
    out
}

/// The system of the k-th iterate: words become level-k words collapsed to
/// plain entries, the piece map is iterated k times, and the global degree is
/// raised to the k-th power. The inessential table cannot be transported and
/// is dropped (degree-sum validation of the result is skipped with a warning).
pub fn power_system(sys: &CurveSystem, k: u32) -> CurveSystem {
    assert!(k >= 1, "power must be >= 1");
    if k == 1 {
        return sys.clone();
    }
    let words: BTreeMap<Id, Vec<PullbackEntry>> = sys
        .curves
        .iter()
        .map(|c| {
            let entries = level_word(sys, &c.id, k)
                .into_iter()
                .map(|addr| PullbackEntry {
                    target: addr.end(sys).to_string(),
                    degree: addr.degree,
                    orientation: addr.orientation,
                })
                .collect();
            (c.id.clone(), entries)
        })
        .collect();

    let iterate = |start: &Id| -> Id {
        let mut cur = start.clone();
        for _ in 0..k {
            cur = sys.piece(&cur).expect("piece resolves").image.clone();
        }
        cur
    };
    let pieces: Vec<Piece> = sys
        .pieces
        .iter()
        .map(|p| Piece {
            id: p.id.clone(),
            boundary: p.boundary.clone(),
            points: p.points.clone(),
            image: iterate(&p.id),
        })
        .collect();

    let iterate_point = |start: &Id| -> Id {
        let mut cur = start.clone();
        for _ in 0..k {
            cur = sys.point(&cur).expect("point resolves").image.clone();
        }
        cur
    };
    let points = sys
        .points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.image = iterate_point(&p.id);
            q
        })
        .collect();

    CurveSystem {
        degree: sys.degree.pow(k),
        points,
        curves: sys.curves.clone(),
        pieces,
        words,
        inessential: None,
        refinement: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve_complex::validate;
    use crate::fixtures;
    use num_traits::ToPrimitive;

    #[test]
    fn counting_matrices_match_fixtures() {
        let cm = counting_matrix(&fixtures::load("cor55"));
        assert_eq!(cm.ids, vec!["alpha", "beta"]);
        assert_eq!(cm.b, vec![vec![1, 0], vec![2, 1]]);

        let cm = counting_matrix(&fixtures::load("levy"));
        assert_eq!(cm.b, vec![vec![1]]);

        let cm = counting_matrix(&fixtures::load("cantor"));
        assert_eq!(cm.b, vec![vec![1, 1], vec![1, 1]]);
    }

    #[test]
    fn thurston_matrices_match_fixtures() {
        let tm = thurston_matrix(&fixtures::load("cor55"));
        assert_eq!(tm.m, vec![vec![0.5, 0.0], vec![1.0, 0.5]]);

        let tm = thurston_matrix(&fixtures::load("levy"));
        assert_eq!(tm.m, vec![vec![1.0]]);

        let tm = thurston_matrix(&fixtures::load("cantor"));
        let third = 1.0 / 3.0;
        assert_eq!(tm.m, vec![vec![third, third], vec![third, third]]);
    }

    #[test]
    fn kappa_growth_patterns() {
        let a = fixtures::load("cor55");
        for n in 1..=30u32 {
            assert_eq!(kappa(&a, "beta", n).to_u64().unwrap(), 2 * n as u64 + 1);
            assert_eq!(kappa(&a, "alpha", n).to_u64().unwrap(), 1);
        }
        let d = fixtures::load("chain");
        for n in 2..=10u32 {
            assert_eq!(kappa(&d, "gamma", n).to_u64().unwrap(), 2);
        }
    }

    #[test]
    fn kappa_monotone_on_fixtures() {
        for (name, _) in fixtures::ALL {
            let sys = fixtures::load(name);
            for c in &sys.curves {
                let mut prev = kappa(&sys, &c.id, 1);
                for n in 2..=12 {
                    let next = kappa(&sys, &c.id, n);
                    assert!(next >= prev, "{name}/{}: kappa dropped at n={n}", c.id);
                    prev = next;
                }
            }
        }
    }

    #[test]
    fn level_word_counts_match_kappa() {
        for (name, _) in fixtures::ALL {
            let sys = fixtures::load(name);
            for c in &sys.curves {
                for n in 1..=6 {
                    let lw = level_word(&sys, &c.id, n);
                    assert_eq!(
                        BigUint::from(lw.len()),
                        kappa(&sys, &c.id, n),
                        "{name}/{} at n={n}",
                        c.id
                    );
                }
            }
        }
    }

    #[test]
    fn level_one_is_the_word_itself() {
        let sys = fixtures::load("cor55");
        let lw = level_word(&sys, "beta", 1);
        assert_eq!(lw.len(), 3);
        assert_eq!(lw[0].end(&sys), "alpha");
        assert_eq!(lw[1].end(&sys), "beta");
        assert_eq!(lw[2].end(&sys), "alpha");
    }

    #[test]
    fn level_two_substitution_order() {
        // words[beta] = [alpha, beta, alpha]; level-2 word of beta substitutes
        // each entry: alpha -> [alpha], beta -> [alpha, beta, alpha].
        let sys = fixtures::load("cor55");
        let lw = level_word(&sys, "beta", 2);
        let ends: Vec<&str> = lw.iter().map(|a| a.end(&sys)).collect();
        assert_eq!(ends, vec!["alpha", "alpha", "beta", "alpha", "alpha"]);
        assert!(lw.iter().all(|a| a.degree == 4));
    }

    #[test]
    fn thm14_level_three_leftmost_periodic() {
        let sys = fixtures::load("thm14");
        let lw = level_word(&sys, "gamma", 3);
        assert_eq!(lw.len(), 4);
        let first = &lw[0];
        assert!(first
            .steps
            .iter()
            .all(|s| s.source == "gamma" && s.entry == 0));
        assert_eq!(first.degree, 8);
    }

    #[test]
    fn reversed_entries_flip_block_order() {
        let mut sys = fixtures::load("cor55");
        sys.words.get_mut("beta").unwrap()[1].orientation = Orientation::Reversed;
        let lw = level_word(&sys, "beta", 2);
        // The middle block is the reversed level-1 word of beta.
        let mids: Vec<usize> = lw[1..4].iter().map(|a| a.steps[1].entry).collect();
        assert_eq!(mids, vec![2, 1, 0]);
        assert_eq!(lw[2].orientation, Orientation::Same); // Reversed twice
        assert_eq!(lw[1].orientation, Orientation::Reversed);
    }

    #[test]
    fn power_system_matches_matrix_power() {
        for (name, _) in fixtures::ALL {
            let sys = fixtures::load(name);
            let b = counting_matrix(&sys).b;
            for k in 2..=4u32 {
                let pk = power_system(&sys, k);
                assert!(validate(&pk).pass(), "{name} power {k}");
                let expected = matrix_pow(&b, k);
                assert_eq!(counting_matrix(&pk).b, expected, "{name} power {k}");
            }
        }
    }

    #[test]
    fn power_examples() {
        let sys = fixtures::load("levy");
        let p3 = power_system(&sys, 3);
        assert_eq!(
            p3.word("gamma"),
            &[PullbackEntry {
                target: "gamma".into(),
                degree: 1,
                orientation: Orientation::Same
            }]
        );

        let sys = fixtures::load("cor55");
        let p2 = power_system(&sys, 2);
        assert_eq!(counting_matrix(&p2).b, vec![vec![1, 0], vec![4, 1]]);
        assert_eq!(p2.degree, 36);
    }

    #[test]
    fn fixed_loop_degree_is_power() {
        let sys = fixtures::load("thm14");
        for n in 1..=8u32 {
            let lw = level_word(&sys, "alpha", n);
            assert_eq!(lw.len(), 1);
            assert_eq!(lw[0].degree, 2u64.pow(n));
        }
    }

    fn matrix_pow(b: &[Vec<u64>], k: u32) -> Vec<Vec<u64>> {
        let n = b.len();
        let mut acc: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
            .collect();
        for _ in 0..k {
            let mut next = vec![vec![0u64; n]; n];
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        next[i][j] += acc[i][l] * b[l][j];
                    }
                }
            }
            acc = next;
        }
        acc
    }
}
