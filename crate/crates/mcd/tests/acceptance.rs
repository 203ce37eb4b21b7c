//! End-to-end acceptance suite. Each test covers one acceptance criterion,
//! prints a single pass line, and enforces its runtime budget.

use mcd::analysis::{
    classify_all, classify_growth, find_cantor_submulticurve, find_levy_cycle,
    generated_multicurve, irreducible_components, is_obstruction, is_periodic,
    leading_eigenvalue, GrowthClass,
};
use mcd::curve_complex::{
    sub_system, validate, CurveClass, CurveSystem, MarkedPoint, Orientation, Piece, PullbackEntry,
};
use mcd::decomposition::{detect_coiled_fatou, find_renormalizable_piece, refine_to_dichotomy};
use mcd::fixtures;
use mcd::numerics::families::{self, EX1_NU, EX2_NU};
use mcd::numerics::maps::{chordal, verify_pcf, ExtComplex};
use mcd::numerics::render::render_basins;
use mcd::pullback::{counting_matrix, kappa, level_word, thurston_matrix};
use num_bigint::BigUint;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

fn budget(name: &str, start: Instant, limit: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= limit,
        "{name} exceeded its runtime budget: {elapsed:?} > {limit:?}"
    );
    println!("PASS {name} ({elapsed:?})");
}

/// Random pre-stable system on a path of pieces: up to `max_curves` curves,
/// words of up to 3 entries with degrees up to 3. Always validates.
fn random_system(rng: &mut ChaCha8Rng, max_curves: usize) -> CurveSystem {
    let n_curves = rng.gen_range(1..=max_curves);
    let n_pieces = n_curves + 1;
    let piece_id = |i: usize| format!("P{i}");
    let curve_id = |i: usize| format!("c{i}");

    let mut points = Vec::new();
    let mut pieces = Vec::new();
    for i in 0..n_pieces {
        // End pieces carry two marked points, middle pieces one, so every
        // curve has at least two marked points on each side and every piece
        // has boundary + points >= 3.
        let n_pts = if i == 0 || i == n_pieces - 1 { 2 } else { 1 };
        let mut ids = Vec::new();
        for k in 0..n_pts {
            let id = format!("m{i}_{k}");
            points.push(MarkedPoint {
                id: id.clone(),
                image: id.clone(),
                critical: false,
                synthetic: false,
            });
            ids.push(id);
        }
        let mut boundary = Vec::new();
        if i > 0 {
            boundary.push(curve_id(i - 1));
        }
        if i < n_curves {
            boundary.push(curve_id(i));
        }
        // Identity piece dynamics: any sub-system then merges pieces
        // consistently, so restriction-based checks stay exercisable.
        pieces.push(Piece {
            id: piece_id(i),
            boundary,
            points: ids,
            image: piece_id(i),
        });
    }
    let curves: Vec<CurveClass> = (0..n_curves)
        .map(|i| CurveClass {
            id: curve_id(i),
            left_piece: piece_id(i),
            right_piece: piece_id(i + 1),
            peripheral_around: None,
        })
        .collect();
    let mut words = BTreeMap::new();
    let mut max_degree = 2;
    for c in &curves {
        let n_entries = rng.gen_range(1..=3);
        let word: Vec<PullbackEntry> = (0..n_entries)
            .map(|_| {
                let degree = rng.gen_range(1..=3u64);
                max_degree = max_degree.max(degree);
                PullbackEntry {
                    target: curve_id(rng.gen_range(0..n_curves)),
                    degree,
                    orientation: if rng.gen_bool(0.5) {
                        Orientation::Same
                    } else {
                        Orientation::Reversed
                    },
                }
            })
            .collect();
        words.insert(c.id.clone(), word);
    }
    let sys = CurveSystem {
        degree: max_degree,
        points,
        curves,
        pieces,
        words,
        inessential: None,
        refinement: None,
    };
    assert!(validate(&sys).pass(), "generator must produce valid systems");
    sys
}

/// Brute-force growth oracle: iterate v -> B v from the all-ones vector in
/// exact arithmetic. The word table is non-empty per curve, so the sequence
/// per entry is monotone; it either reaches a fixpoint or diverges.
fn brute_force_growth(sys: &CurveSystem) -> BTreeMap<String, (&'static str, u64)> {
    let cm = counting_matrix(sys);
    let n = cm.ids.len();
    let mut v: Vec<BigUint> = vec![BigUint::from(1u32); n];
    let mut depth_of_limit: Vec<(u64, u32)> = vec![(1, 0); n];
    let cap = (4 * n + 32) as u32;
    let mut stabilized = false;
    for step in 1..=cap {
        let next: Vec<BigUint> = (0..n)
            .map(|i| (0..n).map(|j| &v[j] * cm.b[i][j]).sum())
            .collect();
        for i in 0..n {
            if next[i] != v[i] {
                let val = next[i].to_u64_digits().first().copied().unwrap_or(u64::MAX);
                depth_of_limit[i] = (val, step);
            }
        }
        if next == v {
            stabilized = true;
            break;
        }
        v = next;
    }
    cm.ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let (limit, _) = depth_of_limit[i];
            let kind = if !stabilized && limit > 1 {
                // Re-check per entry: an entry may have stabilized even if
                // the whole vector did not.
                let mut w = v.clone();
                let mut grew = false;
                for _ in 0..n + 2 {
                    let next: Vec<BigUint> = (0..n)
                        .map(|r| (0..n).map(|c| &w[c] * cm.b[r][c]).sum())
                        .collect();
                    if next[i] != w[i] {
                        grew = true;
                    }
                    w = next;
                }
                if grew {
                    "coiling"
                } else if limit == 1 {
                    "const1"
                } else {
                    "bounded"
                }
            } else if limit == 1 {
                "const1"
            } else if stabilized {
                "bounded"
            } else {
                "coiling"
            };
            (id.clone(), (kind, limit))
        })
        .collect()
}

/// Counts, independently of the library's cycle search, the simple cycles
/// through `start` in the entry-instance digraph.
fn count_cycles_through(sys: &CurveSystem, start: &str) -> usize {
    fn dfs(
        sys: &CurveSystem,
        start: &str,
        at: &str,
        visited: &mut BTreeSet<String>,
        found: &mut usize,
    ) {
        for e in sys.word(at) {
            if e.target == start {
                *found += 1;
            } else if !visited.contains(&e.target) {
                visited.insert(e.target.clone());
                dfs(sys, start, &e.target.clone(), visited, found);
                visited.remove(&e.target);
            }
        }
    }
    let mut found = 0;
    let mut visited = BTreeSet::new();
    dfs(sys, start, start, &mut visited, &mut found);
    found
}

#[test]
fn criterion_01_growth_counts() {
    let start = Instant::now();
    let sys = fixtures::load("cor55");
    for n in 0..=30u32 {
        assert_eq!(
            kappa(&sys, "beta", n),
            BigUint::from(2 * n as u64 + 1),
            "kappa(beta, {n})"
        );
        assert_eq!(kappa(&sys, "alpha", n), BigUint::from(1u32), "kappa(alpha, {n})");
    }
    assert!(classify_growth(&sys, "beta").unwrap().is_coiling());
    assert_eq!(classify_growth(&sys, "alpha").unwrap(), GrowthClass::Const1);
    budget("criterion 1: growth counts", start, Duration::from_secs(1));
}

#[test]
fn criterion_02_spectral_decomposition() {
    let start = Instant::now();
    let mut checked = 0;
    let mut check = |sys: &CurveSystem| {
        let lambda = leading_eigenvalue(&thurston_matrix(sys)).unwrap();
        let comp_max = irreducible_components(sys)
            .unwrap()
            .iter()
            .map(|c| c.lambda)
            .fold(0.0f64, f64::max);
        assert!(
            (lambda - comp_max).abs() < 1e-9,
            "lambda {lambda} vs component max {comp_max}"
        );
        checked += 1;
    };
    for (name, _) in fixtures::ALL {
        check(&fixtures::load(name));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        check(&random_system(&mut rng, 6));
    }
    assert_eq!(checked, 1006);
    budget("criterion 2: spectral decomposition", start, Duration::from_secs(30));
}

#[test]
fn criterion_03_obstruction_and_levy() {
    let start = Instant::now();
    let expectations = [
        ("levy", 1.0, true, true),
        ("cor55", 0.5, false, false),
        ("cantor", 2.0 / 3.0, false, false),
    ];
    for (name, lambda_ref, obstructed_ref, levy_ref) in expectations {
        let sys = fixtures::load(name);
        let all: BTreeSet<String> = sys.curves.iter().map(|c| c.id.clone()).collect();
        let (obstructed, lambda) = is_obstruction(&sys, &all).unwrap();
        assert!(
            (lambda - lambda_ref).abs() < 1e-9,
            "{name}: lambda {lambda} != {lambda_ref}"
        );
        assert_eq!(obstructed, obstructed_ref, "{name}: obstruction verdict");
        assert_eq!(find_levy_cycle(&sys).is_some(), levy_ref, "{name}: Levy cycle");
    }
    budget("criterion 3: obstruction and Levy", start, Duration::from_secs(1));
}

#[test]
fn criterion_04_path_counting_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4096);
    for case in 0..1000 {
        let sys = random_system(&mut rng, 6);

        // (a) every class reaches a cycle under iterated pullback.
        for c in &sys.curves {
            let mut reach: BTreeSet<String> = [c.id.clone()].into();
            loop {
                let grown: BTreeSet<String> = reach
                    .iter()
                    .flat_map(|v| sys.word(v).iter().map(|e| e.target.clone()))
                    .chain(reach.iter().cloned())
                    .collect();
                if grown == reach {
                    break;
                }
                reach = grown;
            }
            let on_cycle = reach.iter().any(|v| count_cycles_through(&sys, v) > 0);
            assert!(on_cycle, "case {case}: {} never reaches a cycle", c.id);
        }

        // (b) periodic classes that are not coiling have kappa_n = 1.
        for c in &sys.curves {
            if is_periodic(&sys, &c.id) {
                let growth = classify_growth(&sys, &c.id).unwrap();
                if !growth.is_coiling() {
                    assert_eq!(growth, GrowthClass::Const1, "case {case}: {}", c.id);
                    for n in [1u32, 2, 7, 64] {
                        assert_eq!(
                            kappa(&sys, &c.id, n),
                            BigUint::from(1u32),
                            "case {case}: kappa({}, {n})",
                            c.id
                        );
                    }
                }
            }
        }

        // (c) classify_growth agrees with the brute-force oracle.
        let oracle = brute_force_growth(&sys);
        for (id, growth) in classify_all(&sys).unwrap() {
            let (kind, limit) = oracle[&id];
            match growth {
                GrowthClass::Const1 => assert_eq!(kind, "const1", "case {case}: {id}"),
                GrowthClass::Bounded { limit: l, .. } => {
                    assert_eq!(kind, "bounded", "case {case}: {id}");
                    assert_eq!(l, limit, "case {case}: {id} limit");
                }
                GrowthClass::Coiling { .. } => assert_eq!(kind, "coiling", "case {case}: {id}"),
            }
        }

        // (d) Cantor submulticurve exists iff some class carries two cycles.
        let double = sys
            .curves
            .iter()
            .any(|c| count_cycles_through(&sys, &c.id) >= 2);
        let cantor = find_cantor_submulticurve(&sys).unwrap();
        assert_eq!(
            cantor.is_some(),
            double,
            "case {case}: Cantor {:?} vs double-cycle {double}",
            cantor
        );
    }
    budget("criterion 4: path-counting suite", start, Duration::from_secs(60));
}

#[test]
fn criterion_05_refinement_dichotomy() {
    let start = Instant::now();
    let chain = fixtures::load("chain");
    let refinement = refine_to_dichotomy(&chain, None).unwrap();
    assert_eq!(refinement.n, 2, "chain refines at depth 2");
    assert!(refinement.dichotomy, "chain refinement reaches the dichotomy");
    assert!(refinement
        .growth
        .values()
        .all(|g| *g == GrowthClass::Const1 || g.is_coiling()));

    // Coiling projections are preserved on every non-peripheral fixture.
    for name in ["cor55", "levy", "cantor", "chain", "thm14"] {
        let sys = fixtures::load(name);
        let coiling_original: BTreeSet<String> = classify_all(&sys)
            .unwrap()
            .into_iter()
            .filter(|(_, g)| g.is_coiling())
            .map(|(id, _)| id)
            .collect();
        let refinement = refine_to_dichotomy(&sys, None).unwrap();
        let meta = refinement.system.refinement.as_ref().unwrap();
        let coiling_projected: BTreeSet<String> = refinement
            .growth
            .iter()
            .filter(|(_, g)| g.is_coiling())
            .map(|(id, _)| meta.projections[id].clone())
            .collect();
        assert_eq!(
            coiling_projected, coiling_original,
            "{name}: coiling classes project onto the original coiling classes"
        );
    }
    budget("criterion 5: refinement dichotomy", start, Duration::from_secs(1));
}

#[test]
fn criterion_06_renormalization_pipeline() {
    let start = Instant::now();
    let sys = fixtures::load("thm14");
    let (gamma_prime, piece, cert) = find_renormalizable_piece(&sys).unwrap().unwrap();
    let expected: BTreeSet<String> = ["gamma".to_string(), "alpha".to_string()].into();
    assert_eq!(gamma_prime, expected);
    assert_eq!(piece, "P1");
    assert!(cert.verified);
    assert_eq!(cert.period, 1);

    // Independent re-verification of the postconditions.
    let sub = sub_system(&sys, &gamma_prime).unwrap();
    assert!(validate(&sub).pass(), "restricted system re-validates");
    let p1 = sub.piece("P1").unwrap();
    assert_eq!(p1.image, "P1", "the renormalization piece is fixed");
    let lambda_gamma = generated_multicurve(&sys, "gamma").unwrap();
    assert!(!lambda_gamma.is_empty());
    for id in &lambda_gamma {
        assert!(
            classify_growth(&sub, id).unwrap().is_coiling(),
            "{id} stays coiling in the restricted system"
        );
    }
    budget("criterion 6: renormalization pipeline", start, Duration::from_secs(1));
}

#[test]
fn criterion_07_coiled_fatou() {
    let start = Instant::now();
    let cert = detect_coiled_fatou(&fixtures::load("coiled-fatou")).unwrap();
    assert!(cert.verified);
    assert_eq!(cert.criterion, "coiled-fatou");
    assert!(detect_coiled_fatou(&fixtures::load("cor55")).is_none());
    budget("criterion 7: coiled Fatou", start, Duration::from_secs(1));
}

#[test]
fn criterion_08_parameter_recovery() {
    let start = Instant::now();
    for (example, reference) in [(1u8, EX1_NU), (2u8, EX2_NU)] {
        let sol = families::solve_parameter(example).unwrap();
        let rel = ((sol.nu_re - reference).abs() + sol.nu_im.abs()) / reference.abs();
        assert!(rel < 1e-13, "example {example}: nu to 13 significant digits");
        let ratios = sol.trace.quadratic_ratios();
        assert!(!ratios.is_empty(), "example {example}: trace captures the approach");
        assert!(
            ratios.iter().all(|r| *r < 100.0),
            "example {example}: squared-step ratios stay bounded (quadratic): {ratios:?}"
        );
    }
    budget("criterion 8: parameter recovery", start, Duration::from_secs(2));
}

#[test]
fn criterion_09_pcf_verification() {
    let start = Instant::now();
    let finite = ExtComplex::finite;

    let m = families::builtin("ex1.g").unwrap();
    let portrait = verify_pcf(&m, 64, 1e-8, 7).unwrap();
    assert!(portrait.max_residual < 1e-8);
    assert_eq!(
        portrait.orbits.iter().map(|o| o.multiplicity).sum::<usize>(),
        8,
        "degree 5: multiplicities sum to 2d-2 = 8"
    );
    let [a, _, c, _] = families::EX1_G_PARAMS;
    let orbit_of = |p: ExtComplex| {
        portrait
            .orbits
            .iter()
            .find(|o| chordal(o.point, p) < 1e-6)
            .unwrap_or_else(|| panic!("critical point near {p:?}"))
    };
    let fixed1 = orbit_of(finite(1.0, 0.0));
    assert_eq!((fixed1.cycle_start, fixed1.cycle_len), (0, 1));
    let oc = orbit_of(finite(c, 0.0));
    assert_eq!(oc.multiplicity, 2);
    assert!(chordal(oc.orbit[1], finite(0.0, 0.0)) < 1e-8);
    assert!(chordal(oc.orbit[2], finite(a, 0.0)) < 1e-8);
    let c1 = orbit_of(finite(families::EX1_CRIT_REFS[0], 0.0));
    assert!(chordal(c1.orbit[1], finite(a, 0.0)) < 1e-8);
    let c2 = orbit_of(finite(families::EX1_CRIT_REFS[1], 0.0));
    assert!(chordal(c2.orbit[1], finite(1.0, 0.0)) < 1e-8);
    let inf = portrait
        .orbits
        .iter()
        .find(|o| o.point == ExtComplex::Infinity)
        .expect("infinity is critical");
    assert_eq!(inf.multiplicity, 2);
    assert_eq!((inf.cycle_start, inf.cycle_len), (0, 1));

    let m = families::builtin("ex2.g").unwrap();
    let portrait = verify_pcf(&m, 64, 1e-8, 7).unwrap();
    assert!(portrait.max_residual < 1e-8);
    assert_eq!(
        portrait.orbits.iter().map(|o| o.multiplicity).sum::<usize>(),
        10,
        "degree 6: multiplicities sum to 2d-2 = 10"
    );
    assert!(portrait.orbits.iter().all(|o| o.multiplicity == 1));
    let a = families::EX2_G_PARAMS[0];
    let orbit_of = |p: ExtComplex| {
        portrait
            .orbits
            .iter()
            .find(|o| chordal(o.point, p) < 1e-6)
            .unwrap_or_else(|| panic!("critical point near {p:?}"))
    };
    for sign in [1.0, -1.0] {
        let o = orbit_of(finite(sign, 0.0));
        assert!(chordal(o.orbit[1], finite(0.0, 0.0)) < 1e-8);
        assert!(chordal(o.orbit[2], finite(a, 0.0)) < 1e-8);
    }
    let c1f = orbit_of(finite(families::EX2_CRIT_REFS[1], 0.0));
    assert_eq!((c1f.cycle_start, c1f.cycle_len), (0, 1));
    let cc = orbit_of(finite(0.0, families::EX2_CRIT_REFS[0]));
    assert!(chordal(cc.orbit[1], finite(-families::EX2_CRIT_REFS[1], 0.0)) < 1e-6);
    let c2 = orbit_of(finite(0.0, families::EX2_CRIT_REFS[2]));
    assert!(chordal(c2.orbit[1], finite(a, 0.0)) < 1e-6);

    budget("criterion 9: PCF verification", start, Duration::from_secs(2));
}

#[test]
fn criterion_10_rendering() {
    let start = Instant::now();
    let m = families::builtin("ex2.R").unwrap();
    let result = render_basins(&m, Complex64::new(0.0, 0.0), 4.0, 256, 10_000, 1e-6, 1, 7).unwrap();
    assert!(
        result.stats.classified_fraction >= 0.99,
        "classified fraction {}",
        result.stats.classified_fraction
    );
    assert_eq!(result.stats.basins.len(), 2, "basins of 0 and 1");
    for target in [ExtComplex::finite(0.0, 0.0), ExtComplex::finite(1.0, 0.0)] {
        let basin = result
            .stats
            .basins
            .iter()
            .find(|b| b.cycle.iter().any(|p| chordal(*p, target) < 1e-6))
            .unwrap_or_else(|| panic!("basin of {target:?}"));
        assert!(basin.pixels > 0, "basin of {target:?} is nonempty");
    }
    let header = b"P6\n256 256\n255\n";
    assert!(result.ppm.starts_with(header), "valid P6 header");
    assert_eq!(result.ppm.len() - header.len(), 256 * 256 * 3);
    budget("criterion 10: rendering", start, Duration::from_secs(10));
}

/// Extra property: the level-n word of a class has exactly kappa_n entries.
#[test]
fn property_level_word_length_matches_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for _ in 0..200 {
        let sys = random_system(&mut rng, 4);
        for c in &sys.curves {
            for n in 1..=5u32 {
                let k = kappa(&sys, &c.id, n);
                if k > BigUint::from(20_000u32) {
                    continue; // keep the enumeration small
                }
                let word = level_word(&sys, &c.id, n);
                assert_eq!(BigUint::from(word.len()), k, "level word of {} at {n}", c.id);
            }
        }
    }
    println!("PASS extra property: |level_word| = kappa");
}
