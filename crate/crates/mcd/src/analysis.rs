//! Spectral and graph-theoretic classification of a validated curve system:
//! leading eigenvalue, irreducible components, obstructions, Levy cycles,
//! growth classes, generated submulticurves, cycle enumeration, and detection
//! of fully coiling (Cantor) submulticurves.

use crate::curve_complex::{sub_system, CurveSystem, Id, SystemError};
use crate::exact::{char_poly, spectral_radius_geq_one, thurston_matrix_exact, Rat};
use crate::pullback::{counting_matrix, thurston_matrix, CountingMatrix, ThurstonMatrix, WalkStep};
use num_rational::BigRational;
use num_traits::FromPrimitive;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Absolute tolerance for eigenvalue computations.
pub const EIG_TOL: f64 = 1e-9;
/// Band around 1 inside which the obstruction decision is made exactly.
pub const EXACT_BAND: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("power iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
    #[error("curve {0} is not periodic")]
    NotPeriodic(Id),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Growth classification of one curve class, with a checkable witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum GrowthClass {
    /// kappa_n = 1 for all n.
    Const1,
    /// kappa_n stabilizes at `limit` >= 2 after `depth` steps.
    Bounded { limit: u64, depth: u32 },
    /// kappa_n unbounded; witnessed by a branching vertex fed by a cycle.
    Coiling { branch: Id, cycle: Vec<Id> },
}

impl GrowthClass {
    pub fn is_coiling(&self) -> bool {
        matches!(self, GrowthClass::Coiling { .. })
    }
}

/// A closed walk of pairwise distinct curve classes in the entry-instance
/// multigraph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cycle {
    /// The distinct classes visited, starting from the anchor curve.
    pub curves: Vec<Id>,
    /// The edge instances taken, one per step.
    pub steps: Vec<WalkStep>,
}

/// Tarjan strongly connected components of a directed graph given as
/// adjacency lists; components are returned in reverse topological order.
pub fn tarjan_scc(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State {
        index: usize,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        idx: Vec<Option<usize>>,
        low: Vec<usize>,
        comps: Vec<Vec<usize>>,
    }
    fn connect(v: usize, graph: &[Vec<usize>], st: &mut State) {
        st.idx[v] = Some(st.index);
        st.low[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &graph[v] {
            if st.idx[w].is_none() {
                connect(w, graph, st);
                st.low[v] = st.low[v].min(st.low[w]);
            } else if st.on_stack[w] {
                st.low[v] = st.low[v].min(st.idx[w].unwrap());
            }
        }
        if st.low[v] == st.idx[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().expect("stack underflow");
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            st.comps.push(comp);
        }
    }
    let n = graph.len();
    let mut st = State {
        index: 0,
        stack: Vec::new(),
        on_stack: vec![false; n],
        idx: vec![None; n],
        low: vec![0; n],
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.idx[v].is_none() {
            connect(v, graph, &mut st);
        }
    }
    st.comps
}

/// Support adjacency (edge i -> j iff B[i][j] > 0).
fn support(b: &[Vec<u64>]) -> Vec<Vec<usize>> {
    b.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect()
}

/// Power iteration for the spectral radius of a nonnegative matrix, using the
/// shift A + I so that periodic blocks still converge.
fn power_iteration(m: &[Vec<f64>]) -> Result<f64, AnalysisError> {
    let n = m.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = vec![1.0f64; n];
    let mut lambda = 0.0f64;
    let max_iter = 200_000;
    for it in 0..max_iter {
        let mut w = vec![0.0f64; n];
        for i in 0..n {
            let mut acc = v[i]; // the +I shift
            for j in 0..n {
                acc += m[i][j] * v[j];
            }
            w[i] = acc;
        }
        let norm = w.iter().cloned().fold(0.0f64, f64::max);
        if norm == 0.0 {
            return Ok(0.0);
        }
        for x in &mut w {
            *x /= norm;
        }
        let new_lambda = norm - 1.0;
        let delta = (new_lambda - lambda).abs();
        v = w;
        lambda = new_lambda;
        if it > 4 && delta < EIG_TOL * 1e-3 {
            return Ok(polish_eigenvalue(m, lambda).max(0.0));
        }
    }
    Err(AnalysisError::NonConvergence(format!(
        "no fixpoint after {max_iter} iterations, last lambda {lambda}"
    )))
}

/// Characteristic polynomial of a small matrix in floating point
/// (Faddeev-LeVerrier), monic with ascending coefficients.
fn char_poly_f64(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut coeffs = vec![0.0f64; n + 1];
    coeffs[n] = 1.0;
    let mut nk = m.to_vec(); // N_1 = A
    for k in 1..=n {
        let trace: f64 = (0..n).map(|i| nk[i][i]).sum();
        let ck = -trace / k as f64;
        coeffs[n - k] = ck;
        if k == n {
            break;
        }
        // N_{k+1} = A (N_k + c_k I)
        let mut shifted = nk.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += ck;
        }
        nk = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|l| m[i][l] * shifted[l][j]).sum())
                    .collect()
            })
            .collect();
    }
    coeffs
}

/// Newton-polishes a power-iteration eigenvalue estimate on the block's
/// characteristic polynomial. The consecutive-difference stopping rule leaves
/// an error of order delta / (1 - rate), which for nearly degenerate blocks
/// can reach 1e-6; the polish restores full precision for simple roots. When
/// the polish drifts away from the estimate it is discarded.
fn polish_eigenvalue(m: &[Vec<f64>], estimate: f64) -> f64 {
    let p = char_poly_f64(m);
    let horner = |x: f64| {
        let mut val = 0.0f64;
        let mut der = 0.0f64;
        for c in p.iter().rev() {
            der = der * x + val;
            val = val * x + c;
        }
        (val, der)
    };
    let mut x = estimate;
    for _ in 0..60 {
        let (val, der) = horner(x);
        if der == 0.0 || !val.is_finite() {
            return estimate;
        }
        let step = val / der;
        x -= step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    if (x - estimate).abs() <= 1e-5 * estimate.abs().max(1.0) {
        x
    } else {
        estimate
    }
}

/// Leading eigenvalue (Perron root) of a nonnegative matrix to 1e-9.
/// Computed blockwise over strongly connected components and cross-checked:
/// against whole-matrix power iteration always, and against the exact
/// characteristic polynomial for sizes <= 4.
pub fn leading_eigenvalue(m: &ThurstonMatrix) -> Result<f64, AnalysisError> {
    let n = m.m.len();
    if n == 0 {
        return Ok(0.0);
    }
    let adj: Vec<Vec<usize>> = m
        .m
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let comps = tarjan_scc(&adj);
    let mut best = 0.0f64;
    for comp in &comps {
        let sub: Vec<Vec<f64>> = comp
            .iter()
            .map(|&i| comp.iter().map(|&j| m.m[i][j]).collect())
            .collect();
        best = best.max(power_iteration(&sub)?);
    }
    // The spectral radius of a nonnegative matrix is the maximum over its
    // strongly connected blocks, and each block is irreducible so the shifted
    // power iteration converges geometrically. The whole matrix may be
    // defective (repeated Perron roots across blocks), so it is never
    // iterated directly; instead cross-check small cases exactly.
    if n <= 4 {
        // The power-iteration value must be a near-root of det(xI - M).
        let exact: Vec<Vec<Rat>> = m
            .m
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| BigRational::from_f64(x).expect("finite entry"))
                    .collect()
            })
            .collect();
        let p = char_poly(&exact);
        let coeffs: Vec<f64> = p
            .iter()
            .map(|c| c.numer().to_string().parse::<f64>().unwrap()
                / c.denom().to_string().parse::<f64>().unwrap())
            .collect();
        let mut val = 0.0f64;
        for c in coeffs.iter().rev() {
            val = val * best + c;
        }
        let scale: f64 = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        if val.abs() > 1e-6 * scale {
            return Err(AnalysisError::Inconsistency(format!(
                "characteristic polynomial residual {val} at lambda {best}"
            )));
        }
    }
    Ok(best)
}

/// One irreducible (strongly connected) block of the support digraph, with
/// the leading eigenvalue of its transition submatrix.
#[derive(Clone, Debug, Serialize)]
pub struct IrreducibleComponent {
    pub curves: Vec<Id>,
    pub lambda: f64,
}

/// Strongly connected components of the support digraph with their leading
/// eigenvalues; the overall leading eigenvalue is their maximum.
pub fn irreducible_components(
    sys: &CurveSystem,
) -> Result<Vec<IrreducibleComponent>, AnalysisError> {
    let cm = counting_matrix(sys);
    let tm = thurston_matrix(sys);
    let comps = tarjan_scc(&support(&cm.b));
    comps
        .iter()
        .map(|comp| {
            let sub: Vec<Vec<f64>> = comp
                .iter()
                .map(|&i| comp.iter().map(|&j| tm.m[i][j]).collect())
                .collect();
            Ok(IrreducibleComponent {
                curves: comp.iter().map(|&i| cm.ids[i].clone()).collect(),
                lambda: power_iteration(&sub)?,
            })
        })
        .collect()
}

/// Checks that `subset` is stable: every preimage component of a subset curve
/// is itself a subset class.
fn check_stable(sys: &CurveSystem, subset: &BTreeSet<Id>) -> Result<(), SystemError> {
    for c in &sys.curves {
        if subset.contains(&c.id) {
            continue;
        }
        if let Some(e) = sys.word(&c.id).iter().find(|e| subset.contains(&e.target)) {
            return Err(SystemError::SubsetNotStable(c.id.clone(), e.target.clone()));
        }
    }
    Ok(())
}

/// Thurston obstruction test for a stable subset of curves: true iff the
/// leading eigenvalue of the restricted transition matrix is >= 1. Near the
/// boundary (|lambda - 1| < 1e-6) the decision is made in exact arithmetic.
pub fn is_obstruction(
    sys: &CurveSystem,
    subset: &BTreeSet<Id>,
) -> Result<(bool, f64), AnalysisError> {
    check_stable(sys, subset)?;
    let ids: Vec<Id> = sys
        .curves
        .iter()
        .filter(|c| subset.contains(&c.id))
        .map(|c| c.id.clone())
        .collect();
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let n = ids.len();
    let mut m = vec![vec![0f64; n]; n];
    for (i, id) in ids.iter().enumerate() {
        for e in sys.word(id) {
            if let Some(&j) = index.get(e.target.as_str()) {
                m[i][j] += 1.0 / e.degree as f64;
            }
        }
    }
    let lambda = leading_eigenvalue(&ThurstonMatrix { ids: ids.clone(), m })?;
    let verdict = if (lambda - 1.0).abs() < EXACT_BAND {
        spectral_radius_geq_one(&thurston_matrix_exact(sys, &ids))
    } else {
        lambda >= 1.0
    };
    Ok((verdict, lambda))
}

/// Searches the subgraph of degree-1 edge instances for a cycle: a Levy cycle
/// is a cycle of curves pulled back homeomorphically.
pub fn find_levy_cycle(sys: &CurveSystem) -> Option<Cycle> {
    let ids: Vec<&str> = sys.curve_ids();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    // adjacency over degree-1 entries, remembering the entry index
    let adj: Vec<Vec<(usize, usize)>> = ids
        .iter()
        .map(|&id| {
            sys.word(id)
                .iter()
                .enumerate()
                .filter(|(_, e)| e.degree == 1)
                .map(|(k, e)| (index[e.target.as_str()], k))
                .collect()
        })
        .collect();
    // Iterative DFS with colors to find any directed cycle.
    let n = ids.len();
    let mut color = vec![0u8; n]; // 0 white, 1 gray, 2 black
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n]; // (pred, entry idx)
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = 1;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let (w, entry) = adj[v][*next];
                *next += 1;
                match color[w] {
                    0 => {
                        color[w] = 1;
                        parent[w] = Some((v, entry));
                        stack.push((w, 0));
                    }
                    1 => {
                        // Found a cycle w -> ... -> v -> w.
                        let mut curves = vec![ids[w].to_string()];
                        let mut steps = Vec::new();
                        let mut cur = v;
                        let mut chain = vec![(v, entry)];
                        while cur != w {
                            let (p, e) = parent[cur].expect("path to gray ancestor");
                            chain.push((p, e));
                            cur = p;
                        }
                        chain.reverse();
                        for (src, e) in chain {
                            if src != w {
                                curves.push(ids[src].to_string());
                            }
                            steps.push(WalkStep {
                                source: ids[src].to_string(),
                                entry: e,
                            });
                        }
                        // Rotate so the cycle is anchored at its first curve.
                        let first = curves.remove(0);
                        curves.insert(0, first);
                        return Some(Cycle { curves, steps });
                    }
                    _ => {}
                }
            } else {
                color[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Graph data reused by the growth routines.
struct Graph {
    cm: CountingMatrix,
    adj: Vec<Vec<usize>>,
}

fn graph(sys: &CurveSystem) -> Graph {
    let cm = counting_matrix(sys);
    let adj = support(&cm.b);
    Graph { cm, adj }
}

fn reachable_from(adj: &[Vec<usize>], start: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Vertices lying on some cycle (an SCC of size >= 2 or with a self-loop).
fn cycle_vertices(g: &Graph) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for comp in tarjan_scc(&g.adj) {
        if comp.len() >= 2 {
            out.extend(comp);
        } else if g.cm.b[comp[0]][comp[0]] > 0 {
            out.insert(comp[0]);
        }
    }
    out
}

/// A shortest cycle through `v` in the support digraph, as a list of vertex
/// indices starting at `v`; None when `v` is not periodic.
fn cycle_through(g: &Graph, v: usize) -> Option<Vec<usize>> {
    // BFS from each successor of v back to v.
    let mut best: Option<Vec<usize>> = None;
    for &w in &g.adj[v] {
        if w == v {
            return Some(vec![v]);
        }
        // BFS w -> v.
        let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([w]);
        let mut seen = BTreeSet::from([w]);
        let mut found = false;
        while let Some(x) = queue.pop_front() {
            if x == v {
                found = true;
                break;
            }
            for &y in &g.adj[x] {
                if seen.insert(y) {
                    prev.insert(y, x);
                    queue.push_back(y);
                }
            }
        }
        if !found {
            continue;
        }
        // Rebuild the BFS path w .. v from the prev-chain, then prepend v to
        // get the cycle v -> w -> ... -> pred(v) in forward order.
        let mut chain = Vec::new();
        let mut c = v;
        while c != w {
            chain.push(c);
            c = prev[&c];
        }
        chain.push(w);
        chain.reverse();
        let mut cand = vec![v];
        cand.extend(chain[..chain.len() - 1].iter().copied());
        if best.as_ref().map_or(true, |b| cand.len() < b.len()) {
            best = Some(cand);
        }
    }
    best
}

/// Growth classification of one curve, computed two independent ways: a graph
/// criterion (a branching vertex fed by a cycle, all reachable from the
/// curve) and direct fixpoint iteration of the count vector. The two must
/// agree or an internal-consistency error is returned.
pub fn classify_growth(sys: &CurveSystem, curve: &str) -> Result<GrowthClass, AnalysisError> {
    let g = graph(sys);
    let start = g
        .cm
        .ids
        .iter()
        .position(|id| id == curve)
        .ok_or_else(|| SystemError::UnknownId(curve.to_string()))?;
    let reach = reachable_from(&g.adj, start);
    let cyc = cycle_vertices(&g);

    // Graph criterion: some branching vertex is reachable from a cycle vertex
    // that is itself reachable from the start.
    let mut witness: Option<(usize, Vec<usize>)> = None;
    'outer: for &c in reach.intersection(&cyc) {
        for &v in &reachable_from(&g.adj, c) {
            let out: u64 = g.cm.b[v].iter().sum();
            if out >= 2 {
                let cycle = cycle_through(&g, c).expect("cycle vertex has a cycle");
                witness = Some((v, cycle));
                break 'outer;
            }
        }
    }

    // Iteration route: w_n = B^n * 1 restricted to the reachable set.
    let cap_iters = 4 * g.cm.ids.len() as u32 + 16;
    let cap_value = 1_000_000_000u64;
    let mut w: BTreeMap<usize, u64> = reach.iter().map(|&v| (v, 1)).collect();
    // None after the loop means unbounded (cap exceeded or never stabilized).
    let mut iter_result: Option<(u64, u32)> = None; // (limit at start, depth)
    for it in 1..=cap_iters {
        let mut next = BTreeMap::new();
        for &v in &reach {
            let mut acc: u64 = 0;
            for (j, &mult) in g.cm.b[v].iter().enumerate() {
                if mult > 0 {
                    acc = acc.saturating_add(mult.saturating_mul(w[&j]));
                }
            }
            next.insert(v, acc);
        }
        if next.values().any(|&x| x > cap_value) {
            break;
        }
        if next == w {
            iter_result = Some((w[&start], it - 1));
            break;
        }
        w = next;
    }
    match (witness, iter_result) {
        (Some((v, cycle)), None) => Ok(GrowthClass::Coiling {
            branch: g.cm.ids[v].clone(),
            cycle: cycle.into_iter().map(|i| g.cm.ids[i].clone()).collect(),
        }),
        (None, Some((limit, depth))) => {
            if limit == 1 {
                Ok(GrowthClass::Const1)
            } else {
                Ok(GrowthClass::Bounded { limit, depth })
            }
        }
        (w, i) => Err(AnalysisError::Inconsistency(format!(
            "growth criterion and iteration disagree for {curve}: witness {:?}, iteration {:?}",
            w.map(|(v, _)| g.cm.ids[v].clone()),
            i
        ))),
    }
}

/// Growth classes of all curves.
pub fn classify_all(sys: &CurveSystem) -> Result<BTreeMap<Id, GrowthClass>, AnalysisError> {
    sys.curves
        .iter()
        .map(|c| Ok((c.id.clone(), classify_growth(sys, &c.id)?)))
        .collect()
}

/// True when the curve lies on a cycle of the support digraph.
pub fn is_periodic(sys: &CurveSystem, curve: &str) -> bool {
    let g = graph(sys);
    match g.cm.ids.iter().position(|id| id == curve) {
        Some(i) => cycle_vertices(&g).contains(&i),
        None => false,
    }
}

/// The completely stable multicurve generated by a periodic curve: the curve
/// together with every class from which it is reachable.
pub fn generated_multicurve(
    sys: &CurveSystem,
    curve: &str,
) -> Result<BTreeSet<Id>, AnalysisError> {
    let g = graph(sys);
    let target = g
        .cm
        .ids
        .iter()
        .position(|id| id == curve)
        .ok_or_else(|| SystemError::UnknownId(curve.to_string()))?;
    if !cycle_vertices(&g).contains(&target) {
        return Err(AnalysisError::NotPeriodic(curve.to_string()));
    }
    let mut out = BTreeSet::new();
    for (i, id) in g.cm.ids.iter().enumerate() {
        if i == target || reachable_from(&g.adj, i).contains(&target) {
            out.insert(id.clone());
        }
    }
    // The set is ancestor-closed, hence stable and pre-stable; verify anyway.
    sub_system(sys, &out)?;
    Ok(out)
}

/// Enumerates the simple cycles (pairwise distinct classes) through `curve`
/// in the edge-instance multigraph; parallel entries yield distinct cycles.
pub fn cycles_through(sys: &CurveSystem, curve: &str) -> Vec<Cycle> {
    let ids: Vec<&str> = sys.curve_ids();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let Some(&start) = index.get(curve) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    // DFS over edge instances, visiting pairwise distinct vertices.
    fn dfs(
        sys: &CurveSystem,
        ids: &[&str],
        index: &BTreeMap<&str, usize>,
        start: usize,
        v: usize,
        visited: &mut Vec<usize>,
        steps: &mut Vec<WalkStep>,
        out: &mut Vec<Cycle>,
    ) {
        for (k, e) in sys.word(ids[v]).iter().enumerate() {
            let w = index[e.target.as_str()];
            let step = WalkStep {
                source: ids[v].to_string(),
                entry: k,
            };
            if w == start {
                let mut steps2 = steps.clone();
                steps2.push(step);
                out.push(Cycle {
                    curves: visited.iter().map(|&i| ids[i].to_string()).collect(),
                    steps: steps2,
                });
            } else if !visited.contains(&w) {
                visited.push(w);
                steps.push(step);
                dfs(sys, ids, index, start, w, visited, steps, out);
                steps.pop();
                visited.pop();
            }
        }
    }
    let mut visited = vec![start];
    let mut steps = Vec::new();
    dfs(
        sys,
        &ids,
        &index,
        start,
        start,
        &mut visited,
        &mut steps,
        &mut out,
    );
    out
}

/// True iff every periodic class lies on exactly one cycle, and that cycle
/// uses exactly one edge instance per step.
pub fn has_unique_cycle(sys: &CurveSystem) -> bool {
    let g = graph(sys);
    for &v in &cycle_vertices(&g) {
        if cycles_through(sys, &g.cm.ids[v]).len() != 1 {
            return false;
        }
    }
    true
}

/// Finds a fully coiling submulticurve: the in-closure of the
/// lexicographically smallest vertex carrying two distinct cycles. The
/// returned set is re-verified to be completely stable with every member
/// coiling inside the sub-system.
pub fn find_cantor_submulticurve(
    sys: &CurveSystem,
) -> Result<Option<BTreeSet<Id>>, AnalysisError> {
    let g = graph(sys);
    let mut seeds: Vec<&Id> = g
        .cm
        .ids
        .iter()
        .filter(|id| cycles_through(sys, id).len() >= 2)
        .collect();
    seeds.sort();
    let Some(seed) = seeds.first() else {
        return Ok(None);
    };
    let idx = g.cm.ids.iter().position(|id| &id == seed).unwrap();
    let mut set = BTreeSet::from([(*seed).clone()]);
    for (i, id) in g.cm.ids.iter().enumerate() {
        if reachable_from(&g.adj, i).contains(&idx) {
            set.insert(id.clone());
        }
    }
    let sub = sub_system(sys, &set)?;
    for id in &set {
        let class = classify_growth(&sub, id)?;
        if !class.is_coiling() {
            return Err(AnalysisError::Inconsistency(format!(
                "candidate fully coiling submulticurve has non-coiling member {id}: {class:?}"
            )));
        }
    }
    Ok(Some(set))
}
