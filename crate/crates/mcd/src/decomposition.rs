//! Constructive transforms and certificates: refinement of a curve system to
//! the constant/coiling growth dichotomy, separation reports, renormalization
//! certificates for periodic pieces with coiling boundary, search for a
//! renormalizable piece, and detection of the coiled-Fatou configuration.

use crate::analysis::{
    classify_all, classify_growth, cycles_through, find_cantor_submulticurve,
    generated_multicurve, is_periodic, AnalysisError, GrowthClass,
};
use crate::curve_complex::{
    sub_system, validate, CurveClass, CurveSystem, Id, MarkedPoint, Piece, PullbackEntry,
    RefinementMeta, SystemError,
};
use crate::pullback::{counting_matrix, level_word, power_system, WalkStep};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("system does not validate: {0:?}")]
    Invalid(Vec<String>),
    #[error("piece {0} is not periodic under the piece map")]
    PieceNotPeriodic(Id),
    #[error("input not realizable as a PCF map: {0}")]
    NotRealizable(String),
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

/// Result of refining a system to level-N walk classes.
#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub system: CurveSystem,
    pub n: usize,
    /// True iff every refined class is Const1 or Coiling.
    pub dichotomy: bool,
    pub growth: BTreeMap<Id, GrowthClass>,
    /// Refined classes that stabilize at a bound >= 2 (reported, not hidden).
    pub residual_bounded: Vec<Id>,
}

/// A length-n walk in the entry-instance multigraph.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Walk {
    steps: Vec<WalkStep>,
}

impl Walk {
    fn id(&self) -> Id {
        self.steps
            .iter()
            .map(|s| format!("{}:{}", s.source, s.entry))
            .collect::<Vec<_>>()
            .join("/")
    }

    fn start(&self) -> &str {
        &self.steps[0].source
    }

    fn end<'a>(&self, sys: &'a CurveSystem) -> &'a str {
        let last = self.steps.last().expect("non-empty walk");
        sys.word(&last.source)[last.entry].target.as_str()
    }
}

/// All length-n walks, enumerated by start curve (system order) and then by
/// entry index at each step.
fn enumerate_walks(sys: &CurveSystem, n: usize) -> Vec<Walk> {
    fn extend(sys: &CurveSystem, cur: &str, steps: &mut Vec<WalkStep>, n: usize, out: &mut Vec<Walk>) {
        if steps.len() == n {
            out.push(Walk { steps: steps.clone() });
            return;
        }
        for (j, e) in sys.word(cur).iter().enumerate() {
            steps.push(WalkStep {
                source: cur.to_string(),
                entry: j,
            });
            extend(sys, &e.target, steps, n, out);
            steps.pop();
        }
    }
    let mut out = Vec::new();
    for c in &sys.curves {
        extend(sys, &c.id, &mut Vec::new(), n, &mut out);
    }
    out
}

/// Default refinement depth: the maximum, over non-coiling non-periodic
/// classes gamma and periodic classes alpha reachable from gamma, of the
/// shortest walk length gamma -> alpha; 1 when no such gamma exists.
fn default_depth(sys: &CurveSystem) -> Result<usize, AnalysisError> {
    let cm = counting_matrix(sys);
    let adj: Vec<Vec<usize>> = cm
        .b
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let periodic: Vec<bool> = cm.ids.iter().map(|id| is_periodic(sys, id)).collect();
    let mut n = 1usize;
    for (i, id) in cm.ids.iter().enumerate() {
        if periodic[i] || classify_growth(sys, id)?.is_coiling() {
            continue;
        }
        // BFS distances from i; take the farthest reachable periodic class.
        let mut dist: BTreeMap<usize, usize> = BTreeMap::from([(i, 0)]);
        let mut queue = VecDeque::from([i]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !dist.contains_key(&w) {
                    dist.insert(w, dist[&v] + 1);
                    queue.push_back(w);
                }
            }
        }
        for (&v, &d) in &dist {
            if periodic[v] {
                n = n.max(d);
            }
        }
    }
    Ok(n.max(1))
}

/// Refines a system to its level-N walk classes. Each refined class is a
/// length-N walk; its preimage classes are the shifted walks (drop the first
/// step, append one entry of the end curve's word), so the growth of a
/// refined class equals the growth of its end curve. Curves whose annulus
/// carries no level-N copy contract their dual-tree edge; annuli with several
/// copies gain gap pieces holding one synthetic marker each.
pub fn refine_to_dichotomy(
    sys: &CurveSystem,
    n: Option<usize>,
) -> Result<Refinement, DecompError> {
    let rep = validate(sys);
    if !rep.pass() {
        return Err(DecompError::Invalid(rep.errors));
    }
    let depth = match n {
        Some(d) if d >= 1 => d,
        Some(_) => return Err(DecompError::Inconsistency("depth must be >= 1".into())),
        None => default_depth(sys)?,
    };
    let walks = enumerate_walks(sys, depth);

    // Copies per original annulus, keyed by the end curve of the walk.
    let mut copies: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (w, walk) in walks.iter().enumerate() {
        copies.entry(walk.end(sys)).or_default().push(w);
    }

    // Merge original pieces across curves without copies.
    let contracted: BTreeSet<Id> = sys
        .curves
        .iter()
        .filter(|c| !copies.contains_key(c.id.as_str()))
        .map(|c| c.id.clone())
        .collect();
    let merged = merge_map(sys, &contracted);
    let merged_of = |piece: &str| merged[piece].clone();

    // Merged piece images must be consistent across members.
    let mut merged_image: BTreeMap<Id, Id> = BTreeMap::new();
    for p in &sys.pieces {
        let src = merged_of(&p.id);
        let dst = merged_of(&p.image);
        if let Some(prev) = merged_image.get(&src) {
            if prev != &dst {
                return Err(DecompError::NotRealizable(format!(
                    "merged piece {src} has inconsistent images {prev} and {dst}"
                )));
            }
        } else {
            merged_image.insert(src, dst);
        }
    }

    // Oldest original marked point of a merged piece (system point order).
    let oldest_point = |mid: &str| -> Option<Id> {
        sys.points
            .iter()
            .find(|pt| {
                sys.pieces
                    .iter()
                    .any(|p| merged[&p.id] == mid && p.points.contains(&pt.id))
            })
            .map(|pt| pt.id.clone())
    };

    // Assemble curves, gap pieces and markers annulus by annulus.
    let mut curves: Vec<CurveClass> = vec![
        CurveClass {
            id: String::new(),
            left_piece: String::new(),
            right_piece: String::new(),
            peripheral_around: None,
        };
        walks.len()
    ];
    let mut gap_pieces: Vec<Piece> = Vec::new();
    let mut markers: Vec<MarkedPoint> = Vec::new();
    // merged piece id -> boundary copies attached to it
    let mut merged_boundary: BTreeMap<Id, Vec<Id>> = BTreeMap::new();
    for c in &sys.curves {
        let Some(group) = copies.get(c.id.as_str()) else {
            continue;
        };
        let left = merged_of(&c.left_piece);
        let right = merged_of(&c.right_piece);
        let k = group.len();
        for (i, &w) in group.iter().enumerate() {
            let id = walks[w].id();
            let lp = if i == 0 {
                merged_boundary.entry(left.clone()).or_default().push(id.clone());
                left.clone()
            } else {
                format!("gap:{}:{}", c.id, i)
            };
            let rp = if i == k - 1 {
                merged_boundary.entry(right.clone()).or_default().push(id.clone());
                right.clone()
            } else {
                format!("gap:{}:{}", c.id, i + 1)
            };
            curves[w] = CurveClass {
                id,
                left_piece: lp,
                right_piece: rp,
                peripheral_around: None,
            };
        }
        // Marker image: oldest original point of the merged image of the
        // curve's original left piece (either choice is consistent).
        let image_home = merged_of(&sys.piece(&c.left_piece).expect("piece resolves").image);
        let target_point = oldest_point(&image_home)
            .or_else(|| sys.points.first().map(|p| p.id.clone()))
            .ok_or_else(|| DecompError::Inconsistency("system has no marked points".into()))?;
        let marker_home = merged_of(
            &sys.pieces
                .iter()
                .find(|p| p.points.contains(&target_point))
                .expect("point sits in a piece")
                .id,
        );
        for i in 1..k {
            let marker_id = format!("marker:{}:{}", c.id, i);
            markers.push(MarkedPoint {
                id: marker_id.clone(),
                image: target_point.clone(),
                critical: false,
                synthetic: true,
            });
            gap_pieces.push(Piece {
                id: format!("gap:{}:{}", c.id, i),
                boundary: vec![walks[group[i - 1]].id(), walks[group[i]].id()],
                points: vec![marker_id],
                image: marker_home.clone(),
            });
        }
    }

    // Merged original pieces, in first-appearance order.
    let mut order: Vec<Id> = Vec::new();
    for p in &sys.pieces {
        let m = merged_of(&p.id);
        if !order.contains(&m) {
            order.push(m);
        }
    }
    let mut pieces: Vec<Piece> = order
        .iter()
        .map(|mid| {
            let mut points: Vec<Id> = Vec::new();
            for p in &sys.pieces {
                if &merged_of(&p.id) == mid {
                    for pt in &p.points {
                        if !points.contains(pt) {
                            points.push(pt.clone());
                        }
                    }
                }
            }
            Piece {
                id: mid.clone(),
                boundary: merged_boundary.get(mid).cloned().unwrap_or_default(),
                points,
                image: merged_image[mid].clone(),
            }
        })
        .collect();
    pieces.extend(gap_pieces);

    // Words by the shift rule; the degree and orientation of the appended
    // entry carry over.
    let mut words: BTreeMap<Id, Vec<PullbackEntry>> = BTreeMap::new();
    for walk in &walks {
        let end = walk.end(sys);
        let entries = sys
            .word(end)
            .iter()
            .enumerate()
            .map(|(j, e)| {
                let mut shifted = Walk {
                    steps: walk.steps[1..].to_vec(),
                };
                shifted.steps.push(WalkStep {
                    source: end.to_string(),
                    entry: j,
                });
                PullbackEntry {
                    target: shifted.id(),
                    degree: e.degree,
                    orientation: e.orientation,
                }
            })
            .collect();
        words.insert(walk.id(), entries);
    }

    let mut points = sys.points.clone();
    let marker_ids: Vec<Id> = markers.iter().map(|m| m.id.clone()).collect();
    points.extend(markers);

    let projections: BTreeMap<Id, Id> = walks
        .iter()
        .map(|w| (w.id(), w.start().to_string()))
        .collect();

    let refined = CurveSystem {
        degree: sys.degree,
        points,
        curves,
        pieces,
        words,
        inessential: None,
        refinement: Some(RefinementMeta {
            n: depth,
            markers: marker_ids,
            projections,
        }),
    };
    let rep = validate(&refined);
    if !rep.pass() {
        return Err(DecompError::Inconsistency(format!(
            "refined system does not validate: {:?}",
            rep.errors
        )));
    }

    let growth = classify_all(&refined)?;
    let residual_bounded: Vec<Id> = growth
        .iter()
        .filter(|(_, g)| matches!(g, GrowthClass::Bounded { .. }))
        .map(|(id, _)| id.clone())
        .collect();
    let dichotomy = residual_bounded.is_empty();
    Ok(Refinement {
        system: refined,
        n: depth,
        dichotomy,
        growth,
        residual_bounded,
    })
}

/// Union-find merge of pieces across the given curves; identical to the
/// merging used by `sub_system` (merged ids join members with '+').
fn merge_map(sys: &CurveSystem, across: &BTreeSet<Id>) -> BTreeMap<Id, Id> {
    let n = sys.pieces.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    let idx: BTreeMap<&str, usize> = sys
        .pieces
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.as_str(), i))
        .collect();
    for c in &sys.curves {
        if across.contains(&c.id) {
            let (a, b) = (idx[c.left_piece.as_str()], idx[c.right_piece.as_str()]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (i, p) in sys.pieces.iter().enumerate() {
        groups.entry(find(&mut parent, i)).or_default().push(p.id.as_str());
    }
    let mut out = BTreeMap::new();
    for members in groups.values() {
        let mut sorted = members.clone();
        sorted.sort_unstable();
        let mid = sorted.join("+");
        for m in members {
            out.insert((*m).to_string(), mid.clone());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Separation report
// ---------------------------------------------------------------------------

/// One curve's separation verdict: the Julia pieces on its two sides are
/// disjoint exactly when the curve is coiling.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationRow {
    pub curve: Id,
    pub pieces: (Id, Id),
    pub growth: GrowthClass,
    pub verdict: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationReport {
    /// Whether the analyzed system carries refinement metadata.
    pub refined: bool,
    pub rows: Vec<SeparationRow>,
}

pub fn separation_report(sys: &CurveSystem) -> Result<SeparationReport, DecompError> {
    let rep = validate(sys);
    if !rep.pass() {
        return Err(DecompError::Invalid(rep.errors));
    }
    let rows = sys
        .curves
        .iter()
        .map(|c| {
            let growth = classify_growth(sys, &c.id)?;
            let verdict = if growth.is_coiling() {
                "disjoint"
            } else {
                "touching"
            };
            Ok(SeparationRow {
                curve: c.id.clone(),
                pieces: (c.left_piece.clone(), c.right_piece.clone()),
                growth,
                verdict: verdict.to_string(),
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(SeparationReport {
        refined: sys.refinement.is_some(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Renormalization certificates
// ---------------------------------------------------------------------------

/// Extended combinatorial data of the small map on a periodic piece.
#[derive(Clone, Debug, Serialize)]
pub struct RenormData {
    /// Marked points inside the piece with their images under the return map.
    pub marked_interior: Vec<(Id, Id)>,
    /// One synthetic point per complementary component (one per boundary curve).
    pub synthetic_points: Vec<Id>,
    /// Accumulated covering degree of the tracked periodic copy of each
    /// boundary curve over one period; None when no copy returns.
    pub boundary_degrees: BTreeMap<Id, Option<u64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RenormCertificate {
    pub criterion: String,
    pub piece: Id,
    pub period: u32,
    pub boundary: Vec<(Id, GrowthClass)>,
    pub statement: String,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<RenormData>,
}

/// Period of a piece under the piece map; error when the piece never returns.
pub fn piece_period(sys: &CurveSystem, piece: &str) -> Result<u32, DecompError> {
    let start = sys
        .piece(piece)
        .ok_or_else(|| SystemError::UnknownId(piece.to_string()))?;
    let mut cur = start.image.clone();
    for p in 1..=sys.pieces.len() as u32 {
        if cur == piece {
            return Ok(p);
        }
        cur = sys
            .piece(&cur)
            .ok_or_else(|| SystemError::UnknownId(cur.clone()))?
            .image
            .clone();
    }
    Err(DecompError::PieceNotPeriodic(piece.to_string()))
}

/// Certificate that a periodic piece supports renormalization: present iff
/// every boundary curve of the piece is coiling.
pub fn renormalization_certificate(
    sys: &CurveSystem,
    piece: &str,
) -> Result<Option<RenormCertificate>, DecompError> {
    let period = piece_period(sys, piece)?;
    let pc = sys.piece(piece).expect("checked by piece_period");
    let mut boundary = Vec::new();
    for b in &pc.boundary {
        boundary.push((b.clone(), classify_growth(sys, b)?));
    }
    if boundary.iter().any(|(_, g)| !g.is_coiling()) {
        return Ok(None);
    }
    Ok(Some(RenormCertificate {
        criterion: "renormalization-criterion".into(),
        piece: piece.to_string(),
        period,
        statement: format!(
            "piece {piece} is periodic with period {period} and every boundary \
             curve is coiling; the restriction of the return map is a \
             rational-like map that straightens to a rational map"
        ),
        boundary,
        verified: true,
        data: None,
    }))
}

/// Marked-sphere data of the combinatorial small map on a periodic piece:
/// interior marked points with their return dynamics, one synthetic point per
/// complementary component, and the boundary covering degrees. Unlike
/// `renormalization_certificate`, this does not require coiling boundary.
pub fn combinatorial_renormalization_data(
    sys: &CurveSystem,
    piece: &str,
) -> Result<RenormCertificate, DecompError> {
    let period = piece_period(sys, piece)?;
    let pc = sys.piece(piece).expect("checked by piece_period");
    let mut boundary = Vec::new();
    for b in &pc.boundary {
        boundary.push((b.clone(), classify_growth(sys, b)?));
    }
    let powered = power_system(sys, period);
    let boundary_degrees: BTreeMap<Id, Option<u64>> = pc
        .boundary
        .iter()
        .map(|b| {
            let deg = powered
                .word(b)
                .iter()
                .find(|e| &e.target == b)
                .map(|e| e.degree);
            (b.clone(), deg)
        })
        .collect();
    let marked_interior: Vec<(Id, Id)> = pc
        .points
        .iter()
        .map(|pt| {
            let img = powered.point(pt).expect("point resolves").image.clone();
            (pt.clone(), img)
        })
        .collect();
    let synthetic_points: Vec<Id> = pc.boundary.iter().map(|b| format!("comp:{b}")).collect();
    let all_coiling = boundary.iter().all(|(_, g)| g.is_coiling());
    Ok(RenormCertificate {
        criterion: "renormalization-criterion".into(),
        piece: piece.to_string(),
        period,
        statement: format!(
            "combinatorial small-map data on piece {piece}: each complementary \
             component collapses to one synthetic marked point; boundary \
             degrees track the periodic copy over {period} step(s)"
        ),
        boundary,
        verified: all_coiling,
        data: Some(RenormData {
            marked_interior,
            synthetic_points,
            boundary_degrees,
        }),
    })
}

// ---------------------------------------------------------------------------
// Renormalizable-piece search
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Left,
    Right,
}

/// Searches for a renormalizable piece. Short-circuits through a fully
/// coiling (Cantor) submulticurve when one exists; otherwise runs the
/// side-splitting construction around a periodic coiling curve. Postconditions
/// are re-verified by independent calls, never trusted from construction.
#[allow(clippy::type_complexity)]
pub fn find_renormalizable_piece(
    sys: &CurveSystem,
) -> Result<Option<(BTreeSet<Id>, Id, RenormCertificate)>, DecompError> {
    let rep = validate(sys);
    if !rep.pass() {
        return Err(DecompError::Invalid(rep.errors));
    }
    // Precondition: some coiling class exists.
    let growth = classify_all(sys)?;
    if !growth.values().any(GrowthClass::is_coiling) {
        return Ok(None);
    }

    // Cantor short-circuit: any periodic piece of the Cantor sub-system works.
    if let Some(lambda) = find_cantor_submulticurve(sys)? {
        let sub = sub_system(sys, &lambda)?;
        for p in &sub.pieces {
            if piece_period(&sub, &p.id).is_ok() {
                if let Some(mut cert) = renormalization_certificate(&sub, &p.id)? {
                    cert.criterion = "cantor-renormalization".into();
                    return Ok(Some((lambda, p.id.clone(), cert)));
                }
            }
        }
        return Err(DecompError::Inconsistency(
            "fully coiling submulticurve without a certified periodic piece".into(),
        ));
    }

    // Pick the periodic coiling curve with the shortest cycle, ties broken
    // lexicographically.
    let mut best: Option<(usize, Id, Vec<WalkStep>)> = None;
    for c in &sys.curves {
        if !growth[&c.id].is_coiling() {
            continue;
        }
        let cycles = cycles_through(sys, &c.id);
        let Some(shortest) = cycles.iter().min_by_key(|cy| cy.steps.len()) else {
            continue;
        };
        let key = (shortest.steps.len(), c.id.clone());
        if best
            .as_ref()
            .map_or(true, |(l, id, _)| key < (*l, id.clone()))
        {
            best = Some((shortest.steps.len(), c.id.clone(), shortest.steps.clone()));
        }
    }
    let Some((cycle_len, gamma, cycle_steps)) = best else {
        return Err(DecompError::Inconsistency(
            "coiling class exists but no periodic coiling curve found".into(),
        ));
    };

    // Power the system so gamma is fixed with an orientation-preserving cycle.
    let parity = cycle_steps.iter().fold(
        crate::curve_complex::Orientation::Same,
        |acc, s| acc.compose(sys.word(&s.source)[s.entry].orientation),
    );
    let k = if parity == crate::curve_complex::Orientation::Same {
        cycle_len as u32
    } else {
        2 * cycle_len as u32
    };
    let sysp = power_system(sys, k);

    // The unique fixed entry of gamma (two would mean a double cycle, which
    // the Cantor branch above would have taken).
    let self_entries: Vec<usize> = sysp
        .word(&gamma)
        .iter()
        .enumerate()
        .filter(|(_, e)| e.target == gamma)
        .map(|(j, _)| j)
        .collect();
    let [i_star] = self_entries.as_slice() else {
        return Err(DecompError::Inconsistency(format!(
            "expected exactly one fixed copy of {gamma}, found {}",
            self_entries.len()
        )));
    };
    let i_star = *i_star;

    // Side sets: a divergent entry at index j sits left/right of the periodic
    // copy; every class reachable from its target inherits that side.
    let cm = counting_matrix(&sysp);
    let adj: Vec<Vec<usize>> = cm
        .b
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x > 0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let index: BTreeMap<&str, usize> = cm
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let reach = |start: usize| -> BTreeSet<usize> {
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
    };
    let mut sides: BTreeMap<Id, BTreeSet<Side>> = BTreeMap::new();
    for (j, e) in sysp.word(&gamma).iter().enumerate() {
        if j == i_star {
            continue;
        }
        let side = if j < i_star { Side::Left } else { Side::Right };
        for v in reach(index[e.target.as_str()]) {
            sides.entry(cm.ids[v].clone()).or_default().insert(side);
        }
    }

    // First-divergence cross-check on shallow level words: the side computed
    // from the first divergent step of a copy address must agree with the
    // reachability-derived side set of its end class.
    for depth in 1..=2u32.min(2 * sys.curves.len() as u32) {
        for addr in level_word(&sysp, &gamma, depth) {
            let Some(first_div) = addr
                .steps
                .iter()
                .position(|s| !(s.source == gamma && s.entry == i_star))
            else {
                continue; // the periodic address itself
            };
            let s = addr.steps[first_div].clone();
            if s.source != gamma {
                continue; // divergence below gamma level; covered by reachability
            }
            let side = if s.entry < i_star { Side::Left } else { Side::Right };
            let end = addr.end(&sysp).to_string();
            if !sides.get(&end).is_some_and(|set| set.contains(&side)) {
                return Err(DecompError::NotRealizable(format!(
                    "copy of {end} found on the {side:?} side is not predicted there"
                )));
            }
        }
    }

    // Chosen side: side of the first non-periodic entry of gamma's word.
    let chosen = sysp
        .word(&gamma)
        .iter()
        .enumerate()
        .find(|(j, _)| *j != i_star)
        .map(|(j, _)| if j < i_star { Side::Left } else { Side::Right })
        .unwrap_or(Side::Right);

    // Gamma-star: classes all of whose copies lie on the chosen side.
    let gamma_star: BTreeSet<Id> = sysp
        .curves
        .iter()
        .filter(|c| {
            sides
                .get(&c.id)
                .map_or(true, |set| set.iter().all(|s| *s == chosen))
        })
        .map(|c| c.id.clone())
        .collect();

    // Lambda_gamma and the fixed complementary piece on the opposite side.
    let lambda = generated_multicurve(&sysp, &gamma)?;
    let merged = merge_map(&sysp, &complement(&sysp, &lambda));
    let gc = sysp.curve(&gamma).expect("curve resolves");
    let u_gamma = if chosen == Side::Right {
        merged[&gc.left_piece].clone()
    } else {
        merged[&gc.right_piece].clone()
    };

    // Grand orbit of U_gamma under the induced piece map of the lambda
    // complement: pieces whose forward orbit meets the forward orbit of U.
    let induced = crate::curve_complex::induced_piece_map(&sysp, &lambda)?;
    let orbit = |start: &Id| -> BTreeSet<Id> {
        let mut seen = BTreeSet::from([start.clone()]);
        let mut cur = start.clone();
        loop {
            cur = induced[&cur].clone();
            if !seen.insert(cur.clone()) {
                break;
            }
        }
        seen
    };
    let u_orbit = orbit(&u_gamma);
    let grand_orbit: BTreeSet<Id> = induced
        .keys()
        .filter(|p| !orbit(p).is_disjoint(&u_orbit))
        .cloned()
        .collect();

    // Gamma-prime: gamma-star classes not interior to a grand-orbit piece.
    // A class outside lambda is interior to the merged piece its two sides
    // collapse into; lambda classes bound merged pieces and are never interior.
    let gamma_prime: BTreeSet<Id> = gamma_star
        .iter()
        .filter(|id| {
            if lambda.contains(*id) {
                return true;
            }
            let c = sysp.curve(id).expect("curve resolves");
            let home = &merged[&c.left_piece];
            debug_assert_eq!(home, &merged[&c.right_piece]);
            !grand_orbit.contains(home)
        })
        .cloned()
        .collect();

    // First periodic piece of the gamma-prime sub-system whose boundary is
    // entirely coiling.
    let sub = sub_system(&sysp, &gamma_prime)?;
    for p in &sub.pieces {
        if piece_period(&sub, &p.id).is_err() {
            continue;
        }
        if let Some(cert) = renormalization_certificate(&sub, &p.id)? {
            // Independent re-verification of the postconditions.
            let vrep = validate(&sub);
            let stable = vrep.pass();
            let u_fixed = induced.get(&u_gamma) == Some(&u_gamma);
            let mut lambda_coiling = true;
            for l in &lambda {
                if !classify_growth(&sub, l)?.is_coiling() {
                    lambda_coiling = false;
                }
            }
            if !(stable && u_fixed && lambda_coiling) {
                return Err(DecompError::Inconsistency(format!(
                    "postconditions failed: stable={stable} u_fixed={u_fixed} \
                     lambda_coiling={lambda_coiling}"
                )));
            }
            return Ok(Some((gamma_prime, p.id.clone(), cert)));
        }
    }
    Ok(None)
}

/// The curves NOT in the given subset.
fn complement(sys: &CurveSystem, subset: &BTreeSet<Id>) -> BTreeSet<Id> {
    sys.curves
        .iter()
        .filter(|c| !subset.contains(&c.id))
        .map(|c| c.id.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Coiled Fatou detection
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct CoiledFatouCertificate {
    pub criterion: String,
    /// The fixed critical marked point the peripheral class surrounds.
    pub fixed_point: Id,
    pub alpha: Id,
    pub beta: Id,
    pub statement: String,
    pub verified: bool,
}

/// Detects the coiled-Fatou configuration: an essential class alpha whose
/// preimage contains a copy of alpha, together with a peripheral class beta
/// around a fixed critical point whose preimage also contains a copy of
/// alpha.
pub fn detect_coiled_fatou(sys: &CurveSystem) -> Option<CoiledFatouCertificate> {
    for beta in &sys.curves {
        let Some(a) = &beta.peripheral_around else {
            continue;
        };
        let pt = sys.point(a)?;
        if !(pt.critical && pt.image == *a) {
            continue;
        }
        for alpha in &sys.curves {
            if alpha.peripheral_around.is_some() {
                continue;
            }
            let self_copy = sys.word(&alpha.id).iter().any(|e| e.target == alpha.id);
            let beta_copy = sys.word(&beta.id).iter().any(|e| e.target == alpha.id);
            if self_copy && beta_copy {
                return Some(CoiledFatouCertificate {
                    criterion: "coiled-fatou".into(),
                    fixed_point: a.clone(),
                    alpha: alpha.id.clone(),
                    beta: beta.id.clone(),
                    statement: format!(
                        "the preimage of {} contains a copy of itself and a copy \
                         peripheral to the fixed critical point {}; the fixed \
                         Fatou domain at {} is a Jordan domain with closure \
                         disjoint from the small Julia sets",
                        alpha.id, a, a
                    ),
                    verified: true,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::leading_eigenvalue;
    use crate::fixtures;
    use crate::pullback::thurston_matrix;

    #[test]
    fn refine_chain_reaches_dichotomy() {
        let sys = fixtures::load("chain");
        let r = refine_to_dichotomy(&sys, None).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.system.curves.len(), 6);
        assert!(r.dichotomy);
        assert!(r.residual_bounded.is_empty());
        assert!(r.growth.values().all(|g| *g == GrowthClass::Const1));
        // gamma itself was Bounded(2); its walk classes are now Const1.
        assert_eq!(r.growth["gamma:0/v:0"], GrowthClass::Const1);
        assert_eq!(r.growth["gamma:0/v:1"], GrowthClass::Const1);
        assert!(validate(&r.system).pass());
        assert_eq!(r.system.pieces.len(), 7);
    }

    #[test]
    fn refine_levy_is_trivial() {
        let r = refine_to_dichotomy(&fixtures::load("levy"), None).unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.system.curves.len(), 1);
        assert_eq!(r.growth["gamma:0"], GrowthClass::Const1);
        assert!(r.dichotomy);
    }

    #[test]
    fn refine_cor55_keeps_coiling_over_beta() {
        let sys = fixtures::load("cor55");
        let r = refine_to_dichotomy(&sys, None).unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.system.curves.len(), 4);
        assert!(r.dichotomy);
        // The class over beta (the middle copy) is coiling; classes over
        // alpha are constant.
        assert!(r.growth["beta:1"].is_coiling());
        assert_eq!(r.growth["alpha:0"], GrowthClass::Const1);
        assert_eq!(r.growth["beta:0"], GrowthClass::Const1);
        assert_eq!(r.growth["beta:2"], GrowthClass::Const1);
        assert!(validate(&r.system).pass());
    }

    #[test]
    fn refinement_preserves_coiling_projections_and_lambda() {
        for (name, _) in fixtures::ALL {
            if name == "coiled-fatou" {
                continue; // peripheral classes are not refined
            }
            let sys = fixtures::load(name);
            let input_coiling: BTreeSet<Id> = sys
                .curves
                .iter()
                .filter(|c| classify_growth(&sys, &c.id).unwrap().is_coiling())
                .map(|c| c.id.clone())
                .collect();
            let r = refine_to_dichotomy(&sys, None).unwrap();
            let meta = r.system.refinement.as_ref().unwrap();
            let refined_proj: BTreeSet<Id> = r
                .growth
                .iter()
                .filter(|(_, g)| g.is_coiling())
                .map(|(id, _)| meta.projections[id].clone())
                .collect();
            assert_eq!(refined_proj, input_coiling, "{name}");

            let l_in = leading_eigenvalue(&thurston_matrix(&sys)).unwrap();
            let l_out = leading_eigenvalue(&thurston_matrix(&r.system)).unwrap();
            assert!((l_in - l_out).abs() < 1e-6, "{name}: {l_in} vs {l_out}");
        }
    }

    #[test]
    fn refinement_covers_all_input_classes() {
        for name in ["cor55", "levy", "cantor", "chain", "thm14"] {
            let sys = fixtures::load(name);
            let r = refine_to_dichotomy(&sys, None).unwrap();
            let meta = r.system.refinement.as_ref().unwrap();
            let projected: BTreeSet<&Id> = meta.projections.values().collect();
            for c in &sys.curves {
                assert!(projected.contains(&c.id), "{name}: {} not covered", c.id);
            }
        }
    }

    #[test]
    fn separation_verdicts() {
        let rep = separation_report(&fixtures::load("cor55")).unwrap();
        let verdict = |curve: &str| {
            rep.rows
                .iter()
                .find(|r| r.curve == curve)
                .unwrap()
                .verdict
                .clone()
        };
        assert_eq!(verdict("beta"), "disjoint");
        assert_eq!(verdict("alpha"), "touching");
        assert!(!rep.refined);

        let rep = separation_report(&fixtures::load("levy")).unwrap();
        assert_eq!(rep.rows[0].verdict, "touching");

        let rep = separation_report(&fixtures::load("cantor")).unwrap();
        assert!(rep.rows.iter().all(|r| r.verdict == "disjoint"));
    }

    #[test]
    fn renorm_certificate_examples() {
        let e = fixtures::load("thm14");
        let cert = renormalization_certificate(&e, "P1").unwrap().unwrap();
        assert_eq!(cert.period, 1);
        assert_eq!(cert.boundary.len(), 1);
        assert!(cert.boundary[0].1.is_coiling());
        assert!(cert.verified);

        let a = fixtures::load("cor55");
        assert!(renormalization_certificate(&a, "P2").unwrap().is_none());
        assert!(renormalization_certificate(&a, "P1").unwrap().is_none());

        // Every periodic piece of the Cantor sub-system is certified.
        let c = fixtures::load("cantor");
        let lambda = find_cantor_submulticurve(&c).unwrap().unwrap();
        let sub = sub_system(&c, &lambda).unwrap();
        for p in &sub.pieces {
            if piece_period(&sub, &p.id).is_ok() {
                assert!(
                    renormalization_certificate(&sub, &p.id).unwrap().is_some(),
                    "{}",
                    p.id
                );
            }
        }
    }

    #[test]
    fn combinatorial_data_examples() {
        let e = fixtures::load("thm14");
        let cert = combinatorial_renormalization_data(&e, "P1").unwrap();
        let data = cert.data.unwrap();
        assert_eq!(data.synthetic_points.len(), 1);
        assert_eq!(data.boundary_degrees["gamma"], Some(2));
        assert_eq!(cert.period, 1);

        let a = fixtures::load("cor55");
        let cert = combinatorial_renormalization_data(&a, "P1").unwrap();
        let data = cert.data.unwrap();
        assert_eq!(data.synthetic_points, vec!["comp:alpha"]);
        assert_eq!(data.boundary_degrees["alpha"], Some(2));
        assert!(!cert.verified); // alpha is not coiling
    }

    #[test]
    fn find_renormalizable_piece_thm14() {
        let sys = fixtures::load("thm14");
        let (gp, piece, cert) = find_renormalizable_piece(&sys).unwrap().unwrap();
        assert_eq!(gp, BTreeSet::from(["gamma".to_string(), "alpha".to_string()]));
        assert_eq!(piece, "P1");
        assert_eq!(cert.period, 1);
        assert!(cert.verified);
        assert_eq!(cert.criterion, "renormalization-criterion");
    }

    #[test]
    fn find_renormalizable_piece_cantor_short_circuit() {
        let sys = fixtures::load("cantor");
        let (gp, piece, cert) = find_renormalizable_piece(&sys).unwrap().unwrap();
        assert_eq!(gp, BTreeSet::from(["gamma1".to_string(), "gamma2".to_string()]));
        assert_eq!(cert.criterion, "cantor-renormalization");
        assert!(cert.verified);
        assert!(sys.piece(&piece).is_some() || piece.contains('+'));
    }

    #[test]
    fn find_renormalizable_piece_absent_without_coiling() {
        assert!(find_renormalizable_piece(&fixtures::load("levy"))
            .unwrap()
            .is_none());
    }

    #[test]
    fn coiled_fatou_detection() {
        let f = fixtures::load("coiled-fatou");
        let cert = detect_coiled_fatou(&f).unwrap();
        assert_eq!(cert.fixed_point, "a");
        assert_eq!(cert.alpha, "alpha");
        assert_eq!(cert.beta, "beta");
        assert!(cert.verified);

        assert!(detect_coiled_fatou(&fixtures::load("cor55")).is_none());

        // Retargeting beta's entry away from alpha kills the configuration.
        let mut broken = fixtures::load("coiled-fatou");
        broken.words.get_mut("beta").unwrap()[0].target = "beta".into();
        assert!(detect_coiled_fatou(&broken).is_none());
    }
}
