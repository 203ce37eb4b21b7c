//! Data model and validation for a marked sphere carrying a completely stable
//! (pseudo-)multicurve together with its pullback combinatorics.
//!
//! A `CurveSystem` records marked points with their forward dynamics, curve
//! classes with the two pieces they separate, the pieces of the cut sphere
//! with the induced piece map, and for every curve the ordered list of its
//! essential preimage components (the "word"), listed from the left piece side
//! to the right piece side.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// String identifier for points, curves and pieces.
pub type Id = String;

/// A marked point with its image under the covering map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub id: Id,
    /// Id of the image point; the marked set is forward invariant.
    pub image: Id,
    #[serde(default)]
    pub critical: bool,
    /// True for marker points introduced by refinement.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub synthetic: bool,
}

/// An isotopy class of curves in the complement of the marked set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveClass {
    pub id: Id,
    pub left_piece: Id,
    pub right_piece: Id,
    /// Present iff the class is peripheral around a single marked point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peripheral_around: Option<Id>,
}

/// Whether a lift preserves or reverses the orientation convention of its target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Same,
    Reversed,
}

impl Orientation {
    /// Parity composition of two orientation flags.
    pub fn compose(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Same
        } else {
            Orientation::Reversed
        }
    }
}

/// One essential preimage component: it covers `target` with the given degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullbackEntry {
    pub target: Id,
    pub degree: u64,
    #[serde(default)]
    pub orientation: Orientation,
}

/// Classification of a non-essential preimage component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InessentialKind {
    /// Null-homotopic in the complement of the marked set.
    Trivial,
    /// Peripheral around the named marked point.
    Peripheral(Id),
}

/// A non-essential preimage component of some curve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InessentialEntry {
    pub kind: InessentialKind,
    pub degree: u64,
}

/// A connected component of the sphere cut along the multicurve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub id: Id,
    pub boundary: Vec<Id>,
    pub points: Vec<Id>,
    /// Image piece under the induced piece map.
    pub image: Id,
}

/// Metadata attached to a system produced by refinement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementMeta {
    /// Walk length used to form refined classes.
    pub n: usize,
    /// Ids of the synthetic marker points that were added.
    pub markers: Vec<Id>,
    /// Refined class id -> id of the original class it projects to.
    pub projections: BTreeMap<Id, Id>,
}

/// The full combinatorial model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSystem {
    pub degree: u64,
    pub points: Vec<MarkedPoint>,
    pub curves: Vec<CurveClass>,
    pub pieces: Vec<Piece>,
    /// Ordered essential preimage components per curve, left to right.
    pub words: BTreeMap<Id, Vec<PullbackEntry>>,
    /// Non-essential preimage components per target curve. `None` means the
    /// table was not declared; degree-sum validation is then skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inessential: Option<BTreeMap<Id, Vec<InessentialEntry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementMeta>,
}

/// Errors from operations that require a coherent system.
#[derive(Debug, Error)]
pub enum SystemError {
    #[error("validation failed: {0}")]
    Invalid(String),
    #[error("subset not stable: curve {0} has a preimage component of class {1} outside the subset")]
    SubsetNotStable(Id, Id),
    #[error("subset not pre-stable: curve {0} has no preimage component inside the subset")]
    SubsetNotPreStable(Id),
    #[error("inconsistent piece dynamics: pieces {0} and {1} are merged but map to different merged pieces")]
    InconsistentPieceMap(Id, Id),
    #[error("unknown id {0}")]
    UnknownId(Id),
    #[error("not a sphere decomposition: {0}")]
    NotATree(String),
}

/// Outcome of `validate`: all violations plus non-fatal warnings.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.errors.is_empty()
    }
}

impl CurveSystem {
    pub fn curve_ids(&self) -> Vec<&str> {
        self.curves.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn curve_index(&self, id: &str) -> Option<usize> {
        self.curves.iter().position(|c| c.id == id)
    }

    pub fn curve(&self, id: &str) -> Option<&CurveClass> {
        self.curves.iter().find(|c| c.id == id)
    }

    pub fn piece(&self, id: &str) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.id == id)
    }

    pub fn point(&self, id: &str) -> Option<&MarkedPoint> {
        self.points.iter().find(|p| p.id == id)
    }

    pub fn word(&self, id: &str) -> &[PullbackEntry] {
        self.words.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True if any curve class is peripheral (pseudo-multicurve support).
    pub fn has_peripheral(&self) -> bool {
        self.curves.iter().any(|c| c.peripheral_around.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn from_json(json: &str) -> Result<CurveSystem, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Checks every structural invariant and reports all violations at once.
pub fn validate(sys: &CurveSystem) -> ValidationReport {
    let mut rep = ValidationReport::default();

    if sys.degree < 2 {
        rep.errors.push(format!("global degree must be >= 2, got {}", sys.degree));
    }

    // Duplicate ids within each namespace.
    for (kind, ids) in [
        ("point", sys.points.iter().map(|p| &p.id).collect::<Vec<_>>()),
        ("curve", sys.curves.iter().map(|c| &c.id).collect()),
        ("piece", sys.pieces.iter().map(|p| &p.id).collect()),
    ] {
        let mut seen = BTreeSet::new();
        for id in ids {
            if !seen.insert(id) {
                rep.errors.push(format!("duplicate {kind} id {id}"));
            }
        }
    }

    let point_ids: BTreeSet<&str> = sys.points.iter().map(|p| p.id.as_str()).collect();
    let curve_ids: BTreeSet<&str> = sys.curves.iter().map(|c| c.id.as_str()).collect();
    let piece_ids: BTreeSet<&str> = sys.pieces.iter().map(|p| p.id.as_str()).collect();

    // Marked points: forward invariance. Eventual periodicity is automatic for
    // a self-map of a finite set once all images resolve.
    for p in &sys.points {
        if !point_ids.contains(p.image.as_str()) {
            rep.errors
                .push(format!("point {}: image {} does not resolve", p.id, p.image));
        }
    }

    // Curves: side pieces resolve and differ; peripheral point resolves.
    for c in &sys.curves {
        for side in [&c.left_piece, &c.right_piece] {
            if !piece_ids.contains(side.as_str()) {
                rep.errors
                    .push(format!("curve {}: piece {} does not resolve", c.id, side));
            }
        }
        if c.left_piece == c.right_piece {
            rep.errors
                .push(format!("curve {}: left and right piece coincide", c.id));
        }
        if let Some(p) = &c.peripheral_around {
            if !point_ids.contains(p.as_str()) {
                rep.errors
                    .push(format!("curve {}: peripheral point {} does not resolve", c.id, p));
            }
        }
    }

    // Pieces: all references resolve; boundary membership matches curve sides.
    for pc in &sys.pieces {
        for b in &pc.boundary {
            if !curve_ids.contains(b.as_str()) {
                rep.errors
                    .push(format!("piece {}: boundary curve {} does not resolve", pc.id, b));
            }
        }
        for pt in &pc.points {
            if !point_ids.contains(pt.as_str()) {
                rep.errors
                    .push(format!("piece {}: point {} does not resolve", pc.id, pt));
            }
        }
        if !piece_ids.contains(pc.image.as_str()) {
            rep.errors
                .push(format!("piece {}: image {} does not resolve", pc.id, pc.image));
        }
    }
    for c in &sys.curves {
        let carriers: Vec<&str> = sys
            .pieces
            .iter()
            .filter(|p| p.boundary.iter().any(|b| b == &c.id))
            .map(|p| p.id.as_str())
            .collect();
        let expected: BTreeSet<&str> = [c.left_piece.as_str(), c.right_piece.as_str()]
            .into_iter()
            .collect();
        if carriers.iter().copied().collect::<BTreeSet<_>>() != expected {
            rep.errors.push(format!(
                "curve {}: boundary membership {:?} disagrees with sides {:?}",
                c.id, carriers, expected
            ));
        }
    }

    // Each marked point should sit in exactly one piece.
    for p in &sys.points {
        let n = sys
            .pieces
            .iter()
            .filter(|pc| pc.points.iter().any(|q| q == &p.id))
            .count();
        if n != 1 {
            rep.errors
                .push(format!("point {} appears in {} pieces, expected 1", p.id, n));
        }
    }

    // Dual graph must be a tree.
    if sys.pieces.len() != sys.curves.len() + 1 {
        rep.errors.push(format!(
            "dual graph is not a tree: {} pieces vs {} curves (need curves+1 pieces)",
            sys.pieces.len(),
            sys.curves.len()
        ));
    }
    if rep.errors.is_empty() {
        if let Err(e) = dual_tree(sys) {
            rep.errors.push(e.to_string());
        }
    }

    // Words: stability, pre-stability, degree bounds.
    for c in &sys.curves {
        if sys.words.get(&c.id).map_or(true, |w| w.is_empty()) {
            rep.errors
                .push(format!("pre-stability violated: words[{}] is empty", c.id));
        }
    }
    for (src, word) in &sys.words {
        if !curve_ids.contains(src.as_str()) {
            rep.errors.push(format!("words key {src} does not resolve"));
        }
        for (i, e) in word.iter().enumerate() {
            if !curve_ids.contains(e.target.as_str()) {
                rep.errors.push(format!(
                    "stability violated: words[{src}][{i}] targets unknown curve {}",
                    e.target
                ));
            }
            if e.degree == 0 || e.degree > sys.degree {
                rep.errors.push(format!(
                    "words[{src}][{i}]: degree {} outside 1..={}",
                    e.degree, sys.degree
                ));
            }
        }
    }

    // Degree sums, only when the inessential table is declared.
    match &sys.inessential {
        None => rep
            .warnings
            .push("inessential table absent; degree-sum validation skipped".into()),
        Some(table) => {
            for (tgt, entries) in table {
                if !curve_ids.contains(tgt.as_str()) {
                    rep.errors.push(format!("inessential key {tgt} does not resolve"));
                }
                for e in entries {
                    if let InessentialKind::Peripheral(p) = &e.kind {
                        if !point_ids.contains(p.as_str()) {
                            rep.errors.push(format!(
                                "inessential[{tgt}]: peripheral point {p} does not resolve"
                            ));
                        }
                    }
                }
            }
            for c in &sys.curves {
                let essential: u64 = sys
                    .words
                    .values()
                    .flatten()
                    .filter(|e| e.target == c.id)
                    .map(|e| e.degree)
                    .sum();
                let other: u64 = table
                    .get(&c.id)
                    .map(|v| v.iter().map(|e| e.degree).sum())
                    .unwrap_or(0);
                if essential + other != sys.degree {
                    rep.errors.push(format!(
                        "degree sum for {}: essential {} + inessential {} != {}",
                        c.id, essential, other, sys.degree
                    ));
                }
            }
        }
    }

    // Essential / peripheral side conditions need a coherent tree first.
    if rep.errors.is_empty() {
        for c in &sys.curves {
            let (left, right) = side_points(sys, &c.id);
            match &c.peripheral_around {
                None => {
                    if left.len() < 2 || right.len() < 2 {
                        rep.errors.push(format!(
                            "curve {} not essential: sides carry {} and {} marked points",
                            c.id,
                            left.len(),
                            right.len()
                        ));
                    }
                }
                Some(p) => {
                    let singleton =
                        |s: &BTreeSet<String>| s.len() == 1 && s.contains(p.as_str());
                    if !singleton(&left) && !singleton(&right) {
                        rep.errors.push(format!(
                            "curve {} marked peripheral around {p}, but neither side carries exactly that point",
                            c.id
                        ));
                    }
                }
            }
        }
        // Piece complexity: strict for essential-only systems, advisory when
        // peripheral classes make annular/simple pieces legitimate.
        for pc in &sys.pieces {
            if pc.boundary.len() + pc.points.len() < 3 {
                let msg = format!(
                    "piece {} has boundary+points = {} < 3",
                    pc.id,
                    pc.boundary.len() + pc.points.len()
                );
                if sys.has_peripheral() {
                    rep.warnings.push(format!("{msg} (simple piece in a pseudo-multicurve system)"));
                } else {
                    rep.errors.push(msg);
                }
            }
        }
    }

    rep
}

/// The dual tree: per piece, the incident `(curve, opposite piece)` pairs.
#[derive(Clone, Debug, Serialize)]
pub struct DualTree {
    pub adjacency: BTreeMap<Id, Vec<(Id, Id)>>,
}

/// Builds the dual tree, failing when the piece/curve graph is not a tree.
pub fn dual_tree(sys: &CurveSystem) -> Result<DualTree, SystemError> {
    let mut adjacency: BTreeMap<Id, Vec<(Id, Id)>> = BTreeMap::new();
    for p in &sys.pieces {
        adjacency.entry(p.id.clone()).or_default();
    }
    for c in &sys.curves {
        if sys.piece(&c.left_piece).is_none() || sys.piece(&c.right_piece).is_none() {
            return Err(SystemError::UnknownId(c.id.clone()));
        }
        adjacency
            .get_mut(&c.left_piece)
            .unwrap()
            .push((c.id.clone(), c.right_piece.clone()));
        adjacency
            .get_mut(&c.right_piece)
            .unwrap()
            .push((c.id.clone(), c.left_piece.clone()));
    }
    if sys.pieces.len() != sys.curves.len() + 1 {
        return Err(SystemError::NotATree(format!(
            "{} pieces with {} curve edges",
            sys.pieces.len(),
            sys.curves.len()
        )));
    }
    // Connectivity check; with |E| = |V|-1 it also rules out cycles.
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    if let Some(first) = sys.pieces.first() {
        seen.insert(first.id.clone());
        queue.push_back(first.id.clone());
    }
    while let Some(p) = queue.pop_front() {
        for (_, q) in &adjacency[&p] {
            if seen.insert(q.clone()) {
                queue.push_back(q.clone());
            }
        }
    }
    if seen.len() != sys.pieces.len() {
        return Err(SystemError::NotATree("piece graph is disconnected".into()));
    }
    Ok(DualTree { adjacency })
}

/// Marked points on the left and right side of a curve in the dual tree.
pub fn side_points(sys: &CurveSystem, curve: &str) -> (BTreeSet<Id>, BTreeSet<Id>) {
    let c = sys.curve(curve).expect("curve resolves");
    let collect = |start: &Id| -> BTreeSet<Id> {
        let mut seen: BTreeSet<Id> = BTreeSet::new();
        let mut pts = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start.clone());
        while let Some(pid) = queue.pop_front() {
            let piece = sys.piece(&pid).expect("piece resolves");
            pts.extend(piece.points.iter().cloned());
            for b in &piece.boundary {
                if b == curve {
                    continue;
                }
                let bc = sys.curve(b).expect("curve resolves");
                for next in [&bc.left_piece, &bc.right_piece] {
                    if seen.insert(next.clone()) {
                        queue.push_back(next.clone());
                    }
                }
            }
        }
        pts
    };
    (collect(&c.left_piece), collect(&c.right_piece))
}

/// Union-find based merge of pieces glued across curves outside `lambda`.
/// Returns the map original piece id -> merged piece id.
fn merge_pieces(sys: &CurveSystem, lambda: &BTreeSet<Id>) -> BTreeMap<Id, Id> {
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
        if !lambda.contains(&c.id) {
            let (a, b) = (idx[c.left_piece.as_str()], idx[c.right_piece.as_str()]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    // Merged id: sorted member ids joined with "+", or the single id.
    let mut groups: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (i, p) in sys.pieces.iter().enumerate() {
        groups
            .entry(find(&mut parent, i))
            .or_default()
            .push(p.id.as_str());
    }
    let mut out = BTreeMap::new();
    for members in groups.values() {
        let mut sorted = members.clone();
        sorted.sort_unstable();
        let merged = sorted.join("+");
        for m in members {
            out.insert((*m).to_string(), merged.clone());
        }
    }
    out
}

/// Restricts the system to a stable, pre-stable subset of its curves,
/// merging pieces across the removed curves.
pub fn sub_system(sys: &CurveSystem, lambda: &BTreeSet<Id>) -> Result<CurveSystem, SystemError> {
    for id in lambda {
        if sys.curve(id).is_none() {
            return Err(SystemError::UnknownId(id.clone()));
        }
    }
    // Stability: preimage components of lambda-curves must be lambda-classes.
    for c in &sys.curves {
        if lambda.contains(&c.id) {
            continue;
        }
        if let Some(e) = sys.word(&c.id).iter().find(|e| lambda.contains(&e.target)) {
            return Err(SystemError::SubsetNotStable(c.id.clone(), e.target.clone()));
        }
    }
    // Pre-stability within the subset.
    for id in lambda {
        if !sys.word(id).iter().any(|e| lambda.contains(&e.target)) {
            return Err(SystemError::SubsetNotPreStable(id.clone()));
        }
    }

    let merged = merge_pieces(sys, lambda);
    let map = induced_piece_map_with(sys, &merged)?;

    // Assemble merged pieces preserving first-appearance order.
    let mut order: Vec<Id> = Vec::new();
    for p in &sys.pieces {
        let m = &merged[&p.id];
        if !order.contains(m) {
            order.push(m.clone());
        }
    }
    let pieces: Vec<Piece> = order
        .iter()
        .map(|mid| {
            let members: Vec<&Piece> = sys
                .pieces
                .iter()
                .filter(|p| &merged[&p.id] == mid)
                .collect();
            let mut boundary: Vec<Id> = Vec::new();
            let mut points: Vec<Id> = Vec::new();
            for m in &members {
                for b in &m.boundary {
                    if lambda.contains(b) && !boundary.contains(b) {
                        boundary.push(b.clone());
                    }
                }
                for pt in &m.points {
                    if !points.contains(pt) {
                        points.push(pt.clone());
                    }
                }
            }
            Piece {
                id: mid.clone(),
                boundary,
                points,
                image: map[mid].clone(),
            }
        })
        .collect();

    let curves: Vec<CurveClass> = sys
        .curves
        .iter()
        .filter(|c| lambda.contains(&c.id))
        .map(|c| CurveClass {
            id: c.id.clone(),
            left_piece: merged[&c.left_piece].clone(),
            right_piece: merged[&c.right_piece].clone(),
            peripheral_around: c.peripheral_around.clone(),
        })
        .collect();

    let words: BTreeMap<Id, Vec<PullbackEntry>> = sys
        .words
        .iter()
        .filter(|(k, _)| lambda.contains(*k))
        .map(|(k, w)| {
            (
                k.clone(),
                w.iter()
                    .filter(|e| lambda.contains(&e.target))
                    .cloned()
                    .collect(),
            )
        })
        .collect();

    let inessential = sys.inessential.as_ref().map(|table| {
        table
            .iter()
            .filter(|(k, _)| lambda.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    });

    Ok(CurveSystem {
        degree: sys.degree,
        points: sys.points.clone(),
        curves,
        pieces,
        words,
        inessential,
        refinement: None,
    })
}

fn induced_piece_map_with(
    sys: &CurveSystem,
    merged: &BTreeMap<Id, Id>,
) -> Result<BTreeMap<Id, Id>, SystemError> {
    let mut map: BTreeMap<Id, (Id, Id)> = BTreeMap::new(); // merged -> (image merged, witness piece)
    for p in &sys.pieces {
        let src = merged[&p.id].clone();
        let dst = merged[&p.image].clone();
        match map.get(&src) {
            None => {
                map.insert(src, (dst, p.id.clone()));
            }
            Some((prev, witness)) => {
                if prev != &dst {
                    return Err(SystemError::InconsistentPieceMap(
                        witness.clone(),
                        p.id.clone(),
                    ));
                }
            }
        }
    }
    Ok(map.into_iter().map(|(k, (v, _))| (k, v)).collect())
}

/// The piece map induced on the merged pieces of the complement of `lambda`.
/// Fails when two glued pieces map to different merged pieces.
pub fn induced_piece_map(
    sys: &CurveSystem,
    lambda: &BTreeSet<Id>,
) -> Result<BTreeMap<Id, Id>, SystemError> {
    let merged = merge_pieces(sys, lambda);
    induced_piece_map_with(sys, &merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn all_fixture_systems() -> Vec<(&'static str, CurveSystem)> {
        fixtures::ALL
            .iter()
            .map(|(n, _)| (*n, fixtures::load(n)))
            .collect()
    }

    #[test]
    fn fixtures_validate() {
        for (name, sys) in all_fixture_systems() {
            let rep = validate(&sys);
            assert!(rep.pass(), "{name}: {:?}", rep.errors);
        }
    }

    #[test]
    fn emptied_word_fails_pre_stability() {
        let mut sys = fixtures::load("cor55");
        sys.words.get_mut("beta").unwrap().clear();
        let rep = validate(&sys);
        assert!(rep
            .errors
            .iter()
            .any(|e| e.contains("pre-stability") && e.contains("beta")));
    }

    #[test]
    fn dangling_target_fails_stability() {
        let mut sys = fixtures::load("cor55");
        sys.words.get_mut("beta").unwrap()[0].target = "nope".into();
        let rep = validate(&sys);
        assert!(rep.errors.iter().any(|e| e.contains("stability")));
    }

    #[test]
    fn degree_sum_violation_detected() {
        let mut sys = fixtures::load("cor55");
        sys.inessential.as_mut().unwrap().get_mut("beta").unwrap().pop();
        let rep = validate(&sys);
        assert!(rep.errors.iter().any(|e| e.contains("degree sum")));
    }

    #[test]
    fn missing_inessential_only_warns() {
        let mut sys = fixtures::load("cor55");
        sys.inessential = None;
        let rep = validate(&sys);
        assert!(rep.pass());
        assert!(rep.warnings.iter().any(|w| w.contains("degree-sum")));
    }

    #[test]
    fn dual_tree_paths() {
        let sys = fixtures::load("cor55");
        let tree = dual_tree(&sys).unwrap();
        assert_eq!(tree.adjacency.len(), 3);
        assert_eq!(tree.adjacency["P2"].len(), 2);

        let sys = fixtures::load("levy");
        let tree = dual_tree(&sys).unwrap();
        assert_eq!(tree.adjacency.len(), 2);

        let sys = fixtures::load("thm14");
        let tree = dual_tree(&sys).unwrap();
        assert_eq!(tree.adjacency["P1"], vec![("gamma".to_string(), "P2".to_string())]);
    }

    #[test]
    fn cycle_detected_as_non_tree() {
        let mut sys = fixtures::load("cor55");
        // Adding a second curve between P1 and P2 breaks the tree count.
        sys.curves.push(CurveClass {
            id: "extra".into(),
            left_piece: "P1".into(),
            right_piece: "P2".into(),
            peripheral_around: None,
        });
        sys.pieces[0].boundary.push("extra".into());
        sys.pieces[1].boundary.push("extra".into());
        sys.words.insert(
            "extra".into(),
            vec![PullbackEntry {
                target: "extra".into(),
                degree: 2,
                orientation: Orientation::Same,
            }],
        );
        assert!(dual_tree(&sys).is_err() || !validate(&sys).pass());
    }

    #[test]
    fn sub_system_merges_across_removed_curves() {
        let sys = fixtures::load("thm14");
        let lambda: BTreeSet<Id> = ["gamma".to_string()].into();
        let sub = sub_system(&sys, &lambda).unwrap();
        let ids: Vec<&str> = sub.pieces.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["P1", "P2+P3"]);
        assert!(validate(&sub).pass(), "{:?}", validate(&sub).errors);
        assert_eq!(sub.word("gamma").len(), 1);
    }

    #[test]
    fn sub_system_full_subset_is_identity_on_shape() {
        let sys = fixtures::load("cor55");
        let lambda: BTreeSet<Id> = sys.curves.iter().map(|c| c.id.clone()).collect();
        let sub = sub_system(&sys, &lambda).unwrap();
        assert_eq!(sub.curves.len(), sys.curves.len());
        assert_eq!(sub.pieces.len(), sys.pieces.len());
        assert_eq!(sub.words, sys.words);
    }

    #[test]
    fn sub_system_rejects_unstable_subset() {
        let sys = fixtures::load("cantor");
        let lambda: BTreeSet<Id> = ["gamma1".to_string()].into();
        match sub_system(&sys, &lambda) {
            Err(SystemError::SubsetNotStable(c, t)) => {
                assert_eq!((c.as_str(), t.as_str()), ("gamma2", "gamma1"));
            }
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    #[test]
    fn sub_system_idempotent() {
        let sys = fixtures::load("thm14");
        let lambda: BTreeSet<Id> = ["gamma".to_string()].into();
        let once = sub_system(&sys, &lambda).unwrap();
        let twice = sub_system(&once, &lambda).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn induced_map_well_defined_on_swap_quotient() {
        // P2 <-> P3 swap; merging them across a removed curve is consistent.
        let mut sys = fixtures::load("thm14");
        sys.pieces[1].image = "P3".into();
        sys.pieces[2].image = "P2".into();
        // Make point dynamics compatible with the swap (identity is fine,
        // points are not checked by the piece map).
        let lambda: BTreeSet<Id> = ["gamma".to_string()].into();
        let map = induced_piece_map(&sys, &lambda).unwrap();
        assert_eq!(map["P2+P3"], "P2+P3");
        assert_eq!(map["P1"], "P1");
    }

    #[test]
    fn side_points_split() {
        let sys = fixtures::load("cor55");
        let (l, r) = side_points(&sys, "alpha");
        assert_eq!(l.len(), 2);
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn peripheral_fixture_sides() {
        let sys = fixtures::load("coiled-fatou");
        let (l, r) = side_points(&sys, "beta");
        assert!(l.len() == 1 && l.contains("a") || r.len() == 1 && r.contains("a"));
        let rep = validate(&sys);
        assert!(rep.pass(), "{:?}", rep.errors);
    }

    #[test]
    fn json_round_trip() {
        for (name, sys) in all_fixture_systems() {
            let json = sys.to_json();
            let back = CurveSystem::from_json(&json).unwrap();
            assert_eq!(sys, back, "{name}");
        }
    }
}
