//! Aggregated analysis report: everything the `analyze` command prints,
//! assembled from the individual passes and serialized as deterministic JSON
//! (all maps are ordered).

use crate::analysis::{
    classify_all, find_cantor_submulticurve, find_levy_cycle, irreducible_components,
    is_obstruction, Cycle, GrowthClass, IrreducibleComponent,
};
use crate::curve_complex::{validate, CurveSystem, Id, ValidationReport};
use crate::decomposition::{
    detect_coiled_fatou, separation_report, CoiledFatouCertificate, DecompError, SeparationReport,
};
use crate::pullback::{counting_matrix, thurston_matrix, CountingMatrix, ThurstonMatrix};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub validation: ValidationReport,
    pub degree: u64,
    pub curves: Vec<Id>,
    pub counting_matrix: CountingMatrix,
    pub thurston_matrix: ThurstonMatrix,
    /// Leading eigenvalue of the full transition matrix.
    pub lambda: f64,
    pub components: Vec<IrreducibleComponent>,
    pub obstructed: bool,
    pub levy_cycle: Option<Cycle>,
    pub growth: BTreeMap<Id, GrowthClass>,
    pub cantor_submulticurve: Option<Vec<Id>>,
    pub separation: SeparationReport,
    pub coiled_fatou: Option<CoiledFatouCertificate>,
}

/// Runs every analysis pass on a validated system. Validation failures are
/// returned as an error carrying the individual violations.
pub fn analyze(sys: &CurveSystem) -> Result<AnalyzeReport, DecompError> {
    let validation = validate(sys);
    if !validation.pass() {
        return Err(DecompError::Invalid(validation.errors));
    }
    let subset: BTreeSet<Id> = sys.curves.iter().map(|c| c.id.clone()).collect();
    let (obstructed, lambda) = is_obstruction(sys, &subset)?;
    Ok(AnalyzeReport {
        validation,
        degree: sys.degree,
        curves: sys.curves.iter().map(|c| c.id.clone()).collect(),
        counting_matrix: counting_matrix(sys),
        thurston_matrix: thurston_matrix(sys),
        lambda,
        components: irreducible_components(sys)?,
        obstructed,
        levy_cycle: find_levy_cycle(sys),
        growth: classify_all(sys)?,
        cantor_submulticurve: find_cantor_submulticurve(sys)?
            .map(|s| s.into_iter().collect()),
        separation: separation_report(sys)?,
        coiled_fatou: detect_coiled_fatou(sys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn analyze_is_deterministic_and_complete() {
        let sys = fixtures::load("cor55");
        let a = analyze(&sys).unwrap();
        let b = analyze(&sys).unwrap();
        let ja = serde_json::to_string_pretty(&a).unwrap();
        let jb = serde_json::to_string_pretty(&b).unwrap();
        assert_eq!(ja, jb);
        assert!((a.lambda - 0.5).abs() < 1e-9);
        assert!(!a.obstructed);
        assert_eq!(a.curves.len(), 2);
        assert!(a.levy_cycle.is_none());
        assert!(a.cantor_submulticurve.is_none());
    }

    #[test]
    fn analyze_reports_each_fixture_signature() {
        let levy = analyze(&fixtures::load("levy")).unwrap();
        assert!(levy.obstructed);
        assert!(levy.levy_cycle.is_some());

        let cantor = analyze(&fixtures::load("cantor")).unwrap();
        assert!(cantor.cantor_submulticurve.is_some());

        let cf = analyze(&fixtures::load("coiled-fatou")).unwrap();
        assert!(cf.coiled_fatou.is_some());
    }

    #[test]
    fn analyze_rejects_invalid_systems() {
        let mut sys = fixtures::load("cor55");
        sys.words.clear();
        assert!(matches!(analyze(&sys), Err(DecompError::Invalid(_))));
    }
}
