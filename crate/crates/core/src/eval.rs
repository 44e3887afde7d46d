//! Euclidean-distance loss between transported and target endpoints, and the
//! method × dataset result table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{DatasetKind, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::relativity::norm;
use crate::sampling::{sample_batch, Integrator, SamplerConfig};
use crate::training::{Method, TrainedModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    /// Mean distance between `generated[i]` and `target[i]`.
    #[default]
    Paired,
    /// Mean distance from each generated point to its nearest target.
    Chamfer,
}

impl std::str::FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired" => Ok(LossMode::Paired),
            "chamfer" => Ok(LossMode::Chamfer),
            _ => Err(Error::InvalidConfig(format!("unknown loss mode `{s}` (paired|chamfer)"))),
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    norm(&d)
}

pub fn euclidean_distance_loss(generated: &[Vec<f64>], target: &[Vec<f64>], mode: LossMode) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::Empty("generated set".into()));
    }
    if target.is_empty() {
        return Err(Error::Empty("target set".into()));
    }
    let total: f64 = match mode {
        LossMode::Paired => {
            if generated.len() != target.len() {
                return Err(Error::LengthMismatch { left: generated.len(), right: target.len() });
            }
            generated.iter().zip(target).map(|(g, t)| distance(g, t)).sum()
        }
        LossMode::Chamfer => generated
            .par_iter()
            .map(|g| target.iter().map(|t| distance(g, t)).fold(f64::INFINITY, f64::min))
            .collect::<Vec<_>>()
            .iter()
            .sum(),
    };
    Ok(total / generated.len() as f64)
}

/// Splits trajectories into training and held-out parts; the last 20% by
/// index are held out.
pub fn split_train_eval(data: &[TrajectoryRecord]) -> (Vec<TrajectoryRecord>, Vec<TrajectoryRecord>) {
    let mut sorted: Vec<TrajectoryRecord> = data.to_vec();
    sorted.sort_by_key(|r| r.index);
    let n_eval = data.len() / 5;
    let held = sorted.split_off(data.len() - n_eval);
    (sorted, held)
}

/// Transports held-out sources with `model` and scores the endpoints
/// against the simulated ones (paired by index) or the whole target set.
pub fn evaluate_model(
    model: &TrainedModel,
    held_out: &[TrajectoryRecord],
    sc: &SamplerConfig,
    mode: LossMode,
    integrator: Integrator,
) -> Result<f64> {
    let sources: Vec<Vec<f64>> = held_out.iter().map(|r| r.start().x.clone()).collect();
    let targets: Vec<Vec<f64>> = held_out.iter().map(|r| r.end().x.clone()).collect();
    let mut sc = sc.clone();
    sc.duration = model.duration;
    let paths = sample_batch(model, &sources, &sc, integrator)?;
    let generated: Vec<Vec<f64>> = paths.iter().map(|p| p.endpoint().to_vec()).collect();
    euclidean_distance_loss(&generated, &targets, mode)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub dataset: DatasetKind,
    pub method: Method,
    /// In distance units.
    pub loss: f64,
    pub n_samples: usize,
    pub m: usize,
    pub seed: u64,
    pub mode: LossMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub commit: Option<String>,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub unit: String,
    pub cells: Vec<EvalCell>,
    /// Methods per dataset ordered from lowest to highest loss.
    pub ranking: BTreeMap<String, Vec<Method>>,
    /// Datasets with at least one method lacking a cell.
    pub missing: Vec<String>,
    pub meta: ReportMeta,
}

/// Published reference losses, rows ordered as [`Method::ALL`] and columns
/// as [`DatasetKind::ALL`].
pub const REFERENCE_LOSSES: [[f64; 3]; 3] = [[2.146, 5.853, 1.666], [2.048, 5.793, 1.578], [0.509, 0.714, 0.124]];

pub const REPORT_SCHEMA_VERSION: u32 = 1;

impl EvalReport {
    pub fn get(&self, dataset: DatasetKind, method: Method) -> Option<&EvalCell> {
        self.cells.iter().find(|c| c.dataset == dataset && c.method == method)
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// Plain-text table: methods down, datasets across. The best value in a
    /// column is wrapped as `**x**`, the runner-up as `_x_`; missing cells
    /// print as `-`.
    pub fn render_table(&self, with_reference: bool) -> String {
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("Method".to_string())
            .chain(DatasetKind::ALL.iter().map(|d| d.title().to_string()))
            .collect()];
        for method in Method::ALL {
            let mut row = vec![method.title().to_string()];
            for dataset in DatasetKind::ALL {
                let text = match self.get(dataset, method) {
                    None => "-".to_string(),
                    Some(cell) => {
                        let rank = self.ranking[dataset.as_str()].iter().position(|m| *m == method);
                        match rank {
                            Some(0) => format!("**{:.3}**", cell.loss),
                            Some(1) => format!("_{:.3}_", cell.loss),
                            _ => format!("{:.3}", cell.loss),
                        }
                    }
                };
                row.push(text);
            }
            rows.push(row);
        }
        if with_reference {
            for (i, method) in Method::ALL.iter().enumerate() {
                let mut row = vec![format!("{} (ref)", method.title())];
                row.extend(REFERENCE_LOSSES[i].iter().map(|v| format!("{v:.3}")));
                rows.push(row);
            }
        }
        let widths: Vec<usize> =
            (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let _ = writeln!(out, "| {} |", rule.join(" | "));
            }
        }
        out
    }
}

/// SHA-256 of an arbitrary serializable configuration, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects cells into a report. Later duplicates of a `(dataset, method)`
/// pair replace earlier ones.
pub fn make_report(cells: Vec<EvalCell>, meta: ReportMeta) -> Result<EvalReport> {
    if cells.is_empty() {
        return Err(Error::Empty("evaluation cells".into()));
    }
    let mut unique: Vec<EvalCell> = Vec::new();
    for cell in cells {
        if !(cell.loss.is_finite() && cell.loss >= 0.0) {
            return Err(Error::NonFinite(format!("loss for {} / {}", cell.dataset, cell.method)));
        }
        match unique.iter_mut().find(|c| c.dataset == cell.dataset && c.method == cell.method) {
            Some(slot) => *slot = cell,
            None => unique.push(cell),
        }
    }
    unique.sort_by_key(|c| (DatasetKind::ALL.iter().position(|d| *d == c.dataset), Method::ALL.iter().position(|m| *m == c.method)));
    let mut ranking = BTreeMap::new();
    let mut missing = Vec::new();
    for dataset in DatasetKind::ALL {
        let mut column: Vec<&EvalCell> = unique.iter().filter(|c| c.dataset == dataset).collect();
        if column.len() < Method::ALL.len() {
            missing.push(dataset.as_str().to_string());
        }
        column.sort_by(|a, b| a.loss.total_cmp(&b.loss));
        ranking.insert(dataset.as_str().to_string(), column.iter().map(|c| c.method).collect());
    }
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        unit: "du".into(),
        cells: unique,
        ranking,
        missing,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec<f64>> {
        v.iter().map(|&(a, b)| vec![a, b]).collect()
    }

    fn cell(dataset: DatasetKind, method: Method, loss: f64) -> EvalCell {
        EvalCell { dataset, method, loss, n_samples: 10, m: 100, seed: 0, mode: LossMode::Paired }
    }

    fn meta() -> ReportMeta {
        ReportMeta { commit: None, config_hash: "0".into() }
    }

    #[test]
    fn loss_examples() {
        let a = pts(&[(0.0, 0.0), (1.0, 2.0)]);
        assert_eq!(euclidean_distance_loss(&a, &a, LossMode::Paired).unwrap(), 0.0);
        assert_eq!(euclidean_distance_loss(&a, &a, LossMode::Chamfer).unwrap(), 0.0);
        assert_eq!(euclidean_distance_loss(&pts(&[(0.0, 0.0)]), &pts(&[(3.0, 4.0)]), LossMode::Paired).unwrap(), 5.0);
        let chamfer = euclidean_distance_loss(&pts(&[(0.0, 0.0)]), &pts(&[(1.0, 0.0), (5.0, 0.0)]), LossMode::Chamfer);
        assert_eq!(chamfer.unwrap(), 1.0);
    }

    #[test]
    fn loss_errors() {
        let a = pts(&[(0.0, 0.0)]);
        let b = pts(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(euclidean_distance_loss(&a, &b, LossMode::Paired), Err(Error::LengthMismatch { .. })));
        assert!(euclidean_distance_loss(&a, &b, LossMode::Chamfer).is_ok());
        assert!(matches!(euclidean_distance_loss(&[], &b, LossMode::Chamfer), Err(Error::Empty(_))));
        assert!(matches!(euclidean_distance_loss(&a, &[], LossMode::Paired), Err(Error::Empty(_))));
    }

    #[test]
    fn paired_loss_depends_on_order() {
        let g = pts(&[(0.0, 0.0), (4.0, 0.0)]);
        let t = pts(&[(0.0, 0.0), (4.0, 0.0)]);
        let swapped = pts(&[(4.0, 0.0), (0.0, 0.0)]);
        assert_eq!(euclidean_distance_loss(&g, &t, LossMode::Paired).unwrap(), 0.0);
        assert_eq!(euclidean_distance_loss(&swapped, &t, LossMode::Paired).unwrap(), 4.0);
        assert_eq!(euclidean_distance_loss(&swapped, &t, LossMode::Chamfer).unwrap(), 0.0);
    }

    fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 1..12)
    }

    proptest! {
        #[test]
        fn chamfer_ignores_permutations(g in cloud(), t in cloud(), rot in 0usize..12) {
            let base = euclidean_distance_loss(&g, &t, LossMode::Chamfer).unwrap();
            let mut g2 = g.clone();
            g2.reverse();
            let mut t2 = t.clone();
            let k = rot % t2.len();
            t2.rotate_left(k);
            let permuted = euclidean_distance_loss(&g2, &t2, LossMode::Chamfer).unwrap();
            prop_assert!((base - permuted).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn translation_invariance(g in cloud(), shift in prop::collection::vec(-50.0..50.0f64, 2), mode in prop_oneof![Just(LossMode::Paired), Just(LossMode::Chamfer)]) {
            let t: Vec<Vec<f64>> = g.iter().rev().map(|p| vec![p[1], p[0]]).collect();
            let base = euclidean_distance_loss(&g, &t, mode).unwrap();
            let mv = |s: &[Vec<f64>]| -> Vec<Vec<f64>> { s.iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect() };
            let moved = euclidean_distance_loss(&mv(&g), &mv(&t), mode).unwrap();
            prop_assert!((base - moved).abs() <= 1e-12 * (1.0 + base) * 100.0);
        }

        #[test]
        fn scaling_is_linear(g in cloud(), k in prop_oneof![Just(0.5), Just(2.0), Just(4.0), Just(0.25)]) {
            let t: Vec<Vec<f64>> = g.iter().map(|p| vec![p[0] * 0.5 - 1.0, p[1] + 3.0]).collect();
            let base = euclidean_distance_loss(&g, &t, LossMode::Paired).unwrap();
            let sc = |s: &[Vec<f64>]| -> Vec<Vec<f64>> { s.iter().map(|p| vec![p[0] * k, p[1] * k]).collect() };
            let scaled = euclidean_distance_loss(&sc(&g), &sc(&t), LossMode::Paired).unwrap();
            prop_assert_eq!(scaled, k * base);
        }
    }

    #[test]
    fn split_holds_out_last_fifth() {
        let data: Vec<TrajectoryRecord> = (0..10).rev().map(|i| TrajectoryRecord { index: i, steps: vec![] }).collect();
        let (train, held) = split_train_eval(&data);
        assert_eq!(train.iter().map(|r| r.index).collect::<Vec<_>>(), (0..8).collect::<Vec<_>>());
        assert_eq!(held.iter().map(|r| r.index).collect::<Vec<_>>(), vec![8, 9]);
    }

    #[test]
    fn report_marks_best_in_column() {
        let report = make_report(
            vec![cell(DatasetKind::Onedot, Method::O1, 2.0), cell(DatasetKind::Onedot, Method::Form, 0.5)],
            meta(),
        )
        .unwrap();
        assert_eq!(report.ranking["onedot"], vec![Method::Form, Method::O1]);
        let table = report.render_table(false);
        assert!(table.contains("**0.500**"));
        assert!(table.contains("_2.000_"));
        assert!(!report.is_complete());
        assert_eq!(report.missing.len(), 3);
    }

    #[test]
    fn full_grid_renders_nine_cells() {
        let mut cells = Vec::new();
        for (i, m) in Method::ALL.iter().enumerate() {
            for (j, d) in DatasetKind::ALL.iter().enumerate() {
                cells.push(cell(*d, *m, REFERENCE_LOSSES[i][j]));
            }
        }
        let report = make_report(cells, meta()).unwrap();
        assert!(report.is_complete());
        let table = report.render_table(false);
        let numeric = table.matches('.').count();
        assert_eq!(numeric, 9);
        assert_eq!(table.matches("**").count(), 6);
        for best in ["**0.509**", "**0.714**", "**0.124**", "_2.048_", "_5.793_", "_1.578_"] {
            assert!(table.contains(best), "{best}");
        }
        assert_eq!(report.render_table(true).lines().count(), 2 + 3 + 3);
    }

    #[test]
    fn report_rejects_bad_cells() {
        assert!(make_report(vec![], meta()).is_err());
        assert!(make_report(vec![cell(DatasetKind::Spiral, Method::O1, f64::NAN)], meta()).is_err());
    }

    #[test]
    fn config_hash_is_stable() {
        let a = config_hash(&vec![1, 2, 3]).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_hash(&vec![1, 2, 3]).unwrap());
        assert_ne!(a, config_hash(&vec![1, 2]).unwrap());
    }
}
