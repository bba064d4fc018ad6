//! Serialized results: fit JSON, trace and matrix CSV, run manifests.

use std::collections::BTreeMap;
use std::fmt::Write;

use rbn_core::community::Matrix;
use rbn_core::data::DataSet;
use rbn_core::graph::LikelihoodGraph;
use rbn_core::learn::FitResult;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericAtom {
    pub rel: String,
    pub args: Vec<String>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnknownAtom {
    pub sample: usize,
    pub rel: String,
    pub args: Vec<String>,
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub best_ll: f64,
    pub params: BTreeMap<String, f64>,
    pub numeric_atoms: Vec<NumericAtom>,
    pub restart_lls: Vec<f64>,
    pub trace: Vec<f64>,
    /// MAP values of unobserved atoms, when there are any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub indicators: Vec<UnknownAtom>,
}

impl FitJson {
    pub fn new(graph: &LikelihoodGraph, data: &DataSet, fit: &FitResult) -> FitJson {
        let labels = |args: &[u32]| args.iter().map(|&a| data.label(a).to_string()).collect();
        FitJson {
            best_ll: fit.best_ll,
            params: graph.params().iter().zip(&fit.leaves.params).map(|(p, v)| (p.name.clone(), *v)).collect(),
            numeric_atoms: graph
                .numerics()
                .iter()
                .zip(&fit.leaves.numerics)
                .map(|(l, v)| NumericAtom { rel: l.name.clone(), args: labels(&l.args), value: *v })
                .collect(),
            restart_lls: fit.restart_lls.clone(),
            trace: fit.trace.clone(),
            indicators: graph
                .indicators()
                .iter()
                .zip(&fit.leaves.indicators)
                .map(|(l, v)| UnknownAtom { sample: l.sample, rel: l.name.clone(), args: labels(&l.args), value: *v })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// `step,ll` rows of an accepted-step trace.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("step,ll\n");
    for (i, ll) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i},{ll}");
    }
    s
}

/// A labelled matrix as CSV with a header row.
pub fn matrix_csv(corner: &str, rows: &[String], cols: &[String], m: &Matrix) -> String {
    assert_eq!((rows.len(), cols.len()), (m.rows, m.cols));
    let mut s = String::from(corner);
    for c in cols {
        let _ = write!(s, ",{c}");
    }
    s.push('\n');
    for (r, label) in rows.iter().enumerate() {
        s.push_str(label);
        for c in 0..m.cols {
            let _ = write!(s, ",{}", m.get(r, c));
        }
        s.push('\n');
    }
    s
}

/// A matrix as nested rows for JSON output.
pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows).map(|r| (0..m.cols).map(|c| m.get(r, c)).collect()).collect()
}

/// What was run, with which inputs and settings, and how long each phase
/// took.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub model: Option<String>,
    pub data: Option<String>,
    /// Every setting in effect, defaults included.
    pub overrides: BTreeMap<String, String>,
    pub seed: u64,
    pub out: String,
    /// Seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layouts() {
        assert_eq!(trace_csv(&[-3.0, -2.5]), "step,ll\n0,-3\n1,-2.5\n");
        let mut m = Matrix::zeros(2, 2);
        m.set(1, 0, 0.5);
        let s = matrix_csv("node", &["a".into(), "b".into()], &["C1".into(), "C2".into()], &m);
        assert_eq!(s, "node,C1,C2\na,0,0\nb,0.5,0\n");
        assert_eq!(matrix_rows(&m), [[0.0, 0.0], [0.5, 0.0]]);
    }
}
