//! JSON forms of valuations, instances and solver results.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, CakeError, Result};
use crate::hardgen::{embed_labeling, hard_valuation, Edge};
use crate::query::QueryCounts;
use crate::scalar::Scalar;
use crate::valuation::{Allocation, DensityValuation, GridValuation, SharedValuation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValuationSpec {
    Density {
        breakpoints: Vec<Scalar>,
        densities: Vec<Scalar>,
    },
    Grid {
        step: Scalar,
        values: Vec<Vec<Scalar>>,
    },
    /// Valuation induced by the labeling of one party's edge set.
    LazyHard {
        n: usize,
        edges: Vec<Edge>,
    },
}

impl ValuationSpec {
    pub fn density(v: &DensityValuation) -> Self {
        ValuationSpec::Density { breakpoints: v.breakpoints().to_vec(), densities: v.densities().to_vec() }
    }

    pub fn grid(v: &GridValuation) -> Self {
        ValuationSpec::Grid { step: v.step(), values: v.rows() }
    }

    pub fn build(&self) -> Result<SharedValuation> {
        Ok(match self {
            ValuationSpec::Density { .. } => Arc::new(self.build_density()?),
            ValuationSpec::Grid { step, values } => Arc::new(GridValuation::from_rows(step, values)?),
            ValuationSpec::LazyHard { n, edges } => {
                let set: BTreeSet<Edge> = edges.iter().copied().collect();
                Arc::new(hard_valuation(Arc::new(embed_labeling(&set, *n)?)))
            }
        })
    }

    pub fn build_density(&self) -> Result<DensityValuation> {
        match self {
            ValuationSpec::Density { breakpoints, densities } => {
                DensityValuation::new(breakpoints.clone(), densities.clone())
            }
            _ => domain("expected a density valuation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub agents: Vec<ValuationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CakeError::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Vec<SharedValuation>> {
        self.agents.iter().map(ValuationSpec::build).collect()
    }

    pub fn build_densities(&self) -> Result<Vec<Arc<DensityValuation>>> {
        self.agents.iter().map(|a| a.build_density().map(Arc::new)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Queries {
    pub value: Vec<u64>,
    pub cut: Vec<u64>,
}

impl From<&QueryCounts> for Queries {
    fn from(q: &QueryCounts) -> Self {
        Queries { value: q.value.clone(), cut: q.cut.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverResult {
    pub division: Vec<Scalar>,
    pub assignment: Vec<usize>,
    pub max_envy: Scalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<Queries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SolverResult {
    pub fn new(alloc: &Allocation, max_envy: &Scalar, queries: Option<&QueryCounts>) -> Self {
        SolverResult {
            division: alloc.division.cuts.clone(),
            assignment: alloc.assignment.clone(),
            max_envy: max_envy.clone(),
            queries: queries.map(Queries::from),
            grid_step: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub promise: Option<u8>,
}

impl From<&CakeError> for ErrorReport {
    fn from(e: &CakeError) -> Self {
        let promise = match e {
            CakeError::PromiseViolation { promise, .. } => Some(*promise),
            _ => None,
        };
        ErrorReport { error: e.kind(), message: e.to_string(), promise }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::valuation::Division;

    #[test]
    fn density_round_trip() {
        let text = r#"{"agents":[{"kind":"density","breakpoints":["0","1/2","1"],"densities":["1/2","3/2"]}]}"#;
        let inst = InstanceFile::parse(text).unwrap();
        let v = inst.build().unwrap();
        assert_eq!(v[0].eval(&rat(0, 1), &rat(1, 2)).unwrap(), rat(1, 4));
        let back = serde_json::to_string(&inst).unwrap();
        assert_eq!(InstanceFile::parse(&back).unwrap(), inst);
    }

    #[test]
    fn result_schema() {
        let alloc = Allocation::new(Division::new(vec![rat(1, 2)]).unwrap(), vec![1, 0]).unwrap();
        let q = QueryCounts { value: vec![3, 4], cut: vec![0, 0] };
        let s = serde_json::to_string(&SolverResult::new(&alloc, &rat(0, 1), Some(&q))).unwrap();
        assert_eq!(
            s,
            r#"{"division":["1/2"],"assignment":[1,0],"maxEnvy":"0/1","queries":{"value":[3,4],"cut":[0,0]}}"#
        );
    }

    #[test]
    fn parse_errors_are_typed() {
        assert!(matches!(InstanceFile::parse("{"), Err(CakeError::Parse(_))));
        let e = CakeError::PromiseViolation { promise: 2, detail: "x".into() };
        assert_eq!(serde_json::to_value(ErrorReport::from(&e)).unwrap()["promise"], 2);
    }
}
