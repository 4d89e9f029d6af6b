//! Parameter documents: a JSON file carries exactly one parameter kind
//! plus optional seed and sample-count defaults. Pair and component
//! indices in files are 1-based to line up with the x1..xk column
//! names; the library works 0-based, so conversion happens here.

use std::path::Path;

use bibeta::{BivariateBetaParams, CorrelatedDirichletParams, MultivariateBetaParams};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bivariate: Option<BivariateDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multivariate: Option<MultivariateDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet: Option<DirichletDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// The six gamma shapes of the bivariate construction: own pairs alpha
/// and beta, shared pair delta. Marginals are Beta(alpha + delta)
/// componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivariateDoc {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub delta: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultivariateDoc {
    pub k: usize,
    pub own: Vec<[f64; 2]>,
    pub shared: Vec<SharedDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedDoc {
    /// 1-based dimension pair, order irrelevant.
    pub pair: [usize; 2],
    pub shapes: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletDoc {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
}

/// The parameter set a document resolved to.
pub enum ParamsKind {
    Bivariate(BivariateBetaParams),
    Multivariate(MultivariateBetaParams),
    Dirichlet(CorrelatedDirichletParams),
}

impl ParamsDocument {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::input(format!("cannot read params file {}: {e}", path.display()))
        })?;
        let doc: ParamsDocument = serde_json::from_str(&text).map_err(|e| {
            Failure::input(format!("cannot parse params file {}: {e}", path.display()))
        })?;
        let kinds = doc.bivariate.is_some() as u8
            + doc.multivariate.is_some() as u8
            + doc.dirichlet.is_some() as u8;
        if kinds != 1 {
            return Err(Failure::input(format!(
                "params file {} must carry exactly one of bivariate, multivariate, dirichlet; \
                 found {kinds}",
                path.display()
            )));
        }
        Ok(doc)
    }

    /// Validate the document's shapes and build the library parameters.
    pub fn resolve(&self) -> Result<ParamsKind, Failure> {
        if let Some(b) = &self.bivariate {
            let p = BivariateBetaParams::new(
                b.alpha[0], b.alpha[1], b.beta[0], b.beta[1], b.delta[0], b.delta[1],
            )?;
            return Ok(ParamsKind::Bivariate(p));
        }
        if let Some(m) = &self.multivariate {
            return Ok(ParamsKind::Multivariate(resolve_multivariate(m)?));
        }
        let d = self.dirichlet.as_ref().expect("load enforced one kind");
        let p = CorrelatedDirichletParams::new(
            d.alpha.clone(),
            d.beta.clone(),
            d.delta.clone(),
        )?;
        Ok(ParamsKind::Dirichlet(p))
    }
}

fn resolve_multivariate(doc: &MultivariateDoc) -> Result<MultivariateBetaParams, Failure> {
    let k = doc.k;
    if doc.own.len() != k {
        return Err(Failure::input(format!(
            "multivariate.own must list one shape pair per dimension: k = {k} but own has {}",
            doc.own.len()
        )));
    }
    let pairs = k * (k - 1) / 2;
    if doc.shared.len() != pairs {
        return Err(Failure::input(format!(
            "multivariate.shared must cover every dimension pair: k = {k} needs {pairs} \
             entries, got {}",
            doc.shared.len()
        )));
    }
    let mut shared = vec![None; pairs];
    for (idx, entry) in doc.shared.iter().enumerate() {
        let [i, j] = entry.pair;
        if i < 1 || j < 1 || i > k || j > k {
            return Err(Failure::input(format!(
                "multivariate.shared[{idx}].pair: indices must be 1-based and at most {k}, \
                 got [{i}, {j}]"
            )));
        }
        if i == j {
            return Err(Failure::input(format!(
                "multivariate.shared[{idx}].pair: needs two distinct dimensions, got [{i}, {j}]"
            )));
        }
        let (lo, hi) = if i < j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        let slot = lo * (2 * k - lo - 1) / 2 + (hi - lo - 1);
        if shared[slot].is_some() {
            return Err(Failure::input(format!(
                "multivariate.shared[{idx}].pair: pair [{i}, {j}] appears more than once"
            )));
        }
        shared[slot] = Some(entry.shapes);
    }
    let shared: Vec<[f64; 2]> = shared.into_iter().map(|s| s.unwrap()).collect();
    Ok(MultivariateBetaParams::new(doc.own.clone(), shared)?)
}
