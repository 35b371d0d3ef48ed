//! Agreement between bias and risk influences of a trained model.

use serde::{Deserialize, Serialize};

use crate::attack::sample_pairs;
use crate::error::Result;
use crate::gcn::{GcnInput, GcnModel};
use crate::graph::{Graph, SimilarityMatrix};
use crate::influence::{influence_all, pearson, FunctionalAux, InfluenceConfig, InfluenceVector, Target};

/// Correlations below this count as conflicting objectives.
pub const INCONFORMITY_THRESHOLD: f64 = 0.3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub inconformity: bool,
    pub bias: InfluenceVector,
    pub risk: InfluenceVector,
}

/// Bias and risk influences of every train node and their Pearson `r`.
/// Risk uses attack pairs sampled with `seed` from `graph`.
pub fn correlation_analysis(
    model: &GcnModel,
    graph: &Graph,
    similarity: &SimilarityMatrix,
    max_edges: usize,
    seed: u64,
    config: &InfluenceConfig,
) -> Result<Correlation> {
    let pairs = sample_pairs(graph, seed, max_edges)?;
    let input = GcnInput::new(graph);
    let aux = FunctionalAux {
        similarity: Some(similarity),
        pairs: Some(&pairs),
    };
    let bias = influence_all(model, &input, Target::Bias, &aux, config)?;
    let risk = influence_all(model, &input, Target::Risk, &aux, config)?;
    let r = pearson(&bias.values, &risk.values)?;
    Ok(Correlation {
        r,
        inconformity: r < INCONFORMITY_THRESHOLD,
        bias,
        risk,
    })
}
