//! End-to-end two-sample test on a pair of observed graphs: embed both,
//! optionally equalize estimation noise, align, pool, and run the
//! permutation test. This is the path the command-line `test` subcommand
//! drives; the pieces are all public for callers who want to intervene
//! between stages.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::embedding::{ase, select_dimension, variance_correct};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::rng::RngSeed;
use crate::sim::{align_pair, Alignment};
use crate::stats::{ksample_transform, permutation_test, MgcScale, StatKind, TestResult};

/// How the embedding dimension is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionSpec {
    Fixed(usize),
    /// Profile-likelihood elbow on each graph's full singular spectrum;
    /// the smaller of the two selections is used for both sides.
    Auto,
}

impl DimensionSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(DimensionSpec::Auto);
        }
        match s.parse::<usize>() {
            Ok(d) if d >= 1 => Ok(DimensionSpec::Fixed(d)),
            _ => Err(Error::Config(format!(
                "embedding dimension must be 'auto' or a positive integer, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub dimension: DimensionSpec,
    pub alignment: Alignment,
    pub stat: StatKind,
    pub permutations: usize,
    pub alpha: f64,
    /// Inflate the larger graph's embedding noise to match the smaller one.
    pub variance_correction: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            dimension: DimensionSpec::Fixed(3),
            alignment: Alignment::Otp,
            stat: StatKind::Mgc,
            permutations: 999,
            alpha: 0.05,
            variance_correction: false,
        }
    }
}

/// Outcome of the full pipeline on one pair of graphs.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Dimension the test actually ran at.
    pub dimension: usize,
    /// Per-graph elbow selections when the dimension was chosen
    /// automatically.
    pub selected: Option<(usize, usize)>,
    pub test: TestResult,
    pub alpha: f64,
    /// Decision at `alpha`: true means the null of equal distributions is
    /// rejected.
    pub reject: bool,
}

#[derive(Serialize)]
struct PipelineResultJson<'a> {
    schema_version: u32,
    dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_dimensions: Option<(usize, usize)>,
    statistic: &'a str,
    value: f64,
    p_value: f64,
    permutations: usize,
    alpha: f64,
    reject: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal_scale: Option<String>,
    seed: &'a RngSeed,
}

impl PipelineResult {
    pub fn to_json(&self) -> String {
        let scale = self.test.optimal_scale.map(|s| match s {
            MgcScale::Global => "global".to_string(),
            MgcScale::Local { k, l } => format!("{k}:{l}"),
        });
        let view = PipelineResultJson {
            schema_version: 1,
            dimension: self.dimension,
            selected_dimensions: self.selected,
            statistic: self.test.stat_kind.name(),
            value: self.test.statistic,
            p_value: self.test.p_value,
            permutations: self.test.permutations,
            alpha: self.alpha,
            reject: self.reject,
            optimal_scale: scale,
            seed: &self.test.seed,
        };
        serde_json::to_string_pretty(&view).expect("pipeline result serializes")
    }
}

/// The pooled labeled sample the permutation test runs on, plus how it was
/// built. Exposed so callers can compute diagnostics (e.g. the MGC local
/// correlation grid) on exactly the data the test saw.
#[derive(Debug, Clone)]
pub struct PooledSample {
    /// Stacked aligned embeddings, first graph's rows first.
    pub z: DMatrix<f64>,
    /// 0/1 labels marking which graph each row came from.
    pub e: DMatrix<f64>,
    pub dimension: usize,
    pub selected: Option<(usize, usize)>,
}

/// Embed, optionally noise-correct, align, and pool two observed graphs.
pub fn pooled_sample(
    a: &AdjacencyMatrix,
    b: &AdjacencyMatrix,
    options: &PipelineOptions,
    seed: RngSeed,
) -> Result<PooledSample> {
    let (d, selected) = match options.dimension {
        DimensionSpec::Fixed(d) => (d, None),
        DimensionSpec::Auto => {
            let spec_a = ase(a, 1)?.spectrum;
            let spec_b = ase(b, 1)?.spectrum;
            let da = select_dimension(&spec_a, spec_a.len())?.dimension;
            let db = select_dimension(&spec_b, spec_b.len())?.dimension;
            (da.min(db), Some((da, db)))
        }
    };
    let ea = ase(a, d)?;
    let eb = ase(b, d)?;
    let (xa, xb) = if options.variance_correction && a.n() != b.n() {
        if a.n() > b.n() {
            (variance_correct(&ea.positions, b.n(), seed.child(1))?, eb.positions)
        } else {
            (ea.positions, variance_correct(&eb.positions, a.n(), seed.child(1))?)
        }
    } else {
        (ea.positions, eb.positions)
    };
    let aligned = align_pair(&xa, &xb, options.alignment)?;
    let (z, e) = ksample_transform(&xa, &aligned)?;
    Ok(PooledSample { z, e, dimension: d, selected })
}

/// Embed, align, pool, and test two observed graphs.
///
/// With `DimensionSpec::Auto` the elbow selector runs on each graph's full
/// singular spectrum and the smaller selection wins, so both embeddings
/// share a dimension. Variance correction (when requested and the orders
/// differ) adds noise to the larger graph's embedding before alignment.
pub fn two_sample_graph_test(
    a: &AdjacencyMatrix,
    b: &AdjacencyMatrix,
    options: &PipelineOptions,
    seed: RngSeed,
) -> Result<PipelineResult> {
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", options.alpha)));
    }
    let pooled = pooled_sample(a, b, options, seed)?;
    let test =
        permutation_test(options.stat, &pooled.z, &pooled.e, options.permutations, seed.child(2))?;
    let reject = test.p_value <= options.alpha;
    Ok(PipelineResult {
        dimension: pooled.dimension,
        selected: pooled.selected,
        test,
        alpha: options.alpha,
        reject,
    })
}
