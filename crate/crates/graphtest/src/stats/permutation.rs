//! Permutation null for the distance-based statistics: the rows of the label
//! matrix are shuffled while the embedded points stay fixed, and the p-value
//! is the add-one-smoothed fraction of null statistics at or above the
//! observed one.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mgc::{mgc_from_sides, MgcParams, MgcScale, MgcSide};
use super::{dcorr_from_sides, CenteredSide, Centering};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Which statistic drives the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatKind {
    DcorrBiased,
    DcorrUnbiased,
    Mgc,
}

impl StatKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatKind::DcorrBiased => "dcorr-biased",
            StatKind::DcorrUnbiased => "dcorr-u",
            StatKind::Mgc => "mgc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dcorr-biased" => Ok(StatKind::DcorrBiased),
            "dcorr-u" | "dcorr-unbiased" => Ok(StatKind::DcorrUnbiased),
            "mgc" => Ok(StatKind::Mgc),
            other => Err(Error::Config(format!(
                "unknown statistic '{other}' (expected dcorr-biased, dcorr-u, or mgc)"
            ))),
        }
    }
}

/// Outcome of a permutation test.
#[derive(Debug, Clone)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: RngSeed,
    pub stat_kind: StatKind,
    /// Present only for MGC.
    pub optimal_scale: Option<MgcScale>,
    pub null_values: Vec<f64>,
}

#[derive(Serialize)]
struct TestResultJson<'a> {
    schema_version: u32,
    statistic: &'a str,
    value: f64,
    p_value: f64,
    permutations: usize,
    seed: &'a RngSeed,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal_scale: Option<ScaleJson>,
}

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum ScaleJson {
    Global,
    Local { k: usize, l: usize },
}

impl TestResult {
    pub fn to_json(&self) -> String {
        let scale = self.optimal_scale.map(|s| match s {
            MgcScale::Global => ScaleJson::Global,
            MgcScale::Local { k, l } => ScaleJson::Local { k, l },
        });
        let view = TestResultJson {
            schema_version: 1,
            statistic: self.stat_kind.name(),
            value: self.statistic,
            p_value: self.p_value,
            permutations: self.permutations,
            seed: &self.seed,
            optimal_scale: scale,
        };
        serde_json::to_string_pretty(&view).expect("test result serializes")
    }
}

/// The Z side of the statistic, prepared once and reused across permutations
/// so every replicate goes through the identical evaluation path.
enum Prepared {
    Dcorr { side: CenteredSide, centering: Centering },
    Mgc { side: MgcSide, params: MgcParams },
}

impl Prepared {
    fn new(kind: StatKind, z: &DMatrix<f64>, mgc_params: &MgcParams) -> Result<Self> {
        match kind {
            StatKind::DcorrBiased => Ok(Prepared::Dcorr {
                side: CenteredSide::new(z, Centering::Double)?,
                centering: Centering::Double,
            }),
            StatKind::DcorrUnbiased => Ok(Prepared::Dcorr {
                side: CenteredSide::new(z, Centering::UCentered)?,
                centering: Centering::UCentered,
            }),
            StatKind::Mgc => Ok(Prepared::Mgc {
                side: MgcSide::new(z, mgc_params.rank_centered)?,
                params: *mgc_params,
            }),
        }
    }

    fn eval(&self, e: &DMatrix<f64>) -> Result<(f64, Option<MgcScale>)> {
        match self {
            Prepared::Dcorr { side, centering } => {
                let other = CenteredSide::new(e, *centering)?;
                Ok((dcorr_from_sides(side, &other)?, None))
            }
            Prepared::Mgc { side, params } => {
                let other = MgcSide::new(e, params.rank_centered)?;
                let res = mgc_from_sides(side, &other, params.tau)?;
                Ok((res.statistic, Some(res.optimal_scale)))
            }
        }
    }
}

/// Permutation test of dependence between the rows of `z` (n x d) and the
/// rows of `e` (n x q). Replicate r draws its shuffle from `seed.child(r+1)`,
/// so results are reproducible and independent of thread scheduling.
pub fn permutation_test(
    kind: StatKind,
    z: &DMatrix<f64>,
    e: &DMatrix<f64>,
    permutations: usize,
    seed: RngSeed,
) -> Result<TestResult> {
    permutation_test_with(kind, z, e, permutations, seed, &MgcParams::default())
}

pub fn permutation_test_with(
    kind: StatKind,
    z: &DMatrix<f64>,
    e: &DMatrix<f64>,
    permutations: usize,
    seed: RngSeed,
    mgc_params: &MgcParams,
) -> Result<TestResult> {
    if permutations == 0 {
        return Err(Error::Config("permutation count must be at least 1".into()));
    }
    let n = z.nrows();
    if e.nrows() != n {
        return Err(Error::ShapeMismatch {
            context: "permutation test inputs",
            expected: format!("{n} rows"),
            found: format!("{} rows", e.nrows()),
        });
    }
    let prep = Prepared::new(kind, z, mgc_params)?;
    let (observed, scale) = prep.eval(e)?;

    let null_values: Result<Vec<f64>> = (0..permutations)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.child(r as u64 + 1).rng();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let shuffled = DMatrix::from_fn(n, e.ncols(), |i, j| e[(idx[i], j)]);
            prep.eval(&shuffled).map(|(v, _)| v)
        })
        .collect();
    let null_values = null_values?;

    let at_least = null_values.iter().filter(|&&v| v >= observed).count();
    let p_value = (1 + at_least) as f64 / (permutations + 1) as f64;

    Ok(TestResult {
        statistic: observed,
        p_value,
        permutations,
        seed,
        stat_kind: kind,
        optimal_scale: scale,
        null_values,
    })
}
