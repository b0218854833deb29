//! Experiment harness: univariate latent-position power studies, synthetic
//! connectome power/validity studies built by resampling an estimated
//! embedding, and the paired-graph comparison across embedding dimensions.
//!
//! Every run is driven by a master [`RngSeed`]; per-size and per-replicate
//! streams derive from it by counter, so results are bit-reproducible and
//! independent of thread scheduling.

use rand::RngExt;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{median_sign_flip, otp_align, OtpParams};
use crate::embedding::{
    ase, estimate_clt_covariance, mvn_factor, sample_mvn_row, variance_correct,
};
use crate::error::{Error, Result};
use crate::graph::{sample_rdpg, AdjacencyMatrix, LatentPositions};
use crate::rng::RngSeed;
use crate::stats::{ksample_transform, permutation_test, MgcScale, StatKind};

/// How the two samples of scalar latent positions are drawn in the
/// univariate study. The base distribution is Unif(0.2, 0.7); the
/// alternatives shift it or replace it with a bimodal Beta rescaled onto
/// the same support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnivariateScenario {
    /// Both samples from Unif(0.2, 0.7).
    Null,
    /// Second sample from Unif(0.2, 0.7) + 0.1.
    LinearShift,
    /// Second sample from 0.5 * Beta(0.2, 0.2) + 0.2.
    NonlinearBeta,
}

impl UnivariateScenario {
    pub fn name(&self) -> &'static str {
        match self {
            UnivariateScenario::Null => "null",
            UnivariateScenario::LinearShift => "linear-shift",
            UnivariateScenario::NonlinearBeta => "nonlinear-beta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(UnivariateScenario::Null),
            "linear-shift" => Ok(UnivariateScenario::LinearShift),
            "nonlinear-beta" => Ok(UnivariateScenario::NonlinearBeta),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected null, linear-shift, or nonlinear-beta)"
            ))),
        }
    }

    /// Draw the two latent samples, `n` scalars each.
    fn sample_pair<R: rand::Rng>(&self, n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let base = |rng: &mut R| rng.random_range(0.2..0.7);
        let xs: Vec<f64> = (0..n).map(|_| base(rng)).collect();
        let ys: Vec<f64> = match self {
            UnivariateScenario::Null => (0..n).map(|_| base(rng)).collect(),
            UnivariateScenario::LinearShift => (0..n).map(|_| base(rng) + 0.1).collect(),
            UnivariateScenario::NonlinearBeta => {
                let beta = Beta::new(0.2, 0.2).expect("valid shape parameters");
                (0..n).map(|_| 0.5 * beta.sample(rng) + 0.2).collect()
            }
        };
        (xs, ys)
    }
}

/// How the second embedding is mapped onto the first before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Per-dimension sign flip matching column medians.
    Median,
    /// Optimal transport Procrustes.
    Otp,
}

impl Alignment {
    pub fn name(&self) -> &'static str {
        match self {
            Alignment::Median => "median",
            Alignment::Otp => "otp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Alignment::Median),
            "otp" => Ok(Alignment::Otp),
            other => {
                Err(Error::Config(format!("unknown alignment '{other}' (expected median or otp)")))
            }
        }
    }
}

/// Apply the chosen alignment and return the mapped second embedding.
pub fn align_pair(
    x: &LatentPositions,
    y: &LatentPositions,
    alignment: Alignment,
) -> Result<LatentPositions> {
    match alignment {
        Alignment::Median => Ok(median_sign_flip(x, y)?.0),
        Alignment::Otp => {
            let result = otp_align(x, y, &OtpParams::default())?;
            Ok(result.aligned_positions(y))
        }
    }
}

/// Configuration for the synthetic power study: pairs of graphs are grown by
/// resampling rows of `source` with estimation noise, perturbing a fraction
/// `rho` of them by a radius-`r` sphere jump in the second graph.
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Estimated latent positions the synthetic vertices are resampled from.
    pub source: LatentPositions,
    /// Fraction of sampled vertices perturbed in the second graph.
    pub rho: f64,
    /// Radius of the perturbation sphere.
    pub r: f64,
    pub alignment: Alignment,
    pub stat: StatKind,
    pub replicates: usize,
    pub permutations: usize,
    pub alpha: f64,
}

impl SyntheticConfig {
    pub fn new(source: LatentPositions) -> Self {
        SyntheticConfig {
            source,
            rho: 0.0,
            r: 1.0,
            alignment: Alignment::Otp,
            stat: StatKind::Mgc,
            replicates: 200,
            permutations: 500,
            alpha: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(Error::Config(format!("effect radius must be nonnegative, got {}", self.r)));
        }
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        check_alpha(self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Rejection rate at one sample size.
#[derive(Debug, Clone, Serialize)]
pub struct PowerPoint {
    pub n: usize,
    pub rejections: usize,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Rejection rates across a grid of sample sizes, with the configuration
/// echoed so a stored curve can be traced back to its run.
#[derive(Debug, Clone, Serialize)]
pub struct PowerCurve {
    pub points: Vec<PowerPoint>,
    pub method: StatKind,
    pub alignment: Alignment,
    /// Present for univariate runs.
    pub scenario: Option<UnivariateScenario>,
    /// Present for synthetic runs.
    pub rho: Option<f64>,
    /// Present for synthetic runs.
    pub effect_radius: Option<f64>,
    pub replicates: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: RngSeed,
}

#[derive(Serialize)]
struct PowerCurveJson<'a> {
    schema_version: u32,
    #[serde(flatten)]
    curve: &'a PowerCurve,
}

impl PowerCurve {
    const CSV_HEADER: &'static str = "n,rate,ci_lo,ci_hi,method,alignment,rho\n";

    fn csv_rows(&self, out: &mut String) {
        let rho = match self.rho {
            Some(v) => format!("{v}"),
            None => "NA".into(),
        };
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.n,
                p.rate,
                p.ci_lo,
                p.ci_hi,
                self.method.name(),
                self.alignment.name(),
                rho
            ));
        }
    }

    /// One row per sample size: `n,rate,ci_lo,ci_hi,method,alignment,rho`.
    /// `rho` is `NA` for univariate runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        self.csv_rows(&mut out);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PowerCurveJson { schema_version: 1, curve: self })
            .expect("power curve serializes")
    }
}

/// Several curves under one header, for figure panels that overlay series.
pub fn curves_to_csv(curves: &[&PowerCurve]) -> String {
    let mut out = String::from(PowerCurve::CSV_HEADER);
    for curve in curves {
        curve.csv_rows(&mut out);
    }
    out
}

/// Aggregate per-replicate rejection flags for each grid entry into a curve.
fn collect_curve<F>(grid: &[usize], replicates: usize, seed: RngSeed, run: F) -> Result<Vec<PowerPoint>>
where
    F: Fn(usize, RngSeed) -> Result<bool> + Sync,
{
    let mut points = Vec::with_capacity(grid.len());
    for (si, &n) in grid.iter().enumerate() {
        let size_seed = seed.child(si as u64 + 1);
        let flags = (0..replicates)
            .into_par_iter()
            .map(|rep| run(n, size_seed.child(rep as u64 + 1)))
            .collect::<Result<Vec<bool>>>()?;
        let rejections = flags.iter().filter(|&&r| r).count();
        let rate = rejections as f64 / replicates as f64;
        let (ci_lo, ci_hi) = wilson_interval(rejections, replicates);
        points.push(PowerPoint { n, rejections, rate, ci_lo, ci_hi });
    }
    Ok(points)
}

/// Power study on one-dimensional random dot product graphs: per replicate,
/// draw scalar latent samples per the scenario, sample a graph from each,
/// embed at dimension 1, median-flip, and run the permutation test.
pub fn run_univariate_power(
    scenario: UnivariateScenario,
    n_grid: &[usize],
    replicates: usize,
    alpha: f64,
    stat: StatKind,
    permutations: usize,
    seed: RngSeed,
) -> Result<PowerCurve> {
    if n_grid.is_empty() {
        return Err(Error::Config("sample size grid is empty".into()));
    }
    if replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    check_alpha(alpha)?;
    let points = collect_curve(n_grid, replicates, seed, |n, rep_seed| {
        univariate_replicate(scenario, n, alpha, stat, permutations, rep_seed)
    })?;
    Ok(PowerCurve {
        points,
        method: stat,
        alignment: Alignment::Median,
        scenario: Some(scenario),
        rho: None,
        effect_radius: None,
        replicates,
        permutations,
        alpha,
        seed,
    })
}

fn univariate_replicate(
    scenario: UnivariateScenario,
    n: usize,
    alpha: f64,
    stat: StatKind,
    permutations: usize,
    seed: RngSeed,
) -> Result<bool> {
    let mut rng = seed.child(1).rng();
    let (xs, ys) = scenario.sample_pair(n, &mut rng);
    let x = LatentPositions::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
    let y = LatentPositions::from_rows(&ys.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
    let a = sample_rdpg(&x, seed.child(2));
    let b = sample_rdpg(&y, seed.child(3));
    let ex = ase(&a, 1)?;
    let ey = ase(&b, 1)?;
    let (aligned, _) = median_sign_flip(&ex.positions, &ey.positions)?;
    let (z, e) = ksample_transform(&ex.positions, &aligned)?;
    let result = permutation_test(stat, &z, &e, permutations, seed.child(4))?;
    Ok(result.p_value <= alpha)
}

/// One synthetic pair of graphs plus the bookkeeping needed to audit it.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub a: AdjacencyMatrix,
    pub b: AdjacencyMatrix,
    /// Source rows drawn with replacement, one per synthetic vertex.
    pub sampled_indices: Vec<usize>,
    /// Slots (positions in `sampled_indices`) given a nonzero perturbation.
    pub perturbed_slots: Vec<usize>,
    pub y_latents: LatentPositions,
    pub z_latents: LatentPositions,
    /// Perturbation applied to each slot's mean in the second graph.
    pub epsilons: Vec<Vec<f64>>,
}

/// Grow a pair of `m`-vertex graphs from an estimated embedding: vertex
/// means are rows of `source` drawn with replacement, both sides get
/// independent estimation noise from the plug-in covariance of their row,
/// and round(rho * m) slots of the second side are additionally shifted by
/// a uniform point on the radius-`r` sphere before sampling edges.
pub fn generate_synthetic_pair(
    source: &LatentPositions,
    m: usize,
    rho: f64,
    r: f64,
    seed: RngSeed,
) -> Result<SyntheticPair> {
    if m == 0 {
        return Err(Error::Config("at least one synthetic vertex is required".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("rho must lie in [0, 1], got {rho}")));
    }
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Config(format!("effect radius must be nonnegative, got {r}")));
    }
    let n = source.n();
    let d = source.d();
    let covs = estimate_clt_covariance(source)?;

    let mut idx_rng = seed.child(1).rng();
    let sampled_indices: Vec<usize> = (0..m).map(|_| idx_rng.random_range(0..n)).collect();

    let k = (rho * m as f64).round() as usize;
    let mut slot_rng = seed.child(2).rng();
    let mut perturbed_slots = rand::seq::index::sample(&mut slot_rng, m, k).into_vec();
    perturbed_slots.sort_unstable();
    let mut perturbed = vec![false; m];
    for &s in &perturbed_slots {
        perturbed[s] = true;
    }

    let mut eps_rng = seed.child(3).rng();
    let epsilons: Vec<Vec<f64>> = (0..m)
        .map(|slot| {
            if perturbed[slot] && r > 0.0 {
                sphere_point(d, r, &mut eps_rng)
            } else {
                vec![0.0; d]
            }
        })
        .collect();

    let mut mvn_rng = seed.child(4).rng();
    let mut y_rows = Vec::with_capacity(m);
    let mut z_rows = Vec::with_capacity(m);
    for slot in 0..m {
        let idx = sampled_indices[slot];
        let mean = source.row(idx);
        let factor = mvn_factor(covs.vertex(idx));
        y_rows.push(sample_mvn_row(&mean, &factor, &mut mvn_rng));
        let shifted: Vec<f64> =
            mean.iter().zip(&epsilons[slot]).map(|(mu, eps)| mu + eps).collect();
        z_rows.push(sample_mvn_row(&shifted, &factor, &mut mvn_rng));
    }
    let y_latents = LatentPositions::from_rows(&y_rows)?;
    let z_latents = LatentPositions::from_rows(&z_rows)?;
    let a = sample_rdpg(&y_latents, seed.child(5));
    let b = sample_rdpg(&z_latents, seed.child(6));
    Ok(SyntheticPair { a, b, sampled_indices, perturbed_slots, y_latents, z_latents, epsilons })
}

/// Uniform point on the radius-`r` sphere: r * g / ||g|| for standard
/// normal g, redrawing in the (measure-zero) case of a vanishing norm.
fn sphere_point<R: rand::Rng>(d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d)
            .map(|_| {
                let v: f64 = StandardNormal.sample(rng);
                v
            })
            .collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return g.iter().map(|v| r * v / norm).collect();
        }
    }
}

/// Power study on synthetic graph pairs grown from `config.source`: per
/// replicate, generate a pair at the grid's vertex count, embed both at the
/// source dimension, align per the config, and run the permutation test.
pub fn run_synthetic_power(
    config: &SyntheticConfig,
    m_grid: &[usize],
    seed: RngSeed,
) -> Result<PowerCurve> {
    config.validate()?;
    if m_grid.is_empty() {
        return Err(Error::Config("vertex count grid is empty".into()));
    }
    let d = config.source.d();
    for &m in m_grid {
        if m < d {
            return Err(Error::Config(format!(
                "vertex count {m} is below the embedding dimension {d}"
            )));
        }
    }
    let points = collect_curve(m_grid, config.replicates, seed, |m, rep_seed| {
        synthetic_replicate(config, m, rep_seed)
    })?;
    Ok(PowerCurve {
        points,
        method: config.stat,
        alignment: config.alignment,
        scenario: None,
        rho: Some(config.rho),
        effect_radius: Some(config.r),
        replicates: config.replicates,
        permutations: config.permutations,
        alpha: config.alpha,
        seed,
    })
}

fn synthetic_replicate(config: &SyntheticConfig, m: usize, seed: RngSeed) -> Result<bool> {
    let pair = generate_synthetic_pair(&config.source, m, config.rho, config.r, seed.child(1))?;
    let d = config.source.d();
    let ea = ase(&pair.a, d)?;
    let eb = ase(&pair.b, d)?;
    let aligned = align_pair(&ea.positions, &eb.positions, config.alignment)?;
    let (z, e) = ksample_transform(&ea.positions, &aligned)?;
    let result = permutation_test(config.stat, &z, &e, config.permutations, seed.child(2))?;
    Ok(result.p_value <= config.alpha)
}

/// Options for comparing two observed graphs across embedding dimensions.
#[derive(Debug, Clone)]
pub struct PairedTestOptions {
    pub alignment: Alignment,
    pub stat: StatKind,
    pub permutations: usize,
    /// Inflate the larger graph's embedding noise to match the smaller one.
    /// Off by default: when the orders are close the correction mostly adds
    /// noise of its own.
    pub variance_correction: bool,
}

impl Default for PairedTestOptions {
    fn default() -> Self {
        PairedTestOptions {
            alignment: Alignment::Otp,
            stat: StatKind::Mgc,
            permutations: 999,
            variance_correction: false,
        }
    }
}

/// Test outcome at one embedding dimension.
#[derive(Debug, Clone, Serialize)]
pub struct PairedTestRow {
    pub dimension: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub optimal_scale: Option<MgcScale>,
}

/// Test outcomes across a grid of embedding dimensions for one method
/// combination.
#[derive(Debug, Clone, Serialize)]
pub struct PairedTestTable {
    pub rows: Vec<PairedTestRow>,
    pub method: StatKind,
    pub alignment: Alignment,
    pub permutations: usize,
    pub variance_corrected: bool,
    pub seed: RngSeed,
}

#[derive(Serialize)]
struct PairedTestTableJson<'a> {
    schema_version: u32,
    #[serde(flatten)]
    table: &'a PairedTestTable,
}

impl PairedTestTable {
    /// One row per dimension: `d,statistic,p_value,scale`. The scale column
    /// is empty for the distance correlation statistics.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,statistic,p_value,scale\n");
        for row in &self.rows {
            let scale = match row.optimal_scale {
                Some(MgcScale::Global) => "global".into(),
                Some(MgcScale::Local { k, l }) => format!("{k}:{l}"),
                None => String::new(),
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.dimension, row.statistic, row.p_value, scale
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PairedTestTableJson { schema_version: 1, table: self })
            .expect("paired test table serializes")
    }
}

/// Compare two observed graphs at each embedding dimension in `d_grid`:
/// embed, optionally variance-correct the larger side, align, and run the
/// permutation test. Used for the left-right hemisphere comparison.
pub fn hemisphere_test(
    left: &AdjacencyMatrix,
    right: &AdjacencyMatrix,
    d_grid: &[usize],
    options: &PairedTestOptions,
    seed: RngSeed,
) -> Result<PairedTestTable> {
    if d_grid.is_empty() {
        return Err(Error::Config("embedding dimension grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        if d == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        let dim_seed = seed.child(d as u64);
        let el = ase(left, d)?;
        let er = ase(right, d)?;
        let (xl, xr) = if options.variance_correction && left.n() != right.n() {
            if left.n() > right.n() {
                (variance_correct(&el.positions, right.n(), dim_seed.child(1))?, er.positions)
            } else {
                (el.positions, variance_correct(&er.positions, left.n(), dim_seed.child(1))?)
            }
        } else {
            (el.positions, er.positions)
        };
        let aligned = align_pair(&xl, &xr, options.alignment)?;
        let (z, e) = ksample_transform(&xl, &aligned)?;
        let result = permutation_test(options.stat, &z, &e, options.permutations, dim_seed.child(2))?;
        rows.push(PairedTestRow {
            dimension: d,
            statistic: result.statistic,
            p_value: result.p_value,
            optimal_scale: result.optimal_scale,
        });
    }
    Ok(PairedTestTable {
        rows,
        method: options.stat,
        alignment: options.alignment,
        permutations: options.permutations,
        variance_corrected: options.variance_correction,
        seed,
    })
}
