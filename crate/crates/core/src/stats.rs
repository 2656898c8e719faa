//! Finite-shot experiments: count simulation, witness-value estimation with
//! its Gaussian p-value, and the head-to-head comparison of the single-outcome
//! and all-outcome estimators.
//!
//! p-values are carried in the log domain as well, since at realistic shot
//! counts `exp(-G Ī²/2σ²)` underflows long before the comparison gets
//! interesting.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::io::fmt_sig;
use crate::protocol::{probability_table, MeasurementModel, ProbabilityTable};
use crate::qcore::DensityMatrix;
use crate::states::{Seed, GENERATOR_NAME};
use crate::witness::{
    outcome_coefficients, AncillaBasis, CoefficientTensor, OutcomeCoefficientTable, Witness,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    AllOutcome,
    SingleOutcome,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::AllOutcome => "all-outcome",
            Scheme::SingleOutcome => "single-outcome",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentConfig {
    shots: u64,
    pub seed: Seed,
    pub scheme: Scheme,
}

impl ExperimentConfig {
    pub fn new(shots: u64, seed: Seed, scheme: Scheme) -> Result<Self> {
        if shots == 0 {
            return Err(Error::OutOfRange(
                "an experiment needs at least one shot".into(),
            ));
        }
        Ok(Self {
            shots,
            seed,
            scheme,
        })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }
}

/// Occurrences of every (outcome, input) pair, input-major like
/// [`ProbabilityTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRecord {
    party_count: usize,
    counts: Vec<u64>,
}

impl CountRecord {
    pub fn from_counts(party_count: usize, counts: Vec<u64>) -> Result<Self> {
        let cells = 4usize.pow(party_count as u32);
        if counts.len() != cells * cells {
            return Err(Error::ShapeMismatch(format!(
                "{} counts for {party_count} parties, expected {}",
                counts.len(),
                cells * cells
            )));
        }
        Ok(Self {
            party_count,
            counts,
        })
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn cells(&self) -> usize {
        4usize.pow(self.party_count as u32)
    }

    pub fn get(&self, outcome: usize, input: usize) -> u64 {
        self.counts[input * self.cells() + outcome]
    }

    pub fn input_occurrences(&self, input: usize) -> u64 {
        let n = self.cells();
        self.counts[input * n..(input + 1) * n].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Draws `shots` (input, outcome) pairs: a uniform input tuple, then an
/// outcome from that input's row of `table`.
pub fn sample_counts<R: Rng + ?Sized>(
    table: &ProbabilityTable,
    shots: u64,
    rng: &mut R,
) -> Result<CountRecord> {
    let cells = table.cells();
    let rows = (0..cells)
        .map(|x| {
            // rounding can leave entries a hair below zero
            WeightedIndex::new(table.conditional(x).iter().map(|p| p.max(0.0))).map_err(|e| {
                Error::InvalidPovm(format!("input {x} has no valid outcome distribution: {e}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; cells * cells];
    for _ in 0..shots {
        let x = rng.random_range(0..cells);
        let o = rows[x].sample(rng);
        counts[x * cells + o] += 1;
    }
    CountRecord::from_counts(table.party_count(), counts)
}

pub fn simulate_counts(
    state: &DensityMatrix,
    basis: &AncillaBasis,
    model: &MeasurementModel,
    config: &ExperimentConfig,
) -> Result<CountRecord> {
    let table = probability_table(state, basis, model)?;
    sample_counts(&table, config.shots, &mut config.seed.rng())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma_hat: f64,
    /// `exp(-G Ī²/2σ²)` for `Ī < 0`, otherwise 1.
    pub p_value: f64,
    pub ln_p_value: f64,
    /// One-sided Gaussian tail `Φ(Ī√G/σ)`.
    pub p_gaussian: f64,
    pub ln_p_gaussian: f64,
    pub shots: u64,
    pub missing_inputs: usize,
    pub warnings: Vec<String>,
}

impl Estimate {
    pub fn is_flagged(&self) -> bool {
        !self.warnings.is_empty()
    }
}

/// `ln exp(-G Ī²/2σ²)`, or 0 when the estimate is not negative.
pub fn ln_p_exponential(value: f64, sigma: f64, shots: u64) -> f64 {
    if value >= 0.0 {
        0.0
    } else if sigma == 0.0 {
        f64::NEG_INFINITY
    } else {
        -(shots as f64) * value * value / (2.0 * sigma * sigma)
    }
}

pub fn p_exponential(value: f64, sigma: f64, shots: u64) -> f64 {
    ln_p_exponential(value, sigma, shots).exp()
}

/// `ln Φ(z)`, accurate far into the lower tail where `Φ` underflows.
pub fn ln_normal_cdf(z: f64) -> f64 {
    if z > -10.0 {
        let n = Normal::standard();
        return n.cdf(z).ln();
    }
    // Mills-ratio asymptotic series
    let z2 = z * z;
    let series =
        1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

pub fn ln_p_gaussian(value: f64, sigma: f64, shots: u64) -> f64 {
    if sigma == 0.0 {
        return if value < 0.0 { f64::NEG_INFINITY } else { 0.0 };
    }
    ln_normal_cdf(value * (shots as f64).sqrt() / sigma)
}

// Plug-in estimate over the given (outcome index, coefficients) pairs.
fn estimate_over<'a>(
    counts: &CountRecord,
    terms: impl Iterator<Item = (usize, &'a CoefficientTensor)> + Clone,
) -> Estimate {
    let cells = counts.cells();
    let occurrences: Vec<u64> = (0..cells).map(|x| counts.input_occurrences(x)).collect();
    let mut value = 0.0;
    let mut variance = 0.0;
    for (o, beta) in terms {
        for (x, &b) in beta.values().iter().enumerate() {
            if occurrences[x] == 0 {
                continue;
            }
            let p = counts.get(o, x) as f64 / occurrences[x] as f64;
            value += b * p;
            variance += b * b * p * (1.0 - p);
        }
    }
    let missing: Vec<usize> = (0..cells).filter(|&x| occurrences[x] == 0).collect();
    let mut warnings = Vec::new();
    if !missing.is_empty() {
        warnings.push(format!(
            "{} of {cells} input tuples never occurred; the value covers observed inputs only",
            missing.len()
        ));
    }
    let shots = counts.total();
    let sigma_hat = variance.sqrt();
    let ln_p = ln_p_exponential(value, sigma_hat, shots);
    let ln_g = ln_p_gaussian(value, sigma_hat, shots);
    Estimate {
        value,
        sigma_hat,
        p_value: ln_p.exp(),
        ln_p_value: ln_p,
        p_gaussian: ln_g.exp(),
        ln_p_gaussian: ln_g,
        shots,
        missing_inputs: missing.len(),
        warnings,
    }
}

/// `Ī = Σ β̂ P̂` with `P̂(o|x) = n(o,x)/n(x)`; the single-outcome scheme keeps
/// only the all-φ⁺ cell.
pub fn estimate_value(
    counts: &CountRecord,
    coeffs: &OutcomeCoefficientTable,
    scheme: Scheme,
) -> Result<Estimate> {
    if counts.party_count() != coeffs.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}-party counts with {}-party coefficients",
            counts.party_count(),
            coeffs.party_count()
        )));
    }
    if counts.total() == 0 {
        return Err(Error::OutOfRange("no shots recorded".into()));
    }
    Ok(match scheme {
        Scheme::AllOutcome => {
            estimate_over(counts, (0..coeffs.len()).map(|o| (o, coeffs.by_index(o))))
        }
        Scheme::SingleOutcome => estimate_over(counts, std::iter::once((0, coeffs.by_index(0)))),
    })
}

/// Single-outcome estimate from a bare coefficient tensor.
pub fn estimate_single(counts: &CountRecord, coeffs: &CoefficientTensor) -> Result<Estimate> {
    if counts.party_count() != coeffs.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}-party counts with {}-party coefficients",
            counts.party_count(),
            coeffs.party_count()
        )));
    }
    if counts.total() == 0 {
        return Err(Error::OutOfRange("no shots recorded".into()));
    }
    Ok(estimate_over(counts, std::iter::once((0, coeffs))))
}

/// `ln((1/n) Σ e^{a_i})` without leaving the log domain.
pub fn ln_mean_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if logs.is_empty() || max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    max + sum.ln() - (logs.len() as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `ys` on `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::ShapeMismatch(
            "a line fit needs at least two paired points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::OutOfRange("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// One (G, scheme) cell of a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub state: String,
    pub witness: String,
    pub scheme: Scheme,
    #[serde(rename = "G")]
    pub shots: u64,
    pub trials: usize,
    pub mean_value: f64,
    pub empirical_sigma: f64,
    pub mean_p_paper: f64,
    pub ln_mean_p_paper: f64,
    pub mean_p_gaussian: f64,
    pub ln_mean_p_gaussian: f64,
    pub seed: u64,
    pub generator_name: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub scheme: Scheme,
    pub shots: u64,
    pub trial: usize,
    pub value: f64,
    pub sigma_hat: f64,
    pub ln_p_exponential: f64,
    pub ln_p_gaussian: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// Exact ideal all-outcome value the estimates should scatter around.
    pub exact_value: f64,
    pub exact_single_value: f64,
    pub rows: Vec<ComparisonRow>,
    #[serde(skip)]
    pub traces: Vec<TraceRow>,
}

impl ComparisonReport {
    pub fn row(&self, scheme: Scheme, shots: u64) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.shots == shots)
    }

    /// Fit of `ln(mean p)` (exponential form) against `G` for one scheme.
    pub fn log_p_fit(&self, scheme: Scheme) -> Result<LinearFit> {
        let rows: Vec<&ComparisonRow> = self.rows.iter().filter(|r| r.scheme == scheme).collect();
        let xs: Vec<f64> = rows.iter().map(|r| r.shots as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.ln_mean_p_paper).collect();
        linear_fit(&xs, &ys)
    }

    pub fn traces_csv(&self) -> String {
        let mut out =
            String::from("scheme,G,trial,value,sigma_hat,ln_p_exponential,ln_p_gaussian\n");
        for t in &self.traces {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t.scheme.name(),
                t.shots,
                t.trial,
                fmt_sig(t.value),
                fmt_sig(t.sigma_hat),
                fmt_sig(t.ln_p_exponential),
                fmt_sig(t.ln_p_gaussian)
            );
        }
        out
    }
}

pub struct ComparisonSetup<'a> {
    pub state_label: &'a str,
    pub state: &'a DensityMatrix,
    pub basis: &'a AncillaBasis,
    pub witness: &'a Witness,
    pub model: &'a MeasurementModel,
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Runs `trials` experiments per shot count and scores each record with both
/// estimators, so the schemes are compared on identical data.
pub fn scheme_comparison(
    setup: &ComparisonSetup<'_>,
    g_grid: &[u64],
    trials: usize,
    seed: Seed,
) -> Result<ComparisonReport> {
    if g_grid.contains(&0) {
        return Err(Error::OutOfRange("shot counts must be positive".into()));
    }
    let coeffs = outcome_coefficients(setup.witness, setup.basis)?;
    let table = probability_table(setup.state, setup.basis, setup.model)?;
    let exact_value = crate::protocol::mdiew_value(&table, &coeffs)?;
    let exact_single_value = crate::protocol::single_outcome_value(&table, coeffs.by_index(0))?;

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (gi, &g) in g_grid.iter().enumerate() {
        let per_trial = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seed.stream(((gi as u64) << 32) | t as u64);
                let counts = sample_counts(&table, g, &mut rng)?;
                Ok((
                    estimate_value(&counts, &coeffs, Scheme::AllOutcome)?,
                    estimate_value(&counts, &coeffs, Scheme::SingleOutcome)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        for scheme in [Scheme::AllOutcome, Scheme::SingleOutcome] {
            let estimates: Vec<&Estimate> = per_trial
                .iter()
                .map(|(a, s)| if scheme == Scheme::AllOutcome { a } else { s })
                .collect();
            let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
            let ln_paper: Vec<f64> = estimates.iter().map(|e| e.ln_p_value).collect();
            let ln_gauss: Vec<f64> = estimates.iter().map(|e| e.ln_p_gaussian).collect();
            let ln_mean_p_paper = ln_mean_exp(&ln_paper);
            let ln_mean_p_gaussian = ln_mean_exp(&ln_gauss);
            rows.push(ComparisonRow {
                state: setup.state_label.to_string(),
                witness: setup.witness.name().to_string(),
                scheme,
                shots: g,
                trials,
                mean_value: values.iter().sum::<f64>() / trials.max(1) as f64,
                empirical_sigma: sample_std(&values),
                mean_p_paper: ln_mean_p_paper.exp(),
                ln_mean_p_paper,
                mean_p_gaussian: ln_mean_p_gaussian.exp(),
                ln_mean_p_gaussian,
                seed: seed.0,
                generator_name: GENERATOR_NAME.to_string(),
            });
            traces.extend(estimates.iter().enumerate().map(|(trial, e)| TraceRow {
                scheme,
                shots: g,
                trial,
                value: e.value,
                sigma_hat: e.sigma_hat,
                ln_p_exponential: e.ln_p_value,
                ln_p_gaussian: e.ln_p_gaussian,
            }));
        }
    }
    Ok(ComparisonReport {
        exact_value,
        exact_single_value,
        rows,
        traces,
    })
}
