//! End-to-end evaluation: simulate a Boolean network's Hill dynamics,
//! read the ground truth off the trajectory by thresholding, recover a
//! profile with the constraint-propagation binarizer, and measure the
//! disagreement.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binarize::{
    binarize_batch, BinarizeError, BinarizerConfig, Biomarkers, BinaryProfile,
};
use crate::gene::GeneId;
use crate::hill::{HillError, HillOdeSystem, HillParams};
use crate::integrate::{
    detect_steady_state, extract_snapshots, integrate_rk4, threshold_binarize, IntegrateError,
    IntegrationConfig, SnapshotPolicy,
};
use crate::logic::BooleanNetwork;
use crate::tri::TriState;

/// Fraction of genes on which a recovered profile disagrees with the
/// truth, kept as an exact ratio. NA on the recovered side always
/// counts against it; the measure is directional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dissimilarity {
    pub mismatches: usize,
    pub total: usize,
}

impl Dissimilarity {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.mismatches as f64 / self.total as f64
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mismatches == 0
    }
}

impl std::fmt::Display for Dissimilarity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.mismatches, self.total)
    }
}

impl PartialOrd for Dissimilarity {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dissimilarity {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Compare a/b vs c/d as a*d vs c*b to stay exact.
        (self.mismatches * other.total.max(1)).cmp(&(other.mismatches * self.total.max(1)))
    }
}

/// Count genes where the recovered state differs from the truth or is
/// NA, over every gene the truth covers.
pub fn dissimilarity(
    truth: &BTreeMap<GeneId, TriState>,
    recovered: &BTreeMap<GeneId, TriState>,
) -> Dissimilarity {
    let mut mismatches = 0;
    for (g, t) in truth {
        let r = recovered.get(g).copied().unwrap_or(TriState::Na);
        if r == TriState::Na || r != *t {
            mismatches += 1;
        }
    }
    Dissimilarity {
        mismatches,
        total: truth.len(),
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ValidateError {
    #[error(transparent)]
    Hill(#[from] HillError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Binarize(#[from] BinarizeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotValidation {
    pub time: f64,
    pub truth: BTreeMap<GeneId, TriState>,
    pub recovered: BinaryProfile,
    pub dissimilarity: Dissimilarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub snapshots: Vec<SnapshotValidation>,
    pub steady_time: Option<f64>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn max_dissimilarity(&self) -> Dissimilarity {
        self.snapshots
            .iter()
            .map(|s| s.dissimilarity)
            .max()
            .unwrap_or(Dissimilarity {
                mismatches: 0,
                total: 0,
            })
    }
}

/// Simulate, snapshot, threshold for truth, binarize, score. The raw
/// snapshot values are normalized jointly across all snapshots, so a
/// profile at one time can borrow scale from the others.
pub fn run_validation(
    network: &BooleanNetwork,
    params: &HillParams,
    x0: &BTreeMap<GeneId, f64>,
    int_cfg: &IntegrationConfig,
    policy: &SnapshotPolicy,
    bin_cfg: &BinarizerConfig,
    markers: &Biomarkers,
) -> Result<ValidationReport, ValidateError> {
    let system = HillOdeSystem::build(network, params)?;
    let traj = integrate_rk4(&system, x0, int_cfg)?;
    let steady_time = detect_steady_state(&traj, int_cfg.steady_tol, int_cfg.steady_window);
    let snaps = extract_snapshots(&traj, policy)?;
    let thresholds = system.thresholds();
    let graph = network.interaction_graph();

    let rows: Vec<_> = snaps.iter().map(|s| s.values.clone()).collect();
    let profiles = binarize_batch(&graph, &rows, bin_cfg, markers)?;

    let snapshots = snaps
        .into_iter()
        .zip(profiles)
        .map(|(snap, recovered)| {
            let truth = threshold_binarize(&snap.values, &thresholds);
            let dissimilarity = dissimilarity(&truth, &recovered.states);
            SnapshotValidation {
                time: snap.time,
                truth,
                recovered,
                dissimilarity,
            }
        })
        .collect();
    Ok(ValidationReport {
        snapshots,
        steady_time,
        warnings: system.warnings,
    })
}

/// Randomized robustness study: draw kinetic parameters and initial
/// conditions, keep the runs that settle, and score the recovered
/// steady-state profile against the thresholded truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_runs: usize,
    pub seed: u64,
    pub kappa_range: (f64, f64),
    pub gamma_range: (f64, f64),
    /// Thresholds are drawn as 1 + delta with delta in this range.
    pub theta_delta_range: (f64, f64),
    pub x0_range: (f64, f64),
    pub hill_n: f64,
    pub integration: IntegrationConfig,
    pub binarizer: BinarizerConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_runs: 1000,
            seed: 0,
            kappa_range: (3.0, 100.0),
            gamma_range: (0.25, 2.0),
            theta_delta_range: (-0.5, 0.5),
            x0_range: (0.0, 1.0),
            hill_n: 4.0,
            integration: IntegrationConfig {
                dt: 0.005,
                t_end: 150.0,
                steady_tol: 1e-4,
                steady_window: 5.0,
            },
            binarizer: BinarizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    /// Settled and scored.
    Reached,
    /// No steady state within the horizon (oscillation or slow decay).
    Skipped,
    /// Integration or binarization error.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub outcome: RunOutcome,
    pub steady_time: Option<f64>,
    pub dissimilarity: Option<Dissimilarity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub attempted: usize,
    pub reached: usize,
    pub skipped: usize,
    pub failed: usize,
    pub max_dissimilarity: Option<Dissimilarity>,
    pub mean_dissimilarity: Option<f64>,
    /// Sample standard deviation of every kappa drawn; a quick check
    /// that the seeded sampler really covers the configured range.
    pub kappa_std: f64,
    pub runs: Vec<RunRecord>,
}

pub fn parameter_sweep(
    network: &BooleanNetwork,
    cfg: &SweepConfig,
) -> Result<SweepReport, ValidateError> {
    cfg.binarizer.validate()?;
    cfg.integration.validate()?;
    let graph = network.interaction_graph();
    let genes: Vec<GeneId> = network.genes().cloned().collect();
    let markers = Biomarkers::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut runs = Vec::with_capacity(cfg.n_runs);
    let mut kappas = Vec::with_capacity(cfg.n_runs * genes.len());
    let (mut reached, mut skipped, mut failed) = (0usize, 0usize, 0usize);
    let mut diss: Vec<Dissimilarity> = Vec::new();

    for run in 0..cfg.n_runs {
        let mut params = HillParams {
            kappa: BTreeMap::new(),
            gamma: BTreeMap::new(),
            theta: BTreeMap::new(),
            n: cfg.hill_n,
        };
        let mut x0 = BTreeMap::new();
        for g in &genes {
            let k = rng.gen_range(cfg.kappa_range.0..=cfg.kappa_range.1);
            kappas.push(k);
            params.kappa.insert(g.clone(), k);
            params
                .gamma
                .insert(g.clone(), rng.gen_range(cfg.gamma_range.0..=cfg.gamma_range.1));
            let delta = rng.gen_range(cfg.theta_delta_range.0..=cfg.theta_delta_range.1);
            params.theta.insert(g.clone(), 1.0 + delta);
            x0.insert(g.clone(), rng.gen_range(cfg.x0_range.0..=cfg.x0_range.1));
        }

        let record = (|| -> Result<RunRecord, ValidateError> {
            let system = HillOdeSystem::build(network, &params)?;
            let traj = integrate_rk4(&system, &x0, &cfg.integration)?;
            let steady = detect_steady_state(
                &traj,
                cfg.integration.steady_tol,
                cfg.integration.steady_window,
            );
            let Some(t) = steady else {
                return Ok(RunRecord {
                    run,
                    outcome: RunOutcome::Skipped,
                    steady_time: None,
                    dissimilarity: None,
                });
            };
            let snap = extract_snapshots(&traj, &SnapshotPolicy::AtTimes { times: vec![t] })?
                .pop()
                .expect("one snapshot");
            let truth = threshold_binarize(&snap.values, &system.thresholds());
            let profile = binarize_batch(&graph, &[snap.values], &cfg.binarizer, &markers)?
                .pop()
                .expect("one profile");
            let d = dissimilarity(&truth, &profile.states);
            Ok(RunRecord {
                run,
                outcome: RunOutcome::Reached,
                steady_time: Some(t),
                dissimilarity: Some(d),
            })
        })()
        .unwrap_or_else(|_| RunRecord {
            run,
            outcome: RunOutcome::Failed,
            steady_time: None,
            dissimilarity: None,
        });

        match record.outcome {
            RunOutcome::Reached => {
                reached += 1;
                diss.push(record.dissimilarity.expect("scored run"));
            }
            RunOutcome::Skipped => skipped += 1,
            RunOutcome::Failed => failed += 1,
        }
        runs.push(record);
    }

    let kappa_std = sample_std(&kappas);
    Ok(SweepReport {
        attempted: cfg.n_runs,
        reached,
        skipped,
        failed,
        max_dissimilarity: diss.iter().max().copied(),
        mean_dissimilarity: if diss.is_empty() {
            None
        } else {
            Some(diss.iter().map(|d| d.value()).sum::<f64>() / diss.len() as f64)
        },
        kappa_std,
        runs,
    })
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}
