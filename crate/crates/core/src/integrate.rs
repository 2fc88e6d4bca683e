//! Fixed-step RK4 integration of a compiled Hill system, steady-state
//! detection, and snapshot extraction for the downstream binarizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expression::RawSample;
use crate::gene::GeneId;
use crate::hill::HillOdeSystem;
use crate::tri::TriState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Max-norm derivative bound below which the system counts as
    /// settled.
    pub steady_tol: f64,
    /// Length of time the bound must hold.
    pub steady_window: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            dt: 0.01,
            t_end: 100.0,
            steady_tol: 1e-4,
            steady_window: 5.0,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(IntegrateError::BadStep(self.dt));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(IntegrateError::BadHorizon(self.t_end));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum IntegrateError {
    #[error("step size {0} must be positive and finite")]
    BadStep(f64),
    #[error("time horizon {0} must be positive and finite")]
    BadHorizon(f64),
    #[error("state became non-finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("snapshot time {t} is outside the integrated range [0, {t_end}]")]
    SnapshotOutOfRange { t: f64, t_end: f64 },
    #[error("snapshot policy produced no snapshots")]
    EmptyPolicy,
}

/// Dense output of one integration, sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    genes: Vec<GeneId>,
    times: Vec<f64>,
    /// Row-major: states[i] is the state at times[i].
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn genes(&self) -> &[GeneId] {
        &self.genes
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty trajectory")
    }

    fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Index of the sample closest to `t`.
    fn index_at(&self, t: f64) -> usize {
        let i = (t / self.dt()).round() as usize;
        i.min(self.times.len() - 1)
    }

    /// Gene-keyed values at sample `i`.
    pub fn sample(&self, i: usize) -> RawSample {
        self.genes
            .iter()
            .cloned()
            .zip(self.states[i].iter().copied())
            .collect()
    }
}

/// Classic fixed-step fourth-order Runge-Kutta. Concentrations are
/// clamped at zero after each step; a non-finite state aborts.
pub fn integrate_rk4(
    system: &HillOdeSystem,
    x0: &BTreeMap<GeneId, f64>,
    cfg: &IntegrationConfig,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate()?;
    let dim = system.dim();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut x = system.pack(x0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x.clone());

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let h = cfg.dt;

    for step in 1..=steps {
        system.derivative(&x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        system.derivative(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        system.derivative(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + h * k3[i];
        }
        system.derivative(&tmp, &mut k4);
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if x[i] < 0.0 {
                x[i] = 0.0;
            }
        }
        let t = step as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFinite { t });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory {
        genes: system.genes().to_vec(),
        times,
        states,
    })
}

/// Earliest time at which the system counts as settled: the max-norm
/// finite-difference derivative stays below `tol` for a full window.
/// Returns the end of that window, or `None` if the bound never holds
/// long enough within the horizon.
pub fn detect_steady_state(traj: &Trajectory, tol: f64, window: f64) -> Option<f64> {
    if traj.len() < 2 {
        return None;
    }
    let dt = traj.dt();
    let w = (window / dt).ceil() as usize;
    if w == 0 || w >= traj.len() {
        return None;
    }
    // quiet[j]: step j -> j+1 moved less than tol per unit time.
    let n = traj.len() - 1;
    let mut run = 0usize;
    for j in 0..n {
        let d = traj.states[j]
            .iter()
            .zip(&traj.states[j + 1])
            .map(|(a, b)| (b - a).abs() / dt)
            .fold(0.0f64, f64::max);
        if d < tol {
            run += 1;
            if run >= w {
                return Some(traj.times[j + 1]);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Where to read snapshots off a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum SnapshotPolicy {
    /// Explicit times (nearest trajectory sample).
    AtTimes { times: Vec<f64> },
    /// `k` snapshots spaced `spacing` apart, the last at the end of the
    /// trajectory.
    LateK { k: usize, spacing: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub values: RawSample,
}

pub fn extract_snapshots(
    traj: &Trajectory,
    policy: &SnapshotPolicy,
) -> Result<Vec<Snapshot>, IntegrateError> {
    let t_end = *traj.times().last().expect("non-empty trajectory");
    let times: Vec<f64> = match policy {
        SnapshotPolicy::AtTimes { times } => {
            if times.is_empty() {
                return Err(IntegrateError::EmptyPolicy);
            }
            times.clone()
        }
        SnapshotPolicy::LateK { k, spacing } => {
            if *k == 0 {
                return Err(IntegrateError::EmptyPolicy);
            }
            (0..*k)
                .rev()
                .map(|i| t_end - i as f64 * spacing)
                .collect()
        }
    };
    times
        .into_iter()
        .map(|t| {
            if !(0.0..=t_end + 1e-9).contains(&t) {
                return Err(IntegrateError::SnapshotOutOfRange { t, t_end });
            }
            let i = traj.index_at(t);
            Ok(Snapshot {
                time: traj.times[i],
                values: traj.sample(i),
            })
        })
        .collect()
}

/// Boolean read-out of a continuous state: a gene is on when its value
/// reaches its threshold (the boundary counts as on). Never NA.
pub fn threshold_binarize(
    values: &RawSample,
    thresholds: &BTreeMap<GeneId, f64>,
) -> BTreeMap<GeneId, TriState> {
    values
        .iter()
        .map(|(g, v)| {
            let theta = thresholds.get(g).copied().unwrap_or(f64::INFINITY);
            (g.clone(), TriState::from_bool(*v >= theta))
        })
        .collect()
}
