//! Tri-state binarization by constraint propagation over the signed
//! regulatory graph.
//!
//! One invocation runs: min-max normalization, neutral fill, extreme/
//! biomarker initialization, then sweeps of four phases (forward
//! consensus, back-propagating consensus, harmonization, inconsistency
//! test) until a sweep changes nothing. Within a phase every decision is
//! computed against the profile as it stood at the phase's start and
//! applied in lexicographic gene order, so results never depend on
//! iteration order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::expression::{
    min_max_normalize_rows, ExpressionVector, NormalizationMode, NormalizeError, RawSample,
};
use crate::gene::{GeneId, InteractionSign};
use crate::graph::RegulatoryGraph;
use crate::tri::TriState;

/// How each gene's state came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Extreme,
    Biomarker,
    Forward,
    Backward,
    Harmonized,
    Reinitialized,
    Frozen,
    Unassigned,
}

/// Phase that produced an assignment (for the sweep log).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Forward,
    Backward,
    Harmonize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SweepEvent {
    Assigned {
        sweep: usize,
        phase: Phase,
        gene: GeneId,
        state: TriState,
    },
    Reinitialized {
        sweep: usize,
        target: GeneId,
        genes: Vec<GeneId>,
    },
    Frozen {
        sweep: usize,
        target: GeneId,
        genes: Vec<GeneId>,
    },
}

/// Result of one binarization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryProfile {
    pub states: BTreeMap<GeneId, TriState>,
    pub provenance: BTreeMap<GeneId, Provenance>,
    pub sweep_log: Vec<SweepEvent>,
    /// Set when the sweep loop hit `max_sweeps` before reaching a fixed
    /// point.
    pub truncated: bool,
    /// Sweeps actually executed.
    pub sweeps: usize,
}

impl BinaryProfile {
    pub fn state(&self, g: &GeneId) -> TriState {
        self.states.get(g).copied().unwrap_or(TriState::Na)
    }

    /// Threshold-style profile with no propagation history.
    pub fn from_states(states: BTreeMap<GeneId, TriState>) -> Self {
        let provenance = states
            .iter()
            .map(|(g, s)| {
                (
                    g.clone(),
                    if s.is_defined() {
                        Provenance::Extreme
                    } else {
                        Provenance::Unassigned
                    },
                )
            })
            .collect();
        BinaryProfile {
            states,
            provenance,
            sweep_log: Vec::new(),
            truncated: false,
            sweeps: 0,
        }
    }
}

/// Biomarker prior: genes known active or inactive in the experimental
/// condition. No NA entries by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Biomarkers(BTreeMap<GeneId, bool>);

impl Biomarkers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, gene: GeneId, active: bool) {
        self.0.insert(gene, active);
    }

    pub fn get(&self, g: &GeneId) -> Option<TriState> {
        self.0.get(g).map(|b| TriState::from_bool(*b))
    }

    pub fn contains(&self, g: &GeneId) -> bool {
        self.0.contains_key(g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GeneId, bool)> {
        self.0.iter().map(|(g, b)| (g, *b))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub const EPSILON_CAP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinarizerConfig {
    /// Initialization margin: values <= epsilon become 0, >= 1-epsilon
    /// become 1. Capped at 0.05.
    pub epsilon: f64,
    /// Harmonization tolerance on |tau_i - tau_j|.
    pub delta: f64,
    /// Sweep budget; `None` means 10 * |genes|.
    pub max_sweeps: Option<usize>,
    /// Back-propagate when no defined regulator is consistent and at
    /// least one is NA, instead of requiring every regulator NA.
    pub relaxed_backward: bool,
    /// Allow confusion resets to clear biomarker states.
    pub biomarkers_resettable: bool,
    pub normalization: NormalizationMode,
}

impl Default for BinarizerConfig {
    fn default() -> Self {
        BinarizerConfig {
            epsilon: 0.05,
            delta: 0.05,
            max_sweeps: None,
            relaxed_backward: false,
            biomarkers_resettable: false,
            normalization: NormalizationMode::Global,
        }
    }
}

impl BinarizerConfig {
    pub fn validate(&self) -> Result<(), BinarizeError> {
        if !(0.0..=EPSILON_CAP).contains(&self.epsilon) {
            return Err(BinarizeError::EpsilonOutOfRange(self.epsilon));
        }
        if !(self.delta > 0.0) {
            return Err(BinarizeError::DeltaNotPositive(self.delta));
        }
        Ok(())
    }

    fn sweep_budget(&self, gene_count: usize) -> usize {
        self.max_sweeps.unwrap_or(10 * gene_count.max(1))
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum BinarizeError {
    #[error("epsilon {0} outside [0, 0.05]")]
    EpsilonOutOfRange(f64),
    #[error("delta {0} must be > 0")]
    DeltaNotPositive(f64),
    #[error("biomarker gene `{0}` is not in the regulatory graph")]
    BiomarkerNotInGraph(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

/// A regulator/target value pair is consistent when the regulator's
/// value alone can explain the target's value through the edge sign.
pub fn consistent(target: TriState, sign: InteractionSign, regulator: TriState) -> bool {
    debug_assert!(target.is_defined() && regulator.is_defined());
    match sign {
        InteractionSign::Activator => target == regulator,
        InteractionSign::Inhibitor => target == regulator.negate(),
    }
}

/// Dominance score of a regulator for back-propagation; smaller means
/// more dominant. `B(1-k) + k(1-B)` for activators, `Bk + (1-k)(1-B)`
/// for inhibitors, with B the target's Boolean value.
pub fn tau_score(target: TriState, sign: InteractionSign, kappa: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&kappa));
    let b = if target.as_bool() { 1.0 } else { 0.0 };
    match sign {
        InteractionSign::Activator => b * (1.0 - kappa) + kappa * (1.0 - b),
        InteractionSign::Inhibitor => b * kappa + (1.0 - kappa) * (1.0 - b),
    }
}

/// The unique regulator value consistent with the target under `sign`.
fn consistent_value(target: TriState, sign: InteractionSign) -> TriState {
    match sign {
        InteractionSign::Activator => target,
        InteractionSign::Inhibitor => target.negate(),
    }
}

type States = BTreeMap<GeneId, TriState>;

/// Forward consensus: assign an NA target when every regulator is
/// defined and the configuration is fully determining (all activators 1
/// with all inhibitors 0, or the dual). Quantification over an empty
/// sign class is vacuously true; regulator-less genes are never
/// assigned.
pub fn forward_step(
    graph: &RegulatoryGraph,
    states: &States,
    frozen: &BTreeSet<GeneId>,
) -> Vec<(GeneId, TriState)> {
    let mut out = Vec::new();
    for target in graph.genes() {
        if states[target].is_defined() || frozen.contains(target) {
            continue;
        }
        let regs = graph.regulators_of(target).expect("graph gene");
        if regs.is_empty() || regs.iter().any(|(r, _)| !states[r].is_defined()) {
            continue;
        }
        let all = |want_act: TriState| {
            regs.iter().all(|(r, sign)| match sign {
                InteractionSign::Activator => states[r] == want_act,
                InteractionSign::Inhibitor => states[r] == want_act.negate(),
            })
        };
        if all(TriState::One) {
            out.push((target.clone(), TriState::One));
        } else if all(TriState::Zero) {
            out.push((target.clone(), TriState::Zero));
        }
    }
    out
}

/// One back-propagated assignment: `regulator` received `value` because
/// it minimized tau among `target`'s candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct BackAssignment {
    pub target: GeneId,
    pub target_state: TriState,
    pub regulator: GeneId,
    pub sign: InteractionSign,
    pub tau: f64,
    pub value: TriState,
}

/// Back-propagating consensus: for each defined target whose regulators
/// are all NA (or, in relaxed mode, with no consistent defined regulator
/// and at least one NA), score the candidates with `tau_score` and
/// assign the argmin the unique value consistent with the target. Ties
/// break activators-first, then by name. At most one regulator per
/// target per sweep.
pub fn backward_step(
    graph: &RegulatoryGraph,
    states: &States,
    expr: &ExpressionVector,
    frozen: &BTreeSet<GeneId>,
    relaxed: bool,
) -> Vec<BackAssignment> {
    let mut out = Vec::new();
    for target in graph.genes() {
        let tstate = states[target];
        if !tstate.is_defined() {
            continue;
        }
        let regs = graph.regulators_of(target).expect("graph gene");
        if regs.is_empty() {
            continue;
        }
        let na: Vec<_> = regs
            .iter()
            .filter(|(r, _)| !states[r].is_defined() && !frozen.contains(r))
            .collect();
        if na.is_empty() {
            continue;
        }
        let triggered = if relaxed {
            !regs
                .iter()
                .any(|(r, sign)| states[r].is_defined() && consistent(tstate, *sign, states[r]))
        } else {
            na.len() == regs.len()
        };
        if !triggered {
            continue;
        }
        let best = na
            .iter()
            .map(|(r, sign)| (tau_score(tstate, *sign, expr.kappa(r)), *sign, r))
            .min_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("tau is finite")
                    .then(a.1.cmp(&b.1))
                    .then(a.2.cmp(b.2))
            })
            .expect("non-empty candidates");
        out.push(BackAssignment {
            target: target.clone(),
            target_state: tstate,
            regulator: best.2.clone(),
            sign: best.1,
            tau: best.0,
            value: consistent_value(tstate, best.1),
        });
    }
    out
}

/// Harmonization: extend each back-propagated assignment to the target's
/// remaining NA regulators whose tau is within `delta` of the chosen
/// one; cooperative (same sign class) regulators copy the value,
/// non-cooperative ones get its negation.
pub fn harmonize(
    graph: &RegulatoryGraph,
    states: &States,
    expr: &ExpressionVector,
    frozen: &BTreeSet<GeneId>,
    delta: f64,
    back: &[BackAssignment],
) -> Vec<(GeneId, TriState)> {
    let mut out = Vec::new();
    for assignment in back {
        let regs = graph
            .regulators_of(&assignment.target)
            .expect("graph gene");
        for (reg, sign) in regs {
            if reg == &assignment.regulator
                || states[reg].is_defined()
                || frozen.contains(reg)
            {
                continue;
            }
            let tau_j = tau_score(assignment.target_state, *sign, expr.kappa(reg));
            if (assignment.tau - tau_j).abs() < delta {
                let value = if *sign == assignment.sign {
                    assignment.value
                } else {
                    assignment.value.negate()
                };
                out.push((reg.clone(), value));
            }
        }
    }
    out
}

/// Key identifying one confusion configuration: the target, its value,
/// and the full regulator assignment tuple.
type ConfusionKey = (GeneId, TriState, Vec<(GeneId, TriState)>);

#[derive(Debug, Clone)]
pub struct Confusion {
    pub target: GeneId,
    pub members: Vec<GeneId>,
    pub key: ConfusionKey,
}

/// Inconsistency test: a defined target with every regulator defined and
/// every one inconsistent is a confusion; the target and all its
/// regulators are candidates for re-initialization.
pub fn inconsistency_test(graph: &RegulatoryGraph, states: &States) -> Vec<Confusion> {
    let mut out = Vec::new();
    for target in graph.genes() {
        let tstate = states[target];
        if !tstate.is_defined() {
            continue;
        }
        let regs = graph.regulators_of(target).expect("graph gene");
        if regs.is_empty() || regs.iter().any(|(r, _)| !states[r].is_defined()) {
            continue;
        }
        if regs
            .iter()
            .all(|(r, sign)| !consistent(tstate, *sign, states[r]))
        {
            let mut members: Vec<GeneId> = vec![target.clone()];
            for (r, _) in regs {
                if !members.contains(r) {
                    members.push(r.clone());
                }
            }
            let key = (
                target.clone(),
                tstate,
                regs.iter().map(|(r, _)| (r.clone(), states[r])).collect(),
            );
            out.push(Confusion {
                target: target.clone(),
                members,
                key,
            });
        }
    }
    out
}

/// Extreme/biomarker initialization of a normalized, neutral-filled
/// expression vector. Neutral-filled genes are never initialized by the
/// epsilon rules.
pub fn initialize(
    graph: &RegulatoryGraph,
    expr: &ExpressionVector,
    cfg: &BinarizerConfig,
    markers: &Biomarkers,
) -> Result<BinaryProfile, BinarizeError> {
    cfg.validate()?;
    for (g, _) in markers.iter() {
        if !graph.contains(g) {
            return Err(BinarizeError::BiomarkerNotInGraph(g.to_string()));
        }
    }
    let mut states = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    for g in graph.genes() {
        let (state, prov) = if let Some(s) = markers.get(g) {
            (s, Provenance::Biomarker)
        } else if !expr.is_filled(g) {
            let v = expr.kappa(g);
            if v <= cfg.epsilon {
                (TriState::Zero, Provenance::Extreme)
            } else if v >= 1.0 - cfg.epsilon {
                (TriState::One, Provenance::Extreme)
            } else {
                (TriState::Na, Provenance::Unassigned)
            }
        } else {
            (TriState::Na, Provenance::Unassigned)
        };
        states.insert(g.clone(), state);
        provenance.insert(g.clone(), prov);
    }
    Ok(BinaryProfile {
        states,
        provenance,
        sweep_log: Vec::new(),
        truncated: false,
        sweeps: 0,
    })
}

/// Run the sweep loop on an initialized profile until a sweep produces
/// no assignment and no reset, or the sweep budget runs out.
pub fn propagate(
    graph: &RegulatoryGraph,
    expr: &ExpressionVector,
    cfg: &BinarizerConfig,
    markers: &Biomarkers,
    mut profile: BinaryProfile,
) -> BinaryProfile {
    let budget = cfg.sweep_budget(graph.gene_count());
    let mut frozen: BTreeSet<GeneId> = BTreeSet::new();
    let mut seen: BTreeSet<ConfusionKey> = BTreeSet::new();

    for sweep in 1..=budget {
        let mut changed = false;

        // Forward consensus.
        let snapshot = profile.states.clone();
        for (gene, state) in forward_step(graph, &snapshot, &frozen) {
            profile.states.insert(gene.clone(), state);
            profile.provenance.insert(gene.clone(), Provenance::Forward);
            profile.sweep_log.push(SweepEvent::Assigned {
                sweep,
                phase: Phase::Forward,
                gene,
                state,
            });
            changed = true;
        }

        // Back-propagating consensus. Two targets may pick the same
        // regulator; the lexicographically first target wins.
        let snapshot = profile.states.clone();
        let back = backward_step(graph, &snapshot, expr, &frozen, cfg.relaxed_backward);
        let mut applied_back = Vec::new();
        for a in back {
            if profile.states[&a.regulator].is_defined() {
                continue;
            }
            profile.states.insert(a.regulator.clone(), a.value);
            profile
                .provenance
                .insert(a.regulator.clone(), Provenance::Backward);
            profile.sweep_log.push(SweepEvent::Assigned {
                sweep,
                phase: Phase::Backward,
                gene: a.regulator.clone(),
                state: a.value,
            });
            changed = true;
            applied_back.push(a);
        }

        // Harmonization.
        let snapshot = profile.states.clone();
        for (gene, state) in harmonize(graph, &snapshot, expr, &frozen, cfg.delta, &applied_back) {
            if profile.states[&gene].is_defined() {
                continue;
            }
            profile.states.insert(gene.clone(), state);
            profile
                .provenance
                .insert(gene.clone(), Provenance::Harmonized);
            profile.sweep_log.push(SweepEvent::Assigned {
                sweep,
                phase: Phase::Harmonize,
                gene,
                state,
            });
            changed = true;
        }

        // Inconsistency test.
        let snapshot = profile.states.clone();
        for confusion in inconsistency_test(graph, &snapshot) {
            let resettable = |g: &GeneId| cfg.biomarkers_resettable || !markers.contains(g);
            let members: Vec<GeneId> = confusion
                .members
                .iter()
                .filter(|g| resettable(g))
                .cloned()
                .collect();
            if members.is_empty() {
                continue;
            }
            let freeze = !seen.insert(confusion.key.clone());
            for g in &members {
                profile.states.insert(g.clone(), TriState::Na);
                profile.provenance.insert(
                    g.clone(),
                    if freeze {
                        Provenance::Frozen
                    } else {
                        Provenance::Reinitialized
                    },
                );
                if freeze {
                    frozen.insert(g.clone());
                }
            }
            profile.sweep_log.push(if freeze {
                SweepEvent::Frozen {
                    sweep,
                    target: confusion.target,
                    genes: members,
                }
            } else {
                SweepEvent::Reinitialized {
                    sweep,
                    target: confusion.target,
                    genes: members,
                }
            });
            changed = true;
        }

        profile.sweeps = sweep;
        if !changed {
            return profile;
        }
    }
    profile.truncated = true;
    profile
}

/// Full pipeline for one raw snapshot: normalize, neutral-fill,
/// initialize, then propagate to a fixed point.
pub fn binarize(
    graph: &RegulatoryGraph,
    raw: &RawSample,
    cfg: &BinarizerConfig,
    markers: &Biomarkers,
) -> Result<BinaryProfile, BinarizeError> {
    Ok(binarize_batch(graph, std::slice::from_ref(raw), cfg, markers)?
        .pop()
        .expect("one row in, one profile out"))
}

/// Batch pipeline: rows are normalized together under the configured
/// mode (so Global truly spans the whole matrix), then each row is
/// binarized independently.
pub fn binarize_batch(
    graph: &RegulatoryGraph,
    rows: &[RawSample],
    cfg: &BinarizerConfig,
    markers: &Biomarkers,
) -> Result<Vec<BinaryProfile>, BinarizeError> {
    cfg.validate()?;
    let mut vectors = min_max_normalize_rows(rows, cfg.normalization)?;
    vectors
        .iter_mut()
        .for_each(|v| v.fill_neutral(graph.genes()));
    vectors
        .into_iter()
        .map(|expr| {
            let profile = initialize(graph, &expr, cfg, markers)?;
            Ok(propagate(graph, &expr, cfg, markers, profile))
        })
        .collect()
}

/// Binarize an already-normalized vector (values in [0,1]).
pub fn binarize_prepared(
    graph: &RegulatoryGraph,
    expr: &ExpressionVector,
    cfg: &BinarizerConfig,
    markers: &Biomarkers,
) -> Result<BinaryProfile, BinarizeError> {
    let mut expr = expr.clone();
    expr.fill_neutral(graph.genes());
    let profile = initialize(graph, &expr, cfg, markers)?;
    Ok(propagate(graph, &expr, cfg, markers, profile))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gid(s: &str) -> GeneId {
        GeneId::new(s).unwrap()
    }

    fn raw(pairs: &[(&str, f64)]) -> RawSample {
        pairs.iter().map(|(g, v)| (gid(g), *v)).collect()
    }

    fn prepared(pairs: &[(&str, f64)]) -> ExpressionVector {
        ExpressionVector::from_normalized(pairs.iter().map(|(g, v)| (gid(g), *v)).collect())
            .unwrap()
    }

    #[test]
    fn consistency_table() {
        use InteractionSign::*;
        use TriState::*;
        assert!(consistent(One, Activator, One));
        assert!(consistent(Zero, Inhibitor, One));
        assert!(consistent(Zero, Activator, Zero));
        assert!(consistent(One, Inhibitor, Zero));
        assert!(!consistent(One, Activator, Zero));
        assert!(!consistent(Zero, Activator, One));
        assert!(!consistent(One, Inhibitor, One));
        assert!(!consistent(Zero, Inhibitor, Zero));
    }

    #[test]
    fn tau_formula_values() {
        use InteractionSign::*;
        use TriState::*;
        assert!((tau_score(One, Activator, 0.8) - 0.2).abs() < 1e-15);
        assert!((tau_score(One, Inhibitor, 0.8) - 0.8).abs() < 1e-15);
        assert!((tau_score(Zero, Inhibitor, 0.9) - 0.1).abs() < 1e-15);
        assert!((tau_score(Zero, Activator, 0.9) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn epsilon_cap_enforced() {
        let cfg = BinarizerConfig {
            epsilon: 0.2,
            ..Default::default()
        };
        assert_eq!(cfg.validate(), Err(BinarizeError::EpsilonOutOfRange(0.2)));
    }

    #[test]
    fn initialize_extremes_and_biomarkers() {
        let graph = RegulatoryGraph::parse("a + b\nb + c").unwrap();
        let expr = prepared(&[("a", 0.03), ("b", 0.97), ("c", 0.5)]);
        let cfg = BinarizerConfig::default();
        let mut markers = Biomarkers::new();
        markers.set(gid("c"), true);
        let p = initialize(&graph, &expr, &cfg, &markers).unwrap();
        assert_eq!(p.state(&gid("a")), TriState::Zero);
        assert_eq!(p.state(&gid("b")), TriState::One);
        assert_eq!(p.state(&gid("c")), TriState::One);
        assert_eq!(p.provenance[&gid("c")], Provenance::Biomarker);
    }

    #[test]
    fn biomarker_overrides_extreme_threshold() {
        let graph = RegulatoryGraph::parse("a + b").unwrap();
        let expr = prepared(&[("a", 0.5), ("b", 0.5)]);
        let mut markers = Biomarkers::new();
        markers.set(gid("a"), true);
        let p = initialize(&graph, &expr, &BinarizerConfig::default(), &markers).unwrap();
        assert_eq!(p.state(&gid("a")), TriState::One);
    }

    #[test]
    fn biomarker_outside_graph_is_error() {
        let graph = RegulatoryGraph::parse("a + b").unwrap();
        let expr = prepared(&[("a", 0.5), ("b", 0.5)]);
        let mut markers = Biomarkers::new();
        markers.set(gid("zz"), true);
        assert!(matches!(
            initialize(&graph, &expr, &BinarizerConfig::default(), &markers),
            Err(BinarizeError::BiomarkerNotInGraph(_))
        ));
    }

    #[test]
    fn neutral_filled_genes_skip_epsilon_rules() {
        // A filled gene carries 0.5, but even a filled value would never
        // be initialized: construct via fill_neutral and check NA.
        let graph = RegulatoryGraph::parse("a + b\nc").unwrap();
        let mut expr = prepared(&[("a", 0.0), ("b", 1.0)]);
        expr.fill_neutral(graph.genes());
        let p = initialize(&graph, &expr, &BinarizerConfig::default(), &Biomarkers::new())
            .unwrap();
        assert_eq!(p.state(&gid("c")), TriState::Na);
    }

    #[test]
    fn forward_assigns_on_full_consensus() {
        // acts {a1,a2} both One, inhs {i1,i2} both Zero -> target One.
        let graph = RegulatoryGraph::parse("a1 + t\na2 + t\ni1 - t\ni2 - t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("a1"), TriState::One);
        states.insert(gid("a2"), TriState::One);
        states.insert(gid("i1"), TriState::Zero);
        states.insert(gid("i2"), TriState::Zero);
        let got = forward_step(&graph, &states, &BTreeSet::new());
        assert_eq!(got, vec![(gid("t"), TriState::One)]);

        // Dual: inhibitors One, activators Zero -> Zero.
        states.insert(gid("a1"), TriState::Zero);
        states.insert(gid("a2"), TriState::Zero);
        states.insert(gid("i1"), TriState::One);
        states.insert(gid("i2"), TriState::One);
        let got = forward_step(&graph, &states, &BTreeSet::new());
        assert_eq!(got, vec![(gid("t"), TriState::Zero)]);
    }

    #[test]
    fn forward_skips_mixed_and_partial() {
        let graph = RegulatoryGraph::parse("a1 + t\na2 + t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("a1"), TriState::One);
        states.insert(gid("a2"), TriState::Zero);
        assert!(forward_step(&graph, &states, &BTreeSet::new()).is_empty());
        states.insert(gid("a2"), TriState::Na);
        assert!(forward_step(&graph, &states, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn forward_never_assigns_inputs() {
        let graph = RegulatoryGraph::parse("a + b").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("b"), TriState::One);
        assert!(forward_step(&graph, &states, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn backward_picks_most_expressed_activator() {
        let graph = RegulatoryGraph::parse("r1 + t\nr2 + t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("t"), TriState::One);
        let expr = prepared(&[("r1", 0.9), ("r2", 0.4), ("t", 0.9)]);
        let got = backward_step(&graph, &states, &expr, &BTreeSet::new(), false);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].regulator, gid("r1"));
        assert_eq!(got[0].value, TriState::One);
    }

    #[test]
    fn backward_inhibitor_can_dominate() {
        // target One; activator kappa 0.3 (tau 0.7) vs inhibitor kappa
        // 0.1 (tau 0.1): the inhibitor wins and is set to Zero.
        let graph = RegulatoryGraph::parse("a + t\ni - t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("t"), TriState::One);
        let expr = prepared(&[("a", 0.3), ("i", 0.1), ("t", 0.9)]);
        let got = backward_step(&graph, &states, &expr, &BTreeSet::new(), false);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].regulator, gid("i"));
        assert_eq!(got[0].value, TriState::Zero);
    }

    #[test]
    fn backward_requires_all_na_in_strict_mode() {
        let graph = RegulatoryGraph::parse("a + t\nb + t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("t"), TriState::One);
        states.insert(gid("a"), TriState::Zero); // defined, inconsistent
        let expr = prepared(&[("a", 0.3), ("b", 0.4), ("t", 0.9)]);
        assert!(backward_step(&graph, &states, &expr, &BTreeSet::new(), false).is_empty());
        // Relaxed mode fires: no defined regulator is consistent.
        let got = backward_step(&graph, &states, &expr, &BTreeSet::new(), true);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].regulator, gid("b"));
    }

    #[test]
    fn backward_tie_breaks_activators_then_name() {
        // Equal tau: activator kappa 0.8 (tau 0.2) vs... make two
        // activators with equal kappa; lexicographic name breaks.
        let graph = RegulatoryGraph::parse("x + t\nm + t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("t"), TriState::One);
        let expr = prepared(&[("x", 0.8), ("m", 0.8), ("t", 1.0)]);
        let got = backward_step(&graph, &states, &expr, &BTreeSet::new(), false);
        assert_eq!(got[0].regulator, gid("m"));
    }

    #[test]
    fn harmonize_cooperative_and_not() {
        // Backward assigned activator i (tau 0.10, One). Another
        // activator with tau 0.12 copies One; an inhibitor with close
        // tau gets Zero; a far one stays NA.
        let graph = RegulatoryGraph::parse("i + t\nj + t\nk - t\nfar + t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("t"), TriState::One);
        states.insert(gid("i"), TriState::One);
        let expr = prepared(&[("i", 0.90), ("j", 0.88), ("k", 0.11), ("far", 0.60), ("t", 1.0)]);
        let back = vec![BackAssignment {
            target: gid("t"),
            target_state: TriState::One,
            regulator: gid("i"),
            sign: InteractionSign::Activator,
            tau: 0.10,
            value: TriState::One,
        }];
        let got = harmonize(&graph, &states, &expr, &BTreeSet::new(), 0.05, &back);
        // j: tau = 1-0.88 = 0.12, cooperative -> One.
        // k: inhibitor tau = 0.11, non-cooperative -> Zero.
        // far: tau = 0.40, out of delta -> absent.
        assert!(got.contains(&(gid("j"), TriState::One)));
        assert!(got.contains(&(gid("k"), TriState::Zero)));
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn harmonize_respects_delta() {
        let graph = RegulatoryGraph::parse("i + t\nj + t").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("t"), TriState::One);
        states.insert(gid("i"), TriState::One);
        let expr = prepared(&[("i", 0.9), ("j", 0.7), ("t", 1.0)]);
        let back = vec![BackAssignment {
            target: gid("t"),
            target_state: TriState::One,
            regulator: gid("i"),
            sign: InteractionSign::Activator,
            tau: 0.10,
            value: TriState::One,
        }];
        // |0.10 - 0.30| = 0.20 >= delta -> nothing.
        assert!(harmonize(&graph, &states, &expr, &BTreeSet::new(), 0.05, &back).is_empty());
    }

    #[test]
    fn confusion_detects_all_inconsistent() {
        // Fig-5-style: target Zero; activators One, inhibitors Zero.
        let graph = RegulatoryGraph::parse("a1 + s\ni1 - s\na2 + s\ni2 - s").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("s"), TriState::Zero);
        states.insert(gid("a1"), TriState::One);
        states.insert(gid("a2"), TriState::One);
        states.insert(gid("i1"), TriState::Zero);
        states.insert(gid("i2"), TriState::Zero);
        let got = inconsistency_test(&graph, &states);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].members.len(), 5);
    }

    #[test]
    fn no_confusion_with_one_consistent_regulator() {
        let graph = RegulatoryGraph::parse("a + s\nb + s").unwrap();
        let mut states: States = graph.genes().map(|g| (g.clone(), TriState::Na)).collect();
        states.insert(gid("s"), TriState::One);
        states.insert(gid("a"), TriState::One);
        states.insert(gid("b"), TriState::Zero);
        assert!(inconsistency_test(&graph, &states).is_empty());
    }

    #[test]
    fn repeated_confusion_freezes() {
        // Engineered to reproduce the same confusion twice: biomarker t
        // is pinned One, its only regulator r keeps getting re-derived
        // One via forward consensus from the extreme a, but One is
        // inconsistent with t across the inhibiting edge. The first
        // confusion resets r; the second, identical one freezes it.
        let graph = RegulatoryGraph::parse("a + r\nr - t").unwrap();
        let expr = prepared(&[("a", 1.0), ("r", 0.5), ("t", 0.5)]);
        let mut markers = Biomarkers::new();
        markers.set(gid("t"), true);
        let cfg = BinarizerConfig::default();
        let p = binarize_prepared(&graph, &expr, &cfg, &markers).unwrap();
        assert!(!p.truncated, "freeze policy must terminate the loop");
        let froze = p
            .sweep_log
            .iter()
            .any(|e| matches!(e, SweepEvent::Frozen { .. }));
        let reinit = p
            .sweep_log
            .iter()
            .any(|e| matches!(e, SweepEvent::Reinitialized { .. }));
        assert!(reinit, "expected at least one reset: {:?}", p.sweep_log);
        assert!(froze, "expected a freeze event: {:?}", p.sweep_log);
        assert_eq!(p.state(&gid("r")), TriState::Na);
        assert_eq!(p.provenance[&gid("r")], Provenance::Frozen);
        assert_eq!(p.state(&gid("a")), TriState::One);
        assert_eq!(p.state(&gid("t")), TriState::One);
    }

    #[test]
    fn biomarkers_survive_confusion_by_default() {
        let graph = RegulatoryGraph::parse("a + t").unwrap();
        let expr = prepared(&[("a", 0.5), ("t", 0.5)]);
        let mut markers = Biomarkers::new();
        markers.set(gid("a"), true);
        markers.set(gid("t"), false);
        // t=0 with activator a=1: inconsistent, confusion; but both are
        // biomarkers and stay put.
        let cfg = BinarizerConfig::default();
        let p = binarize_prepared(&graph, &expr, &cfg, &markers).unwrap();
        assert_eq!(p.state(&gid("a")), TriState::One);
        assert_eq!(p.state(&gid("t")), TriState::Zero);
    }

    #[test]
    fn all_low_values_with_edgeless_graph_all_zero() {
        let graph = RegulatoryGraph::parse("a\nb\nc").unwrap();
        let expr = prepared(&[("a", 0.0), ("b", 0.02), ("c", 0.05)]);
        let p = binarize_prepared(&graph, &expr, &BinarizerConfig::default(), &Biomarkers::new())
            .unwrap();
        for g in graph.genes() {
            assert_eq!(p.state(g), TriState::Zero);
        }
    }

    #[test]
    fn artificial_snapshot_matches_paper_profile() {
        // Exp_3 of the five-gene artificial network: (0,0,6,0,8).
        let net = crate::logic::BooleanNetwork::parse(
            "g1 = g4 & g3 & g5\ng2 = g1\ng3 = !g2\ng4 = g2\ng5 = g3 & !g4",
        )
        .unwrap();
        let graph = net.interaction_graph();
        let row = raw(&[("g1", 0.0), ("g2", 0.0), ("g3", 6.0), ("g4", 0.0), ("g5", 8.0)]);
        let p = binarize(&graph, &row, &BinarizerConfig::default(), &Biomarkers::new()).unwrap();
        let want = [
            ("g1", TriState::Zero),
            ("g2", TriState::Zero),
            ("g3", TriState::One),
            ("g4", TriState::Zero),
            ("g5", TriState::One),
        ];
        for (g, s) in want {
            assert_eq!(p.state(&gid(g)), s, "gene {g}");
        }
        assert!(!p.truncated);
    }

    #[test]
    fn binarize_is_deterministic_including_log() {
        let graph = RegulatoryGraph::parse("a + t\nb - t\nt + u\nu - a").unwrap();
        let row = raw(&[("a", 3.0), ("b", 1.0), ("t", 2.0), ("u", 9.0)]);
        let cfg = BinarizerConfig::default();
        let p1 = binarize(&graph, &row, &cfg, &Biomarkers::new()).unwrap();
        let p2 = binarize(&graph, &row, &cfg, &Biomarkers::new()).unwrap();
        assert_eq!(p1, p2);
    }
}
