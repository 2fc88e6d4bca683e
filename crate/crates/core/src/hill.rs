//! Compilation of a Boolean network into a Hill-kinetics ODE system.
//!
//! Each gene follows dx/dt = kappa * f(x) - gamma * x, where f is the
//! continuous extension of the gene's update rule: variables map to the
//! activating Hill function of the regulator's concentration, NOT to
//! 1 - v, AND to the product, OR to the probabilistic sum a + b - a*b.
//! Genes without a rule decay exponentially.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gene::GeneId;
use crate::logic::{BoolExpr, BooleanNetwork};

/// Activating Hill function x^n / (x^n + theta^n); 0 at x = 0 even for
/// pathological inputs.
pub fn hill_plus(x: f64, theta: f64, n: f64) -> f64 {
    debug_assert!(x >= 0.0 && theta > 0.0 && n > 0.0);
    let xn = x.powf(n);
    let tn = theta.powf(n);
    if xn == 0.0 && tn == 0.0 {
        return 0.0;
    }
    xn / (xn + tn)
}

/// Inhibiting Hill function, the exact complement of `hill_plus`.
pub fn hill_minus(x: f64, theta: f64, n: f64) -> f64 {
    1.0 - hill_plus(x, theta, n)
}

/// Per-gene kinetic parameters plus the shared Hill exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    /// Maximal production rates.
    pub kappa: BTreeMap<GeneId, f64>,
    /// Linear degradation rates.
    pub gamma: BTreeMap<GeneId, f64>,
    /// Regulation thresholds (a gene's theta applies wherever it acts
    /// as a regulator, and to its own read-out).
    pub theta: BTreeMap<GeneId, f64>,
    /// Hill exponent; steeper means closer to the Boolean limit.
    #[serde(default = "default_hill_n")]
    pub n: f64,
}

pub fn default_hill_n() -> f64 {
    4.0
}

impl HillParams {
    /// Uniform parameters across all genes of a network.
    pub fn uniform<'a>(
        genes: impl IntoIterator<Item = &'a GeneId>,
        kappa: f64,
        gamma: f64,
        theta: f64,
        n: f64,
    ) -> Self {
        let mut k = BTreeMap::new();
        let mut g = BTreeMap::new();
        let mut t = BTreeMap::new();
        for gene in genes {
            k.insert(gene.clone(), kappa);
            g.insert(gene.clone(), gamma);
            t.insert(gene.clone(), theta);
        }
        HillParams {
            kappa: k,
            gamma: g,
            theta: t,
            n,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum HillError {
    #[error("missing {what} for gene `{gene}`")]
    MissingParam { what: &'static str, gene: String },
    #[error("{what} for gene `{gene}` must be positive, got {value}")]
    NonPositive {
        what: &'static str,
        gene: String,
        value: f64,
    },
    #[error("hill exponent must be positive and finite, got {0}")]
    BadExponent(f64),
}

/// Compiled ODE right-hand side for one Boolean network.
#[derive(Debug, Clone)]
pub struct HillOdeSystem {
    genes: Vec<GeneId>,
    index: BTreeMap<GeneId, usize>,
    /// Per gene: (kappa, gamma, optional rule).
    terms: Vec<(f64, f64, Option<BoolExpr>)>,
    theta: Vec<f64>,
    n: f64,
    /// Genes whose production ceiling kappa/gamma cannot reach theta;
    /// they can never switch on in the continuous model.
    pub warnings: Vec<String>,
}

/// Continuous extension of a rule at state `x` (indexed per `index`).
fn extension(
    expr: &BoolExpr,
    x: &[f64],
    index: &BTreeMap<GeneId, usize>,
    theta: &[f64],
    n: f64,
) -> f64 {
    match expr {
        BoolExpr::Var(g) => {
            let i = index[g];
            hill_plus(x[i], theta[i], n)
        }
        BoolExpr::Not(e) => 1.0 - extension(e, x, index, theta, n),
        BoolExpr::And(a, b) => {
            extension(a, x, index, theta, n) * extension(b, x, index, theta, n)
        }
        BoolExpr::Or(a, b) => {
            let va = extension(a, x, index, theta, n);
            let vb = extension(b, x, index, theta, n);
            va + vb - va * vb
        }
    }
}

impl HillOdeSystem {
    pub fn build(network: &BooleanNetwork, params: &HillParams) -> Result<Self, HillError> {
        if !(params.n > 0.0) || !params.n.is_finite() {
            return Err(HillError::BadExponent(params.n));
        }
        let genes: Vec<GeneId> = network.genes().cloned().collect();
        let index: BTreeMap<GeneId, usize> = genes
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i))
            .collect();
        let fetch = |map: &BTreeMap<GeneId, f64>, what: &'static str, g: &GeneId| {
            let v = *map.get(g).ok_or(HillError::MissingParam {
                what,
                gene: g.to_string(),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(HillError::NonPositive {
                    what,
                    gene: g.to_string(),
                    value: v,
                });
            }
            Ok(v)
        };
        let mut terms = Vec::with_capacity(genes.len());
        let mut theta = Vec::with_capacity(genes.len());
        let mut warnings = Vec::new();
        for g in &genes {
            let k = fetch(&params.kappa, "kappa", g)?;
            let gm = fetch(&params.gamma, "gamma", g)?;
            let th = fetch(&params.theta, "theta", g)?;
            if th >= k / gm {
                warnings.push(format!(
                    "gene `{g}`: theta {th} >= kappa/gamma {}; it can never exceed its threshold",
                    k / gm
                ));
            }
            terms.push((k, gm, network.rule(g).cloned()));
            theta.push(th);
        }
        Ok(HillOdeSystem {
            genes,
            index,
            terms,
            theta,
            n: params.n,
            warnings,
        })
    }

    pub fn genes(&self) -> &[GeneId] {
        &self.genes
    }

    pub fn dim(&self) -> usize {
        self.genes.len()
    }

    pub fn theta_of(&self, g: &GeneId) -> f64 {
        self.theta[self.index[g]]
    }

    /// Thresholds keyed by gene, for read-out binarization.
    pub fn thresholds(&self) -> BTreeMap<GeneId, f64> {
        self.genes
            .iter()
            .cloned()
            .zip(self.theta.iter().copied())
            .collect()
    }

    /// Map a gene-keyed state into the system's index order. Genes
    /// absent from `x0` start at zero.
    pub fn pack(&self, x0: &BTreeMap<GeneId, f64>) -> Vec<f64> {
        self.genes
            .iter()
            .map(|g| x0.get(g).copied().unwrap_or(0.0))
            .collect()
    }

    /// Right-hand side: dx[i] = kappa_i * ext(rule_i, x) - gamma_i * x[i].
    pub fn derivative(&self, x: &[f64], dx: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        for (i, (k, gm, rule)) in self.terms.iter().enumerate() {
            let production = match rule {
                Some(expr) => k * extension(expr, x, &self.index, &self.theta, self.n),
                None => 0.0,
            };
            dx[i] = production - gm * x[i];
        }
    }
}
