use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::gene::{GeneId, InteractionSign};

/// A signed, directed regulatory graph. This is the only structural
/// knowledge the binarizer uses.
///
/// Immutable after construction; safe to share read-only across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegulatoryGraph {
    genes: BTreeSet<GeneId>,
    /// (source, target) -> sign; at most one edge per ordered pair.
    edges: BTreeMap<(GeneId, GeneId), InteractionSign>,
    /// target -> regulators, activators first, then lexicographic.
    regulators: BTreeMap<GeneId, Vec<(GeneId, InteractionSign)>>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: expected `SOURCE +|- TARGET` or a bare gene name, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown sign token `{token}`")]
    UnknownSign { line: usize, token: String },
    #[error("line {line}: duplicate edge {from} -> {to}")]
    DuplicateEdge {
        line: usize,
        from: String,
        to: String,
    },
    #[error("line {line}: {cause}")]
    BadName {
        line: usize,
        #[source]
        cause: crate::gene::InvalidGeneName,
    },
    #[error("edge endpoint `{0}` is not a declared gene")]
    DanglingEndpoint(String),
    #[error("unknown gene `{0}`")]
    UnknownGene(String),
}

impl RegulatoryGraph {
    pub fn new(
        genes: impl IntoIterator<Item = GeneId>,
        edges: impl IntoIterator<Item = (GeneId, GeneId, InteractionSign)>,
    ) -> Result<Self, GraphError> {
        let genes: BTreeSet<GeneId> = genes.into_iter().collect();
        let mut map = BTreeMap::new();
        for (src, dst, sign) in edges {
            for end in [&src, &dst] {
                if !genes.contains(end) {
                    return Err(GraphError::DanglingEndpoint(end.to_string()));
                }
            }
            if map.insert((src.clone(), dst.clone()), sign).is_some() {
                return Err(GraphError::DuplicateEdge {
                    line: 0,
                    from: src.to_string(),
                    to: dst.to_string(),
                });
            }
        }
        Ok(Self::from_parts(genes, map))
    }

    fn from_parts(
        genes: BTreeSet<GeneId>,
        edges: BTreeMap<(GeneId, GeneId), InteractionSign>,
    ) -> Self {
        let mut regulators: BTreeMap<GeneId, Vec<(GeneId, InteractionSign)>> =
            genes.iter().map(|g| (g.clone(), Vec::new())).collect();
        for ((src, dst), sign) in &edges {
            regulators
                .get_mut(dst)
                .expect("endpoint checked")
                .push((src.clone(), *sign));
        }
        for regs in regulators.values_mut() {
            regs.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        }
        RegulatoryGraph {
            genes,
            edges,
            regulators,
        }
    }

    /// Parse the edge-list format: one `SOURCE +|- TARGET` per line, a
    /// bare gene name declares an isolated gene, `#` starts a comment,
    /// blank lines are ignored. The result is independent of line order.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut genes = BTreeSet::new();
        let mut edges = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            let name = |s: &str| {
                GeneId::new(s).map_err(|cause| GraphError::BadName { line, cause })
            };
            match toks.as_slice() {
                [gene] => {
                    genes.insert(name(gene)?);
                }
                [src, sign, dst] => {
                    let sign = match *sign {
                        "+" => InteractionSign::Activator,
                        "-" => InteractionSign::Inhibitor,
                        other => {
                            return Err(GraphError::UnknownSign {
                                line,
                                token: other.to_string(),
                            })
                        }
                    };
                    let src = name(src)?;
                    let dst = name(dst)?;
                    genes.insert(src.clone());
                    genes.insert(dst.clone());
                    if edges.insert((src.clone(), dst.clone()), sign).is_some() {
                        return Err(GraphError::DuplicateEdge {
                            line,
                            from: src.to_string(),
                            to: dst.to_string(),
                        });
                    }
                }
                _ => {
                    return Err(GraphError::Malformed {
                        line,
                        text: content.to_string(),
                    })
                }
            }
        }
        Ok(Self::from_parts(genes, edges))
    }

    /// Serialize back to the edge-list format. `parse(serialize(g)) == g`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let with_edges: BTreeSet<&GeneId> = self
            .edges
            .keys()
            .flat_map(|(s, t)| [s, t])
            .collect();
        for g in &self.genes {
            if !with_edges.contains(g) {
                let _ = writeln!(out, "{g}");
            }
        }
        for ((src, dst), sign) in &self.edges {
            let _ = writeln!(out, "{src} {sign} {dst}");
        }
        out
    }

    pub fn genes(&self) -> impl Iterator<Item = &GeneId> {
        self.genes.iter()
    }

    pub fn gene_count(&self) -> usize {
        self.genes.len()
    }

    pub fn contains(&self, g: &GeneId) -> bool {
        self.genes.contains(g)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&GeneId, &GeneId, InteractionSign)> {
        self.edges.iter().map(|((s, t), sign)| (s, t, *sign))
    }

    /// Regulators of `target`, activators first, then by name.
    pub fn regulators_of(
        &self,
        target: &GeneId,
    ) -> Result<&[(GeneId, InteractionSign)], GraphError> {
        self.regulators
            .get(target)
            .map(Vec::as_slice)
            .ok_or_else(|| GraphError::UnknownGene(target.to_string()))
    }
}
