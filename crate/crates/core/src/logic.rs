use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::gene::{GeneId, InteractionSign};
use crate::graph::RegulatoryGraph;

/// Boolean expression over gene variables. Operator precedence when
/// parsing/printing is NOT > AND > OR.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Var(GeneId),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    /// Literal occurrences: each variable with the polarity it appears
    /// under (an odd number of enclosing negations flips it).
    pub fn literals(&self) -> Vec<(GeneId, InteractionSign)> {
        fn walk(e: &BoolExpr, negated: bool, out: &mut Vec<(GeneId, InteractionSign)>) {
            match e {
                BoolExpr::Var(g) => out.push((
                    g.clone(),
                    if negated {
                        InteractionSign::Inhibitor
                    } else {
                        InteractionSign::Activator
                    },
                )),
                BoolExpr::Not(inner) => walk(inner, !negated, out),
                BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                    walk(a, negated, out);
                    walk(b, negated, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, false, &mut out);
        out
    }

    pub fn eval(&self, assignment: &BTreeMap<GeneId, bool>) -> bool {
        match self {
            BoolExpr::Var(g) => *assignment.get(g).unwrap_or(&false),
            BoolExpr::Not(e) => !e.eval(assignment),
            BoolExpr::And(a, b) => a.eval(assignment) && b.eval(assignment),
            BoolExpr::Or(a, b) => a.eval(assignment) || b.eval(assignment),
        }
    }

    fn fmt_prec(&self, out: &mut String, parent: u8) {
        let prec = match self {
            BoolExpr::Var(_) | BoolExpr::Not(_) => 3,
            BoolExpr::And(..) => 2,
            BoolExpr::Or(..) => 1,
        };
        if prec < parent {
            out.push('(');
        }
        match self {
            BoolExpr::Var(g) => out.push_str(g.as_str()),
            BoolExpr::Not(e) => {
                out.push('!');
                e.fmt_prec(out, 4);
            }
            BoolExpr::And(a, b) => {
                a.fmt_prec(out, 2);
                out.push_str(" & ");
                b.fmt_prec(out, 2);
            }
            BoolExpr::Or(a, b) => {
                a.fmt_prec(out, 1);
                out.push_str(" | ");
                b.fmt_prec(out, 1);
            }
        }
        if prec < parent {
            out.push(')');
        }
    }
}

impl std::fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        self.fmt_prec(&mut s, 0);
        f.write_str(&s)
    }
}

/// Per-gene logic rules. Genes referenced but never defined are
/// constant inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanNetwork {
    rules: BTreeMap<GeneId, BoolExpr>,
    genes: BTreeSet<GeneId>,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("line {line}: expected `TARGET = EXPR`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: target `{target}` is defined twice")]
    RedefinedTarget { line: usize, target: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: regulator `{gene}` appears with both polarities in the rule for `{target}`")]
    MixedPolarity {
        line: usize,
        gene: String,
        target: String,
    },
    #[error("line {line}: {cause}")]
    BadName {
        line: usize,
        #[source]
        cause: crate::gene::InvalidGeneName,
    },
}

impl BooleanNetwork {
    pub fn new(rules: BTreeMap<GeneId, BoolExpr>) -> Result<Self, LogicError> {
        let mut genes: BTreeSet<GeneId> = rules.keys().cloned().collect();
        for (target, expr) in &rules {
            check_polarity(target, expr, 0)?;
            for (g, _) in expr.literals() {
                genes.insert(g);
            }
        }
        Ok(BooleanNetwork { rules, genes })
    }

    /// Parse the logic format: one `TARGET = EXPR` per line with
    /// operators `!`, `&`, `|` and parentheses; `#` comments.
    pub fn parse(text: &str) -> Result<Self, LogicError> {
        let mut rules = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (lhs, rhs) = content.split_once('=').ok_or_else(|| LogicError::Malformed {
                line,
                text: content.to_string(),
            })?;
            let target = GeneId::new(lhs.trim())
                .map_err(|cause| LogicError::BadName { line, cause })?;
            let expr = parse_expr(rhs, line)?;
            check_polarity(&target, &expr, line)?;
            if rules.insert(target.clone(), expr).is_some() {
                return Err(LogicError::RedefinedTarget {
                    line,
                    target: target.to_string(),
                });
            }
        }
        Self::new(rules)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (target, expr) in &self.rules {
            let _ = writeln!(out, "{target} = {expr}");
        }
        out
    }

    pub fn rules(&self) -> impl Iterator<Item = (&GeneId, &BoolExpr)> {
        self.rules.iter()
    }

    pub fn rule(&self, g: &GeneId) -> Option<&BoolExpr> {
        self.rules.get(g)
    }

    pub fn genes(&self) -> impl Iterator<Item = &GeneId> {
        self.genes.iter()
    }

    pub fn gene_count(&self) -> usize {
        self.genes.len()
    }

    /// Signed interaction graph implied by the rules: one edge per
    /// (regulator, target) pair, Activator where the regulator occurs
    /// un-negated and Inhibitor where it occurs negated.
    pub fn interaction_graph(&self) -> RegulatoryGraph {
        let mut edges = Vec::new();
        let mut seen = BTreeSet::new();
        for (target, expr) in &self.rules {
            for (reg, sign) in expr.literals() {
                if seen.insert((reg.clone(), target.clone())) {
                    edges.push((reg, target.clone(), sign));
                }
            }
        }
        RegulatoryGraph::new(self.genes.iter().cloned(), edges)
            .expect("network invariants guarantee a well-formed graph")
    }
}

fn check_polarity(target: &GeneId, expr: &BoolExpr, line: usize) -> Result<(), LogicError> {
    let mut polarity: BTreeMap<GeneId, InteractionSign> = BTreeMap::new();
    for (g, sign) in expr.literals() {
        if let Some(prev) = polarity.insert(g.clone(), sign) {
            if prev != sign {
                return Err(LogicError::MixedPolarity {
                    line,
                    gene: g.to_string(),
                    target: target.to_string(),
                });
            }
        }
    }
    Ok(())
}

// Recursive-descent parser: or := and ('|' and)*, and := unary ('&' unary)*,
// unary := '!' unary | '(' or ')' | ident.
struct Tokens<'a> {
    rest: &'a str,
    line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
}

impl<'a> Tokens<'a> {
    fn next_tok(&mut self) -> Result<Option<Tok>, LogicError> {
        self.rest = self.rest.trim_start();
        let mut chars = self.rest.chars();
        let Some(c) = chars.next() else {
            return Ok(None);
        };
        let tok = match c {
            '!' => Tok::Not,
            '&' => Tok::And,
            '|' => Tok::Or,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_alphanumeric() || c == '_' => {
                let end = self
                    .rest
                    .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                    .unwrap_or(self.rest.len());
                let (ident, rest) = self.rest.split_at(end);
                self.rest = rest;
                return Ok(Some(Tok::Ident(ident.to_string())));
            }
            other => {
                return Err(LogicError::Syntax {
                    line: self.line,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        self.rest = chars.as_str();
        Ok(Some(tok))
    }

    fn peek(&mut self) -> Result<Option<Tok>, LogicError> {
        let save = self.rest;
        let tok = self.next_tok()?;
        self.rest = save;
        Ok(tok)
    }
}

fn parse_expr(text: &str, line: usize) -> Result<BoolExpr, LogicError> {
    let mut toks = Tokens { rest: text, line };
    let expr = parse_or(&mut toks)?;
    if let Some(tok) = toks.peek()? {
        return Err(LogicError::Syntax {
            line,
            msg: format!("trailing input at `{tok:?}`"),
        });
    }
    Ok(expr)
}

fn parse_or(t: &mut Tokens<'_>) -> Result<BoolExpr, LogicError> {
    let mut lhs = parse_and(t)?;
    while t.peek()? == Some(Tok::Or) {
        t.next_tok()?;
        let rhs = parse_and(t)?;
        lhs = BoolExpr::Or(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_and(t: &mut Tokens<'_>) -> Result<BoolExpr, LogicError> {
    let mut lhs = parse_unary(t)?;
    while t.peek()? == Some(Tok::And) {
        t.next_tok()?;
        let rhs = parse_unary(t)?;
        lhs = BoolExpr::And(Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_unary(t: &mut Tokens<'_>) -> Result<BoolExpr, LogicError> {
    match t.next_tok()? {
        Some(Tok::Not) => Ok(BoolExpr::Not(Box::new(parse_unary(t)?))),
        Some(Tok::LParen) => {
            let inner = parse_or(t)?;
            match t.next_tok()? {
                Some(Tok::RParen) => Ok(inner),
                _ => Err(LogicError::Syntax {
                    line: t.line,
                    msg: "unbalanced parentheses".into(),
                }),
            }
        }
        Some(Tok::Ident(name)) => {
            let g = GeneId::new(name).map_err(|cause| LogicError::BadName {
                line: t.line,
                cause,
            })?;
            Ok(BoolExpr::Var(g))
        }
        other => Err(LogicError::Syntax {
            line: t.line,
            msg: format!("expected expression, got `{other:?}`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gid(s: &str) -> GeneId {
        GeneId::new(s).unwrap()
    }

    #[test]
    fn parses_simple_negation() {
        let net = BooleanNetwork::parse("g3 = !g2").unwrap();
        assert_eq!(
            net.rule(&gid("g3")),
            Some(&BoolExpr::Not(Box::new(BoolExpr::Var(gid("g2")))))
        );
    }

    #[test]
    fn precedence_not_and_or() {
        let net = BooleanNetwork::parse("TP53 = !MDM2 & (BRCA1 | !PARP1)").unwrap();
        let expr = net.rule(&gid("TP53")).unwrap();
        match expr {
            BoolExpr::And(a, b) => {
                assert!(matches!(**a, BoolExpr::Not(_)));
                match &**b {
                    BoolExpr::Or(l, r) => {
                        assert!(matches!(**l, BoolExpr::Var(_)));
                        assert!(matches!(**r, BoolExpr::Not(_)));
                    }
                    other => panic!("expected Or, got {other:?}"),
                }
            }
            other => panic!("expected And, got {other:?}"),
        }
    }

    #[test]
    fn or_binds_weaker_than_and() {
        let net = BooleanNetwork::parse("x = a & b | c").unwrap();
        assert!(matches!(net.rule(&gid("x")).unwrap(), BoolExpr::Or(..)));
    }

    #[test]
    fn mixed_polarity_rejected() {
        let err = BooleanNetwork::parse("a = b & !b").unwrap_err();
        assert!(matches!(err, LogicError::MixedPolarity { .. }));
    }

    #[test]
    fn redefined_target_rejected() {
        let err = BooleanNetwork::parse("a = b\na = c").unwrap_err();
        assert!(matches!(err, LogicError::RedefinedTarget { line: 2, .. }));
    }

    #[test]
    fn unbalanced_parens_rejected() {
        assert!(BooleanNetwork::parse("a = (b & c").is_err());
        assert!(BooleanNetwork::parse("a = b)").is_err());
    }

    #[test]
    fn single_rule_gives_one_activator_edge() {
        let net = BooleanNetwork::parse("b = a").unwrap();
        let g = net.interaction_graph();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].2, InteractionSign::Activator);
        assert_eq!(edges[0].0.as_str(), "a");
        assert_eq!(edges[0].1.as_str(), "b");
    }

    const ARTIFICIAL: &str = "g1 = g4 & g3 & g5\ng2 = g1\ng3 = !g2\ng4 = g2\ng5 = g3 & !g4\n";

    #[test]
    fn artificial_network_graph_matches_figure() {
        let net = BooleanNetwork::parse(ARTIFICIAL).unwrap();
        let g = net.interaction_graph();
        assert_eq!(g.gene_count(), 5);
        assert_eq!(g.edge_count(), 8);
        let inhibitors = g
            .edges()
            .filter(|(_, _, s)| *s == InteractionSign::Inhibitor)
            .count();
        assert_eq!(inhibitors, 2);
    }

    #[test]
    fn round_trip_identity() {
        let net = BooleanNetwork::parse(ARTIFICIAL).unwrap();
        let again = BooleanNetwork::parse(&net.serialize()).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn rule_less_genes_are_inputs() {
        let net = BooleanNetwork::parse("b = a & c").unwrap();
        assert_eq!(net.gene_count(), 3);
        assert!(net.rule(&gid("a")).is_none());
    }
}
