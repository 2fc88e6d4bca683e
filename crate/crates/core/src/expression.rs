use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::gene::GeneId;

/// Scope over which min and max are taken during min-max scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// One min/max over every finite value in the matrix. The default:
    /// per-gene scaling is degenerate on single snapshots.
    #[default]
    Global,
    /// Min/max per gene column across samples.
    PerGene,
    /// Min/max per sample row across genes.
    PerSample,
}

/// Raw (un-normalized) expression values for one experiment. Missing
/// measurements are simply absent from the map.
pub type RawSample = BTreeMap<GeneId, f64>;

/// Normalized expression values in [0,1]. Genes filled with the neutral
/// constant are tracked so initialization can skip them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionVector {
    values: BTreeMap<GeneId, f64>,
    filled: BTreeSet<GeneId>,
}

pub const NEUTRAL_FILL: f64 = 0.5;

impl ExpressionVector {
    pub fn get(&self, g: &GeneId) -> Option<f64> {
        self.values.get(g).copied()
    }

    /// Expression level used by the back-propagation score; neutral for
    /// genes without a measurement.
    pub fn kappa(&self, g: &GeneId) -> f64 {
        self.get(g).unwrap_or(NEUTRAL_FILL)
    }

    pub fn is_filled(&self, g: &GeneId) -> bool {
        self.filled.contains(g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GeneId, f64)> {
        self.values.iter().map(|(g, v)| (g, *v))
    }

    /// Give every gene of `genes` a value, assigning the neutral 0.5 to
    /// those without a measurement.
    pub fn fill_neutral<'a>(&mut self, genes: impl IntoIterator<Item = &'a GeneId>) {
        for g in genes {
            if !self.values.contains_key(g) {
                self.values.insert(g.clone(), NEUTRAL_FILL);
                self.filled.insert(g.clone());
            }
        }
    }

    /// Build directly from already-normalized values (all in [0,1]).
    pub fn from_normalized(values: BTreeMap<GeneId, f64>) -> Result<Self, NormalizeError> {
        for (g, v) in &values {
            if !(0.0..=1.0).contains(v) {
                return Err(NormalizeError::OutOfRange {
                    gene: g.to_string(),
                    value: *v,
                });
            }
        }
        Ok(ExpressionVector {
            values,
            filled: BTreeSet::new(),
        })
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum NormalizeError {
    #[error("degenerate scale: all values equal ({value}) under {scope}")]
    DegenerateScale { scope: String, value: f64 },
    #[error("no finite values under {scope}")]
    NoValues { scope: String },
    #[error("value {value} for `{gene}` is outside [0,1]")]
    OutOfRange { gene: String, value: f64 },
}

fn scale(values: impl Iterator<Item = f64> + Clone, scope: &str) -> Result<(f64, f64), NormalizeError> {
    let finite = values.filter(|v| v.is_finite());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for v in finite {
        any = true;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !any {
        return Err(NormalizeError::NoValues {
            scope: scope.to_string(),
        });
    }
    if lo == hi {
        return Err(NormalizeError::DegenerateScale {
            scope: scope.to_string(),
            value: lo,
        });
    }
    Ok((lo, hi))
}

/// Min-max scale a set of experiment rows to [0,1] under `mode`'s scope.
/// Missing/NaN entries stay missing for later neutral fill. The scope's
/// minimum maps to exactly 0 and its maximum to exactly 1.
pub fn min_max_normalize_rows(
    rows: &[RawSample],
    mode: NormalizationMode,
) -> Result<Vec<ExpressionVector>, NormalizeError> {
    let apply = |v: f64, lo: f64, hi: f64| (v - lo) / (hi - lo);
    match mode {
        NormalizationMode::Global => {
            let all = rows.iter().flat_map(|r| r.values().copied());
            let (lo, hi) = scale(all.clone(), "global scope")?;
            Ok(rows
                .iter()
                .map(|r| ExpressionVector {
                    values: r
                        .iter()
                        .filter(|(_, v)| v.is_finite())
                        .map(|(g, v)| (g.clone(), apply(*v, lo, hi)))
                        .collect(),
                    filled: BTreeSet::new(),
                })
                .collect())
        }
        NormalizationMode::PerSample => rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let (lo, hi) = scale(r.values().copied(), &format!("sample {i}"))?;
                Ok(ExpressionVector {
                    values: r
                        .iter()
                        .filter(|(_, v)| v.is_finite())
                        .map(|(g, v)| (g.clone(), apply(*v, lo, hi)))
                        .collect(),
                    filled: BTreeSet::new(),
                })
            })
            .collect(),
        NormalizationMode::PerGene => {
            let genes: BTreeSet<&GeneId> = rows.iter().flat_map(|r| r.keys()).collect();
            let mut scales = BTreeMap::new();
            for g in genes {
                let col = rows.iter().filter_map(|r| r.get(g)).copied();
                let (lo, hi) = scale(col, &format!("gene {g}"))?;
                scales.insert(g.clone(), (lo, hi));
            }
            Ok(rows
                .iter()
                .map(|r| ExpressionVector {
                    values: r
                        .iter()
                        .filter(|(_, v)| v.is_finite())
                        .map(|(g, v)| {
                            let (lo, hi) = scales[g];
                            (g.clone(), apply(*v, lo, hi))
                        })
                        .collect(),
                    filled: BTreeSet::new(),
                })
                .collect())
        }
    }
}

/// Single-row convenience wrapper.
pub fn min_max_normalize(
    raw: &RawSample,
    mode: NormalizationMode,
) -> Result<ExpressionVector, NormalizeError> {
    Ok(min_max_normalize_rows(std::slice::from_ref(raw), mode)?
        .pop()
        .expect("one row in, one row out"))
}

/// Parse the expression CSV: header row of gene names, one row per
/// experiment; empty cells or `NaN` are missing values.
pub fn parse_expression_csv(text: &str) -> Result<Vec<RawSample>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<GeneId> = reader
        .headers()
        .map_err(|e| CsvError::Csv(e.to_string()))?
        .iter()
        .map(|h| GeneId::new(h).map_err(|e| CsvError::BadHeader(e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CsvError::Csv(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(CsvError::RowWidth {
                row: idx + 2,
                expected: headers.len(),
                got: record.len(),
            });
        }
        let mut row = RawSample::new();
        for (gene, cell) in headers.iter().zip(record.iter()) {
            if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| CsvError::BadNumber {
                row: idx + 2,
                gene: gene.to_string(),
                cell: cell.to_string(),
            })?;
            if v.is_finite() {
                row.insert(gene.clone(), v);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum CsvError {
    #[error("csv error: {0}")]
    Csv(String),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("row {row}: expected {expected} cells, got {got}")]
    RowWidth {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("row {row}, gene {gene}: cannot parse `{cell}` as a number")]
    BadNumber {
        row: usize,
        gene: String,
        cell: String,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gid(s: &str) -> GeneId {
        GeneId::new(s).unwrap()
    }

    fn row(pairs: &[(&str, f64)]) -> RawSample {
        pairs.iter().map(|(g, v)| (gid(g), *v)).collect()
    }

    #[test]
    fn affine_identity() {
        let r = row(&[("a", 2.0), ("b", 4.0), ("c", 6.0)]);
        let v = min_max_normalize(&r, NormalizationMode::Global).unwrap();
        assert_eq!(v.get(&gid("a")), Some(0.0));
        assert_eq!(v.get(&gid("b")), Some(0.5));
        assert_eq!(v.get(&gid("c")), Some(1.0));
    }

    #[test]
    fn table1_row_extremes_map_to_unit_interval() {
        // 12 finite values, ERK12 missing.
        let r = row(&[
            ("EGFR", 5.5972),
            ("PIK3CA", 7.073),
            ("AKT1", 27.5137),
            ("GSK3", 4.0499),
            ("MDM2", 17.098),
            ("TP53", 2.324),
            ("PTEN", 30.655),
            ("PARP1", 10.7223),
            ("BRCA1", 15.0989),
            ("BCL2", 0.2591),
            ("BAX", 4.0974),
            ("CCND1", 9.147),
        ]);
        let v = min_max_normalize(&r, NormalizationMode::Global).unwrap();
        assert_eq!(v.get(&gid("PTEN")), Some(1.0));
        assert_eq!(v.get(&gid("BCL2")), Some(0.0));
        assert_eq!(v.get(&gid("ERK12")), None);
        // Recompute one interior point by hand: (v - 0.2591) / (30.655 - 0.2591).
        let expected = (5.5972 - 0.2591) / (30.655 - 0.2591);
        assert!((v.get(&gid("EGFR")).unwrap() - expected).abs() < 1e-15);
        for (_, x) in v.iter() {
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn degenerate_scale_is_an_error() {
        let r = row(&[("a", 3.0), ("b", 3.0)]);
        assert!(matches!(
            min_max_normalize(&r, NormalizationMode::Global),
            Err(NormalizeError::DegenerateScale { .. })
        ));
    }

    #[test]
    fn per_gene_single_sample_is_degenerate() {
        let r = row(&[("a", 1.0), ("b", 2.0)]);
        assert!(matches!(
            min_max_normalize(&r, NormalizationMode::PerGene),
            Err(NormalizeError::DegenerateScale { .. })
        ));
    }

    #[test]
    fn per_gene_normalizes_columns() {
        let rows = vec![row(&[("a", 1.0), ("b", 10.0)]), row(&[("a", 3.0), ("b", 30.0)])];
        let vs = min_max_normalize_rows(&rows, NormalizationMode::PerGene).unwrap();
        assert_eq!(vs[0].get(&gid("a")), Some(0.0));
        assert_eq!(vs[1].get(&gid("a")), Some(1.0));
        assert_eq!(vs[0].get(&gid("b")), Some(0.0));
        assert_eq!(vs[1].get(&gid("b")), Some(1.0));
    }

    #[test]
    fn neutral_fill_tracks_placeholders() {
        let r = row(&[("a", 1.0), ("b", 2.0)]);
        let mut v = min_max_normalize(&r, NormalizationMode::Global).unwrap();
        let c = gid("c");
        v.fill_neutral([&c]);
        assert_eq!(v.get(&c), Some(NEUTRAL_FILL));
        assert!(v.is_filled(&c));
        assert!(!v.is_filled(&gid("a")));
    }

    #[test]
    fn csv_missing_cells_and_nan() {
        let rows = parse_expression_csv("a,b,c\n1.0,,NaN\n2.0,3.0,4.0\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].len(), 1);
        assert_eq!(rows[1].len(), 3);
    }

    #[test]
    fn csv_bad_number_reports_position() {
        let err = parse_expression_csv("a,b\n1.0,oops\n").unwrap_err();
        assert!(matches!(err, CsvError::BadNumber { row: 2, .. }));
    }
}
