//! Parsing accuracy on E2E-style data: each row pairs a meaning
//! representation (`name[The Eagle], food[French], ...`) with a reference
//! sentence. The backend parses the sentence; the result must equal the
//! meaning representation as a set of `attribute(slot, value)` predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{understand, FewShot, NlBackend, NlError, UnderstandRequest};
use crate::ontology::Ontology;
use crate::predicate::{Predicate, PredicateSet, Style, Value};

const E2E_ONTOLOGY: &str = include_str!("../../data/e2e.ontology.toml");

/// Dataset attribute names and the slot each maps to.
const SLOT_NAMES: &[(&str, &str)] = &[
    ("name", "name"),
    ("eatType", "establishment"),
    ("food", "food type"),
    ("priceRange", "price range"),
    ("customer rating", "customer rating"),
    ("area", "area"),
    ("familyFriendly", "family friendly"),
    ("near", "near"),
];

pub const NORMALIZATION: &[&str] = &[
    "slot names mapped to canonical slots (eatType -> establishment, food -> food type, priceRange -> price range, familyFriendly -> family friendly)",
    "values trimmed and lowercased",
    "predicates compared as unordered sets of attribute(slot, value); duplicates ignored",
    "output that fails to parse or validate after one repair counts as wrong",
];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset not found: {0}")]
    DatasetMissing(String),
    #[error("dataset row {row}: {message}")]
    Format { row: usize, message: String },
    #[error(transparent)]
    Backend(#[from] NlError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct E2eRow {
    pub mr: String,
    pub text: String,
    /// (canonical slot, value) in dataset order.
    pub attributes: Vec<(String, String)>,
}

impl E2eRow {
    pub fn gold(&self) -> PredicateSet {
        self.attributes
            .iter()
            .map(|(s, v)| Predicate::new("attribute", vec![Value::atom(s), Value::atom(v)]))
            .collect()
    }

    pub fn gold_text(&self) -> String {
        self.gold().serialize(Style::Concierge)
    }
}

pub fn canonical_slot(raw: &str) -> String {
    let raw = raw.trim();
    SLOT_NAMES
        .iter()
        .find(|(k, v)| k.eq_ignore_ascii_case(raw) || v.eq_ignore_ascii_case(raw))
        .map(|(_, v)| v.to_string())
        .unwrap_or_else(|| raw.to_string())
}

pub fn parse_mr(mr: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut rest = mr.trim();
    while !rest.is_empty() {
        let open = rest.find('[').ok_or_else(|| format!("missing `[` in `{rest}`"))?;
        let close = rest[open..].find(']').map(|i| open + i).ok_or_else(|| format!("missing `]` in `{rest}`"))?;
        let slot = rest[..open].trim().trim_start_matches(',').trim();
        if slot.is_empty() {
            return Err(format!("empty attribute name in `{mr}`"));
        }
        out.push((canonical_slot(slot), rest[open + 1..close].trim().to_string()));
        rest = rest[close + 1..].trim_start().trim_start_matches(',').trim_start();
    }
    Ok(out)
}

pub fn load_e2e(path: impl AsRef<Path>) -> Result<Vec<E2eRow>, EvalError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(EvalError::DatasetMissing(path.display().to_string()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| EvalError::Format { row: 0, message: e.to_string() })?;
    let headers = reader.headers().map_err(|e| EvalError::Format { row: 0, message: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let (Some(mr_col), Some(ref_col)) = (col("mr"), col("ref")) else {
        return Err(EvalError::Format { row: 0, message: "header must have `mr` and `ref` columns".into() });
    };
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| EvalError::Format { row, message: e.to_string() })?;
        let mr = rec.get(mr_col).unwrap_or_default().to_string();
        let text = rec.get(ref_col).unwrap_or_default().to_string();
        let attributes = parse_mr(&mr).map_err(|message| EvalError::Format { row, message })?;
        rows.push(E2eRow { mr, text, attributes });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub shots: usize,
    pub limit: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { shots: 11, limit: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotStats {
    /// Rows whose gold set mentions the slot.
    pub gold: usize,
    /// Of those, rows where the predicted value matched.
    pub correct: usize,
    /// Rows where the slot was predicted but absent from gold.
    pub spurious: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub row: usize,
    pub text: String,
    pub expected: String,
    pub predicted: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub dataset: String,
    pub backend: String,
    pub shots: usize,
    pub rows: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub normalization: Vec<String>,
    pub per_slot: BTreeMap<String, SlotStats>,
    pub failures: Vec<Failure>,
}

type Normalized = BTreeSet<(String, String)>;

fn normalize(set: &PredicateSet) -> Normalized {
    set.iter()
        .filter(|p| p.functor == "attribute" && p.arity() == 2)
        .filter_map(|p| Some((canonical_slot(p.atom_arg(0)?), p.atom_arg(1)?.trim().to_lowercase())))
        .collect()
}

pub fn evaluate_parsing(
    dataset: impl AsRef<Path>,
    backend: &dyn NlBackend,
    opts: EvalOptions,
) -> Result<AccuracyReport, EvalError> {
    let dataset = dataset.as_ref();
    let rows = load_e2e(dataset)?;
    let onto = Ontology::from_toml(E2E_ONTOLOGY).expect("bundled e2e ontology is valid");
    let summary = onto.prompt_summary();
    let n = opts.limit.map_or(rows.len(), |l| l.min(rows.len()));

    let mut correct = 0;
    let mut per_slot: BTreeMap<String, SlotStats> = BTreeMap::new();
    let mut failures = Vec::new();
    for (i, row) in rows.iter().take(n).enumerate() {
        let examples = rows
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .take(opts.shots)
            .map(|(_, r)| FewShot { utterance: r.text.clone(), predicates: r.gold_text() })
            .collect();
        let req = UnderstandRequest {
            task: "restaurant description".into(),
            utterance: row.text.clone(),
            context: Vec::new(),
            ontology_summary: summary.clone(),
            examples,
        };
        let (predicted, error) = match understand(backend, &req, &onto) {
            Ok(set) => (set, None),
            Err(NlError::UnparseableOutput { raw, reason }) => (PredicateSet::new(), Some(format!("{reason}: {raw}"))),
            Err(e) => return Err(e.into()),
        };
        let gold = normalize(&row.gold());
        let got = normalize(&predicted);

        let gold_slots: BTreeMap<&str, &str> = gold.iter().map(|(s, v)| (s.as_str(), v.as_str())).collect();
        for (slot, value) in &gold_slots {
            let st = per_slot.entry(slot.to_string()).or_default();
            st.gold += 1;
            if got.contains(&(slot.to_string(), value.to_string())) {
                st.correct += 1;
            }
        }
        for (slot, _) in &got {
            if !gold_slots.contains_key(slot.as_str()) {
                per_slot.entry(slot.clone()).or_default().spurious += 1;
            }
        }

        if gold == got {
            correct += 1;
        } else {
            failures.push(Failure {
                row: i + 1,
                text: row.text.clone(),
                expected: row.gold_text(),
                predicted: predicted.serialize(Style::Concierge),
                error,
            });
        }
    }
    Ok(AccuracyReport {
        dataset: dataset.display().to_string(),
        backend: backend.name().to_string(),
        shots: opts.shots,
        rows: n,
        correct,
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        normalization: NORMALIZATION.iter().map(|s| s.to_string()).collect(),
        per_slot,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meaning_representation() {
        let got = parse_mr("name[The Vaults], eatType[pub], priceRange[more than £30], customer rating[5 out of 5]").unwrap();
        assert_eq!(
            got,
            vec![
                ("name".to_string(), "The Vaults".to_string()),
                ("establishment".into(), "pub".into()),
                ("price range".into(), "more than £30".into()),
                ("customer rating".into(), "5 out of 5".into()),
            ]
        );
        assert!(parse_mr("name[Open").is_err());
        assert_eq!(parse_mr("").unwrap(), vec![]);
    }

    #[test]
    fn normalization_ignores_case_and_order() {
        let a: PredicateSet = "attribute('food','French'), attribute('name','The Eagle')".parse().unwrap();
        let b: PredicateSet = "attribute('name','the eagle'), attribute('food type','french')".parse().unwrap();
        assert_eq!(normalize(&a), normalize(&b));
    }
}
