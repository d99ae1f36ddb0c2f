//! Restaurant knowledge base for the concierge bot: loading, constraint
//! filtering and attribute lookup.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ckt::Catalog;
use crate::ontology::{Ontology, SlotSchema};
use crate::state::DialogState;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read knowledge base: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}, column `{column}`: {message}")]
    Format { row: usize, column: String, message: String },
    #[error("row {row}: `{value}` is not a valid {slot}")]
    Domain { row: usize, slot: String, value: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DetailError {
    #[error("`{0}` cannot be queried")]
    NotQueryable(String),
    #[error("{entity} has no {slot} on record")]
    MissingAttribute { entity: String, slot: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restaurant {
    pub name: String,
    pub establishment: String,
    pub food_type: String,
    pub price_range: String,
    pub customer_rating: String,
    pub address: String,
    pub phone: Option<String>,
    pub area: Option<String>,
}

impl Restaurant {
    /// The value of the attribute an ontology slot refers to.
    pub fn attribute(&self, slot: &str) -> Option<&str> {
        match slot {
            "name" => Some(&self.name),
            "establishment" => Some(&self.establishment),
            "food type" => Some(&self.food_type),
            "price range" => Some(&self.price_range),
            "customer rating" => Some(&self.customer_rating),
            "address" => Some(&self.address),
            "phone" => self.phone.as_deref(),
            "area" => self.area.as_deref(),
            _ => None,
        }
    }
}

const COLUMNS: [&str; 8] =
    ["name", "establishment", "food type", "price range", "customer rating", "address", "phone", "area"];
const OPTIONAL: [&str; 2] = ["phone", "area"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub restaurants: Vec<Restaurant>,
    /// Domain order of the ranking slot, worst first.
    #[serde(default)]
    pub rank_order: Vec<String>,
    #[serde(default)]
    pub rank_slot: Option<String>,
}

impl KnowledgeBase {
    pub fn new(restaurants: Vec<Restaurant>, onto: &Ontology) -> Self {
        let rank_slot = onto.ckt.rank_by.clone();
        let rank_order = rank_slot
            .as_deref()
            .and_then(|s| onto.full_domain(s).ok())
            .map(<[String]>::to_vec)
            .unwrap_or_default();
        Self { restaurants, rank_order, rank_slot }
    }

    pub fn len(&self) -> usize {
        self.restaurants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.restaurants.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Restaurant> {
        self.restaurants.iter().find(|r| r.name == name)
    }

    /// Restaurants satisfying every constraint in `state`, best first.
    pub fn filter(&self, state: &DialogState, onto: &Ontology) -> Vec<&Restaurant> {
        let mut out: Vec<&Restaurant> =
            self.restaurants.iter().filter(|r| satisfies(r, state, onto)).collect();
        out.sort_by(|a, b| self.rank(b).cmp(&self.rank(a)).then_with(|| a.name.cmp(&b.name)));
        out
    }

    fn rank(&self, r: &Restaurant) -> usize {
        self.rank_slot
            .as_deref()
            .and_then(|s| r.attribute(s))
            .and_then(|v| self.rank_order.iter().position(|x| x == v))
            .unwrap_or(0)
    }
}

fn satisfies(r: &Restaurant, state: &DialogState, onto: &Ontology) -> bool {
    onto.slots.iter().all(|schema| slot_ok(r, schema, state, onto))
}

fn slot_ok(r: &Restaurant, schema: &SlotSchema, state: &DialogState, onto: &Ontology) -> bool {
    let value = r.attribute(&schema.name);
    if schema.is_closed() {
        return match (value, state.candidates(&schema.name, onto)) {
            (Some(v), Ok(c)) => c.contains(v),
            (None, Ok(c)) => !c.is_empty(),
            (_, Err(_)) => true,
        };
    }
    let Some(c) = state.slot(&schema.name) else {
        return true;
    };
    let lower = |s: &String| s.to_lowercase();
    let excluded: BTreeSet<String> = c.excluded.iter().map(lower).collect();
    match value.map(str::to_lowercase) {
        Some(v) => {
            !excluded.contains(&v)
                && c.included.as_ref().is_none_or(|inc| inc.iter().map(lower).any(|i| i == v))
        }
        None => c.included.is_none(),
    }
}

impl Catalog for KnowledgeBase {
    fn matching(&self, state: &DialogState, onto: &Ontology) -> Vec<String> {
        self.filter(state, onto).into_iter().map(|r| r.name.clone()).collect()
    }

    fn attribute(&self, entity: &str, slot: &str) -> Option<String> {
        self.get(entity)?.attribute(slot).map(str::to_string)
    }
}

pub fn load_kb(path: impl AsRef<Path>, onto: &Ontology) -> Result<KnowledgeBase, KbError> {
    let file = std::fs::File::open(path)?;
    read_kb(file, onto)
}

/// Reads the delimited format: mandatory header row, one restaurant per row.
pub fn read_kb<R: std::io::Read>(reader: R, onto: &Ontology) -> Result<KnowledgeBase, KbError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let header_err = |column: &str, message: &str| KbError::Format {
        row: 0,
        column: column.to_string(),
        message: message.to_string(),
    };
    let headers = rdr.headers().map_err(|e| header_err("*", &e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(header_err("*", "missing header row"));
    }
    let mut index = Vec::with_capacity(COLUMNS.len());
    for col in COLUMNS {
        match headers.iter().position(|h| h.trim() == col) {
            Some(i) => index.push(i),
            None => return Err(header_err(col, "column missing from header")),
        }
    }

    let mut restaurants = Vec::new();
    let mut names = BTreeSet::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| KbError::Format { row, column: "*".into(), message: e.to_string() })?;
        let mut cells = Vec::with_capacity(COLUMNS.len());
        for (col, &idx) in COLUMNS.iter().zip(&index) {
            let v = record.get(idx).unwrap_or("").trim().to_string();
            if v.is_empty() && !OPTIONAL.contains(col) {
                return Err(KbError::Format { row, column: col.to_string(), message: "empty cell".into() });
            }
            if !v.is_empty() {
                if let Ok(domain) = onto.full_domain(col) {
                    if !domain.contains(&v) {
                        return Err(KbError::Domain { row, slot: col.to_string(), value: v });
                    }
                }
            }
            cells.push(v);
        }
        let opt = |s: String| if s.is_empty() { None } else { Some(s) };
        let mut it = cells.into_iter();
        let mut next = || it.next().unwrap_or_default();
        let r = Restaurant {
            name: next(),
            establishment: next(),
            food_type: next(),
            price_range: next(),
            customer_rating: next(),
            address: next(),
            phone: opt(next()),
            area: opt(next()),
        };
        if !names.insert(r.name.clone()) {
            return Err(KbError::Format { row, column: "name".into(), message: format!("duplicate name `{}`", r.name) });
        }
        restaurants.push(r);
    }
    Ok(KnowledgeBase::new(restaurants, onto))
}

/// Stored value of a queryable attribute.
pub fn answer_detail(r: &Restaurant, slot: &str, onto: &Ontology) -> Result<String, DetailError> {
    if !onto.slot(slot).is_some_and(|s| s.queryable) {
        return Err(DetailError::NotQueryable(slot.to_string()));
    }
    r.attribute(slot)
        .map(str::to_string)
        .ok_or_else(|| DetailError::MissingAttribute { entity: r.name.clone(), slot: slot.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::parse_predicates;

    fn onto() -> Ontology {
        Ontology::from_toml(include_str!("../data/concierge.ontology.toml")).unwrap()
    }

    fn sample() -> KnowledgeBase {
        read_kb(include_str!("../data/restaurants.csv").as_bytes(), &onto()).unwrap()
    }

    const HEADER: &str = "name,establishment,food type,price range,customer rating,address,phone,area\n";

    #[test]
    fn sample_contains_the_grill() {
        let kb = sample();
        assert_eq!(kb.len(), 25);
        let r = kb.get("Southern Recipes Grill").unwrap();
        assert_eq!(r.food_type, "American");
        assert_eq!(r.price_range, "cheap");
        assert_eq!(r.customer_rating, "average");
        assert_eq!(r.address, "621 W Plano Pkwy #229, Plano, TX 75075");
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read_kb(HEADER.as_bytes(), &onto()).unwrap().is_empty());
    }

    #[test]
    fn bad_rating_is_domain_error() {
        let text = format!("{HEADER}A,restaurant,Thai,cheap,superb,1 Main St,,\n");
        match read_kb(text.as_bytes(), &onto()) {
            Err(KbError::Domain { row, slot, value }) => {
                assert_eq!((row, slot.as_str(), value.as_str()), (1, "customer rating", "superb"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_errors() {
        let text = format!("{HEADER}A,restaurant,,cheap,low,1 Main St,,\n");
        assert!(matches!(read_kb(text.as_bytes(), &onto()), Err(KbError::Format { row: 1, ref column, .. }) if column == "food type"));
        let text = "name,establishment\nA,pub\n";
        assert!(matches!(read_kb(text.as_bytes(), &onto()), Err(KbError::Format { row: 0, .. })));
        let text = format!("{HEADER}A,pub,Thai,cheap,low,x,,\nA,pub,Thai,cheap,low,y,,\n");
        assert!(matches!(read_kb(text.as_bytes(), &onto()), Err(KbError::Format { row: 2, .. })));
        let text = format!("{HEADER}A,pub,Thai\n");
        assert!(matches!(read_kb(text.as_bytes(), &onto()), Err(KbError::Format { row: 1, .. })));
    }

    #[test]
    fn final_trace_state_picks_the_grill() {
        let o = onto();
        let state = DialogState::new("t")
            .update(
                &parse_predicates(
                    "require('name',['query']), require('establishment',['restaurant']),
                     not_require('food type',['Indian','Thai']), require('price range',['cheap']),
                     require('customer rating',['low','average','high'])",
                )
                .unwrap(),
                &o,
            )
            .unwrap();
        let hits = sample().filter(&state, &o).into_iter().map(|r| r.name.clone()).collect::<Vec<_>>();
        assert_eq!(hits[0], "Southern Recipes Grill");
        assert!(!hits.iter().any(|n| n.contains("Thai") || n.contains("Taj")));
    }

    #[test]
    fn no_constraints_keeps_everything() {
        let o = onto();
        assert_eq!(sample().filter(&DialogState::new("t"), &o).len(), 25);
    }

    #[test]
    fn open_slot_match_ignores_case() {
        let o = onto();
        let state =
            DialogState::new("t").update(&parse_predicates("require('food type',['american'])").unwrap(), &o).unwrap();
        let hits: Vec<_> = sample().filter(&state, &o).into_iter().map(|r| r.name.as_str().to_string()).collect();
        assert_eq!(hits, ["Prairie Fire Steakhouse", "Southern Recipes Grill"]);
    }

    #[test]
    fn details() {
        let o = onto();
        let kb = sample();
        let grill = kb.get("Southern Recipes Grill").unwrap();
        assert_eq!(answer_detail(grill, "address", &o).unwrap(), "621 W Plano Pkwy #229, Plano, TX 75075");
        assert_eq!(answer_detail(grill, "name", &o).unwrap(), "Southern Recipes Grill");
        let wok = kb.get("Wok This Way").unwrap();
        assert!(matches!(answer_detail(wok, "phone", &o), Err(DetailError::MissingAttribute { .. })));
        assert_eq!(
            answer_detail(grill, "price range", &o),
            Err(DetailError::NotQueryable("price range".into()))
        );
    }
}
