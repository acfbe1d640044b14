use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, TextInstance};
use crate::classifier::tokenize::word_spans;
use crate::{Error, Result, RowError};

/// Given names used to collapse template duplicates such as
/// "Robert is ..." / "John is ...".
pub const DEFAULT_NAME_LEXICON: &[&str] = &[
    "aaron", "adam", "alex", "alice", "amanda", "amy", "andrew", "anna", "anthony", "ashley", "barbara", "ben",
    "betty", "brian", "carol", "charles", "chris", "daniel", "david", "deborah", "donald", "dorothy", "edward",
    "elizabeth", "emily", "emma", "eric", "george", "james", "jason", "jennifer", "jessica", "john", "joseph",
    "joshua", "karen", "kevin", "laura", "linda", "lisa", "margaret", "maria", "mark", "mary", "matthew",
    "michael", "michelle", "nancy", "patricia", "paul", "richard", "robert", "ryan", "sam", "sarah", "steven",
    "susan", "thomas", "timothy", "william",
];

pub const DEFAULT_COUNTERFACTUAL_TERMS: &[&str] = &["straight", "heterosexual", "cisgender", "cis"];

pub const DEFAULT_OVERT_NEGATIVITY: &[&str] = &["I hate", "everyone hates"];

const NAME_PLACEHOLDER: &str = "<NAME>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub counterfactual_terms: Vec<String>,
    pub name_lexicon: Vec<String>,
    pub overt_negativity_phrases: Vec<String>,
    /// Exclusive lower bound on the mean offensive score.
    pub min_offensive_score: f64,
    pub require_dual_region_majority: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        FilterConfig {
            counterfactual_terms: owned(DEFAULT_COUNTERFACTUAL_TERMS),
            name_lexicon: owned(DEFAULT_NAME_LEXICON),
            overt_negativity_phrases: owned(DEFAULT_OVERT_NEGATIVITY),
            min_offensive_score: 0.0,
            require_dual_region_majority: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    Counterfactual,
    Duplicate,
    OvertNegative,
    NonOffensive,
    NonStereotypical,
}

impl RemovalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RemovalReason::Counterfactual => "counterfactual",
            RemovalReason::Duplicate => "duplicate",
            RemovalReason::OvertNegative => "overt_negative",
            RemovalReason::NonOffensive => "non_offensive",
            RemovalReason::NonStereotypical => "non_stereotypical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinoQueerOutcome {
    pub kept: LabeledDataset,
    pub removals: Vec<(TextInstance, RemovalReason)>,
}

fn lower_words(text: &str) -> Vec<String> {
    word_spans(text).map(|(_, w)| w.to_lowercase()).collect()
}

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Lowercased text with every lexicon name replaced by a placeholder.
pub fn duplicate_key(text: &str, names: &HashSet<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, word) in word_spans(text) {
        out.push_str(&text[last..start].to_lowercase());
        let lower = word.to_lowercase();
        if names.contains(&lower) {
            out.push_str(NAME_PLACEHOLDER);
        } else {
            out.push_str(&lower);
        }
        last = start + word.len();
    }
    out.push_str(&text[last..].to_lowercase());
    out.trim().to_string()
}

/// Applies, in order, the counterfactual, duplicate and overt-negativity
/// rules. Each removed instance carries the first rule that fired.
pub fn filter_winoqueer(ds: &LabeledDataset, cfg: &FilterConfig) -> WinoQueerOutcome {
    let counterfactual: Vec<Vec<String>> = cfg.counterfactual_terms.iter().map(|t| lower_words(t)).collect();
    let overt: Vec<Vec<String>> = cfg.overt_negativity_phrases.iter().map(|t| lower_words(t)).collect();
    let names: HashSet<String> = cfg.name_lexicon.iter().map(|n| n.to_lowercase()).collect();

    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    let mut removals = Vec::new();
    for inst in ds {
        let words = lower_words(&inst.text);
        let reason = if counterfactual.iter().any(|t| contains_sequence(&words, t)) {
            Some(RemovalReason::Counterfactual)
        } else if !seen.insert(duplicate_key(&inst.text, &names)) {
            Some(RemovalReason::Duplicate)
        } else if overt.iter().any(|p| contains_sequence(&words, p)) {
            Some(RemovalReason::OvertNegative)
        } else {
            None
        };
        match reason {
            Some(r) => removals.push((inst.clone(), r)),
            None => kept.push(inst.clone()),
        }
    }
    WinoQueerOutcome { kept: LabeledDataset::new(ds.name.clone(), kept), removals }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeegullRow {
    pub phrase: String,
    pub mean_offensive_score: f64,
    pub home_majority_stereotype: bool,
    pub na_majority_stereotype: bool,
}

impl SeegullRow {
    pub fn new(phrase: &str, score: f64, home: bool, na: bool) -> Self {
        SeegullRow {
            phrase: phrase.to_string(),
            mean_offensive_score: score,
            home_majority_stereotype: home,
            na_majority_stereotype: na,
        }
    }
}

/// Strict majority: more than half of the annotators said "stereotype".
pub fn strict_majority(stereotype_votes: u32, annotators: u32) -> bool {
    annotators > 0 && 2 * stereotype_votes > annotators
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeegullOutcome {
    pub kept: Vec<SeegullRow>,
    pub removals: Vec<(SeegullRow, RemovalReason)>,
}

/// Keeps offensive phrases that both annotator regions call stereotypes.
pub fn filter_seegull(rows: &[SeegullRow], cfg: &FilterConfig) -> Result<SeegullOutcome> {
    let bad: Vec<RowError> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.mean_offensive_score.is_finite())
        .map(|(i, r)| RowError { row: i + 1, message: format!("non-finite offensive score for {:?}", r.phrase) })
        .collect();
    if !bad.is_empty() {
        return Err(Error::Rows(bad));
    }
    let mut kept = Vec::new();
    let mut removals = Vec::new();
    for row in rows {
        if row.mean_offensive_score <= cfg.min_offensive_score {
            removals.push((row.clone(), RemovalReason::NonOffensive));
        } else if cfg.require_dual_region_majority && !(row.home_majority_stereotype && row.na_majority_stereotype) {
            removals.push((row.clone(), RemovalReason::NonStereotypical));
        } else {
            kept.push(row.clone());
        }
    }
    Ok(SeegullOutcome { kept, removals })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Reads SeeGULL rows. Columns are either
/// `phrase,mean_offensive_score,home_majority_stereotype,na_majority_stereotype`
/// or the vote-count form
/// `phrase,mean_offensive_score,home_stereotype_votes,home_annotators,na_stereotype_votes,na_annotators`.
pub fn load_seegull_csv(path: &Path) -> Result<Vec<SeegullRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let phrase = col("phrase").ok_or_else(|| Error::Data("missing column phrase".into()))?;
    let score = col("mean_offensive_score").ok_or_else(|| Error::Data("missing column mean_offensive_score".into()))?;
    let bools = (col("home_majority_stereotype"), col("na_majority_stereotype"));
    let votes = (col("home_stereotype_votes"), col("home_annotators"), col("na_stereotype_votes"), col("na_annotators"));

    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |j: usize| rec.get(j).unwrap_or("").trim();
        let parsed: std::result::Result<SeegullRow, String> = (|| {
            let s: f64 = field(score).parse().map_err(|_| format!("bad score {:?}", field(score)))?;
            let (home, na) = match (bools, votes) {
                ((Some(h), Some(n)), _) => (
                    parse_bool(field(h)).ok_or("bad home_majority_stereotype")?,
                    parse_bool(field(n)).ok_or("bad na_majority_stereotype")?,
                ),
                (_, (Some(hv), Some(ha), Some(nv), Some(na))) => {
                    let num = |j: usize| field(j).parse::<u32>().map_err(|_| format!("bad vote count {:?}", field(j)));
                    (strict_majority(num(hv)?, num(ha)?), strict_majority(num(nv)?, num(na)?))
                }
                _ => return Err("missing majority columns".to_string()),
            };
            Ok(SeegullRow { phrase: field(phrase).to_string(), mean_offensive_score: s, home_majority_stereotype: home, na_majority_stereotype: na })
        })();
        match parsed {
            Ok(r) => out.push(r),
            Err(message) => errors.push(RowError { row, message }),
        }
    }
    if errors.is_empty() { Ok(out) } else { Err(Error::Rows(errors)) }
}

/// Removal report with columns `text,reason`.
pub fn write_removals<'a, W: Write>(removals: impl IntoIterator<Item = (&'a str, RemovalReason)>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["text", "reason"])?;
    for (text, reason) in removals {
        w.write_record([text, reason.as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<removal report>", e))?;
    Ok(())
}
