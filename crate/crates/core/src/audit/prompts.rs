use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::Probe;
use crate::corpus::StereotypeType;
use crate::{hard_label, Error, Result, RowError};

/// Prompts expected per (group, source dataset) combination.
pub const PROMPTS_PER_COMBINATION: usize = 5;

const BUNDLED: &str = include_str!("../../data/llm_prompts.csv");
const INSTRUCTION: &str = include_str!("../../templates/audit_instruction.txt");
const HEADER: [&str; 6] = ["initial_text", "initial_prediction", "prompt", "prompt_prediction", "source_dataset", "group"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceDataset {
    #[serde(rename = "MGSD")]
    Mgsd,
    #[serde(rename = "AWinoQueer")]
    AWinoQueer,
    #[serde(rename = "ASeeGULL")]
    ASeeGull,
}

impl SourceDataset {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceDataset::Mgsd => "MGSD",
            SourceDataset::AWinoQueer => "AWinoQueer",
            SourceDataset::ASeeGull => "ASeeGULL",
        }
    }
}

impl fmt::Display for SourceDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceDataset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "MGSD" => Ok(SourceDataset::Mgsd),
            "AWinoQueer" => Ok(SourceDataset::AWinoQueer),
            "ASeeGULL" => Ok(SourceDataset::ASeeGull),
            other => Err(Error::Data(format!("unknown source dataset {other:?}"))),
        }
    }
}

/// A prompt stem cut from a stereotypical sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSentence {
    /// 1-based row number in the prompt file.
    pub prompt_id: u32,
    pub initial_text: String,
    pub stem: String,
    pub source_dataset: SourceDataset,
    pub group: StereotypeType,
    /// Labels recorded in the prompt file, when given.
    pub initial_prediction: Option<u8>,
    pub stem_prediction: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPrompts {
    pub prompts: Vec<ProbeSentence>,
    pub warnings: Vec<String>,
}

pub fn audit_instruction() -> &'static str {
    INSTRUCTION.trim_end()
}

fn parse_label(s: &str) -> std::result::Result<Option<u8>, String> {
    match s.trim() {
        "" => Ok(None),
        "0" => Ok(Some(0)),
        "1" => Ok(Some(1)),
        other => Err(format!("prediction must be 0 or 1, got {other:?}")),
    }
}

/// Parses the six-column prompt table and reports combination counts that
/// differ from five as warnings.
pub fn parse_prompts<R: Read>(input: R) -> Result<LoadedPrompts> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != HEADER {
        return Err(Error::Data(format!("prompt file header must be {}, got {}", HEADER.join(","), header.join(","))));
    }
    let mut prompts = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let parsed = (|| -> std::result::Result<ProbeSentence, String> {
            let stem = rec[2].trim().to_string();
            if stem.is_empty() {
                return Err("empty prompt".into());
            }
            Ok(ProbeSentence {
                prompt_id: row as u32,
                initial_text: rec[0].trim().to_string(),
                stem,
                source_dataset: rec[4].parse().map_err(|e: Error| e.to_string())?,
                group: rec[5].trim().parse()?,
                initial_prediction: parse_label(&rec[1])?,
                stem_prediction: parse_label(&rec[3])?,
            })
        })();
        match parsed {
            Ok(p) => prompts.push(p),
            Err(message) => errors.push(RowError { row, message }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Rows(errors));
    }
    if prompts.is_empty() {
        return Err(Error::Data("no prompts".into()));
    }
    let mut counts: BTreeMap<(String, SourceDataset), usize> = BTreeMap::new();
    for p in &prompts {
        *counts.entry((p.group.to_string(), p.source_dataset)).or_default() += 1;
    }
    let warnings = counts
        .into_iter()
        .filter(|&(_, c)| c != PROMPTS_PER_COMBINATION)
        .map(|((g, s), c)| format!("{g} x {s} has {c} prompts, expected {PROMPTS_PER_COMBINATION}"))
        .collect();
    Ok(LoadedPrompts { prompts, warnings })
}

/// The 35 stems shipped with the crate.
pub fn bundled_prompts() -> Vec<ProbeSentence> {
    parse_prompts(BUNDLED.as_bytes()).expect("bundled prompt table is valid").prompts
}

/// Fails when the probe labels any stem as a stereotype.
pub fn check_neutrality(prompts: &[ProbeSentence], probe: &dyn Probe) -> Result<()> {
    let stems: Vec<String> = prompts.iter().map(|p| p.stem.clone()).collect();
    let probs = probe.predict_batch(&stems)?;
    let offenders: Vec<String> = prompts
        .iter()
        .zip(&probs)
        .filter(|(_, &p)| hard_label(p) == 1)
        .map(|(s, p)| format!("#{} {:?} (p = {p:.3})", s.prompt_id, s.stem))
        .collect();
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::Data(format!("stems classified as stereotypes: {}", offenders.join(", "))))
    }
}

/// Reads a prompt file and checks every stem is neutral under `probe`.
pub fn load_prompts(path: &Path, probe: &dyn Probe) -> Result<LoadedPrompts> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let loaded = parse_prompts(file)?;
    check_neutrality(&loaded.prompts, probe)?;
    Ok(loaded)
}

/// The instruction line followed by `1. stem`, `2. stem`, ... in input order.
pub fn build_batch_prompt(prompts: &[ProbeSentence]) -> Result<String> {
    if prompts.is_empty() {
        return Err(Error::InvalidInput("cannot build a prompt from zero stems".into()));
    }
    let mut out = audit_instruction().to_string();
    for (i, p) in prompts.iter().enumerate() {
        out.push_str(&format!("\n{}. {}", i + 1, p.stem));
    }
    Ok(out)
}

/// A provider response split into numbered lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedResponse {
    /// `(1-based index, text)` for lines that map to a prompt, first occurrence only.
    pub parsed: Vec<(usize, String)>,
    /// Non-blank lines that did not.
    pub unparsed: Vec<String>,
}

fn split_numbered(line: &str) -> Option<(usize, &str)> {
    let s = line.trim_start();
    let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let index = s[..digits].parse().ok()?;
    let rest = s[digits..].trim_start();
    let rest = rest.strip_prefix(['.', ')', ':'])?;
    Some((index, rest.trim()))
}

/// Accepts `<index><. or ) or :> <text>` lines with optional leading
/// whitespace. Lines with an index outside `1..=n_prompts`, empty text or a
/// repeated index land in `unparsed`; blank lines are skipped.
pub fn parse_response(response: &str, n_prompts: usize) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    let mut seen = vec![false; n_prompts + 1];
    for line in response.lines() {
        if line.trim().is_empty() {
            continue;
        }
        match split_numbered(line) {
            Some((i, text)) if (1..=n_prompts).contains(&i) && !text.is_empty() && !seen[i] => {
                seen[i] = true;
                out.parsed.push((i, text.to_string()));
            }
            _ => out.unparsed.push(line.trim().to_string()),
        }
    }
    out
}
