use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Category, LabeledDataset, StereotypeType, TextInstance};
use crate::{Error, Result, RowError};

/// Column order of the interchange CSV.
pub const CSV_HEADER: [&str; 5] = ["stereotype_type", "text", "category", "data_source", "label"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    /// `.jsonl`/`.ndjson` are JSONL, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => DatasetFormat::Jsonl,
            _ => DatasetFormat::Csv,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRow {
    stereotype_type: Option<String>,
    text: Option<String>,
    category: Option<String>,
    data_source: Option<String>,
    label: Option<String>,
}

impl RawRow {
    fn into_instance(self) -> std::result::Result<TextInstance, String> {
        let field = |v: Option<String>, name: &str| v.ok_or_else(|| format!("missing field {name}"));
        let stereotype_type: StereotypeType = field(self.stereotype_type, "stereotype_type")?.trim().parse()?;
        let text = field(self.text, "text")?;
        let category: Category = field(self.category, "category")?.trim().parse()?;
        let data_source = field(self.data_source, "data_source")?;
        let label = field(self.label, "label")?;
        if text.trim().is_empty() {
            return Err("empty text".into());
        }
        let inst = TextInstance { stereotype_type, text, category, data_source: data_source.trim().to_string() };
        if label.trim() != inst.label() {
            return Err(format!("label {:?} inconsistent with category/stereotype_type (expected {:?})", label, inst.label()));
        }
        Ok(inst)
    }
}

/// Reads a dataset in the five-field schema. All row problems are collected
/// and reported together; malformed UTF-8 aborts immediately.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    let instances = match format {
        DatasetFormat::Csv => read_csv(file)?,
        DatasetFormat::Jsonl => read_jsonl(BufReader::new(file), path)?,
    };
    if instances.is_empty() {
        return Err(Error::Data(format!("{}: no instances", path.display())));
    }
    Ok(LabeledDataset::new(name, instances))
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<TextInstance>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    // An empty file has no header at all.
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != CSV_HEADER {
        return Err(Error::Data(format!("expected CSV header {:?}, found {:?}", CSV_HEADER.join(","), got.join(","))));
    }
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                return Err(Error::Data(format!("row {row}: malformed UTF-8")));
            }
            Err(e) => {
                errors.push(RowError { row, message: e.to_string() });
                continue;
            }
        };
        let get = |j: usize| rec.get(j).map(str::to_string);
        let raw = RawRow { stereotype_type: get(0), text: get(1), category: get(2), data_source: get(3), label: get(4) };
        match raw.into_instance() {
            Ok(inst) => out.push(inst),
            Err(message) => errors.push(RowError { row, message }),
        }
    }
    if errors.is_empty() { Ok(out) } else { Err(Error::Rows(errors)) }
}

fn read_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<Vec<TextInstance>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in reader.split(b'\n').enumerate() {
        let row = i + 1;
        let bytes = line.map_err(|e| Error::io(path, e))?;
        let line = String::from_utf8(bytes).map_err(|_| Error::Data(format!("row {row}: malformed UTF-8")))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRow>(&line).map_err(|e| e.to_string()).and_then(RawRow::into_instance);
        match parsed {
            Ok(inst) => out.push(inst),
            Err(message) => errors.push(RowError { row, message }),
        }
    }
    if errors.is_empty() { Ok(out) } else { Err(Error::Rows(errors)) }
}

/// Writes the canonical CSV form.
pub fn write_dataset_csv<W: Write>(ds: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for inst in ds {
        w.write_record([
            inst.stereotype_type.as_str(),
            inst.text.as_str(),
            inst.category.as_str(),
            inst.data_source.as_str(),
            inst.label().as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn save_dataset_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_csv(ds, std::io::BufWriter::new(file))
}
