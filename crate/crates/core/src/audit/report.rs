use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{AuditRecord, AuditRun};
use crate::corpus::StereotypeType;
use crate::{svg, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPrevalence {
    pub group: StereotypeType,
    /// `None` when the group has no parsed records.
    pub p_m: Option<f64>,
    pub n_g: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPrevalence {
    pub model: String,
    pub p_m: f64,
    /// Parsed records only.
    pub n: usize,
    pub positives: usize,
    pub unparsed: usize,
    pub failed_iterations: usize,
    pub groups: Vec<GroupPrevalence>,
    pub release_date: Option<String>,
}

impl ModelPrevalence {
    pub fn group(&self, g: StereotypeType) -> &GroupPrevalence {
        self.groups.iter().find(|x| x.group == g).expect("every group is listed")
    }

    /// Share of response lines that could not be parsed.
    pub fn exclusion_rate(&self) -> f64 {
        let total = self.n + self.unparsed;
        if total == 0 { 0.0 } else { self.unparsed as f64 / total as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub models: Vec<ModelPrevalence>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

fn fold<'a>(model: &str, records: impl Iterator<Item = &'a AuditRecord>) -> Result<ModelPrevalence> {
    let (mut n, mut pos, mut unparsed, mut failed) = (0, 0, 0, 0);
    let mut by_group: BTreeMap<StereotypeType, (usize, usize)> = BTreeMap::new();
    for r in records {
        if r.error.is_some() {
            failed += 1;
        } else if !r.parsed {
            unparsed += 1;
        } else {
            let hit = usize::from(r.label == Some(1));
            n += 1;
            pos += hit;
            if let Some(g) = r.group {
                let e = by_group.entry(g).or_default();
                e.0 += 1;
                e.1 += hit;
            }
        }
    }
    if n == 0 {
        return Err(Error::Data(format!("{model}: no parsed records")));
    }
    let groups = StereotypeType::ALL
        .into_iter()
        .map(|g| {
            let (n_g, positives) = by_group.get(&g).copied().unwrap_or((0, 0));
            let p_m = (n_g > 0).then(|| positives as f64 / n_g as f64);
            GroupPrevalence { group: g, p_m, n_g, positives }
        })
        .collect();
    Ok(ModelPrevalence {
        model: model.to_string(),
        p_m: pos as f64 / n as f64,
        n,
        positives: pos,
        unparsed,
        failed_iterations: failed,
        groups,
        release_date: None,
    })
}

/// `P_M = (1/n) * #{parsed records labelled 1}`, overall and per group.
pub fn prevalence(run: &AuditRun) -> Result<ModelPrevalence> {
    fold(&run.model, run.records.iter())
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn trend(title: &str, points: Vec<(String, String, f64)>) -> String {
    let mut points = points;
    points.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let names = points.iter().map(|p| p.0.clone()).collect::<Vec<_>>();
    let dates = points.iter().map(|p| p.1.clone()).collect::<Vec<_>>();
    let values = points.iter().map(|p| p.2).collect::<Vec<_>>();
    svg::trend_chart(title, &dates, &values, &names)
}

/// Folds runs per model (runs of the same model are pooled) and writes
/// `prevalence.csv`, `prevalence_by_group.csv`, `bias_report.json`,
/// `prevalence_bar.svg` and `prevalence_trend.svg` into `out_dir`.
pub fn emit_report(runs: &[AuditRun], release_dates: &BTreeMap<String, String>, out_dir: &Path) -> Result<BiasReport> {
    if runs.is_empty() {
        return Err(Error::InvalidInput("no runs to report".into()));
    }
    let mut order: Vec<String> = Vec::new();
    for r in runs {
        if !order.contains(&r.model) {
            order.push(r.model.clone());
        }
    }
    let mut models = Vec::new();
    let mut warnings = Vec::new();
    for m in &order {
        let mut mp = fold(m, runs.iter().filter(|r| &r.model == m).flat_map(|r| r.records.iter()))?;
        mp.release_date = release_dates.get(m).cloned();
        if mp.release_date.is_none() {
            warnings.push(format!("{m} has no release date; left out of the trend chart"));
        }
        models.push(mp);
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    let mut overall = vec![vec!["model".to_string(), "P_M".into(), "n".into()]];
    let mut grouped = vec![vec!["model".to_string(), "group".into(), "P_M".into(), "n_g".into()]];
    for m in &models {
        overall.push(vec![m.model.clone(), m.p_m.to_string(), m.n.to_string()]);
        for g in &m.groups {
            grouped.push(vec![
                m.model.clone(),
                g.group.to_string(),
                g.p_m.map(|p| p.to_string()).unwrap_or_default(),
                g.n_g.to_string(),
            ]);
        }
    }
    write_file(out_dir, "prevalence.csv", &csv_string(overall)?, &mut files)?;
    write_file(out_dir, "prevalence_by_group.csv", &csv_string(grouped)?, &mut files)?;

    let labels: Vec<String> = models.iter().map(|m| m.model.clone()).collect();
    let values: Vec<f64> = models.iter().map(|m| m.p_m).collect();
    write_file(out_dir, "prevalence_bar.svg", &svg::proportion_bar_chart("Stereotype prevalence P_M", &labels, &values), &mut files)?;
    let points = models.iter().filter_map(|m| m.release_date.clone().map(|d| (m.model.clone(), d, m.p_m))).collect();
    write_file(out_dir, "prevalence_trend.svg", &trend("P_M by release date", points), &mut files)?;

    let mut report = BiasReport { models, warnings, files };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    write_file(out_dir, "bias_report.json", &json, &mut report.files)?;
    Ok(report)
}

/// A precomputed prevalence figure, e.g. transcribed from a published table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    #[serde(rename = "P_M")]
    pub p_m: f64,
    #[serde(default)]
    pub release_date: Option<String>,
}

/// Columns `model,P_M` and optionally `release_date`.
pub fn load_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for r in rdr.deserialize() {
        let mut row: SummaryRow = r?;
        if row.release_date.as_deref().is_some_and(|d| d.trim().is_empty()) {
            row.release_date = None;
        }
        if !(0.0..=1.0).contains(&row.p_m) {
            return Err(Error::Data(format!("{}: P_M {} outside [0, 1]", row.model, row.p_m)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }
    Ok(rows)
}

/// Bar and trend charts straight from summary rows.
pub fn emit_summary_report(rows: &[SummaryRow], out_dir: &Path) -> Result<(Vec<String>, Vec<PathBuf>)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    let labels: Vec<String> = rows.iter().map(|r| r.model.clone()).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.p_m).collect();
    write_file(out_dir, "prevalence_bar.svg", &svg::proportion_bar_chart("Stereotype prevalence P_M", &labels, &values), &mut files)?;
    let warnings = rows
        .iter()
        .filter(|r| r.release_date.is_none())
        .map(|r| format!("{} has no release date; left out of the trend chart", r.model))
        .collect();
    let points = rows.iter().filter_map(|r| r.release_date.clone().map(|d| (r.model.clone(), d, r.p_m))).collect();
    write_file(out_dir, "prevalence_trend.svg", &trend("P_M by release date", points), &mut files)?;
    Ok((warnings, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(group: Option<StereotypeType>, parsed: bool, label: u8) -> AuditRecord {
        AuditRecord {
            run_id: "r".into(),
            model: "m".into(),
            prompt_id: parsed.then_some(1),
            iteration: 1,
            response: "x".into(),
            parsed,
            label: parsed.then_some(label),
            probability: parsed.then_some(label as f64),
            ts: "t".into(),
            group,
            error: None,
        }
    }

    #[test]
    fn three_of_ten() {
        let mut records: Vec<_> = (0..10).map(|i| rec(Some(StereotypeType::Race), true, u8::from(i < 3))).collect();
        records.push(rec(None, false, 0));
        let run = AuditRun { run_id: "r".into(), model: "m".into(), n_iter: 1, records };
        let p = prevalence(&run).unwrap();
        assert_eq!(p.p_m, 0.3);
        assert_eq!(p.n, 10);
        assert_eq!(p.unparsed, 1);
        assert_eq!(p.group(StereotypeType::Race).p_m, Some(0.3));
        assert_eq!(p.group(StereotypeType::Lgbtq).p_m, None);
    }

    #[test]
    fn empty_group_row_is_blank() {
        let run = AuditRun { run_id: "r".into(), model: "m".into(), n_iter: 1, records: vec![rec(Some(StereotypeType::Gender), true, 1)] };
        let dir = tempfile::tempdir().unwrap();
        let report = emit_report(&[run], &BTreeMap::new(), dir.path()).unwrap();
        assert_eq!(report.warnings.len(), 1);
        let grouped = std::fs::read_to_string(dir.path().join("prevalence_by_group.csv")).unwrap();
        assert!(grouped.contains("m,lgbtq+,,0\n"));
        assert!(grouped.contains("m,gender,1,1\n"));
    }
}
