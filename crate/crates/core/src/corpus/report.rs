use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::LabeledDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCount {
    pub value: String,
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grouping {
    pub name: String,
    pub levels: Vec<LevelCount>,
}

/// Counts and shares by category, stereotype_type and data_source. Levels
/// that never occur are absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub total: usize,
    pub groupings: Vec<Grouping>,
}

fn grouping<'a>(name: &str, values: impl Iterator<Item = &'a str>, total: usize) -> Grouping {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let levels = counts
        .into_iter()
        .map(|(value, count)| LevelCount { value: value.to_string(), count, proportion: count as f64 / total as f64 })
        .collect();
    Grouping { name: name.to_string(), levels }
}

pub fn distribution_report(ds: &LabeledDataset) -> DistributionReport {
    let total = ds.len();
    let groupings = if total == 0 {
        Vec::new()
    } else {
        vec![
            grouping("category", ds.iter().map(|i| i.category.as_str()), total),
            grouping("stereotype_type", ds.iter().map(|i| i.stereotype_type.as_str()), total),
            grouping("data_source", ds.iter().map(|i| i.data_source.as_str()), total),
        ]
    };
    DistributionReport { total, groupings }
}

impl DistributionReport {
    pub fn grouping(&self, name: &str) -> Option<&Grouping> {
        self.groupings.iter().find(|g| g.name == name)
    }

    /// CSV with columns `grouping,value,count,proportion`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["grouping", "value", "count", "proportion"])?;
        for g in &self.groupings {
            for l in &g.levels {
                w.write_record([g.name.clone(), l.value.clone(), l.count.to_string(), format!("{:.6}", l.proportion)])?;
            }
        }
        w.flush().map_err(|e| Error::io("<distribution report>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Category, StereotypeType, TextInstance};

    #[test]
    fn one_per_category() {
        let ds = LabeledDataset::new(
            "d",
            Category::ALL.iter().map(|&c| TextInstance::new(StereotypeType::Gender, "t", c, "crowspairs")).collect(),
        );
        let r = distribution_report(&ds);
        let cat = r.grouping("category").unwrap();
        assert_eq!(cat.levels.len(), 3);
        assert!(cat.levels.iter().all(|l| (l.proportion - 1.0 / 3.0).abs() < 1e-15));
        // only gender is present; the other five types are omitted
        assert_eq!(r.grouping("stereotype_type").unwrap().levels.len(), 1);
        for g in &r.groupings {
            let s: f64 = g.levels.iter().map(|l| l.proportion).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
