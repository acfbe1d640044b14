use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Demographic referenced by a text instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StereotypeType {
    Race,
    Nationality,
    Profession,
    Gender,
    Religion,
    #[serde(rename = "lgbtq+")]
    Lgbtq,
}

impl StereotypeType {
    pub const ALL: [StereotypeType; 6] = [
        StereotypeType::Race,
        StereotypeType::Nationality,
        StereotypeType::Profession,
        StereotypeType::Gender,
        StereotypeType::Religion,
        StereotypeType::Lgbtq,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StereotypeType::Race => "race",
            StereotypeType::Nationality => "nationality",
            StereotypeType::Profession => "profession",
            StereotypeType::Gender => "gender",
            StereotypeType::Religion => "religion",
            StereotypeType::Lgbtq => "lgbtq+",
        }
    }
}

impl fmt::Display for StereotypeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StereotypeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StereotypeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown stereotype_type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Stereotype,
    Neutral,
    Unrelated,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Stereotype, Category::Neutral, Category::Unrelated];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Stereotype => "stereotype",
            Category::Neutral => "neutral",
            Category::Unrelated => "unrelated",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

/// One sentence with its demographic, category and provenance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TextInstance {
    pub stereotype_type: StereotypeType,
    pub text: String,
    pub category: Category,
    pub data_source: String,
}

impl TextInstance {
    pub fn new(
        stereotype_type: StereotypeType,
        text: impl Into<String>,
        category: Category,
        data_source: impl Into<String>,
    ) -> Self {
        TextInstance { stereotype_type, text: text.into(), category, data_source: data_source.into() }
    }

    /// `category_stereotypetype`, except that unrelated rows carry the bare
    /// `unrelated` label.
    pub fn label(&self) -> String {
        match self.category {
            Category::Unrelated => "unrelated".to_string(),
            c => format!("{}_{}", c, self.stereotype_type),
        }
    }

    /// 1 for stereotypes, 0 for neutral and unrelated text.
    pub fn binary_label(&self) -> u8 {
        u8::from(self.category == Category::Stereotype)
    }

    /// Unicode scalar count of the raw text.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Ordered collection of instances.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub name: String,
    pub instances: Vec<TextInstance>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, instances: Vec<TextInstance>) -> Self {
        LabeledDataset { name: name.into(), instances }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TextInstance> {
        self.instances.iter()
    }

    pub fn texts(&self) -> Vec<String> {
        self.instances.iter().map(|i| i.text.clone()).collect()
    }

    pub fn binary_labels(&self) -> Vec<u8> {
        self.instances.iter().map(TextInstance::binary_label).collect()
    }

    pub(crate) fn require_non_empty(&self) -> crate::Result<()> {
        if self.is_empty() {
            Err(crate::Error::Data(format!("dataset {:?} has no instances", self.name)))
        } else {
            Ok(())
        }
    }
}

impl<'a> IntoIterator for &'a LabeledDataset {
    type Item = &'a TextInstance;
    type IntoIter = std::slice::Iter<'a, TextInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_category_and_group() {
        let s = TextInstance::new(StereotypeType::Profession, "The comedian was a male.", Category::Stereotype, "stereoset_intrasentence");
        assert_eq!(s.binary_label(), 1);
        assert_eq!(s.label(), "stereotype_profession");
        let n = TextInstance::new(StereotypeType::Lgbtq, "x", Category::Neutral, "winoqueer_augmented");
        assert_eq!(n.label(), "neutral_lgbtq+");
        assert_eq!(n.binary_label(), 0);
        let u = TextInstance::new(StereotypeType::Nationality, "Chinese food is panda.", Category::Unrelated, "s");
        assert_eq!(u.label(), "unrelated");
    }

    #[test]
    fn enums_parse_closed_sets() {
        assert_eq!("lgbtq+".parse::<StereotypeType>().unwrap(), StereotypeType::Lgbtq);
        assert!("sarcasm".parse::<Category>().is_err());
        assert!("Race".parse::<StereotypeType>().is_err());
    }
}
