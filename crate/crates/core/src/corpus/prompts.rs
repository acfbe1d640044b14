use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const WINOQUEER: &str = include_str!("../../templates/winoqueer.txt");
const SEEGULL_SENTENCES: &str = include_str!("../../templates/seegull_sentences.txt");
const SEEGULL_NEUTRAL_UNRELATED: &str = include_str!("../../templates/seegull_neutral_unrelated.txt");

/// Few-shot prompts used to grow the corpus with an LLM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationTemplate {
    /// Neutral + unrelated rewrites of LGBTQ+ stereotypes.
    Winoqueer,
    /// Phrase-to-sentence expansion for nationality phrases.
    SeegullSentences,
    /// Neutral + unrelated rewrites of nationality stereotypes.
    SeegullNeutralUnrelated,
}

impl AugmentationTemplate {
    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationTemplate::Winoqueer => "winoqueer",
            AugmentationTemplate::SeegullSentences => "seegull_sentences",
            AugmentationTemplate::SeegullNeutralUnrelated => "seegull_neutral_unrelated",
        }
    }

    pub fn template_text(self) -> &'static str {
        match self {
            AugmentationTemplate::Winoqueer => WINOQUEER,
            AugmentationTemplate::SeegullSentences => SEEGULL_SENTENCES,
            AugmentationTemplate::SeegullNeutralUnrelated => SEEGULL_NEUTRAL_UNRELATED,
        }
    }
}

impl fmt::Display for AugmentationTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugmentationTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "winoqueer" => Ok(AugmentationTemplate::Winoqueer),
            "seegull_sentences" => Ok(AugmentationTemplate::SeegullSentences),
            "seegull_neutral_unrelated" => Ok(AugmentationTemplate::SeegullNeutralUnrelated),
            other => Err(Error::InvalidInput(format!("unknown augmentation template {other:?}"))),
        }
    }
}

/// The template followed by the batch, one item per line.
pub fn render_augmentation_prompt(template: AugmentationTemplate, batch: &[String]) -> Result<String> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("augmentation batch is empty".into()));
    }
    let mut out = template.template_text().to_string();
    if !out.ends_with('\n') {
        out.push('\n');
    }
    for item in batch {
        out.push_str(item.trim());
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seegull_has_ten_examples_then_phrase() {
        let p = render_augmentation_prompt(AugmentationTemplate::SeegullSentences, &["Zimbabwean terrorist".into()]).unwrap();
        for i in 1..=10 {
            assert!(p.contains(&format!("\n{i}. The ")), "missing example {i}");
        }
        let marker = p.find("Here are the phrases to augment").unwrap();
        assert!(p[marker..].contains("Zimbabwean terrorist\n"));
        assert!(p.starts_with("Please augment the phrases below"));
    }

    #[test]
    fn winoqueer_names_columns() {
        let p = render_augmentation_prompt(AugmentationTemplate::Winoqueer, &["Lesbians are unusual.".into()]).unwrap();
        assert!(p.contains(r#""Original", "Neutral", and "Unrelated""#));
        assert!(p.trim_end().ends_with("Lesbians are unusual."));
        let marker = p.find("Dataset to Change:").unwrap();
        assert!(p[marker..].contains("Lesbians are unusual."));
    }

    #[test]
    fn empty_batch_and_unknown_template() {
        assert!(render_augmentation_prompt(AugmentationTemplate::Winoqueer, &[]).is_err());
        assert!("gpt".parse::<AugmentationTemplate>().is_err());
    }
}
