//! Deterministic synthetic corpus with a separable stereotype signal, used
//! for desk-scale checks when the real corpus is not at hand.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Category, LabeledDataset, StereotypeType, TextInstance};

const SUBJECTS: [(StereotypeType, &[&str]); 6] = [
    (StereotypeType::Race, &["black man", "asian student", "hispanic family", "white neighbor", "arab driver"]),
    (StereotypeType::Nationality, &["russian man", "italian chef", "nigerian trader", "french tourist", "mexican worker"]),
    (StereotypeType::Profession, &["lawyer", "nurse", "plumber", "banker", "teacher", "comedian"]),
    (StereotypeType::Gender, &["woman", "girl", "mother", "husband", "boy", "sister"]),
    (StereotypeType::Religion, &["muslim", "christian", "jewish man", "hindu priest", "buddhist monk"]),
    (StereotypeType::Lgbtq, &["gay man", "lesbian couple", "bisexual person", "transgender teen", "queer artist"]),
];

const STEREOTYPE_TRAITS: &[&str] = &[
    "lazy", "greedy", "violent", "dishonest", "stupid", "dangerous", "emotional", "weak", "sneaky", "dirty",
    "aggressive", "criminal", "bossy", "corrupt", "hysterical", "arrogant",
];
const NEUTRAL_TRAITS: &[&str] = &[
    "tall", "busy", "quiet", "early", "ready", "tired", "home", "outside", "seated", "present", "awake", "nearby",
    "calm", "thirsty", "upstairs", "downtown",
];
const UNRELATED_TRAITS: &[&str] = &[
    "spaghetti", "purple", "teacup", "cloud", "marble", "rainbow", "pillow", "butterfly", "cotton", "globe",
    "paint", "telephone", "banana", "velvet", "comet", "pebble",
];
const VERBS: &[&str] = &["is", "was", "seemed", "looked", "appeared"];
const OPENERS: &[&str] = &["The", "That", "My", "Our", "This"];
const TAILS: &[&str] = &["", "today", "at work", "as usual", "last night", "in town"];

/// `n` sentences drawn round-robin over the three categories.
pub fn synthetic_corpus(n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let category = Category::ALL[i % 3];
        let (group, subjects) = SUBJECTS[rng.random_range(0..SUBJECTS.len())];
        let traits = match category {
            Category::Stereotype => STEREOTYPE_TRAITS,
            Category::Neutral => NEUTRAL_TRAITS,
            Category::Unrelated => UNRELATED_TRAITS,
        };
        let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| *xs.choose(rng).expect("non-empty word list");
        let opener = pick(&mut rng, OPENERS);
        let subject = pick(&mut rng, subjects);
        let verb = pick(&mut rng, VERBS);
        let adverb = if rng.random_bool(0.4) { " very" } else { "" };
        let trait_word = pick(&mut rng, traits);
        let tail = pick(&mut rng, TAILS);
        let tail = if tail.is_empty() { String::new() } else { format!(" {tail}") };
        let text = format!("{opener} {subject} {verb}{adverb} {trait_word}{tail}.");
        out.push(TextInstance::new(group, text, category, "synthetic"));
    }
    LabeledDataset::new("synthetic", out)
}
