//! Synthetic desk-scale dataset: templated captions with derived
//! questions, plus hash-based bag-of-attributes feature vectors.

use super::dataset::{Caption, ImageRecord, Question, QuestionType};
use super::embed::EMBED_DIM;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::rng::{fnv1a64, stream_rng};
use rand::Rng;

/// Slot pools for the caption/question templates. One template per
/// question type; each question is a deterministic function of its source
/// caption, so an overfit model can reproduce it exactly.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub objects: Vec<String>,
    pub colors: Vec<String>,
    pub locations: Vec<String>,
    pub persons: Vec<String>,
    pub times: Vec<String>,
    pub states: Vec<String>,
    pub reasons: Vec<String>,
    pub counts: Vec<String>,
}

fn words(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl TemplateBank {
    pub fn default_bank() -> Self {
        TemplateBank {
            objects: words(&[
                "car", "dog", "cat", "ball", "chair", "table", "tree", "house", "bike", "bird",
                "cup", "book",
            ]),
            colors: words(&["red", "blue", "green", "white", "black", "yellow"]),
            locations: words(&["kitchen", "street", "park", "garden", "room", "yard"]),
            persons: words(&["man", "woman", "boy", "girl"]),
            times: words(&["morning", "evening", "night", "noon"]),
            states: words(&["wet", "dirty", "happy", "broken"]),
            reasons: words(&["rain", "sun", "wind", "snow"]),
            counts: words(&["two", "three", "four", "five"]),
        }
    }

    fn validate(&self) -> Result<()> {
        let pools: [(&str, &Vec<String>); 8] = [
            ("objects", &self.objects),
            ("colors", &self.colors),
            ("locations", &self.locations),
            ("persons", &self.persons),
            ("times", &self.times),
            ("states", &self.states),
            ("reasons", &self.reasons),
            ("counts", &self.counts),
        ];
        for (name, pool) in pools {
            if pool.is_empty() {
                return Err(Error::invalid(format!("empty template bank pool `{name}`")));
            }
        }
        if self.objects.len() < 4 || self.persons.len() < 2 {
            return Err(Error::invalid(
                "template bank needs >= 4 objects and >= 2 persons",
            ));
        }
        Ok(())
    }
}

fn pick<'a, R: Rng>(rng: &mut R, pool: &'a [String]) -> &'a str {
    &pool[rng.gen_range(0..pool.len())]
}

/// First `k` entries of a seeded partial shuffle (sampling without
/// replacement).
fn sample_distinct<R: Rng>(rng: &mut R, pool: &[String], k: usize) -> Vec<String> {
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in 0..k.min(pool.len()) {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    idx.iter().take(k).map(|&i| pool[i].clone()).collect()
}

fn wv(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Builds the (caption, question) pair for one type. Slot fillers are
/// returned so the feature hash can see them.
fn build_pair<R: Rng>(
    t: QuestionType,
    bank: &TemplateBank,
    objects: &mut impl Iterator<Item = String>,
    persons: &mut impl Iterator<Item = String>,
    rng: &mut R,
) -> (Vec<String>, Vec<String>, Vec<String>) {
    // Each question shares a long surface span with its source caption,
    // so the char-trigram posterior concentrates on the right caption.
    match t {
        QuestionType::What => {
            let obj = objects.next().expect("object pool exhausted");
            let color = pick(rng, &bank.colors).to_string();
            (
                wv(&["the", "color", "of", "the", &obj, "is", &color]),
                wv(&["what", "is", "the", "color", "of", "the", &obj]),
                vec![obj, color],
            )
        }
        QuestionType::Where => {
            let obj = objects.next().expect("object pool exhausted");
            let loc = pick(rng, &bank.locations).to_string();
            (
                wv(&["the", &obj, "is", "sitting", "in", "the", &loc]),
                wv(&["where", "is", "the", &obj, "sitting"]),
                vec![obj, loc],
            )
        }
        QuestionType::Who => {
            let person = persons.next().expect("person pool exhausted");
            let obj = objects.next().expect("object pool exhausted");
            (
                wv(&["the", &person, "is", "near", "the", &obj]),
                wv(&["who", "is", "near", "the", &obj]),
                vec![person, obj],
            )
        }
        QuestionType::Why => {
            let obj = objects.next().expect("object pool exhausted");
            let state = pick(rng, &bank.states).to_string();
            let reason = pick(rng, &bank.reasons).to_string();
            (
                wv(&["the", &obj, "is", &state, "because", "of", "the", &reason]),
                wv(&["why", "is", "the", &obj, &state]),
                vec![obj, state, reason],
            )
        }
        QuestionType::When => {
            let person = persons.next().expect("person pool exhausted");
            let time = pick(rng, &bank.times).to_string();
            (
                wv(&["the", &person, "is", "walking", "in", "the", &time]),
                wv(&["when", "is", "the", &person, "walking"]),
                vec![person, time],
            )
        }
        QuestionType::How => {
            let obj = objects.next().expect("object pool exhausted");
            let count = pick(rng, &bank.counts).to_string();
            let loc = pick(rng, &bank.locations).to_string();
            (
                wv(&["there", "are", &count, &obj, "in", "the", &loc]),
                wv(&["how", "many", &obj, "are", "in", "the", &loc]),
                vec![count, obj, loc],
            )
        }
        QuestionType::Other => unreachable!("OTHER is never generated"),
    }
}

/// Hash-based bag-of-attributes embedding: every content word adds +/-1
/// at an fnv1a-derived coordinate; the result is L2-normalized.
fn feature_from_content(content: &[String]) -> Tensor {
    let mut acc = vec![0.0; EMBED_DIM];
    for word in content {
        let h = fnv1a64(word.as_bytes());
        let idx = (h % EMBED_DIM as u64) as usize;
        let sign = if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
        acc[idx] += sign;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        acc.iter_mut().for_each(|v| *v /= norm);
    }
    Tensor::vector(acc)
}

/// Deterministic synthetic dataset. Each record carries three typed
/// questions (types rotate so the corpus is balanced over all six),
/// one source caption per question, and sometimes a distractor caption.
/// Objects are distinct within a record so each question aligns with
/// exactly one caption.
pub fn generate_synthetic_dataset(
    seed: u64,
    n_images: usize,
    bank: &TemplateBank,
) -> Result<Vec<ImageRecord>> {
    if n_images < 1 {
        return Err(Error::invalid("n_images must be >= 1"));
    }
    bank.validate()?;
    let mut rng = stream_rng(seed, "data");
    let mut records = Vec::with_capacity(n_images);
    for i in 0..n_images {
        let types: Vec<QuestionType> = (0..3)
            .map(|k| QuestionType::from_index((i + k) % 6))
            .collect();
        let mut objects = sample_distinct(&mut rng, &bank.objects, 4).into_iter();
        let mut persons = sample_distinct(&mut rng, &bank.persons, 2).into_iter();

        let mut captions = Vec::new();
        let mut questions = Vec::new();
        let mut content = Vec::new();
        for &t in &types {
            let (cap, q, slots) = build_pair(t, bank, &mut objects, &mut persons, &mut rng);
            captions.push(cap);
            questions.push(Question {
                words: q,
                qtype: t,
            });
            content.extend(slots);
        }
        if rng.gen_bool(0.5) {
            let obj = objects.next().expect("object pool exhausted");
            let color = pick(&mut rng, &bank.colors).to_string();
            captions.push(wv(&["the", &obj, "is", &color]));
            content.push(obj);
            content.push(color);
        }
        let captions: Vec<Caption> = captions
            .into_iter()
            .map(|words| Caption {
                words,
                confidence: rng.gen_range(0.0..2.0),
            })
            .collect();

        records.push(ImageRecord {
            image_id: format!("synthetic-{i:04}"),
            feature: feature_from_content(&content),
            captions,
            questions,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn same_seed_is_bit_identical() {
        let bank = TemplateBank::default_bank();
        let a = generate_synthetic_dataset(7, 10, &bank).unwrap();
        let b = generate_synthetic_dataset(7, 10, &bank).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fifty_images_have_captions_and_type_diversity() {
        let bank = TemplateBank::default_bank();
        let records = generate_synthetic_dataset(7, 50, &bank).unwrap();
        assert_eq!(records.len(), 50);
        let mut all_types = HashSet::new();
        for r in &records {
            assert!(r.captions.len() >= 2);
            assert_eq!(r.questions.len(), 3);
            let types: HashSet<QuestionType> = r.questions.iter().map(|q| q.qtype).collect();
            assert!(types.len() >= 2, "record {} lacks type diversity", r.image_id);
            all_types.extend(types);
        }
        assert_eq!(all_types.len(), 6);
    }

    #[test]
    fn question_content_word_appears_in_source_caption() {
        let bank = TemplateBank::default_bank();
        let records = generate_synthetic_dataset(3, 20, &bank).unwrap();
        for r in &records {
            for (j, q) in r.questions.iter().enumerate() {
                // the question's last content word comes from caption j
                let cap_words: HashSet<&String> = r.captions[j].words.iter().collect();
                let shared = q.words.iter().filter(|w| cap_words.contains(w)).count();
                assert!(shared >= 2, "question {:?} vs caption {:?}", q.words, r.captions[j].words);
            }
        }
    }

    #[test]
    fn features_are_unit_norm_and_finite() {
        let bank = TemplateBank::default_bank();
        let records = generate_synthetic_dataset(1, 5, &bank).unwrap();
        for r in &records {
            let norm: f64 = r.feature.data().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_bank_rejected() {
        let mut bank = TemplateBank::default_bank();
        bank.colors.clear();
        assert!(generate_synthetic_dataset(1, 1, &bank).is_err());
    }

    #[test]
    fn zero_images_rejected() {
        let bank = TemplateBank::default_bank();
        assert!(generate_synthetic_dataset(1, 0, &bank).is_err());
    }
}
