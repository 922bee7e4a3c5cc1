//! Seeded synthetic corpora with gold labels, for simulations and tests.
//!
//! Each class is split into topics with their own words. Topic popularity
//! and word frequencies within a topic both follow Zipf laws, so some topics
//! are rare. A fraction of tokens is replaced by words from the other class.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Label, Pool};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub seed: u64,
    pub topics_per_class: usize,
    pub topic_exponent: f64,
    pub words_per_topic: usize,
    pub word_exponent: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Probability that a token comes from the other class.
    pub noise: f64,
    pub related_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            documents: 2000,
            seed: 0,
            topics_per_class: 10,
            topic_exponent: 1.5,
            words_per_topic: 100,
            word_exponent: 1.2,
            min_tokens: 6,
            max_tokens: 12,
            noise: 0.1,
            related_fraction: 0.5,
        }
    }
}

struct Zipf(Vec<f64>);

impl Zipf {
    fn new(n: usize, exponent: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=n.max(1))
            .map(|k| {
                acc += 1.0 / (k as f64).powf(exponent);
                acc
            })
            .collect();
        for v in &mut cdf {
            *v /= acc;
        }
        Zipf(cdf)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.0.partition_point(|&c| c < u).min(self.0.len() - 1)
    }
}

fn word(class: Label, topic: usize, rank: usize) -> String {
    let prefix = match class {
        Label::Related => "rel",
        Label::Unrelated => "unr",
    };
    format!("{prefix}{topic}x{rank}")
}

/// Documents `syn00000`, `syn00001`, ... with gold labels, all unlabeled.
pub fn separable_corpus(spec: &SyntheticSpec) -> Pool {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let topics = Zipf::new(spec.topics_per_class, spec.topic_exponent);
    let words = Zipf::new(spec.words_per_topic, spec.word_exponent);
    let docs = (0..spec.documents)
        .map(|i| {
            let class = Label::from_related(rng.gen_bool(spec.related_fraction));
            let topic = topics.sample(&mut rng);
            let len = rng.gen_range(spec.min_tokens..=spec.max_tokens.max(spec.min_tokens));
            let text = (0..len.max(1))
                .map(|_| {
                    if rng.gen_bool(spec.noise) {
                        let other = topics.sample(&mut rng);
                        word(class.flipped(), other, words.sample(&mut rng))
                    } else {
                        word(class, topic, words.sample(&mut rng))
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            Document::new(format!("syn{i:05}"), text)
                .with_label(class)
                .with_source("synthetic")
        })
        .collect();
    Pool::from_documents(docs, false).expect("generated ids are unique")
}
