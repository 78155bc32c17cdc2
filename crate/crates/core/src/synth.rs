//! Deterministic synthetic tweets for smoke tests and benchmarks when the
//! real datasets are unavailable.
//!
//! Each label has cue words of varying strength. A cue right after an
//! intensifier counts double, one after a negator counts negatively, so
//! word order matters and a unigram model cannot fully explain intensity.
//! Cue embeddings cluster around a per-label direction.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::eval::{Annotation, TweetRecord};
use crate::labels::Emotion;
use crate::preprocess::{HASHTAG, NUMBER, URL, USER};
use crate::Rng;

const CUES: [&[&str]; 11] = [
    &["angry", "furious", "hate", "mad", "rage", "annoyed", "livid", "outraged", "fuming", "irritated", "😡", "pissed"],
    &["waiting", "soon", "tomorrow", "countdown", "expect", "upcoming", "ready", "eager"],
    &["gross", "disgusting", "nasty", "vile", "yuck", "revolting", "filthy", "awful"],
    &["scared", "afraid", "terrified", "panic", "nervous", "worried", "anxious", "dread", "frightened", "😱", "horror", "shaking"],
    &["happy", "delighted", "glad", "excited", "smile", "wonderful", "cheerful", "awesome", "😂", "yay", "thrilled", "laughing"],
    &["love", "adore", "darling", "sweetheart", "beloved", "hugs", "kisses", "cherish"],
    &["hope", "hopeful", "believe", "bright", "future", "positive", "improving", "confident"],
    &["doomed", "worse", "pointless", "useless", "failing", "ruined", "bleak", "grim"],
    &["sad", "depressed", "crying", "lonely", "miserable", "heartbroken", "tears", "gloomy", "grief", "😢", "sorrow", "hurting"],
    &["wow", "shocked", "unexpected", "surprised", "omg", "unbelievable", "stunned", "suddenly"],
    &["trust", "reliable", "honest", "loyal", "faithful", "depend", "promise", "sure"],
];

const FILLER: &[&str] = &[
    "the", "a", "i", "you", "it", "is", "was", "this", "that", "my", "day", "today", "work", "time", "people", "just",
    "get", "going", "know", "think", "with", "on", "at", "for", "of", "to", "and", "in", "me", "we", "they", "he",
    "she", "his", "her", "our", "your", "be", "have", "had", "do", "did", "what", "when", "where", "how", "why",
    "who", "about", "after", "before", "again", "back", "still", "now", "then", "here", "there", "morning", "night",
    "week", "weekend", "home", "school", "office", "bus", "train", "car", "phone", "game", "team", "friend", "family",
    "mom", "dad", "house", "city", "street", "coffee", "food", "dinner", "lunch", "music", "movie", "show", "book",
    "news", "weather", "rain", "sun", "monday", "friday", "class", "boss", "meeting", "email", "twitter", "video",
    "picture", "song", "store", "line", "money", "call", "text", "thing", "everyone", "someone", "nothing", "guy",
    "girl", "man", "woman", "kids", "dog", "cat", "world", "year", "life", "way", "one", "see", "said", "made",
    "went", "came", "left", "looking", "watching", "playing", "reading", "saying", "like", "all", "some", "out", "up",
];

const INTENSIFIERS: &[&str] = &["very", "so", "extremely", "totally", "absolutely", "super"];
const NEGATORS: &[&str] = &["not", "never", "no", "hardly"];
/// Strength multiplier of a cue right after an intensifier or a negator.
const INTENSIFY: f64 = 2.0;
const NEGATE: f64 = -0.6;

/// Emotion that pulls the intensity of `e` down when it co-occurs.
fn opposite(e: Emotion) -> Emotion {
    match e {
        Emotion::Anger => Emotion::Joy,
        Emotion::Fear => Emotion::Joy,
        Emotion::Joy => Emotion::Sadness,
        Emotion::Sadness => Emotion::Joy,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    /// Multi-label tweets.
    pub ec_tweets: usize,
    /// Intensity tweets per emotion.
    pub eireg_tweets: usize,
    pub emotions: Vec<Emotion>,
    pub embedding_dim: usize,
    /// Standard deviation of the noise added to gold intensities.
    pub intensity_noise: f64,
    /// Invented cue words per label on top of the common ones. They follow
    /// a Zipf law, so most appear only a handful of times.
    pub rare_cues: usize,
    pub rare_fillers: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 7,
            ec_tweets: 1200,
            eireg_tweets: 500,
            emotions: Emotion::ALL.to_vec(),
            embedding_dim: 32,
            intensity_noise: 0.05,
            rare_cues: 60,
            rare_fillers: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub ec: Vec<TweetRecord>,
    /// Intensity tweets of every requested emotion, in emotion order.
    pub eireg: Vec<TweetRecord>,
    /// Word vectors for most, not all, of the generated word types.
    pub embeddings: Vec<(String, Vec<f64>)>,
}

impl SynthCorpus {
    pub fn eireg_for(&self, e: Emotion) -> Vec<TweetRecord> {
        self.eireg
            .iter()
            .filter(|r| matches!(r.annotation, Annotation::Intensity { emotion, .. } if emotion == e))
            .cloned()
            .collect()
    }
}

#[derive(Clone)]
struct Cue {
    word: String,
    strength: f64,
    weight: f64,
}

struct World {
    cues: Vec<Vec<Cue>>,
    fillers: Vec<(String, f64)>,
}

fn pseudo_word(rng: &mut Rng, taken: &mut HashSet<String>) -> String {
    const C: &[u8] = b"bdfgklmnprstvz";
    const V: &[u8] = b"aeiou";
    loop {
        let mut w = String::new();
        for _ in 0..rng.gen_range(2..=3) {
            w.push(*C.choose(rng).unwrap() as char);
            w.push(*V.choose(rng).unwrap() as char);
        }
        if rng.gen_bool(0.5) {
            w.push(*C.choose(rng).unwrap() as char);
        }
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

impl World {
    fn new(opts: &SynthOptions, rng: &mut Rng) -> Self {
        let mut taken: HashSet<String> = CUES
            .iter()
            .flat_map(|l| l.iter())
            .chain(FILLER)
            .chain(INTENSIFIERS)
            .chain(NEGATORS)
            .map(|w| w.to_string())
            .collect();
        let cues = CUES
            .iter()
            .map(|words| {
                let mut list: Vec<String> = words.iter().map(|w| w.to_string()).collect();
                list.extend((0..opts.rare_cues).map(|_| pseudo_word(rng, &mut taken)));
                list.into_iter()
                    .enumerate()
                    .map(|(k, word)| Cue {
                        word,
                        strength: rng.gen_range(0.4..1.6),
                        weight: 1.0 / (1.0 + k as f64),
                    })
                    .collect()
            })
            .collect();
        let mut fillers: Vec<String> = FILLER.iter().map(|w| w.to_string()).collect();
        fillers.extend((0..opts.rare_fillers).map(|_| pseudo_word(rng, &mut taken)));
        let fillers = fillers
            .into_iter()
            .enumerate()
            .map(|(k, w)| (w, 1.0 / (1.0 + k as f64).powf(0.8)))
            .collect();
        World { cues, fillers }
    }

    fn pick_cue(&self, label: usize, rng: &mut Rng) -> &Cue {
        self.cues[label].choose_weighted(rng, |c| c.weight).unwrap()
    }

    fn fillers(&self, rng: &mut Rng, lo: usize, hi: usize) -> Vec<Unit<'_>> {
        (0..rng.gen_range(lo..=hi))
            .map(|_| Unit::Word(&self.fillers.choose_weighted(rng, |f| f.1).unwrap().0))
            .collect()
    }

    /// Cue vectors point along their label's direction, scaled by strength.
    fn embeddings(&self, dim: usize, rng: &mut Rng) -> Vec<(String, Vec<f64>)> {
        let gauss = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).unwrap();
        let vec_of = |scale: f64, rng: &mut Rng| -> Vec<f64> { (0..dim).map(|_| scale * gauss.sample(rng)).collect() };
        let mut out = Vec::new();
        for cues in &self.cues {
            let center = vec_of(1.0, rng);
            for c in cues {
                let noise = vec_of(0.3, rng);
                out.push((c.word.clone(), center.iter().zip(&noise).map(|(a, n)| a * c.strength + n).collect()));
            }
        }
        let intensifier = vec_of(1.0, rng);
        let negator = vec_of(1.0, rng);
        for (words, center) in [(INTENSIFIERS, &intensifier), (NEGATORS, &negator)] {
            for w in words {
                let noise = vec_of(0.3, rng);
                out.push((w.to_string(), center.iter().zip(&noise).map(|(c, n)| c + n).collect()));
            }
        }
        for (k, (w, _)) in self.fillers.iter().enumerate() {
            // leave some words without a pretrained vector
            if k % 11 != 5 {
                out.push((w.clone(), vec_of(1.0, rng)));
            }
        }
        for t in [USER, URL, NUMBER, HASHTAG, "!"] {
            out.push((t.to_string(), vec_of(1.0, rng)));
        }
        out
    }
}

/// A cue with its optional modifier, or a filler word.
enum Unit<'w> {
    Cue {
        label: usize,
        cue: &'w Cue,
        modifier: Option<(&'static str, f64)>,
    },
    Word(&'w str),
}

fn modifier(rng: &mut Rng, p_int: f64, p_neg: f64) -> Option<(&'static str, f64)> {
    let u: f64 = rng.gen();
    if u < p_int {
        Some((INTENSIFIERS.choose(rng).unwrap(), INTENSIFY))
    } else if u < p_int + p_neg {
        Some((NEGATORS.choose(rng).unwrap(), NEGATE))
    } else {
        None
    }
}

/// Assembles units into text, returning the text and per-label scores.
fn render(mut units: Vec<Unit<'_>>, rng: &mut Rng) -> (String, [f64; 11]) {
    units.shuffle(rng);
    let mut words: Vec<String> = Vec::new();
    let mut scores = [0.0; 11];
    if rng.gen_bool(0.3) {
        words.push(format!("@user{}", rng.gen_range(1..500)));
    }
    for u in units {
        match u {
            Unit::Word(w) => words.push(w.to_string()),
            Unit::Cue { label, cue, modifier } => {
                let mut m = 1.0;
                if let Some((mw, mm)) = modifier {
                    words.push(mw.to_string());
                    m = mm;
                }
                scores[label] += cue.strength * m;
                let w = if rng.gen_bool(0.05) && cue.word.is_ascii() && modifier.is_none() {
                    format!("#{}", cue.word)
                } else {
                    cue.word.clone()
                };
                words.push(if rng.gen_bool(0.1) { w.to_uppercase() } else { w });
            }
        }
    }
    if rng.gen_bool(0.1) {
        words.push(rng.gen_range(2..100).to_string());
    }
    if rng.gen_bool(0.3) {
        words.push("!".repeat(rng.gen_range(1..4)));
    }
    if rng.gen_bool(0.15) {
        words.push(format!("https://t.co/x{}", rng.gen_range(0..10_000)));
    }
    (words.join(" "), scores)
}

fn ec_tweet(world: &World, rng: &mut Rng) -> (String, Vec<u8>) {
    let mut units = world.fillers(rng, 3, 10);
    let n_active = *[0usize, 1, 1, 2, 2, 3].choose(rng).unwrap();
    let mut labels: Vec<usize> = (0..11).collect();
    labels.shuffle(rng);
    for &label in &labels[..n_active] {
        for _ in 0..rng.gen_range(1..=2) {
            units.push(Unit::Cue {
                label,
                cue: world.pick_cue(label, rng),
                modifier: modifier(rng, 0.2, 0.0),
            });
        }
    }
    // distractor: a negated cue of another label
    if rng.gen_bool(0.35) {
        let label = labels[n_active];
        units.push(Unit::Cue {
            label,
            cue: world.pick_cue(label, rng),
            modifier: Some((NEGATORS.choose(rng).unwrap(), NEGATE)),
        });
    }
    let (text, scores) = render(units, rng);
    (text, scores.iter().map(|&s| (s >= 0.5) as u8).collect())
}

fn eireg_tweet(world: &World, e: Emotion, noise: &Normal<f64>, rng: &mut Rng) -> (String, f64) {
    let label = e.ec_index();
    let other = opposite(e).ec_index();
    let mut units = world.fillers(rng, 3, 10);
    let n_cues = *[0usize, 1, 1, 1, 2, 2, 3].choose(rng).unwrap();
    for _ in 0..n_cues {
        units.push(Unit::Cue {
            label,
            cue: world.pick_cue(label, rng),
            modifier: modifier(rng, 0.3, 0.2),
        });
    }
    if rng.gen_bool(0.25) {
        units.push(Unit::Cue {
            label: other,
            cue: world.pick_cue(other, rng),
            modifier: modifier(rng, 0.2, 0.2),
        });
    }
    let (text, scores) = render(units, rng);
    let z = 1.8 * (scores[label] - 0.4 * scores[other].max(0.0) - 1.0);
    let y = 1.0 / (1.0 + (-z).exp()) + noise.sample(rng);
    (text, (y.clamp(0.0, 1.0) * 1000.0).round() / 1000.0)
}

pub fn generate(opts: &SynthOptions) -> SynthCorpus {
    let mut rng = Rng::seed_from_u64(opts.seed);
    let world = World::new(opts, &mut rng);
    let noise = Normal::new(0.0, opts.intensity_noise.max(0.0)).unwrap();
    let ec = (0..opts.ec_tweets)
        .map(|i| {
            let (text, labels) = ec_tweet(&world, &mut rng);
            TweetRecord {
                id: format!("ec-{i:05}"),
                text,
                annotation: Annotation::Labels(labels),
            }
        })
        .collect();
    let mut eireg = Vec::new();
    for &e in &opts.emotions {
        for i in 0..opts.eireg_tweets {
            let (text, value) = eireg_tweet(&world, e, &noise, &mut rng);
            eireg.push(TweetRecord {
                id: format!("{e}-{i:05}"),
                text,
                annotation: Annotation::Intensity { emotion: e, value },
            });
        }
    }
    SynthCorpus {
        ec,
        eireg,
        embeddings: world.embeddings(opts.embedding_dim, &mut rng),
    }
}
