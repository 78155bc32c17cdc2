use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/lexicon.txt");

/// Unigram word-frequency model used to split hashtag bodies.
#[derive(Clone, Debug)]
pub struct Lexicon {
    counts: HashMap<String, u64>,
    total: f64,
}

impl Lexicon {
    /// The English frequency list shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN.as_bytes(), "builtin lexicon").expect("shipped lexicon is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(f), &path.display().to_string())
    }

    /// Parse `word count` lines; blank lines and `#` comments are skipped.
    pub fn parse(reader: impl BufRead, name: &str) -> Result<Self> {
        let mut counts = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::format_at(name, i + 1, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::format_at(name, i + 1, "expected `word count`"));
            };
            let count: u64 = count
                .parse()
                .map_err(|_| Error::format_at(name, i + 1, format!("bad count {count:?}")))?;
            *counts.entry(word.to_lowercase()).or_insert(0) += count;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn from_counts(counts: HashMap<String, u64>) -> Self {
        let total = counts.values().sum::<u64>().max(1) as f64;
        Lexicon { counts, total }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    /// Log-probability of a word. Unknown words get `10 / (N · 10^len)`, so
    /// an unknown span is cheaper whole than cut into unknown pieces.
    pub fn log_prob(&self, word: &str) -> f64 {
        match self.counts.get(word) {
            Some(&c) => (c as f64 / self.total).ln(),
            None => (10.0f64).ln() - self.total.ln() - word.chars().count() as f64 * (10.0f64).ln(),
        }
    }

    /// Most probable split of a hashtag body. Underscores are hard breaks.
    pub fn segment_hashtag(&self, body: &str) -> Vec<String> {
        let body = body.to_lowercase();
        body.split('_')
            .filter(|s| !s.is_empty())
            .flat_map(|part| self.segment(part))
            .collect()
    }

    /// Dynamic program over split points maximizing the summed
    /// log-probability of the pieces.
    pub fn segment(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        if n == 0 {
            return Vec::new();
        }
        // best[i]: score of the best split of chars[..i]; back[i]: start of its last piece
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        for end in 1..=n {
            for start in 0..end {
                let piece: String = chars[start..end].iter().collect();
                let score = best[start] + self.log_prob(&piece);
                if score > best[end] {
                    best[end] = score;
                    back[end] = start;
                }
            }
        }
        let mut pieces = Vec::new();
        let mut end = n;
        while end > 0 {
            let start = back[end];
            pieces.push(chars[start..end].iter().collect());
            end = start;
        }
        pieces.reverse();
        pieces
    }

    /// Summed log-probability of a given split.
    pub fn split_score(&self, pieces: &[String]) -> f64 {
        pieces.iter().map(|p| self.log_prob(p)).sum()
    }
}
