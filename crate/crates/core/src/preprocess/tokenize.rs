use super::segment::Lexicon;
use super::vocab::{HASHTAG, NUMBER, URL, USER};
use crate::error::{Error, Result};

const TAGS: [&str; 4] = [URL, USER, NUMBER, HASHTAG];

/// Tweet normalizer: lowercasing, URL / mention / number annotation,
/// hashtag segmentation, emoji and punctuation splitting.
#[derive(Clone, Debug)]
pub struct Tokenizer {
    lexicon: Lexicon,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(Lexicon::builtin())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Pictographic code points that are kept as standalone tokens.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2B00..=0x2BFF
        | 0x2300..=0x23FF
        | 0x3030 | 0x303D | 0x3297 | 0x3299
        | 0x00A9 | 0x00AE | 0x203C | 0x2049 | 0x2122 | 0x2139
        | 0x2194..=0x21AA)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3 | 0xE0020..=0xE007F)
}

const ZWJ: char = '\u{200D}';

impl Tokenizer {
    pub fn new(lexicon: Lexicon) -> Self {
        Tokenizer { lexicon }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        let lowered = text.to_lowercase();
        let mut out = Vec::new();
        for chunk in lowered.split_whitespace() {
            self.tokenize_chunk(chunk, &mut out);
        }
        if out.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(out)
    }

    fn tokenize_chunk(&self, chunk: &str, out: &mut Vec<String>) {
        if TAGS.contains(&chunk) {
            out.push(chunk.to_string());
            return;
        }
        if chunk.starts_with("http://") || chunk.starts_with("https://") || chunk.starts_with("www.") {
            out.push(URL.to_string());
            return;
        }
        let chars: Vec<char> = chunk.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let next_is_word = chars.get(i + 1).is_some_and(|&n| is_word_char(n));
            if (c == '@' || c == '#') && next_is_word {
                let end = scan_while(&chars, i + 1, is_word_char);
                let body: String = chars[i + 1..end].iter().collect();
                if c == '@' {
                    out.push(USER.to_string());
                } else {
                    out.push(HASHTAG.to_string());
                    for piece in self.lexicon.segment_hashtag(&body) {
                        if piece.chars().all(|ch| ch.is_ascii_digit()) {
                            out.push(NUMBER.to_string());
                        } else {
                            out.push(piece);
                        }
                    }
                }
                i = end;
            } else if is_word_char(c) {
                let end = scan_word(&chars, i);
                let word: String = chars[i..end].iter().collect();
                if is_number(&word) {
                    out.push(NUMBER.to_string());
                } else {
                    out.push(word);
                }
                i = end;
            } else if is_emoji(c) {
                let end = scan_emoji(&chars, i);
                out.push(chars[i..end].iter().collect());
                i = end;
            } else if is_emoji_modifier(c) || c == ZWJ {
                // stray joiners and selectors carry no content
                i += 1;
            } else {
                out.push(c.to_string());
                i += 1;
            }
        }
    }
}

fn scan_while(chars: &[char], start: usize, pred: impl Fn(char) -> bool) -> usize {
    let mut j = start;
    while j < chars.len() && pred(chars[j]) {
        j += 1;
    }
    j
}

/// Word characters, plus `'` / `.` / `,` / `:` when flanked by characters
/// that keep contractions ("don't") and numbers ("3.5", "10:30") whole.
fn scan_word(chars: &[char], start: usize) -> usize {
    let mut j = start;
    loop {
        j = scan_while(chars, j, is_word_char);
        let (Some(&sep), Some(&after)) = (chars.get(j), chars.get(j + 1)) else {
            return j;
        };
        let prev = chars[j - 1];
        let joins = match sep {
            '\'' | '’' => prev.is_alphabetic() && after.is_alphabetic(),
            '.' | ',' | ':' => prev.is_ascii_digit() && after.is_ascii_digit(),
            _ => false,
        };
        if !joins {
            return j;
        }
        j += 1;
    }
}

fn scan_emoji(chars: &[char], start: usize) -> usize {
    let regional = |c: char| (0x1F1E6..=0x1F1FF).contains(&(c as u32));
    let mut j = start + 1;
    // regional indicator pairs form a flag
    if regional(chars[start]) && chars.get(j).is_some_and(|&c| regional(c)) {
        j += 1;
    }
    loop {
        while j < chars.len() && is_emoji_modifier(chars[j]) {
            j += 1;
        }
        if j + 1 < chars.len() && chars[j] == ZWJ && is_emoji(chars[j + 1]) {
            j += 2;
            continue;
        }
        return j;
    }
}

fn is_number(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_digit())
        && word.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | ':'))
}
