//! Tweet normalization, hashtag segmentation, vocabulary and pretrained
//! embedding ingestion.

mod embeddings;
mod segment;
mod tokenize;
mod vocab;

pub use embeddings::{load_embeddings, parse_embeddings, write_embeddings, LoadedEmbeddings, MISSING_SCALE};
pub use segment::Lexicon;
pub use tokenize::{is_emoji, Tokenizer};
pub use vocab::{
    TokenSequence, Vocabulary, HASHTAG, NUMBER, PAD, PAD_ID, RESERVED, UNK, UNK_ID, URL, USER,
};
