use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng as _, SeedableRng};

use super::vocab::Vocabulary;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::layers::EmbeddingTable;
use crate::Rng;

/// Range of the uniform draw for vocabulary tokens missing from the file.
pub const MISSING_SCALE: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct LoadedEmbeddings {
    pub table: EmbeddingTable,
    /// Non-padding vocabulary entries found in the file.
    pub found: usize,
    pub missing: usize,
}

impl LoadedEmbeddings {
    /// Fraction of non-padding vocabulary entries found in the file.
    pub fn coverage(&self) -> f64 {
        let total = self.found + self.missing;
        if total == 0 {
            0.0
        } else {
            self.found as f64 / total as f64
        }
    }
}

pub fn load_embeddings(path: &Path, vocab: &Vocabulary, seed: u64, trainable: bool) -> Result<LoadedEmbeddings> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(std::io::BufReader::new(f), &path.display().to_string(), vocab, seed, trainable)
}

/// Parse a word2vec-style text file (`token v1 … vD` per line, with an
/// optional `count dim` header) into a table aligned with `vocab`.
pub fn parse_embeddings(
    reader: impl BufRead,
    name: &str,
    vocab: &Vocabulary,
    seed: u64,
    trainable: bool,
) -> Result<LoadedEmbeddings> {
    let mut dim: Option<usize> = None;
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; vocab.len()];
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format_at(name, lineno, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if lineno == 1 && fields.len() == 2 {
            if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }
        let values = &fields[1..];
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::format_at(
                    name,
                    lineno,
                    format!("expected {d} values, found {}", values.len()),
                ))
            }
            Some(_) => {}
        }
        let mut vec = Vec::with_capacity(values.len());
        for v in values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::format_at(name, lineno, format!("non-numeric value {v:?}")))?;
            if !x.is_finite() {
                return Err(Error::format_at(name, lineno, "non-finite value"));
            }
            vec.push(x);
        }
        if let Some(id) = vocab.get(fields[0]) {
            let slot = &mut rows[id as usize];
            if slot.is_none() {
                *slot = Some(vec);
            }
        }
    }
    let dim = match dim {
        Some(d) if d > 0 => d,
        _ => return Err(Error::format(name, "no embedding vectors")),
    };
    let mut rng = Rng::seed_from_u64(seed);
    let mut data = vec![0.0; vocab.len() * dim];
    let (mut found, mut missing) = (0, 0);
    for (id, row) in rows.into_iter().enumerate().skip(1) {
        let dst = &mut data[id * dim..(id + 1) * dim];
        match row {
            Some(v) => {
                dst.copy_from_slice(&v);
                found += 1;
            }
            None => {
                for x in dst.iter_mut() {
                    *x = rng.gen_range(-MISSING_SCALE..MISSING_SCALE);
                }
                missing += 1;
            }
        }
    }
    let table = EmbeddingTable::new(Tensor::matrix(vocab.len(), dim, data)?, trainable)?;
    Ok(LoadedEmbeddings { table, found, missing })
}

/// Write vectors in the text format read by [`load_embeddings`], with header.
pub fn write_embeddings<'a>(path: &Path, dim: usize, entries: impl IntoIterator<Item = (&'a str, &'a [f64])>) -> Result<()> {
    let entries: Vec<_> = entries.into_iter().collect();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    writeln!(f, "{} {}", entries.len(), dim).map_err(io)?;
    for (tok, v) in entries {
        if v.len() != dim {
            return Err(Error::dimension(format!("vector for {tok:?} has {} values", v.len())));
        }
        write!(f, "{tok}").map_err(io)?;
        for x in v {
            write!(f, " {x}").map_err(io)?;
        }
        writeln!(f).map_err(io)?;
    }
    f.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::vocab::RESERVED;

    fn vocab(extra: &[&str]) -> Vocabulary {
        let mut t: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        t.extend(extra.iter().map(|s| s.to_string()));
        Vocabulary::from_tokens(t).unwrap()
    }

    #[test]
    fn full_coverage() {
        let v = vocab(&[]);
        let mut text = String::from("5 2\n");
        for t in &RESERVED[1..] {
            text.push_str(&format!("{t} 0.5 -0.5\n"));
        }
        let e = parse_embeddings(text.as_bytes(), "emb", &v, 1, false).unwrap();
        assert_eq!(e.coverage(), 1.0);
        assert_eq!(e.table.row(2), &[0.5, -0.5]);
        assert_eq!(e.table.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn missing_rows_are_small_and_seeded() {
        let v = vocab(&["happy", "sad"]);
        let text = "happy 1 2 3\n";
        let a = parse_embeddings(text.as_bytes(), "emb", &v, 9, false).unwrap();
        let b = parse_embeddings(text.as_bytes(), "emb", &v, 9, false).unwrap();
        let sad = v.id("sad") as usize;
        assert_eq!(a.table.row(sad), b.table.row(sad));
        assert!(a.table.row(sad).iter().all(|x| x.abs() < MISSING_SCALE));
        assert_eq!(a.found, 1);
        assert_eq!(a.missing, v.len() - 2);
    }

    #[test]
    fn ragged_line_names_line_number() {
        let v = vocab(&["a", "b"]);
        let err = parse_embeddings("a 1 2\nb 1\n".as_bytes(), "emb.txt", &v, 0, false).unwrap_err();
        assert!(err.to_string().contains("emb.txt:2"), "{err}");
        let err = parse_embeddings("2 3\na 1 2\n".as_bytes(), "emb.txt", &v, 0, false).unwrap_err();
        assert!(err.to_string().contains("emb.txt:2"), "{err}");
        assert!(parse_embeddings("a 1 x\n".as_bytes(), "emb.txt", &v, 0, false).is_err());
    }
}
