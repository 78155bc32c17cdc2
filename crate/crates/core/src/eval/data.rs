use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::labels::{Emotion, EC_LABELS};
use crate::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Annotation {
    /// 0/1 per entry of [`EC_LABELS`].
    Labels(Vec<u8>),
    Intensity { emotion: Emotion, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub annotation: Annotation,
}

impl TweetRecord {
    pub fn labels(&self) -> Option<&[u8]> {
        match &self.annotation {
            Annotation::Labels(l) => Some(l),
            Annotation::Intensity { .. } => None,
        }
    }

    pub fn intensity(&self) -> Option<f64> {
        match self.annotation {
            Annotation::Intensity { value, .. } => Some(value),
            Annotation::Labels(_) => None,
        }
    }
}

fn tsv_lines<'a>(reader: impl BufRead + 'a, name: &'a str) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader.lines().enumerate().filter_map(move |(i, l)| match l {
        Ok(l) => {
            let l = l.strip_suffix('\r').map(str::to_string).unwrap_or(l);
            (!l.trim().is_empty()).then_some(Ok((i + 1, l)))
        }
        Err(e) => Some(Err(Error::format_at(name, i + 1, e.to_string()))),
    })
}

/// Multi-label file: `ID`, `Tweet`, then one 0/1 column per label.
pub fn parse_ec(reader: impl BufRead, name: &str) -> Result<Vec<TweetRecord>> {
    let mut lines = tsv_lines(reader, name);
    let (n, header) = lines.next().ok_or_else(|| Error::format(name, "missing header"))??;
    let cols: Vec<&str> = header.split('\t').collect();
    let expected = 2 + EC_LABELS.len();
    if cols.len() != expected {
        return Err(Error::format_at(name, n, format!("header has {} columns, expected {expected}", cols.len())));
    }
    for (col, label) in cols[2..].iter().zip(EC_LABELS) {
        if !col.trim().eq_ignore_ascii_case(label) {
            return Err(Error::format_at(name, n, format!("column {col:?} where {label:?} was expected")));
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let (n, line) = line?;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != expected {
            return Err(Error::format_at(name, n, format!("{} columns, expected {expected}", cells.len())));
        }
        let labels = cells[2..]
            .iter()
            .zip(EC_LABELS)
            .map(|(c, l)| match c.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::format_at(name, n, format!("{l} label {other:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        out.push(TweetRecord {
            id: cells[0].trim().to_string(),
            text: cells[1].to_string(),
            annotation: Annotation::Labels(labels),
        });
    }
    Ok(out)
}

pub fn load_ec(path: &Path) -> Result<Vec<TweetRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ec(std::io::BufReader::new(f), &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EiregLoad {
    pub records: Vec<TweetRecord>,
    /// Rows tagged with a different emotion.
    pub skipped: usize,
}

/// Intensity file: `ID`, `Tweet`, `Affect Dimension`, `Intensity Score`,
/// keeping rows for `emotion`.
pub fn parse_eireg(reader: impl BufRead, name: &str, emotion: Emotion) -> Result<EiregLoad> {
    let mut lines = tsv_lines(reader, name);
    let (n, header) = lines.next().ok_or_else(|| Error::format(name, "missing header"))??;
    if header.split('\t').count() != 4 {
        return Err(Error::format_at(name, n, "header must have 4 columns"));
    }
    let mut records = Vec::new();
    let mut skipped = 0;
    for line in lines {
        let (n, line) = line?;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            return Err(Error::format_at(name, n, format!("{} columns, expected 4", cells.len())));
        }
        let tag: Emotion = cells[2]
            .parse()
            .map_err(|_| Error::format_at(name, n, format!("unknown affect dimension {:?}", cells[2])))?;
        if tag != emotion {
            skipped += 1;
            continue;
        }
        let value: f64 = cells[3]
            .trim()
            .parse()
            .map_err(|_| Error::format_at(name, n, format!("intensity {:?} is not a number", cells[3])))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::format_at(name, n, format!("intensity {value} outside [0, 1]")));
        }
        records.push(TweetRecord {
            id: cells[0].trim().to_string(),
            text: cells[1].to_string(),
            annotation: Annotation::Intensity { emotion, value },
        });
    }
    if skipped > 0 {
        log::info!("{name}: skipped {skipped} rows not tagged {emotion}");
    }
    Ok(EiregLoad { records, skipped })
}

pub fn load_eireg(path: &Path, emotion: Emotion) -> Result<EiregLoad> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_eireg(std::io::BufReader::new(f), &path.display().to_string(), emotion)
}

/// `(id, text)` from the first two columns of any of the TSV formats above.
pub fn parse_texts(reader: impl BufRead, name: &str) -> Result<Vec<(String, String)>> {
    let mut lines = tsv_lines(reader, name);
    lines.next().ok_or_else(|| Error::format(name, "missing header"))??;
    let mut out = Vec::new();
    for line in lines {
        let (n, line) = line?;
        let mut cells = line.split('\t');
        match (cells.next(), cells.next()) {
            (Some(id), Some(text)) => out.push((id.trim().to_string(), text.to_string())),
            _ => return Err(Error::format_at(name, n, "expected at least an id and a tweet column")),
        }
    }
    Ok(out)
}

pub fn load_texts(path: &Path) -> Result<Vec<(String, String)>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_texts(std::io::BufReader::new(f), &path.display().to_string())
}

pub fn write_ec(w: impl Write, records: &[TweetRecord]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(w);
    write!(w, "ID\tTweet")?;
    for l in EC_LABELS {
        write!(w, "\t{l}")?;
    }
    writeln!(w)?;
    for r in records {
        let labels = r.labels().ok_or_else(|| std::io::Error::other(format!("{} has no labels", r.id)))?;
        write!(w, "{}\t{}", r.id, r.text)?;
        for l in labels {
            write!(w, "\t{l}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn write_eireg(w: impl Write, records: &[TweetRecord]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "ID\tTweet\tAffect Dimension\tIntensity Score")?;
    for r in records {
        let Annotation::Intensity { emotion, value } = r.annotation else {
            return Err(std::io::Error::other(format!("{} has no intensity", r.id)));
        };
        writeln!(w, "{}\t{}\t{emotion}\t{value}", r.id, r.text)?;
    }
    w.flush()
}

/// Seeded shuffle, then the first `dev_fraction` of rows become the dev split.
pub fn split_dev<T: Clone>(items: &[T], dev_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut Rng::seed_from_u64(seed));
    let n_dev = ((items.len() as f64) * dev_fraction).round() as usize;
    let dev = idx[..n_dev].iter().map(|&i| items[i].clone()).collect();
    let train = idx[n_dev..].iter().map(|&i| items[i].clone()).collect();
    (train, dev)
}
