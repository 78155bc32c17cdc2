use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Per-tweet feature vectors from one source, all of the same width.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub source: String,
    width: usize,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl FeatureSet {
    pub fn new(source: impl Into<String>, width: usize) -> Self {
        FeatureSet {
            source: source.into(),
            width,
            ids: Vec::new(),
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let id = id.into();
        if values.len() != self.width {
            return Err(Error::dimension(format!(
                "{}: {id} has {} values, expected {}",
                self.source,
                values.len(),
                self.width
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!("{}: {id} value {k} is not finite", self.source)));
        }
        if self.index.contains_key(&id) {
            return Err(Error::contract(format!("{}: duplicate id {id}", self.source)));
        }
        self.index.insert(id.clone(), self.rows.len());
        self.ids.push(id);
        self.rows.push(values);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.rows[i].as_slice())
    }

    /// Reads `id,f0,f1,...` CSV. `name` labels error locations.
    pub fn parse_csv(reader: impl Read, source: &str, name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::format_at(name, 1, e.to_string()))?.clone();
        if header.get(0).map(str::trim) != Some("id") {
            return Err(Error::format_at(name, 1, "header must start with \"id\""));
        }
        let width = header.len() - 1;
        let mut set = FeatureSet::new(source, width);
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::format_at(name, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != width + 1 {
                return Err(Error::format_at(
                    name,
                    line,
                    format!("{} cells, header has {}", record.len(), width + 1),
                ));
            }
            let id = record[0].trim().to_string();
            if id.is_empty() {
                return Err(Error::format_at(name, line, "empty id"));
            }
            let mut values = Vec::with_capacity(width);
            for (k, cell) in record.iter().skip(1).enumerate() {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| Error::format_at(name, line, format!("f{k} is not a number: {cell:?}")))?;
                if !v.is_finite() {
                    return Err(Error::format_at(name, line, format!("f{k} is not finite: {cell:?}")));
                }
                values.push(v);
            }
            if set.index.contains_key(&id) {
                return Err(Error::format_at(name, line, format!("duplicate id {id}")));
            }
            set.push(id, values)?;
        }
        Ok(set)
    }

    pub fn load_csv(path: &Path, source: &str) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(std::io::BufReader::new(f), source, &path.display().to_string())
    }

    /// Writes CSV with shortest round-trip float formatting.
    pub fn write_csv(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(w);
        write!(w, "id")?;
        for k in 0..self.width {
            write!(w, ",f{k}")?;
        }
        writeln!(w)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            write!(w, "{id}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f).map_err(|e| Error::io(path, e))
    }
}

/// Columns `start..start + width` of a fused matrix came from `source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnGroup {
    pub source: String,
    pub start: usize,
    pub width: usize,
}

/// Row ids and column provenance of a fused matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FusionManifest {
    pub groups: Vec<ColumnGroup>,
    pub ids: Vec<String>,
}

const MANIFEST_HEADER: &str = "affect-fusion-manifest v1";

impl FusionManifest {
    pub fn width(&self) -> usize {
        self.groups.last().map_or(0, |g| g.start + g.width)
    }

    /// Rebuilds the fused rows from the named sources.
    pub fn assemble(&self, sources: &[&FeatureSet]) -> Result<Vec<Vec<f64>>> {
        let mut picked = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let s = sources
                .iter()
                .find(|s| s.source == g.source)
                .ok_or_else(|| Error::contract(format!("source {} not supplied", g.source)))?;
            if s.width() != g.width {
                return Err(Error::dimension(format!(
                    "source {} has width {}, manifest says {}",
                    g.source,
                    s.width(),
                    g.width
                )));
            }
            picked.push(*s);
        }
        self.ids
            .iter()
            .map(|id| {
                let mut row = Vec::with_capacity(self.width());
                for s in &picked {
                    let v = s.get(id).ok_or_else(|| Error::Join {
                        id: id.clone(),
                        feature_source: s.source.clone(),
                    })?;
                    row.extend_from_slice(v);
                }
                Ok(row)
            })
            .collect()
    }

    pub fn write(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "{MANIFEST_HEADER}")?;
        writeln!(w, "groups {}", self.groups.len())?;
        for g in &self.groups {
            writeln!(w, "{}\t{}\t{}", g.source, g.start, g.width)?;
        }
        writeln!(w, "rows {}", self.ids.len())?;
        for id in &self.ids {
            writeln!(w, "{id}")?;
        }
        w.flush()
    }

    pub fn parse(reader: impl BufRead, name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((n, Err(e))) => Err(Error::format_at(name, n, e.to_string())),
                None => Err(Error::format(name, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (n, head) = next("header")?;
        if head.trim() != MANIFEST_HEADER {
            return Err(Error::format_at(name, n, "not a fusion manifest"));
        }
        let count = |line: (usize, String), key: &str| -> Result<usize> {
            line.1
                .strip_prefix(key)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| Error::format_at(name, line.0, format!("expected \"{key} <count>\"")))
        };
        let n_groups = count(next("group count")?, "groups ")?;
        let mut groups = Vec::with_capacity(n_groups);
        let mut expected_start = 0;
        for _ in 0..n_groups {
            let (n, l) = next("group")?;
            let cells: Vec<&str> = l.split('\t').collect();
            let bad = || Error::format_at(name, n, "expected source<TAB>start<TAB>width");
            if cells.len() != 3 {
                return Err(bad());
            }
            let start: usize = cells[1].parse().map_err(|_| bad())?;
            let width: usize = cells[2].parse().map_err(|_| bad())?;
            if start != expected_start {
                return Err(Error::format_at(name, n, "column groups must be contiguous"));
            }
            expected_start += width;
            groups.push(ColumnGroup {
                source: cells[0].to_string(),
                start,
                width,
            });
        }
        let n_rows = count(next("row count")?, "rows ")?;
        let ids = (0..n_rows).map(|_| next("row id").map(|(_, l)| l)).collect::<Result<Vec<_>>>()?;
        Ok(FusionManifest { groups, ids })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(f).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(f), &path.display().to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fused {
    pub rows: Vec<Vec<f64>>,
    pub manifest: FusionManifest,
}

/// Concatenates sources column-wise in the given order, one row per id.
pub fn fuse(sources: &[&FeatureSet], ids: &[String]) -> Result<Fused> {
    if sources.is_empty() {
        return Err(Error::contract("no feature sources to fuse"));
    }
    let mut groups = Vec::with_capacity(sources.len());
    let mut start = 0;
    for s in sources {
        if groups.iter().any(|g: &ColumnGroup| g.source == s.source) {
            return Err(Error::contract(format!("source {} listed twice", s.source)));
        }
        groups.push(ColumnGroup {
            source: s.source.clone(),
            start,
            width: s.width(),
        });
        start += s.width();
    }
    let manifest = FusionManifest {
        groups,
        ids: ids.to_vec(),
    };
    let rows = manifest.assemble(sources)?;
    Ok(Fused { rows, manifest })
}
