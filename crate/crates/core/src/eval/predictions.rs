//! Prediction files: `id,value` for intensities, `id` plus one 0/1 cell per
//! label for multi-label output. Both carry a header row.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::EC_LABELS;

#[derive(Clone, Debug, PartialEq)]
pub enum Predictions {
    Intensity(Vec<(String, f64)>),
    Labels(Vec<(String, Vec<u8>)>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Intensity(v) => v.len(),
            Predictions::Labels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(w);
        match self {
            Predictions::Intensity(rows) => {
                writeln!(w, "id,value")?;
                for (id, v) in rows {
                    writeln!(w, "{id},{v}")?;
                }
            }
            Predictions::Labels(rows) => {
                writeln!(w, "id,{}", EC_LABELS.join(","))?;
                for (id, cells) in rows {
                    write!(w, "{id}")?;
                    for c in cells {
                        write!(w, ",{c}")?;
                    }
                    writeln!(w)?;
                }
            }
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(f).map_err(|e| Error::io(path, e))
    }

    pub fn parse(reader: impl BufRead, name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::format_at(name, 1, e.to_string()))?,
            None => return Err(Error::format(name, "empty predictions file")),
        };
        let width = header.trim_end().split(',').count() - 1;
        let labels = match width {
            1 => false,
            w if w == EC_LABELS.len() => true,
            w => return Err(Error::format_at(name, 1, format!("{w} value columns; expected 1 or {}", EC_LABELS.len()))),
        };
        let mut intensity = Vec::new();
        let mut multi = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let line = line.map_err(|e| Error::format_at(name, n, e.to_string()))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != width + 1 {
                return Err(Error::format_at(name, n, format!("{} cells, expected {}", cells.len(), width + 1)));
            }
            let id = cells[0].to_string();
            if labels {
                let row = cells[1..]
                    .iter()
                    .map(|c| match *c {
                        "0" => Ok(0),
                        "1" => Ok(1),
                        other => Err(Error::format_at(name, n, format!("label cell {other:?} is not 0 or 1"))),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                multi.push((id, row));
            } else {
                let v: f64 = cells[1]
                    .parse()
                    .map_err(|_| Error::format_at(name, n, format!("{:?} is not a number", cells[1])))?;
                if !v.is_finite() {
                    return Err(Error::format_at(name, n, "prediction is not finite"));
                }
                intensity.push((id, v));
            }
        }
        Ok(if labels { Predictions::Labels(multi) } else { Predictions::Intensity(intensity) })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(f), &path.display().to_string())
    }
}
