//! Binary model container.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic "AFMB" | version u32
//! kind u8 | embedding_dim u32 | lstm_units u32 | conv_filters u32
//! kernel_size u32 | max_seq_len u32 | lstm_dropout f64 | post_pool_dropout f64
//! trainable_embeddings u8
//! labels: count u32, then (len u32, utf-8) each
//! vocab hash: len u32, utf-8
//! params: count u32, then per param
//!     name (len u32, utf-8) | rank u32 | dims u32 × rank | data f64 × numel
//! ```
//!
//! Parameters appear in [`ModelBundle::param_names`] order.

use std::io::{Read, Write};
use std::path::Path;

use super::{ModelBundle, ModelConfig, ModelKind};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::layers::{ConvParams, Dense, EmbeddingTable, LstmParams};

pub const MODEL_MAGIC: &[u8; 4] = b"AFMB";
pub const MODEL_VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.0.write_all(b)
    }
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.bytes(&[v])
    }
    fn u32(&mut self, v: usize) -> std::io::Result<()> {
        let v = u32::try_from(v).map_err(|_| std::io::Error::other("value exceeds u32"))?;
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn str(&mut self, s: &str) -> std::io::Result<()> {
        self.u32(s.len())?;
        self.bytes(s.as_bytes())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> std::io::Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u8(&mut self) -> std::io::Result<u8> {
        Ok(self.array::<1>()?[0])
    }
    fn u32(&mut self) -> std::io::Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }
    fn f64(&mut self) -> std::io::Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn str(&mut self) -> std::io::Result<String> {
        let n = self.u32()?;
        let mut b = vec![0u8; n];
        self.0.read_exact(&mut b)?;
        String::from_utf8(b).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::format("model file", e.to_string())
}

impl ModelBundle {
    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let mut w = Writer(w);
        let c = &self.config;
        (|| -> std::io::Result<()> {
            w.bytes(MODEL_MAGIC)?;
            w.bytes(&MODEL_VERSION.to_le_bytes())?;
            w.u8(match c.kind {
                ModelKind::Eccu => 0,
                ModelKind::Eipu => 1,
            })?;
            for v in [c.embedding_dim, c.lstm_units, c.conv_filters, c.kernel_size, c.max_seq_len] {
                w.u32(v)?;
            }
            w.f64(c.lstm_dropout)?;
            w.f64(c.post_pool_dropout)?;
            w.u8(c.trainable_embeddings as u8)?;
            w.u32(self.labels.len())?;
            for l in &self.labels {
                w.str(l)?;
            }
            w.str(&self.vocab_hash)?;
            let names = ModelBundle::param_names();
            w.u32(names.len())?;
            for (name, t) in names.iter().zip(self.params()) {
                w.str(name)?;
                w.u32(t.shape().len())?;
                for &d in t.shape() {
                    w.u32(d)?;
                }
                for &x in t.data() {
                    w.f64(x)?;
                }
            }
            w.0.flush()
        })()
        .map_err(io_err)
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = Reader(r);
        let magic: [u8; 4] = r.array().map_err(io_err)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::format("model file", "bad magic"));
        }
        let version = u32::from_le_bytes(r.array().map_err(io_err)?);
        if version != MODEL_VERSION {
            return Err(Error::format("model file", format!("unsupported version {version}")));
        }
        let kind = match r.u8().map_err(io_err)? {
            0 => ModelKind::Eccu,
            1 => ModelKind::Eipu,
            k => return Err(Error::format("model file", format!("unknown model kind {k}"))),
        };
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = r.u32().map_err(io_err)?;
        }
        let lstm_dropout = r.f64().map_err(io_err)?;
        let post_pool_dropout = r.f64().map_err(io_err)?;
        let trainable_embeddings = r.u8().map_err(io_err)? != 0;
        let config = ModelConfig {
            kind,
            embedding_dim: dims[0],
            lstm_units: dims[1],
            conv_filters: dims[2],
            kernel_size: dims[3],
            max_seq_len: dims[4],
            lstm_dropout,
            post_pool_dropout,
            trainable_embeddings,
        };
        let n_labels = r.u32().map_err(io_err)?;
        let labels = (0..n_labels).map(|_| r.str()).collect::<std::io::Result<Vec<_>>>().map_err(io_err)?;
        let vocab_hash = r.str().map_err(io_err)?;
        let names = ModelBundle::param_names();
        let count = r.u32().map_err(io_err)?;
        if count != names.len() {
            return Err(Error::format("model file", format!("expected {} params, found {count}", names.len())));
        }
        let mut tensors = Vec::with_capacity(count);
        for expected in &names {
            let name = r.str().map_err(io_err)?;
            if name != *expected {
                return Err(Error::format("model file", format!("expected param {expected}, found {name}")));
            }
            let rank = r.u32().map_err(io_err)?;
            let shape = (0..rank).map(|_| r.u32()).collect::<std::io::Result<Vec<_>>>().map_err(io_err)?;
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| r.f64()).collect::<std::io::Result<Vec<_>>>().map_err(io_err)?;
            tensors.push(Tensor::new(shape, data)?);
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().unwrap();
        let embedding = EmbeddingTable::new(next(), trainable_embeddings)?;
        let lstm = LstmParams {
            w_f: next(),
            w_i: next(),
            w_o: next(),
            w_c: next(),
            u_f: next(),
            u_i: next(),
            u_o: next(),
            u_c: next(),
            b_f: next(),
            b_i: next(),
            b_o: next(),
            b_c: next(),
        };
        let conv = ConvParams {
            weights: next(),
            bias: next(),
        };
        let dense = Dense {
            weights: next(),
            bias: next(),
        };
        let m = ModelBundle {
            config,
            labels,
            vocab_hash,
            embedding,
            lstm,
            conv,
            dense,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}
