//! Bag-of-words comparison floors: TF-IDF or averaged embeddings fed to
//! ridge regression.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::layers::EmbeddingTable;
use crate::preprocess::Vocabulary;

pub const RIDGE_LAMBDA: f64 = 1.0;

/// Ridge regression with an unpenalized intercept.
#[derive(Clone, Debug, PartialEq)]
pub struct Ridge {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Ridge {
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::dimension(format!("{} rows for {} targets", x.len(), y.len())));
        }
        let (n, d) = (x.len(), x[0].len());
        if d == 0 {
            return Err(Error::contract("no features"));
        }
        let mut xm = DMatrix::from_fn(n, d, |i, j| x[i][j]);
        let col_mean: Vec<f64> = (0..d).map(|j| xm.column(j).mean()).collect();
        for j in 0..d {
            xm.column_mut(j).add_scalar_mut(-col_mean[j]);
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        // Whichever of the primal or dual system is smaller.
        let w = if d <= n {
            let a = xm.transpose() * &xm + DMatrix::identity(d, d) * lambda;
            let b = xm.transpose() * yc;
            solve_spd(a, b)?
        } else {
            let a = &xm * xm.transpose() + DMatrix::identity(n, n) * lambda;
            xm.transpose() * solve_spd(a, yc)?
        };
        let intercept = y_mean - w.iter().zip(&col_mean).map(|(a, b)| a * b).sum::<f64>();
        Ok(Ridge {
            weights: w.iter().copied().collect(),
            intercept,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::contract("ridge system is not positive definite; lambda must be > 0"))?;
    Ok(chol.solve(&b))
}

/// Unigram TF-IDF with smoothed idf and L2-normalized rows.
#[derive(Clone, Debug, PartialEq)]
pub struct TfIdf {
    index: HashMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdf {
    pub fn fit(docs: &[Vec<String>]) -> Result<Self> {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for d in docs {
            let mut seen: Vec<&str> = d.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::contract("empty vocabulary"));
        }
        let n = docs.len() as f64;
        let mut index = HashMap::with_capacity(df.len());
        let mut idf = Vec::with_capacity(df.len());
        for (k, (t, c)) in df.into_iter().enumerate() {
            index.insert(t.to_string(), k);
            idf.push(((1.0 + n) / (1.0 + c as f64)).ln() + 1.0);
        }
        Ok(TfIdf { index, idf })
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// Tokens unseen at fit time contribute nothing.
    pub fn transform(&self, doc: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; self.idf.len()];
        for t in doc {
            if let Some(&k) = self.index.get(t) {
                v[k] += 1.0;
            }
        }
        for (x, w) in v.iter_mut().zip(&self.idf) {
            *x *= w;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// Mean embedding of the tweet's in-vocabulary tokens; zero if none.
pub fn nbow(doc: &[String], vocab: &Vocabulary, table: &EmbeddingTable) -> Vec<f64> {
    let mut v = vec![0.0; table.dim()];
    let mut n = 0;
    for t in doc {
        if let Some(id) = vocab.get(t) {
            for (a, b) in v.iter_mut().zip(table.row(id as usize)) {
                *a += b;
            }
            n += 1;
        }
    }
    if n > 0 {
        v.iter_mut().for_each(|x| *x /= n as f64);
    }
    v
}

#[derive(Clone, Copy, Debug)]
pub enum Weighting<'a> {
    TfIdf,
    NBoW {
        vocab: &'a Vocabulary,
        table: &'a EmbeddingTable,
    },
}

/// Fits on `train` (token list, intensity) and predicts `test`, clamped to
/// `[0, 1]`.
pub fn bow_baseline(train: &[(Vec<String>, f64)], test: &[Vec<String>], weighting: Weighting<'_>) -> Result<Vec<f64>> {
    if train.is_empty() {
        return Err(Error::contract("no training tweets"));
    }
    let docs: Vec<Vec<String>> = train.iter().map(|(d, _)| d.clone()).collect();
    let y: Vec<f64> = train.iter().map(|(_, v)| *v).collect();
    let featurize: Box<dyn Fn(&[String]) -> Vec<f64>> = match weighting {
        Weighting::TfIdf => {
            let tfidf = TfIdf::fit(&docs)?;
            Box::new(move |d| tfidf.transform(d))
        }
        Weighting::NBoW { vocab, table } => {
            if vocab.is_empty() || table.dim() == 0 {
                return Err(Error::contract("empty vocabulary"));
            }
            Box::new(move |d| nbow(d, vocab, table))
        }
    };
    let x: Vec<Vec<f64>> = docs.iter().map(|d| featurize(d)).collect();
    let model = Ridge::fit(&x, &y, RIDGE_LAMBDA)?;
    Ok(test.iter().map(|d| model.predict(&featurize(d)).clamp(0.0, 1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn ridge_recovers_line() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| 3.0 + 2.0 * i as f64).collect();
        let m = Ridge::fit(&x, &y, 1e-9).unwrap();
        assert!((m.weights[0] - 2.0).abs() < 1e-6);
        assert!((m.intercept - 3.0).abs() < 1e-6);
    }

    #[test]
    fn dual_solution_satisfies_normal_equations() {
        let x: Vec<Vec<f64>> = (0..4).map(|i| (0..6).map(|j| ((i * 7 + j) as f64).sin()).collect()).collect();
        let y = [0.1, 0.4, 0.3, 0.9];
        let dual = Ridge::fit(&x, &y, 1.0).unwrap();
        let n = x.len();
        let mean: Vec<f64> = (0..6).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let ym = y.iter().sum::<f64>() / n as f64;
        for j in 0..6 {
            let mut lhs = dual.weights[j];
            for (r, t) in x.iter().zip(&y) {
                let pred: f64 = dual.weights.iter().zip(r).zip(&mean).map(|((w, a), m)| w * (a - m)).sum();
                lhs -= (r[j] - mean[j]) * ((t - ym) - pred);
            }
            assert!(lhs.abs() < 1e-10, "{j}: {lhs}");
        }
    }

    #[test]
    fn tfidf_unseen_token_is_ignored() {
        let t = TfIdf::fit(&[toks("a b"), toks("b c")]).unwrap();
        assert_eq!(t.transform(&toks("a b")), t.transform(&toks("a b zzz")));
        assert_eq!(t.transform(&toks("zzz")), vec![0.0; 3]);
        assert!(TfIdf::fit(&[vec![]]).is_err());
    }

    #[test]
    fn nbow_single_token() {
        let vocab = Vocabulary::build([toks("hi there")].iter(), 1);
        let dim = 3;
        let mut m = Tensor::zeros(&[vocab.len(), dim]);
        for id in 1..vocab.len() {
            for k in 0..dim {
                m.data_mut()[id * dim + k] = (id * 10 + k) as f64;
            }
        }
        let table = EmbeddingTable::new(m, false).unwrap();
        let id = vocab.get("there").unwrap() as usize;
        assert_eq!(nbow(&toks("there"), &vocab, &table), table.row(id));
    }

    #[test]
    fn one_word_task() {
        let mut train = Vec::new();
        let mut test = Vec::new();
        let mut gold = Vec::new();
        for i in 0..80 {
            let hot = i % 3 == 0;
            let filler = ["the", "cat", "sat", "on", "mat", "today"][i % 6];
            let doc = if hot { format!("{filler} furious day") } else { format!("{filler} nice day") };
            if i < 60 {
                train.push((toks(&doc), if hot { 0.9 } else { 0.2 }));
            } else {
                test.push(toks(&doc));
                gold.push(if hot { 0.9 } else { 0.2 });
            }
        }
        let pred = bow_baseline(&train, &test, Weighting::TfIdf).unwrap();
        assert!(super::super::pearson(&pred, &gold).unwrap() > 0.95);
    }
}
