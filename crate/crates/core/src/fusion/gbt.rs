//! Squared-error gradient boosting with exact greedy regression trees.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::Emotion;

#[derive(Clone, Debug, PartialEq)]
pub struct GbtParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_samples_leaf: usize,
}

impl GbtParams {
    /// Anger, joy and sadness: depth 2, 400 rounds.
    pub fn c1() -> Self {
        GbtParams {
            max_depth: 2,
            learning_rate: 0.01,
            n_estimators: 400,
            lambda: 1.0,
            min_samples_leaf: 2,
        }
    }

    /// Fear: depth 5, 300 rounds.
    pub fn c2() -> Self {
        GbtParams {
            max_depth: 5,
            n_estimators: 300,
            ..Self::c1()
        }
    }

    pub fn for_emotion(e: Emotion) -> Self {
        match e {
            Emotion::Fear => Self::c2(),
            _ => Self::c1(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::contract("max_depth and min_samples_leaf must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::contract(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::contract(format!("lambda {} must be non-negative", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] < threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    /// Root first.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(w) => return w,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] < threshold { left } else { right },
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn validate(&self, width: usize) -> Result<()> {
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Leaf(w) if !w.is_finite() => return Err(Error::contract("non-finite leaf weight")),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= width || !threshold.is_finite() || left <= i || right <= i || left >= n || right >= n {
                        return Err(Error::contract(format!("malformed split node {i}")));
                    }
                }
                Node::Leaf(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbtModel {
    pub params: GbtParams,
    pub width: usize,
    pub base_score: f64,
    pub trees: Vec<Tree>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
    /// Rows going left, in the node's order for `feature`.
    n_left: usize,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    residual: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<Node>,
    go_left: Vec<bool>,
}

fn score(g: f64, n: usize, lambda: f64) -> f64 {
    g * g / (n as f64 + lambda)
}

impl Builder<'_> {
    fn best_split(&self, sorted: &[Vec<u32>]) -> Option<Best> {
        let lambda = self.params.lambda;
        let min_leaf = self.params.min_samples_leaf;
        let order = &sorted[0];
        let n = order.len();
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = order.iter().map(|&i| self.residual[i as usize]).sum();
        let parent = score(total, n, lambda);
        let mut best: Option<Best> = None;
        for (f, order) in sorted.iter().enumerate() {
            let mut gl = 0.0;
            for k in 1..n {
                let prev = order[k - 1] as usize;
                gl += self.residual[prev];
                if k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let (a, b) = (self.x[prev][f], self.x[order[k] as usize][f]);
                if a >= b {
                    continue;
                }
                let gain = score(gl, k, lambda) + score(total - gl, n - k, lambda) - parent;
                if gain > best.as_ref().map_or(GAIN_FLOOR, |b| b.gain) {
                    let mid = a + (b - a) / 2.0;
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold: if mid > a { mid } else { b },
                        n_left: k,
                    });
                }
            }
        }
        best
    }

    fn leaf(&self, rows: &[u32]) -> Node {
        let g: f64 = rows.iter().map(|&i| self.residual[i as usize]).sum();
        Node::Leaf(g / (rows.len() as f64 + self.params.lambda))
    }

    /// Grows the subtree for rows given per feature in sorted order and
    /// returns its node index.
    fn grow(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let split = if depth < self.params.max_depth { self.best_split(&sorted) } else { None };
        let Some(best) = split else {
            self.nodes[id] = self.leaf(&sorted[0]);
            return id;
        };
        for &i in &sorted[best.feature][..best.n_left] {
            self.go_left[i as usize] = true;
        }
        let (mut left, mut right) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for order in &sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = order.iter().partition(|&&i| self.go_left[i as usize]);
            left.push(l);
            right.push(r);
        }
        for &i in &sorted[best.feature][..best.n_left] {
            self.go_left[i as usize] = false;
        }
        drop(sorted);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }
}

/// Gains at or below this are treated as float noise.
const GAIN_FLOOR: f64 = 1e-15;

impl GbtModel {
    /// Boosting stops early once a round's root cannot be split.
    pub fn train(x: &[Vec<f64>], y: &[f64], params: &GbtParams) -> Result<Self> {
        params.validate()?;
        if x.len() != y.len() {
            return Err(Error::dimension(format!("{} rows for {} targets", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(Error::contract("need at least 2 training rows"));
        }
        let width = x[0].len();
        for (i, row) in x.iter().enumerate() {
            if row.len() != width {
                return Err(Error::dimension(format!("row {i} has width {}, expected {width}", row.len())));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!("row {i} has non-finite features")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("non-finite target"));
        }
        let n = y.len();
        let base_score = y.iter().sum::<f64>() / n as f64;
        let constant_x = (0..width).all(|f| x.iter().all(|r| r[f] == x[0][f]));
        if constant_x && y.iter().any(|&v| v != y[0]) {
            log::warn!("all feature columns are constant; the model predicts the base score");
        }

        let sorted: Vec<Vec<u32>> = (0..width)
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        let mut pred = vec![base_score; n];
        let mut residual = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.n_estimators);
        for _ in 0..params.n_estimators {
            for i in 0..n {
                residual[i] = y[i] - pred[i];
            }
            let mut b = Builder {
                x,
                residual: &residual,
                params,
                nodes: Vec::new(),
                go_left: vec![false; n],
            };
            b.grow(sorted.clone(), 0);
            if b.nodes.len() == 1 {
                break;
            }
            let tree = Tree { nodes: b.nodes };
            for i in 0..n {
                pred[i] += params.learning_rate * tree.predict(&x[i]);
            }
            trees.push(tree);
        }
        Ok(GbtModel {
            params: params.clone(),
            width,
            base_score,
            trees,
        })
    }

    /// Unclamped score using only the first `rounds` trees.
    pub fn raw_score(&self, x: &[f64], rounds: usize) -> Result<f64> {
        if x.len() != self.width {
            return Err(Error::contract(format!("input width {}, model expects {}", x.len(), self.width)));
        }
        let eta = self.params.learning_rate;
        Ok(self.trees.iter().take(rounds).fold(self.base_score, |acc, t| acc + eta * t.predict(x)))
    }

    pub fn predict_rounds(&self, x: &[f64], rounds: usize) -> Result<f64> {
        Ok(self.raw_score(x, rounds)?.clamp(0.0, 1.0))
    }

    /// Intensity prediction, clamped to `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.predict_rounds(x, self.trees.len())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.base_score.is_finite() {
            return Err(Error::contract("non-finite base score"));
        }
        for t in &self.trees {
            t.validate(self.width)?;
            if t.depth() > self.params.max_depth {
                return Err(Error::contract("tree deeper than max_depth"));
            }
        }
        Ok(())
    }

    pub fn write(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(w);
        let p = &self.params;
        writeln!(w, "{GBT_HEADER}")?;
        writeln!(w, "width {}", self.width)?;
        writeln!(w, "max_depth {}", p.max_depth)?;
        writeln!(w, "learning_rate {}", p.learning_rate)?;
        writeln!(w, "n_estimators {}", p.n_estimators)?;
        writeln!(w, "lambda {}", p.lambda)?;
        writeln!(w, "min_samples_leaf {}", p.min_samples_leaf)?;
        writeln!(w, "base_score {}", self.base_score)?;
        writeln!(w, "trees {}", self.trees.len())?;
        for (k, t) in self.trees.iter().enumerate() {
            writeln!(w)?;
            writeln!(w, "tree {k} {}", t.nodes.len())?;
            for node in &t.nodes {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => writeln!(w, "split {feature} {threshold} {left} {right}")?,
                    Node::Leaf(v) => writeln!(w, "leaf {v}")?,
                }
            }
        }
        w.flush()
    }

    pub fn parse(reader: impl BufRead, name: &str) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let mut next = || -> Result<(usize, Vec<String>)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l.split_whitespace().map(str::to_string).collect())),
                Some((n, Err(e))) => Err(Error::format_at(name, n, e.to_string())),
                None => Err(Error::format(name, "unexpected end of file")),
            }
        };
        let (n, head) = next()?;
        if head.join(" ") != GBT_HEADER {
            return Err(Error::format_at(name, n, "not a boosted-tree model"));
        }
        fn num<T: std::str::FromStr>(name: &str, line: usize, s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::format_at(name, line, format!("bad number {s:?}")))
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, cells) = next()?;
            if cells.len() != 2 || cells[0] != key {
                return Err(Error::format_at(name, n, format!("expected \"{key} <value>\"")));
            }
            Ok((n, cells[1].clone()))
        };
        let (l, v) = field("width")?;
        let width: usize = num(name, l, &v)?;
        let (l, v) = field("max_depth")?;
        let max_depth = num(name, l, &v)?;
        let (l, v) = field("learning_rate")?;
        let learning_rate = num(name, l, &v)?;
        let (l, v) = field("n_estimators")?;
        let n_estimators = num(name, l, &v)?;
        let (l, v) = field("lambda")?;
        let lambda = num(name, l, &v)?;
        let (l, v) = field("min_samples_leaf")?;
        let min_samples_leaf = num(name, l, &v)?;
        let (l, v) = field("base_score")?;
        let base_score = num(name, l, &v)?;
        let (l, v) = field("trees")?;
        let n_trees: usize = num(name, l, &v)?;
        let mut trees = Vec::with_capacity(n_trees);
        for k in 0..n_trees {
            let (l, cells) = next()?;
            if cells.len() != 3 || cells[0] != "tree" || cells[1] != k.to_string() {
                return Err(Error::format_at(name, l, format!("expected \"tree {k} <nodes>\"")));
            }
            let n_nodes: usize = num(name, l, &cells[2])?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let (l, c) = next()?;
                let node = match (c.first().map(String::as_str), c.len()) {
                    (Some("leaf"), 2) => Node::Leaf(num(name, l, &c[1])?),
                    (Some("split"), 5) => Node::Split {
                        feature: num(name, l, &c[1])?,
                        threshold: num(name, l, &c[2])?,
                        left: num(name, l, &c[3])?,
                        right: num(name, l, &c[4])?,
                    },
                    _ => return Err(Error::format_at(name, l, "expected a leaf or split node")),
                };
                nodes.push(node);
            }
            trees.push(Tree { nodes });
        }
        let m = GbtModel {
            params: GbtParams {
                max_depth,
                learning_rate,
                n_estimators,
                lambda,
                min_samples_leaf,
            },
            width,
            base_score,
            trees,
        };
        m.validate().map_err(|e| Error::format(name, e.to_string()))?;
        Ok(m)
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

const GBT_HEADER: &str = "affect-gbt v1";
