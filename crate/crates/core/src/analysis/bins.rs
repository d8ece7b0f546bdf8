use serde::{Deserialize, Serialize};

/// Which end of each interior bin is closed. The outermost edges are always
/// included, so the bins cover `[edges[0], edges[n]]` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closed {
    /// `[a, b)`, last bin `[a, b]`.
    Left,
    /// `(a, b]`, first bin `[a, b]`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    edges: Vec<f64>,
    closed: Closed,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("bin edges must be at least two strictly increasing, non-NaN values: {0:?}")]
pub struct BadEdges(pub Vec<f64>);

pub const JACCARD_EDGES: [f64; 6] = [0.0, 0.05, 0.1, 0.2, 0.4, 1.0];
pub const DAY_DIFF_EDGES: [f64; 6] = [0.0, 7.0, 30.0, 90.0, 365.0, f64::INFINITY];

impl Bins {
    pub fn new(edges: Vec<f64>, closed: Closed) -> Result<Self, BadEdges> {
        if edges.len() < 2 || edges.iter().any(|e| e.is_nan()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BadEdges(edges));
        }
        Ok(Self { edges, closed })
    }

    pub fn jaccard() -> Self {
        Self::new(JACCARD_EDGES.to_vec(), Closed::Left).expect("valid constant")
    }

    pub fn day_diff() -> Self {
        Self::new(DAY_DIFF_EDGES.to_vec(), Closed::Right).expect("valid constant")
    }

    /// Five bins at the 20/40/60/80% quantiles (linear interpolation) of
    /// `values`. Repeated quantiles are merged, so fewer bins may result;
    /// if every value is equal a single degenerate bin `[v, v]` is used.
    pub fn quintiles(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        let mut edges: Vec<f64> = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0].iter().map(|&p| q(p)).collect();
        edges.dedup();
        if edges.len() == 1 {
            return Some(Self {
                edges: vec![edges[0], edges[0]],
                closed: Closed::Left,
            });
        }
        Some(Self {
            edges,
            closed: Closed::Left,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn closed(&self) -> Closed {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bin index of `v`, or `None` outside the covered range.
    pub fn assign(&self, v: f64) -> Option<usize> {
        let (lo, hi) = (self.edges[0], *self.edges.last().expect("two edges"));
        if v.is_nan() || v < lo || v > hi {
            return None;
        }
        let n = self.len();
        let idx = match self.closed {
            // count of interior edges <= v
            Closed::Left => self.edges[1..n].partition_point(|&e| e <= v),
            // count of interior edges < v
            Closed::Right => self.edges[1..n].partition_point(|&e| e < v),
        };
        Some(idx)
    }

    pub fn label(&self, bin: usize) -> String {
        let (a, b) = (self.edges[bin], self.edges[bin + 1]);
        let last = bin + 1 == self.len();
        let (open, close) = match self.closed {
            Closed::Left => ("[", if last { "]" } else { ")" }),
            Closed::Right => (if bin == 0 { "[" } else { "(" }, "]"),
        };
        let close = if b.is_infinite() { ")" } else { close };
        format!("{open}{},{}{close}", fmt_edge(a), fmt_edge(b))
    }
}

fn fmt_edge(e: f64) -> String {
    if e.is_infinite() {
        "inf".into()
    } else if e.fract() == 0.0 && e.abs() < 1e15 {
        format!("{e:.0}")
    } else {
        let s = format!("{e:.4}");
        s.trim_end_matches('0').to_string()
    }
}
