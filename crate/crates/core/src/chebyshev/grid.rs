use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Chebyshev nodes of the first kind, optionally snapped to the n-bit grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChebyshevGrid {
    pub m: usize,
    pub dimension: usize,
    /// cos((2k − 1)π/2M) for k = 1..M, strictly decreasing.
    pub nodes: Vec<f64>,
    pub snapped: Option<SnappedNodes>,
}

/// Nodes replaced by the nearest x = k/2^{n−1} − 1 with k ∈ [0, 2ⁿ].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnappedNodes {
    pub n: usize,
    pub thresholds: Vec<u64>,
    pub coords: Vec<f64>,
}

pub fn make_grid(m: usize, dimension: usize, snap_to_n: Option<usize>) -> Result<ChebyshevGrid> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 Chebyshev nodes, got {m}")));
    }
    if dimension == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let nodes: Vec<f64> = (1..=m).map(|k| ((2 * k - 1) as f64 * PI / (2 * m) as f64).cos()).collect();
    let snapped = snap_to_n.map(|n| {
        let half = (1u64 << (n - 1)) as f64;
        let thresholds: Vec<u64> =
            nodes.iter().map(|&x| ((x + 1.0) * half).round().clamp(0.0, 2.0 * half) as u64).collect();
        let coords = thresholds.iter().map(|&k| k as f64 / half - 1.0).collect();
        SnappedNodes { n, thresholds, coords }
    });
    Ok(ChebyshevGrid { m, dimension, nodes, snapped })
}

impl ChebyshevGrid {
    /// Coordinates used for fitting: snapped if present.
    pub fn coords(&self) -> &[f64] {
        match &self.snapped {
            Some(s) => &s.coords,
            None => &self.nodes,
        }
    }

    pub fn node_count(&self) -> usize {
        self.m.pow(self.dimension as u32)
    }

    /// Multi-index of flat node `i`, row-major (dimension 0 slowest).
    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dimension];
        let mut r = i;
        for d in (0..self.dimension).rev() {
            idx[d] = r % self.m;
            r /= self.m;
        }
        idx
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        let c = self.coords();
        idx.iter().map(|&k| c[k]).collect()
    }

    /// Thresholds of a snapped node.
    pub fn thresholds(&self, idx: &[usize]) -> Option<Vec<u64>> {
        self.snapped.as_ref().map(|s| idx.iter().map(|&k| s.thresholds[k]).collect())
    }

    /// First pair of node indices that snapped to the same coordinate.
    pub fn check_distinct(&self) -> Result<()> {
        let c = self.coords();
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                if c[i] == c[j] {
                    return Err(Error::DuplicateNodes { dim: 0, first: i, second: j, coord: c[i] });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Qpe,
    Exact,
    NoisyOracle,
    /// Continuous Ψ by classical quadrature.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub coords: Vec<f64>,
    pub value: f64,
    /// Error estimate for this sample.
    pub eps: f64,
    pub provenance: Provenance,
}

/// Sampled Ψ values keyed by node multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub grid: ChebyshevGrid,
    pub entries: BTreeMap<Vec<usize>, Sample>,
}

impl Serialize for SampleSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            index: &'a [usize],
            #[serde(flatten)]
            sample: &'a Sample,
        }
        let entries: Vec<Entry> = self.entries.iter().map(|(k, v)| Entry { index: k, sample: v }).collect();
        let mut st = s.serialize_struct("SampleSet", 2)?;
        st.serialize_field("grid", &self.grid)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

/// Sanity band on sampled values.
pub const SAMPLE_BAND: (f64, f64) = (-0.1, 1.1);

impl SampleSet {
    pub fn new(grid: ChebyshevGrid) -> Self {
        SampleSet { grid, entries: BTreeMap::new() }
    }

    /// Samples `g` at every node.
    pub fn from_fn(grid: ChebyshevGrid, provenance: Provenance, mut g: impl FnMut(&[usize], &[f64]) -> f64) -> Self {
        let mut s = SampleSet::new(grid);
        for i in 0..s.grid.node_count() {
            let idx = s.grid.multi_index(i);
            let x = s.grid.point(&idx);
            let v = g(&idx, &x);
            s.entries.insert(idx, Sample { coords: x, value: v, eps: 0.0, provenance });
        }
        s
    }

    pub fn insert(&mut self, idx: Vec<usize>, sample: Sample) -> Result<()> {
        if idx.len() != self.grid.dimension || idx.iter().any(|&k| k >= self.grid.m) {
            return Err(Error::InvalidParameter(format!("node index {idx:?} outside the grid")));
        }
        self.entries.insert(idx, sample);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.entries.len() == self.grid.node_count()
    }

    /// Values in flat node order; errors unless every node is present.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !self.is_complete() {
            return Err(Error::IncompleteSamples { got: self.entries.len(), expected: self.grid.node_count() });
        }
        Ok((0..self.grid.node_count()).map(|i| self.entries[&self.grid.multi_index(i)].value).collect())
    }

    /// Values outside the sanity band, as (index, value).
    pub fn out_of_band(&self) -> Vec<(Vec<usize>, f64)> {
        self.entries
            .iter()
            .filter(|(_, s)| s.value < SAMPLE_BAND.0 || s.value > SAMPLE_BAND.1)
            .map(|(k, s)| (k.clone(), s.value))
            .collect()
    }
}
