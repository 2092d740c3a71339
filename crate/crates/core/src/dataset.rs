//! Row-sparse data matrices in LibSVM format and block partitions of the
//! coordinate space.

use std::io::{BufRead, Write};
use std::ops::Range;

use crate::error::{Error, Result};

/// Sample-major (CSR) sparse data matrix `A` with one response per row.
///
/// Row indices are strictly increasing, lie in `[0, d)` and no explicit
/// zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    n: usize,
    d: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<f64>,
}

impl SparseDataset {
    /// Builds a dataset from per-row `(index, value)` lists (0-based).
    ///
    /// Zero values are dropped; indices must be strictly increasing per row.
    pub fn from_rows(d: usize, rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if d > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("dimension {d} too large")));
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(j, v) in row {
                if j >= d {
                    return Err(Error::InvalidParameter(format!(
                        "row {r}: index {j} out of range for dimension {d}"
                    )));
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(Error::InvalidParameter(format!(
                        "row {r}: indices not strictly increasing at {j}"
                    )));
                }
                prev = Some(j);
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("row {r}: non-finite value")));
                }
                if v != 0.0 {
                    indices.push(j as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n: rows.len(),
            d,
            indptr,
            indices,
            values,
            labels,
        })
    }

    /// Dense row-major constructor, mostly for tests and small synthetic problems.
    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != d {
                    return Err(Error::Dimension {
                        expected: d,
                        got: r.len(),
                    });
                }
                Ok(r.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(d, sparse, labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Nonzero indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    /// Nonzeros of row `i` whose index falls in `cols`.
    #[inline]
    pub fn row_segment(&self, i: usize, cols: Range<usize>) -> (&[u32], &[f64]) {
        let (idx, val) = self.row(i);
        let lo = idx.partition_point(|&j| (j as usize) < cols.start);
        let hi = lo + idx[lo..].partition_point(|&j| (j as usize) < cols.end);
        (&idx[lo..hi], &val[lo..hi])
    }

    /// `a_iᵀx` for a dense `x` of length at least `d`.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, &v)| v * x[j as usize]).sum()
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v * v).sum()
    }

    /// All margins `{a_iᵀx}_i`.
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row_dot(i, x)).collect()
    }

    /// `nnz(A) / (n d)`.
    pub fn sparsity(&self) -> f64 {
        if self.n == 0 || self.d == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.n as f64 * self.d as f64)
    }

    /// Σ over the nonzeros of row `i` inside block `l` of `value · v[index - start]`,
    /// where `v` holds the dense values of block `l`.
    pub fn block_inner_product(&self, i: usize, partition: &BlockPartition, l: usize, v: &[f64]) -> f64 {
        let range = partition.range(l);
        let start = range.start;
        let (idx, val) = self.row_segment(i, range);
        idx.iter().zip(val).map(|(&j, &a)| a * v[j as usize - start]).sum()
    }

    /// Parses LibSVM text: one `label idx:val idx:val …` sample per nonempty
    /// line with 1-based ascending indices.
    pub fn parse_libsvm<R: BufRead>(source: R, expected_dim: Option<usize>) -> Result<Self> {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut max_index = 0usize;

        for (lineno, line) in source.lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            let mut tokens = line.split_ascii_whitespace();
            let Some(label) = tokens.next() else {
                continue;
            };
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let label: f64 = label
                .parse()
                .map_err(|_| err(format!("bad label {label:?}")))?;
            let mut prev = 0usize;
            for tok in tokens {
                let (i, v) = tok
                    .split_once(':')
                    .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
                let i: usize = i.parse().map_err(|_| err(format!("bad index {i:?}")))?;
                let v: f64 = v.parse().map_err(|_| err(format!("bad value {v:?}")))?;
                if i < 1 {
                    return Err(err("indices are 1-based".into()));
                }
                if i <= prev {
                    return Err(err(format!("index {i} not ascending")));
                }
                if i > u32::MAX as usize {
                    return Err(err(format!("index {i} too large")));
                }
                if !v.is_finite() {
                    return Err(err(format!("non-finite value {v}")));
                }
                prev = i;
                max_index = max_index.max(i);
                if v != 0.0 {
                    indices.push((i - 1) as u32);
                    values.push(v);
                }
            }
            labels.push(label);
            indptr.push(indices.len());
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = max_index.max(expected_dim.unwrap_or(0));
        Ok(Self {
            n: labels.len(),
            d,
            indptr,
            indices,
            values,
            labels,
        })
    }

    pub fn read_libsvm_file(path: impl AsRef<std::path::Path>, expected_dim: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse_libsvm(std::io::BufReader::new(file), expected_dim)
    }

    /// Writes the dataset in LibSVM format. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_libsvm<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n {
            write!(out, "{}", self.labels[i])?;
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                write!(out, " {}:{}", j + 1, v)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Equal-size contiguous split of `[0, padded_dim)` into `B` blocks.
///
/// When `B` does not divide `d`, the space is padded with phantom coordinates
/// `d..padded_dim` that carry no data and stay at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    dim: usize,
    blocks: usize,
    block_size: usize,
}

impl BlockPartition {
    pub fn new(dim: usize, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::Partition("block count must be at least 1".into()));
        }
        let block_size = dim.div_ceil(blocks);
        if block_size == 0 {
            return Err(Error::Partition(format!(
                "{blocks} blocks exceed padded dimension {dim}"
            )));
        }
        Ok(Self {
            dim,
            blocks,
            block_size,
        })
    }

    /// Number of real (non-phantom) coordinates.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn padded_dim(&self) -> usize {
        self.blocks * self.block_size
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    #[inline]
    pub fn block_of(&self, coord: usize) -> usize {
        coord / self.block_size
    }

    #[inline]
    pub fn range(&self, l: usize) -> Range<usize> {
        l * self.block_size..(l + 1) * self.block_size
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.blocks).map(|l| self.range(l))
    }

    pub fn is_phantom(&self, coord: usize) -> bool {
        coord >= self.dim
    }
}
