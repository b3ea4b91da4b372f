//! Dense row-major matrices and the kernels every attention operator is built
//! from.
//!
//! Each kernel takes an [`OpCounter`] and records the scalar arithmetic it
//! performs and the bytes it touches at the counter's accounting precision.
//! The counts are exact and deterministic, so they can stand in for
//! wall-clock measurements when checking how an operator scales.

mod dft;
mod kernels;

pub use dft::{dft, DftMethod};
pub use kernels::{hadamard, hadamard_complex, matmul, scale, softmax_rows, transpose};

use num_complex::Complex32;

use crate::error::{Error, Result};

/// Default accounting element size: 16-bit storage.
pub const DEFAULT_PRECISION_BYTES: u64 = 2;

/// Scalar operation and memory-traffic tally for one counting scope.
///
/// `bytes_touched` is `(elements read + elements written) * precision_bytes`;
/// a complex element counts as two elements. Counts only ever grow until
/// [`OpCounter::reset`] or [`OpCounter::take`] closes the scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCounter {
    flops: u64,
    bytes_touched: u64,
    precision_bytes: u64,
}

impl Default for OpCounter {
    fn default() -> Self {
        Self::new(DEFAULT_PRECISION_BYTES)
    }
}

impl OpCounter {
    pub fn new(precision_bytes: u64) -> Self {
        Self {
            flops: 0,
            bytes_touched: 0,
            precision_bytes,
        }
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn bytes_touched(&self) -> u64 {
        self.bytes_touched
    }

    pub fn precision_bytes(&self) -> u64 {
        self.precision_bytes
    }

    pub fn add_flops(&mut self, flops: u64) {
        self.flops += flops;
    }

    /// Records a pass that reads `read` and writes `written` elements.
    pub fn add_traffic(&mut self, read: u64, written: u64) {
        self.bytes_touched += (read + written) * self.precision_bytes;
    }

    pub fn reset(&mut self) {
        self.flops = 0;
        self.bytes_touched = 0;
    }

    /// Returns the current tally and starts a fresh scope.
    pub fn take(&mut self) -> OpCounter {
        let snapshot = *self;
        self.reset();
        snapshot
    }
}

fn alloc<T: Clone>(len: usize, fill: T) -> Result<Vec<T>> {
    let mut data = Vec::new();
    data.try_reserve_exact(len).map_err(|_| Error::Allocation {
        bytes: len.saturating_mul(std::mem::size_of::<T>()),
    })?;
    data.resize(len, fill);
    Ok(data)
}

/// Dense real matrix, row-major, 32-bit working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(
                "Matrix::new",
                format!("{rows}x{cols} has a zero dimension"),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f32) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(
                "Matrix::zeros",
                format!("{rows}x{cols} has a zero dimension"),
            ));
        }
        Ok(Self {
            rows,
            cols,
            data: alloc(rows * cols, value)?,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Result<Self> {
        let mut m = Self::zeros(rows, cols)?;
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("Matrix::from_rows", "ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f32) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f32>> {
        self.data.chunks(self.cols).map(<[f32]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(self, op: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite { op })
        }
    }

    /// Largest absolute element-wise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max)
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f32::max)
    }
}

/// Dense complex matrix, row-major. Used for spectra along the row axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex32>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex32>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::shape(
                "ComplexMatrix::new",
                format!("{} values for a {rows}x{cols} matrix", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(
                "ComplexMatrix::zeros",
                format!("{rows}x{cols} has a zero dimension"),
            ));
        }
        Ok(Self {
            rows,
            cols,
            data: alloc(rows * cols, Complex32::new(0.0, 0.0))?,
        })
    }

    pub fn from_real(m: &Matrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&re| Complex32::new(re, 0.0)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex32 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex32) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[Complex32] {
        &self.data
    }

    /// Complex conjugate. Sign flips are not counted as arithmetic.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Complex32::conj).collect(),
        }
    }

    pub fn re(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c.re).collect(),
        }
    }

    pub fn im(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c.im).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn ensure_finite(self, op: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite { op })
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex32] {
        &mut self.data
    }
}

/// Boolean mask; `true` marks a position excluded from a softmax row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    masked: Vec<bool>,
}

impl Mask {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut masked = alloc(rows * cols, false)?;
        for i in 0..rows {
            for j in 0..cols {
                masked[i * cols + j] = f(i, j);
            }
        }
        Ok(Self { rows, cols, masked })
    }

    /// Excludes every `j > i`.
    pub fn causal(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| j > i)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.masked[i * self.cols + j]
    }

    pub(crate) fn row(&self, i: usize) -> &[bool] {
        &self.masked[i * self.cols..(i + 1) * self.cols]
    }
}
