use num_complex::Complex32;

use super::{ComplexMatrix, Mask, Matrix, OpCounter};
use crate::error::{Error, Result};

/// `a * b`; counts `2 * m * k * n` flops.
pub fn matmul(a: &Matrix, b: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} * {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Matrix::zeros(m, n)?;
    for i in 0..m {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (p, &a_ip) in a_row.iter().enumerate() {
            for (o, &b_pj) in out_row.iter_mut().zip(b.row(p)) {
                *o += a_ip * b_pj;
            }
        }
    }
    counter.add_flops(2 * (m * k * n) as u64);
    counter.add_traffic((m * k + k * n) as u64, (m * n) as u64);
    out.ensure_finite("matmul")
}

/// Data movement only; no flops.
pub fn transpose(a: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    let mut out = Matrix::zeros(a.cols(), a.rows())?;
    for i in 0..a.rows() {
        for (j, &v) in a.row(i).iter().enumerate() {
            out.set(j, i, v);
        }
    }
    let len = a.len() as u64;
    counter.add_traffic(len, len);
    Ok(out)
}

/// Multiplies every element by `factor`; one flop per element.
pub fn scale(a: &Matrix, factor: f32, counter: &mut OpCounter) -> Result<Matrix> {
    let data = a.as_slice().iter().map(|v| v * factor).collect();
    let len = a.len() as u64;
    counter.add_flops(len);
    counter.add_traffic(len, len);
    Matrix::new(a.rows(), a.cols(), data)?.ensure_finite("scale")
}

/// Row-wise softmax, stabilised by subtracting the row maximum.
///
/// Masked positions come out as exactly zero. Each unmasked entry costs four
/// flops: the max subtraction, the exponential, the accumulation into the row
/// sum and the final division. Max-finding comparisons are not counted.
pub fn softmax_rows(m: &Matrix, mask: Option<&Mask>, counter: &mut OpCounter) -> Result<Matrix> {
    if let Some(mask) = mask {
        if mask.shape() != m.shape() {
            return Err(Error::shape(
                "softmax_rows",
                format!("mask {:?} vs scores {:?}", mask.shape(), m.shape()),
            ));
        }
    }
    let mut out = Matrix::zeros(m.rows(), m.cols())?;
    let mut unmasked_total = 0u64;
    for i in 0..m.rows() {
        let row = m.row(i);
        let keep = |j: usize| mask.is_none_or(|mk| !mk.row(i)[j]);
        let max = (0..row.len())
            .filter(|&j| keep(j))
            .map(|j| row[j])
            .fold(f32::NEG_INFINITY, f32::max);
        if max == f32::NEG_INFINITY {
            return Err(Error::DegenerateRow { row: i });
        }
        let out_row = out.row_mut(i);
        let mut sum = 0.0f32;
        let mut unmasked = 0u64;
        for (j, &s) in row.iter().enumerate() {
            if keep(j) {
                let e = (s - max).exp();
                out_row[j] = e;
                sum += e;
                unmasked += 1;
            }
        }
        for (j, o) in out_row.iter_mut().enumerate() {
            if keep(j) {
                *o /= sum;
            }
        }
        unmasked_total += unmasked;
    }
    let len = m.len() as u64;
    counter.add_flops(4 * unmasked_total);
    counter.add_traffic(if mask.is_some() { 2 * len } else { len }, len);
    out.ensure_finite("softmax_rows")
}

/// Element-wise product; one flop per element.
pub fn hadamard(a: &Matrix, b: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::shape("hadamard", format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    let len = a.len() as u64;
    counter.add_flops(len);
    counter.add_traffic(2 * len, len);
    Matrix::new(a.rows(), a.cols(), data)?.ensure_finite("hadamard")
}

/// Element-wise complex product; six flops per element.
pub fn hadamard_complex(a: &ComplexMatrix, b: &ComplexMatrix, counter: &mut OpCounter) -> Result<ComplexMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            "hadamard_complex",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    let data: Vec<Complex32> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    let len = data.len() as u64;
    counter.add_flops(6 * len);
    counter.add_traffic(4 * len, 2 * len);
    ComplexMatrix::new(a.rows(), a.cols(), data)?.ensure_finite("hadamard_complex")
}
