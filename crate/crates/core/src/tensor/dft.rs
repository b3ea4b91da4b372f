use std::f64::consts::PI;

use num_complex::Complex32;

use super::{ComplexMatrix, OpCounter};
use crate::error::{Error, Result};

/// How a transform is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DftMethod {
    /// Radix-2 when the length is a power of two, direct otherwise.
    #[default]
    Auto,
    /// O(n^2) summation: 8 flops per (output, input) pair.
    Direct,
    /// Iterative Cooley-Tukey: 10 flops per butterfly. Power-of-two lengths only.
    Radix2,
}

/// Discrete Fourier transform of every column, i.e. along the row index.
///
/// Forward: `X[k] = sum_j x[j] e^{-2 pi i jk/n}`. Inverse uses the opposite
/// sign and divides by `n` (2 flops per element).
pub fn dft(m: &ComplexMatrix, inverse: bool, method: DftMethod, counter: &mut OpCounter) -> Result<ComplexMatrix> {
    let (n, cols) = m.shape();
    let method = match method {
        DftMethod::Auto if n.is_power_of_two() => DftMethod::Radix2,
        DftMethod::Auto => DftMethod::Direct,
        DftMethod::Radix2 if !n.is_power_of_two() => {
            return Err(Error::shape(
                "dft",
                format!("radix-2 needs a power-of-two length, got {n}"),
            ))
        }
        other => other,
    };
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex32> = (0..n)
        .map(|t| {
            let angle = sign * 2.0 * PI * t as f64 / n as f64;
            Complex32::new(angle.cos() as f32, angle.sin() as f32)
        })
        .collect();

    let mut out = ComplexMatrix::zeros(n, cols)?;
    let mut column = vec![Complex32::new(0.0, 0.0); n];
    for c in 0..cols {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = m.get(r, c);
        }
        let transformed = match method {
            DftMethod::Radix2 => radix2(&column, &twiddles),
            _ => direct(&column, &twiddles),
        };
        for (r, v) in transformed.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    if inverse {
        let norm = 1.0 / n as f32;
        for v in out.data_mut() {
            *v *= norm;
        }
    }

    let per_column = match method {
        DftMethod::Radix2 => 10 * (n as u64 / 2) * n.trailing_zeros() as u64,
        _ => 8 * (n as u64) * (n as u64),
    };
    let scaling = if inverse { 2 * n as u64 } else { 0 };
    counter.add_flops(cols as u64 * (per_column + scaling));
    let elements = 2 * (n * cols) as u64;
    counter.add_traffic(elements, elements);
    out.ensure_finite("dft")
}

fn direct(x: &[Complex32], twiddles: &[Complex32]) -> Vec<Complex32> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .fold(Complex32::new(0.0, 0.0), |acc, (j, &v)| acc + v * twiddles[(j * k) % n])
        })
        .collect()
}

fn radix2(x: &[Complex32], twiddles: &[Complex32]) -> Vec<Complex32> {
    let n = x.len();
    let bits = n.trailing_zeros();
    let mut a: Vec<Complex32> = if n == 1 {
        x.to_vec()
    } else {
        (0..n).map(|i| x[i.reverse_bits() >> (usize::BITS - bits)]).collect()
    };
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = twiddles[k * stride];
                let u = a[start + k];
                let t = w * a[start + k + len / 2];
                a[start + k] = u + t;
                a[start + k + len / 2] = u - t;
            }
        }
        len <<= 1;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    fn column(values: &[f32]) -> ComplexMatrix {
        ComplexMatrix::from_real(&Matrix::new(values.len(), 1, values.to_vec()).unwrap())
    }

    #[test]
    fn constant_column_concentrates_in_dc() {
        for method in [DftMethod::Direct, DftMethod::Radix2] {
            let mut c = OpCounter::default();
            let spectrum = dft(&column(&[1.0; 4]), false, method, &mut c).unwrap();
            let expected = [4.0, 0.0, 0.0, 0.0];
            for (k, e) in expected.iter().enumerate() {
                assert!((spectrum.get(k, 0) - Complex32::new(*e, 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        for method in [DftMethod::Direct, DftMethod::Radix2] {
            let mut c = OpCounter::default();
            let spectrum = dft(
                &column(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
                false,
                method,
                &mut c,
            )
            .unwrap();
            for k in 0..8 {
                assert!((spectrum.get(k, 0) - Complex32::new(1.0, 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn flop_counts_per_method() {
        let x = column(&[1.0; 8]);
        let mut c = OpCounter::default();
        dft(&x, false, DftMethod::Direct, &mut c).unwrap();
        assert_eq!(c.take().flops(), 8 * 64);
        dft(&x, false, DftMethod::Radix2, &mut c).unwrap();
        assert_eq!(c.take().flops(), 10 * 4 * 3);
        dft(&x, true, DftMethod::Radix2, &mut c).unwrap();
        assert_eq!(c.take().flops(), 10 * 4 * 3 + 16);
    }

    #[test]
    fn radix2_rejects_odd_length() {
        let mut c = OpCounter::default();
        assert!(dft(&column(&[1.0; 6]), false, DftMethod::Radix2, &mut c).is_err());
        // Auto falls back to the direct path.
        assert!(dft(&column(&[1.0; 6]), false, DftMethod::Auto, &mut c).is_ok());
    }

    #[test]
    fn length_one_is_identity() {
        let mut c = OpCounter::default();
        let x = column(&[2.5]);
        assert_eq!(dft(&x, false, DftMethod::Auto, &mut c).unwrap(), x);
        assert_eq!(dft(&x, true, DftMethod::Auto, &mut c).unwrap(), x);
    }
}
