//! Instrumented tensor kernels: every call adds its exact flop count to an
//! `OpCounter`.

use causal_roofline::tensor::{dft, hadamard, matmul, scale, softmax_rows, ComplexMatrix, DftMethod, Mask};
use causal_roofline::{Matrix, OpCounter};

fn main() -> causal_roofline::Result<()> {
    let a = Matrix::from_fn(4, 3, |i, j| (i + j) as f32)?;
    let b = Matrix::from_fn(3, 5, |i, j| (i as f32 - j as f32) * 0.5)?;

    let mut c = OpCounter::default();
    let ab = matmul(&a, &b, &mut c)?;
    println!(
        "matmul 4x3 * 3x5: {} flops (2mkn = {})",
        c.take().flops(),
        2 * 4 * 3 * 5
    );

    let s = scale(&ab, 0.25, &mut c)?;
    println!("scale 4x5: {} flops", c.take().flops());

    let sq = Matrix::from_fn(4, 4, |i, j| (i * 4 + j) as f32 * 0.1)?;
    let p = softmax_rows(&sq, Some(&Mask::causal(4)?), &mut c)?;
    println!("causal softmax 4x4 (10 unmasked): {} flops", c.take().flops());
    println!("row 1: {:?}", p.row(1));

    hadamard(&s, &s, &mut c)?;
    println!("hadamard 4x5: {} flops", c.take().flops());

    let x = ComplexMatrix::from_real(&Matrix::from_fn(8, 2, |i, _| i as f32)?);
    dft(&x, false, DftMethod::Radix2, &mut c)?;
    println!(
        "radix-2 DFT, n=8, 2 columns: {} flops (5 n log2 n per column)",
        c.take().flops()
    );
    dft(&x, false, DftMethod::Direct, &mut c)?;
    println!(
        "direct DFT, n=8, 2 columns: {} flops (8 n^2 per column)",
        c.take().flops()
    );
    let round = dft(&dft(&x, false, DftMethod::Auto, &mut c)?, true, DftMethod::Auto, &mut c)?;
    println!("round trip max error: {:e}", round.re().max_abs_diff(&x.re()));
    Ok(())
}
