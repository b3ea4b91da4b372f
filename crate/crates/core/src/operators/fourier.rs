use super::AttentionConfig;
use crate::error::{Error, Result};
use crate::tensor::{dft, hadamard_complex, ComplexMatrix, DftMethod, Matrix, OpCounter};

/// Largest tolerated `max|Im| / max(1, max|Re|)` of the inverse transform.
pub const IMAGINARY_RESIDUE_LIMIT: f32 = 1e-4;

/// `Re F^-1( F(Q) ⊙ conj(F(K)) ⊙ F(V) )`, transforms taken per column along
/// the sequence axis with circular (unpadded) semantics.
pub fn fourier_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    fourier_attention_with(q, k, v, cfg, DftMethod::Auto, counter)
}

pub fn fourier_attention_with(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    method: DftMethod,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    cfg.check_inputs("fourier_attention", q, k, v)?;
    let q_w = dft(&ComplexMatrix::from_real(q), false, method, counter)?;
    let k_w = dft(&ComplexMatrix::from_real(k), false, method, counter)?;
    let v_w = dft(&ComplexMatrix::from_real(v), false, method, counter)?;
    let mixed = hadamard_complex(&hadamard_complex(&q_w, &k_w.conj(), counter)?, &v_w, counter)?;
    let out = dft(&mixed, true, method, counter)?;

    let re = out.re();
    let residue = out.im().max_abs() / re.max_abs().max(1.0);
    if residue > IMAGINARY_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidue {
            residue,
            limit: IMAGINARY_RESIDUE_LIMIT,
        });
    }
    Ok(re)
}
