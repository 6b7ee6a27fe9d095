//! Reproducible band-limited test-function families for the verification
//! harnesses.
//!
//! The default equivalence test set is 20 pseudo-random fields with
//! coefficients decaying like `(1+k)^-1 (1+l)^-1`, drawn from a fixed-seed
//! generator so every harness run is bit-reproducible. The Nikolski sweep
//! additionally uses band-saturating families (Cesaro/Dirichlet tensor
//! fields and band-edge modes) whose norm ratios approach the sharp
//! constants of the band inequalities.

use crate::calculus::CoefField;
use crate::coordspace::ModelKind;
use crate::product::ProductSpace;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// `count` pseudo-random band-limited fields with decaying coefficients
/// `c[k][l] ~ (1+k)^-1 (1+l)^-1 * U(-1, 1)`, fixed seed.
pub fn decaying_random_fields(ps: &Arc<ProductSpace>, count: usize, seed: u64) -> Vec<CoefField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b1, b2) = ps.basis_shape();
    (0..count)
        .map(|_| {
            let coefs = DMatrix::from_fn(b1, b2, |k, l| {
                rng.gen_range(-1.0..1.0) / ((1.0 + k as f64) * (1.0 + l as f64))
            });
            CoefField {
                space: ps.clone(),
                coefs,
            }
        })
        .collect()
}

/// Same, but truncated so the field lies in the spectral band
/// `sqrt(lambda) <= max_sqrt` per axis.
pub fn decaying_random_fields_in_band(
    ps: &Arc<ProductSpace>,
    count: usize,
    seed: u64,
    max_sqrt: [f64; 2],
) -> Vec<CoefField> {
    decaying_random_fields(ps, count, seed)
        .into_iter()
        .map(|f| crate::lpdecomp::band_project(&f, max_sqrt))
        .collect()
}

fn require_circle(ps: &ProductSpace) -> Result<()> {
    if !matches!(ps.m1.kind, ModelKind::Circle) || !matches!(ps.m2.kind, ModelKind::Circle) {
        return Err(Error::Config(
            "this field family needs circle factors (closed-form trigonometric bands)".into(),
        ));
    }
    Ok(())
}

fn circle_frequencies(n_basis: usize) -> usize {
    n_basis / 2 + 1
}

/// Tensor Cesaro (Fejer) field of band `n` per axis on a circle product:
/// the nonnegative trigonometric kernel whose `L^1`, `L^2`, `L^inf` norm
/// ratios saturate the band inequalities uniformly in `n`.
pub fn fejer_field(ps: &Arc<ProductSpace>, n: [usize; 2]) -> Result<CoefField> {
    require_circle(ps)?;
    let coefs = tensor_profile(ps, n, |k, n| 1.0 - k as f64 / n as f64)?;
    Ok(CoefField {
        space: ps.clone(),
        coefs,
    })
}

/// Tensor Dirichlet field of band `n` per axis (full-weight frequencies up
/// to `n`): the reproducing kernel of the band.
pub fn dirichlet_field(ps: &Arc<ProductSpace>, n: [usize; 2]) -> Result<CoefField> {
    require_circle(ps)?;
    let coefs = tensor_profile(ps, n, |k, n| if k <= n { 1.0 } else { 0.0 })?;
    Ok(CoefField {
        space: ps.clone(),
        coefs,
    })
}

/// Single tensor mode at frequency `n_i` per axis (cosine branch).
pub fn edge_mode(ps: &Arc<ProductSpace>, n: [usize; 2]) -> Result<CoefField> {
    require_circle(ps)?;
    let idx = |n: usize| if n == 0 { 0 } else { 2 * n - 1 };
    CoefField::mode(ps, idx(n[0]), idx(n[1]))
}

/// Field with spectrum `profile(k, n)` against the cosine modes of each
/// axis, i.e. `g(theta) = profile(0) + 2 sum_k profile(k) cos(k theta)`
/// per axis, tensorized.
fn tensor_profile(
    ps: &Arc<ProductSpace>,
    n: [usize; 2],
    profile: impl Fn(usize, usize) -> f64,
) -> Result<DMatrix<f64>> {
    let pi = std::f64::consts::PI;
    let (b1, b2) = ps.basis_shape();
    let freq1 = circle_frequencies(b1);
    let freq2 = circle_frequencies(b2);
    if n[0] >= freq1 || n[1] >= freq2 {
        return Err(Error::InvalidParam(format!(
            "band {n:?} beyond retained frequencies ({freq1}, {freq2})"
        )));
    }
    let axis = |nn: usize, b: usize| -> Vec<f64> {
        let mut c = vec![0.0; b];
        // constant mode e_0 = 1/sqrt(2 pi): coefficient of value 1 is sqrt(2 pi)
        c[0] = profile(0, nn.max(1)) * (2.0 * pi).sqrt();
        for k in 1..=nn {
            let w = profile(k, nn.max(1));
            if w != 0.0 {
                // 2 w cos(k theta) = 2 w sqrt(pi) e_{2k-1}
                c[2 * k - 1] = 2.0 * w * pi.sqrt();
            }
        }
        c
    };
    let a = axis(n[0], b1);
    let b = axis(n[1], b2);
    Ok(DMatrix::from_fn(b1, b2, |k, l| a[k] * b[l]))
}
