//! Besov and Triebel-Lizorkin norms on the product space, in all four
//! variants: classical/nonclassical weights, mixed/ordinary flavor, plus the
//! test-function norms and the embedding and cutoff-independence harnesses.
//!
//! Norms are truncated dyadic sums; for band-limited inputs the truncation
//! is exact once `2^(J_min - 1)` covers the band, and `SpaceParams::auto_j`
//! picks that truncation from the space.

use crate::calculus::{apply_l_power, synthesize, CoefField};
use crate::lpdecomp::{lp_blocks_mixed, lp_blocks_ordinary, CutoffSystem};
use crate::product::{refine, ProductPoint, ProductSpace, VolumeTable};
use crate::report::VerificationReport;
use crate::util::{lp_norm, lq_combine, rel_change};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Besov,
    TriebelLizorkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Dyadic weights `2^(j . s)`.
    Classical,
    /// Pointwise volume weights `V(x, 2^-j)^(-s/d)`.
    Nonclassical,
}

/// Smoothness index: a pair for the dominating-mixed scale, a scalar for
/// the ordinary (radial) scale. The variant fixes the decomposition flavor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Mixed([f64; 2]),
    Ordinary(f64),
}

/// Parameters of one function-space norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    pub family: Family,
    pub kind: SpaceKind,
    pub s: Smoothness,
    pub p: f64,
    pub q: f64,
    /// Dyadic truncation per axis (the ordinary flavor uses `j_max[0]`).
    pub j_max: [u32; 2],
}

impl SpaceParams {
    pub fn new(
        family: Family,
        kind: SpaceKind,
        s: Smoothness,
        p: f64,
        q: f64,
        j_max: [u32; 2],
    ) -> Result<Self> {
        if p <= 0.0 || q <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "space params p={p} q={q} must be positive"
            )));
        }
        if family == Family::TriebelLizorkin && p.is_infinite() {
            return Err(Error::InvalidParam(
                "Triebel-Lizorkin norms require p < infinity".into(),
            ));
        }
        Ok(SpaceParams {
            family,
            kind,
            s,
            p,
            q,
            j_max,
        })
    }

    /// Truncation that exactly covers the retained band of the space.
    pub fn auto_j(ps: &ProductSpace) -> [u32; 2] {
        let j = |radius: f64| -> u32 { radius.max(1.0).log2().ceil() as u32 + 1 };
        [j(ps.m1.band_radius()), j(ps.m2.band_radius())]
    }
}

/// Per-axis node volumes at every dyadic radius `2^-j`, `j <= j_max`.
struct DyadicVolumes {
    v1: Vec<Vec<f64>>,
    v2: Vec<Vec<f64>>,
}

impl DyadicVolumes {
    fn new(ps: &ProductSpace, j_max: [u32; 2]) -> Result<Self> {
        let mut v1 = Vec::new();
        for j in 0..=j_max[0] {
            v1.push(VolumeTable::new(ps, [2.0f64.powi(-(j as i32)), ps.m2.diameter()])?.v1);
        }
        let mut v2 = Vec::new();
        for j in 0..=j_max[1] {
            v2.push(VolumeTable::new(ps, [ps.m1.diameter(), 2.0f64.powi(-(j as i32))])?.v2);
        }
        Ok(DyadicVolumes { v1, v2 })
    }
}

/// Pointwise weight of one block on the grid, by kind and flavor.
fn block_weight(
    ps: &ProductSpace,
    kind: SpaceKind,
    s: Smoothness,
    vols: &DyadicVolumes,
    id: crate::lpdecomp::BlockId,
) -> DMatrix<f64> {
    let (n1, n2) = ps.grid_shape();
    use crate::lpdecomp::BlockId::*;
    match (kind, s, id) {
        (SpaceKind::Classical, Smoothness::Mixed(s), Mixed([j1, j2])) => {
            let w = 2.0f64.powf(j1 as f64 * s[0] + j2 as f64 * s[1]);
            DMatrix::from_element(n1, n2, w)
        }
        (SpaceKind::Classical, Smoothness::Ordinary(s), Ordinary(j)) => {
            DMatrix::from_element(n1, n2, 2.0f64.powf(j as f64 * s))
        }
        (SpaceKind::Nonclassical, Smoothness::Mixed(s), Mixed([j1, j2])) => {
            let e1 = -s[0] / ps.d_pair[0];
            let e2 = -s[1] / ps.d_pair[1];
            DMatrix::from_fn(n1, n2, |m, n| {
                vols.v1[j1 as usize][m].powf(e1) * vols.v2[j2 as usize][n].powf(e2)
            })
        }
        (SpaceKind::Nonclassical, Smoothness::Ordinary(s), Ordinary(j)) => {
            let e = -s / (ps.d_pair[0] + ps.d_pair[1]);
            DMatrix::from_fn(n1, n2, |m, n| {
                (vols.v1[j as usize][m] * vols.v2[j as usize][n]).powf(e)
            })
        }
        _ => unreachable!("flavor of smoothness and block index always agree"),
    }
}

fn blocks_for(
    cs: &CutoffSystem,
    cf: &CoefField,
    params: &SpaceParams,
) -> Vec<crate::lpdecomp::LpBlock> {
    match params.s {
        Smoothness::Mixed(_) => lp_blocks_mixed(cs, cf, params.j_max),
        Smoothness::Ordinary(_) => lp_blocks_ordinary(cs, cf, params.j_max[0]),
    }
}

/// Besov norm: `ell^q` over blocks of weighted `L^p` block norms.
pub fn besov_norm(cs: &CutoffSystem, cf: &CoefField, params: &SpaceParams) -> Result<f64> {
    if params.family != Family::Besov {
        return Err(Error::Config(
            "besov_norm called with a Triebel-Lizorkin parameter set".into(),
        ));
    }
    let ps = &cf.space;
    let vols = DyadicVolumes::new(ps, params.j_max)?;
    let mut terms = Vec::new();
    for block in blocks_for(cs, cf, params) {
        let grid = synthesize(&block.field);
        let w = block_weight(ps, params.kind, params.s, &vols, block.id);
        terms.push(lp_norm(
            &w.component_mul(&grid),
            &ps.product_weights,
            params.p,
        ));
    }
    Ok(lq_combine(&terms, params.q))
}

/// Triebel-Lizorkin norm: `L^p` of the pointwise `ell^q` over blocks.
pub fn tl_norm(cs: &CutoffSystem, cf: &CoefField, params: &SpaceParams) -> Result<f64> {
    if params.family != Family::TriebelLizorkin {
        return Err(Error::Config(
            "tl_norm called with a Besov parameter set".into(),
        ));
    }
    if params.p.is_infinite() {
        return Err(Error::Config("tl_norm: p must be finite".into()));
    }
    let ps = &cf.space;
    let vols = DyadicVolumes::new(ps, params.j_max)?;
    let (n1, n2) = ps.grid_shape();
    let mut inner = DMatrix::zeros(n1, n2);
    let q = params.q;
    for block in blocks_for(cs, cf, params) {
        let grid = synthesize(&block.field);
        let w = block_weight(ps, params.kind, params.s, &vols, block.id);
        let weighted = w.component_mul(&grid);
        if q.is_infinite() {
            inner.zip_apply(&weighted, |o: &mut f64, v| *o = o.max(v.abs()));
        } else {
            inner.zip_apply(&weighted, |o: &mut f64, v| *o += v.abs().powf(q));
        }
    }
    let pointwise = if q.is_infinite() {
        inner
    } else {
        inner.map(|v| v.powf(1.0 / q))
    };
    Ok(lp_norm(&pointwise, &ps.product_weights, params.p))
}

/// Norm through the parameter set's family.
pub fn space_norm(cs: &CutoffSystem, cf: &CoefField, params: &SpaceParams) -> Result<f64> {
    match params.family {
        Family::Besov => besov_norm(cs, cf, params),
        Family::TriebelLizorkin => tl_norm(cs, cf, params),
    }
}

/// Test-function norm
/// `P_{m,k}(f) = sup_x prod_i (1 + rho_i(x_i, x0_i))^k max_{nu <= m} |L^nu f(x)|`.
pub fn test_norm(cf: &CoefField, m_order: u32, k: u32, x0: ProductPoint) -> f64 {
    let ps = &cf.space;
    let (n1, n2) = ps.grid_shape();
    let mut pointwise_max = DMatrix::zeros(n1, n2);
    for nu1 in 0..=m_order {
        for nu2 in 0..=m_order {
            let grid = synthesize(&apply_l_power(cf, [nu1, nu2]));
            pointwise_max.zip_apply(&grid, |o: &mut f64, v| *o = o.max(v.abs()));
        }
    }
    let mut best: f64 = 0.0;
    for m in 0..n1 {
        let w1 = (1.0 + ps.m1.dist(ps.m1.nodes[m], x0[0])).powi(k as i32);
        for n in 0..n2 {
            let w2 = (1.0 + ps.m2.dist(ps.m2.nodes[n], x0[1])).powi(k as i32);
            best = best.max(w1 * w2 * pointwise_max[(m, n)]);
        }
    }
    best
}

/// Target of an embedding check: another space or a Lebesgue norm.
#[derive(Debug, Clone, Copy)]
pub enum EmbeddingTarget {
    Space(SpaceParams),
    Lebesgue(f64),
}

/// Embedding harness: measures `c_emp = max ||f||_target / ||f||_source`
/// over the test set, after validating the hypotheses of the embedding being
/// exercised, and guards it with a 2x grid refinement.
pub fn embedding_check(
    cs: &CutoffSystem,
    fields: &[CoefField],
    source: &SpaceParams,
    target: &EmbeddingTarget,
) -> Result<VerificationReport> {
    if fields.is_empty() {
        return Err(Error::Config("embedding_check: empty test set".into()));
    }
    let ps = &fields[0].space;
    let d = ps.d_pair;
    match target {
        EmbeddingTarget::Space(tgt) => {
            if source.family != Family::Besov || tgt.family != Family::Besov {
                return Err(Error::Config(
                    "space embedding harness covers the Besov scale".into(),
                ));
            }
            if source.p > tgt.p || source.q > tgt.q {
                return Err(Error::Config(format!(
                    "embedding needs p <= r and q <= tau; got ({}, {}) -> ({}, {})",
                    source.p, source.q, tgt.p, tgt.q
                )));
            }
            if source.kind == SpaceKind::Nonclassical || tgt.kind == SpaceKind::Nonclassical {
                let (Smoothness::Mixed(s), Smoothness::Mixed(s2)) = (source.s, tgt.s) else {
                    return Err(Error::Config("mixed smoothness expected".into()));
                };
                for i in 0..2 {
                    let lhs = s[i] / d[i] - 1.0 / source.p;
                    let rhs = s2[i] / d[i] - 1.0 / tgt.p;
                    if (lhs - rhs).abs() > 1e-9 {
                        return Err(Error::Config(format!(
                            "smoothness/integrability balance violated on axis {i}: {lhs} vs {rhs}"
                        )));
                    }
                }
            }
        }
        EmbeddingTarget::Lebesgue(p) => {
            if (source.p - p).abs() > 1e-12 {
                return Err(Error::Config(
                    "Lebesgue embedding compares at the source p".into(),
                ));
            }
            let Smoothness::Mixed(s) = source.s else {
                return Err(Error::Config("mixed smoothness expected".into()));
            };
            if s[0] <= 0.0 || s[1] <= 0.0 {
                return Err(Error::Config(format!(
                    "Lebesgue embedding needs s > 0; got {s:?}"
                )));
            }
        }
    }

    let run = |sp: &Arc<ProductSpace>, fs: &[CoefField]| -> Result<f64> {
        let mut c: f64 = 0.0;
        for f in fs {
            let src = space_norm(cs, f, source)?;
            let tgt_norm = match target {
                EmbeddingTarget::Space(tp) => space_norm(cs, f, tp)?,
                EmbeddingTarget::Lebesgue(p) => lp_norm(&synthesize(f), &sp.product_weights, *p),
            };
            if src > 0.0 {
                c = c.max(tgt_norm / src);
            }
        }
        Ok(c)
    };
    let c_base = run(ps, fields)?;
    let fine = Arc::new(refine(ps)?);
    let fields_fine: Vec<CoefField> = fields
        .iter()
        .map(|f| CoefField::from_coefs(&fine, f.coefs.clone()))
        .collect::<Result<_>>()?;
    let c_fine = run(&fine, &fields_fine)?;

    let (name, anchor) = match target {
        EmbeddingTarget::Space(_) => ("embedding-balance", "saemb"),
        EmbeddingTarget::Lebesgue(_) => ("embedding-into-lebesgue", "embed-B-L"),
    };
    let mut rep =
        VerificationReport::new(name, anchor, format!("source={source:?} target={target:?}"));
    rep.measured_constant = c_base;
    rep.refined_constant = Some(c_fine);
    rep.tolerance = 0.10;
    rep.pass = c_base.is_finite() && rel_change(c_base, c_fine) < 0.10;
    Ok(rep)
}

/// Cutoff-independence harness: the ratio band of the norms computed from
/// two admissible systems must sit in `[1/C, C]` with `C` stable when the
/// truncation is raised by two dyadic levels.
pub fn cutoff_independence_check(
    cs_a: &CutoffSystem,
    cs_b: &CutoffSystem,
    fields: &[CoefField],
    params: &SpaceParams,
) -> Result<VerificationReport> {
    if fields.is_empty() {
        return Err(Error::Config(
            "cutoff_independence_check: empty test set".into(),
        ));
    }
    if cs_a.lower_bound <= 0.0 || cs_b.lower_bound <= 0.0 {
        return Err(Error::Config(
            "both cutoff systems must satisfy the lower bounds".into(),
        ));
    }
    let band = |params: &SpaceParams| -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for f in fields {
            let na = space_norm(cs_a, f, params)?;
            let nb = space_norm(cs_b, f, params)?;
            if nb > 0.0 {
                let r = na / nb;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        Ok((lo, hi))
    };
    let (lo, hi) = band(params)?;
    let wider = SpaceParams {
        j_max: [params.j_max[0] + 2, params.j_max[1] + 2],
        ..*params
    };
    let (lo2, hi2) = band(&wider)?;
    let c = hi.max(1.0 / lo);
    let c2 = hi2.max(1.0 / lo2);
    let mut rep = VerificationReport::new(
        "cutoff-independence",
        "prop-independent",
        format!("{params:?}"),
    );
    rep.measured_constant = c;
    rep.refined_constant = Some(c2);
    rep.tolerance = 0.10;
    rep.pass = c.is_finite() && rel_change(c, c2) < 0.10;
    rep.detail("ratio_lo", lo);
    rep.detail("ratio_hi", hi);
    rep.detail("ratio_lo_wider_j", lo2);
    rep.detail("ratio_hi_wider_j", hi2);
    Ok(rep)
}
