//! Spectral multiplier classes and boundedness harnesses: derivative-growth
//! admissibility scans, the lifting operator, and the norm-boundedness
//! measurements on the Besov/Triebel-Lizorkin scales.

use crate::calculus::{apply_symbol, CoefField, Symbol};
use crate::funcspaces::{space_norm, Family, Smoothness, SpaceKind, SpaceParams};
use crate::lpdecomp::{lp_blocks_mixed, CutoffSystem};
use crate::product::ProductSpace;
use crate::report::VerificationReport;
use crate::util::rel_change;
use crate::{Error, Result};
use std::sync::Arc;

/// A spectral multiplier with its growth class `(tau, kappa)` and the
/// outcome of the admissibility scan.
#[derive(Debug, Clone)]
pub struct MultiplierSpec {
    pub m: Symbol,
    pub tau: [f64; 2],
    pub kappa: [u32; 2],
    /// Set when the finite-difference scan certified the derivative bounds.
    pub admissible: bool,
    /// Recorded per-order constants `c_beta`, keyed `beta = (b1, b2)`.
    pub constants: Vec<([u32; 2], f64)>,
}

impl MultiplierSpec {
    /// Runs the admissibility scan for the class and records the constants.
    pub fn checked(
        m: Symbol,
        tau: [f64; 2],
        kappa: [u32; 2],
        band: [f64; 2],
    ) -> Result<(Self, VerificationReport)> {
        let rep = multiplier_admissible_check(&m, tau, kappa, band)?;
        let admissible = rep.pass;
        let constants = rep
            .details
            .iter()
            .filter_map(|(k, v)| {
                let (b1, b2) = k.strip_prefix("c_beta_")?.split_once('_')?;
                Some(([b1.parse().ok()?, b2.parse().ok()?], *v))
            })
            .collect();
        Ok((
            MultiplierSpec {
                m,
                tau,
                kappa,
                admissible,
                constants,
            },
            rep,
        ))
    }

    /// The product multiplier `(1 + l1^2)^(t1/2) (1 + l2^2)^(t2/2)`, a
    /// member of the class for every derivative order.
    pub fn power_weight(tau: [f64; 2]) -> Symbol {
        Symbol::from_fn("power-weight", true, move |l1, l2| {
            (1.0 + l1 * l1).powf(tau[0] / 2.0) * (1.0 + l2 * l2).powf(tau[1] / 2.0)
        })
        .with_smoothness(crate::calculus::SymbolSmoothness::Infinite)
    }
}

/// Central finite difference of order `b` with step `h`.
fn central_diff(f: impl Fn(f64) -> f64, x: f64, b: u32, h: f64) -> f64 {
    if b == 0 {
        return f(x);
    }
    let mut sum = 0.0;
    let mut binom = 1.0f64;
    for i in 0..=b {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let offset = b as f64 / 2.0 - i as f64;
        sum += sign * binom * f(x + offset * h);
        binom *= (b - i) as f64 / (i + 1) as f64;
    }
    sum / h.powi(b as i32)
}

fn partial(m: &Symbol, l: [f64; 2], beta: [u32; 2], h: f64) -> f64 {
    central_diff(
        |x1| central_diff(|x2| m.eval(x1, x2), l[1], beta[1], h),
        l[0],
        beta[0],
        h,
    )
}

/// Difference step for a partial of total order `b`. The base step 1e-3 is
/// rounding-dominated from total order four on (the stencil noise
/// `eps 2^b / h^b` overtakes truncation), so higher orders widen the step
/// until the noise floor sits near 1e-8 of the function scale.
fn step_for_order(b: u32) -> f64 {
    if b <= 3 {
        1e-3
    } else {
        (f64::EPSILON * 2.0f64.powi(b as i32) * 1e8).powf(1.0 / b as f64)
    }
}

/// Largest ratio `|d^beta m| / ((1+l1)^(t1-b1) (1+l2)^(t2-b2))` over the
/// `[0, r1] x [0, r2]` grid.
fn growth_ratio(
    m: &Symbol,
    tau: [f64; 2],
    beta: [u32; 2],
    range: [f64; 2],
    steps: usize,
    h: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..=steps {
        let l1 = range[0] * i as f64 / steps as f64;
        for j in 0..=steps {
            let l2 = range[1] * j as f64 / steps as f64;
            let d = partial(m, [l1, l2], beta, h).abs();
            let env =
                (1.0 + l1).powf(tau[0] - beta[0] as f64) * (1.0 + l2).powf(tau[1] - beta[1] as f64);
            worst = worst.max(d / env);
        }
    }
    worst
}

/// Derivative-growth scan over the band with margin: central differences of
/// every order `beta <= kappa` at step `h = 1e-3`, Richardson-checked at
/// `h/2`, with a range-doubling guard that catches growth beyond the class.
pub fn multiplier_admissible_check(
    m: &Symbol,
    tau: [f64; 2],
    kappa: [u32; 2],
    band: [f64; 2],
) -> Result<VerificationReport> {
    if band[0] <= 0.0 || band[1] <= 0.0 {
        return Err(Error::InvalidParam(
            "admissibility scan needs a positive band".into(),
        ));
    }
    let range = [band[0] * 1.1, band[1] * 1.1];
    let wide = [band[0] * 2.2, band[1] * 2.2];
    // the ratio profiles have O(1)-wide features near the origin, so the
    // scan grid resolves the range at spacing <= 1/4
    let steps = 24usize.max((range[0].max(range[1]) * 4.0).ceil() as usize);
    let mut rep = VerificationReport::new(
        "multiplier-admissible",
        "multibounds",
        format!("m={} tau={tau:?} kappa={kappa:?}", m.name),
    );
    let mut pass = true;
    for b1 in 0..=kappa[0] {
        for b2 in 0..=kappa[1] {
            let beta = [b1, b2];
            let order = b1 + b2;
            let h = step_for_order(order);
            let c = growth_ratio(m, tau, beta, range, steps, h);
            // confirmation step: h/2 while the stencil is noise-safe, a
            // mild widening for the high-order stencils where halving would
            // be rounding-dominated
            let h_confirm = if order <= 3 { h / 2.0 } else { 1.25 * h };
            let c_confirm = growth_ratio(m, tau, beta, range, steps, h_confirm);
            rep.detail(&format!("c_beta_{b1}_{b2}"), c);
            let scale = c.max(c_confirm).max(1e-9);
            let tol = if order <= 3 { 0.10 } else { 0.20 };
            let step_ok = (c - c_confirm).abs() / scale < tol || (c - c_confirm).abs() < 1e-3;
            // zero-order growth guard: the function-level ratio must stay
            // put when the grid range doubles (catches growth beyond the
            // class without touching noise-limited high-order stencils)
            let growth_ok = if order == 0 {
                let c_wide = growth_ratio(m, tau, beta, wide, steps, h);
                c_wide <= c.max(1e-12) * 1.25 + 1e-3
            } else {
                true
            };
            // density refinement of the scan grid
            let c_dense = growth_ratio(m, tau, beta, range, 2 * steps, h);
            let dense_ok = (c - c_dense).abs() / scale < 0.10 || (c - c_dense).abs() < 1e-3;
            if !(c.is_finite() && step_ok && growth_ok && dense_ok) {
                pass = false;
                rep.note(format!(
                    "beta=({b1},{b2}): c={c:.3e} confirm-step={c_confirm:.3e} dense={c_dense:.3e}"
                ));
            }
        }
    }
    rep.measured_constant = rep.details.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    rep.tolerance = 0.25;
    rep.pass = pass;
    Ok(rep)
}

/// Multiplier action on a coefficient field; on band-limited inputs the
/// dyadic-series definition collapses to direct coefficient multiplication.
pub fn apply_multiplier(spec: &MultiplierSpec, cf: &CoefField) -> CoefField {
    apply_symbol(&spec.m, cf)
}

/// The truncated dyadic-series evaluation `sum_j m(sqrt L) phi_j(sqrt L) f`;
/// agrees with [`apply_multiplier`] once the truncation covers the band.
pub fn apply_multiplier_dyadic(
    spec: &MultiplierSpec,
    cs: &CutoffSystem,
    cf: &CoefField,
    j_max: [u32; 2],
) -> CoefField {
    let mut out = CoefField::zero(&cf.space);
    for block in lp_blocks_mixed(cs, cf, j_max) {
        out = out.add(&apply_symbol(&spec.m, &block.field));
    }
    out
}

/// Lifting operator: coefficientwise multiplication by
/// `(1 + lambda_1)^(t1/2) (1 + lambda_2)^(t2/2)`.
pub fn lifting(cf: &CoefField, tau: [f64; 2]) -> CoefField {
    let s1 = &cf.space.m1.sqrt_eigenvalues;
    let s2 = &cf.space.m2.sqrt_eigenvalues;
    let coefs = nalgebra::DMatrix::from_fn(cf.coefs.nrows(), cf.coefs.ncols(), |k, l| {
        let l1 = s1[k] * s1[k];
        let l2 = s2[l] * s2[l];
        (1.0 + l1).powf(tau[0] / 2.0) * (1.0 + l2).powf(tau[1] / 2.0) * cf.coefs[(k, l)]
    });
    CoefField {
        space: cf.space.clone(),
        coefs,
    }
}

/// Norm-boundedness harness: `c_emp = max ||m(sqrt L) f||_target / ||f||_source`
/// with source smoothness `s + tau` and target smoothness `s`. Runs below
/// the theorem's derivative-order threshold are downgraded to informational.
#[allow(clippy::too_many_arguments)]
pub fn multiplier_boundedness_harness(
    spec: &MultiplierSpec,
    cs: &CutoffSystem,
    fields: &[CoefField],
    s: [f64; 2],
    p: f64,
    q: f64,
    family: Family,
    kind: SpaceKind,
) -> Result<VerificationReport> {
    if fields.is_empty() {
        return Err(Error::Config(
            "multiplier_boundedness_harness: empty test set".into(),
        ));
    }
    let ps: &Arc<ProductSpace> = &fields[0].space;
    let d = ps.d_pair;
    // the block-sum scale only involves p; the pointwise scale needs min(p, q)
    let integrability = match family {
        Family::Besov => p,
        Family::TriebelLizorkin => p.min(q),
    };
    let threshold = |i: usize| -> f64 {
        match kind {
            SpaceKind::Classical => 2.0 * d[i] / integrability + 1.5 * d[i],
            SpaceKind::Nonclassical => s[i].abs() + 2.0 * d[i] / integrability + 1.5 * d[i],
        }
    };
    let below = (0..2).any(|i| (spec.kappa[i] as f64) <= threshold(i));

    let j = SpaceParams::auto_j(ps);
    let source = SpaceParams::new(
        family,
        kind,
        Smoothness::Mixed([s[0] + spec.tau[0], s[1] + spec.tau[1]]),
        p,
        q,
        j,
    )?;
    let target = SpaceParams::new(family, kind, Smoothness::Mixed(s), p, q, j)?;

    let measure = |jshift: u32| -> Result<f64> {
        let src = SpaceParams {
            j_max: [j[0] + jshift, j[1] + jshift],
            ..source
        };
        let tgt = SpaceParams {
            j_max: [j[0] + jshift, j[1] + jshift],
            ..target
        };
        let mut c: f64 = 0.0;
        for f in fields {
            let n_src = space_norm(cs, f, &src)?;
            let n_tgt = space_norm(cs, &apply_multiplier(spec, f), &tgt)?;
            if n_src > 0.0 {
                c = c.max(n_tgt / n_src);
            }
        }
        Ok(c)
    };
    let c_base = measure(0)?;
    let c_wide = measure(2)?;

    let mut rep = VerificationReport::new(
        "multiplier-boundedness",
        "multi-BF",
        format!(
            "m={} tau={:?} kappa={:?} s={s:?} p={p} q={q} {family:?} {kind:?}",
            spec.m.name, spec.tau, spec.kappa
        ),
    );
    rep.measured_constant = c_base;
    rep.refined_constant = Some(c_wide);
    rep.tolerance = 0.10;
    rep.pass = c_base.is_finite() && rel_change(c_base, c_wide) < 0.10;
    if below {
        rep.informational = true;
        rep.note(format!(
            "kappa {:?} below the theorem threshold ({:.2}, {:.2}); run is informational",
            spec.kappa,
            threshold(0),
            threshold(1)
        ));
    }
    if !spec.admissible {
        rep.informational = true;
        rep.note("multiplier failed the admissibility scan; run is informational");
    }
    Ok(rep)
}

/// Lifting norm-equivalence harness:
/// `||lifting(tau) f||_{B^(s - tau)} / ||f||_{B^s}` stays in a band
/// `[1/C, C]` stable under raising the truncation.
pub fn lifting_equivalence_check(
    cs: &CutoffSystem,
    fields: &[CoefField],
    s: [f64; 2],
    tau: [f64; 2],
    p: f64,
    q: f64,
) -> Result<VerificationReport> {
    if fields.is_empty() {
        return Err(Error::Config(
            "lifting_equivalence_check: empty test set".into(),
        ));
    }
    let ps = &fields[0].space;
    let j = SpaceParams::auto_j(ps);
    let band = |jshift: u32| -> Result<(f64, f64)> {
        let jm = [j[0] + jshift, j[1] + jshift];
        let src = SpaceParams::new(
            Family::Besov,
            SpaceKind::Classical,
            Smoothness::Mixed(s),
            p,
            q,
            jm,
        )?;
        let tgt = SpaceParams::new(
            Family::Besov,
            SpaceKind::Classical,
            Smoothness::Mixed([s[0] - tau[0], s[1] - tau[1]]),
            p,
            q,
            jm,
        )?;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for f in fields {
            let n_src = space_norm(cs, f, &src)?;
            let n_tgt = space_norm(cs, &lifting(f, tau), &tgt)?;
            if n_src > 0.0 {
                let r = n_tgt / n_src;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        Ok((lo, hi))
    };
    let (lo, hi) = band(0)?;
    let (lo2, hi2) = band(2)?;
    let c = hi.max(1.0 / lo);
    let c2 = hi2.max(1.0 / lo2);
    let mut rep = VerificationReport::new(
        "lifting-equivalence",
        "lifting",
        format!("s={s:?} tau={tau:?} p={p} q={q}"),
    );
    rep.measured_constant = c;
    rep.refined_constant = Some(c2);
    rep.tolerance = 0.10;
    rep.pass = c.is_finite() && rel_change(c, c2) < 0.10;
    rep.detail("ratio_lo", lo);
    rep.detail("ratio_hi", hi);
    Ok(rep)
}
