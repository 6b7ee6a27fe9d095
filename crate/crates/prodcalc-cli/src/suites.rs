//! Verification suites: each drives one module's harnesses on the
//! configured spaces and returns the reports in a fixed, deterministic
//! order.

use crate::config::RunConfig;
use anyhow::Result;
use nalgebra::DMatrix;
use prodcalc::calculus::{
    finite_speed_check, heat_kernel, kernel_of_symbol, localization_fit, synthesize, BandProfile,
    CoefField, LambdaRect, SpectralProjector, Symbol,
};
use prodcalc::coordspace::ModelKind;
use prodcalc::funcspaces::{
    cutoff_independence_check, embedding_check, EmbeddingTarget, Family, Smoothness, SpaceKind,
    SpaceParams,
};
use prodcalc::hardy::{heat_maximal, heat_profile, hp_quasinorm, strong_maximal, MaximalVariant};
use prodcalc::lpdecomp::{calderon_residual, nikolski_stability_batch, peetre_check};
use prodcalc::multipliers::{
    apply_multiplier, apply_multiplier_dyadic, lifting, lifting_equivalence_check,
    multiplier_admissible_check, multiplier_boundedness_harness, MultiplierSpec,
};
use prodcalc::product::{verify_integral_estimates, DKernelParams, ProductSpace};
use prodcalc::report::VerificationReport;
use prodcalc::testset::decaying_random_fields_in_band;
use prodcalc::util::{lp_norm, rel_change};
use prodcalc::VerificationReport as Report;
use rand::{Rng, SeedableRng};
use std::sync::Arc;
use std::time::Instant;

pub const SUITE_NAMES: [&str; 6] = [
    "geometry",
    "calculus",
    "lp",
    "spaces",
    "hardy",
    "multipliers",
];

pub fn run_suite(name: &str, config: &RunConfig) -> Result<Vec<VerificationReport>> {
    let ps = config.build_product()?;
    let start = Instant::now();
    let mut reports = match name {
        "geometry" => geometry_suite(config, &ps)?,
        "calculus" => calculus_suite(config, &ps)?,
        "lp" => lp_suite(config, &ps)?,
        "spaces" => spaces_suite(config, &ps)?,
        "hardy" => hardy_suite(config, &ps)?,
        "multipliers" => multipliers_suite(config, &ps)?,
        other => {
            anyhow::bail!("unknown suite {other:?} (expected one of {SUITE_NAMES:?} or \"all\")")
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    // spread the measured wall time over the reports for console display
    let per = elapsed / reports.len().max(1) as f64;
    for r in &mut reports {
        r.runtime_s = per;
    }
    Ok(reports)
}

fn band_fields(ps: &Arc<ProductSpace>, count: usize, seed: u64) -> Vec<CoefField> {
    let band = [ps.m1.band_radius() * 0.95, ps.m2.band_radius() * 0.95];
    decaying_random_fields_in_band(ps, count, seed, band)
}

fn geometry_suite(config: &RunConfig, ps: &Arc<ProductSpace>) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    for (label, model) in [("factor1", &ps.m1), ("factor2", &ps.m2)] {
        let (c0, d_est) = model.doubling_fit();
        let mut rep = Report::new(
            &format!("doubling-fit-{label}"),
            "doubling-d",
            format!("model={}", model.name),
        );
        rep.measured_constant = d_est;
        rep.detail("c0", c0);
        rep.detail("log2_c0", c0.log2());
        rep.tolerance = 0.05;
        rep.pass = d_est.is_finite() && d_est <= c0.log2() + 0.05;
        reports.push(rep);

        let mut ortho = Report::new(
            &format!("orthonormality-{label}"),
            "basis",
            format!("model={}", model.name),
        );
        ortho.measured_constant = model.orthonormality_residual();
        ortho.tolerance = 1e-8;
        ortho.pass = ortho.measured_constant < 1e-8;
        reports.push(ortho);
    }
    // the integral estimates hold above the true doubling exponents, which
    // exceed the nominal dimension near degenerate endpoints (e.g. the
    // Jacobi weight); calibrate sigma from the measured fits
    let sigma = [
        3.0f64.max((2.0 * ps.m1.doubling_fit().1).ceil() + 1.0),
        3.0f64.max((2.0 * ps.m2.doubling_fit().1).ceil() + 1.0),
    ];
    let params = DKernelParams::new([0.5, 0.5], sigma).map_err(to_anyhow)?;
    reports.extend(verify_integral_estimates(ps, &params).map_err(to_anyhow)?);
    let _ = config;
    Ok(reports)
}

fn calculus_suite(config: &RunConfig, ps: &Arc<ProductSpace>) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();

    // heat-kernel mass over a dyadic time sweep
    let mut markov = Report::new("heat-kernel-mass", "hol3", "t in [0.02, 4]^2 dyadic".into());
    let mut worst: f64 = 0.0;
    let mut ts: Vec<f64> = (0..8).map(|k| 0.02 * 2.0f64.powi(k)).collect();
    ts.push(4.0);
    for &t1 in &ts {
        for &t2 in &ts {
            let slice = heat_kernel(ps, [t1, t2], ps.grid_point(0, 0)).map_err(to_anyhow)?;
            worst = worst.max((slice.integral(ps) - 1.0).abs());
        }
    }
    markov.measured_constant = worst;
    markov.tolerance = config.tolerances.kernel_mass;
    markov.pass = worst < config.tolerances.kernel_mass;
    reports.push(markov);

    // kernel mass equals the symbol at the origin
    let mut mass = Report::new("kernel-mass", "int-K-1", "gaussian and bump symbols".into());
    let r = [ps.m1.band_radius() / 4.0, ps.m2.band_radius() / 4.0];
    let mut worst: f64 = 0.0;
    for sym in [Symbol::gaussian(), Symbol::plateau_bump(r)] {
        for delta in [[1.0, 1.0], [0.25, 0.5]] {
            let slice =
                kernel_of_symbol(ps, &sym, delta, ps.grid_point(0, 0)).map_err(to_anyhow)?;
            worst = worst.max((slice.integral(ps) - sym.eval(0.0, 0.0)).abs());
        }
    }
    mass.measured_constant = worst;
    mass.tolerance = config.tolerances.kernel_mass;
    mass.pass = worst < config.tolerances.kernel_mass;
    reports.push(mass);

    // projector algebra on seeded random rectangles
    let mut proj = Report::new(
        "projector-algebra",
        "prop-E",
        "50 random rectangle pairs".into(),
    );
    let band = ps.m1.band_radius().powi(2).max(ps.m2.band_radius().powi(2)) + 1.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut ok = true;
    for _ in 0..50 {
        let mut rect = || {
            let a = rng.gen_range(0.0..band);
            let b = rng.gen_range(0.0..band);
            let c = rng.gen_range(0.0..band);
            let d = rng.gen_range(0.0..band);
            LambdaRect::new([a.min(b), c.min(d)], [a.max(b), c.max(d)]).unwrap()
        };
        let s = rect();
        let t = rect();
        let es = SpectralProjector::new(ps, &[s]);
        let et = SpectralProjector::new(ps, &[t]);
        ok &= es.compose(&es).mask() == es.mask();
        let inter: Vec<LambdaRect> = s.intersect(&t).into_iter().collect();
        ok &= es.compose(&et).mask() == SpectralProjector::new(ps, &inter).mask();
    }
    proj.measured_constant = if ok { 0.0 } else { 1.0 };
    proj.tolerance = 0.5;
    proj.pass = ok;
    reports.push(proj);

    // localization fit of the smooth bump; slope fits need room between
    // the bump support and the band edge
    if ps.m1.band_radius() >= 16.0 && ps.m2.band_radius() >= 16.0 {
        reports.push(
            localization_fit(ps, &Symbol::plateau_bump(r), [1.0, 1.0], [3.0, 3.0])
                .map_err(to_anyhow)?,
        );
    } else {
        let mut rep = localization_fit(ps, &Symbol::plateau_bump(r), [1.0, 1.0], [3.0, 3.0])
            .map_err(to_anyhow)?;
        rep.informational = true;
        rep.note("band radius below 16 per axis; slope fits under-resolved, informational");
        reports.push(rep);
    }

    // finite speed needs a circle first factor and enough band for the
    // truncation floor to clear the tolerance
    if matches!(ps.m1.kind, ModelKind::Circle) {
        // t = 0.5 keeps the truncation floor below tolerance at desk-scale
        // band sizes while the support radius 2 t stays inside the circle
        let mut rep =
            finite_speed_check(ps, &BandProfile::fejer(1.0, 4), [0.5, 0.5]).map_err(to_anyhow)?;
        if ps.m1.band_radius() < 24.0 {
            rep.informational = true;
            rep.note("first-factor band below 24; truncation floor dominates, informational");
        }
        reports.push(rep);
    } else {
        let mut skip = Report::new("finite-speed", "finite-speed-2", "skipped".into());
        skip.informational = true;
        skip.measured_constant = 0.0;
        skip.note("first factor is not a circle; propagation-speed normalization unavailable");
        reports.push(skip);
    }
    Ok(reports)
}

fn lp_suite(config: &RunConfig, ps: &Arc<ProductSpace>) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    let cs = prodcalc::lpdecomp::make_partition_cutoffs();

    // Calderon reproduction on the band
    let fields = band_fields(ps, 20, config.seed);
    let j = SpaceParams::auto_j(ps);
    let mut worst: f64 = 0.0;
    for f in &fields {
        worst = worst.max(calderon_residual(&cs, f, j).map_err(to_anyhow)?);
    }
    let mut cald = Report::new(
        "calderon-reproduction",
        "cald-1",
        format!("J={j:?}, 20 fields"),
    );
    cald.measured_constant = worst;
    cald.tolerance = config.tolerances.calderon;
    cald.pass = worst < config.tolerances.calderon;
    reports.push(cald);

    // Nikolski sweep needs circle factors and a grid resolving 1/t
    let circles =
        matches!(ps.m1.kind, ModelKind::Circle) && matches!(ps.m2.kind, ModelKind::Circle);
    if circles {
        // the sweep exponent is capped by both the grid resolution (the
        // volume radius 1/t must span several nodes) and the retained band
        let spacing = 2.0 * std::f64::consts::PI / ps.m1.nodes.len() as f64;
        let by_spacing = (1.0 / (8.0 * spacing)).log2().floor() as i64;
        let freqs = (ps.m1.n_basis / 2).min(ps.m2.n_basis / 2) as f64;
        let by_band = (freqs - 1.0).max(2.0).log2().floor() as i64;
        let max_exp = by_spacing.min(by_band).clamp(1, 5) as u32;
        let exps: Vec<u32> = (0..=max_exp).collect();
        let combos = [
            (1.0, f64::INFINITY, [0u32, 0u32]),
            (2.0, f64::INFINITY, [1, 1]),
        ];
        for mut rep in nikolski_stability_batch(ps, &exps, &combos).map_err(to_anyhow)? {
            if max_exp < 3 {
                rep.informational = true;
                rep.note("grid too coarse for a long sweep; informational");
            }
            reports.push(rep);
        }
    } else {
        let mut skip = Report::new("nikolski-sweep", "Band-1", "skipped".into());
        skip.informational = true;
        skip.measured_constant = 0.0;
        skip.note("saturating field families need circle factors");
        reports.push(skip);
    }

    // Peetre maximal control on a band field
    let t = [
        4.0f64.min(ps.m1.band_radius()),
        4.0f64.min(ps.m2.band_radius()),
    ];
    let g = decaying_random_fields_in_band(ps, 1, config.seed, t).remove(0);
    reports.push(peetre_check(&g, t, [0.0, 0.0], [3.0, 3.0], 1.0).map_err(to_anyhow)?);
    Ok(reports)
}

fn spaces_suite(config: &RunConfig, ps: &Arc<ProductSpace>) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    let csa = prodcalc::lpdecomp::make_partition_cutoffs();
    let csb = prodcalc::lpdecomp::make_orthogonal_cutoffs();
    let fields = band_fields(ps, 20, config.seed);

    for spec in &config.spaces {
        let params = spec.to_params(ps)?;
        reports.push(cutoff_independence_check(&csa, &csb, &fields, &params).map_err(to_anyhow)?);
    }

    // embedding into Lebesgue for positive smoothness
    let src = SpaceParams::new(
        Family::Besov,
        SpaceKind::Classical,
        Smoothness::Mixed([1.0, 1.0]),
        2.0,
        2.0,
        SpaceParams::auto_j(ps),
    )
    .map_err(to_anyhow)?;
    reports.push(
        embedding_check(&csa, &fields, &src, &EmbeddingTarget::Lebesgue(2.0)).map_err(to_anyhow)?,
    );

    // nonclassical balance embedding: s/d - 1/p = s'/d - 1/r with
    // (s, p) = (d, 1) and (s', r) = (d/2, 2). The dyadic volume weights
    // V(x, 2^-j) are only meaningful down to the node spacing, so the
    // truncation and the test band are capped at the resolvable level.
    let resolvable = |m: &prodcalc::SpectralModel| -> u32 {
        let mut spacing = 0.0f64;
        for i in 1..m.nodes.len() {
            spacing = spacing.max(m.dist(m.nodes[i - 1], m.nodes[i]));
        }
        (1.0 / (2.0 * spacing)).log2().floor().max(1.0) as u32
    };
    let j_res = resolvable(&ps.m1).min(resolvable(&ps.m2));
    let j_res = [j_res, j_res];
    let band = 2.0f64.powi(j_res[0] as i32 - 1) * 0.95;
    let banded = decaying_random_fields_in_band(ps, 12, config.seed, [band, band]);
    let src = SpaceParams::new(
        Family::Besov,
        SpaceKind::Nonclassical,
        Smoothness::Mixed([ps.d_pair[0], ps.d_pair[1]]),
        1.0,
        1.0,
        j_res,
    )
    .map_err(to_anyhow)?;
    let tgt = SpaceParams::new(
        Family::Besov,
        SpaceKind::Nonclassical,
        Smoothness::Mixed([ps.d_pair[0] / 2.0, ps.d_pair[1] / 2.0]),
        2.0,
        2.0,
        j_res,
    )
    .map_err(to_anyhow)?;
    reports.push(
        embedding_check(&csa, &banded, &src, &EmbeddingTarget::Space(tgt)).map_err(to_anyhow)?,
    );
    Ok(reports)
}

fn hardy_suite(config: &RunConfig, ps: &Arc<ProductSpace>) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    let params = config.maximal.build()?;
    let band = [
        (ps.m1.band_radius() / 4.0).max(1.0),
        (ps.m2.band_radius() / 4.0).max(1.0),
    ];
    let fields = decaying_random_fields_in_band(ps, 4, config.seed, band);

    // ordering chain, exact on the grid
    let phi = heat_profile();
    let mut chain = Report::new(
        "maximal-ordering",
        "relationship",
        format!("{} fields", fields.len()),
    );
    let mut ok = true;
    for f in &fields {
        let m = heat_maximal(ps, f, &phi, &params, MaximalVariant::Plain).map_err(to_anyhow)?;
        let ms = heat_maximal(ps, f, &phi, &params, MaximalVariant::Aperture).map_err(to_anyhow)?;
        let mss = heat_maximal(ps, f, &phi, &params, MaximalVariant::Peetre).map_err(to_anyhow)?;
        let bound = (1.0 + params.aperture[0]).powf(params.gamma[0])
            * (1.0 + params.aperture[1]).powf(params.gamma[1]);
        for i in 0..m.len() {
            ok &= m[i] <= ms[i] + 1e-12 && ms[i] <= bound * mss[i] + 1e-12;
        }
    }
    chain.measured_constant = if ok { 0.0 } else { 1.0 };
    chain.tolerance = 0.5;
    chain.pass = ok;
    reports.push(chain);

    // strong maximal domination
    let mut dom = Report::new(
        "strong-maximal-domination",
        "Max1",
        "pointwise M f >= |f|".into(),
    );
    let f = synthesize(&fields[0]);
    let m = strong_maximal(ps, &f, params.r).map_err(to_anyhow)?;
    let ok = m.iter().zip(f.iter()).all(|(v, x)| *v >= x.abs());
    dom.measured_constant = if ok { 0.0 } else { 1.0 };
    dom.tolerance = 0.5;
    dom.pass = ok;
    reports.push(dom);

    // H^2 = L^2 band with t-grid density guard
    let mut h2 = Report::new(
        "h2-equals-l2",
        "Hp-p-big",
        "hp/l2 band on the test set".into(),
    );
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for f in &fields {
        let hp = hp_quasinorm(ps, f, 2.0, &params).map_err(to_anyhow)?;
        let l2 = lp_norm(&synthesize(f), &ps.product_weights, 2.0);
        lo = lo.min(hp / l2);
        hi = hi.max(hp / l2);
    }
    let mut hi_dense: f64 = 0.0;
    let dense = params.densified();
    for f in &fields {
        let hp = hp_quasinorm(ps, f, 2.0, &dense).map_err(to_anyhow)?;
        let l2 = lp_norm(&synthesize(f), &ps.product_weights, 2.0);
        hi_dense = hi_dense.max(hp / l2);
    }
    h2.measured_constant = hi;
    h2.refined_constant = Some(hi_dense);
    h2.detail("ratio_lo", lo);
    h2.tolerance = config.tolerances.stability;
    h2.pass = lo >= 0.98 && rel_change(hi, hi_dense) < config.tolerances.stability;
    h2.note("lower bound carries the finest-t 2% slack");
    h2.note("compact-model regime: coordinate measures finite, equivalence exploratory");
    reports.push(h2);

    // maximal equivalence report (includes the grand-maximal surrogate)
    reports.push(
        prodcalc::hardy::hp_equivalence_report(ps, &fields[..2.min(fields.len())], 1.0, &params)
            .map_err(to_anyhow)?,
    );
    Ok(reports)
}

fn multipliers_suite(
    config: &RunConfig,
    ps: &Arc<ProductSpace>,
) -> Result<Vec<VerificationReport>> {
    let mut reports = Vec::new();
    let cs = config.cutoffs.build();
    let band = [ps.m1.band_radius(), ps.m2.band_radius()];
    let fields = band_fields(ps, 8, config.seed);

    // admissibility scans: power weight passes, linear growth fails
    let m_tau = MultiplierSpec::power_weight([1.0, 1.0]);
    let scan = multiplier_admissible_check(&m_tau, [1.0, 1.0], [3, 3], band).map_err(to_anyhow)?;
    reports.push(scan);
    let linear = Symbol::from_fn("linear", true, |l1, _| l1.abs());
    let scan_linear =
        multiplier_admissible_check(&linear, [0.0, 0.0], [1, 1], band).map_err(to_anyhow)?;
    let mut detect = Report::new(
        "multiplier-growth-detection",
        "multibounds",
        "linear symbol must fail the scan".into(),
    );
    detect.measured_constant = scan_linear.measured_constant;
    detect.tolerance = 0.5;
    detect.pass = !scan_linear.pass;
    reports.push(detect);

    // boundedness of the power weight
    let (spec, _) = MultiplierSpec::checked(
        MultiplierSpec::power_weight([1.0, 1.0]),
        [1.0, 1.0],
        [3, 3],
        band,
    )
    .map_err(to_anyhow)?;
    for family in [Family::Besov, Family::TriebelLizorkin] {
        reports.push(
            multiplier_boundedness_harness(
                &spec,
                &cs,
                &fields,
                [0.0, 0.0],
                2.0,
                2.0,
                family,
                SpaceKind::Classical,
            )
            .map_err(to_anyhow)?,
        );
    }

    // dyadic-series evaluation agrees with direct multiplication
    let mut series = Report::new(
        "multiplier-dyadic-series",
        "def-mL",
        "direct vs series".into(),
    );
    let j = SpaceParams::auto_j(ps);
    let mut worst: f64 = 0.0;
    for f in fields.iter().take(3) {
        let direct = apply_multiplier(&spec, f);
        let via_series = apply_multiplier_dyadic(&spec, &cs, f, j);
        worst = worst.max((&direct.coefs - &via_series.coefs).abs().max());
    }
    series.measured_constant = worst;
    series.tolerance = 1e-12;
    series.pass = worst < 1e-12;
    reports.push(series);

    // lifting: exact inverse and the norm-equivalence band
    let mut inverse = Report::new("lifting-inverse", "lifting", "tau then -tau".into());
    let mut worst: f64 = 0.0;
    for f in fields.iter().take(3) {
        let round = lifting(&lifting(f, [1.0, 1.0]), [-1.0, -1.0]);
        worst = worst.max((&round.coefs - &f.coefs).abs().max());
    }
    inverse.measured_constant = worst;
    inverse.tolerance = 1e-12;
    inverse.pass = worst < 1e-12;
    reports.push(inverse);

    reports.push(
        lifting_equivalence_check(&cs, &fields, [1.0, 1.0], [1.0, 1.0], 2.0, 2.0)
            .map_err(to_anyhow)?,
    );
    Ok(reports)
}

fn to_anyhow(e: prodcalc::Error) -> anyhow::Error {
    anyhow::anyhow!("{e}")
}

/// Grid values of a single mode, a member of the seeded random family, or a
/// sampled-values JSON file.
pub fn resolve_function(
    ps: &Arc<ProductSpace>,
    spec: &str,
    seed: u64,
) -> Result<(String, CoefField)> {
    let tokens: Vec<&str> = spec.split_whitespace().collect();
    match tokens.as_slice() {
        ["mode", k, l] => {
            let k: usize = k.parse()?;
            let l: usize = l.parse()?;
            let cf = CoefField::mode(ps, k, l).map_err(to_anyhow)?;
            Ok((format!("mode-{k}-{l}"), cf))
        }
        ["random", n] => {
            let n: usize = n.parse()?;
            let band = [ps.m1.band_radius() * 0.95, ps.m2.band_radius() * 0.95];
            let mut fields = decaying_random_fields_in_band(ps, n + 1, seed, band);
            Ok((format!("random-{seed}-{n}"), fields.remove(n)))
        }
        ["file", path] => {
            let text = std::fs::read_to_string(path)?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
            let (n1, n2) = ps.grid_shape();
            if rows.len() != n1 || rows.iter().any(|r| r.len() != n2) {
                anyhow::bail!("sampled values must form a {n1} x {n2} grid");
            }
            let values = DMatrix::from_fn(n1, n2, |m, n| rows[m][n]);
            let cf = prodcalc::calculus::analyze(ps, &values).map_err(to_anyhow)?;
            Ok((format!("file-{path}"), cf))
        }
        _ => anyhow::bail!(
            "function spec {spec:?} not recognized (expected \"mode K L\", \"random N\", or \"file PATH\")"
        ),
    }
}
