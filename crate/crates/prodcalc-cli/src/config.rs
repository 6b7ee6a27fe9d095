//! Run configuration: one JSON document drives model construction, space
//! parameters, maximal parameters, suite toggles, and tolerances. Unknown
//! keys are rejected so configs stay in sync with the toolkit.

use anyhow::{bail, Context};
use prodcalc::coordspace::SpectralModel;
use prodcalc::funcspaces::{Family, Smoothness, SpaceKind, SpaceParams};
use prodcalc::hardy::MaximalParams;
use prodcalc::lpdecomp::{make_orthogonal_cutoffs, make_partition_cutoffs, CutoffSystem};
use prodcalc::product::ProductSpace;
use serde::Deserialize;
use std::sync::Arc;

/// `p`/`q` exponents: a JSON number or the string `"inf"`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Number(f64),
    Word(ExponentWord),
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum ExponentWord {
    #[serde(rename = "inf")]
    Inf,
}

impl Exponent {
    pub fn value(&self) -> f64 {
        match self {
            Exponent::Number(v) => *v,
            Exponent::Word(_) => f64::INFINITY,
        }
    }
}

fn default_exponent() -> Exponent {
    Exponent::Number(2.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Circle {
        n_modes: usize,
        n_nodes: usize,
    },
    Jacobi {
        n_modes: usize,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        n_quad: Option<usize>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> anyhow::Result<SpectralModel> {
        let model = match self {
            ModelSpec::Circle { n_modes, n_nodes } => SpectralModel::circle(*n_modes, *n_nodes),
            ModelSpec::Jacobi {
                n_modes,
                alpha,
                beta,
                n_quad,
            } => match n_quad {
                Some(q) => SpectralModel::jacobi_with_quad(*n_modes, *alpha, *beta, *q),
                None => SpectralModel::jacobi(*n_modes, *alpha, *beta),
            },
        };
        model.map_err(|e| anyhow::anyhow!("{e}"))
    }
}

fn default_model1() -> ModelSpec {
    ModelSpec::Circle {
        n_modes: 32,
        n_nodes: 128,
    }
}

fn default_model2() -> ModelSpec {
    ModelSpec::Jacobi {
        n_modes: 32,
        alpha: 0.0,
        beta: 0.0,
        n_quad: None,
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CutoffChoice {
    Partition,
    Orthogonal,
}

impl CutoffChoice {
    pub fn build(&self) -> CutoffSystem {
        match self {
            CutoffChoice::Partition => make_partition_cutoffs(),
            CutoffChoice::Orthogonal => make_orthogonal_cutoffs(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub family: String,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_flavor")]
    pub flavor: String,
    pub s: serde_json::Value,
    #[serde(default = "default_exponent")]
    pub p: Exponent,
    #[serde(default = "default_exponent")]
    pub q: Exponent,
    /// Truncation; omitted means auto-picked from the band.
    #[serde(default)]
    pub j_max: Option<[u32; 2]>,
}

fn default_kind() -> String {
    "classical".into()
}

fn default_flavor() -> String {
    "mixed".into()
}

impl SpaceSpec {
    pub fn to_params(&self, ps: &ProductSpace) -> anyhow::Result<SpaceParams> {
        let family = match self.family.as_str() {
            "B" | "b" | "besov" => Family::Besov,
            "F" | "f" | "triebel-lizorkin" => Family::TriebelLizorkin,
            other => bail!("unknown family {other:?} (expected \"B\" or \"F\")"),
        };
        let kind = match self.kind.as_str() {
            "classical" => SpaceKind::Classical,
            "nonclassical" => SpaceKind::Nonclassical,
            other => bail!("unknown kind {other:?}"),
        };
        let s = match self.flavor.as_str() {
            "mixed" => {
                let pair: [f64; 2] = serde_json::from_value(self.s.clone())
                    .context("mixed flavor needs s = [s1, s2]")?;
                Smoothness::Mixed(pair)
            }
            "ordinary" => {
                let v: f64 = serde_json::from_value(self.s.clone())
                    .context("ordinary flavor needs a scalar s")?;
                Smoothness::Ordinary(v)
            }
            other => bail!("unknown flavor {other:?}"),
        };
        let j_max = self.j_max.unwrap_or_else(|| SpaceParams::auto_j(ps));
        SpaceParams::new(family, kind, s, self.p.value(), self.q.value(), j_max)
            .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

fn default_spaces() -> Vec<SpaceSpec> {
    vec![SpaceSpec {
        family: "B".into(),
        kind: "classical".into(),
        flavor: "mixed".into(),
        s: serde_json::json!([0.0, 0.0]),
        p: Exponent::Number(2.0),
        q: Exponent::Number(2.0),
        j_max: None,
    }]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalSpec {
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_t_min_exp")]
    pub t_min_exp: i32,
    #[serde(default = "default_t_max_exp")]
    pub t_max_exp: i32,
    #[serde(default = "default_aperture")]
    pub aperture: [f64; 2],
    #[serde(default = "default_gamma")]
    pub gamma: [f64; 2],
}

fn default_r() -> f64 {
    1.0
}
fn default_t_min_exp() -> i32 {
    -6
}
fn default_t_max_exp() -> i32 {
    2
}
fn default_aperture() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_gamma() -> [f64; 2] {
    [3.0, 3.0]
}

impl Default for MaximalSpec {
    fn default() -> Self {
        MaximalSpec {
            r: default_r(),
            t_min_exp: default_t_min_exp(),
            t_max_exp: default_t_max_exp(),
            aperture: default_aperture(),
            gamma: default_gamma(),
        }
    }
}

impl MaximalSpec {
    pub fn build(&self) -> anyhow::Result<MaximalParams> {
        MaximalParams::dyadic(
            self.t_min_exp,
            self.t_max_exp,
            self.r,
            self.aperture,
            self.gamma,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteToggles {
    #[serde(default = "yes")]
    pub geometry: bool,
    #[serde(default = "yes")]
    pub calculus: bool,
    #[serde(default = "yes")]
    pub lp: bool,
    #[serde(default = "yes")]
    pub spaces: bool,
    #[serde(default = "yes")]
    pub hardy: bool,
    #[serde(default = "yes")]
    pub multipliers: bool,
}

fn yes() -> bool {
    true
}

impl Default for SuiteToggles {
    fn default() -> Self {
        SuiteToggles {
            geometry: true,
            calculus: true,
            lp: true,
            spaces: true,
            hardy: true,
            multipliers: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_mass_tol")]
    pub kernel_mass: f64,
    #[serde(default = "default_calderon_tol")]
    pub calderon: f64,
    #[serde(default = "default_stability_tol")]
    pub stability: f64,
}

fn default_mass_tol() -> f64 {
    1e-8
}
fn default_calderon_tol() -> f64 {
    1e-10
}
fn default_stability_tol() -> f64 {
    0.10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel_mass: default_mass_tol(),
            calderon: default_calderon_tol(),
            stability: default_stability_tol(),
        }
    }
}

impl Tolerances {
    fn validate(&self) -> anyhow::Result<()> {
        if self.kernel_mass <= 0.0 || self.calderon <= 0.0 || self.stability <= 0.0 {
            bail!("all tolerances must be positive");
        }
        Ok(())
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model1")]
    pub model1: ModelSpec,
    #[serde(default = "default_model2")]
    pub model2: ModelSpec,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: CutoffChoice,
    #[serde(default = "default_spaces")]
    pub spaces: Vec<SpaceSpec>,
    #[serde(default)]
    pub maximal: MaximalSpec,
    #[serde(default)]
    pub suites: SuiteToggles,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_cutoffs() -> CutoffChoice {
    CutoffChoice::Partition
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn from_path(path: &str) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing {path} (position is line:column)"))?;
        config.tolerances.validate()?;
        Ok(config)
    }

    pub fn build_product(&self) -> anyhow::Result<Arc<ProductSpace>> {
        let m1 = self.model1.build()?;
        let m2 = self.model2.build()?;
        Ok(Arc::new(ProductSpace::new(m1, m2)))
    }
}
