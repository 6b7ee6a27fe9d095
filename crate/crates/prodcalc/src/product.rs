//! Product geometry: product grid and measure, rectangle volumes, the decay
//! kernels used by every localization estimate, and the numeric verification
//! of the four integral estimates those kernels satisfy.

use crate::coordspace::SpectralModel;
use crate::report::VerificationReport;
use crate::util::rel_change;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// A point of the product space: one coordinate per factor.
pub type ProductPoint = [f64; 2];

/// Product of two spectral models with its grid weights.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    pub m1: SpectralModel,
    pub m2: SpectralModel,
    /// Dimension pair `(d_1, d_2)`.
    pub d_pair: [f64; 2],
    /// `product_weights[(m, n)] = w1[m] * w2[n]`.
    pub product_weights: DMatrix<f64>,
}

/// Scale/decay parameters of the kernels `D*` and `D`: per-axis scales
/// `delta` and decay exponents `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct DKernelParams {
    pub delta: [f64; 2],
    pub sigma: [f64; 2],
}

impl DKernelParams {
    pub fn new(delta: [f64; 2], sigma: [f64; 2]) -> Result<Self> {
        if delta.iter().any(|&d| d <= 0.0) || sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidParam(format!(
                "DKernelParams: delta {delta:?} must be positive, sigma {sigma:?} nonnegative"
            )));
        }
        Ok(DKernelParams { delta, sigma })
    }
}

impl ProductSpace {
    pub fn new(m1: SpectralModel, m2: SpectralModel) -> Self {
        let product_weights = DMatrix::from_fn(m1.nodes.len(), m2.nodes.len(), |m, n| {
            m1.weights[m] * m2.weights[n]
        });
        let d_pair = [m1.dim_d, m2.dim_d];
        ProductSpace {
            m1,
            m2,
            d_pair,
            product_weights,
        }
    }

    /// Grid dimensions `(n_nodes_1, n_nodes_2)`.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.m1.nodes.len(), self.m2.nodes.len())
    }

    /// Coefficient dimensions `(n_basis_1, n_basis_2)`.
    pub fn basis_shape(&self) -> (usize, usize) {
        (self.m1.n_basis, self.m2.n_basis)
    }

    pub fn grid_point(&self, m: usize, n: usize) -> ProductPoint {
        [self.m1.nodes[m], self.m2.nodes[n]]
    }

    pub fn total_measure(&self) -> f64 {
        self.m1.total_measure() * self.m2.total_measure()
    }

    /// Product metric `max(rho_1, rho_2)`.
    pub fn dist(&self, x: ProductPoint, y: ProductPoint) -> f64 {
        self.m1.dist(x[0], y[0]).max(self.m2.dist(x[1], y[1]))
    }

    /// Measure of the rectangle `B_1(x_1, delta_1) x B_2(x_2, delta_2)`;
    /// factorizes exactly over the coordinate volumes.
    pub fn rect_volume(&self, x: ProductPoint, delta: [f64; 2]) -> Result<f64> {
        Ok(self.m1.ball_volume(x[0], delta[0])? * self.m2.ball_volume(x[1], delta[1])?)
    }

    /// Componentwise power `V_1^g1 * V_2^g2` of the rectangle volume.
    pub fn rect_volume_pow(
        &self,
        x: ProductPoint,
        delta: [f64; 2],
        gamma: [f64; 2],
    ) -> Result<f64> {
        Ok(self.m1.ball_volume(x[0], delta[0])?.powf(gamma[0])
            * self.m2.ball_volume(x[1], delta[1])?.powf(gamma[1]))
    }

    /// Normalized decay kernel
    /// `D*(x, y) = prod_i (1 + rho_i(x_i, y_i)/delta_i)^(-sigma_i)`;
    /// takes values in `(0, 1]`, equals 1 iff `x = y`, symmetric.
    pub fn dstar(&self, params: &DKernelParams, x: ProductPoint, y: ProductPoint) -> f64 {
        let f1 = (1.0 + self.m1.dist(x[0], y[0]) / params.delta[0]).powf(-params.sigma[0]);
        let f2 = (1.0 + self.m2.dist(x[1], y[1]) / params.delta[1]).powf(-params.sigma[1]);
        f1 * f2
    }

    /// Volume-normalized kernel `D = D* / sqrt(V(x, delta) V(y, delta))`.
    pub fn dkernel(&self, params: &DKernelParams, x: ProductPoint, y: ProductPoint) -> Result<f64> {
        let vx = self.rect_volume(x, params.delta)?;
        let vy = self.rect_volume(y, params.delta)?;
        Ok(self.dstar(params, x, y) / (vx * vy).sqrt())
    }
}

/// Subsample of at most `cap` grid points, even-strided in both axes.
pub(crate) fn subsample_grid(ps: &ProductSpace, cap: usize) -> Vec<(usize, usize)> {
    let (n1, n2) = ps.grid_shape();
    let per_axis = (cap as f64).sqrt().floor().max(1.0) as usize;
    let s1 = (n1 / per_axis).max(1);
    let s2 = (n2 / per_axis).max(1);
    let mut out = Vec::new();
    let mut m = 0;
    while m < n1 {
        let mut n = 0;
        while n < n2 {
            out.push((m, n));
            n += s2;
        }
        m += s1;
    }
    out.truncate(cap);
    out
}

fn integral_dstar(ps: &ProductSpace, params: &DKernelParams, x: ProductPoint) -> f64 {
    let (n1, n2) = ps.grid_shape();
    let mut sum = 0.0;
    for m in 0..n1 {
        let f1 = (1.0 + ps.m1.dist(x[0], ps.m1.nodes[m]) / params.delta[0]).powf(-params.sigma[0]);
        for n in 0..n2 {
            let f2 =
                (1.0 + ps.m2.dist(x[1], ps.m2.nodes[n]) / params.delta[1]).powf(-params.sigma[1]);
            sum += ps.product_weights[(m, n)] * f1 * f2;
        }
    }
    sum
}

/// Numeric verification of the four integral estimates for the decay
/// kernels, each reported as the largest ratio of the integral to its
/// claimed envelope over a subsampled set of anchors, together with the
/// ratio on a once-refined grid. A check passes when the ratio is finite and
/// the refinement changes it by less than 10%.
///
/// Preconditions from the estimates themselves: `sigma > d` componentwise
/// for the first two, `sigma > 2d` for the last two, and `delta <= 1` for
/// the fourth.
pub fn verify_integral_estimates(
    ps: &ProductSpace,
    params: &DKernelParams,
) -> Result<Vec<VerificationReport>> {
    let d = ps.d_pair;
    if params.sigma[0] <= d[0] || params.sigma[1] <= d[1] {
        return Err(Error::Config(format!(
            "integral estimates need sigma > d componentwise; got sigma = {:?}, d = {:?}",
            params.sigma, d
        )));
    }
    let refined = refine(ps)?;
    let mut reports = Vec::new();

    let base = estimate_constants(ps, params)?;
    let fine = estimate_constants(&refined, params)?;
    let names = [
        "integral-estimate-1",
        "integral-estimate-2",
        "integral-estimate-3",
        "integral-estimate-4",
    ];
    let anchors = ["tech-1", "tech-2", "tech-3", "tech-4"];
    for i in 0..4 {
        let mut rep = VerificationReport::new(
            names[i],
            anchors[i],
            format!("delta={:?} sigma={:?}", params.delta, params.sigma),
        );
        match (base[i], fine[i]) {
            (Some(c), Some(cf)) => {
                rep.measured_constant = c;
                rep.refined_constant = Some(cf);
                rep.tolerance = 0.10;
                rep.pass = c.is_finite() && cf.is_finite() && rel_change(c, cf) < 0.10;
                rep.detail("rel_change", rel_change(c, cf));
            }
            _ => {
                rep.informational = true;
                rep.note("skipped: sigma below the exponent threshold for this estimate");
            }
        }
        reports.push(rep);
    }
    Ok(reports)
}

/// Per-node ball volumes at a fixed radius pair, so the estimate sweeps do
/// not recompute them per kernel evaluation.
pub(crate) struct VolumeTable {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

impl VolumeTable {
    pub fn new(ps: &ProductSpace, delta: [f64; 2]) -> Result<Self> {
        let v1 = ps
            .m1
            .nodes
            .iter()
            .map(|&x| ps.m1.ball_volume(x, delta[0]))
            .collect::<Result<_>>()?;
        let v2 = ps
            .m2
            .nodes
            .iter()
            .map(|&x| ps.m2.ball_volume(x, delta[1]))
            .collect::<Result<_>>()?;
        Ok(VolumeTable { v1, v2 })
    }

    pub fn at(&self, m: usize, n: usize) -> f64 {
        self.v1[m] * self.v2[n]
    }
}

/// Max envelope ratios for the four estimates; entries are `None` when the
/// exponent precondition of that particular estimate does not hold.
fn estimate_constants(ps: &ProductSpace, params: &DKernelParams) -> Result<[Option<f64>; 4]> {
    let d = ps.d_pair;
    let anchors = subsample_grid(ps, 16);
    let pairs: Vec<((usize, usize), (usize, usize))> = anchors
        .iter()
        .zip(anchors.iter().rev())
        .take(8)
        .map(|(&a, &b)| (a, b))
        .collect();
    let vols = VolumeTable::new(ps, params.delta)?;

    // tech-1: integral of D*(x, .) against the envelope V(x, delta).
    let mut c1: f64 = 0.0;
    for &(m, n) in &anchors {
        let x = ps.grid_point(m, n);
        let lhs = integral_dstar(ps, params, x);
        c1 = c1.max(lhs / vols.at(m, n));
    }

    // tech-2: convolution-type bound with the weakened exponent sigma - d.
    let weakened = DKernelParams::new(
        params.delta,
        [params.sigma[0] - d[0], params.sigma[1] - d[1]],
    )?;
    let mut c2: f64 = 0.0;
    for &((am, an), (bm, bn)) in &pairs {
        let x = ps.grid_point(am, an);
        let z = ps.grid_point(bm, bn);
        let mut lhs = 0.0;
        for m in 0..ps.m1.nodes.len() {
            for n in 0..ps.m2.nodes.len() {
                let y = ps.grid_point(m, n);
                lhs += ps.product_weights[(m, n)] * ps.dstar(params, x, y) * ps.dstar(params, y, z);
            }
        }
        let rhs = vols.at(am, an) * ps.dstar(&weakened, x, z);
        c2 = c2.max(lhs / rhs);
    }

    // tech-3 and tech-4 require sigma > 2d.
    let strong = params.sigma[0] > 2.0 * d[0] && params.sigma[1] > 2.0 * d[1];
    let mut c3 = None;
    let mut c4 = None;
    if strong {
        let mut worst3: f64 = 0.0;
        for &((am, an), (bm, bn)) in &pairs {
            let x = ps.grid_point(am, an);
            let z = ps.grid_point(bm, bn);
            let vx = vols.at(am, an);
            let vz = vols.at(bm, bn);
            let mut lhs = 0.0;
            for m in 0..ps.m1.nodes.len() {
                for n in 0..ps.m2.nodes.len() {
                    let y = ps.grid_point(m, n);
                    let vy = vols.at(m, n);
                    lhs += ps.product_weights[(m, n)] * ps.dstar(params, x, y) / (vx * vy).sqrt()
                        * ps.dstar(params, y, z)
                        / (vy * vz).sqrt();
                }
            }
            worst3 = worst3.max(lhs / (ps.dstar(params, x, z) / (vx * vz).sqrt()));
        }
        c3 = Some(worst3);

        if params.delta[0] <= 1.0 && params.delta[1] <= 1.0 {
            let unit = DKernelParams::new([1.0, 1.0], params.sigma)?;
            let mut worst4: f64 = 0.0;
            for &((am, an), (bm, bn)) in &pairs {
                let x = ps.grid_point(am, an);
                let z = ps.grid_point(bm, bn);
                let mut lhs = 0.0;
                for m in 0..ps.m1.nodes.len() {
                    for n in 0..ps.m2.nodes.len() {
                        let y = ps.grid_point(m, n);
                        lhs += ps.product_weights[(m, n)] / vols.at(m, n)
                            * ps.dstar(params, x, y)
                            * ps.dstar(&unit, y, z);
                    }
                }
                worst4 = worst4.max(lhs / ps.dstar(&unit, x, z));
            }
            c4 = Some(worst4);
        }
    }
    Ok([Some(c1), Some(c2), c3, c4])
}

/// Same models on a grid refined 2x per axis (mode counts unchanged).
pub(crate) fn refine(ps: &ProductSpace) -> Result<ProductSpace> {
    Ok(ProductSpace::new(
        refine_model(&ps.m1)?,
        refine_model(&ps.m2)?,
    ))
}

pub(crate) fn refine_model(m: &SpectralModel) -> Result<SpectralModel> {
    use crate::coordspace::ModelKind;
    match &m.kind {
        ModelKind::Circle => {
            let n_modes = m.n_basis.div_ceil(2);
            SpectralModel::circle(n_modes, 2 * m.nodes.len())
        }
        ModelKind::Jacobi { alpha, beta, .. } => {
            SpectralModel::jacobi_with_quad(m.n_basis, *alpha, *beta, 2 * m.nodes.len())
        }
    }
}
