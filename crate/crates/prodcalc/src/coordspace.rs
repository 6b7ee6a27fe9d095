//! Discrete spectral models of one-dimensional coordinate spaces.
//!
//! A [`SpectralModel`] packages everything the rest of the toolkit needs
//! about one factor of the product: the retained eigenpairs of the
//! nonnegative self-adjoint operator, a quadrature rule representing the
//! measure, the metric, and ball-volume/doubling machinery.
//!
//! Two models are built in:
//!
//! - the circle `[0, 2*pi)` with `L = -d^2/dtheta^2`, uniform nodes and the
//!   geodesic metric;
//! - the interval `[-1, 1]` with the Jacobi operator for the weight
//!   `(1-x)^alpha (1+x)^beta` and the arccos metric, discretized on
//!   Gauss-Jacobi nodes.
//!
//! Both discretizations are spectrally exact on the retained band: quadrature
//! integrates products of retained eigenfunctions exactly, so discrete
//! orthonormality holds to machine precision by construction.

use crate::{Error, Result};
use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

/// Which built-in space a model discretizes. Decides metric evaluation and
/// off-grid eigenfunction evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Circle,
    /// Jacobi interval; keeps the orthonormal three-term recurrence
    /// coefficients so eigenfunctions can be evaluated anywhere in `[-1, 1]`.
    Jacobi {
        alpha: f64,
        beta: f64,
        rec_a: Vec<f64>,
        rec_sqrt_b: Vec<f64>,
        total_mass: f64,
    },
}

/// One coordinate space: eigenpairs, quadrature, metric, volumes.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    pub name: String,
    pub kind: ModelKind,
    /// Doubling dimension `d` of the space.
    pub dim_d: f64,
    /// Holder exponent of the heat kernel (1 for both built-ins).
    pub holder_alpha: f64,
    /// Number of retained eigenpairs (rows of `eigenfunctions`).
    pub n_basis: usize,
    /// Nondecreasing values of `sqrt(lambda_k)`.
    pub sqrt_eigenvalues: Vec<f64>,
    /// Quadrature nodes in the coordinate domain.
    pub nodes: Vec<f64>,
    /// Positive quadrature weights representing the measure.
    pub weights: Vec<f64>,
    /// `eigenfunctions[(k, m)] = e_k(nodes[m])`, orthonormal under the
    /// weighted discrete inner product.
    pub eigenfunctions: DMatrix<f64>,
}

impl SpectralModel {
    /// Circle model: `n_modes` frequencies `0..n_modes` (so `2*n_modes - 1`
    /// eigenfunctions), `n_nodes` uniform nodes.
    ///
    /// Requires `n_nodes >= 4 * n_modes` so the rectangle rule is exact on
    /// all products of retained eigenfunctions.
    pub fn circle(n_modes: usize, n_nodes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParam(
                "circle: n_modes must be positive".into(),
            ));
        }
        if n_nodes < 4 * n_modes {
            return Err(Error::InvalidParam(format!(
                "circle: n_nodes = {n_nodes} below exactness threshold 4*n_modes = {}",
                4 * n_modes
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let nodes: Vec<f64> = (0..n_nodes)
            .map(|m| two_pi * m as f64 / n_nodes as f64)
            .collect();
        let weights = vec![two_pi / n_nodes as f64; n_nodes];
        let n_basis = 2 * n_modes - 1;
        let mut sqrt_eigenvalues = Vec::with_capacity(n_basis);
        sqrt_eigenvalues.push(0.0);
        for k in 1..n_modes {
            sqrt_eigenvalues.push(k as f64);
            sqrt_eigenvalues.push(k as f64);
        }
        let kind = ModelKind::Circle;
        let mut eigenfunctions = DMatrix::zeros(n_basis, n_nodes);
        for (m, &theta) in nodes.iter().enumerate() {
            for k in 0..n_basis {
                eigenfunctions[(k, m)] = circle_eigenfunction(k, theta);
            }
        }
        Ok(SpectralModel {
            name: "circle".into(),
            kind,
            dim_d: 1.0,
            holder_alpha: 1.0,
            n_basis,
            sqrt_eigenvalues,
            nodes,
            weights,
            eigenfunctions,
        })
    }

    /// Jacobi model with `2 * n_modes` Gauss-Jacobi quadrature nodes, which
    /// keeps every integrand the toolkit forms on the band exactly
    /// polynomial-representable.
    pub fn jacobi(n_modes: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::jacobi_with_quad(n_modes, alpha, beta, 2 * n_modes)
    }

    /// Jacobi model with an explicit quadrature size (used by the refinement
    /// guards). Requires `n_quad >= n_modes`.
    pub fn jacobi_with_quad(n_modes: usize, alpha: f64, beta: f64, n_quad: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParam(
                "jacobi: n_modes must be positive".into(),
            ));
        }
        if !(alpha > -1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "jacobi: alpha = {alpha} must exceed -1"
            )));
        }
        if !(beta > -1.0 && beta.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "jacobi: beta = {beta} must exceed -1"
            )));
        }
        if n_quad < n_modes {
            return Err(Error::InvalidParam(format!(
                "jacobi: quadrature order {n_quad} below n_modes = {n_modes}"
            )));
        }

        let rec = JacobiRecurrence::new(alpha, beta, n_quad.max(n_modes));
        let (nodes, weights) = rec.gauss_rule(n_quad);

        let mut eigenfunctions = DMatrix::zeros(n_modes, n_quad);
        for (m, &x) in nodes.iter().enumerate() {
            let vals = rec.eval_orthonormal(n_modes, x);
            for k in 0..n_modes {
                eigenfunctions[(k, m)] = vals[k];
            }
        }
        let sqrt_eigenvalues: Vec<f64> = (0..n_modes)
            .map(|n| (n as f64 * (n as f64 + alpha + beta + 1.0)).sqrt())
            .collect();

        Ok(SpectralModel {
            name: "jacobi".into(),
            kind: ModelKind::Jacobi {
                alpha,
                beta,
                rec_a: rec.a.clone(),
                rec_sqrt_b: rec.sqrt_b.clone(),
                total_mass: rec.total_mass,
            },
            dim_d: 1.0,
            holder_alpha: 1.0,
            n_basis: n_modes,
            sqrt_eigenvalues,
            nodes,
            weights,
            eigenfunctions,
        })
    }

    /// Metric of the space.
    pub fn dist(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            ModelKind::Circle => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let d = (x - y).rem_euclid(two_pi);
                d.min(two_pi - d)
            }
            ModelKind::Jacobi { .. } => {
                (x.clamp(-1.0, 1.0).acos() - y.clamp(-1.0, 1.0).acos()).abs()
            }
        }
    }

    /// Eigenfunction `e_k` at an arbitrary domain point.
    pub fn eigenfunction_at(&self, k: usize, x: f64) -> f64 {
        match &self.kind {
            ModelKind::Circle => circle_eigenfunction(k, x),
            ModelKind::Jacobi {
                rec_a,
                rec_sqrt_b,
                total_mass,
                ..
            } => eval_orthonormal_rec(rec_a, rec_sqrt_b, *total_mass, k, x),
        }
    }

    /// Diameter of the space.
    pub fn diameter(&self) -> f64 {
        match self.kind {
            ModelKind::Circle => std::f64::consts::PI,
            ModelKind::Jacobi { .. } => std::f64::consts::PI,
        }
    }

    /// Total measure of the space.
    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest retained `sqrt(lambda)`, i.e. the band radius.
    pub fn band_radius(&self) -> f64 {
        *self.sqrt_eigenvalues.last().unwrap()
    }

    /// Volume of the closed metric ball of radius `r` about `x`, computed by
    /// quadrature so the same code path serves every model.
    pub fn ball_volume(&self, x: f64, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "ball_volume: r = {r} must be positive"
            )));
        }
        Ok(self
            .nodes
            .iter()
            .zip(self.weights.iter())
            .filter(|(&y, _)| self.dist(x, y) <= r)
            .map(|(_, &w)| w)
            .sum())
    }

    /// Largest residual `|<e_k, e_l> - delta_kl|` over the retained band.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.n_basis {
            for l in k..self.n_basis {
                let mut dot = 0.0;
                for m in 0..self.nodes.len() {
                    dot +=
                        self.weights[m] * self.eigenfunctions[(k, m)] * self.eigenfunctions[(l, m)];
                }
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Doubling fit over nodes and a dyadic radius sweep.
    ///
    /// Returns `(c0, d_est)`: `c0` is the largest observed `V(x,2r)/V(x,r)`,
    /// and `d_est` the largest per-node least-squares slope of
    /// `log V(x, lambda r)` against `log lambda`. Degenerate radii (empty or
    /// saturated balls) are skipped.
    pub fn doubling_fit(&self) -> (f64, f64) {
        let diam = self.diameter();
        let spacing = self.min_node_spacing();
        let r_floor = 2.0 * spacing;
        let mut c0: f64 = 1.0;
        let mut d_est: f64 = 0.0;
        let total = self.total_measure();
        for &x in &self.nodes {
            // c0 sweep: all dyadic r with both r and 2r informative.
            let mut r = r_floor;
            while 2.0 * r <= diam {
                let v1 = self.ball_volume(x, r).unwrap();
                let v2 = self.ball_volume(x, 2.0 * r).unwrap();
                if v1 > 0.0 && v1 < total {
                    c0 = c0.max(v2 / v1);
                }
                r *= 2.0;
            }
            // slope sweep: log V(x, lambda r_floor) vs log lambda while the
            // ball stays below half the diameter.
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut lambda = 1.0;
            while lambda * r_floor <= diam / 2.0 {
                let v = self.ball_volume(x, lambda * r_floor).unwrap();
                if v > 0.0 {
                    xs.push(lambda.ln());
                    ys.push(v.ln());
                }
                lambda *= 2.0;
            }
            if xs.len() >= 3 {
                d_est = d_est.max(crate::util::ls_slope(&xs, &ys));
            }
        }
        (c0, d_est)
    }

    fn min_node_spacing(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 1..self.nodes.len() {
            best = best.min(self.dist(self.nodes[i - 1], self.nodes[i]));
        }
        best
    }
}

fn circle_eigenfunction(k: usize, theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    if k == 0 {
        1.0 / (2.0 * pi).sqrt()
    } else {
        let freq = k.div_ceil(2) as f64;
        if k % 2 == 1 {
            (freq * theta).cos() / pi.sqrt()
        } else {
            (freq * theta).sin() / pi.sqrt()
        }
    }
}

/// Three-term recurrence data for the monic Jacobi orthogonal polynomials,
/// in the form used both by the Golub-Welsch rule and by orthonormal
/// evaluation.
struct JacobiRecurrence {
    a: Vec<f64>,
    sqrt_b: Vec<f64>,
    total_mass: f64,
}

impl JacobiRecurrence {
    fn new(alpha: f64, beta: f64, n: usize) -> Self {
        // total mass 2^(a+b+1) * B(a+1, b+1)
        let ln_mass = (alpha + beta + 1.0) * std::f64::consts::LN_2
            + ln_gamma(alpha + 1.0)
            + ln_gamma(beta + 1.0)
            - ln_gamma(alpha + beta + 2.0);
        let total_mass = ln_mass.exp();

        let mut a = Vec::with_capacity(n + 1);
        let mut sqrt_b = Vec::with_capacity(n + 1);
        a.push((beta - alpha) / (alpha + beta + 2.0));
        sqrt_b.push(total_mass.sqrt());
        for kk in 1..=n {
            let k = kk as f64;
            let s = 2.0 * k + alpha + beta;
            let ak = if s == 0.0 || s + 2.0 == 0.0 {
                0.0
            } else {
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
            // b_1's general formula is 0/0 when alpha + beta = -1; the
            // cancelled form below is valid for all alpha, beta > -1.
            let bk = if kk == 1 {
                4.0 * (1.0 + alpha) * (1.0 + beta)
                    / ((2.0 + alpha + beta).powi(2) * (3.0 + alpha + beta))
            } else {
                4.0 * k * (k + alpha) * (k + beta) * (k + alpha + beta)
                    / (s * s * (s + 1.0) * (s - 1.0))
            };
            a.push(ak);
            sqrt_b.push(bk.sqrt());
        }
        JacobiRecurrence {
            a,
            sqrt_b,
            total_mass,
        }
    }

    /// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal
    /// matrix, weights come from the first eigenvector components.
    fn gauss_rule(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut jmat = DMatrix::zeros(n, n);
        for i in 0..n {
            jmat[(i, i)] = self.a[i];
            if i + 1 < n {
                jmat[(i, i + 1)] = self.sqrt_b[i + 1];
                jmat[(i + 1, i)] = self.sqrt_b[i + 1];
            }
        }
        let eigen = jmat.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let w = self.total_mass * eigen.eigenvectors[(0, j)].powi(2);
                (eigen.eigenvalues[j], w)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        pairs.into_iter().unzip()
    }

    fn eval_orthonormal(&self, count: usize, x: f64) -> Vec<f64> {
        (0..count)
            .map(|k| eval_orthonormal_rec(&self.a, &self.sqrt_b, self.total_mass, k, x))
            .collect()
    }
}

fn eval_orthonormal_rec(a: &[f64], sqrt_b: &[f64], total_mass: f64, k: usize, x: f64) -> f64 {
    // p_0 = 1/sqrt(mass); sqrt(b_{j+1}) p_{j+1} = (x - a_j) p_j - sqrt(b_j) p_{j-1}
    let mut prev = 0.0;
    let mut cur = 1.0 / total_mass.sqrt();
    for j in 0..k {
        let next = ((x - a[j]) * cur - if j > 0 { sqrt_b[j] * prev } else { 0.0 }) / sqrt_b[j + 1];
        prev = cur;
        cur = next;
    }
    cur
}
