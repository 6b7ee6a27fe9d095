//! Small numeric helpers shared across modules: weighted grid norms,
//! least-squares slope fits, a smooth plateau bump, and range-maximum tables
//! for the maximal sweeps.

use nalgebra::DMatrix;

/// Weighted `L^p` norm of grid values, `p` in `(0, inf]` (`p = inf` is the
/// grid maximum). Weights are the quadrature weights of the measure.
/// The common exponents bypass `powf`, which dominates on large grids.
pub fn lp_norm(values: &DMatrix<f64>, weights: &DMatrix<f64>, p: f64) -> f64 {
    assert_eq!(values.shape(), weights.shape());
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    assert!(p > 0.0, "p must be positive");
    if p == 1.0 {
        let mut sum = 0.0;
        for (v, w) in values.iter().zip(weights.iter()) {
            sum += w * v.abs();
        }
        return sum;
    }
    if p == 2.0 {
        let mut sum = 0.0;
        for (v, w) in values.iter().zip(weights.iter()) {
            sum += w * v * v;
        }
        return sum.sqrt();
    }
    let mut sum = 0.0;
    for (v, w) in values.iter().zip(weights.iter()) {
        sum += w * v.abs().powf(p);
    }
    sum.powf(1.0 / p)
}

/// `ell^q` combination of a slice of nonnegative terms; `q = inf` is the max.
pub fn lq_combine(terms: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return terms.iter().fold(0.0, |m, v| m.max(*v));
    }
    assert!(q > 0.0, "q must be positive");
    terms.iter().map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y.iter()) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// Relative change between a base and a refined measurement.
pub fn rel_change(base: f64, refined: f64) -> f64 {
    if base == 0.0 && refined == 0.0 {
        return 0.0;
    }
    (refined - base).abs() / base.abs().max(refined.abs())
}

const MOLLIFIER_PANELS: usize = 2048;

fn mollifier(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Smooth step built from the `exp(-1/(1-u^2))` mollifier: 0 at `v <= -1`,
/// 1 at `v >= 1`, strictly increasing in between. Composite Simpson rule
/// with a fixed panel count keeps evaluation deterministic and accurate to
/// well below 1e-12.
pub fn smooth_step(v: f64) -> f64 {
    if v <= -1.0 {
        return 0.0;
    }
    if v >= 1.0 {
        return 1.0;
    }
    let total = simpson(mollifier, -1.0, 1.0, MOLLIFIER_PANELS);
    simpson(mollifier, -1.0, v, MOLLIFIER_PANELS) / total
}

/// Plateau bump: 1 on `[-1, 1]`, smooth rolloff, support in `[-2, 2]`.
pub fn plateau(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        1.0 - smooth_step(2.0 * a - 3.0)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

/// Sparse table answering `max` over index ranges in O(1) after
/// O(n log n) construction. Used by the sliding-window maximal sweeps where
/// window sizes vary from node to node.
pub struct RangeMax {
    table: Vec<Vec<f64>>,
}

impl RangeMax {
    pub fn new(data: &[f64]) -> Self {
        let n = data.len();
        let levels = (usize::BITS - n.leading_zeros()) as usize;
        let mut table = Vec::with_capacity(levels);
        table.push(data.to_vec());
        let mut len = 1;
        for level in 1..levels {
            let prev = &table[level - 1];
            let mut row = Vec::with_capacity(n.saturating_sub(2 * len) + 1);
            for i in 0..=(n - 2 * len) {
                row.push(prev[i].max(prev[i + len]));
            }
            table.push(row);
            len *= 2;
        }
        RangeMax { table }
    }

    /// Maximum over the inclusive index range `[lo, hi]`.
    pub fn query(&self, lo: usize, hi: usize) -> f64 {
        debug_assert!(lo <= hi && hi < self.table[0].len());
        let len = hi - lo + 1;
        let level = (usize::BITS - len.leading_zeros() - 1) as usize;
        let block = 1usize << level;
        self.table[level][lo].max(self.table[level][hi + 1 - block])
    }
}
