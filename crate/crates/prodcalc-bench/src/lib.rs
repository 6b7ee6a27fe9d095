//! Shared fixtures for the benchmark targets.

use prodcalc::coordspace::SpectralModel;
use prodcalc::product::ProductSpace;
use std::sync::Arc;

/// Desk-scale circle product: 32 modes and 128 nodes per axis.
pub fn desk_circle_product() -> Arc<ProductSpace> {
    let m = SpectralModel::circle(32, 128).expect("desk model");
    Arc::new(ProductSpace::new(m.clone(), m))
}

/// Mixed product with a Jacobi second factor.
pub fn desk_mixed_product() -> Arc<ProductSpace> {
    let m1 = SpectralModel::circle(32, 128).expect("desk model");
    let m2 = SpectralModel::jacobi(32, 0.0, 0.0).expect("desk model");
    Arc::new(ProductSpace::new(m1, m2))
}
