//! Finite-field incidence geometry workbench.
//!
//! Exact arithmetic over `F_p` and `F_{p^2}`, multivariate polynomials,
//! bipartite-graph search kernels (`K_{s,s}` detection, induced pattern
//! search), zero-pattern and containment-pattern enumeration, and the
//! geometry of unit spheres under diagonal bilinear forms. The
//! [`constructions`] module combines these into randomized algebraic
//! constructions whose outputs are verified directly.
//!
//! Exhaustive kernels run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iteration otherwise; see [`par`].

pub mod bigraph;
pub mod constructions;
pub mod error;
pub mod geometry;
pub mod gf;
pub mod linalg;
pub mod mpoly;
pub mod par;
pub mod patterns;
pub mod rng;

pub use error::{Error, Result};

/// Default cap on exhaustive point-domain enumerations (evaluations).
pub const DEFAULT_ENUM_CAP: u64 = 100_000_000;
/// Default cap on subset probes / search nodes.
pub const DEFAULT_SEARCH_CAP: u64 = 100_000_000;

/// `base^exp` if it does not exceed `cap`.
pub(crate) fn checked_pow_cap(base: u64, exp: usize, cap: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
