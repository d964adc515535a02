use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution as _, Normal, StandardNormal, Uniform};

use super::NumericsError;

/// Seeded generator identified by `(seed, stream)`.
///
/// Streams share the seed but never overlap, so independent tasks
/// (replications, covariates) each take their own stream id.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh source on a stream derived from this one and `id`.
    pub fn substream(&self, id: u64) -> Self {
        Self::new(
            self.seed,
            splitmix(self.stream ^ splitmix(id.wrapping_add(1))),
        )
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, a: f64, b: f64) -> f64 {
        self.rng.gen_range(a..b)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.rng.gen_range(0..len)
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform {
        a: f64,
        b: f64,
    },
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// `|X|` componentwise with `X ~ N(mean, covariance)`.
    FoldedNormal {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
}

/// Draws `count` variates. Scalar distributions yield one-element rows.
pub fn sample(
    dist: &Distribution,
    rng: &mut RandomSource,
    count: usize,
) -> Result<Vec<Vec<f64>>, NumericsError> {
    let bad = |msg: String| Err(NumericsError::InvalidParameter(msg));
    match dist {
        Distribution::Uniform { a, b } => {
            if !(b > a) || !a.is_finite() || !b.is_finite() {
                return bad(format!("uniform({a}, {b})"));
            }
            let u = Uniform::new(*a, *b);
            Ok((0..count).map(|_| vec![u.sample(rng.rng())]).collect())
        }
        Distribution::Normal { mu, sigma } => {
            let Ok(d) = Normal::new(*mu, *sigma) else {
                return bad(format!("normal({mu}, {sigma})"));
            };
            if !(*sigma > 0.0) {
                return bad(format!("normal({mu}, {sigma})"));
            }
            Ok((0..count).map(|_| vec![d.sample(rng.rng())]).collect())
        }
        Distribution::Beta { alpha, beta } => {
            let Ok(d) = Beta::new(*alpha, *beta) else {
                return bad(format!("beta({alpha}, {beta})"));
            };
            Ok((0..count).map(|_| vec![d.sample(rng.rng())]).collect())
        }
        Distribution::FoldedNormal { mean, covariance } => {
            let factor = covariance_factor(covariance)?;
            if factor.nrows() != mean.len() {
                return bad(format!(
                    "mean has {} entries, covariance is {}",
                    mean.len(),
                    factor.nrows()
                ));
            }
            let k = mean.len();
            Ok((0..count)
                .map(|_| {
                    let z = DVector::from_fn(k, |_, _| rng.standard_normal());
                    let x = &factor * z;
                    x.iter().zip(mean).map(|(v, m)| (v + m).abs()).collect()
                })
                .collect())
        }
    }
}

/// Returns `L` with `L Lᵀ = Σ` for a symmetric positive semidefinite `Σ`.
pub fn covariance_factor(covariance: &[Vec<f64>]) -> Result<DMatrix<f64>, NumericsError> {
    let k = covariance.len();
    if covariance.iter().any(|r| r.len() != k) {
        return Err(NumericsError::InvalidParameter(
            "covariance is not square".into(),
        ));
    }
    let m = DMatrix::from_fn(k, k, |i, j| covariance[i][j]);
    let asym = (&m - m.transpose()).abs().max();
    if asym > 1e-9 * (1.0 + m.abs().max()) {
        return Err(NumericsError::InvalidParameter(
            "covariance is not symmetric".into(),
        ));
    }
    let eig = SymmetricEigen::new(m);
    if eig
        .eigenvalues
        .iter()
        .any(|&l| l < -1e-9 * (1.0 + eig.eigenvalues.abs().max()))
    {
        return Err(NumericsError::InvalidParameter(
            "covariance is not positive semidefinite".into(),
        ));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    Ok(eig.eigenvectors * sqrt)
}

/// Symmetrizes `m` and clips negative eigenvalues to zero.
pub fn nearest_psd(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = m.len();
    let sym = DMatrix::from_fn(k, k, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(sym);
    let clipped = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0)));
    let p = &eig.eigenvectors * clipped * eig.eigenvectors.transpose();
    (0..k)
        .map(|i| (0..k).map(|j| 0.5 * (p[(i, j)] + p[(j, i)])).collect())
        .collect()
}
