//! Seeded generators for test populations: Haar-ish unitaries, coisometric
//! colligations, interior sample points and strict operator tuples.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::funccalc::OperatorTuple;
use crate::matops::{c64, identity, op_norm, zeros, Matrix, C64};
use crate::realization::{Colligation, Flavor};
use crate::tvsystems::TVSystem;

/// Radius of the closed sub-disk/sub-ball used for automated sample grids.
pub const SAMPLE_RADIUS: f64 = 0.95;

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64(re, im) / std::f64::consts::SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Unitary drawn from the Haar measure (QR of a Gaussian matrix with the
/// phases of `R`'s diagonal absorbed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    if n == 0 {
        return zeros(0, 0);
    }
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c64(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `n × k` matrix with orthonormal columns (`k ≤ n`).
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Matrix {
    assert!(k <= n);
    random_unitary(rng, n).columns(0, k).into_owned()
}

/// Coisometric colligation `X ⊕ U → X^d ⊕ Y` with the given shape; needs
/// `d·n + q ≤ n + p`. With `d·n + q = n + p` the result is unitary.
pub fn random_coisometric_colligation<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n: usize,
    p: usize,
    q: usize,
) -> Colligation {
    let rows = d * n + q;
    let cols = n + p;
    assert!(rows <= cols, "coisometric shape needs d*n + q <= n + p");
    let u = random_unitary(rng, cols).rows(0, rows).into_owned();
    let flavor = if rows == cols {
        Flavor::Unitary
    } else {
        Flavor::Coisometric
    };
    Colligation::from_system_matrix(d, n, p, q, &u, flavor).expect("generated shape is consistent")
}

/// Uniform point in the closed disk of the given radius.
pub fn random_disk_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    C64::from_polar(r, t)
}

/// Uniform point in the closed ball of `C^d` of the given radius.
pub fn random_ball_point<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<C64> {
    let g: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // Real dimension 2d.
    let r = radius * rng.random::<f64>().powf(1.0 / (2.0 * d as f64));
    g.into_iter().map(|z| z * (r / norm)).collect()
}

/// Matrix with operator norm equal to `norm`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, k: usize, norm: f64) -> Matrix {
    let g = gaussian_matrix(rng, k, k);
    let s = op_norm(&g);
    if s == 0.0 {
        return g;
    }
    g.scale(norm / s)
}

/// Noncommuting tuple with row norm `row_norm`.
pub fn random_row_tuple<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    k: usize,
    row_norm: f64,
) -> OperatorTuple {
    let row = gaussian_matrix(rng, k, d * k);
    let scale = row_norm / op_norm(&row).max(f64::MIN_POSITIVE);
    let blocks = (0..d)
        .map(|j| row.columns(j * k, k).into_owned().scale(scale))
        .collect();
    OperatorTuple::new(blocks, false).expect("square blocks")
}

/// Commuting tuple `T_j = W·diag(λ_j)·W*` with a shared unitary `W`; the row
/// norm is `max_i (Σ_j |λ_j(i)|²)^{1/2} = row_norm` exactly.
pub fn random_commuting_tuple<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    k: usize,
    row_norm: f64,
) -> OperatorTuple {
    let w = random_unitary(rng, k);
    let mut eig: Vec<Vec<C64>> = (0..k)
        .map(|_| {
            let p = random_ball_point(rng, d, 1.0);
            let n = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let target = row_norm * (0.2 + 0.8 * rng.random::<f64>());
            p.into_iter()
                .map(|z| z * (target / n.max(1e-300)))
                .collect()
        })
        .collect();
    // Pin the largest joint eigenvalue norm to `row_norm`.
    let norms: Vec<f64> = eig
        .iter()
        .map(|p| p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    for p in eig.iter_mut() {
        for z in p.iter_mut() {
            *z *= row_norm / top;
        }
    }
    let blocks = (0..d)
        .map(|j| {
            let diag = Matrix::from_fn(k, k, |r, c| if r == c { eig[r][j] } else { c64(0.0, 0.0) });
            &w * diag * w.adjoint()
        })
        .collect();
    OperatorTuple::new(blocks, true).expect("square blocks")
}

/// `k×k` nilpotent Jordan block (ones on the subdiagonal) scaled by `s`.
pub fn scaled_jordan(k: usize, s: f64) -> Matrix {
    Matrix::from_fn(k, k, |i, j| {
        if i == j + 1 {
            c64(s, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// Hermitian PSD matrix `G·G*` with `G` of the given shape.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> Matrix {
    let g = gaussian_matrix(rng, n, rank);
    &g * g.adjoint()
}

/// Random lower-triangular window with operator norm `norm`.
pub fn random_lower_triangular<R: Rng + ?Sized>(rng: &mut R, l: usize, norm: f64) -> Matrix {
    let g = Matrix::from_fn(
        l,
        l,
        |i, j| if i >= j { gaussian(rng) } else { c64(0.0, 0.0) },
    );
    let s = op_norm(&g);
    if s == 0.0 {
        return identity(l).scale(norm);
    }
    g.scale(norm / s)
}

/// Time-varying system on a window of length `l` with state dimensions drawn
/// from `0..=max_state` (`x(0)` has dimension 0). Conservative systems use a
/// constant state dimension and Haar unitaries; otherwise each `U(n)` is a
/// Gaussian matrix scaled to norm `0.9`.
pub fn random_tv_system<R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    max_state: usize,
    conservative: bool,
) -> TVSystem {
    let dims: Vec<usize> = if conservative {
        vec![rng.random_range(0..=max_state); l + 1]
    } else {
        (0..=l)
            .map(|n| {
                if n == 0 {
                    0
                } else {
                    rng.random_range(0..=max_state)
                }
            })
            .collect()
    };
    let u_seq = (0..l)
        .map(|n| {
            if conservative {
                random_unitary(rng, dims[n] + 1)
            } else {
                let g = gaussian_matrix(rng, dims[n + 1] + 1, dims[n] + 1);
                let s = op_norm(&g).max(f64::MIN_POSITIVE);
                g.scale(0.9 / s)
            }
        })
        .collect();
    TVSystem::new(dims, u_seq, conservative).expect("generated shapes are consistent")
}
