//! Functional calculus `S(T) = Σ s_α ⊗ T^α` at strict contractions, commuting
//! row contractions and free row contractions, with von Neumann verdicts.
//!
//! Tensor order is coefficient space first: `s ⊗ t = kron(s, t)`.

use crate::error::{Error, Result};
use crate::freeseries::{mult_operator, FormalSeries, Word};
use crate::matops::{frobenius, identity, kron, op_norm, solve_square, zeros, Matrix};
use crate::realization::Colligation;

/// Row norms at or above `1 − STRICT_MARGIN` are not strict.
pub const STRICT_MARGIN: f64 = 1e-12;
/// Bound on `‖T_iT_j − T_jT_i‖_F` for a tuple to count as commuting.
pub const COMMUTING_TOL: f64 = 1e-10;
/// Certified tail bound at which series summation stops.
pub const TAIL_TOL: f64 = 1e-12;
/// `‖S(T)‖ ≤ 1 + VN_TOL` passes the von Neumann check.
pub const VN_TOL: f64 = 1e-8;
/// Multiplier or colligation norms up to `1 + CERTIFY_TOL` certify Schur.
pub const CERTIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTuple {
    pub d: usize,
    pub k: usize,
    pub blocks: Vec<Matrix>,
    pub commuting: bool,
}

impl OperatorTuple {
    /// Checks shapes, and commutators when `commuting` is claimed.
    pub fn new(blocks: Vec<Matrix>, commuting: bool) -> Result<Self> {
        let d = blocks.len();
        if d == 0 {
            return Err(Error::Validation("operator tuple is empty".into()));
        }
        let k = blocks[0].nrows();
        for (j, t) in blocks.iter().enumerate() {
            if t.nrows() != k || t.ncols() != k {
                return Err(Error::Validation(format!(
                    "T_{} is {}x{}, expected {k}x{k}",
                    j + 1,
                    t.nrows(),
                    t.ncols()
                )));
            }
        }
        let tuple = Self {
            d,
            k,
            blocks,
            commuting,
        };
        if commuting {
            let residual = tuple.commuting_residual();
            if residual > COMMUTING_TOL {
                return Err(Error::NotCommuting { residual });
            }
        }
        Ok(tuple)
    }

    pub fn single(t: Matrix) -> Result<Self> {
        Self::new(vec![t], true)
    }

    /// The `k × d·k` row `[T_1 … T_d]`.
    pub fn row(&self) -> Matrix {
        let mut r = zeros(self.k, self.d * self.k);
        for (j, t) in self.blocks.iter().enumerate() {
            r.view_mut((0, j * self.k), (self.k, self.k)).copy_from(t);
        }
        r
    }

    pub fn row_norm(&self) -> f64 {
        op_norm(&self.row())
    }

    pub fn commuting_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            for j in i + 1..self.d {
                let c = &self.blocks[i] * &self.blocks[j] - &self.blocks[j] * &self.blocks[i];
                worst = worst.max(frobenius(&c));
            }
        }
        worst
    }

    /// `T^α = T_{i_1}⋯T_{i_k}` for `α = i_1⋯i_k` in written order.
    pub fn power(&self, w: &Word) -> Matrix {
        w.0.iter()
            .fold(identity(self.k), |acc, &l| acc * &self.blocks[l - 1])
    }

    fn require_strict(&self) -> Result<RowCheck> {
        let check = row_contraction_check(self);
        if !check.strict {
            return Err(Error::NotStrict {
                row_norm: check.row_norm,
            });
        }
        Ok(check)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowCheck {
    pub row_norm: f64,
    pub strict: bool,
    pub commuting_residual: f64,
}

pub fn row_contraction_check(t: &OperatorTuple) -> RowCheck {
    let row_norm = t.row_norm();
    RowCheck {
        row_norm,
        strict: row_norm < 1.0 - STRICT_MARGIN,
        commuting_residual: t.commuting_residual(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Commuting,
    Free,
}

/// `Σ S_n ⊗ T^n` for a one-variable series at a strict contraction.
pub fn eval_at_contraction(s: &FormalSeries, t: &Matrix) -> Result<Matrix> {
    if s.d != 1 {
        return Err(Error::Validation(format!(
            "single-contraction evaluation needs d = 1, got {}",
            s.d
        )));
    }
    let tuple = OperatorTuple::single(t.clone())?;
    eval_at_row_tuple(s, &tuple, Mode::Commuting)
}

/// `Σ s_α ⊗ T^α` over the (finite) support of `s`.
pub fn eval_at_row_tuple(s: &FormalSeries, t: &OperatorTuple, mode: Mode) -> Result<Matrix> {
    if s.d != t.d {
        return Err(Error::Validation(format!(
            "series has d = {}, tuple has d = {}",
            s.d, t.d
        )));
    }
    let check = t.require_strict()?;
    match mode {
        Mode::Commuting => {
            if check.commuting_residual > COMMUTING_TOL {
                return Err(Error::NotCommuting {
                    residual: check.commuting_residual,
                });
            }
        }
        Mode::Free => {
            if s.commutative && s.d > 1 {
                return Err(Error::Validation(
                    "free evaluation needs a noncommutative series".into(),
                ));
            }
        }
    }
    let mut out = zeros(s.rows * t.k, s.cols * t.k);
    for (w, c) in &s.terms {
        out += kron(c, &t.power(w));
    }
    Ok(out)
}

/// `Λ(T)(X ⊗ I) = Σ X_j ⊗ T_j` for a `d`-fold stacked `X`.
fn stacked_contract(x: &Matrix, n: usize, t: &OperatorTuple) -> Matrix {
    let mut out = zeros(n * t.k, x.ncols() * t.k);
    for (j, tj) in t.blocks.iter().enumerate() {
        out += kron(&x.rows(j * n, n).into_owned(), tj);
    }
    out
}

fn check_colligation_tuple(u: &Colligation, t: &OperatorTuple) -> Result<()> {
    if u.d != t.d {
        return Err(Error::Validation(format!(
            "colligation has d = {}, tuple has d = {}",
            u.d, t.d
        )));
    }
    t.require_strict().map(|_| ())
}

/// Closed form `D⊗I + (C⊗I)(I − Λ(T)(A⊗I))^{-1}Λ(T)(B⊗I)` by a linear solve.
pub fn eval_colligation_resolvent(u: &Colligation, t: &OperatorTuple) -> Result<Matrix> {
    check_colligation_tuple(u, t)?;
    let i = identity(t.k);
    let mut out = kron(&u.dmat, &i);
    if u.n > 0 {
        let m = identity(u.n * t.k) - stacked_contract(&u.a, u.n, t);
        let x = solve_square(&m, &stacked_contract(&u.b, u.n, t))?;
        out += kron(&u.c, &i) * x;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SeriesEvaluation {
    pub value: Matrix,
    pub terms: usize,
    /// Certified bound on the discarded tail (infinite if none was available).
    pub tail_bound: f64,
}

/// Neumann-series evaluation `D⊗I + Σ_m (C⊗I)M^m N` with `M = Σ A_j ⊗ T_j`,
/// `N = Σ B_j ⊗ T_j`, stopped once `‖C‖‖N‖‖M‖^m/(1 − ‖M‖)` drops below
/// [`TAIL_TOL`] (or after `max_terms` when `‖M‖ ≥ 1`).
pub fn eval_colligation_series(
    u: &Colligation,
    t: &OperatorTuple,
    max_terms: usize,
) -> Result<SeriesEvaluation> {
    check_colligation_tuple(u, t)?;
    let i = identity(t.k);
    let mut value = kron(&u.dmat, &i);
    if u.n == 0 {
        return Ok(SeriesEvaluation {
            value,
            terms: 0,
            tail_bound: 0.0,
        });
    }
    let m = stacked_contract(&u.a, u.n, t);
    let nmat = stacked_contract(&u.b, u.n, t);
    let gamma = op_norm(&m);
    let scale = op_norm(&u.c) * op_norm(&nmat);
    let mut row = kron(&u.c, &i);
    let mut terms = 0;
    let mut tail_bound = f64::INFINITY;
    while terms < max_terms {
        value += &row * &nmat;
        row *= &m;
        terms += 1;
        if gamma < 1.0 {
            tail_bound = scale * gamma.powi(terms as i32) / (1.0 - gamma);
            if tail_bound < TAIL_TOL {
                break;
            }
        }
    }
    Ok(SeriesEvaluation {
        value,
        terms,
        tail_bound,
    })
}

/// A function offered to the von Neumann check.
#[derive(Debug, Clone)]
pub enum SchurFunction {
    Series(FormalSeries),
    Colligation(Colligation),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Truncated multiplier norm, or the system-matrix norm.
    pub norm: f64,
    pub certified: bool,
}

/// Series: norm of the multiplication operator truncated at
/// `degree(S) + extra_degree` (commutative series are symmetrized first).
/// Colligation: `‖U‖`.
pub fn certify_schur(f: &SchurFunction, extra_degree: usize) -> Result<Certificate> {
    let norm = match f {
        SchurFunction::Colligation(u) => u.norm(),
        SchurFunction::Series(s) => {
            let nc = if s.commutative {
                s.symmetrized()
            } else {
                s.clone()
            };
            op_norm(&mult_operator(&nc, nc.degree() + extra_degree)?)
        }
    };
    Ok(Certificate {
        norm,
        certified: norm <= 1.0 + CERTIFY_TOL,
    })
}

#[derive(Debug, Clone)]
pub struct VonNeumann {
    pub value: Matrix,
    pub norm: f64,
    pub pass: bool,
    pub certificate: Certificate,
}

/// `‖S(T)‖ ≤ 1` for a certified Schur function at a strict tuple.
pub fn von_neumann_check(f: &SchurFunction, t: &OperatorTuple, mode: Mode) -> Result<VonNeumann> {
    let certificate = certify_schur(f, 4)?;
    if !certificate.certified {
        return Err(Error::Uncertified {
            norm: certificate.norm,
        });
    }
    let value = match f {
        SchurFunction::Series(s) => eval_at_row_tuple(s, t, mode)?,
        SchurFunction::Colligation(u) => {
            if mode == Mode::Commuting && t.commuting_residual() > COMMUTING_TOL {
                return Err(Error::NotCommuting {
                    residual: t.commuting_residual(),
                });
            }
            eval_colligation_resolvent(u, t)?
        }
    };
    let norm = op_norm(&value);
    Ok(VonNeumann {
        value,
        norm,
        pass: norm <= 1.0 + VN_TOL,
        certificate,
    })
}
