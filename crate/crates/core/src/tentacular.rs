//! Split quadratic Hamiltonians `H = ½ xᵀ (A0 ⊕ A1) x - 1` and their
//! structural checks.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hormander::{BlockKind, NormalForm};
use crate::orbits::williamson_frequencies;
use crate::symlin::{general_eigenvalues, hamiltonian_generator, symplectic_direct_sum, SymMatrix, Tolerances};

/// `A = A0 ⊕ A1` on `T*R^k × T*R^{n-k}`, with `A0` positive definite and
/// `J A1` hyperbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    pub n: usize,
    pub k: usize,
    pub a0: SymMatrix,
    pub a1: SymMatrix,
    /// Williamson frequencies of `A0`, ascending, when known exactly.
    pub frequencies: Option<Vec<f64>>,
}

impl QuadraticHamiltonian {
    pub fn new(a0: SymMatrix, a1: SymMatrix) -> Self {
        let k = a0.half_dim();
        let n = k + a1.half_dim();
        Self { n, k, a0, a1, frequencies: None }
    }

    /// `A0 = diag(μ_1, .., μ_k, μ_1, .., μ_k)`. The frequencies are kept and
    /// used directly wherever resonances are counted.
    pub fn from_frequencies(frequencies: &[f64], a1: SymMatrix) -> Result<Self> {
        if let Some(bad) = frequencies.iter().find(|&&mu| !(mu.is_finite() && mu > 0.0)) {
            return Err(Error::DimensionMismatch(format!("frequency {bad} is not a positive number")));
        }
        let mut mu = frequencies.to_vec();
        mu.sort_by(f64::total_cmp);
        let diag: Vec<f64> = mu.iter().chain(mu.iter()).copied().collect();
        let a0 = SymMatrix::from_diagonal(&diag)?;
        let mut h = Self::new(a0, a1);
        h.frequencies = Some(mu);
        Ok(h)
    }

    /// `A0 ⊕ A1` in the standard coordinates of `T*R^n`.
    pub fn assembled(&self) -> SymMatrix {
        SymMatrix::new(symplectic_direct_sum(&[self.a0.matrix(), self.a1.matrix()]))
            .expect("direct sum of symmetric matrices is symmetric")
    }

    /// The stored frequencies, or the Williamson frequencies of `A0`.
    pub fn frequencies(&self, tol: &Tolerances) -> Result<Vec<f64>> {
        match &self.frequencies {
            Some(mu) => Ok(mu.clone()),
            None => williamson_frequencies(&self.a0, tol),
        }
    }

    pub fn validate(&self, tol: &Tolerances) -> ValidationReport {
        validate(self, tol)
    }

    /// Fails with the report unless every structural check passes.
    pub fn ensure_valid(&self, tol: &Tolerances) -> Result<()> {
        let report = self.validate(tol);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidHamiltonian(Box::new(report)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub positive_definite: bool,
    pub hyperbolic: bool,
    pub k_in_range: bool,
    pub frequencies_consistent: bool,
    /// Eigenvalues of `A0` that are not safely positive.
    pub a0_offending: Vec<f64>,
    /// Eigenvalues `[re, im]` of `J A1` too close to the imaginary axis.
    pub a1_offending: Vec<[f64; 2]>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.positive_definite && self.hyperbolic && self.k_in_range && self.frequencies_consistent
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |b: bool| if b { "ok" } else { "FAILED" };
        write!(
            f,
            "A0 positive definite: {}; J A1 hyperbolic: {}; 1 <= k <= n-1: {}; frequencies: {}",
            mark(self.positive_definite),
            mark(self.hyperbolic),
            mark(self.k_in_range),
            mark(self.frequencies_consistent)
        )?;
        if !self.a0_offending.is_empty() {
            write!(f, "; offending A0 eigenvalues {:?}", self.a0_offending)?;
        }
        if !self.a1_offending.is_empty() {
            write!(f, "; offending J A1 eigenvalues {:?}", self.a1_offending)?;
        }
        Ok(())
    }
}

/// Checks positive definiteness of `A0`, hyperbolicity of `J A1` and the
/// range of `k`. Hyperbolicity requires `|Re λ| > eig_cluster · ‖A1‖` for all
/// eigenvalues of `J A1`.
pub fn validate(h: &QuadraticHamiltonian, tol: &Tolerances) -> ValidationReport {
    let eigs0 = h.a0.eigenvalues();
    let scale0 = eigs0.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let a0_offending: Vec<f64> = eigs0.iter().copied().filter(|&e| e <= tol.rank_cut * scale0).collect();
    let positive_definite = h.k >= 1 && a0_offending.is_empty();

    let a1_offending: Vec<[f64; 2]> = if h.a1.dim() == 0 {
        Vec::new()
    } else {
        let cut = tol.eig_cluster * h.a1.spectral_norm();
        match general_eigenvalues(&hamiltonian_generator(&h.a1)) {
            Ok(eigs) => eigs.iter().filter(|z| z.re.abs() <= cut).map(|z| [z.re, z.im]).collect(),
            // nothing can be certified without a spectrum
            Err(_) => vec![[f64::NAN, f64::NAN]],
        }
    };
    let hyperbolic = a1_offending.is_empty();
    let k_in_range = h.k >= 1 && h.k < h.n;

    let frequencies_consistent = match (&h.frequencies, positive_definite) {
        (None, _) => true,
        (Some(mu), true) => match williamson_frequencies(&h.a0, tol) {
            Ok(w) => {
                let scale = w.iter().fold(1.0f64, |a, &b| a.max(b));
                mu.len() == w.len()
                    && mu.iter().zip(&w).all(|(x, y)| (x - y).abs() <= 1e3 * tol.eig_cluster * scale)
            }
            Err(_) => false,
        },
        (Some(_), false) => false,
    };

    ValidationReport { positive_definite, hyperbolic, k_in_range, frequencies_consistent, a0_offending, a1_offending }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every block meets one of the spectral sufficient conditions.
    SufficientMet,
    /// Some block meets none of them; tentacularity is then undecided.
    SufficientNotMet,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::SufficientMet => write!(f, "strongly tentacular (sufficient conditions met)"),
            Verdict::SufficientNotMet => write!(f, "sufficient conditions not met"),
        }
    }
}

/// Which of the three spectral conditions applies to a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TentacularCase {
    /// `m = 1`, `Re λ ≠ 0`.
    I,
    /// `m = 2`, `|Re λ| > 1/√2`.
    Ii,
    /// `m > 2`, `|Re λ| > 2`.
    Iii,
}

impl TentacularCase {
    pub fn for_size(m: usize) -> Self {
        match m {
            1 => TentacularCase::I,
            2 => TentacularCase::Ii,
            _ => TentacularCase::Iii,
        }
    }

    pub fn threshold(self) -> f64 {
        match self {
            TentacularCase::I => 0.0,
            TentacularCase::Ii => std::f64::consts::FRAC_1_SQRT_2,
            TentacularCase::Iii => 2.0,
        }
    }
}

impl fmt::Display for TentacularCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TentacularCase::I => "i",
            TentacularCase::Ii => "ii",
            TentacularCase::Iii => "iii",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockTrace {
    pub kind: BlockKind,
    pub m: usize,
    pub lambda: [f64; 2],
    pub case: TentacularCase,
    pub passes: bool,
    /// `|Re λ|` minus the threshold of the case; positive when passing.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TentacularVerdict {
    pub verdict: Verdict,
    pub trace: Vec<BlockTrace>,
}

/// Applies the spectral sufficient conditions block by block.
pub fn tentacular_check(nf1: &NormalForm) -> TentacularVerdict {
    let trace: Vec<BlockTrace> = nf1
        .blocks
        .iter()
        .map(|b| {
            let case = TentacularCase::for_size(b.m);
            let re = b.lambda.re.abs();
            let margin = re - case.threshold();
            BlockTrace {
                kind: b.kind,
                m: b.m,
                lambda: [b.lambda.re, b.lambda.im],
                case,
                passes: b.kind != BlockKind::C && margin > 0.0,
                margin,
            }
        })
        .collect();
    let verdict = if trace.iter().all(|t| t.passes) { Verdict::SufficientMet } else { Verdict::SufficientNotMet };
    TentacularVerdict { verdict, trace }
}
