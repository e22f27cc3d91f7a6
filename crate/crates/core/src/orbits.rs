//! Critical values of the Rabinowitz action functional and the Morse–Bott
//! families of closed orbits on `Σ = H⁻¹(0)` and `Σ0 = H0⁻¹(0)`.
//!
//! A closed orbit of period `η` exists exactly when `η μ_l ∈ 2πZ` for some
//! frequency `μ_l`, and its action equals `η`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::czindex::{HalfInt, TransverseIndexer};
use crate::error::{Error, Result};
use crate::symlin::{
    fixed_space_dim_in, general_eigenvalues, hamiltonian_generator, kernel_dim, matrix_exp, spectrum_with_jordan, Spectrum, SymMatrix,
    Tolerances,
};
use crate::tentacular::QuadraticHamiltonian;

/// Largest number of critical values a single window may contain.
pub const CENSUS_CAP: usize = 10_000;

/// Positive imaginary parts of the eigenvalues of `J A0`, ascending.
pub fn williamson_frequencies(a0: &SymMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    let inertia = a0.inertia(tol);
    if a0.dim() == 0 || inertia.positive != a0.dim() {
        return Err(Error::NotPositiveDefinite);
    }
    let eigs = general_eigenvalues(&hamiltonian_generator(a0))?;
    let mut mu: Vec<f64> = eigs.iter().filter(|z| z.im > 0.0).map(|z| z.im).collect();
    mu.sort_by(f64::total_cmp);
    if mu.len() != a0.half_dim() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(mu)
}

/// Closed interval of actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionWindow {
    pub lo: f64,
    pub hi: f64,
}

impl ActionWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `[-4π/μ_min - ε, 4π/μ_min + ε]`, enough for two full turns of the
    /// slowest oscillator on either side of zero.
    pub fn default_for(frequencies: &[f64]) -> Result<Self> {
        let mu_min = frequencies.iter().copied().fold(f64::INFINITY, f64::min);
        let r = 2.0 * TAU / mu_min + 1e-6;
        Self::new(-r, r)
    }
}

/// Sorted critical values `(∪_l (2π/μ_l) Z) ∩ [lo, hi]`; values closer than
/// `crossing` are merged.
pub fn crit_values(mu: &[f64], w: &ActionWindow, tol: &Tolerances) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for &m in mu {
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::DimensionMismatch(format!("frequency {m} is not a positive number")));
        }
        let period = TAU / m;
        let first = (w.lo / period).ceil();
        let last = (w.hi / period).floor();
        if last - first + 1.0 > CENSUS_CAP as f64 {
            return Err(Error::CensusTooLarge { cap: CENSUS_CAP });
        }
        let mut j = first;
        while j <= last {
            values.push(j * period);
            j += 1.0;
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|b, a| (*b - *a).abs() <= tol.crossing);
    if values.len() > CENSUS_CAP {
        return Err(Error::CensusTooLarge { cap: CENSUS_CAP });
    }
    Ok(values)
}

/// Number of frequencies with `η μ ∈ 2πZ`, judged by the distance of `η` to
/// the nearest multiple of the period `2π/μ`.
pub fn resonance_count(mu: &[f64], eta: f64, tol: &Tolerances) -> usize {
    mu.iter()
        .filter(|&&m| {
            let period = TAU / m;
            (eta - (eta / period).round() * period).abs() <= tol.crossing
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Side {
    H,
    H0,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::H => write!(f, "H"),
            Side::H0 => write!(f, "H0"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Topology {
    /// `S^{dim}`.
    Sphere { dim: usize },
    /// `Σ0 ≅ S^{2k-1}`, the constant orbits of `H0`.
    Sigma0 { k: usize },
    /// `Σ ≅ S^{n+k-1} × R^{n-k}`, the constant orbits of `H`.
    Sigma { n: usize, k: usize },
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Sphere { dim } => write!(f, "S^{dim}"),
            Topology::Sigma0 { .. } => write!(f, "Sigma0"),
            Topology::Sigma { .. } => write!(f, "Sigma"),
        }
    }
}

/// A connected critical manifold of the action functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitFamily {
    /// Period, equal to the action.
    pub eta: f64,
    /// Half the dimension of `ker(exp(η J A) - Id)`.
    pub m: usize,
    pub family_dim: usize,
    pub topology: Topology,
    pub side: Side,
    pub cz_transverse: Option<HalfInt>,
}

impl OrbitFamily {
    pub fn action(&self) -> f64 {
        self.eta
    }

    fn sphere(eta: f64, m: usize, side: Side) -> Self {
        Self { eta, m, family_dim: 2 * m - 1, topology: Topology::Sphere { dim: 2 * m - 1 }, side, cz_transverse: None }
    }

    /// The family of constant orbits on the given side.
    pub fn constant(side: Side, n: usize, k: usize) -> Self {
        let (m, topology) = match side {
            Side::H0 => (k, Topology::Sigma0 { k }),
            Side::H => (n, Topology::Sigma { n, k }),
        };
        Self { eta: 0.0, m, family_dim: 2 * m - 1, topology, side, cz_transverse: Some(HalfInt::ZERO) }
    }
}

/// The family of period `eta ≠ 0` on one side.
///
/// `m` is counted twice: analytically from the frequencies, and numerically
/// as half the dimension of the fixed space of the period-`η` map. On the
/// `H0` side the fixed space is the kernel of `exp(η J A0) - Id`; on the `H`
/// side it is read off the spectrum of `J A` so that hyperbolic growth plays
/// no part. Disagreement is an error.
pub fn orbit_family(h: &QuadraticHamiltonian, eta: f64, side: Side, tol: &Tolerances) -> Result<OrbitFamily> {
    if eta == 0.0 {
        return Err(Error::ZeroEta);
    }
    let mu = h.frequencies(tol)?;
    let spec = match side {
        Side::H => Some(spectrum_with_jordan(&hamiltonian_generator(&h.assembled()), tol)?),
        Side::H0 => None,
    };
    family_with(h, &mu, spec.as_ref(), eta, side, tol)
}

fn family_with(
    h: &QuadraticHamiltonian,
    mu: &[f64],
    spec_h: Option<&Spectrum>,
    eta: f64,
    side: Side,
    tol: &Tolerances,
) -> Result<OrbitFamily> {
    let analytic = resonance_count(mu, eta, tol);
    if analytic == 0 {
        return Err(Error::NotCritical { eta });
    }
    let fixed = match (side, spec_h) {
        (Side::H, Some(spec)) => fixed_space_dim_in(spec, eta, tol),
        _ => {
            let flow = matrix_exp(&hamiltonian_generator(&h.a0), eta);
            let n = flow.nrows();
            kernel_dim(&(flow - DMatrix::<f64>::identity(n, n)), tol)
        }
    };
    if fixed != 2 * analytic {
        return Err(Error::ResonanceMismatch { eta, analytic, numerical: fixed / 2 });
    }
    Ok(OrbitFamily::sphere(eta, analytic, side))
}

/// True iff `exp(η J A1) - Id` is invertible for every nonzero `η` listed.
pub fn hyperbolic_orbit_freeness(a1: &SymMatrix, etas: &[f64], tol: &Tolerances) -> bool {
    let x = hamiltonian_generator(a1);
    let n = x.nrows();
    etas.iter().filter(|&&eta| eta != 0.0).all(|&eta| {
        let flow = matrix_exp(&x, eta);
        kernel_dim(&(flow - DMatrix::<f64>::identity(n, n)), tol) == 0
    })
}

/// All families with action in `w`, on both sides, sorted by action and then
/// side. Transverse indices are filled in.
pub fn census(h: &QuadraticHamiltonian, w: &ActionWindow, tol: &Tolerances) -> Result<Vec<OrbitFamily>> {
    h.ensure_valid(tol)?;
    let mu = h.frequencies(tol)?;
    let etas = crit_values(&mu, w, tol)?;
    let spec_h = spectrum_with_jordan(&hamiltonian_generator(&h.assembled()), tol)?;
    let indexer = TransverseIndexer::new(h, tol)?;
    let mut out = Vec::new();
    for eta in etas {
        if eta == 0.0 {
            out.push(OrbitFamily::constant(Side::H, h.n, h.k));
            out.push(OrbitFamily::constant(Side::H0, h.n, h.k));
            continue;
        }
        for side in [Side::H, Side::H0] {
            let mut fam = family_with(h, &mu, Some(&spec_h), eta, side, tol)?;
            fam.cz_transverse = Some(indexer.index(&fam, tol)?);
            out.push(fam);
        }
    }
    Ok(out)
}
