//! Conley–Zehnder indices of the paths `t ↦ exp(t J S)` by the crossing
//! formula, and the gradings built from them.
//!
//! For `S` nondegenerate the index on `[0, T]` is
//! `½ sgn S + Σ_{0<t<T} sgn(S|ker) + ½ sgn(S|ker at T)`, where the kernels are
//! `ker(exp(t J S) - Id)`. Crossings come from the imaginary eigenvalues
//! `±iμ` of `J S`: they sit at `t = 2πj/μ` with kernel the real invariant
//! subspace of `±iμ`.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::orbits::{OrbitFamily, Side, Topology};
use crate::symlin::{
    hamiltonian_generator, null_space_complex, real_span, restricted_signature, spectrum_with_jordan, Inertia,
    SymMatrix, Tolerances,
};
use crate::tentacular::QuadraticHamiltonian;

/// An element of `½Z`, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInt {
    pub doubled: i64,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { doubled: 0 };
    pub const HALF: HalfInt = HalfInt { doubled: 1 };

    pub const fn from_doubled(doubled: i64) -> Self {
        Self { doubled }
    }

    pub const fn from_int(v: i64) -> Self {
        Self { doubled: 2 * v }
    }

    pub fn is_integer(self) -> bool {
        self.doubled % 2 == 0
    }

    pub fn to_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.doubled / 2)
    }

    pub fn to_f64(self) -> f64 {
        self.doubled as f64 / 2.0
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_doubled(self.doubled + rhs.doubled)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt::from_doubled(self.doubled - rhs.doubled)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_doubled(-self.doubled)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_integer() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}/2", self.doubled),
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_integer() {
            Some(v) => s.serialize_i64(v),
            None => s.serialize_f64(self.to_f64()),
        }
    }
}

/// A time `t > 0` at which `exp(t J S) - Id` is singular.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub time: f64,
    /// Signature of `S` on the kernel.
    pub signature: i64,
    /// Dimension of the kernel.
    pub dim: usize,
}
/// `(μ, eigenvectors of iμ, signature and dimension on their real span)`.
type Mode = (f64, Vec<DVector<Complex64>>, Option<(i64, usize)>);


/// Spectral data of `J S` needed for the crossings of `exp(t J S)`, computed
/// once and reused for every path length.
#[derive(Debug, Clone)]
pub struct PathSpectrum {
    s: SymMatrix,
    inertia: Inertia,
    /// `(μ, eigenvectors of iμ, signature and dimension on their real span)`;
    /// `None` marks a degenerate restriction.
    modes: Vec<Mode>,
}

impl PathSpectrum {
    pub fn new(s: &SymMatrix, tol: &Tolerances) -> Result<Self> {
        let inertia = s.inertia(tol);
        let mut modes = Vec::new();
        if s.dim() > 0 && inertia.zero == 0 {
            let x = hamiltonian_generator(s);
            let spec = spectrum_with_jordan(&x, tol)?;
            let n = x.nrows();
            let xc = x.map(|v| Complex64::new(v, 0.0));
            for item in &spec.items {
                let z = item.value;
                if z.re != 0.0 || z.im <= 0.0 {
                    continue;
                }
                let shifted = &xc - DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, z.im);
                let vectors = null_space_complex(&shifted, tol);
                let basis = real_span(&vectors, tol);
                let single = restricted_signature(s, &basis, tol).ok().map(|sg| (sg, basis.ncols()));
                modes.push((z.im, vectors, single));
            }
        }
        Ok(Self { s: s.clone(), inertia, modes })
    }

    /// Crossings in `(0, t_end]`. Times closer than `crossing` are merged and
    /// their kernels combined.
    pub fn crossings(&self, t_end: f64, tol: &Tolerances) -> Result<Vec<Crossing>> {
        if self.inertia.zero != 0 {
            return Err(Error::CrossingDegenerate { t: 0.0 });
        }
        let mut events: Vec<(f64, usize)> = Vec::new();
        for (idx, (mu, _, _)) in self.modes.iter().enumerate() {
            let period = TAU / mu;
            let mut j = 1.0;
            while j * period <= t_end + tol.crossing {
                events.push((j * period, idx));
                j += 1.0;
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut out = Vec::new();
        let mut i = 0;
        while i < events.len() {
            let t0 = events[i].0;
            let mut j = i + 1;
            while j < events.len() && events[j].0 - t0 <= tol.crossing {
                j += 1;
            }
            let degenerate = Error::CrossingDegenerate { t: t0 };
            let (signature, dim) = if j == i + 1 {
                self.modes[events[i].1].2.ok_or(degenerate)?
            } else {
                let vectors: Vec<DVector<Complex64>> =
                    events[i..j].iter().flat_map(|&(_, idx)| self.modes[idx].1.iter().cloned()).collect();
                let basis = real_span(&vectors, tol);
                let sg = restricted_signature(&self.s, &basis, tol).map_err(|e| match e {
                    Error::DegenerateRestriction { .. } => degenerate,
                    other => other,
                })?;
                (sg, basis.ncols())
            };
            out.push(Crossing { time: t0.min(t_end), signature, dim });
            i = j;
        }
        Ok(out)
    }

    /// Conley–Zehnder index on `[0, t_end]`.
    pub fn index(&self, t_end: f64, tol: &Tolerances) -> Result<HalfInt> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidWindow { lo: 0.0, hi: t_end });
        }
        let mut doubled = self.inertia.signature();
        for c in self.crossings(t_end, tol)? {
            if (c.time - t_end).abs() <= tol.crossing {
                doubled += c.signature;
            } else {
                doubled += 2 * c.signature;
            }
        }
        Ok(HalfInt::from_doubled(doubled))
    }
}

/// Crossings of `exp(t J S)` in `(0, t_end]`, found from the imaginary
/// eigenvalues of `J S`.
pub fn crossings(s: &SymMatrix, t_end: f64, tol: &Tolerances) -> Result<Vec<Crossing>> {
    PathSpectrum::new(s, tol)?.crossings(t_end, tol)
}

/// Conley–Zehnder index of `t ↦ exp(t J S)` on `[0, t_end]`.
pub fn cz_index_path(s: &SymMatrix, t_end: f64, tol: &Tolerances) -> Result<HalfInt> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidWindow { lo: 0.0, hi: t_end });
    }
    PathSpectrum::new(s, tol)?.index(t_end, tol)
}

/// Path spectra of `A1`, `A0` and `A0 ⊕ A1` for repeated transverse indices.
#[derive(Debug, Clone)]
pub struct TransverseIndexer {
    a1: PathSpectrum,
    a0: PathSpectrum,
    full: PathSpectrum,
}

impl TransverseIndexer {
    pub fn new(h: &QuadraticHamiltonian, tol: &Tolerances) -> Result<Self> {
        Ok(Self {
            a1: PathSpectrum::new(&h.a1, tol)?,
            a0: PathSpectrum::new(&h.a0, tol)?,
            full: PathSpectrum::new(&h.assembled(), tol)?,
        })
    }

    pub fn index(&self, fam: &OrbitFamily, tol: &Tolerances) -> Result<HalfInt> {
        if fam.eta == 0.0 {
            return Err(Error::ZeroEta);
        }
        let t = fam.eta.abs();
        let hyperbolic = self.a1.index(t, tol)?;
        if hyperbolic != HalfInt::ZERO {
            return Err(Error::HyperbolicIndexNonzero(format!("{hyperbolic} at period {t}")));
        }
        let cz = match fam.side {
            Side::H0 => self.a0.index(t, tol)?,
            Side::H => self.full.index(t, tol)?,
        };
        Ok(if fam.eta > 0.0 { cz } else { -cz })
    }
}

/// Transverse index of a nonconstant family.
///
/// The `H0` side uses the path of `A0` and the `H` side the path of the full
/// `A = A0 ⊕ A1`; the hyperbolic part must contribute nothing. Families of
/// negative period get the negated index of the reversed period.
pub fn cz_transverse(h: &QuadraticHamiltonian, fam: &OrbitFamily, tol: &Tolerances) -> Result<HalfInt> {
    if fam.eta == 0.0 {
        return Err(Error::ZeroEta);
    }
    TransverseIndexer::new(h, tol)?.index(fam, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pole {
    Min,
    Max,
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pole::Min => write!(f, "min"),
            Pole::Max => write!(f, "max"),
        }
    }
}

/// Signature index of the minimum or maximum of the perfect Morse function
/// on a family.
pub fn sigma_index(fam: &OrbitFamily, pole: Pole) -> HalfInt {
    let (lo, hi) = match fam.topology {
        Topology::Sphere { .. } => (fam.m as i64, fam.m as i64),
        Topology::Sigma0 { k } => (k as i64, k as i64),
        Topology::Sigma { n, k } => (n as i64, k as i64),
    };
    match pole {
        Pole::Min => HalfInt::from_doubled(-2 * lo + 1),
        Pole::Max => HalfInt::from_doubled(2 * hi - 1),
    }
}

/// `μ = μ_CZ^tr + μ_σ + ½`, with `μ_CZ^tr = 0` on constant families.
pub fn grading(fam: &OrbitFamily, pole: Pole, h: &QuadraticHamiltonian, tol: &Tolerances) -> Result<HalfInt> {
    let cz = transverse_or_zero(fam, h, tol)?;
    Ok(cz + sigma_index(fam, pole) + HalfInt::HALF)
}

fn transverse_or_zero(fam: &OrbitFamily, h: &QuadraticHamiltonian, tol: &Tolerances) -> Result<HalfInt> {
    if fam.eta == 0.0 {
        return Ok(HalfInt::ZERO);
    }
    match fam.cz_transverse {
        Some(cz) => Ok(cz),
        None => cz_transverse(h, fam, tol),
    }
}

/// A critical point of the Morse function on a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub side: Side,
    pub eta: f64,
    pub m: usize,
    pub pole: Pole,
    pub action: f64,
    pub sigma_index: HalfInt,
    pub cz_transverse: HalfInt,
    pub grading: HalfInt,
}

impl Generator {
    pub fn on(fam: &OrbitFamily, pole: Pole, h: &QuadraticHamiltonian, tol: &Tolerances) -> Result<Self> {
        let cz = transverse_or_zero(fam, h, tol)?;
        let sigma = sigma_index(fam, pole);
        Ok(Self {
            side: fam.side,
            eta: fam.eta,
            m: fam.m,
            pole,
            action: fam.action(),
            sigma_index: sigma,
            cz_transverse: cz,
            grading: cz + sigma + HalfInt::HALF,
        })
    }

    /// The grading as an integer; every generator of a valid census has one.
    pub fn degree(&self) -> Result<i64> {
        self.grading.to_integer().ok_or(Error::NonIntegerResult(self.grading.doubled))
    }
}

/// `μ_CZ(Λ) - μ_CZ(Λ0) + ½ (dim Λ0 + dim Λ)`.
pub fn hybrid_virtual_dim(cz_l0: HalfInt, cz_l: HalfInt, dim_l0: usize, dim_l: usize) -> Result<i64> {
    let doubled = cz_l.doubled - cz_l0.doubled + dim_l0 as i64 + dim_l as i64;
    if doubled % 2 != 0 {
        return Err(Error::NonIntegerResult(doubled));
    }
    Ok(doubled / 2)
}

/// Dimension `μ_σ(z) - μ_σ(x)` of the space of stationary solutions from `x` to `z`.
pub fn stationary_fiber_dim(sigma_x: HalfInt, sigma_z: HalfInt) -> Result<i64> {
    let d = sigma_z - sigma_x;
    d.to_integer().ok_or(Error::NonIntegerResult(d.doubled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{orbit_family, OrbitFamily};
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn qp() -> SymMatrix {
        SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn scalar(mu: f64, k: usize) -> SymMatrix {
        SymMatrix::from_diagonal(&vec![mu; 2 * k]).unwrap()
    }

    #[test]
    fn halfint_display_and_arithmetic() {
        assert_eq!(HalfInt::from_doubled(3).to_string(), "3/2");
        assert_eq!(HalfInt::from_doubled(-5).to_string(), "-5/2");
        assert_eq!(HalfInt::from_int(4).to_string(), "4");
        assert_eq!(HalfInt::HALF + HalfInt::HALF, HalfInt::from_int(1));
        assert_eq!(-HalfInt::from_doubled(3), HalfInt::from_doubled(-3));
        assert_eq!(serde_json::to_string(&HalfInt::from_doubled(-3)).unwrap(), "-1.5");
        assert_eq!(serde_json::to_string(&HalfInt::from_int(2)).unwrap(), "2");
    }

    #[test]
    fn cz_path_examples() {
        let t = tol();
        assert_eq!(cz_index_path(&scalar(1.0, 1), 2.0 * PI, &t).unwrap(), HalfInt::from_int(2));
        assert_eq!(cz_index_path(&qp(), 1.0, &t).unwrap(), HalfInt::ZERO);
        assert_eq!(cz_index_path(&qp(), 10.0, &t).unwrap(), HalfInt::ZERO);
    }

    #[test]
    fn cz_closed_form() {
        let t = tol();
        for k in 1..=4 {
            for n in 1..=5 {
                for mu in [0.5, 1.0, 3.0] {
                    let cz = cz_index_path(&scalar(mu, k), TAU * n as f64 / mu, &t).unwrap();
                    assert_eq!(cz, HalfInt::from_int(2 * (k * n) as i64), "k={k} N={n} mu={mu}");
                }
            }
        }
    }

    #[test]
    fn cz_between_crossings() {
        let t = tol();
        // half a turn: ½·2 from t = 0 only
        assert_eq!(cz_index_path(&scalar(1.0, 1), PI, &t).unwrap(), HalfInt::from_int(1));
        // just past a full turn: ½·2 + 2
        assert_eq!(cz_index_path(&scalar(1.0, 1), 2.0 * PI + 0.1, &t).unwrap(), HalfInt::from_int(3));
        assert_eq!(cz_index_path(&scalar(-1.0, 1), 2.0 * PI, &t).unwrap(), HalfInt::from_int(-2));
    }

    #[test]
    fn cz_rejects_degenerate_forms() {
        let s = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(cz_index_path(&s, 1.0, &tol()), Err(Error::CrossingDegenerate { .. })));
        assert!(cz_index_path(&scalar(1.0, 1), 0.0, &tol()).is_err());
    }

    #[test]
    fn transverse_examples() {
        let t = tol();
        let h = QuadraticHamiltonian::from_frequencies(&[1.0], qp()).unwrap();
        for side in [Side::H0, Side::H] {
            let fam = orbit_family(&h, 2.0 * PI, side, &t).unwrap();
            assert_eq!(cz_transverse(&h, &fam, &t).unwrap(), HalfInt::from_int(2));
            let fam = orbit_family(&h, -2.0 * PI, side, &t).unwrap();
            assert_eq!(cz_transverse(&h, &fam, &t).unwrap(), HalfInt::from_int(-2));
        }
        let h = QuadraticHamiltonian::from_frequencies(&[1.0, 2.0], qp()).unwrap();
        let fam = orbit_family(&h, PI, Side::H0, &t).unwrap();
        assert_eq!(cz_transverse(&h, &fam, &t).unwrap(), HalfInt::from_int(3));
        let zero = OrbitFamily::constant(Side::H, 2, 1);
        assert!(matches!(cz_transverse(&h, &zero, &t), Err(Error::ZeroEta)));
    }

    #[test]
    fn sigma_index_examples() {
        let mut s3 = OrbitFamily::constant(Side::H0, 3, 2);
        s3.eta = 1.0;
        s3.topology = Topology::Sphere { dim: 3 };
        assert_eq!(sigma_index(&s3, Pole::Max), HalfInt::from_doubled(3));
        assert_eq!(sigma_index(&s3, Pole::Min), HalfInt::from_doubled(-3));
        assert_eq!(sigma_index(&OrbitFamily::constant(Side::H, 3, 1), Pole::Min), HalfInt::from_doubled(-5));
        assert_eq!(sigma_index(&OrbitFamily::constant(Side::H0, 3, 2), Pole::Max), HalfInt::from_doubled(3));
    }

    #[test]
    fn grading_examples() {
        let t = tol();
        for (n, k) in [(2, 1), (3, 1), (5, 3)] {
            let a1 = SymMatrix::new(crate::symlin::symplectic_direct_sum(&vec![qp().matrix(); n - k])).unwrap();
            let h = QuadraticHamiltonian::from_frequencies(&vec![1.0; k], a1).unwrap();
            let sigma = OrbitFamily::constant(Side::H, n, k);
            assert_eq!(grading(&sigma, Pole::Min, &h, &t).unwrap(), HalfInt::from_int(1 - n as i64));
            assert_eq!(grading(&sigma, Pole::Max, &h, &t).unwrap(), HalfInt::from_int(k as i64));
        }
        let h = QuadraticHamiltonian::from_frequencies(&[1.0, 1.0], qp()).unwrap();
        let fam = orbit_family(&h, 2.0 * PI, Side::H0, &t).unwrap();
        assert_eq!(fam.m, 2);
        assert_eq!(grading(&fam, Pole::Min, &h, &t).unwrap(), HalfInt::from_int(3));
        assert_eq!(grading(&fam, Pole::Max, &h, &t).unwrap(), HalfInt::from_int(6));
        let h = QuadraticHamiltonian::from_frequencies(&[1.0], qp()).unwrap();
        let fam = orbit_family(&h, -2.0 * PI, Side::H0, &t).unwrap();
        assert_eq!(grading(&fam, Pole::Max, &h, &t).unwrap(), HalfInt::from_int(-1));
    }

    #[test]
    fn virtual_dim_examples() {
        let cz = HalfInt::from_int(2);
        assert_eq!(hybrid_virtual_dim(cz, cz, 1, 1).unwrap(), 1);
        assert_eq!(hybrid_virtual_dim(cz, cz, 3, 3).unwrap(), 3);
        assert_eq!(hybrid_virtual_dim(HalfInt::from_int(2), HalfInt::from_int(4), 1, 3).unwrap(), 4);
        assert!(matches!(hybrid_virtual_dim(cz, cz, 1, 2), Err(Error::NonIntegerResult(3))));
        assert_eq!(stationary_fiber_dim(HalfInt::from_doubled(-3), HalfInt::from_doubled(3)).unwrap(), 3);
    }
}
