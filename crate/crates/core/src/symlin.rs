//! Symplectic linear algebra kernel.
//!
//! Coordinates on `T*R^m` are ordered `(q_1, .., q_m, p_1, .., p_m)` and the
//! complex structure is `J = ((0, Id), (-Id, 0))`. The linear Hamiltonian
//! flow of `H(x) = ½ xᵀ A x` is `exp(t J A)`.
//!
//! Everything here works in floating point; the tolerances that decide when a
//! singular value or an eigenvalue gap counts as zero are collected in
//! [`Tolerances`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical cut-offs. All values must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative radius under which eigenvalues are merged into one cluster.
    pub eig_cluster: f64,
    /// Relative singular-value cut for numerical rank.
    pub rank_cut: f64,
    /// Absolute tolerance, in time units, for locating crossings and resonances.
    pub crossing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eig_cluster: 1e-9, rank_cut: 1e-10, crossing: 1e-10 }
    }
}

impl Tolerances {
    pub fn new(eig_cluster: f64, rank_cut: f64, crossing: f64) -> Result<Self> {
        let tol = Self { eig_cluster, rank_cut, crossing };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eig_cluster", self.eig_cluster),
            ("rank_cut", self.rank_cut),
            ("crossing", self.crossing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerances(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Singular values at or below this are zero, for a matrix whose largest
    /// singular value is `sigma_max`. The floor of one keeps differences such
    /// as `exp(X) - Id` on the natural scale of the identity.
    pub(crate) fn rank_cutoff(&self, sigma_max: f64) -> f64 {
        self.rank_cut * sigma_max.max(1.0)
    }
}

/// Counts of positive, negative and zero eigenvalues of a symmetric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn signature(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }
}

/// A real symmetric matrix of even dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Accepts `m` if it is square, of even size and symmetric up to
    /// `1e-12 · max|entry|`. The stored matrix is the exact symmetrisation.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if !m.nrows().is_multiple_of(2) {
            return Err(Error::OddDimension(m.nrows()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let allowed = 1e-12 * m.amax();
        let asymmetry = (&m - m.transpose()).amax();
        if asymmetry > allowed {
            return Err(Error::NotSymmetric { asymmetry, allowed });
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: bad.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// The empty form on the zero space.
    pub fn empty() -> Self {
        Self(DMatrix::zeros(0, 0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn half_dim(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Inertia with eigenvalues below `rank_cut · max|eigenvalue|` counted as zero.
    pub fn inertia(&self, tol: &Tolerances) -> Inertia {
        inertia_of(&self.eigenvalues(), tol.rank_cut)
    }

    pub fn signature(&self, tol: &Tolerances) -> i64 {
        self.inertia(tol).signature()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |a, &b| a.max(b.abs()))
    }

    /// `Pᵀ S P`.
    pub fn congruent(&self, p: &DMatrix<f64>) -> Result<Self> {
        Self::new(p.transpose() * &self.0 * p)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn negated(&self) -> Self {
        Self(-&self.0)
    }
}

fn inertia_of(eigs: &[f64], rel_cut: f64) -> Inertia {
    let scale = eigs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = rel_cut * scale;
    let mut inertia = Inertia { positive: 0, negative: 0, zero: 0 };
    for &e in eigs {
        if e.abs() <= cut {
            inertia.zero += 1;
        } else if e > 0.0 {
            inertia.positive += 1;
        } else {
            inertia.negative += 1;
        }
    }
    inertia
}

/// The standard complex structure on `T*R^m`.
pub fn standard_j(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// `J A`, the generator of the linear Hamiltonian flow of `½ xᵀ A x`.
pub fn hamiltonian_generator(a: &SymMatrix) -> DMatrix<f64> {
    standard_j(a.half_dim()) * a.matrix()
}

/// Direct sum of matrices acting on `T*R^{m_1}, T*R^{m_2}, ..`, written in the
/// standard coordinates `(q, p)` of `T*R^{m_1 + m_2 + ..}`.
///
/// Each part is `2 m_i × 2 m_i` in its own `(q, p)` coordinates; its `q`
/// block lands in the `q` range of the sum and likewise for `p`. This is the
/// inverse of the splitting `(q, p) ↦ ((q', p'), (q'', p''))`.
pub fn symplectic_direct_sum(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let halves: Vec<usize> = parts.iter().map(|p| p.nrows() / 2).collect();
    let n: usize = halves.iter().sum();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    let mut offset = 0;
    for (part, &m) in parts.iter().zip(&halves) {
        let index = |i: usize| if i < m { offset + i } else { n + offset + (i - m) };
        for i in 0..2 * m {
            for j in 0..2 * m {
                out[(index(i), index(j))] = part[(i, j)];
            }
        }
        offset += m;
    }
    out
}

/// Positions in standard `T*R^n` coordinates of the coordinates of the
/// `index`-th summand of a symplectic direct sum with half-dimensions `halves`.
pub fn summand_coordinates(halves: &[usize], index: usize) -> Vec<usize> {
    let n: usize = halves.iter().sum();
    let offset: usize = halves[..index].iter().sum();
    let m = halves[index];
    (0..m).map(|i| offset + i).chain((0..m).map(|i| n + offset + i)).collect()
}

/// One distinct eigenvalue with the sizes of its Jordan blocks (descending).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralItem {
    pub value: Complex64,
    pub blocks: Vec<usize>,
}

impl SpectralItem {
    pub fn multiplicity(&self) -> usize {
        self.blocks.iter().sum()
    }
}

/// Distinct eigenvalues with Jordan data, sorted by real then imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub items: Vec<SpectralItem>,
    /// Finest clustering radius (absolute); centroids within it of an axis are snapped onto it.
    pub radius: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.items.iter().map(SpectralItem::multiplicity).sum()
    }

    pub fn scale(&self) -> f64 {
        let s = self.items.iter().fold(0.0f64, |a, it| a.max(it.value.norm()));
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Finds the item whose value lies within `radius` of `z`.
    pub fn find(&self, z: Complex64, radius: f64) -> Option<&SpectralItem> {
        self.items.iter().find(|it| (it.value - z).norm() <= radius)
    }

    /// Multiset of `(value, block size)` pairs.
    pub fn jordan_pairs(&self) -> Vec<(Complex64, usize)> {
        self.items
            .iter()
            .flat_map(|it| it.blocks.iter().map(move |&b| (it.value, b)))
            .collect()
    }
}

/// Eigenvalues of a real square matrix.
///
/// The real Schur iteration can stall on the structured spectra of
/// Hamiltonian matrices. A stalled run is retried on `Q M Q` for a few fixed
/// Householder reflections `Q`, which changes the Hessenberg form the
/// iteration starts from but not the eigenvalues.
pub fn general_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    for attempt in 0..6 {
        let work = if attempt == 0 {
            m.clone()
        } else {
            let v = DVector::from_fn(n, |i, _| (1.3 * i as f64 + 0.4 + 0.7 * attempt as f64).sin());
            let q = DMatrix::<f64>::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
            &q * m * &q
        };
        let Some(schur) = work.try_schur(f64::EPSILON, 100 * n.max(10)) else {
            continue;
        };
        // a real double eigenvalue in a 2x2 diagonal block can come back with
        // a NaN imaginary part
        let mut eigs: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
        for z in &mut eigs {
            if z.im.is_nan() && z.re.is_finite() {
                z.im = 0.0;
            }
        }
        if eigs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(eigs);
        }
    }
    Err(Error::EigenSolverFailed)
}

const CLUSTER_LADDER: i32 = 8;

/// Eigenvalues of `m` with Jordan block sizes.
///
/// Eigenvalues are grouped by single linkage at the radii
/// `eig_cluster · scale · 10^r`, from the coarsest rung `r = 7` down to
/// `r = 0`. A group is accepted as one eigenvalue when it passes the
/// rank-chain check around its centroid `c`: with `p` members, the nullities
/// of `(M - cI)^j` must grow with non-increasing increments and settle at
/// exactly `p` for `j = p, p + 1`. Groups that fail are split at the next
/// finer rung. Coarse groups are tried first because a Jordan block of size
/// `p` scatters its computed eigenvalues by roughly `ε^{1/p}`, while a false
/// merge of distinct eigenvalues leaves `M - cI` invertible.
pub fn spectrum_with_jordan(m: &DMatrix<f64>, tol: &Tolerances) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum { items: Vec::new(), radius: 0.0 });
    }
    let eigs = general_eigenvalues(m)?;
    let scale = {
        let s = eigs.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let base = tol.eig_cluster * scale;
    let mc = m.map(|x| Complex64::new(x, 0.0));
    let all: Vec<usize> = (0..n).collect();
    let mut items = Vec::new();
    resolve(&mc, &eigs, &all, CLUSTER_LADDER - 1, base, tol, &mut items)?;
    items.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(Spectrum { items, radius: base })
}

fn resolve(
    mc: &DMatrix<Complex64>,
    eigs: &[Complex64],
    members: &[usize],
    rung: i32,
    base: f64,
    tol: &Tolerances,
    out: &mut Vec<SpectralItem>,
) -> Result<()> {
    let points: Vec<Complex64> = members.iter().map(|&i| eigs[i]).collect();
    for group in single_linkage(&points, base * 10f64.powi(rung)) {
        let p = group.len();
        let mut c = group.iter().map(|&i| points[i]).sum::<Complex64>() / p as f64;
        if c.im.abs() <= base {
            c.im = 0.0;
        }
        if c.re.abs() <= base {
            c.re = 0.0;
        }
        if let Some(blocks) = jordan_blocks(mc, c, p, tol) {
            out.push(SpectralItem { value: c, blocks });
        } else if rung > 0 && p > 1 {
            let sub: Vec<usize> = group.iter().map(|&i| members[i]).collect();
            resolve(mc, eigs, &sub, rung - 1, base, tol, out)?;
        } else {
            return Err(Error::ClusterAmbiguous);
        }
    }
    Ok(())
}

fn single_linkage(points: &[Complex64], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Jordan block sizes at `c` from the nullity chain, or `None` if the chain
/// is not consistent with an algebraic multiplicity of `p`.
fn jordan_blocks(m: &DMatrix<Complex64>, c: Complex64, p: usize, tol: &Tolerances) -> Option<Vec<usize>> {
    let n = m.nrows();
    let shifted = m - DMatrix::<Complex64>::identity(n, n) * c;
    let nullities = nullity_chain(&shifted, p + 1, tol);
    if nullities[1] == 0 || nullities[p] != p || nullities[p + 1] != p {
        return None;
    }
    let increments: Vec<usize> = nullities.windows(2).map(|w| w[1].saturating_sub(w[0])).collect();
    if nullities.windows(2).any(|w| w[1] < w[0]) || increments.windows(2).any(|w| w[1] > w[0]) {
        return None;
    }
    // increments[j-1] = number of blocks of size >= j
    let mut blocks = Vec::new();
    for j in 1..=p {
        let ge = increments[j - 1];
        let gt = increments.get(j).copied().unwrap_or(0);
        for _ in 0..ge - gt {
            blocks.push(j);
        }
    }
    blocks.sort_unstable_by(|a, b| b.cmp(a));
    Some(blocks)
}

/// `dim ker B^j` for `j = 0..=steps`.
///
/// Powers of `B` are never formed: `ker B^{j+1}` is the kernel of `B`
/// followed by projection off `ker B^j`, so every rank decision is made on a
/// matrix of norm at most `‖B‖` with the same cutoff. Forming `B^j` instead
/// would shrink the singular values of nearby distinct eigenvalues like
/// `d^j` and merge them into the kernel.
fn nullity_chain(b: &DMatrix<Complex64>, steps: usize, tol: &Tolerances) -> Vec<usize> {
    let n = b.nrows();
    let sigma_max = b.clone().singular_values().iter().fold(0.0f64, |a, &v| a.max(v));
    let cut = tol.rank_cutoff(sigma_max);
    let mut nullities = vec![0usize];
    let mut kernel: Vec<DVector<Complex64>> = Vec::new();
    for _ in 0..steps {
        let mut proj = DMatrix::<Complex64>::identity(n, n);
        for v in &kernel {
            proj -= v * v.adjoint();
        }
        kernel = null_space_cut(&(proj * b), cut);
        nullities.push(kernel.len());
    }
    nullities
}

/// Numerical nullity of a complex matrix.
pub fn nullity_complex(m: &DMatrix<Complex64>, tol: &Tolerances) -> usize {
    null_space_complex(m, tol).len()
}

/// Orthonormal basis of the numerical null space of a complex square matrix.
pub fn null_space_complex(m: &DMatrix<Complex64>, tol: &Tolerances) -> Vec<DVector<Complex64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    let sigma_max = m.clone().singular_values().iter().fold(0.0f64, |a, &b| a.max(b));
    null_space_cut(m, tol.rank_cutoff(sigma_max))
}

fn null_space_cut(m: &DMatrix<Complex64>, cut: f64) -> Vec<DVector<Complex64>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cut {
            basis.push(v_t.row(i).transpose().map(|z| z.conj()));
        }
    }
    // singular values are reported for min(rows, cols) only
    let reported = svd.singular_values.len();
    for i in reported..n {
        basis.push(v_t.row(i).transpose().map(|z| z.conj()));
    }
    basis
}

/// `exp(t M)` by scaling and squaring with a diagonal Padé approximant.
///
/// Exact zeros of `M` that separate it into independent diagonal blocks stay
/// exactly zero in the result.
pub fn matrix_exp(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    assert_eq!(m.nrows(), m.ncols(), "matrix_exp needs a square matrix");
    let a = m * t;
    let n = a.nrows();
    if n == 0 {
        return a;
    }
    let norm1 = a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);

    const THETA: [(usize, f64); 4] = [
        (3, 1.495585217958292e-2),
        (5, 0.253_939_833_006_323),
        (7, 9.504178996162932e-1),
        (9, 2.097847961257068),
    ];
    for (order, theta) in THETA {
        if norm1 <= theta {
            let (u, v) = pade_low(&a, order);
            return pade_quotient(u, v);
        }
    }
    const THETA13: f64 = 5.371920351148152;
    let squarings = ((norm1 / THETA13).log2().ceil()).max(0.0) as i32;
    let scaled = &a * 2f64.powi(-squarings);
    let (u, v) = pade13(&scaled);
    let mut r = pade_quotient(u, v);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

fn pade_coefficients(order: usize) -> &'static [f64] {
    match order {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé order {order}"),
    }
}

fn pade_low(a: &DMatrix<f64>, order: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = pade_coefficients(order);
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut even_power = ident.clone();
    let mut u_inner = &ident * b[1];
    let mut v = &ident * b[0];
    for j in 1..=order / 2 {
        even_power = &even_power * &a2;
        u_inner += &even_power * b[2 * j + 1];
        v += &even_power * b[2 * j];
    }
    (a * u_inner, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_high = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9]);
    let u = a * (u_high + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &ident * B[1]);
    let v_high = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8]);
    let v = v_high + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &ident * B[0];
    (u, v)
}

fn pade_quotient(u: DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let numer = &v + &u;
    let denom = v - u;
    denom.lu().solve(&numer).expect("Padé denominator is invertible for admissible norms")
}

/// Groups the indices of `m` into classes such that `m` is block diagonal
/// (after a simultaneous permutation) with one block per class.
fn decoupled_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if m[(i, j)] != 0.0 || m[(j, i)] != 0.0 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Numerical nullity: the number of singular values at or below
/// `rank_cut · max(σ_max, 1)`.
///
/// When `m` splits into independent diagonal blocks under a permutation of
/// coordinates, each block is measured against its own largest singular value.
pub fn kernel_dim(m: &DMatrix<f64>, tol: &Tolerances) -> usize {
    assert_eq!(m.nrows(), m.ncols(), "kernel_dim needs a square matrix");
    decoupled_blocks(m)
        .into_iter()
        .map(|idx| {
            let k = idx.len();
            let sub = DMatrix::from_fn(k, k, |i, j| m[(idx[i], idx[j])]);
            let sv = sub.singular_values();
            let sigma_max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
            let cut = tol.rank_cutoff(sigma_max);
            sv.iter().filter(|&&s| s <= cut).count()
        })
        .sum()
}

/// Orthonormal real basis (as columns) of the real span of the real and
/// imaginary parts of `vectors`.
pub fn real_span(vectors: &[DVector<Complex64>], tol: &Tolerances) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(0, 0);
    }
    let n = vectors[0].len();
    let mut cols = Vec::with_capacity(2 * vectors.len());
    for v in vectors {
        cols.push(v.map(|z| z.re));
        cols.push(v.map(|z| z.im));
    }
    let raw = DMatrix::from_columns(&cols);
    let svd = raw.svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol.rank_cut * sigma_max)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if keep.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&keep)
    }
}

/// Inertia of the Gram matrix `Bᵀ S B`, failing if it has a numerical kernel.
pub fn restricted_inertia(s: &SymMatrix, basis: &DMatrix<f64>, tol: &Tolerances) -> Result<Inertia> {
    if basis.ncols() == 0 {
        return Ok(Inertia { positive: 0, negative: 0, zero: 0 });
    }
    if basis.nrows() != s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "basis vectors have length {}, form has dimension {}",
            basis.nrows(),
            s.dim()
        )));
    }
    let gram = basis.transpose() * s.matrix() * basis;
    let gram = (&gram + gram.transpose()) * 0.5;
    let eigs = gram.symmetric_eigenvalues();
    let col_norm = basis.column_iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let cut = tol.rank_cut * s.spectral_norm() * col_norm * col_norm;
    let smallest = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if smallest <= cut {
        return Err(Error::DegenerateRestriction { smallest });
    }
    let positive = eigs.iter().filter(|&&e| e > 0.0).count();
    Ok(Inertia { positive, negative: eigs.len() - positive, zero: 0 })
}

/// Signature of `S` restricted to the span of the columns of `basis`.
pub fn restricted_signature(s: &SymMatrix, basis: &DMatrix<f64>, tol: &Tolerances) -> Result<i64> {
    restricted_inertia(s, basis, tol).map(|i| i.signature())
}

/// Whether `e^{t λ} = 1` for an eigenvalue `λ`, judged in time units:
/// `Re λ` must vanish at the clustering scale and `t` must lie within
/// `crossing` of a multiple of `2π / Im λ`.
pub fn is_resonant(lambda: Complex64, t: f64, radius: f64, tol: &Tolerances) -> bool {
    if lambda.re.abs() > radius {
        return false;
    }
    let mu = lambda.im.abs();
    if mu <= radius {
        return true;
    }
    let period = std::f64::consts::TAU / mu;
    let j = (t / period).round();
    (t - j * period).abs() <= tol.crossing
}

/// `dim ker(exp(t X) - Id)` read off the spectrum of `X`: the total
/// geometric multiplicity of the eigenvalues `λ` with `e^{tλ} = 1`.
///
/// This route never forms `exp(t X)` and so is not affected by the
/// exponential growth of hyperbolic directions.
pub fn fixed_space_dim(x: &DMatrix<f64>, t: f64, tol: &Tolerances) -> Result<usize> {
    Ok(fixed_space_dim_in(&spectrum_with_jordan(x, tol)?, t, tol))
}

/// [`fixed_space_dim`] on an already computed spectrum.
pub fn fixed_space_dim_in(spec: &Spectrum, t: f64, tol: &Tolerances) -> usize {
    let radius = spec.radius.max(tol.eig_cluster * spec.scale());
    spec.items
        .iter()
        .filter(|it| is_resonant(it.value, t, radius, tol))
        .map(|it| it.blocks.len())
        .sum()
}

/// Real orthonormal basis of the invariant subspace belonging to the
/// eigenvalue pair `±iμ` (`μ > 0`) of `x`: real and imaginary parts of the
/// eigenvectors for `iμ`.
pub fn imaginary_eigenspace(x: &DMatrix<f64>, mu: f64, tol: &Tolerances) -> DMatrix<f64> {
    let n = x.nrows();
    let shifted = x.map(|v| Complex64::new(v, 0.0)) - DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, mu);
    let null = null_space_complex(&shifted, tol);
    real_span(&null, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn mat(n: usize, rows: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(n, n, rows)
    }

    #[test]
    fn standard_j_small_cases() {
        assert_eq!(standard_j(1), mat(2, &[0.0, 1.0, -1.0, 0.0]));
        let j2 = standard_j(2);
        assert_eq!(j2.view((0, 2), (2, 2)), DMatrix::<f64>::identity(2, 2));
        assert_eq!(j2.view((2, 0), (2, 2)), -DMatrix::<f64>::identity(2, 2));
        for m in 1..6 {
            let j = standard_j(m);
            assert_eq!(&j * &j, -DMatrix::<f64>::identity(2 * m, 2 * m));
            assert_eq!(j.transpose(), -&j);
        }
    }

    #[test]
    fn sym_matrix_rejects_bad_input() {
        assert!(matches!(SymMatrix::new(DMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
        assert!(matches!(SymMatrix::new(DMatrix::zeros(3, 3)), Err(Error::OddDimension(3))));
        assert!(matches!(
            SymMatrix::new(mat(2, &[1.0, 2.0, 2.1, 1.0])),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(SymMatrix::new(mat(2, &[1.0, 2.0, 2.0 + 1e-14, 1.0])).is_ok());
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Tolerances::new(0.0, 1e-10, 1e-10).is_err());
        assert!(Tolerances::new(1e-9, -1.0, 1e-10).is_err());
        assert!(Tolerances::new(1e-9, 1e-10, f64::NAN).is_err());
        assert!(Tolerances::new(1e-9, 1e-10, 1e-10).is_ok());
    }

    #[test]
    fn spectrum_of_diagonal() {
        let s = spectrum_with_jordan(&mat(2, &[1.0, 0.0, 0.0, -1.0]), &tol()).unwrap();
        assert_eq!(s.items.len(), 2);
        assert_eq!(s.items[0].value, Complex64::new(-1.0, 0.0));
        assert_eq!(s.items[1].value, Complex64::new(1.0, 0.0));
        assert!(s.items.iter().all(|it| it.blocks == vec![1]));
    }

    #[test]
    fn spectrum_of_jordan_block() {
        let s = spectrum_with_jordan(&mat(2, &[1.0, 1.0, 0.0, 1.0]), &tol()).unwrap();
        assert_eq!(s.items.len(), 1);
        assert!((s.items[0].value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(s.items[0].blocks, vec![2]);
    }

    #[test]
    fn spectrum_of_hyperbolic_generator() {
        // J [[0,1],[1,0]] = [[1,0],[0,-1]]
        let m = standard_j(1) * mat(2, &[0.0, 1.0, 1.0, 0.0]);
        let s = spectrum_with_jordan(&m, &tol()).unwrap();
        let pairs = s.jordan_pairs();
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].0 - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((pairs[1].0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spectrum_mixed_block_sizes() {
        // 2 ⊕ J_2(2) ⊕ J_3(-1), conjugated by a well-conditioned matrix
        let mut d = DMatrix::<f64>::zeros(6, 6);
        d[(0, 0)] = 2.0;
        d[(1, 1)] = 2.0;
        d[(2, 2)] = 2.0;
        d[(1, 2)] = 1.0;
        for i in 3..6 {
            d[(i, i)] = -1.0;
        }
        d[(3, 4)] = 1.0;
        d[(4, 5)] = 1.0;
        let p = DMatrix::from_fn(6, 6, |i, j| if i == j { 2.0 } else { 0.1 * ((i * 7 + j * 3) % 5) as f64 });
        let m = &p * d * p.clone().try_inverse().unwrap();
        let s = spectrum_with_jordan(&m, &tol()).unwrap();
        assert_eq!(s.items.len(), 2);
        assert_eq!(s.items[0].blocks, vec![3]);
        assert_eq!(s.items[1].blocks, vec![2, 1]);
    }

    #[test]
    fn exp_examples() {
        let z = matrix_exp(&DMatrix::zeros(3, 3), 5.0);
        assert_eq!(z, DMatrix::identity(3, 3));
        let r = matrix_exp(&standard_j(1), PI / 2.0);
        assert!((r - standard_j(1)).amax() < 1e-14);
        let h = matrix_exp(&mat(2, &[1.0, 0.0, 0.0, -1.0]), 1.0);
        assert!((h[(0, 0)] - E).abs() < 1e-14);
        assert!((h[(1, 1)] - 1.0 / E).abs() < 1e-15);
        assert_eq!(h[(0, 1)], 0.0);
        assert_eq!(h[(1, 0)], 0.0);
    }

    #[test]
    fn exp_keeps_block_diagonal_zeros() {
        let a = symplectic_direct_sum(&[&mat(2, &[3.0, 0.0, 0.0, 3.0]), &mat(2, &[0.0, 2.5, 2.5, 0.0])]);
        let x = standard_j(2) * a;
        let e = matrix_exp(&x, 20.0);
        for (i, j) in [(0, 1), (0, 3), (1, 0), (1, 2), (2, 1), (2, 3), (3, 0), (3, 2)] {
            assert_eq!(e[(i, j)], 0.0, "entry ({i},{j})");
        }
    }

    #[test]
    fn kernel_dim_examples() {
        let t = tol();
        assert_eq!(kernel_dim(&DMatrix::zeros(4, 4), &t), 4);
        let id = DMatrix::<f64>::identity(2, 2);
        let full_turn = matrix_exp(&standard_j(1), 2.0 * PI) - &id;
        assert_eq!(kernel_dim(&full_turn, &t), 2);
        let hyp = matrix_exp(&(standard_j(1) * mat(2, &[0.0, 1.0, 1.0, 0.0])), 1.0) - &id;
        assert_eq!(kernel_dim(&hyp, &t), 0);
    }

    #[test]
    fn restricted_signature_examples() {
        let t = tol();
        let id2 = SymMatrix::from_diagonal(&[1.0, 1.0]).unwrap();
        assert_eq!(restricted_signature(&id2, &DMatrix::identity(2, 2), &t).unwrap(), 2);
        let bal = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(restricted_signature(&bal, &DMatrix::identity(2, 2), &t).unwrap(), 0);
        let s = SymMatrix::from_diagonal(&[1.0, 1.0, 2.0, 2.0]).unwrap();
        let mut basis = DMatrix::zeros(4, 2);
        basis[(1, 0)] = 1.0;
        basis[(3, 1)] = 1.0;
        assert_eq!(restricted_signature(&s, &basis, &t).unwrap(), 2);
    }

    #[test]
    fn restricted_signature_reports_degeneracy() {
        // q p restricted to the Lagrangian q-axis vanishes
        let s = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let basis = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            restricted_signature(&s, &basis, &tol()),
            Err(Error::DegenerateRestriction { .. })
        ));
    }

    #[test]
    fn direct_sum_interleaves_q_and_p() {
        let a = mat(2, &[1.0, 2.0, 2.0, 3.0]);
        let b = mat(2, &[5.0, 6.0, 6.0, 7.0]);
        let s = symplectic_direct_sum(&[&a, &b]);
        assert_eq!(s[(0, 0)], 1.0);
        assert_eq!(s[(0, 2)], 2.0);
        assert_eq!(s[(2, 2)], 3.0);
        assert_eq!(s[(1, 1)], 5.0);
        assert_eq!(s[(1, 3)], 6.0);
        assert_eq!(s[(3, 3)], 7.0);
        assert_eq!(summand_coordinates(&[1, 1], 1), vec![1, 3]);
        // J of the sum is the sum of the J's
        assert_eq!(symplectic_direct_sum(&[&standard_j(1), &standard_j(2)]), standard_j(3));
    }

    #[test]
    fn fixed_space_dim_ignores_hyperbolic_growth() {
        let t = tol();
        let a = symplectic_direct_sum(&[&mat(2, &[1.0, 0.0, 0.0, 1.0]), &mat(2, &[1.0, 0.0, 0.0, -1.0])]);
        let x = standard_j(2) * a;
        assert_eq!(fixed_space_dim(&x, 2.0 * PI * 10.0, &t).unwrap(), 2);
        assert_eq!(fixed_space_dim(&x, 1.0, &t).unwrap(), 0);
    }
}
