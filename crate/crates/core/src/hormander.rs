//! Hörmander normal forms of quadratic Hamiltonians.
//!
//! A block is determined by one Jordan block of `J A` with eigenvalue `λ`:
//! real `λ` gives kind `a`, genuinely complex `λ` kind `b`, and purely
//! imaginary `λ` kind `c` (which carries an extra sign `γ`).

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symlin::{
    hamiltonian_generator, imaginary_eigenspace, restricted_inertia, spectrum_with_jordan,
    symplectic_direct_sum, SymMatrix, Tolerances,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    A,
    B,
    C,
}

impl BlockKind {
    pub fn letter(self) -> char {
        match self {
            BlockKind::A => 'a',
            BlockKind::B => 'b',
            BlockKind::C => 'c',
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl std::str::FromStr for BlockKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(BlockKind::A),
            "b" | "B" => Ok(BlockKind::B),
            "c" | "C" => Ok(BlockKind::C),
            other => Err(Error::DimensionMismatch(format!("unknown block kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HormanderBlock {
    pub kind: BlockKind,
    pub m: usize,
    /// Representative eigenvalue: `|λ|` for kind a, `|Re| + i|Im|` for kind b,
    /// `i|Im|` for kind c.
    pub lambda: Complex64,
    pub gamma: Option<i8>,
    pub matrix: SymMatrix,
}

impl HormanderBlock {
    /// Half the dimension of the symplectic subspace the block acts on.
    pub fn half_dim(&self) -> usize {
        self.matrix.half_dim()
    }

    /// The signature predicted by the normal form, as `(positive, negative)`.
    pub fn formula_signature(&self) -> (usize, usize) {
        let m = self.m;
        match self.kind {
            BlockKind::A => (m, m),
            BlockKind::B => (2 * m, 2 * m),
            BlockKind::C if m.is_multiple_of(2) => (m, m),
            BlockKind::C => {
                if self.gamma.unwrap_or(1) > 0 {
                    (m + 1, m - 1)
                } else {
                    (m - 1, m + 1)
                }
            }
        }
    }
}

/// Builds the normal-form block of the given kind.
///
/// For kind c the entries are read off the block Hamiltonian
/// `γ/2 (|Im λ| Σ (q_j q_{m+1-j} + p_j p_{m+1-j}) - Σ (q_{j+1} q_{m+1-j} + p_j p_{m-j}))`,
/// so the centre entries equal their anti-diagonal neighbours.
pub fn build_block(kind: BlockKind, m: usize, lambda: Complex64, gamma: Option<i8>) -> Result<HormanderBlock> {
    if m == 0 {
        return Err(Error::DimensionMismatch("block size m must be positive".into()));
    }
    let incompatible = || Error::IncompatibleEigenvalue { kind: kind.letter(), lambda };
    let (re, im) = (lambda.re.abs(), lambda.im.abs());
    let matrix = match kind {
        BlockKind::A => {
            if lambda.im != 0.0 || re == 0.0 || gamma.is_some() {
                return Err(incompatible());
            }
            let b = DMatrix::from_fn(m, m, |j, k| {
                if j == k {
                    re
                } else if j == k + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            off_diagonal(&b)
        }
        BlockKind::B => {
            if re == 0.0 || im == 0.0 || gamma.is_some() {
                return Err(incompatible());
            }
            // 1-based: b_jj = |Re|, b_{2i,2i-1} = |Im|, b_{2i-1,2i} = -|Im|, b_{j,j+2} = 1
            let b = DMatrix::from_fn(2 * m, 2 * m, |j0, k0| {
                let (j, k) = (j0 + 1, k0 + 1);
                if j == k {
                    re
                } else if j % 2 == 0 && k + 1 == j {
                    im
                } else if k % 2 == 0 && j + 1 == k {
                    -im
                } else if k == j + 2 {
                    1.0
                } else {
                    0.0
                }
            });
            off_diagonal(&b)
        }
        BlockKind::C => {
            let g = match gamma {
                Some(g @ (1 | -1)) => f64::from(g),
                _ => return Err(incompatible()),
            };
            if lambda.re != 0.0 || im == 0.0 {
                return Err(incompatible());
            }
            let b = DMatrix::from_fn(m, m, |j0, k0| {
                let s = j0 + k0 + 2;
                if s == m + 1 {
                    g * im
                } else if s == m + 2 {
                    -g
                } else {
                    0.0
                }
            });
            let bp = DMatrix::from_fn(m, m, |j, k| b[(m - 1 - j, m - 1 - k)]);
            let mut a = DMatrix::zeros(2 * m, 2 * m);
            a.view_mut((0, 0), (m, m)).copy_from(&b);
            a.view_mut((m, m), (m, m)).copy_from(&bp);
            a
        }
    };
    let lambda = match kind {
        BlockKind::A => Complex64::new(re, 0.0),
        BlockKind::B => Complex64::new(re, im),
        BlockKind::C => Complex64::new(0.0, im),
    };
    Ok(HormanderBlock { kind, m, lambda, gamma, matrix: SymMatrix::new(matrix)? })
}

fn off_diagonal(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    a.view_mut((0, n), (n, n)).copy_from(b);
    a.view_mut((n, 0), (n, n)).copy_from(&b.transpose());
    a
}

/// Signature `(positive, negative)` of the block, checked against its eigenvalues.
pub fn block_signature(block: &HormanderBlock, tol: &Tolerances) -> Result<(usize, usize)> {
    let formula = block.formula_signature();
    let inertia = block.matrix.inertia(tol);
    let numerical = (inertia.positive, inertia.negative);
    if inertia.zero != 0 || numerical != formula {
        return Err(Error::SignatureMismatch { kind: block.kind.letter(), m: block.m, formula, numerical });
    }
    Ok(formula)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub blocks: Vec<HormanderBlock>,
    pub total_dim: usize,
}

impl NormalForm {
    pub fn new(mut blocks: Vec<HormanderBlock>) -> Self {
        blocks.sort_by(block_order);
        let total_dim = blocks.iter().map(|b| b.matrix.dim()).sum();
        Self { blocks, total_dim }
    }

    /// The block-diagonal matrix in standard coordinates.
    pub fn assembly(&self) -> SymMatrix {
        let parts: Vec<&DMatrix<f64>> = self.blocks.iter().map(|b| b.matrix.matrix()).collect();
        SymMatrix::new(symplectic_direct_sum(&parts)).expect("direct sum of symmetric blocks is symmetric")
    }

    /// Sum of the formula signatures of all blocks.
    pub fn signature(&self) -> (usize, usize) {
        self.blocks.iter().fold((0, 0), |(p, q), b| {
            let (bp, bq) = b.formula_signature();
            (p + bp, q + bq)
        })
    }
}

fn block_order(x: &HormanderBlock, y: &HormanderBlock) -> std::cmp::Ordering {
    x.kind
        .cmp(&y.kind)
        .then(x.lambda.re.abs().total_cmp(&y.lambda.re.abs()))
        .then(x.lambda.im.abs().total_cmp(&y.lambda.im.abs()))
        .then(x.m.cmp(&y.m))
        .then(x.gamma.cmp(&y.gamma))
}

/// Reads block data off the spectrum of `J A`.
///
/// One block is emitted per Jordan block of the representative eigenvalue of
/// each orbit `{λ, -λ, λ̄, -λ̄}`. The sign `γ` of an imaginary pair `±iμ` with
/// only simple Jordan blocks is the inertia of `A` on the real invariant
/// subspace of `±iμ`: each positive plane contributes a block with `γ = +1`.
pub fn classify(a: &SymMatrix, tol: &Tolerances) -> Result<NormalForm> {
    if a.dim() == 0 {
        return Ok(NormalForm::new(Vec::new()));
    }
    let sv = a.matrix().singular_values();
    let smax = sv.max();
    if sv.min() <= tol.rank_cut * smax {
        return Err(Error::DegenerateInput);
    }
    let x = hamiltonian_generator(a);
    let spec = spectrum_with_jordan(&x, tol)?;
    let radius = spec.radius.max(tol.eig_cluster * spec.scale());

    // every item needs partners -λ and conj(λ) with the same blocks
    for item in &spec.items {
        for partner in [-item.value, item.value.conj()] {
            match spec.find(partner, radius) {
                Some(p) if p.blocks == item.blocks => {}
                _ => return Err(Error::SpectrumAsymmetric),
            }
        }
    }

    let mut blocks = Vec::new();
    for item in &spec.items {
        let z = item.value;
        let real = z.im == 0.0;
        let imaginary = z.re == 0.0;
        if real {
            if z.re > 0.0 {
                for &m in &item.blocks {
                    blocks.push(build_block(BlockKind::A, m, z, None)?);
                }
            }
        } else if imaginary {
            if z.im > 0.0 {
                if let Some(&m) = item.blocks.iter().find(|&&m| m > 1) {
                    return Err(Error::GammaUndetermined { lambda: z, m });
                }
                let basis = imaginary_eigenspace(&x, z.im, tol);
                let inertia = restricted_inertia(a, &basis, tol)?;
                let planes = item.blocks.len();
                if basis.ncols() != 2 * planes || inertia.positive % 2 != 0 {
                    return Err(Error::GammaUndetermined { lambda: z, m: 1 });
                }
                let plus = inertia.positive / 2;
                for i in 0..planes {
                    let g = if i < plus { 1 } else { -1 };
                    blocks.push(build_block(BlockKind::C, 1, z, Some(g))?);
                }
            }
        } else if z.re > 0.0 && z.im > 0.0 {
            for &m in &item.blocks {
                blocks.push(build_block(BlockKind::B, m, z, None)?);
            }
        }
    }
    let nf = NormalForm::new(blocks);
    if nf.total_dim != a.dim() {
        return Err(Error::SpectrumAsymmetric);
    }
    Ok(nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symlin::standard_j;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn kind_a_examples() {
        let b = build_block(BlockKind::A, 1, re(1.0), None).unwrap();
        assert_eq!(b.matrix.rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = build_block(BlockKind::A, 2, re(3.0), None).unwrap();
        let a = b.matrix.matrix();
        assert_eq!(a.view((0, 2), (2, 2)), DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 1.0, 3.0]));
        assert_eq!(a.view((2, 0), (2, 2)), DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 3.0]));
        assert_eq!(block_signature(&b, &tol()).unwrap(), (2, 2));
    }

    #[test]
    fn kind_a_hamiltonian_matches_entries() {
        // H = |λ| Σ q_j p_j + Σ q_{j+1} p_j
        let (lam, m) = (1.7, 3);
        let b = build_block(BlockKind::A, m, re(lam), None).unwrap();
        let x: Vec<f64> = (0..2 * m).map(|i| 0.3 + 0.7 * i as f64).collect();
        let (q, p) = x.split_at(m);
        let mut h = 0.0;
        for j in 0..m {
            h += lam * q[j] * p[j];
        }
        for j in 0..m - 1 {
            h += q[j + 1] * p[j];
        }
        let v = nalgebra::DVector::from_column_slice(&x);
        let quad = 0.5 * (v.transpose() * b.matrix.matrix() * &v)[(0, 0)];
        assert!((h - quad).abs() < 1e-12);
    }

    #[test]
    fn kind_b_hamiltonian_matches_entries() {
        let (r, i, m) = (0.8, 1.3, 2);
        let b = build_block(BlockKind::B, m, Complex64::new(-r, i), None).unwrap();
        let d = 2 * m;
        let x: Vec<f64> = (0..2 * d).map(|k| ((k * 5 + 1) % 7) as f64 - 2.5).collect();
        let (q, p) = x.split_at(d);
        let mut h = 0.0;
        for j in 0..d - 2 {
            h += q[j] * p[j + 2];
        }
        for j in 0..d {
            h += r * q[j] * p[j];
        }
        for j in 1..=m {
            h += i * (q[2 * j - 1] * p[2 * j - 2] - q[2 * j - 2] * p[2 * j - 1]);
        }
        let v = nalgebra::DVector::from_column_slice(&x);
        let quad = 0.5 * (v.transpose() * b.matrix.matrix() * &v)[(0, 0)];
        assert!((h - quad).abs() < 1e-12);
        assert_eq!(block_signature(&b, &tol()).unwrap(), (4, 4));
    }

    #[test]
    fn kind_c_hamiltonian_matches_entries() {
        for m in 1..=5 {
            for g in [1i8, -1] {
                let mu = 1.9;
                let b = build_block(BlockKind::C, m, Complex64::new(0.0, mu), Some(g)).unwrap();
                let x: Vec<f64> = (0..2 * m).map(|k| ((k * 3 + 2) % 5) as f64 - 1.5).collect();
                let (q, p) = x.split_at(m);
                let mut s = 0.0;
                for j in 0..m {
                    s += mu * (q[j] * q[m - 1 - j] + p[j] * p[m - 1 - j]);
                }
                for j in 1..m {
                    // q_{j+1} q_{m+1-j} + p_j p_{m-j}, 1-based
                    s -= q[j] * q[m - j] + p[j - 1] * p[m - j - 1];
                }
                let h = f64::from(g) / 2.0 * s;
                let v = nalgebra::DVector::from_column_slice(&x);
                let quad = 0.5 * (v.transpose() * b.matrix.matrix() * &v)[(0, 0)];
                assert!((h - quad).abs() < 1e-12, "m={m} g={g}");
            }
        }
    }

    #[test]
    fn kind_c_m1_is_round_oscillator() {
        let b = build_block(BlockKind::C, 1, Complex64::new(0.0, 2.5), Some(1)).unwrap();
        assert_eq!(b.matrix.rows(), vec![vec![2.5, 0.0], vec![0.0, 2.5]]);
        assert_eq!(block_signature(&b, &tol()).unwrap(), (2, 0));
        let b = build_block(BlockKind::C, 1, Complex64::new(0.0, 2.5), Some(-1)).unwrap();
        assert_eq!(block_signature(&b, &tol()).unwrap(), (0, 2));
    }

    #[test]
    fn signatures_match_formula_for_small_m() {
        let t = tol();
        for m in 1..=4 {
            let a = build_block(BlockKind::A, m, re(0.9), None).unwrap();
            assert_eq!(block_signature(&a, &t).unwrap(), (m, m));
            let b = build_block(BlockKind::B, m, Complex64::new(1.1, 0.6), None).unwrap();
            assert_eq!(block_signature(&b, &t).unwrap(), (2 * m, 2 * m));
            for g in [1, -1] {
                let c = build_block(BlockKind::C, m, Complex64::new(0.0, 1.4), Some(g)).unwrap();
                block_signature(&c, &t).unwrap();
            }
        }
    }

    #[test]
    fn blocks_have_the_right_jordan_data() {
        let t = tol();
        let cases = [
            (BlockKind::A, 3, re(1.5), None),
            (BlockKind::B, 2, Complex64::new(0.7, 1.2), None),
            (BlockKind::C, 1, Complex64::new(0.0, 2.0), Some(1)),
            (BlockKind::C, 2, Complex64::new(0.0, 2.0), Some(1)),
            (BlockKind::C, 3, Complex64::new(0.0, 2.0), Some(-1)),
        ];
        for (kind, m, lambda, gamma) in cases {
            let b = build_block(kind, m, lambda, gamma).unwrap();
            let spec = spectrum_with_jordan(&hamiltonian_generator(&b.matrix), &t).unwrap();
            for it in &spec.items {
                assert_eq!(it.blocks, vec![m], "{kind} m={m}");
                assert!((it.value.re.abs() - lambda.re.abs()).abs() < 1e-6);
                assert!((it.value.im.abs() - lambda.im.abs()).abs() < 1e-6);
            }
            let expected_items = if kind == BlockKind::B { 4 } else { 2 };
            assert_eq!(spec.items.len(), expected_items);
        }
    }

    #[test]
    fn incompatible_eigenvalues_are_rejected() {
        let bad = [
            (BlockKind::A, Complex64::new(1.0, 1.0), None),
            (BlockKind::A, re(0.0), None),
            (BlockKind::B, re(1.0), None),
            (BlockKind::B, Complex64::new(0.0, 1.0), None),
            (BlockKind::C, Complex64::new(1.0, 1.0), Some(1)),
            (BlockKind::C, Complex64::new(0.0, 1.0), None),
            (BlockKind::C, Complex64::new(0.0, 1.0), Some(2)),
        ];
        for (kind, lambda, gamma) in bad {
            assert!(
                matches!(build_block(kind, 1, lambda, gamma), Err(Error::IncompatibleEigenvalue { .. })),
                "{kind} {lambda}"
            );
        }
    }

    #[test]
    fn classify_examples() {
        let t = tol();
        let nf = classify(&SymMatrix::from_diagonal(&[2.0, 2.0]).unwrap(), &t).unwrap();
        assert_eq!(nf.blocks.len(), 1);
        assert_eq!((nf.blocks[0].kind, nf.blocks[0].m, nf.blocks[0].gamma), (BlockKind::C, 1, Some(1)));
        assert!((nf.blocks[0].lambda.im - 2.0).abs() < 1e-12);

        let nf = classify(&SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(), &t).unwrap();
        assert_eq!((nf.blocks[0].kind, nf.blocks[0].m), (BlockKind::A, 1));
        assert!((nf.blocks[0].lambda.re - 1.0).abs() < 1e-12);

        let nf = classify(&SymMatrix::from_diagonal(&[1.0, 2.0, 1.0, 2.0]).unwrap(), &t).unwrap();
        let data: Vec<_> = nf.blocks.iter().map(|b| (b.kind, b.m, b.gamma, b.lambda.im.round() as i64)).collect();
        assert_eq!(data, vec![(BlockKind::C, 1, Some(1), 1), (BlockKind::C, 1, Some(1), 2)]);
    }

    #[test]
    fn classify_negative_definite_and_mixed_gamma() {
        let t = tol();
        let nf = classify(&SymMatrix::from_diagonal(&[-1.0, -1.0]).unwrap(), &t).unwrap();
        assert_eq!(nf.blocks[0].gamma, Some(-1));
        // two planes at the same frequency with opposite Krein signs
        let a = symplectic_direct_sum(&[
            &DMatrix::from_diagonal_element(2, 2, 1.5),
            &DMatrix::from_diagonal_element(2, 2, -1.5),
        ]);
        let nf = classify(&SymMatrix::new(a).unwrap(), &t).unwrap();
        let gammas: Vec<_> = nf.blocks.iter().map(|b| b.gamma).collect();
        assert_eq!(gammas, vec![Some(-1), Some(1)]);
    }

    #[test]
    fn classify_rejects_singular_and_undetermined() {
        let t = tol();
        assert!(matches!(classify(&SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap(), &t), Err(Error::DegenerateInput)));
        let c2 = build_block(BlockKind::C, 2, Complex64::new(0.0, 1.0), Some(1)).unwrap();
        assert!(matches!(classify(&c2.matrix, &t), Err(Error::GammaUndetermined { m: 2, .. })));
    }

    #[test]
    fn classify_round_trips_blocks() {
        let t = tol();
        let blocks = vec![
            build_block(BlockKind::A, 1, re(0.8), None).unwrap(),
            build_block(BlockKind::A, 2, re(2.1), None).unwrap(),
            build_block(BlockKind::B, 1, Complex64::new(1.3, 0.4), None).unwrap(),
            build_block(BlockKind::C, 1, Complex64::new(0.0, 3.0), Some(-1)).unwrap(),
        ];
        let nf = NormalForm::new(blocks);
        let back = classify(&nf.assembly(), &t).unwrap();
        assert_eq!(back.blocks.len(), nf.blocks.len());
        for (x, y) in nf.blocks.iter().zip(&back.blocks) {
            assert_eq!((x.kind, x.m, x.gamma), (y.kind, y.m, y.gamma));
            assert!((x.lambda - y.lambda).norm() < 1e-6);
        }
        let (p, q) = back.signature();
        let inertia = nf.assembly().inertia(&t);
        assert_eq!((p, q), (inertia.positive, inertia.negative));
    }

    #[test]
    fn standard_j_of_assembly_is_sum_of_block_generators() {
        let nf = NormalForm::new(vec![
            build_block(BlockKind::A, 1, re(1.0), None).unwrap(),
            build_block(BlockKind::C, 1, Complex64::new(0.0, 2.0), Some(1)).unwrap(),
        ]);
        let a = nf.assembly();
        let x = standard_j(2) * a.matrix();
        let parts: Vec<DMatrix<f64>> =
            nf.blocks.iter().map(|b| hamiltonian_generator(&b.matrix)).collect();
        let refs: Vec<&DMatrix<f64>> = parts.iter().collect();
        assert_eq!(x, symplectic_direct_sum(&refs));
    }
}
