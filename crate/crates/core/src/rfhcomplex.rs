//! Graded ℤ₂ bookkeeping, an exact-sequence solver and the computation of
//! the Rabinowitz Floer homology of a split quadratic Hamiltonian.
//!
//! The Floer differential is never evaluated. The homology is assembled from
//! structural facts (isomorphisms between filtered pieces, vanishing of the
//! compact side, singular homology of the level sets) by solving the long
//! exact sequences of the action filtration.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::czindex::{Generator, Pole};
use crate::error::{Error, Result};
use crate::orbits::{census, ActionWindow, Side};
use crate::symlin::Tolerances;
use crate::tentacular::QuadraticHamiltonian;

/// Finite-dimensional graded vector space over ℤ₂. Absent degrees are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GradedZ2Space {
    pub dims: BTreeMap<i64, usize>,
}

impl GradedZ2Space {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(i64, usize)]) -> Self {
        let mut s = Self::zero();
        for &(d, n) in pairs {
            s.add(d, n);
        }
        s
    }

    pub fn dim(&self, degree: i64) -> usize {
        self.dims.get(&degree).copied().unwrap_or(0)
    }

    pub fn add(&mut self, degree: i64, n: usize) {
        if n > 0 {
            *self.dims.entry(degree).or_insert(0) += n;
        }
    }

    pub fn set(&mut self, degree: i64, n: usize) {
        if n == 0 {
            self.dims.remove(&degree);
        } else {
            self.dims.insert(degree, n);
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    pub fn support(&self) -> Vec<i64> {
        self.dims.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.dims.is_empty()
    }

    /// `V[s]_d = V_{d + s}`.
    pub fn shifted(&self, s: i64) -> Self {
        Self { dims: self.dims.iter().map(|(&d, &n)| (d - s, n)).collect() }
    }
}

impl fmt::Display for GradedZ2Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .dims
            .iter()
            .map(|(d, n)| if *n == 1 { format!("Z2[{d}]") } else { format!("Z2^{n}[{d}]") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Spaces whose singular homology is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    /// `Σ ≅ S^{n+k-1} × R^{n-k}`.
    Sigma { n: usize, k: usize },
    /// `Σ0 ≅ S^{2k-1}`.
    Sigma0 { k: usize },
    Point,
}

/// `H_*(space; ℤ₂)`.
pub fn singular_homology(space: SpaceTag) -> GradedZ2Space {
    match space {
        SpaceTag::Sigma { n, k } => sphere_homology(n + k - 1),
        SpaceTag::Sigma0 { k } => sphere_homology(2 * k - 1),
        SpaceTag::Point => GradedZ2Space::from_pairs(&[(0, 1)]),
    }
}

fn sphere_homology(d: usize) -> GradedZ2Space {
    GradedZ2Space::from_pairs(&[(0, 1), (d as i64, 1)])
}

/// `RFH⁺(H0)` and `RFH⁻(H0)` for the compact level set `Σ0 ⊂ R^{2k}`.
pub fn rfh_pm_compact(k: usize) -> (GradedZ2Space, GradedZ2Space) {
    let k = k as i64;
    (GradedZ2Space::from_pairs(&[(k + 1, 1)]), GradedZ2Space::from_pairs(&[(-k, 1)]))
}

/// What is known about one map of an exact sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFact {
    #[default]
    Unknown,
    Iso,
    Zero,
    Rank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Term {
    pub label: String,
    pub dim: Option<usize>,
}

/// `0 → T_0 → T_1 → .. → T_{L-1} → 0`, exact everywhere.
///
/// `maps[i]` describes `T_i → T_{i+1}`, so there are `L - 1` of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactSequenceProblem {
    pub terms: Vec<Term>,
    pub maps: Vec<MapFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactSequenceSolution {
    pub dims: Vec<usize>,
    /// `ranks[i]` is the rank of `T_i → T_{i+1}`.
    pub ranks: Vec<usize>,
}

impl ExactSequenceProblem {
    pub fn new(terms: Vec<(&str, Option<usize>)>, maps: Vec<MapFact>) -> Result<Self> {
        let terms: Vec<Term> = terms.into_iter().map(|(l, d)| Term { label: l.to_string(), dim: d }).collect();
        if terms.is_empty() || maps.len() + 1 != terms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} terms need {} maps, got {}",
                terms.len(),
                terms.len().saturating_sub(1),
                maps.len()
            )));
        }
        Ok(Self { terms, maps })
    }

    /// The same problem with every dimension taken from `sol`.
    pub fn with_dims(&self, sol: &ExactSequenceSolution) -> Self {
        let terms = self.terms.iter().zip(&sol.dims).map(|(t, &d)| Term { label: t.label.clone(), dim: Some(d) }).collect();
        Self { terms, maps: self.maps.clone() }
    }

    pub fn solve(&self) -> Result<ExactSequenceSolution> {
        solve_exact_sequence(self)
    }
}

/// Solves for all dimensions and ranks.
///
/// With `r_i` the rank of the map into `T_i` (so `r_0 = r_L = 0`), exactness
/// says `dim T_i = r_i + r_{i+1}`. Known dimensions and map facts pin down
/// ranks; the rest is settled by propagation and, where a choice remains,
/// by bounded search. More than one solution is `Underdetermined`, none is
/// `Inconsistent`.
pub fn solve_exact_sequence(p: &ExactSequenceProblem) -> Result<ExactSequenceSolution> {
    let len = p.terms.len();
    // r[i] = rank into T_i, i = 0..=len
    let mut r: Vec<Option<usize>> = vec![None; len + 1];
    r[0] = Some(0);
    r[len] = Some(0);
    let mut iso_edges = Vec::new();
    for (i, fact) in p.maps.iter().enumerate() {
        // map T_i → T_{i+1} has rank r[i + 1]
        match *fact {
            MapFact::Unknown => {}
            MapFact::Zero => assign(&mut r, i + 1, 0)?,
            MapFact::Rank(v) => assign(&mut r, i + 1, v)?,
            MapFact::Iso => {
                // injective and surjective: the neighbouring maps vanish
                assign(&mut r, i, 0)?;
                assign(&mut r, i + 2, 0)?;
                iso_edges.push(i);
            }
        }
    }
    let dims: Vec<Option<usize>> = p.terms.iter().map(|t| t.dim).collect();
    let mut found: Vec<Vec<usize>> = Vec::new();
    search(&dims, r, &mut found)?;
    match found.len() {
        0 => Err(Error::Inconsistent),
        1 => {
            let r = found.pop().expect("one solution");
            let dims: Vec<usize> = (0..len).map(|i| r[i] + r[i + 1]).collect();
            for &i in &iso_edges {
                if dims[i] != dims[i + 1] {
                    return Err(Error::Inconsistent);
                }
            }
            Ok(ExactSequenceSolution { dims, ranks: r[1..len].to_vec() })
        }
        _ => Err(Error::Underdetermined),
    }
}

fn assign(r: &mut [Option<usize>], i: usize, v: usize) -> Result<()> {
    match r[i] {
        Some(old) if old != v => Err(Error::Inconsistent),
        _ => {
            r[i] = Some(v);
            Ok(())
        }
    }
}

/// Propagates `d_i = r_i + r_{i+1}` to a fixed point.
fn propagate(dims: &[Option<usize>], r: &mut [Option<usize>]) -> Result<()> {
    loop {
        let mut changed = false;
        for (i, d) in dims.iter().enumerate() {
            let Some(d) = *d else { continue };
            match (r[i], r[i + 1]) {
                (Some(a), Some(b)) if a + b != d => return Err(Error::Inconsistent),
                (Some(a), None) => {
                    r[i + 1] = Some(d.checked_sub(a).ok_or(Error::Inconsistent)?);
                    changed = true;
                }
                (None, Some(b)) => {
                    r[i] = Some(d.checked_sub(b).ok_or(Error::Inconsistent)?);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

fn search(dims: &[Option<usize>], mut r: Vec<Option<usize>>, found: &mut Vec<Vec<usize>>) -> Result<()> {
    if found.len() >= 2 {
        return Ok(());
    }
    if propagate(dims, &mut r).is_err() {
        return Ok(());
    }
    let Some(i) = r.iter().position(Option::is_none) else {
        found.push(r.into_iter().map(|v| v.expect("all assigned")).collect());
        return Ok(());
    };
    // r_i bounds: dim T_{i-1} and dim T_i when known
    let bound = [i.checked_sub(1).and_then(|j| dims[j]), dims.get(i).copied().flatten()]
        .into_iter()
        .flatten()
        .min();
    let Some(bound) = bound else {
        // a free rank between two unknown terms: infinitely many solutions
        return Err(Error::Underdetermined);
    };
    for v in 0..=bound {
        let mut next = r.clone();
        next[i] = Some(v);
        search(dims, next, found)?;
        if found.len() >= 2 {
            break;
        }
    }
    Ok(())
}

/// Per-degree facts about one map of a long exact triangle.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GradedMapFacts {
    pub by_degree: BTreeMap<i64, MapFact>,
    pub default: MapFact,
}

impl GradedMapFacts {
    pub fn unknown() -> Self {
        Self::default()
    }

    pub fn iso() -> Self {
        Self { by_degree: BTreeMap::new(), default: MapFact::Iso }
    }

    pub fn at(mut self, degree: i64, fact: MapFact) -> Self {
        self.by_degree.insert(degree, fact);
        self
    }

    pub fn get(&self, degree: i64) -> MapFact {
        self.by_degree.get(&degree).copied().unwrap_or(self.default)
    }
}

/// `.. → A_* → B_* → C_* → A_{*-1} → ..` with at most one unknown term.
///
/// The facts are indexed by the degree of the source: `f` is `A_d → B_d`,
/// `g` is `B_d → C_d` and `h` is the connecting map `C_d → A_{d-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradedTriangle {
    pub labels: [String; 3],
    pub terms: [Option<GradedZ2Space>; 3],
    pub f: GradedMapFacts,
    pub g: GradedMapFacts,
    pub h: GradedMapFacts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleSolution {
    pub terms: [GradedZ2Space; 3],
    /// Ranks of `f`, `g`, `h` by source degree (zero ranks omitted).
    pub ranks: [GradedZ2Space; 3],
}

impl GradedTriangle {
    pub fn new(
        labels: [&str; 3],
        terms: [Option<GradedZ2Space>; 3],
        f: GradedMapFacts,
        g: GradedMapFacts,
        h: GradedMapFacts,
    ) -> Result<Self> {
        if terms.iter().filter(|t| t.is_none()).count() > 1 {
            return Err(Error::DimensionMismatch("a triangle may have at most one unknown term".into()));
        }
        Ok(Self { labels: labels.map(str::to_string), terms, f, g, h })
    }

    /// Unrolls the triangle over the degrees around the known supports
    /// (zero beyond them) and solves the resulting bounded sequence.
    pub fn solve(&self) -> Result<TriangleSolution> {
        let support: Vec<i64> = self.terms.iter().flatten().flat_map(|t| t.support()).collect();
        let (lo, hi) = match (support.iter().min(), support.iter().max()) {
            (Some(&lo), Some(&hi)) => (lo - 2, hi + 2),
            _ => (-2, 2),
        };
        let mut terms = Vec::new();
        let mut maps = Vec::new();
        let mut slots = Vec::new();
        let facts = [&self.f, &self.g, &self.h];
        let mut d = hi;
        while d >= lo {
            for (pos, fact) in facts.iter().enumerate() {
                let dim = self.terms[pos].as_ref().map(|t| t.dim(d));
                terms.push((format!("{}_{d}", self.labels[pos]), dim));
                slots.push((pos, d));
                // the connecting map out of the last C leaves the window
                if !(pos == 2 && d == lo) {
                    maps.push(fact.get(d));
                }
            }
            d -= 1;
        }
        let problem = ExactSequenceProblem {
            terms: terms.into_iter().map(|(label, dim)| Term { label, dim }).collect(),
            maps,
        };
        let sol = solve_exact_sequence(&problem)?;
        let mut out_terms: [GradedZ2Space; 3] = Default::default();
        let mut ranks: [GradedZ2Space; 3] = Default::default();
        for (i, &(pos, d)) in slots.iter().enumerate() {
            out_terms[pos].set(d, sol.dims[i]);
            if let Some(&rk) = sol.ranks.get(i) {
                ranks[pos].set(d, rk);
            }
        }
        Ok(TriangleSolution { terms: out_terms, ranks })
    }
}

/// Rank of `δ` given a commuting square `Ψ' ∘ δ = δ' ∘ Ψ` in which both
/// vertical maps are isomorphisms at the degrees involved.
pub fn transfer_rank(rank_other: usize, psi_source: MapFact, psi_target: MapFact) -> Option<usize> {
    (psi_source == MapFact::Iso && psi_target == MapFact::Iso).then_some(rank_other)
}

/// Inputs to the computation that are taken as known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralFacts {
    pub n: usize,
    pub k: usize,
    /// `RFH(H0)`, zero because `Σ0` is displaceable.
    pub rfh_h0: GradedZ2Space,
    pub rfh_plus_h0: GradedZ2Space,
    pub rfh_minus_h0: GradedZ2Space,
    /// `Ψ⁺: RFH⁺(H) → RFH⁺(H0)`.
    pub psi_plus: GradedMapFacts,
    /// `Ψ⁰: H_{*+n-1}(Σ) → H_{*+k-1}(Σ0)`.
    pub psi_zero: GradedMapFacts,
    /// `Ψ⁻: RFH⁻(H) → RFH⁻(H0)`.
    pub psi_minus: GradedMapFacts,
}

impl StructuralFacts {
    pub fn standard(n: usize, k: usize) -> Self {
        let (plus, minus) = rfh_pm_compact(k);
        let zero_except_k = GradedMapFacts { by_degree: BTreeMap::new(), default: MapFact::Zero }.at(k as i64, MapFact::Iso);
        Self {
            n,
            k,
            rfh_h0: GradedZ2Space::zero(),
            rfh_plus_h0: plus,
            rfh_minus_h0: minus,
            psi_plus: GradedMapFacts::iso(),
            psi_zero: zero_except_k,
            psi_minus: GradedMapFacts::iso(),
        }
    }
}

/// Every intermediate group of the computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RfhReport {
    pub n: usize,
    pub k: usize,
    pub rfh_plus: GradedZ2Space,
    pub rfh_minus: GradedZ2Space,
    pub rfh_nonneg_h0: GradedZ2Space,
    pub rfh_nonneg: GradedZ2Space,
    /// Rank of `RFH⁺_* → H_{*+n-1}(Σ)` on the `H0` and `H` sides, by degree.
    pub connecting_rank_h0: GradedZ2Space,
    pub connecting_rank_h: GradedZ2Space,
    pub rfh: GradedZ2Space,
}

/// Runs the diagram chase from the given facts.
pub fn rfh_from_facts(facts: &StructuralFacts) -> Result<RfhReport> {
    let (n, k) = (facts.n as i64, facts.k as i64);
    if facts.k < 1 || facts.k >= facts.n {
        return Err(Error::DimensionMismatch(format!("need 1 <= k <= n-1, got n={n}, k={k}")));
    }
    let shifted_sigma = singular_homology(SpaceTag::Sigma { n: facts.n, k: facts.k }).shifted(n - 1);
    let shifted_sigma0 = singular_homology(SpaceTag::Sigma0 { k: facts.k }).shifted(k - 1);

    // RFH⁻(H0) → RFH(H0) → RFH^{≥0}(H0) → RFH⁻_{*-1}(H0)
    let h0_exact2 = GradedTriangle::new(
        ["RFH-(H0)", "RFH(H0)", "RFH>=0(H0)"],
        [Some(facts.rfh_minus_h0.clone()), Some(facts.rfh_h0.clone()), None],
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
    )?;
    let rfh_nonneg_h0 = h0_exact2.solve()?.terms[2].clone();

    // H_{*+k-1}(Σ0) → RFH^{≥0}(H0) → RFH⁺(H0) → H_{*+k-2}(Σ0)
    let h0_exact1 = GradedTriangle::new(
        ["H(Sigma0)", "RFH>=0(H0)", "RFH+(H0)"],
        [Some(shifted_sigma0), Some(rfh_nonneg_h0.clone()), Some(facts.rfh_plus_h0.clone())],
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
    )?;
    let connecting_rank_h0 = h0_exact1.solve()?.ranks[2].clone();

    // RFH⁺(H) via Ψ⁺
    let mut rfh_plus = GradedZ2Space::zero();
    for (&d, &dim) in &facts.rfh_plus_h0.dims {
        if facts.psi_plus.get(d) != MapFact::Iso {
            return Err(Error::Underdetermined);
        }
        rfh_plus.set(d, dim);
    }

    // δ_H: RFH⁺_d(H) → H_{d+n-2}(Σ), compared with δ_{H0} through Ψ⁺ and Ψ⁰
    let mut h_facts = GradedMapFacts::unknown();
    let mut connecting_rank_h = GradedZ2Space::zero();
    for (&d, &r) in &connecting_rank_h0.dims {
        let rank = transfer_rank(r, facts.psi_plus.get(d), facts.psi_zero.get(d - 1)).ok_or(Error::Underdetermined)?;
        h_facts = h_facts.at(d, MapFact::Rank(rank));
        connecting_rank_h.set(d, rank);
    }
    for &d in facts.rfh_plus_h0.dims.keys() {
        if !connecting_rank_h0.dims.contains_key(&d) {
            let rank = transfer_rank(0, facts.psi_plus.get(d), facts.psi_zero.get(d - 1)).ok_or(Error::Underdetermined)?;
            h_facts = h_facts.at(d, MapFact::Rank(rank));
        }
    }

    // H_{*+n-1}(Σ) → RFH^{≥0}(H) → RFH⁺(H) → H_{*+n-2}(Σ)
    let h_exact1 = GradedTriangle::new(
        ["H(Sigma)", "RFH>=0(H)", "RFH+(H)"],
        [Some(shifted_sigma), None, Some(rfh_plus.clone())],
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
        h_facts,
    )?;
    let rfh_nonneg = h_exact1.solve()?.terms[1].clone();

    // RFH⁻(H) via Ψ⁻
    let mut rfh_minus = GradedZ2Space::zero();
    for (&d, &dim) in &facts.rfh_minus_h0.dims {
        if facts.psi_minus.get(d) != MapFact::Iso {
            return Err(Error::Underdetermined);
        }
        rfh_minus.set(d, dim);
    }

    // RFH⁻(H) → RFH(H) → RFH^{≥0}(H) → RFH⁻_{*-1}(H)
    let h_exact2 = GradedTriangle::new(
        ["RFH-(H)", "RFH(H)", "RFH>=0(H)"],
        [Some(rfh_minus.clone()), None, Some(rfh_nonneg.clone())],
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
        GradedMapFacts::unknown(),
    )?;
    let rfh = h_exact2.solve()?.terms[1].clone();

    Ok(RfhReport {
        n: facts.n,
        k: facts.k,
        rfh_plus,
        rfh_minus,
        rfh_nonneg_h0,
        rfh_nonneg,
        connecting_rank_h0,
        connecting_rank_h,
        rfh,
    })
}

/// `RFH_*(H)` for a valid split quadratic Hamiltonian.
pub fn rfh_full(h: &QuadraticHamiltonian, tol: &Tolerances) -> Result<RfhReport> {
    h.ensure_valid(tol)?;
    rfh_from_facts(&StructuralFacts::standard(h.n, h.k))
}

/// Two generators per family, minimum first, in census order.
pub fn generator_census(h: &QuadraticHamiltonian, w: &ActionWindow, tol: &Tolerances) -> Result<Vec<Generator>> {
    let mut out = Vec::new();
    for fam in census(h, w, tol)? {
        for pole in [Pole::Min, Pole::Max] {
            out.push(Generator::on(&fam, pole, h, tol)?);
        }
    }
    Ok(out)
}

/// True iff the two lists carry the same multiset of `(degree, action)`,
/// actions compared to within `1e-12` relative.
pub fn generators_correspond(a: &[&Generator], b: &[&Generator]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let key = |g: &&Generator| (g.grading.doubled, g.action);
    let mut ka: Vec<_> = a.iter().map(key).collect();
    let mut kb: Vec<_> = b.iter().map(key).collect();
    let order = |x: &(i64, f64), y: &(i64, f64)| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0));
    ka.sort_by(order);
    kb.sort_by(order);
    ka.iter().zip(&kb).all(|(x, y)| x.0 == y.0 && (x.1 - y.1).abs() <= 1e-12 * x.1.abs().max(1.0))
}

/// Positive-action generators of `H` and `H0` agree in degree and action.
pub fn positive_correspondence_check(h: &QuadraticHamiltonian, w: &ActionWindow, tol: &Tolerances) -> Result<bool> {
    let gens = generator_census(h, w, tol)?;
    let side = |s: Side| gens.iter().filter(|g| g.action > 0.0 && g.side == s).collect::<Vec<_>>();
    Ok(generators_correspond(&side(Side::H), &side(Side::H0)))
}
