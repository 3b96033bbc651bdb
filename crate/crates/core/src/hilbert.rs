//! Labeled Hilbert spaces for two atoms in a bimodal cavity, and the
//! elementary operators everything else is assembled from.
//!
//! The full space is the product of atom A (4 levels), atom B (5 levels) and
//! two cavity modes truncated at one photon each, 80 states in lexicographic
//! order. Smaller spaces (the 8-state invariant subspace, the effective
//! three- and two-state models) reuse the same machinery with their own kets.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Any atomic level name, before it is checked against a particular atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    GL,
    G0,
    GR,
    E0,
    EL,
    ER,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomLevelA {
    GL,
    G0,
    GR,
    E0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomLevelB {
    GL,
    G0,
    GR,
    EL,
    ER,
}

impl AtomLevelA {
    pub const ALL: [AtomLevelA; 4] = [Self::GL, Self::G0, Self::GR, Self::E0];

    pub fn is_excited(self) -> bool {
        self == Self::E0
    }
}

impl AtomLevelB {
    pub const ALL: [AtomLevelB; 5] = [Self::GL, Self::G0, Self::GR, Self::EL, Self::ER];

    pub fn is_excited(self) -> bool {
        matches!(self, Self::EL | Self::ER)
    }
}

impl TryFrom<Level> for AtomLevelA {
    type Error = Error;

    fn try_from(level: Level) -> Result<Self> {
        match level {
            Level::GL => Ok(Self::GL),
            Level::G0 => Ok(Self::G0),
            Level::GR => Ok(Self::GR),
            Level::E0 => Ok(Self::E0),
            other => Err(Error::Parameter(format!("atom A has no level {other:?}"))),
        }
    }
}

impl TryFrom<Level> for AtomLevelB {
    type Error = Error;

    fn try_from(level: Level) -> Result<Self> {
        match level {
            Level::GL => Ok(Self::GL),
            Level::G0 => Ok(Self::G0),
            Level::GR => Ok(Self::GR),
            Level::EL => Ok(Self::EL),
            Level::ER => Ok(Self::ER),
            other => Err(Error::Parameter(format!("atom B has no level {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    A,
    B,
}

/// Circular polarization of a cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    L,
    R,
}

/// One product ket |a⟩_A |b⟩_B |n_L, n_R⟩_c.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub a: AtomLevelA,
    pub b: AtomLevelB,
    pub n_l: u8,
    pub n_r: u8,
}

impl BasisState {
    pub fn new(a: AtomLevelA, b: AtomLevelB, n_l: u8, n_r: u8) -> Result<Self> {
        if n_l > 1 || n_r > 1 {
            return Err(Error::Parameter(format!(
                "photon numbers are truncated at 1 per mode, got ({n_l}, {n_r})"
            )));
        }
        Ok(Self { a, b, n_l, n_r })
    }

    pub(crate) const fn of(a: AtomLevelA, b: AtomLevelB, n_l: u8, n_r: u8) -> Self {
        Self { a, b, n_l, n_r }
    }

    /// Photons plus excited atoms.
    pub fn excitations(&self) -> u32 {
        self.n_l as u32
            + self.n_r as u32
            + self.a.is_excited() as u32
            + self.b.is_excited() as u32
    }

    pub fn photons(&self, mode: Mode) -> u8 {
        match mode {
            Mode::L => self.n_l,
            Mode::R => self.n_r,
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{:?},{:?},{}{}>", self.a, self.b, self.n_l, self.n_r)
    }
}

/// Kets of the reduced effective models: |φ₁⟩, the dressed state |Ψ_d⟩, and |ψ₃⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EffectiveKet {
    Phi1,
    Dark,
    Psi3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ket {
    Product(BasisState),
    Effective(EffectiveKet),
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ket::Product(s) => s.fmt(f),
            Ket::Effective(EffectiveKet::Phi1) => f.write_str("|phi1>"),
            Ket::Effective(EffectiveKet::Dark) => f.write_str("|Psi_d>"),
            Ket::Effective(EffectiveKet::Psi3) => f.write_str("|psi3>"),
        }
    }
}

/// The eight kets reachable from |g₀g₀,0⟩ under the coherent dynamics, in
/// the order φ₁ … φ₈.
pub const SUBSPACE_STATES: [BasisState; 8] = {
    use AtomLevelA as A;
    use AtomLevelB as B;
    [
        BasisState::of(A::G0, B::G0, 0, 0),
        BasisState::of(A::E0, B::G0, 0, 0),
        BasisState::of(A::GL, B::G0, 1, 0),
        BasisState::of(A::GR, B::G0, 0, 1),
        BasisState::of(A::GL, B::EL, 0, 0),
        BasisState::of(A::GR, B::ER, 0, 0),
        BasisState::of(A::GL, B::GL, 0, 0),
        BasisState::of(A::GR, B::GR, 0, 0),
    ]
};

#[derive(Debug, Clone)]
pub struct HilbertSpace {
    basis: Vec<Ket>,
    index: HashMap<Ket, usize>,
}

impl PartialEq for HilbertSpace {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
    }
}

impl HilbertSpace {
    pub fn from_kets(basis: Vec<Ket>) -> Result<Self> {
        let mut index = HashMap::with_capacity(basis.len());
        for (i, ket) in basis.iter().enumerate() {
            if index.insert(*ket, i).is_some() {
                return Err(Error::Structural(format!("duplicate basis ket {ket}")));
            }
        }
        Ok(Self { basis, index })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn kets(&self) -> &[Ket] {
        &self.basis
    }

    pub fn ket(&self, i: usize) -> Ket {
        self.basis[i]
    }

    pub fn index_of(&self, ket: &Ket) -> Option<usize> {
        self.index.get(ket).copied()
    }

    pub fn position(&self, state: &BasisState) -> Option<usize> {
        self.index_of(&Ket::Product(*state))
    }

    pub fn require(&self, ket: &Ket) -> Result<usize> {
        self.index_of(ket)
            .ok_or_else(|| Error::Structural(format!("{ket} is not in this space")))
    }
}

pub(crate) fn same_space(a: &Arc<HilbertSpace>, b: &Arc<HilbertSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn check_space(a: &Arc<HilbertSpace>, b: &Arc<HilbertSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::Structural(format!(
            "operands live in different spaces (dims {} and {})",
            a.dim(),
            b.dim()
        )))
    }
}

/// The 4·5·2·2 = 80 dimensional product space in lexicographic order.
pub fn build_full_space() -> Arc<HilbertSpace> {
    let mut basis = Vec::with_capacity(80);
    for a in AtomLevelA::ALL {
        for b in AtomLevelB::ALL {
            for n_l in 0..=1 {
                for n_r in 0..=1 {
                    basis.push(Ket::Product(BasisState::of(a, b, n_l, n_r)));
                }
            }
        }
    }
    Arc::new(HilbertSpace::from_kets(basis).expect("product basis is duplicate free"))
}

/// The eight-state invariant subspace ordered φ₁ … φ₈.
pub fn build_subspace() -> Arc<HilbertSpace> {
    let basis = SUBSPACE_STATES.iter().map(|s| Ket::Product(*s)).collect();
    Arc::new(HilbertSpace::from_kets(basis).expect("subspace kets are distinct"))
}

/// Three-state space (|φ₁⟩, |Ψ_d⟩, |ψ₃⟩) of the effective Λ models.
pub fn build_lambda_space() -> Arc<HilbertSpace> {
    use EffectiveKet::*;
    let basis = [Phi1, Dark, Psi3].map(Ket::Effective).to_vec();
    Arc::new(HilbertSpace::from_kets(basis).expect("distinct"))
}

/// Two-state space (|φ₁⟩, |ψ₃⟩) left after eliminating |Ψ_d⟩.
pub fn build_two_level_space() -> Arc<HilbertSpace> {
    use EffectiveKet::*;
    let basis = [Phi1, Psi3].map(Ket::Effective).to_vec();
    Arc::new(HilbertSpace::from_kets(basis).expect("distinct"))
}

/// Square complex matrix acting on a labeled space.
#[derive(Debug, Clone)]
pub struct Operator {
    matrix: CMatrix,
    space: Arc<HilbertSpace>,
}

impl Operator {
    pub fn zeros(space: &Arc<HilbertSpace>) -> Self {
        let n = space.dim();
        Self { matrix: CMatrix::zeros(n, n), space: space.clone() }
    }

    pub fn identity(space: &Arc<HilbertSpace>) -> Self {
        let n = space.dim();
        Self { matrix: CMatrix::identity(n, n), space: space.clone() }
    }

    pub fn from_matrix(space: &Arc<HilbertSpace>, matrix: CMatrix) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Structural(format!(
                "matrix is {}x{}, space has dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, space: space.clone() })
    }

    /// Builds Σ_s amp(s) |s'⟩⟨s| from a map on product kets. Images that fall
    /// outside the space are dropped, so on a subspace this is the projected
    /// operator.
    pub fn from_basis_map<F>(space: &Arc<HilbertSpace>, map: F) -> Self
    where
        F: Fn(&BasisState) -> Option<(C64, BasisState)>,
    {
        let mut op = Self::zeros(space);
        for (col, ket) in space.kets().iter().enumerate() {
            let Ket::Product(state) = ket else { continue };
            if let Some((amp, image)) = map(state) {
                if let Some(row) = space.position(&image) {
                    op.matrix[(row, col)] += amp;
                }
            }
        }
        op
    }

    /// |bra⟩⟨ket| with both given as vectors of this space.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Result<Self> {
        check_space(&ket.space, &bra.space)?;
        Ok(Self {
            matrix: &ket.amplitudes * bra.amplitudes.adjoint(),
            space: ket.space.clone(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// ⟨bra|O|ket⟩.
    pub fn element(&self, bra: &StateVector, ket: &StateVector) -> Result<C64> {
        check_space(&self.space, &bra.space)?;
        check_space(&self.space, &ket.space)?;
        Ok(bra.amplitudes.dotc(&(&self.matrix * &ket.amplitudes)))
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), space: self.space.clone() }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { matrix: &self.matrix * factor, space: self.space.clone() }
    }

    pub fn plus(&self, other: &Operator) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, space: self.space.clone() })
    }

    pub fn minus(&self, other: &Operator) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, space: self.space.clone() })
    }

    pub fn compose(&self, other: &Operator) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        Ok(Self { matrix: &self.matrix * &other.matrix, space: self.space.clone() })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_space(&self.space, &psi.space)?;
        Ok(StateVector {
            amplitudes: &self.matrix * &psi.amplitudes,
            space: self.space.clone(),
        })
    }

    /// max |(O − O†)_ij|
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn count_nonzero(&self, tol: f64) -> usize {
        self.matrix.iter().filter(|z| z.norm() > tol).count()
    }

    /// Eigenvalues in ascending order, assuming the operator is Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.matrix.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// |to⟩⟨from| on one atom, identity on everything else.
pub fn transition_operator(
    space: &Arc<HilbertSpace>,
    atom: Atom,
    from: Level,
    to: Level,
) -> Result<Operator> {
    match atom {
        Atom::A => {
            let (from, to) = (AtomLevelA::try_from(from)?, AtomLevelA::try_from(to)?);
            Ok(Operator::from_basis_map(space, |s| {
                (s.a == from).then_some((ONE, BasisState { a: to, ..*s }))
            }))
        }
        Atom::B => {
            let (from, to) = (AtomLevelB::try_from(from)?, AtomLevelB::try_from(to)?);
            Ok(Operator::from_basis_map(space, |s| {
                (s.b == from).then_some((ONE, BasisState { b: to, ..*s }))
            }))
        }
    }
}

/// Photon annihilation on the one-photon truncated mode.
pub fn annihilation_operator(space: &Arc<HilbertSpace>, mode: Mode) -> Operator {
    Operator::from_basis_map(space, |s| match mode {
        Mode::L if s.n_l == 1 => Some((ONE, BasisState { n_l: 0, ..*s })),
        Mode::R if s.n_r == 1 => Some((ONE, BasisState { n_r: 0, ..*s })),
        _ => None,
    })
}

/// Pure state on a labeled space.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: CVector,
    space: Arc<HilbertSpace>,
}

impl StateVector {
    pub fn from_amplitudes(space: &Arc<HilbertSpace>, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Structural(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { amplitudes, space: space.clone() })
    }

    pub fn zeros(space: &Arc<HilbertSpace>) -> Self {
        Self { amplitudes: CVector::zeros(space.dim()), space: space.clone() }
    }

    pub fn basis(space: &Arc<HilbertSpace>, ket: &Ket) -> Result<Self> {
        let i = space.require(ket)?;
        let mut psi = Self::zeros(space);
        psi.amplitudes[i] = ONE;
        Ok(psi)
    }

    pub fn product(space: &Arc<HilbertSpace>, state: &BasisState) -> Result<Self> {
        Self::basis(space, &Ket::Product(*state))
    }

    /// Σ c_k |ket_k⟩ from (ket, coefficient) pairs.
    pub fn superposition(space: &Arc<HilbertSpace>, terms: &[(Ket, C64)]) -> Result<Self> {
        let mut psi = Self::zeros(space);
        for (ket, c) in terms {
            psi.amplitudes[space.require(ket)?] += c;
        }
        Ok(psi)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, ket: &Ket) -> Result<C64> {
        Ok(self.amplitudes[self.space.require(ket)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Parameter("cannot normalize the zero vector".into()));
        }
        Ok(Self { amplitudes: &self.amplitudes / C64::from(n), space: self.space.clone() })
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_space(&self.space, &other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { amplitudes: &self.amplitudes * factor, space: self.space.clone() }
    }

    pub fn plus(&self, other: &StateVector) -> Result<Self> {
        check_space(&self.space, &other.space)?;
        Ok(Self { amplitudes: &self.amplitudes + &other.amplitudes, space: self.space.clone() })
    }

    /// Squared moduli of the amplitudes.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Copies amplitudes onto matching kets of `target`, zeros elsewhere.
    pub fn embed(&self, target: &Arc<HilbertSpace>) -> Result<Self> {
        let mut out = Self::zeros(target);
        for (ket, amp) in self.space.kets().iter().zip(self.amplitudes.iter()) {
            let j = target.index_of(ket).ok_or_else(|| {
                Error::Structural(format!("{ket} is missing from the target space"))
            })?;
            out.amplitudes[j] = *amp;
        }
        Ok(out)
    }

    /// Restriction onto `target`; components on kets outside it are discarded.
    pub fn project(&self, target: &Arc<HilbertSpace>) -> Self {
        let mut out = Self::zeros(target);
        for (ket, amp) in target.kets().iter().zip(out.amplitudes.iter_mut()) {
            if let Some(i) = self.space.index_of(ket) {
                *amp = self.amplitudes[i];
            }
        }
        out
    }
}

/// Free-function form of [`StateVector::embed`].
pub fn embed(sub_vector: &StateVector, full_space: &Arc<HilbertSpace>) -> Result<StateVector> {
    sub_vector.embed(full_space)
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    space: Arc<HilbertSpace>,
}

impl DensityMatrix {
    pub fn from_matrix(space: &Arc<HilbertSpace>, matrix: CMatrix) -> Result<Self> {
        let op = Operator::from_matrix(space, matrix)?;
        Ok(Self { matrix: op.matrix, space: op.space })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self {
            matrix: &psi.amplitudes * psi.amplitudes.adjoint(),
            space: psi.space.clone(),
        }
    }

    pub fn maximally_mixed(space: &Arc<HilbertSpace>) -> Self {
        let n = space.dim();
        Self {
            matrix: CMatrix::identity(n, n) / C64::from(n as f64),
            space: space.clone(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, i: usize) -> f64 {
        self.matrix[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.matrix)
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        check_space(&self.space, &psi.space)?;
        Ok(psi.amplitudes.dotc(&(&self.matrix * &psi.amplitudes)).re)
    }
}

pub(crate) fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::from(0.5);
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn phi(k: usize) -> BasisState {
        SUBSPACE_STATES[k - 1]
    }

    #[test]
    fn full_space_has_eighty_states_in_stable_order() {
        let a = build_full_space();
        let b = build_full_space();
        assert_eq!(a.dim(), 80);
        assert_eq!(a.kets(), b.kets());
        let g0g0 = BasisState::of(AtomLevelA::G0, AtomLevelB::G0, 0, 0);
        assert_eq!(a.position(&g0g0), b.position(&g0g0));
        // lexicographic: (gL, gL, 0, 0) first, (e0, eR, 1, 1) last
        assert_eq!(a.ket(0), Ket::Product(BasisState::of(AtomLevelA::GL, AtomLevelB::GL, 0, 0)));
        assert_eq!(a.ket(79), Ket::Product(BasisState::of(AtomLevelA::E0, AtomLevelB::ER, 1, 1)));
        let mut sorted = a.kets().to_vec();
        sorted.sort_by_key(|k| match k {
            Ket::Product(s) => *s,
            _ => unreachable!(),
        });
        assert_eq!(sorted, a.kets());
    }

    #[test]
    fn subspace_kets_each_appear_once_in_full_space() {
        let full = build_full_space();
        for s in SUBSPACE_STATES {
            let hits = full.kets().iter().filter(|k| **k == Ket::Product(s)).count();
            assert_eq!(hits, 1, "{s}");
        }
    }

    #[test]
    fn subspace_order_matches_phi_labels() {
        let sub = build_subspace();
        assert_eq!(sub.dim(), 8);
        assert_eq!(sub.ket(0), Ket::Product(BasisState::of(AtomLevelA::G0, AtomLevelB::G0, 0, 0)));
        assert_eq!(sub.ket(6), Ket::Product(BasisState::of(AtomLevelA::GL, AtomLevelB::GL, 0, 0)));
        assert!(SUBSPACE_STATES.iter().all(|s| s.excitations() <= 1));
    }

    #[test]
    fn embed_then_project_is_identity() {
        let sub = build_subspace();
        let full = build_full_space();
        for k in 0..8 {
            let v = StateVector::basis(&sub, &sub.ket(k)).unwrap();
            let e = v.embed(&full).unwrap();
            assert_eq!(e.dim(), 80);
            let back = e.project(&sub);
            assert_eq!(back.amplitudes(), v.amplitudes());
        }
        let e1 = StateVector::product(&sub, &phi(1)).unwrap().embed(&full).unwrap();
        let idx = full.position(&phi(1)).unwrap();
        assert_eq!(e1.amplitudes()[idx], ONE);
        assert_relative_eq!(e1.norm(), 1.0);
    }

    #[test]
    fn embed_rejects_missing_ket() {
        let lambda = build_lambda_space();
        let full = build_full_space();
        let v = StateVector::basis(&lambda, &Ket::Effective(EffectiveKet::Dark)).unwrap();
        assert!(matches!(v.embed(&full), Err(Error::Structural(_))));
    }

    #[test]
    fn embedded_target_has_three_equal_amplitudes() {
        let sub = build_subspace();
        let full = build_full_space();
        let c = C64::from(1.0 / 3f64.sqrt());
        let target = StateVector::superposition(
            &sub,
            &[(Ket::Product(phi(1)), c), (Ket::Product(phi(7)), c), (Ket::Product(phi(8)), c)],
        )
        .unwrap();
        let e = target.embed(&full).unwrap();
        let nz: Vec<_> = e.amplitudes().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 3);
        for z in nz {
            assert_relative_eq!(z.re, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn transition_moves_excited_a_to_ground() {
        let full = build_full_space();
        let sigma = transition_operator(&full, Atom::A, Level::E0, Level::G0).unwrap();
        let excited = StateVector::product(&full, &phi(2)).unwrap();
        let out = sigma.apply(&excited).unwrap();
        assert_eq!(out.amplitude(&Ket::Product(phi(1))).unwrap(), ONE);
        assert_relative_eq!(out.norm(), 1.0);

        let ground = StateVector::product(&full, &phi(1)).unwrap();
        assert_eq!(sigma.apply(&ground).unwrap().norm(), 0.0);

        let up = transition_operator(&full, Atom::A, Level::G0, Level::E0).unwrap();
        assert_eq!(sigma.dagger().matrix(), up.matrix());
    }

    #[test]
    fn transition_rejects_foreign_levels() {
        let full = build_full_space();
        assert!(transition_operator(&full, Atom::A, Level::EL, Level::G0).is_err());
        assert!(transition_operator(&full, Atom::B, Level::E0, Level::G0).is_err());
    }

    #[test]
    fn annihilation_on_truncated_mode() {
        let full = build_full_space();
        let a_l = annihilation_operator(&full, Mode::L);
        let one = StateVector::product(&full, &phi(3)).unwrap();
        let out = a_l.apply(&one).unwrap();
        let expected = BasisState::of(AtomLevelA::GL, AtomLevelB::G0, 0, 0);
        assert_eq!(out.amplitude(&Ket::Product(expected)).unwrap(), ONE);

        let vac = StateVector::product(&full, &phi(1)).unwrap();
        assert_eq!(a_l.apply(&vac).unwrap().norm(), 0.0);

        let number = a_l.dagger().compose(&a_l).unwrap();
        for (i, ket) in full.kets().iter().enumerate() {
            let Ket::Product(s) = ket else { unreachable!() };
            for j in 0..80 {
                let expected = if i == j && s.n_l == 1 { ONE } else { ZERO };
                assert_eq!(number.entry(i, j), expected);
            }
        }
    }

    #[test]
    fn lowering_operators_are_nilpotent() {
        let full = build_full_space();
        let mut ops = vec![
            annihilation_operator(&full, Mode::L),
            annihilation_operator(&full, Mode::R),
            transition_operator(&full, Atom::A, Level::E0, Level::GL).unwrap(),
        ];
        for e in [Level::EL, Level::ER] {
            for g in [Level::GL, Level::G0, Level::GR] {
                ops.push(transition_operator(&full, Atom::B, e, g).unwrap());
            }
        }
        for op in ops {
            assert_eq!(op.compose(&op).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn photon_number_is_truncated() {
        assert!(BasisState::new(AtomLevelA::G0, AtomLevelB::G0, 2, 0).is_err());
    }

    #[test]
    fn maximally_mixed_has_unit_trace() {
        let full = build_full_space();
        let rho = DensityMatrix::maximally_mixed(&full);
        assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(rho.min_eigenvalue(), 1.0 / 80.0, epsilon = 1e-12);
    }
}
