//! Multimode bosonic creation-operator algebra and the sparse Fock states it
//! generates from the vacuum.
//!
//! Every operator is a polynomial in commuting creation operators
//! `a†(port, pol, bin)`. Diagonal and anti-diagonal polarisations are not
//! labels of their own; [`OperatorPoly::diagonal`] and
//! [`OperatorPoly::anti_diagonal`] expand them in the H/V basis so that
//! interference between the two descriptions happens automatically.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::optics::ModeMap;

/// Coefficients with smaller magnitude are dropped from every canonical form.
pub const PRUNE_TOL: f64 = 1e-14;

/// Maximum number of photons a single state may carry.
pub const MAX_PHOTONS: u32 = 8;

/// Tolerance on `| ‖ψ‖ − 1 |` before a state counts as not normalised.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("mode {0} is outside the domain of the mode map")]
    UnmappedMode(ModeLabel),
    #[error("operator polynomial is zero")]
    ZeroOperator,
    #[error("state has zero norm")]
    ZeroState,
    #[error("state is not normalised (norm = {norm})")]
    NotNormalized { norm: f64 },
    #[error("{photons} photons exceed the cap of {MAX_PHOTONS}")]
    PhotonCapExceeded { photons: u32 },
}

/// Spatial port identifier. Ids at or above 100 are primed output ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Port(pub u16);

impl Port {
    pub const IN1: Port = Port(1);
    pub const IN2: Port = Port(2);
    pub const OUT1: Port = Port(101);
    pub const OUT2: Port = Port(102);
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 >= 100 {
            write!(f, "{}'", self.0 - 100)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];
}

/// A (port, polarisation) pair; optics act on these and leave bins alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortMode {
    pub port: Port,
    pub pol: Pol,
}

impl PortMode {
    pub const fn new(port: Port, pol: Pol) -> Self {
        PortMode { port, pol }
    }

    pub const fn at_bin(self, bin: u32) -> ModeLabel {
        ModeLabel { port: self.port, pol: self.pol, bin }
    }
}

/// One bosonic mode. The derived ordering is (port, pol, bin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub port: Port,
    pub pol: Pol,
    pub bin: u32,
}

impl ModeLabel {
    pub const fn new(port: Port, pol: Pol, bin: u32) -> Self {
        ModeLabel { port, pol, bin }
    }

    pub const fn port_mode(&self) -> PortMode {
        PortMode { port: self.port, pol: self.pol }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}[{}]", self.pol, self.port, self.bin)
    }
}

/// Sorted product of creation operators; exponents are always positive.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CreationMonomial(BTreeMap<ModeLabel, u32>);

impl CreationMonomial {
    /// The empty product (identity operator).
    pub fn one() -> Self {
        CreationMonomial(BTreeMap::new())
    }

    pub fn single(mode: ModeLabel) -> Self {
        Self::from_powers([(mode, 1)])
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (ModeLabel, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (mode, n) in powers {
            if n > 0 {
                *map.entry(mode).or_insert(0) += n;
            }
        }
        CreationMonomial(map)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn powers(&self) -> impl Iterator<Item = (&ModeLabel, &u32)> {
        self.0.iter()
    }

    pub fn power(&self, mode: &ModeLabel) -> u32 {
        self.0.get(mode).copied().unwrap_or(0)
    }

    pub fn times(&self, other: &CreationMonomial) -> CreationMonomial {
        let mut map = self.0.clone();
        for (mode, n) in &other.0 {
            *map.entry(*mode).or_insert(0) += n;
        }
        CreationMonomial(map)
    }
}

/// Complex-weighted polynomial in creation operators, kept in canonical
/// sparse form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperatorPoly {
    terms: BTreeMap<CreationMonomial, Complex64>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_terms([(CreationMonomial::one(), c)])
    }

    /// `a†(mode)`.
    pub fn creation(mode: ModeLabel) -> Self {
        Self::from_terms([(CreationMonomial::single(mode), Complex64::new(1.0, 0.0))])
    }

    /// Linear combination `Σ c·a†(mode)`.
    pub fn linear(terms: impl IntoIterator<Item = (ModeLabel, Complex64)>) -> Self {
        Self::from_terms(terms.into_iter().map(|(m, c)| (CreationMonomial::single(m), c)))
    }

    /// `a†_D = (a†_H + a†_V)/√2`.
    pub fn diagonal(port: Port, bin: u32) -> Self {
        Self::polarized(port, bin, std::f64::consts::FRAC_PI_4)
    }

    /// `a†_A = (a†_H − a†_V)/√2`.
    pub fn anti_diagonal(port: Port, bin: u32) -> Self {
        Self::polarized(port, bin, -std::f64::consts::FRAC_PI_4)
    }

    /// Linear polarisation at angle `theta` from H: `cos θ a†_H + sin θ a†_V`.
    pub fn polarized(port: Port, bin: u32, theta: f64) -> Self {
        Self::linear([
            (ModeLabel::new(port, Pol::H, bin), Complex64::new(theta.cos(), 0.0)),
            (ModeLabel::new(port, Pol::V, bin), Complex64::new(theta.sin(), 0.0)),
        ])
    }

    /// Builds a polynomial, merging repeated monomials and pruning dust.
    pub fn from_terms(terms: impl IntoIterator<Item = (CreationMonomial, Complex64)>) -> Self {
        let mut map: BTreeMap<CreationMonomial, Complex64> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_default() += c;
        }
        map.retain(|_, c| c.norm() >= PRUNE_TOL);
        OperatorPoly { terms: map }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CreationMonomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &CreationMonomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    /// Largest monomial degree, 0 for the zero polynomial.
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(CreationMonomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, v)| (m.clone(), v * c)))
    }

    pub fn add(&self, other: &OperatorPoly) -> Self {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).map(|(m, c)| (m.clone(), *c)))
    }

    /// Distributive product. Operands are visited in a canonical order so
    /// that `a·b` and `b·a` are bit-for-bit identical.
    pub fn multiply(&self, other: &OperatorPoly) -> Self {
        let (first, second) = if canonical_cmp(self, other) == Ordering::Greater {
            (other, self)
        } else {
            (self, other)
        };
        let mut map: BTreeMap<CreationMonomial, Complex64> = BTreeMap::new();
        for (ma, ca) in &first.terms {
            for (mb, cb) in &second.terms {
                *map.entry(ma.times(mb)).or_default() += ca * cb;
            }
        }
        map.retain(|_, c| c.norm() >= PRUNE_TOL);
        OperatorPoly { terms: map }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc.multiply(self))
    }

    /// Heisenberg-picture substitution: every `a†(p, pol, bin)` is replaced by
    /// its image under `map`, acting on the same bin.
    pub fn substitute(&self, map: &ModeMap) -> Result<Self, AlgebraError> {
        let mut out: BTreeMap<CreationMonomial, Complex64> = BTreeMap::new();
        let mut images: BTreeMap<ModeLabel, OperatorPoly> = BTreeMap::new();
        for (mono, c) in &self.terms {
            let mut product = OperatorPoly::constant(*c);
            for (mode, n) in mono.powers() {
                if !images.contains_key(mode) {
                    let image = map
                        .image(mode.port_mode())
                        .ok_or(AlgebraError::UnmappedMode(*mode))?;
                    let poly = OperatorPoly::linear(
                        image.iter().map(|(pm, u)| (pm.at_bin(mode.bin), *u)),
                    );
                    images.insert(*mode, poly);
                }
                for _ in 0..*n {
                    product = product.multiply(&images[mode]);
                }
            }
            for (m, v) in product.terms {
                *out.entry(m).or_default() += v;
            }
        }
        out.retain(|_, c| c.norm() >= PRUNE_TOL);
        Ok(OperatorPoly { terms: out })
    }

    /// Applies the operator to the vacuum. `(a†)^n |vac⟩ = √(n!) |n⟩`.
    pub fn apply_to_vacuum(&self) -> Result<StateVector, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::ZeroOperator);
        }
        let photons = self.max_degree();
        if photons > MAX_PHOTONS {
            return Err(AlgebraError::PhotonCapExceeded { photons });
        }
        let amps = self.terms.iter().map(|(mono, c)| {
            let factor: f64 = mono.powers().map(|(_, n)| sqrt_factorial(*n)).product();
            (FockKet::from_counts(mono.powers().map(|(m, n)| (*m, *n))), c * factor)
        });
        Ok(StateVector::from_amplitudes(amps))
    }
}

fn canonical_cmp(a: &OperatorPoly, b: &OperatorPoly) -> Ordering {
    a.terms.len().cmp(&b.terms.len()).then_with(|| {
        for ((ma, ca), (mb, cb)) in a.terms.iter().zip(b.terms.iter()) {
            let ord = ma
                .cmp(mb)
                .then(ca.re.to_bits().cmp(&cb.re.to_bits()))
                .then(ca.im.to_bits().cmp(&cb.im.to_bits()));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    })
}

fn sqrt_factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product::<f64>().sqrt()
}

impl Add for &OperatorPoly {
    type Output = OperatorPoly;
    fn add(self, rhs: &OperatorPoly) -> OperatorPoly {
        OperatorPoly::add(self, rhs)
    }
}

impl Sub for &OperatorPoly {
    type Output = OperatorPoly;
    fn sub(self, rhs: &OperatorPoly) -> OperatorPoly {
        OperatorPoly::add(self, &-rhs)
    }
}

impl Neg for &OperatorPoly {
    type Output = OperatorPoly;
    fn neg(self) -> OperatorPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: &OperatorPoly) -> OperatorPoly {
        self.multiply(rhs)
    }
}

impl Mul<Complex64> for &OperatorPoly {
    type Output = OperatorPoly;
    fn mul(self, rhs: Complex64) -> OperatorPoly {
        self.scale(rhs)
    }
}

/// Occupation-number basis ket; zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockKet(BTreeMap<ModeLabel, u32>);

impl FockKet {
    pub fn vacuum() -> Self {
        FockKet(BTreeMap::new())
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (ModeLabel, u32)>) -> Self {
        let mut map = BTreeMap::new();
        for (mode, n) in counts {
            if n > 0 {
                *map.entry(mode).or_insert(0) += n;
            }
        }
        FockKet(map)
    }

    /// One photon in each listed mode (modes may repeat).
    pub fn photons(modes: impl IntoIterator<Item = ModeLabel>) -> Self {
        Self::from_counts(modes.into_iter().map(|m| (m, 1)))
    }

    pub fn count(&self, mode: &ModeLabel) -> u32 {
        self.0.get(mode).copied().unwrap_or(0)
    }

    pub fn occupations(&self) -> impl Iterator<Item = (&ModeLabel, &u32)> {
        self.0.iter()
    }

    pub fn photon_number(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn photons_in_port(&self, port: Port) -> u32 {
        self.0.iter().filter(|(m, _)| m.port == port).map(|(_, n)| n).sum()
    }

    pub fn photons_in(&self, pm: PortMode) -> u32 {
        self.0.iter().filter(|(m, _)| m.port_mode() == pm).map(|(_, n)| n).sum()
    }
}

/// Sparse pure state `Σ ψ(n) |n⟩`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateVector {
    amps: BTreeMap<FockKet, Complex64>,
}

impl StateVector {
    pub fn vacuum() -> Self {
        Self::from_amplitudes([(FockKet::vacuum(), Complex64::new(1.0, 0.0))])
    }

    pub fn from_amplitudes(amps: impl IntoIterator<Item = (FockKet, Complex64)>) -> Self {
        let mut map: BTreeMap<FockKet, Complex64> = BTreeMap::new();
        for (k, a) in amps {
            *map.entry(k).or_default() += a;
        }
        map.retain(|_, a| a.norm() >= PRUNE_TOL);
        StateVector { amps: map }
    }

    pub fn amplitude(&self, ket: &FockKet) -> Complex64 {
        self.amps.get(ket).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockKet, &Complex64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .filter_map(|(k, a)| other.amps.get(k).map(|b| a.conj() * b))
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_amplitudes(self.amps.iter().map(|(k, a)| (k.clone(), a * c)))
    }

    pub fn add(&self, other: &StateVector) -> Self {
        Self::from_amplitudes(self.amps.iter().chain(other.amps.iter()).map(|(k, a)| (k.clone(), *a)))
    }

    /// Rescales to unit norm; the global phase is untouched.
    pub fn normalize(&self) -> Result<Self, AlgebraError> {
        let n = self.norm();
        if n <= PRUNE_TOL {
            return Err(AlgebraError::ZeroState);
        }
        Ok(StateVector {
            amps: self.amps.iter().map(|(k, a)| (k.clone(), a / n)).collect(),
        })
    }

    /// Keeps only the kets accepted by `keep` (unnormalised projection).
    pub fn project(&self, mut keep: impl FnMut(&FockKet) -> bool) -> Self {
        StateVector {
            amps: self.amps.iter().filter(|(k, _)| keep(k)).map(|(k, a)| (k.clone(), *a)).collect(),
        }
    }

    pub fn ensure_normalized(&self) -> Result<(), AlgebraError> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(AlgebraError::NotNormalized { norm });
        }
        Ok(())
    }

    /// Probability of observing `pattern`, with unresolved degrees of
    /// freedom traced out.
    pub fn occupation_probability(&self, pattern: &KetPattern) -> Result<f64, AlgebraError> {
        self.ensure_normalized()?;
        let p: f64 = self
            .amps
            .iter()
            .filter(|(k, _)| pattern.matches(k))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Measurement pattern for [`StateVector::occupation_probability`].
#[derive(Debug, Clone, PartialEq)]
pub enum KetPattern {
    /// Exact occupation of every mode.
    Exact(FockKet),
    /// Photon counts per (port, pol), summed over bins. Unlisted
    /// (port, pol) pairs must be empty.
    Modes(BTreeMap<PortMode, u32>),
    /// Photon counts per port, summed over polarisation and bins. Unlisted
    /// ports must be empty.
    Ports(BTreeMap<Port, u32>),
}

impl KetPattern {
    pub fn modes(counts: impl IntoIterator<Item = (PortMode, u32)>) -> Self {
        KetPattern::Modes(counts.into_iter().filter(|(_, n)| *n > 0).collect())
    }

    pub fn ports(counts: impl IntoIterator<Item = (Port, u32)>) -> Self {
        KetPattern::Ports(counts.into_iter().filter(|(_, n)| *n > 0).collect())
    }

    /// One photon in each of the two output ports.
    pub fn split_outputs() -> Self {
        Self::ports([(Port::OUT1, 1), (Port::OUT2, 1)])
    }

    pub fn matches(&self, ket: &FockKet) -> bool {
        match self {
            KetPattern::Exact(k) => k == ket,
            KetPattern::Modes(want) => {
                let mut have: BTreeMap<PortMode, u32> = BTreeMap::new();
                for (m, n) in ket.occupations() {
                    *have.entry(m.port_mode()).or_insert(0) += n;
                }
                &have == want
            }
            KetPattern::Ports(want) => {
                let mut have: BTreeMap<Port, u32> = BTreeMap::new();
                for (m, n) in ket.occupations() {
                    *have.entry(m.port).or_insert(0) += n;
                }
                &have == want
            }
        }
    }
}
