//! Passive linear optics as unitary substitutions on creation operators.
//!
//! A [`ModeMap`] acts on (port, polarisation) pairs and is applied
//! identically to every spectral/temporal bin. Column `j` of its matrix is
//! the image of the `j`-th domain mode: `a†_in → Σ_out U[out, in] a†_out`.
//! Reflections carry a factor `i`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{Pol, Port, PortMode};

pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("port {0} is not part of the universe")]
    UnknownPort(Port),
    #[error("ports must be pairwise distinct")]
    DuplicatePorts,
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("non-finite optical parameter {0}")]
    NonFinite(&'static str),
    #[error("codomain of map {index} does not match the domain of the next map")]
    UniverseMismatch { index: usize },
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("mode universes overlap")]
    OverlappingUniverse,
    #[error("nothing to compose")]
    Empty,
}

type Image = Vec<(PortMode, Complex64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMap {
    domain: Vec<PortMode>,
    codomain: Vec<PortMode>,
    images: BTreeMap<PortMode, Image>,
}

fn modes_of(ports: &[Port]) -> Vec<PortMode> {
    let set: BTreeSet<PortMode> = ports
        .iter()
        .flat_map(|p| Pol::BOTH.map(|pol| PortMode::new(*p, pol)))
        .collect();
    set.into_iter().collect()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl ModeMap {
    pub fn identity(modes: impl IntoIterator<Item = PortMode>) -> Self {
        let domain: Vec<PortMode> = modes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let images = domain.iter().map(|m| (*m, vec![(*m, c(1.0))])).collect();
        ModeMap { codomain: domain.clone(), domain, images }
    }

    pub fn identity_on_ports(ports: &[Port]) -> Self {
        Self::identity(modes_of(ports))
    }

    /// Builds a map from its matrix; rows follow `codomain`, columns follow
    /// `domain`. Both lists are put in canonical order.
    pub fn from_matrix(
        domain: &[PortMode],
        codomain: &[PortMode],
        matrix: &DMatrix<Complex64>,
    ) -> Result<Self, OpticsError> {
        let dom: BTreeSet<PortMode> = domain.iter().copied().collect();
        let cod: BTreeSet<PortMode> = codomain.iter().copied().collect();
        if dom.len() != domain.len() || cod.len() != codomain.len() {
            return Err(OpticsError::DuplicatePorts);
        }
        if matrix.nrows() != codomain.len() || matrix.ncols() != domain.len() {
            return Err(OpticsError::UniverseMismatch { index: 0 });
        }
        let mut images = BTreeMap::new();
        for (j, m_in) in domain.iter().enumerate() {
            let image: Image = codomain
                .iter()
                .enumerate()
                .map(|(i, m_out)| (*m_out, matrix[(i, j)]))
                .filter(|(_, u)| u.norm() > 0.0)
                .collect();
            images.insert(*m_in, image);
        }
        let map = ModeMap {
            domain: dom.into_iter().collect(),
            codomain: cod.into_iter().collect(),
            images,
        };
        let deviation = map.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(OpticsError::NotUnitary { deviation });
        }
        Ok(map)
    }

    pub fn domain(&self) -> &[PortMode] {
        &self.domain
    }

    pub fn codomain(&self) -> &[PortMode] {
        &self.codomain
    }

    pub fn image(&self, mode: PortMode) -> Option<&[(PortMode, Complex64)]> {
        self.images.get(&mode).map(Vec::as_slice)
    }

    /// Dense matrix, rows in codomain order and columns in domain order.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let row: BTreeMap<PortMode, usize> =
            self.codomain.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mut u = DMatrix::zeros(self.codomain.len(), self.domain.len());
        for (j, m_in) in self.domain.iter().enumerate() {
            for (m_out, amp) in &self.images[m_in] {
                u[(row[m_out], j)] += amp;
            }
        }
        u
    }

    /// `max |U†U − I|` over all entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let u = self.matrix();
        if u.nrows() != u.ncols() {
            return f64::INFINITY;
        }
        let gram = u.adjoint() * &u;
        let id = DMatrix::<Complex64>::identity(u.ncols(), u.ncols());
        (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= UNITARY_TOL
    }

    /// Conjugate transpose, mapping the codomain back onto the domain.
    pub fn inverse(&self) -> Self {
        let mut images: BTreeMap<PortMode, Image> =
            self.codomain.iter().map(|m| (*m, Vec::new())).collect();
        for (m_in, image) in &self.images {
            for (m_out, u) in image {
                images.get_mut(m_out).expect("codomain is complete").push((*m_in, u.conj()));
            }
        }
        ModeMap {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            images,
        }
    }

    /// Extends the map with the identity on `modes`, which must be disjoint
    /// from both its domain and codomain.
    pub fn with_identity_on(&self, modes: impl IntoIterator<Item = PortMode>) -> Result<Self, OpticsError> {
        let mut out = self.clone();
        for m in modes {
            if out.domain.contains(&m) || out.codomain.contains(&m) {
                return Err(OpticsError::OverlappingUniverse);
            }
            out.images.insert(m, vec![(m, c(1.0))]);
            out.domain.push(m);
            out.codomain.push(m);
        }
        out.domain.sort();
        out.codomain.sort();
        Ok(out)
    }

    /// Applies `self` first, then `next`.
    pub fn then(&self, next: &ModeMap) -> Result<Self, OpticsError> {
        compose(&[self.clone(), next.clone()])
    }
}

/// Composes maps in application order (first element acts first).
pub fn compose(maps: &[ModeMap]) -> Result<ModeMap, OpticsError> {
    let (first, rest) = maps.split_first().ok_or(OpticsError::Empty)?;
    let mut acc = first.clone();
    for (k, next) in rest.iter().enumerate() {
        if acc.codomain != next.domain {
            return Err(OpticsError::UniverseMismatch { index: k });
        }
        let mut images = BTreeMap::new();
        for (m_in, image) in &acc.images {
            let mut merged: BTreeMap<PortMode, Complex64> = BTreeMap::new();
            for (mid, u) in image {
                for (m_out, w) in &next.images[mid] {
                    *merged.entry(*m_out).or_default() += w * u;
                }
            }
            images.insert(*m_in, merged.into_iter().filter(|(_, z)| z.norm() > 0.0).collect());
        }
        acc = ModeMap { domain: acc.domain, codomain: next.codomain.clone(), images };
    }
    Ok(acc)
}

fn check_finite(name: &'static str, x: f64) -> Result<(), OpticsError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(OpticsError::NonFinite(name))
    }
}

fn distinct(ports: &[Port]) -> Result<(), OpticsError> {
    let set: BTreeSet<_> = ports.iter().collect();
    if set.len() == ports.len() {
        Ok(())
    } else {
        Err(OpticsError::DuplicatePorts)
    }
}

/// Waveplate with the given retardance and fast-axis angle (from H) on
/// `port`, identity on the other ports of `universe`.
///
/// Jones matrix `R(θ)·diag(1, e^{iδ})·R(−θ)`: a half-wave plate is `δ = π`,
/// a quarter-wave plate `δ = π/2`.
pub fn waveplate_map(
    retardance: f64,
    axis_angle: f64,
    port: Port,
    universe: &[Port],
) -> Result<ModeMap, OpticsError> {
    check_finite("retardance", retardance)?;
    check_finite("axis_angle", axis_angle)?;
    if !universe.contains(&port) {
        return Err(OpticsError::UnknownPort(port));
    }
    let (s, co) = axis_angle.sin_cos();
    let e = Complex64::from_polar(1.0, retardance);
    let hh = c(co * co) + e * (s * s);
    let vv = c(s * s) + e * (co * co);
    let hv = (c(1.0) - e) * (co * s);
    let h = PortMode::new(port, Pol::H);
    let v = PortMode::new(port, Pol::V);
    let others: Vec<Port> = universe.iter().copied().filter(|p| *p != port).collect();
    let local = ModeMap {
        domain: vec![h, v],
        codomain: vec![h, v],
        images: BTreeMap::from([(h, vec![(h, hh), (v, hv)]), (v, vec![(h, hv), (v, vv)])]),
    };
    local.with_identity_on(modes_of(&others))
}

/// Half-wave plate at `axis_angle`.
pub fn hwp(axis_angle: f64, port: Port, universe: &[Port]) -> Result<ModeMap, OpticsError> {
    waveplate_map(std::f64::consts::PI, axis_angle, port, universe)
}

/// Polarising beam splitter: H is transmitted (`in₁→out₁`, `in₂→out₂`),
/// V is reflected with phase `i` (`in₁→out₂`, `in₂→out₁`).
pub fn pbs_map(in_ports: (Port, Port), out_ports: (Port, Port)) -> Result<ModeMap, OpticsError> {
    distinct(&[in_ports.0, in_ports.1, out_ports.0, out_ports.1])?;
    let i = Complex64::new(0.0, 1.0);
    let pm = PortMode::new;
    let images = BTreeMap::from([
        (pm(in_ports.0, Pol::H), vec![(pm(out_ports.0, Pol::H), c(1.0))]),
        (pm(in_ports.1, Pol::H), vec![(pm(out_ports.1, Pol::H), c(1.0))]),
        (pm(in_ports.0, Pol::V), vec![(pm(out_ports.1, Pol::V), i)]),
        (pm(in_ports.1, Pol::V), vec![(pm(out_ports.0, Pol::V), i)]),
    ]);
    Ok(ModeMap {
        domain: modes_of(&[in_ports.0, in_ports.1]),
        codomain: modes_of(&[out_ports.0, out_ports.1]),
        images,
    })
}

/// Polarisation-independent beam splitter with power reflectivity
/// `reflectivity`; `r = i√R`, `t = √(1−R)`.
pub fn bs_map(
    reflectivity: f64,
    in_ports: (Port, Port),
    out_ports: (Port, Port),
) -> Result<ModeMap, OpticsError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(OpticsError::OutOfRange { name: "reflectivity", value: reflectivity });
    }
    distinct(&[in_ports.0, in_ports.1, out_ports.0, out_ports.1])?;
    let t = c((1.0 - reflectivity).sqrt());
    let r = Complex64::new(0.0, reflectivity.sqrt());
    let mut images = BTreeMap::new();
    for pol in Pol::BOTH {
        let pm = |p| PortMode::new(p, pol);
        images.insert(pm(in_ports.0), vec![(pm(out_ports.0), t), (pm(out_ports.1), r)]);
        images.insert(pm(in_ports.1), vec![(pm(out_ports.0), r), (pm(out_ports.1), t)]);
    }
    for image in images.values_mut() {
        image.retain(|(_, z)| z.norm() > 0.0);
    }
    Ok(ModeMap {
        domain: modes_of(&[in_ports.0, in_ports.1]),
        codomain: modes_of(&[out_ports.0, out_ports.1]),
        images,
    })
}

/// Polarisation-independent phase `e^{iφ}` on `port`, identity elsewhere.
pub fn phase_shifter(phase: f64, port: Port, universe: &[Port]) -> Result<ModeMap, OpticsError> {
    check_finite("phase", phase)?;
    if !universe.contains(&port) {
        return Err(OpticsError::UnknownPort(port));
    }
    let e = Complex64::from_polar(1.0, phase);
    let mut map = ModeMap::identity_on_ports(universe);
    for pol in Pol::BOTH {
        let m = PortMode::new(port, pol);
        map.images.insert(m, vec![(m, e)]);
    }
    Ok(map)
}
