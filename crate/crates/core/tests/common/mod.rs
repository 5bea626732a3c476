//! Independent brute-force references shared by the integration tests.
//! Nothing here calls the algorithms under test.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sagnac_core::detection::{Channel, Tag};
use sagnac_core::fock::{CreationMonomial, OperatorPoly, Pol, Port, PortMode, StateVector};

pub type C = Complex64;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Dense truncated Fock space

/// `m` modes, each truncated at `cutoff` photons, flattened in mixed radix
/// `(cutoff + 1)` with mode 0 as the most significant digit.
pub struct DenseFock {
    pub modes: usize,
    pub cutoff: usize,
    creators: Vec<DMatrix<C>>,
}

impl DenseFock {
    pub fn new(modes: usize, cutoff: usize) -> Self {
        let mut s = DenseFock { modes, cutoff, creators: Vec::new() };
        s.creators = (0..modes).map(|k| s.build_creator(k)).collect();
        s
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.modes as u32)
    }

    pub fn index(&self, occ: &[usize]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * (self.cutoff + 1) + n)
    }

    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut d = vec![0; self.modes];
        for k in (0..self.modes).rev() {
            d[k] = idx % (self.cutoff + 1);
            idx /= self.cutoff + 1;
        }
        d
    }

    fn build_creator(&self, k: usize) -> DMatrix<C> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for col in 0..n {
            let mut occ = self.digits(col);
            if occ[k] < self.cutoff {
                let amp = ((occ[k] + 1) as f64).sqrt();
                occ[k] += 1;
                m[(self.index(&occ), col)] = c(amp);
            }
        }
        m
    }

    pub fn vacuum(&self) -> DVector<C> {
        let mut v = DVector::zeros(self.dim());
        v[0] = c(1.0);
        v
    }

    /// `Σ coeff · Π (a†_k)^{n_k} |vac⟩` by repeated dense matrix products.
    pub fn apply(&self, poly: &[(Vec<usize>, C)]) -> DVector<C> {
        let mut out = DVector::zeros(self.dim());
        for (powers, coeff) in poly {
            let mut v = self.vacuum();
            for (k, &n) in powers.iter().enumerate() {
                for _ in 0..n {
                    v = &self.creators[k] * v;
                }
            }
            out += v * *coeff;
        }
        out
    }

    pub fn inner(a: &DVector<C>, b: &DVector<C>) -> C {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    }
}

/// Expands `Π_f (Σ_o U[o, m_f] a†_o)` for every monomial by enumerating all
/// assignments of factors to output modes.
pub fn substitute_brute(poly: &[(Vec<usize>, C)], u: &DMatrix<C>) -> BTreeMap<Vec<usize>, C> {
    let outs = u.nrows();
    let mut result: BTreeMap<Vec<usize>, C> = BTreeMap::new();
    for (powers, coeff) in poly {
        let factors: Vec<usize> = powers.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
        let combos = outs.pow(factors.len() as u32);
        for mut code in 0..combos {
            let mut occ = vec![0; outs];
            let mut w = *coeff;
            for &f in &factors {
                let o = code % outs;
                code /= outs;
                occ[o] += 1;
                w *= u[(o, f)];
            }
            *result.entry(occ).or_default() += w;
        }
    }
    result.retain(|_, v| v.norm() > 1e-14);
    result
}

/// Haar-ish random unitary from the QR decomposition of a complex Gaussian
/// matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<C> {
    let g = DMatrix::from_fn(n, n, |_, _| C::new(gauss(rng), gauss(rng)));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phases = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
        let d = r[(i, i)];
        if d.norm() > 0.0 { d / d.norm() } else { c(1.0) }
    }));
    q * phases
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ---------------------------------------------------------------------------
// Random polynomials on four modes

pub const UNIVERSE: [PortMode; 4] = [
    PortMode::new(Port::IN1, Pol::H),
    PortMode::new(Port::IN1, Pol::V),
    PortMode::new(Port::IN2, Pol::H),
    PortMode::new(Port::IN2, Pol::V),
];

/// Up to five terms of degree 1 to `max_photons` over `modes` modes.
pub fn random_poly(rng: &mut impl Rng, modes: usize, max_photons: usize) -> Vec<(Vec<usize>, C)> {
    let terms = rng.random_range(1..=5);
    (0..terms)
        .map(|_| {
            let degree = rng.random_range(1..=max_photons);
            let mut powers = vec![0; modes];
            for _ in 0..degree {
                powers[rng.random_range(0..modes)] += 1;
            }
            (powers, C::new(gauss(rng), gauss(rng)))
        })
        .collect()
}

pub fn to_crate(poly: &[(Vec<usize>, C)], modes: &[PortMode]) -> OperatorPoly {
    OperatorPoly::from_terms(poly.iter().map(|(p, c)| {
        (CreationMonomial::from_powers(p.iter().enumerate().map(|(k, &n)| (modes[k].at_bin(0), n as u32))), *c)
    }))
}

/// Dense vector of a crate state whose kets all live on `modes`, bin 0.
pub fn dense_of(state: &StateVector, modes: &[PortMode], fock: &DenseFock) -> DVector<C> {
    let mut v = DVector::zeros(fock.dim());
    for (ket, a) in state.iter() {
        let occ: Vec<usize> = modes.iter().map(|m| ket.count(&m.at_bin(0)) as usize).collect();
        assert_eq!(occ.iter().sum::<usize>() as u32, ket.photon_number(), "ket outside universe");
        v[fock.index(&occ)] += a;
    }
    v
}

// ---------------------------------------------------------------------------
// First-quantised two-photon references

/// Normalised symmetric two-photon wavefunction on `d`-dimensional
/// single-photon space, stored as a `d × d` amplitude matrix.
pub fn symmetrise(psi: &DMatrix<C>) -> DMatrix<C> {
    let s = (psi + psi.transpose()) * c(0.5);
    let n = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    s / c(n)
}

pub fn outer(a: &DVector<C>, b: &DVector<C>) -> DMatrix<C> {
    a * b.transpose()
}

/// Anti-bunching probability behind a PBS for photons emitted into one
/// input port in `(|D,t₀⟩|D,t₀⟩ + e^{iφ}|A,t⟩|A,t⟩)`, where
/// `|t⟩ = γ|t₀⟩ + √(1−γ²)|t₁⟩` is the per-photon temporal mode of the second
/// crystal. Single-photon basis: `(pol, time)` with index `2·pol + time`,
/// pol 0 = H (transmitted), 1 = V (reflected).
pub fn pbs_split_probability(gamma: f64, phi: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d = DVector::from_vec(vec![c(s), c(s)]);
    let a = DVector::from_vec(vec![c(s), c(-s)]);
    let t0 = DVector::from_vec(vec![c(1.0), c(0.0)]);
    let t = DVector::from_vec(vec![c(gamma), c((1.0 - gamma * gamma).max(0.0).sqrt())]);
    let kron = |p: &DVector<C>, q: &DVector<C>| DVector::from_fn(4, |i, _| p[i / 2] * q[i % 2]);
    let dd = kron(&d, &t0);
    let aa = kron(&a, &t);
    let psi = outer(&dd, &dd) + outer(&aa, &aa) * C::from_polar(1.0, phi);
    let psi = symmetrise(&psi);
    let mut p = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i / 2 != j / 2 {
                p += psi[(i, j)].norm_sqr();
            }
        }
    }
    p
}

/// Coincidence probability across the outputs of a beam splitter with
/// power reflectivity `r` for one photon in each input; the second photon's
/// temporal mode overlaps the first by `gamma`. Single-photon basis
/// `(port, time)`, index `2·port + time`.
pub fn hom_coincidence(r: f64, gamma: f64) -> f64 {
    let t = (1.0 - r).sqrt();
    let rr = C::new(0.0, r.sqrt());
    // Port transfer matrix; columns are inputs.
    let bs = DMatrix::from_row_slice(2, 2, &[c(t), rr, rr, c(t)]);
    let u = DMatrix::from_fn(4, 4, |i, j| if i % 2 == j % 2 { bs[(i / 2, j / 2)] } else { c(0.0) });
    let a = DVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(0.0)]);
    let b = DVector::from_vec(vec![c(0.0), c(0.0), c(gamma), c((1.0 - gamma * gamma).max(0.0).sqrt())]);
    let psi = symmetrise(&outer(&a, &b));
    let out = &u * psi * u.transpose();
    let mut p = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i / 2 != j / 2 {
                p += out[(i, j)].norm_sqr();
            }
        }
    }
    p
}

// ---------------------------------------------------------------------------
// Correlator reference

/// Matches tags in stream order: each tag pairs with the latest earlier,
/// still unmatched tag of the other channel within half the window.
/// Quadratic: earlier tags are examined newest first without using the
/// time ordering. Returns the matched `t_idler − t_signal` delays in match
/// order.
pub fn correlate_oracle(tags: &[Tag], window_ps: u64) -> Vec<i64> {
    let mut used = vec![false; tags.len()];
    let mut delays = Vec::new();
    for i in 0..tags.len() {
        let best = (0..i).rev().find(|&j| {
            !used[j] && tags[j].channel != tags[i].channel && 2 * tags[i].time_ps.abs_diff(tags[j].time_ps) <= window_ps
        });
        if let Some(j) = best {
            used[i] = true;
            used[j] = true;
            let (s, id) = if tags[i].channel == Channel::Idler { (j, i) } else { (i, j) };
            delays.push(tags[id].time_ps as i64 - tags[s].time_ps as i64);
        }
    }
    delays
}

/// Sizes for the oracle comparison: ten streams at the 10⁴ limit, the rest
/// smaller.
pub fn oracle_stream_len(i: usize, rng: &mut impl Rng) -> usize {
    if i < 10 { 10_000 } else { rng.random_range(0..=3_000) }
}

/// Random sorted stream with clustered timestamps so that windows overlap
/// often.
pub fn random_stream(n: usize, span_ps: u64, rng: &mut impl Rng) -> Vec<Tag> {
    let mut tags: Vec<Tag> = (0..n)
        .map(|_| {
            let ch = if rng.random::<bool>() { Channel::Signal } else { Channel::Idler };
            Tag::new(rng.random_range(0..=span_ps), ch)
        })
        .collect();
    tags.sort_unstable();
    tags
}
