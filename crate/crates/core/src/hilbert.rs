//! State vectors over the full Ising basis and matrix-free term action.
//!
//! A basis code is an integer in `[0, 2^n_sites)`; bit `k - 1` is set when
//! site `k` points up. Its popcount is the number of up spins, which every
//! term conserves.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{HamiltonianTerms, TermKind};

/// Default cap on `2m` for dense oracle matrices.
pub const DENSE_SITE_CAP: usize = 14;

#[inline]
pub fn site_mask(site: usize) -> usize {
    1 << (site - 1)
}

#[inline]
pub fn is_up(code: usize, site: usize) -> bool {
    code & site_mask(site) != 0
}

/// Basis codes grouped by number of up spins, each group in increasing order.
pub fn magnetization_sectors(n_sites: usize) -> Vec<Vec<usize>> {
    let mut sectors = vec![Vec::new(); n_sites + 1];
    for code in 0..(1usize << n_sites) {
        sectors[code.count_ones() as usize].push(code);
    }
    sectors
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(n_sites: usize) -> Self {
        Self {
            n_sites,
            amplitudes: vec![Complex64::new(0.0, 0.0); 1 << n_sites],
        }
    }

    /// Ising product state `|code⟩`.
    pub fn basis(n_sites: usize, code: usize) -> Self {
        let mut s = Self::zeros(n_sites);
        s.amplitudes[code] = Complex64::new(1.0, 0.0);
        s
    }

    /// Product state with the listed 1-based sites up and the rest down.
    pub fn from_up_sites(n_sites: usize, up: &[usize]) -> Self {
        let code = up.iter().fold(0, |c, &s| c | site_mask(s));
        Self::basis(n_sites, code)
    }

    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            n_sites,
            amplitudes,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest componentwise distance to `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }

    /// Probability of finding `site` up: the sum of `|amplitude|²` over every
    /// configuration of the other spins.
    pub fn prob_up(&self, site: usize) -> Result<f64> {
        self.check_site(site)?;
        let mask = site_mask(site);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(code, _)| code & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Expectation of total `S^z`.
    pub fn total_sz(&self) -> f64 {
        let half = self.n_sites as f64 / 2.0;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(code, a)| a.norm_sqr() * (code.count_ones() as f64 - half))
            .sum()
    }

    /// Little-endian interleaved `re, im` doubles.
    pub fn write_le<W: Write>(&self, mut w: W) -> Result<()> {
        for a in &self.amplitudes {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_le<R: Read>(n_sites: usize, mut r: R) -> Result<Self> {
        let mut s = Self::zeros(n_sites);
        let mut buf = [0u8; 8];
        for a in &mut s.amplitudes {
            r.read_exact(&mut buf)?;
            a.re = f64::from_le_bytes(buf);
            r.read_exact(&mut buf)?;
            a.im = f64::from_le_bytes(buf);
        }
        Ok(s)
    }
}

/// `⟨ψ|S^z_site|ψ⟩`, in `[-1/2, 1/2]` for a normalized state.
pub fn local_sz(state: &StateVector, site: usize) -> Result<f64> {
    Ok(state.prob_up(site)? - 0.5 * state.norm_sqr())
}

/// Returns `scale · H|ψ⟩` without building `H`.
pub fn apply_terms(
    state: &StateVector,
    terms: &HamiltonianTerms,
    scale: f64,
) -> Result<StateVector> {
    if state.n_sites != terms.n_sites {
        return Err(Error::DimensionMismatch {
            expected: terms.dim(),
            found: state.dim(),
        });
    }
    let mut out = StateVector::zeros(state.n_sites);
    let psi = &state.amplitudes;
    let acc = &mut out.amplitudes;
    for t in &terms.terms {
        let (ma, mb) = (site_mask(t.site_a), site_mask(t.site_b));
        let amp = scale * t.amplitude;
        match t.kind {
            TermKind::XYBond => {
                let both = ma | mb;
                for (code, a) in psi.iter().enumerate() {
                    // flip-flop acts only on antiparallel pairs
                    if ((code & ma) == 0) != ((code & mb) == 0) {
                        acc[code ^ both] += a * amp;
                    }
                }
            }
            TermKind::ZZBond => {
                for (code, a) in psi.iter().enumerate() {
                    let aligned = ((code & ma) == 0) == ((code & mb) == 0);
                    let sign = if aligned { 0.25 } else { -0.25 };
                    acc[code] += a * (amp * sign);
                }
            }
        }
    }
    Ok(out)
}

/// Dense real matrix of the terms, for oracle checks on small lattices.
pub fn dense_matrix(terms: &HamiltonianTerms) -> Result<DMatrix<f64>> {
    dense_matrix_capped(terms, DENSE_SITE_CAP)
}

pub fn dense_matrix_capped(terms: &HamiltonianTerms, site_cap: usize) -> Result<DMatrix<f64>> {
    if terms.n_sites > site_cap {
        return Err(Error::DimensionCap {
            what: "dense matrix",
            spins: terms.n_sites,
            cap: site_cap,
        });
    }
    let dim = terms.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for t in &terms.terms {
        let (ma, mb) = (site_mask(t.site_a), site_mask(t.site_b));
        for code in 0..dim {
            let aligned = ((code & ma) == 0) == ((code & mb) == 0);
            match t.kind {
                TermKind::XYBond if !aligned => h[(code ^ (ma | mb), code)] += t.amplitude,
                TermKind::XYBond => {}
                TermKind::ZZBond => {
                    h[(code, code)] += t.amplitude * if aligned { 0.25 } else { -0.25 };
                }
            }
        }
    }
    Ok(h)
}

/// Diagonal matrix of total `S^z`.
pub fn total_sz_matrix(n_sites: usize) -> DMatrix<f64> {
    let dim = 1usize << n_sites;
    let half = n_sites as f64 / 2.0;
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            i.count_ones() as f64 - half
        } else {
            0.0
        }
    })
}
