//! Ladder geometry and the Hamiltonian as a list of two-site bond terms.
//!
//! Sites are numbered from 1. The system leg occupies sites `1..=m`, the
//! environment leg `m+1..=2m`, and rung `n` joins site `n` with `n + m`.
//! Spin operators follow the `S^z = ±1/2` convention, so an `XYBond` of
//! amplitude `a` stands for `a (S+_i S-_j + S-_i S+_j)` and a `ZZBond` of
//! amplitude `a` for `a S^z_i S^z_j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderSpec {
    /// Spins per leg.
    pub m: usize,
    pub boundary: Boundary,
}

impl LadderSpec {
    pub fn new(m: usize, boundary: Boundary) -> Result<Self> {
        let spec = Self { m, boundary };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ring(m: usize) -> Result<Self> {
        Self::new(m, Boundary::Ring)
    }

    pub fn open(m: usize) -> Result<Self> {
        Self::new(m, Boundary::Open)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidSpec(format!(
                "m = {} but a leg needs at least 2 spins",
                self.m
            )));
        }
        // 2^(2m) must fit in a usize basis code
        if 2 * self.m >= usize::BITS as usize {
            return Err(Error::InvalidSpec(format!("m = {} is too large", self.m)));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        2 * self.m
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites()
    }

    /// Bonds along one leg, as 1-based site pairs within `1..=m`.
    pub fn leg_bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<_> = (1..self.m).map(|n| (n, n + 1)).collect();
        // for m = 2 the closing bond doubles the single bond
        if self.boundary == Boundary::Ring {
            bonds.push((self.m, 1));
        }
        bonds
    }
}

/// Energies in units where `J_E = 1` and `hbar = 1` unless set otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub j_s: f64,
    pub j_e: f64,
    pub j_se: f64,
    pub alpha: f64,
}

impl Couplings {
    pub const ALPHA_XY: f64 = 0.0;
    pub const ALPHA_HEISENBERG: f64 = -0.5;
    pub const ALPHA_DIPOLAR: f64 = 1.0;

    pub fn new(j_s: f64, j_e: f64, j_se: f64, alpha: f64) -> Self {
        Self {
            j_s,
            j_e,
            j_se,
            alpha,
        }
    }

    /// Symmetric legs `J_S = J_E = 1` with the given interchain coupling.
    pub fn weak(j_se: f64, alpha: f64) -> Self {
        Self::new(1.0, 1.0, j_se, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("j_s", self.j_s),
            ("j_e", self.j_e),
            ("j_se", self.j_se),
            ("alpha", self.alpha),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} = {v} is not finite")));
            }
        }
        Ok(())
    }

    /// True when `|J_SE| / |J_E|` leaves the weak-coupling regime.
    pub fn exceeds_weak_coupling(&self) -> bool {
        self.j_se.abs() > self.j_e.abs()
    }

    pub fn max_abs(&self) -> f64 {
        let rung = self.j_se.abs() * (2.0 * self.alpha.abs()).max(0.5);
        self.j_s.abs().max(self.j_e.abs()).max(rung)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    XYBond,
    ZZBond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    SystemLeg,
    EnvironmentLeg,
    Rung,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    System,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    pub site_a: usize,
    pub site_b: usize,
    pub amplitude: f64,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerms {
    pub n_sites: usize,
    pub terms: Vec<Term>,
}

impl HamiltonianTerms {
    pub fn empty(n_sites: usize) -> Self {
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: Term) {
        debug_assert!(term.site_a != term.site_b);
        debug_assert!(term.site_a >= 1 && term.site_a <= self.n_sites);
        debug_assert!(term.site_b >= 1 && term.site_b <= self.n_sites);
        self.terms.push(term);
    }

    /// Concatenate two term lists on the same lattice.
    pub fn extend(mut self, other: HamiltonianTerms) -> Self {
        assert_eq!(self.n_sites, other.n_sites, "terms live on different lattices");
        self.terms.extend(other.terms);
        self
    }

    /// Multiply the amplitude of every term of `stage` by `factor`.
    pub fn scale_stage(mut self, stage: Stage, factor: f64) -> Self {
        for t in self.terms.iter_mut().filter(|t| t.stage == stage) {
            t.amplitude *= factor;
        }
        self
    }

    /// Drop every term of the given stage and kind.
    pub fn without(mut self, stage: Stage, kind: TermKind) -> Self {
        self.terms.retain(|t| !(t.stage == stage && t.kind == kind));
        self
    }

    /// Drop all terms of a stage.
    pub fn without_stage(mut self, stage: Stage) -> Self {
        self.terms.retain(|t| t.stage != stage);
        self
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude.abs())
            .fold(0.0, f64::max)
    }
}

/// Nearest-neighbour flip-flop chain on one leg, `J/2 (S+S- + S-S+)` per bond.
pub fn build_leg(spec: &LadderSpec, j: f64, leg: Leg) -> Result<HamiltonianTerms> {
    spec.validate()?;
    let (offset, stage) = match leg {
        Leg::System => (0, Stage::SystemLeg),
        Leg::Environment => (spec.m, Stage::EnvironmentLeg),
    };
    let mut h = HamiltonianTerms::empty(spec.n_sites());
    for (a, b) in spec.leg_bonds() {
        h.push(Term {
            kind: TermKind::XYBond,
            site_a: a + offset,
            site_b: b + offset,
            amplitude: j / 2.0,
            stage,
        });
    }
    Ok(h)
}

/// Interchain coupling `J_SE [2α S^z S^z − ½(S+S- + S-S+)]` on every rung.
///
/// The rung pattern does not depend on the leg boundary condition. A rung's
/// Ising term is emitted only for nonzero `alpha`.
pub fn build_rungs(spec: &LadderSpec, j_se: f64, alpha: f64) -> Result<HamiltonianTerms> {
    spec.validate()?;
    let mut h = HamiltonianTerms::empty(spec.n_sites());
    for n in 1..=spec.m {
        if alpha != 0.0 {
            h.push(Term {
                kind: TermKind::ZZBond,
                site_a: n,
                site_b: n + spec.m,
                amplitude: 2.0 * alpha * j_se,
                stage: Stage::Rung,
            });
        }
        h.push(Term {
            kind: TermKind::XYBond,
            site_a: n,
            site_b: n + spec.m,
            amplitude: -j_se / 2.0,
            stage: Stage::Rung,
        });
    }
    Ok(h)
}

/// Full Hamiltonian `H_S + H_E + V_SE`.
pub fn total_hamiltonian(spec: &LadderSpec, c: &Couplings) -> Result<HamiltonianTerms> {
    c.validate()?;
    if c.exceeds_weak_coupling() {
        log::warn!(
            "j_se/j_e = {} is outside the weak-coupling regime",
            c.j_se / c.j_e
        );
    }
    Ok(build_leg(spec, c.j_s, Leg::System)?
        .extend(build_leg(spec, c.j_e, Leg::Environment)?)
        .extend(build_rungs(spec, c.j_se, c.alpha)?))
}

/// The two echo stages: `(H_S + Σ, −H_S + Σ)` with `Σ = H_E + V_SE`.
pub fn stage_hamiltonians(
    spec: &LadderSpec,
    c: &Couplings,
) -> Result<(HamiltonianTerms, HamiltonianTerms)> {
    let forward = total_hamiltonian(spec, c)?;
    let backward = forward.clone().scale_stage(Stage::SystemLeg, -1.0);
    Ok((forward, backward))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(h: &HamiltonianTerms, kind: TermKind) -> Vec<(usize, usize)> {
        h.terms
            .iter()
            .filter(|t| t.kind == kind)
            .map(|t| (t.site_a, t.site_b))
            .collect()
    }

    #[test]
    fn rejects_short_legs() {
        assert!(LadderSpec::ring(1).is_err());
        assert!(LadderSpec::open(0).is_err());
        assert_eq!(LadderSpec::open(2).unwrap().dim(), 16);
    }

    #[test]
    fn two_site_open_leg_has_one_half_amplitude_bond() {
        let spec = LadderSpec::open(2).unwrap();
        let h = build_leg(&spec, 1.0, Leg::System).unwrap();
        assert_eq!(h.len(), 1);
        let t = h.terms[0];
        assert_eq!((t.kind, t.site_a, t.site_b), (TermKind::XYBond, 1, 2));
        assert_eq!(t.amplitude, 0.5);
    }

    #[test]
    fn ring_closes_each_leg() {
        let spec = LadderSpec::ring(3).unwrap();
        let h = build_leg(&spec, 1.0, Leg::System).unwrap();
        assert_eq!(pairs(&h, TermKind::XYBond), vec![(1, 2), (2, 3), (3, 1)]);

        let spec = LadderSpec::ring(5).unwrap();
        let h = build_leg(&spec, 1.0, Leg::Environment).unwrap();
        assert_eq!(h.len(), 5);
        assert!(h
            .terms
            .iter()
            .all(|t| (6..=10).contains(&t.site_a) && (6..=10).contains(&t.site_b)));
        assert_eq!(
            pairs(&h, TermKind::XYBond),
            vec![(6, 7), (7, 8), (8, 9), (9, 10), (10, 6)]
        );
    }

    #[test]
    fn rungs_pair_n_with_n_plus_m() {
        let spec = LadderSpec::open(3).unwrap();
        let h = build_rungs(&spec, 0.1, 1.0).unwrap();
        assert_eq!(pairs(&h, TermKind::ZZBond), vec![(1, 4), (2, 5), (3, 6)]);
        assert_eq!(pairs(&h, TermKind::XYBond), vec![(1, 4), (2, 5), (3, 6)]);
    }

    #[test]
    fn xy_rungs_have_no_ising_part() {
        let spec = LadderSpec::ring(4).unwrap();
        let h = build_rungs(&spec, 0.3, 0.0).unwrap();
        assert!(h.terms.iter().all(|t| t.kind == TermKind::XYBond));
    }

    #[test]
    fn heisenberg_rung_ratio_is_two() {
        let spec = LadderSpec::open(2).unwrap();
        let h = build_rungs(&spec, 0.2, -0.5).unwrap();
        let zz = h.terms.iter().find(|t| t.kind == TermKind::ZZBond).unwrap();
        let xy = h.terms.iter().find(|t| t.kind == TermKind::XYBond).unwrap();
        assert!((zz.amplitude / xy.amplitude - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rung_amplitudes_linear_in_alpha_for_ising_only() {
        let spec = LadderSpec::open(2).unwrap();
        for alpha in [-1.0, -0.5, 0.25, 1.0, 2.0] {
            let h = build_rungs(&spec, 0.1, alpha).unwrap();
            for t in &h.terms {
                match t.kind {
                    TermKind::ZZBond => assert!((t.amplitude - 0.2 * alpha).abs() < 1e-15),
                    TermKind::XYBond => assert_eq!(t.amplitude, -0.05),
                }
            }
        }
    }

    #[test]
    fn backward_stage_negates_only_system_leg() {
        let spec = LadderSpec::ring(5).unwrap();
        let c = Couplings::weak(0.1, 1.0);
        let (fw, bw) = stage_hamiltonians(&spec, &c).unwrap();
        assert_eq!(fw.len(), 20);
        assert_eq!(bw.len(), 20);
        for (f, b) in fw.terms.iter().zip(&bw.terms) {
            let sign = if f.stage == Stage::SystemLeg { -1.0 } else { 1.0 };
            assert_eq!(b.amplitude, sign * f.amplitude);
        }
    }

    #[test]
    fn without_system_coupling_stages_coincide() {
        let spec = LadderSpec::ring(4).unwrap();
        let c = Couplings::new(0.0, 1.0, 0.2, -0.5);
        let (fw, bw) = stage_hamiltonians(&spec, &c).unwrap();
        for (f, b) in fw.terms.iter().zip(&bw.terms) {
            assert_eq!(f.amplitude.abs(), b.amplitude.abs());
            if f.amplitude != 0.0 {
                assert_eq!(f.amplitude, b.amplitude);
            }
        }
    }

    #[test]
    fn decoupled_stages_differ_only_in_system_sign() {
        let spec = LadderSpec::open(3).unwrap();
        let c = Couplings::weak(0.0, 0.0);
        let (fw, bw) = stage_hamiltonians(&spec, &c).unwrap();
        for (f, b) in fw.terms.iter().zip(&bw.terms) {
            match f.stage {
                Stage::SystemLeg => assert_eq!(f.amplitude, -b.amplitude),
                _ => assert_eq!(f.amplitude, b.amplitude),
            }
        }
    }

    #[test]
    fn non_finite_couplings_rejected() {
        let spec = LadderSpec::ring(3).unwrap();
        let c = Couplings::new(1.0, f64::NAN, 0.1, 0.0);
        assert!(total_hamiltonian(&spec, &c).is_err());
    }
}
