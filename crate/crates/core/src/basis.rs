//! Generalized Bell and GHZ states and projective measurement in those bases.
//!
//! Bell `(u, v)` on an ordered pair is `d^(-1/2) sum_j omega^(ju) |j, j+v>`.
//! GHZ `(v1; v2, ..., vN)` is `d^(-1/2) sum_j omega^(j v1) |j, j+v2, ..., j+vN>`.
//! Outcome lists are ordered u-major for Bell labels and phase-major then
//! lexicographic in the shifts for GHZ labels; sampling walks that order.

use std::fmt;

use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qudit::{Dim, Register, StateVector};
use crate::sampler::OutcomeSampler;

/// Probabilities below this are treated as exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct BellLabel {
    /// Phase label.
    pub u: usize,
    /// Shift label.
    pub v: usize,
}

impl BellLabel {
    pub const fn new(u: usize, v: usize) -> Self {
        BellLabel { u, v }
    }

    pub fn reduced(self, dim: Dim) -> Self {
        BellLabel {
            u: self.u % dim.get(),
            v: self.v % dim.get(),
        }
    }

    /// The same state written on the reversed site pair: `(u, v)` on `(x, y)`
    /// equals `(u, -v)` on `(y, x)` up to a global phase.
    pub fn reversed(self, dim: Dim) -> Self {
        BellLabel {
            u: self.u,
            v: dim.neg(self.v),
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GhzLabel {
    pub phase: usize,
    /// Shifts of the second and later sites relative to the first.
    pub shifts: Vec<usize>,
}

impl GhzLabel {
    pub fn new(phase: usize, shifts: Vec<usize>) -> Self {
        GhzLabel { phase, shifts }
    }

    pub fn zero(parties: usize) -> Self {
        GhzLabel {
            phase: 0,
            shifts: vec![0; parties.saturating_sub(1)],
        }
    }

    pub fn parties(&self) -> usize {
        self.shifts.len() + 1
    }

    pub fn reduced(&self, dim: Dim) -> Self {
        GhzLabel {
            phase: self.phase % dim.get(),
            shifts: self.shifts.iter().map(|s| s % dim.get()).collect(),
        }
    }

    /// Shift of slot `i` relative to slot 0 (slot 0 itself has shift 0).
    pub fn slot_shift(&self, slot: usize) -> usize {
        if slot == 0 {
            0
        } else {
            self.shifts[slot - 1]
        }
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};", self.phase)?;
        for (i, s) in self.shifts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, " {s}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Bell,
    Ghz,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Bell(BellLabel),
    Ghz(GhzLabel),
}

impl Label {
    pub fn as_bell(&self) -> Option<BellLabel> {
        match self {
            Label::Bell(b) => Some(*b),
            Label::Ghz(_) => None,
        }
    }

    pub fn as_ghz(&self) -> Option<&GhzLabel> {
        match self {
            Label::Ghz(g) => Some(g),
            Label::Bell(_) => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Bell(b) => b.fmt(f),
            Label::Ghz(g) => g.fmt(f),
        }
    }
}

/// All labels of a basis on `sites` qudits, in sampling order.
pub fn all_labels(dim: Dim, kind: BasisKind, sites: usize) -> Vec<Label> {
    let d = dim.get();
    match kind {
        BasisKind::Bell => (0..d * d)
            .map(|i| Label::Bell(BellLabel::new(i / d, i % d)))
            .collect(),
        BasisKind::Ghz => {
            let count = d.pow(sites as u32);
            (0..count)
                .map(|mut i| {
                    let mut digits = vec![0; sites];
                    for slot in digits.iter_mut().rev() {
                        *slot = i % d;
                        i /= d;
                    }
                    Label::Ghz(GhzLabel::new(digits[0], digits[1..].to_vec()))
                })
                .collect()
        }
    }
}

/// Nonzero terms `(digits, amplitude)` of a basis state.
fn basis_terms(dim: Dim, label: &Label) -> Vec<(Vec<usize>, Complex64)> {
    let d = dim.get();
    let norm = 1.0 / (d as f64).sqrt();
    match label {
        Label::Bell(b) => (0..d)
            .map(|j| {
                (
                    vec![j, (j + b.v) % d],
                    dim.omega_pow((j * b.u) as i64) * norm,
                )
            })
            .collect(),
        Label::Ghz(g) => (0..d)
            .map(|j| {
                let mut digits = Vec::with_capacity(g.parties());
                digits.push(j);
                digits.extend(g.shifts.iter().map(|s| (j + s) % d));
                (digits, dim.omega_pow((j * g.phase) as i64) * norm)
            })
            .collect(),
    }
}

fn state_from_terms(dim: Dim, n: usize, terms: &[(Vec<usize>, Complex64)]) -> Result<StateVector> {
    let reg = Register::new(dim, n)?;
    let mut amps = vec![Complex64::zero(); reg.len()];
    for (digits, a) in terms {
        amps[reg.encode(digits)] += a;
    }
    StateVector::from_amplitudes(reg, amps)
}

pub fn make_bell(dim: Dim, label: BellLabel) -> StateVector {
    let label = label.reduced(dim);
    state_from_terms(dim, 2, &basis_terms(dim, &Label::Bell(label))).expect("two qudits always fit")
}

pub fn make_ghz(dim: Dim, label: &GhzLabel, parties: usize) -> Result<StateVector> {
    if parties < 2 {
        return Err(Error::InvalidLabel(format!(
            "a GHZ state needs at least 2 parties, got {parties}"
        )));
    }
    if label.parties() != parties {
        return Err(Error::InvalidLabel(format!(
            "GHZ label {label} has {} entries, expected {parties}",
            label.parties()
        )));
    }
    state_from_terms(
        dim,
        parties,
        &basis_terms(dim, &Label::Ghz(label.reduced(dim))),
    )
}

/// Basis state for any label.
pub fn make_state(dim: Dim, label: &Label) -> Result<StateVector> {
    match label {
        Label::Bell(b) => Ok(make_bell(dim, *b)),
        Label::Ghz(g) => make_ghz(dim, g, g.parties()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub labels: Vec<Label>,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn probability_of(&self, label: &Label) -> f64 {
        self.labels
            .iter()
            .position(|l| l == label)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn max_probability(&self) -> f64 {
        self.probabilities.iter().copied().fold(0.0, f64::max)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Label, f64)> {
        self.labels
            .iter()
            .zip(self.probabilities.iter().copied())
            .filter(|(_, p)| *p > 0.0)
    }
}

fn validate_sites(s: &StateVector, sites: &[usize], kind: BasisKind) -> Result<()> {
    match kind {
        BasisKind::Bell if sites.len() != 2 => {
            return Err(Error::InvalidSites(format!(
                "a Bell measurement needs 2 sites, got {}",
                sites.len()
            )))
        }
        BasisKind::Ghz if sites.len() < 2 => {
            return Err(Error::InvalidSites(format!(
                "a GHZ measurement needs at least 2 sites, got {}",
                sites.len()
            )))
        }
        _ => {}
    }
    for (i, &a) in sites.iter().enumerate() {
        if a >= s.n_qudits() {
            return Err(Error::InvalidSite {
                site: a,
                len: s.n_qudits(),
            });
        }
        if sites[..i].contains(&a) {
            return Err(Error::InvalidSites(format!("site {a} listed twice")));
        }
    }
    Ok(())
}

/// Unnormalized remainders `<label|_sites s>` over the unmeasured sites, one
/// per label in sampling order, plus the ordered list of unmeasured sites.
struct Projection {
    labels: Vec<Label>,
    remainders: Vec<Vec<Complex64>>,
    probabilities: Vec<f64>,
    rest: Vec<usize>,
}

fn project(s: &StateVector, sites: &[usize], kind: BasisKind) -> Result<Projection> {
    validate_sites(s, sites, kind)?;
    let dim = s.dim();
    let reg = s.register();
    let rest: Vec<usize> = (0..s.n_qudits()).filter(|i| !sites.contains(i)).collect();
    let rest_len = dim.get().pow(rest.len() as u32);

    // amplitude offset contributed by each assignment of the unmeasured sites
    let mut rest_offsets = vec![0usize; rest_len];
    for (r, off) in rest_offsets.iter_mut().enumerate() {
        let mut idx = r;
        for &site in rest.iter().rev() {
            *off += (idx % dim.get()) * reg.stride(site);
            idx /= dim.get();
        }
    }

    let labels = all_labels(dim, kind, sites.len());
    let mut remainders = Vec::with_capacity(labels.len());
    let mut raw = Vec::with_capacity(labels.len());
    let amps = s.amplitudes();
    for label in &labels {
        let mut rem = vec![Complex64::zero(); rest_len];
        for (digits, a) in basis_terms(dim, label) {
            let base: usize = digits
                .iter()
                .zip(sites)
                .map(|(j, &site)| j * reg.stride(site))
                .sum();
            let coeff = a.conj();
            for (slot, off) in rem.iter_mut().zip(&rest_offsets) {
                *slot += coeff * amps[base + off];
            }
        }
        raw.push(rem.iter().map(|x| x.norm_sqr()).sum::<f64>());
        remainders.push(rem);
    }
    let total: f64 = raw.iter().sum();
    let probabilities = raw
        .iter()
        .map(|&p| {
            let p = p / total;
            if p < PROBABILITY_FLOOR {
                0.0
            } else {
                p
            }
        })
        .collect::<Vec<_>>();
    let kept: f64 = probabilities.iter().sum();
    let probabilities = probabilities.into_iter().map(|p| p / kept).collect();
    Ok(Projection {
        labels,
        remainders,
        probabilities,
        rest,
    })
}

/// Born-rule distribution of a Bell or GHZ measurement on `sites`.
pub fn basis_distribution(
    s: &StateVector,
    sites: &[usize],
    kind: BasisKind,
) -> Result<OutcomeDistribution> {
    let p = project(s, sites, kind)?;
    Ok(OutcomeDistribution {
        labels: p.labels,
        probabilities: p.probabilities,
    })
}

/// Sample an outcome and return the full post-measurement state, with the
/// measured sites left in place in the labeled basis state.
pub fn measure_in_basis(
    s: &StateVector,
    sites: &[usize],
    kind: BasisKind,
    sampler: &mut dyn OutcomeSampler,
) -> Result<(Label, StateVector)> {
    let mut p = project(s, sites, kind)?;
    let choice = sampler.pick(&p.probabilities);
    let label = p.labels.swap_remove(choice);
    let rem = std::mem::take(&mut p.remainders[choice]);
    let norm = rem.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();

    let dim = s.dim();
    let reg = s.register();
    let mut amps = vec![Complex64::zero(); reg.len()];
    let rest_reg_len = rem.len();
    for (digits, a) in basis_terms(dim, &label) {
        let base: usize = digits
            .iter()
            .zip(sites)
            .map(|(j, &site)| j * reg.stride(site))
            .sum();
        for r in 0..rest_reg_len {
            let mut idx = r;
            let mut off = 0;
            for &site in p.rest.iter().rev() {
                off += (idx % dim.get()) * reg.stride(site);
                idx /= dim.get();
            }
            amps[base + off] = a * rem[r] / norm;
        }
    }
    Ok((label, StateVector::from_amplitudes(reg, amps)?))
}

/// Sample an outcome and factor the measured sites out. Returns the label
/// and the normalized state of the unmeasured sites (in their original
/// relative order), or `None` when every site was measured.
pub fn measure_and_split(
    s: &StateVector,
    sites: &[usize],
    kind: BasisKind,
    sampler: &mut dyn OutcomeSampler,
) -> Result<(Label, Option<StateVector>)> {
    let mut p = project(s, sites, kind)?;
    let choice = sampler.pick(&p.probabilities);
    let label = p.labels.swap_remove(choice);
    if p.rest.is_empty() {
        return Ok((label, None));
    }
    let rem = std::mem::take(&mut p.remainders[choice]);
    let reg = Register::new(s.dim(), p.rest.len())?;
    let state = StateVector::from_amplitudes(reg, rem)?.normalized();
    Ok((label, Some(state)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{round_sampler, PathSampler};

    fn d(v: usize) -> Dim {
        Dim::new(v).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn bell_examples() {
        let h = 1.0 / 2f64.sqrt();
        let b00 = make_bell(d(2), BellLabel::new(0, 0));
        let want = [h, 0.0, 0.0, h];
        for (a, w) in b00.amplitudes().iter().zip(want) {
            assert!((a - c(w)).norm() < 1e-15);
        }
        let b11 = make_bell(d(2), BellLabel::new(1, 1));
        let want = [0.0, h, -h, 0.0];
        for (a, w) in b11.amplitudes().iter().zip(want) {
            assert!((a - c(w)).norm() < 1e-15);
        }
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        for dv in [2, 3, 4] {
            let dim = d(dv);
            let states: Vec<_> = all_labels(dim, BasisKind::Bell, 2)
                .iter()
                .map(|l| make_state(dim, l).unwrap())
                .collect();
            for (i, a) in states.iter().enumerate() {
                for (j, b) in states.iter().enumerate() {
                    let ip = a.inner_product(b).unwrap();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(want)).norm() < 1e-12, "d={dv} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn ghz_examples() {
        let h = 1.0 / 2f64.sqrt();
        let g = make_ghz(d(2), &GhzLabel::zero(3), 3).unwrap();
        assert!((g.amplitude(&[0, 0, 0]) - c(h)).norm() < 1e-15);
        assert!((g.amplitude(&[1, 1, 1]) - c(h)).norm() < 1e-15);
        assert!((g.norm_sqr() - 1.0).abs() < 1e-12);

        for dv in [2, 3, 5] {
            let dim = d(dv);
            for u in 0..dv {
                for v in 0..dv {
                    let g = make_ghz(dim, &GhzLabel::new(u, vec![v]), 2).unwrap();
                    assert_eq!(g, make_bell(dim, BellLabel::new(u, v)));
                }
            }
        }

        let dim = d(3);
        let g = make_ghz(dim, &GhzLabel::new(1, vec![2, 0]), 3).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for j in 0..3 {
            let amp = g.amplitude(&[j, (j + 2) % 3, j]);
            assert!((amp - dim.omega_pow(j as i64) * s).norm() < 1e-12);
        }
        assert!(make_ghz(dim, &GhzLabel::zero(3), 4).is_err());
        assert!(make_ghz(dim, &GhzLabel::zero(1), 1).is_err());
    }

    #[test]
    fn ghz_basis_is_orthonormal() {
        let dim = d(3);
        let states: Vec<_> = all_labels(dim, BasisKind::Ghz, 3)
            .iter()
            .map(|l| make_state(dim, l).unwrap())
            .collect();
        assert_eq!(states.len(), 27);
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate().skip(i) {
                let ip = a.inner_product(b).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn distribution_of_two_epr_pairs_on_crossed_sites() {
        let dim = d(2);
        let b = make_bell(dim, BellLabel::new(0, 0));
        let s = b.tensor(&b).unwrap();
        let dist = basis_distribution(&s, &[0, 3], BasisKind::Bell).unwrap();
        for p in &dist.probabilities {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_of_product_state() {
        let dim = d(2);
        let s = StateVector::basis(dim, &[0, 0]).unwrap();
        let dist = basis_distribution(&s, &[0, 1], BasisKind::Bell).unwrap();
        assert!((dist.probability_of(&Label::Bell(BellLabel::new(0, 0))) - 0.5).abs() < 1e-12);
        assert!((dist.probability_of(&Label::Bell(BellLabel::new(1, 0))) - 0.5).abs() < 1e-12);
        assert_eq!(dist.probability_of(&Label::Bell(BellLabel::new(0, 1))), 0.0);
        assert_eq!(dist.probability_of(&Label::Bell(BellLabel::new(1, 1))), 0.0);
    }

    #[test]
    fn distribution_of_fourier_twisted_pair() {
        let dim = d(2);
        let s = make_bell(dim, BellLabel::new(0, 0))
            .apply_fourier(0, false)
            .unwrap();
        let dist = basis_distribution(&s, &[0, 1], BasisKind::Bell).unwrap();
        assert!((dist.probability_of(&Label::Bell(BellLabel::new(1, 0))) - 0.5).abs() < 1e-12);
        assert!((dist.probability_of(&Label::Bell(BellLabel::new(0, 1))) - 0.5).abs() < 1e-12);
        assert_eq!(dist.probability_of(&Label::Bell(BellLabel::new(0, 0))), 0.0);
        assert_eq!(dist.probability_of(&Label::Bell(BellLabel::new(1, 1))), 0.0);
        assert!((dist.max_probability() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn twisted_pair_never_exceeds_one_over_d() {
        for dv in [2, 3, 4, 5] {
            let dim = d(dv);
            for l in all_labels(dim, BasisKind::Bell, 2) {
                let s = make_state(dim, &l)
                    .unwrap()
                    .apply_fourier(0, false)
                    .unwrap();
                let dist = basis_distribution(&s, &[0, 1], BasisKind::Bell).unwrap();
                assert!(dist.max_probability() <= 1.0 / dv as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn invalid_sites_are_rejected() {
        let s = make_bell(d(2), BellLabel::new(0, 0));
        assert!(basis_distribution(&s, &[0], BasisKind::Bell).is_err());
        assert!(basis_distribution(&s, &[0, 0], BasisKind::Bell).is_err());
        assert!(basis_distribution(&s, &[0, 2], BasisKind::Bell).is_err());
        assert!(basis_distribution(&s, &[1], BasisKind::Ghz).is_err());
    }

    #[test]
    fn completeness_on_random_states() {
        use rand::{Rng, SeedableRng};
        for dv in [2, 3] {
            let dim = d(dv);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(dv as u64);
            let reg = Register::new(dim, 4).unwrap();
            let amps = (0..reg.len())
                .map(|_| Complex64::new(rng.gen(), rng.gen()))
                .collect();
            let s = StateVector::from_amplitudes(reg, amps)
                .unwrap()
                .normalized();
            for (sites, kind) in [
                (vec![1, 3], BasisKind::Bell),
                (vec![0, 2, 3], BasisKind::Ghz),
            ] {
                let p = project(&s, &sites, kind).unwrap();
                let raw: f64 = p
                    .remainders
                    .iter()
                    .map(|r| r.iter().map(|x| x.norm_sqr()).sum::<f64>())
                    .sum();
                assert!((raw - 1.0).abs() < 1e-9);
                assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn crossed_measurement_swaps_entanglement() {
        // measuring sites (1,4) of (0,0)_12 (0,0)_34 with outcome (-k, l)
        // leaves (k, -l) on sites (3,2)
        for dv in [2, 3] {
            let dim = d(dv);
            let b = make_bell(dim, BellLabel::new(0, 0));
            let s = b.tensor(&b).unwrap();
            let n = dv * dv;
            for branch in 0..n {
                let mut path = PathSampler::new(vec![branch]);
                let (label, post) =
                    measure_and_split(&s, &[0, 3], BasisKind::Bell, &mut path).unwrap();
                let out = label.as_bell().unwrap();
                let (k, l) = (dim.neg(out.u), out.v);
                let rest = post.unwrap(); // sites (2, 3)
                let want = make_bell(dim, BellLabel::new(k, dim.neg(l)))
                    .permute_sites(&[1, 0])
                    .unwrap();
                assert!(rest.max_deviation_up_to_phase(&want).unwrap() < 1e-9);
                assert!((path.probability() - 1.0 / n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn measuring_an_eigenstate_is_deterministic() {
        let dim = d(3);
        let s = make_bell(dim, BellLabel::new(2, 1));
        let mut sampler = round_sampler(5, 0);
        for _ in 0..20 {
            let (label, post) =
                measure_in_basis(&s, &[0, 1], BasisKind::Bell, &mut sampler).unwrap();
            assert_eq!(label, Label::Bell(BellLabel::new(2, 1)));
            assert!(post.max_deviation(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn repeated_measurement_repeats_the_label() {
        let dim = d(3);
        let b = make_bell(dim, BellLabel::new(1, 2));
        let s = b.tensor(&make_bell(dim, BellLabel::new(0, 1))).unwrap();
        let mut sampler = round_sampler(11, 0);
        for _ in 0..10 {
            let (first, post) =
                measure_in_basis(&s, &[1, 2], BasisKind::Bell, &mut sampler).unwrap();
            assert!((post.norm_sqr() - 1.0).abs() < 1e-9);
            let (second, again) =
                measure_in_basis(&post, &[1, 2], BasisKind::Bell, &mut sampler).unwrap();
            assert_eq!(first, second);
            assert!(again.max_deviation(&post).unwrap() < 1e-9);
        }
    }

    #[test]
    fn sampled_frequencies_match_distribution() {
        let dim = d(2);
        let s = make_bell(dim, BellLabel::new(0, 0))
            .apply_fourier(0, false)
            .unwrap()
            .tensor(&StateVector::basis(dim, &[1]).unwrap())
            .unwrap()
            .apply_fourier(2, false)
            .unwrap();
        let sites = [2, 1];
        let dist = basis_distribution(&s, &sites, BasisKind::Bell).unwrap();
        let n = 100_000;
        let mut counts = vec![0usize; dist.labels.len()];
        let mut sampler = round_sampler(2024, 0);
        for _ in 0..n {
            let (label, _) = measure_and_split(&s, &sites, BasisKind::Bell, &mut sampler).unwrap();
            counts[dist.labels.iter().position(|l| *l == label).unwrap()] += 1;
        }
        for (cnt, p) in counts.iter().zip(&dist.probabilities) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*cnt as f64 / n as f64 - p).abs() <= 3.0 * sigma + 1e-12);
        }
    }
}
