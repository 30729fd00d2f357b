//! Symbolic tracking of product states built from labeled Bell and GHZ
//! factors.
//!
//! A [`LabeledSystem`] never stores amplitudes. Each measurement across two
//! factors is resolved by one of the swapping rewrite rules below, each of
//! which has every outcome equally likely with weight `1/d^2`. Quantum
//! Fourier transforms are tracked as per-qudit tags; only the tagged
//! patterns with a known closed-form rewrite are accepted, everything else
//! fails with [`Error::NotLabelRepresentable`] so callers can fall back to
//! the state-vector engine.
//!
//! Global phases are dropped throughout: two systems with equal labels
//! describe the same state up to a phase.

use serde::{Deserialize, Serialize};

use crate::basis::{make_bell, make_ghz, BasisKind, BellLabel, GhzLabel, Label};
use crate::error::{Error, Result};
use crate::qudit::{Dim, QuditId, StateVector};
use crate::sampler::OutcomeSampler;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FourierTag {
    #[default]
    None,
    Forward,
    Inverse,
}

/// Which of the two Bell-GHZ swapping rules to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwapVariant {
    /// Measure the GHZ reference qudit against the second Bell qudit; the
    /// first Bell qudit becomes the new GHZ reference.
    Keep,
    /// Measure the first Bell qudit against a non-reference GHZ qudit; the
    /// second Bell qudit takes that slot in the GHZ state.
    Send,
}

/// One entangled factor. Labels are kept in GHZ form internally: a Bell
/// state `(u, v)` is the two-site GHZ state `(u; v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledFactor {
    pub kind: BasisKind,
    phase: usize,
    shifts: Vec<usize>,
    pub sites: Vec<QuditId>,
    pub fourier_tags: Vec<FourierTag>,
}

impl LabeledFactor {
    pub fn bell(dim: Dim, label: BellLabel, sites: [QuditId; 2]) -> Self {
        let label = label.reduced(dim);
        LabeledFactor {
            kind: BasisKind::Bell,
            phase: label.u,
            shifts: vec![label.v],
            sites: sites.to_vec(),
            fourier_tags: vec![FourierTag::None; 2],
        }
    }

    pub fn ghz(dim: Dim, label: &GhzLabel, sites: Vec<QuditId>) -> Result<Self> {
        if label.parties() != sites.len() || sites.len() < 2 {
            return Err(Error::InvalidLabel(format!(
                "GHZ label {label} does not fit {} sites",
                sites.len()
            )));
        }
        let label = label.reduced(dim);
        let parties = label.parties();
        Ok(LabeledFactor {
            kind: if sites.len() == 2 {
                BasisKind::Bell
            } else {
                BasisKind::Ghz
            },
            phase: label.phase,
            shifts: label.shifts,
            sites,
            fourier_tags: vec![FourierTag::None; parties],
        })
    }

    pub fn label(&self) -> Label {
        match self.kind {
            BasisKind::Bell => Label::Bell(BellLabel::new(self.phase, self.shifts[0])),
            BasisKind::Ghz => Label::Ghz(self.ghz_label()),
        }
    }

    pub fn ghz_label(&self) -> GhzLabel {
        GhzLabel::new(self.phase, self.shifts.clone())
    }

    pub fn slot_of(&self, site: QuditId) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    fn shift_at(&self, slot: usize) -> usize {
        if slot == 0 {
            0
        } else {
            self.shifts[slot - 1]
        }
    }

    pub fn is_untagged(&self) -> bool {
        self.fourier_tags.iter().all(|t| *t == FourierTag::None)
    }

    fn tag_of(&self, site: QuditId) -> FourierTag {
        self.slot_of(site)
            .map_or(FourierTag::None, |i| self.fourier_tags[i])
    }

    /// The same factor with its sites listed in `order` (a permutation of
    /// the current sites). Only the labels change, by a global phase.
    pub fn reordered(&self, dim: Dim, order: &[QuditId]) -> Result<Self> {
        if order.len() != self.sites.len() || order.iter().any(|s| self.slot_of(*s).is_none()) {
            return Err(Error::InvalidSites(format!(
                "{order:?} is not a reordering of {:?}",
                self.sites
            )));
        }
        let slots: Vec<usize> = order.iter().map(|s| self.slot_of(*s).unwrap()).collect();
        let reference = self.shift_at(slots[0]);
        Ok(LabeledFactor {
            kind: self.kind,
            phase: self.phase,
            shifts: slots[1..]
                .iter()
                .map(|&i| dim.sub(self.shift_at(i), reference))
                .collect(),
            sites: order.to_vec(),
            fourier_tags: slots.iter().map(|&i| self.fourier_tags[i]).collect(),
        })
    }

    /// Reorder so `site` sits at `slot`, keeping the others in relative order.
    fn with_site_at(&self, dim: Dim, site: QuditId, slot: usize) -> Result<Self> {
        let mut order: Vec<QuditId> = self.sites.iter().copied().filter(|&s| s != site).collect();
        order.insert(slot, site);
        self.reordered(dim, &order)
    }

    /// Amplitudes of this factor on its own sites, Fourier tags applied.
    pub fn to_state(&self, dim: Dim) -> Result<StateVector> {
        let mut s = if self.kind == BasisKind::Bell {
            make_bell(dim, BellLabel::new(self.phase, self.shifts[0]))
        } else {
            make_ghz(dim, &self.ghz_label(), self.sites.len())?
        };
        for (i, tag) in self.fourier_tags.iter().enumerate() {
            match tag {
                FourierTag::None => {}
                FourierTag::Forward => s = s.apply_fourier(i, false)?,
                FourierTag::Inverse => s = s.apply_fourier(i, true)?,
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSystem {
    dim: Dim,
    factors: Vec<LabeledFactor>,
}

impl LabeledSystem {
    pub fn new(dim: Dim) -> Self {
        LabeledSystem {
            dim,
            factors: Vec::new(),
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn factors(&self) -> &[LabeledFactor] {
        &self.factors
    }

    pub fn with_factor(mut self, factor: LabeledFactor) -> Result<Self> {
        for s in &factor.sites {
            if self.factor_index(*s).is_ok() || factor.sites.iter().filter(|x| *x == s).count() > 1
            {
                return Err(Error::InvalidSites(format!(
                    "{s} already belongs to a factor"
                )));
            }
        }
        self.factors.push(factor);
        Ok(self)
    }

    pub fn with_bell(self, label: BellLabel, sites: [QuditId; 2]) -> Result<Self> {
        let f = LabeledFactor::bell(self.dim, label, sites);
        self.with_factor(f)
    }

    pub fn with_ghz(self, label: &GhzLabel, sites: Vec<QuditId>) -> Result<Self> {
        let f = LabeledFactor::ghz(self.dim, label, sites)?;
        self.with_factor(f)
    }

    pub fn factor_index(&self, site: QuditId) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.slot_of(site).is_some())
            .ok_or_else(|| Error::InvalidSites(format!("{site} is not part of the system")))
    }

    pub fn factor_of(&self, site: QuditId) -> Result<&LabeledFactor> {
        Ok(&self.factors[self.factor_index(site)?])
    }

    /// Label of the factor holding `site`, written with `site` first.
    pub fn label_from(&self, site: QuditId) -> Result<Label> {
        let f = self.factor_of(site)?;
        Ok(f.with_site_at(self.dim, site, 0)?.label())
    }

    fn replace_two(&self, i: usize, j: usize, a: LabeledFactor, b: LabeledFactor) -> Self {
        let mut factors = self.factors.clone();
        factors[i] = a;
        factors[j] = b;
        LabeledSystem {
            dim: self.dim,
            factors,
        }
    }

    fn two_factors(&self, measured: [QuditId; 2]) -> Result<(usize, usize)> {
        let i = self.factor_index(measured[0])?;
        let j = self.factor_index(measured[1])?;
        if i == j {
            return Err(Error::PatternMismatch(format!(
                "{} and {} belong to the same factor",
                measured[0], measured[1]
            )));
        }
        Ok((i, j))
    }

    fn require_untagged(&self, sites: &[QuditId]) -> Result<()> {
        for &s in sites {
            if self.factor_of(s)?.tag_of(s) != FourierTag::None {
                return Err(Error::NotLabelRepresentable(format!(
                    "{s} carries a Fourier tag"
                )));
            }
        }
        Ok(())
    }

    /// Bell measurement across two Bell pairs `(a1, a2)` on `(x, p)` and
    /// `(a3, a4)` on `(q, y)` with measured pair `(x, y)`:
    /// outcome `(k, l)` leaves `(a1 - k, a4 + l)` on `(x, y)` and
    /// `(a3 + k, a2 - l)` on `(q, p)`.
    pub fn swap_bell_bell(&self, measured: [QuditId; 2], outcome: (usize, usize)) -> Result<Self> {
        let dim = self.dim;
        let [x, y] = measured;
        let (i, j) = self.two_factors(measured)?;
        let (fa, fb) = (&self.factors[i], &self.factors[j]);
        if fa.kind != BasisKind::Bell || fb.kind != BasisKind::Bell {
            return Err(Error::PatternMismatch(
                "both factors must be Bell pairs".into(),
            ));
        }
        self.require_untagged(&measured)?;
        let fa = fa.with_site_at(dim, x, 0)?;
        let fb = fb.with_site_at(dim, y, 1)?;
        let (a1, a2, p) = (fa.phase, fa.shifts[0], fa.sites[1]);
        let (a3, a4, q) = (fb.phase, fb.shifts[0], fb.sites[0]);
        let (k, l) = (outcome.0 % dim.get(), outcome.1 % dim.get());

        let mut meas =
            LabeledFactor::bell(dim, BellLabel::new(dim.sub(a1, k), dim.add(a4, l)), [x, y]);
        meas.fourier_tags = vec![FourierTag::None; 2];
        let mut rest =
            LabeledFactor::bell(dim, BellLabel::new(dim.add(a3, k), dim.sub(a2, l)), [q, p]);
        rest.fourier_tags = vec![fb.fourier_tags[0], fa.fourier_tags[1]];
        Ok(self.replace_two(i, j, meas, rest))
    }

    /// Bell measurement between a Bell pair `(u1, u2)` and a GHZ state
    /// `(v1; v2, ..., vN)`.
    ///
    /// * [`SwapVariant::Keep`]: measured pair is (GHZ reference, second Bell
    ///   qudit). Outcome `(k, l)` leaves `(v1 - k, u2 + l)` on the measured
    ///   pair and `(u1 + k; v2 - l, ..., vN - l)` with the first Bell qudit
    ///   as the new reference.
    /// * [`SwapVariant::Send`]: measured pair is (first Bell qudit, GHZ slot
    ///   `i >= 1`). Outcome `(k, l)` leaves `(u1 - k, vi + l)` on the
    ///   measured pair and the GHZ state `(v1 + k; ...)` with slot `i` taken
    ///   over by the second Bell qudit with shift `u2 - l`.
    pub fn swap_bell_ghz(
        &self,
        measured: [QuditId; 2],
        outcome: (usize, usize),
        variant: SwapVariant,
    ) -> Result<Self> {
        let dim = self.dim;
        let (k, l) = (outcome.0 % dim.get(), outcome.1 % dim.get());
        self.require_untagged(&measured)?;
        match variant {
            SwapVariant::Keep => {
                let [s, b] = measured;
                let (gi, bi) = self.two_factors(measured)?;
                let (g, bell) = (&self.factors[gi], &self.factors[bi]);
                if bell.kind != BasisKind::Bell || g.slot_of(s) != Some(0) {
                    return Err(Error::PatternMismatch(
                        "Keep swap measures the GHZ reference qudit against a Bell qudit".into(),
                    ));
                }
                let bell = bell.with_site_at(dim, b, 1)?;
                let (u1, u2, b1) = (bell.phase, bell.shifts[0], bell.sites[0]);
                let meas = LabeledFactor::bell(
                    dim,
                    BellLabel::new(dim.sub(g.phase, k), dim.add(u2, l)),
                    [s, b],
                );
                let mut sites = g.sites.clone();
                sites[0] = b1;
                let mut tags = g.fourier_tags.clone();
                tags[0] = bell.fourier_tags[0];
                let ghz = LabeledFactor {
                    kind: g.kind,
                    phase: dim.add(u1, k),
                    shifts: g.shifts.iter().map(|&v| dim.sub(v, l)).collect(),
                    sites,
                    fourier_tags: tags,
                };
                Ok(self.replace_two(gi, bi, ghz, meas))
            }
            SwapVariant::Send => {
                let [b, s] = measured;
                let (bi, gi) = self.two_factors(measured)?;
                let (bell, g) = (&self.factors[bi], &self.factors[gi]);
                let slot = match g.slot_of(s) {
                    Some(slot) if slot > 0 && bell.kind == BasisKind::Bell => slot,
                    _ => {
                        return Err(Error::PatternMismatch(
                            "Send swap measures a Bell qudit against a non-reference GHZ qudit"
                                .into(),
                        ))
                    }
                };
                let bell = bell.with_site_at(dim, b, 0)?;
                let (u1, u2, b2) = (bell.phase, bell.shifts[0], bell.sites[1]);
                let vi = g.shift_at(slot);
                let meas = LabeledFactor::bell(
                    dim,
                    BellLabel::new(dim.sub(u1, k), dim.add(vi, l)),
                    [b, s],
                );
                let mut ghz = g.clone();
                ghz.phase = dim.add(g.phase, k);
                ghz.shifts[slot - 1] = dim.sub(u2, l);
                ghz.sites[slot] = b2;
                ghz.fourier_tags[slot] = bell.fourier_tags[1];
                Ok(self.replace_two(bi, gi, meas, ghz))
            }
        }
    }

    /// Bell measurement between `(F (x) I)(0, 0)` on `(b, b2)`, measured at
    /// the tagged qudit `b`, and slot `i >= 1` of a GHZ state
    /// `(u1; ..., ui, ...)`. Outcome `(k, l)` leaves `(k, ui - l)` on
    /// `(b, s)` and the GHZ state `(u1 - k; ...)` with slot `i` taken over by
    /// `b2` at shift `l` and carrying a forward Fourier tag. Tags already on
    /// other GHZ qudits are kept.
    pub fn swap_fourier(&self, measured: [QuditId; 2], outcome: (usize, usize)) -> Result<Self> {
        let dim = self.dim;
        let [b, s] = measured;
        let (bi, gi) = self.two_factors(measured)?;
        let (bell, g) = (&self.factors[bi], &self.factors[gi]);
        if bell.kind != BasisKind::Bell || bell.phase != 0 || bell.shifts[0] != 0 {
            return Err(Error::PatternMismatch(
                "Fourier swap needs the Bell pair (0, 0)".into(),
            ));
        }
        let bell = bell.with_site_at(dim, b, 0)?;
        if bell.fourier_tags != [FourierTag::Forward, FourierTag::None] {
            return Err(Error::PatternMismatch(
                "Fourier swap needs a forward tag on the measured Bell qudit only".into(),
            ));
        }
        let slot = match g.slot_of(s) {
            Some(slot) if slot > 0 && g.fourier_tags[slot] == FourierTag::None => slot,
            _ => {
                return Err(Error::PatternMismatch(
                    "Fourier swap measures an untagged non-reference GHZ qudit".into(),
                ))
            }
        };
        let (k, l) = (outcome.0 % dim.get(), outcome.1 % dim.get());
        let ui = g.shift_at(slot);
        let meas = LabeledFactor::bell(dim, BellLabel::new(k, dim.sub(ui, l)), [b, s]);
        let mut ghz = g.clone();
        ghz.phase = dim.sub(g.phase, k);
        ghz.shifts[slot - 1] = l;
        ghz.sites[slot] = bell.sites[1];
        ghz.fourier_tags[slot] = FourierTag::Forward;
        Ok(self.replace_two(bi, gi, meas, ghz))
    }

    /// `I (x) Z^p X^q (x) X^r` on a three-qudit GHZ factor, identified by any
    /// of its qudits: `(u; v, w) -> (u + p; v + q, w + r)`.
    pub fn apply_weyl_labels(&self, ghz: QuditId, p: usize, q: usize, r: usize) -> Result<Self> {
        let dim = self.dim;
        let i = self.factor_index(ghz)?;
        let f = &self.factors[i];
        if f.kind != BasisKind::Ghz || f.sites.len() != 3 || !f.is_untagged() {
            return Err(Error::PatternMismatch(
                "expected an untagged three-qudit GHZ factor".into(),
            ));
        }
        let mut next = self.clone();
        let g = &mut next.factors[i];
        g.phase = dim.add(g.phase, p);
        g.shifts[0] = dim.add(g.shifts[0], q);
        g.shifts[1] = dim.add(g.shifts[1], r);
        Ok(next)
    }

    /// `X^shift Z^phase` on one qudit.
    pub fn apply_weyl(&self, site: QuditId, shift: usize, phase: usize) -> Result<Self> {
        let dim = self.dim;
        let i = self.factor_index(site)?;
        self.require_untagged(&[site])?;
        let mut next = self.clone();
        let f = &mut next.factors[i];
        let slot = f.slot_of(site).unwrap();
        f.phase = dim.add(f.phase, phase);
        if slot == 0 {
            for v in f.shifts.iter_mut() {
                *v = dim.sub(*v, shift);
            }
        } else {
            f.shifts[slot - 1] = dim.add(f.shifts[slot - 1], shift);
        }
        Ok(next)
    }

    pub fn apply_fourier(&self, site: QuditId, inverse: bool) -> Result<Self> {
        let i = self.factor_index(site)?;
        let mut next = self.clone();
        let f = &mut next.factors[i];
        let slot = f.slot_of(site).unwrap();
        f.fourier_tags[slot] = match (f.fourier_tags[slot], inverse) {
            (FourierTag::None, false) => FourierTag::Forward,
            (FourierTag::None, true) => FourierTag::Inverse,
            (FourierTag::Forward, true) | (FourierTag::Inverse, false) => FourierTag::None,
            (tag, _) => {
                return Err(Error::NotLabelRepresentable(format!(
                    "{site} already carries a {tag:?} tag"
                )))
            }
        };
        Ok(next)
    }

    /// Bell measurement on the ordered pair `pair`, dispatching to the
    /// matching rewrite rule. The outcome is drawn from `sampler` over all
    /// `d^2` labels in sampling order, exactly as the state-vector engine
    /// would draw it.
    pub fn measure_bell(
        &self,
        pair: [QuditId; 2],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<(BellLabel, Self)> {
        let dim = self.dim;
        let d = dim.get();
        let [x, y] = pair;
        if x == y {
            return Err(Error::InvalidSites(format!("{x} listed twice")));
        }
        let i = self.factor_index(x)?;
        let j = self.factor_index(y)?;

        if i == j {
            let f = &self.factors[i];
            if f.kind != BasisKind::Bell {
                return Err(Error::NotLabelRepresentable(
                    "Bell measurement inside a GHZ factor".into(),
                ));
            }
            self.require_untagged(&pair)?;
            let oriented = f.reordered(dim, &pair)?;
            let label = BellLabel::new(oriented.phase, oriented.shifts[0]);
            let mut probs = vec![0.0; d * d];
            probs[label.u * d + label.v] = 1.0;
            sampler.pick(&probs);
            let mut next = self.clone();
            next.factors[i] = oriented;
            return Ok((label, next));
        }

        let (fx, fy) = (&self.factors[i], &self.factors[j]);
        let tagged = fx.tag_of(x) != FourierTag::None || fy.tag_of(y) != FourierTag::None;
        let pattern: Box<dyn Fn(BellLabel) -> Result<Self>> = match (fx.kind, fy.kind) {
            (BasisKind::Bell, BasisKind::Bell) if !tagged => {
                let a1 = fx.with_site_at(dim, x, 0)?.phase;
                let a4 = fy.with_site_at(dim, y, 1)?.shifts[0];
                Box::new(move |lab: BellLabel| {
                    self.swap_bell_bell(pair, (dim.sub(a1, lab.u), dim.sub(lab.v, a4)))
                })
            }
            (BasisKind::Bell, BasisKind::Ghz) | (BasisKind::Ghz, BasisKind::Bell) => {
                let swapped = fx.kind == BasisKind::Ghz;
                let (b, s) = if swapped { (y, x) } else { (x, y) };
                let (bell, g) = if swapped { (fy, fx) } else { (fx, fy) };
                // caller-order label -> label on (b, s)
                let to_bs = move |lab: BellLabel| if swapped { lab.reversed(dim) } else { lab };
                let slot = g.slot_of(s).unwrap();
                let b_tag = bell.tag_of(b);
                if b_tag == FourierTag::Forward && g.tag_of(s) == FourierTag::None && slot > 0 {
                    let ui = g.shift_at(slot);
                    Box::new(move |lab: BellLabel| {
                        let m = to_bs(lab);
                        self.swap_fourier([b, s], (m.u, dim.sub(ui, m.v)))
                    })
                } else if tagged {
                    return Err(Error::NotLabelRepresentable(format!(
                        "no rewrite for a tagged Bell measurement on ({x}, {y})"
                    )));
                } else if slot == 0 {
                    let v1 = g.phase;
                    let u2 = bell.with_site_at(dim, b, 1)?.shifts[0];
                    Box::new(move |lab: BellLabel| {
                        let m = to_bs(lab).reversed(dim);
                        self.swap_bell_ghz(
                            [s, b],
                            (dim.sub(v1, m.u), dim.sub(m.v, u2)),
                            SwapVariant::Keep,
                        )
                    })
                } else {
                    let u1 = bell.with_site_at(dim, b, 0)?.phase;
                    let vi = g.shift_at(slot);
                    Box::new(move |lab: BellLabel| {
                        let m = to_bs(lab);
                        self.swap_bell_ghz(
                            [b, s],
                            (dim.sub(u1, m.u), dim.sub(m.v, vi)),
                            SwapVariant::Send,
                        )
                    })
                }
            }
            _ => {
                return Err(Error::NotLabelRepresentable(format!(
                    "no rewrite for a Bell measurement on ({x}, {y})"
                )))
            }
        };

        let probs = vec![1.0 / (d * d) as f64; d * d];
        let choice = sampler.pick(&probs);
        let label = BellLabel::new(choice / d, choice % d);
        let next = pattern(label)?;
        Ok((label, next))
    }

    /// GHZ measurement of exactly the qudits of one untagged factor; the
    /// outcome is deterministic and written in the order of `sites`.
    pub fn measure_ghz(
        &self,
        sites: &[QuditId],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<(GhzLabel, Self)> {
        let dim = self.dim;
        if sites.len() < 2 {
            return Err(Error::InvalidSites(
                "a GHZ measurement needs at least 2 qudits".into(),
            ));
        }
        let i = self.factor_index(sites[0])?;
        let f = &self.factors[i];
        if f.sites.len() != sites.len() || sites.iter().any(|s| f.slot_of(*s).is_none()) {
            return Err(Error::NotLabelRepresentable(
                "GHZ measurement must cover exactly one entangled factor".into(),
            ));
        }
        self.require_untagged(sites)?;
        let oriented = f.reordered(dim, sites)?;
        let label = oriented.ghz_label();
        let d = dim.get();
        let index = std::iter::once(label.phase)
            .chain(label.shifts.iter().copied())
            .fold(0, |acc, x| acc * d + x);
        let mut probs = vec![0.0; d.pow(sites.len() as u32)];
        probs[index] = 1.0;
        sampler.pick(&probs);
        let mut next = self.clone();
        next.factors[i] = oriented;
        Ok((label, next))
    }

    /// Dense state of the whole system with qudits in `order`.
    pub fn to_state(&self, order: &[QuditId]) -> Result<StateVector> {
        let mut sites: Vec<QuditId> = Vec::new();
        let mut state: Option<StateVector> = None;
        for f in &self.factors {
            let s = f.to_state(self.dim)?;
            state = Some(match state {
                None => s,
                Some(acc) => acc.tensor(&s)?,
            });
            sites.extend(&f.sites);
        }
        let state = state.ok_or_else(|| Error::InvalidSites("empty system".into()))?;
        if order.len() != sites.len() {
            return Err(Error::InvalidSites(format!(
                "order lists {} of {} qudits",
                order.len(),
                sites.len()
            )));
        }
        let perm = order
            .iter()
            .map(|q| {
                sites
                    .iter()
                    .position(|s| s == q)
                    .ok_or_else(|| Error::InvalidSites(format!("unknown {q}")))
            })
            .collect::<Result<Vec<_>>>()?;
        state.permute_sites(&perm)
    }
}
