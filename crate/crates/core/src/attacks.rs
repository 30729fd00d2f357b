//! Intercept-and-resend adversaries.
//!
//! * [`Zlg`] keeps Alice's GHZ qudits, hands every receiver half of her own
//!   Bell pair, and after the legal measurements patches the GHZ labels with
//!   Weyl corrections so the announcement stays consistent.
//! * [`OneParty`] cuts a single receiver off from Alice with two Bell pairs.
//! * [`TwoParty`] cuts every receiver off, impersonating Alice towards the
//!   receivers with her own GHZ state and the receivers towards Alice with
//!   Bell pairs.
//! * [`Passive`] does nothing and guesses zero.
//!
//! None of them can see the receivers' coins before the choices are
//! broadcast, so on the modified protocol they act as if every receiver
//! applied the identity and undo the Fourier twist only where they can.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{BellLabel, GhzLabel};
use crate::error::{Error, Result};
use crate::protocol::{
    Adversary, Broadcast, InferredKeys, Lab, Party, Protocol, ReceiverOperation, RoundConfig,
    Transit,
};
use crate::qudit::{Dim, QuditId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    #[default]
    None,
    Zlg,
    OneParty,
    TwoParty,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [
        AttackKind::None,
        AttackKind::Zlg,
        AttackKind::OneParty,
        AttackKind::TwoParty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Zlg => "zlg",
            AttackKind::OneParty => "one-party",
            AttackKind::TwoParty => "two-party",
        }
    }

    /// A fresh adversary with all-zero private labels.
    pub fn build(self, d: Dim, parties: usize, target: usize) -> Result<Box<dyn Adversary + Send>> {
        Ok(match self {
            AttackKind::None => Box::new(Passive),
            AttackKind::Zlg => Box::new(Zlg::new(d, parties)),
            AttackKind::OneParty => Box::new(OneParty::new(d, parties, target)?),
            AttackKind::TwoParty => Box::new(TwoParty::new(d, parties)),
        })
    }

    pub fn label_representable(self, protocol: Protocol) -> bool {
        match self {
            AttackKind::None => true,
            AttackKind::Zlg => protocol == Protocol::Original,
            AttackKind::OneParty | AttackKind::TwoParty => false,
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackKind::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown attack '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interception {
    pub transit: Transit,
    pub delivered: QuditId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveMeasurement {
    pub sites: Vec<QuditId>,
    pub bell: Option<BellLabel>,
    pub ghz: Option<GhzLabel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub qudit: QuditId,
    pub shift: usize,
    pub phase: usize,
}

/// Everything Eve holds or learns during one round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveState {
    /// Labels of her Bell pairs, in preparation order.
    pub bell_labels: Vec<BellLabel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ghz_label: Option<GhzLabel>,
    pub interceptions: Vec<Interception>,
    pub measurements: Vec<EveMeasurement>,
    pub corrections: Vec<Correction>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub choices: Option<Vec<ReceiverOperation>>,
}

impl EveState {
    fn record_bell(&mut self, pair: [QuditId; 2], label: BellLabel) {
        self.measurements.push(EveMeasurement {
            sites: pair.to_vec(),
            bell: Some(label),
            ghz: None,
        });
    }

    fn record_ghz(&mut self, sites: &[QuditId], label: GhzLabel) {
        self.measurements.push(EveMeasurement {
            sites: sites.to_vec(),
            bell: None,
            ghz: Some(label),
        });
    }

    fn intercepted(&mut self, transit: Transit, delivered: QuditId) -> QuditId {
        self.interceptions.push(Interception { transit, delivered });
        delivered
    }
}

/// Eve's guess from posing as receiver `i` towards Alice: her Bell outcome
/// `(x, y)` on her pair with initial label `(e1, e2)`, which took over slot
/// `i + 1` of Alice's GHZ state.
fn posing_receiver_key(
    dim: Dim,
    cfg: &RoundConfig,
    i: usize,
    own: BellLabel,
    outcome: BellLabel,
    p: &GhzLabel,
) -> usize {
    let m2 = dim.sub(p.shifts[i], own.v);
    dim.sub(
        dim.sub(cfg.initial_labels.alice_ghz.shifts[i], outcome.v),
        m2,
    )
}

/// Reconstruct the secret from the announcement and a list of shares.
fn reconstruct(
    dim: Dim,
    cfg: &RoundConfig,
    p: &GhzLabel,
    shares: impl IntoIterator<Item = usize>,
) -> usize {
    shares.into_iter().fold(
        dim.sub(p.phase, cfg.initial_labels.alice_bell.u),
        |acc, m| dim.sub(acc, m),
    )
}

/// Infer the round's keys from the adversary's record and the announcement.
pub fn eve_infer_keys(
    adversary: &dyn Adversary,
    cfg: &RoundConfig,
    announcement: &GhzLabel,
) -> InferredKeys {
    adversary.inferred_keys(cfg, announcement)
}

/// No interference. Its "inference" is the constant guess 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct Passive;

impl Adversary for Passive {
    fn name(&self) -> &'static str {
        "none"
    }

    fn label_representable(&self, _protocol: Protocol) -> bool {
        true
    }

    fn inferred_keys(&self, _cfg: &RoundConfig, _announcement: &GhzLabel) -> InferredKeys {
        InferredKeys::default()
    }

    fn transcript(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

#[derive(Clone, Debug)]
pub struct Zlg {
    dim: Dim,
    labels: Vec<BellLabel>,
    pairs: Vec<[QuditId; 2]>,
    /// Alice's GHZ qudit kept back from receiver `i`.
    kept: Vec<Option<QuditId>>,
    /// Receiver `i`'s returned qudit.
    captured: Vec<Option<QuditId>>,
    outcomes: Vec<BellLabel>,
    state: EveState,
}

impl Zlg {
    pub fn new(dim: Dim, parties: usize) -> Self {
        Self::with_labels(dim, vec![BellLabel::default(); parties.saturating_sub(1)])
    }

    /// Eve's Bell pair for receiver `i` starts in `labels[i]`.
    pub fn with_labels(dim: Dim, labels: Vec<BellLabel>) -> Self {
        let n = labels.len();
        Zlg {
            dim,
            labels: labels.iter().map(|l| l.reduced(dim)).collect(),
            pairs: Vec::new(),
            kept: vec![None; n],
            captured: vec![None; n],
            outcomes: Vec::new(),
            state: EveState::default(),
        }
    }
}

impl Adversary for Zlg {
    fn name(&self) -> &'static str {
        "zlg"
    }

    fn label_representable(&self, protocol: Protocol) -> bool {
        protocol == Protocol::Original
    }

    fn prepare(&mut self, lab: &mut Lab<'_>, cfg: &RoundConfig) -> Result<()> {
        if self.labels.len() != cfg.receivers() {
            return Err(Error::InvalidConfig(format!(
                "adversary built for {} receivers, round has {}",
                self.labels.len(),
                cfg.receivers()
            )));
        }
        self.pairs = self
            .labels
            .iter()
            .map(|l| lab.bell(*l))
            .collect::<Result<_>>()?;
        self.state.bell_labels = self.labels.clone();
        Ok(())
    }

    fn intercept(&mut self, _lab: &mut Lab<'_>, t: Transit) -> Result<QuditId> {
        let delivered = match (t.from, t.to) {
            (Party::Alice, Party::Receiver(i)) => {
                self.kept[i] = Some(t.qudit);
                self.pairs[i][1]
            }
            (Party::Receiver(i), Party::Alice) => {
                self.captured[i] = Some(t.qudit);
                self.kept[i]
                    .ok_or_else(|| Error::InvalidConfig("return before distribution".into()))?
            }
            _ => t.qudit,
        };
        Ok(self.state.intercepted(t, delivered))
    }

    fn legal_measurements_done(&mut self, lab: &mut Lab<'_>, _cfg: &RoundConfig) -> Result<()> {
        let dim = self.dim;
        let mut phase = 0;
        for i in 0..self.pairs.len() {
            let r =
                self.captured[i].ok_or_else(|| Error::InvalidConfig("nothing captured".into()))?;
            let g = self.kept[i].expect("kept before captured");
            let pair = [self.pairs[i][0], r];
            let out = lab.measure_bell(pair)?;
            self.state.record_bell(pair, out);
            self.outcomes.push(out);
            let shift = dim.sub(out.v, self.labels[i].v);
            lab.weyl(g, shift, 0)?;
            self.state.corrections.push(Correction {
                qudit: g,
                shift,
                phase: 0,
            });
            phase = dim.add(phase, dim.sub(out.u, self.labels[i].u));
        }
        let first = self.kept[0].expect("at least one receiver");
        lab.weyl(first, 0, phase)?;
        self.state.corrections.push(Correction {
            qudit: first,
            shift: 0,
            phase,
        });
        Ok(())
    }

    fn on_broadcast(
        &mut self,
        _lab: &mut Lab<'_>,
        _cfg: &RoundConfig,
        b: &Broadcast,
    ) -> Result<()> {
        if let Broadcast::Choices(c) = b {
            self.state.choices = Some(c.clone());
        }
        Ok(())
    }

    fn inferred_keys(&self, cfg: &RoundConfig, p: &GhzLabel) -> InferredKeys {
        let dim = self.dim;
        if self.outcomes.len() != cfg.receivers() {
            return InferredKeys::default();
        }
        // l = g2 + y - e2 - P2 from receiver 0's link
        let y = self.outcomes[0].v;
        let conference_key = dim.sub(
            dim.sub(
                dim.add(cfg.initial_labels.alice_ghz.shifts[0], y),
                self.labels[0].v,
            ),
            p.shifts[0],
        );
        let shares = self
            .outcomes
            .iter()
            .zip(&self.labels)
            .map(|(o, e)| dim.sub(o.u, e.u));
        InferredKeys {
            conference_key,
            qss_secret: reconstruct(dim, cfg, p, shares),
        }
    }

    fn transcript(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("serializable")
    }
}

#[derive(Clone, Debug)]
pub struct OneParty {
    dim: Dim,
    target: usize,
    /// Pair facing the target receiver.
    e_label: BellLabel,
    /// Pair facing Alice.
    f_label: BellLabel,
    e: Option<[QuditId; 2]>,
    f: Option<[QuditId; 2]>,
    kept: Option<QuditId>,
    captured: Option<QuditId>,
    alice_side: Option<BellLabel>,
    state: EveState,
}

impl OneParty {
    pub fn new(dim: Dim, parties: usize, target: usize) -> Result<Self> {
        Self::with_labels(
            dim,
            parties,
            target,
            BellLabel::default(),
            BellLabel::default(),
        )
    }

    pub fn with_labels(
        dim: Dim,
        parties: usize,
        target: usize,
        e: BellLabel,
        f: BellLabel,
    ) -> Result<Self> {
        if target + 1 >= parties {
            return Err(Error::InvalidConfig(format!(
                "target receiver {target} does not exist among {parties} parties"
            )));
        }
        Ok(OneParty {
            dim,
            target,
            e_label: e.reduced(dim),
            f_label: f.reduced(dim),
            e: None,
            f: None,
            kept: None,
            captured: None,
            alice_side: None,
            state: EveState::default(),
        })
    }

    fn finish(&mut self, lab: &mut Lab<'_>, choices: Option<&[ReceiverOperation]>) -> Result<()> {
        let r = self
            .captured
            .ok_or_else(|| Error::InvalidConfig("nothing captured".into()))?;
        if choices.is_some_and(|c| c[self.target] == ReceiverOperation::Fourier) {
            lab.fourier(r, true)?;
        }
        let pair = [self.e.expect("prepared")[0], r];
        let out = lab.measure_bell(pair)?;
        self.state.record_bell(pair, out);
        Ok(())
    }
}

impl Adversary for OneParty {
    fn name(&self) -> &'static str {
        "one-party"
    }

    fn label_representable(&self, _protocol: Protocol) -> bool {
        false
    }

    fn prepare(&mut self, lab: &mut Lab<'_>, _cfg: &RoundConfig) -> Result<()> {
        self.e = Some(lab.bell(self.e_label)?);
        self.f = Some(lab.bell(self.f_label)?);
        self.state.bell_labels = vec![self.e_label, self.f_label];
        Ok(())
    }

    fn intercept(&mut self, _lab: &mut Lab<'_>, t: Transit) -> Result<QuditId> {
        let delivered = match (t.from, t.to) {
            (Party::Alice, Party::Receiver(i)) if i == self.target => {
                self.kept = Some(t.qudit);
                self.e.expect("prepared")[1]
            }
            (Party::Receiver(i), Party::Alice) if i == self.target => {
                self.captured = Some(t.qudit);
                self.f.expect("prepared")[1]
            }
            _ => return Ok(t.qudit),
        };
        Ok(self.state.intercepted(t, delivered))
    }

    fn legal_measurements_done(&mut self, lab: &mut Lab<'_>, cfg: &RoundConfig) -> Result<()> {
        let g = self
            .kept
            .ok_or_else(|| Error::InvalidConfig("nothing intercepted".into()))?;
        let pair = [self.f.expect("prepared")[0], g];
        let out = lab.measure_bell(pair)?;
        self.state.record_bell(pair, out);
        self.alice_side = Some(out);
        if cfg.protocol == Protocol::Original {
            self.finish(lab, None)?;
        }
        Ok(())
    }

    fn on_broadcast(&mut self, lab: &mut Lab<'_>, _cfg: &RoundConfig, b: &Broadcast) -> Result<()> {
        if let Broadcast::Choices(c) = b {
            self.state.choices = Some(c.clone());
            self.finish(lab, Some(c))?;
        }
        Ok(())
    }

    fn inferred_keys(&self, cfg: &RoundConfig, p: &GhzLabel) -> InferredKeys {
        let dim = self.dim;
        let Some(out) = self.alice_side else {
            return InferredKeys::default();
        };
        let conference_key = posing_receiver_key(dim, cfg, self.target, self.f_label, out, p);
        // other receivers' shares are unknown to her
        let share = dim.sub(self.f_label.u, out.u);
        InferredKeys {
            conference_key,
            qss_secret: reconstruct(dim, cfg, p, [share]),
        }
    }

    fn transcript(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("serializable")
    }
}

#[derive(Clone, Debug)]
pub struct TwoParty {
    dim: Dim,
    ghz_label: GhzLabel,
    labels: Vec<BellLabel>,
    ghz: Vec<QuditId>,
    pairs: Vec<[QuditId; 2]>,
    kept: Vec<Option<QuditId>>,
    captured: Vec<Option<QuditId>>,
    alice_side: Vec<BellLabel>,
    state: EveState,
}

impl TwoParty {
    pub fn new(dim: Dim, parties: usize) -> Self {
        let n = parties.saturating_sub(1);
        Self::with_labels(dim, GhzLabel::zero(parties), vec![BellLabel::default(); n])
    }

    pub fn with_labels(dim: Dim, ghz_label: GhzLabel, labels: Vec<BellLabel>) -> Self {
        let n = labels.len();
        TwoParty {
            dim,
            ghz_label: ghz_label.reduced(dim),
            labels: labels.iter().map(|l| l.reduced(dim)).collect(),
            ghz: Vec::new(),
            pairs: Vec::new(),
            kept: vec![None; n],
            captured: vec![None; n],
            alice_side: Vec::new(),
            state: EveState::default(),
        }
    }

    fn finish(&mut self, lab: &mut Lab<'_>, choices: Option<&[ReceiverOperation]>) -> Result<()> {
        let mut sites = vec![self.ghz[0]];
        for (i, r) in self.captured.iter().enumerate() {
            let r = r.ok_or_else(|| Error::InvalidConfig("nothing captured".into()))?;
            if choices.is_some_and(|c| c[i] == ReceiverOperation::Fourier) {
                lab.fourier(r, true)?;
            }
            sites.push(r);
        }
        let out = lab.measure_ghz(&sites)?;
        self.state.record_ghz(&sites, out);
        Ok(())
    }
}

impl Adversary for TwoParty {
    fn name(&self) -> &'static str {
        "two-party"
    }

    fn label_representable(&self, _protocol: Protocol) -> bool {
        false
    }

    fn prepare(&mut self, lab: &mut Lab<'_>, cfg: &RoundConfig) -> Result<()> {
        if self.labels.len() != cfg.receivers() || self.ghz_label.parties() != cfg.parties {
            return Err(Error::InvalidConfig(
                "adversary resources do not match the round".into(),
            ));
        }
        self.ghz = lab.ghz(&self.ghz_label)?;
        self.pairs = self
            .labels
            .iter()
            .map(|l| lab.bell(*l))
            .collect::<Result<_>>()?;
        self.state.bell_labels = self.labels.clone();
        self.state.ghz_label = Some(self.ghz_label.clone());
        Ok(())
    }

    fn intercept(&mut self, _lab: &mut Lab<'_>, t: Transit) -> Result<QuditId> {
        let delivered = match (t.from, t.to) {
            (Party::Alice, Party::Receiver(i)) => {
                self.kept[i] = Some(t.qudit);
                self.ghz[i + 1]
            }
            (Party::Receiver(i), Party::Alice) => {
                self.captured[i] = Some(t.qudit);
                self.pairs[i][1]
            }
            _ => t.qudit,
        };
        Ok(self.state.intercepted(t, delivered))
    }

    fn legal_measurements_done(&mut self, lab: &mut Lab<'_>, cfg: &RoundConfig) -> Result<()> {
        for i in 0..self.pairs.len() {
            let g =
                self.kept[i].ok_or_else(|| Error::InvalidConfig("nothing intercepted".into()))?;
            let pair = [self.pairs[i][0], g];
            let out = lab.measure_bell(pair)?;
            self.state.record_bell(pair, out);
            self.alice_side.push(out);
        }
        if cfg.protocol == Protocol::Original {
            self.finish(lab, None)?;
        }
        Ok(())
    }

    fn on_broadcast(&mut self, lab: &mut Lab<'_>, _cfg: &RoundConfig, b: &Broadcast) -> Result<()> {
        if let Broadcast::Choices(c) = b {
            self.state.choices = Some(c.clone());
            self.finish(lab, Some(c))?;
        }
        Ok(())
    }

    fn inferred_keys(&self, cfg: &RoundConfig, p: &GhzLabel) -> InferredKeys {
        let dim = self.dim;
        if self.alice_side.len() != cfg.receivers() {
            return InferredKeys::default();
        }
        let conference_key =
            posing_receiver_key(dim, cfg, 0, self.labels[0], self.alice_side[0], p);
        let shares = self
            .alice_side
            .iter()
            .zip(&self.labels)
            .map(|(o, e)| dim.sub(e.u, o.u));
        InferredKeys {
            conference_key,
            qss_secret: reconstruct(dim, cfg, p, shares),
        }
    }

    fn transcript(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("serializable")
    }
}
