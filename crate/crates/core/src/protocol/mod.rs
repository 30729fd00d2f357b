//! Both multiparty key distribution protocols as round-level state machines.
//!
//! Alice holds a Bell pair `(A1, A2)` and an `N`-qudit GHZ state
//! `(G0, ..., G_{N-1})`; receiver `i` holds a Bell pair `(R_i1, R_i2)`.
//! Every qudit that crosses a channel goes through [`Adversary::intercept`],
//! and every public broadcast through [`Adversary::on_broadcast`].
//!
//! Key extraction, with `P` the public announcement `(P1; P2, ..., PN)`:
//!
//! * Alice, from her outcome `(x, y)`: secret `k = g1 - x`, key `l = y - a2`.
//! * Receiver `i`, from its outcome `(x, y)` and initial label `(r1, r2)`:
//!   share `m1 = r1 - x`, `m2 = P_{i+2} - r2`, key `g_{i+2} - y - m2`.
//! * Reconstruction of the secret: `P1 - a1 - sum(m1)`.

mod lab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lab::{Lab, OracleBackend, QuantumBackend, VectorBackend};

use crate::basis::{BellLabel, GhzLabel};
use crate::error::{Error, Result};
use crate::qudit::{Dim, QuditId};
use crate::sampler::{round_sampler, OutcomeSampler};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Original,
    Modified,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Protocol::Original => "original",
            Protocol::Modified => "modified",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Protocol::Original),
            "modified" => Ok(Protocol::Modified),
            _ => Err(Error::InvalidConfig(format!("unknown protocol '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Vector,
    Oracle,
    /// The oracle whenever the whole round is label-representable.
    #[default]
    Auto,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Engine::Vector => "vector",
            Engine::Oracle => "oracle",
            Engine::Auto => "auto",
        })
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vector" => Ok(Engine::Vector),
            "oracle" => Ok(Engine::Oracle),
            "auto" => Ok(Engine::Auto),
            _ => Err(Error::InvalidConfig(format!("unknown engine '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialLabels {
    pub alice_bell: BellLabel,
    pub alice_ghz: GhzLabel,
    pub receivers: Vec<BellLabel>,
}

impl InitialLabels {
    pub fn zero(parties: usize) -> Self {
        InitialLabels {
            alice_bell: BellLabel::default(),
            alice_ghz: GhzLabel::zero(parties),
            receivers: vec![BellLabel::default(); parties.saturating_sub(1)],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alice_bell == BellLabel::default()
            && self.alice_ghz.phase == 0
            && self.alice_ghz.shifts.iter().all(|&s| s == 0)
            && self.receivers.iter().all(|r| *r == BellLabel::default())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub d: Dim,
    /// Alice plus the receivers.
    pub parties: usize,
    pub protocol: Protocol,
    pub initial_labels: InitialLabels,
    /// Master seed; the round draws from stream `(seed, round)`.
    pub seed: u64,
    pub round: u64,
}

impl RoundConfig {
    pub fn new(d: usize, parties: usize, protocol: Protocol) -> Result<Self> {
        let cfg = RoundConfig {
            d: Dim::new(d)?,
            parties,
            protocol,
            initial_labels: InitialLabels::zero(parties),
            seed: 0,
            round: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_round(mut self, round: u64) -> Self {
        self.round = round;
        self
    }

    pub fn with_labels(mut self, labels: InitialLabels) -> Self {
        self.initial_labels = labels;
        self
    }

    pub fn receivers(&self) -> usize {
        self.parties - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.parties < 3 {
            return Err(Error::InvalidConfig(format!(
                "need at least 3 parties, got {}",
                self.parties
            )));
        }
        let init = &self.initial_labels;
        if init.alice_ghz.parties() != self.parties || init.receivers.len() != self.receivers() {
            return Err(Error::InvalidConfig(format!(
                "initial labels do not describe {} parties",
                self.parties
            )));
        }
        let d = self.d.get();
        let bells = std::iter::once(&init.alice_bell).chain(&init.receivers);
        let in_range = bells.into_iter().all(|b| b.u < d && b.v < d)
            && init.alice_ghz.phase < d
            && init.alice_ghz.shifts.iter().all(|&s| s < d);
        if !in_range {
            return Err(Error::InvalidConfig(format!(
                "initial labels must lie in 0..{d}"
            )));
        }
        if self.protocol == Protocol::Modified && !init.is_zero() {
            return Err(Error::InvalidConfig(
                "the modified protocol starts from all-zero labels".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverOperation {
    Identity,
    Fourier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Receiver(usize),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => f.write_str("alice"),
            Party::Receiver(i) => write!(f, "receiver {i}"),
        }
    }
}

/// A qudit in flight on a quantum channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transit {
    pub qudit: QuditId,
    pub from: Party,
    pub to: Party,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Broadcast {
    /// Receivers' operation choices, in receiver order.
    Choices(Vec<ReceiverOperation>),
    /// Alice's final GHZ outcome.
    Announcement(GhzLabel),
}

/// Eve's best guess of the round's secrets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferredKeys {
    pub conference_key: usize,
    pub qss_secret: usize,
}

/// An eavesdropper. Implementations only ever touch the qudits handed to
/// them in transit or prepared by themselves, and the public broadcasts.
pub trait Adversary {
    fn name(&self) -> &'static str;

    /// Whether every operation of this adversary on `protocol` stays inside
    /// the label calculus.
    fn label_representable(&self, protocol: Protocol) -> bool;

    fn prepare(&mut self, _lab: &mut Lab<'_>, _cfg: &RoundConfig) -> Result<()> {
        Ok(())
    }

    /// Return the qudit that actually arrives at `transit.to`.
    fn intercept(&mut self, _lab: &mut Lab<'_>, transit: Transit) -> Result<QuditId> {
        Ok(transit.qudit)
    }

    /// Called once every legal Bell measurement has been made and before
    /// any public broadcast.
    fn legal_measurements_done(&mut self, _lab: &mut Lab<'_>, _cfg: &RoundConfig) -> Result<()> {
        Ok(())
    }

    fn on_broadcast(
        &mut self,
        _lab: &mut Lab<'_>,
        _cfg: &RoundConfig,
        _broadcast: &Broadcast,
    ) -> Result<()> {
        Ok(())
    }

    fn inferred_keys(&self, cfg: &RoundConfig, announcement: &GhzLabel) -> InferredKeys;

    fn transcript(&self) -> serde_json::Value;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keys {
    /// Alice's key first, then each receiver's.
    pub conference_key: Vec<usize>,
    pub qss_secret: usize,
    pub qss_shares: Vec<usize>,
    pub qss_reconstruction: usize,
}

impl Keys {
    pub fn conference_agrees(&self) -> bool {
        self.conference_key.windows(2).all(|w| w[0] == w[1])
    }

    pub fn secret_agrees(&self) -> bool {
        self.qss_reconstruction == self.qss_secret
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    ErrorDetected,
}

/// What the parties compare on a testing round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckScope {
    #[default]
    Both,
    Conference,
    Secret,
}

impl fmt::Display for CheckScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            CheckScope::Both => "both",
            CheckScope::Conference => "conference",
            CheckScope::Secret => "secret",
        })
    }
}

impl FromStr for CheckScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(CheckScope::Both),
            "conference" => Ok(CheckScope::Conference),
            "secret" => Ok(CheckScope::Secret),
            _ => Err(Error::InvalidConfig(format!("unknown check scope '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryRecord {
    pub name: String,
    pub transcript: serde_json::Value,
    pub inferred: InferredKeys,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub config: RoundConfig,
    pub alice_bell: BellLabel,
    pub receiver_bell: Vec<BellLabel>,
    pub announcement: GhzLabel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub operations: Option<Vec<ReceiverOperation>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adversary: Option<AdversaryRecord>,
    pub keys: Keys,
    pub verdict: Verdict,
}

impl RoundRecord {
    /// The public announcement is the only label every party and the
    /// adversary get to see.
    pub fn public_view(&self) -> &GhzLabel {
        &self.announcement
    }
}

pub fn extract_keys(
    cfg: &RoundConfig,
    alice_bell: BellLabel,
    receiver_bell: &[BellLabel],
    announcement: &GhzLabel,
) -> Result<Keys> {
    let dim = cfg.d;
    let init = &cfg.initial_labels;
    if announcement.parties() != cfg.parties || receiver_bell.len() != cfg.receivers() {
        return Err(Error::InvalidConfig(
            "round record does not match its configuration".into(),
        ));
    }
    let secret = dim.sub(init.alice_ghz.phase, alice_bell.u);
    let mut conference_key = vec![dim.sub(alice_bell.v, init.alice_bell.v)];
    let mut shares = Vec::with_capacity(receiver_bell.len());
    for (i, out) in receiver_bell.iter().enumerate() {
        let own = init.receivers[i];
        let m1 = dim.sub(own.u, out.u);
        let m2 = dim.sub(announcement.shifts[i], own.v);
        conference_key.push(dim.sub(dim.sub(init.alice_ghz.shifts[i], out.v), m2));
        shares.push(m1);
    }
    let reconstruction = shares
        .iter()
        .fold(dim.sub(announcement.phase, init.alice_bell.u), |acc, &m| {
            dim.sub(acc, m)
        });
    Ok(Keys {
        conference_key,
        qss_secret: secret,
        qss_shares: shares,
        qss_reconstruction: reconstruction,
    })
}

pub fn verify_testing_key(keys: &Keys, scope: CheckScope) -> Verdict {
    let ok = match scope {
        CheckScope::Both => keys.conference_agrees() && keys.secret_agrees(),
        CheckScope::Conference => keys.conference_agrees(),
        CheckScope::Secret => keys.secret_agrees(),
    };
    if ok {
        Verdict::Consistent
    } else {
        Verdict::ErrorDetected
    }
}

/// Pick the concrete engine for a round.
pub fn resolve_engine(
    engine: Engine,
    protocol: Protocol,
    adversary: Option<&dyn Adversary>,
) -> Result<Engine> {
    let representable = adversary.is_none_or(|a| a.label_representable(protocol));
    match engine {
        Engine::Auto if representable => Ok(Engine::Oracle),
        Engine::Auto => Ok(Engine::Vector),
        Engine::Oracle if !representable => Err(Error::InvalidConfig(format!(
            "the {} adversary on the {protocol} protocol needs the vector engine",
            adversary.map_or("", |a| a.name())
        ))),
        e => Ok(e),
    }
}

fn backend(engine: Engine, dim: Dim) -> Box<dyn QuantumBackend> {
    match engine {
        Engine::Oracle => Box::new(OracleBackend::new(dim)),
        _ => Box::new(VectorBackend::new(dim)),
    }
}

fn reborrow<'a>(adversary: &'a mut Option<&mut dyn Adversary>) -> Option<&'a mut dyn Adversary> {
    match adversary {
        Some(a) => Some(&mut **a),
        None => None,
    }
}

fn transmit(
    lab: &mut Lab<'_>,
    adversary: &mut Option<&mut dyn Adversary>,
    transit: Transit,
) -> Result<QuditId> {
    match adversary {
        Some(a) => a.intercept(lab, transit),
        None => Ok(transit.qudit),
    }
}

struct Qudits {
    alice_bell: [QuditId; 2],
    ghz: Vec<QuditId>,
    receivers: Vec<[QuditId; 2]>,
}

fn prepare(
    lab: &mut Lab<'_>,
    cfg: &RoundConfig,
    adversary: &mut Option<&mut dyn Adversary>,
) -> Result<Qudits> {
    let init = &cfg.initial_labels;
    let alice_bell = lab.bell(init.alice_bell)?;
    let ghz = lab.ghz(&init.alice_ghz)?;
    let receivers = init
        .receivers
        .iter()
        .map(|r| lab.bell(*r))
        .collect::<Result<Vec<_>>>()?;
    if let Some(a) = adversary {
        a.prepare(lab, cfg)?;
    }
    Ok(Qudits {
        alice_bell,
        ghz,
        receivers,
    })
}

struct Outcomes {
    alice_bell: BellLabel,
    receiver_bell: Vec<BellLabel>,
    announcement: GhzLabel,
    operations: Option<Vec<ReceiverOperation>>,
}

fn original_steps(
    lab: &mut Lab<'_>,
    cfg: &RoundConfig,
    mut adversary: Option<&mut dyn Adversary>,
) -> Result<Outcomes> {
    let q = prepare(lab, cfg, &mut adversary)?;
    let n = cfg.receivers();
    let alice_bell = lab.measure_bell([q.ghz[0], q.alice_bell[1]])?;
    let mut arrived = Vec::with_capacity(n);
    for i in 0..n {
        let t = Transit {
            qudit: q.ghz[i + 1],
            from: Party::Alice,
            to: Party::Receiver(i),
        };
        arrived.push(transmit(lab, &mut adversary, t)?);
    }
    let mut receiver_bell = Vec::with_capacity(n);
    let mut returned = vec![q.alice_bell[0]];
    for i in 0..n {
        receiver_bell.push(lab.measure_bell([q.receivers[i][0], arrived[i]])?);
        let t = Transit {
            qudit: q.receivers[i][1],
            from: Party::Receiver(i),
            to: Party::Alice,
        };
        returned.push(transmit(lab, &mut adversary, t)?);
    }
    if let Some(a) = reborrow(&mut adversary) {
        a.legal_measurements_done(lab, cfg)?;
    }
    let announcement = lab.measure_ghz(&returned)?;
    if let Some(a) = reborrow(&mut adversary) {
        a.on_broadcast(lab, cfg, &Broadcast::Announcement(announcement.clone()))?;
    }
    Ok(Outcomes {
        alice_bell,
        receiver_bell,
        announcement,
        operations: None,
    })
}

fn modified_steps(
    lab: &mut Lab<'_>,
    cfg: &RoundConfig,
    mut adversary: Option<&mut dyn Adversary>,
) -> Result<Outcomes> {
    let q = prepare(lab, cfg, &mut adversary)?;
    let n = cfg.receivers();
    let mut arrived = Vec::with_capacity(n);
    for i in 0..n {
        let t = Transit {
            qudit: q.ghz[i + 1],
            from: Party::Alice,
            to: Party::Receiver(i),
        };
        arrived.push(transmit(lab, &mut adversary, t)?);
    }
    let mut returned = vec![q.alice_bell[0]];
    for i in 0..n {
        let t = Transit {
            qudit: q.receivers[i][1],
            from: Party::Receiver(i),
            to: Party::Alice,
        };
        returned.push(transmit(lab, &mut adversary, t)?);
    }
    let mut operations = Vec::with_capacity(n);
    for i in 0..n {
        let op = if lab.pick(&[0.5, 0.5]) == 1 {
            ReceiverOperation::Fourier
        } else {
            ReceiverOperation::Identity
        };
        if op == ReceiverOperation::Fourier {
            lab.fourier(q.receivers[i][0], false)?;
        }
        operations.push(op);
    }
    let alice_bell = lab.measure_bell([q.ghz[0], q.alice_bell[1]])?;
    let receiver_bell = (0..n)
        .map(|i| lab.measure_bell([q.receivers[i][0], arrived[i]]))
        .collect::<Result<Vec<_>>>()?;
    if let Some(a) = reborrow(&mut adversary) {
        a.legal_measurements_done(lab, cfg)?;
        a.on_broadcast(lab, cfg, &Broadcast::Choices(operations.clone()))?;
    }
    for (i, op) in operations.iter().enumerate() {
        if *op == ReceiverOperation::Fourier {
            lab.fourier(returned[i + 1], true)?;
        }
    }
    let announcement = lab.measure_ghz(&returned)?;
    if let Some(a) = reborrow(&mut adversary) {
        a.on_broadcast(lab, cfg, &Broadcast::Announcement(announcement.clone()))?;
    }
    Ok(Outcomes {
        alice_bell,
        receiver_bell,
        announcement,
        operations: Some(operations),
    })
}

/// Run one round of `cfg.protocol` with outcomes drawn from `sampler`.
pub fn run_round_with(
    cfg: &RoundConfig,
    mut adversary: Option<&mut dyn Adversary>,
    engine: Engine,
    scope: CheckScope,
    sampler: &mut dyn OutcomeSampler,
) -> Result<RoundRecord> {
    cfg.validate()?;
    let engine = resolve_engine(engine, cfg.protocol, adversary.as_deref())?;
    let mut lab = Lab::new(backend(engine, cfg.d), sampler);
    let out = match cfg.protocol {
        Protocol::Original => original_steps(&mut lab, cfg, reborrow(&mut adversary))?,
        Protocol::Modified => modified_steps(&mut lab, cfg, reborrow(&mut adversary))?,
    };
    let keys = extract_keys(cfg, out.alice_bell, &out.receiver_bell, &out.announcement)?;
    let verdict = verify_testing_key(&keys, scope);
    let adversary = adversary.map(|a| AdversaryRecord {
        name: a.name().to_string(),
        transcript: a.transcript(),
        inferred: a.inferred_keys(cfg, &out.announcement),
    });
    Ok(RoundRecord {
        config: cfg.clone(),
        alice_bell: out.alice_bell,
        receiver_bell: out.receiver_bell,
        announcement: out.announcement,
        operations: out.operations,
        adversary,
        keys,
        verdict,
    })
}

/// Run one round drawing from the round's own seeded stream.
pub fn run_round(
    cfg: &RoundConfig,
    adversary: Option<&mut dyn Adversary>,
    engine: Engine,
    scope: CheckScope,
) -> Result<RoundRecord> {
    let mut sampler = round_sampler(cfg.seed, cfg.round);
    run_round_with(cfg, adversary, engine, scope, &mut sampler)
}

pub fn run_original_round(
    cfg: &RoundConfig,
    adversary: Option<&mut dyn Adversary>,
    engine: Engine,
) -> Result<RoundRecord> {
    if cfg.protocol != Protocol::Original {
        return Err(Error::InvalidConfig(
            "configuration is not for the original protocol".into(),
        ));
    }
    run_round(cfg, adversary, engine, CheckScope::Both)
}

pub fn run_modified_round(
    cfg: &RoundConfig,
    adversary: Option<&mut dyn Adversary>,
    engine: Engine,
) -> Result<RoundRecord> {
    if cfg.protocol != Protocol::Modified {
        return Err(Error::InvalidConfig(
            "configuration is not for the modified protocol".into(),
        ));
    }
    run_round(cfg, adversary, engine, CheckScope::Both)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::PathSampler;

    fn cfg(d: usize, n: usize, p: Protocol) -> RoundConfig {
        RoundConfig::new(d, n, p).unwrap()
    }

    #[test]
    fn worked_original_example() {
        // Alice (1,1), receivers (0,1) and (1,0), announcement (0; 0, 1)
        let c = cfg(2, 3, Protocol::Original);
        let keys = extract_keys(
            &c,
            BellLabel::new(1, 1),
            &[BellLabel::new(0, 1), BellLabel::new(1, 0)],
            &GhzLabel::new(0, vec![0, 1]),
        )
        .unwrap();
        assert_eq!(keys.conference_key, vec![1, 1, 1]);
        assert_eq!(keys.qss_secret, 1);
        assert_eq!(keys.qss_shares, vec![0, 1]);
        assert_eq!(keys.qss_reconstruction, 1);
        assert_eq!(
            verify_testing_key(&keys, CheckScope::Both),
            Verdict::Consistent
        );
    }

    #[test]
    fn all_zero_outcomes() {
        let c = cfg(3, 3, Protocol::Original);
        let z = BellLabel::default();
        let keys = extract_keys(&c, z, &[z, z], &GhzLabel::zero(3)).unwrap();
        assert_eq!(keys.conference_key, vec![0, 0, 0]);
        assert_eq!(keys.qss_secret, 0);
    }

    #[test]
    fn scopes() {
        let keys = Keys {
            conference_key: vec![1, 1, 0],
            qss_secret: 2,
            qss_shares: vec![],
            qss_reconstruction: 2,
        };
        assert_eq!(
            verify_testing_key(&keys, CheckScope::Both),
            Verdict::ErrorDetected
        );
        assert_eq!(
            verify_testing_key(&keys, CheckScope::Conference),
            Verdict::ErrorDetected
        );
        assert_eq!(
            verify_testing_key(&keys, CheckScope::Secret),
            Verdict::Consistent
        );
    }

    #[test]
    fn config_validation() {
        assert!(RoundConfig::new(2, 2, Protocol::Original).is_err());
        assert!(RoundConfig::new(1, 3, Protocol::Original).is_err());
        let mut labels = InitialLabels::zero(3);
        labels.receivers[1] = BellLabel::new(1, 0);
        let c = cfg(2, 3, Protocol::Modified).with_labels(labels.clone());
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        assert!(cfg(2, 3, Protocol::Original)
            .with_labels(labels)
            .validate()
            .is_ok());
        let mut bad = InitialLabels::zero(3);
        bad.alice_bell = BellLabel::new(2, 0);
        assert!(cfg(2, 3, Protocol::Original)
            .with_labels(bad)
            .validate()
            .is_err());
    }

    #[test]
    fn honest_rounds_are_consistent_on_every_branch() {
        for protocol in [Protocol::Original, Protocol::Modified] {
            for engine in [Engine::Oracle, Engine::Vector] {
                let c = cfg(2, 3, protocol);
                let mut stack = vec![Vec::new()];
                let mut leaves = 0;
                while let Some(prefix) = stack.pop() {
                    let mut s = PathSampler::new(prefix.clone());
                    let rec = run_round_with(&c, None, engine, CheckScope::Both, &mut s).unwrap();
                    assert_eq!(
                        rec.verdict,
                        Verdict::Consistent,
                        "{protocol} {engine} {prefix:?}"
                    );
                    leaves += 1;
                    let widths = s.widths();
                    for j in prefix.len()..widths.len() {
                        for b in 1..widths[j] {
                            let mut next = s.taken()[..j].to_vec();
                            next.push(b);
                            stack.push(next);
                        }
                    }
                }
                let expected = if protocol == Protocol::Original {
                    64
                } else {
                    256
                };
                assert_eq!(leaves, expected, "{protocol} {engine}");
            }
        }
    }

    #[test]
    fn engines_agree_on_honest_rounds() {
        for protocol in [Protocol::Original, Protocol::Modified] {
            for round in 0..20 {
                let c = cfg(3, 4, protocol).with_seed(11).with_round(round);
                let a = run_round(&c, None, Engine::Oracle, CheckScope::Both).unwrap();
                let b = run_round(&c, None, Engine::Vector, CheckScope::Both).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn identity_choices_match_original_structure() {
        // with both coins on identity the modified round is an original round
        for branch in 0..16 {
            let c = cfg(2, 3, Protocol::Modified);
            let mut s = PathSampler::new(vec![0, 0, branch / 4, branch % 4]);
            let m = run_round_with(&c, None, Engine::Oracle, CheckScope::Both, &mut s).unwrap();
            assert_eq!(m.operations, Some(vec![ReceiverOperation::Identity; 2]));
            let mut s = PathSampler::new(vec![branch / 4, branch % 4]);
            let o = run_round_with(
                &cfg(2, 3, Protocol::Original),
                None,
                Engine::Oracle,
                CheckScope::Both,
                &mut s,
            )
            .unwrap();
            assert_eq!(m.alice_bell, o.alice_bell);
            assert_eq!(m.receiver_bell, o.receiver_bell);
            assert_eq!(m.announcement, o.announcement);
            assert_eq!(m.keys, o.keys);
        }
    }

    #[test]
    fn record_json_shape() {
        let rec = run_round(
            &cfg(2, 3, Protocol::Modified).with_seed(5),
            None,
            Engine::Auto,
            CheckScope::Both,
        )
        .unwrap();
        let v = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["config"]["protocol"], "modified");
        assert_eq!(v["verdict"], "consistent");
        assert!(v["operations"].is_array());
        assert!(v.get("adversary").is_none());
        let back: RoundRecord = serde_json::from_value(v).unwrap();
        assert_eq!(back, rec);
    }
}
