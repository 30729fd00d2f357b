//! Closed-form detection bounds, Monte Carlo estimates and exact branch
//! enumeration.

use std::sync::atomic::{AtomicUsize, Ordering};

use num::{BigInt, BigRational, One, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::AttackKind;
use crate::error::{Error, Result};
use crate::protocol::{
    run_round, run_round_with, CheckScope, Engine, Protocol, RoundConfig, RoundRecord, Verdict,
};
use crate::qudit::Dim;
use crate::sampler::{round_stream, PathSampler};

/// Default master seed for reproducible runs.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;

/// Rounds simulated per parallel batch.
const BATCH: usize = 8192;

/// Salt mixed into the seed of the stream that picks testing rounds.
const TESTING_SALT: u64 = 0x7E57_7E57_7E57_7E57;

/// One-sided acceptance slack, in standard deviations.
pub const SLACK_SIGMAS: f64 = 3.0;

const Z95: f64 = 1.959_963_984_540_054;

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn check_params(d: usize, parties: usize) -> Result<()> {
    Dim::new(d)?;
    if parties < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 parties, got {parties}"
        )));
    }
    Ok(())
}

/// `1 - ((d + 1) / 2d)^(N - 1)`.
pub fn bound_zlg(d: usize, parties: usize) -> Result<BigRational> {
    check_params(d, parties)?;
    let base = ratio(d as u64 + 1, 2 * d as u64);
    Ok(BigRational::one() - num::pow(base, parties - 1))
}

/// `1 - (d + 1) / 2d^2`.
pub fn bound_one_party(d: usize) -> Result<BigRational> {
    Dim::new(d)?;
    let d = d as u64;
    Ok(BigRational::one() - ratio(d + 1, 2 * d * d))
}

/// `1 - [d (d + 1)^(N - 1) - d^N + 1] / (2^(N - 1) d^N)`.
pub fn bound_two_party(d: usize, parties: usize) -> Result<BigRational> {
    check_params(d, parties)?;
    let db = BigInt::from(d);
    let n = parties;
    let num = &db * num::pow(BigInt::from(d + 1), n - 1) - num::pow(db.clone(), n) + BigInt::one();
    let den = num::pow(BigInt::from(2), n - 1) * num::pow(db, n);
    Ok(BigRational::one() - BigRational::new(num, den))
}

/// The three-party special case `1 - (2d^2 + d + 1) / 4d^3`.
pub fn bound_two_party_three(d: usize) -> Result<BigRational> {
    Dim::new(d)?;
    let d = d as u64;
    Ok(BigRational::one() - ratio(2 * d * d + d + 1, 4 * d * d * d))
}

/// The lower bound that applies to `attack` on `protocol`, if any.
pub fn bound_for(
    attack: AttackKind,
    protocol: Protocol,
    d: usize,
    parties: usize,
) -> Result<Option<BigRational>> {
    if protocol == Protocol::Original {
        return Ok(None);
    }
    Ok(match attack {
        AttackKind::None => None,
        AttackKind::Zlg => Some(bound_zlg(d, parties)?),
        AttackKind::OneParty => Some(bound_one_party(d)?),
        AttackKind::TwoParty => Some(bound_two_party(d, parties)?),
    })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub d: usize,
    pub parties: usize,
    pub protocol: Protocol,
    pub attack: AttackKind,
    /// Receiver attacked by the one-party adversary.
    pub target: usize,
    pub engine: Engine,
    pub check: CheckScope,
    pub rounds: u64,
    pub seed: u64,
    /// Share of rounds sacrificed as testing rounds; 1 tests every round.
    pub test_fraction: f64,
}

impl Experiment {
    pub fn new(d: usize, parties: usize, protocol: Protocol, attack: AttackKind) -> Self {
        Experiment {
            d,
            parties,
            protocol,
            attack,
            target: 0,
            engine: Engine::Auto,
            check: CheckScope::Both,
            rounds: 10_000,
            seed: DEFAULT_SEED,
            test_fraction: 1.0,
        }
    }

    pub fn rounds(mut self, rounds: u64) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn check(mut self, check: CheckScope) -> Self {
        self.check = check;
        self
    }

    pub fn target(mut self, target: usize) -> Self {
        self.target = target;
        self
    }

    pub fn test_fraction(mut self, f: f64) -> Self {
        self.test_fraction = f;
        self
    }

    pub fn round_config(&self, round: u64) -> Result<RoundConfig> {
        Ok(RoundConfig::new(self.d, self.parties, self.protocol)?
            .with_seed(self.seed)
            .with_round(round))
    }

    /// The engine the rounds will actually use.
    pub fn resolved_engine(&self) -> Result<Engine> {
        let representable = self.attack.label_representable(self.protocol);
        match self.engine {
            Engine::Auto if representable => Ok(Engine::Oracle),
            Engine::Auto => Ok(Engine::Vector),
            Engine::Oracle if !representable => Err(Error::InvalidConfig(format!(
                "the {} attack on the {} protocol needs the vector engine",
                self.attack, self.protocol
            ))),
            e => Ok(e),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.round_config(0)?;
        self.resolved_engine()?;
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test fraction {} is outside (0, 1]",
                self.test_fraction
            )));
        }
        if self.attack == AttackKind::OneParty && self.target + 1 >= self.parties {
            return Err(Error::InvalidConfig(format!(
                "target receiver {} does not exist",
                self.target
            )));
        }
        Ok(())
    }

    fn is_testing_round(&self, round: u64) -> bool {
        self.test_fraction >= 1.0
            || round_stream(self.seed ^ TESTING_SALT, round).gen::<f64>() < self.test_fraction
    }

    fn run_one(&self, round: u64, engine: Engine) -> Result<RoundRecord> {
        let cfg = self.round_config(round)?;
        let mut adversary = self.attack.build(cfg.d, self.parties, self.target)?;
        run_round(&cfg, Some(adversary.as_mut()), engine, self.check)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub exact: String,
    pub value: f64,
}

impl From<&BigRational> for BoundValue {
    fn from(r: &BigRational) -> Self {
        BoundValue {
            exact: r.to_string(),
            value: to_f64(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub config: Experiment,
    /// Rounds simulated.
    pub rounds: u64,
    /// Rounds used for testing.
    pub tested: u64,
    pub detections: u64,
    pub rate: f64,
    pub ci95: [f64; 2],
    /// Binomial standard deviation at the bound, or at the measured rate
    /// when no bound applies.
    pub sigma: f64,
    pub slack: f64,
    pub bound: Option<BoundValue>,
    pub bound_satisfied: Option<bool>,
    /// Share of rounds where the adversary's conference key guess was right.
    pub eve_accuracy: f64,
    pub eve_secret_accuracy: f64,
    /// Same, restricted to testing rounds that passed verification.
    pub eve_accuracy_undetected: Option<f64>,
    pub exact_rate: Option<f64>,
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "d,parties,protocol,attack,engine,check,seed,rounds,tested,detections,rate,ci95_lo,ci95_hi,sigma,bound,bound_value,bound_satisfied,eve_accuracy,eve_secret_accuracy,exact_rate";

    pub fn csv_row(&self) -> String {
        let c = &self.config;
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            c.d.to_string(),
            c.parties.to_string(),
            c.protocol.to_string(),
            c.attack.to_string(),
            c.engine.to_string(),
            c.check.to_string(),
            c.seed.to_string(),
            self.rounds.to_string(),
            self.tested.to_string(),
            self.detections.to_string(),
            self.rate.to_string(),
            self.ci95[0].to_string(),
            self.ci95[1].to_string(),
            self.sigma.to_string(),
            opt(self.bound.as_ref().map(|b| b.exact.clone())),
            opt(self.bound.as_ref().map(|b| b.value.to_string())),
            opt(self.bound_satisfied.map(|b| b.to_string())),
            self.eve_accuracy.to_string(),
            self.eve_secret_accuracy.to_string(),
            opt(self.exact_rate.map(|r| r.to_string())),
        ]
        .join(",")
    }

    /// Re-evaluate the bound check against an exact detection probability.
    pub fn with_exact(mut self, exact: f64) -> Self {
        self.exact_rate = Some(exact);
        if let Some(b) = &self.bound {
            self.bound_satisfied = Some(exact >= b.value - 1e-9);
        }
        self
    }
}

#[derive(Default)]
struct Tally {
    tested: u64,
    detections: u64,
    key_ok: u64,
    secret_ok: u64,
    undetected: u64,
    undetected_key_ok: u64,
}

/// Monte Carlo detection rate. Deterministic in `exp.seed` whatever the
/// size of the rayon pool it runs in.
pub fn estimate_detection(exp: &Experiment) -> Result<DetectionReport> {
    estimate_detection_with(exp, &mut |_| Ok(()))
}

/// As [`estimate_detection`], handing every round record to `sink` in
/// round order.
pub fn estimate_detection_with(
    exp: &Experiment,
    sink: &mut dyn FnMut(&RoundRecord) -> Result<()>,
) -> Result<DetectionReport> {
    exp.validate()?;
    let engine = exp.resolved_engine()?;
    let mut tally = Tally::default();
    let mut start = 0u64;
    while start < exp.rounds {
        let end = (start + BATCH as u64).min(exp.rounds);
        let batch: Vec<(bool, RoundRecord)> = (start..end)
            .into_par_iter()
            .map(|r| Ok((exp.is_testing_round(r), exp.run_one(r, engine)?)))
            .collect::<Result<_>>()?;
        for (testing, rec) in &batch {
            let inferred = rec
                .adversary
                .as_ref()
                .map(|a| a.inferred)
                .unwrap_or_default();
            let key_ok = inferred.conference_key == rec.keys.conference_key[0];
            tally.key_ok += key_ok as u64;
            tally.secret_ok += (inferred.qss_secret == rec.keys.qss_secret) as u64;
            if *testing {
                tally.tested += 1;
                if rec.verdict == Verdict::ErrorDetected {
                    tally.detections += 1;
                } else {
                    tally.undetected += 1;
                    tally.undetected_key_ok += key_ok as u64;
                }
            }
            sink(rec)?;
        }
        start = end;
    }

    let n = tally.tested;
    let rate = if n == 0 {
        0.0
    } else {
        tally.detections as f64 / n as f64
    };
    let (lo, hi) = wilson_interval(tally.detections, n);
    let bound = bound_for(exp.attack, exp.protocol, exp.d, exp.parties)?;
    let reference = bound.as_ref().map_or(rate, to_f64);
    let sigma = if n == 0 {
        0.0
    } else {
        (reference * (1.0 - reference) / n as f64).sqrt()
    };
    let slack = SLACK_SIGMAS * sigma;
    let bound_satisfied = bound.as_ref().map(|b| rate >= to_f64(b) - slack);
    let mut config = exp.clone();
    config.engine = engine;
    Ok(DetectionReport {
        config,
        rounds: exp.rounds,
        tested: n,
        detections: tally.detections,
        rate,
        ci95: [lo, hi],
        sigma,
        slack,
        bound: bound.as_ref().map(BoundValue::from),
        bound_satisfied,
        eve_accuracy: tally.key_ok as f64 / exp.rounds as f64,
        eve_secret_accuracy: tally.secret_ok as f64 / exp.rounds as f64,
        eve_accuracy_undetected: (tally.undetected > 0)
            .then(|| tally.undetected_key_ok as f64 / tally.undetected as f64),
        exact_rate: None,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExactDetection {
    /// Probability that verification fails.
    pub detection: f64,
    /// Probability that the adversary's conference key guess is right.
    pub eve_key: f64,
    pub eve_secret: f64,
    /// Total probability of all branches; 1 up to rounding.
    pub mass: f64,
    pub leaves: usize,
}

impl ExactDetection {
    fn add(mut self, o: ExactDetection) -> Self {
        self.detection += o.detection;
        self.eve_key += o.eve_key;
        self.eve_secret += o.eve_secret;
        self.mass += o.mass;
        self.leaves += o.leaves;
        self
    }
}

/// Default cap on enumerated branches.
pub const DEFAULT_LEAF_CAP: usize = 1 << 21;

/// Sum the exact probability of detection over every branch of a round:
/// coin flips and all measurement outcomes with nonzero probability.
pub fn exact_detection(exp: &Experiment, leaf_cap: usize) -> Result<ExactDetection> {
    exp.validate()?;
    let engine = exp.resolved_engine()?;
    let cfg = exp.round_config(0)?;
    let leaves = AtomicUsize::new(0);
    explore(exp, &cfg, engine, Vec::new(), &leaves, leaf_cap)
}

fn explore(
    exp: &Experiment,
    cfg: &RoundConfig,
    engine: Engine,
    prefix: Vec<usize>,
    leaves: &AtomicUsize,
    cap: usize,
) -> Result<ExactDetection> {
    if leaves.fetch_add(1, Ordering::Relaxed) >= cap {
        return Err(Error::TreeTooLarge(cap));
    }
    let mut sampler = PathSampler::new(prefix.clone());
    let mut adversary = exp.attack.build(cfg.d, exp.parties, exp.target)?;
    let rec = run_round_with(
        cfg,
        Some(adversary.as_mut()),
        engine,
        exp.check,
        &mut sampler,
    )?;
    let p = sampler.probability();
    let inferred = rec
        .adversary
        .as_ref()
        .map(|a| a.inferred)
        .unwrap_or_default();
    let own = ExactDetection {
        detection: if rec.verdict == Verdict::ErrorDetected {
            p
        } else {
            0.0
        },
        eve_key: if inferred.conference_key == rec.keys.conference_key[0] {
            p
        } else {
            0.0
        },
        eve_secret: if inferred.qss_secret == rec.keys.qss_secret {
            p
        } else {
            0.0
        },
        mass: p,
        leaves: 1,
    };
    let widths = sampler.widths();
    let taken = sampler.taken();
    let children: Vec<Vec<usize>> = (prefix.len()..widths.len())
        .flat_map(|j| {
            (1..widths[j]).map(move |b| {
                let mut next = taken[..j].to_vec();
                next.push(b);
                next
            })
        })
        .collect();
    let parts: Vec<ExactDetection> = children
        .into_par_iter()
        .map(|c| explore(exp, cfg, engine, c, leaves, cap))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(own, ExactDetection::add))
}

/// Rows of the closed-form bound table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub d: usize,
    pub parties: usize,
    pub zlg: BoundValue,
    pub one_party: BoundValue,
    pub two_party: BoundValue,
    /// Three-party closed form, present when `parties == 3`.
    pub two_party_three: Option<BoundValue>,
}

pub fn bound_table(ds: &[usize], parties: &[usize]) -> Result<Vec<BoundRow>> {
    if ds.is_empty() || parties.is_empty() {
        return Err(Error::InvalidConfig("empty range".into()));
    }
    let mut rows = Vec::new();
    for &d in ds {
        for &n in parties {
            rows.push(BoundRow {
                d,
                parties: n,
                zlg: (&bound_zlg(d, n)?).into(),
                one_party: (&bound_one_party(d)?).into(),
                two_party: (&bound_two_party(d, n)?).into(),
                two_party_three: if n == 3 {
                    Some((&bound_two_party_three(d)?).into())
                } else {
                    None
                },
            });
        }
    }
    Ok(rows)
}

/// `true` when `values` never decreases.
pub fn non_decreasing(values: &[BigRational]) -> bool {
    values.windows(2).all(|w| w[0] <= w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn bound_examples() {
        assert_eq!(bound_zlg(2, 3).unwrap(), r(7, 16));
        assert_eq!(bound_zlg(3, 3).unwrap(), r(5, 9));
        assert_eq!(bound_one_party(2).unwrap(), r(5, 8));
        assert_eq!(bound_one_party(3).unwrap(), r(7, 9));
        assert_eq!(bound_two_party(2, 3).unwrap(), r(21, 32));
        assert_eq!(bound_two_party(3, 3).unwrap(), r(43, 54));
        assert_eq!(bound_two_party(2, 4).unwrap(), r(89, 128));
    }

    #[test]
    fn three_party_forms_agree() {
        for d in 2..=7 {
            assert_eq!(
                bound_two_party(d, 3).unwrap(),
                bound_two_party_three(d).unwrap()
            );
        }
    }

    #[test]
    fn zlg_bound_approaches_limit_from_below() {
        for n in 3..=6 {
            let limit = BigRational::one() - num::pow(r(1, 2), n - 1);
            let values: Vec<_> = (2..=40).map(|d| bound_zlg(d, n).unwrap()).collect();
            assert!(values.iter().all(|v| *v < limit));
            assert!(non_decreasing(&values));
            assert!(to_f64(&(limit - values.last().unwrap())) < 0.02);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(bound_zlg(1, 3).is_err());
        assert!(bound_two_party(2, 2).is_err());
        assert!(bound_table(&[], &[3]).is_err());
    }

    #[test]
    fn wilson_brackets_rate() {
        for (k, n) in [(0, 10), (5, 10), (10, 10), (437, 1000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn honest_estimate_is_zero() {
        let exp = Experiment::new(3, 3, Protocol::Modified, AttackKind::None).rounds(500);
        let rep = estimate_detection(&exp).unwrap();
        assert_eq!(rep.detections, 0);
        assert_eq!(rep.bound, None);
        assert_eq!(rep.config.engine, Engine::Oracle);
    }

    #[test]
    fn testing_fraction_subsamples() {
        let exp = Experiment::new(2, 3, Protocol::Modified, AttackKind::Zlg)
            .rounds(2000)
            .test_fraction(0.25);
        let rep = estimate_detection(&exp).unwrap();
        assert!(rep.tested > 350 && rep.tested < 650, "{}", rep.tested);
        assert!(rep.detections <= rep.tested);
        assert!(Experiment::new(2, 3, Protocol::Modified, AttackKind::Zlg)
            .test_fraction(0.0)
            .validate()
            .is_err());
    }

    #[test]
    fn exact_values() {
        let exp = Experiment::new(2, 3, Protocol::Original, AttackKind::Zlg);
        let e = exact_detection(&exp, DEFAULT_LEAF_CAP).unwrap();
        assert_eq!(e.detection, 0.0);
        assert!((e.eve_key - 1.0).abs() < 1e-12 && (e.mass - 1.0).abs() < 1e-12);
        let exp = Experiment::new(2, 3, Protocol::Modified, AttackKind::Zlg);
        let e = exact_detection(&exp, DEFAULT_LEAF_CAP).unwrap();
        assert!((e.detection - 7.0 / 16.0).abs() < 1e-9);
    }

    #[test]
    fn leaf_cap_is_enforced() {
        let exp = Experiment::new(2, 3, Protocol::Modified, AttackKind::TwoParty);
        assert!(matches!(
            exact_detection(&exp, 10),
            Err(Error::TreeTooLarge(10))
        ));
    }

    #[test]
    fn csv_row_matches_header() {
        let rep = estimate_detection(
            &Experiment::new(2, 3, Protocol::Original, AttackKind::Zlg).rounds(10),
        )
        .unwrap();
        assert_eq!(
            rep.csv_row().split(',').count(),
            DetectionReport::CSV_HEADER.split(',').count()
        );
    }
}
