//! Writing an adversary from scratch: one that flips every qudit in transit
//! with a Weyl shift and otherwise stays passive.

use entswap::analysis::wilson_interval;
use entswap::basis::GhzLabel;
use entswap::protocol::{
    run_round, Adversary, CheckScope, Engine, InferredKeys, Lab, Protocol, RoundConfig, Transit,
    Verdict,
};
use entswap::qudit::QuditId;

#[derive(Default)]
struct Flipper {
    touched: Vec<QuditId>,
}

impl Adversary for Flipper {
    fn name(&self) -> &'static str {
        "flipper"
    }

    fn label_representable(&self, _protocol: Protocol) -> bool {
        false
    }

    fn intercept(&mut self, lab: &mut Lab<'_>, transit: Transit) -> entswap::Result<QuditId> {
        lab.weyl(transit.qudit, 1, 0)?;
        self.touched.push(transit.qudit);
        Ok(transit.qudit)
    }

    fn inferred_keys(&self, _cfg: &RoundConfig, _announcement: &GhzLabel) -> InferredKeys {
        InferredKeys::default()
    }

    fn transcript(&self) -> serde_json::Value {
        serde_json::json!({ "touched": self.touched.iter().map(|q| q.0).collect::<Vec<_>>() })
    }
}

fn main() -> entswap::Result<()> {
    let rounds = 2_000;
    for protocol in [Protocol::Original, Protocol::Modified] {
        let mut detected = 0;
        for round in 0..rounds {
            let cfg = RoundConfig::new(3, 3, protocol)?.with_round(round);
            let rec = run_round(
                &cfg,
                Some(&mut Flipper::default()),
                Engine::Auto,
                CheckScope::Both,
            )?;
            detected += u64::from(rec.verdict == Verdict::ErrorDetected);
        }
        let (lo, hi) = wilson_interval(detected, rounds);
        println!(
            "{protocol:<9} detection {:.4}  ci95 [{lo:.4}, {hi:.4}]",
            detected as f64 / rounds as f64
        );
    }
    Ok(())
}
