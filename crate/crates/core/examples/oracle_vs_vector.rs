//! The label oracle tracks Bell and GHZ labels symbolically instead of
//! storing amplitudes. Driven by the same random stream it reproduces the
//! state-vector engine round for round.

use std::time::Instant;

use entswap::attacks::AttackKind;
use entswap::protocol::{run_round, CheckScope, Engine, Protocol, RoundConfig};
use entswap::qudit::Dim;

fn run(
    engine: Engine,
    protocol: Protocol,
    attack: AttackKind,
    d: usize,
    rounds: u64,
) -> entswap::Result<Vec<String>> {
    (0..rounds)
        .map(|round| {
            let cfg = RoundConfig::new(d, 3, protocol)?.with_round(round);
            let mut adversary = attack.build(Dim::new(d)?, 3, 0)?;
            let rec = run_round(&cfg, Some(adversary.as_mut()), engine, CheckScope::Both)?;
            Ok(serde_json::to_string(&rec).expect("record serializes"))
        })
        .collect()
}

fn main() -> entswap::Result<()> {
    let cases = [
        (Protocol::Original, AttackKind::None),
        (Protocol::Modified, AttackKind::None),
        (Protocol::Original, AttackKind::Zlg),
    ];
    for d in [2, 3] {
        for (protocol, attack) in cases {
            let t = Instant::now();
            let vector = run(Engine::Vector, protocol, attack, d, 500)?;
            let tv = t.elapsed();
            let t = Instant::now();
            let oracle = run(Engine::Oracle, protocol, attack, d, 500)?;
            let to = t.elapsed();
            println!(
                "d={d} {protocol:<9} attack={:<5} identical={}  vector {:>6.1?}  oracle {:>6.1?}",
                attack.name(),
                vector == oracle,
                tv,
                to
            );
        }
    }
    Ok(())
}
