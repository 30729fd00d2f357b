//! Exact detection probabilities by enumerating every branch of a round:
//! the Fourier coin of each receiver and every measurement outcome.

use entswap::analysis::{bound_for, exact_detection, Experiment, DEFAULT_LEAF_CAP};
use entswap::attacks::AttackKind;
use entswap::protocol::Protocol;

fn main() -> entswap::Result<()> {
    let cases = [
        (Protocol::Original, AttackKind::Zlg),
        (Protocol::Modified, AttackKind::Zlg),
        (Protocol::Modified, AttackKind::OneParty),
        (Protocol::Modified, AttackKind::TwoParty),
    ];
    for (protocol, attack) in cases {
        let exp = Experiment::new(2, 3, protocol, attack);
        let exact = exact_detection(&exp, DEFAULT_LEAF_CAP)?;
        let bound = bound_for(attack, protocol, 2, 3)?;
        println!(
            "{protocol:<9} {:<10} detection {:.6}  bound {:<6}  eve key {:.4}  eve secret {:.4}  ({} branches)",
            attack.name(),
            exact.detection,
            bound.map_or("-".to_string(), |b| b.to_string()),
            exact.eve_key,
            exact.eve_secret,
            exact.leaves
        );
    }
    Ok(())
}
