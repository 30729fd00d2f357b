//! The ZLG entanglement-swapping attack.
//!
//! Against the original protocol the adversary learns the conference key and
//! the secret on every round without being noticed. The randomized Fourier
//! step of the modified protocol exposes the same attack on a large share of
//! testing rounds.

use entswap::analysis::{estimate_detection, Experiment};
use entswap::attacks::AttackKind;
use entswap::protocol::Protocol;

fn main() -> entswap::Result<()> {
    for protocol in [Protocol::Original, Protocol::Modified] {
        for d in [2, 3] {
            let report = estimate_detection(
                &Experiment::new(d, 3, protocol, AttackKind::Zlg).rounds(20_000),
            )?;
            println!(
                "{protocol:<9} d={d}  detection {:.4}  bound {:<6}  eve key accuracy {:.4}  eve secret accuracy {:.4}",
                report.rate,
                report.bound.as_ref().map_or("-".to_string(), |b| b.exact.clone()),
                report.eve_accuracy,
                report.eve_secret_accuracy,
            );
        }
    }
    Ok(())
}
