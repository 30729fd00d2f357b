//! Check every entanglement-swapping identity numerically at d = 2..5.
//!
//! Small dimensions are enumerated exhaustively, larger ones are sampled.

use entswap::identities::{verify_all, Identity, IdentityOptions};
use entswap::qudit::Dim;

fn main() -> entswap::Result<()> {
    let dims = (2..=5).map(Dim::new).collect::<entswap::Result<Vec<_>>>()?;
    let reports = verify_all(&dims, &Identity::ALL, &IdentityOptions::default())?;
    for r in &reports {
        println!(
            "{:<20} d={} {:>4} cases  max deviation {:.2e}  {}",
            r.identity.name(),
            r.d,
            r.cases,
            r.max_deviation,
            if r.passed { "ok" } else { "FAILED" }
        );
    }
    assert!(reports.iter().all(|r| r.passed));
    Ok(())
}
