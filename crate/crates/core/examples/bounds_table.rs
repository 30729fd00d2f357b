//! Closed-form detection bounds as exact rationals.

use entswap::analysis::{bound_table, bound_zlg, non_decreasing};

fn main() -> entswap::Result<()> {
    for row in bound_table(&[2, 3, 4, 5], &[3, 4, 5])? {
        println!(
            "d={} N={}  zlg {:>9}  one-party {:>6}  two-party {:>11}",
            row.d, row.parties, row.zlg.exact, row.one_party.exact, row.two_party.exact
        );
    }
    // More receivers never make the ZLG attack harder to catch.
    let zlg: Vec<_> = (3..=8)
        .map(|n| bound_zlg(3, n))
        .collect::<entswap::Result<_>>()?;
    println!(
        "zlg bound at d=3 is non-decreasing in N: {}",
        non_decreasing(&zlg)
    );
    Ok(())
}
