//! Numerical verification of the swapping identities behind both protocols.
//!
//! Each identity rebuilds its right-hand superposition from basis factors
//! and compares amplitudes with the left-hand product state. Label tuples
//! are enumerated exhaustively for small `d` and sampled otherwise.

use std::fmt;
use std::str::FromStr;

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{make_bell, make_ghz, BellLabel, GhzLabel};
use crate::error::{Error, Result};
use crate::qudit::{Dim, StateVector};

pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// Bell pair against Bell pair.
    BellBell,
    /// Bell pair against the GHZ reference qudit.
    BellGhzKeep,
    /// Bell pair against a non-reference GHZ qudit.
    BellGhzSend,
    /// Weyl operators relabel a three-qudit GHZ state (checked up to phase).
    WeylRelabel,
    /// Fourier-twisted Bell pair against a plain GHZ state.
    FourierSwap,
    /// Fourier-twisted Bell pair against a GHZ state that already carries a
    /// Fourier factor.
    FourierSwapTagged,
}

impl Identity {
    pub const ALL: [Identity; 6] = [
        Identity::BellBell,
        Identity::BellGhzKeep,
        Identity::BellGhzSend,
        Identity::WeylRelabel,
        Identity::FourierSwap,
        Identity::FourierSwapTagged,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::BellBell => "bell-bell",
            Identity::BellGhzKeep => "bell-ghz-keep",
            Identity::BellGhzSend => "bell-ghz-send",
            Identity::WeylRelabel => "weyl-relabel",
            Identity::FourierSwap => "fourier-swap",
            Identity::FourierSwapTagged => "fourier-swap-tagged",
        }
    }

    /// Number of free labels in one test case.
    fn arity(self) -> usize {
        match self {
            Identity::BellBell => 4,
            Identity::BellGhzKeep | Identity::BellGhzSend => 5,
            Identity::WeylRelabel => 6,
            Identity::FourierSwap | Identity::FourierSwapTagged => 3,
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Identity::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown identity '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityOptions {
    /// Enumerate every label tuple when `d` is at most this.
    pub exhaustive_up_to: usize,
    /// Random label tuples checked at larger `d`.
    pub samples: usize,
    pub seed: u64,
    /// Negative control: perturb the coefficient phases so every check fails.
    pub corrupt_phase: bool,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            exhaustive_up_to: 3,
            samples: 100,
            seed: 0x5EED,
            corrupt_phase: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    pub d: usize,
    pub cases: usize,
    pub exhaustive: bool,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Reorder `state`, whose sites are named `have`, into the order `want`.
fn arrange(state: &StateVector, have: &[usize], want: &[usize]) -> Result<StateVector> {
    let order: Vec<usize> = want
        .iter()
        .map(|w| have.iter().position(|h| h == w).expect("site names match"))
        .collect();
    state.permute_sites(&order)
}

fn ghz3(dim: Dim, a: usize, b: usize, c: usize) -> Result<StateVector> {
    make_ghz(dim, &GhzLabel::new(a, vec![b, c]), 3)
}

/// Branch coefficient `omega^(-kl) / d`, or a twisted one for the negative
/// control.
fn coefficient(dim: Dim, k: usize, l: usize, corrupt: bool) -> Complex64 {
    let mut e = -((k * l) as i64);
    if corrupt {
        e += k as i64 + 1;
    }
    dim.omega_pow(e) / dim.get() as f64
}

/// Deviation between both sides of one identity for one label tuple.
pub fn check_case(identity: Identity, dim: Dim, labels: &[usize], corrupt: bool) -> Result<f64> {
    if labels.len() != identity.arity() {
        return Err(Error::InvalidLabel(format!(
            "{identity} takes {} labels, got {}",
            identity.arity(),
            labels.len()
        )));
    }
    let d = dim.get();
    let sum = |term: &dyn Fn(usize, usize) -> Result<StateVector>| -> Result<StateVector> {
        let mut acc: Option<StateVector> = None;
        for k in 0..d {
            for l in 0..d {
                let t = term(k, l)?;
                let c = coefficient(dim, k, l, corrupt);
                acc = Some(match acc {
                    None => t.scaled(c),
                    Some(a) => a.add_scaled(&t, c)?,
                });
            }
        }
        Ok(acc.expect("d >= 2"))
    };

    match identity {
        Identity::BellBell => {
            let [a1, a2, a3, a4] = [labels[0], labels[1], labels[2], labels[3]];
            let lhs = make_bell(dim, BellLabel::new(a1, a2))
                .tensor(&make_bell(dim, BellLabel::new(a3, a4)))?;
            let rhs = sum(&|k, l| {
                let t = make_bell(dim, BellLabel::new(dim.sub(a1, k), dim.add(a4, l))).tensor(
                    &make_bell(dim, BellLabel::new(dim.add(a3, k), dim.sub(a2, l))),
                )?;
                arrange(&t, &[1, 4, 3, 2], &[1, 2, 3, 4])
            })?;
            lhs.max_deviation(&rhs)
        }
        Identity::BellGhzKeep | Identity::BellGhzSend => {
            let [u1, u2, v1, v2, v3] = [labels[0], labels[1], labels[2], labels[3], labels[4]];
            let lhs = make_bell(dim, BellLabel::new(u1, u2)).tensor(&ghz3(dim, v1, v2, v3)?)?;
            let keep = identity == Identity::BellGhzKeep;
            let rhs = sum(&|k, l| {
                if keep {
                    let t = make_bell(dim, BellLabel::new(dim.sub(v1, k), dim.add(u2, l)))
                        .tensor(&ghz3(dim, dim.add(u1, k), dim.sub(v2, l), dim.sub(v3, l))?)?;
                    arrange(&t, &[3, 2, 1, 4, 5], &[1, 2, 3, 4, 5])
                } else {
                    let t = make_bell(dim, BellLabel::new(dim.sub(u1, k), dim.add(v3, l)))
                        .tensor(&ghz3(dim, dim.add(v1, k), v2, dim.sub(u2, l))?)?;
                    arrange(&t, &[1, 5, 3, 4, 2], &[1, 2, 3, 4, 5])
                }
            })?;
            lhs.max_deviation(&rhs)
        }
        Identity::WeylRelabel => {
            let [u, v, w, p, q, r] = [
                labels[0], labels[1], labels[2], labels[3], labels[4], labels[5],
            ];
            // Z^p X^q differs from X^q Z^p by a global phase only
            let applied = if corrupt { dim.add(p, 1) } else { p };
            let lhs = ghz3(dim, u, v, w)?
                .apply_weyl(1, q, applied)?
                .apply_weyl(2, r, 0)?;
            let rhs = ghz3(dim, dim.add(u, p), dim.add(v, q), dim.add(w, r))?;
            lhs.max_deviation_up_to_phase(&rhs)
        }
        Identity::FourierSwap | Identity::FourierSwapTagged => {
            let [u1, u2, u3] = [labels[0], labels[1], labels[2]];
            let tagged = identity == Identity::FourierSwapTagged;
            let mut ghz = ghz3(dim, u1, u2, u3)?;
            if tagged {
                ghz = ghz.apply_fourier(1, false)?;
            }
            let pair = make_bell(dim, BellLabel::new(0, 0)).apply_fourier(0, false)?;
            let lhs = ghz.tensor(&pair)?;
            let rhs = sum(&|k, l| {
                let mut g = ghz3(dim, dim.sub(u1, k), u2, l)?.apply_fourier(2, false)?;
                if tagged {
                    g = g.apply_fourier(1, false)?;
                }
                let t = g.tensor(&make_bell(dim, BellLabel::new(k, dim.sub(u3, l))))?;
                arrange(&t, &[1, 2, 5, 4, 3], &[1, 2, 3, 4, 5])
            })?;
            lhs.max_deviation(&rhs)
        }
    }
}

/// Check one identity at one dimension.
pub fn verify_identity(
    identity: Identity,
    dim: Dim,
    options: &IdentityOptions,
) -> Result<IdentityReport> {
    let d = dim.get();
    let n = identity.arity();
    let exhaustive = d <= options.exhaustive_up_to;
    let mut max_deviation: f64 = 0.0;
    let mut cases = 0;
    let mut check = |labels: &[usize]| -> Result<()> {
        max_deviation =
            max_deviation.max(check_case(identity, dim, labels, options.corrupt_phase)?);
        cases += 1;
        Ok(())
    };
    if exhaustive {
        let total = d.pow(n as u32);
        let mut labels = vec![0; n];
        for mut index in 0..total {
            for slot in labels.iter_mut().rev() {
                *slot = index % d;
                index /= d;
            }
            check(&labels)?;
        }
    } else {
        let mut rng =
            ChaCha8Rng::seed_from_u64(options.seed ^ ((d as u64) << 8) ^ (identity as u64));
        for _ in 0..options.samples {
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..d)).collect();
            check(&labels)?;
        }
    }
    Ok(IdentityReport {
        identity,
        d,
        cases,
        exhaustive,
        max_deviation,
        passed: max_deviation < IDENTITY_TOLERANCE,
    })
}

/// Run every selected identity at every dimension.
pub fn verify_all(
    dims: &[Dim],
    selected: &[Identity],
    options: &IdentityOptions,
) -> Result<Vec<IdentityReport>> {
    let mut out = Vec::new();
    for &dim in dims {
        for &identity in selected {
            out.push(verify_identity(identity, dim, options)?);
        }
    }
    Ok(out)
}
