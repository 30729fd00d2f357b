//! Dense state vectors over registers of d-level systems.
//!
//! Basis state `|j_0, j_1, ..., j_{n-1}>` lives at amplitude index
//! `sum_i j_i * d^(n-1-i)`: the first site is the most significant digit.
//! All operations return new values; a [`StateVector`] is never mutated in
//! place once built.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on the number of amplitudes in one state vector.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 24;

/// Environment variable overriding [`DEFAULT_MAX_AMPLITUDES`].
pub const MAX_AMPLITUDES_ENV: &str = "ENTSWAP_MAX_AMPLITUDES";

/// Amplitude cap in effect for this process.
pub fn amplitude_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_AMPLITUDES_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_AMPLITUDES)
    })
}

/// Stable identifier of one physical qudit in a simulated lab, independent
/// of where the qudit currently sits inside any state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuditId(pub usize);

impl fmt::Display for QuditId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Dimension of a single qudit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Dim(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// `omega_d^m` with `omega_d = exp(2 pi i / d)`. The exponent is reduced
    /// mod d first so large powers stay exact on the unit circle.
    #[inline]
    pub fn omega_pow(self, m: i64) -> Complex64 {
        let r = m.rem_euclid(self.0 as i64) as f64;
        Complex64::from_polar(1.0, 2.0 * PI * r / self.0 as f64)
    }

    pub fn omega(self) -> Complex64 {
        self.omega_pow(1)
    }

    /// Reduce a signed value into `0..d`.
    #[inline]
    pub fn modulo(self, x: i64) -> usize {
        x.rem_euclid(self.0 as i64) as usize
    }

    #[inline]
    pub fn add(self, a: usize, b: usize) -> usize {
        (a + b) % self.0
    }

    #[inline]
    pub fn sub(self, a: usize, b: usize) -> usize {
        (a + self.0 - b % self.0) % self.0
    }

    #[inline]
    pub fn neg(self, a: usize) -> usize {
        self.sub(0, a)
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Dim::new(d)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered register of `n_qudits` sites of equal dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Register {
    dim: Dim,
    n_qudits: usize,
}

impl Register {
    pub fn new(dim: Dim, n_qudits: usize) -> Result<Self> {
        if n_qudits == 0 {
            return Err(Error::InvalidSites(
                "a register needs at least one qudit".into(),
            ));
        }
        checked_len(dim, n_qudits)?;
        Ok(Register { dim, n_qudits })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n_qudits(&self) -> usize {
        self.n_qudits
    }

    /// Number of amplitudes, `d^n_qudits`.
    pub fn len(&self) -> usize {
        self.dim.get().pow(self.n_qudits as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance in the amplitude array between consecutive values of `site`.
    pub fn stride(&self, site: usize) -> usize {
        self.dim.get().pow((self.n_qudits - 1 - site) as u32)
    }

    /// Basis digits to amplitude index.
    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.n_qudits);
        let d = self.dim.get();
        digits.iter().fold(0, |acc, &j| acc * d + j % d)
    }

    /// Amplitude index to basis digits.
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let d = self.dim.get();
        let mut digits = vec![0; self.n_qudits];
        for slot in digits.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        digits
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_qudits {
            return Err(Error::InvalidSite {
                site,
                len: self.n_qudits,
            });
        }
        Ok(())
    }
}

fn checked_len(dim: Dim, n: usize) -> Result<usize> {
    let cap = amplitude_cap();
    let mut len: usize = 1;
    for _ in 0..n {
        len = match len.checked_mul(dim.get()) {
            Some(v) if v <= cap => v,
            _ => {
                let requested = dim.get().checked_pow(n as u32).unwrap_or(usize::MAX);
                return Err(Error::CapacityExceeded { requested, cap });
            }
        };
    }
    Ok(len)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    register: Register,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(register: Register, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != register.len() {
            return Err(Error::RegisterMismatch(format!(
                "{} amplitudes for a register of size {}",
                amplitudes.len(),
                register.len()
            )));
        }
        Ok(StateVector {
            register,
            amplitudes,
        })
    }

    /// Computational basis state `|digits>`.
    pub fn basis(dim: Dim, digits: &[usize]) -> Result<Self> {
        let register = Register::new(dim, digits.len())?;
        let mut amplitudes = vec![Complex64::zero(); register.len()];
        amplitudes[register.encode(digits)] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            register,
            amplitudes,
        })
    }

    pub fn zeros(register: Register) -> Self {
        StateVector {
            register,
            amplitudes: vec![Complex64::zero(); register.len()],
        }
    }

    pub fn register(&self) -> Register {
        self.register
    }

    pub fn dim(&self) -> Dim {
        self.register.dim
    }

    pub fn n_qudits(&self) -> usize {
        self.register.n_qudits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Complex64 {
        self.amplitudes[self.register.encode(digits)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        StateVector {
            register: self.register,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// `self + factor * other` over identical registers.
    pub fn add_scaled(&self, other: &StateVector, factor: Complex64) -> Result<Self> {
        self.check_same_register(other)?;
        Ok(StateVector {
            register: self.register,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b * factor)
                .collect(),
        })
    }

    /// Largest absolute amplitude difference.
    pub fn max_deviation(&self, other: &StateVector) -> Result<f64> {
        self.check_same_register(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Like [`max_deviation`](Self::max_deviation) after removing the best
    /// global phase between the two states.
    pub fn max_deviation_up_to_phase(&self, other: &StateVector) -> Result<f64> {
        let overlap = self.inner_product(other)?;
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        self.scaled(phase).max_deviation(other)
    }

    /// Tensor product; `other`'s sites follow `self`'s.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(
                self.dim().get(),
                other.dim().get(),
            ));
        }
        let register = Register::new(self.dim(), self.n_qudits() + other.n_qudits())?;
        let mut amplitudes = Vec::with_capacity(register.len());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(StateVector {
            register,
            amplitudes,
        })
    }

    /// Apply a `d x d` matrix (row-major) to one site.
    pub fn apply_single(&self, site: usize, matrix: &[Complex64]) -> Result<Self> {
        self.register.check_site(site)?;
        let d = self.dim().get();
        assert_eq!(matrix.len(), d * d, "single-site matrix must be d x d");
        let stride = self.register.stride(site);
        let block = stride * d;
        let mut out = vec![Complex64::zero(); self.amplitudes.len()];
        let mut column = vec![Complex64::zero(); d];
        for base in (0..self.amplitudes.len()).step_by(block) {
            for offset in 0..stride {
                for (k, c) in column.iter_mut().enumerate() {
                    *c = self.amplitudes[base + offset + k * stride];
                }
                for j in 0..d {
                    let row = &matrix[j * d..(j + 1) * d];
                    out[base + offset + j * stride] =
                        row.iter().zip(&column).map(|(m, c)| m * c).sum();
                }
            }
        }
        Ok(StateVector {
            register: self.register,
            amplitudes: out,
        })
    }

    /// `X^shift Z^phase` on `site`, i.e. `|j> -> omega^(phase*j) |j + shift>`.
    pub fn apply_weyl(&self, site: usize, shift: usize, phase: usize) -> Result<Self> {
        self.register.check_site(site)?;
        let dim = self.dim();
        let d = dim.get();
        let stride = self.register.stride(site);
        let block = stride * d;
        let mut out = vec![Complex64::zero(); self.amplitudes.len()];
        for base in (0..self.amplitudes.len()).step_by(block) {
            for offset in 0..stride {
                for j in 0..d {
                    let target = (j + shift) % d;
                    out[base + offset + target * stride] = self.amplitudes
                        [base + offset + j * stride]
                        * dim.omega_pow((phase * j) as i64);
                }
            }
        }
        Ok(StateVector {
            register: self.register,
            amplitudes: out,
        })
    }

    /// Quantum Fourier transform `|k> -> d^(-1/2) sum_j omega^(jk) |j>` on
    /// `site`, or its inverse.
    pub fn apply_fourier(&self, site: usize, inverse: bool) -> Result<Self> {
        self.apply_single(site, &fourier_matrix(self.dim(), inverse))
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_register(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Reorder sites: site `i` of the result is site `order[i]` of `self`.
    pub fn permute_sites(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qudits();
        if order.len() != n {
            return Err(Error::InvalidPermutation(format!(
                "expected {n} entries, got {}",
                order.len()
            )));
        }
        let mut seen = vec![false; n];
        for &o in order {
            if o >= n || std::mem::replace(&mut seen[o], true) {
                return Err(Error::InvalidPermutation(format!(
                    "{order:?} is not a bijection on 0..{n}"
                )));
            }
        }
        let strides: Vec<usize> = order.iter().map(|&o| self.register.stride(o)).collect();
        let d = self.dim().get();
        let mut out = vec![Complex64::zero(); self.amplitudes.len()];
        // walk the result's digits in odometer order, tracking the source index
        let mut digits = vec![0usize; n];
        let mut src = 0usize;
        for slot in out.iter_mut() {
            *slot = self.amplitudes[src];
            for pos in (0..n).rev() {
                digits[pos] += 1;
                src += strides[pos];
                if digits[pos] < d {
                    break;
                }
                digits[pos] = 0;
                src -= strides[pos] * d;
            }
        }
        Ok(StateVector {
            register: self.register,
            amplitudes: out,
        })
    }

    fn check_same_register(&self, other: &StateVector) -> Result<()> {
        if self.register != other.register {
            return Err(Error::RegisterMismatch(format!(
                "d={} n={} vs d={} n={}",
                self.dim(),
                self.n_qudits(),
                other.dim(),
                other.n_qudits()
            )));
        }
        Ok(())
    }
}

/// Row-major QFT matrix, `F[j][k] = omega^(jk) / sqrt(d)`.
pub fn fourier_matrix(dim: Dim, inverse: bool) -> Vec<Complex64> {
    let d = dim.get();
    let scale = 1.0 / (d as f64).sqrt();
    let sign = if inverse { -1 } else { 1 };
    let mut m = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            m.push(dim.omega_pow(sign * (j * k) as i64) * scale);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn random_state(dim: Dim, n: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = Register::new(dim, n).unwrap();
        let amps = (0..reg.len())
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        StateVector::from_amplitudes(reg, amps)
            .unwrap()
            .normalized()
    }

    fn d(v: usize) -> Dim {
        Dim::new(v).unwrap()
    }

    #[test]
    fn dim_rejects_small_values() {
        assert_eq!(Dim::new(1), Err(Error::InvalidDimension(1)));
        assert!(Dim::new(0).is_err());
    }

    #[test]
    fn omega_has_order_d() {
        for dv in 2..12 {
            let w = d(dv).omega();
            let mut p = c(1.0, 0.0);
            for _ in 0..dv {
                p *= w;
            }
            assert!((p - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn tensor_basis_states() {
        let a = StateVector::basis(d(2), &[0]).unwrap();
        let b = StateVector::basis(d(2), &[1]).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.amplitudes().len(), 4);
        assert_eq!(t.amplitudes()[1], c(1.0, 0.0));
    }

    #[test]
    fn tensor_epr_with_zero() {
        let h = 1.0 / 2f64.sqrt();
        let reg = Register::new(d(2), 2).unwrap();
        let epr = StateVector::from_amplitudes(reg, vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)])
            .unwrap();
        let t = epr
            .tensor(&StateVector::basis(d(2), &[0]).unwrap())
            .unwrap();
        assert_eq!(t.amplitudes().len(), 8);
        for (i, a) in t.amplitudes().iter().enumerate() {
            let want = if i == 0 || i == 6 { h } else { 0.0 };
            assert!((a - c(want, 0.0)).norm() < 1e-15, "index {i}");
        }
    }

    #[test]
    fn tensor_rejects_mismatched_dims() {
        let a = StateVector::basis(d(2), &[0]).unwrap();
        let b = StateVector::basis(d(3), &[0]).unwrap();
        assert_eq!(a.tensor(&b), Err(Error::DimensionMismatch(2, 3)));
    }

    #[test]
    fn register_cap_is_enforced() {
        let err = Register::new(d(2), 25).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { .. }));
        let a = StateVector::zeros(Register::new(d(2), 12).unwrap());
        let b = StateVector::zeros(Register::new(d(2), 13).unwrap());
        assert!(matches!(a.tensor(&b), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn weyl_examples() {
        let s = StateVector::basis(d(3), &[0]).unwrap();
        assert_eq!(
            s.apply_weyl(0, 1, 0).unwrap(),
            StateVector::basis(d(3), &[1]).unwrap()
        );
        let one = StateVector::basis(d(2), &[1]).unwrap();
        let z = one.apply_weyl(0, 0, 1).unwrap();
        assert!(z.max_deviation(&one.scaled(c(-1.0, 0.0))).unwrap() < 1e-12);
        assert!(matches!(
            s.apply_weyl(1, 1, 0),
            Err(Error::InvalidSite { site: 1, len: 1 })
        ));
    }

    #[test]
    fn weyl_identity_and_order_d() {
        for dv in [2, 3, 5] {
            let s = random_state(d(dv), 3, dv as u64);
            assert_eq!(s.apply_weyl(1, 0, 0).unwrap(), s);
            let mut x = s.clone();
            let mut z = s.clone();
            for _ in 0..dv {
                x = x.apply_weyl(2, 1, 0).unwrap();
                z = z.apply_weyl(0, 0, 1).unwrap();
            }
            assert!(x.max_deviation(&s).unwrap() < 1e-12);
            assert!(z.max_deviation(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn weyl_commutation_on_basis_sweep() {
        // Z X = omega X Z
        for dv in [2, 3, 5] {
            let dim = d(dv);
            for j in 0..dv {
                let s = StateVector::basis(dim, &[j]).unwrap();
                let zx = s.apply_weyl(0, 1, 0).unwrap().apply_weyl(0, 0, 1).unwrap();
                let xz = s.apply_weyl(0, 0, 1).unwrap().apply_weyl(0, 1, 0).unwrap();
                assert!(zx.max_deviation(&xz.scaled(dim.omega())).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_of_zero_is_uniform() {
        let f = StateVector::basis(d(2), &[0])
            .unwrap()
            .apply_fourier(0, false)
            .unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((f.amplitudes()[0] - c(h, 0.)).norm() < 1e-15);
        assert!((f.amplitudes()[1] - c(h, 0.)).norm() < 1e-15);
    }

    #[test]
    fn fourier_on_epr_first_qudit() {
        let h = 1.0 / 2f64.sqrt();
        let reg = Register::new(d(2), 2).unwrap();
        let epr = StateVector::from_amplitudes(reg, vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)])
            .unwrap();
        let f = epr.apply_fourier(0, false).unwrap();
        let want = [0.5, 0.5, 0.5, -0.5];
        for (a, w) in f.amplitudes().iter().zip(want) {
            assert!((a - c(w, 0.)).norm() < 1e-12);
        }
        assert!(epr.inner_product(&f).unwrap().norm() < 1e-12);
    }

    #[test]
    fn fourier_round_trip() {
        for dv in [2, 3, 5] {
            let s = random_state(d(dv), 3, 40 + dv as u64);
            for site in 0..3 {
                let back = s
                    .apply_fourier(site, false)
                    .unwrap()
                    .apply_fourier(site, true)
                    .unwrap();
                assert!(back.max_deviation(&s).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn inner_product_basics() {
        let a = StateVector::basis(d(2), &[0]).unwrap();
        let b = StateVector::basis(d(2), &[1]).unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), c(0., 0.));
        let s = random_state(d(3), 2, 9);
        let t = random_state(d(3), 2, 10);
        let st = s.inner_product(&t).unwrap();
        let ts = t.inner_product(&s).unwrap();
        assert!((st - ts.conj()).norm() < 1e-12);
        let ss = s.inner_product(&s).unwrap();
        assert!(ss.im.abs() < 1e-12 && ss.re > 0.0);
        assert!(matches!(
            s.inner_product(&random_state(d(3), 3, 1)),
            Err(Error::RegisterMismatch(_))
        ));
    }

    #[test]
    fn permute_examples() {
        let s = StateVector::basis(d(2), &[0, 1]).unwrap();
        assert_eq!(
            s.permute_sites(&[1, 0]).unwrap(),
            StateVector::basis(d(2), &[1, 0]).unwrap()
        );
        let r = random_state(d(3), 3, 77);
        assert_eq!(r.permute_sites(&[0, 1, 2]).unwrap(), r);
        assert_eq!(
            r.permute_sites(&[2, 1, 0])
                .unwrap()
                .permute_sites(&[2, 1, 0])
                .unwrap(),
            r
        );
        assert!(r.permute_sites(&[0, 0, 1]).is_err());
        assert!(r.permute_sites(&[0, 1]).is_err());
    }

    #[test]
    fn permute_moves_basis_digits() {
        let dim = d(3);
        let s = StateVector::basis(dim, &[2, 0, 1]).unwrap();
        // result site i holds old site order[i]
        let p = s.permute_sites(&[2, 0, 1]).unwrap();
        assert_eq!(p, StateVector::basis(dim, &[1, 2, 0]).unwrap());
    }

    #[test]
    fn index_convention_round_trip_exhaustive() {
        for (dv, n) in [(2, 4), (3, 3), (5, 2)] {
            let reg = Register::new(d(dv), n).unwrap();
            for idx in 0..reg.len() {
                let digits = reg.decode(idx);
                assert_eq!(reg.encode(&digits), idx);
                let manual: usize = digits
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| j * reg.stride(i))
                    .sum();
                assert_eq!(manual, idx);
            }
        }
    }

    proptest! {
        #[test]
        fn operators_preserve_norm(dv in prop::sample::select(vec![2usize, 3, 5]), seed in any::<u64>(),
                                   site in 0usize..3, shift in 0usize..5, phase in 0usize..5, inv in any::<bool>()) {
            let dim = d(dv);
            let s = random_state(dim, 3, seed);
            let w = s.apply_weyl(site, shift % dv, phase % dv).unwrap();
            prop_assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
            let f = s.apply_fourier(site, inv).unwrap();
            prop_assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tensor_norm_is_multiplicative(seed in any::<u64>()) {
            let a = random_state(d(3), 2, seed);
            let b = random_state(d(3), 1, seed.wrapping_add(1)).scaled(c(0.5, 0.0));
            let t = a.tensor(&b).unwrap();
            prop_assert!((t.norm_sqr().sqrt() - 0.5).abs() < 1e-12);
        }
    }
}
