use crate::basis::{make_state, measure_and_split, BasisKind, BellLabel, GhzLabel, Label};
use crate::error::{Error, Result};
use crate::oracle::LabeledSystem;
use crate::qudit::{Dim, QuditId, StateVector};
use crate::sampler::OutcomeSampler;

/// A physical model of every qudit in one round.
pub trait QuantumBackend {
    fn dim(&self) -> Dim;
    fn prepare_bell(&mut self, label: BellLabel, sites: [QuditId; 2]) -> Result<()>;
    fn prepare_ghz(&mut self, label: &GhzLabel, sites: &[QuditId]) -> Result<()>;
    /// `X^shift Z^phase` on one qudit.
    fn weyl(&mut self, site: QuditId, shift: usize, phase: usize) -> Result<()>;
    fn fourier(&mut self, site: QuditId, inverse: bool) -> Result<()>;
    fn measure_bell(
        &mut self,
        pair: [QuditId; 2],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<BellLabel>;
    fn measure_ghz(
        &mut self,
        sites: &[QuditId],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<GhzLabel>;
}

#[derive(Clone, Debug)]
struct Factor {
    sites: Vec<QuditId>,
    state: StateVector,
}

/// Dense amplitudes, kept as a product of independent factors so a round
/// never holds more than the qudits that are actually entangled.
#[derive(Clone, Debug)]
pub struct VectorBackend {
    dim: Dim,
    factors: Vec<Factor>,
}

impl VectorBackend {
    pub fn new(dim: Dim) -> Self {
        VectorBackend {
            dim,
            factors: Vec::new(),
        }
    }

    fn locate(&self, site: QuditId) -> Result<(usize, usize)> {
        for (i, f) in self.factors.iter().enumerate() {
            if let Some(p) = f.sites.iter().position(|s| *s == site) {
                return Ok((i, p));
            }
        }
        Err(Error::InvalidSites(format!("{site} has not been prepared")))
    }

    fn push(&mut self, sites: Vec<QuditId>, state: StateVector) -> Result<()> {
        for s in &sites {
            if self.locate(*s).is_ok() {
                return Err(Error::InvalidSites(format!("{s} prepared twice")));
            }
        }
        self.factors.push(Factor { sites, state });
        Ok(())
    }

    fn measure(
        &mut self,
        sites: &[QuditId],
        kind: BasisKind,
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<Label> {
        let mut involved: Vec<usize> = Vec::new();
        for s in sites {
            let (i, _) = self.locate(*s)?;
            if !involved.contains(&i) {
                involved.push(i);
            }
        }
        involved.sort_unstable();
        let mut merged_sites = Vec::new();
        let mut merged: Option<StateVector> = None;
        for &i in &involved {
            let f = &self.factors[i];
            merged_sites.extend(f.sites.iter().copied());
            merged = Some(match merged {
                None => f.state.clone(),
                Some(m) => m.tensor(&f.state)?,
            });
        }
        let merged = merged.expect("at least one factor");
        let positions: Vec<usize> = sites
            .iter()
            .map(|s| merged_sites.iter().position(|m| m == s).expect("located"))
            .collect();
        let (label, rest) = measure_and_split(&merged, &positions, kind, sampler)?;
        for &i in involved.iter().rev() {
            self.factors.remove(i);
        }
        if let Some(rest) = rest {
            let rest_sites = merged_sites
                .iter()
                .copied()
                .filter(|s| !sites.contains(s))
                .collect();
            self.factors.push(Factor {
                sites: rest_sites,
                state: rest,
            });
        }
        self.factors.push(Factor {
            sites: sites.to_vec(),
            state: make_state(self.dim, &label)?,
        });
        Ok(label)
    }

    /// Largest factor currently held, in amplitudes.
    pub fn largest_factor(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.state.amplitudes().len())
            .max()
            .unwrap_or(0)
    }
}

impl QuantumBackend for VectorBackend {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn prepare_bell(&mut self, label: BellLabel, sites: [QuditId; 2]) -> Result<()> {
        let state = make_state(self.dim, &Label::Bell(label))?;
        self.push(sites.to_vec(), state)
    }

    fn prepare_ghz(&mut self, label: &GhzLabel, sites: &[QuditId]) -> Result<()> {
        let state = make_state(self.dim, &Label::Ghz(label.clone()))?;
        if label.parties() != sites.len() {
            return Err(Error::InvalidLabel(format!(
                "{label} does not fit {} qudits",
                sites.len()
            )));
        }
        self.push(sites.to_vec(), state)
    }

    fn weyl(&mut self, site: QuditId, shift: usize, phase: usize) -> Result<()> {
        let (i, p) = self.locate(site)?;
        let f = &mut self.factors[i];
        f.state = f
            .state
            .apply_weyl(p, shift % self.dim.get(), phase % self.dim.get())?;
        Ok(())
    }

    fn fourier(&mut self, site: QuditId, inverse: bool) -> Result<()> {
        let (i, p) = self.locate(site)?;
        let f = &mut self.factors[i];
        f.state = f.state.apply_fourier(p, inverse)?;
        Ok(())
    }

    fn measure_bell(
        &mut self,
        pair: [QuditId; 2],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<BellLabel> {
        if pair[0] == pair[1] {
            return Err(Error::InvalidSites(format!("{} listed twice", pair[0])));
        }
        let label = self.measure(&pair, BasisKind::Bell, sampler)?;
        Ok(label
            .as_bell()
            .expect("Bell measurement yields a Bell label"))
    }

    fn measure_ghz(
        &mut self,
        sites: &[QuditId],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<GhzLabel> {
        let label = self.measure(sites, BasisKind::Ghz, sampler)?;
        Ok(label
            .as_ghz()
            .expect("GHZ measurement yields a GHZ label")
            .clone())
    }
}

/// Symbolic labels only. Fails with [`Error::NotLabelRepresentable`] on any
/// operation outside the rewrite rules of [`LabeledSystem`].
#[derive(Clone, Debug)]
pub struct OracleBackend {
    system: LabeledSystem,
}

impl OracleBackend {
    pub fn new(dim: Dim) -> Self {
        OracleBackend {
            system: LabeledSystem::new(dim),
        }
    }

    pub fn system(&self) -> &LabeledSystem {
        &self.system
    }
}

impl QuantumBackend for OracleBackend {
    fn dim(&self) -> Dim {
        self.system.dim()
    }

    fn prepare_bell(&mut self, label: BellLabel, sites: [QuditId; 2]) -> Result<()> {
        let dim = self.dim();
        self.system =
            std::mem::replace(&mut self.system, LabeledSystem::new(dim)).with_bell(label, sites)?;
        Ok(())
    }

    fn prepare_ghz(&mut self, label: &GhzLabel, sites: &[QuditId]) -> Result<()> {
        let dim = self.dim();
        self.system = std::mem::replace(&mut self.system, LabeledSystem::new(dim))
            .with_ghz(label, sites.to_vec())?;
        Ok(())
    }

    fn weyl(&mut self, site: QuditId, shift: usize, phase: usize) -> Result<()> {
        self.system = self.system.apply_weyl(site, shift, phase)?;
        Ok(())
    }

    fn fourier(&mut self, site: QuditId, inverse: bool) -> Result<()> {
        self.system = self.system.apply_fourier(site, inverse)?;
        Ok(())
    }

    fn measure_bell(
        &mut self,
        pair: [QuditId; 2],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<BellLabel> {
        let (label, next) = self.system.measure_bell(pair, sampler)?;
        self.system = next;
        Ok(label)
    }

    fn measure_ghz(
        &mut self,
        sites: &[QuditId],
        sampler: &mut dyn OutcomeSampler,
    ) -> Result<GhzLabel> {
        let (label, next) = self.system.measure_ghz(sites, sampler)?;
        self.system = next;
        Ok(label)
    }
}

/// Everything a party or adversary can physically do during one round:
/// allocate and prepare qudits, apply local unitaries, measure, and flip
/// coins. All randomness is drawn from one sampler in call order.
pub struct Lab<'s> {
    backend: Box<dyn QuantumBackend + 's>,
    sampler: &'s mut dyn OutcomeSampler,
    next_id: usize,
}

impl<'s> Lab<'s> {
    pub fn new(backend: Box<dyn QuantumBackend + 's>, sampler: &'s mut dyn OutcomeSampler) -> Self {
        Lab {
            backend,
            sampler,
            next_id: 0,
        }
    }

    pub fn dim(&self) -> Dim {
        self.backend.dim()
    }

    fn alloc(&mut self, n: usize) -> Vec<QuditId> {
        let ids = (self.next_id..self.next_id + n).map(QuditId).collect();
        self.next_id += n;
        ids
    }

    pub fn bell(&mut self, label: BellLabel) -> Result<[QuditId; 2]> {
        let ids = self.alloc(2);
        let pair = [ids[0], ids[1]];
        self.backend.prepare_bell(label, pair)?;
        Ok(pair)
    }

    pub fn ghz(&mut self, label: &GhzLabel) -> Result<Vec<QuditId>> {
        let ids = self.alloc(label.parties());
        self.backend.prepare_ghz(label, &ids)?;
        Ok(ids)
    }

    pub fn weyl(&mut self, site: QuditId, shift: usize, phase: usize) -> Result<()> {
        self.backend.weyl(site, shift, phase)
    }

    pub fn fourier(&mut self, site: QuditId, inverse: bool) -> Result<()> {
        self.backend.fourier(site, inverse)
    }

    pub fn measure_bell(&mut self, pair: [QuditId; 2]) -> Result<BellLabel> {
        self.backend.measure_bell(pair, self.sampler)
    }

    pub fn measure_ghz(&mut self, sites: &[QuditId]) -> Result<GhzLabel> {
        self.backend.measure_ghz(sites, self.sampler)
    }

    /// Draw from a classical distribution.
    pub fn pick(&mut self, probabilities: &[f64]) -> usize {
        self.sampler.pick(probabilities)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{round_sampler, PathSampler};

    fn d(v: usize) -> Dim {
        Dim::new(v).unwrap()
    }

    #[test]
    fn vector_backend_keeps_factors_small() {
        let mut s = round_sampler(3, 0);
        let mut b = VectorBackend::new(d(3));
        let q: Vec<QuditId> = (0..7).map(QuditId).collect();
        b.prepare_bell(BellLabel::new(1, 2), [q[0], q[1]]).unwrap();
        b.prepare_ghz(&GhzLabel::new(0, vec![1, 2]), &q[2..5])
            .unwrap();
        b.prepare_bell(BellLabel::new(0, 0), [q[5], q[6]]).unwrap();
        b.measure_bell([q[2], q[1]], &mut s).unwrap();
        b.measure_bell([q[5], q[3]], &mut s).unwrap();
        assert!(b.largest_factor() <= 27);
        assert!(b
            .prepare_bell(BellLabel::new(0, 0), [q[0], QuditId(9)])
            .is_err());
    }

    #[test]
    fn backends_agree_on_a_swap_chain() {
        let dim = d(3);
        for branch in 0..81 {
            let prefix = vec![branch / 9, branch % 9];
            let mut sv = PathSampler::new(prefix.clone());
            let mut so = PathSampler::new(prefix);
            let mut v = VectorBackend::new(dim);
            let mut o = OracleBackend::new(dim);
            let q: Vec<QuditId> = (0..7).map(QuditId).collect();
            for be in [&mut v as &mut dyn QuantumBackend, &mut o] {
                be.prepare_bell(BellLabel::new(2, 1), [q[0], q[1]]).unwrap();
                be.prepare_ghz(&GhzLabel::new(1, vec![0, 2]), &q[2..5])
                    .unwrap();
                be.prepare_bell(BellLabel::new(1, 1), [q[5], q[6]]).unwrap();
            }
            let a = v.measure_bell([q[2], q[1]], &mut sv).unwrap();
            let b = o.measure_bell([q[2], q[1]], &mut so).unwrap();
            assert_eq!(a, b);
            let a = v.measure_bell([q[5], q[4]], &mut sv).unwrap();
            let b = o.measure_bell([q[5], q[4]], &mut so).unwrap();
            assert_eq!(a, b);
            v.weyl(q[3], 1, 2).unwrap();
            o.weyl(q[3], 1, 2).unwrap();
            let sites = [q[0], q[3], q[6]];
            assert_eq!(
                v.measure_ghz(&sites, &mut sv).unwrap(),
                o.measure_ghz(&sites, &mut so).unwrap()
            );
            assert_eq!(sv.widths(), so.widths());
        }
    }
}
