//! Probe/measurement bases, synthetic measurement data, and evaluation.
//!
//! Qubit systems use the 6ⁿ Pauli eigenstate construction (informationally
//! complete); other dimensions can build probes from generalized Gell-Mann
//! eigenstates. Data records are d(i,j) = Tr(M_j ℰ(ρ_i)) plus optional
//! Gaussian readout noise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{channel_fidelity, KrausChannel};
use crate::error::{QptError, Result};
use crate::linalg::{c, cr, fdist, herm_eigen, kron, trace, CMat, CVec};

/// Ordered probe states ρ_i, each Hermitian PSD with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    dim: usize,
    states: Vec<CMat>,
}

/// Ordered Hermitian measurement operators M_j.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    dim: usize,
    operators: Vec<CMat>,
    projective: bool,
}

/// A single observed expectation value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Record {
    pub probe: usize,
    pub measurement: usize,
    pub value: f64,
}

/// Probes, measurements, and the observed records tying them together.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    probes: ProbeSet,
    measurements: MeasurementSet,
    records: Vec<Record>,
}

/// Fidelity and Frobenius Choi distance of a reconstruction against truth.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub fidelity: f64,
    pub choi_distance: f64,
}

impl ProbeSet {
    pub fn new(dim: usize, states: Vec<CMat>) -> Result<Self> {
        for (i, s) in states.iter().enumerate() {
            if s.nrows() != dim || s.ncols() != dim {
                return Err(QptError::Dimension(format!("probe {i} is not {dim}x{dim}")));
            }
            if fdist(s, &s.adjoint()) > 1e-10 {
                return Err(QptError::Invalid(format!("probe {i} is not Hermitian")));
            }
            if (trace(s).re - 1.0).abs() > 1e-10 {
                return Err(QptError::Invalid(format!("probe {i} does not have unit trace")));
            }
            let (vals, _) = herm_eigen(s);
            if vals.first().copied().unwrap_or(0.0) < -1e-10 {
                return Err(QptError::Invalid(format!("probe {i} is not PSD")));
            }
        }
        Ok(Self { dim, states })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CMat] {
        &self.states
    }
}

impl MeasurementSet {
    pub fn new(dim: usize, operators: Vec<CMat>, projective: bool) -> Result<Self> {
        for (j, m) in operators.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(QptError::Dimension(format!("measurement {j} is not {dim}x{dim}")));
            }
            if fdist(m, &m.adjoint()) > 1e-10 {
                return Err(QptError::Invalid(format!("measurement {j} is not Hermitian")));
            }
            if projective && fdist(&(m * m), m) > 1e-10 {
                return Err(QptError::Invalid(format!("measurement {j} is not a projector")));
            }
        }
        Ok(Self { dim, operators, projective })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[CMat] {
        &self.operators
    }

    pub fn projective(&self) -> bool {
        self.projective
    }
}

impl TomographyDataset {
    pub fn new(
        probes: ProbeSet,
        measurements: MeasurementSet,
        records: Vec<Record>,
    ) -> Result<Self> {
        if probes.dim != measurements.dim {
            return Err(QptError::Dimension(format!(
                "probe dim {} != measurement dim {}",
                probes.dim, measurements.dim
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if r.probe >= probes.len() || r.measurement >= measurements.len() {
                return Err(QptError::Invalid(format!(
                    "record ({}, {}) out of range",
                    r.probe, r.measurement
                )));
            }
            if !seen.insert((r.probe, r.measurement)) {
                return Err(QptError::Invalid(format!(
                    "duplicate record ({}, {})",
                    r.probe, r.measurement
                )));
            }
        }
        Ok(Self { probes, measurements, records })
    }

    pub fn dim(&self) -> usize {
        self.probes.dim
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    pub fn measurements(&self) -> &MeasurementSet {
        &self.measurements
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// The six single-qubit Pauli eigenstates as kets, ordered
/// X+, X−, Y+, Y−, Z+, Z−.
fn pauli_eigenkets() -> Vec<CVec> {
    let s = 1.0 / 2.0_f64.sqrt();
    vec![
        CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
        CVec::from_vec(vec![c(s, 0.0), c(-s, 0.0)]),
        CVec::from_vec(vec![c(s, 0.0), c(0.0, s)]),
        CVec::from_vec(vec![c(s, 0.0), c(0.0, -s)]),
        CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
        CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]),
    ]
}

fn projector(ket: &CVec) -> CMat {
    let n = ket.len();
    CMat::from_fn(n, n, |r, cc| ket[r] * ket[cc].conj())
}

/// The 6ⁿ Pauli-eigenstate probes and the matching projective measurements.
/// Ordering is axis-major per qubit and lexicographic across qubits, first
/// qubit most significant.
pub fn pauli_eigenstate_set(n_qubits: usize) -> Result<(ProbeSet, MeasurementSet)> {
    if n_qubits < 1 {
        return Err(QptError::Invalid("need at least one qubit".into()));
    }
    if n_qubits > 6 {
        return Err(QptError::Invalid(format!(
            "{n_qubits} qubits exceeds the 6-qubit cap (6^{n_qubits} probes)"
        )));
    }
    let singles: Vec<CMat> = pauli_eigenkets().iter().map(projector).collect();
    let mut states = vec![CMat::identity(1, 1)];
    for _ in 0..n_qubits {
        let mut next = Vec::with_capacity(states.len() * 6);
        for left in &states {
            for s in &singles {
                next.push(kron(left, s));
            }
        }
        states = next;
    }
    let dim = 1usize << n_qubits;
    let probes = ProbeSet::new(dim, states.clone())?;
    let measurements = MeasurementSet::new(dim, states, true)?;
    Ok((probes, measurements))
}

/// Generalized Gell-Mann basis: N²−1 traceless Hermitian matrices with
/// Tr(G_a G_b) = 2δ_ab. Symmetric pairs, then antisymmetric pairs, then the
/// diagonal family.
pub fn gellmann_basis(dim: usize) -> Result<Vec<CMat>> {
    if dim < 2 {
        return Err(QptError::Invalid("Gell-Mann basis needs dim >= 2".into()));
    }
    let mut basis = Vec::with_capacity(dim * dim - 1);
    for j in 0..dim {
        for k in (j + 1)..dim {
            let mut sym = CMat::zeros(dim, dim);
            sym[(j, k)] = cr(1.0);
            sym[(k, j)] = cr(1.0);
            basis.push(sym);
        }
    }
    for j in 0..dim {
        for k in (j + 1)..dim {
            let mut asym = CMat::zeros(dim, dim);
            asym[(j, k)] = c(0.0, -1.0);
            asym[(k, j)] = c(0.0, 1.0);
            basis.push(asym);
        }
    }
    for l in 1..dim {
        let norm = (2.0 / (l as f64 * (l as f64 + 1.0))).sqrt();
        let mut d = CMat::zeros(dim, dim);
        for m in 0..l {
            d[(m, m)] = cr(norm);
        }
        d[(l, l)] = cr(-(l as f64) * norm);
        basis.push(d);
    }
    Ok(basis)
}

/// Probe and measurement sets from the eigenstates of every Gell-Mann basis
/// element. Informationally complete for any dimension; used when the system
/// is not a register of qubits.
pub fn gellmann_eigenstate_set(dim: usize) -> Result<(ProbeSet, MeasurementSet)> {
    let basis = gellmann_basis(dim)?;
    let mut states = Vec::new();
    for g in &basis {
        let (_, vecs) = herm_eigen(g);
        for col in 0..dim {
            states.push(projector(&vecs.column(col).into_owned()));
        }
    }
    let probes = ProbeSet::new(dim, states.clone())?;
    let measurements = MeasurementSet::new(dim, states, true)?;
    Ok((probes, measurements))
}

/// Simulates the full Cartesian product of records,
/// d(i,j) = Tr(M_j ℰ(ρ_i)) + Normal(0, σ=epsilon). Records are emitted
/// probe-major for reproducible files.
pub fn simulate_dataset(
    channel: &KrausChannel,
    probes: &ProbeSet,
    measurements: &MeasurementSet,
    epsilon: f64,
    seed: u64,
) -> Result<TomographyDataset> {
    if channel.dim() != probes.dim || channel.dim() != measurements.dim {
        return Err(QptError::Dimension(format!(
            "channel dim {} vs probes {} / measurements {}",
            channel.dim(),
            probes.dim,
            measurements.dim
        )));
    }
    if epsilon < 0.0 {
        return Err(QptError::Invalid("epsilon must be nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(probes.len() * measurements.len());
    for (i, rho) in probes.states.iter().enumerate() {
        let out = channel.apply(rho)?;
        for (j, m) in measurements.operators.iter().enumerate() {
            let ideal = trace(&(m * &out)).re;
            let noise: f64 = if epsilon > 0.0 {
                let g: f64 = rng.sample(StandardNormal);
                g * epsilon
            } else {
                0.0
            };
            records.push(Record { probe: i, measurement: j, value: ideal + noise });
        }
    }
    TomographyDataset::new(probes.clone(), measurements.clone(), records)
}

/// Keeps ⌈√ν·P⌉ probes and ⌈√ν·Q⌉ measurements chosen uniformly without
/// replacement, restricting the records to the kept product. Requires the
/// input to be a full Cartesian product.
pub fn subsample(data: &TomographyDataset, nu: f64, seed: u64) -> Result<TomographyDataset> {
    if !(0.0 < nu && nu <= 1.0) {
        return Err(QptError::Invalid(format!("nu must be in (0, 1], got {nu}")));
    }
    let p = data.probes.len();
    let q = data.measurements.len();
    if data.records.len() != p * q {
        return Err(QptError::Invalid(
            "subsample requires a full Cartesian-product dataset".into(),
        ));
    }
    let keep_p = ((nu.sqrt() * p as f64).ceil() as usize).clamp(1, p);
    let keep_q = ((nu.sqrt() * q as f64).ceil() as usize).clamp(1, q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe_idx: Vec<usize> = (0..p).collect();
    probe_idx.shuffle(&mut rng);
    probe_idx.truncate(keep_p);
    probe_idx.sort_unstable();
    let mut meas_idx: Vec<usize> = (0..q).collect();
    meas_idx.shuffle(&mut rng);
    meas_idx.truncate(keep_q);
    meas_idx.sort_unstable();

    let mut value = vec![0.0_f64; p * q];
    for r in &data.records {
        value[r.probe * q + r.measurement] = r.value;
    }
    let probes = ProbeSet {
        dim: data.probes.dim,
        states: probe_idx.iter().map(|&i| data.probes.states[i].clone()).collect(),
    };
    let measurements = MeasurementSet {
        dim: data.measurements.dim,
        operators: meas_idx.iter().map(|&j| data.measurements.operators[j].clone()).collect(),
        projective: data.measurements.projective,
    };
    let mut records = Vec::with_capacity(keep_p * keep_q);
    for (ni, &oi) in probe_idx.iter().enumerate() {
        for (nj, &oj) in meas_idx.iter().enumerate() {
            records.push(Record { probe: ni, measurement: nj, value: value[oi * q + oj] });
        }
    }
    TomographyDataset::new(probes, measurements, records)
}

/// Disjoint record partition with shared probes and measurements. The test
/// side gets round(fraction·n) records.
pub fn train_test_split(
    data: &TomographyDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(TomographyDataset, TomographyDataset)> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(QptError::Invalid(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = data.records.len();
    if n < 2 {
        return Err(QptError::Invalid("need at least 2 records to split".into()));
    }
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let (test_idx, train_idx) = idx.split_at(n_test);
    let mut test_idx = test_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    let pick = |ids: &[usize]| -> Result<TomographyDataset> {
        TomographyDataset::new(
            data.probes.clone(),
            data.measurements.clone(),
            ids.iter().map(|&i| data.records[i]).collect(),
        )
    };
    Ok((pick(&train_idx)?, pick(&test_idx)?))
}

/// Choi fidelity and Frobenius Choi distance between two channels.
pub fn evaluate(fitted: &KrausChannel, truth: &KrausChannel) -> Result<Evaluation> {
    if fitted.dim() != truth.dim() {
        return Err(QptError::Dimension(format!(
            "fitted dim {} vs truth dim {}",
            fitted.dim(),
            truth.dim()
        )));
    }
    let jf = fitted.to_choi();
    let jt = truth.to_choi();
    Ok(Evaluation {
        fidelity: channel_fidelity(&jf, &jt)?,
        choi_distance: fdist(jf.matrix(), jt.matrix()),
    })
}
