//! Dense statevector simulation of the RY/X/CNOT circuit family and the
//! layered-RY ansatz builder.
//!
//! Qubits are numbered 1..=n with q1 topmost; a basis label |b1 b2 .. bn>
//! lists q1 leftmost and maps to amplitude index sum(b_i * 2^(n-i)), so q1
//! owns the most significant bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on dense simulation size.
pub const MAX_QUBITS: usize = 16;

/// Normalized wavefunction over 2^n amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros computational basis state |0..0>.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[0] = Complex64::ONE;
        Ok(Self { n_qubits, amps })
    }

    /// A single computational basis state, given by amplitude index.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let mut sv = Self::zero_state(n_qubits)?;
        if index >= sv.amps.len() {
            return Err(Error::Numerical(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        sv.amps[0] = Complex64::ZERO;
        sv.amps[index] = Complex64::ONE;
        Ok(sv)
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::Numerical(format!(
                "expected {} amplitudes, got {}",
                1usize << n_qubits,
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("cannot normalize the zero vector".into()));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Index bit position owned by 1-based qubit label `qubit`.
    pub(crate) fn bit_of(n_qubits: usize, qubit: usize) -> usize {
        n_qubits - qubit
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

fn check_qubit(qubit: usize, n_qubits: usize) -> Result<()> {
    if qubit == 0 || qubit > n_qubits {
        return Err(Error::QubitOutOfRange { qubit, n_qubits });
    }
    Ok(())
}

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource {
    /// Fixed angle in radians.
    Fixed(f64),
    /// Zero-based index into the free parameter vector.
    Param(usize),
}

/// One gate of the supported set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Ry { qubit: usize, angle: AngleSource },
    X { qubit: usize },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            GateOp::Ry { qubit, .. } | GateOp::X { qubit } => check_qubit(qubit, n_qubits),
            GateOp::Cnot { control, target } => {
                check_qubit(control, n_qubits)?;
                check_qubit(target, n_qubits)?;
                if control == target {
                    return Err(Error::CnotSameQubit { qubit: control });
                }
                Ok(())
            }
        }
    }
}

/// Applies a 2x2 unitary to one qubit of the amplitude buffer.
pub(crate) fn apply_one_qubit(
    amps: &mut [Complex64],
    n_qubits: usize,
    qubit: usize,
    m: [Complex64; 4],
) {
    let mask = 1usize << StateVector::bit_of(n_qubits, qubit);
    for i in 0..amps.len() {
        if i & mask == 0 {
            let j = i | mask;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = m[0] * a0 + m[1] * a1;
            amps[j] = m[2] * a0 + m[3] * a1;
        }
    }
}

fn apply_gate_in_place(state: &mut StateVector, gate: &GateOp, theta: &[f64]) -> Result<()> {
    let n = state.n_qubits;
    gate.validate(n)?;
    match *gate {
        GateOp::Ry { qubit, angle } => {
            let phi = match angle {
                AngleSource::Fixed(a) => a,
                AngleSource::Param(j) => *theta.get(j).ok_or(Error::ParamIndexOutOfRange {
                    index: j,
                    p: theta.len(),
                })?,
            };
            let (s, c) = (phi / 2.0).sin_cos();
            let re = |x: f64| Complex64::new(x, 0.0);
            apply_one_qubit(state.amps_mut(), n, qubit, [re(c), re(-s), re(s), re(c)]);
        }
        GateOp::X { qubit } => {
            let mask = 1usize << StateVector::bit_of(n, qubit);
            let amps = state.amps_mut();
            for i in 0..amps.len() {
                if i & mask == 0 {
                    amps.swap(i, i | mask);
                }
            }
        }
        GateOp::Cnot { control, target } => {
            let cmask = 1usize << StateVector::bit_of(n, control);
            let tmask = 1usize << StateVector::bit_of(n, target);
            let amps = state.amps_mut();
            for i in 0..amps.len() {
                if i & cmask != 0 && i & tmask == 0 {
                    amps.swap(i, i | tmask);
                }
            }
        }
    }
    Ok(())
}

/// Applies one gate to a state, returning the transformed state.
pub fn apply_gate(state: &StateVector, gate: &GateOp, theta: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_in_place(&mut out, gate, theta)?;
    Ok(out)
}

/// Ordered gate list with `p` free rotation angles.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCircuit {
    n_qubits: usize,
    gates: Vec<GateOp>,
    p: usize,
}

impl AnsatzCircuit {
    /// Validates gate indices and checks that parameter indices cover 0..p
    /// with no gaps.
    pub fn new(n_qubits: usize, gates: Vec<GateOp>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let mut p = 0usize;
        for g in &gates {
            g.validate(n_qubits)?;
            if let GateOp::Ry {
                angle: AngleSource::Param(j),
                ..
            } = g
            {
                p = p.max(j + 1);
            }
        }
        let mut used = vec![false; p];
        for g in &gates {
            if let GateOp::Ry {
                angle: AngleSource::Param(j),
                ..
            } = g
            {
                used[*j] = true;
            }
        }
        if let Some(missing) = used.iter().position(|u| !u) {
            return Err(Error::UnusedParamIndex { p, missing });
        }
        Ok(Self { n_qubits, gates, p })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    /// Number of free parameters.
    pub fn param_count(&self) -> usize {
        self.p
    }

    /// Runs the circuit on |0..0> with the given parameter vector.
    pub fn prepare_state(&self, theta: &[f64]) -> Result<StateVector> {
        if theta.len() != self.p {
            return Err(Error::ParamVectorLength {
                got: theta.len(),
                expected: self.p,
            });
        }
        let mut state = StateVector::zero_state(self.n_qubits)?;
        for g in &self.gates {
            apply_gate_in_place(&mut state, g, theta)?;
        }
        Ok(state)
    }
}

/// Builds the layered hardware-efficient ansatz used throughout:
/// X gates on `x_prefix`, an RY on every qubit, then `layers` repetitions of
/// a CNOT ladder (q1->q2, .., q(n-1)->qn) followed by an RY on every qubit,
/// and finally X gates on `x_suffix`. Parameter count is n*(layers+1).
pub fn build_layered_ry_ansatz(
    n_qubits: usize,
    layers: usize,
    x_prefix: &[usize],
    x_suffix: &[usize],
) -> Result<AnsatzCircuit> {
    check_qubit_count(n_qubits)?;
    let mut gates = Vec::new();
    for &q in x_prefix {
        gates.push(GateOp::X { qubit: q });
    }
    let mut next_param = 0usize;
    let mut ry_layer = |gates: &mut Vec<GateOp>| {
        for q in 1..=n_qubits {
            gates.push(GateOp::Ry {
                qubit: q,
                angle: AngleSource::Param(next_param),
            });
            next_param += 1;
        }
    };
    ry_layer(&mut gates);
    for _ in 0..layers {
        for q in 1..n_qubits {
            gates.push(GateOp::Cnot {
                control: q,
                target: q + 1,
            });
        }
        ry_layer(&mut gates);
    }
    for &q in x_suffix {
        gates.push(GateOp::X { qubit: q });
    }
    AnsatzCircuit::new(n_qubits, gates)
}

/// JSON-facing ansatz description (`n_qubits`, `layers`, `x_prefix`,
/// `x_suffix`), with qubit labels 1-based.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub layers: usize,
    #[serde(default)]
    pub x_prefix: Vec<usize>,
    #[serde(default)]
    pub x_suffix: Vec<usize>,
}

impl AnsatzSpec {
    pub fn build(&self) -> Result<AnsatzCircuit> {
        build_layered_ry_ansatz(self.n_qubits, self.layers, &self.x_prefix, &self.x_suffix)
    }

    /// The four-qubit, four-layer circuit with X gates appended on q2 and q3.
    pub fn lih() -> Self {
        Self {
            n_qubits: 4,
            layers: 4,
            x_prefix: vec![],
            x_suffix: vec![2, 3],
        }
    }

    /// The two-qubit, one-layer circuit with an X prepended on q1.
    pub fn h2() -> Self {
        Self {
            n_qubits: 2,
            layers: 1,
            x_prefix: vec![1],
            x_suffix: vec![],
        }
    }
}
