//! Reference single-qubit detectors: five IBM and five Rigetti qubits,
//! given by their first effect `M_1`; the second is `I - M_1`. The same data
//! ships as JSON under `fixtures/povm/`.

use num_complex::Complex64;

use crate::matrix::ComplexMatrix;
use crate::povm::Povm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Device {
    Ibm,
    Rigetti,
}

impl Device {
    pub fn slug(self) -> &'static str {
        match self {
            Device::Ibm => "ibm",
            Device::Rigetti => "rigetti",
        }
    }
}

// (m00, Re m01, Im m01, m11)
const IBM: [(f64, f64, f64, f64); 5] = [
    (0.963, 0.004, 0.0, 0.137),
    (0.99, 0.002, -0.001, 0.37),
    (0.986, -0.001, 0.0, 0.065),
    (0.919, 0.003, -0.003, 0.148),
    (0.98, 0.0, -0.002, 0.155),
];

const RIGETTI: [(f64, f64, f64, f64); 5] = [
    (0.975, -0.002, 0.0, 0.124),
    (0.966, 0.002, 0.002, 0.101),
    (0.987, 0.001, -0.001, 0.066),
    (0.938, 0.002, 0.001, 0.184),
    (0.903, 0.012, -0.001, 0.155),
];

pub struct Fixture {
    pub name: String,
    pub device: Device,
    pub qubit: usize,
    pub povm: Povm,
}

pub fn first_effect(device: Device, qubit: usize) -> ComplexMatrix {
    let table = match device {
        Device::Ibm => &IBM,
        Device::Rigetti => &RIGETTI,
    };
    let (a, re, im, d) = table[qubit];
    let c = |re: f64, im: f64| Complex64::new(re, im);
    ComplexMatrix::from_row_major(vec![c(a, 0.0), c(re, im), c(re, -im), c(d, 0.0)]).expect("2x2")
}

pub fn povm(device: Device, qubit: usize) -> Povm {
    Povm::from_first_effect(first_effect(device, qubit)).expect("fixture POVMs are valid")
}

pub fn ibm(qubit: usize) -> Povm {
    povm(Device::Ibm, qubit)
}

pub fn rigetti(qubit: usize) -> Povm {
    povm(Device::Rigetti, qubit)
}

/// All ten fixtures, IBM first, named `ibm-q0` .. `rigetti-q4`.
pub fn all() -> Vec<Fixture> {
    [Device::Ibm, Device::Rigetti]
        .into_iter()
        .flat_map(|device| {
            (0..5).map(move |qubit| Fixture {
                name: format!("{}-q{qubit}", device.slug()),
                device,
                qubit,
                povm: povm(device, qubit),
            })
        })
        .collect()
}

pub fn by_name(name: &str) -> Option<Povm> {
    all().into_iter().find(|f| f.name == name).map(|f| f.povm)
}
