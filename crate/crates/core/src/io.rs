//! On-disk formats: POVMs, calibration data, counts, characterization
//! results and report envelopes as JSON, figure data as CSV.
//!
//! Outcome bitstrings put qubit 0 leftmost, i.e. as the most significant bit
//! of the outcome index.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distances::DistanceBound;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::mitigation::Characterization;
use crate::noise::{correction_matrix, CorrectionMatrix, RealMatrix, StochasticMatrix};
use crate::povm::Povm;
use crate::tomography::{qubit_count, CalibrationRecord, CountsVector};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL: &str = "qrem";

fn check_version(found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported format_version {found} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn index_to_bitstring(index: usize, qubits: usize) -> String {
    (0..qubits)
        .map(|k| {
            if index >> (qubits - 1 - k) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub fn bitstring_to_index(bits: &str, qubits: usize) -> Result<usize> {
    if bits.len() != qubits || qubits >= usize::BITS as usize {
        return Err(Error::Parse(format!(
            "bitstring {bits:?} is not {qubits} bits long"
        )));
    }
    bits.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        _ => Err(Error::Parse(format!("bitstring {bits:?} contains {c:?}"))),
    })
}

fn counts_from_map(map: &BTreeMap<String, u64>, qubits: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; 1 << qubits];
    for (bits, &c) in map {
        counts[bitstring_to_index(bits, qubits)?] += c;
    }
    Ok(counts)
}

fn counts_to_map(counts: &[u64], qubits: usize) -> BTreeMap<String, u64> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (index_to_bitstring(i, qubits), c))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    /// `effects[i][row][col] = [re, im]`.
    pub effects: Vec<Vec<Vec<[f64; 2]>>>,
}

impl PovmFile {
    pub fn from_povm(povm: &Povm, name: Option<String>) -> Self {
        let effects = povm
            .effects()
            .iter()
            .map(|e| {
                e.as_matrix()
                    .rows()
                    .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                    .collect()
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            name,
            dim: povm.dim(),
            effects,
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        check_version(self.format_version)?;
        let matrices = self
            .effects
            .iter()
            .map(|rows| {
                if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: rows.len(),
                    });
                }
                let data = rows
                    .iter()
                    .flatten()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect();
                ComplexMatrix::from_row_major(data)
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::from_matrices(matrices)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    /// Preparation label such as `"x+ z-"`.
    pub state: String,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub format_version: u32,
    pub qubits: usize,
    pub records: Vec<CalibrationEntry>,
}

impl CalibrationFile {
    pub fn from_records(records: &[CalibrationRecord]) -> Self {
        let qubits = records.first().map_or(0, |r| qubit_count(&r.label));
        Self {
            format_version: FORMAT_VERSION,
            qubits,
            records: records
                .iter()
                .map(|r| CalibrationEntry {
                    state: r.label.clone(),
                    shots: r.counts.shots(),
                    counts: counts_to_map(r.counts.counts(), qubits),
                })
                .collect(),
        }
    }

    /// Errors name the offending record.
    pub fn to_records(&self) -> Result<Vec<CalibrationRecord>> {
        check_version(self.format_version)?;
        self.records
            .iter()
            .enumerate()
            .map(|(k, entry)| {
                let wrap = |e: Error| Error::Parse(format!("record {k} ({:?}): {e}", entry.state));
                if qubit_count(&entry.state) != self.qubits {
                    return Err(wrap(Error::BadLabel(entry.state.clone())));
                }
                let counts = counts_from_map(&entry.counts, self.qubits).map_err(wrap)?;
                let counts = CountsVector::with_shots(entry.shots, counts).map_err(wrap)?;
                CalibrationRecord::new(&entry.state, counts).map_err(wrap)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsFile {
    pub format_version: u32,
    pub qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl CountsFile {
    pub fn from_counts(counts: &CountsVector) -> Result<Self> {
        let qubits = counts.len().trailing_zeros() as usize;
        if 1 << qubits != counts.len() {
            return Err(Error::InvalidCounts(format!(
                "{} outcomes is not a power of two",
                counts.len()
            )));
        }
        Ok(Self {
            format_version: FORMAT_VERSION,
            qubits,
            shots: counts.shots(),
            counts: counts_to_map(counts.counts(), qubits),
        })
    }

    pub fn to_counts(&self) -> Result<CountsVector> {
        check_version(self.format_version)?;
        CountsVector::with_shots(self.shots, counts_from_map(&self.counts, self.qubits)?)
    }
}

/// Characterization of a detector: what `mitigate` needs to correct counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationFile {
    pub format_version: u32,
    pub outcomes: usize,
    pub lambda: RealMatrix,
    pub correction: RealMatrix,
    pub norm_1to1: f64,
    /// `D_op(M, P)`.
    pub distance_to_ideal: DistanceBound,
    /// `D_op(M, Lambda P)`.
    pub coherent_distance: DistanceBound,
    /// `||Lambda^-1||_{1->1} D_op(M, Lambda P)`.
    pub infinite_statistics_delta: f64,
    pub renormalization_residual: f64,
}

impl CharacterizationFile {
    pub fn from_characterization(ch: &Characterization) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            outcomes: ch.lambda.n(),
            lambda: ch.lambda.matrix().clone(),
            correction: ch.correction.matrix().clone(),
            norm_1to1: ch.norm_1to1(),
            distance_to_ideal: ch.distance_to_ideal,
            coherent_distance: ch.coherent,
            infinite_statistics_delta: ch.infinite_statistics_delta(),
            renormalization_residual: ch.renormalization_residual,
        }
    }

    /// Rebuilds `Lambda^-1` from the stored `Lambda`.
    pub fn correction_matrix(&self) -> Result<CorrectionMatrix> {
        check_version(self.format_version)?;
        correction_matrix(&StochasticMatrix::new(self.lambda.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<InputDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
}

/// Envelope written by every command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile<T> {
    pub format_version: u32,
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub provenance: Provenance,
    pub result: T,
}

impl<T> ReportFile<T> {
    pub fn new(kind: &str, provenance: Provenance, result: T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.to_string(),
            provenance,
            result,
        }
    }
}

/// CSV with a header row and shortest round-trip floats, LF line endings.
pub fn write_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::BoundOptions;
    use crate::fixtures;
    use crate::mitigation::characterize;
    use crate::povm::projective_computational;
    use crate::tomography::{synthesize_records, ProbeSet};
    use proptest::prelude::*;

    #[test]
    fn bitstrings() {
        assert_eq!(index_to_bitstring(1, 2), "01");
        assert_eq!(index_to_bitstring(2, 2), "10");
        assert_eq!(bitstring_to_index("10", 2).unwrap(), 2);
        assert_eq!(bitstring_to_index("011", 3).unwrap(), 3);
        assert!(bitstring_to_index("1", 2).is_err());
        assert!(bitstring_to_index("1x", 2).is_err());
    }

    #[test]
    fn povm_file_round_trips() {
        for fx in fixtures::all() {
            let file = PovmFile::from_povm(&fx.povm, Some(fx.name.clone()));
            let text = to_json(&file);
            let back: PovmFile = from_json(&text).unwrap();
            assert_eq!(back, file);
            assert_eq!(back.to_povm().unwrap(), fx.povm);
        }
    }

    #[test]
    fn povm_file_rejects_bad_shapes_and_versions() {
        let mut file = PovmFile::from_povm(&fixtures::ibm(0), None);
        file.effects[0].pop();
        assert!(file.to_povm().is_err());
        let mut file = PovmFile::from_povm(&fixtures::ibm(0), None);
        file.format_version = 9;
        assert!(matches!(file.to_povm(), Err(Error::Parse(_))));
    }

    #[test]
    fn calibration_round_trip() {
        let povm = crate::povm::tensor(&fixtures::ibm(0), &fixtures::ibm(1));
        let records = synthesize_records(&povm, &ProbeSet::Minimal.labels(2), 1000).unwrap();
        let file = CalibrationFile::from_records(&records);
        assert_eq!(file.qubits, 2);
        let back: CalibrationFile = from_json(&to_json(&file)).unwrap();
        assert_eq!(back.to_records().unwrap(), records);
    }

    #[test]
    fn calibration_sum_mismatch_names_record() {
        let records =
            synthesize_records(&fixtures::ibm(0), &ProbeSet::Minimal.labels(1), 1000).unwrap();
        let mut file = CalibrationFile::from_records(&records);
        file.records[2].shots = 999;
        let msg = file.to_records().unwrap_err().to_string();
        assert!(msg.contains("record 2") && msg.contains("z+"), "{msg}");
    }

    #[test]
    fn counts_file_round_trip() {
        let c = CountsVector::new(vec![1, 2, 3, 4]).unwrap();
        let f = CountsFile::from_counts(&c).unwrap();
        assert_eq!(f.counts["10"], 3);
        assert_eq!(
            from_json::<CountsFile>(&to_json(&f))
                .unwrap()
                .to_counts()
                .unwrap(),
            c
        );
        assert!(CountsFile::from_counts(&CountsVector::new(vec![1, 2, 3]).unwrap()).is_err());
    }

    #[test]
    fn characterization_file_rebuilds_correction() {
        let ch = characterize(
            &fixtures::ibm(0),
            &projective_computational(1),
            &BoundOptions::default(),
        )
        .unwrap();
        let file = CharacterizationFile::from_characterization(&ch);
        let back: CharacterizationFile = from_json(&to_json(&file)).unwrap();
        assert_eq!(back, file);
        assert_eq!(
            back.correction_matrix().unwrap().matrix(),
            ch.correction.matrix()
        );
    }

    #[test]
    fn csv_layout() {
        let s = write_csv(&["a", "b"], &[vec![0.1, 1.0], vec![1e-20, -0.5]]);
        assert_eq!(s, "a,b\n0.1,1.0\n1e-20,-0.5\n");
    }

    #[test]
    fn digest_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    proptest! {
        #[test]
        fn floats_round_trip_through_json(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let back: Vec<f64> = from_json(&to_json(&vec![x])).unwrap();
            prop_assert_eq!(back[0].to_bits(), x.to_bits());
        }

        #[test]
        fn bitstring_round_trip(q in 1usize..12, seed in any::<usize>()) {
            let i = seed % (1 << q);
            prop_assert_eq!(bitstring_to_index(&index_to_bitstring(i, q), q).unwrap(), i);
        }
    }
}
