//! JSON source documents: alphabets, sparse probability entries, optional
//! distortion measure and optional auxiliary channel.
//!
//! ```json
//! {
//!   "alphabets": {"S1": ["0","1"], "S2": [...], "Y1": [...], "Y2": [...]},
//!   "probs": [{"s1": "0", "s2": "0", "y1": "0", "y2": "0", "p": 0.25}, ...],
//!   "distortion": {"alphabet": ["0","1"], "table": {"0": {"0": 0.0, "1": 1.0}}},
//!   "aux": {"u0": ["0","1"], "u1": ["0"],
//!           "cond": [{"s1": "0", "s2": "0", "u0": "0", "u1": "0", "p": 1.0}, ...]}
//! }
//! ```
//!
//! Unlisted probability atoms are zero. Entries must sum to 1 within the pmf
//! tolerance.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::aux::{AuxChannel, DistortionMeasure};
use crate::error::Error;
use crate::pmf::{FiniteAlphabet, JointPmf, Role};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbEntry {
    pub s1: String,
    pub s2: String,
    pub y1: String,
    pub y2: String,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionDoc {
    pub alphabet: Vec<String>,
    /// `table[s1_label][shat_label] = d1(s1, ŝ1)`
    pub table: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondEntry {
    pub s1: String,
    pub s2: String,
    pub u0: String,
    pub u1: String,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuxDoc {
    pub u0: Vec<String>,
    pub u1: Vec<String>,
    pub cond: Vec<CondEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub alphabets: BTreeMap<String, Vec<String>>,
    pub probs: Vec<ProbEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<AuxDoc>,
}

impl SourceSpec {
    pub fn parse(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Io(format!("source document: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("source document serializes")
    }

    fn alphabet(&self, key: &str) -> Result<FiniteAlphabet, Error> {
        let labels = self
            .alphabets
            .get(key)
            .ok_or_else(|| Error::Io(format!("missing alphabet {key:?}")))?;
        FiniteAlphabet::new(labels.iter().cloned())
    }

    /// Builds the joint source pmf, reporting which entry is malformed.
    pub fn build_source(&self) -> Result<JointPmf, Error> {
        let s1 = self.alphabet("S1")?;
        let s2 = self.alphabet("S2")?;
        let y1 = self.alphabet("Y1")?;
        let y2 = self.alphabet("Y2")?;
        let mut probs = vec![0.0f64; s1.size() * s2.size() * y1.size() * y2.size()];
        for (line, e) in self.probs.iter().enumerate() {
            let idx = |alpha: &FiniteAlphabet, label: &str, role: &str| {
                alpha.index_of(label).ok_or_else(|| {
                    Error::Io(format!(
                        "probs[{line}]: label {label:?} not in alphabet {role}"
                    ))
                })
            };
            let off = ((idx(&s1, &e.s1, "S1")? * s2.size() + idx(&s2, &e.s2, "S2")?)
                * y1.size()
                + idx(&y1, &e.y1, "Y1")?)
                * y2.size()
                + idx(&y2, &e.y2, "Y2")?;
            probs[off] += e.p;
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > crate::pmf::NORMALIZATION_TOL {
            return Err(Error::Io(format!(
                "probabilities sum to {total}, deficit {}",
                1.0 - total
            )));
        }
        JointPmf::source(s1, s2, y1, y2, probs)
    }

    pub fn build_distortion(&self, source: &JointPmf) -> Result<Option<DistortionMeasure>, Error> {
        let Some(doc) = &self.distortion else {
            return Ok(None);
        };
        let s1 = source.alphabet(Role::S1)?;
        let rec = FiniteAlphabet::new(doc.alphabet.iter().cloned())?;
        let mut table = vec![0.0f64; s1.size() * rec.size()];
        for (s1_label, row) in &doc.table {
            let i = s1
                .index_of(s1_label)
                .ok_or_else(|| Error::Io(format!("distortion: unknown S1 label {s1_label:?}")))?;
            for (shat_label, &d) in row {
                let j = rec.index_of(shat_label).ok_or_else(|| {
                    Error::Io(format!("distortion: unknown reconstruction label {shat_label:?}"))
                })?;
                table[i * rec.size() + j] = d;
            }
        }
        Ok(Some(DistortionMeasure::new(rec, s1.size(), table)?))
    }

    pub fn build_aux(&self, source: &JointPmf) -> Result<Option<AuxChannel>, Error> {
        let Some(doc) = &self.aux else {
            return Ok(None);
        };
        let s1 = source.alphabet(Role::S1)?;
        let s2 = source.alphabet(Role::S2)?;
        let u0 = FiniteAlphabet::new(doc.u0.iter().cloned())?;
        let u1 = FiniteAlphabet::new(doc.u1.iter().cloned())?;
        let mut cond = vec![0.0f64; s1.size() * s2.size() * u0.size() * u1.size()];
        for (line, e) in doc.cond.iter().enumerate() {
            let idx = |alpha: &FiniteAlphabet, label: &str, role: &str| {
                alpha.index_of(label).ok_or_else(|| {
                    Error::Io(format!("aux.cond[{line}]: label {label:?} not in {role}"))
                })
            };
            let off = ((idx(s1, &e.s1, "S1")? * s2.size() + idx(s2, &e.s2, "S2")?)
                * u0.size()
                + idx(&u0, &e.u0, "U0")?)
                * u1.size()
                + idx(&u1, &e.u1, "U1")?;
            cond[off] += e.p;
        }
        Ok(Some(AuxChannel::new(
            u0,
            u1,
            s1.size(),
            s2.size(),
            cond,
        )?))
    }

    /// Serializes a pmf (and optional channel) back into the document form.
    pub fn from_parts(source: &JointPmf, aux: Option<&AuxChannel>) -> Result<Self, Error> {
        let mut alphabets = BTreeMap::new();
        for role in [Role::S1, Role::S2, Role::Y1, Role::Y2] {
            alphabets.insert(
                role.name().to_string(),
                source.alphabet(role)?.symbols().to_vec(),
            );
        }
        let s1 = source.alphabet(Role::S1)?;
        let s2 = source.alphabet(Role::S2)?;
        let y1 = source.alphabet(Role::Y1)?;
        let y2 = source.alphabet(Role::Y2)?;
        let mut probs = Vec::new();
        for (off, &p) in source.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let iy2 = off % y2.size();
            let iy1 = off / y2.size() % y1.size();
            let is2 = off / (y2.size() * y1.size()) % s2.size();
            let is1 = off / (y2.size() * y1.size() * s2.size());
            probs.push(ProbEntry {
                s1: s1.symbol(is1).to_string(),
                s2: s2.symbol(is2).to_string(),
                y1: y1.symbol(iy1).to_string(),
                y2: y2.symbol(iy2).to_string(),
                p,
            });
        }
        let aux = aux.map(|chan| {
            let u0 = chan.u0_alphabet();
            let u1 = chan.u1_alphabet();
            let mut cond = Vec::new();
            for is1 in 0..s1.size() {
                for is2 in 0..s2.size() {
                    for iu0 in 0..u0.size() {
                        for iu1 in 0..u1.size() {
                            let p = chan.prob(is1, is2, iu0, iu1);
                            if p == 0.0 {
                                continue;
                            }
                            cond.push(CondEntry {
                                s1: s1.symbol(is1).to_string(),
                                s2: s2.symbol(is2).to_string(),
                                u0: u0.symbol(iu0).to_string(),
                                u1: u1.symbol(iu1).to_string(),
                                p,
                            });
                        }
                    }
                }
            }
            AuxDoc {
                u0: u0.symbols().to_vec(),
                u1: u1.symbols().to_vec(),
                cond,
            }
        });
        Ok(SourceSpec {
            alphabets,
            probs,
            distortion: None,
            aux,
        })
    }
}
