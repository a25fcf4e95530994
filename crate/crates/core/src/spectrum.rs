//! Sparse spectra and their plain-text file format.
//!
//! ```text
//! # shape 8 8
//! 2 3 0.0000000000000000e0 2.0000000000000000e0
//! ```
//!
//! One entry per line: the `D` frequency indices followed by the real and
//! imaginary part of the amplitude. `#` starts a comment; the `# shape`
//! header is mandatory and must precede the entries.

use std::collections::btree_map::{self, BTreeMap};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::CubeShape;

/// Integer frequency index `m` with `0 <= m_k < N_k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FreqIndex(Vec<usize>);

impl FreqIndex {
    pub fn new(m: Vec<usize>) -> Self {
        FreqIndex(m)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Angular frequencies `2 pi m_k / N_k`.
    pub fn omega(&self, shape: &CubeShape) -> Vec<f64> {
        self.0
            .iter()
            .zip(shape.dims())
            .map(|(&m, &n)| TAU * m as f64 / n as f64)
            .collect()
    }
}

impl Deref for FreqIndex {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for FreqIndex {
    fn from(m: Vec<usize>) -> Self {
        FreqIndex(m)
    }
}

impl<const D: usize> From<[usize; D]> for FreqIndex {
    fn from(m: [usize; D]) -> Self {
        FreqIndex(m.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amp: Complex64,
    pub freq: FreqIndex,
}

impl Sinusoid {
    pub fn new(amp: Complex64, freq: impl Into<FreqIndex>) -> Self {
        Sinusoid { amp, freq: freq.into() }
    }
}

/// A finite set of on-grid sinusoids: frequency index to complex amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpectrum {
    shape: CubeShape,
    entries: BTreeMap<FreqIndex, Complex64>,
}

impl SparseSpectrum {
    pub fn new(shape: CubeShape) -> Self {
        SparseSpectrum {
            shape,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries<I, F>(shape: CubeShape, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (F, Complex64)>,
        F: Into<FreqIndex>,
    {
        let mut out = SparseSpectrum::new(shape);
        for (freq, amp) in entries {
            out.insert(freq, amp)?;
        }
        Ok(out)
    }

    pub fn shape(&self) -> &CubeShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, freq: &[usize]) -> Option<Complex64> {
        self.entries.get(&FreqIndex(freq.to_vec())).copied()
    }

    pub fn contains(&self, freq: &[usize]) -> bool {
        self.get(freq).is_some()
    }

    /// Sets the amplitude at `freq`; a zero amplitude removes the entry.
    pub fn insert(&mut self, freq: impl Into<FreqIndex>, amp: Complex64) -> Result<()> {
        let freq = freq.into();
        self.shape.check_index(&freq)?;
        if amp == Complex64::new(0.0, 0.0) {
            self.entries.remove(&freq);
        } else {
            self.entries.insert(freq, amp);
        }
        Ok(())
    }

    /// Adds `amp` to the amplitude at `freq` and drops the entry if the sum
    /// has magnitude `<= prune_tol`. Returns the amplitude left in place.
    pub fn accumulate(
        &mut self,
        freq: impl Into<FreqIndex>,
        amp: Complex64,
        prune_tol: f64,
    ) -> Result<Option<Complex64>> {
        let freq = freq.into();
        self.shape.check_index(&freq)?;
        match self.entries.entry(freq) {
            btree_map::Entry::Occupied(mut slot) => {
                let sum = *slot.get() + amp;
                if sum.norm() <= prune_tol {
                    slot.remove();
                    Ok(None)
                } else {
                    *slot.get_mut() = sum;
                    Ok(Some(sum))
                }
            }
            btree_map::Entry::Vacant(slot) => {
                if amp.norm() <= prune_tol {
                    Ok(None)
                } else {
                    slot.insert(amp);
                    Ok(Some(amp))
                }
            }
        }
    }

    pub fn remove(&mut self, freq: &[usize]) -> Option<Complex64> {
        self.entries.remove(&FreqIndex(freq.to_vec()))
    }

    /// Entries in canonical (lexicographic frequency) order.
    pub fn iter(&self) -> impl Iterator<Item = (&FreqIndex, Complex64)> + '_ {
        self.entries.iter().map(|(f, &a)| (f, a))
    }

    pub fn sinusoids(&self) -> impl Iterator<Item = Sinusoid> + '_ {
        self.entries.iter().map(|(f, &a)| Sinusoid {
            amp: a,
            freq: f.clone(),
        })
    }

    /// `sum |a|` over all entries.
    pub fn l1_norm(&self) -> f64 {
        self.entries.values().map(|a| a.norm()).sum()
    }

    pub fn scaled(&self, c: Complex64) -> SparseSpectrum {
        SparseSpectrum {
            shape: self.shape.clone(),
            entries: self.entries.iter().map(|(f, &a)| (f.clone(), a * c)).collect(),
        }
    }

    /// Same support, and every amplitude within `rel_tol * |truth|` of `truth`.
    pub fn matches(&self, truth: &SparseSpectrum, rel_tol: f64) -> bool {
        self.shape == truth.shape
            && self.entries.len() == truth.entries.len()
            && truth.entries.iter().all(|(f, &a)| {
                self.entries
                    .get(f)
                    .is_some_and(|&b| (b - a).norm() <= rel_tol * a.norm())
            })
    }

    /// Number of entries of `self` that are absent from `truth` or whose
    /// amplitude disagrees by more than `rel_tol`, plus entries of `truth`
    /// missing from `self`.
    pub fn mismatch_count(&self, truth: &SparseSpectrum, rel_tol: f64) -> usize {
        let wrong = self
            .entries
            .iter()
            .filter(|(f, &b)| {
                truth
                    .entries
                    .get(*f)
                    .is_none_or(|&a| (b - a).norm() > rel_tol * a.norm())
            })
            .count();
        let missing = truth.entries.keys().filter(|f| !self.entries.contains_key(*f)).count();
        wrong + missing
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# shape");
        for d in self.shape.dims() {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
        for (freq, amp) in &self.entries {
            for m in freq.iter() {
                let _ = write!(out, "{m} ");
            }
            let _ = writeln!(out, "{:.16e} {:.16e}", amp.re, amp.im);
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut spectrum: Option<SparseSpectrum> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let err = |message: String| Error::Parse { line, message };
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some("shape") {
                    if spectrum.is_some() {
                        return Err(err("duplicate shape header".into()));
                    }
                    let dims = words
                        .map(|w| w.parse::<usize>().map_err(|e| err(format!("bad extent {w:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    let shape = CubeShape::new(dims).map_err(|e| err(e.to_string()))?;
                    spectrum = Some(SparseSpectrum::new(shape));
                }
                continue;
            }
            let body = trimmed.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let spec = spectrum
                .as_mut()
                .ok_or_else(|| err("entry before the '# shape' header".into()))?;
            let words: Vec<&str> = body.split_whitespace().collect();
            let d = spec.shape.ndim();
            if words.len() != d + 2 {
                return Err(err(format!(
                    "expected {} fields ({d} indices, re, im), found {}",
                    d + 2,
                    words.len()
                )));
            }
            let freq = words[..d]
                .iter()
                .map(|w| w.parse::<usize>().map_err(|e| err(format!("bad index {w:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let parse_f = |w: &str| w.parse::<f64>().map_err(|e| err(format!("bad amplitude {w:?}: {e}")));
            let amp = Complex64::new(parse_f(words[d])?, parse_f(words[d + 1])?);
            if !spec.shape.contains(&freq) {
                return Err(err(format!("index {freq:?} outside shape {}", spec.shape)));
            }
            if spec.contains(&freq) {
                return Err(err(format!("duplicate frequency {freq:?}")));
            }
            spec.insert(freq, amp).map_err(|e| err(e.to_string()))?;
        }
        spectrum.ok_or(Error::Parse {
            line: 0,
            message: "missing '# shape' header".into(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumRepr {
    shape: CubeShape,
    entries: Vec<EntryRepr>,
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    freq: Vec<usize>,
    re: f64,
    im: f64,
}

impl Serialize for SparseSpectrum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpectrumRepr {
            shape: self.shape.clone(),
            entries: self
                .iter()
                .map(|(f, a)| EntryRepr {
                    freq: f.to_vec(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SpectrumRepr::deserialize(deserializer)?;
        SparseSpectrum::from_entries(
            repr.shape,
            repr.entries.into_iter().map(|e| (e.freq, Complex64::new(e.re, e.im))),
        )
        .map_err(serde::de::Error::custom)
    }
}
