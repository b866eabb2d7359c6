//! Embedding sets, the EMBD file format, manifests and seeded subsampling.
//!
//! EMBD layout (all integers little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `b"EMBD"`                |
//! | 4      | 2    | version, currently 1           |
//! | 6      | 2    | reserved, zero                 |
//! | 8      | 4    | dim (u32)                      |
//! | 12     | 8    | sequence count n (u64)         |
//! | 20     | 8    | total frame count (u64)        |
//! | 28     | 4    | reserved, zero                 |
//! | 32     | 8n   | sequence lengths (u64 each)    |
//! | 32+8n  | 8Td  | frames as f64, sequence-major then row-major |
//!
//! Frames are stored at full binary64 precision so that storage never adds a
//! rounding regime on top of the spectral tolerances.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::MatRef;
use crate::rng::{self, Stream};

pub const MAGIC: [u8; 4] = *b"EMBD";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

/// One hour of audio at 50 frames per second, a common frame-budget choice.
pub const FRAMES_PER_HOUR_AT_50HZ: usize = 180_000;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unrecognized format: bad magic bytes")]
    UnrecognizedFormat,
    #[error("unsupported EMBD version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated payload: header declares {expected} bytes, file has {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("non-finite frame value in sequence {sequence}")]
    NonFinite { sequence: usize },
    #[error("empty embedding set")]
    EmptySet,
    #[error("invalid embedding data: {0}")]
    Invalid(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

impl FormatError {
    /// Stable short tag for each failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Io(_) => "io",
            FormatError::UnrecognizedFormat => "bad_magic",
            FormatError::UnsupportedVersion(_) => "unsupported_version",
            FormatError::Truncated { .. } => "truncated",
            FormatError::NonFinite { .. } => "non_finite",
            FormatError::EmptySet => "empty_set",
            FormatError::Invalid(_) => "invalid",
            FormatError::Manifest(_) => "manifest",
        }
    }
}

/// A validated, immutable collection of frame sequences.
///
/// Frames are kept in one contiguous row-major buffer so the pooled frame
/// matrix is available without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    lengths: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

/// Borrowed view of one sequence: `len()` rows of `dim` values.
#[derive(Debug, Clone, Copy)]
pub struct FrameSequence<'a> {
    dim: usize,
    frames: &'a [f64],
}

impl<'a> FrameSequence<'a> {
    pub fn len(&self) -> usize {
        self.frames.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &'a [f64] {
        &self.frames[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        self.frames.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.frames
    }

    pub fn as_matrix(&self) -> MatRef<'a> {
        MatRef::new(self.len(), self.dim, self.frames)
    }

    /// Sum of the frames over time.
    pub fn time_sum(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        for row in self.rows() {
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v;
            }
        }
        sum
    }
}

impl EmbeddingSet {
    /// Builds a set from sequence lengths and the concatenated row-major frames.
    pub fn new(dim: usize, lengths: Vec<usize>, data: Vec<f64>) -> Result<Self, FormatError> {
        if dim == 0 {
            return Err(FormatError::Invalid("dim must be positive".into()));
        }
        if lengths.is_empty() {
            return Err(FormatError::EmptySet);
        }
        if let Some(i) = lengths.iter().position(|&l| l == 0) {
            return Err(FormatError::Invalid(format!(
                "sequence {i} has zero length"
            )));
        }
        let total: usize = lengths.iter().sum();
        if data.len() != total * dim {
            return Err(FormatError::Invalid(format!(
                "expected {} values for {total} frames of dim {dim}, got {}",
                total * dim,
                data.len()
            )));
        }
        let mut offsets = Vec::with_capacity(lengths.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &l in &lengths {
            acc += l;
            offsets.push(acc);
        }
        for (i, w) in offsets.windows(2).enumerate() {
            if data[w[0] * dim..w[1] * dim].iter().any(|v| !v.is_finite()) {
                return Err(FormatError::NonFinite { sequence: i });
            }
        }
        Ok(Self {
            dim,
            lengths,
            offsets,
            data,
        })
    }

    /// Builds a set from per-sequence row-major buffers.
    pub fn from_sequences<S: AsRef<[f64]>>(
        dim: usize,
        sequences: &[S],
    ) -> Result<Self, FormatError> {
        if dim == 0 {
            return Err(FormatError::Invalid("dim must be positive".into()));
        }
        let mut lengths = Vec::with_capacity(sequences.len());
        let mut data = Vec::new();
        for (i, s) in sequences.iter().enumerate() {
            let s = s.as_ref();
            if s.len() % dim != 0 {
                return Err(FormatError::Invalid(format!(
                    "sequence {i} has {} values, not a multiple of dim {dim}",
                    s.len()
                )));
            }
            lengths.push(s.len() / dim);
            data.extend_from_slice(s);
        }
        Self::new(dim, lengths, data)
    }

    /// Each row becomes its own length-1 sequence.
    pub fn from_frames(frames: MatRef<'_>) -> Result<Self, FormatError> {
        Self::new(
            frames.cols(),
            vec![1; frames.rows()],
            frames.as_slice().to_vec(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sequences(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_frames(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn sequence(&self, i: usize) -> FrameSequence<'_> {
        FrameSequence {
            dim: self.dim,
            frames: &self.data[self.offsets[i] * self.dim..self.offsets[i + 1] * self.dim],
        }
    }

    pub fn sequences(&self) -> impl ExactSizeIterator<Item = FrameSequence<'_>> + '_ {
        (0..self.n_sequences()).map(move |i| self.sequence(i))
    }

    /// All frames of all sequences, concatenated in sequence order.
    pub fn pooled(&self) -> MatRef<'_> {
        MatRef::new(self.total_frames(), self.dim, &self.data)
    }

    /// Applies `f` to every frame, keeping sequence boundaries.
    pub fn map_frames(
        &self,
        out_dim: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<Self, FormatError> {
        let mut data = vec![0.0; self.total_frames() * out_dim];
        for (src, dst) in self
            .pooled()
            .row_iter()
            .zip(data.chunks_exact_mut(out_dim.max(1)))
        {
            f(src, dst);
        }
        Self::new(out_dim, self.lengths.clone(), data)
    }

    fn select_sequences(&self, keep: &[usize]) -> Self {
        let mut lengths = Vec::with_capacity(keep.len());
        let mut data = Vec::new();
        for &i in keep {
            lengths.push(self.lengths[i]);
            data.extend_from_slice(self.sequence(i).as_slice());
        }
        Self::new(self.dim, lengths, data).expect("subset of a valid set is valid")
    }
}

/// Writes `set` in the EMBD format.
///
/// An `EmbeddingSet` cannot hold non-finite values, so the only failure here
/// is I/O.
pub fn write_embeddings(
    set: &EmbeddingSet,
    destination: impl AsRef<Path>,
) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(destination)?);
    write_to(set, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_to(set: &EmbeddingSet, w: &mut impl Write) -> Result<(), FormatError> {
    let dim = u32::try_from(set.dim)
        .map_err(|_| FormatError::Invalid(format!("dim {} does not fit in u32", set.dim)))?;
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..6].copy_from_slice(&VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&dim.to_le_bytes());
    header[12..20].copy_from_slice(&(set.n_sequences() as u64).to_le_bytes());
    header[20..28].copy_from_slice(&(set.total_frames() as u64).to_le_bytes());
    w.write_all(&header)?;
    for &l in &set.lengths {
        w.write_all(&(l as u64).to_le_bytes())?;
    }
    for v in &set.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads and validates an EMBD file.
pub fn read_embeddings(source: impl AsRef<Path>) -> Result<EmbeddingSet, FormatError> {
    let file = File::open(source)?;
    let file_len = file.metadata()?.len();
    let mut r = BufReader::with_capacity(1 << 16, file);

    let mut header = [0u8; HEADER_LEN];
    let got = read_up_to(&mut r, &mut header)?;
    if got < MAGIC.len() || header[0..4] != MAGIC {
        return Err(FormatError::UnrecognizedFormat);
    }
    if got < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN as u64,
            actual: file_len,
        });
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    if header[6..8] != [0, 0] || header[28..32] != [0; 4] {
        return Err(FormatError::Invalid(
            "reserved header bytes are not zero".into(),
        ));
    }
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as u64;
    let n = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let total = u64::from_le_bytes(header[20..28].try_into().unwrap());
    if dim == 0 {
        return Err(FormatError::Invalid("dim must be positive".into()));
    }
    if n == 0 {
        return Err(FormatError::EmptySet);
    }

    // Declared size can overflow on corrupt headers; such a file can never be
    // long enough.
    let expected = n
        .checked_mul(8)
        .and_then(|b| total.checked_mul(dim)?.checked_mul(8)?.checked_add(b))
        .and_then(|b| b.checked_add(HEADER_LEN as u64))
        .unwrap_or(u64::MAX);
    if file_len < expected {
        return Err(FormatError::Truncated {
            expected,
            actual: file_len,
        });
    }
    if file_len > expected {
        return Err(FormatError::Invalid(format!(
            "{} trailing bytes after payload",
            file_len - expected
        )));
    }

    let n = n as usize;
    let dim = dim as usize;
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    let lengths: Vec<usize> = buf
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let sum: u64 = lengths.iter().map(|&l| l as u64).sum();
    if sum != total {
        return Err(FormatError::Invalid(format!(
            "sequence lengths sum to {sum}, header declares {total}"
        )));
    }

    let total = total as usize;
    let mut data = Vec::with_capacity(total * dim);
    let mut chunk = vec![0u8; 8 * dim * 1024];
    let mut remaining = total * dim;
    while remaining > 0 {
        let take = remaining.min(dim * 1024);
        r.read_exact(&mut chunk[..take * 8])?;
        data.extend(
            chunk[..take * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap())),
        );
        remaining -= take;
    }
    EmbeddingSet::new(dim, lengths, data)
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleUnit {
    Frames,
    #[default]
    Sequences,
}

impl std::str::FromStr for SampleUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frames" | "frame" => Ok(SampleUnit::Frames),
            "sequences" | "sequence" => Ok(SampleUnit::Sequences),
            other => Err(format!("unknown sample unit `{other}`")),
        }
    }
}

/// Frame budget for subsampling. `max_frames: None` keeps everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SampleSpec {
    pub max_frames: Option<NonZeroUsize>,
    pub seed: u64,
    pub unit: SampleUnit,
}

impl SampleSpec {
    pub fn unlimited() -> Self {
        Self::default()
    }

    /// `max_frames == 0` means unlimited.
    pub fn new(max_frames: usize, seed: u64, unit: SampleUnit) -> Self {
        Self {
            max_frames: NonZeroUsize::new(max_frames),
            seed,
            unit,
        }
    }
}

/// Deterministically reduces `set` to at most `spec.max_frames` frames.
///
/// With [`SampleUnit::Sequences`], sequences are visited in a seeded shuffle
/// order and kept whenever they still fit in the remaining budget; the first
/// visited sequence is always kept even if it alone exceeds the budget. Kept
/// sequences retain their original order.
///
/// With [`SampleUnit::Frames`], frames are drawn uniformly without
/// replacement from the pooled frames and returned, in original order, as
/// length-1 sequences.
pub fn subsample(set: &EmbeddingSet, spec: &SampleSpec) -> EmbeddingSet {
    let Some(budget) = spec.max_frames.map(NonZeroUsize::get) else {
        return set.clone();
    };
    if budget >= set.total_frames() {
        return set.clone();
    }
    let mut rng = rng::stream(spec.seed, Stream::Subsample);
    match spec.unit {
        SampleUnit::Sequences => {
            let mut order: Vec<usize> = (0..set.n_sequences()).collect();
            order.shuffle(&mut rng);
            let mut keep = Vec::new();
            let mut used = 0;
            for i in order {
                let len = set.lengths[i];
                if keep.is_empty() || used + len <= budget {
                    keep.push(i);
                    used += len;
                }
                if used >= budget {
                    break;
                }
            }
            keep.sort_unstable();
            set.select_sequences(&keep)
        }
        SampleUnit::Frames => {
            let mut picked = index::sample(&mut rng, set.total_frames(), budget).into_vec();
            picked.sort_unstable();
            let pooled = set.pooled();
            let mut data = Vec::with_capacity(budget * set.dim);
            for i in picked {
                data.extend_from_slice(pooled.row(i));
            }
            EmbeddingSet::new(set.dim, vec![1; budget], data).expect("sampled frames are valid")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub model_id: String,
    pub checkpoint_step: i64,
    pub layer: i64,
    pub path: PathBuf,
    pub dataset_tag: String,
}

impl ManifestEntry {
    pub fn key(&self) -> (&str, i64, i64) {
        (&self.model_id, self.checkpoint_step, self.layer)
    }
}

/// Index of embedding dumps, stored as a JSON array of [`ManifestEntry`].
///
/// Relative paths are resolved against the manifest's directory on load.
/// Whether each path is a readable EMBD file is only known when the entry is
/// processed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, FormatError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.key()) {
                return Err(FormatError::Manifest(format!(
                    "duplicate entry for model {} step {} layer {}",
                    e.model_id, e.checkpoint_step, e.layer
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(text).map_err(|e| FormatError::Manifest(e.to_string()))?;
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let path = path.as_ref();
        let mut manifest = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for e in &mut manifest.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("manifest entries serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
