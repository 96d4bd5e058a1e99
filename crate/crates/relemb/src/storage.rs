//! Binary artifact formats and atomic file writes.
//!
//! Three little-endian container formats, each ending with a 16-byte
//! vocabulary fingerprint so that mixed artifacts are rejected at load time:
//!
//! * `RELIDX01` — inverted index: magic, `u32` total docs, `u32` vocab size,
//!   `f64` avgdl, document lengths (`u32` each), then per term a `u32`
//!   posting count followed by `(u32 doc, u32 tf)` pairs.
//! * `RELSPR01` — CSR sparse matrix: magic, `u32` rows, `u32` cols, `u64`
//!   nnz, row offsets (`u64` x rows+1), column indices (`u32` x nnz),
//!   values (`f32` x nnz).
//! * `RELEMB01` — dense embedding matrix: magic, `u32` rows, `u32` cols,
//!   row-major `f32` values.
//!
//! Writes go through a temp file in the destination directory followed by a
//! rename, so readers never observe a partially written artifact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::embedding::{EmbeddingKind, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::index::{InvertedIndex, Posting};
use crate::reprs::WordReprMatrix;
use crate::sparse::SparseVector;

const MAGIC_INDEX: &[u8; 8] = b"RELIDX01";
const MAGIC_SPARSE: &[u8; 8] = b"RELSPR01";
const MAGIC_DENSE: &[u8; 8] = b"RELEMB01";

/// Writes `content` produced by `write_fn` to `path` atomically.
pub fn atomic_write(path: &Path, write_fn: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut writer = BufWriter::new(tmp.as_file_mut());
        write_fn(&mut writer)?;
        writer.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

struct LeReader<R: Read> {
    inner: R,
    path: String,
}

impl<R: Read> LeReader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|_| Error::BadFormat {
            path: self.path.clone(),
            msg: "unexpected end of file".into(),
        })?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn expect_magic(&mut self, magic: &[u8; 8]) -> Result<()> {
        let got: [u8; 8] = self.bytes()?;
        if &got != magic {
            return Err(Error::BadFormat {
                path: self.path.clone(),
                msg: format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(&got),
                    String::from_utf8_lossy(magic)
                ),
            });
        }
        Ok(())
    }

    fn fingerprint(&mut self) -> Result<[u8; 16]> {
        self.bytes()
    }
}

fn open_reader(path: &Path) -> Result<LeReader<BufReader<File>>> {
    Ok(LeReader {
        inner: BufReader::new(File::open(path)?),
        path: path.display().to_string(),
    })
}

/// Saves the vocabulary as plain text, one term per line; line number is the
/// term id.
pub fn save_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        for term in vocab.terms() {
            writeln!(w, "{term}")?;
        }
        Ok(())
    })
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path)?;
    let terms: Vec<String> = text.lines().map(|l| l.to_string()).collect();
    Vocabulary::from_sorted_terms(terms)
}

pub fn save_index(index: &InvertedIndex, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        w.write_all(MAGIC_INDEX)?;
        w.write_all(&(index.total_docs() as u32).to_le_bytes())?;
        w.write_all(&(index.vocab_size() as u32).to_le_bytes())?;
        w.write_all(&index.avgdl().to_le_bytes())?;
        for &len in index.doc_lens() {
            w.write_all(&len.to_le_bytes())?;
        }
        for term in 0..index.vocab_size() as u32 {
            let postings = index.postings(term);
            w.write_all(&(postings.len() as u32).to_le_bytes())?;
            for p in postings {
                w.write_all(&p.doc.to_le_bytes())?;
                w.write_all(&p.tf.to_le_bytes())?;
            }
        }
        w.write_all(&index.fingerprint())?;
        Ok(())
    })
}

pub fn load_index(path: &Path) -> Result<InvertedIndex> {
    let mut r = open_reader(path)?;
    r.expect_magic(MAGIC_INDEX)?;
    let total_docs = r.u32()? as usize;
    let vocab_size = r.u32()? as usize;
    let avgdl = r.f64()?;
    let mut doc_len = Vec::with_capacity(total_docs);
    for _ in 0..total_docs {
        doc_len.push(r.u32()?);
    }
    let mut postings = Vec::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let len = r.u32()? as usize;
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            let doc = r.u32()?;
            let tf = r.u32()?;
            list.push(Posting { doc, tf });
        }
        postings.push(list);
    }
    let fingerprint = r.fingerprint()?;
    Ok(InvertedIndex::from_parts(postings, doc_len, avgdl, fingerprint))
}

/// Saves a sparse word-representation matrix in CSR form (values stored f32).
pub fn save_reprs(matrix: &WordReprMatrix, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        let nnz: u64 = matrix.rows.iter().map(|r| r.nnz() as u64).sum();
        w.write_all(MAGIC_SPARSE)?;
        w.write_all(&(matrix.rows.len() as u32).to_le_bytes())?;
        w.write_all(&(matrix.cols as u32).to_le_bytes())?;
        w.write_all(&nnz.to_le_bytes())?;
        let mut offset = 0u64;
        w.write_all(&offset.to_le_bytes())?;
        for row in &matrix.rows {
            offset += row.nnz() as u64;
            w.write_all(&offset.to_le_bytes())?;
        }
        for row in &matrix.rows {
            for &i in row.indices() {
                w.write_all(&i.to_le_bytes())?;
            }
        }
        for row in &matrix.rows {
            for &v in row.values() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.write_all(&matrix.fingerprint)?;
        Ok(())
    })
}

pub fn load_reprs(path: &Path) -> Result<WordReprMatrix> {
    let mut r = open_reader(path)?;
    r.expect_magic(MAGIC_SPARSE)?;
    let n_rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let nnz = r.u64()? as usize;
    let mut offsets = Vec::with_capacity(n_rows + 1);
    for _ in 0..=n_rows {
        offsets.push(r.u64()? as usize);
    }
    if offsets.first() != Some(&0) || offsets.last() != Some(&nnz) {
        return Err(Error::bad_format(path, "row offsets do not span nnz"));
    }
    let mut indices = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        indices.push(r.u32()?);
    }
    let mut values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        values.push(r.f32()? as f64);
    }
    let fingerprint = r.fingerprint()?;
    let mut rows = Vec::with_capacity(n_rows);
    for w in offsets.windows(2) {
        let (start, end) = (w[0], w[1]);
        if end < start || end > nnz {
            return Err(Error::bad_format(path, "row offsets not monotone"));
        }
        rows.push(SparseVector::from_sorted(
            indices[start..end]
                .iter()
                .copied()
                .zip(values[start..end].iter().copied()),
        ));
    }
    Ok(WordReprMatrix {
        rows,
        cols,
        fingerprint,
    })
}

/// Saves a dense embedding matrix (values stored f32) with the vocabulary
/// fingerprint it was derived from.
pub fn save_embedding(matrix: &EmbeddingMatrix, fingerprint: [u8; 16], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        w.write_all(MAGIC_DENSE)?;
        w.write_all(&(matrix.rows() as u32).to_le_bytes())?;
        w.write_all(&(matrix.cols() as u32).to_le_bytes())?;
        for &v in matrix.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        w.write_all(&fingerprint)?;
        Ok(())
    })
}

/// Loads a dense embedding matrix, returning it alongside the fingerprint
/// recorded at save time.
pub fn load_embedding(kind: EmbeddingKind, path: &Path) -> Result<(EmbeddingMatrix, [u8; 16])> {
    let mut r = open_reader(path)?;
    r.expect_magic(MAGIC_DENSE)?;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(r.f32()? as f64);
    }
    let fingerprint = r.fingerprint()?;
    Ok((EmbeddingMatrix::from_data(kind, rows, cols, data)?, fingerprint))
}

/// Errors unless two fingerprints agree; `what` names the artifact pair.
pub fn ensure_fingerprint(expected: [u8; 16], found: [u8; 16], what: &str) -> Result<()> {
    if expected != found {
        return Err(Error::FingerprintMismatch(what.to_string()));
    }
    Ok(())
}
