//! SEMB: little-endian binary container for per-document sentence embedding matrices.
//!
//! ```text
//! magic    b"SEMB"
//! u32      version (= 1)
//! u32      dim d
//! u32      doc_count
//! repeated doc_count times:
//!   u32    id byte length
//!   [u8]   UTF-8 id
//!   u32    sentence count m
//!   f32    m·d values, row-major
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SEMB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SembEntry {
    pub id: String,
    pub matrix: Array2<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SembFile {
    pub version: u32,
    pub dim: usize,
    pub entries: Vec<SembEntry>,
}

/// Header and per-document sentence counts, without the payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SembHeader {
    pub version: u32,
    pub dim: usize,
    pub docs: Vec<(String, usize)>,
}

fn to_u32(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::Semb(format!("{what} {value} does not fit in u32")))
}

/// Writes a SEMB file. Every matrix must have `dim` columns and finite entries.
pub fn write_semb<'a, I, S>(path: impl AsRef<Path>, dim: usize, entries: I) -> Result<()>
where
    I: IntoIterator<Item = (S, &'a Array2<f32>)>,
    S: AsRef<str>,
{
    let path = path.as_ref();
    if dim == 0 {
        return Err(Error::Semb("dimension must be positive".into()));
    }
    let entries: Vec<(S, &Array2<f32>)> = entries.into_iter().collect();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    out.write_all(&to_u32(dim, "dimension")?.to_le_bytes())
        .map_err(io)?;
    out.write_all(&to_u32(entries.len(), "document count")?.to_le_bytes())
        .map_err(io)?;
    for (id, matrix) in &entries {
        let id = id.as_ref();
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("embeddings of `{id}`"),
                expected: dim,
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embeddings of `{id}`")));
        }
        out.write_all(&to_u32(id.len(), "id length")?.to_le_bytes())
            .map_err(io)?;
        out.write_all(id.as_bytes()).map_err(io)?;
        out.write_all(&to_u32(matrix.nrows(), "sentence count")?.to_le_bytes())
            .map_err(io)?;
        for v in matrix.iter() {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

struct Reader<R> {
    inner: R,
    path: std::path::PathBuf,
}

impl<R: Read> Reader<R> {
    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Semb(format!("{}: truncated file", self.path.display()))
            } else {
                Error::io(&self.path, e)
            }
        })
    }

    fn u32(&mut self) -> Result<u32> {
        let mut buf = [0u8; 4];
        self.exact(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    fn header(&mut self) -> Result<(u32, usize, usize)> {
        let mut magic = [0u8; 4];
        self.exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Semb(format!(
                "{}: bad magic {magic:?}",
                self.path.display()
            )));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::Semb(format!(
                "{}: unsupported version {version}",
                self.path.display()
            )));
        }
        let dim = self.u32()? as usize;
        if dim == 0 {
            return Err(Error::Semb(format!("{}: dimension is 0", self.path.display())));
        }
        let count = self.u32()? as usize;
        Ok((version, dim, count))
    }

    fn id(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut buf = vec![0u8; len];
        self.exact(&mut buf)?;
        String::from_utf8(buf)
            .map_err(|_| Error::Semb(format!("{}: document id is not UTF-8", self.path.display())))
    }
}

fn open(path: &Path) -> Result<Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Reader {
        inner: BufReader::new(file),
        path: path.to_path_buf(),
    })
}

pub fn read_semb(path: impl AsRef<Path>) -> Result<SembFile> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let (version, dim, count) = r.header()?;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    let mut seen = HashSet::new();
    for _ in 0..count {
        let id = r.id()?;
        if !seen.insert(id.clone()) {
            return Err(Error::Semb(format!("{}: duplicate id `{id}`", path.display())));
        }
        let m = r.u32()? as usize;
        let mut bytes = vec![0u8; m * dim * 4];
        r.exact(&mut bytes)?;
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embeddings of `{id}`")));
        }
        let matrix = Array2::from_shape_vec((m, dim), values).expect("shape matches length");
        entries.push(SembEntry { id, matrix });
    }
    Ok(SembFile {
        version,
        dim,
        entries,
    })
}

/// Reads the header and document table, skipping the embedding payload.
pub fn read_header(path: impl AsRef<Path>) -> Result<SembHeader> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let (version, dim, count) = r.header()?;
    let mut docs = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id = r.id()?;
        let m = r.u32()? as usize;
        let skip = (m * dim * 4) as i64;
        r.inner
            .seek(SeekFrom::Current(skip))
            .map_err(|e| Error::io(path, e))?;
        docs.push((id, m));
    }
    Ok(SembHeader { version, dim, docs })
}
