//! Binary index file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  "STLNIDX\0"          8 bytes
//! version u32
//! k1 f64, b f64
//! doc_count u32
//!   per doc: id (u32 len + utf8), published_at i64, length u32
//! term_count u32
//!   per term (ascending): term (u32 len + utf8), posting_count u32,
//!   then posting_count x (doc u32, tf u32)
//! ```

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use super::{Bm25Params, Index, IndexError, Posting};
use crate::time::Timestamp;

const MAGIC: &[u8; 8] = b"STLNIDX\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IndexFormatError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {found}; this build reads version {FORMAT_VERSION}")]
    Version { found: u32 },
    #[error("corrupt index file: {0}")]
    Corrupt(String),
}

impl Index {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.params.k1.to_le_bytes())?;
        w.write_all(&self.params.b.to_le_bytes())?;
        w.write_all(&(self.doc_ids.len() as u32).to_le_bytes())?;
        for ((id, ts), len) in self.doc_ids.iter().zip(&self.published).zip(&self.doc_lens) {
            write_str(&mut w, id)?;
            w.write_all(&ts.as_secs().to_le_bytes())?;
            w.write_all(&len.to_le_bytes())?;
        }
        w.write_all(&(self.postings.len() as u32).to_le_bytes())?;
        for (term, list) in &self.postings {
            write_str(&mut w, term)?;
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for p in list {
                w.write_all(&p.doc.to_le_bytes())?;
                w.write_all(&p.tf.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, IndexError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(eof)?;
        if &magic != MAGIC {
            return Err(IndexFormatError::BadMagic.into());
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(IndexFormatError::Version { found: version }.into());
        }
        let k1 = f64::from_le_bytes(read_array(&mut r)?);
        let b = f64::from_le_bytes(read_array(&mut r)?);
        let params = Bm25Params::new(k1, b)?;

        let n = read_u32(&mut r)? as usize;
        if n == 0 {
            return Err(corrupt("zero documents"));
        }
        let mut doc_ids = Vec::with_capacity(n);
        let mut published = Vec::with_capacity(n);
        let mut doc_lens = Vec::with_capacity(n);
        for _ in 0..n {
            doc_ids.push(read_str(&mut r)?);
            published.push(Timestamp::from_secs(i64::from_le_bytes(read_array(&mut r)?)));
            doc_lens.push(read_u32(&mut r)?);
        }

        let terms = read_u32(&mut r)? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..terms {
            let term = read_str(&mut r)?;
            let count = read_u32(&mut r)? as usize;
            let mut list = Vec::with_capacity(count.min(n));
            for _ in 0..count {
                let doc = read_u32(&mut r)?;
                let tf = read_u32(&mut r)?;
                if doc as usize >= n || tf == 0 {
                    return Err(corrupt(&format!("bad posting for {term:?}")));
                }
                list.push(Posting { doc, tf });
            }
            if count > n || list.windows(2).any(|w| w[0].doc >= w[1].doc) {
                return Err(corrupt(&format!("postings for {term:?} not strictly ascending")));
            }
            postings.insert(term, list);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self::from_parts(params, doc_ids, published, doc_lens, postings))
    }
}

fn corrupt(msg: &str) -> IndexError {
    IndexFormatError::Corrupt(msg.to_string()).into()
}

fn eof(e: io::Error) -> IndexError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        corrupt("truncated file")
    } else {
        e.into()
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], IndexError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(eof)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, IndexError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_str<R: Read>(r: &mut R) -> Result<String, IndexError> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(eof)?;
    String::from_utf8(buf).map_err(|_| corrupt("invalid utf-8"))
}
