//! Binary vector store.
//!
//! All integers little-endian. Strings are UTF-8 prefixed by their byte length.
//!
//! ```text
//! header:  magic "FPKB" (4 bytes) | version u32 = 1 | dim u32 | count u32
//!          | embedder_id (u16 length + bytes)
//! entry:   source u8 (0 bugzilla, 1 syzkaller) | id (u16 length + bytes)
//!          | label u8 (0 genuine_bug, 1 false_positive) | vector: dim x f32
//!          | text (u32 length + bytes)
//! ```
//!
//! Entries are written in ascending `(source, id)` order, so identical
//! knowledge bases produce identical files.

use std::io::{Read, Write};

use super::{EmbeddingVector, KbEntry, KnowledgeBase, RetrievalError};
use crate::annotate::Label;
use crate::corpus::{ReportKey, Source};

pub const STORE_MAGIC: &[u8; 4] = b"FPKB";
pub const STORE_VERSION: u32 = 1;

fn store_err(msg: impl Into<String>) -> RetrievalError {
    RetrievalError::Store(msg.into())
}

fn write_str16<W: Write>(out: &mut W, s: &str) -> Result<(), RetrievalError> {
    let len = u16::try_from(s.len()).map_err(|_| store_err(format!("string too long: {} bytes", s.len())))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn write_str32<W: Write>(out: &mut W, s: &str) -> Result<(), RetrievalError> {
    let len = u32::try_from(s.len()).map_err(|_| store_err("text too long"))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_store<W: Write>(mut out: W, kb: &KnowledgeBase) -> Result<(), RetrievalError> {
    out.write_all(STORE_MAGIC)?;
    out.write_all(&STORE_VERSION.to_le_bytes())?;
    out.write_all(&(kb.dim() as u32).to_le_bytes())?;
    out.write_all(&(kb.len() as u32).to_le_bytes())?;
    write_str16(&mut out, kb.embedder_id())?;
    for (key, entry) in kb.entries() {
        out.write_all(&[match key.source {
            Source::Bugzilla => 0,
            Source::Syzkaller => 1,
        }])?;
        write_str16(&mut out, &key.id)?;
        out.write_all(&[match entry.label {
            Label::GenuineBug => 0,
            Label::FalsePositive => 1,
        }])?;
        for v in entry.vector.values() {
            out.write_all(&v.to_le_bytes())?;
        }
        write_str32(&mut out, &entry.text)?;
    }
    out.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], RetrievalError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| store_err(format!("truncated store: {e}")))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8, RetrievalError> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, RetrievalError> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn string(&mut self, len: usize) -> Result<String, RetrievalError> {
        let mut buf = vec![0u8; len];
        self.inner.read_exact(&mut buf).map_err(|e| store_err(format!("truncated store: {e}")))?;
        String::from_utf8(buf).map_err(|_| store_err("invalid utf-8"))
    }
}

pub fn read_store<R: Read>(input: R) -> Result<KnowledgeBase, RetrievalError> {
    let mut r = Reader { inner: input };
    if &r.bytes::<4>()? != STORE_MAGIC {
        return Err(store_err("bad magic"));
    }
    let version = r.u32()?;
    if version != STORE_VERSION {
        return Err(store_err(format!("unsupported version {version}")));
    }
    let dim = r.u32()? as usize;
    let count = r.u32()? as usize;
    let len = r.u16()? as usize;
    let embedder_id = r.string(len)?;
    let mut kb = KnowledgeBase::new(dim, embedder_id);
    for _ in 0..count {
        let source = match r.u8()? {
            0 => Source::Bugzilla,
            1 => Source::Syzkaller,
            other => return Err(store_err(format!("bad source tag {other}"))),
        };
        let len = r.u16()? as usize;
        let id = r.string(len)?;
        let label = match r.u8()? {
            0 => Label::GenuineBug,
            1 => Label::FalsePositive,
            other => return Err(store_err(format!("bad label tag {other}"))),
        };
        let values = (0..dim).map(|_| r.bytes::<4>().map(f32::from_le_bytes)).collect::<Result<Vec<_>, _>>()?;
        let len = r.u32()? as usize;
        let text = r.string(len)?;
        kb.insert(ReportKey::new(source, id), KbEntry { vector: EmbeddingVector::new(values)?, label, text })?;
    }
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest)? != 0 {
        return Err(store_err("trailing bytes after last entry"));
    }
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(2, "unit");
        kb.insert(
            ReportKey::new(Source::Bugzilla, "7"),
            KbEntry {
                vector: EmbeddingVector::new(vec![1.0, -0.5]).unwrap(),
                label: Label::FalsePositive,
                text: "ab".into(),
            },
        )
        .unwrap();
        kb
    }

    #[test]
    fn layout_is_bit_exact() {
        let mut buf = Vec::new();
        write_store(&mut buf, &small_kb()).unwrap();
        let mut expected = Vec::new();
        expected.extend_from_slice(b"FPKB");
        expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&[4, 0]);
        expected.extend_from_slice(b"unit");
        expected.extend_from_slice(&[0, 1, 0, b'7', 1]);
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-0.5f32).to_le_bytes());
        expected.extend_from_slice(&[2, 0, 0, 0, b'a', b'b']);
        assert_eq!(buf, expected);
        assert_eq!(read_store(buf.as_slice()).unwrap(), small_kb());
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let mut buf = Vec::new();
        write_store(&mut buf, &small_kb()).unwrap();
        assert!(read_store(&buf[..buf.len() - 1]).is_err());
        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(read_store(trailing.as_slice()).is_err());
        let mut bad_magic = buf;
        bad_magic[0] = b'X';
        assert!(read_store(bad_magic.as_slice()).is_err());
    }
}
