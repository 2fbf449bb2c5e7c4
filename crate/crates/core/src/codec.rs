// Little-endian helpers for the index blob formats.

use alloc::vec::Vec;

use crate::error::DecodeError;

pub(crate) struct Writer(pub Vec<u8>);

impl Writer {
    pub fn new(magic: &[u8; 4], version: u16) -> Self {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(magic);
        w.u16(version);
        w
    }

    pub fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Checks magic and version, returning the version found.
    pub fn open(buf: &'a [u8], magic: &[u8; 4], max_version: u16) -> Result<(Self, u16), DecodeError> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != magic {
            return Err(DecodeError::BadMagic);
        }
        let version = r.u16()?;
        if version == 0 || version > max_version {
            return Err(DecodeError::UnsupportedVersion(version));
        }
        Ok((r, version))
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(DecodeError::Truncated { offset: self.buf.len() }),
        }
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// Length prefix for `count` items of `item_bytes` each, checked against the remaining input.
    pub fn count(&mut self, item_bytes: usize) -> Result<usize, DecodeError> {
        let n = self.u64()?;
        let need = (n as usize).checked_mul(item_bytes);
        match need {
            Some(need) if n <= usize::MAX as u64 && need <= self.buf.len() - self.pos => Ok(n as usize),
            _ => Err(DecodeError::Truncated { offset: self.buf.len() }),
        }
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(DecodeError::Corrupt("trailing bytes"))
        }
    }
}
