//! Packed spin rasters.
//!
//! Layout: a 32-byte header (`b"SCHN"`, version `u32`, half-side `M` `u32`,
//! free-site count `u32`, 16 zero bytes) followed by fixed-size records of a
//! `u64` sweep index and a bitmap of free spins in row-major free-site order,
//! least significant bit first, `+1` stored as 1. All integers little-endian.
//! `M` is 0 for boxes that are not squares.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Spin, SpinConfiguration, MINUS, PLUS};

pub const MAGIC: [u8; 4] = *b"SCHN";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub version: u32,
    pub half_side: u32,
    pub n_free: u32,
}

impl RasterHeader {
    pub fn for_lattice(lattice: &Lattice) -> Self {
        RasterHeader {
            version: VERSION,
            half_side: lattice.geometry().half_side().unwrap_or(0) as u32,
            n_free: lattice.free_count() as u32,
        }
    }

    pub fn record_len(&self) -> usize {
        8 + (self.n_free as usize).div_ceil(8)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..4].copy_from_slice(&MAGIC);
        b[4..8].copy_from_slice(&self.version.to_le_bytes());
        b[8..12].copy_from_slice(&self.half_side.to_le_bytes());
        b[12..16].copy_from_slice(&self.n_free.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; HEADER_LEN]) -> Result<Self> {
        if b[..4] != MAGIC {
            return Err(Error::Raster("bad magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let h = RasterHeader { version: word(4), half_side: word(8), n_free: word(12) };
        if h.version != VERSION {
            return Err(Error::Raster(format!("unsupported version {}", h.version)));
        }
        Ok(h)
    }
}

pub struct RasterWriter<W: Write> {
    out: W,
    header: RasterHeader,
    buf: Vec<u8>,
}

impl<W: Write> RasterWriter<W> {
    pub fn new(mut out: W, lattice: &Lattice) -> Result<Self> {
        let header = RasterHeader::for_lattice(lattice);
        out.write_all(&header.to_bytes()).map_err(io)?;
        Ok(RasterWriter { out, header, buf: Vec::with_capacity(header.record_len()) })
    }

    pub fn write(&mut self, sweep: u64, config: &SpinConfiguration) -> Result<()> {
        if config.lattice().free_count() != self.header.n_free as usize {
            return Err(Error::Raster("configuration does not match the header".into()));
        }
        self.buf.clear();
        self.buf.extend_from_slice(&sweep.to_le_bytes());
        self.buf.resize(self.header.record_len(), 0);
        for (k, s) in config.free_spins().enumerate() {
            if s == PLUS {
                self.buf[8 + k / 8] |= 1 << (k % 8);
            }
        }
        self.out.write_all(&self.buf).map_err(io)
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(io)?;
        Ok(self.out)
    }
}

pub struct RasterReader<R: Read> {
    input: R,
    header: RasterHeader,
}

impl<R: Read> RasterReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        let mut b = [0u8; HEADER_LEN];
        input.read_exact(&mut b).map_err(io)?;
        Ok(RasterReader { header: RasterHeader::from_bytes(&b)?, input })
    }

    pub fn header(&self) -> RasterHeader {
        self.header
    }

    /// Next `(sweep, free spins)` record, `None` at a clean end of stream.
    pub fn next_record(&mut self) -> Result<Option<(u64, Vec<Spin>)>> {
        let mut rec = vec![0u8; self.header.record_len()];
        let mut got = 0;
        while got < rec.len() {
            match self.input.read(&mut rec[got..]).map_err(io)? {
                0 if got == 0 => return Ok(None),
                0 => return Err(Error::Raster("truncated record".into())),
                k => got += k,
            }
        }
        let sweep = u64::from_le_bytes(rec[..8].try_into().unwrap());
        let spins = (0..self.header.n_free as usize)
            .map(|k| if rec[8 + k / 8] >> (k % 8) & 1 == 1 { PLUS } else { MINUS })
            .collect();
        Ok(Some((sweep, spins)))
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Raster(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, FrozenSpec, Segment};
    use std::sync::Arc;

    #[test]
    fn round_trip() {
        let l = Arc::new(build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap());
        let a = SpinConfiguration::from_free(l.clone(), &[1, -1, 1, 1, -1, -1, 1]).unwrap();
        let b = SpinConfiguration::ground(l.clone());
        let mut w = RasterWriter::new(Vec::new(), &l).unwrap();
        w.write(7, &a).unwrap();
        w.write(9, &b).unwrap();
        let bytes = w.finish().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 9);
        assert_eq!(&bytes[..4], b"SCHN");
        assert_eq!(bytes[8], 2);
        assert_eq!(bytes[12], 7);
        assert!(bytes[16..32].iter().all(|&x| x == 0));
        assert_eq!(bytes[HEADER_LEN + 8], 0b100_1101);
        let mut r = RasterReader::new(&bytes[..]).unwrap();
        assert_eq!(r.next_record().unwrap(), Some((7, a.free_spins().collect())));
        assert_eq!(r.next_record().unwrap(), Some((9, b.free_spins().collect())));
        assert_eq!(r.next_record().unwrap(), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RasterReader::new(&[0u8; 32][..]).is_err());
        let l = build_lattice(1, FrozenSpec::minus()).unwrap();
        let mut bytes = RasterHeader::for_lattice(&l).to_bytes().to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let mut r = RasterReader::new(&bytes[..]).unwrap();
        assert!(r.next_record().is_err());
    }
}
