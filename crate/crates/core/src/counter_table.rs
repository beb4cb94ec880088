//! Dense tables of floating-point counters.
//!
//! Each slot stores a counter state in `width` bits; slots are packed back to
//! back and may straddle word boundaries. A slot holding `2^width - 1` is
//! saturated: further updates leave it alone and its estimate is only a lower
//! bound.
//!
//! # Snapshot format
//!
//! All integers little-endian.
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"FPCT"`                          |
//! | 4      | 2    | version, currently 1                     |
//! | 6      | 1    | `d`, significand bits                    |
//! | 7      | 1    | `width`, bits per slot                   |
//! | 8      | 8    | `num_slots`                              |
//! | 16     | P    | payload, `P = ceil(num_slots * width / 8)` |
//!
//! Payload bit `j` is bit `j % 8` of byte `j / 8`. Slot `i` occupies payload
//! bits `i * width .. (i + 1) * width`, least significant bit first. Unused
//! bits of the last byte are zero.

use std::io::{Read, Write};

use crate::chain_core::{self, CounterParams};
use crate::counters;
use crate::error::{Error, Result};
use crate::randbits::RandomBits;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"FPCT";
pub const SNAPSHOT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;
const MAX_WIDTH: u32 = 32;

/// Estimate read from a table slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEstimate {
    pub value: f64,
    /// Set when the slot is saturated and `value` undercounts.
    pub lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterTable {
    num_slots: usize,
    d: u32,
    width: u32,
    words: Vec<u64>,
    saturation_count: usize,
}

impl CounterTable {
    pub fn new(num_slots: usize, d: u32, width: u32) -> Result<Self> {
        if num_slots == 0 {
            return Err(Error::EmptyTable);
        }
        if width > MAX_WIDTH || width < d + 1 {
            return Err(Error::InvalidWidth { width, d });
        }
        let bits = num_slots
            .checked_mul(width as usize)
            .ok_or_else(|| Error::InvalidParams("table too large".into()))?;
        Ok(CounterTable {
            num_slots,
            d,
            width,
            words: vec![0; bits.div_ceil(64)],
            saturation_count: 0,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn params(&self) -> CounterParams {
        CounterParams::FloatingPoint { d: self.d }
    }

    /// Number of slots currently saturated.
    pub fn saturation_count(&self) -> usize {
        self.saturation_count
    }

    /// The saturated slot value, `2^width - 1`.
    pub fn max_state(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    /// Packed payload size in bytes.
    pub fn payload_bytes(&self) -> usize {
        (self.num_slots * self.width as usize).div_ceil(8)
    }

    fn check(&self, index: usize) -> Result<()> {
        if index >= self.num_slots {
            Err(Error::IndexOutOfRange {
                index,
                len: self.num_slots,
            })
        } else {
            Ok(())
        }
    }

    fn read(&self, index: usize) -> u64 {
        let pos = index * self.width as usize;
        let (word, offset) = (pos / 64, (pos % 64) as u32);
        let mut value = self.words[word] >> offset;
        if offset + self.width > 64 {
            value |= self.words[word + 1] << (64 - offset);
        }
        value & self.max_state()
    }

    fn write(&mut self, index: usize, value: u64) {
        let mask = self.max_state();
        let pos = index * self.width as usize;
        let (word, offset) = (pos / 64, (pos % 64) as u32);
        self.words[word] &= !(mask << offset);
        self.words[word] |= value << offset;
        if offset + self.width > 64 {
            let spill = 64 - offset;
            self.words[word + 1] &= !(mask >> spill);
            self.words[word + 1] |= value >> spill;
        }
    }

    /// Raw state of slot `index`.
    pub fn get(&self, index: usize) -> Result<u64> {
        self.check(index)?;
        Ok(self.read(index))
    }

    /// Overwrites slot `index` with a raw state.
    pub fn set(&mut self, index: usize, value: u64) -> Result<()> {
        self.check(index)?;
        if value > self.max_state() {
            return Err(Error::SlotValue {
                value,
                width: self.width,
            });
        }
        let max = self.max_state();
        let old = self.read(index);
        if old == max && value != max {
            self.saturation_count -= 1;
        } else if old != max && value == max {
            self.saturation_count += 1;
        }
        self.write(index, value);
        Ok(())
    }

    pub fn is_saturated(&self, index: usize) -> Result<bool> {
        Ok(self.get(index)? == self.max_state())
    }

    /// One floating-point counter update of slot `index`.
    pub fn increment<R: RandomBits + ?Sized>(&mut self, index: usize, src: &mut R) -> Result<()> {
        self.check(index)?;
        let k = self.read(index);
        let max = self.max_state();
        if k == max {
            return Ok(());
        }
        if counters::step(self.params(), k, src) {
            self.write(index, k + 1);
            if k + 1 == max {
                self.saturation_count += 1;
            }
        }
        Ok(())
    }

    pub fn estimate(&self, index: usize) -> Result<SlotEstimate> {
        let k = self.get(index)?;
        Ok(SlotEstimate {
            value: chain_core::estimate(self.params(), k)?,
            lower_bound: k == self.max_state(),
        })
    }

    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        CounterTable::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(HEADER_LEN + self.payload_bytes());
        bytes.extend_from_slice(&SNAPSHOT_MAGIC);
        bytes.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        bytes.push(self.d as u8);
        bytes.push(self.width as u8);
        bytes.extend_from_slice(&(self.num_slots as u64).to_le_bytes());
        let payload: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.extend_from_slice(&payload[..self.payload_bytes()]);
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot("truncated header".into()));
        }
        if bytes[..4] != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let (d, width) = (bytes[6] as u32, bytes[7] as u32);
        let num_slots = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let num_slots = usize::try_from(num_slots)
            .map_err(|_| Error::Snapshot("slot count exceeds address space".into()))?;
        let mut table = CounterTable::new(num_slots, d, width)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != table.payload_bytes() {
            return Err(Error::Snapshot(format!(
                "payload is {} bytes, expected {}",
                payload.len(),
                table.payload_bytes()
            )));
        }
        let used_bits = num_slots * width as usize;
        if !used_bits.is_multiple_of(8) && payload[payload.len() - 1] >> (used_bits % 8) != 0 {
            return Err(Error::Snapshot("nonzero padding bits".into()));
        }
        for (word, chunk) in table.words.iter_mut().zip(payload.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *word = u64::from_le_bytes(buf);
        }
        let max = table.max_state();
        table.saturation_count = (0..num_slots).filter(|&i| table.read(i) == max).count();
        Ok(table)
    }
}
