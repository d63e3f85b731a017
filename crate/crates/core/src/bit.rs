use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A binary consensus value.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const BOTH: [Bit; 2] = [Bit::Zero, Bit::One];

    pub fn index(self) -> usize {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn from_bool(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn from_u8(v: u8) -> Option<Bit> {
        match v {
            0 => Some(Bit::Zero),
            1 => Some(Bit::One),
            _ => None,
        }
    }

    pub fn xor(self, other: Bit) -> Bit {
        Bit::from_bool((self.index() ^ other.index()) == 1)
    }
}

impl Not for Bit {
    type Output = Bit;

    fn not(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }
}

impl fmt::Debug for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl Serialize for Bit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.index() as u8)
    }
}

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Bit::from_u8(v)
            .ok_or_else(|| serde::de::Error::custom(format!("bit must be 0 or 1, got {v}")))
    }
}

/// A subset of `{0, 1}`.
#[derive(Copy, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet(u8);

impl BitSet {
    pub const EMPTY: BitSet = BitSet(0);
    pub const BOTH: BitSet = BitSet(0b11);

    pub fn singleton(b: Bit) -> BitSet {
        BitSet(1 << b.index())
    }

    pub fn insert(&mut self, b: Bit) -> bool {
        let fresh = !self.contains(b);
        self.0 |= 1 << b.index();
        fresh
    }

    pub fn contains(self, b: Bit) -> bool {
        self.0 & (1 << b.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: BitSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// The single member, if there is exactly one.
    pub fn as_single(self) -> Option<Bit> {
        match self.0 {
            0b01 => Some(Bit::Zero),
            0b10 => Some(Bit::One),
            _ => None,
        }
    }

    pub fn iter(self) -> impl Iterator<Item = Bit> {
        Bit::BOTH.into_iter().filter(move |b| self.contains(*b))
    }

    /// The three non-empty subsets, singletons first.
    pub fn nonempty() -> [BitSet; 3] {
        [BitSet(0b01), BitSet(0b10), BitSet::BOTH]
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for BitSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Bit> = self.iter().collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<Bit>::deserialize(d)?;
        let mut out = BitSet::EMPTY;
        for b in v {
            out.insert(b);
        }
        Ok(out)
    }
}
