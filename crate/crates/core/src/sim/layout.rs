use crate::error::{Error, Result};

/// A named contiguous block of qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub offset: usize,
    pub width: usize,
}

impl Register {
    /// Qubit indices of this register, least significant first.
    pub fn qubits(&self) -> Vec<usize> {
        (self.offset..self.offset + self.width).collect()
    }

    pub fn qubit(&self, i: usize) -> usize {
        assert!(i < self.width, "offset {i} outside register `{}`", self.name);
        self.offset + i
    }

    /// Value held by this register in basis state `index` (little-endian).
    #[inline]
    pub fn value_of(&self, index: usize) -> u64 {
        ((index >> self.offset) & ((1usize << self.width) - 1)) as u64
    }
}

/// Ordered register layout. The first register occupies the lowest qubit
/// indices; within a register qubit 0 is the least significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitLayout {
    registers: Vec<Register>,
    total: usize,
}

impl QubitLayout {
    pub fn new<S: AsRef<str>>(registers: &[(S, usize)]) -> Result<Self> {
        let mut layout = QubitLayout { registers: Vec::new(), total: 0 };
        for (name, width) in registers {
            layout = layout.with_register(name.as_ref(), *width)?;
        }
        Ok(layout)
    }

    /// Returns a copy with one more register appended on top.
    pub fn with_register(mut self, name: &str, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::EmptyRegister(name.to_string()));
        }
        if self.registers.iter().any(|r| r.name == name) {
            return Err(Error::DuplicateRegister(name.to_string()));
        }
        self.registers.push(Register { name: name.to_string(), offset: self.total, width });
        self.total += width;
        Ok(self)
    }

    pub fn total_qubits(&self) -> usize {
        self.total
    }

    pub fn dimension(&self) -> usize {
        1usize << self.total
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn has_register(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn qubit(&self, name: &str, offset: usize) -> Result<usize> {
        let reg = self.register(name)?;
        if offset >= reg.width {
            return Err(Error::QubitOutOfRange { index: offset, total: reg.width });
        }
        Ok(reg.offset + offset)
    }

    /// Inverse of [`QubitLayout::qubit`].
    pub fn locate(&self, qubit: usize) -> Result<(&str, usize)> {
        self.registers
            .iter()
            .find(|r| qubit >= r.offset && qubit < r.offset + r.width)
            .map(|r| (r.name.as_str(), qubit - r.offset))
            .ok_or(Error::QubitOutOfRange { index: qubit, total: self.total })
    }

    /// True if `other` starts with exactly the registers of `self`.
    pub fn is_prefix_of(&self, other: &QubitLayout) -> bool {
        other.registers.len() >= self.registers.len()
            && self.registers.iter().zip(&other.registers).all(|(a, b)| a == b)
    }
}
