//! Accepted keys, their dimensions and allowed ranges.

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::document::{ElementKind, SectionKind};
use crate::units::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Any,
    Positive,
    NonNegative,
    /// `(0, 1]`
    Transmission,
    /// `[0, 1]`
    Fraction,
    /// `[0, 0.05]`
    Leakage,
    /// Integer `>= 0`.
    Count,
    /// Integer `>= 1`.
    PositiveCount,
}

impl Range {
    pub fn admits(self, x: &BigRational) -> bool {
        let one = BigRational::one();
        match self {
            Range::Any => true,
            Range::Positive => x.is_positive(),
            Range::NonNegative => !x.is_negative(),
            Range::Transmission => x.is_positive() && *x <= one,
            Range::Fraction => !x.is_negative() && *x <= one,
            Range::Leakage => {
                !x.is_negative() && *x <= BigRational::new(1.into(), 20.into())
            }
            Range::Count => x.is_integer() && !x.is_negative(),
            Range::PositiveCount => x.is_integer() && *x >= one,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Range::Any => "any value",
            Range::Positive => "a positive value",
            Range::NonNegative => "a non-negative value",
            Range::Transmission => "a value in (0, 1]",
            Range::Fraction => "a value in [0, 1]",
            Range::Leakage => "a value in [0, 0.05]",
            Range::Count => "a non-negative integer",
            Range::PositiveCount => "a positive integer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Quantity(Dimension, Range),
    /// Non-empty list of integers.
    Integers,
    /// Non-empty, strictly increasing list of positive numbers.
    IncreasingPositive,
    Choice(&'static [&'static str]),
}

pub type KeyTable = &'static [(&'static str, KeyKind)];

use Dimension::*;
use KeyKind::{Choice, Quantity as Q};

const DISPLACER: KeyTable = &[
    ("d", Q(Length, Range::Positive)),
    ("chi", Q(Angle, Range::Any)),
    ("chi_e", Q(Angle, Range::Any)),
    ("tilt", Q(Angle, Range::Any)),
    ("transmission", Q(Dimensionless, Range::Transmission)),
    ("leak_h", Q(Dimensionless, Range::Leakage)),
    ("leak_v", Q(Dimensionless, Range::Leakage)),
];

const POCKELS: KeyTable = &[
    ("vhalf", Q(Voltage, Range::Positive)),
    ("transmission", Q(Dimensionless, Range::Transmission)),
];

const HWP: KeyTable = &[
    ("angle", Q(Angle, Range::Any)),
    ("retardance", Q(Angle, Range::Any)),
    ("transmission", Q(Dimensionless, Range::Transmission)),
];

const PINHOLE: KeyTable = &[("rails", KeyKind::Integers)];

const ANALYZER: KeyTable = &[
    ("angle", Q(Angle, Range::Any)),
    ("transmission", Q(Dimensionless, Range::Transmission)),
];

pub const POLARIZATIONS: &[&str] = &["H", "V", "plus", "minus"];
pub const SWEEP_MODES: &[&str] = &["time", "frequency"];

const SOURCE: KeyTable = &[
    ("rep_rate", Q(Frequency, Range::Positive)),
    ("wavelength", Q(Length, Range::Positive)),
    ("bandwidth", Q(Length, Range::NonNegative)),
    ("polarization", Choice(POLARIZATIONS)),
    ("intensity", Q(Dimensionless, Range::Positive)),
];

const TRIGGER: KeyTable = &[
    ("freq", Q(Frequency, Range::Positive)),
    ("vpeak", Q(Voltage, Range::Positive)),
    ("flat", Q(Time, Range::NonNegative)),
    ("tau", Q(Time, Range::Positive)),
    ("jitter", Q(Time, Range::NonNegative)),
    ("ring_amp", Q(Angle, Range::NonNegative)),
    ("ring_freq", Q(Frequency, Range::NonNegative)),
    ("ring_tau", Q(Time, Range::Positive)),
    ("ring_phase", Q(Angle, Range::Any)),
    ("ring_delay", Q(Time, Range::NonNegative)),
    ("recovery_tau", Q(Time, Range::Positive)),
    ("recovery_residual", Q(Angle, Range::NonNegative)),
];

const SWEEP: KeyTable = &[
    ("mode", Choice(SWEEP_MODES)),
    ("window", Q(Time, Range::Positive)),
    ("resolution", Q(Time, Range::Positive)),
    ("frequencies", KeyKind::IncreasingPositive),
    ("warmup", Q(Dimensionless, Range::Count)),
    ("averaged", Q(Dimensionless, Range::PositiveCount)),
];

const TARGETS: KeyTable = &[
    ("t_on", Q(Dimensionless, Range::Transmission)),
    ("f_on_hv", Q(Dimensionless, Range::Fraction)),
    ("f_on_diag", Q(Dimensionless, Range::Fraction)),
    ("t_off_h", Q(Dimensionless, Range::Fraction)),
    ("t_off_v", Q(Dimensionless, Range::Fraction)),
    ("t_off_diag", Q(Dimensionless, Range::Fraction)),
];

/// Keys a `targets` section must define.
pub const REQUIRED_TARGETS: &[&str] = &["t_on", "f_on_hv", "t_off_h", "t_off_v"];

pub fn element_keys(kind: ElementKind) -> KeyTable {
    match kind {
        ElementKind::Displacer => DISPLACER,
        ElementKind::Pockels => POCKELS,
        ElementKind::Hwp => HWP,
        ElementKind::Pinhole => PINHOLE,
        ElementKind::Analyzer => ANALYZER,
    }
}

/// Keys of a non-device section.
pub fn section_keys(kind: SectionKind) -> KeyTable {
    match kind {
        SectionKind::Device => &[],
        SectionKind::Source => SOURCE,
        SectionKind::Trigger => TRIGGER,
        SectionKind::Sweep => SWEEP,
        SectionKind::Targets => TARGETS,
    }
}

pub fn lookup(table: KeyTable, key: &str) -> Option<KeyKind> {
    table.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}
