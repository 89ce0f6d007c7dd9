//! Parsed bench document and its canonical text form.

use std::fmt;

use num_rational::BigRational;

use crate::units::{format_decimal, to_f64, Unit};

/// Exact value in its storage unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quantity {
    pub value: BigRational,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: BigRational, unit: Unit) -> Self {
        Self { value, unit }
    }

    /// Value in SI units (m, s, V, Hz, rad).
    pub fn si(&self) -> f64 {
        to_f64(&self.value) * self.unit.si_factor()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", format_decimal(&self.value), self.unit.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Quantity(Quantity),
    List(Vec<BigRational>),
    Ident(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Quantity(q) => q.fmt(f),
            Value::Ident(s) => f.write_str(s),
            Value::List(items) => {
                let shown: Vec<_> = items.iter().map(format_decimal).collect();
                write!(f, "[{}]", shown.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub key: String,
    pub value: Value,
}

impl Assignment {
    pub fn new(key: impl Into<String>, value: Value) -> Self {
        Self {
            key: key.into(),
            value,
        }
    }

    pub fn quantity(key: impl Into<String>, value: BigRational, unit: Unit) -> Self {
        Self::new(key, Value::Quantity(Quantity::new(value, unit)))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.key, self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Displacer,
    Pockels,
    Hwp,
    Pinhole,
    Analyzer,
}

impl ElementKind {
    pub const ALL: [ElementKind; 5] = [
        ElementKind::Displacer,
        ElementKind::Pockels,
        ElementKind::Hwp,
        ElementKind::Pinhole,
        ElementKind::Analyzer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Displacer => "displacer",
            ElementKind::Pockels => "pockels",
            ElementKind::Hwp => "hwp",
            ElementKind::Pinhole => "pinhole",
            ElementKind::Analyzer => "analyzer",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementDecl {
    pub kind: ElementKind,
    pub params: Vec<Assignment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectionKind {
    Device,
    Source,
    Trigger,
    Sweep,
    Targets,
}

impl SectionKind {
    pub const ALL: [SectionKind; 5] = [
        SectionKind::Device,
        SectionKind::Source,
        SectionKind::Trigger,
        SectionKind::Sweep,
        SectionKind::Targets,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Device => "device",
            SectionKind::Source => "source",
            SectionKind::Trigger => "trigger",
            SectionKind::Sweep => "sweep",
            SectionKind::Targets => "targets",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_required(self) -> bool {
        matches!(
            self,
            SectionKind::Device | SectionKind::Source | SectionKind::Trigger
        )
    }
}

/// A whole bench file. Parameter order inside each section is kept;
/// sections are always serialized in the order of [`SectionKind::ALL`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BenchDocument {
    pub device: Vec<ElementDecl>,
    pub source: Vec<Assignment>,
    pub trigger: Vec<Assignment>,
    pub sweep: Option<Vec<Assignment>>,
    pub targets: Option<Vec<Assignment>>,
}

pub fn find<'a>(params: &'a [Assignment], key: &str) -> Option<&'a Value> {
    params.iter().find(|a| a.key == key).map(|a| &a.value)
}

impl BenchDocument {
    /// Canonical text: one section block per kind, one element or
    /// assignment per line, values in storage units.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut block = |name: &str, lines: Vec<String>| {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(name);
            out.push_str(" {\n");
            for l in lines {
                out.push_str("  ");
                out.push_str(&l);
                out.push('\n');
            }
            out.push_str("}\n");
        };
        let plain = |params: &[Assignment]| params.iter().map(ToString::to_string).collect();
        block(
            "device",
            self.device
                .iter()
                .map(|e| {
                    let mut line = e.kind.name().to_string();
                    for p in &e.params {
                        line.push(' ');
                        line.push_str(&p.to_string());
                    }
                    line
                })
                .collect(),
        );
        block("source", plain(&self.source));
        block("trigger", plain(&self.trigger));
        if let Some(s) = &self.sweep {
            block("sweep", plain(s));
        }
        if let Some(t) = &self.targets {
            block("targets", plain(t));
        }
        out
    }
}

impl fmt::Display for BenchDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}
