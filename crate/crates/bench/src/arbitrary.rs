//! Proptest strategies producing valid documents.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::sample::subsequence;

use crate::document::{Assignment, BenchDocument, ElementDecl, ElementKind, Quantity, Value};
use crate::schema::{element_keys, section_keys, KeyKind, KeyTable, Range, REQUIRED_TARGETS};
use crate::units::{pow10, Dimension, Unit};
use crate::SectionKind;

fn ratio(n: i64, exp: i32) -> BigRational {
    BigRational::from_integer(BigInt::from(n)) * pow10(exp)
}

fn number(range: Range) -> BoxedStrategy<BigRational> {
    match range {
        Range::Any => (-1_000_000i64..1_000_000, -6i32..3)
            .prop_map(|(n, e)| ratio(n, e))
            .boxed(),
        Range::Positive => (1i64..1_000_000, -6i32..3)
            .prop_map(|(n, e)| ratio(n, e))
            .boxed(),
        Range::NonNegative => (0i64..1_000_000, -6i32..3)
            .prop_map(|(n, e)| ratio(n, e))
            .boxed(),
        Range::Transmission => (1i64..=1000).prop_map(|n| ratio(n, -3)).boxed(),
        Range::Fraction => (0i64..=1000).prop_map(|n| ratio(n, -3)).boxed(),
        Range::Leakage => (0i64..=500).prop_map(|n| ratio(n, -4)).boxed(),
        Range::Count => (0i64..1000).prop_map(|n| ratio(n, 0)).boxed(),
        Range::PositiveCount => (1i64..1000).prop_map(|n| ratio(n, 0)).boxed(),
    }
}

fn unit(dim: Dimension) -> BoxedStrategy<Unit> {
    match dim {
        Dimension::Length => Just(Unit::Mm).boxed(),
        Dimension::Time => Just(Unit::Ns).boxed(),
        Dimension::Voltage => Just(Unit::Volt).boxed(),
        Dimension::Frequency => Just(Unit::Hz).boxed(),
        Dimension::Angle => prop_oneof![Just(Unit::Rad), Just(Unit::Deg)].boxed(),
        Dimension::Dimensionless => Just(Unit::None).boxed(),
    }
}

pub fn value(kind: KeyKind) -> BoxedStrategy<Value> {
    match kind {
        KeyKind::Quantity(dim, range) => (number(range), unit(dim))
            .prop_map(|(v, u)| Value::Quantity(Quantity::new(v, u)))
            .boxed(),
        KeyKind::Integers => prop::collection::vec(-3i64..6, 1..4)
            .prop_map(|v| Value::List(v.into_iter().map(|n| ratio(n, 0)).collect()))
            .boxed(),
        KeyKind::IncreasingPositive => prop::collection::btree_set(1i64..100_000, 1..6)
            .prop_map(|s| Value::List(s.into_iter().map(|n| ratio(n, -1)).collect()))
            .boxed(),
        KeyKind::Choice(options) => prop::sample::select(options)
            .prop_map(|s| Value::Ident(s.to_string()))
            .boxed(),
    }
}

/// Random subset of `table` (always including `required`) in random order.
pub fn params(table: KeyTable, required: &'static [&'static str]) -> BoxedStrategy<Vec<Assignment>> {
    let optional: Vec<_> = table
        .iter()
        .filter(|(k, _)| !required.contains(k))
        .copied()
        .collect();
    let forced: Vec<_> = table
        .iter()
        .filter(|(k, _)| required.contains(k))
        .copied()
        .collect();
    let n = optional.len();
    subsequence(optional, 0..=n)
        .prop_map(move |mut keys| {
            keys.extend(forced.iter().copied());
            keys
        })
        .prop_shuffle()
        .prop_flat_map(|keys| {
            keys.into_iter()
                .map(|(k, kind)| value(kind).prop_map(move |v| Assignment::new(k, v)))
                .collect::<Vec<_>>()
        })
        .boxed()
}

pub fn element() -> BoxedStrategy<ElementDecl> {
    prop::sample::select(ElementKind::ALL.to_vec())
        .prop_flat_map(|kind| params(element_keys(kind), &[]).prop_map(move |params| ElementDecl { kind, params }))
        .boxed()
}

pub fn document() -> BoxedStrategy<BenchDocument> {
    (
        prop::collection::vec(element(), 0..7),
        params(section_keys(SectionKind::Source), &[]),
        params(section_keys(SectionKind::Trigger), &[]),
        prop::option::of(params(section_keys(SectionKind::Sweep), &[])),
        prop::option::of(params(section_keys(SectionKind::Targets), REQUIRED_TARGETS)),
    )
        .prop_map(|(device, source, trigger, sweep, targets)| BenchDocument {
            device,
            source,
            trigger,
            sweep,
            targets,
        })
        .boxed()
}
