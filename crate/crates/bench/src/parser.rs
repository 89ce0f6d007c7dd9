//! Recursive-descent parser producing a validated [`BenchDocument`].
//!
//! ```text
//! document   := section+
//! section    := name "{" (entry (NEWLINE | ";"))* "}"
//! entry      := element | assignment+
//! element    := kind assignment*            (device section only)
//! assignment := key "=" (number unit? | "[" number ("," number)* "]" | ident)
//! ```

use num_rational::BigRational;
use num_traits::Signed;

use crate::diagnostic::{Diagnostic, DiagnosticKind, Pos};
use crate::document::{Assignment, BenchDocument, ElementDecl, ElementKind, Quantity, SectionKind, Value};
use crate::lexer::{tokenize, Tok, Token};
use crate::schema::{element_keys, lookup, section_keys, KeyKind, KeyTable, REQUIRED_TARGETS};
use crate::units::{lookup_unit, parse_decimal, Dimension, Unit};

pub fn parse(text: &str) -> Result<BenchDocument, Diagnostic> {
    let tokens = tokenize(text)?;
    Parser { tokens, at: 0 }.document()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

fn syntax(pos: Pos, message: impl Into<String>) -> Diagnostic {
    Diagnostic::new(pos, DiagnosticKind::Syntax, message)
}

struct Slot<T> {
    value: Option<(T, Pos)>,
}

impl<T> Slot<T> {
    fn set(&mut self, value: T, pos: Pos, name: &str) -> Result<(), Diagnostic> {
        if let Some((_, first)) = &self.value {
            return Err(Diagnostic::new(
                pos,
                DiagnosticKind::Duplicate,
                format!("duplicate `{name}` section (first defined at {first})"),
            ));
        }
        self.value = Some((value, pos));
        Ok(())
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().tok, Tok::Newline | Tok::Semi) {
            self.next();
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, Diagnostic> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(t.pos, format!("expected {what}, found {}", t.tok.describe())))
        }
    }

    fn document(mut self) -> Result<BenchDocument, Diagnostic> {
        let mut device = Slot { value: None };
        let mut source = Slot { value: None };
        let mut trigger = Slot { value: None };
        let mut sweep = Slot { value: None };
        let mut targets = Slot { value: None };
        loop {
            while self.peek().tok == Tok::Newline {
                self.next();
            }
            let t = self.next();
            let seen = device.value.is_some()
                || source.value.is_some()
                || trigger.value.is_some()
                || sweep.value.is_some()
                || targets.value.is_some();
            let name = match t.tok {
                Tok::Eof if seen => break,
                Tok::Eof => {
                    return Err(syntax(
                        Pos { line: 1, column: 1 },
                        "empty bench file, expected a section",
                    ))
                }
                Tok::Ident(name) => name,
                other => {
                    return Err(syntax(
                        t.pos,
                        format!("expected a section name, found {}", other.describe()),
                    ))
                }
            };
            let kind = SectionKind::from_name(&name).ok_or_else(|| {
                Diagnostic::new(
                    t.pos,
                    DiagnosticKind::UnknownSection,
                    format!(
                        "unknown section `{name}` (expected one of device, source, trigger, sweep, targets)"
                    ),
                )
            })?;
            self.expect(Tok::LBrace, "`{`")?;
            match kind {
                SectionKind::Device => {
                    let elements = self.device_body()?;
                    device.set(elements, t.pos, "device")?;
                }
                _ => {
                    let params = self.section_body(kind, t.pos)?;
                    match kind {
                        SectionKind::Source => source.set(params, t.pos, "source")?,
                        SectionKind::Trigger => trigger.set(params, t.pos, "trigger")?,
                        SectionKind::Sweep => sweep.set(params, t.pos, "sweep")?,
                        _ => targets.set(params, t.pos, "targets")?,
                    }
                }
            }
        }
        let end = self.peek().pos;
        let missing = |name: &str| {
            Diagnostic::new(end, DiagnosticKind::Missing, format!("missing `{name}` section"))
        };
        Ok(BenchDocument {
            device: device.value.ok_or_else(|| missing("device"))?.0,
            source: source.value.ok_or_else(|| missing("source"))?.0,
            trigger: trigger.value.ok_or_else(|| missing("trigger"))?.0,
            sweep: sweep.value.map(|v| v.0),
            targets: targets.value.map(|v| v.0),
        })
    }

    /// True at the closing brace; errors at end of input.
    fn at_close(&mut self) -> Result<bool, Diagnostic> {
        self.skip_separators();
        match self.peek().tok {
            Tok::RBrace => {
                self.next();
                Ok(true)
            }
            Tok::Eof => Err(syntax(self.peek().pos, "unterminated section, expected `}`")),
            _ => Ok(false),
        }
    }

    fn end_of_entry(&self) -> bool {
        matches!(
            self.peek().tok,
            Tok::Newline | Tok::Semi | Tok::RBrace | Tok::Eof
        )
    }

    fn device_body(&mut self) -> Result<Vec<ElementDecl>, Diagnostic> {
        let mut out = Vec::new();
        while !self.at_close()? {
            let t = self.next();
            let Tok::Ident(name) = &t.tok else {
                return Err(syntax(
                    t.pos,
                    format!("expected an element name, found {}", t.tok.describe()),
                ));
            };
            let kind = ElementKind::from_name(name).ok_or_else(|| {
                Diagnostic::new(
                    t.pos,
                    DiagnosticKind::UnknownElement,
                    format!("unknown element `{name}` (expected displacer, pockels, hwp, pinhole or analyzer)"),
                )
            })?;
            let mut params: Vec<Assignment> = Vec::new();
            while !self.end_of_entry() {
                let (a, pos) = self.assignment(element_keys(kind), kind.name())?;
                push_unique(&mut params, a, pos)?;
            }
            out.push(ElementDecl { kind, params });
        }
        Ok(out)
    }

    fn section_body(&mut self, kind: SectionKind, open: Pos) -> Result<Vec<Assignment>, Diagnostic> {
        let mut params: Vec<Assignment> = Vec::new();
        while !self.at_close()? {
            while !self.end_of_entry() {
                let (a, pos) = self.assignment(section_keys(kind), kind.name())?;
                push_unique(&mut params, a, pos)?;
            }
        }
        if kind == SectionKind::Targets {
            if let Some(key) = REQUIRED_TARGETS
                .iter()
                .find(|k| !params.iter().any(|a| a.key == **k))
            {
                return Err(Diagnostic::new(
                    open,
                    DiagnosticKind::Missing,
                    format!("`targets` section lacks `{key}`"),
                ));
            }
        }
        Ok(params)
    }

    fn assignment(&mut self, table: KeyTable, owner: &str) -> Result<(Assignment, Pos), Diagnostic> {
        let t = self.next();
        let Tok::Ident(key) = t.tok else {
            return Err(syntax(
                t.pos,
                format!("expected a parameter name, found {}", t.tok.describe()),
            ));
        };
        let kind = lookup(table, &key).ok_or_else(|| {
            let known: Vec<_> = table.iter().map(|(k, _)| *k).collect();
            Diagnostic::new(
                t.pos,
                DiagnosticKind::UnknownKey,
                format!("unknown key `{key}` for {owner} (known: {})", known.join(", ")),
            )
        })?;
        self.expect(Tok::Eq, "`=` after the parameter name")?;
        let value = self.value(&key, kind)?;
        Ok((Assignment { key, value }, t.pos))
    }

    fn number(&self, t: &Token) -> Result<BigRational, Diagnostic> {
        match &t.tok {
            Tok::Number { text, .. } => parse_decimal(text)
                .ok_or_else(|| syntax(t.pos, format!("malformed number `{text}`"))),
            other => Err(syntax(t.pos, format!("expected a number, found {}", other.describe()))),
        }
    }

    fn value(&mut self, key: &str, kind: KeyKind) -> Result<Value, Diagnostic> {
        let t = self.next();
        match kind {
            KeyKind::Choice(options) => match &t.tok {
                Tok::Ident(s) if options.contains(&s.as_str()) => Ok(Value::Ident(s.clone())),
                other => Err(Diagnostic::new(
                    t.pos,
                    DiagnosticKind::Range,
                    format!("`{key}` must be one of {}, found {}", options.join(", "), other.describe()),
                )),
            },
            KeyKind::Integers | KeyKind::IncreasingPositive => {
                if t.tok != Tok::LBracket {
                    return Err(syntax(t.pos, format!("`{key}` takes a list like [1, 2]")));
                }
                let mut items: Vec<BigRational> = Vec::new();
                loop {
                    let n = self.next();
                    if let Tok::Number { unit: Some(u), .. } = &n.tok {
                        return Err(Diagnostic::new(
                            n.unit_pos.unwrap_or(n.pos),
                            DiagnosticKind::UnitMismatch,
                            format!("list items of `{key}` take no unit, found `{u}`"),
                        ));
                    }
                    let x = self.number(&n)?;
                    let ok = match kind {
                        KeyKind::Integers => x.is_integer(),
                        _ => x.is_positive() && items.last().is_none_or(|last| x > *last),
                    };
                    if !ok {
                        let want = match kind {
                            KeyKind::Integers => "integers",
                            _ => "positive and strictly increasing",
                        };
                        return Err(Diagnostic::new(
                            n.pos,
                            DiagnosticKind::Range,
                            format!("items of `{key}` must be {want}"),
                        ));
                    }
                    items.push(x);
                    let sep = self.next();
                    match sep.tok {
                        Tok::Comma => continue,
                        Tok::RBracket => break,
                        other => {
                            return Err(syntax(
                                sep.pos,
                                format!("expected `,` or `]`, found {}", other.describe()),
                            ))
                        }
                    }
                }
                Ok(Value::List(items))
            }
            KeyKind::Quantity(dim, range) => {
                let x = self.number(&t)?;
                let Tok::Number { unit, .. } = &t.tok else {
                    unreachable!("number() accepted the token")
                };
                let unit_pos = t.unit_pos.unwrap_or(t.pos);
                let (unit, value) = match unit {
                    None if dim == Dimension::Dimensionless => (Unit::None, x),
                    None => {
                        return Err(Diagnostic::new(
                            t.pos,
                            DiagnosticKind::UnitMismatch,
                            format!("`{key}` needs a unit ({dim})"),
                        ))
                    }
                    Some(symbol) => {
                        let (unit, scale) = lookup_unit(symbol).ok_or_else(|| {
                            Diagnostic::new(
                                unit_pos,
                                DiagnosticKind::UnknownUnit,
                                format!("unknown unit `{symbol}`"),
                            )
                        })?;
                        if unit.dimension() != dim {
                            return Err(Diagnostic::new(
                                unit_pos,
                                DiagnosticKind::UnitMismatch,
                                format!(
                                    "`{key}` expects {dim}, but `{symbol}` is {}",
                                    unit.dimension()
                                ),
                            ));
                        }
                        (unit, x * scale)
                    }
                };
                if !range.admits(&value) {
                    return Err(Diagnostic::new(
                        t.pos,
                        DiagnosticKind::Range,
                        format!("`{key}` must be {}", range.describe()),
                    ));
                }
                Ok(Value::Quantity(Quantity::new(value, unit)))
            }
        }
    }
}

fn push_unique(params: &mut Vec<Assignment>, a: Assignment, pos: Pos) -> Result<(), Diagnostic> {
    if params.iter().any(|p| p.key == a.key) {
        return Err(Diagnostic::new(
            pos,
            DiagnosticKind::Duplicate,
            format!("`{}` given twice", a.key),
        ));
    }
    params.push(a);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "device { displacer d=4mm chi=0rad ; pockels vhalf=3200V ; displacer d=4mm tilt=0rad ; pinhole rails=[1] ; hwp angle=45deg }
source { rep_rate=250kHz wavelength=800nm polarization=H }
trigger { freq=1kHz vpeak=3200V flat=10ns tau=500ns jitter=1.5ns }
";

    fn err(text: &str) -> Diagnostic {
        parse(text).unwrap_err()
    }

    #[test]
    fn one_line_sections() {
        let doc = parse(EXAMPLE).unwrap();
        assert_eq!(doc.device.len(), 5);
        assert_eq!(doc.device[3].kind, ElementKind::Pinhole);
        assert_eq!(doc.source.len(), 3);
        assert_eq!(doc.trigger.len(), 5);
        assert!(doc.sweep.is_none());
    }

    #[test]
    fn units_are_normalized() {
        let doc = parse("device {\n displacer d=0.004m\n}\nsource {\n}\ntrigger {\n}\n").unwrap();
        assert_eq!(doc.device[0].params[0].to_string(), "d=4mm");
    }

    #[test]
    fn empty_input_fails_on_line_one() {
        for text in ["", "\n\n", "# only a comment"] {
            let e = err(text);
            assert_eq!(e.line(), 1, "{text:?}: {e}");
            assert_eq!(e.kind, DiagnosticKind::Syntax);
        }
    }

    #[test]
    fn duplicate_section_names_both_places() {
        let e = err("device {\n}\nsource {\n}\ndevice {\n}\ntrigger {\n}\n");
        assert_eq!(e.kind, DiagnosticKind::Duplicate);
        assert_eq!(e.line(), 5);
        assert!(e.message.contains("1:1"), "{e}");
    }

    #[test]
    fn diagnostics_point_at_the_problem() {
        let cases = [
            ("device {\n displacer d=4parsec\n}", 2, 15, DiagnosticKind::UnknownUnit),
            ("device {\n displacer d=4ns\n}", 2, 15, DiagnosticKind::UnitMismatch),
            ("device {\n displacer d=4\n}", 2, 14, DiagnosticKind::UnitMismatch),
            ("device {\n laser\n}", 2, 2, DiagnosticKind::UnknownElement),
            ("device {\n hwp colour=3\n}", 2, 6, DiagnosticKind::UnknownKey),
            ("device {\n displacer leak_h=0.2\n}", 2, 19, DiagnosticKind::Range),
            ("device {\n pinhole rails=[1.5]\n}", 2, 17, DiagnosticKind::Range),
            ("device {\n hwp angle=1rad angle=2rad\n}", 2, 17, DiagnosticKind::Duplicate),
            ("lens {\n}", 1, 1, DiagnosticKind::UnknownSection),
            ("device {\n hwp angle 3\n}", 2, 12, DiagnosticKind::Syntax),
            ("device {\n hwp\n", 3, 1, DiagnosticKind::Syntax),
            ("device {\n}\nsource {\n polarization=Q\n}", 4, 15, DiagnosticKind::Range),
            ("device {\n}\nsource {\n}", 4, 2, DiagnosticKind::Missing),
            ("device {\n}\nsource {\n}\ntrigger {\n}\ntargets {\n t_on=0.9\n}", 7, 1, DiagnosticKind::Missing),
        ];
        for (text, line, column, kind) in cases {
            let e = err(text);
            assert_eq!((e.line(), e.column(), e.kind), (line, column, kind), "{text:?}: {e}");
        }
    }
}
