use thiserror::Error;

use eraser_core::biphoton::Arm;
use eraser_core::waveoptics::SlitSide;

use super::*;

/// Where and why a scene failed to parse. `line` and `column` are 1-based;
/// `column` counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub token: String,
}

type PResult<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Token<'a> {
    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(ParseError {
            line: self.line,
            column: self.col,
            message: message.into(),
            token: self.text.to_string(),
        })
    }

    /// Sub-token over the bytes `start..end`.
    fn slice(&self, start: usize, end: usize) -> Token<'a> {
        Token {
            text: &self.text[start..end],
            line: self.line,
            col: self.col + self.text[..start].chars().count(),
        }
    }
}

fn tokenize(line: &str, no: usize) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (i, c)) in code.char_indices().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some((i, col + 1)),
            (true, Some((s, sc))) => {
                out.push(Token {
                    text: &code[s..i],
                    line: no,
                    col: sc,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((s, sc)) = start {
        out.push(Token {
            text: &code[s..],
            line: no,
            col: sc,
        });
    }
    out
}

/// The `key=value` tail of a declaration.
struct Fields<'a> {
    head: Token<'a>,
    items: Vec<(Token<'a>, Token<'a>, bool)>,
}

impl<'a> Fields<'a> {
    fn new(head: Token<'a>, tokens: &[Token<'a>]) -> PResult<Self> {
        let mut items: Vec<(Token, Token, bool)> = Vec::new();
        for t in tokens {
            let Some(eq) = t.text.find('=') else {
                return t.error(format!("expected key=value, found '{}'", t.text));
            };
            let key = t.slice(0, eq);
            let value = t.slice(eq + 1, t.text.len());
            if key.text.is_empty() {
                return t.error("missing key before '='");
            }
            if value.text.is_empty() {
                return value.error(format!("missing value for '{}'", key.text));
            }
            if items.iter().any(|(k, _, _)| k.text == key.text) {
                return key.error(format!("duplicate key '{}'", key.text));
            }
            items.push((key, value, false));
        }
        Ok(Self { head, items })
    }

    fn take(&mut self, key: &str) -> Option<Token<'a>> {
        let item = self.items.iter_mut().find(|(k, _, used)| k.text == key && !used)?;
        item.2 = true;
        Some(item.1)
    }

    fn required(&mut self, key: &str) -> PResult<Token<'a>> {
        match self.take(key) {
            Some(v) => Ok(v),
            None => self.head.error(format!("{} requires '{key}='", self.head.text)),
        }
    }

    fn finish(self) -> PResult<()> {
        match self.items.iter().find(|(_, _, used)| !used) {
            Some((k, _, _)) => k.error(format!("unknown key '{}' for {}", k.text, self.head.text)),
            None => Ok(()),
        }
    }
}

fn quantity(t: Token, dim: Dimension) -> PResult<Quantity> {
    let unit = [Unit::Nm, Unit::Um, Unit::Mm, Unit::Deg, Unit::Rad, Unit::M]
        .into_iter()
        .find(|u| t.text.ends_with(u.suffix()));
    let expected = match dim {
        Dimension::Length => "nm, um, mm or m",
        Dimension::Angle => "deg or rad",
    };
    let Some(unit) = unit else {
        return if t.text.parse::<f64>().is_ok() {
            t.error(format!("'{}' needs a unit ({expected})", t.text))
        } else {
            t.error(format!("invalid quantity '{}'", t.text))
        };
    };
    let number = &t.text[..t.text.len() - unit.suffix().len()];
    let value: f64 = match number.parse() {
        Ok(v) => v,
        Err(_) => return t.error(format!("invalid quantity '{}'", t.text)),
    };
    if !value.is_finite() {
        return t.error(format!("'{}' is not finite", t.text));
    }
    if unit.dimension() != dim {
        return t.error(format!("'{}' has the wrong unit; expected {expected}", t.text));
    }
    Ok(Quantity::new(value, unit))
}

fn positive(t: Token, dim: Dimension) -> PResult<Quantity> {
    let q = quantity(t, dim)?;
    if q.value <= 0.0 {
        return t.error(format!("'{}' must be positive", t.text));
    }
    Ok(q)
}

fn integer<T: std::str::FromStr>(t: Token) -> PResult<T> {
    t.text
        .parse()
        .or_else(|_| t.error(format!("expected a non-negative integer, found '{}'", t.text)))
}

fn at_least(t: Token, min: usize) -> PResult<usize> {
    let v: usize = integer(t)?;
    if v < min {
        return t.error(format!("expected at least {min}, found {v}"));
    }
    Ok(v)
}

fn word<T: Copy>(t: Token, choices: &[(&str, T)]) -> PResult<T> {
    match choices.iter().find(|(name, _)| *name == t.text) {
        Some((_, v)) => Ok(*v),
        None => {
            let names: Vec<&str> = choices.iter().map(|(n, _)| *n).collect();
            t.error(format!("expected one of {}, found '{}'", names.join(", "), t.text))
        }
    }
}

const SIDES: [(&str, SlitSide); 2] = [("upper", SlitSide::Upper), ("lower", SlitSide::Lower)];
const ARMS: [(&str, Arm); 2] = [("signal", Arm::Signal), ("idler", Arm::Idler)];

fn range(t: Token) -> PResult<(Quantity, Quantity)> {
    let Some(dots) = t.text.find("..") else {
        return t.error(format!("expected a range like -5mm..5mm, found '{}'", t.text));
    };
    let lo = quantity(t.slice(0, dots), Dimension::Length)?;
    let hi_tok = t.slice(dots + 2, t.text.len());
    let hi = quantity(hi_tok, Dimension::Length)?;
    if lo.si() >= hi.si() {
        return hi_tok.error("scan range must be increasing");
    }
    Ok((lo, hi))
}

fn source(head: Token, rest: &[Token]) -> PResult<SourceDecl> {
    let Some(kind_tok) = rest.first() else {
        return head.error("source requires a kind (walborn, menzel or custom)");
    };
    let kind = word(
        *kind_tok,
        &[
            ("walborn", SourceKind::Walborn),
            ("menzel", SourceKind::Menzel),
            ("custom", SourceKind::Custom),
        ],
    )?;
    let mut f = Fields::new(*kind_tok, &rest[1..])?;
    let mode = match (kind, f.take("mode")) {
        (SourceKind::Custom, Some(t)) => Some(integer(t)?),
        (_, Some(t)) => return t.error("mode applies to custom sources only"),
        (_, None) => None,
    };
    let waist = f.take("waist").map(|t| positive(t, Dimension::Length)).transpose()?;
    let wavelength = f.take("wavelength").map(|t| positive(t, Dimension::Length)).transpose()?;
    f.finish()?;
    Ok(SourceDecl {
        kind,
        mode,
        waist,
        wavelength,
    })
}

fn element(head: Token, rest: &[Token]) -> PResult<ElementDecl> {
    let Some(kind) = rest.first() else {
        return head.error("element requires a kind");
    };
    let mut f = Fields::new(*kind, &rest[1..])?;
    let center = |f: &mut Fields| f.take("center").map(|t| quantity(t, Dimension::Length)).transpose();
    let el = match kind.text {
        "double_slit" => ElementDecl::DoubleSlit {
            width: positive(f.required("width")?, Dimension::Length)?,
            separation: positive(f.required("separation")?, Dimension::Length)?,
            center: center(&mut f)?,
            closed: f.take("closed").map(|t| word(t, &SIDES)).transpose()?,
        },
        "single_slit" => ElementDecl::SingleSlit {
            width: positive(f.required("width")?, Dimension::Length)?,
            center: center(&mut f)?,
        },
        "qwp" => ElementDecl::Qwp {
            slit: word(f.required("slit")?, &SIDES)?,
            angle: quantity(f.required("angle")?, Dimension::Angle)?,
        },
        "polarizer" => ElementDecl::Polarizer {
            arm: word(f.required("arm")?, &ARMS)?,
            angle: quantity(f.required("angle")?, Dimension::Angle)?,
        },
        "propagate" => ElementDecl::Propagate {
            arm: word(f.required("arm")?, &ARMS)?,
            distance: positive(f.required("distance")?, Dimension::Length)?,
        },
        other => {
            return kind.error(format!(
                "unknown element '{other}'; expected double_slit, single_slit, qwp, polarizer or propagate"
            ))
        }
    };
    f.finish()?;
    Ok(el)
}

fn signal_detector(kind: Token, rest: &[Token]) -> PResult<SignalDetectorDecl> {
    let mut f = Fields::new(kind, rest)?;
    let scan = range(f.required("scan")?)?;
    let steps = at_least(f.required("steps")?, 2)?;
    let at_tok = f.required("at")?;
    let at = quantity(at_tok, Dimension::Length)?;
    if at.value < 0.0 {
        return at_tok.error("detector plane must not lie before the source");
    }
    let method = f
        .take("method")
        .map(|t| word(t, &[("fresnel", Method::Fresnel), ("fraunhofer", Method::Fraunhofer)]))
        .transpose()?;
    f.finish()?;
    Ok(SignalDetectorDecl { scan, steps, at, method })
}

fn idler_detector(kind: Token, rest: &[Token]) -> PResult<IdlerDecl> {
    let Some(rule) = rest.first() else {
        return kind.error("idler detector requires bucket, point, polarized or lobe");
    };
    let mut f = Fields::new(*rule, &rest[1..])?;
    let det = match rule.text {
        "bucket" => IdlerDecl::Bucket,
        "point" => IdlerDecl::Point {
            x: quantity(f.required("x")?, Dimension::Length)?,
            angle: f.take("angle").map(|t| quantity(t, Dimension::Angle)).transpose()?,
        },
        "polarized" => IdlerDecl::Polarized {
            angle: quantity(f.required("angle")?, Dimension::Angle)?,
        },
        "lobe" => IdlerDecl::Lobe {
            side: word(f.required("side")?, &SIDES)?,
        },
        other => return rule.error(format!("unknown idler detector '{other}'; expected bucket, point, polarized or lobe")),
    };
    f.finish()?;
    Ok(det)
}

fn run(head: Token, rest: &[Token]) -> PResult<RunDecl> {
    let (Some(engine_tok), Some(mode_tok)) = (rest.first(), rest.get(1)) else {
        return head.error("run requires an engine and a mode, e.g. 'run orthodox coincidence'");
    };
    let engine = word(*engine_tok, &[("orthodox", Engine::Orthodox), ("pilotwave", Engine::Pilotwave)])?;
    let mode = word(
        *mode_tok,
        &[
            ("coincidence", Mode::Coincidence),
            ("singles", Mode::Singles),
            ("correlation", Mode::Correlation),
        ],
    )?;
    let mut f = Fields::new(*mode_tok, &rest[2..])?;
    let decl = RunDecl {
        engine,
        mode,
        n: f.take("n").map(|t| at_least(t, 1)).transpose()?,
        seed: f.take("seed").map(integer).transpose()?,
        record: f.take("record").map(integer).transpose()?,
        bins: f.take("bins").map(|t| at_least(t, 1)).transpose()?,
        integrator: f
            .take("integrator")
            .map(|t| word(t, &[("transport", IntegratorName::Transport), ("rk4", IntegratorName::Rk4)]))
            .transpose()?,
        steps: f.take("steps").map(|t| at_least(t, 16)).transpose()?,
    };
    f.finish()?;
    Ok(decl)
}

/// Parses and checks a scene.
pub fn parse(text: &str) -> PResult<BenchSpec> {
    let mut src: Option<(SourceDecl, usize)> = None;
    let mut elements = Vec::new();
    let mut signal = None;
    let mut idler = None;
    let mut runs = Vec::new();
    let mut detectors_seen = false;
    // Signal plane after the elements so far, and whether a double slit sits on it.
    let mut plane = 0.0;
    let mut slit_here = false;
    let mut last_line = 1;

    for (i, raw) in text.lines().enumerate() {
        let tokens = tokenize(raw, i + 1);
        let Some(head) = tokens.first().copied() else { continue };
        last_line = i + 1;
        let rest = &tokens[1..];
        match head.text {
            "source" => {
                if let Some((_, first)) = &src {
                    return head.error(format!("duplicate source; first declared on line {first}"));
                }
                src = Some((source(head, rest)?, head.line));
            }
            "element" => {
                if src.is_none() {
                    return head.error("missing source before the first element");
                }
                if detectors_seen || !runs.is_empty() {
                    return head.error("elements must precede detectors and runs");
                }
                let el = element(head, rest)?;
                match &el {
                    ElementDecl::DoubleSlit { .. } => slit_here = true,
                    ElementDecl::SingleSlit { .. } => slit_here = false,
                    ElementDecl::Qwp { .. } if !slit_here => {
                        return rest[0].error("qwp needs a double slit at the same plane");
                    }
                    ElementDecl::Propagate {
                        arm: Arm::Signal,
                        distance,
                    } => {
                        plane += distance.si();
                        slit_here = false;
                    }
                    _ => {}
                }
                elements.push(el);
            }
            "detector" => {
                if src.is_none() {
                    return head.error("missing source before the detectors");
                }
                detectors_seen = true;
                let Some(kind) = rest.first() else {
                    return head.error("detector requires signal or idler");
                };
                match kind.text {
                    "signal" => {
                        if signal.is_some() {
                            return kind.error("duplicate signal detector");
                        }
                        let d = signal_detector(*kind, &rest[1..])?;
                        if d.at.si() < plane {
                            let at = rest[1..].iter().find(|t| t.text.starts_with("at=")).unwrap_or(kind);
                            return at.error(format!("detector plane {} lies before the last element plane {plane} m", d.at));
                        }
                        signal = Some(d);
                    }
                    "idler" => {
                        if idler.is_some() {
                            return kind.error("duplicate idler detector");
                        }
                        idler = Some(idler_detector(*kind, &rest[1..])?);
                    }
                    other => return kind.error(format!("unknown detector '{other}'; expected signal or idler")),
                }
            }
            "run" => {
                if src.is_none() {
                    return head.error("missing source before the first run");
                }
                runs.push(run(head, rest)?);
            }
            other => {
                return head.error(format!(
                    "unknown declaration '{other}'; expected source, element, detector or run"
                ))
            }
        }
    }

    let end = |message: &str| ParseError {
        line: last_line,
        column: 1,
        message: message.into(),
        token: String::new(),
    };
    let (source, _) = src.ok_or_else(|| end("missing source"))?;
    let signal = signal.ok_or_else(|| end("missing signal detector"))?;
    if runs.is_empty() {
        return Err(end("missing run"));
    }
    Ok(BenchSpec {
        source,
        elements,
        signal,
        idler,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "source walborn\ndetector signal scan=-1mm..1mm steps=11 at=1m\nrun orthodox singles\n";

    fn err(text: &str) -> ParseError {
        parse(text).unwrap_err()
    }

    #[test]
    fn tokens_carry_columns() {
        let t = tokenize("  run  orthodox # note", 3);
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].text, t[0].col, t[1].text, t[1].col), ("run", 3, "orthodox", 8));
        assert_eq!(t[0].line, 3);
    }

    #[test]
    fn quantities_need_matching_units() {
        let t = |s| Token { text: s, line: 1, col: 1 };
        assert_eq!(quantity(t("80um"), Dimension::Length).unwrap(), Quantity::new(80.0, Unit::Um));
        assert_eq!(quantity(t("-5mm"), Dimension::Length).unwrap().si(), -5e-3);
        assert_eq!(quantity(t("1e-5m"), Dimension::Length).unwrap().unit, Unit::M);
        assert!((quantity(t("90deg"), Dimension::Angle).unwrap().si() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(quantity(t("45"), Dimension::Angle).unwrap_err().message.contains("needs a unit"));
        assert!(quantity(t("45mm"), Dimension::Angle).unwrap_err().message.contains("wrong unit"));
        assert!(quantity(t("infm"), Dimension::Length).is_err());
        assert!(quantity(t("xmm"), Dimension::Length).is_err());
    }

    #[test]
    fn minimal_scene() {
        let spec = parse(MINIMAL).unwrap();
        assert_eq!(spec.source.kind, SourceKind::Walborn);
        assert!(spec.elements.is_empty() && spec.idler.is_none());
        assert_eq!(spec.runs[0].mode, Mode::Singles);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(err("").message, "missing source");
        assert_eq!(err("# only a comment\n\n").message, "missing source");
        assert_eq!(err("source walborn\n").message, "missing signal detector");
        let e = err("source walborn\nsource menzel\n");
        assert_eq!((e.line, e.column), (2, 1));
        assert!(e.message.contains("duplicate source"));
        let e = err(&format!("{MINIMAL}element double_slit width=80um separation=250um\n"));
        assert!(e.message.contains("precede"));
        let e = err("source walborn\nelement qwp slit=upper angle=45deg\n");
        assert_eq!((e.line, e.column), (2, 9));
        let e = err("source walborn\nelement propagate arm=signal distance=2m\ndetector signal scan=-1mm..1mm steps=11 at=1m\n");
        assert_eq!((e.line, e.column), (3, 41));
        assert!(e.message.contains("before the last element plane"));
    }

    #[test]
    fn field_errors_point_at_the_token() {
        let e = err("source walborn\nelement polarizer arm=idler angle=45\n");
        assert_eq!((e.line, e.column, e.token.as_str()), (2, 35, "45"));
        let e = err("source walborn colour=red\n");
        assert_eq!((e.column, e.token.as_str()), (16, "colour"));
        let e = err("source walborn waist=1mm waist=2mm\n");
        assert!(e.message.contains("duplicate key"));
        let e = err("source menzel mode=1\n");
        assert!(e.message.contains("custom"));
        let e = err("source walborn\nelement double_slit width=80um\n");
        assert!(e.message.contains("separation"));
        let e = err("source walborn\ndetector signal scan=1mm..-1mm steps=11 at=1m\n");
        assert_eq!(e.column, 27);
        let e = err("source walborn\ndetector signal scan=-1mm..1mm steps=1 at=1m\n");
        assert!(e.message.contains("at least 2"));
        let e = err("source walborn\nrun orthodox\n");
        assert!(e.message.contains("engine and a mode"));
        let e = err("source walborn\nrun quantum singles\n");
        assert_eq!(e.column, 5);
    }
}
