//! Specifications: probability-threshold temporal properties and undiscounted
//! expected-reward properties over the four supported formula templates, plus
//! the deterministic memory automata they compile to.
//!
//! Supported formula shapes (`a`, `b`, `x` are atomic propositions):
//!
//! * `!x U a` and `true U a` / `F a` — constrained and plain reachability;
//! * `F (a & F b)` — sequenced reachability (first `a`, then `b`);
//! * `GF a & GF b & !F x` — recurrence of two targets under safety.
//!
//! Anything else is rejected; the repair loop only ever needs these shapes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("syntax error in specification at byte {at}: {msg}")]
    Syntax { at: usize, msg: String },
    #[error("unsupported formula: {0}")]
    Unsupported(String),
    #[error("threshold {0} outside its domain")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    Probability,
    ExpectedReward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Cmp {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Cmp::Lt => value < bound,
            Cmp::Le => value <= bound,
            Cmp::Ge => value >= bound,
            Cmp::Gt => value > bound,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Maximize,
    Minimize,
    Threshold { cmp: Cmp, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Template {
    /// `!avoid U goal`
    Until { avoid: String, goal: String },
    /// `F goal`
    Eventually { goal: String },
    /// `F (first & F second)`
    SeqReach { first: String, second: String },
    /// `GF rec_a & GF rec_b & !F avoid`
    RecurrenceSafety { rec_a: String, rec_b: String, avoid: String },
}

impl Template {
    /// Atomic propositions the template mentions.
    pub fn propositions(&self) -> Vec<&str> {
        match self {
            Template::Until { avoid, goal } => vec![avoid, goal],
            Template::Eventually { goal } => vec![goal],
            Template::SeqReach { first, second } => vec![first, second],
            Template::RecurrenceSafety { rec_a, rec_b, avoid } => vec![rec_a, rec_b, avoid],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub kind: SpecKind,
    pub direction: Direction,
    pub template: Template,
}

impl Specification {
    /// Whether larger verified values are better for this specification.
    pub fn maximizing(&self) -> bool {
        match self.direction {
            Direction::Maximize => true,
            Direction::Minimize => false,
            Direction::Threshold { cmp, .. } => matches!(cmp, Cmp::Ge | Cmp::Gt),
        }
    }

    pub fn threshold(&self) -> Option<(Cmp, f64)> {
        match self.direction {
            Direction::Threshold { cmp, bound } => Some((cmp, bound)),
            _ => None,
        }
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match (self.kind, self.direction) {
            (SpecKind::Probability, Direction::Maximize) => "Pmax".to_string(),
            (SpecKind::Probability, Direction::Minimize) => "Pmin".to_string(),
            (SpecKind::Probability, Direction::Threshold { cmp, bound }) => {
                format!("P{}{}", cmp.as_str(), bound)
            }
            (SpecKind::ExpectedReward, Direction::Maximize) => "Emax".to_string(),
            (SpecKind::ExpectedReward, Direction::Minimize) => "Emin".to_string(),
            (SpecKind::ExpectedReward, Direction::Threshold { cmp, bound }) => {
                format!("E{}{}", cmp.as_str(), bound)
            }
        };
        let body = match &self.template {
            Template::Until { avoid, goal } => format!("!{avoid} U {goal}"),
            Template::Eventually { goal } => format!("F {goal}"),
            Template::SeqReach { first, second } => format!("F ({first} & F {second})"),
            Template::RecurrenceSafety { rec_a, rec_b, avoid } => {
                format!("GF {rec_a} & GF {rec_b} & !F {avoid}")
            }
        };
        write!(f, "{head} [ {body} ]")
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ast {
    True,
    Atom(String),
    Not(Box<Ast>),
    And(Vec<Ast>),
    Finally(Box<Ast>),
    Globally(Box<Ast>),
    Until(Box<Ast>, Box<Ast>),
}

struct Tokens<'a> {
    src: &'a str,
    at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    True,
    Not,
    And,
    F,
    G,
    U,
    LParen,
    RParen,
}

impl<'a> Tokens<'a> {
    fn new(src: &'a str) -> Self {
        Tokens { src, at: 0 }
    }

    fn error(&self, msg: impl Into<String>) -> SpecError {
        SpecError::Syntax { at: self.at, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.at..];
        let trimmed = rest.trim_start();
        self.at += rest.len() - trimmed.len();
    }

    fn next_tok(&mut self) -> Result<Option<Tok>, SpecError> {
        self.skip_ws();
        let rest = &self.src[self.at..];
        let Some(c) = rest.chars().next() else {
            return Ok(None);
        };
        let tok = match c {
            '!' | '¬' => {
                self.at += c.len_utf8();
                Tok::Not
            }
            '&' | '∧' => {
                self.at += c.len_utf8();
                Tok::And
            }
            '(' => {
                self.at += 1;
                Tok::LParen
            }
            ')' => {
                self.at += 1;
                Tok::RParen
            }
            c if c.is_alphanumeric() || c == '_' => {
                let len = rest
                    .char_indices()
                    .find(|&(_, c)| !(c.is_alphanumeric() || c == '_'))
                    .map_or(rest.len(), |(i, _)| i);
                let word = &rest[..len];
                match word {
                    "true" => {
                        self.at += len;
                        Tok::True
                    }
                    "U" => {
                        self.at += len;
                        Tok::U
                    }
                    "F" => {
                        self.at += len;
                        Tok::F
                    }
                    "G" => {
                        self.at += len;
                        Tok::G
                    }
                    // Common contraction: `GF x`.
                    _ if word.starts_with('G') && word.chars().all(|c| c == 'G' || c == 'F') => {
                        self.at += 1;
                        Tok::G
                    }
                    _ => {
                        self.at += len;
                        Tok::Ident(word.to_string())
                    }
                }
            }
            other => return Err(self.error(format!("unexpected character `{other}`"))),
        };
        Ok(Some(tok))
    }

    fn peek(&mut self) -> Result<Option<Tok>, SpecError> {
        let save = self.at;
        let tok = self.next_tok()?;
        self.at = save;
        Ok(tok)
    }

    fn expect(&mut self, want: Tok) -> Result<(), SpecError> {
        match self.next_tok()? {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(self.error(format!("expected {want:?}, found {t:?}"))),
            None => Err(self.error(format!("expected {want:?}, found end of input"))),
        }
    }
}

// formula := conjunct ('U' conjunct | ('&' conjunct)+)?
fn parse_formula(t: &mut Tokens) -> Result<Ast, SpecError> {
    let first = parse_conjunct(t)?;
    match t.peek()? {
        Some(Tok::U) => {
            t.next_tok()?;
            let rhs = parse_conjunct(t)?;
            Ok(Ast::Until(Box::new(first), Box::new(rhs)))
        }
        Some(Tok::And) => {
            let mut parts = vec![first];
            while let Some(Tok::And) = t.peek()? {
                t.next_tok()?;
                parts.push(parse_conjunct(t)?);
            }
            Ok(Ast::And(parts))
        }
        _ => Ok(first),
    }
}

fn parse_conjunct(t: &mut Tokens) -> Result<Ast, SpecError> {
    match t.next_tok()? {
        Some(Tok::Not) => Ok(Ast::Not(Box::new(parse_conjunct(t)?))),
        Some(Tok::F) => Ok(Ast::Finally(Box::new(parse_conjunct(t)?))),
        Some(Tok::G) => Ok(Ast::Globally(Box::new(parse_conjunct(t)?))),
        Some(Tok::True) => Ok(Ast::True),
        Some(Tok::Ident(name)) => Ok(Ast::Atom(name)),
        Some(Tok::LParen) => {
            let inner = parse_formula(t)?;
            t.expect(Tok::RParen)?;
            Ok(inner)
        }
        Some(other) => Err(t.error(format!("unexpected token {other:?}"))),
        None => Err(t.error("unexpected end of formula")),
    }
}

fn match_template(ast: &Ast) -> Result<Template, SpecError> {
    let atom = |a: &Ast| -> Option<String> {
        match a {
            Ast::Atom(s) => Some(s.clone()),
            _ => None,
        }
    };
    match ast {
        Ast::Until(lhs, rhs) => {
            let goal = atom(rhs)
                .ok_or_else(|| SpecError::Unsupported("right operand of U must be an atom".into()))?;
            match &**lhs {
                Ast::True => Ok(Template::Eventually { goal }),
                Ast::Not(inner) => {
                    let avoid = atom(inner).ok_or_else(|| {
                        SpecError::Unsupported("left operand of U must be `true` or `!<atom>`".into())
                    })?;
                    Ok(Template::Until { avoid, goal })
                }
                _ => Err(SpecError::Unsupported(
                    "left operand of U must be `true` or `!<atom>`".into(),
                )),
            }
        }
        Ast::Finally(body) => match &**body {
            Ast::Atom(goal) => Ok(Template::Eventually { goal: goal.clone() }),
            Ast::And(parts) if parts.len() == 2 => {
                let (first, second) = match (&parts[0], &parts[1]) {
                    (Ast::Atom(a), Ast::Finally(b)) => (a.clone(), atom(b)),
                    (Ast::Finally(b), Ast::Atom(a)) => (a.clone(), atom(b)),
                    _ => {
                        return Err(SpecError::Unsupported(
                            "nested reachability must look like F (a & F b)".into(),
                        ))
                    }
                };
                let second = second.ok_or_else(|| {
                    SpecError::Unsupported("nested reachability must look like F (a & F b)".into())
                })?;
                Ok(Template::SeqReach { first, second })
            }
            _ => Err(SpecError::Unsupported("unrecognized F-formula".into())),
        },
        Ast::And(parts) => {
            let mut recs: Vec<String> = Vec::new();
            let mut avoid: Option<String> = None;
            for part in parts {
                match part {
                    Ast::Globally(inner) => match &**inner {
                        Ast::Finally(a) => match atom(a) {
                            Some(name) => recs.push(name),
                            None => return Err(SpecError::Unsupported("GF must wrap an atom".into())),
                        },
                        _ => return Err(SpecError::Unsupported("G must wrap F <atom>".into())),
                    },
                    Ast::Not(inner) => match &**inner {
                        Ast::Finally(a) => match (atom(a), &avoid) {
                            (Some(name), None) => avoid = Some(name),
                            _ => {
                                return Err(SpecError::Unsupported(
                                    "expected exactly one !F <atom> conjunct".into(),
                                ))
                            }
                        },
                        _ => return Err(SpecError::Unsupported("! must wrap F <atom>".into())),
                    },
                    _ => {
                        return Err(SpecError::Unsupported(
                            "conjunction must combine GF atoms and one !F atom".into(),
                        ))
                    }
                }
            }
            match (recs.len(), avoid) {
                (2, Some(avoid)) => Ok(Template::RecurrenceSafety {
                    rec_a: recs[0].clone(),
                    rec_b: recs[1].clone(),
                    avoid,
                }),
                _ => Err(SpecError::Unsupported("recurrence form must be GF a & GF b & !F x".into())),
            }
        }
        _ => Err(SpecError::Unsupported("formula does not match a supported template".into())),
    }
}

/// Parses e.g. `Pmax [ !X U A ]`, `Emin [ F (A & F B) ]`, `P<=0.5 [ true U A ]`.
pub fn parse_spec(text: &str) -> Result<Specification, SpecError> {
    let trimmed = text.trim();
    let bracket = trimmed
        .find('[')
        .ok_or_else(|| SpecError::Syntax { at: 0, msg: "missing `[ ... ]` body".into() })?;
    let head = trimmed[..bracket].trim();
    let (kind, rest) = match head.chars().next() {
        Some('P') => (SpecKind::Probability, &head[1..]),
        Some('E') => (SpecKind::ExpectedReward, &head[1..]),
        _ => {
            return Err(SpecError::Syntax {
                at: 0,
                msg: format!("expected `P...` or `E...`, found `{head}`"),
            })
        }
    };
    let direction = match rest {
        "max" => Direction::Maximize,
        "min" => Direction::Minimize,
        _ => {
            let (cmp, num) = if let Some(n) = rest.strip_prefix("<=") {
                (Cmp::Le, n)
            } else if let Some(n) = rest.strip_prefix(">=") {
                (Cmp::Ge, n)
            } else if let Some(n) = rest.strip_prefix('<') {
                (Cmp::Lt, n)
            } else if let Some(n) = rest.strip_prefix('>') {
                (Cmp::Gt, n)
            } else {
                return Err(SpecError::Syntax {
                    at: 1,
                    msg: format!("expected max, min or a comparison, found `{rest}`"),
                });
            };
            let bound: f64 = num.trim().parse().map_err(|_| SpecError::Syntax {
                at: bracket,
                msg: format!("expected a threshold, found `{num}`"),
            })?;
            let ok = match kind {
                SpecKind::Probability => (0.0..=1.0).contains(&bound),
                SpecKind::ExpectedReward => bound >= 0.0 && bound.is_finite(),
            };
            if !ok {
                return Err(SpecError::BadThreshold(bound));
            }
            Direction::Threshold { cmp, bound }
        }
    };

    let close = trimmed
        .rfind(']')
        .ok_or_else(|| SpecError::Syntax { at: trimmed.len(), msg: "missing `]`".into() })?;
    let body = &trimmed[bracket + 1..close];
    let mut toks = Tokens::new(body);
    let ast = parse_formula(&mut toks)?;
    if let Some(extra) = toks.peek()? {
        return Err(SpecError::Syntax {
            at: bracket + 1 + toks.at,
            msg: format!("trailing tokens after formula: {extra:?}"),
        });
    }
    let template = match_template(&ast)?;
    if kind == SpecKind::ExpectedReward
        && matches!(template, Template::RecurrenceSafety { .. } | Template::Until { .. })
    {
        return Err(SpecError::Unsupported(
            "expected-reward properties support only F a and F (a & F b)".into(),
        ));
    }
    Ok(Specification { kind, direction, template })
}

// ---------------------------------------------------------------------------
// Memory automata
// ---------------------------------------------------------------------------

/// Acceptance structure of a [`SpecAutomaton`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acceptance {
    /// Reach a `goal`-labeled state, avoiding `avoid` (if any) on the way.
    Reach { goal: String, avoid: Option<String> },
    /// Reach node 1 (seen `first`), then a `second`-labeled state.
    SeqReach { first: String, second: String },
    /// Visit both recurrence sets infinitely often, never touching `avoid`.
    Recurrence { rec_a: String, rec_b: String, avoid: String },
}

/// Deterministic memory automaton for a supported template. `step` consumes
/// the label set of the state being entered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecAutomaton {
    pub nodes: usize,
    pub initial: usize,
    pub acceptance: Acceptance,
}

impl SpecAutomaton {
    /// Total, deterministic transition on the propositions holding in the
    /// entered state.
    pub fn step(&self, node: usize, holds: &dyn Fn(&str) -> bool) -> usize {
        debug_assert!(node < self.nodes);
        match &self.acceptance {
            Acceptance::Reach { .. } | Acceptance::Recurrence { .. } => 0,
            Acceptance::SeqReach { first, .. } => {
                if node == 1 || holds(first) {
                    1
                } else {
                    0
                }
            }
        }
    }
}

/// Compiles a specification template into its memory automaton.
pub fn build_automaton(spec: &Specification) -> SpecAutomaton {
    match &spec.template {
        Template::Until { avoid, goal } => SpecAutomaton {
            nodes: 1,
            initial: 0,
            acceptance: Acceptance::Reach { goal: goal.clone(), avoid: Some(avoid.clone()) },
        },
        Template::Eventually { goal } => SpecAutomaton {
            nodes: 1,
            initial: 0,
            acceptance: Acceptance::Reach { goal: goal.clone(), avoid: None },
        },
        Template::SeqReach { first, second } => SpecAutomaton {
            nodes: 2,
            initial: 0,
            acceptance: Acceptance::SeqReach { first: first.clone(), second: second.clone() },
        },
        Template::RecurrenceSafety { rec_a, rec_b, avoid } => SpecAutomaton {
            nodes: 1,
            initial: 0,
            acceptance: Acceptance::Recurrence {
                rec_a: rec_a.clone(),
                rec_b: rec_b.clone(),
                avoid: avoid.clone(),
            },
        },
    }
}
