//! HamNoSys annotations: tokenizer, recursive-descent parser and the rules
//! that assign a sign class from the parse tree.
//!
//! Grammar (upper case = terminal token kinds):
//!
//! ```text
//! hns                 ::= [SYMMETRY] block
//! block               ::= (handshape_block | non_handshape_block)*
//! handshape_block     ::= HANDSHAPE (HANDSHAPE_MODIFIER | HANDSHAPE_FINGER_LOCATION)*
//! non_handshape_block ::= par | seq | fusion | EXTENDED_FINGER_LOCATION
//!                       | PALM_ORIENTATION | MOVEMENT | MOVEMENT_MODIFIER
//!                       | LOCATION | LOCATION_MODIFIER | OTHER_SYMBOL_NO_GROUP
//!                       | HAMREPLACE | REPEAT
//! par                 ::= HAMPARBEGIN block [HAMPLUS block] HAMPAREND
//! seq                 ::= HAMSEQBEGIN block HAMSEQEND
//! fusion              ::= HAMFUSIONBEGIN block HAMFUSIONEND
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linguistic::SignClass;
use crate::par::{self, Execution};

const DEFAULT_SYMBOLS: &str = include_str!("../data/hamnosys_symbols.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Symmetry,
    Handshape,
    HandshapeModifier,
    HandshapeFingerLocation,
    ExtendedFingerLocation,
    PalmOrientation,
    Movement,
    MovementModifier,
    Location,
    LocationModifier,
    OtherSymbolNoGroup,
    HamParBegin,
    HamParEnd,
    HamSeqBegin,
    HamSeqEnd,
    HamFusionBegin,
    HamFusionEnd,
    HamPlus,
    HamReplace,
    Repeat,
}

impl TokenKind {
    pub const ALL: [TokenKind; 20] = [
        TokenKind::Symmetry,
        TokenKind::Handshape,
        TokenKind::HandshapeModifier,
        TokenKind::HandshapeFingerLocation,
        TokenKind::ExtendedFingerLocation,
        TokenKind::PalmOrientation,
        TokenKind::Movement,
        TokenKind::MovementModifier,
        TokenKind::Location,
        TokenKind::LocationModifier,
        TokenKind::OtherSymbolNoGroup,
        TokenKind::HamParBegin,
        TokenKind::HamParEnd,
        TokenKind::HamSeqBegin,
        TokenKind::HamSeqEnd,
        TokenKind::HamFusionBegin,
        TokenKind::HamFusionEnd,
        TokenKind::HamPlus,
        TokenKind::HamReplace,
        TokenKind::Repeat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TokenKind::Symmetry => "SYMMETRY",
            TokenKind::Handshape => "HANDSHAPE",
            TokenKind::HandshapeModifier => "HANDSHAPE_MODIFIER",
            TokenKind::HandshapeFingerLocation => "HANDSHAPE_FINGER_LOCATION",
            TokenKind::ExtendedFingerLocation => "EXTENDED_FINGER_LOCATION",
            TokenKind::PalmOrientation => "PALM_ORIENTATION",
            TokenKind::Movement => "MOVEMENT",
            TokenKind::MovementModifier => "MOVEMENT_MODIFIER",
            TokenKind::Location => "LOCATION",
            TokenKind::LocationModifier => "LOCATION_MODIFIER",
            TokenKind::OtherSymbolNoGroup => "OTHER_SYMBOL_NO_GROUP",
            TokenKind::HamParBegin => "HAMPARBEGIN",
            TokenKind::HamParEnd => "HAMPAREND",
            TokenKind::HamSeqBegin => "HAMSEQBEGIN",
            TokenKind::HamSeqEnd => "HAMSEQEND",
            TokenKind::HamFusionBegin => "HAMFUSIONBEGIN",
            TokenKind::HamFusionEnd => "HAMFUSIONEND",
            TokenKind::HamPlus => "HAMPLUS",
            TokenKind::HamReplace => "HAMREPLACE",
            TokenKind::Repeat => "REPEAT",
        }
    }

    /// Kinds that form a `non_handshape_block` on their own.
    pub fn is_plain_terminal(self) -> bool {
        matches!(
            self,
            TokenKind::ExtendedFingerLocation
                | TokenKind::PalmOrientation
                | TokenKind::Movement
                | TokenKind::MovementModifier
                | TokenKind::Location
                | TokenKind::LocationModifier
                | TokenKind::OtherSymbolNoGroup
                | TokenKind::HamReplace
                | TokenKind::Repeat
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TokenKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TokenKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown token kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HamToken {
    pub kind: TokenKind,
    pub codepoint: char,
    /// Character index in the source annotation.
    pub position: usize,
}

// ---------------------------------------------------------------------------
// Symbol table

/// Codepoint → token kind mapping, keyed also by symbol name.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    by_char: HashMap<char, (String, TokenKind)>,
    by_name: HashMap<String, char>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::parse(DEFAULT_SYMBOLS).expect("shipped symbol table is valid")
    }
}

impl SymbolTable {
    /// Parses `name<TAB>U+XXXX<TAB>KIND` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut by_char = HashMap::new();
        let mut by_name = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::malformed("symbol table", format!("line {}: {m}", n + 1));
            let cols: Vec<&str> = line.split('\t').collect();
            let [name, code, kind] = cols[..] else {
                return Err(bad("expected 3 tab-separated columns"));
            };
            let hex = code
                .strip_prefix("U+")
                .ok_or_else(|| bad("codepoint must look like U+E000"))?;
            let c = u32::from_str_radix(hex, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| bad("invalid codepoint"))?;
            let kind: TokenKind = kind.parse().map_err(|_| bad("unknown token kind"))?;
            if by_char.insert(c, (name.to_string(), kind)).is_some() {
                return Err(bad("duplicate codepoint"));
            }
            if by_name.insert(name.to_string(), c).is_some() {
                return Err(bad("duplicate symbol name"));
            }
        }
        Ok(SymbolTable { by_char, by_name })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SymbolTable::parse(&text)
    }

    pub fn kind(&self, c: char) -> Option<TokenKind> {
        self.by_char.get(&c).map(|(_, k)| *k)
    }

    pub fn name(&self, c: char) -> Option<&str> {
        self.by_char.get(&c).map(|(n, _)| n.as_str())
    }

    pub fn symbol(&self, name: &str) -> Option<char> {
        self.by_name.get(name).copied()
    }

    /// Builds an annotation string from symbol names.
    pub fn encode(&self, names: &[&str]) -> Result<String> {
        names
            .iter()
            .map(|n| {
                self.symbol(n)
                    .ok_or_else(|| Error::Invalid(format!("unknown HamNoSys symbol {n:?}")))
            })
            .collect()
    }

    /// All symbols of one kind, sorted by codepoint.
    pub fn symbols_of(&self, kind: TokenKind) -> Vec<char> {
        let mut v: Vec<char> = self
            .by_char
            .iter()
            .filter(|(_, (_, k))| *k == kind)
            .map(|(c, _)| *c)
            .collect();
        v.sort_unstable();
        v
    }
}

// ---------------------------------------------------------------------------
// Tokenizer

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenWarning {
    pub position: usize,
    pub codepoint: char,
}

impl fmt::Display for TokenWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown symbol U+{:04X} at position {}",
            self.codepoint as u32, self.position
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tokenized {
    pub tokens: Vec<HamToken>,
    pub warnings: Vec<TokenWarning>,
}

/// Maps every non-whitespace character through the table; unknown ones
/// become `OTHER_SYMBOL_NO_GROUP` with a warning. Never fails.
pub fn tokenize(annotation: &str, table: &SymbolTable) -> Tokenized {
    let mut out = Tokenized::default();
    for (position, codepoint) in annotation.chars().enumerate() {
        if codepoint.is_whitespace() {
            continue;
        }
        let kind = table.kind(codepoint).unwrap_or_else(|| {
            out.warnings.push(TokenWarning {
                position,
                codepoint,
            });
            TokenKind::OtherSymbolNoGroup
        });
        out.tokens.push(HamToken {
            kind,
            codepoint,
            position,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Parse tree

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HandshapeBlock {
    /// A HANDSHAPE token followed by its modifiers and finger locations.
    pub tokens: Vec<HamToken>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bracketed {
    pub open: HamToken,
    pub block: Block,
    pub close: HamToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Par {
    pub open: HamToken,
    pub first: Block,
    pub second: Option<(HamToken, Block)>,
    pub close: HamToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Node {
    Handshape(HandshapeBlock),
    Par(Par),
    Seq(Bracketed),
    Fusion(Bracketed),
    Terminal(HamToken),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Block {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HamNoSysAst {
    pub symmetry: Option<HamToken>,
    pub block: Block,
}

struct Parser<'a> {
    tokens: &'a [HamToken],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<HamToken> {
        self.tokens.get(self.pos).copied()
    }

    fn end_position(&self) -> usize {
        self.tokens.last().map_or(0, |t| t.position + 1)
    }

    fn error(&self, message: String) -> Error {
        let position = self.peek().map_or_else(|| self.end_position(), |t| t.position);
        Error::HamNoSys { position, message }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<HamToken> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(self.error(format!("expected {kind}, found {}", t.kind))),
            None => Err(self.error(format!("expected {kind}, found end of input"))),
        }
    }

    fn block(&mut self) -> Result<Block> {
        let mut nodes = Vec::new();
        while let Some(t) = self.peek() {
            let node = match t.kind {
                TokenKind::Handshape => {
                    self.pos += 1;
                    let mut tokens = vec![t];
                    while let Some(m) = self.peek() {
                        if !matches!(
                            m.kind,
                            TokenKind::HandshapeModifier | TokenKind::HandshapeFingerLocation
                        ) {
                            break;
                        }
                        tokens.push(m);
                        self.pos += 1;
                    }
                    Node::Handshape(HandshapeBlock { tokens })
                }
                TokenKind::HamParBegin => {
                    self.pos += 1;
                    let first = self.block()?;
                    let second = match self.peek() {
                        Some(p) if p.kind == TokenKind::HamPlus => {
                            self.pos += 1;
                            Some((p, self.block()?))
                        }
                        _ => None,
                    };
                    let close = self.expect(TokenKind::HamParEnd)?;
                    Node::Par(Par {
                        open: t,
                        first,
                        second,
                        close,
                    })
                }
                TokenKind::HamSeqBegin | TokenKind::HamFusionBegin => {
                    self.pos += 1;
                    let block = self.block()?;
                    let seq = t.kind == TokenKind::HamSeqBegin;
                    let close = self.expect(if seq {
                        TokenKind::HamSeqEnd
                    } else {
                        TokenKind::HamFusionEnd
                    })?;
                    let b = Bracketed {
                        open: t,
                        block,
                        close,
                    };
                    if seq {
                        Node::Seq(b)
                    } else {
                        Node::Fusion(b)
                    }
                }
                k if k.is_plain_terminal() => {
                    self.pos += 1;
                    Node::Terminal(t)
                }
                TokenKind::HandshapeModifier | TokenKind::HandshapeFingerLocation => {
                    return Err(self.error(format!("{} outside a handshape block", t.kind)));
                }
                TokenKind::Symmetry => {
                    return Err(self.error("SYMMETRY may only open the annotation".into()));
                }
                // closers and HAMPLUS end the block; the caller checks them
                _ => break,
            };
            nodes.push(node);
        }
        Ok(Block { nodes })
    }
}

pub fn parse(tokens: &[HamToken]) -> Result<HamNoSysAst> {
    let mut p = Parser { tokens, pos: 0 };
    let symmetry = match p.peek() {
        Some(t) if t.kind == TokenKind::Symmetry => {
            p.pos += 1;
            Some(t)
        }
        _ => None,
    };
    let block = p.block()?;
    if let Some(t) = p.peek() {
        return Err(p.error(format!("unexpected {} without a matching opener", t.kind)));
    }
    Ok(HamNoSysAst { symmetry, block })
}

/// Tokenizes and parses in one step, discarding tokenizer warnings.
pub fn parse_annotation(annotation: &str, table: &SymbolTable) -> Result<HamNoSysAst> {
    parse(&tokenize(annotation, table).tokens)
}

fn render_block(block: &Block, out: &mut Vec<HamToken>) {
    for node in &block.nodes {
        match node {
            Node::Handshape(h) => out.extend_from_slice(&h.tokens),
            Node::Terminal(t) => out.push(*t),
            Node::Par(p) => {
                out.push(p.open);
                render_block(&p.first, out);
                if let Some((plus, b)) = &p.second {
                    out.push(*plus);
                    render_block(b, out);
                }
                out.push(p.close);
            }
            Node::Seq(b) | Node::Fusion(b) => {
                out.push(b.open);
                render_block(&b.block, out);
                out.push(b.close);
            }
        }
    }
}

/// Flattens a tree back into its token stream.
pub fn render(ast: &HamNoSysAst) -> Vec<HamToken> {
    let mut out = Vec::new();
    out.extend(ast.symmetry);
    render_block(&ast.block, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Class rules

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HandshapeEquality {
    /// Same token kinds and codepoints.
    #[default]
    Exact,
    /// Same token kinds only.
    KindOnly,
}

impl HandshapeEquality {
    pub fn equal(self, a: &HandshapeBlock, b: &HandshapeBlock) -> bool {
        a.tokens.len() == b.tokens.len()
            && a.tokens.iter().zip(&b.tokens).all(|(x, y)| {
                x.kind == y.kind && (self == HandshapeEquality::KindOnly || x.codepoint == y.codepoint)
            })
    }
}

/// The predicates the class rules are built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationFacts {
    pub handshape_blocks: usize,
    pub first_two_equal: Option<bool>,
    pub first_two_in_par: bool,
    pub symmetry: bool,
    pub replace: bool,
    pub repeat: bool,
}

struct Walk<'a> {
    handshapes: Vec<&'a HandshapeBlock>,
    /// Handshape-index ranges covered by each par node.
    par_ranges: Vec<(usize, usize)>,
    replace: bool,
    repeat: bool,
    symmetry: bool,
}

impl<'a> Walk<'a> {
    fn block(&mut self, block: &'a Block) {
        for node in &block.nodes {
            match node {
                Node::Handshape(h) => self.handshapes.push(h),
                Node::Terminal(t) => match t.kind {
                    TokenKind::HamReplace => self.replace = true,
                    TokenKind::Repeat => self.repeat = true,
                    TokenKind::Symmetry => self.symmetry = true,
                    _ => {}
                },
                Node::Par(p) => {
                    let start = self.handshapes.len();
                    self.block(&p.first);
                    if let Some((_, b)) = &p.second {
                        self.block(b);
                    }
                    self.par_ranges.push((start, self.handshapes.len()));
                }
                Node::Seq(b) | Node::Fusion(b) => self.block(&b.block),
            }
        }
    }
}

impl AnnotationFacts {
    pub fn of(ast: &HamNoSysAst, equality: HandshapeEquality) -> Self {
        let mut w = Walk {
            handshapes: Vec::new(),
            par_ranges: Vec::new(),
            replace: false,
            repeat: false,
            symmetry: ast.symmetry.is_some(),
        };
        w.block(&ast.block);
        let first_two_equal = match w.handshapes[..] {
            [a, b, ..] => Some(equality.equal(a, b)),
            _ => None,
        };
        let first_two_in_par = w.par_ranges.iter().any(|&(s, e)| s == 0 && e >= 2);
        AnnotationFacts {
            handshape_blocks: w.handshapes.len(),
            first_two_equal,
            first_two_in_par,
            symmetry: w.symmetry,
            replace: w.replace,
            repeat: w.repeat,
        }
    }
}

/// Outcome of the class rules on one annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// `None` when no rule fires.
    pub sign_class: Option<SignClass>,
    pub evidence: String,
}

/// Applies the class rules in the order 1a, 0a, 2a, 3a, 0b, 1b, 2b, 3b and
/// returns the first that fires.
pub fn classify_annotation(ast: &HamNoSysAst, equality: HandshapeEquality) -> Classification {
    let f = AnnotationFacts::of(ast, equality);
    let b_rule = !f.repeat && f.replace;
    let rules: [(SignClass, bool, &str); 8] = [
        (SignClass::C1a, f.handshape_blocks == 1 && f.symmetry, "one handshape block, SYMMETRY present"),
        (SignClass::C0a, f.handshape_blocks == 1 && !f.symmetry, "one handshape block, no SYMMETRY"),
        (
            SignClass::C2a,
            f.handshape_blocks == 2 && f.first_two_equal == Some(true) && f.first_two_in_par && !f.symmetry,
            "two equal handshape blocks inside one par, no SYMMETRY",
        ),
        (
            SignClass::C3a,
            f.handshape_blocks == 2 && f.first_two_equal == Some(false) && f.first_two_in_par && !f.symmetry,
            "two different handshape blocks inside one par, no SYMMETRY",
        ),
        (
            SignClass::C0b,
            f.handshape_blocks == 2 && f.first_two_equal == Some(false) && b_rule && !f.symmetry,
            "two different handshape blocks, HAMREPLACE, no SYMMETRY or REPEAT",
        ),
        (
            SignClass::C1b,
            f.handshape_blocks == 2 && f.first_two_equal == Some(false) && b_rule && f.symmetry,
            "two different handshape blocks, HAMREPLACE, SYMMETRY, no REPEAT",
        ),
        (
            SignClass::C2b,
            f.handshape_blocks == 3 && f.first_two_equal == Some(true) && b_rule && !f.symmetry,
            "three handshape blocks, first two equal, HAMREPLACE, no SYMMETRY or REPEAT",
        ),
        (
            SignClass::C3b,
            f.handshape_blocks == 3 && f.first_two_equal == Some(false) && b_rule && !f.symmetry,
            "three handshape blocks, first two different, HAMREPLACE, no SYMMETRY or REPEAT",
        ),
    ];
    match rules.iter().find(|r| r.1) {
        Some(&(c, _, why)) => Classification {
            sign_class: Some(c),
            evidence: format!("rule {c}: {why}"),
        },
        None => Classification {
            sign_class: None,
            evidence: format!(
                "no rule: {} handshape block(s), symmetry={}, replace={}, repeat={}, first two in par={}",
                f.handshape_blocks, f.symmetry, f.replace, f.repeat, f.first_two_in_par
            ),
        },
    }
}

// ---------------------------------------------------------------------------
// Corpus labelling

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub gloss: String,
    pub annotation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassifiedAnnotation {
    pub gloss: String,
    #[serde(skip)]
    pub ast: Option<HamNoSysAst>,
    pub sign_class: Option<SignClass>,
    pub evidence: String,
    pub diagnostics: Vec<String>,
}

impl ClassifiedAnnotation {
    pub fn class_label(&self) -> String {
        self.sign_class
            .map_or_else(|| UNCLASSIFIABLE.to_string(), |c| c.to_string())
    }
}

pub const UNCLASSIFIABLE: &str = "unclassifiable";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusLabels {
    pub records: Vec<ClassifiedAnnotation>,
    /// Counts per class label, including `unclassifiable`.
    pub counts: BTreeMap<String, usize>,
}

pub fn label_record(record: &CorpusRecord, table: &SymbolTable, equality: HandshapeEquality) -> ClassifiedAnnotation {
    let tokenized = tokenize(&record.annotation, table);
    let mut diagnostics: Vec<String> = tokenized.warnings.iter().map(ToString::to_string).collect();
    match parse(&tokenized.tokens) {
        Ok(ast) => {
            let c = classify_annotation(&ast, equality);
            ClassifiedAnnotation {
                gloss: record.gloss.clone(),
                ast: Some(ast),
                sign_class: c.sign_class,
                evidence: c.evidence,
                diagnostics,
            }
        }
        Err(e) => {
            diagnostics.push(e.to_string());
            ClassifiedAnnotation {
                gloss: record.gloss.clone(),
                ast: None,
                sign_class: None,
                evidence: "parse error".into(),
                diagnostics,
            }
        }
    }
}

/// Labels every record independently; a bad record never affects the others.
pub fn label_corpus(
    records: &[CorpusRecord],
    table: &SymbolTable,
    equality: HandshapeEquality,
    exec: Execution,
) -> CorpusLabels {
    let records = par::map(exec, records, |r| label_record(r, table, equality));
    let mut counts = BTreeMap::new();
    for r in &records {
        *counts.entry(r.class_label()).or_insert(0) += 1;
    }
    CorpusLabels { records, counts }
}

/// Reads a tab-separated `gloss<TAB>annotation` corpus. A first row of
/// `gloss<TAB>annotation` is treated as a header; `#` lines are comments.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text).map_err(|m| Error::malformed(path.display().to_string(), m))
}

pub fn parse_corpus(text: &str) -> std::result::Result<Vec<CorpusRecord>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .comment(Some(b'#'))
        .quoting(false)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        if row.len() != 2 {
            return Err(format!("record {}: expected 2 columns, found {}", i + 1, row.len()));
        }
        if i == 0 && &row[0] == "gloss" && &row[1] == "annotation" {
            continue;
        }
        out.push(CorpusRecord {
            gloss: row[0].to_string(),
            annotation: row[1].to_string(),
        });
    }
    Ok(out)
}

/// Writes `gloss, class, evidence, diagnostics` as tab-separated text.
pub fn write_labels(labels: &CorpusLabels, path: impl AsRef<Path>, header: &str) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for line in header.lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str("gloss\tclass\tevidence\tdiagnostics\n");
    for r in &labels.records {
        let clean = |s: &str| s.replace(['\t', '\n'], " ");
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            clean(&r.gloss),
            r.class_label(),
            clean(&r.evidence),
            clean(&r.diagnostics.join("; "))
        ));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
