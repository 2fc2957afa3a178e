//! AMR graphs in Penman notation.
//!
//! An [`AmrGraph`] is stored the way it was written: instance, attribute and
//! relation triples in parse order, with inverse roles (`:ARG0-of`) kept as
//! written. Metrics usually work on [`AmrGraph::canonicalized`], which flips
//! inverse relations into their direct form.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Role used for instance triples.
pub const INSTANCE_ROLE: &str = ":instance";
/// Role and value of the synthetic root triple.
pub const TOP_ROLE: &str = ":TOP";
pub const TOP_VALUE: &str = "top";

/// Roles that end in `-of` without being inverses.
const NON_INVERSE_OF_ROLES: &[&str] = &[":consist-of", ":prep-out-of", ":prep-on-behalf-of"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmrError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable `{variable}` defined more than once (line {line}, column {column})")]
    DuplicateVariable {
        variable: String,
        line: usize,
        column: usize,
    },
    #[error("reference to undefined variable `{variable}`")]
    DanglingVariable { variable: String },
    #[error("graph is disconnected: `{variable}` is unreachable from the root")]
    Disconnected { variable: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    pub variable: String,
    pub concept: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub source: String,
    pub role: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    pub source: String,
    pub role: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleKind {
    Instance,
    Attribute,
    Relation,
}

/// A single AMR fact. The `kind` decides what `target` holds: a concept
/// label, a constant, or a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub kind: TripleKind,
    pub source: String,
    pub role: String,
    pub target: String,
}

/// A concept node with its PropBank-style sense suffix split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptNode {
    pub variable: String,
    pub concept: String,
    pub lemma: String,
    pub sense: Option<u8>,
}

/// Splits `pull-up-07` into (`pull-up`, Some(7)). Only a trailing dash
/// followed by exactly two digits counts as a sense.
pub fn split_sense(concept: &str) -> (&str, Option<u8>) {
    let bytes = concept.as_bytes();
    let n = bytes.len();
    if n >= 4
        && bytes[n - 3] == b'-'
        && bytes[n - 2].is_ascii_digit()
        && bytes[n - 1].is_ascii_digit()
    {
        let sense = (bytes[n - 2] - b'0') * 10 + (bytes[n - 1] - b'0');
        return (&concept[..n - 3], Some(sense));
    }
    (concept, None)
}

pub fn is_inverse_role(role: &str) -> bool {
    role.ends_with("-of") && role.len() > 4 && !NON_INVERSE_OF_ROLES.contains(&role)
}

/// `:ARG0-of` <-> `:ARG0`.
pub fn invert_role(role: &str) -> String {
    if is_inverse_role(role) {
        role[..role.len() - 3].to_string()
    } else {
        format!("{role}-of")
    }
}

#[derive(Debug, Clone)]
pub struct AmrGraph {
    root: String,
    instances: Vec<Instance>,
    attributes: Vec<Attribute>,
    relations: Vec<Relation>,
    // Parallel to `relations`: true when the edge introduces its target in
    // the Penman tree (as opposed to a re-entrant reference).
    tree_edges: Vec<bool>,
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
            && self.instances == other.instances
            && self.attributes == other.attributes
            && self.relations == other.relations
    }
}

impl AmrGraph {
    /// Builds a graph from parts, checking every structural invariant.
    pub fn new(
        root: impl Into<String>,
        instances: Vec<Instance>,
        attributes: Vec<Attribute>,
        relations: Vec<Relation>,
    ) -> Result<Self, AmrError> {
        let root = root.into();
        let tree_edges = spanning_tree(&root, &relations);
        let graph = AmrGraph {
            root,
            instances,
            attributes,
            relations,
            tree_edges,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn variable_count(&self) -> usize {
        self.instances.len()
    }

    pub fn concept_of(&self, variable: &str) -> Option<&str> {
        self.instances
            .iter()
            .find(|i| i.variable == variable)
            .map(|i| i.concept.as_str())
    }

    pub fn validate(&self) -> Result<(), AmrError> {
        let mut seen = HashSet::new();
        for inst in &self.instances {
            if inst.variable.is_empty() || inst.concept.is_empty() {
                return Err(AmrError::Invalid("empty variable or concept".into()));
            }
            if !seen.insert(inst.variable.as_str()) {
                return Err(AmrError::DuplicateVariable {
                    variable: inst.variable.clone(),
                    line: 0,
                    column: 0,
                });
            }
        }
        if !seen.contains(self.root.as_str()) {
            return Err(AmrError::DanglingVariable {
                variable: self.root.clone(),
            });
        }
        for attr in &self.attributes {
            check_role(&attr.role)?;
            if !seen.contains(attr.source.as_str()) {
                return Err(AmrError::DanglingVariable {
                    variable: attr.source.clone(),
                });
            }
        }
        for rel in &self.relations {
            check_role(&rel.role)?;
            for v in [&rel.source, &rel.target] {
                if !seen.contains(v.as_str()) {
                    return Err(AmrError::DanglingVariable {
                        variable: v.clone(),
                    });
                }
            }
        }
        let reached = reachable(&self.root, &self.relations);
        if let Some(inst) = self
            .instances
            .iter()
            .find(|i| !reached.contains(i.variable.as_str()))
        {
            return Err(AmrError::Disconnected {
                variable: inst.variable.clone(),
            });
        }
        Ok(())
    }

    /// Triples in a fixed order: instances, attributes (the root triple first
    /// when requested), then relations, each in parse order.
    pub fn triples(&self, include_root: bool) -> Vec<Triple> {
        let mut out = Vec::with_capacity(
            self.instances.len() + self.attributes.len() + self.relations.len() + 1,
        );
        out.extend(self.instances.iter().map(|i| Triple {
            kind: TripleKind::Instance,
            source: i.variable.clone(),
            role: INSTANCE_ROLE.to_string(),
            target: i.concept.clone(),
        }));
        if include_root {
            out.push(Triple {
                kind: TripleKind::Attribute,
                source: self.root.clone(),
                role: TOP_ROLE.to_string(),
                target: TOP_VALUE.to_string(),
            });
        }
        out.extend(self.attributes.iter().map(|a| Triple {
            kind: TripleKind::Attribute,
            source: a.source.clone(),
            role: a.role.clone(),
            target: a.value.clone(),
        }));
        out.extend(self.relations.iter().map(|r| Triple {
            kind: TripleKind::Relation,
            source: r.source.clone(),
            role: r.role.clone(),
            target: r.target.clone(),
        }));
        out
    }

    pub fn concept_nodes(&self) -> Vec<ConceptNode> {
        self.instances
            .iter()
            .map(|i| {
                let (lemma, sense) = split_sense(&i.concept);
                ConceptNode {
                    variable: i.variable.clone(),
                    concept: i.concept.clone(),
                    lemma: lemma.to_string(),
                    sense,
                }
            })
            .collect()
    }

    /// Copy with every inverse relation flipped into its direct form.
    pub fn canonicalized(&self) -> AmrGraph {
        let relations = self
            .relations
            .iter()
            .map(|r| {
                if is_inverse_role(&r.role) {
                    Relation {
                        source: r.target.clone(),
                        role: invert_role(&r.role),
                        target: r.source.clone(),
                    }
                } else {
                    r.clone()
                }
            })
            .collect();
        AmrGraph {
            root: self.root.clone(),
            instances: self.instances.clone(),
            attributes: self.attributes.clone(),
            relations,
            tree_edges: self.tree_edges.clone(),
        }
    }

    /// Copy with variables renamed through `rename`. Order is preserved.
    pub fn renamed(&self, rename: impl Fn(&str) -> String) -> AmrGraph {
        AmrGraph {
            root: rename(&self.root),
            instances: self
                .instances
                .iter()
                .map(|i| Instance {
                    variable: rename(&i.variable),
                    concept: i.concept.clone(),
                })
                .collect(),
            attributes: self
                .attributes
                .iter()
                .map(|a| Attribute {
                    source: rename(&a.source),
                    role: a.role.clone(),
                    value: a.value.clone(),
                })
                .collect(),
            relations: self
                .relations
                .iter()
                .map(|r| Relation {
                    source: rename(&r.source),
                    role: r.role.clone(),
                    target: rename(&r.target),
                })
                .collect(),
            tree_edges: self.tree_edges.clone(),
        }
    }

    /// JAMR-style node addresses: the root is `0`, and the k-th child in the
    /// Penman tree of node `p` is `p.k` (0-based).
    pub fn node_paths(&self) -> HashMap<String, String> {
        let mut paths = HashMap::new();
        let incident = self.incident_edges();
        let mut stack = vec![(self.root.clone(), "0".to_string())];
        let mut used = vec![false; self.relations.len()];
        while let Some((var, path)) = stack.pop() {
            let mut k = 0;
            let mut children = Vec::new();
            for &idx in incident.get(var.as_str()).into_iter().flatten() {
                if used[idx] {
                    continue;
                }
                used[idx] = true;
                let rel = &self.relations[idx];
                let other = if rel.source == var {
                    &rel.target
                } else {
                    &rel.source
                };
                if self.tree_edges[idx] && !paths.contains_key(other) && *other != var {
                    children.push((other.clone(), format!("{path}.{k}")));
                    k += 1;
                }
            }
            paths.insert(var, path);
            // Reverse so the first child is expanded first.
            stack.extend(children.into_iter().rev());
        }
        paths
    }

    fn incident_edges(&self) -> HashMap<&str, Vec<usize>> {
        let mut incident: HashMap<&str, Vec<usize>> = HashMap::new();
        for (idx, rel) in self.relations.iter().enumerate() {
            incident.entry(rel.source.as_str()).or_default().push(idx);
            if rel.target != rel.source {
                incident.entry(rel.target.as_str()).or_default().push(idx);
            }
        }
        incident
    }

    /// Penman text on a single line.
    pub fn to_penman(&self) -> String {
        let incident = self.incident_edges();
        let mut attrs: HashMap<&str, Vec<&Attribute>> = HashMap::new();
        for a in &self.attributes {
            attrs.entry(a.source.as_str()).or_default().push(a);
        }
        let mut writer = PenmanWriter {
            graph: self,
            incident,
            attrs,
            defined: HashSet::new(),
            used: vec![false; self.relations.len()],
            out: String::new(),
        };
        writer.node(&self.root);
        writer.out
    }
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_penman())
    }
}

struct PenmanWriter<'a> {
    graph: &'a AmrGraph,
    incident: HashMap<&'a str, Vec<usize>>,
    attrs: HashMap<&'a str, Vec<&'a Attribute>>,
    defined: HashSet<&'a str>,
    used: Vec<bool>,
    out: String,
}

impl<'a> PenmanWriter<'a> {
    fn node(&mut self, var: &'a str) {
        self.defined.insert(var);
        let concept = self.graph.concept_of(var).unwrap_or("");
        self.out.push('(');
        self.out.push_str(var);
        self.out.push_str(" / ");
        self.out.push_str(concept);
        if let Some(attrs) = self.attrs.get(var) {
            for a in attrs.clone() {
                self.out.push(' ');
                self.out.push_str(&a.role);
                self.out.push(' ');
                self.out.push_str(&a.value);
            }
        }
        let edges = self.incident.get(var).cloned().unwrap_or_default();
        for idx in edges {
            if self.used[idx] {
                continue;
            }
            self.used[idx] = true;
            let rel = &self.graph.relations[idx];
            let (role, other) = if rel.source == var {
                (rel.role.clone(), rel.target.as_str())
            } else {
                (invert_role(&rel.role), rel.source.as_str())
            };
            self.out.push(' ');
            self.out.push_str(&role);
            self.out.push(' ');
            if self.graph.tree_edges[idx] && !self.defined.contains(other) {
                self.node(other);
            } else {
                self.out.push_str(other);
            }
        }
        self.out.push(')');
    }
}

fn check_role(role: &str) -> Result<(), AmrError> {
    if role.len() < 2 || !role.starts_with(':') {
        return Err(AmrError::Invalid(format!("bad role label `{role}`")));
    }
    Ok(())
}

fn reachable<'a>(root: &'a str, relations: &'a [Relation]) -> HashSet<&'a str> {
    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in relations {
        adj.entry(&r.source).or_default().push(&r.target);
        adj.entry(&r.target).or_default().push(&r.source);
    }
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &u in adj.get(v).into_iter().flatten() {
            if seen.insert(u) {
                queue.push_back(u);
            }
        }
    }
    seen
}

/// Marks a BFS spanning tree over the undirected relation graph, visiting
/// edges in stored order.
fn spanning_tree(root: &str, relations: &[Relation]) -> Vec<bool> {
    let mut incident: HashMap<&str, Vec<usize>> = HashMap::new();
    for (idx, r) in relations.iter().enumerate() {
        incident.entry(&r.source).or_default().push(idx);
        incident.entry(&r.target).or_default().push(idx);
    }
    let mut tree = vec![false; relations.len()];
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &idx in incident.get(v).into_iter().flatten() {
            let r = &relations[idx];
            let other = if r.source == v { &r.target } else { &r.source };
            if seen.insert(other) {
                tree[idx] = true;
                queue.push_back(other);
            }
        }
    }
    tree
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> AmrError {
        let (line, column) = line_col(self.text, offset);
        AmrError::Syntax {
            offset,
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        let bytes = self.text.as_bytes();
        loop {
            while self.pos < bytes.len() && (bytes[self.pos] as char).is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < bytes.len()
                && bytes[self.pos] == b'#'
                && at_line_start(self.text, self.pos)
            {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
    }

    fn next(&mut self) -> Result<Option<(Tok, usize)>, AmrError> {
        self.skip_trivia();
        let bytes = self.text.as_bytes();
        if self.pos >= bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        let tok = match bytes[self.pos] {
            b'(' => {
                self.pos += 1;
                Tok::Open
            }
            b')' => {
                self.pos += 1;
                Tok::Close
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'"' => {
                let mut i = self.pos + 1;
                let mut escaped = false;
                loop {
                    if i >= bytes.len() {
                        return Err(self.error(start, "unterminated string"));
                    }
                    match bytes[i] {
                        b'\\' if !escaped => escaped = true,
                        b'"' if !escaped => break,
                        _ => escaped = false,
                    }
                    i += 1;
                }
                let s = self.text[start..=i].to_string();
                self.pos = i + 1;
                self.skip_alignment_marker();
                Tok::Str(s)
            }
            b':' => {
                let end = self.symbol_end(self.pos + 1);
                if end == self.pos + 1 {
                    return Err(self.error(start, "empty role label"));
                }
                let role = self.text[start..end].to_string();
                self.pos = end;
                Tok::Role(strip_alignment(&role).to_string())
            }
            _ => {
                let end = self.symbol_end(self.pos);
                if end == self.pos {
                    return Err(self.error(start, "unexpected character"));
                }
                let sym = self.text[start..end].to_string();
                self.pos = end;
                Tok::Sym(strip_alignment(&sym).to_string())
            }
        };
        Ok(Some((tok, start)))
    }

    fn symbol_end(&self, from: usize) -> usize {
        self.text[from..]
            .find(|c: char| c.is_whitespace() || matches!(c, '(' | ')' | '"'))
            .map_or(self.text.len(), |i| from + i)
    }

    fn skip_alignment_marker(&mut self) {
        let rest = &self.text[self.pos..];
        if rest.starts_with('~') {
            let len = rest
                .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
                .unwrap_or(rest.len());
            self.pos += len;
        }
    }
}

/// Drops a trailing JAMR/ISI alignment marker such as `~e.3` or `~e.3,4`.
fn strip_alignment(s: &str) -> &str {
    match s.find('~') {
        Some(idx) if idx > 0 => {
            let marker = &s[idx + 1..];
            if marker.starts_with("e.") || marker.chars().next().is_some_and(|c| c.is_ascii_digit())
            {
                &s[..idx]
            } else {
                s
            }
        }
        _ => s,
    }
}

fn at_line_start(text: &str, pos: usize) -> bool {
    text[..pos]
        .chars()
        .rev()
        .take_while(|&c| c != '\n')
        .all(|c| c.is_whitespace())
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, column)
}

/// True for symbols shaped like AMR variables (`b`, `xv12`, `p2`).
fn looks_like_variable(s: &str) -> bool {
    let letters = s.bytes().take_while(|b| b.is_ascii_lowercase()).count();
    let rest = &s.as_bytes()[letters..];
    letters >= 1 && (s.len() == 1 || (!rest.is_empty() && rest.iter().all(u8::is_ascii_digit)))
}

enum Pending {
    Child(String),
    Symbol(String, usize),
    Str(String),
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, usize)>,
    instances: Vec<Instance>,
    defined: HashMap<String, usize>,
    edges: Vec<(String, String, Pending)>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&(Tok, usize)>, AmrError> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next()?;
        }
        Ok(self.peeked.as_ref())
    }

    fn bump(&mut self) -> Result<Option<(Tok, usize)>, AmrError> {
        if let Some(t) = self.peeked.take() {
            return Ok(Some(t));
        }
        self.lexer.next()
    }

    fn eof_error(&self) -> AmrError {
        self.lexer
            .error(self.lexer.text.len(), "unexpected end of input")
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, AmrError> {
        match self.bump()? {
            Some((t, pos)) if t == want => Ok(pos),
            Some((_, pos)) => Err(self.lexer.error(pos, format!("expected {what}"))),
            None => Err(self.eof_error()),
        }
    }

    /// node := '(' VAR '/' CONCEPT (ROLE value)* ')'
    fn node(&mut self) -> Result<String, AmrError> {
        self.expect(Tok::Open, "`(`")?;
        let (var, var_pos) = match self.bump()? {
            Some((Tok::Sym(s), pos)) => (s, pos),
            Some((_, pos)) => return Err(self.lexer.error(pos, "expected variable")),
            None => return Err(self.eof_error()),
        };
        if self.defined.contains_key(&var) {
            let (line, column) = line_col(self.lexer.text, var_pos);
            return Err(AmrError::DuplicateVariable {
                variable: var,
                line,
                column,
            });
        }
        self.expect(Tok::Slash, "`/` after variable")?;
        let concept = match self.bump()? {
            Some((Tok::Sym(s), _)) | Some((Tok::Str(s), _)) => s,
            Some((_, pos)) => return Err(self.lexer.error(pos, "expected concept")),
            None => return Err(self.eof_error()),
        };
        self.defined.insert(var.clone(), self.instances.len());
        self.instances.push(Instance {
            variable: var.clone(),
            concept,
        });
        loop {
            match self.bump()? {
                Some((Tok::Close, _)) => break,
                Some((Tok::Role(role), _)) => {
                    let value = match self.peek()? {
                        Some((Tok::Open, _)) => None,
                        Some((Tok::Sym(_), _)) | Some((Tok::Str(_), _)) => match self.bump()? {
                            Some((Tok::Sym(s), pos)) => Some(Pending::Symbol(s, pos)),
                            Some((Tok::Str(s), _)) => Some(Pending::Str(s)),
                            _ => unreachable!(),
                        },
                        Some((_, pos)) => {
                            let pos = *pos;
                            return Err(self.lexer.error(pos, format!("missing value for {role}")));
                        }
                        None => return Err(self.eof_error()),
                    };
                    match value {
                        Some(v) => self.edges.push((var.clone(), role, v)),
                        None => {
                            let slot = self.edges.len();
                            self.edges
                                .push((var.clone(), role, Pending::Child(String::new())));
                            let child = self.node()?;
                            self.edges[slot].2 = Pending::Child(child);
                        }
                    }
                }
                Some((_, pos)) => return Err(self.lexer.error(pos, "expected role or `)`")),
                None => return Err(self.eof_error()),
            }
        }
        Ok(var)
    }
}

/// Parses a single Penman-encoded AMR graph.
pub fn parse_penman(text: &str) -> Result<AmrGraph, AmrError> {
    let mut parser = Parser {
        lexer: Lexer { text, pos: 0 },
        peeked: None,
        instances: Vec::new(),
        defined: HashMap::new(),
        edges: Vec::new(),
    };
    let root = parser.node()?;
    if let Some((_, pos)) = parser.bump()? {
        return Err(parser.lexer.error(pos, "trailing content after graph"));
    }

    let mut attributes = Vec::new();
    let mut relations = Vec::new();
    let mut tree_edges = Vec::new();
    for (source, role, value) in parser.edges {
        match value {
            Pending::Child(target) => {
                relations.push(Relation {
                    source,
                    role,
                    target,
                });
                tree_edges.push(true);
            }
            Pending::Symbol(sym, pos) => {
                if parser.defined.contains_key(&sym) {
                    relations.push(Relation {
                        source,
                        role,
                        target: sym,
                    });
                    tree_edges.push(false);
                } else if looks_like_variable(&sym) {
                    let (line, column) = line_col(text, pos);
                    log::debug!("dangling reference `{sym}` at {line}:{column}");
                    return Err(AmrError::DanglingVariable { variable: sym });
                } else {
                    attributes.push(Attribute {
                        source,
                        role,
                        value: sym,
                    });
                }
            }
            Pending::Str(s) => attributes.push(Attribute {
                source,
                role,
                value: s,
            }),
        }
    }
    let graph = AmrGraph {
        root,
        instances: parser.instances,
        attributes,
        relations,
        tree_edges,
    };
    graph.validate()?;
    Ok(graph)
}

/// Renders `graph` back to Penman text.
pub fn serialize_penman(graph: &AmrGraph) -> String {
    graph.to_penman()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOY_AMR: &str = "(xv0 / hit-01 :ARG0 (xv2 / boy) :ARG1 (xv1 / baseball))";

    fn canonical_set(g: &AmrGraph) -> std::collections::BTreeSet<Triple> {
        g.canonicalized().triples(true).into_iter().collect()
    }

    #[test]
    fn parses_boy_graph() {
        let g = parse_penman(BOY_AMR).unwrap();
        assert_eq!(g.root(), "xv0");
        assert_eq!(g.instances().len(), 3);
        assert_eq!(g.relations().len(), 2);
        assert!(g.attributes().is_empty());
        assert_eq!(g.triples(false).len(), 5);
        assert_eq!(g.triples(true).len(), 6);
    }

    #[test]
    fn parses_minimal_graph() {
        let g = parse_penman("(a / a)").unwrap();
        assert_eq!(g.root(), "a");
        assert_eq!(g.instances().len(), 1);
        assert!(g.relations().is_empty());
        assert_eq!(g.triples(false).len(), 1);
    }

    #[test]
    fn polarity_is_an_attribute() {
        let g = parse_penman("(xv0 / exercise-01 :ARG0 (xv1 / man) :polarity -)").unwrap();
        assert_eq!(g.instances().len(), 2);
        assert_eq!(g.relations().len(), 1);
        assert_eq!(
            g.attributes(),
            &[Attribute {
                source: "xv0".into(),
                role: ":polarity".into(),
                value: "-".into()
            }]
        );
    }

    #[test]
    fn triple_order_is_instances_attributes_relations() {
        let g = parse_penman("(xv0 / exercise-01 :ARG0 (xv1 / man) :polarity -)").unwrap();
        let kinds: Vec<_> = g.triples(true).iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TripleKind::Instance,
                TripleKind::Instance,
                TripleKind::Attribute,
                TripleKind::Attribute,
                TripleKind::Relation
            ]
        );
        let top = &g.triples(true)[2];
        assert_eq!(
            (top.source.as_str(), top.role.as_str(), top.target.as_str()),
            ("xv0", ":TOP", "top")
        );
    }

    #[test]
    fn reentrancy_becomes_relation() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))").unwrap();
        assert_eq!(g.instances().len(), 3);
        assert_eq!(g.relations().len(), 3);
        let text = g.to_penman();
        assert_eq!(text.matches("/ boy").count(), 1);
        let back = parse_penman(&text).unwrap();
        assert_eq!(canonical_set(&g), canonical_set(&back));
    }

    #[test]
    fn forward_reentrancy_is_resolved() {
        let g = parse_penman("(a / and :op1 (b / x :ARG0 c) :op2 (c / y))").unwrap();
        assert_eq!(g.relations().len(), 3);
        let back = parse_penman(&g.to_penman()).unwrap();
        assert_eq!(canonical_set(&g), canonical_set(&back));
    }

    #[test]
    fn coordination_round_trip_keeps_both_ops() {
        let text = "(xv0 / and :op1 (xv1 / walk-01 :ARG0 (xv3 / child)) \
                    :op2 (xv2 / pull-up-07 :ARG1 (xv5 / jeep-01) :polarity -))";
        let g = parse_penman(text).unwrap();
        let out = g.to_penman();
        assert!(out.contains(":op1"));
        assert!(out.contains(":op2"));
        assert_eq!(
            canonical_set(&g),
            canonical_set(&parse_penman(&out).unwrap())
        );
        assert_eq!(g, parse_penman(&out).unwrap());
    }

    #[test]
    fn inverse_roles_are_kept_and_canonicalized() {
        let g = parse_penman("(b / bird :ARG1-of (x / black-04))").unwrap();
        assert_eq!(g.relations()[0].role, ":ARG1-of");
        let c = g.canonicalized();
        assert_eq!(
            c.relations()[0],
            Relation {
                source: "x".into(),
                role: ":ARG1".into(),
                target: "b".into()
            }
        );
        assert_eq!(invert_role(":consist-of"), ":consist-of-of");
        assert!(!is_inverse_role(":consist-of"));
    }

    #[test]
    fn comments_and_alignments_are_ignored() {
        let text = "# ::snt A boy\n# ::id 1\n(xv0 / boy~e.1\n   :quant 2~e.0)";
        let g = parse_penman(text).unwrap();
        assert_eq!(g.instances()[0].concept, "boy");
        assert_eq!(g.attributes()[0].value, "2");
    }

    #[test]
    fn quoted_constants_are_verbatim() {
        let g = parse_penman(r#"(n / name :op1 "New" :op2 "York \"City\"")"#).unwrap();
        assert_eq!(g.attributes()[0].value, "\"New\"");
        assert_eq!(g.attributes()[1].value, r#""York \"City\"""#);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_penman("(a / b\n  :ARG0 )").unwrap_err();
        match err {
            AmrError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 9);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_penman("(a / b"),
            Err(AmrError::Syntax { .. })
        ));
        assert!(matches!(
            parse_penman("(a / b) (c / d)"),
            Err(AmrError::Syntax { .. })
        ));
        assert!(matches!(
            parse_penman("(a b)"),
            Err(AmrError::Syntax { .. })
        ));
        assert!(matches!(parse_penman(""), Err(AmrError::Syntax { .. })));
    }

    #[test]
    fn duplicate_and_dangling_variables_are_rejected() {
        assert!(matches!(
            parse_penman("(a / x :ARG0 (a / y))"),
            Err(AmrError::DuplicateVariable { .. })
        ));
        assert!(matches!(
            parse_penman("(a / x :ARG0 xv7)"),
            Err(AmrError::DanglingVariable { .. })
        ));
        // Non-variable symbols are constants.
        let g = parse_penman("(a / x :mode imperative)").unwrap();
        assert_eq!(g.attributes()[0].value, "imperative");
    }

    #[test]
    fn new_rejects_disconnected_graphs() {
        let err = AmrGraph::new(
            "a",
            vec![
                Instance {
                    variable: "a".into(),
                    concept: "x".into(),
                },
                Instance {
                    variable: "b".into(),
                    concept: "y".into(),
                },
            ],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, AmrError::Disconnected { .. }));
    }

    #[test]
    fn sense_suffix_parsing() {
        assert_eq!(split_sense("pull-up-07"), ("pull-up", Some(7)));
        assert_eq!(split_sense("hit-01"), ("hit", Some(1)));
        assert_eq!(split_sense("boy"), ("boy", None));
        assert_eq!(split_sense("have-org-role-91"), ("have-org-role", Some(91)));
        assert_eq!(split_sense("x-1"), ("x-1", None));
        assert_eq!(split_sense("x-123"), ("x-123", None));
        assert_eq!(split_sense("-01"), ("-01", None));
        let g = parse_penman("(p / pull-up-07)").unwrap();
        let node = &g.concept_nodes()[0];
        assert_eq!(node.lemma, "pull-up");
        assert_eq!(node.sense, Some(7));
    }

    #[test]
    fn node_paths_follow_tree_order() {
        let g = parse_penman(
            "(xv0 / and :op1 (xv1 / walk-01 :ARG0 (xv3 / child)) :op2 (xv2 / pull-up-07 :ARG1 (xv5 / jeep-01)))",
        )
        .unwrap();
        let paths = g.node_paths();
        assert_eq!(paths["xv0"], "0");
        assert_eq!(paths["xv1"], "0.0");
        assert_eq!(paths["xv3"], "0.0.0");
        assert_eq!(paths["xv2"], "0.1");
        assert_eq!(paths["xv5"], "0.1.0");
    }
}
