//! Small rule-based English lemmatizer.
//!
//! Handles regular plural and verb inflection plus a short list of irregular
//! forms. Good enough for embedding fallback and concept alignment; anything
//! better can be plugged in through [`Lemmatizer`].

/// Maps a surface token to its lemma.
pub trait Lemmatizer: Send + Sync {
    fn lemma(&self, token: &str) -> String;

    /// Alternative lemmas, best first. The first entry equals [`Self::lemma`].
    fn candidates(&self, token: &str) -> Vec<String> {
        vec![self.lemma(token)]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleLemmatizer;

const IRREGULAR: &[(&str, &str)] = &[
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("am", "be"),
    ("been", "be"),
    ("being", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("people", "person"),
    ("mice", "mouse"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("geese", "goose"),
    ("went", "go"),
    ("gone", "go"),
    ("ran", "run"),
    ("sat", "sit"),
    ("ate", "eat"),
    ("eaten", "eat"),
    ("made", "make"),
    ("took", "take"),
    ("taken", "take"),
    ("gave", "give"),
    ("given", "give"),
    ("saw", "see"),
    ("seen", "see"),
    ("rode", "ride"),
    ("ridden", "ride"),
    ("wrote", "write"),
    ("written", "write"),
    ("swam", "swim"),
    ("thrown", "throw"),
    ("threw", "throw"),
    ("blown", "blow"),
    ("blew", "blow"),
    ("held", "hold"),
    ("cut", "cut"),
    ("put", "put"),
    ("hit", "hit"),
    ("lying", "lie"),
    ("dying", "die"),
    ("tying", "tie"),
    ("leaves", "leaf"),
    ("knives", "knife"),
    ("wolves", "wolf"),
    ("dead", "die"),
];

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| is_vowel(b) || b == b'y')
}

/// `hitt` -> `hit`, `runn` -> `run`; keeps `ll`, `ss`, `zz` (`fall`, `pass`).
fn undouble(stem: &str) -> Option<&str> {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3
        && b[n - 1] == b[n - 2]
        && !is_vowel(b[n - 1])
        && !matches!(b[n - 1], b'l' | b's' | b'z')
    {
        Some(&stem[..n - 1])
    } else {
        None
    }
}

impl RuleLemmatizer {
    fn suffix_candidates(&self, w: &str) -> Vec<String> {
        if let Some(stem) = w.strip_suffix("ies").filter(|s| s.len() >= 2) {
            return vec![format!("{stem}y"), format!("{stem}ie")];
        }
        if let Some(stem) = w.strip_suffix("ied").filter(|s| s.len() >= 2) {
            return vec![format!("{stem}y"), format!("{stem}ie")];
        }
        for suffix in ["sses", "xes", "ches", "shes", "zzes"] {
            if w.ends_with(suffix) {
                return vec![w[..w.len() - 2].to_string(), w[..w.len() - 1].to_string()];
            }
        }
        if let Some(stem) = w
            .strip_suffix("ing")
            .filter(|s| s.len() >= 2 && has_vowel(s))
        {
            return verb_stem_candidates(stem);
        }
        if let Some(stem) = w
            .strip_suffix("ed")
            .filter(|s| s.len() >= 2 && has_vowel(s))
        {
            if w.ends_with("eed") && stem.len() <= 2 {
                return vec![w.to_string()];
            }
            return verb_stem_candidates(stem);
        }
        if w.len() > 3
            && w.ends_with('s')
            && !w.ends_with("ss")
            && !w.ends_with("us")
            && !w.ends_with("is")
        {
            let stem = &w[..w.len() - 1];
            return vec![stem.to_string()];
        }
        vec![w.to_string()]
    }
}

fn verb_stem_candidates(stem: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(single) = undouble(stem) {
        out.push(single.to_string());
        out.push(stem.to_string());
    } else {
        out.push(stem.to_string());
        out.push(format!("{stem}e"));
    }
    out
}

impl Lemmatizer for RuleLemmatizer {
    fn lemma(&self, token: &str) -> String {
        self.candidates(token).swap_remove(0)
    }

    fn candidates(&self, token: &str) -> Vec<String> {
        let w = token.to_lowercase();
        if let Some((_, lemma)) = IRREGULAR.iter().find(|(form, _)| *form == w) {
            return vec![lemma.to_string()];
        }
        if w.len() <= 3 || !w.bytes().all(|b| b.is_ascii_alphabetic() || b == b'-') {
            return vec![w];
        }
        let mut out = self.suffix_candidates(&w);
        if !out.contains(&w) {
            out.push(w);
        }
        out
    }
}
