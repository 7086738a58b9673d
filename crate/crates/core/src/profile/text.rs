//! Set representations derived from attribute names and text values.

use std::collections::{BTreeSet, HashMap};

/// Contiguous q-grams of the lowercased name with whitespace removed. Names
/// shorter than `q` yield the whole (normalized) name.
pub fn get_qgrams(name: &str, q: usize) -> BTreeSet<String> {
    let chars: Vec<char> = name
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(|c| c.to_lowercase())
        .collect();
    if chars.is_empty() {
        return BTreeSet::new();
    }
    if chars.len() < q {
        return BTreeSet::from([chars.iter().collect()]);
    }
    chars.windows(q).map(|w| w.iter().collect()).collect()
}

fn is_separator(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// Split a value into parts at punctuation, and each part into lowercased
/// words (maximal alphanumeric runs).
pub fn split_parts(value: &str) -> Vec<Vec<String>> {
    value
        .split(is_separator)
        .map(|part| {
            part.split(|c: char| !c.is_alphanumeric())
                .filter(|w| !w.is_empty())
                .map(|w| w.to_lowercase())
                .collect::<Vec<_>>()
        })
        .filter(|words| !words.is_empty())
        .collect()
}

fn all_digits(w: &str) -> bool {
    w.chars().all(|c| c.is_ascii_digit())
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ExtentTokens {
    /// Least frequent word of every part.
    pub tset: BTreeSet<String>,
    /// Most frequent word of every part.
    pub frequent: BTreeSet<String>,
}

/// Build the token histogram over the whole extent, then pick from every part
/// its least and most frequent word. Words are ordered by (occurrences,
/// word); all-digit words are only considered in parts that have nothing
/// else.
pub fn tokenize_extent<S: AsRef<str>>(extent: &[S]) -> ExtentTokens {
    let parsed: Vec<Vec<Vec<String>>> = extent.iter().map(|v| split_parts(v.as_ref())).collect();
    let mut histogram: HashMap<&str, usize> = HashMap::new();
    for word in parsed.iter().flatten().flatten() {
        *histogram.entry(word.as_str()).or_insert(0) += 1;
    }
    let mut out = ExtentTokens::default();
    for part in parsed.iter().flatten() {
        let has_alpha = part.iter().any(|w| !all_digits(w));
        let mut candidates: Vec<(usize, &str)> = part
            .iter()
            .filter(|w| !has_alpha || !all_digits(w))
            .map(|w| (histogram[w.as_str()], w.as_str()))
            .collect();
        candidates.sort_unstable();
        if let (Some(min), Some(max)) = (candidates.first(), candidates.last()) {
            out.tset.insert(min.1.to_string());
            out.frequent.insert(max.1.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lexical {
    Capitalized,
    Upper,
    Lower,
    Digits,
    Alnum,
    Punct,
}

impl Lexical {
    fn symbol(self) -> char {
        match self {
            Lexical::Capitalized => 'C',
            Lexical::Upper => 'U',
            Lexical::Lower => 'L',
            Lexical::Digits => 'N',
            Lexical::Alnum => 'A',
            Lexical::Punct => 'P',
        }
    }

    /// First matching class, in the order C, U, L, N, A.
    fn of_alnum(tok: &str) -> Lexical {
        let b = tok.as_bytes();
        if b.len() >= 2 && b[0].is_ascii_uppercase() && b[1..].iter().all(u8::is_ascii_lowercase) {
            Lexical::Capitalized
        } else if b.iter().all(u8::is_ascii_uppercase) {
            Lexical::Upper
        } else if b.iter().all(u8::is_ascii_lowercase) {
            Lexical::Lower
        } else if b.iter().all(u8::is_ascii_digit) {
            Lexical::Digits
        } else {
            Lexical::Alnum
        }
    }
}

fn lexical_tokens(value: &str) -> Vec<Lexical> {
    let mut out = Vec::new();
    let mut chars = value.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let alnum = c.is_ascii_alphanumeric();
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() || c.is_ascii_alphanumeric() != alnum {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        out.push(if alnum {
            Lexical::of_alnum(&value[start..end])
        } else {
            Lexical::Punct
        });
    }
    out
}

/// Format descriptor of a value: one class symbol per token, with every run
/// of a repeated symbol written as the symbol followed by `+`.
pub fn get_regex_string(value: &str) -> String {
    let symbols: Vec<char> = lexical_tokens(value).into_iter().map(Lexical::symbol).collect();
    let mut out = String::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        let s = symbols[i];
        let mut j = i + 1;
        while j < symbols.len() && symbols[j] == s {
            j += 1;
        }
        out.push(s);
        if j - i > 1 {
            out.push('+');
        }
        i = j;
    }
    out
}
