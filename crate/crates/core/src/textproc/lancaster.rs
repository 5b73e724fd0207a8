//! Paice/Husk (Lancaster) stemmer driven by the in-repo rule table.

use std::collections::HashMap;
use std::sync::OnceLock;

const RULES: &str = include_str!("../../data/lancaster_rules.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Rule {
    /// Ending in normal (not reversed) order.
    ending: Vec<char>,
    intact_only: bool,
    remove: usize,
    append: Vec<char>,
    /// Keep stemming after this rule fires.
    proceed: bool,
}

fn parse_rule(line: &str) -> Option<Rule> {
    let mut chars = line.chars().peekable();
    let mut reversed = Vec::new();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_lowercase() {
            reversed.push(c);
            chars.next();
        } else {
            break;
        }
    }
    if reversed.is_empty() {
        return None;
    }
    let intact_only = chars.next_if_eq(&'*').is_some();
    let remove = chars.next()?.to_digit(10)? as usize;
    let mut append = Vec::new();
    while let Some(c) = chars.next_if(|c| c.is_ascii_lowercase()) {
        append.push(c);
    }
    let proceed = match chars.next() {
        Some('>') => true,
        Some('.') | None => false,
        _ => return None,
    };
    if chars.next().is_some() {
        return None;
    }
    reversed.reverse();
    Some(Rule {
        ending: reversed,
        intact_only,
        remove,
        append,
        proceed,
    })
}

/// Rules grouped by the final letter of the ending they match, in table order.
fn rule_table() -> &'static HashMap<char, Vec<Rule>> {
    static TABLE: OnceLock<HashMap<char, Vec<Rule>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: HashMap<char, Vec<Rule>> = HashMap::new();
        for line in RULES.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = parse_rule(line).unwrap_or_else(|| panic!("bad stemmer rule `{line}`"));
            let key = *rule.ending.last().expect("non-empty ending");
            table.entry(key).or_default().push(rule);
        }
        table
    })
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// A stem must keep two letters if it starts with a vowel, otherwise three
/// with a vowel among the second and third.
fn acceptable(word: &[char], remove: usize) -> bool {
    let Some(remaining) = word.len().checked_sub(remove) else {
        return false;
    };
    if is_vowel(word[0]) {
        remaining >= 2
    } else {
        remaining >= 3 && (is_vowel(word[1]) || is_vowel(word[2]))
    }
}

/// Index of the last letter of the word's leading alphabetic run.
fn last_letter(word: &[char]) -> Option<usize> {
    let run = word.iter().take_while(|c| c.is_alphabetic()).count();
    run.checked_sub(1)
}

/// Stems one lowercase word.
pub fn stem(word: &str) -> String {
    let table = rule_table();
    let mut w: Vec<char> = word.to_lowercase().chars().collect();
    if w.is_empty() {
        return String::new();
    }
    let intact = w.clone();
    while let Some(pos) = last_letter(&w) {
        let Some(rules) = table.get(&w[pos]) else {
            break;
        };
        let mut fired = None;
        for rule in rules {
            if !w.ends_with(&rule.ending) {
                continue;
            }
            if rule.intact_only && w != intact {
                continue;
            }
            if acceptable(&w, rule.remove) {
                fired = Some(rule);
                break;
            }
        }
        let Some(rule) = fired else { break };
        w.truncate(w.len() - rule.remove);
        w.extend_from_slice(&rule.append);
        if !rule.proceed {
            break;
        }
    }
    w.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_parses() {
        let n: usize = rule_table().values().map(Vec::len).sum();
        assert_eq!(n, 115);
    }

    #[test]
    fn rule_syntax() {
        let r = parse_rule("city3s.").unwrap();
        assert_eq!(r.ending, vec!['y', 't', 'i', 'c']);
        assert_eq!(r.remove, 3);
        assert_eq!(r.append, vec!['s']);
        assert!(!r.proceed && !r.intact_only);
        let r = parse_rule("ai*2.").unwrap();
        assert!(r.intact_only);
        assert!(parse_rule("x?1.").is_none());
    }

    #[test]
    fn reference_words() {
        for (w, s) in [
            ("maximum", "maxim"),
            ("maximally", "maxim"),
            ("presumably", "presum"),
            ("multiply", "multiply"),
            ("provision", "provid"),
            ("owed", "ow"),
            ("ear", "ear"),
            ("saying", "say"),
            ("crying", "cry"),
            ("string", "string"),
            ("meant", "meant"),
            ("cement", "cem"),
        ] {
            assert_eq!(stem(w), s, "{w}");
        }
    }
}
