//! Character-offset helpers. Offsets count Unicode scalar values.

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Substring between scalar offsets `start..end`, or `None` when out of range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&s[from..to])
}

/// Lowercased alphanumeric tokens.
pub fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Collapses runs of whitespace and trims.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_scalar_offsets() {
        let s = "Müll ist gut";
        assert_eq!(char_slice(s, 0, 4), Some("Müll"));
        assert_eq!(char_slice(s, 5, 8), Some("ist"));
        assert_eq!(char_slice(s, 9, 12), Some("gut"));
        assert_eq!(char_slice(s, 12, 12), Some(""));
        assert_eq!(char_slice(s, 9, 13), None);
        assert_eq!(char_slice(s, 3, 2), None);
    }

    #[test]
    fn tokenizes_without_punctuation() {
        assert_eq!(tokens("The death-penalty, again!"), ["the", "death", "penalty", "again"]);
    }
}
