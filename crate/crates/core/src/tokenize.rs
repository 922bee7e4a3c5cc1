/// Lowercased maximal runs of Unicode letters and digits.
///
/// Whitespace, punctuation and symbols (including `#` and `@`) separate tokens.
pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
