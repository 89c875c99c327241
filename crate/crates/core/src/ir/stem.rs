/// Plural-stripping stemmer: `-ies` → `-y`, `-es` → `-e`, `-s` removed,
/// with the usual exceptions for `-eies`, `-aies`, `-aes`, `-ees`, `-oes`,
/// `-us` and `-ss`.
pub fn s_stem(word: &str) -> String {
    let n = word.len();
    if n > 3 && word.ends_with("ies") && !word.ends_with("eies") && !word.ends_with("aies") {
        return format!("{}y", &word[..n - 3]);
    }
    if n > 2
        && word.ends_with("es")
        && !word.ends_with("aes")
        && !word.ends_with("ees")
        && !word.ends_with("oes")
    {
        return word[..n - 1].to_string();
    }
    if n > 1 && word.ends_with('s') && !word.ends_with("us") && !word.ends_with("ss") {
        return word[..n - 1].to_string();
    }
    word.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert_eq!(s_stem("libraries"), "library");
        assert_eq!(s_stem("banks"), "bank");
        assert_eq!(s_stem("horses"), "horse");
        assert_eq!(s_stem("glass"), "glass");
        assert_eq!(s_stem("corpus"), "corpus");
        assert_eq!(s_stem("toes"), "toe");
        assert_eq!(s_stem("s"), "s");
        assert_eq!(s_stem("bank"), "bank");
    }
}
