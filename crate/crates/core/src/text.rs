//! Character classes and reserved tokens shared by all stages.

use unicode_general_category::{get_general_category, GeneralCategory};

/// Separator between the two split sentences in a target sequence.
pub const SEP: &str = "[SEP]";
/// Filler token inserted by the padding step.
pub const PAD: &str = "[PAD]";

/// Unicode general category P*.
pub fn is_punct(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

/// Unicode general category L*.
pub fn is_letter(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        UppercaseLetter | LowercaseLetter | TitlecaseLetter | ModifierLetter | OtherLetter
    )
}

/// True for a non-empty token made only of punctuation characters.
pub fn is_punct_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct)
}

pub fn is_reserved(token: &str) -> bool {
    token == SEP || token == PAD
}

/// Whitespace tokenization used when no annotation layer supplies tokens.
pub fn whitespace_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_classes() {
        assert!(is_punct('.'));
        assert!(is_punct('-'));
        assert!(is_punct('«'));
        assert!(!is_punct('$'));
        assert!(!is_punct('a'));
        assert!(is_letter('é'));
        assert!(is_letter('ж'));
        assert!(!is_letter('3'));
        assert!(is_punct_token(",,"));
        assert!(!is_punct_token(""));
        assert!(!is_punct_token("a."));
    }
}
