use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::types::{Label, Token};

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";
pub(crate) const BIAS: &str = "bias";

fn surface_at(tokens: &[Token], position: usize, offset: isize) -> &str {
    match position.checked_add_signed(offset) {
        Some(i) if i < tokens.len() => &tokens[i].surface,
        _ if offset < 0 => BOS,
        _ => EOS,
    }
}

fn length_bucket(chars: usize) -> &'static str {
    match chars {
        0 => "0",
        1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5 | 6 => "5-6",
        _ => "7+",
    }
}

/// Features that do not depend on the decoding history.
pub(crate) fn static_features(tokens: &[Token], position: usize) -> Vec<String> {
    let token = &tokens[position];
    let word = token.surface.as_str();
    let chars: Vec<char> = word.chars().collect();
    let mut f = Vec::with_capacity(17);
    f.push(String::from(BIAS));
    f.push(format!("w0={word}"));
    f.push(format!("lw0={}", word.to_lowercase()));
    for offset in [-2isize, -1, 1, 2] {
        f.push(format!("w{offset:+}={}", surface_at(tokens, position, offset)));
    }
    for k in 1..=3.min(chars.len()) {
        let prefix: String = chars[..k].iter().collect();
        let suffix: String = chars[chars.len() - k..].iter().collect();
        f.push(format!("p{k}={prefix}"));
        f.push(format!("s{k}={suffix}"));
    }
    f.push(format!("sep={}", token.sep_after.as_str()));
    f.push(format!("len={}", length_bucket(chars.len())));
    f.push(format!("dig={}", u8::from(chars.iter().any(|c| c.is_numeric()))));
    f
}

pub(crate) fn prev_feature(prev: Option<Label>) -> String {
    format!("y-1={}", prev.map_or(BOS, Label::name))
}

/// Feature bag for one position given the previous predicted label
/// (`None` at the start of the sequence).
pub fn featurize(tokens: &[Token], position: usize, prev: Option<Label>) -> Vec<String> {
    let mut f = static_features(tokens, position);
    f.push(prev_feature(prev));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{PunctClass, Separator};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn boundary_markers() {
        let tokens = vec![Token::word("کتاب", Separator::None)];
        let f = featurize(&tokens, 0, None);
        for expected in ["w0=کتاب", "w-1=<BOS>", "w+1=<EOS>", "w-2=<BOS>", "w+2=<EOS>", "y-1=<BOS>"] {
            assert!(f.iter().any(|x| x == expected), "{expected} missing from {f:?}");
        }
        assert!(f.iter().any(|x| x == "s1=ب"));
        assert!(f.iter().any(|x| x == "p3=کتا"));
        assert!(f.iter().any(|x| x == "sep=none"));
    }

    #[test]
    fn previous_label_feature() {
        let tokens = vec![Token::word("a", Separator::Space), Token::word("b", Separator::None)];
        let f = featurize(&tokens, 1, Some(Label::Punct(PunctClass::Comma)));
        assert!(f.iter().any(|x| x == "y-1=COMMA"));
        assert!(f.iter().any(|x| x == "w-1=a"));
    }

    #[test]
    fn digit_flag_sees_persian_digits() {
        let tokens = vec![Token::word("۱۲۳", Separator::None)];
        assert!(featurize(&tokens, 0, None).iter().any(|x| x == "dig=1"));
    }

    // Template enumeration: bias, w0, lw0, four context words, three
    // prefixes, three suffixes, sep, len, dig, y-1.
    const TEMPLATE_MAX: usize = 1 + 1 + 1 + 4 + 3 + 3 + 1 + 1 + 1 + 1;

    proptest! {
        #[test]
        fn bounded_and_deterministic(words in proptest::collection::vec("[a-zآ-ی]{1,9}", 1..6), pos in 0usize..6) {
            let tokens: Vec<Token> = words.iter().map(|w| Token::word(w.as_str(), Separator::Space)).collect();
            let pos = pos % tokens.len();
            let f = featurize(&tokens, pos, None);
            prop_assert!(f.len() <= TEMPLATE_MAX);
            prop_assert!(TEMPLATE_MAX <= 20);
            prop_assert_eq!(f, featurize(&tokens, pos, None));
        }
    }
}
