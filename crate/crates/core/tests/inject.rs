mod common;

use cfgchain::eval::run::corpus_samples;
use cfgchain::eval::{inject_error, invert, Category, InjectionKind};
use cfgchain::source::TokenKind;
use cfgchain::tokenize;
use proptest::prelude::*;

fn corpus() -> Vec<String> {
    corpus_samples(&common::repo_root().join("corpus/nc-mini"))
        .unwrap()
        .into_iter()
        .map(|(_, p)| cfgchain::load_source(&p).unwrap())
        .collect()
}

fn significant(text: &str) -> Vec<String> {
    tokenize(text).significant_tokens().filter(|t| t.kind != TokenKind::Whitespace).map(|t| t.lexeme.clone()).collect()
}

fn count(text: &str, c: char) -> usize {
    text.chars().filter(|&x| x == c).count()
}

#[test]
fn every_kind_has_sites_in_the_corpus() {
    let samples = corpus();
    assert_eq!(samples.len(), 20);
    for k in InjectionKind::ALL {
        let n = samples.iter().filter(|s| inject_error(s, k, 1).is_ok()).count();
        assert!(n >= 5, "{k}: {n} eligible samples");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn inverse_edit_restores_original(idx in 0usize..20, k in 0usize..5, seed in any::<u64>()) {
        let samples = corpus();
        let kind = InjectionKind::ALL[k];
        let code = &samples[idx];
        if let Ok((m, rec)) = inject_error(code, kind, seed) {
            prop_assert_ne!(&m, code);
            prop_assert_eq!(&invert(&m, &rec), code);
            let (before, after) = (significant(code), significant(&m));
            match kind {
                InjectionKind::MissingBrace | InjectionKind::MissingSemicolon => {
                    prop_assert_eq!(before.len(), after.len() + 1);
                }
                InjectionKind::MissingOperator => {
                    prop_assert_eq!(before.len(), after.len());
                    prop_assert_eq!(before.iter().zip(&after).filter(|(a, b)| a != b).count(), 1);
                }
                InjectionKind::EmptyStatement => {
                    prop_assert_eq!(count(&m, ';'), count(code, ';') + 1);
                    prop_assert_eq!(m.len(), code.len() + 1);
                }
                InjectionKind::ScopeError => {
                    prop_assert_eq!(count(code, '{') - count(&m, '{'), 1);
                    prop_assert_eq!(count(code, '}') - count(&m, '}'), 1);
                    prop_assert_eq!(m.len(), code.len() - 2);
                }
            }
            prop_assert_eq!(kind.category() == Category::Ese, k < 3);
        }
    }
}
