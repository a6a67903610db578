//! Property tests for the equation pipeline.

#[path = "support/math_gen.rs"]
mod math_gen;

use math_gen::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tutorloop::math::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_parse_round_trip(t in tree()) {
        prop_assume!(sites(&t) <= 4);
        let s = render_latex(&t);
        let forest = parse_latex(&s).map_err(|e| TestCaseError::fail(format!("{s}: {e}")))?;
        prop_assert!(forest.contains(&t), "{} not recovered from {:?}", s, forest.trees().collect::<Vec<_>>());
    }

    #[test]
    fn canonicalize_is_idempotent(t in tree()) {
        if let Ok(once) = canonicalize(&t) {
            let twice = canonicalize(&once.tree).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn rewrites_agree(t in expr(), seed in any::<u64>()) {
        prop_assume!(without_unknown(&t));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = rewrite(&t, &mut rng);
        let (Ok(ct), Ok(cr)) = (canonicalize(&t), canonicalize(&r)) else {
            return Err(TestCaseError::reject("division by zero"));
        };
        prop_assert_eq!(&ct, &cr);
        let numeric = numeric_agreement(&t, &r, false, &SamplingConfig::new(seed));
        prop_assume!(numeric.is_some());
        prop_assert_eq!(numeric, Some(true), "{} vs {}", render_latex(&t), render_latex(&r));
        prop_assert!(check_equivalence(&r, &t, seed).unwrap().is_equivalent());
    }

    #[test]
    fn equivalence_symmetric_and_reflexive(a in expr(), b in expr(), seed in 0u64..1000) {
        prop_assume!(canonicalize(&a).is_ok() && canonicalize(&b).is_ok());
        let ab = check_equivalence(&a, &b, seed).unwrap();
        let ba = check_equivalence(&b, &a, seed).unwrap();
        prop_assert_eq!(ab.label(), ba.label());
        prop_assert!(check_equivalence(&a, &a, seed).unwrap().is_equivalent());
    }

    #[test]
    fn gap_hints_are_sound(t in tree(), seed in any::<u64>(), coefficients in any::<bool>()) {
        prop_assume!(sites(&t) <= 4 && canonicalize(&t).is_ok());
        let policy = if coefficients { BlankingPolicy::BlankCoefficients } else { BlankingPolicy::BlankOneLeaf };
        let gap = match make_gap_hint(&t, policy, seed) {
            Ok(gap) => gap,
            Err(e) => {
                prop_assert_eq!(e, MathError::NoBlankableLeaf);
                return Ok(());
            }
        };
        prop_assert_eq!(gap.rendered.matches(SLOT).count(), gap.answers.len());
        let filled = gap.fill(&gap.answers).unwrap();
        let forest = parse_latex(&filled).unwrap();
        let back = forest.trees().find(|c| *c == &t);
        prop_assert!(back.is_some(), "{}", filled);
        let verdict = check_equivalence(back.unwrap(), &t, seed).unwrap();
        prop_assert!(verdict.is_equivalent());
    }

    #[test]
    fn forest_doubles_per_site(k in 0usize..=6, filler in prop::sample::select(vec!["x", "2", "\\sin(x)", "y^{2}"])) {
        let names = ["f", "g", "h", "p", "q", "r"];
        let mut parts: Vec<String> = names[..k].iter().map(|n| format!("{n}(x + 1)")).collect();
        parts.push(filler.to_string());
        let src = parts.join(" + ");
        match parse_latex(&src) {
            Ok(forest) => {
                prop_assert!(k <= 4);
                prop_assert_eq!(forest.len(), 1 << k);
            }
            Err(e) => {
                prop_assert!(k > 4);
                prop_assert_eq!(e.to_string(), format!("ambiguity cap exceeded ({k} ambiguous sites)"));
            }
        }
    }
}
