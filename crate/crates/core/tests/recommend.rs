mod common;

use common::*;
use urbantactic::ingest::ContextTag;
use urbantactic::provider::ProviderError;
use urbantactic::recommend::vlm::ScriptedVlm;
use urbantactic::recommend::*;

#[test]
fn recorded_listings_parse_to_five_rows() {
    for (stem, names) in LISTING_NAMES {
        let parsed = parse_candidate_csv_detailed(&listing(stem));
        assert!(parsed.rejected.is_empty(), "{stem}: {:?}", parsed.rejected);
        let got: Vec<&str> = parsed.rows.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(got, names, "{stem}");
        assert!(parsed.rows.iter().all(|r| r.1.len() > 100), "{stem}: descriptions are paragraphs");
    }
}

#[test]
fn adversarial_suite() {
    let cases = adversarial_csv_cases();
    assert_eq!(cases.len(), 50);
    for (name, text, expect) in cases {
        let detailed = parse_candidate_csv_detailed(&text);
        match expect {
            CsvExpect::Rows(rows, rejected) => {
                assert_eq!(detailed.rows, rows, "case {name:?}");
                assert_eq!(detailed.rejected.len(), rejected, "case {name:?}: {:?}", detailed.rejected);
                assert_eq!(parse_candidate_csv(&text).unwrap(), rows, "case {name:?}");
            }
            CsvExpect::Malformed => {
                assert!(detailed.rows.is_empty(), "case {name:?}: {:?}", detailed.rows);
                assert!(
                    matches!(parse_candidate_csv(&text), Err(RecommendError::MalformedResponse(_))),
                    "case {name:?}"
                );
            }
        }
    }
}

#[test]
fn rejected_rows_carry_line_numbers() {
    let text = "Object,Description\nBench,Wooden\nKiosk,Glass, timber\n\nLamp,\"Tall\nand thin\"\n| x | y |,z";
    let p = parse_candidate_csv_detailed(text);
    assert_eq!(p.rows.len(), 2);
    let lines: Vec<usize> = p.rejected.iter().map(|r| r.line).collect();
    assert_eq!(lines, [3, 7]);
}

#[test]
fn serialize_then_parse_round_trips() {
    let rows = vec![
        ("Bench, long".to_string(), "Says \"hi\"\nover two lines".to_string()),
        ("Planter".to_string(), "Plain".to_string()),
    ];
    assert_eq!(parse_candidate_csv(&serialize_candidates(&rows)).unwrap(), rows);
}

fn prompt_for(id: &str, anchor: &str, co: &str) -> PromptBundle {
    let scene = fixture_scene(id);
    let summary = summarize_scene(&scene, &fixture_image(id)).unwrap();
    build_prompt(&scene, &summary, anchor, co).unwrap()
}

#[test]
fn prompt_substitutes_every_slot() {
    let b = prompt_for("scene2", "bench", "tree");
    let expected_head =
        PROMPT_TEMPLATE.replace("{filename}", "scene2.png").replace("{object1}", "bench").replace("{object2}", "tree");
    assert!(b.system_prompt_text.starts_with(&expected_head));
    for slot in ["{filename}", "{object1}", "{object2}"] {
        assert!(!b.system_prompt_text.contains(slot));
    }
    assert!(b.system_prompt_text.contains("Only output the result as a CSV file with exactly two columns"));
    assert!(b.system_prompt_text.contains("Scene summary:"));
    assert_eq!(b.scene_image_ref, "images/scene2.png");
    assert!(b.crops.is_some());
    assert_eq!(b, prompt_for("scene2", "bench", "tree"));
}

#[test]
fn prompt_requires_the_anchor_in_scene() {
    let scene = fixture_scene("scene2");
    let summary = summarize_scene(&scene, &fixture_image("scene2")).unwrap();
    assert!(matches!(build_prompt(&scene, &summary, "crosswalk", "tree"), Err(RecommendError::MissingAnchor(_))));
    assert!(matches!(build_prompt(&scene, &summary, "bench", "bench"), Err(RecommendError::InvalidPair(_))));
    // a co-object missing from the scene is allowed, without crops
    let b = build_prompt(&scene, &summary, "bench", "window").unwrap();
    assert!(b.crops.is_none());
}

#[test]
fn palette_is_deterministic() {
    let img = test_image(400, 300);
    let p = extract_palette(&img);
    assert_eq!(p, extract_palette(&img));
    // both dominant tones of the picture are represented
    let near = |c: Rgb, t: Rgb| c.iter().zip(t).all(|(a, b)| (*a as i32 - b as i32).abs() <= 8);
    assert!(p.iter().any(|&c| near(c, [120, 170, 230])), "{p:?}");
    assert!(p.iter().any(|&c| near(c, [110, 110, 115])), "{p:?}");
}

#[test]
fn semantic_retry_then_success() {
    let bundle = prompt_for("scene2", "bench", "tree");
    let vlm = ScriptedVlm::new(vec![Ok("no table here".into()), Ok(listing("scene2"))]);
    let batch = request_semantic_candidates(&bundle, &vlm, SemanticOptions::default()).unwrap();
    assert_eq!(batch.retries, 1);
    assert_eq!(batch.suggestions.len(), 5);
    let calls = vlm.calls();
    assert!(!calls[0].prompt.ends_with(STRICT_FORMAT_SUFFIX));
    assert!(calls[1].prompt.ends_with(STRICT_FORMAT_SUFFIX));
}

#[test]
fn semantic_gives_up_after_max_retries() {
    let bundle = prompt_for("scene2", "bench", "tree");
    let vlm = ScriptedVlm::always("Bench,only one");
    let err = request_semantic_candidates(&bundle, &vlm, SemanticOptions { max_retries: 2 }).unwrap_err();
    assert!(matches!(err, RecommendError::TooFewCandidates { got: 1, need: 5 }));
    assert_eq!(vlm.calls().len(), 3);

    let failing = ScriptedVlm::new(vec![Err(ProviderError::Timeout(std::time::Duration::from_secs(1)))]);
    assert!(matches!(
        request_semantic_candidates(&bundle, &failing, SemanticOptions::default()),
        Err(RecommendError::Provider(_))
    ));
    assert_eq!(failing.calls().len(), 1);
}

#[test]
fn crosswalk_needs_a_street() {
    let rules = default_rules();
    let cand = || vec![Suggestion::semantic("Bench", "wood", 1), Suggestion::semantic("Raised Crosswalk", "paint", 2)];
    let plaza = scene("p", "plaza", &["bench"], &[ContextTag::PlazaGround]);
    let out = apply_feasibility(cand(), &plaza, &rules);
    assert_eq!(out[1].object_name, "Raised Crosswalk");
    assert_eq!(out[1].status, SuggestionStatus::Filtered);
    assert!(out[1].filter_reason.as_deref().unwrap().contains("street_edge"));
    for tags in [&[ContextTag::StreetEdge][..], &[ContextTag::Intersection][..]] {
        let street = scene("s", "street", &["bench"], tags);
        let out = apply_feasibility(cand(), &street, &rules);
        assert!(out.iter().all(|s| s.status == SuggestionStatus::Proposed && s.filter_reason.is_none()));
    }
}

#[test]
fn filtered_candidates_move_behind_survivors() {
    let rules = default_rules();
    let list = vec![
        Suggestion::semantic("Bus Stop", "x", 1),
        Suggestion::semantic("Bench", "x", 2),
        Suggestion::semantic("Dock", "x", 3),
        Suggestion::semantic("Planter", "x", 4),
    ];
    let park = scene("p", "park", &["bench"], &[ContextTag::GrassGround]);
    let out = apply_feasibility(list, &park, &rules);
    let names: Vec<_> = out.iter().map(|s| (s.object_name.as_str(), s.rank, s.status)).collect();
    use SuggestionStatus::*;
    assert_eq!(
        names,
        [("Bench", 1, Proposed), ("Planter", 2, Proposed), ("Bus Stop", 3, Filtered), ("Dock", 4, Filtered)]
    );
}

#[test]
fn rules_file_loads() {
    let rules = load_rules(&fixtures().join("rules.json")).unwrap();
    let cart = || vec![Suggestion::semantic("Street Vendor Cart", "x", 1)];
    let six = fixture_scene("scene6");
    assert_eq!(apply_feasibility(cart(), &six, &rules)[0].status, SuggestionStatus::Filtered);
    let five = fixture_scene("scene5");
    assert_eq!(apply_feasibility(cart(), &five, &rules)[0].status, SuggestionStatus::Proposed);
}

#[test]
fn duplicates_of_statistical_options_are_suppressed() {
    let existing = vec![Suggestion::statistical("tree", 1)];
    let fresh = vec![
        Suggestion::semantic("Trees", "x", 1),
        Suggestion::semantic("Bench", "x", 2),
        Suggestion::semantic("bench", "y", 3),
    ];
    let out = suppress_duplicates(fresh, &existing);
    let proposed: Vec<_> = out.iter().filter(|s| s.is_proposed()).map(|s| s.object_name.as_str()).collect();
    assert_eq!(proposed, ["Bench"]);
}
