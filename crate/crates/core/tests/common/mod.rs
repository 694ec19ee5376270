#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use image::{Rgb, RgbImage};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use urbantactic::cooccur::CooccurrenceMatrix;
use urbantactic::ingest::{BBox, ContextTag, Detection, Scene, Vocabulary, PERSON};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Expected top-5 complements (person excluded) for every anchor of the
/// reference matrix fixture.
pub const REFERENCE_RANKINGS: [(&str, [&str; 5]); 18] = [
    ("bench", ["window", "tree", "sign", "traffic light", "crosswalk"]),
    ("tree", ["traffic light", "window", "sidewalk", "door", "planter"]),
    ("planter", ["tree", "sidewalk", "window", "balcony", "traffic light"]),
    ("sign", ["traffic light", "window", "crosswalk", "tree", "sidewalk"]),
    ("sidewalk", ["window", "traffic light", "tree", "planter", "sign"]),
    ("curb", ["window", "sign", "traffic light", "sidewalk", "crosswalk"]),
    ("crosswalk", ["traffic light", "window", "sign", "tree", "sidewalk"]),
    ("fence", ["window", "sidewalk", "tree", "planter", "traffic light"]),
    ("pole", ["window", "traffic light", "tree", "sign", "crosswalk"]),
    ("traffic light", ["sign", "window", "tree", "crosswalk", "sidewalk"]),
    ("lamp", ["window", "door", "tree", "stairs", "sidewalk"]),
    ("trash can", ["window", "tree", "traffic light", "sign", "door"]),
    ("bicycle", ["window", "traffic light", "pole", "fence", "sidewalk"]),
    ("balcony", ["planter", "tree", "sidewalk", "fence", "door"]),
    ("railing", ["window", "pole", "bicycle", "fence", "sidewalk"]),
    ("stairs", ["traffic light", "window", "sidewalk", "tree", "door"]),
    ("door", ["tree", "window", "traffic light", "sidewalk", "crosswalk"]),
    ("window", ["traffic light", "sidewalk", "pole", "fence", "bicycle"]),
];

pub fn reference_matrix() -> CooccurrenceMatrix {
    let text = std::fs::read_to_string(fixtures().join("reference_matrix.json")).unwrap();
    CooccurrenceMatrix::from_snapshot_json(&text, None).unwrap()
}

/// `n` synthetic classes followed by `person`.
pub fn synthetic_vocab(n: usize) -> Arc<Vocabulary> {
    let mut classes: Vec<String> = (0..n).map(|i| format!("class{i:02}")).collect();
    classes.push(PERSON.to_string());
    Arc::new(Vocabulary::new(classes, Default::default()).unwrap())
}

pub fn bbox(x: f64, y: f64, w: f64, h: f64) -> BBox {
    BBox { x, y, w, h }
}

pub fn det(label: &str, confidence: f64) -> Detection {
    Detection { label: label.into(), confidence, bbox: bbox(0.1, 0.5, 0.2, 0.3) }
}

pub fn scene(id: &str, category: &str, labels: &[&str], tags: &[ContextTag]) -> Scene {
    Scene {
        scene_id: id.into(),
        image_uri: None,
        scene_category: category.into(),
        context_tags: tags.iter().copied().collect::<BTreeSet<_>>(),
        detections: labels.iter().map(|l| det(l, 0.8)).collect(),
    }
}

fn random_bbox(rng: &mut ChaCha8Rng) -> BBox {
    let w = rng.gen_range(0.01..0.5);
    let h = rng.gen_range(0.01..0.5);
    bbox(rng.gen_range(0.0..1.0 - w), rng.gen_range(0.0..1.0 - h), w, h)
}

/// Up to `max_scenes` scenes with repeated detections drawn from `vocab`.
pub fn random_scenes(rng: &mut ChaCha8Rng, vocab: &Vocabulary, max_scenes: usize) -> Vec<Scene> {
    let n_scenes = rng.gen_range(0..=max_scenes);
    let density: f64 = rng.gen_range(0.05..0.6);
    (0..n_scenes)
        .map(|s| {
            let mut detections = Vec::new();
            for class in vocab.classes() {
                if rng.gen_bool(density) {
                    for _ in 0..rng.gen_range(1..=3) {
                        detections.push(Detection {
                            label: class.clone(),
                            confidence: rng.gen_range(0.0..=1.0),
                            bbox: random_bbox(rng),
                        });
                    }
                }
            }
            // detection order must not matter
            for i in (1..detections.len()).rev() {
                detections.swap(i, rng.gen_range(0..=i));
            }
            Scene {
                scene_id: format!("s{s:04}"),
                image_uri: None,
                scene_category: "street".into(),
                context_tags: BTreeSet::new(),
                detections,
            }
        })
        .collect()
}

/// Pair presence counted the slow way: for every class pair, scan every
/// scene for both labels.
pub fn oracle_counts(scenes: &[Scene], vocab: &Vocabulary) -> Vec<Vec<u64>> {
    let classes = vocab.classes();
    let sets: Vec<BTreeSet<&str>> =
        scenes.iter().map(|s| s.detections.iter().map(|d| d.label.as_str()).collect()).collect();
    classes
        .iter()
        .map(|a| {
            classes
                .iter()
                .map(|b| sets.iter().filter(|s| s.contains(a.as_str()) && s.contains(b.as_str())).count() as u64)
                .collect()
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng) -> CooccurrenceMatrix {
    let vocab = synthetic_vocab(rng.gen_range(2..=24));
    let scenes = random_scenes(rng, &vocab, 150);
    CooccurrenceMatrix::build(&scenes, vocab).unwrap()
}

/// A street-like test picture: sky band over a grey road.
pub fn test_image(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        if y < h / 3 {
            Rgb([120, 170, 230])
        } else if (x / 16 + y / 16) % 2 == 0 {
            Rgb([110, 110, 115])
        } else {
            Rgb([60, 130, 60])
        }
    })
}

/// What a candidate reply must parse to.
#[derive(Debug, Clone)]
pub enum CsvExpect {
    /// Exactly these rows, with this many data records reported as rejected.
    Rows(Vec<(String, String)>, usize),
    Malformed,
}

fn rows(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

const FIVE: [(&str, &str); 5] = [
    ("Bench", "A wooden bench with steel legs"),
    ("Planter", "A square concrete planter with shrubs"),
    ("Bike Rack", "A galvanized steel rack for six bicycles"),
    ("Kiosk", "A small glass and timber information kiosk"),
    ("Water Fountain", "A granite drinking fountain with a bronze spout"),
];

fn plain(sep: &str) -> String {
    FIVE.iter().map(|(a, b)| format!("{a},{b}")).collect::<Vec<_>>().join(sep)
}

fn quoted() -> String {
    FIVE.iter().map(|(a, b)| format!("\"{a}\",\"{b}\"")).collect::<Vec<_>>().join("\n")
}

/// Fifty replies covering quoting, separators inside fields, fences, prose
/// around the table and replies in the wrong shape.
pub fn adversarial_csv_cases() -> Vec<(&'static str, String, CsvExpect)> {
    use CsvExpect::*;
    let five = rows(&FIVE);
    let header = "Object,Description\n";
    vec![
        ("header and plain rows", format!("{header}{}", plain("\n")), Rows(five.clone(), 0)),
        ("all fields quoted", format!("{header}{}", quoted()), Rows(five.clone(), 0)),
        ("headerless", plain("\n"), Rows(five.clone(), 0)),
        ("crlf line ends", format!("Object,Description\r\n{}", plain("\r\n")), Rows(five.clone(), 0)),
        ("blank lines between rows", format!("{header}{}", plain("\n\n")), Rows(five.clone(), 0)),
        ("csv fence", format!("```csv\n{header}{}\n```", plain("\n")), Rows(five.clone(), 0)),
        ("bare fence", format!("```\n{header}{}\n```", plain("\n")), Rows(five.clone(), 0)),
        (
            "fence with prose around it",
            format!("Here you go:\n```csv\n{header}{}\n```\nEnjoy, and let me know.", plain("\n")),
            Rows(five.clone(), 0),
        ),
        ("unclosed fence", format!("```csv\n{header}{}", plain("\n")), Rows(five.clone(), 0)),
        (
            "prose preamble before header",
            format!("Sure, here are five objects that fit the scene:\n\n{header}{}", plain("\n")),
            Rows(five.clone(), 0),
        ),
        (
            "prose after the table",
            format!("{header}{}\nThese fit well", plain("\n")),
            Rows(five.clone(), 1),
        ),
        ("bold header", format!("**Object**,**Description**\n{}", plain("\n")), Rows(five.clone(), 0)),
        ("lowercase spaced header", format!(" object , description \n{}", plain("\n")), Rows(five.clone(), 0)),
        ("byte order mark", format!("\u{feff}{header}{}", plain("\n")), Rows(five.clone(), 0)),
        (
            "comma inside quoted description",
            format!("{header}{}\n\"Kiosk\",\"Glass, timber, and steel\"", plain("\n")),
            Rows([five.clone(), rows(&[("Kiosk", "Glass, timber, and steel")])].concat(), 0),
        ),
        (
            "comma inside quoted name",
            "\"Bench, curved\",\"Long seat\"\n".to_string(),
            Rows(rows(&[("Bench, curved", "Long seat")]), 0),
        ),
        (
            "doubled quotes",
            "Sign,\"A sign reading \"\"Welcome\"\" in white\"".to_string(),
            Rows(rows(&[("Sign", "A sign reading \"Welcome\" in white")]), 0),
        ),
        (
            "backslash escaped quotes",
            "Sign,\"A sign reading \\\"Welcome\\\" in white\"".to_string(),
            Rows(rows(&[("Sign", "A sign reading \"Welcome\" in white")]), 0),
        ),
        (
            "newline inside quoted description",
            "Bench,\"Line one\nline two\"\nPlanter,Square".to_string(),
            Rows(rows(&[("Bench", "Line one\nline two"), ("Planter", "Square")]), 0),
        ),
        (
            "unquoted comma splits a row",
            format!("{header}{}\nKiosk,Glass, timber", plain("\n")),
            Rows(five.clone(), 1),
        ),
        (
            "unterminated quote at the end",
            format!("{header}{}\nKiosk,\"Glass and timber", plain("\n")),
            Rows(five.clone(), 1),
        ),
        (
            "unterminated quote swallows the rest",
            format!("{header}Bench,\"Wooden\nPlanter,Square"),
            Malformed,
        ),
        ("empty description", format!("{header}{}\nKiosk,", plain("\n")), Rows(five.clone(), 1)),
        ("empty name", format!("{header}{}\n,Glass box", plain("\n")), Rows(five.clone(), 1)),
        ("quoted empty name", format!("{header}{}\n\"\",Glass box", plain("\n")), Rows(five.clone(), 1)),
        ("trailing separator", format!("{header}Bench,A wooden bench,\n"), Rows(rows(&[("Bench", "A wooden bench")]), 0)),
        ("padded fields", "  Bench  ,   A wooden bench   ".to_string(), Rows(rows(&[("Bench", "A wooden bench")]), 0)),
        (
            "numbered names",
            "1. Bench,A wooden bench\n2) Planter,Square".to_string(),
            Rows(rows(&[("Bench", "A wooden bench"), ("Planter", "Square")]), 0),
        ),
        (
            "bulleted and bold names",
            "- Bench,A wooden bench\n**Planter**,Square".to_string(),
            Rows(rows(&[("Bench", "A wooden bench"), ("Planter", "Square")]), 0),
        ),
        (
            "digits that are part of the name",
            "3D Printed Planter,Layered resin pot\n24 Hour Locker,Steel boxes".to_string(),
            Rows(rows(&[("3D Printed Planter", "Layered resin pot"), ("24 Hour Locker", "Steel boxes")]), 0),
        ),
        (
            "text after a closing quote",
            "\"Bench\" XL,A long bench".to_string(),
            Rows(rows(&[("Bench XL", "A long bench")]), 0),
        ),
        (
            "unicode text",
            "Café Table,Marble top – 75 cm tall and ø 60 cm".to_string(),
            Rows(rows(&[("Café Table", "Marble top – 75 cm tall and ø 60 cm")]), 0),
        ),
        (
            "unicode text quoted",
            "Café Table,\"Marble top – 75 cm tall, ø 60 cm\"".to_string(),
            Rows(rows(&[("Café Table", "Marble top – 75 cm tall, ø 60 cm")]), 0),
        ),
        ("repeated header", format!("{header}{}\n{header}", plain("\n")), Rows(five.clone(), 1)),
        ("seven rows are all returned", format!("{}\nKiosk,Glass\nLamp,Tall", plain("\n")), Rows(
            [five.clone(), rows(&[("Kiosk", "Glass"), ("Lamp", "Tall")])].concat(),
            0,
        )),
        ("three rows", plain("\n").lines().take(3).collect::<Vec<_>>().join("\n"), Rows(five[..3].to_vec(), 0)),
        ("separator-only line", format!("{header},,,\n{}", plain("\n")), Rows(five.clone(), 0)),
        ("single long line", format!("Bench,{}", "very ".repeat(2000)), Rows(rows(&[("Bench", "very ".repeat(2000).trim())]), 0)),
        ("empty reply", String::new(), Malformed),
        ("whitespace reply", " \n\t\n ".into(), Malformed),
        ("header only", header.into(), Malformed),
        ("prose only", "I cannot help with that request.".into(), Malformed),
        ("empty fence", "```\n```".into(), Malformed),
        ("semicolon separated", plain("\n").replace(',', ";"), Malformed),
        ("tab separated", plain("\n").replace(',', "\t"), Malformed),
        (
            "markdown table",
            "| Object | Description |\n|---|---|\n| Bench | A wooden bench, slatted |\n| Planter | Square, concrete |".into(),
            Malformed,
        ),
        (
            "json reply",
            "[{\"Object\": \"Bench\", \"Description\": \"A wooden bench\"}, {\"Object\": \"Planter\", \"Description\": \"Square\"}]".into(),
            Malformed,
        ),
        (
            "three column table",
            "Object,Description,Height\nBench,Wooden,0.8\nPlanter,Square,0.6".into(),
            Malformed,
        ),
        (
            "prose line too long to be a name",
            format!("{},trailing clause", "word ".repeat(40)),
            Malformed,
        ),
        ("rows after prose without header", format!("Here are the options\n{}", plain("\n")), Rows(five, 1)),
    ]
}

/// Object names of the recorded replies in `fixtures/vlm`, keyed by file stem.
pub const LISTING_NAMES: [(&str, [&str; 5]); 5] = [
    (
        "scene2",
        [
            "Outdoor Chess Table",
            "Drinking Fountain",
            "Bike Rack",
            "Public Art Sculpture",
            "Planter with Seasonal Flowers",
        ],
    ),
    ("scene3", ["Park Bench", "Drinking Fountain", "Bike Rack", "Information Kiosk", "Planter with Seasonal Flowers"]),
    (
        "scene4",
        ["Public Seating Bench", "Bicycle Rack", "Drinking Fountain", "Public Art Sculpture", "Wayfinding Signpost"],
    ),
    ("scene5", ["Bicycle Rack", "Planter Box", "Public Bench", "Street Lamp", "Drinking Fountain"]),
    ("scene6", ["Bus Stop Shelter", "Street Vendor Cart", "Planter Barrier", "Public Bench", "Information Kiosk"]),
];

pub fn listing(stem: &str) -> String {
    std::fs::read_to_string(fixtures().join("vlm").join(format!("{stem}.txt"))).unwrap()
}

/// A scene from the fixture corpus, canonicalized with the built-in vocabulary.
pub fn fixture_scene(id: &str) -> Scene {
    let corpus = urbantactic::ingest::load_corpus_dir(
        &fixtures().join("corpus"),
        &Vocabulary::default_urban(),
        Default::default(),
    )
    .unwrap();
    corpus.scene(id).unwrap().clone()
}

pub fn fixture_image(id: &str) -> RgbImage {
    urbantactic::recommend::load_image(&fixtures().join("corpus/images").join(format!("{id}.png"))).unwrap()
}

pub const EPOCH: &str = "1970-01-01T00:00:00.000Z";

/// A store over the fixture corpus with replayable providers.
pub fn fixture_store(
    vlm: Arc<dyn urbantactic::recommend::vlm::VlmProvider>,
    workers: usize,
    assets_dir: &std::path::Path,
) -> urbantactic::service::SessionStore {
    use urbantactic::ingest::{filter_scenes, load_corpus_dir, FilterPolicy};
    use urbantactic::mesh::provider::FixtureMesh;
    use urbantactic::service::{FixedClock, ServiceContext, SessionStore};
    let vocab = Arc::new(Vocabulary::default_urban());
    let corpus = load_corpus_dir(&fixtures().join("corpus"), &vocab, Default::default()).unwrap();
    let scenes = filter_scenes(&corpus.scenes, &FilterPolicy::default());
    let matrix = Arc::new(CooccurrenceMatrix::build(&scenes, vocab).unwrap());
    let mesh = Arc::new(FixtureMesh::new(fixtures().join("meshes")));
    let mut ctx = ServiceContext::new(scenes, corpus.root.clone(), matrix, vlm, mesh, assets_dir.to_path_buf());
    ctx.lod_triangles = 200;
    SessionStore::new(ctx, Arc::new(FixedClock(EPOCH.into())), workers)
}

pub fn fixture_vlm() -> Arc<dyn urbantactic::recommend::vlm::VlmProvider> {
    Arc::new(urbantactic::recommend::vlm::FixtureVlm::new(fixtures().join("vlm")))
}

const EVENT_NAMES: [&str; 6] = ["window", "tree", "sign", "bench", "kiosk", "planter"];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &'a [&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn random_status(rng: &mut ChaCha8Rng) -> urbantactic::recommend::SuggestionStatus {
    use urbantactic::recommend::SuggestionStatus::*;
    [Proposed, Proposed, Proposed, Accepted, Rejected, Filtered][rng.gen_range(0..6)]
}

/// Candidate lists that are usually well formed, sometimes not.
fn random_candidates(
    rng: &mut ChaCha8Rng,
    current: &[urbantactic::recommend::Suggestion],
) -> Vec<urbantactic::recommend::Suggestion> {
    use urbantactic::recommend::{Suggestion, SuggestionStatus};
    let mut list: Vec<Suggestion> = if rng.gen_bool(0.4) {
        // a plausible re-prompt: decided entries first, then fresh ones
        current
            .iter()
            .filter(|s| matches!(s.status, SuggestionStatus::Accepted | SuggestionStatus::Rejected))
            .cloned()
            .collect()
    } else {
        Vec::new()
    };
    for _ in 0..rng.gen_range(0..6) {
        let mut s = Suggestion::semantic(pick(rng, &EVENT_NAMES), "an object 1 m tall", 0);
        if rng.gen_bool(0.1) {
            s.status = random_status(rng);
        }
        list.push(s);
    }
    for (i, s) in list.iter_mut().enumerate() {
        s.rank = i as u32 + 1;
    }
    if rng.gen_bool(0.05) && !list.is_empty() {
        list[0].rank = 7;
    }
    list
}

/// One random, possibly invalid, event for `s`.
pub fn random_event(rng: &mut ChaCha8Rng, s: &urbantactic::service::Session) -> urbantactic::service::EventKind {
    use urbantactic::recommend::Suggestion;
    use urbantactic::service::SessionState::*;
    use urbantactic::service::{EventKind, Placement};
    let rank = |rng: &mut ChaCha8Rng| rng.gen_range(0..8u32);
    // usually an operation the current state admits, otherwise anything
    let roll = if rng.gen_bool(0.6) {
        match s.state {
            Created => 1,
            AnchorSet => 2,
            PairSet => 3,
            CandidatesReady => [4, 5, 6, 7, 7, 8, 8, 9][rng.gen_range(0..8)],
            Completed => rng.gen_range(0..10),
        }
    } else {
        rng.gen_range(0..10)
    };
    match roll {
        0 => EventKind::Created { session_id: "sess-x".into(), scene_id: "scene2".into() },
        1 => {
            let anchor = pick(rng, &EVENT_NAMES).to_string();
            let mut options: Vec<Suggestion> = Vec::new();
            for name in EVENT_NAMES.iter().filter(|n| **n != anchor).take(rng.gen_range(0..6)) {
                options.push(Suggestion::statistical(*name, options.len() as u32 + 1));
            }
            if rng.gen_bool(0.1) {
                options.push(Suggestion::semantic(anchor.clone(), "x", options.len() as u32 + 1));
            }
            EventKind::SetAnchor { anchor, options }
        }
        2 => EventKind::ChoosePair { co_object: pick(rng, &EVENT_NAMES).into(), override_: rng.gen_bool(0.3) },
        3 => EventKind::ReceiveCandidates {
            candidates: random_candidates(rng, &s.semantic_candidates),
            retries: rng.gen_range(0..3),
        },
        4 => EventKind::Reprompt {
            candidates: random_candidates(rng, &s.semantic_candidates),
            retries: rng.gen_range(0..3),
        },
        5 | 6 => {
            let asset_id = if rng.gen_bool(0.8) { s.next_asset_id() } else { format!("{}-a1", s.session_id) };
            EventKind::Accept { rank: rank(rng), asset_id }
        }
        7 => EventKind::Reject { rank: rank(rng) },
        8 => {
            let asset_id = match s.assets.len() {
                0 => "none".to_string(),
                n => s.assets[rng.gen_range(0..n)].asset_id.clone(),
            };
            let position = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
            EventKind::Place {
                placement: Placement { asset_id, position, rotation_y: rng.gen_range(0.0..6.3), scale_override: None },
            }
        }
        _ => EventKind::Complete {},
    }
}

/// Drive a fresh session with `len` random events. Returns the session and
/// how many events were accepted. Panics when a rejected event changes state
/// or the log does not fold back to the session.
pub fn random_walk(seed: u64, len: usize) -> (urbantactic::service::Session, usize) {
    use rand::SeedableRng;
    use urbantactic::service::{DecisionEvent, EventKind, Session};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Session::start(DecisionEvent {
        seq: 1,
        at: EPOCH.into(),
        event: EventKind::Created { session_id: format!("sess-{seed:06}"), scene_id: "scene2".into() },
    })
    .unwrap();
    let mut applied = 0;
    for i in 0..len {
        let kind = random_event(&mut rng, &s);
        let seq = if rng.gen_bool(0.03) { s.next_seq() + 1 } else { s.next_seq() };
        let e = DecisionEvent { seq, at: format!("t{i}"), event: kind };
        let before = s.clone();
        let checked = s.check(&e);
        match s.apply(e) {
            Ok(()) => {
                assert!(checked.is_ok());
                applied += 1;
            }
            Err(_) => {
                assert!(checked.is_err());
                assert_eq!(s, before, "rejected event changed the session");
            }
        }
        assert_eq!(Session::replay(&s.decision_log).unwrap(), s, "log does not fold to the session");
    }
    (s, applied)
}
