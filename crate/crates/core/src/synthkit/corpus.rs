//! Seeded evaluation corpora built from gesture scripts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::render::mix_seed;
use super::script::{generate_trace, GestureScript, HandTraceRecord, ScriptKind};
use super::SynthError;
use crate::geometry::{SceneConfig, Vec2};
use crate::hand::{Direction, FingerId};

pub const DEFAULT_CORPUS_SIZE: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub script: GestureScript,
    pub label: &'static str,
    pub trace: Vec<HandTraceRecord>,
    /// Seed for the pixel noise of this item's frames.
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub items: Vec<CorpusItem>,
}

impl Corpus {
    pub fn labels(&self) -> Vec<&'static str> {
        self.items.iter().map(|i| i.label).collect()
    }
}

/// Builds one labeled trace per script, in script order.
pub fn make_corpus(
    scripts: &[GestureScript],
    seed: u64,
    frame_period_ms: u64,
    scene: &SceneConfig,
) -> Result<Corpus, SynthError> {
    let items = scripts
        .iter()
        .enumerate()
        .map(|(i, script)| {
            let item_seed = mix_seed(seed ^ script.seed, i as u64);
            let script = script.clone().with_seed(item_seed);
            let trace = generate_trace(&script, frame_period_ms, scene)?;
            Ok(CorpusItem {
                label: script.label(),
                script,
                trace,
                noise_seed: mix_seed(item_seed, 0x6e6f_6973_65),
            })
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    Ok(Corpus { items })
}

/// Share of each script family in the default corpus, in twentieths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScriptFamily {
    Tap,
    Swipe1,
    Swipe2,
    Pinch,
    TypeKey,
    CursorSwipe,
}

impl ScriptFamily {
    pub const MIX: [(ScriptFamily, usize); 6] = [
        (ScriptFamily::Tap, 5),
        (ScriptFamily::Swipe1, 4),
        (ScriptFamily::Swipe2, 4),
        (ScriptFamily::Pinch, 3),
        (ScriptFamily::TypeKey, 2),
        (ScriptFamily::CursorSwipe, 2),
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScriptFamily::Tap => "tap",
            ScriptFamily::Swipe1 | ScriptFamily::Swipe2 => "swipe",
            ScriptFamily::Pinch => "pinch",
            ScriptFamily::TypeKey => "type_key",
            ScriptFamily::CursorSwipe => "cursor_swipe",
        }
    }
}

/// Exact per-family counts for a corpus of `n` scripts: floor of the share,
/// remainder handed out in mixture order.
pub fn family_counts(n: usize) -> Vec<(ScriptFamily, usize)> {
    let total: usize = ScriptFamily::MIX.iter().map(|(_, w)| w).sum();
    let mut counts: Vec<(ScriptFamily, usize)> =
        ScriptFamily::MIX.iter().map(|&(f, w)| (f, n * w / total)).collect();
    let mut remaining = n - counts.iter().map(|(_, c)| c).sum::<usize>();
    for entry in counts.iter_mut() {
        if remaining == 0 {
            break;
        }
        entry.1 += 1;
        remaining -= 1;
    }
    counts
}

const INDEX_X: (f64, f64) = (-30.0, 20.0);
const INDEX_Y: (f64, f64) = (-35.0, 35.0);
const MAX_ATTEMPTS: usize = 200;

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.gen_range(lo..=hi)
}

fn lead_ms(rng: &mut ChaCha8Rng) -> u64 {
    rng.gen_range(40..=60) * 10
}

fn draw_script(family: ScriptFamily, rng: &mut ChaCha8Rng, jitter: f64) -> GestureScript {
    let lead = lead_ms(rng);
    let ceiling = uniform(rng, (7.0, 10.0));
    let script = match family {
        ScriptFamily::Tap | ScriptFamily::TypeKey => {
            let tip = Vec2::new(uniform(rng, INDEX_X), uniform(rng, INDEX_Y));
            let core = rng.gen_range(30..=40) * 10;
            let s = if family == ScriptFamily::Tap {
                let finger = FingerId::ALL[rng.gen_range(0..3)];
                GestureScript::tap(finger, tip)
            } else {
                GestureScript::type_key(tip)
            };
            s.with_duration(core + 2 * lead)
        }
        ScriptFamily::Swipe1 | ScriptFamily::Swipe2 | ScriptFamily::CursorSwipe => {
            let direction = if family == ScriptFamily::CursorSwipe {
                [Direction::Left, Direction::Right][rng.gen_range(0..2)]
            } else {
                Direction::ALL[rng.gen_range(0..4)]
            };
            let amplitude = uniform(rng, (25.0, 40.0));
            let travel = direction.unit() * amplitude;
            // start and end of the index tip both inside the index box
            let x_range = (INDEX_X.0 - travel.x.min(0.0), INDEX_X.1 - travel.x.max(0.0));
            let y_range = (INDEX_Y.0 - travel.y.min(0.0), INDEX_Y.1 - travel.y.max(0.0));
            let tip = Vec2::new(uniform(rng, x_range), uniform(rng, y_range));
            let core = rng.gen_range(70..=90) * 10;
            let s = match family {
                ScriptFamily::CursorSwipe => GestureScript::cursor_swipe(direction, amplitude, tip),
                ScriptFamily::Swipe1 => GestureScript::swipe(direction, 1, amplitude, tip),
                _ => GestureScript::swipe(direction, 2, amplitude, tip),
            };
            s.with_duration(core + 2 * lead)
        }
        ScriptFamily::Pinch => {
            let index = Vec2::new(uniform(rng, (-20.0, 10.0)), uniform(rng, (-20.0, 20.0)));
            let thumb = index - Vec2::new(uniform(rng, (30.0, 40.0)), uniform(rng, (0.0, 10.0)));
            let sign = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (scale, rotation) = match rng.gen_range(0..3) {
                0 => (1.0 + sign(rng) * uniform(rng, (0.2, 0.35)), uniform(rng, (-0.05, 0.05))),
                1 => (uniform(rng, (0.97, 1.03)), sign(rng) * uniform(rng, (0.25, 0.5))),
                _ => (
                    1.0 + sign(rng) * uniform(rng, (0.15, 0.3)),
                    sign(rng) * uniform(rng, (0.2, 0.4)),
                ),
            };
            let pan = Vec2::new(uniform(rng, (-6.0, 6.0)), uniform(rng, (-6.0, 6.0)));
            let core = rng.gen_range(80..=100) * 10;
            GestureScript::pinch(scale, rotation, pan, thumb, index).with_duration(core + 2 * lead)
        }
    };
    GestureScript { hover_ceiling_mm: ceiling, ..script }
        .with_lead(lead)
        .with_jitter(jitter)
        .with_seed(rng.gen())
}

/// The default evaluation mixture: exact family counts, shuffled, each
/// script redrawn until it generates a valid trace under `scene`.
pub fn default_scripts(
    n: usize,
    seed: u64,
    jitter_sigma_mm: f64,
    frame_period_ms: u64,
    scene: &SceneConfig,
) -> Result<Vec<GestureScript>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut families: Vec<ScriptFamily> = family_counts(n)
        .into_iter()
        .flat_map(|(f, c)| std::iter::repeat(f).take(c))
        .collect();
    families.shuffle(&mut rng);

    families
        .into_iter()
        .map(|family| {
            for _ in 0..MAX_ATTEMPTS {
                let script = draw_script(family, &mut rng, jitter_sigma_mm);
                if generate_trace(&script, frame_period_ms, scene).is_ok() {
                    return Ok(script);
                }
            }
            Err(SynthError::InvalidScript(format!(
                "could not draw a valid {} script for this scene",
                family.label()
            )))
        })
        .collect()
}

/// Convenience: the default mixture turned into a corpus.
pub fn default_corpus(
    n: usize,
    seed: u64,
    jitter_sigma_mm: f64,
    frame_period_ms: u64,
    scene: &SceneConfig,
) -> Result<Corpus, SynthError> {
    let scripts = default_scripts(n, seed, jitter_sigma_mm, frame_period_ms, scene)?;
    make_corpus(&scripts, seed, frame_period_ms, scene)
}

impl ScriptKind {
    /// Whether two scripts belong to the same family for histogram purposes.
    pub fn family(&self) -> ScriptFamily {
        match self {
            ScriptKind::Tap { .. } => ScriptFamily::Tap,
            ScriptKind::Swipe { n_fingers: 1, .. } => ScriptFamily::Swipe1,
            ScriptKind::Swipe { .. } => ScriptFamily::Swipe2,
            ScriptKind::Pinch { .. } => ScriptFamily::Pinch,
            ScriptKind::TypeKey => ScriptFamily::TypeKey,
            ScriptKind::CursorSwipe { .. } => ScriptFamily::CursorSwipe,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn four_scripts_keep_order() {
        let scene = SceneConfig::default();
        let scripts = vec![
            GestureScript::tap(FingerId::INDEX, Vec2::ZERO),
            GestureScript::swipe(Direction::Left, 1, 25.0, Vec2::new(10.0, 0.0)),
            GestureScript::type_key(Vec2::new(-10.0, 5.0)),
            GestureScript::cursor_swipe(Direction::Right, 25.0, Vec2::new(-25.0, 0.0)),
        ];
        let corpus = make_corpus(&scripts, 1, 10, &scene).unwrap();
        assert_eq!(corpus.labels(), vec!["tap", "swipe", "type_key", "cursor_swipe"]);
        let again = make_corpus(&scripts, 1, 10, &scene).unwrap();
        assert_eq!(corpus, again);
    }

    #[test]
    fn family_counts_are_exact() {
        let counts: HashMap<_, _> = family_counts(500).into_iter().collect();
        assert_eq!(counts[&ScriptFamily::Tap], 125);
        assert_eq!(counts[&ScriptFamily::Swipe1], 100);
        assert_eq!(counts[&ScriptFamily::Swipe2], 100);
        assert_eq!(counts[&ScriptFamily::Pinch], 75);
        assert_eq!(counts[&ScriptFamily::TypeKey], 50);
        assert_eq!(counts[&ScriptFamily::CursorSwipe], 50);
        for n in [0, 1, 7, 33, 499] {
            assert_eq!(family_counts(n).iter().map(|(_, c)| c).sum::<usize>(), n);
        }
    }

    #[test]
    fn small_default_corpus_is_valid_and_deterministic() {
        let scene = SceneConfig::default();
        let a = default_corpus(24, 5, 0.3, 10, &scene).unwrap();
        let b = default_corpus(24, 5, 0.3, 10, &scene).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.items.len(), 24);
        let c = default_corpus(24, 6, 0.3, 10, &scene).unwrap();
        assert_ne!(a, c);
    }
}
