use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EngineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TypingProfile {
    pub wpm_mean: f64,
    /// Spread of typing speed, used as the relative jitter of each key
    /// interval (`wpm_sd / wpm_mean`).
    pub wpm_sd: f64,
    /// Chance per character of hitting a wrong key first. The wrong key is
    /// always followed by a backspace and the intended key.
    pub mistake_probability: f64,
}

impl Default for TypingProfile {
    fn default() -> Self {
        Self { wpm_mean: 40.0, wpm_sd: 10.0, mistake_probability: 0.02 }
    }
}

impl TypingProfile {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.wpm_mean.is_finite() && self.wpm_mean > 0.0) {
            return Err(EngineError::Profile(format!("wpm_mean must be positive, got {}", self.wpm_mean)));
        }
        if !(self.wpm_sd.is_finite() && self.wpm_sd >= 0.0) {
            return Err(EngineError::Profile(format!("wpm_sd must be non-negative, got {}", self.wpm_sd)));
        }
        if !(0.0..1.0).contains(&self.mistake_probability) {
            return Err(EngineError::Profile(format!(
                "mistake_probability must be in [0, 1), got {}",
                self.mistake_probability
            )));
        }
        Ok(())
    }

    /// Seconds per keystroke at the mean speed: one word is five characters.
    pub fn mean_interval_secs(&self) -> f64 {
        60.0 / (self.wpm_mean * 5.0)
    }

    /// Largest relative deviation of a single interval from the mean.
    pub fn jitter_bound(&self) -> f64 {
        (2.0 * self.wpm_sd / self.wpm_mean).min(0.9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Key {
    Char(char),
    Backspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keystroke {
    /// Milliseconds after typing began.
    pub offset_ms: u64,
    pub key: Key,
}

/// Keystrokes for `content`. Each key lands one jittered interval after the
/// previous one; the jitter is symmetric and clamped, so the expected total
/// time is exactly `keys * mean_interval_secs`.
pub fn simulate_typing(content: &str, profile: &TypingProfile, seed: u64) -> Vec<Keystroke> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = profile.mean_interval_secs();
    let bound = profile.jitter_bound();
    let rel_sd = profile.wpm_sd / profile.wpm_mean;
    let jitter = (rel_sd > 0.0).then(|| Normal::new(0.0, rel_sd).expect("finite sd"));

    let mut t = 0.0f64;
    let mut out = Vec::with_capacity(content.len() + content.len() / 16);
    let mut press = |key: Key, rng: &mut ChaCha8Rng| {
        let eps: f64 = jitter.as_ref().map_or(0.0, |n| n.sample(rng)).clamp(-bound, bound);
        t += base * (1.0 + eps);
        out.push(Keystroke { offset_ms: (t * 1000.0).round() as u64, key });
    };
    for c in content.chars() {
        if profile.mistake_probability > 0.0 && rng.random::<f64>() < profile.mistake_probability {
            let wrong = wrong_key(c, &mut rng);
            press(Key::Char(wrong), &mut rng);
            press(Key::Backspace, &mut rng);
        }
        press(Key::Char(c), &mut rng);
    }
    out
}

fn wrong_key(intended: char, rng: &mut ChaCha8Rng) -> char {
    loop {
        let c = (b'a' + rng.random_range(0..26u8)) as char;
        if c != intended {
            return c;
        }
    }
}

/// Applies keystrokes to an empty buffer.
pub fn reconstruct<'a>(keys: impl IntoIterator<Item = &'a Key>) -> String {
    let mut s = String::new();
    for k in keys {
        match k {
            Key::Char(c) => s.push(*c),
            Key::Backspace => {
                s.pop();
            }
        }
    }
    s
}
