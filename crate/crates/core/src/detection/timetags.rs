use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::DetectionError;

pub const MAX_DURATION_S: f64 = 3600.0;

const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Channel {
    Signal = 0,
    Idler = 1,
}

impl Channel {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Channel::Signal),
            1 => Some(Channel::Idler),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub time_ps: u64,
    pub channel: Channel,
}

impl Tag {
    pub fn new(time_ps: u64, channel: Channel) -> Self {
        Tag { time_ps, channel }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagStream {
    pub tags: Vec<Tag>,
    pub duration_s: f64,
}

impl TagStream {
    pub fn new(tags: Vec<Tag>, duration_s: f64) -> Self {
        TagStream { tags, duration_s }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Index of the first tag earlier than its predecessor.
    pub fn first_unsorted(&self) -> Option<usize> {
        self.tags.windows(2).position(|w| w[1].time_ps < w[0].time_ps).map(|i| i + 1)
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.tags.iter().filter(|t| t.channel == channel).count()
    }

    /// Mean singles rate of a channel in counts per second.
    pub fn rate(&self, channel: Channel) -> f64 {
        if self.duration_s > 0.0 {
            self.count(channel) as f64 / self.duration_s
        } else {
            0.0
        }
    }
}

/// Rates and timing of the two-detector setup.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    /// Full width of the coincidence window.
    pub coincidence_window_ns: f64,
    pub rate_signal_cps: f64,
    pub rate_idler_cps: f64,
    pub pair_rate_cps: f64,
    /// Standard deviation of the Gaussian idler timing jitter.
    pub jitter_ps: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for DetectionConfig {
    /// Narrowband operating point at 100 µW pump.
    fn default() -> Self {
        DetectionConfig {
            coincidence_window_ns: 3.0,
            rate_signal_cps: 86_000.0,
            rate_idler_cps: 86_000.0,
            pair_rate_cps: 16_000.0,
            jitter_ps: 350.0,
            duration_s: 1.0,
            seed: 0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), DetectionError> {
        let bad = |name, value| Err(DetectionError::InvalidParameter { name, value });
        if !(self.coincidence_window_ns.is_finite() && self.coincidence_window_ns > 0.0) {
            return bad("coincidence_window_ns", self.coincidence_window_ns);
        }
        for (name, value) in [
            ("rate_signal_cps", self.rate_signal_cps),
            ("rate_idler_cps", self.rate_idler_cps),
            ("pair_rate_cps", self.pair_rate_cps),
            ("jitter_ps", self.jitter_ps),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return bad(name, value);
            }
        }
        if !(self.duration_s.is_finite() && (0.0..=MAX_DURATION_S).contains(&self.duration_s)) {
            return bad("duration_s", self.duration_s);
        }
        if self.pair_rate_cps > self.rate_signal_cps.min(self.rate_idler_cps) {
            return Err(DetectionError::RateInconsistent { pair: self.pair_rate_cps });
        }
        Ok(())
    }

    pub fn window_ps(&self) -> u64 {
        (self.coincidence_window_ns * 1000.0).round() as u64
    }
}

/// Arrival times of a homogeneous Poisson process on `[0, end_ps]`.
fn poisson_arrivals(rng: &mut ChaCha8Rng, rate_cps: f64, end_ps: f64, mut emit: impl FnMut(&mut ChaCha8Rng, f64)) {
    if rate_cps <= 0.0 {
        return;
    }
    let gap = Exp::new(rate_cps / PS_PER_S).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > end_ps {
            break;
        }
        emit(rng, t);
    }
}

/// Synthesises a detector click stream.
///
/// True pairs arrive at `pair_rate_cps`; the idler of each pair is offset
/// by Gaussian jitter. Uncorrelated singles top each channel up to its
/// configured rate. Idlers jittered outside `[0, duration]` are lost. The
/// output is fully determined by `cfg.seed`.
pub fn generate_timetags(cfg: &DetectionConfig) -> Result<TagStream, DetectionError> {
    cfg.validate()?;
    let end_ps = (cfg.duration_s * PS_PER_S).round();
    let end = end_ps as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let expected = (cfg.rate_signal_cps + cfg.rate_idler_cps) * cfg.duration_s;
    let mut tags = Vec::with_capacity((expected * 1.05) as usize + 16);

    let jitter = Normal::new(0.0, cfg.jitter_ps).expect("finite jitter");
    poisson_arrivals(&mut rng, cfg.pair_rate_cps, end_ps, |rng, t| {
        let signal = t.round() as u64;
        tags.push(Tag::new(signal, Channel::Signal));
        let idler = (t + jitter.sample(rng)).round();
        if (0.0..=end_ps).contains(&idler) {
            tags.push(Tag::new(idler as u64, Channel::Idler));
        }
    });
    poisson_arrivals(&mut rng, cfg.rate_signal_cps - cfg.pair_rate_cps, end_ps, |_, t| {
        tags.push(Tag::new((t.round() as u64).min(end), Channel::Signal));
    });
    poisson_arrivals(&mut rng, cfg.rate_idler_cps - cfg.pair_rate_cps, end_ps, |_, t| {
        tags.push(Tag::new((t.round() as u64).min(end), Channel::Idler));
    });
    tags.sort_unstable();
    Ok(TagStream::new(tags, cfg.duration_s))
}
