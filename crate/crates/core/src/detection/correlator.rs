use std::collections::VecDeque;

use rayon::prelude::*;

use super::{Channel, DetectionError, Tag, TagStream};

/// Histogram bin width used by [`correlate_window`].
pub const DEFAULT_HIST_BIN_PS: u64 = 100;

/// Matched `t_idler − t_signal` delays, binned over the coincidence window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayHistogram {
    pub bin_ps: u64,
    /// Lower edge of bin 0.
    pub origin_ps: i64,
    pub counts: Vec<u64>,
}

impl DelayHistogram {
    fn new(window_ps: u64, bin_ps: u64) -> Self {
        let bin_ps = bin_ps.max(1);
        let half_bins = (window_ps / 2).div_ceil(bin_ps);
        DelayHistogram {
            bin_ps,
            origin_ps: -((half_bins * bin_ps) as i64),
            counts: vec![0; 2 * half_bins as usize + 1],
        }
    }

    fn record(&mut self, delay_ps: i64) {
        let idx = (delay_ps - self.origin_ps).div_euclid(self.bin_ps as i64) as usize;
        self.counts[idx] += 1;
    }

    fn merge(&mut self, other: &DelayHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// `(lower bin edge, count)` pairs.
    pub fn rows(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, c)| (self.origin_ps + (i as u64 * self.bin_ps) as i64, *c))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correlation {
    pub coincidences: u64,
    pub histogram: DelayHistogram,
}

/// Counts signal–idler coincidences with `|Δt| ≤ τ_c/2`.
///
/// Tags are visited in stream order. A tag is matched to the most recent
/// still-unmatched tag of the other channel inside the window, otherwise it
/// waits for a later partner. Each tag is used at most once.
pub fn correlate_window(stream: &TagStream, tau_c_ns: f64) -> Result<Correlation, DetectionError> {
    correlate_window_with_bins(stream, tau_c_ns, DEFAULT_HIST_BIN_PS)
}

pub fn correlate_window_with_bins(
    stream: &TagStream,
    tau_c_ns: f64,
    bin_ps: u64,
) -> Result<Correlation, DetectionError> {
    let window_ps = checked_window(stream, tau_c_ns)?;
    Ok(correlate_slice(&stream.tags, window_ps, bin_ps))
}

/// Same result as [`correlate_window`], computed on up to `chunks` pieces in
/// parallel. Pieces are cut only at gaps wider than half the window, where
/// no pending tag can survive, so the matching is unchanged.
pub fn correlate_window_chunked(
    stream: &TagStream,
    tau_c_ns: f64,
    chunks: usize,
) -> Result<Correlation, DetectionError> {
    let window_ps = checked_window(stream, tau_c_ns)?;
    let tags = &stream.tags;
    let target = tags.len().div_ceil(chunks.max(1)).max(1);
    let mut cuts = vec![0];
    let mut next = target;
    while next < tags.len() {
        match (next..tags.len()).find(|&i| 2 * (tags[i].time_ps - tags[i - 1].time_ps) > window_ps) {
            Some(cut) => {
                cuts.push(cut);
                next = cut + target;
            }
            None => break,
        }
    }
    cuts.push(tags.len());
    let parts: Vec<Correlation> = cuts
        .par_windows(2)
        .map(|w| correlate_slice(&tags[w[0]..w[1]], window_ps, DEFAULT_HIST_BIN_PS))
        .collect();
    let mut total = Correlation {
        coincidences: 0,
        histogram: DelayHistogram::new(window_ps, DEFAULT_HIST_BIN_PS),
    };
    for p in &parts {
        total.coincidences += p.coincidences;
        total.histogram.merge(&p.histogram);
    }
    Ok(total)
}

fn checked_window(stream: &TagStream, tau_c_ns: f64) -> Result<u64, DetectionError> {
    if !(tau_c_ns.is_finite() && tau_c_ns > 0.0) {
        return Err(DetectionError::InvalidParameter { name: "tau_c_ns", value: tau_c_ns });
    }
    if let Some(i) = stream.first_unsorted() {
        return Err(DetectionError::UnsortedStream(i));
    }
    Ok((tau_c_ns * 1000.0).round() as u64)
}

fn correlate_slice(tags: &[Tag], window_ps: u64, bin_ps: u64) -> Correlation {
    let mut histogram = DelayHistogram::new(window_ps, bin_ps);
    let mut coincidences = 0;
    let mut pending: [VecDeque<u64>; 2] = [VecDeque::new(), VecDeque::new()];
    let stale = |t: u64, front: u64| 2 * (t - front) > window_ps;
    for tag in tags {
        let t = tag.time_ps;
        let own = tag.channel.index();
        let other = 1 - own;
        for q in pending.iter_mut() {
            while q.front().is_some_and(|&f| stale(t, f)) {
                q.pop_front();
            }
        }
        match pending[other].pop_back() {
            Some(partner) => {
                coincidences += 1;
                let delay = match tag.channel {
                    Channel::Idler => t as i64 - partner as i64,
                    Channel::Signal => partner as i64 - t as i64,
                };
                histogram.record(delay);
            }
            None => pending[own].push_back(t),
        }
    }
    Correlation { coincidences, histogram }
}

/// Accidental coincidence rate `R_s·R_i·τ_c` in counts per second.
pub fn accidentals(rate_signal_cps: f64, rate_idler_cps: f64, tau_c_ns: f64) -> f64 {
    rate_signal_cps * rate_idler_cps * tau_c_ns * 1e-9
}

/// `max(measured − accidental, 0)`.
pub fn subtract_accidentals(measured: f64, accidental: f64) -> f64 {
    (measured - accidental).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(tags: &[(u64, Channel)]) -> TagStream {
        TagStream::new(tags.iter().map(|&(t, c)| Tag::new(t, c)).collect(), 1.0)
    }

    #[test]
    fn one_ns_apart_is_a_coincidence() {
        let s = stream(&[(10_000, Channel::Signal), (11_000, Channel::Idler)]);
        let c = correlate_window(&s, 3.0).unwrap();
        assert_eq!(c.coincidences, 1);
        assert_eq!(c.histogram.total(), 1);
    }

    #[test]
    fn two_ns_apart_is_outside_the_half_window() {
        let s = stream(&[(10_000, Channel::Signal), (12_000, Channel::Idler)]);
        assert_eq!(correlate_window(&s, 3.0).unwrap().coincidences, 0);
    }

    #[test]
    fn window_edge_is_inclusive() {
        let s = stream(&[(0, Channel::Idler), (1_500, Channel::Signal)]);
        let c = correlate_window(&s, 3.0).unwrap();
        assert_eq!(c.coincidences, 1);
        let (edge, n) = c.histogram.rows().find(|(_, n)| *n > 0).unwrap();
        assert_eq!((edge, n), (-1_500, 1));
    }

    #[test]
    fn each_tag_used_once_and_nearest_wins() {
        let s = stream(&[(0, Channel::Signal), (500, Channel::Signal), (900, Channel::Idler), (1_000, Channel::Idler)]);
        let c = correlate_window(&s, 3.0).unwrap();
        assert_eq!(c.coincidences, 2);
        // 900 pairs with 500, 1000 with 0.
        let delays: Vec<i64> =
            c.histogram.rows().flat_map(|(e, n)| std::iter::repeat_n(e, n as usize)).collect();
        assert_eq!(delays, vec![400, 1_000]);
    }

    #[test]
    fn unsorted_rejected() {
        let s = stream(&[(10, Channel::Signal), (5, Channel::Idler)]);
        assert_eq!(correlate_window(&s, 3.0), Err(DetectionError::UnsortedStream(1)));
        assert!(correlate_window(&stream(&[]), 0.0).is_err());
    }

    #[test]
    fn chunking_does_not_change_result() {
        let mut tags = Vec::new();
        let mut t = 0;
        for i in 0..5_000u64 {
            t += (i * 7_919) % 3_000;
            tags.push(Tag::new(t, if i % 3 == 0 { Channel::Idler } else { Channel::Signal }));
        }
        let s = TagStream::new(tags, 1.0);
        let whole = correlate_window(&s, 3.0).unwrap();
        for chunks in [1, 2, 7, 64] {
            assert_eq!(correlate_window_chunked(&s, 3.0, chunks).unwrap(), whole);
        }
    }

    #[test]
    fn accidental_rates() {
        assert!((accidentals(86e3, 86e3, 3.0) - 22.188).abs() < 1e-9);
        assert_eq!(accidentals(5e4, 0.0, 3.0), 0.0);
        assert!((accidentals(1e6, 1e6, 3.0) - 3000.0).abs() < 1e-9);
        assert_eq!(subtract_accidentals(10.0, 22.0), 0.0);
        assert_eq!(subtract_accidentals(30.0, 22.0), 8.0);
    }
}
