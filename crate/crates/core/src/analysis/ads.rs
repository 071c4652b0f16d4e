//! Ad periodicity in shorts chains.

use std::collections::BTreeSet;

/// Minimum Jaccard overlap between observed ad positions and a periodic
/// progression for the period to be reported.
pub const MIN_MATCH: f64 = 0.8;

/// Period of the ads in one chain, if they follow one.
///
/// `flags[i]` says whether step `i + 1` of the chain was an ad. Every period
/// `p` in `[2, len/2]` and offset `o` in `1..=p` is scored by the Jaccard
/// overlap between the ad positions and `{o, o+p, o+2p, ...}`. The best
/// score wins, ties going to the smaller period; it must reach
/// [`MIN_MATCH`].
pub fn detect_ad_period(flags: &[bool]) -> Option<usize> {
    detect_ad_period_scored(flags).map(|(p, _)| p)
}

/// [`detect_ad_period`] together with the winning match fraction.
pub fn detect_ad_period_scored(flags: &[bool]) -> Option<(usize, f64)> {
    let len = flags.len();
    let ads: BTreeSet<usize> = flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i + 1)
        .collect();
    if ads.is_empty() {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for p in 2..=len / 2 {
        for o in 1..=p {
            let progression: BTreeSet<usize> = (o..=len).step_by(p).collect();
            let inter = ads.intersection(&progression).count();
            let union = ads.len() + progression.len() - inter;
            let score = inter as f64 / union as f64;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((p, score));
            }
        }
    }
    best.filter(|&(_, s)| s >= MIN_MATCH)
}
