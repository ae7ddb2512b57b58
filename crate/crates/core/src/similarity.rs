//! Barcode correlation and clip-to-clip similarity.

use core::fmt;
use core::str::FromStr;

use alloc::vec;
use alloc::vec::Vec;

use crate::barcode::MotionBarcode;
use crate::error::{invalid, Error, Result};
use crate::matching::{max_weight_matching, WeightMatrix};
use crate::pooling::ClipSignature;

/// Default correlation threshold for the heuristic score.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Method {
    /// Fraction of barcodes on each side with an above-threshold partner.
    #[default]
    Heuristic,
    /// Optimal one-to-one assignment on correlation weights.
    Assignment,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Heuristic => "heuristic",
            Method::Assignment => "assignment",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(Method::Heuristic),
            "assignment" => Ok(Method::Assignment),
            other => Err(invalid(alloc::format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityScore {
    pub value: f64,
    /// Barcodes of the first clip counted as matched.
    pub matched_a: usize,
    /// Barcodes of the second clip counted as matched.
    pub matched_b: usize,
    pub size_a: usize,
    pub size_b: usize,
    pub method: Method,
}

/// Pearson correlation of two binary barcodes.
///
/// With `n11` the frames where both move and `na`, `nb` the ones counts,
/// `r = (N n11 - na nb) / sqrt(na (N - na) nb (N - nb))`. If either barcode is
/// constant the result is 1 when the two are identical and 0 otherwise.
pub fn correlation(a: &MotionBarcode, b: &MotionBarcode) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(Prepared::new(a).correlation(&Prepared::new(b)))
}

/// A barcode with its ones count and `sqrt(ones * (N - ones))` cached.
struct Prepared<'a> {
    barcode: &'a MotionBarcode,
    ones: i64,
    spread: f64,
    root: f64,
}

impl<'a> Prepared<'a> {
    fn new(barcode: &'a MotionBarcode) -> Self {
        let n = barcode.len() as i64;
        let ones = barcode.ones_count() as i64;
        let spread = (ones * (n - ones)) as f64;
        Self {
            barcode,
            ones,
            spread,
            root: libm::sqrt(spread),
        }
    }

    #[inline(always)]
    fn covariance(&self, other: &Prepared<'_>) -> i64 {
        let n = self.barcode.len() as i64;
        n * self.barcode.and_count(other.barcode) as i64 - self.ones * other.ones
    }

    #[inline(always)]
    fn correlation(&self, other: &Prepared<'_>) -> f64 {
        if self.spread == 0.0 || other.spread == 0.0 {
            return if self.barcode.words() == other.barcode.words() {
                1.0
            } else {
                0.0
            };
        }
        self.covariance(other) as f64 / libm::sqrt(self.spread * other.spread)
    }

    /// `self.correlation(other) > threshold`, skipping the division unless
    /// the pair sits right at the threshold.
    #[inline(always)]
    fn exceeds(&self, other: &Prepared<'_>, threshold: f64) -> bool {
        if self.spread == 0.0 || other.spread == 0.0 {
            return self.correlation(other) > threshold;
        }
        let cov = self.covariance(other) as f64;
        let bound = threshold * self.root * other.root;
        let margin = 1e-9 * (1.0 + libm::fabs(bound));
        if cov > bound + margin {
            true
        } else if cov < bound - margin {
            false
        } else {
            self.correlation(other) > threshold
        }
    }
}

/// Whether the CPU has a population-count instruction the compiler was not
/// already allowed to assume.
#[cfg(target_arch = "x86_64")]
fn runtime_popcnt() -> bool {
    if cfg!(target_feature = "popcnt") {
        return false;
    }
    #[allow(unused_unsafe)]
    let info = unsafe { core::arch::x86_64::__cpuid(1) };
    info.ecx & (1 << 23) != 0
}

/// Runs one of the pairwise kernels below, compiled with hardware popcount
/// when the CPU supports it.
macro_rules! dispatch {
    ($fast:ident, $portable:ident ( $($arg:expr),* )) => {{
        #[cfg(target_arch = "x86_64")]
        {
            if runtime_popcnt() {
                // SAFETY: the CPU reports the popcnt feature.
                unsafe { $fast($($arg),*) }
            } else {
                $portable($($arg),*)
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            $portable($($arg),*)
        }
    }};
}

/// For every barcode on each side, whether it has a partner on the other
/// side correlating strictly above `threshold`. Pairs whose two members are
/// both already matched are skipped.
#[inline(always)]
fn matched_flags(
    pa: &[Prepared<'_>],
    pb: &[Prepared<'_>],
    threshold: f64,
) -> (Vec<bool>, Vec<bool>) {
    let mut ma = vec![false; pa.len()];
    let mut mb = vec![false; pb.len()];
    for (i, a) in pa.iter().enumerate() {
        for (j, b) in pb.iter().enumerate() {
            if !(ma[i] && mb[j]) && a.exceeds(b, threshold) {
                ma[i] = true;
                mb[j] = true;
            }
        }
    }
    (ma, mb)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn matched_flags_popcnt(
    pa: &[Prepared<'_>],
    pb: &[Prepared<'_>],
    threshold: f64,
) -> (Vec<bool>, Vec<bool>) {
    matched_flags(pa, pb, threshold)
}

#[inline(always)]
fn correlations(pa: &[Prepared<'_>], pb: &[Prepared<'_>]) -> WeightMatrix {
    let mut data = Vec::with_capacity(pa.len() * pb.len());
    for a in pa {
        for b in pb {
            data.push(a.correlation(b));
        }
    }
    WeightMatrix::new(pa.len(), pb.len(), data)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn correlations_popcnt(pa: &[Prepared<'_>], pb: &[Prepared<'_>]) -> WeightMatrix {
    correlations(pa, pb)
}

fn check_pair(a: &ClipSignature, b: &ClipSignature) -> Result<()> {
    for sig in [a, b] {
        if sig.barcodes.is_empty() {
            return Err(Error::EmptySignature(sig.clip_id.clone()));
        }
    }
    if a.frame_count != b.frame_count {
        return Err(Error::FrameCountMismatch {
            clip: b.clip_id.clone(),
            expected: a.frame_count,
            actual: b.frame_count,
        });
    }
    for sig in [a, b] {
        if let Some(bad) = sig.barcodes.iter().find(|c| c.len() != sig.frame_count) {
            return Err(Error::LengthMismatch(sig.frame_count, bad.len()));
        }
    }
    Ok(())
}

fn prepare(sig: &ClipSignature) -> Vec<Prepared<'_>> {
    sig.barcodes.iter().map(Prepared::new).collect()
}

/// `C1/K1 + C2/K2`, where `Ci` counts the barcodes of clip `i` having at least
/// one partner in the other clip with correlation above `threshold`.
pub fn heuristic_similarity(
    a: &ClipSignature,
    b: &ClipSignature,
    threshold: f64,
) -> Result<SimilarityScore> {
    check_pair(a, b)?;
    let (pa, pb) = (prepare(a), prepare(b));
    let (ma, mb) = dispatch!(matched_flags_popcnt, matched_flags(&pa, &pb, threshold));
    let matched_a = ma.iter().filter(|&&m| m).count();
    let matched_b = mb.iter().filter(|&&m| m).count();
    Ok(SimilarityScore {
        value: matched_a as f64 / pa.len() as f64 + matched_b as f64 / pb.len() as f64,
        matched_a,
        matched_b,
        size_a: pa.len(),
        size_b: pb.len(),
        method: Method::Heuristic,
    })
}

/// Correlations between every barcode of `a` (rows) and of `b` (columns).
pub fn correlation_matrix(a: &ClipSignature, b: &ClipSignature) -> Result<WeightMatrix> {
    check_pair(a, b)?;
    let (pa, pb) = (prepare(a), prepare(b));
    Ok(dispatch!(correlations_popcnt, correlations(&pa, &pb)))
}

/// Optimal assignment on correlation weights, normalised by `min(K1, K2)`.
/// Negatively correlated pairs are never matched.
pub fn assignment_similarity(a: &ClipSignature, b: &ClipSignature) -> Result<SimilarityScore> {
    let weights = correlation_matrix(a, b)?;
    let matching = max_weight_matching(&weights);
    let (ka, kb) = (a.barcodes.len(), b.barcodes.len());
    Ok(SimilarityScore {
        value: matching.total / ka.min(kb) as f64,
        matched_a: matching.pairs.len(),
        matched_b: matching.pairs.len(),
        size_a: ka,
        size_b: kb,
        method: Method::Assignment,
    })
}

pub fn similarity(
    a: &ClipSignature,
    b: &ClipSignature,
    method: Method,
    threshold: f64,
) -> Result<SimilarityScore> {
    match method {
        Method::Heuristic => heuristic_similarity(a, b, threshold),
        Method::Assignment => assignment_similarity(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barcode::SourceId;

    fn bc(s: &str, label: u32) -> MotionBarcode {
        MotionBarcode::from_bitstring(s, SourceId::Region(label)).unwrap()
    }

    fn sig(id: &str, codes: &[&str]) -> ClipSignature {
        ClipSignature {
            clip_id: id.into(),
            frame_count: codes[0].len(),
            barcodes: codes
                .iter()
                .enumerate()
                .map(|(i, c)| bc(c, i as u32))
                .collect(),
            region_count: codes.len() as u32,
            low_motion: false,
        }
    }

    fn direct_pearson(a: &MotionBarcode, b: &MotionBarcode) -> f64 {
        let n = a.len() as f64;
        let xa: Vec<f64> = a.iter().map(|v| v as u8 as f64).collect();
        let xb: Vec<f64> = b.iter().map(|v| v as u8 as f64).collect();
        let ma = xa.iter().sum::<f64>() / n;
        let mb = xb.iter().sum::<f64>() / n;
        let cov: f64 = xa.iter().zip(&xb).map(|(p, q)| (p - ma) * (q - mb)).sum();
        let va: f64 = xa.iter().map(|p| (p - ma) * (p - ma)).sum();
        let vb: f64 = xb.iter().map(|q| (q - mb) * (q - mb)).sum();
        cov / libm::sqrt(va * vb)
    }

    #[test]
    fn self_correlation_is_one() {
        let a = bc("0110100", 0);
        assert_eq!(correlation(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn complement_is_minus_one() {
        assert_eq!(correlation(&bc("1100", 0), &bc("0011", 1)).unwrap(), -1.0);
    }

    #[test]
    fn orthogonal_pair_is_zero() {
        let (a, b) = (bc("1100", 0), bc("1010", 1));
        assert_eq!(correlation(&a, &b).unwrap(), 0.0);
        assert_eq!(direct_pearson(&a, &b), 0.0);
    }

    #[test]
    fn constant_barcodes() {
        assert_eq!(correlation(&bc("1111", 0), &bc("1111", 1)).unwrap(), 1.0);
        assert_eq!(correlation(&bc("1111", 0), &bc("1100", 1)).unwrap(), 0.0);
        assert_eq!(correlation(&bc("0000", 0), &bc("1111", 1)).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            correlation(&bc("101", 0), &bc("1010", 1)),
            Err(Error::LengthMismatch(3, 4))
        );
    }

    #[test]
    fn heuristic_identical_signatures() {
        let s = sig("a", &["110000", "001100", "000011"]);
        let score = heuristic_similarity(&s, &s, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(score.value, 2.0);
        assert_eq!((score.matched_a, score.matched_b), (3, 3));
    }

    #[test]
    fn heuristic_no_matches() {
        let a = sig("a", &["1100", "0011"]);
        let b = sig("b", &["1010", "0101"]);
        let score = heuristic_similarity(&a, &b, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(score.value, 0.0);
    }

    #[test]
    fn heuristic_partial_fractions() {
        // Correlations: A0 matches B0 and B1 (r = 1 and r ~ 0.75); A1 is
        // anti-correlated or uncorrelated with everything in B.
        let a = sig("a", &["11000000", "00001111"]);
        let b = sig("b", &["11000000", "11100000", "00110000", "10000001"]);
        for (i, x) in a.barcodes.iter().enumerate() {
            for (j, y) in b.barcodes.iter().enumerate() {
                let r = correlation(x, y).unwrap();
                assert!((r - direct_pearson(x, y)).abs() < 1e-12);
                let expect_match = i == 0 && j < 2;
                assert_eq!(r > DEFAULT_THRESHOLD, expect_match, "A{i} B{j} r={r}");
            }
        }
        let score = heuristic_similarity(&a, &b, DEFAULT_THRESHOLD).unwrap();
        assert_eq!((score.matched_a, score.size_a), (1, 2));
        assert_eq!((score.matched_b, score.size_b), (2, 4));
        assert_eq!(score.value, 1.0);
    }

    #[test]
    fn empty_and_mismatched_signatures() {
        let a = sig("a", &["1100"]);
        let mut empty = sig("e", &["1100"]);
        empty.barcodes.clear();
        assert_eq!(
            heuristic_similarity(&a, &empty, 0.4),
            Err(Error::EmptySignature("e".into()))
        );
        assert!(assignment_similarity(&empty, &a).is_err());
        let long = sig("l", &["110000"]);
        assert!(matches!(
            heuristic_similarity(&a, &long, 0.4),
            Err(Error::FrameCountMismatch { .. })
        ));
    }

    #[test]
    fn assignment_identity() {
        let s = sig("a", &["110000", "001100", "000011"]);
        let score = assignment_similarity(&s, &s).unwrap();
        assert!((score.value - 1.0).abs() < 1e-12);
        assert_eq!(score.matched_a, 3);
    }

    #[test]
    fn assignment_rejects_negative_pair() {
        let a = sig("a", &["1100"]);
        let b = sig("b", &["0011"]);
        let score = assignment_similarity(&a, &b).unwrap();
        assert_eq!(score.value, 0.0);
        assert_eq!(score.matched_a, 0);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("assignment".parse::<Method>().unwrap(), Method::Assignment);
        assert!("hungarian".parse::<Method>().is_err());
        assert_eq!(alloc::format!("{}", Method::Heuristic), "heuristic");
    }
}
