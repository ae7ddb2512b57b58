//! Signature index, query ranking and mean-AP evaluation.
//!
//! Each query clip is scored against every other clip in the index; the
//! ranking is by descending score, ties broken by ascending clip id.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::pooling::{extract_signature, ClipSignature, SignatureParams};
use crate::sequence::MotionMaskSequence;
use crate::similarity::{similarity, Method, DEFAULT_THRESHOLD};

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalSettings {
    pub method: Method,
    pub threshold: f64,
    /// Used when a sweep truncates barcodes and has to re-filter them.
    pub min_motion_fraction: f64,
    pub min_barcodes: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        Self {
            method: Method::Heuristic,
            threshold: DEFAULT_THRESHOLD,
            min_motion_fraction: 0.1,
            min_barcodes: 100,
        }
    }
}

/// Immutable collection of clip signatures sharing one frame count.
#[derive(Clone, Debug, Default)]
pub struct SignatureIndex {
    entries: Vec<ClipSignature>,
    lookup: BTreeMap<String, usize>,
}

impl SignatureIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ClipSignature] {
        &self.entries
    }

    pub fn get(&self, clip_id: &str) -> Option<&ClipSignature> {
        self.lookup.get(clip_id).map(|&i| &self.entries[i])
    }

    pub fn frame_count(&self) -> Option<usize> {
        self.entries.first().map(|e| e.frame_count)
    }

    /// Index of the same clips with every barcode cut to its first `len`
    /// frames.
    pub fn truncated(&self, len: usize, min_motion_fraction: f64, min_barcodes: usize) -> Self {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|e| e.truncated(len, min_motion_fraction, min_barcodes))
            .collect();
        Self {
            entries,
            lookup: self.lookup.clone(),
        }
    }
}

/// Indexes every signature, including ones flagged low-motion.
pub fn build_index(signatures: Vec<ClipSignature>) -> Result<SignatureIndex> {
    let mut lookup = BTreeMap::new();
    let expected = signatures.first().map(|s| s.frame_count);
    for (i, sig) in signatures.iter().enumerate() {
        if let Some(expected) = expected {
            if sig.frame_count != expected {
                return Err(Error::FrameCountMismatch {
                    clip: sig.clip_id.clone(),
                    expected,
                    actual: sig.frame_count,
                });
            }
        }
        if lookup.insert(sig.clip_id.clone(), i).is_some() {
            return Err(Error::DuplicateClip(sig.clip_id.clone()));
        }
    }
    Ok(SignatureIndex {
        entries: signatures,
        lookup,
    })
}

/// Similarity used for ranking. A clip without barcodes scores 0 against
/// everything.
pub fn score_pair(
    a: &ClipSignature,
    b: &ClipSignature,
    method: Method,
    threshold: f64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    Ok(similarity(a, b, method, threshold)?.value)
}

/// Scores `q` against every index entry with a different clip id.
pub fn query(
    index: &SignatureIndex,
    q: &ClipSignature,
    method: Method,
    threshold: f64,
) -> Result<Vec<(String, f64)>> {
    if let Some(expected) = index.frame_count() {
        if q.frame_count != expected {
            return Err(Error::FrameCountMismatch {
                clip: q.clip_id.clone(),
                expected,
                actual: q.frame_count,
            });
        }
    }
    let mut ranking = Vec::with_capacity(index.len());
    for entry in index.entries() {
        if entry.clip_id == q.clip_id {
            continue;
        }
        ranking.push((
            entry.clip_id.clone(),
            score_pair(q, entry, method, threshold)?,
        ));
    }
    sort_ranking(&mut ranking);
    Ok(ranking)
}

/// Descending score, then ascending clip id.
pub fn sort_ranking(ranking: &mut [(String, f64)]) {
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

/// Mean of precision@k over the ranks k of the relevant items; relevant items
/// missing from the ranking contribute zero.
pub fn average_precision<'a, I>(ranking: I, relevant: &BTreeSet<String>) -> Result<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    if relevant.is_empty() {
        return Err(Error::EmptyRelevant(String::new()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, id) in ranking.into_iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedResult {
    pub query_id: String,
    pub ranking: Vec<(String, f64)>,
    pub relevant_ids: BTreeSet<String>,
    pub average_precision: f64,
}

impl RankedResult {
    pub fn new(
        query_id: String,
        ranking: Vec<(String, f64)>,
        relevant_ids: BTreeSet<String>,
    ) -> Result<Self> {
        let average_precision =
            average_precision(ranking.iter().map(|(id, _)| id.as_str()), &relevant_ids)
                .map_err(|_| Error::EmptyRelevant(query_id.clone()))?;
        Ok(Self {
            query_id,
            ranking,
            relevant_ids,
            average_precision,
        })
    }
}

pub fn mean_ap(results: &[RankedResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    Ok(results.iter().map(|r| r.average_precision).sum::<f64>() / results.len() as f64)
}

/// Ground truth: for each query clip, the clips showing the same event.
/// Queries keep their insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Relevance {
    entries: Vec<(String, BTreeSet<String>)>,
}

impl Relevance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push<I, S>(&mut self, query: impl Into<String>, relevant: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.entries
            .push((query.into(), relevant.into_iter().map(Into::into).collect()));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(q, r)| (q.as_str(), r))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub results: Vec<RankedResult>,
    pub mean_ap: f64,
}

/// Ranks the index for every query of `relevance` and averages the APs.
pub fn evaluate(
    index: &SignatureIndex,
    relevance: &Relevance,
    settings: &RetrievalSettings,
) -> Result<Evaluation> {
    let mut results = Vec::with_capacity(relevance.len());
    for (query_id, relevant) in relevance.iter() {
        let q = index
            .get(query_id)
            .ok_or_else(|| Error::UnknownClip(query_id.into()))?;
        let ranking = query(index, q, settings.method, settings.threshold)?;
        results.push(RankedResult::new(
            query_id.into(),
            ranking,
            relevant.clone(),
        )?);
    }
    let mean_ap = mean_ap(&results)?;
    Ok(Evaluation { results, mean_ap })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Threshold,
    /// Barcode prefix length in frames.
    TemporalLength,
    /// SLIC target region count; needs the mask sequences.
    RegionCount,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::Threshold => "threshold",
            SweepParameter::TemporalLength => "temporal_length",
            SweepParameter::RegionCount => "region_count",
        })
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "threshold" => Ok(SweepParameter::Threshold),
            "temporal_length" => Ok(SweepParameter::TemporalLength),
            "region_count" => Ok(SweepParameter::RegionCount),
            other => Err(invalid(alloc::format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mean_ap: f64,
}

fn as_count(value: f64, what: &str) -> Result<usize> {
    if libm::trunc(value) != value || value < 1.0 {
        return Err(invalid(alloc::format!(
            "{what} must be a positive integer, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Mean AP for each value of a threshold or temporal-length sweep over a
/// prebuilt index. Region-count sweeps need [`sweep_region_count`].
pub fn sweep(
    index: &SignatureIndex,
    relevance: &Relevance,
    parameter: SweepParameter,
    values: &[f64],
    settings: &RetrievalSettings,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one value"));
    }
    let n = index.frame_count().unwrap_or(0);
    // Validate the whole domain before spending time on evaluation.
    for &v in values {
        match parameter {
            SweepParameter::Threshold if !(-1.0..=1.0).contains(&v) => {
                return Err(invalid(alloc::format!("threshold {v} outside [-1, 1]")))
            }
            SweepParameter::TemporalLength if as_count(v, "temporal_length")? > n => {
                return Err(invalid(alloc::format!(
                    "temporal_length {v} exceeds clip length {n}"
                )))
            }
            SweepParameter::RegionCount => {
                return Err(invalid("region_count sweeps need mask sequences"))
            }
            _ => {}
        }
    }
    values
        .iter()
        .map(|&v| {
            let mean_ap = match parameter {
                SweepParameter::Threshold => {
                    let s = RetrievalSettings {
                        threshold: v,
                        ..settings.clone()
                    };
                    evaluate(index, relevance, &s)?.mean_ap
                }
                _ => {
                    let cut = index.truncated(
                        v as usize,
                        settings.min_motion_fraction,
                        settings.min_barcodes,
                    );
                    evaluate(&cut, relevance, settings)?.mean_ap
                }
            };
            Ok(SweepRow { value: v, mean_ap })
        })
        .collect()
}

/// Mean AP as a function of the SLIC region count: signatures are rebuilt
/// from the masks for every value.
pub fn sweep_region_count(
    masks: &[MotionMaskSequence],
    relevance: &Relevance,
    values: &[f64],
    params: &SignatureParams,
    settings: &RetrievalSettings,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one value"));
    }
    for &v in values {
        as_count(v, "region_count")?;
    }
    values
        .iter()
        .map(|&v| {
            let mut p = params.clone();
            p.slic.target_regions = v as usize;
            let signatures = masks
                .iter()
                .map(|m| extract_signature(m, &p).map(|(s, _)| s))
                .collect::<Result<Vec<_>>>()?;
            let index = build_index(signatures)?;
            Ok(SweepRow {
                value: v,
                mean_ap: evaluate(&index, relevance, settings)?.mean_ap,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barcode::{MotionBarcode, SourceId};
    use alloc::vec;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| String::from(*s)).collect()
    }

    fn sig(id: &str, codes: &[&str]) -> ClipSignature {
        ClipSignature {
            clip_id: id.into(),
            frame_count: codes.first().map_or(8, |c| c.len()),
            barcodes: codes
                .iter()
                .enumerate()
                .map(|(i, c)| MotionBarcode::from_bitstring(c, SourceId::Region(i as u32)).unwrap())
                .collect(),
            region_count: codes.len() as u32,
            low_motion: true,
        }
    }

    #[test]
    fn ap_first_rank() {
        let ap = average_precision(["r", "x", "y"], &set(&["r"])).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_second_rank() {
        let ap = average_precision(["x", "r", "y"], &set(&["r"])).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn ap_two_relevant() {
        let ap = average_precision(["r1", "x", "r2"], &set(&["r1", "r2"])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ap_missing_relevant_counts_zero() {
        let ap = average_precision(["r1", "x"], &set(&["r1", "gone"])).unwrap();
        assert_eq!(ap, 0.5);
        assert!(average_precision(["x"], &BTreeSet::new()).is_err());
    }

    fn result_with_ap(ap: f64) -> RankedResult {
        RankedResult {
            query_id: "q".into(),
            ranking: Vec::new(),
            relevant_ids: set(&["r"]),
            average_precision: ap,
        }
    }

    #[test]
    fn mean_ap_values() {
        assert_eq!(mean_ap(&[result_with_ap(0.7)]).unwrap(), 0.7);
        assert_eq!(
            mean_ap(&[result_with_ap(1.0), result_with_ap(0.0)]).unwrap(),
            0.5
        );
        let m = mean_ap(&[
            result_with_ap(5.0 / 6.0),
            result_with_ap(0.5),
            result_with_ap(1.0),
        ])
        .unwrap();
        assert!((m - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(mean_ap(&[]), Err(Error::NoResults));
    }

    #[test]
    fn index_rules() {
        let a = sig("a", &["11000000"]);
        let b = sig("b", &["00110000"]);
        let c = sig("c", &["00001100"]);
        assert_eq!(build_index(vec![a.clone(), b.clone(), c]).unwrap().len(), 3);
        assert_eq!(
            build_index(vec![a.clone(), a.clone()]).unwrap_err(),
            Error::DuplicateClip("a".into())
        );
        let long = sig("l", &["1100000000"]);
        assert!(matches!(
            build_index(vec![a, long]),
            Err(Error::FrameCountMismatch { .. })
        ));
    }

    #[test]
    fn query_identical_entry_ranks_first() {
        let q = sig("q", &["11000000", "00111000"]);
        let mut twin = q.clone();
        twin.clip_id = "twin".into();
        let index = build_index(vec![twin]).unwrap();
        let ranking = query(&index, &q, Method::Heuristic, 0.4).unwrap();
        assert_eq!(ranking, vec![("twin".into(), 2.0)]);
    }

    #[test]
    fn query_empty_index_and_self_exclusion() {
        let q = sig("q", &["11000000"]);
        assert!(
            query(&SignatureIndex::default(), &q, Method::Heuristic, 0.4)
                .unwrap()
                .is_empty()
        );
        let index = build_index(vec![q.clone(), sig("o", &["11000000"])]).unwrap();
        let ranking = query(&index, &q, Method::Heuristic, 0.4).unwrap();
        assert_eq!(ranking.len(), 1);
        assert_eq!(ranking[0].0, "o");
    }

    #[test]
    fn ties_break_by_clip_id() {
        let q = sig("q", &["11000000"]);
        let index = build_index(vec![
            q.clone(),
            sig("zeta", &["00000011"]),
            sig("alpha", &["00000011"]),
            sig("empty", &[]),
        ])
        .unwrap();
        let ranking = query(&index, &q, Method::Heuristic, 0.4).unwrap();
        let ids: Vec<_> = ranking.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(ids, ["alpha", "empty", "zeta"]);
    }

    #[test]
    fn evaluate_and_sweeps() {
        let index = build_index(vec![
            sig("a1", &["11000000", "00001111"]),
            sig("a2", &["11000000", "00001110"]),
            sig("b1", &["00110000", "10000001"]),
        ])
        .unwrap();
        let mut rel = Relevance::new();
        rel.push("a1", ["a2"]);
        rel.push("a2", ["a1"]);
        let settings = RetrievalSettings {
            min_barcodes: 0,
            ..Default::default()
        };
        let eval = evaluate(&index, &rel, &settings).unwrap();
        assert_eq!(eval.mean_ap, 1.0);
        assert_eq!(eval.results.len(), 2);

        let rows = sweep(
            &index,
            &rel,
            SweepParameter::Threshold,
            &[0.2, 0.4, 0.6],
            &settings,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert!(sweep(&index, &rel, SweepParameter::Threshold, &[1.5], &settings).is_err());
        assert!(sweep(
            &index,
            &rel,
            SweepParameter::TemporalLength,
            &[9.0],
            &settings
        )
        .is_err());
        assert!(sweep(
            &index,
            &rel,
            SweepParameter::TemporalLength,
            &[2.5],
            &settings
        )
        .is_err());
        assert!(sweep(&index, &rel, SweepParameter::RegionCount, &[4.0], &settings).is_err());
        assert!(sweep(&index, &rel, SweepParameter::Threshold, &[], &settings).is_err());
        let rows = sweep(
            &index,
            &rel,
            SweepParameter::TemporalLength,
            &[4.0, 8.0],
            &settings,
        )
        .unwrap();
        assert_eq!(rows[1].mean_ap, 1.0);

        let mut missing = Relevance::new();
        missing.push("nope", ["a1"]);
        assert_eq!(
            evaluate(&index, &missing, &settings).unwrap_err(),
            Error::UnknownClip("nope".into())
        );
    }

    #[test]
    fn sweep_parameter_names() {
        for p in [
            SweepParameter::Threshold,
            SweepParameter::TemporalLength,
            SweepParameter::RegionCount,
        ] {
            assert_eq!(alloc::format!("{p}").parse::<SweepParameter>().unwrap(), p);
        }
    }
}
