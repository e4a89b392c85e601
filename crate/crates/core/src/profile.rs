//! Layer-wise curves over a run and the phenomena read off them.
//!
//! Profiles are plain aggregations of estimator calls, one per layer (or per
//! adjacent layer pair); nothing is smoothed.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::error::EstimateError;
use crate::id::estimate_id_2nn;
use crate::imbalance::{information_imbalance, relative_ii_difference, ImbalanceResult};
use crate::ingest::{LayerSource, ManifestError, BOTTLENECK_LAYER, INPUT_LAYER, LAYER_COUNT, OUTPUT_LAYER};

/// Default relative margin a peak must clear over its flanking layers.
pub const DEFAULT_PEAK_MARGIN: f64 = 0.15;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("layer {layer}, epoch {epoch}: {source}")]
    Estimate { layer: usize, epoch: u32, source: EstimateError },
    #[error("epoch {0} is not part of the run")]
    UnknownEpoch(u32),
    #[error("the runs hold different samples")]
    SampleMismatch,
    #[error("a transition sweep needs at least 3 bottleneck sizes, got {0}")]
    InsufficientSweep(usize),
    #[error("bottleneck size {0} appears twice in the sweep")]
    DuplicateBottleneck(usize),
    #[error("profile needs {LAYER_COUNT} layers, run has {0}")]
    LayerCount(usize),
}

impl ProfileError {
    fn at(layer: usize, epoch: u32) -> impl FnOnce(EstimateError) -> ProfileError {
        move |source| ProfileError::Estimate { layer, epoch, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Id,
    IiToInput,
    AdjacentRelDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerProfile {
    pub kind: ProfileKind,
    /// One value per layer; per adjacent pair `(l, l + 1)` for `AdjacentRelDiff`.
    pub values: Vec<f64>,
    pub bottleneck_size: usize,
    pub epoch: u32,
    pub n: usize,
}

impl LayerProfile {
    /// CSV with header `layer,value`; pair profiles are keyed by their first layer.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["layer", "value"])?;
        for (layer, v) in self.values.iter().enumerate() {
            out.write_record([layer.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// CSV with header `epoch,value`.
pub fn write_series_csv<W: Write>(series: &[(u32, f64)], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "value"])?;
    for (epoch, v) in series {
        out.write_record([epoch.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

fn check_epoch<S: LayerSource>(run: &S, epoch: u32) -> Result<(), ProfileError> {
    if run.epochs().contains(&epoch) {
        Ok(())
    } else {
        Err(ProfileError::UnknownEpoch(epoch))
    }
}

/// 2NN intrinsic dimension of every layer.
pub fn id_profile<S: LayerSource>(run: &S, epoch: u32, discard_fraction: f64) -> Result<LayerProfile, ProfileError> {
    check_epoch(run, epoch)?;
    let values = (0..run.layer_count())
        .map(|layer| {
            let cloud = run.cloud(layer, epoch)?;
            Ok(estimate_id_2nn(&cloud, discard_fraction).map_err(ProfileError::at(layer, epoch))?.id)
        })
        .collect::<Result<Vec<_>, ProfileError>>()?;
    Ok(LayerProfile {
        kind: ProfileKind::Id,
        values,
        bottleneck_size: run.bottleneck_size(),
        epoch,
        n: run.point_ids().len(),
    })
}

/// delta(layer -> input) for every layer; the input's own entry is `2 / N` on tie-free data.
pub fn ii_to_input_profile<S: LayerSource>(run: &S, epoch: u32) -> Result<LayerProfile, ProfileError> {
    check_epoch(run, epoch)?;
    let input = run.cloud(INPUT_LAYER, epoch)?;
    let values = (0..run.layer_count())
        .map(|layer| {
            let cloud = run.cloud(layer, epoch)?;
            Ok(information_imbalance(&cloud, &input).map_err(ProfileError::at(layer, epoch))?.delta_ab)
        })
        .collect::<Result<Vec<_>, ProfileError>>()?;
    Ok(LayerProfile {
        kind: ProfileKind::IiToInput,
        values,
        bottleneck_size: run.bottleneck_size(),
        epoch,
        n: run.point_ids().len(),
    })
}

/// Relative imbalance difference between each layer and the next.
/// Positive entries mean layer `l + 1` is the more informative one.
pub fn adjacent_ii_profile<S: LayerSource>(run: &S, epoch: u32) -> Result<LayerProfile, ProfileError> {
    check_epoch(run, epoch)?;
    let mut values = Vec::with_capacity(run.layer_count().saturating_sub(1));
    let mut current = run.cloud(0, epoch)?;
    for layer in 1..run.layer_count() {
        let next = run.cloud(layer, epoch)?;
        let r = information_imbalance(&current, &next).map_err(ProfileError::at(layer - 1, epoch))?;
        values.push(relative_ii_difference(r.delta_ab, r.delta_ba).map_err(ProfileError::at(layer - 1, epoch))?);
        current = next;
    }
    Ok(LayerProfile {
        kind: ProfileKind::AdjacentRelDiff,
        values,
        bottleneck_size: run.bottleneck_size(),
        epoch,
        n: run.point_ids().len(),
    })
}

/// delta(from -> to) at every epoch of the run.
pub fn imbalance_series<S: LayerSource>(run: &S, from: usize, to: usize) -> Result<Vec<(u32, f64)>, ProfileError> {
    run.epochs()
        .iter()
        .map(|&epoch| {
            let a = run.cloud(from, epoch)?;
            let b = run.cloud(to, epoch)?;
            Ok((epoch, information_imbalance(&a, &b).map_err(ProfileError::at(from, epoch))?.delta_ab))
        })
        .collect()
}

/// Imbalance between two architectures' representations of the same layer.
/// `delta_ab` is delta(run_a -> run_b).
pub fn cross_architecture_ii<A: LayerSource, B: LayerSource>(
    run_a: &A,
    run_b: &B,
    layer: usize,
    epoch: u32,
) -> Result<ImbalanceResult, ProfileError> {
    if run_a.point_ids() != run_b.point_ids() {
        return Err(ProfileError::SampleMismatch);
    }
    check_epoch(run_a, epoch)?;
    check_epoch(run_b, epoch)?;
    let a = run_a.cloud(layer, epoch)?;
    let b = run_b.cloud(layer, epoch)?;
    information_imbalance(&a, &b).map_err(ProfileError::at(layer, epoch))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub layer: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HunchbackReport {
    pub encoder_peak: Option<Peak>,
    pub decoder_peak: Option<Peak>,
    pub bottleneck_value: f64,
    pub is_double: bool,
    pub margin: f64,
}

fn peak_between(values: &[f64], inner: std::ops::RangeInclusive<usize>, left: f64, right: f64, margin: f64) -> Option<Peak> {
    let mut best: Option<Peak> = None;
    for layer in inner {
        let value = values[layer];
        if best.is_none_or(|b| value > b.value) {
            best = Some(Peak { layer, value });
        }
    }
    best.filter(|p| p.value >= (1.0 + margin) * left && p.value >= (1.0 + margin) * right)
}

/// Looks for an interior ID peak in the encoder (layers 1-4) and in the decoder
/// (layers 6-9). A peak counts when it exceeds both flanking layers (input and
/// bottleneck, or bottleneck and output) by a factor of at least `1 + margin`.
///
/// Profiles that do not span the full eleven layers report no peaks.
pub fn detect_double_hunchback(values: &[f64], margin: f64) -> HunchbackReport {
    if values.len() != LAYER_COUNT {
        return HunchbackReport {
            encoder_peak: None,
            decoder_peak: None,
            bottleneck_value: values.get(BOTTLENECK_LAYER).copied().unwrap_or(f64::NAN),
            is_double: false,
            margin,
        };
    }
    let bottleneck = values[BOTTLENECK_LAYER];
    let encoder_peak = peak_between(values, 1..=4, values[INPUT_LAYER], bottleneck, margin);
    let decoder_peak = peak_between(values, 6..=9, bottleneck, values[OUTPUT_LAYER], margin);
    HunchbackReport {
        encoder_peak,
        decoder_peak,
        bottleneck_value: bottleneck,
        is_double: encoder_peak.is_some() && decoder_peak.is_some(),
        margin,
    }
}

/// Everything the transition detector needs from one architecture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub bottleneck_size: usize,
    pub epoch: u32,
    pub input_id: f64,
    /// delta(bottleneck -> input)
    pub bottleneck_ii: f64,
    /// delta(output -> input)
    pub output_ii: f64,
    pub hunchback: HunchbackReport,
    pub id_profile: Vec<f64>,
}

pub fn summarize_run<S: LayerSource>(
    run: &S,
    epoch: u32,
    discard_fraction: f64,
    margin: f64,
) -> Result<SweepEntry, ProfileError> {
    if run.layer_count() != LAYER_COUNT {
        return Err(ProfileError::LayerCount(run.layer_count()));
    }
    let ids = id_profile(run, epoch, discard_fraction)?;
    let ii = ii_to_input_profile(run, epoch)?;
    SweepEntry::from_profiles(&ids, &ii, margin)
}

impl SweepEntry {
    /// Builds an entry from an ID profile and an imbalance-to-input profile of
    /// the same run and epoch.
    pub fn from_profiles(ids: &LayerProfile, ii: &LayerProfile, margin: f64) -> Result<Self, ProfileError> {
        for p in [ids, ii] {
            if p.values.len() != LAYER_COUNT {
                return Err(ProfileError::LayerCount(p.values.len()));
            }
        }
        if ids.kind != ProfileKind::Id
            || ii.kind != ProfileKind::IiToInput
            || (ids.bottleneck_size, ids.epoch, ids.n) != (ii.bottleneck_size, ii.epoch, ii.n)
        {
            return Err(ProfileError::SampleMismatch);
        }
        Ok(SweepEntry {
            bottleneck_size: ids.bottleneck_size,
            epoch: ids.epoch,
            input_id: ids.values[INPUT_LAYER],
            bottleneck_ii: ii.values[BOTTLENECK_LAYER],
            output_ii: ii.values[OUTPUT_LAYER],
            hunchback: detect_double_hunchback(&ids.values, margin),
            id_profile: ids.values.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionReport {
    /// Sorted by strictly increasing bottleneck size.
    pub entries: Vec<SweepEntry>,
    pub critical_bottleneck: Option<usize>,
    /// Mean input-layer ID over the sweep, to compare against the critical size.
    pub input_id: f64,
}

/// The critical size is the smallest bottleneck whose ID profile is a double
/// hunchback *and* whose delta(bottleneck -> input) rose relative to the
/// next-smaller bottleneck.
pub fn detect_transition(mut entries: Vec<SweepEntry>) -> Result<TransitionReport, ProfileError> {
    if entries.len() < 3 {
        return Err(ProfileError::InsufficientSweep(entries.len()));
    }
    entries.sort_by_key(|e| e.bottleneck_size);
    if let Some(w) = entries.windows(2).find(|w| w[0].bottleneck_size == w[1].bottleneck_size) {
        return Err(ProfileError::DuplicateBottleneck(w[0].bottleneck_size));
    }
    let critical_bottleneck = entries
        .windows(2)
        .find(|w| w[1].hunchback.is_double && w[1].bottleneck_ii > w[0].bottleneck_ii)
        .map(|w| w[1].bottleneck_size);
    let input_id = entries.iter().map(|e| e.input_id).sum::<f64>() / entries.len() as f64;
    Ok(TransitionReport { entries, critical_bottleneck, input_id })
}

/// Epoch separating two training phases in a per-epoch series.
///
/// A rise-then-fall series splits at its maximum and a fall-then-rise series at
/// its minimum, provided that extremum is not the first or last epoch. When
/// both extrema are interior, the one standing out further from the endpoints
/// wins (earlier epoch on a tie), so a series and its negation split at the
/// same epoch. Monotone and single-point series have no split.
///
/// `series` must be ordered by epoch.
pub fn training_phase_split(series: &[(u32, f64)]) -> Option<u32> {
    if series.len() < 3 {
        return None;
    }
    let last = series.len() - 1;
    let mut imax = 0;
    let mut imin = 0;
    for (i, &(_, v)) in series.iter().enumerate() {
        if v > series[imax].1 {
            imax = i;
        }
        if v < series[imin].1 {
            imin = i;
        }
    }
    let (first_v, last_v) = (series[0].1, series[last].1);
    let interior = |i: usize| i != 0 && i != last;
    let max_prominence = series[imax].1 - first_v.max(last_v);
    let min_prominence = first_v.min(last_v) - series[imin].1;
    let pick = match (interior(imax), interior(imin)) {
        (true, false) => imax,
        (false, true) => imin,
        (true, true) => {
            if max_prominence > min_prominence || (max_prominence == min_prominence && imax < imin) {
                imax
            } else {
                imin
            }
        }
        (false, false) => return None,
    };
    Some(series[pick].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> Vec<(u32, f64)> {
        values.iter().enumerate().map(|(i, &v)| (i as u32 * 2, v)).collect()
    }

    #[test]
    fn phase_split_cases() {
        assert_eq!(training_phase_split(&series(&[5.0, 4.0, 3.0, 1.0])), None);
        assert_eq!(training_phase_split(&series(&[1.0, 2.0, 3.0, 4.0])), None);
        assert_eq!(training_phase_split(&series(&[1.0])), None);
        assert_eq!(training_phase_split(&[]), None);
        let kl: Vec<(u32, f64)> = (0..=30)
            .map(|e| (e, if e <= 10 { e as f64 } else { 10.0 - 0.2 * (e - 10) as f64 }))
            .collect();
        assert_eq!(training_phase_split(&kl), Some(10));
        let ii: Vec<(u32, f64)> = kl.iter().map(|&(e, v)| (e, 1.0 - v / 20.0)).collect();
        assert_eq!(training_phase_split(&ii), Some(10));
    }

    #[test]
    fn phase_split_negation_duality() {
        let s = series(&[0.0, 3.0, 1.0, -3.0, 0.5]);
        let neg: Vec<(u32, f64)> = s.iter().map(|&(e, v)| (e, -v)).collect();
        assert_eq!(training_phase_split(&s), training_phase_split(&neg));
        let tie = series(&[0.0, 2.0, 0.0, -2.0, 0.0]);
        let neg: Vec<(u32, f64)> = tie.iter().map(|&(e, v)| (e, -v)).collect();
        assert_eq!(training_phase_split(&tie), Some(2));
        assert_eq!(training_phase_split(&neg), Some(2));
    }

    #[test]
    fn hunchback_cases() {
        let monotone = [30.0, 28.0, 26.0, 24.0, 22.0, 20.0, 18.0, 16.0, 14.0, 12.0, 10.0];
        let r = detect_double_hunchback(&monotone, DEFAULT_PEAK_MARGIN);
        assert!(r.encoder_peak.is_none() && r.decoder_peak.is_none() && !r.is_double);

        let double = [25.0, 60.0, 80.0, 70.0, 40.0, 30.0, 45.0, 55.0, 50.0, 35.0, 25.0];
        let r = detect_double_hunchback(&double, DEFAULT_PEAK_MARGIN);
        assert_eq!(r.encoder_peak, Some(Peak { layer: 2, value: 80.0 }));
        assert_eq!(r.decoder_peak, Some(Peak { layer: 7, value: 55.0 }));
        assert!(r.is_double);
        assert_eq!(r.bottleneck_value, 30.0);

        let single = [25.0, 60.0, 80.0, 70.0, 40.0, 4.0, 10.0, 14.0, 18.0, 22.0, 25.0];
        let r = detect_double_hunchback(&single, DEFAULT_PEAK_MARGIN);
        assert!(r.encoder_peak.is_some() && r.decoder_peak.is_none() && !r.is_double);

        // decoder bump that does not clear the margin
        let small = [25.0, 60.0, 80.0, 70.0, 40.0, 30.0, 33.0, 34.0, 33.0, 31.0, 30.0];
        assert!(!detect_double_hunchback(&small, DEFAULT_PEAK_MARGIN).is_double);
        assert!(detect_double_hunchback(&small, 0.1).is_double);

        assert!(!detect_double_hunchback(&[1.0, 2.0, 1.0], 0.0).is_double);
    }

    fn entry(k: usize, bottleneck_ii: f64, is_double: bool) -> SweepEntry {
        SweepEntry {
            bottleneck_size: k,
            epoch: 0,
            input_id: 10.0,
            bottleneck_ii,
            output_ii: 0.3,
            hunchback: HunchbackReport {
                encoder_peak: None,
                decoder_peak: None,
                bottleneck_value: k as f64,
                is_double,
                margin: DEFAULT_PEAK_MARGIN,
            },
            id_profile: vec![],
        }
    }

    #[test]
    fn transition_cases() {
        let sweep = vec![
            entry(16, 0.05, true),
            entry(2, 0.4, false),
            entry(4, 0.2, false),
            entry(8, 0.1, false),
            entry(32, 0.2, true),
            entry(64, 0.4, true),
        ];
        let r = detect_transition(sweep).unwrap();
        assert_eq!(r.critical_bottleneck, Some(32));
        assert_eq!(r.entries.iter().map(|e| e.bottleneck_size).collect::<Vec<_>>(), vec![2, 4, 8, 16, 32, 64]);
        assert_eq!(r.input_id, 10.0);

        let same = vec![entry(2, 0.3, true), entry(4, 0.3, true), entry(8, 0.3, true)];
        assert_eq!(detect_transition(same).unwrap().critical_bottleneck, None);

        assert!(matches!(
            detect_transition(vec![entry(2, 0.1, true), entry(4, 0.2, true)]),
            Err(ProfileError::InsufficientSweep(2))
        ));
        assert!(matches!(
            detect_transition(vec![entry(2, 0.1, true), entry(2, 0.2, true), entry(4, 0.3, true)]),
            Err(ProfileError::DuplicateBottleneck(2))
        ));
    }

    #[test]
    fn csv_layout() {
        let p = LayerProfile { kind: ProfileKind::Id, values: vec![1.5, 2.0], bottleneck_size: 4, epoch: 3, n: 10 };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "layer,value\n0,1.5\n1,2\n");
        let mut buf = Vec::new();
        write_series_csv(&[(0, 0.25), (10, 1.0)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,value\n0,0.25\n10,1\n");
    }
}
