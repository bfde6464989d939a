//! BPSK/QPSK observation synthesis and the 32-value feature extractor.
//!
//! A transmitter sends 16 random bits per sample. Each sensor sees the burst
//! through its own channel: distance-dependent path loss, a carrier phase
//! offset that is fixed for that sensor, and white Gaussian noise at a
//! constant floor (so SNR falls with distance). Features are per-symbol
//! phase shifts and power levels.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bits carried by one sample.
pub const SAMPLE_BITS: usize = 16;
/// Length of an extracted feature vector.
pub const FEATURE_LEN: usize = 32;

pub type Bits = [bool; SAMPLE_BITS];
pub type Features = [f64; FEATURE_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IqSymbol {
    pub i: f64,
    pub q: f64,
}

impl IqSymbol {
    pub const fn new(i: f64, q: f64) -> Self {
        Self { i, q }
    }

    /// Absolute angle in (-pi, pi].
    pub fn angle(self) -> f64 {
        wrap_phase(self.q.atan2(self.i))
    }

    pub fn power(self) -> f64 {
        self.i * self.i + self.q * self.q
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(self.i * c - self.q * s, self.i * s + self.q * c)
    }

    pub fn scale(self, gain: f64) -> Self {
        Self::new(self.i * gain, self.q * gain)
    }

    /// Projection onto the in-phase axis.
    pub fn in_phase(self) -> Self {
        Self::new(self.i, 0.0)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    /// The non-target class (label 0).
    Bpsk,
    /// The target class (label 1).
    Qpsk,
}

impl Modulation {
    pub fn label(self) -> u8 {
        match self {
            Modulation::Bpsk => 0,
            Modulation::Qpsk => 1,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Modulation::Bpsk),
            1 => Some(Modulation::Qpsk),
            _ => None,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }

    pub fn symbols_per_sample(self) -> usize {
        SAMPLE_BITS / self.bits_per_symbol()
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
        }
    }
}

/// Maps 16 bits onto unit-average-power symbols.
///
/// BPSK: 0 -> +1, 1 -> -1. QPSK is Gray coded with the first bit of each
/// pair on the I axis and the second on Q (0 -> +, 1 -> -), amplitude
/// 1/sqrt(2) per axis.
pub fn generate_symbols(modulation: Modulation, bits: &Bits) -> Vec<IqSymbol> {
    let level = |b: bool| if b { -1.0 } else { 1.0 };
    match modulation {
        Modulation::Bpsk => bits.iter().map(|&b| IqSymbol::new(level(b), 0.0)).collect(),
        Modulation::Qpsk => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            bits.chunks_exact(2)
                .map(|pair| IqSymbol::new(a * level(pair[0]), a * level(pair[1])))
                .collect()
        }
    }
}

pub fn random_bits<R: Rng + ?Sized>(rng: &mut R) -> Bits {
    let mut bits = [false; SAMPLE_BITS];
    for b in &mut bits {
        *b = rng.random();
    }
    bits
}

/// Location-dependent channel description shared by all sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub transmitter_position: [f64; 2],
    pub path_loss_exponent: f64,
    /// SNR at `reference_distance`. `inf` disables noise.
    pub reference_snr_db: f64,
    pub reference_distance: f64,
    /// Per-sensor phase offsets are drawn uniformly from +/- this value.
    pub phase_offset_range: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            transmitter_position: [0.0, 0.0],
            path_loss_exponent: 2.0,
            reference_snr_db: 20.0,
            reference_distance: 100.0,
            phase_offset_range: PI / 4.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.path_loss_exponent > 0.0 && self.path_loss_exponent.is_finite()) {
            return bad("path_loss_exponent must be positive");
        }
        if !(self.reference_distance > 0.0 && self.reference_distance.is_finite()) {
            return bad("reference_distance must be positive");
        }
        if self.reference_snr_db.is_nan() {
            return bad("reference_snr_db is NaN");
        }
        if !(self.phase_offset_range >= 0.0 && self.phase_offset_range.is_finite()) {
            return bad("phase_offset_range must be non-negative");
        }
        if !self.transmitter_position.iter().all(|v| v.is_finite()) {
            return bad("transmitter_position must be finite");
        }
        Ok(())
    }

    pub fn distance_to(&self, position: [f64; 2]) -> f64 {
        let [tx, ty] = self.transmitter_position;
        (position[0] - tx).hypot(position[1] - ty)
    }

    /// Amplitude gain at distance `d`.
    pub fn gain_at(&self, d: f64) -> f64 {
        (self.reference_distance / d).powf(self.path_loss_exponent / 2.0)
    }

    /// Per-symbol SNR in dB at distance `d`.
    pub fn snr_db_at(&self, d: f64) -> f64 {
        self.reference_snr_db - 10.0 * self.path_loss_exponent * (d / self.reference_distance).log10()
    }

    /// Total complex noise variance. Constant, since symbols have unit power
    /// at the reference distance.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.reference_snr_db / 10.0)
    }
}

/// The channel as seen by one sensor, with its phase offset fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorChannel {
    pub gain: f64,
    pub phase_offset: f64,
    /// Standard deviation of each noise component.
    pub noise_std: f64,
}

impl SensorChannel {
    pub fn with_phase(channel: &ChannelParams, position: [f64; 2], phase_offset: f64) -> Result<Self> {
        channel.validate()?;
        let d = channel.distance_to(position);
        if d == 0.0 {
            return Err(Error::ZeroDistance);
        }
        Ok(Self {
            gain: channel.gain_at(d),
            phase_offset,
            noise_std: (channel.noise_variance() / 2.0).sqrt(),
        })
    }

    /// Draws the sensor's phase offset from `rng`.
    pub fn realize<R: Rng + ?Sized>(channel: &ChannelParams, position: [f64; 2], rng: &mut R) -> Result<Self> {
        let range = channel.phase_offset_range;
        let phase = if range > 0.0 {
            rng.random_range(-range..=range)
        } else {
            0.0
        };
        Self::with_phase(channel, position, phase)
    }

    pub fn apply<R: Rng + ?Sized>(&self, symbols: &[IqSymbol], rng: &mut R) -> Vec<IqSymbol> {
        symbols
            .iter()
            .map(|s| {
                let clean = s.scale(self.gain).rotate(self.phase_offset);
                if self.noise_std == 0.0 {
                    return clean;
                }
                let ni: f64 = rng.sample(StandardNormal);
                let nq: f64 = rng.sample(StandardNormal);
                IqSymbol::new(clean.i + self.noise_std * ni, clean.q + self.noise_std * nq)
            })
            .collect()
    }
}

/// One-shot channel application: draws a phase offset and applies it with
/// gain and noise. Use [`SensorChannel`] directly when many bursts must share
/// the same offset.
pub fn apply_channel<R: Rng + ?Sized>(
    symbols: &[IqSymbol],
    sensor_position: [f64; 2],
    channel: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<IqSymbol>> {
    let link = SensorChannel::realize(channel, sensor_position, rng)?;
    Ok(link.apply(symbols, rng))
}

fn push_shift_and_power(out: &mut Vec<f64>, prev: Option<IqSymbol>, cur: IqSymbol) {
    let shift = match prev {
        Some(p) => wrap_phase(cur.angle() - p.angle()),
        None => cur.angle(),
    };
    out.push(shift);
    out.push(cur.power());
}

/// Phase-shift / power-level features.
///
/// BPSK yields one (shift, power) pair per symbol. QPSK yields two pairs per
/// symbol: the symbol itself, then its in-phase projection treated as a BPSK
/// sub-stream (shift relative to the previous symbol's projection).
pub fn extract_features(symbols: &[IqSymbol], modulation: Modulation) -> Result<Features> {
    let expected = modulation.symbols_per_sample();
    if symbols.len() != expected {
        return Err(Error::SymbolCount {
            modulation: modulation.name(),
            expected,
            actual: symbols.len(),
        });
    }
    let mut out = Vec::with_capacity(FEATURE_LEN);
    let mut prev: Option<IqSymbol> = None;
    for &s in symbols {
        push_shift_and_power(&mut out, prev, s);
        if modulation == Modulation::Qpsk {
            push_shift_and_power(&mut out, prev.map(IqSymbol::in_phase), s.in_phase());
        }
        prev = Some(s);
    }
    let mut features = [0.0; FEATURE_LEN];
    features.copy_from_slice(&out);
    Ok(features)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSample {
    pub features: Features,
    pub label: Modulation,
}

/// Samples observed by one sensor. Exactly `round(n_samples * target_fraction)`
/// are QPSK; order is shuffled.
pub fn generate_sensor_dataset<R: Rng + ?Sized>(
    sensor_position: [f64; 2],
    channel: &ChannelParams,
    n_samples: usize,
    target_fraction: f64,
    rng: &mut R,
) -> Result<Vec<FeatureSample>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    if !(target_fraction > 0.0 && target_fraction < 1.0) {
        return Err(Error::InvalidParameter("target_fraction must lie in (0, 1)".into()));
    }
    let link = SensorChannel::realize(channel, sensor_position, rng)?;
    let n_target = (n_samples as f64 * target_fraction).round() as usize;
    let mut labels: Vec<Modulation> = (0..n_samples)
        .map(|k| {
            if k < n_target {
                Modulation::Qpsk
            } else {
                Modulation::Bpsk
            }
        })
        .collect();
    labels.shuffle(rng);
    labels
        .into_iter()
        .map(|label| {
            let bits = random_bits(rng);
            let rx = link.apply(&generate_symbols(label, &bits), rng);
            Ok(FeatureSample {
                features: extract_features(&rx, label)?,
                label,
            })
        })
        .collect()
}

/// Per-class split: the first `round(n_c * train_fraction)` samples of each
/// class go to training, the rest to test. Relative order is preserved.
pub fn split_stratified(samples: &[FeatureSample], train_fraction: f64) -> (Vec<FeatureSample>, Vec<FeatureSample>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [Modulation::Bpsk, Modulation::Qpsk] {
        let members: Vec<&FeatureSample> = samples.iter().filter(|s| s.label == class).collect();
        let n_train = (members.len() as f64 * train_fraction).round() as usize;
        for (k, s) in members.into_iter().enumerate() {
            if k < n_train {
                train.push(s.clone());
            } else {
                test.push(s.clone());
            }
        }
    }
    (train, test)
}

fn csv_header() -> Vec<String> {
    (0..FEATURE_LEN)
        .map(|k| format!("feat_{k:02}"))
        .chain(std::iter::once("label".to_string()))
        .collect()
}

pub fn write_dataset_csv<W: std::io::Write>(writer: W, samples: &[FeatureSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header())?;
    for s in samples {
        let mut row: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        row.push(s.label.label().to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_dataset_csv<R: std::io::Read>(reader: R) -> Result<Vec<FeatureSample>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != csv_header() {
        return Err(Error::InvalidParameter("unexpected dataset header".into()));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("bad feature value {s:?}: {e}")))
        };
        let mut features = [0.0; FEATURE_LEN];
        for (k, f) in features.iter_mut().enumerate() {
            *f = parse(&record[k])?;
        }
        let label = record[FEATURE_LEN]
            .parse::<u8>()
            .ok()
            .and_then(Modulation::from_label)
            .ok_or_else(|| Error::InvalidParameter(format!("bad label {:?}", &record[FEATURE_LEN])))?;
        out.push(FeatureSample { features, label });
    }
    Ok(out)
}

pub fn save_dataset(path: &Path, samples: &[FeatureSample]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_csv(std::io::BufWriter::new(file), samples)
}

pub fn load_dataset(path: &Path) -> Result<Vec<FeatureSample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn alternating() -> Bits {
        let mut bits = [false; SAMPLE_BITS];
        for (k, b) in bits.iter_mut().enumerate() {
            *b = k % 2 == 0;
        }
        bits
    }

    fn noiseless() -> ChannelParams {
        ChannelParams {
            reference_snr_db: f64::INFINITY,
            phase_offset_range: 0.0,
            ..ChannelParams::default()
        }
    }

    #[test]
    fn bpsk_all_zero_bits() {
        let s = generate_symbols(Modulation::Bpsk, &[false; SAMPLE_BITS]);
        assert_eq!(s, vec![IqSymbol::new(1.0, 0.0); 16]);
    }

    #[test]
    fn qpsk_all_zero_bits() {
        let s = generate_symbols(Modulation::Qpsk, &[false; SAMPLE_BITS]);
        assert_eq!(s, vec![IqSymbol::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2); 8]);
    }

    #[test]
    fn bpsk_alternating_bits() {
        let s = generate_symbols(Modulation::Bpsk, &alternating());
        for (k, sym) in s.iter().enumerate() {
            let expect = if k % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(*sym, IqSymbol::new(expect, 0.0));
        }
    }

    #[test]
    fn qpsk_gray_map_neighbours_differ_by_one_bit() {
        // Walk the constellation counter-clockwise: 00, 10, 11, 01.
        let order = [[false, false], [true, false], [true, true], [false, true]];
        let mut angles = Vec::new();
        for pair in order {
            let mut bits = [false; SAMPLE_BITS];
            bits[0] = pair[0];
            bits[1] = pair[1];
            angles.push(generate_symbols(Modulation::Qpsk, &bits)[0].angle());
        }
        for w in angles.windows(2) {
            assert!((wrap_phase(w[1] - w[0]) - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_average_power() {
        let mut rng = stream(1, Domain::Data, 0);
        for m in [Modulation::Bpsk, Modulation::Qpsk] {
            let s = generate_symbols(m, &random_bits(&mut rng));
            assert_eq!(s.len(), m.symbols_per_sample());
            let p: f64 = s.iter().map(|x| x.power()).sum::<f64>() / s.len() as f64;
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_channel() {
        let ch = noiseless();
        let pos = [ch.reference_distance, 0.0];
        let input = generate_symbols(Modulation::Qpsk, &alternating());
        let out = apply_channel(&input, pos, &ch, &mut stream(0, Domain::Data, 0)).unwrap();
        for (a, b) in input.iter().zip(&out) {
            assert!((a.i - b.i).abs() < 1e-15 && (a.q - b.q).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_rotation() {
        let ch = noiseless();
        let link = SensorChannel::with_phase(&ch, [100.0, 0.0], PI / 2.0).unwrap();
        let out = link.apply(&[IqSymbol::new(1.0, 0.0)], &mut stream(0, Domain::Data, 0));
        assert!(out[0].i.abs() < 1e-15);
        assert!((out[0].q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn colocated_sensor_is_rejected() {
        let ch = ChannelParams::default();
        let r = apply_channel(
            &[IqSymbol::new(1.0, 0.0)],
            ch.transmitter_position,
            &ch,
            &mut stream(0, Domain::Data, 0),
        );
        assert!(matches!(r, Err(Error::ZeroDistance)));
    }

    #[test]
    fn empirical_snr_at_twice_reference_distance() {
        let ch = ChannelParams {
            phase_offset_range: 0.0,
            ..ChannelParams::default()
        };
        let link = SensorChannel::with_phase(&ch, [200.0, 0.0], 0.0).unwrap();
        let mut rng = stream(42, Domain::Data, 0);
        let n = 100_000;
        let clean: Vec<IqSymbol> = (0..n)
            .map(|k| IqSymbol::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let rx = link.apply(&clean, &mut rng);
        let mut signal = 0.0;
        let mut noise = 0.0;
        for (c, r) in clean.iter().zip(&rx) {
            let s = c.scale(link.gain);
            signal += s.power();
            noise += IqSymbol::new(r.i - s.i, r.q - s.q).power();
        }
        let snr_db = 10.0 * (signal / noise).log10();
        let expected = ch.reference_snr_db - 20.0 * 2f64.log10();
        assert!((expected - (20.0 - 6.02)).abs() < 0.01);
        assert!((snr_db - expected).abs() < 0.5, "{snr_db} vs {expected}");
    }

    #[test]
    fn features_of_constant_bpsk() {
        let f = extract_features(&[IqSymbol::new(1.0, 0.0); 16], Modulation::Bpsk).unwrap();
        for pair in f.chunks(2) {
            assert_eq!(pair, &[0.0, 1.0]);
        }
    }

    #[test]
    fn bpsk_sign_flip_is_a_pi_shift() {
        let mut s = vec![IqSymbol::new(1.0, 0.0); 16];
        s[1] = IqSymbol::new(-1.0, 0.0);
        let f = extract_features(&s, Modulation::Bpsk).unwrap();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[2], PI);
        // Flipping back: -pi wraps to +pi.
        assert_eq!(f[4], PI);
    }

    #[test]
    fn qpsk_features_layout() {
        let a = FRAC_1_SQRT_2;
        let mut s = vec![IqSymbol::new(a, a); 8];
        s[1] = IqSymbol::new(-a, a);
        let f = extract_features(&s, Modulation::Qpsk).unwrap();
        assert_eq!(f.len(), 32);
        assert!((f[0] - PI / 4.0).abs() < 1e-12);
        assert!((f[1] - 1.0).abs() < 1e-12);
        assert_eq!(f[2], 0.0);
        assert!((f[3] - 0.5).abs() < 1e-12);
        // Symbol 1 rotated by +90 degrees, its I projection flipped sign.
        assert!((f[4] - PI / 2.0).abs() < 1e-12);
        assert_eq!(f[6], PI);
        assert!((f[7] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wrong_symbol_count() {
        let s = vec![IqSymbol::new(1.0, 0.0); 8];
        assert!(matches!(
            extract_features(&s, Modulation::Bpsk),
            Err(Error::SymbolCount {
                expected: 16,
                actual: 8,
                ..
            })
        ));
        assert!(extract_features(&s[..7], Modulation::Qpsk).is_err());
    }

    #[test]
    fn dataset_label_counts() {
        let ch = ChannelParams::default();
        let d = generate_sensor_dataset([400.0, 300.0], &ch, 100, 0.5, &mut stream(3, Domain::Data, 0)).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(d.iter().filter(|s| s.label == Modulation::Qpsk).count(), 50);
        let d = generate_sensor_dataset([400.0, 300.0], &ch, 7, 0.3, &mut stream(3, Domain::Data, 0)).unwrap();
        assert_eq!(d.iter().filter(|s| s.label == Modulation::Qpsk).count(), 2);
    }

    #[test]
    fn dataset_is_reproducible() {
        let ch = ChannelParams::default();
        let a = generate_sensor_dataset([700.0, 100.0], &ch, 64, 0.5, &mut stream(9, Domain::Data, 2)).unwrap();
        let b = generate_sensor_dataset([700.0, 100.0], &ch, 64, 0.5, &mut stream(9, Domain::Data, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dataset_argument_checks() {
        let ch = ChannelParams::default();
        let mut rng = stream(0, Domain::Data, 0);
        assert!(generate_sensor_dataset([1.0, 1.0], &ch, 0, 0.5, &mut rng).is_err());
        assert!(generate_sensor_dataset([1.0, 1.0], &ch, 10, 1.0, &mut rng).is_err());
        assert!(generate_sensor_dataset([1.0, 1.0], &ch, 10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn power_features_scale_with_gain_squared() {
        let ch = noiseless();
        let near = [300.0, 0.0];
        let far = [0.0, 900.0];
        let a = generate_sensor_dataset(near, &ch, 20, 0.5, &mut stream(5, Domain::Data, 0)).unwrap();
        let b = generate_sensor_dataset(far, &ch, 20, 0.5, &mut stream(5, Domain::Data, 0)).unwrap();
        let ga = ch.gain_at(300.0);
        let gb = ch.gain_at(900.0);
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.label, sb.label);
            for k in (1..FEATURE_LEN).step_by(2) {
                let ratio = sa.features[k] / sb.features[k];
                assert!((ratio - (ga * ga) / (gb * gb)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stratified_split_keeps_balance() {
        let ch = ChannelParams::default();
        let d = generate_sensor_dataset([500.0, 500.0], &ch, 1000, 0.5, &mut stream(1, Domain::Data, 0)).unwrap();
        let (train, test) = split_stratified(&d, 0.8);
        assert_eq!(train.len(), 800);
        assert_eq!(test.len(), 200);
        assert_eq!(test.iter().filter(|s| s.label == Modulation::Qpsk).count(), 100);
    }

    #[test]
    fn csv_round_trip() {
        let ch = ChannelParams::default();
        let d = generate_sensor_dataset([250.0, 650.0], &ch, 12, 0.5, &mut stream(1, Domain::Data, 0)).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("feat_00,feat_01,"));
        assert!(header.ends_with("feat_31,label"));
        assert_eq!(read_dataset_csv(&buf[..]).unwrap(), d);
    }
}
