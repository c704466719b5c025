use crate::error::{invalid_config, Result};
use crate::realnet::{Padding, PoolSpec};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// How a time-domain signal is presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputEncoding {
    /// Complex half spectrum; the only encoding that uses the complex layer.
    ComplexHalfSpectrum,
    Amplitude,
    Phase,
    Time,
    /// Real and imaginary parts of the half spectrum as two channels.
    ReImTwoChannel,
    RealOnly,
    ImagOnly,
}

impl InputEncoding {
    pub const ALL: [InputEncoding; 7] = [
        InputEncoding::ComplexHalfSpectrum,
        InputEncoding::Amplitude,
        InputEncoding::Phase,
        InputEncoding::Time,
        InputEncoding::ReImTwoChannel,
        InputEncoding::RealOnly,
        InputEncoding::ImagOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InputEncoding::ComplexHalfSpectrum => "complex",
            InputEncoding::Amplitude => "amplitude",
            InputEncoding::Phase => "phase",
            InputEncoding::Time => "time",
            InputEncoding::ReImTwoChannel => "reim",
            InputEncoding::RealOnly => "re",
            InputEncoding::ImagOnly => "im",
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            InputEncoding::ReImTwoChannel => 2,
            _ => 1,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, InputEncoding::ComplexHalfSpectrum)
    }

    /// Sequence length presented to the network for an `n`-sample signal.
    pub fn sequence_len(&self, n: usize, pad_to: Option<usize>) -> usize {
        let natural = match self {
            InputEncoding::Time => n,
            _ => n / 2 + 1,
        };
        match (self, pad_to) {
            (InputEncoding::Time, _) | (_, None) => natural,
            (_, Some(p)) => p.max(natural),
        }
    }
}

impl fmt::Display for InputEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InputEncoding {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "complex" | "complex-half-spectrum" | "hybrid" => InputEncoding::ComplexHalfSpectrum,
            "amplitude" => InputEncoding::Amplitude,
            "phase" => InputEncoding::Phase,
            "time" => InputEncoding::Time,
            "reim" | "re+im" => InputEncoding::ReImTwoChannel,
            "re" | "real" => InputEncoding::RealOnly,
            "im" | "imag" => InputEncoding::ImagOnly,
            other => return Err(invalid_config!("unknown input encoding '{other}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexConvSpec {
    pub out_channels: usize,
    pub width: usize,
    pub stride: usize,
    pub padding: Padding,
    /// Rayleigh scale; `None` uses `1/sqrt(2 fan_in)`.
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub channels: usize,
    pub width: usize,
}

/// Layer hyperparameters plus the training schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub encoding: InputEncoding,
    /// Sequence length at the network input (bins, or samples for `Time`).
    pub input_len: usize,
    pub n_classes: usize,
    pub complex: ComplexConvSpec,
    pub conv1: ConvSpec,
    pub pool: PoolSpec,
    pub conv2: ConvSpec,
    /// Hidden dense widths; the class layer is appended.
    pub hidden: Vec<usize>,
    pub seed: u64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop once this many epochs pass without a new best validation accuracy.
    pub patience: Option<usize>,
    /// Zero-pad spectral encodings to this many bins.
    pub pad_to: Option<usize>,
}

impl ModelConfig {
    /// Hybrid defaults for `n`-sample signals.
    pub fn hybrid(n_samples: usize, n_classes: usize) -> Self {
        let encoding = InputEncoding::ComplexHalfSpectrum;
        Self {
            encoding,
            input_len: encoding.sequence_len(n_samples, None),
            n_classes,
            complex: ComplexConvSpec {
                out_channels: 8,
                width: 2,
                stride: 2,
                padding: Padding::Same,
                sigma: None,
            },
            conv1: ConvSpec { channels: 16, width: 5 },
            pool: PoolSpec { size: 3, stride: 3 },
            conv2: ConvSpec { channels: 32, width: 5 },
            hidden: vec![256, 32],
            seed: 0,
            lr: 1e-3,
            batch_size: 64,
            max_epochs: 100,
            patience: None,
            pad_to: None,
        }
    }

    /// Real-valued comparison network for any non-complex encoding.
    pub fn baseline(encoding: InputEncoding, n_samples: usize, n_classes: usize) -> Self {
        Self {
            encoding,
            input_len: encoding.sequence_len(n_samples, None),
            conv1: ConvSpec { channels: 32, width: 5 },
            conv2: ConvSpec { channels: 32, width: 5 },
            hidden: vec![128, 32],
            ..Self::hybrid(n_samples, n_classes)
        }
    }

    /// Hybrid for the complex encoding, baseline otherwise.
    pub fn for_encoding(encoding: InputEncoding, n_samples: usize, n_classes: usize) -> Self {
        if encoding.is_complex() {
            Self::hybrid(n_samples, n_classes)
        } else {
            Self::baseline(encoding, n_samples, n_classes)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(invalid_config!("need at least 2 classes, got {}", self.n_classes));
        }
        if self.input_len == 0 {
            return Err(invalid_config!("input_len must be positive"));
        }
        let widths = [
            self.complex.width,
            self.complex.out_channels,
            self.complex.stride,
            self.conv1.width,
            self.conv1.channels,
            self.conv2.width,
            self.conv2.channels,
            self.pool.size,
            self.pool.stride,
        ];
        if widths.contains(&0) {
            return Err(invalid_config!("layer widths, channels and strides must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(invalid_config!("hidden dense widths must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid_config!("batch_size must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid_config!("learning rate must be positive"));
        }
        if let Some(s) = self.complex.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid_config!("complex.sigma must be positive"));
            }
        }
        Ok(())
    }

    /// Flat `key = value` form, stable key order.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |x| x.to_string());
        let mut kv = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            kv.insert(k.to_string(), v);
        };
        put("encoding", self.encoding.name().into());
        put("input_len", self.input_len.to_string());
        put("n_classes", self.n_classes.to_string());
        put("complex.channels", self.complex.out_channels.to_string());
        put("complex.width", self.complex.width.to_string());
        put("complex.stride", self.complex.stride.to_string());
        put("complex.padding", self.complex.padding.label());
        put("complex.sigma", self.complex.sigma.map_or("auto".into(), |s| format!("{s}")));
        put("conv1.channels", self.conv1.channels.to_string());
        put("conv1.width", self.conv1.width.to_string());
        put("pool.size", self.pool.size.to_string());
        put("pool.stride", self.pool.stride.to_string());
        put("conv2.channels", self.conv2.channels.to_string());
        put("conv2.width", self.conv2.width.to_string());
        put(
            "fc",
            self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","),
        );
        put("seed", self.seed.to_string());
        put("lr", format!("{}", self.lr));
        put("batch_size", self.batch_size.to_string());
        put("max_epochs", self.max_epochs.to_string());
        put("patience", opt(self.patience));
        put("pad_to", opt(self.pad_to));
        kv
    }

    /// Applies recognised keys; returns the keys it did not recognise.
    pub fn apply_kv<'a>(&mut self, kv: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Vec<String>> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| invalid_config!("'{v}' is not a valid value for {key}"))
        }
        fn opt_num(key: &str, v: &str) -> Result<Option<usize>> {
            if v == "none" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        let mut unknown = Vec::new();
        let mut pad_changed = false;
        let mut len_set = false;
        for (key, value) in kv {
            let v = value.trim();
            match key.trim() {
                "encoding" => self.encoding = v.parse()?,
                "input_len" => {
                    self.input_len = num(key, v)?;
                    len_set = true;
                }
                "n_classes" => self.n_classes = num(key, v)?,
                "complex.channels" => self.complex.out_channels = num(key, v)?,
                "complex.width" => self.complex.width = num(key, v)?,
                "complex.stride" => self.complex.stride = num(key, v)?,
                "complex.padding" => {
                    self.complex.padding =
                        Padding::parse(v).ok_or_else(|| invalid_config!("bad padding '{v}'"))?
                }
                "complex.sigma" => {
                    self.complex.sigma = if v == "auto" { None } else { Some(num(key, v)?) }
                }
                "conv1.channels" => self.conv1.channels = num(key, v)?,
                "conv1.width" => self.conv1.width = num(key, v)?,
                "pool.size" => self.pool.size = num(key, v)?,
                "pool.stride" => self.pool.stride = num(key, v)?,
                "conv2.channels" => self.conv2.channels = num(key, v)?,
                "conv2.width" => self.conv2.width = num(key, v)?,
                "fc" => {
                    self.hidden = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(|p| num("fc", p.trim())).collect::<Result<_>>()?
                    }
                }
                "seed" => self.seed = num(key, v)?,
                "lr" => self.lr = num(key, v)?,
                "batch_size" => self.batch_size = num(key, v)?,
                "max_epochs" => self.max_epochs = num(key, v)?,
                "patience" => self.patience = opt_num(key, v)?,
                "pad_to" => {
                    self.pad_to = opt_num(key, v)?;
                    pad_changed = true;
                }
                other => unknown.push(other.to_string()),
            }
        }
        if pad_changed && !len_set {
            if let Some(p) = self.pad_to {
                if !matches!(self.encoding, InputEncoding::Time) {
                    self.input_len = self.input_len.max(p);
                }
            }
        }
        Ok(unknown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut cfg = ModelConfig::hybrid(178, 3);
        cfg.patience = Some(7);
        cfg.complex.sigma = Some(0.25);
        let kv = cfg.to_kv();
        let mut back = ModelConfig::baseline(InputEncoding::Time, 10, 2);
        let unknown = back.apply_kv(kv.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert!(unknown.is_empty());
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut cfg = ModelConfig::hybrid(178, 1);
        assert!(cfg.validate().is_err());
        cfg.n_classes = 2;
        assert!(cfg.validate().is_ok());
        cfg.conv1.width = 0;
        assert!(cfg.validate().is_err());
        assert!("bogus".parse::<InputEncoding>().is_err());
    }

    #[test]
    fn sequence_lengths() {
        assert_eq!(InputEncoding::ComplexHalfSpectrum.sequence_len(178, None), 90);
        assert_eq!(InputEncoding::Time.sequence_len(178, Some(128)), 178);
        assert_eq!(InputEncoding::Amplitude.sequence_len(178, Some(128)), 128);
    }
}
