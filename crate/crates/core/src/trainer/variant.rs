use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::Upsampler;

/// Ablation cases plus the full two-step model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    A,
    B,
    C,
    D,
    E,
    F,
    Full,
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "a" => Case::A,
            "b" => Case::B,
            "c" => Case::C,
            "d" => Case::D,
            "e" => Case::E,
            "f" => Case::F,
            "full" => Case::Full,
            other => return Err(Error::Config(format!("unknown case id {other:?}"))),
        })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
            Case::E => "e",
            Case::F => "f",
            Case::Full => "full",
        };
        f.write_str(s)
    }
}

/// Training recipe of one case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub case: Case,
    pub two_way: bool,
    pub identity: bool,
    pub pseudo_identity: bool,
    pub cycle: bool,
    pub upsampler: Upsampler,
    pub noise_emulator: bool,
    pub autoencoder_step: bool,
}

impl VariantSpec {
    pub fn for_case(case: Case) -> Self {
        let base = VariantSpec {
            case,
            two_way: true,
            identity: false,
            pseudo_identity: false,
            cycle: true,
            upsampler: Upsampler::Nearest,
            noise_emulator: false,
            autoencoder_step: false,
        };
        match case {
            Case::A => VariantSpec {
                two_way: false,
                identity: true,
                cycle: false,
                ..base
            },
            Case::B => base,
            Case::C => VariantSpec {
                pseudo_identity: true,
                ..base
            },
            Case::D => VariantSpec {
                identity: true,
                ..base
            },
            Case::E => VariantSpec {
                identity: true,
                upsampler: Upsampler::PixelShuffle,
                ..base
            },
            Case::F => VariantSpec {
                identity: true,
                noise_emulator: true,
                ..base
            },
            Case::Full => VariantSpec {
                identity: true,
                noise_emulator: true,
                autoencoder_step: true,
                ..base
            },
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        Ok(Self::for_case(id.parse()?))
    }

    /// The flags must be exactly those of the named case.
    pub fn validate(&self) -> Result<()> {
        if *self != Self::for_case(self.case) {
            return Err(Error::Config(format!(
                "flags {self:?} do not describe case {}",
                self.case
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_case_is_config_error() {
        assert!(matches!(VariantSpec::parse("z"), Err(Error::Config(_))));
    }

    #[test]
    fn case_b_and_e_flags() {
        let b = VariantSpec::parse("b").unwrap();
        assert!(b.two_way && b.cycle && !b.identity && !b.pseudo_identity);
        assert!(!b.noise_emulator && !b.autoencoder_step);
        assert_eq!(b.upsampler, Upsampler::Nearest);
        let d = VariantSpec::parse("d").unwrap();
        let e = VariantSpec::parse("e").unwrap();
        assert_eq!(
            VariantSpec {
                case: Case::D,
                upsampler: Upsampler::Nearest,
                ..e
            },
            d
        );
        assert_eq!(e.upsampler, Upsampler::PixelShuffle);
    }

    #[test]
    fn tampered_flags_rejected() {
        let mut f = VariantSpec::parse("f").unwrap();
        f.autoencoder_step = true;
        assert!(f.validate().is_err());
    }
}
